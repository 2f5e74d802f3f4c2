//! Fixing on graphs and kernels, reachable and intrinsic sets, and the
//! nested Markov factorization check.

use std::collections::{BTreeMap, BTreeSet, HashMap, VecDeque};

use num_rational::BigRational;
use num_traits::{Signed, Zero};

use crate::error::{Error, Result};
use crate::graph::{Admg, Cadmg};
use crate::kernel::{decode, encode, DiscreteKernel, Variable};
use crate::vertex::VertexSet;

/// Largest graph accepted by the exponential enumerations.
pub const MAX_ENUMERATION_VERTICES: usize = 16;

fn check_random(g: &Cadmg, r: usize) -> Result<()> {
    if r >= g.graph().n() {
        return Err(Error::UnknownVertex(format!("#{r}")));
    }
    if g.is_fixed(r) {
        return Err(Error::NotRandom(g.graph().label(r).to_string()));
    }
    Ok(())
}

/// `r` is fixable when no other vertex is both its descendant and in its district.
pub fn is_fixable(g: &Cadmg, r: usize) -> Result<bool> {
    check_random(g, r)?;
    let dis = g.district(r);
    let de = g.graph().descendants(&VertexSet::singleton(r));
    Ok(dis.intersection(&de).len() == 1)
}

pub fn fix_vertex(g: &Cadmg, r: usize) -> Result<Cadmg> {
    if !is_fixable(g, r)? {
        return Err(Error::NotFixable(g.graph().label(r).to_string()));
    }
    let h = g.graph();
    let directed: Vec<_> = h.directed_edges().into_iter().filter(|&(_, b)| b != r).collect();
    let bidirected: Vec<_> = h
        .bidirected_edges()
        .into_iter()
        .filter(|&(a, b)| a != r && b != r)
        .collect();
    let graph = Admg::new(h.labels().to_vec(), &directed, &bidirected)?;
    let mut fixed = g.fixed();
    fixed.insert(r);
    Cadmg::new(graph, &fixed)
}

/// Fixes the vertices of `seq` in the given order.
pub fn fix_sequence(g: &Cadmg, seq: &[usize]) -> Result<Cadmg> {
    seq.iter().try_fold(g.clone(), |acc, &r| fix_vertex(&acc, r))
}

/// Fixes a set using any valid order; fixability survives fixing other
/// vertices, so the greedy order succeeds whenever some order does.
pub fn fix_graph(g: &Cadmg, set: &VertexSet) -> Result<Cadmg> {
    Ok(fix_set_ordered(g, set)?.0)
}

fn fix_set_ordered(g: &Cadmg, set: &VertexSet) -> Result<(Cadmg, Vec<usize>)> {
    for r in set {
        check_random(g, r)?;
    }
    let mut cur = g.clone();
    let mut left = set.clone();
    let mut order = Vec::with_capacity(set.len());
    while !left.is_empty() {
        let mut next = None;
        for r in &left {
            if is_fixable(&cur, r)? {
                next = Some(r);
                break;
            }
        }
        let r = next.ok_or_else(|| Error::NoFixingSequence(cur.graph().names(&left).join(" ")))?;
        cur = fix_vertex(&cur, r)?;
        left.remove(r);
        order.push(r);
    }
    Ok((cur, order))
}

fn guard(n: usize) -> Result<()> {
    if n > MAX_ENUMERATION_VERTICES {
        return Err(Error::SizeGuard(format!(
            "{n} vertices exceeds the enumeration limit of {MAX_ENUMERATION_VERTICES}"
        )));
    }
    Ok(())
}

/// Every non-empty reachable set, smallest first then in declaration order.
pub fn reachable_sets(g: &Admg) -> Result<Vec<VertexSet>> {
    guard(g.n())?;
    let mut seen: BTreeMap<VertexSet, Cadmg> = BTreeMap::new();
    let start = Cadmg::from_admg(g.clone());
    let mut queue = VecDeque::from([(g.all(), start)]);
    while let Some((set, cadmg)) = queue.pop_front() {
        if seen.contains_key(&set) {
            continue;
        }
        if set.len() > 1 {
            for r in &set {
                if is_fixable(&cadmg, r)? {
                    let mut child = set.clone();
                    child.remove(r);
                    if !seen.contains_key(&child) {
                        queue.push_back((child, fix_vertex(&cadmg, r)?));
                    }
                }
            }
        }
        seen.insert(set, cadmg);
    }
    Ok(sort_sets(seen.into_keys()))
}

fn sort_sets(sets: impl IntoIterator<Item = VertexSet>) -> Vec<VertexSet> {
    let mut out: Vec<VertexSet> = sets.into_iter().collect();
    out.sort_by(|a, b| a.len().cmp(&b.len()).then_with(|| a.cmp(b)));
    out
}

/// Reachable sets forming a single district.
pub fn intrinsic_sets(g: &Admg) -> Result<Vec<VertexSet>> {
    Ok(reachable_sets(g)?
        .into_iter()
        .filter(|s| g.bidirected_connected(s).unwrap_or(false))
        .collect())
}

/// Fixes everything fixable outside `set` until nothing changes; returns the surviving random set.
pub fn reachable_closure(g: &Cadmg, set: &VertexSet) -> Result<VertexSet> {
    if set.is_empty() {
        return Err(Error::EmptySet);
    }
    for v in set {
        check_random(g, v)?;
    }
    let mut cur = g.clone();
    'outer: loop {
        for r in cur.random().difference(set).iter() {
            if is_fixable(&cur, r)? {
                cur = fix_vertex(&cur, r)?;
                continue 'outer;
            }
        }
        return Ok(cur.random());
    }
}

fn check_kernel_matches(q: &DiscreteKernel, g: &Cadmg) -> Result<()> {
    let h = g.graph();
    let names = |s: &VertexSet| -> BTreeSet<String> { s.iter().map(|v| h.label(v).to_string()).collect() };
    let kr: BTreeSet<String> = q.random_vars().iter().map(|v| v.name.clone()).collect();
    let kf: BTreeSet<String> = q.fixed_vars().iter().map(|v| v.name.clone()).collect();
    if kr != names(&g.random()) || kf != names(&g.fixed()) {
        return Err(Error::Dimension(
            "kernel variables do not match the graph's random and fixed vertices".into(),
        ));
    }
    Ok(())
}

/// Divides out q(x_r | x_mb(r), x_W) and moves `r` into the context.
///
/// Fixed variables of the result are ordered by declaration in `g`.
pub fn kernel_fix(q: &DiscreteKernel, g: &Cadmg, r: usize) -> Result<DiscreteKernel> {
    if !is_fixable(g, r)? {
        return Err(Error::NotFixable(g.graph().label(r).to_string()));
    }
    check_kernel_matches(q, g)?;
    let h = g.graph();
    let r_name = h.label(r).as_str();
    let rp = q.random_position(r_name).expect("checked above");
    let blanket = g.markov_blanket(r)?;
    let mut m_pos: Vec<usize> = blanket
        .iter()
        .filter(|&u| !g.is_fixed(u))
        .map(|u| q.random_position(h.label(u).as_str()).expect("checked above"))
        .collect();
    m_pos.sort_unstable();
    let m_marg = q.marginal(&m_pos)?;
    let mut rm_pos = m_pos.clone();
    rm_pos.push(rp);
    rm_pos.sort_unstable();
    let rm_marg = q.marginal(&rm_pos)?;

    let rcards = q.random_cards();
    let fcards = q.fixed_cards();
    let new_random: Vec<Variable> = q
        .random_vars()
        .iter()
        .enumerate()
        .filter(|&(i, _)| i != rp)
        .map(|(_, v)| v.clone())
        .collect();
    let mut new_fixed: Vec<Variable> = q.fixed_vars().to_vec();
    new_fixed.push(q.random_vars()[rp].clone());
    let rank = |v: &Variable| h.vertex(&v.name).expect("checked above");
    new_fixed.sort_by_key(rank);
    // source of each new context slot: an old context position, or r itself
    let fixed_src: Vec<Option<usize>> = new_fixed.iter().map(|v| q.fixed_position(&v.name)).collect();
    let nr_cards: Vec<usize> = new_random.iter().map(|v| v.card).collect();
    let nf_cards: Vec<usize> = new_fixed.iter().map(|v| v.card).collect();
    let width: usize = nr_cards.iter().product();
    let height: usize = nf_cards.iter().product();
    let m_cards: Vec<usize> = m_pos.iter().map(|&p| rcards[p]).collect();
    let rm_cards: Vec<usize> = rm_pos.iter().map(|&p| rcards[p]).collect();

    let mut rows = vec![vec![BigRational::zero(); width]; height];
    let mut xs = vec![0; rcards.len()];
    let mut ws = vec![0; fcards.len()];
    let mut nxs = vec![0; nr_cards.len()];
    let mut nws = vec![0; nf_cards.len()];
    let mut ms = vec![0; m_pos.len()];
    let mut rms = vec![0; rm_pos.len()];
    for (c, row) in q.rows().iter().enumerate() {
        decode(&fcards, c, &mut ws);
        for (i, num) in row.iter().enumerate() {
            if num.is_zero() {
                continue;
            }
            decode(&rcards, i, &mut xs);
            for (s, &p) in ms.iter_mut().zip(&m_pos) {
                *s = xs[p];
            }
            for (s, &p) in rms.iter_mut().zip(&rm_pos) {
                *s = xs[p];
            }
            let joint = &rm_marg.rows()[c][encode(&rm_cards, &rms)];
            if joint.is_zero() {
                return Err(Error::ZeroDivision(r_name.to_string()));
            }
            let cond = joint / &m_marg.rows()[c][encode(&m_cards, &ms)];
            let mut k = 0;
            for (p, &x) in xs.iter().enumerate() {
                if p != rp {
                    nxs[k] = x;
                    k += 1;
                }
            }
            for (s, src) in nws.iter_mut().zip(&fixed_src) {
                *s = match src {
                    Some(p) => ws[*p],
                    None => xs[rp],
                };
            }
            rows[encode(&nf_cards, &nws)][encode(&nr_cards, &nxs)] = num / cond;
        }
    }
    DiscreteKernel::unchecked(new_random, new_fixed, rows)
}

/// Fixes `set` on both the graph and the kernel, in the greedy valid order.
pub fn kernel_fix_set(q: &DiscreteKernel, g: &Cadmg, set: &VertexSet) -> Result<(DiscreteKernel, Cadmg)> {
    let (_, order) = fix_set_ordered(g, set)?;
    kernel_fix_sequence(q, g, &order)
}

pub fn kernel_fix_sequence(q: &DiscreteKernel, g: &Cadmg, seq: &[usize]) -> Result<(DiscreteKernel, Cadmg)> {
    let mut k = q.clone();
    let mut cur = g.clone();
    for &r in seq {
        k = kernel_fix(&k, &cur, r)?;
        cur = fix_vertex(&cur, r)?;
    }
    Ok((k, cur))
}

/// How kernel entries are compared.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Comparison {
    Exact,
    /// Maximum absolute deviation allowed.
    Tolerance(BigRational),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Violation {
    pub reachable: VertexSet,
    /// Districts whose kernel product disagrees with the reachable kernel, or
    /// the reachable set alone when its kernel depends on a non-parent.
    pub districts: Vec<VertexSet>,
    pub deviation: BigRational,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NestedReport {
    pub reachable_sets_checked: usize,
    /// Sorted by reachable set, then districts.
    pub violations: Vec<Violation>,
}

impl NestedReport {
    pub fn passes(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Permutes a joint distribution so its variables follow the graph's declaration order.
fn align_joint(p: &DiscreteKernel, g: &Admg) -> Result<DiscreteKernel> {
    if !p.fixed_vars().is_empty() {
        return Err(Error::Dimension("expected a joint distribution without context".into()));
    }
    check_kernel_matches(p, &Cadmg::from_admg(g.clone()))?;
    let src: Vec<usize> = (0..g.n())
        .map(|v| p.random_position(g.label(v).as_str()).expect("checked above"))
        .collect();
    if src.iter().enumerate().all(|(i, &s)| i == s) {
        return Ok(p.clone());
    }
    let vars: Vec<Variable> = src.iter().map(|&s| p.random_vars()[s].clone()).collect();
    let old_cards = p.random_cards();
    let new_cards: Vec<usize> = vars.iter().map(|v| v.card).collect();
    let mut probs = vec![BigRational::zero(); p.rows()[0].len()];
    let mut old = vec![0; old_cards.len()];
    let mut new = vec![0; new_cards.len()];
    for (i, q) in p.rows()[0].iter().enumerate() {
        decode(&old_cards, i, &mut old);
        for (slot, &s) in new.iter_mut().zip(&src) {
            *slot = old[s];
        }
        probs[encode(&new_cards, &new)] = q.clone();
    }
    DiscreteKernel::joint(vars, probs)
}

/// Checks that every reachable kernel factorizes over the districts of its graph.
///
/// Only assignments with positive probability under `p` are compared.
pub fn check_nested_markov(p: &DiscreteKernel, g: &Admg, comparison: &Comparison) -> Result<NestedReport> {
    guard(g.n())?;
    let p = align_joint(p, g)?;
    let n = g.n();
    let cards = p.random_cards();

    // reachable sets with their graphs and kernels, discovered breadth-first
    let mut found: BTreeMap<VertexSet, (Cadmg, DiscreteKernel)> = BTreeMap::new();
    let mut queue = VecDeque::from([(g.all(), Cadmg::from_admg(g.clone()), p.clone())]);
    while let Some((set, cadmg, k)) = queue.pop_front() {
        if found.contains_key(&set) {
            continue;
        }
        if set.len() > 1 {
            for r in &set {
                let mut child = set.clone();
                child.remove(r);
                if !found.contains_key(&child) && is_fixable(&cadmg, r)? {
                    let ck = kernel_fix(&k, &cadmg, r)?;
                    queue.push_back((child, fix_vertex(&cadmg, r)?, ck));
                }
            }
        }
        found.insert(set, (cadmg, k));
    }

    let mut violations = Vec::new();
    let mut full = vec![0; n];
    for (set, (cadmg, kernel)) in &found {
        let spread = context_spread(&p, g, set, kernel)?;
        let violated = match comparison {
            Comparison::Exact => !spread.is_zero(),
            Comparison::Tolerance(t) => &spread > t,
        };
        if violated {
            violations.push(Violation {
                reachable: set.clone(),
                districts: vec![set.clone()],
                deviation: spread,
            });
        }
        let districts = cadmg.districts();
        if districts.len() < 2 {
            continue;
        }
        let factors: Vec<&DiscreteKernel> = districts
            .iter()
            .map(|d| {
                found.get(d).map(|(_, k)| k).ok_or_else(|| {
                    Error::Precondition(format!("district {:?} is not reachable", g.names(d)))
                })
            })
            .collect::<Result<_>>()?;
        let mut worst = BigRational::zero();
        for (i, mass) in p.rows()[0].iter().enumerate() {
            if mass.is_zero() {
                continue;
            }
            decode(&cards, i, &mut full);
            let lhs = eval(kernel, &full, set);
            let rhs: BigRational = districts
                .iter()
                .zip(&factors)
                .map(|(d, k)| eval(k, &full, d))
                .product();
            let dev = (lhs - rhs).abs();
            if dev > worst {
                worst = dev;
            }
        }
        let violated = match comparison {
            Comparison::Exact => !worst.is_zero(),
            Comparison::Tolerance(t) => &worst > t,
        };
        if violated {
            violations.push(Violation {
                reachable: set.clone(),
                districts,
                deviation: worst,
            });
        }
    }
    violations.sort_by(|a, b| {
        (a.reachable.len(), &a.reachable, &a.districts).cmp(&(b.reachable.len(), &b.reachable, &b.districts))
    });
    Ok(NestedReport {
        reachable_sets_checked: found.len(),
        violations,
    })
}

/// Largest change in a reachable kernel when only non-parents of the
/// reachable set vary in its context. Entries are compared only where both
/// full assignments have positive probability under `p`.
fn context_spread(p: &DiscreteKernel, g: &Admg, set: &VertexSet, kernel: &DiscreteKernel) -> Result<BigRational> {
    let n = g.n();
    let context: Vec<usize> = (0..n).filter(|&v| !set.contains(v)).collect();
    if context.is_empty() {
        return Ok(BigRational::zero());
    }
    let parents = g.parents_of(set);
    let all_cards = p.random_cards();
    let (rc, fc) = (kernel.random_cards(), kernel.fixed_cards());
    let mut full = vec![0; n];
    let mut rs = vec![0; rc.len()];
    let mut cs = vec![0; fc.len()];
    // first positive context seen for each parent assignment, per random entry
    let mut reference: HashMap<(Vec<usize>, usize), usize> = HashMap::new();
    let mut worst = BigRational::zero();
    for (i, mass) in p.rows()[0].iter().enumerate() {
        if mass.is_zero() {
            continue;
        }
        decode(&all_cards, i, &mut full);
        for (slot, v) in rs.iter_mut().zip(set.iter()) {
            *slot = full[v];
        }
        for (slot, &v) in cs.iter_mut().zip(&context) {
            *slot = full[v];
        }
        let key: Vec<usize> = context
            .iter()
            .map(|&v| if parents.contains(v) { full[v] } else { usize::MAX })
            .collect();
        let (c, r) = (encode(&fc, &cs), encode(&rc, &rs));
        let first = *reference.entry((key, r)).or_insert(c);
        let d = (&kernel.rows()[first][r] - &kernel.rows()[c][r]).abs();
        if d > worst {
            worst = d;
        }
    }
    Ok(worst)
}

/// Evaluates a kernel whose random part is `random` (declaration order) and whose
/// context is everything else, at the full assignment `x`.
fn eval(k: &DiscreteKernel, x: &[usize], random: &VertexSet) -> BigRational {
    let rs: Vec<usize> = random.iter().map(|v| x[v]).collect();
    let ws: Vec<usize> = (0..x.len()).filter(|&v| !random.contains(v)).map(|v| x[v]).collect();
    k.rows()[encode(&k.fixed_cards(), &ws)][encode(&k.random_cards(), &rs)].clone()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;
    use crate::format::parse_admg;
    use crate::kernel::{joint_from_cpts, random_cpts};
    use crate::projection::canonical_dag;
    use num_bigint::BigInt;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn set(g: &Admg, names: &[&str]) -> VertexSet {
        g.vertex_set(names).unwrap()
    }

    fn r(n: i64, d: i64) -> BigRational {
        BigRational::new(BigInt::from(n), BigInt::from(d))
    }

    /// Joint over the observed vertices of `g`, Markov to its canonical DAG.
    fn latent_joint(g: &Admg, card: usize, seed: u64) -> DiscreteKernel {
        let c = canonical_dag(g).unwrap();
        let cards = vec![card; c.dag.n()];
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let cpts = random_cpts(&c.dag, &cards, &mut rng);
        let joint = joint_from_cpts(&c.dag, &cards, &cpts).unwrap();
        joint.marginal(&(0..g.n()).collect::<Vec<_>>()).unwrap()
    }

    #[test]
    fn fixability_examples() {
        let verma = Cadmg::from_admg(fixtures::verma());
        let fixable: Vec<bool> = (0..4).map(|v| is_fixable(&verma, v).unwrap()).collect();
        assert_eq!(fixable, vec![true, false, true, true]);
        let dag = Cadmg::from_admg(parse_admg("vertices: x y z\nx -> y\ny -> z\n").unwrap());
        assert!((0..3).all(|v| is_fixable(&dag, v).unwrap()));
        let iv = Cadmg::from_admg(fixtures::iv());
        assert!(is_fixable(&iv, 2).unwrap());
        assert!(!is_fixable(&iv, 1).unwrap());
        let fixed = fix_vertex(&iv, 0).unwrap();
        assert!(matches!(is_fixable(&fixed, 0), Err(Error::NotRandom(_))));
    }

    #[test]
    fn fix_graph_examples() {
        let verma = Cadmg::from_admg(fixtures::verma());
        let g = verma.graph();
        let out = fix_graph(&verma, &set(g, &["a", "c"])).unwrap();
        assert_eq!(out, fixtures::verma_fixed_ac());
        assert_eq!(fix_graph(&verma, &VertexSet::new()).unwrap(), verma);
        let iv = Cadmg::from_admg(fixtures::iv());
        let out = fix_graph(&iv, &VertexSet::singleton(0)).unwrap();
        assert!(out.is_fixed(0) && out.graph().has_directed(0, 1));
        assert!(matches!(
            fix_graph(&iv, &VertexSet::singleton(1)),
            Err(Error::NoFixingSequence(_))
        ));
        // as drawn, with a <-> b instead of a -> b
        let drawn = Cadmg::from_admg(
            parse_admg("vertices: a b c d\nb -> c\nc -> d\na <-> b\nb <-> d\n").unwrap(),
        );
        let out = fix_graph(&drawn, &set(drawn.graph(), &["a", "c"])).unwrap();
        let h = out.graph();
        assert_eq!(h.directed_edges(), vec![(2, 3)]);
        assert_eq!(h.bidirected_edges(), vec![(1, 3)]);
    }

    #[test]
    fn reachable_and_intrinsic() {
        let iv = fixtures::iv();
        let names = |sets: Vec<VertexSet>| -> Vec<Vec<String>> { sets.iter().map(|s| iv.names(s)).collect() };
        assert_eq!(
            names(intrinsic_sets(&iv).unwrap()),
            vec![vec!["a"], vec!["b"], vec!["b", "c"]]
        );
        // {c} alone would need b fixed while c is still random
        assert!(!intrinsic_sets(&iv).unwrap().contains(&set(&iv, &["c"])));
        let reach = reachable_sets(&iv).unwrap();
        assert!(reach.contains(&iv.all()));
        assert!(!reach.contains(&set(&iv, &["a", "c"])));
        let single = parse_admg("vertices: x").unwrap();
        assert_eq!(intrinsic_sets(&single).unwrap(), vec![VertexSet::singleton(0)]);
        let verma = fixtures::verma();
        assert!(intrinsic_sets(&verma).unwrap().contains(&set(&verma, &["b", "d"])));
        let big = parse_admg(&format!(
            "vertices: {}",
            (0..17).map(|i| format!("v{i}")).collect::<Vec<_>>().join(" ")
        ))
        .unwrap();
        assert!(matches!(reachable_sets(&big), Err(Error::SizeGuard(_))));
    }

    #[test]
    fn reachable_closure_examples() {
        let verma = Cadmg::from_admg(fixtures::verma());
        let g = verma.graph();
        // d is fixable (its only district-mate b is not its descendant)
        assert_eq!(reachable_closure(&verma, &set(g, &["b"])).unwrap(), set(g, &["b"]));
        // fixing c cuts b -> c, after which b is fixable too
        assert_eq!(reachable_closure(&verma, &set(g, &["d"])).unwrap(), set(g, &["d"]));
        let iv = Cadmg::from_admg(fixtures::iv());
        let g = iv.graph();
        assert_eq!(reachable_closure(&iv, &set(g, &["c"])).unwrap(), set(g, &["b", "c"]));
        let dag = Cadmg::from_admg(parse_admg("vertices: x y z\nx -> y\ny -> z\n").unwrap());
        assert_eq!(reachable_closure(&dag, &VertexSet::singleton(1)).unwrap(), VertexSet::singleton(1));
    }

    #[test]
    fn kernel_fix_independent_pair() {
        let g = Cadmg::from_admg(parse_admg("vertices: x y").unwrap());
        let q = DiscreteKernel::uniform(vec![Variable::new("x", 2), Variable::new("y", 2)]).unwrap();
        let k = kernel_fix(&q, &g, 0).unwrap();
        assert_eq!(k.random_vars(), &[Variable::new("y", 2)]);
        assert_eq!(k.rows(), &[vec![r(1, 2), r(1, 2)], vec![r(1, 2), r(1, 2)]]);
    }

    #[test]
    fn kernel_fix_on_dag_divides_by_own_conditional() {
        let dag = parse_admg("vertices: x y z\nx -> y\ny -> z\nx -> z\n").unwrap();
        let cards = [2, 3, 2];
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let cpts = random_cpts(&dag, &cards, &mut rng);
        let p = joint_from_cpts(&dag, &cards, &cpts).unwrap();
        let g = Cadmg::from_admg(dag.clone());
        let k = kernel_fix(&p, &g, 1).unwrap();
        // remaining kernel is p(x) p(z | x, y) with y in the context
        for y in 0..3 {
            for x in 0..2 {
                for z in 0..2 {
                    let expected = &cpts[0][x] * &cpts[2][(x * 3 + y) * 2 + z];
                    assert_eq!(k.prob(&[x, z], &[y]).unwrap(), &expected);
                }
            }
        }
        assert!(k.is_normalized());
    }

    #[test]
    fn fixing_orders_agree_on_verma() {
        let verma = fixtures::verma();
        let p = latent_joint(&verma, 2, 11);
        let g = Cadmg::from_admg(verma.clone());
        let (k1, g1) = kernel_fix_sequence(&p, &g, &[0, 2]).unwrap();
        let (k2, g2) = kernel_fix_sequence(&p, &g, &[2, 0]).unwrap();
        assert_eq!(k1, k2);
        assert_eq!(g1, g2);
        assert!(k1.is_normalized());
    }

    #[test]
    fn nested_check_examples() {
        let iv = fixtures::iv();
        let p = latent_joint(&iv, 2, 5);
        let report = check_nested_markov(&p, &iv, &Comparison::Exact).unwrap();
        assert!(report.passes());
        assert_eq!(report.reachable_sets_checked, reachable_sets(&iv).unwrap().len());

        // X_a = X_c, X_b independent: uniform over 4 atoms
        let vars = vec![Variable::new("a", 2), Variable::new("b", 2), Variable::new("c", 2)];
        let mut probs = vec![r(0, 1); 8];
        for a in 0..2 {
            for b in 0..2 {
                probs[a * 4 + b * 2 + a] = r(1, 4);
            }
        }
        let law = DiscreteKernel::joint(vars, probs).unwrap();
        assert!(check_nested_markov(&law, &iv, &Comparison::Exact).unwrap().passes());
        let empty = parse_admg("vertices: a b c").unwrap();
        let report = check_nested_markov(&law, &empty, &Comparison::Exact).unwrap();
        assert!(!report.passes());
        assert_eq!(report.violations[0].reachable, set(&empty, &["a", "c"]));
        assert!(report.violations.iter().any(|v| v.reachable == empty.all()));
        let loose = Comparison::Tolerance(r(1, 1));
        assert!(check_nested_markov(&law, &empty, &loose).unwrap().passes());
    }
}
