//! Latent projection, canonical DAGs, closures and the maximal arid projection.

use std::collections::BTreeSet;

use crate::error::{Error, Result};
use crate::format::reserved_in;
use crate::graph::{Admg, Cadmg};
use crate::vertex::{Label, VertexSet};

/// Projects out `latent`, keeping the remaining vertices in declaration order.
///
/// `a -> b` survives when a directed path from `a` to `b` has all interior
/// vertices latent; `a <-> b` when a collider-free path with arrowheads at
/// both ends does.
pub fn latent_project(g: &Admg, latent: &VertexSet) -> Result<Admg> {
    if let Some(v) = latent.iter().find(|&v| v >= g.n()) {
        return Err(Error::UnknownVertex(format!("#{v}")));
    }
    if latent.is_empty() {
        return Ok(g.clone());
    }
    let n = g.n();
    let is_latent = latent.to_mask(n);
    let kept: Vec<usize> = (0..n).filter(|&v| !is_latent[v]).collect();
    let mut new_index = vec![usize::MAX; n];
    for (i, &v) in kept.iter().enumerate() {
        new_index[v] = i;
    }

    let mut directed = BTreeSet::new();
    let mut bidirected = BTreeSet::new();
    // per-source scratch, reset through the touched lists
    let mut down_seen = vec![false; n];
    let mut up_seen = vec![false; n];
    let mut touched = Vec::new();

    for &a in &kept {
        // directed: descend through latent children
        let mut stack: Vec<usize> = g.children(a).to_vec();
        while let Some(x) = stack.pop() {
            if down_seen[x] {
                continue;
            }
            down_seen[x] = true;
            touched.push(x);
            if is_latent[x] {
                stack.extend_from_slice(g.children(x));
            } else {
                directed.insert((new_index[a], new_index[x]));
            }
        }
        for &x in &touched {
            down_seen[x] = false;
        }
        touched.clear();

        // bidirected: arrowhead at a, then climb (tail at current vertex)
        // or descend (arrowhead at current vertex) without forming colliders
        let mut up: Vec<usize> = Vec::new();
        let mut down: Vec<usize> = Vec::new();
        let reach = |b: usize, out: &mut BTreeSet<(usize, usize)>| {
            if b != a {
                let (x, y) = (new_index[a], new_index[b]);
                out.insert((x.min(y), x.max(y)));
            }
        };
        for &p in g.parents(a) {
            if is_latent[p] {
                up.push(p);
            }
        }
        for &s in g.siblings(a) {
            if is_latent[s] {
                down.push(s);
            } else {
                reach(s, &mut bidirected);
            }
        }
        loop {
            if let Some(x) = up.pop() {
                if up_seen[x] {
                    continue;
                }
                up_seen[x] = true;
                touched.push(x);
                for &p in g.parents(x) {
                    if is_latent[p] {
                        up.push(p);
                    }
                }
                for &y in g.siblings(x).iter().chain(g.children(x)) {
                    if is_latent[y] {
                        down.push(y);
                    } else {
                        reach(y, &mut bidirected);
                    }
                }
            } else if let Some(y) = down.pop() {
                if down_seen[y] {
                    continue;
                }
                down_seen[y] = true;
                touched.push(y);
                for &c in g.children(y) {
                    if is_latent[c] {
                        down.push(c);
                    } else {
                        reach(c, &mut bidirected);
                    }
                }
            } else {
                break;
            }
        }
        for &x in &touched {
            up_seen[x] = false;
            down_seen[x] = false;
        }
        touched.clear();
    }

    let labels = kept.iter().map(|&v| g.label(v).clone()).collect();
    let directed: Vec<_> = directed.into_iter().collect();
    let bidirected: Vec<_> = bidirected.into_iter().collect();
    Admg::new(labels, &directed, &bidirected)
}

/// Projection of a CADMG; latent vertices must be random.
pub fn latent_project_cadmg(g: &Cadmg, latent: &VertexSet) -> Result<Cadmg> {
    if let Some(v) = latent.iter().find(|&v| v < g.graph().n() && g.is_fixed(v)) {
        return Err(Error::Precondition(format!(
            "latent vertex `{}` is fixed",
            g.graph().label(v)
        )));
    }
    let projected = latent_project(g.graph(), latent)?;
    let fixed: VertexSet = g
        .fixed()
        .iter()
        .map(|v| projected.vertex(g.graph().label(v).as_str()))
        .collect::<Result<_>>()?;
    Cadmg::new(projected, &fixed)
}

/// A DAG with one hidden parent per bidirected edge of the source graph.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CanonicalDag {
    pub dag: Admg,
    /// Hidden vertices, appended after the observed ones.
    pub hidden: VertexSet,
    /// For each hidden vertex (in order), the bidirected edge it replaces.
    pub replaced: Vec<(usize, usize)>,
}

pub fn canonical_dag(g: &Admg) -> Result<CanonicalDag> {
    if let Some(l) = reserved_in(g) {
        return Err(Error::ReservedLabel(l.to_string()));
    }
    let n = g.n();
    let replaced = g.bidirected_edges();
    let mut labels = g.labels().to_vec();
    let mut directed = g.directed_edges();
    for (i, &(a, b)) in replaced.iter().enumerate() {
        labels.push(Label::new(&format!("_h{}", i + 1))?);
        directed.push((n + i, a));
        directed.push((n + i, b));
    }
    let dag = Admg::new(labels, &directed, &[])?;
    Ok(CanonicalDag {
        dag,
        hidden: (n..n + replaced.len()).collect(),
        replaced,
    })
}

/// The closure ⟨B⟩ and the sequence of sets leading to it.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ClosureResult {
    pub closure: VertexSet,
    pub intrinsic: bool,
    /// Starts with the full vertex set; each later entry strictly shrinks.
    pub iterations: Vec<VertexSet>,
}

pub(crate) fn closure_mask(g: &Admg, targets: &[bool]) -> Vec<bool> {
    closure_trace(g, targets, None)
}

fn closure_trace(g: &Admg, targets: &[bool], mut trace: Option<&mut Vec<VertexSet>>) -> Vec<bool> {
    let mut cur = vec![true; g.n()];
    loop {
        let dis = g.district_within(&cur, targets);
        let an = g.ancestors_within(&dis, targets);
        if an == cur {
            return cur;
        }
        if let Some(t) = trace.as_deref_mut() {
            if dis != cur {
                t.push(VertexSet::from_mask(&dis));
            }
            if an != dis {
                t.push(VertexSet::from_mask(&an));
            }
        }
        cur = an;
    }
}

pub fn closure(g: &Admg, targets: &VertexSet) -> Result<ClosureResult> {
    if targets.is_empty() {
        return Err(Error::EmptySet);
    }
    if let Some(v) = targets.iter().find(|&v| v >= g.n()) {
        return Err(Error::UnknownVertex(format!("#{v}")));
    }
    let mut iterations = vec![g.all()];
    let mask = closure_trace(g, &targets.to_mask(g.n()), Some(&mut iterations));
    let closure = VertexSet::from_mask(&mask);
    let intrinsic = g.bidirected_connected(&closure)?;
    Ok(ClosureResult {
        closure,
        intrinsic,
        iterations,
    })
}

fn single_closure(g: &Admg, v: usize) -> VertexSet {
    let mut t = vec![false; g.n()];
    t[v] = true;
    VertexSet::from_mask(&closure_mask(g, &t))
}

fn pair_closure(g: &Admg, v: usize, w: usize) -> VertexSet {
    let mut t = vec![false; g.n()];
    t[v] = true;
    t[w] = true;
    VertexSet::from_mask(&closure_mask(g, &t))
}

pub fn is_arid(g: &Admg) -> bool {
    (0..g.n()).all(|v| single_closure(g, v).len() == 1)
}

pub fn is_maximal(g: &Admg) -> bool {
    let closures: Vec<VertexSet> = (0..g.n()).map(|v| single_closure(g, v)).collect();
    (0..g.n()).all(|v| {
        (v + 1..g.n()).all(|w| g.adjacent(v, w) || dense_cases(g, v, w, &closures[v], &closures[w]).is_empty())
    })
}

/// Which of the three dense-connectivity conditions holds for `(v, w)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum DenseCase {
    /// `v` is a parent of ⟨w⟩.
    DirectedVw,
    /// `w` is a parent of ⟨v⟩.
    DirectedWv,
    /// ⟨{v, w}⟩ is bidirected-connected.
    Bidirected,
    None,
}

impl DenseCase {
    pub fn as_str(self) -> &'static str {
        match self {
            DenseCase::DirectedVw => "directed_vw",
            DenseCase::DirectedWv => "directed_wv",
            DenseCase::Bidirected => "bidirected",
            DenseCase::None => "none",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Preference {
    #[default]
    DirectedFirst,
    BidirectedFirst,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DenseVerdict {
    pub case: DenseCase,
    /// Every condition that holds, in preference order.
    pub cases: Vec<DenseCase>,
    pub witness_closure: VertexSet,
}

impl DenseVerdict {
    pub fn dense(&self) -> bool {
        self.case != DenseCase::None
    }
}

fn dense_cases(g: &Admg, v: usize, w: usize, cv: &VertexSet, cw: &VertexSet) -> Vec<(DenseCase, VertexSet)> {
    let mut out = Vec::new();
    if g.parents_of(cv).contains(w) {
        out.push((DenseCase::DirectedWv, cv.clone()));
    }
    if g.parents_of(cw).contains(v) {
        out.push((DenseCase::DirectedVw, cw.clone()));
    }
    let cvw = pair_closure(g, v, w);
    if g.bidirected_connected(&cvw).unwrap_or(false) {
        out.push((DenseCase::Bidirected, cvw));
    }
    out
}

fn check_pair(g: &Admg, v: usize, w: usize) -> Result<()> {
    for x in [v, w] {
        if x >= g.n() {
            return Err(Error::UnknownVertex(format!("#{x}")));
        }
    }
    if v == w {
        return Err(Error::Precondition("the two vertices must differ".into()));
    }
    Ok(())
}

pub fn densely_connected(g: &Admg, v: usize, w: usize) -> Result<DenseVerdict> {
    densely_connected_with(g, v, w, Preference::DirectedFirst)
}

pub fn densely_connected_with(g: &Admg, v: usize, w: usize, preference: Preference) -> Result<DenseVerdict> {
    check_pair(g, v, w)?;
    let mut found = dense_cases(g, v, w, &single_closure(g, v), &single_closure(g, w));
    if preference == Preference::BidirectedFirst {
        found.sort_by_key(|(c, _)| *c != DenseCase::Bidirected);
    }
    Ok(match found.first() {
        Some((case, witness)) => DenseVerdict {
            case: *case,
            witness_closure: witness.clone(),
            cases: found.iter().map(|(c, _)| *c).collect(),
        },
        None => DenseVerdict {
            case: DenseCase::None,
            cases: Vec::new(),
            witness_closure: pair_closure(g, v, w),
        },
    })
}

/// Maximal arid projection.
pub fn marg_project(g: &Admg) -> Admg {
    let n = g.n();
    let closures: Vec<VertexSet> = (0..n).map(|v| single_closure(g, v)).collect();
    let mut directed = Vec::new();
    for (b, c) in closures.iter().enumerate() {
        for a in g.parents_of(c).iter().filter(|&a| a != b) {
            directed.push((a, b));
        }
    }
    let mut has_dir = vec![vec![false; n]; n];
    for &(a, b) in &directed {
        has_dir[a][b] = true;
        has_dir[b][a] = true;
    }
    let mut bidirected = Vec::new();
    for (a, row) in has_dir.iter().enumerate() {
        for (b, &directed_ab) in row.iter().enumerate().skip(a + 1) {
            if !directed_ab && g.bidirected_connected(&pair_closure(g, a, b)).unwrap_or(false) {
                bidirected.push((a, b));
            }
        }
    }
    Admg::new(g.labels().to_vec(), &directed, &bidirected).expect("parents of closures respect ancestry")
}

/// The induced subgraph on which the coupling for `(v, w)` is built.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PairSubgraph {
    pub graph: Admg,
    pub case: DenseCase,
    /// Original index of each vertex of `graph`.
    pub vertices: VertexSet,
    /// Childless targets B in `graph` indices: the sink in the directed case, both ends otherwise.
    pub targets: VertexSet,
    /// The external parent in the directed case.
    pub external: Option<usize>,
    pub v: usize,
    pub w: usize,
}

pub fn pair_subgraph(g: &Admg, v: usize, w: usize, preference: Preference) -> Result<PairSubgraph> {
    let verdict = densely_connected_with(g, v, w, preference)?;
    if !verdict.dense() {
        return Err(Error::NotDenselyConnected {
            v: g.label(v).to_string(),
            w: g.label(w).to_string(),
        });
    }
    // the directed case needs the source outside the sink's closure;
    // otherwise ⟨{v,w}⟩ equals that closure and is bidirected-connected
    let usable = |c: &DenseCase| match c {
        DenseCase::DirectedWv => !single_closure(g, v).contains(w),
        DenseCase::DirectedVw => !single_closure(g, w).contains(v),
        _ => true,
    };
    let mut order = verdict.cases.clone();
    if !order.contains(&DenseCase::Bidirected) {
        order.push(DenseCase::Bidirected);
    }
    let case = *order.iter().find(|c| usable(c)).expect("bidirected fallback is always usable");
    let (vertices, sink_src) = match case {
        DenseCase::DirectedWv => {
            let mut s = single_closure(g, v);
            s.insert(w);
            (s, Some((v, w)))
        }
        DenseCase::DirectedVw => {
            let mut s = single_closure(g, w);
            s.insert(v);
            (s, Some((w, v)))
        }
        _ => (pair_closure(g, v, w), None),
    };
    let graph = g.induced_subgraph(&vertices)?;
    let pos = |x: usize| vertices.as_slice().binary_search(&x).expect("member");
    let (targets, external) = match sink_src {
        Some((sink, src)) => (VertexSet::singleton(pos(sink)), Some(pos(src))),
        None => (vec![pos(v), pos(w)].into(), None),
    };
    Ok(PairSubgraph {
        graph,
        case,
        targets,
        external,
        v: pos(v),
        w: pos(w),
        vertices,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;
    use crate::format::parse_admg;

    fn set(g: &Admg, names: &[&str]) -> VertexSet {
        g.vertex_set(names).unwrap()
    }

    #[test]
    fn latent_projection_examples() {
        let doc = fixtures::projection();
        let p = latent_project(doc.admg(), &doc.latent).unwrap();
        let expected = parse_admg(
            "vertices: a b c d\na -> c\na -> d\nb -> d\nb <-> c\nb <-> d\nc <-> d\n",
        )
        .unwrap();
        assert_eq!(p, expected);

        let doc = fixtures::iv_hidden();
        assert_eq!(latent_project(doc.admg(), &doc.latent).unwrap(), fixtures::iv());
        let g = fixtures::gadget();
        assert_eq!(latent_project(&g, &VertexSet::new()).unwrap(), g);
    }

    #[test]
    fn latent_chains() {
        // l1 <- l2 -> l3 -> b with a <- l1: confounded through a latent chain
        let g = parse_admg(
            "vertices: a b l1 l2 l3\nl1 -> a\nl2 -> l1\nl2 -> l3\nl3 -> b\n",
        )
        .unwrap();
        let p = latent_project(&g, &set(&g, &["l1", "l2", "l3"])).unwrap();
        assert_eq!(p, parse_admg("vertices: a b\na <-> b\n").unwrap());
        // a collider on a latent blocks: a -> l <- b
        let g = parse_admg("vertices: a b l\na -> l\nb -> l\n").unwrap();
        let p = latent_project(&g, &set(&g, &["l"])).unwrap();
        assert_eq!(p, parse_admg("vertices: a b\n").unwrap());
    }

    #[test]
    fn canonical_examples() {
        let c = canonical_dag(&fixtures::iv()).unwrap();
        assert!(c.dag.is_dag());
        assert_eq!(
            c.dag,
            Admg::from_labels(
                &["a", "b", "c", "_h1"],
                &[("a", "b"), ("b", "c"), ("_h1", "b"), ("_h1", "c")],
                &[]
            )
            .unwrap()
        );
        let g = fixtures::gadget();
        let c = canonical_dag(&g).unwrap();
        assert_eq!(c.hidden.len(), 3);
        assert_eq!(latent_project(&c.dag, &c.hidden).unwrap(), g);
        let dag = parse_admg("vertices: x y\nx -> y\n").unwrap();
        let c = canonical_dag(&dag).unwrap();
        assert_eq!(c.dag, dag);
        assert!(c.replaced.is_empty());
    }

    #[test]
    fn closure_examples() {
        let iv = fixtures::iv();
        let r = closure(&iv, &set(&iv, &["c"])).unwrap();
        assert_eq!(r.closure, set(&iv, &["b", "c"]));
        assert!(r.intrinsic);
        assert_eq!(r.iterations.first(), Some(&iv.all()));

        let g = fixtures::arid();
        let r = closure(&g, &set(&g, &["d", "e"])).unwrap();
        assert_eq!(r.closure, set(&g, &["b", "c", "d", "e"]));
        assert!(r.intrinsic);
        // the alternating iteration keeps c, a parent of d inside the district
        assert_eq!(closure(&g, &set(&g, &["d"])).unwrap().closure, set(&g, &["b", "c", "d"]));

        let dag = parse_admg("vertices: x y\nx -> y\n").unwrap();
        let r = closure(&dag, &set(&dag, &["y"])).unwrap();
        assert_eq!(r.closure, set(&dag, &["y"]));
        assert!(r.intrinsic);
        assert_eq!(closure(&dag, &VertexSet::new()), Err(Error::EmptySet));
    }

    #[test]
    fn arid_and_maximal() {
        assert!(!is_arid(&fixtures::iv()));
        let target = marg_project(&fixtures::arid());
        assert!(is_arid(&target) && is_maximal(&target));
        assert!(is_arid(&parse_admg("vertices: x y z\nx -> y\ny -> z\n").unwrap()));
        assert!(!is_maximal(&fixtures::gadget()));
    }

    #[test]
    fn dense_examples() {
        let iv = fixtures::iv();
        let (a, c) = (iv.vertex("a").unwrap(), iv.vertex("c").unwrap());
        let d = densely_connected(&iv, a, c).unwrap();
        assert_eq!(d.case, DenseCase::DirectedVw);
        assert_eq!(d.witness_closure, set(&iv, &["b", "c"]));
        let g = fixtures::gadget();
        let d = densely_connected(&g, g.vertex("c").unwrap(), g.vertex("d").unwrap()).unwrap();
        assert_eq!(d.case, DenseCase::Bidirected);
        assert_eq!(d.witness_closure, g.all());
        let e = parse_admg("vertices: x y").unwrap();
        assert!(!densely_connected(&e, 0, 1).unwrap().dense());
        assert!(densely_connected(&e, 0, 0).is_err());
    }

    #[test]
    fn marg_examples() {
        let iv = marg_project(&fixtures::iv());
        assert_eq!(iv, parse_admg("vertices: a b c\na -> b\nb -> c\na -> c\n").unwrap());
        let g = fixtures::gadget();
        let m = marg_project(&g);
        let mut expected = crate::format::admg_to_text(&g);
        expected.push_str("c <-> d\n");
        assert_eq!(m, parse_admg(&expected).unwrap());
        let m = marg_project(&fixtures::arid());
        assert_eq!(
            m,
            parse_admg(
                "vertices: a b c d e\na -> b\na -> d\nb -> d\nb -> e\nc -> d\nb <-> c\nc <-> e\nd <-> e\n"
            )
            .unwrap()
        );
    }

    #[test]
    fn pair_subgraph_examples() {
        let iv = fixtures::iv();
        let p = pair_subgraph(&iv, 2, 0, Preference::DirectedFirst).unwrap();
        assert_eq!(p.graph, iv);
        assert_eq!(p.case, DenseCase::DirectedWv);
        assert_eq!(p.targets, VertexSet::singleton(2));
        assert_eq!(p.external, Some(0));

        let g = fixtures::gadget();
        let p = pair_subgraph(&g, 2, 3, Preference::DirectedFirst).unwrap();
        assert_eq!(p.graph, g);
        assert_eq!(p.case, DenseCase::Bidirected);

        let p = pair_subgraph(&iv, 0, 1, Preference::DirectedFirst).unwrap();
        assert_eq!(p.graph, parse_admg("vertices: a b\na -> b\n").unwrap());

        let e = parse_admg("vertices: x y").unwrap();
        assert!(matches!(
            pair_subgraph(&e, 0, 1, Preference::DirectedFirst),
            Err(Error::NotDenselyConnected { .. })
        ));
    }

    #[test]
    fn source_inside_closure_falls_back() {
        // b -> c with b <-> c: b is a parent of ⟨c⟩ = {b, c} but also a member
        let iv = fixtures::iv();
        let p = pair_subgraph(&iv, 2, 1, Preference::DirectedFirst).unwrap();
        assert_eq!(p.case, DenseCase::Bidirected);
        assert_eq!(p.external, None);
        assert_eq!(p.vertices, set(&iv, &["b", "c"]));
    }
}
