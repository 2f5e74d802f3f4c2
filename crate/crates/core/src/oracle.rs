//! Exact enumeration of coupling laws, pair verification and the parity lemma.

use std::fmt;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};

use crate::construction::{build_coupling, CouplingSem};
use crate::error::{Error, Result};
use crate::graph::Admg;
use crate::kernel::{decode, encode, DiscreteKernel, Variable, MAX_CELLS};
use crate::projection::Preference;

/// Largest number of hidden/input assignments enumerated.
pub const MAX_ATOMS: usize = 1 << 24;

/// Exact law of the observed variables with every hidden source and the
/// input (if any) uniform.
pub fn exact_joint(sem: &CouplingSem) -> Result<DiscreteKernel> {
    enumerate(sem, None)
}

/// Exact law with the directed-case input held at `input`.
pub fn exact_joint_fixed_input(sem: &CouplingSem, input: usize) -> Result<DiscreteKernel> {
    if sem.input().is_none() {
        return Err(Error::Parameter("this coupling has no input vertex".into()));
    }
    if input >= sem.modulus() {
        return Err(Error::Parameter(format!("input {input} is outside 0..{}", sem.modulus())));
    }
    enumerate(sem, Some(input))
}

fn enumerate(sem: &CouplingSem, fixed_input: Option<usize>) -> Result<DiscreteKernel> {
    let k = sem.modulus();
    let slots = sem.hidden().len() + usize::from(sem.input().is_some() && fixed_input.is_none());
    let atoms = (0..slots)
        .try_fold(1usize, |acc, _| acc.checked_mul(k).filter(|&a| a <= MAX_ATOMS))
        .ok_or_else(|| Error::SizeGuard(format!("{k}^{slots} assignments exceed {MAX_ATOMS}")))?;
    let n = sem.n_observed();
    let cards = vec![k; n];
    let cells = (0..n)
        .try_fold(1usize, |acc, _| acc.checked_mul(k).filter(|&c| c <= MAX_CELLS))
        .ok_or_else(|| Error::SizeGuard(format!("{k}^{n} outcomes exceed {MAX_CELLS}")))?;
    let mut counts = vec![0u64; cells];
    let mut digits = vec![0usize; slots];
    let m = sem.hidden().len();
    for _ in 0..atoms {
        let input = sem.input().map(|_| fixed_input.unwrap_or_else(|| digits.get(m).copied().unwrap_or(0)));
        let x = sem.evaluate(&digits[..m], input)?;
        counts[encode(&cards, &x)] += 1;
        for d in digits.iter_mut() {
            *d += 1;
            if *d < k {
                break;
            }
            *d = 0;
        }
    }
    let total = BigInt::from(atoms);
    let probs = counts
        .into_iter()
        .map(|c| BigRational::new(BigInt::from(c), total.clone()))
        .collect();
    let vars = sem.labels().iter().map(|l| Variable::new(l.as_str(), k)).collect();
    DiscreteKernel::joint(vars, probs)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IndependenceReport {
    pub v: String,
    pub w: String,
    pub equality_holds: bool,
    /// P(X_v = X_w).
    pub equality_mass: BigRational,
    pub independence_holds: bool,
    pub uniform_marginals: bool,
    /// Smallest dependent subset, by size then position.
    pub failing_subset: Option<Vec<String>>,
    pub law: DiscreteKernel,
}

impl IndependenceReport {
    pub fn passes(&self) -> bool {
        self.equality_holds && self.independence_holds && self.uniform_marginals
    }

    /// `check: pass|fail — detail` lines.
    pub fn lines(&self) -> Vec<String> {
        let verdict = |ok: bool| if ok { "pass" } else { "fail" };
        let others: Vec<&str> = self
            .law
            .random_vars()
            .iter()
            .map(|v| v.name.as_str())
            .filter(|&n| n != self.w)
            .collect();
        vec![
            format!(
                "equality: {} — P(X_{} = X_{}) = {}",
                verdict(self.equality_holds),
                self.v,
                self.w,
                self.equality_mass
            ),
            match &self.failing_subset {
                None => format!(
                    "independence: pass — {{{}}} mutually independent",
                    others.join(", ")
                ),
                Some(s) => format!("independence: fail — {{{}}} dependent", s.join(", ")),
            },
            format!(
                "uniform: {} — {}",
                verdict(self.uniform_marginals),
                if self.uniform_marginals {
                    "every marginal is uniform"
                } else {
                    "some marginal is not uniform"
                }
            ),
        ]
    }
}

impl fmt::Display for IndependenceReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for line in self.lines() {
            writeln!(f, "{line}")?;
        }
        Ok(())
    }
}

/// True iff the marginal over `positions` factorizes into its unary marginals.
fn factorizes(p: &DiscreteKernel, positions: &[usize]) -> Result<bool> {
    let joint = p.marginal(positions)?;
    let cards = joint.random_cards();
    let unary: Vec<Vec<BigRational>> = (0..cards.len())
        .map(|i| Ok(joint.marginal(&[i])?.rows()[0].clone()))
        .collect::<Result<_>>()?;
    let mut states = vec![0; cards.len()];
    for (i, q) in joint.rows()[0].iter().enumerate() {
        decode(&cards, i, &mut states);
        let product = states
            .iter()
            .zip(&unary)
            .fold(BigRational::one(), |acc, (&s, u)| acc * &u[s]);
        if *q != product {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Checks P(X_v = X_w) = 1, mutual independence of every variable except
/// `w`, and uniform marginals, all exactly.
pub fn verify_pair(p: &DiscreteKernel, v: &str, w: &str) -> Result<IndependenceReport> {
    if !p.fixed_vars().is_empty() {
        return Err(Error::Precondition("verification needs a joint law".into()));
    }
    let pv = p.random_position(v).ok_or_else(|| Error::UnknownVertex(v.into()))?;
    let pw = p.random_position(w).ok_or_else(|| Error::UnknownVertex(w.into()))?;
    if pv == pw {
        return Err(Error::Precondition("the pair needs two distinct variables".into()));
    }
    let cards = p.random_cards();
    let mut states = vec![0; cards.len()];
    let mut equality_mass = BigRational::zero();
    for (i, q) in p.rows()[0].iter().enumerate() {
        decode(&cards, i, &mut states);
        if states[pv] == states[pw] {
            equality_mass += q;
        }
    }

    let mut uniform_marginals = true;
    for (i, &c) in cards.iter().enumerate() {
        let target = BigRational::new(BigInt::one(), BigInt::from(c));
        if p.marginal(&[i])?.rows()[0].iter().any(|q| *q != target) {
            uniform_marginals = false;
        }
    }

    let rest: Vec<usize> = (0..cards.len()).filter(|&i| i != pw).collect();
    let independence_holds = factorizes(p, &rest)?;
    let failing_subset = if independence_holds {
        None
    } else {
        smallest_dependent(p, &rest)?.map(|s| s.iter().map(|&i| p.random_vars()[i].name.clone()).collect())
    };
    Ok(IndependenceReport {
        v: v.into(),
        w: w.into(),
        equality_holds: equality_mass.is_one(),
        equality_mass,
        independence_holds,
        uniform_marginals,
        failing_subset,
        law: p.clone(),
    })
}

fn smallest_dependent(p: &DiscreteKernel, pool: &[usize]) -> Result<Option<Vec<usize>>> {
    for size in 2..=pool.len() {
        let mut idx: Vec<usize> = (0..size).collect();
        loop {
            let subset: Vec<usize> = idx.iter().map(|&i| pool[i]).collect();
            if !factorizes(p, &subset)? {
                return Ok(Some(subset));
            }
            // next combination in lexicographic order
            let Some(i) = (0..size).rev().find(|&i| idx[i] != i + pool.len() - size) else {
                break;
            };
            idx[i] += 1;
            for j in i + 1..size {
                idx[j] = idx[j - 1] + 1;
            }
        }
    }
    Ok(None)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum TheoremOutcome {
    Checked(IndependenceReport),
    /// The pair is not densely connected: a nested constraint separates it.
    Refused { v: String, w: String },
}

impl TheoremOutcome {
    pub fn passes(&self) -> bool {
        matches!(self, TheoremOutcome::Checked(r) if r.passes())
    }

    pub fn refused(&self) -> bool {
        matches!(self, TheoremOutcome::Refused { .. })
    }
}

/// Builds the coupling, enumerates its law and verifies it.
pub fn verify_theorem(g: &Admg, v: usize, w: usize, modulus: usize) -> Result<TheoremOutcome> {
    match build_coupling(g, v, w, modulus, Preference::DirectedFirst) {
        Ok(sem) => {
            let law = exact_joint(&sem)?;
            Ok(TheoremOutcome::Checked(verify_pair(
                &law,
                g.label(v).as_str(),
                g.label(w).as_str(),
            )?))
        }
        Err(Error::NotDenselyConnected { v, w }) => Ok(TheoremOutcome::Refused { v, w }),
        Err(e) => Err(e),
    }
}

pub const MAX_PARITY_NODES: usize = 20;
/// Above this many nodes subsets are checked by rank instead of enumeration.
const ENUMERATE_SUBSETS_UP_TO: usize = 12;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParityReport {
    pub k: usize,
    pub assignments: usize,
    pub sum_zero: bool,
    pub subsets_checked: usize,
    /// A proper subset (1-based nodes) that is not jointly uniform.
    pub failing_subset: Option<Vec<usize>>,
}

impl ParityReport {
    pub fn passes(&self) -> bool {
        self.sum_zero && self.failing_subset.is_none()
    }
}

/// Each node's variable is the xor of its incident edge coins. Checks that
/// the total is always even and every proper subset is jointly uniform.
pub fn verify_parity_lemma(k: usize, tree: &[(usize, usize)]) -> Result<ParityReport> {
    if k == 0 || k > MAX_PARITY_NODES {
        return Err(Error::Parameter(format!("node count must be in 1..={MAX_PARITY_NODES}")));
    }
    check_tree(k, tree)?;
    let incidence: Vec<u32> = tree
        .iter()
        .map(|&(a, b)| (1u32 << (a - 1)) | (1u32 << (b - 1)))
        .collect();
    let assignments = 1usize << tree.len();
    let values: Vec<u32> = (0..assignments)
        .map(|z| {
            incidence
                .iter()
                .enumerate()
                .filter(|&(e, _)| z >> e & 1 == 1)
                .fold(0, |acc, (_, &m)| acc ^ m)
        })
        .collect();
    let sum_zero = values.iter().all(|x| x.count_ones() % 2 == 0);

    let full = (1u32 << k) - 1;
    let mut failing_subset = None;
    let mut subsets_checked = 0;
    if k <= ENUMERATE_SUBSETS_UP_TO {
        let mut counts = vec![0usize; 1 << k];
        for s in 1..full {
            subsets_checked += 1;
            for &x in &values {
                counts[(x & s) as usize] += 1;
            }
            let expected = assignments >> s.count_ones();
            let mut ok = true;
            // visit every sub-pattern of s
            let mut t = s;
            loop {
                ok &= counts[t as usize] == expected;
                counts[t as usize] = 0;
                if t == 0 {
                    break;
                }
                t = (t - 1) & s;
            }
            if !ok {
                failing_subset = Some(nodes_of(s));
                break;
            }
        }
    } else {
        let rows: Vec<u32> = (0..k)
            .map(|i| {
                incidence
                    .iter()
                    .enumerate()
                    .filter(|&(_, &m)| m >> i & 1 == 1)
                    .fold(0, |acc, (e, _)| acc | 1 << e)
            })
            .collect();
        for s in 1..full {
            subsets_checked += 1;
            if !independent_rows(&rows, s) {
                failing_subset = Some(nodes_of(s));
                break;
            }
        }
    }
    Ok(ParityReport {
        k,
        assignments,
        sum_zero,
        subsets_checked,
        failing_subset,
    })
}

fn nodes_of(mask: u32) -> Vec<usize> {
    (0..32).filter(|i| mask >> i & 1 == 1).map(|i| i + 1).collect()
}

/// Linear independence over GF(2) of the rows selected by `mask`.
fn independent_rows(rows: &[u32], mask: u32) -> bool {
    let mut basis: Vec<u32> = Vec::new();
    for (i, &r) in rows.iter().enumerate() {
        if mask >> i & 1 == 0 {
            continue;
        }
        let reduced = basis.iter().fold(r, |x, &b| x.min(x ^ b));
        if reduced == 0 {
            return false;
        }
        basis.push(reduced);
        basis.sort_unstable_by(|a, b| b.cmp(a));
    }
    true
}

fn check_tree(k: usize, tree: &[(usize, usize)]) -> Result<()> {
    if tree.len() + 1 != k {
        return Err(Error::NotATree(format!("{} edge(s) for {k} node(s)", tree.len())));
    }
    let mut parent: Vec<usize> = (0..=k).collect();
    fn find(parent: &mut [usize], mut x: usize) -> usize {
        while parent[x] != x {
            parent[x] = parent[parent[x]];
            x = parent[x];
        }
        x
    }
    for &(a, b) in tree {
        if !(1..=k).contains(&a) || !(1..=k).contains(&b) {
            return Err(Error::NotATree(format!("edge {a}-{b} leaves 1..={k}")));
        }
        let (ra, rb) = (find(&mut parent, a), find(&mut parent, b));
        if ra == rb {
            return Err(Error::NotATree(format!("edge {a}-{b} closes a cycle")));
        }
        parent[ra] = rb;
    }
    Ok(())
}

/// Tree on nodes `1..=k` from a Prüfer sequence of length `k - 2`.
pub fn prufer_decode(k: usize, seq: &[usize]) -> Result<Vec<(usize, usize)>> {
    if k < 2 {
        return if seq.is_empty() {
            Ok(Vec::new())
        } else {
            Err(Error::Parameter("sequence too long".into()))
        };
    }
    if seq.len() != k - 2 || seq.iter().any(|&s| !(1..=k).contains(&s)) {
        return Err(Error::Parameter(format!("expected {} labels in 1..={k}", k - 2)));
    }
    let mut degree = vec![1usize; k + 1];
    for &s in seq {
        degree[s] += 1;
    }
    let mut edges = Vec::with_capacity(k - 1);
    for &s in seq {
        let leaf = (1..=k).find(|&x| degree[x] == 1).expect("a leaf exists");
        edges.push((leaf.min(s), leaf.max(s)));
        degree[leaf] -= 1;
        degree[s] -= 1;
    }
    let last: Vec<usize> = (1..=k).filter(|&x| degree[x] == 1).collect();
    edges.push((last[0], last[1]));
    Ok(edges)
}

/// Every labeled tree on `1..=k` (k^(k-2) of them).
pub fn spanning_trees(k: usize) -> impl Iterator<Item = Vec<(usize, usize)>> {
    let len = k.saturating_sub(2);
    let total = if k < 2 { 1 } else { k.pow(len as u32) };
    (0..total).map(move |mut code| {
        let seq: Vec<usize> = (0..len)
            .map(|_| {
                let s = code % k + 1;
                code /= k;
                s
            })
            .collect();
        prufer_decode(k, &seq).expect("valid sequence")
    })
}
