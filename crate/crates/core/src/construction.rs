//! Structural-equation couplings that force two densely connected variables
//! to be equal while every other observed variable stays independent.

use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::format::reserved_in;
use crate::graph::Admg;
use crate::minimality::{reduce_to_minimal, tree_reduce, MinimalReduction};
use crate::projection::{pair_subgraph, DenseCase, Preference};
use crate::vertex::{Label, VertexSet};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Sign {
    Plus,
    Minus,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Source {
    Hidden(usize),
    Vertex(usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Term {
    pub source: Source,
    pub sign: Sign,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Equation {
    /// Exogenous input of the directed case.
    Input,
    /// Signed sum of the terms modulo k.
    Sum(Vec<Term>),
}

/// A hidden uniform source: shared by two children or private to one.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HiddenVar {
    pub name: String,
    pub children: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CouplingSem {
    labels: Vec<Label>,
    canonical: Admg,
    hidden: Vec<HiddenVar>,
    equations: Vec<Equation>,
    order: Vec<usize>,
    input: Option<usize>,
    pair: (usize, usize),
    receiver: usize,
    sender: usize,
    modulus: usize,
    retained: VertexSet,
    case: DenseCase,
}

impl CouplingSem {
    pub fn labels(&self) -> &[Label] {
        &self.labels
    }

    pub fn n_observed(&self) -> usize {
        self.labels.len()
    }

    /// DAG over the observed vertices followed by the hidden sources.
    pub fn canonical(&self) -> &Admg {
        &self.canonical
    }

    pub fn hidden(&self) -> &[HiddenVar] {
        &self.hidden
    }

    pub fn equations(&self) -> &[Equation] {
        &self.equations
    }

    pub fn input(&self) -> Option<usize> {
        self.input
    }

    /// The requested pair `(v, w)`.
    pub fn pair(&self) -> (usize, usize) {
        self.pair
    }

    /// The end that receives the transmitted value: the sink in the directed case.
    pub fn receiver(&self) -> usize {
        self.receiver
    }

    /// The end whose value is transmitted.
    pub fn sender(&self) -> usize {
        self.sender
    }

    pub fn modulus(&self) -> usize {
        self.modulus
    }

    /// Observed vertices kept by the minimal reduction.
    pub fn retained(&self) -> &VertexSet {
        &self.retained
    }

    pub fn case(&self) -> DenseCase {
        self.case
    }

    /// Observed values in declaration order.
    pub fn evaluate(&self, hidden: &[usize], input: Option<usize>) -> Result<Vec<usize>> {
        if hidden.len() != self.hidden.len() {
            return Err(Error::Assignment(format!(
                "expected {} hidden value(s), got {}",
                self.hidden.len(),
                hidden.len()
            )));
        }
        if let Some(i) = hidden.iter().position(|&h| h >= self.modulus) {
            return Err(Error::Assignment(format!(
                "hidden `{}` = {} is outside 0..{}",
                self.hidden[i].name, hidden[i], self.modulus
            )));
        }
        let input = match (self.input, input) {
            (Some(_), Some(x)) if x < self.modulus => x,
            (Some(_), Some(x)) => {
                return Err(Error::Assignment(format!("input {x} is outside 0..{}", self.modulus)))
            }
            (Some(w), None) => {
                return Err(Error::Assignment(format!("input for `{}` is required", self.labels[w])))
            }
            (None, Some(_)) => return Err(Error::Assignment("this coupling takes no input".into())),
            (None, None) => 0,
        };
        let k = self.modulus;
        let mut out = vec![0usize; self.labels.len()];
        for &x in &self.order {
            out[x] = match &self.equations[x] {
                Equation::Input => input,
                Equation::Sum(terms) => terms.iter().fold(0, |acc, t| {
                    let value = match t.source {
                        Source::Hidden(h) => hidden[h],
                        Source::Vertex(u) => out[u],
                    };
                    match t.sign {
                        Sign::Plus => (acc + value) % k,
                        Sign::Minus => (acc + k - value) % k,
                    }
                }),
            };
        }
        Ok(out)
    }

    /// Bitwise evaluation on machine words; binary couplings only.
    pub fn evaluate_words(&self, hidden: &[u64], input: u64) -> Result<Vec<u64>> {
        if self.modulus != 2 {
            return Err(Error::Parameter("word evaluation needs modulus 2".into()));
        }
        if hidden.len() != self.hidden.len() {
            return Err(Error::Assignment("wrong number of hidden words".into()));
        }
        let mut out = vec![0u64; self.labels.len()];
        for &x in &self.order {
            out[x] = match &self.equations[x] {
                Equation::Input => input,
                Equation::Sum(terms) => terms.iter().fold(0, |acc, t| {
                    acc ^ match t.source {
                        Source::Hidden(h) => hidden[h],
                        Source::Vertex(u) => out[u],
                    }
                }),
            };
        }
        Ok(out)
    }

    /// One line per observed vertex, e.g. `c = b + _h1 (mod 2)`.
    pub fn describe(&self) -> Vec<String> {
        self.equations
            .iter()
            .enumerate()
            .map(|(x, eq)| match eq {
                Equation::Input => format!("{} = input", self.labels[x]),
                Equation::Sum(terms) => {
                    let mut s = format!("{} =", self.labels[x]);
                    for (i, t) in terms.iter().enumerate() {
                        let name = match t.source {
                            Source::Hidden(h) => self.hidden[h].name.as_str(),
                            Source::Vertex(u) => self.labels[u].as_str(),
                        };
                        let op = match (i, t.sign) {
                            (0, Sign::Plus) => "",
                            (0, Sign::Minus) => "-",
                            (_, Sign::Plus) => "+ ",
                            (_, Sign::Minus) => "- ",
                        };
                        s.push_str(&format!(" {op}{name}"));
                    }
                    s.push_str(&format!(" (mod {})", self.modulus));
                    s
                }
            })
            .collect()
    }

    /// `n` rows; row `i` depends only on `(seed, i)`.
    pub fn sample(&self, n: usize, seed: u64, set_input: Option<usize>) -> Result<Dataset<usize>> {
        if let Some(x) = set_input {
            if self.input.is_none() {
                return Err(Error::Parameter("this coupling has no input vertex".into()));
            }
            if x >= self.modulus {
                return Err(Error::Parameter(format!("input {x} is outside 0..{}", self.modulus)));
            }
        }
        let mut hidden = vec![0usize; self.hidden.len()];
        let mut rows = Vec::with_capacity(n);
        for i in 0..n {
            let mut rng = row_rng(seed, i);
            for h in hidden.iter_mut() {
                *h = rng.random_range(0..self.modulus);
            }
            let drawn = rng.random_range(0..self.modulus);
            let input = self.input.map(|_| set_input.unwrap_or(drawn));
            rows.push(self.evaluate(&hidden, input)?);
        }
        Ok(Dataset {
            columns: self.labels.iter().map(|l| l.to_string()).collect(),
            rows,
        })
    }
}

impl fmt::Display for CouplingSem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for line in self.describe() {
            writeln!(f, "{line}")?;
        }
        Ok(())
    }
}

/// Generator for one dataset row.
pub(crate) fn row_rng(seed: u64, row: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(row as u64);
    rng
}

/// Samples with a header row of vertex labels.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset<T> {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<T>>,
}

impl<T> Dataset<T> {
    pub fn column(&self, name: &str) -> Option<Vec<&T>> {
        let i = self.columns.iter().position(|c| c == name)?;
        Some(self.rows.iter().map(|r| &r[i]).collect())
    }

    fn write(&self, cell: impl Fn(&T) -> String) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(&self.columns)?;
        for row in &self.rows {
            w.write_record(row.iter().map(&cell))?;
        }
        let bytes = w.into_inner().map_err(|e| Error::Io(e.to_string()))?;
        String::from_utf8(bytes).map_err(|e| Error::Io(e.to_string()))
    }
}

impl Dataset<usize> {
    pub fn to_csv(&self) -> Result<String> {
        self.write(|x| x.to_string())
    }
}

impl Dataset<f64> {
    /// Decimal notation with 17 significant digits.
    pub fn to_csv(&self) -> Result<String> {
        self.write(|&x| significant17(x))
    }
}

pub(crate) fn significant17(x: f64) -> String {
    if !x.is_finite() {
        return x.to_string();
    }
    if x == 0.0 {
        return "0.0000000000000000".into();
    }
    let exponent = x.abs().log10().floor() as i32;
    let decimals = (16 - exponent).max(0) as usize;
    let s = format!("{x:.decimals$}");
    if decimals > 0 || s.contains('.') {
        s
    } else {
        // large magnitudes print without a fractional part
        let sci = format!("{x:.16e}");
        sci.parse::<f64>().map(|v| format!("{v:.0}")).unwrap_or(sci)
    }
}

/// Full pipeline: pair subgraph, spanning reduction, minimal pruning, then equations.
pub fn build_coupling(g: &Admg, v: usize, w: usize, modulus: usize, preference: Preference) -> Result<CouplingSem> {
    if modulus < 2 {
        return Err(Error::Parameter(format!("modulus must be at least 2, got {modulus}")));
    }
    if v >= g.n() || w >= g.n() {
        return Err(Error::UnknownVertex(format!("#{}", v.max(w))));
    }
    if v == w {
        return Err(Error::Precondition("the pair needs two distinct vertices".into()));
    }
    if let Some(l) = reserved_in(g) {
        return Err(Error::ReservedLabel(l.to_string()));
    }
    let pair = pair_subgraph(g, v, w, preference)?;
    let red = tree_reduce(&pair)?;
    let (minimal, _) = reduce_to_minimal(&red)?;
    coupling_from_reduction(g, &minimal, (v, w), modulus, pair.case)
}

/// Equations over any valid reduction whose labels are vertices of `g`.
/// Vertices of `g` outside the reduction receive private sources.
pub fn coupling_from_reduction(
    g: &Admg,
    red: &MinimalReduction,
    pair: (usize, usize),
    modulus: usize,
    case: DenseCase,
) -> Result<CouplingSem> {
    if modulus < 2 {
        return Err(Error::Parameter(format!("modulus must be at least 2, got {modulus}")));
    }
    let h = red.reduced();
    let to_g: Vec<usize> = h
        .labels()
        .iter()
        .map(|l| g.vertex(l.as_str()))
        .collect::<Result<_>>()?;
    let n = g.n();
    let rank = g.topological_rank();

    let sink_side = {
        let mut seed = vec![false; h.n()];
        seed[red.v()] = true;
        h.ancestors_within(&vec![true; h.n()], &seed)
    };
    let mut hidden = Vec::new();
    let mut hidden_terms: Vec<Vec<Term>> = vec![Vec::new(); n];
    for &(a, b) in red.tree() {
        let (ga, gb) = (to_g[a], to_g[b]);
        let (first, second) = if rank[ga] <= rank[gb] { (ga, gb) } else { (gb, ga) };
        let later = if modulus > 2 && sink_side[a] == sink_side[b] { Sign::Minus } else { Sign::Plus };
        let id = hidden.len();
        hidden.push(HiddenVar {
            name: format!("_h{}", id + 1),
            children: vec![ga.min(gb), ga.max(gb)],
        });
        hidden_terms[first].push(Term { source: Source::Hidden(id), sign: Sign::Plus });
        hidden_terms[second].push(Term { source: Source::Hidden(id), sign: later });
    }

    let mut in_reduction = vec![false; n];
    for &x in &to_g {
        in_reduction[x] = true;
    }
    let input = red.external().map(|x| to_g[x]);
    let mut directed = Vec::new();
    let mut equations = Vec::with_capacity(n);
    for x in 0..n {
        if !in_reduction[x] {
            let id = hidden.len();
            hidden.push(HiddenVar {
                name: format!("_h{}", id + 1),
                children: vec![x],
            });
            equations.push(Equation::Sum(vec![Term { source: Source::Hidden(id), sign: Sign::Plus }]));
            continue;
        }
        if Some(x) == input {
            equations.push(Equation::Input);
            continue;
        }
        let local = h.vertex(g.label(x).as_str())?;
        let mut parents: Vec<usize> = h.parents(local).iter().map(|&p| to_g[p]).collect();
        parents.sort_unstable();
        let mut terms = std::mem::take(&mut hidden_terms[x]);
        for &p in &parents {
            directed.push((p, x));
            terms.push(Term { source: Source::Vertex(p), sign: Sign::Plus });
        }
        equations.push(Equation::Sum(terms));
    }

    let mut labels: Vec<Label> = g.labels().to_vec();
    for hv in &hidden {
        labels.push(Label::new(&hv.name)?);
        for &c in &hv.children {
            directed.push((labels.len() - 1, c));
        }
    }
    let canonical = Admg::new(labels, &directed, &[])?;
    let order = canonical.topological_order().into_iter().filter(|&x| x < n).collect();
    Ok(CouplingSem {
        labels: g.labels().to_vec(),
        canonical,
        hidden,
        equations,
        order,
        input,
        pair,
        receiver: to_g[red.v()],
        sender: to_g[red.w()],
        modulus,
        retained: to_g.iter().copied().collect(),
        case,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;

    fn sem(g: &Admg, v: &str, w: &str, k: usize) -> CouplingSem {
        build_coupling(g, g.vertex(v).unwrap(), g.vertex(w).unwrap(), k, Preference::DirectedFirst).unwrap()
    }

    #[test]
    fn iv_equations() {
        let s = sem(&fixtures::iv(), "a", "c", 2);
        assert_eq!(s.describe(), vec!["a = input", "b = _h1 + a (mod 2)", "c = _h1 + b (mod 2)"]);
        assert_eq!(s.evaluate(&[1], Some(0)).unwrap(), vec![0, 1, 0]);
        assert_eq!(s.evaluate(&[0], Some(0)).unwrap(), vec![0, 0, 0]);
        assert_eq!(s.receiver(), 2);
        assert_eq!(s.sender(), 0);
        assert!(s.evaluate(&[2], Some(0)).is_err());
        assert!(s.evaluate(&[0], None).is_err());
        assert!(s.evaluate(&[0, 0], Some(0)).is_err());
    }

    #[test]
    fn gadget_equations() {
        let s = sem(&fixtures::gadget(), "c", "d", 2);
        assert_eq!(
            s.describe(),
            vec![
                "a = _h1 + _h2 (mod 2)",
                "b = _h1 + _h3 (mod 2)",
                "c = _h2 + b (mod 2)",
                "d = _h3 + a (mod 2)",
            ]
        );
        assert_eq!(s.evaluate(&[0, 0, 0], None).unwrap(), vec![0; 4]);
        let k3 = sem(&fixtures::gadget(), "c", "d", 3);
        for h in 0..27 {
            let hs = [h % 3, h / 3 % 3, h / 9];
            let x = k3.evaluate(&hs, None).unwrap();
            assert_eq!(x[2], x[3]);
        }
    }

    #[test]
    fn directed_pair_equations() {
        let s = sem(&fixtures::directed_pair(), "v", "w", 2);
        assert_eq!(
            s.describe(),
            vec![
                "a = _h1 + _h2 (mod 2)",
                "b = _h1 + _h3 (mod 2)",
                "c = _h3 + b + w (mod 2)",
                "d = _h4 (mod 2)",
                "v = _h2 + a + c (mod 2)",
                "w = input",
            ]
        );
        for bits in 0..32usize {
            let hs: Vec<usize> = (0..4).map(|i| bits >> i & 1).collect();
            let x = s.evaluate(&hs, Some(bits >> 4)).unwrap();
            assert_eq!(x[4], x[5]);
        }
    }

    #[test]
    fn bidirected_pair_equations() {
        let s = sem(&fixtures::bidirected_pair(), "v", "w", 2);
        assert_eq!(
            s.describe(),
            vec![
                "a = _h1 + _h2 (mod 2)",
                "b = _h1 + _h3 (mod 2)",
                "c = _h4 (mod 2)",
                "v = _h3 + a (mod 2)",
                "w = _h2 + b (mod 2)",
            ]
        );
        assert_eq!(s.retained(), &VertexSet::from(vec![0, 1, 3, 4]));
    }

    #[test]
    fn stubborn_is_a_single_edge() {
        let g = fixtures::stubborn();
        let s = sem(&g, "v", "w", 5);
        let (v, w) = (g.vertex("v").unwrap(), g.vertex("w").unwrap());
        assert_eq!(s.retained(), &VertexSet::from(vec![v, w]));
        assert_eq!(s.equations()[v], Equation::Sum(vec![Term { source: Source::Vertex(w), sign: Sign::Plus }]));
        assert_eq!(s.hidden().len(), 5);
    }

    #[test]
    fn mod_k_signs_cancel() {
        let minus = |s: &CouplingSem| {
            s.equations()
                .iter()
                .flat_map(|e| match e {
                    Equation::Sum(t) => t.clone(),
                    Equation::Input => vec![],
                })
                .filter(|t| t.sign == Sign::Minus)
                .count()
        };
        // every gadget tree edge joins the c side {b, c} to the d side {a, d}
        assert_eq!(minus(&sem(&fixtures::gadget(), "c", "d", 5)), 0);
        assert_eq!(minus(&sem(&fixtures::directed_pair(), "v", "w", 2)), 0);
        assert_eq!(minus(&sem(&fixtures::directed_pair(), "v", "w", 3)), 3);
        let s = sem(&fixtures::directed_pair(), "v", "w", 3);
        for idx in 0..3usize.pow(5) {
            let hs: Vec<usize> = (0..4).map(|i| idx / 3usize.pow(i) % 3).collect();
            let x = s.evaluate(&hs, Some(idx / 81)).unwrap();
            assert_eq!(x[4], x[5]);
        }
    }

    #[test]
    fn refuses_non_dense_pairs() {
        let g = fixtures::arid();
        let r = build_coupling(&g, g.vertex("a").unwrap(), g.vertex("e").unwrap(), 2, Preference::DirectedFirst);
        assert!(matches!(r, Err(Error::NotDenselyConnected { .. })));
        assert!(matches!(
            build_coupling(&g, 0, 1, 1, Preference::DirectedFirst),
            Err(Error::Parameter(_))
        ));
    }

    #[test]
    fn sampling_is_row_deterministic() {
        let s = sem(&fixtures::iv(), "a", "c", 2);
        let d = s.sample(50, 7, None).unwrap();
        assert!(d.rows.iter().all(|r| r[0] == r[2]));
        let e = s.sample(10, 7, None).unwrap();
        assert_eq!(&d.rows[..10], &e.rows[..]);
        assert!(s.sample(0, 7, None).unwrap().rows.is_empty());
        let fixed = s.sample(20, 3, Some(1)).unwrap();
        assert!(fixed.rows.iter().all(|r| r[0] == 1 && r[2] == 1));
        assert!(d.to_csv().unwrap().starts_with("a,b,c\n"));
    }

    #[test]
    fn seventeen_digits() {
        assert_eq!(significant17(1.0), "1.0000000000000000");
        assert_eq!(significant17(-0.00123), "-0.0012300000000000000");
        assert_eq!(significant17(0.0), "0.0000000000000000");
        assert_eq!(significant17(12345.5).parse::<f64>().unwrap(), 12345.5);
        let x = 0.1f64 + 0.2;
        assert_eq!(significant17(x).parse::<f64>().unwrap(), x);
    }
}
