//! Exact discrete kernels q(x_V | x_W) with rational entries.

use std::io::Read;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use rand::Rng;

use crate::error::{Error, Result};
use crate::graph::Admg;

/// A discrete variable with states `0..card`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Variable {
    pub name: String,
    pub card: usize,
}

impl Variable {
    pub fn new(name: impl Into<String>, card: usize) -> Self {
        Variable {
            name: name.into(),
            card,
        }
    }
}

/// Largest table (contexts × random assignments) a kernel may hold.
pub const MAX_CELLS: usize = 1 << 24;

/// Mixed-radix index with the first variable most significant.
pub(crate) fn encode(cards: &[usize], states: &[usize]) -> usize {
    cards.iter().zip(states).fold(0, |acc, (&c, &s)| acc * c + s)
}

pub(crate) fn decode(cards: &[usize], mut index: usize, out: &mut [usize]) {
    for (slot, &c) in out.iter_mut().zip(cards).rev() {
        *slot = index % c;
        index /= c;
    }
}

fn cells(vars: &[Variable]) -> Result<usize> {
    vars.iter().try_fold(1usize, |acc, v| {
        acc.checked_mul(v.card)
            .filter(|&n| n <= MAX_CELLS)
            .ok_or_else(|| Error::SizeGuard(format!("table exceeds {MAX_CELLS} cells")))
    })
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DiscreteKernel {
    random: Vec<Variable>,
    fixed: Vec<Variable>,
    /// `rows[context][assignment]`.
    rows: Vec<Vec<BigRational>>,
}

impl DiscreteKernel {
    /// Validates shape, nonnegativity and that every context sums to one.
    pub fn new(random: Vec<Variable>, fixed: Vec<Variable>, rows: Vec<Vec<BigRational>>) -> Result<Self> {
        let k = Self::unchecked(random, fixed, rows)?;
        for (c, row) in k.rows.iter().enumerate() {
            if row.iter().any(|p| p.is_negative()) {
                return Err(Error::Distribution(format!("negative probability in context {c}")));
            }
            let total: BigRational = row.iter().sum();
            if !total.is_one() {
                return Err(Error::Distribution(format!("context {c} sums to {total}, expected 1")));
            }
        }
        Ok(k)
    }

    /// Checks shape only; rows of zero-mass contexts may sum to less than one.
    pub(crate) fn unchecked(random: Vec<Variable>, fixed: Vec<Variable>, rows: Vec<Vec<BigRational>>) -> Result<Self> {
        let names: Vec<&str> = random.iter().chain(&fixed).map(|v| v.name.as_str()).collect();
        for (i, n) in names.iter().enumerate() {
            if names[..i].contains(n) {
                return Err(Error::Dimension(format!("variable `{n}` appears twice")));
            }
        }
        if let Some(v) = random.iter().chain(&fixed).find(|v| v.card == 0) {
            return Err(Error::Dimension(format!("variable `{}` has no states", v.name)));
        }
        let width = cells(&random)?;
        let height = cells(&fixed)?;
        if rows.len() != height || rows.iter().any(|r| r.len() != width) {
            return Err(Error::Dimension(format!(
                "expected {height} context(s) of {width} entries"
            )));
        }
        Ok(DiscreteKernel { random, fixed, rows })
    }

    /// A joint distribution (no fixed variables).
    pub fn joint(random: Vec<Variable>, probs: Vec<BigRational>) -> Result<Self> {
        Self::new(random, Vec::new(), vec![probs])
    }

    pub fn uniform(random: Vec<Variable>) -> Result<Self> {
        let width = cells(&random)?;
        let p = BigRational::new(BigInt::one(), BigInt::from(width));
        Self::joint(random, vec![p; width])
    }

    pub fn random_vars(&self) -> &[Variable] {
        &self.random
    }

    pub fn fixed_vars(&self) -> &[Variable] {
        &self.fixed
    }

    pub fn rows(&self) -> &[Vec<BigRational>] {
        &self.rows
    }

    pub fn random_cards(&self) -> Vec<usize> {
        self.random.iter().map(|v| v.card).collect()
    }

    pub fn fixed_cards(&self) -> Vec<usize> {
        self.fixed.iter().map(|v| v.card).collect()
    }

    pub fn random_position(&self, name: &str) -> Option<usize> {
        self.random.iter().position(|v| v.name == name)
    }

    pub fn fixed_position(&self, name: &str) -> Option<usize> {
        self.fixed.iter().position(|v| v.name == name)
    }

    /// q(random | fixed) at explicit states.
    pub fn prob(&self, random: &[usize], fixed: &[usize]) -> Result<&BigRational> {
        let (rc, fc) = (self.random_cards(), self.fixed_cards());
        if random.len() != rc.len() || fixed.len() != fc.len() {
            return Err(Error::Assignment("wrong number of states".into()));
        }
        if random.iter().zip(&rc).chain(fixed.iter().zip(&fc)).any(|(s, c)| s >= c) {
            return Err(Error::Assignment("state out of range".into()));
        }
        Ok(&self.rows[encode(&fc, fixed)][encode(&rc, random)])
    }

    pub fn is_normalized(&self) -> bool {
        self.rows.iter().all(|r| r.iter().sum::<BigRational>().is_one())
    }

    /// Sums out every random variable not in `keep` (positions, any order).
    /// The result lists kept variables in their original relative order.
    pub fn marginal(&self, keep: &[usize]) -> Result<DiscreteKernel> {
        if let Some(&p) = keep.iter().find(|&&p| p >= self.random.len()) {
            return Err(Error::Dimension(format!("no random variable at position {p}")));
        }
        let mut keep: Vec<usize> = keep.to_vec();
        keep.sort_unstable();
        keep.dedup();
        let cards = self.random_cards();
        let kept: Vec<Variable> = keep.iter().map(|&p| self.random[p].clone()).collect();
        let kept_cards: Vec<usize> = kept.iter().map(|v| v.card).collect();
        let width = cells(&kept)?;
        let mut states = vec![0; cards.len()];
        let mut sub = vec![0; keep.len()];
        let rows = self
            .rows
            .iter()
            .map(|row| {
                let mut out = vec![BigRational::zero(); width];
                for (i, p) in row.iter().enumerate() {
                    if p.is_zero() {
                        continue;
                    }
                    decode(&cards, i, &mut states);
                    for (s, &k) in sub.iter_mut().zip(&keep) {
                        *s = states[k];
                    }
                    out[encode(&kept_cards, &sub)] += p;
                }
                out
            })
            .collect();
        Self::unchecked(kept, self.fixed.clone(), rows)
    }

    /// Largest absolute entry-wise difference against a kernel over the same variables.
    pub fn max_deviation(&self, other: &DiscreteKernel) -> Result<BigRational> {
        if self.random != other.random || self.fixed != other.fixed {
            return Err(Error::Dimension("kernels range over different variables".into()));
        }
        Ok(self
            .rows
            .iter()
            .flatten()
            .zip(other.rows.iter().flatten())
            .map(|(a, b)| (a - b).abs())
            .max()
            .unwrap_or_else(BigRational::zero))
    }

    /// Reads a joint table: one column per variable, final column `p`.
    ///
    /// Cardinalities are one more than the largest state seen; absent rows have mass zero.
    pub fn from_csv<R: Read>(reader: R) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
        let headers = rdr.headers()?.clone();
        let cols: Vec<&str> = headers.iter().collect();
        if cols.last() != Some(&"p") || cols.len() < 2 {
            return Err(Error::Distribution("expected variable columns followed by `p`".into()));
        }
        let names: Vec<String> = cols[..cols.len() - 1].iter().map(|s| s.to_string()).collect();
        let mut entries: Vec<(Vec<usize>, BigRational)> = Vec::new();
        for (line, rec) in rdr.records().enumerate() {
            let rec = rec?;
            let mut states = Vec::with_capacity(names.len());
            for field in rec.iter().take(names.len()) {
                states.push(field.parse::<usize>().map_err(|_| {
                    Error::Distribution(format!("row {}: invalid state `{field}`", line + 1))
                })?);
            }
            let p = parse_probability(rec.get(names.len()).unwrap_or(""))
                .map_err(|e| Error::Distribution(format!("row {}: {e}", line + 1)))?;
            entries.push((states, p));
        }
        let mut cards = vec![1usize; names.len()];
        for (states, _) in &entries {
            for (c, &s) in cards.iter_mut().zip(states) {
                *c = (*c).max(s + 1);
            }
        }
        let vars: Vec<Variable> = names.into_iter().zip(&cards).map(|(n, &c)| Variable::new(n, c)).collect();
        let mut probs = vec![BigRational::zero(); cells(&vars)?];
        let mut seen = vec![false; probs.len()];
        for (states, p) in entries {
            let i = encode(&cards, &states);
            if std::mem::replace(&mut seen[i], true) {
                return Err(Error::Distribution(format!("assignment {states:?} listed twice")));
            }
            probs[i] = p;
        }
        Self::joint(vars, probs)
    }

    /// Writes a joint table in the format read by [`DiscreteKernel::from_csv`].
    pub fn to_csv(&self) -> Result<String> {
        if !self.fixed.is_empty() {
            return Err(Error::Dimension("only joint distributions serialize to CSV".into()));
        }
        let mut w = csv::Writer::from_writer(Vec::new());
        let mut header: Vec<&str> = self.random.iter().map(|v| v.name.as_str()).collect();
        header.push("p");
        w.write_record(&header)?;
        let cards = self.random_cards();
        let mut states = vec![0; cards.len()];
        for (i, p) in self.rows[0].iter().enumerate() {
            if p.is_zero() {
                continue;
            }
            decode(&cards, i, &mut states);
            let mut rec: Vec<String> = states.iter().map(|s| s.to_string()).collect();
            rec.push(p.to_string());
            w.write_record(&rec)?;
        }
        let bytes = w.into_inner().map_err(|e| Error::Io(e.to_string()))?;
        String::from_utf8(bytes).map_err(|e| Error::Io(e.to_string()))
    }
}

/// Parses `num/den`, an integer, or a decimal such as `0.125` or `1e-3`, exactly.
pub fn parse_probability(s: &str) -> std::result::Result<BigRational, String> {
    let s = s.trim();
    let bad = || format!("invalid probability `{s}`");
    if let Some((n, d)) = s.split_once('/') {
        let n: BigInt = n.trim().parse().map_err(|_| bad())?;
        let d: BigInt = d.trim().parse().map_err(|_| bad())?;
        if d.is_zero() {
            return Err(bad());
        }
        return Ok(BigRational::new(n, d));
    }
    let (mantissa, exp) = match s.find(['e', 'E']) {
        Some(i) => (&s[..i], s[i + 1..].parse::<i32>().map_err(|_| bad())?),
        None => (s, 0),
    };
    let (int, frac) = mantissa.split_once('.').unwrap_or((mantissa, ""));
    if int.is_empty() && frac.is_empty() {
        return Err(bad());
    }
    let digits = format!("{int}{frac}");
    let numer: BigInt = digits.parse().map_err(|_| bad())?;
    let scale = exp - frac.len() as i32;
    let ten = BigInt::from(10);
    Ok(if scale >= 0 {
        BigRational::from_integer(numer * num_traits::pow(ten, scale as usize))
    } else {
        BigRational::new(numer, num_traits::pow(ten, (-scale) as usize))
    })
}

/// Conditional tables of a DAG: `cpts[v][parent_index * card_v + state]`,
/// parents in the DAG's (sorted) parent order.
pub fn joint_from_cpts(dag: &Admg, cards: &[usize], cpts: &[Vec<BigRational>]) -> Result<DiscreteKernel> {
    if !dag.is_dag() {
        return Err(Error::Precondition("conditional tables need a DAG".into()));
    }
    if cards.len() != dag.n() || cpts.len() != dag.n() {
        return Err(Error::Dimension("one cardinality and one table per vertex".into()));
    }
    let vars: Vec<Variable> = (0..dag.n())
        .map(|v| Variable::new(dag.label(v).as_str(), cards[v]))
        .collect();
    let width = cells(&vars)?;
    let mut states = vec![0; dag.n()];
    let mut probs = Vec::with_capacity(width);
    for i in 0..width {
        decode(cards, i, &mut states);
        let mut p = BigRational::one();
        for v in 0..dag.n() {
            let pa: Vec<usize> = dag.parents(v).iter().map(|&u| states[u]).collect();
            let pa_cards: Vec<usize> = dag.parents(v).iter().map(|&u| cards[u]).collect();
            let idx = encode(&pa_cards, &pa) * cards[v] + states[v];
            let entry = cpts[v]
                .get(idx)
                .ok_or_else(|| Error::Dimension(format!("table for `{}` is too short", dag.label(v))))?;
            p *= entry;
            if p.is_zero() {
                break;
            }
        }
        probs.push(p);
    }
    DiscreteKernel::joint(vars, probs)
}

/// Strictly positive random conditional tables with small denominators.
pub fn random_cpts<R: Rng>(dag: &Admg, cards: &[usize], rng: &mut R) -> Vec<Vec<BigRational>> {
    (0..dag.n())
        .map(|v| {
            let contexts: usize = dag.parents(v).iter().map(|&u| cards[u]).product();
            (0..contexts)
                .flat_map(|_| {
                    let weights: Vec<i64> = (0..cards[v]).map(|_| rng.random_range(1..=9)).collect();
                    let total: i64 = weights.iter().sum();
                    weights
                        .into_iter()
                        .map(move |w| BigRational::new(BigInt::from(w), BigInt::from(total)))
                })
                .collect()
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::format::parse_admg;

    fn r(n: i64, d: i64) -> BigRational {
        BigRational::new(n.into(), d.into())
    }

    #[test]
    fn mixed_radix() {
        let cards = [2, 3, 2];
        let mut out = [0; 3];
        for i in 0..12 {
            decode(&cards, i, &mut out);
            assert_eq!(encode(&cards, &out), i);
        }
        decode(&cards, 5, &mut out);
        assert_eq!(out, [0, 2, 1]);
    }

    #[test]
    fn validation() {
        let vars = vec![Variable::new("x", 2)];
        assert!(DiscreteKernel::joint(vars.clone(), vec![r(1, 2), r(1, 2)]).is_ok());
        assert!(matches!(
            DiscreteKernel::joint(vars.clone(), vec![r(1, 2), r(1, 3)]),
            Err(Error::Distribution(_))
        ));
        assert!(matches!(
            DiscreteKernel::joint(vars.clone(), vec![r(3, 2), r(-1, 2)]),
            Err(Error::Distribution(_))
        ));
        assert!(matches!(
            DiscreteKernel::joint(vars, vec![r(1, 1)]),
            Err(Error::Dimension(_))
        ));
    }

    #[test]
    fn probabilities_parse_exactly() {
        assert_eq!(parse_probability("1/4").unwrap(), r(1, 4));
        assert_eq!(parse_probability("0.125").unwrap(), r(1, 8));
        assert_eq!(parse_probability("25e-2").unwrap(), r(1, 4));
        assert_eq!(parse_probability("1").unwrap(), r(1, 1));
        assert!(parse_probability("x").is_err());
        assert!(parse_probability("1/0").is_err());
    }

    #[test]
    fn csv_round_trip() {
        let text = "a,b,p\n0,0,1/4\n0,1,0.25\n1,1,1/2\n";
        let k = DiscreteKernel::from_csv(text.as_bytes()).unwrap();
        assert_eq!(k.prob(&[1, 0], &[]).unwrap(), &r(0, 1));
        assert_eq!(k.prob(&[1, 1], &[]).unwrap(), &r(1, 2));
        let back = DiscreteKernel::from_csv(k.to_csv().unwrap().as_bytes()).unwrap();
        assert_eq!(back, k);
        assert!(DiscreteKernel::from_csv("a,p\n0,1/2\n".as_bytes()).is_err());
    }

    #[test]
    fn marginals_and_cpts() {
        let dag = parse_admg("vertices: x y\nx -> y\n").unwrap();
        let cpts = vec![vec![r(1, 3), r(2, 3)], vec![r(1, 2), r(1, 2), r(1, 4), r(3, 4)]];
        let j = joint_from_cpts(&dag, &[2, 2], &cpts).unwrap();
        assert_eq!(j.prob(&[1, 1], &[]).unwrap(), &r(1, 2));
        let m = j.marginal(&[1]).unwrap();
        assert_eq!(m.rows()[0], vec![r(1, 6) + r(1, 6), r(1, 6) + r(1, 2)]);
        assert!(m.is_normalized());
    }
}
