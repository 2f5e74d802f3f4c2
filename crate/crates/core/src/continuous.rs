//! Continuous couplings: a uniform machine word travels through the binary
//! construction bit by bit, and each vertex applies a quantile transform.

use std::collections::HashMap;

use rand::RngCore;
use statrs::distribution::{ContinuousCDF, Exp, Normal, Uniform};

use crate::construction::{build_coupling, row_rng, Dataset};
use crate::error::{Error, Result};
use crate::graph::Admg;
use crate::projection::Preference;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Marginal {
    Normal { mean: f64, sd: f64 },
    Uniform { low: f64, high: f64 },
    Exponential { rate: f64 },
}

impl Default for Marginal {
    fn default() -> Self {
        Marginal::Normal { mean: 0.0, sd: 1.0 }
    }
}

impl Marginal {
    fn validate(&self) -> Result<()> {
        let ok = match *self {
            Marginal::Normal { mean, sd } => mean.is_finite() && sd.is_finite() && sd > 0.0,
            Marginal::Uniform { low, high } => low.is_finite() && high.is_finite() && low < high,
            Marginal::Exponential { rate } => rate.is_finite() && rate > 0.0,
        };
        if ok {
            Ok(())
        } else {
            Err(Error::Parameter(format!("invalid marginal {self:?}")))
        }
    }

    /// Inverse CDF on (0, 1).
    pub fn quantile(&self, u: f64) -> f64 {
        match *self {
            Marginal::Normal { mean, sd } => mean + sd * standard_normal().inverse_cdf(u),
            Marginal::Uniform { low, high } => Uniform::new(low, high).expect("validated").inverse_cdf(u),
            Marginal::Exponential { rate } => Exp::new(rate).expect("validated").inverse_cdf(u),
        }
    }

    pub fn cdf(&self, x: f64) -> f64 {
        match *self {
            Marginal::Normal { mean, sd } => standard_normal().cdf((x - mean) / sd),
            Marginal::Uniform { low, high } => Uniform::new(low, high).expect("validated").cdf(x),
            Marginal::Exponential { rate } => Exp::new(rate).expect("validated").cdf(x),
        }
    }

    /// Value at a standard-normal score; exact for normal marginals.
    fn at_score(&self, z: f64) -> f64 {
        match *self {
            Marginal::Normal { mean, sd } => mean + sd * z,
            _ => self.quantile(standard_normal().cdf(z).clamp(f64::MIN_POSITIVE, 1.0 - f64::EPSILON / 2.0)),
        }
    }
}

fn standard_normal() -> Normal {
    Normal::standard()
}

#[derive(Debug, Clone, PartialEq)]
pub struct ContinuousSpec {
    /// Marginal for vertices without an override.
    pub default_marginal: Marginal,
    pub marginals: HashMap<String, Marginal>,
    /// Gaussian-copula correlation between the pair; in (-1, 1).
    pub rho: f64,
    /// Bits per transmitted word, 1..=64.
    pub width: u32,
}

impl Default for ContinuousSpec {
    fn default() -> Self {
        ContinuousSpec {
            default_marginal: Marginal::default(),
            marginals: HashMap::new(),
            rho: 0.0,
            width: 64,
        }
    }
}

impl ContinuousSpec {
    pub fn with_rho(rho: f64) -> Self {
        ContinuousSpec {
            rho,
            ..Self::default()
        }
    }

    fn marginal(&self, name: &str) -> Marginal {
        self.marginals.get(name).copied().unwrap_or(self.default_marginal)
    }
}

/// Midpoint of the word's cell on the unit interval; never 0 or 1.
pub fn word_to_unit(word: u64, width: u32) -> f64 {
    // 52 bits keep the midpoint exactly representable
    if width > 52 {
        ((word >> (width - 52)) as f64 + 0.5) * 2f64.powi(-52)
    } else {
        (word as f64 + 0.5) * 2f64.powi(-(width as i32))
    }
}

/// Samples the binary coupling on words. The receiving end of the pair
/// emits the Gaussian-copula conditional quantile given the sender and an
/// extra independent uniform.
pub fn continuous_sample(g: &Admg, v: usize, w: usize, spec: &ContinuousSpec, n: usize, seed: u64) -> Result<Dataset<f64>> {
    if !(spec.rho > -1.0 && spec.rho < 1.0) {
        return Err(Error::Parameter(format!("rho must lie in (-1, 1), got {}", spec.rho)));
    }
    if !(1..=64).contains(&spec.width) {
        return Err(Error::Parameter(format!("word width must be in 1..=64, got {}", spec.width)));
    }
    spec.default_marginal.validate()?;
    for (name, m) in &spec.marginals {
        g.vertex(name)?;
        m.validate()?;
    }
    let sem = build_coupling(g, v, w, 2, Preference::DirectedFirst)?;
    let (receiver, sender) = (sem.receiver(), sem.sender());
    let marginals: Vec<Marginal> = sem.labels().iter().map(|l| spec.marginal(l.as_str())).collect();
    let mask = if spec.width == 64 { u64::MAX } else { (1u64 << spec.width) - 1 };
    let scale = (1.0 - spec.rho * spec.rho).sqrt();
    let normal = standard_normal();

    let mut hidden = vec![0u64; sem.hidden().len()];
    let mut rows = Vec::with_capacity(n);
    for i in 0..n {
        let mut rng = row_rng(seed, i);
        for h in hidden.iter_mut() {
            *h = rng.next_u64() & mask;
        }
        let input = rng.next_u64() & mask;
        let extra = word_to_unit(rng.next_u64(), 64);
        let words = sem.evaluate_words(&hidden, input)?;
        let row = (0..words.len())
            .map(|x| {
                if x == receiver {
                    let z_sender = normal.inverse_cdf(word_to_unit(words[sender], spec.width));
                    let z = spec.rho * z_sender + scale * normal.inverse_cdf(extra);
                    marginals[x].at_score(z)
                } else {
                    marginals[x].quantile(word_to_unit(words[x], spec.width))
                }
            })
            .collect();
        rows.push(row);
    }
    Ok(Dataset {
        columns: sem.labels().iter().map(|l| l.to_string()).collect(),
        rows,
    })
}
