//! Graph families: the linear-time benchmark family and random ADMGs.

use rand::Rng;

use crate::error::{Error, Result};
use crate::graph::Admg;

/// `y1..yk, z1..zk, v, w` with `y_i -> z_i -> v`, `w -> v`, bidirected
/// chains over the ys and over the zs, `y_k <-> z_k` and `y_1 <-> v`.
pub fn comp_graph(k: usize) -> Result<Admg> {
    if k == 0 {
        return Err(Error::Parameter("comp-graph needs k >= 1".into()));
    }
    let mut labels: Vec<String> = (1..=k).map(|i| format!("y{i}")).collect();
    labels.extend((1..=k).map(|i| format!("z{i}")));
    labels.push("v".into());
    labels.push("w".into());
    let (y, z, v, w) = (|i: usize| i - 1, |i: usize| k + i - 1, 2 * k, 2 * k + 1);
    let mut directed = Vec::with_capacity(2 * k + 1);
    let mut bidirected = Vec::with_capacity(2 * k);
    for i in 1..=k {
        directed.push((y(i), z(i)));
        directed.push((z(i), v));
        if i < k {
            bidirected.push((y(i), y(i + 1)));
            bidirected.push((z(i), z(i + 1)));
        }
    }
    directed.push((w, v));
    bidirected.push((y(k), z(k)));
    bidirected.push((y(1), v));
    Admg::new(
        labels.iter().map(|s| crate::vertex::Label::new(s)).collect::<Result<_>>()?,
        &directed,
        &bidirected,
    )
}

/// Labels `x1..xn`; directed edges only from earlier to later vertices.
pub fn random_admg<R: Rng>(n: usize, p_directed: f64, p_bidirected: f64, rng: &mut R) -> Admg {
    let mut directed = Vec::new();
    let mut bidirected = Vec::new();
    for a in 0..n {
        for b in a + 1..n {
            if rng.random_bool(p_directed) {
                directed.push((a, b));
            }
            if rng.random_bool(p_bidirected) {
                bidirected.push((a, b));
            }
        }
    }
    from_edges(n, &directed, &bidirected)
}

/// The ADMG on `n` vertices encoded by two bit masks over the ordered
/// pairs `(a, b)`, `a < b`, in lexicographic order. Every ADMG is
/// isomorphic to one of these.
pub fn admg_from_code(n: usize, directed: u64, bidirected: u64) -> Admg {
    let pairs: Vec<(usize, usize)> = (0..n).flat_map(|a| (a + 1..n).map(move |b| (a, b))).collect();
    let pick = |code: u64| -> Vec<(usize, usize)> {
        pairs.iter().enumerate().filter(|&(i, _)| code >> i & 1 == 1).map(|(_, &p)| p).collect()
    };
    from_edges(n, &pick(directed), &pick(bidirected))
}

/// Number of vertex pairs; codes range over `0..1 << pair_count(n)`.
pub fn pair_count(n: usize) -> usize {
    n * n.saturating_sub(1) / 2
}

fn from_edges(n: usize, directed: &[(usize, usize)], bidirected: &[(usize, usize)]) -> Admg {
    let labels = (1..=n)
        .map(|i| crate::vertex::Label::new(&format!("x{i}")).expect("valid label"))
        .collect();
    Admg::new(labels, directed, bidirected).expect("forward edges form an ADMG")
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn comp_graph_shape() {
        let g = comp_graph(3).unwrap();
        assert_eq!(g.n(), 8);
        assert_eq!(g.directed_edges().len(), 7);
        assert_eq!(g.bidirected_edges().len(), 6);
        assert!(g.has_bidirected(g.vertex("y1").unwrap(), g.vertex("v").unwrap()));
        assert!(g.has_bidirected(g.vertex("y3").unwrap(), g.vertex("z3").unwrap()));
        assert!(comp_graph(0).is_err());
        assert_eq!(comp_graph(1).unwrap().n(), 4);
    }

    #[test]
    fn codes_cover_edges() {
        assert_eq!(pair_count(4), 6);
        let g = admg_from_code(3, 0b111, 0b001);
        assert_eq!(g.directed_edges(), vec![(0, 1), (0, 2), (1, 2)]);
        assert_eq!(g.bidirected_edges(), vec![(0, 1)]);
    }

    #[test]
    fn random_graphs_are_reproducible() {
        let a = random_admg(8, 0.3, 0.3, &mut ChaCha8Rng::seed_from_u64(4));
        let b = random_admg(8, 0.3, 0.3, &mut ChaCha8Rng::seed_from_u64(4));
        assert_eq!(a, b);
        assert!(a.is_dag() || !a.bidirected_edges().is_empty());
    }
}
