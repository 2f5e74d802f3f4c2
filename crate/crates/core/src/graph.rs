//! Acyclic directed mixed graphs and their conditional (CADMG) variant.
//!
//! Vertices are addressed by index in declaration order; labels are kept
//! alongside for lookup and output. Directed and bidirected adjacency are
//! stored independently, so a bow (`a -> b` together with `a <-> b`) is just
//! one entry in each list.

use std::cmp::Reverse;
use std::collections::{BinaryHeap, HashMap, VecDeque};

use crate::error::{Error, Result};
use crate::vertex::{Label, VertexSet};

/// Genealogical relation selector for [`Admg::relatives`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Relation {
    Parents,
    Children,
    Ancestors,
    Descendants,
    Siblings,
    District,
}

#[derive(Debug, Clone)]
pub struct Admg {
    labels: Vec<Label>,
    index: HashMap<String, usize>,
    parents: Vec<Vec<usize>>,
    children: Vec<Vec<usize>>,
    siblings: Vec<Vec<usize>>,
}

impl PartialEq for Admg {
    fn eq(&self, other: &Self) -> bool {
        self.labels == other.labels
            && self.parents == other.parents
            && self.siblings == other.siblings
    }
}

impl Eq for Admg {}

impl Admg {
    /// Builds a graph from labels and index-based edge lists, validating every invariant.
    pub fn new(
        labels: Vec<Label>,
        directed: &[(usize, usize)],
        bidirected: &[(usize, usize)],
    ) -> Result<Self> {
        let mut index = HashMap::with_capacity(labels.len());
        for (i, l) in labels.iter().enumerate() {
            if index.insert(l.as_str().to_string(), i).is_some() {
                return Err(Error::DuplicateVertex(l.to_string()));
            }
        }
        let n = labels.len();
        let name = |i: usize| -> String {
            labels
                .get(i)
                .map(|l| l.to_string())
                .unwrap_or_else(|| format!("#{i}"))
        };
        let mut parents = vec![Vec::new(); n];
        let mut children = vec![Vec::new(); n];
        let mut siblings = vec![Vec::new(); n];
        for &(a, b) in directed {
            if a >= n {
                return Err(Error::UnknownVertex(name(a)));
            }
            if b >= n {
                return Err(Error::UnknownVertex(name(b)));
            }
            if a == b {
                return Err(Error::SelfLoop(name(a)));
            }
            children[a].push(b);
            parents[b].push(a);
        }
        for &(a, b) in bidirected {
            if a >= n {
                return Err(Error::UnknownVertex(name(a)));
            }
            if b >= n {
                return Err(Error::UnknownVertex(name(b)));
            }
            if a == b {
                return Err(Error::SelfLoop(name(a)));
            }
            siblings[a].push(b);
            siblings[b].push(a);
        }
        for v in 0..n {
            for (list, arrow) in [(&mut parents[v], "->"), (&mut siblings[v], "<->")] {
                list.sort_unstable();
                if let Some(w) = list.windows(2).find(|w| w[0] == w[1]) {
                    let (a, b) = if arrow == "->" { (w[0], v) } else { (w[0].min(v), w[0].max(v)) };
                    return Err(Error::DuplicateEdge(format!("{} {} {}", name(a), arrow, name(b))));
                }
            }
            children[v].sort_unstable();
        }
        let g = Admg {
            labels,
            index,
            parents,
            children,
            siblings,
        };
        if let Some(v) = g.find_cycle_vertex() {
            return Err(Error::DirectedCycle(g.labels[v].to_string()));
        }
        Ok(g)
    }

    /// Convenience constructor over string labels.
    pub fn from_labels(
        vertices: &[&str],
        directed: &[(&str, &str)],
        bidirected: &[(&str, &str)],
    ) -> Result<Self> {
        let labels = vertices
            .iter()
            .map(|s| Label::new(s))
            .collect::<Result<Vec<_>>>()?;
        let pos: HashMap<&str, usize> = vertices.iter().enumerate().map(|(i, s)| (*s, i)).collect();
        let look = |s: &str| pos.get(s).copied().ok_or_else(|| Error::UnknownVertex(s.to_string()));
        let d = directed
            .iter()
            .map(|&(a, b)| Ok((look(a)?, look(b)?)))
            .collect::<Result<Vec<_>>>()?;
        let bi = bidirected
            .iter()
            .map(|&(a, b)| Ok((look(a)?, look(b)?)))
            .collect::<Result<Vec<_>>>()?;
        Admg::new(labels, &d, &bi)
    }

    pub fn n(&self) -> usize {
        self.labels.len()
    }

    pub fn label(&self, v: usize) -> &Label {
        &self.labels[v]
    }

    pub fn labels(&self) -> &[Label] {
        &self.labels
    }

    pub fn vertex(&self, label: &str) -> Result<usize> {
        self.index
            .get(label)
            .copied()
            .ok_or_else(|| Error::UnknownVertex(label.to_string()))
    }

    pub fn vertex_set<S: AsRef<str>>(&self, labels: &[S]) -> Result<VertexSet> {
        labels.iter().map(|l| self.vertex(l.as_ref())).collect()
    }

    /// Renders a set as space-separated labels in declaration order.
    pub fn names(&self, set: &VertexSet) -> Vec<String> {
        set.iter().map(|v| self.labels[v].to_string()).collect()
    }

    pub fn all(&self) -> VertexSet {
        (0..self.n()).collect()
    }

    pub fn parents(&self, v: usize) -> &[usize] {
        &self.parents[v]
    }

    pub fn children(&self, v: usize) -> &[usize] {
        &self.children[v]
    }

    pub fn siblings(&self, v: usize) -> &[usize] {
        &self.siblings[v]
    }

    pub fn has_directed(&self, a: usize, b: usize) -> bool {
        self.children[a].binary_search(&b).is_ok()
    }

    pub fn has_bidirected(&self, a: usize, b: usize) -> bool {
        self.siblings[a].binary_search(&b).is_ok()
    }

    pub fn adjacent(&self, a: usize, b: usize) -> bool {
        self.has_directed(a, b) || self.has_directed(b, a) || self.has_bidirected(a, b)
    }

    /// Directed edges sorted by (tail, head).
    pub fn directed_edges(&self) -> Vec<(usize, usize)> {
        (0..self.n())
            .flat_map(|a| self.children[a].iter().map(move |&b| (a, b)))
            .collect()
    }

    /// Bidirected edges as `(low, high)` pairs, sorted.
    pub fn bidirected_edges(&self) -> Vec<(usize, usize)> {
        (0..self.n())
            .flat_map(|a| {
                self.siblings[a]
                    .iter()
                    .filter(move |&&b| a < b)
                    .map(move |&b| (a, b))
            })
            .collect()
    }

    pub fn is_dag(&self) -> bool {
        self.siblings.iter().all(|s| s.is_empty())
    }

    fn check(&self, set: &VertexSet) -> Result<()> {
        match set.iter().find(|&v| v >= self.n()) {
            Some(v) => Err(Error::UnknownVertex(format!("#{v}"))),
            None => Ok(()),
        }
    }

    pub fn relatives(&self, set: &VertexSet, kind: Relation) -> Result<VertexSet> {
        self.check(set)?;
        let all = vec![true; self.n()];
        let mask = set.to_mask(self.n());
        let out = match kind {
            Relation::Parents => {
                return Ok(set.iter().flat_map(|v| self.parents[v].iter().copied()).collect())
            }
            Relation::Children => {
                return Ok(set.iter().flat_map(|v| self.children[v].iter().copied()).collect())
            }
            Relation::Siblings => {
                return Ok(set.iter().flat_map(|v| self.siblings[v].iter().copied()).collect())
            }
            Relation::Ancestors => self.ancestors_within(&all, &mask),
            Relation::Descendants => self.descendants_within(&all, &mask),
            Relation::District => self.district_within(&all, &mask),
        };
        Ok(VertexSet::from_mask(&out))
    }

    pub fn parents_of(&self, set: &VertexSet) -> VertexSet {
        set.iter().flat_map(|v| self.parents[v].iter().copied()).collect()
    }

    pub fn ancestors(&self, set: &VertexSet) -> VertexSet {
        VertexSet::from_mask(&self.ancestors_within(&vec![true; self.n()], &set.to_mask(self.n())))
    }

    pub fn descendants(&self, set: &VertexSet) -> VertexSet {
        VertexSet::from_mask(&self.descendants_within(&vec![true; self.n()], &set.to_mask(self.n())))
    }

    pub fn district(&self, v: usize) -> VertexSet {
        let mut seed = vec![false; self.n()];
        seed[v] = true;
        VertexSet::from_mask(&self.district_within(&vec![true; self.n()], &seed))
    }

    /// All districts, each listed once, ordered by their smallest member.
    pub fn districts(&self) -> Vec<VertexSet> {
        self.districts_within(&vec![true; self.n()])
    }

    pub(crate) fn districts_within(&self, within: &[bool]) -> Vec<VertexSet> {
        let mut seen = vec![false; self.n()];
        let mut out = Vec::new();
        for v in 0..self.n() {
            if !within[v] || seen[v] {
                continue;
            }
            let mut seed = vec![false; self.n()];
            seed[v] = true;
            let d = self.district_within(within, &seed);
            for (s, &m) in seen.iter_mut().zip(&d) {
                *s |= m;
            }
            out.push(VertexSet::from_mask(&d));
        }
        out
    }

    /// Reflexive ancestors of `seeds` in the subgraph induced by `within`.
    pub(crate) fn ancestors_within(&self, within: &[bool], seeds: &[bool]) -> Vec<bool> {
        self.flood(within, seeds, |v| &self.parents[v])
    }

    pub(crate) fn descendants_within(&self, within: &[bool], seeds: &[bool]) -> Vec<bool> {
        self.flood(within, seeds, |v| &self.children[v])
    }

    pub(crate) fn district_within(&self, within: &[bool], seeds: &[bool]) -> Vec<bool> {
        self.flood(within, seeds, |v| &self.siblings[v])
    }

    fn flood<'a, F>(&'a self, within: &[bool], seeds: &[bool], next: F) -> Vec<bool>
    where
        F: Fn(usize) -> &'a [usize],
    {
        let mut out = vec![false; self.n()];
        let mut stack: Vec<usize> = (0..self.n()).filter(|&v| seeds[v] && within[v]).collect();
        for &v in &stack {
            out[v] = true;
        }
        while let Some(v) = stack.pop() {
            for &u in next(v) {
                if within[u] && !out[u] {
                    out[u] = true;
                    stack.push(u);
                }
            }
        }
        out
    }

    pub fn induced_subgraph(&self, set: &VertexSet) -> Result<Admg> {
        self.check(set)?;
        let keep: Vec<usize> = set.iter().collect();
        let mut new_index = vec![usize::MAX; self.n()];
        for (i, &v) in keep.iter().enumerate() {
            new_index[v] = i;
        }
        let labels = keep.iter().map(|&v| self.labels[v].clone()).collect();
        let directed: Vec<_> = self
            .directed_edges()
            .into_iter()
            .filter(|&(a, b)| new_index[a] != usize::MAX && new_index[b] != usize::MAX)
            .map(|(a, b)| (new_index[a], new_index[b]))
            .collect();
        let bidirected: Vec<_> = self
            .bidirected_edges()
            .into_iter()
            .filter(|&(a, b)| new_index[a] != usize::MAX && new_index[b] != usize::MAX)
            .map(|(a, b)| (new_index[a], new_index[b]))
            .collect();
        Admg::new(labels, &directed, &bidirected)
    }

    /// Topological order; ties are broken by declaration order.
    pub fn topological_order(&self) -> Vec<usize> {
        self.kahn().0
    }

    /// Position of each vertex in [`Admg::topological_order`].
    pub fn topological_rank(&self) -> Vec<usize> {
        let mut rank = vec![0; self.n()];
        for (i, v) in self.topological_order().into_iter().enumerate() {
            rank[v] = i;
        }
        rank
    }

    fn kahn(&self) -> (Vec<usize>, Vec<usize>) {
        let mut indeg: Vec<usize> = self.parents.iter().map(Vec::len).collect();
        let mut heap: BinaryHeap<Reverse<usize>> =
            (0..self.n()).filter(|&v| indeg[v] == 0).map(Reverse).collect();
        let mut order = Vec::with_capacity(self.n());
        while let Some(Reverse(v)) = heap.pop() {
            order.push(v);
            for &c in &self.children[v] {
                indeg[c] -= 1;
                if indeg[c] == 0 {
                    heap.push(Reverse(c));
                }
            }
        }
        (order, indeg)
    }

    fn find_cycle_vertex(&self) -> Option<usize> {
        let (order, indeg) = self.kahn();
        if order.len() == self.n() {
            return None;
        }
        // every leftover vertex keeps a leftover parent; walking parents must revisit
        let mut v = (0..self.n()).find(|&v| indeg[v] > 0)?;
        let mut visited = vec![false; self.n()];
        while !visited[v] {
            visited[v] = true;
            v = *self.parents[v].iter().find(|&&p| indeg[p] > 0)?;
        }
        Some(v)
    }

    pub fn bidirected_connected(&self, set: &VertexSet) -> Result<bool> {
        self.check(set)?;
        let first = set.iter().next().ok_or(Error::EmptySet)?;
        let within = set.to_mask(self.n());
        let mut seed = vec![false; self.n()];
        seed[first] = true;
        let reached = self.district_within(&within, &seed);
        Ok(set.iter().all(|v| reached[v]))
    }

    /// m-separation of `a` and `b` given `c`, by reachability over
    /// (vertex, arrowhead-at-vertex) states.
    pub fn m_separated(&self, a: &VertexSet, b: &VertexSet, c: &VertexSet) -> Result<bool> {
        self.check(a)?;
        self.check(b)?;
        self.check(c)?;
        for (x, y) in [(a, b), (a, c), (b, c)] {
            if let Some(v) = x.iter().find(|&v| y.contains(v)) {
                return Err(Error::Overlap(self.labels[v].to_string()));
            }
        }
        let n = self.n();
        let in_c = c.to_mask(n);
        let in_b = b.to_mask(n);
        let an_c = self.ancestors_within(&vec![true; n], &in_c);

        // state index: 2 * v + (arrived with arrowhead at v)
        let mut seen = vec![false; 2 * n];
        let mut queue: VecDeque<(usize, Option<bool>)> = a.iter().map(|v| (v, None)).collect();
        while let Some((v, arrived)) = queue.pop_front() {
            // leaving edges: (next vertex, arrowhead at v, arrowhead at next)
            let exits = self.children[v]
                .iter()
                .map(|&u| (u, false, true))
                .chain(self.parents[v].iter().map(|&u| (u, true, false)))
                .chain(self.siblings[v].iter().map(|&u| (u, true, true)));
            for (u, head_here, head_there) in exits {
                if let Some(head_in) = arrived {
                    let collider = head_in && head_here;
                    let open = if collider { an_c[v] } else { !in_c[v] };
                    if !open {
                        continue;
                    }
                }
                if in_b[u] {
                    return Ok(false);
                }
                let s = 2 * u + head_there as usize;
                if !seen[s] {
                    seen[s] = true;
                    queue.push_back((u, Some(head_there)));
                }
            }
        }
        Ok(true)
    }
}

/// An ADMG whose vertices are split into random and fixed (context) vertices.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Cadmg {
    graph: Admg,
    fixed: Vec<bool>,
}

impl Cadmg {
    pub fn new(graph: Admg, fixed: &VertexSet) -> Result<Self> {
        if let Some(v) = fixed.iter().find(|&v| v >= graph.n()) {
            return Err(Error::UnknownVertex(format!("#{v}")));
        }
        for w in fixed {
            if !graph.parents(w).is_empty() || !graph.siblings(w).is_empty() {
                return Err(Error::FixedWithIncoming(graph.label(w).to_string()));
            }
        }
        let mask = fixed.to_mask(graph.n());
        Ok(Cadmg { graph, fixed: mask })
    }

    pub fn from_admg(graph: Admg) -> Self {
        let n = graph.n();
        Cadmg {
            graph,
            fixed: vec![false; n],
        }
    }

    pub fn graph(&self) -> &Admg {
        &self.graph
    }

    pub fn into_graph(self) -> Admg {
        self.graph
    }

    pub fn is_fixed(&self, v: usize) -> bool {
        self.fixed[v]
    }

    pub fn fixed(&self) -> VertexSet {
        VertexSet::from_mask(&self.fixed)
    }

    pub fn random(&self) -> VertexSet {
        (0..self.graph.n()).filter(|&v| !self.fixed[v]).collect()
    }

    pub(crate) fn random_mask(&self) -> Vec<bool> {
        self.fixed.iter().map(|f| !f).collect()
    }

    pub fn relatives(&self, set: &VertexSet, kind: Relation) -> Result<VertexSet> {
        let out = self.graph.relatives(set, kind)?;
        Ok(match kind {
            Relation::District => out.iter().filter(|&v| !self.fixed[v]).collect(),
            _ => out,
        })
    }

    /// District of a random vertex; fixed vertices never belong to a district.
    pub fn district(&self, v: usize) -> VertexSet {
        if self.fixed[v] {
            return VertexSet::new();
        }
        self.graph.district(v)
    }

    pub fn districts(&self) -> Vec<VertexSet> {
        self.graph.districts_within(&self.random_mask())
    }

    pub fn markov_blanket(&self, v: usize) -> Result<VertexSet> {
        let g = &self.graph;
        if v >= g.n() {
            return Err(Error::UnknownVertex(format!("#{v}")));
        }
        if self.fixed[v] {
            return Err(Error::NotRandom(g.label(v).to_string()));
        }
        let dis = self.district(v);
        if g.children(v).iter().any(|&c| dis.contains(c)) {
            return Err(Error::Precondition(format!(
                "`{}` has a child inside its own district",
                g.label(v)
            )));
        }
        let mut mb = dis.union(&g.parents_of(&dis));
        mb.remove(v);
        Ok(mb)
    }

    pub fn m_separated(&self, a: &VertexSet, b: &VertexSet, c: &VertexSet) -> Result<bool> {
        self.graph.m_separated(a, b, c)
    }
}
