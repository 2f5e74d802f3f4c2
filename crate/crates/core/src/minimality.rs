//! Spanning-structure reduction, ancestral pruning and the linear-time minimal set.
//!
//! A [`MinimalReduction`] holds a graph over C (plus the external parent `w`
//! in the directed case) whose directed edges form a forest converging on the
//! targets B and whose bidirected edges form a spanning tree of C.

use std::collections::VecDeque;

use crate::error::{Error, Result};
use crate::graph::Admg;
use crate::projection::{closure_mask, PairSubgraph};
use crate::vertex::VertexSet;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MinimalReduction {
    reduced: Admg,
    targets: VertexSet,
    external: Option<usize>,
    forest: Vec<(usize, usize)>,
    tree: Vec<(usize, usize)>,
    retained: Option<(usize, usize)>,
    v: usize,
    w: usize,
}

impl MinimalReduction {
    pub fn reduced(&self) -> &Admg {
        &self.reduced
    }

    pub fn targets(&self) -> &VertexSet {
        &self.targets
    }

    /// The external parent `w` in the directed case.
    pub fn external(&self) -> Option<usize> {
        self.external
    }

    pub fn forest(&self) -> &[(usize, usize)] {
        &self.forest
    }

    pub fn tree(&self) -> &[(usize, usize)] {
        &self.tree
    }

    /// The single edge out of `w` in the directed case.
    pub fn retained(&self) -> Option<(usize, usize)> {
        self.retained
    }

    /// The tree root: the sink in the directed case, the first pair member otherwise.
    pub fn v(&self) -> usize {
        self.v
    }

    pub fn w(&self) -> usize {
        self.w
    }

    /// Vertices carrying the spanning tree (everything except the external parent).
    pub fn core(&self) -> VertexSet {
        (0..self.reduced.n()).filter(|&x| Some(x) != self.external).collect()
    }

    /// Assembles a reduction from explicit parts over the vertices of `h`,
    /// validating the forest, tree and closure invariants.
    #[allow(clippy::too_many_arguments)]
    pub fn from_parts(
        h: &Admg,
        targets: VertexSet,
        external: Option<usize>,
        forest: Vec<(usize, usize)>,
        tree: Vec<(usize, usize)>,
        retained: Option<(usize, usize)>,
        v: usize,
        w: usize,
    ) -> Result<Self> {
        let n = h.n();
        let bad = |m: String| Err(Error::InvalidReduction(m));
        if targets.is_empty() || targets.iter().any(|t| t >= n) {
            return bad("targets must be non-empty vertices of the graph".into());
        }
        if let Some(x) = external {
            if x >= n || targets.contains(x) {
                return bad("external parent must be a non-target vertex".into());
            }
        }
        let mut tree: Vec<(usize, usize)> = tree.into_iter().map(|(a, b)| (a.min(b), a.max(b))).collect();
        tree.sort_unstable();
        let mut forest = forest;
        forest.sort_unstable();
        let directed: Vec<_> = forest.iter().copied().chain(retained).collect();
        let reduced = Admg::new(h.labels().to_vec(), &directed, &tree)?;
        let red = MinimalReduction {
            reduced,
            targets,
            external,
            forest,
            tree,
            retained,
            v,
            w,
        };
        red.validate()?;
        Ok(red)
    }

    fn validate(&self) -> Result<()> {
        let g = &self.reduced;
        let n = g.n();
        let core = self.core();
        let bad = |m: &str| Err(Error::InvalidReduction(m.to_string()));
        let in_core = core.to_mask(n);
        if self.tree.len() + 1 != core.len() {
            return bad("bidirected edges must number |C| - 1");
        }
        if self.tree.iter().any(|&(a, b)| !in_core[a] || !in_core[b]) {
            return bad("bidirected edges must stay inside C");
        }
        if !g.bidirected_connected(&core)? {
            return bad("bidirected edges must span C");
        }
        if self.forest.len() + self.targets.len() != core.len() {
            return bad("directed forest must have |C| - |B| edges");
        }
        let mut out_deg = vec![0usize; n];
        for &(a, b) in &self.forest {
            if !in_core[a] || !in_core[b] {
                return bad("forest edges must stay inside C");
            }
            out_deg[a] += 1;
        }
        if core.iter().any(|x| out_deg[x] != usize::from(!self.targets.contains(x))) {
            return bad("each non-target vertex needs exactly one forest edge, targets none");
        }
        match (self.external, self.retained) {
            (Some(x), Some((a, b))) if a == x && in_core[b] => {}
            (None, None) => {}
            _ => return bad("the external parent needs exactly one retained edge into C"),
        }
        let closure = closure_mask(g, &self.targets.to_mask(n));
        if VertexSet::from_mask(&closure) != core {
            return bad("closure of the targets must equal C");
        }
        Ok(())
    }
}

/// Reduces a pair subgraph to spanning structures.
pub fn tree_reduce(pair: &PairSubgraph) -> Result<MinimalReduction> {
    let (v, w) = match pair.external {
        Some(x) => (pair.targets.iter().next().expect("one target"), x),
        None => (pair.v, pair.w),
    };
    tree_reduce_with(&pair.graph, &pair.targets, pair.external, v, w)
}

/// Directed edges: each non-target keeps the edge to its child in C nearest
/// to B (ties to the child latest in topological order). Bidirected edges:
/// depth-first tree from `v`, neighbours in declaration order.
pub fn tree_reduce_with(
    h: &Admg,
    targets: &VertexSet,
    external: Option<usize>,
    v: usize,
    w: usize,
) -> Result<MinimalReduction> {
    let n = h.n();
    if targets.iter().any(|t| t >= n) || external.is_some_and(|x| x >= n) {
        return Err(Error::InvalidReduction("targets must lie in the graph".into()));
    }
    let in_core: Vec<bool> = (0..n).map(|x| Some(x) != external).collect();
    let is_target = targets.to_mask(n);
    let closure = closure_mask(h, &is_target);
    if closure != in_core {
        return Err(Error::InvalidReduction(
            "graph must equal the closure of the targets plus the external parent".into(),
        ));
    }
    if !in_core[v] {
        return Err(Error::InvalidReduction("tree root must lie in C".into()));
    }

    // shortest directed distance to B within C
    let mut dist = vec![usize::MAX; n];
    let mut queue: VecDeque<usize> = targets.iter().collect();
    for t in targets {
        dist[t] = 0;
    }
    while let Some(x) = queue.pop_front() {
        for &p in h.parents(x) {
            if in_core[p] && dist[p] == usize::MAX {
                dist[p] = dist[x] + 1;
                queue.push_back(p);
            }
        }
    }
    let rank = h.topological_rank();
    let mut forest = Vec::new();
    for x in 0..n {
        if !in_core[x] || is_target[x] {
            continue;
        }
        let best = h
            .children(x)
            .iter()
            .copied()
            .filter(|&c| in_core[c] && dist[c] != usize::MAX)
            .min_by_key(|&c| (dist[c], std::cmp::Reverse(rank[c])))
            .ok_or_else(|| Error::InvalidReduction(format!("`{}` does not reach the targets", h.label(x))))?;
        forest.push((x, best));
    }

    let mut tree = Vec::new();
    let mut seen = vec![false; n];
    seen[v] = true;
    let mut stack: Vec<(usize, usize)> = vec![(v, 0)];
    while let Some(top) = stack.last_mut() {
        let (x, i) = *top;
        let sibs = h.siblings(x);
        if i >= sibs.len() {
            stack.pop();
            continue;
        }
        top.1 += 1;
        let s = sibs[i];
        if in_core[s] && !seen[s] {
            seen[s] = true;
            tree.push((x, s));
            stack.push((s, 0));
        }
    }

    let retained = match external {
        Some(x) => {
            let child = h
                .children(x)
                .iter()
                .copied()
                .filter(|&c| in_core[c])
                .min_by_key(|&c| rank[c])
                .ok_or_else(|| Error::InvalidReduction("external parent has no child in C".into()))?;
            Some((x, child))
        }
        None => None,
    };
    MinimalReduction::from_parts(h, targets.clone(), external, forest, tree, retained, v, w)
}

/// Adjacency of the bidirected tree.
fn tree_adjacency(red: &MinimalReduction) -> Vec<Vec<usize>> {
    let mut adj = vec![Vec::new(); red.reduced.n()];
    for &(a, b) in &red.tree {
        adj[a].push(b);
        adj[b].push(a);
    }
    adj
}

/// Breadth-first parent pointers and depths toward `root`.
fn tree_paths(adj: &[Vec<usize>], root: usize) -> (Vec<usize>, Vec<usize>) {
    let mut parent = vec![usize::MAX; adj.len()];
    let mut depth = vec![usize::MAX; adj.len()];
    depth[root] = 0;
    parent[root] = root;
    let mut queue = VecDeque::from([root]);
    while let Some(x) = queue.pop_front() {
        for &y in &adj[x] {
            if depth[y] == usize::MAX {
                depth[y] = depth[x] + 1;
                parent[y] = x;
                queue.push_back(y);
            }
        }
    }
    (parent, depth)
}

/// True iff each bidirected-connected component of `set` has exactly one
/// tree edge leaving it.
pub fn almost_encapsulated(red: &MinimalReduction, set: &VertexSet) -> Result<bool> {
    Ok(encapsulation_counts(red, set)?.is_none_or(|(c, per)| per.iter().all(|&l| l == 1) && per.len() == c))
}

/// `(components, leaving edges per component)`; `None` for an empty set.
fn encapsulation_counts(red: &MinimalReduction, set: &VertexSet) -> Result<Option<(usize, Vec<usize>)>> {
    let n = red.reduced.n();
    if let Some(x) = set.iter().find(|&x| x >= n) {
        return Err(Error::UnknownVertex(format!("#{x}")));
    }
    if let Some(x) = set.iter().find(|&x| red.targets.contains(x) || Some(x) == red.external) {
        return Err(Error::Precondition(format!(
            "`{}` is a target or the external parent",
            red.reduced.label(x)
        )));
    }
    if set.is_empty() {
        return Ok(None);
    }
    let inside = set.to_mask(n);
    let adj = tree_adjacency(red);
    let mut comp = vec![usize::MAX; n];
    let mut leaving = Vec::new();
    for s in set {
        if comp[s] != usize::MAX {
            continue;
        }
        let id = leaving.len();
        leaving.push(0);
        comp[s] = id;
        let mut stack = vec![s];
        while let Some(x) = stack.pop() {
            for &y in &adj[x] {
                if !inside[y] {
                    leaving[id] += 1;
                } else if comp[y] == usize::MAX {
                    comp[y] = id;
                    stack.push(y);
                }
            }
        }
    }
    Ok(Some((leaving.len(), leaving)))
}

/// Removes `an(set)`, which must avoid the targets and the external parent and be almost encapsulated.
pub fn prune(red: &MinimalReduction, set: &VertexSet) -> Result<MinimalReduction> {
    let g = &red.reduced;
    let n = g.n();
    if let Some(x) = set.iter().find(|&x| x >= n) {
        return Err(Error::UnknownVertex(format!("#{x}")));
    }
    let removed = g.ancestors(set);
    if removed.is_empty() {
        return Ok(red.clone());
    }
    if removed.iter().any(|x| red.targets.contains(x) || Some(x) == red.external) {
        return Err(Error::Precondition(
            "ancestors of the pruned set reach a target or the external parent".into(),
        ));
    }
    if let Some((components, per)) = encapsulation_counts(red, &removed)? {
        if per.iter().any(|&l| l != 1) {
            return Err(Error::NotAlmostEncapsulated {
                components,
                leaving: per.iter().sum(),
            });
        }
    }
    let gone = removed.to_mask(n);
    let keep: VertexSet = (0..n).filter(|&x| !gone[x]).collect();
    let mut new_index = vec![usize::MAX; n];
    for (i, x) in keep.iter().enumerate() {
        new_index[x] = i;
    }
    let map = |(a, b): (usize, usize)| (new_index[a], new_index[b]);
    let kept = |e: &&(usize, usize)| !gone[e.0] && !gone[e.1];
    let h = g.induced_subgraph(&keep)?;
    MinimalReduction::from_parts(
        &h,
        red.targets.iter().map(|t| new_index[t]).collect(),
        red.external.map(|x| new_index[x]),
        red.forest.iter().filter(kept).copied().map(map).collect(),
        red.tree.iter().filter(kept).copied().map(map).collect(),
        red.retained.map(map),
        new_index[red.v],
        new_index[red.w],
    )
}

/// The minimal retained set for the pair: seeds with both ends (and, when
/// they share a district, the tree path through a crossing edge), then closes
/// under descendants and tree paths to `v`. Linear in the number of vertices.
pub fn minimal_set(red: &MinimalReduction) -> VertexSet {
    let g = &red.reduced;
    let n = g.n();
    let adj = tree_adjacency(red);
    let (to_v, depth_v) = tree_paths(&adj, red.v);
    let mut in_w = vec![false; n];
    let mut added: Vec<usize> = Vec::new();
    let add = |x: usize, in_w: &mut Vec<bool>, added: &mut Vec<usize>| {
        if !in_w[x] {
            in_w[x] = true;
            added.push(x);
        }
    };

    if red.external.is_none() {
        // the tree spans both ends; pick a crossing edge nearest to both
        let (to_w, depth_w) = tree_paths(&adj, red.w);
        let mut side_v = vec![false; n];
        side_v[red.v] = true;
        let an_v = g.ancestors_within(&vec![true; n], &side_v);
        let mut best: Option<(usize, usize, usize)> = None;
        for &(x, y) in &red.tree {
            for (a, b) in [(x, y), (y, x)] {
                if an_v[a] && !an_v[b] {
                    let cost = depth_v[a] + depth_w[b];
                    if best.is_none_or(|(c, ba, bb)| (cost, a, b) < (c, ba, bb)) {
                        best = Some((cost, a, b));
                    }
                }
            }
        }
        let (_, a, b) = best.expect("a spanning tree over both sides has a crossing edge");
        for (start, parent, root) in [(a, &to_v, red.v), (b, &to_w, red.w)] {
            let mut x = start;
            loop {
                add(x, &mut in_w, &mut added);
                if x == root {
                    break;
                }
                x = parent[x];
            }
        }
    } else {
        add(red.v, &mut in_w, &mut added);
        add(red.w, &mut in_w, &mut added);
    }

    let mut next = 0;
    while next < added.len() {
        let x = added[next];
        next += 1;
        for &c in g.children(x) {
            if !in_w[c] {
                add(c, &mut in_w, &mut added);
            }
        }
        if depth_v[x] != usize::MAX {
            let mut p = to_v[x];
            while !in_w[p] {
                add(p, &mut in_w, &mut added);
                p = to_v[p];
            }
        }
    }
    VertexSet::from_mask(&in_w)
}

/// Prunes everything outside [`minimal_set`].
pub fn reduce_to_minimal(red: &MinimalReduction) -> Result<(MinimalReduction, VertexSet)> {
    let keep = minimal_set(red);
    let drop: VertexSet = (0..red.reduced.n()).filter(|&x| !keep.contains(x)).collect();
    Ok((prune(red, &drop)?, keep))
}

/// Exhaustive reference: the complement of the largest ancestral, almost
/// encapsulated removal. Exponential; for small graphs only.
pub fn brute_force_minimum(red: &MinimalReduction) -> Result<VertexSet> {
    let g = &red.reduced;
    let n = g.n();
    let free: Vec<usize> = (0..n)
        .filter(|&x| !red.targets.contains(x) && Some(x) != red.external)
        .collect();
    if free.len() > 20 {
        return Err(Error::SizeGuard(format!("{} removable vertices", free.len())));
    }
    let mut best = VertexSet::new();
    for bits in 1u32..(1 << free.len()) {
        if bits.count_ones() as usize <= best.len() {
            continue;
        }
        let set: VertexSet = free
            .iter()
            .enumerate()
            .filter(|&(i, _)| bits >> i & 1 == 1)
            .map(|(_, &x)| x)
            .collect();
        if g.ancestors(&set) == set && almost_encapsulated(red, &set)? {
            best = set;
        }
    }
    Ok((0..n).filter(|&x| !best.contains(x)).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;
    use crate::format::parse_admg;
    use crate::projection::{pair_subgraph, Preference};

    fn reduction(g: &Admg, v: &str, w: &str) -> MinimalReduction {
        let p = pair_subgraph(g, g.vertex(v).unwrap(), g.vertex(w).unwrap(), Preference::DirectedFirst).unwrap();
        tree_reduce(&p).unwrap()
    }

    fn names(g: &Admg, edges: &[(usize, usize)], arrow: &str) -> Vec<String> {
        edges
            .iter()
            .map(|&(a, b)| format!("{} {arrow} {}", g.label(a), g.label(b)))
            .collect()
    }

    fn set(g: &Admg, names: &[&str]) -> VertexSet {
        g.vertex_set(names).unwrap()
    }

    #[test]
    fn iv_reduction() {
        let red = reduction(&fixtures::iv(), "c", "a");
        let g = red.reduced();
        assert_eq!(names(g, red.forest(), "->"), vec!["b -> c"]);
        assert_eq!(names(g, red.tree(), "<->"), vec!["b <-> c"]);
        assert_eq!(names(g, &[red.retained().unwrap()], "->"), vec!["a -> b"]);
    }

    #[test]
    fn gadget_reduction() {
        let red = reduction(&fixtures::gadget(), "c", "d");
        let g = red.reduced();
        assert_eq!(names(g, red.forest(), "->"), vec!["a -> d", "b -> c"]);
        assert_eq!(names(g, red.tree(), "<->"), vec!["a <-> b", "a <-> c", "b <-> d"]);
        assert_eq!(minimal_set(&red), g.all());
    }

    #[test]
    fn directed_pair_walkthrough() {
        let red = reduction(&fixtures::directed_pair(), "v", "w");
        let expected = parse_admg(
            "vertices: a b c d v w\na -> v\nb -> c\nc -> v\nd -> v\nw -> c\na <-> b\na <-> v\nb <-> c\nc <-> d\n",
        )
        .unwrap();
        assert_eq!(red.reduced(), &expected);
        let g = red.reduced().clone();
        let pruned = prune(&red, &set(&g, &["d"])).unwrap();
        let expected = parse_admg(
            "vertices: a b c v w\na -> v\nb -> c\nc -> v\nw -> c\na <-> b\na <-> v\nb <-> c\n",
        )
        .unwrap();
        assert_eq!(pruned.reduced(), &expected);
        assert_eq!(minimal_set(&red), set(&g, &["a", "b", "c", "v", "w"]));
        assert_eq!(reduce_to_minimal(&red).unwrap().0, pruned);
    }

    #[test]
    fn bidirected_pair_walkthrough() {
        let red = reduction(&fixtures::bidirected_pair(), "v", "w");
        let g = red.reduced().clone();
        assert_eq!(
            names(&g, red.tree(), "<->"),
            vec!["a <-> b", "a <-> w", "b <-> v", "c <-> w"]
        );
        let pruned = prune(&red, &set(&g, &["c"])).unwrap();
        assert_eq!(pruned.reduced().n(), 4);
        assert_eq!(minimal_set(&red), set(&g, &["a", "b", "v", "w"]));
    }

    #[test]
    fn stubborn_example() {
        let red = reduction(&fixtures::stubborn(), "v", "w");
        let g = red.reduced().clone();
        assert_eq!(minimal_set(&red), set(&g, &["v", "w"]));
        assert_eq!(brute_force_minimum(&red).unwrap(), set(&g, &["v", "w"]));
        // single vertices with children fail; {c, e} is encapsulated
        assert!(almost_encapsulated(&red, &set(&g, &["c", "e"])).unwrap());
        let internal = (0..g.n())
            .find(|&x| red.tree().iter().filter(|&&(a, b)| a == x || b == x).count() >= 2 && !red.targets().contains(x))
            .unwrap();
        let leaving = red.tree().iter().filter(|&&(a, b)| a == internal || b == internal).count();
        assert_eq!(
            almost_encapsulated(&red, &VertexSet::singleton(internal)).unwrap(),
            leaving == 1
        );
        assert!(!almost_encapsulated(&red, &VertexSet::singleton(internal)).unwrap());
        assert!(almost_encapsulated(&red, &set(&g, &["v"])).is_err());
    }

    #[test]
    fn leaves_are_encapsulated() {
        let red = reduction(&fixtures::directed_pair(), "v", "w");
        for x in red.core().iter() {
            let degree = red.tree().iter().filter(|&&(a, b)| a == x || b == x).count();
            if degree == 1 && !red.targets().contains(x) {
                assert!(almost_encapsulated(&red, &VertexSet::singleton(x)).unwrap());
            }
        }
    }

    #[test]
    fn prune_errors() {
        let red = reduction(&fixtures::directed_pair(), "v", "w");
        let g = red.reduced().clone();
        assert_eq!(prune(&red, &VertexSet::new()).unwrap(), red);
        // c sits on the path from w, so its ancestors include w
        assert!(matches!(prune(&red, &set(&g, &["c"])), Err(Error::Precondition(_))));
        // a is internal to the tree: two leaving edges
        assert_eq!(
            prune(&red, &set(&g, &["a"])),
            Err(Error::NotAlmostEncapsulated { components: 1, leaving: 2 })
        );
    }

    #[test]
    fn from_parts_validates() {
        let iv = fixtures::iv();
        assert!(MinimalReduction::from_parts(&iv, VertexSet::singleton(2), Some(0), vec![(1, 2)], vec![(1, 2)], Some((0, 1)), 2, 0).is_ok());
        assert!(matches!(
            MinimalReduction::from_parts(&iv, VertexSet::singleton(2), Some(0), vec![], vec![(1, 2)], Some((0, 1)), 2, 0),
            Err(Error::InvalidReduction(_))
        ));
    }
}
