//! Compatibility between resolutions, the compatibility graph and exact
//! maximum-clique search.
//!
//! Two resolutions are compatible when they share exactly one parallel class
//! and every other pair of classes (one from each) has at most one block in
//! common. The maximum cliques of the resulting graph are the candidate sets
//! of resolutions from which a projective plane can be rebuilt.

use std::fmt::Write as _;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bitset::BitSet;
use crate::enumeration::{ParallelClass, Resolution, SearchConfig};
use crate::error::{Error, Result};

/// Parallel classes as block bitsets, shared by every compatibility test of a
/// run.
#[derive(Clone, Debug)]
pub struct ClassTable {
    block_count: usize,
    sets: Vec<BitSet>,
}

impl ClassTable {
    /// The block universe is taken as one past the largest block index used.
    pub fn new(classes: &[ParallelClass]) -> Self {
        let block_count = classes.iter().flat_map(|c| c.block_indices().iter().copied()).max().map_or(0, |m| m + 1);
        ClassTable { block_count, sets: classes.iter().map(|c| c.block_set(block_count)).collect() }
    }

    pub fn len(&self) -> usize {
        self.sets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sets.is_empty()
    }

    pub fn block_count(&self) -> usize {
        self.block_count
    }

    pub fn class(&self, i: usize) -> &BitSet {
        &self.sets[i]
    }

    fn check(&self, r: &Resolution) -> Result<()> {
        if let Some(&c) = r.class_indices().iter().find(|&&c| c >= self.sets.len()) {
            return Err(Error::Context(format!(
                "resolution refers to class {c}, but only {} classes are known",
                self.sets.len()
            )));
        }
        Ok(())
    }

    /// Compatibility of two resolutions given as indices into this table.
    pub fn compatible(&self, r1: &Resolution, r2: &Resolution) -> Result<bool> {
        self.check(r1)?;
        self.check(r2)?;
        let blocks = |r: &Resolution| r.class_indices().iter().map(|&c| self.sets[c].count()).sum::<usize>();
        if blocks(r1) != blocks(r2) {
            return Err(Error::Context("resolutions cover different numbers of blocks".into()));
        }
        Ok(self.compatible_unchecked(r1, r2))
    }

    fn compatible_unchecked(&self, r1: &Resolution, r2: &Resolution) -> bool {
        if shared_count(r1.class_indices(), r2.class_indices()) != 1 {
            return false;
        }
        for &a in r1.class_indices() {
            if r2.class_indices().binary_search(&a).is_ok() {
                continue;
            }
            for &b in r2.class_indices() {
                if self.sets[a].intersection_count(&self.sets[b]) > 1 {
                    return false;
                }
            }
        }
        true
    }
}

/// Number of common entries of two sorted index lists.
fn shared_count(a: &[usize], b: &[usize]) -> usize {
    let (mut i, mut j, mut n) = (0, 0, 0);
    while i < a.len() && j < b.len() {
        match a[i].cmp(&b[j]) {
            std::cmp::Ordering::Less => i += 1,
            std::cmp::Ordering::Greater => j += 1,
            std::cmp::Ordering::Equal => {
                n += 1;
                i += 1;
                j += 1;
            }
        }
    }
    n
}

/// Whether two resolutions of the same design are compatible.
pub fn compatible(r1: &Resolution, r2: &Resolution, classes: &[ParallelClass]) -> Result<bool> {
    ClassTable::new(classes).compatible(r1, r2)
}

/// Simple undirected graph with bitset adjacency rows.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CompatGraph {
    adjacency: Vec<BitSet>,
    vertex_labels: Vec<usize>,
}

impl CompatGraph {
    pub fn new(vertex_count: usize) -> Self {
        CompatGraph {
            adjacency: vec![BitSet::new(vertex_count); vertex_count],
            vertex_labels: (0..vertex_count).collect(),
        }
    }

    /// Graph on `vertex_count` vertices from 0-based edges. Loops and
    /// out-of-range endpoints are rejected; repeated edges collapse.
    pub fn from_edges(vertex_count: usize, edges: &[(usize, usize)]) -> Result<Self> {
        let mut g = CompatGraph::new(vertex_count);
        for &(u, v) in edges {
            if u >= vertex_count || v >= vertex_count {
                return Err(Error::Structural(format!("edge ({u}, {v}) outside {vertex_count} vertices")));
            }
            if u == v {
                return Err(Error::Structural(format!("loop at vertex {u}")));
            }
            g.add_edge(u, v);
        }
        Ok(g)
    }

    pub fn vertex_count(&self) -> usize {
        self.adjacency.len()
    }

    /// Resolution index carried by each vertex.
    pub fn vertex_labels(&self) -> &[usize] {
        &self.vertex_labels
    }

    pub fn add_edge(&mut self, u: usize, v: usize) {
        assert_ne!(u, v, "loops are not allowed");
        self.adjacency[u].insert(v);
        self.adjacency[v].insert(u);
    }

    pub fn has_edge(&self, u: usize, v: usize) -> bool {
        self.adjacency[u].contains(v)
    }

    pub fn neighbors(&self, v: usize) -> &BitSet {
        &self.adjacency[v]
    }

    pub fn degree(&self, v: usize) -> usize {
        self.adjacency[v].count()
    }

    pub fn edge_count(&self) -> usize {
        self.adjacency.iter().map(BitSet::count).sum::<usize>() / 2
    }

    /// Edges `(u, v)` with `u < v` in lexicographic order.
    pub fn edges(&self) -> Vec<(usize, usize)> {
        (0..self.vertex_count())
            .flat_map(|u| self.adjacency[u].iter().filter(move |&v| v > u).map(move |v| (u, v)))
            .collect()
    }

    pub fn is_clique(&self, vertices: &[usize]) -> bool {
        vertices.iter().enumerate().all(|(i, &u)| vertices[i + 1..].iter().all(|&v| u != v && self.has_edge(u, v)))
    }

    /// DIMACS undirected format with 1-based vertices.
    pub fn to_dimacs(&self) -> String {
        let mut out = format!("p edge {} {}\n", self.vertex_count(), self.edge_count());
        for (u, v) in self.edges() {
            writeln!(out, "e {} {}", u + 1, v + 1).unwrap();
        }
        out
    }

    /// Parses DIMACS undirected format. Comment lines start with `c`; the
    /// declared edge count must match the distinct edges read.
    pub fn from_dimacs(text: &str) -> Result<Self> {
        let mut header: Option<(usize, usize)> = None;
        let mut edges = Vec::new();
        for (lineno, line) in text.lines().enumerate() {
            let err = |msg: &str| Error::Parse(format!("DIMACS line {}: {msg}", lineno + 1));
            let fields: Vec<&str> = line.split_whitespace().collect();
            match fields.first().copied() {
                None | Some("c") => {}
                Some("p") => {
                    if header.is_some() {
                        return Err(err("repeated problem line"));
                    }
                    if fields.len() != 4 || !matches!(fields[1], "edge" | "col") {
                        return Err(err("expected `p edge <vertices> <edges>`"));
                    }
                    let n = fields[2].parse().map_err(|_| err("bad vertex count"))?;
                    let m = fields[3].parse().map_err(|_| err("bad edge count"))?;
                    header = Some((n, m));
                }
                Some("e") => {
                    let (n, _) = header.ok_or_else(|| err("edge before problem line"))?;
                    if fields.len() != 3 {
                        return Err(err("expected `e <u> <v>`"));
                    }
                    let u: usize = fields[1].parse().map_err(|_| err("bad vertex"))?;
                    let v: usize = fields[2].parse().map_err(|_| err("bad vertex"))?;
                    if u == 0 || v == 0 || u > n || v > n {
                        return Err(err("vertex out of range"));
                    }
                    if u == v {
                        return Err(err("loop"));
                    }
                    edges.push((u - 1, v - 1));
                }
                Some(other) => return Err(err(&format!("unknown line type `{other}`"))),
            }
        }
        let (n, m) = header.ok_or_else(|| Error::Parse("DIMACS input has no problem line".into()))?;
        let g = CompatGraph::from_edges(n, &edges)?;
        if g.edge_count() != m {
            return Err(Error::Parse(format!("DIMACS header declares {m} edges, found {}", g.edge_count())));
        }
        Ok(g)
    }
}

/// Compatibility graph whose vertex `i` is `resolutions[i]`.
pub fn build_compat_graph(
    resolutions: &[Resolution],
    classes: &[ParallelClass],
    config: &SearchConfig,
) -> Result<CompatGraph> {
    let table = ClassTable::new(classes);
    for r in resolutions {
        table.check(r)?;
    }
    let n = resolutions.len();
    let rows: Vec<Vec<usize>> = config.install(|| {
        (0..n)
            .into_par_iter()
            .map(|i| (i + 1..n).filter(|&j| table.compatible_unchecked(&resolutions[i], &resolutions[j])).collect())
            .collect()
    });
    let mut g = CompatGraph::new(n);
    for (i, row) in rows.into_iter().enumerate() {
        for j in row {
            g.add_edge(i, j);
        }
    }
    Ok(g)
}

/// All pairs of the clique pass [`compatible`], recomputed from the
/// resolutions themselves.
pub fn verify_clique_compatible(
    clique: &[usize],
    resolutions: &[Resolution],
    classes: &[ParallelClass],
) -> Result<bool> {
    let table = ClassTable::new(classes);
    if let Some(&v) = clique.iter().find(|&&v| v >= resolutions.len()) {
        return Err(Error::Context(format!("clique vertex {v} outside {} resolutions", resolutions.len())));
    }
    for (i, &a) in clique.iter().enumerate() {
        for &b in &clique[i + 1..] {
            if !table.compatible(&resolutions[a], &resolutions[b])? {
                return Ok(false);
            }
        }
    }
    Ok(true)
}

/// Maximum clique size and every clique attaining it.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CliqueResult {
    pub max_size: usize,
    /// Sorted vertex lists in lexicographic order.
    pub cliques: Vec<Vec<usize>>,
}

struct CliqueSearch<'a> {
    graph: &'a CompatGraph,
    /// Vertices by non-increasing degree; coloring follows this order.
    order: Vec<usize>,
}

impl CliqueSearch<'_> {
    /// Greedy sequential coloring of `candidates`. Returns vertices with the
    /// number of colors used up to and including each one, ascending.
    fn color(&self, candidates: &BitSet) -> Vec<(usize, usize)> {
        let mut out = Vec::with_capacity(candidates.count());
        let mut uncolored = candidates.clone();
        let mut color = 0;
        while !uncolored.is_empty() {
            color += 1;
            let mut available = uncolored.clone();
            for &v in &self.order {
                if available.contains(v) {
                    out.push((v, color));
                    uncolored.remove(v);
                    available.remove(v);
                    available.difference_with(self.graph.neighbors(v));
                }
            }
        }
        out
    }

    /// Largest clique size extending `current` within `candidates`, as long
    /// as it beats `best`.
    fn find_max(&self, current: usize, mut candidates: BitSet, best: &mut usize) {
        let colored = self.color(&candidates);
        for &(v, bound) in colored.iter().rev() {
            if current + bound <= *best {
                return;
            }
            let next = candidates.intersection(self.graph.neighbors(v));
            if next.is_empty() {
                *best = (*best).max(current + 1);
            } else {
                self.find_max(current + 1, next, best);
            }
            candidates.remove(v);
        }
    }

    /// Every clique of exactly `target` vertices extending `current`.
    fn collect(&self, current: &mut Vec<usize>, mut candidates: BitSet, target: usize, out: &mut Vec<Vec<usize>>) {
        if current.len() == target {
            let mut c = current.clone();
            c.sort_unstable();
            out.push(c);
            return;
        }
        let colored = self.color(&candidates);
        for &(v, bound) in colored.iter().rev() {
            if current.len() + bound < target {
                return;
            }
            current.push(v);
            self.collect(current, candidates.intersection(self.graph.neighbors(v)), target, out);
            current.pop();
            candidates.remove(v);
        }
    }
}

/// Exact maximum clique size with the complete list of maximum cliques. The
/// empty graph has maximum size 0 and the single empty clique.
pub fn max_clique(graph: &CompatGraph) -> CliqueResult {
    let n = graph.vertex_count();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by_key(|&v| (std::cmp::Reverse(graph.degree(v)), v));
    let search = CliqueSearch { graph, order };
    let mut best = 0;
    search.find_max(0, BitSet::full(n), &mut best);
    let mut cliques = Vec::new();
    search.collect(&mut Vec::new(), BitSet::full(n), best, &mut cliques);
    cliques.sort_unstable();
    CliqueResult { max_size: best, cliques }
}

/// Largest possible number of pairwise compatible resolutions of a
/// 2-((sk-s+1)k, k, 1) design, (sk-k+1)s, or `None` when `v` and `k` do not
/// have that shape for a positive integer `s`.
pub fn compatible_resolution_bound(v: usize, k: usize) -> Option<usize> {
    if k < 2 || !v.is_multiple_of(k) || !(v / k - 1).is_multiple_of(k - 1) {
        return None;
    }
    let s = (v / k - 1) / (k - 1);
    (s >= 1).then(|| (s * k - k + 1) * s)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn complete(n: usize) -> CompatGraph {
        let edges: Vec<_> = (0..n).flat_map(|u| (u + 1..n).map(move |v| (u, v))).collect();
        CompatGraph::from_edges(n, &edges).unwrap()
    }

    /// All maximum cliques by checking every vertex subset.
    fn brute_force(g: &CompatGraph) -> CliqueResult {
        let n = g.vertex_count();
        let mut best = CliqueResult { max_size: 0, cliques: vec![vec![]] };
        let adj: Vec<u32> = (0..n).map(|u| (0..n).filter(|&v| g.has_edge(u, v)).map(|v| 1 << v).sum()).collect();
        for mask in 1u32..(1 << n) {
            if (0..n).any(|i| mask >> i & 1 == 1 && mask & !adj[i] & !(1 << i) != 0) {
                continue;
            }
            let set: Vec<usize> = (0..n).filter(|&i| mask >> i & 1 == 1).collect();
            if set.len() > best.max_size {
                best = CliqueResult { max_size: set.len(), cliques: vec![] };
            }
            if set.len() == best.max_size {
                best.cliques.push(set);
            }
        }
        best.cliques.sort();
        best
    }

    #[test]
    fn complete_and_edgeless_graphs() {
        let r = max_clique(&complete(5));
        assert_eq!((r.max_size, r.cliques.len()), (5, 1));
        let r = max_clique(&CompatGraph::new(4));
        assert_eq!(r.max_size, 1);
        assert_eq!(r.cliques, vec![vec![0], vec![1], vec![2], vec![3]]);
    }

    #[test]
    fn empty_graph_has_the_empty_clique() {
        let r = max_clique(&CompatGraph::new(0));
        assert_eq!(r, CliqueResult { max_size: 0, cliques: vec![vec![]] });
    }

    #[test]
    fn dimacs_round_trip() {
        let g = CompatGraph::from_edges(5, &[(0, 1), (1, 2), (3, 4), (0, 4)]).unwrap();
        let text = g.to_dimacs();
        assert!(text.starts_with("p edge 5 4\n"));
        assert!(text.contains("e 1 2\n"));
        assert_eq!(CompatGraph::from_dimacs(&text).unwrap(), g);
        assert!(CompatGraph::from_dimacs("p edge 2 1\ne 1 3\n").is_err());
        assert!(CompatGraph::from_dimacs("e 1 2\n").is_err());
        assert!(CompatGraph::from_dimacs("p edge 2 2\ne 1 2\n").is_err());
        assert!(CompatGraph::from_dimacs("c only a comment\n").is_err());
    }

    #[test]
    fn loops_rejected() {
        assert!(CompatGraph::from_edges(3, &[(1, 1)]).is_err());
        assert!(CompatGraph::from_edges(3, &[(1, 3)]).is_err());
    }

    /// Four classes over blocks 0..5 forming two resolutions in two ways.
    fn toy_classes() -> Vec<ParallelClass> {
        vec![
            ParallelClass::new(vec![0, 1]),
            ParallelClass::new(vec![2, 3]),
            ParallelClass::new(vec![0, 2]),
            ParallelClass::new(vec![1, 3]),
        ]
    }

    #[test]
    fn identical_and_disjoint_resolutions_are_incompatible() {
        let classes = toy_classes();
        let r1 = Resolution::new(vec![0, 1]);
        let r2 = Resolution::new(vec![2, 3]);
        assert!(!compatible(&r1, &r1, &classes).unwrap());
        assert!(!compatible(&r1, &r2, &classes).unwrap());
        assert!(compatible(&r1, &Resolution::new(vec![7, 1]), &classes).is_err());
    }

    #[test]
    fn one_shared_class_with_small_intersections_is_compatible() {
        // Blocks 0..6; r1 = {A, B}, r2 = {A, C}: B and C share one block.
        let classes = vec![
            ParallelClass::new(vec![0, 1]),
            ParallelClass::new(vec![2, 3]),
            ParallelClass::new(vec![2, 4]),
            ParallelClass::new(vec![3, 4]),
        ];
        let r1 = Resolution::new(vec![0, 1]);
        let r2 = Resolution::new(vec![0, 2]);
        assert!(compatible(&r1, &r2, &classes).unwrap());
        assert!(compatible(&r2, &r1, &classes).unwrap());
        // A second shared block between the non-shared classes breaks it.
        let classes =
            vec![ParallelClass::new(vec![0, 1]), ParallelClass::new(vec![2, 3, 5]), ParallelClass::new(vec![2, 3, 4])];
        assert!(!compatible(&r1, &r2, &classes).unwrap());
        let g = build_compat_graph(&[r1.clone(), r2.clone()], &classes, &SearchConfig::single_thread()).unwrap();
        assert_eq!(g.edge_count(), 0);
        assert!(verify_clique_compatible(&[0], &[r1, r2], &classes).unwrap());
    }

    #[test]
    fn bound_for_the_arc_parameters() {
        assert_eq!(compatible_resolution_bound(52, 4), Some(52));
        assert_eq!(compatible_resolution_bound(4, 2), Some(1));
        assert_eq!(compatible_resolution_bound(6, 2), Some(6));
        assert_eq!(compatible_resolution_bound(7, 3), None);
    }

    fn random_graph() -> impl Strategy<Value = CompatGraph> {
        (0usize..=20).prop_flat_map(|n| {
            let pairs: Vec<(usize, usize)> = (0..n).flat_map(|u| (u + 1..n).map(move |v| (u, v))).collect();
            let len = pairs.len();
            (Just(n), Just(pairs), proptest::collection::vec(0u8..100, len), 0u8..100).prop_map(
                |(n, pairs, coins, density)| {
                    let edges: Vec<_> =
                        pairs.into_iter().zip(coins).filter(|&(_, c)| c < density).map(|(e, _)| e).collect();
                    CompatGraph::from_edges(n, &edges).unwrap()
                },
            )
        })
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(100))]
        #[test]
        fn matches_exhaustive_search(g in random_graph()) {
            prop_assert_eq!(max_clique(&g), brute_force(&g));
        }
    }
}
