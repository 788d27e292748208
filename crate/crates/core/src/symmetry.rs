//! Automorphism groups, canonical forms and isomorphism tests for designs
//! and incidence structures.
//!
//! A structure is turned into a vertex-colored bipartite graph (points on
//! one side, distinct blocks on the other, blocks colored by multiplicity).
//! The search tree is the usual individualization-refinement tree: each node
//! is an equitable ordered partition, children individualize one vertex of
//! a target cell, and leaves are discrete partitions, i.e. vertex orderings. Every refinement step contributes a label-invariant
//! hash to the node's trace, and nodes whose traces disagree cannot lead to
//! equivalent leaves.

use std::collections::hash_map::DefaultHasher;
use std::fmt;
use std::hash::{Hash, Hasher};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::design::Design;
use crate::error::{Error, Result};
use crate::geometry::IncidenceStructure;

/// Anything with points `0..point_count` and a list of blocks.
pub trait Incidence {
    fn point_count(&self) -> usize;
    fn block_lists(&self) -> Vec<Vec<usize>>;
}

impl Incidence for Design {
    fn point_count(&self) -> usize {
        self.v()
    }

    fn block_lists(&self) -> Vec<Vec<usize>> {
        self.blocks().iter().map(|b| b.iter().map(|&x| x as usize).collect()).collect()
    }
}

impl Incidence for IncidenceStructure {
    fn point_count(&self) -> usize {
        IncidenceStructure::point_count(self)
    }

    fn block_lists(&self) -> Vec<Vec<usize>> {
        self.lines().iter().map(|l| l.to_vec()).collect()
    }
}

/// Sorted blocks with their multiplicities.
fn block_multiset<T: Incidence + ?Sized>(x: &T) -> Vec<(Vec<usize>, u32)> {
    let mut blocks: Vec<Vec<usize>> = x
        .block_lists()
        .into_iter()
        .map(|mut b| {
            b.sort_unstable();
            b
        })
        .collect();
    blocks.sort();
    let mut out: Vec<(Vec<usize>, u32)> = Vec::new();
    for b in blocks {
        match out.last_mut() {
            Some((last, m)) if *last == b => *m += 1,
            _ => out.push((b, 1)),
        }
    }
    out
}

/// Simple undirected graph with a color per vertex.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ColoredGraph {
    colors: Vec<u32>,
    adj: Vec<Vec<u32>>,
}

impl ColoredGraph {
    pub fn new(colors: Vec<u32>, edges: &[(usize, usize)]) -> Result<Self> {
        let n = colors.len();
        let mut adj = vec![Vec::new(); n];
        for &(u, v) in edges {
            if u >= n || v >= n || u == v {
                return Err(Error::Structural(format!("bad edge ({u}, {v}) for {n} vertices")));
            }
            adj[u].push(v as u32);
            adj[v].push(u as u32);
        }
        for a in &mut adj {
            a.sort_unstable();
            a.dedup();
        }
        Ok(ColoredGraph { colors, adj })
    }

    /// Points are vertices `0..v` with color 0; each distinct block is a
    /// further vertex colored by its multiplicity.
    pub fn from_incidence<T: Incidence + ?Sized>(x: &T) -> Self {
        let v = x.point_count();
        let blocks = block_multiset(x);
        let mut colors = vec![0u32; v];
        let mut edges = Vec::new();
        for (i, (b, m)) in blocks.iter().enumerate() {
            colors.push(*m);
            edges.extend(b.iter().map(|&p| (p, v + i)));
        }
        ColoredGraph::new(colors, &edges).expect("incidences are in range")
    }

    pub fn vertex_count(&self) -> usize {
        self.colors.len()
    }

    pub fn colors(&self) -> &[u32] {
        &self.colors
    }

    pub fn neighbors(&self, v: usize) -> &[u32] {
        &self.adj[v]
    }

    pub fn has_edge(&self, u: usize, v: usize) -> bool {
        self.adj[u].binary_search(&(v as u32)).is_ok()
    }

    pub fn edge_count(&self) -> usize {
        self.adj.iter().map(Vec::len).sum::<usize>() / 2
    }

    /// Copy in which vertex `v` becomes `perm[v]`.
    pub fn relabeled(&self, perm: &[usize]) -> ColoredGraph {
        let n = self.vertex_count();
        let mut colors = vec![0; n];
        let mut edges = Vec::with_capacity(self.edge_count());
        for v in 0..n {
            colors[perm[v]] = self.colors[v];
            for &u in &self.adj[v] {
                if (u as usize) > v {
                    edges.push((perm[v], perm[u as usize]));
                }
            }
        }
        ColoredGraph::new(colors, &edges).expect("a permutation keeps edges valid")
    }

    /// Whether `map` is a color-preserving isomorphism onto `other`.
    pub fn is_isomorphism(&self, other: &ColoredGraph, map: &[usize]) -> bool {
        let n = self.vertex_count();
        if other.vertex_count() != n || map.len() != n || self.edge_count() != other.edge_count() {
            return false;
        }
        let mut seen = vec![false; n];
        for &m in map {
            if m >= n || std::mem::replace(&mut seen[m], true) {
                return false;
            }
        }
        (0..n).all(|v| {
            self.colors[v] == other.colors[map[v]]
                && self.adj[v].iter().all(|&u| other.has_edge(map[v], map[u as usize]))
        })
    }
}

/// Ordered partition stored as a cell index per vertex; cells are numbered
/// in their canonical order.
#[derive(Clone, Debug)]
struct Node {
    cell: Vec<u32>,
    cells: usize,
    trace: Vec<u64>,
    prefix: Vec<usize>,
}

impl Node {
    fn is_discrete(&self) -> bool {
        self.cells == self.cell.len()
    }
}

fn hash_of<T: Hash>(x: &T) -> u64 {
    let mut h = DefaultHasher::new();
    x.hash(&mut h);
    h.finish()
}

struct Refiner<'a> {
    g: &'a ColoredGraph,
}

impl Refiner<'_> {
    fn root(&self) -> Node {
        let mut values: Vec<u32> = self.g.colors.clone();
        values.sort_unstable();
        let mut counted: Vec<(u32, usize)> = Vec::new();
        for c in values {
            match counted.last_mut() {
                Some((last, k)) if *last == c => *k += 1,
                _ => counted.push((c, 1)),
            }
        }
        let cell = self.g.colors.iter().map(|c| counted.binary_search_by_key(c, |&(v, _)| v).unwrap() as u32).collect();
        let mut node = Node { cell, cells: counted.len(), trace: vec![hash_of(&counted)], prefix: Vec::new() };
        self.refine(&mut node);
        node
    }

    /// Splits cells by the multiset of neighbor cells until the partition is
    /// equitable, appending one hash per round to the trace.
    fn refine(&self, node: &mut Node) {
        let n = self.g.vertex_count();
        let mut order: Vec<usize> = (0..n).collect();
        loop {
            let keys: Vec<(u32, Vec<u32>)> = (0..n)
                .map(|v| {
                    let mut nb: Vec<u32> = self.g.adj[v].iter().map(|&u| node.cell[u as usize]).collect();
                    nb.sort_unstable();
                    (node.cell[v], nb)
                })
                .collect();
            order.sort_by(|&a, &b| keys[a].cmp(&keys[b]));
            let mut h = DefaultHasher::new();
            let mut next = 0u32;
            let mut run = 0usize;
            for (i, &v) in order.iter().enumerate() {
                if i > 0 && keys[v] != keys[order[i - 1]] {
                    (&keys[order[i - 1]], run).hash(&mut h);
                    next += 1;
                    run = 0;
                }
                run += 1;
                node.cell[v] = next;
            }
            if let Some(&last) = order.last() {
                (&keys[last], run).hash(&mut h);
            }
            let cells = if n == 0 { 0 } else { next as usize + 1 };
            node.trace.push(h.finish());
            if cells == node.cells {
                return;
            }
            node.cells = cells;
        }
    }

    /// Vertices of the target cell, ascending. Among cells with more than
    /// one vertex this is the first one that is non-trivially joined to the
    /// most cells (a vertex of it has some, but not all, of its neighbors in
    /// that cell). The partition is equitable, so any vertex of a cell gives
    /// the same count.
    fn target_cell(&self, node: &Node) -> Vec<usize> {
        let mut size = vec![0usize; node.cells];
        let mut representative = vec![usize::MAX; node.cells];
        for (v, &c) in node.cell.iter().enumerate() {
            size[c as usize] += 1;
            if representative[c as usize] == usize::MAX {
                representative[c as usize] = v;
            }
        }
        let mut best: Option<(usize, usize)> = None;
        let mut hits = vec![0usize; node.cells];
        for c in (0..node.cells).filter(|&c| size[c] > 1) {
            let nb = &self.g.adj[representative[c]];
            for &u in nb {
                hits[node.cell[u as usize] as usize] += 1;
            }
            let mut joined = 0;
            for &u in nb {
                let d = node.cell[u as usize] as usize;
                if hits[d] != 0 {
                    joined += usize::from(hits[d] < size[d]);
                    hits[d] = 0;
                }
            }
            if best.is_none_or(|(_, j)| joined > j) {
                best = Some((c, joined));
            }
        }
        match best {
            Some((t, _)) => (0..node.cell.len()).filter(|&v| node.cell[v] as usize == t).collect(),
            None => Vec::new(),
        }
    }

    /// Child with `v` split off in front of the rest of its cell.
    fn child(&self, node: &Node, v: usize) -> Node {
        let c = node.cell[v];
        let cell =
            node.cell.iter().enumerate().map(|(u, &d)| if d > c || (d == c && u != v) { d + 1 } else { d }).collect();
        let mut prefix = node.prefix.clone();
        prefix.push(v);
        let mut trace = node.trace.clone();
        trace.push(c as u64);
        let mut child = Node { cell, cells: node.cells + 1, trace, prefix };
        self.refine(&mut child);
        child
    }
}

/// The first path of the search tree: nodes from the root to the leaf
/// reached by always individualizing the smallest vertex of the target cell.
struct FirstPath {
    nodes: Vec<Node>,
}

impl FirstPath {
    fn new(r: &Refiner<'_>) -> Self {
        let mut nodes = vec![r.root()];
        loop {
            let last = nodes.last().unwrap();
            let cell = r.target_cell(last);
            if cell.is_empty() {
                break;
            }
            let child = r.child(last, cell[0]);
            nodes.push(child);
        }
        FirstPath { nodes }
    }

    fn leaf(&self) -> &Node {
        self.nodes.last().unwrap()
    }
}

/// Depth-first search below `node` of the tree of `target` for a leaf whose
/// traces follow `path` and whose induced map is an isomorphism from the
/// graph of `path` onto `target`.
fn find_equivalent_leaf(source: &ColoredGraph, path: &FirstPath, r: &Refiner<'_>, node: &Node) -> Option<Vec<usize>> {
    let depth = node.prefix.len();
    let reference = path.nodes.get(depth)?;
    if node.trace != reference.trace {
        return None;
    }
    if node.is_discrete() {
        // map[v] = vertex of the target at the position of v in the reference leaf.
        let mut inverse = vec![0; node.cell.len()];
        for (v, &c) in node.cell.iter().enumerate() {
            inverse[c as usize] = v;
        }
        let map: Vec<usize> = path.leaf().cell.iter().map(|&c| inverse[c as usize]).collect();
        return source.is_isomorphism(r.g, &map).then_some(map);
    }
    for u in r.target_cell(node) {
        if let Some(map) = find_equivalent_leaf(source, path, r, &r.child(node, u)) {
            return Some(map);
        }
    }
    None
}

struct UnionFind(Vec<usize>);

impl UnionFind {
    fn new(n: usize) -> Self {
        UnionFind((0..n).collect())
    }

    fn find(&mut self, mut x: usize) -> usize {
        while self.0[x] != x {
            self.0[x] = self.0[self.0[x]];
            x = self.0[x];
        }
        x
    }

    fn union(&mut self, a: usize, b: usize) {
        let (a, b) = (self.find(a), self.find(b));
        if a != b {
            self.0[a.max(b)] = a.min(b);
        }
    }

    fn with_generators<'a>(n: usize, gens: impl IntoIterator<Item = &'a Vec<usize>>) -> Self {
        let mut uf = UnionFind::new(n);
        for g in gens {
            for (v, &w) in g.iter().enumerate() {
                uf.union(v, w);
            }
        }
        uf
    }
}

/// Automorphism group of a colored graph as generators plus the orbit
/// lengths along a base.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GraphAutomorphisms {
    /// Vertex permutations.
    pub generators: Vec<Vec<usize>>,
    /// The base vertices individualized along the first path.
    pub base: Vec<usize>,
    /// `orbit_lengths[i]` is the orbit length of `base[i]` under the
    /// pointwise stabilizer of `base[..i]`.
    pub orbit_lengths: Vec<usize>,
}

impl GraphAutomorphisms {
    pub fn order(&self) -> GroupOrder {
        GroupOrder::product(&self.orbit_lengths)
    }
}

/// Computes generators level by level from the bottom of the first path.
/// At level `i`, every vertex `w` of the target cell that is not yet known
/// to share an orbit with `base[i]` gets an exhaustive search for an
/// automorphism fixing `base[..i]` and sending `base[i]` to `w`, so the orbit
/// lengths, and with them the group order, are exact.
pub fn graph_automorphisms(g: &ColoredGraph) -> GraphAutomorphisms {
    let r = Refiner { g };
    let path = FirstPath::new(&r);
    let n = g.vertex_count();
    let depth = path.nodes.len() - 1;
    let base: Vec<usize> = path.leaf().prefix.clone();
    let mut generators: Vec<Vec<usize>> = Vec::new();
    let mut orbit_lengths = vec![0; depth];
    for level in (0..depth).rev() {
        let node = &path.nodes[level];
        let cell = r.target_cell(node);
        let v = base[level];
        let mut uf = UnionFind::with_generators(n, &generators);
        for &w in &cell {
            if uf.find(w) == uf.find(v) {
                continue;
            }
            if let Some(map) = find_equivalent_leaf(g, &path, &r, &r.child(node, w)) {
                // map sends the first-path leaf to a leaf below w, so it fixes
                // base[..level] and maps v to w.
                for (x, &y) in map.iter().enumerate() {
                    uf.union(x, y);
                }
                generators.push(map);
            }
        }
        let root = uf.find(v);
        orbit_lengths[level] = cell.iter().filter(|&&w| uf.find(w) == root).count();
    }
    GraphAutomorphisms { generators, base, orbit_lengths }
}

/// Canonical relabeling and certificate of a colored graph.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CanonicalForm {
    /// `labeling[v]` is the canonical position of vertex `v`.
    pub labeling: Vec<usize>,
    /// Hex SHA-256 digest of the canonical graph; equal exactly for
    /// isomorphic graphs.
    pub certificate: String,
}

struct CanonicalBest {
    trace: Vec<u64>,
    edges: Vec<(u32, u32)>,
    labeling: Vec<u32>,
}

fn leaf_edges(g: &ColoredGraph, cell: &[u32]) -> Vec<(u32, u32)> {
    let mut edges: Vec<(u32, u32)> = (0..g.vertex_count())
        .flat_map(|v| {
            g.adj[v].iter().filter(move |&&u| (u as usize) > v).map(move |&u| {
                let (a, b) = (cell[v], cell[u as usize]);
                (a.min(b), a.max(b))
            })
        })
        .collect();
    edges.sort_unstable();
    edges
}

fn canonical_search(r: &Refiner<'_>, node: &Node, generators: &[Vec<usize>], best: &mut Option<CanonicalBest>) {
    if let Some(b) = best.as_ref() {
        let len = node.trace.len().min(b.trace.len());
        if node.trace[..len] > b.trace[..len] {
            return;
        }
    }
    if node.is_discrete() {
        let edges = leaf_edges(r.g, &node.cell);
        let better = match best.as_ref() {
            None => true,
            Some(b) => (&node.trace, &edges) < (&b.trace, &b.edges),
        };
        if better {
            *best = Some(CanonicalBest { trace: node.trace.clone(), edges, labeling: node.cell.clone() });
        }
        return;
    }
    // Children in one orbit of the generators fixing the prefix pointwise
    // have isomorphic subtrees; only the smallest vertex of each is kept.
    let fixing: Vec<&Vec<usize>> = generators.iter().filter(|g| node.prefix.iter().all(|&p| g[p] == p)).collect();
    let mut uf = UnionFind::with_generators(node.cell.len(), fixing);
    let mut seen = std::collections::HashSet::new();
    for u in r.target_cell(node) {
        if seen.insert(uf.find(u)) {
            canonical_search(r, &r.child(node, u), generators, best);
        }
    }
}

pub fn canonical_form(g: &ColoredGraph) -> CanonicalForm {
    let aut = graph_automorphisms(g);
    let r = Refiner { g };
    let mut best = None;
    canonical_search(&r, &r.root(), &aut.generators, &mut best);
    let best = best.expect("the search tree has a leaf");
    let mut colors = vec![0u32; g.vertex_count()];
    for (v, &c) in best.labeling.iter().enumerate() {
        colors[c as usize] = g.colors[v];
    }
    let mut h = Sha256::new();
    h.update((g.vertex_count() as u64).to_le_bytes());
    for c in &colors {
        h.update(c.to_le_bytes());
    }
    for (a, b) in &best.edges {
        h.update(a.to_le_bytes());
        h.update(b.to_le_bytes());
    }
    CanonicalForm {
        labeling: best.labeling.iter().map(|&c| c as usize).collect(),
        certificate: hex::encode(h.finalize()),
    }
}

/// A color-preserving isomorphism from `a` to `b`, if one exists.
pub fn graph_isomorphism(a: &ColoredGraph, b: &ColoredGraph) -> Option<Vec<usize>> {
    if a.vertex_count() != b.vertex_count() || a.edge_count() != b.edge_count() {
        return None;
    }
    let ra = Refiner { g: a };
    let rb = Refiner { g: b };
    let path = FirstPath::new(&ra);
    find_equivalent_leaf(a, &path, &rb, &rb.root())
}

/// Positive integer stored as base-10^9 limbs, least significant first.
#[derive(Clone, PartialEq, Eq)]
pub struct GroupOrder(Vec<u32>);

impl GroupOrder {
    const BASE: u64 = 1_000_000_000;

    pub fn product(factors: &[usize]) -> Self {
        let mut limbs = vec![1u32];
        for &f in factors {
            let mut carry = 0u64;
            for limb in &mut limbs {
                let x = *limb as u64 * f as u64 + carry;
                *limb = (x % Self::BASE) as u32;
                carry = x / Self::BASE;
            }
            while carry > 0 {
                limbs.push((carry % Self::BASE) as u32);
                carry /= Self::BASE;
            }
        }
        while limbs.len() > 1 && *limbs.last().unwrap() == 0 {
            limbs.pop();
        }
        GroupOrder(limbs)
    }

    pub fn to_u128(&self) -> Option<u128> {
        self.0.iter().rev().try_fold(0u128, |acc, &l| acc.checked_mul(Self::BASE as u128)?.checked_add(l as u128))
    }
}

impl fmt::Display for GroupOrder {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut limbs = self.0.iter().rev();
        write!(f, "{}", limbs.next().unwrap())?;
        for l in limbs {
            write!(f, "{l:09}")?;
        }
        Ok(())
    }
}

impl fmt::Debug for GroupOrder {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

impl Serialize for GroupOrder {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self.to_u128().and_then(|x| u64::try_from(x).ok()) {
            Some(x) => s.serialize_u64(x),
            None => s.serialize_str(&self.to_string()),
        }
    }
}

impl<'de> Deserialize<'de> for GroupOrder {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Repr {
            Number(u64),
            Text(String),
        }
        let digits = match Repr::deserialize(d)? {
            Repr::Number(x) => x.to_string(),
            Repr::Text(s) => s,
        };
        if digits.is_empty() || !digits.bytes().all(|b| b.is_ascii_digit()) {
            return Err(serde::de::Error::custom("group order must be a decimal integer"));
        }
        let limbs =
            digits.as_bytes().rchunks(9).map(|c| std::str::from_utf8(c).unwrap().parse::<u32>().unwrap()).collect();
        Ok(GroupOrder(limbs))
    }
}

/// Automorphism group of a design or incidence structure acting on points.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct AutResult {
    pub group_order: GroupOrder,
    /// Point permutations (`g[x]` is the image of `x`), each checked to map
    /// the block multiset onto itself.
    pub generators: Vec<Vec<usize>>,
}

/// Whether `perm` maps the block multiset of `x` onto itself.
pub fn preserves_blocks<T: Incidence + ?Sized>(x: &T, perm: &[usize]) -> bool {
    if perm.len() != x.point_count() {
        return false;
    }
    let blocks = block_multiset(x);
    let mut image: Vec<(Vec<usize>, u32)> = blocks
        .iter()
        .map(|(b, m)| {
            let mut c: Vec<usize> = b.iter().map(|&p| perm[p]).collect();
            c.sort_unstable();
            (c, *m)
        })
        .collect();
    image.sort();
    image == blocks
}

/// Automorphism group on points. Point and block colors are never mixed,
/// so dualities are not counted.
pub fn automorphism_group_order<T: Incidence + ?Sized>(x: &T) -> AutResult {
    let g = ColoredGraph::from_incidence(x);
    let aut = graph_automorphisms(&g);
    let v = x.point_count();
    let generators: Vec<Vec<usize>> = aut.generators.iter().map(|p| p[..v].to_vec()).collect();
    for p in &generators {
        assert!(preserves_blocks(x, p), "automorphism search produced a generator that moves a block off the design");
    }
    AutResult { group_order: aut.order(), generators }
}

/// A point bijection from `a` to `b` mapping blocks to blocks, validated
/// against the incidences directly.
pub fn find_isomorphism<A: Incidence + ?Sized, B: Incidence + ?Sized>(a: &A, b: &B) -> Option<Vec<usize>> {
    if a.point_count() != b.point_count() {
        return None;
    }
    let map = graph_isomorphism(&ColoredGraph::from_incidence(a), &ColoredGraph::from_incidence(b))?;
    let points = map[..a.point_count()].to_vec();
    let mut image: Vec<(Vec<usize>, u32)> = block_multiset(a)
        .into_iter()
        .map(|(blk, m)| {
            let mut c: Vec<usize> = blk.iter().map(|&p| points[p]).collect();
            c.sort_unstable();
            (c, m)
        })
        .collect();
    image.sort();
    assert!(image == block_multiset(b), "isomorphism search produced a map that fails the incidence check");
    Some(points)
}

pub fn isomorphic<A: Incidence + ?Sized, B: Incidence + ?Sized>(a: &A, b: &B) -> bool {
    find_isomorphism(a, b).is_some()
}

/// Certificate of the incidence graph; equal exactly for isomorphic
/// structures.
pub fn certificate<T: Incidence + ?Sized>(x: &T) -> String {
    canonical_form(&ColoredGraph::from_incidence(x)).certificate
}

/// Whether x ↦ x+1 mod (v-1) with the last point fixed preserves the blocks.
pub fn has_rotational_automorphism(design: &Design) -> bool {
    let v = design.v();
    if v < 2 {
        return false;
    }
    let n = v - 1;
    let shift: Vec<usize> = (0..v).map(|x| if x == n { n } else { (x + 1) % n }).collect();
    preserves_blocks(design, &shift)
}

/// Cycle notation with fixed points omitted, each cycle starting at its
/// smallest point.
pub fn cycles(perm: &[usize]) -> Vec<Vec<usize>> {
    let mut seen = vec![false; perm.len()];
    let mut out = Vec::new();
    for start in 0..perm.len() {
        if seen[start] || perm[start] == start {
            continue;
        }
        let mut cycle = vec![start];
        seen[start] = true;
        let mut x = perm[start];
        while x != start {
            seen[x] = true;
            cycle.push(x);
            x = perm[x];
        }
        out.push(cycle);
    }
    out
}
