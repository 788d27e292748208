//! Exact cover search and exhaustive enumeration of parallel classes and
//! resolutions.
//!
//! The solver is Algorithm X on bitsets: at every node it branches on the
//! uncovered element with the fewest remaining candidates (lowest index on
//! ties). Each solution is reached along exactly one path, so no
//! deduplication is needed. The top of the search tree can be expanded into
//! independent subtrees and solved on a thread pool; results are sorted
//! before they are returned, so output never depends on scheduling.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bitset::BitSet;
use crate::design::Design;
use crate::error::{Error, Result};

/// How many workers a search may use.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct SearchConfig {
    /// `None` uses the global rayon pool; `Some(1)` runs on the calling thread.
    pub threads: Option<usize>,
}

impl SearchConfig {
    pub fn single_thread() -> Self {
        SearchConfig { threads: Some(1) }
    }

    pub fn with_threads(n: usize) -> Self {
        SearchConfig { threads: Some(n.max(1)) }
    }

    pub fn is_single_threaded(&self) -> bool {
        self.threads == Some(1)
    }

    /// Runs `f` inside a pool of the configured size.
    pub(crate) fn install<R: Send>(&self, f: impl FnOnce() -> R + Send) -> R {
        match self.threads {
            Some(n) if n > 1 => match rayon::ThreadPoolBuilder::new().num_threads(n).build() {
                Ok(pool) => pool.install(f),
                Err(_) => f(),
            },
            _ => f(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CoverMode {
    Count,
    Enumerate,
}

/// Select candidate sets so that every element of `0..universe_size` is
/// covered exactly once.
#[derive(Clone, Debug)]
pub struct ExactCoverInstance {
    universe_size: usize,
    sets: Vec<BitSet>,
    packed: Packed,
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct CoverResult {
    pub count: u64,
    /// Sorted solutions of sorted candidate indices; empty in count mode.
    pub solutions: Vec<Vec<usize>>,
}

/// Flat search tables: the elements of each candidate and, per element, the
/// candidates containing it as a bitset.
#[derive(Clone, Debug)]
struct Packed {
    elements: usize,
    candidates: usize,
    /// Words per element bitset.
    ew: usize,
    /// Words per candidate bitset.
    cw: usize,
    /// Elements of candidate `c` are `members[offsets[c]..offsets[c + 1]]`.
    members: Vec<u32>,
    offsets: Vec<usize>,
    containing: Vec<u64>,
}

/// Search state. `counts[e]` is the number of live candidates containing
/// the uncovered element `e`.
#[derive(Clone)]
struct Node {
    covered: Vec<u64>,
    live: Vec<u64>,
    counts: Vec<u32>,
    chosen: Vec<usize>,
}

impl Packed {
    fn new(elements: usize, sets: &[BitSet]) -> Self {
        let candidates = sets.len();
        let cw = candidates.div_ceil(64);
        let mut containing = vec![0u64; elements * cw];
        let mut members = Vec::new();
        let mut offsets = vec![0];
        for (c, s) in sets.iter().enumerate() {
            for e in s {
                members.push(e as u32);
                containing[e * cw + (c >> 6)] |= 1 << (c & 63);
            }
            offsets.push(members.len());
        }
        Packed { elements, candidates, ew: elements.div_ceil(64), cw, members, offsets, containing }
    }

    fn root(&self) -> Node {
        let mut live = vec![0u64; self.cw];
        for c in 0..self.candidates {
            live[c >> 6] |= 1 << (c & 63);
        }
        let mut counts = vec![0u32; self.elements];
        for &e in &self.members {
            counts[e as usize] += 1;
        }
        Node { covered: vec![0; self.ew], live, counts, chosen: Vec::new() }
    }

    #[inline]
    fn members(&self, c: usize) -> &[u32] {
        &self.members[self.offsets[c]..self.offsets[c + 1]]
    }

    #[inline]
    fn containing(&self, e: usize) -> &[u64] {
        &self.containing[e * self.cw..(e + 1) * self.cw]
    }

    /// Most constrained uncovered element and its candidate count, or `None`
    /// when everything is covered.
    fn choose(&self, node: &Node) -> Option<(usize, u32)> {
        let mut best: Option<(usize, u32)> = None;
        for (e, &c) in node.counts.iter().enumerate() {
            if node.covered[e >> 6] >> (e & 63) & 1 == 1 {
                continue;
            }
            if best.is_none_or(|(_, bc)| c < bc) {
                best = Some((e, c));
                if c == 0 {
                    break;
                }
            }
        }
        best
    }

    fn options(&self, node: &Node, element: usize) -> Vec<usize> {
        let mut out = Vec::new();
        for (wi, (a, b)) in node.live.iter().zip(self.containing(element)).enumerate() {
            let mut w = a & b;
            while w != 0 {
                out.push((wi << 6) + w.trailing_zeros() as usize);
                w &= w - 1;
            }
        }
        out
    }

    /// State after choosing candidate `c`, or `None` when some uncovered
    /// element is left without candidates.
    fn child(&self, node: &Node, c: usize) -> Option<Node> {
        let mut next = node.clone();
        for &e in self.members(c) {
            next.covered[e as usize >> 6] |= 1 << (e & 63);
        }
        for &e in self.members(c) {
            for wi in 0..self.cw {
                let mut w = next.live[wi] & self.containing[e as usize * self.cw + wi];
                next.live[wi] &= !w;
                while w != 0 {
                    let r = (wi << 6) + w.trailing_zeros() as usize;
                    w &= w - 1;
                    for &f in self.members(r) {
                        let f = f as usize;
                        next.counts[f] -= 1;
                        if next.counts[f] == 0 && next.covered[f >> 6] >> (f & 63) & 1 == 0 {
                            return None;
                        }
                    }
                }
            }
        }
        next.chosen.push(c);
        Some(next)
    }

    fn record(node: Node, mode: CoverMode, out: &mut CoverResult) {
        out.count += 1;
        if mode == CoverMode::Enumerate {
            let mut s = node.chosen;
            s.sort_unstable();
            out.solutions.push(s);
        }
    }

    fn search(&self, node: Node, mode: CoverMode, out: &mut CoverResult) {
        match self.choose(&node) {
            None => Self::record(node, mode, out),
            Some((_, 0)) => {}
            Some((e, _)) => {
                for c in self.options(&node, e) {
                    if let Some(child) = self.child(&node, c) {
                        self.search(child, mode, out);
                    }
                }
            }
        }
    }

    /// Breadth-first expansion of the top of the tree into independent tasks.
    fn frontier(&self, min_tasks: usize) -> (Vec<Node>, CoverResult) {
        let mut done = CoverResult::default();
        let mut level = vec![self.root()];
        for _ in 0..4 {
            if level.len() >= min_tasks {
                break;
            }
            let mut next = Vec::new();
            for node in level {
                match self.choose(&node) {
                    None => Self::record(node, CoverMode::Enumerate, &mut done),
                    Some((_, 0)) => {}
                    Some((e, _)) => {
                        next.extend(self.options(&node, e).into_iter().filter_map(|c| self.child(&node, c)));
                    }
                }
            }
            level = next;
        }
        (level, done)
    }
}

impl ExactCoverInstance {
    pub fn new(universe_size: usize, sets: Vec<BitSet>) -> Result<Self> {
        for (i, s) in sets.iter().enumerate() {
            if s.capacity() != universe_size {
                return Err(Error::Structural(format!("candidate {i} has capacity {}", s.capacity())));
            }
            if s.is_empty() {
                return Err(Error::Structural(format!("candidate {i} is empty")));
            }
        }
        let packed = Packed::new(universe_size, &sets);
        Ok(ExactCoverInstance { universe_size, sets, packed })
    }

    pub fn from_lists(universe_size: usize, sets: &[Vec<usize>]) -> Result<Self> {
        if let Some(e) = sets.iter().flatten().find(|&&e| e >= universe_size) {
            return Err(Error::Structural(format!("element {e} outside universe of size {universe_size}")));
        }
        Self::new(universe_size, sets.iter().map(|s| BitSet::from_indices(universe_size, s.iter().copied())).collect())
    }

    pub fn universe_size(&self) -> usize {
        self.universe_size
    }

    pub fn candidates(&self) -> &[BitSet] {
        &self.sets
    }

    pub fn solve(&self, mode: CoverMode, config: &SearchConfig) -> CoverResult {
        let packed = &self.packed;
        let mut result = if config.is_single_threaded() {
            let mut out = CoverResult::default();
            packed.search(packed.root(), mode, &mut out);
            out
        } else {
            config.install(|| {
                let (tasks, mut done) = packed.frontier(8 * rayon::current_num_threads().max(1));
                let parts: Vec<CoverResult> = tasks
                    .into_par_iter()
                    .map(|node| {
                        let mut out = CoverResult::default();
                        packed.search(node, mode, &mut out);
                        out
                    })
                    .collect();
                for p in parts {
                    done.count += p.count;
                    done.solutions.extend(p.solutions);
                }
                if mode == CoverMode::Count {
                    done.solutions.clear();
                }
                done
            })
        };
        result.solutions.sort_unstable();
        result
    }

    pub fn enumerate(&self, config: &SearchConfig) -> Vec<Vec<usize>> {
        self.solve(CoverMode::Enumerate, config).solutions
    }

    pub fn count(&self, config: &SearchConfig) -> u64 {
        self.solve(CoverMode::Count, config).count
    }
}

pub fn solve_exact_cover(instance: &ExactCoverInstance, mode: CoverMode, config: &SearchConfig) -> CoverResult {
    instance.solve(mode, config)
}

/// A set of pairwise disjoint blocks covering every point once, as sorted
/// block indices into the owning design.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ParallelClass(Vec<usize>);

impl ParallelClass {
    pub fn new(mut block_indices: Vec<usize>) -> Self {
        block_indices.sort_unstable();
        ParallelClass(block_indices)
    }

    pub fn block_indices(&self) -> &[usize] {
        &self.0
    }

    /// Block indices as a bitset over the design's blocks.
    pub fn block_set(&self, block_count: usize) -> BitSet {
        BitSet::from_indices(block_count, self.0.iter().copied())
    }

    pub fn is_parallel_class_of(&self, design: &Design) -> bool {
        let mut seen = BitSet::new(design.v());
        for &i in &self.0 {
            let Some(b) = design.block_bits().get(i) else {
                return false;
            };
            if !seen.is_disjoint(b) {
                return false;
            }
            seen.union_with(b);
        }
        seen.count() == design.v()
    }
}

/// A partition of all blocks into parallel classes, as sorted indices into
/// an enumerated class list.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Resolution(Vec<usize>);

impl Resolution {
    pub fn new(mut class_indices: Vec<usize>) -> Self {
        class_indices.sort_unstable();
        Resolution(class_indices)
    }

    pub fn class_indices(&self) -> &[usize] {
        &self.0
    }

    pub fn is_resolution_of(&self, design: &Design, classes: &[ParallelClass]) -> bool {
        let mut seen = BitSet::new(design.b());
        for &c in &self.0 {
            let Some(class) = classes.get(c) else {
                return false;
            };
            if !class.is_parallel_class_of(design) {
                return false;
            }
            for &b in class.block_indices() {
                if seen.contains(b) {
                    return false;
                }
                seen.insert(b);
            }
        }
        seen.count() == design.b()
    }
}

/// Every parallel class of `design`, in sorted order.
pub fn all_parallel_classes(design: &Design, config: &SearchConfig) -> Result<Vec<ParallelClass>> {
    let k = design.block_size().ok_or_else(|| Error::Parameter("blocks do not have a common size".into()))?;
    if !design.v().is_multiple_of(k) {
        return Err(Error::Parameter(format!("v = {} is not divisible by k = {k}", design.v())));
    }
    let inst = ExactCoverInstance::new(design.v(), design.block_bits().to_vec())?;
    Ok(inst.enumerate(config).into_iter().map(ParallelClass::new).collect())
}

/// Every resolution of `design` built from `classes`, which must be the
/// complete class list.
pub fn all_resolutions(design: &Design, classes: &[ParallelClass], config: &SearchConfig) -> Result<Vec<Resolution>> {
    let sets = classes
        .iter()
        .map(|c| {
            if c.block_indices().iter().any(|&b| b >= design.b()) {
                return Err(Error::Context("class refers to a block outside the design".into()));
            }
            Ok(c.block_set(design.b()))
        })
        .collect::<Result<Vec<_>>>()?;
    if design.b() == 0 {
        return Ok(vec![Resolution::new(vec![])]);
    }
    let inst = ExactCoverInstance::new(design.b(), sets)?;
    Ok(inst.enumerate(config).into_iter().map(Resolution::new).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    /// Brute force over all subsets of at most 20 candidates.
    fn naive(universe: usize, sets: &[Vec<usize>]) -> Vec<Vec<usize>> {
        let mut out = Vec::new();
        for mask in 0u32..(1 << sets.len()) {
            let mut cover = vec![0; universe];
            for (i, s) in sets.iter().enumerate() {
                if mask >> i & 1 == 1 {
                    for &e in s {
                        cover[e] += 1;
                    }
                }
            }
            if cover.iter().all(|&c| c == 1) {
                out.push((0..sets.len()).filter(|i| mask >> i & 1 == 1).collect());
            }
        }
        out.sort();
        out
    }

    fn complete_graph_design(n: u32) -> Design {
        let mut blocks = Vec::new();
        for a in 0..n {
            for b in a + 1..n {
                blocks.push(vec![a, b]);
            }
        }
        Design::new(n as usize, blocks).unwrap()
    }

    #[test]
    fn two_element_universe() {
        let inst = ExactCoverInstance::from_lists(2, &[vec![0], vec![1], vec![0, 1]]).unwrap();
        assert_eq!(inst.enumerate(&SearchConfig::single_thread()), vec![vec![0, 1], vec![2]]);
    }

    #[test]
    fn empty_universe_has_one_empty_solution() {
        let inst = ExactCoverInstance::new(0, vec![]).unwrap();
        assert_eq!(inst.enumerate(&SearchConfig::default()), vec![Vec::<usize>::new()]);
    }

    #[test]
    fn uncoverable_element_gives_no_solutions() {
        let inst = ExactCoverInstance::from_lists(3, &[vec![0], vec![1]]).unwrap();
        assert!(inst.enumerate(&SearchConfig::default()).is_empty());
        assert_eq!(inst.count(&SearchConfig::default()), 0);
    }

    #[test]
    fn malformed_candidates_rejected() {
        assert!(ExactCoverInstance::from_lists(2, &[vec![]]).is_err());
        assert!(ExactCoverInstance::from_lists(2, &[vec![2]]).is_err());
    }

    #[test]
    fn perfect_matchings_of_k4_and_k6() {
        let k4 = complete_graph_design(4);
        let inst = ExactCoverInstance::new(4, k4.block_bits().to_vec()).unwrap();
        assert_eq!(inst.count(&SearchConfig::default()), 3);

        let k6 = complete_graph_design(6);
        let lists: Vec<Vec<usize>> = k6.blocks().iter().map(|b| b.iter().map(|&x| x as usize).collect()).collect();
        let oracle = naive(6, &lists);
        assert_eq!(oracle.len(), 15);
        let inst = ExactCoverInstance::from_lists(6, &lists).unwrap();
        assert_eq!(inst.enumerate(&SearchConfig::single_thread()), oracle);
        assert_eq!(inst.enumerate(&SearchConfig::with_threads(3)), oracle);
    }

    #[test]
    fn k4_classes_and_resolutions() {
        let d = complete_graph_design(4);
        let classes = all_parallel_classes(&d, &SearchConfig::default()).unwrap();
        assert_eq!(classes.len(), 3);
        let res = all_resolutions(&d, &classes, &SearchConfig::default()).unwrap();
        assert_eq!(res, vec![Resolution::new(vec![0, 1, 2])]);
        assert!(res[0].is_resolution_of(&d, &classes));
    }

    /// Brute force: all 5-subsets of the 15 matchings that partition the edges.
    #[test]
    fn k6_has_six_one_factorizations() {
        let d = complete_graph_design(6);
        let classes = all_parallel_classes(&d, &SearchConfig::default()).unwrap();
        assert_eq!(classes.len(), 15);
        let class_lists: Vec<Vec<usize>> = classes.iter().map(|c| c.block_indices().to_vec()).collect();
        let oracle = naive(15, &class_lists);
        assert_eq!(oracle.len(), 6);
        let res = all_resolutions(&d, &classes, &SearchConfig::default()).unwrap();
        let got: Vec<Vec<usize>> = res.iter().map(|r| r.class_indices().to_vec()).collect();
        assert_eq!(got, oracle);
        for r in &res {
            assert!(r.is_resolution_of(&d, &classes));
            // every point appears once per class, r = 5 times overall
            let mut deg = [0usize; 6];
            for &c in r.class_indices() {
                for &b in classes[c].block_indices() {
                    for &x in d.block(b) {
                        deg[x as usize] += 1;
                    }
                }
            }
            assert!(deg.iter().all(|&x| x == 5));
        }
    }

    #[test]
    fn indivisible_point_count_is_a_parameter_error() {
        let d = complete_graph_design(5);
        assert!(matches!(all_parallel_classes(&d, &SearchConfig::default()), Err(Error::Parameter(_))));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]
        #[test]
        fn matches_naive_enumeration(
            universe in 1usize..9,
            raw in prop::collection::vec(prop::collection::vec(0usize..9, 1..4), 0..16),
        ) {
            let sets: Vec<Vec<usize>> = raw
                .into_iter()
                .map(|s| {
                    let mut s: Vec<usize> = s.into_iter().map(|e| e % universe).collect();
                    s.sort_unstable();
                    s.dedup();
                    s
                })
                .collect();
            let inst = ExactCoverInstance::from_lists(universe, &sets).unwrap();
            let oracle = naive(universe, &sets);
            let single = inst.enumerate(&SearchConfig::single_thread());
            prop_assert_eq!(&single, &oracle);
            prop_assert_eq!(inst.enumerate(&SearchConfig::with_threads(4)), single);
            prop_assert_eq!(inst.count(&SearchConfig::default()), oracle.len() as u64);
        }
    }
}
