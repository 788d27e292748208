//! Difference families, their development into 1-rotational designs, and
//! validation of block designs.
//!
//! Points of a developed design are labeled `0..n` for the elements of Z_n
//! and `n` for the fixed point (written ∞ in the literature).

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::bitset::BitSet;
use crate::enumeration::ParallelClass;
use crate::error::{Error, Result};
use crate::gf::BinaryMatrix;

/// Base blocks over Z_n that generate a resolvable 1-rotational design.
///
/// With block size `k`, write `m = n / (k - 1)`. The family generates the
/// design on Z_n ∪ {∞} whose blocks are all translates of the base blocks
/// together with the `m` translates of the short orbit block
/// `{0, m, 2m, ..., (k-2)m, ∞}`. For the 2-(52,4,1) case n = 51, m = 17
/// and there are four base blocks of size four.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DifferenceFamily {
    pub modulus: u32,
    pub base_blocks: Vec<Vec<u32>>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum FamilyViolation {
    /// A within-block difference is a multiple of `m`.
    ForbiddenDifference { difference: u32 },
    /// A difference occurs more than once.
    RepeatedDifference { difference: u32, count: usize },
    /// A required difference never occurs.
    MissingDifference { difference: u32 },
    /// Base-block residues mod `m` are not exactly 1..m-1.
    ResidueMismatch { residue: u32, count: usize },
}

impl fmt::Display for FamilyViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FamilyViolation::ForbiddenDifference { difference } => {
                write!(f, "difference {difference} lies in the short-orbit subgroup")
            }
            FamilyViolation::RepeatedDifference { difference, count } => {
                write!(f, "difference {difference} occurs {count} times")
            }
            FamilyViolation::MissingDifference { difference } => write!(f, "difference {difference} never occurs"),
            FamilyViolation::ResidueMismatch { residue, count } => {
                write!(f, "residue {residue} occurs {count} times among base-block elements")
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FamilyReport {
    pub differences_ok: bool,
    pub residues_ok: bool,
    pub first_violation: Option<FamilyViolation>,
}

impl FamilyReport {
    pub fn is_valid(&self) -> bool {
        self.differences_ok && self.residues_ok
    }
}

impl fmt::Display for FamilyReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.first_violation {
            None => write!(f, "valid"),
            Some(v) => write!(f, "{v}"),
        }
    }
}

impl DifferenceFamily {
    pub fn new(modulus: u32, base_blocks: Vec<Vec<u32>>) -> Self {
        DifferenceFamily { modulus, base_blocks }
    }

    pub fn block_size(&self) -> usize {
        self.base_blocks.first().map_or(0, Vec::len)
    }

    /// Period `m = n / (k - 1)` of the short orbit.
    pub fn short_period(&self) -> u32 {
        self.modulus / (self.block_size() as u32 - 1)
    }

    pub fn infinity(&self) -> u32 {
        self.modulus
    }

    pub fn point_count(&self) -> usize {
        self.modulus as usize + 1
    }

    /// Checks everything that does not depend on the difference conditions.
    pub fn check_structure(&self) -> Result<()> {
        let n = self.modulus;
        let k = self.block_size();
        let t = self.base_blocks.len();
        if n < 2 {
            return Err(Error::Structural(format!("modulus {n} is too small")));
        }
        if t == 0 {
            return Err(Error::Structural("no base blocks".into()));
        }
        if k < 2 {
            return Err(Error::Structural(format!("base blocks of size {k}")));
        }
        for (i, b) in self.base_blocks.iter().enumerate() {
            if b.len() != k {
                return Err(Error::Structural(format!("base block {i} has size {}, expected {k}", b.len())));
            }
            if let Some(x) = b.iter().find(|&&x| x >= n) {
                return Err(Error::Structural(format!("base block {i} element {x} not in Z_{n}")));
            }
            let mut s = b.clone();
            s.sort_unstable();
            s.dedup();
            if s.len() != k {
                return Err(Error::Structural(format!("base block {i} repeats an element")));
            }
        }
        let k = k as u32;
        if !n.is_multiple_of(k - 1) {
            return Err(Error::Structural(format!("block size {k} needs k-1 to divide {n}")));
        }
        if t as u32 * k * (k - 1) != n - (k - 1) {
            return Err(Error::Structural(format!(
                "{t} base blocks of size {k} give {} differences; {} are required",
                t as u32 * k * (k - 1),
                n - (k - 1)
            )));
        }
        Ok(())
    }

    /// Block list of the developed design, not yet canonically ordered.
    fn developed_blocks(&self) -> Vec<Vec<u32>> {
        let n = self.modulus;
        let k = self.block_size() as u32;
        let m = self.short_period();
        let mut blocks = Vec::with_capacity(self.base_blocks.len() * n as usize + m as usize);
        for base in &self.base_blocks {
            for shift in 0..n {
                blocks.push(base.iter().map(|&x| (x + shift) % n).collect());
            }
        }
        for j in 0..m {
            let mut b: Vec<u32> = (0..k - 1).map(|l| j + l * m).collect();
            b.push(self.infinity());
            blocks.push(b);
        }
        blocks
    }

    /// Blocks of the starter class: the short block through 0 and the
    /// translates `A_i + m*j` for `0 <= j < k-1`.
    pub fn starter_blocks(&self) -> Result<Vec<Vec<u32>>> {
        self.check_structure()?;
        let n = self.modulus;
        let k = self.block_size() as u32;
        let m = self.short_period();
        let mut short: Vec<u32> = (0..k - 1).map(|l| l * m).collect();
        short.push(self.infinity());
        let mut blocks = vec![short];
        for base in &self.base_blocks {
            for j in 0..k - 1 {
                blocks.push(base.iter().map(|&x| (x + m * j) % n).collect());
            }
        }
        let mut seen = BitSet::new(self.point_count());
        for b in &blocks {
            for &x in b {
                if seen.contains(x as usize) {
                    return Err(Error::Structural(format!(
                        "starter blocks overlap at point {x}; the family is not resolvable"
                    )));
                }
                seen.insert(x as usize);
            }
        }
        Ok(blocks)
    }
}

/// Checks the difference and residue conditions of a family.
///
/// The ordered within-block differences must hit every element of Z_n
/// outside the subgroup generated by `m` exactly once (their number equals
/// the number of targets, so "at least once" and "exactly once" coincide),
/// and the base-block elements reduced mod `m` must be exactly 1..m-1.
pub fn validate_family(family: &DifferenceFamily) -> Result<FamilyReport> {
    family.check_structure()?;
    let n = family.modulus;
    let m = family.short_period();

    let mut counts = vec![0usize; n as usize];
    for b in &family.base_blocks {
        for &x in b {
            for &y in b {
                if x != y {
                    counts[((x + n - y) % n) as usize] += 1;
                }
            }
        }
    }
    let mut diff_violation = None;
    for d in 1..n {
        let c = counts[d as usize];
        let v = if d % m == 0 {
            (c > 0).then_some(FamilyViolation::ForbiddenDifference { difference: d })
        } else if c > 1 {
            Some(FamilyViolation::RepeatedDifference { difference: d, count: c })
        } else if c == 0 {
            Some(FamilyViolation::MissingDifference { difference: d })
        } else {
            None
        };
        if v.is_some() {
            diff_violation = v;
            break;
        }
    }

    let mut residues = vec![0usize; m as usize];
    for b in &family.base_blocks {
        for &x in b {
            residues[(x % m) as usize] += 1;
        }
    }
    let residue_violation = (0..m)
        .find(|&r| residues[r as usize] != usize::from(r != 0))
        .map(|r| FamilyViolation::ResidueMismatch { residue: r, count: residues[r as usize] });

    Ok(FamilyReport {
        differences_ok: diff_violation.is_none(),
        residues_ok: residue_violation.is_none(),
        first_violation: diff_violation.or(residue_violation),
    })
}

/// Develops a valid family into its 1-rotational design.
pub fn develop_family(family: &DifferenceFamily) -> Result<Design> {
    let report = validate_family(family)?;
    if !report.is_valid() {
        return Err(Error::InvalidFamily(report));
    }
    Design::new(family.point_count(), family.developed_blocks())
}

/// The starter class as a parallel class of `design`.
pub fn starter_parallel_class(family: &DifferenceFamily, design: &Design) -> Result<ParallelClass> {
    let blocks = family.starter_blocks()?;
    let mut idx = Vec::with_capacity(blocks.len());
    for b in blocks {
        let i = design
            .block_index(&b)
            .ok_or_else(|| Error::Context(format!("starter block {b:?} is not a block of the design")))?;
        idx.push(i);
    }
    Ok(ParallelClass::new(idx))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct DesignParams {
    pub v: usize,
    pub b: usize,
    pub r: usize,
    pub k: usize,
    pub lambda: usize,
}

/// A finite incidence structure of points `0..v` and blocks.
///
/// Blocks are kept sorted, and the block list is ordered lexicographically,
/// so block indices are a deterministic function of the block set.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Design {
    v: usize,
    blocks: Vec<Vec<u32>>,
    bits: Vec<BitSet>,
}

impl Design {
    pub fn new(v: usize, blocks: Vec<Vec<u32>>) -> Result<Self> {
        let mut blocks: Vec<Vec<u32>> = blocks
            .into_iter()
            .map(|mut b| {
                b.sort_unstable();
                b
            })
            .collect();
        for b in &blocks {
            if b.is_empty() {
                return Err(Error::Structural("empty block".into()));
            }
            if b.windows(2).any(|w| w[0] == w[1]) {
                return Err(Error::Structural(format!("block {b:?} repeats a point")));
            }
            if let Some(&x) = b.iter().find(|&&x| x as usize >= v) {
                return Err(Error::Structural(format!("point {x} out of range 0..{v}")));
            }
        }
        blocks.sort();
        let bits = blocks.iter().map(|b| BitSet::from_indices(v, b.iter().map(|&x| x as usize))).collect();
        Ok(Design { v, blocks, bits })
    }

    pub fn v(&self) -> usize {
        self.v
    }

    pub fn b(&self) -> usize {
        self.blocks.len()
    }

    pub fn blocks(&self) -> &[Vec<u32>] {
        &self.blocks
    }

    pub fn block(&self, i: usize) -> &[u32] {
        &self.blocks[i]
    }

    /// Blocks as point bitsets, in block-index order.
    pub fn block_bits(&self) -> &[BitSet] {
        &self.bits
    }

    /// Index of a block given in any point order.
    pub fn block_index(&self, block: &[u32]) -> Option<usize> {
        let mut b = block.to_vec();
        b.sort_unstable();
        self.blocks.binary_search(&b).ok()
    }

    /// Common block size, if all blocks have the same size.
    pub fn block_size(&self) -> Option<usize> {
        let k = self.blocks.first()?.len();
        self.blocks.iter().all(|b| b.len() == k).then_some(k)
    }

    pub fn params(&self) -> Option<DesignParams> {
        validate_design(self).params
    }

    /// Copy with one block removed.
    pub fn without_block(&self, index: usize) -> Design {
        let mut blocks = self.blocks.clone();
        blocks.remove(index);
        Design::new(self.v, blocks).expect("subset of a valid block list")
    }

    /// Copy with the points relabeled by `perm` (point `x` becomes `perm[x]`).
    pub fn relabeled(&self, perm: &[usize]) -> Result<Design> {
        if perm.len() != self.v {
            return Err(Error::Parameter("permutation length differs from v".into()));
        }
        Design::new(self.v, self.blocks.iter().map(|b| b.iter().map(|&x| perm[x as usize] as u32).collect()).collect())
    }

    /// The v×b point-block incidence matrix.
    pub fn incidence_matrix(&self) -> BinaryMatrix {
        let mut m = BinaryMatrix::zeros(self.v, self.b());
        for (j, b) in self.blocks.iter().enumerate() {
            for &x in b {
                m.set(x as usize, j, true);
            }
        }
        m
    }
}

pub fn incidence_matrix(design: &Design) -> BinaryMatrix {
    design.incidence_matrix()
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum DesignViolation {
    TooFewPoints { v: usize },
    NoBlocks,
    BlockSize { block: usize, size: usize, expected: usize },
    Replication { point: usize, count: usize, expected: usize },
    PairCoverage { a: usize, b: usize, count: usize, expected: usize },
    BlockCount { b: usize, expected: usize },
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct DesignReport {
    pub violations: Vec<DesignViolation>,
    /// Parameters, present only when there are no violations.
    pub params: Option<DesignParams>,
}

impl DesignReport {
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }
}

fn mode(values: impl Iterator<Item = usize>) -> usize {
    let mut hist: Vec<usize> = Vec::new();
    for x in values {
        if x >= hist.len() {
            hist.resize(x + 1, 0);
        }
        hist[x] += 1;
    }
    // Ties go to the larger value.
    hist.iter().enumerate().max_by_key(|(_, &c)| c).map_or(0, |(x, _)| x)
}

/// Checks the 2-design axioms and reports every violation.
///
/// The expected k, r and λ are the most frequent observed values, so a
/// single damaged block is reported against the parameters of the rest.
pub fn validate_design(design: &Design) -> DesignReport {
    let v = design.v;
    let mut violations = Vec::new();
    if v < 2 {
        violations.push(DesignViolation::TooFewPoints { v });
    }
    if design.blocks.is_empty() {
        violations.push(DesignViolation::NoBlocks);
    }
    if !violations.is_empty() {
        return DesignReport { violations, params: None };
    }

    let k = mode(design.blocks.iter().map(Vec::len));
    for (i, b) in design.blocks.iter().enumerate() {
        if b.len() != k {
            violations.push(DesignViolation::BlockSize { block: i, size: b.len(), expected: k });
        }
    }

    let mut replication = vec![0usize; v];
    let mut pairs = vec![0usize; v * v];
    for b in &design.blocks {
        for (i, &x) in b.iter().enumerate() {
            replication[x as usize] += 1;
            for &y in &b[i + 1..] {
                pairs[x as usize * v + y as usize] += 1;
            }
        }
    }
    let r = mode(replication.iter().copied());
    for (p, &c) in replication.iter().enumerate() {
        if c != r {
            violations.push(DesignViolation::Replication { point: p, count: c, expected: r });
        }
    }
    let lambda = mode((0..v).flat_map(|a| (a + 1..v).map(move |b| (a, b))).map(|(a, b)| pairs[a * v + b]));
    for a in 0..v {
        for b in a + 1..v {
            let c = pairs[a * v + b];
            if c != lambda {
                violations.push(DesignViolation::PairCoverage { a, b, count: c, expected: lambda });
            }
        }
    }
    if k >= 2 {
        let expected = lambda * v * (v - 1) / (k * (k - 1));
        if !(lambda * v * (v - 1)).is_multiple_of(k * (k - 1)) || expected != design.b() {
            violations.push(DesignViolation::BlockCount { b: design.b(), expected });
        }
    }
    let params = violations.is_empty().then_some(DesignParams { v, b: design.b(), r, k, lambda });
    DesignReport { violations, params }
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) fn f17() -> DifferenceFamily {
        DifferenceFamily::new(
            51,
            vec![vec![18, 33, 22, 46], vec![21, 30, 37, 31], vec![6, 45, 25, 43], vec![24, 27, 19, 49]],
        )
    }

    #[test]
    fn f17_family_is_valid() {
        let report = validate_family(&f17()).unwrap();
        assert!(report.is_valid(), "{report}");
        assert_eq!(report.first_violation, None);
    }

    #[test]
    fn residues_of_f17_family() {
        let f = f17();
        let mut residues: Vec<u32> = f.base_blocks.iter().flatten().map(|x| x % 17).collect();
        assert_eq!(&residues[..4], &[1, 16, 5, 12]);
        residues.sort_unstable();
        assert_eq!(residues, (1..=16).collect::<Vec<_>>());
        assert!(validate_family(&f).unwrap().residues_ok);
    }

    #[test]
    fn perturbed_family_fails_difference_coverage() {
        let mut f = f17();
        f.base_blocks[0] = vec![18, 33, 22, 45];
        // Recompute the 48 differences directly.
        let mut counts = [0usize; 51];
        for b in &f.base_blocks {
            for &x in b {
                for &y in b {
                    if x != y {
                        counts[((x + 51 - y) % 51) as usize] += 1;
                    }
                }
            }
        }
        assert!(counts.iter().any(|&c| c > 1));
        let report = validate_family(&f).unwrap();
        assert!(!report.differences_ok);
        assert!(!report.is_valid());
        assert!(matches!(develop_family(&f), Err(Error::InvalidFamily(_))));
    }

    #[test]
    fn structural_errors_are_distinct_from_condition_failures() {
        let mut f = f17();
        f.base_blocks.pop();
        assert!(matches!(validate_family(&f), Err(Error::Structural(_))));
        let mut f = f17();
        f.base_blocks[1] = vec![21, 30, 37];
        assert!(matches!(validate_family(&f), Err(Error::Structural(_))));
        let mut f = f17();
        f.base_blocks[1] = vec![21, 30, 37, 51];
        assert!(matches!(validate_family(&f), Err(Error::Structural(_))));
        let mut f = f17();
        f.base_blocks[1] = vec![21, 30, 30, 31];
        assert!(matches!(validate_family(&f), Err(Error::Structural(_))));
    }

    #[test]
    fn develop_f17_family() {
        let d = develop_family(&f17()).unwrap();
        assert_eq!(d.v(), 52);
        assert_eq!(d.b(), 221);
        assert!(d.block_index(&[18, 33, 22, 46]).is_some());
        assert!(d.block_index(&[19, 34, 23, 47]).is_some());
        assert!(d.block_index(&[0, 17, 34, 51]).is_some());
        let report = validate_design(&d);
        assert!(report.is_valid(), "{:?}", report.violations);
        assert_eq!(report.params, Some(DesignParams { v: 52, b: 221, r: 17, k: 4, lambda: 1 }));
    }

    #[test]
    fn every_pair_in_exactly_one_block() {
        let d = develop_family(&f17()).unwrap();
        for a in 0..52u32 {
            for b in a + 1..52 {
                let n = d.blocks().iter().filter(|blk| blk.contains(&a) && blk.contains(&b)).count();
                assert_eq!(n, 1, "pair {a},{b}");
            }
        }
    }

    #[test]
    fn orbit_sizes() {
        let f = f17();
        for base in &f.base_blocks {
            let mut translates: Vec<Vec<u32>> = (0..51)
                .map(|t| {
                    let mut b: Vec<u32> = base.iter().map(|x| (x + t) % 51).collect();
                    b.sort_unstable();
                    b
                })
                .collect();
            translates.sort();
            translates.dedup();
            assert_eq!(translates.len(), 51);
        }
        let mut short: Vec<Vec<u32>> = (0..51u32)
            .map(|t| {
                let mut b = vec![t % 51, (17 + t) % 51, (34 + t) % 51, 51];
                b.sort_unstable();
                b
            })
            .collect();
        short.sort();
        short.dedup();
        assert_eq!(short.len(), 17);
        assert_eq!(4 * 51 + 17, 221);
    }

    #[test]
    fn starter_class_covers_every_point_once() {
        let f = f17();
        let blocks = f.starter_blocks().unwrap();
        assert_eq!(blocks.len(), 13);
        assert_eq!(blocks[0], vec![0, 17, 34, 51]);
        let mut pts: Vec<u32> = blocks.iter().flatten().copied().collect();
        pts.sort_unstable();
        assert_eq!(pts, (0..52).collect::<Vec<_>>());
        let d = develop_family(&f).unwrap();
        let class = starter_parallel_class(&f, &d).unwrap();
        assert_eq!(class.block_indices().len(), 13);
    }

    #[test]
    fn starter_orbit_has_length_17_and_is_a_resolution() {
        let f = f17();
        let d = develop_family(&f).unwrap();
        let shift = |blocks: &Vec<Vec<u32>>, t: u32| -> Vec<usize> {
            let mut idx: Vec<usize> = blocks
                .iter()
                .map(|b| {
                    let s: Vec<u32> = b.iter().map(|&x| if x == 51 { 51 } else { (x + t) % 51 }).collect();
                    d.block_index(&s).unwrap()
                })
                .collect();
            idx.sort_unstable();
            idx
        };
        let starter = f.starter_blocks().unwrap();
        let mut orbit: Vec<Vec<usize>> = (0..51).map(|t| shift(&starter, t)).collect();
        orbit.sort();
        orbit.dedup();
        assert_eq!(orbit.len(), 17);
        assert_eq!(51 % orbit.len(), 0);
        let mut all: Vec<usize> = orbit.iter().flatten().copied().collect();
        all.sort_unstable();
        assert_eq!(all, (0..221).collect::<Vec<_>>());
    }

    #[test]
    fn incidence_matrix_properties() {
        let d = develop_family(&f17()).unwrap();
        let m = d.incidence_matrix();
        assert_eq!((m.rows(), m.cols()), (52, 221));
        assert!(m.col_sums().iter().all(|&c| c == 4));
        assert!(m.row_sums().iter().all(|&r| r == 17));
        for a in 0..52 {
            for b in a + 1..52 {
                assert_eq!(m.row(a).intersection_count(m.row(b)), 1);
            }
        }
    }

    #[test]
    fn complete_pair_design_is_valid() {
        let blocks = vec![vec![0, 1], vec![0, 2], vec![0, 3], vec![1, 2], vec![1, 3], vec![2, 3]];
        let d = Design::new(4, blocks).unwrap();
        let report = validate_design(&d);
        assert!(report.is_valid());
        assert_eq!(report.params, Some(DesignParams { v: 4, b: 6, r: 3, k: 2, lambda: 1 }));
    }

    #[test]
    fn deleted_block_leaves_six_pairs_uncovered() {
        let d = develop_family(&f17()).unwrap();
        let removed = d.block(7).to_vec();
        let report = validate_design(&d.without_block(7));
        assert!(!report.is_valid());
        let mut uncovered: Vec<(usize, usize)> = report
            .violations
            .iter()
            .filter_map(|v| match v {
                DesignViolation::PairCoverage { a, b, count: 0, expected: 1 } => Some((*a, *b)),
                _ => None,
            })
            .collect();
        uncovered.sort_unstable();
        let mut expected = Vec::new();
        for i in 0..4 {
            for j in i + 1..4 {
                expected.push((removed[i] as usize, removed[j] as usize));
            }
        }
        assert_eq!(uncovered, expected);
    }

    #[test]
    fn small_one_rotational_family() {
        // Z_3 with k = 2: base block {1,2}, short blocks {j, ∞}; develops to K4.
        let f = DifferenceFamily::new(3, vec![vec![1, 2]]);
        assert!(validate_family(&f).unwrap().is_valid());
        let d = develop_family(&f).unwrap();
        assert_eq!(d.blocks(), &[vec![0, 1], vec![0, 2], vec![0, 3], vec![1, 2], vec![1, 3], vec![2, 3]]);
    }

    #[test]
    fn canonical_order_is_independent_of_input_order() {
        let d = develop_family(&f17()).unwrap();
        let mut rev: Vec<Vec<u32>> = d.blocks().iter().rev().map(|b| b.iter().rev().copied().collect()).collect();
        rev.rotate_left(5);
        assert_eq!(Design::new(52, rev).unwrap(), d);
    }
}
