//! Projective planes, maximal arcs and the correspondence between a maximal
//! arc and a design with a set of pairwise compatible resolutions.
//!
//! A maximal (n, k)-arc in a plane of order q = ks meets every line in 0 or
//! k points. Its secant lines restricted to the arc form a Steiner
//! 2-(n, k, 1) design. Each external point gives a parallel class (the
//! secants through it) and each external line gives a resolution (the
//! classes of its points). Reversing this turns a design plus a large enough
//! set of pairwise compatible resolutions back into a plane.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bitset::BitSet;
use crate::compat::{compatible_resolution_bound, verify_clique_compatible};
use crate::design::{validate_design, Design};
use crate::enumeration::{ParallelClass, Resolution};
use crate::error::{Error, Result};
use crate::gf::{BinaryMatrix, GaloisField};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PointRole {
    Arc,
    External,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LineRole {
    Secant,
    External,
}

/// Points `0..point_count` with lines given as point sets.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct IncidenceStructure {
    point_count: usize,
    lines: Vec<BitSet>,
    point_roles: Option<Vec<PointRole>>,
    line_roles: Option<Vec<LineRole>>,
}

impl IncidenceStructure {
    /// Rejects empty lines, repeated lines and out-of-range points. Line
    /// order is kept as given.
    pub fn new(point_count: usize, lines: Vec<Vec<usize>>) -> Result<Self> {
        let mut bits = Vec::with_capacity(lines.len());
        for (i, line) in lines.iter().enumerate() {
            if line.is_empty() {
                return Err(Error::Structural(format!("line {i} is empty")));
            }
            if let Some(&p) = line.iter().find(|&&p| p >= point_count) {
                return Err(Error::Structural(format!("line {i} contains point {p} outside 0..{point_count}")));
            }
            let set = BitSet::from_indices(point_count, line.iter().copied());
            if set.count() != line.len() {
                return Err(Error::Structural(format!("line {i} repeats a point")));
            }
            bits.push(set);
        }
        Self::from_bitsets(point_count, bits)
    }

    pub fn from_bitsets(point_count: usize, lines: Vec<BitSet>) -> Result<Self> {
        let mut sorted: Vec<&BitSet> = lines.iter().collect();
        sorted.sort();
        if let Some(w) = sorted.windows(2).find(|w| w[0] == w[1]) {
            return Err(Error::Structural(format!("repeated line {:?}", w[0].to_vec())));
        }
        if let Some(i) = lines.iter().position(|l| l.capacity() != point_count || l.is_empty()) {
            return Err(Error::Structural(format!("line {i} is empty or has the wrong capacity")));
        }
        Ok(IncidenceStructure { point_count, lines, point_roles: None, line_roles: None })
    }

    /// The blocks of a design as lines.
    pub fn from_design(design: &Design) -> Result<Self> {
        Self::from_bitsets(design.v(), design.block_bits().to_vec())
    }

    pub fn point_count(&self) -> usize {
        self.point_count
    }

    pub fn line_count(&self) -> usize {
        self.lines.len()
    }

    pub fn lines(&self) -> &[BitSet] {
        &self.lines
    }

    pub fn line(&self, i: usize) -> &BitSet {
        &self.lines[i]
    }

    /// Indices of the lines through `point`.
    pub fn lines_through(&self, point: usize) -> Vec<usize> {
        (0..self.lines.len()).filter(|&l| self.lines[l].contains(point)).collect()
    }

    pub fn point_roles(&self) -> Option<&[PointRole]> {
        self.point_roles.as_deref()
    }

    pub fn line_roles(&self) -> Option<&[LineRole]> {
        self.line_roles.as_deref()
    }

    pub fn set_roles(&mut self, points: Vec<PointRole>, lines: Vec<LineRole>) -> Result<()> {
        if points.len() != self.point_count || lines.len() != self.lines.len() {
            return Err(Error::Structural("role tags do not match the structure size".into()));
        }
        self.point_roles = Some(points);
        self.line_roles = Some(lines);
        Ok(())
    }

    /// The point-line incidence matrix (rows are points).
    pub fn incidence_matrix(&self) -> BinaryMatrix {
        let mut m = BinaryMatrix::zeros(self.point_count, self.lines.len());
        for (j, line) in self.lines.iter().enumerate() {
            for p in line {
                m.set(p, j, true);
            }
        }
        m
    }

    /// Lines as blocks of a design on the same points.
    pub fn to_design(&self) -> Result<Design> {
        Design::new(self.point_count, self.lines.iter().map(|l| l.iter().map(|p| p as u32).collect()).collect())
    }
}

/// First failed plane axiom.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum PlaneViolation {
    NoLines,
    LineTooShort { line: usize, size: usize },
    LineSize { line: usize, size: usize, expected: usize },
    PointCount { points: usize, expected: usize },
    LineCount { lines: usize, expected: usize },
    PointDegree { point: usize, lines: usize, expected: usize },
    PointPair { a: usize, b: usize, lines: usize },
    LinePair { a: usize, b: usize, common: usize },
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PlaneReport {
    /// Order of the plane when all axioms hold.
    pub q: Option<usize>,
    pub violation: Option<PlaneViolation>,
}

impl PlaneReport {
    pub fn is_valid(&self) -> bool {
        self.violation.is_none()
    }

    fn fail(v: PlaneViolation) -> Self {
        PlaneReport { q: None, violation: Some(v) }
    }
}

/// Checks that `s` is a projective plane of some order q ≥ 2: every line
/// has q+1 points, every point is on q+1 lines, there are q²+q+1 of each,
/// two points lie on exactly one line and two lines meet in exactly one
/// point.
pub fn verify_plane(s: &IncidenceStructure) -> PlaneReport {
    let Some(first) = s.lines.first() else {
        return PlaneReport::fail(PlaneViolation::NoLines);
    };
    let size = first.count();
    if size < 3 {
        return PlaneReport::fail(PlaneViolation::LineTooShort { line: 0, size });
    }
    let q = size - 1;
    if let Some((line, l)) = s.lines.iter().enumerate().find(|(_, l)| l.count() != q + 1) {
        return PlaneReport::fail(PlaneViolation::LineSize { line, size: l.count(), expected: q + 1 });
    }
    let n = q * q + q + 1;
    if s.point_count != n {
        return PlaneReport::fail(PlaneViolation::PointCount { points: s.point_count, expected: n });
    }
    if s.lines.len() != n {
        return PlaneReport::fail(PlaneViolation::LineCount { lines: s.lines.len(), expected: n });
    }
    let mut degree = vec![0usize; n];
    let mut pairs = vec![0u32; n * n];
    for line in &s.lines {
        let pts = line.to_vec();
        for (i, &a) in pts.iter().enumerate() {
            degree[a] += 1;
            for &b in &pts[i + 1..] {
                pairs[a * n + b] += 1;
            }
        }
    }
    if let Some((point, &d)) = degree.iter().enumerate().find(|(_, &d)| d != q + 1) {
        return PlaneReport::fail(PlaneViolation::PointDegree { point, lines: d, expected: q + 1 });
    }
    for a in 0..n {
        for b in a + 1..n {
            if pairs[a * n + b] != 1 {
                return PlaneReport::fail(PlaneViolation::PointPair { a, b, lines: pairs[a * n + b] as usize });
            }
        }
    }
    let bad_lines =
        (0..n).into_par_iter().find_first(|&a| (a + 1..n).any(|b| s.lines[a].intersection_count(&s.lines[b]) != 1));
    if let Some(a) = bad_lines {
        let b = (a + 1..n).find(|&b| s.lines[a].intersection_count(&s.lines[b]) != 1).unwrap();
        let common = s.lines[a].intersection_count(&s.lines[b]);
        return PlaneReport::fail(PlaneViolation::LinePair { a, b, common });
    }
    PlaneReport { q: Some(q), violation: None }
}

/// Index of a normalized homogeneous triple over a field of order q, where
/// the last nonzero coordinate is 1: (x, y, 1) ↦ xq + y, (x, 1, 0) ↦ q² + x,
/// (1, 0, 0) ↦ q² + q.
fn triple_index(q: usize, t: [u32; 3]) -> usize {
    match t {
        [x, y, 1] => x as usize * q + y as usize,
        [x, 1, 0] => q * q + x as usize,
        _ => q * q + q,
    }
}

fn normalized_triples(q: u32) -> Vec<[u32; 3]> {
    let mut out = Vec::with_capacity((q * q + q + 1) as usize);
    for x in 0..q {
        for y in 0..q {
            out.push([x, y, 1]);
        }
    }
    out.extend((0..q).map(|x| [x, 1, 0]));
    out.push([1, 0, 0]);
    out
}

/// The Desarguesian plane PG(2, q) over the default field of order q.
///
/// Points and lines are the normalized triples in the order affine
/// (x, y, 1), then (x, 1, 0), then (1, 0, 0); a point lies on a line when
/// their dot product vanishes.
pub fn generate_pg2q(q: u32) -> Result<IncidenceStructure> {
    if q > 1024 {
        return Err(Error::Parameter(format!("plane order {q} is too large")));
    }
    let f = GaloisField::of_order(q)?;
    generate_pg2q_over(&f)
}

pub fn generate_pg2q_over(f: &GaloisField) -> Result<IncidenceStructure> {
    let q = f.order();
    let qu = q as usize;
    let lines = normalized_triples(q)
        .into_iter()
        .map(|[a, b, c]| {
            let mut pts = Vec::with_capacity(qu + 1);
            // Affine points a x + b y + c = 0.
            if b != 0 {
                let binv = f.inv_raw(b);
                for x in 0..q {
                    let y = f.neg_raw(f.mul_raw(f.add_raw(f.mul_raw(a, x), c), binv));
                    pts.push(triple_index(qu, [x, y, 1]));
                }
            } else if a != 0 {
                let x = f.neg_raw(f.mul_raw(c, f.inv_raw(a)));
                pts.extend((0..q).map(|y| triple_index(qu, [x, y, 1])));
            }
            // Points at infinity: a x + b = 0 on (x, 1, 0), and (1, 0, 0) when a = 0.
            if a != 0 {
                pts.push(triple_index(qu, [f.neg_raw(f.mul_raw(b, f.inv_raw(a))), 1, 0]));
            } else {
                if b == 0 {
                    pts.extend((0..q).map(|x| triple_index(qu, [x, 1, 0])));
                }
                pts.push(qu * qu + qu);
            }
            pts
        })
        .collect();
    IncidenceStructure::new(qu * qu + qu + 1, lines)
}

/// Swaps points and lines: dual point `j` is line `j` of `s`, dual line `i`
/// is the set of lines through point `i`.
pub fn dualize(s: &IncidenceStructure) -> Result<IncidenceStructure> {
    let report = verify_plane(s);
    if let Some(v) = report.violation {
        return Err(Error::Precondition(format!("dualize needs a projective plane: {v:?}")));
    }
    let mut dual = vec![BitSet::new(s.line_count()); s.point_count()];
    for (j, line) in s.lines.iter().enumerate() {
        for p in line {
            dual[p].insert(j);
        }
    }
    IncidenceStructure::from_bitsets(s.line_count(), dual)
}

/// A set of points meeting every line of a projective plane in 0 or
/// `degree` points.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MaximalArc {
    plane: IncidenceStructure,
    points: BitSet,
    degree: usize,
    q: usize,
}

impl MaximalArc {
    /// Verifies the plane, the 0-or-k intersection property and the arc
    /// size, then tags point and line roles on the stored plane.
    pub fn new(mut plane: IncidenceStructure, points: BitSet, degree: usize) -> Result<Self> {
        let report = verify_plane(&plane);
        let q = match (report.q, report.violation) {
            (Some(q), None) => q,
            (_, v) => return Err(Error::Precondition(format!("arc host is not a projective plane: {v:?}"))),
        };
        if points.capacity() != plane.point_count() {
            return Err(Error::Structural("arc bitset capacity differs from the plane".into()));
        }
        if degree < 2 || degree > q || q % degree != 0 {
            return Err(Error::Parameter(format!("arc degree {degree} does not divide plane order {q}")));
        }
        let mut line_roles = Vec::with_capacity(plane.line_count());
        for (i, line) in plane.lines.iter().enumerate() {
            match line.intersection_count(&points) {
                0 => line_roles.push(LineRole::External),
                m if m == degree => line_roles.push(LineRole::Secant),
                m => return Err(Error::Structural(format!("line {i} meets the arc in {m} points, not 0 or {degree}"))),
            }
        }
        let s = q / degree;
        let expected = (q - s + 1) * degree;
        if points.count() != expected {
            return Err(Error::Structural(format!("arc has {} points, expected {expected}", points.count())));
        }
        let point_roles = (0..plane.point_count())
            .map(|p| if points.contains(p) { PointRole::Arc } else { PointRole::External })
            .collect();
        plane.set_roles(point_roles, line_roles)?;
        Ok(MaximalArc { plane, points, degree, q })
    }

    pub fn plane(&self) -> &IncidenceStructure {
        &self.plane
    }

    pub fn points(&self) -> &BitSet {
        &self.points
    }

    pub fn size(&self) -> usize {
        self.points.count()
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn order(&self) -> usize {
        self.q
    }

    /// q / k, the degree of the dual arc.
    pub fn s(&self) -> usize {
        self.q / self.degree
    }

    pub fn secant_lines(&self) -> Vec<usize> {
        self.lines_with_role(LineRole::Secant)
    }

    pub fn external_lines(&self) -> Vec<usize> {
        self.lines_with_role(LineRole::External)
    }

    pub fn external_points(&self) -> Vec<usize> {
        (0..self.plane.point_count()).filter(|&p| !self.points.contains(p)).collect()
    }

    fn lines_with_role(&self, role: LineRole) -> Vec<usize> {
        let roles = self.plane.line_roles().expect("roles are set on construction");
        (0..roles.len()).filter(|&i| roles[i] == role).collect()
    }

    /// The external lines as a maximal arc of degree s in the dual plane.
    pub fn dual(&self) -> Result<MaximalArc> {
        let dual = dualize(&self.plane)?;
        let points = BitSet::from_indices(self.plane.line_count(), self.external_lines());
        MaximalArc::new(dual, points, self.s())
    }
}

/// Choices behind a Denniston arc. Defaults: the first `h` in field order
/// making x² + hxy + y² anisotropic, and the additive span of
/// 1, α, …, α^(i-1) for k = 2^i.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct DennistonOptions {
    pub h: Option<u32>,
    pub subgroup: Option<Vec<u32>>,
}

/// Whether x² + hxy + y² vanishes only at (0, 0).
pub fn is_anisotropic(f: &GaloisField, h: u32) -> bool {
    let q = f.order();
    (0..q).all(|x| (0..q).all(|y| (x == 0 && y == 0) || denniston_form(f, h, x, y) != 0))
}

pub fn denniston_form(f: &GaloisField, h: u32, x: u32, y: u32) -> u32 {
    f.add_raw(f.add_raw(f.mul_raw(x, x), f.mul_raw(h, f.mul_raw(x, y))), f.mul_raw(y, y))
}

/// Denniston maximal arc of degree k = 2^i in PG(2, 2^m), 1 ≤ i < m.
pub fn denniston_arc(q: u32, k: u32) -> Result<MaximalArc> {
    denniston_arc_with(q, k, &DennistonOptions::default())
}

pub fn denniston_arc_with(q: u32, k: u32, options: &DennistonOptions) -> Result<MaximalArc> {
    if !q.is_power_of_two() || !(4..=1024).contains(&q) {
        return Err(Error::Parameter(format!("Denniston arcs need q = 2^m with 2 ≤ m ≤ 10, got {q}")));
    }
    if !k.is_power_of_two() || k < 2 || k >= q {
        return Err(Error::Parameter(format!("Denniston arcs need k = 2^i with 1 ≤ i < m, got k = {k}")));
    }
    let f = GaloisField::of_order(q)?;
    let h = match options.h {
        Some(h) if h < q && is_anisotropic(&f, h) => h,
        Some(h) => return Err(Error::Parameter(format!("x² + {h}xy + y² is not anisotropic over GF({q})"))),
        None => (0..q)
            .find(|&h| is_anisotropic(&f, h))
            .ok_or_else(|| Error::Parameter(format!("no anisotropic form x² + hxy + y² over GF({q})")))?,
    };
    // Polynomial-basis elements of degree < i are exactly the integers below k.
    let subgroup: Vec<u32> = options.subgroup.clone().unwrap_or_else(|| (0..k).collect());
    let members = BitSet::from_indices(q as usize, subgroup.iter().filter(|&&c| c < q).map(|&c| c as usize));
    let closed = subgroup.iter().all(|&a| subgroup.iter().all(|&b| members.contains(f.add_raw(a, b) as usize)));
    if members.count() != k as usize || subgroup.len() != k as usize || !closed {
        return Err(Error::Parameter(format!("{subgroup:?} is not an additive subgroup of order {k}")));
    }
    let plane = generate_pg2q_over(&f)?;
    let qu = q as usize;
    let mut points = BitSet::new(plane.point_count());
    for x in 0..q {
        for y in 0..q {
            if members.contains(denniston_form(&f, h, x, y) as usize) {
                points.insert(triple_index(qu, [x, y, 1]));
            }
        }
    }
    MaximalArc::new(plane, points, k as usize)
}

/// Arc points in increasing plane order; the position in this list is the
/// design point label.
fn arc_labels(arc: &MaximalArc) -> (Vec<usize>, Vec<usize>) {
    let points = arc.points.to_vec();
    let mut label = vec![usize::MAX; arc.plane.point_count()];
    for (i, &p) in points.iter().enumerate() {
        label[p] = i;
    }
    (points, label)
}

/// The design cut out on the arc by its secant lines, arc points relabeled
/// `0..n` in increasing plane order.
pub fn extract_design(arc: &MaximalArc) -> Result<Design> {
    let (points, label) = arc_labels(arc);
    let blocks = arc
        .secant_lines()
        .into_iter()
        .map(|l| arc.plane.line(l).intersection(&arc.points).iter().map(|p| label[p] as u32).collect())
        .collect();
    let design = Design::new(points.len(), blocks)?;
    let report = validate_design(&design);
    match report.params {
        Some(p) if p.lambda == 1 && p.k == arc.degree => Ok(design),
        _ => Err(Error::Structural(format!("arc does not cut out a Steiner design: {:?}", report.violations))),
    }
}

/// The design of an arc together with the classes of its external points
/// and the resolutions of its external lines.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ArcResolutions {
    pub design: Design,
    /// One class per external point, in increasing plane order.
    pub classes: Vec<ParallelClass>,
    /// Plane point behind each class.
    pub class_points: Vec<usize>,
    /// One resolution per external line, in plane line order.
    pub resolutions: Vec<Resolution>,
    /// Plane line behind each resolution.
    pub resolution_lines: Vec<usize>,
}

pub fn extract_resolutions(arc: &MaximalArc) -> Result<ArcResolutions> {
    let design = extract_design(arc)?;
    let (_, label) = arc_labels(arc);
    let plane = &arc.plane;
    let block_of_line: Vec<Option<usize>> = (0..plane.line_count())
        .map(|l| {
            let pts: Vec<u32> = plane.line(l).intersection(&arc.points).iter().map(|p| label[p] as u32).collect();
            if pts.is_empty() {
                None
            } else {
                design.block_index(&pts)
            }
        })
        .collect();
    let class_points = arc.external_points();
    let mut class_of_point = vec![usize::MAX; plane.point_count()];
    let mut classes = Vec::with_capacity(class_points.len());
    for (i, &p) in class_points.iter().enumerate() {
        class_of_point[p] = i;
        let blocks = plane.lines_through(p).into_iter().filter_map(|l| block_of_line[l]).collect();
        let class = ParallelClass::new(blocks);
        if !class.is_parallel_class_of(&design) {
            return Err(Error::Structural(format!("secants through point {p} do not partition the arc")));
        }
        classes.push(class);
    }
    let resolution_lines = arc.external_lines();
    let resolutions = resolution_lines
        .iter()
        .map(|&l| Resolution::new(plane.line(l).iter().map(|p| class_of_point[p]).collect()))
        .collect();
    Ok(ArcResolutions { design, classes, class_points, resolutions, resolution_lines })
}

/// A plane rebuilt from a design and a clique of compatible resolutions.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ReconstructedPlane {
    /// The design points `0..v` followed by one point per class in
    /// `point_classes`; the design points form the arc.
    pub arc: MaximalArc,
    /// Class index behind each point after the design points.
    pub point_classes: Vec<usize>,
    /// For each class in `point_classes`, how many clique resolutions use it.
    pub class_multiplicity: Vec<usize>,
}

/// Rebuilds the plane whose points are the design points plus the classes
/// used by the clique, and whose lines are the blocks extended by the
/// clique classes containing them plus one line per clique resolution.
pub fn reconstruct_plane(
    design: &Design,
    clique: &[Resolution],
    classes: &[ParallelClass],
) -> Result<ReconstructedPlane> {
    let v = design.v();
    let k = design.block_size().ok_or_else(|| Error::Precondition("design blocks have different sizes".into()))?;
    let bound = compatible_resolution_bound(v, k)
        .ok_or_else(|| Error::Precondition(format!("no plane corresponds to a design with v = {v}, k = {k}")))?;
    if clique.len() != bound {
        return Err(Error::Precondition(format!("clique has {} resolutions, {bound} are needed", clique.len())));
    }
    let indices: Vec<usize> = (0..clique.len()).collect();
    if !verify_clique_compatible(&indices, clique, classes)? {
        return Err(Error::Precondition("clique resolutions are not pairwise compatible".into()));
    }
    let s = (v / k - 1) / (k - 1);
    let q = s * k;
    let n = q * q + q + 1;

    let mut point_classes: Vec<usize> = clique.iter().flat_map(|r| r.class_indices().iter().copied()).collect();
    point_classes.sort_unstable();
    point_classes.dedup();
    if v + point_classes.len() != n {
        return Err(Error::Reconstruction(format!(
            "clique uses {} distinct classes, a plane of order {q} needs {}",
            point_classes.len(),
            n - v
        )));
    }
    let class_multiplicity = point_classes
        .iter()
        .map(|c| clique.iter().filter(|r| r.class_indices().binary_search(c).is_ok()).count())
        .collect();
    let mut lines: Vec<BitSet> = design
        .block_bits()
        .iter()
        .map(|b| {
            let mut line = BitSet::new(n);
            for p in b {
                line.insert(p);
            }
            line
        })
        .collect();
    for (i, &c) in point_classes.iter().enumerate() {
        for &b in classes[c].block_indices() {
            lines[b].insert(v + i);
        }
    }
    for r in clique {
        lines.push(BitSet::from_indices(
            n,
            r.class_indices().iter().map(|c| v + point_classes.binary_search(c).expect("class of the union")),
        ));
    }
    if let Some((i, l)) = lines.iter().enumerate().find(|(_, l)| l.count() != q + 1) {
        return Err(Error::Reconstruction(format!("line {i} has {} points, expected {}", l.count(), q + 1)));
    }
    let plane = IncidenceStructure::from_bitsets(n, lines)
        .map_err(|e| Error::Reconstruction(format!("reconstructed lines are malformed: {e}")))?;
    let report = verify_plane(&plane);
    if let Some(v) = report.violation {
        return Err(Error::Reconstruction(format!("reconstruction is not a projective plane: {v:?}")));
    }
    let arc = MaximalArc::new(plane, BitSet::from_indices(n, 0..v), k)
        .map_err(|e| Error::Reconstruction(format!("design points are not a maximal arc: {e}")))?;
    Ok(ReconstructedPlane { arc, point_classes, class_multiplicity })
}
