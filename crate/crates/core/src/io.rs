//! JSON file formats for every pipeline artifact.
//!
//! | artifact    | shape                                                        |
//! |-------------|--------------------------------------------------------------|
//! | family      | `{"modulus": 51, "base_blocks": [[18, 33, 22, 46], ...]}`    |
//! | design      | `{"v": 52, "blocks": [[0, 17, 34, 51], ...]}`                |
//! | classes     | `{"block_count": 221, "classes": [[block, ...], ...]}`       |
//! | resolutions | `{"class_count": 2550, "resolutions": [[class, ...], ...]}`  |
//! | cliques     | `{"max_size": 52, "cliques": [[resolution, ...], ...]}`      |
//! | plane       | `{"points": 273, "lines": [[point, ...], ...]}`              |
//! | arc         | `{"plane": "plane.json" or {...}, "arc_points": [...]}`      |
//! | aut         | `{"group_order": 408, "generators": [[[0, 1, 2], ...], ...]}`|
//!
//! Block indices refer to the design's canonical (lexicographic) block
//! order, class indices to the classes file and resolution indices to the
//! resolutions file. The compatibility graph is written in DIMACS format.
//! Outputs are pretty-printed with a trailing newline, so equal values give
//! byte-identical files.

use std::fs;
use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::bitset::BitSet;
use crate::design::Design;
use crate::enumeration::{ParallelClass, Resolution};
use crate::error::{Error, Result};
use crate::geometry::{IncidenceStructure, MaximalArc};
use crate::symmetry::{cycles, AutResult, GroupOrder};

pub fn to_json_string<T: Serialize + ?Sized>(value: &T) -> Result<String> {
    let mut s = serde_json::to_string_pretty(value)?;
    s.push('\n');
    Ok(s)
}

pub fn write_json<T: Serialize + ?Sized>(path: &Path, value: &T) -> Result<()> {
    fs::write(path, to_json_string(value)?)?;
    Ok(())
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path)?;
    serde_json::from_str(&text).map_err(|e| Error::Parse(format!("{}: {e}", path.display())))
}

/// Hex SHA-256 of a byte string.
pub fn content_hash(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DesignFile {
    pub v: usize,
    pub blocks: Vec<Vec<u32>>,
}

impl From<&Design> for DesignFile {
    fn from(d: &Design) -> Self {
        DesignFile { v: d.v(), blocks: d.blocks().to_vec() }
    }
}

impl DesignFile {
    pub fn into_design(self) -> Result<Design> {
        Design::new(self.v, self.blocks)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ClassesFile {
    pub block_count: usize,
    pub classes: Vec<ParallelClass>,
}

impl ClassesFile {
    /// Checks that the classes partition the points of `design`.
    pub fn validate(&self, design: &Design) -> Result<()> {
        if self.block_count != design.b() {
            return Err(Error::Context(format!(
                "classes refer to {} blocks, the design has {}",
                self.block_count,
                design.b()
            )));
        }
        if let Some(i) = self.classes.iter().position(|c| !c.is_parallel_class_of(design)) {
            return Err(Error::Structural(format!("class {i} is not a parallel class of the design")));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ResolutionsFile {
    pub class_count: usize,
    pub resolutions: Vec<Resolution>,
}

impl ResolutionsFile {
    pub fn validate(&self, design: &Design, classes: &[ParallelClass]) -> Result<()> {
        if self.class_count != classes.len() {
            return Err(Error::Context(format!(
                "resolutions refer to {} classes, {} are loaded",
                self.class_count,
                classes.len()
            )));
        }
        if let Some(i) = self.resolutions.iter().position(|r| !r.is_resolution_of(design, classes)) {
            return Err(Error::Structural(format!("resolution {i} does not partition the blocks")));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlaneFile {
    pub points: usize,
    pub lines: Vec<Vec<usize>>,
}

impl From<&IncidenceStructure> for PlaneFile {
    fn from(s: &IncidenceStructure) -> Self {
        PlaneFile { points: s.point_count(), lines: s.lines().iter().map(BitSet::to_vec).collect() }
    }
}

impl PlaneFile {
    pub fn into_structure(self) -> Result<IncidenceStructure> {
        IncidenceStructure::new(self.points, self.lines)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum PlaneRef {
    /// Path relative to the arc file.
    Path(PathBuf),
    Inline(PlaneFile),
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ArcFile {
    pub plane: PlaneRef,
    pub arc_points: Vec<usize>,
    /// Arc degree; inferred from the largest line intersection when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub degree: Option<usize>,
}

impl ArcFile {
    pub fn inline(arc: &MaximalArc) -> Self {
        ArcFile {
            plane: PlaneRef::Inline(arc.plane().into()),
            arc_points: arc.points().to_vec(),
            degree: Some(arc.degree()),
        }
    }

    /// Loads the plane (resolving a path against `base_dir`) and checks the
    /// arc property.
    pub fn into_arc(self, base_dir: &Path) -> Result<MaximalArc> {
        let plane = match self.plane {
            PlaneRef::Inline(p) => p.into_structure()?,
            PlaneRef::Path(p) => read_json::<PlaneFile>(&base_dir.join(p))?.into_structure()?,
        };
        if let Some(&p) = self.arc_points.iter().find(|&&p| p >= plane.point_count()) {
            return Err(Error::Structural(format!("arc point {p} is not a point of the plane")));
        }
        let points = BitSet::from_indices(plane.point_count(), self.arc_points.iter().copied());
        let degree = match self.degree {
            Some(k) => k,
            None => plane.lines().iter().map(|l| l.intersection_count(&points)).max().unwrap_or(0),
        };
        MaximalArc::new(plane, points, degree)
    }
}

pub fn read_arc(path: &Path) -> Result<MaximalArc> {
    let file: ArcFile = read_json(path)?;
    file.into_arc(path.parent().unwrap_or(Path::new(".")))
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AutFile {
    pub group_order: GroupOrder,
    /// Generators in cycle notation, fixed points omitted.
    pub generators: Vec<Vec<Vec<usize>>>,
}

impl From<&AutResult> for AutFile {
    fn from(a: &AutResult) -> Self {
        AutFile { group_order: a.group_order.clone(), generators: a.generators.iter().map(|g| cycles(g)).collect() }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::design::DifferenceFamily;
    use crate::geometry::denniston_arc;

    #[test]
    fn family_and_design_round_trip() {
        let f: DifferenceFamily = serde_json::from_str(r#"{"modulus": 3, "base_blocks": [[1, 2]]}"#).unwrap();
        assert_eq!(f, DifferenceFamily::new(3, vec![vec![1, 2]]));
        let d = crate::design::develop_family(&f).unwrap();
        let text = to_json_string(&DesignFile::from(&d)).unwrap();
        let back: DesignFile = serde_json::from_str(&text).unwrap();
        assert_eq!(back.into_design().unwrap(), d);
        assert!(serde_json::from_str::<DesignFile>(r#"{"v": 3}"#).is_err());
    }

    #[test]
    fn arc_file_with_plane_path() {
        let dir = tempfile::tempdir().unwrap();
        let arc = denniston_arc(4, 2).unwrap();
        write_json(&dir.path().join("plane.json"), &PlaneFile::from(arc.plane())).unwrap();
        let file =
            ArcFile { plane: PlaneRef::Path("plane.json".into()), arc_points: arc.points().to_vec(), degree: None };
        write_json(&dir.path().join("arc.json"), &file).unwrap();
        let back = read_arc(&dir.path().join("arc.json")).unwrap();
        assert_eq!((back.size(), back.degree()), (6, 2));
        let inline: ArcFile = serde_json::from_str(&to_json_string(&ArcFile::inline(&arc)).unwrap()).unwrap();
        assert_eq!(inline.into_arc(dir.path()).unwrap().points(), arc.points());
    }

    #[test]
    fn bad_json_is_a_parse_error() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("x.json");
        fs::write(&p, "{not json").unwrap();
        assert!(matches!(read_json::<DesignFile>(&p), Err(Error::Parse(_))));
        assert!(matches!(read_json::<DesignFile>(&dir.path().join("missing.json")), Err(Error::Io(_))));
    }
}
