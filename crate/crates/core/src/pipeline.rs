//! End-to-end run: family or design in, verdict out.
//!
//! Stages run in a fixed order and each records the hash of the artifact it
//! consumed and of the artifact it produced, so a manifest can be checked
//! for consistency after the fact. Parallel classes and resolutions, the
//! expensive stages, can be cached in a directory keyed by the hash of their
//! input artifact.

use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::compat::{
    build_compat_graph, compatible_resolution_bound, max_clique, verify_clique_compatible, CliqueResult, CompatGraph,
};
use crate::design::{develop_family, validate_design, Design, DifferenceFamily};
use crate::enumeration::{all_parallel_classes, all_resolutions, ParallelClass, Resolution, SearchConfig};
use crate::error::{Error, Result};
use crate::geometry::{generate_pg2q, reconstruct_plane, ReconstructedPlane};
use crate::io::{
    content_hash, read_json, to_json_string, ArcFile, AutFile, ClassesFile, DesignFile, PlaneFile, PlaneRef,
    ResolutionsFile,
};
use crate::symmetry::{automorphism_group_order, isomorphic, AutResult, GroupOrder};

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum PipelineInput {
    Family(PathBuf),
    Design(PathBuf),
}

impl PipelineInput {
    pub fn path(&self) -> &Path {
        match self {
            PipelineInput::Family(p) | PipelineInput::Design(p) => p,
        }
    }
}

#[derive(Clone, Debug, Default)]
pub struct PipelineConfig {
    pub search: SearchConfig,
    /// Where artifacts and the manifest are written, if anywhere.
    pub out_dir: Option<PathBuf>,
    pub cache_dir: Option<PathBuf>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Verdict {
    /// The maximum clique reaches the bound and rebuilds a projective plane.
    #[serde(rename = "EMBEDDABLE")]
    Embeddable,
    /// The maximum clique is below the bound, so no plane exists.
    #[serde(rename = "NOT EMBEDDABLE")]
    NotEmbeddable,
    /// The parameters are not those of a proper maximal arc (k = q, or no
    /// integer s), so no claim is made.
    #[serde(rename = "NO CLAIM")]
    NoClaim,
}

impl std::fmt::Display for Verdict {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Verdict::Embeddable => "EMBEDDABLE",
            Verdict::NotEmbeddable => "NOT EMBEDDABLE",
            Verdict::NoClaim => "NO CLAIM",
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StageRecord {
    pub name: String,
    /// Stage whose output this stage consumed; `None` for the input file.
    pub input_from: Option<String>,
    pub input_hash: String,
    pub output_hash: String,
    pub seconds: f64,
    pub cached: bool,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PlaneSummary {
    pub order: usize,
    /// Rank over the characteristic of the plane order.
    pub p_rank: usize,
    /// The same rank for PG(2, q), when that plane can be generated.
    pub desarguesian_p_rank: Option<usize>,
    pub isomorphic_to_desarguesian: Option<bool>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Summary {
    pub points: usize,
    pub blocks: usize,
    pub rank: usize,
    pub aut: GroupOrder,
    pub classes: usize,
    pub resolutions: usize,
    pub edges: usize,
    pub m: usize,
    /// Largest possible m for these parameters.
    pub bound: Option<usize>,
    pub cliques: usize,
    pub verdict: Verdict,
    pub planes: Vec<PlaneSummary>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PipelineManifest {
    pub input: String,
    pub stages: Vec<StageRecord>,
    pub summary: Summary,
}

impl PipelineManifest {
    /// Every stage's input hash equals the output hash of the stage it names.
    pub fn is_consistent(&self) -> bool {
        self.stages.iter().all(|s| match &s.input_from {
            None => true,
            Some(from) => self.stages.iter().any(|t| &t.name == from && t.output_hash == s.input_hash),
        })
    }
}

/// All intermediate results of a run.
#[derive(Clone, Debug)]
pub struct PipelineRun {
    pub manifest: PipelineManifest,
    pub design: Design,
    pub classes: Vec<ParallelClass>,
    pub resolutions: Vec<Resolution>,
    pub graph: CompatGraph,
    pub cliques: CliqueResult,
    pub aut: AutResult,
    pub planes: Vec<ReconstructedPlane>,
}

struct Recorder {
    stages: Vec<StageRecord>,
    out_dir: Option<PathBuf>,
}

impl Recorder {
    /// Records a stage and writes its artifact.
    fn record(
        &mut self,
        name: &str,
        input_from: Option<&str>,
        input_hash: String,
        artifact: Option<(&str, &str)>,
        started: Instant,
        cached: bool,
    ) -> Result<String> {
        let output_hash = artifact.map(|(_, text)| content_hash(text.as_bytes())).unwrap_or_default();
        if let (Some(dir), Some((file, text))) = (&self.out_dir, artifact) {
            std::fs::write(dir.join(file), text)?;
        }
        self.stages.push(StageRecord {
            name: name.into(),
            input_from: input_from.map(Into::into),
            input_hash,
            output_hash: output_hash.clone(),
            seconds: started.elapsed().as_secs_f64(),
            cached,
        });
        Ok(output_hash)
    }
}

fn cached<T: serde::de::DeserializeOwned>(dir: Option<&Path>, file: &str) -> Option<T> {
    read_json(&dir?.join(file)).ok()
}

fn store(dir: Option<&Path>, file: &str, text: &str) -> Result<()> {
    if let Some(dir) = dir {
        std::fs::create_dir_all(dir)?;
        std::fs::write(dir.join(file), text)?;
    }
    Ok(())
}

fn smallest_prime_factor(q: usize) -> usize {
    (2..=q).find(|p| q.is_multiple_of(*p)).unwrap_or(q)
}

/// Reads the input, then develops, ranks, computes Aut, enumerates classes
/// and resolutions, builds the compatibility graph, finds all maximum
/// cliques and, when they reach the bound, rebuilds and identifies the
/// plane.
pub fn run_pipeline(input: &PipelineInput, config: &PipelineConfig) -> Result<PipelineRun> {
    if let Some(dir) = &config.out_dir {
        std::fs::create_dir_all(dir)?;
    }
    let cache = config.cache_dir.as_deref();
    let mut rec = Recorder { stages: Vec::new(), out_dir: config.out_dir.clone() };

    let t = Instant::now();
    let raw = std::fs::read(input.path())?;
    let text = String::from_utf8(raw).map_err(|_| Error::Parse(format!("{} is not UTF-8", input.path().display())))?;
    let design = match input {
        PipelineInput::Family(p) => {
            let family: DifferenceFamily =
                serde_json::from_str(&text).map_err(|e| Error::Parse(format!("{}: {e}", p.display())))?;
            develop_family(&family)?
        }
        PipelineInput::Design(p) => {
            let file: DesignFile =
                serde_json::from_str(&text).map_err(|e| Error::Parse(format!("{}: {e}", p.display())))?;
            file.into_design()?
        }
    };
    let report = validate_design(&design);
    let params =
        report.params.ok_or_else(|| Error::Structural(format!("input is not a 2-design: {:?}", report.violations)))?;
    let design_text = to_json_string(&DesignFile::from(&design))?;
    let design_hash =
        rec.record("develop", None, content_hash(text.as_bytes()), Some(("design.json", &design_text)), t, false)?;

    let t = Instant::now();
    let rank = design.incidence_matrix().p_rank(2)?;
    rec.record(
        "rank",
        Some("develop"),
        design_hash.clone(),
        Some(("rank.json", &to_json_string(&serde_json::json!({ "p": 2, "rank": rank }))?)),
        t,
        false,
    )?;

    let t = Instant::now();
    let aut = automorphism_group_order(&design);
    rec.record(
        "aut",
        Some("develop"),
        design_hash.clone(),
        Some(("aut.json", &to_json_string(&AutFile::from(&aut))?)),
        t,
        false,
    )?;

    let t = Instant::now();
    let classes_key = format!("classes-{design_hash}.json");
    let (classes, hit) = match cached::<ClassesFile>(cache, &classes_key).filter(|f| f.validate(&design).is_ok()) {
        Some(f) => (f.classes, true),
        None => (all_parallel_classes(&design, &config.search)?, false),
    };
    let classes_text = to_json_string(&ClassesFile { block_count: design.b(), classes: classes.clone() })?;
    store(cache, &classes_key, &classes_text)?;
    let classes_hash =
        rec.record("classes", Some("develop"), design_hash.clone(), Some(("classes.json", &classes_text)), t, hit)?;

    let t = Instant::now();
    let resolutions_key = format!("resolutions-{classes_hash}.json");
    let (resolutions, hit) =
        match cached::<ResolutionsFile>(cache, &resolutions_key).filter(|f| f.validate(&design, &classes).is_ok()) {
            Some(f) => (f.resolutions, true),
            None => (all_resolutions(&design, &classes, &config.search)?, false),
        };
    let resolutions_text =
        to_json_string(&ResolutionsFile { class_count: classes.len(), resolutions: resolutions.clone() })?;
    store(cache, &resolutions_key, &resolutions_text)?;
    let resolutions_hash = rec.record(
        "resolutions",
        Some("classes"),
        classes_hash,
        Some(("resolutions.json", &resolutions_text)),
        t,
        hit,
    )?;

    let t = Instant::now();
    let graph = build_compat_graph(&resolutions, &classes, &config.search)?;
    let graph_hash = rec.record(
        "compat-graph",
        Some("resolutions"),
        resolutions_hash,
        Some(("compat.dimacs", &graph.to_dimacs())),
        t,
        false,
    )?;

    let t = Instant::now();
    let cliques = max_clique(&graph);
    for c in &cliques.cliques {
        if !verify_clique_compatible(c, &resolutions, &classes)? {
            return Err(Error::Consistency(format!("maximum clique {c:?} fails the pairwise compatibility recheck")));
        }
    }
    let cliques_hash = rec.record(
        "clique",
        Some("compat-graph"),
        graph_hash,
        Some(("cliques.json", &to_json_string(&cliques)?)),
        t,
        false,
    )?;

    let t = Instant::now();
    let bound = compatible_resolution_bound(params.v, params.k);
    let m = cliques.max_size;
    let proper = bound.is_some() && params.lambda == 1 && (params.v / params.k - 1) / (params.k - 1) >= 2;
    let mut planes = Vec::new();
    let mut plane_summaries = Vec::new();
    let verdict = match bound {
        Some(b) if m > b => {
            return Err(Error::Consistency(format!("clique of size {m} exceeds the bound {b}")));
        }
        _ if !proper => Verdict::NoClaim,
        Some(b) if m < b => Verdict::NotEmbeddable,
        _ => {
            for c in &cliques.cliques {
                let members: Vec<Resolution> = c.iter().map(|&i| resolutions[i].clone()).collect();
                let plane = reconstruct_plane(&design, &members, &classes)?;
                plane_summaries.push(identify_plane(&plane)?);
                planes.push(plane);
            }
            Verdict::Embeddable
        }
    };
    let embed_text = to_json_string(&plane_summaries)?;
    if let Some(dir) = &config.out_dir {
        for (i, p) in planes.iter().enumerate() {
            let plane_file = format!("plane-{i}.json");
            std::fs::write(dir.join(&plane_file), to_json_string(&PlaneFile::from(p.arc.plane()))?)?;
            let arc = ArcFile {
                plane: PlaneRef::Path(plane_file.into()),
                arc_points: p.arc.points().to_vec(),
                degree: Some(p.arc.degree()),
            };
            std::fs::write(dir.join(format!("arc-{i}.json")), to_json_string(&arc)?)?;
        }
    }
    rec.record("embed", Some("clique"), cliques_hash, Some(("planes.json", &embed_text)), t, false)?;

    let summary = Summary {
        points: params.v,
        blocks: params.b,
        rank,
        aut: aut.group_order.clone(),
        classes: classes.len(),
        resolutions: resolutions.len(),
        edges: graph.edge_count(),
        m,
        bound,
        cliques: if m == 0 { 0 } else { cliques.cliques.len() },
        verdict,
        planes: plane_summaries,
    };
    let manifest = PipelineManifest { input: input.path().display().to_string(), stages: rec.stages, summary };
    if let Some(dir) = &config.out_dir {
        std::fs::write(dir.join("manifest.json"), to_json_string(&manifest)?)?;
    }
    Ok(PipelineRun { manifest, design, classes, resolutions, graph, cliques, aut, planes })
}

/// Rank fingerprint and, where PG(2, q) can be generated, a full
/// isomorphism test against it.
pub fn identify_plane(plane: &ReconstructedPlane) -> Result<PlaneSummary> {
    let q = plane.arc.order();
    let p = smallest_prime_factor(q);
    let p_rank = plane.arc.plane().incidence_matrix().p_rank(p as u32)?;
    let (desarguesian_p_rank, isomorphic_to_desarguesian) = match generate_pg2q(q as u32) {
        Ok(pg) => (Some(pg.incidence_matrix().p_rank(p as u32)?), Some(isomorphic(plane.arc.plane(), &pg))),
        Err(_) => (None, None),
    };
    Ok(PlaneSummary { order: q, p_rank, desarguesian_p_rank, isomorphic_to_desarguesian })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn write(dir: &Path, name: &str, text: &str) -> PathBuf {
        let p = dir.join(name);
        std::fs::write(&p, text).unwrap();
        p
    }

    #[test]
    fn k4_toy_design_makes_no_claim() {
        let dir = tempfile::tempdir().unwrap();
        let family = write(dir.path(), "k4.json", r#"{"modulus": 3, "base_blocks": [[1, 2]]}"#);
        let out = dir.path().join("out");
        let config = PipelineConfig {
            out_dir: Some(out.clone()),
            cache_dir: Some(dir.path().join("cache")),
            ..Default::default()
        };
        let run = run_pipeline(&PipelineInput::Family(family.clone()), &config).unwrap();
        let s = &run.manifest.summary;
        assert_eq!((s.classes, s.resolutions, s.m, s.cliques), (3, 1, 1, 1));
        assert_eq!(s.aut.to_u128(), Some(24));
        assert_eq!(s.verdict, Verdict::NoClaim);
        assert!(run.manifest.is_consistent());
        let first = std::fs::read(out.join("resolutions.json")).unwrap();
        let again = run_pipeline(&PipelineInput::Family(family), &config).unwrap();
        assert!(again.manifest.stages.iter().find(|s| s.name == "resolutions").unwrap().cached);
        assert_eq!(std::fs::read(out.join("resolutions.json")).unwrap(), first);
        let manifest: PipelineManifest = read_json(&out.join("manifest.json")).unwrap();
        assert_eq!(manifest.summary, again.manifest.summary);
    }

    #[test]
    fn hyperoval_design_embeds_in_pg24() {
        // The 2-(6,2,1) design of a hyperoval: all pairs on 6 points.
        let dir = tempfile::tempdir().unwrap();
        let blocks: Vec<Vec<u32>> = (0..6).flat_map(|a| (a + 1..6).map(move |b| vec![a, b])).collect();
        let design = write(dir.path(), "k6.json", &serde_json::json!({ "v": 6, "blocks": blocks }).to_string());
        let run = run_pipeline(&PipelineInput::Design(design), &PipelineConfig::default()).unwrap();
        let s = &run.manifest.summary;
        assert_eq!((s.classes, s.resolutions, s.bound), (15, 6, Some(6)));
        assert_eq!(s.verdict, Verdict::Embeddable);
        assert_eq!(s.planes[0].isomorphic_to_desarguesian, Some(true));
        assert_eq!(s.planes[0].p_rank, s.planes[0].desarguesian_p_rank.unwrap());
    }

    #[test]
    fn malformed_inputs() {
        let dir = tempfile::tempdir().unwrap();
        let bad = write(dir.path(), "bad.json", r#"{"modulus": 3"#);
        assert!(matches!(run_pipeline(&PipelineInput::Family(bad), &PipelineConfig::default()), Err(Error::Parse(_))));
        let invalid = write(dir.path(), "invalid.json", r#"{"modulus": 3, "base_blocks": [[1, 1]]}"#);
        assert!(run_pipeline(&PipelineInput::Family(invalid), &PipelineConfig::default()).is_err());
    }
}
