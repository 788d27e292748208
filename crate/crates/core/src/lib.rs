//! Resolvable Steiner 2-designs and their embeddings as maximal arcs.
//!
//! The crate builds 1-rotational designs from cyclic difference families,
//! enumerates every parallel class and resolution of a design, finds the
//! largest sets of pairwise compatible resolutions, and, when such a set is
//! as large as possible, rebuilds the projective plane that contains the
//! design as a maximal arc and certifies it.
//!
//! Modules follow the pipeline order:
//!
//! * [`gf`]: GF(2^m) arithmetic and rank of 0/1 matrices over GF(p).
//! * [`design`]: difference families, development, design validation.
//! * [`enumeration`]: exact cover engine, parallel classes, resolutions.
//! * [`compat`]: compatibility graph and maximum-clique search.
//! * [`geometry`]: projective planes, Denniston arcs, plane reconstruction.
//! * [`symmetry`]: automorphism groups, isomorphism, canonical forms.
//! * [`pipeline`]: the end-to-end embeddability check with a manifest.

pub mod bitset;
pub mod compat;
pub mod design;
pub mod enumeration;
pub mod error;
pub mod geometry;
pub mod gf;
pub mod io;
pub mod pipeline;
pub mod symmetry;

pub use bitset::BitSet;
pub use compat::{build_compat_graph, compatible, max_clique, verify_clique_compatible, CliqueResult, CompatGraph};
pub use design::{develop_family, validate_design, validate_family, Design, DesignParams, DifferenceFamily};
pub use enumeration::{
    all_parallel_classes, all_resolutions, solve_exact_cover, ExactCoverInstance, ParallelClass, Resolution,
    SearchConfig,
};
pub use error::{Error, Result};
pub use geometry::{
    denniston_arc, dualize, extract_design, extract_resolutions, generate_pg2q, reconstruct_plane, verify_plane,
    IncidenceStructure, MaximalArc, PlaneReport,
};
pub use gf::{BinaryMatrix, FieldElement, GaloisField};
pub use pipeline::{run_pipeline, PipelineConfig, PipelineInput, PipelineManifest, PipelineRun, Summary, Verdict};
pub use symmetry::{
    automorphism_group_order, canonical_form, certificate, find_isomorphism, has_rotational_automorphism, isomorphic,
    AutResult, ColoredGraph, GroupOrder, Incidence,
};
