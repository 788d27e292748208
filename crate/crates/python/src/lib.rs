//! Python bindings for `maxarc`.
//!
//! Designs, planes and arcs are Python classes. Enumeration results are
//! returned as lists of index lists, which can be passed back to later
//! calls unchanged. Errors raise subclasses of `maxarc.MaxarcError`
//! matching the command-line exit codes.

use std::path::PathBuf;

use pyo3::create_exception;
use pyo3::exceptions::PyException;
use pyo3::prelude::*;

use maxarc::compat::compatible_resolution_bound;
use maxarc::geometry::reconstruct_plane as reconstruct;
use maxarc::symmetry::GroupOrder;
use maxarc::{
    BitSet, CompatGraph as CoreGraph, Design as CoreDesign, DifferenceFamily, Error, IncidenceStructure, MaximalArc,
    ParallelClass, PipelineConfig, PipelineInput, Resolution, SearchConfig,
};

create_exception!(maxarc, MaxarcError, PyException, "Base class for all maxarc errors.");
create_exception!(maxarc, ParseError, MaxarcError, "Unreadable or malformed input.");
create_exception!(maxarc, ValidationError, MaxarcError, "Input that parses but violates a requirement.");
create_exception!(maxarc, ConsistencyError, MaxarcError, "A result contradicts a proven invariant.");

fn to_py(e: Error) -> PyErr {
    let msg = e.to_string();
    match e {
        Error::Parse(_) | Error::Io(_) => ParseError::new_err(msg),
        Error::Context(_)
        | Error::Parameter(_)
        | Error::Structural(_)
        | Error::InvalidFamily(_)
        | Error::Precondition(_) => ValidationError::new_err(msg),
        Error::DivisionByZero(_) | Error::Reconstruction(_) | Error::Consistency(_) => ConsistencyError::new_err(msg),
    }
}

fn search(threads: Option<usize>) -> SearchConfig {
    threads.map(SearchConfig::with_threads).unwrap_or_default()
}

fn group_order(py: Python<'_>, order: &GroupOrder) -> PyResult<Py<PyAny>> {
    let int = py.import("builtins")?.getattr("int")?;
    Ok(int.call1((order.to_string(),))?.unbind())
}

fn json_to_py(py: Python<'_>, value: &impl serde::Serialize) -> PyResult<Py<PyAny>> {
    let text = serde_json::to_string(value).map_err(|e| ParseError::new_err(e.to_string()))?;
    Ok(py.import("json")?.call_method1("loads", (text,))?.unbind())
}

fn classes_from(lists: Vec<Vec<usize>>) -> Vec<ParallelClass> {
    lists.into_iter().map(ParallelClass::new).collect()
}

fn resolutions_from(lists: Vec<Vec<usize>>) -> Vec<Resolution> {
    lists.into_iter().map(Resolution::new).collect()
}

/// A 2-design on points `0..v`.
#[pyclass(name = "Design", module = "maxarc", frozen)]
struct PyDesign(CoreDesign);

#[pymethods]
impl PyDesign {
    #[new]
    fn new(v: usize, blocks: Vec<Vec<u32>>) -> PyResult<Self> {
        CoreDesign::new(v, blocks).map(PyDesign).map_err(to_py)
    }

    /// Develops a cyclic difference family over Z_modulus plus a point at infinity.
    #[staticmethod]
    fn from_family(modulus: u32, base_blocks: Vec<Vec<u32>>) -> PyResult<Self> {
        maxarc::develop_family(&DifferenceFamily::new(modulus, base_blocks)).map(PyDesign).map_err(to_py)
    }

    #[getter]
    fn v(&self) -> usize {
        self.0.v()
    }

    #[getter]
    fn b(&self) -> usize {
        self.0.b()
    }

    #[getter]
    fn blocks(&self) -> Vec<Vec<u32>> {
        self.0.blocks().to_vec()
    }

    /// `(v, k, lambda)` when the 2-design axioms hold, else `None`.
    fn params(&self) -> Option<(usize, usize, usize)> {
        self.0.params().map(|p| (p.v, p.k, p.lambda))
    }

    fn is_valid(&self) -> bool {
        maxarc::validate_design(&self.0).is_valid()
    }

    #[pyo3(signature = (p = 2))]
    fn p_rank(&self, p: u32) -> PyResult<usize> {
        self.0.incidence_matrix().p_rank(p).map_err(to_py)
    }

    fn automorphism_group_order(&self, py: Python<'_>) -> PyResult<Py<PyAny>> {
        group_order(py, &maxarc::automorphism_group_order(&self.0).group_order)
    }

    fn certificate(&self) -> String {
        maxarc::certificate(&self.0)
    }

    fn isomorphic(&self, other: &PyDesign) -> bool {
        maxarc::isomorphic(&self.0, &other.0)
    }

    fn has_rotational_automorphism(&self) -> bool {
        maxarc::has_rotational_automorphism(&self.0)
    }

    /// Every parallel class as a sorted list of block indices.
    #[pyo3(signature = (threads = None))]
    fn parallel_classes(&self, py: Python<'_>, threads: Option<usize>) -> PyResult<Vec<Vec<usize>>> {
        let design = &self.0;
        let classes = py.detach(|| maxarc::all_parallel_classes(design, &search(threads))).map_err(to_py)?;
        Ok(classes.iter().map(|c| c.block_indices().to_vec()).collect())
    }

    /// Every resolution as a sorted list of indices into `classes`.
    #[pyo3(signature = (classes, threads = None))]
    fn resolutions(
        &self,
        py: Python<'_>,
        classes: Vec<Vec<usize>>,
        threads: Option<usize>,
    ) -> PyResult<Vec<Vec<usize>>> {
        let design = &self.0;
        let classes = classes_from(classes);
        let res = py.detach(|| maxarc::all_resolutions(design, &classes, &search(threads))).map_err(to_py)?;
        Ok(res.iter().map(|r| r.class_indices().to_vec()).collect())
    }

    fn __repr__(&self) -> String {
        format!("Design(v={}, b={})", self.0.v(), self.0.b())
    }
}

/// Compatibility graph on resolutions.
#[pyclass(name = "CompatGraph", module = "maxarc", frozen)]
struct PyCompatGraph(CoreGraph);

#[pymethods]
impl PyCompatGraph {
    #[staticmethod]
    fn from_dimacs(text: &str) -> PyResult<Self> {
        CoreGraph::from_dimacs(text).map(PyCompatGraph).map_err(to_py)
    }

    #[getter]
    fn vertex_count(&self) -> usize {
        self.0.vertex_count()
    }

    #[getter]
    fn edge_count(&self) -> usize {
        self.0.edge_count()
    }

    fn edges(&self) -> Vec<(usize, usize)> {
        self.0.edges()
    }

    fn to_dimacs(&self) -> String {
        self.0.to_dimacs()
    }

    /// `(m, cliques)`: the clique number and every clique of that size.
    fn max_clique(&self, py: Python<'_>) -> (usize, Vec<Vec<usize>>) {
        let g = &self.0;
        let r = py.detach(|| maxarc::max_clique(g));
        (r.max_size, r.cliques)
    }
}

/// A finite incidence structure, usually a projective plane.
#[pyclass(name = "Plane", module = "maxarc", frozen)]
struct PyPlane(IncidenceStructure);

#[pymethods]
impl PyPlane {
    #[new]
    fn new(points: usize, lines: Vec<Vec<usize>>) -> PyResult<Self> {
        IncidenceStructure::new(points, lines).map(PyPlane).map_err(to_py)
    }

    #[getter]
    fn point_count(&self) -> usize {
        self.0.point_count()
    }

    #[getter]
    fn lines(&self) -> Vec<Vec<usize>> {
        self.0.lines().iter().map(BitSet::to_vec).collect()
    }

    /// The plane order, or `None` when an axiom fails.
    fn order(&self) -> Option<usize> {
        maxarc::verify_plane(&self.0).q
    }

    #[pyo3(signature = (p = 2))]
    fn p_rank(&self, p: u32) -> PyResult<usize> {
        self.0.incidence_matrix().p_rank(p).map_err(to_py)
    }

    fn dual(&self) -> PyResult<PyPlane> {
        maxarc::dualize(&self.0).map(PyPlane).map_err(to_py)
    }

    fn automorphism_group_order(&self, py: Python<'_>) -> PyResult<Py<PyAny>> {
        group_order(py, &maxarc::automorphism_group_order(&self.0).group_order)
    }

    fn certificate(&self) -> String {
        maxarc::certificate(&self.0)
    }

    fn isomorphic(&self, other: &PyPlane) -> bool {
        maxarc::isomorphic(&self.0, &other.0)
    }

    fn __repr__(&self) -> String {
        format!("Plane(points={}, lines={})", self.0.point_count(), self.0.line_count())
    }
}

/// Design, parallel classes and resolutions induced by an arc.
type ArcResolutions = (PyDesign, Vec<Vec<usize>>, Vec<Vec<usize>>);

/// A maximal (n, k)-arc in a projective plane.
#[pyclass(name = "Arc", module = "maxarc", frozen)]
struct PyArc(MaximalArc);

#[pymethods]
impl PyArc {
    #[new]
    fn new(plane: &PyPlane, points: Vec<usize>, degree: usize) -> PyResult<Self> {
        if let Some(&p) = points.iter().find(|&&p| p >= plane.0.point_count()) {
            return Err(ValidationError::new_err(format!("arc point {p} is not a point of the plane")));
        }
        let bits = BitSet::from_indices(plane.0.point_count(), points);
        MaximalArc::new(plane.0.clone(), bits, degree).map(PyArc).map_err(to_py)
    }

    #[getter]
    fn plane(&self) -> PyPlane {
        PyPlane(self.0.plane().clone())
    }

    #[getter]
    fn points(&self) -> Vec<usize> {
        self.0.points().to_vec()
    }

    #[getter]
    fn degree(&self) -> usize {
        self.0.degree()
    }

    #[getter]
    fn order(&self) -> usize {
        self.0.order()
    }

    fn __len__(&self) -> usize {
        self.0.size()
    }

    fn dual(&self) -> PyResult<PyArc> {
        self.0.dual().map(PyArc).map_err(to_py)
    }

    /// The design cut out by the secant lines.
    fn design(&self) -> PyResult<PyDesign> {
        maxarc::extract_design(&self.0).map(PyDesign).map_err(to_py)
    }

    /// `(design, classes, resolutions)` induced by the external points and lines.
    fn resolutions(&self) -> PyResult<ArcResolutions> {
        let r = maxarc::extract_resolutions(&self.0).map_err(to_py)?;
        Ok((
            PyDesign(r.design),
            r.classes.iter().map(|c| c.block_indices().to_vec()).collect(),
            r.resolutions.iter().map(|c| c.class_indices().to_vec()).collect(),
        ))
    }
}

#[pyfunction]
fn validate_family(py: Python<'_>, modulus: u32, base_blocks: Vec<Vec<u32>>) -> PyResult<Py<PyAny>> {
    let report = maxarc::validate_family(&DifferenceFamily::new(modulus, base_blocks)).map_err(to_py)?;
    json_to_py(py, &report)
}

#[pyfunction]
#[pyo3(signature = (resolutions, classes, threads = None))]
fn compat_graph(
    py: Python<'_>,
    resolutions: Vec<Vec<usize>>,
    classes: Vec<Vec<usize>>,
    threads: Option<usize>,
) -> PyResult<PyCompatGraph> {
    let (res, cls) = (resolutions_from(resolutions), classes_from(classes));
    py.detach(|| maxarc::build_compat_graph(&res, &cls, &search(threads))).map(PyCompatGraph).map_err(to_py)
}

#[pyfunction]
fn compatible(r1: Vec<usize>, r2: Vec<usize>, classes: Vec<Vec<usize>>) -> PyResult<bool> {
    maxarc::compatible(&Resolution::new(r1), &Resolution::new(r2), &classes_from(classes)).map_err(to_py)
}

/// Largest possible set of compatible resolutions for a 2-(v, k, 1) design.
#[pyfunction]
fn resolution_bound(v: usize, k: usize) -> Option<usize> {
    compatible_resolution_bound(v, k)
}

/// Rebuilds the plane from a maximum set of compatible resolutions given as
/// class-index lists. Returns the arc formed by the design points.
#[pyfunction]
fn reconstruct_plane(design: &PyDesign, clique: Vec<Vec<usize>>, classes: Vec<Vec<usize>>) -> PyResult<PyArc> {
    let r = reconstruct(&design.0, &resolutions_from(clique), &classes_from(classes)).map_err(to_py)?;
    Ok(PyArc(r.arc))
}

#[pyfunction]
fn generate_pg2q(q: u32) -> PyResult<PyPlane> {
    maxarc::generate_pg2q(q).map(PyPlane).map_err(to_py)
}

#[pyfunction]
fn denniston_arc(q: u32, k: u32) -> PyResult<PyArc> {
    maxarc::denniston_arc(q, k).map(PyArc).map_err(to_py)
}

/// Runs the full pipeline on a family or design file and returns the manifest as a dict.
#[pyfunction]
#[pyo3(signature = (family = None, design = None, out_dir = None, cache_dir = None, threads = None))]
fn run_pipeline(
    py: Python<'_>,
    family: Option<PathBuf>,
    design: Option<PathBuf>,
    out_dir: Option<PathBuf>,
    cache_dir: Option<PathBuf>,
    threads: Option<usize>,
) -> PyResult<Py<PyAny>> {
    let input = match (family, design) {
        (Some(f), None) => PipelineInput::Family(f),
        (None, Some(d)) => PipelineInput::Design(d),
        _ => return Err(ValidationError::new_err("pass exactly one of family= or design=")),
    };
    let config = PipelineConfig { search: search(threads), out_dir, cache_dir };
    let run = py.detach(|| maxarc::run_pipeline(&input, &config)).map_err(to_py)?;
    json_to_py(py, &run.manifest)
}

#[pymodule(name = "maxarc")]
fn maxarc_module(m: &Bound<'_, PyModule>) -> PyResult<()> {
    let py = m.py();
    m.add("MaxarcError", py.get_type::<MaxarcError>())?;
    m.add("ParseError", py.get_type::<ParseError>())?;
    m.add("ValidationError", py.get_type::<ValidationError>())?;
    m.add("ConsistencyError", py.get_type::<ConsistencyError>())?;
    m.add_class::<PyDesign>()?;
    m.add_class::<PyCompatGraph>()?;
    m.add_class::<PyPlane>()?;
    m.add_class::<PyArc>()?;
    m.add_function(wrap_pyfunction!(validate_family, m)?)?;
    m.add_function(wrap_pyfunction!(compat_graph, m)?)?;
    m.add_function(wrap_pyfunction!(compatible, m)?)?;
    m.add_function(wrap_pyfunction!(resolution_bound, m)?)?;
    m.add_function(wrap_pyfunction!(reconstruct_plane, m)?)?;
    m.add_function(wrap_pyfunction!(generate_pg2q, m)?)?;
    m.add_function(wrap_pyfunction!(denniston_arc, m)?)?;
    m.add_function(wrap_pyfunction!(run_pipeline, m)?)?;
    Ok(())
}
