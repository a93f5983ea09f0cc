//! Python bindings. Points cross the boundary as `(x, y, z)` tuples and
//! medial spheres as `(x, y, z, r)`.

use pyo3::exceptions::{PyIOError, PyValueError};
use pyo3::prelude::*;

use segmat::geometry::{Sphere, Vec3};
use segmat::io::{self, MeshIoError};
use segmat::mesh;
use segmat::pipeline::{self, PipelineParams};
use segmat::region_growing;

fn io_err(e: MeshIoError) -> PyErr {
    match e {
        MeshIoError::Io(e) => PyIOError::new_err(e.to_string()),
        other => PyValueError::new_err(other.to_string()),
    }
}

fn value_err(e: impl std::fmt::Display) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn to_vec3(p: &[f64; 3]) -> Vec3 {
    Vec3::new(p[0], p[1], p[2])
}

fn from_vec3(p: &Vec3) -> [f64; 3] {
    [p.x, p.y, p.z]
}

/// Triangle surface mesh.
#[pyclass(name = "SurfaceMesh", module = "segmat")]
pub struct PySurfaceMesh {
    pub inner: mesh::SurfaceMesh,
}

#[pymethods]
impl PySurfaceMesh {
    #[new]
    fn new(vertices: Vec<[f64; 3]>, faces: Vec<[usize; 3]>) -> PyResult<Self> {
        let inner = mesh::SurfaceMesh::new(vertices.iter().map(to_vec3).collect(), faces);
        inner.validate().map_err(value_err)?;
        Ok(Self { inner })
    }

    /// Loads an `.off` or `.obj` file.
    #[staticmethod]
    fn load(path: &str) -> PyResult<Self> {
        Ok(Self { inner: io::load_surface(path).map_err(io_err)? })
    }

    fn save(&self, path: &str) -> PyResult<()> {
        io::save_surface(&self.inner, path).map_err(io_err)
    }

    #[getter]
    fn vertices(&self) -> Vec<[f64; 3]> {
        self.inner.vertices.iter().map(from_vec3).collect()
    }

    #[getter]
    fn faces(&self) -> Vec<[usize; 3]> {
        self.inner.faces.clone()
    }

    fn face_areas(&self) -> Vec<f64> {
        self.inner.face_areas()
    }

    fn __len__(&self) -> usize {
        self.inner.faces.len()
    }

    fn __repr__(&self) -> String {
        format!("SurfaceMesh(vertices={}, faces={})", self.inner.vertices.len(), self.inner.faces.len())
    }
}

/// Medial mesh: spheres joined by edges and triangles.
#[pyclass(name = "MedialMesh", module = "segmat")]
pub struct PyMedialMesh {
    pub inner: mesh::MedialMesh,
}

#[pymethods]
impl PyMedialMesh {
    #[new]
    #[pyo3(signature = (spheres, edges = Vec::new(), faces = Vec::new()))]
    fn new(spheres: Vec<[f64; 4]>, edges: Vec<[usize; 2]>, faces: Vec<[usize; 3]>) -> PyResult<Self> {
        let spheres = spheres.iter().map(|s| Sphere::new(Vec3::new(s[0], s[1], s[2]), s[3])).collect();
        let inner = mesh::MedialMesh::new(spheres, edges, faces);
        inner.validate().map_err(value_err)?;
        Ok(Self { inner })
    }

    /// Loads a `.ma` file.
    #[staticmethod]
    fn load(path: &str) -> PyResult<Self> {
        Ok(Self { inner: io::load_medial_mesh(path).map_err(io_err)? })
    }

    #[staticmethod]
    fn from_ma(text: &str) -> PyResult<Self> {
        Ok(Self { inner: io::parse_ma(text).map_err(io_err)? })
    }

    fn save(&self, path: &str) -> PyResult<()> {
        io::save_medial_mesh(&self.inner, path).map_err(io_err)
    }

    fn to_ma(&self) -> String {
        io::write_ma(&self.inner)
    }

    #[getter]
    fn spheres(&self) -> Vec<[f64; 4]> {
        self.inner.spheres.iter().map(|s| [s.center.x, s.center.y, s.center.z, s.radius]).collect()
    }

    #[getter]
    fn edges(&self) -> Vec<[usize; 2]> {
        self.inner.edges.clone()
    }

    #[getter]
    fn faces(&self) -> Vec<[usize; 3]> {
        self.inner.faces.clone()
    }

    fn __repr__(&self) -> String {
        format!(
            "MedialMesh(spheres={}, edges={}, faces={})",
            self.inner.spheres.len(),
            self.inner.edges.len(),
            self.inner.faces.len()
        )
    }
}

/// Pipeline parameters; keyword arguments override the defaults.
#[pyclass(name = "Params", module = "segmat", get_all, set_all, skip_from_py_object)]
#[derive(Debug, Clone, PartialEq)]
pub struct PyParams {
    pub alpha: f64,
    #[pyo3(name = "lambda_")]
    pub lambda: f64,
    pub delta0: f64,
    pub eta: f64,
    pub swallowing: bool,
    pub merging: bool,
    pub merge_tau: f64,
    pub graph_cut: bool,
    pub omega: f64,
    pub max_iterations: usize,
    pub target_error: f64,
    pub collapse_curves: bool,
    pub prune_branches: bool,
}

impl Default for PyParams {
    fn default() -> Self {
        let p = PipelineParams::default();
        Self {
            alpha: p.growing.alpha,
            lambda: p.growing.lambda,
            delta0: p.growing.delta0,
            eta: p.growing.eta,
            swallowing: p.growing.swallowing,
            merging: p.merging,
            merge_tau: p.merge_tau,
            graph_cut: p.graph_cut,
            omega: p.transfer.omega,
            max_iterations: p.transfer.max_iterations,
            target_error: p.simplify.target_error,
            collapse_curves: p.simplify.collapse_curves,
            prune_branches: p.simplify.prune_branches,
        }
    }
}

impl PyParams {
    pub fn to_pipeline(&self) -> PipelineParams {
        let mut p = PipelineParams::default();
        p.growing.alpha = self.alpha;
        p.growing.lambda = self.lambda;
        p.growing.delta0 = self.delta0;
        p.growing.eta = self.eta;
        p.growing.swallowing = self.swallowing;
        p.merging = self.merging;
        p.merge_tau = self.merge_tau;
        p.graph_cut = self.graph_cut;
        p.transfer.omega = self.omega;
        p.transfer.max_iterations = self.max_iterations;
        p.simplify.target_error = self.target_error;
        p.simplify.collapse_curves = self.collapse_curves;
        p.simplify.prune_branches = self.prune_branches;
        p
    }
}

#[pymethods]
impl PyParams {
    #[new]
    #[pyo3(signature = (**kwargs))]
    fn new(kwargs: Option<&Bound<'_, pyo3::types::PyDict>>) -> PyResult<Self> {
        let this = Self::default();
        let Some(kwargs) = kwargs else { return Ok(this) };
        let py = kwargs.py();
        let obj = Bound::new(py, this)?;
        for (k, v) in kwargs.iter() {
            let name: String = k.extract()?;
            if !obj.hasattr(name.as_str())? {
                return Err(PyValueError::new_err(format!("unknown parameter {name:?}")));
            }
            obj.setattr(name.as_str(), v)?;
        }
        let out = obj.borrow().clone();
        out.to_pipeline().validate().map_err(value_err)?;
        Ok(out)
    }

    fn __repr__(&self) -> String {
        format!("{self:?}").replacen("PyParams", "Params", 1)
    }
}

/// Result of segmenting a shape.
#[pyclass(name = "Segmentation", module = "segmat")]
pub struct PySegmentation {
    /// Region id of every surface face.
    #[pyo3(get)]
    pub face_labels: Vec<usize>,
    /// Region id of every MAT graph node (faces first, then standalone edges).
    #[pyo3(get)]
    pub node_labels: Vec<usize>,
    #[pyo3(get)]
    pub region_count: usize,
    #[pyo3(get)]
    pub grown_regions: usize,
    #[pyo3(get)]
    pub swallowed: usize,
    /// Graph-cut energy before and after, when that stage ran.
    #[pyo3(get)]
    pub energy: Option<(f64, f64)>,
    #[pyo3(get)]
    pub timings: Vec<(String, f64)>,
    structured: mesh::MedialMesh,
}

impl From<pipeline::ShapeSegmentation> for PySegmentation {
    fn from(r: pipeline::ShapeSegmentation) -> Self {
        Self {
            node_labels: r.mat.node_labels.clone(),
            region_count: r.mat.region_count(),
            grown_regions: r.mat.grown.regions.len(),
            swallowed: r.mat.grown.swallowed,
            energy: r.transfer.as_ref().map(|t| (t.initial_energy, t.energy)),
            timings: r.timings.iter().map(|t| (t.stage.to_string(), t.seconds)).collect(),
            face_labels: r.face_labels,
            structured: r.mat.structured,
        }
    }
}

#[pymethods]
impl PySegmentation {
    /// The structured medial mesh the graph was split along.
    #[getter]
    fn structured(&self) -> PyMedialMesh {
        PyMedialMesh { inner: self.structured.clone() }
    }

    fn __repr__(&self) -> String {
        format!("Segmentation(regions={}, faces={})", self.region_count, self.face_labels.len())
    }
}

fn params_or_default(params: Option<PyRef<'_, PyParams>>) -> PipelineParams {
    params.map_or_else(PipelineParams::default, |p| p.to_pipeline())
}

/// Segments `mesh` given its base medial mesh. The structured medial mesh is
/// simplified from `mat` unless supplied.
#[pyfunction]
#[pyo3(signature = (mesh, mat, structured = None, params = None))]
fn segment(
    py: Python<'_>,
    mesh: &PySurfaceMesh,
    mat: &PyMedialMesh,
    structured: Option<&PyMedialMesh>,
    params: Option<PyRef<'_, PyParams>>,
) -> PyResult<PySegmentation> {
    let p = params_or_default(params);
    let r = py
        .detach(|| pipeline::segment_shape(&mesh.inner, &mat.inner, structured.map(|s| &s.inner), &p))
        .map_err(value_err)?;
    Ok(r.into())
}

/// Simplifies a medial mesh with the simplification settings of `params`.
#[pyfunction]
#[pyo3(signature = (mat, params = None))]
fn simplify(py: Python<'_>, mat: &PyMedialMesh, params: Option<PyRef<'_, PyParams>>) -> PyResult<PyMedialMesh> {
    let p = params_or_default(params);
    let inner = py.detach(|| segmat::simplify::simplify(&mat.inner, &p.simplify)).map_err(value_err)?;
    Ok(PyMedialMesh { inner })
}

/// Rand index, cut discrepancy, Hamming and consistency errors as a dict.
#[pyfunction]
fn evaluate<'py>(
    py: Python<'py>,
    mesh: &PySurfaceMesh,
    pred: Vec<usize>,
    gt: Vec<usize>,
) -> PyResult<Bound<'py, pyo3::types::PyDict>> {
    let r = segmat::metrics::evaluate(&mesh.inner, &pred, &gt).map_err(value_err)?;
    let d = pyo3::types::PyDict::new(py);
    d.set_item("rand_index", r.rand_index)?;
    d.set_item("cut_discrepancy", r.cut_discrepancy)?;
    d.set_item("hamming", r.hamming.distance)?;
    d.set_item("hamming_missing_rate", r.hamming.missing_rate)?;
    d.set_item("hamming_false_alarm_rate", r.hamming.false_alarm_rate)?;
    d.set_item("gce", r.consistency.gce)?;
    d.set_item("lce", r.consistency.lce)?;
    Ok(d)
}

/// Minimal oriented bounding box: `(center, axes, half_extents)`.
#[pyfunction]
fn mobb(points: Vec<[f64; 3]>) -> PyResult<([f64; 3], [[f64; 3]; 3], [f64; 3])> {
    let pts: Vec<Vec3> = points.iter().map(to_vec3).collect();
    let b = segmat::abstraction::mobb(&pts).map_err(value_err)?;
    Ok((from_vec3(&b.center), b.axes.each_ref().map(from_vec3), b.half_extents))
}

/// One box per segment, scored against the mesh: `(iou, chamfer)`.
#[pyfunction]
fn abstraction_error(py: Python<'_>, mesh: &PySurfaceMesh, labels: Vec<usize>) -> PyResult<(f64, f64)> {
    if labels.len() != mesh.inner.faces.len() {
        return Err(PyValueError::new_err(format!("{} labels for {} faces", labels.len(), mesh.inner.faces.len())));
    }
    let s = py.detach(|| {
        let boxes = segmat::abstraction::part_boxes(&mesh.inner, &labels);
        segmat::abstraction::abstraction_error(&mesh.inner, &boxes)
    });
    Ok((s.iou, s.chamfer))
}

/// Labels of skeleton points whose radii are measured against `cloud`.
#[pyfunction]
#[pyo3(signature = (points, cloud, k = segmat::skeleton::DEFAULT_K, params = None))]
fn segment_skeleton(
    points: Vec<[f64; 3]>,
    cloud: Vec<[f64; 3]>,
    k: usize,
    params: Option<PyRef<'_, PyParams>>,
) -> PyResult<Vec<usize>> {
    let p = params_or_default(params);
    let cloud: Vec<Vec3> = cloud.iter().map(to_vec3).collect();
    let sc = segmat::skeleton::SkeletonCloud::build(points.iter().map(to_vec3).collect(), &cloud, k).map_err(value_err)?;
    Ok(segmat::skeleton::segment_skeleton(&sc, &p.growing, p.merging.then_some(p.merge_tau)).labels)
}

#[pyfunction]
#[pyo3(signature = (ri, rj, theta, alpha = region_growing::DEFAULT_ALPHA))]
fn ma_cost(ri: f64, rj: f64, theta: f64, alpha: f64) -> f64 {
    region_growing::ma_cost_value(ri, rj, theta, alpha)
}

#[pyfunction]
fn mp_cost(plus: f64, minus: f64) -> f64 {
    region_growing::mp_cost_value(plus, minus)
}

#[pymodule]
#[pyo3(name = "segmat")]
fn segmat_module(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PySurfaceMesh>()?;
    m.add_class::<PyMedialMesh>()?;
    m.add_class::<PyParams>()?;
    m.add_class::<PySegmentation>()?;
    m.add_function(wrap_pyfunction!(segment, m)?)?;
    m.add_function(wrap_pyfunction!(simplify, m)?)?;
    m.add_function(wrap_pyfunction!(evaluate, m)?)?;
    m.add_function(wrap_pyfunction!(mobb, m)?)?;
    m.add_function(wrap_pyfunction!(abstraction_error, m)?)?;
    m.add_function(wrap_pyfunction!(segment_skeleton, m)?)?;
    m.add_function(wrap_pyfunction!(ma_cost, m)?)?;
    m.add_function(wrap_pyfunction!(mp_cost, m)?)?;
    Ok(())
}
