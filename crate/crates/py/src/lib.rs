use std::path::PathBuf;

use pyo3::create_exception;
use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::{PyDict, PyList};
use serde_json::Value;

use vertisite::alt_filter::{Candidate, FacilityType};
use vertisite::geom::Point;
use vertisite::grid::{Cell, GridSpec};
use vertisite::ingest::{load_scenario, Parameters, ScenarioBundle};
use vertisite::pipeline::{run_pipeline, PipelineError, RunConfig, RunReport};
use vertisite::reachability::{jps_shortest_path, NavGrid};
use vertisite::report::{emit_reports, EmitOptions};
use vertisite::scoring::{self, Gamma, Timeframe};
use vertisite::synth::{generate, SynthConfig};

create_exception!(vertisite, ValidationError, PyValueError);

fn pipeline_err(e: PipelineError) -> PyErr {
    if e.is_validation() {
        ValidationError::new_err(e.to_string())
    } else {
        PyRuntimeError::new_err(e.to_string())
    }
}

fn to_py<'py>(py: Python<'py>, v: &Value) -> PyResult<Bound<'py, PyAny>> {
    Ok(match v {
        Value::Null => py.None().into_bound(py),
        Value::Bool(b) => b.into_pyobject(py)?.to_owned().into_any(),
        Value::Number(n) => match n.as_i64() {
            Some(i) => i.into_pyobject(py)?.into_any(),
            None => n.as_f64().unwrap_or(f64::NAN).into_pyobject(py)?.into_any(),
        },
        Value::String(s) => s.into_pyobject(py)?.into_any(),
        Value::Array(items) => {
            let list = PyList::empty(py);
            for x in items {
                list.append(to_py(py, x)?)?;
            }
            list.into_any()
        }
        Value::Object(map) => {
            let d = PyDict::new(py);
            for (k, x) in map {
                d.set_item(k, to_py(py, x)?)?;
            }
            d.into_any()
        }
    })
}

fn serialize<'py>(py: Python<'py>, value: &impl serde::Serialize) -> PyResult<Bound<'py, PyAny>> {
    let v = serde_json::to_value(value).map_err(|e| PyRuntimeError::new_err(e.to_string()))?;
    to_py(py, &v)
}

/// A loaded, validated scenario.
#[pyclass(frozen)]
struct Scenario {
    bundle: ScenarioBundle,
}

#[pymethods]
impl Scenario {
    #[staticmethod]
    fn load(manifest: PathBuf) -> PyResult<Self> {
        let bundle = load_scenario(&manifest).map_err(|e| ValidationError::new_err(e.to_string()))?;
        Ok(Scenario { bundle })
    }

    /// Seeded synthetic scenario. `small=False` gives the 1500x1500 desk scale.
    #[staticmethod]
    #[pyo3(signature = (seed, small = true))]
    fn synthetic(seed: u64, small: bool) -> Self {
        let cfg = if small {
            SynthConfig::small()
        } else {
            SynthConfig::default()
        };
        Scenario {
            bundle: generate(seed, &cfg),
        }
    }

    /// Writes the scenario files and returns the manifest path.
    fn write_dir(&self, dir: PathBuf) -> PyResult<PathBuf> {
        self.bundle
            .write_dir(&dir)
            .map_err(|e| PyRuntimeError::new_err(e.to_string()))
    }

    #[getter]
    fn name(&self) -> &str {
        &self.bundle.name
    }

    #[getter]
    fn facility_ids(&self) -> Vec<String> {
        self.bundle.facilities.iter().map(|f| f.id.clone()).collect()
    }

    #[getter]
    fn destination_ids(&self) -> Vec<String> {
        self.bundle.destinations.iter().map(|d| d.id.clone()).collect()
    }

    fn __repr__(&self) -> String {
        format!(
            "Scenario({:?}, facilities={}, destinations={}, polygons={})",
            self.bundle.name,
            self.bundle.facilities.len(),
            self.bundle.destinations.len(),
            self.bundle.constraints.polygons.len()
        )
    }
}

/// Result of one pipeline run.
#[pyclass(frozen)]
struct Report {
    report: RunReport,
}

#[pymethods]
impl Report {
    #[getter]
    fn content_hash(&self) -> &str {
        &self.report.content_hash
    }

    /// Ranked candidates as dicts, best first.
    fn ranking<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyAny>> {
        serialize(py, &self.report.ranking)
    }

    fn destinations<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyAny>> {
        serialize(py, &self.report.destinations)
    }

    fn quadrants<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyAny>> {
        serialize(py, &self.report.quadrants)
    }

    fn exclusions<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyAny>> {
        let d = PyDict::new(py);
        d.set_item("candidates", serialize(py, &self.report.candidate_exclusions)?)?;
        d.set_item("destinations", serialize(py, &self.report.destination_exclusions)?)?;
        Ok(d.into_any())
    }

    /// The whole report as a nested dict.
    fn to_dict<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyAny>> {
        serialize(py, &self.report)
    }

    #[pyo3(signature = (outdir, intermediate = false, gamma_sweep = false))]
    fn emit(&self, outdir: PathBuf, intermediate: bool, gamma_sweep: bool) -> PyResult<Vec<PathBuf>> {
        emit_reports(
            &self.report,
            &outdir,
            EmitOptions {
                intermediate,
                gamma_sweep,
            },
        )
        .map_err(|e| PyRuntimeError::new_err(e.to_string()))
    }
}

/// Runs every stage. Keyword arguments override the manifest parameters.
#[pyfunction]
#[pyo3(signature = (scenario, *, gamma = None, buffer_m = None, range_km = None, cell_m = None, top_k = None, timeframes = None))]
#[allow(clippy::too_many_arguments)]
fn run(
    py: Python<'_>,
    scenario: &Scenario,
    gamma: Option<f64>,
    buffer_m: Option<f64>,
    range_km: Option<f64>,
    cell_m: Option<f64>,
    top_k: Option<usize>,
    timeframes: Option<Vec<String>>,
) -> PyResult<Report> {
    let timeframes = timeframes
        .map(|v| v.iter().map(|s| s.parse::<Timeframe>()).collect::<Result<Vec<_>, _>>())
        .transpose()
        .map_err(ValidationError::new_err)?;
    let overrides = Parameters {
        gamma,
        buffer_m,
        range_km,
        cell_m,
        top_k,
        timeframes,
        ..Default::default()
    };
    let bundle = &scenario.bundle;
    let report = py.detach(|| {
        let config = RunConfig::resolve(&bundle.parameters, &overrides)?;
        run_pipeline(bundle, &config)
    });
    Ok(Report {
        report: report.map_err(pipeline_err)?,
    })
}

#[pyfunction]
fn minmax_scale(values: Vec<f64>) -> PyResult<Vec<f64>> {
    scoring::minmax_scale(&values).map_err(|e| ValidationError::new_err(e.to_string()))
}

#[pyfunction]
#[pyo3(signature = (scaled_time, scaled_od, gamma = 0.5))]
fn destination_score(scaled_time: f64, scaled_od: f64, gamma: f64) -> PyResult<f64> {
    let g = Gamma::new(gamma).map_err(|e| ValidationError::new_err(e.to_string()))?;
    Ok(scoring::destination_score(scaled_time, scaled_od, g))
}

#[pyfunction]
fn truncate_2dp(value: f64) -> f64 {
    scoring::truncate_2dp(value)
}

/// Ranks `(id, num_bus, sum_score)` rows. Returns `(id, score, display_score)`
/// best first.
#[pyfunction]
fn rank(rows: Vec<(String, u32, f64)>) -> Vec<(String, f64, f64)> {
    let scored = rows
        .into_iter()
        .map(|(id, bus, sum)| {
            let c = Candidate {
                name: id.clone(),
                id,
                facility_type: FacilityType::TollGate,
                position: Point::new(0.0, 0.0),
                num_bus_routes: bus,
            };
            scoring::scored(&c, vec![], sum)
        })
        .collect();
    scoring::rank_candidates(scored)
        .into_iter()
        .map(|s| (s.candidate_id, s.score_v, s.display_score))
        .collect()
}

type Path = Option<(f64, Vec<(usize, usize)>)>;

/// Shortest 8-connected path on a boolean grid (True = blocked, row 0 first).
/// Returns `(length, cells)` in cell units, or None when unreachable.
#[pyfunction]
fn shortest_path(blocked: Vec<Vec<bool>>, start: (usize, usize), goal: (usize, usize)) -> PyResult<Path> {
    let n_rows = blocked.len();
    let n_cols = blocked.first().map_or(0, Vec::len);
    if blocked.iter().any(|r| r.len() != n_cols) {
        return Err(ValidationError::new_err("rows must have equal length"));
    }
    let spec = GridSpec::new(0.0, 0.0, 1.0, n_cols, n_rows).map_err(|e| ValidationError::new_err(e.to_string()))?;
    let grid = NavGrid::from_blocked(spec, blocked.concat()).map_err(|e| ValidationError::new_err(e.to_string()))?;
    let r = jps_shortest_path(&grid, Cell::new(start.0, start.1), Cell::new(goal.0, goal.1))
        .map_err(|e| ValidationError::new_err(e.to_string()))?;
    Ok(r.length_m
        .zip(r.cells())
        .map(|(len, cells)| (len, cells.into_iter().map(|c| (c.row, c.col)).collect())))
}

#[pymodule]
#[pyo3(name = "vertisite")]
fn vertisite_ext(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("ValidationError", m.py().get_type::<ValidationError>())?;
    m.add_class::<Scenario>()?;
    m.add_class::<Report>()?;
    m.add_function(wrap_pyfunction!(run, m)?)?;
    m.add_function(wrap_pyfunction!(minmax_scale, m)?)?;
    m.add_function(wrap_pyfunction!(destination_score, m)?)?;
    m.add_function(wrap_pyfunction!(truncate_2dp, m)?)?;
    m.add_function(wrap_pyfunction!(rank, m)?)?;
    m.add_function(wrap_pyfunction!(shortest_path, m)?)?;
    Ok(())
}
