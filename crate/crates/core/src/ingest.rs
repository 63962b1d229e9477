//! Scenario loading and validation.
//!
//! A scenario is a JSON manifest naming its data files (paths relative to
//! the manifest) plus optional run parameters. Every file is validated and
//! all problems are reported together.

use std::collections::{BTreeSet, HashMap, HashSet};
use std::fmt;
use std::fs;
use std::io::BufReader;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::alt_filter::{AltKind, AltNode, Candidate, Destination};
use crate::dem::{read_ascii_grid, DemRaster};
use crate::geom::Point;
use crate::grid::ConstraintCategory;
use crate::provider::{
    FileTravelTimeProvider, HttpTravelTimeProvider, ProviderError, TravelTimeProvider, DEFAULT_API_KEY_ENV,
};
use crate::raster::{Polygon, PolygonSet};
use crate::scoring::{OdRecord, Timeframe, TransportMode, TransportNode, TravelTimeRecord};

pub const FACILITIES_HEADER: &[&str] = &["id", "name", "type", "x_m", "y_m", "num_bus_routes"];
pub const DESTINATIONS_HEADER: &[&str] = &["id", "name", "x_m", "y_m"];
pub const ALT_NODES_HEADER: &[&str] = &["id", "kind", "x_m", "y_m"];
pub const TRANSPORT_NODES_HEADER: &[&str] = &["id", "mode", "x_m", "y_m"];
pub const TRAVEL_TIMES_HEADER: &[&str] = &["dest_id", "node_id", "minutes"];
pub const OD_HEADER: &[&str] = &["dest_id", "node_id", "timeframe", "volume"];

/// One validation problem with file and (1-based) line context.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Issue {
    pub file: String,
    pub line: Option<u64>,
    pub message: String,
}

impl fmt::Display for Issue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.line {
            Some(l) => write!(f, "{}:{}: {}", self.file, l, self.message),
            None => write!(f, "{}: {}", self.file, self.message),
        }
    }
}

#[derive(Debug, Error)]
pub enum IngestError {
    #[error("cannot read {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("invalid manifest {path}: {message}")]
    Manifest { path: PathBuf, message: String },
    #[error("{} validation error(s):\n{}", .0.len(), .0.iter().map(|i| format!("  {i}")).collect::<Vec<_>>().join("\n"))]
    Validation(Vec<Issue>),
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Extent {
    pub origin_x: f64,
    pub origin_y: f64,
    pub width_m: f64,
    pub height_m: f64,
}

impl Extent {
    pub fn contains(&self, p: Point) -> bool {
        p.x >= self.origin_x
            && p.x <= self.origin_x + self.width_m
            && p.y >= self.origin_y
            && p.y <= self.origin_y + self.height_m
    }
}

/// Run parameters a manifest may pin. Unset values fall back to defaults.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Parameters {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gamma: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub buffer_m: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub range_km: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cell_m: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dem_threshold_m: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub timeframes: Option<Vec<Timeframe>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub modes: Option<Vec<TransportMode>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub top_k: Option<usize>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum ProviderConfig {
    #[default]
    File,
    Http {
        endpoint: String,
        #[serde(default = "default_key_env")]
        api_key_env: String,
    },
}

fn default_key_env() -> String {
    DEFAULT_API_KEY_ENV.to_string()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Manifest {
    #[serde(default)]
    pub name: String,
    pub extent: Extent,
    pub facilities: PathBuf,
    pub destinations: PathBuf,
    #[serde(default)]
    pub constraints: Vec<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dem: Option<PathBuf>,
    pub alt_nodes: PathBuf,
    pub transport_nodes: PathBuf,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub travel_times: Option<PathBuf>,
    pub od: PathBuf,
    #[serde(default)]
    pub travel_time_provider: ProviderConfig,
    #[serde(default)]
    pub parameters: Parameters,
}

/// Every input of one analysis run, validated.
#[derive(Clone, Debug, PartialEq)]
pub struct ScenarioBundle {
    pub name: String,
    pub extent: Extent,
    pub facilities: Vec<Candidate>,
    pub destinations: Vec<Destination>,
    pub constraints: PolygonSet,
    pub dem: Option<DemRaster>,
    pub alt_nodes: Vec<AltNode>,
    pub transport_nodes: Vec<TransportNode>,
    pub travel_times: Vec<TravelTimeRecord>,
    pub od: Vec<OdRecord>,
    pub provider: ProviderConfig,
    pub parameters: Parameters,
}

impl ScenarioBundle {
    pub fn travel_time_provider(&self) -> Result<Box<dyn TravelTimeProvider>, ProviderError> {
        match &self.provider {
            ProviderConfig::File => Ok(Box::new(FileTravelTimeProvider::from_records(&self.travel_times))),
            ProviderConfig::Http { endpoint, api_key_env } => Ok(Box::new(HttpTravelTimeProvider::from_env(
                endpoint.clone(),
                api_key_env,
            )?)),
        }
    }

    /// Writes the bundle as a manifest plus data files into `dir`.
    pub fn write_dir(&self, dir: &Path) -> Result<PathBuf, IngestError> {
        let io = |path: &Path| {
            let path = path.to_path_buf();
            move |source| IngestError::Io { path, source }
        };
        fs::create_dir_all(dir).map_err(io(dir))?;
        let write = |name: &str, contents: String| -> Result<PathBuf, IngestError> {
            let p = dir.join(name);
            fs::write(&p, contents).map_err(io(&p))?;
            Ok(PathBuf::from(name))
        };

        let facilities = write(
            "facilities.csv",
            to_csv(
                FACILITIES_HEADER,
                self.facilities.iter().map(|c| {
                    vec![
                        c.id.clone(),
                        c.name.clone(),
                        c.facility_type.as_str().to_string(),
                        c.position.x.to_string(),
                        c.position.y.to_string(),
                        c.num_bus_routes.to_string(),
                    ]
                }),
            ),
        )?;
        let destinations = write(
            "destinations.csv",
            to_csv(
                DESTINATIONS_HEADER,
                self.destinations.iter().map(|d| {
                    vec![
                        d.id.clone(),
                        d.name.clone(),
                        d.position.x.to_string(),
                        d.position.y.to_string(),
                    ]
                }),
            ),
        )?;
        let alt_nodes = write(
            "alt_nodes.csv",
            to_csv(
                ALT_NODES_HEADER,
                self.alt_nodes.iter().map(|n| {
                    vec![
                        n.id.clone(),
                        n.kind.as_str().to_string(),
                        n.position.x.to_string(),
                        n.position.y.to_string(),
                    ]
                }),
            ),
        )?;
        let transport_nodes = write(
            "transport_nodes.csv",
            to_csv(
                TRANSPORT_NODES_HEADER,
                self.transport_nodes.iter().map(|n| {
                    vec![
                        n.id.clone(),
                        n.mode.as_str().to_string(),
                        n.position.x.to_string(),
                        n.position.y.to_string(),
                    ]
                }),
            ),
        )?;
        let travel_times = write(
            "travel_times.csv",
            to_csv(
                TRAVEL_TIMES_HEADER,
                self.travel_times
                    .iter()
                    .map(|r| vec![r.dest_id.clone(), r.node_id.clone(), r.minutes.to_string()]),
            ),
        )?;
        let od = write(
            "od.csv",
            to_csv(
                OD_HEADER,
                self.od.iter().map(|r| {
                    vec![
                        r.dest_id.clone(),
                        r.node_id.clone(),
                        r.timeframe.as_str().to_string(),
                        r.volume.to_string(),
                    ]
                }),
            ),
        )?;
        let constraints = write("constraints.geojson", polygons_to_geojson(&self.constraints))?;
        let dem = match &self.dem {
            Some(d) => Some(write("dem.asc", d.to_ascii_grid())?),
            None => None,
        };

        let manifest = Manifest {
            name: self.name.clone(),
            extent: self.extent,
            facilities,
            destinations,
            constraints: vec![constraints],
            dem,
            alt_nodes,
            transport_nodes,
            travel_times: Some(travel_times),
            od,
            travel_time_provider: self.provider.clone(),
            parameters: self.parameters.clone(),
        };
        let text = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
        write("manifest.json", text + "\n")?;
        Ok(dir.join("manifest.json"))
    }
}

fn to_csv(header: &[&str], rows: impl Iterator<Item = Vec<String>>) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header).expect("in-memory write");
    for row in rows {
        w.write_record(&row).expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8 csv")
}

pub fn polygons_to_geojson(set: &PolygonSet) -> String {
    let features: Vec<serde_json::Value> = set
        .polygons
        .iter()
        .map(|p| {
            let rings: Vec<Vec<[f64; 2]>> = p
                .rings
                .iter()
                .map(|r| {
                    let mut ring: Vec<[f64; 2]> = r.iter().map(|q| [q.x, q.y]).collect();
                    if let (Some(&first), Some(&last)) = (ring.first(), ring.last()) {
                        if first != last {
                            ring.push(first);
                        }
                    }
                    ring
                })
                .collect();
            serde_json::json!({
                "type": "Feature",
                "properties": { "category": p.category.name() },
                "geometry": { "type": "Polygon", "coordinates": rings },
            })
        })
        .collect();
    let fc = serde_json::json!({ "type": "FeatureCollection", "features": features });
    serde_json::to_string_pretty(&fc).expect("geojson serializes") + "\n"
}

/// Loads and validates a scenario from its manifest path.
pub fn load_scenario(manifest_path: &Path) -> Result<ScenarioBundle, IngestError> {
    let text = fs::read_to_string(manifest_path).map_err(|source| IngestError::Io {
        path: manifest_path.to_path_buf(),
        source,
    })?;
    let manifest: Manifest = serde_json::from_str(&text).map_err(|e| IngestError::Manifest {
        path: manifest_path.to_path_buf(),
        message: e.to_string(),
    })?;
    let base = manifest_path.parent().unwrap_or_else(|| Path::new("."));
    load_manifest(&manifest, base, &manifest_path.display().to_string())
}

pub fn load_manifest(manifest: &Manifest, base: &Path, manifest_label: &str) -> Result<ScenarioBundle, IngestError> {
    let mut issues = Vec::new();
    let resolve = |p: &Path| if p.is_absolute() { p.to_path_buf() } else { base.join(p) };

    validate_manifest(manifest, manifest_label, &mut issues);

    let facilities = read_csv(&resolve(&manifest.facilities), FACILITIES_HEADER, &mut issues, |row| {
        Ok(Candidate {
            id: row.id(0)?,
            name: row.text(1),
            facility_type: row.parse_enum(2)?,
            position: row.point(3, 4)?,
            num_bus_routes: row.count(5)?,
        })
    })
    .unwrap_or_else(|e| fatal(e, &mut issues));
    let destinations = read_csv(
        &resolve(&manifest.destinations),
        DESTINATIONS_HEADER,
        &mut issues,
        |row| {
            Ok(Destination {
                id: row.id(0)?,
                name: row.text(1),
                position: row.point(2, 3)?,
            })
        },
    );
    let destinations_loaded = destinations.is_ok();
    let destinations = destinations.unwrap_or_else(|e| fatal(e, &mut issues));
    let alt_nodes = read_csv(&resolve(&manifest.alt_nodes), ALT_NODES_HEADER, &mut issues, |row| {
        Ok(AltNode {
            id: row.id(0)?,
            kind: row.parse_enum::<AltKind>(1)?,
            position: row.point(2, 3)?,
        })
    })
    .unwrap_or_else(|e| fatal(e, &mut issues));
    let transport_nodes = read_csv(
        &resolve(&manifest.transport_nodes),
        TRANSPORT_NODES_HEADER,
        &mut issues,
        |row| {
            Ok(TransportNode {
                id: row.id(0)?,
                mode: row.parse_enum::<TransportMode>(1)?,
                position: row.point(2, 3)?,
            })
        },
    );
    let nodes_loaded = transport_nodes.is_ok();
    let transport_nodes = transport_nodes.unwrap_or_else(|e| fatal(e, &mut issues));
    let travel_times = match &manifest.travel_times {
        Some(p) => read_csv(&resolve(p), TRAVEL_TIMES_HEADER, &mut issues, |row| {
            Ok(TravelTimeRecord {
                dest_id: row.id(0)?,
                node_id: row.id(1)?,
                minutes: row.nonneg(2)?,
            })
        })
        .unwrap_or_else(|e| fatal(e, &mut issues)),
        None => Vec::new(),
    };
    let od = read_csv(&resolve(&manifest.od), OD_HEADER, &mut issues, |row| {
        Ok(OdRecord {
            dest_id: row.id(0)?,
            node_id: row.id(1)?,
            timeframe: row.parse_enum::<Timeframe>(2)?,
            volume: row.nonneg(3)?,
        })
    })
    .unwrap_or_else(|e| fatal(e, &mut issues));

    let mut polygons = Vec::new();
    for path in &manifest.constraints {
        let full = resolve(path);
        match fs::read_to_string(&full) {
            Ok(text) => polygons.extend(parse_constraints(&text, &full.display().to_string(), &mut issues)),
            Err(e) => issues.push(Issue {
                file: full.display().to_string(),
                line: None,
                message: format!("cannot read: {e}"),
            }),
        }
    }

    let dem = manifest.dem.as_ref().and_then(|p| {
        let full = resolve(p);
        let label = full.display().to_string();
        match fs::File::open(&full) {
            Ok(f) => match read_ascii_grid(BufReader::new(f)) {
                Ok(d) => Some(d),
                Err(e) => {
                    issues.push(Issue {
                        file: label,
                        line: None,
                        message: e.to_string(),
                    });
                    None
                }
            },
            Err(e) => {
                issues.push(Issue {
                    file: label,
                    line: None,
                    message: format!("cannot read: {e}"),
                });
                None
            }
        }
    });

    let label = |p: &Path| resolve(p).display().to_string();
    unique_ids(
        facilities.iter().map(|(l, c)| (*l, c.id.as_str())),
        &label(&manifest.facilities),
        &mut issues,
    );
    unique_ids(
        destinations.iter().map(|(l, c)| (*l, c.id.as_str())),
        &label(&manifest.destinations),
        &mut issues,
    );
    unique_ids(
        alt_nodes.iter().map(|(l, c)| (*l, c.id.as_str())),
        &label(&manifest.alt_nodes),
        &mut issues,
    );
    unique_ids(
        transport_nodes.iter().map(|(l, c)| (*l, c.id.as_str())),
        &label(&manifest.transport_nodes),
        &mut issues,
    );

    let extent = manifest.extent;
    if extent.width_m > 0.0 && extent.height_m > 0.0 {
        for (file, rows) in [
            (
                &manifest.facilities,
                facilities
                    .iter()
                    .map(|(l, c)| (*l, &c.id, c.position))
                    .collect::<Vec<_>>(),
            ),
            (
                &manifest.destinations,
                destinations.iter().map(|(l, d)| (*l, &d.id, d.position)).collect(),
            ),
        ] {
            for (line, id, p) in rows {
                if !extent.contains(p) {
                    issues.push(Issue {
                        file: label(file),
                        line: Some(line),
                        message: format!("{id} at ({}, {}) lies outside the study extent", p.x, p.y),
                    });
                }
            }
        }
    }

    // A table that failed to load would make every reference look dangling.
    let dest_ids: Option<HashSet<&str>> =
        destinations_loaded.then(|| destinations.iter().map(|(_, d)| d.id.as_str()).collect());
    let node_ids: Option<HashSet<&str>> =
        nodes_loaded.then(|| transport_nodes.iter().map(|(_, n)| n.id.as_str()).collect());
    if let Some(p) = &manifest.travel_times {
        let file = label(p);
        let mut seen = HashSet::new();
        for (line, r) in &travel_times {
            check_refs(&file, *line, &r.dest_id, &r.node_id, &dest_ids, &node_ids, &mut issues);
            if !seen.insert((r.dest_id.as_str(), r.node_id.as_str())) {
                issues.push(Issue {
                    file: file.clone(),
                    line: Some(*line),
                    message: format!("duplicate travel time for ({}, {})", r.dest_id, r.node_id),
                });
            }
        }
    } else if manifest.travel_time_provider == ProviderConfig::File {
        issues.push(Issue {
            file: manifest_label.to_string(),
            line: None,
            message: "the file travel time provider requires `travel_times`".into(),
        });
    }
    {
        let file = label(&manifest.od);
        let mut seen = HashSet::new();
        for (line, r) in &od {
            check_refs(&file, *line, &r.dest_id, &r.node_id, &dest_ids, &node_ids, &mut issues);
            if !seen.insert((r.dest_id.as_str(), r.node_id.as_str(), r.timeframe)) {
                issues.push(Issue {
                    file: file.clone(),
                    line: Some(*line),
                    message: format!(
                        "duplicate OD volume for ({}, {}, {})",
                        r.dest_id, r.node_id, r.timeframe
                    ),
                });
            }
        }
    }

    if !issues.is_empty() {
        return Err(IngestError::Validation(issues));
    }
    Ok(ScenarioBundle {
        name: manifest.name.clone(),
        extent,
        facilities: strip(facilities),
        destinations: strip(destinations),
        constraints: PolygonSet::new(polygons),
        dem,
        alt_nodes: strip(alt_nodes),
        transport_nodes: strip(transport_nodes),
        travel_times: strip(travel_times),
        od: strip(od),
        provider: manifest.travel_time_provider.clone(),
        parameters: manifest.parameters.clone(),
    })
}

fn validate_manifest(m: &Manifest, file: &str, issues: &mut Vec<Issue>) {
    let mut bad = |message: String| {
        issues.push(Issue {
            file: file.to_string(),
            line: None,
            message,
        })
    };
    let e = m.extent;
    if !(e.origin_x.is_finite() && e.origin_y.is_finite()) {
        bad("extent origin must be finite".into());
    }
    if !(e.width_m.is_finite() && e.width_m > 0.0 && e.height_m.is_finite() && e.height_m > 0.0) {
        bad(format!("extent must be positive, got {} x {}", e.width_m, e.height_m));
    }
    let p = &m.parameters;
    if let Some(g) = p.gamma {
        if !(0.0..=1.0).contains(&g) {
            bad(format!("gamma must lie in [0, 1], got {g}"));
        }
    }
    for (name, v) in [("buffer_m", p.buffer_m), ("range_km", p.range_km), ("cell_m", p.cell_m)] {
        if let Some(v) = v {
            if !(v.is_finite() && v > 0.0) {
                bad(format!("{name} must be positive, got {v}"));
            }
        }
    }
    if let Some(t) = p.dem_threshold_m {
        if !t.is_finite() {
            bad(format!("dem_threshold_m must be finite, got {t}"));
        }
    }
    if let Some(k) = p.top_k {
        if k < 2 {
            bad(format!("top_k must be at least 2, got {k}"));
        }
    }
    if matches!(&p.timeframes, Some(t) if t.is_empty()) {
        bad("timeframes must not be empty".into());
    }
    if matches!(&p.modes, Some(t) if t.is_empty()) {
        bad("modes must not be empty".into());
    }
}

fn strip<T>(v: Vec<(u64, T)>) -> Vec<T> {
    v.into_iter().map(|(_, x)| x).collect()
}

fn fatal<T>(e: Issue, issues: &mut Vec<Issue>) -> Vec<T> {
    issues.push(e);
    Vec::new()
}

fn check_refs(
    file: &str,
    line: u64,
    dest: &str,
    node: &str,
    dest_ids: &Option<HashSet<&str>>,
    node_ids: &Option<HashSet<&str>>,
    issues: &mut Vec<Issue>,
) {
    if dest_ids.as_ref().is_some_and(|ids| !ids.contains(dest)) {
        issues.push(Issue {
            file: file.to_string(),
            line: Some(line),
            message: format!("unknown destination id {dest:?}"),
        });
    }
    if node_ids.as_ref().is_some_and(|ids| !ids.contains(node)) {
        issues.push(Issue {
            file: file.to_string(),
            line: Some(line),
            message: format!("unknown transport node id {node:?}"),
        });
    }
}

fn unique_ids<'a>(ids: impl Iterator<Item = (u64, &'a str)>, file: &str, issues: &mut Vec<Issue>) {
    let mut first: HashMap<&str, u64> = HashMap::new();
    for (line, id) in ids {
        if let Some(prev) = first.get(id) {
            issues.push(Issue {
                file: file.to_string(),
                line: Some(line),
                message: format!("duplicate id {id:?} (first seen on line {prev})"),
            });
        } else {
            first.insert(id, line);
        }
    }
}

struct Row<'a> {
    rec: &'a csv::StringRecord,
    header: &'a [&'a str],
}

impl Row<'_> {
    fn field(&self, i: usize) -> &str {
        self.rec.get(i).unwrap_or("")
    }

    fn text(&self, i: usize) -> String {
        self.field(i).to_string()
    }

    fn id(&self, i: usize) -> Result<String, String> {
        let v = self.field(i);
        if v.is_empty() {
            Err(format!("empty `{}`", self.header[i]))
        } else {
            Ok(v.to_string())
        }
    }

    fn number(&self, i: usize) -> Result<f64, String> {
        let v = self.field(i);
        match v.parse::<f64>() {
            Ok(x) if x.is_finite() => Ok(x),
            Ok(x) => Err(format!("`{}` must be finite, got {x}", self.header[i])),
            Err(_) => Err(format!("`{}` is not a number: {v:?}", self.header[i])),
        }
    }

    fn nonneg(&self, i: usize) -> Result<f64, String> {
        let x = self.number(i)?;
        if x < 0.0 {
            Err(format!("`{}` must be non-negative, got {x}", self.header[i]))
        } else {
            Ok(x)
        }
    }

    fn count(&self, i: usize) -> Result<u32, String> {
        let v = self.field(i);
        v.parse::<u32>()
            .map_err(|_| format!("`{}` must be a non-negative integer, got {v:?}", self.header[i]))
    }

    fn point(&self, ix: usize, iy: usize) -> Result<Point, String> {
        Ok(Point::new(self.number(ix)?, self.number(iy)?))
    }

    fn parse_enum<T: std::str::FromStr<Err = String>>(&self, i: usize) -> Result<T, String> {
        self.field(i).parse::<T>()
    }
}

/// Reads a CSV with a mandatory exact header. Row errors are collected into
/// `issues`; the returned rows carry their line numbers. A missing file or
/// wrong header is returned as the error.
fn read_csv<T>(
    path: &Path,
    header: &[&str],
    issues: &mut Vec<Issue>,
    parse: impl Fn(&Row<'_>) -> Result<T, String>,
) -> Result<Vec<(u64, T)>, Issue> {
    let file = path.display().to_string();
    let text = fs::read_to_string(path).map_err(|e| Issue {
        file: file.clone(),
        line: None,
        message: format!("cannot read: {e}"),
    })?;
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let found = reader.headers().map_err(|e| Issue {
        file: file.clone(),
        line: Some(1),
        message: format!("bad header: {e}"),
    })?;
    if found.iter().collect::<Vec<_>>() != header {
        return Err(Issue {
            file,
            line: Some(1),
            message: format!(
                "header must be `{}`, found `{}`",
                header.join(","),
                found.iter().collect::<Vec<_>>().join(",")
            ),
        });
    }
    let mut out = Vec::new();
    for rec in reader.records() {
        let rec = match rec {
            Ok(r) => r,
            Err(e) => {
                issues.push(Issue {
                    file: file.clone(),
                    line: e.position().map(|p| p.line()),
                    message: e.to_string(),
                });
                continue;
            }
        };
        let line = rec.position().map(|p| p.line()).unwrap_or(0);
        if rec.len() != header.len() {
            issues.push(Issue {
                file: file.clone(),
                line: Some(line),
                message: format!("expected {} fields, found {}", header.len(), rec.len()),
            });
            continue;
        }
        match parse(&Row { rec: &rec, header }) {
            Ok(v) => out.push((line, v)),
            Err(message) => issues.push(Issue {
                file: file.clone(),
                line: Some(line),
                message,
            }),
        }
    }
    Ok(out)
}

/// Parses a FeatureCollection of Polygon/MultiPolygon features carrying a
/// string `category` property. Closing vertices are dropped.
pub fn parse_constraints(text: &str, file: &str, issues: &mut Vec<Issue>) -> Vec<Polygon> {
    use geojson::{GeoJson, Value};

    let mut bad = |message: String| {
        issues.push(Issue {
            file: file.to_string(),
            line: None,
            message,
        })
    };
    let gj: GeoJson = match text.parse() {
        Ok(g) => g,
        Err(e) => {
            bad(format!("invalid GeoJSON: {e}"));
            return Vec::new();
        }
    };
    let GeoJson::FeatureCollection(fc) = gj else {
        bad("expected a FeatureCollection".into());
        return Vec::new();
    };
    let mut out = Vec::new();
    for (i, feature) in fc.features.iter().enumerate() {
        let category = match feature.property("category").and_then(|v| v.as_str()) {
            Some(s) => match s.parse::<ConstraintCategory>() {
                Ok(c) => c,
                Err(e) => {
                    bad(format!("feature {i}: {e}"));
                    continue;
                }
            },
            None => {
                bad(format!("feature {i}: missing string property `category`"));
                continue;
            }
        };
        let Some(geom) = &feature.geometry else {
            bad(format!("feature {i}: missing geometry"));
            continue;
        };
        let polys: Vec<&Vec<Vec<Vec<f64>>>> = match &geom.value {
            Value::Polygon(p) => vec![p],
            Value::MultiPolygon(mp) => mp.iter().collect(),
            other => {
                bad(format!("feature {i}: unsupported geometry {}", other.type_name()));
                continue;
            }
        };
        for rings in polys {
            let rings: Vec<Vec<Point>> = rings
                .iter()
                .map(|ring| {
                    let mut pts: Vec<Point> = ring
                        .iter()
                        .map(|c| Point::new(c[0], c.get(1).copied().unwrap_or(f64::NAN)))
                        .collect();
                    if pts.len() > 1 && pts.first() == pts.last() {
                        pts.pop();
                    }
                    pts
                })
                .collect();
            let poly = Polygon { category, rings };
            if let Err(e) = poly.validate() {
                bad(format!("feature {i}: {e}"));
                continue;
            }
            out.push(poly);
        }
    }
    out
}

/// Distinct categories present in a polygon set.
pub fn categories_present(set: &PolygonSet) -> BTreeSet<ConstraintCategory> {
    set.polygons.iter().map(|p| p.category).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn issues_for(text: &str) -> Vec<Issue> {
        let mut issues = Vec::new();
        parse_constraints(text, "c.geojson", &mut issues);
        issues
    }

    #[test]
    fn constraint_features_parse() {
        let text = r#"{"type":"FeatureCollection","features":[
            {"type":"Feature","properties":{"category":"Control Zone"},
             "geometry":{"type":"Polygon","coordinates":[[[0,0],[10,0],[10,10],[0,0]]]}},
            {"type":"Feature","properties":{"category":"Alert Area"},
             "geometry":{"type":"MultiPolygon","coordinates":[[[[0,0],[1,0],[1,1]]],[[[5,5],[6,5],[6,6]]]]}}
        ]}"#;
        let mut issues = Vec::new();
        let polys = parse_constraints(text, "c.geojson", &mut issues);
        assert!(issues.is_empty(), "{issues:?}");
        assert_eq!(polys.len(), 3);
        assert_eq!(polys[0].rings[0].len(), 3);
        assert_eq!(polys[2].category, ConstraintCategory::AlertArea);
    }

    #[test]
    fn constraint_errors_collected() {
        let text = r#"{"type":"FeatureCollection","features":[
            {"type":"Feature","properties":{"category":"Volcano"},
             "geometry":{"type":"Polygon","coordinates":[[[0,0],[10,0],[10,10]]]}},
            {"type":"Feature","properties":{},
             "geometry":{"type":"Polygon","coordinates":[[[0,0],[10,0],[10,10]]]}},
            {"type":"Feature","properties":{"category":"Danger Zone"},
             "geometry":{"type":"Point","coordinates":[0,0]}}
        ]}"#;
        assert_eq!(issues_for(text).len(), 3);
    }

    #[test]
    fn issue_display_has_line() {
        let i = Issue {
            file: "od.csv".into(),
            line: Some(4),
            message: "`volume` must be non-negative, got -1".into(),
        };
        assert_eq!(i.to_string(), "od.csv:4: `volume` must be non-negative, got -1");
    }
}
