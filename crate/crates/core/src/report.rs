//! Report files written after a run.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use serde_json::{json, Value};
use thiserror::Error;

use crate::grid::GridSpec;
use crate::pipeline::RunReport;
use crate::scoring::Quadrant;

#[derive(Debug, Error)]
#[error("cannot write {path}: {source}")]
pub struct ReportError {
    pub path: PathBuf,
    pub source: std::io::Error,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct EmitOptions {
    /// Also write one file per stage.
    pub intermediate: bool,
    /// Also write the gamma crossover table.
    pub gamma_sweep: bool,
}

/// Writes all report files into `outdir` and returns their paths in write
/// order. Only `run.json` carries a timestamp.
pub fn emit_reports(report: &RunReport, outdir: &Path, opts: EmitOptions) -> Result<Vec<PathBuf>, ReportError> {
    fs::create_dir_all(outdir).map_err(|source| ReportError {
        path: outdir.to_path_buf(),
        source,
    })?;
    let mut files: Vec<(&str, String)> = vec![
        ("ranking.csv", ranking_csv(report)),
        ("destinations.csv", destinations_csv(report)),
        ("coverage.geojson", coverage_geojson(report)),
        ("selected_cells.geojson", selected_cells_geojson(report)),
        ("quadrants.csv", quadrants_csv(report)),
        ("quadrant_plot.svg", quadrant_svg(report)),
    ];
    if opts.gamma_sweep {
        files.push(("gamma_sweep.csv", gamma_sweep_csv(report)));
    }
    if opts.intermediate {
        files.push(("stage1_constraint_sum.asc", constraint_sum_grid(report)));
        files.push(("stage1_constraint_filter.csv", exclusions_csv(report, "candidate")));
        files.push(("stage2_destination_filter.csv", exclusions_csv(report, "destination")));
        files.push(("stage3_coverage_pairs.csv", pairs_csv(report)));
        files.push(("stage4_destination_totals.csv", totals_csv(report)));
    }
    files.push(("run.json", run_json(report)));

    let mut written = Vec::with_capacity(files.len());
    for (name, body) in files {
        let path = outdir.join(name);
        fs::write(&path, body).map_err(|source| ReportError {
            path: path.clone(),
            source,
        })?;
        written.push(path);
    }
    Ok(written)
}

fn csv_string(header: &[&str], rows: impl IntoIterator<Item = Vec<String>>) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header).expect("in-memory write");
    for r in rows {
        w.write_record(&r).expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8")
}

pub fn ranking_csv(r: &RunReport) -> String {
    csv_string(
        &[
            "rank",
            "candidate_id",
            "name",
            "type",
            "num_bus",
            "coverage",
            "sum_score",
            "score_v",
            "display_score",
        ],
        r.ranking.iter().enumerate().map(|(i, c)| {
            vec![
                (i + 1).to_string(),
                c.candidate_id.clone(),
                c.name.clone(),
                c.facility_type.as_str().to_string(),
                c.num_bus.to_string(),
                c.coverage.join(";"),
                c.sum_score.to_string(),
                c.score_v.to_string(),
                format!("{:.2}", c.display_score),
            ]
        }),
    )
}

pub fn destinations_csv(r: &RunReport) -> String {
    csv_string(
        &[
            "dest_id",
            "name",
            "raw_time",
            "raw_od",
            "scaled_time",
            "scaled_od",
            "score",
            "gamma",
        ],
        r.destinations.iter().map(|d| {
            vec![
                d.dest_id.clone(),
                d.name.clone(),
                d.raw_time.to_string(),
                d.raw_od.to_string(),
                d.scaled_time.to_string(),
                d.scaled_od.to_string(),
                d.score.to_string(),
                d.gamma.to_string(),
            ]
        }),
    )
}

pub fn quadrants_csv(r: &RunReport) -> String {
    csv_string(
        &["candidate_id", "name", "num_bus", "sum_score", "score_v", "quadrant"],
        r.quadrants.assignments.iter().map(|a| {
            vec![
                a.candidate_id.clone(),
                a.name.clone(),
                a.num_bus.to_string(),
                a.sum_score.to_string(),
                a.score_v.to_string(),
                a.quadrant.as_str().to_string(),
            ]
        }),
    )
}

fn gamma_sweep_csv(r: &RunReport) -> String {
    csv_string(
        &["gamma", "dest_a", "dest_b", "leader_below", "leader_above"],
        r.gamma_crossovers.iter().map(|c| {
            vec![
                c.gamma.to_string(),
                c.dest_a.clone(),
                c.dest_b.clone(),
                c.leader_below.clone(),
                c.leader_above.clone(),
            ]
        }),
    )
}

fn exclusions_csv(r: &RunReport, which: &str) -> String {
    let list = if which == "candidate" {
        &r.candidate_exclusions
    } else {
        &r.destination_exclusions
    };
    csv_string(
        &["id", "reason"],
        list.iter().map(|e| vec![e.id.clone(), e.reason.as_str().to_string()]),
    )
}

fn pairs_csv(r: &RunReport) -> String {
    csv_string(
        &["candidate_id", "destination_id", "status", "length_m"],
        r.pairs.iter().map(|p| {
            vec![
                p.candidate_id.clone(),
                p.destination_id.clone(),
                p.status.as_str().to_string(),
                p.length_m.map(|l| l.to_string()).unwrap_or_default(),
            ]
        }),
    )
}

fn totals_csv(r: &RunReport) -> String {
    csv_string(
        &["dest_id", "node_ids", "raw_time", "raw_od"],
        r.destination_totals.iter().map(|t| {
            vec![
                t.dest_id.clone(),
                t.node_ids.join(";"),
                t.raw_time.to_string(),
                t.raw_od.to_string(),
            ]
        }),
    )
}

/// Constraint sum as an ASCII grid (north row first).
fn constraint_sum_grid(r: &RunReport) -> String {
    let g = &r.grid;
    let mut s = String::new();
    let _ = writeln!(s, "ncols {}", g.n_cols);
    let _ = writeln!(s, "nrows {}", g.n_rows);
    let _ = writeln!(s, "xllcorner {}", g.origin_x);
    let _ = writeln!(s, "yllcorner {}", g.origin_y);
    let _ = writeln!(s, "cellsize {}", g.cell_m);
    let _ = writeln!(s, "NODATA_value -9999");
    if r.constraint_sum.len() == g.n_rows * g.n_cols {
        for row in (0..g.n_rows).rev() {
            let line = &r.constraint_sum[row * g.n_cols..(row + 1) * g.n_cols];
            let mut first = true;
            for v in line {
                if !first {
                    s.push(' ');
                }
                first = false;
                let _ = write!(s, "{v}");
            }
            s.push('\n');
        }
    }
    s
}

fn feature_collection(features: Vec<Value>) -> String {
    let fc = json!({ "type": "FeatureCollection", "features": features });
    serde_json::to_string_pretty(&fc).expect("geojson serializes") + "\n"
}

pub fn coverage_geojson(r: &RunReport) -> String {
    let features = r
        .paths
        .iter()
        .map(|p| {
            let mut coords: Vec<[f64; 2]> = p.coordinates.iter().map(|q| [q.x, q.y]).collect();
            // A zero-length path still needs two positions to be a LineString.
            if coords.len() == 1 {
                coords.push(coords[0]);
            }
            json!({
                "type": "Feature",
                "properties": {
                    "candidate_id": p.candidate_id,
                    "destination_id": p.destination_id,
                    "length_m": p.length_m,
                },
                "geometry": { "type": "LineString", "coordinates": coords },
            })
        })
        .collect();
    feature_collection(features)
}

pub fn selected_cells_geojson(r: &RunReport) -> String {
    let spec: GridSpec = r.grid_spec();
    let features = r
        .selected_cells
        .iter()
        .map(|c| {
            let x0 = spec.origin_x + c.cell.col as f64 * spec.cell_size;
            let y0 = spec.origin_y + c.cell.row as f64 * spec.cell_size;
            let (x1, y1) = (x0 + spec.cell_size, y0 + spec.cell_size);
            json!({
                "type": "Feature",
                "properties": {
                    "row": c.cell.row,
                    "col": c.cell.col,
                    "facility_ids": c.facility_ids,
                    "final_candidate": c.final_candidate,
                },
                "geometry": {
                    "type": "Polygon",
                    "coordinates": [[[x0, y0], [x1, y0], [x1, y1], [x0, y1], [x0, y0]]],
                },
            })
        })
        .collect();
    feature_collection(features)
}

fn run_json(r: &RunReport) -> String {
    let generated = SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0);
    let v = json!({
        "tool": "vertisite",
        "version": env!("CARGO_PKG_VERSION"),
        "generated_at_unix": generated,
        "content_hash": r.content_hash,
        "scenario": r.scenario,
        "config": r.config,
        "grid": r.grid,
        "candidate_stages": r.candidate_stages,
        "destination_stages": r.destination_stages,
        "candidate_exclusions": r.candidate_exclusions,
        "destination_exclusions": r.destination_exclusions,
        "destinations": r.destinations,
        "quadrants": {
            "top_k": r.quadrants.top_k,
            "mean_num_bus": r.quadrants.mean_num_bus,
            "mean_sum_score": r.quadrants.mean_sum_score,
        },
        "gamma_crossovers": r.gamma_crossovers,
    });
    serde_json::to_string_pretty(&v).expect("run.json serializes") + "\n"
}

fn xml_escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
        .replace('"', "&quot;")
}

/// Scatter of the top-k candidates: bus routes against summed destination
/// score, split at the subset means.
pub fn quadrant_svg(r: &RunReport) -> String {
    const W: f64 = 720.0;
    const H: f64 = 540.0;
    const L: f64 = 70.0;
    const R: f64 = 30.0;
    const T: f64 = 40.0;
    const B: f64 = 60.0;
    let q = &r.quadrants;
    let xmax = q
        .assignments
        .iter()
        .map(|a| f64::from(a.num_bus))
        .fold(0.0, f64::max)
        .max(1.0)
        * 1.1;
    let ymax = q.assignments.iter().map(|a| a.sum_score).fold(0.0, f64::max).max(1e-9) * 1.1;
    let px = |x: f64| L + x / xmax * (W - L - R);
    let py = |y: f64| H - B - y / ymax * (H - T - B);

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}" font-family="sans-serif" font-size="11">"#
    );
    let _ = writeln!(s, r#"<rect width="{W}" height="{H}" fill="white"/>"#);
    let _ = writeln!(
        s,
        r#"<text x="{:.1}" y="22" text-anchor="middle" font-size="14">Top {} candidates</text>"#,
        W / 2.0,
        q.top_k
    );
    let (x0, y0, x1, y1) = (px(0.0), py(0.0), px(xmax), py(ymax));
    let _ = writeln!(
        s,
        r#"<line x1="{x0:.1}" y1="{y0:.1}" x2="{x1:.1}" y2="{y0:.1}" stroke="black"/><line x1="{x0:.1}" y1="{y0:.1}" x2="{x0:.1}" y2="{y1:.1}" stroke="black"/>"#
    );
    for i in 0..=5 {
        let xv = xmax * i as f64 / 5.0;
        let yv = ymax * i as f64 / 5.0;
        let _ = writeln!(
            s,
            r#"<text x="{:.1}" y="{:.1}" text-anchor="middle">{:.0}</text><text x="{:.1}" y="{:.1}" text-anchor="end">{:.3}</text>"#,
            px(xv),
            y0 + 16.0,
            xv,
            x0 - 6.0,
            py(yv) + 4.0,
            yv
        );
    }
    let _ = writeln!(
        s,
        r#"<text x="{:.1}" y="{:.1}" text-anchor="middle">Number of bus routes</text>"#,
        (x0 + x1) / 2.0,
        H - 18.0
    );
    let _ = writeln!(
        s,
        r#"<text x="18" y="{:.1}" text-anchor="middle" transform="rotate(-90 18 {:.1})">Sum of destination scores</text>"#,
        (y0 + y1) / 2.0,
        (y0 + y1) / 2.0
    );
    if !q.assignments.is_empty() {
        let (mx, my) = (px(q.mean_num_bus), py(q.mean_sum_score));
        let _ = writeln!(
            s,
            r#"<line x1="{mx:.1}" y1="{y0:.1}" x2="{mx:.1}" y2="{y1:.1}" stroke="gray" stroke-dasharray="4 3"/><line x1="{x0:.1}" y1="{my:.1}" x2="{x1:.1}" y2="{my:.1}" stroke="gray" stroke-dasharray="4 3"/>"#
        );
        for (label, x, y) in [
            ("I", x1 - 12.0, y1 + 16.0),
            ("II", x0 + 12.0, y1 + 16.0),
            ("III", x0 + 12.0, y0 - 8.0),
            ("IV", x1 - 12.0, y0 - 8.0),
        ] {
            let _ = writeln!(
                s,
                r#"<text x="{x:.1}" y="{y:.1}" fill="gray" font-size="14" text-anchor="middle">{label}</text>"#
            );
        }
    }
    for a in &q.assignments {
        let color = match a.quadrant {
            Quadrant::I => "#1b9e77",
            Quadrant::II => "#d95f02",
            Quadrant::III => "#7570b3",
            Quadrant::IV => "#e7298a",
        };
        let (cx, cy) = (px(f64::from(a.num_bus)), py(a.sum_score));
        let _ = writeln!(
            s,
            r#"<circle cx="{cx:.1}" cy="{cy:.1}" r="4" fill="{color}"><title>{} ({})</title></circle><text x="{:.1}" y="{:.1}">{}</text>"#,
            xml_escape(&a.name),
            a.quadrant.as_str(),
            cx + 6.0,
            cy - 6.0,
            xml_escape(&a.name)
        );
    }
    s.push_str("</svg>\n");
    s
}
