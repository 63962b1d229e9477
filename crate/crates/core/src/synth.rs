//! Seeded synthetic scenarios for property tests and desk-scale runs.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::alt_filter::{AltKind, AltNode, Candidate, Destination, FacilityType};
use crate::dem::DemRaster;
use crate::geom::Point;
use crate::grid::ConstraintCategory;
use crate::ingest::{Extent, Parameters, ProviderConfig, ScenarioBundle};
use crate::raster::{Polygon, PolygonSet};
use crate::scoring::{OdRecord, Timeframe, TransportMode, TransportNode, TravelTimeRecord};

#[derive(Clone, Debug, PartialEq)]
pub struct SynthConfig {
    pub n_cols: usize,
    pub n_rows: usize,
    pub cell_m: f64,
    pub n_facilities: usize,
    pub n_destinations: usize,
    /// Polygons per airspace category (terrain comes from the DEM).
    pub polygons_per_category: usize,
    /// Share of facilities that get a taxi road or subway node nearby.
    pub alt_share: f64,
    pub dem_cell_m: f64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig {
            n_cols: 1500,
            n_rows: 1500,
            cell_m: 100.0,
            n_facilities: 150,
            n_destinations: 10,
            polygons_per_category: 3,
            alt_share: 0.8,
            dem_cell_m: 500.0,
        }
    }
}

impl SynthConfig {
    /// A small scenario that runs in well under a second.
    pub fn small() -> Self {
        SynthConfig {
            n_cols: 200,
            n_rows: 200,
            cell_m: 100.0,
            n_facilities: 30,
            n_destinations: 5,
            polygons_per_category: 1,
            alt_share: 0.7,
            dem_cell_m: 500.0,
        }
    }
}

fn circle(rng: &mut ChaCha8Rng, center: Point, radius: f64) -> Vec<Point> {
    let n = rng.gen_range(6..=14);
    (0..n)
        .map(|i| {
            let a = std::f64::consts::TAU * i as f64 / n as f64;
            let r = radius * rng.gen_range(0.7..1.0);
            Point::new(center.x + r * a.cos(), center.y + r * a.sin())
        })
        .collect()
}

pub fn generate(seed: u64, cfg: &SynthConfig) -> ScenarioBundle {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let width = cfg.n_cols as f64 * cfg.cell_m;
    let height = cfg.n_rows as f64 * cfg.cell_m;
    let extent = Extent {
        origin_x: 0.0,
        origin_y: 0.0,
        width_m: width,
        height_m: height,
    };
    let point = |rng: &mut ChaCha8Rng| Point::new(rng.gen_range(0.0..width), rng.gen_range(0.0..height));
    let span = width.min(height);

    let mut polygons = Vec::new();
    for cat in ConstraintCategory::ALL {
        if cat == ConstraintCategory::TerrainObstacles {
            continue;
        }
        for _ in 0..cfg.polygons_per_category {
            let c = point(&mut rng);
            let r = span * rng.gen_range(0.01..0.04);
            polygons.push(Polygon::new(cat, circle(&mut rng, c, r)));
        }
    }
    // A small terrain polygon too, so the category is exercised without a DEM.
    let c = point(&mut rng);
    polygons.push(Polygon::new(
        ConstraintCategory::TerrainObstacles,
        circle(&mut rng, c, span * 0.01),
    ));

    let dem_cols = (width / cfg.dem_cell_m).ceil() as usize;
    let dem_rows = (height / cfg.dem_cell_m).ceil() as usize;
    let hills: Vec<(Point, f64, f64)> = (0..4)
        .map(|_| {
            (
                point(&mut rng),
                rng.gen_range(200.0..600.0),
                span * rng.gen_range(0.02..0.06),
            )
        })
        .collect();
    let mut values = Vec::with_capacity(dem_cols * dem_rows);
    for r in 0..dem_rows {
        let y = height - (r as f64 + 0.5) * cfg.dem_cell_m;
        for c in 0..dem_cols {
            let x = (c as f64 + 0.5) * cfg.dem_cell_m;
            let p = Point::new(x, y);
            let z: f64 = 40.0
                + hills
                    .iter()
                    .map(|(h, amp, s)| amp * (-p.distance_squared(*h) / (2.0 * s * s)).exp())
                    .sum::<f64>();
            values.push((z * 10.0).round() / 10.0);
        }
    }
    let dem = DemRaster {
        ncols: dem_cols,
        nrows: dem_rows,
        xll: 0.0,
        yll: 0.0,
        cell_size: cfg.dem_cell_m,
        nodata: -9999.0,
        values,
    };

    let types = [FacilityType::TollGate, FacilityType::RestArea, FacilityType::ExHub];
    let facilities: Vec<Candidate> = (0..cfg.n_facilities)
        .map(|i| Candidate {
            id: format!("F{:04}", i + 1),
            name: format!("Facility {}", i + 1),
            facility_type: types[rng.gen_range(0..types.len())],
            position: point(&mut rng),
            num_bus_routes: rng.gen_range(0..300),
        })
        .collect();
    let destinations: Vec<Destination> = (0..cfg.n_destinations)
        .map(|i| Destination {
            id: format!("D{:02}", i + 1),
            name: format!("Industrial Park {}", i + 1),
            position: point(&mut rng),
        })
        .collect();

    let mut alt_nodes = Vec::new();
    let jitter = |rng: &mut ChaCha8Rng, p: Point, r: f64| {
        let a = rng.gen_range(0.0..std::f64::consts::TAU);
        let d = rng.gen_range(0.0..r);
        Point::new(
            (p.x + d * a.cos()).clamp(0.0, width),
            (p.y + d * a.sin()).clamp(0.0, height),
        )
    };
    let sites: Vec<Point> = facilities
        .iter()
        .map(|f| f.position)
        .chain(destinations.iter().map(|d| d.position))
        .collect();
    for p in sites {
        if rng.gen_bool(cfg.alt_share) {
            let kind = if rng.gen_bool(0.5) {
                AltKind::TaxiRoad
            } else {
                AltKind::Subway
            };
            let pos = jitter(&mut rng, p, 400.0);
            alt_nodes.push(AltNode {
                id: format!("A{:04}", alt_nodes.len() + 1),
                kind,
                position: pos,
            });
        }
    }
    for _ in 0..cfg.n_facilities / 2 {
        let pos = point(&mut rng);
        alt_nodes.push(AltNode {
            id: format!("A{:04}", alt_nodes.len() + 1),
            kind: AltKind::TaxiRoad,
            position: pos,
        });
    }

    let mut transport_nodes = Vec::new();
    for d in &destinations {
        for mode in TransportMode::ALL {
            let pos = jitter(&mut rng, d.position, 3000.0);
            transport_nodes.push(TransportNode {
                id: format!("N{:04}", transport_nodes.len() + 1),
                mode,
                position: pos,
            });
        }
    }

    let mut travel_times = Vec::new();
    let mut od = Vec::new();
    for d in &destinations {
        for n in &transport_nodes {
            let km = n.position.distance(d.position) / 1000.0;
            travel_times.push(TravelTimeRecord {
                dest_id: d.id.clone(),
                node_id: n.id.clone(),
                minutes: ((5.0 + km * rng.gen_range(1.5..3.0)) * 1000.0).round() / 1000.0,
            });
            for tf in Timeframe::ALL {
                od.push(OdRecord {
                    dest_id: d.id.clone(),
                    node_id: n.id.clone(),
                    timeframe: tf,
                    volume: f64::from(rng.gen_range(0u32..1500)),
                });
            }
        }
    }

    ScenarioBundle {
        name: format!("synthetic-{seed}"),
        extent,
        facilities,
        destinations,
        constraints: PolygonSet::new(polygons),
        dem: Some(dem),
        alt_nodes,
        transport_nodes,
        travel_times,
        od,
        provider: ProviderConfig::File,
        parameters: Parameters {
            cell_m: Some(cfg.cell_m),
            ..Default::default()
        },
    }
}
