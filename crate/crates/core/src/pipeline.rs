//! End-to-end run: grid build, constraint filter, alternative-transport
//! filter, coverage, destination scores, transfer scores, ranking, quadrants.

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::alt_filter::{
    filter_alternatives, AltFilterError, Candidate, Destination, Exclusion, ExclusionReason, DEFAULT_BUFFER_M,
};
use crate::geom::Point;
use crate::grid::{
    rasterize_points, select, stack_constraints, BinaryLayer, Cell, ConstraintCategory, ConstraintStack, GridError,
    GridSpec, SelectedLayer,
};
use crate::ingest::{Parameters, ScenarioBundle};
use crate::provider::{ProviderError, TravelTimeProvider};
use crate::raster::rasterize_polygons;
use crate::reachability::{compute_coverage, NavGrid, PairOutcome, ReachError, DEFAULT_RANGE_KM};
use crate::scoring::{
    aggregate_destination, classify_quadrants, gamma_crossovers, rank_candidates, score_destinations, transfer_score,
    DestinationScore, Gamma, GammaCrossover, OdTable, QuadrantReport, RawTotals, ScoredCandidate, ScoringError,
    Timeframe, TransportMode,
};

pub const DEFAULT_CELL_M: f64 = 100.0;
pub const DEFAULT_DEM_THRESHOLD_M: f64 = 300.0;
pub const DEFAULT_TOP_K: usize = 10;

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("grid build: {0}")]
    Grid(#[from] GridError),
    #[error("alternative-transport filter: {0}")]
    AltFilter(#[from] AltFilterError),
    #[error("coverage: {0}")]
    Reach(#[from] ReachError),
    #[error("destination scoring: {0}")]
    Scoring(#[from] ScoringError),
    #[error("travel time provider: {0}")]
    Provider(#[from] ProviderError),
}

impl PipelineError {
    /// True for problems in the inputs or configuration, as opposed to
    /// runtime failures such as an unreachable travel-time service.
    pub fn is_validation(&self) -> bool {
        match self {
            PipelineError::Config(_) | PipelineError::Grid(_) | PipelineError::AltFilter(_) => true,
            PipelineError::Reach(_) => true,
            PipelineError::Scoring(ScoringError::Provider { .. }) => false,
            PipelineError::Scoring(_) => true,
            PipelineError::Provider(ProviderError::MissingPair { .. }) => true,
            PipelineError::Provider(_) => false,
        }
    }
}

/// Fully resolved run parameters.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub gamma: Gamma,
    pub buffer_m: f64,
    pub range_km: f64,
    pub cell_m: f64,
    pub dem_threshold_m: f64,
    /// Sorted, without repeats.
    pub timeframes: Vec<Timeframe>,
    /// Sorted, without repeats.
    pub modes: Vec<TransportMode>,
    pub top_k: usize,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            gamma: Gamma::default(),
            buffer_m: DEFAULT_BUFFER_M,
            range_km: DEFAULT_RANGE_KM,
            cell_m: DEFAULT_CELL_M,
            dem_threshold_m: DEFAULT_DEM_THRESHOLD_M,
            timeframes: Timeframe::ALL.to_vec(),
            modes: TransportMode::ALL.to_vec(),
            top_k: DEFAULT_TOP_K,
        }
    }
}

impl RunConfig {
    /// Defaults, overridden by the manifest, overridden by the command line.
    pub fn resolve(manifest: &Parameters, cli: &Parameters) -> Result<Self, PipelineError> {
        let mut c = RunConfig::default();
        c.apply(manifest)?;
        c.apply(cli)?;
        Ok(c)
    }

    pub fn apply(&mut self, p: &Parameters) -> Result<(), PipelineError> {
        if let Some(g) = p.gamma {
            self.gamma = Gamma::new(g).map_err(|e| PipelineError::Config(e.to_string()))?;
        }
        if let Some(v) = p.buffer_m {
            self.buffer_m = positive("buffer_m", v)?;
        }
        if let Some(v) = p.range_km {
            self.range_km = positive("range_km", v)?;
        }
        if let Some(v) = p.cell_m {
            self.cell_m = positive("cell_m", v)?;
        }
        if let Some(v) = p.dem_threshold_m {
            if !v.is_finite() {
                return Err(PipelineError::Config(format!(
                    "dem_threshold_m must be finite, got {v}"
                )));
            }
            self.dem_threshold_m = v;
        }
        if let Some(t) = &p.timeframes {
            if t.is_empty() {
                return Err(PipelineError::Config("timeframes must not be empty".into()));
            }
            let mut t = t.clone();
            t.sort();
            t.dedup();
            self.timeframes = t;
        }
        if let Some(m) = &p.modes {
            if m.is_empty() {
                return Err(PipelineError::Config("modes must not be empty".into()));
            }
            let mut m = m.clone();
            m.sort();
            m.dedup();
            self.modes = m;
        }
        if let Some(k) = p.top_k {
            if k < 2 {
                return Err(PipelineError::Config(format!("top_k must be at least 2, got {k}")));
            }
            self.top_k = k;
        }
        Ok(())
    }
}

fn positive(name: &str, v: f64) -> Result<f64, PipelineError> {
    if v.is_finite() && v > 0.0 {
        Ok(v)
    } else {
        Err(PipelineError::Config(format!("{name} must be positive, got {v}")))
    }
}

/// Sites entering and leaving one filtering stage.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct StageCount {
    pub stage: String,
    pub input: usize,
    pub output: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridSummary {
    pub n_rows: usize,
    pub n_cols: usize,
    pub cell_m: f64,
    pub origin_x: f64,
    pub origin_y: f64,
    /// Cells marked per category, in canonical category order.
    pub category_cells: Vec<(ConstraintCategory, usize)>,
    pub constrained_cells: usize,
    pub facility_cells: usize,
    pub selected_cells: usize,
}

/// A facility cell that passed the constraint filter.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SelectedCell {
    pub cell: Cell,
    pub center: Point,
    /// Facilities located in the cell, sorted.
    pub facility_ids: Vec<String>,
    /// Whether any of them also passed the alternative-transport filter.
    pub final_candidate: bool,
}

/// Path of one reached (candidate, destination) pair, as cell centers.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CoveragePath {
    pub candidate_id: String,
    pub destination_id: String,
    pub length_m: f64,
    pub coordinates: Vec<Point>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub scenario: String,
    pub config: RunConfig,
    pub grid: GridSummary,
    pub candidate_stages: Vec<StageCount>,
    pub destination_stages: Vec<StageCount>,
    pub candidate_exclusions: Vec<Exclusion>,
    pub destination_exclusions: Vec<Exclusion>,
    pub selected_cells: Vec<SelectedCell>,
    pub destination_totals: Vec<RawTotals>,
    pub destinations: Vec<DestinationScore>,
    pub ranking: Vec<ScoredCandidate>,
    pub pairs: Vec<PairOutcome>,
    pub paths: Vec<CoveragePath>,
    pub quadrants: QuadrantReport,
    pub gamma_crossovers: Vec<GammaCrossover>,
    /// Row-major constraint sum, row 0 south. Not serialized.
    #[serde(skip)]
    pub constraint_sum: Vec<u8>,
    /// SHA-256 over every other serialized field.
    pub content_hash: String,
}

impl RunReport {
    pub fn compute_hash(&self) -> String {
        let mut copy = self.clone();
        copy.content_hash = String::new();
        let bytes = serde_json::to_vec(&copy).expect("report serializes");
        let mut h = Sha256::new();
        h.update(&bytes);
        h.update(&copy.constraint_sum);
        let digest = h.finalize();
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }

    pub fn grid_spec(&self) -> GridSpec {
        GridSpec {
            origin_x: self.grid.origin_x,
            origin_y: self.grid.origin_y,
            cell_size: self.grid.cell_m,
            n_cols: self.grid.n_cols,
            n_rows: self.grid.n_rows,
        }
    }
}

/// Builds the eight category layers. Terrain combines polygons of that
/// category with DEM cells above the threshold.
pub fn build_constraints(
    bundle: &ScenarioBundle,
    spec: GridSpec,
    dem_threshold_m: f64,
) -> Result<ConstraintStack, GridError> {
    let layers = ConstraintCategory::ALL
        .par_iter()
        .map(|&cat| {
            let mut layer = rasterize_polygons(spec, &bundle.constraints, cat)?;
            if cat == ConstraintCategory::TerrainObstacles {
                if let Some(dem) = &bundle.dem {
                    let resampled = dem.resample_to(&spec);
                    let terrain = crate::dem::rasterize_dem(spec, &resampled, dem_threshold_m)?;
                    layer.union_with(&terrain)?;
                }
            }
            Ok((cat, layer))
        })
        .collect::<Result<Vec<_>, GridError>>()?;
    stack_constraints(layers)
}

fn grid_for(bundle: &ScenarioBundle, cell_m: f64) -> Result<GridSpec, GridError> {
    let e = bundle.extent;
    GridSpec::covering(e.origin_x, e.origin_y, e.width_m, e.height_m, cell_m)
}

fn select_sites(
    spec: GridSpec,
    positions: &[Point],
    stack: &ConstraintStack,
) -> Result<(BinaryLayer, SelectedLayer), GridError> {
    let f = rasterize_points(spec, positions)?;
    let s = select(&f, stack)?;
    Ok((f, s))
}

/// Runs every stage with the travel-time provider configured in the bundle.
pub fn run_pipeline(bundle: &ScenarioBundle, config: &RunConfig) -> Result<RunReport, PipelineError> {
    let provider = bundle.travel_time_provider()?;
    run_pipeline_with(bundle, config, provider.as_ref())
}

pub fn run_pipeline_with(
    bundle: &ScenarioBundle,
    config: &RunConfig,
    provider: &dyn TravelTimeProvider,
) -> Result<RunReport, PipelineError> {
    let spec = grid_for(bundle, config.cell_m)?;
    log::info!("grid {} x {} at {} m", spec.n_cols, spec.n_rows, spec.cell_size);
    let stack = build_constraints(bundle, spec, config.dem_threshold_m)?;

    let positions: Vec<Point> = bundle.facilities.iter().map(|c| c.position).collect();
    let (facility_layer, selected) = select_sites(spec, &positions, &stack)?;
    let dest_positions: Vec<Point> = bundle.destinations.iter().map(|d| d.position).collect();
    let (_, dest_selected) = select_sites(spec, &dest_positions, &stack)?;

    let cand_filter = filter_alternatives(&bundle.facilities, &selected, &bundle.alt_nodes, config.buffer_m)?;
    let dest_filter = filter_alternatives(&bundle.destinations, &dest_selected, &bundle.alt_nodes, config.buffer_m)?;
    let mut candidates: Vec<Candidate> = cand_filter.kept.clone();
    let mut destinations: Vec<Destination> = dest_filter.kept.clone();
    candidates.sort_by(|a, b| a.id.cmp(&b.id));
    destinations.sort_by(|a, b| a.id.cmp(&b.id));
    log::info!(
        "candidates {} -> {}, destinations {} -> {}",
        bundle.facilities.len(),
        candidates.len(),
        bundle.destinations.len(),
        destinations.len()
    );

    let nav = NavGrid::from_stack(&stack);
    let coverage = compute_coverage(&nav, &candidates, &destinations, config.range_km)?;

    let ods = OdTable::new(&bundle.od);
    let results: Vec<Result<RawTotals, ScoringError>> = destinations
        .par_iter()
        .map(|d| {
            aggregate_destination(
                d,
                &bundle.transport_nodes,
                &config.modes,
                provider,
                &ods,
                &config.timeframes,
            )
        })
        .collect();
    let mut totals = Vec::with_capacity(results.len());
    let mut gaps = Vec::new();
    for r in results {
        match r {
            Ok(t) => totals.push(t),
            Err(ScoringError::MissingRecords(g)) => gaps.extend(g),
            Err(e) => return Err(e.into()),
        }
    }
    if !gaps.is_empty() {
        return Err(ScoringError::MissingRecords(gaps).into());
    }
    let names: BTreeMap<String, String> = destinations.iter().map(|d| (d.id.clone(), d.name.clone())).collect();
    let dest_scores = score_destinations(&totals, &names, config.gamma)?;
    let score_by_id: BTreeMap<String, f64> = dest_scores.iter().map(|d| (d.dest_id.clone(), d.score)).collect();

    // Every candidate whose coverage was computed enters the final table,
    // including those with empty coverage.
    let scored = candidates
        .iter()
        .map(|c| {
            let ids = coverage.get(&c.id).map(|cc| cc.destination_ids()).unwrap_or_default();
            transfer_score(c, &ids, &score_by_id)
        })
        .collect::<Result<Vec<_>, _>>()?;
    let ranking = rank_candidates(scored);
    let quadrants = classify_quadrants(&ranking, config.top_k)?;
    let crossovers = gamma_crossovers(&dest_scores);

    let n_constrained_c = cand_filter.count_excluded(ExclusionReason::Constrained);
    let n_constrained_d = dest_filter.count_excluded(ExclusionReason::Constrained);
    let candidate_stages = vec![
        stage(
            "constraint_filter",
            bundle.facilities.len(),
            bundle.facilities.len() - n_constrained_c,
        ),
        stage(
            "alternative_filter",
            bundle.facilities.len() - n_constrained_c,
            candidates.len(),
        ),
        stage("coverage", candidates.len(), coverage.candidates.len()),
        stage("ranking", coverage.candidates.len(), ranking.len()),
    ];
    let destination_stages = vec![
        stage(
            "constraint_filter",
            bundle.destinations.len(),
            bundle.destinations.len() - n_constrained_d,
        ),
        stage(
            "alternative_filter",
            bundle.destinations.len() - n_constrained_d,
            destinations.len(),
        ),
        stage("scoring", destinations.len(), dest_scores.len()),
    ];

    let selected_cells = selected_cell_table(&spec, &selected, &bundle.facilities, &candidates);
    let paths = coverage
        .candidates
        .iter()
        .flat_map(|cc| {
            cc.reached.iter().map(|r| CoveragePath {
                candidate_id: cc.candidate_id.clone(),
                destination_id: r.destination_id.clone(),
                length_m: r.length_m,
                coordinates: r.waypoints.iter().map(|&c| spec.cell_center(c)).collect(),
            })
        })
        .collect();

    let category_cells = ConstraintCategory::ALL
        .iter()
        .map(|&c| (c, stack.layer(c).count_ones()))
        .collect();
    let grid = GridSummary {
        n_rows: spec.n_rows,
        n_cols: spec.n_cols,
        cell_m: spec.cell_size,
        origin_x: spec.origin_x,
        origin_y: spec.origin_y,
        category_cells,
        constrained_cells: stack.sum().iter().filter(|&&s| s > 0).count(),
        facility_cells: facility_layer.count_ones(),
        selected_cells: selected.count_ones(),
    };

    let mut report = RunReport {
        scenario: bundle.name.clone(),
        config: config.clone(),
        grid,
        candidate_stages,
        destination_stages,
        candidate_exclusions: sorted_exclusions(cand_filter.excluded),
        destination_exclusions: sorted_exclusions(dest_filter.excluded),
        selected_cells,
        destination_totals: totals,
        destinations: dest_scores,
        ranking,
        pairs: coverage.pairs,
        paths,
        quadrants,
        gamma_crossovers: crossovers,
        constraint_sum: stack.sum().to_vec(),
        content_hash: String::new(),
    };
    report.content_hash = report.compute_hash();
    Ok(report)
}

fn stage(name: &str, input: usize, output: usize) -> StageCount {
    StageCount {
        stage: name.to_string(),
        input,
        output,
    }
}

fn sorted_exclusions(mut v: Vec<Exclusion>) -> Vec<Exclusion> {
    v.sort_by(|a, b| a.id.cmp(&b.id));
    v
}

fn selected_cell_table(
    spec: &GridSpec,
    selected: &SelectedLayer,
    facilities: &[Candidate],
    finals: &[Candidate],
) -> Vec<SelectedCell> {
    let mut by_cell: BTreeMap<usize, Vec<String>> = BTreeMap::new();
    for f in facilities {
        if let Some(cell) = spec.cell_of(f.position) {
            if selected.get(cell) {
                by_cell.entry(spec.index(cell)).or_default().push(f.id.clone());
            }
        }
    }
    let final_ids: std::collections::HashSet<&str> = finals.iter().map(|c| c.id.as_str()).collect();
    by_cell
        .into_iter()
        .map(|(i, mut ids)| {
            ids.sort();
            let cell = spec.cell_at(i);
            SelectedCell {
                cell,
                center: spec.cell_center(cell),
                final_candidate: ids.iter().any(|id| final_ids.contains(id.as_str())),
                facility_ids: ids,
            }
        })
        .collect()
}
