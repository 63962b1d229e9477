//! Destination desirability and candidate transfer-effectiveness scores.

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::alt_filter::{Candidate, Destination, FacilityType};
use crate::geom::Point;
use crate::provider::{ProviderError, TravelQuery, TravelTimeProvider};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ScoringError {
    #[error("gamma must lie in [0, 1], got {0}")]
    InvalidGamma(f64),
    #[error("cannot scale an empty list")]
    EmptyInput,
    #[error("non-finite value {0} in scaling input")]
    NonFinite(f64),
    #[error("destination {dest}: no transport node of mode {mode}")]
    NoNodeForMode { dest: String, mode: TransportMode },
    #[error("missing records: {}", format_gaps(.0))]
    MissingRecords(Vec<RecordGap>),
    #[error("destination {dest}: travel time provider failed: {source}")]
    Provider { dest: String, source: ProviderError },
    #[error("candidate {candidate}: destination {destination} has no score")]
    MissingScore { candidate: String, destination: String },
    #[error("top_k must be at least 2, got {0}")]
    InvalidTopK(usize),
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RecordGap {
    pub dest_id: String,
    pub node_id: String,
    pub kind: GapKind,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum GapKind {
    TravelTime,
    OdVolume,
}

fn format_gaps(gaps: &[RecordGap]) -> String {
    gaps.iter()
        .map(|g| {
            let what = match g.kind {
                GapKind::TravelTime => "travel time",
                GapKind::OdVolume => "OD volume",
            };
            format!("{what} for ({}, {})", g.dest_id, g.node_id)
        })
        .collect::<Vec<_>>()
        .join("; ")
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum TransportMode {
    Bus,
    Rail,
    Subway,
}

impl TransportMode {
    pub const ALL: [TransportMode; 3] = [TransportMode::Bus, TransportMode::Rail, TransportMode::Subway];

    pub fn as_str(self) -> &'static str {
        match self {
            TransportMode::Bus => "BUS",
            TransportMode::Rail => "RAIL",
            TransportMode::Subway => "SUBWAY",
        }
    }
}

impl fmt::Display for TransportMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for TransportMode {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        TransportMode::ALL
            .into_iter()
            .find(|m| m.as_str() == s)
            .ok_or_else(|| format!("unknown transport mode {s:?}"))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Timeframe {
    MorningPeak,
    EveningPeak,
    OffPeak,
}

impl Timeframe {
    pub const ALL: [Timeframe; 3] = [Timeframe::MorningPeak, Timeframe::EveningPeak, Timeframe::OffPeak];

    pub fn as_str(self) -> &'static str {
        match self {
            Timeframe::MorningPeak => "MORNING_PEAK",
            Timeframe::EveningPeak => "EVENING_PEAK",
            Timeframe::OffPeak => "OFF_PEAK",
        }
    }
}

impl fmt::Display for Timeframe {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Timeframe {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Timeframe::ALL
            .into_iter()
            .find(|t| t.as_str() == s)
            .ok_or_else(|| format!("unknown timeframe {s:?}"))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TransportNode {
    pub id: String,
    pub mode: TransportMode,
    pub position: Point,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TravelTimeRecord {
    pub dest_id: String,
    pub node_id: String,
    pub minutes: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OdRecord {
    pub dest_id: String,
    pub node_id: String,
    pub timeframe: Timeframe,
    pub volume: f64,
}

/// Weight on scaled travel time; the OD weight is `1 - gamma`.
#[derive(Clone, Copy, Debug, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(try_from = "f64", into = "f64")]
pub struct Gamma(f64);

impl Gamma {
    pub fn new(value: f64) -> Result<Self, ScoringError> {
        if (0.0..=1.0).contains(&value) {
            Ok(Gamma(value))
        } else {
            Err(ScoringError::InvalidGamma(value))
        }
    }

    pub fn value(self) -> f64 {
        self.0
    }
}

impl Default for Gamma {
    fn default() -> Self {
        Gamma(0.5)
    }
}

impl TryFrom<f64> for Gamma {
    type Error = ScoringError;
    fn try_from(v: f64) -> Result<Self, Self::Error> {
        Gamma::new(v)
    }
}

impl From<Gamma> for f64 {
    fn from(g: Gamma) -> f64 {
        g.0
    }
}

/// OD records grouped by (destination, node), in input order.
#[derive(Clone, Debug, Default)]
pub struct OdTable {
    by_pair: HashMap<(String, String), Vec<(Timeframe, f64)>>,
}

impl OdTable {
    pub fn new(records: &[OdRecord]) -> Self {
        let mut by_pair: HashMap<(String, String), Vec<(Timeframe, f64)>> = HashMap::new();
        for r in records {
            by_pair
                .entry((r.dest_id.clone(), r.node_id.clone()))
                .or_default()
                .push((r.timeframe, r.volume));
        }
        OdTable { by_pair }
    }

    fn volumes(&self, dest: &str, node: &str) -> Option<&[(Timeframe, f64)]> {
        self.by_pair
            .get(&(dest.to_string(), node.to_string()))
            .map(Vec::as_slice)
    }
}

/// Raw per-destination totals before scaling.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RawTotals {
    pub dest_id: String,
    pub node_ids: Vec<String>,
    pub raw_time: f64,
    pub raw_od: f64,
}

/// Nearest node of each mode to `position` (Euclidean; ties broken by id).
pub fn nearest_nodes<'a>(
    dest_id: &str,
    position: Point,
    nodes: &'a [TransportNode],
    modes: &[TransportMode],
) -> Result<Vec<&'a TransportNode>, ScoringError> {
    modes
        .iter()
        .map(|&mode| {
            nodes
                .iter()
                .filter(|n| n.mode == mode)
                .min_by(|a, b| {
                    a.position
                        .distance_squared(position)
                        .total_cmp(&b.position.distance_squared(position))
                        .then_with(|| a.id.cmp(&b.id))
                })
                .ok_or_else(|| ScoringError::NoNodeForMode {
                    dest: dest_id.to_string(),
                    mode,
                })
        })
        .collect()
}

/// Sums travel time and OD volume over the destination's nearest node of
/// each configured mode. OD volume is summed over `timeframes`.
pub fn aggregate_destination(
    dest: &Destination,
    nodes: &[TransportNode],
    modes: &[TransportMode],
    times: &dyn TravelTimeProvider,
    ods: &OdTable,
    timeframes: &[Timeframe],
) -> Result<RawTotals, ScoringError> {
    let chosen = nearest_nodes(&dest.id, dest.position, nodes, modes)?;
    let mut gaps = Vec::new();
    let mut raw_time = 0.0;
    let mut raw_od = 0.0;
    for node in &chosen {
        let query = TravelQuery {
            dest_id: &dest.id,
            node_id: &node.id,
            origin: node.position,
            destination: dest.position,
        };
        match times.minutes(&query) {
            Ok(m) => raw_time += m,
            Err(ProviderError::MissingPair { .. }) => gaps.push(RecordGap {
                dest_id: dest.id.clone(),
                node_id: node.id.clone(),
                kind: GapKind::TravelTime,
            }),
            Err(source) => {
                return Err(ScoringError::Provider {
                    dest: dest.id.clone(),
                    source,
                })
            }
        }
        match ods.volumes(&dest.id, &node.id) {
            Some(rows) => {
                raw_od += rows
                    .iter()
                    .filter(|(tf, _)| timeframes.contains(tf))
                    .map(|(_, v)| v)
                    .sum::<f64>();
            }
            None => gaps.push(RecordGap {
                dest_id: dest.id.clone(),
                node_id: node.id.clone(),
                kind: GapKind::OdVolume,
            }),
        }
    }
    if !gaps.is_empty() {
        return Err(ScoringError::MissingRecords(gaps));
    }
    Ok(RawTotals {
        dest_id: dest.id.clone(),
        node_ids: chosen.iter().map(|n| n.id.clone()).collect(),
        raw_time,
        raw_od,
    })
}

/// Min-max scaling onto [0, 1]. A constant input maps to all zeros.
pub fn minmax_scale(values: &[f64]) -> Result<Vec<f64>, ScoringError> {
    if values.is_empty() {
        return Err(ScoringError::EmptyInput);
    }
    if let Some(&bad) = values.iter().find(|v| !v.is_finite()) {
        return Err(ScoringError::NonFinite(bad));
    }
    let min = values.iter().copied().fold(f64::INFINITY, f64::min);
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let span = max - min;
    if span == 0.0 {
        return Ok(vec![0.0; values.len()]);
    }
    Ok(values.iter().map(|&v| ((v - min) / span).clamp(0.0, 1.0)).collect())
}

/// Convex combination of scaled travel time and scaled OD volume.
pub fn destination_score(scaled_time: f64, scaled_od: f64, gamma: Gamma) -> f64 {
    let g = gamma.value();
    g * scaled_time + (1.0 - g) * scaled_od
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DestinationScore {
    pub dest_id: String,
    pub name: String,
    pub raw_time: f64,
    pub raw_od: f64,
    pub scaled_time: f64,
    pub scaled_od: f64,
    pub score: f64,
    pub gamma: f64,
}

/// Scales raw totals across all destinations and scores each one.
/// `names` maps destination id to display name.
pub fn score_destinations(
    totals: &[RawTotals],
    names: &BTreeMap<String, String>,
    gamma: Gamma,
) -> Result<Vec<DestinationScore>, ScoringError> {
    if totals.is_empty() {
        return Ok(Vec::new());
    }
    let times: Vec<f64> = totals.iter().map(|t| t.raw_time).collect();
    let ods: Vec<f64> = totals.iter().map(|t| t.raw_od).collect();
    let st = minmax_scale(&times)?;
    let so = minmax_scale(&ods)?;
    Ok(totals
        .iter()
        .zip(st.iter().zip(&so))
        .map(|(t, (&scaled_time, &scaled_od))| DestinationScore {
            dest_id: t.dest_id.clone(),
            name: names.get(&t.dest_id).cloned().unwrap_or_default(),
            raw_time: t.raw_time,
            raw_od: t.raw_od,
            scaled_time,
            scaled_od,
            score: destination_score(scaled_time, scaled_od, gamma),
            gamma: gamma.value(),
        })
        .collect())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScoredCandidate {
    pub candidate_id: String,
    pub name: String,
    pub facility_type: FacilityType,
    pub num_bus: u32,
    /// Reachable destination ids, sorted.
    pub coverage: Vec<String>,
    pub sum_score: f64,
    pub score_v: f64,
    pub display_score: f64,
}

/// Truncates toward negative infinity at two decimals. The small bias
/// absorbs binary representation error (e.g. 0.29 stored as 0.28999...).
pub fn truncate_2dp(value: f64) -> f64 {
    ((value * 100.0) + 1e-7).floor() / 100.0
}

/// Bus-route count times the summed desirability of reachable destinations.
pub fn transfer_score(
    candidate: &Candidate,
    coverage: &[String],
    dest_scores: &BTreeMap<String, f64>,
) -> Result<ScoredCandidate, ScoringError> {
    let mut ids = coverage.to_vec();
    ids.sort();
    let mut sum_score = 0.0;
    for id in &ids {
        let s = dest_scores.get(id).ok_or_else(|| ScoringError::MissingScore {
            candidate: candidate.id.clone(),
            destination: id.clone(),
        })?;
        sum_score += s;
    }
    Ok(scored(candidate, ids, sum_score))
}

/// Builds a scored record from a precomputed desirability sum.
pub fn scored(candidate: &Candidate, coverage: Vec<String>, sum_score: f64) -> ScoredCandidate {
    let score_v = f64::from(candidate.num_bus_routes) * sum_score;
    ScoredCandidate {
        candidate_id: candidate.id.clone(),
        name: candidate.name.clone(),
        facility_type: candidate.facility_type,
        num_bus: candidate.num_bus_routes,
        coverage,
        sum_score,
        score_v,
        display_score: truncate_2dp(score_v),
    }
}

/// Descending by score, then by bus routes, then ascending id.
pub fn rank_candidates(mut scored: Vec<ScoredCandidate>) -> Vec<ScoredCandidate> {
    scored.sort_by(|a, b| {
        b.score_v
            .total_cmp(&a.score_v)
            .then_with(|| b.num_bus.cmp(&a.num_bus))
            .then_with(|| a.candidate_id.cmp(&b.candidate_id))
    });
    scored
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Quadrant {
    I,
    II,
    III,
    IV,
}

impl Quadrant {
    pub fn as_str(self) -> &'static str {
        match self {
            Quadrant::I => "I",
            Quadrant::II => "II",
            Quadrant::III => "III",
            Quadrant::IV => "IV",
        }
    }

    /// Closed at the means: a point on a split line goes to the upper/right side.
    pub fn classify(x: f64, y: f64, mean_x: f64, mean_y: f64) -> Quadrant {
        match (x >= mean_x, y >= mean_y) {
            (true, true) => Quadrant::I,
            (false, true) => Quadrant::II,
            (false, false) => Quadrant::III,
            (true, false) => Quadrant::IV,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct QuadrantAssignment {
    pub candidate_id: String,
    pub name: String,
    pub num_bus: u32,
    pub sum_score: f64,
    pub score_v: f64,
    pub quadrant: Quadrant,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct QuadrantReport {
    pub top_k: usize,
    pub mean_num_bus: f64,
    pub mean_sum_score: f64,
    pub assignments: Vec<QuadrantAssignment>,
}

/// Splits the top `top_k` candidates by score at the subset means of bus
/// routes (x) and summed desirability (y).
pub fn classify_quadrants(scored: &[ScoredCandidate], top_k: usize) -> Result<QuadrantReport, ScoringError> {
    if top_k < 2 {
        return Err(ScoringError::InvalidTopK(top_k));
    }
    let k = if top_k > scored.len() {
        log::warn!(
            "top_k {top_k} exceeds the {} scored candidates; using all of them",
            scored.len()
        );
        scored.len()
    } else {
        top_k
    };
    let ranked = rank_candidates(scored.to_vec());
    let top = &ranked[..k];
    if top.is_empty() {
        return Ok(QuadrantReport {
            top_k: 0,
            ..Default::default()
        });
    }
    let n = top.len() as f64;
    let mean_x = top.iter().map(|c| f64::from(c.num_bus)).sum::<f64>() / n;
    let mean_y = top.iter().map(|c| c.sum_score).sum::<f64>() / n;
    let assignments = top
        .iter()
        .map(|c| QuadrantAssignment {
            candidate_id: c.candidate_id.clone(),
            name: c.name.clone(),
            num_bus: c.num_bus,
            sum_score: c.sum_score,
            score_v: c.score_v,
            quadrant: Quadrant::classify(f64::from(c.num_bus), c.sum_score, mean_x, mean_y),
        })
        .collect();
    Ok(QuadrantReport {
        top_k: k,
        mean_num_bus: mean_x,
        mean_sum_score: mean_y,
        assignments,
    })
}

/// Value of gamma at which two destinations swap order, if inside (0, 1).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GammaCrossover {
    pub dest_a: String,
    pub dest_b: String,
    pub gamma: f64,
    /// Destination ranked higher just below the crossover.
    pub leader_below: String,
    pub leader_above: String,
}

/// Pairwise crossover points of the destination scores as gamma sweeps
/// [0, 1]. Scores are linear in gamma, so each pair swaps at most once.
pub fn gamma_crossovers(scores: &[DestinationScore]) -> Vec<GammaCrossover> {
    let mut out = Vec::new();
    for (i, a) in scores.iter().enumerate() {
        for b in &scores[i + 1..] {
            // d(g) = g * dt + (1 - g) * dod
            let dt = a.scaled_time - b.scaled_time;
            let dod = a.scaled_od - b.scaled_od;
            let slope = dt - dod;
            if slope == 0.0 {
                continue;
            }
            let g = -dod / slope;
            if !(g > 0.0 && g < 1.0) {
                continue;
            }
            let (below, above) = if dod > 0.0 {
                (&a.dest_id, &b.dest_id)
            } else {
                (&b.dest_id, &a.dest_id)
            };
            out.push(GammaCrossover {
                dest_a: a.dest_id.clone(),
                dest_b: b.dest_id.clone(),
                gamma: g,
                leader_below: below.clone(),
                leader_above: above.clone(),
            });
        }
    }
    out.sort_by(|x, y| {
        x.gamma
            .total_cmp(&y.gamma)
            .then_with(|| x.dest_a.cmp(&y.dest_a))
            .then_with(|| x.dest_b.cmp(&y.dest_b))
    });
    out
}
