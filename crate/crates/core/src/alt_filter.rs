//! Alternative-transport availability filter.
//!
//! A site survives when its grid cell is selected and at least one taxi road
//! access point or subway station lies within the buffer radius.

use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geom::Point;
use crate::grid::{GridError, SelectedLayer};

pub const DEFAULT_BUFFER_M: f64 = 450.0;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AltFilterError {
    #[error("buffer radius must be positive, got {0}")]
    InvalidRadius(f64),
    #[error("site {id}: {source}")]
    Site { id: String, source: GridError },
    #[error("duplicate candidate id {0:?}")]
    DuplicateId(String),
    #[error("candidate {0:?} has a non-finite position")]
    NonFinite(String),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum AltKind {
    TaxiRoad,
    Subway,
}

impl AltKind {
    pub fn as_str(self) -> &'static str {
        match self {
            AltKind::TaxiRoad => "TAXI_ROAD",
            AltKind::Subway => "SUBWAY",
        }
    }
}

impl FromStr for AltKind {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "TAXI_ROAD" => Ok(AltKind::TaxiRoad),
            "SUBWAY" => Ok(AltKind::Subway),
            _ => Err(format!("unknown alternative mode {s:?}")),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AltNode {
    pub id: String,
    pub kind: AltKind,
    pub position: Point,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum FacilityType {
    TollGate,
    RestArea,
    ExHub,
}

impl FacilityType {
    pub fn as_str(self) -> &'static str {
        match self {
            FacilityType::TollGate => "TOLL_GATE",
            FacilityType::RestArea => "REST_AREA",
            FacilityType::ExHub => "EX_HUB",
        }
    }
}

impl FromStr for FacilityType {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "TOLL_GATE" => Ok(FacilityType::TollGate),
            "REST_AREA" => Ok(FacilityType::RestArea),
            "EX_HUB" => Ok(FacilityType::ExHub),
            _ => Err(format!("unknown facility type {s:?}")),
        }
    }
}

impl fmt::Display for FacilityType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// A highway facility considered as a vertiport site.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Candidate {
    pub id: String,
    pub name: String,
    pub facility_type: FacilityType,
    pub position: Point,
    pub num_bus_routes: u32,
}

/// A destination vertiport (an industrial park).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Destination {
    pub id: String,
    pub name: String,
    pub position: Point,
}

/// Anything with an id and a position that can pass through the filters.
pub trait Site {
    fn id(&self) -> &str;
    fn position(&self) -> Point;
}

impl Site for Candidate {
    fn id(&self) -> &str {
        &self.id
    }
    fn position(&self) -> Point {
        self.position
    }
}

impl Site for Destination {
    fn id(&self) -> &str {
        &self.id
    }
    fn position(&self) -> Point {
        self.position
    }
}

/// Candidates with unique ids.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct CandidateSet(Vec<Candidate>);

impl CandidateSet {
    pub fn new(candidates: Vec<Candidate>) -> Result<Self, AltFilterError> {
        let mut seen = std::collections::HashSet::new();
        for c in &candidates {
            if !seen.insert(c.id.as_str()) {
                return Err(AltFilterError::DuplicateId(c.id.clone()));
            }
            if !c.position.is_finite() {
                return Err(AltFilterError::NonFinite(c.id.clone()));
            }
        }
        Ok(CandidateSet(candidates))
    }

    pub fn as_slice(&self) -> &[Candidate] {
        &self.0
    }

    pub fn into_vec(self) -> Vec<Candidate> {
        self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn iter(&self) -> std::slice::Iter<'_, Candidate> {
        self.0.iter()
    }
}

/// Uniform bucket grid over node positions.
#[derive(Clone, Debug)]
pub struct SpatialIndex {
    bucket: f64,
    nodes: Vec<AltNode>,
    buckets: HashMap<(i64, i64), Vec<usize>>,
}

impl SpatialIndex {
    /// `bucket_size` is typically the query radius. Nodes with non-finite
    /// positions are ignored.
    pub fn build(nodes: Vec<AltNode>, bucket_size: f64) -> Self {
        let bucket = if bucket_size.is_finite() && bucket_size > 0.0 {
            bucket_size
        } else {
            1.0
        };
        let mut buckets: HashMap<(i64, i64), Vec<usize>> = HashMap::new();
        for (i, n) in nodes.iter().enumerate() {
            if n.position.is_finite() {
                buckets.entry(key(n.position, bucket)).or_default().push(i);
            }
        }
        SpatialIndex { bucket, nodes, buckets }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    fn for_each_within<'a>(&'a self, center: Point, radius_m: f64, mut f: impl FnMut(&'a AltNode) -> bool) {
        if radius_m.is_nan() || radius_m <= 0.0 || !center.is_finite() {
            return;
        }
        let r2 = radius_m * radius_m;
        let (kx, ky) = key(center, self.bucket);
        let span = (radius_m / self.bucket).ceil().min(1e9) as i64;
        let window = (2 * span + 1).saturating_mul(2 * span + 1);
        if window as usize > self.buckets.len() {
            for node in &self.nodes {
                if node.position.distance_squared(center) <= r2 && !f(node) {
                    return;
                }
            }
            return;
        }
        for bx in kx - span..=kx + span {
            for by in ky - span..=ky + span {
                let Some(ids) = self.buckets.get(&(bx, by)) else {
                    continue;
                };
                for &i in ids {
                    let node = &self.nodes[i];
                    if node.position.distance_squared(center) <= r2 && !f(node) {
                        return;
                    }
                }
            }
        }
    }

    /// All nodes within the closed ball of `radius_m`, sorted by id.
    pub fn radius_query(&self, center: Point, radius_m: f64) -> Vec<&AltNode> {
        let mut out = Vec::new();
        self.for_each_within(center, radius_m, |n| {
            out.push(n);
            true
        });
        out.sort_by(|a, b| a.id.cmp(&b.id));
        out
    }

    pub fn any_within(&self, center: Point, radius_m: f64) -> bool {
        let mut found = false;
        self.for_each_within(center, radius_m, |_| {
            found = true;
            false
        });
        found
    }
}

fn key(p: Point, bucket: f64) -> (i64, i64) {
    ((p.x / bucket).floor() as i64, (p.y / bucket).floor() as i64)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum ExclusionReason {
    /// The site's cell carries at least one operational constraint.
    Constrained,
    /// No alternative transport node within the buffer.
    NoAlternative,
}

impl ExclusionReason {
    pub fn as_str(self) -> &'static str {
        match self {
            ExclusionReason::Constrained => "CONSTRAINED",
            ExclusionReason::NoAlternative => "NO_ALTERNATIVE",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Exclusion {
    pub id: String,
    pub reason: ExclusionReason,
}

#[derive(Clone, Debug, PartialEq)]
pub struct FilterOutcome<S> {
    pub kept: Vec<S>,
    pub excluded: Vec<Exclusion>,
}

impl<S> FilterOutcome<S> {
    pub fn count_excluded(&self, reason: ExclusionReason) -> usize {
        self.excluded.iter().filter(|e| e.reason == reason).count()
    }
}

/// Keeps sites whose cell is selected and which have an alternative
/// transport node within `radius_m`. Input order is preserved.
pub fn filter_alternatives<S: Site + Clone>(
    sites: &[S],
    selected: &SelectedLayer,
    alt_nodes: &[AltNode],
    radius_m: f64,
) -> Result<FilterOutcome<S>, AltFilterError> {
    if !(radius_m.is_finite() && radius_m > 0.0) {
        return Err(AltFilterError::InvalidRadius(radius_m));
    }
    let index = SpatialIndex::build(alt_nodes.to_vec(), radius_m);
    filter_with_index(sites, selected, &index, radius_m)
}

pub fn filter_with_index<S: Site + Clone>(
    sites: &[S],
    selected: &SelectedLayer,
    index: &SpatialIndex,
    radius_m: f64,
) -> Result<FilterOutcome<S>, AltFilterError> {
    if !(radius_m.is_finite() && radius_m > 0.0) {
        return Err(AltFilterError::InvalidRadius(radius_m));
    }
    let mut kept = Vec::new();
    let mut excluded = Vec::new();
    for site in sites {
        let cell = selected
            .spec()
            .try_cell_of(site.position())
            .map_err(|source| AltFilterError::Site {
                id: site.id().to_string(),
                source,
            })?;
        let reason = if !selected.get(cell) {
            Some(ExclusionReason::Constrained)
        } else if !index.any_within(site.position(), radius_m) {
            Some(ExclusionReason::NoAlternative)
        } else {
            None
        };
        match reason {
            None => kept.push(site.clone()),
            Some(reason) => excluded.push(Exclusion {
                id: site.id().to_string(),
                reason,
            }),
        }
    }
    Ok(FilterOutcome { kept, excluded })
}
