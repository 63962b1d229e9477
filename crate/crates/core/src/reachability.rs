//! Constrained-grid reachability via Jump Point Search.
//!
//! Movement is 8-connected with octile costs: an orthogonal step costs one
//! cell, a diagonal step costs sqrt(2) cells. A diagonal step is only allowed
//! when both orthogonally adjacent cells are free (no corner cutting).

use std::cmp::Ordering;
use std::collections::hash_map::Entry;
use std::collections::{BinaryHeap, HashMap};
use std::f64::consts::SQRT_2;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::alt_filter::{Candidate, Destination};
use crate::grid::{Cell, ConstraintStack, GridError, GridSpec};

pub const DEFAULT_RANGE_KM: f64 = 30.0;

/// Slack for comparing accumulated octile lengths against a range limit.
const LENGTH_EPS: f64 = 1e-9;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ReachError {
    #[error("start cell {0} is blocked")]
    StartBlocked(Cell),
    #[error("goal cell {0} is blocked")]
    GoalBlocked(Cell),
    #[error("start cell {0} is outside the grid")]
    StartOutside(Cell),
    #[error("goal cell {0} is outside the grid")]
    GoalOutside(Cell),
    #[error("range must be positive, got {0} km")]
    InvalidRange(f64),
    #[error("candidate {id}: {source}")]
    Candidate { id: String, source: Box<ReachError> },
    #[error("destination {id}: {source}")]
    Destination { id: String, source: Box<ReachError> },
    #[error("{id}: {source}")]
    Position { id: String, source: GridError },
}

/// Immutable navigation grid; a cell is blocked when any constraint is present.
#[derive(Clone, Debug)]
pub struct NavGrid {
    spec: GridSpec,
    blocked: Vec<bool>,
}

impl NavGrid {
    pub fn from_stack(stack: &ConstraintStack) -> Self {
        NavGrid {
            spec: *stack.spec(),
            blocked: stack.sum().iter().map(|&c| c > 0).collect(),
        }
    }

    /// Row-major blocked flags, row 0 first.
    pub fn from_blocked(spec: GridSpec, blocked: Vec<bool>) -> Result<Self, GridError> {
        if blocked.len() != spec.len() {
            return Err(GridError::DimensionMismatch {
                rows: spec.n_rows,
                cols: spec.n_cols,
                found_rows: blocked.len() / spec.n_cols,
                found_cols: spec.n_cols,
            });
        }
        Ok(NavGrid { spec, blocked })
    }

    pub fn spec(&self) -> &GridSpec {
        &self.spec
    }

    pub fn is_blocked(&self, cell: Cell) -> bool {
        self.blocked[self.spec.index(cell)]
    }

    pub fn blocked(&self) -> &[bool] {
        &self.blocked
    }

    fn contains(&self, cell: Cell) -> bool {
        cell.row < self.spec.n_rows && cell.col < self.spec.n_cols
    }

    #[inline]
    fn free(&self, x: i64, y: i64) -> bool {
        x >= 0
            && y >= 0
            && (x as usize) < self.spec.n_cols
            && (y as usize) < self.spec.n_rows
            && !self.blocked[y as usize * self.spec.n_cols + x as usize]
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum PathStatus {
    Reached,
    Unreachable,
    OutOfRange,
}

impl PathStatus {
    pub fn as_str(self) -> &'static str {
        match self {
            PathStatus::Reached => "REACHED",
            PathStatus::Unreachable => "UNREACHABLE",
            PathStatus::OutOfRange => "OUT_OF_RANGE",
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct PathResult {
    pub status: PathStatus,
    /// Path length in meters. `None` when unreachable, or when the search
    /// was cut off at the range limit before a path was found.
    pub length_m: Option<f64>,
    /// Jump points from start to goal, when reached.
    pub waypoints: Option<Vec<Cell>>,
}

impl PathResult {
    /// Every cell along the path, consecutive cells being 8-neighbours.
    pub fn cells(&self) -> Option<Vec<Cell>> {
        self.waypoints.as_deref().map(expand_waypoints)
    }
}

pub fn octile_cells(a: Cell, b: Cell) -> f64 {
    let dx = a.col.abs_diff(b.col) as f64;
    let dy = a.row.abs_diff(b.row) as f64;
    let (lo, hi) = if dx < dy { (dx, dy) } else { (dy, dx) };
    (hi - lo) + SQRT_2 * lo
}

/// Expands straight/diagonal waypoint segments into the full cell sequence.
pub fn expand_waypoints(waypoints: &[Cell]) -> Vec<Cell> {
    let mut out = Vec::new();
    let Some(&first) = waypoints.first() else {
        return out;
    };
    out.push(first);
    for pair in waypoints.windows(2) {
        let (a, b) = (pair[0], pair[1]);
        let (mut x, mut y) = (a.col as i64, a.row as i64);
        let (tx, ty) = (b.col as i64, b.row as i64);
        while (x, y) != (tx, ty) {
            x += (tx - x).signum();
            y += (ty - y).signum();
            out.push(Cell::new(y as usize, x as usize));
        }
    }
    out
}

/// Optimal path between two free cells.
pub fn jps_shortest_path(grid: &NavGrid, start: Cell, goal: Cell) -> Result<PathResult, ReachError> {
    search(grid, start, goal, None)
}

/// Like [`jps_shortest_path`] but gives up on paths longer than
/// `max_length_m`; the result is then [`PathStatus::OutOfRange`].
pub fn jps_within(grid: &NavGrid, start: Cell, goal: Cell, max_length_m: f64) -> Result<PathResult, ReachError> {
    search(grid, start, goal, Some(max_length_m / grid.spec.cell_size))
}

#[derive(Clone, Copy)]
struct Open {
    f: f64,
    g: f64,
    node: u32,
}

impl PartialEq for Open {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}
impl Eq for Open {}
impl PartialOrd for Open {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Open {
    // Min-heap on f, then prefer larger g, then lower index.
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .f
            .total_cmp(&self.f)
            .then_with(|| self.g.total_cmp(&other.g))
            .then_with(|| other.node.cmp(&self.node))
    }
}

struct NodeState {
    g: f64,
    parent: u32,
    closed: bool,
}

struct Search<'a> {
    grid: &'a NavGrid,
    goal: (i64, i64),
    limit: f64,
    pruned: bool,
}

impl Search<'_> {
    fn h(&self, x: i64, y: i64) -> f64 {
        let dx = (x - self.goal.0).abs() as f64;
        let dy = (y - self.goal.1).abs() as f64;
        let (lo, hi) = if dx < dy { (dx, dy) } else { (dy, dx) };
        (hi - lo) + SQRT_2 * lo
    }

    fn over_limit(&mut self, g: f64, x: i64, y: i64) -> bool {
        if g + self.h(x, y) > self.limit + LENGTH_EPS {
            self.pruned = true;
            true
        } else {
            false
        }
    }

    /// Scans from `(x, y)` in straight direction `(dx, dy)`; `g` is the cost
    /// at `(x, y)`. Returns the jump point and its cost.
    fn jump_straight(&mut self, mut x: i64, mut y: i64, dx: i64, dy: i64, mut g: f64) -> Option<(i64, i64, f64)> {
        let grid = self.grid;
        loop {
            x += dx;
            y += dy;
            g += 1.0;
            if !grid.free(x, y) {
                return None;
            }
            if (x, y) == self.goal {
                return Some((x, y, g));
            }
            if self.over_limit(g, x, y) {
                return None;
            }
            let forced = if dx != 0 {
                (grid.free(x, y - 1) && !grid.free(x - dx, y - 1)) || (grid.free(x, y + 1) && !grid.free(x - dx, y + 1))
            } else {
                (grid.free(x - 1, y) && !grid.free(x - 1, y - dy)) || (grid.free(x + 1, y) && !grid.free(x + 1, y - dy))
            };
            if forced {
                return Some((x, y, g));
            }
        }
    }

    fn jump_diagonal(&mut self, mut x: i64, mut y: i64, dx: i64, dy: i64, mut g: f64) -> Option<(i64, i64, f64)> {
        let grid = self.grid;
        loop {
            if !(grid.free(x + dx, y) && grid.free(x, y + dy)) {
                return None;
            }
            x += dx;
            y += dy;
            g += SQRT_2;
            if !grid.free(x, y) {
                return None;
            }
            if (x, y) == self.goal {
                return Some((x, y, g));
            }
            if self.over_limit(g, x, y) {
                return None;
            }
            if self.jump_straight(x, y, dx, 0, g).is_some() || self.jump_straight(x, y, 0, dy, g).is_some() {
                return Some((x, y, g));
            }
        }
    }

    fn jump(&mut self, x: i64, y: i64, dx: i64, dy: i64, g: f64) -> Option<(i64, i64, f64)> {
        if dx != 0 && dy != 0 {
            self.jump_diagonal(x, y, dx, dy, g)
        } else {
            self.jump_straight(x, y, dx, dy, g)
        }
    }
}

/// Pruned successor directions for a node reached travelling `(dx, dy)`.
fn directions(grid: &NavGrid, x: i64, y: i64, dir: Option<(i64, i64)>, out: &mut Vec<(i64, i64)>) {
    out.clear();
    match dir {
        None => {
            for (dx, dy) in [(1, 0), (-1, 0), (0, 1), (0, -1)] {
                if grid.free(x + dx, y + dy) {
                    out.push((dx, dy));
                }
            }
            for (dx, dy) in [(1, 1), (1, -1), (-1, 1), (-1, -1)] {
                if grid.free(x + dx, y) && grid.free(x, y + dy) && grid.free(x + dx, y + dy) {
                    out.push((dx, dy));
                }
            }
        }
        Some((dx, dy)) if dx != 0 && dy != 0 => {
            let vert = grid.free(x, y + dy);
            let horiz = grid.free(x + dx, y);
            if vert {
                out.push((0, dy));
            }
            if horiz {
                out.push((dx, 0));
            }
            if vert && horiz {
                out.push((dx, dy));
            }
        }
        Some((dx, 0)) => {
            let next = grid.free(x + dx, y);
            let up = grid.free(x, y + 1);
            let down = grid.free(x, y - 1);
            if next {
                out.push((dx, 0));
                if up {
                    out.push((dx, 1));
                }
                if down {
                    out.push((dx, -1));
                }
            }
            if up {
                out.push((0, 1));
            }
            if down {
                out.push((0, -1));
            }
        }
        Some((0, dy)) => {
            let next = grid.free(x, y + dy);
            let right = grid.free(x + 1, y);
            let left = grid.free(x - 1, y);
            if next {
                out.push((0, dy));
                if right {
                    out.push((1, dy));
                }
                if left {
                    out.push((-1, dy));
                }
            }
            if right {
                out.push((1, 0));
            }
            if left {
                out.push((-1, 0));
            }
        }
        Some(_) => {}
    }
}

fn search(grid: &NavGrid, start: Cell, goal: Cell, limit_cells: Option<f64>) -> Result<PathResult, ReachError> {
    if !grid.contains(start) {
        return Err(ReachError::StartOutside(start));
    }
    if !grid.contains(goal) {
        return Err(ReachError::GoalOutside(goal));
    }
    if grid.is_blocked(start) {
        return Err(ReachError::StartBlocked(start));
    }
    if grid.is_blocked(goal) {
        return Err(ReachError::GoalBlocked(goal));
    }
    let cell_size = grid.spec.cell_size;
    if start == goal {
        return Ok(PathResult {
            status: PathStatus::Reached,
            length_m: Some(0.0),
            waypoints: Some(vec![start]),
        });
    }

    let cols = grid.spec.n_cols as i64;
    let idx = |x: i64, y: i64| (y * cols + x) as u32;
    let mut s = Search {
        grid,
        goal: (goal.col as i64, goal.row as i64),
        limit: limit_cells.unwrap_or(f64::INFINITY),
        pruned: false,
    };
    let (sx, sy) = (start.col as i64, start.row as i64);
    if s.h(sx, sy) > s.limit + LENGTH_EPS {
        return Ok(PathResult {
            status: PathStatus::OutOfRange,
            length_m: None,
            waypoints: None,
        });
    }

    let start_idx = idx(sx, sy);
    let goal_idx = idx(s.goal.0, s.goal.1);
    let mut nodes: HashMap<u32, NodeState> = HashMap::new();
    nodes.insert(
        start_idx,
        NodeState {
            g: 0.0,
            parent: start_idx,
            closed: false,
        },
    );
    let mut open = BinaryHeap::new();
    open.push(Open {
        f: s.h(sx, sy),
        g: 0.0,
        node: start_idx,
    });
    let mut dirs = Vec::with_capacity(8);

    while let Some(Open { g, node, .. }) = open.pop() {
        let state = nodes.get_mut(&node).expect("open node has state");
        if state.closed || g > state.g {
            continue;
        }
        state.closed = true;
        let parent = state.parent;
        if node == goal_idx {
            let mut waypoints = vec![grid.spec.cell_at(node as usize)];
            let mut cur = node;
            while cur != start_idx {
                cur = nodes[&cur].parent;
                waypoints.push(grid.spec.cell_at(cur as usize));
            }
            waypoints.reverse();
            return Ok(PathResult {
                status: PathStatus::Reached,
                length_m: Some(g * cell_size),
                waypoints: Some(waypoints),
            });
        }

        let (x, y) = ((node as i64) % cols, (node as i64) / cols);
        let dir = (node != start_idx).then(|| {
            let (px, py) = ((parent as i64) % cols, (parent as i64) / cols);
            ((x - px).signum(), (y - py).signum())
        });
        directions(grid, x, y, dir, &mut dirs);
        for &(dx, dy) in &dirs {
            let Some((jx, jy, jg)) = s.jump(x, y, dx, dy, g) else {
                continue;
            };
            let j = idx(jx, jy);
            match nodes.entry(j) {
                Entry::Occupied(mut e) => {
                    let st = e.get_mut();
                    if st.closed || jg >= st.g {
                        continue;
                    }
                    st.g = jg;
                    st.parent = node;
                }
                Entry::Vacant(e) => {
                    e.insert(NodeState {
                        g: jg,
                        parent: node,
                        closed: false,
                    });
                }
            }
            open.push(Open {
                f: jg + s.h(jx, jy),
                g: jg,
                node: j,
            });
        }
    }

    let status = if s.pruned {
        PathStatus::OutOfRange
    } else {
        PathStatus::Unreachable
    };
    Ok(PathResult {
        status,
        length_m: None,
        waypoints: None,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PairOutcome {
    pub candidate_id: String,
    pub destination_id: String,
    pub status: PathStatus,
    pub length_m: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReachedDestination {
    pub destination_id: String,
    pub length_m: f64,
    pub waypoints: Vec<Cell>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CandidateCoverage {
    pub candidate_id: String,
    /// Sorted by destination id.
    pub reached: Vec<ReachedDestination>,
}

impl CandidateCoverage {
    pub fn destination_ids(&self) -> Vec<String> {
        self.reached.iter().map(|r| r.destination_id.clone()).collect()
    }
}

/// Reachable destination sets per candidate, sorted by candidate id.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct CoverageSet {
    pub candidates: Vec<CandidateCoverage>,
    /// Every evaluated pair, in (candidate id, destination id) order.
    pub pairs: Vec<PairOutcome>,
}

impl CoverageSet {
    pub fn get(&self, candidate_id: &str) -> Option<&CandidateCoverage> {
        self.candidates
            .binary_search_by(|c| c.candidate_id.as_str().cmp(candidate_id))
            .ok()
            .map(|i| &self.candidates[i])
    }
}

/// For every candidate, the destinations reachable within `range_km` of
/// path length. Pairs are searched in parallel; output order is fixed.
pub fn compute_coverage(
    grid: &NavGrid,
    candidates: &[Candidate],
    destinations: &[Destination],
    range_km: f64,
) -> Result<CoverageSet, ReachError> {
    if !(range_km.is_finite() && range_km > 0.0) {
        return Err(ReachError::InvalidRange(range_km));
    }
    let range_m = range_km * 1000.0;
    let locate = |id: &str, p| {
        grid.spec.try_cell_of(p).map_err(|source| ReachError::Position {
            id: id.to_string(),
            source,
        })
    };
    let mut cands: Vec<(&Candidate, Cell)> = candidates
        .iter()
        .map(|c| Ok((c, locate(&c.id, c.position)?)))
        .collect::<Result<_, ReachError>>()?;
    let mut dests: Vec<(&Destination, Cell)> = destinations
        .iter()
        .map(|d| Ok((d, locate(&d.id, d.position)?)))
        .collect::<Result<_, ReachError>>()?;
    cands.sort_by(|a, b| a.0.id.cmp(&b.0.id));
    dests.sort_by(|a, b| a.0.id.cmp(&b.0.id));

    for (d, cell) in &dests {
        if grid.is_blocked(*cell) {
            return Err(ReachError::Destination {
                id: d.id.clone(),
                source: Box::new(ReachError::GoalBlocked(*cell)),
            });
        }
    }

    let per_candidate: Vec<Vec<(PairOutcome, Option<ReachedDestination>)>> = cands
        .par_iter()
        .map(|(c, ccell)| {
            dests
                .iter()
                .map(|(d, dcell)| {
                    let r = jps_within(grid, *ccell, *dcell, range_m).map_err(|e| ReachError::Candidate {
                        id: c.id.clone(),
                        source: Box::new(e),
                    })?;
                    let reached = (r.status == PathStatus::Reached).then(|| ReachedDestination {
                        destination_id: d.id.clone(),
                        length_m: r.length_m.unwrap_or_default(),
                        waypoints: r.waypoints.clone().unwrap_or_default(),
                    });
                    Ok((
                        PairOutcome {
                            candidate_id: c.id.clone(),
                            destination_id: d.id.clone(),
                            status: r.status,
                            length_m: r.length_m,
                        },
                        reached,
                    ))
                })
                .collect::<Result<Vec<_>, ReachError>>()
        })
        .collect::<Result<_, _>>()?;

    let mut set = CoverageSet::default();
    for ((c, _), rows) in cands.iter().zip(per_candidate) {
        let mut reached = Vec::new();
        for (pair, r) in rows {
            set.pairs.push(pair);
            reached.extend(r);
        }
        set.candidates.push(CandidateCoverage {
            candidate_id: c.id.clone(),
            reached,
        });
    }
    Ok(set)
}
