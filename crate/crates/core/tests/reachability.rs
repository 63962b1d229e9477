mod common;

use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use vertisite::alt_filter::{Candidate, Destination, FacilityType};
use vertisite::geom::Point;
use vertisite::grid::{Cell, GridSpec};
use vertisite::reachability::{compute_coverage, jps_shortest_path, jps_within, NavGrid, PathStatus};

fn free_cell(grid: &NavGrid, rng: &mut impl Rng) -> Option<Cell> {
    let s = grid.spec();
    for _ in 0..200 {
        let c = Cell::new(rng.gen_range(0..s.n_rows), rng.gen_range(0..s.n_cols));
        if !grid.is_blocked(c) {
            return Some(c);
        }
    }
    None
}

#[test]
fn jps_agrees_with_dijkstra_on_random_grids() {
    for seed in 0..300u64 {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed ^ 0x5eed);
        let grid = common::random_grid(seed, 50, 50, 0.3);
        let Some(start) = free_cell(&grid, &mut rng) else {
            continue;
        };
        let dist = common::dijkstra_all(&grid, start);
        for _ in 0..4 {
            let Some(goal) = free_cell(&grid, &mut rng) else {
                continue;
            };
            let r = jps_shortest_path(&grid, start, goal).unwrap();
            let oracle = dist[grid.spec().index(goal)];
            if oracle.is_finite() {
                assert_eq!(r.status, PathStatus::Reached, "seed {seed} {start} -> {goal}");
                let len = r.length_m.unwrap();
                assert!(
                    (len - oracle).abs() < 1e-9,
                    "seed {seed}: jps {len} vs dijkstra {oracle}"
                );
                let cells = r.cells().unwrap();
                let walked = common::check_path(&grid, &cells, start, goal).unwrap();
                assert!((walked - len).abs() < 1e-9);
            } else {
                assert_eq!(r.status, PathStatus::Unreachable, "seed {seed} {start} -> {goal}");
            }
        }
    }
}

#[test]
fn bounded_search_agrees_with_dijkstra_cutoff() {
    for seed in 0..150u64 {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let grid = common::random_grid(seed + 1000, 40, 30, 0.25);
        let Some(start) = free_cell(&grid, &mut rng) else {
            continue;
        };
        let dist = common::dijkstra_all(&grid, start);
        let limit = rng.gen_range(3.0..40.0);
        for _ in 0..5 {
            let Some(goal) = free_cell(&grid, &mut rng) else {
                continue;
            };
            let r = jps_within(&grid, start, goal, limit).unwrap();
            let d = dist[grid.spec().index(goal)];
            let expect = if d <= limit + 1e-9 {
                PathStatus::Reached
            } else if d.is_finite() {
                PathStatus::OutOfRange
            } else {
                // A cut-off search cannot always tell unreachable from far.
                assert_ne!(r.status, PathStatus::Reached);
                continue;
            };
            assert_eq!(r.status, expect, "seed {seed} {start}->{goal} d={d} limit={limit}");
        }
    }
}

fn sites(grid: &NavGrid, n_c: usize, n_d: usize, rng: &mut impl Rng) -> (Vec<Candidate>, Vec<Destination>) {
    let spec = grid.spec();
    let mut pick = || {
        let c = free_cell(grid, rng).unwrap();
        spec.cell_center(c)
    };
    let cands = (0..n_c)
        .map(|i| Candidate {
            id: format!("c{i:02}"),
            name: String::new(),
            facility_type: FacilityType::RestArea,
            position: pick(),
            num_bus_routes: 1,
        })
        .collect();
    let dests = (0..n_d)
        .map(|i| Destination {
            id: format!("d{i:02}"),
            name: String::new(),
            position: pick(),
        })
        .collect();
    (cands, dests)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(40))]

    #[test]
    fn coverage_matches_dijkstra_and_is_monotone(seed in any::<u64>(), range in 0.5f64..4.0, extra in 1usize..60) {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let base = common::random_grid(seed, 40, 40, 0.2);
        let spec = GridSpec::new(0.0, 0.0, 100.0, 40, 40).unwrap();
        let grid = NavGrid::from_blocked(spec, base.blocked().to_vec()).unwrap();
        let (cands, dests) = sites(&grid, 4, 4, &mut rng);

        let cov = compute_coverage(&grid, &cands, &dests, range).unwrap();
        for c in &cands {
            let start = spec.cell_of(c.position).unwrap();
            let dist = common::dijkstra_all(&grid, start);
            let mut expect: Vec<String> = dests
                .iter()
                .filter(|d| dist[spec.index(spec.cell_of(d.position).unwrap())] * 100.0 <= range * 1000.0 + 1e-6)
                .map(|d| d.id.clone())
                .collect();
            expect.sort();
            prop_assert_eq!(cov.get(&c.id).unwrap().destination_ids(), expect);
            for r in &cov.get(&c.id).unwrap().reached {
                prop_assert!(r.length_m <= range * 1000.0 + 1e-6);
            }
        }

        // Larger range never shrinks coverage.
        let wider = compute_coverage(&grid, &cands, &dests, range * 1.5).unwrap();
        for (a, b) in cov.candidates.iter().zip(&wider.candidates) {
            for id in a.destination_ids() {
                prop_assert!(b.destination_ids().contains(&id));
            }
        }

        // More blocked cells never grow coverage (site cells stay free).
        let mut blocked = grid.blocked().to_vec();
        let site_cells: Vec<usize> = cands.iter().map(|c| c.position).chain(dests.iter().map(|d| d.position))
            .map(|p| spec.index(spec.cell_of(p).unwrap())).collect();
        for _ in 0..extra {
            let i = rng.gen_range(0..blocked.len());
            if !site_cells.contains(&i) {
                blocked[i] = true;
            }
        }
        let denser = NavGrid::from_blocked(spec, blocked).unwrap();
        let fewer = compute_coverage(&denser, &cands, &dests, range).unwrap();
        for (a, b) in cov.candidates.iter().zip(&fewer.candidates) {
            for id in b.destination_ids() {
                prop_assert!(a.destination_ids().contains(&id));
            }
        }

        // Evaluation order does not matter.
        let mut rev_c = cands.clone();
        rev_c.reverse();
        let mut rev_d = dests.clone();
        rev_d.reverse();
        prop_assert_eq!(compute_coverage(&grid, &rev_c, &rev_d, range).unwrap(), cov);
    }

    #[test]
    fn reached_length_at_least_straight_line(seed in any::<u64>()) {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let grid = common::random_grid(seed, 30, 30, 0.2);
        let (Some(a), Some(b)) = (free_cell(&grid, &mut rng), free_cell(&grid, &mut rng)) else { return Ok(()) };
        let r = jps_shortest_path(&grid, a, b).unwrap();
        if let Some(len) = r.length_m {
            let pa = Point::new(a.col as f64, a.row as f64);
            let pb = Point::new(b.col as f64, b.row as f64);
            prop_assert!(len + 1e-9 >= pa.distance(pb));
        }
    }
}

#[test]
fn blocked_destination_is_an_error() {
    let spec = GridSpec::new(0.0, 0.0, 100.0, 5, 5).unwrap();
    let mut blocked = vec![false; 25];
    blocked[spec.index(Cell::new(4, 4))] = true;
    let grid = NavGrid::from_blocked(spec, blocked).unwrap();
    let c = Candidate {
        id: "c".into(),
        name: String::new(),
        facility_type: FacilityType::ExHub,
        position: Point::new(50.0, 50.0),
        num_bus_routes: 0,
    };
    let d = Destination {
        id: "d".into(),
        name: String::new(),
        position: Point::new(450.0, 450.0),
    };
    let err = compute_coverage(&grid, &[c], &[d], 30.0).unwrap_err();
    assert!(err.to_string().contains("destination d"), "{err}");
}
