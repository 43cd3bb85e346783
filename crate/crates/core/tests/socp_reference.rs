//! Optimal costs of the seeded random SOCPs against values produced by an
//! independent conic solver (CLARABEL) on instances regenerated from the same
//! SplitMix64 stream.

use glide_evade_core::conic::random::random_feasible_socp;
use glide_evade_core::conic::{solve, Cone, SolveStatus, SolverSettings};

struct Reference {
    seed: u64,
    n: usize,
    m: usize,
    cones: usize,
    cost: f64,
}

fn references() -> Vec<Reference> {
    include_str!("data/socp_reference.csv")
        .lines()
        .skip(1)
        .map(|line| {
            let f: Vec<&str> = line.split(',').collect();
            Reference {
                seed: f[0].parse().unwrap(),
                n: f[1].parse().unwrap(),
                m: f[2].parse().unwrap(),
                cones: f[3].parse().unwrap(),
                cost: f[4].parse().unwrap(),
            }
        })
        .collect()
}

#[test]
fn reference_file_covers_fifty_seeds() {
    let refs = references();
    assert_eq!(refs.len(), 50);
    assert!(refs.iter().enumerate().all(|(i, r)| r.seed == i as u64));
}

#[test]
fn instances_match_reference_shapes() {
    for r in references() {
        let p = random_feasible_socp(r.seed);
        assert_eq!(p.num_vars(), r.n, "seed {}", r.seed);
        assert_eq!(p.num_eq(), r.m, "seed {}", r.seed);
        let socs = p.cones.iter().filter(|c| matches!(c, Cone::SecondOrder(_))).count();
        assert_eq!(socs, r.cones, "seed {}", r.seed);
    }
}

#[test]
fn optimal_costs_match_reference() {
    let settings = SolverSettings::default();
    for r in references() {
        let sol = solve(&random_feasible_socp(r.seed), &settings).unwrap();
        assert_eq!(sol.status, SolveStatus::Optimal, "seed {}", r.seed);
        let rel = (sol.primal_objective - r.cost).abs() / r.cost.abs().max(1.0);
        assert!(rel <= 1e-6, "seed {}: {} vs {} (rel {rel:e})", r.seed, sol.primal_objective, r.cost);
    }
}
