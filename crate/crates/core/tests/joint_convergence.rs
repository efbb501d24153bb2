//! Finite-dimensional convergence of the rescaled chain: the triple
//! (xi_i, eta_{i+1}, xi_{i+1}) after burn-in against the stationary limit.

use rayon::prelude::*;

use kingman_records::limit::{rescaled_observables, step_limit};
use kingman_records::ra_chain::sample_path;
use kingman_records::rng::{exp1, stream};
use kingman_records::stats::chi2_two_sample;
use kingman_records::{ChainState, RaState};

const PATHS: u64 = 100_000;

// Exp(1) terciles.
fn tercile(x: f64) -> usize {
    if x < 1.5f64.ln() {
        0
    } else if x < 3f64.ln() {
        1
    } else {
        2
    }
}

fn cell(xi: f64, eta: f64, xi_next: f64) -> usize {
    9 * tercile(xi) + 3 * tercile(eta) + tercile(xi_next)
}

fn histogram(cells: &[usize]) -> Vec<u64> {
    let mut h = vec![0u64; 27];
    for &c in cells {
        h[c] += 1;
    }
    h
}

#[test]
fn chain_triples_match_the_limit_chain() {
    let chain: Vec<usize> = (0..PATHS)
        .into_par_iter()
        .map(|k| {
            let mut rng = stream(202, "joint-chain", k);
            let path = sample_path(ChainState::Exact(RaState { r: 1, a: 2 }), 27, &mut rng);
            let obs = rescaled_observables(&path, 25).unwrap();
            cell(obs[0].xi, obs[1].eta, obs[1].xi)
        })
        .collect();
    let limit: Vec<usize> = (0..PATHS)
        .into_par_iter()
        .map(|k| {
            let mut rng = stream(202, "joint-limit", k);
            let xi0 = exp1(&mut rng);
            let s = step_limit(xi0, &mut rng);
            cell(xi0, s.eta, s.xi)
        })
        .collect();
    let report = chi2_two_sample(&histogram(&chain), &histogram(&limit)).unwrap();
    assert!(report.pass, "{}", report.to_json().unwrap());
}

#[test]
fn binning_detects_a_broken_coupling() {
    // Independent xi values fail the same test: the cells see the dependence.
    let coupled: Vec<usize> = (0..PATHS)
        .map(|k| {
            let mut rng = stream(203, "coupled", k);
            let xi0 = exp1(&mut rng);
            let s = step_limit(xi0, &mut rng);
            cell(xi0, s.eta, s.xi)
        })
        .collect();
    let shuffled: Vec<usize> = (0..PATHS)
        .map(|k| {
            let mut rng = stream(203, "independent", k);
            let xi0 = exp1(&mut rng);
            let s = step_limit(exp1(&mut rng), &mut rng);
            cell(xi0, s.eta, s.xi)
        })
        .collect();
    assert!(!chi2_two_sample(&histogram(&coupled), &histogram(&shuffled)).unwrap().pass);
}
