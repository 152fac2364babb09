//! Interacting-particle Euler–Maruyama reference solver.
//!
//! `N` particles start at `ξ` and move by
//! `Xᵢ ← Xᵢ + (Δt/N) Σⱼ μ(Xᵢ, Xⱼ) + ΔWᵢ`, the empirical measure (self
//! included) standing in for the law. Particle `i` draws its increments
//! from key `(1, i)`, a branch disjoint from the estimator's root `(0)`.

use crate::error::{Error, Result};
use crate::models::Problem;
use crate::parallel::map_indexed;
use crate::rng::{fill_gaussian, IndexKey, Tag};

/// Default refusal threshold on `N²·M` pairwise drift evaluations.
pub const DEFAULT_PAIR_CEILING: u128 = 20_000_000_000;

/// First path element of every particle key.
pub const PARTICLE_BRANCH: u64 = 1;

pub fn particle_key(seed: u64, index: usize) -> IndexKey {
    IndexKey::new(seed, &[PARTICLE_BRANCH, index as u64])
}

/// Ensemble state between steps.
#[derive(Clone, Debug)]
pub struct ParticleEnsemble {
    pub steps: usize,
    pub step_dt: f64,
    pub state: Vec<Vec<f64>>,
}

/// Runs the particle system to `T` and returns the `N` terminal states.
pub fn simulate_particles(
    problem: &Problem,
    particles: usize,
    steps: usize,
    master_seed: u64,
    pair_ceiling: u128,
) -> Result<Vec<Vec<f64>>> {
    let keys: Vec<IndexKey> = (0..particles)
        .map(|i| particle_key(master_seed, i))
        .collect();
    simulate_with_keys(problem, &keys, steps, pair_ceiling).map(|e| e.state)
}

/// Same scheme with explicit noise keys, one per particle.
pub fn simulate_with_keys(
    problem: &Problem,
    keys: &[IndexKey],
    steps: usize,
    pair_ceiling: u128,
) -> Result<ParticleEnsemble> {
    let n = keys.len();
    if n < 2 {
        return Err(Error::invalid("the particle system needs N ≥ 2"));
    }
    if steps == 0 {
        return Err(Error::invalid("the particle system needs M ≥ 1 steps"));
    }
    let pairs = (n as u128) * (n as u128) * steps as u128;
    if pairs > pair_ceiling {
        return Err(Error::ResourceLimit {
            what: "particle drift evaluations N²·M",
            required: pairs,
            ceiling: pair_ceiling,
        });
    }
    let d = problem.dim();
    let dt = problem.horizon() / steps as f64;
    let drift = problem.drift();
    let mut state: Vec<Vec<f64>> = vec![problem.initial().to_vec(); n];

    let half_l = drift.sine_half_l();
    for step in 0..steps {
        let current = &state;
        // sines computed once per step; the pairwise sum keeps the same order
        // and operands as `evaluate`, so both paths agree bit for bit
        let sines: Vec<Vec<f64>> = match half_l {
            Some(_) => current
                .iter()
                .map(|x| x.iter().map(|v| v.sin()).collect())
                .collect(),
            None => Vec::new(),
        };
        let next: Vec<Vec<f64>> = map_indexed(n, |i| {
            let xi = &current[i];
            let mut acc = vec![0.0; d];
            if let Some(h) = half_l {
                let si = &sines[i];
                for sj in &sines {
                    for ((a, x), y) in acc.iter_mut().zip(si).zip(sj) {
                        *a += h * (x + y);
                    }
                }
            } else {
                let mut mu = vec![0.0; d];
                for xj in current {
                    drift.evaluate(xi, xj, &mut mu);
                    for (a, v) in acc.iter_mut().zip(&mu) {
                        *a += v;
                    }
                }
            }
            let mut dw = vec![0.0; d];
            fill_gaussian(&keys[i], Tag::increment(step as u64), dt, &mut dw);
            xi.iter()
                .zip(&acc)
                .zip(&dw)
                .map(|((x, a), w)| x + dt * a / n as f64 + w)
                .collect()
        });
        state = next;
    }
    Ok(ParticleEnsemble {
        steps,
        step_dt: dt,
        state,
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct EnsembleStats {
    pub count: usize,
    pub mean: Vec<f64>,
    /// Unbiased per-coordinate variance (divisor `N − 1`).
    pub variance: Vec<f64>,
    /// `(mean ‖x‖²)^{1/2}`
    pub second_moment_root: f64,
    /// Standard errors of the coordinate means.
    pub mean_se: Vec<f64>,
    /// Delta-method standard error of `second_moment_root`.
    pub second_moment_root_se: f64,
}

pub fn ensemble_stats(samples: &[Vec<f64>]) -> Result<EnsembleStats> {
    let n = samples.len();
    if n < 2 {
        return Err(Error::invalid("ensemble_stats needs at least 2 samples"));
    }
    let d = samples[0].len();
    if samples.iter().any(|s| s.len() != d) {
        return Err(Error::invalid("samples have inconsistent dimensions"));
    }
    let nf = n as f64;
    let mut mean = vec![0.0; d];
    for s in samples {
        for (m, x) in mean.iter_mut().zip(s) {
            *m += x;
        }
    }
    mean.iter_mut().for_each(|m| *m /= nf);
    let mut variance = vec![0.0; d];
    for s in samples {
        for ((v, x), m) in variance.iter_mut().zip(s).zip(&mean) {
            *v += (x - m) * (x - m);
        }
    }
    variance.iter_mut().for_each(|v| *v /= nf - 1.0);
    let mean_se = variance.iter().map(|v| (v / nf).sqrt()).collect();

    let sq: Vec<f64> = samples
        .iter()
        .map(|s| s.iter().map(|x| x * x).sum())
        .collect();
    let m2 = sq.iter().sum::<f64>() / nf;
    let var_sq = sq.iter().map(|q| (q - m2).powi(2)).sum::<f64>() / (nf - 1.0);
    let root = m2.sqrt();
    let root_se = if root > 0.0 {
        (var_sq / nf).sqrt() / (2.0 * root)
    } else {
        0.0
    };
    Ok(EnsembleStats {
        count: n,
        mean,
        variance,
        second_moment_root: root,
        mean_se,
        second_moment_root_se: root_se,
    })
}
