//! Randomized property suites over the recursion toolkit.

use num_complex::Complex64;

use crate::recursion::{
    cost_bound, cost_budget, direct, gronwall_beta, gronwall_bound, gronwall_closed_form,
    two_step_closed_form, ROOT_SEPARATION_TOL,
};
use crate::rng::{uniform_at, IndexKey, Tag};

/// Keyed stream of uniforms for parameter draws.
pub struct Draws {
    key: IndexKey,
    counter: u64,
}

impl Draws {
    pub fn new(seed: u64, suite: u64) -> Self {
        Draws {
            key: IndexKey::new(seed, &[2, suite]),
            counter: 0,
        }
    }

    pub fn uniform(&mut self, lo: f64, hi: f64) -> f64 {
        let u = uniform_at(&self.key, Tag::custom(0), self.counter);
        self.counter += 1;
        lo + (hi - lo) * u
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SuiteReport {
    pub name: &'static str,
    pub cases: usize,
    /// Worst observed statistic (relative error or bound ratio).
    pub worst: f64,
    pub tolerance: f64,
}

impl SuiteReport {
    pub fn passed(&self) -> bool {
        self.worst <= self.tolerance
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ClosedForm {
    TwoStep,
    Gronwall,
}

pub const CLOSED_FORM_TOL: f64 = 1e-9;
pub const CLOSED_FORM_HORIZON: usize = 30;

/// Relative separation demanded of sampled roots, well above the solver's
/// rejection threshold.
const SAMPLED_SEPARATION: f64 = 1e-3;

fn separated(p: f64, q: f64) -> bool {
    let disc = (p * p + 4.0 * q).sqrt();
    let scale = ((p - disc) / 2.0).abs().max(((p + disc) / 2.0).abs());
    disc > SAMPLED_SEPARATION.max(ROOT_SEPARATION_TOL) * scale
}

/// Closed form against forward recursion for `cases` draws of
/// `κ, λ ∈ [0, 3]` and forcing terms in `[0.1, 1.1]`, over `horizon + 1` terms.
/// The statistic is the largest term-wise relative error.
pub fn closed_form_suite(
    which: ClosedForm,
    cases: usize,
    horizon: usize,
    seed: u64,
) -> SuiteReport {
    let mut draws = Draws::new(seed, which as u64);
    let mut worst = 0.0f64;
    let mut done = 0;
    while done < cases {
        let kappa = draws.uniform(0.0, 3.0);
        let lambda = draws.uniform(0.0, 3.0);
        let p = match which {
            ClosedForm::TwoStep => kappa,
            ClosedForm::Gronwall => 1.0 + kappa,
        };
        if !separated(p, lambda) {
            continue;
        }
        let b: Vec<Complex64> = (0..=horizon)
            .map(|_| Complex64::new(draws.uniform(0.1, 1.1), 0.0))
            .collect();
        let (k, l) = (Complex64::new(kappa, 0.0), Complex64::new(lambda, 0.0));
        let (closed, reference) = match which {
            ClosedForm::TwoStep => (two_step_closed_form(k, l, &b), direct::two_step(k, l, &b)),
            ClosedForm::Gronwall => (gronwall_closed_form(k, l, &b), direct::gronwall(k, l, &b)),
        };
        let closed = match closed {
            Ok(c) => c,
            Err(_) => {
                worst = f64::INFINITY;
                done += 1;
                continue;
            }
        };
        for (c, r) in closed.iter().zip(&reference) {
            worst = worst.max((c - r).norm() / r.norm());
        }
        done += 1;
    }
    SuiteReport {
        name: match which {
            ClosedForm::TwoStep => "two_step_closed_form",
            ClosedForm::Gronwall => "gronwall_closed_form",
        },
        cases,
        worst,
        tolerance: CLOSED_FORM_TOL,
    }
}

/// Complex parameters `|κ|, |λ| ≤ 2` and complex forcing. Terms can cancel
/// here, so the statistic is normwise: `max|Δ| / max|a|` over the horizon.
pub fn complex_closed_form_suite(cases: usize, horizon: usize, seed: u64) -> SuiteReport {
    let mut draws = Draws::new(seed, 7);
    let mut worst = 0.0f64;
    let mut done = 0;
    let complex = |d: &mut Draws| {
        let r = d.uniform(0.0, 2.0);
        let a = d.uniform(0.0, std::f64::consts::TAU);
        Complex64::from_polar(r, a)
    };
    while done < cases {
        let kappa = complex(&mut draws);
        let lambda = complex(&mut draws);
        let b: Vec<Complex64> = (0..=horizon).map(|_| complex(&mut draws)).collect();
        for (closed, reference) in [
            (
                two_step_closed_form(kappa, lambda, &b),
                direct::two_step(kappa, lambda, &b),
            ),
            (
                gronwall_closed_form(kappa, lambda, &b),
                direct::gronwall(kappa, lambda, &b),
            ),
        ] {
            // near-coincident roots are rejected by design; skip those draws
            let Ok(closed) = closed else { continue };
            let scale = reference.iter().map(|z| z.norm()).fold(0.0, f64::max);
            let err = closed
                .iter()
                .zip(&reference)
                .map(|(c, r)| (c - r).norm())
                .fold(0.0, f64::max);
            if scale > 0.0 {
                worst = worst.max(err / scale);
            }
        }
        done += 1;
    }
    SuiteReport {
        name: "complex_closed_forms",
        cases,
        worst,
        tolerance: CLOSED_FORM_TOL,
    }
}

pub const SOUNDNESS_HORIZON: usize = 20;

/// The equality run of the Gronwall-type inequality against its closed bound;
/// the statistic is the largest `a_n / bound_n`.
pub fn gronwall_soundness_suite(draws_count: usize, horizon: usize, seed: u64) -> SuiteReport {
    let mut draws = Draws::new(seed, 11);
    let mut worst = 0.0f64;
    for i in 0..draws_count {
        let kappa = draws.uniform(0.0, 3.0);
        let lambda = draws.uniform(0.0, 3.0);
        let beta = gronwall_beta(kappa, lambda);
        let c1 = draws.uniform(0.0, 2.0);
        let c2 = draws.uniform(0.0, 2.0);
        let c3 = draws.uniform(0.0, 2.0);
        // every fifth draw exercises the c₄ = β branch exactly
        let c4 = if i % 5 == 0 {
            beta
        } else {
            draws.uniform(0.0, 6.0)
        };
        let c = [c1, c2, c3, c4];
        let run = direct::gronwall_equality_run(kappa, lambda, c, horizon);
        for (n, a) in run.iter().enumerate() {
            let bound = match gronwall_bound(kappa, lambda, c, n as u32) {
                Ok(b) => b,
                Err(_) => {
                    worst = f64::INFINITY;
                    continue;
                }
            };
            let ratio = if bound > 0.0 {
                a / bound
            } else if *a > 0.0 {
                f64::INFINITY
            } else {
                0.0
            };
            worst = worst.max(ratio);
        }
    }
    SuiteReport {
        name: "gronwall_soundness",
        cases: draws_count,
        worst,
        tolerance: 1.0,
    }
}

/// `cost_budget ≤ cost_bound` over `n ≤ 8`, `m ≤ 5`, `d ∈ {1, 10}` and both
/// switches; the statistic is the largest `budget / bound`.
pub fn cost_domination_suite() -> SuiteReport {
    let mut worst = 0.0f64;
    let mut cases = 0;
    for n in 0..=8 {
        for m in 1..=5 {
            for d in [1u64, 10] {
                for v in [false, true] {
                    for f in [false, true] {
                        cases += 1;
                        match (cost_budget(n, m, d, v, f), cost_bound(n, m, d, v, f)) {
                            (Ok(budget), Ok(bound)) => {
                                if budget > bound {
                                    worst = f64::INFINITY;
                                } else if bound > 0 {
                                    worst = worst.max(budget as f64 / bound as f64);
                                }
                            }
                            _ => worst = f64::INFINITY,
                        }
                    }
                }
            }
        }
    }
    SuiteReport {
        name: "cost_domination",
        cases,
        worst,
        tolerance: 1.0,
    }
}
