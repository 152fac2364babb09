//! The full-history recursive multilevel Picard estimator.
//!
//! For `n = 0` the estimator is zero. For `n ≥ 1`
//!
//! ```text
//! X^θ_{n,m}(t) = ξ + W^θ(⌊t⌋ₙ) + t·μ(0,0)
//!   + Σ_{ℓ=1}^{n−1} Σ_{k=1}^{m^{n−ℓ}} (t / m^{n−ℓ}) ·
//!       [ μ(X^θ_ℓ(s), X^η_ℓ(s)) − μ(X^θ_{ℓ−1}(s), X^η_{ℓ−1}(s)) ]
//! ```
//!
//! with `η = (θ, n, k, ℓ)`, `s = 𝔲^η·t`, and `⌊t⌋ₙ` the largest point of the
//! grid `{jT/mⁿ}` below `t`. The path `W^η` is generated once per sample at
//! level `ℓ` and shared by the `ℓ` and `ℓ − 1` sub-calls; the `θ` sub-calls
//! read the caller's path at the coarser level.

use crate::brownian::GridPath;
use crate::error::{Error, Result};
use crate::ledger::{CostLedger, CostTally};
use crate::models::{distance, Problem};
use crate::parallel::map_indexed;
use crate::recursion::cost_budget;
use crate::rng::{repetition_seed, uniform, IndexKey, Tag};

/// Default refusal threshold on `C_{n,m}` (draws plus evaluations) per realization.
pub const DEFAULT_COST_CEILING: u64 = 1_000_000_000;

/// One evaluation request `X^θ_{n,m}(t)`.
#[derive(Clone, Copy, Debug)]
pub struct MlpCall<'a> {
    pub problem: &'a Problem,
    pub key: &'a IndexKey,
    pub picard_n: u32,
    pub branching_m: u32,
    pub t: f64,
    /// `W^θ` at its creation level; required when `picard_n ≥ 1`.
    pub path: Option<&'a GridPath>,
}

impl MlpCall<'_> {
    pub fn evaluate(&self, ledger: &mut CostLedger) -> Result<Vec<f64>> {
        mlp_evaluate(
            self.problem,
            self.key,
            self.picard_n,
            self.branching_m,
            self.t,
            self.path,
            ledger,
        )
    }
}

/// Evaluates `X^θ_{n,m}(t)` by structural recursion, charging every path
/// draw, uniform draw and drift evaluation to `ledger`.
pub fn mlp_evaluate(
    problem: &Problem,
    key: &IndexKey,
    n: u32,
    m: u32,
    t: f64,
    path: Option<&GridPath>,
    ledger: &mut CostLedger,
) -> Result<Vec<f64>> {
    if m == 0 {
        return Err(Error::invalid("branching m must be at least 1"));
    }
    if !(0.0..=problem.horizon()).contains(&t) {
        return Err(Error::TimeOutOfRange {
            t,
            horizon: problem.horizon(),
        });
    }
    if n == 0 {
        return Ok(vec![0.0; problem.dim()]);
    }
    let path = path.ok_or_else(|| Error::invalid("a Brownian path is required for n ≥ 1"))?;
    if path.dim() != problem.dim() || path.horizon() != problem.horizon() || path.branching() != m {
        return Err(Error::invalid(
            "path dimension, horizon or branching does not match the call",
        ));
    }
    if path.level() < n {
        return Err(Error::LevelTooFine {
            created: path.level(),
            requested: n,
        });
    }
    let ctx = Ctx {
        problem,
        m,
        dim: problem.dim(),
    };
    let mut out = vec![0.0; problem.dim()];
    ctx.eval(key, n, t, path, ledger, &mut out)?;
    Ok(out)
}

struct Ctx<'a> {
    problem: &'a Problem,
    m: u32,
    dim: usize,
}

impl Ctx<'_> {
    fn eval(
        &self,
        key: &IndexKey,
        n: u32,
        t: f64,
        path: &GridPath,
        ledger: &mut CostLedger,
        out: &mut [f64],
    ) -> Result<()> {
        if n == 0 {
            out.fill(0.0);
            return Ok(());
        }
        let drift = self.problem.drift();
        let w = path.value_at(t, n)?;
        let origin = drift.value_at_origin();
        ledger.charge_evals(1);
        for (((o, xi), wi), mu0) in out
            .iter_mut()
            .zip(self.problem.initial())
            .zip(w)
            .zip(origin)
        {
            *o = xi + wi + t * mu0;
        }

        let d = self.dim;
        let mut inner = vec![0.0; d];
        let mut outer = vec![0.0; d];
        let mut mu_hi = vec![0.0; d];
        let mut mu_lo = vec![0.0; d];
        for level in 1..n {
            let samples = (self.m as u64).pow(n - level);
            let weight = t / samples as f64;
            for k in 1..=samples {
                let fresh_key = key.child(&[n as u64, k, level as u64]);
                let u = uniform(&fresh_key, Tag::TIME);
                ledger.charge_draws(1);
                ledger.record(&fresh_key, Tag::TIME);
                let s = u * t;
                let fresh = GridPath::generate(
                    &fresh_key,
                    level,
                    self.m,
                    self.problem.horizon(),
                    d,
                    ledger,
                )?;

                self.eval(key, level, s, path, ledger, &mut inner)?;
                self.eval(&fresh_key, level, s, &fresh, ledger, &mut outer)?;
                drift.evaluate(&inner, &outer, &mut mu_hi);

                // X_0 ≡ 0: the lower pair needs no sub-call at level 1
                if level > 1 {
                    self.eval(key, level - 1, s, path, ledger, &mut inner)?;
                    self.eval(&fresh_key, level - 1, s, &fresh, ledger, &mut outer)?;
                    drift.evaluate(&inner, &outer, &mut mu_lo);
                } else {
                    mu_lo.copy_from_slice(origin);
                }
                ledger.charge_evals(2);

                for ((o, hi), lo) in out.iter_mut().zip(&mu_hi).zip(&mu_lo) {
                    *o += weight * (hi - lo);
                }
            }
        }
        Ok(())
    }
}

/// One realization of `X⁰_{n,m}(T)`.
#[derive(Clone, Debug, PartialEq)]
pub struct Realization {
    pub value: Vec<f64>,
    pub cost: CostTally,
    /// `W⁰(T)` of the driving path, for coupled-oracle comparisons.
    pub w_terminal: Vec<f64>,
}

fn check_budget(problem: &Problem, n: u32, m: u32, ceiling: u64) -> Result<()> {
    let budget = cost_budget(n, m, problem.dim() as u64, true, true);
    match budget {
        Ok(b) if b <= ceiling => Ok(()),
        Ok(b) => Err(Error::ResourceLimit {
            what: "MLP realization budget C_{n,m}",
            required: b as u128,
            ceiling: ceiling as u128,
        }),
        Err(_) => Err(Error::ResourceLimit {
            what: "MLP realization budget C_{n,m}",
            required: u128::MAX,
            ceiling: ceiling as u128,
        }),
    }
}

/// Root key `θ = (0)` under `seed`.
pub fn root_key(seed: u64) -> IndexKey {
    IndexKey::new(seed, &[0])
}

/// Computes one realization at `t = T` from the root `θ = (0)`; also returns
/// the driving path so callers can evaluate a coupled oracle on it.
pub fn realize_with_path(
    problem: &Problem,
    n: u32,
    m: u32,
    seed: u64,
    cost_ceiling: u64,
) -> Result<(Realization, GridPath)> {
    if n == 0 || m == 0 {
        return Err(Error::invalid("realize_estimate needs n ≥ 1 and m ≥ 1"));
    }
    check_budget(problem, n, m, cost_ceiling)?;
    let key = root_key(seed);
    let mut ledger = CostLedger::full();
    let path = GridPath::generate(&key, n, m, problem.horizon(), problem.dim(), &mut ledger)?;
    let value = mlp_evaluate(
        problem,
        &key,
        n,
        m,
        problem.horizon(),
        Some(&path),
        &mut ledger,
    )?;
    let realization = Realization {
        value,
        cost: ledger.snapshot(),
        w_terminal: path.terminal().to_vec(),
    };
    Ok((realization, path))
}

pub fn realize_estimate(
    problem: &Problem,
    n: u32,
    m: u32,
    seed: u64,
    cost_ceiling: u64,
) -> Result<Realization> {
    realize_with_path(problem, n, m, seed, cost_ceiling).map(|(r, _)| r)
}

/// Monte Carlo estimate of `(E‖X⁰_{n,m}(T) − X(T)‖²)^{1/2}` against the
/// coupled pathwise oracle.
#[derive(Clone, Debug, PartialEq)]
pub struct L2Error {
    pub rmse: f64,
    /// 95% half-width for the RMSE by the delta method.
    pub ci_half_width: f64,
    pub mean_sq_error: f64,
    pub reps: usize,
    /// Instrumented cost of the first repetition.
    pub first_cost: CostTally,
}

impl L2Error {
    pub fn upper(&self) -> f64 {
        self.rmse + self.ci_half_width
    }

    pub fn lower(&self) -> f64 {
        (self.rmse - self.ci_half_width).max(0.0)
    }
}

pub const Z95: f64 = 1.959_963_984_540_054;

/// Squared errors against the coupled oracle, one per repetition seed.
pub fn coupled_squared_errors(
    problem: &Problem,
    n: u32,
    m: u32,
    reps: usize,
    master_seed: u64,
    cost_ceiling: u64,
) -> Result<Vec<(f64, CostTally)>> {
    if problem.oracle_kind() != crate::models::OracleKind::Pathwise {
        return Err(Error::NoPathwiseOracle(problem.name().to_string()));
    }
    check_budget(problem, n, m, cost_ceiling)?;
    map_indexed(reps, |i| {
        let seed = repetition_seed(master_seed, i as u64);
        let (r, path) = realize_with_path(problem, n, m, seed, cost_ceiling)?;
        let exact = problem.oracle_pathwise(&path, problem.horizon())?;
        let e = distance(&r.value, &exact);
        Ok((e * e, r.cost))
    })
    .into_iter()
    .collect()
}

pub fn l2_error_estimate(
    problem: &Problem,
    n: u32,
    m: u32,
    reps: usize,
    master_seed: u64,
    cost_ceiling: u64,
) -> Result<L2Error> {
    if reps < 2 {
        return Err(Error::invalid(
            "l2_error_estimate needs at least 2 repetitions",
        ));
    }
    let rows = coupled_squared_errors(problem, n, m, reps, master_seed, cost_ceiling)?;
    let r = reps as f64;
    let mean = rows.iter().map(|(e, _)| e).sum::<f64>() / r;
    let var = rows.iter().map(|(e, _)| (e - mean).powi(2)).sum::<f64>() / (r - 1.0);
    let rmse = mean.sqrt();
    let ci_half_width = if rmse > 0.0 {
        Z95 * (var / r).sqrt() / (2.0 * rmse)
    } else {
        0.0
    };
    Ok(L2Error {
        rmse,
        ci_half_width,
        mean_sq_error: mean,
        reps,
        first_cost: rows[0].1,
    })
}

/// Terminal values `X⁰_{n,m}(T)` over `reps` repetition seeds.
pub fn terminal_samples(
    problem: &Problem,
    n: u32,
    m: u32,
    reps: usize,
    master_seed: u64,
    cost_ceiling: u64,
) -> Result<Vec<Vec<f64>>> {
    check_budget(problem, n, m, cost_ceiling)?;
    map_indexed(reps, |i| {
        realize_estimate(
            problem,
            n,
            m,
            repetition_seed(master_seed, i as u64),
            cost_ceiling,
        )
        .map(|r| r.value)
    })
    .into_iter()
    .collect()
}
