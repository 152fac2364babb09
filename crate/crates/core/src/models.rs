//! McKean-Vlasov problem instances
//! `X(t) = ξ + ∫₀ᵗ ∫ μ(X(s), x) P(X(s) ∈ dx) ds + W(t)`
//! and the built-in test problems with their analytic oracles.
//!
//! Norms are Euclidean throughout. A drift with constant `L` satisfies
//! `‖μ(x₁,y₁) − μ(x₂,y₂)‖ ≤ (L/2)‖x₁−x₂‖ + (L/2)‖y₁−y₂‖`.

use std::fmt;
use std::sync::Arc;

use crate::brownian::GridPath;
use crate::error::{Error, Result};
use crate::rng::{fill_gaussian, uniform_at, IndexKey, Tag};

type DriftFn = dyn Fn(&[f64], &[f64], &mut [f64]) + Send + Sync;

#[derive(Clone)]
enum DriftKind {
    Zero,
    /// `μ(x, y) = a·x + b·y`
    Linear {
        a: f64,
        b: f64,
    },
    /// `μ(x, y) = (L/2)(sin x + sin y)` coordinatewise
    Sine {
        half_l: f64,
    },
    Custom(Arc<DriftFn>),
}

/// The drift `μ: ℝᵈ × ℝᵈ → ℝᵈ` together with its declared Lipschitz constant.
#[derive(Clone)]
pub struct DriftModel {
    name: String,
    kind: DriftKind,
    lipschitz: f64,
    origin_value: Vec<f64>,
}

impl DriftModel {
    fn builtin(name: &str, kind: DriftKind, lipschitz: f64, dim: usize) -> Self {
        let mut model = DriftModel {
            name: name.to_string(),
            kind,
            lipschitz,
            origin_value: Vec::new(),
        };
        let zero = vec![0.0; dim];
        let mut at_origin = vec![0.0; dim];
        model.evaluate(&zero, &zero, &mut at_origin);
        model.origin_value = at_origin;
        model
    }

    /// A user-supplied drift. `f(x, y, out)` must be pure.
    pub fn custom<F>(name: &str, dim: usize, lipschitz: f64, f: F) -> Self
    where
        F: Fn(&[f64], &[f64], &mut [f64]) + Send + Sync + 'static,
    {
        DriftModel::builtin(name, DriftKind::Custom(Arc::new(f)), lipschitz, dim)
    }

    pub fn zero(dim: usize) -> Self {
        DriftModel::builtin("zero", DriftKind::Zero, 0.0, dim)
    }

    /// `μ(x, y) = a·x + b·y`, Lipschitz with `L = 2·max(|a|, |b|)`.
    pub fn linear(a: f64, b: f64, dim: usize) -> Self {
        DriftModel::builtin(
            "linear",
            DriftKind::Linear { a, b },
            2.0 * a.abs().max(b.abs()),
            dim,
        )
    }

    /// `μ(x, y) = (L/2)(sin x + sin y)` coordinatewise; `L` is exact.
    pub fn sine(lipschitz: f64, dim: usize) -> Self {
        DriftModel::builtin(
            "sine",
            DriftKind::Sine {
                half_l: 0.5 * lipschitz,
            },
            lipschitz,
            dim,
        )
    }

    #[inline]
    pub fn evaluate(&self, x: &[f64], y: &[f64], out: &mut [f64]) {
        match &self.kind {
            DriftKind::Zero => out.iter_mut().for_each(|o| *o = 0.0),
            DriftKind::Linear { a, b } => {
                for ((o, xi), yi) in out.iter_mut().zip(x).zip(y) {
                    *o = a * xi + b * yi;
                }
            }
            DriftKind::Sine { half_l } => {
                for ((o, xi), yi) in out.iter_mut().zip(x).zip(y) {
                    *o = half_l * (xi.sin() + yi.sin());
                }
            }
            DriftKind::Custom(f) => f(x, y, out),
        }
    }

    /// `L/2` when the drift is the coordinatewise sine model.
    pub(crate) fn sine_half_l(&self) -> Option<f64> {
        match self.kind {
            DriftKind::Sine { half_l } => Some(half_l),
            _ => None,
        }
    }

    pub fn lipschitz(&self) -> f64 {
        self.lipschitz
    }

    /// Cached `μ(0, 0)`.
    pub fn value_at_origin(&self) -> &[f64] {
        &self.origin_value
    }

    pub fn name(&self) -> &str {
        &self.name
    }
}

impl fmt::Debug for DriftModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("DriftModel")
            .field("name", &self.name)
            .field("lipschitz", &self.lipschitz)
            .field("origin_value", &self.origin_value)
            .finish()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum OracleKind {
    None,
    /// Exact solution as a function of the driving path `W⁰`.
    Pathwise,
    /// Closed-form mean and variance only.
    MeanOnly,
}

/// The built-in test problems.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Builtin {
    ZeroDrift,
    /// `μ(x, y) = b·y`
    LawOnlyLinear {
        b: f64,
    },
    /// `μ(x, y) = a·x + b·y`
    FullLinear {
        a: f64,
        b: f64,
    },
    /// `μ(x, y) = (L/2)(sin x + sin y)`
    SineMeanField {
        lipschitz: f64,
    },
}

impl Builtin {
    pub fn name(&self) -> &'static str {
        match self {
            Builtin::ZeroDrift => "zero_drift",
            Builtin::LawOnlyLinear { .. } => "law_only_linear",
            Builtin::FullLinear { .. } => "full_linear",
            Builtin::SineMeanField { .. } => "sine_meanfield",
        }
    }

    pub fn oracle_kind(&self) -> OracleKind {
        match self {
            Builtin::ZeroDrift | Builtin::LawOnlyLinear { .. } => OracleKind::Pathwise,
            Builtin::FullLinear { .. } => OracleKind::MeanOnly,
            Builtin::SineMeanField { .. } => OracleKind::None,
        }
    }
}

#[derive(Clone, Debug)]
pub struct Problem {
    dim: usize,
    horizon: f64,
    initial: Vec<f64>,
    drift: DriftModel,
    builtin: Option<Builtin>,
}

impl Problem {
    pub fn new(horizon: f64, initial: Vec<f64>, drift: DriftModel) -> Result<Problem> {
        let dim = initial.len();
        if dim == 0 {
            return Err(Error::invalid("dimension must be at least 1"));
        }
        if !(horizon > 0.0) || !horizon.is_finite() {
            return Err(Error::invalid(format!(
                "horizon must be positive, got {horizon}"
            )));
        }
        if drift.value_at_origin().len() != dim {
            return Err(Error::invalid(format!(
                "drift built for dimension {}, initial point has dimension {dim}",
                drift.value_at_origin().len()
            )));
        }
        Ok(Problem {
            dim,
            horizon,
            initial,
            drift,
            builtin: None,
        })
    }

    /// One of the built-in problems in dimension `initial.len()`.
    pub fn builtin(spec: Builtin, horizon: f64, initial: Vec<f64>) -> Result<Problem> {
        let dim = initial.len();
        let drift = match spec {
            Builtin::ZeroDrift => DriftModel::zero(dim),
            Builtin::LawOnlyLinear { b } => DriftModel::linear(0.0, b, dim),
            Builtin::FullLinear { a, b } => DriftModel::linear(a, b, dim),
            Builtin::SineMeanField { lipschitz } => {
                if !(lipschitz >= 0.0) {
                    return Err(Error::invalid("sine_meanfield needs L ≥ 0"));
                }
                DriftModel::sine(lipschitz, dim)
            }
        };
        let mut problem = Problem::new(horizon, initial, drift)?;
        problem.builtin = Some(spec);
        Ok(problem)
    }

    /// Looks a built-in up by name. `params` carries `a`, `b` or `L` as needed.
    pub fn by_name(
        name: &str,
        horizon: f64,
        initial: Vec<f64>,
        params: &BuiltinParams,
    ) -> Result<Problem> {
        let spec = match name {
            "zero_drift" => Builtin::ZeroDrift,
            "law_only_linear" => Builtin::LawOnlyLinear { b: params.b },
            "full_linear" => Builtin::FullLinear {
                a: params.a,
                b: params.b,
            },
            "sine_meanfield" => Builtin::SineMeanField {
                lipschitz: params.lipschitz,
            },
            other => return Err(Error::UnknownProblem(other.to_string())),
        };
        Problem::builtin(spec, horizon, initial)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    pub fn initial(&self) -> &[f64] {
        &self.initial
    }

    pub fn drift(&self) -> &DriftModel {
        &self.drift
    }

    pub fn spec(&self) -> Option<Builtin> {
        self.builtin
    }

    pub fn name(&self) -> &str {
        match self.builtin {
            Some(b) => b.name(),
            None => self.drift.name(),
        }
    }

    pub fn oracle_kind(&self) -> OracleKind {
        self.builtin.map_or(OracleKind::None, |b| b.oracle_kind())
    }

    pub fn initial_norm(&self) -> f64 {
        norm(&self.initial)
    }

    pub fn drift_origin_norm(&self) -> f64 {
        norm(self.drift.value_at_origin())
    }

    /// Exact `X(t)` driven by the same `W⁰` the estimator uses:
    /// `ξ·e^{bt} + W⁰(t)` (with `b = 0` for zero drift).
    pub fn oracle_pathwise(&self, path: &GridPath, t: f64) -> Result<Vec<f64>> {
        let b = match self.builtin {
            Some(Builtin::ZeroDrift) => 0.0,
            Some(Builtin::LawOnlyLinear { b }) => b,
            _ => return Err(Error::NoPathwiseOracle(self.name().to_string())),
        };
        if path.dim() != self.dim {
            return Err(Error::invalid("path dimension does not match the problem"));
        }
        let w = path.value_at(t, path.level())?;
        let growth = (b * t).exp();
        Ok(self
            .initial
            .iter()
            .zip(w)
            .map(|(xi, wi)| xi * growth + wi)
            .collect())
    }

    /// `E[X(t)]` where a closed form exists.
    pub fn oracle_mean(&self, t: f64) -> Option<Vec<f64>> {
        let rate = match self.builtin? {
            Builtin::ZeroDrift => 0.0,
            Builtin::LawOnlyLinear { b } => b,
            Builtin::FullLinear { a, b } => a + b,
            Builtin::SineMeanField { .. } => return None,
        };
        Some(
            self.initial
                .iter()
                .map(|xi| xi * (rate * t).exp())
                .collect(),
        )
    }

    /// Per-coordinate `Var[X(t)]` where a closed form exists.
    pub fn oracle_variance(&self, t: f64) -> Option<f64> {
        match self.builtin? {
            Builtin::ZeroDrift | Builtin::LawOnlyLinear { .. } => Some(t),
            Builtin::FullLinear { a, .. } => Some(if a == 0.0 {
                t
            } else {
                ((2.0 * a * t).exp() - 1.0) / (2.0 * a)
            }),
            Builtin::SineMeanField { .. } => None,
        }
    }
}

/// Numeric parameters for [`Problem::by_name`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BuiltinParams {
    pub a: f64,
    pub b: f64,
    pub lipschitz: f64,
}

impl Default for BuiltinParams {
    fn default() -> Self {
        BuiltinParams {
            a: 0.0,
            b: -1.0,
            lipschitz: 1.0,
        }
    }
}

pub fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

pub(crate) fn distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

#[derive(Clone, Debug)]
pub struct LipschitzViolation {
    pub x1: Vec<f64>,
    pub y1: Vec<f64>,
    pub x2: Vec<f64>,
    pub y2: Vec<f64>,
    pub lhs: f64,
    pub rhs: f64,
}

#[derive(Clone, Debug)]
pub struct LipschitzReport {
    pub samples: usize,
    /// Largest observed `‖Δμ‖ / ((L/2)(‖Δx‖ + ‖Δy‖))`; 0 when `Δμ` is always 0.
    pub worst_ratio: f64,
    pub violation: Option<LipschitzViolation>,
}

impl LipschitzReport {
    pub fn passed(&self) -> bool {
        self.violation.is_none()
    }
}

fn ball_point(key: &IndexKey, slot: u64, dim: usize, radius: f64) -> Vec<f64> {
    let mut v = vec![0.0; dim];
    fill_gaussian(key, Tag::custom(slot), 1.0, &mut v);
    let n = norm(&v);
    let r = radius * uniform_at(key, Tag::LIPSCHITZ, slot).powf(1.0 / dim as f64);
    if n > 0.0 {
        v.iter_mut().for_each(|x| *x *= r / n);
    }
    v
}

/// Draws `samples` quadruples uniformly in the ball of `radius` and checks
/// the Lipschitz inequality on each; reports the first violating quadruple.
pub fn lipschitz_selfcheck(
    model: &DriftModel,
    dim: usize,
    samples: usize,
    radius: f64,
    key: &IndexKey,
) -> Result<LipschitzReport> {
    if samples == 0 {
        return Err(Error::invalid(
            "lipschitz_selfcheck needs at least one sample",
        ));
    }
    if dim == 0 {
        return Err(Error::invalid("dimension must be at least 1"));
    }
    let half_l = 0.5 * model.lipschitz();
    let mut worst = 0.0f64;
    let mut violation = None;
    let mut m1 = vec![0.0; dim];
    let mut m2 = vec![0.0; dim];
    for i in 0..samples {
        let sample = key.child(&[i as u64]);
        let x1 = ball_point(&sample, 0, dim, radius);
        let y1 = ball_point(&sample, 1, dim, radius);
        let x2 = ball_point(&sample, 2, dim, radius);
        let y2 = ball_point(&sample, 3, dim, radius);
        model.evaluate(&x1, &y1, &mut m1);
        model.evaluate(&x2, &y2, &mut m2);
        let lhs = distance(&m1, &m2);
        let rhs = half_l * (distance(&x1, &x2) + distance(&y1, &y2));
        let ratio = if lhs == 0.0 {
            0.0
        } else if rhs == 0.0 {
            f64::INFINITY
        } else {
            lhs / rhs
        };
        worst = worst.max(ratio);
        // relative slack absorbs rounding in the two evaluations
        if lhs > rhs * (1.0 + 1e-12) + 1e-15 && violation.is_none() {
            violation = Some(LipschitzViolation {
                x1,
                y1,
                x2,
                y2,
                lhs,
                rhs,
            });
        }
    }
    Ok(LipschitzReport {
        samples,
        worst_ratio: worst,
        violation,
    })
}
