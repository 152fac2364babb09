//! Closed-form solutions of Gronwall-type linear recursions, the cost
//! recursion of the estimator, and the closed-form error, moment and
//! complexity bounds.
//!
//! The recursion solvers work over `ℂ`; the bound functions are real.

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Relative root separation below which the characteristic roots count as equal.
pub const ROOT_SEPARATION_TOL: f64 = 1e-8;

/// Roots `x₁, x₂` of `x² = p·x + q`, with `x₂` the one taking `+√`.
fn roots(p: Complex64, q: Complex64) -> Result<(Complex64, Complex64)> {
    let disc = (p * p + 4.0 * q).sqrt();
    let x1 = (p - disc) / 2.0;
    let x2 = (p + disc) / 2.0;
    let scale = x1.norm().max(x2.norm());
    if (x2 - x1).norm() <= ROOT_SEPARATION_TOL * scale || scale == 0.0 {
        return Err(Error::DegenerateRoots {
            x1: x1.to_string(),
            x2: x2.to_string(),
        });
    }
    Ok((x1, x2))
}

/// `(x₂^j − x₁^j)/(x₂ − x₁)` for `j = 0..len`.
fn divided_powers(x1: Complex64, x2: Complex64, len: usize) -> Vec<Complex64> {
    let mut p1 = Complex64::new(1.0, 0.0);
    let mut p2 = Complex64::new(1.0, 0.0);
    let inv = 1.0 / (x2 - x1);
    (0..len)
        .map(|_| {
            let v = (p2 - p1) * inv;
            p1 *= x1;
            p2 *= x2;
            v
        })
        .collect()
}

/// Solution of `a₀ = b₀`, `a₁ = b₁ + κb₀`, `a_{k+2} = b_{k+2} + κa_{k+1} + λa_k`
/// in closed form: `a_k = Σ_{ℓ≤k} b_ℓ (x₂^{k−ℓ+1} − x₁^{k−ℓ+1})/(x₂ − x₁)`
/// where `x₁ ≠ x₂` solve `x² = κx + λ`.
pub fn two_step_closed_form(
    kappa: Complex64,
    lambda: Complex64,
    forcing: &[Complex64],
) -> Result<Vec<Complex64>> {
    let (x1, x2) = roots(kappa, lambda)?;
    let q = divided_powers(x1, x2, forcing.len() + 1);
    Ok((0..forcing.len())
        .map(|k| (0..=k).map(|l| forcing[l] * q[k - l + 1]).sum())
        .collect())
}

/// Solution of `a_n = b_n + Σ_{k<n} [κa_k + 𝟙_{k≥1} λ a_{k−1}]`:
/// `a_n = Σ_{k≤n} (b_k − 𝟙_{k≥1} b_{k−1}) (x₂^{n−k+1} − x₁^{n−k+1})/(x₂ − x₁)`
/// with `x₁ ≠ x₂` solving `x² = (1+κ)x + λ`.
///
/// The indicator removes the `k = 0` term, so the index `|k − 1|` that would
/// otherwise appear there never needs evaluating.
pub fn gronwall_closed_form(
    kappa: Complex64,
    lambda: Complex64,
    forcing: &[Complex64],
) -> Result<Vec<Complex64>> {
    let (x1, x2) = roots(kappa + 1.0, lambda)?;
    let q = divided_powers(x1, x2, forcing.len() + 1);
    let diff: Vec<Complex64> = (0..forcing.len())
        .map(|k| {
            if k == 0 {
                forcing[0]
            } else {
                forcing[k] - forcing[k - 1]
            }
        })
        .collect();
    Ok((0..forcing.len())
        .map(|n| (0..=n).map(|k| diff[k] * q[n - k + 1]).sum())
        .collect())
}

/// Real-valued conveniences over the complex solvers.
pub fn two_step_closed_form_real(kappa: f64, lambda: f64, forcing: &[f64]) -> Result<Vec<f64>> {
    let b: Vec<Complex64> = forcing.iter().map(|&x| x.into()).collect();
    Ok(two_step_closed_form(kappa.into(), lambda.into(), &b)?
        .into_iter()
        .map(|z| z.re)
        .collect())
}

pub fn gronwall_closed_form_real(kappa: f64, lambda: f64, forcing: &[f64]) -> Result<Vec<f64>> {
    let b: Vec<Complex64> = forcing.iter().map(|&x| x.into()).collect();
    Ok(gronwall_closed_form(kappa.into(), lambda.into(), &b)?
        .into_iter()
        .map(|z| z.re)
        .collect())
}

/// Forward evaluation of the recursions, one step at a time. These are the
/// reference values the closed forms are checked against.
pub mod direct {
    use num_complex::Complex64;

    pub fn two_step(kappa: Complex64, lambda: Complex64, b: &[Complex64]) -> Vec<Complex64> {
        let mut a: Vec<Complex64> = Vec::with_capacity(b.len());
        for k in 0..b.len() {
            let v = match k {
                0 => b[0],
                1 => b[1] + kappa * b[0],
                _ => b[k] + kappa * a[k - 1] + lambda * a[k - 2],
            };
            a.push(v);
        }
        a
    }

    pub fn gronwall(kappa: Complex64, lambda: Complex64, b: &[Complex64]) -> Vec<Complex64> {
        let mut a: Vec<Complex64> = Vec::with_capacity(b.len());
        for n in 0..b.len() {
            let mut v = b[n];
            for k in 0..n {
                v += kappa * a[k];
                if k >= 1 {
                    v += lambda * a[k - 1];
                }
            }
            a.push(v);
        }
        a
    }

    /// The largest sequence allowed by the Gronwall-type inequality: run it
    /// with equality, `a_n = c₁ + c₂n + c₃Σ_{k=1}^n c₄ᵏ + Σ_{k<n}[κa_k + 𝟙_{k≥1}λa_{k−1}]`.
    pub fn gronwall_equality_run(kappa: f64, lambda: f64, c: [f64; 4], horizon: usize) -> Vec<f64> {
        let [c1, c2, c3, c4] = c;
        let mut a: Vec<f64> = Vec::with_capacity(horizon + 1);
        let mut geometric = 0.0;
        let mut power = 1.0;
        for n in 0..=horizon {
            if n >= 1 {
                power *= c4;
                geometric += power;
            }
            let mut v = c1 + c2 * n as f64 + c3 * geometric;
            for k in 0..n {
                v += kappa * a[k];
                if k >= 1 {
                    v += lambda * a[k - 1];
                }
            }
            a.push(v);
        }
        a
    }
}

/// `β = ((1+κ) + √((1+κ)² + 4λ))/2`.
pub fn gronwall_beta(kappa: f64, lambda: f64) -> f64 {
    let p = 1.0 + kappa;
    (p + (p * p + 4.0 * lambda).sqrt()) / 2.0
}

/// Upper bound on any non-negative sequence obeying the Gronwall-type
/// inequality with constants `κ, λ, c₁..c₄`.
pub fn gronwall_bound(kappa: f64, lambda: f64, c: [f64; 4], n: u32) -> Result<f64> {
    if kappa < 0.0 || lambda < 0.0 || c.iter().any(|&x| !(x >= 0.0)) {
        return Err(Error::invalid(
            "gronwall_bound needs non-negative parameters",
        ));
    }
    let beta = gronwall_beta(kappa, lambda);
    if !(beta > 1.0) {
        return Err(Error::invalid(format!(
            "gronwall_bound needs β > 1, got {beta}"
        )));
    }
    let [c1, c2, c3, c4] = c;
    let bn = beta.powi(n as i32);
    let nf = n as f64;
    let head = 1.5 * bn * c1 + 3.0 * c2 * (bn - 1.0) / (2.0 * (beta - 1.0));
    // (c₄^{n+1} − c₄βⁿ)/(c₄ − β) → nβⁿ as c₄ → β; switch before cancellation sets in
    let tail = if (c4 - beta).abs() <= 1e-9 * beta {
        1.5 * c3 * nf * bn
    } else {
        3.0 * c3 * (c4.powi(n as i32 + 1) - c4 * bn) / (2.0 * (c4 - beta))
    };
    Ok(head + tail)
}

fn flag(b: bool) -> u64 {
    b as u64
}

/// Budget `C_{n,m}` from the equality form of the cost recursion
/// `C_{0,m} = 0`,
/// `C_{n,m} = 𝔳mⁿd + 𝔣 + Σ_{ℓ=1}^{n−1} m^{n−ℓ}(𝔳(m^ℓd + 1) + 2𝔣 + 2C_{ℓ,m} + 2C_{ℓ−1,m})`.
pub fn cost_budget(n: u32, m: u32, d: u64, count_draws: bool, count_evals: bool) -> Result<u64> {
    if m == 0 {
        return Err(Error::invalid("branching m must be at least 1"));
    }
    const WHAT: &str = "cost budget C_{n,m}";
    let v = flag(count_draws);
    let f = flag(count_evals);
    let m = m as u64;
    let pow = |e: u32| m.checked_pow(e).ok_or(Error::Overflow(WHAT));
    let mut c: Vec<u64> = vec![0];
    for level in 1..=n {
        let mut total = pow(level)?
            .checked_mul(d)
            .and_then(|x| x.checked_mul(v))
            .and_then(|x| x.checked_add(f))
            .ok_or(Error::Overflow(WHAT))?;
        for l in 1..level {
            let path = pow(l)?
                .checked_mul(d)
                .and_then(|x| x.checked_add(1))
                .and_then(|x| x.checked_mul(v))
                .ok_or(Error::Overflow(WHAT))?;
            let inner = path
                .checked_add(2 * f)
                .and_then(|x| x.checked_add(c[l as usize].checked_mul(2)?))
                .and_then(|x| x.checked_add(c[l as usize - 1].checked_mul(2)?))
                .ok_or(Error::Overflow(WHAT))?;
            let term = pow(level - l)?
                .checked_mul(inner)
                .ok_or(Error::Overflow(WHAT))?;
            total = total.checked_add(term).ok_or(Error::Overflow(WHAT))?;
        }
        c.push(total);
    }
    Ok(c[n as usize])
}

/// Closed bound `(𝔳d + 𝔣)(4m)ⁿ ≥ C_{n,m}`.
pub fn cost_bound(n: u32, m: u32, d: u64, count_draws: bool, count_evals: bool) -> Result<u64> {
    const WHAT: &str = "cost bound (vd+f)(4m)^n";
    let base = (4 * m as u64).checked_pow(n).ok_or(Error::Overflow(WHAT))?;
    d.checked_mul(flag(count_draws))
        .and_then(|x| x.checked_add(flag(count_evals)))
        .and_then(|x| x.checked_mul(base))
        .ok_or(Error::Overflow(WHAT))
}

/// `ln` of [`cost_bound`], finite where the integer form overflows.
pub fn log_cost_bound(n: u32, m: u32, d: u64, count_draws: bool, count_evals: bool) -> f64 {
    let weight = (d * flag(count_draws) + flag(count_evals)) as f64;
    weight.ln() + n as f64 * (4.0 * m as f64).ln()
}

/// Problem-level constants the bounds depend on.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BoundInputs {
    pub horizon: f64,
    pub dim: usize,
    pub lipschitz: f64,
    /// `‖ξ‖`
    pub initial_norm: f64,
    /// `‖μ(0,0)‖`
    pub drift_origin_norm: f64,
}

impl BoundInputs {
    pub fn of(problem: &crate::models::Problem) -> Self {
        BoundInputs {
            horizon: problem.horizon(),
            dim: problem.dim(),
            lipschitz: problem.drift().lipschitz(),
            initial_norm: problem.initial_norm(),
            drift_origin_norm: problem.drift_origin_norm(),
        }
    }
}

/// `ln` of the L² error bound
/// `m^{−n/2} e^{m/2} (‖ξ‖ + ‖μ(0,0)‖t + √(Td)) e^{Lt} (1 + 2Lt)ⁿ`.
pub fn log_error_bound(n: u32, m: u32, t: f64, p: &BoundInputs) -> Result<f64> {
    if n == 0 || m == 0 {
        return Err(Error::invalid("error_bound needs n ≥ 1 and m ≥ 1"));
    }
    if !(0.0..=p.horizon).contains(&t) {
        return Err(Error::TimeOutOfRange {
            t,
            horizon: p.horizon,
        });
    }
    let (n, m) = (n as f64, m as f64);
    let l = p.lipschitz;
    let base = p.initial_norm + p.drift_origin_norm * t + (p.horizon * p.dim as f64).sqrt();
    Ok(-0.5 * n * m.ln() + 0.5 * m + base.ln() + l * t + n * (2.0 * l * t).ln_1p())
}

pub fn error_bound(n: u32, m: u32, t: f64, p: &BoundInputs) -> Result<f64> {
    log_error_bound(n, m, t, p).map(f64::exp)
}

/// `(‖ξ‖ + ‖μ(0,0)‖t + √(td)) e^{Lt}` bounds `(E‖X(t)‖²)^{1/2}`.
pub fn moment_bound(t: f64, p: &BoundInputs) -> Result<f64> {
    log_moment_bound(t, p).map(f64::exp)
}

pub fn log_moment_bound(t: f64, p: &BoundInputs) -> Result<f64> {
    if !(t >= 0.0) {
        return Err(Error::invalid(format!("moment_bound needs t ≥ 0, got {t}")));
    }
    let base = p.initial_norm + p.drift_origin_norm * t + (t * p.dim as f64).sqrt();
    Ok(base.ln() + p.lipschitz * t)
}

/// `ln` of the complexity supremand at `k`:
/// `(4k+4)^{k+1} [e^{k/2}(1 + ‖ξ‖ + ‖μ(0,0)‖T + √(Td)) e^{LT}(1+2LT)ᵏ / k^{k/2}]^{2+δ}`.
pub fn log_supremand(k: u64, delta: f64, p: &BoundInputs) -> f64 {
    let kf = k as f64;
    let (t, l) = (p.horizon, p.lipschitz);
    let base = 1.0 + p.initial_norm + p.drift_origin_norm * t + (t * p.dim as f64).sqrt();
    let inner = 0.5 * kf + base.ln() + l * t + kf * (2.0 * l * t).ln_1p() - 0.5 * kf * kf.ln();
    (kf + 1.0) * (4.0 * kf + 4.0).ln() + (2.0 + delta) * inner
}

#[derive(Clone, Debug, PartialEq)]
pub struct Certificate {
    pub delta: f64,
    pub k_max: u64,
    /// `ln` of the supremand for `k = 1..=k_max`.
    pub log_supremand: Vec<f64>,
    pub argmax: u64,
    pub log_sup: f64,
    /// The maximum lies strictly inside the scanned window. The supremand is
    /// log-concave in `k` (`δ > 0`), so it then decreases for every larger `k`.
    pub attained: bool,
    inputs: BoundInputs,
}

impl Certificate {
    /// Maximum over the scanned window; `+∞` if it overflows `f64`.
    pub fn sup(&self) -> f64 {
        self.log_sup.exp()
    }

    /// `n_ε`: the least `n` such that `error_bound(k, k, T) < ε` for every
    /// `k` in `n..=k_max`. `None` if even `k_max` does not reach `ε`.
    pub fn n_epsilon(&self, epsilon: f64) -> Option<u32> {
        let log_eps = epsilon.ln();
        let mut best = None;
        for k in (1..=self.k_max as u32).rev() {
            let lb = log_error_bound(k, k, self.inputs.horizon, &self.inputs).ok()?;
            if lb < log_eps {
                best = Some(k);
            } else {
                break;
            }
        }
        best
    }
}

/// Scans the complexity supremand over `k = 1..=k_max` in log space.
pub fn complexity_certificate(delta: f64, inputs: &BoundInputs, k_max: u64) -> Result<Certificate> {
    if !(delta > 0.0 && delta < 1.0) {
        return Err(Error::invalid(format!("δ must lie in (0, 1), got {delta}")));
    }
    if k_max == 0 {
        return Err(Error::invalid("k_max must be at least 1"));
    }
    let logs: Vec<f64> = (1..=k_max)
        .map(|k| log_supremand(k, delta, inputs))
        .collect();
    let (idx, &log_sup) = logs
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.total_cmp(b.1))
        .expect("non-empty scan");
    let argmax = idx as u64 + 1;
    let attained = argmax < k_max && logs[idx..].windows(2).all(|w| w[1] < w[0]);
    Ok(Certificate {
        delta,
        k_max,
        log_supremand: logs,
        argmax,
        log_sup,
        attained,
        inputs: *inputs,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(x: f64) -> Complex64 {
        Complex64::new(x, 0.0)
    }

    #[test]
    fn two_step_examples() {
        // a = 1, 2, 5, 10, 21, ... for κ=1, λ=2, b ≡ 1 (direct recursion by hand)
        let a = two_step_closed_form_real(1.0, 2.0, &[1.0; 6]).unwrap();
        for (got, want) in a.iter().zip([1.0, 2.0, 5.0, 10.0, 21.0, 42.0]) {
            assert!((got - want).abs() < 1e-12, "{a:?}");
        }
        assert_eq!(
            two_step_closed_form_real(1.0, 2.0, &[0.0; 5]).unwrap(),
            vec![0.0; 5]
        );
        let g = two_step_closed_form_real(2.0, 0.0, &[1.0; 10]).unwrap();
        for (k, v) in g.iter().enumerate() {
            assert!((v - (2f64.powi(k as i32 + 1) - 1.0)).abs() < 1e-9);
        }
    }

    #[test]
    fn degenerate_roots_are_rejected() {
        // κ² + 4λ = 0
        assert!(matches!(
            two_step_closed_form_real(2.0, -1.0, &[1.0]),
            Err(Error::DegenerateRoots { .. })
        ));
        assert!(two_step_closed_form_real(0.0, 0.0, &[1.0]).is_err());
        // (1+κ)² + 4λ = 0
        assert!(gronwall_closed_form_real(1.0, -1.0, &[1.0]).is_err());
    }

    #[test]
    fn gronwall_examples() {
        let b: Vec<f64> = (0..=30).map(|n| n as f64).collect();
        let closed = gronwall_closed_form_real(2.0, 2.0, &b).unwrap();
        let bc: Vec<Complex64> = b.iter().map(|&x| c(x)).collect();
        let direct = direct::gronwall(c(2.0), c(2.0), &bc);
        for (x, y) in closed.iter().zip(&direct) {
            assert!((x - y.re).abs() <= 1e-10 * y.re.abs().max(1.0));
        }
        assert_eq!(
            gronwall_closed_form_real(0.5, 0.5, &[0.0; 8]).unwrap(),
            vec![0.0; 8]
        );
        // λ = 0 is the classical case a_n = b_n + κΣ_{k<n} a_k
        let b = [1.0, 0.5, 2.0, 0.0, 3.0];
        let closed = gronwall_closed_form_real(0.7, 0.0, &b).unwrap();
        let mut a: Vec<f64> = Vec::new();
        for n in 0..b.len() {
            a.push(b[n] + 0.7 * a.iter().sum::<f64>());
        }
        for (x, y) in closed.iter().zip(&a) {
            assert!((x - y).abs() < 1e-12);
        }
    }

    #[test]
    fn complex_parameters() {
        let kappa = Complex64::new(0.3, -1.1);
        let lambda = Complex64::new(-0.4, 0.8);
        let b: Vec<Complex64> = (0..20)
            .map(|k| Complex64::new(1.0, 0.1 * k as f64))
            .collect();
        let closed = two_step_closed_form(kappa, lambda, &b).unwrap();
        let direct = direct::two_step(kappa, lambda, &b);
        for (x, y) in closed.iter().zip(&direct) {
            assert!((x - y).norm() <= 1e-10 * y.norm().max(1.0));
        }
        let closed = gronwall_closed_form(kappa, lambda, &b).unwrap();
        let direct = direct::gronwall(kappa, lambda, &b);
        for (x, y) in closed.iter().zip(&direct) {
            assert!((x - y).norm() <= 1e-10 * y.norm().max(1.0));
        }
    }

    #[test]
    fn beta_for_cost_estimate() {
        let beta = gronwall_beta(2.0, 2.0);
        assert_eq!(beta, (3.0 + 17f64.sqrt()) / 2.0);
        assert!(beta <= 4.0);
    }

    #[test]
    fn gronwall_bound_zero_and_limit() {
        for n in 0..10 {
            assert_eq!(gronwall_bound(1.0, 1.0, [0.0; 4], n).unwrap(), 0.0);
        }
        let beta = gronwall_beta(1.0, 1.0);
        let at = gronwall_bound(1.0, 1.0, [0.0, 0.0, 1.0, beta], 5).unwrap();
        let near = gronwall_bound(1.0, 1.0, [0.0, 0.0, 1.0, beta * (1.0 + 1e-6)], 5).unwrap();
        assert!((at - near).abs() / at < 1e-4);
        assert!(gronwall_bound(0.0, 0.0, [1.0; 4], 3).is_err());
        assert!(gronwall_bound(-1.0, 1.0, [1.0; 4], 3).is_err());
    }

    #[test]
    fn cost_budget_examples() {
        assert_eq!(cost_budget(0, 3, 1, true, true).unwrap(), 0);
        assert_eq!(cost_budget(1, 3, 2, true, true).unwrap(), 7);
        assert_eq!(cost_budget(2, 2, 1, true, true).unwrap(), 27);
        assert_eq!(cost_budget(5, 4, 7, false, false).unwrap(), 0);
        assert_eq!(cost_bound(2, 2, 1, true, true).unwrap(), 128);
        assert_eq!(cost_bound(0, 2, 1, true, true).unwrap(), 2);
        assert_eq!(cost_bound(3, 3, 10, false, false).unwrap(), 0);
        assert!(matches!(
            cost_budget(40, 1000, 1, true, true),
            Err(Error::Overflow(_))
        ));
        assert!(cost_bound(40, 1000, 1, true, true).is_err());
    }

    fn trivial() -> BoundInputs {
        BoundInputs {
            horizon: 1.0,
            dim: 1,
            lipschitz: 0.0,
            initial_norm: 0.0,
            drift_origin_norm: 0.0,
        }
    }

    #[test]
    fn error_bound_examples() {
        let p = trivial();
        let v = error_bound(3, 2, 0.0, &p).unwrap();
        assert!((v - 2f64.powf(-1.5) * 1f64.exp()).abs() < 1e-14);
        let p = BoundInputs {
            initial_norm: 1.0,
            ..trivial()
        };
        let v = error_bound(4, 4, 1.0, &p).unwrap();
        let e2 = 1f64.exp().powi(2);
        assert!((v - e2 / 8.0).abs() < 1e-13);
        let p = BoundInputs {
            lipschitz: 0.3,
            initial_norm: 1.0,
            ..trivial()
        };
        // m > (1 + 2Lt)² makes the bound decrease in n
        for n in 1..10 {
            assert!(error_bound(n + 1, 3, 1.0, &p).unwrap() < error_bound(n, 3, 1.0, &p).unwrap());
        }
        assert!(error_bound(0, 3, 1.0, &p).is_err());
        assert!(error_bound(1, 3, 1.5, &p).is_err());
    }

    #[test]
    fn moment_bound_examples() {
        let p = BoundInputs {
            initial_norm: 2.5,
            lipschitz: 3.0,
            ..trivial()
        };
        assert!((moment_bound(0.0, &p).unwrap() - 2.5).abs() < 1e-15);
        let p = BoundInputs {
            dim: 4,
            ..trivial()
        };
        assert!((moment_bound(2.0, &p).unwrap() - 8f64.sqrt()).abs() < 1e-14);
        // law_only_linear b = −1: L = 2, exact root second moment √(e^{−2} + 1)
        let p = BoundInputs {
            initial_norm: 1.0,
            lipschitz: 2.0,
            ..trivial()
        };
        let exact = ((-2f64).exp() + 1.0).sqrt();
        assert!(exact <= moment_bound(1.0, &p).unwrap());
        assert!(moment_bound(-1.0, &p).is_err());
    }

    #[test]
    fn certificate_trivial_problem() {
        let p = trivial();
        // brute-force scan for the smallest n with (e/k)^{k/2} < 0.5 for all later k ≤ 50
        let eb = |k: u32| (1f64.exp() / k as f64).powf(k as f64 / 2.0);
        let mut want = None;
        for n in (1..=50u32).rev() {
            if eb(n) < 0.5 {
                want = Some(n);
            } else {
                break;
            }
        }
        let cert = complexity_certificate(0.5, &p, 50).unwrap();
        assert_eq!(cert.n_epsilon(0.5), want);
        assert_eq!(want, Some(4));
        assert!(complexity_certificate(1.0, &p, 10).is_err());
        assert!(complexity_certificate(0.5, &p, 0).is_err());
    }
}
