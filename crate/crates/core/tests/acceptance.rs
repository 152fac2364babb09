//! Acceptance gate: every criterion runs in sequence at its stated tolerance
//! and runtime, prints one PASS/FAIL line, and the test fails if any line does.

use std::process::Command;
use std::time::{Duration, Instant};

use mckean_mlp::brownian::GridPath;
use mckean_mlp::harness::strip_timing;
use mckean_mlp::harness::suites::{
    closed_form_suite, complex_closed_form_suite, cost_domination_suite, gronwall_soundness_suite,
    ClosedForm,
};
use mckean_mlp::mlp::DEFAULT_COST_CEILING;
use mckean_mlp::mlp::{
    l2_error_estimate, mlp_evaluate, realize_estimate, root_key, terminal_samples,
};
use mckean_mlp::models::{Builtin, Problem};
use mckean_mlp::particle::{
    ensemble_stats, simulate_particles, EnsembleStats, DEFAULT_PAIR_CEILING,
};
use mckean_mlp::recursion::{
    complexity_certificate, cost_bound, cost_budget, error_bound, gronwall_beta, log_cost_bound,
    moment_bound, BoundInputs,
};
use mckean_mlp::{CostLedger, DriftModel};

struct Outcome {
    passed: bool,
    detail: String,
}

fn outcome(passed: bool, detail: String) -> Outcome {
    Outcome { passed, detail }
}

fn law_only_linear() -> Problem {
    Problem::builtin(Builtin::LawOnlyLinear { b: -1.0 }, 1.0, vec![1.0]).unwrap()
}

fn sine_meanfield() -> Problem {
    Problem::builtin(Builtin::SineMeanField { lipschitz: 1.0 }, 1.0, vec![1.0]).unwrap()
}

const SEED: u64 = 7;

fn criterion_1() -> Outcome {
    let two = closed_form_suite(ClosedForm::TwoStep, 1000, 30, SEED);
    let gron = closed_form_suite(ClosedForm::Gronwall, 1000, 30, SEED);
    let complex = complex_closed_form_suite(1000, 30, SEED);
    let worst = two.worst.max(gron.worst).max(complex.worst);
    outcome(
        two.passed() && gron.passed() && complex.passed(),
        format!(
            "worst relative error two-step {:.2e}, gronwall {:.2e}, complex {:.2e} (max {:.2e} < 1e-9)",
            two.worst, gron.worst, complex.worst, worst
        ),
    )
}

fn criterion_2() -> Outcome {
    let sound = gronwall_soundness_suite(500, 20, SEED);
    let beta = gronwall_beta(2.0, 2.0);
    let expected = (3.0 + 17f64.sqrt()) / 2.0;
    let beta_ok = (beta - expected).abs() <= 1e-15 * expected && beta <= 4.0;
    outcome(
        sound.passed() && beta_ok,
        format!(
            "max a_n/bound {:.6} over 500 draws; beta(2,2) = {beta:.15} (expected {expected:.15}, <= 4)",
            sound.worst
        ),
    )
}

/// Independent evaluation of the cost recursion in wide integers.
fn budget_oracle(n: u32, m: u32, d: u128, v: u128, f: u128) -> u128 {
    let m = m as u128;
    let mut c: Vec<u128> = vec![0];
    for j in 1..=n {
        let mut total = v * m.pow(j) * d + f;
        for l in 1..j {
            total += m.pow(j - l)
                * (v * (m.pow(l) * d + 1) + 2 * f + 2 * c[l as usize] + 2 * c[l as usize - 1]);
        }
        c.push(total);
    }
    c[n as usize]
}

fn criterion_3() -> Outcome {
    let mut ok = true;
    let mut notes = Vec::new();

    let c = cost_budget(2, 2, 1, true, true).unwrap();
    ok &= c == 27 && budget_oracle(2, 2, 1, 1, 1) == 27;
    notes.push(format!("cost_budget(2,2,1,1,1) = {c}"));

    let domination = cost_domination_suite();
    let mut agree = true;
    for n in 0..=8u32 {
        for m in 1..=5u32 {
            for d in [1u64, 10] {
                for (v, f) in [(false, false), (false, true), (true, false), (true, true)] {
                    let b = cost_budget(n, m, d, v, f).unwrap();
                    agree &= b as u128 == budget_oracle(n, m, d as u128, v as u128, f as u128);
                    let bound = cost_bound(n, m, d, v, f).unwrap();
                    agree &= b <= bound;
                }
            }
        }
    }
    ok &= domination.passed() && agree;
    notes.push(format!("domination max ratio {:.4}", domination.worst));

    let mut instrumented = true;
    for problem in [
        law_only_linear(),
        Problem::builtin(Builtin::SineMeanField { lipschitz: 1.0 }, 1.0, vec![1.0; 3]).unwrap(),
    ] {
        let d = problem.dim() as u64;
        for n in 1..=4u32 {
            for m in 1..=4u32 {
                let r = realize_estimate(&problem, n, m, 11, DEFAULT_COST_CEILING).unwrap();
                let budget = cost_budget(n, m, d, true, true).unwrap();
                let floor = (m as u64).pow(n) * d;
                instrumented &= r.cost.total() <= budget && r.cost.scalar_draws >= floor;
            }
        }
    }
    ok &= instrumented;
    notes.push(format!(
        "instrumented within [v m^n d, budget]: {instrumented}"
    ));
    outcome(ok, notes.join("; "))
}

fn criterion_4() -> Outcome {
    let problem = law_only_linear();
    let declared = BoundInputs::of(&problem);
    let stated = BoundInputs {
        lipschitz: 1.0,
        ..declared
    };
    let mut ok = true;
    let mut notes = Vec::new();
    let mut estimates = Vec::new();
    for k in 1..=4u32 {
        let est = l2_error_estimate(&problem, k, k, 200, SEED, DEFAULT_COST_CEILING).unwrap();
        let b_stated = error_bound(k, k, 1.0, &stated).unwrap();
        let b_declared = error_bound(k, k, 1.0, &declared).unwrap();
        ok &= est.upper() <= b_stated && est.upper() <= b_declared;
        notes.push(format!(
            "k={k}: rmse {:.4} ci+ {:.4} <= {:.3} (L=1) / {:.3} (L=2)",
            est.rmse,
            est.upper(),
            b_stated,
            b_declared
        ));
        estimates.push(est);
    }
    let improved = estimates[3].upper() < estimates[0].lower();
    ok &= improved;
    notes.push(format!(
        "rmse(4) ci [{:.4},{:.4}] below rmse(1) ci [{:.4},{:.4}]: {improved}",
        estimates[3].lower(),
        estimates[3].upper(),
        estimates[0].lower(),
        estimates[0].upper()
    ));
    outcome(ok, notes.join("; "))
}

fn particle_reference() -> (EnsembleStats, Duration) {
    let start = Instant::now();
    let samples =
        simulate_particles(&sine_meanfield(), 2000, 200, SEED, DEFAULT_PAIR_CEILING).unwrap();
    (ensemble_stats(&samples).unwrap(), start.elapsed())
}

fn criterion_5(stats: &EnsembleStats) -> Outcome {
    let problem = sine_meanfield();
    let bound = moment_bound(1.0, &BoundInputs::of(&problem)).unwrap();
    let reported = 2.0 * std::f64::consts::E;
    let lower = stats.second_moment_root - 3.0 * stats.second_moment_root_se;
    outcome(
        lower <= bound && (bound - reported).abs() < 1e-12 && (bound - 5.44).abs() < 5e-3,
        format!(
            "sqrt(E|X|^2) = {:.4} (se {:.4}) <= moment_bound {:.4}",
            stats.second_moment_root, stats.second_moment_root_se, bound
        ),
    )
}

fn criterion_6(particle: &EnsembleStats) -> Outcome {
    let samples =
        terminal_samples(&sine_meanfield(), 4, 4, 500, SEED, DEFAULT_COST_CEILING).unwrap();
    let mlp = ensemble_stats(&samples).unwrap();
    let gap = (mlp.mean[0] - particle.mean[0]).abs();
    let se = (mlp.mean_se[0].powi(2) + particle.mean_se[0].powi(2)).sqrt();
    outcome(
        gap <= 3.0 * se,
        format!(
            "mlp mean {:.4} (se {:.4}) vs particle mean {:.4} (se {:.4}): {:.2} combined se",
            mlp.mean[0],
            mlp.mean_se[0],
            particle.mean[0],
            particle.mean_se[0],
            gap / se
        ),
    )
}

fn criterion_7() -> Outcome {
    let mut ok = true;
    let mut notes = Vec::new();
    for (name, problem) in [
        ("law_only_linear", law_only_linear()),
        ("sine_meanfield", sine_meanfield()),
    ] {
        let inputs = BoundInputs::of(&problem);
        let cert = complexity_certificate(0.5, &inputs, 200).unwrap();
        let attained = cert.attained && cert.argmax <= 200;
        ok &= attained;
        let d = problem.dim() as u64;
        let log_rhs = ((d + 1) as f64).ln() + cert.log_sup;
        let mut eps_ok = true;
        for eps in [0.5, 0.2, 0.1] {
            match cert.n_epsilon(eps) {
                Some(n) => {
                    let log_cost = match cost_bound(n, n, d, true, true) {
                        Ok(c) => (c as f64).ln(),
                        Err(_) => log_cost_bound(n, n, d, true, true),
                    };
                    eps_ok &= log_cost + 2.5 * eps.ln() <= log_rhs;
                }
                None => eps_ok = false,
            }
        }
        ok &= eps_ok;
        let wide = complexity_certificate(0.5, &inputs, 100_000).unwrap();
        let wide = if wide.attained {
            format!("peaks at k={}", wide.argmax)
        } else {
            "still rising at k=100000".to_string()
        };
        notes.push(format!(
            "{name}: argmax over k<=200 at {} (attained {attained}; wide scan {}), \
             cost*eps^2.5 <= (d+1)sup: {eps_ok}",
            cert.argmax, wide
        ));
    }
    outcome(ok, notes.join("; "))
}

fn criterion_8() -> Outcome {
    let mut ok = true;
    let zero = Problem::builtin(Builtin::ZeroDrift, 1.0, vec![0.5, -2.0]).unwrap();
    for n in 1..=4u32 {
        for m in 1..=4u32 {
            let key = root_key(3);
            let mut ledger = CostLedger::disabled();
            let path = GridPath::generate(&key, n, m, 1.0, 2, &mut ledger).unwrap();
            for t in [1.0, 0.37, 0.0] {
                let x = mlp_evaluate(&zero, &key, n, m, t, Some(&path), &mut ledger).unwrap();
                let w = path.value_at(t, n).unwrap();
                ok &= x[0] == 0.5 + w[0] && x[1] == -2.0 + w[1];
            }
        }
    }
    let problem = sine_meanfield();
    let key = root_key(5);
    let mut ledger = CostLedger::disabled();
    let x0 = mlp_evaluate(&problem, &key, 0, 3, 1.0, None, &mut ledger).unwrap();
    ok &= x0 == vec![0.0];

    let shifted = DriftModel::custom(
        "shifted",
        1,
        1.0,
        |x: &[f64], y: &[f64], out: &mut [f64]| {
            out[0] = 0.4 + 0.5 * (x[0] - y[0]).sin();
        },
    );
    let shifted = Problem::new(1.0, vec![1.0], shifted).unwrap();
    for (p, mu00) in [(&problem, 0.0), (&shifted, 0.4)] {
        for m in 1..=4u32 {
            let path = GridPath::generate(&key, 1, m, 1.0, 1, &mut ledger).unwrap();
            for t in [1.0, 0.6] {
                let x = mlp_evaluate(p, &key, 1, m, t, Some(&path), &mut ledger).unwrap();
                let expected = 1.0 + path.value_at(t, 1).unwrap()[0] + t * mu00;
                ok &= x[0] == expected;
            }
        }
    }
    outcome(
        ok,
        "zero drift bit-exact for n,m<=4; n=0 gives 0; n=1 closed form".into(),
    )
}

fn harness_csv(mode: &str, jobs: usize) -> Result<String, String> {
    let out = Command::new(env!("CARGO_BIN_EXE_mlp-harness"))
        .arg(mode)
        .args(["--jobs", &jobs.to_string()])
        .args([
            "--set",
            "reps=60",
            "--set",
            "particles=300",
            "--set",
            "steps=40",
        ])
        .args([
            "--set",
            "selftest_cases=200",
            "--set",
            "soundness_draws=100",
        ])
        .output()
        .map_err(|e| e.to_string())?;
    match out.status.code() {
        Some(0) | Some(1) => Ok(String::from_utf8_lossy(&out.stdout).into_owned()),
        other => Err(format!("{mode} exited with {other:?}")),
    }
}

fn criterion_9() -> Outcome {
    let modes = [
        "convergence",
        "cost-table",
        "verify-bounds",
        "oracle-compare",
        "recursion-selftest",
        "certificate",
    ];
    let mut ok = true;
    let mut notes = Vec::new();
    for mode in modes {
        let runs: Result<Vec<String>, String> =
            [1, 1, 3].iter().map(|&j| harness_csv(mode, j)).collect();
        match runs {
            Ok(r) => {
                let stripped: Vec<String> = r.iter().map(|c| strip_timing(c)).collect();
                let same = !stripped[0].is_empty()
                    && stripped[0] == stripped[1]
                    && stripped[0] == stripped[2];
                ok &= same;
                notes.push(format!(
                    "{mode}: {}",
                    if same { "identical" } else { "differs" }
                ));
            }
            Err(e) => {
                ok = false;
                notes.push(e);
            }
        }
    }
    outcome(ok, notes.join(", "))
}

fn run(
    results: &mut Vec<(usize, bool, String)>,
    id: usize,
    limit: Option<Duration>,
    extra: Duration,
    f: impl FnOnce() -> Outcome,
) {
    let start = Instant::now();
    let o = f();
    let secs = start.elapsed() + extra;
    let in_time = limit.map_or(true, |l| secs <= l);
    let passed = o.passed && in_time;
    let line = format!(
        "{} criterion {id}: {} [{:.2}s{}]",
        if passed { "PASS" } else { "FAIL" },
        o.detail,
        secs.as_secs_f64(),
        limit.map_or(String::new(), |l| format!(" / limit {}s", l.as_secs())),
    );
    println!("{line}");
    results.push((id, passed, line));
}

#[test]
fn acceptance_criteria() {
    let mut results = Vec::new();
    let zero = Duration::ZERO;
    run(
        &mut results,
        1,
        Some(Duration::from_secs(1)),
        zero,
        criterion_1,
    );
    run(
        &mut results,
        2,
        Some(Duration::from_secs(1)),
        zero,
        criterion_2,
    );
    run(
        &mut results,
        3,
        Some(Duration::from_secs(10)),
        zero,
        criterion_3,
    );
    run(
        &mut results,
        4,
        Some(Duration::from_secs(120)),
        zero,
        criterion_4,
    );
    let (particle, particle_time) = particle_reference();
    run(
        &mut results,
        5,
        Some(Duration::from_secs(30)),
        particle_time,
        || criterion_5(&particle),
    );
    run(
        &mut results,
        6,
        Some(Duration::from_secs(180)),
        particle_time,
        || criterion_6(&particle),
    );
    run(
        &mut results,
        7,
        Some(Duration::from_secs(1)),
        zero,
        criterion_7,
    );
    run(
        &mut results,
        8,
        Some(Duration::from_secs(1)),
        zero,
        criterion_8,
    );
    run(&mut results, 9, None, zero, criterion_9);

    let failed: Vec<usize> = results.iter().filter(|r| !r.1).map(|r| r.0).collect();
    println!(
        "acceptance: {}/{} criteria passed",
        results.len() - failed.len(),
        results.len()
    );
    assert!(failed.is_empty(), "failed criteria: {failed:?}");
}
