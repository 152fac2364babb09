//! Flat `key = value` experiment configuration.
//!
//! Lines are `key = value`; `#` starts a comment. Command-line `--set k=v`
//! pairs are applied after the file, in order, with the same parser.

use std::collections::BTreeMap;
use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::mlp::DEFAULT_COST_CEILING;
use crate::models::{BuiltinParams, Problem};
use crate::particle::DEFAULT_PAIR_CEILING;

/// Largest diagonal level run without `--extended`.
pub const DESK_MAX_LEVEL: u32 = 4;
pub const EXTENDED_MAX_LEVEL: u32 = 5;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Mode {
    Convergence,
    CostTable,
    VerifyBounds,
    OracleCompare,
    RecursionSelftest,
    Certificate,
}

impl Mode {
    pub const ALL: [Mode; 6] = [
        Mode::Convergence,
        Mode::CostTable,
        Mode::VerifyBounds,
        Mode::OracleCompare,
        Mode::RecursionSelftest,
        Mode::Certificate,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            Mode::Convergence => "convergence",
            Mode::CostTable => "cost-table",
            Mode::VerifyBounds => "verify-bounds",
            Mode::OracleCompare => "oracle-compare",
            Mode::RecursionSelftest => "recursion-selftest",
            Mode::Certificate => "certificate",
        }
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Mode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Mode> {
        Mode::ALL
            .into_iter()
            .find(|m| m.as_str() == s)
            .ok_or_else(|| Error::Config(format!("unknown mode '{s}'")))
    }
}

/// Which `(n, m)` cells to run.
#[derive(Clone, Debug, PartialEq)]
pub enum Levels {
    /// `n = m = k` for each listed `k`.
    Diagonal(Vec<u32>),
    /// Every pair from the two lists.
    Grid { n: Vec<u32>, m: Vec<u32> },
}

impl Levels {
    pub fn cells(&self) -> Vec<(u32, u32)> {
        match self {
            Levels::Diagonal(ks) => ks.iter().map(|&k| (k, k)).collect(),
            Levels::Grid { n, m } => n
                .iter()
                .flat_map(|&a| m.iter().map(move |&b| (a, b)))
                .collect(),
        }
    }

    pub fn is_diagonal(&self) -> bool {
        matches!(self, Levels::Diagonal(_))
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentConfig {
    pub mode: Mode,
    pub problem: String,
    pub params: BuiltinParams,
    pub dim: usize,
    pub horizon: f64,
    /// One value is broadcast to every coordinate.
    pub xi: Vec<f64>,
    pub k: Option<Vec<u32>>,
    pub n: Option<Vec<u32>>,
    pub m: Option<Vec<u32>>,
    pub reps: usize,
    pub seed: u64,
    pub cost_ceiling: u64,
    pub pair_ceiling: u128,
    pub out: Option<PathBuf>,
    pub delta: f64,
    pub epsilons: Vec<f64>,
    pub k_scan: u64,
    pub particles: usize,
    pub steps: usize,
    pub selftest_cases: usize,
    pub soundness_draws: usize,
    pub extended: bool,
}

impl ExperimentConfig {
    pub fn new(mode: Mode) -> Self {
        ExperimentConfig {
            mode,
            problem: "law_only_linear".to_string(),
            params: BuiltinParams::default(),
            dim: 1,
            horizon: 1.0,
            xi: vec![1.0],
            k: None,
            n: None,
            m: None,
            reps: 200,
            seed: 7,
            cost_ceiling: DEFAULT_COST_CEILING,
            pair_ceiling: DEFAULT_PAIR_CEILING,
            out: None,
            delta: 0.5,
            epsilons: vec![0.5, 0.2, 0.1],
            k_scan: 200,
            particles: 2000,
            steps: 200,
            selftest_cases: 1000,
            soundness_draws: 500,
            extended: false,
        }
    }

    /// Applies one `key = value` assignment.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let key = key.trim();
        let value = value.trim();
        match key {
            "mode" => self.mode = value.parse()?,
            "problem" => self.problem = value.to_string(),
            "a" => self.params.a = parse(key, value)?,
            "b" => self.params.b = parse(key, value)?,
            "lipschitz" | "L" => self.params.lipschitz = parse(key, value)?,
            "dim" | "d" => self.dim = parse(key, value)?,
            "horizon" | "T" => self.horizon = parse(key, value)?,
            "xi" => self.xi = parse_list(key, value)?,
            "k" => self.k = Some(parse_range(key, value)?),
            "n" => self.n = Some(parse_range(key, value)?),
            "m" => self.m = Some(parse_range(key, value)?),
            "reps" | "R" => self.reps = parse(key, value)?,
            "seed" => self.seed = parse(key, value)?,
            "cost_ceiling" => self.cost_ceiling = parse(key, value)?,
            "pair_ceiling" => self.pair_ceiling = parse(key, value)?,
            "out" => self.out = Some(PathBuf::from(value)),
            "delta" => self.delta = parse(key, value)?,
            "epsilons" => self.epsilons = parse_list(key, value)?,
            "k_scan" => self.k_scan = parse(key, value)?,
            "particles" | "N" => self.particles = parse(key, value)?,
            "steps" | "M" => self.steps = parse(key, value)?,
            "selftest_cases" => self.selftest_cases = parse(key, value)?,
            "soundness_draws" => self.soundness_draws = parse(key, value)?,
            "extended" => self.extended = parse(key, value)?,
            other => return Err(Error::Config(format!("unknown key '{other}'"))),
        }
        Ok(())
    }

    /// Applies a `key=value` pair as given to `--set`.
    pub fn set_pair(&mut self, pair: &str) -> Result<()> {
        let (k, v) = pair
            .split_once('=')
            .ok_or_else(|| Error::Config(format!("expected key=value, got '{pair}'")))?;
        self.set(k, v)
    }

    /// Applies every assignment in a config file body.
    pub fn apply_text(&mut self, text: &str) -> Result<()> {
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line.split_once('=').ok_or_else(|| {
                Error::Config(format!("line {}: expected key = value", lineno + 1))
            })?;
            self.set(k, v)
                .map_err(|e| Error::Config(format!("line {}: {e}", lineno + 1)))?;
        }
        Ok(())
    }

    pub fn max_level(&self) -> u32 {
        if self.extended {
            EXTENDED_MAX_LEVEL
        } else {
            DESK_MAX_LEVEL
        }
    }

    pub fn levels(&self) -> Result<Levels> {
        let levels = match (&self.k, &self.n, &self.m) {
            (Some(_), Some(_), _) | (Some(_), _, Some(_)) => {
                return Err(Error::Config("give either k or n/m, not both".into()))
            }
            (Some(k), None, None) => Levels::Diagonal(k.clone()),
            (None, None, None) => Levels::Diagonal((1..=self.max_level()).collect()),
            (None, n, m) => Levels::Grid {
                n: n.clone()
                    .unwrap_or_else(|| (1..=self.max_level()).collect()),
                m: m.clone()
                    .unwrap_or_else(|| (1..=self.max_level()).collect()),
            },
        };
        let cells = levels.cells();
        if cells.is_empty() {
            return Err(Error::Config("level range is empty".into()));
        }
        for (n, m) in cells {
            if n == 0 || m == 0 {
                return Err(Error::Config("levels n and m must be at least 1".into()));
            }
            if n.max(m) > self.max_level() {
                return Err(Error::Config(format!(
                    "level {} exceeds {}; pass --extended for up to {EXTENDED_MAX_LEVEL}",
                    n.max(m),
                    self.max_level()
                )));
            }
        }
        Ok(levels)
    }

    pub fn initial_point(&self) -> Result<Vec<f64>> {
        match self.xi.len() {
            1 => Ok(vec![self.xi[0]; self.dim]),
            l if l == self.dim => Ok(self.xi.clone()),
            l => Err(Error::Config(format!(
                "xi has {l} entries but dim is {}",
                self.dim
            ))),
        }
    }

    pub fn build_problem(&self) -> Result<Problem> {
        if self.dim == 0 {
            return Err(Error::Config("dim must be at least 1".into()));
        }
        Problem::by_name(
            &self.problem,
            self.horizon,
            self.initial_point()?,
            &self.params,
        )
        .map_err(|e| match e {
            Error::InvalidArgument(msg) | Error::Config(msg) => Error::Config(msg),
            other => Error::Config(other.to_string()),
        })
    }

    pub fn validate(&self) -> Result<()> {
        self.build_problem()?;
        self.levels()?;
        let statistical = matches!(
            self.mode,
            Mode::Convergence | Mode::OracleCompare | Mode::VerifyBounds
        );
        if statistical && self.reps < 2 {
            return Err(Error::Config("reps must be at least 2".into()));
        }
        if !(self.delta > 0.0 && self.delta < 1.0) {
            return Err(Error::Config("delta must lie in (0, 1)".into()));
        }
        if self.epsilons.iter().any(|&e| !(e > 0.0 && e < 1.0)) {
            return Err(Error::Config("epsilons must lie in (0, 1)".into()));
        }
        if self.particles < 2 || self.steps == 0 {
            return Err(Error::Config(
                "particles ≥ 2 and steps ≥ 1 are required".into(),
            ));
        }
        if self.k_scan == 0 {
            return Err(Error::Config("k_scan must be at least 1".into()));
        }
        Ok(())
    }

    /// Canonical `key=value` echo of every setting that can influence output
    /// bytes. The output path and worker count are deliberately absent.
    pub fn echo(&self) -> BTreeMap<&'static str, String> {
        let list = |v: &Option<Vec<u32>>| {
            v.as_ref()
                .map(|v| v.iter().map(u32::to_string).collect::<Vec<_>>().join(","))
                .unwrap_or_else(|| "-".into())
        };
        let floats = |v: &[f64]| {
            v.iter()
                .map(|x| fmt_float(*x))
                .collect::<Vec<_>>()
                .join(",")
        };
        BTreeMap::from([
            ("mode", self.mode.to_string()),
            ("problem", self.problem.clone()),
            ("a", fmt_float(self.params.a)),
            ("b", fmt_float(self.params.b)),
            ("lipschitz", fmt_float(self.params.lipschitz)),
            ("dim", self.dim.to_string()),
            ("horizon", fmt_float(self.horizon)),
            ("xi", floats(&self.xi)),
            ("k", list(&self.k)),
            ("n", list(&self.n)),
            ("m", list(&self.m)),
            ("reps", self.reps.to_string()),
            ("seed", self.seed.to_string()),
            ("cost_ceiling", self.cost_ceiling.to_string()),
            ("pair_ceiling", self.pair_ceiling.to_string()),
            ("delta", fmt_float(self.delta)),
            ("epsilons", floats(&self.epsilons)),
            ("k_scan", self.k_scan.to_string()),
            ("particles", self.particles.to_string()),
            ("steps", self.steps.to_string()),
            ("selftest_cases", self.selftest_cases.to_string()),
            ("soundness_draws", self.soundness_draws.to_string()),
            ("extended", self.extended.to_string()),
        ])
    }
}

/// 17 significant digits, enough to round-trip any `f64`.
pub fn fmt_float(x: f64) -> String {
    if x.is_nan() {
        "nan".into()
    } else if x.is_infinite() {
        if x > 0.0 { "inf" } else { "-inf" }.into()
    } else {
        format!("{x:.16e}")
    }
}

fn parse<T: FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .parse()
        .map_err(|_| Error::Config(format!("cannot parse '{value}' for key '{key}'")))
}

fn parse_list<T: FromStr>(key: &str, value: &str) -> Result<Vec<T>> {
    value.split(',').map(|s| parse(key, s.trim())).collect()
}

/// `a..b` (inclusive), or a comma list.
fn parse_range(key: &str, value: &str) -> Result<Vec<u32>> {
    if let Some((lo, hi)) = value.split_once("..") {
        let lo: u32 = parse(key, lo.trim())?;
        let hi: u32 = parse(key, hi.trim().trim_start_matches('='))?;
        if lo > hi {
            return Err(Error::Config(format!(
                "empty range '{value}' for key '{key}'"
            )));
        }
        Ok((lo..=hi).collect())
    } else {
        parse_list(key, value)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_file_and_overrides() {
        let mut c = ExperimentConfig::new(Mode::Convergence);
        c.apply_text(
            "# demo\nproblem = sine_meanfield\nlipschitz = 1.5  # exact\n\nk = 1..3\nxi = 0.5\ndim=3\n",
        )
        .unwrap();
        c.set_pair("reps=50").unwrap();
        assert_eq!(c.problem, "sine_meanfield");
        assert_eq!(c.params.lipschitz, 1.5);
        assert_eq!(c.levels().unwrap(), Levels::Diagonal(vec![1, 2, 3]));
        assert_eq!(c.initial_point().unwrap(), vec![0.5; 3]);
        assert_eq!(c.reps, 50);
        c.validate().unwrap();
    }

    #[test]
    fn grid_levels() {
        let mut c = ExperimentConfig::new(Mode::CostTable);
        c.set("n", "1,2").unwrap();
        c.set("m", "2..3").unwrap();
        assert_eq!(
            c.levels().unwrap().cells(),
            vec![(1, 2), (1, 3), (2, 2), (2, 3)]
        );
    }

    #[test]
    fn rejects_bad_configs() {
        let mut c = ExperimentConfig::new(Mode::Convergence);
        assert!(c.set("bogus", "1").is_err());
        assert!(c.set("reps", "many").is_err());
        assert!(c.apply_text("no equals sign").is_err());
        c.set("k", "5").unwrap();
        assert!(c.levels().is_err());
        c.extended = true;
        assert!(c.levels().is_ok());
        c.set("k", "3..1").unwrap_err();
        c.set("problem", "unknown").unwrap();
        assert!(matches!(c.validate(), Err(Error::Config(_))));
        let mut c = ExperimentConfig::new(Mode::Convergence);
        c.set("reps", "1").unwrap();
        assert!(c.validate().is_err());
        let mut c = ExperimentConfig::new(Mode::Convergence);
        c.set("xi", "1,2").unwrap();
        assert!(c.validate().is_err());
    }

    #[test]
    fn float_format_round_trips() {
        for x in [0.1, 1.0 / 3.0, -2.5e-300, 6.02e23, std::f64::consts::E] {
            assert_eq!(fmt_float(x).parse::<f64>().unwrap(), x);
        }
        assert_eq!(fmt_float(1.0), "1.0000000000000000e0");
    }
}
