//! Brownian paths materialized on the uniform grid `{kT/mⁿ}`.
//!
//! A path is generated once, at the level where its index is created, and
//! every coarser query is answered by lookup: the level-`j` grid is a subset
//! of the level-`n` grid whenever `j ≤ n`.

use crate::error::{Error, Result};
use crate::ledger::CostLedger;
use crate::rng::{fill_gaussian, IndexKey, Tag};

/// `m^level` with overflow detection.
pub fn grid_cells(branching: u32, level: u32) -> Result<u64> {
    (branching as u64)
        .checked_pow(level)
        .ok_or(Error::Overflow("grid size m^n"))
}

/// A grid point: its integer index on the level grid and its time.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GridPoint {
    pub index: u64,
    pub time: f64,
}

/// Largest level-`level` grid point not exceeding `t`.
///
/// The index is `⌊t·mʲ/T⌋`, except that a value within a few ulps below an
/// integer is rounded up, so a `t` that is a grid point in exact arithmetic
/// never lands in the previous cell.
pub fn snap(t: f64, level: u32, branching: u32, horizon: f64) -> Result<GridPoint> {
    if !(horizon > 0.0) {
        return Err(Error::invalid(format!(
            "horizon must be positive, got {horizon}"
        )));
    }
    if !(0.0..=horizon).contains(&t) {
        return Err(Error::TimeOutOfRange { t, horizon });
    }
    if branching == 0 {
        return Err(Error::invalid("branching m must be at least 1"));
    }
    let cells = grid_cells(branching, level)?;
    let index = snap_index(t, cells, horizon);
    Ok(GridPoint {
        index,
        time: index as f64 * horizon / cells as f64,
    })
}

#[inline]
fn snap_index(t: f64, cells: u64, horizon: f64) -> u64 {
    let x = t / horizon * cells as f64;
    let nearest = x.round();
    let k = if (x - nearest).abs() <= 4.0 * f64::EPSILON * nearest.max(1.0) {
        nearest
    } else {
        x.floor()
    };
    (k.max(0.0) as u64).min(cells)
}

/// One Brownian motion `W^θ` on the grid `{kT/mⁿ : 0 ≤ k ≤ mⁿ}` in `ℝ^d`.
#[derive(Clone, Debug)]
pub struct GridPath {
    key: IndexKey,
    level: u32,
    branching: u32,
    horizon: f64,
    dim: usize,
    cells: u64,
    /// Row-major `(mⁿ + 1) × d`.
    values: Vec<f64>,
}

impl GridPath {
    /// Builds the whole grid, one Gaussian increment vector per step with the
    /// step index as tag. Charges `mⁿ·d` scalar draws.
    pub fn generate(
        key: &IndexKey,
        level: u32,
        branching: u32,
        horizon: f64,
        dim: usize,
        ledger: &mut CostLedger,
    ) -> Result<GridPath> {
        if level == 0 {
            return Err(Error::invalid("path level must be at least 1"));
        }
        if branching == 0 {
            return Err(Error::invalid("branching m must be at least 1"));
        }
        if !(horizon > 0.0) || !horizon.is_finite() {
            return Err(Error::invalid(format!(
                "horizon must be positive, got {horizon}"
            )));
        }
        if dim == 0 {
            return Err(Error::invalid("dimension must be at least 1"));
        }
        let cells = grid_cells(branching, level)?;
        let len = usize::try_from(cells)
            .ok()
            .and_then(|c| c.checked_add(1))
            .and_then(|c| c.checked_mul(dim))
            .ok_or(Error::Overflow("grid path storage"))?;

        let dt = horizon / cells as f64;
        let mut values = vec![0.0; len];
        let mut incr = vec![0.0; dim];
        for step in 0..cells as usize {
            fill_gaussian(key, Tag::increment(step as u64), dt, &mut incr);
            let (prev, next) = values[step * dim..(step + 2) * dim].split_at_mut(dim);
            for ((n, p), dw) in next.iter_mut().zip(prev.iter()).zip(&incr) {
                *n = p + dw;
            }
        }
        ledger.charge_draws(cells * dim as u64);
        ledger.record(key, Tag::increment(0));

        Ok(GridPath {
            key: key.clone(),
            level,
            branching,
            horizon,
            dim,
            cells,
            values,
        })
    }

    /// `W^θ(snap(t, j))`, read from the stored grid. No randomness is drawn.
    pub fn value_at(&self, t: f64, query_level: u32) -> Result<&[f64]> {
        if query_level > self.level {
            return Err(Error::LevelTooFine {
                created: self.level,
                requested: query_level,
            });
        }
        if !(0.0..=self.horizon).contains(&t) {
            return Err(Error::TimeOutOfRange {
                t,
                horizon: self.horizon,
            });
        }
        let coarse = grid_cells(self.branching, query_level)?;
        let stride = self.cells / coarse;
        let index = snap_index(t, coarse, self.horizon) * stride;
        Ok(self.at_index(index as usize))
    }

    /// Stored value at fine-grid index `k`.
    pub fn at_index(&self, k: usize) -> &[f64] {
        &self.values[k * self.dim..(k + 1) * self.dim]
    }

    pub fn terminal(&self) -> &[f64] {
        self.at_index(self.cells as usize)
    }

    pub fn key(&self) -> &IndexKey {
        &self.key
    }

    pub fn level(&self) -> u32 {
        self.level
    }

    pub fn branching(&self) -> u32 {
        self.branching
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Number of grid cells `mⁿ`; there are `mⁿ + 1` stored points.
    pub fn cells(&self) -> u64 {
        self.cells
    }

    pub fn times(&self) -> impl Iterator<Item = f64> + '_ {
        (0..=self.cells).map(move |k| k as f64 * self.horizon / self.cells as f64)
    }
}
