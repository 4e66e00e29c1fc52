//! The memory measure ζ: the time-averaged trace-norm distance between the
//! instantaneous generator and the closest constant-rate generator of the
//! same operator form,
//!
//! ```text
//! ζ = min_{γ*} (1/T) ∫₀ᵀ ‖L(t) − L*‖ dt.
//! ```
//!
//! For a fixed dissipator `D` the Choi matrix is linear in the rate, so
//! `‖L(t) − L*‖ = c·|γ(t) − γ*|` with `c = ‖Choi(D)‖₁`. The minimiser is then
//! the median of `γ` under the uniform time measure.
//!
//! The objective is evaluated without quadrature error. The horizon is cut at
//! the crossings `γ(t) = γ*`. On each piece the sign is fixed, so the piece
//! contributes `|ΔΛ − γ*Δt|`, where `Λ = ∫γ` comes from the channel's closed form.
//! The grid is only used to locate crossings.

use serde::Serialize;

use crate::channels::{ChannelKind, ChannelModel, GeneratorSpec, RateModel};
use crate::error::{QslError, Result};
use crate::numerics::{minimize_scalar, MinimizeSpec};
use crate::qmat::trace_norm_4;

pub const DEFAULT_GRID: usize = 2001;
pub const MIN_GRID: usize = 101;

/// Bisection steps used to pin a crossing inside one grid cell.
const CROSSING_STEPS: u32 = 80;
/// Bisection steps for the median.
const MEDIAN_STEPS: u32 = 200;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ZetaResult {
    pub zeta: f64,
    pub gamma_star: f64,
    pub horizon: f64,
    pub grid_size: usize,
}

/// Normalisation of the maximally entangled vector the Choi matrix is built on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ChoiNormalization {
    /// `Σ|ii⟩`.
    #[default]
    Unnormalized,
    /// `Σ|ii⟩/√2`; every trace norm is halved.
    Normalized,
}

impl ChoiNormalization {
    fn scale(&self) -> f64 {
        match self {
            ChoiNormalization::Unnormalized => 1.0,
            ChoiNormalization::Normalized => 0.5,
        }
    }
}

/// `‖Choi(D)‖₁` for the unit-rate dissipator of `kind`: 4 for dephasing,
/// `1 + √2` for amplitude damping.
pub fn choi_factor(kind: ChannelKind, normalization: ChoiNormalization) -> f64 {
    let unit = GeneratorSpec {
        kind,
        rate: 1.0,
        t: 0.0,
    };
    normalization.scale() * trace_norm_4(&unit.choi())
}

/// `‖Choi(L_t − L*)‖₁` with `L* = γ*·D`.
pub fn generator_choi_distance(c: &ChannelModel, t: f64, gamma_star: f64) -> Result<f64> {
    let diff = c.generator(t)?.minus_reference(gamma_star);
    Ok(trace_norm_4(&diff.choi()))
}

/// `γ` and `Λ` tabulated on a uniform grid.
struct RateTable<'m, M: ?Sized> {
    model: &'m M,
    t: Vec<f64>,
    gamma: Vec<f64>,
    lambda: Vec<f64>,
}

impl<'m, M: RateModel + ?Sized> RateTable<'m, M> {
    fn new(model: &'m M, horizon: f64, grid: usize) -> Result<Self> {
        if !(horizon.is_finite() && horizon > 0.0) {
            return Err(QslError::InvalidParameter(format!(
                "horizon must be positive, got {horizon}"
            )));
        }
        if grid < MIN_GRID {
            return Err(QslError::GridTooCoarse {
                got: grid,
                min: MIN_GRID,
            });
        }
        if let Some(t0) = model.first_singularity() {
            if t0 <= horizon {
                return Err(QslError::SingularRate { t: t0 });
            }
        }
        let step = horizon / (grid - 1) as f64;
        let t: Vec<f64> = (0..grid)
            .map(|k| {
                if k + 1 == grid {
                    horizon
                } else {
                    k as f64 * step
                }
            })
            .collect();
        let gamma = t
            .iter()
            .map(|&x| model.rate(x))
            .collect::<Result<Vec<_>>>()?;
        let lambda = t
            .iter()
            .map(|&x| model.integrated_rate(x))
            .collect::<Result<Vec<_>>>()?;
        if gamma.iter().chain(&lambda).any(|v| !v.is_finite()) {
            return Err(QslError::NonFinite("rate table"));
        }
        Ok(RateTable {
            model,
            t,
            gamma,
            lambda,
        })
    }

    fn horizon(&self) -> f64 {
        *self.t.last().unwrap()
    }

    fn range(&self) -> (f64, f64) {
        self.gamma
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &g| {
                (lo.min(g), hi.max(g))
            })
    }

    /// Point in cell `k` where `γ − level` changes sign.
    fn crossing(&self, k: usize, level: f64) -> Result<f64> {
        let (mut a, mut b) = (self.t[k], self.t[k + 1]);
        let below_at_a = self.gamma[k] <= level;
        for _ in 0..CROSSING_STEPS {
            let m = 0.5 * (a + b);
            if m <= a || m >= b {
                break;
            }
            if (self.model.rate(m)? <= level) == below_at_a {
                a = m;
            } else {
                b = m;
            }
        }
        Ok(0.5 * (a + b))
    }

    /// Calls `piece(t_start, t_end, Λ_start, Λ_end, below)` for consecutive
    /// pieces on which `γ ≤ level` holds or fails throughout.
    fn for_each_piece(
        &self,
        level: f64,
        mut piece: impl FnMut(f64, f64, f64, f64, bool),
    ) -> Result<()> {
        for k in 0..self.t.len() - 1 {
            let below_a = self.gamma[k] <= level;
            let below_b = self.gamma[k + 1] <= level;
            let (ta, tb, la, lb) = (self.t[k], self.t[k + 1], self.lambda[k], self.lambda[k + 1]);
            if below_a == below_b {
                piece(ta, tb, la, lb, below_a);
            } else {
                let tc = self.crossing(k, level)?;
                let lc = self.model.integrated_rate(tc)?;
                piece(ta, tc, la, lc, below_a);
                piece(tc, tb, lc, lb, below_b);
            }
        }
        Ok(())
    }

    /// Time spent with `γ ≤ level`.
    fn sublevel_measure(&self, level: f64) -> Result<f64> {
        let mut m = 0.0;
        self.for_each_piece(level, |a, b, _, _, below| {
            if below {
                m += b - a;
            }
        })?;
        Ok(m)
    }

    /// `∫₀ᵀ |γ − level| dt`. Neighbouring pieces of equal sign are merged
    /// first, so each maximal run costs a single difference of `Λ`.
    fn l1_distance(&self, level: f64) -> Result<f64> {
        let mut total = 0.0;
        let mut run: Option<(f64, f64, bool)> = None;
        let mut end = (0.0, 0.0);
        self.for_each_piece(level, |a, b, la, lb, below| {
            match run {
                Some((_, _, sign)) if sign == below => {}
                Some((t0, l0, _)) => {
                    total += ((end.1 - l0) - level * (end.0 - t0)).abs();
                    run = Some((a, la, below));
                }
                None => run = Some((a, la, below)),
            }
            end = (b, lb);
        })?;
        if let Some((t0, l0, _)) = run {
            total += ((end.1 - l0) - level * (end.0 - t0)).abs();
        }
        Ok(total)
    }

    /// Continuous median: the smallest level whose sublevel set covers `T/2`.
    fn median(&self) -> Result<f64> {
        let (mut lo, mut hi) = self.range();
        if lo == hi {
            return Ok(lo);
        }
        let half = 0.5 * self.horizon();
        for _ in 0..MEDIAN_STEPS {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            if self.sublevel_measure(mid)? >= half {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        Ok(0.5 * (lo + hi))
    }
}

fn finish<M: RateModel + ?Sized>(
    table: &RateTable<'_, M>,
    gamma_star: f64,
    normalization: ChoiNormalization,
) -> Result<ZetaResult> {
    let factor = choi_factor(table.model.kind(), normalization);
    let zeta = factor * table.l1_distance(gamma_star)? / table.horizon();
    if !zeta.is_finite() {
        return Err(QslError::NonFinite("zeta"));
    }
    Ok(ZetaResult {
        zeta,
        gamma_star,
        horizon: table.horizon(),
        grid_size: table.t.len(),
    })
}

/// ζ over `[0, horizon]` through the median of `γ`, with the default Choi
/// convention.
pub fn zeta<M: RateModel + ?Sized>(model: &M, horizon: f64, grid: usize) -> Result<ZetaResult> {
    zeta_with(model, horizon, grid, ChoiNormalization::Unnormalized)
}

pub fn zeta_with<M: RateModel + ?Sized>(
    model: &M,
    horizon: f64,
    grid: usize,
    normalization: ChoiNormalization,
) -> Result<ZetaResult> {
    let table = RateTable::new(model, horizon, grid)?;
    let gamma_star = table.median()?;
    finish(&table, gamma_star, normalization)
}

/// ζ by golden-section search of the same objective over `[min γ, max γ]`.
pub fn zeta_golden<M: RateModel + ?Sized>(
    model: &M,
    horizon: f64,
    grid: usize,
) -> Result<ZetaResult> {
    zeta_golden_with(model, horizon, grid, ChoiNormalization::Unnormalized)
}

pub fn zeta_golden_with<M: RateModel + ?Sized>(
    model: &M,
    horizon: f64,
    grid: usize,
    normalization: ChoiNormalization,
) -> Result<ZetaResult> {
    let table = RateTable::new(model, horizon, grid)?;
    let (lo, hi) = table.range();
    let gamma_star = if lo == hi {
        lo
    } else {
        let mut failure = None;
        let (x, _) = minimize_scalar(
            |g| match table.l1_distance(g) {
                Ok(v) => v,
                Err(e) => {
                    failure.get_or_insert(e);
                    f64::INFINITY
                }
            },
            &MinimizeSpec {
                rel_tol: 1e-12,
                max_iter: 400,
                ..MinimizeSpec::new(lo, hi)
            },
        )?;
        if let Some(e) = failure {
            return Err(e);
        }
        x
    };
    finish(&table, gamma_star, normalization)
}
