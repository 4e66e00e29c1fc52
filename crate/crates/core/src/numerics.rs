//! Scalar numerical kernels: adaptive Simpson quadrature, golden-section
//! minimisation, central differences and Spearman rank correlation.
//!
//! Everything here is sequential and deterministic: the same inputs give
//! bit-identical outputs across runs.

use crate::error::{QslError, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadratureSpec {
    pub abs_tol: f64,
    /// Depth 50 resolves features down to ~1e-16 of the interval, e.g. the
    /// √ε-wide onset of the Fisher speed for nearly pure states.
    pub max_depth: u32,
    /// Refuse to accept panels whose discrete second differences flip sign
    /// (a kink inside the panel) until they are narrow.
    pub kink_guard: bool,
}

impl Default for QuadratureSpec {
    fn default() -> Self {
        QuadratureSpec {
            abs_tol: 1e-9,
            max_depth: 50,
            kink_guard: true,
        }
    }
}

impl QuadratureSpec {
    pub fn with_tol(abs_tol: f64) -> Self {
        QuadratureSpec {
            abs_tol,
            ..Self::default()
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MinimizeSpec {
    pub lo: f64,
    pub hi: f64,
    pub rel_tol: f64,
    pub max_iter: usize,
}

impl MinimizeSpec {
    pub fn new(lo: f64, hi: f64) -> Self {
        MinimizeSpec {
            lo,
            hi,
            rel_tol: 1e-10,
            max_iter: 200,
        }
    }
}

/// Number of equal panels the interval is cut into before adaptive refinement.
const INITIAL_PANELS: usize = 8;
/// Kink-guarded panels narrower than this fraction of the interval are
/// accepted on the Richardson test alone.
const KINK_MIN_FRACTION: f64 = 1.0 / 4096.0;

struct Panel {
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
}

struct Simpson<'f, F> {
    f: &'f mut F,
    spec: QuadratureSpec,
    min_width: f64,
}

impl<F: FnMut(f64) -> f64> Simpson<'_, F> {
    fn eval(&mut self, x: f64) -> Result<f64> {
        let y = (self.f)(x);
        if y.is_finite() {
            Ok(y)
        } else {
            Err(QslError::NonFinite("integrand"))
        }
    }

    fn refine(&mut self, p: Panel, tol: f64, depth: u32) -> Result<f64> {
        let m = 0.5 * (p.a + p.b);
        let h = p.b - p.a;
        let lm = 0.5 * (p.a + m);
        let rm = 0.5 * (m + p.b);
        let flm = self.eval(lm)?;
        let frm = self.eval(rm)?;
        let left = h / 12.0 * (p.fa + 4.0 * flm + p.fm);
        let right = h / 12.0 * (p.fm + 4.0 * frm + p.fb);
        let delta = left + right - p.whole;

        let precision_floor = 64.0 * f64::EPSILON * (left.abs() + right.abs());
        let converged = delta.abs() <= 15.0 * tol.max(precision_floor);
        let kinked = self.spec.kink_guard && h > self.min_width && {
            let d1 = p.fa - 2.0 * flm + p.fm;
            let d2 = p.fm - 2.0 * frm + p.fb;
            d1 * d2 < 0.0 && d1.abs().min(d2.abs()) > tol
        };
        if converged && !kinked {
            return Ok(left + right + delta / 15.0);
        }
        if depth >= self.spec.max_depth {
            return Err(QslError::NoConvergence {
                what: "adaptive Simpson quadrature",
            });
        }
        let l = Panel {
            a: p.a,
            b: m,
            fa: p.fa,
            fm: flm,
            fb: p.fm,
            whole: left,
        };
        let r = Panel {
            a: m,
            b: p.b,
            fa: p.fm,
            fm: frm,
            fb: p.fb,
            whole: right,
        };
        Ok(self.refine(l, 0.5 * tol, depth + 1)? + self.refine(r, 0.5 * tol, depth + 1)?)
    }
}

/// Adaptive Simpson estimate of `∫_a^b f`. Fails when an integrand value is
/// non-finite or a panel is still unresolved at `max_depth`.
pub fn integrate<F: FnMut(f64) -> f64>(
    mut f: F,
    a: f64,
    b: f64,
    spec: &QuadratureSpec,
) -> Result<f64> {
    if !(a.is_finite() && b.is_finite()) || a >= b {
        return Err(QslError::InvalidParameter(format!(
            "integration interval [{a}, {b}] is empty or non-finite"
        )));
    }
    if spec.abs_tol <= 0.0 {
        return Err(QslError::InvalidParameter(
            "quadrature tolerance must be positive".into(),
        ));
    }
    let panels = if spec.kink_guard { INITIAL_PANELS } else { 1 };
    let width = (b - a) / panels as f64;
    let mut s = Simpson {
        f: &mut f,
        spec: *spec,
        min_width: (b - a) * KINK_MIN_FRACTION,
    };
    let mut total = 0.0;
    let mut x0 = a;
    let mut f0 = s.eval(a)?;
    for k in 1..=panels {
        let x1 = if k == panels { b } else { a + width * k as f64 };
        let xm = 0.5 * (x0 + x1);
        let fm = s.eval(xm)?;
        let f1 = s.eval(x1)?;
        let whole = (x1 - x0) / 6.0 * (f0 + 4.0 * fm + f1);
        let panel = Panel {
            a: x0,
            b: x1,
            fa: f0,
            fm,
            fb: f1,
            whole,
        };
        total += s.refine(panel, spec.abs_tol / panels as f64, 0)?;
        x0 = x1;
        f0 = f1;
    }
    Ok(total)
}

const INV_PHI: f64 = 0.618_033_988_749_894_9;

/// Golden-section search for the minimum of a unimodal `f` on `[lo, hi]`.
/// Returns `(x*, f(x*))`; the endpoints are compared at the end so the
/// returned value never exceeds `f(lo)` or `f(hi)`.
pub fn minimize_scalar<F: FnMut(f64) -> f64>(mut f: F, spec: &MinimizeSpec) -> Result<(f64, f64)> {
    let MinimizeSpec {
        lo,
        hi,
        rel_tol,
        max_iter,
    } = *spec;
    // written so that NaN bounds are rejected too
    #[allow(clippy::neg_cmp_op_on_partial_ord)]
    if !(lo < hi) {
        return Err(QslError::InvalidParameter(format!(
            "minimisation bracket [{lo}, {hi}] is empty"
        )));
    }
    let target = rel_tol * (hi - lo);
    let (mut a, mut b) = (lo, hi);
    let mut c = b - INV_PHI * (b - a);
    let mut d = a + INV_PHI * (b - a);
    let mut fc = f(c);
    let mut fd = f(d);
    let mut iter = 0;
    while b - a > target {
        if iter == max_iter {
            return Err(QslError::NoConvergence {
                what: "golden-section search",
            });
        }
        iter += 1;
        if fc <= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - INV_PHI * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + INV_PHI * (b - a);
            fd = f(d);
        }
    }
    let mid = 0.5 * (a + b);
    let candidates = [(mid, f(mid)), (c, fc), (d, fd), (lo, f(lo)), (hi, f(hi))];
    Ok(candidates
        .into_iter()
        .fold((f64::NAN, f64::INFINITY), |best, cand| {
            if cand.1 < best.1 {
                cand
            } else {
                best
            }
        }))
}

/// Central difference `(f(t+h) − f(t−h)) / 2h`.
pub fn finite_diff<F: Fn(f64) -> f64>(f: F, t: f64, h: f64) -> f64 {
    (f(t + h) - f(t - h)) / (2.0 * h)
}

/// Average ranks (1-based); values within `tie_tol · max|v|` of their sorted
/// neighbour share a rank.
fn ranks(v: &[f64], tie_tol: f64) -> Vec<f64> {
    let mut idx: Vec<usize> = (0..v.len()).collect();
    idx.sort_by(|&i, &j| v[i].total_cmp(&v[j]));
    let scale = v.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    let eps = tie_tol * scale;
    let mut out = vec![0.0; v.len()];
    let mut start = 0;
    while start < idx.len() {
        let mut end = start + 1;
        while end < idx.len() && v[idx[end]] - v[idx[end - 1]] <= eps {
            end += 1;
        }
        let rank = 0.5 * ((start + 1) + end) as f64;
        for &i in &idx[start..end] {
            out[i] = rank;
        }
        start = end;
    }
    out
}

/// Spearman rank correlation with tie handling. `None` when it is undefined
/// (fewer than two points or one of the series is constant after tying).
pub fn spearman(x: &[f64], y: &[f64], tie_tol: f64) -> Option<f64> {
    if x.len() != y.len() || x.len() < 2 {
        return None;
    }
    let rx = ranks(x, tie_tol);
    let ry = ranks(y, tie_tol);
    let n = rx.len() as f64;
    let mx = rx.iter().sum::<f64>() / n;
    let my = ry.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in rx.iter().zip(&ry) {
        sxy += (a - mx) * (b - my);
        sxx += (a - mx) * (a - mx);
        syy += (b - my) * (b - my);
    }
    if sxx == 0.0 || syy == 0.0 {
        return None;
    }
    Some(sxy / (sxx * syy).sqrt())
}
