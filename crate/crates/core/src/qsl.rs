//! Quantum speed limit bounds for the channels in [`crate::channels`].
//!
//! * Relative purity (MT type): `4θ² tr ρ0² / (π² ⟨‖L_t(ρ0)‖_hs⟩)`, `θ = arccos P(τ)`.
//! * Fisher speed: `V = ½√F_Q`, instantaneous or averaged over `[0, τ]`.
//! * Bures angle (Deffner–Lutz): `sin² B(ρ0, ρτ) / ⟨‖ρ̇_t‖⟩`.
//! * Mixed-state (Wu): `(1 − P(τ)) tr ρ0² / ⟨‖ρ̇_t‖⟩`.
//!
//! `⟨·⟩` is the time average over `[0, τ]`. The relative-purity speed
//! applies the generator to the initial state; the other two use `ρ̇_t`.
//! Closed forms for the dephasing and damping channels sit next to the
//! generic paths and must agree with them.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::channels::{ChannelKind, ChannelModel};
use crate::error::{QslError, Result};
use crate::numerics::{integrate, QuadratureSpec};
use crate::qmat::{
    bloch_to_rho, bures_fidelity, clamped_acos, purity, relative_purity, BlochState,
    HermitianMatrix2, Matrix2,
};

/// SLD blocks with `λᵢ + λⱼ` below this are dropped.
pub const SLD_RANK_EPS: f64 = 1e-12;
/// Speed averages below this make a bound undefined.
const DEGENERATE_SPEED: f64 = 1e-300;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Norm {
    Op,
    Hs,
    Tr,
}

impl Norm {
    pub const ALL: [Norm; 3] = [Norm::Op, Norm::Hs, Norm::Tr];

    fn of(&self, m: &HermitianMatrix2) -> f64 {
        let n = m.norms();
        match self {
            Norm::Op => n.op,
            Norm::Hs => n.hs,
            Norm::Tr => n.tr,
        }
    }

    fn as_str(&self) -> &'static str {
        match self {
            Norm::Op => "op",
            Norm::Hs => "hs",
            Norm::Tr => "tr",
        }
    }
}

/// Serialised by name, e.g. `relative_purity` or `bures_dl_op`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BoundKind {
    RelativePurity,
    FisherSpeed,
    BuresDl(Norm),
    WuMixed(Norm),
}

impl BoundKind {
    /// Everything except [`BoundKind::FisherSpeed`] is a time.
    pub fn is_time(&self) -> bool {
        !matches!(self, BoundKind::FisherSpeed)
    }
}

impl fmt::Display for BoundKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            BoundKind::RelativePurity => f.write_str("relative_purity"),
            BoundKind::FisherSpeed => f.write_str("fisher_speed"),
            BoundKind::BuresDl(n) => write!(f, "bures_dl_{}", n.as_str()),
            BoundKind::WuMixed(n) => write!(f, "wu_mixed_{}", n.as_str()),
        }
    }
}

impl FromStr for BoundKind {
    type Err = QslError;

    fn from_str(s: &str) -> Result<Self> {
        let norm = |n: &str| match n {
            "op" => Ok(Norm::Op),
            "hs" => Ok(Norm::Hs),
            "tr" => Ok(Norm::Tr),
            _ => Err(QslError::InvalidParameter(format!("unknown norm '{n}'"))),
        };
        match s {
            "relative_purity" | "rp" => Ok(BoundKind::RelativePurity),
            "fisher_speed" | "fisher" => Ok(BoundKind::FisherSpeed),
            "bures_dl" | "bures" => Ok(BoundKind::BuresDl(Norm::Op)),
            "wu_mixed" | "wu" => Ok(BoundKind::WuMixed(Norm::Op)),
            _ => {
                if let Some(n) = s.strip_prefix("bures_dl_") {
                    Ok(BoundKind::BuresDl(norm(n)?))
                } else if let Some(n) = s.strip_prefix("wu_mixed_") {
                    Ok(BoundKind::WuMixed(norm(n)?))
                } else {
                    Err(QslError::InvalidParameter(format!(
                        "unknown bound kind '{s}'"
                    )))
                }
            }
        }
    }
}

impl Serialize for BoundKind {
    fn serialize<S: serde::Serializer>(
        &self,
        serializer: S,
    ) -> std::result::Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for BoundKind {
    fn deserialize<D: serde::Deserializer<'de>>(
        deserializer: D,
    ) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct QslResult {
    /// A time, or a speed for [`BoundKind::FisherSpeed`].
    pub value: f64,
    pub kind: BoundKind,
    pub tau: f64,
    pub channel: String,
    pub state: BlochState,
}

/// Which speed factor the closed damping relative-purity form uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum AdSpeedForm {
    /// `√(r_x² + r_y² + 4(1+r_z)²)`, what `‖L_t(ρ0)‖_hs` gives.
    #[default]
    Derived,
    /// `√(r_x² + r_y² + 4(1+r_z²))` as typeset in the literature.
    Printed,
}

/// Switches for [`compute`].
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct BoundOptions {
    /// Use the channel's closed form where one exists.
    pub closed_form: bool,
    pub ad_speed: AdSpeedForm,
}

fn check_tau(tau: f64) -> Result<()> {
    if tau.is_finite() && tau > 0.0 {
        Ok(())
    } else {
        Err(QslError::InvalidParameter(format!(
            "driving time must be positive, got {tau}"
        )))
    }
}

fn time_average(f: impl FnMut(f64) -> f64, tau: f64) -> Result<f64> {
    Ok(integrate(f, 0.0, tau, &QuadratureSpec::default())? / tau)
}

/// Runs `f` with error capture, since quadrature integrands are infallible.
fn fallible_average(mut f: impl FnMut(f64) -> Result<f64>, tau: f64) -> Result<f64> {
    let mut failure = None;
    let avg = time_average(
        |t| match f(t) {
            Ok(v) => v,
            Err(e) => {
                failure.get_or_insert(e);
                0.0
            }
        },
        tau,
    )?;
    match failure {
        Some(e) => Err(e),
        None => Ok(avg),
    }
}

fn ratio(numerator: f64, speed: f64, what: &str) -> Result<f64> {
    // a NaN speed is degenerate as well
    #[allow(clippy::neg_cmp_op_on_partial_ord)]
    if !(speed > DEGENERATE_SPEED) {
        return Err(QslError::Degenerate(format!(
            "{what}: evolution speed vanishes on [0, τ]"
        )));
    }
    let v = numerator / speed;
    if v.is_finite() {
        Ok(v)
    } else {
        Err(QslError::NonFinite("speed limit"))
    }
}

fn result(value: f64, kind: BoundKind, tau: f64, c: &ChannelModel, s: &BlochState) -> QslResult {
    QslResult {
        value,
        kind,
        tau,
        channel: c.tag(),
        state: *s,
    }
}

fn require(c: &ChannelModel, kind: ChannelKind, what: &str) -> Result<()> {
    if c.kind() == kind {
        Ok(())
    } else {
        Err(QslError::InvalidParameter(format!(
            "{what} needs a {kind:?} channel, got {}",
            c.family()
        )))
    }
}

/// `(θ, tr ρ0², ⟨‖L_t(ρ0)‖_hs⟩)` shared by both relative-purity branches.
fn relative_purity_parts(c: &ChannelModel, s: &BlochState, tau: f64) -> Result<(f64, f64, f64)> {
    check_tau(tau)?;
    c.ensure_regular_until(tau)?;
    let rho0 = bloch_to_rho(s)?;
    let theta = clamped_acos(relative_purity(&rho0, &c.evolve(s, tau)?));
    let speed = fallible_average(|t| Ok(c.apply_generator(&rho0, t)?.norms().hs), tau)?;
    Ok((theta, purity(&rho0), speed))
}

/// `4θ² tr ρ0² / (π² ⟨‖L_t(ρ0)‖_hs⟩)` by quadrature.
pub fn qsl_relative_purity(c: &ChannelModel, s: &BlochState, tau: f64) -> Result<QslResult> {
    let (theta, p0, speed) = relative_purity_parts(c, s, tau)?;
    let v = ratio(
        4.0 * theta * theta * p0 / (PI * PI),
        speed,
        "relative-purity bound",
    )?;
    Ok(result(v, BoundKind::RelativePurity, tau, c, s))
}

/// The weaker first branch `|cos θ − 1| tr ρ0² / ⟨‖L_t(ρ0)‖_hs⟩`, for diagnostics.
pub fn qsl_relative_purity_first_branch(c: &ChannelModel, s: &BlochState, tau: f64) -> Result<f64> {
    let (theta, p0, speed) = relative_purity_parts(c, s, tau)?;
    ratio(
        (theta.cos() - 1.0).abs() * p0,
        speed,
        "relative-purity bound",
    )
}

/// Dephasing closed form: `4√2 arccos(P)² tr ρ0² / (π² ⟨|ṗ/p| r_⊥⟩)` with
/// `P = (1 + r_z² + p r_⊥²)/(1 + |r|²)`.
pub fn qsl_rp_dephasing_closed(c: &ChannelModel, s: &BlochState, tau: f64) -> Result<QslResult> {
    require(c, ChannelKind::Dephasing, "dephasing relative-purity form")?;
    check_tau(tau)?;
    s.validate()?;
    c.ensure_regular_until(tau)?;
    let perp = s.transverse_sq().sqrt();
    if perp == 0.0 {
        return Err(QslError::Degenerate(
            "state on the z axis is invariant under dephasing".into(),
        ));
    }
    let p = c.decoherence_p(tau)?;
    let norm_sq = s.norm_sq();
    let rp = (1.0 + s.rz * s.rz + p * perp * perp) / (1.0 + norm_sq);
    let p0 = 0.5 * (1.0 + norm_sq);
    let speed = fallible_average(
        |t| Ok((c.decoherence_dp(t)? / c.decoherence_p(t)?).abs() * perp),
        tau,
    )?;
    let theta = clamped_acos(rp);
    let v = ratio(
        4.0 * 2f64.sqrt() * theta * theta * p0 / (PI * PI),
        speed,
        "relative-purity bound",
    )?;
    Ok(result(v, BoundKind::RelativePurity, tau, c, s))
}

/// Damping closed form: `4√2 arccos(P)² tr ρ0² / (π² ⟨|ṗ/p| √(r_⊥² + 4(1+r_z)²)⟩)`
/// with `P = (1 − r_z + p(r_⊥² + p r_z(1+r_z)))/(1 + |r|²)`.
pub fn qsl_rp_ad_closed(
    c: &ChannelModel,
    s: &BlochState,
    tau: f64,
    form: AdSpeedForm,
) -> Result<QslResult> {
    require(
        c,
        ChannelKind::AmplitudeDamping,
        "damping relative-purity form",
    )?;
    check_tau(tau)?;
    s.validate()?;
    c.ensure_regular_until(tau)?;
    let perp_sq = s.transverse_sq();
    let weight = match form {
        AdSpeedForm::Derived => (perp_sq + 4.0 * (1.0 + s.rz).powi(2)).sqrt(),
        AdSpeedForm::Printed => (perp_sq + 4.0 * (1.0 + s.rz * s.rz)).sqrt(),
    };
    let p = c.decoherence_p(tau)?;
    let norm_sq = s.norm_sq();
    let rp = (1.0 - s.rz + p * (perp_sq + p * s.rz * (1.0 + s.rz))) / (1.0 + norm_sq);
    let theta = clamped_acos(rp);
    if theta == 0.0 && perp_sq == 0.0 && s.rz <= -1.0 {
        return Err(QslError::Degenerate(
            "ground state is a fixed point of amplitude damping".into(),
        ));
    }
    let p0 = 0.5 * (1.0 + norm_sq);
    let speed = fallible_average(
        |t| Ok((c.decoherence_dp(t)? / c.decoherence_p(t)?).abs() * weight),
        tau,
    )?;
    let v = ratio(
        4.0 * 2f64.sqrt() * theta * theta * p0 / (PI * PI),
        speed,
        "relative-purity bound",
    )?;
    Ok(result(v, BoundKind::RelativePurity, tau, c, s))
}

/// `ρ̇` rotated into the eigenbasis of `ρ`, with the eigenvalues.
fn in_eigenbasis(
    rho: &HermitianMatrix2,
    rho_dot: &HermitianMatrix2,
) -> ([f64; 2], Matrix2, Matrix2) {
    let e = rho.eigen();
    let u = e.unitary();
    (e.values, u, u.adjoint() * rho_dot.to_matrix() * u)
}

/// Symmetric logarithmic derivative: `ρ̇ = (ρL + Lρ)/2`, solved blockwise in
/// the eigenbasis of `ρ`; blocks with `λᵢ + λⱼ ≤ ε` are set to zero.
pub fn sld(rho: &HermitianMatrix2, rho_dot: &HermitianMatrix2) -> HermitianMatrix2 {
    let (lambda, u, x) = in_eigenbasis(rho, rho_dot);
    let mut l = Matrix2::zero();
    for i in 0..2 {
        for j in 0..2 {
            let s = lambda[i] + lambda[j];
            if s > SLD_RANK_EPS {
                l.0[i][j] = x.0[i][j] * (2.0 / s);
            }
        }
    }
    (u * l * u.adjoint()).hermitian_part()
}

/// `Σ 2|⟨i|ρ̇|j⟩|²/(λᵢ + λⱼ)`, which equals `tr(ρL²)`.
fn fisher_from(rho: &HermitianMatrix2, rho_dot: &HermitianMatrix2) -> f64 {
    let (lambda, _, x) = in_eigenbasis(rho, rho_dot);
    let mut f = 0.0;
    for i in 0..2 {
        for j in 0..2 {
            let s = lambda[i] + lambda[j];
            if s > SLD_RANK_EPS {
                f += 2.0 * x.0[i][j].norm_sqr() / s;
            }
        }
    }
    f.max(0.0)
}

/// `tr(ρL²)` for an SLD computed from matrices; the cross-check of [`fisher_q`].
pub fn fisher_sld(rho: &HermitianMatrix2, rho_dot: &HermitianMatrix2) -> f64 {
    fisher_from(rho, rho_dot)
}

/// Quantum Fisher information of the trajectory with respect to time.
///
/// Evaluated as `|ṙ|² + (r·ṙ)²/(1 − |r|²)`, the Bloch-vector form of
/// `tr(ρL²)`, with the channel's cancellation-free `1 − |r|²`. On the
/// boundary of the ball the radial block is dropped, as in [`sld`].
pub fn fisher_q(c: &ChannelModel, s: &BlochState, t: f64) -> Result<f64> {
    let r = c.bloch_at(s, t)?;
    let v = c.bloch_velocity(s, t)?;
    let defect = c.purity_defect(s, t)?;
    let speed_sq: f64 = v.iter().map(|x| x * x).sum();
    let radial: f64 = r.iter().zip(&v).map(|(a, b)| a * b).sum();
    let f = if defect > 0.0 {
        speed_sq + radial * radial / defect
    } else {
        speed_sq
    };
    if f.is_finite() {
        Ok(f.max(0.0))
    } else {
        Err(QslError::NonFinite("quantum Fisher information"))
    }
}

/// `V(t) = ½√F_Q(t)`.
pub fn v_qsl(c: &ChannelModel, s: &BlochState, t: f64) -> Result<f64> {
    Ok(0.5 * fisher_q(c, s, t)?.sqrt())
}

/// `(1/τ) ∫₀^τ V dt`.
pub fn v_qsl_avg(c: &ChannelModel, s: &BlochState, tau: f64) -> Result<QslResult> {
    check_tau(tau)?;
    s.validate()?;
    // F_Q(0) = 0 for pure states although F_Q(0⁺) is finite; sample the
    // right limit so the quadrature sees a continuous integrand
    let floor = tau * 1e-12;
    let v = fallible_average(|t| v_qsl(c, s, t.max(floor)), tau)?;
    Ok(result(v, BoundKind::FisherSpeed, tau, c, s))
}

/// `Λ^norm_τ = ⟨‖ρ̇_t‖_norm⟩`.
pub fn lambda_norm(c: &ChannelModel, s: &BlochState, tau: f64, norm: Norm) -> Result<f64> {
    check_tau(tau)?;
    fallible_average(|t| Ok(norm.of(&c.time_derivative(s, t)?)), tau)
}

/// `sin² B(ρ0, ρτ) / Λ^norm_τ`.
pub fn qsl_bures_dl(c: &ChannelModel, s: &BlochState, tau: f64, norm: Norm) -> Result<QslResult> {
    check_tau(tau)?;
    let rho0 = bloch_to_rho(s)?;
    let sin_sq = 1.0 - bures_fidelity(&rho0, &c.evolve(s, tau)?);
    let v = ratio(sin_sq, lambda_norm(c, s, tau, norm)?, "Bures-angle bound")?;
    Ok(result(v, BoundKind::BuresDl(norm), tau, c, s))
}

/// Shared damping denominator `⟨|ṗ| √(r_⊥² + 4p²(1+r_z)²)⟩`, which equals
/// `Λ^tr = 2Λ^op`.
fn ad_closed_speed(c: &ChannelModel, s: &BlochState, tau: f64) -> Result<f64> {
    let perp_sq = s.transverse_sq();
    let lift = 4.0 * (1.0 + s.rz).powi(2);
    fallible_average(
        |t| {
            let p = c.decoherence_p(t)?;
            Ok(c.decoherence_dp(t)?.abs() * (perp_sq + lift * p * p).sqrt())
        },
        tau,
    )
}

/// Damping closed form of the Bures bound,
/// `[1 + r_z − p(r_⊥² + p r_z(1+r_z)) − h₁h₂] / ⟨|ṗ| √(r_⊥² + 4p²(1+r_z)²)⟩`
/// with `h₁ = √(1 − |r|²)`, `h₂ = √(p²(2 − r_⊥² + 2r_z − p²(1+r_z)²))`.
/// The numerator is `2 sin² B` and the denominator `2Λ^op`, so this is the
/// operator-norm bound.
pub fn qsl_bures_ad_closed(c: &ChannelModel, s: &BlochState, tau: f64) -> Result<QslResult> {
    require(c, ChannelKind::AmplitudeDamping, "damping Bures form")?;
    check_tau(tau)?;
    s.validate()?;
    let p = c.decoherence_p(tau)?;
    let perp_sq = s.transverse_sq();
    let h1 = (1.0 - s.norm_sq()).max(0.0).sqrt();
    let radicand = p * p * (2.0 - perp_sq + 2.0 * s.rz - p * p * (1.0 + s.rz).powi(2));
    if radicand < -1e-12 {
        return Err(QslError::NegativeRadicand {
            what: "h2",
            value: radicand,
        });
    }
    let h2 = radicand.max(0.0).sqrt();
    let numerator = 1.0 + s.rz - p * (perp_sq + p * s.rz * (1.0 + s.rz)) - h1 * h2;
    let v = ratio(
        numerator.max(0.0),
        ad_closed_speed(c, s, tau)?,
        "Bures-angle bound",
    )?;
    Ok(result(v, BoundKind::BuresDl(Norm::Op), tau, c, s))
}

/// `(1 − P(τ)) tr ρ0² / Λ^norm_τ`, i.e. `sin²φ tr ρ0² / Λ` with `cos φ = √P`.
pub fn qsl_wu_mixed(c: &ChannelModel, s: &BlochState, tau: f64, norm: Norm) -> Result<QslResult> {
    check_tau(tau)?;
    let rho0 = bloch_to_rho(s)?;
    let rp = relative_purity(&rho0, &c.evolve(s, tau)?).min(1.0);
    let v = ratio(
        (1.0 - rp) * purity(&rho0),
        lambda_norm(c, s, tau, norm)?,
        "mixed-state bound",
    )?;
    Ok(result(v, BoundKind::WuMixed(norm), tau, c, s))
}

/// Damping closed form of the mixed-state bound,
/// `(1 − p)[r_⊥² + r_z(1+p)(1+r_z)]` over the same denominator as
/// [`qsl_bures_ad_closed`]; again the operator-norm bound.
pub fn qsl_wu_ad_closed(c: &ChannelModel, s: &BlochState, tau: f64) -> Result<QslResult> {
    require(c, ChannelKind::AmplitudeDamping, "damping mixed-state form")?;
    check_tau(tau)?;
    s.validate()?;
    let p = c.decoherence_p(tau)?;
    let numerator = (1.0 - p) * (s.transverse_sq() + s.rz * (1.0 + p) * (1.0 + s.rz));
    let v = ratio(
        numerator.max(0.0),
        ad_closed_speed(c, s, tau)?,
        "mixed-state bound",
    )?;
    Ok(result(v, BoundKind::WuMixed(Norm::Op), tau, c, s))
}

/// Evaluates one bound, through the closed form when asked and available.
pub fn compute(
    c: &ChannelModel,
    s: &BlochState,
    tau: f64,
    kind: BoundKind,
    opts: BoundOptions,
) -> Result<QslResult> {
    let ad = c.kind() == ChannelKind::AmplitudeDamping;
    match (kind, opts.closed_form) {
        (BoundKind::RelativePurity, true) if ad => qsl_rp_ad_closed(c, s, tau, opts.ad_speed),
        (BoundKind::RelativePurity, true) => qsl_rp_dephasing_closed(c, s, tau),
        (BoundKind::RelativePurity, false) => qsl_relative_purity(c, s, tau),
        (BoundKind::FisherSpeed, _) => v_qsl_avg(c, s, tau),
        (BoundKind::BuresDl(Norm::Op), true) if ad => qsl_bures_ad_closed(c, s, tau),
        (BoundKind::BuresDl(n), _) => qsl_bures_dl(c, s, tau, n),
        (BoundKind::WuMixed(Norm::Op), true) if ad => qsl_wu_ad_closed(c, s, tau),
        (BoundKind::WuMixed(n), _) => qsl_wu_mixed(c, s, tau, n),
    }
}

/// Reconstructs `(ρL + Lρ)/2`.
pub fn sld_residual(
    rho: &HermitianMatrix2,
    rho_dot: &HermitianMatrix2,
    l: &HermitianMatrix2,
) -> f64 {
    let (r, lm) = (rho.to_matrix(), l.to_matrix());
    let back = (r * lm + lm * r).scale(0.5).hermitian_part();
    back.max_abs_diff(rho_dot)
}
