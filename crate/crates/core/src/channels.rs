//! The three exactly solvable channels and their time-local generators.
//!
//! Dephasing channels (OUN, RTN) obey `ρ̇ = γ(t)(σ_z ρ σ_z − ρ)`, which scales
//! coherences by the decoherence function `p(t)` with `γ = −ṗ/(2p)` and
//! `p = exp(−2∫γ)`. Amplitude damping (NMAD) obeys
//! `ρ̇ = γ(t)(σ₋ρσ₊ − ½{σ₊σ₋, ρ})`, coherences scale by `p` and the excited
//! population by `p²`, so `γ = −2ṗ/p` and `p = exp(−½∫γ)`.
//!
//! All rates share the unit of the channel's `mu`.

use serde::{Deserialize, Serialize};

use crate::error::{QslError, Result};
use crate::qmat::{BlochState, Complex, HermitianMatrix2, HermitianMatrix4, Matrix2};

/// `|C + δS|` below this counts as a zero of the decoherence function.
const P_ZERO: f64 = 1e-14;
/// Beyond `w·t` of this size the hyperbolic branch switches to its
/// exponentially scaled form.
const SCALED_HYPERBOLIC: f64 = 20.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OunParams {
    pub mu: f64,
    pub gamma_big: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RtnParams {
    pub a: f64,
    pub mu: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NmadParams {
    pub mu: f64,
    pub gamma_big: f64,
}

fn positive(name: &str, v: f64) -> Result<()> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(QslError::InvalidParameter(format!(
            "{name} must be positive and finite, got {v}"
        )))
    }
}

impl OunParams {
    pub fn new(mu: f64, gamma_big: f64) -> Result<Self> {
        positive("mu", mu)?;
        positive("gamma_big", gamma_big)?;
        Ok(OunParams { mu, gamma_big })
    }
}

impl RtnParams {
    pub fn new(a: f64, mu: f64) -> Result<Self> {
        positive("a", a)?;
        positive("mu", mu)?;
        Ok(RtnParams { a, mu })
    }

    /// Damped oscillations (and negative rates) for `a/μ > ½`.
    pub fn is_oscillatory(&self) -> bool {
        self.a / self.mu > 0.5
    }

    fn oscillation(&self) -> DampedOscillation {
        DampedOscillation {
            delta: self.mu,
            freq_sq: 4.0 * self.a * self.a - self.mu * self.mu,
        }
    }
}

impl NmadParams {
    pub fn new(mu: f64, gamma_big: f64) -> Result<Self> {
        positive("mu", mu)?;
        positive("gamma_big", gamma_big)?;
        Ok(NmadParams { mu, gamma_big })
    }

    /// `Γ < 2μ`: `d = √(Γ² − 2μΓ)` is imaginary and `p` oscillates.
    pub fn is_oscillatory(&self) -> bool {
        self.gamma_big < 2.0 * self.mu
    }

    fn oscillation(&self) -> DampedOscillation {
        let (mu, g) = (self.mu, self.gamma_big);
        DampedOscillation {
            delta: 0.5 * g,
            freq_sq: 0.25 * (2.0 * mu * g - g * g),
        }
    }
}

/// `p(t) = e^{−δt}[C(t) + δ S(t)]` with `C = cos ωt`, `S = sin(ωt)/ω` when
/// `ω² > 0` and the hyperbolic continuation when `ω² < 0`. Then
/// `ṗ = −(δ² + ω²) e^{−δt} S`. RTN has `δ = μ, ω² = 4a² − μ²`; NMAD has
/// `δ = Γ/2, ω² = (2μΓ − Γ²)/4`.
#[derive(Debug, Clone, Copy)]
struct DampedOscillation {
    delta: f64,
    freq_sq: f64,
}

impl DampedOscillation {
    fn kappa(&self) -> f64 {
        self.delta * self.delta + self.freq_sq
    }

    /// `Some(w)` when the scaled hyperbolic form applies at `t`.
    fn scaled(&self, t: f64) -> Option<f64> {
        if self.freq_sq < 0.0 {
            let w = (-self.freq_sq).sqrt();
            (w * t > SCALED_HYPERBOLIC).then_some(w)
        } else {
            None
        }
    }

    /// `(C, S)`; both branches meet the series `C = 1 − x/2 + …`,
    /// `S = t(1 − x/6 + …)` in `x = ω²t²`.
    fn cs(&self, t: f64) -> (f64, f64) {
        let x = self.freq_sq * t * t;
        if x.abs() < 1e-8 {
            (
                1.0 - x / 2.0 + x * x / 24.0,
                t * (1.0 - x / 6.0 + x * x / 120.0),
            )
        } else if self.freq_sq > 0.0 {
            let w = self.freq_sq.sqrt();
            ((w * t).cos(), (w * t).sin() / w)
        } else {
            let w = (-self.freq_sq).sqrt();
            ((w * t).cosh(), (w * t).sinh() / w)
        }
    }

    fn bracket(&self, t: f64) -> f64 {
        let (c, s) = self.cs(t);
        c + self.delta * s
    }

    fn p(&self, t: f64) -> f64 {
        if let Some(w) = self.scaled(t) {
            let q = self.delta / w;
            let e = (-2.0 * w * t).exp();
            0.5 * (-(self.delta - w) * t).exp() * ((1.0 + q) + e * (1.0 - q))
        } else {
            (-self.delta * t).exp() * self.bracket(t)
        }
    }

    fn dp(&self, t: f64) -> f64 {
        if let Some(w) = self.scaled(t) {
            let e = (-2.0 * w * t).exp();
            -self.kappa() * 0.5 * (-(self.delta - w) * t).exp() * (1.0 - e) / w
        } else {
            -self.kappa() * (-self.delta * t).exp() * self.cs(t).1
        }
    }

    /// `S / (C + δS) = −ṗ / (κ p)`.
    fn ratio(&self, t: f64) -> Result<f64> {
        if let Some(w) = self.scaled(t) {
            let q = self.delta / w;
            let e = (-2.0 * w * t).exp();
            return Ok((1.0 - e) / (w * ((1.0 + q) + e * (1.0 - q))));
        }
        let (c, s) = self.cs(t);
        let b = c + self.delta * s;
        if b.abs() < P_ZERO {
            return Err(QslError::SingularRate { t });
        }
        Ok(s / b)
    }

    fn ln_p(&self, t: f64) -> Result<f64> {
        if let Some(w) = self.scaled(t) {
            let q = self.delta / w;
            let e = (-2.0 * w * t).exp();
            return Ok(-(self.delta - w) * t + (0.5 * ((1.0 + q) + e * (1.0 - q))).ln());
        }
        if self.first_zero().is_some_and(|t0| t >= t0) {
            return Err(QslError::SingularRate { t });
        }
        let b = self.bracket(t);
        if b < P_ZERO {
            return Err(QslError::SingularRate { t });
        }
        Ok(-self.delta * t + b.ln())
    }

    /// `1 − p` without cancellation near the origin, from the Taylor series of
    /// `p̈ + 2δṗ + κp = 0`, `p(0) = 1`, `ṗ(0) = 0`.
    fn defect(&self, t: f64) -> f64 {
        let kappa = self.kappa();
        if self.delta * t > 0.5 || kappa.abs().sqrt() * t > 0.5 {
            return 1.0 - self.p(t);
        }
        // c_n: coefficient of t^n
        let (mut c0, mut c1) = (1.0, 0.0);
        let mut power = t;
        let mut sum = 0.0;
        for n in 0..80 {
            let nf = n as f64;
            let c2 = -(2.0 * self.delta * (nf + 1.0) * c1 + kappa * c0) / ((nf + 1.0) * (nf + 2.0));
            power *= t;
            let term = c2 * power;
            sum -= term;
            if n > 2 && term.abs() <= 1e-18 * sum.abs() {
                break;
            }
            c0 = c1;
            c1 = c2;
        }
        sum
    }

    /// First positive zero of `p`: `ωt = π − atan(ω/δ)`; none without oscillation.
    fn first_zero(&self) -> Option<f64> {
        (self.freq_sq > 0.0).then(|| {
            let w = self.freq_sq.sqrt();
            (std::f64::consts::PI - w.atan2(self.delta)) / w
        })
    }

    /// Limit of `S/(C + δS)` for `t → ∞` when it exists.
    fn ratio_limit(&self) -> Option<f64> {
        (self.freq_sq <= 0.0).then(|| 1.0 / (self.delta + (-self.freq_sq).sqrt()))
    }
}

/// Operator form of a generator: which Lindblad dissipator multiplies `γ(t)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ChannelKind {
    Dephasing,
    AmplitudeDamping,
}

impl ChannelKind {
    /// `p = exp(−k Λ)` with `Λ = ∫γ`: `k = 2` for dephasing, `½` for damping.
    pub fn decay_exponent(&self) -> f64 {
        match self {
            ChannelKind::Dephasing => 2.0,
            ChannelKind::AmplitudeDamping => 0.5,
        }
    }

    /// The dissipator with unit rate applied to an arbitrary 2×2 matrix.
    pub fn dissipator(&self, x: &Matrix2) -> Matrix2 {
        match self {
            ChannelKind::Dephasing => {
                let sz = Matrix2::sigma_z();
                sz * *x * sz - *x
            }
            ChannelKind::AmplitudeDamping => {
                let (sm, sp) = (Matrix2::sigma_minus(), Matrix2::sigma_plus());
                let n = sp * sm;
                sm * *x * sp - (n * *x + *x * n).scale(0.5)
            }
        }
    }
}

/// Snapshot of the time-local generator `L_t = γ(t)·D` of one channel.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GeneratorSpec {
    pub kind: ChannelKind,
    pub rate: f64,
    pub t: f64,
}

impl GeneratorSpec {
    pub fn apply_matrix(&self, x: &Matrix2) -> Matrix2 {
        self.kind.dissipator(x).scale(self.rate)
    }

    pub fn apply(&self, rho: &HermitianMatrix2) -> HermitianMatrix2 {
        self.apply_matrix(&rho.to_matrix()).hermitian_part()
    }

    /// `L_t − L*` for the constant-rate generator of the same form.
    pub fn minus_reference(&self, reference_rate: f64) -> GeneratorSpec {
        GeneratorSpec {
            rate: self.rate - reference_rate,
            ..*self
        }
    }

    /// Choi matrix `Σ_ij |i⟩⟨j| ⊗ L(|i⟩⟨j|)` built on the unnormalised
    /// maximally entangled vector `Σ|ii⟩`.
    pub fn choi(&self) -> HermitianMatrix4 {
        let mut full = [[Complex::new(0.0, 0.0); 4]; 4];
        for i in 0..2 {
            for j in 0..2 {
                let image = self.apply_matrix(&Matrix2::unit(i, j));
                for a in 0..2 {
                    for b in 0..2 {
                        full[2 * i + a][2 * j + b] = image.0[a][b];
                    }
                }
            }
        }
        HermitianMatrix4::from_full(&full, 1e-12)
            .expect("Choi matrix of a Hermiticity-preserving map is Hermitian")
    }
}

/// A channel family with the configured parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "lowercase")]
pub enum ChannelModel {
    Oun(OunParams),
    Rtn(RtnParams),
    Nmad(NmadParams),
}

fn check_time(t: f64) -> Result<()> {
    if t.is_nan() || t < 0.0 {
        Err(QslError::NegativeTime(t))
    } else {
        Ok(())
    }
}

impl ChannelModel {
    pub fn oun(mu: f64, gamma_big: f64) -> Result<Self> {
        Ok(ChannelModel::Oun(OunParams::new(mu, gamma_big)?))
    }

    pub fn rtn(a: f64, mu: f64) -> Result<Self> {
        Ok(ChannelModel::Rtn(RtnParams::new(a, mu)?))
    }

    pub fn nmad(mu: f64, gamma_big: f64) -> Result<Self> {
        Ok(ChannelModel::Nmad(NmadParams::new(mu, gamma_big)?))
    }

    /// Re-checks the family invariants (useful after deserialisation).
    pub fn validate(&self) -> Result<()> {
        match *self {
            ChannelModel::Oun(p) => OunParams::new(p.mu, p.gamma_big).map(|_| ()),
            ChannelModel::Rtn(p) => RtnParams::new(p.a, p.mu).map(|_| ()),
            ChannelModel::Nmad(p) => NmadParams::new(p.mu, p.gamma_big).map(|_| ()),
        }
    }

    pub fn kind(&self) -> ChannelKind {
        match self {
            ChannelModel::Oun(_) | ChannelModel::Rtn(_) => ChannelKind::Dephasing,
            ChannelModel::Nmad(_) => ChannelKind::AmplitudeDamping,
        }
    }

    pub fn family(&self) -> &'static str {
        match self {
            ChannelModel::Oun(_) => "oun",
            ChannelModel::Rtn(_) => "rtn",
            ChannelModel::Nmad(_) => "nmad",
        }
    }

    pub fn mu(&self) -> f64 {
        match self {
            ChannelModel::Oun(p) => p.mu,
            ChannelModel::Rtn(p) => p.mu,
            ChannelModel::Nmad(p) => p.mu,
        }
    }

    /// Compact label such as `oun(mu=1,gamma_big=0.1)`.
    pub fn tag(&self) -> String {
        match self {
            ChannelModel::Oun(p) => format!("oun(mu={},gamma_big={})", p.mu, p.gamma_big),
            ChannelModel::Rtn(p) => format!("rtn(a={},mu={})", p.a, p.mu),
            ChannelModel::Nmad(p) => format!("nmad(mu={},gamma_big={})", p.mu, p.gamma_big),
        }
    }

    /// Decoherence function `p(t)`.
    pub fn decoherence_p(&self, t: f64) -> Result<f64> {
        check_time(t)?;
        Ok(match self {
            ChannelModel::Oun(p) => oun_ln_p(p, t).exp(),
            ChannelModel::Rtn(p) => p.oscillation().p(t),
            ChannelModel::Nmad(p) => p.oscillation().p(t),
        })
    }

    /// Analytic `ṗ(t)`.
    pub fn decoherence_dp(&self, t: f64) -> Result<f64> {
        check_time(t)?;
        Ok(match self {
            ChannelModel::Oun(p) => {
                let decay = -(-p.gamma_big * t).exp_m1();
                -oun_ln_p(p, t).exp() * 0.5 * p.mu * decay
            }
            ChannelModel::Rtn(p) => p.oscillation().dp(t),
            ChannelModel::Nmad(p) => p.oscillation().dp(t),
        })
    }

    /// Time-dependent decoherence rate `γ(t)`; fails where `p(t) = 0`.
    pub fn rate_gamma(&self, t: f64) -> Result<f64> {
        check_time(t)?;
        match self {
            ChannelModel::Oun(p) => Ok(0.25 * p.mu * -(-p.gamma_big * t).exp_m1()),
            ChannelModel::Rtn(p) => {
                let osc = p.oscillation();
                Ok(0.5 * osc.kappa() * osc.ratio(t)?)
            }
            ChannelModel::Nmad(p) => {
                let osc = p.oscillation();
                Ok(2.0 * osc.kappa() * osc.ratio(t)?)
            }
        }
    }

    /// `Λ(t) = ∫₀ᵗ γ`, evaluated in closed form through `ln p`.
    pub fn integrated_rate(&self, t: f64) -> Result<f64> {
        check_time(t)?;
        match self {
            ChannelModel::Oun(p) => Ok(oun_lambda(p, t)),
            ChannelModel::Rtn(p) => Ok(-0.5 * p.oscillation().ln_p(t)?),
            ChannelModel::Nmad(p) => Ok(-2.0 * p.oscillation().ln_p(t)?),
        }
    }

    /// `1 − p(t)`, accurate where `p` is close to one.
    pub fn decoherence_defect(&self, t: f64) -> Result<f64> {
        check_time(t)?;
        Ok(match self {
            ChannelModel::Oun(p) => -oun_ln_p(p, t).exp_m1(),
            ChannelModel::Rtn(p) => p.oscillation().defect(t),
            ChannelModel::Nmad(p) => p.oscillation().defect(t),
        })
    }

    /// Bloch vector of the evolved state.
    pub fn bloch_at(&self, s: &BlochState, t: f64) -> Result<[f64; 3]> {
        s.validate()?;
        let p = self.decoherence_p(t)?;
        Ok(match self.kind() {
            ChannelKind::Dephasing => [p * s.rx, p * s.ry, s.rz],
            ChannelKind::AmplitudeDamping => [p * s.rx, p * s.ry, (1.0 + s.rz) * p * p - 1.0],
        })
    }

    /// `d/dt` of [`ChannelModel::bloch_at`].
    pub fn bloch_velocity(&self, s: &BlochState, t: f64) -> Result<[f64; 3]> {
        s.validate()?;
        let dp = self.decoherence_dp(t)?;
        Ok(match self.kind() {
            ChannelKind::Dephasing => [dp * s.rx, dp * s.ry, 0.0],
            ChannelKind::AmplitudeDamping => {
                let p = self.decoherence_p(t)?;
                [dp * s.rx, dp * s.ry, 2.0 * (1.0 + s.rz) * p * dp]
            }
        })
    }

    /// `1 − |r_t|² = 4 det ρ_t`, built from `1 − p²` so that nearly pure
    /// states keep their relative accuracy.
    pub fn purity_defect(&self, s: &BlochState, t: f64) -> Result<f64> {
        s.validate()?;
        let p = self.decoherence_p(t)?;
        let d = self.decoherence_defect(t)?;
        let one_minus_p_sq = d * (2.0 - d);
        let initial = (1.0 - s.norm_sq()).max(0.0);
        Ok(match self.kind() {
            ChannelKind::Dephasing => initial + s.transverse_sq() * one_minus_p_sq,
            ChannelKind::AmplitudeDamping => {
                p * p * (initial + (1.0 + s.rz).powi(2) * one_minus_p_sq)
            }
        })
    }

    /// First time at which `p` vanishes (and `γ` diverges), if any.
    pub fn first_zero(&self) -> Option<f64> {
        match self {
            ChannelModel::Oun(_) => None,
            ChannelModel::Rtn(p) => p.oscillation().first_zero(),
            ChannelModel::Nmad(p) => p.oscillation().first_zero(),
        }
    }

    /// Fails unless `γ` is finite on the closed horizon `[0, horizon]`.
    pub fn ensure_regular_until(&self, horizon: f64) -> Result<()> {
        match self.first_zero() {
            Some(t0) if t0 <= horizon => Err(QslError::SingularRate { t: t0 }),
            _ => Ok(()),
        }
    }

    pub fn generator(&self, t: f64) -> Result<GeneratorSpec> {
        Ok(GeneratorSpec {
            kind: self.kind(),
            rate: self.rate_gamma(t)?,
            t,
        })
    }

    /// Exact state at time `t` for the initial Bloch vector `s`.
    pub fn evolve(&self, s: &BlochState, t: f64) -> Result<HermitianMatrix2> {
        s.validate()?;
        let p = self.decoherence_p(t)?;
        let coherence = Complex::new(0.5 * s.rx, 0.5 * s.ry) * p;
        Ok(match self.kind() {
            ChannelKind::Dephasing => {
                HermitianMatrix2::new(0.5 * (1.0 - s.rz), 0.5 * (1.0 + s.rz), coherence)
            }
            ChannelKind::AmplitudeDamping => {
                let d = self.decoherence_defect(t)?;
                let excited = 0.5 * (1.0 + s.rz);
                let ground = 0.5 * (1.0 - s.rz) + excited * d * (2.0 - d);
                HermitianMatrix2::new(ground, excited * p * p, coherence)
            }
        })
    }

    /// `L_t(ρ)`.
    pub fn apply_generator(&self, rho: &HermitianMatrix2, t: f64) -> Result<HermitianMatrix2> {
        Ok(self.generator(t)?.apply(rho))
    }

    /// Analytic `ρ̇_t` obtained from `ṗ`; finite even where `γ` is singular.
    pub fn time_derivative(&self, s: &BlochState, t: f64) -> Result<HermitianMatrix2> {
        s.validate()?;
        let dp = self.decoherence_dp(t)?;
        let coherence = Complex::new(0.5 * s.rx, 0.5 * s.ry) * dp;
        Ok(match self.kind() {
            ChannelKind::Dephasing => HermitianMatrix2::new(0.0, 0.0, coherence),
            ChannelKind::AmplitudeDamping => {
                let flow = (1.0 + s.rz) * self.decoherence_p(t)? * dp;
                HermitianMatrix2::new(-flow, flow, coherence)
            }
        })
    }

    /// The constant-rate (semigroup) family the memory measure compares to.
    pub fn markov_reference(&self) -> ReferenceFamily {
        let limiting_rate = match self {
            ChannelModel::Oun(p) => Some(0.25 * p.mu),
            ChannelModel::Rtn(p) => {
                let osc = p.oscillation();
                osc.ratio_limit().map(|r| 0.5 * osc.kappa() * r)
            }
            ChannelModel::Nmad(p) => {
                let osc = p.oscillation();
                osc.ratio_limit().map(|r| 2.0 * osc.kappa() * r)
            }
        };
        ReferenceFamily {
            kind: self.kind(),
            limiting_rate,
        }
    }
}

/// `x + e^{−x} − 1`, by its series where the closed form cancels.
fn relaxation_lag(x: f64) -> f64 {
    if x > 0.1 {
        return x + (-x).exp_m1();
    }
    let (mut term, mut sum) = (0.5 * x * x, 0.0);
    for k in 3..30 {
        sum += term;
        term *= -x / k as f64;
        if term.abs() <= 1e-18 * sum.abs() {
            break;
        }
    }
    sum
}

/// `∫₀ᵗ γ` for OUN: `(μ/4Γ)·lag(Γt)`.
fn oun_lambda(p: &OunParams, t: f64) -> f64 {
    0.25 * p.mu * relaxation_lag(p.gamma_big * t) / p.gamma_big
}

fn oun_ln_p(p: &OunParams, t: f64) -> f64 {
    -2.0 * oun_lambda(p, t)
}

/// Constant-rate generators `γ*·D` of a fixed operator form.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReferenceFamily {
    pub kind: ChannelKind,
    /// `lim_{t→∞} γ(t)` of the channel, when the limit exists.
    pub limiting_rate: Option<f64>,
}

impl ReferenceFamily {
    pub fn at_rate(&self, rate: f64) -> SemigroupChannel {
        SemigroupChannel {
            kind: self.kind,
            rate,
        }
    }
}

/// Quantum dynamical semigroup: constant rate, `p = exp(−k γ t)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SemigroupChannel {
    pub kind: ChannelKind,
    pub rate: f64,
}

impl SemigroupChannel {
    pub fn decoherence_p(&self, t: f64) -> Result<f64> {
        check_time(t)?;
        Ok((-self.kind.decay_exponent() * self.rate * t).exp())
    }
}

/// What the memory measure needs from a dynamics: the generator form, `γ(t)`,
/// its integral and where it stops being finite.
pub trait RateModel {
    fn kind(&self) -> ChannelKind;
    fn rate(&self, t: f64) -> Result<f64>;
    fn integrated_rate(&self, t: f64) -> Result<f64>;
    fn first_singularity(&self) -> Option<f64>;
}

impl RateModel for ChannelModel {
    fn kind(&self) -> ChannelKind {
        ChannelModel::kind(self)
    }
    fn rate(&self, t: f64) -> Result<f64> {
        self.rate_gamma(t)
    }
    fn integrated_rate(&self, t: f64) -> Result<f64> {
        ChannelModel::integrated_rate(self, t)
    }
    fn first_singularity(&self) -> Option<f64> {
        self.first_zero()
    }
}

impl RateModel for SemigroupChannel {
    fn kind(&self) -> ChannelKind {
        self.kind
    }
    fn rate(&self, t: f64) -> Result<f64> {
        check_time(t)?;
        Ok(self.rate)
    }
    fn integrated_rate(&self, t: f64) -> Result<f64> {
        check_time(t)?;
        Ok(self.rate * t)
    }
    fn first_singularity(&self) -> Option<f64> {
        None
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::finite_diff;
    use crate::qmat::bloch_to_rho;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn rel_err(a: f64, b: f64) -> f64 {
        ((a - b) / b).abs()
    }

    fn all_three() -> [ChannelModel; 3] {
        [
            ChannelModel::oun(1.0, 0.1).unwrap(),
            ChannelModel::rtn(0.6, 1.0).unwrap(),
            ChannelModel::nmad(1.0, 0.1).unwrap(),
        ]
    }

    fn random_state(rng: &mut ChaCha8Rng) -> BlochState {
        loop {
            let v: [f64; 3] = std::array::from_fn(|_| rng.gen_range(-1.0..1.0));
            if v.iter().map(|x| x * x).sum::<f64>() <= 1.0 {
                return BlochState::new(v[0], v[1], v[2]).unwrap();
            }
        }
    }

    #[test]
    fn parameters_must_be_positive() {
        assert!(ChannelModel::oun(0.0, 1.0).is_err());
        assert!(ChannelModel::rtn(1.0, -1.0).is_err());
        assert!(ChannelModel::nmad(1.0, f64::INFINITY).is_err());
    }

    #[test]
    fn p_is_one_at_origin() {
        for c in all_three() {
            assert_eq!(c.decoherence_p(0.0).unwrap(), 1.0);
        }
    }

    #[test]
    fn negative_time_rejected() {
        for c in all_three() {
            assert!(matches!(
                c.decoherence_p(-1e-3),
                Err(QslError::NegativeTime(_))
            ));
            assert!(c.evolve(&BlochState::plus(), -1.0).is_err());
        }
    }

    #[test]
    fn decoherence_point_values() {
        // 40-digit evaluations of the closed forms
        let [oun, rtn, nmad] = all_three();
        assert!((oun.decoherence_p(1.0).unwrap() - 0.976_103_073_374_206_3).abs() < 1e-14);
        assert!((rtn.decoherence_p(1.0).unwrap() - 0.631_359_288_773_381_5).abs() < 1e-14);
        assert!((nmad.decoherence_p(1.0).unwrap() - 0.975_912_845_828_289_5).abs() < 1e-14);
    }

    #[test]
    fn rate_point_values() {
        let [oun, _, nmad] = all_three();
        assert_eq!(oun.rate_gamma(0.0).unwrap(), 0.0);
        assert!((oun.rate_gamma(1.0).unwrap() - 0.023_790_645_491_010_11).abs() < 1e-15);
        let g = nmad.rate_gamma(1.0).unwrap();
        assert!((g - 0.096_700_922_335_283_9).abs() < 1e-14);
        // finite-difference oracle −2ṗ/p
        let p = |t| nmad.decoherence_p(t).unwrap();
        let fd = -2.0 * finite_diff(p, 1.0, 1e-6) / p(1.0);
        assert!((g - fd).abs() < 1e-8);
    }

    #[test]
    fn analytic_dp_matches_finite_difference() {
        for c in all_three() {
            for t in [0.3, 1.0, 2.5] {
                let fd = finite_diff(|x| c.decoherence_p(x).unwrap(), t, 1e-5);
                assert!(
                    (c.decoherence_dp(t).unwrap() - fd).abs() < 1e-9,
                    "{} at {t}",
                    c.tag()
                );
            }
        }
    }

    #[test]
    fn rate_is_singular_at_zero_of_p() {
        let rtn = ChannelModel::rtn(0.6, 1.0).unwrap();
        let t0 = rtn.first_zero().unwrap();
        assert!(rtn.decoherence_p(t0).unwrap().abs() < 1e-14);
        assert!(matches!(
            rtn.rate_gamma(t0),
            Err(QslError::SingularRate { .. })
        ));
        assert!(rtn.integrated_rate(t0 + 0.1).is_err());

        let nmad = ChannelModel::nmad(1.0, 0.1).unwrap();
        let t0 = nmad.first_zero().unwrap();
        assert!((t0 - 8.2422).abs() < 1e-3);
        assert!(nmad.decoherence_p(t0).unwrap().abs() < 1e-14);

        assert!(ChannelModel::oun(1.0, 0.1).unwrap().first_zero().is_none());
        assert!(ChannelModel::nmad(1.0, 5.0).unwrap().first_zero().is_none());
        assert!(ChannelModel::rtn(0.3, 1.0).unwrap().first_zero().is_none());
    }

    #[test]
    fn evolve_examples() {
        for c in all_three() {
            let s = BlochState::new(0.3, -0.4, 0.5).unwrap();
            assert!(
                c.evolve(&s, 0.0)
                    .unwrap()
                    .max_abs_diff(&bloch_to_rho(&s).unwrap())
                    < 1e-15
            );
        }
        let [oun, _, nmad] = all_three();
        let p = nmad.decoherence_p(1.0).unwrap();
        let rho = nmad.evolve(&BlochState::excited(), 1.0).unwrap();
        assert!(rho.max_abs_diff(&HermitianMatrix2::diag(1.0 - p * p, p * p)) < 1e-15);
        assert!((rho.diagonal()[1] - 0.952_405_882_652_670_8).abs() < 1e-14);

        let p = oun.decoherence_p(1.0).unwrap();
        let rho = oun.evolve(&BlochState::plus(), 1.0).unwrap();
        assert!(
            rho.max_abs_diff(&HermitianMatrix2::new(0.5, 0.5, Complex::new(0.5 * p, 0.0))) < 1e-15
        );
    }

    #[test]
    fn generator_examples() {
        let oun = ChannelModel::oun(1.0, 0.1).unwrap();
        let rho = bloch_to_rho(&BlochState::new(0.2, 0.1, 0.3).unwrap()).unwrap();
        assert_eq!(
            oun.apply_generator(&rho, 0.0).unwrap(),
            HermitianMatrix2::zero()
        );

        let diag = HermitianMatrix2::diag(0.3, 0.7);
        let out = oun.apply_generator(&diag, 1.3).unwrap();
        assert!(out.max_abs_diff(&HermitianMatrix2::zero()) < 1e-16);

        let g = 0.37;
        let ad = GeneratorSpec {
            kind: ChannelKind::AmplitudeDamping,
            rate: g,
            t: 0.0,
        };
        let out = ad.apply(&HermitianMatrix2::diag(0.0, 1.0));
        assert!(out.max_abs_diff(&HermitianMatrix2::diag(g, -g)) < 1e-16);
    }

    #[test]
    fn time_derivative_examples() {
        let nmad = ChannelModel::nmad(1.0, 0.1).unwrap();
        assert_eq!(
            nmad.time_derivative(&BlochState::excited(), 0.0).unwrap(),
            HermitianMatrix2::zero()
        );
        let t = 1.7;
        let (p, dp) = (
            nmad.decoherence_p(t).unwrap(),
            nmad.decoherence_dp(t).unwrap(),
        );
        let d = nmad.time_derivative(&BlochState::excited(), t).unwrap();
        assert!(d.max_abs_diff(&HermitianMatrix2::diag(-2.0 * p * dp, 2.0 * p * dp)) < 1e-16);
    }

    #[test]
    fn time_derivative_equals_generator_on_evolved_state() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..100 {
            let c = match rng.gen_range(0..3) {
                0 => ChannelModel::oun(rng.gen_range(0.1..3.0), rng.gen_range(0.05..5.0)).unwrap(),
                1 => ChannelModel::rtn(rng.gen_range(0.05..2.0), rng.gen_range(0.2..2.0)).unwrap(),
                _ => ChannelModel::nmad(rng.gen_range(0.1..3.0), rng.gen_range(0.05..6.0)).unwrap(),
            };
            let s = random_state(&mut rng);
            let horizon = c.first_zero().map_or(3.0, |t0| t0.min(3.0));
            let t = rng.gen_range(0.0..0.95 * horizon);
            let rho = c.evolve(&s, t).unwrap();
            let lhs = c.time_derivative(&s, t).unwrap();
            let rhs = c.apply_generator(&rho, t).unwrap();
            assert!(lhs.max_abs_diff(&rhs) < 1e-9, "{} t={t}", c.tag());
            assert!(lhs.trace().abs() < 1e-15);
        }
    }

    #[test]
    fn markov_reference_forms() {
        let [oun, rtn, nmad] = all_three();
        let r = oun.markov_reference();
        assert_eq!(r.kind, ChannelKind::Dephasing);
        let far = oun.rate_gamma(1e6 / 0.1).unwrap();
        assert!((r.limiting_rate.unwrap() - far).abs() < 1e-15);
        assert_eq!(rtn.markov_reference().kind, ChannelKind::Dephasing);
        assert_eq!(nmad.markov_reference().kind, ChannelKind::AmplitudeDamping);
        // oscillatory regimes have no limiting rate
        assert!(rtn.markov_reference().limiting_rate.is_none());
        // monotone regimes converge to it
        let mono = ChannelModel::nmad(1.0, 5.0).unwrap();
        let lim = mono.markov_reference().limiting_rate.unwrap();
        assert!((mono.rate_gamma(200.0).unwrap() - lim).abs() < 1e-12);
        let damped = ChannelModel::rtn(0.3, 1.0).unwrap();
        let lim = damped.markov_reference().limiting_rate.unwrap();
        assert!((damped.rate_gamma(500.0).unwrap() - lim).abs() < 1e-12);
        // OUN semigroup limit has p* = e^{−μt/2}
        let semi = r.at_rate(r.limiting_rate.unwrap());
        assert!((semi.decoherence_p(2.0).unwrap() - (-1.0f64).exp()).abs() < 1e-15);
    }

    #[test]
    fn oun_rate_nonnegative() {
        let oun = ChannelModel::oun(1.3, 0.4).unwrap();
        for k in 0..=10_000 {
            assert!(oun.rate_gamma(k as f64 * 1e-3).unwrap() >= 0.0);
        }
    }

    #[test]
    fn rtn_regimes_sign_of_rate() {
        let strong = ChannelModel::rtn(0.6, 1.0).unwrap();
        let weak = ChannelModel::rtn(0.3, 1.0).unwrap();
        let grid = (1..=4000).map(|k| k as f64 * 10.0 / 4000.0);
        let negative = grid
            .clone()
            .filter_map(|t| strong.rate_gamma(t).ok())
            .any(|g| g < 0.0);
        assert!(negative);
        assert!(grid.map(|t| weak.rate_gamma(t).unwrap()).all(|g| g >= 0.0));
    }

    #[test]
    fn nmad_monotone_regime() {
        let mono = ChannelModel::nmad(1.0, 2.5).unwrap();
        let osc = ChannelModel::nmad(1.0, 0.5).unwrap();
        let ps = |c: &ChannelModel| {
            (0..=2000)
                .map(|k| c.decoherence_p(k as f64 * 0.01).unwrap())
                .collect::<Vec<_>>()
        };
        assert!(ps(&mono).windows(2).all(|w| w[1] < w[0]));
        assert!(ps(&osc).windows(2).any(|w| w[1] > w[0]));
    }

    #[test]
    fn rtn_branches_agree_near_critical_coupling() {
        // both closed-form branches against the power series of cos √x and
        // sin √x / √x, which is analytic through x = 0
        let mu: f64 = 1.3;
        let series = |x: f64| {
            let (mut c, mut s, mut term) = (0.0, 0.0, 1.0);
            for k in 0..40 {
                c += term;
                s += term / (2 * k + 1) as f64;
                term *= -x / (((2 * k + 1) * (2 * k + 2)) as f64);
            }
            (c, s)
        };
        for sign in [-1.0, 1.0] {
            let a = 0.5 * mu * (1.0 + sign * 1e-4f64).sqrt();
            let near = ChannelModel::rtn(a, mu).unwrap();
            let freq_sq = 4.0 * a * a - mu * mu;
            for t in [0.1, 0.7, 2.0, 5.0, 9.0] {
                let (c, s) = series(freq_sq * t * t);
                let oracle = (-mu * t).exp() * (c + mu * t * s);
                assert!((near.decoherence_p(t).unwrap() - oracle).abs() < 1e-13);
            }
        }
        // across the boundary the two sides stay within the first-order shift
        let below = ChannelModel::rtn(0.5 * mu * (1.0 - 1e-4f64).sqrt(), mu).unwrap();
        let above = ChannelModel::rtn(0.5 * mu * (1.0 + 1e-4f64).sqrt(), mu).unwrap();
        for t in [0.1, 0.7, 2.0, 5.0] {
            let gap = (below.decoherence_p(t).unwrap() - above.decoherence_p(t).unwrap()).abs();
            assert!(gap < 1e-4 * mu * mu * t * t);
        }
    }

    #[test]
    fn defect_is_accurate_near_origin() {
        for c in [
            ChannelModel::rtn(0.6, 1.0).unwrap(),
            ChannelModel::nmad(1.0, 0.1).unwrap(),
            ChannelModel::nmad(1.0, 5.0).unwrap(),
        ] {
            // for small t, 1 − p = κt²/2 − δκt³/3 + O(t⁴)
            let (delta, kappa) = match c {
                ChannelModel::Rtn(p) => (p.oscillation().delta, p.oscillation().kappa()),
                ChannelModel::Nmad(p) => (p.oscillation().delta, p.oscillation().kappa()),
                _ => unreachable!(),
            };
            let t = 1e-6;
            let approx = 0.5 * kappa * t * t - delta * kappa * t * t * t / 3.0;
            assert!(rel_err(c.decoherence_defect(t).unwrap(), approx) < 1e-11);
            // agrees with the direct difference where that is well conditioned
            for t in [0.05, 0.3] {
                let direct = 1.0 - c.decoherence_p(t).unwrap();
                assert!(rel_err(c.decoherence_defect(t).unwrap(), direct) < 1e-10);
            }
        }
        let oun = ChannelModel::oun(1.0, 0.1).unwrap();
        // 1 − p = μΓt²/4 − μΓ²t³/12 + O(t⁴)
        let t: f64 = 1e-6;
        let approx = 0.25 * 0.1 * t * t - 0.01 * t.powi(3) / 12.0;
        assert!(rel_err(oun.decoherence_defect(t).unwrap(), approx) < 1e-12);
        for x in [1e-9f64, 1e-3, 0.0999, 0.1001, 2.0] {
            let oracle = x + (-x).exp_m1();
            assert!(rel_err(relaxation_lag(x), oracle) < if x < 1e-3 { 1e-6 } else { 1e-12 });
        }
    }

    #[test]
    fn purity_defect_matches_determinant() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..200 {
            let c = match rng.gen_range(0..2) {
                0 => ChannelModel::oun(rng.gen_range(0.1..3.0), rng.gen_range(0.05..5.0)).unwrap(),
                _ => ChannelModel::nmad(rng.gen_range(0.1..3.0), rng.gen_range(0.05..6.0)).unwrap(),
            };
            let s = random_state(&mut rng);
            let t = rng.gen_range(0.1..3.0);
            let det = c.evolve(&s, t).unwrap().det();
            assert!((c.purity_defect(&s, t).unwrap() - 4.0 * det).abs() < 1e-12);
            let r = c.bloch_at(&s, t).unwrap();
            let b = c.evolve(&s, t).unwrap().to_bloch();
            assert!((r[0] - b.rx).abs() + (r[1] - b.ry).abs() + (r[2] - b.rz).abs() < 1e-14);
        }
    }

    #[test]
    fn scaled_hyperbolic_branch_is_continuous() {
        let c = ChannelModel::nmad(0.5, 20.0).unwrap();
        let osc = match c {
            ChannelModel::Nmad(p) => p.oscillation(),
            _ => unreachable!(),
        };
        let w = (-osc.freq_sq).sqrt();
        let t = SCALED_HYPERBOLIC / w;
        let (lo, hi) = (t * (1.0 - 1e-12), t * (1.0 + 1e-12));
        let rel = |a: f64, b: f64| ((a - b) / b).abs();
        assert!(rel(c.decoherence_p(lo).unwrap(), c.decoherence_p(hi).unwrap()) < 1e-9);
        assert!(rel(c.decoherence_dp(lo).unwrap(), c.decoherence_dp(hi).unwrap()) < 1e-9);
        assert!(rel(c.rate_gamma(lo).unwrap(), c.rate_gamma(hi).unwrap()) < 1e-9);
        assert!(
            rel(
                c.integrated_rate(lo).unwrap(),
                c.integrated_rate(hi).unwrap()
            ) < 1e-9
        );
        // far beyond overflow of cosh
        assert!(c.decoherence_p(2000.0).unwrap().is_finite());
        assert!(c.integrated_rate(2000.0).unwrap().is_finite());
    }

    #[test]
    fn integrated_rate_reproduces_p() {
        for c in all_three() {
            for t in [0.2, 1.0, 3.0] {
                let k = c.kind().decay_exponent();
                let p = c.decoherence_p(t).unwrap();
                assert!((p - (-k * c.integrated_rate(t).unwrap()).exp()).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn choi_of_unit_generators() {
        let deph = GeneratorSpec {
            kind: ChannelKind::Dephasing,
            rate: 1.0,
            t: 0.0,
        };
        let ev = deph.choi().eigenvalues();
        assert!((ev[0] + 2.0).abs() < 1e-12 && (ev[3] - 2.0).abs() < 1e-12);
        let ad = GeneratorSpec {
            kind: ChannelKind::AmplitudeDamping,
            rate: 1.0,
            t: 0.0,
        };
        let ev = ad.choi().eigenvalues();
        let expect = [-0.5 - 0.5 * 2f64.sqrt(), 0.0, 0.5 * 2f64.sqrt() - 0.5, 1.0];
        for (a, b) in ev.iter().zip(expect) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn evolve_stays_positive() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..1000 {
            let c = match rng.gen_range(0..3) {
                0 => ChannelModel::oun(rng.gen_range(0.1..3.0), rng.gen_range(0.05..5.0)).unwrap(),
                1 => ChannelModel::rtn(rng.gen_range(0.05..2.0), rng.gen_range(0.2..2.0)).unwrap(),
                _ => ChannelModel::nmad(rng.gen_range(0.1..3.0), rng.gen_range(0.05..6.0)).unwrap(),
            };
            let s = random_state(&mut rng);
            let rho = c.evolve(&s, rng.gen_range(0.0..20.0)).unwrap();
            assert!(rho.eigenvalues()[0] >= -1e-12);
            assert!((rho.trace() - 1.0).abs() < 1e-14);
        }
    }
}
