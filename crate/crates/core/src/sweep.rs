//! Scenarios, parameter sweeps, figure presets and their file formats.
//!
//! A [`Scenario`] fixes a channel, an initial state, a driving time and one
//! bound. [`run_sweep`] varies one parameter and keeps going past failing
//! points, which become error rows. Output order always follows the sweep
//! order, whatever the number of worker threads.

use std::fmt;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::channels::ChannelModel;
use crate::error::{QslError, Result};
use crate::memory::{zeta, DEFAULT_GRID};
use crate::numerics::spearman;
use crate::qmat::{bloch_to_rho, purity, BlochState};
use crate::qsl::{compute, AdSpeedForm, BoundKind, BoundOptions, Norm};

pub const CSV_HEADER: &str =
    "sweep_param,sweep_value,zeta,bound_kind,bound_value,channel,state,tau,status";
/// Points per preset curve.
pub const PRESET_STEPS: usize = 40;
/// Relative tolerance under which two values tie in a trend test.
pub const TREND_TIE_TOL: f64 = 1e-8;

fn default_grid() -> usize {
    DEFAULT_GRID
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    pub channel: ChannelModel,
    pub state: BlochState,
    pub tau: f64,
    pub bound: BoundKind,
    #[serde(default = "default_grid")]
    pub grid: usize,
    /// Evaluate the bound through the channel's closed form where one exists.
    #[serde(default)]
    pub closed_form: bool,
    /// Use the typeset speed factor in the damping relative-purity form.
    #[serde(default)]
    pub printed_form: bool,
}

impl Scenario {
    pub fn new(channel: ChannelModel, state: BlochState, tau: f64, bound: BoundKind) -> Self {
        Scenario {
            channel,
            state,
            tau,
            bound,
            grid: DEFAULT_GRID,
            closed_form: false,
            printed_form: false,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.channel.validate()?;
        self.state.validate()?;
        if !(self.tau.is_finite() && self.tau > 0.0) {
            return Err(QslError::InvalidParameter(format!(
                "tau must be positive, got {}",
                self.tau
            )));
        }
        Ok(())
    }

    pub fn bound_options(&self) -> BoundOptions {
        BoundOptions {
            closed_form: self.closed_form,
            ad_speed: if self.printed_form {
                AdSpeedForm::Printed
            } else {
                AdSpeedForm::Derived
            },
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepVariable {
    GammaBig,
    A,
    Mu,
    Tau,
}

impl SweepVariable {
    pub fn name(&self) -> &'static str {
        match self {
            SweepVariable::GammaBig => "gamma_big",
            SweepVariable::A => "a",
            SweepVariable::Mu => "mu",
            SweepVariable::Tau => "tau",
        }
    }
}

impl fmt::Display for SweepVariable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for SweepVariable {
    type Err = QslError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "gamma_big" | "gamma" => Ok(SweepVariable::GammaBig),
            "a" => Ok(SweepVariable::A),
            "mu" => Ok(SweepVariable::Mu),
            "tau" => Ok(SweepVariable::Tau),
            _ => Err(QslError::InvalidParameter(format!(
                "unknown sweep variable '{s}'"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Scale {
    #[default]
    Linear,
    Log,
}

impl FromStr for Scale {
    type Err = QslError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "linear" | "lin" => Ok(Scale::Linear),
            "log" => Ok(Scale::Log),
            _ => Err(QslError::InvalidParameter(format!("unknown scale '{s}'"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepPlan {
    pub base: Scenario,
    pub vary: SweepVariable,
    pub lo: f64,
    pub hi: f64,
    pub steps: usize,
    #[serde(default)]
    pub scale: Scale,
    /// When sweeping `mu`, keep `gamma_big/mu` and `a/mu` fixed.
    #[serde(default)]
    pub scale_rates_with_mu: bool,
}

impl SweepPlan {
    pub fn validate(&self) -> Result<()> {
        self.base.validate()?;
        if self.steps < 2 {
            return Err(QslError::InvalidParameter(format!(
                "a sweep needs at least 2 steps, got {}",
                self.steps
            )));
        }
        if !(self.lo.is_finite() && self.hi.is_finite() && self.lo < self.hi) {
            return Err(QslError::InvalidParameter(format!(
                "empty sweep range [{}, {}]",
                self.lo, self.hi
            )));
        }
        if self.lo <= 0.0 {
            return Err(QslError::InvalidParameter(format!(
                "{} must stay positive, got lo = {}",
                self.vary, self.lo
            )));
        }
        let applicable = !matches!(
            (self.vary, self.base.channel),
            (SweepVariable::GammaBig, ChannelModel::Rtn(_))
                | (
                    SweepVariable::A,
                    ChannelModel::Oun(_) | ChannelModel::Nmad(_)
                )
        );
        if !applicable {
            return Err(QslError::InvalidParameter(format!(
                "{} has no parameter '{}'",
                self.base.channel.family(),
                self.vary
            )));
        }
        Ok(())
    }

    /// The swept values, endpoints exact.
    pub fn values(&self) -> Vec<f64> {
        let n = self.steps;
        (0..n)
            .map(|k| {
                if k == 0 {
                    return self.lo;
                }
                if k + 1 == n {
                    return self.hi;
                }
                let f = k as f64 / (n - 1) as f64;
                match self.scale {
                    Scale::Linear => self.lo + f * (self.hi - self.lo),
                    Scale::Log => (self.lo.ln() + f * (self.hi.ln() - self.lo.ln())).exp(),
                }
            })
            .collect()
    }

    /// The base scenario with the swept parameter set to `v`.
    pub fn scenario_at(&self, v: f64) -> Result<Scenario> {
        let mut s = self.base;
        s.channel = match (self.vary, self.base.channel) {
            (SweepVariable::GammaBig, ChannelModel::Oun(p)) => ChannelModel::oun(p.mu, v)?,
            (SweepVariable::GammaBig, ChannelModel::Nmad(p)) => ChannelModel::nmad(p.mu, v)?,
            (SweepVariable::A, ChannelModel::Rtn(p)) => ChannelModel::rtn(v, p.mu)?,
            (SweepVariable::Mu, c) => {
                let k = if self.scale_rates_with_mu {
                    v / c.mu()
                } else {
                    1.0
                };
                match c {
                    ChannelModel::Oun(p) => ChannelModel::oun(v, p.gamma_big * k)?,
                    ChannelModel::Rtn(p) => ChannelModel::rtn(p.a * k, v)?,
                    ChannelModel::Nmad(p) => ChannelModel::nmad(v, p.gamma_big * k)?,
                }
            }
            (SweepVariable::Tau, c) => {
                s.tau = v;
                c
            }
            (var, c) => {
                return Err(QslError::InvalidParameter(format!(
                    "{} has no parameter '{var}'",
                    c.family()
                )));
            }
        };
        Ok(s)
    }
}

/// One CSV/JSON row. Failed points keep their coordinates, leave `zeta` and
/// `bound_value` empty and carry the error in `status`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRecord {
    pub sweep_param: String,
    pub sweep_value: f64,
    pub zeta: Option<f64>,
    pub bound_kind: String,
    pub bound_value: Option<f64>,
    pub channel: String,
    pub state: String,
    pub tau: f64,
    pub status: String,
}

impl SweepRecord {
    pub fn is_ok(&self) -> bool {
        self.status == "ok"
    }
}

fn evaluate(s: &Scenario, sweep_param: &str, sweep_value: f64) -> SweepRecord {
    let outcome = s.validate().and_then(|_| {
        let z = zeta(&s.channel, s.tau, s.grid)?;
        let b = compute(&s.channel, &s.state, s.tau, s.bound, s.bound_options())?;
        Ok((z.zeta, b.value))
    });
    let (zeta, bound_value, status) = match outcome {
        Ok((z, b)) => (Some(z), Some(b), "ok".to_string()),
        Err(e) => (
            None,
            None,
            format!("error: {e} [{} {} tau={}]", s.channel.tag(), s.state, s.tau),
        ),
    };
    SweepRecord {
        sweep_param: sweep_param.to_string(),
        sweep_value,
        zeta,
        bound_kind: s.bound.to_string(),
        bound_value,
        channel: s.channel.tag(),
        state: s.state.to_string(),
        tau: s.tau,
        status,
    }
}

/// ζ over `[0, τ]` and the requested bound for a single scenario, reported as
/// a one-point sweep in `tau`.
pub fn run_scenario(s: &Scenario) -> Result<SweepRecord> {
    s.validate()?;
    let z = zeta(&s.channel, s.tau, s.grid)?;
    let b = compute(&s.channel, &s.state, s.tau, s.bound, s.bound_options())
        .map_err(|e| with_context(e, s))?;
    Ok(SweepRecord {
        sweep_param: "tau".into(),
        sweep_value: s.tau,
        zeta: Some(z.zeta),
        bound_kind: s.bound.to_string(),
        bound_value: Some(b.value),
        channel: s.channel.tag(),
        state: s.state.to_string(),
        tau: s.tau,
        status: "ok".into(),
    })
}

fn with_context(e: QslError, s: &Scenario) -> QslError {
    match e {
        QslError::Degenerate(msg) => {
            QslError::Degenerate(format!("{msg} [{} {}]", s.channel.tag(), s.state))
        }
        other => other,
    }
}

/// Evaluates every point of `plan`. `jobs == 1` runs serially; otherwise a
/// pool of `jobs` threads (0: rayon's default) is used. Row order is the
/// sweep order either way.
pub fn run_sweep(plan: &SweepPlan, jobs: usize) -> Result<Vec<SweepRecord>> {
    plan.validate()?;
    let name = plan.vary.name();
    let point = |v: f64| match plan.scenario_at(v) {
        Ok(s) => evaluate(&s, name, v),
        Err(e) => {
            let mut r = evaluate(&plan.base, name, v);
            r.zeta = None;
            r.bound_value = None;
            r.status = format!("error: {e}");
            r
        }
    };
    let values = plan.values();
    if jobs == 1 {
        return Ok(values.into_iter().map(point).collect());
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .map_err(|e| QslError::InvalidParameter(format!("cannot start worker pool: {e}")))?;
    Ok(pool.install(|| values.into_par_iter().map(point).collect()))
}

/// Spearman correlation of `(zeta, bound_value)` over the successful rows.
pub fn trend(records: &[SweepRecord]) -> Option<f64> {
    let (z, b): (Vec<f64>, Vec<f64>) = records
        .iter()
        .filter(|r| r.is_ok())
        .filter_map(|r| Some((r.zeta?, r.bound_value?)))
        .unzip();
    spearman(&z, &b, TREND_TIE_TOL)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Csv,
    Json,
    Svg,
}

impl FromStr for Format {
    type Err = QslError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "csv" => Ok(Format::Csv),
            "json" => Ok(Format::Json),
            "svg" => Ok(Format::Svg),
            _ => Err(QslError::InvalidParameter(format!("unknown format '{s}'"))),
        }
    }
}

pub fn to_csv(records: &[SweepRecord]) -> Result<String> {
    let mut w = csv::WriterBuilder::new()
        .has_headers(false)
        .from_writer(Vec::new());
    for r in records {
        w.serialize(r)?;
    }
    let body = w.into_inner().map_err(|e| QslError::Io(e.to_string()))?;
    let mut out = String::with_capacity(CSV_HEADER.len() + 1 + body.len());
    out.push_str(CSV_HEADER);
    out.push('\n');
    out.push_str(std::str::from_utf8(&body).map_err(|e| QslError::Io(e.to_string()))?);
    Ok(out)
}

pub fn from_csv(text: &str) -> Result<Vec<SweepRecord>> {
    let mut rdr = csv::Reader::from_reader(text.as_bytes());
    let header: Vec<String> = rdr.headers()?.iter().map(str::to_string).collect();
    if header.join(",") != CSV_HEADER {
        return Err(QslError::Io(format!(
            "unexpected CSV header '{}'",
            header.join(",")
        )));
    }
    rdr.deserialize()
        .map(|r| r.map_err(QslError::from))
        .collect()
}

pub fn read_csv(path: &Path) -> Result<Vec<SweepRecord>> {
    from_csv(&fs::read_to_string(path)?)
}

pub fn to_json(records: &[SweepRecord]) -> Result<String> {
    let mut s = serde_json::to_string_pretty(records)?;
    s.push('\n');
    Ok(s)
}

fn fmt_tick(v: f64) -> String {
    if v == 0.0 {
        "0".into()
    } else if v.abs() >= 1e-3 && v.abs() < 1e4 {
        format!("{v:.4}")
    } else {
        format!("{v:.3e}")
    }
}

fn xml_escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
}

/// Scatter of `(zeta, bound_value)` joined by a polyline in sweep order.
pub fn to_svg(records: &[SweepRecord], title: &str) -> Result<String> {
    let pts: Vec<(f64, f64)> = records
        .iter()
        .filter_map(|r| Some((r.zeta?, r.bound_value?)))
        .collect();
    if pts.is_empty() {
        return Err(QslError::InvalidParameter(
            "no successful points to plot".into(),
        ));
    }
    let (w, h, m) = (640.0, 480.0, 70.0);
    let range = |f: fn(&(f64, f64)) -> f64| {
        let lo = pts.iter().map(f).fold(f64::INFINITY, f64::min);
        let hi = pts.iter().map(f).fold(f64::NEG_INFINITY, f64::max);
        if hi > lo {
            (lo, hi)
        } else {
            let pad = if lo == 0.0 { 1.0 } else { lo.abs() * 1e-3 };
            (lo - pad, hi + pad)
        }
    };
    let (x0, x1) = range(|p| p.0);
    let (y0, y1) = range(|p| p.1);
    let sx = |x: f64| m + (x - x0) / (x1 - x0) * (w - 2.0 * m);
    let sy = |y: f64| h - m - (y - y0) / (y1 - y0) * (h - 2.0 * m);
    let y_label = records
        .first()
        .map(|r| r.bound_kind.as_str())
        .unwrap_or("bound");

    let mut s = String::new();
    s.push_str(&format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{w}\" height=\"{h}\" viewBox=\"0 0 {w} {h}\">\n"
    ));
    s.push_str(&format!(
        "<rect width=\"{w}\" height=\"{h}\" fill=\"white\"/>\n"
    ));
    s.push_str(&format!(
        "<text x=\"{}\" y=\"30\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"16\">{}</text>\n",
        w / 2.0,
        xml_escape(title)
    ));
    s.push_str(&format!(
        "<line x1=\"{m}\" y1=\"{}\" x2=\"{}\" y2=\"{}\" stroke=\"black\"/>\n",
        h - m,
        w - m,
        h - m
    ));
    s.push_str(&format!(
        "<line x1=\"{m}\" y1=\"{m}\" x2=\"{m}\" y2=\"{}\" stroke=\"black\"/>\n",
        h - m
    ));
    let ticks = 4;
    for i in 0..=ticks {
        let f = i as f64 / ticks as f64;
        let (xv, yv) = (x0 + f * (x1 - x0), y0 + f * (y1 - y0));
        let (px, py) = (sx(xv), sy(yv));
        s.push_str(&format!(
            "<line x1=\"{px:.2}\" y1=\"{}\" x2=\"{px:.2}\" y2=\"{}\" stroke=\"black\"/>\n",
            h - m,
            h - m + 5.0
        ));
        s.push_str(&format!(
            "<text x=\"{px:.2}\" y=\"{}\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"11\">{}</text>\n",
            h - m + 18.0,
            fmt_tick(xv)
        ));
        s.push_str(&format!(
            "<line x1=\"{}\" y1=\"{py:.2}\" x2=\"{m}\" y2=\"{py:.2}\" stroke=\"black\"/>\n",
            m - 5.0
        ));
        s.push_str(&format!(
            "<text x=\"{}\" y=\"{:.2}\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"11\">{}</text>\n",
            m - 8.0,
            py + 4.0,
            fmt_tick(yv)
        ));
    }
    s.push_str(&format!(
        "<text x=\"{}\" y=\"{}\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"13\">zeta</text>\n",
        w / 2.0,
        h - 20.0
    ));
    s.push_str(&format!(
        "<text x=\"18\" y=\"{}\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"13\" transform=\"rotate(-90 18 {})\">{}</text>\n",
        h / 2.0,
        h / 2.0,
        xml_escape(y_label)
    ));
    let poly: Vec<String> = pts
        .iter()
        .map(|&(x, y)| format!("{:.2},{:.2}", sx(x), sy(y)))
        .collect();
    s.push_str(&format!(
        "<polyline fill=\"none\" stroke=\"steelblue\" stroke-width=\"1.5\" points=\"{}\"/>\n",
        poly.join(" ")
    ));
    for &(x, y) in &pts {
        s.push_str(&format!(
            "<circle cx=\"{:.2}\" cy=\"{:.2}\" r=\"3\" fill=\"steelblue\"/>\n",
            sx(x),
            sy(y)
        ));
    }
    s.push_str("</svg>\n");
    Ok(s)
}

fn write_file(path: &Path, contents: &str) -> Result<()> {
    let mut f = fs::File::create(path)?;
    f.write_all(contents.as_bytes())?;
    Ok(())
}

pub fn emit(records: &[SweepRecord], format: Format, path: &Path) -> Result<()> {
    let text = match format {
        Format::Csv => to_csv(records)?,
        Format::Json => to_json(records)?,
        Format::Svg => {
            let title = path.file_stem().and_then(|s| s.to_str()).unwrap_or("sweep");
            to_svg(records, title)?
        }
    };
    write_file(path, &text)
}

/// One curve of a figure preset.
#[derive(Debug, Clone, PartialEq)]
pub struct PresetCurve {
    pub name: &'static str,
    pub plan: SweepPlan,
}

/// The sweep bundle behind figure `id`. Each curve sweeps `mu` on a log
/// scale with `gamma_big = 0.1 mu` or `a = 0.6 mu` held fixed, so the memory
/// content varies along the curve while the rate ratios stay put.
pub fn preset_curves(id: u8) -> Result<Vec<PresetCurve>> {
    let oun = ChannelModel::oun(1.0, 0.1)?;
    let rtn = ChannelModel::rtn(0.6, 1.0)?;
    let nmad = ChannelModel::nmad(1.0, 0.1)?;
    let plus = BlochState::plus();
    let excited = BlochState::excited();
    let mixed_x = BlochState::new(0.5, 0.0, 0.0)?;
    let mixed_z = BlochState::new(0.0, 0.0, 0.5)?;
    let curve = |name, channel, state, tau: f64, bound, closed_form, lo, hi| PresetCurve {
        name,
        plan: SweepPlan {
            base: Scenario {
                closed_form,
                ..Scenario::new(channel, state, tau, bound)
            },
            vary: SweepVariable::Mu,
            lo,
            hi,
            steps: PRESET_STEPS,
            scale: Scale::Log,
            scale_rates_with_mu: true,
        },
    };
    let (lo, hi) = (0.05, 3.0);
    let trio = |a: BlochState, b: BlochState, bound: BoundKind, closed: bool| {
        vec![
            curve("oun", oun, a, 1.0, bound, closed, lo, hi),
            curve("rtn", rtn, a, 1.0, bound, closed, lo, hi),
            curve("nmad", nmad, b, 1.0, bound, closed, lo, hi),
        ]
    };
    match id {
        1 => Ok(trio(plus, excited, BoundKind::RelativePurity, false)),
        2 => Ok(trio(plus, excited, BoundKind::FisherSpeed, false)),
        3 => Ok(vec![curve(
            "nmad",
            nmad,
            excited,
            2.0 * std::f64::consts::PI,
            BoundKind::BuresDl(Norm::Op),
            true,
            0.02,
            1.2,
        )]),
        4 => Ok(trio(mixed_x, mixed_z, BoundKind::RelativePurity, false)),
        _ => Err(QslError::InvalidParameter(format!(
            "figure preset must be 1-4, got {id}"
        ))),
    }
}

#[derive(Debug, Clone, Serialize)]
struct CurveMeta {
    channel: &'static str,
    base_channel: String,
    state: BlochState,
    purity: f64,
    bound: BoundKind,
    closed_form: bool,
    steps: usize,
    failed_points: usize,
    spearman: Option<f64>,
    csv: String,
    svg: String,
}

#[derive(Debug, Clone, Serialize)]
struct FigureMeta {
    figure: u8,
    sweep_variable: &'static str,
    scale: Scale,
    lo: f64,
    hi: f64,
    tau: f64,
    held_fixed: &'static str,
    note: &'static str,
    curves: Vec<CurveMeta>,
}

/// Files and rows written by [`fig_preset`].
#[derive(Debug, Clone)]
pub struct FigureOutput {
    pub files: Vec<PathBuf>,
    pub curves: Vec<(&'static str, Vec<SweepRecord>)>,
}

impl FigureOutput {
    pub fn failed_points(&self) -> usize {
        self.curves
            .iter()
            .flat_map(|(_, r)| r)
            .filter(|r| !r.is_ok())
            .count()
    }
}

/// Runs preset `id` and writes `fig<id>_<channel>.csv`, `.svg` and
/// `fig<id>_meta.json` into `out_dir`.
pub fn fig_preset(id: u8, out_dir: &Path, jobs: usize) -> Result<FigureOutput> {
    let curves = preset_curves(id)?;
    fs::create_dir_all(out_dir)?;
    let mut files = Vec::new();
    let mut out = Vec::new();
    let mut metas = Vec::new();
    for c in &curves {
        let records = run_sweep(&c.plan, jobs)?;
        let csv_path = out_dir.join(format!("fig{id}_{}.csv", c.name));
        let svg_path = out_dir.join(format!("fig{id}_{}.svg", c.name));
        emit(&records, Format::Csv, &csv_path)?;
        let title = format!("fig {id}: {} {}", c.name, c.plan.base.bound);
        let svg = match to_svg(&records, &title) {
            Ok(s) => s,
            Err(_) => format!(
                "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"640\" height=\"480\"><text x=\"20\" y=\"40\">{}: no successful points</text></svg>\n",
                xml_escape(&title)
            ),
        };
        write_file(&svg_path, &svg)?;
        let state = c.plan.base.state;
        metas.push(CurveMeta {
            channel: c.name,
            base_channel: c.plan.base.channel.tag(),
            state,
            purity: purity(&bloch_to_rho(&state)?),
            bound: c.plan.base.bound,
            closed_form: c.plan.base.closed_form,
            steps: c.plan.steps,
            failed_points: records.iter().filter(|r| !r.is_ok()).count(),
            spearman: trend(&records),
            csv: file_name(&csv_path),
            svg: file_name(&svg_path),
        });
        files.push(csv_path);
        files.push(svg_path);
        out.push((c.name, records));
    }
    let first = &curves[0].plan;
    let meta = FigureMeta {
        figure: id,
        sweep_variable: first.vary.name(),
        scale: first.scale,
        lo: first.lo,
        hi: first.hi,
        tau: first.base.tau,
        held_fixed: "gamma_big/mu = 0.1 (oun, nmad); a/mu = 0.6 (rtn)",
        note: "mu is swept log-spaced with gamma_big/mu and a/mu held fixed; the ratios set the regime, mu sets the memory content at fixed tau",
        curves: metas,
    };
    let meta_path = out_dir.join(format!("fig{id}_meta.json"));
    let mut text = serde_json::to_string_pretty(&meta)?;
    text.push('\n');
    write_file(&meta_path, &text)?;
    files.push(meta_path);
    Ok(FigureOutput { files, curves: out })
}

fn file_name(p: &Path) -> String {
    p.file_name()
        .and_then(|s| s.to_str())
        .unwrap_or_default()
        .to_string()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn base() -> Scenario {
        Scenario::new(
            ChannelModel::oun(1.0, 0.1).unwrap(),
            BlochState::plus(),
            1.0,
            BoundKind::RelativePurity,
        )
    }

    fn plan(steps: usize) -> SweepPlan {
        SweepPlan {
            base: base(),
            vary: SweepVariable::GammaBig,
            lo: 0.05,
            hi: 5.0,
            steps,
            scale: Scale::Log,
            scale_rates_with_mu: false,
        }
    }

    #[test]
    fn scenario_example() {
        let r = run_scenario(&base()).unwrap();
        assert!((r.zeta.unwrap() - 0.024).abs() < 0.024 * 0.01);
        assert!((r.bound_value.unwrap() - 0.567).abs() < 0.567 * 0.01);
        assert!(r.is_ok());
    }

    #[test]
    fn plan_validation() {
        assert!(run_sweep(&plan(0), 1).is_err());
        assert!(run_sweep(&plan(1), 1).is_err());
        let mut p = plan(3);
        p.hi = p.lo;
        assert!(p.validate().is_err());
        p = plan(3);
        p.vary = SweepVariable::A;
        assert!(p.validate().is_err());
        assert_eq!(run_sweep(&plan(2), 1).unwrap().len(), 2);
    }

    #[test]
    fn values_hit_endpoints() {
        let v = plan(7).values();
        assert_eq!(v[0], 0.05);
        assert_eq!(v[6], 5.0);
        assert!(v.windows(2).all(|w| w[1] > w[0]));
        let mut p = plan(5);
        p.scale = Scale::Linear;
        assert!((p.values()[2] - 2.525).abs() < 1e-12);
    }

    #[test]
    fn mu_sweep_keeps_ratios() {
        let mut p = plan(3);
        p.vary = SweepVariable::Mu;
        p.scale_rates_with_mu = true;
        let s = p.scenario_at(2.0).unwrap();
        assert_eq!(s.channel, ChannelModel::oun(2.0, 0.2).unwrap());
    }

    #[test]
    fn failures_become_rows() {
        let mut p = plan(3);
        p.base.channel = ChannelModel::rtn(0.6, 1.0).unwrap();
        p.vary = SweepVariable::Tau;
        p.lo = 1.0;
        p.hi = 6.0;
        let rows = run_sweep(&p, 1).unwrap();
        assert_eq!(rows.len(), 3);
        assert!(rows[0].is_ok());
        assert!(!rows[2].is_ok() && rows[2].zeta.is_none());
        assert!(rows[2].status.starts_with("error:"));
    }

    #[test]
    fn csv_shape_and_round_trip() {
        assert_eq!(to_csv(&[]).unwrap(), format!("{CSV_HEADER}\n"));
        let rows = run_sweep(&plan(2), 1).unwrap();
        let text = to_csv(&rows).unwrap();
        assert_eq!(text.lines().count(), 3);
        assert_eq!(text.lines().next().unwrap(), CSV_HEADER);
        assert_eq!(from_csv(&text).unwrap(), rows);
    }

    #[test]
    fn json_keys_match_csv() {
        let rows = run_sweep(&plan(2), 1).unwrap();
        let v: serde_json::Value = serde_json::from_str(&to_json(&rows).unwrap()).unwrap();
        let keys: Vec<&str> = v[0]
            .as_object()
            .unwrap()
            .keys()
            .map(String::as_str)
            .collect();
        let mut expect: Vec<&str> = CSV_HEADER.split(',').collect();
        let mut got = keys.clone();
        expect.sort_unstable();
        got.sort_unstable();
        assert_eq!(got, expect);
    }

    #[test]
    fn svg_needs_points() {
        assert!(to_svg(&[], "x").is_err());
        let rows = run_sweep(&plan(3), 1).unwrap();
        let svg = to_svg(&rows, "t").unwrap();
        assert_eq!(svg.matches("<polyline").count(), 1);
        assert_eq!(svg.matches("<circle").count(), 3);
    }

    #[test]
    fn parallel_matches_serial() {
        let p = plan(6);
        assert_eq!(run_sweep(&p, 1).unwrap(), run_sweep(&p, 4).unwrap());
    }

    #[test]
    fn unknown_preset() {
        assert!(preset_curves(0).is_err());
        assert!(preset_curves(5).is_err());
        assert_eq!(preset_curves(3).unwrap().len(), 1);
    }
}
