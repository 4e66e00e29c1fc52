//! `qslab`: evolve channels, compute ζ and speed limits, run sweeps and
//! figure presets.
//!
//! Rates are given in units of `--mu` (default 1): `--gamma-big 0.1 --mu 2`
//! means Γ = 0.2. Exit codes: 0 success, 1 invalid input or failure,
//! 2 sweep finished with error rows.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Deserialize;
use serde_json::json;

use qslab::memory::{zeta_golden, DEFAULT_GRID};
use qslab::qsl::{compute, BoundKind};
use qslab::sweep::{
    emit, fig_preset, run_sweep, Format, Scale, Scenario, SweepPlan, SweepVariable,
};
use qslab::{zeta, BlochState, ChannelModel, QslError};

#[derive(Parser, Debug)]
#[command(
    name = "qslab",
    version,
    about = "Non-Markovian qubit channels, memory measure and quantum speed limits"
)]
struct Cli {
    /// JSON file whose keys mirror the long flags (snake_case); flags win.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Tabulate p(t), γ(t) and the evolved Bloch vector.
    Evolve(EvolveArgs),
    /// Memory measure ζ over [0, T].
    Zeta(ZetaArgs),
    /// One speed-limit bound.
    Qsl(QslArgs),
    /// Sweep one parameter and emit (ζ, bound) rows.
    Sweep(SweepArgs),
    /// Figure preset 1-4.
    Fig(FigArgs),
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum, Deserialize)]
#[serde(rename_all = "lowercase")]
enum Family {
    Oun,
    Rtn,
    Nmad,
}

/// Channel selection shared by all subcommands.
#[derive(Args, Debug, Default, Clone, Deserialize)]
#[serde(default)]
struct ChannelArgs {
    #[arg(long, value_enum)]
    channel: Option<Family>,
    /// Unit rate μ.
    #[arg(long)]
    mu: Option<f64>,
    /// Γ in units of μ (OUN, NMAD).
    #[arg(long)]
    gamma_big: Option<f64>,
    /// a in units of μ (RTN).
    #[arg(long)]
    a: Option<f64>,
}

#[derive(Args, Debug, Default, Clone, Deserialize)]
#[serde(default)]
struct StateArgs {
    /// plus | excited | ground | mixed-x=R | mixed-z=R | rx=..,ry=..,rz=..
    #[arg(long, allow_hyphen_values = true)]
    state: Option<String>,
}

#[derive(Args, Debug, Default, Clone, Deserialize)]
#[serde(default)]
struct BoundArgs {
    /// relative_purity | fisher_speed | bures_dl_{op,hs,tr} | wu_mixed_{op,hs,tr}
    #[arg(long)]
    bound: Option<String>,
    /// Driving time τ.
    #[arg(long)]
    tau: Option<f64>,
    /// Use closed forms where the channel has one.
    #[arg(long)]
    #[serde(skip)]
    closed_form: bool,
    /// Closed damping relative-purity form with the typeset speed factor.
    #[arg(long)]
    #[serde(skip)]
    printed_form: bool,
    /// Time grid for ζ.
    #[arg(long)]
    grid: Option<usize>,
}

#[derive(Args, Debug)]
struct EvolveArgs {
    #[command(flatten)]
    channel: ChannelArgs,
    #[command(flatten)]
    state: StateArgs,
    /// Last time of the table.
    #[arg(long, default_value_t = 1.0)]
    t_max: f64,
    /// Number of rows.
    #[arg(long, default_value_t = 11)]
    steps: usize,
}

#[derive(Args, Debug)]
struct ZetaArgs {
    #[command(flatten)]
    channel: ChannelArgs,
    /// Horizon T.
    #[arg(long)]
    horizon: Option<f64>,
    #[arg(long)]
    grid: Option<usize>,
    /// Also run the golden-section path and report both.
    #[arg(long)]
    verify: bool,
}

#[derive(Args, Debug)]
struct QslArgs {
    #[command(flatten)]
    channel: ChannelArgs,
    #[command(flatten)]
    state: StateArgs,
    #[command(flatten)]
    bound: BoundArgs,
}

#[derive(Args, Debug)]
struct SweepArgs {
    #[command(flatten)]
    channel: ChannelArgs,
    #[command(flatten)]
    state: StateArgs,
    #[command(flatten)]
    bound: BoundArgs,
    /// gamma_big | a | mu | tau (rates in units of μ).
    #[arg(long)]
    vary: Option<String>,
    #[arg(long)]
    lo: Option<f64>,
    #[arg(long)]
    hi: Option<f64>,
    #[arg(long)]
    steps: Option<usize>,
    /// linear | log
    #[arg(long)]
    scale: Option<String>,
    /// When varying mu, hold gamma_big/mu and a/mu fixed.
    #[arg(long)]
    lock_ratios: bool,
    /// csv | json | svg
    #[arg(long, default_value = "csv")]
    format: String,
    /// Output file; stdout when absent (csv and json only).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads; 1 is serial, 0 uses every core.
    #[arg(long, default_value_t = 0)]
    jobs: usize,
}

#[derive(Args, Debug)]
struct FigArgs {
    /// Figure number 1-4.
    #[arg(long)]
    id: u8,
    #[arg(long, default_value = "figures")]
    out_dir: PathBuf,
    #[arg(long, default_value_t = 0)]
    jobs: usize,
}

/// Flat view of a `--config` file.
#[derive(Debug, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct ConfigFile {
    #[serde(flatten)]
    channel: ChannelArgs,
    state: Option<String>,
    bound: Option<String>,
    tau: Option<f64>,
    grid: Option<usize>,
    closed_form: Option<bool>,
    printed_form: Option<bool>,
    horizon: Option<f64>,
    vary: Option<String>,
    lo: Option<f64>,
    hi: Option<f64>,
    steps: Option<usize>,
    scale: Option<String>,
    lock_ratios: Option<bool>,
}

#[derive(Debug)]
enum Failure {
    Invalid(String),
    Partial(usize),
}

impl From<QslError> for Failure {
    fn from(e: QslError) -> Self {
        Failure::Invalid(e.to_string())
    }
}

impl From<String> for Failure {
    fn from(e: String) -> Self {
        Failure::Invalid(e)
    }
}

impl From<&str> for Failure {
    fn from(e: &str) -> Self {
        Failure::Invalid(e.to_owned())
    }
}

fn load_config(path: Option<&Path>) -> Result<ConfigFile, Failure> {
    match path {
        None => Ok(ConfigFile::default()),
        Some(p) => {
            let text = std::fs::read_to_string(p)
                .map_err(|e| format!("cannot read {}: {e}", p.display()))?;
            serde_json::from_str(&text)
                .map_err(|e| Failure::Invalid(format!("bad config {}: {e}", p.display())))
        }
    }
}

fn build_channel(cli: &ChannelArgs, cfg: &ChannelArgs) -> Result<ChannelModel, Failure> {
    let family = cli
        .channel
        .or(cfg.channel)
        .ok_or("--channel is required (oun, rtn or nmad)")?;
    let mu = cli.mu.or(cfg.mu).unwrap_or(1.0);
    let need = |v: Option<f64>, name: &str| {
        v.ok_or_else(|| format!("--{name} is required for this channel"))
    };
    Ok(match family {
        Family::Oun => {
            ChannelModel::oun(mu, mu * need(cli.gamma_big.or(cfg.gamma_big), "gamma-big")?)?
        }
        Family::Nmad => {
            ChannelModel::nmad(mu, mu * need(cli.gamma_big.or(cfg.gamma_big), "gamma-big")?)?
        }
        Family::Rtn => ChannelModel::rtn(mu * need(cli.a.or(cfg.a), "a")?, mu)?,
    })
}

fn parse_state(s: &str) -> Result<BlochState, Failure> {
    let s = s.trim();
    let state = match s {
        "plus" => BlochState::plus(),
        "excited" => BlochState::excited(),
        "ground" => BlochState::ground(),
        "mixed" | "maximally-mixed" => BlochState::maximally_mixed(),
        _ => {
            let number = |v: &str| {
                v.trim()
                    .parse::<f64>()
                    .map_err(|_| format!("bad number '{v}' in --state"))
            };
            if let Some(r) = s.strip_prefix("mixed-x=") {
                BlochState::new(number(r)?, 0.0, 0.0)?
            } else if let Some(r) = s.strip_prefix("mixed-z=") {
                BlochState::new(0.0, 0.0, number(r)?)?
            } else {
                let (mut rx, mut ry, mut rz) = (0.0, 0.0, 0.0);
                for part in s.split([',', ';']).filter(|p| !p.trim().is_empty()) {
                    let (k, v) = part
                        .split_once('=')
                        .ok_or_else(|| format!("bad --state component '{part}'"))?;
                    match k.trim() {
                        "rx" => rx = number(v)?,
                        "ry" => ry = number(v)?,
                        "rz" => rz = number(v)?,
                        other => return Err(format!("unknown --state key '{other}'").into()),
                    }
                }
                BlochState::new(rx, ry, rz)?
            }
        }
    };
    Ok(state)
}

fn build_state(cli: &StateArgs, cfg: &ConfigFile) -> Result<BlochState, Failure> {
    let s = cli
        .state
        .clone()
        .or_else(|| cfg.state.clone())
        .ok_or("--state is required")?;
    parse_state(&s)
}

fn build_scenario(
    channel: &ChannelArgs,
    state: &StateArgs,
    bound: &BoundArgs,
    cfg: &ConfigFile,
) -> Result<Scenario, Failure> {
    let c = build_channel(channel, &cfg.channel)?;
    let s = build_state(state, cfg)?;
    let kind: BoundKind = bound
        .bound
        .clone()
        .or_else(|| cfg.bound.clone())
        .ok_or("--bound is required")?
        .parse()?;
    let tau = bound.tau.or(cfg.tau).ok_or("--tau is required")?;
    let scenario = Scenario {
        channel: c,
        state: s,
        tau,
        bound: kind,
        grid: bound.grid.or(cfg.grid).unwrap_or(DEFAULT_GRID),
        closed_form: bound.closed_form || cfg.closed_form.unwrap_or(false),
        printed_form: bound.printed_form || cfg.printed_form.unwrap_or(false),
    };
    scenario.validate()?;
    Ok(scenario)
}

fn print_json(v: &serde_json::Value) {
    println!(
        "{}",
        serde_json::to_string_pretty(v).expect("JSON values always serialise")
    );
}

fn cmd_evolve(a: &EvolveArgs, cfg: &ConfigFile) -> Result<(), Failure> {
    let c = build_channel(&a.channel, &cfg.channel)?;
    let s = build_state(&a.state, cfg)?;
    if a.steps < 1 || a.t_max.is_nan() || a.t_max < 0.0 {
        return Err("--steps must be at least 1 and --t-max non-negative"
            .to_string()
            .into());
    }
    println!("t,p,gamma,rx,ry,rz,purity");
    for k in 0..a.steps {
        let t = if a.steps == 1 {
            a.t_max
        } else {
            a.t_max * k as f64 / (a.steps - 1) as f64
        };
        let p = c.decoherence_p(t)?;
        let gamma = c.rate_gamma(t).map(|g| g.to_string()).unwrap_or_default();
        let rho = c.evolve(&s, t)?;
        let r = rho.to_bloch();
        println!(
            "{t},{p},{gamma},{},{},{},{}",
            r.rx,
            r.ry,
            r.rz,
            qslab::qmat::purity(&rho)
        );
    }
    Ok(())
}

fn cmd_zeta(a: &ZetaArgs, cfg: &ConfigFile) -> Result<(), Failure> {
    let c = build_channel(&a.channel, &cfg.channel)?;
    let horizon = a
        .horizon
        .or(cfg.horizon)
        .or(cfg.tau)
        .ok_or("--horizon is required")?;
    let grid = a.grid.or(cfg.grid).unwrap_or(DEFAULT_GRID);
    let z = zeta(&c, horizon, grid)?;
    let mut out = json!({ "channel": c.tag(), "result": z });
    if a.verify {
        out["golden"] =
            serde_json::to_value(zeta_golden(&c, horizon, grid)?).expect("plain struct");
    }
    print_json(&out);
    Ok(())
}

fn cmd_qsl(a: &QslArgs, cfg: &ConfigFile) -> Result<(), Failure> {
    let s = build_scenario(&a.channel, &a.state, &a.bound, cfg)?;
    let r = compute(&s.channel, &s.state, s.tau, s.bound, s.bound_options())?;
    print_json(&serde_json::to_value(&r).expect("plain struct"));
    Ok(())
}

fn cmd_sweep(a: &SweepArgs, cfg: &ConfigFile) -> Result<(), Failure> {
    let base = build_scenario(&a.channel, &a.state, &a.bound, cfg)?;
    let vary: SweepVariable = a
        .vary
        .clone()
        .or_else(|| cfg.vary.clone())
        .ok_or("--vary is required")?
        .parse()?;
    let scale: Scale = a
        .scale
        .clone()
        .or_else(|| cfg.scale.clone())
        .unwrap_or_else(|| "linear".into())
        .parse()?;
    let mut plan = SweepPlan {
        base,
        vary,
        lo: a.lo.or(cfg.lo).ok_or("--lo is required")?,
        hi: a.hi.or(cfg.hi).ok_or("--hi is required")?,
        steps: a.steps.or(cfg.steps).ok_or("--steps is required")?,
        scale,
        scale_rates_with_mu: a.lock_ratios || cfg.lock_ratios.unwrap_or(false),
    };
    // rate-valued sweep bounds are in units of μ like every other rate flag
    if matches!(vary, SweepVariable::GammaBig | SweepVariable::A) {
        let mu = plan.base.channel.mu();
        plan.lo *= mu;
        plan.hi *= mu;
    }
    let format: Format = a.format.parse()?;
    let records = run_sweep(&plan, a.jobs)?;
    match &a.out {
        Some(path) => emit(&records, format, path)?,
        None => match format {
            Format::Csv => print!("{}", qslab::sweep::to_csv(&records)?),
            Format::Json => print!("{}", qslab::sweep::to_json(&records)?),
            Format::Svg => return Err("--format svg needs --out".to_string().into()),
        },
    }
    let failed = records.iter().filter(|r| !r.is_ok()).count();
    if failed > 0 {
        return Err(Failure::Partial(failed));
    }
    Ok(())
}

fn cmd_fig(a: &FigArgs) -> Result<(), Failure> {
    let out = fig_preset(a.id, &a.out_dir, a.jobs)?;
    for f in &out.files {
        println!("{}", f.display());
    }
    match out.failed_points() {
        0 => Ok(()),
        n => Err(Failure::Partial(n)),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let result = load_config(cli.config.as_deref()).and_then(|cfg| match &cli.command {
        Command::Evolve(a) => cmd_evolve(a, &cfg),
        Command::Zeta(a) => cmd_zeta(a, &cfg),
        Command::Qsl(a) => cmd_qsl(a, &cfg),
        Command::Sweep(a) => cmd_sweep(a, &cfg),
        Command::Fig(a) => cmd_fig(a),
    });
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Invalid(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::Partial(n)) => {
            eprintln!("warning: {n} sweep point(s) failed; see the status column");
            ExitCode::from(2)
        }
    }
}
