//! Command-line front end: sensitivity reports, efficiency sweeps, Monte
//! Carlo experiments, and the self-test.
//!
//! Exit codes: 0 success, 2 usage or configuration problem, 3 numerical
//! validation failure. Relative output paths resolve against `MZIR_OUT_DIR`
//! when that variable is set.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

use mzir::io::g17;
use mzir::{
    apply, delta_phi_recycled_bs, efficiency_sweep, empirical_sensitivity, fisher_report,
    nt_moments, nt_variance, plain_closed_form_general, plain_closed_form_sq, plain_closed_form_tf,
    plain_sensitivity, recycled_sensitivity, sample_counts, squeezed_vacuum, squeezing_for_mean,
    twin_fock, BranchChannel, Error, JointSectorState, MomentProfile, NtMoments,
    NumberCorrelatedState, SensitivityReport, SignalKind, StateKind,
};

#[derive(Parser)]
#[command(name = "mzir", version, about = "Number-correlated interferometry with information recycling")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Closed-form and moment-engine phase sensitivities for one setting
    Sensitivity(SensitivityArgs),
    /// Sweep the transfer efficiency and write the sensitivity curves as CSV
    Fig2(Fig2Args),
    /// Monte Carlo measurement simulation and phase estimation
    Sample(SampleArgs),
    /// Run the oracle-equivalence and invariant self-test
    Validate(ValidateArgs),
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum StateArg {
    TwinFock,
    Squeezed,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum SignalArg {
    Recycled,
    Plain,
}

impl From<SignalArg> for SignalKind {
    fn from(s: SignalArg) -> Self {
        match s {
            SignalArg::Recycled => SignalKind::Recycled,
            SignalArg::Plain => SignalKind::Plain,
        }
    }
}

/// Everything a run needs; the JSON config file mirrors this structure and
/// explicit flags override its fields.
#[derive(Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
struct RunConfig {
    state: Option<String>,
    state_file: Option<PathBuf>,
    nt: Option<f64>,
    theta: Option<f64>,
    tail_tol: Option<f64>,
    q: Option<f64>,
    channel_file: Option<PathBuf>,
    signal: Option<String>,
    phi_true: Option<f64>,
    shots: Option<usize>,
    estimates: Option<usize>,
    seed: Option<u64>,
    grid_points: Option<usize>,
    out: Option<PathBuf>,
}

#[derive(Args)]
struct CommonStateArgs {
    /// Donor state family
    #[arg(long, value_enum)]
    state: Option<StateArg>,
    /// Load the donor state from a JSON document instead
    #[arg(long, conflicts_with = "state")]
    state_file: Option<PathBuf>,
    /// Mean total particle number of the donor state
    #[arg(long)]
    nt: Option<f64>,
    /// Squeezing phase
    #[arg(long)]
    theta: Option<f64>,
    /// Truncation tail tolerance for squeezed states
    #[arg(long)]
    tail_tol: Option<f64>,
    /// Beamsplitter transfer efficiency
    #[arg(long)]
    q: Option<f64>,
    /// Load the transfer channel from a JSON document instead
    #[arg(long, conflicts_with = "q")]
    channel_file: Option<PathBuf>,
    /// JSON config file mirroring these flags
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Args)]
struct SensitivityArgs {
    #[command(flatten)]
    common: CommonStateArgs,
    /// Measurement signal
    #[arg(long, value_enum)]
    signal: Option<SignalArg>,
    /// Also write the report as JSON
    #[arg(long)]
    out: Option<PathBuf>,
    /// Write the constructed donor state as JSON
    #[arg(long)]
    dump_state: Option<PathBuf>,
}

#[derive(Args)]
struct Fig2Args {
    /// Mean total particle number (defaults to 1e4)
    #[arg(long)]
    nt: Option<f64>,
    /// Number of efficiency grid points (defaults to 1000)
    #[arg(long)]
    grid_points: Option<usize>,
    /// Output CSV path
    #[arg(long)]
    out: Option<PathBuf>,
    /// JSON config file mirroring these flags
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Args)]
struct SampleArgs {
    #[command(flatten)]
    common: CommonStateArgs,
    /// Measurement signal
    #[arg(long, value_enum)]
    signal: Option<SignalArg>,
    /// True phase to simulate at
    #[arg(long)]
    phi_true: Option<f64>,
    /// Shots per estimate
    #[arg(long)]
    shots: Option<usize>,
    /// Number of independent estimates
    #[arg(long)]
    estimates: Option<usize>,
    /// Random seed
    #[arg(long)]
    seed: Option<u64>,
    /// Write every measurement record as CSV
    #[arg(long)]
    records: Option<PathBuf>,
    /// Write the run summary as JSON
    #[arg(long)]
    summary: Option<PathBuf>,
}

#[derive(Args)]
struct ValidateArgs {
    /// Also load and validate this channel document
    #[arg(long)]
    channel_file: Option<PathBuf>,
    /// Scale one recycled moment-table coefficient by 1 + eps (test hook)
    #[arg(long, hide = true)]
    inject_fault: Option<f64>,
}

/// Errors carrying their process exit code.
struct CliError {
    code: u8,
    message: String,
}

impl CliError {
    fn usage(message: impl Into<String>) -> Self {
        CliError { code: 2, message: message.into() }
    }

    fn numerical(message: impl Into<String>) -> Self {
        CliError { code: 3, message: message.into() }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        CliError::usage(e.to_string())
    }
}

type CliResult<T> = Result<T, CliError>;

fn out_path(path: &Path) -> PathBuf {
    match std::env::var_os("MZIR_OUT_DIR") {
        Some(dir) if path.is_relative() => PathBuf::from(dir).join(path),
        _ => path.to_path_buf(),
    }
}

fn write_file(path: &Path, contents: &str) -> CliResult<()> {
    let resolved = out_path(path);
    if let Some(parent) = resolved.parent() {
        if !parent.as_os_str().is_empty() {
            fs::create_dir_all(parent)
                .map_err(|e| CliError::usage(format!("cannot create {}: {e}", parent.display())))?;
        }
    }
    fs::write(&resolved, contents)
        .map_err(|e| CliError::usage(format!("cannot write {}: {e}", resolved.display())))
}

fn load_config(path: &Option<PathBuf>) -> CliResult<RunConfig> {
    match path {
        None => Ok(RunConfig::default()),
        Some(p) => {
            let text = fs::read_to_string(p)
                .map_err(|e| CliError::usage(format!("cannot read {}: {e}", p.display())))?;
            serde_json::from_str(&text)
                .map_err(|e| CliError::usage(format!("bad config {}: {e}", p.display())))
        }
    }
}

struct Setting {
    donor: NumberCorrelatedState,
    channel: BranchChannel,
    joint: JointSectorState,
    /// Beamsplitter efficiency when the channel is one.
    q: Option<f64>,
}

fn resolve_state(
    common: &CommonStateArgs,
    config: &RunConfig,
) -> CliResult<NumberCorrelatedState> {
    let state_file = common.state_file.clone().or(config.state_file.clone());
    if let Some(path) = state_file {
        let text = fs::read_to_string(&path)
            .map_err(|e| CliError::usage(format!("cannot read {}: {e}", path.display())))?;
        return Ok(mzir::io::state_from_json(&text)?);
    }
    let kind = match (common.state, config.state.as_deref()) {
        (Some(k), _) => k,
        (None, Some("twin-fock")) => StateArg::TwinFock,
        (None, Some("squeezed")) => StateArg::Squeezed,
        (None, Some(other)) => {
            return Err(CliError::usage(format!("unknown state kind `{other}`")))
        }
        (None, None) => {
            return Err(CliError::usage(
                "specify exactly one donor state (--state or --state-file)",
            ))
        }
    };
    let nt = common
        .nt
        .or(config.nt)
        .ok_or_else(|| CliError::usage("--nt is required"))?;
    if nt <= 0.0 || !nt.is_finite() {
        return Err(CliError::usage(format!("nt must be positive, got {nt}")));
    }
    match kind {
        StateArg::TwinFock => {
            if nt.fract() != 0.0 {
                return Err(CliError::usage("twin-Fock nt must be an even integer"));
            }
            Ok(twin_fock(nt as u64)?)
        }
        StateArg::Squeezed => {
            let theta = common.theta.or(config.theta).unwrap_or(0.0);
            let tail_tol = common.tail_tol.or(config.tail_tol).unwrap_or(1e-12);
            Ok(squeezed_vacuum(squeezing_for_mean(nt), theta, tail_tol)?)
        }
    }
}

fn resolve_setting(common: &CommonStateArgs, config: &RunConfig) -> CliResult<Setting> {
    let donor = resolve_state(common, config)?;
    let channel_file = common.channel_file.clone().or(config.channel_file.clone());
    let (channel, q) = if let Some(path) = channel_file {
        let text = fs::read_to_string(&path)
            .map_err(|e| CliError::usage(format!("cannot read {}: {e}", path.display())))?;
        let ch = mzir::io::channel_from_json(&text)?;
        let q = match ch.kind() {
            mzir::ChannelKind::Beamsplitter { q } => Some(q),
            _ => None,
        };
        (ch, q)
    } else {
        let q = common
            .q
            .or(config.q)
            .ok_or_else(|| CliError::usage("either --q or --channel-file is required"))?;
        (mzir::beamsplitter_channel(q, donor.n_max())?, Some(q))
    };
    if channel.n_max() < donor.n_max() {
        return Err(CliError::usage(format!(
            "channel covers sectors up to {}, state needs {}",
            channel.n_max(),
            donor.n_max()
        )));
    }
    let joint = apply(&channel, &donor)?;
    Ok(Setting { donor, channel, joint, q })
}

fn resolve_signal(flag: Option<SignalArg>, config: &RunConfig) -> CliResult<SignalKind> {
    match (flag, config.signal.as_deref()) {
        (Some(s), _) => Ok(s.into()),
        (None, Some("recycled")) => Ok(SignalKind::Recycled),
        (None, Some("plain")) => Ok(SignalKind::Plain),
        (None, Some(other)) => Err(CliError::usage(format!("unknown signal `{other}`"))),
        (None, None) => Ok(SignalKind::Recycled),
    }
}

/// Donor-specific plain-signal closed form, or the general moment form for
/// custom states.
fn plain_closed_form_for(donor: &NumberCorrelatedState, q: f64) -> CliResult<f64> {
    let n_a = q * nt_moments(donor, 1);
    Ok(match donor.kind() {
        StateKind::TwinFock { .. } => plain_closed_form_tf(n_a, q)?,
        StateKind::Squeezed { .. } => plain_closed_form_sq(n_a, q)?,
        StateKind::Custom => plain_closed_form_general(NtMoments::of(donor), q)?,
    })
}

fn cmd_sensitivity(args: &SensitivityArgs) -> CliResult<()> {
    let config = load_config(&args.common.config)?;
    let setting = resolve_setting(&args.common, &config)?;
    let signal = resolve_signal(args.signal, &config)?;

    if let Some(path) = &args.dump_state {
        write_file(path, &mzir::io::state_to_json(&setting.donor))?;
    }

    let nt = nt_moments(&setting.donor, 1);
    let v_nt = nt_variance(&setting.donor);
    let report: SensitivityReport = match signal {
        SignalKind::Recycled => recycled_sensitivity(&setting.joint)?,
        SignalKind::Plain => plain_sensitivity(&setting.joint)?,
    };
    let closed = match (signal, setting.q) {
        (SignalKind::Recycled, Some(q)) => Some(delta_phi_recycled_bs(v_nt, nt, q)?),
        (SignalKind::Plain, Some(q)) => Some(plain_closed_form_for(&setting.donor, q)?),
        _ => None,
    };
    let fisher = setting.q.map(|q| fisher_report(v_nt, nt, q)).transpose()?;

    let signal_name = match signal {
        SignalKind::Recycled => "recycled",
        SignalKind::Plain => "plain",
    };
    println!("donor:            N_t = {}, V(N_t) = {}", g17(nt), g17(v_nt));
    match setting.q {
        Some(q) => println!("channel:          beamsplitter q = {}", g17(q)),
        None => println!("channel:          custom (n_max = {})", setting.channel.n_max()),
    }
    println!("signal:           {signal_name}");
    println!("delta_phi engine: {}", g17(report.delta_phi));
    let residual = match closed {
        Some(c) => {
            println!("delta_phi closed: {}", g17(c));
            let residual = ((report.delta_phi - c) / c).abs();
            println!("residual:         {}", g17(residual));
            Some(residual)
        }
        None => None,
    };
    println!("phi_opt:          {}", g17(report.phi_opt));
    println!("N_a:              {}", g17(report.n_a));
    println!("heisenberg bound: {}", g17(report.bound_heisenberg));
    if let Some(f) = &fisher {
        println!("F_b:              {}", g17(f.f_b));
        println!("F_a:              {}", g17(f.f_a));
    }
    if let Some(qcrb) = report.qcrb {
        println!("qcrb:             {}", g17(qcrb));
    }

    if let Some(path) = &args.out {
        let json = serde_json::json!({
            "nt": nt,
            "v_nt": v_nt,
            "q": setting.q,
            "signal": signal_name,
            "delta_phi_engine": report.delta_phi,
            "delta_phi_closed": closed,
            "residual": residual,
            "phi_opt": report.phi_opt,
            "n_a": report.n_a,
            "heisenberg_bound": report.bound_heisenberg,
            "f_b": fisher.as_ref().map(|f| f.f_b),
            "f_a": fisher.as_ref().map(|f| f.f_a),
            "qcrb": report.qcrb,
        });
        write_file(path, &serde_json::to_string_pretty(&json).unwrap())?;
    }

    // engine and closed form must agree; squeezed states are
    // truncation-limited, everything else is exact algebra
    if let Some(residual) = residual {
        let tol = match setting.donor.kind() {
            StateKind::Squeezed { .. } => 1e-6,
            _ => 1e-9,
        };
        if residual.is_nan() || residual >= tol {
            return Err(CliError::numerical(format!(
                "closed form and moment engine disagree: residual {} exceeds {}",
                g17(residual),
                g17(tol)
            )));
        }
    }
    Ok(())
}

fn cmd_fig2(args: &Fig2Args) -> CliResult<()> {
    let config = load_config(&args.config)?;
    let nt = args.nt.or(config.nt).unwrap_or(1e4);
    let points = args.grid_points.or(config.grid_points).unwrap_or(1000);
    if points == 0 {
        return Err(CliError::usage("grid needs at least one point"));
    }
    let rows = efficiency_sweep(nt, points)?;
    let mut csv = String::from(
        "q,delta_phi_tf_plain,delta_phi_sq_plain,delta_phi_recycled_tf,delta_phi_recycled_sq,qnl,heisenberg\n",
    );
    for r in &rows {
        csv.push_str(&format!(
            "{},{},{},{},{},{},{}\n",
            g17(r.q),
            g17(r.delta_phi_tf_plain),
            g17(r.delta_phi_sq_plain),
            g17(r.delta_phi_recycled_tf),
            g17(r.delta_phi_recycled_sq),
            g17(r.qnl),
            g17(r.heisenberg)
        ));
    }
    match args.out.clone().or(config.out) {
        Some(path) => write_file(&path, &csv)?,
        None => print!("{csv}"),
    }
    Ok(())
}

fn cmd_sample(args: &SampleArgs) -> CliResult<()> {
    let config = load_config(&args.common.config)?;
    let setting = resolve_setting(&args.common, &config)?;
    let signal = resolve_signal(args.signal, &config)?;
    let phi_true = args.phi_true.or(config.phi_true).unwrap_or(0.1);
    let shots = args.shots.or(config.shots).unwrap_or(100);
    let estimates = args.estimates.or(config.estimates).unwrap_or(1000);
    let seed = args.seed.or(config.seed).unwrap_or(0);
    if shots == 0 || estimates == 0 {
        return Err(CliError::usage("shots and estimates must be positive"));
    }
    if !(0.0..std::f64::consts::FRAC_PI_2).contains(&phi_true) || phi_true <= 0.0 {
        return Err(CliError::usage("phi-true must lie in (0, pi/2)"));
    }

    let recycled = signal == SignalKind::Recycled;
    let run = empirical_sensitivity(&setting.joint, recycled, phi_true, shots, estimates, seed)
        .map_err(|e| CliError::numerical(e.to_string()))?;
    let profile = MomentProfile::new(&setting.joint, signal);
    let predicted = profile.moments_at(phi_true).delta_phi() / (shots as f64).sqrt();
    let ratio = run.rmse / predicted;

    println!("phi_true:  {}", g17(phi_true));
    println!("rmse:      {}", g17(run.rmse));
    println!("predicted: {}", g17(predicted));
    println!("ratio:     {}", g17(ratio));

    if let Some(path) = &args.records {
        // the estimation batches consume shot streams in order, so one
        // contiguous resample reproduces every record of the run
        let records = sample_counts(&setting.joint, phi_true, shots * estimates, seed);
        write_file(path, &mzir::io::records_to_csv(&records, recycled))?;
    }
    if let Some(path) = &args.summary {
        let json = serde_json::json!({
            "phi_true": phi_true,
            "rmse": run.rmse,
            "predicted": predicted,
            "ratio": ratio,
            "signal": if recycled { "recycled" } else { "plain" },
            "shots_per_estimate": shots,
            "n_estimates": estimates,
            "seed": seed,
        });
        write_file(path, &serde_json::to_string_pretty(&json).unwrap())?;
    }
    Ok(())
}

fn cmd_validate(args: &ValidateArgs) -> CliResult<()> {
    if let Some(path) = &args.channel_file {
        let text = fs::read_to_string(path)
            .map_err(|e| CliError::usage(format!("cannot read {}: {e}", path.display())))?;
        let channel = mzir::io::channel_from_json(&text)?;
        channel.validate()?;
        println!("ok channel-file ({} sectors)", channel.n_max() + 1);
    }
    match mzir::validate::run_self_test(args.inject_fault) {
        Ok(passed) => {
            for name in passed {
                println!("ok {name}");
            }
            Ok(())
        }
        Err(failure) => Err(CliError::numerical(format!("FAIL {failure}"))),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Sensitivity(args) => cmd_sensitivity(args),
        Command::Fig2(args) => cmd_fig2(args),
        Command::Sample(args) => cmd_sample(args),
        Command::Validate(args) => cmd_validate(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", e.message);
            ExitCode::from(e.code)
        }
    }
}
