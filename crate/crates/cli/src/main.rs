//! `wiggle`: valley-splitting sweeps and reports.
//!
//! Exit codes: 0 success, 1 invalid configuration, 2 solver failure
//! (every sweep point failed, or a report could not be computed),
//! 3 selection-rule verification failed.

use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use clap::{Parser, Subcommand};
use serde::Serialize;

use wiggle_core::config::RunConfig;
use wiggle_core::envelope::{envelope_density_report, DensityReport};
use wiggle_core::epm::{sample_density_matrix, Pseudopotential, SignModelRegistry};
use wiggle_core::sweep::report::{
    analyze_peaks, calibration_report, selection_rule_report, write_json, Metadata, RunInfo,
};
use wiggle_core::sweep::{run_sweep, SweepSpec};
use wiggle_core::Error;

#[derive(Debug, Parser)]
#[command(name = "wiggle", version, about = "Valley splitting in Wiggle Well quantum wells")]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// TOML run configuration; built-in defaults when omitted.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Ensemble seed (overrides `ensemble.seed`).
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Output directory.
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,

    /// Worker threads; all cores when omitted.
    #[arg(long, global = true)]
    threads: Option<usize>,

    /// Splitting method (overrides `mode`): full_solver or first_order.
    #[arg(long, global = true)]
    mode: Option<String>,
}

#[derive(Debug, Clone, Copy, Subcommand)]
enum Command {
    /// Δ_w(q) over the configured grid, with peak fits.
    Sweep,
    /// Ground-state densities at q = 3.7 nm⁻¹ for n̄_Ge ∈ {0, 0.1, 0.2}.
    EnvelopeReport,
    /// Orbit-sum checks of the long-wavelength selection rule.
    SelectionRule,
    /// Conduction-band minimum scan of pure Si.
    Calibrate,
}

impl Command {
    fn name(self) -> &'static str {
        match self {
            Command::Sweep => "sweep",
            Command::EnvelopeReport => "envelope-report",
            Command::SelectionRule => "selection-rule",
            Command::Calibrate => "calibrate",
        }
    }
}

const EXIT_CONFIG: u8 = 1;
const EXIT_SOLVER: u8 = 2;
const EXIT_SELECTION_RULE: u8 = 3;

/// Failure carrying its exit code.
struct Failure(u8, String);

impl Failure {
    fn config(e: impl std::fmt::Display) -> Self {
        Self(EXIT_CONFIG, format!("invalid configuration: {e}"))
    }

    /// Config problems found late still map to exit code 1.
    fn solver(e: Error) -> Self {
        match e {
            Error::Config(_) | Error::Toml(_) | Error::GridResolution { .. } | Error::AlloyFraction(_) => {
                Self::config(e)
            }
            e => Self(EXIT_SOLVER, e.to_string()),
        }
    }

    fn io(e: impl std::fmt::Display) -> Self {
        Self(EXIT_SOLVER, format!("cannot write output: {e}"))
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure(code, msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(code)
        }
    }
}

fn load_config(cli: &Cli) -> Result<RunConfig, Failure> {
    let mut cfg = match &cli.config {
        Some(p) => RunConfig::load(p).map_err(Failure::config)?,
        None => RunConfig::default(),
    };
    if let Some(seed) = cli.seed {
        cfg.ensemble.seed = seed;
    }
    if let Some(mode) = &cli.mode {
        cfg.mode = mode.clone();
    }
    if SignModelRegistry::default().get(&cfg.ensemble.sign_model).is_none() {
        return Err(Failure::config(format!("unknown sign model {:?}", cfg.ensemble.sign_model)));
    }
    cfg.device.validate().map_err(Failure::config)?;
    Ok(cfg)
}

fn run(cli: &Cli) -> Result<(), Failure> {
    let started = Instant::now();
    let cfg = load_config(cli)?;
    if let Some(n) = cli.threads {
        if n == 0 {
            return Err(Failure::config("--threads must be at least 1"));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| Failure::config(e.to_string()))?;
    }
    let pp = cfg.pseudopotential().map_err(Failure::config)?;
    std::fs::create_dir_all(&cli.out).map_err(Failure::io)?;

    let outcome = match cli.command {
        Command::Sweep => sweep(&cfg, &pp, &cli.out),
        Command::EnvelopeReport => envelope(&cfg, &pp, &cli.out),
        Command::SelectionRule => selection(&cfg, &pp, &cli.out),
        Command::Calibrate => calibrate(&pp, &cli.out),
    };

    let info = RunInfo {
        command: cli.command.name().into(),
        unix_time: SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0),
        elapsed_s: started.elapsed().as_secs_f64(),
        threads: rayon::current_num_threads(),
    };
    write_json(&cli.out.join("run_info.json"), &info).map_err(Failure::io)?;
    outcome
}

fn sweep(cfg: &RunConfig, pp: &Pseudopotential, out: &Path) -> Result<(), Failure> {
    let spec = SweepSpec::from_config(cfg).map_err(Failure::config)?;
    let table = run_sweep(&spec, pp, Some(out)).map_err(Failure::solver)?;
    table.save_csv(&out.join("results.csv")).map_err(Failure::io)?;
    let failed = table.rows.iter().filter(|r| !r.is_ok()).count();
    println!(
        "sweep: {} points ({} from cache, {} failed) -> {}",
        table.rows.len(),
        table.cached,
        failed,
        out.join("results.csv").display()
    );
    if table.all_failed() {
        return Err(Failure(EXIT_SOLVER, format!("all {} points failed", table.rows.len())));
    }
    let report = analyze_peaks(&table, Metadata::new(cfg, pp).map_err(Failure::config)?);
    for f in &report.families {
        match &f.fit {
            Some(fit) => println!(
                "peak {:<5} q ≈ {:.2} nm⁻¹  slope {:.3} ± {:.3}",
                f.family, fit.q_peak, fit.slope, fit.slope_stderr
            ),
            None => println!("peak {:<5} no fit: {}", f.family, f.error.as_deref().unwrap_or("")),
        }
    }
    write_json(&out.join("peaks.json"), &report).map_err(Failure::io)
}

#[derive(Serialize)]
struct EnvelopeSummary {
    metadata: Metadata,
    cases: Vec<CaseSummary>,
}

#[derive(Serialize)]
struct CaseSummary {
    n_ge: f64,
    q: f64,
    e0: f64,
    delta_w: f64,
    norm: f64,
    peaks: usize,
}

fn envelope(cfg: &RunConfig, pp: &Pseudopotential, out: &Path) -> Result<(), Failure> {
    let model = SignModelRegistry::default()
        .get(&cfg.ensemble.sign_model)
        .expect("checked when loading");
    let ens = &cfg.ensemble;
    if ens.n_samples == 0 {
        return Err(Failure::config("n_samples must be at least 1"));
    }
    let rho_for = |n: f64| sample_density_matrix(pp, n, ens.n_samples, ens.seed, model.as_ref());
    let report = envelope_density_report(&cfg.device, pp.basis(), &rho_for).map_err(Failure::solver)?;
    write_density_csv(&out.join("envelope_density.csv"), &report).map_err(Failure::io)?;
    let summary = EnvelopeSummary {
        metadata: Metadata::new(cfg, pp).map_err(Failure::config)?,
        cases: report
            .cases
            .iter()
            .map(|c| CaseSummary {
                n_ge: c.n_ge,
                q: c.q,
                e0: c.e0,
                delta_w: c.delta_w,
                norm: c.norm,
                peaks: c.peaks,
            })
            .collect(),
    };
    for c in &summary.cases {
        println!(
            "n_ge = {:<4} E0 = {:.6} eV  Δ_w = {:.3e} eV  density peaks = {}",
            c.n_ge, c.e0, c.delta_w, c.peaks
        );
    }
    write_json(&out.join("envelope_report.json"), &summary).map_err(Failure::io)
}

fn write_density_csv(path: &Path, report: &DensityReport) -> wiggle_core::Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    let mut header = vec!["z".to_string()];
    header.extend(report.cases.iter().map(|c| format!("density_nge_{}", c.n_ge)));
    w.write_record(&header)?;
    for (i, z) in report.z.iter().enumerate() {
        let mut rec = vec![z.to_string()];
        rec.extend(report.cases.iter().map(|c| c.density[i].to_string()));
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}

fn selection(cfg: &RunConfig, pp: &Pseudopotential, out: &Path) -> Result<(), Failure> {
    let report = selection_rule_report(pp, &cfg.ensemble.sign_model, cfg.ensemble.seed).map_err(Failure::solver)?;
    for r in report.ordered.iter().chain(std::iter::once(&report.disordered)) {
        println!(
            "{:<28} |S|/Σ|terms| = {:.3e}  {}",
            r.crystal,
            r.relative,
            if r.passed { "ok" } else { "FAIL" }
        );
    }
    write_json(&out.join("selection_rule.json"), &report).map_err(Failure::io)?;
    if report.passed {
        Ok(())
    } else {
        Err(Failure(EXIT_SELECTION_RULE, "orbit sums of an ordered crystal do not vanish".into()))
    }
}

fn calibrate(pp: &Pseudopotential, out: &Path) -> Result<(), Failure> {
    let report = calibration_report(pp).map_err(Failure::solver)?;
    println!(
        "k_min = {:.4} (2π/a)  gap = {:.3} eV  {}",
        report.k_min,
        report.indirect_gap_ev,
        if report.passed { "ok" } else { "outside 0.84 ± 0.02" }
    );
    write_json(&out.join("calibration.json"), &report).map_err(Failure::io)
}
