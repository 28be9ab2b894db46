use clap::{Args, Parser, Subcommand, ValueEnum};
use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use korn_core::audit::{calibrate, InequalityId, StressSetup};
use korn_core::experiment::{run_sweep, Study, SweepConfig, SweepReport, CONFIG_KEYS};
use korn_core::spectral::{assemble, assemble_buckling, korn_constant_on_ladder, refinement_ladder, write_triplets, StressField};
use korn_core::KornError;

const KEYS_HELP: &str = "Configuration keys are listed by `korn keys`; set them in a --config file as `key = value` or with --set key=value.";

const SIGN_NOTE: &str = "sign convention: the buckling denominator is -∫ρ (σ, ∇φᵀ∇φ), positive for compressive σ";

#[derive(Parser)]
#[command(name = "korn", version, about = "Korn constants, inequality audits and buckling loads of thin washers")]
#[command(after_long_help = KEYS_HELP)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Grid-converged Korn constant K(h) at the first thickness.
    Korn(Common),
    /// Run a full study over the thickness list.
    Sweep {
        #[arg(long, value_enum)]
        study: StudyArg,
        #[command(flatten)]
        common: Common,
    },
    /// Randomized inequality audits (all entries with stated constants by default).
    Audit {
        /// Inequality names, e.g. BLOCK_Z; repeatable.
        #[arg(long = "id")]
        ids: Vec<String>,
        #[command(flatten)]
        common: Common,
    },
    /// Norms of the bending ansatz across the thickness list.
    Ansatz {
        /// Support compression exponent in [0, 1/2].
        #[arg(long)]
        alpha: Option<f64>,
        #[command(flatten)]
        common: Common,
    },
    /// Critical load under radial compression across the thickness list.
    Buckling(Common),
    /// Empirical constant of an inequality: margin times the worst ratio.
    Calibrate {
        #[arg(long = "id")]
        id: String,
        #[command(flatten)]
        common: Common,
    },
    /// Write one assembled matrix in coordinate-triplet format.
    ExportMatrix {
        /// Fourier mode.
        #[arg(long, default_value_t = 0)]
        mode: u32,
        #[arg(long, value_enum, default_value_t = Which::A)]
        which: Which,
        #[command(flatten)]
        common: Common,
    },
    /// List the configuration keys.
    Keys,
}

#[derive(Clone, Copy, ValueEnum)]
enum StudyArg {
    Korn1,
    Korn15,
    Ansatz,
    Buckling,
    Audit,
}

impl From<StudyArg> for Study {
    fn from(s: StudyArg) -> Self {
        match s {
            StudyArg::Korn1 => Study::Korn1,
            StudyArg::Korn15 => Study::Korn15,
            StudyArg::Ansatz => Study::Ansatz,
            StudyArg::Buckling => Study::Buckling,
            StudyArg::Audit => Study::Audit,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum Which {
    /// Strain form.
    A,
    /// Gradient form.
    B,
    /// Out-of-plane mass form.
    Mz,
    /// Elastic energy of the buckling pencil.
    Numerator,
    /// Stress work of the buckling pencil.
    Denominator,
}

#[derive(Args, Clone)]
struct Common {
    /// Config file of `key = value` lines; flags override it.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Inner radius.
    #[arg(long = "r")]
    inner: Option<f64>,
    /// Outer radius.
    #[arg(long = "R")]
    outer: Option<f64>,
    /// Single thickness.
    #[arg(long, conflicts_with = "h_list")]
    h: Option<f64>,
    /// Comma-separated decreasing thicknesses.
    #[arg(long)]
    h_list: Option<String>,
    /// Washer boundary condition: v1 or v2.
    #[arg(long)]
    bc: Option<String>,
    /// Fourier mode cutoff.
    #[arg(long)]
    modes: Option<u32>,
    /// Coarsest grid AxB (default follows the thickness).
    #[arg(long)]
    grid: Option<String>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    trials: Option<u64>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads.
    #[arg(long)]
    workers: Option<usize>,
    /// Any other configuration key; repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
}

/// Failures mapped onto the exit codes.
enum Failure {
    Usage(String),
    Assertion(String),
    Runtime(KornError),
}

impl From<KornError> for Failure {
    fn from(e: KornError) -> Self {
        match e {
            KornError::InvalidArgument(_)
            | KornError::InvalidGeometry(_)
            | KornError::UnsupportedPairing(_)
            | KornError::Parse { .. } => Failure::Usage(e.to_string()),
            e => Failure::Runtime(e),
        }
    }
}

impl From<io::Error> for Failure {
    fn from(e: io::Error) -> Self {
        Failure::Runtime(e.into())
    }
}

impl Common {
    fn config(&self) -> Result<SweepConfig, Failure> {
        let mut cfg = match &self.config {
            Some(p) => SweepConfig::load(p)?,
            None => SweepConfig::default(),
        };
        let flags: [(&str, Option<String>); 11] = [
            ("r", self.inner.map(|v| v.to_string())),
            ("R", self.outer.map(|v| v.to_string())),
            ("h", self.h.map(|v| v.to_string())),
            ("h_list", self.h_list.clone()),
            ("bc", self.bc.clone()),
            ("modes", self.modes.map(|v| v.to_string())),
            ("grid", self.grid.clone()),
            ("seed", self.seed.map(|v| v.to_string())),
            ("trials", self.trials.map(|v| v.to_string())),
            ("out", self.out.as_ref().map(|p| p.display().to_string())),
            ("workers", self.workers.map(|v| v.to_string())),
        ];
        for (key, value) in flags {
            if let Some(v) = value {
                cfg.set(key, &v)?;
            }
        }
        for kv in &self.set {
            let (k, v) = kv
                .split_once('=')
                .ok_or_else(|| Failure::Usage(format!("--set expects KEY=VALUE, got `{kv}`")))?;
            cfg.set(k, v)?;
        }
        cfg.validate()?;
        if let Some(n) = cfg.workers {
            // Only the first call can size the pool; later ones are no-ops.
            let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
        }
        Ok(cfg)
    }
}

fn print_report(report: &SweepReport) {
    for row in &report.rows {
        println!(
            "h={:<8} {:<16} {:>14.6e}  mode={:<3} grid={:<8} change={:<10} converged={}",
            row.h,
            row.quantity,
            row.value,
            row.mode.map(|m| m.to_string()).unwrap_or_else(|| "-".into()),
            row.grid.map(|g| g.to_string()).unwrap_or_else(|| "-".into()),
            row.grid_change.map(|c| format!("{c:.2e}")).unwrap_or_else(|| "-".into()),
            row.converged
        );
    }
    for f in &report.fits {
        match &f.fit {
            Some(fit) => println!(
                "fit {:<16} exponent={:.4} intercept={:.4} max_residual={:.2e} excluded={}",
                f.quantity, fit.exponent, fit.intercept, fit.max_residual, f.excluded
            ),
            None => println!("fit {:<16} none ({})", f.quantity, f.note.as_deref().unwrap_or("")),
        }
    }
    for a in &report.audits {
        println!(
            "{:<16} {}/{} passed  max_ratio={:.4e}  max_raw_ratio={:.4e} (seed {})  constant={}",
            a.id.to_string(),
            a.passed,
            a.count,
            a.max_ratio,
            a.max_raw_ratio,
            a.argmax_seed,
            a.constant.map(|c| c.to_string()).unwrap_or_else(|| "empirical".into())
        );
    }
    for p in &report.files {
        println!("wrote {}", p.display());
    }
}

fn sweep(cfg: &SweepConfig, study: Study) -> Result<(), Failure> {
    let report = run_sweep(cfg, study)?;
    print_report(&report);
    if report.all_ok() {
        Ok(())
    } else {
        Err(Failure::Assertion(format!(
            "{study}: some rows are not grid-converged or some audits failed"
        )))
    }
}

fn run(cli: Cli) -> Result<(), Failure> {
    match cli.command {
        Command::Keys => {
            // A closed pipe (e.g. `korn keys | head`) is not an error.
            let _ = writeln!(io::stdout(), "{CONFIG_KEYS}");
            Ok(())
        }
        Command::Korn(common) => {
            let cfg = common.config()?;
            let h = cfg.h_list[0];
            let geom = cfg.geometry(h)?;
            let ladder = refinement_ladder(cfg.grid.base(&geom), cfg.grid.levels);
            let res = korn_constant_on_ladder(&geom, cfg.bc, cfg.mode_cutoff, &ladder)?;
            for l in &res.levels {
                println!("grid={:<9} K={:.8e} mode={} residual={:.1e}", l.grid.to_string(), l.k, l.mode, l.residual);
            }
            println!(
                "K={:.8e} K/h^2={:.6} mode={} rel_change={:.3e} converged={}",
                res.k,
                res.k / (h * h),
                res.mode,
                res.rel_change,
                res.converged
            );
            if res.converged {
                Ok(())
            } else {
                Err(Failure::Assertion("K is not grid-converged".into()))
            }
        }
        Command::Sweep { study, common } => sweep(&common.config()?, study.into()),
        Command::Audit { ids, common } => {
            let mut cfg = common.config()?;
            if !ids.is_empty() {
                cfg.set("audit", &ids.join(","))?;
            }
            sweep(&cfg, Study::Audit)
        }
        Command::Ansatz { alpha, common } => {
            let mut cfg = common.config()?;
            if let Some(a) = alpha {
                cfg.set("alpha", &a.to_string())?;
                cfg.validate()?;
            }
            sweep(&cfg, Study::Ansatz)
        }
        Command::Buckling(common) => {
            println!("{SIGN_NOTE}");
            sweep(&common.config()?, Study::Buckling)
        }
        Command::Calibrate { id, common } => {
            let cfg = common.config()?;
            let id: InequalityId = id.parse()?;
            let setup = StressSetup {
                washer: cfg.geometry(cfg.h_list[0])?,
                bc: cfg.bc,
                ..StressSetup::default()
            };
            let cal = calibrate(id, cfg.seed..cfg.seed + cfg.trials, &setup)?;
            println!(
                "{id}: worst ratio {:.6e} at seed {}, calibrated constant {:.6e}",
                cal.worst_ratio, cal.argmax_seed, cal.constant
            );
            println!("{}", serde_json::to_string(&cal).map_err(KornError::from)?);
            Ok(())
        }
        Command::ExportMatrix { mode, which, common } => {
            let cfg = common.config()?;
            let geom = cfg.geometry(cfg.h_list[0])?;
            let grid = cfg.grid.base(&geom);
            let matrix = match which {
                Which::A | Which::B | Which::Mz => {
                    let fm = assemble(&geom, mode, cfg.bc, grid)?;
                    match which {
                        Which::A => fm.a,
                        Which::B => fm.b,
                        _ => fm.mz,
                    }
                }
                Which::Numerator | Which::Denominator => {
                    let sigma = StressField::radial_compression();
                    let bf = assemble_buckling(&geom, mode, cfg.bc, grid, &sigma, &cfg.lame)?;
                    match which {
                        Which::Numerator => bf.numerator,
                        _ => bf.denominator,
                    }
                }
            };
            std::fs::create_dir_all(&cfg.out_dir)?;
            let name = match which {
                Which::A => "a",
                Which::B => "b",
                Which::Mz => "mz",
                Which::Numerator => "numerator",
                Which::Denominator => "denominator",
            };
            let path = cfg.out_dir.join(format!("{name}_mode{mode}_{grid}.txt"));
            let mut out = BufWriter::new(File::create(&path)?);
            write_triplets(&mut out, &matrix)?;
            out.flush()?;
            println!("wrote {} (dimension {})", path.display(), matrix.dim());
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Assertion(msg)) => {
            eprintln!("assertion failed: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::Usage(msg)) => {
            eprintln!("usage error: {msg}");
            ExitCode::from(2)
        }
        Err(Failure::Runtime(e)) => {
            eprintln!("error: {e}");
            let mut source = std::error::Error::source(&e);
            while let Some(s) = source {
                eprintln!("  caused by: {s}");
                source = s.source();
            }
            ExitCode::from(1)
        }
    }
}
