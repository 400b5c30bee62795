//! Command-line front end.

use std::ffi::OsString;
use std::fs::{self, File};
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};

use crate::error::{Error, Result};
use crate::plot::plot_trace;
use crate::scenario::{builtin, builtin_names, resolve, ScenarioConfig, BUILTIN_PREFIX};
use crate::sim::{layout_of, metrics, trace, Trace};

/// Default output directory when neither `--out` nor the scenario sets one.
pub const OUT_DIR_ENV: &str = "TVOPT_OUT_DIR";
const FALLBACK_OUT_DIR: &str = "out";
/// Length of the trailing window summarized after a run.
const SUMMARY_WINDOW: f64 = 5.0;

#[derive(Debug, Parser)]
#[command(name = "tvopt", version, about = "Simulate adaptive trackers of time-varying optima")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Simulate a scenario file or `builtin:<name>` and write its trace.
    Run {
        /// Scenario path or `builtin:<name>`; omit with --all.
        #[arg(required_unless_present = "all")]
        scenario: Option<String>,
        /// Run every built-in scenario concurrently.
        #[arg(long, conflicts_with = "scenario")]
        all: bool,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        step: Option<f64>,
        #[arg(long)]
        t_end: Option<f64>,
        /// Seed for scenarios with measurement noise.
        #[arg(long)]
        seed: Option<u64>,
        /// Also write the binary trace with the embedded scenario.
        #[arg(long)]
        binary: bool,
    },
    /// Load and check a scenario; report every assumption.
    Validate {
        scenario: String,
        /// Print the normalized scenario with all defaults filled in.
        #[arg(long)]
        dump: bool,
    },
    /// Print the optimal point x*(t) of a scenario.
    Oracle {
        scenario: String,
        #[arg(long = "t", default_value_t = 0.0)]
        t: f64,
    },
    /// List the built-in scenarios.
    List,
    /// Render a CSV trace as SVG charts.
    Plot {
        trace: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
}

struct RunOptions {
    out: Option<PathBuf>,
    step: Option<f64>,
    t_end: Option<f64>,
    seed: Option<u64>,
    binary: bool,
}

/// Parse `args` (program name first) and execute. Returns the exit code.
pub fn run_cli<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    match execute(cli.command) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

fn execute(cmd: Command) -> Result<()> {
    match cmd {
        Command::Run {
            scenario,
            all,
            out,
            step,
            t_end,
            seed,
            binary,
        } => {
            let opts = RunOptions {
                out,
                step,
                t_end,
                seed,
                binary,
            };
            if all {
                run_all(&opts)
            } else {
                let cfg = resolve(scenario.as_deref().unwrap_or_default())?;
                println!("{}", run_one(cfg, &opts)?);
                Ok(())
            }
        }
        Command::Validate { scenario, dump } => {
            let cfg = resolve(&scenario)?;
            cfg.validate()?;
            print!("{}", cfg.assumption_report()?);
            println!("{}: valid ({} agents, controller {})", cfg.name, cfg.agents.len(), cfg.controller);
            if dump {
                print!("{}", cfg.normalized_dump()?);
            }
            Ok(())
        }
        Command::Oracle { scenario, t } => {
            let cfg = resolve(&scenario)?;
            cfg.validate()?;
            let x = cfg.oracle(t)?;
            let cells: Vec<String> = x.iter().map(|v| format!("{v:.17e}")).collect();
            println!("{}", cells.join(" "));
            Ok(())
        }
        Command::List => {
            for name in builtin_names() {
                let cfg = builtin(name)?;
                println!("{BUILTIN_PREFIX}{name:<22} {}", cfg.description);
            }
            Ok(())
        }
        Command::Plot { trace: path, out } => {
            let tr = trace::read_csv(BufReader::new(File::open(&path)?))?;
            plot_trace(&tr, &out)?;
            println!("wrote {}", out.display());
            Ok(())
        }
    }
}

fn out_dir(cfg: &ScenarioConfig, opts: &RunOptions) -> PathBuf {
    opts.out
        .clone()
        .or_else(|| cfg.output.dir.as_ref().map(PathBuf::from))
        .or_else(|| std::env::var_os(OUT_DIR_ENV).map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from(FALLBACK_OUT_DIR))
}

fn write_csv_file(tr: &Trace, path: &Path) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    trace::write_csv(tr, &mut w)?;
    w.flush()?;
    Ok(())
}

/// Simulate one scenario, write its artifacts and return the summary line.
fn run_one(mut cfg: ScenarioConfig, opts: &RunOptions) -> Result<String> {
    if let Some(h) = opts.step {
        cfg.integrator.step = h;
    }
    if let Some(t) = opts.t_end {
        cfg.integrator.t_end = t;
    }
    if let (Some(seed), Some(noise)) = (opts.seed, cfg.noise.as_mut()) {
        noise.seed = seed;
    }
    cfg.validate()?;
    let dir = out_dir(&cfg, opts);
    fs::create_dir_all(&dir)?;
    let normalized = cfg.normalized_dump()?;
    fs::write(dir.join(format!("{}.toml", cfg.name)), &normalized)?;

    let tr = match cfg.simulate() {
        Ok(tr) => tr,
        Err(Error::NonFinite { t, index, tail }) => {
            let lp = cfg.closed_loop()?;
            let partial = Trace {
                layout: layout_of(lp.as_ref()),
                records: tail.to_vec(),
            };
            write_csv_file(&partial, &dir.join(format!("{}.abort.csv", cfg.name)))?;
            return Err(Error::NonFinite { t, index, tail });
        }
        Err(e) => return Err(e),
    };
    let csv = dir.join(format!("{}.csv", cfg.name));
    write_csv_file(&tr, &csv)?;
    if opts.binary || cfg.output.binary {
        let mut w = BufWriter::new(File::create(dir.join(format!("{}.trace", cfg.name)))?);
        trace::write_binary(&tr, &normalized, &mut w)?;
        w.flush()?;
    }

    let t_end = cfg.integrator.t_end;
    let t_a = (t_end - SUMMARY_WINDOW).max(0.0);
    let m = metrics(&tr.records, t_a, t_end, 0.0)?;
    Ok(format!(
        "{}: max tracking error over [{t_a}, {t_end}] = {:.6e}, max consensus error = {:.6e} -> {}",
        cfg.name,
        m.max_tracking_error,
        m.max_consensus_error,
        csv.display()
    ))
}

fn run_all(opts: &RunOptions) -> Result<()> {
    let configs: Vec<ScenarioConfig> = builtin_names().iter().map(|n| builtin(n)).collect::<Result<_>>()?;
    let results: Vec<Result<String>> = std::thread::scope(|s| {
        let handles: Vec<_> = configs.into_iter().map(|cfg| s.spawn(move || run_one(cfg, opts))).collect();
        handles
            .into_iter()
            .map(|h| h.join().unwrap_or_else(|_| Err(Error::Validation("scenario run panicked".into()))))
            .collect()
    });
    let mut first_err = None;
    for r in results {
        match r {
            Ok(line) => println!("{line}"),
            Err(e) => {
                eprintln!("error: {e}");
                first_err.get_or_insert(e);
            }
        }
    }
    first_err.map_or(Ok(()), Err)
}
