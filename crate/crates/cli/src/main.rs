use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use holoseries::mc::{mc_char_fn, simulate_paths, SDEModel, DEFAULT_PATHS, DEFAULT_STEPS};
use holoseries_cli::engine::{compare_rows, evaluate, EtaChoice, Grid, Method, Settings};
use holoseries_cli::grid::{parse_points, parse_range, parse_vector};
use holoseries_cli::identities::{perturbed_table, run_identities};
use holoseries_cli::output::{num, write_comparison, write_rows};
use holoseries_cli::{expand::expand, load_model};

/// Exit code when a comparison or identity check fails.
const EXIT_CHECK_FAILED: u8 = 1;
/// Exit code for input, validation or computation errors.
const EXIT_ERROR: u8 = 2;

#[derive(Parser)]
#[command(name = "holoseries", version, about = "Series expansions of affine characteristic functions")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Dump the g, h and rho coefficient tables as JSON.
    Expand {
        #[command(flatten)]
        common: Common,
        /// Frequency vector, comma-separated components.
        #[arg(long, allow_hyphen_values = true)]
        u: String,
        /// Horizon used to pick eta.
        #[arg(long, default_value_t = 1.0)]
        s_max: f64,
    },
    /// Evaluate the characteristic function on a grid and write CSV.
    Eval {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        grid: GridArgs,
        #[arg(long, value_enum, default_value_t = Method::Qseries)]
        method: Method,
    },
    /// Evaluate with several methods and report pointwise differences.
    Compare {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        grid: GridArgs,
        /// Methods, comma-separated; each later method is compared to the first.
        #[arg(long, value_enum, value_delimiter = ',', num_args = 1.., default_values_t = [Method::Qseries, Method::Riccati])]
        methods: Vec<Method>,
        /// Model used for every method after the first.
        #[arg(long)]
        model_alt: Option<PathBuf>,
        /// Largest accepted absolute difference.
        #[arg(long, default_value_t = 1e-6)]
        max_diff: f64,
    },
    /// Check the exact identities behind the Stirling coefficient map.
    Identities {
        #[arg(long, default_value_t = 15)]
        kmax: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Bump Stirling entry `k,r` by one before checking (negative control).
        #[arg(long, hide = true)]
        perturb_stirling: Option<String>,
    },
    /// Monte Carlo estimate with standard errors.
    Mc {
        #[arg(long)]
        model: PathBuf,
        #[command(flatten)]
        grid: GridArgs,
        #[arg(long, default_value_t = DEFAULT_PATHS)]
        paths: usize,
        /// Time step; defaults to s / 512.
        #[arg(long)]
        dt: Option<f64>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Args)]
struct Common {
    #[arg(long)]
    model: PathBuf,
    /// Positive number, `ru` or `auto`.
    #[arg(long, default_value = "auto")]
    eta: EtaChoice,
    #[arg(long, default_value_t = 300)]
    rmax: usize,
    /// Series stopping tolerance.
    #[arg(long, default_value_t = 1e-14)]
    tol: f64,
    /// Riccati integrator relative tolerance.
    #[arg(long, default_value_t = 1e-9)]
    rtol: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = DEFAULT_PATHS)]
    paths: usize,
    #[arg(long)]
    dt: Option<f64>,
    #[arg(long)]
    out: Option<PathBuf>,
}

impl Common {
    fn settings(&self) -> Settings {
        Settings {
            r_max: self.rmax,
            tol: self.tol,
            eta: self.eta,
            rtol: self.rtol,
            seed: self.seed,
            paths: self.paths,
            dt: self.dt,
        }
    }
}

#[derive(Args)]
struct GridArgs {
    /// Frequency vector (comma-separated components); repeat for several.
    #[arg(long, required = true, allow_hyphen_values = true)]
    u: Vec<String>,
    /// Times, `v` or `start:stop:count`.
    #[arg(long, allow_hyphen_values = true)]
    s: String,
    /// Initial states: one range per axis, comma-separated.
    #[arg(long, allow_hyphen_values = true)]
    x: String,
}

impl GridArgs {
    fn grid(&self) -> Result<Grid> {
        Ok(Grid {
            s: parse_range(&self.s)?,
            x: parse_points(&self.x)?,
            u: self.u.iter().map(|u| parse_vector(u)).collect::<Result<_>>()?,
        })
    }
}

fn open_out(path: &Option<PathBuf>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(
            File::create(p).with_context(|| format!("creating {}", p.display()))?,
        )),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn configure_threads() -> Result<()> {
    if let Ok(v) = std::env::var("HOLOSERIES_THREADS") {
        let n: usize = v.parse().with_context(|| format!("HOLOSERIES_THREADS={v:?}"))?;
        rayon::ThreadPoolBuilder::new().num_threads(n).build_global()?;
    }
    Ok(())
}

fn run(cli: Cli) -> Result<u8> {
    configure_threads()?;
    match cli.command {
        Command::Expand { common, u, s_max } => {
            let spec = load_model(&common.model)?;
            let report = expand(&spec, &parse_vector(&u)?, s_max, &common.settings())?;
            let mut out = open_out(&common.out)?;
            serde_json::to_writer_pretty(&mut out, &report)?;
            writeln!(out)?;
            Ok(0)
        }
        Command::Eval { common, grid, method } => {
            let spec = load_model(&common.model)?;
            let rows = evaluate(&spec, &grid.grid()?, method, &common.settings())?;
            write_rows(&mut *open_out(&common.out)?, spec.dimension, &rows)?;
            Ok(0)
        }
        Command::Compare { common, grid, methods, model_alt, max_diff } => {
            if methods.len() < 2 {
                bail!("compare needs at least two methods");
            }
            let spec = load_model(&common.model)?;
            let alt = match &model_alt {
                Some(p) => load_model(p)?,
                None => spec.clone(),
            };
            let grid = grid.grid()?;
            let settings = common.settings();
            let base = evaluate(&spec, &grid, methods[0], &settings)?;
            let mut out = open_out(&common.out)?;
            let mut failed = false;
            for &m in &methods[1..] {
                let other = evaluate(&alt, &grid, m, &settings)?;
                let cmp = compare_rows(base.clone(), other, max_diff)?;
                write_comparison(&mut *out, spec.dimension, &cmp)?;
                let verdict = if cmp.failures == 0 { "pass" } else { "FAIL" };
                eprintln!(
                    "{} vs {m}: max |diff| = {:.3e} (limit {max_diff:.1e}), {} of {} points over: {verdict}",
                    methods[0],
                    cmp.max_diff,
                    cmp.failures,
                    cmp.rows.len()
                );
                failed |= cmp.failures > 0;
            }
            out.flush()?;
            Ok(if failed { EXIT_CHECK_FAILED } else { 0 })
        }
        Command::Identities { kmax, seed, perturb_stirling } => {
            let table = match perturb_stirling {
                Some(kr) => {
                    let v = parse_vector(&kr)?;
                    let (k, r) = (v[0] as usize, v.get(1).copied().unwrap_or(0.0) as usize);
                    if r > k {
                        bail!("stirling entry {k},{r} does not exist");
                    }
                    perturbed_table(kmax.max(k), k, r)
                }
                None => holoseries::stirling_unsigned(kmax),
            };
            let checks = run_identities(kmax, &table, seed);
            let mut stdout = io::stdout().lock();
            for c in &checks {
                let status = if c.passed { "pass" } else { "FAIL" };
                writeln!(stdout, "{status} {}: {}", c.name, c.detail)?;
            }
            Ok(if checks.iter().all(|c| c.passed) { 0 } else { EXIT_CHECK_FAILED })
        }
        Command::Mc { model, grid, paths, dt, seed, out } => {
            let spec = load_model(&model)?;
            let sde = SDEModel::from_spec(&spec)?;
            let grid = grid.grid()?;
            grid.check(spec.dimension)?;
            let mut out = open_out(&out)?;
            let n = spec.dimension;
            let mut header = vec!["s".to_string()];
            header.extend((1..=n).map(|i| format!("x_{i}")));
            header.extend((1..=n).map(|i| format!("u_{i}")));
            header.extend(
                ["re_phat", "im_phat", "stderr", "stderr_re", "stderr_im", "n_paths", "dt", "seed", "clamp_fraction"]
                    .map(String::from),
            );
            writeln!(out, "{}", header.join(","))?;
            for &s in &grid.s {
                if s <= 0.0 {
                    bail!("mc needs s > 0");
                }
                for x in &grid.x {
                    let step = dt.unwrap_or(s / DEFAULT_STEPS as f64).min(s);
                    let sim = simulate_paths(&sde, x, s, paths, step, seed)?;
                    if let Some(w) = &sim.warning {
                        eprintln!("warning: s = {s}, x = {x:?}: {w}");
                    }
                    for u in &grid.u {
                        let est = mc_char_fn(&sim, u)?;
                        let mut f = vec![num(s)];
                        f.extend(x.iter().map(|&v| num(v)));
                        f.extend(u.iter().map(|&v| num(v)));
                        f.extend([est.value.re, est.value.im, est.stderr, est.stderr_re, est.stderr_im].map(num));
                        f.push(est.n_paths.to_string());
                        f.push(num(est.dt));
                        f.push(est.seed.to_string());
                        f.push(num(est.clamp_fraction));
                        writeln!(out, "{}", f.join(","))?;
                    }
                }
            }
            out.flush()?;
            Ok(0)
        }
    }
}

/// A closed downstream pipe (`holoseries ... | head`) is not an error.
fn is_broken_pipe(e: &anyhow::Error) -> bool {
    e.chain()
        .filter_map(|c| c.downcast_ref::<io::Error>())
        .any(|io| io.kind() == io::ErrorKind::BrokenPipe)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) if is_broken_pipe(&e) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(EXIT_ERROR)
        }
    }
}
