//! `frokaweil`: run free function theory experiments and write reports.
//!
//! Exit status is 0 when the report passes, 1 when it fails and 2 for bad
//! input (unreadable config, parse errors, points outside the domain).

mod config;

use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use frokaweil_core::experiments::{
    default_final_terms, dilation_suite, nc_axiom_suite, okaweil_exact, random_configuration,
    realization_consistency, scaled_norm_experiment, shaped_configuration, uniform_convergence_table, zariski_suite,
    Configuration, ConvergenceOptions, ExperimentReport, ReportBuilder, DEFAULT_MARGIN, EXACT_TOL,
};
use frokaweil_core::linalg::{self, spectral_norm};
use frokaweil_core::mattuple::random_tuple;
use frokaweil_core::ncalg::Caps;
use frokaweil_core::{json, parse_poly, MatrixTuple};
use serde_json::json;

use config::{pick, FileConfig};

#[derive(Parser, Debug)]
#[command(name = "frokaweil", version, about = "Free noncommutative function theory workbench")]
struct Cli {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug)]
struct Common {
    /// Seed for every random draw.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Write the report here instead of stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true, value_enum)]
    format: Option<Format>,
    /// Agreement tolerance (eval, synth, okaweil).
    #[arg(long, global = true)]
    tol: Option<f64>,
    /// JSON file with defaults for any flag.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Csv,
}

#[derive(Args, Debug, Default)]
struct ConfigArgs {
    /// Domain shape: disk, row, column, polydisk or lmi.
    #[arg(long)]
    shape: Option<String>,
    /// Level of the base point.
    #[arg(long)]
    level: Option<usize>,
    /// Required distance of |Q(lambda)| from 1.
    #[arg(long)]
    margin: Option<f64>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Evaluate a free polynomial at a matrix tuple.
    Eval {
        /// Polynomial text, e.g. "x1*x2 - x2*x1 + 2".
        #[arg(long)]
        poly: Option<String>,
        /// Number of letters; defaults to the largest index used.
        #[arg(long)]
        d: Option<usize>,
        /// JSON matrix tuple; a random one of --level is drawn otherwise.
        #[arg(long)]
        point: Option<PathBuf>,
        #[arg(long)]
        level: Option<usize>,
    },
    /// Closed form against Neumann sums and symbolic synthesis.
    Realize {
        #[arg(long)]
        points: Option<usize>,
        #[arg(long)]
        synth_cases: Option<usize>,
    },
    /// Synthesize the partial-sum polynomial of a realization.
    Synth {
        #[command(flatten)]
        cfg: ConfigArgs,
        #[arg(long)]
        terms: Option<usize>,
        #[arg(long)]
        r: Option<f64>,
    },
    /// Exact agreement with the interpolant on a certified hull sample.
    Okaweil {
        #[command(flatten)]
        cfg: ConfigArgs,
        #[arg(long)]
        hull: Option<usize>,
        /// Emit the uniform convergence table instead.
        #[arg(long)]
        convergence: bool,
        /// Comma-separated, strictly increasing truncation orders.
        #[arg(long, value_delimiter = ',')]
        n_list: Option<Vec<usize>>,
    },
    /// Witness verification, hull sampling and corruption controls.
    Dilate {
        #[arg(long)]
        witnesses: Option<usize>,
    },
    /// Ideal kernels, stabilization degrees and interpolation.
    Zariski {
        #[arg(long)]
        trials: Option<usize>,
    },
    /// Randomized nc function axioms.
    Axioms {
        #[arg(long)]
        trials: Option<usize>,
    },
    /// Norm control of scaled approximants.
    Scaled {
        #[command(flatten)]
        cfg: ConfigArgs,
        #[arg(long, value_delimiter = ',')]
        r_list: Option<Vec<f64>>,
        #[arg(long)]
        samples: Option<usize>,
    },
}

/// Input problems map to exit status 2.
struct InputError(anyhow::Error);

impl<E: Into<anyhow::Error>> From<E> for InputError {
    fn from(e: E) -> Self {
        InputError(e.into())
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let start = Instant::now();
    match run(cli) {
        Ok(report) => {
            let verdict = if report.pass() { "PASS" } else { "FAIL" };
            eprintln!("frokaweil {}: {verdict} in {:.3}s", report.name, start.elapsed().as_secs_f64());
            if report.pass() {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            }
        }
        Err(InputError(e)) => {
            eprintln!("frokaweil: {e:#}");
            ExitCode::from(2)
        }
    }
}

fn run(cli: Cli) -> std::result::Result<ExperimentReport, InputError> {
    let file = FileConfig::load(cli.common.config.as_deref())?;
    let seed = pick(cli.common.seed, file.seed, 0);
    let format = match (cli.common.format, file.format.as_deref()) {
        (Some(f), _) => f,
        (None, None) => Format::Json,
        (None, Some(text)) => Format::from_str(text, true).map_err(|e| anyhow::anyhow!("format: {e}"))?,
    };
    let out = cli.common.out.clone().or(file.out.clone());
    let report = dispatch(&cli, &file, seed)?;
    let text = match format {
        Format::Json => report.to_json()? + "\n",
        Format::Csv => report.to_csv(),
    };
    match out {
        Some(path) => std::fs::write(&path, text).with_context(|| format!("writing {}", path.display()))?,
        None => std::io::stdout().lock().write_all(text.as_bytes())?,
    }
    Ok(report)
}

fn dispatch(cli: &Cli, file: &FileConfig, seed: u64) -> Result<ExperimentReport> {
    let tol = cli.common.tol.or(file.tol);
    if let Some(t) = tol {
        if !(t > 0.0 && t.is_finite()) {
            bail!("--tol must be positive and finite");
        }
    }
    Ok(match &cli.command {
        Command::Eval { poly, d, point, level } => {
            let text = poly.clone().or(file.poly.clone()).context("eval needs --poly")?;
            let point = match point {
                Some(path) => Some(serde_json::from_str::<MatrixTuple>(
                    &std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?,
                )?),
                None => file.point.clone(),
            };
            let d = d.or(file.d).or(point.as_ref().map(|p| p.d())).unwrap_or_else(|| max_letter(&text));
            let level = pick(*level, file.level, 2);
            eval_report(&text, d, point, level, seed, tol.unwrap_or(EXACT_TOL))?
        }
        Command::Realize { points, synth_cases } => {
            realization_consistency(seed, pick(*points, file.points, 50), pick(*synth_cases, file.synth_cases, 20))?
        }
        Command::Synth { cfg, terms, r } => {
            let c = configuration(cfg, file, seed)?;
            let terms = pick(*terms, file.terms, 4);
            let r = pick(*r, file.r, 1.0);
            synth_report(&c, terms, r, tol.unwrap_or(1e-10))?
        }
        Command::Okaweil { cfg, hull, convergence, n_list } => {
            let c = configuration(cfg, file, seed)?;
            let hull = pick(*hull, file.hull, 50);
            if *convergence || file.convergence.unwrap_or(false) {
                let n_list = n_list.clone().or(file.n_list.clone()).unwrap_or_else(default_n_list);
                let mut opts = ConvergenceOptions::default();
                if let Some(t) = tol {
                    opts.target = t;
                }
                uniform_convergence_table(&c, hull, &n_list, seed, opts)?
            } else {
                okaweil_exact(&c, hull, tol.unwrap_or(EXACT_TOL), seed)?
            }
        }
        Command::Dilate { witnesses } => dilation_suite(seed, pick(*witnesses, file.witnesses, 200))?,
        Command::Zariski { trials } => zariski_suite(seed, pick(*trials, file.trials, 20))?,
        Command::Axioms { trials } => nc_axiom_suite(seed, pick(*trials, file.trials, 100))?,
        Command::Scaled { cfg, r_list, samples } => {
            let c = configuration(cfg, file, seed)?;
            let r_list = r_list.clone().or(file.r_list.clone()).unwrap_or_else(|| vec![0.5, 0.9, 0.99]);
            scaled_norm_experiment(&c.col, &c.q, &r_list, pick(*samples, file.samples, 200), seed)?
        }
    })
}

fn default_n_list() -> Vec<usize> {
    let last = default_final_terms();
    let mut n: Vec<usize> = [0, 1, 2, 4, 8, 16, 32, 64, 128, 256].into_iter().filter(|&n| n < last).collect();
    n.push(last);
    n
}

/// A shape flag generates a configuration; otherwise one from the file is
/// used, and failing that a random shape is drawn.
fn configuration(args: &ConfigArgs, file: &FileConfig, seed: u64) -> Result<Configuration> {
    let level = pick(args.level, file.level, 2);
    let margin = pick(args.margin, file.margin, DEFAULT_MARGIN);
    if level == 0 {
        bail!("--level must be at least 1");
    }
    if !(0.0..1.0).contains(&margin) {
        bail!("--margin must lie in [0, 1)");
    }
    let mut rng = linalg::rng_from_seed(seed);
    Ok(match (&args.shape, &file.configuration, &file.shape) {
        (Some(shape), _, _) => shaped_configuration(shape, level, margin, &mut rng)?,
        (None, Some(c), _) => c.clone(),
        (None, None, Some(shape)) => shaped_configuration(shape, level, margin, &mut rng)?,
        (None, None, None) => random_configuration(level, margin, &mut rng)?,
    })
}

/// Largest `k` appearing as `xk`, at least 1.
fn max_letter(text: &str) -> usize {
    let bytes = text.as_bytes();
    let mut best = 1;
    let mut i = 0;
    while i < bytes.len() {
        if bytes[i] == b'x' {
            let digits: String = text[i + 1..].chars().take_while(|c| c.is_ascii_digit()).collect();
            if let Ok(k) = digits.parse::<usize>() {
                best = best.max(k);
            }
            i += 1 + digits.len();
        } else {
            i += 1;
        }
    }
    best
}

fn eval_report(
    text: &str,
    d: usize,
    point: Option<MatrixTuple>,
    level: usize,
    seed: u64,
    tol: f64,
) -> Result<ExperimentReport> {
    let poly = parse_poly(text, d)?;
    let z = match point {
        Some(z) => z,
        None => random_tuple(level, d, 1.0, seed)?,
    };
    let value = poly.eval(&z)?;
    // Evaluating the reparsed canonical form must reproduce the value.
    let canonical = poly.to_string();
    let again = parse_poly(&canonical, d)?.eval(&z)?;
    let norm = spectral_norm(&value)?;
    let defect = spectral_norm(&(&value - &again))?;
    let mut b = ReportBuilder::new("eval", json!({"poly": text, "d": d, "seed": seed, "level": z.level(), "tol": tol}));
    b.record("z".into(), z.level(), defect, norm, defect <= tol * (1.0 + norm));
    b.details(json!({"canonical": canonical, "point": z, "value": json::to_repr(&value)}));
    Ok(b.finish())
}

fn synth_report(c: &Configuration, terms: usize, r: f64, tol: f64) -> Result<ExperimentReport> {
    let poly = c.col.synthesize(&c.q, terms, r, Caps { max_degree: usize::MAX, ..Caps::default() })?;
    let symbolic = poly.eval(&c.lambda)?;
    let numeric = c.col.eval_neumann(&c.q, &c.lambda, terms, r)?;
    let defect = spectral_norm(&(&symbolic - &numeric))?;
    let norm = spectral_norm(&symbolic)?;
    let inputs = json!({"configuration": c, "terms": terms, "r": r, "tol": tol});
    let mut b = ReportBuilder::new("synth", inputs);
    b.record("lambda".into(), c.lambda.level(), defect, norm, defect <= tol * (1.0 + norm));
    b.details(json!({
        "polynomial": poly.to_string(),
        "terms": poly.num_terms(),
        "degree": poly.degree(),
    }));
    Ok(b.finish())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn letters_are_counted() {
        assert_eq!(max_letter("x1*x12 - 3"), 12);
        assert_eq!(max_letter("2"), 1);
        assert_eq!(max_letter("x2*x1"), 2);
    }

    #[test]
    fn default_orders_end_at_the_final_truncation() {
        let n = default_n_list();
        assert_eq!(*n.last().unwrap(), 360);
        assert!(n.windows(2).all(|w| w[0] < w[1]));
    }
}
