//! Command-line front end. Exit codes: 0 success, 1 runtime failure, 2 usage error.

use std::fs::{self, File};
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use randcomplex::constants::{threshold_report, tilde_c1_residual_at, tree_gf, DEFAULT_GF_TERMS, DEFAULT_TOL};
use randcomplex::harness::{
    acyclic_probability_check, analyze_complex, default_jobs, hitting_runs, rho_table, run_trials, summarize,
    PipelineOptions, SweepConfig,
};
use randcomplex::homology::FieldPrime;
use randcomplex::io::{parse_complex, write_complex, write_csv, write_json};
use randcomplex::sampler::{sample_complex, SampleParams};

const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Parser)]
#[command(name = "randcomplex", version, about = "Random simplicial complexes: sampling, collapse, homology, thresholds")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Threshold constants and generating-function checks.
    Constants {
        /// Dimensions, comma separated.
        #[arg(long, value_delimiter = ',', required = true)]
        d: Vec<usize>,
        #[arg(long, default_value_t = DEFAULT_TOL)]
        tol: f64,
        /// Series terms for the generating-function checks.
        #[arg(long, default_value_t = DEFAULT_GF_TERMS)]
        gf_terms: u64,
        #[command(flatten)]
        output: Output,
    },
    /// Draw one complex and write it as a complex file.
    Sample {
        #[arg(long)]
        n: u32,
        #[arg(long)]
        d: usize,
        /// Scaled density, p = c / n.
        #[arg(long, conflicts_with = "p", required_unless_present = "p")]
        c: Option<f64>,
        /// Explicit inclusion probability.
        #[arg(long)]
        p: Option<f64>,
        #[arg(long)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Collapse, homology, cocycle bounds and boundaries of a complex file.
    Analyze {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long, value_delimiter = ',', default_value = "2,3,5")]
        primes: Vec<u64>,
        #[command(flatten)]
        output: Output,
    },
    /// Monte Carlo sweep over a grid of (n, c).
    Sweep {
        #[arg(long)]
        d: usize,
        #[arg(long, value_delimiter = ',', required = true)]
        n: Vec<u32>,
        #[arg(long, value_delimiter = ',', required = true)]
        c: Vec<f64>,
        #[arg(long)]
        trials: u64,
        #[arg(long)]
        seed: u64,
        #[arg(long, value_delimiter = ',', default_value = "2,3,5")]
        primes: Vec<u64>,
        #[arg(long)]
        skip_homology: bool,
        #[arg(long)]
        skip_collapse: bool,
        /// Per-trial table; stdout when absent.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Summary table; stdout after the trials when absent.
        #[arg(long)]
        summary: Option<PathBuf>,
        #[command(flatten)]
        jobs: Jobs,
        #[command(flatten)]
        output: Output,
    },
    /// Random d-tree collapse probabilities against the recursion.
    Tree {
        #[arg(long)]
        d: usize,
        #[arg(long)]
        k: usize,
        #[arg(long)]
        gamma: f64,
        #[arg(long)]
        trials: u64,
        #[arg(long)]
        seed: u64,
        #[command(flatten)]
        jobs: Jobs,
        #[command(flatten)]
        output: Output,
    },
    /// First-core and giant-core stages of the one-simplex-at-a-time process.
    Hitting {
        #[arg(long)]
        n: u32,
        #[arg(long)]
        d: usize,
        #[arg(long)]
        runs: u64,
        #[arg(long)]
        seed: u64,
        /// Giant-core proxy, as a fraction of all d-simplices.
        #[arg(long, default_value_t = 0.01)]
        jump_threshold: f64,
        #[arg(long)]
        out: Option<PathBuf>,
        #[command(flatten)]
        jobs: Jobs,
        #[command(flatten)]
        output: Output,
    },
    /// Probability that G(n, c/n) is a forest, against the closed form.
    Acyclic {
        #[arg(long)]
        n: u32,
        #[arg(long)]
        c: f64,
        #[arg(long)]
        trials: u64,
        #[arg(long)]
        seed: u64,
        #[command(flatten)]
        jobs: Jobs,
        #[command(flatten)]
        output: Output,
    },
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Csv,
    Json,
}

#[derive(Args)]
struct Output {
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    format: Format,
}

#[derive(Args)]
struct Jobs {
    /// Worker threads; results do not depend on it.
    #[arg(long)]
    jobs: Option<usize>,
}

impl Jobs {
    fn get(&self) -> usize {
        self.jobs.unwrap_or_else(default_jobs).max(1)
    }
}

fn join<T: ToString>(xs: &[T]) -> String {
    xs.iter().map(T::to_string).collect::<Vec<_>>().join(",")
}

fn primes(list: &[u64]) -> Result<Vec<FieldPrime>> {
    if list.is_empty() {
        bail!("at least one prime is required");
    }
    let mut out = list.iter().map(|&p| FieldPrime::new(p)).collect::<Result<Vec<_>, _>>()?;
    out.dedup();
    Ok(out)
}

fn open_out(path: &Option<PathBuf>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(
            File::create(p).with_context(|| format!("cannot create {}", p.display()))?,
        )),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn emit<T: Serialize>(w: &mut dyn Write, format: Format, comment: &str, rows: &[T]) -> Result<()> {
    let mut w = w;
    match format {
        Format::Csv => write_csv(&mut w, comment, rows)?,
        Format::Json => {
            let values = rows.iter().map(serde_json::to_value).collect::<Result<Vec<_>, _>>()?;
            write_json(&mut w, comment, values)?;
        }
    }
    Ok(())
}

#[derive(Serialize)]
struct GfCheck {
    check: &'static str,
    value: f64,
    target: f64,
    bound: f64,
}

fn constants(d: &[usize], tol: f64, gf_terms: u64, format: Format) -> Result<()> {
    if tol.is_nan() || tol <= 0.0 {
        bail!("tolerance must be positive");
    }
    let reports = d
        .iter()
        .map(|&d| threshold_report(d, tol).with_context(|| format!("d = {d}")))
        .collect::<Result<Vec<_>>>()?;
    let at_e = tree_gf((-1.0f64).exp(), gf_terms)?;
    let residual = tilde_c1_residual_at(1.0, gf_terms)?;
    let checks = [
        GfCheck {
            check: "R(1/e)",
            value: at_e.r,
            target: 1.0,
            bound: at_e.tail_bound,
        },
        GfCheck {
            check: "T(1/e)",
            value: at_e.t,
            target: 0.5,
            bound: at_e.tail_bound,
        },
        GfCheck {
            check: "tilde_c1_residual(1)",
            value: residual.residual,
            target: 0.0,
            bound: residual.bound,
        },
    ];
    let comment = format!("randcomplex {VERSION} constants d={} tol={tol} gf_terms={gf_terms}", join(d));
    let mut out = open_out(&None)?;
    match format {
        Format::Csv => {
            emit(&mut out, format, &comment, &reports)?;
            writeln!(out)?;
            emit(&mut out, format, "generating functions", &checks)?;
        }
        Format::Json => {
            let doc = serde_json::json!({ "comment": comment, "rows": reports, "checks": checks });
            serde_json::to_writer_pretty(&mut out, &doc)?;
            writeln!(out)?;
        }
    }
    out.flush()?;
    Ok(())
}

fn analyze(input: &PathBuf, primes_arg: &[u64], format: Format) -> Result<()> {
    let text = fs::read_to_string(input).with_context(|| format!("cannot read {}", input.display()))?;
    let y = parse_complex(&text).with_context(|| format!("{}", input.display()))?;
    let ps = primes(primes_arg)?;
    let a = analyze_complex(&y, &ps, PipelineOptions { skip_homology: false, skip_collapse: false });
    let comment = format!("randcomplex {VERSION} analyze in={} primes={}", input.display(), join(primes_arg));
    let mut out = open_out(&None)?;
    match format {
        Format::Json => {
            let doc = serde_json::json!({ "comment": comment, "n": y.n(), "d": y.d(), "in_F": a.num_boundaries == 0, "analysis": a });
            serde_json::to_writer_pretty(&mut out, &doc)?;
            writeln!(out)?;
        }
        Format::Csv => {
            let opt = |x: Option<String>| x.unwrap_or_default();
            writeln!(out, "# {comment}")?;
            writeln!(out, "n: {}", y.n())?;
            writeln!(out, "d: {}", y.d())?;
            writeln!(out, "f_d: {}", a.f_d)?;
            writeln!(out, "in_F: {}", a.num_boundaries == 0)?;
            writeln!(out, "collapsible: {}", opt(a.collapsible.map(|x| x.to_string())))?;
            writeln!(out, "rounds: {}", opt(a.rounds.map(|x| x.to_string())))?;
            writeln!(out, "core_size: {}", opt(a.core_size.map(|x| x.to_string())))?;
            writeln!(out, "num_boundaries: {}", a.num_boundaries)?;
            for b in &a.boundaries {
                writeln!(out, "boundary: {}", join(b))?;
            }
            for h in &a.homology {
                writeln!(out, "rank_p{}: {}", h.p, h.rank_d)?;
                writeln!(out, "h_d_p{}: {}", h.p, h.h_d)?;
                writeln!(out, "h_dm1_p{}: {}", h.p, h.h_d_minus_1)?;
            }
            writeln!(out, "a: {}", a.a)?;
            writeln!(out, "alpha: {}", join(&a.alpha))?;
            writeln!(out, "u: {}", a.u)?;
            writeln!(out, "v: {}", a.v)?;
        }
    }
    out.flush()?;
    Ok(())
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Constants { d, tol, gf_terms, output } => constants(&d, tol, gf_terms, output.format),
        Command::Sample { n, d, c, p, seed, out } => {
            let params = match (c, p) {
                (Some(c), _) => SampleParams::with_c(n, d, c, seed),
                (None, Some(p)) => SampleParams::with_p(n, d, p, seed),
                (None, None) => unreachable!("clap requires one of --c/--p"),
            };
            let y = sample_complex(&params)?;
            let density = match (c, p) {
                (Some(c), _) => format!("c={c}"),
                _ => format!("p={}", params.p()),
            };
            let comment = format!("randcomplex {VERSION} sample n={n} d={d} {density} seed={seed}");
            let mut w = open_out(&out)?;
            write_complex(&mut w, &y, Some(&comment))?;
            w.flush()?;
            Ok(())
        }
        Command::Analyze { input, primes, output } => analyze(&input, &primes, output.format),
        Command::Sweep {
            d,
            n,
            c,
            trials,
            seed,
            primes: primes_arg,
            skip_homology,
            skip_collapse,
            out,
            summary,
            jobs,
            output,
        } => {
            let mut config = SweepConfig::new(d, n, c, trials, seed);
            config.primes = primes(&primes_arg)?;
            config.skip_homology = skip_homology;
            config.skip_collapse = skip_collapse;
            config.validate()?;
            let records = run_trials(&config, jobs.get())?;
            let rows = summarize(&config, &records);
            let comment = format!(
                "randcomplex {VERSION} sweep d={d} n={} c={} trials={trials} seed={seed} primes={} skip_homology={skip_homology} skip_collapse={skip_collapse}",
                join(&config.n_list),
                join(&config.c_grid),
                join(&primes_arg),
            );
            let same_stream = out.is_none() && summary.is_none();
            let mut w = open_out(&out)?;
            match output.format {
                Format::Csv => write_csv(&mut w, &comment, &records.iter().map(|r| r.to_row()).collect::<Vec<_>>())?,
                Format::Json => write_json(&mut w, &comment, records.iter().map(|r| r.to_json()).collect())?,
            }
            w.flush()?;
            drop(w);
            let mut s = open_out(&summary)?;
            if same_stream {
                writeln!(s)?;
            }
            match output.format {
                Format::Csv => write_csv(&mut s, &comment, &rows.iter().map(|r| r.to_row()).collect::<Vec<_>>())?,
                Format::Json => write_json(&mut s, &comment, rows.iter().map(|r| r.to_json()).collect())?,
            }
            s.flush()?;
            Ok(())
        }
        Command::Tree { d, k, gamma, trials, seed, jobs, output } => {
            let rows = rho_table(d, k, gamma, trials, seed, jobs.get())?;
            let comment = format!("randcomplex {VERSION} tree d={d} k={k} gamma={gamma} trials={trials} seed={seed}");
            let mut w = open_out(&None)?;
            emit(&mut w, output.format, &comment, &rows)?;
            w.flush()?;
            Ok(())
        }
        Command::Hitting { n, d, runs, seed, jump_threshold, out, jobs, output } => {
            let rows = hitting_runs(n, d, runs, seed, jump_threshold, jobs.get())?;
            let comment =
                format!("randcomplex {VERSION} hitting n={n} d={d} runs={runs} seed={seed} jump_threshold={jump_threshold}");
            let mut w = open_out(&out)?;
            emit(&mut w, output.format, &comment, &rows)?;
            w.flush()?;
            Ok(())
        }
        Command::Acyclic { n, c, trials, seed, jobs, output } => {
            let row = acyclic_probability_check(n, c, trials, seed, jobs.get())?;
            let comment = format!("randcomplex {VERSION} acyclic n={n} c={c} trials={trials} seed={seed}");
            let mut w = open_out(&None)?;
            emit(&mut w, output.format, &comment, &[row])?;
            w.flush()?;
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
