//! `kingman-records`: simulate, sample, extract and verify from the command
//! line.
//!
//! Exit codes: 0 success, 1 verification failure, 2 usage or input error.

use std::fs::File;
use std::io::{self, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use rayon::prelude::*;
use serde_json::{json, Value};

use kingman_records::export::{fmt_f64, CsvTable};
use kingman_records::kingman::{build_pebls, simulate_kingman};
use kingman_records::limit::{local_limit_error_of, rescaled_observables, s_grid, sample_limit_path, wn_pmf, LimitPath};
use kingman_records::ra_chain::{a_pmf_csv, r_pmf_csv, r_pmf_table, sample_a1, sample_path, RaPath};
use kingman_records::rng::stream;
use kingman_records::verify::{run_suite, SuiteConfig};
use kingman_records::{ChainState, LimitStart, RaState, StickField};

#[derive(Parser)]
#[command(name = "kingman-records", version, about = "Record process of Kingman's coalescent")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(clap::Args, Clone)]
struct Common {
    #[arg(long, default_value_t = 42)]
    seed: u64,
    /// Output file; standard output when absent.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    format: Format,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Csv,
    Json,
}

#[derive(Subcommand)]
enum Command {
    /// Kingman trajectories on {1..n}.
    Simulate {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 10)]
        n: usize,
        #[arg(long, default_value_t = 1)]
        replicates: usize,
    },
    /// Lineage lengths L_2..L_n of the recursive construction.
    Pebls {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 10)]
        n: usize,
        #[arg(long, default_value_t = 1)]
        replicates: usize,
    },
    /// Exact (R, A) chain paths with their rescaled observables.
    RaSample {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 30)]
        steps: usize,
        #[arg(long, default_value_t = 1)]
        paths: usize,
        /// Rescaled observables are reported from this path index on.
        #[arg(long, default_value_t = 0)]
        burn_in: usize,
        /// Starting rank; starts from a fresh A_1 draw when --r and --a are absent.
        #[arg(long, requires = "a")]
        r: Option<u128>,
        #[arg(long, requires = "r")]
        a: Option<u128>,
    },
    /// (R, A) pairs identified from stick fields.
    RaExtract {
        #[command(flatten)]
        common: Common,
        /// Pairs per field.
        #[arg(long, default_value_t = 5)]
        n: usize,
        #[arg(long, default_value_t = 1)]
        replicates: usize,
        /// Most individuals planted per field before giving up.
        #[arg(long, default_value_t = 1_000_000)]
        cap: u64,
    },
    /// Limit-chain paths.
    Limit {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 30)]
        steps: usize,
        #[arg(long, default_value_t = 1)]
        paths: usize,
        /// Fixed xi_0; stationary start when absent.
        #[arg(long)]
        xi0: Option<f64>,
    },
    /// The W_n law, or its local-limit comparison grid.
    Wn {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 100)]
        n: u64,
        /// Emit the local-limit grid on s in [0.2, 2] instead of the pmf.
        #[arg(long)]
        local_limit: bool,
    },
    /// Transition laws out of a state: R_{i+1}, or A_{i+1} given --r-next.
    Pmf {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        r: u128,
        #[arg(long)]
        a: u128,
        #[arg(long)]
        r_next: Option<u128>,
        #[arg(long, default_value_t = 50)]
        y_max: u128,
    },
    /// The acceptance suite; prints a JSON report.
    Verify {
        #[arg(long, default_value_t = 42)]
        seed: u64,
        /// Multiplies every Monte Carlo sample size.
        #[arg(long, default_value_t = 1.0)]
        scale: f64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

type CliResult<T> = Result<T, String>;

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    match run(cli.command) {
        Ok(code) => ExitCode::from(code),
        Err(msg) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}

fn lib<T>(r: kingman_records::Result<T>) -> CliResult<T> {
    r.map_err(|e| e.to_string())
}

fn emit(out: &Option<PathBuf>, text: &str) -> CliResult<()> {
    let result = match out {
        Some(path) => File::create(path).and_then(|mut f| f.write_all(text.as_bytes())),
        None => io::stdout().lock().write_all(text.as_bytes()),
    };
    result.map_err(|e| format!("writing output: {e}"))
}

fn emit_table(common: &Common, table: CsvTable, json: Value) -> CliResult<()> {
    match common.format {
        Format::Csv => emit(&common.out, table.as_str()),
        Format::Json => emit(&common.out, &(serde_json::to_string_pretty(&json).map_err(|e| e.to_string())? + "\n")),
    }
}

fn positive(name: &str, v: usize) -> CliResult<()> {
    if v == 0 {
        return Err(format!("--{name} must be at least 1"));
    }
    Ok(())
}

fn run(command: Command) -> CliResult<u8> {
    match command {
        Command::Simulate { common, n, replicates } => {
            positive("replicates", replicates)?;
            let trajectories = (0..replicates as u64)
                .into_par_iter()
                .map(|k| simulate_kingman(n, &mut stream(common.seed, "cli-simulate", k)))
                .collect::<Result<Vec<_>, _>>()
                .map_err(|e| e.to_string())?;
            let mut table = CsvTable::with_header(&["replicate", "event_index", "time", "block_a", "block_b"]);
            let mut json = Vec::new();
            for (k, t) in trajectories.iter().enumerate() {
                for (j, e) in t.events().iter().enumerate() {
                    table.row([(k + 1).to_string(), (j + 1).to_string(), fmt_f64(e.time), e.block_a.to_string(), e.block_b.to_string()]);
                }
                let events: Vec<Value> = t.events().iter().map(|e| json!({"time": e.time, "block_a": e.block_a, "block_b": e.block_b})).collect();
                json.push(json!({"replicate": k + 1, "n": n, "events": events}));
            }
            emit_table(&common, table, Value::Array(json))?;
        }
        Command::Pebls { common, n, replicates } => {
            positive("replicates", replicates)?;
            let sequences = (0..replicates as u64)
                .into_par_iter()
                .map(|k| build_pebls(n, &mut stream(common.seed, "cli-pebls", k)).map(|(p, _)| p))
                .collect::<Result<Vec<_>, _>>()
                .map_err(|e| e.to_string())?;
            let mut table = CsvTable::with_header(&["replicate", "individual", "length"]);
            let mut json = Vec::new();
            for (k, p) in sequences.iter().enumerate() {
                for (i, l) in p.lengths().iter().enumerate() {
                    table.row([(k + 1).to_string(), (i + 2).to_string(), fmt_f64(*l)]);
                }
                json.push(json!({"replicate": k + 1, "lengths": p.lengths()}));
            }
            emit_table(&common, table, Value::Array(json))?;
        }
        Command::RaSample { common, steps, paths, burn_in, r, a } => {
            positive("paths", paths)?;
            if burn_in > steps {
                return Err(format!("--burn-in {burn_in} exceeds --steps {steps}"));
            }
            let start = match (r, a) {
                (Some(r), Some(a)) => Some(lib(RaState::new(r, a))?),
                _ => None,
            };
            let sampled: Vec<RaPath> = (0..paths as u64)
                .into_par_iter()
                .map(|k| {
                    let mut rng = stream(common.seed, "cli-ra-sample", k);
                    let init = start.unwrap_or_else(|| sample_a1(&mut rng));
                    sample_path(ChainState::Exact(init), steps, &mut rng)
                })
                .collect();
            let mut table = CsvTable::with_header(&["path", "i", "R", "A", "xi", "eta"]);
            let mut json = Vec::new();
            for (k, path) in sampled.iter().enumerate() {
                if let Some(i) = path.first_continued() {
                    eprintln!("warning: path {} left exact integer arithmetic at index {i}; later states are continued in f64", k + 1);
                }
                let obs = if steps == 0 { Vec::new() } else { lib(rescaled_observables(path, burn_in))? };
                let mut rows = Vec::new();
                for o in &obs {
                    let s = &path.states[o.i];
                    table.row([(k + 1).to_string(), o.i.to_string(), s.fmt_r(), s.fmt_a(), fmt_f64(o.xi), fmt_f64(o.eta)]);
                    rows.push(json!({"i": o.i, "R": s.r(), "A": s.a(), "exact": s.is_exact(), "xi": o.xi, "eta": o.eta}));
                }
                json.push(json!({"path": k + 1, "observations": rows}));
            }
            emit_table(&common, table, Value::Array(json))?;
        }
        Command::RaExtract { common, n, replicates, cap } => {
            positive("replicates", replicates)?;
            let found = (0..replicates as u64)
                .into_par_iter()
                .map(|k| StickField::new(common.seed, k).identify_ra_bounded(n, cap))
                .collect::<Result<Vec<_>, _>>()
                .map_err(|e| e.to_string())?;
            let mut table = CsvTable::with_header(&["replicate", "i", "R", "A"]);
            let mut json = Vec::new();
            for (k, id) in found.iter().enumerate() {
                if id.truncated {
                    eprintln!("warning: replicate {} stopped after {} pairs at the cap of {cap} individuals", k + 1, id.pairs.len());
                }
                for (i, p) in id.pairs.iter().enumerate() {
                    table.row([(k + 1).to_string(), (i + 1).to_string(), p.r.to_string(), p.a.to_string()]);
                }
                let pairs: Vec<Value> = id.pairs.iter().map(|p| json!([p.r as u64, p.a as u64])).collect();
                json.push(json!({"replicate": k + 1, "pairs": pairs, "truncated": id.truncated}));
            }
            emit_table(&common, table, Value::Array(json))?;
        }
        Command::Limit { common, steps, paths, xi0 } => {
            positive("paths", paths)?;
            let start = xi0.map_or(LimitStart::Stationary, LimitStart::Fixed);
            let sampled = (0..paths as u64)
                .into_par_iter()
                .map(|k| sample_limit_path::<f64, _>(start, steps, &mut stream(common.seed, "cli-limit", k)))
                .collect::<Result<Vec<LimitPath<f64>>, _>>()
                .map_err(|e| e.to_string())?;
            let mut table = CsvTable::with_header(&["path", "i", "xi", "eta", "z"]);
            let mut json = Vec::new();
            for (k, p) in sampled.iter().enumerate() {
                table.row([(k + 1).to_string(), "0".into(), fmt_f64(p.xi0), String::new(), String::new()]);
                for (i, s) in p.states.iter().enumerate() {
                    table.row([(k + 1).to_string(), (i + 1).to_string(), fmt_f64(s.xi), fmt_f64(s.eta), fmt_f64(s.z)]);
                }
                let xi: Vec<f64> = p.states.iter().map(|s| s.xi).collect();
                json.push(json!({"path": k + 1, "xi0": p.xi0, "xi": xi}));
            }
            emit_table(&common, table, Value::Array(json))?;
        }
        Command::Wn { common, n, local_limit } => {
            let law = lib(wn_pmf(n))?;
            if local_limit {
                let report = lib(local_limit_error_of(&law, &s_grid(0.2, 2.0, 0.01)))?;
                let rows: Vec<Value> = report.rows.iter().map(|r| json!({"s": r.s, "k": r.k, "exact": r.exact, "approx": r.approx, "rel_error": r.rel_error})).collect();
                let json = json!({"n": n, "sup_rel_error": report.sup_rel_error, "rows": rows});
                emit_table(&common, report.to_csv(), json)?;
            } else {
                let mut table = CsvTable::with_comment_and_header(&format!("n={n}"), &["k", "prob"]);
                for (k, p) in law.pmf.iter().enumerate() {
                    table.row([k.to_string(), fmt_f64(*p)]);
                }
                emit_table(&common, table, json!({"n": n, "exact": law.is_exact(), "pmf": law.pmf}))?;
            }
        }
        Command::Pmf { common, r, a, r_next, y_max } => {
            let state = lib(RaState::new(r, a))?;
            match r_next {
                None => {
                    let probs = r_pmf_table(&state);
                    emit_table(&common, r_pmf_csv(&state), json!({"r": r as u64, "a": a as u64, "pmf": probs}))?;
                }
                Some(r_next) => {
                    let table = lib(a_pmf_csv(&state, r_next, y_max))?;
                    let json = json!({"r": r as u64, "a": a as u64, "r_next": r_next as u64, "csv": table.as_str()});
                    emit_table(&common, table, json)?;
                }
            }
        }
        Command::Verify { seed, scale, out } => {
            if !(scale > 0.0 && scale.is_finite()) {
                return Err(format!("--scale must be positive, got {scale}"));
            }
            let (report, times) = lib(run_suite(&SuiteConfig { seed, scale }))?;
            for (c, t) in report.criteria.iter().zip(&times) {
                eprintln!("[{}] criterion {}: {} ({:.1}s)", if c.pass { "PASS" } else { "FAIL" }, c.id, c.name, t.as_secs_f64());
            }
            emit(&out, &(lib(report.to_json())? + "\n"))?;
            return Ok(if report.pass { 0 } else { 1 });
        }
    }
    Ok(0)
}
