use std::fs;
use std::io::{self, Read, Write};
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use anyhow::{anyhow, Context};
use clap::{Parser, Subcommand, ValueEnum};
use q2sat::instance::format::{SolutionDoc, Status};
use q2sat::instance::generate::{
    gen_classical_2sat, gen_planted, gen_random, gen_ring, random_2sat_formula, RankMix, RingKind,
};
use q2sat::oracle::{classify_energy, dense_min_energy, product_energy, DenseVerdict, OracleError};
use q2sat::{
    parse_instance, parse_solution, serialize_instance, serialize_solution, solve, solve_with_stats, Instance64,
    Real, SolveOutcome, SolverConfig64,
};

const EXIT_SAT: u8 = 0;
const EXIT_VERIFY_FAIL: u8 = 1;
const EXIT_INPUT: u8 = 2;
const EXIT_UNSAT: u8 = 20;
const EXIT_TOO_LARGE: u8 = 30;

#[derive(Parser)]
#[command(name = "q2sat", version, about = "Quantum 2-SAT solver")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Solve an instance and write a solution document.
    Solve {
        /// Instance file; `-` or omitted reads standard input.
        instance: Option<PathBuf>,
        /// Satisfaction and phase-equality tolerance.
        #[arg(long)]
        tol: Option<f64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Check a solution against an instance; exit 0 iff every term energy is within tolerance.
    Verify {
        instance: PathBuf,
        solution: PathBuf,
        #[arg(long, default_value_t = 1e-9)]
        tol: f64,
    },
    /// Generate an instance.
    Gen {
        #[arg(long, value_enum)]
        kind: GenKind,
        #[arg(long)]
        n: usize,
        #[arg(long)]
        m: Option<usize>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Dense minimum energy and verdict (at most 10 qubits).
    Oracle { instance: Option<PathBuf> },
    /// Time the solver on generated instances and print CSV.
    Bench {
        #[arg(long, value_enum, default_value = "ring")]
        kind: BenchKind,
        /// Comma-separated sizes; scientific notation such as 1e5 is accepted.
        #[arg(long, default_value = "1e4,1e5,1e6")]
        sizes: String,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        csv: Option<PathBuf>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum GenKind {
    #[value(name = "2sat")]
    TwoSat,
    Planted,
    PlantedEntangled,
    Ring,
    Random,
}

#[derive(Clone, Copy, ValueEnum)]
enum BenchKind {
    Ring,
    PlantedEntangled,
}

/// An error with the exit code it maps to.
struct Failure {
    code: u8,
    err: anyhow::Error,
}

fn input_err(err: impl Into<anyhow::Error>) -> Failure {
    Failure { code: EXIT_INPUT, err: err.into() }
}

fn read_text(path: Option<&PathBuf>) -> Result<String, Failure> {
    match path {
        Some(p) if p.as_os_str() != "-" => {
            fs::read_to_string(p).with_context(|| format!("reading {}", p.display())).map_err(input_err)
        }
        _ => {
            let mut s = String::new();
            io::stdin().read_to_string(&mut s).context("reading standard input").map_err(input_err)?;
            Ok(s)
        }
    }
}

fn load_instance(path: Option<&PathBuf>) -> Result<Instance64, Failure> {
    let text = read_text(path)?;
    parse_instance(&text).map_err(input_err)
}

fn write_text(path: Option<&PathBuf>, text: &str) -> Result<(), Failure> {
    let mut text = text.to_owned();
    if !text.ends_with('\n') {
        text.push('\n');
    }
    match path {
        Some(p) => fs::write(p, text).with_context(|| format!("writing {}", p.display())),
        None => io::stdout().write_all(text.as_bytes()).context("writing standard output"),
    }
    .map_err(input_err)
}

fn cmd_solve(instance: Option<PathBuf>, tol: Option<f64>, out: Option<PathBuf>) -> Result<u8, Failure> {
    let inst = load_instance(instance.as_ref())?;
    let mut config = SolverConfig64::default();
    if let Some(t) = tol {
        if !(t > 0.0 && t.is_finite()) {
            return Err(input_err(anyhow!("--tol must be positive and finite")));
        }
        config.tol.sat = t;
        config.tol.eq = t;
    }
    let (doc, code) = match solve(&inst, &config) {
        SolveOutcome::Sat(sol) => (SolutionDoc::sat(&sol), EXIT_SAT),
        SolveOutcome::Unsat(cause) => {
            eprintln!("unsat: {cause}");
            (SolutionDoc::unsat(cause.to_string()), EXIT_UNSAT)
        }
    };
    write_text(out.as_ref(), &serialize_solution(&doc))?;
    Ok(code)
}

fn cmd_verify(instance: PathBuf, solution: PathBuf, tol: f64) -> Result<u8, Failure> {
    let inst = load_instance(Some(&instance))?;
    let doc = parse_solution(&read_text(Some(&solution))?).map_err(input_err)?;
    if doc.status != Status::Sat {
        eprintln!("solution document reports unsat; there is no state to check");
        return Ok(EXIT_VERIFY_FAIL);
    }
    let sol = doc.to_solution::<f64>(inst.n()).map_err(input_err)?;
    let report = match product_energy(&inst, &sol) {
        Ok(r) => r,
        Err(e) => {
            eprintln!("{e}");
            return Ok(EXIT_VERIFY_FAIL);
        }
    };
    println!("max_energy {:e}", report.max);
    println!("total_energy {:e}", report.sum);
    Ok(if report.max <= tol { EXIT_SAT } else { EXIT_VERIFY_FAIL })
}

fn generate(kind: GenKind, n: usize, m: Option<usize>, seed: u64) -> anyhow::Result<Instance64> {
    let m = m.unwrap_or(2 * n);
    let inst = match kind {
        GenKind::TwoSat => gen_classical_2sat(&random_2sat_formula(n, m, 0.05, seed), n)?,
        GenKind::Planted => gen_planted(n, m.min(n * n.saturating_sub(1) / 2), seed, false)?,
        GenKind::PlantedEntangled => gen_planted(n, m.min(n * n.saturating_sub(1) / 2), seed, true)?,
        GenKind::Ring => gen_ring(n, RingKind::Singlet, seed)?,
        GenKind::Random => gen_random(n, m, RankMix::default(), seed)?,
    };
    Ok(inst)
}

fn cmd_gen(kind: GenKind, n: usize, m: Option<usize>, seed: u64, out: Option<PathBuf>) -> Result<u8, Failure> {
    let inst = generate(kind, n, m, seed).map_err(input_err)?;
    write_text(out.as_ref(), &serialize_instance(&inst))?;
    Ok(0)
}

fn cmd_oracle(instance: Option<PathBuf>) -> Result<u8, Failure> {
    let inst = load_instance(instance.as_ref())?;
    match dense_min_energy(&inst) {
        Ok(e) => {
            let verdict = match classify_energy(e) {
                DenseVerdict::Sat => "sat",
                DenseVerdict::Unsat => "unsat",
                DenseVerdict::Ambiguous => "ambiguous",
            };
            println!("min_energy {e:e}");
            println!("verdict {verdict}");
            Ok(0)
        }
        Err(e @ OracleError::TooLarge { .. }) => Err(Failure { code: EXIT_TOO_LARGE, err: e.into() }),
        Err(e) => Err(input_err(e)),
    }
}

fn parse_sizes(s: &str) -> anyhow::Result<Vec<usize>> {
    s.split(',')
        .map(|tok| {
            let v: f64 = tok.trim().parse().with_context(|| format!("bad size {tok:?}"))?;
            if !(v >= 1.0 && v.fract() == 0.0 && v <= 1e9) {
                return Err(anyhow!("size {tok:?} must be a positive integer"));
            }
            Ok(v as usize)
        })
        .collect()
}

fn cmd_bench(kind: BenchKind, sizes: &str, seed: u64, csv: Option<PathBuf>) -> Result<u8, Failure> {
    let sizes = parse_sizes(sizes).map_err(input_err)?;
    let mut out = String::from("size,edges,steps,millis\n");
    let config = SolverConfig64 { tol: f64::default_tolerances(), ..Default::default() };
    for n in sizes {
        let inst = match kind {
            BenchKind::Ring => gen_ring(n, RingKind::Singlet, seed),
            BenchKind::PlantedEntangled => gen_planted(n, n.min(n * n.saturating_sub(1) / 2), seed, true),
        }
        .map_err(input_err)?;
        let start = Instant::now();
        let (_, stats) = solve_with_stats(&inst, &config);
        let micros = start.elapsed().as_micros();
        out.push_str(&format!("{n},{},{},{}.{:03}\n", stats.edges, stats.steps, micros / 1000, micros % 1000));
    }
    write_text(csv.as_ref(), out.trim_end())?;
    Ok(0)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let res = match cli.cmd {
        Cmd::Solve { instance, tol, out } => cmd_solve(instance, tol, out),
        Cmd::Verify { instance, solution, tol } => cmd_verify(instance, solution, tol),
        Cmd::Gen { kind, n, m, seed, out } => cmd_gen(kind, n, m, seed, out),
        Cmd::Oracle { instance } => cmd_oracle(instance),
        Cmd::Bench { kind, sizes, seed, csv } => cmd_bench(kind, &sizes, seed, csv),
    };
    match res {
        Ok(code) => ExitCode::from(code),
        Err(Failure { code, err }) => {
            eprintln!("error: {err:#}");
            ExitCode::from(code)
        }
    }
}
