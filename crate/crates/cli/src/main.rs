use std::fs::File;
use std::io::{self, BufWriter, Read, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand};

use coljoin::engine::{Algorithm, Pattern};
use coljoin::harness::{
    axis_specs, bench_gather, bench_join, bench_sequence, bench_tpc, markdown_report, read_csv, run_verify,
    select_medians, write_csv, Axis, BenchRow, GatherMode, JoinCell, VerifyConfig, DEFAULT_REPS,
};
use coljoin::selector::{SelectorConfig, WorkloadFeatures};
use coljoin::workloads::{export_relation, gen_pk_fk, StarSchemaSpec, TpcShape, WorkloadSpec};
use coljoin::{JoinOptions, ValueKind, Variant};

/// Columnar equi-join benchmarks, verification and reporting.
#[derive(Parser, Debug)]
#[command(name = "coljoin", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Run an experiment and write one CSV row per cell.
    Bench {
        #[command(subcommand)]
        experiment: Experiment,
    },
    /// Check every variant against the reference join and the memory model.
    Verify(VerifyArgs),
    /// Turn a benchmark CSV into markdown tables.
    Report {
        /// CSV file; standard input when omitted.
        input: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Generate a workload and export both relations.
    Gen {
        #[command(flatten)]
        workload: WorkloadArgs,
        /// Directory that receives `R/` and `S/`.
        #[arg(long)]
        out: PathBuf,
    },
    /// Print the variant the heuristic picks for a workload.
    Select {
        #[command(flatten)]
        workload: WorkloadArgs,
        /// Restrict the choice to sort-merge variants.
        #[arg(long)]
        smj_only: bool,
    },
}

#[derive(Subcommand, Debug)]
enum Experiment {
    /// A two-relation PK-FK join.
    Join(JoinArgs),
    /// A single gather with a clustered or unclustered map.
    Gather {
        #[arg(long, default_value_t = 1 << 24)]
        items: usize,
        /// clustered, unclustered or both.
        #[arg(long, default_value = "both")]
        mode: String,
        #[command(flatten)]
        run: RunArgs,
    },
    /// A chain of star-schema joins.
    Sequence {
        #[arg(long, default_value_t = 4)]
        joins: usize,
        #[arg(long, default_value_t = 1 << 20)]
        fact_rows: usize,
        #[arg(long, default_value_t = 1 << 16)]
        dim_rows: usize,
        #[command(flatten)]
        variants: VariantArgs,
        #[command(flatten)]
        run: RunArgs,
        #[command(flatten)]
        tuning: TuningArgs,
    },
    /// Decision-support join shapes J1 to J5.
    Tpc {
        /// Shapes to run; all when omitted.
        #[arg(long, value_delimiter = ',')]
        shape: Vec<TpcShape>,
        /// Fraction of the full row counts, e.g. `1/128`.
        #[arg(long, default_value = "1/128", value_parser = parse_fraction)]
        scale: f64,
        #[arg(long, default_value_t = 4, value_parser = parse_width)]
        key_bytes: usize,
        #[arg(long, default_value_t = 8, value_parser = parse_width)]
        payload_bytes: usize,
        #[command(flatten)]
        variants: VariantArgs,
        #[command(flatten)]
        run: RunArgs,
        #[command(flatten)]
        tuning: TuningArgs,
    },
    /// Sweep one or more workload axes around the given base workload.
    Grid {
        /// size, ratio, payloads, match, zipf or types; all when omitted.
        #[arg(long, value_delimiter = ',')]
        axis: Vec<Axis>,
        #[command(flatten)]
        join: JoinArgs,
    },
}

#[derive(Args, Debug)]
struct JoinArgs {
    #[command(flatten)]
    variants: VariantArgs,
    #[command(flatten)]
    workload: WorkloadArgs,
    #[command(flatten)]
    run: RunArgs,
    #[command(flatten)]
    tuning: TuningArgs,
}

#[derive(Args, Debug)]
struct VariantArgs {
    /// smj or phj; both when omitted.
    #[arg(long)]
    algo: Option<Algorithm>,
    /// gfur (um) or gftr (om); both when omitted.
    #[arg(long)]
    pattern: Option<Pattern>,
}

impl VariantArgs {
    fn variants(&self) -> Vec<Variant> {
        Variant::ALL
            .into_iter()
            .filter(|v| self.algo.is_none_or(|a| v.algorithm() == a))
            .filter(|v| self.pattern.is_none_or(|p| v.pattern() == p))
            .collect()
    }
}

#[derive(Args, Debug)]
struct WorkloadArgs {
    #[arg(long, default_value_t = 1 << 20)]
    r_rows: usize,
    #[arg(long, default_value_t = 1 << 20)]
    s_rows: usize,
    /// Payload columns on each side.
    #[arg(long, default_value_t = 1)]
    payloads: usize,
    /// Fraction of probe tuples with a partner.
    #[arg(long = "match", default_value_t = 1.0)]
    match_ratio: f64,
    #[arg(long, default_value_t = 0.0)]
    zipf: f64,
    #[arg(long, default_value_t = 4, value_parser = parse_width)]
    key_bytes: usize,
    #[arg(long, default_value_t = 4, value_parser = parse_width)]
    payload_bytes: usize,
    #[arg(long, default_value_t = 42)]
    seed: u64,
}

impl WorkloadArgs {
    fn spec(&self) -> anyhow::Result<WorkloadSpec> {
        let spec = WorkloadSpec {
            r_rows: self.r_rows,
            s_rows: self.s_rows,
            r_payloads: self.payloads,
            s_payloads: self.payloads,
            key_kind: ValueKind::from_bytes(self.key_bytes)?,
            payload_kind: ValueKind::from_bytes(self.payload_bytes)?,
            match_ratio: self.match_ratio,
            zipf_factor: self.zipf,
            seed: self.seed,
        };
        spec.validate()?;
        Ok(spec)
    }
}

#[derive(Args, Debug)]
struct RunArgs {
    /// Logical workers; also sizes the thread pool.
    #[arg(long, env = "COLJOIN_WORKERS", default_value_t = 1)]
    workers: usize,
    #[arg(long, default_value_t = DEFAULT_REPS)]
    reps: usize,
    /// Emit every repetition instead of the median per cell.
    #[arg(long)]
    all_reps: bool,
    /// CSV destination; standard output when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct TuningArgs {
    /// Total radix bits for hash partitioning; sized from |R| when omitted.
    #[arg(long)]
    radix_bits: Option<u32>,
    /// Maximum build rows per hash sub-partition.
    #[arg(long, default_value_t = 4096)]
    sub_limit: usize,
    /// Allocate input-sized buffers before timing starts.
    #[arg(long)]
    prealloc: bool,
}

impl TuningArgs {
    fn options(&self, run: &RunArgs, seed: u64) -> JoinOptions {
        JoinOptions {
            total_radix_bits: self.radix_bits,
            sub_partition_limit: self.sub_limit,
            prealloc: self.prealloc,
            workers: run.workers,
            seed,
            ..JoinOptions::default()
        }
    }
}

#[derive(Args, Debug)]
struct VerifyArgs {
    #[arg(long, value_delimiter = ',', default_values_t = [1usize << 10, 1 << 14, 1 << 17])]
    sizes: Vec<usize>,
    #[arg(long, value_delimiter = ',', default_values_t = [0.0, 0.25, 0.5, 1.0])]
    match_ratios: Vec<f64>,
    #[arg(long, value_delimiter = ',', default_values_t = [0.0, 1.0, 2.0])]
    zipf: Vec<f64>,
    #[arg(long, default_value_t = 42)]
    seed: u64,
    #[arg(long, default_value_t = 1000)]
    stability_cases: usize,
    /// Also check cross-variant agreement on these shapes.
    #[arg(long, value_delimiter = ',')]
    tpc: Vec<TpcShape>,
    #[arg(long, default_value = "1/128", value_parser = parse_fraction)]
    scale: f64,
    /// Flip one byte of every join output; the run must then fail.
    #[arg(long)]
    inject_fault: bool,
    #[arg(long, env = "COLJOIN_WORKERS", default_value_t = 1)]
    workers: usize,
}

fn parse_fraction(s: &str) -> Result<f64, String> {
    let value = match s.split_once('/') {
        Some((n, d)) => {
            let n: f64 = n.trim().parse().map_err(|e| format!("{e}"))?;
            let d: f64 = d.trim().parse().map_err(|e| format!("{e}"))?;
            n / d
        }
        None => s.parse().map_err(|e| format!("{e}"))?,
    };
    if value.is_finite() && value > 0.0 {
        Ok(value)
    } else {
        Err(format!("`{s}` is not a positive fraction"))
    }
}

fn parse_width(s: &str) -> Result<usize, String> {
    match s {
        "4" => Ok(4),
        "8" => Ok(8),
        _ => Err(format!("width must be 4 or 8, got `{s}`")),
    }
}

fn init_pool(workers: usize) -> anyhow::Result<()> {
    if workers == 0 {
        bail!("--workers must be at least 1");
    }
    // a second build fails harmlessly when tests drive `run` repeatedly
    let _ = rayon::ThreadPoolBuilder::new().num_threads(workers).build_global();
    Ok(())
}

fn sink(out: &Option<PathBuf>) -> anyhow::Result<Box<dyn Write>> {
    Ok(match out {
        Some(path) => Box::new(BufWriter::new(
            File::create(path).with_context(|| format!("cannot create {}", path.display()))?,
        )),
        None => Box::new(io::stdout().lock()),
    })
}

fn emit(rows: Vec<BenchRow>, run: &RunArgs) -> anyhow::Result<()> {
    let rows = if run.all_reps { rows } else { select_medians(&rows) };
    write_csv(&rows, sink(&run.out)?)?;
    Ok(())
}

fn check_reps(run: &RunArgs) -> anyhow::Result<()> {
    if run.reps == 0 {
        bail!("--reps must be at least 1");
    }
    init_pool(run.workers)
}

fn join_rows(experiment: &str, args: &JoinArgs, specs: &[WorkloadSpec]) -> anyhow::Result<Vec<BenchRow>> {
    let mut rows = Vec::new();
    for spec in specs {
        for variant in args.variants.variants() {
            let cell = JoinCell {
                variant,
                spec: spec.clone(),
                options: args.tuning.options(&args.run, spec.seed),
            };
            rows.extend(bench_join(experiment, &cell, args.run.reps)?);
        }
    }
    Ok(rows)
}

fn bench(experiment: Experiment) -> anyhow::Result<()> {
    match experiment {
        Experiment::Join(args) => {
            check_reps(&args.run)?;
            let rows = join_rows("join", &args, &[args.workload.spec()?])?;
            emit(rows, &args.run)
        }
        Experiment::Gather { items, mode, run } => {
            check_reps(&run)?;
            let modes = match mode.as_str() {
                "both" => vec![GatherMode::Clustered, GatherMode::Unclustered],
                m => vec![m.parse()?],
            };
            let mut rows = Vec::new();
            for m in modes {
                rows.extend(bench_gather(items, m, run.workers, 42, run.reps)?);
            }
            emit(rows, &run)
        }
        Experiment::Sequence {
            joins,
            fact_rows,
            dim_rows,
            variants,
            run,
            tuning,
        } => {
            check_reps(&run)?;
            let spec = StarSchemaSpec {
                fact_rows,
                dims: joins,
                dim_rows,
                seed: 42,
            };
            let mut rows = Vec::new();
            for variant in variants.variants() {
                rows.extend(bench_sequence(&spec, variant, &tuning.options(&run, 42), run.reps)?);
            }
            emit(rows, &run)
        }
        Experiment::Tpc {
            shape,
            scale,
            key_bytes,
            payload_bytes,
            variants,
            run,
            tuning,
        } => {
            check_reps(&run)?;
            let shapes = if shape.is_empty() { TpcShape::ALL.to_vec() } else { shape };
            let kinds = (ValueKind::from_bytes(key_bytes)?, ValueKind::from_bytes(payload_bytes)?);
            let mut rows = Vec::new();
            for s in shapes {
                for variant in variants.variants() {
                    rows.extend(bench_tpc(s, scale, kinds, variant, &tuning.options(&run, 42), 42, run.reps)?);
                }
            }
            emit(rows, &run)
        }
        Experiment::Grid { axis, join } => {
            check_reps(&join.run)?;
            let base = join.workload.spec()?;
            let axes = if axis.is_empty() {
                vec![Axis::Size, Axis::Ratio, Axis::Payloads, Axis::Match, Axis::Zipf, Axis::Types]
            } else {
                axis
            };
            let mut rows = Vec::new();
            for a in axes {
                rows.extend(join_rows(&format!("grid-{a}"), &join, &axis_specs(a, &base))?);
            }
            emit(rows, &join.run)
        }
    }
}

fn verify(args: VerifyArgs) -> anyhow::Result<bool> {
    init_pool(args.workers)?;
    let cfg = VerifyConfig {
        sizes: args.sizes,
        match_ratios: args.match_ratios,
        zipf_factors: args.zipf,
        seed: args.seed,
        stability_cases: args.stability_cases,
        tpc: args.tpc,
        tpc_scale: args.scale,
        inject_fault: args.inject_fault,
        ..VerifyConfig::default()
    };
    let report = run_verify(&cfg)?;
    for (suite, checks) in &report.suites {
        let failed = report.failures.iter().filter(|f| f.suite == *suite).count();
        println!("{suite:<14} {:>6} checks  {}", checks, if failed == 0 { "ok".to_string() } else { format!("{failed} FAILED") });
    }
    if let Some(first) = report.failures.first() {
        eprintln!("first failure: {first}");
    }
    Ok(report.passed())
}

fn run(cli: Cli) -> anyhow::Result<bool> {
    match cli.command {
        Command::Bench { experiment } => bench(experiment)?,
        Command::Verify(args) => return verify(args),
        Command::Report { input, out } => {
            let mut text = Vec::new();
            match &input {
                Some(path) => {
                    File::open(path)
                        .with_context(|| format!("cannot open {}", path.display()))?
                        .read_to_end(&mut text)?;
                }
                None => {
                    io::stdin().read_to_end(&mut text)?;
                }
            }
            let rows = read_csv(text.as_slice())?;
            sink(&out)?.write_all(markdown_report(&rows).as_bytes())?;
        }
        Command::Gen { workload, out } => {
            let (r, s) = gen_pk_fk(&workload.spec()?)?;
            export_relation(&r, &out.join("R"))?;
            export_relation(&s, &out.join("S"))?;
            println!("wrote {} R rows and {} S rows to {}", r.len(), s.len(), out.display());
        }
        Command::Select { workload, smj_only } => {
            let features = WorkloadFeatures::from(&workload.spec()?);
            let selector = SelectorConfig::default();
            let pick = if smj_only {
                selector.choose_smj_only(&features)
            } else {
                selector.choose(&features)
            };
            println!("{pick}");
        }
    }
    Ok(true)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
