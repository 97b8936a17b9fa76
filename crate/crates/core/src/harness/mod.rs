//! Experiment runners, the CSV row schema, markdown reports and the
//! verification suites behind the command-line tool.
//!
//! Workload generation and result checking are never timed; only the three
//! join phases (or the single gather) are.

mod report;
mod verify;

use std::io::{Read, Write};
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::engine::{run_join, JoinOptions, JoinTask, PhaseReport, Variant};
use crate::error::{Error, Result};
use crate::exec::ExecCtx;
use crate::model::{Column, ValueKind};
use crate::primitives::{gather, gather_clusteredness};
use crate::workloads::{
    gen_pk_fk, gen_star, gen_tpc_shape, permutation, run_star_sequence, CounterRng, StarSchemaSpec, TpcShape,
    WorkloadSpec,
};

pub use report::markdown_report;
pub use verify::{run_verify, Failure, VerifyConfig, VerifyReport};

pub const DEFAULT_REPS: usize = 7;

/// Column order of the CSV schema.
pub const CSV_COLUMNS: [&str; 24] = [
    "experiment",
    "algo",
    "pattern",
    "r_rows",
    "s_rows",
    "r_payloads",
    "s_payloads",
    "key_bytes",
    "payload_bytes",
    "match_ratio",
    "zipf",
    "workers",
    "seed",
    "rep",
    "transform_ns",
    "find_ns",
    "materialize_ns",
    "total_ns",
    "throughput_tps",
    "peak_transform_b",
    "peak_find_b",
    "peak_materialize_b",
    "clusteredness_s",
    "clusteredness_r",
];

/// One timed repetition of one experiment cell.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BenchRow {
    pub experiment: String,
    pub algo: String,
    pub pattern: String,
    pub r_rows: usize,
    pub s_rows: usize,
    pub r_payloads: usize,
    pub s_payloads: usize,
    pub key_bytes: usize,
    pub payload_bytes: usize,
    pub match_ratio: f64,
    pub zipf: f64,
    pub workers: usize,
    pub seed: u64,
    pub rep: usize,
    pub transform_ns: u64,
    pub find_ns: u64,
    pub materialize_ns: u64,
    pub total_ns: u64,
    /// `(r_rows + s_rows)` per second of `total_ns`.
    pub throughput_tps: f64,
    pub peak_transform_b: u64,
    pub peak_find_b: u64,
    pub peak_materialize_b: u64,
    pub clusteredness_s: Option<f64>,
    pub clusteredness_r: Option<f64>,
}

pub fn throughput(r_rows: usize, s_rows: usize, total_ns: u64) -> f64 {
    if total_ns == 0 {
        0.0
    } else {
        (r_rows + s_rows) as f64 / (total_ns as f64 * 1e-9)
    }
}

impl BenchRow {
    /// Everything except timing, memory and repetition index; rows sharing
    /// it belong to one cell.
    pub fn cell_key(&self) -> String {
        format!(
            "{}|{}|{}|{}|{}|{}|{}|{}|{}|{}|{}|{}|{}",
            self.experiment,
            self.algo,
            self.pattern,
            self.r_rows,
            self.s_rows,
            self.r_payloads,
            self.s_payloads,
            self.key_bytes,
            self.payload_bytes,
            self.match_ratio,
            self.zipf,
            self.workers,
            self.seed
        )
    }

    fn with_report(mut self, report: &PhaseReport) -> Self {
        self.transform_ns = report.transform_ns;
        self.find_ns = report.find_ns;
        self.materialize_ns = report.materialize_ns;
        self.total_ns = report.total_ns;
        self.throughput_tps = throughput(self.r_rows, self.s_rows, report.total_ns);
        self.peak_transform_b = report.phase_peaks[0].total;
        self.peak_find_b = report.phase_peaks[1].total;
        self.peak_materialize_b = report.phase_peaks[2].total;
        self.clusteredness_s = report.clusteredness_s;
        self.clusteredness_r = report.clusteredness_r;
        self
    }
}

/// The repetition with the median total time (lower median for even counts).
pub fn median_row(rows: &[BenchRow]) -> Option<BenchRow> {
    let mut sorted: Vec<&BenchRow> = rows.iter().collect();
    sorted.sort_by_key(|r| (r.total_ns, r.rep));
    sorted.get(sorted.len().checked_sub(1)? / 2).map(|r| (*r).clone())
}

/// Median row of every cell, in order of first appearance.
pub fn select_medians(rows: &[BenchRow]) -> Vec<BenchRow> {
    let mut keys: Vec<String> = Vec::new();
    let mut groups: Vec<Vec<BenchRow>> = Vec::new();
    for row in rows {
        let key = row.cell_key();
        match keys.iter().position(|k| *k == key) {
            Some(i) => groups[i].push(row.clone()),
            None => {
                keys.push(key);
                groups.push(vec![row.clone()]);
            }
        }
    }
    groups.iter().filter_map(|g| median_row(g)).collect()
}

pub fn write_csv<W: Write>(rows: &[BenchRow], out: W) -> Result<()> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(out);
    w.write_record(CSV_COLUMNS)?;
    for row in rows {
        w.serialize(row)?;
    }
    w.flush()?;
    Ok(())
}

/// Parses a CSV written by [`write_csv`]. Empty input yields no rows.
pub fn read_csv<R: Read>(input: R) -> Result<Vec<BenchRow>> {
    let mut r = csv::ReaderBuilder::new().has_headers(true).from_reader(input);
    let headers = r.headers()?.clone();
    if headers.is_empty() {
        return Ok(Vec::new());
    }
    if headers.iter().ne(CSV_COLUMNS) {
        return Err(Error::SchemaError(format!(
            "expected columns `{}`, found `{}`",
            CSV_COLUMNS.join(","),
            headers.iter().collect::<Vec<_>>().join(",")
        )));
    }
    r.deserialize()
        .map(|row| row.map_err(|e| Error::SchemaError(e.to_string())))
        .collect()
}

/// A two-relation join cell.
#[derive(Clone, Debug, PartialEq)]
pub struct JoinCell {
    pub variant: Variant,
    pub spec: WorkloadSpec,
    pub options: JoinOptions,
}

fn base_row(experiment: &str, variant: Variant, spec: &WorkloadSpec, workers: usize, rep: usize) -> BenchRow {
    BenchRow {
        experiment: experiment.to_string(),
        algo: variant.algorithm().to_string(),
        pattern: variant.pattern().to_string(),
        r_rows: spec.r_rows,
        s_rows: spec.s_rows,
        r_payloads: spec.r_payloads,
        s_payloads: spec.s_payloads,
        key_bytes: spec.key_kind.byte_width(),
        payload_bytes: spec.payload_kind.byte_width(),
        match_ratio: spec.match_ratio,
        zipf: spec.zipf_factor,
        workers,
        seed: spec.seed,
        rep,
        transform_ns: 0,
        find_ns: 0,
        materialize_ns: 0,
        total_ns: 0,
        throughput_tps: 0.0,
        peak_transform_b: 0,
        peak_find_b: 0,
        peak_materialize_b: 0,
        clusteredness_s: None,
        clusteredness_r: None,
    }
}

/// Runs `cell` `reps` times on one generated workload.
pub fn bench_join(experiment: &str, cell: &JoinCell, reps: usize) -> Result<Vec<BenchRow>> {
    let (r, s) = gen_pk_fk(&cell.spec)?;
    let options = JoinOptions {
        pk_fk: true,
        seed: cell.spec.seed,
        ..cell.options.clone()
    };
    (0..reps)
        .map(|rep| {
            let out = run_join(&JoinTask::new(cell.variant, &r, &s).with_options(options.clone()))?;
            Ok(base_row(experiment, cell.variant, &cell.spec, options.workers, rep).with_report(&out.report))
        })
        .collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum GatherMode {
    /// Ascending identity map.
    Clustered,
    /// Random permutation map.
    Unclustered,
}

impl std::str::FromStr for GatherMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "clustered" => Ok(GatherMode::Clustered),
            "unclustered" => Ok(GatherMode::Unclustered),
            _ => Err(Error::SpecInvalid(format!("unknown gather mode `{s}`"))),
        }
    }
}

impl std::fmt::Display for GatherMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            GatherMode::Clustered => "clustered",
            GatherMode::Unclustered => "unclustered",
        })
    }
}

/// Times a single gather of `items` 4-byte values; reported as the
/// materialize phase.
pub fn bench_gather(items: usize, mode: GatherMode, workers: usize, seed: u64, reps: usize) -> Result<Vec<BenchRow>> {
    if items > crate::model::MAX_ROWS {
        return Err(Error::TooManyRows {
            rows: items,
            max: crate::model::MAX_ROWS,
        });
    }
    let rng = CounterRng::new(seed, 1);
    let input = Column::U32((0..items as u64).map(|i| rng.at(i) as u32).collect());
    let map: Vec<u32> = match mode {
        GatherMode::Clustered => (0..items as u32).collect(),
        GatherMode::Unclustered => permutation(items, CounterRng::new(seed, 2)).into_iter().map(|v| v as u32).collect(),
    };
    let clusteredness = gather_clusteredness(&map).ok();
    let ctx = ExecCtx::new(workers);
    (0..reps)
        .map(|rep| {
            let start = Instant::now();
            let out = gather(&ctx, &input, &map)?;
            let ns = start.elapsed().as_nanos() as u64;
            std::hint::black_box(out);
            Ok(BenchRow {
                experiment: "gather".into(),
                algo: "gather".into(),
                pattern: mode.to_string(),
                r_rows: items,
                s_rows: 0,
                r_payloads: 0,
                s_payloads: 0,
                key_bytes: 4,
                payload_bytes: 4,
                match_ratio: 1.0,
                zipf: 0.0,
                workers,
                seed,
                rep,
                transform_ns: 0,
                find_ns: 0,
                materialize_ns: ns,
                total_ns: ns,
                throughput_tps: throughput(items, 0, ns),
                peak_transform_b: 0,
                peak_find_b: 0,
                peak_materialize_b: 0,
                clusteredness_s: clusteredness,
                clusteredness_r: None,
            })
        })
        .collect()
}

/// A chain of star-schema joins. Row `i` of a repetition describes join
/// `i + 1`: `r_rows` is the dimension size and `s_payloads` the number of
/// probe payloads carried (the id plus earlier dimension payloads).
pub fn bench_sequence(spec: &StarSchemaSpec, variant: Variant, options: &JoinOptions, reps: usize) -> Result<Vec<BenchRow>> {
    let schema = gen_star(spec)?;
    let mut rows = Vec::new();
    for rep in 0..reps {
        for (i, out) in run_star_sequence(&schema, variant, options)?.iter().enumerate() {
            let wl = WorkloadSpec {
                r_rows: spec.dim_rows,
                s_rows: spec.fact_rows,
                r_payloads: 1,
                s_payloads: i + 1,
                key_kind: ValueKind::U32,
                payload_kind: ValueKind::U32,
                match_ratio: 1.0,
                zipf_factor: 0.0,
                seed: spec.seed,
            };
            rows.push(base_row("sequence", variant, &wl, options.workers, rep).with_report(&out.report));
        }
    }
    Ok(rows)
}

/// Runs one decision-support join shape.
pub fn bench_tpc(
    shape: TpcShape,
    scale: f64,
    kinds: (ValueKind, ValueKind),
    variant: Variant,
    options: &JoinOptions,
    seed: u64,
    reps: usize,
) -> Result<Vec<BenchRow>> {
    let (r, s) = gen_tpc_shape(shape, scale, kinds.0, kinds.1, seed)?;
    let options = JoinOptions {
        pk_fk: !shape.is_self_join(),
        ..options.clone()
    };
    let wl = WorkloadSpec {
        r_rows: r.len(),
        s_rows: s.len(),
        r_payloads: r.payloads().len(),
        s_payloads: s.payloads().len(),
        key_kind: kinds.0,
        payload_kind: kinds.1,
        match_ratio: 1.0,
        zipf_factor: 0.0,
        seed,
    };
    let experiment = format!("tpc-{shape}");
    (0..reps)
        .map(|rep| {
            let out = run_join(&JoinTask::new(variant, &r, &s).with_options(options.clone()))?;
            Ok(base_row(&experiment, variant, &wl, options.workers, rep).with_report(&out.report))
        })
        .collect()
}

/// Microbenchmark axes, each varying one workload parameter around a base.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Axis {
    /// |R| = |S| doubling.
    Size,
    /// |R| / |S| with |S| fixed.
    Ratio,
    /// Payload columns per side.
    Payloads,
    Match,
    Zipf,
    /// Key and payload widths 4/4, 4/8, 8/8.
    Types,
}

impl std::str::FromStr for Axis {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "size" => Ok(Axis::Size),
            "ratio" => Ok(Axis::Ratio),
            "payloads" => Ok(Axis::Payloads),
            "match" => Ok(Axis::Match),
            "zipf" => Ok(Axis::Zipf),
            "types" => Ok(Axis::Types),
            _ => Err(Error::SpecInvalid(format!("unknown axis `{s}`"))),
        }
    }
}

impl std::fmt::Display for Axis {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}", format!("{self:?}").to_lowercase())
    }
}

/// Workload specs along `axis`, all derived from `base`.
pub fn axis_specs(axis: Axis, base: &WorkloadSpec) -> Vec<WorkloadSpec> {
    let with = |f: &dyn Fn(&mut WorkloadSpec)| {
        let mut s = base.clone();
        f(&mut s);
        s
    };
    match axis {
        Axis::Size => (0..4)
            .map(|i| {
                with(&|s| {
                    s.r_rows = base.r_rows >> (3 - i);
                    s.s_rows = base.r_rows >> (3 - i);
                })
            })
            .collect(),
        Axis::Ratio => [1usize, 2, 4, 8, 16]
            .iter()
            .map(|&d| with(&|s| s.r_rows = (base.s_rows / d).max(1)))
            .collect(),
        Axis::Payloads => (1..=4)
            .map(|p| {
                with(&|s| {
                    s.r_payloads = p;
                    s.s_payloads = p;
                })
            })
            .collect(),
        Axis::Match => [0.0, 0.25, 0.5, 0.75, 1.0]
            .iter()
            .map(|&m| with(&|s| s.match_ratio = m))
            .collect(),
        Axis::Zipf => [0.0, 0.5, 1.0, 1.5, 2.0]
            .iter()
            .map(|&z| with(&|s| s.zipf_factor = z))
            .collect(),
        Axis::Types => [(ValueKind::U32, ValueKind::U32), (ValueKind::U32, ValueKind::U64), (ValueKind::U64, ValueKind::U64)]
            .iter()
            .map(|&(k, p)| {
                with(&|s| {
                    s.key_kind = k;
                    s.payload_kind = p;
                })
            })
            .collect(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row(rep: usize, total: u64) -> BenchRow {
        let mut r = base_row("join", Variant::PhjOm, &WorkloadSpec::default(), 1, rep);
        r.total_ns = total;
        r
    }

    #[test]
    fn median_of_seven() {
        let totals = [70, 10, 50, 30, 60, 20, 40];
        let rows: Vec<_> = totals.iter().enumerate().map(|(i, &t)| row(i, t)).collect();
        assert_eq!(median_row(&rows).unwrap().total_ns, 40);
        assert_eq!(median_row(&rows[..2]).unwrap().total_ns, 10);
        assert!(median_row(&[]).is_none());
    }

    #[test]
    fn csv_round_trip_and_header_order() {
        let mut rows = vec![row(0, 5), row(1, 7)];
        rows[1].clusteredness_s = Some(1.5);
        let mut buf = Vec::new();
        write_csv(&rows, &mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert_eq!(text.lines().next().unwrap(), CSV_COLUMNS.join(","));
        assert_eq!(read_csv(buf.as_slice()).unwrap(), rows);
        assert!(read_csv(&b""[..]).unwrap().is_empty());
        assert!(matches!(read_csv(&b"a,b\n1,2\n"[..]), Err(Error::SchemaError(_))));
    }

    #[test]
    fn join_throughput_formula() {
        let cell = JoinCell {
            variant: Variant::PhjOm,
            spec: WorkloadSpec {
                r_rows: 1 << 12,
                s_rows: 1 << 13,
                r_payloads: 2,
                s_payloads: 2,
                ..Default::default()
            },
            options: JoinOptions::default(),
        };
        let rows = bench_join("join", &cell, 3).unwrap();
        assert_eq!(rows.len(), 3);
        for r in &rows {
            let expected = 3.0 * 4096.0 / (r.total_ns as f64 * 1e-9);
            assert!((r.throughput_tps - expected).abs() <= 1e-9 * expected);
            assert_eq!(r.total_ns, r.transform_ns + r.find_ns + r.materialize_ns);
        }
        assert_eq!(select_medians(&rows).len(), 1);
    }

    #[test]
    fn sequence_rows_per_join() {
        let spec = StarSchemaSpec {
            fact_rows: 2000,
            dims: 3,
            dim_rows: 500,
            seed: 1,
        };
        let rows = bench_sequence(&spec, Variant::SmjOm, &JoinOptions::default(), 2).unwrap();
        assert_eq!(rows.len(), 6);
        assert_eq!(rows.iter().map(|r| r.s_payloads).collect::<Vec<_>>(), vec![1, 2, 3, 1, 2, 3]);
    }

    #[test]
    fn gather_modes() {
        let c = bench_gather(1000, GatherMode::Clustered, 2, 0, 1).unwrap();
        let u = bench_gather(1000, GatherMode::Unclustered, 2, 0, 1).unwrap();
        assert_eq!(c[0].clusteredness_s, Some(1.0));
        assert!(u[0].clusteredness_s.unwrap() > 100.0);
    }

    #[test]
    fn axes_vary_one_parameter() {
        let base = WorkloadSpec {
            r_rows: 1 << 12,
            s_rows: 1 << 12,
            ..Default::default()
        };
        assert_eq!(axis_specs(Axis::Size, &base).last().unwrap().r_rows, 1 << 12);
        assert_eq!(axis_specs(Axis::Types, &base).len(), 3);
        assert!(axis_specs(Axis::Zipf, &base).iter().all(|s| s.r_rows == base.r_rows));
        assert_eq!("types".parse::<Axis>().unwrap(), Axis::Types);
    }
}
