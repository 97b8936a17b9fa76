use std::fmt;

use rayon::prelude::*;

use crate::engine::{run_join, JoinOptions, JoinOutput, JoinTask, Pattern, Variant};
use crate::error::Result;
use crate::exec::ExecCtx;
use crate::memory::Phase;
use crate::model::{Column, Relation, ValueKind};
use crate::oracle::{canonicalize, nested_loop_join};
use crate::primitives::{radix_partition, sort_pairs};
use crate::workloads::{gen_pk_fk, gen_tpc_shape, CounterRng, TpcShape, WorkloadSpec};

/// Which checks to run and over what grid.
#[derive(Clone, Debug)]
pub struct VerifyConfig {
    pub sizes: Vec<usize>,
    pub match_ratios: Vec<f64>,
    pub zipf_factors: Vec<f64>,
    pub kinds: Vec<ValueKind>,
    pub variants: Vec<Variant>,
    pub payloads: usize,
    pub seed: u64,
    /// Worker counts whose outputs must be byte-identical.
    pub workers: Vec<usize>,
    pub stability_cases: usize,
    /// Rows of the memory closed-form check.
    pub ledger_rows: usize,
    pub tpc: Vec<TpcShape>,
    pub tpc_scale: f64,
    /// Corrupt one byte of every join output before checking it.
    pub inject_fault: bool,
}

impl Default for VerifyConfig {
    fn default() -> Self {
        Self {
            sizes: vec![1 << 10, 1 << 14, 1 << 17],
            match_ratios: vec![0.0, 0.25, 0.5, 1.0],
            zipf_factors: vec![0.0, 1.0, 2.0],
            kinds: vec![ValueKind::U32, ValueKind::U64],
            variants: Variant::ALL.to_vec(),
            payloads: 2,
            seed: 42,
            workers: vec![1, 2, 4, 8, 16],
            stability_cases: 1000,
            ledger_rows: 1 << 14,
            tpc: Vec::new(),
            tpc_scale: 1.0 / 128.0,
            inject_fault: false,
        }
    }
}

/// A single failed check.
#[derive(Clone, Debug, PartialEq)]
pub struct Failure {
    pub suite: &'static str,
    pub seed: u64,
    pub spec: String,
    pub detail: String,
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{}] seed={} {}: {}", self.suite, self.seed, self.spec, self.detail)
    }
}

/// Check counts per suite plus every failure in grid order.
#[derive(Clone, Debug, Default)]
pub struct VerifyReport {
    pub suites: Vec<(&'static str, usize)>,
    pub failures: Vec<Failure>,
}

impl VerifyReport {
    pub fn passed(&self) -> bool {
        self.failures.is_empty()
    }

    fn add(&mut self, suite: &'static str, checks: usize, failures: Vec<Failure>) {
        self.suites.push((suite, checks));
        self.failures.extend(failures);
    }
}

fn describe(spec: &WorkloadSpec) -> String {
    format!(
        "|R|={} |S|={} payloads={}/{} key={}B payload={}B match={} zipf={}",
        spec.r_rows,
        spec.s_rows,
        spec.r_payloads,
        spec.s_payloads,
        spec.key_kind.byte_width(),
        spec.payload_kind.byte_width(),
        spec.match_ratio,
        spec.zipf_factor
    )
}

fn corrupt(relation: Relation) -> Result<Relation> {
    if relation.is_empty() {
        return Ok(relation);
    }
    let (name, key, mut payloads) = relation.into_parts();
    if let Some(col) = payloads.first_mut() {
        match col {
            Column::U32(v) => v[0] ^= 1,
            Column::U64(v) => v[0] ^= 1,
        }
    }
    Relation::new(name, key, payloads)
}

fn run(variant: Variant, r: &Relation, s: &Relation, options: &JoinOptions, fault: bool) -> Result<JoinOutput> {
    let mut out = run_join(&JoinTask::new(variant, r, s).with_options(options.clone()))?;
    if fault {
        out.relation = corrupt(out.relation)?;
    }
    Ok(out)
}

struct Cell {
    spec: WorkloadSpec,
    variant: Variant,
}

impl Cell {
    fn failure(&self, suite: &'static str, detail: impl Into<String>) -> Failure {
        Failure {
            suite,
            seed: self.spec.seed,
            spec: format!("{} {}", self.variant, describe(&self.spec)),
            detail: detail.into(),
        }
    }
}

fn grid(cfg: &VerifyConfig) -> Vec<WorkloadSpec> {
    let mut specs = Vec::new();
    for &rows in &cfg.sizes {
        for &match_ratio in &cfg.match_ratios {
            for &zipf_factor in &cfg.zipf_factors {
                for &kind in &cfg.kinds {
                    specs.push(WorkloadSpec {
                        r_rows: rows,
                        s_rows: rows,
                        r_payloads: cfg.payloads,
                        s_payloads: cfg.payloads,
                        key_kind: kind,
                        payload_kind: kind,
                        match_ratio,
                        zipf_factor,
                        seed: cfg.seed,
                    });
                }
            }
        }
    }
    specs
}

/// Oracle failures, clusteredness failures and clusteredness check count.
type WorkloadOutcome = (Vec<Failure>, Vec<Failure>, usize);

/// Oracle equivalence plus the clustered-id checks, which reuse the same runs.
fn oracle_suite(cfg: &VerifyConfig) -> Result<(usize, Vec<Failure>, usize, Vec<Failure>)> {
    let per_workload: Vec<Result<WorkloadOutcome>> = grid(cfg)
        .into_par_iter()
        .map(|spec| {
            let (r, s) = gen_pk_fk(&spec)?;
            let expected = nested_loop_join(&r, &s)?;
            let options = JoinOptions {
                pk_fk: true,
                seed: spec.seed,
                ..JoinOptions::default()
            };
            let mut wrong = Vec::new();
            let mut unclustered = Vec::new();
            let mut cluster_checks = 0;
            let mut clusteredness = Vec::new();
            for &variant in &cfg.variants {
                let cell = Cell { spec: spec.clone(), variant };
                let out = run(variant, &r, &s, &options, cfg.inject_fault)?;
                let got = canonicalize(&out.relation)?;
                if got != expected {
                    wrong.push(cell.failure(
                        "oracle",
                        format!("{} output rows vs {} expected, contents differ", got.len(), expected.len()),
                    ));
                }
                let c = out.report.clusteredness_s;
                if variant == Variant::SmjOm {
                    cluster_checks += 1;
                    if c.is_some_and(|c| c != 1.0) {
                        unclustered.push(cell.failure("clusteredness", format!("SMJ-OM ids_s clusteredness {c:?}")));
                    }
                }
                clusteredness.push((variant, c));
            }
            let of = |v| clusteredness.iter().find(|(x, _)| *x == v).and_then(|(_, c)| *c);
            if let (Some(om), Some(um)) = (of(Variant::PhjOm), of(Variant::PhjUm)) {
                cluster_checks += 1;
                if om > um {
                    let cell = Cell { spec: spec.clone(), variant: Variant::PhjOm };
                    unclustered.push(cell.failure("clusteredness", format!("PHJ-OM {om} > PHJ-UM {um}")));
                }
            }
            Ok((wrong, unclustered, cluster_checks))
        })
        .collect();
    let workloads = per_workload.len();
    let mut oracle = Vec::new();
    let mut cluster = Vec::new();
    let mut cluster_checks = 0;
    for item in per_workload {
        let (w, u, c) = item?;
        oracle.extend(w);
        cluster.extend(u);
        cluster_checks += c;
    }
    Ok((workloads * cfg.variants.len(), oracle, cluster_checks, cluster))
}

fn determinism_suite(cfg: &VerifyConfig) -> Result<(usize, Vec<Failure>)> {
    let rows = cfg.sizes.iter().copied().find(|&n| n >= 1 << 12).unwrap_or(cfg.sizes[0]);
    let specs: Vec<WorkloadSpec> = [(1.0, 0.0), (0.5, 1.0), (1.0, 2.0)]
        .iter()
        .flat_map(|&(m, z)| {
            cfg.kinds.iter().map(move |&kind| WorkloadSpec {
                r_rows: rows,
                s_rows: rows,
                r_payloads: cfg.payloads,
                s_payloads: cfg.payloads,
                key_kind: kind,
                payload_kind: kind,
                match_ratio: m,
                zipf_factor: z,
                seed: cfg.seed,
            })
        })
        .collect();
    let cells: Vec<Cell> = specs
        .into_iter()
        .flat_map(|spec| cfg.variants.iter().map(move |&variant| Cell { spec: spec.clone(), variant }))
        .collect();
    let checks = cells.len() * cfg.workers.len().saturating_sub(1);
    let results: Vec<Result<Option<Failure>>> = cells
        .par_iter()
        .map(|cell| {
            let (r, s) = gen_pk_fk(&cell.spec)?;
            let mut reference: Option<Relation> = None;
            for &workers in &cfg.workers {
                let options = JoinOptions {
                    pk_fk: true,
                    workers,
                    seed: cell.spec.seed,
                    ..JoinOptions::default()
                };
                // only the last worker count is corrupted, so a fault shows up as disagreement
                let fault = cfg.inject_fault && Some(&workers) == cfg.workers.last();
                let out = run(cell.variant, &r, &s, &options, fault)?.relation;
                match &reference {
                    None => reference = Some(out),
                    Some(first) if *first != out => {
                        return Ok(Some(cell.failure(
                            "determinism",
                            format!("output with {workers} workers differs from {} workers", cfg.workers[0]),
                        )))
                    }
                    Some(_) => {}
                }
            }
            Ok(None)
        })
        .collect();
    let failures = results.into_iter().filter_map(|r| r.transpose()).collect::<Result<Vec<_>>>()?;
    Ok((checks, failures))
}

fn stable_reference(keys: &[u64], digit: impl Fn(u64) -> u64) -> Vec<(u64, u64)> {
    let mut pairs: Vec<(u64, u64)> = keys.iter().enumerate().map(|(i, &k)| (k, i as u64)).collect();
    pairs.sort_by_key(|&(k, _)| digit(k));
    pairs
}

/// Random duplicate-heavy inputs for the stable partition and sort.
fn stability_suite(cfg: &VerifyConfig) -> Result<(usize, Vec<Failure>)> {
    let results: Vec<Result<Option<Failure>>> = (0..cfg.stability_cases)
        .into_par_iter()
        .map(|case| {
            let rng = CounterRng::new(cfg.seed, 0x5AB1 + case as u64);
            let n = rng.below(0, 3000) as usize;
            let distinct = 1 + rng.below(1, 64);
            let kind = if rng.at(2) & 1 == 0 { ValueKind::U32 } else { ValueKind::U64 };
            let spread = rng.below(3, kind.bits() as u64 - 6) as u32;
            let raw: Vec<u64> = (0..n as u64).map(|i| rng.below(10 + i, distinct) << spread).collect();
            let keys = Column::from_u64s(kind, &raw)?;
            let ids = Column::U32((0..n as u32).collect());
            let workers = 1 + rng.below(4, 16) as usize;
            let ctx = ExecCtx::new(workers);
            let low = rng.below(5, kind.bits() as u64 - 8) as u32;
            let high = low + 1 + rng.below(6, 8) as u32;
            let fail = |what: &str| Failure {
                suite: "stability",
                seed: cfg.seed,
                spec: format!("case={case} n={n} kind={} workers={workers}", kind.byte_width()),
                detail: what.to_string(),
            };
            let (pk, pv, _) = radix_partition(&ctx, &keys, &ids, low, high)?;
            let mask = (1u64 << (high - low)) - 1;
            let expected = stable_reference(&raw, |k| (k >> low) & mask);
            let got: Vec<(u64, u64)> = pk.iter_u64().zip(pv.iter_u64()).collect();
            if got != expected {
                return Ok(Some(fail(&format!("radix_partition bits [{low},{high}) not stable"))));
            }
            let (sk, sv) = sort_pairs(&ctx, &keys, &ids)?;
            let got: Vec<(u64, u64)> = sk.iter_u64().zip(sv.iter_u64()).collect();
            if got != stable_reference(&raw, |k| k) {
                return Ok(Some(fail("sort_pairs not stable")));
            }
            Ok(None)
        })
        .collect();
    let failures = results.into_iter().filter_map(|r| r.transpose()).collect::<Result<Vec<_>>>()?;
    Ok((cfg.stability_cases * 2, failures))
}

/// Expected tracked column bytes per phase, in multiples of `M_c`, for
/// 4-byte columns, one payload per side and `|R| = |S| = |T|`.
pub(crate) fn closed_form_columns(pattern: Pattern) -> [u64; 3] {
    match pattern {
        Pattern::Gfur => [5, 6, 2],
        Pattern::Gftr => [4, 6, 4],
    }
}

fn ledger_suite(cfg: &VerifyConfig) -> Result<(usize, Vec<Failure>)> {
    let spec = WorkloadSpec {
        r_rows: cfg.ledger_rows,
        s_rows: cfg.ledger_rows,
        seed: cfg.seed,
        ..WorkloadSpec::default()
    };
    let (r, s) = gen_pk_fk(&spec)?;
    let mc = cfg.ledger_rows as u64 * 4;
    let mut failures = Vec::new();
    let mut checks = 0;
    for &variant in &Variant::ALL {
        let out = run(variant, &r, &s, &JoinOptions { pk_fk: true, ..JoinOptions::default() }, false)?;
        let expected = closed_form_columns(variant.pattern());
        for phase in [Phase::Transform, Phase::Find, Phase::Materialize] {
            checks += 1;
            let peak = out.report.peak(phase);
            let want = expected[phase.index()] * mc;
            if peak.columns != want {
                failures.push(Cell { spec: spec.clone(), variant }.failure(
                    "ledger",
                    format!(
                        "{phase:?} peak columns {} B, expected {}·M_c = {want} B (M_t = {} B)",
                        peak.columns,
                        expected[phase.index()],
                        peak.intermediate
                    ),
                ));
            }
        }
    }
    Ok((checks, failures))
}

fn tpc_suite(cfg: &VerifyConfig) -> Result<(usize, Vec<Failure>)> {
    let mut failures = Vec::new();
    for &shape in &cfg.tpc {
        let (r, s) = gen_tpc_shape(shape, cfg.tpc_scale, ValueKind::U32, ValueKind::U64, cfg.seed)?;
        let options = JoinOptions {
            pk_fk: !shape.is_self_join(),
            seed: cfg.seed,
            ..JoinOptions::default()
        };
        let outputs: Vec<Result<Relation>> = cfg
            .variants
            .par_iter()
            .map(|&v| canonicalize(&run(v, &r, &s, &options, cfg.inject_fault && v == cfg.variants[0])?.relation))
            .collect();
        let outputs = outputs.into_iter().collect::<Result<Vec<_>>>()?;
        for (v, out) in cfg.variants.iter().zip(&outputs).skip(1) {
            if *out != outputs[0] {
                failures.push(Failure {
                    suite: "tpc",
                    seed: cfg.seed,
                    spec: format!("{shape} scale={}", cfg.tpc_scale),
                    detail: format!("{v} disagrees with {} ({} vs {} rows)", cfg.variants[0], out.len(), outputs[0].len()),
                });
            }
        }
    }
    Ok((cfg.tpc.len() * cfg.variants.len().saturating_sub(1), failures))
}

/// Runs every suite. Errors are reserved for workloads that cannot be
/// generated or joined at all; wrong results come back as failures.
pub fn run_verify(cfg: &VerifyConfig) -> Result<VerifyReport> {
    let mut report = VerifyReport::default();
    let (oracle_checks, oracle, cluster_checks, cluster) = oracle_suite(cfg)?;
    report.add("oracle", oracle_checks, oracle);
    report.add("clusteredness", cluster_checks, cluster);
    let (n, f) = determinism_suite(cfg)?;
    report.add("determinism", n, f);
    let (n, f) = stability_suite(cfg)?;
    report.add("stability", n, f);
    let (n, f) = ledger_suite(cfg)?;
    report.add("ledger", n, f);
    if !cfg.tpc.is_empty() {
        let (n, f) = tpc_suite(cfg)?;
        report.add("tpc", n, f);
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small() -> VerifyConfig {
        VerifyConfig {
            sizes: vec![1 << 9, 1 << 12],
            zipf_factors: vec![0.0, 1.5],
            workers: vec![1, 3, 16],
            stability_cases: 100,
            ledger_rows: 1 << 12,
            ..VerifyConfig::default()
        }
    }

    #[test]
    fn small_grid_passes() {
        let report = run_verify(&small()).unwrap();
        assert!(report.passed(), "{:?}", report.failures);
        assert_eq!(report.suites.len(), 5);
        assert!(report.suites.iter().all(|&(_, n)| n > 0));
    }

    #[test]
    fn injected_fault_is_caught() {
        let cfg = VerifyConfig {
            sizes: vec![1 << 9],
            match_ratios: vec![1.0],
            zipf_factors: vec![0.0],
            kinds: vec![ValueKind::U32],
            stability_cases: 10,
            inject_fault: true,
            ..small()
        };
        let report = run_verify(&cfg).unwrap();
        assert!(report.failures.iter().any(|f| f.suite == "oracle"));
        assert!(report.failures.iter().any(|f| f.suite == "determinism"));
        let first = &report.failures[0];
        assert_eq!(first.seed, 42);
        assert!(first.to_string().contains("|R|=512"), "{first}");
    }

    #[test]
    fn tpc_variants_agree() {
        let cfg = VerifyConfig {
            tpc: vec![TpcShape::J3, TpcShape::J5],
            tpc_scale: 1.0 / 1024.0,
            ..VerifyConfig::default()
        };
        let (checks, failures) = tpc_suite(&cfg).unwrap();
        assert_eq!(checks, 6);
        assert!(failures.is_empty(), "{failures:?}");
    }
}
