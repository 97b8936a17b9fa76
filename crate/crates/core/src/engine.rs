//! The four join pipelines and their phase-scoped instrumentation.
//!
//! Every pipeline runs transform, find and materialize in that order. The
//! unoptimized pattern (GFUR) transforms `(key, physical id)` pairs and gathers
//! payloads from the original relations. The optimized pattern (GFTR)
//! transforms keys together with payload columns so the final gathers read
//! transformed columns with clustered virtual ids. Only the first payload of
//! each side is transformed up front, the rest one at a time at
//! materialization.

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exec::ExecCtx;
use crate::hash_match::{
    default_radix_bits, hash_matches, layout_of, plan_layouts, DEFAULT_SUB_PARTITION_LIMIT,
};
use crate::memory::{phase_scope, Allocator, MemCategory, MemLedger, Phase, PeakSnapshot, Tracked};
use crate::merge_match::{key_kind_mismatch, merge_matches, validate_inputs};
use crate::model::{Column, Element, MatchSet, RadixKey, Relation, TupleIdSemantics, ValueKind};
use crate::primitives::{
    fill_iota, fingerprint, gather, gather_clusteredness, gather_into, partition_passes_into,
    pass_plan, MAX_BITS_PER_PASS,
};
use crate::with_column;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Algorithm {
    Smj,
    Phj,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Pattern {
    /// Gather from untransformed relations.
    Gfur,
    /// Gather from transformed relations.
    Gftr,
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Algorithm::Smj => "smj",
            Algorithm::Phj => "phj",
        })
    }
}

impl fmt::Display for Pattern {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Pattern::Gfur => "gfur",
            Pattern::Gftr => "gftr",
        })
    }
}

impl FromStr for Algorithm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "smj" => Ok(Algorithm::Smj),
            "phj" => Ok(Algorithm::Phj),
            _ => Err(Error::SpecInvalid(format!("unknown algorithm `{s}`"))),
        }
    }
}

impl FromStr for Pattern {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "gfur" | "um" => Ok(Pattern::Gfur),
            "gftr" | "om" => Ok(Pattern::Gftr),
            _ => Err(Error::SpecInvalid(format!("unknown pattern `{s}`"))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Variant {
    SmjUm,
    SmjOm,
    PhjUm,
    PhjOm,
}

impl Variant {
    pub const ALL: [Variant; 4] = [Variant::SmjUm, Variant::SmjOm, Variant::PhjUm, Variant::PhjOm];

    pub fn new(algorithm: Algorithm, pattern: Pattern) -> Self {
        match (algorithm, pattern) {
            (Algorithm::Smj, Pattern::Gfur) => Variant::SmjUm,
            (Algorithm::Smj, Pattern::Gftr) => Variant::SmjOm,
            (Algorithm::Phj, Pattern::Gfur) => Variant::PhjUm,
            (Algorithm::Phj, Pattern::Gftr) => Variant::PhjOm,
        }
    }

    pub fn algorithm(self) -> Algorithm {
        match self {
            Variant::SmjUm | Variant::SmjOm => Algorithm::Smj,
            Variant::PhjUm | Variant::PhjOm => Algorithm::Phj,
        }
    }

    pub fn pattern(self) -> Pattern {
        match self {
            Variant::SmjUm | Variant::PhjUm => Pattern::Gfur,
            Variant::SmjOm | Variant::PhjOm => Pattern::Gftr,
        }
    }
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Variant::SmjUm => "SMJ-UM",
            Variant::SmjOm => "SMJ-OM",
            Variant::PhjUm => "PHJ-UM",
            Variant::PhjOm => "PHJ-OM",
        })
    }
}

impl FromStr for Variant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let (a, p) = s
            .split_once(['-', '_'])
            .ok_or_else(|| Error::SpecInvalid(format!("unknown variant `{s}`")))?;
        Ok(Variant::new(a.parse()?, p.parse()?))
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct JoinOptions {
    /// At most 8.
    pub radix_bits_per_pass: u32,
    /// Partitioning bits for hash joins; `None` picks from the build size.
    pub total_radix_bits: Option<u32>,
    pub workers: usize,
    /// Carried for reporting; the engine itself is deterministic.
    pub seed: u64,
    pub sub_partition_limit: usize,
    /// Build keys are unique, enabling single-bound merge search.
    pub pk_fk: bool,
    /// Check build-key uniqueness before a primary-key merge.
    pub validate: bool,
    /// Allocate all input-sized buffers before the timed phases.
    pub prealloc: bool,
    /// Return the match ids alongside the output.
    pub keep_match_ids: bool,
}

impl Default for JoinOptions {
    fn default() -> Self {
        JoinOptions {
            radix_bits_per_pass: MAX_BITS_PER_PASS,
            total_radix_bits: None,
            workers: 1,
            seed: 0,
            sub_partition_limit: DEFAULT_SUB_PARTITION_LIMIT,
            pk_fk: false,
            validate: true,
            prealloc: false,
            keep_match_ids: false,
        }
    }
}

#[derive(Clone, Debug)]
pub struct JoinTask<'a> {
    pub algorithm: Algorithm,
    pub pattern: Pattern,
    pub build: &'a Relation,
    pub probe: &'a Relation,
    pub options: JoinOptions,
}

impl<'a> JoinTask<'a> {
    pub fn new(variant: Variant, build: &'a Relation, probe: &'a Relation) -> Self {
        JoinTask {
            algorithm: variant.algorithm(),
            pattern: variant.pattern(),
            build,
            probe,
            options: JoinOptions::default(),
        }
    }

    pub fn with_options(mut self, options: JoinOptions) -> Self {
        self.options = options;
        self
    }

    pub fn variant(&self) -> Variant {
        Variant::new(self.algorithm, self.pattern)
    }

    /// The radix pass plan this task transforms keys with.
    pub fn key_transform(&self) -> Result<KeyTransform> {
        let o = &self.options;
        if o.radix_bits_per_pass == 0 {
            return Err(Error::SpecInvalid("radix_bits_per_pass must be positive".into()));
        }
        if o.radix_bits_per_pass > MAX_BITS_PER_PASS {
            return Err(Error::FanoutTooLarge {
                bits: o.radix_bits_per_pass,
            });
        }
        let width = self.build.key().kind().bits();
        match self.algorithm {
            Algorithm::Smj => Ok(KeyTransform {
                algorithm: Algorithm::Smj,
                passes: pass_plan(width, o.radix_bits_per_pass),
                total_bits: width,
            }),
            Algorithm::Phj => {
                let total = o
                    .total_radix_bits
                    .unwrap_or_else(|| default_radix_bits(self.build.len()));
                if total > width {
                    return Err(Error::InvalidBitRange {
                        low: 0,
                        high: total,
                        width,
                    });
                }
                Ok(KeyTransform {
                    algorithm: Algorithm::Phj,
                    passes: pass_plan(total, o.radix_bits_per_pass),
                    total_bits: total,
                })
            }
        }
    }
}

/// Wall time and logical memory of one join run.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct PhaseReport {
    pub transform_ns: u64,
    pub find_ns: u64,
    pub materialize_ns: u64,
    /// Sum of the three phases.
    pub total_ns: u64,
    /// Indexed by [`Phase::index`].
    pub phase_peaks: [PeakSnapshot; 3],
    pub overall_peak: PeakSnapshot,
    pub matches: usize,
    /// Mean stride of the build-side gather map; `None` without matches.
    pub clusteredness_r: Option<f64>,
    pub clusteredness_s: Option<f64>,
    /// Partitioning bits used by a hash join.
    pub radix_bits: Option<u32>,
}

impl PhaseReport {
    pub fn peak(&self, phase: Phase) -> PeakSnapshot {
        self.phase_peaks[phase.index()]
    }

    pub fn ns(&self, phase: Phase) -> u64 {
        match phase {
            Phase::Transform => self.transform_ns,
            Phase::Find => self.find_ns,
            Phase::Materialize => self.materialize_ns,
        }
    }
}

#[derive(Clone, Debug)]
pub struct JoinOutput {
    /// Key, then build payloads, then probe payloads.
    pub relation: Relation,
    pub report: PhaseReport,
    pub match_ids: Option<MatchSet>,
}

/// The key transform shared by a join's match finding and its on-demand
/// payload transforms: a full radix sort or a low-bit partitioning.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct KeyTransform {
    algorithm: Algorithm,
    passes: Vec<(u32, u32)>,
    total_bits: u32,
}

impl KeyTransform {
    pub fn sort(kind: ValueKind) -> Self {
        KeyTransform {
            algorithm: Algorithm::Smj,
            passes: pass_plan(kind.bits(), MAX_BITS_PER_PASS),
            total_bits: kind.bits(),
        }
    }

    pub fn partition(total_bits: u32, bits_per_pass: u32) -> Self {
        KeyTransform {
            algorithm: Algorithm::Phj,
            passes: pass_plan(total_bits, bits_per_pass),
            total_bits,
        }
    }

    pub fn algorithm(&self) -> Algorithm {
        self.algorithm
    }

    pub fn passes(&self) -> &[(u32, u32)] {
        &self.passes
    }

    pub fn total_bits(&self) -> u32 {
        self.total_bits
    }

    /// Moves `values` along with `keys`.
    pub fn apply(&self, ctx: &ExecCtx, keys: &Column, values: &Column) -> Result<(Column, Column)> {
        if keys.len() != values.len() {
            return Err(Error::LengthMismatch {
                expected: keys.len(),
                found: values.len(),
            });
        }
        Ok(with_column!(keys, k => {
            let (tk, tv) = with_column!(values, v => {
                let (tk, tv) = transform(ctx, k, v, &self.passes);
                (tk, RadixKey::into_column(tv.into_vec()))
            });
            (RadixKey::into_column(tk.into_vec()), tv)
        }))
    }
}

/// A ledger-tracked column of either width.
enum Buf {
    U32(Tracked<u32>),
    U64(Tracked<u64>),
}

impl From<Tracked<u32>> for Buf {
    fn from(t: Tracked<u32>) -> Self {
        Buf::U32(t)
    }
}

impl From<Tracked<u64>> for Buf {
    fn from(t: Tracked<u64>) -> Self {
        Buf::U64(t)
    }
}

fn transform<K: RadixKey, V: Element>(
    ctx: &ExecCtx,
    keys: &[K],
    values: &[V],
    passes: &[(u32, u32)],
) -> (Tracked<K>, Tracked<V>) {
    let n = keys.len();
    let mut ko = ctx.allocator().alloc::<K>(n, MemCategory::Column);
    let mut vo = ctx.allocator().alloc::<V>(n, MemCategory::Column);
    partition_passes_into(ctx, keys, values, &mut ko, &mut vo, passes);
    (ko, vo)
}

fn gather_typed<T: Element>(ctx: &ExecCtx, input: &[T], ids: &[u32]) -> Vec<T> {
    let mut out = vec![T::default(); ids.len()];
    gather_into(ctx, input, ids, &mut out);
    out
}

fn gather_column(ctx: &ExecCtx, input: &Column, ids: &[u32]) -> Column {
    with_column!(input, v => RadixKey::into_column(gather_typed(ctx, v, ids)))
}

fn gather_buf(ctx: &ExecCtx, input: Buf, ids: &[u32]) -> Column {
    match input {
        Buf::U32(v) => Column::U32(gather_typed(ctx, &v, ids)),
        Buf::U64(v) => Column::U64(gather_typed(ctx, &v, ids)),
    }
}

/// Transforms one payload with the key transform, checks the transformed keys
/// against the layout used for match finding, then gathers and frees.
fn on_demand_gather<K: RadixKey>(
    ctx: &ExecCtx,
    keys: &[K],
    payload: &Column,
    ids: &[u32],
    passes: &[(u32, u32)],
    expected: u64,
    column: String,
) -> Result<Column> {
    with_column!(payload, p => {
        let (tk, tp) = transform(ctx, keys, p, passes);
        if fingerprint(&tk) != expected {
            return Err(Error::TransformMismatch { column });
        }
        drop(tk);
        Ok(RadixKey::into_column(gather_typed(ctx, &tp, ids)))
    })
}

/// Gathers every payload of `r` and `s` from the untransformed relations.
pub fn materialize_gfur(ctx: &ExecCtx, matches: &MatchSet, r: &Relation, s: &Relation) -> Result<Relation> {
    if matches.id_semantics != TupleIdSemantics::Physical {
        return Err(Error::KindError("untransformed gathers need physical ids".into()));
    }
    let mut payloads = Vec::with_capacity(r.payloads().len() + s.payloads().len());
    for p in r.payloads() {
        payloads.push(gather(ctx, p, &matches.ids_r)?);
    }
    for p in s.payloads() {
        payloads.push(gather(ctx, p, &matches.ids_s)?);
    }
    Relation::new(output_name(r, s), matches.keys.clone(), payloads)
}

/// Transformed state produced by a join's transform phase.
#[derive(Clone, Copy, Debug)]
pub struct TransformedInputs<'a> {
    pub transform: &'a KeyTransform,
    pub r_keys: &'a Column,
    pub s_keys: &'a Column,
    pub r_first: Option<&'a Column>,
    pub s_first: Option<&'a Column>,
}

/// Gathers the already transformed first payloads, then transforms and
/// gathers every further payload one column at a time.
pub fn materialize_gftr(
    ctx: &ExecCtx,
    matches: &MatchSet,
    r: &Relation,
    s: &Relation,
    transformed: &TransformedInputs<'_>,
) -> Result<Relation> {
    if matches.id_semantics != TupleIdSemantics::Virtual {
        return Err(Error::KindError("transformed gathers need virtual ids".into()));
    }
    let sides = [
        (r, transformed.r_keys, transformed.r_first, &matches.ids_r),
        (s, transformed.s_keys, transformed.s_first, &matches.ids_s),
    ];
    let mut firsts = Vec::new();
    for (rel, tkeys, first, ids) in sides {
        if tkeys.len() != rel.len() {
            return Err(Error::LengthMismatch {
                expected: rel.len(),
                found: tkeys.len(),
            });
        }
        match (rel.payloads().is_empty(), first) {
            (true, _) => firsts.push(None),
            (false, Some(c)) => firsts.push(Some(gather(ctx, c, ids)?)),
            (false, None) => {
                return Err(Error::TransformMismatch {
                    column: format!("{}.p0", rel.name()),
                })
            }
        }
    }
    let mut payloads = Vec::new();
    for ((rel, tkeys, _, ids), first) in sides.into_iter().zip(firsts) {
        payloads.extend(first);
        let expected = with_column!(tkeys, k => fingerprint(k));
        if let Some(&bad) = ids.iter().find(|&&id| id as usize >= rel.len()) {
            return Err(Error::IndexOutOfBounds {
                index: bad as usize,
                len: rel.len(),
            });
        }
        for (i, p) in rel.payloads().iter().enumerate().skip(1) {
            let column = format!("{}.p{i}", rel.name());
            payloads.push(with_column!(rel.key(), k => {
                on_demand_gather(ctx, k, p, ids, transformed.transform.passes(), expected, column)?
            }));
        }
    }
    Relation::new(output_name(r, s), matches.keys.clone(), payloads)
}

fn output_name(r: &Relation, s: &Relation) -> String {
    format!("{}_{}", r.name(), s.name())
}

/// Runs one join with a fresh ledger.
pub fn run_join(task: &JoinTask<'_>) -> Result<JoinOutput> {
    run_join_with(task, Arc::new(Allocator::new(Arc::new(MemLedger::new()))))
}

/// Runs one join charging `alloc`, whose ledger must not have entered any
/// phase yet.
pub fn run_join_with(task: &JoinTask<'_>, alloc: Arc<Allocator>) -> Result<JoinOutput> {
    let transform = task.key_transform()?;
    let ctx = ExecCtx::with_allocator(task.options.workers, alloc);
    match (task.build.key(), task.probe.key()) {
        (Column::U32(r), Column::U32(s)) => Pipeline { task, ctx, transform }.run(r.as_slice(), s.as_slice()),
        (Column::U64(r), Column::U64(s)) => Pipeline { task, ctx, transform }.run(r.as_slice(), s.as_slice()),
        (r, s) => Err(key_kind_mismatch(r, s)),
    }
}

struct Pipeline<'t, 'a> {
    task: &'t JoinTask<'a>,
    ctx: ExecCtx,
    transform: KeyTransform,
}

/// Per-side transform-phase output.
struct Side<K: Element> {
    keys: Tracked<K>,
    /// Physical ids (GFUR) or the first payload (GFTR).
    carried: Option<Buf>,
    ids: Option<Tracked<u32>>,
    fingerprint: u64,
}

impl Pipeline<'_, '_> {
    fn passes(&self) -> &[(u32, u32)] {
        self.transform.passes()
    }

    fn run<K: RadixKey>(&self, r_keys: &[K], s_keys: &[K]) -> Result<JoinOutput> {
        let task = self.task;
        let (r, s) = (task.build, task.probe);
        let ledger = Arc::clone(self.ctx.ledger());
        if task.options.prealloc {
            self.preallocate::<K>();
        }

        let scope = phase_scope(&ledger, Phase::Transform)?;
        let (r_side, s_side) = match task.pattern {
            Pattern::Gfur => (self.transform_ids(r_keys), self.transform_ids(s_keys)),
            Pattern::Gftr => (self.transform_first(r, r_keys), self.transform_first(s, s_keys)),
        };
        let layouts = (task.algorithm == Algorithm::Phj).then(|| {
            (
                layout_of(&self.ctx, &r_side.keys, self.transform.total_bits()),
                layout_of(&self.ctx, &s_side.keys, self.transform.total_bits()),
            )
        });
        let transform_ns = scope.finish().as_nanos() as u64;

        let scope = phase_scope(&ledger, Phase::Find)?;
        let Side {
            keys: r_tkeys,
            carried: r_carried,
            ids: r_tids,
            fingerprint: r_fp,
        } = r_side;
        let Side {
            keys: s_tkeys,
            carried: s_carried,
            ids: s_tids,
            fingerprint: s_fp,
        } = s_side;
        let (keys, ids_r, ids_s) = match &layouts {
            None => {
                if task.options.validate {
                    validate_inputs(&r_tkeys, &s_tkeys, task.options.pk_fk)?;
                }
                let (keys, mut ids_r, mut ids_s) =
                    merge_matches(&self.ctx, &r_tkeys, &s_tkeys, task.options.pk_fk, self.ctx.workers());
                if let (Some(rt), Some(st)) = (&r_tids, &s_tids) {
                    translate(&mut ids_r, rt);
                    translate(&mut ids_s, st);
                }
                (keys, ids_r, ids_s)
            }
            Some((rl, sl)) => {
                let plan = plan_layouts(rl, sl, task.options.sub_partition_limit)?;
                hash_matches(
                    &self.ctx,
                    &r_tkeys,
                    &s_tkeys,
                    &plan,
                    r_tids.as_deref(),
                    s_tids.as_deref(),
                )?
            }
        };
        drop((r_tkeys, s_tkeys, r_tids, s_tids));
        let find_ns = scope.finish().as_nanos() as u64;

        let scope = phase_scope(&ledger, Phase::Materialize)?;
        let mut payloads = Vec::with_capacity(r.payloads().len() + s.payloads().len());
        match task.pattern {
            Pattern::Gfur => {
                for p in r.payloads() {
                    payloads.push(gather_column(&self.ctx, p, &ids_r));
                }
                for p in s.payloads() {
                    payloads.push(gather_column(&self.ctx, p, &ids_s));
                }
            }
            Pattern::Gftr => {
                // Both transformed first payloads are gathered and freed before
                // any on-demand transform allocates.
                let r_first = r_carried.map(|c| gather_buf(&self.ctx, c, &ids_r));
                let s_first = s_carried.map(|c| gather_buf(&self.ctx, c, &ids_s));
                for (rel, keys, first, ids, fp) in [
                    (r, r_keys, r_first, &ids_r, r_fp),
                    (s, s_keys, s_first, &ids_s, s_fp),
                ] {
                    payloads.extend(first);
                    for (i, p) in rel.payloads().iter().enumerate().skip(1) {
                        let column = format!("{}.p{i}", rel.name());
                        payloads.push(on_demand_gather(&self.ctx, keys, p, ids, self.passes(), fp, column)?);
                    }
                }
            }
        }
        let materialize_ns = scope.finish().as_nanos() as u64;

        let id_semantics = match task.pattern {
            Pattern::Gfur => TupleIdSemantics::Physical,
            Pattern::Gftr => TupleIdSemantics::Virtual,
        };
        let report = PhaseReport {
            transform_ns,
            find_ns,
            materialize_ns,
            total_ns: transform_ns + find_ns + materialize_ns,
            phase_peaks: Phase::ALL.map(|p| ledger.phase_peak(p)),
            overall_peak: ledger.peak(),
            matches: keys.len(),
            clusteredness_r: gather_clusteredness(&ids_r).ok(),
            clusteredness_s: gather_clusteredness(&ids_s).ok(),
            radix_bits: (task.algorithm == Algorithm::Phj).then(|| self.transform.total_bits()),
        };
        let key_column = K::into_column(keys);
        let match_ids = task.options.keep_match_ids.then(|| MatchSet {
            keys: key_column.clone(),
            ids_r: ids_r.to_vec(),
            ids_s: ids_s.to_vec(),
            id_semantics,
        });
        Ok(JoinOutput {
            relation: Relation::new(output_name(r, s), key_column, payloads)?,
            report,
            match_ids,
        })
    }

    /// Initializes physical ids and transforms `(key, id)`; the id column is
    /// freed as soon as its transformed copy exists.
    fn transform_ids<K: RadixKey>(&self, keys: &[K]) -> Side<K> {
        let mut ids = self.ctx.allocator().alloc::<u32>(keys.len(), MemCategory::Column);
        fill_iota(&self.ctx, &mut ids);
        let (tk, tids) = transform(&self.ctx, keys, &ids, self.passes());
        drop(ids);
        Side {
            keys: tk,
            carried: None,
            ids: Some(tids),
            fingerprint: 0,
        }
    }

    /// Transforms the key with the first payload, or the key alone.
    fn transform_first<K: RadixKey>(&self, rel: &Relation, keys: &[K]) -> Side<K> {
        let (tk, carried) = match rel.payload(0) {
            None => {
                let unit = vec![(); keys.len()];
                (transform(&self.ctx, keys, &unit, self.passes()).0, None)
            }
            Some(p) => with_column!(p, v => {
                let (tk, tv) = transform(&self.ctx, keys, v, self.passes());
                (tk, Some(Buf::from(tv)))
            }),
        };
        let fingerprint = if rel.payloads().len() > 1 { fingerprint(&tk) } else { 0 };
        Side {
            keys: tk,
            carried,
            ids: None,
            fingerprint,
        }
    }

    /// Fills the allocator pool with every input-sized buffer the run will
    /// request. Match-id buffers depend on the result size and are not pooled.
    fn preallocate<K: RadixKey>(&self) {
        let alloc = self.ctx.allocator();
        let multi_pass = self.passes().len() > 1;
        let workers = self.ctx.workers();
        let pair = |n: usize, value: Option<ValueKind>| {
            alloc.preallocate::<K>(n, MemCategory::Column);
            if multi_pass {
                alloc.preallocate::<K>(n, MemCategory::Intermediate);
            }
            let value_buf = |cat| match value {
                Some(ValueKind::U32) => alloc.preallocate::<u32>(n, cat),
                Some(ValueKind::U64) => alloc.preallocate::<u64>(n, cat),
                None => alloc.preallocate::<()>(n, cat),
            };
            value_buf(MemCategory::Column);
            if multi_pass {
                value_buf(MemCategory::Intermediate);
            }
            for &(low, high) in self.passes() {
                alloc.preallocate::<usize>(workers << (high - low), MemCategory::Intermediate);
            }
        };
        for rel in [self.task.build, self.task.probe] {
            let n = rel.len();
            match self.task.pattern {
                Pattern::Gfur => {
                    alloc.preallocate::<u32>(n, MemCategory::Column);
                    pair(n, Some(ValueKind::U32));
                }
                Pattern::Gftr => {
                    pair(n, rel.payload(0).map(Column::kind));
                    for p in rel.payloads().iter().skip(1) {
                        pair(n, Some(p.kind()));
                    }
                }
            }
        }
    }
}

/// Rewrites virtual ids into physical ids through the transformed id column.
fn translate(ids: &mut [u32], physical: &[u32]) {
    ids.par_iter_mut().with_min_len(1 << 14).for_each(|id| *id = physical[*id as usize]);
}
