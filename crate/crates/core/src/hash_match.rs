//! Partitioned hash-join match finding over contiguous co-partitions.
//!
//! Both inputs are radix partitioned on the low key bits into contiguous
//! arrays, so partition `p` of the build side only meets partition `p` of the
//! probe side. Each work unit builds a small open-addressing table over one
//! bounded build chunk and streams the co-partition's probe keys through it.

use std::ops::Range;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::exec::{split_even, split_lengths, ExecCtx};
use crate::memory::{MemCategory, Tracked};
use crate::merge_match::key_kind_mismatch;
use crate::model::{Column, MatchSet, RadixKey, TupleIdSemantics};
use crate::primitives::{
    check_bit_range, digit_counts, exclusive_prefix_sum, partition_passes_into, pass_plan,
    PartitionLayout,
};
use crate::with_column;

/// Default bound on build keys per work unit.
pub const DEFAULT_SUB_PARTITION_LIMIT: usize = 4096;

const EMPTY: u32 = u32::MAX;

/// Radix bits used to partition a build side of `build_rows` rows.
pub fn default_radix_bits(build_rows: usize) -> u32 {
    if build_rows > 1 << 20 {
        return 16;
    }
    if build_rows <= 1024 {
        return 0;
    }
    ((build_rows as f64 / 1024.0).log2().ceil() as u32).min(16)
}

/// A relation partitioned into contiguous digit-homogeneous runs.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PartitionedRelationView {
    pub keys: Column,
    pub layout: PartitionLayout,
    /// Physical ids (unoptimized pattern) or the first payload (optimized).
    pub carried: Option<Column>,
}

/// One block of the block-nested-loop structure: a bounded build chunk and
/// the full probe side of its co-partition.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct WorkUnit {
    pub partition: usize,
    pub build: Range<usize>,
    pub probe: Range<usize>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SubPartitionPlan {
    pub limit: usize,
    /// Ordered by (partition, build chunk). Co-partitions with an empty side
    /// cannot match and get no unit.
    pub units: Vec<WorkUnit>,
}

impl SubPartitionPlan {
    pub fn max_build_chunk(&self) -> usize {
        self.units.iter().map(|u| u.build.len()).max().unwrap_or(0)
    }
}

pub(crate) fn plan_layouts(build: &PartitionLayout, probe: &PartitionLayout, limit: usize) -> Result<SubPartitionPlan> {
    if build.fanout != probe.fanout {
        return Err(Error::FanoutMismatch {
            build: build.fanout,
            probe: probe.fanout,
        });
    }
    let limit = limit.max(1);
    let mut units = Vec::new();
    for p in 0..build.fanout {
        let b = build.partition(p);
        let pr = probe.partition(p);
        if b.is_empty() || pr.is_empty() {
            continue;
        }
        let mut start = b.start;
        while start < b.end {
            let end = (start + limit).min(b.end);
            units.push(WorkUnit {
                partition: p,
                build: start..end,
                probe: pr.clone(),
            });
            start = end;
        }
    }
    Ok(SubPartitionPlan { limit, units })
}

/// Splits oversized build partitions into chunks of at most `limit` keys.
pub fn plan_subpartitions(
    build: &PartitionedRelationView,
    probe: &PartitionedRelationView,
    limit: usize,
) -> Result<SubPartitionPlan> {
    plan_layouts(&build.layout, &probe.layout, limit)
}

/// Partitions `(keys, carried)` on the low `total_bits` of the key in
/// least-significant-first passes of at most `bits_per_pass` bits, then
/// derives the layout from a histogram and a prefix sum.
pub(crate) fn partition_typed<K: RadixKey, V: crate::model::Element>(
    ctx: &ExecCtx,
    keys: &[K],
    carried: &[V],
    keys_out: &mut [K],
    carried_out: &mut [V],
    total_bits: u32,
    bits_per_pass: u32,
) -> PartitionLayout {
    partition_passes_into(ctx, keys, carried, keys_out, carried_out, &pass_plan(total_bits, bits_per_pass));
    layout_of(ctx, keys_out, total_bits)
}

pub(crate) fn layout_of<K: RadixKey>(ctx: &ExecCtx, partitioned: &[K], total_bits: u32) -> PartitionLayout {
    PartitionLayout::from_counts(&digit_counts(ctx, partitioned, 0, total_bits), (0, total_bits))
}

pub fn partition_relation(
    ctx: &ExecCtx,
    keys: &Column,
    carried: Option<&Column>,
    total_bits: u32,
    bits_per_pass: u32,
) -> Result<PartitionedRelationView> {
    check_bit_range(keys.kind().bits(), 0, total_bits, false)?;
    if bits_per_pass == 0 && total_bits > 0 {
        return Err(Error::InvalidBitRange {
            low: 0,
            high: 0,
            width: keys.kind().bits(),
        });
    }
    if bits_per_pass > crate::primitives::MAX_BITS_PER_PASS {
        return Err(Error::FanoutTooLarge { bits: bits_per_pass });
    }
    if let Some(c) = carried {
        if c.len() != keys.len() {
            return Err(Error::LengthMismatch {
                expected: keys.len(),
                found: c.len(),
            });
        }
    }
    fn run<K: RadixKey>(
        ctx: &ExecCtx,
        keys: &[K],
        carried: Option<&Column>,
        total_bits: u32,
        bits_per_pass: u32,
    ) -> PartitionedRelationView {
        let n = keys.len();
        let mut ko = vec![K::default(); n];
        let (layout, carried) = match carried {
            None => {
                let unit = vec![(); n];
                let mut unit_out = vec![(); n];
                let layout = partition_typed(ctx, keys, &unit, &mut ko, &mut unit_out, total_bits, bits_per_pass);
                (layout, None)
            }
            Some(c) => with_column!(c, v => {
                let mut vo = vec![Default::default(); n];
                let layout = partition_typed(ctx, keys, v, &mut ko, &mut vo, total_bits, bits_per_pass);
                (layout, Some(RadixKey::into_column(vo)))
            }),
        };
        PartitionedRelationView {
            keys: K::into_column(ko),
            layout,
            carried,
        }
    }
    Ok(with_column!(keys, k => run(ctx, k, carried, total_bits, bits_per_pass)))
}

#[inline(always)]
fn slot_of<K: RadixKey>(key: K, log2_capacity: u32) -> usize {
    (key.to_u64().wrapping_mul(0x9E37_79B9_7F4A_7C15) >> (64 - log2_capacity)) as usize
}

/// Open-addressing table with linear probing over one build chunk. Slots hold
/// build positions; duplicates keep insertion order along the probe sequence.
struct ChunkTable<K> {
    keys: Vec<K>,
    positions: Vec<u32>,
    log2_capacity: u32,
}

impl<K: RadixKey> ChunkTable<K> {
    fn with_capacity_for(limit: usize) -> Self {
        let capacity = (2 * limit).next_power_of_two().max(2);
        ChunkTable {
            keys: vec![K::default(); capacity],
            positions: vec![EMPTY; capacity],
            log2_capacity: capacity.trailing_zeros(),
        }
    }

    fn bytes_for(limit: usize) -> usize {
        (2 * limit).next_power_of_two().max(2) * (std::mem::size_of::<K>() + 4)
    }

    fn build(&mut self, keys: &[K], chunk: Range<usize>) -> Result<()> {
        let capacity = (2 * chunk.len()).next_power_of_two().max(2);
        if capacity > self.positions.len() {
            return Err(Error::CapacityExceeded {
                chunk: chunk.len(),
                capacity: self.positions.len() / 2,
            });
        }
        self.log2_capacity = capacity.trailing_zeros();
        self.positions[..capacity].fill(EMPTY);
        let mask = capacity - 1;
        for pos in chunk {
            let k = keys[pos];
            let mut slot = slot_of(k, self.log2_capacity);
            while self.positions[slot] != EMPTY {
                slot = (slot + 1) & mask;
            }
            self.keys[slot] = k;
            self.positions[slot] = pos as u32;
        }
        Ok(())
    }

    #[inline]
    fn probe(&self, key: K, mut emit: impl FnMut(u32)) {
        let mask = (1usize << self.log2_capacity) - 1;
        let mut slot = slot_of(key, self.log2_capacity);
        loop {
            let pos = self.positions[slot];
            if pos == EMPTY {
                return;
            }
            if self.keys[slot] == key {
                emit(pos);
            }
            slot = (slot + 1) & mask;
        }
    }
}

/// Groups consecutive units into one contiguous batch per worker, balanced by
/// build plus probe size.
fn unit_batches(units: &[WorkUnit], workers: usize) -> Vec<Range<usize>> {
    if units.is_empty() {
        return std::iter::once(0..0).collect();
    }
    let cost: Vec<usize> = units.iter().map(|u| u.build.len() + u.probe.len()).collect();
    let total: usize = cost.iter().sum();
    let mut batches = Vec::with_capacity(workers);
    let mut start = 0;
    let mut acc = 0;
    for (i, c) in cost.iter().enumerate() {
        acc += c;
        let target = (batches.len() + 1) * total / workers.max(1);
        if acc >= target && batches.len() + 1 < workers {
            batches.push(start..i + 1);
            start = i + 1;
        }
    }
    batches.push(start..units.len());
    batches
}

/// Count-then-fill hash match finding. Build and probe ids are positions in
/// the partitioned arrays, optionally translated through carried physical ids.
pub(crate) fn hash_matches<K: RadixKey>(
    ctx: &ExecCtx,
    build_keys: &[K],
    probe_keys: &[K],
    plan: &SubPartitionPlan,
    build_ids: Option<&[u32]>,
    probe_ids: Option<&[u32]>,
) -> Result<(Vec<K>, Tracked<u32>, Tracked<u32>)> {
    let batches = unit_batches(&plan.units, ctx.workers());
    let _tables = ctx.ledger().charge(
        (batches.len() * ChunkTable::<K>::bytes_for(plan.limit)) as u64,
        MemCategory::Intermediate,
    );
    let _counts = ctx.ledger().charge(
        (plan.units.len() * std::mem::size_of::<usize>()) as u64,
        MemCategory::Intermediate,
    );

    let counts: Vec<usize> = batches
        .par_iter()
        .map(|batch| -> Result<Vec<usize>> {
            let mut table = ChunkTable::with_capacity_for(plan.limit);
            plan.units[batch.clone()]
                .iter()
                .map(|unit| {
                    table.build(build_keys, unit.build.clone())?;
                    let mut c = 0;
                    for &k in &probe_keys[unit.probe.clone()] {
                        table.probe(k, |_| c += 1);
                    }
                    Ok(c)
                })
                .collect()
        })
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .flatten()
        .collect();

    let offsets = exclusive_prefix_sum(&counts);
    let total = *offsets.last().unwrap();
    let mut keys = vec![K::default(); total];
    let mut ids_r = ctx.allocator().alloc::<u32>(total, MemCategory::Column);
    let mut ids_s = ctx.allocator().alloc::<u32>(total, MemCategory::Column);

    let batch_lens: Vec<usize> = batches
        .iter()
        .map(|b| offsets[b.end] - offsets[b.start])
        .collect();
    let key_parts = split_lengths(&mut keys, &batch_lens);
    let r_parts = split_lengths(&mut ids_r, &batch_lens);
    let s_parts = split_lengths(&mut ids_s, &batch_lens);

    batches
        .par_iter()
        .zip(key_parts)
        .zip(r_parts)
        .zip(s_parts)
        .try_for_each(|(((batch, ko), ro), so)| -> Result<()> {
            let mut table = ChunkTable::with_capacity_for(plan.limit);
            let mut o = 0;
            for unit in &plan.units[batch.clone()] {
                table.build(build_keys, unit.build.clone())?;
                for j in unit.probe.clone() {
                    let k = probe_keys[j];
                    let sid = probe_ids.map_or(j as u32, |ids| ids[j]);
                    table.probe(k, |pos| {
                        ko[o] = k;
                        ro[o] = build_ids.map_or(pos, |ids| ids[pos as usize]);
                        so[o] = sid;
                        o += 1;
                    });
                }
            }
            debug_assert_eq!(o, ko.len());
            Ok(())
        })?;
    Ok((keys, ids_r, ids_s))
}

/// All key matches between two co-partitioned views. With
/// [`TupleIdSemantics::Physical`] the ids are read from each view's carried
/// column, which must then hold 4-byte ids.
pub fn hash_find_matches(
    ctx: &ExecCtx,
    build: &PartitionedRelationView,
    probe: &PartitionedRelationView,
    plan: &SubPartitionPlan,
    id_mode: TupleIdSemantics,
) -> Result<MatchSet> {
    if build.layout.fanout != probe.layout.fanout {
        return Err(Error::FanoutMismatch {
            build: build.layout.fanout,
            probe: probe.layout.fanout,
        });
    }
    let ids = |view: &PartitionedRelationView| -> Result<Option<Vec<u32>>> {
        match id_mode {
            TupleIdSemantics::Virtual => Ok(None),
            TupleIdSemantics::Physical => match view.carried.as_ref() {
                Some(Column::U32(ids)) => Ok(Some(ids.clone())),
                _ => Err(Error::KindError(
                    "physical ids require a carried 4-byte id column".into(),
                )),
            },
        }
    };
    let build_ids = ids(build)?;
    let probe_ids = ids(probe)?;
    fn run<K: RadixKey>(
        ctx: &ExecCtx,
        b: &[K],
        p: &[K],
        plan: &SubPartitionPlan,
        bi: Option<&[u32]>,
        pi: Option<&[u32]>,
        id_mode: TupleIdSemantics,
    ) -> Result<MatchSet> {
        let (keys, ids_r, ids_s) = hash_matches(ctx, b, p, plan, bi, pi)?;
        Ok(MatchSet {
            keys: K::into_column(keys),
            ids_r: ids_r.into_vec(),
            ids_s: ids_s.into_vec(),
            id_semantics: id_mode,
        })
    }
    let (bi, pi) = (build_ids.as_deref(), probe_ids.as_deref());
    match (&build.keys, &probe.keys) {
        (Column::U32(b), Column::U32(p)) => run(ctx, b, p, plan, bi, pi, id_mode),
        (Column::U64(b), Column::U64(p)) => run(ctx, b, p, plan, bi, pi, id_mode),
        (b, p) => Err(key_kind_mismatch(b, p)),
    }
}

/// Convenience split of probe work for callers that want even ranges.
pub fn even_ranges(n: usize, parts: usize) -> Vec<Range<usize>> {
    split_even(n, parts)
}
