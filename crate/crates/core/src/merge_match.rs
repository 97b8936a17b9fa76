//! Merge Path match finding over two ascending key columns.
//!
//! The merged order takes the build element first on ties, so when a probe
//! key `s[j]` is reached on the path the build cursor sits exactly at the
//! upper bound of `s[j]` in the build side. Primary-key joins need nothing
//! more; general joins add one lower-bound search per distinct probe key.

use std::ops::Range;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::exec::{split_lengths, ExecCtx};
use crate::memory::{MemCategory, Tracked};
use crate::model::{Column, MatchSet, RadixKey, TupleIdSemantics};
use crate::primitives::exclusive_prefix_sum;

/// Per-part `(build range, probe range)` pairs along the merge path.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MergePathSplit {
    pub parts: Vec<(Range<usize>, Range<usize>)>,
}

impl MergePathSplit {
    pub fn work(&self) -> Vec<usize> {
        self.parts.iter().map(|(r, s)| r.len() + s.len()).collect()
    }
}

/// Build elements among the first `diagonal` merged outputs.
fn diagonal_split<K: RadixKey>(r: &[K], s: &[K], diagonal: usize) -> usize {
    let mut lo = diagonal.saturating_sub(s.len());
    let mut hi = diagonal.min(r.len());
    while lo < hi {
        let mid = lo + (hi - lo) / 2;
        if r[mid] <= s[diagonal - mid - 1] {
            lo = mid + 1;
        } else {
            hi = mid;
        }
    }
    lo
}

pub(crate) fn split_typed<K: RadixKey>(r: &[K], s: &[K], parts: usize) -> MergePathSplit {
    let parts = parts.max(1);
    let total = r.len() + s.len();
    let points: Vec<(usize, usize)> = (0..=parts)
        .map(|p| {
            let d = p * total / parts;
            let i = diagonal_split(r, s, d);
            (i, d - i)
        })
        .collect();
    MergePathSplit {
        parts: points
            .windows(2)
            .map(|w| (w[0].0..w[1].0, w[0].1..w[1].1))
            .collect(),
    }
}

fn first_unsorted<K: RadixKey>(keys: &[K]) -> Option<usize> {
    keys.windows(2).position(|w| w[0] > w[1]).map(|p| p + 1)
}

pub(crate) fn validate_inputs<K: RadixKey>(r: &[K], s: &[K], pk_fk: bool) -> Result<()> {
    if let Some(position) = first_unsorted(r) {
        return Err(Error::NotSorted { side: "build", position });
    }
    if let Some(position) = first_unsorted(s) {
        return Err(Error::NotSorted { side: "probe", position });
    }
    if pk_fk {
        if let Some(p) = r.windows(2).position(|w| w[0] == w[1]) {
            return Err(Error::DuplicateBuildKeys { position: p + 1 });
        }
    }
    Ok(())
}

/// Walks one merge-path part and reports `(probe index, build match range)`
/// for every probe key that has at least one match.
#[inline]
fn walk_part<K: RadixKey>(
    r: &[K],
    s: &[K],
    r_range: &Range<usize>,
    s_range: &Range<usize>,
    pk_fk: bool,
    mut emit: impl FnMut(usize, Range<usize>),
) {
    let mut i = r_range.start;
    let mut cached: Option<(K, usize)> = None;
    for j in s_range.clone() {
        let key = s[j];
        while i < r_range.end && r[i] <= key {
            i += 1;
        }
        let upper = i;
        if pk_fk {
            if upper > 0 && r[upper - 1] == key {
                emit(j, upper - 1..upper);
            }
            continue;
        }
        let lower = match cached {
            Some((k, lb)) if k == key => lb,
            _ => {
                let lb = r[..upper].partition_point(|&x| x < key);
                cached = Some((key, lb));
                lb
            }
        };
        if lower < upper {
            emit(j, lower..upper);
        }
    }
}

/// Count-then-fill match finding. Returns matched keys (untracked, they go
/// straight into the output relation) and ledger-tracked virtual ids.
pub(crate) fn merge_matches<K: RadixKey>(
    ctx: &ExecCtx,
    r: &[K],
    s: &[K],
    pk_fk: bool,
    parts: usize,
) -> (Vec<K>, Tracked<u32>, Tracked<u32>) {
    let split = split_typed(r, s, parts);
    let count_charge = ctx
        .ledger()
        .charge((split.parts.len() * std::mem::size_of::<usize>()) as u64, MemCategory::Intermediate);
    let counts: Vec<usize> = split
        .parts
        .par_iter()
        .map(|(rr, sr)| {
            let mut c = 0;
            walk_part(r, s, rr, sr, pk_fk, |_, m| c += m.len());
            c
        })
        .collect();
    let offsets = exclusive_prefix_sum(&counts);
    let total = *offsets.last().unwrap();

    let mut keys = vec![K::default(); total];
    let mut ids_r = ctx.allocator().alloc::<u32>(total, MemCategory::Column);
    let mut ids_s = ctx.allocator().alloc::<u32>(total, MemCategory::Column);

    let key_parts = split_lengths(&mut keys, &counts);
    let r_parts = split_lengths(&mut ids_r, &counts);
    let s_parts = split_lengths(&mut ids_s, &counts);
    split
        .parts
        .par_iter()
        .zip(key_parts)
        .zip(r_parts)
        .zip(s_parts)
        .for_each(|((((rr, sr), ko), ro), so)| {
            let mut o = 0;
            walk_part(r, s, rr, sr, pk_fk, |j, matches| {
                for i in matches {
                    ko[o] = s[j];
                    ro[o] = i as u32;
                    so[o] = j as u32;
                    o += 1;
                }
            });
            debug_assert_eq!(o, ko.len());
        });
    drop(count_charge);
    (keys, ids_r, ids_s)
}

/// Merge Path split of two sorted columns into `parts` balanced pieces.
pub fn merge_path_split(r_keys: &Column, s_keys: &Column, parts: usize, validate: bool) -> Result<MergePathSplit> {
    match (r_keys, s_keys) {
        (Column::U32(r), Column::U32(s)) => {
            if validate {
                validate_inputs(r, s, false)?;
            }
            Ok(split_typed(r, s, parts))
        }
        (Column::U64(r), Column::U64(s)) => {
            if validate {
                validate_inputs(r, s, false)?;
            }
            Ok(split_typed(r, s, parts))
        }
        _ => Err(key_kind_mismatch(r_keys, s_keys)),
    }
}

pub(crate) fn key_kind_mismatch(r: &Column, s: &Column) -> Error {
    Error::KindError(format!(
        "join keys must share a kind, build is {} and probe is {}",
        r.kind(),
        s.kind()
    ))
}

/// All `(i, j)` with `r_keys[i] == s_keys[j]`, as virtual ids into the sorted
/// inputs, emitted in (probe position, build position) order.
pub fn merge_find_matches(
    ctx: &ExecCtx,
    r_keys: &Column,
    s_keys: &Column,
    pk_fk: bool,
    parts: usize,
    validate: bool,
) -> Result<MatchSet> {
    fn run<K: RadixKey>(ctx: &ExecCtx, r: &[K], s: &[K], pk_fk: bool, parts: usize, validate: bool) -> Result<MatchSet> {
        if validate {
            validate_inputs(r, s, pk_fk)?;
        }
        let (keys, ids_r, ids_s) = merge_matches(ctx, r, s, pk_fk, parts);
        Ok(MatchSet {
            keys: K::into_column(keys),
            ids_r: ids_r.into_vec(),
            ids_s: ids_s.into_vec(),
            id_semantics: TupleIdSemantics::Virtual,
        })
    }
    match (r_keys, s_keys) {
        (Column::U32(r), Column::U32(s)) => run(ctx, r, s, pk_fk, parts, validate),
        (Column::U64(r), Column::U64(s)) => run(ctx, r, s, pk_fk, parts, validate),
        _ => Err(key_kind_mismatch(r_keys, s_keys)),
    }
}
