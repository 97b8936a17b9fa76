//! Data-parallel building blocks: stable radix partition, stable pair sort,
//! gather, digit histogram and exclusive prefix sum.
//!
//! Every worker counts digits over its own contiguous chunk; a digit-major,
//! worker-minor exclusive scan then gives each worker private write cursors.
//! Elements of one digit therefore land in input order no matter how many
//! workers run, which is what makes the partition stable and the output
//! independent of the worker count.

use std::ops::Range;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::exec::{ExecCtx, ScatterPtr};
use crate::memory::MemCategory;
use crate::model::{Column, Element, RadixKey};
use crate::with_column;

/// Most radix bits a single partition pass may use (256 partitions).
pub const MAX_BITS_PER_PASS: u32 = 8;

/// Contiguous partition boundaries after a radix partition.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PartitionLayout {
    pub fanout: usize,
    /// `fanout + 1` start offsets; the last one equals the input length.
    pub offsets: Vec<usize>,
    /// Half-open key bit range `[low, high)` that selects the partition.
    pub bit_range: (u32, u32),
}

impl PartitionLayout {
    pub fn from_counts(counts: &[usize], bit_range: (u32, u32)) -> Self {
        PartitionLayout {
            fanout: counts.len(),
            offsets: exclusive_prefix_sum(counts),
            bit_range,
        }
    }

    pub fn partition(&self, p: usize) -> Range<usize> {
        self.offsets[p]..self.offsets[p + 1]
    }

    pub fn rows(&self) -> usize {
        *self.offsets.last().unwrap_or(&0)
    }

    pub fn digit_of(&self, key: u64) -> usize {
        let (low, high) = self.bit_range;
        digit_of(key, low, high)
    }
}

#[inline(always)]
fn digit_of(key: u64, low: u32, high: u32) -> usize {
    let bits = high - low;
    if bits == 0 {
        0
    } else {
        ((key >> low) & ((1u64 << bits) - 1)) as usize
    }
}

pub(crate) fn check_bit_range(width: u32, low: u32, high: u32, per_pass_cap: bool) -> Result<()> {
    if low > high || high > width {
        return Err(Error::InvalidBitRange { low, high, width });
    }
    if per_pass_cap && high - low > MAX_BITS_PER_PASS {
        return Err(Error::FanoutTooLarge { bits: high - low });
    }
    Ok(())
}

fn check_len(expected: usize, found: usize) -> Result<()> {
    if expected != found {
        return Err(Error::LengthMismatch { expected, found });
    }
    Ok(())
}

/// Splits `[0, total_bits)` into consecutive passes of at most `per_pass`
/// bits, least significant first. The final pass may be narrower.
pub fn pass_plan(total_bits: u32, per_pass: u32) -> Vec<(u32, u32)> {
    let per_pass = per_pass.clamp(1, MAX_BITS_PER_PASS);
    let mut passes = Vec::new();
    let mut low = 0;
    while low < total_bits {
        let high = (low + per_pass).min(total_bits);
        passes.push((low, high));
        low = high;
    }
    passes
}

/// Pass plan of a full least-significant-digit sort over `K`.
pub fn sort_plan<K: RadixKey>() -> Vec<(u32, u32)> {
    pass_plan(K::BITS, MAX_BITS_PER_PASS)
}

/// One stable partition pass over bits `[low, high)` with `high - low <= 8`.
/// Returns the `fanout + 1` partition offsets.
pub(crate) fn partition_pass<K: RadixKey, V: Element>(
    ctx: &ExecCtx,
    keys_in: &[K],
    vals_in: &[V],
    keys_out: &mut [K],
    vals_out: &mut [V],
    low: u32,
    high: u32,
) -> Vec<usize> {
    debug_assert!(high - low <= MAX_BITS_PER_PASS);
    let n = keys_in.len();
    debug_assert!(vals_in.len() == n && keys_out.len() == n && vals_out.len() == n);
    let bits = high - low;
    let fanout = 1usize << bits;
    let mask = (fanout - 1) as u64;
    let shift = if bits == 0 { 0 } else { low };

    let chunks = ctx.chunks(n);
    let mut cursors = ctx
        .allocator()
        .alloc::<usize>(chunks.len() * fanout, MemCategory::Intermediate);

    cursors
        .par_chunks_mut(fanout)
        .zip(chunks.par_iter())
        .for_each(|(hist, range)| {
            for &k in &keys_in[range.clone()] {
                hist[k.digit(shift, mask)] += 1;
            }
        });

    let workers = chunks.len();
    let mut offsets = vec![0usize; fanout + 1];
    let mut running = 0usize;
    for (d, offset) in offsets.iter_mut().take(fanout).enumerate() {
        *offset = running;
        for w in 0..workers {
            let slot = &mut cursors[w * fanout + d];
            let count = *slot;
            *slot = running;
            running += count;
        }
    }
    offsets[fanout] = running;

    let key_ptr = ScatterPtr::new(keys_out);
    let val_ptr = ScatterPtr::new(vals_out);
    cursors
        .par_chunks_mut(fanout)
        .zip(chunks.par_iter())
        .for_each(|(cursor, range)| {
            for i in range.clone() {
                let k = keys_in[i];
                let d = k.digit(shift, mask);
                let dst = cursor[d];
                cursor[d] = dst + 1;
                // SAFETY: the prefix scan hands every (worker, digit) pair a
                // private run of destinations inside 0..n.
                unsafe {
                    key_ptr.write(dst, k);
                    val_ptr.write(dst, vals_in[i]);
                }
            }
        });
    offsets
}

pub(crate) fn parallel_copy<T: Element>(ctx: &ExecCtx, src: &[T], dst: &mut [T]) {
    let chunk = src.len().div_ceil(ctx.workers()).max(1);
    dst.par_chunks_mut(chunk)
        .zip(src.par_chunks(chunk))
        .for_each(|(d, s)| d.copy_from_slice(s));
}

/// Applies `passes` in order (least significant first), ping-ponging through
/// scratch buffers so the final pass lands in the output slices.
pub(crate) fn partition_passes_into<K: RadixKey, V: Element>(
    ctx: &ExecCtx,
    keys_in: &[K],
    vals_in: &[V],
    keys_out: &mut [K],
    vals_out: &mut [V],
    passes: &[(u32, u32)],
) {
    let p = passes.len();
    if p == 0 {
        parallel_copy(ctx, keys_in, keys_out);
        parallel_copy(ctx, vals_in, vals_out);
        return;
    }
    let n = keys_in.len();
    let mut scratch = (p > 1).then(|| {
        (
            ctx.allocator().alloc::<K>(n, MemCategory::Intermediate),
            ctx.allocator().alloc::<V>(n, MemCategory::Intermediate),
        )
    });
    for (i, &(low, high)) in passes.iter().enumerate() {
        let to_out = (p - 1 - i).is_multiple_of(2);
        match (i == 0, to_out, scratch.as_mut()) {
            (true, true, _) => {
                partition_pass(ctx, keys_in, vals_in, keys_out, vals_out, low, high);
            }
            (true, false, Some((sk, sv))) => {
                partition_pass(ctx, keys_in, vals_in, sk, sv, low, high);
            }
            (false, true, Some((sk, sv))) => {
                partition_pass(ctx, sk, sv, keys_out, vals_out, low, high);
            }
            (false, false, Some((sk, sv))) => {
                partition_pass(ctx, keys_out, vals_out, sk, sv, low, high);
            }
            _ => unreachable!("multi-pass plans always own scratch"),
        }
    }
}

/// Per-digit counts over an arbitrary bit range (no per-pass cap).
pub(crate) fn digit_counts<K: RadixKey>(ctx: &ExecCtx, keys: &[K], low: u32, high: u32) -> Vec<usize> {
    let bits = high - low;
    let fanout = 1usize << bits;
    let mask = (fanout - 1) as u64;
    let shift = if bits == 0 { 0 } else { low };
    let chunks = ctx.chunks(keys.len());
    let mut partial = ctx
        .allocator()
        .alloc::<usize>(chunks.len() * fanout, MemCategory::Intermediate);
    partial
        .par_chunks_mut(fanout)
        .zip(chunks.par_iter())
        .for_each(|(hist, range)| {
            for &k in &keys[range.clone()] {
                hist[k.digit(shift, mask)] += 1;
            }
        });
    let mut counts = vec![0usize; fanout];
    for hist in partial.chunks(fanout) {
        for (c, h) in counts.iter_mut().zip(hist) {
            *c += h;
        }
    }
    counts
}

pub(crate) fn gather_into<T: Element>(ctx: &ExecCtx, input: &[T], map: &[u32], out: &mut [T]) {
    debug_assert_eq!(map.len(), out.len());
    let chunk = map.len().div_ceil(ctx.workers()).max(1);
    out.par_chunks_mut(chunk)
        .zip(map.par_chunks(chunk))
        .for_each(|(o, m)| {
            for (dst, &idx) in o.iter_mut().zip(m) {
                *dst = input[idx as usize];
            }
        });
}

pub(crate) fn fill_iota(ctx: &ExecCtx, out: &mut [u32]) {
    let chunk = out.len().div_ceil(ctx.workers()).max(1);
    out.par_chunks_mut(chunk).enumerate().for_each(|(c, o)| {
        let base = c * chunk;
        for (i, v) in o.iter_mut().enumerate() {
            *v = (base + i) as u32;
        }
    });
}

/// Position-sensitive digest of a key sequence, independent of worker count.
pub(crate) fn fingerprint<K: RadixKey>(keys: &[K]) -> u64 {
    const BLOCK: usize = 1 << 16;
    let parts: Vec<u64> = keys
        .par_chunks(BLOCK)
        .map(|block| {
            block.iter().fold(0x243F_6A88_85A3_08D3u64, |h, &k| {
                (h ^ k.to_u64()).wrapping_mul(0x0000_0100_0000_01B3).rotate_left(29)
            })
        })
        .collect();
    parts.iter().fold(keys.len() as u64, |h, &p| {
        (h.rotate_left(17) ^ p).wrapping_mul(0x9E37_79B9_7F4A_7C15)
    })
}

/// Stable partition of `(keys, values)` by key bits `[low_bit, high_bit)`.
pub fn radix_partition(
    ctx: &ExecCtx,
    keys: &Column,
    values: &Column,
    low_bit: u32,
    high_bit: u32,
) -> Result<(Column, Column, PartitionLayout)> {
    check_len(keys.len(), values.len())?;
    check_bit_range(keys.kind().bits(), low_bit, high_bit, true)?;
    with_column!(keys, k => with_column!(values, v => {
        let (ko, vo, offsets) = partition_typed(ctx, k, v, low_bit, high_bit);
        let layout = PartitionLayout {
            fanout: offsets.len() - 1,
            offsets,
            bit_range: (low_bit, high_bit),
        };
        Ok((RadixKey::into_column(ko), RadixKey::into_column(vo), layout))
    }))
}

fn partition_typed<K: RadixKey, V: RadixKey>(
    ctx: &ExecCtx,
    keys: &[K],
    values: &[V],
    low: u32,
    high: u32,
) -> (Vec<K>, Vec<V>, Vec<usize>) {
    let n = keys.len();
    let mut ko = vec![K::default(); n];
    let mut vo = vec![V::default(); n];
    let offsets = partition_pass(ctx, keys, values, &mut ko, &mut vo, low, high);
    (ko, vo, offsets)
}

/// Stable ascending sort of `(keys, values)` by key: a least-significant-digit
/// radix sort built from 8-bit partition passes.
pub fn sort_pairs(ctx: &ExecCtx, keys: &Column, values: &Column) -> Result<(Column, Column)> {
    check_len(keys.len(), values.len())?;
    with_column!(keys, k => with_column!(values, v => {
        let (ko, vo) = sort_typed(ctx, k, v);
        Ok((RadixKey::into_column(ko), RadixKey::into_column(vo)))
    }))
}

fn sort_typed<K: RadixKey, V: Element>(ctx: &ExecCtx, keys: &[K], values: &[V]) -> (Vec<K>, Vec<V>) {
    let n = keys.len();
    let mut ko = vec![K::default(); n];
    let mut vo = vec![V::default(); n];
    partition_passes_into(ctx, keys, values, &mut ko, &mut vo, &sort_plan::<K>());
    (ko, vo)
}

/// `out[i] = input[map[i]]`.
pub fn gather(ctx: &ExecCtx, input: &Column, map: &[u32]) -> Result<Column> {
    if let Some(&bad) = map.iter().find(|&&i| i as usize >= input.len()) {
        return Err(Error::IndexOutOfBounds {
            index: bad as usize,
            len: input.len(),
        });
    }
    Ok(with_column!(input, v => {
        let mut out = vec![Default::default(); map.len()];
        gather_into(ctx, v, map, &mut out);
        RadixKey::into_column(out)
    }))
}

/// Number of keys per radix digit of bits `[low_bit, high_bit)`.
pub fn histogram(ctx: &ExecCtx, keys: &Column, low_bit: u32, high_bit: u32) -> Result<Vec<usize>> {
    check_bit_range(keys.kind().bits(), low_bit, high_bit, true)?;
    Ok(with_column!(keys, k => digit_counts(ctx, k, low_bit, high_bit)))
}

/// `out[0] = 0`, `out[i] = out[i-1] + counts[i-1]`; the total is appended.
pub fn exclusive_prefix_sum(counts: &[usize]) -> Vec<usize> {
    let mut out = Vec::with_capacity(counts.len() + 1);
    let mut running = 0usize;
    out.push(0);
    for &c in counts {
        running += c;
        out.push(running);
    }
    out
}

/// Mean absolute stride between consecutive map entries. A fully clustered
/// ascending (or descending) map scores 1.0; a single entry scores 1.0.
pub fn gather_clusteredness(map: &[u32]) -> Result<f64> {
    match map.len() {
        0 => Err(Error::EmptyInput),
        1 => Ok(1.0),
        n => {
            let sum: u64 = map
                .windows(2)
                .map(|w| (w[1] as i64 - w[0] as i64).unsigned_abs())
                .sum();
            Ok(sum as f64 / (n - 1) as f64)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    /// Single-threaded stable counting sort by one digit.
    fn reference_partition(keys: &[u64], values: &[u64], low: u32, high: u32) -> (Vec<u64>, Vec<u64>, Vec<usize>) {
        let fanout = 1usize << (high - low);
        let mut buckets: Vec<Vec<(u64, u64)>> = vec![Vec::new(); fanout];
        for (&k, &v) in keys.iter().zip(values) {
            buckets[digit_of(k, low, high)].push((k, v));
        }
        let mut offsets = vec![0];
        for b in &buckets {
            offsets.push(offsets.last().unwrap() + b.len());
        }
        let flat: Vec<(u64, u64)> = buckets.into_iter().flatten().collect();
        (
            flat.iter().map(|p| p.0).collect(),
            flat.iter().map(|p| p.1).collect(),
            offsets,
        )
    }

    fn lcg(seed: u64, n: usize) -> Vec<u64> {
        let mut x = seed;
        (0..n)
            .map(|_| {
                x = x.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
                x >> 16
            })
            .collect()
    }

    #[test]
    fn partition_parity_example() {
        let ctx = ExecCtx::new(2);
        let keys = Column::U32(vec![5, 2, 7, 0]);
        let vals = Column::U32(vec![0xa, 0xb, 0xc, 0xd]);
        let (k, v, layout) = radix_partition(&ctx, &keys, &vals, 0, 1).unwrap();
        assert_eq!(k, Column::U32(vec![2, 0, 5, 7]));
        assert_eq!(v, Column::U32(vec![0xb, 0xd, 0xa, 0xc]));
        assert_eq!(layout.offsets, vec![0, 2, 4]);
        assert_eq!(layout.fanout, 2);
    }

    #[test]
    fn zero_bit_partition_is_identity() {
        let ctx = ExecCtx::new(3);
        let keys = Column::U32(vec![3, 1, 2]);
        let vals = Column::U32(vec![7, 8, 9]);
        let (k, v, layout) = radix_partition(&ctx, &keys, &vals, 0, 0).unwrap();
        assert_eq!(k, keys);
        assert_eq!(v, vals);
        assert_eq!(layout.offsets, vec![0, 3]);
    }

    #[test]
    fn zero_bit_partition_at_top_of_wide_key() {
        let ctx = ExecCtx::new(1);
        let keys = Column::U64(vec![u64::MAX, 0]);
        let (k, _, _) = radix_partition(&ctx, &keys, &keys, 64, 64).unwrap();
        assert_eq!(k, keys);
    }

    #[test]
    fn partition_matches_reference_for_all_worker_counts() {
        let raw = lcg(42, 100_000);
        let keys: Vec<u32> = raw.iter().map(|&x| x as u32).collect();
        let vals: Vec<u32> = (0..keys.len() as u32).collect();
        let wide_k: Vec<u64> = keys.iter().map(|&k| k as u64).collect();
        let wide_v: Vec<u64> = vals.iter().map(|&v| v as u64).collect();
        let (rk, rv, ro) = reference_partition(&wide_k, &wide_v, 0, 8);
        for workers in [1, 4, 16] {
            let ctx = ExecCtx::new(workers);
            let (k, v, layout) =
                radix_partition(&ctx, &Column::U32(keys.clone()), &Column::U32(vals.clone()), 0, 8).unwrap();
            assert_eq!(k.to_u64_vec(), rk);
            assert_eq!(v.to_u64_vec(), rv);
            assert_eq!(layout.offsets, ro);
        }
    }

    #[test]
    fn rejects_wide_fanout_and_bad_lengths() {
        let ctx = ExecCtx::new(1);
        let keys = Column::U32(vec![1, 2]);
        assert!(matches!(
            radix_partition(&ctx, &keys, &keys, 0, 9),
            Err(Error::FanoutTooLarge { bits: 9 })
        ));
        assert!(matches!(
            radix_partition(&ctx, &keys, &Column::U32(vec![1]), 0, 4),
            Err(Error::LengthMismatch { .. })
        ));
        assert!(matches!(
            radix_partition(&ctx, &keys, &keys, 30, 34),
            Err(Error::InvalidBitRange { .. })
        ));
        assert!(matches!(
            histogram(&ctx, &keys, 0, 12),
            Err(Error::FanoutTooLarge { bits: 12 })
        ));
    }

    #[test]
    fn sort_pairs_example() {
        let ctx = ExecCtx::new(2);
        let (k, v) = sort_pairs(
            &ctx,
            &Column::U32(vec![3, 1, 3, 0]),
            &Column::U32(vec![0xa, 0xb, 0xc, 0xd]),
        )
        .unwrap();
        assert_eq!(k, Column::U32(vec![0, 1, 3, 3]));
        assert_eq!(v, Column::U32(vec![0xd, 0xb, 0xa, 0xc]));
    }

    #[test]
    fn sort_pairs_sorted_input_unchanged() {
        let ctx = ExecCtx::new(4);
        let keys = Column::U32((0..1000).collect());
        let vals = Column::U32((0..1000).rev().collect());
        let (k, v) = sort_pairs(&ctx, &keys, &vals).unwrap();
        assert_eq!(k, keys);
        assert_eq!(v, vals);
    }

    #[test]
    fn sort_pairs_wide_keys_match_reference_stable_sort() {
        let keys = lcg(7, 100_000);
        // narrow the domain so duplicates are common
        let keys: Vec<u64> = keys.iter().map(|&k| k.rotate_left(40) % 50_000).collect();
        let vals: Vec<u64> = (0..keys.len() as u64).collect();
        let mut reference: Vec<(u64, u64)> = keys.iter().copied().zip(vals.iter().copied()).collect();
        reference.sort_by_key(|p| p.0);
        let mut outputs = Vec::new();
        for workers in [1, 4, 16] {
            let ctx = ExecCtx::new(workers);
            let (k, v) = sort_pairs(&ctx, &Column::U64(keys.clone()), &Column::U64(vals.clone())).unwrap();
            let got: Vec<(u64, u64)> = k.to_u64_vec().into_iter().zip(v.to_u64_vec()).collect();
            assert_eq!(got, reference);
            outputs.push((k, v));
        }
        assert!(outputs.windows(2).all(|w| w[0] == w[1]));
    }

    #[test]
    fn sort_scratch_is_charged_and_released() {
        let ctx = ExecCtx::new(2);
        let n = 1000;
        let keys: Vec<u32> = (0..n as u32).rev().collect();
        let vals: Vec<u32> = (0..n as u32).collect();
        let (_k, _v) = sort_typed(&ctx, &keys, &vals);
        let peak = ctx.ledger().peak();
        // ping-pong pair plus per-worker histograms
        assert_eq!(peak.intermediate, (n * 8 + 2 * 256 * 8) as u64);
        assert_eq!(ctx.ledger().live_bytes(), 0);
    }

    #[test]
    fn gather_examples() {
        let ctx = ExecCtx::new(2);
        let input = Column::U32(vec![10, 20, 30]);
        assert_eq!(gather(&ctx, &input, &[2, 0, 1]).unwrap(), Column::U32(vec![30, 10, 20]));
        assert_eq!(gather(&ctx, &input, &[0, 1, 2]).unwrap(), input);
        assert!(matches!(
            gather(&ctx, &input, &[3]),
            Err(Error::IndexOutOfBounds { index: 3, len: 3 })
        ));
        assert!(gather(&ctx, &input, &[]).unwrap().is_empty());
    }

    #[test]
    fn gather_matches_scalar_loop() {
        let input: Vec<u64> = lcg(3, 10_000);
        let map: Vec<u32> = lcg(4, 10_000).iter().map(|&x| (x % 10_000) as u32).collect();
        let expected: Vec<u64> = map.iter().map(|&i| input[i as usize]).collect();
        for workers in [1, 3, 8] {
            let ctx = ExecCtx::new(workers);
            assert_eq!(
                gather(&ctx, &Column::U64(input.clone()), &map).unwrap(),
                Column::U64(expected.clone())
            );
        }
    }

    #[test]
    fn histogram_examples() {
        let ctx = ExecCtx::new(2);
        assert_eq!(histogram(&ctx, &Column::U32(vec![5, 2, 7, 0]), 0, 1).unwrap(), vec![2, 2]);
        assert_eq!(histogram(&ctx, &Column::U32(vec![]), 0, 3).unwrap(), vec![0; 8]);
        let keys = Column::U32(lcg(9, 5000).iter().map(|&x| x as u32).collect());
        assert_eq!(histogram(&ctx, &keys, 3, 11).unwrap().iter().sum::<usize>(), 5000);
    }

    #[test]
    fn prefix_sum_examples() {
        assert_eq!(exclusive_prefix_sum(&[2, 2]), vec![0, 2, 4]);
        assert_eq!(exclusive_prefix_sum(&[]), vec![0]);
        let counts = [3usize, 0, 9, 1];
        assert_eq!(*exclusive_prefix_sum(&counts).last().unwrap(), 13);
    }

    #[test]
    fn clusteredness_examples() {
        assert_eq!(gather_clusteredness(&[0, 1, 2, 3]).unwrap(), 1.0);
        assert_eq!(gather_clusteredness(&[3, 0, 2, 1]).unwrap(), 2.0);
        let rev: Vec<u32> = (0..100).rev().collect();
        assert_eq!(gather_clusteredness(&rev).unwrap(), 1.0);
        assert!(matches!(gather_clusteredness(&[]), Err(Error::EmptyInput)));
    }

    #[test]
    fn pass_plan_handles_remainders() {
        assert_eq!(pass_plan(16, 8), vec![(0, 8), (8, 16)]);
        assert_eq!(pass_plan(15, 8), vec![(0, 8), (8, 15)]);
        assert_eq!(pass_plan(0, 8), vec![]);
        assert_eq!(pass_plan(5, 2), vec![(0, 2), (2, 4), (4, 5)]);
        assert_eq!(sort_plan::<u32>().len(), 4);
        assert_eq!(sort_plan::<u64>().len(), 8);
    }

    #[test]
    fn fingerprint_is_order_sensitive() {
        let a: Vec<u32> = (0..100_000).collect();
        let mut b = a.clone();
        b.swap(10, 70_000);
        assert_ne!(fingerprint(&a), fingerprint(&b));
        assert_eq!(fingerprint(&a), fingerprint(&a.clone()));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn partition_is_stable_permutation(
            keys in prop::collection::vec(0u32..64, 0..600),
            low in 0u32..4,
            width in 0u32..5,
            workers in 1usize..9,
        ) {
            let high = low + width;
            let ctx = ExecCtx::new(workers);
            let tags: Vec<u32> = (0..keys.len() as u32).collect();
            let (k, v, layout) = radix_partition(
                &ctx, &Column::U32(keys.clone()), &Column::U32(tags), low, high).unwrap();
            let (k, v) = (k.to_u64_vec(), v.to_u64_vec());
            // permutation carried by tags
            let mut seen = v.clone();
            seen.sort_unstable();
            prop_assert_eq!(seen, (0..keys.len() as u64).collect::<Vec<_>>());
            for (i, &tag) in v.iter().enumerate() {
                prop_assert_eq!(k[i], keys[tag as usize] as u64);
            }
            for p in 0..layout.fanout {
                let range = layout.partition(p);
                for i in range.clone() {
                    prop_assert_eq!(digit_of(k[i], low, high), p);
                }
                for i in range.start + 1..range.end {
                    prop_assert!(v[i - 1] < v[i]);
                }
            }
        }

        #[test]
        fn successive_partitions_equal_sort(
            keys in prop::collection::vec(0u32..(1 << 20), 0..400),
            workers in 1usize..6,
        ) {
            let ctx = ExecCtx::new(workers);
            let tags = Column::U32((0..keys.len() as u32).collect());
            let mut k = Column::U32(keys.clone());
            let mut v = tags.clone();
            for (low, high) in sort_plan::<u32>() {
                let (nk, nv, _) = radix_partition(&ctx, &k, &v, low, high).unwrap();
                k = nk;
                v = nv;
            }
            let (sk, sv) = sort_pairs(&ctx, &Column::U32(keys.clone()), &tags).unwrap();
            prop_assert_eq!(&k, &sk);
            prop_assert_eq!(&v, &sv);
            let mut brute: Vec<(u32, u32)> = keys.iter().copied().zip(0..).collect();
            brute.sort_by_key(|p| p.0);
            let got: Vec<(u32, u32)> = sk.to_u64_vec().iter().zip(sv.to_u64_vec())
                .map(|(&a, b)| (a as u32, b as u32)).collect();
            prop_assert_eq!(got, brute);
        }
    }
}
