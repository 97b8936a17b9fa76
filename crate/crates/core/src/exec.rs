//! Execution context: logical worker count and the allocator that scratch
//! buffers are charged to.
//!
//! Work is always split by the *logical* worker count, never by the number of
//! OS threads that happen to run it, so outputs depend only on the inputs.

use std::ops::Range;
use std::sync::Arc;

use crate::memory::{Allocator, MemLedger};

#[derive(Clone, Debug)]
pub struct ExecCtx {
    workers: usize,
    alloc: Arc<Allocator>,
}

impl ExecCtx {
    /// A context with its own private ledger.
    pub fn new(workers: usize) -> Self {
        Self::with_allocator(workers, Arc::new(Allocator::default()))
    }

    pub fn with_allocator(workers: usize, alloc: Arc<Allocator>) -> Self {
        ExecCtx {
            workers: workers.max(1),
            alloc,
        }
    }

    pub fn workers(&self) -> usize {
        self.workers
    }

    pub fn allocator(&self) -> &Allocator {
        &self.alloc
    }

    pub fn ledger(&self) -> &Arc<MemLedger> {
        self.alloc.ledger()
    }

    /// Splits `0..n` into `workers` contiguous ranges whose sizes differ by at
    /// most one. Trailing ranges may be empty when `n < workers`.
    pub fn chunks(&self, n: usize) -> Vec<Range<usize>> {
        split_even(n, self.workers)
    }
}

impl Default for ExecCtx {
    fn default() -> Self {
        ExecCtx::new(1)
    }
}

pub fn split_even(n: usize, parts: usize) -> Vec<Range<usize>> {
    let parts = parts.max(1);
    (0..parts)
        .map(|p| (p * n / parts)..((p + 1) * n / parts))
        .collect()
}

/// Raw pointer wrapper for scatters where each worker writes a disjoint set of
/// indices computed by an exclusive prefix sum.
#[derive(Clone, Copy)]
pub(crate) struct ScatterPtr<T>(*mut T);

unsafe impl<T: Send> Send for ScatterPtr<T> {}
unsafe impl<T: Send> Sync for ScatterPtr<T> {}

impl<T> ScatterPtr<T> {
    pub(crate) fn new(slice: &mut [T]) -> Self {
        ScatterPtr(slice.as_mut_ptr())
    }

    /// # Safety
    /// `index` must be in bounds of the slice this pointer was created from,
    /// and no other thread may access the same index concurrently.
    #[inline(always)]
    pub(crate) unsafe fn write(self, index: usize, value: T) {
        self.0.add(index).write(value);
    }
}

/// Splits `out` into consecutive sub-slices with the given lengths.
pub(crate) fn split_lengths<'a, T>(mut out: &'a mut [T], lens: &[usize]) -> Vec<&'a mut [T]> {
    let mut parts = Vec::with_capacity(lens.len());
    for &len in lens {
        let (head, tail) = std::mem::take(&mut out).split_at_mut(len);
        parts.push(head);
        out = tail;
    }
    parts
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn even_split_covers_and_balances() {
        for n in [0usize, 1, 5, 16, 1001] {
            for parts in [1usize, 2, 3, 7, 16] {
                let ranges = split_even(n, parts);
                assert_eq!(ranges.len(), parts);
                assert_eq!(ranges.first().unwrap().start, 0);
                assert_eq!(ranges.last().unwrap().end, n);
                for w in ranges.windows(2) {
                    assert_eq!(w[0].end, w[1].start);
                }
                let sizes: Vec<_> = ranges.iter().map(|r| r.len()).collect();
                let (lo, hi) = (sizes.iter().min().unwrap(), sizes.iter().max().unwrap());
                assert!(hi - lo <= 1);
            }
        }
    }

    #[test]
    fn split_lengths_partitions_slice() {
        let mut v: Vec<u32> = (0..10).collect();
        let parts = split_lengths(&mut v, &[3, 0, 7]);
        assert_eq!(parts[0], &[0, 1, 2]);
        assert!(parts[1].is_empty());
        assert_eq!(parts[2].len(), 7);
    }
}
