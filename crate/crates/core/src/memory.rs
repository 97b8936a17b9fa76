//! Logical memory accounting and phase scoping.
//!
//! The ledger counts requested bytes (never allocator-rounded sizes) split into
//! two categories: full-length columns and intermediate scratch (histograms,
//! ping-pong buffers, hash tables). Peaks are recorded per join phase together
//! with the category split at the moment of the peak.

use std::any::Any;
use std::fmt;
use std::ops::{Deref, DerefMut};
use std::sync::{Arc, Mutex, MutexGuard};
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::Element;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Phase {
    Transform,
    Find,
    Materialize,
}

impl Phase {
    pub const ALL: [Phase; 3] = [Phase::Transform, Phase::Find, Phase::Materialize];

    pub fn index(self) -> usize {
        self as usize
    }
}

impl fmt::Display for Phase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Phase::Transform => "transform",
            Phase::Find => "find",
            Phase::Materialize => "materialize",
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum MemCategory {
    Column,
    Intermediate,
}

/// Live bytes at a high-water mark, split by category.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct PeakSnapshot {
    pub total: u64,
    pub columns: u64,
    pub intermediate: u64,
}

#[derive(Default)]
struct LedgerState {
    live_columns: u64,
    live_intermediate: u64,
    peak: PeakSnapshot,
    active: Option<Phase>,
    next_phase: usize,
    phase_peaks: [PeakSnapshot; 3],
}

impl LedgerState {
    fn snapshot(&self) -> PeakSnapshot {
        PeakSnapshot {
            total: self.live_columns + self.live_intermediate,
            columns: self.live_columns,
            intermediate: self.live_intermediate,
        }
    }

    fn observe(&mut self) {
        let now = self.snapshot();
        if now.total > self.peak.total {
            self.peak = now;
        }
        if let Some(phase) = self.active {
            let slot = &mut self.phase_peaks[phase.index()];
            if now.total > slot.total {
                *slot = now;
            }
        }
    }
}

/// Thread-safe logical allocation ledger.
#[derive(Default)]
pub struct MemLedger {
    state: Mutex<LedgerState>,
}

impl fmt::Debug for MemLedger {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = self.lock();
        f.debug_struct("MemLedger")
            .field("live", &s.snapshot())
            .field("peak", &s.peak)
            .finish()
    }
}

impl MemLedger {
    pub fn new() -> Self {
        Self::default()
    }

    fn lock(&self) -> MutexGuard<'_, LedgerState> {
        self.state.lock().unwrap_or_else(|p| p.into_inner())
    }

    pub fn allocate(&self, bytes: u64, category: MemCategory) {
        if bytes == 0 {
            return;
        }
        let mut s = self.lock();
        match category {
            MemCategory::Column => s.live_columns += bytes,
            MemCategory::Intermediate => s.live_intermediate += bytes,
        }
        s.observe();
    }

    pub fn release(&self, bytes: u64, category: MemCategory) {
        if bytes == 0 {
            return;
        }
        let mut s = self.lock();
        let live = match category {
            MemCategory::Column => &mut s.live_columns,
            MemCategory::Intermediate => &mut s.live_intermediate,
        };
        *live = live
            .checked_sub(bytes)
            .expect("ledger release exceeds live bytes");
    }

    pub fn live_bytes(&self) -> u64 {
        self.lock().snapshot().total
    }

    pub fn live(&self) -> PeakSnapshot {
        self.lock().snapshot()
    }

    pub fn peak_bytes(&self) -> u64 {
        self.lock().peak.total
    }

    pub fn peak(&self) -> PeakSnapshot {
        self.lock().peak
    }

    pub fn phase_peak(&self, phase: Phase) -> PeakSnapshot {
        self.lock().phase_peaks[phase.index()]
    }

    pub fn active_phase(&self) -> Option<Phase> {
        self.lock().active
    }

    fn enter(&self, phase: Phase) -> Result<()> {
        let mut s = self.lock();
        let expected = Phase::ALL.get(s.next_phase).copied();
        if s.active.is_some() || expected != Some(phase) {
            return Err(Error::PhaseOrderViolation {
                expected,
                found: phase,
            });
        }
        s.active = Some(phase);
        s.next_phase += 1;
        s.phase_peaks[phase.index()] = s.snapshot();
        Ok(())
    }

    fn leave(&self, phase: Phase) {
        let mut s = self.lock();
        debug_assert_eq!(s.active, Some(phase));
        s.active = None;
    }

    /// Charges `bytes` until the returned guard is dropped.
    pub fn charge(self: &Arc<Self>, bytes: u64, category: MemCategory) -> Charge {
        self.allocate(bytes, category);
        Charge {
            ledger: Arc::clone(self),
            bytes,
            category,
        }
    }
}

/// RAII charge against a [`MemLedger`] for memory not held in a [`Tracked`].
pub struct Charge {
    ledger: Arc<MemLedger>,
    bytes: u64,
    category: MemCategory,
}

impl Drop for Charge {
    fn drop(&mut self) {
        self.ledger.release(self.bytes, self.category);
    }
}

/// A vector whose requested size is charged to a ledger while it lives.
pub struct Tracked<T: Element> {
    buf: Vec<T>,
    charge: Charge,
}

impl<T: Element> Tracked<T> {
    pub fn len(&self) -> usize {
        self.buf.len()
    }

    pub fn is_empty(&self) -> bool {
        self.buf.is_empty()
    }

    pub fn category(&self) -> MemCategory {
        self.charge.category
    }

    /// Moves the contents out; the charge ends here.
    pub fn into_vec(self) -> Vec<T> {
        self.buf
    }
}

impl<T: Element> Deref for Tracked<T> {
    type Target = [T];

    fn deref(&self) -> &[T] {
        &self.buf
    }
}

impl<T: Element> DerefMut for Tracked<T> {
    fn deref_mut(&mut self) -> &mut [T] {
        &mut self.buf
    }
}

impl<T: Element> fmt::Debug for Tracked<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Tracked").field("len", &self.buf.len()).finish()
    }
}

/// Hands out ledger-tracked buffers, optionally from a pool filled before the
/// timed region.
pub struct Allocator {
    ledger: Arc<MemLedger>,
    pool: Mutex<Vec<Box<dyn Any + Send>>>,
}

impl fmt::Debug for Allocator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Allocator")
            .field("ledger", &self.ledger)
            .finish()
    }
}

impl Default for Allocator {
    fn default() -> Self {
        Self::new(Arc::new(MemLedger::new()))
    }
}

impl Allocator {
    pub fn new(ledger: Arc<MemLedger>) -> Self {
        Allocator {
            ledger,
            pool: Mutex::new(Vec::new()),
        }
    }

    pub fn ledger(&self) -> &Arc<MemLedger> {
        &self.ledger
    }

    fn fresh<T: Element>(&self, len: usize, category: MemCategory) -> Tracked<T> {
        let bytes = (len * std::mem::size_of::<T>()) as u64;
        let charge = self.ledger.charge(bytes, category);
        Tracked {
            buf: vec![T::default(); len],
            charge,
        }
    }

    /// Returns a zero-initialised buffer of `len` elements, taking a pooled
    /// one when an exact match exists.
    pub fn alloc<T: Element>(&self, len: usize, category: MemCategory) -> Tracked<T> {
        if let Some(buf) = self.take_pooled::<T>(len, category) {
            return buf;
        }
        self.fresh(len, category)
    }

    fn take_pooled<T: Element>(&self, len: usize, category: MemCategory) -> Option<Tracked<T>> {
        let mut pool = self.pool.lock().unwrap_or_else(|p| p.into_inner());
        let pos = pool.iter().position(|b| {
            b.downcast_ref::<Tracked<T>>()
                .is_some_and(|t| t.len() == len && t.category() == category)
        })?;
        let boxed = pool.swap_remove(pos);
        Some(*boxed.downcast::<Tracked<T>>().ok()?)
    }

    /// Allocates and page-touches a buffer now so a later [`Allocator::alloc`]
    /// of the same shape is free of allocation cost.
    pub fn preallocate<T: Element>(&self, len: usize, category: MemCategory) {
        let buf = self.fresh::<T>(len, category);
        self.pool
            .lock()
            .unwrap_or_else(|p| p.into_inner())
            .push(Box::new(buf));
    }

    pub fn pooled_buffers(&self) -> usize {
        self.pool.lock().unwrap_or_else(|p| p.into_inner()).len()
    }
}

/// Wall-time instrument for one join phase.
#[must_use = "a phase scope measures nothing unless finished"]
pub struct PhaseScope<'a> {
    ledger: &'a MemLedger,
    phase: Phase,
    start: Instant,
    finished: bool,
}

impl PhaseScope<'_> {
    pub fn phase(&self) -> Phase {
        self.phase
    }

    /// Closes the phase and returns its wall time.
    pub fn finish(mut self) -> Duration {
        self.finished = true;
        self.ledger.leave(self.phase);
        self.start.elapsed()
    }
}

impl Drop for PhaseScope<'_> {
    fn drop(&mut self) {
        if !self.finished {
            self.ledger.leave(self.phase);
        }
    }
}

/// Opens `phase` on `ledger`. Phases must be entered transform, find,
/// materialize, each exactly once.
pub fn phase_scope(ledger: &MemLedger, phase: Phase) -> Result<PhaseScope<'_>> {
    ledger.enter(phase)?;
    Ok(PhaseScope {
        ledger,
        phase,
        start: Instant::now(),
        finished: false,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn peak_is_high_water_mark() {
        let alloc = Allocator::default();
        let a = alloc.alloc::<u32>(10, MemCategory::Column);
        let b = alloc.alloc::<u64>(10, MemCategory::Intermediate);
        assert_eq!(alloc.ledger().live_bytes(), 120);
        drop(b);
        let _c = alloc.alloc::<u32>(5, MemCategory::Column);
        assert_eq!(alloc.ledger().live_bytes(), 60);
        assert_eq!(
            alloc.ledger().peak(),
            PeakSnapshot {
                total: 120,
                columns: 40,
                intermediate: 80
            }
        );
        drop(a);
    }

    #[test]
    fn zero_sized_elements_are_free() {
        let alloc = Allocator::default();
        let unit = alloc.alloc::<()>(1000, MemCategory::Column);
        assert_eq!(unit.len(), 1000);
        assert_eq!(alloc.ledger().peak_bytes(), 0);
    }

    #[test]
    fn phases_enforce_order() {
        let ledger = MemLedger::new();
        assert!(matches!(
            phase_scope(&ledger, Phase::Find),
            Err(Error::PhaseOrderViolation { .. })
        ));
        phase_scope(&ledger, Phase::Transform).unwrap().finish();
        assert!(phase_scope(&ledger, Phase::Transform).is_err());
        phase_scope(&ledger, Phase::Find).unwrap().finish();
        phase_scope(&ledger, Phase::Materialize).unwrap().finish();
        assert!(phase_scope(&ledger, Phase::Materialize).is_err());
    }

    #[test]
    fn nested_phase_is_rejected() {
        let ledger = MemLedger::new();
        let t = phase_scope(&ledger, Phase::Transform).unwrap();
        assert!(phase_scope(&ledger, Phase::Find).is_err());
        t.finish();
    }

    #[test]
    fn phase_peaks_start_from_live_bytes() {
        let alloc = Allocator::default();
        let ledger = Arc::clone(alloc.ledger());
        let held = alloc.alloc::<u32>(4, MemCategory::Column);
        let t = phase_scope(&ledger, Phase::Transform).unwrap();
        let tmp = alloc.alloc::<u32>(8, MemCategory::Intermediate);
        drop(tmp);
        t.finish();
        let f = phase_scope(&ledger, Phase::Find).unwrap();
        f.finish();
        assert_eq!(ledger.phase_peak(Phase::Transform).total, 48);
        assert_eq!(ledger.phase_peak(Phase::Find).total, 16);
        drop(held);
        assert_eq!(ledger.live_bytes(), 0);
    }

    #[test]
    fn pool_serves_matching_shapes() {
        let alloc = Allocator::default();
        alloc.preallocate::<u32>(16, MemCategory::Column);
        assert_eq!(alloc.ledger().live_bytes(), 64);
        let a = alloc.alloc::<u32>(16, MemCategory::Column);
        assert_eq!(alloc.pooled_buffers(), 0);
        assert_eq!(alloc.ledger().live_bytes(), 64);
        let b = alloc.alloc::<u32>(16, MemCategory::Column);
        assert_eq!(alloc.ledger().live_bytes(), 128);
        drop((a, b));
        assert_eq!(alloc.ledger().live_bytes(), 0);
    }

    #[test]
    fn concurrent_updates_keep_peak() {
        let ledger = Arc::new(MemLedger::new());
        std::thread::scope(|s| {
            for _ in 0..8 {
                let l = Arc::clone(&ledger);
                s.spawn(move || {
                    for _ in 0..1000 {
                        let c = l.charge(8, MemCategory::Intermediate);
                        drop(c);
                    }
                });
            }
        });
        assert_eq!(ledger.live_bytes(), 0);
        assert!(ledger.peak_bytes() >= 8 && ledger.peak_bytes() <= 64);
    }
}
