//! Deterministic workload generators.
//!
//! Every column is drawn from its own counter-based stream, so a spec and
//! seed fully determine the generated relations regardless of thread count.

mod io;
pub mod rng;
mod star;
mod tpc;
mod zipf;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::model::{Column, Relation, ValueKind, MAX_ROWS};

pub use io::{export_relation, import_relation, MANIFEST_FILE};
pub use rng::{mix64, permutation, CounterRng};
pub use star::{gen_star, run_star_sequence, StarSchema, StarSchemaSpec};
pub use tpc::{gen_tpc_shape, TpcShape, TpcTarget};
pub use zipf::{zipf_sample, ZipfSamples, ZipfTable};

// Stream ids; payload streams are offset by the column index.
const STREAM_R_KEY: u64 = 1;
const STREAM_S_KEY: u64 = 2;
const STREAM_ZIPF: u64 = 3;
const STREAM_ZIPF_PERM: u64 = 4;
const STREAM_R_PAYLOAD: u64 = 1 << 10;
const STREAM_S_PAYLOAD: u64 = 2 << 10;
const STREAM_DIM: u64 = 3 << 10;

/// Parameters of a two-relation primary-key/foreign-key workload.
#[derive(Clone, Debug, PartialEq)]
pub struct WorkloadSpec {
    pub r_rows: usize,
    pub s_rows: usize,
    pub r_payloads: usize,
    pub s_payloads: usize,
    pub key_kind: ValueKind,
    pub payload_kind: ValueKind,
    /// Fraction of primary keys kept matchable.
    pub match_ratio: f64,
    /// 0 draws foreign keys uniformly.
    pub zipf_factor: f64,
    pub seed: u64,
}

impl Default for WorkloadSpec {
    fn default() -> Self {
        WorkloadSpec {
            r_rows: 1 << 10,
            s_rows: 1 << 10,
            r_payloads: 1,
            s_payloads: 1,
            key_kind: ValueKind::U32,
            payload_kind: ValueKind::U32,
            match_ratio: 1.0,
            zipf_factor: 0.0,
            seed: 0,
        }
    }
}

impl WorkloadSpec {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.match_ratio) {
            return Err(Error::SpecInvalid(format!("match ratio {} outside [0, 1]", self.match_ratio)));
        }
        if !self.zipf_factor.is_finite() || self.zipf_factor < 0.0 {
            return Err(Error::SpecInvalid(format!("zipf factor {} must be >= 0", self.zipf_factor)));
        }
        for rows in [self.r_rows, self.s_rows] {
            if rows > MAX_ROWS {
                return Err(Error::TooManyRows { rows, max: MAX_ROWS });
            }
        }
        if self.r_rows == 0 && self.s_rows > 0 {
            return Err(Error::SpecInvalid("foreign keys need a non-empty primary-key domain".into()));
        }
        // replaced keys occupy [|R|, 2|R|)
        if (2 * self.r_rows as u64).saturating_sub(1) > self.key_kind.max_value() {
            return Err(Error::SpecInvalid(format!("{} rows exceed the {} key domain", self.r_rows, self.key_kind)));
        }
        Ok(())
    }

    /// Number of primary keys replaced by non-matching values.
    pub fn replaced_keys(&self) -> usize {
        ((1.0 - self.match_ratio) * self.r_rows as f64).round() as usize
    }
}

pub(crate) fn random_column(kind: ValueKind, rows: usize, rng: CounterRng) -> Column {
    match kind {
        ValueKind::U32 => Column::U32((0..rows as u64).into_par_iter().map(|i| rng.at(i) as u32).collect()),
        ValueKind::U64 => Column::U64((0..rows as u64).into_par_iter().map(|i| rng.at(i)).collect()),
    }
}

pub(crate) fn random_payloads(kind: ValueKind, rows: usize, count: usize, seed: u64, base: u64) -> Vec<Column> {
    (0..count as u64)
        .into_par_iter()
        .map(|c| random_column(kind, rows, CounterRng::new(seed, base + c)))
        .collect()
}

/// Uniform (factor 0) or Zipf-skewed draws from `0..domain`. Zipf ranks map
/// to values through a seeded permutation.
pub(crate) fn foreign_keys(domain: usize, rows: usize, zipf_factor: f64, seed: u64) -> Result<Vec<u64>> {
    let rng = CounterRng::new(seed, STREAM_S_KEY);
    if rows == 0 {
        return Ok(Vec::new());
    }
    if zipf_factor == 0.0 {
        return Ok((0..rows as u64)
            .into_par_iter()
            .map(|i| rng.below(i, domain as u64))
            .collect());
    }
    let table = ZipfTable::new(domain, zipf_factor)?;
    let perm = permutation(domain, CounterRng::new(seed, STREAM_ZIPF_PERM));
    Ok((0..rows as u64)
        .into_par_iter()
        .map(|i| perm[table.rank_for(rng.unit(i))])
        .collect())
}

/// Primary-key relation `R` and foreign-key relation `S`.
///
/// `R.key` is a shuffled `0..|R|` in which the `(1 - match_ratio) |R|` keys
/// below that count are lifted by `|R|`, so they can never match.
pub fn gen_pk_fk(spec: &WorkloadSpec) -> Result<(Relation, Relation)> {
    spec.validate()?;
    let n = spec.r_rows as u64;
    let lift = spec.replaced_keys() as u64;
    let mut r_keys = permutation(spec.r_rows, CounterRng::new(spec.seed, STREAM_R_KEY));
    r_keys.par_iter_mut().filter(|k| **k < lift).for_each(|k| *k += n);
    let s_keys = foreign_keys(spec.r_rows, spec.s_rows, spec.zipf_factor, spec.seed)?;

    let r = Relation::new(
        "R",
        Column::from_u64s(spec.key_kind, &r_keys)?,
        random_payloads(spec.payload_kind, spec.r_rows, spec.r_payloads, spec.seed, STREAM_R_PAYLOAD),
    )?;
    let s = Relation::new(
        "S",
        Column::from_u64s(spec.key_kind, &s_keys)?,
        random_payloads(spec.payload_kind, spec.s_rows, spec.s_payloads, spec.seed, STREAM_S_PAYLOAD),
    )?;
    Ok((r, s))
}
