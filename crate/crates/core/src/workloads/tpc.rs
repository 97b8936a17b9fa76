//! Synthetic stand-ins for five decision-support join shapes.
//!
//! Only row counts, output cardinality and the number of key-typed (K) and
//! non-key (NK) payload columns are reproduced. Rows are shuffled; values of
//! payload columns are random.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::model::{Column, Relation, ValueKind};

use super::rng::{permutation, shuffle, CounterRng};
use super::{foreign_keys, random_payloads, STREAM_R_KEY, STREAM_R_PAYLOAD, STREAM_S_PAYLOAD};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum TpcShape {
    J1,
    J2,
    J3,
    J4,
    J5,
}

/// Row counts at a given scale.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct TpcTarget {
    pub r_rows: usize,
    pub s_rows: usize,
    pub output_rows: usize,
}

struct ShapeDef {
    r: f64,
    s: f64,
    out: f64,
    /// (K, NK) payload columns of R and S.
    r_cols: (usize, usize),
    s_cols: (usize, usize),
}

const M: f64 = 1e6;

impl TpcShape {
    pub const ALL: [TpcShape; 5] = [TpcShape::J1, TpcShape::J2, TpcShape::J3, TpcShape::J4, TpcShape::J5];

    fn def(self) -> ShapeDef {
        match self {
            TpcShape::J1 => ShapeDef { r: 15.0 * M, s: 18.2 * M, out: 18.2 * M, r_cols: (1, 3), s_cols: (0, 1) },
            TpcShape::J2 => ShapeDef { r: 15.0 * M, s: 60.0 * M, out: 60.0 * M, r_cols: (1, 2), s_cols: (0, 1) },
            TpcShape::J3 => ShapeDef { r: 2.0 * M, s: 2.1 * M, out: 2.1 * M, r_cols: (0, 3), s_cols: (0, 3) },
            TpcShape::J4 => ShapeDef { r: 1.9 * M, s: 58.0 * M, out: 58.0 * M, r_cols: (0, 1), s_cols: (3, 7) },
            TpcShape::J5 => ShapeDef { r: 72.0 * M, s: 72.0 * M, out: 904.0 * M, r_cols: (0, 1), s_cols: (0, 1) },
        }
    }

    pub fn target(self, scale: f64) -> TpcTarget {
        let d = self.def();
        TpcTarget {
            r_rows: (d.r * scale).round() as usize,
            s_rows: (d.s * scale).round() as usize,
            output_rows: (d.out * scale).round() as usize,
        }
    }

    /// `(K, NK)` payload column counts of R and S.
    pub fn payload_layout(self) -> ((usize, usize), (usize, usize)) {
        let d = self.def();
        (d.r_cols, d.s_cols)
    }

    pub fn is_self_join(self) -> bool {
        self == TpcShape::J5
    }
}

impl fmt::Display for TpcShape {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self:?}")
    }
}

impl FromStr for TpcShape {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_uppercase().as_str() {
            "J1" => Ok(TpcShape::J1),
            "J2" => Ok(TpcShape::J2),
            "J3" => Ok(TpcShape::J3),
            "J4" => Ok(TpcShape::J4),
            "J5" => Ok(TpcShape::J5),
            _ => Err(Error::UnknownShape(s.to_string())),
        }
    }
}

fn payloads(key_kind: ValueKind, nonkey_kind: ValueKind, rows: usize, (k, nk): (usize, usize), seed: u64, base: u64) -> Vec<Column> {
    let mut cols = random_payloads(key_kind, rows, k, seed, base);
    cols.extend(random_payloads(nonkey_kind, rows, nk, seed, base + k as u64));
    cols
}

/// Key multiplicities for the self join: values of multiplicity 12 and 13
/// (uniformly mixed) so the sum of squared multiplicities approaches the
/// target output, plus one value taking any leftover rows.
fn self_join_keys(rows: usize, output: usize, seed: u64) -> Vec<u64> {
    let (n, t) = (rows as i64, output as i64);
    let thirteens = ((t - 12 * n) / 13).clamp(0, n / 13);
    let twelves = (n - 13 * thirteens) / 12;
    let mut mults: Vec<usize> = std::iter::repeat_n(13, thirteens as usize)
        .chain(std::iter::repeat_n(12, twelves as usize))
        .collect();
    let leftover = rows - mults.iter().sum::<usize>();
    if leftover > 0 {
        mults.push(leftover);
    }
    let mut keys = Vec::with_capacity(rows);
    for (value, &m) in mults.iter().enumerate() {
        keys.extend(std::iter::repeat_n(value as u64, m));
    }
    shuffle(&mut keys, CounterRng::new(seed, STREAM_R_KEY));
    keys
}

/// Builds `(R, S)` for `shape` at `scale` in `(0, 1]`. K payloads use the key
/// width and NK payloads the non-key width. The self join shares one key
/// column between both sides.
pub fn gen_tpc_shape(shape: TpcShape, scale: f64, key_kind: ValueKind, nonkey_kind: ValueKind, seed: u64) -> Result<(Relation, Relation)> {
    if !(scale > 0.0 && scale <= 1.0) {
        return Err(Error::SpecInvalid(format!("scale {scale} outside (0, 1]")));
    }
    let target = shape.target(scale);
    let (r_cols, s_cols) = shape.payload_layout();
    let (r_keys, s_keys) = if shape.is_self_join() {
        let keys = self_join_keys(target.r_rows, target.output_rows, seed);
        (keys.clone(), keys)
    } else {
        let r_keys = permutation(target.r_rows, CounterRng::new(seed, STREAM_R_KEY));
        (r_keys, foreign_keys(target.r_rows, target.s_rows, 0.0, seed)?)
    };
    let name = shape.to_string();
    let r = Relation::new(
        format!("{name}.R"),
        Column::from_u64s(key_kind, &r_keys)?,
        payloads(key_kind, nonkey_kind, r_keys.len(), r_cols, seed, STREAM_R_PAYLOAD),
    )?;
    let s = Relation::new(
        format!("{name}.S"),
        Column::from_u64s(key_kind, &s_keys)?,
        payloads(key_kind, nonkey_kind, s_keys.len(), s_cols, seed, STREAM_S_PAYLOAD),
    )?;
    Ok((r, s))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::HashMap;

    fn cardinality(r: &Relation, s: &Relation) -> usize {
        let mut counts: HashMap<u64, usize> = HashMap::new();
        for k in r.key().iter_u64() {
            *counts.entry(k).or_default() += 1;
        }
        s.key().iter_u64().map(|k| counts.get(&k).copied().unwrap_or(0)).sum()
    }

    #[test]
    fn j4_full_scale_targets() {
        let t = TpcShape::J4.target(1.0);
        assert_eq!((t.r_rows, t.s_rows, t.output_rows), (1_900_000, 58_000_000, 58_000_000));
        assert_eq!(TpcShape::J4.payload_layout(), ((0, 1), (3, 7)));
        let t = TpcShape::J2.target(1.0);
        assert_eq!((t.r_rows, t.s_rows, t.output_rows), (15_000_000, 60_000_000, 60_000_000));
    }

    #[test]
    fn shapes_parse() {
        assert_eq!("j3".parse::<TpcShape>().unwrap(), TpcShape::J3);
        assert!(matches!("J6".parse::<TpcShape>(), Err(Error::UnknownShape(_))));
    }

    #[test]
    fn small_scale_cardinalities_and_layouts() {
        let scale = 1.0 / 1024.0;
        for shape in TpcShape::ALL {
            let (r, s) = gen_tpc_shape(shape, scale, ValueKind::U32, ValueKind::U64, 5).unwrap();
            let t = shape.target(scale);
            assert_eq!((r.len(), s.len()), (t.r_rows, t.s_rows), "{shape}");
            let got = cardinality(&r, &s) as f64;
            assert!((got - t.output_rows as f64).abs() <= 0.02 * t.output_rows as f64, "{shape}: {got}");
            let ((rk, rnk), (sk, snk)) = shape.payload_layout();
            assert_eq!(r.payloads().len(), rk + rnk);
            assert_eq!(s.payloads().len(), sk + snk);
            assert!(r.payloads()[..rk].iter().all(|c| c.kind() == ValueKind::U32));
            assert!(r.payloads()[rk..].iter().all(|c| c.kind() == ValueKind::U64));
        }
    }

    #[test]
    fn self_join_multiplicities() {
        let keys = self_join_keys(562_500, 7_062_500, 1);
        let mut counts: HashMap<u64, u64> = HashMap::new();
        for k in keys {
            *counts.entry(k).or_default() += 1;
        }
        let out: u64 = counts.values().map(|c| c * c).sum();
        assert!((out as f64 - 7_062_500.0).abs() / 7_062_500.0 < 0.001, "{out}");
    }

    #[test]
    fn rejects_bad_scale() {
        assert!(gen_tpc_shape(TpcShape::J1, 0.0, ValueKind::U32, ValueKind::U32, 0).is_err());
        assert!(gen_tpc_shape(TpcShape::J1, 1.5, ValueKind::U32, ValueKind::U32, 0).is_err());
    }
}
