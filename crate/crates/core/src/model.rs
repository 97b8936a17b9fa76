//! Columnar data model shared by every stage of the join pipeline.
//!
//! A [`Relation`] is a key column plus zero or more payload columns of equal
//! length. Columns hold 4-byte or 8-byte unsigned integers; signed source data
//! is expected to be mapped onto the unsigned domain before it reaches here.

use std::fmt;
use std::hash::Hash;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Largest relation addressable by 4-byte tuple identifiers.
pub const MAX_ROWS: usize = (1 << 31) - 1;

/// A plain value that can live in a column or travel alongside keys.
///
/// `()` is an element too, which lets key-only transforms reuse the pair code
/// path without allocating a value column.
pub trait Element: Copy + Default + Send + Sync + PartialEq + fmt::Debug + 'static {}

impl Element for u32 {}
impl Element for u64 {}
impl Element for () {}
impl Element for usize {}

/// An unsigned integer usable as a radix-partitioning key.
pub trait RadixKey: Element + Ord + Hash {
    const BITS: u32;

    fn to_u64(self) -> u64;

    /// Truncating conversion.
    fn from_u64(v: u64) -> Self;

    fn into_column(values: Vec<Self>) -> Column;

    fn slice_of(column: &Column) -> Option<&[Self]>;

    #[inline(always)]
    fn digit(self, shift: u32, mask: u64) -> usize {
        // shift < 64 is guaranteed by bit-range validation
        ((self.to_u64() >> shift) & mask) as usize
    }
}

impl RadixKey for u32 {
    const BITS: u32 = 32;

    #[inline(always)]
    fn to_u64(self) -> u64 {
        self as u64
    }

    #[inline(always)]
    fn from_u64(v: u64) -> Self {
        v as u32
    }

    fn into_column(values: Vec<Self>) -> Column {
        Column::U32(values)
    }

    fn slice_of(column: &Column) -> Option<&[Self]> {
        column.as_u32()
    }
}

impl RadixKey for u64 {
    const BITS: u32 = 64;

    #[inline(always)]
    fn to_u64(self) -> u64 {
        self
    }

    #[inline(always)]
    fn from_u64(v: u64) -> Self {
        v
    }

    fn into_column(values: Vec<Self>) -> Column {
        Column::U64(values)
    }

    fn slice_of(column: &Column) -> Option<&[Self]> {
        column.as_u64()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ValueKind {
    U32,
    U64,
}

impl ValueKind {
    pub fn from_bytes(bytes: usize) -> Result<Self> {
        match bytes {
            4 => Ok(ValueKind::U32),
            8 => Ok(ValueKind::U64),
            other => Err(Error::KindError(format!(
                "value width must be 4 or 8 bytes, got {other}"
            ))),
        }
    }

    pub fn byte_width(self) -> usize {
        match self {
            ValueKind::U32 => 4,
            ValueKind::U64 => 8,
        }
    }

    pub fn bits(self) -> u32 {
        self.byte_width() as u32 * 8
    }

    pub fn max_value(self) -> u64 {
        match self {
            ValueKind::U32 => u32::MAX as u64,
            ValueKind::U64 => u64::MAX,
        }
    }
}

impl fmt::Display for ValueKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ValueKind::U32 => "u32",
            ValueKind::U64 => "u64",
        })
    }
}

impl FromStr for ValueKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "u32" | "4" => Ok(ValueKind::U32),
            "u64" | "8" => Ok(ValueKind::U64),
            other => Err(Error::KindError(format!("unknown value kind {other:?}"))),
        }
    }
}

/// A typed contiguous sequence of integers.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Column {
    U32(Vec<u32>),
    U64(Vec<u64>),
}

/// Runs `$body` with `$v` bound to the typed vector inside a [`Column`].
#[macro_export]
macro_rules! with_column {
    ($col:expr, $v:ident => $body:expr) => {
        match $col {
            $crate::model::Column::U32($v) => $body,
            $crate::model::Column::U64($v) => $body,
        }
    };
}

impl Column {
    pub fn empty(kind: ValueKind) -> Self {
        match kind {
            ValueKind::U32 => Column::U32(Vec::new()),
            ValueKind::U64 => Column::U64(Vec::new()),
        }
    }

    /// Builds a column of `kind` from wide values, rejecting any value that
    /// does not fit the declared width.
    pub fn from_u64s(kind: ValueKind, values: &[u64]) -> Result<Self> {
        match kind {
            ValueKind::U64 => Ok(Column::U64(values.to_vec())),
            ValueKind::U32 => values
                .iter()
                .map(|&v| {
                    u32::try_from(v).map_err(|_| {
                        Error::KindError(format!("value {v} does not fit in 4 bytes"))
                    })
                })
                .collect::<Result<Vec<_>>>()
                .map(Column::U32),
        }
    }

    pub fn kind(&self) -> ValueKind {
        match self {
            Column::U32(_) => ValueKind::U32,
            Column::U64(_) => ValueKind::U64,
        }
    }

    pub fn len(&self) -> usize {
        with_column!(self, v => v.len())
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn byte_len(&self) -> usize {
        self.len() * self.kind().byte_width()
    }

    #[inline]
    pub fn get(&self, index: usize) -> u64 {
        match self {
            Column::U32(v) => v[index] as u64,
            Column::U64(v) => v[index],
        }
    }

    pub fn iter_u64(&self) -> Box<dyn Iterator<Item = u64> + '_> {
        match self {
            Column::U32(v) => Box::new(v.iter().map(|&x| x as u64)),
            Column::U64(v) => Box::new(v.iter().copied()),
        }
    }

    pub fn to_u64_vec(&self) -> Vec<u64> {
        self.iter_u64().collect()
    }

    pub fn as_u32(&self) -> Option<&[u32]> {
        match self {
            Column::U32(v) => Some(v),
            Column::U64(_) => None,
        }
    }

    pub fn as_u64(&self) -> Option<&[u64]> {
        match self {
            Column::U64(v) => Some(v),
            Column::U32(_) => None,
        }
    }
}

impl From<Vec<u32>> for Column {
    fn from(v: Vec<u32>) -> Self {
        Column::U32(v)
    }
}

impl From<Vec<u64>> for Column {
    fn from(v: Vec<u64>) -> Self {
        Column::U64(v)
    }
}

/// One key column plus ordered payload columns, all of the same length.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Relation {
    name: String,
    key: Column,
    payloads: Vec<Column>,
}

impl Relation {
    pub fn new(name: impl Into<String>, key: Column, payloads: Vec<Column>) -> Result<Self> {
        let rows = key.len();
        if rows > MAX_ROWS {
            return Err(Error::TooManyRows {
                rows,
                max: MAX_ROWS,
            });
        }
        if let Some(bad) = payloads.iter().find(|p| p.len() != rows) {
            return Err(Error::LengthMismatch {
                expected: rows,
                found: bad.len(),
            });
        }
        Ok(Relation {
            name: name.into(),
            key,
            payloads,
        })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn key(&self) -> &Column {
        &self.key
    }

    pub fn payloads(&self) -> &[Column] {
        &self.payloads
    }

    pub fn payload(&self, index: usize) -> Option<&Column> {
        self.payloads.get(index)
    }

    pub fn len(&self) -> usize {
        self.key.len()
    }

    pub fn is_empty(&self) -> bool {
        self.key.is_empty()
    }

    /// Number of columns including the key.
    pub fn arity(&self) -> usize {
        1 + self.payloads.len()
    }

    pub fn into_parts(self) -> (String, Column, Vec<Column>) {
        (self.name, self.key, self.payloads)
    }

    pub fn with_name(mut self, name: impl Into<String>) -> Self {
        self.name = name.into();
        self
    }
}

/// Validating constructor for [`Relation`].
pub fn make_relation(key: Column, payloads: Vec<Column>, name: &str) -> Result<Relation> {
    Relation::new(name, key, payloads)
}

/// What the tuple identifiers of a [`MatchSet`] index into.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum TupleIdSemantics {
    /// Positions in the original, untransformed relation.
    Physical,
    /// Positions in the transformed (sorted or partitioned) relation.
    Virtual,
}

/// Output of match finding: matched keys and the tuple ids of both sides.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MatchSet {
    pub keys: Column,
    pub ids_r: Vec<u32>,
    pub ids_s: Vec<u32>,
    pub id_semantics: TupleIdSemantics,
}

impl MatchSet {
    pub fn empty(kind: ValueKind, id_semantics: TupleIdSemantics) -> Self {
        MatchSet {
            keys: Column::empty(kind),
            ids_r: Vec::new(),
            ids_s: Vec::new(),
            id_semantics,
        }
    }

    pub fn len(&self) -> usize {
        self.ids_s.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids_s.is_empty()
    }

    /// Checks the key-agreement invariant against the key columns the ids
    /// refer to: the original keys for physical ids, the transformed keys for
    /// virtual ids.
    pub fn keys_agree(&self, r_keys: &Column, s_keys: &Column) -> bool {
        if self.keys.len() != self.ids_r.len() || self.ids_r.len() != self.ids_s.len() {
            return false;
        }
        self.ids_r
            .iter()
            .zip(&self.ids_s)
            .enumerate()
            .all(|(i, (&ir, &is))| {
                let (ir, is) = (ir as usize, is as usize);
                ir < r_keys.len()
                    && is < s_keys.len()
                    && r_keys.get(ir) == self.keys.get(i)
                    && s_keys.get(is) == self.keys.get(i)
            })
    }
}
