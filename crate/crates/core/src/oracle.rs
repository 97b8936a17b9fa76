//! Brute-force reference join. Deliberately shares no code with the
//! partitioning, sorting or gathering primitives.

use std::collections::HashMap;

use crate::error::Result;
use crate::model::{Column, Relation};

fn row_order(cols: &[Vec<u64>], rows: usize) -> Vec<usize> {
    let mut order: Vec<usize> = (0..rows).collect();
    order.sort_unstable_by(|&a, &b| {
        cols.iter()
            .map(|c| c[a].cmp(&c[b]))
            .find(|o| o.is_ne())
            .unwrap_or(std::cmp::Ordering::Equal)
    });
    order
}

/// Rows of `relation` as `(key, payloads...)` tuples sorted lexicographically.
pub fn canonical_rows(relation: &Relation) -> Vec<Vec<u64>> {
    let cols: Vec<Vec<u64>> = std::iter::once(relation.key())
        .chain(relation.payloads())
        .map(Column::to_u64_vec)
        .collect();
    row_order(&cols, relation.len())
        .into_iter()
        .map(|i| cols.iter().map(|c| c[i]).collect())
        .collect()
}

/// Same columns and kinds, rows in canonical order.
pub fn canonicalize(relation: &Relation) -> Result<Relation> {
    let all: Vec<&Column> = std::iter::once(relation.key()).chain(relation.payloads()).collect();
    let cols: Vec<Vec<u64>> = all.iter().map(|c| c.to_u64_vec()).collect();
    let order = row_order(&cols, relation.len());
    let mut out = all
        .iter()
        .zip(&cols)
        .map(|(c, v)| Column::from_u64s(c.kind(), &order.iter().map(|&i| v[i]).collect::<Vec<_>>()))
        .collect::<Result<Vec<_>>>()?
        .into_iter();
    let key = out.next().expect("a relation always has a key column");
    Relation::new(relation.name(), key, out.collect())
}

fn positions_equal(haystack: &[u64], key: u64) -> usize {
    haystack.iter().map(|&x| (x == key) as usize).sum()
}

/// Every `(i, j)` with equal keys as a full output row, canonicalized.
/// Quadratic and single-threaded; meant for inputs up to about 10^5 rows.
pub fn nested_loop_join(r: &Relation, s: &Relation) -> Result<Relation> {
    let rk = r.key().to_u64_vec();
    let sk = s.key().to_u64_vec();
    let rp: Vec<Vec<u64>> = r.payloads().iter().map(Column::to_u64_vec).collect();
    let sp: Vec<Vec<u64>> = s.payloads().iter().map(Column::to_u64_vec).collect();
    let width = 1 + rp.len() + sp.len();
    let mut out: Vec<Vec<u64>> = vec![Vec::new(); width];
    for (i, &key) in rk.iter().enumerate() {
        // a branch-free count first, so probe sides without a partner cost
        // one vectorizable scan
        let mut remaining = positions_equal(&sk, key);
        if remaining == 0 {
            continue;
        }
        for (j, _) in sk.iter().enumerate().filter(|&(_, &x)| x == key) {
            if remaining == 0 {
                break;
            }
            remaining -= 1;
            out[0].push(key);
            for (c, p) in rp.iter().enumerate() {
                out[1 + c].push(p[i]);
            }
            for (c, p) in sp.iter().enumerate() {
                out[1 + rp.len() + c].push(p[j]);
            }
        }
    }
    let kinds = std::iter::once(r.key().kind())
        .chain(r.payloads().iter().map(Column::kind))
        .chain(s.payloads().iter().map(Column::kind));
    let mut cols = out
        .iter()
        .zip(kinds)
        .map(|(v, kind)| Column::from_u64s(kind, v))
        .collect::<Result<Vec<_>>>()?
        .into_iter();
    let key = cols.next().expect("key column");
    canonicalize(&Relation::new(format!("{}_{}", r.name(), s.name()), key, cols.collect())?)
}

/// Output cardinality by per-key counting.
pub fn join_cardinality(r: &Relation, s: &Relation) -> u64 {
    let mut counts: HashMap<u64, u64> = HashMap::with_capacity(r.len());
    for k in r.key().iter_u64() {
        *counts.entry(k).or_default() += 1;
    }
    s.key().iter_u64().map(|k| counts.get(&k).copied().unwrap_or(0)).sum()
}
