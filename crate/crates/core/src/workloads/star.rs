//! Star schema: one fact relation with `N` foreign keys and `N` dimensions,
//! joined as a chain whose i-th join carries every earlier dimension payload.

use crate::engine::{run_join, JoinOptions, JoinOutput, JoinTask, Variant};
use crate::error::{Error, Result};
use crate::exec::ExecCtx;
use crate::model::{Column, Relation, ValueKind, MAX_ROWS};
use crate::primitives::gather;

use super::rng::{permutation, CounterRng};
use super::{random_column, STREAM_DIM, STREAM_R_PAYLOAD};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct StarSchemaSpec {
    pub fact_rows: usize,
    /// Number of dimensions, at least 1.
    pub dims: usize,
    pub dim_rows: usize,
    pub seed: u64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct StarSchema {
    /// Key is the row id; payload `i` is the foreign key into dimension `i`.
    pub fact: Relation,
    /// Shuffled primary key plus one payload each.
    pub dims: Vec<Relation>,
}

pub fn gen_star(spec: &StarSchemaSpec) -> Result<StarSchema> {
    if spec.dims == 0 {
        return Err(Error::SpecInvalid("a star schema needs at least one dimension".into()));
    }
    if spec.dim_rows == 0 && spec.fact_rows > 0 {
        return Err(Error::SpecInvalid("foreign keys need non-empty dimensions".into()));
    }
    for rows in [spec.fact_rows, spec.dim_rows] {
        if rows > MAX_ROWS {
            return Err(Error::TooManyRows { rows, max: MAX_ROWS });
        }
    }
    let fks = (0..spec.dims as u64)
        .map(|d| {
            let rng = CounterRng::new(spec.seed, STREAM_R_PAYLOAD + d);
            Column::U32((0..spec.fact_rows as u64).map(|i| rng.below(i, spec.dim_rows as u64) as u32).collect())
        })
        .collect();
    let fact = Relation::new("F", Column::U32((0..spec.fact_rows as u32).collect()), fks)?;
    let dims = (0..spec.dims as u64)
        .map(|d| {
            let keys = permutation(spec.dim_rows, CounterRng::new(spec.seed, STREAM_DIM + 2 * d));
            let payload = random_column(ValueKind::U32, spec.dim_rows, CounterRng::new(spec.seed, STREAM_DIM + 2 * d + 1));
            Relation::new(
                format!("D{}", d + 1),
                Column::U32(keys.into_iter().map(|k| k as u32).collect()),
                vec![payload],
            )
        })
        .collect::<Result<_>>()?;
    Ok(StarSchema { fact, dims })
}

/// Runs the chain of joins `(FK_i, ID, P_1..P_{i-1}) ⋈ D_i`.
///
/// Each join's output is `(FK_i, P_i, ID, P_1..P_{i-1})`. The next foreign
/// key is materialized from the fact relation through the output's id column.
pub fn run_star_sequence(schema: &StarSchema, variant: Variant, options: &JoinOptions) -> Result<Vec<JoinOutput>> {
    let ctx = ExecCtx::new(options.workers);
    let fact = &schema.fact;
    let mut outputs: Vec<JoinOutput> = Vec::with_capacity(schema.dims.len());
    for (i, dim) in schema.dims.iter().enumerate() {
        let fk_col = fact.payload(i).ok_or_else(|| Error::SpecInvalid(format!("fact lacks foreign key {}", i + 1)))?;
        let probe = match outputs.last() {
            None => Relation::new("F1", fk_col.clone(), vec![fact.key().clone()])?,
            Some(prev) => {
                let p = prev.relation.payloads();
                let ids = p[1].as_u32().ok_or_else(|| Error::KindError("fact ids must be 4-byte".into()))?;
                let fk = gather(&ctx, fk_col, ids)?;
                // previous layout: P_{i-1}, ID, P_1..P_{i-2}
                let mut carried = vec![p[1].clone()];
                carried.extend(p[2..].iter().cloned());
                carried.push(p[0].clone());
                Relation::new(format!("F{}", i + 1), fk, carried)?
            }
        };
        let task = JoinTask::new(variant, dim, &probe).with_options(JoinOptions {
            pk_fk: true,
            ..options.clone()
        });
        outputs.push(run_join(&task)?);
    }
    Ok(outputs)
}
