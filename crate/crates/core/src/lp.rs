//! Small linear programs over a symmetric slab `{x : |a_j · x| <= 1}`.

use microlp::{ComparisonOp, OptimizationDirection, Problem};

use crate::error::{Error, Result};

/// Optimum of `max c·x` over the slab cut out by `rows`.
#[derive(Debug, Clone, PartialEq)]
pub struct SlabOptimum {
    pub value: f64,
    pub point: Vec<f64>,
}

/// Maximizes `objective · x` subject to `-1 <= row · x <= 1` for every row.
/// Rows with all-zero entries are skipped, and a variable no row touches is
/// pinned to zero when the objective ignores it too. Fails with
/// [`Error::LinearProgram`] when the slab is unbounded in the objective
/// direction.
pub fn maximize_over_slab(objective: &[f64], rows: &[&[f64]]) -> Result<SlabOptimum> {
    let n = objective.len();
    let mut problem = Problem::new(OptimizationDirection::Maximize);
    let vars: Vec<_> = objective
        .iter()
        .enumerate()
        .map(|(i, &c)| {
            let free = c != 0.0 || rows.iter().any(|r| r[i] != 0.0);
            let bounds = if free {
                (f64::NEG_INFINITY, f64::INFINITY)
            } else {
                (0.0, 0.0)
            };
            problem.add_var(c, bounds)
        })
        .collect();
    for row in rows {
        debug_assert_eq!(row.len(), n);
        let terms: Vec<_> = vars
            .iter()
            .zip(row.iter())
            .filter(|(_, &a)| a != 0.0)
            .map(|(&v, &a)| (v, a))
            .collect();
        if terms.is_empty() {
            continue;
        }
        problem.add_constraint(terms.as_slice(), ComparisonOp::Le, 1.0);
        problem.add_constraint(terms.as_slice(), ComparisonOp::Ge, -1.0);
    }
    let outcome = problem.solve().map_err(|e| Error::LinearProgram(format!("{e:?}")))?;
    let solution = outcome
        .into_solution()
        .map_err(|_| Error::LinearProgram("solve interrupted".into()))?;
    Ok(SlabOptimum {
        value: solution.objective(),
        point: vars.iter().map(|&v| solution.var_value(v)).collect(),
    })
}
