//! Conversion of harness records and bound evaluations into output tables.
//! Column names and order are part of the output format.

use srvar_core::harness::{SummaryRecord, TrialRecord};
use srvar_core::{BoundMethod, BoundQuery};

use crate::config::BoundsGrid;
use crate::table::{Cell, Table};

pub const TRIAL_COLUMNS: &[&str] = &[
    "algorithm",
    "n",
    "precision",
    "trial_index",
    "value",
    "rel_error",
];

pub const SUMMARY_COLUMNS: &[&str] = &[
    "algorithm",
    "n",
    "precision",
    "u",
    "repetitions",
    "exact",
    "mean_value",
    "mean_rel_error",
    "trial_rel_error_mean",
    "rn_value",
    "rn_rel_error",
    "kappa",
    "k1",
    "k2",
    "bias",
    "bias_stderr",
    "var_sum_hat",
    "predicted_bias",
    "flags",
];

pub const BOUND_COLUMNS: &[&str] = &[
    "algorithm",
    "n",
    "u",
    "lambda",
    "kappa",
    "k1",
    "k2",
    "method",
    "value",
    "holds_with_probability",
    "by_analogy",
    "coverage",
    "status",
];

pub fn trials_table(trials: &[TrialRecord], precision: u32) -> Table {
    let mut t = Table::new(TRIAL_COLUMNS);
    for r in trials {
        t.push(vec![
            r.algorithm.name().into(),
            r.n.into(),
            precision.into(),
            r.trial_index.into(),
            r.value.into(),
            r.rel_error.into(),
        ]);
    }
    t
}

pub fn summary_table(summaries: &[SummaryRecord]) -> Table {
    let mut t = Table::new(SUMMARY_COLUMNS);
    for s in summaries {
        let c = &s.conditions;
        t.push(vec![
            s.algorithm.name().into(),
            s.n.into(),
            s.precision.into(),
            s.u.into(),
            s.repetitions.into(),
            s.exact.into(),
            s.mean_value.into(),
            s.mean_rel_error.into(),
            s.trial_rel_error_mean.into(),
            s.rn_value.into(),
            s.rn_rel_error.into(),
            c.kappa.into(),
            c.k1.into(),
            c.k2.into(),
            s.bias.into(),
            s.bias_stderr.into(),
            s.var_sum_hat.into(),
            s.predicted_bias.into(),
            s.flags.join(";").into(),
        ]);
    }
    t
}

/// Bound values attached to experiment summaries, with their coverage.
pub fn summary_bounds_table(summaries: &[SummaryRecord]) -> Table {
    let mut t = Table::new(BOUND_COLUMNS);
    for s in summaries {
        let c = &s.conditions;
        for b in &s.bounds {
            t.push(vec![
                s.algorithm.name().into(),
                s.n.into(),
                s.u.into(),
                b.lambda.into(),
                c.kappa.into(),
                c.k1.into(),
                c.k2.into(),
                b.method.name().into(),
                b.value.into(),
                b.holds_with_probability.into(),
                b.by_analogy.into(),
                b.coverage.into(),
                "ok".into(),
            ]);
        }
    }
    t
}

/// Every method in the grid at every `(n, lambda)`; deterministic methods
/// appear once per `n`. Domain violations become per-row error statuses.
pub fn grid_bounds_table(grid: &BoundsGrid) -> Table {
    let mut t = Table::new(BOUND_COLUMNS);
    for &n in &grid.n {
        for &method in &grid.methods {
            let lambdas: Vec<Option<f64>> = if method.is_probabilistic() {
                grid.lambdas.iter().copied().map(Some).collect()
            } else {
                vec![None]
            };
            for lambda in lambdas {
                let q = BoundQuery::new(n, grid.u, lambda.unwrap_or(0.5))
                    .with_kappa(grid.kappa)
                    .with_k(grid.k1, grid.k2);
                let (value, prob, status) = match method.evaluate(&q) {
                    Ok(b) => (
                        Cell::from(b.value),
                        Cell::from(b.holds_with_probability),
                        "ok".to_string(),
                    ),
                    Err(e) => (Cell::Empty, Cell::Empty, format!("error: {e}")),
                };
                t.push(vec![
                    Cell::Empty,
                    n.into(),
                    grid.u.into(),
                    lambda.into(),
                    grid.kappa.into(),
                    grid.k1.into(),
                    grid.k2.into(),
                    method.name().into(),
                    value,
                    prob,
                    method.by_analogy().into(),
                    Cell::Empty,
                    status.into(),
                ]);
            }
        }
    }
    t
}

pub fn all_methods() -> Vec<BoundMethod> {
    BoundMethod::ALL.to_vec()
}
