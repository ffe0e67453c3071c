//! Canned configurations for the figure data sets.

use clap::ValueEnum;
use serde::{Deserialize, Serialize};
use srvar_core::harness::{DatasetSpec, ExperimentConfig, SweepGrid};
use srvar_core::{Algorithm, BoundMethod, FpFormat, SummationScheme};

use crate::config::{BoundsGrid, RunSpec};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FigureId {
    /// Pairwise-summation bounds against n (bounds only).
    #[value(name = "fig2")]
    Fig2,
    /// Textbook variance errors and bounds against n.
    #[value(name = "fig3_left")]
    Fig3Left,
    /// Textbook variance errors and bounds against lambda at n = 10^6.
    #[value(name = "fig3_right")]
    Fig3Right,
    /// Textbook vs two-pass on uniform [-1, 1].
    #[value(name = "fig4_left")]
    Fig4Left,
    /// Textbook vs two-pass on uniform [1024, 1025].
    #[value(name = "fig4_right")]
    Fig4Right,
}

impl FigureId {
    pub fn name(self) -> &'static str {
        match self {
            FigureId::Fig2 => "fig2",
            FigureId::Fig3Left => "fig3_left",
            FigureId::Fig3Right => "fig3_right",
            FigureId::Fig4Left => "fig4_left",
            FigureId::Fig4Right => "fig4_right",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum FigurePlan {
    Bounds(BoundsGrid),
    Run(RunSpec),
}

pub const MASTER_SEED: u64 = 20_240_601;
pub const DATA_SEED: u64 = 7;
const N_GRID: [usize; 9] = [
    100, 316, 1_000, 3_162, 10_000, 31_623, 100_000, 316_228, 1_000_000,
];
const LAMBDA_GRID: [f64; 8] = [0.9, 0.5, 0.1, 1e-2, 1e-3, 1e-4, 1e-5, 1e-6];

fn base(lo: f64, hi: f64, n: usize, algorithms: Vec<Algorithm>) -> ExperimentConfig {
    let mut c = ExperimentConfig::new(
        DatasetSpec::uniform(lo, hi, n, DATA_SEED),
        algorithms,
        MASTER_SEED,
    );
    c.precision = FpFormat::BINARY32;
    c.repetitions = 30;
    c
}

pub fn figure_plan(id: FigureId) -> FigurePlan {
    let textbook = Algorithm::textbook(SummationScheme::Recursive);
    let two_pass = Algorithm::two_pass(SummationScheme::Recursive);
    let n_sweep = Some(SweepGrid::N(N_GRID.to_vec()));
    match id {
        FigureId::Fig2 => FigurePlan::Bounds(BoundsGrid {
            n: (1..=30).map(|k| 1u64 << k).collect(),
            u: FpFormat::BINARY32.unit_roundoff(),
            lambdas: vec![0.1],
            kappa: 1.0,
            k1: 1.0,
            k2: 1.0,
            methods: vec![
                BoundMethod::BcPairwiseSum,
                BoundMethod::AhPairwiseSum,
                BoundMethod::HiPairwiseSum,
            ],
        }),
        FigureId::Fig3Left => FigurePlan::Run(RunSpec {
            experiment: base(0.0, 1.0, N_GRID[0], vec![textbook]),
            sweep: n_sweep,
        }),
        FigureId::Fig3Right => FigurePlan::Run(RunSpec {
            experiment: base(0.0, 1.0, 1_000_000, vec![textbook]),
            sweep: Some(SweepGrid::Lambda(LAMBDA_GRID.to_vec())),
        }),
        FigureId::Fig4Left => FigurePlan::Run(RunSpec {
            experiment: base(-1.0, 1.0, N_GRID[0], vec![textbook, two_pass]),
            sweep: n_sweep,
        }),
        FigureId::Fig4Right => FigurePlan::Run(RunSpec {
            experiment: base(1024.0, 1025.0, N_GRID[0], vec![textbook, two_pass]),
            sweep: n_sweep,
        }),
    }
}
