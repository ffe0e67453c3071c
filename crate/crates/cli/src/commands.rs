use std::fs;
use std::path::{Path, PathBuf};

use srvar_core::harness::{self, ExperimentOutput};
use srvar_core::oracle::{relative_error, ExactMoments};
use srvar_core::rng::stream_id;
use srvar_core::{Algorithm, FpFormat, FpValue, RoundingContext, RoundingMode};

use crate::config::{BoundsGrid, Manifest, Overrides, RunSpec};
use crate::error::{CliError, Result};
use crate::figures::{figure_plan, FigureId, FigurePlan};
use crate::report;
use crate::table::{OutputFormat, Table};

/// Neighbours of `x`, its round-up probability and the observed frequency
/// of rounding up over `draws` roundings.
pub fn cmd_round(
    x: f64,
    fmt: FpFormat,
    mode: RoundingMode,
    seed: u64,
    draws: u64,
) -> Result<Table> {
    let (lo, hi) = fmt.neighbors(x)?;
    let p = fmt.round_up_probability(x)?;
    let mut ctx = RoundingContext::new(mode, seed, 0);
    let mut ups = 0u64;
    for _ in 0..draws {
        let r = ctx.round(x, fmt)?;
        if r.get() == hi.get() && lo.get() != hi.get() {
            ups += 1;
        }
    }
    let freq = (draws > 0).then(|| ups as f64 / draws as f64);
    let stderr = freq.map(|f| (f * (1.0 - f) / draws as f64).sqrt());
    let mut t = Table::new(&[
        "x",
        "precision",
        "mode",
        "lo",
        "hi",
        "p_up",
        "draws",
        "hi_frequency",
        "stderr",
    ]);
    t.push(vec![
        x.into(),
        fmt.precision().into(),
        mode.to_string().into(),
        lo.get().into(),
        hi.get().into(),
        p.into(),
        draws.into(),
        freq.into(),
        stderr.into(),
    ]);
    Ok(t)
}

/// Runs `alg` on `values` (projected onto the grid with RN) `reps` times.
/// Trial `t` uses the same random stream as trial `t` of an experiment
/// with the same seed.
pub fn cmd_compute(
    alg: Algorithm,
    values: &[f64],
    fmt: FpFormat,
    mode: RoundingMode,
    seed: u64,
    reps: u64,
) -> Result<Table> {
    if values.is_empty() {
        return Err(srvar_core::Error::EmptyInput.into());
    }
    let data: Vec<FpValue> = values
        .iter()
        .map(|&v| fmt.quantize(v))
        .collect::<srvar_core::Result<_>>()?;
    let m = ExactMoments::from_values(&data);
    let exact = if alg.is_sum() { m.sum() } else { m.variance()? };
    let reps = if mode == RoundingMode::Rn {
        1
    } else {
        reps.max(1)
    };
    let mut t = Table::new(&[
        "algorithm",
        "n",
        "precision",
        "mode",
        "seed",
        "trial_index",
        "value",
        "exact",
        "rel_error",
    ]);
    for trial in 0..reps {
        let mut ctx = RoundingContext::new(mode, seed, stream_id(trial, alg.lane()));
        let v = alg.run(&data, fmt, &mut ctx)?.value.get();
        t.push(vec![
            alg.name().into(),
            data.len().into(),
            fmt.precision().into(),
            mode.to_string().into(),
            seed.into(),
            trial.into(),
            v.into(),
            exact.to_f64().into(),
            relative_error(v, &exact).ok().into(),
        ]);
    }
    Ok(t)
}

fn prepare_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))
}

fn file_name(p: &Path) -> String {
    p.file_name()
        .map(|f| f.to_string_lossy().into_owned())
        .unwrap_or_default()
}

/// Writes `bounds.<ext>` and the manifest for a bound grid.
pub fn cmd_bounds_table(
    grid: &BoundsGrid,
    dir: &Path,
    format: OutputFormat,
    figure: Option<FigureId>,
) -> Result<Vec<PathBuf>> {
    if grid.n.is_empty() {
        return Err(CliError::Config("empty n grid".into()));
    }
    prepare_dir(dir)?;
    let table = report::grid_bounds_table(grid);
    let path = table.save(dir, "bounds", format)?;
    let mut manifest = Manifest::new("bounds-table", format);
    manifest.figure = figure.map(|f| f.name().to_string());
    manifest.bounds = Some(grid.clone());
    manifest.files = vec![file_name(&path)];
    let mpath = manifest.save(dir)?;
    Ok(vec![path, mpath])
}

pub fn run_spec(spec: &RunSpec) -> Result<ExperimentOutput> {
    Ok(match &spec.sweep {
        Some(grid) => harness::coverage_sweep(&spec.experiment, grid)?,
        None => harness::run_experiment(&spec.experiment)?,
    })
}

/// Full harness run: writes trials, summary, bounds and the manifest.
pub fn cmd_experiment(
    spec: &RunSpec,
    dir: &Path,
    format: OutputFormat,
    figure: Option<FigureId>,
) -> Result<Vec<PathBuf>> {
    spec.experiment.validate()?;
    let out = run_spec(spec)?;
    prepare_dir(dir)?;
    let p = spec.experiment.precision.precision();
    let paths = vec![
        report::trials_table(&out.trials, p).save(dir, "trials", format)?,
        report::summary_table(&out.summaries).save(dir, "summary", format)?,
        report::summary_bounds_table(&out.summaries).save(dir, "bounds", format)?,
    ];
    let mut manifest = Manifest::new("experiment", format);
    manifest.figure = figure.map(|f| f.name().to_string());
    manifest.run = Some(spec.clone());
    manifest.files = paths.iter().map(|p| file_name(p)).collect();
    let mpath = manifest.save(dir)?;
    Ok(paths.into_iter().chain([mpath]).collect())
}

/// Figure data under `<dir>/<figure-id>/`.
pub fn cmd_figures_data(
    id: FigureId,
    overrides: &Overrides,
    dir: &Path,
    format: OutputFormat,
) -> Result<Vec<PathBuf>> {
    let dir = dir.join(id.name());
    match figure_plan(id) {
        FigurePlan::Bounds(mut grid) => {
            overrides.apply_bounds(&mut grid)?;
            cmd_bounds_table(&grid, &dir, format, Some(id))
        }
        FigurePlan::Run(mut spec) => {
            overrides.apply(&mut spec)?;
            cmd_experiment(&spec, &dir, format, Some(id))
        }
    }
}

/// Prints a table to stdout.
pub fn print_table(t: &Table, format: OutputFormat) -> Result<()> {
    let stdout = std::io::stdout();
    t.write_to(stdout.lock(), format)
}
