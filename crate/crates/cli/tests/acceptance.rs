//! Acceptance checks. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any check fails.

use std::path::Path;
use std::process::{Command, ExitCode};
use std::time::Instant;

use num::{BigInt, BigRational, Signed};
use srvar_core::bounds::{self, Regime, TextbookMethod};
use srvar_core::harness::{self, DatasetSpec, ExperimentConfig, SweepGrid};
use srvar_core::oracle::ExactMoments;
use srvar_core::{
    Algorithm, BoundMethod, BoundQuery, FpFormat, Op, RoundingContext, StreamRng, SummationScheme,
};

type Check = Result<String, String>;

fn ensure(cond: bool, msg: impl Into<String>) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg.into())
    }
}

fn fmt(p: u32) -> FpFormat {
    FpFormat::new(p).unwrap()
}

fn hi_frequency(x: f64, f: FpFormat, draws: u64, seed: u64) -> f64 {
    let (_, hi) = f.neighbors(x).unwrap();
    let mut ctx = RoundingContext::stochastic(seed, 0);
    let ups = (0..draws)
        .filter(|_| ctx.round(x, f).unwrap().get() == hi.get())
        .count();
    ups as f64 / draws as f64
}

fn sr_unbiasedness() -> Check {
    const DRAWS: u64 = 1_000_000;
    let freq = hi_frequency(1.125, fmt(3), DRAWS, 1);
    ensure(
        (freq - 0.5).abs() <= 4.0 * 0.0005,
        format!("round(1.125, p=3): {freq}"),
    )?;
    let mut rng = StreamRng::new(99, 0);
    let mut worst: f64 = 0.0;
    for p in [3, 8, 24] {
        let f = fmt(p);
        let mut points = 0;
        while points < 20 {
            let x = (1.0 + rng.unit()) * 2f64.powi((rng.unit() * 40.0) as i32 - 20);
            if f.is_representable(x) {
                continue;
            }
            points += 1;
            let prob = f.round_up_probability(x).unwrap();
            let freq = hi_frequency(x, f, DRAWS, points);
            let z = (freq - prob).abs() / (prob * (1.0 - prob) / DRAWS as f64).sqrt();
            worst = worst.max(z);
            ensure(
                z <= 4.0,
                format!("x = {x:e}, p = {p}: frequency {freq} vs {prob}"),
            )?;
        }
    }
    Ok(format!(
        "1.125 -> {freq:.5}; 60 points, worst deviation {worst:.2} sigma"
    ))
}

fn rational(x: f64) -> BigRational {
    BigRational::from_float(x).unwrap()
}

fn per_op_bound() -> Check {
    let mut rng = StreamRng::new(5, 0);
    let ops = [Op::Add, Op::Sub, Op::Mul, Op::Div];
    let mut checked = 0;
    for i in 0..100_000u64 {
        let p = 2 + (rng.unit() * 23.0) as u32;
        let f = fmt(p);
        let draw = |rng: &mut StreamRng| {
            let sign = if rng.unit() < 0.5 { -1.0 } else { 1.0 };
            let x = sign * (1.0 + rng.unit()) * 2f64.powi((rng.unit() * 60.0) as i32 - 30);
            f.quantize(x).unwrap()
        };
        let (a, b) = (draw(&mut rng), draw(&mut rng));
        let op = ops[(rng.unit() * 4.0) as usize];
        let (ra, rb) = (rational(a.get()), rational(b.get()));
        let exact = match op {
            Op::Add => &ra + &rb,
            Op::Sub => &ra - &rb,
            Op::Mul => &ra * &rb,
            Op::Div => &ra / &rb,
        };
        let u = rational(f.unit_roundoff());
        for mut ctx in [
            RoundingContext::nearest(),
            RoundingContext::stochastic(6, i),
        ] {
            let got = ctx
                .apply(op, a, b, f)
                .map_err(|e| format!("{op:?} failed: {e}"))?;
            let err = (rational(got.get()) - &exact).abs();
            ensure(
                err <= &u * exact.abs(),
                format!("p = {p}: {} {op:?} {} -> {}", a.get(), b.get(), got.get()),
            )?;
            checked += 1;
        }
    }
    Ok(format!("{checked} roundings within u|x|"))
}

fn oracle_identity() -> Check {
    let mut rng = StreamRng::new(11, 0);
    for _ in 0..1000 {
        let n = 1 + (rng.unit() * 64.0) as usize;
        let x: Vec<f64> = (0..n)
            .map(|_| {
                ((rng.unit() * 8192.0) as i64 - 4096) as f64 / 2f64.powi((rng.unit() * 20.0) as i32)
            })
            .collect();
        let q: Vec<BigRational> = x.iter().map(|&v| rational(v)).collect();
        let nn = BigRational::from_integer(BigInt::from(n));
        let s: BigRational = q.iter().sum();
        let sq: BigRational = q.iter().map(|v| v * v).sum();
        let y = sq - &s * &s / &nn;
        let mean = &s / &nn;
        let z: BigRational = q.iter().map(|v| (v - &mean) * (v - &mean)).sum();
        ensure(y == z, format!("textbook != two-pass for {x:?}"))?;
        let m = ExactMoments::new(&x);
        ensure(
            m.variance().unwrap().as_ratio() == &y,
            "oracle textbook value differs",
        )?;
        ensure(
            m.two_pass_variance().unwrap().as_ratio() == &z,
            "oracle two-pass value differs",
        )?;
        ensure(!y.is_negative(), "negative variance")?;
    }
    Ok("1000 vectors, y = z exactly".into())
}

fn k1_constant() -> Check {
    let c = ExactMoments::new(&[0.5, 0.25, -0.5, -0.25]).condition_numbers();
    let want = 1.5 / 2.5f64.sqrt();
    ensure(
        (c.k1 - want).abs() <= 1e-10 * want,
        format!("K1 = {}", c.k1),
    )?;
    ensure(
        c.k1 < 1.0 && c.k1 <= c.k2,
        format!("K1 = {}, K2 = {}", c.k1, c.k2),
    )?;
    Ok(format!("K1 = {:.10} (< 1), K2 = {:.10}", c.k1, c.k2))
}

fn bound_coverage() -> Check {
    let algs = vec![
        Algorithm::Sum(SummationScheme::Pairwise),
        Algorithm::textbook(SummationScheme::Recursive),
        Algorithm::two_pass(SummationScheme::Recursive),
    ];
    let mut cfg = ExperimentConfig::new(DatasetSpec::uniform(0.0, 1.0, 10_000, 3), algs, 21);
    cfg.repetitions = 1000;
    cfg.lambdas = vec![0.1];
    let out = harness::run_experiment(&cfg).map_err(|e| e.to_string())?;
    let threshold = 0.9 - 3.0 * (0.09f64 / 1000.0).sqrt();
    let wanted = [
        BoundMethod::BcPairwiseSum,
        BoundMethod::BcTextbook,
        BoundMethod::BcTwopass,
        BoundMethod::AhTextbook,
        BoundMethod::AhTwopass,
        BoundMethod::DmTextbook,
    ];
    let mut report = Vec::new();
    for m in wanted {
        let cov = out
            .summaries
            .iter()
            .flat_map(|s| &s.bounds)
            .find(|b| b.method == m)
            .and_then(|b| b.coverage)
            .ok_or(format!("{m} missing"))?;
        ensure(
            cov >= threshold,
            format!("{m} coverage {cov} < {threshold:.3}"),
        )?;
        report.push(format!("{m}={cov:.3}"));
    }
    Ok(report.join(" "))
}

fn sqrt_n_scaling() -> Check {
    let mut cfg = ExperimentConfig::new(
        DatasetSpec::uniform(0.0, 1.0, 1000, 5),
        vec![Algorithm::textbook(SummationScheme::Recursive)],
        8,
    );
    cfg.include_rn = false;
    let ns = [1_000, 10_000, 100_000, 1_000_000];
    let out =
        harness::coverage_sweep(&cfg, &SweepGrid::N(ns.to_vec())).map_err(|e| e.to_string())?;
    let pts: Vec<(f64, f64)> = out
        .summaries
        .iter()
        .map(|s| ((s.n as f64).ln(), s.trial_rel_error_mean.unwrap().ln()))
        .collect();
    let k = pts.len() as f64;
    let (mx, my) = (
        pts.iter().map(|p| p.0).sum::<f64>() / k,
        pts.iter().map(|p| p.1).sum::<f64>() / k,
    );
    let slope = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum::<f64>()
        / pts.iter().map(|p| (p.0 - mx).powi(2)).sum::<f64>();
    ensure((0.35..=0.65).contains(&slope), format!("slope {slope}"))?;
    Ok(format!("slope {slope:.3}"))
}

fn bias_signs() -> Check {
    let mut cfg = ExperimentConfig::new(
        DatasetSpec::uniform(0.5, 1.0, 10_000, 13),
        vec![Algorithm::textbook(SummationScheme::Recursive)],
        17,
    );
    cfg.precision = fmt(8);
    cfg.repetitions = 10_000;
    let r = harness::empirical_bias(&cfg).map_err(|e| e.to_string())?;
    let detail = format!(
        "textbook {:.3e} (se {:.2e}; plain {:.3e}, se {:.2e}), two-pass {:.3e} (se {:.2e}), V(s)/n {:.3e}, bound {:.3e}",
        r.textbook_controlled.bias,
        r.textbook_controlled.stderr,
        r.textbook.bias,
        r.textbook.stderr,
        r.twopass.bias,
        r.twopass.stderr,
        r.predicted_twopass_bias,
        r.textbook_bias_bound
    );
    ensure(
        r.textbook_negative,
        format!("textbook bias not negative: {detail}"),
    )?;
    ensure(
        r.twopass_positive,
        format!("two-pass bias not positive: {detail}"),
    )?;
    ensure(
        r.textbook_controlled.bias.abs() <= r.textbook_bias_bound,
        format!("bias exceeds bound: {detail}"),
    )?;
    ensure(r.magnitudes_agree, format!("magnitudes differ: {detail}"))?;
    Ok(detail)
}

const U23: f64 = 1.0 / 8_388_608.0;

fn figure_two_ordering() -> Check {
    for e in 10..=30 {
        let q = BoundQuery::new(1u64 << e, U23, 0.1);
        let ah = BoundMethod::AhPairwiseSum.evaluate(&q).unwrap().value;
        let hi = bounds::hallman_ipsen_bound(&q, 0.05, 0.05).unwrap().value;
        ensure(ah < hi, format!("n = 2^{e}: AH {ah:e} >= HI {hi:e}"))?;
    }
    Ok("AH < HI for n = 2^10..2^30".into())
}

fn lambda_crossover() -> Check {
    let q = BoundQuery::new(1_000_000, U23, 1e-5);
    let ah = BoundMethod::AhTextbook.evaluate(&q).unwrap().value;
    let bc = BoundMethod::BcTextbook.evaluate(&q).unwrap().value;
    ensure(ah < bc, format!("n = 1e6: AH {ah:e} >= BC {bc:e}"))?;
    let q = q.with_n(1_000_000_000);
    let bc_l = bounds::asymptotic_textbook_bound(Regime::LargeNu, TextbookMethod::Bc, &q);
    let ah_l = bounds::asymptotic_textbook_bound(Regime::LargeNu, TextbookMethod::Ah, &q);
    ensure(bc_l < ah_l, format!("n = 1e9: BC {bc_l:e} >= AH {ah_l:e}"))?;
    Ok(format!(
        "n=1e6: AH {ah:.3e} < BC {bc:.3e}; n=1e9: BC {bc_l:.3e} < AH {ah_l:.3e}"
    ))
}

fn stagnation() -> Check {
    let cfg = ExperimentConfig::new(
        DatasetSpec::uniform(1024.0, 1025.0, 1_000_000, 19),
        vec![],
        23,
    );
    let s = harness::stagnation_demo(&cfg, &[1_000_000]).map_err(|e| e.to_string())?;
    let (tb, tp) = (&s[0], &s[1]);
    let sr = tb.mean_rel_error.unwrap();
    let rn = tb.rn_rel_error.unwrap();
    let rn_two = tp.rn_rel_error.unwrap();
    ensure(sr < rn, format!("textbook SR {sr:e} >= RN {rn:e}"))?;
    ensure(
        rn_two < rn,
        format!("two-pass RN {rn_two:e} >= textbook RN {rn:e}"),
    )?;
    Ok(format!(
        "textbook SR {sr:.3e} < RN {rn:.3e}; two-pass RN {rn_two:.3e}"
    ))
}

fn run_cli(dir: &Path, config: &Path, threads: &str) -> Result<Vec<u8>, String> {
    let status = Command::new(env!("CARGO_BIN_EXE_srvar"))
        .args(["experiment", "--config"])
        .arg(config)
        .args(["--threads", threads, "--out-dir"])
        .arg(dir)
        .output()
        .map_err(|e| e.to_string())?;
    ensure(
        status.status.success(),
        String::from_utf8_lossy(&status.stderr),
    )?;
    std::fs::read(dir.join("trials.csv")).map_err(|e| e.to_string())
}

fn determinism() -> Check {
    let tmp = tempfile::tempdir().map_err(|e| e.to_string())?;
    let config = tmp.path().join("run.toml");
    std::fs::write(
        &config,
        r#"
[experiment]
precision = 11
repetitions = 40
algorithms = ["sum_pairwise", "textbook_recursive", "twopass_pairwise"]
lambdas = [0.1, 0.01]
master_seed = 4242

[experiment.dataset]
lo = -1.0
hi = 3.0
n = 2000
seed = 9
"#,
    )
    .map_err(|e| e.to_string())?;
    let runs: Vec<Vec<u8>> = [("a", "1"), ("b", "1"), ("c", "4"), ("d", "0")]
        .iter()
        .map(|(d, t)| run_cli(&tmp.path().join(d), &config, t))
        .collect::<Result<_, _>>()?;
    ensure(
        runs.iter().all(|r| r == &runs[0]),
        "trials.csv differs between runs",
    )?;
    // re-running from the manifest alone reproduces the output
    let again = run_cli(
        &tmp.path().join("e"),
        &tmp.path().join("a/manifest.json"),
        "2",
    )?;
    ensure(again == runs[0], "manifest re-run differs")?;
    Ok(format!(
        "{} bytes identical across 5 runs (serial, parallel, manifest)",
        runs[0].len()
    ))
}

type Criterion = (&'static str, fn() -> Check);

fn main() -> ExitCode {
    let checks: [Criterion; 11] = [
        ("SR unbiasedness", sr_unbiasedness),
        ("per-op error bound", per_op_bound),
        ("oracle identity y = z", oracle_identity),
        ("K1 constant", k1_constant),
        ("bound coverage", bound_coverage),
        ("sqrt(n) scaling", sqrt_n_scaling),
        ("bias signs", bias_signs),
        ("pairwise bound ordering", figure_two_ordering),
        ("lambda crossover", lambda_crossover),
        ("stagnation", stagnation),
        ("determinism", determinism),
    ];
    let mut failed = 0;
    for (i, (name, check)) in checks.iter().enumerate() {
        let start = Instant::now();
        let result = check();
        let secs = start.elapsed().as_secs_f64();
        match result {
            Ok(msg) => println!("PASS [{:>2}] {name} ({secs:.1}s): {msg}", i + 1),
            Err(msg) => {
                failed += 1;
                println!("FAIL [{:>2}] {name} ({secs:.1}s): {msg}", i + 1);
            }
        }
    }
    println!(
        "acceptance: {} passed, {failed} failed",
        checks.len() - failed
    );
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
