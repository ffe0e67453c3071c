//! Exact reference values and conditioning.
//!
//! Every carrier value is a dyadic rational, so sums, means and both
//! variance formulas are computed without any rounding: inputs are scaled to
//! integers by a common power of two and accumulated in big integers.

use std::fmt;

use num::bigint::Sign;
use num::{BigInt, BigRational, One, Signed, ToPrimitive, Zero};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::fp::FpValue;

/// An exact rational number.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ExactValue(BigRational);

impl ExactValue {
    pub fn from_f64(x: f64) -> Self {
        ExactValue(BigRational::from_float(x).expect("finite carrier value"))
    }

    pub fn from_ratio(r: BigRational) -> Self {
        ExactValue(r)
    }

    pub fn as_ratio(&self) -> &BigRational {
        &self.0
    }

    pub fn is_zero(&self) -> bool {
        self.0.is_zero()
    }

    /// Nearest carrier value.
    pub fn to_f64(&self) -> f64 {
        self.0.to_f64().unwrap_or(f64::NAN)
    }
}

impl fmt::Display for ExactValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(&self.0, f)
    }
}

/// `(mantissa, exponent)` with `x == mantissa * 2^exponent` and an odd
/// mantissa (or zero).
fn decode(x: f64) -> (i64, i32) {
    if x == 0.0 {
        return (0, 0);
    }
    let bits = x.to_bits();
    let sign = if bits >> 63 == 0 { 1 } else { -1 };
    let biased = ((bits >> 52) & 0x7ff) as i32;
    let frac = (bits & ((1 << 52) - 1)) as i64;
    let (mut m, mut e) = if biased == 0 {
        (frac, -1074)
    } else {
        (frac | (1 << 52), biased - 1075)
    };
    let tz = m.trailing_zeros();
    m >>= tz;
    e += tz as i32;
    (sign * m, e)
}

fn scaled(num: BigInt, den: BigInt, exp2: i32) -> BigRational {
    if exp2 >= 0 {
        BigRational::new(num << exp2 as usize, den)
    } else {
        BigRational::new(num, den << (-exp2) as usize)
    }
}

/// Integer power sums of a dataset scaled by `2^-exp`.
///
/// With `x_i = k_i 2^exp`: `sum = sum k_i`, `sum_sq = sum k_i^2`,
/// `abs_sum = sum |k_i|`.
#[derive(Debug, Clone)]
pub struct ExactMoments {
    n: usize,
    exp: i32,
    ints: Vec<BigInt>,
    sum: BigInt,
    sum_sq: BigInt,
    abs_sum: BigInt,
}

impl ExactMoments {
    pub fn new(x: &[f64]) -> Self {
        let decoded: Vec<(i64, i32)> = x.iter().map(|&v| decode(v)).collect();
        let exp = decoded
            .iter()
            .filter(|(m, _)| *m != 0)
            .map(|&(_, e)| e)
            .min()
            .unwrap_or(0);
        let ints: Vec<BigInt> = decoded
            .iter()
            .map(|&(m, e)| BigInt::from(m) << (e - exp) as usize)
            .collect();
        let mut sum = BigInt::zero();
        let mut sum_sq = BigInt::zero();
        let mut abs_sum = BigInt::zero();
        for k in &ints {
            sum += k;
            sum_sq += k * k;
            if k.sign() == Sign::Minus {
                abs_sum -= k;
            } else {
                abs_sum += k;
            }
        }
        Self {
            n: x.len(),
            exp,
            ints,
            sum,
            sum_sq,
            abs_sum,
        }
    }

    pub fn from_values(x: &[FpValue]) -> Self {
        let raw: Vec<f64> = x.iter().map(|v| v.get()).collect();
        Self::new(&raw)
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn sum(&self) -> ExactValue {
        ExactValue(scaled(self.sum.clone(), BigInt::one(), self.exp))
    }

    pub fn mean(&self) -> Result<ExactValue> {
        if self.n == 0 {
            return Err(Error::EmptyInput);
        }
        Ok(ExactValue(scaled(
            self.sum.clone(),
            BigInt::from(self.n),
            self.exp,
        )))
    }

    /// `n * sum x_i^2 - s^2`, scaled by `2^-2exp`; `y = this / n`.
    fn centered_numerator(&self) -> BigInt {
        BigInt::from(self.n) * &self.sum_sq - &self.sum * &self.sum
    }

    /// Textbook formula `sum x_i^2 - s^2 / n`.
    pub fn variance(&self) -> Result<ExactValue> {
        if self.n == 0 {
            return Err(Error::EmptyInput);
        }
        Ok(ExactValue(scaled(
            self.centered_numerator(),
            BigInt::from(self.n),
            2 * self.exp,
        )))
    }

    /// Two-pass formula `sum (x_i - m)^2`, evaluated term by term.
    pub fn two_pass_variance(&self) -> Result<ExactValue> {
        if self.n == 0 {
            return Err(Error::EmptyInput);
        }
        let n = BigInt::from(self.n);
        let mut acc = BigInt::zero();
        for k in &self.ints {
            let d = &n * k - &self.sum;
            acc += &d * &d;
        }
        Ok(ExactValue(scaled(acc, &n * &n, 2 * self.exp)))
    }

    pub fn condition_numbers(&self) -> ConditionReport {
        let sum_is_zero = self.sum.is_zero();
        let kappa = if sum_is_zero {
            f64::INFINITY
        } else {
            BigRational::new(self.abs_sum.clone(), self.sum.abs())
                .to_f64()
                .unwrap_or(f64::INFINITY)
        };
        let c = self.centered_numerator();
        let variance_is_zero = c.is_zero();
        let (k1, k2) = if variance_is_zero {
            (f64::INFINITY, f64::INFINITY)
        } else {
            // K1^2 = ||x||_1^2 / (n y) = A^2 / c and
            // K2^2 = ||x||_2^2 / y = n Q / c, with the 2^exp scalings cancelling.
            let k1_sq = BigRational::new(&self.abs_sum * &self.abs_sum, c.clone());
            let k2_sq = BigRational::new(BigInt::from(self.n) * &self.sum_sq, c);
            (
                k1_sq.to_f64().unwrap_or(f64::INFINITY).sqrt(),
                k2_sq.to_f64().unwrap_or(f64::INFINITY).sqrt(),
            )
        };
        ConditionReport {
            kappa,
            k1,
            k2,
            sum_is_zero,
            variance_is_zero,
        }
    }
}

/// `kappa = ||x||_1 / |s|`, `K1 = ||x||_1 / sqrt(n y)`, `K2 = ||x||_2 / sqrt(y)`.
///
/// Undefined entries are `+inf`, flagged by `sum_is_zero` /
/// `variance_is_zero`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ConditionReport {
    pub kappa: f64,
    pub k1: f64,
    pub k2: f64,
    pub sum_is_zero: bool,
    pub variance_is_zero: bool,
}

pub fn exact_sum(x: &[FpValue]) -> ExactValue {
    ExactMoments::from_values(x).sum()
}

pub fn exact_mean(x: &[FpValue]) -> Result<ExactValue> {
    ExactMoments::from_values(x).mean()
}

pub fn exact_variance(x: &[FpValue]) -> Result<ExactValue> {
    ExactMoments::from_values(x).variance()
}

pub fn exact_two_pass_variance(x: &[FpValue]) -> Result<ExactValue> {
    ExactMoments::from_values(x).two_pass_variance()
}

pub fn condition_numbers(x: &[FpValue]) -> ConditionReport {
    ExactMoments::from_values(x).condition_numbers()
}

/// `|approx - exact| / |exact|`.
pub fn relative_error(approx: f64, exact: &ExactValue) -> Result<f64> {
    if exact.is_zero() {
        return Err(Error::UndefinedRelativeError);
    }
    if !approx.is_finite() {
        return Err(Error::NonFinite(approx));
    }
    let diff = BigRational::from_float(approx).unwrap() - &exact.0;
    Ok((diff.abs() / exact.0.abs())
        .to_f64()
        .unwrap_or(f64::INFINITY))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Moments {
    pub mean: f64,
    /// Unbiased (`1 / (N - 1)`) sample variance.
    pub variance: f64,
    /// Standard error of the mean.
    pub stderr: f64,
}

pub fn empirical_moments(samples: &[f64]) -> Result<Moments> {
    if samples.len() < 2 {
        return Err(Error::Domain {
            name: "sample count",
            value: samples.len() as f64,
            domain: ">= 2",
        });
    }
    let n = samples.len() as f64;
    let mean = samples.iter().sum::<f64>() / n;
    let variance = samples
        .iter()
        .map(|&s| (s - mean) * (s - mean))
        .sum::<f64>()
        / (n - 1.0);
    Ok(Moments {
        mean,
        variance,
        stderr: (variance / n).sqrt(),
    })
}
