//! Summation, mean and variance kernels evaluated under a
//! [`RoundingContext`].
//!
//! Every kernel performs its rounded operations in one fixed order so that
//! the random stream is consumed canonically:
//!
//! * textbook: squares in index order, their sum, the plain sum, the
//!   square of that sum, one division by `n`, one subtraction;
//! * two-pass: the mean (sum then one division by `n`), the deviations in
//!   index order, their squares in index order, their sum.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fp::{FpFormat, FpValue, RoundingContext};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SummationScheme {
    /// Left-to-right accumulation.
    Recursive,
    /// Balanced binary tree over the input zero-padded to a power of two.
    Pairwise,
}

impl SummationScheme {
    pub fn sum(self, x: &[FpValue], fmt: FpFormat, ctx: &mut RoundingContext) -> Result<FpValue> {
        match self {
            SummationScheme::Recursive => recursive_sum(x, fmt, ctx),
            SummationScheme::Pairwise => pairwise_sum(x, fmt, ctx),
        }
    }

    /// Number of rounded additions performed on `n` inputs.
    pub fn additions(self, n: usize) -> u64 {
        match self {
            SummationScheme::Recursive => n.saturating_sub(1) as u64,
            SummationScheme::Pairwise => (n.max(1).next_power_of_two() - 1) as u64,
        }
    }
}

/// Tree height `h = ceil(log2 n)`; zero for `n <= 1`.
pub fn tree_height(n: u64) -> u32 {
    if n <= 1 {
        0
    } else {
        64 - (n - 1).leading_zeros()
    }
}

pub fn recursive_sum(x: &[FpValue], fmt: FpFormat, ctx: &mut RoundingContext) -> Result<FpValue> {
    let (first, rest) = x.split_first().ok_or(Error::EmptyInput)?;
    rest.iter()
        .try_fold(*first, |acc, &xi| ctx.add(acc, xi, fmt))
}

pub fn pairwise_sum(x: &[FpValue], fmt: FpFormat, ctx: &mut RoundingContext) -> Result<FpValue> {
    if x.is_empty() {
        return Err(Error::EmptyInput);
    }
    let mut level = x.to_vec();
    level.resize(x.len().next_power_of_two(), FpValue::ZERO);
    while level.len() > 1 {
        let half = level.len() / 2;
        for i in 0..half {
            level[i] = ctx.add(level[2 * i], level[2 * i + 1], fmt)?;
        }
        level.truncate(half);
    }
    Ok(level[0])
}

/// Sum per `scheme` followed by one rounded division by `n`.
pub fn mean(
    x: &[FpValue],
    fmt: FpFormat,
    ctx: &mut RoundingContext,
    scheme: SummationScheme,
) -> Result<FpValue> {
    let s = scheme.sum(x, fmt, ctx)?;
    ctx.div_by(s, x.len() as f64, fmt)
}

/// Computed textbook variance together with the computed sums it used.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TextbookParts {
    pub value: FpValue,
    pub sum: FpValue,
    pub sum_squares: FpValue,
}

/// Computed two-pass variance together with the computed mean it used.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TwoPassParts {
    pub value: FpValue,
    pub mean: FpValue,
}

/// `y = sum x_i^2 - s^2 / n` (unnormalized).
pub fn textbook_variance(
    x: &[FpValue],
    fmt: FpFormat,
    ctx: &mut RoundingContext,
    scheme: SummationScheme,
) -> Result<FpValue> {
    textbook_variance_parts(x, fmt, ctx, scheme).map(|p| p.value)
}

pub fn textbook_variance_parts(
    x: &[FpValue],
    fmt: FpFormat,
    ctx: &mut RoundingContext,
    scheme: SummationScheme,
) -> Result<TextbookParts> {
    if x.is_empty() {
        return Err(Error::EmptyInput);
    }
    let squares = x
        .iter()
        .map(|&xi| ctx.mul(xi, xi, fmt))
        .collect::<Result<Vec<_>>>()?;
    let sum_sq = scheme.sum(&squares, fmt, ctx)?;
    let s = scheme.sum(x, fmt, ctx)?;
    let s2 = ctx.mul(s, s, fmt)?;
    let t = ctx.div_by(s2, x.len() as f64, fmt)?;
    let value = ctx.sub(sum_sq, t, fmt)?;
    Ok(TextbookParts {
        value,
        sum: s,
        sum_squares: sum_sq,
    })
}

/// `z = sum (x_i - m)^2` (unnormalized).
pub fn two_pass_variance(
    x: &[FpValue],
    fmt: FpFormat,
    ctx: &mut RoundingContext,
    scheme: SummationScheme,
) -> Result<FpValue> {
    two_pass_variance_parts(x, fmt, ctx, scheme).map(|p| p.value)
}

pub fn two_pass_variance_parts(
    x: &[FpValue],
    fmt: FpFormat,
    ctx: &mut RoundingContext,
    scheme: SummationScheme,
) -> Result<TwoPassParts> {
    if x.is_empty() {
        return Err(Error::EmptyInput);
    }
    let m = mean(x, fmt, ctx, scheme)?;
    let dev = x
        .iter()
        .map(|&xi| ctx.sub(xi, m, fmt))
        .collect::<Result<Vec<_>>>()?;
    let squares = dev
        .iter()
        .map(|&d| ctx.mul(d, d, fmt))
        .collect::<Result<Vec<_>>>()?;
    let value = scheme.sum(&squares, fmt, ctx)?;
    Ok(TwoPassParts { value, mean: m })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum VarianceKind {
    Textbook,
    TwoPass,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct VarianceAlgorithm {
    pub kind: VarianceKind,
    pub scheme: SummationScheme,
}

impl VarianceAlgorithm {
    pub fn run(self, x: &[FpValue], fmt: FpFormat, ctx: &mut RoundingContext) -> Result<FpValue> {
        match self.kind {
            VarianceKind::Textbook => textbook_variance(x, fmt, ctx, self.scheme),
            VarianceKind::TwoPass => two_pass_variance(x, fmt, ctx, self.scheme),
        }
    }
}

/// Everything the harness can run: a plain sum or a variance algorithm.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum Algorithm {
    Sum(SummationScheme),
    Variance(VarianceAlgorithm),
}

/// Result of one run, with the intermediate needed for bias analysis:
/// the computed sum for sums and textbook, the computed mean for two-pass.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RunOutput {
    pub value: FpValue,
    pub aux: FpValue,
}

impl Algorithm {
    pub const ALL: [Algorithm; 6] = [
        Algorithm::Sum(SummationScheme::Recursive),
        Algorithm::Sum(SummationScheme::Pairwise),
        Algorithm::textbook(SummationScheme::Recursive),
        Algorithm::textbook(SummationScheme::Pairwise),
        Algorithm::two_pass(SummationScheme::Recursive),
        Algorithm::two_pass(SummationScheme::Pairwise),
    ];

    pub const fn textbook(scheme: SummationScheme) -> Self {
        Algorithm::Variance(VarianceAlgorithm {
            kind: VarianceKind::Textbook,
            scheme,
        })
    }

    pub const fn two_pass(scheme: SummationScheme) -> Self {
        Algorithm::Variance(VarianceAlgorithm {
            kind: VarianceKind::TwoPass,
            scheme,
        })
    }

    pub fn scheme(self) -> SummationScheme {
        match self {
            Algorithm::Sum(s) => s,
            Algorithm::Variance(v) => v.scheme,
        }
    }

    pub fn is_sum(self) -> bool {
        matches!(self, Algorithm::Sum(_))
    }

    /// Stable small integer used to address this algorithm's random lane.
    pub fn lane(self) -> u8 {
        Self::ALL.iter().position(|a| *a == self).unwrap() as u8
    }

    pub fn name(self) -> &'static str {
        use SummationScheme::*;
        use VarianceKind::*;
        match self {
            Algorithm::Sum(Recursive) => "sum_recursive",
            Algorithm::Sum(Pairwise) => "sum_pairwise",
            Algorithm::Variance(VarianceAlgorithm {
                kind: Textbook,
                scheme: Recursive,
            }) => "textbook_recursive",
            Algorithm::Variance(VarianceAlgorithm {
                kind: Textbook,
                scheme: Pairwise,
            }) => "textbook_pairwise",
            Algorithm::Variance(VarianceAlgorithm {
                kind: TwoPass,
                scheme: Recursive,
            }) => "twopass_recursive",
            Algorithm::Variance(VarianceAlgorithm {
                kind: TwoPass,
                scheme: Pairwise,
            }) => "twopass_pairwise",
        }
    }

    pub fn run(self, x: &[FpValue], fmt: FpFormat, ctx: &mut RoundingContext) -> Result<RunOutput> {
        match self {
            Algorithm::Sum(s) => {
                let v = s.sum(x, fmt, ctx)?;
                Ok(RunOutput { value: v, aux: v })
            }
            Algorithm::Variance(VarianceAlgorithm {
                kind: VarianceKind::Textbook,
                scheme,
            }) => {
                let p = textbook_variance_parts(x, fmt, ctx, scheme)?;
                Ok(RunOutput {
                    value: p.value,
                    aux: p.sum,
                })
            }
            Algorithm::Variance(VarianceAlgorithm {
                kind: VarianceKind::TwoPass,
                scheme,
            }) => {
                let p = two_pass_variance_parts(x, fmt, ctx, scheme)?;
                Ok(RunOutput {
                    value: p.value,
                    aux: p.mean,
                })
            }
        }
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Algorithm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let key = s.trim().to_ascii_lowercase().replace(['-', ' '], "_");
        let key = match key.as_str() {
            "textbook" => "textbook_recursive",
            "twopass" | "two_pass" => "twopass_recursive",
            "sum" => "sum_recursive",
            k => k,
        }
        .replace("two_pass", "twopass");
        Self::ALL
            .iter()
            .copied()
            .find(|a| a.name() == key)
            .ok_or_else(|| Error::Config(format!("unknown algorithm '{s}'")))
    }
}

impl TryFrom<String> for Algorithm {
    type Error = Error;

    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<Algorithm> for String {
    fn from(a: Algorithm) -> String {
        a.name().to_string()
    }
}
