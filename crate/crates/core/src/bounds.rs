//! Closed-form forward-error bounds for summation and variance under
//! stochastic rounding, their deterministic counterparts, bias predictions
//! and the first-order asymptotic forms.
//!
//! All bounds are relative errors. `u` is the stochastic-rounding unit
//! roundoff `2^(1-p)`; `lambda` is the failure probability, so a
//! probabilistic bound holds with probability at least `1 - lambda`. Values
//! are evaluated in `f64` and are diagnostics, not certified enclosures.
//!
//! `log n` is read as `h = ceil(log2 n)`, the height of the zero-padded
//! summation tree.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::algorithms::tree_height;
use crate::error::{Error, Result};

/// `gamma_n(t) = (1 + t)^n - 1`, evaluated as `expm1(n ln1p(t))`.
pub fn gamma(n: u64, t: f64) -> Result<f64> {
    if !t.is_finite() || t <= -1.0 {
        return Err(Error::Domain {
            name: "t",
            value: t,
            domain: "(-1, inf)",
        });
    }
    Ok((n as f64 * t.ln_1p()).exp_m1())
}

fn g(n: u64, t: f64) -> f64 {
    (n as f64 * t.ln_1p()).exp_m1()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum BoundMethod {
    DetTextbook,
    BcPairwiseSum,
    AhPairwiseSum,
    HiPairwiseSum,
    BcRecursiveSum,
    AhRecursiveSum,
    BcTextbook,
    AhTextbook,
    DmTextbook,
    BcTwopass,
    AhTwopass,
    BcPairwiseTextbook,
    AhPairwiseTextbook,
    BcPairwiseTwopass,
    AhPairwiseTwopass,
}

impl BoundMethod {
    pub const ALL: [BoundMethod; 15] = [
        BoundMethod::DetTextbook,
        BoundMethod::BcPairwiseSum,
        BoundMethod::AhPairwiseSum,
        BoundMethod::HiPairwiseSum,
        BoundMethod::BcRecursiveSum,
        BoundMethod::AhRecursiveSum,
        BoundMethod::BcTextbook,
        BoundMethod::AhTextbook,
        BoundMethod::DmTextbook,
        BoundMethod::BcTwopass,
        BoundMethod::AhTwopass,
        BoundMethod::BcPairwiseTextbook,
        BoundMethod::AhPairwiseTextbook,
        BoundMethod::BcPairwiseTwopass,
        BoundMethod::AhPairwiseTwopass,
    ];

    pub fn name(self) -> &'static str {
        use BoundMethod::*;
        match self {
            DetTextbook => "DET_TEXTBOOK",
            BcPairwiseSum => "BC_PAIRWISE_SUM",
            AhPairwiseSum => "AH_PAIRWISE_SUM",
            HiPairwiseSum => "HI_PAIRWISE_SUM",
            BcRecursiveSum => "BC_RECURSIVE_SUM",
            AhRecursiveSum => "AH_RECURSIVE_SUM",
            BcTextbook => "BC_TEXTBOOK",
            AhTextbook => "AH_TEXTBOOK",
            DmTextbook => "DM_TEXTBOOK",
            BcTwopass => "BC_TWOPASS",
            AhTwopass => "AH_TWOPASS",
            BcPairwiseTextbook => "BC_PAIRWISE_TEXTBOOK",
            AhPairwiseTextbook => "AH_PAIRWISE_TEXTBOOK",
            BcPairwiseTwopass => "BC_PAIRWISE_TWOPASS",
            AhPairwiseTwopass => "AH_PAIRWISE_TWOPASS",
        }
    }

    pub fn is_probabilistic(self) -> bool {
        self != BoundMethod::DetTextbook
    }

    /// The pairwise two-pass bounds are obtained by substituting the tree
    /// height into the flat two-pass formulas rather than proved directly.
    pub fn by_analogy(self) -> bool {
        matches!(
            self,
            BoundMethod::BcPairwiseTwopass | BoundMethod::AhPairwiseTwopass
        )
    }

    /// Evaluates this bound; the Hallman-Ipsen bound splits `lambda`
    /// evenly between its two failure events.
    pub fn evaluate(self, q: &BoundQuery) -> Result<BoundValue> {
        use BoundMethod::*;
        match self {
            DetTextbook => det_textbook_bound(q),
            BcPairwiseSum => bc_pairwise_sum_bound(q),
            AhPairwiseSum => ah_pairwise_sum_bound(q),
            HiPairwiseSum => hallman_ipsen_bound(q, q.lambda / 2.0, q.lambda / 2.0),
            BcRecursiveSum => bc_recursive_sum_bound(q),
            AhRecursiveSum => ah_recursive_sum_bound(q),
            BcTextbook => bc_textbook_bound(q),
            AhTextbook => ah_textbook_bound(q),
            DmTextbook => dm_textbook_bound(q),
            BcTwopass => bc_twopass_bound(q),
            AhTwopass => ah_twopass_bound(q),
            BcPairwiseTextbook => bc_pairwise_textbook_bound(q),
            AhPairwiseTextbook => ah_pairwise_textbook_bound(q),
            BcPairwiseTwopass => pairwise_twopass_bounds(q).map(|b| b.0),
            AhPairwiseTwopass => pairwise_twopass_bounds(q).map(|b| b.1),
        }
    }
}

impl fmt::Display for BoundMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for BoundMethod {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let key = s.trim().to_ascii_uppercase().replace('-', "_");
        Self::ALL
            .iter()
            .copied()
            .find(|m| m.name() == key)
            .ok_or_else(|| Error::Config(format!("unknown bound method '{s}'")))
    }
}

/// Inputs shared by every bound. Condition numbers not used by a given
/// bound are ignored.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundQuery {
    pub n: u64,
    pub u: f64,
    pub lambda: f64,
    pub kappa: f64,
    pub k1: f64,
    pub k2: f64,
}

impl BoundQuery {
    /// Query with all condition numbers set to one.
    pub fn new(n: u64, u: f64, lambda: f64) -> Self {
        Self {
            n,
            u,
            lambda,
            kappa: 1.0,
            k1: 1.0,
            k2: 1.0,
        }
    }

    pub fn with_kappa(mut self, kappa: f64) -> Self {
        self.kappa = kappa;
        self
    }

    pub fn with_k(mut self, k1: f64, k2: f64) -> Self {
        self.k1 = k1;
        self.k2 = k2;
        self
    }

    pub fn with_lambda(mut self, lambda: f64) -> Self {
        self.lambda = lambda;
        self
    }

    pub fn with_n(mut self, n: u64) -> Self {
        self.n = n;
        self
    }

    pub fn height(&self) -> u64 {
        tree_height(self.n) as u64
    }

    fn check_common(&self) -> Result<()> {
        if self.n == 0 {
            return Err(Error::Domain {
                name: "n",
                value: 0.0,
                domain: ">= 1",
            });
        }
        if !(0.0..1.0).contains(&self.u) {
            return Err(Error::Domain {
                name: "u",
                value: self.u,
                domain: "[0, 1)",
            });
        }
        if self.n as f64 * self.u * self.u >= 1.0 {
            log::warn!(
                "n u^2 = {} >= 1: first-order approximations of gamma are meaningless",
                self.n as f64 * self.u * self.u
            );
        }
        Ok(())
    }

    /// `lambda` must satisfy `lambda < limit` so that `ln(limit/lambda) > 0`
    /// and the bound stays meaningful; `limit` is 1 for all bounds here.
    fn check_lambda(&self) -> Result<()> {
        if !(self.lambda > 0.0 && self.lambda < 1.0) {
            return Err(Error::Domain {
                name: "lambda",
                value: self.lambda,
                domain: "(0, 1)",
            });
        }
        Ok(())
    }

    fn kappa(&self) -> Result<f64> {
        check_condition("kappa", self.kappa)
    }

    fn k1(&self) -> Result<f64> {
        check_condition("K1", self.k1)
    }

    fn k2(&self) -> Result<f64> {
        check_condition("K2", self.k2)
    }
}

fn check_condition(name: &'static str, v: f64) -> Result<f64> {
    if v.is_infinite() {
        return Err(Error::UndefinedBound(name));
    }
    if v.is_nan() || v < 0.0 {
        return Err(Error::Domain {
            name,
            value: v,
            domain: "[0, inf)",
        });
    }
    Ok(v)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BoundValue {
    pub method: BoundMethod,
    pub value: f64,
    /// `1 - lambda` for probabilistic bounds, `1` for deterministic ones.
    pub holds_with_probability: f64,
    pub by_analogy: bool,
}

impl BoundValue {
    fn probabilistic(method: BoundMethod, value: f64, q: &BoundQuery) -> Self {
        Self {
            method,
            value,
            holds_with_probability: 1.0 - q.lambda,
            by_analogy: method.by_analogy(),
        }
    }
}

fn probabilistic(q: &BoundQuery) -> Result<()> {
    q.check_common()?;
    q.check_lambda()
}

/// `(1+u)^3 (a+1)^2 - 1`, arranged so that it vanishes exactly at `u = a = 0`.
fn squared_sum_term(u: f64, a: f64) -> f64 {
    (1.0 + u).powi(3) * a * (a + 2.0) + g(3, u)
}

/// BC pairwise summation: `kappa sqrt(gamma_h(u^2) / lambda)`.
pub fn bc_pairwise_sum_bound(q: &BoundQuery) -> Result<BoundValue> {
    probabilistic(q)?;
    let v = q.kappa()? * (g(q.height(), q.u * q.u) / q.lambda).sqrt();
    Ok(BoundValue::probabilistic(BoundMethod::BcPairwiseSum, v, q))
}

/// AH pairwise summation: `kappa sqrt(u gamma_2h(u)) sqrt(ln(2 / lambda))`.
pub fn ah_pairwise_sum_bound(q: &BoundQuery) -> Result<BoundValue> {
    probabilistic(q)?;
    let v = q.kappa()? * (q.u * g(2 * q.height(), q.u)).sqrt() * (2.0 / q.lambda).ln().sqrt();
    Ok(BoundValue::probabilistic(BoundMethod::AhPairwiseSum, v, q))
}

/// Hallman-Ipsen pairwise summation bound, holding with probability
/// `1 - (eta + delta)`:
/// `kappa u sqrt(h) sqrt(2 ln(2/delta)) (1 + phi)` with
/// `phi = l sqrt(2h) u exp(l^2 h u^2)` and `l = sqrt(2 ln(2n/eta))`.
pub fn hallman_ipsen_bound(q: &BoundQuery, eta: f64, delta: f64) -> Result<BoundValue> {
    q.check_common()?;
    for (name, v) in [("eta", eta), ("delta", delta)] {
        if !(v > 0.0 && v < 1.0) {
            return Err(Error::Domain {
                name,
                value: v,
                domain: "(0, 1)",
            });
        }
    }
    if eta + delta >= 1.0 {
        return Err(Error::Domain {
            name: "eta + delta",
            value: eta + delta,
            domain: "(0, 1)",
        });
    }
    let h = q.height() as f64;
    let u = q.u;
    let l = (2.0 * (2.0 * q.n as f64 / eta).ln()).sqrt();
    let phi = l * (2.0 * h).sqrt() * u * (l * l * h * u * u).exp();
    let v = q.kappa()? * u * h.sqrt() * (2.0 * (2.0 / delta).ln()).sqrt() * (1.0 + phi);
    Ok(BoundValue {
        method: BoundMethod::HiPairwiseSum,
        value: v,
        holds_with_probability: 1.0 - (eta + delta),
        by_analogy: false,
    })
}

/// BC recursive summation: `kappa sqrt(2 gamma_{n-1}(u^2) / lambda)`.
pub fn bc_recursive_sum_bound(q: &BoundQuery) -> Result<BoundValue> {
    probabilistic(q)?;
    let v = q.kappa()? * (2.0 * g(q.n - 1, q.u * q.u) / q.lambda).sqrt();
    Ok(BoundValue::probabilistic(BoundMethod::BcRecursiveSum, v, q))
}

/// AH recursive summation: `kappa sqrt(u gamma_{2(n-1)}(u)) sqrt(ln(4 / lambda))`.
pub fn ah_recursive_sum_bound(q: &BoundQuery) -> Result<BoundValue> {
    probabilistic(q)?;
    let v = q.kappa()? * (q.u * g(2 * (q.n - 1), q.u)).sqrt() * (4.0 / q.lambda).ln().sqrt();
    Ok(BoundValue::probabilistic(BoundMethod::AhRecursiveSum, v, q))
}

/// Deterministic textbook bound `K2^2 gamma_{n+1}(u) + K1^2 gamma_{2n+1}(u)`.
pub fn det_textbook_bound(q: &BoundQuery) -> Result<BoundValue> {
    q.check_common()?;
    let (k1, k2) = (q.k1()?, q.k2()?);
    let v = k2 * k2 * g(q.n + 1, q.u) + k1 * k1 * g(2 * q.n + 1, q.u);
    Ok(BoundValue {
        method: BoundMethod::DetTextbook,
        value: v,
        holds_with_probability: 1.0,
        by_analogy: false,
    })
}

/// BC textbook bound with the summation depth given by `sq_depth` (the
/// squares' error products) and `sum_depth` (the plain sum).
fn bc_textbook_shape(q: &BoundQuery, sq_depth: u64, sum_depth: u64) -> Result<f64> {
    let (k1, k2) = (q.k1()?, q.k2()?);
    let u2 = q.u * q.u;
    let a = (2.0 * g(sum_depth, u2) / q.lambda).sqrt();
    Ok(k2 * k2 * (2.0 * g(sq_depth, u2) / q.lambda).sqrt() + k1 * k1 * squared_sum_term(q.u, a))
}

/// AH textbook bound; `sq_depth` and `sum_depth` as in the BC shape,
/// entering as `gamma_{2 depth}(u)`.
fn ah_textbook_shape(q: &BoundQuery, sq_depth: u64, sum_depth: u64) -> Result<f64> {
    let (k1, k2) = (q.k1()?, q.k2()?);
    let u = q.u;
    let ln = (4.0 / q.lambda).ln().sqrt();
    let a = (u * g(2 * sum_depth, u)).sqrt() * ln;
    Ok(k2 * k2 * (u * g(2 * sq_depth, u)).sqrt() * ln + k1 * k1 * squared_sum_term(u, a))
}

/// `K2^2 sqrt(2 gamma_{n+1}(u^2)/lambda) + K1^2 ((1+u)^3 (sqrt(2 gamma_{n-1}(u^2)/lambda) + 1)^2 - 1)`.
pub fn bc_textbook_bound(q: &BoundQuery) -> Result<BoundValue> {
    probabilistic(q)?;
    let v = bc_textbook_shape(q, q.n + 1, q.n - 1)?;
    Ok(BoundValue::probabilistic(BoundMethod::BcTextbook, v, q))
}

/// `K2^2 sqrt(u gamma_{2(n+1)}(u)) sqrt(ln(4/lambda)) + K1^2 ((1+u)^3 (sqrt(u gamma_{2(n-1)}(u)) sqrt(ln(4/lambda)) + 1)^2 - 1)`.
pub fn ah_textbook_bound(q: &BoundQuery) -> Result<BoundValue> {
    probabilistic(q)?;
    let v = ah_textbook_shape(q, q.n + 1, q.n - 1)?;
    Ok(BoundValue::probabilistic(BoundMethod::AhTextbook, v, q))
}

/// Textbook bound derived from a Doob-Meyer decomposition of the squared
/// sum error:
/// `K2^2 sqrt(u gamma_{2(n+1)}(u)) sqrt(ln(4/lambda))
///  + K1^2 (1+u)^3 [sqrt(2u gamma_{4(n-1)}(u)) sqrt(ln(4/lambda)) + u gamma_{2(n-1)}(u)/2 + 1] - K1^2`.
pub fn dm_textbook_bound(q: &BoundQuery) -> Result<BoundValue> {
    probabilistic(q)?;
    let (k1, k2) = (q.k1()?, q.k2()?);
    let (u, n) = (q.u, q.n);
    let ln = (4.0 / q.lambda).ln().sqrt();
    let inner = (2.0 * u * g(4 * (n - 1), u)).sqrt() * ln + u * g(2 * (n - 1), u) / 2.0;
    let v = k2 * k2 * (u * g(2 * (n + 1), u)).sqrt() * ln
        + k1 * k1 * ((1.0 + u).powi(3) * inner + g(3, u));
    Ok(BoundValue::probabilistic(BoundMethod::DmTextbook, v, q))
}

/// `(1+u) (a + a^2 (2 K1 + K1^2 (a + 1))) + u`; the BC and AH two-pass
/// bounds differ only in how `a` is built.
fn two_pass_shape(u: f64, k1: f64, a: f64) -> f64 {
    (1.0 + u) * (a + a * a * (2.0 * k1 + k1 * k1 * (a + 1.0))) + u
}

fn bc_two_pass_a(q: &BoundQuery, depth: u64) -> f64 {
    (4.0 * g(depth, q.u * q.u) / q.lambda).sqrt()
}

fn ah_two_pass_a(q: &BoundQuery, depth: u64) -> f64 {
    (q.u * g(2 * depth, q.u)).sqrt() * (8.0 / q.lambda).ln().sqrt()
}

/// `(1+u)(sqrt(4 gamma_{n+1}(u^2)/lambda) + (4 gamma_{n+1}(u^2)/lambda)(2 K1 + K1^2 (sqrt(4 gamma_{n+1}(u^2)/lambda) + 1))) + u`.
pub fn bc_twopass_bound(q: &BoundQuery) -> Result<BoundValue> {
    probabilistic(q)?;
    let v = two_pass_shape(q.u, q.k1()?, bc_two_pass_a(q, q.n + 1));
    Ok(BoundValue::probabilistic(BoundMethod::BcTwopass, v, q))
}

/// As [`bc_twopass_bound`] with `a = sqrt(u gamma_{2(n+1)}(u)) sqrt(ln(8/lambda))`.
pub fn ah_twopass_bound(q: &BoundQuery) -> Result<BoundValue> {
    probabilistic(q)?;
    let v = two_pass_shape(q.u, q.k1()?, ah_two_pass_a(q, q.n + 1));
    Ok(BoundValue::probabilistic(BoundMethod::AhTwopass, v, q))
}

pub fn bc_pairwise_textbook_bound(q: &BoundQuery) -> Result<BoundValue> {
    probabilistic(q)?;
    let h = q.height();
    let v = bc_textbook_shape(q, h + 1, h)?;
    Ok(BoundValue::probabilistic(
        BoundMethod::BcPairwiseTextbook,
        v,
        q,
    ))
}

pub fn ah_pairwise_textbook_bound(q: &BoundQuery) -> Result<BoundValue> {
    probabilistic(q)?;
    let h = q.height();
    let v = ah_textbook_shape(q, h + 1, h)?;
    Ok(BoundValue::probabilistic(
        BoundMethod::AhPairwiseTextbook,
        v,
        q,
    ))
}

/// BC and AH two-pass bounds with `n + 1` replaced by `h + 1`. These are
/// constructed by analogy with the flat two-pass bounds and flagged so.
pub fn pairwise_twopass_bounds(q: &BoundQuery) -> Result<(BoundValue, BoundValue)> {
    probabilistic(q)?;
    let k1 = q.k1()?;
    let depth = q.height() + 1;
    let bc = two_pass_shape(q.u, k1, bc_two_pass_a(q, depth));
    let ah = two_pass_shape(q.u, k1, ah_two_pass_a(q, depth));
    Ok((
        BoundValue::probabilistic(BoundMethod::BcPairwiseTwopass, bc, q),
        BoundValue::probabilistic(BoundMethod::AhPairwiseTwopass, ah, q),
    ))
}

/// Evaluates every method on `q`, keeping per-method failures.
pub fn evaluate_all(q: &BoundQuery) -> Vec<(BoundMethod, Result<BoundValue>)> {
    BoundMethod::ALL
        .iter()
        .map(|&m| (m, m.evaluate(q)))
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BiasPrediction {
    /// `-+V(s_hat)/n` when an empirical variance of the computed sum is given.
    pub bias: Option<f64>,
    /// Bound on the magnitude of the bias.
    pub bound: f64,
}

fn check_bias_inputs(n: u64, u: f64, value: f64, name: &'static str) -> Result<()> {
    if n == 0 {
        return Err(Error::Domain {
            name: "n",
            value: 0.0,
            domain: ">= 1",
        });
    }
    if !(0.0..1.0).contains(&u) {
        return Err(Error::Domain {
            name: "u",
            value: u,
            domain: "[0, 1)",
        });
    }
    if value.is_nan() || value <= 0.0 {
        return Err(Error::Domain {
            name,
            value,
            domain: "(0, inf)",
        });
    }
    Ok(())
}

/// Textbook variance is biased low: `E(y_hat) = y - V(s_hat)/n`, and the
/// bias is at most `y K1^2 gamma_{n-1}(u^2)`.
pub fn textbook_bias_prediction(
    n: u64,
    u: f64,
    y: f64,
    k1: f64,
    v_s_hat: Option<f64>,
) -> Result<BiasPrediction> {
    check_bias_inputs(n, u, y, "y")?;
    Ok(BiasPrediction {
        bias: v_s_hat.map(|v| -v / n as f64),
        bound: y * k1 * k1 * g(n - 1, u * u),
    })
}

/// Two-pass variance is biased high: `E(z_hat) = z + V(s_hat)/n + O(u^2)`,
/// and the bias is at most `z ((1+u^2)(1 + K1^2 gamma_n(u^2)) - 1)`.
pub fn twopass_bias_prediction(
    n: u64,
    u: f64,
    z: f64,
    k1: f64,
    v_s_hat: Option<f64>,
) -> Result<BiasPrediction> {
    check_bias_inputs(n, u, z, "z")?;
    let u2 = u * u;
    let gk = k1 * k1 * g(n, u2);
    Ok(BiasPrediction {
        bias: v_s_hat.map(|v| v / n as f64),
        bound: z * (u2 + gk + u2 * gk),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Regime {
    /// `n u << 1`.
    SmallNu,
    /// `n u >> 1` with `n u^2 << 1`.
    LargeNu,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum TextbookMethod {
    Det,
    Bc,
    Ah,
    Dm,
}

/// Dominant-term form of the textbook bounds in each regime, up to a
/// constant factor.
pub fn asymptotic_textbook_bound(regime: Regime, method: TextbookMethod, q: &BoundQuery) -> f64 {
    let (k1s, k2s) = (q.k1 * q.k1, q.k2 * q.k2);
    let n = q.n as f64;
    let u = q.u;
    let sqrt_n_u = n.sqrt() * u;
    let ln4 = (4.0 / q.lambda).ln();
    let growth = ((2.0 * n + 1.0) * u).exp();
    match (regime, method) {
        (Regime::SmallNu, TextbookMethod::Det) => (k2s + 2.0 * k1s) * n * u,
        (_, TextbookMethod::Bc) => (k2s + 2.0 * k1s) * (2.0 / q.lambda).sqrt() * sqrt_n_u,
        (Regime::SmallNu, TextbookMethod::Ah) => (k2s + 2.0 * k1s) * ln4.sqrt() * sqrt_n_u,
        (Regime::SmallNu, TextbookMethod::Dm) => (k2s + 8f64.sqrt() * k1s) * ln4.sqrt() * sqrt_n_u,
        (Regime::LargeNu, TextbookMethod::Det) => {
            if u == 0.0 {
                0.0
            } else {
                (k2s + k1s) * growth
            }
        }
        (Regime::LargeNu, TextbookMethod::Ah) => {
            let r = (u * ln4).sqrt();
            (k2s + k1s * r) * r * growth
        }
        (Regime::LargeNu, TextbookMethod::Dm) => {
            let r = (u * ln4).sqrt();
            (r * (k2s + 2f64.sqrt() * k1s) + k1s * u / 2.0) * growth
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const U24: f64 = 1.0 / 8_388_608.0; // 2^-23

    fn close(a: f64, b: f64, rel: f64) -> bool {
        (a - b).abs() <= rel * b.abs()
    }

    #[test]
    fn gamma_basics() {
        assert_eq!(gamma(0, 0.3).unwrap(), 0.0);
        assert!(close(gamma(1, U24).unwrap(), U24, 1e-15));
        assert!(close(gamma(3, 0.5).unwrap(), 2.375, 1e-15));
        assert!(gamma(2, -1.0).is_err());
        assert!(gamma(2, f64::NAN).is_err());
    }

    #[test]
    fn gamma_composition_identity() {
        for (a, b, t) in [
            (3u64, 5u64, 0.01),
            (100, 7, 1e-7),
            (1, 1, 0.5),
            (1000, 2000, 1e-4),
        ] {
            let lhs = gamma(a + b, t).unwrap();
            let (ga, gb) = (gamma(a, t).unwrap(), gamma(b, t).unwrap());
            assert!(close(lhs, ga + gb + ga * gb, 1e-13), "{a} {b} {t}");
        }
    }

    #[test]
    fn trivial_instantiations() {
        // n = 1: no tree levels, no additions
        let q = BoundQuery::new(1, U24, 0.1);
        assert_eq!(bc_pairwise_sum_bound(&q).unwrap().value, 0.0);
        assert_eq!(ah_pairwise_sum_bound(&q).unwrap().value, 0.0);
        assert_eq!(bc_recursive_sum_bound(&q).unwrap().value, 0.0);
        assert_eq!(ah_recursive_sum_bound(&q).unwrap().value, 0.0);
        // n = 2, lambda -> 1: kappa sqrt(gamma_1(u^2)) = kappa u
        let q = BoundQuery::new(2, U24, 1.0 - 1e-15).with_kappa(3.0);
        assert!(close(
            bc_pairwise_sum_bound(&q).unwrap().value,
            3.0 * U24,
            1e-12
        ));
    }

    #[test]
    fn zero_roundoff_gives_zero() {
        let q = BoundQuery::new(1000, 0.0, 0.1)
            .with_k(2.0, 3.0)
            .with_kappa(5.0);
        for m in BoundMethod::ALL {
            if m == BoundMethod::HiPairwiseSum {
                continue;
            }
            let v = m.evaluate(&q).unwrap().value;
            // the two-pass shapes carry a trailing `+ u`
            assert_eq!(v, 0.0, "{m}");
        }
        assert_eq!(hallman_ipsen_bound(&q, 0.05, 0.05).unwrap().value, 0.0);
    }

    #[test]
    fn domain_errors() {
        let q = BoundQuery::new(1 << 20, U24, 2.0);
        assert!(matches!(
            ah_pairwise_sum_bound(&q),
            Err(Error::Domain { .. })
        ));
        assert!(ah_textbook_bound(&q.with_lambda(4.0)).is_err());
        assert!(ah_twopass_bound(&q.with_lambda(8.0)).is_err());
        assert!(bc_recursive_sum_bound(&q.with_lambda(0.0)).is_err());
        assert!(bc_textbook_bound(&BoundQuery::new(0, U24, 0.1)).is_err());
        let q = BoundQuery::new(10, U24, 0.1);
        assert!(hallman_ipsen_bound(&q, 0.6, 0.5).is_err());
        assert!(hallman_ipsen_bound(&q, 0.0, 0.5).is_err());
        assert_eq!(
            bc_pairwise_sum_bound(&q.with_kappa(f64::INFINITY)),
            Err(Error::UndefinedBound("kappa"))
        );
        assert_eq!(
            det_textbook_bound(&q.with_k(f64::INFINITY, 1.0)),
            Err(Error::UndefinedBound("K1"))
        );
    }

    #[test]
    fn probability_metadata() {
        let q = BoundQuery::new(100, U24, 0.1);
        assert_eq!(det_textbook_bound(&q).unwrap().holds_with_probability, 1.0);
        assert!(close(
            bc_textbook_bound(&q).unwrap().holds_with_probability,
            0.9,
            1e-15
        ));
        let hi = hallman_ipsen_bound(&q, 0.02, 0.03).unwrap();
        assert!(close(hi.holds_with_probability, 0.95, 1e-15));
        let (bc, ah) = pairwise_twopass_bounds(&q).unwrap();
        assert!(bc.by_analogy && ah.by_analogy);
        assert!(!bc_twopass_bound(&q).unwrap().by_analogy);
    }

    #[test]
    fn method_names_round_trip() {
        for m in BoundMethod::ALL {
            assert_eq!(m.name().parse::<BoundMethod>().unwrap(), m);
        }
    }

    #[test]
    fn bias_predictions() {
        let t = textbook_bias_prediction(100, 0.0, 1.0, 2.0, Some(5.0)).unwrap();
        assert_eq!(t.bound, 0.0);
        assert_eq!(t.bias, Some(-0.05));
        let z = twopass_bias_prediction(100, 0.0, 1.0, 2.0, Some(5.0)).unwrap();
        assert_eq!(z.bound, 0.0);
        assert_eq!(z.bias, Some(0.05));
        assert!(textbook_bias_prediction(100, 0.01, 0.0, 1.0, None).is_err());
        assert!(textbook_bias_prediction(100, 0.01, 1.0, 1.0, None)
            .unwrap()
            .bias
            .is_none());
    }
}
