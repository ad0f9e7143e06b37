//! Majorant norms on discs and the bound algebra of local operators.
//!
//! All returned upper bounds are inflated by [`ROUNDING_SLACK`] so that a
//! float computation of a certified quantity stays on the safe side.

use std::f64::consts::{E, PI};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::series::{Coeff, TruncSeries};

/// Upward slack applied to computed upper bounds.
pub const ROUNDING_SLACK: f64 = 1.0 + 1.0 / (1u64 << 40) as f64;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum NormError {
    #[error("radius must be positive, got {0}")]
    NonPositiveRadius(f64),
    #[error("need 0 < s < t, got s = {s}, t = {t}")]
    BadPair { s: f64, t: f64 },
    #[error("leading order {order} is below filtration index {k}: the norm is infinite")]
    InfiniteNorm { order: usize, k: f64 },
    #[error("Borel profile diverges at x = {0}")]
    Divergence(f64),
    #[error("argument out of range: {0}")]
    Domain(String),
    #[error("no closed-form tail for this weight pair")]
    Inconclusive,
}

pub fn round_up(x: f64) -> f64 {
    x * ROUNDING_SLACK
}

/// `x <= y` for two upper-bounded quantities, allowing one slack factor.
pub fn le_with_slack(x: f64, y: f64) -> bool {
    x <= y * ROUNDING_SLACK * ROUNDING_SLACK
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MajorantValue {
    pub value: f64,
    pub radius: f64,
}

fn check_radius(t: f64) -> Result<(), NormError> {
    if t > 0.0 && t.is_finite() {
        Ok(())
    } else {
        Err(NormError::NonPositiveRadius(t))
    }
}

fn check_pair(s: f64, t: f64) -> Result<(), NormError> {
    if s > 0.0 && s < t && t.is_finite() {
        Ok(())
    } else {
        Err(NormError::BadPair { s, t })
    }
}

/// `Σ |a_n| t^n` over the known coefficients, without slack.
pub fn majorant_sum<C: Coeff>(f: &TruncSeries<C>, t: f64) -> f64 {
    f.coeffs()
        .iter()
        .rev()
        .fold(0.0, |acc, c| acc * t + c.magnitude())
}

/// Majorant norm `|f|_t = Σ |a_n| t^n`.
pub fn majorant_norm<C: Coeff>(f: &TruncSeries<C>, t: f64) -> Result<MajorantValue, NormError> {
    check_radius(t)?;
    Ok(MajorantValue {
        value: round_up(majorant_sum(f, t)),
        radius: t,
    })
}

/// Cauchy–Nagumo estimate `|f^{(k)}|_s <= k!/(t-s)^k |f|_t`.
pub fn nagumo_check<C: Coeff>(f: &TruncSeries<C>, k: usize, t: f64, s: f64) -> Result<bool, NormError> {
    check_pair(s, t)?;
    let mut d = f.clone();
    for _ in 0..k {
        d = d.derivative();
    }
    let lhs = majorant_sum(&d, s);
    let rhs = factorial(k) / (t - s).powi(k as i32) * majorant_sum(f, t);
    Ok(le_with_slack(lhs, rhs))
}

pub fn factorial(k: usize) -> f64 {
    (1..=k).map(|i| i as f64).product()
}

/// `sup_{0<s<=t} s^{-k} |f|_s`, evaluated analytically.
pub fn order_filtration_norm<C: Coeff>(f: &TruncSeries<C>, k: f64, t: f64) -> Result<f64, NormError> {
    check_radius(t)?;
    if k < 0.0 {
        return Err(NormError::Domain(format!("filtration index {k} is negative")));
    }
    let Some(order) = f.valuation() else {
        return Ok(0.0);
    };
    if (order as f64) < k {
        return Err(NormError::InfiniteNorm { order, k });
    }
    // every exponent n - k is nonnegative, so the supremum sits at s = t
    let sum: f64 = f
        .coeffs()
        .iter()
        .enumerate()
        .skip(order)
        .map(|(n, c)| c.magnitude() * t.powf(n as f64 - k))
        .sum();
    Ok(round_up(sum))
}

/// Certified statement `|u_{st}| <= C / (s^k (t-s)^l)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LocalOpBound {
    #[serde(rename = "C")]
    pub c: f64,
    pub k: f64,
    pub l: f64,
}

/// `x^x` with `0^0 = 1`.
fn self_power(x: f64) -> f64 {
    if x == 0.0 {
        1.0
    } else {
        x.powf(x)
    }
}

impl LocalOpBound {
    pub fn new(c: f64, k: f64, l: f64) -> Self {
        LocalOpBound { c, k, l }
    }

    /// Bounded operator of norm `c`.
    pub fn bounded(c: f64) -> Self {
        Self::new(c, 0.0, 0.0)
    }

    /// k-th derivative on majorant norms: `k!/(t-s)^k`.
    pub fn derivative(k: usize) -> Self {
        Self::new(factorial(k), 0.0, k as f64)
    }

    /// Division by z: simple pole along `s = 0`.
    pub fn division_by_z() -> Self {
        Self::new(1.0, 1.0, 0.0)
    }

    /// Change from the Hilbert norm to the sup norm on the n-polydisc,
    /// an n-local bound with constant `1/sqrt(π^n)`.
    pub fn hilbert_to_sup(n: usize) -> Self {
        Self::new(1.0 / PI.powi(n as i32).sqrt(), 0.0, n as f64)
    }

    /// Bound for `self ∘ other`.
    pub fn compose(&self, other: &LocalOpBound) -> LocalOpBound {
        let l = self.l + other.l;
        let factor = self_power(l) / (self_power(self.l) * self_power(other.l));
        LocalOpBound::new(round_up(factor * self.c * other.c), self.k + other.k, l)
    }

    /// n-fold self composition.
    pub fn power(&self, n: usize) -> LocalOpBound {
        let mut out = LocalOpBound::bounded(1.0);
        for _ in 0..n {
            out = out.compose(self);
        }
        out
    }

    /// Calibrated norm `(e/l)^l C`.
    pub fn calibrate(&self) -> f64 {
        let w = if self.l == 0.0 { 1.0 } else { (E / self.l).powf(self.l) };
        round_up(w * self.c)
    }

    /// Numerical value of the bound at a pair `0 < s < t`.
    pub fn eval(&self, t: f64, s: f64) -> Result<f64, NormError> {
        check_pair(s, t)?;
        Ok(round_up(self.c / (s.powf(self.k) * (t - s).powf(self.l))))
    }
}

pub fn compose_local_bounds(b1: &LocalOpBound, b2: &LocalOpBound) -> LocalOpBound {
    b1.compose(b2)
}

pub fn calibrate(b: &LocalOpBound) -> f64 {
    b.calibrate()
}

/// Majorant profile `|f|` fed to the Borel estimate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "profile", rename_all = "snake_case")]
pub enum BorelProfile {
    /// `1/(1-x)`, the profile of the exponential.
    Geometric,
    /// `x^2/(1-x)^2`, majorant of `z^2/(1+z)^2`.
    QuadraticPole,
    /// `x/(1-x)`
    LinearPole,
    /// Explicit nonnegative coefficients.
    Coefficients { coeffs: Vec<f64> },
}

impl BorelProfile {
    pub fn from_series<C: Coeff>(f: &TruncSeries<C>) -> Self {
        BorelProfile::Coefficients {
            coeffs: f.magnitudes(),
        }
    }
}

/// `|f|(x)` for the given profile.
pub fn borel_bound(profile: &BorelProfile, x: f64) -> Result<f64, NormError> {
    if !(x >= 0.0) {
        return Err(NormError::Domain(format!("Borel argument {x} is negative")));
    }
    let pole = |x: f64| {
        if x >= 1.0 {
            Err(NormError::Divergence(x))
        } else {
            Ok(1.0 / (1.0 - x))
        }
    };
    let v = match profile {
        BorelProfile::Geometric => pole(x)?,
        BorelProfile::QuadraticPole => (x * pole(x)?).powi(2),
        BorelProfile::LinearPole => x * pole(x)?,
        BorelProfile::Coefficients { coeffs } => {
            if coeffs.iter().any(|c| *c < 0.0) {
                return Err(NormError::Domain("profile coefficients must be nonnegative".into()));
            }
            coeffs.iter().rev().fold(0.0, |acc, c| acc * x + c)
        }
    };
    Ok(round_up(v))
}

/// Constant `K` in `|f|(x) <= K x^2` on `0 <= x <= r` for `f = z^2/(1+z)^2`.
pub fn quadratic_borel_constant(r: f64) -> Result<f64, NormError> {
    if !(0.0..1.0).contains(&r) {
        return Err(NormError::Divergence(r));
    }
    Ok(round_up(1.0 / (1.0 - r).powi(2)))
}

/// Weight families `λ_n : (0,S] -> R_+`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum WeightSequence {
    /// `scale * s^{step n + offset}`
    Monomial { scale: f64, step: f64, offset: f64 },
    /// `sqrt(π/(n+1)) s^{1+n}`, the one-variable Hilbert weights.
    Hilbert,
    /// Finitely many stored weights `scale * s^exponent`.
    Tabulated { entries: Vec<(f64, f64)> },
}

impl WeightSequence {
    /// `s^n`
    pub fn geometric() -> Self {
        WeightSequence::Monomial {
            scale: 1.0,
            step: 1.0,
            offset: 0.0,
        }
    }

    /// `λ_n = 1` for every n.
    pub fn constant() -> Self {
        WeightSequence::Monomial {
            scale: 1.0,
            step: 0.0,
            offset: 0.0,
        }
    }

    pub fn value(&self, n: usize, s: f64) -> Option<f64> {
        match self {
            WeightSequence::Monomial { scale, step, offset } => {
                Some(scale * s.powf(step * n as f64 + offset))
            }
            WeightSequence::Hilbert => Some(hilbert_weight(&[n], s)),
            WeightSequence::Tabulated { entries } => {
                entries.get(n).map(|(c, e)| c * s.powf(*e))
            }
        }
    }

    fn stored_len(&self) -> Option<usize> {
        match self {
            WeightSequence::Tabulated { entries } => Some(entries.len()),
            _ => None,
        }
    }

    /// Whether every weight is nondecreasing across the given radii.
    pub fn is_monotone_on(&self, radii: &[f64], count: usize) -> bool {
        let mut sorted = radii.to_vec();
        sorted.sort_by(f64::total_cmp);
        (0..count).all(|n| {
            sorted.windows(2).all(|w| match (self.value(n, w[0]), self.value(n, w[1])) {
                (Some(a), Some(b)) => a <= b,
                _ => true,
            })
        })
    }
}

/// Value of `Σ_i (μ_i(s)/λ_i(t))^p` with the index where a tabulated sum stops.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WeightSum {
    pub value: f64,
    pub truncated_at: Option<usize>,
}

pub fn weight_sum(
    lam: &WeightSequence,
    mu: &WeightSequence,
    p: f64,
    s: f64,
    t: f64,
) -> Result<WeightSum, NormError> {
    use WeightSequence::*;
    let geometric_tail = |head: f64, ratio: f64| {
        if ratio >= 1.0 {
            f64::INFINITY
        } else {
            head / (1.0 - ratio)
        }
    };
    if let Some(stored) = match (lam.stored_len(), mu.stored_len()) {
        (Some(a), Some(b)) => Some(a.min(b)),
        (a, b) => a.or(b),
    } {
        let mut value = 0.0;
        for i in 0..stored {
            let (Some(m), Some(l)) = (mu.value(i, s), lam.value(i, t)) else {
                break;
            };
            value += (m / l).powf(p);
        }
        return Ok(WeightSum {
            value: round_up(value),
            truncated_at: Some(stored),
        });
    }
    let value = match (lam, mu) {
        (
            Monomial { scale: ls, step: lstep, offset: loff },
            Monomial { scale: ms, step: mstep, offset: moff },
        ) => {
            let head = (ms * s.powf(*moff) / (ls * t.powf(*loff))).powf(p);
            let ratio = (s.powf(*mstep) / t.powf(*lstep)).powf(p);
            geometric_tail(head, ratio)
        }
        (Hilbert, Hilbert) => {
            let ratio = (s / t).powf(p);
            geometric_tail(ratio, ratio)
        }
        _ => return Err(NormError::Inconclusive),
    };
    Ok(WeightSum {
        value: round_up(value),
        truncated_at: None,
    })
}

/// Condition `Σ_i (μ_i(s)/λ_i(t))^p <= C/(t-s)^α` at every grid pair `(s, t)`.
pub fn lambda_p_check(
    lam: &WeightSequence,
    mu: &WeightSequence,
    p: f64,
    alpha: f64,
    c: f64,
    grid: &[(f64, f64)],
) -> Result<bool, NormError> {
    if !(p >= 1.0) {
        return Err(NormError::Domain(format!("exponent p = {p} must be at least 1")));
    }
    for &(s, t) in grid {
        check_pair(s, t)?;
    }
    for &(s, t) in grid {
        let sum = weight_sum(lam, mu, p, s, t)?;
        if !le_with_slack(sum.value, c / (t - s).powf(alpha)) {
            return Ok(false);
        }
    }
    Ok(true)
}

/// `sqrt(Π_k π/(i_k+1)) s^{n+|I|}` with `n = I.len()`.
pub fn hilbert_weight(index: &[usize], s: f64) -> f64 {
    let n = index.len();
    let total: usize = index.iter().sum();
    let c: f64 = index.iter().map(|&i| PI / (i as f64 + 1.0)).product();
    c.sqrt() * s.powi((n + total) as i32)
}

/// Factor `t^{-d}` bounding the quotient of a division by `z^d`.
pub fn division_bound(d: usize, t: f64) -> Result<f64, NormError> {
    check_radius(t)?;
    Ok(round_up(t.powi(-(d as i32))))
}

/// Pairs `(s, t)` with `0 < s < t <= cap` on an `n x n` lattice.
pub fn subdiagonal_grid(n: usize, cap: f64) -> Vec<(f64, f64)> {
    let mut out = Vec::new();
    for i in 1..=n {
        for j in 1..=n {
            let t = cap * i as f64 / n as f64;
            let s = cap * j as f64 / (n as f64 + 1.0) * i as f64 / n as f64;
            if s > 0.0 && s < t {
                out.push((s, t));
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::series::Rational;
    use approx::assert_relative_eq;

    fn q(n: i64, d: i64) -> Rational {
        Rational::new(n.into(), d.into())
    }

    #[test]
    fn majorant_examples() {
        for n in [1i64, 3, 10] {
            let f = TruncSeries::<Rational>::from_i64s(&[1, n], 1);
            let v = majorant_norm(&f, 0.3).unwrap().value;
            assert_relative_eq!(v, 1.0 + n as f64 * 0.3, max_relative = 1e-11);
        }
        let f = TruncSeries::<Rational>::monomial(q(1, 1), 4, 4);
        assert_relative_eq!(majorant_norm(&f, 0.7).unwrap().value, 0.7f64.powi(4), max_relative = 1e-11);
        let f0 = TruncSeries::from_strs(&["0", "0", "1/2", "1"]).unwrap();
        assert_relative_eq!(majorant_norm(&f0, 1.0).unwrap().value, 1.5, max_relative = 1e-11);
        assert!(majorant_norm(&f0, 0.0).is_err());
    }

    #[test]
    fn nagumo_examples() {
        let z2 = TruncSeries::<Rational>::monomial(q(1, 1), 2, 2);
        assert!(nagumo_check(&z2, 1, 1.0, 0.5).unwrap());
        for n in [2usize, 5, 11] {
            let zn = TruncSeries::<Rational>::monomial(q(1, 1), n, n);
            let t = 0.8;
            let s = t * (1.0 - 1.0 / n as f64);
            assert!(nagumo_check(&zn, 1, t, s).unwrap());
        }
        assert!(nagumo_check(&z2, 1, 0.5, 0.5).is_err());
    }

    #[test]
    fn filtration_examples() {
        let z3 = TruncSeries::<Rational>::monomial(q(1, 1), 3, 3);
        assert_relative_eq!(order_filtration_norm(&z3, 2.0, 2.0).unwrap(), 2.0, max_relative = 1e-11);
        let z2 = TruncSeries::<Rational>::monomial(q(1, 1), 2, 2);
        assert_relative_eq!(order_filtration_norm(&z2, 2.0, 0.37).unwrap(), 1.0, max_relative = 1e-11);
        let f = TruncSeries::<Rational>::from_i64s(&[0, 0, 1, 1], 3);
        assert_relative_eq!(order_filtration_norm(&f, 2.0, 1.0).unwrap(), 2.0, max_relative = 1e-11);
        assert!(matches!(
            order_filtration_norm(&f, 3.0, 1.0),
            Err(NormError::InfiniteNorm { order: 2, .. })
        ));
    }

    #[test]
    fn composition_examples() {
        let d = LocalOpBound::new(1.0, 0.0, 1.0);
        let c = d.compose(&d);
        assert_relative_eq!(c.c, 4.0, max_relative = 1e-11);
        assert_eq!((c.k, c.l), (0.0, 2.0));
        let b = LocalOpBound::bounded(3.5).compose(&LocalOpBound::bounded(1.0));
        assert_relative_eq!(b.c, 3.5, max_relative = 1e-11);
        let m = LocalOpBound::new(1.0, 1.0, 0.0).compose(&LocalOpBound::new(1.0, 0.0, 2.0));
        assert_relative_eq!(m.c, 1.0, max_relative = 1e-11);
        assert_eq!((m.k, m.l), (1.0, 2.0));
    }

    #[test]
    fn calibration_examples() {
        let d = LocalOpBound::new(1.0, 0.0, 1.0);
        assert_relative_eq!(d.calibrate(), E, max_relative = 1e-11);
        assert_relative_eq!(d.compose(&d).calibrate(), E * E, max_relative = 1e-11);
        assert_relative_eq!(LocalOpBound::bounded(0.3).calibrate(), 0.3, max_relative = 1e-11);
    }

    #[test]
    fn bound_json_shape() {
        let b = LocalOpBound::new(2.0, 1.0, 0.5);
        let text = serde_json::to_string(&b).unwrap();
        assert_eq!(text, r#"{"C":2.0,"k":1.0,"l":0.5}"#);
        assert_eq!(serde_json::from_str::<LocalOpBound>(&text).unwrap(), b);
    }

    #[test]
    fn borel_examples() {
        assert_relative_eq!(borel_bound(&BorelProfile::Geometric, 0.5).unwrap(), 2.0, max_relative = 1e-11);
        assert!(borel_bound(&BorelProfile::QuadraticPole, 0.5).unwrap() <= round_up(1.0));
        assert_relative_eq!(borel_bound(&BorelProfile::Geometric, 0.0).unwrap(), 1.0, max_relative = 1e-11);
        assert!(matches!(
            borel_bound(&BorelProfile::Geometric, 1.0),
            Err(NormError::Divergence(_))
        ));
        assert_relative_eq!(quadratic_borel_constant(0.5).unwrap(), 4.0, max_relative = 1e-11);
    }

    #[test]
    fn lambda_p_examples() {
        let grid = subdiagonal_grid(20, 1.0);
        let g = WeightSequence::geometric();
        assert!(lambda_p_check(&g, &g, 1.0, 1.0, 1.0, &grid).unwrap());
        let one = WeightSequence::constant();
        assert!(!lambda_p_check(&one, &one, 1.0, 3.0, 1e6, &grid).unwrap());
        let g2 = WeightSequence::Monomial { scale: 1.0, step: 2.0, offset: 0.0 };
        assert!(lambda_p_check(&g, &g2, 1.0, 1.0, 1.0, &grid).unwrap());
        assert!(matches!(
            lambda_p_check(&WeightSequence::Hilbert, &g, 1.0, 1.0, 1.0, &grid),
            Err(NormError::Inconclusive)
        ));
    }

    #[test]
    fn tabulated_sum_reports_truncation() {
        let tab = WeightSequence::Tabulated { entries: vec![(1.0, 0.0), (1.0, 1.0), (1.0, 2.0)] };
        let sum = weight_sum(&tab, &tab, 1.0, 0.5, 1.0).unwrap();
        assert_eq!(sum.truncated_at, Some(3));
        assert_relative_eq!(sum.value, 1.75, max_relative = 1e-11);
    }

    #[test]
    fn hilbert_examples() {
        assert_relative_eq!(hilbert_weight(&[0], 0.3), PI.sqrt() * 0.3, max_relative = 1e-12);
        assert_relative_eq!(hilbert_weight(&[1], 0.3), (PI / 2.0).sqrt() * 0.09, max_relative = 1e-12);
        assert!(hilbert_weight(&[2], 1e-9) < 1e-20);
        assert!(WeightSequence::Hilbert.is_monotone_on(&[0.1, 0.4, 0.9], 10));
        let b = LocalOpBound::hilbert_to_sup(1);
        assert_relative_eq!(b.c, 1.0 / hilbert_weight(&[0], 1.0), max_relative = 1e-12);
    }

    #[test]
    fn division_examples() {
        assert_relative_eq!(division_bound(0, 0.4).unwrap(), 1.0, max_relative = 1e-11);
        assert_relative_eq!(division_bound(2, 0.5).unwrap(), 4.0, max_relative = 1e-11);
        let f = TruncSeries::<Rational>::from_i64s(&[0, 0, 0, 1, 1], 4);
        let (quot, _) = f.weierstrass_div_monomial(2).unwrap();
        let lhs = majorant_norm(&quot, 1.0).unwrap().value;
        let rhs = division_bound(2, 1.0).unwrap() * majorant_norm(&f, 1.0).unwrap().value;
        assert!(lhs <= rhs);
        assert_relative_eq!(lhs, 2.0, max_relative = 1e-11);
    }
}
