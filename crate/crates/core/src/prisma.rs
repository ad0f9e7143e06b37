//! Finite-dimensional comparison dynamics on the prisma `{t > s > 0} × R_+`.
//!
//! The base map `(t, s) ↦ (s, s - λ(t - s))` shrinks the gap geometrically,
//! and the quadratic map `x ↦ x^2 / (R s^k (t-s)^l)` models how the size of
//! a correction evolves. Everything is generic over [`Scalar`] so that
//! rational inputs give exact trajectories.

use std::fmt::Debug;
use std::ops::{Add, Div, Mul, Neg, Sub};

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use thiserror::Error;

use crate::series::{rational_to_f64, Rational};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum PrismaError {
    #[error("base iteration leaves the domain: need t > s > λ t (t = {t}, s = {s}, λ = {lambda})")]
    LeavesDomain { t: f64, s: f64, lambda: f64 },
    #[error("limit is not positive: s0 = {s0} <= λ t0 = {bound}")]
    NonPositiveLimit { s0: f64, bound: f64 },
    #[error("state (t = {t}, s = {s}) is outside the prisma t > s > 0")]
    OutsidePrisma { t: f64, s: f64 },
    #[error("exact arithmetic needs integral exponents, got {0}")]
    NonIntegralExponent(f64),
    #[error("closed form is only available for exponent d = 2, got {0}")]
    UnsupportedDegree(u32),
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("sequence is empty")]
    Empty,
}

/// Number type of prisma computations: exact rationals or doubles.
pub trait Scalar:
    Clone
    + Debug
    + PartialOrd
    + Zero
    + One
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
{
    fn from_i64(n: i64) -> Self;
    fn to_f64(&self) -> f64;
    fn abs_val(&self) -> Self;
    /// Integer power; negative exponents invert.
    fn powi_exact(&self, e: i64) -> Self;
    /// Real power; exact types accept only integral exponents.
    fn pow_real(&self, e: f64) -> Result<Self, PrismaError>;
    fn to_json(&self) -> Value;
    /// `self / other`; may exploit size differences between the operands.
    fn quotient(&self, other: &Self) -> Self {
        self.clone() / other.clone()
    }
}

/// gcd with one Euclidean step first; the binary gcd of `num-bigint` is
/// quadratic when one operand is much longer than the other.
fn gcd_unbalanced(a: &BigInt, b: &BigInt) -> BigInt {
    let (big, small) = if a.magnitude() >= b.magnitude() { (a, b) } else { (b, a) };
    if small.is_zero() {
        return big.abs();
    }
    small.gcd(&(big % small))
}

impl Scalar for Rational {
    fn from_i64(n: i64) -> Self {
        Rational::from_integer(n.into())
    }
    fn to_f64(&self) -> f64 {
        rational_to_f64(self)
    }
    fn abs_val(&self) -> Self {
        self.abs()
    }
    fn powi_exact(&self, e: i64) -> Self {
        let e = i32::try_from(e).expect("exponent fits in i32");
        self.pow(e)
    }
    fn pow_real(&self, e: f64) -> Result<Self, PrismaError> {
        if e.fract() != 0.0 || e.abs() > i32::MAX as f64 {
            return Err(PrismaError::NonIntegralExponent(e));
        }
        Ok(self.powi_exact(e as i64))
    }
    fn to_json(&self) -> Value {
        Value::String(self.to_string())
    }
    fn quotient(&self, other: &Self) -> Self {
        assert!(!other.is_zero(), "division by zero");
        // (a/b) / (c/d) = (a/g1)(d/g2) / ((b/g2)(c/g1))
        let g1 = gcd_unbalanced(self.numer(), other.numer());
        let g2 = gcd_unbalanced(self.denom(), other.denom());
        let numer = (self.numer() / &g1) * (other.denom() / &g2);
        let denom = (self.denom() / &g2) * (other.numer() / &g1);
        if denom.is_negative() {
            Rational::new_raw(-numer, -denom)
        } else {
            Rational::new_raw(numer, denom)
        }
    }
}

impl Scalar for f64 {
    fn from_i64(n: i64) -> Self {
        n as f64
    }
    fn to_f64(&self) -> f64 {
        *self
    }
    fn abs_val(&self) -> Self {
        self.abs()
    }
    fn powi_exact(&self, e: i64) -> Self {
        self.powf(e as f64)
    }
    fn pow_real(&self, e: f64) -> Result<Self, PrismaError> {
        Ok(self.powf(e))
    }
    fn to_json(&self) -> Value {
        json!(self)
    }
}

/// Point `(t, s, x)` of the prisma, with the accumulated parameter of the
/// parametric variant when present.
#[derive(Debug, Clone, PartialEq)]
pub struct PrismaState<S: Scalar> {
    pub t: S,
    pub s: S,
    pub x: S,
    pub alpha: Option<S>,
}

impl<S: Scalar> PrismaState<S> {
    pub fn new(t: S, s: S, x: S) -> Self {
        PrismaState { t, s, x, alpha: None }
    }

    pub fn with_alpha(t: S, s: S, x: S, alpha: S) -> Self {
        PrismaState {
            t,
            s,
            x,
            alpha: Some(alpha),
        }
    }

    pub fn to_json(&self) -> Value {
        let mut obj = json!({"t": self.t.to_json(), "s": self.s.to_json(), "x": self.x.to_json()});
        if let Some(a) = &self.alpha {
            obj["alpha"] = a.to_json();
        }
        obj
    }

    fn check_prisma(&self) -> Result<(), PrismaError> {
        if self.t > self.s && self.s > S::zero() {
            Ok(())
        } else {
            Err(PrismaError::OutsidePrisma {
                t: self.t.to_f64(),
                s: self.s.to_f64(),
            })
        }
    }
}

/// Constants of the quadratic map `x ↦ x^d / (R s^k (t-s)^l)`.
#[derive(Debug, Clone, PartialEq)]
pub struct IterConfig<S: Scalar> {
    /// `R = 1/C`
    pub big_r: S,
    pub k: f64,
    pub l: f64,
    pub lambda: S,
    pub d: u32,
}

impl<S: Scalar> IterConfig<S> {
    pub fn new(big_r: S, k: f64, l: f64, lambda: S) -> Result<Self, PrismaError> {
        let cfg = IterConfig {
            big_r,
            k,
            l,
            lambda,
            d: 2,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn with_degree(mut self, d: u32) -> Result<Self, PrismaError> {
        self.d = d;
        self.validate()?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<(), PrismaError> {
        let bad = |m: &str| Err(PrismaError::InvalidConfig(m.to_string()));
        if !(self.lambda > S::zero() && self.lambda < S::one()) {
            return bad("lambda must lie in (0, 1)");
        }
        if !(self.big_r > S::zero()) {
            return bad("R must be positive");
        }
        if !(self.k >= 0.0 && self.l >= 0.0) {
            return bad("pole orders k, l must be nonnegative");
        }
        if self.d < 2 {
            return bad("exponent d must be at least 2");
        }
        Ok(())
    }

    pub fn to_json(&self) -> Value {
        json!({
            "R": self.big_r.to_json(),
            "k": self.k,
            "l": self.l,
            "lambda": self.lambda.to_json(),
            "d": self.d,
        })
    }
}

/// Growth factor of `s` under the base map: `ρ(t, s) = 1 + λ - λ t/s`.
pub fn rho<S: Scalar>(t: &S, s: &S, lambda: &S) -> S {
    S::one() + lambda.clone() - lambda.clone() * t.clone() / s.clone()
}

/// `(t, s) ↦ (s, s - λ(t - s))`.
pub fn base_step<S: Scalar>(t: &S, s: &S, lambda: &S) -> Result<(S, S), PrismaError> {
    if !(t > s && *s > lambda.clone() * t.clone()) {
        return Err(PrismaError::LeavesDomain {
            t: t.to_f64(),
            s: s.to_f64(),
            lambda: lambda.to_f64(),
        });
    }
    Ok((s.clone(), s.clone() - lambda.clone() * (t.clone() - s.clone())))
}

/// `t_∞ = (s0 - λ t0)/(1 - λ)`.
pub fn t_infinity<S: Scalar>(t0: &S, s0: &S, lambda: &S) -> Result<S, PrismaError> {
    let bound = lambda.clone() * t0.clone();
    if *s0 <= bound {
        return Err(PrismaError::NonPositiveLimit {
            s0: s0.to_f64(),
            bound: bound.to_f64(),
        });
    }
    Ok((s0.clone() - bound) / (S::one() - lambda.clone()))
}

/// Iterates of the base map, starting with `(t0, s0)`.
pub fn base_trajectory<S: Scalar>(t0: &S, s0: &S, lambda: &S, steps: usize) -> Result<Vec<(S, S)>, PrismaError> {
    let mut out = vec![(t0.clone(), s0.clone())];
    for _ in 0..steps {
        let (t, s) = out.last().expect("nonempty");
        let next = base_step(t, s, lambda)?;
        out.push(next);
    }
    Ok(out)
}

fn quadratic_image<S: Scalar>(state: &PrismaState<S>, cfg: &IterConfig<S>) -> Result<S, PrismaError> {
    let gap = state.t.clone() - state.s.clone();
    let denom = cfg.big_r.clone() * state.s.pow_real(cfg.k)? * gap.pow_real(cfg.l)?;
    Ok(state.x.powi_exact(cfg.d as i64).quotient(&denom))
}

/// `(t, s, x) ↦ (s, s - λ(t-s), x^d / (R s^k (t-s)^l))`.
pub fn step<S: Scalar>(state: &PrismaState<S>, cfg: &IterConfig<S>) -> Result<PrismaState<S>, PrismaError> {
    state.check_prisma()?;
    let x = quadratic_image(state, cfg)?;
    let gap = state.t.clone() - state.s.clone();
    Ok(PrismaState {
        t: state.s.clone(),
        s: state.s.clone() - cfg.lambda.clone() * gap,
        x,
        alpha: state.alpha.clone(),
    })
}

/// Parametric variant: also `α ↦ x + α`.
pub fn param_step<S: Scalar>(state: &PrismaState<S>, cfg: &IterConfig<S>) -> Result<PrismaState<S>, PrismaError> {
    let mut next = step(state, cfg)?;
    let alpha = state.alpha.clone().unwrap_or_else(S::zero);
    next.alpha = Some(state.x.clone() + alpha);
    Ok(next)
}

/// States `state, step(state), ...` (`steps + 1` entries).
pub fn trajectory<S: Scalar>(
    state: &PrismaState<S>,
    cfg: &IterConfig<S>,
    steps: usize,
    parametric: bool,
) -> Result<Vec<PrismaState<S>>, PrismaError> {
    let mut out = vec![state.clone()];
    for _ in 0..steps {
        let last = out.last().expect("nonempty");
        let next = if parametric {
            param_step(last, cfg)?
        } else {
            step(last, cfg)?
        };
        out.push(next);
    }
    Ok(out)
}

/// `K(t, s) = R ρ^k s^k λ^l (t-s)^l`, the size bound of the invariant set.
pub fn invariant_bound<S: Scalar>(t: &S, s: &S, cfg: &IterConfig<S>) -> Result<S, PrismaError> {
    let r = rho(t, s, &cfg.lambda);
    let gap = t.clone() - s.clone();
    Ok(cfg.big_r.clone()
        * (r * s.clone()).pow_real(cfg.k)?
        * (cfg.lambda.clone() * gap).pow_real(cfg.l)?)
}

/// Strict membership in `{|x| < K(t,s), s > λ t}`.
pub fn in_invariant_set<S: Scalar>(state: &PrismaState<S>, cfg: &IterConfig<S>) -> bool {
    if !(state.t > state.s && state.s > cfg.lambda.clone() * state.t.clone()) {
        return false;
    }
    match invariant_bound(&state.t, &state.s, cfg) {
        Ok(bound) => state.x.abs_val() < bound,
        Err(_) => false,
    }
}

/// Exact closed form of the third coordinate after `n` steps (`d = 2`):
/// `x_n = (R λ^l g0^l)^{1-2^n} λ^{ln} x0^{2^n} Π_{i<n} s_i^{-k 2^{n-1-i}}`,
/// with `g0 = t0 - s0` and `s_i` the base iterates. For `k = 0` this is
/// `(R λ^l g0^l)^{1-2^n} λ^{ln} x0^{2^n}`.
pub fn closed_form_xn<S: Scalar>(n: usize, state0: &PrismaState<S>, cfg: &IterConfig<S>) -> Result<S, PrismaError> {
    if cfg.d != 2 {
        return Err(PrismaError::UnsupportedDegree(cfg.d));
    }
    state0.check_prisma()?;
    let gap0 = state0.t.clone() - state0.s.clone();
    let base = cfg.big_r.clone() * (cfg.lambda.clone() * gap0).pow_real(cfg.l)?;
    // q_0 = x0/base, q_{i+1} = q_i^2 / s_i^k, so that
    // q_n = (x0/base)^{2^n} Π_{i<n} s_i^{-k 2^{n-1-i}}
    let mut q = state0.x.quotient(&base);
    if n > 0 {
        let base_pts = base_trajectory(&state0.t, &state0.s, &cfg.lambda, n - 1)?;
        for (_, s_i) in &base_pts {
            q = q.powi_exact(2);
            if cfg.k != 0.0 {
                q = q.quotient(&s_i.pow_real(cfg.k)?);
            }
        }
    }
    let factor = base * cfg.lambda.pow_real(cfg.l * n as f64)?;
    Ok(q.quotient(&(S::one() / factor)))
}

/// Upper bound `(R p_n^k s0^k λ^l g0^l)^{1-2^n} λ^{ln} x0^{2^n}` with
/// `p_n = Π_{i<n} ρ(t_i, s_i)`; equal to the iterate when `k = 0`.
pub fn closed_form_upper_bound<S: Scalar>(
    n: usize,
    state0: &PrismaState<S>,
    cfg: &IterConfig<S>,
) -> Result<S, PrismaError> {
    if cfg.d != 2 {
        return Err(PrismaError::UnsupportedDegree(cfg.d));
    }
    state0.check_prisma()?;
    let base_pts = base_trajectory(&state0.t, &state0.s, &cfg.lambda, n.saturating_sub(1))?;
    let mut p = S::one();
    for (t, s) in base_pts.iter().take(n) {
        p = p * rho(t, s, &cfg.lambda);
    }
    let two_n = 1i64 << n;
    let gap0 = state0.t.clone() - state0.s.clone();
    let k_n = cfg.big_r.clone()
        * (p * state0.s.clone()).pow_real(cfg.k)?
        * (cfg.lambda.clone() * gap0).pow_real(cfg.l)?;
    Ok(k_n.powi_exact(1 - two_n) * cfg.lambda.pow_real(cfg.l * n as f64)? * state0.x.powi_exact(two_n))
}

/// Side condition of the parametric set:
/// `Σ_n K^{1-2^n} ρ^{kn} λ^{ln} x^{2^n} <= r`, evaluated in doubles.
pub fn parametric_sum(state: &PrismaState<f64>, cfg: &IterConfig<f64>) -> Result<f64, PrismaError> {
    let k_ts = invariant_bound(&state.t, &state.s, cfg)?;
    let r = rho(&state.t, &state.s, &cfg.lambda);
    let ratio = state.x.abs() / k_ts;
    let mut total = 0.0;
    let mut q = ratio;
    for n in 0..64 {
        // K (x/K)^{2^n} ρ^{kn} λ^{ln}
        let term = k_ts * q * r.powf(cfg.k * n as f64) * cfg.lambda.powf(cfg.l * n as f64);
        total += term;
        if term <= total * 1e-18 || q == 0.0 {
            break;
        }
        q *= q;
    }
    Ok(total)
}

/// Membership in the parametric invariant set with budget `r`.
pub fn in_parametric_set(state: &PrismaState<f64>, cfg: &IterConfig<f64>, r: f64) -> bool {
    in_invariant_set(state, cfg) && parametric_sum(state, cfg).is_ok_and(|sum| sum <= r)
}

/// Witnesses for `|x_n| <= C^{ρ^n}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RapidConvergence {
    pub holds: bool,
    pub c: f64,
    pub rho: f64,
}

const RHO_MAX: f64 = 4.0;

/// Slope of `y` against `x` by least squares.
fn least_squares_slope(points: impl Iterator<Item = (f64, f64)> + Clone) -> f64 {
    let m = points.clone().count() as f64;
    let mean_x = points.clone().map(|p| p.0).sum::<f64>() / m;
    let mean_y = points.clone().map(|p| p.1).sum::<f64>() / m;
    let cov: f64 = points.clone().map(|p| (p.0 - mean_x) * (p.1 - mean_y)).sum();
    let var: f64 = points.map(|p| (p.0 - mean_x).powi(2)).sum();
    cov / var
}

/// Growth rate from second differences of `-log|x_n|`, which removes the
/// terms affine in `n` that polynomial gap factors add to `A ρ^n`.
/// `None` unless the indices are consecutive and the differences positive.
fn second_difference_slope(pts: &[(f64, f64)]) -> Option<f64> {
    if pts.len() < 4 || pts.windows(2).any(|w| w[1].0 != w[0].0 + 1.0) {
        return None;
    }
    let first: Vec<f64> = pts.windows(2).map(|w| w[1].1 - w[0].1).collect();
    let second: Vec<(f64, f64)> = first
        .windows(2)
        .zip(pts)
        .map(|(w, p)| (p.0, w[1] - w[0]))
        .collect();
    if second.iter().any(|p| !(p.1 > 0.0)) {
        return None;
    }
    Some(least_squares_slope(second.iter().map(|p| (p.0, p.1.ln()))))
}

/// Searches `0 < C < 1`, `1 < ρ <= 4` with `|x_n| <= C^{ρ^n}` for every entry.
///
/// `ρ` is the exponential of the least-squares slope of the logarithm of the
/// second differences of `-log|x_n|` against `n`, or of `log(-log|x_n|)` when
/// those are unavailable; `C` is then the smallest constant valid for all
/// terms. Zero entries satisfy any bound and are skipped.
pub fn rapid_convergence_check(xs: &[f64]) -> Result<RapidConvergence, PrismaError> {
    if xs.is_empty() {
        return Err(PrismaError::Empty);
    }
    let fail = RapidConvergence {
        holds: false,
        c: f64::NAN,
        rho: f64::NAN,
    };
    let mut pts = Vec::new();
    for (n, x) in xs.iter().enumerate() {
        let a = x.abs();
        if a == 0.0 {
            continue;
        }
        if !(a < 1.0) {
            return Ok(fail);
        }
        pts.push((n as f64, -a.ln()));
    }
    if pts.is_empty() {
        return Ok(RapidConvergence {
            holds: true,
            c: 0.0,
            rho: 2.0,
        });
    }
    let rho = if pts.len() == 1 {
        2.0
    } else if let Some(slope) = second_difference_slope(&pts) {
        slope
    } else {
        least_squares_slope(pts.iter().map(|p| (p.0, p.1.ln())))
    }
    .exp()
    .min(RHO_MAX);
    if !(rho > 1.0) {
        return Ok(fail);
    }
    // -log C = min_n (-log|x_n|) / ρ^n
    let neg_log_c = pts
        .iter()
        .map(|(n, y)| y / rho.powf(*n))
        .fold(f64::INFINITY, f64::min);
    let c = (-neg_log_c).exp();
    Ok(RapidConvergence {
        holds: c < 1.0,
        c,
        rho,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn q(n: i64, d: i64) -> Rational {
        Rational::new(n.into(), d.into())
    }

    fn cfg_example() -> IterConfig<Rational> {
        IterConfig::new(q(1, 1), 0.0, 1.0, q(1, 2)).unwrap()
    }

    #[test]
    fn base_step_examples() {
        assert_eq!(base_step(&q(1, 1), &q(3, 4), &q(1, 2)).unwrap(), (q(3, 4), q(5, 8)));
        let eps = q(1, 1000);
        let lam = q(1, 3);
        let (t, s) = base_step(&q(1, 1), &(q(1, 1) - eps.clone()), &lam).unwrap();
        assert_eq!(t, q(1, 1) - eps.clone());
        assert_eq!(s, q(1, 1) - eps.clone() - lam * eps);
        let traj = base_trajectory(&q(1, 1), &q(1, 2), &q(1, 4), 60).unwrap();
        let last = traj.last().unwrap().0.to_f64();
        assert_relative_eq!(last, 1.0 / 3.0, max_relative = 1e-12);
        assert!(base_step(&q(1, 1), &q(1, 2), &q(1, 2)).is_err());
    }

    #[test]
    fn t_infinity_examples() {
        assert_eq!(t_infinity(&q(1, 1), &q(1, 2), &q(1, 4)).unwrap(), q(1, 3));
        assert_eq!(t_infinity(&q(2, 1), &q(2, 1), &q(1, 4)).unwrap(), q(2, 1));
        assert_relative_eq!(t_infinity(&1.0, &0.6, &1e-12).unwrap(), 0.6, max_relative = 1e-9);
        assert!(matches!(
            t_infinity(&q(1, 1), &q(1, 4), &q(1, 4)),
            Err(PrismaError::NonPositiveLimit { .. })
        ));
    }

    #[test]
    fn step_examples() {
        let cfg = cfg_example();
        let s0 = PrismaState::new(q(1, 1), q(3, 4), q(1, 16));
        let s1 = step(&s0, &cfg).unwrap();
        assert_eq!(s1, PrismaState::new(q(3, 4), q(5, 8), q(1, 64)));
        let s2 = step(&s1, &cfg).unwrap();
        assert_eq!(s2, PrismaState::new(q(5, 8), q(9, 16), q(1, 512)));
        let z = step(&PrismaState::new(q(1, 1), q(3, 4), q(0, 1)), &cfg).unwrap();
        assert!(z.x.is_zero());
    }

    #[test]
    fn invariant_set_examples() {
        let cfg = cfg_example();
        assert!(in_invariant_set(&PrismaState::new(q(1, 1), q(3, 4), q(1, 16)), &cfg));
        assert!(!in_invariant_set(&PrismaState::new(q(1, 1), q(3, 4), q(1, 8)), &cfg));
        assert!(!in_invariant_set(&PrismaState::new(q(1, 1), q(1, 2), q(0, 1)), &cfg));
    }

    #[test]
    fn closed_form_examples() {
        let cfg = cfg_example();
        let s0 = PrismaState::new(q(1, 1), q(3, 4), q(1, 16));
        assert_eq!(closed_form_xn(0, &s0, &cfg).unwrap(), q(1, 16));
        assert_eq!(closed_form_xn(2, &s0, &cfg).unwrap(), q(1, 512));
        assert_eq!(closed_form_xn(1, &s0, &cfg).unwrap(), q(1, 64));
        assert_eq!(closed_form_upper_bound(2, &s0, &cfg).unwrap(), q(1, 512));
    }

    #[test]
    fn closed_form_with_s_pole_matches_iteration() {
        let cfg = IterConfig::new(q(3, 2), 2.0, 1.0, q(1, 3)).unwrap();
        let s0 = PrismaState::new(q(1, 1), q(4, 5), q(1, 100));
        let mut st = s0.clone();
        for n in 0..8 {
            assert_eq!(closed_form_xn(n, &s0, &cfg).unwrap(), st.x, "n = {n}");
            assert!(closed_form_upper_bound(n, &s0, &cfg).unwrap() >= st.x);
            st = step(&st, &cfg).unwrap();
        }
    }

    #[test]
    fn param_step_examples() {
        let cfg = cfg_example();
        let s0 = PrismaState::with_alpha(q(1, 1), q(3, 4), q(1, 16), q(0, 1));
        let s1 = param_step(&s0, &cfg).unwrap();
        assert_eq!(s1, PrismaState::with_alpha(q(3, 4), q(5, 8), q(1, 64), q(1, 16)));
        let z = param_step(&PrismaState::with_alpha(q(1, 1), q(3, 4), q(0, 1), q(0, 1)), &cfg).unwrap();
        assert!(z.x.is_zero() && z.alpha.unwrap().is_zero());
        let traj = trajectory(&s0, &cfg, 6, true).unwrap();
        let mut acc = q(0, 1);
        for (n, st) in traj.iter().enumerate() {
            assert_eq!(st.alpha.clone().unwrap(), acc, "n = {n}");
            acc += st.x.clone();
        }
    }

    #[test]
    fn rapid_examples() {
        let xs: Vec<f64> = (0..6).map(|n| 0.5f64.powi(1 << n)).collect();
        let r = rapid_convergence_check(&xs).unwrap();
        assert!(r.holds);
        assert_relative_eq!(r.rho, 2.0, max_relative = 1e-9);
        assert_relative_eq!(r.c, 0.5, max_relative = 1e-9);
        let harmonic: Vec<f64> = (1..30).map(|n| 1.0 / n as f64).collect();
        assert!(!rapid_convergence_check(&harmonic).unwrap().holds);
        let cfg = IterConfig::new(1.0, 0.0, 1.0, 0.5).unwrap();
        let traj = trajectory(&PrismaState::new(1.0, 0.75, 1.0 / 16.0), &cfg, 5, false).unwrap();
        let xs: Vec<f64> = traj.iter().map(|s| s.x).collect();
        let r = rapid_convergence_check(&xs).unwrap();
        assert!(r.holds);
        assert_relative_eq!(r.rho, 2.0, max_relative = 0.05);
        assert!(rapid_convergence_check(&[]).is_err());
    }

    #[test]
    fn exact_arithmetic_rejects_fractional_exponents() {
        let cfg = IterConfig::new(q(1, 1), 0.5, 1.0, q(1, 2)).unwrap();
        let s0 = PrismaState::new(q(1, 1), q(3, 4), q(1, 16));
        assert!(matches!(step(&s0, &cfg), Err(PrismaError::NonIntegralExponent(_))));
        let cfg = IterConfig::new(1.0, 0.5, 1.0, 0.5).unwrap();
        assert!(step(&PrismaState::new(1.0, 0.75, 1.0 / 16.0), &cfg).is_ok());
    }
}
