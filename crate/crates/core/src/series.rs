//! Truncated univariate power series with exact coefficients.
//!
//! A [`TruncSeries`] stores the coefficients it knows, `a_0 .. a_N`, and
//! stands for the class of all series agreeing with them modulo `z^{N+1}`.
//! Every operation returns the largest truncation order it can certify, so
//! a product of two series with high valuation may be known further than
//! either factor.
//!
//! Coefficients are generic over [`Coeff`]; the default is an exact
//! [`BigRational`]. The `f64` instance exists for numerical experiments on
//! long expansions where exact arithmetic becomes too slow.

use std::fmt;
use std::ops::{Add, Div, Mul, Neg, Sub};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

/// Exact rational number used throughout the crate.
pub type Rational = BigRational;

/// Errors raised by series operations.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SeriesError {
    #[error("composition needs an inner series with zero constant term")]
    CompositionDomain,
    #[error("series is not invertible: need f(0) = 0 and f'(0) != 0")]
    NotInvertible,
    #[error("binomial power needs constant term 1")]
    BinomialDomain,
    #[error("exponential of a derivation of order {0} does not terminate (order must be at least 2)")]
    NonTerminatingExponential(usize),
    #[error("division by z^{d} needs truncation order at least {d}, got {have}")]
    InsufficientTruncation { d: usize, have: isize },
    #[error("malformed series: {0}")]
    Parse(String),
}

/// Coefficient ring for [`TruncSeries`].
pub trait Coeff:
    Clone
    + fmt::Debug
    + PartialEq
    + Zero
    + One
    + Neg<Output = Self>
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
{
    fn from_rational(q: &Rational) -> Self;
    fn from_i64(n: i64) -> Self;
    /// Absolute value rounded to the nearest double.
    fn magnitude(&self) -> f64;
    /// `self += a * b`
    fn add_product(&mut self, a: &Self, b: &Self);
}

impl Coeff for Rational {
    fn from_rational(q: &Rational) -> Self {
        q.clone()
    }
    fn from_i64(n: i64) -> Self {
        Rational::from_integer(BigInt::from(n))
    }
    fn magnitude(&self) -> f64 {
        rational_to_f64(&self.abs())
    }
    fn add_product(&mut self, a: &Self, b: &Self) {
        if a.is_zero() || b.is_zero() {
            return;
        }
        *self += a * b;
    }
}

impl Coeff for f64 {
    fn from_rational(q: &Rational) -> Self {
        rational_to_f64(q)
    }
    fn from_i64(n: i64) -> Self {
        n as f64
    }
    fn magnitude(&self) -> f64 {
        self.abs()
    }
    fn add_product(&mut self, a: &Self, b: &Self) {
        *self += a * b;
    }
}

/// Nearest double to a rational, robust for huge numerators and denominators.
pub fn rational_to_f64(q: &Rational) -> f64 {
    if let (Some(n), Some(d)) = (q.numer().to_f64(), q.denom().to_f64()) {
        if n.is_finite() && d.is_finite() && d != 0.0 {
            return n / d;
        }
    }
    // Scale both parts down to 64 significant bits.
    let nb = q.numer().bits() as i64;
    let db = q.denom().bits() as i64;
    let shift_n = (nb - 64).max(0);
    let shift_d = (db - 64).max(0);
    let n = (q.numer() >> shift_n as usize).to_f64().unwrap_or(0.0);
    let d = (q.denom() >> shift_d as usize).to_f64().unwrap_or(1.0);
    let e = (shift_n - shift_d) as i32;
    (n / d) * 2f64.powi(e)
}

/// Parses "a", "-a", "a/b" (and decimal strings such as "0.25") into an exact rational.
pub fn parse_rational(text: &str) -> Result<Rational, SeriesError> {
    let s = text.trim();
    let bad = || SeriesError::Parse(format!("not a rational number: {text:?}"));
    if let Some((n, d)) = s.split_once('/') {
        let n: BigInt = n.trim().parse().map_err(|_| bad())?;
        let d: BigInt = d.trim().parse().map_err(|_| bad())?;
        if d.is_zero() {
            return Err(bad());
        }
        return Ok(Rational::new(n, d));
    }
    if let Ok(n) = s.parse::<BigInt>() {
        return Ok(Rational::from_integer(n));
    }
    let (mantissa, exp) = match s.find(['e', 'E']) {
        Some(i) => (&s[..i], s[i + 1..].parse::<i32>().map_err(|_| bad())?),
        None => (s, 0),
    };
    let (int_part, frac_part) = mantissa.split_once('.').ok_or_else(bad)?;
    let neg = int_part.starts_with('-');
    let digits = format!("{}{}", int_part.trim_start_matches(['-', '+']), frac_part);
    if digits.is_empty() || !digits.bytes().all(|b| b.is_ascii_digit()) {
        return Err(bad());
    }
    let mut num: BigInt = digits.parse().map_err(|_| bad())?;
    if neg {
        num = -num;
    }
    let scale = exp - frac_part.len() as i32;
    let ten = BigInt::from(10);
    Ok(if scale >= 0 {
        Rational::from_integer(num * num_traits::pow(ten, scale as usize))
    } else {
        Rational::new(num, num_traits::pow(ten, (-scale) as usize))
    })
}

/// Sign of a Lie exponential, `e^{+v}` or `e^{-v}`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sign {
    Plus,
    Minus,
}

impl Sign {
    pub fn from_i32(s: i32) -> Sign {
        if s < 0 {
            Sign::Minus
        } else {
            Sign::Plus
        }
    }
}

/// Power series known modulo `z^{N+1}`.
#[derive(Clone, PartialEq)]
pub struct TruncSeries<C: Coeff = Rational> {
    coeffs: Vec<C>,
}

/// `out[k] = sum_i a[i] b[k-i]` for `k < len`, missing entries read as zero.
fn mul_trunc<C: Coeff>(a: &[C], b: &[C], len: usize) -> Vec<C> {
    let mut out = vec![C::zero(); len];
    for (i, ai) in a.iter().enumerate().take(len) {
        if ai.is_zero() {
            continue;
        }
        for (j, bj) in b.iter().enumerate().take(len - i) {
            out[i + j].add_product(ai, bj);
        }
    }
    out
}

impl<C: Coeff> TruncSeries<C> {
    /// Series with the given known coefficients; truncation order is `len - 1`.
    pub fn from_coeffs(coeffs: Vec<C>) -> Self {
        TruncSeries { coeffs }
    }

    /// Zero known modulo `z^{trunc+1}`.
    pub fn zero(trunc: usize) -> Self {
        Self::from_coeffs(vec![C::zero(); trunc + 1])
    }

    pub fn one(trunc: usize) -> Self {
        Self::monomial(C::one(), 0, trunc)
    }

    /// The coordinate `z`.
    pub fn identity(trunc: usize) -> Self {
        Self::monomial(C::one(), 1, trunc)
    }

    /// `c z^k` known modulo `z^{trunc+1}` (vanishes if `k > trunc`).
    pub fn monomial(c: C, k: usize, trunc: usize) -> Self {
        let mut coeffs = vec![C::zero(); trunc + 1];
        if k <= trunc {
            coeffs[k] = c;
        }
        Self::from_coeffs(coeffs)
    }

    pub fn from_i64s(values: &[i64], trunc: usize) -> Self {
        let mut coeffs = vec![C::zero(); trunc + 1];
        for (k, v) in values.iter().enumerate().take(trunc + 1) {
            coeffs[k] = C::from_i64(*v);
        }
        Self::from_coeffs(coeffs)
    }

    /// Highest known power; `-1` when nothing is known.
    pub fn trunc_order(&self) -> isize {
        self.coeffs.len() as isize - 1
    }

    /// Number of known coefficients.
    pub fn known_len(&self) -> usize {
        self.coeffs.len()
    }

    pub fn coeffs(&self) -> &[C] {
        &self.coeffs
    }

    /// Coefficient of `z^k`, or `None` beyond the truncation.
    pub fn coeff(&self, k: usize) -> Option<&C> {
        self.coeffs.get(k)
    }

    /// Index of the first nonzero known coefficient.
    pub fn valuation(&self) -> Option<usize> {
        self.coeffs.iter().position(|c| !c.is_zero())
    }

    /// Valuation, or the known length when all known coefficients vanish.
    /// This is the largest `m` for which the series is certainly `O(z^m)`.
    pub fn certified_order(&self) -> usize {
        self.valuation().unwrap_or(self.coeffs.len())
    }

    pub fn is_zero(&self) -> bool {
        self.valuation().is_none()
    }

    /// Forgets coefficients above `z^trunc`.
    pub fn truncate(&self, trunc: usize) -> Self {
        let n = (trunc + 1).min(self.coeffs.len());
        Self::from_coeffs(self.coeffs[..n].to_vec())
    }

    fn truncate_len(mut self, len: usize) -> Self {
        self.coeffs.truncate(len);
        self
    }

    /// Equality on the common truncation.
    pub fn agrees_with(&self, other: &Self) -> bool {
        self.coeffs.iter().zip(&other.coeffs).all(|(a, b)| a == b)
    }

    pub fn add(&self, other: &Self) -> Self {
        let len = self.coeffs.len().min(other.coeffs.len());
        Self::from_coeffs(
            (0..len)
                .map(|k| self.coeffs[k].clone() + other.coeffs[k].clone())
                .collect(),
        )
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.add(&other.neg())
    }

    pub fn neg(&self) -> Self {
        Self::from_coeffs(self.coeffs.iter().cloned().map(|c| -c).collect())
    }

    pub fn scale(&self, c: &C) -> Self {
        Self::from_coeffs(self.coeffs.iter().map(|a| a.clone() * c.clone()).collect())
    }

    /// Cauchy product; known up to `min(N_f + ord g, N_g + ord f)`.
    pub fn mul(&self, other: &Self) -> Self {
        let len = (self.coeffs.len() + other.certified_order())
            .min(other.coeffs.len() + self.certified_order());
        Self::from_coeffs(mul_trunc(&self.coeffs, &other.coeffs, len))
    }

    /// `self ∘ inner`; the inner series must vanish at the origin.
    pub fn compose(&self, inner: &Self) -> Result<Self, SeriesError> {
        match inner.coeffs.first() {
            Some(c) if c.is_zero() => {}
            _ => return Err(SeriesError::CompositionDomain),
        }
        let p = inner.certified_order();
        let lf = self.coeffs.len();
        if lf == 0 {
            return Ok(Self::from_coeffs(Vec::new()));
        }
        let q = (1..lf).find(|&k| !self.coeffs[k].is_zero()).unwrap_or(lf);
        let len = (p * lf).min(inner.coeffs.len() + (q - 1) * p);
        // Horner: (((f_{m} g + f_{m-1}) g + ...) g + f_0)
        let top = (0..lf).rev().find(|&k| !self.coeffs[k].is_zero());
        let mut acc = vec![C::zero(); len];
        if let Some(top) = top {
            if len > 0 {
                acc[0] = self.coeffs[top].clone();
            }
            for k in (0..top).rev() {
                acc = mul_trunc(&acc, &inner.coeffs, len);
                if len > 0 {
                    acc[0] = acc[0].clone() + self.coeffs[k].clone();
                }
            }
        }
        Ok(Self::from_coeffs(acc))
    }

    /// Compositional inverse `g` with `self ∘ g = z`, by coefficient recursion.
    pub fn invert(&self) -> Result<Self, SeriesError> {
        let len = self.coeffs.len();
        if len < 2 || !self.coeffs[0].is_zero() || self.coeffs[1].is_zero() {
            return Err(SeriesError::NotInvertible);
        }
        let f1 = self.coeffs[1].clone();
        let mut g = vec![C::zero(); len];
        g[1] = C::one() / f1.clone();
        // powers[k][m] = [z^m] g^k, filled column by column
        let mut powers: Vec<Vec<C>> = vec![vec![C::zero(); len]; len];
        powers[1][1] = g[1].clone();
        for m in 2..len {
            for k in 2..=m {
                let mut acc = C::zero();
                for i in 1..=(m + 1 - k) {
                    acc.add_product(&g[i], &powers[k - 1][m - i]);
                }
                powers[k][m] = acc;
            }
            let mut s = C::zero();
            for (c, power) in self.coeffs[2..=m].iter().zip(&powers[2..=m]) {
                s.add_product(c, &power[m]);
            }
            g[m] = -(s / f1.clone());
            powers[1][m] = g[m].clone();
        }
        Ok(Self::from_coeffs(g))
    }

    /// `self^e` for a series with constant term one.
    pub fn binomial_pow(&self, e: &Rational) -> Result<Self, SeriesError> {
        match self.coeffs.first() {
            Some(c) if c.is_one() => {}
            _ => return Err(SeriesError::BinomialDomain),
        }
        let len = self.coeffs.len();
        let e1 = C::from_rational(&(e + Rational::one()));
        let mut out: Vec<C> = Vec::with_capacity(len);
        out.push(C::one());
        for k in 1..len {
            let mut acc = C::zero();
            for i in 1..=k {
                let w = e1.clone() * C::from_i64(i as i64) - C::from_i64(k as i64);
                acc.add_product(&(w * self.coeffs[i].clone()), &out[k - i]);
            }
            out.push(acc / C::from_i64(k as i64));
        }
        Ok(Self::from_coeffs(out))
    }

    /// Formal derivative; loses one order of truncation.
    pub fn derivative(&self) -> Self {
        Self::from_coeffs(
            self.coeffs
                .iter()
                .enumerate()
                .skip(1)
                .map(|(k, c)| c.clone() * C::from_i64(k as i64))
                .collect(),
        )
    }

    /// Euler operator `z f'`.
    pub fn nabla(&self) -> Self {
        Self::from_coeffs(
            self.coeffs
                .iter()
                .enumerate()
                .map(|(k, c)| c.clone() * C::from_i64(k as i64))
                .collect(),
        )
    }

    /// Coefficientwise product.
    pub fn hadamard(&self, other: &Self) -> Self {
        Self::from_coeffs(
            self.coeffs
                .iter()
                .zip(&other.coeffs)
                .map(|(a, b)| a.clone() * b.clone())
                .collect(),
        )
    }

    /// Splits `f = z^d q + p` with `deg p < d`.
    pub fn weierstrass_div_monomial(&self, d: usize) -> Result<(Self, Self), SeriesError> {
        let len = self.coeffs.len();
        if d >= len {
            return Err(SeriesError::InsufficientTruncation {
                d,
                have: self.trunc_order(),
            });
        }
        let q = Self::from_coeffs(self.coeffs[d..].to_vec());
        let mut p = self.coeffs[..d].to_vec();
        p.resize(len, C::zero());
        Ok((q, Self::from_coeffs(p)))
    }

    /// Nonnegative coefficients `|a_k|` rounded to doubles.
    pub fn magnitudes(&self) -> Vec<f64> {
        self.coeffs.iter().map(Coeff::magnitude).collect()
    }
}

impl TruncSeries<Rational> {
    pub fn from_rationals(values: &[Rational], trunc: usize) -> Self {
        let mut coeffs = vec![Rational::zero(); trunc + 1];
        for (k, v) in values.iter().enumerate().take(trunc + 1) {
            coeffs[k] = v.clone();
        }
        Self::from_coeffs(coeffs)
    }

    /// Parses a list of fraction strings; truncation order is `len - 1`.
    pub fn from_strs(values: &[&str]) -> Result<Self, SeriesError> {
        Ok(Self::from_coeffs(
            values
                .iter()
                .map(|s| parse_rational(s))
                .collect::<Result<_, _>>()?,
        ))
    }

    pub fn to_f64(&self) -> TruncSeries<f64> {
        TruncSeries::from_coeffs(self.coeffs.iter().map(rational_to_f64).collect())
    }

    pub fn to_doc(&self) -> SeriesDoc {
        SeriesDoc {
            trunc_order: self.trunc_order(),
            coeffs: self.coeffs.iter().map(|c| c.to_string()).collect(),
        }
    }

    pub fn from_doc(doc: &SeriesDoc) -> Result<Self, SeriesError> {
        if doc.trunc_order + 1 != doc.coeffs.len() as isize {
            return Err(SeriesError::Parse(format!(
                "trunc_order {} needs {} coefficients, got {}",
                doc.trunc_order,
                doc.trunc_order + 1,
                doc.coeffs.len()
            )));
        }
        let refs: Vec<&str> = doc.coeffs.iter().map(String::as_str).collect();
        Self::from_strs(&refs)
    }
}

/// Wire form of an exact series: `{"trunc_order": N, "coeffs": ["num/den", ...]}`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SeriesDoc {
    pub trunc_order: isize,
    pub coeffs: Vec<String>,
}

impl Serialize for TruncSeries<Rational> {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        self.to_doc().serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for TruncSeries<Rational> {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let doc = SeriesDoc::deserialize(deserializer)?;
        Self::from_doc(&doc).map_err(serde::de::Error::custom)
    }
}

impl<C: Coeff + fmt::Display> fmt::Display for TruncSeries<C> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut first = true;
        for (k, c) in self.coeffs.iter().enumerate() {
            if c.is_zero() {
                continue;
            }
            if !first {
                write!(f, " + ")?;
            }
            first = false;
            match k {
                0 => write!(f, "{c}")?,
                1 => write!(f, "({c})z")?,
                _ => write!(f, "({c})z^{k}")?,
            }
        }
        if first {
            write!(f, "0")?;
        }
        write!(f, " + O(z^{})", self.coeffs.len())
    }
}

impl<C: Coeff> fmt::Debug for TruncSeries<C> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("TruncSeries")
            .field("trunc_order", &self.trunc_order())
            .field("coeffs", &self.coeffs)
            .finish()
    }
}

impl<C: Coeff> Add for &TruncSeries<C> {
    type Output = TruncSeries<C>;
    fn add(self, rhs: Self) -> TruncSeries<C> {
        TruncSeries::add(self, rhs)
    }
}

impl<C: Coeff> Sub for &TruncSeries<C> {
    type Output = TruncSeries<C>;
    fn sub(self, rhs: Self) -> TruncSeries<C> {
        TruncSeries::sub(self, rhs)
    }
}

impl<C: Coeff> Mul for &TruncSeries<C> {
    type Output = TruncSeries<C>;
    fn mul(self, rhs: Self) -> TruncSeries<C> {
        TruncSeries::mul(self, rhs)
    }
}

impl<C: Coeff> Neg for &TruncSeries<C> {
    type Output = TruncSeries<C>;
    fn neg(self) -> TruncSeries<C> {
        TruncSeries::neg(self)
    }
}

/// Vector field `v(z) ∂_z`, stored by its coefficient series.
#[derive(Clone, PartialEq)]
pub struct Derivation<C: Coeff = Rational> {
    field: TruncSeries<C>,
}

impl<C: Coeff> fmt::Debug for Derivation<C> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_tuple("Derivation").field(&self.field).finish()
    }
}

impl<C: Coeff> Derivation<C> {
    pub fn new(field: TruncSeries<C>) -> Self {
        Derivation { field }
    }

    pub fn field(&self) -> &TruncSeries<C> {
        &self.field
    }

    pub fn into_field(self) -> TruncSeries<C> {
        self.field
    }

    /// Order of the leading nonzero coefficient; `None` stands for `+∞`.
    pub fn order(&self) -> Option<usize> {
        self.field.valuation()
    }

    /// Right inverse of `v ↦ z v`: the field `(b(z) - b(0)) / z`.
    pub fn j_map(b: &TruncSeries<C>) -> Self {
        Derivation::new(TruncSeries::from_coeffs(
            b.coeffs.iter().skip(1).cloned().collect(),
        ))
    }

    /// `v(f) = v(z) f'(z)`.
    pub fn apply(&self, f: &TruncSeries<C>) -> TruncSeries<C> {
        self.field.mul(&f.derivative())
    }

    /// `Σ_k (±1)^k v^k(f) / k!`, which terminates modulo the truncation.
    pub fn lie_exp(&self, f: &TruncSeries<C>, sign: Sign) -> Result<TruncSeries<C>, SeriesError> {
        let order = self.field.certified_order();
        if order < 2 {
            return Err(SeriesError::NonTerminatingExponential(order));
        }
        let mut sum = f.clone();
        let mut term = f.clone();
        let mut k: i64 = 1;
        loop {
            let len = sum.known_len();
            let next = self.apply(&term).truncate_len(len);
            let factor = match sign {
                Sign::Plus => C::one() / C::from_i64(k),
                Sign::Minus => -(C::one() / C::from_i64(k)),
            };
            term = next.scale(&factor);
            sum = sum.add(&term);
            if term.certified_order() >= sum.known_len() {
                return Ok(sum);
            }
            k += 1;
        }
    }
}

impl<C: Coeff> TruncSeries<C> {
    /// Series `Σ_{n ≤ N} c zⁿ` with every coefficient equal to `c`.
    pub fn geometric(c: C, trunc: usize) -> Self {
        Self::from_coeffs(vec![c; trunc + 1])
    }
}
