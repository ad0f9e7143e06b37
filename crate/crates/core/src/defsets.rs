//! Definition sets `{(t, s) : 0 < s < f(t)}` of partial morphisms.
//!
//! Boundaries are small monotone expression trees, so convolution of sets
//! is symbolic composition of boundaries and laws such as
//! `A_a ⋆ A_b = A_ab` hold exactly.

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DefSetError {
    #[error("point ({t}, {s}) is outside the domain 0 < s, 0 < t <= {cap}")]
    Domain { t: f64, s: f64, cap: f64 },
    #[error("invalid boundary: {0}")]
    InvalidBoundary(String),
    #[error("factor {0} >= 1 collapses the definition set")]
    Degenerate(f64),
    #[error("shape is outside the boundary-function grammar: {0}")]
    UnsupportedShape(String),
}

const REL_TOL: f64 = 1e-12;

fn close(a: f64, b: f64) -> bool {
    (a - b).abs() <= REL_TOL * a.abs().max(b.abs()).max(1.0)
}

/// Monotone nondecreasing boundary function; every node clips its value at 0.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "op", rename_all = "snake_case")]
pub enum BoundaryFn {
    /// `a t + c`
    Linear { a: f64, c: f64 },
    /// `gamma t^k`
    Power { gamma: f64, k: f64 },
    /// `outer(inner(t))`
    Compose {
        outer: Box<BoundaryFn>,
        inner: Box<BoundaryFn>,
    },
    Min {
        left: Box<BoundaryFn>,
        right: Box<BoundaryFn>,
    },
}

impl BoundaryFn {
    pub fn linear(a: f64, c: f64) -> Result<Self, DefSetError> {
        if !(a > 0.0 && a.is_finite() && c.is_finite()) {
            return Err(DefSetError::InvalidBoundary(format!("linear needs a > 0, got a = {a}, c = {c}")));
        }
        Ok(BoundaryFn::Linear { a, c })
    }

    pub fn power(gamma: f64, k: f64) -> Result<Self, DefSetError> {
        if !(gamma > 0.0 && k > 0.0 && gamma.is_finite() && k.is_finite()) {
            return Err(DefSetError::InvalidBoundary(format!(
                "power needs gamma > 0 and k > 0, got gamma = {gamma}, k = {k}"
            )));
        }
        if k == 1.0 {
            return Ok(BoundaryFn::Linear { a: gamma, c: 0.0 });
        }
        Ok(BoundaryFn::Power { gamma, k })
    }

    pub fn min(left: BoundaryFn, right: BoundaryFn) -> Self {
        BoundaryFn::Min {
            left: Box::new(left),
            right: Box::new(right),
        }
    }

    /// `outer ∘ inner`, simplified when the result stays in closed form.
    pub fn compose(outer: &BoundaryFn, inner: &BoundaryFn) -> BoundaryFn {
        use BoundaryFn::*;
        match (outer, inner) {
            // clipping commutes with the affine map when one side cannot go negative
            (Linear { a: a1, c: c1 }, Linear { a: a2, c: c2 }) if *c1 <= 0.0 || *c2 >= 0.0 => Linear {
                a: a1 * a2,
                c: a1 * c2 + c1,
            },
            (Power { gamma: g1, k: k1 }, Power { gamma: g2, k: k2 }) => {
                let k = k1 * k2;
                let gamma = g1 * g2.powf(*k1);
                if close(k, 1.0) {
                    Linear { a: gamma, c: 0.0 }
                } else {
                    Power { gamma, k }
                }
            }
            (Power { gamma, k }, Linear { a, c }) if *c == 0.0 => Power {
                gamma: gamma * a.powf(*k),
                k: *k,
            },
            (Linear { a, c }, Power { gamma, k }) if *c == 0.0 => Power { gamma: a * gamma, k: *k },
            _ => Compose {
                outer: Box::new(outer.clone()),
                inner: Box::new(inner.clone()),
            },
        }
    }

    pub fn eval(&self, t: f64) -> f64 {
        let v = match self {
            BoundaryFn::Linear { a, c } => a * t + c,
            BoundaryFn::Power { gamma, k } => gamma * t.max(0.0).powf(*k),
            BoundaryFn::Compose { outer, inner } => outer.eval(inner.eval(t)),
            BoundaryFn::Min { left, right } => left.eval(t).min(right.eval(t)),
        };
        v.max(0.0)
    }

    /// Structural equality with a relative tolerance on parameters.
    pub fn approx_eq(&self, other: &BoundaryFn) -> bool {
        use BoundaryFn::*;
        match (self, other) {
            (Linear { a, c }, Linear { a: a2, c: c2 }) => close(*a, *a2) && close(*c, *c2),
            (Power { gamma, k }, Power { gamma: g2, k: k2 }) => close(*gamma, *g2) && close(*k, *k2),
            (Compose { outer, inner }, Compose { outer: o2, inner: i2 }) => {
                outer.approx_eq(o2) && inner.approx_eq(i2)
            }
            (Min { left, right }, Min { left: l2, right: r2 }) => {
                (left.approx_eq(l2) && right.approx_eq(r2)) || (left.approx_eq(r2) && right.approx_eq(l2))
            }
            _ => false,
        }
    }

    /// Checks the grammar's parameter constraints throughout the tree.
    pub fn validate(&self) -> Result<(), DefSetError> {
        match self {
            BoundaryFn::Linear { a, c } => BoundaryFn::linear(*a, *c).map(|_| ()),
            BoundaryFn::Power { gamma, k } => BoundaryFn::power(*gamma, *k).map(|_| ()),
            BoundaryFn::Compose { outer, inner } => {
                outer.validate()?;
                inner.validate()
            }
            BoundaryFn::Min { left, right } => {
                left.validate()?;
                right.validate()
            }
        }
    }

    /// Slope at the origin by a Richardson-extrapolated difference quotient.
    pub fn slope_at_zero(&self, h: f64) -> f64 {
        let f0 = self.eval(0.0);
        let d1 = (self.eval(h) - f0) / h;
        let d2 = (self.eval(2.0 * h) - f0) / (2.0 * h);
        2.0 * d1 - d2
    }
}

/// Affine norm profile `‖u‖(t) = slope · t + offset`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NormProfile {
    pub slope: f64,
    pub offset: f64,
}

/// Region of the subdiagonal carrying a partial morphism.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DefSet {
    /// `{0 < s < f(t)}` for `0 < t <= cap`.
    Region { boundary: BoundaryFn, cap: f64 },
    /// `{0 < s <= t}`
    ClosedDiagonal { cap: f64 },
    /// A single pair, outside the boundary grammar.
    Point { t: f64, s: f64 },
}

const DEFAULT_CAP: f64 = 1.0;

impl DefSet {
    pub fn region(boundary: BoundaryFn) -> Self {
        DefSet::Region {
            boundary,
            cap: DEFAULT_CAP,
        }
    }

    /// Open diagonal `{s < t}`.
    pub fn open_diagonal() -> Self {
        Self::region(BoundaryFn::Linear { a: 1.0, c: 0.0 })
    }

    pub fn closed_diagonal() -> Self {
        DefSet::ClosedDiagonal { cap: DEFAULT_CAP }
    }

    /// Cone `{alpha s < t}`.
    pub fn cone(alpha: f64) -> Result<Self, DefSetError> {
        if !(alpha > 0.0) {
            return Err(DefSetError::InvalidBoundary(format!("cone needs alpha > 0, got {alpha}")));
        }
        Ok(Self::region(BoundaryFn::linear(1.0 / alpha, 0.0)?))
    }

    /// `{s < sqrt(t)}`, the set of the squaring map.
    pub fn square_map() -> Self {
        Self::region(BoundaryFn::Power { gamma: 1.0, k: 0.5 })
    }

    /// `{s < t - |shift|}`
    pub fn translation(shift: f64) -> Self {
        Self::region(BoundaryFn::Linear {
            a: 1.0,
            c: -shift.abs(),
        })
    }

    pub fn cap(&self) -> f64 {
        match self {
            DefSet::Region { cap, .. } | DefSet::ClosedDiagonal { cap } => *cap,
            DefSet::Point { t, .. } => *t,
        }
    }

    pub fn boundary(&self) -> Option<&BoundaryFn> {
        match self {
            DefSet::Region { boundary, .. } => Some(boundary),
            _ => None,
        }
    }

    /// Strict membership `0 < s < f(t)`; `s <= t` for the closed diagonal.
    pub fn contains(&self, t: f64, s: f64) -> Result<bool, DefSetError> {
        let cap = self.cap();
        if !(s > 0.0 && t > 0.0 && t <= cap) {
            return Err(DefSetError::Domain { t, s, cap });
        }
        Ok(match self {
            DefSet::Region { boundary, .. } => s < boundary.eval(t),
            DefSet::ClosedDiagonal { .. } => s <= t,
            DefSet::Point { t: pt, s: ps } => t == *pt && s == *ps,
        })
    }

    /// Same set up to boundary parameters.
    pub fn approx_eq(&self, other: &DefSet) -> bool {
        match (self, other) {
            (DefSet::Region { boundary: a, cap: c1 }, DefSet::Region { boundary: b, cap: c2 }) => {
                a.approx_eq(b) && close(*c1, *c2)
            }
            (DefSet::ClosedDiagonal { cap: a }, DefSet::ClosedDiagonal { cap: b }) => close(*a, *b),
            _ => self == other,
        }
    }
}

fn unsupported(set: &DefSet) -> DefSetError {
    DefSetError::UnsupportedShape(format!("{set:?}"))
}

/// `A ⋆ B`: with `A = {s < f(t)}` and `B = {s < g(t)}` the result is `{s < g(f(t))}`.
pub fn convolve(a: &DefSet, b: &DefSet) -> Result<DefSet, DefSetError> {
    match (a, b) {
        (DefSet::Point { .. }, _) => Err(unsupported(a)),
        (_, DefSet::Point { .. }) => Err(unsupported(b)),
        (DefSet::ClosedDiagonal { cap: c1 }, DefSet::ClosedDiagonal { cap: c2 }) => {
            Ok(DefSet::ClosedDiagonal { cap: c1.min(*c2) })
        }
        (DefSet::ClosedDiagonal { cap: c1 }, DefSet::Region { boundary, cap })
        | (DefSet::Region { boundary, cap }, DefSet::ClosedDiagonal { cap: c1 }) => Ok(DefSet::Region {
            boundary: boundary.clone(),
            cap: cap.min(*c1),
        }),
        (DefSet::Region { boundary: f, cap: c1 }, DefSet::Region { boundary: g, cap: c2 }) => {
            Ok(DefSet::Region {
                boundary: BoundaryFn::compose(g, f),
                cap: c1.min(*c2),
            })
        }
    }
}

/// `t` values and `s` values of an `n x n` lattice in `(0, cap]^2`, as `(t, s)` pairs.
pub fn square_grid(n: usize, cap: f64) -> Vec<(f64, f64)> {
    let step = cap / n as f64;
    (1..=n)
        .flat_map(|i| (1..=n).map(move |j| (i as f64 * step, j as f64 * step)))
        .collect()
}

/// Whether `A` and `A ⋆ A` agree at every grid pair `(t, s)`.
pub fn is_idempotent_on_grid(a: &DefSet, grid: &[(f64, f64)]) -> Result<bool, DefSetError> {
    let aa = convolve(a, a)?;
    agree_on_grid(a, &aa, grid)
}

/// Membership agreement of two sets on a grid of `(t, s)` pairs.
pub fn agree_on_grid(a: &DefSet, b: &DefSet, grid: &[(f64, f64)]) -> Result<bool, DefSetError> {
    for &(t, s) in grid {
        if a.contains(t, s)? != b.contains(t, s)? {
            return Ok(false);
        }
    }
    Ok(true)
}

/// `{s < t - ‖u‖(t)}`, where the exponential of `u` converges.
pub fn defset_of_exponential(norm: NormProfile) -> Result<DefSet, DefSetError> {
    if !(norm.slope >= 0.0 && norm.offset >= 0.0) {
        return Err(DefSetError::InvalidBoundary(format!(
            "norm profile must be nonnegative and nondecreasing, got {norm:?}"
        )));
    }
    if norm.slope >= 1.0 {
        return Err(DefSetError::Degenerate(norm.slope));
    }
    Ok(DefSet::region(BoundaryFn::linear(1.0 - norm.slope, -norm.offset)?))
}

/// `{s < Π(1 - α_i) t}` for an infinite composition of exponentials.
pub fn defset_of_product(alphas: &[f64]) -> Result<DefSet, DefSetError> {
    let mut a = 1.0;
    for &alpha in alphas {
        if alpha >= 1.0 {
            return Err(DefSetError::Degenerate(alpha));
        }
        if !(alpha >= 0.0) {
            return Err(DefSetError::InvalidBoundary(format!("factor {alpha} is negative")));
        }
        a *= 1.0 - alpha;
    }
    Ok(DefSet::region(BoundaryFn::linear(a, 0.0)?))
}

/// `Δ̄ ⋆ (A ⋆ Δ̄)`.
pub fn downset_hull(a: &DefSet) -> Result<DefSet, DefSetError> {
    let bar = DefSet::ClosedDiagonal { cap: a.cap() };
    convolve(&bar, &convolve(a, &bar)?)
}
