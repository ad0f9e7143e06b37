//! Lie iteration for perturbed quadratic singularities `z^2/2 + b(z)`.
//!
//! The formal layer runs `b_{n+1} = e^{-v_n}(a + b_n) - a`, `v_n = j(b_n)`
//! on exact series. The certified layer never touches series: it tracks
//! norm bounds of the corrections along the prisma map and checks that
//! they stay inside the sets where the Borel estimate applies.

use std::f64::consts::E;

use num_traits::One;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::norms::{quadratic_borel_constant, round_up, LocalOpBound, NormError};
use crate::prisma::{self, IterConfig, PrismaError, PrismaState};
use crate::series::{Derivation, Rational, SeriesError, Sign, TruncSeries};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum NormalFormError {
    #[error("normal form must be z^2/2")]
    NotQuadratic,
    #[error("perturbation must vanish to order 3, found order {0}")]
    LowOrderPerturbation(usize),
    #[error("parameter out of range: {0}")]
    Domain(String),
    #[error("certified bound leaves the admissible set at step {step}: {reason}")]
    CertificateBreach { step: usize, reason: String },
    #[error("composition of exponentials diverges: sum of ratios {0} >= 1")]
    Divergence(f64),
    #[error(transparent)]
    Series(#[from] SeriesError),
    #[error(transparent)]
    Prisma(#[from] PrismaError),
    #[error(transparent)]
    Norm(#[from] NormError),
}

/// One round of the iteration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LieRound {
    pub n: usize,
    /// `b_n`
    pub remainder: TruncSeries,
    /// coefficient series of `v_n = j(b_n)`
    pub field: TruncSeries,
    /// `f_n = a + b_n`
    pub function: TruncSeries,
    /// image of `z` under `e^{-v_n}`
    pub substitution: TruncSeries,
    pub field_order: Option<usize>,
    pub remainder_order: Option<usize>,
}

impl LieRound {
    pub fn derivation(&self) -> Derivation {
        Derivation::new(self.field.clone())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LieTrace {
    pub normal_form: TruncSeries,
    pub rounds: Vec<LieRound>,
}

fn q(n: i64, d: i64) -> Rational {
    Rational::new(n.into(), d.into())
}

/// `z^2/2`
pub fn quadratic_normal_form(trunc: usize) -> TruncSeries {
    TruncSeries::monomial(q(1, 2), 2, trunc)
}

/// Default number of known coefficients for `steps` rounds: `2^{steps+1} + 4`.
pub fn default_truncation(steps: usize) -> usize {
    (1usize << (steps + 1)) + 3
}

/// `(z^2/2, β z^n)` known modulo `z^{trunc+1}`.
pub fn perturbed_quadratic(beta: &Rational, n: usize, trunc: usize) -> (TruncSeries, TruncSeries) {
    (quadratic_normal_form(trunc), TruncSeries::monomial(beta.clone(), n, trunc))
}

/// `(z^2/2, z^3)`
pub fn morse_instance(trunc: usize) -> (TruncSeries, TruncSeries) {
    perturbed_quadratic(&Rational::one(), 3, trunc)
}

/// Runs rounds `0..=steps`; round `n` holds `b_n`, `v_n`, `f_n` and `e^{-v_n}(z)`.
pub fn lie_iterate_formal(a: &TruncSeries, b0: &TruncSeries, steps: usize) -> Result<LieTrace, NormalFormError> {
    let expected = quadratic_normal_form(a.trunc_order().max(2) as usize);
    if a.trunc_order() < 2 || !a.agrees_with(&expected) {
        return Err(NormalFormError::NotQuadratic);
    }
    let order = b0.certified_order();
    if order < 3 {
        return Err(NormalFormError::LowOrderPerturbation(order));
    }
    let mut rounds = Vec::with_capacity(steps + 1);
    let mut b = b0.clone();
    for n in 0..=steps {
        let f = a.add(&b);
        let v = Derivation::j_map(&b);
        let z = TruncSeries::identity(f.trunc_order().max(1) as usize);
        let sigma = v.lie_exp(&z, Sign::Minus)?;
        let next = if n < steps { Some(v.lie_exp(&f, Sign::Minus)?) } else { None };
        rounds.push(LieRound {
            n,
            remainder_order: b.valuation(),
            field_order: v.order(),
            remainder: b.clone(),
            field: v.into_field(),
            function: f,
            substitution: sigma,
        });
        if let Some(f_next) = next {
            b = f_next.sub(a);
        }
    }
    Ok(LieTrace {
        normal_form: a.clone(),
        rounds,
    })
}

/// Image of `z` under `... e^{-v_1} e^{-v_0}`, i.e. `σ_0 ∘ σ_1 ∘ ... ∘ σ_N`.
pub fn normalizer_series(trace: &LieTrace) -> Result<TruncSeries, NormalFormError> {
    let trunc = trace
        .rounds
        .first()
        .map(|r| r.substitution.trunc_order())
        .unwrap_or(trace.normal_form.trunc_order())
        .max(1) as usize;
    let mut acc = TruncSeries::identity(trunc);
    for round in &trace.rounds {
        acc = acc.compose(&round.substitution)?;
    }
    Ok(acc)
}

/// Parameters of a convergence certificate for `z^2/2 + β z^n`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CertParams {
    pub t0: f64,
    pub lambda: f64,
    pub mu: f64,
    pub r: f64,
    pub beta: f64,
    pub n: u32,
}

impl CertParams {
    /// `t0 = 0.004, λ = 1/4, μ = 1/2, r = 1/2, β = 1, n = 3`.
    pub fn morse_default() -> Self {
        CertParams {
            t0: 0.004,
            lambda: 0.25,
            mu: 0.5,
            r: 0.5,
            beta: 1.0,
            n: 3,
        }
    }

    fn validate(&self) -> Result<(), NormalFormError> {
        let open_unit = |x: f64| x > 0.0 && x < 1.0;
        let bad = |m: String| Err(NormalFormError::Domain(m));
        if !(self.t0 > 0.0 && self.t0.is_finite()) {
            return bad(format!("t0 = {} must be positive", self.t0));
        }
        if !open_unit(self.lambda) {
            return bad(format!("lambda = {} must lie in (0, 1)", self.lambda));
        }
        if !open_unit(self.mu) {
            return bad(format!("mu = {} must lie in (0, 1)", self.mu));
        }
        if !open_unit(self.r) {
            return bad(format!("r = {} must lie in (0, 1)", self.r));
        }
        if !(self.beta >= 0.0 && self.beta.is_finite()) {
            return bad(format!("beta = {} must be nonnegative", self.beta));
        }
        if self.n < 3 {
            return bad(format!("n = {} must be at least 3", self.n));
        }
        Ok(())
    }

    /// `ρ0 = 1 + λ - λ/μ`
    pub fn rho0(&self) -> f64 {
        1.0 + self.lambda - self.lambda / self.mu
    }

    /// Right-hand side of condition i: `r(1-μ)/μ^{n-1}`.
    pub fn rhs_i(&self) -> f64 {
        self.r * (1.0 - self.mu) / self.mu.powi(self.n as i32 - 1)
    }

    /// Right-hand side of condition ii: `2(1-r)^2 ρ0 λ^2 (1-μ)^2 / μ^{n-2}`.
    pub fn rhs_ii(&self) -> f64 {
        2.0 * (1.0 - self.r).powi(2) * self.rho0() * self.lambda.powi(2) * (1.0 - self.mu).powi(2)
            / self.mu.powi(self.n as i32 - 2)
    }

    /// Left-hand side of conditions i and ii: `e β t0^{n-2}`.
    pub fn lhs(&self) -> f64 {
        E * self.beta * self.t0.powi(self.n as i32 - 2)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Condition {
    pub holds: bool,
    pub lhs: f64,
    pub rhs: f64,
    /// `rhs - lhs`
    pub margin: f64,
}

impl Condition {
    fn new(lhs: f64, rhs: f64, strict: bool) -> Self {
        let holds = if strict { lhs < rhs } else { lhs <= rhs };
        Condition {
            holds,
            lhs,
            rhs,
            margin: rhs - lhs,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Certificate {
    pub params: CertParams,
    pub s0: f64,
    pub rho0: f64,
    /// constant of the quadratic estimate, `t0^2 / (2(1-r)^2)`
    #[serde(rename = "C")]
    pub c: f64,
    /// `R = 1/C`
    #[serde(rename = "R")]
    pub big_r: f64,
    pub t_inf: f64,
    pub condition_i: Condition,
    pub condition_ii: Condition,
    pub condition_iii: Condition,
    pub passes: bool,
}

/// Evaluates conditions i (`≤`), ii (`<`) and iii (`μ > λ`).
pub fn certify(params: CertParams) -> Result<Certificate, NormalFormError> {
    params.validate()?;
    let lhs = params.lhs();
    let condition_i = Condition::new(lhs, params.rhs_i(), false);
    let condition_ii = Condition::new(lhs, params.rhs_ii(), true);
    let condition_iii = Condition::new(params.lambda, params.mu, true);
    let c = params.t0.powi(2) / (2.0 * (1.0 - params.r).powi(2));
    Ok(Certificate {
        params,
        s0: params.mu * params.t0,
        rho0: params.rho0(),
        c,
        big_r: 1.0 / c,
        t_inf: (params.mu - params.lambda) / (1.0 - params.lambda) * params.t0,
        passes: condition_i.holds && condition_ii.holds && condition_iii.holds,
        condition_i,
        condition_ii,
        condition_iii,
    })
}

/// Supremum of admissible `t0`: `(min(rhs_i, rhs_ii)/(eβ))^{1/(n-2)}`.
pub fn threshold_t0(lambda: f64, mu: f64, r: f64, beta: f64, n: u32) -> Result<f64, NormalFormError> {
    let params = CertParams {
        t0: 1.0,
        lambda,
        mu,
        r,
        beta,
        n,
    };
    params.validate()?;
    if !(beta > 0.0) {
        return Err(NormalFormError::Domain(format!("beta = {beta} must be positive")));
    }
    if !(mu > lambda) {
        return Err(NormalFormError::Domain(format!("need mu > lambda, got mu = {mu}, lambda = {lambda}")));
    }
    let rhs = params.rhs_i().min(params.rhs_ii());
    Ok((rhs / (E * beta)).powf(1.0 / (n as f64 - 2.0)))
}

/// `(μ - λ)/(1 - λ) t0`
pub fn t_inf_of(t0: f64, lambda: f64, mu: f64) -> f64 {
    (mu - lambda) / (1.0 - lambda) * t0
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CertifiedStep {
    pub n: usize,
    pub t: f64,
    pub s: f64,
    /// bound on the calibrated norm of `u_n`
    pub bound: f64,
}

/// Norm-bound trajectory driven by the prisma map with `(k, l) = (1, 2)` and
/// `R = 1/C`; every step must stay in `{x <= r(t-s)}` and in the invariant set.
pub fn lie_iterate_certified(cert: &Certificate, steps: usize) -> Result<Vec<CertifiedStep>, NormalFormError> {
    lie_iterate_certified_with(cert, steps, cert.big_r)
}

/// As [`lie_iterate_certified`] with an explicit constant `R`.
pub fn lie_iterate_certified_with(
    cert: &Certificate,
    steps: usize,
    big_r: f64,
) -> Result<Vec<CertifiedStep>, NormalFormError> {
    let p = cert.params;
    let x0 = E * p.beta * cert.s0.powi(p.n as i32 - 1);
    let cfg = IterConfig::new(big_r, 1.0, 2.0, p.lambda)?;
    let mut state = PrismaState::new(p.t0, cert.s0, x0);
    let mut out = Vec::with_capacity(steps + 1);
    for n in 0..=steps {
        let gap = state.t - state.s;
        if !(state.x <= p.r * gap) {
            return Err(NormalFormError::CertificateBreach {
                step: n,
                reason: format!("bound {} exceeds r(t-s) = {}", state.x, p.r * gap),
            });
        }
        if !prisma::in_invariant_set(&state, &cfg) {
            return Err(NormalFormError::CertificateBreach {
                step: n,
                reason: format!(
                    "bound {} is not below R ρ s λ^2 (t-s)^2 = {} (or s <= λ t)",
                    state.x,
                    prisma::invariant_bound(&state.t, &state.s, &cfg).unwrap_or(f64::NAN)
                ),
            });
        }
        out.push(CertifiedStep {
            n,
            t: state.t,
            s: state.s,
            bound: state.x,
        });
        if n < steps {
            state = prisma::step(&state, &cfg)?;
        }
    }
    Ok(out)
}

/// `R = 2^{-k-shift} (1-r)^2 / (‖j‖ |a|)`; `shift = 2` in the homogeneous statement.
pub fn abstract_radius(k: f64, r: f64, j_norm: f64, a_norm: f64, shift: f64) -> f64 {
    2f64.powf(-k - shift) * (1.0 - r).powi(2) / (j_norm * a_norm)
}

/// Bound of `u ↦ j(g(u)(a))` at radius `t` for `‖u‖/(t-s) <= r`, built in the
/// local-operator algebra: `(K ‖u‖^2 |a|_t, 0, 2)` followed by `j = (1, 1, 0)`.
pub fn borel_chain_bound(t: f64, r: f64, u_norm: f64) -> Result<LocalOpBound, NormalFormError> {
    let quad = quadratic_borel_constant(r)?;
    let a_norm = t * t / 2.0;
    let g_of_u = LocalOpBound::new(quad * u_norm * u_norm * a_norm, 0.0, 2.0);
    Ok(LocalOpBound::division_by_z().compose(&g_of_u))
}

/// `1/(1 - Σ ν_i)` for an infinite composition of exponentials.
pub fn compose_exponentials_bound(nus: &[f64]) -> Result<f64, NormalFormError> {
    if let Some(bad) = nus.iter().find(|v| !(**v >= 0.0 && **v < 1.0)) {
        return Err(NormalFormError::Domain(format!("ratio {bad} must lie in [0, 1)")));
    }
    let sigma: f64 = nus.iter().sum();
    if sigma >= 1.0 {
        return Err(NormalFormError::Divergence(sigma));
    }
    Ok(round_up(1.0 / (1.0 - sigma)))
}
