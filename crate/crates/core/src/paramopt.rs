//! Choice of the certificate parameters `(λ, μ, r)`.
//!
//! Two objectives measure the certified convergence radius `e t_∞`: the
//! basic one keeps `r = 1/2`, the equalized one picks `r` so that the two
//! admissibility conditions coincide. The Q-table compares the certified
//! radius with the true radius of the normalizing transformation.

use std::f64::consts::E;

use num_dual::DualNum;
use num_rational::BigRational;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::optim::{self, Minimum, Negated, Objective2};
use crate::series::{SeriesError, TruncSeries};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum OptError {
    #[error("parameter out of range: {0}")]
    Domain(String),
    #[error("radius estimate is inconclusive: {0}")]
    Inconclusive(String),
    #[error(transparent)]
    Series(#[from] SeriesError),
}

fn check_triangle(lambda: f64, mu: f64) -> Result<(), OptError> {
    if optim::in_triangle(lambda, mu) {
        Ok(())
    } else {
        Err(OptError::Domain(format!(
            "need 0 < lambda < mu < 1, got lambda = {lambda}, mu = {mu}"
        )))
    }
}

fn one<D: DualNum<Primitive = f64>>() -> D {
    D::from(1.0)
}

/// `ρ = 1 + λ - λ/μ`
fn rho_d<D: DualNum<Primitive = f64>>(lambda: &D, mu: &D) -> D {
    one::<D>() + lambda.clone() - lambda.clone() / mu.clone()
}

/// `(1 + λ - λ/μ) λ^2 (1-μ)^2 / (2μ) · (μ-λ)/(1-λ)`
pub fn f_basic_generic<D: DualNum<Primitive = f64>>(lambda: D, mu: D) -> D {
    let rho = rho_d(&lambda, &mu);
    let om = one::<D>() - mu.clone();
    rho * lambda.powi(2) * om.clone() * om / (mu.clone() * 2.0) * (mu - lambda.clone())
        / (one::<D>() - lambda)
}

/// Root in `(0, 1)` of `r/(1-r)^2 = ν`, written without cancellation.
pub fn solve_r_generic<D: DualNum<Primitive = f64>>(nu: D) -> D {
    let two_nu = nu.clone() * 2.0;
    two_nu.clone() / (one::<D>() + two_nu + (one::<D>() + nu * 4.0).sqrt())
}

/// `ν = 2 ρ λ^2 μ (1-μ)`
pub fn nu_generic<D: DualNum<Primitive = f64>>(lambda: &D, mu: &D) -> D {
    rho_d(lambda, mu) * lambda.powi(2) * mu.clone() * (one::<D>() - mu.clone()) * 2.0
}

/// `r (1-μ)/μ^2 · (μ-λ)/(1-λ)` with the equalizing `r`.
pub fn f_equalized_generic<D: DualNum<Primitive = f64>>(lambda: D, mu: D) -> D {
    let r = solve_r_generic(nu_generic(&lambda, &mu));
    r * (one::<D>() - mu.clone()) / mu.powi(2) * (mu - lambda.clone()) / (one::<D>() - lambda)
}

/// `R(n, β)/T_∞` with the equalizing `r`; independent of `β`.
pub fn q_generic<D: DualNum<Primitive = f64>>(n: u32, lambda: D, mu: D) -> D {
    let nf = n as f64;
    let r = solve_r_generic(nu_generic(&lambda, &mu));
    let inner = mu.powi(n as i32 - 1) * E / (r * (one::<D>() - mu.clone()) * nf);
    (one::<D>() - lambda.clone()) / (mu - lambda) * (1.0 - 2.0 / nf).sqrt() * inner.powf(1.0 / (nf - 2.0))
}

pub fn f_basic(lambda: f64, mu: f64) -> Result<f64, OptError> {
    check_triangle(lambda, mu)?;
    Ok(f_basic_generic(lambda, mu))
}

pub fn f_equalized(lambda: f64, mu: f64) -> Result<f64, OptError> {
    check_triangle(lambda, mu)?;
    Ok(f_equalized_generic(lambda, mu))
}

pub fn solve_r(nu: f64) -> Result<f64, OptError> {
    if !(nu > 0.0 && nu.is_finite()) {
        return Err(OptError::Domain(format!("nu = {nu} must be positive")));
    }
    Ok(solve_r_generic(nu))
}

/// `R(n, β) = (1/(nβ))^{1/(n-2)} sqrt(1 - 2/n)`
pub fn true_radius(n: u32, beta: f64) -> Result<f64, OptError> {
    if n < 3 {
        return Err(OptError::Domain(format!("n = {n} must be at least 3")));
    }
    if !(beta > 0.0) {
        return Err(OptError::Domain(format!("beta = {beta} must be positive")));
    }
    let nf = n as f64;
    Ok((1.0 / (nf * beta)).powf(1.0 / (nf - 2.0)) * (1.0 - 2.0 / nf).sqrt())
}

pub fn q_value(n: u32, lambda: f64, mu: f64) -> Result<f64, OptError> {
    if n < 3 {
        return Err(OptError::Domain(format!("n = {n} must be at least 3")));
    }
    check_triangle(lambda, mu)?;
    Ok(q_generic(n, lambda, mu))
}

struct Basic;
impl Objective2 for Basic {
    fn eval<D: DualNum<Primitive = f64>>(&self, x: D, y: D) -> D {
        f_basic_generic(x, y)
    }
}

struct Equalized;
impl Objective2 for Equalized {
    fn eval<D: DualNum<Primitive = f64>>(&self, x: D, y: D) -> D {
        f_equalized_generic(x, y)
    }
}

struct QObjective(u32);
impl Objective2 for QObjective {
    fn eval<D: DualNum<Primitive = f64>>(&self, x: D, y: D) -> D {
        q_generic(self.0, x, y)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OptResult {
    pub lambda: f64,
    pub mu: f64,
    pub r: Option<f64>,
    /// `e t_∞`
    pub e_t_inf: f64,
    pub t_inf: f64,
    pub iterations: usize,
    pub gradient_norm: f64,
}

fn basic_result(m: Minimum) -> OptResult {
    let value = f_basic_generic(m.x, m.y);
    OptResult {
        lambda: m.x,
        mu: m.y,
        r: Some(0.5),
        e_t_inf: value,
        t_inf: value / E,
        iterations: m.iterations,
        gradient_norm: m.gradient_norm,
    }
}

fn equalized_result(m: Minimum) -> OptResult {
    let value = f_equalized_generic(m.x, m.y);
    OptResult {
        lambda: m.x,
        mu: m.y,
        r: Some(solve_r_generic(nu_generic(&m.x, &m.y))),
        e_t_inf: value,
        t_inf: value / E,
        iterations: m.iterations,
        gradient_norm: m.gradient_norm,
    }
}

/// Maximizer of the basic objective (`r = 1/2`).
pub fn maximize_basic() -> OptResult {
    basic_result(optim::minimize(&Negated(&Basic)))
}

pub fn maximize_basic_from(start: (f64, f64)) -> OptResult {
    basic_result(optim::minimize_from(&Negated(&Basic), start))
}

/// Maximizer of the equalized objective.
pub fn maximize_equalized() -> OptResult {
    equalized_result(optim::minimize(&Negated(&Equalized)))
}

pub fn maximize_equalized_from(start: (f64, f64)) -> OptResult {
    equalized_result(optim::minimize_from(&Negated(&Equalized), start))
}

/// Residual `8μ^3 - 4μ^2 - 7μ + 4` of the basic optimum.
pub fn basic_cubic_residual(mu: f64) -> f64 {
    ((8.0 * mu - 4.0) * mu - 7.0) * mu + 4.0
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QRow {
    pub n: u32,
    pub lambda: f64,
    pub mu: f64,
    #[serde(rename = "Q")]
    pub q: f64,
    pub true_radius: f64,
    /// certified `t_∞` at `β`
    pub t_inf: f64,
}

/// Row of the table for one `n`, with radii reported at `β`.
pub fn q_row(n: u32, beta: f64) -> Result<QRow, OptError> {
    let radius = true_radius(n, beta)?;
    let m = optim::minimize(&QObjective(n));
    Ok(QRow {
        n,
        lambda: m.x,
        mu: m.y,
        q: m.value,
        true_radius: radius,
        t_inf: radius / m.value,
    })
}

/// Rows for each `n`, computed concurrently and returned in input order.
pub fn q_table(ns: &[u32], beta: f64) -> Result<Vec<QRow>, OptError> {
    std::thread::scope(|scope| {
        let handles: Vec<_> = ns.iter().map(|&n| scope.spawn(move || q_row(n, beta))).collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("q-table worker panicked"))
            .collect()
    })
}

/// Minimum number of coefficients for the series radius estimate.
pub const ORACLE_MIN_TERMS: usize = 50;

/// Radius of convergence of the inverse of `z sqrt(1 + 2β z^{n-2})`,
/// estimated from `terms` coefficients.
///
/// The coefficients behave like `c m^γ R^{-m}`, so the plain root test
/// converges only like `log m / m`; instead `log|a_m| = -m log R + γ log m + δ`
/// is fitted by least squares over the upper half of the nonzero terms.
pub fn radius_oracle_series(n: u32, beta: f64, terms: usize) -> Result<f64, OptError> {
    if n < 3 {
        return Err(OptError::Domain(format!("n = {n} must be at least 3")));
    }
    if !(beta > 0.0) {
        return Err(OptError::Domain(format!("beta = {beta} must be positive")));
    }
    if terms < ORACLE_MIN_TERMS {
        return Err(OptError::Inconclusive(format!(
            "{terms} terms given, at least {ORACLE_MIN_TERMS} needed"
        )));
    }
    let trunc = terms - 1;
    let mut base = vec![0.0; trunc + 1];
    base[0] = 1.0;
    if (n as usize - 2) <= trunc {
        base[n as usize - 2] = 2.0 * beta;
    }
    let half = BigRational::new(1.into(), 2.into());
    let root = TruncSeries::from_coeffs(base).binomial_pow(&half)?;
    let mut phi = vec![0.0];
    phi.extend_from_slice(&root.coeffs()[..trunc]);
    let psi = TruncSeries::from_coeffs(phi).invert()?;
    let nonzero: Vec<(f64, f64)> = psi
        .coeffs()
        .iter()
        .enumerate()
        .skip(1)
        .filter(|(_, c)| c.abs() > 0.0 && c.is_finite())
        .map(|(m, c)| (m as f64, c.abs().ln()))
        .collect();
    // coefficients vanish except on one residue class; keep those well above noise
    let scale = nonzero.iter().map(|p| p.1).fold(f64::NEG_INFINITY, f64::max);
    let significant: Vec<(f64, f64)> = nonzero
        .into_iter()
        .filter(|(m, y)| *y > scale - 30.0 * std::f64::consts::LN_10 || *m < 3.0)
        .collect();
    let tail = &significant[significant.len() / 2..];
    if tail.len() < 8 {
        return Err(OptError::Inconclusive("too few nonzero coefficients".into()));
    }
    let slope = fit_log_coefficients(tail)
        .ok_or_else(|| OptError::Inconclusive("degenerate least-squares fit".into()))?;
    Ok((-slope).exp())
}

/// Least squares for `y = a m + g log m + d`; returns `a`.
fn fit_log_coefficients(points: &[(f64, f64)]) -> Option<f64> {
    let rows: Vec<[f64; 3]> = points.iter().map(|(m, _)| [*m, m.ln(), 1.0]).collect();
    let mut ata = [[0.0; 3]; 3];
    let mut aty = [0.0; 3];
    for (row, (_, y)) in rows.iter().zip(points) {
        for i in 0..3 {
            aty[i] += row[i] * y;
            for j in 0..3 {
                ata[i][j] += row[i] * row[j];
            }
        }
    }
    solve3(ata, aty).map(|x| x[0])
}

/// Gaussian elimination with partial pivoting.
fn solve3(mut a: [[f64; 3]; 3], mut b: [f64; 3]) -> Option<[f64; 3]> {
    for col in 0..3 {
        let pivot = (col..3).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))?;
        if a[pivot][col].abs() < 1e-300 {
            return None;
        }
        a.swap(col, pivot);
        b.swap(col, pivot);
        for row in col + 1..3 {
            let f = a[row][col] / a[col][col];
            let pivot_row = a[col];
            for (dst, src) in a[row][col..].iter_mut().zip(&pivot_row[col..]) {
                *dst -= f * src;
            }
            b[row] -= f * b[col];
        }
    }
    let mut x = [0.0; 3];
    for i in (0..3).rev() {
        let s: f64 = (i + 1..3).map(|k| a[i][k] * x[k]).sum();
        x[i] = (b[i] - s) / a[i][i];
    }
    Some(x)
}

/// Objective values on a `resolution x resolution` lattice of `[0,1]^2`,
/// `None` outside `0 < λ < μ < 1`.
pub fn objective_grid(equalized: bool, resolution: usize) -> Result<Vec<(f64, f64, Option<f64>)>, OptError> {
    if resolution < 2 {
        return Err(OptError::Domain(format!("resolution {resolution} must be at least 2")));
    }
    let step = 1.0 / (resolution - 1) as f64;
    let mut out = Vec::with_capacity(resolution * resolution);
    for i in 0..resolution {
        for j in 0..resolution {
            let lambda = i as f64 * step;
            let mu = j as f64 * step;
            let value = if optim::in_triangle(lambda, mu) {
                Some(if equalized {
                    f_equalized_generic(lambda, mu)
                } else {
                    f_basic_generic(lambda, mu)
                })
            } else {
                None
            };
            out.push((lambda, mu, value));
        }
    }
    Ok(out)
}
