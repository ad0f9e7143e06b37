//! Deterministic two-parameter minimization: triangle grid scan, Nelder–Mead
//! simplex refinement and a Newton polish with hyper-dual derivatives.

use num_dual::{DualNum, HyperDual64};

/// Objective on the open triangle `0 < x < y < 1`, generic over dual numbers.
pub trait Objective2 {
    fn eval<D: DualNum<Primitive = f64>>(&self, x: D, y: D) -> D;

    /// Value at a point; `+inf` outside the domain.
    fn value(&self, x: f64, y: f64) -> f64 {
        if !in_triangle(x, y) {
            return f64::INFINITY;
        }
        let v = self.eval(x, y);
        if v.is_finite() {
            v
        } else {
            f64::INFINITY
        }
    }

    /// Gradient and Hessian `([fx, fy], [[fxx, fxy], [fxy, fyy]])`.
    fn derivatives(&self, x: f64, y: f64) -> ([f64; 2], [[f64; 2]; 2]) {
        let mixed = self.eval(HyperDual64::new(x, 1.0, 0.0, 0.0), HyperDual64::new(y, 0.0, 1.0, 0.0));
        let xx = self.eval(HyperDual64::new(x, 1.0, 1.0, 0.0), HyperDual64::from(y));
        let yy = self.eval(HyperDual64::from(x), HyperDual64::new(y, 1.0, 1.0, 0.0));
        let fxy = mixed.eps1eps2;
        (
            [mixed.eps1, mixed.eps2],
            [[xx.eps1eps2, fxy], [fxy, yy.eps1eps2]],
        )
    }
}

pub fn in_triangle(x: f64, y: f64) -> bool {
    x > 0.0 && x < y && y < 1.0
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Minimum {
    pub x: f64,
    pub y: f64,
    pub value: f64,
    pub iterations: usize,
    pub gradient_norm: f64,
}

pub const GRID_RESOLUTION: usize = 200;
pub const MAX_ITERATIONS: usize = 10_000;
const SIMPLEX_TOL: f64 = 1e-10;

/// Best point of an `n x n` lattice restricted to the open triangle.
pub fn grid_scan<O: Objective2>(obj: &O, n: usize) -> (f64, f64) {
    let mut best = (f64::INFINITY, 0.25, 0.5);
    for i in 1..n {
        for j in 1..n {
            let x = i as f64 / n as f64;
            let y = j as f64 / n as f64;
            let v = obj.value(x, y);
            if v < best.0 {
                best = (v, x, y);
            }
        }
    }
    (best.1, best.2)
}

/// Nelder–Mead from `start` with standard coefficients (1, 2, 1/2, 1/2).
pub fn nelder_mead<O: Objective2>(obj: &O, start: (f64, f64), scale: f64) -> (f64, f64, usize) {
    let f = |p: [f64; 2]| obj.value(p[0], p[1]);
    let s0 = [start.0, start.1];
    let mut simplex = [s0, [s0[0] + scale, s0[1]], [s0[0], s0[1] + scale]];
    let mut vals = simplex.map(f);
    let mut iterations = 0;
    while iterations < MAX_ITERATIONS {
        iterations += 1;
        let mut order = [0usize, 1, 2];
        order.sort_by(|&a, &b| vals[a].total_cmp(&vals[b]));
        simplex = order.map(|i| simplex[i]);
        vals = order.map(|i| vals[i]);
        let diameter = (1..3)
            .map(|i| (simplex[i][0] - simplex[0][0]).hypot(simplex[i][1] - simplex[0][1]))
            .fold(0.0, f64::max);
        if diameter < SIMPLEX_TOL {
            break;
        }
        let centroid = [(simplex[0][0] + simplex[1][0]) / 2.0, (simplex[0][1] + simplex[1][1]) / 2.0];
        let toward = |c: f64| [centroid[0] + c * (simplex[2][0] - centroid[0]), centroid[1] + c * (simplex[2][1] - centroid[1])];
        let reflected = toward(-1.0);
        let fr = f(reflected);
        if fr < vals[0] {
            let expanded = toward(-2.0);
            let fe = f(expanded);
            if fe < fr {
                simplex[2] = expanded;
                vals[2] = fe;
            } else {
                simplex[2] = reflected;
                vals[2] = fr;
            }
            continue;
        }
        if fr < vals[1] {
            simplex[2] = reflected;
            vals[2] = fr;
            continue;
        }
        let contracted = if fr < vals[2] { toward(-0.5) } else { toward(0.5) };
        let fc = f(contracted);
        if fc < vals[2].min(fr) {
            simplex[2] = contracted;
            vals[2] = fc;
            continue;
        }
        for i in 1..3 {
            simplex[i] = [
                simplex[0][0] + 0.5 * (simplex[i][0] - simplex[0][0]),
                simplex[0][1] + 0.5 * (simplex[i][1] - simplex[0][1]),
            ];
            vals[i] = f(simplex[i]);
        }
    }
    let best = (0..3).min_by(|&a, &b| vals[a].total_cmp(&vals[b])).expect("three vertices");
    (simplex[best][0], simplex[best][1], iterations)
}

/// Newton iterations on the gradient, each step halved until it stays in
/// the domain and does not increase the gradient norm.
pub fn newton_polish<O: Objective2>(obj: &O, start: (f64, f64)) -> (f64, f64) {
    let (mut x, mut y) = start;
    for _ in 0..50 {
        let (g, h) = obj.derivatives(x, y);
        let gnorm = g[0].hypot(g[1]);
        if gnorm == 0.0 {
            break;
        }
        let det = h[0][0] * h[1][1] - h[0][1] * h[1][0];
        if det == 0.0 || !det.is_finite() {
            break;
        }
        let dx = (h[1][1] * g[0] - h[0][1] * g[1]) / det;
        let dy = (h[0][0] * g[1] - h[1][0] * g[0]) / det;
        let mut step = 1.0;
        let mut moved = false;
        while step > 1e-6 {
            let (nx, ny) = (x - step * dx, y - step * dy);
            if in_triangle(nx, ny) {
                let (ng, _) = obj.derivatives(nx, ny);
                if ng[0].hypot(ng[1]) < gnorm {
                    x = nx;
                    y = ny;
                    moved = true;
                    break;
                }
            }
            step *= 0.5;
        }
        if !moved || (dx.abs() + dy.abs()) * step < 1e-16 {
            break;
        }
    }
    (x, y)
}

/// Minimum from an explicit starting point.
pub fn minimize_from<O: Objective2>(obj: &O, start: (f64, f64)) -> Minimum {
    let room = (start.0).min(start.1 - start.0).min(1.0 - start.1);
    let scale = (0.25 * room).clamp(1e-6, 0.05);
    let (x, y, iterations) = nelder_mead(obj, start, scale);
    let (px, py) = newton_polish(obj, (x, y));
    // keep the simplex answer if the polish drifted uphill
    let (x, y) = if obj.value(px, py) <= obj.value(x, y) + 1e-15 * obj.value(x, y).abs() {
        (px, py)
    } else {
        (x, y)
    };
    let (g, _) = obj.derivatives(x, y);
    Minimum {
        x,
        y,
        value: obj.value(x, y),
        iterations,
        gradient_norm: g[0].hypot(g[1]),
    }
}

/// Grid scan followed by [`minimize_from`].
pub fn minimize<O: Objective2>(obj: &O) -> Minimum {
    minimize_from(obj, grid_scan(obj, GRID_RESOLUTION))
}

/// `-f`, to maximize with the minimizer.
pub struct Negated<'a, O>(pub &'a O);

impl<O: Objective2> Objective2 for Negated<'_, O> {
    fn eval<D: DualNum<Primitive = f64>>(&self, x: D, y: D) -> D {
        -self.0.eval(x, y)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    struct Bowl;
    impl Objective2 for Bowl {
        fn eval<D: DualNum<Primitive = f64>>(&self, x: D, y: D) -> D {
            let dx = x - 0.3;
            let dy = y - 0.7;
            dx.clone() * dx * 2.0 + dy.clone() * dy + 1.0
        }
    }

    #[test]
    fn finds_bowl_minimum() {
        let m = minimize(&Bowl);
        assert!((m.x - 0.3).abs() < 1e-12 && (m.y - 0.7).abs() < 1e-12);
        assert!((m.value - 1.0).abs() < 1e-15);
        assert!(m.gradient_norm < 1e-10);
    }

    #[test]
    fn hessian_of_bowl() {
        let (g, h) = Bowl.derivatives(0.3, 0.7);
        assert!(g[0].abs() < 1e-15 && g[1].abs() < 1e-15);
        assert_eq!(h, [[4.0, 0.0], [0.0, 2.0]]);
    }

    #[test]
    fn outside_domain_is_infinite() {
        assert!(Bowl.value(0.6, 0.5).is_infinite());
    }
}
