//! Box-constrained minimization: projected BFGS on central-difference
//! gradients with an Armijo line search, and a clamped Nelder-Mead simplex.

use nalgebra::{DMatrix, DVector};

#[derive(Debug, Clone, PartialEq)]
pub struct Bounds {
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

impl Bounds {
    pub fn unbounded(dim: usize) -> Self {
        Self { lower: vec![f64::NEG_INFINITY; dim], upper: vec![f64::INFINITY; dim] }
    }

    fn clamp(&self, x: &mut DVector<f64>) {
        for (i, xi) in x.iter_mut().enumerate() {
            *xi = xi.clamp(self.lower[i], self.upper[i]);
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OptimOptions {
    pub max_iter: usize,
    /// Relative finite-difference step, scaled by `max(1, |x_i|)`.
    pub grad_step: f64,
    /// Projected-gradient infinity norm (relative to `max(1, |f|)`) that counts as converged.
    pub grad_tol: f64,
    /// Relative decrease below which progress counts as stalled.
    pub f_tol: f64,
}

impl Default for OptimOptions {
    fn default() -> Self {
        Self { max_iter: 200, grad_step: 1e-5, grad_tol: 1e-5, f_tol: 1e-12 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OptimResult {
    pub x: Vec<f64>,
    pub value: f64,
    pub iterations: usize,
    pub evaluations: usize,
    pub converged: bool,
}

struct Objective<'a, F> {
    f: &'a mut F,
    evaluations: usize,
}

impl<F: FnMut(&[f64]) -> f64> Objective<'_, F> {
    fn eval(&mut self, x: &DVector<f64>) -> f64 {
        self.evaluations += 1;
        let v = (self.f)(x.as_slice());
        if v.is_finite() {
            v
        } else {
            f64::INFINITY
        }
    }

    fn gradient(&mut self, x: &DVector<f64>, fx: f64, bounds: &Bounds, step: f64) -> DVector<f64> {
        let mut g = DVector::zeros(x.len());
        let mut probe = x.clone();
        for i in 0..x.len() {
            let h = step * x[i].abs().max(1.0);
            let up = (x[i] + h).min(bounds.upper[i]);
            let down = (x[i] - h).max(bounds.lower[i]);
            probe[i] = up;
            let f_up = self.eval(&probe);
            probe[i] = down;
            let f_down = self.eval(&probe);
            probe[i] = x[i];
            g[i] = match (f_up.is_finite(), f_down.is_finite()) {
                (true, true) if up > down => (f_up - f_down) / (up - down),
                (true, false) if up > x[i] => (f_up - fx) / (up - x[i]),
                (false, true) if x[i] > down => (fx - f_down) / (x[i] - down),
                _ => 0.0,
            };
        }
        g
    }
}

/// Zeroes gradient components that push against an active bound.
fn projected(g: &DVector<f64>, x: &DVector<f64>, bounds: &Bounds) -> DVector<f64> {
    DVector::from_iterator(
        g.len(),
        g.iter().enumerate().map(|(i, &gi)| {
            let at_lower = x[i] <= bounds.lower[i] && gi > 0.0;
            let at_upper = x[i] >= bounds.upper[i] && gi < 0.0;
            if at_lower || at_upper {
                0.0
            } else {
                gi
            }
        }),
    )
}

/// Projected BFGS minimization of `f` inside `bounds`, starting from `x0`.
///
/// Non-finite objective values are treated as `+inf`. The returned point is
/// the best one evaluated along the accepted iterates, so its value never
/// exceeds `f(x0)`.
pub fn minimize_box<F>(mut f: F, x0: &[f64], bounds: &Bounds, opts: &OptimOptions) -> OptimResult
where
    F: FnMut(&[f64]) -> f64,
{
    let dim = x0.len();
    let mut obj = Objective { f: &mut f, evaluations: 0 };
    let mut x = DVector::from_column_slice(x0);
    bounds.clamp(&mut x);
    let mut fx = obj.eval(&x);
    if !fx.is_finite() || dim == 0 {
        return OptimResult {
            x: x.as_slice().to_vec(),
            value: fx,
            iterations: 0,
            evaluations: obj.evaluations,
            converged: dim == 0 && fx.is_finite(),
        };
    }
    let mut g = obj.gradient(&x, fx, bounds, opts.grad_step);
    let mut h_inv = DMatrix::<f64>::identity(dim, dim);
    let mut converged = false;
    let mut stalls = 0;
    let mut iterations = 0;

    while iterations < opts.max_iter {
        iterations += 1;
        let pg = projected(&g, &x, bounds);
        if pg.amax() <= opts.grad_tol * fx.abs().max(1.0) {
            converged = true;
            break;
        }
        let mut d = -(&h_inv * &pg);
        for i in 0..dim {
            if pg[i] == 0.0 && g[i] != 0.0 {
                d[i] = 0.0;
            }
        }
        if d.dot(&pg) >= 0.0 {
            h_inv.fill_with_identity();
            d = -pg.clone();
        }
        let mut alpha = (2.0 / d.amax()).min(1.0);
        let mut accepted = None;
        for _ in 0..50 {
            let mut trial = &x + alpha * &d;
            bounds.clamp(&mut trial);
            let f_trial = obj.eval(&trial);
            let decrease = g.dot(&(&trial - &x));
            if f_trial.is_finite() && f_trial <= fx + 1e-4 * decrease.min(0.0) {
                accepted = Some((trial, f_trial));
                break;
            }
            alpha *= 0.5;
        }
        let Some((x_new, f_new)) = accepted else {
            if h_inv != DMatrix::identity(dim, dim) {
                h_inv.fill_with_identity();
                continue;
            }
            break;
        };
        let g_new = obj.gradient(&x_new, f_new, bounds, opts.grad_step);
        let s = &x_new - &x;
        let y = &g_new - &g;
        let sy = s.dot(&y);
        if sy > 1e-10 * s.norm() * y.norm() {
            let rho = 1.0 / sy;
            let hy = &h_inv * &y;
            let yhy = y.dot(&hy);
            h_inv += (rho * rho * yhy + rho) * (&s * s.transpose())
                - rho * (&hy * s.transpose() + &s * hy.transpose());
        }
        let rel = (fx - f_new) / fx.abs().max(1.0);
        x = x_new;
        g = g_new;
        fx = f_new;
        if rel < opts.f_tol {
            stalls += 1;
            if stalls >= 3 {
                converged = true;
                break;
            }
        } else {
            stalls = 0;
        }
    }
    OptimResult {
        x: x.as_slice().to_vec(),
        value: fx,
        iterations,
        evaluations: obj.evaluations,
        converged,
    }
}

/// Nelder-Mead simplex search with points clamped to `bounds`.
pub fn nelder_mead<F>(mut f: F, x0: &[f64], bounds: &Bounds, scale: f64, max_evals: usize) -> OptimResult
where
    F: FnMut(&[f64]) -> f64,
{
    let dim = x0.len();
    let mut obj = Objective { f: &mut f, evaluations: 0 };
    let clamp = |mut v: DVector<f64>| {
        bounds.clamp(&mut v);
        v
    };
    let start = clamp(DVector::from_column_slice(x0));
    let mut simplex: Vec<(DVector<f64>, f64)> = Vec::with_capacity(dim + 1);
    let f0 = obj.eval(&start);
    simplex.push((start.clone(), f0));
    for i in 0..dim {
        let mut v = start.clone();
        v[i] += scale * start[i].abs().max(1.0);
        let v = clamp(v);
        let fv = obj.eval(&v);
        simplex.push((v, fv));
    }
    let mut iterations = 0;
    let mut converged = false;
    while obj.evaluations < max_evals && dim > 0 {
        iterations += 1;
        simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
        let best = simplex[0].1;
        let worst = simplex[dim].1;
        if best.is_finite() && (worst - best).abs() <= 1e-12 * best.abs().max(1.0) {
            converged = true;
            break;
        }
        let centroid = simplex[..dim].iter().fold(DVector::zeros(dim), |acc, (v, _)| acc + v) / dim as f64;
        let reflect = clamp(&centroid + (&centroid - &simplex[dim].0));
        let f_reflect = obj.eval(&reflect);
        if f_reflect < simplex[0].1 {
            let expand = clamp(&centroid + 2.0 * (&centroid - &simplex[dim].0));
            let f_expand = obj.eval(&expand);
            simplex[dim] = if f_expand < f_reflect { (expand, f_expand) } else { (reflect, f_reflect) };
        } else if f_reflect < simplex[dim - 1].1 {
            simplex[dim] = (reflect, f_reflect);
        } else {
            let contract = clamp(&centroid + 0.5 * (&simplex[dim].0 - &centroid));
            let f_contract = obj.eval(&contract);
            if f_contract < simplex[dim].1 {
                simplex[dim] = (contract, f_contract);
            } else {
                let anchor = simplex[0].0.clone();
                for entry in simplex.iter_mut().skip(1) {
                    let v = clamp(&anchor + 0.5 * (&entry.0 - &anchor));
                    let fv = obj.eval(&v);
                    *entry = (v, fv);
                }
            }
        }
    }
    simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
    let (x, value) = simplex.swap_remove(0);
    OptimResult {
        x: x.as_slice().to_vec(),
        value,
        iterations,
        evaluations: obj.evaluations,
        converged,
    }
}
