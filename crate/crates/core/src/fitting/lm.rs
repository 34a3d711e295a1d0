//! Damped Gauss–Newton (Levenberg–Marquardt) least squares.

use nalgebra::{DMatrix, DVector};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LmOptions {
    pub max_iterations: usize,
    /// Stop when the relative decrease of the cost falls below this.
    pub cost_tol: f64,
    /// Stop when every relative parameter step falls below this.
    pub step_tol: f64,
}

impl Default for LmOptions {
    fn default() -> Self {
        LmOptions { max_iterations: 500, cost_tol: 1e-15, step_tol: 1e-12 }
    }
}

#[derive(Clone, Debug)]
pub struct LmOutcome {
    pub params: DVector<f64>,
    pub residuals: DVector<f64>,
    pub jacobian: DMatrix<f64>,
    pub iterations: usize,
    pub converged: bool,
}

/// Problem definition: residuals and their Jacobian at a parameter vector.
pub trait LeastSquares {
    fn residuals(&self, p: &DVector<f64>) -> DVector<f64>;

    /// Forward differences unless overridden.
    fn jacobian(&self, p: &DVector<f64>) -> DMatrix<f64> {
        let r0 = self.residuals(p);
        let mut j = DMatrix::zeros(r0.len(), p.len());
        for k in 0..p.len() {
            let h = 1e-7 * p[k].abs().max(1e-6);
            let mut q = p.clone();
            q[k] += h;
            let rk = self.residuals(&q);
            j.set_column(k, &((rk - &r0) / h));
        }
        j
    }
}

fn cost(r: &DVector<f64>) -> f64 {
    0.5 * r.norm_squared()
}

pub fn minimize<P: LeastSquares>(problem: &P, init: DVector<f64>, opts: &LmOptions) -> LmOutcome {
    let mut p = init;
    let mut r = problem.residuals(&p);
    let mut c = cost(&r);
    let mut lambda = 1e-3;
    let mut converged = false;
    let mut iterations = 0;
    let mut jac = problem.jacobian(&p);
    if !c.is_finite() {
        return LmOutcome { params: p, residuals: r, jacobian: jac, iterations, converged };
    }
    while iterations < opts.max_iterations {
        iterations += 1;
        let jtj = jac.transpose() * &jac;
        let g = jac.transpose() * &r;
        if g.amax() <= 1e-300 || c == 0.0 {
            converged = true;
            break;
        }
        let mut accepted = false;
        while lambda < 1e16 {
            let mut a = jtj.clone();
            for k in 0..a.nrows() {
                a[(k, k)] += lambda * jtj[(k, k)].max(1e-30);
            }
            let step = match a.cholesky() {
                Some(ch) => ch.solve(&(-&g)),
                None => {
                    lambda *= 10.0;
                    continue;
                }
            };
            let trial = &p + &step;
            let rt = problem.residuals(&trial);
            let ct = cost(&rt);
            if ct.is_finite() && ct <= c {
                let small_step = step.iter().zip(trial.iter()).all(|(s, q)| s.abs() <= opts.step_tol * q.abs().max(1e-12));
                let small_gain = c - ct <= opts.cost_tol * c;
                p = trial;
                r = rt;
                c = ct;
                lambda = (lambda / 3.0).max(1e-12);
                accepted = true;
                if small_step || small_gain {
                    converged = true;
                }
                break;
            }
            lambda *= 4.0;
        }
        jac = problem.jacobian(&p);
        if !accepted {
            converged = true;
            break;
        }
        if converged {
            break;
        }
    }
    LmOutcome { params: p, residuals: r, jacobian: jac, iterations, converged }
}

/// `σ² (JᵀJ)⁺` with `σ² = |r|²/(n − p)`, symmetrized.
pub fn covariance(jacobian: &DMatrix<f64>, residuals: &DVector<f64>) -> DMatrix<f64> {
    let (n, k) = jacobian.shape();
    let dof = n.saturating_sub(k).max(1) as f64;
    let s2 = residuals.norm_squared() / dof;
    let jtj = jacobian.transpose() * jacobian;
    let inv = jtj
        .clone()
        .pseudo_inverse(1e-14 * jtj.amax().max(f64::MIN_POSITIVE))
        .unwrap_or_else(|_| DMatrix::from_element(k, k, f64::NAN));
    let c = inv * s2;
    (&c + c.transpose()) * 0.5
}

#[cfg(test)]
mod tests {
    use super::*;

    struct Rosenbrock;

    impl LeastSquares for Rosenbrock {
        fn residuals(&self, p: &DVector<f64>) -> DVector<f64> {
            DVector::from_vec(vec![10.0 * (p[1] - p[0] * p[0]), 1.0 - p[0]])
        }
    }

    #[test]
    fn rosenbrock_minimum() {
        let out = minimize(&Rosenbrock, DVector::from_vec(vec![-1.2, 1.0]), &LmOptions::default());
        assert!(out.converged);
        assert!((out.params[0] - 1.0).abs() < 1e-8 && (out.params[1] - 1.0).abs() < 1e-8, "{}", out.params);
    }

    struct Exp(Vec<(f64, f64)>);

    impl LeastSquares for Exp {
        fn residuals(&self, p: &DVector<f64>) -> DVector<f64> {
            DVector::from_iterator(self.0.len(), self.0.iter().map(|(x, y)| p[0] * (-p[1] * x).exp() - y))
        }
    }

    #[test]
    fn exponential_fit_and_covariance() {
        let data: Vec<(f64, f64)> = (0..20).map(|i| { let x = i as f64 * 0.2; (x, 3.0 * (-0.7 * x).exp()) }).collect();
        let out = minimize(&Exp(data), DVector::from_vec(vec![1.0, 0.1]), &LmOptions::default());
        assert!((out.params[0] - 3.0).abs() < 1e-9 && (out.params[1] - 0.7).abs() < 1e-9);
        let c = covariance(&out.jacobian, &out.residuals);
        assert!(c.iter().all(|v| v.abs() < 1e-15));
    }
}
