//! Derivative-free Nelder-Mead descent with restarts.
//!
//! Uses the dimension-adaptive coefficients of Gao and Han, which behave
//! better than the classic (1, 2, ½, ½) choice above a handful of
//! dimensions.

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NelderMead {
    /// Total objective evaluations across all restarts.
    pub max_evals: usize,
    /// Converged when `f_max − f_min` over the simplex drops below this.
    pub ftol: f64,
    /// Edge length of the axis-aligned starting simplex.
    pub initial_step: f64,
    /// Fresh simplices built around the incumbent after convergence.
    pub restarts: usize,
}

impl Default for NelderMead {
    fn default() -> Self {
        Self { max_evals: 20_000, ftol: 1e-10, initial_step: 0.5, restarts: 2 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Minimum {
    pub x: Vec<f64>,
    pub value: f64,
    pub evals: usize,
    pub converged: bool,
}

impl NelderMead {
    pub fn minimize<F: FnMut(&[f64]) -> f64>(&self, mut f: F, x0: &[f64]) -> Minimum {
        let mut evals = 0;
        let mut best = Minimum { x: x0.to_vec(), value: f(x0), evals: 1, converged: false };
        evals += 1;
        let mut step = self.initial_step;
        for round in 0..=self.restarts {
            if evals >= self.max_evals {
                break;
            }
            let budget = self.max_evals - evals;
            let (x, value, used, converged) = self.descend(&mut f, &best.x, step, budget);
            evals += used;
            let improved = best.value - value;
            if value <= best.value {
                best.x = x;
                best.value = value;
            }
            best.converged = converged;
            if round > 0 && improved.abs() <= self.ftol {
                break;
            }
            step *= 0.5;
        }
        best.evals = evals;
        best
    }

    fn descend<F: FnMut(&[f64]) -> f64>(
        &self,
        f: &mut F,
        x0: &[f64],
        step: f64,
        budget: usize,
    ) -> (Vec<f64>, f64, usize, bool) {
        let n = x0.len();
        let nf = n as f64;
        let (alpha, gamma, rho, sigma) = if n >= 2 {
            (1.0, 1.0 + 2.0 / nf, 0.75 - 0.5 / nf, 1.0 - 1.0 / nf)
        } else {
            (1.0, 2.0, 0.5, 0.5)
        };

        let mut evals = 0;
        let mut simplex: Vec<(Vec<f64>, f64)> = Vec::with_capacity(n + 1);
        simplex.push((x0.to_vec(), f(x0)));
        evals += 1;
        for i in 0..n {
            let mut x = x0.to_vec();
            x[i] += step;
            let v = f(&x);
            simplex.push((x, v));
            evals += 1;
        }

        let mut centroid = vec![0.0; n];
        let point = |c: &[f64], worst: &[f64], t: f64| -> Vec<f64> {
            c.iter().zip(worst).map(|(ci, wi)| ci + t * (ci - wi)).collect()
        };

        loop {
            simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
            let spread = simplex[n].1 - simplex[0].1;
            if spread < self.ftol {
                let (x, v) = simplex.swap_remove(0);
                return (x, v, evals, true);
            }
            if evals >= budget {
                let (x, v) = simplex.swap_remove(0);
                return (x, v, evals, false);
            }

            centroid.iter_mut().for_each(|c| *c = 0.0);
            for (x, _) in &simplex[..n] {
                for (c, xi) in centroid.iter_mut().zip(x) {
                    *c += xi / nf;
                }
            }
            let worst = simplex[n].0.clone();
            let f_best = simplex[0].1;
            let f_second_worst = simplex[n - 1].1;
            let f_worst = simplex[n].1;

            let xr = point(&centroid, &worst, alpha);
            let fr = f(&xr);
            evals += 1;

            if fr < f_best {
                let xe = point(&centroid, &worst, alpha * gamma);
                let fe = f(&xe);
                evals += 1;
                simplex[n] = if fe < fr { (xe, fe) } else { (xr, fr) };
                continue;
            }
            if fr < f_second_worst {
                simplex[n] = (xr, fr);
                continue;
            }
            let (xc, fc) = if fr < f_worst {
                let xc = point(&centroid, &worst, alpha * rho);
                let fc = f(&xc);
                (xc, fc)
            } else {
                let xc = point(&centroid, &worst, -rho);
                let fc = f(&xc);
                (xc, fc)
            };
            evals += 1;
            if fc < fr.min(f_worst) {
                simplex[n] = (xc, fc);
                continue;
            }
            // shrink toward the best vertex
            let best = simplex[0].0.clone();
            for (x, v) in simplex.iter_mut().skip(1) {
                for (xi, bi) in x.iter_mut().zip(&best) {
                    *xi = bi + sigma * (*xi - bi);
                }
                *v = f(x);
                evals += 1;
            }
        }
    }
}
