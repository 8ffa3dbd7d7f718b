//! Quasi-Newton minimizer used by the ARMA fitter: BFGS with an Armijo
//! backtracking line search. Fully deterministic for a given start point.

#[derive(Debug, Clone, Copy)]
pub struct MinimizeOptions {
    pub max_iterations: usize,
    /// Relative objective decrease below which iteration stops.
    pub tolerance: f64,
}

impl Default for MinimizeOptions {
    fn default() -> Self {
        Self {
            max_iterations: 500,
            tolerance: 1e-10,
        }
    }
}

#[derive(Debug, Clone)]
pub struct MinimizeResult {
    pub x: Vec<f64>,
    pub value: f64,
    pub iterations: usize,
    pub converged: bool,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Minimizes `f` (returning value and gradient) starting from `x0`.
pub fn minimize<F>(mut f: F, x0: &[f64], opts: MinimizeOptions) -> MinimizeResult
where
    F: FnMut(&[f64]) -> (f64, Vec<f64>),
{
    let n = x0.len();
    let mut x = x0.to_vec();
    let (mut fx, mut grad) = f(&x);
    if n == 0 {
        return MinimizeResult {
            x,
            value: fx,
            iterations: 0,
            converged: true,
        };
    }

    // Inverse Hessian approximation, identity to start.
    let mut h: Vec<Vec<f64>> = (0..n)
        .map(|i| (0..n).map(|j| if i == j { 1.0 } else { 0.0 }).collect())
        .collect();

    let mut iterations = 0;
    let mut converged = false;

    for _ in 0..opts.max_iterations {
        iterations += 1;

        // direction = -H * grad
        let mut direction: Vec<f64> = (0..n).map(|i| -dot(&h[i], &grad)).collect();
        if dot(&direction, &grad) >= 0.0 {
            // H lost positive definiteness; fall back to steepest descent.
            for (d, g) in direction.iter_mut().zip(&grad) {
                *d = -g;
            }
        }

        // Armijo backtracking.
        let slope = dot(&direction, &grad);
        let mut step = 1.0;
        let mut accepted = None;
        for _ in 0..50 {
            let candidate: Vec<f64> = x
                .iter()
                .zip(&direction)
                .map(|(xi, di)| xi + step * di)
                .collect();
            let (f_new, g_new) = f(&candidate);
            if f_new.is_finite() && f_new <= fx + 1e-4 * step * slope {
                accepted = Some((candidate, f_new, g_new));
                break;
            }
            step *= 0.5;
        }

        let Some((x_new, f_new, g_new)) = accepted else {
            // No decrease along the search direction: treat as converged.
            converged = true;
            break;
        };

        let rel_decrease = (fx - f_new).abs() / fx.abs().max(1e-300);

        // BFGS update of the inverse Hessian.
        let s: Vec<f64> = x_new.iter().zip(&x).map(|(a, b)| a - b).collect();
        let y: Vec<f64> = g_new.iter().zip(&grad).map(|(a, b)| a - b).collect();
        let sy = dot(&s, &y);
        let s_norm = dot(&s, &s).sqrt();
        let y_norm = dot(&y, &y).sqrt();
        if sy > 1e-12 * s_norm * y_norm {
            let rho = 1.0 / sy;
            // H' = (I - rho s yT) H (I - rho y sT) + rho s sT
            let hy: Vec<f64> = (0..n).map(|i| dot(&h[i], &y)).collect();
            let yhy = dot(&y, &hy);
            for i in 0..n {
                for j in 0..n {
                    h[i][j] +=
                        rho * rho * (sy + yhy) * s[i] * s[j] - rho * (hy[i] * s[j] + s[i] * hy[j]);
                }
            }
        }

        x = x_new;
        fx = f_new;
        grad = g_new;

        if rel_decrease < opts.tolerance {
            converged = true;
            break;
        }
    }

    MinimizeResult {
        x,
        value: fx,
        iterations,
        converged,
    }
}
