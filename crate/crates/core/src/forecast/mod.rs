//! Time-series modeling toolkit: differencing, ARMA/ARIMA/SARIMA estimation
//! by conditional sum of squares, multi-step forecasting, and gated recurrent
//! cells with gradient verification.
//!
//! Estimation minimizes the conditional sum of squared one-step residuals
//! (pre-sample residuals fixed at zero) with a quasi-Newton optimizer and
//! analytic gradients. The mean is included only for undifferenced models;
//! once a series is differenced the intercept is dropped, so a (0,1,0) model
//! forecasts flat at the last observed value.

pub mod cell;
mod optimize;

pub use cell::{
    cell_step, gradient_check, loss_gradients, numeric_gradients, sequence_loss, spectral_norm,
    CellKind, CellParams, CellState, CellWeights, GateWeights, Mat,
};

use serde::Serialize;
use thiserror::Error;

use crate::num::mean;
use optimize::{minimize, MinimizeOptions};

#[derive(Debug, Error)]
pub enum ForecastError {
    #[error("series too short: need at least {needed} points, got {got}")]
    TooShort { needed: usize, got: usize },
    #[error("invalid model specification: {0}")]
    BadSpec(String),
    #[error("initial values have length {got}, expected {expected}")]
    BadInitLength { expected: usize, got: usize },
    #[error("optimizer did not converge after {iterations} iterations")]
    NonConvergence {
        iterations: usize,
        /// Best parameters found so far.
        model: Box<ArimaModel>,
    },
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("non-finite value in {0}")]
    NonFinite(String),
}

/// Seasonal orders (P, D, Q) with period s ≥ 2.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct SeasonalSpec {
    pub p: usize,
    pub d: usize,
    pub q: usize,
    pub s: usize,
}

/// Model orders (p, d, q) with optional seasonal component.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct ArimaSpec {
    pub p: usize,
    pub d: usize,
    pub q: usize,
    pub seasonal: Option<SeasonalSpec>,
}

impl ArimaSpec {
    pub fn new(p: usize, d: usize, q: usize) -> Self {
        Self {
            p,
            d,
            q,
            seasonal: None,
        }
    }

    pub fn with_seasonal(
        mut self,
        sp: usize,
        sd: usize,
        sq: usize,
        s: usize,
    ) -> Result<Self, ForecastError> {
        if s < 2 {
            return Err(ForecastError::BadSpec(format!(
                "seasonal period must be >= 2, got {s}"
            )));
        }
        self.seasonal = Some(SeasonalSpec {
            p: sp,
            d: sd,
            q: sq,
            s,
        });
        Ok(self)
    }

    fn seasonal_orders(&self) -> (usize, usize, usize, usize) {
        match self.seasonal {
            Some(seasonal) => (seasonal.p, seasonal.d, seasonal.q, seasonal.s),
            None => (0, 0, 0, 1),
        }
    }

    /// Number of estimated coefficients (excluding the mean).
    pub fn coefficient_count(&self) -> usize {
        let (sp, _, sq, _) = self.seasonal_orders();
        self.p + self.q + sp + sq
    }
}

impl std::str::FromStr for ArimaSpec {
    type Err = ForecastError;

    /// Parses `p,d,q` or `p,d,q,P,D,Q,s`.
    fn from_str(text: &str) -> Result<Self, Self::Err> {
        let parts: Vec<usize> = text
            .split(',')
            .map(|part| {
                part.trim()
                    .parse::<usize>()
                    .map_err(|e| ForecastError::BadSpec(format!("bad order `{part}`: {e}")))
            })
            .collect::<Result<_, _>>()?;
        match parts.as_slice() {
            [p, d, q] => Ok(ArimaSpec::new(*p, *d, *q)),
            [p, d, q, sp, sd, sq, s] => ArimaSpec::new(*p, *d, *q).with_seasonal(*sp, *sd, *sq, *s),
            _ => Err(ForecastError::BadSpec(format!(
                "expected `p,d,q` or `p,d,q,P,D,Q,s`, got `{text}`"
            ))),
        }
    }
}

/// True when the seasonal component is absent or entirely zero; fitting such
/// a spec follows the plain ARIMA path exactly.
pub fn sarima_reduces_to_arima(spec: &ArimaSpec) -> bool {
    match spec.seasonal {
        None => true,
        Some(seasonal) => seasonal.p == 0 && seasonal.d == 0 && seasonal.q == 0,
    }
}

/// Applies (1 - B^s)^d and returns the differenced series together with the
/// d*s observations consumed, for exact inversion.
pub fn difference(
    values: &[f64],
    d: usize,
    s: usize,
) -> Result<(Vec<f64>, Vec<f64>), ForecastError> {
    if s == 0 {
        return Err(ForecastError::BadSpec("period s must be >= 1".into()));
    }
    if values.len() <= d * s {
        return Err(ForecastError::TooShort {
            needed: d * s + 1,
            got: values.len(),
        });
    }
    let mut current = values.to_vec();
    let mut consumed = Vec::with_capacity(d * s);
    for _ in 0..d {
        consumed.extend_from_slice(&current[..s]);
        current = current.windows(s + 1).map(|w| w[s] - w[0]).collect();
    }
    Ok((current, consumed))
}

/// Inverse of [`difference`]: reconstructs the original scale from the
/// differenced series and the consumed prefix.
pub fn inverse_difference(
    differenced: &[f64],
    initial: &[f64],
    d: usize,
    s: usize,
) -> Result<Vec<f64>, ForecastError> {
    if s == 0 {
        return Err(ForecastError::BadSpec("period s must be >= 1".into()));
    }
    if initial.len() != d * s {
        return Err(ForecastError::BadInitLength {
            expected: d * s,
            got: initial.len(),
        });
    }
    let mut current = differenced.to_vec();
    for level in (0..d).rev() {
        let prefix = &initial[level * s..(level + 1) * s];
        let mut rebuilt = Vec::with_capacity(prefix.len() + current.len());
        rebuilt.extend_from_slice(prefix);
        for (i, &delta) in current.iter().enumerate() {
            let base = rebuilt[i];
            rebuilt.push(base + delta);
        }
        current = rebuilt;
    }
    Ok(current)
}

/// Fitted SARIMA model: coefficients, intercept of the differenced series,
/// residual variance, and the state needed to extend forecasts.
#[derive(Debug, Clone, PartialEq)]
pub struct ArimaModel {
    pub spec: ArimaSpec,
    pub ar: Vec<f64>,
    pub ma: Vec<f64>,
    pub seasonal_ar: Vec<f64>,
    pub seasonal_ma: Vec<f64>,
    /// Intercept of the stationary differenced series (0 once differenced).
    pub mean: f64,
    pub sigma2: f64,
    /// Prefix consumed by seasonal differencing (D*s values of the original).
    pub init_seasonal: Vec<f64>,
    /// Prefix consumed by regular differencing (d values, after seasonal).
    pub init_regular: Vec<f64>,
    pub converged: bool,
    pub iterations: usize,
    /// Set when a fitted AR polynomial has a root close to the unit circle.
    pub near_unit_root: bool,
    diffed: Vec<f64>,
    residuals: Vec<f64>,
}

/// Conditional-sum-of-squares problem on the demeaned differenced series.
/// Residuals for the first `start` steps are fixed at zero, with
/// `start = max(p + s*P, q + s*Q)`.
struct CssProblem<'a> {
    z: &'a [f64],
    p: usize,
    q: usize,
    sp: usize,
    s: usize,
    start: usize,
}

impl<'a> CssProblem<'a> {
    fn new(z: &'a [f64], spec: &ArimaSpec) -> Self {
        let (sp, _, sq, s) = spec.seasonal_orders();
        let start = (spec.p + s * sp).max(spec.q + s * sq);
        Self {
            z,
            p: spec.p,
            q: spec.q,
            sp,
            s,
            start,
        }
    }

    fn split<'c>(&self, coeffs: &'c [f64]) -> (&'c [f64], &'c [f64], &'c [f64], &'c [f64]) {
        let (phi, rest) = coeffs.split_at(self.p);
        let (theta, rest) = rest.split_at(self.q);
        let (sphi, stheta) = rest.split_at(self.sp);
        (phi, theta, sphi, stheta)
    }

    /// One-step residuals; entries before `start` stay zero.
    fn residuals(&self, coeffs: &[f64]) -> Vec<f64> {
        let (phi, theta, sphi, stheta) = self.split(coeffs);
        let m = self.z.len();
        let mut e = vec![0.0; m];
        for t in self.start..m {
            e[t] = self.one_step(t, phi, theta, sphi, stheta, &e);
        }
        e
    }

    fn one_step(
        &self,
        t: usize,
        phi: &[f64],
        theta: &[f64],
        sphi: &[f64],
        stheta: &[f64],
        e: &[f64],
    ) -> f64 {
        let z = self.z;
        let s = self.s;
        let et = |idx: usize| if idx >= self.start { e[idx] } else { 0.0 };
        let mut value = z[t];
        for (i, &f) in phi.iter().enumerate() {
            value -= f * z[t - 1 - i];
        }
        for (j, &f) in sphi.iter().enumerate() {
            value -= f * z[t - (j + 1) * s];
        }
        for (i, &fi) in phi.iter().enumerate() {
            for (j, &fj) in sphi.iter().enumerate() {
                value += fi * fj * z[t - 1 - i - (j + 1) * s];
            }
        }
        for (i, &f) in theta.iter().enumerate() {
            value -= f * et(t - 1 - i);
        }
        for (j, &f) in stheta.iter().enumerate() {
            value -= f * et(t - (j + 1) * s);
        }
        for (i, &fi) in theta.iter().enumerate() {
            for (j, &fj) in stheta.iter().enumerate() {
                value -= fi * fj * et(t - 1 - i - (j + 1) * s);
            }
        }
        value
    }

    #[cfg(test)]
    fn value(&self, coeffs: &[f64]) -> f64 {
        self.residuals(coeffs)[self.start..]
            .iter()
            .map(|r| r * r)
            .sum()
    }

    /// Objective value plus its analytic gradient. The residual recursion is
    /// differentiated directly, with the MA terms feeding back through the
    /// stored partials.
    fn value_grad(&self, coeffs: &[f64]) -> (f64, Vec<f64>) {
        let (phi, theta, sphi, stheta) = self.split(coeffs);
        let (m, k_total, s) = (self.z.len(), coeffs.len(), self.s);
        let z = self.z;
        let mut e = vec![0.0; m];
        let mut partials = vec![0.0; m * k_total];
        let mut value = 0.0;
        let mut grad = vec![0.0; k_total];

        for t in self.start..m {
            e[t] = self.one_step(t, phi, theta, sphi, stheta, &e);

            let et = |idx: usize| if idx >= self.start { e[idx] } else { 0.0 };
            let dt = |idx: usize, k: usize, p: &[f64]| {
                if idx >= self.start {
                    p[idx * k_total + k]
                } else {
                    0.0
                }
            };

            for k in 0..k_total {
                let mut d = if k < self.p {
                    let a = k;
                    let mut direct = -z[t - 1 - a];
                    for (j, &fj) in sphi.iter().enumerate() {
                        direct += fj * z[t - 1 - a - (j + 1) * s];
                    }
                    direct
                } else if k < self.p + self.q {
                    let a = k - self.p;
                    let mut direct = -et(t - 1 - a);
                    for (j, &fj) in stheta.iter().enumerate() {
                        direct -= fj * et(t - 1 - a - (j + 1) * s);
                    }
                    direct
                } else if k < self.p + self.q + self.sp {
                    let a = k - self.p - self.q;
                    let mut direct = -z[t - (a + 1) * s];
                    for (i, &fi) in phi.iter().enumerate() {
                        direct += fi * z[t - 1 - i - (a + 1) * s];
                    }
                    direct
                } else {
                    let a = k - self.p - self.q - self.sp;
                    let mut direct = -et(t - (a + 1) * s);
                    for (i, &fi) in theta.iter().enumerate() {
                        direct -= fi * et(t - 1 - i - (a + 1) * s);
                    }
                    direct
                };
                for (i, &fi) in theta.iter().enumerate() {
                    d -= fi * dt(t - 1 - i, k, &partials);
                }
                for (j, &fj) in stheta.iter().enumerate() {
                    d -= fj * dt(t - (j + 1) * s, k, &partials);
                }
                for (i, &fi) in theta.iter().enumerate() {
                    for (j, &fj) in stheta.iter().enumerate() {
                        d -= fi * fj * dt(t - 1 - i - (j + 1) * s, k, &partials);
                    }
                }
                partials[t * k_total + k] = d;
                grad[k] += 2.0 * e[t] * d;
            }
            value += e[t] * e[t];
        }
        (value, grad)
    }
}

/// Fits the spec by differencing, demeaning (undifferenced models only) and
/// minimizing the conditional sum of squares. Deterministic: coefficients
/// start at zero and the optimizer has no random state.
pub fn fit(spec: &ArimaSpec, values: &[f64]) -> Result<ArimaModel, ForecastError> {
    let (sp, sd, sq, s) = spec.seasonal_orders();
    let needed = 10 * (spec.p + spec.q + sp + sq + 1) + spec.d + sd * s;
    if values.len() < needed {
        return Err(ForecastError::TooShort {
            needed,
            got: values.len(),
        });
    }
    if let Some(bad) = values.iter().find(|v| !v.is_finite()) {
        return Err(ForecastError::NonFinite(format!("input value {bad}")));
    }

    let (after_seasonal, init_seasonal) = difference(values, sd, s)?;
    let (diffed, init_regular) = difference(&after_seasonal, spec.d, 1)?;

    let mu = if spec.d == 0 && sd == 0 {
        mean(&diffed)
    } else {
        0.0
    };
    let z: Vec<f64> = diffed.iter().map(|v| v - mu).collect();
    let problem = CssProblem::new(&z, spec);

    let k_total = spec.coefficient_count();
    let result = minimize(
        |coeffs| problem.value_grad(coeffs),
        &vec![0.0; k_total],
        MinimizeOptions::default(),
    );

    let residuals = problem.residuals(&result.x);
    let n_terms = (z.len() - problem.start).max(1);
    let sigma2 = result.value / n_terms as f64;

    let (phi, theta, sphi, stheta) = problem.split(&result.x);
    let near_unit_root = has_near_unit_root(phi) || has_near_unit_root(sphi);

    let model = ArimaModel {
        spec: *spec,
        ar: phi.to_vec(),
        ma: theta.to_vec(),
        seasonal_ar: sphi.to_vec(),
        seasonal_ma: stheta.to_vec(),
        mean: mu,
        sigma2,
        init_seasonal,
        init_regular,
        converged: result.converged,
        iterations: result.iterations,
        near_unit_root,
        diffed,
        residuals,
    };

    if !result.converged {
        return Err(ForecastError::NonConvergence {
            iterations: result.iterations,
            model: Box::new(model),
        });
    }
    Ok(model)
}

impl ArimaModel {
    /// Builds a model from known coefficients (for example, loaded from a
    /// serialized fit) by re-running the residual recursion over `values`.
    #[allow(clippy::too_many_arguments)]
    pub fn from_parts(
        spec: ArimaSpec,
        ar: Vec<f64>,
        ma: Vec<f64>,
        seasonal_ar: Vec<f64>,
        seasonal_ma: Vec<f64>,
        mean: f64,
        values: &[f64],
    ) -> Result<Self, ForecastError> {
        let (sp, sd, sq, s) = spec.seasonal_orders();
        if ar.len() != spec.p
            || ma.len() != spec.q
            || seasonal_ar.len() != sp
            || seasonal_ma.len() != sq
        {
            return Err(ForecastError::BadSpec(
                "coefficient lengths do not match the spec orders".into(),
            ));
        }
        let (after_seasonal, init_seasonal) = difference(values, sd, s)?;
        let (diffed, init_regular) = difference(&after_seasonal, spec.d, 1)?;
        let z: Vec<f64> = diffed.iter().map(|v| v - mean).collect();
        let problem = CssProblem::new(&z, &spec);
        if z.len() <= problem.start {
            return Err(ForecastError::TooShort {
                needed: problem.start + 1 + spec.d + sd * s,
                got: values.len(),
            });
        }
        let coeffs: Vec<f64> = ar
            .iter()
            .chain(ma.iter())
            .chain(seasonal_ar.iter())
            .chain(seasonal_ma.iter())
            .copied()
            .collect();
        let residuals = problem.residuals(&coeffs);
        let n_terms = (z.len() - problem.start).max(1);
        let sigma2 = residuals[problem.start..]
            .iter()
            .map(|r| r * r)
            .sum::<f64>()
            / n_terms as f64;
        let near_unit_root = has_near_unit_root(&ar) || has_near_unit_root(&seasonal_ar);
        Ok(Self {
            spec,
            ar,
            ma,
            seasonal_ar,
            seasonal_ma,
            mean,
            sigma2,
            init_seasonal,
            init_regular,
            converged: true,
            iterations: 0,
            near_unit_root,
            diffed,
            residuals,
        })
    }

    /// Residuals on the differenced scale (zeros over the conditioning prefix).
    pub fn residuals(&self) -> &[f64] {
        &self.residuals
    }

    /// The consumed differencing prefixes, seasonal first, flattened.
    pub fn init_values(&self) -> Vec<f64> {
        let mut out = self.init_seasonal.clone();
        out.extend_from_slice(&self.init_regular);
        out
    }

    /// Conditional sum of squares at the fitted coefficients.
    pub fn css(&self) -> f64 {
        let (_, _, _, s) = self.spec.seasonal_orders();
        let start = (self.spec.p + s * self.seasonal_ar.len())
            .max(self.spec.q + s * self.seasonal_ma.len());
        self.residuals[start..].iter().map(|r| r * r).sum()
    }

    /// Iterated one-step conditional-expectation forecasts on the differenced
    /// scale, integrated back to the original scale.
    pub fn forecast(&self, horizon: usize) -> Vec<f64> {
        if horizon == 0 {
            return Vec::new();
        }
        let (_, sd, _, s) = self.spec.seasonal_orders();
        let m = self.diffed.len();
        let start = {
            let sp = self.seasonal_ar.len();
            let sq = self.seasonal_ma.len();
            (self.spec.p + s * sp).max(self.spec.q + s * sq)
        };

        let mut z_ext: Vec<f64> = self.diffed.iter().map(|v| v - self.mean).collect();
        let e_at = |idx: usize, residuals: &[f64]| -> f64 {
            if idx >= start && idx < m {
                residuals[idx]
            } else {
                0.0
            }
        };
        for step in 0..horizon {
            let t = m + step;
            let mut value = 0.0;
            for (i, &f) in self.ar.iter().enumerate() {
                value += f * z_ext[t - 1 - i];
            }
            for (j, &f) in self.seasonal_ar.iter().enumerate() {
                value += f * z_ext[t - (j + 1) * s];
            }
            for (i, &fi) in self.ar.iter().enumerate() {
                for (j, &fj) in self.seasonal_ar.iter().enumerate() {
                    value -= fi * fj * z_ext[t - 1 - i - (j + 1) * s];
                }
            }
            for (i, &f) in self.ma.iter().enumerate() {
                value += f * e_at(t - 1 - i, &self.residuals);
            }
            for (j, &f) in self.seasonal_ma.iter().enumerate() {
                value += f * e_at(t - (j + 1) * s, &self.residuals);
            }
            for (i, &fi) in self.ma.iter().enumerate() {
                for (j, &fj) in self.seasonal_ma.iter().enumerate() {
                    value += fi * fj * e_at(t - 1 - i - (j + 1) * s, &self.residuals);
                }
            }
            z_ext.push(value);
        }

        let w_ext: Vec<f64> = z_ext.iter().map(|v| v + self.mean).collect();
        let after_seasonal = inverse_difference(&w_ext, &self.init_regular, self.spec.d, 1)
            .expect("prefix lengths are consistent by construction");
        let original = inverse_difference(&after_seasonal, &self.init_seasonal, sd, s)
            .expect("prefix lengths are consistent by construction");
        original[original.len() - horizon..].to_vec()
    }

    /// Serialized form: spec, coefficients, mean, variance and the consumed
    /// differencing prefix, at full (round-trippable) precision.
    pub fn to_json(&self) -> String {
        #[derive(Serialize)]
        struct ModelJson<'a> {
            spec: &'a ArimaSpec,
            ar_coeffs: &'a [f64],
            ma_coeffs: &'a [f64],
            seasonal_ar_coeffs: &'a [f64],
            seasonal_ma_coeffs: &'a [f64],
            mean: f64,
            sigma2: f64,
            init_values: Vec<f64>,
            converged: bool,
            iterations: usize,
        }
        let json = ModelJson {
            spec: &self.spec,
            ar_coeffs: &self.ar,
            ma_coeffs: &self.ma,
            seasonal_ar_coeffs: &self.seasonal_ar,
            seasonal_ma_coeffs: &self.seasonal_ma,
            mean: self.mean,
            sigma2: self.sigma2,
            init_values: self.init_values(),
            converged: self.converged,
            iterations: self.iterations,
        };
        serde_json::to_string_pretty(&json).expect("model serialization cannot fail")
    }
}

/// True when 1 - c1 x - ... - cp x^p has a root with modulus below 1.05.
fn has_near_unit_root(coeffs: &[f64]) -> bool {
    let mut poly: Vec<f64> = Vec::with_capacity(coeffs.len() + 1);
    poly.push(1.0);
    poly.extend(coeffs.iter().map(|c| -c));
    while poly.len() > 1 && poly.last().map(|c| c.abs() < 1e-12).unwrap_or(false) {
        poly.pop();
    }
    polynomial_roots(&poly)
        .iter()
        .any(|(re, im)| (re * re + im * im).sqrt() < 1.05)
}

/// Durand-Kerner root finding for small real polynomials
/// c0 + c1 x + ... + cn x^n, returning (re, im) pairs.
fn polynomial_roots(poly: &[f64]) -> Vec<(f64, f64)> {
    let degree = poly.len().saturating_sub(1);
    if degree == 0 {
        return Vec::new();
    }
    let lead = poly[degree];
    let monic: Vec<f64> = poly.iter().map(|c| c / lead).collect();

    let eval = |re: f64, im: f64| -> (f64, f64) {
        // Horner on the monic polynomial.
        let mut acc = (0.0f64, 0.0f64);
        for &c in monic.iter().rev() {
            let (ar, ai) = acc;
            acc = (ar * re - ai * im + c, ar * im + ai * re);
        }
        acc
    };

    let mut roots: Vec<(f64, f64)> = (0..degree)
        .map(|k| {
            // Standard spiral of distinct starting points.
            let angle = 0.25 + 2.0 * std::f64::consts::PI * k as f64 / degree as f64;
            (0.9 * angle.cos(), 0.9 * angle.sin())
        })
        .collect();

    for _ in 0..500 {
        let mut delta: f64 = 0.0;
        for k in 0..degree {
            let (pre, pim) = eval(roots[k].0, roots[k].1);
            let mut den = (1.0f64, 0.0f64);
            for j in 0..degree {
                if j == k {
                    continue;
                }
                let dr = roots[k].0 - roots[j].0;
                let di = roots[k].1 - roots[j].1;
                den = (den.0 * dr - den.1 * di, den.0 * di + den.1 * dr);
            }
            let norm = den.0 * den.0 + den.1 * den.1;
            if norm < 1e-300 {
                continue;
            }
            let qr = (pre * den.0 + pim * den.1) / norm;
            let qi = (pim * den.0 - pre * den.1) / norm;
            roots[k].0 -= qr;
            roots[k].1 -= qi;
            delta = delta.max(qr.abs() + qi.abs());
        }
        if delta < 1e-13 {
            break;
        }
    }
    roots
}
