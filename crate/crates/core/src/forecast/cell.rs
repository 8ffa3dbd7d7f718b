//! Gated recurrent cells built from scratch: plain RNN, GRU and LSTM forward
//! passes, backpropagation through time for a squared-error loss on the final
//! hidden state, and a central-finite-difference gradient check.
//!
//! Gate equations (the standard formulations):
//! - RNN: h' = tanh(W x + U h + b)
//! - GRU: z = σ(Wz x + Uz h + bz), r = σ(Wr x + Ur h + br),
//!   c = tanh(Wc x + Uc (r ⊙ h) + bc), h' = (1 − z) ⊙ h + z ⊙ c
//! - LSTM: i, f, o = σ(W x + U h + b) per gate, g = tanh(Wg x + Ug h + bg),
//!   c' = f ⊙ c + i ⊙ g, h' = o ⊙ tanh(c')

use rand::Rng;

use super::ForecastError;

/// Dense row-major matrix, just large enough for toy-scale cells.
#[derive(Debug, Clone, PartialEq)]
pub struct Mat {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<f64>,
}

impl Mat {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn get(&self, r: usize, c: usize) -> f64 {
        self.data[r * self.cols + c]
    }

    pub fn set(&mut self, r: usize, c: usize, v: f64) {
        self.data[r * self.cols + c] = v;
    }

    /// y = A v
    pub fn matvec(&self, v: &[f64]) -> Vec<f64> {
        debug_assert_eq!(v.len(), self.cols);
        (0..self.rows)
            .map(|r| {
                let row = &self.data[r * self.cols..(r + 1) * self.cols];
                row.iter().zip(v).map(|(a, b)| a * b).sum()
            })
            .collect()
    }

    /// y = Aᵀ v
    pub fn matvec_t(&self, v: &[f64]) -> Vec<f64> {
        debug_assert_eq!(v.len(), self.rows);
        let mut out = vec![0.0; self.cols];
        for (row, &vr) in self.data.chunks_exact(self.cols).zip(v) {
            for (o, a) in out.iter_mut().zip(row) {
                *o += a * vr;
            }
        }
        out
    }

    /// A += u vᵀ
    pub fn add_outer(&mut self, u: &[f64], v: &[f64]) {
        debug_assert_eq!(u.len(), self.rows);
        debug_assert_eq!(v.len(), self.cols);
        for (r, &ur) in u.iter().enumerate() {
            let row = &mut self.data[r * self.cols..(r + 1) * self.cols];
            for (slot, &vc) in row.iter_mut().zip(v) {
                *slot += ur * vc;
            }
        }
    }
}

/// Largest singular value by power iteration on AᵀA; an upper bound on the
/// spectral radius.
pub fn spectral_norm(mat: &Mat) -> f64 {
    if mat.rows == 0 || mat.cols == 0 {
        return 0.0;
    }
    let mut v = vec![1.0 / (mat.cols as f64).sqrt(); mat.cols];
    let mut sigma = 0.0;
    for _ in 0..200 {
        let av = mat.matvec(&v);
        let atav = mat.matvec_t(&av);
        let norm = atav.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm < 1e-300 {
            return 0.0;
        }
        for (slot, x) in v.iter_mut().zip(&atav) {
            *slot = x / norm;
        }
        let av = mat.matvec(&v);
        sigma = av.iter().map(|x| x * x).sum::<f64>().sqrt();
    }
    sigma
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CellKind {
    Rnn,
    Gru,
    Lstm,
}

impl CellKind {
    pub const ALL: [CellKind; 3] = [CellKind::Rnn, CellKind::Gru, CellKind::Lstm];

    pub fn name(self) -> &'static str {
        match self {
            CellKind::Rnn => "rnn",
            CellKind::Gru => "gru",
            CellKind::Lstm => "lstm",
        }
    }
}

/// Input weights, recurrent weights and bias for one gate.
#[derive(Debug, Clone, PartialEq)]
pub struct GateWeights {
    pub w_in: Mat,
    pub w_rec: Mat,
    pub bias: Vec<f64>,
}

impl GateWeights {
    fn zeros(input: usize, hidden: usize) -> Self {
        Self {
            w_in: Mat::zeros(hidden, input),
            w_rec: Mat::zeros(hidden, hidden),
            bias: vec![0.0; hidden],
        }
    }

    fn pre_activation(&self, x: &[f64], h: &[f64]) -> Vec<f64> {
        let mut out = self.w_in.matvec(x);
        for (slot, v) in out.iter_mut().zip(self.w_rec.matvec(h)) {
            *slot += v;
        }
        for (slot, b) in out.iter_mut().zip(&self.bias) {
            *slot += b;
        }
        out
    }

    fn n_params(&self) -> usize {
        self.w_in.data.len() + self.w_rec.data.len() + self.bias.len()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum CellWeights {
    Rnn(GateWeights),
    Gru {
        update: GateWeights,
        reset: GateWeights,
        candidate: GateWeights,
    },
    Lstm {
        input: GateWeights,
        forget: GateWeights,
        output: GateWeights,
        candidate: GateWeights,
    },
}

/// Complete parameter collection θ for one cell.
#[derive(Debug, Clone, PartialEq)]
pub struct CellParams {
    pub kind: CellKind,
    pub input_size: usize,
    pub hidden_size: usize,
    pub weights: CellWeights,
}

impl CellParams {
    pub fn zeros(kind: CellKind, input_size: usize, hidden_size: usize) -> Self {
        let gate = || GateWeights::zeros(input_size, hidden_size);
        let weights = match kind {
            CellKind::Rnn => CellWeights::Rnn(gate()),
            CellKind::Gru => CellWeights::Gru {
                update: gate(),
                reset: gate(),
                candidate: gate(),
            },
            CellKind::Lstm => CellWeights::Lstm {
                input: gate(),
                forget: gate(),
                output: gate(),
                candidate: gate(),
            },
        };
        Self {
            kind,
            input_size,
            hidden_size,
            weights,
        }
    }

    /// All weights drawn i.i.d. normal scaled by `scale`.
    pub fn random<R: Rng>(
        kind: CellKind,
        input_size: usize,
        hidden_size: usize,
        scale: f64,
        rng: &mut R,
    ) -> Self {
        let mut params = Self::zeros(kind, input_size, hidden_size);
        let flat: Vec<f64> = (0..params.n_params())
            .map(|_| crate::num::randn(rng) * scale)
            .collect();
        params.load_flat(&flat);
        params
    }

    fn gates(&self) -> Vec<&GateWeights> {
        match &self.weights {
            CellWeights::Rnn(g) => vec![g],
            CellWeights::Gru {
                update,
                reset,
                candidate,
            } => vec![update, reset, candidate],
            CellWeights::Lstm {
                input,
                forget,
                output,
                candidate,
            } => vec![input, forget, output, candidate],
        }
    }

    fn gates_mut(&mut self) -> Vec<&mut GateWeights> {
        match &mut self.weights {
            CellWeights::Rnn(g) => vec![g],
            CellWeights::Gru {
                update,
                reset,
                candidate,
            } => vec![update, reset, candidate],
            CellWeights::Lstm {
                input,
                forget,
                output,
                candidate,
            } => vec![input, forget, output, candidate],
        }
    }

    pub fn n_params(&self) -> usize {
        self.gates().iter().map(|g| g.n_params()).sum()
    }

    /// θ flattened in a fixed order (gates in declaration order; within a
    /// gate: input weights, recurrent weights, bias).
    pub fn flatten(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.n_params());
        for gate in self.gates() {
            out.extend_from_slice(&gate.w_in.data);
            out.extend_from_slice(&gate.w_rec.data);
            out.extend_from_slice(&gate.bias);
        }
        out
    }

    /// Inverse of [`CellParams::flatten`].
    pub fn load_flat(&mut self, flat: &[f64]) {
        assert_eq!(
            flat.len(),
            self.n_params(),
            "flat parameter length mismatch"
        );
        let mut offset = 0;
        for gate in self.gates_mut() {
            let n = gate.w_in.data.len();
            gate.w_in.data.copy_from_slice(&flat[offset..offset + n]);
            offset += n;
            let n = gate.w_rec.data.len();
            gate.w_rec.data.copy_from_slice(&flat[offset..offset + n]);
            offset += n;
            let n = gate.bias.len();
            gate.bias.copy_from_slice(&flat[offset..offset + n]);
            offset += n;
        }
    }
}

/// Hidden state h (plus the cell-memory vector for LSTM).
#[derive(Debug, Clone, PartialEq)]
pub struct CellState {
    pub h: Vec<f64>,
    pub c: Option<Vec<f64>>,
}

impl CellState {
    pub fn zeros(params: &CellParams) -> Self {
        Self {
            h: vec![0.0; params.hidden_size],
            c: (params.kind == CellKind::Lstm).then(|| vec![0.0; params.hidden_size]),
        }
    }
}

fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

fn map(v: &[f64], f: fn(f64) -> f64) -> Vec<f64> {
    v.iter().map(|&x| f(x)).collect()
}

fn hadamard(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x * y).collect()
}

fn check_dims(params: &CellParams, state: &CellState, x: &[f64]) -> Result<(), ForecastError> {
    if x.len() != params.input_size {
        return Err(ForecastError::DimensionMismatch(format!(
            "input has length {}, cell expects {}",
            x.len(),
            params.input_size
        )));
    }
    if state.h.len() != params.hidden_size {
        return Err(ForecastError::DimensionMismatch(format!(
            "hidden state has length {}, cell expects {}",
            state.h.len(),
            params.hidden_size
        )));
    }
    match (&state.c, params.kind) {
        (Some(c), CellKind::Lstm) if c.len() != params.hidden_size => {
            Err(ForecastError::DimensionMismatch(format!(
                "cell memory has length {}, cell expects {}",
                c.len(),
                params.hidden_size
            )))
        }
        (Some(_), CellKind::Lstm) | (None, CellKind::Rnn) | (None, CellKind::Gru) => Ok(()),
        (Some(_), _) => Err(ForecastError::DimensionMismatch(
            "cell memory supplied to a non-LSTM cell".into(),
        )),
        (None, CellKind::Lstm) => Err(ForecastError::DimensionMismatch(
            "LSTM state requires a cell-memory vector".into(),
        )),
    }
}

/// Intermediate activations cached for backpropagation.
enum StepCache {
    Rnn {
        x: Vec<f64>,
        h_prev: Vec<f64>,
        h: Vec<f64>,
    },
    Gru {
        x: Vec<f64>,
        h_prev: Vec<f64>,
        z: Vec<f64>,
        r: Vec<f64>,
        rh: Vec<f64>,
        c: Vec<f64>,
    },
    Lstm {
        x: Vec<f64>,
        h_prev: Vec<f64>,
        c_prev: Vec<f64>,
        i: Vec<f64>,
        f: Vec<f64>,
        o: Vec<f64>,
        g: Vec<f64>,
        tc: Vec<f64>,
    },
}

fn forward_step(params: &CellParams, state: &CellState, x: &[f64]) -> (CellState, StepCache) {
    match &params.weights {
        CellWeights::Rnn(gate) => {
            let h = map(&gate.pre_activation(x, &state.h), f64::tanh);
            let cache = StepCache::Rnn {
                x: x.to_vec(),
                h_prev: state.h.clone(),
                h: h.clone(),
            };
            (CellState { h, c: None }, cache)
        }
        CellWeights::Gru {
            update,
            reset,
            candidate,
        } => {
            let z = map(&update.pre_activation(x, &state.h), sigmoid);
            let r = map(&reset.pre_activation(x, &state.h), sigmoid);
            let rh = hadamard(&r, &state.h);
            let c = map(&candidate.pre_activation(x, &rh), f64::tanh);
            let h: Vec<f64> = state
                .h
                .iter()
                .zip(z.iter().zip(&c))
                .map(|(&h_prev, (&z, &c))| (1.0 - z) * h_prev + z * c)
                .collect();
            let cache = StepCache::Gru {
                x: x.to_vec(),
                h_prev: state.h.clone(),
                z,
                r,
                rh,
                c,
            };
            (CellState { h, c: None }, cache)
        }
        CellWeights::Lstm {
            input,
            forget,
            output,
            candidate,
        } => {
            let c_prev = state.c.as_deref().expect("dims checked by caller");
            let i = map(&input.pre_activation(x, &state.h), sigmoid);
            let f = map(&forget.pre_activation(x, &state.h), sigmoid);
            let o = map(&output.pre_activation(x, &state.h), sigmoid);
            let g = map(&candidate.pre_activation(x, &state.h), f64::tanh);
            let c: Vec<f64> = (0..params.hidden_size)
                .map(|j| f[j] * c_prev[j] + i[j] * g[j])
                .collect();
            let tc = map(&c, f64::tanh);
            let h = hadamard(&o, &tc);
            let cache = StepCache::Lstm {
                x: x.to_vec(),
                h_prev: state.h.clone(),
                c_prev: c_prev.to_vec(),
                i,
                f,
                o,
                g,
                tc,
            };
            (CellState { h, c: Some(c) }, cache)
        }
    }
}

/// Single cell update h⁽ᵗ⁾ = f(h⁽ᵗ⁻¹⁾, x⁽ᵗ⁾, θ).
pub fn cell_step(
    params: &CellParams,
    state: &CellState,
    x: &[f64],
) -> Result<CellState, ForecastError> {
    check_dims(params, state, x)?;
    let (next, _) = forward_step(params, state, x);
    if next.h.iter().any(|v| !v.is_finite())
        || next
            .c
            .as_ref()
            .is_some_and(|c| c.iter().any(|v| !v.is_finite()))
    {
        return Err(ForecastError::NonFinite("cell state".into()));
    }
    Ok(next)
}

fn run_sequence(
    params: &CellParams,
    inputs: &[Vec<f64>],
) -> Result<(CellState, Vec<StepCache>), ForecastError> {
    let mut state = CellState::zeros(params);
    let mut caches = Vec::with_capacity(inputs.len());
    for x in inputs {
        check_dims(params, &state, x)?;
        let (next, cache) = forward_step(params, &state, x);
        caches.push(cache);
        state = next;
    }
    Ok((state, caches))
}

/// Squared-error loss of the final hidden state against `target`, starting
/// from a zero state.
pub fn sequence_loss(
    params: &CellParams,
    inputs: &[Vec<f64>],
    target: &[f64],
) -> Result<f64, ForecastError> {
    if target.len() != params.hidden_size {
        return Err(ForecastError::DimensionMismatch(format!(
            "target has length {}, cell emits {}",
            target.len(),
            params.hidden_size
        )));
    }
    if inputs.is_empty() {
        return Err(ForecastError::DimensionMismatch(
            "empty input sequence".into(),
        ));
    }
    let (state, _) = run_sequence(params, inputs)?;
    Ok(state
        .h
        .iter()
        .zip(target)
        .map(|(h, y)| (h - y) * (h - y))
        .sum())
}

/// Backpropagation through time for [`sequence_loss`]. Returns the gradient
/// with respect to θ (same shape as `params`) and with respect to each input
/// vector.
pub fn loss_gradients(
    params: &CellParams,
    inputs: &[Vec<f64>],
    target: &[f64],
) -> Result<(CellParams, Vec<Vec<f64>>), ForecastError> {
    if target.len() != params.hidden_size {
        return Err(ForecastError::DimensionMismatch(format!(
            "target has length {}, cell emits {}",
            target.len(),
            params.hidden_size
        )));
    }
    if inputs.is_empty() {
        return Err(ForecastError::DimensionMismatch(
            "empty input sequence".into(),
        ));
    }
    let (final_state, caches) = run_sequence(params, inputs)?;

    let mut grads = CellParams::zeros(params.kind, params.input_size, params.hidden_size);
    let mut input_grads = vec![vec![0.0; params.input_size]; inputs.len()];

    // dL/dh at the final step.
    let mut g_h: Vec<f64> = final_state
        .h
        .iter()
        .zip(target)
        .map(|(h, y)| 2.0 * (h - y))
        .collect();
    let mut g_c = vec![0.0; params.hidden_size];

    for (t, cache) in caches.iter().enumerate().rev() {
        match (cache, &params.weights, &mut grads.weights) {
            (StepCache::Rnn { x, h_prev, h }, CellWeights::Rnn(gate), CellWeights::Rnn(d_gate)) => {
                let g_pre: Vec<f64> = g_h
                    .iter()
                    .zip(h)
                    .map(|(&g, &h)| g * (1.0 - h * h))
                    .collect();
                d_gate.w_in.add_outer(&g_pre, x);
                d_gate.w_rec.add_outer(&g_pre, h_prev);
                for (slot, g) in d_gate.bias.iter_mut().zip(&g_pre) {
                    *slot += g;
                }
                input_grads[t] = gate.w_in.matvec_t(&g_pre);
                g_h = gate.w_rec.matvec_t(&g_pre);
            }
            (
                StepCache::Gru {
                    x,
                    h_prev,
                    z,
                    r,
                    rh,
                    c,
                },
                CellWeights::Gru {
                    update,
                    reset,
                    candidate,
                },
                CellWeights::Gru {
                    update: d_update,
                    reset: d_reset,
                    candidate: d_candidate,
                },
            ) => {
                let g_z: Vec<f64> = (0..z.len()).map(|j| g_h[j] * (c[j] - h_prev[j])).collect();
                let g_cand: Vec<f64> = (0..z.len()).map(|j| g_h[j] * z[j]).collect();
                let mut g_hprev: Vec<f64> = (0..z.len()).map(|j| g_h[j] * (1.0 - z[j])).collect();

                let g_ac: Vec<f64> = g_cand
                    .iter()
                    .zip(c)
                    .map(|(&g, &c)| g * (1.0 - c * c))
                    .collect();
                d_candidate.w_in.add_outer(&g_ac, x);
                d_candidate.w_rec.add_outer(&g_ac, rh);
                for (slot, g) in d_candidate.bias.iter_mut().zip(&g_ac) {
                    *slot += g;
                }
                let g_rh = candidate.w_rec.matvec_t(&g_ac);
                let g_r: Vec<f64> = hadamard(&g_rh, h_prev);
                for j in 0..g_hprev.len() {
                    g_hprev[j] += g_rh[j] * r[j];
                }

                let g_az: Vec<f64> = g_z
                    .iter()
                    .zip(z)
                    .map(|(&g, &z)| g * z * (1.0 - z))
                    .collect();
                d_update.w_in.add_outer(&g_az, x);
                d_update.w_rec.add_outer(&g_az, h_prev);
                for (slot, g) in d_update.bias.iter_mut().zip(&g_az) {
                    *slot += g;
                }
                for (slot, v) in g_hprev.iter_mut().zip(update.w_rec.matvec_t(&g_az)) {
                    *slot += v;
                }

                let g_ar: Vec<f64> = g_r
                    .iter()
                    .zip(r)
                    .map(|(&g, &r)| g * r * (1.0 - r))
                    .collect();
                d_reset.w_in.add_outer(&g_ar, x);
                d_reset.w_rec.add_outer(&g_ar, h_prev);
                for (slot, g) in d_reset.bias.iter_mut().zip(&g_ar) {
                    *slot += g;
                }
                for (slot, v) in g_hprev.iter_mut().zip(reset.w_rec.matvec_t(&g_ar)) {
                    *slot += v;
                }

                let mut g_x = update.w_in.matvec_t(&g_az);
                for (slot, v) in g_x.iter_mut().zip(reset.w_in.matvec_t(&g_ar)) {
                    *slot += v;
                }
                for (slot, v) in g_x.iter_mut().zip(candidate.w_in.matvec_t(&g_ac)) {
                    *slot += v;
                }
                input_grads[t] = g_x;
                g_h = g_hprev;
            }
            (
                StepCache::Lstm {
                    x,
                    h_prev,
                    c_prev,
                    i,
                    f,
                    o,
                    g,
                    tc,
                },
                CellWeights::Lstm {
                    input,
                    forget,
                    output,
                    candidate,
                },
                CellWeights::Lstm {
                    input: d_input,
                    forget: d_forget,
                    output: d_output,
                    candidate: d_candidate,
                },
            ) => {
                let n = params.hidden_size;
                let g_o: Vec<f64> = (0..n).map(|j| g_h[j] * tc[j]).collect();
                for j in 0..n {
                    g_c[j] += g_h[j] * o[j] * (1.0 - tc[j] * tc[j]);
                }
                let g_f: Vec<f64> = (0..n).map(|j| g_c[j] * c_prev[j]).collect();
                let g_i: Vec<f64> = (0..n).map(|j| g_c[j] * g[j]).collect();
                let g_g: Vec<f64> = (0..n).map(|j| g_c[j] * i[j]).collect();
                let g_cprev: Vec<f64> = (0..n).map(|j| g_c[j] * f[j]).collect();

                let g_ai: Vec<f64> = (0..n).map(|j| g_i[j] * i[j] * (1.0 - i[j])).collect();
                let g_af: Vec<f64> = (0..n).map(|j| g_f[j] * f[j] * (1.0 - f[j])).collect();
                let g_ao: Vec<f64> = (0..n).map(|j| g_o[j] * o[j] * (1.0 - o[j])).collect();
                let g_ag: Vec<f64> = (0..n).map(|j| g_g[j] * (1.0 - g[j] * g[j])).collect();

                let mut g_hprev = vec![0.0; n];
                let mut g_x = vec![0.0; params.input_size];
                for (gate, d_gate, g_a) in [
                    (input, d_input, &g_ai),
                    (forget, d_forget, &g_af),
                    (output, d_output, &g_ao),
                    (candidate, d_candidate, &g_ag),
                ] {
                    d_gate.w_in.add_outer(g_a, x);
                    d_gate.w_rec.add_outer(g_a, h_prev);
                    for (slot, g) in d_gate.bias.iter_mut().zip(g_a.iter()) {
                        *slot += g;
                    }
                    for (slot, v) in g_hprev.iter_mut().zip(gate.w_rec.matvec_t(g_a)) {
                        *slot += v;
                    }
                    for (slot, v) in g_x.iter_mut().zip(gate.w_in.matvec_t(g_a)) {
                        *slot += v;
                    }
                }
                input_grads[t] = g_x;
                g_h = g_hprev;
                g_c = g_cprev;
            }
            _ => unreachable!("cache kind always matches the parameter kind"),
        }
    }

    Ok((grads, input_grads))
}

/// Central finite differences over θ, step 1e-5.
pub fn numeric_gradients(
    params: &CellParams,
    inputs: &[Vec<f64>],
    target: &[f64],
) -> Result<Vec<f64>, ForecastError> {
    const STEP: f64 = 1e-5;
    let flat = params.flatten();
    let mut scratch = params.clone();
    let mut out = Vec::with_capacity(flat.len());
    for k in 0..flat.len() {
        let mut plus = flat.clone();
        plus[k] += STEP;
        scratch.load_flat(&plus);
        let loss_plus = sequence_loss(&scratch, inputs, target)?;
        let mut minus = flat.clone();
        minus[k] -= STEP;
        scratch.load_flat(&minus);
        let loss_minus = sequence_loss(&scratch, inputs, target)?;
        out.push((loss_plus - loss_minus) / (2.0 * STEP));
    }
    Ok(out)
}

/// Maximum relative discrepancy between the analytic BPTT gradient and the
/// central-finite-difference gradient, over every θ entry.
pub fn gradient_check(
    params: &CellParams,
    inputs: &[Vec<f64>],
    target: &[f64],
) -> Result<f64, ForecastError> {
    let (analytic, _) = loss_gradients(params, inputs, target)?;
    let analytic = analytic.flatten();
    let numeric = numeric_gradients(params, inputs, target)?;
    let mut worst: f64 = 0.0;
    for (a, n) in analytic.iter().zip(&numeric) {
        let rel = (a - n).abs() / a.abs().max(n.abs()).max(1e-6);
        worst = worst.max(rel);
    }
    Ok(worst)
}
