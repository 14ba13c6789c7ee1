//! ChebNet2D: a two-layer perceptron followed by the Chebyshev-interpolated
//! 2-D graph convolution,
//!
//! ```text
//! Z = Σ_d T_d(L̂) h(X) M_d,   h(X) = relu(X W1 + b1) W2 + b2
//! ```
//!
//! Dropout sits after the hidden activation and uses inverted scaling. Its
//! mask is drawn from a ChaCha stream keyed by `(seed, epoch)`, so the
//! backward pass regenerates exactly the mask the forward pass used. Logits
//! are raw; the softmax lives in [`loss_ce`].
//!
//! [`ConvKind::SharedDiagonal`] restricts `Θ[:, :, b]` to `θ_b · I`, which
//! turns the convolution into a single filter shared by every channel. The
//! restriction is enforced through the gradient ([`project_theta_grad`]):
//! all diagonal copies of `θ_b` receive the same gradient and stay equal
//! under Adam, and off-diagonal entries never move from zero.

mod adam;
mod train;

pub use adam::{adam_step, AdamState};
pub use train::{train, History, Splits, TrainOutcome, Trainer};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::chebyshev::{cheb_basis_mats, cheb_nodes, cheb_series_apply, combine_basis, CoeffTensor};
use crate::dense::DenseMat;
use crate::error::{Error, Result};
use crate::graph::SparseSym;

/// Weights of the `K → H → C` perceptron. `w1` is `K × H`, `w2` is `H × C`.
#[derive(Debug, Clone, PartialEq)]
pub struct MlpParams {
    pub w1: DenseMat,
    pub b1: Vec<f64>,
    pub w2: DenseMat,
    pub b2: Vec<f64>,
}

/// All trainable parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelParams {
    pub mlp: MlpParams,
    pub theta: CoeffTensor,
}

/// `(K, H, C, D)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Dims {
    pub k: usize,
    pub h: usize,
    pub c: usize,
    pub d: usize,
}

impl ModelParams {
    pub fn dims(&self) -> Dims {
        Dims {
            k: self.mlp.w1.rows(),
            h: self.mlp.w1.cols(),
            c: self.mlp.w2.cols(),
            d: self.theta.degree(),
        }
    }

    /// Same shapes, all zeros.
    pub fn zeros_like(&self) -> Self {
        let Dims { k, h, c, d } = self.dims();
        ModelParams {
            mlp: MlpParams {
                w1: DenseMat::zeros(k, h),
                b1: vec![0.0; h],
                w2: DenseMat::zeros(h, c),
                b2: vec![0.0; c],
            },
            theta: CoeffTensor::zeros(c, d),
        }
    }

    /// Every parameter array, in a fixed order.
    pub fn slices(&self) -> [&[f64]; 5] {
        [
            self.mlp.w1.as_slice(),
            &self.mlp.b1,
            self.mlp.w2.as_slice(),
            &self.mlp.b2,
            self.theta.as_slice(),
        ]
    }

    pub fn slices_mut(&mut self) -> [&mut [f64]; 5] {
        [
            self.mlp.w1.as_mut_slice(),
            &mut self.mlp.b1,
            self.mlp.w2.as_mut_slice(),
            &mut self.mlp.b2,
            self.theta.as_mut_slice(),
        ]
    }

    pub fn is_finite(&self) -> bool {
        self.slices().iter().all(|s| s.iter().all(|v| v.is_finite()))
    }
}

/// Number of free parameters: `H(K + C) + H + C` for the perceptron plus
/// `(D+1)C²` for a full `Θ`, or `D+1` when `Θ` is shared-diagonal.
pub fn param_count(dims: Dims, conv: ConvKind) -> usize {
    let Dims { k, h, c, d } = dims;
    let mlp = h * (k + c) + h + c;
    match conv {
        ConvKind::TwoD => mlp + (d + 1) * c * c,
        ConvKind::SharedDiagonal => mlp + d + 1,
    }
}

/// Which convolution the model trains.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ConvKind {
    /// Full `C × C × (D+1)` coefficient tensor.
    TwoD,
    /// `Θ[:, :, b] = θ_b I`: one filter shared across channels.
    SharedDiagonal,
}

/// Starting value of `Θ`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ThetaInit {
    /// `Θ[:, :, b] = I` for every node `b`.
    Identity,
    /// Uniform entries in `±1/(D+1)` (diagonal-only for shared-diagonal
    /// models).
    Random,
}

/// Hyperparameters for [`train`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub weight_decay: f64,
    pub dropout: f64,
    pub max_epochs: usize,
    pub patience: usize,
    pub seed: u64,
    pub degree: usize,
    pub hidden: usize,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    pub conv: ConvKind,
    pub theta_init: ThetaInit,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            learning_rate: 0.01,
            weight_decay: 5e-4,
            dropout: 0.5,
            max_epochs: 2000,
            patience: 200,
            seed: 0,
            degree: 10,
            hidden: 64,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
            conv: ConvKind::TwoD,
            theta_init: ThetaInit::Identity,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidConfig(m));
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return bad(format!("learning_rate must be positive, got {}", self.learning_rate));
        }
        if !(self.weight_decay >= 0.0 && self.weight_decay.is_finite()) {
            return bad(format!("weight_decay must be nonnegative, got {}", self.weight_decay));
        }
        if !(0.0..1.0).contains(&self.dropout) {
            return bad(format!("dropout must lie in [0, 1), got {}", self.dropout));
        }
        if self.patience == 0 {
            return bad("patience must be at least 1".into());
        }
        if self.patience > self.max_epochs {
            return bad(format!(
                "patience {} exceeds max_epochs {}",
                self.patience, self.max_epochs
            ));
        }
        if self.hidden == 0 {
            return bad("hidden width must be positive".into());
        }
        if !(0.0..1.0).contains(&self.beta1) || !(0.0..1.0).contains(&self.beta2) {
            return bad("Adam betas must lie in [0, 1)".into());
        }
        if self.epsilon.is_nan() || self.epsilon <= 0.0 {
            return bad("Adam epsilon must be positive".into());
        }
        Ok(())
    }
}

/// Glorot-uniform perceptron weights, zero biases, and `Θ[:, :, b] = I`.
pub fn init_params(k: usize, h: usize, c: usize, d: usize, seed: u64) -> Result<ModelParams> {
    init_params_with(k, h, c, d, seed, ThetaInit::Identity, ConvKind::TwoD)
}

/// [`init_params`] with a choice of `Θ` initialization.
pub fn init_params_with(
    k: usize,
    h: usize,
    c: usize,
    d: usize,
    seed: u64,
    theta_init: ThetaInit,
    conv: ConvKind,
) -> Result<ModelParams> {
    if k == 0 || h == 0 || c == 0 {
        return Err(Error::InvalidConfig(format!(
            "model dimensions must be positive (K={k}, H={h}, C={c})"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut glorot = |rows: usize, cols: usize| {
        let s = (6.0 / (rows + cols) as f64).sqrt();
        DenseMat::from_fn(rows, cols, |_, _| rng.gen_range(-s..s))
    };
    let w1 = glorot(k, h);
    let w2 = glorot(h, c);
    let theta = match theta_init {
        ThetaInit::Identity => CoeffTensor::identity(c, d),
        ThetaInit::Random => {
            let s = 1.0 / (d + 1) as f64;
            match conv {
                ConvKind::TwoD => CoeffTensor::from_fn(c, d, |_, _, _| rng.gen_range(-s..s)),
                ConvKind::SharedDiagonal => {
                    let shared: Vec<f64> = (0..=d).map(|_| rng.gen_range(-s..s)).collect();
                    CoeffTensor::from_fn(c, d, |ci, j, b| if ci == j { shared[b] } else { 0.0 })
                }
            }
        }
    };
    Ok(ModelParams {
        mlp: MlpParams {
            w1,
            b1: vec![0.0; h],
            w2,
            b2: vec![0.0; c],
        },
        theta,
    })
}

/// Whether dropout is active, and how its mask is keyed.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Mode {
    Eval,
    Train { seed: u64, epoch: u64, dropout: f64 },
}

/// Inverted-dropout multipliers (`0` or `1/(1-ρ)`) for an `rows × cols`
/// activation, drawn from stream `epoch` of a ChaCha generator seeded by
/// `seed`.
pub fn dropout_mask(seed: u64, epoch: u64, rate: f64, rows: usize, cols: usize) -> DenseMat {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(epoch);
    let keep = 1.0 / (1.0 - rate);
    DenseMat::from_fn(rows, cols, |_, _| if rng.gen::<f64>() < rate { 0.0 } else { keep })
}

/// Intermediate values of one forward pass.
struct Tape {
    pre: DenseMat,
    mask: Option<DenseMat>,
    hidden: DenseMat,
    basis: Vec<DenseMat>,
    mixing: Vec<DenseMat>,
    logits: DenseMat,
}

fn check_shapes(params: &ModelParams, lhat: &SparseSym, x: &DenseMat) -> Result<()> {
    let dims = params.dims();
    if x.cols() != dims.k {
        return Err(Error::dims("forward", format!("{} feature columns", dims.k), x.cols()));
    }
    if lhat.dim() != x.rows() {
        return Err(Error::dims("forward", format!("{} nodes", lhat.dim()), x.rows()));
    }
    if params.mlp.b1.len() != dims.h
        || params.mlp.w2.rows() != dims.h
        || params.mlp.b2.len() != dims.c
        || params.theta.channels() != dims.c
    {
        return Err(Error::InvalidInput("inconsistent parameter shapes".into()));
    }
    Ok(())
}

fn add_bias(m: &mut DenseMat, b: &[f64]) {
    for i in 0..m.rows() {
        for (v, &bb) in m.row_mut(i).iter_mut().zip(b) {
            *v += bb;
        }
    }
}

fn run_forward(params: &ModelParams, lhat: &SparseSym, x: &DenseMat, mode: Mode) -> Result<Tape> {
    check_shapes(params, lhat, x)?;
    let mut pre = x.matmul(&params.mlp.w1)?;
    add_bias(&mut pre, &params.mlp.b1);
    let mut hidden = pre.map(|v| v.max(0.0));
    let mask = match mode {
        Mode::Train { seed, epoch, dropout } if dropout > 0.0 => {
            let m = dropout_mask(seed, epoch, dropout, hidden.rows(), hidden.cols());
            hidden = hidden.hadamard(&m)?;
            Some(m)
        }
        _ => None,
    };
    let mut f = hidden.matmul(&params.mlp.w2)?;
    add_bias(&mut f, &params.mlp.b2);
    if !f.is_finite() {
        return Err(Error::NonFinite("perceptron output"));
    }
    let basis = cheb_basis_mats(lhat, &f, params.theta.degree())?;
    let mixing = params.theta.mixing_matrices();
    let logits = combine_basis(&basis, &mixing)?;
    if !logits.is_finite() {
        return Err(Error::NonFinite("logits"));
    }
    Ok(Tape {
        pre,
        mask,
        hidden,
        basis,
        mixing,
        logits,
    })
}

/// Logits `N × C`.
pub fn forward(params: &ModelParams, lhat: &SparseSym, x: &DenseMat, mode: Mode) -> Result<DenseMat> {
    Ok(run_forward(params, lhat, x, mode)?.logits)
}

fn check_targets(logits: &DenseMat, labels: &[usize], mask: &[bool]) -> Result<usize> {
    if labels.len() != logits.rows() || mask.len() != logits.rows() {
        return Err(Error::dims(
            "loss",
            format!("{} labels and mask entries", logits.rows()),
            format!("{} labels, {} mask entries", labels.len(), mask.len()),
        ));
    }
    let count = mask.iter().filter(|&&m| m).count();
    if count == 0 {
        return Err(Error::InvalidInput("mask selects no nodes".into()));
    }
    if let Some((i, &l)) = labels.iter().enumerate().find(|&(i, &l)| mask[i] && l >= logits.cols()) {
        return Err(Error::InvalidInput(format!(
            "label {l} of node {i} is outside [0, {})",
            logits.cols()
        )));
    }
    Ok(count)
}

fn log_softmax_row(row: &[f64]) -> Vec<f64> {
    let max = row.iter().fold(f64::NEG_INFINITY, |m, &v| m.max(v));
    let lse = row.iter().map(|&v| (v - max).exp()).sum::<f64>().ln() + max;
    row.iter().map(|&v| v - lse).collect()
}

/// Mean cross-entropy over masked nodes.
pub fn loss_ce(logits: &DenseMat, labels: &[usize], mask: &[bool]) -> Result<f64> {
    let count = check_targets(logits, labels, mask)?;
    let mut total = 0.0;
    for (i, (&l, &m)) in labels.iter().zip(mask).enumerate() {
        if m {
            total -= log_softmax_row(logits.row(i))[l];
        }
    }
    Ok(total / count as f64)
}

/// Gradient of [`loss_ce`] with respect to the logits.
fn loss_grad(logits: &DenseMat, labels: &[usize], mask: &[bool]) -> Result<DenseMat> {
    let count = check_targets(logits, labels, mask)? as f64;
    let mut g = DenseMat::zeros(logits.rows(), logits.cols());
    for (i, (&l, &m)) in labels.iter().zip(mask).enumerate() {
        if !m {
            continue;
        }
        let lsm = log_softmax_row(logits.row(i));
        for (j, v) in g.row_mut(i).iter_mut().enumerate() {
            *v = (lsm[j].exp() - if j == l { 1.0 } else { 0.0 }) / count;
        }
    }
    Ok(g)
}

/// Loss and exact gradients of `loss_ce ∘ forward` for every parameter.
///
/// The coefficient gradient uses `∂loss/∂Θ[:, :, b] = Σ_d T_d(x_b) B_dᵀ G`
/// with `B_d = T_d(L̂)F` and `G = ∂loss/∂Z`. The signal gradient
/// `Σ_d T_d(L̂) G M_dᵀ` is summed by Clenshaw's recurrence.
pub fn backward(
    params: &ModelParams,
    lhat: &SparseSym,
    x: &DenseMat,
    labels: &[usize],
    mask: &[bool],
    mode: Mode,
) -> Result<(f64, ModelParams)> {
    let tape = run_forward(params, lhat, x, mode)?;
    let loss = loss_ce(&tape.logits, labels, mask)?;
    let g = loss_grad(&tape.logits, labels, mask)?;
    let Dims { c, d, .. } = params.dims();

    let mut grads = params.zeros_like();
    let table = cheb_nodes(d).t_table();
    let dm: Vec<DenseMat> = tape.basis.iter().map(|b| b.t_matmul(&g)).collect::<Result<_>>()?;
    for ci in 0..c {
        for j in 0..c {
            for b in 0..=d {
                let v: f64 = table.iter().zip(&dm).map(|(t, m)| t[b] * m.get(ci, j)).sum();
                grads.theta.set(ci, j, b, v);
            }
        }
    }

    let ys: Vec<DenseMat> = tape.mixing.iter().map(|m| g.matmul_t(m)).collect::<Result<_>>()?;
    let df = cheb_series_apply(lhat, &ys)?;

    grads.mlp.w2 = tape.hidden.t_matmul(&df)?;
    grads.mlp.b2 = df.column_sums();
    let mut dh = df.matmul_t(&params.mlp.w2)?;
    if let Some(m) = &tape.mask {
        dh = dh.hadamard(m)?;
    }
    for (v, &p) in dh.as_mut_slice().iter_mut().zip(tape.pre.as_slice()) {
        if p <= 0.0 {
            *v = 0.0;
        }
    }
    grads.mlp.w1 = x.t_matmul(&dh)?;
    grads.mlp.b1 = dh.column_sums();
    Ok((loss, grads))
}

/// Restricts a coefficient gradient to the shared-diagonal family: every
/// diagonal entry at node `b` receives `Σ_c ∂loss/∂Θ[c, c, b]` (the
/// derivative with respect to the shared `θ_b`) and off-diagonal entries
/// receive zero.
pub fn project_theta_grad(grad: &mut CoeffTensor) {
    let (c, d) = (grad.channels(), grad.degree());
    for b in 0..=d {
        let s: f64 = (0..c).map(|k| grad.get(k, k, b)).sum();
        for ci in 0..c {
            for j in 0..c {
                grad.set(ci, j, b, if ci == j { s } else { 0.0 });
            }
        }
    }
}

/// Index of the largest entry, lowest index on ties.
pub fn argmax(row: &[f64]) -> usize {
    let mut best = 0;
    for (j, &v) in row.iter().enumerate().skip(1) {
        if v > row[best] {
            best = j;
        }
    }
    best
}

/// Fraction of masked rows whose argmax matches the label.
pub fn accuracy(logits: &DenseMat, labels: &[usize], mask: &[bool]) -> Result<f64> {
    let count = check_targets(logits, labels, mask)?;
    let correct = (0..logits.rows())
        .filter(|&i| mask[i] && argmax(logits.row(i)) == labels[i])
        .count();
    Ok(correct as f64 / count as f64)
}

/// Eval-mode accuracy over `mask`.
pub fn evaluate(params: &ModelParams, lhat: &SparseSym, x: &DenseMat, labels: &[usize], mask: &[bool]) -> Result<f64> {
    accuracy(&forward(params, lhat, x, Mode::Eval)?, labels, mask)
}
