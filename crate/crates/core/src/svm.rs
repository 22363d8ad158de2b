//! Soft-margin SVM trained in the dual by sequential minimal optimization.
//!
//! The solver maximizes `Σαᵢ − ½ αᵀQα` with `Q = Y K Y` subject to
//! `0 ≤ αᵢ ≤ C` and `Σ αᵢ yᵢ = 0`, updating one maximal-violating pair of
//! dual variables per step with the equality constraint maintained exactly.
//! Pair selection breaks ties by lowest index and uses no randomness, so
//! training is bit-reproducible.

use crate::error::{Error, Result};
use crate::kernel::{gram, KernelSpec};
use crate::lfp::TaskLabel;
use ndarray::Array2;
use serde::{Deserialize, Serialize};

/// Solver settings; the defaults satisfy the documented convergence bounds
/// (KKT residual ≤ 10⁻⁵, relative duality gap ≤ 10⁻⁶).
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct SvmParams {
    /// Box penalty C.
    pub c: f64,
    /// Stop once the maximal KKT violation (m − M) falls below this…
    pub kkt_tol: f64,
    /// …and the relative duality gap falls below this.
    pub gap_tol: f64,
    /// Hard cap on pair updates before reporting non-convergence.
    pub max_pair_updates: u64,
}

impl Default for SvmParams {
    fn default() -> Self {
        Self {
            c: 1.0,
            kkt_tol: 1e-5,
            gap_tol: 1e-6,
            max_pair_updates: 10_000_000,
        }
    }
}

impl SvmParams {
    pub fn with_c(c: f64) -> Self {
        Self { c, ..Self::default() }
    }

    fn validate(&self) -> Result<()> {
        if !(self.c > 0.0 && self.c.is_finite()) {
            return Err(Error::InvalidParams(format!(
                "penalty C must be positive and finite, got {}",
                self.c
            )));
        }
        if !(self.kkt_tol > 0.0) || !(self.gap_tol > 0.0) {
            return Err(Error::InvalidParams(
                "kkt_tol and gap_tol must be positive".into(),
            ));
        }
        if self.max_pair_updates == 0 {
            return Err(Error::InvalidParams("max_pair_updates must be ≥ 1".into()));
        }
        Ok(())
    }
}

/// A trained binary SVM in dual form.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SvmModel {
    /// Dual variables, one per training sample, each in [0, C].
    pub alpha: Vec<f64>,
    /// Bias ω₀ of the decision function.
    pub bias: f64,
    /// Training labels, ±1.
    pub labels: Vec<f64>,
    pub penalty: f64,
    /// Indices with α > 0 (support vectors).
    pub support: Vec<usize>,
    /// Max complementarity violation at the returned (α, bias).
    pub kkt_residual: f64,
    /// Relative primal−dual gap at the returned point.
    pub duality_gap: f64,
    /// Final dual objective Σα − ½αᵀQα.
    pub dual_objective: f64,
    /// Σ max(0, 1 − yᵢ f(xᵢ)) at the returned bias (primal slack total).
    pub slack_sum: f64,
    pub pair_updates: u64,
    /// Dual objective sampled along the run (always non-decreasing).
    pub objective_trace: Vec<f64>,
}

impl SvmModel {
    /// Decision value f(x) = Σᵢ αᵢ yᵢ k(xᵢ, x) + ω₀ from precomputed kernel
    /// evaluations against the training set.
    pub fn decision(&self, kernel_row: &[f64]) -> Result<f64> {
        if kernel_row.len() != self.alpha.len() {
            return Err(Error::DimensionMismatch {
                expected: self.alpha.len(),
                got: kernel_row.len(),
            });
        }
        let mut f = self.bias;
        for &i in &self.support {
            f += self.alpha[i] * self.labels[i] * kernel_row[i];
        }
        Ok(f)
    }
}

struct Workset {
    i: usize,
    j: usize,
    /// max over I_up of −y·g
    m_up: f64,
    /// min over I_low of −y·g
    m_low: f64,
}

fn select_pair(alpha: &[f64], grad: &[f64], y: &[f64], c: f64) -> Workset {
    let mut ws = Workset {
        i: usize::MAX,
        j: usize::MAX,
        m_up: f64::NEG_INFINITY,
        m_low: f64::INFINITY,
    };
    for t in 0..alpha.len() {
        let yg = -y[t] * grad[t];
        let in_up = (y[t] > 0.0 && alpha[t] < c) || (y[t] < 0.0 && alpha[t] > 0.0);
        let in_low = (y[t] > 0.0 && alpha[t] > 0.0) || (y[t] < 0.0 && alpha[t] < c);
        if in_up && yg > ws.m_up {
            ws.m_up = yg;
            ws.i = t;
        }
        if in_low && yg < ws.m_low {
            ws.m_low = yg;
            ws.j = t;
        }
    }
    ws
}

/// Exact maximizer of the dual restricted to variables (i, j), keeping
/// Σαy = 0 and the box; the classic two-variable SMO step.
fn update_pair(q: &Array2<f64>, y: &[f64], alpha: &mut [f64], grad: &mut [f64], c: f64, i: usize, j: usize) {
    let old_i = alpha[i];
    let old_j = alpha[j];
    let mut quad = q[[i, i]] + q[[j, j]];
    if y[i] != y[j] {
        quad += 2.0 * q[[i, j]];
        if quad <= 0.0 {
            quad = 1e-12;
        }
        let delta = (-grad[i] - grad[j]) / quad;
        let diff = alpha[i] - alpha[j];
        alpha[i] += delta;
        alpha[j] += delta;
        if diff > 0.0 {
            if alpha[j] < 0.0 {
                alpha[j] = 0.0;
                alpha[i] = diff;
            }
            if alpha[i] > c {
                alpha[i] = c;
                alpha[j] = c - diff;
            }
        } else {
            if alpha[i] < 0.0 {
                alpha[i] = 0.0;
                alpha[j] = -diff;
            }
            if alpha[j] > c {
                alpha[j] = c;
                alpha[i] = c + diff;
            }
        }
    } else {
        quad -= 2.0 * q[[i, j]];
        if quad <= 0.0 {
            quad = 1e-12;
        }
        let delta = (grad[i] - grad[j]) / quad;
        let sum = alpha[i] + alpha[j];
        alpha[i] -= delta;
        alpha[j] += delta;
        if sum > c {
            if alpha[i] > c {
                alpha[i] = c;
                alpha[j] = sum - c;
            }
            if alpha[j] > c {
                alpha[j] = c;
                alpha[i] = sum - c;
            }
        } else {
            if alpha[j] < 0.0 {
                alpha[j] = 0.0;
                alpha[i] = sum;
            }
            if alpha[i] < 0.0 {
                alpha[i] = 0.0;
                alpha[j] = sum;
            }
        }
    }
    let d_i = alpha[i] - old_i;
    let d_j = alpha[j] - old_j;
    if d_i != 0.0 || d_j != 0.0 {
        for t in 0..grad.len() {
            grad[t] += q[[t, i]] * d_i + q[[t, j]] * d_j;
        }
    }
}

/// Bias from the mean of −y·g over free support vectors, falling back to the
/// midpoint of the violating-pair bounds when no variable is strictly inside
/// the box.
fn compute_bias(alpha: &[f64], grad: &[f64], y: &[f64], c: f64) -> f64 {
    let mut acc = 0.0;
    let mut count = 0usize;
    for t in 0..alpha.len() {
        if alpha[t] > 0.0 && alpha[t] < c {
            acc += -y[t] * grad[t];
            count += 1;
        }
    }
    if count > 0 {
        return acc / count as f64;
    }
    let ws = select_pair(alpha, grad, y, c);
    if ws.m_up.is_finite() && ws.m_low.is_finite() {
        (ws.m_up + ws.m_low) / 2.0
    } else if ws.m_up.is_finite() {
        ws.m_up
    } else {
        ws.m_low
    }
}

struct Certificates {
    bias: f64,
    dual: f64,
    gap: f64,
    kkt: f64,
    slack_sum: f64,
}

fn certify(alpha: &[f64], grad: &[f64], y: &[f64], c: f64) -> Certificates {
    let n = alpha.len();
    let bias = compute_bias(alpha, grad, y, c);
    let sum_a: f64 = alpha.iter().sum();
    let a_dot_g: f64 = alpha.iter().zip(grad).map(|(a, g)| a * g).sum();
    // αᵀQα = αᵀ(g + 1) since g = Qα − 1.
    let quad = a_dot_g + sum_a;
    let dual = sum_a - 0.5 * quad;
    let mut slack_sum = 0.0;
    let mut kkt = 0.0f64;
    for t in 0..n {
        // f(x_t) = Σ α y K + bias = y_t (g_t + 1) + bias.
        let f = y[t] * (grad[t] + 1.0) + bias;
        let margin = y[t] * f;
        slack_sum += (1.0 - margin).max(0.0);
        let viol = if alpha[t] <= 0.0 {
            (1.0 - margin).max(0.0)
        } else if alpha[t] >= c {
            (margin - 1.0).max(0.0)
        } else {
            (margin - 1.0).abs()
        };
        kkt = kkt.max(viol);
    }
    let primal = 0.5 * quad + c * slack_sum;
    let gap = (primal - dual) / primal.abs().max(1.0);
    Certificates {
        bias,
        dual,
        gap,
        kkt,
        slack_sum,
    }
}

/// Train a binary SVM on a precomputed kernel matrix.
///
/// `labels` must be exactly ±1 with both signs present. The matrix is
/// symmetrized at fp tolerance before solving. On success the model carries
/// its own optimality certificates (KKT residual and duality gap).
pub fn solve_svm_dual(kernel: &Array2<f64>, labels: &[f64], params: &SvmParams) -> Result<SvmModel> {
    params.validate()?;
    let n = labels.len();
    if kernel.nrows() != n || kernel.ncols() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: kernel.nrows().max(kernel.ncols()),
        });
    }
    for &y in labels {
        if y != 1.0 && y != -1.0 {
            return Err(Error::InvalidParams(format!(
                "labels must be exactly ±1, got {y}"
            )));
        }
    }
    if !labels.contains(&1.0) || !labels.contains(&-1.0) {
        return Err(Error::SingleClassInput);
    }
    let c = params.c;

    let mut q = Array2::<f64>::zeros((n, n));
    for i in 0..n {
        for j in 0..n {
            q[[i, j]] = labels[i] * labels[j] * 0.5 * (kernel[[i, j]] + kernel[[j, i]]);
        }
    }

    let mut alpha = vec![0.0f64; n];
    let mut grad = vec![-1.0f64; n];
    let mut updates: u64 = 0;
    let trace_stride: u64 = if n <= 128 { 1 } else { n as u64 };
    let mut trace = vec![0.0]; // dual objective at α = 0

    loop {
        let ws = select_pair(&alpha, &grad, labels, c);
        let violation = ws.m_up - ws.m_low;
        // Floating-point floor: below this no pair step can move the dual.
        let floor = 1e-15 * (1.0 + ws.m_up.abs().max(ws.m_low.abs()));
        if violation <= floor.max(0.0) || ws.i == usize::MAX || ws.j == usize::MAX {
            break;
        }
        if violation <= params.kkt_tol {
            let cert = certify(&alpha, &grad, labels, c);
            if cert.gap <= params.gap_tol {
                break;
            }
        }
        if updates >= params.max_pair_updates {
            let cert = certify(&alpha, &grad, labels, c);
            return Err(Error::NonConvergence {
                solver: "svm-smo",
                iterations: updates,
                objective: cert.dual,
                gap: cert.gap,
            });
        }
        update_pair(&q, labels, &mut alpha, &mut grad, c, ws.i, ws.j);
        updates += 1;
        if updates % trace_stride == 0 {
            let sum_a: f64 = alpha.iter().sum();
            let a_dot_g: f64 = alpha.iter().zip(&grad).map(|(a, g)| a * g).sum();
            trace.push(sum_a - 0.5 * (a_dot_g + sum_a));
        }
    }

    let cert = certify(&alpha, &grad, labels, c);
    if *trace.last().unwrap() != cert.dual {
        trace.push(cert.dual);
    }
    let support: Vec<usize> = (0..n).filter(|&t| alpha[t] > 0.0).collect();
    Ok(SvmModel {
        alpha,
        bias: cert.bias,
        labels: labels.to_vec(),
        penalty: c,
        support,
        kkt_residual: cert.kkt,
        duality_gap: cert.gap,
        dual_objective: cert.dual,
        slack_sum: cert.slack_sum,
        pair_updates: updates,
        objective_trace: trace,
    })
}

/// Highest-value class with ties broken by the lowest class index.
pub(crate) fn argmax_class(classes: &[TaskLabel], values: &[f64]) -> TaskLabel {
    let mut best = 0;
    for (k, v) in values.iter().enumerate() {
        if *v > values[best] {
            best = k;
        }
    }
    classes[best]
}

/// One-vs-rest ensemble over a shared kernel spec and training set.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MulticlassSvm {
    /// Distinct classes in canonical label order.
    pub classes: Vec<TaskLabel>,
    /// One binary model per class (that class = +1, rest = −1).
    pub models: Vec<SvmModel>,
    pub spec: KernelSpec,
    /// Training vectors, shared by all binary models.
    pub train: Vec<Vec<f64>>,
}

/// Train one-vs-rest SVMs. Requires ≥ 2 classes with ≥ 2 samples each.
pub fn train_multiclass(
    vectors: &[Vec<f64>],
    labels: &[TaskLabel],
    spec: &KernelSpec,
    params: &SvmParams,
) -> Result<MulticlassSvm> {
    if vectors.len() != labels.len() {
        return Err(Error::LengthMismatch {
            left: vectors.len(),
            right: labels.len(),
        });
    }
    let classes: Vec<TaskLabel> = TaskLabel::ALL
        .into_iter()
        .filter(|c| labels.contains(c))
        .collect();
    if classes.len() < 2 {
        return Err(Error::SingleClassInput);
    }
    for &c in &classes {
        let count = labels.iter().filter(|&&l| l == c).count();
        if count < 2 {
            return Err(Error::InvalidParams(format!(
                "class {c} has {count} samples; one-vs-rest needs ≥ 2 per class"
            )));
        }
    }
    let k = gram(vectors, spec, "multiclass")?;
    let mut models = Vec::with_capacity(classes.len());
    for &cls in &classes {
        let y: Vec<f64> = labels
            .iter()
            .map(|&l| if l == cls { 1.0 } else { -1.0 })
            .collect();
        models.push(solve_svm_dual(&k.values, &y, params)?);
    }
    Ok(MulticlassSvm {
        classes,
        models,
        spec: *spec,
        train: vectors.to_vec(),
    })
}

impl MulticlassSvm {
    /// Per-class decision values for one sample.
    pub fn decision_values(&self, x: &[f64]) -> Result<Vec<f64>> {
        let row: Vec<f64> = self.train.iter().map(|t| self.spec.eval(t, x)).collect();
        self.models.iter().map(|m| m.decision(&row)).collect()
    }

    pub fn predict(&self, x: &[f64]) -> Result<TaskLabel> {
        Ok(argmax_class(&self.classes, &self.decision_values(x)?))
    }
}
