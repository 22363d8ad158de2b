//! l_p-norm multiple kernel learning by alternating optimization.
//!
//! Training alternates two exact block steps: (i) with kernel weights `d`
//! fixed, train an SVM on the combined kernel `K_d = Σ dₘ K⁽ᵐ⁾`; (ii) with
//! the implied per-kernel functions fixed, update `d` in closed form from
//! the margin norms `ηₘ = dₘ² αᵀYK⁽ᵐ⁾Yα = ‖ωₘ‖²`:
//!
//! ```text
//! dₘ = ηₘ^((2−p)/2) / (Σₖ ηₖ^(p/2))^((2−p)/p)
//! ```
//!
//! which minimizes Σₘ ηₘ/dₘ subject to Σₘ dₘ^(p/(2−p)) ≤ 1 and keeps the
//! constraint active exactly. Both steps decrease the joint regularized
//! objective, so the iteration is monotone; convergence is declared when
//! the objective's relative change drops below the tolerance.
//!
//! Special values of p: at p = 1 the same formula applies (sparse weights,
//! weak kernels driven toward 0, kept positive by a relative floor); p = 2
//! degenerates to uniform weights; for p > 2 the update equalizes, giving
//! weak kernels relatively more weight.

use crate::error::{Error, Result};
use crate::kernel::KernelMatrix;
use crate::lfp::TaskLabel;
use crate::svm::{argmax_class, solve_svm_dual, SvmModel, SvmParams};
use ndarray::Array2;
use serde::{Deserialize, Serialize};

/// One named kernel source: which feature view it reads and its family.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BankEntry {
    pub view: String,
    pub spec: crate::kernel::KernelSpec,
}

/// MKL training settings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MklConfig {
    /// Norm parameter p ≥ 1 (values above 32 are rejected as numerically
    /// meaningless for the weight update).
    pub p: f64,
    /// SVM box penalty C.
    pub c: f64,
    /// Stop when the objective's relative change falls below this.
    pub tolerance: f64,
    /// Outer (alternating) iteration cap.
    pub max_outer: usize,
    /// Kernel bank description; when empty, callers that build kernels from
    /// data use one RBF kernel per hemisphere view.
    pub bank: Vec<BankEntry>,
}

impl Default for MklConfig {
    fn default() -> Self {
        Self {
            p: 1.8,
            c: 1.0,
            tolerance: 1e-6,
            max_outer: 200,
            bank: Vec::new(),
        }
    }
}

impl MklConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.p >= 1.0 && self.p.is_finite() && self.p <= 32.0) {
            return Err(Error::InvalidParams(format!(
                "p must lie in [1, 32], got {}",
                self.p
            )));
        }
        if !(self.c > 0.0 && self.c.is_finite()) {
            return Err(Error::InvalidParams(format!(
                "penalty C must be positive, got {}",
                self.c
            )));
        }
        if !(self.tolerance > 0.0) {
            return Err(Error::InvalidParams("tolerance must be positive".into()));
        }
        if self.max_outer == 0 {
            return Err(Error::InvalidParams("max_outer must be ≥ 1".into()));
        }
        Ok(())
    }

    fn inner_svm_params(&self) -> SvmParams {
        // The monotonicity guarantee needs near-exact inner solves; the
        // solver stops at its floating-point floor if these are unreachable.
        SvmParams {
            c: self.c,
            kkt_tol: 1e-8,
            gap_tol: 1e-12,
            max_pair_updates: 10_000_000,
        }
    }
}

/// One outer iteration of the alternating optimization.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MklIteration {
    /// Regularized objective ½Σₘηₘ/dₘ + CΣξ at this iteration's (α, d).
    pub objective: f64,
    /// Weights used for this iteration's combined kernel.
    pub d: Vec<f64>,
}

/// A trained binary MKL model.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MklModel {
    /// Kernel weights, one per bank member (0 for excluded kernels).
    pub d: Vec<f64>,
    /// Inner SVM trained on the final combined kernel.
    pub svm: SvmModel,
    pub p: f64,
    pub penalty: f64,
    /// Final value of the regularized objective.
    pub objective: f64,
    pub outer_iterations: usize,
    /// Objective and weights per outer iteration.
    pub trace: Vec<MklIteration>,
    /// Bank indices of numerically zero kernels forced to d = 0.
    pub excluded: Vec<usize>,
}

impl MklModel {
    /// Decision value from per-kernel test rows (`rows[m][i] = kₘ(xᵢ, x)`).
    pub fn decision(&self, rows: &[Vec<f64>]) -> Result<f64> {
        if rows.len() != self.d.len() {
            return Err(Error::BankMismatch(format!(
                "model combines {} kernels but {} test rows were given",
                self.d.len(),
                rows.len()
            )));
        }
        let n = self.svm.alpha.len();
        let mut combined = vec![0.0; n];
        for (m, row) in rows.iter().enumerate() {
            if row.len() != n {
                return Err(Error::BankMismatch(format!(
                    "test row {m} has {} entries for {n} training samples",
                    row.len()
                )));
            }
            let dm = self.d[m];
            if dm != 0.0 {
                for (c, v) in combined.iter_mut().zip(row) {
                    *c += dm * v;
                }
            }
        }
        self.svm.decision(&combined)
    }
}

/// Weighted sum of a kernel bank: `K_d = Σₘ dₘ K⁽ᵐ⁾`. PSD is preserved
/// because the weights are non-negative.
pub fn combine_kernels(bank: &[KernelMatrix], d: &[f64]) -> Result<KernelMatrix> {
    if bank.is_empty() {
        return Err(Error::InvalidParams("kernel bank is empty".into()));
    }
    if bank.len() != d.len() {
        return Err(Error::SizeMismatch(format!(
            "{} kernels but {} weights",
            bank.len(),
            d.len()
        )));
    }
    let n = bank[0].size();
    for (m, k) in bank.iter().enumerate() {
        if k.values.nrows() != n || k.values.ncols() != n {
            return Err(Error::SizeMismatch(format!(
                "kernel {m} is {}×{}, expected {n}×{n}",
                k.values.nrows(),
                k.values.ncols()
            )));
        }
    }
    for &w in d {
        if !(w >= 0.0 && w.is_finite()) {
            return Err(Error::InvalidParams(format!(
                "kernel weights must be non-negative and finite, got {w}"
            )));
        }
    }
    let mut values = Array2::<f64>::zeros((n, n));
    for (k, &w) in bank.iter().zip(d) {
        if w != 0.0 {
            values.scaled_add(w, &k.values);
        }
    }
    Ok(KernelMatrix {
        values,
        spec: bank[0].spec,
        view: "combined".to_string(),
    })
}

/// Closed-form weight update from margin norms, restricted to `active`
/// indices. Keeps Σ dₘ^(p/(2−p)) = 1 exactly for p ≠ 2; returns uniform
/// weights at p = 2.
fn update_weights(eta: &[f64], active: &[usize], p: f64, d: &mut [f64]) {
    if p == 2.0 {
        for &m in active {
            d[m] = 1.0;
        }
        return;
    }
    let eta_max = active.iter().map(|&m| eta[m]).fold(0.0f64, f64::max);
    if eta_max <= 0.0 {
        return; // no margin mass anywhere; keep current weights
    }
    // Normalizing by the largest η keeps every power in range; the common
    // factor cancels between numerator and denominator.
    let floor = 1e-12;
    let sum: f64 = active
        .iter()
        .map(|&m| (eta[m] / eta_max).max(floor).powf(p / 2.0))
        .sum();
    let norm = sum.powf((2.0 - p) / p);
    for &m in active {
        let r = (eta[m] / eta_max).max(floor);
        d[m] = r.powf((2.0 - p) / 2.0) / norm;
    }
}

/// Train a binary l_p-norm MKL model on a precomputed kernel bank.
///
/// `labels` must be ±1 with both signs present. Numerically zero kernels
/// are excluded (their weight is pinned to 0); if every kernel is zero the
/// problem is degenerate and an error is returned.
pub fn train_mkl(bank: &[KernelMatrix], labels: &[f64], config: &MklConfig) -> Result<MklModel> {
    config.validate()?;
    if bank.is_empty() {
        return Err(Error::InvalidParams("kernel bank is empty".into()));
    }
    if !config.bank.is_empty() && config.bank.len() != bank.len() {
        return Err(Error::BankMismatch(format!(
            "config names {} kernels but {} matrices were given",
            config.bank.len(),
            bank.len()
        )));
    }
    let n = labels.len();
    let m_total = bank.len();
    for (m, k) in bank.iter().enumerate() {
        if k.values.nrows() != n || k.values.ncols() != n {
            return Err(Error::SizeMismatch(format!(
                "kernel {m} is {}×{} for {n} labels",
                k.values.nrows(),
                k.values.ncols()
            )));
        }
    }

    // Exclude numerically zero kernels.
    let frob: Vec<f64> = bank
        .iter()
        .map(|k| k.values.iter().map(|v| v * v).sum::<f64>().sqrt())
        .collect();
    let frob_max = frob.iter().fold(0.0f64, |a, &b| a.max(b));
    if frob_max <= 0.0 {
        return Err(Error::DegenerateKernel { index: 0 });
    }
    let active: Vec<usize> = (0..m_total)
        .filter(|&m| frob[m] > 1e-12 * frob_max)
        .collect();
    let excluded: Vec<usize> = (0..m_total).filter(|m| !active.contains(m)).collect();

    // Uniform feasible start: Σ dₘ^(p/(2−p)) = 1 holds with equality.
    let p = config.p;
    let m_active = active.len() as f64;
    let d0 = if p == 2.0 {
        1.0
    } else {
        m_active.powf(-(2.0 - p) / p)
    };
    let mut d = vec![0.0; m_total];
    for &m in &active {
        d[m] = d0;
    }

    let inner_params = config.inner_svm_params();
    let mut trace: Vec<MklIteration> = Vec::new();
    let mut svm: Option<SvmModel> = None;
    let mut converged = false;

    for _ in 0..config.max_outer {
        let combined = combine_kernels(bank, &d)?;
        let model = solve_svm_dual(&combined.values, labels, &inner_params)?;

        // Margin coefficients w_i = αᵢ yᵢ over support vectors only.
        let mut w = vec![0.0; n];
        for &i in &model.support {
            w[i] = model.alpha[i] * labels[i];
        }
        let mut eta = vec![0.0; m_total];
        for &m in &active {
            let k = &bank[m].values;
            let mut s = 0.0;
            for &i in &model.support {
                let wi = w[i];
                let mut row = 0.0;
                for &j in &model.support {
                    row += k[[i, j]] * w[j];
                }
                s += wi * row;
            }
            eta[m] = (d[m] * d[m] * s).max(0.0);
        }

        // The regularized objective ½Σηₘ/dₘ + CΣξ equals the inner SVM's
        // primal value, since Σηₘ/dₘ = Σdₘ·(αᵀYK⁽ᵐ⁾Yα) = αᵀYK_dYα.
        let quad: f64 = active
            .iter()
            .map(|&m| if d[m] > 0.0 { eta[m] / d[m] } else { 0.0 })
            .sum();
        let objective = 0.5 * quad + config.c * model.slack_sum;
        trace.push(MklIteration {
            objective,
            d: d.clone(),
        });
        svm = Some(model);

        if trace.len() >= 2 {
            let prev = trace[trace.len() - 2].objective;
            if (prev - objective).abs() <= config.tolerance * objective.abs().max(1.0) {
                converged = true;
                break;
            }
        }
        update_weights(&eta, &active, p, &mut d);
    }

    let svm = svm.expect("max_outer ≥ 1 guarantees at least one inner solve");
    let last = trace.last().expect("trace has one entry per iteration");
    if !converged {
        let gap = if trace.len() >= 2 {
            let prev = trace[trace.len() - 2].objective;
            (prev - last.objective).abs() / last.objective.abs().max(1.0)
        } else {
            f64::INFINITY
        };
        return Err(Error::NonConvergence {
            solver: "mkl",
            iterations: trace.len() as u64,
            objective: last.objective,
            gap,
        });
    }
    Ok(MklModel {
        d: last.d.clone(),
        objective: last.objective,
        outer_iterations: trace.len(),
        p,
        penalty: config.c,
        trace,
        svm,
        excluded,
    })
}

/// One-vs-rest MKL ensemble; each binary problem learns its own weights.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MklMulticlass {
    pub classes: Vec<TaskLabel>,
    pub models: Vec<MklModel>,
}

pub fn train_mkl_multiclass(
    bank: &[KernelMatrix],
    labels: &[TaskLabel],
    config: &MklConfig,
) -> Result<MklMulticlass> {
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
    let mut models = Vec::with_capacity(classes.len());
    for &cls in &classes {
        let y: Vec<f64> = labels
            .iter()
            .map(|&l| if l == cls { 1.0 } else { -1.0 })
            .collect();
        models.push(train_mkl(bank, &y, config)?);
    }
    Ok(MklMulticlass { classes, models })
}

impl MklMulticlass {
    /// Predict from per-kernel test rows shared by all binary models.
    pub fn predict(&self, rows: &[Vec<f64>]) -> Result<TaskLabel> {
        let values: Vec<f64> = self
            .models
            .iter()
            .map(|m| m.decision(rows))
            .collect::<Result<_>>()?;
        Ok(argmax_class(&self.classes, &values))
    }
}
