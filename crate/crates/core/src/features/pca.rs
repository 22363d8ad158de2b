//! Principal component analysis fitted on training folds only.
//!
//! Two equivalent fitting routes are chosen by shape: the covariance route
//! diagonalizes the D×D training covariance when the dimension is modest,
//! and the snapshot route diagonalizes the N×N centered Gram matrix when
//! D ≫ N (full-rate spectrogram features easily reach 10⁵–10⁶ dimensions,
//! where the covariance never fits in memory but at most N−1 components
//! carry variance). [`PcaGramProjector`] additionally lets the experiment
//! harness reuse one precomputed all-samples Gram matrix across folds
//! without ever materializing directions in feature space.

use crate::error::{Error, Result};
use crate::features::FeatureView;
use crate::linalg::symmetric_eigen;
use ndarray::Array2;

/// Fitted PCA basis with explicit feature-space directions.
#[derive(Debug, Clone, serde::Serialize, serde::Deserialize)]
pub struct PcaBasis {
    pub mean: Vec<f64>,
    /// One unit-norm column per retained component, most variance first.
    pub directions: Array2<f64>,
    /// Retained eigenvalues of the training covariance, non-increasing.
    pub eigenvalues: Vec<f64>,
    /// Retained variance as a fraction of the total (≥ the `retain` target).
    pub retained_fraction: f64,
    pub total_variance: f64,
    /// Sum of discarded eigenvalues = expected reconstruction error.
    pub discarded_variance: f64,
    /// Deterministic fingerprint stamped onto projected views.
    pub id: String,
}

impl PcaBasis {
    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    pub fn n_components(&self) -> usize {
        self.eigenvalues.len()
    }
}

fn center(train: &[FeatureView]) -> Result<(Array2<f64>, Vec<f64>)> {
    if train.len() < 2 {
        return Err(Error::InvalidParams(format!(
            "PCA needs at least 2 training vectors, got {}",
            train.len()
        )));
    }
    let dim = train[0].values.len();
    for v in train {
        if v.values.len() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                got: v.values.len(),
            });
        }
    }
    let n = train.len();
    let mut mean = vec![0.0; dim];
    for v in train {
        for (m, x) in mean.iter_mut().zip(&v.values) {
            *m += x;
        }
    }
    for m in mean.iter_mut() {
        *m /= n as f64;
    }
    let mut xc = Array2::<f64>::zeros((n, dim));
    for (i, v) in train.iter().enumerate() {
        for (j, x) in v.values.iter().enumerate() {
            xc[[i, j]] = x - mean[j];
        }
    }
    Ok((xc, mean))
}

/// Smallest component count whose eigenvalue sum reaches `retain · total`,
/// never counting zero-variance directions.
fn retained_count(eigenvalues: &[f64], retain: f64, total: f64) -> usize {
    let floor = 1e-12 * eigenvalues.first().copied().unwrap_or(0.0).max(0.0);
    let target = retain * total * (1.0 - 1e-12);
    let mut acc = 0.0;
    let mut k = 0;
    for &ev in eigenvalues {
        if acc >= target || ev <= floor {
            break;
        }
        acc += ev;
        k += 1;
    }
    k.max(1)
}

fn fingerprint(mean: &[f64], eigenvalues: &[f64]) -> String {
    // FNV-1a over the raw bit patterns: stable, order-sensitive, cheap.
    let mut h: u64 = 0xcbf29ce484222325;
    let mut eat = |bits: u64| {
        for b in bits.to_le_bytes() {
            h ^= b as u64;
            h = h.wrapping_mul(0x100000001b3);
        }
    };
    eat(mean.len() as u64);
    for v in mean.iter().chain(eigenvalues) {
        eat(v.to_bits());
    }
    format!("pca-{}d-{}c-{:016x}", mean.len(), eigenvalues.len(), h)
}

/// Flip each direction so its largest-magnitude entry is positive: makes the
/// decomposition deterministic and comparable across routes.
fn canonicalize_signs(directions: &mut Array2<f64>) {
    for mut col in directions.columns_mut() {
        let mut best = 0;
        for (i, v) in col.iter().enumerate() {
            if v.abs() > col[best].abs() {
                best = i;
            }
        }
        if col[best] < 0.0 {
            col.mapv_inplace(|v| -v);
        }
    }
}

/// Fit a PCA basis on training vectors, keeping the smallest number of top
/// eigen-directions whose eigenvalue sum reaches `retain` of the total.
pub fn fit_pca(train: &[FeatureView], retain: f64) -> Result<PcaBasis> {
    if !(0.0..=1.0).contains(&retain) {
        return Err(Error::InvalidParams(format!(
            "retain fraction must lie in [0, 1], got {retain}"
        )));
    }
    let (xc, mean) = center(train)?;
    let n = xc.nrows();
    let dim = xc.ncols();
    let scale = 1.0 / (n as f64 - 1.0);

    let (eigenvalues, mut directions): (Vec<f64>, Array2<f64>) = if dim <= n {
        let cov = xc.t().dot(&xc) * scale;
        let e = symmetric_eigen(&cov);
        (e.values, e.vectors)
    } else {
        // Snapshot route: X_c X_cᵀ shares its nonzero spectrum with the
        // covariance; directions are recovered as v = X_cᵀ u / √((n−1)λ).
        let gram = xc.dot(&xc.t()) * scale;
        let e = symmetric_eigen(&gram);
        let floor = 1e-12 * e.values.first().copied().unwrap_or(0.0).max(0.0);
        let rank = e.values.iter().take_while(|&&l| l > floor).count();
        let mut dirs = Array2::<f64>::zeros((dim, rank));
        for j in 0..rank {
            let norm = ((n as f64 - 1.0) * e.values[j]).sqrt();
            for t in 0..n {
                let u = e.vectors[[t, j]];
                if u != 0.0 {
                    for d in 0..dim {
                        dirs[[d, j]] += xc[[t, d]] * u;
                    }
                }
            }
            for d in 0..dim {
                dirs[[d, j]] /= norm;
            }
        }
        (e.values[..rank].to_vec(), dirs)
    };

    let eigenvalues: Vec<f64> = eigenvalues.into_iter().map(|l| l.max(0.0)).collect();
    let total: f64 = if dim <= n {
        eigenvalues.iter().sum()
    } else {
        // trace of the covariance, also = trace of the snapshot Gram
        xc.iter().map(|v| v * v).sum::<f64>() * scale
    };
    if total <= 0.0 {
        return Err(Error::DegenerateData);
    }
    let k = retained_count(&eigenvalues, retain, total);
    let retained: Vec<f64> = eigenvalues[..k].to_vec();
    let retained_sum: f64 = retained.iter().sum();
    directions = directions.slice(ndarray::s![.., ..k]).to_owned();
    canonicalize_signs(&mut directions);

    Ok(PcaBasis {
        id: fingerprint(&mean, &retained),
        mean,
        directions,
        retained_fraction: retained_sum / total,
        total_variance: total,
        discarded_variance: (total - retained_sum).max(0.0),
        eigenvalues: retained,
    })
}

/// Express a view in basis coordinates: coords = Vᵀ(x − mean).
pub fn project(view: &FeatureView, basis: &PcaBasis) -> Result<FeatureView> {
    if view.values.len() != basis.dim() {
        return Err(Error::DimensionMismatch {
            expected: basis.dim(),
            got: view.values.len(),
        });
    }
    let k = basis.n_components();
    let mut coords = vec![0.0; k];
    for j in 0..k {
        let mut acc = 0.0;
        for (i, x) in view.values.iter().enumerate() {
            acc += (x - basis.mean[i]) * basis.directions[[i, j]];
        }
        coords[j] = acc;
    }
    Ok(FeatureView {
        values: coords,
        label: view.label,
        hemisphere: view.hemisphere,
        rate: view.rate,
        basis_id: Some(basis.id.clone()),
    })
}

/// Map basis coordinates back to feature space: x = mean + V·coords.
pub fn reconstruct(coords: &FeatureView, basis: &PcaBasis) -> Result<FeatureView> {
    if coords.values.len() != basis.n_components() {
        return Err(Error::DimensionMismatch {
            expected: basis.n_components(),
            got: coords.values.len(),
        });
    }
    let mut values = basis.mean.clone();
    for (j, c) in coords.values.iter().enumerate() {
        for i in 0..values.len() {
            values[i] += basis.directions[[i, j]] * c;
        }
    }
    Ok(FeatureView {
        values,
        label: coords.label,
        hemisphere: coords.hemisphere,
        rate: coords.rate,
        basis_id: None,
    })
}

/// PCA fitted from a precomputed raw (uncentered) Gram matrix.
///
/// Holds everything needed to project *any* sample of the Gram's index set
/// onto components fitted from the `train_idx` subset, without feature-space
/// arithmetic. Projections agree with [`fit_pca`] + [`project`] up to the
/// sign of each component (which no downstream kernel can observe).
#[derive(Debug, Clone)]
pub struct PcaGramProjector {
    train_idx: Vec<usize>,
    /// c[t][j] = u_tj / √((n−1)·λ_j)
    coeffs: Array2<f64>,
    /// a_t = (1/n) Σ_{s∈train} G[s, t] for t ∈ train
    col_means: Vec<f64>,
    grand_mean: f64,
    pub eigenvalues: Vec<f64>,
    pub retained_fraction: f64,
    pub total_variance: f64,
    pub discarded_variance: f64,
}

/// Fit PCA from `gram[i][j] = xᵢ·xⱼ` using only the `train_idx` rows.
pub fn fit_pca_from_gram(
    gram: &Array2<f64>,
    train_idx: &[usize],
    retain: f64,
) -> Result<PcaGramProjector> {
    if gram.nrows() != gram.ncols() {
        return Err(Error::SizeMismatch(format!(
            "gram must be square, got {}×{}",
            gram.nrows(),
            gram.ncols()
        )));
    }
    let n = train_idx.len();
    if n < 2 {
        return Err(Error::InvalidParams(format!(
            "PCA needs at least 2 training vectors, got {n}"
        )));
    }
    if let Some(&i) = train_idx.iter().find(|&&i| i >= gram.nrows()) {
        return Err(Error::DimensionMismatch {
            expected: gram.nrows(),
            got: i,
        });
    }
    let nf = n as f64;
    let mut col_means = vec![0.0; n];
    for (t, &it) in train_idx.iter().enumerate() {
        col_means[t] = train_idx.iter().map(|&s| gram[[s, it]]).sum::<f64>() / nf;
    }
    let grand_mean = col_means.iter().sum::<f64>() / nf;

    let scale = 1.0 / (nf - 1.0);
    let mut centered = Array2::<f64>::zeros((n, n));
    for (s, &is) in train_idx.iter().enumerate() {
        for (t, &it) in train_idx.iter().enumerate() {
            centered[[s, t]] =
                (gram[[is, it]] - col_means[s] - col_means[t] + grand_mean) * scale;
        }
    }
    let e = symmetric_eigen(&centered);
    let eigenvalues: Vec<f64> = e.values.iter().map(|&l| l.max(0.0)).collect();
    let total: f64 = (0..n).map(|i| centered[[i, i]]).sum();
    if total <= 0.0 {
        return Err(Error::DegenerateData);
    }
    let k = retained_count(&eigenvalues, retain, total);
    let retained: Vec<f64> = eigenvalues[..k].to_vec();
    let retained_sum: f64 = retained.iter().sum();
    let mut coeffs = Array2::<f64>::zeros((n, k));
    for j in 0..k {
        let norm = ((nf - 1.0) * retained[j]).sqrt();
        for t in 0..n {
            coeffs[[t, j]] = e.vectors[[t, j]] / norm;
        }
    }
    Ok(PcaGramProjector {
        train_idx: train_idx.to_vec(),
        coeffs,
        col_means,
        grand_mean,
        retained_fraction: retained_sum / total,
        total_variance: total,
        discarded_variance: (total - retained_sum).max(0.0),
        eigenvalues: retained,
    })
}

impl PcaGramProjector {
    pub fn n_components(&self) -> usize {
        self.eigenvalues.len()
    }

    /// Project sample `i` (any index of the Gram) onto the fitted components.
    pub fn project_row(&self, gram: &Array2<f64>, i: usize) -> Vec<f64> {
        let n = self.train_idx.len();
        let nf = n as f64;
        let row_mean =
            self.train_idx.iter().map(|&t| gram[[i, t]]).sum::<f64>() / nf;
        let k = self.n_components();
        let mut coords = vec![0.0; k];
        for (t, &it) in self.train_idx.iter().enumerate() {
            let centered = gram[[i, it]] - row_mean - self.col_means[t] + self.grand_mean;
            for (j, c) in coords.iter_mut().enumerate() {
                *c += centered * self.coeffs[[t, j]];
            }
        }
        coords
    }
}
