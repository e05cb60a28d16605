//! Karhunen–Loève transform: sample mean, population covariance, a
//! descending eigenbasis and the projection `K = A (y - mean)`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::image::GrayImage;
use crate::series::ThermalSeries;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KltMode {
    /// Observations are the columns of a single image.
    Column,
    /// Observations come from the frames of a time series.
    #[default]
    Temporal,
}

/// `n` observation vectors of length `m`, stored contiguously.
#[derive(Debug, Clone, PartialEq)]
pub struct ObservationSet {
    dim: usize,
    data: Vec<f64>,
    mode: KltMode,
}

impl ObservationSet {
    pub fn new(vectors: &[Vec<f64>], mode: KltMode) -> Result<Self> {
        let dim = vectors.first().map(Vec::len).unwrap_or(0);
        if vectors.is_empty() || dim == 0 {
            return Err(Error::validation("need at least one non-empty observation"));
        }
        if vectors.iter().any(|v| v.len() != dim) {
            return Err(Error::validation("observations differ in length"));
        }
        Ok(Self {
            dim,
            data: vectors.concat(),
            mode,
        })
    }

    fn from_flat(dim: usize, data: Vec<f64>, mode: KltMode) -> Self {
        debug_assert!(dim > 0 && data.len() % dim == 0 && !data.is_empty());
        Self { dim, data, mode }
    }

    /// Vector length `m`.
    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Number of observations `n`.
    pub fn count(&self) -> usize {
        self.data.len() / self.dim
    }

    pub fn mode(&self) -> KltMode {
        self.mode
    }

    pub fn vector(&self, i: usize) -> &[f64] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }

    pub fn vectors(&self) -> impl Iterator<Item = &[f64]> {
        self.data.chunks_exact(self.dim)
    }

    /// Swaps the roles of `m` and `n`: entry `j` of vector `i` becomes entry
    /// `i` of vector `j`.
    pub fn transposed(&self) -> ObservationSet {
        let (m, n) = (self.dim, self.count());
        let mut data = vec![0.0; m * n];
        for i in 0..n {
            for j in 0..m {
                data[j * n + i] = self.data[i * m + j];
            }
        }
        ObservationSet::from_flat(n, data, self.mode)
    }
}

/// Column vectors of one image: `m = height`, `n = width`.
pub fn column_observations(image: &GrayImage) -> ObservationSet {
    let (w, h) = (image.width(), image.height());
    let mut data = Vec::with_capacity(w * h);
    for c in 0..w {
        for r in 0..h {
            data.push(image.get(r, c));
        }
    }
    ObservationSet::from_flat(h, data, KltMode::Column)
}

/// One flattened frame per observation: `m = width * height`, `n = T`.
pub fn temporal_observations(frames: &[&GrayImage]) -> Result<ObservationSet> {
    let first = frames.first().ok_or_else(|| Error::validation("no frames"))?;
    if let Some(f) = frames.iter().find(|f| !f.same_shape(first)) {
        return Err(Error::validation(format!(
            "frame {}x{} does not match {}x{}",
            f.width(),
            f.height(),
            first.width(),
            first.height()
        )));
    }
    let data = frames.iter().flat_map(|f| f.pixels().iter().copied()).collect();
    Ok(ObservationSet::from_flat(first.len(), data, KltMode::Temporal))
}

pub fn series_observations(series: &ThermalSeries) -> Result<ObservationSet> {
    temporal_observations(&series.images().collect::<Vec<_>>())
}

/// Mean, descending eigenvalues and eigenvector rows of the covariance.
#[derive(Debug, Clone, PartialEq)]
pub struct KltBasis {
    pub mean: Vec<f64>,
    pub eigenvalues: Vec<f64>,
    /// Row-major `m x m`; row `i` is eigenvector `e_i`.
    pub eigenvectors: Vec<f64>,
    /// Row-major `m x m` population covariance.
    pub covariance: Vec<f64>,
}

impl KltBasis {
    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    pub fn row(&self, i: usize) -> &[f64] {
        let m = self.dim();
        &self.eigenvectors[i * m..(i + 1) * m]
    }
}

pub fn mean_vector(obs: &ObservationSet) -> Vec<f64> {
    let m = obs.dim();
    let mut mean = vec![0.0; m];
    for v in obs.vectors() {
        for (acc, x) in mean.iter_mut().zip(v) {
            *acc += x;
        }
    }
    let n = obs.count() as f64;
    mean.iter_mut().for_each(|x| *x /= n);
    mean
}

/// Population covariance (divisor `n`) about the shared mean.
pub fn covariance(obs: &ObservationSet, mean: &[f64]) -> Vec<f64> {
    let m = obs.dim();
    let chunk = 1024;
    let partials: Vec<Vec<f64>> = obs
        .data
        .par_chunks(chunk * m)
        .map(|block| {
            let mut acc = vec![0.0; m * m];
            let mut d = vec![0.0; m];
            for v in block.chunks_exact(m) {
                for k in 0..m {
                    d[k] = v[k] - mean[k];
                }
                for i in 0..m {
                    let di = d[i];
                    let row = &mut acc[i * m..];
                    for j in i..m {
                        row[j] += di * d[j];
                    }
                }
            }
            acc
        })
        .collect();
    let mut cov = vec![0.0; m * m];
    for p in &partials {
        for (a, b) in cov.iter_mut().zip(p) {
            *a += b;
        }
    }
    let n = obs.count() as f64;
    for i in 0..m {
        for j in i..m {
            let v = cov[i * m + j] / n;
            cov[i * m + j] = v;
            cov[j * m + i] = v;
        }
    }
    cov
}

/// Eigen-decomposition of a symmetric matrix by cyclic Jacobi rotations.
///
/// Returns unsorted `(eigenvalues, vectors)` with eigenvector `k` stored in
/// column `k` of the row-major `vectors`.
pub fn jacobi_eigen(matrix: &[f64], m: usize) -> (Vec<f64>, Vec<f64>) {
    const MAX_SWEEPS: usize = 100;
    let mut a = matrix.to_vec();
    let mut v = vec![0.0; m * m];
    for i in 0..m {
        v[i * m + i] = 1.0;
    }
    let trace: f64 = (0..m).map(|i| a[i * m + i].abs()).sum();
    let tol = 1e-12 * trace;

    for _ in 0..MAX_SWEEPS {
        let max_off = (0..m)
            .flat_map(|p| (p + 1..m).map(move |q| (p, q)))
            .map(|(p, q)| a[p * m + q].abs())
            .fold(0.0, f64::max);
        if max_off <= tol || max_off == 0.0 {
            break;
        }
        for p in 0..m {
            for q in p + 1..m {
                let apq = a[p * m + q];
                if apq == 0.0 {
                    continue;
                }
                let (app, aqq) = (a[p * m + p], a[q * m + q]);
                let theta = (aqq - app) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;

                for k in 0..m {
                    let (akp, akq) = (a[k * m + p], a[k * m + q]);
                    a[k * m + p] = c * akp - s * akq;
                    a[k * m + q] = s * akp + c * akq;
                }
                for k in 0..m {
                    let (apk, aqk) = (a[p * m + k], a[q * m + k]);
                    a[p * m + k] = c * apk - s * aqk;
                    a[q * m + k] = s * apk + c * aqk;
                }
                a[p * m + q] = 0.0;
                a[q * m + p] = 0.0;
                for k in 0..m {
                    let (vkp, vkq) = (v[k * m + p], v[k * m + q]);
                    v[k * m + p] = c * vkp - s * vkq;
                    v[k * m + q] = s * vkp + c * vkq;
                }
            }
        }
    }
    ((0..m).map(|i| a[i * m + i]).collect(), v)
}

/// Index of the largest-magnitude entry, first on ties.
fn dominant_index(v: &[f64]) -> usize {
    let mut best = 0;
    for (i, x) in v.iter().enumerate() {
        if x.abs() > v[best].abs() {
            best = i;
        }
    }
    best
}

pub fn compute_basis(obs: &ObservationSet) -> KltBasis {
    let m = obs.dim();
    let mean = mean_vector(obs);
    let cov = covariance(obs, &mean);
    let (values, vectors) = jacobi_eigen(&cov, m);

    let mut pairs: Vec<(f64, Vec<f64>, usize)> = (0..m)
        .map(|k| {
            let mut e: Vec<f64> = (0..m).map(|i| vectors[i * m + k]).collect();
            let idx = dominant_index(&e);
            if e[idx] < 0.0 {
                e.iter_mut().for_each(|x| *x = -*x);
            }
            (values[k], e, idx)
        })
        .collect();
    pairs.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.2.cmp(&b.2)));

    // Runs of numerically equal eigenvectors are ordered by dominant index.
    let trace: f64 = values.iter().map(|v| v.abs()).sum();
    let tie = 1e-12 * trace.max(f64::MIN_POSITIVE);
    let mut start = 0;
    while start < pairs.len() {
        let mut end = start + 1;
        while end < pairs.len() && pairs[end - 1].0 - pairs[end].0 <= tie {
            end += 1;
        }
        // values inside a run differ by at most `tie`; keep them descending
        let run_values: Vec<f64> = pairs[start..end].iter().map(|p| p.0).collect();
        pairs[start..end].sort_by_key(|p| p.2);
        for (p, v) in pairs[start..end].iter_mut().zip(run_values) {
            p.0 = v;
        }
        start = end;
    }

    KltBasis {
        mean,
        eigenvalues: pairs.iter().map(|p| p.0).collect(),
        eigenvectors: pairs.into_iter().flat_map(|p| p.1).collect(),
        covariance: cov,
    }
}

/// Projects every observation: `k_i = A (y_i - mean)`.
pub fn transform(obs: &ObservationSet, basis: &KltBasis) -> Result<Vec<Vec<f64>>> {
    let m = obs.dim();
    if basis.dim() != m {
        return Err(Error::validation(format!(
            "basis dimension {} does not match observation length {m}",
            basis.dim()
        )));
    }
    Ok(obs
        .vectors()
        .map(|y| {
            let d: Vec<f64> = y.iter().zip(&basis.mean).map(|(a, b)| a - b).collect();
            (0..m).map(|i| dot(basis.row(i), &d)).collect()
        })
        .collect())
}

/// `y = A^T k + mean`.
pub fn inverse_transform(k: &[f64], basis: &KltBasis) -> Vec<f64> {
    let m = basis.dim();
    (0..m)
        .map(|j| basis.mean[j] + (0..m).map(|i| basis.eigenvectors[i * m + j] * k[i]).sum::<f64>())
        .collect()
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Fuses a series into one real-valued image.
///
/// Temporal mode scores each pixel's temporal profile on the leading
/// principal direction of the `T x T` covariance. Column mode averages the
/// frames and applies the transform to the image columns.
pub fn fuse_series(series: &ThermalSeries, mode: KltMode) -> Result<GrayImage> {
    if series.is_empty() {
        return Err(Error::validation("empty series"));
    }
    let (w, h) = (series.width(), series.height());
    match mode {
        KltMode::Temporal => {
            let profiles = series_observations(series)?.transposed();
            let basis = compute_basis(&profiles);
            let lead = basis.row(0);
            let scores: Vec<f64> = profiles
                .data
                .par_chunks(profiles.dim())
                .map(|y| y.iter().zip(&basis.mean).zip(lead).map(|((a, b), e)| (a - b) * e).sum())
                .collect();
            GrayImage::new(w, h, scores)
        }
        KltMode::Column => {
            let t = series.len() as f64;
            let mut avg = vec![0.0; w * h];
            for img in series.images() {
                for (a, p) in avg.iter_mut().zip(img.pixels()) {
                    *a += p / t;
                }
            }
            let image = GrayImage::new(w, h, avg)?;
            let obs = column_observations(&image);
            let basis = compute_basis(&obs);
            let k = transform(&obs, &basis)?;
            GrayImage::from_fn(w, h, |r, c| k[c][r])
        }
    }
}
