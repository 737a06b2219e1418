//! Monte Carlo reference for free convolution: eigenvalues of sums of
//! independently rotated diagonal matrices.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::measure::{Measure, MeasureError};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum OracleError {
    #[error("matrix size must be at least 16, got {0}")]
    SmallMatrix(usize),
    #[error("at least one trial is required")]
    NoTrials,
    #[error("no measures given")]
    Empty,
    #[error("Jacobi eigensolver did not converge in trial {trial} (off-diagonal norm {off:e})")]
    Eigen { trial: usize, off: f64 },
    #[error(transparent)]
    Measure(#[from] MeasureError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EnsembleSpec {
    pub matrix_size: usize,
    pub trials: usize,
    pub seed: u64,
}

impl Default for EnsembleSpec {
    fn default() -> Self {
        Self { matrix_size: 500, trials: 20, seed: 0 }
    }
}

impl EnsembleSpec {
    pub fn validate(&self) -> Result<(), OracleError> {
        if self.matrix_size < 16 {
            return Err(OracleError::SmallMatrix(self.matrix_size));
        }
        if self.trials == 0 {
            return Err(OracleError::NoTrials);
        }
        Ok(())
    }
}

/// Generalized quantiles of `mu` at `(i - 1/2)/n`.
pub fn spectral_sample(mu: &Measure, n: usize) -> Vec<f64> {
    (0..n).map(|i| mu.quantile((i as f64 + 0.5) / n as f64)).collect()
}

/// Haar orthogonal `n×n` matrix, row-major: Householder QR of a Gaussian matrix
/// with the columns of `Q` multiplied by the signs of `diag(R)`.
pub fn haar_orthogonal(n: usize, rng: &mut ChaCha8Rng) -> Vec<f64> {
    // column-major working copy
    let mut a: Vec<f64> = (0..n * n).map(|_| StandardNormal.sample(rng)).collect();
    let mut vs: Vec<Vec<f64>> = Vec::with_capacity(n);
    let mut signs = vec![1.0; n];
    for k in 0..n {
        let col = &a[k * n + k..(k + 1) * n];
        let norm = col.iter().map(|x| x * x).sum::<f64>().sqrt();
        let alpha = if col[0] > 0.0 { -norm } else { norm };
        signs[k] = if alpha < 0.0 { -1.0 } else { 1.0 };
        let mut v = col.to_vec();
        v[0] -= alpha;
        let vn = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if vn > 0.0 {
            v.iter_mut().for_each(|x| *x /= vn);
        }
        for j in k..n {
            let c = &mut a[j * n + k..(j + 1) * n];
            let d = 2.0 * v.iter().zip(c.iter()).map(|(x, y)| x * y).sum::<f64>();
            c.iter_mut().zip(&v).for_each(|(y, x)| *y -= d * x);
        }
        vs.push(v);
    }
    // Q = H₀H₁⋯ applied to the identity, column-major
    let mut q = vec![0.0; n * n];
    for i in 0..n {
        q[i * n + i] = 1.0;
    }
    for k in (0..n).rev() {
        let v = &vs[k];
        for j in 0..n {
            let c = &mut q[j * n + k..(j + 1) * n];
            let d = 2.0 * v.iter().zip(c.iter()).map(|(x, y)| x * y).sum::<f64>();
            c.iter_mut().zip(v).for_each(|(y, x)| *y -= d * x);
        }
    }
    let mut out = vec![0.0; n * n];
    for j in 0..n {
        for i in 0..n {
            out[i * n + j] = q[j * n + i] * signs[j];
        }
    }
    out
}

/// Adds `Q diag(d) Qᵀ` to the row-major symmetric matrix `m`.
fn add_rotated(m: &mut [f64], q: &[f64], d: &[f64]) {
    let n = d.len();
    let mut w = vec![0.0; n];
    for i in 0..n {
        let qi = &q[i * n..(i + 1) * n];
        w.iter_mut().zip(qi).zip(d).for_each(|((w, x), y)| *w = x * y);
        for j in i..n {
            let v: f64 = w.iter().zip(&q[j * n..(j + 1) * n]).map(|(x, y)| x * y).sum();
            m[i * n + j] += v;
            if j != i {
                m[j * n + i] += v;
            }
        }
    }
}

const JACOBI_MAX_SWEEPS: usize = 60;
const JACOBI_REL_TOL: f64 = 1e-10;

fn off_norm(a: &[f64], n: usize) -> f64 {
    let mut s = 0.0;
    for i in 0..n {
        for j in 0..n {
            if i != j {
                s += a[i * n + j] * a[i * n + j];
            }
        }
    }
    s.sqrt()
}

/// Eigenvalues of a row-major symmetric matrix by cyclic Jacobi rotations,
/// sorted ascending. Fails if the off-diagonal part is not below
/// `1e-10·‖A‖_F` after the sweep cap, returning that norm.
///
/// Each rotation updates rows `p` and `q` and copies row `q` into column `q`.
/// Column `p` is only read through row `p` while `p` is the pivot, so it is
/// copied once per pivot.
pub fn symmetric_eigenvalues(mut a: Vec<f64>, n: usize) -> Result<Vec<f64>, f64> {
    assert_eq!(a.len(), n * n);
    let scale = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    let target = JACOBI_REL_TOL * scale;
    let mut off = off_norm(&a, n);
    let mut sweeps = 0;
    while off > target {
        if sweeps == JACOBI_MAX_SWEEPS {
            return Err(off);
        }
        sweeps += 1;
        for p in 0..n {
            for q in p + 1..n {
                let apq = a[p * n + q];
                let app = a[p * n + p];
                let aqq = a[q * n + q];
                if apq == 0.0 || apq.abs() < 1e-18 * (app.abs() + aqq.abs()) {
                    continue;
                }
                let theta = (aqq - app) / (2.0 * apq);
                let t = if theta == 0.0 { 1.0 } else { theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt()) };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                let (lo, hi) = a.split_at_mut(q * n);
                let rp = &mut lo[p * n..(p + 1) * n];
                let rq = &mut hi[..n];
                for (x, y) in rp.iter_mut().zip(rq.iter_mut()) {
                    let (xp, yq) = (*x, *y);
                    *x = c * xp - s * yq;
                    *y = s * xp + c * yq;
                }
                rp[p] = app - t * apq;
                rq[q] = aqq + t * apq;
                rp[q] = 0.0;
                rq[p] = 0.0;
                for k in 0..n {
                    if k != q {
                        a[k * n + q] = a[q * n + k];
                    }
                }
            }
            for k in 0..n {
                a[k * n + p] = a[p * n + k];
            }
        }
        off = off_norm(&a, n);
    }
    let mut ev: Vec<f64> = (0..n).map(|i| a[i * n + i]).collect();
    ev.sort_by(f64::total_cmp);
    Ok(ev)
}

/// Eigenvalues of `D₁ + Σ_{j≥2} Qⱼ Dⱼ Qⱼᵀ` for one trial. The first summand is
/// left unrotated: conjugating every term by the same Haar matrix does not
/// change the spectrum.
fn trial_spectrum(diags: &[Vec<f64>], n: usize, seed: u64, trial: usize) -> Result<Vec<f64>, OracleError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(trial as u64);
    let mut m = vec![0.0; n * n];
    for (i, &d) in diags[0].iter().enumerate() {
        m[i * n + i] = d;
    }
    for d in &diags[1..] {
        let q = haar_orthogonal(n, &mut rng);
        add_rotated(&mut m, &q, d);
    }
    symmetric_eigenvalues(m, n).map_err(|off| OracleError::Eigen { trial, off })
}

/// Empirical spectral distribution of the rotated sum, pooled over trials.
pub fn free_sum_esd(measures: &[Measure], spec: &EnsembleSpec) -> Result<Measure, OracleError> {
    spec.validate()?;
    if measures.is_empty() {
        return Err(OracleError::Empty);
    }
    let n = spec.matrix_size;
    let diags: Vec<Vec<f64>> = measures.iter().map(|m| spectral_sample(m, n)).collect();
    let trials: Vec<usize> = (0..spec.trials).collect();
    #[cfg(feature = "parallel")]
    let spectra: Vec<Result<Vec<f64>, OracleError>> = {
        use rayon::prelude::*;
        trials.par_iter().map(|&t| trial_spectrum(&diags, n, spec.seed, t)).collect()
    };
    #[cfg(not(feature = "parallel"))]
    let spectra: Vec<Result<Vec<f64>, OracleError>> = trials.iter().map(|&t| trial_spectrum(&diags, n, spec.seed, t)).collect();
    let mut pooled = Vec::with_capacity(n * spec.trials);
    for s in spectra {
        pooled.extend(s?);
    }
    Ok(Measure::empirical(&pooled)?)
}
