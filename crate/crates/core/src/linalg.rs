//! Dense symmetric eigendecomposition and the matrix trigonometric /
//! exponential functions that every closed form in the toolkit is built from.
//!
//! Conventions fixed repo-wide: matrices are row-major `ndarray::Array2<f64>`,
//! the matrix norm is Frobenius, eigenvalues are sorted descending and each
//! eigenvector's first nonzero entry is made positive so downstream
//! coefficient tables are reproducible.

use ndarray::Array2;

use crate::error::{CoreError, Result};

/// Relative symmetry tolerance for [`SymMatrix`]: max |m_ij - m_ji| <= RTOL * max |m_ij|.
pub const SYMMETRY_RTOL: f64 = 1e-12;
/// Nonsingularity gate: min |lambda| must exceed this times max |lambda|.
pub const NONSINGULAR_GATE: f64 = 1e-10;
/// Two eigenvalues belong to the same |lambda| group iff their absolute values
/// differ by at most this times max |lambda|.
pub const EIGEN_EQ_RTOL: f64 = 1e-9;
/// Hard cap on cyclic Jacobi sweeps.
pub const JACOBI_MAX_SWEEPS: usize = 100;

/// Frobenius norm.
pub fn frobenius(m: &Array2<f64>) -> f64 {
    m.iter().map(|v| v * v).sum::<f64>().sqrt()
}

/// Identity matrix of size n.
pub fn identity(n: usize) -> Array2<f64> {
    Array2::eye(n)
}

/// A validated real symmetric matrix.
#[derive(Debug, Clone)]
pub struct SymMatrix {
    data: Array2<f64>,
}

impl SymMatrix {
    /// Validates squareness and symmetry (max |m_ij - m_ji| <= 1e-12 * max |m_ij|).
    pub fn new(data: Array2<f64>) -> Result<Self> {
        let (r, c) = data.dim();
        if r != c || r == 0 {
            return Err(CoreError::NotSquare { rows: r, cols: c });
        }
        let scale = data.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let tolerance = SYMMETRY_RTOL * scale;
        let mut deviation = 0.0f64;
        for i in 0..r {
            for j in (i + 1)..r {
                deviation = deviation.max((data[[i, j]] - data[[j, i]]).abs());
            }
        }
        if deviation > tolerance {
            return Err(CoreError::NotSymmetric {
                deviation,
                tolerance,
            });
        }
        Ok(Self { data })
    }

    /// Builds from nested rows (row-major), validating shape and symmetry.
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let n = rows.len();
        if n == 0 || rows.iter().any(|r| r.len() != n) {
            return Err(CoreError::InvalidDimension(
                "symmetric matrix rows must form a nonempty square".into(),
            ));
        }
        let flat: Vec<f64> = rows.iter().flatten().copied().collect();
        let data = Array2::from_shape_vec((n, n), flat)
            .map_err(|e| CoreError::InvalidDimension(e.to_string()))?;
        Self::new(data)
    }

    pub fn dim(&self) -> usize {
        self.data.nrows()
    }

    pub fn as_array(&self) -> &Array2<f64> {
        &self.data
    }
}

/// Orthogonal factorization Lambda = P diag(lambda) P^T with eigenvalues
/// sorted descending and a fixed eigenvector sign convention.
#[derive(Debug, Clone)]
pub struct SpectralDecomposition {
    p: Array2<f64>,
    eigenvalues: Vec<f64>,
}

impl SpectralDecomposition {
    pub fn dim(&self) -> usize {
        self.eigenvalues.len()
    }

    /// The orthogonal eigenvector matrix (eigenvectors are columns).
    pub fn p(&self) -> &Array2<f64> {
        &self.p
    }

    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    pub fn max_abs_eigenvalue(&self) -> f64 {
        self.eigenvalues.iter().fold(0.0f64, |m, v| m.max(v.abs()))
    }

    pub fn min_abs_eigenvalue(&self) -> f64 {
        self.eigenvalues
            .iter()
            .fold(f64::INFINITY, |m, v| m.min(v.abs()))
    }

    /// Nonsingularity gate: min |lambda| > 1e-10 * max |lambda|.
    pub fn is_nonsingular(&self) -> bool {
        self.min_abs_eigenvalue() > NONSINGULAR_GATE * self.max_abs_eigenvalue()
    }

    pub fn require_nonsingular(&self) -> Result<()> {
        if self.is_nonsingular() {
            Ok(())
        } else {
            Err(CoreError::SingularLambda {
                min_abs: self.min_abs_eigenvalue(),
                gate: NONSINGULAR_GATE * self.max_abs_eigenvalue(),
            })
        }
    }

    /// P diag(f(lambda_k)) P^T.
    pub fn apply_fn(&self, f: impl Fn(f64) -> f64) -> Array2<f64> {
        let d = self.dim();
        let mut scaled = Array2::zeros((d, d));
        for (k, &lk) in self.eigenvalues.iter().enumerate() {
            let fk = f(lk);
            for i in 0..d {
                scaled[[i, k]] = self.p[[i, k]] * fk;
            }
        }
        scaled.dot(&self.p.t())
    }

    /// Reconstructs P diag(lambda) P^T.
    pub fn reconstruct(&self) -> Array2<f64> {
        self.apply_fn(|l| l)
    }
}

/// Cyclic Jacobi eigendecomposition of a symmetric matrix.
///
/// The sweep order (p = 0..d-2, q = p+1..d-1) and the eigenvector sign
/// convention (first entry with |v| > 1e-12 made positive) are fixed, so the
/// output is deterministic for identical input.
pub fn eigh_symmetric(m: &SymMatrix) -> Result<SpectralDecomposition> {
    let d = m.dim();
    let mut a = m.as_array().clone();
    let mut v = identity(d);
    let scale = frobenius(&a);
    let stop = 1e-14 * scale;

    if d > 1 {
        let mut converged = false;
        for _ in 0..JACOBI_MAX_SWEEPS {
            let off: f64 = {
                let mut s = 0.0;
                for p in 0..d {
                    for q in (p + 1)..d {
                        s += 2.0 * a[[p, q]] * a[[p, q]];
                    }
                }
                s.sqrt()
            };
            if off <= stop {
                converged = true;
                break;
            }
            for p in 0..(d - 1) {
                for q in (p + 1)..d {
                    let apq = a[[p, q]];
                    if apq == 0.0 {
                        continue;
                    }
                    let theta = (a[[q, q]] - a[[p, p]]) / (2.0 * apq);
                    let t = if theta >= 0.0 {
                        1.0 / (theta + (1.0 + theta * theta).sqrt())
                    } else {
                        -1.0 / (-theta + (1.0 + theta * theta).sqrt())
                    };
                    let c = 1.0 / (1.0 + t * t).sqrt();
                    let s = t * c;

                    let app = a[[p, p]];
                    let aqq = a[[q, q]];
                    a[[p, p]] = app - t * apq;
                    a[[q, q]] = aqq + t * apq;
                    a[[p, q]] = 0.0;
                    a[[q, p]] = 0.0;
                    for i in 0..d {
                        if i != p && i != q {
                            let aip = a[[i, p]];
                            let aiq = a[[i, q]];
                            a[[i, p]] = c * aip - s * aiq;
                            a[[i, q]] = s * aip + c * aiq;
                            a[[p, i]] = a[[i, p]];
                            a[[q, i]] = a[[i, q]];
                        }
                    }
                    for i in 0..d {
                        let vip = v[[i, p]];
                        let viq = v[[i, q]];
                        v[[i, p]] = c * vip - s * viq;
                        v[[i, q]] = s * vip + c * viq;
                    }
                }
            }
        }
        if !converged {
            // Final check: the last sweep may have finished the job.
            let mut s = 0.0;
            for p in 0..d {
                for q in (p + 1)..d {
                    s += 2.0 * a[[p, q]] * a[[p, q]];
                }
            }
            if s.sqrt() > stop {
                return Err(CoreError::EigenNoConvergence {
                    sweeps: JACOBI_MAX_SWEEPS,
                });
            }
        }
    }

    let mut order: Vec<usize> = (0..d).collect();
    // Stable descending sort keeps tied eigenvalues in sweep order.
    order.sort_by(|&i, &j| a[[j, j]].partial_cmp(&a[[i, i]]).unwrap());

    let mut eigenvalues = Vec::with_capacity(d);
    let mut p = Array2::zeros((d, d));
    for (col, &k) in order.iter().enumerate() {
        eigenvalues.push(a[[k, k]]);
        let mut flip = 1.0;
        for i in 0..d {
            if v[[i, k]].abs() > 1e-12 {
                if v[[i, k]] < 0.0 {
                    flip = -1.0;
                }
                break;
            }
        }
        for i in 0..d {
            p[[i, col]] = flip * v[[i, k]];
        }
    }

    Ok(SpectralDecomposition { p, eigenvalues })
}

/// The three blocks of the rotation matrix at lag `t`:
/// cos(Lambda t), Lambda^{-1} sin(Lambda t) and Lambda sin(Lambda t).
#[derive(Debug, Clone)]
pub struct TrigMatrices {
    pub cos: Array2<f64>,
    pub inv_lambda_sin: Array2<f64>,
    pub lambda_sin: Array2<f64>,
}

/// Evaluates the trig blocks via f(Lambda) = P diag(f(lambda_k)) P^T.
///
/// Fails if the nonsingularity gate does not hold (the Lambda^{-1} sin block
/// needs it).
pub fn matrix_trig(dec: &SpectralDecomposition, t: f64) -> Result<TrigMatrices> {
    dec.require_nonsingular()?;
    Ok(TrigMatrices {
        cos: dec.apply_fn(|l| (l * t).cos()),
        inv_lambda_sin: dec.apply_fn(|l| (l * t).sin() / l),
        lambda_sin: dec.apply_fn(|l| l * (l * t).sin()),
    })
}

/// Assembles the 2d x 2d block rotation
/// [cos(Lambda t), Lambda^{-1} sin(Lambda t); -Lambda sin(Lambda t), cos(Lambda t)],
/// i.e. e^{A t} for the block drift A = [0 I; -Lambda^2 0].
pub fn rotation_matrix(dec: &SpectralDecomposition, t: f64) -> Result<Array2<f64>> {
    let trig = matrix_trig(dec, t)?;
    let d = dec.dim();
    let mut r = Array2::zeros((2 * d, 2 * d));
    for i in 0..d {
        for j in 0..d {
            r[[i, j]] = trig.cos[[i, j]];
            r[[i, d + j]] = trig.inv_lambda_sin[[i, j]];
            r[[d + i, j]] = -trig.lambda_sin[[i, j]];
            r[[d + i, d + j]] = trig.cos[[i, j]];
        }
    }
    Ok(r)
}

// Pade(13) numerator coefficients for expm, exact in f64.
const PADE13: [f64; 14] = [
    64764752532480000.0,
    32382376266240000.0,
    7771770303897600.0,
    1187353796428800.0,
    129060195264000.0,
    10559470521600.0,
    670442572800.0,
    33522128640.0,
    1323241920.0,
    40840800.0,
    960960.0,
    16380.0,
    182.0,
    1.0,
];
const PADE13_THETA: f64 = 5.371920351148152;

/// Matrix exponential e^{C h} by scaling-and-squaring with a diagonal
/// Pade(13) kernel.
pub fn augmented_exp(c: &Array2<f64>, h: f64) -> Result<Array2<f64>> {
    let (r, cols) = c.dim();
    if r != cols {
        return Err(CoreError::NotSquare { rows: r, cols });
    }
    let x = c.mapv(|v| v * h);
    if !x.iter().all(|v| v.is_finite()) {
        return Err(CoreError::ExpOverflow);
    }

    // 1-norm controls the scaling step count.
    let norm1 = (0..cols)
        .map(|j| (0..r).map(|i| x[[i, j]].abs()).sum::<f64>())
        .fold(0.0f64, f64::max);
    let squarings = if norm1 > PADE13_THETA {
        (norm1 / PADE13_THETA).log2().ceil() as u32
    } else {
        0
    };
    let a = x.mapv(|v| v / f64::powi(2.0, squarings as i32));

    let eye = identity(r);
    let a2 = a.dot(&a);
    let a4 = a2.dot(&a2);
    let a6 = a2.dot(&a4);

    let w1 = &a6 * PADE13[13] + &a4 * PADE13[11] + &a2 * PADE13[9];
    let w2 = w1.dot(&a6) + &a6 * PADE13[7] + &a4 * PADE13[5] + &a2 * PADE13[3] + &eye * PADE13[1];
    let u = a.dot(&w2);
    let v1 = &a6 * PADE13[12] + &a4 * PADE13[10] + &a2 * PADE13[8];
    let v = v1.dot(&a6) + &a6 * PADE13[6] + &a4 * PADE13[4] + &a2 * PADE13[2] + &eye * PADE13[0];

    let mut result = solve_linear(&(&v - &u), &(&v + &u))?;
    for _ in 0..squarings {
        result = result.dot(&result);
    }
    if !result.iter().all(|v| v.is_finite()) {
        return Err(CoreError::ExpOverflow);
    }
    Ok(result)
}

/// Solves A X = B by Gaussian elimination with partial pivoting.
fn solve_linear(a: &Array2<f64>, b: &Array2<f64>) -> Result<Array2<f64>> {
    let n = a.nrows();
    let m = b.ncols();
    let mut aug = Array2::zeros((n, n + m));
    for i in 0..n {
        for j in 0..n {
            aug[[i, j]] = a[[i, j]];
        }
        for j in 0..m {
            aug[[i, n + j]] = b[[i, j]];
        }
    }
    for col in 0..n {
        let mut pivot_row = col;
        let mut pivot_val = aug[[col, col]].abs();
        for row in (col + 1)..n {
            if aug[[row, col]].abs() > pivot_val {
                pivot_val = aug[[row, col]].abs();
                pivot_row = row;
            }
        }
        if pivot_val == 0.0 {
            return Err(CoreError::ExpOverflow);
        }
        if pivot_row != col {
            for j in 0..(n + m) {
                let tmp = aug[[col, j]];
                aug[[col, j]] = aug[[pivot_row, j]];
                aug[[pivot_row, j]] = tmp;
            }
        }
        for row in (col + 1)..n {
            let factor = aug[[row, col]] / aug[[col, col]];
            if factor == 0.0 {
                continue;
            }
            for j in col..(n + m) {
                aug[[row, j]] -= factor * aug[[col, j]];
            }
        }
    }
    let mut x = Array2::zeros((n, m));
    for col in (0..n).rev() {
        for j in 0..m {
            let mut sum = aug[[col, n + j]];
            for k in (col + 1)..n {
                sum -= aug[[col, k]] * x[[k, j]];
            }
            x[[col, j]] = sum / aug[[col, col]];
        }
    }
    Ok(x)
}

/// Symmetric PSD square-root-like factor: returns G with G G^T = C.
///
/// C is symmetrized, eigendecomposed and negative eigenvalues are clamped at
/// zero. Eigenvalues below `-1e-12 * trace` fail the PSD gate. This is robust
/// to the rank deficiency a one-step covariance has as the step shrinks,
/// where a plain triangular factorization breaks down.
pub fn psd_factor(c: &Array2<f64>) -> Result<Array2<f64>> {
    let n = c.nrows();
    if n != c.ncols() {
        return Err(CoreError::NotSquare {
            rows: n,
            cols: c.ncols(),
        });
    }
    let sym = (c + &c.t()) * 0.5;
    let dec = eigh_symmetric(&SymMatrix::new(sym)?)?;
    let trace: f64 = (0..n).map(|i| c[[i, i]]).sum();
    let tolerance = 1e-12 * trace.abs().max(f64::MIN_POSITIVE);
    let min_eig = dec.eigenvalues().iter().cloned().fold(f64::INFINITY, f64::min);
    if min_eig < -tolerance {
        return Err(CoreError::NotPsd { min_eig, tolerance });
    }
    let mut g = dec.p().clone();
    for (k, &mu) in dec.eigenvalues().iter().enumerate() {
        let root = mu.max(0.0).sqrt();
        for i in 0..n {
            g[[i, k]] *= root;
        }
    }
    Ok(g)
}

/// Groups eigenvalue indices by equal |lambda| within the repo-wide
/// degeneracy tolerance. Groups are ordered by descending |lambda*|.
pub fn abs_eigenvalue_groups(eigenvalues: &[f64]) -> Vec<(f64, Vec<usize>)> {
    let max_abs = eigenvalues.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let tol = EIGEN_EQ_RTOL * max_abs;
    let mut order: Vec<usize> = (0..eigenvalues.len()).collect();
    order.sort_by(|&i, &j| {
        eigenvalues[j]
            .abs()
            .partial_cmp(&eigenvalues[i].abs())
            .unwrap()
    });
    let mut groups: Vec<(f64, Vec<usize>)> = Vec::new();
    for &k in &order {
        let abs = eigenvalues[k].abs();
        match groups.last_mut() {
            Some((rep, members)) if (*rep - abs).abs() <= tol => members.push(k),
            _ => groups.push((abs, vec![k])),
        }
    }
    groups
}
