//! Small dense linear algebra used by the filters.
//!
//! Everything here operates on modest matrices (feature dimension squared at
//! most), so plain loops over `ndarray` storage are fast enough and keep the
//! crate free of BLAS/LAPACK backends.

use ndarray::{Array1, Array2};

use crate::error::{Error, Result};

/// Replaces `a` with its symmetric part `(a + a^T) / 2`.
pub fn symmetrize(a: &mut Array2<f64>) {
    let n = a.nrows();
    debug_assert_eq!(n, a.ncols());
    for i in 0..n {
        for j in (i + 1)..n {
            let v = 0.5 * (a[[i, j]] + a[[j, i]]);
            a[[i, j]] = v;
            a[[j, i]] = v;
        }
    }
}

/// Cholesky factorization `a = L L^T` for a symmetric positive definite
/// matrix. Returns the lower factor; fails on a non-positive pivot.
pub fn cholesky(a: &Array2<f64>) -> Result<Array2<f64>> {
    let n = a.nrows();
    if n != a.ncols() {
        return Err(Error::invalid("matrix", "Cholesky requires a square matrix"));
    }
    let mut l = Array2::<f64>::zeros((n, n));
    for j in 0..n {
        let mut d = a[[j, j]];
        for k in 0..j {
            d -= l[[j, k]] * l[[j, k]];
        }
        if d <= 0.0 || !d.is_finite() {
            return Err(Error::invalid(
                "matrix",
                format!("not positive definite (pivot {d:e} at column {j})"),
            ));
        }
        let djj = d.sqrt();
        l[[j, j]] = djj;
        for i in (j + 1)..n {
            let mut s = a[[i, j]];
            for k in 0..j {
                s -= l[[i, k]] * l[[j, k]];
            }
            l[[i, j]] = s / djj;
        }
    }
    Ok(l)
}

/// Solves `L y = b` for lower-triangular `L`.
pub fn forward_substitute(l: &Array2<f64>, b: &Array1<f64>) -> Array1<f64> {
    let n = l.nrows();
    let mut y = Array1::<f64>::zeros(n);
    for i in 0..n {
        let mut s = b[i];
        for k in 0..i {
            s -= l[[i, k]] * y[k];
        }
        y[i] = s / l[[i, i]];
    }
    y
}

/// Solves `L^T x = y` for lower-triangular `L`.
pub fn back_substitute_transposed(l: &Array2<f64>, y: &Array1<f64>) -> Array1<f64> {
    let n = l.nrows();
    let mut x = Array1::<f64>::zeros(n);
    for i in (0..n).rev() {
        let mut s = y[i];
        for k in (i + 1)..n {
            s -= l[[k, i]] * x[k];
        }
        x[i] = s / l[[i, i]];
    }
    x
}

/// Solves `a x = b` for symmetric positive definite `a`.
pub fn spd_solve(a: &Array2<f64>, b: &Array1<f64>) -> Result<Array1<f64>> {
    let l = cholesky(a)?;
    let y = forward_substitute(&l, b);
    Ok(back_substitute_transposed(&l, &y))
}

/// Inverse of a symmetric positive definite matrix via Cholesky.
pub fn spd_inverse(a: &Array2<f64>) -> Result<Array2<f64>> {
    let n = a.nrows();
    let l = cholesky(a)?;
    let mut inv = Array2::<f64>::zeros((n, n));
    let mut e = Array1::<f64>::zeros(n);
    for j in 0..n {
        e.fill(0.0);
        e[j] = 1.0;
        let y = forward_substitute(&l, &e);
        let x = back_substitute_transposed(&l, &y);
        for i in 0..n {
            inv[[i, j]] = x[i];
        }
    }
    symmetrize(&mut inv);
    Ok(inv)
}

/// Solves `a x = b` by LU with partial pivoting. For general square systems.
pub fn solve(a: &Array2<f64>, b: &Array1<f64>) -> Result<Array1<f64>> {
    let n = a.nrows();
    if n != a.ncols() || n != b.len() {
        return Err(Error::invalid("matrix", "solve requires square a and matching b"));
    }
    let mut lu = a.clone();
    let mut perm: Vec<usize> = (0..n).collect();

    for col in 0..n {
        let mut max_val = lu[[perm[col], col]].abs();
        let mut max_row = col;
        for row in (col + 1)..n {
            let v = lu[[perm[row], col]].abs();
            if v > max_val {
                max_val = v;
                max_row = row;
            }
        }
        if max_val < 1e-14 {
            return Err(Error::Numeric("singular system in solve".into()));
        }
        perm.swap(col, max_row);

        let pivot = lu[[perm[col], col]];
        for row in (col + 1)..n {
            let factor = lu[[perm[row], col]] / pivot;
            lu[[perm[row], col]] = factor;
            for k in (col + 1)..n {
                let v = lu[[perm[col], k]];
                lu[[perm[row], k]] -= factor * v;
            }
        }
    }

    let mut y = Array1::<f64>::zeros(n);
    for i in 0..n {
        let mut s = b[perm[i]];
        for j in 0..i {
            s -= lu[[perm[i], j]] * y[j];
        }
        y[i] = s;
    }
    let mut x = Array1::<f64>::zeros(n);
    for i in (0..n).rev() {
        let mut s = y[i];
        for j in (i + 1)..n {
            s -= lu[[perm[i], j]] * x[j];
        }
        x[i] = s / lu[[perm[i], i]];
    }
    Ok(x)
}

/// Inverse of a general square matrix via LU column solves.
pub fn invert(a: &Array2<f64>) -> Result<Array2<f64>> {
    let n = a.nrows();
    let mut inv = Array2::<f64>::zeros((n, n));
    let mut e = Array1::<f64>::zeros(n);
    for j in 0..n {
        e.fill(0.0);
        e[j] = 1.0;
        let x = solve(a, &e)?;
        for i in 0..n {
            inv[[i, j]] = x[i];
        }
    }
    Ok(inv)
}

/// Eigendecomposition of a symmetric matrix by cyclic Jacobi rotations.
///
/// Returns `(eigenvalues, v)` with `a ≈ v diag(eigenvalues) v^T`. Intended
/// for the small matrices that appear in this crate; convergence is
/// quadratic and a few sweeps suffice.
pub fn symmetric_eigen(a: &Array2<f64>) -> (Array1<f64>, Array2<f64>) {
    let n = a.nrows();
    debug_assert_eq!(n, a.ncols());
    let mut m = a.clone();
    symmetrize(&mut m);
    let mut v = Array2::<f64>::eye(n);

    let scale: f64 = m.iter().map(|x| x * x).sum::<f64>().max(f64::MIN_POSITIVE);
    let tol = 1e-30 * scale;

    for _sweep in 0..100 {
        let mut off = 0.0;
        for i in 0..n {
            for j in (i + 1)..n {
                off += m[[i, j]] * m[[i, j]];
            }
        }
        if off <= tol {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = m[[p, q]];
                if apq.abs() <= 1e-300 {
                    continue;
                }
                let app = m[[p, p]];
                let aqq = m[[q, q]];
                let theta = 0.5 * (aqq - app) / apq;
                let t = if theta >= 0.0 {
                    1.0 / (theta + (1.0 + theta * theta).sqrt())
                } else {
                    -1.0 / (-theta + (1.0 + theta * theta).sqrt())
                };
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = t * c;

                // m <- J^T m J applied as column then row rotations.
                for k in 0..n {
                    let mkp = m[[k, p]];
                    let mkq = m[[k, q]];
                    m[[k, p]] = c * mkp - s * mkq;
                    m[[k, q]] = s * mkp + c * mkq;
                }
                for k in 0..n {
                    let mpk = m[[p, k]];
                    let mqk = m[[q, k]];
                    m[[p, k]] = c * mpk - s * mqk;
                    m[[q, k]] = s * mpk + c * mqk;
                }
                for k in 0..n {
                    let vkp = v[[k, p]];
                    let vkq = v[[k, q]];
                    v[[k, p]] = c * vkp - s * vkq;
                    v[[k, q]] = s * vkp + c * vkq;
                }
            }
        }
    }

    let vals = Array1::from_iter((0..n).map(|i| m[[i, i]]));
    (vals, v)
}

/// Smallest eigenvalue of a symmetric matrix.
pub fn min_symmetric_eigenvalue(a: &Array2<f64>) -> f64 {
    let (vals, _) = symmetric_eigen(a);
    vals.iter().copied().fold(f64::INFINITY, f64::min)
}

/// Symmetrizes and clamps the eigenvalues of `a` at `floor`, returning a
/// symmetric positive definite matrix.
pub fn clamp_spd(a: &Array2<f64>, floor: f64) -> Array2<f64> {
    let mut sym = a.clone();
    symmetrize(&mut sym);
    let (vals, v) = symmetric_eigen(&sym);
    if vals.iter().all(|&x| x >= floor) {
        return sym;
    }
    let n = sym.nrows();
    let mut out = Array2::<f64>::zeros((n, n));
    for k in 0..n {
        let lam = vals[k].max(floor);
        for i in 0..n {
            for j in 0..n {
                out[[i, j]] += lam * v[[i, k]] * v[[j, k]];
            }
        }
    }
    symmetrize(&mut out);
    out
}

/// Kronecker product `a ⊗ b`.
pub fn kron(a: &Array2<f64>, b: &Array2<f64>) -> Array2<f64> {
    let (ar, ac) = (a.nrows(), a.ncols());
    let (br, bc) = (b.nrows(), b.ncols());
    let mut out = Array2::<f64>::zeros((ar * br, ac * bc));
    for i in 0..ar {
        for j in 0..ac {
            let aij = a[[i, j]];
            if aij == 0.0 {
                continue;
            }
            for k in 0..br {
                for l in 0..bc {
                    out[[i * br + k, j * bc + l]] = aij * b[[k, l]];
                }
            }
        }
    }
    out
}

/// Rank-one outer product `x y^T`.
pub fn outer(x: &Array1<f64>, y: &Array1<f64>) -> Array2<f64> {
    let mut out = Array2::<f64>::zeros((x.len(), y.len()));
    for i in 0..x.len() {
        for j in 0..y.len() {
            out[[i, j]] = x[i] * y[j];
        }
    }
    out
}
