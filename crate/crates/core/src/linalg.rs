//! Dense complex linear algebra: products, LU solves, Hermitian
//! eigendecomposition, and the matrix exponential.
//!
//! Composite dimensions in this crate stay below ~420, so everything is
//! dense `Array2<C64>` and O(n^3) in safe Rust.

use ndarray::{Array1, Array2};
use num_complex::Complex;

use crate::error::{Error, Result};

pub type C64 = Complex<f64>;

pub fn dagger(m: &Array2<C64>) -> Array2<C64> {
    m.t().mapv(|z| z.conj())
}

pub fn trace(m: &Array2<C64>) -> C64 {
    m.diag().sum()
}

pub fn commutator(a: &Array2<C64>, b: &Array2<C64>) -> Array2<C64> {
    a.dot(b) - b.dot(a)
}

pub fn max_abs(m: &Array2<C64>) -> f64 {
    m.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

pub fn frobenius(m: &Array2<C64>) -> f64 {
    m.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// Maximum absolute column sum (the induced 1-norm).
pub fn norm_1(m: &Array2<C64>) -> f64 {
    let mut best = 0.0f64;
    for col in m.columns() {
        let s: f64 = col.iter().map(|z| z.norm()).sum();
        best = best.max(s);
    }
    best
}

pub fn kron(a: &Array2<C64>, b: &Array2<C64>) -> Array2<C64> {
    let (ar, ac) = a.dim();
    let (br, bc) = b.dim();
    let mut out = Array2::zeros((ar * br, ac * bc));
    for i in 0..ar {
        for j in 0..ac {
            let aij = a[[i, j]];
            if aij == C64::new(0.0, 0.0) {
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

pub fn identity(n: usize) -> Array2<C64> {
    Array2::eye(n)
}

/// LU factorization with partial pivoting, solving `A X = B` for dense
/// complex `A`.
pub fn lu_solve(a: &Array2<C64>, b: &Array2<C64>) -> Result<Array2<C64>> {
    let n = a.nrows();
    if a.ncols() != n || b.nrows() != n {
        return Err(Error::DimensionMismatch {
            context: format!("lu_solve: A is {}x{}, B has {} rows", n, a.ncols(), b.nrows()),
        });
    }
    let mut lu = a.clone();
    let mut x = b.clone();
    let nrhs = x.ncols();
    let mut perm: Vec<usize> = (0..n).collect();

    for k in 0..n {
        // pivot
        let mut p = k;
        let mut best = lu[[k, k]].norm();
        for i in (k + 1)..n {
            let v = lu[[i, k]].norm();
            if v > best {
                best = v;
                p = i;
            }
        }
        if best < 1e-300 {
            return Err(Error::SingularMatrix);
        }
        if p != k {
            perm.swap(p, k);
            for j in 0..n {
                let tmp = lu[[k, j]];
                lu[[k, j]] = lu[[p, j]];
                lu[[p, j]] = tmp;
            }
            for j in 0..nrhs {
                let tmp = x[[k, j]];
                x[[k, j]] = x[[p, j]];
                x[[p, j]] = tmp;
            }
        }
        let piv = lu[[k, k]];
        for i in (k + 1)..n {
            let factor = lu[[i, k]] / piv;
            lu[[i, k]] = factor;
            if factor != C64::new(0.0, 0.0) {
                for j in (k + 1)..n {
                    let sub = factor * lu[[k, j]];
                    lu[[i, j]] -= sub;
                }
                for j in 0..nrhs {
                    let sub = factor * x[[k, j]];
                    x[[i, j]] -= sub;
                }
            }
        }
    }
    // back substitution
    for j in 0..nrhs {
        for i in (0..n).rev() {
            let mut acc = x[[i, j]];
            for k in (i + 1)..n {
                acc -= lu[[i, k]] * x[[k, j]];
            }
            x[[i, j]] = acc / lu[[i, i]];
        }
    }
    Ok(x)
}

/// Eigendecomposition of a Hermitian matrix by cyclic complex Jacobi
/// rotations. Returns eigenvalues in ascending order and the matching
/// eigenvectors as columns, so `M = V diag(w) V^dag`.
pub fn hermitian_eig(m: &Array2<C64>) -> Result<(Array1<f64>, Array2<C64>)> {
    let n = m.nrows();
    if m.ncols() != n {
        return Err(Error::DimensionMismatch {
            context: format!("hermitian_eig: {}x{}", n, m.ncols()),
        });
    }
    let mut a = m.clone();
    let mut v = identity(n);
    let scale = frobenius(&a).max(1e-300);
    let tol = 1e-14 * scale;

    for _sweep in 0..100 {
        let mut off = 0.0f64;
        for p in 0..n {
            for q in (p + 1)..n {
                off += a[[p, q]].norm_sqr();
            }
        }
        if off.sqrt() <= tol {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = a[[p, q]];
                if apq.norm() <= tol / (n as f64) {
                    continue;
                }
                let app = a[[p, p]].re;
                let aqq = a[[q, q]].re;
                let abs_apq = apq.norm();
                let phase = apq / abs_apq;
                // rotation angle for the 2x2 Hermitian block
                let tau = (aqq - app) / (2.0 * abs_apq);
                let t = if tau >= 0.0 {
                    1.0 / (tau + (1.0 + tau * tau).sqrt())
                } else {
                    -1.0 / (-tau + (1.0 + tau * tau).sqrt())
                };
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = t * c;
                // G: columns p,q mix with complex phase
                let gpp = C64::new(c, 0.0);
                let gpq = phase * s;
                let gqp = -phase.conj() * s;
                let gqq = C64::new(c, 0.0);
                // A <- G^dag A G, applied as row then column updates
                for j in 0..n {
                    let arp = a[[p, j]];
                    let arq = a[[q, j]];
                    a[[p, j]] = gpp.conj() * arp + gqp.conj() * arq;
                    a[[q, j]] = gpq.conj() * arp + gqq.conj() * arq;
                }
                for i in 0..n {
                    let acp = a[[i, p]];
                    let acq = a[[i, q]];
                    a[[i, p]] = acp * gpp + acq * gqp;
                    a[[i, q]] = acp * gpq + acq * gqq;
                }
                for i in 0..n {
                    let vcp = v[[i, p]];
                    let vcq = v[[i, q]];
                    v[[i, p]] = vcp * gpp + vcq * gqp;
                    v[[i, q]] = vcp * gpq + vcq * gqq;
                }
            }
        }
    }

    let mut idx: Vec<usize> = (0..n).collect();
    let w: Vec<f64> = (0..n).map(|i| a[[i, i]].re).collect();
    idx.sort_by(|&i, &j| w[i].partial_cmp(&w[j]).unwrap());
    let w_sorted = Array1::from_iter(idx.iter().map(|&i| w[i]));
    let mut v_sorted = Array2::zeros((n, n));
    for (new_col, &old_col) in idx.iter().enumerate() {
        for i in 0..n {
            v_sorted[[i, new_col]] = v[[i, old_col]];
        }
    }
    Ok((w_sorted, v_sorted))
}

/// Matrix exponential by scaling-and-squaring with a (13,13) Pade
/// approximant.
pub fn expm(m: &Array2<C64>) -> Result<Array2<C64>> {
    let n = m.nrows();
    if m.ncols() != n {
        return Err(Error::DimensionMismatch {
            context: format!("expm: {}x{}", n, m.ncols()),
        });
    }
    const B: [f64; 14] = [
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
    const THETA_13: f64 = 5.371920351148152;

    let nrm = norm_1(m);
    let s = if nrm > THETA_13 {
        (nrm / THETA_13).log2().ceil() as u32
    } else {
        0
    };
    let a = m.mapv(|z| z / (2f64.powi(s as i32)));

    let a2 = a.dot(&a);
    let a4 = a2.dot(&a2);
    let a6 = a2.dot(&a4);
    let eye = identity(n);

    let u_inner = &a6 * C64::new(B[13], 0.0) + &a4 * C64::new(B[11], 0.0) + &a2 * C64::new(B[9], 0.0);
    let u = a.dot(&(a6.dot(&u_inner) + &a6 * C64::new(B[7], 0.0) + &a4 * C64::new(B[5], 0.0) + &a2 * C64::new(B[3], 0.0) + &eye * C64::new(B[1], 0.0)));
    let v_inner = &a6 * C64::new(B[12], 0.0) + &a4 * C64::new(B[10], 0.0) + &a2 * C64::new(B[8], 0.0);
    let v = a6.dot(&v_inner) + &a6 * C64::new(B[6], 0.0) + &a4 * C64::new(B[4], 0.0) + &a2 * C64::new(B[2], 0.0) + &eye * C64::new(B[0], 0.0);

    let mut r = lu_solve(&(&v - &u), &(&v + &u))?;
    for _ in 0..s {
        r = r.dot(&r);
    }
    Ok(r)
}
