//! Small dense linear algebra on row-major `m×m` matrices.

use alloc::vec;
use alloc::vec::Vec;

#[derive(Clone, Copy, Debug, PartialEq, thiserror::Error)]
pub enum LinalgError {
    #[error("matrix is not positive definite")]
    NotPositiveDefinite,
    #[error("matrix is singular")]
    Singular,
}

/// Lower-triangular Cholesky factor of a symmetric positive-definite matrix.
pub fn cholesky(a: &[f64], m: usize) -> Result<Vec<f64>, LinalgError> {
    let mut l = vec![0.0; m * m];
    for i in 0..m {
        for j in 0..=i {
            let mut s = a[i * m + j];
            for k in 0..j {
                s -= l[i * m + k] * l[j * m + k];
            }
            if i == j {
                if !(s > 0.0) {
                    return Err(LinalgError::NotPositiveDefinite);
                }
                l[i * m + i] = libm::sqrt(s);
            } else {
                l[i * m + j] = s / l[j * m + j];
            }
        }
    }
    Ok(l)
}

/// Inverse of a symmetric positive-definite matrix.
pub fn spd_inverse(a: &[f64], m: usize) -> Result<Vec<f64>, LinalgError> {
    let l = cholesky(a, m)?;
    let mut inv = vec![0.0; m * m];
    let mut col = vec![0.0; m];
    for c in 0..m {
        col.iter_mut().enumerate().for_each(|(i, v)| *v = if i == c { 1.0 } else { 0.0 });
        for i in 0..m {
            let mut s = col[i];
            for k in 0..i {
                s -= l[i * m + k] * col[k];
            }
            col[i] = s / l[i * m + i];
        }
        for i in (0..m).rev() {
            let mut s = col[i];
            for k in i + 1..m {
                s -= l[k * m + i] * col[k];
            }
            col[i] = s / l[i * m + i];
        }
        for r in 0..m {
            inv[r * m + c] = col[r];
        }
    }
    for i in 0..m {
        for j in 0..i {
            let s = 0.5 * (inv[i * m + j] + inv[j * m + i]);
            inv[i * m + j] = s;
            inv[j * m + i] = s;
        }
    }
    Ok(inv)
}

/// Eigenvalues of a symmetric matrix in ascending order (cyclic Jacobi).
pub fn sym_eigenvalues(a: &[f64], m: usize) -> Vec<f64> {
    let mut a = a.to_vec();
    for _sweep in 0..64 {
        let off: f64 = (0..m)
            .flat_map(|i| (0..m).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| a[i * m + j] * a[i * m + j])
            .sum();
        let diag: f64 = (0..m).map(|i| a[i * m + i] * a[i * m + i]).sum();
        if off <= 1e-30 * diag.max(1e-300) {
            break;
        }
        for p in 0..m {
            for q in p + 1..m {
                let apq = a[p * m + q];
                if apq == 0.0 {
                    continue;
                }
                let theta = (a[q * m + q] - a[p * m + p]) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + libm::sqrt(theta * theta + 1.0));
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / libm::sqrt(t * t + 1.0);
                let s = t * c;
                for k in 0..m {
                    let akp = a[k * m + p];
                    let akq = a[k * m + q];
                    a[k * m + p] = c * akp - s * akq;
                    a[k * m + q] = s * akp + c * akq;
                }
                for k in 0..m {
                    let apk = a[p * m + k];
                    let aqk = a[q * m + k];
                    a[p * m + k] = c * apk - s * aqk;
                    a[q * m + k] = s * apk + c * aqk;
                }
            }
        }
    }
    let mut ev: Vec<f64> = (0..m).map(|i| a[i * m + i]).collect();
    ev.sort_by(f64::total_cmp);
    ev
}

/// LU factorization with partial pivoting, stored compactly.
pub struct Lu {
    m: usize,
    lu: Vec<f64>,
    perm: Vec<usize>,
    sign: f64,
}

impl Lu {
    pub fn new(a: &[f64], m: usize) -> Lu {
        let mut lu = a.to_vec();
        let mut perm: Vec<usize> = (0..m).collect();
        let mut sign = 1.0;
        for k in 0..m {
            let p = (k..m)
                .max_by(|&i, &j| lu[i * m + k].abs().total_cmp(&lu[j * m + k].abs()))
                .unwrap_or(k);
            if p != k {
                for c in 0..m {
                    lu.swap(k * m + c, p * m + c);
                }
                perm.swap(k, p);
                sign = -sign;
            }
            let piv = lu[k * m + k];
            if piv == 0.0 {
                continue;
            }
            for i in k + 1..m {
                let f = lu[i * m + k] / piv;
                lu[i * m + k] = f;
                for c in k + 1..m {
                    lu[i * m + c] -= f * lu[k * m + c];
                }
            }
        }
        Lu { m, lu, perm, sign }
    }

    pub fn det(&self) -> f64 {
        (0..self.m).fold(self.sign, |d, i| d * self.lu[i * self.m + i])
    }

    pub fn solve(&self, b: &[f64]) -> Result<Vec<f64>, LinalgError> {
        let m = self.m;
        let scale = self.lu.iter().fold(0.0f64, |s, v| s.max(v.abs()));
        if (0..m).any(|i| self.lu[i * m + i].abs() <= 1e-14 * scale) {
            return Err(LinalgError::Singular);
        }
        let mut x: Vec<f64> = self.perm.iter().map(|&p| b[p]).collect();
        for i in 0..m {
            for k in 0..i {
                x[i] -= self.lu[i * m + k] * x[k];
            }
        }
        for i in (0..m).rev() {
            for k in i + 1..m {
                x[i] -= self.lu[i * m + k] * x[k];
            }
            x[i] /= self.lu[i * m + i];
        }
        Ok(x)
    }
}

pub fn det(a: &[f64], m: usize) -> f64 {
    Lu::new(a, m).det()
}

pub fn solve(a: &[f64], m: usize, b: &[f64]) -> Result<Vec<f64>, LinalgError> {
    Lu::new(a, m).solve(b)
}

pub fn inverse(a: &[f64], m: usize) -> Result<Vec<f64>, LinalgError> {
    let lu = Lu::new(a, m);
    let mut inv = vec![0.0; m * m];
    let mut e = vec![0.0; m];
    for c in 0..m {
        e.iter_mut().enumerate().for_each(|(i, v)| *v = if i == c { 1.0 } else { 0.0 });
        let col = lu.solve(&e)?;
        for r in 0..m {
            inv[r * m + c] = col[r];
        }
    }
    Ok(inv)
}

/// Singular values in ascending order.
pub fn singular_values(a: &[f64], m: usize) -> Vec<f64> {
    let mut ata = vec![0.0; m * m];
    for i in 0..m {
        for j in 0..m {
            ata[i * m + j] = (0..m).map(|k| a[k * m + i] * a[k * m + j]).sum();
        }
    }
    sym_eigenvalues(&ata, m).into_iter().map(|v| libm::sqrt(v.max(0.0))).collect()
}

/// `Aᵀ G A` for square matrices.
pub fn congruence(g: &[f64], a: &[f64], m: usize) -> Vec<f64> {
    let mut out = vec![0.0; m * m];
    for i in 0..m {
        for j in 0..m {
            let mut s = 0.0;
            for k in 0..m {
                for l in 0..m {
                    s += a[k * m + i] * g[k * m + l] * a[l * m + j];
                }
            }
            out[i * m + j] = s;
        }
    }
    out
}

pub fn quad_form(g: &[f64], m: usize, u: &[f64], v: &[f64]) -> f64 {
    let mut s = 0.0;
    for i in 0..m {
        for j in 0..m {
            s += u[i] * g[i * m + j] * v[j];
        }
    }
    s
}

pub fn mat_vec(a: &[f64], m: usize, x: &[f64]) -> Vec<f64> {
    (0..m).map(|i| (0..m).map(|j| a[i * m + j] * x[j]).sum()).collect()
}

pub fn norm(x: &[f64]) -> f64 {
    libm::sqrt(x.iter().map(|v| v * v).sum())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn spd_inverse_diag() {
        let inv = spd_inverse(&[4.0, 0.0, 0.0, 0.25], 2).unwrap();
        assert_eq!(inv, [0.25, 0.0, 0.0, 4.0]);
        assert!(spd_inverse(&[1.0, 2.0, 2.0, 1.0], 2).is_err());
    }

    #[test]
    fn eigen_and_det() {
        let a = [2.0, 1.0, 0.0, 1.0, 2.0, 0.0, 0.0, 0.0, 5.0];
        let ev = sym_eigenvalues(&a, 3);
        for (e, x) in ev.iter().zip([1.0, 3.0, 5.0]) {
            assert!((e - x).abs() < 1e-13);
        }
        assert!((det(&a, 3) - 15.0).abs() < 1e-12);
        let x = solve(&a, 3, &[1.0, 2.0, 5.0]).unwrap();
        assert!((x[0] - 0.0).abs() < 1e-14 && (x[1] - 1.0).abs() < 1e-14 && (x[2] - 1.0).abs() < 1e-14);
        assert!(solve(&[1.0, 2.0, 2.0, 4.0], 2, &[1.0, 1.0]).is_err());
    }

    #[test]
    fn singular_values_of_rotation_scaling() {
        let s = singular_values(&[0.0, -2.0, 3.0, 0.0], 2);
        assert!((s[0] - 2.0).abs() < 1e-13 && (s[1] - 3.0).abs() < 1e-13);
    }
}
