//! Small dense linear algebra: n x n matrices for n <= 3 (Jacobians, metrics)
//! and symmetric eigenvalue problems up to 6 x 6 (the strain-space positivity
//! eigenproblem). Everything is closed-form or fixed-sweep Jacobi so results
//! are deterministic across runs and platforms.

use crate::error::{Error, Result};

pub const MAX_N: usize = 3;

/// Dense square matrix of dimension n <= 3, stored row-major in a fixed array.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Mat {
    n: usize,
    e: [f64; 9],
}

impl Mat {
    pub fn zeros(n: usize) -> Self {
        assert!(n >= 1 && n <= MAX_N);
        Mat { n, e: [0.0; 9] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Mat::zeros(n);
        for i in 0..n {
            m.set(i, i, 1.0);
        }
        m
    }

    pub fn from_rows(n: usize, rows: &[&[f64]]) -> Self {
        let mut m = Mat::zeros(n);
        for (i, r) in rows.iter().enumerate() {
            for (j, v) in r.iter().enumerate() {
                m.set(i, j, *v);
            }
        }
        m
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        debug_assert!(i < self.n && j < self.n);
        self.e[i * MAX_N + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        debug_assert!(i < self.n && j < self.n);
        self.e[i * MAX_N + j] = v;
    }

    pub fn transpose(&self) -> Mat {
        let mut t = Mat::zeros(self.n);
        for i in 0..self.n {
            for j in 0..self.n {
                t.set(i, j, self.get(j, i));
            }
        }
        t
    }

    pub fn mul(&self, other: &Mat) -> Mat {
        assert_eq!(self.n, other.n);
        let mut out = Mat::zeros(self.n);
        for i in 0..self.n {
            for j in 0..self.n {
                let mut s = 0.0;
                for k in 0..self.n {
                    s += self.get(i, k) * other.get(k, j);
                }
                out.set(i, j, s);
            }
        }
        out
    }

    pub fn mul_vec(&self, v: &[f64]) -> Vec<f64> {
        assert_eq!(v.len(), self.n);
        (0..self.n)
            .map(|i| (0..self.n).map(|j| self.get(i, j) * v[j]).sum())
            .collect()
    }

    pub fn scale(&self, a: f64) -> Mat {
        let mut out = *self;
        for i in 0..self.n {
            for j in 0..self.n {
                out.set(i, j, a * self.get(i, j));
            }
        }
        out
    }

    pub fn add(&self, other: &Mat) -> Mat {
        assert_eq!(self.n, other.n);
        let mut out = Mat::zeros(self.n);
        for i in 0..self.n {
            for j in 0..self.n {
                out.set(i, j, self.get(i, j) + other.get(i, j));
            }
        }
        out
    }

    pub fn sub(&self, other: &Mat) -> Mat {
        self.add(&other.scale(-1.0))
    }

    pub fn det(&self) -> f64 {
        match self.n {
            1 => self.get(0, 0),
            2 => self.get(0, 0) * self.get(1, 1) - self.get(0, 1) * self.get(1, 0),
            3 => {
                self.get(0, 0) * (self.get(1, 1) * self.get(2, 2) - self.get(1, 2) * self.get(2, 1))
                    - self.get(0, 1)
                        * (self.get(1, 0) * self.get(2, 2) - self.get(1, 2) * self.get(2, 0))
                    + self.get(0, 2)
                        * (self.get(1, 0) * self.get(2, 1) - self.get(1, 1) * self.get(2, 0))
            }
            _ => unreachable!(),
        }
    }

    pub fn inverse(&self) -> Result<Mat> {
        let d = self.det();
        if d.abs() < 1e-300 || !d.is_finite() {
            return Err(Error::Jacobian(format!("singular matrix, det = {d}")));
        }
        let mut inv = Mat::zeros(self.n);
        match self.n {
            1 => inv.set(0, 0, 1.0 / d),
            2 => {
                inv.set(0, 0, self.get(1, 1) / d);
                inv.set(0, 1, -self.get(0, 1) / d);
                inv.set(1, 0, -self.get(1, 0) / d);
                inv.set(1, 1, self.get(0, 0) / d);
            }
            3 => {
                let m = self;
                inv.set(0, 0, (m.get(1, 1) * m.get(2, 2) - m.get(1, 2) * m.get(2, 1)) / d);
                inv.set(0, 1, (m.get(0, 2) * m.get(2, 1) - m.get(0, 1) * m.get(2, 2)) / d);
                inv.set(0, 2, (m.get(0, 1) * m.get(1, 2) - m.get(0, 2) * m.get(1, 1)) / d);
                inv.set(1, 0, (m.get(1, 2) * m.get(2, 0) - m.get(1, 0) * m.get(2, 2)) / d);
                inv.set(1, 1, (m.get(0, 0) * m.get(2, 2) - m.get(0, 2) * m.get(2, 0)) / d);
                inv.set(1, 2, (m.get(0, 2) * m.get(1, 0) - m.get(0, 0) * m.get(1, 2)) / d);
                inv.set(2, 0, (m.get(1, 0) * m.get(2, 1) - m.get(1, 1) * m.get(2, 0)) / d);
                inv.set(2, 1, (m.get(0, 1) * m.get(2, 0) - m.get(0, 0) * m.get(2, 1)) / d);
                inv.set(2, 2, (m.get(0, 0) * m.get(1, 1) - m.get(0, 1) * m.get(1, 0)) / d);
            }
            _ => unreachable!(),
        }
        Ok(inv)
    }

    pub fn frobenius_norm(&self) -> f64 {
        let mut s = 0.0;
        for i in 0..self.n {
            for j in 0..self.n {
                s += self.get(i, j) * self.get(i, j);
            }
        }
        s.sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        let mut s: f64 = 0.0;
        for i in 0..self.n {
            for j in 0..self.n {
                s = s.max(self.get(i, j).abs());
            }
        }
        s
    }

    pub fn is_symmetric(&self, tol: f64) -> bool {
        for i in 0..self.n {
            for j in 0..i {
                if (self.get(i, j) - self.get(j, i)).abs() > tol {
                    return false;
                }
            }
        }
        true
    }
}

/// Rotation matrix: 2-D rotation by `theta`, or 3-D rotation about a
/// coordinate `axis` by `theta`.
pub fn rotation(n: usize, theta: f64, axis: usize) -> Mat {
    let (c, s) = (theta.cos(), theta.sin());
    match n {
        2 => Mat::from_rows(2, &[&[c, -s], &[s, c]]),
        3 => {
            let (a, b) = ((axis + 1) % 3, (axis + 2) % 3);
            let mut m = Mat::identity(3);
            m.set(a, a, c);
            m.set(a, b, -s);
            m.set(b, a, s);
            m.set(b, b, c);
            m
        }
        _ => panic!("rotation: n must be 2 or 3"),
    }
}

/// Eigenvalues of a symmetric k x k matrix (k <= 6), ascending. Closed form
/// for k <= 2, cyclic Jacobi sweeps otherwise.
pub fn sym_eigenvalues(k: usize, a: &[f64]) -> Vec<f64> {
    assert_eq!(a.len(), k * k);
    match k {
        1 => vec![a[0]],
        2 => {
            let (p, q, r) = (a[0], a[1], a[3]);
            let tr = p + r;
            let disc = (0.25 * (p - r) * (p - r) + q * q).sqrt();
            vec![0.5 * tr - disc, 0.5 * tr + disc]
        }
        _ => {
            let (vals, _) = jacobi_eigen(k, a, false);
            vals
        }
    }
}

/// Full symmetric eigendecomposition via cyclic Jacobi. Returns ascending
/// eigenvalues and, when `with_vectors`, the matching orthonormal columns
/// flattened row-major into a k x k array.
pub fn jacobi_eigen(k: usize, a: &[f64], with_vectors: bool) -> (Vec<f64>, Vec<f64>) {
    let mut m = a.to_vec();
    let mut v = vec![0.0; k * k];
    for i in 0..k {
        v[i * k + i] = 1.0;
    }
    let idx = |i: usize, j: usize| i * k + j;
    for _sweep in 0..64 {
        let mut off = 0.0;
        for i in 0..k {
            for j in (i + 1)..k {
                off += m[idx(i, j)] * m[idx(i, j)];
            }
        }
        if off.sqrt() < 1e-15 * (1.0 + frob(&m)) {
            break;
        }
        for p in 0..k {
            for q in (p + 1)..k {
                let apq = m[idx(p, q)];
                if apq.abs() < 1e-300 {
                    continue;
                }
                let app = m[idx(p, p)];
                let aqq = m[idx(q, q)];
                let theta = 0.5 * (aqq - app) / apq;
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for r in 0..k {
                    let mrp = m[idx(r, p)];
                    let mrq = m[idx(r, q)];
                    m[idx(r, p)] = c * mrp - s * mrq;
                    m[idx(r, q)] = s * mrp + c * mrq;
                }
                for r in 0..k {
                    let mpr = m[idx(p, r)];
                    let mqr = m[idx(q, r)];
                    m[idx(p, r)] = c * mpr - s * mqr;
                    m[idx(q, r)] = s * mpr + c * mqr;
                }
                for r in 0..k {
                    let vrp = v[idx(r, p)];
                    let vrq = v[idx(r, q)];
                    v[idx(r, p)] = c * vrp - s * vrq;
                    v[idx(r, q)] = s * vrp + c * vrq;
                }
            }
        }
    }
    let mut pairs: Vec<(f64, usize)> = (0..k).map(|i| (m[idx(i, i)], i)).collect();
    pairs.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
    let vals: Vec<f64> = pairs.iter().map(|p| p.0).collect();
    let vecs = if with_vectors {
        let mut out = vec![0.0; k * k];
        for (new_col, (_, old_col)) in pairs.iter().enumerate() {
            for r in 0..k {
                out[r * k + new_col] = v[idx(r, *old_col)];
            }
        }
        out
    } else {
        Vec::new()
    };
    (vals, vecs)
}

fn frob(m: &[f64]) -> f64 {
    m.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Cholesky factor L (lower, row-major k x k) of a symmetric positive
/// definite matrix; fails if a pivot is not positive.
pub fn cholesky(k: usize, a: &[f64]) -> Result<Vec<f64>> {
    assert_eq!(a.len(), k * k);
    let mut l = vec![0.0; k * k];
    for i in 0..k {
        for j in 0..=i {
            let mut s = a[i * k + j];
            for p in 0..j {
                s -= l[i * k + p] * l[j * k + p];
            }
            if i == j {
                if s <= 0.0 {
                    return Err(Error::Metric(format!(
                        "matrix not positive definite (pivot {s} at {i})"
                    )));
                }
                l[i * k + i] = s.sqrt();
            } else {
                l[i * k + j] = s / l[j * k + j];
            }
        }
    }
    Ok(l)
}

/// Solves L y = b with L lower triangular (forward substitution).
pub fn forward_solve(k: usize, l: &[f64], b: &[f64]) -> Vec<f64> {
    let mut y = vec![0.0; k];
    for i in 0..k {
        let mut s = b[i];
        for j in 0..i {
            s -= l[i * k + j] * y[j];
        }
        y[i] = s / l[i * k + i];
    }
    y
}
