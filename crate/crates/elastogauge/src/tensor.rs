//! Stiffness tensors and metric tensors at a point: symmetry and positivity
//! checks, the Voigt matrix form used for IO and the positivity
//! eigenproblem, and isotropic construction from the Lame parameters.

use crate::error::{Error, Result};
use crate::field::{FieldValue, SmoothField};
use crate::linalg::{self, Mat};

pub const EPS_SPD: f64 = 1e-10;

/// Rank-4 stiffness tensor value, dense storage of all n^4 entries.
#[derive(Clone, Debug, PartialEq)]
pub struct StiffnessValue {
    n: usize,
    e: Vec<f64>,
}

impl StiffnessValue {
    pub fn zeros(n: usize) -> Result<Self> {
        if n < 2 || n > 3 {
            return Err(Error::Dimension(n));
        }
        Ok(StiffnessValue {
            n,
            e: vec![0.0; n * n * n * n],
        })
    }

    pub fn from_entries(n: usize, entries: Vec<f64>) -> Result<Self> {
        if n < 2 || n > 3 {
            return Err(Error::Dimension(n));
        }
        if entries.len() != n * n * n * n {
            return Err(Error::Field(format!(
                "stiffness needs {} entries, got {}",
                n * n * n * n,
                entries.len()
            )));
        }
        Ok(StiffnessValue { n, e: entries })
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.n
    }

    #[inline]
    fn idx(&self, i: usize, j: usize, k: usize, l: usize) -> usize {
        ((i * self.n + j) * self.n + k) * self.n + l
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize, k: usize, l: usize) -> f64 {
        self.e[self.idx(i, j, k, l)]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, k: usize, l: usize, v: f64) {
        let id = self.idx(i, j, k, l);
        self.e[id] = v;
    }

    pub fn entries(&self) -> &[f64] {
        &self.e
    }

    pub fn scale(&self, a: f64) -> StiffnessValue {
        StiffnessValue {
            n: self.n,
            e: self.e.iter().map(|x| a * x).collect(),
        }
    }

    pub fn max_entry(&self) -> f64 {
        self.e.iter().fold(0.0_f64, |m, x| m.max(x.abs()))
    }

    /// Largest deviation from the minor (ij, kl pair swaps) and major
    /// (pair exchange) symmetries.
    pub fn max_symmetry_deviation(&self) -> f64 {
        let n = self.n;
        let mut dev: f64 = 0.0;
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    for l in 0..n {
                        let c = self.get(i, j, k, l);
                        dev = dev.max((c - self.get(j, i, k, l)).abs());
                        dev = dev.max((c - self.get(i, j, l, k)).abs());
                        dev = dev.max((c - self.get(k, l, i, j)).abs());
                    }
                }
            }
        }
        dev
    }

    /// Orthogonal projection onto the minor+major symmetric subspace. The
    /// orbit average is computed once per orbit and written to every member,
    /// so the result is bit-exactly symmetric.
    pub fn symmetrized(&self) -> StiffnessValue {
        let n = self.n;
        let mut out = StiffnessValue::zeros(n).unwrap();
        for i in 0..n {
            for j in i..n {
                for k in 0..n {
                    for l in k..n {
                        if (k, l) < (i, j) {
                            continue;
                        }
                        let s = self.get(i, j, k, l)
                            + self.get(j, i, k, l)
                            + self.get(i, j, l, k)
                            + self.get(j, i, l, k)
                            + self.get(k, l, i, j)
                            + self.get(l, k, i, j)
                            + self.get(k, l, j, i)
                            + self.get(l, k, j, i);
                        let avg = s / 8.0;
                        for (p, q) in [(i, j), (j, i)] {
                            for (r, t) in [(k, l), (l, k)] {
                                out.set(p, q, r, t, avg);
                                out.set(r, t, p, q, avg);
                            }
                        }
                    }
                }
            }
        }
        out
    }

    /// Contracts one Jacobian factor onto each slot:
    /// out^{abcd} = m_{a i} m_{b j} m_{c k} m_{d l} c^{ijkl}.
    pub fn contract4(&self, m: &Mat) -> StiffnessValue {
        let n = self.n;
        assert_eq!(m.dim(), n);
        // one slot at a time keeps this O(n^5) per pass
        let mut cur = self.e.clone();
        for slot in 0..4 {
            let mut next = vec![0.0; cur.len()];
            let stride = n.pow(3 - slot as u32);
            // index decomposition: idx = outer*stride*n + s*stride + inner
            let outer_count = n.pow(slot as u32);
            for outer in 0..outer_count {
                for inner in 0..stride {
                    for a in 0..n {
                        let mut s = 0.0;
                        for i in 0..n {
                            s += m.get(a, i) * cur[(outer * n + i) * stride + inner];
                        }
                        next[(outer * n + a) * stride + inner] = s;
                    }
                }
            }
            cur = next;
        }
        StiffnessValue { n, e: cur }
    }
}

/// Symmetric positive definite metric value g_{ij}.
#[derive(Clone, Debug, PartialEq)]
pub struct MetricValue {
    n: usize,
    e: Vec<f64>,
}

impl MetricValue {
    pub fn new(n: usize, entries: Vec<f64>) -> Result<Self> {
        if n < 2 || n > 3 {
            return Err(Error::Dimension(n));
        }
        if entries.len() != n * n {
            return Err(Error::Metric(format!(
                "metric needs {} entries, got {}",
                n * n,
                entries.len()
            )));
        }
        let m = MetricValue { n, e: entries };
        let asym = (0..n)
            .flat_map(|i| (0..n).map(move |j| (i, j)))
            .fold(0.0_f64, |d, (i, j)| d.max((m.get(i, j) - m.get(j, i)).abs()));
        if asym > 1e-12 * (1.0 + m.max_abs()) {
            return Err(Error::Metric(format!("metric not symmetric (dev {asym})")));
        }
        Ok(m)
    }

    pub fn identity(n: usize) -> Self {
        let mut e = vec![0.0; n * n];
        for i in 0..n {
            e[i * n + i] = 1.0;
        }
        MetricValue { n, e }
    }

    pub fn from_mat(m: &Mat) -> Self {
        let n = m.dim();
        let mut e = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..n {
                e[i * n + j] = m.get(i, j);
            }
        }
        MetricValue { n, e }
    }

    pub fn to_mat(&self) -> Mat {
        let mut m = Mat::zeros(self.n);
        for i in 0..self.n {
            for j in 0..self.n {
                m.set(i, j, self.get(i, j));
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
        self.e[i * self.n + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.e[i * self.n + j] = v;
    }

    pub fn max_abs(&self) -> f64 {
        self.e.iter().fold(0.0_f64, |m, x| m.max(x.abs()))
    }

    pub fn det(&self) -> f64 {
        self.to_mat().det()
    }

    pub fn sqrt_det(&self) -> Result<f64> {
        let d = self.det();
        if d <= 0.0 {
            return Err(Error::Metric(format!("det g = {d} not positive")));
        }
        Ok(d.sqrt())
    }

    pub fn inverse(&self) -> Result<MetricValue> {
        let inv = self
            .to_mat()
            .inverse()
            .map_err(|_| Error::Metric("singular metric".into()))?;
        Ok(MetricValue::from_mat(&inv))
    }

    pub fn eigenvalues(&self) -> Vec<f64> {
        linalg::sym_eigenvalues(self.n, &self.e)
    }

    pub fn is_spd(&self, eps: f64) -> bool {
        self.eigenvalues().into_iter().all(|l| l > eps)
    }

    pub fn scale(&self, a: f64) -> MetricValue {
        MetricValue {
            n: self.n,
            e: self.e.iter().map(|x| a * x).collect(),
        }
    }
}

impl FieldValue for StiffnessValue {
    fn lin_comb(terms: &[(f64, &Self)]) -> Self {
        let n = terms[0].1.n;
        let mut e = vec![0.0; terms[0].1.e.len()];
        for (a, v) in terms {
            debug_assert_eq!(v.n, n);
            for (o, x) in e.iter_mut().zip(v.e.iter()) {
                *o += a * x;
            }
        }
        StiffnessValue { n, e }
    }
    fn max_abs(&self) -> f64 {
        self.max_entry()
    }
}

impl FieldValue for MetricValue {
    fn lin_comb(terms: &[(f64, &Self)]) -> Self {
        let n = terms[0].1.n;
        let mut e = vec![0.0; terms[0].1.e.len()];
        for (a, v) in terms {
            debug_assert_eq!(v.n, n);
            for (o, x) in e.iter_mut().zip(v.e.iter()) {
                *o += a * x;
            }
        }
        MetricValue { n, e }
    }
    fn max_abs(&self) -> f64 {
        MetricValue::max_abs(self)
    }
}

pub type StiffnessField = SmoothField<StiffnessValue>;
pub type MetricField = SmoothField<MetricValue>;

/// Isotropic stiffness from the Lame parameters:
/// c^{ijkl} = lambda d_ij d_kl + mu (d_ik d_jl + d_il d_jk).
pub fn isotropic_stiffness(lambda: f64, mu: f64, n: usize) -> Result<StiffnessValue> {
    if !(mu > 0.0) {
        return Err(Error::Positivity(format!("shear modulus mu = {mu} must be > 0")));
    }
    if !(lambda + 2.0 * mu > 0.0) {
        return Err(Error::Positivity(format!(
            "lambda + 2 mu = {} must be > 0",
            lambda + 2.0 * mu
        )));
    }
    isotropic_entries(lambda, mu, n)
}

/// The raw isotropic formula without the positivity gate (used to probe
/// degenerate parameter sets).
pub fn isotropic_entries(lambda: f64, mu: f64, n: usize) -> Result<StiffnessValue> {
    let mut c = StiffnessValue::zeros(n)?;
    let d = |a: usize, b: usize| if a == b { 1.0 } else { 0.0 };
    for i in 0..n {
        for j in 0..n {
            for k in 0..n {
                for l in 0..n {
                    c.set(
                        i,
                        j,
                        k,
                        l,
                        lambda * d(i, j) * d(k, l) + mu * (d(i, k) * d(j, l) + d(i, l) * d(j, k)),
                    );
                }
            }
        }
    }
    Ok(c)
}

/// True iff all minor/major symmetry deviations are within `tol`.
pub fn check_symmetry(c: &StiffnessValue, tol: f64) -> bool {
    c.max_symmetry_deviation() <= tol
}

fn sym_basis(n: usize) -> Vec<(usize, usize, f64)> {
    // (i, j, normalization) for an orthonormal basis of symmetric matrices:
    // diagonal E_ii, off-diagonal (E_ij + E_ji)/sqrt(2)
    let mut basis = Vec::new();
    for i in 0..n {
        basis.push((i, i, 1.0));
    }
    for i in 0..n {
        for j in (i + 1)..n {
            basis.push((i, j, std::f64::consts::FRAC_1_SQRT_2));
        }
    }
    basis
}

fn basis_matrix(n: usize, b: (usize, usize, f64)) -> Vec<f64> {
    let mut m = vec![0.0; n * n];
    m[b.0 * n + b.1] += b.2;
    if b.0 != b.1 {
        m[b.1 * n + b.0] += b.2;
    }
    m
}

/// Best constant delta such that
///   c^{ijkl} A_ij A_kl >= delta g^{jk} g^{il} A_ij A_kl
/// over all symmetric A: the smallest generalized eigenvalue of the induced
/// forms on symmetric-matrix space. A non-positive return signals failure of
/// positivity; a singular metric is an error.
pub fn check_positivity(c: &StiffnessValue, g: &MetricValue) -> Result<f64> {
    let n = c.dim();
    if g.dim() != n {
        return Err(Error::Metric("dimension mismatch between c and g".into()));
    }
    if !g.is_spd(EPS_SPD) {
        return Err(Error::Metric("metric not positive definite".into()));
    }
    let gi = g.inverse()?;
    let basis = sym_basis(n);
    let k = basis.len();
    let mats: Vec<Vec<f64>> = basis.iter().map(|&b| basis_matrix(n, b)).collect();
    let mut cq = vec![0.0; k * k];
    let mut gq = vec![0.0; k * k];
    for a in 0..k {
        for b in 0..k {
            let (ma, mb) = (&mats[a], &mats[b]);
            let mut sc = 0.0;
            let mut sg = 0.0;
            for i in 0..n {
                for j in 0..n {
                    for p in 0..n {
                        for q in 0..n {
                            let aa = ma[i * n + j];
                            let bb = mb[p * n + q];
                            sc += c.get(i, j, p, q) * aa * bb;
                            sg += gi.get(j, p) * gi.get(i, q) * aa * bb;
                        }
                    }
                }
            }
            cq[a * k + b] = sc;
            gq[a * k + b] = sg;
        }
    }
    // symmetrize the c-form (exact for symmetric c, cleans rounding otherwise)
    for a in 0..k {
        for b in 0..a {
            let s = 0.5 * (cq[a * k + b] + cq[b * k + a]);
            cq[a * k + b] = s;
            cq[b * k + a] = s;
        }
    }
    // generalized eigenproblem C v = delta G v via Cholesky whitening
    let l = linalg::cholesky(k, &gq).map_err(|_| Error::Metric("induced metric form not SPD".into()))?;
    // M = L^-1 C L^-T
    let mut y = vec![0.0; k * k]; // Y = L^-1 C (column by column)
    for col in 0..k {
        let b: Vec<f64> = (0..k).map(|r| cq[r * k + col]).collect();
        let sol = linalg::forward_solve(k, &l, &b);
        for r in 0..k {
            y[r * k + col] = sol[r];
        }
    }
    let mut m = vec![0.0; k * k]; // M = Y L^-T  =>  M^T = L^-1 Y^T
    for col in 0..k {
        let b: Vec<f64> = (0..k).map(|r| y[col * k + r]).collect();
        let sol = linalg::forward_solve(k, &l, &b);
        for r in 0..k {
            m[col * k + r] = sol[r];
        }
    }
    for a in 0..k {
        for b in 0..a {
            let s = 0.5 * (m[a * k + b] + m[b * k + a]);
            m[a * k + b] = s;
            m[b * k + a] = s;
        }
    }
    let vals = linalg::sym_eigenvalues(k, &m);
    Ok(vals[0])
}

/// Voigt pair ordering: (11, 22, 12) for n = 2; (11, 22, 33, 23, 13, 12) for
/// n = 3.
pub fn voigt_pairs(n: usize) -> Vec<(usize, usize)> {
    match n {
        2 => vec![(0, 0), (1, 1), (0, 1)],
        3 => vec![(0, 0), (1, 1), (2, 2), (1, 2), (0, 2), (0, 1)],
        _ => panic!("voigt_pairs: n must be 2 or 3"),
    }
}

/// Packs a symmetric stiffness tensor into its Voigt matrix (row-major,
/// m = n(n+1)/2). Entries are the plain tensor components, no factor-2
/// conventions, so the round trip with `voigt_unpack` is exact.
pub fn voigt_pack(c: &StiffnessValue) -> Result<Vec<f64>> {
    let tol = 1e-10 * (1.0 + c.max_entry());
    if !check_symmetry(c, tol) {
        return Err(Error::Symmetry(format!(
            "stiffness deviates from minor/major symmetry by {}",
            c.max_symmetry_deviation()
        )));
    }
    let pairs = voigt_pairs(c.dim());
    let m = pairs.len();
    let mut out = vec![0.0; m * m];
    for (a, &(i, j)) in pairs.iter().enumerate() {
        for (b, &(k, l)) in pairs.iter().enumerate() {
            out[a * m + b] = c.get(i, j, k, l);
        }
    }
    Ok(out)
}

/// Inverse of `voigt_pack`; the matrix must be symmetric (major symmetry).
pub fn voigt_unpack(m: &[f64], n: usize) -> Result<StiffnessValue> {
    let pairs = voigt_pairs(n);
    let k = pairs.len();
    if m.len() != k * k {
        return Err(Error::Field(format!("voigt matrix needs {} entries", k * k)));
    }
    let scale = m.iter().fold(0.0_f64, |s, x| s.max(x.abs()));
    for a in 0..k {
        for b in 0..a {
            if (m[a * k + b] - m[b * k + a]).abs() > 1e-10 * (1.0 + scale) {
                return Err(Error::Symmetry("voigt matrix not symmetric".into()));
            }
        }
    }
    let mut c = StiffnessValue::zeros(n)?;
    for (a, &(i, j)) in pairs.iter().enumerate() {
        for (b, &(k_, l)) in pairs.iter().enumerate() {
            let v = m[a * k + b];
            for (p, q) in [(i, j), (j, i)] {
                for (r, s) in [(k_, l), (l, k_)] {
                    c.set(p, q, r, s, v);
                }
            }
        }
    }
    Ok(c)
}
