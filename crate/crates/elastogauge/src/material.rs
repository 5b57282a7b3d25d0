//! Material bundles (density, stiffness, metric) and the built-in field
//! families the experiment configs can name. All built-ins carry analytic
//! first and second partials.

use std::sync::Arc;

use crate::bump::{BallBump, BoxBump};
use crate::domain::{interior_probes, Domain, Point};
use crate::error::{Error, Result};
use crate::field::{ScalarField, SmoothField, VectorField};
use crate::linalg::{rotation, Mat};
use crate::tensor::{
    check_positivity, check_symmetry, isotropic_stiffness, voigt_unpack, MetricField, MetricValue,
    StiffnessField, StiffnessValue,
};

/// One elastic medium: density rho > 0, stiffness c, metric g.
#[derive(Clone)]
pub struct MaterialTriple {
    pub rho: ScalarField,
    pub c: StiffnessField,
    pub g: MetricField,
    n: usize,
}

/// Validation summary, also used for run manifests.
#[derive(Clone, Copy, Debug)]
pub struct TripleReport {
    pub min_rho: f64,
    pub min_delta: f64,
    pub max_symmetry_deviation: f64,
}

pub const DEFAULT_PROBE_COUNT: usize = 128;

impl MaterialTriple {
    pub fn new(rho: ScalarField, c: StiffnessField, g: MetricField) -> Self {
        let n = c.dim();
        assert_eq!(rho.dim(), n);
        assert_eq!(g.dim(), n);
        MaterialTriple { rho, c, g, n }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    /// Probe-point validation: rho bounded away from zero, stiffness
    /// symmetric, and positivity delta > 0 against the local metric.
    pub fn validate(&self, domain: &Domain, probes: usize, seed: u64) -> Result<TripleReport> {
        let pts = interior_probes(domain, probes, seed, 0.02);
        let mut min_rho = f64::INFINITY;
        let mut min_delta = f64::INFINITY;
        let mut max_dev: f64 = 0.0;
        for &x in &pts {
            let rho = self.rho.value(x);
            if !(rho > 0.0) || !rho.is_finite() {
                return Err(Error::Positivity(format!(
                    "density {rho} not positive at {:?}",
                    &x[..self.n]
                )));
            }
            min_rho = min_rho.min(rho);
            let cv = self.c.value(x);
            let dev = cv.max_symmetry_deviation();
            max_dev = max_dev.max(dev);
            if !check_symmetry(&cv, 1e-9 * (1.0 + cv.max_entry())) {
                return Err(Error::Symmetry(format!(
                    "stiffness symmetry deviation {dev} at {:?}",
                    &x[..self.n]
                )));
            }
            let gv = self.g.value(x);
            let delta = check_positivity(&cv, &gv)?;
            if delta <= 0.0 {
                return Err(Error::Positivity(format!(
                    "positivity delta = {delta} at {:?}",
                    &x[..self.n]
                )));
            }
            min_delta = min_delta.min(delta);
        }
        Ok(TripleReport {
            min_rho,
            min_delta,
            max_symmetry_deviation: max_dev,
        })
    }
}

// ---------------------------------------------------------------------------
// scalar field families
// ---------------------------------------------------------------------------

pub fn scalar_constant(n: usize, v: f64) -> ScalarField {
    ScalarField::constant(n, v)
}

pub fn scalar_affine(n: usize, v0: f64, grad: Point) -> ScalarField {
    let g = grad;
    ScalarField::analytic2(
        n,
        move |x| v0 + (0..n).map(|a| g[a] * x[a]).sum::<f64>(),
        move |_, j| g[j],
        |_, _, _| 0.0,
    )
}

/// v0 (1 + amp * prod_a sin(pi k x_a))
pub fn scalar_sine(n: usize, v0: f64, amp: f64, k: f64) -> ScalarField {
    let w = std::f64::consts::PI * k;
    let prod = move |x: Point| (0..n).map(|a| (w * x[a]).sin()).product::<f64>();
    let dprod = move |x: Point, j: usize| {
        (0..n)
            .map(|a| {
                if a == j {
                    w * (w * x[a]).cos()
                } else {
                    (w * x[a]).sin()
                }
            })
            .product::<f64>()
    };
    let d2prod = move |x: Point, j: usize, kk: usize| {
        (0..n)
            .map(|a| {
                if j == kk && a == j {
                    -w * w * (w * x[a]).sin()
                } else if a == j || a == kk {
                    w * (w * x[a]).cos()
                } else {
                    (w * x[a]).sin()
                }
            })
            .product::<f64>()
    };
    ScalarField::analytic2(
        n,
        move |x| v0 * (1.0 + amp * prod(x)),
        move |x, j| v0 * amp * dprod(x, j),
        move |x, j, kk| v0 * amp * d2prod(x, j, kk),
    )
}

/// exp(gamma * dir . x)
pub fn scalar_exp(n: usize, gamma: f64, dir: Point) -> ScalarField {
    let d = dir;
    let dot = move |x: Point| (0..n).map(|a| d[a] * x[a]).sum::<f64>();
    ScalarField::analytic2(
        n,
        move |x| (gamma * dot(x)).exp(),
        move |x, j| gamma * d[j] * (gamma * dot(x)).exp(),
        move |x, j, k| gamma * gamma * d[j] * d[k] * (gamma * dot(x)).exp(),
    )
}

/// 1 + amplitude * (interior box bump vanishing within `collar` of the
/// boundary). Equal to 1 on the boundary with all derivatives.
pub fn scalar_one_plus_bump(domain: &Domain, amplitude: f64, collar: f64) -> ScalarField {
    let bump = Arc::new(BoxBump::interior(domain, collar));
    let (b1, b2, b3) = (bump.clone(), bump.clone(), bump);
    ScalarField::analytic2(
        domain.dim(),
        move |x| 1.0 + amplitude * b1.value(x),
        move |x, j| amplitude * b2.d1(x, j),
        move |x, j, k| amplitude * b3.d2(x, j, k),
    )
}

/// 1 + amplitude * (ball bump), first derivatives analytic.
pub fn scalar_one_plus_ball(n: usize, amplitude: f64, center: Point, radius: f64) -> ScalarField {
    let bump = Arc::new(BallBump::new(n, center, radius));
    let (b1, b2) = (bump.clone(), bump);
    ScalarField::analytic1(
        n,
        move |x| 1.0 + amplitude * b1.value(x),
        move |x, j| amplitude * b2.d1(x, j),
    )
}

// ---------------------------------------------------------------------------
// metric field families
// ---------------------------------------------------------------------------

pub fn metric_euclidean(n: usize) -> MetricField {
    MetricField::constant(n, MetricValue::identity(n))
}

/// e^{2 alpha dir.x} * I
pub fn metric_conformal_exp(n: usize, alpha: f64, dir: Point) -> MetricField {
    let factor = scalar_exp(n, 2.0 * alpha, dir);
    scale_identity_metric(n, factor)
}

/// (1 + alpha prod sin(pi k x_a))^2 * I
pub fn metric_conformal_sine(n: usize, alpha: f64, k: f64) -> MetricField {
    let s = scalar_sine(n, 1.0, alpha, k);
    let s2 = s.product(&s);
    scale_identity_metric(n, s2)
}

fn scale_identity_metric(n: usize, factor: ScalarField) -> MetricField {
    MetricField::constant(n, MetricValue::identity(n)).scaled_by(&factor)
}

/// diag(1 + alpha_a x_a^2)
pub fn metric_diagonal_poly(n: usize, alpha: Point) -> MetricField {
    MetricField::analytic2(
        n,
        move |x| {
            let mut m = MetricValue::identity(n);
            for a in 0..n {
                m.set(a, a, 1.0 + alpha[a] * x[a] * x[a]);
            }
            m
        },
        move |x, j| {
            let mut m = MetricValue::identity(n).scale(0.0);
            m.set(j, j, 2.0 * alpha[j] * x[j]);
            m
        },
        move |_, j, k| {
            let mut m = MetricValue::identity(n).scale(0.0);
            if j == k {
                m.set(j, j, 2.0 * alpha[j]);
            }
            m
        },
    )
}

/// Unimodular shear [[1, s],[s, 1+s^2]] with s = alpha x_2 (embedded in the
/// upper block for n = 3).
pub fn metric_sheared(n: usize, alpha: f64) -> MetricField {
    MetricField::analytic2(
        n,
        move |x| {
            let s = alpha * x[1];
            let mut m = MetricValue::identity(n);
            m.set(0, 1, s);
            m.set(1, 0, s);
            m.set(1, 1, 1.0 + s * s);
            m
        },
        move |x, j| {
            let mut m = MetricValue::identity(n).scale(0.0);
            if j == 1 {
                let s = alpha * x[1];
                m.set(0, 1, alpha);
                m.set(1, 0, alpha);
                m.set(1, 1, 2.0 * alpha * s);
            }
            m
        },
        move |_, j, k| {
            let mut m = MetricValue::identity(n).scale(0.0);
            if j == 1 && k == 1 {
                m.set(1, 1, 2.0 * alpha * alpha);
            }
            m
        },
    )
}

/// (1 + alpha |x|^2) * I
pub fn metric_radial(n: usize, alpha: f64) -> MetricField {
    MetricField::analytic2(
        n,
        move |x| {
            let r2: f64 = (0..n).map(|a| x[a] * x[a]).sum();
            MetricValue::identity(n).scale(1.0 + alpha * r2)
        },
        move |x, j| MetricValue::identity(n).scale(2.0 * alpha * x[j]),
        move |_, j, k| {
            MetricValue::identity(n).scale(if j == k { 2.0 * alpha } else { 0.0 })
        },
    )
}

// ---------------------------------------------------------------------------
// stiffness field families
// ---------------------------------------------------------------------------

pub fn stiffness_isotropic(n: usize, lambda: f64, mu: f64) -> Result<StiffnessField> {
    Ok(StiffnessField::constant(n, isotropic_stiffness(lambda, mu, n)?))
}

/// Isotropic with affine Lame parameters lambda(x), mu(x).
pub fn stiffness_isotropic_fields(
    n: usize,
    lambda: ScalarField,
    mu: ScalarField,
) -> StiffnessField {
    let base_l = StiffnessField::analytic2(
        n,
        {
            move |_x: Point| lambda_basis(n)
        },
        {
            move |_x, _j| lambda_basis(n).scale(0.0)
        },
        {
            move |_x, _j, _k| lambda_basis(n).scale(0.0)
        },
    );
    let base_m = StiffnessField::analytic2(
        n,
        move |_x: Point| mu_basis(n),
        move |_x, _j| mu_basis(n).scale(0.0),
        move |_x, _j, _k| mu_basis(n).scale(0.0),
    );
    let part_l = base_l.scaled_by(&lambda);
    let part_m = base_m.scaled_by(&mu);
    SmoothField::lin_comb_fields(1.0, &part_l, 1.0, &part_m)
}

fn lambda_basis(n: usize) -> StiffnessValue {
    // d_ij d_kl
    let mut c = StiffnessValue::zeros(n).unwrap();
    for i in 0..n {
        for k in 0..n {
            c.set(i, i, k, k, 1.0);
        }
    }
    c
}

fn mu_basis(n: usize) -> StiffnessValue {
    // d_ik d_jl + d_il d_jk
    let mut c = StiffnessValue::zeros(n).unwrap();
    for i in 0..n {
        for j in 0..n {
            for k in 0..n {
                for l in 0..n {
                    let d = |a: usize, b: usize| if a == b { 1.0 } else { 0.0 };
                    c.set(i, j, k, l, d(i, k) * d(j, l) + d(i, l) * d(j, k));
                }
            }
        }
    }
    c
}

pub fn stiffness_isotropic_gradient(
    n: usize,
    lambda0: f64,
    mu0: f64,
    grad_lambda: Point,
    grad_mu: Point,
) -> StiffnessField {
    stiffness_isotropic_fields(
        n,
        scalar_affine(n, lambda0, grad_lambda),
        scalar_affine(n, mu0, grad_mu),
    )
}

pub fn stiffness_isotropic_sine(
    n: usize,
    lambda0: f64,
    mu0: f64,
    amp: f64,
    k: f64,
) -> StiffnessField {
    stiffness_isotropic_fields(
        n,
        scalar_sine(n, lambda0, amp, k),
        scalar_sine(n, mu0, amp, k),
    )
}

pub fn stiffness_constant_voigt(n: usize, voigt_rows: &[f64]) -> Result<StiffnessField> {
    let c = voigt_unpack(voigt_rows, n)?;
    Ok(StiffnessField::constant(n, c))
}

/// Orthotropic base stiffness (2-D Voigt: c11, c22, c12, c66) rotated by a
/// possibly affine angle field theta(x) = theta0 + theta_grad . x.
pub fn stiffness_rotated_orthotropic(
    c11: f64,
    c22: f64,
    c12: f64,
    c66: f64,
    theta0: f64,
    theta_grad: Point,
) -> Result<StiffnessField> {
    let n = 2;
    let base = voigt_unpack(&[c11, c12, 0.0, c12, c22, 0.0, 0.0, 0.0, c66], n)?;
    let theta = move |x: Point| theta0 + theta_grad[0] * x[0] + theta_grad[1] * x[1];
    let value = {
        let base = base.clone();
        move |x: Point| base.contract4(&rotation(n, theta(x), 2))
    };
    // d/dtheta of R applied per slot, then chain with the affine angle
    let d1 = {
        let base = base.clone();
        move |x: Point, j: usize| {
            let th = theta(x);
            rotated_theta_derivative(&base, th).scale(theta_grad[j])
        }
    };
    let d2 = {
        let base = base.clone();
        move |x: Point, j: usize, k: usize| {
            let th = theta(x);
            rotated_theta_second_derivative(&base, th).scale(theta_grad[j] * theta_grad[k])
        }
    };
    Ok(StiffnessField::analytic2(n, value, d1, d2))
}

fn rot_and_derivs(theta: f64) -> (Mat, Mat, Mat) {
    let r = rotation(2, theta, 2);
    let (c, s) = (theta.cos(), theta.sin());
    let rp = Mat::from_rows(2, &[&[-s, -c], &[c, -s]]);
    let rpp = r.scale(-1.0);
    (r, rp, rpp)
}

fn contract4_slots(c: &StiffnessValue, mats: [&Mat; 4]) -> StiffnessValue {
    let n = c.dim();
    let mut out = StiffnessValue::zeros(n).unwrap();
    for a in 0..n {
        for b in 0..n {
            for cc in 0..n {
                for d in 0..n {
                    let mut s = 0.0;
                    for i in 0..n {
                        for j in 0..n {
                            for k in 0..n {
                                for l in 0..n {
                                    s += mats[0].get(a, i)
                                        * mats[1].get(b, j)
                                        * mats[2].get(cc, k)
                                        * mats[3].get(d, l)
                                        * c.get(i, j, k, l);
                                }
                            }
                        }
                    }
                    out.set(a, b, cc, d, s);
                }
            }
        }
    }
    out
}

fn rotated_theta_derivative(base: &StiffnessValue, theta: f64) -> StiffnessValue {
    let (r, rp, _) = rot_and_derivs(theta);
    let mut out = StiffnessValue::zeros(base.dim()).unwrap();
    for slot in 0..4 {
        let mats: Vec<&Mat> = (0..4).map(|s| if s == slot { &rp } else { &r }).collect();
        let term = contract4_slots(base, [mats[0], mats[1], mats[2], mats[3]]);
        out = StiffnessValue::lin_comb_pair(1.0, &out, 1.0, &term);
    }
    out
}

fn rotated_theta_second_derivative(base: &StiffnessValue, theta: f64) -> StiffnessValue {
    let (r, rp, rpp) = rot_and_derivs(theta);
    let mut out = StiffnessValue::zeros(base.dim()).unwrap();
    for s1 in 0..4 {
        for s2 in 0..4 {
            let mats: Vec<&Mat> = (0..4)
                .map(|s| {
                    if s == s1 && s == s2 {
                        &rpp
                    } else if s == s1 || s == s2 {
                        &rp
                    } else {
                        &r
                    }
                })
                .collect();
            let term = contract4_slots(base, [mats[0], mats[1], mats[2], mats[3]]);
            out = StiffnessValue::lin_comb_pair(1.0, &out, 1.0, &term);
        }
    }
    out
}

impl StiffnessValue {
    fn lin_comb_pair(a: f64, x: &StiffnessValue, b: f64, y: &StiffnessValue) -> StiffnessValue {
        use crate::field::FieldValue;
        StiffnessValue::lin_comb(&[(a, x), (b, y)])
    }
}

// ---------------------------------------------------------------------------
// displacement test fields
// ---------------------------------------------------------------------------

/// u^i = a_i + sum_j b_ij x_j + sum_jk q_ijk x_j x_k with q symmetric in jk.
pub fn vector_quadratic(n: usize, a: Vec<f64>, b: Vec<f64>, q: Vec<f64>) -> VectorField {
    assert_eq!(a.len(), n);
    assert_eq!(b.len(), n * n);
    assert_eq!(q.len(), n * n * n);
    let (a1, b1, q1) = (a.clone(), b.clone(), q.clone());
    let (b2, q2) = (b.clone(), q.clone());
    let q3 = q.clone();
    VectorField::analytic2(
        n,
        move |x| {
            (0..n)
                .map(|i| {
                    let mut v = a1[i];
                    for j in 0..n {
                        v += b1[i * n + j] * x[j];
                        for k in 0..n {
                            v += q1[(i * n + j) * n + k] * x[j] * x[k];
                        }
                    }
                    v
                })
                .collect()
        },
        move |x, j| {
            (0..n)
                .map(|i| {
                    let mut v = b2[i * n + j];
                    for k in 0..n {
                        v += (q2[(i * n + j) * n + k] + q2[(i * n + k) * n + j]) * x[k];
                    }
                    v
                })
                .collect()
        },
        move |_, j, k| {
            (0..n)
                .map(|i| q3[(i * n + j) * n + k] + q3[(i * n + k) * n + j])
                .collect()
        },
    )
}

/// u^i = amp_i sin(k . x + phase_i)
pub fn vector_trig(n: usize, amp: Vec<f64>, k: Point, phase: Vec<f64>) -> VectorField {
    assert_eq!(amp.len(), n);
    assert_eq!(phase.len(), n);
    let dot = move |x: Point| (0..n).map(|a| k[a] * x[a]).sum::<f64>();
    let (a1, p1) = (amp.clone(), phase.clone());
    let (a2, p2) = (amp.clone(), phase.clone());
    let (a3, p3) = (amp, phase);
    VectorField::analytic2(
        n,
        move |x| (0..n).map(|i| a1[i] * (dot(x) + p1[i]).sin()).collect(),
        move |x, j| {
            (0..n)
                .map(|i| a2[i] * k[j] * (dot(x) + p2[i]).cos())
                .collect()
        },
        move |x, j, kk| {
            (0..n)
                .map(|i| -a3[i] * k[j] * k[kk] * (dot(x) + p3[i]).sin())
                .collect()
        },
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::verify_analytic_partials;

    fn probes() -> Vec<Point> {
        interior_probes(&Domain::unit_square(), 24, 9, 0.08)
    }

    #[test]
    fn builtin_fields_have_consistent_partials() {
        let d = Domain::unit_square();
        let h = 1e-3;
        verify_analytic_partials(&scalar_sine(2, 1.5, 0.4, 1.0), &probes(), h).unwrap();
        verify_analytic_partials(&scalar_exp(2, 0.8, [1.0, 0.4, 0.0]), &probes(), h).unwrap();
        verify_analytic_partials(&scalar_one_plus_bump(&d, 0.5, 0.125), &probes(), h).unwrap();
        verify_analytic_partials(&metric_conformal_exp(2, 0.5, [1.0, 0.0, 0.0]), &probes(), h)
            .unwrap();
        verify_analytic_partials(&metric_conformal_sine(2, 0.3, 1.0), &probes(), h).unwrap();
        verify_analytic_partials(&metric_diagonal_poly(2, [0.5, 0.8, 0.0]), &probes(), h).unwrap();
        verify_analytic_partials(&metric_sheared(2, 0.6), &probes(), h).unwrap();
        verify_analytic_partials(&metric_radial(2, 0.4), &probes(), h).unwrap();
        verify_analytic_partials(
            &stiffness_isotropic_gradient(2, 2.0, 1.0, [0.3, 0.1, 0.0], [0.1, 0.2, 0.0]),
            &probes(),
            h,
        )
        .unwrap();
        verify_analytic_partials(&stiffness_isotropic_sine(2, 2.0, 1.0, 0.3, 1.0), &probes(), h)
            .unwrap();
        verify_analytic_partials(
            &stiffness_rotated_orthotropic(4.0, 3.0, 1.2, 0.9, 0.3, [0.5, -0.2, 0.0]).unwrap(),
            &probes(),
            h,
        )
        .unwrap();
        verify_analytic_partials(
            &vector_trig(2, vec![1.0, 0.5], [2.0, 1.0, 0.0], vec![0.0, 0.7]),
            &probes(),
            h,
        )
        .unwrap();
    }

    #[test]
    fn rotated_orthotropic_stays_symmetric() {
        let f = stiffness_rotated_orthotropic(4.0, 3.0, 1.2, 0.9, 0.3, [0.5, -0.2, 0.0]).unwrap();
        for &x in &probes() {
            assert!(check_symmetry(&f.value(x), 1e-12));
        }
    }

    #[test]
    fn triple_validation_accepts_good_and_rejects_bad() {
        let d = Domain::unit_square();
        let good = MaterialTriple::new(
            scalar_affine(2, 1.0, [0.2, 0.0, 0.0]),
            stiffness_isotropic_gradient(2, 2.0, 1.0, [0.3, 0.0, 0.0], [0.0, 0.1, 0.0]),
            metric_conformal_exp(2, 0.3, [1.0, 0.0, 0.0]),
        );
        let rep = good.validate(&d, 64, 1).unwrap();
        assert!(rep.min_delta > 0.0 && rep.min_rho > 0.0);

        // lambda drifts so negative that n lambda + 2 mu < 0 inside the domain
        let bad = MaterialTriple::new(
            scalar_constant(2, 1.0),
            stiffness_isotropic_gradient(2, -0.2, 0.3, [-3.0, 0.0, 0.0], [0.0, 0.0, 0.0]),
            metric_euclidean(2),
        );
        assert!(bad.validate(&d, 64, 1).is_err());

        let neg_rho = MaterialTriple::new(
            scalar_affine(2, 0.1, [-1.0, 0.0, 0.0]),
            stiffness_isotropic_gradient(2, 2.0, 1.0, [0.0; 3], [0.0; 3]),
            metric_euclidean(2),
        );
        assert!(matches!(
            neg_rho.validate(&d, 64, 1),
            Err(Error::Positivity(_))
        ));
    }
}
