//! Diffeomorphisms of the computational box and the pushforward laws for
//! densities, stiffness tensors, metrics, vectors and covectors, including
//! the determinant-weighted conformal variants.

use std::sync::Arc;

use crate::bump::BoxBump;
use crate::domain::{boundary_probes, interior_probes, Domain, Point};
use crate::error::{Error, Result};
use crate::field::{ScalarField, VectorField};
use crate::linalg::{rotation, Mat};
use crate::tensor::{MetricField, MetricValue, StiffnessField};

/// Inverse round-trip tolerance for map validation.
pub const TOL_INV: f64 = 1e-10;
/// Relative conformality tolerance.
pub const TOL_CONFORMAL: f64 = 1e-8;

type MapFn = Arc<dyn Fn(Point) -> Point + Send + Sync>;
type JacFn = Arc<dyn Fn(Point) -> Mat + Send + Sync>;

#[derive(Clone)]
enum Jacobian {
    Analytic(JacFn),
    Fd { h: f64 },
}

/// Orientation-preserving diffeomorphism of the box. When `collar_width` is
/// positive the map is the identity within that distance of the boundary.
#[derive(Clone)]
pub struct DiffeoMap {
    n: usize,
    domain: Domain,
    forward: MapFn,
    inverse: Option<MapFn>,
    jacobian: Jacobian,
    collar_width: f64,
    affine: Option<(Mat, Point)>,
    label: String,
}

impl DiffeoMap {
    pub fn new_analytic(
        domain: Domain,
        forward: impl Fn(Point) -> Point + Send + Sync + 'static,
        inverse: Option<MapFn>,
        jacobian: impl Fn(Point) -> Mat + Send + Sync + 'static,
        collar_width: f64,
        label: &str,
    ) -> Self {
        DiffeoMap {
            n: domain.dim(),
            domain,
            forward: Arc::new(forward),
            inverse,
            jacobian: Jacobian::Analytic(Arc::new(jacobian)),
            collar_width,
            affine: None,
            label: label.to_string(),
        }
    }

    /// Affine map x -> A x + b.
    pub fn new_affine(domain: Domain, a: Mat, b: Point, label: &str) -> Result<Self> {
        if a.det() <= 0.0 {
            return Err(Error::Jacobian(format!(
                "affine map must preserve orientation, det = {}",
                a.det()
            )));
        }
        let n = domain.dim();
        let ai = a.inverse()?;
        let fwd = move |x: Point| affine_apply(n, &a, &b, x);
        let inv = move |y: Point| {
            let mut d = [0.0; 3];
            for i in 0..n {
                d[i] = y[i] - b[i];
            }
            affine_apply(n, &ai, &[0.0; 3], d)
        };
        Ok(DiffeoMap {
            n,
            domain,
            forward: Arc::new(fwd),
            inverse: Some(Arc::new(inv)),
            jacobian: Jacobian::Analytic(Arc::new(move |_| a)),
            collar_width: 0.0,
            affine: Some((a, b)),
            label: label.to_string(),
        })
    }

    pub fn identity(domain: Domain) -> Self {
        let collar = domain.diameter();
        let n = domain.dim();
        let mut m = DiffeoMap::new_affine(domain, Mat::identity(n), [0.0; 3], "identity").unwrap();
        m.collar_width = collar;
        m
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn domain(&self) -> &Domain {
        &self.domain
    }

    pub fn collar_width(&self) -> f64 {
        self.collar_width
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn is_affine(&self) -> bool {
        self.affine.is_some()
    }

    pub fn is_identity(&self) -> bool {
        match &self.affine {
            Some((a, b)) => {
                a.sub(&Mat::identity(self.n)).max_abs() == 0.0
                    && b[..self.n].iter().all(|&v| v == 0.0)
            }
            None => false,
        }
    }

    #[inline]
    pub fn forward(&self, x: Point) -> Point {
        (self.forward)(x)
    }

    /// Inverse map: closed form when available, Newton iteration otherwise.
    pub fn inverse(&self, y: Point) -> Result<Point> {
        if let Some(inv) = &self.inverse {
            return Ok(inv(y));
        }
        let mut x = y;
        let scale = 1.0 + self.domain.diameter();
        for _ in 0..80 {
            let r = self.forward(x);
            let mut res = [0.0; 3];
            let mut rn = 0.0_f64;
            for i in 0..self.n {
                res[i] = r[i] - y[i];
                rn = rn.max(res[i].abs());
            }
            if rn < 1e-15 * scale {
                return Ok(x);
            }
            let j = self.jacobian(x);
            let ji = j.inverse()?;
            let step = ji.mul_vec(&res[..self.n]);
            for i in 0..self.n {
                x[i] -= step[i];
            }
        }
        Err(Error::Jacobian(format!(
            "inverse iteration did not converge for map `{}` at {:?}",
            self.label,
            &y[..self.n]
        )))
    }

    pub fn jacobian(&self, x: Point) -> Mat {
        match &self.jacobian {
            Jacobian::Analytic(f) => f(x),
            Jacobian::Fd { h } => {
                let mut m = Mat::zeros(self.n);
                for j in 0..self.n {
                    let mut xp = x;
                    xp[j] += h;
                    let mut xm = x;
                    xm[j] -= h;
                    let (fp, fm) = (self.forward(xp), self.forward(xm));
                    for i in 0..self.n {
                        m.set(i, j, (fp[i] - fm[i]) / (2.0 * h));
                    }
                }
                m
            }
        }
    }

    /// Same map with the Jacobian replaced by a centered difference of the
    /// forward map at step `h`.
    pub fn with_fd_jacobian(&self, h: f64) -> DiffeoMap {
        let mut out = self.clone();
        out.jacobian = Jacobian::Fd { h };
        out.affine = None; // forces composed pushforwards off the exact path
        out.label = format!("{}(fd-jac)", self.label);
        out
    }

    /// Range of det(Dphi) over deterministic probe points (audit output).
    pub fn det_jacobian_range(&self, probes: usize, seed: u64) -> (f64, f64) {
        let pts = interior_probes(&self.domain, probes, seed, 0.01);
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for &x in &pts {
            let d = self.jacobian(x).det();
            lo = lo.min(d);
            hi = hi.max(d);
        }
        (lo, hi)
    }

    /// Invariant check: inverse round trip, positive Jacobian determinant,
    /// and exact identity inside the collar.
    pub fn validate(&self, probes: usize, seed: u64) -> Result<()> {
        let pts = interior_probes(&self.domain, probes, seed, 0.01);
        for &x in &pts {
            let y = self.forward(x);
            let back = self.inverse(y)?;
            let err = (0..self.n)
                .map(|i| (back[i] - x[i]).abs())
                .fold(0.0_f64, f64::max);
            if err > TOL_INV {
                return Err(Error::Jacobian(format!(
                    "inverse round trip error {err} at {:?} for `{}`",
                    &x[..self.n],
                    self.label
                )));
            }
            let det = self.jacobian(x).det();
            if !(det > 0.0) {
                return Err(Error::Jacobian(format!(
                    "det Dphi = {det} not positive at {:?} for `{}`",
                    &x[..self.n],
                    self.label
                )));
            }
            if self.collar_width > 0.0 && self.domain.boundary_distance(x) < self.collar_width {
                let moved = (0..self.n)
                    .map(|i| (y[i] - x[i]).abs())
                    .fold(0.0_f64, f64::max);
                let jdev = self.jacobian(x).sub(&Mat::identity(self.n)).max_abs();
                if moved > 0.0 || jdev > 1e-12 {
                    return Err(Error::Jacobian(format!(
                        "map `{}` not the identity in its collar at {:?} (moved {moved}, jac dev {jdev})",
                        self.label,
                        &x[..self.n]
                    )));
                }
            }
        }
        Ok(())
    }
}

fn affine_apply(n: usize, a: &Mat, b: &Point, x: Point) -> Point {
    let mut y = [0.0; 3];
    for i in 0..n {
        let mut s = b[i];
        for j in 0..n {
            s += a.get(i, j) * x[j];
        }
        y[i] = s;
    }
    y
}

/// Composition f after g: x -> f(g(x)).
pub fn compose(f: &DiffeoMap, g: &DiffeoMap) -> DiffeoMap {
    assert_eq!(f.n, g.n);
    let n = f.n;
    let (f1, g1) = (f.clone(), g.clone());
    let (f2, g2) = (f.clone(), g.clone());
    let (f3, g3) = (f.clone(), g.clone());
    let affine = match (&f.affine, &g.affine) {
        (Some((fa, fb)), Some((ga, gb))) => {
            let a = fa.mul(ga);
            let mut b = *fb;
            let fgb = fa.mul_vec(&gb[..n]);
            for i in 0..n {
                b[i] += fgb[i];
            }
            Some((a, b))
        }
        _ => None,
    };
    let mut out = DiffeoMap {
        n,
        domain: g.domain,
        forward: Arc::new(move |x| f1.forward(g1.forward(x))),
        inverse: Some(Arc::new(move |y| {
            let mid = f2.inverse(y).expect("composed inverse");
            g2.inverse(mid).expect("composed inverse")
        })),
        jacobian: Jacobian::Analytic(Arc::new(move |x| {
            let gx = g3.forward(x);
            f3.jacobian(gx).mul(&g3.jacobian(x))
        })),
        collar_width: f.collar_width.min(g.collar_width),
        affine: None,
        label: format!("{}∘{}", f.label, g.label),
    };
    out.affine = affine;
    out
}

/// Positive gauge factor mu, optionally pinned to 1 on the boundary.
#[derive(Clone)]
pub struct GaugeFactor {
    pub mu: ScalarField,
    pub boundary_one: bool,
}

impl GaugeFactor {
    pub fn new(mu: ScalarField, boundary_one: bool) -> Self {
        GaugeFactor { mu, boundary_one }
    }

    pub fn validate(&self, domain: &Domain, seed: u64) -> Result<()> {
        for &x in interior_probes(domain, 128, seed, 0.005)
            .iter()
            .chain(boundary_probes(domain, 32, seed).iter())
        {
            let v = self.mu.value(x);
            if !(v > 0.0) {
                return Err(Error::Gauge(format!(
                    "gauge factor {v} not positive at {:?}",
                    &x[..domain.dim()]
                )));
            }
        }
        if self.boundary_one {
            for &x in &boundary_probes(domain, 64, seed) {
                let v = self.mu.value(x);
                if (v - 1.0).abs() > 1e-10 {
                    return Err(Error::Gauge(format!(
                        "gauge factor = {v} != 1 on boundary at {:?}",
                        &x[..domain.dim()]
                    )));
                }
            }
        }
        Ok(())
    }
}

// ---------------------------------------------------------------------------
// pushforwards
// ---------------------------------------------------------------------------

fn fd_step(phi: &DiffeoMap) -> f64 {
    1e-4 * phi.domain.diameter()
}

/// (phi_* rho)(y) = rho(phi^-1(y))
pub fn pushforward_scalar(rho: &ScalarField, phi: &DiffeoMap) -> ScalarField {
    if phi.is_identity() {
        return rho.clone();
    }
    let n = phi.n;
    if let Some((a, b)) = phi.affine {
        let ai = a.inverse().expect("affine jacobian");
        let (r1, r2) = (rho.clone(), rho.clone());
        let inv = move |y: Point| {
            let mut d = [0.0; 3];
            for i in 0..n {
                d[i] = y[i] - b[i];
            }
            affine_apply(n, &ai, &[0.0; 3], d)
        };
        let inv2 = inv;
        return ScalarField::analytic1(
            n,
            move |y| r1.value(inv(y)),
            move |y, a_| {
                let x = inv2(y);
                (0..n)
                    .map(|i| ai.get(i, a_) * r2.partial(x, i).expect("order"))
                    .sum()
            },
        );
    }
    let (p, r) = (phi.clone(), rho.clone());
    ScalarField::from_fn(
        n,
        move |y| r.value(p.inverse(y).expect("inverse")),
        fd_step(phi),
    )
}

/// (phi_* g)_{ab}(y) = g_{ij}(x) (Dphi^-1)^i_a (Dphi^-1)^j_b,  x = phi^-1(y)
pub fn pushforward_metric(g: &MetricField, phi: &DiffeoMap) -> MetricField {
    if phi.is_identity() {
        return g.clone();
    }
    let n = phi.n;
    let value_at = {
        let (p, gf) = (phi.clone(), g.clone());
        move |y: Point| -> MetricValue {
            let x = p.inverse(y).expect("inverse");
            let ji = p.jacobian(x).inverse().expect("jacobian");
            transform_metric(&gf.value(x), &ji)
        }
    };
    if let Some((a, _)) = phi.affine {
        let ai = a.inverse().expect("affine jacobian");
        let (p1, g1) = (phi.clone(), g.clone());
        return MetricField::analytic1(n, value_at, move |y, axis| {
            let x = p1.inverse(y).expect("inverse");
            let mut out = MetricValue::identity(n).scale(0.0);
            for i in 0..n {
                let dg = g1.partial(x, i).expect("order");
                let t = transform_metric(&dg, &ai);
                for r in 0..n {
                    for c in 0..n {
                        out.set(r, c, out.get(r, c) + ai.get(i, axis) * t.get(r, c));
                    }
                }
            }
            out
        });
    }
    MetricField::from_fn(n, value_at, fd_step(phi))
}

fn transform_metric(g: &MetricValue, ji: &Mat) -> MetricValue {
    // (Ji^T g Ji)_{ab} = g_{ij} Ji[i][a] Ji[j][b]
    let n = g.dim();
    let mut out = MetricValue::identity(n).scale(0.0);
    for a in 0..n {
        for b in 0..n {
            let mut s = 0.0;
            for i in 0..n {
                for j in 0..n {
                    s += g.get(i, j) * ji.get(i, a) * ji.get(j, b);
                }
            }
            out.set(a, b, s);
        }
    }
    out
}

/// Four Jacobian factors, one per slot, composed with phi^-1. Determinant
/// weight exponent `det_pow` covers the plain (0), square (-1-2/n) and black
/// (-2/n) variants.
fn pushforward_stiffness_weighted(
    c: &StiffnessField,
    phi: &DiffeoMap,
    det_pow: f64,
) -> StiffnessField {
    if phi.is_identity() && det_pow == 0.0 {
        return c.clone();
    }
    let n = phi.n;
    let value_at = {
        let (p, cf) = (phi.clone(), c.clone());
        move |y: Point| {
            let x = p.inverse(y).expect("inverse");
            let j = p.jacobian(x);
            let w = if det_pow == 0.0 { 1.0 } else { j.det().powf(det_pow) };
            cf.value(x).contract4(&j).scale(w)
        }
    };
    if let Some((a, _)) = phi.affine {
        let ai = a.inverse().expect("affine jacobian");
        let w = if det_pow == 0.0 { 1.0 } else { a.det().powf(det_pow) };
        let (p1, c1) = (phi.clone(), c.clone());
        return StiffnessField::analytic1(n, value_at, move |y, axis| {
            let x = p1.inverse(y).expect("inverse");
            let mut acc = c1.value(x).scale(0.0);
            for i in 0..n {
                let dc = c1.partial(x, i).expect("order");
                let t = dc.contract4(&a).scale(w * ai.get(i, axis));
                acc = crate::field::FieldValue::lin_comb(&[(1.0, &acc), (1.0, &t)]);
            }
            acc
        });
    }
    StiffnessField::from_fn(n, value_at, fd_step(phi))
}

/// Standard tensor pushforward of the stiffness field (four Jacobian
/// factors). Preserves the minor and major symmetries exactly.
pub fn pushforward_stiffness(c: &StiffnessField, phi: &DiffeoMap) -> StiffnessField {
    pushforward_stiffness_weighted(c, phi, 0.0)
}

/// (phi_* u)^a(y) = (Dphi)^a_m u^m at x = phi^-1(y)
pub fn pushforward_vector(u: &VectorField, phi: &DiffeoMap) -> VectorField {
    if phi.is_identity() {
        return u.clone();
    }
    let n = phi.n;
    if let Some((a, _)) = phi.affine {
        let ai = a.inverse().expect("affine jacobian");
        let (p1, u1) = (phi.clone(), u.clone());
        let (p2, u2) = (phi.clone(), u.clone());
        let (p3, u3) = (phi.clone(), u.clone());
        return VectorField::analytic2(
            n,
            move |y| {
                let x = p1.inverse(y).expect("inverse");
                a.mul_vec(&u1.value(x))
            },
            move |y, axis| {
                let x = p2.inverse(y).expect("inverse");
                let mut acc = vec![0.0; n];
                for i in 0..n {
                    let du = u2.partial(x, i).expect("order");
                    let t = a.mul_vec(&du);
                    for r in 0..n {
                        acc[r] += ai.get(i, axis) * t[r];
                    }
                }
                acc
            },
            move |y, ax1, ax2| {
                let x = p3.inverse(y).expect("inverse");
                let mut acc = vec![0.0; n];
                for i in 0..n {
                    for j in 0..n {
                        let d2u = u3.partial2(x, i, j).expect("order");
                        let t = a.mul_vec(&d2u);
                        for r in 0..n {
                            acc[r] += ai.get(i, ax1) * ai.get(j, ax2) * t[r];
                        }
                    }
                }
                acc
            },
        );
    }
    let (p, uf) = (phi.clone(), u.clone());
    VectorField::from_fn(
        n,
        move |y| {
            let x = p.inverse(y).expect("inverse");
            p.jacobian(x).mul_vec(&uf.value(x))
        },
        fd_step(phi),
    )
}

/// (phi_* nu)_a(y) = nu_j (Dphi^-1)^j_a at x = phi^-1(y)
pub fn pushforward_covector(nu: &VectorField, phi: &DiffeoMap) -> VectorField {
    if phi.is_identity() {
        return nu.clone();
    }
    let n = phi.n;
    let (p, nf) = (phi.clone(), nu.clone());
    VectorField::from_fn(
        n,
        move |y| {
            let x = p.inverse(y).expect("inverse");
            let ji = p.jacobian(x).inverse().expect("jacobian");
            let v = nf.value(x);
            (0..n)
                .map(|a| (0..n).map(|j| v[j] * ji.get(j, a)).sum())
                .collect()
        },
        fd_step(phi),
    )
}

/// True iff Dphi^T Dphi = det(Dphi)^{2/n} I to relative tolerance at every
/// probe point (Jacobian is a scalar times a rotation).
pub fn is_conformal(phi: &DiffeoMap, tol: f64, probes: usize, seed: u64) -> bool {
    let pts = interior_probes(&phi.domain, probes, seed, 0.01);
    let n = phi.n;
    for &x in &pts {
        let j = phi.jacobian(x);
        let d = j.det();
        if !(d > 0.0) {
            return false;
        }
        let jtj = j.transpose().mul(&j);
        let target = Mat::identity(n).scale(d.powf(2.0 / n as f64));
        let scale = j.frobenius_norm();
        if jtj.sub(&target).frobenius_norm() > tol * scale * scale {
            return false;
        }
    }
    true
}

fn require_conformal(phi: &DiffeoMap) -> Result<()> {
    if !is_conformal(phi, TOL_CONFORMAL, 64, 0) {
        return Err(Error::Conformality(format!(
            "map `{}` is not conformal",
            phi.label
        )));
    }
    Ok(())
}

/// Conformal pushforward of the pair (rho, c):
///   square c = det(Dphi)^{-1-2/n} (four-Jacobian pushforward)
///   square rho = det(Dphi)^{-1} rho, both composed with phi^-1.
pub fn square_pushforward(
    rho: &ScalarField,
    c: &StiffnessField,
    phi: &DiffeoMap,
) -> Result<(ScalarField, StiffnessField)> {
    require_conformal(phi)?;
    let n = phi.n as f64;
    let c_out = pushforward_stiffness_weighted(c, phi, -1.0 - 2.0 / n);
    let rho_out = if phi.is_identity() {
        rho.clone()
    } else if let Some((a, _)) = phi.affine {
        let det = a.det();
        pushforward_scalar(&rho.scaled_by(&ScalarField::constant(phi.n, 1.0 / det)), phi)
    } else {
        let (p, rf) = (phi.clone(), rho.clone());
        ScalarField::from_fn(
            phi.n,
            move |y: Point| {
                let x = p.inverse(y).expect("inverse");
                rf.value(x) / p.jacobian(x).det()
            },
            fd_step(phi),
        )
    };
    Ok((rho_out, c_out))
}

/// Conformal pushforward of c alone: det(Dphi)^{-2/n} times the
/// four-Jacobian pushforward, composed with phi^-1.
pub fn black_pushforward(c: &StiffnessField, phi: &DiffeoMap) -> Result<StiffnessField> {
    require_conformal(phi)?;
    let n = phi.n as f64;
    Ok(pushforward_stiffness_weighted(c, phi, -2.0 / n))
}

// ---------------------------------------------------------------------------
// builtin families
// ---------------------------------------------------------------------------

/// phi(x) = s R x + b with s > 0 and R a rotation (angle about `axis` in 3-D).
pub fn linear_conformal(
    domain: Domain,
    s: f64,
    angle: f64,
    axis: usize,
    b: Point,
) -> Result<DiffeoMap> {
    if !(s > 0.0) {
        return Err(Error::Jacobian(format!("scale {s} must be positive")));
    }
    let n = domain.dim();
    let a = rotation(n, angle, axis).scale(s);
    DiffeoMap::new_affine(domain, a, b, "linear_conformal")
}

/// Boundary-fixing displacement along `dir`: phi(x) = x + a psi(x) dir with
/// psi the interior box bump vanishing within `collar` of the boundary.
/// Rejected at construction if det(Dphi) < 1/2 anywhere on a probe grid.
pub fn bump_displacement(
    domain: Domain,
    amplitude: f64,
    dir: Point,
    collar: f64,
) -> Result<DiffeoMap> {
    let n = domain.dim();
    if collar <= 0.0 || (0..n).any(|a| 2.0 * collar >= domain.length(a)) {
        return Err(Error::Jacobian(format!(
            "collar width {collar} leaves no interior"
        )));
    }
    if amplitude == 0.0 {
        return Ok(DiffeoMap::identity(domain));
    }
    let bump = Arc::new(BoxBump::interior(&domain, collar));
    let (b1, b2) = (bump.clone(), bump);
    let forward = move |x: Point| {
        let v = amplitude * b1.value(x);
        let mut y = x;
        for i in 0..n {
            y[i] += v * dir[i];
        }
        y
    };
    let jac = move |x: Point| {
        let mut m = Mat::identity(n);
        for i in 0..n {
            for j in 0..n {
                m.set(i, j, m.get(i, j) + amplitude * dir[i] * b2.d1(x, j));
            }
        }
        m
    };
    let map = DiffeoMap::new_analytic(domain, forward, None, jac, collar, "bump_displacement");
    // rank-one update: det = 1 + a dir . grad(psi); probe densely
    let pts = interior_probes(&map.domain, 512, 1, 0.002);
    for &x in &pts {
        let det = map.jacobian(x).det();
        if det < 0.5 {
            return Err(Error::Jacobian(format!(
                "bump amplitude {amplitude} too large: det Dphi = {det} at {:?}",
                &x[..n]
            )));
        }
    }
    Ok(map)
}

/// 2-D conformal sample from the complex square map: phi(z) = z + a z^2, for
/// boundary-free use on small neighborhoods.
pub fn holomorphic_sample(domain: Domain, a: f64) -> Result<DiffeoMap> {
    if domain.dim() != 2 {
        return Err(Error::Dimension(domain.dim()));
    }
    let forward = move |x: Point| {
        [
            x[0] + a * (x[0] * x[0] - x[1] * x[1]),
            x[1] + 2.0 * a * x[0] * x[1],
            0.0,
        ]
    };
    let jac = move |x: Point| {
        Mat::from_rows(
            2,
            &[
                &[1.0 + 2.0 * a * x[0], -2.0 * a * x[1]],
                &[2.0 * a * x[1], 1.0 + 2.0 * a * x[0]],
            ],
        )
    };
    let map = DiffeoMap::new_analytic(domain, forward, None, jac, 0.0, "holomorphic_sample");
    let (lo, _) = map.det_jacobian_range(256, 1);
    if lo <= 0.1 {
        return Err(Error::Jacobian(format!(
            "holomorphic sample amplitude {a} degenerates on the domain (min det {lo})"
        )));
    }
    Ok(map)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::material::{
        metric_conformal_exp, metric_euclidean, scalar_affine, stiffness_isotropic,
        vector_quadratic,
    };
    use crate::tensor::{check_symmetry, isotropic_stiffness};
    use approx::assert_relative_eq;

    fn unit() -> Domain {
        Domain::unit_square()
    }

    fn doubling() -> DiffeoMap {
        DiffeoMap::new_affine(unit(), Mat::identity(2).scale(2.0), [0.0; 3], "x2").unwrap()
    }

    #[test]
    fn metric_pushforward_doubling() {
        let g = metric_euclidean(2);
        let pg = pushforward_metric(&g, &doubling());
        let v = pg.value([0.4, 0.7, 0.0]);
        assert_relative_eq!(v.get(0, 0), 0.25);
        assert_relative_eq!(v.get(1, 1), 0.25);
        assert_relative_eq!(v.get(0, 1), 0.0);
        // conformal law: phi_* g_E = det(Dphi)^{-2/n} g_E, det = 4, n = 2
        assert_relative_eq!(v.get(0, 0), 4.0_f64.powf(-1.0));
    }

    #[test]
    fn identity_pushforward_is_exact() {
        let id = DiffeoMap::identity(unit());
        let g = metric_conformal_exp(2, 0.4, [1.0, 0.0, 0.0]);
        let pg = pushforward_metric(&g, &id);
        let x = [0.3, 0.8, 0.0];
        assert_eq!(pg.value(x).get(0, 0), g.value(x).get(0, 0));
        let c = stiffness_isotropic(2, 2.0, 1.0).unwrap();
        let pc = pushforward_stiffness(&c, &id);
        assert_eq!(pc.value(x).get(0, 0, 0, 0), 4.0);
    }

    #[test]
    fn stiffness_pushforward_doubling_and_rotation() {
        let c = stiffness_isotropic(2, 2.0, 1.0).unwrap();
        let pc = pushforward_stiffness(&c, &doubling());
        let v = pc.value([0.4, 0.7, 0.0]);
        assert_relative_eq!(v.get(0, 0, 0, 0), 16.0 * 4.0, epsilon = 1e-12);
        assert!(check_symmetry(&v, 1e-12));
        // isotropic stiffness is invariant under rotations
        let rot = linear_conformal(unit(), 1.0, 0.6, 2, [0.0; 3]).unwrap();
        let pr = pushforward_stiffness(&c, &rot);
        let w = pr.value([0.3, 0.3, 0.0]);
        let base = isotropic_stiffness(2.0, 1.0, 2).unwrap();
        for i in 0..2 {
            for j in 0..2 {
                for k in 0..2 {
                    for l in 0..2 {
                        assert_relative_eq!(
                            w.get(i, j, k, l),
                            base.get(i, j, k, l),
                            epsilon = 1e-12
                        );
                    }
                }
            }
        }
    }

    #[test]
    fn scalar_pushforward_examples() {
        let rho = scalar_affine(2, 0.0, [1.0, 0.0, 0.0]); // rho = x1
        let p = pushforward_scalar(&rho, &doubling());
        assert_relative_eq!(p.value([0.8, 0.2, 0.0]), 0.4);
        let c = ScalarField::constant(2, 3.5);
        let pc = pushforward_scalar(&c, &doubling());
        assert_relative_eq!(pc.value([0.1, 0.9, 0.0]), 3.5);
    }

    #[test]
    fn vector_covector_pushforward_and_pairing() {
        let phi = doubling();
        let u = VectorField::constant(2, vec![1.0, 0.0]);
        let nu = VectorField::constant(2, vec![1.0, 0.0]);
        let pu = pushforward_vector(&u, &phi);
        let pn = pushforward_covector(&nu, &phi);
        let y = [0.5, 0.5, 0.0];
        assert_relative_eq!(pu.value(y)[0], 2.0);
        assert_relative_eq!(pn.value(y)[0], 0.5);
        // pairing preserved
        let pair: f64 = pu.value(y).iter().zip(pn.value(y).iter()).map(|(a, b)| a * b).sum();
        assert_relative_eq!(pair, 1.0);
        // rotation by 90 degrees sends (1,0) to (0,1)
        let rot = linear_conformal(unit(), 1.0, std::f64::consts::FRAC_PI_2, 2, [0.0; 3]).unwrap();
        let pr = pushforward_vector(&u, &rot);
        let v = pr.value([0.0, 0.5, 0.0]);
        assert_relative_eq!(v[0], 0.0, epsilon = 1e-15);
        assert_relative_eq!(v[1], 1.0, epsilon = 1e-15);
    }

    #[test]
    fn square_and_black_pushforward_doubling() {
        let c = stiffness_isotropic(2, 2.0, 1.0).unwrap();
        let rho = ScalarField::constant(2, 1.0);
        let phi = doubling();
        let (prho, pc) = square_pushforward(&rho, &c, &phi).unwrap();
        let y = [0.4, 0.6, 0.0];
        // det = 4, exponent -1-2/n = -2: 4^{-2} * 16 c = c
        assert_relative_eq!(pc.value(y).get(0, 0, 0, 0), 4.0, epsilon = 1e-12);
        assert_relative_eq!(prho.value(y), 0.25, epsilon = 1e-14);
        // black: 4^{-1} * 16 c = 4 c
        let bc = black_pushforward(&c, &phi).unwrap();
        assert_relative_eq!(bc.value(y).get(0, 0, 0, 0), 16.0, epsilon = 1e-12);
        // black = (square of 1)^{-1} square(c)
        let one = ScalarField::constant(2, 1.0);
        let (sq_one, sq_c) = square_pushforward(&one, &c, &phi).unwrap();
        assert_relative_eq!(
            bc.value(y).get(1, 1, 1, 1),
            sq_c.value(y).get(1, 1, 1, 1) / sq_one.value(y),
            epsilon = 1e-12
        );
        // rotation: determinant factor 1, black equals the plain pushforward
        let rot = linear_conformal(unit(), 1.0, 0.8, 2, [0.0; 3]).unwrap();
        let b2 = black_pushforward(&c, &rot).unwrap();
        let p2 = pushforward_stiffness(&c, &rot);
        assert_relative_eq!(
            b2.value(y).get(0, 1, 0, 1),
            p2.value(y).get(0, 1, 0, 1),
            epsilon = 1e-14
        );
    }

    #[test]
    fn conformality_classification() {
        let lin = linear_conformal(unit(), 2.0, 0.3, 2, [0.1, 0.0, 0.0]).unwrap();
        assert!(is_conformal(&lin, TOL_CONFORMAL, 64, 0));
        let holo = holomorphic_sample(unit(), 0.2).unwrap();
        assert!(is_conformal(&holo, TOL_CONFORMAL, 64, 0));
        let shear =
            DiffeoMap::new_affine(unit(), Mat::from_rows(2, &[&[1.0, 1.0], &[0.0, 1.0]]), [0.0; 3], "shear")
                .unwrap();
        assert!(!is_conformal(&shear, TOL_CONFORMAL, 64, 0));
        assert!(square_pushforward(
            &ScalarField::constant(2, 1.0),
            &stiffness_isotropic(2, 2.0, 1.0).unwrap(),
            &shear
        )
        .is_err());
    }

    #[test]
    fn bump_displacement_basics() {
        let d = unit();
        let phi = bump_displacement(d, 0.03, [1.0, 0.5, 0.0], 0.125).unwrap();
        phi.validate(128, 3).unwrap();
        // inside the collar the map is exactly the identity
        let x = [0.05, 0.4, 0.0];
        assert_eq!(phi.forward(x), x);
        // zero amplitude is the identity family
        let id = bump_displacement(unit(), 0.0, [1.0, 0.0, 0.0], 0.125).unwrap();
        assert!(id.is_identity());
        // excessive amplitude is rejected at construction
        assert!(bump_displacement(unit(), 5.0, [1.0, 0.0, 0.0], 0.125).is_err());
    }

    #[test]
    fn linear_conformal_jacobian() {
        let phi = linear_conformal(unit(), 2.0, 0.0, 2, [0.0; 3]).unwrap();
        let j = phi.jacobian([0.2, 0.9, 0.0]);
        assert_relative_eq!(j.get(0, 0), 2.0);
        assert_relative_eq!(j.get(1, 1), 2.0);
        assert_relative_eq!(j.get(0, 1), 0.0);
    }

    #[test]
    fn newton_inverse_round_trip() {
        let phi = bump_displacement(unit(), 0.04, [0.7, -0.4, 0.0], 0.125).unwrap();
        let x = [0.43, 0.58, 0.0];
        let y = phi.forward(x);
        let back = phi.inverse(y).unwrap();
        for i in 0..2 {
            assert_relative_eq!(back[i], x[i], epsilon = 1e-12);
        }
        let holo = holomorphic_sample(unit(), 0.15).unwrap();
        let y2 = holo.forward(x);
        let b2 = holo.inverse(y2).unwrap();
        for i in 0..2 {
            assert_relative_eq!(b2[i], x[i], epsilon = 1e-12);
        }
    }

    #[test]
    fn functoriality_of_pushforwards() {
        // phi o eta pushforward equals pushforward over phi of pushforward
        // over eta, all three tensor ranks
        let eta = linear_conformal(unit(), 1.5, 0.4, 2, [0.05, -0.1, 0.0]).unwrap();
        let phi = holomorphic_sample(unit(), 0.1).unwrap();
        let comp = compose(&phi, &eta);
        let rho = scalar_affine(2, 1.0, [0.5, 0.2, 0.0]);
        let g = metric_conformal_exp(2, 0.3, [1.0, 0.0, 0.0]);
        let c = stiffness_isotropic(2, 2.0, 1.0).unwrap();
        let y = [0.52, 0.47, 0.0];

        let a = pushforward_scalar(&rho, &comp).value(y);
        let b = pushforward_scalar(&pushforward_scalar(&rho, &eta), &phi).value(y);
        assert_relative_eq!(a, b, max_relative = 1e-9);

        let ga = pushforward_metric(&g, &comp).value(y);
        let gb = pushforward_metric(&pushforward_metric(&g, &eta), &phi).value(y);
        for i in 0..2 {
            for j in 0..2 {
                assert_relative_eq!(ga.get(i, j), gb.get(i, j), max_relative = 1e-8, epsilon = 1e-10);
            }
        }

        let ca = pushforward_stiffness(&c, &comp).value(y);
        let cb = pushforward_stiffness(&pushforward_stiffness(&c, &eta), &phi).value(y);
        for i in 0..2 {
            for j in 0..2 {
                assert_relative_eq!(
                    ca.get(i, j, i, j),
                    cb.get(i, j, i, j),
                    max_relative = 1e-8,
                    epsilon = 1e-10
                );
            }
        }
    }

    #[test]
    fn pushforward_then_inverse_is_identity() {
        let phi = holomorphic_sample(unit(), 0.12).unwrap();
        // build the inverse map explicitly from closures
        let inv_map = {
            let p = phi.clone();
            let p2 = phi.clone();
            let pj = phi.clone();
            DiffeoMap::new_analytic(
                unit(),
                move |y| p.inverse(y).expect("inv"),
                Some(Arc::new(move |x| p2.forward(x))),
                move |y| {
                    let x = pj.inverse(y).expect("inv");
                    pj.jacobian(x).inverse().expect("jac")
                },
                0.0,
                "holo_inv",
            )
        };
        let g = metric_conformal_exp(2, 0.25, [0.0, 1.0, 0.0]);
        let round = pushforward_metric(&pushforward_metric(&g, &phi), &inv_map);
        let x = [0.45, 0.55, 0.0];
        for i in 0..2 {
            for j in 0..2 {
                assert_relative_eq!(
                    round.value(x).get(i, j),
                    g.value(x).get(i, j),
                    max_relative = 1e-8,
                    epsilon = 1e-10
                );
            }
        }
    }

    #[test]
    fn collar_fields_unchanged_under_bump() {
        let phi = bump_displacement(unit(), 0.035, [1.0, 0.3, 0.0], 0.125).unwrap();
        let c = stiffness_isotropic(2, 2.0, 1.0).unwrap();
        let g = metric_conformal_exp(2, 0.3, [1.0, 0.2, 0.0]);
        let rho = scalar_affine(2, 1.0, [0.4, 0.0, 0.0]);
        let u = vector_quadratic(
            2,
            vec![0.1, 0.0],
            vec![1.0, 0.2, 0.0, 0.5],
            vec![0.0; 8],
        );
        // a point in the collar: everything equals the original exactly
        let x = [0.06, 0.5, 0.0];
        assert_eq!(pushforward_scalar(&rho, &phi).value(x), rho.value(x));
        assert_eq!(
            pushforward_metric(&g, &phi).value(x).get(0, 1),
            g.value(x).get(0, 1)
        );
        assert_eq!(
            pushforward_stiffness(&c, &phi).value(x).get(0, 0, 1, 1),
            c.value(x).get(0, 0, 1, 1)
        );
        assert_eq!(pushforward_vector(&u, &phi).value(x)[1], u.value(x)[1]);
    }

    #[test]
    fn pushforward_preserves_symmetry_and_positivity_sign() {
        use crate::tensor::check_positivity;
        let phi = holomorphic_sample(unit(), 0.1).unwrap();
        let c = stiffness_isotropic(2, 2.0, 1.0).unwrap();
        let g = metric_euclidean(2);
        let pc = pushforward_stiffness(&c, &phi);
        let pg = pushforward_metric(&g, &phi);
        for &y in &interior_probes(&unit(), 16, 4, 0.1) {
            let cv = pc.value(y);
            assert!(check_symmetry(&cv, 1e-10));
            let delta = check_positivity(&cv, &pg.value(y)).unwrap();
            assert!(delta > 0.0, "pushforward must keep positivity, delta = {delta}");
        }
    }
}
