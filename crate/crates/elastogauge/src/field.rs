//! Point-evaluable smooth fields with analytic or finite-difference
//! derivatives. Every material quantity (density, stiffness, metric, gauge
//! factors, displacement test fields) is carried as a `SmoothField` so the
//! operator layer never cares where values come from.

use std::sync::Arc;

use crate::domain::Point;
use crate::error::{Error, Result};

/// Values a field can take: closed under linear combination, with a max norm
/// for tolerance checks.
pub trait FieldValue: Clone + Send + Sync + 'static {
    fn lin_comb(terms: &[(f64, &Self)]) -> Self;
    fn max_abs(&self) -> f64;
}

impl FieldValue for f64 {
    fn lin_comb(terms: &[(f64, &Self)]) -> Self {
        terms.iter().map(|(a, v)| a * **v).sum()
    }
    fn max_abs(&self) -> f64 {
        self.abs()
    }
}

impl FieldValue for Vec<f64> {
    fn lin_comb(terms: &[(f64, &Self)]) -> Self {
        let len = terms[0].1.len();
        let mut out = vec![0.0; len];
        for (a, v) in terms {
            debug_assert_eq!(v.len(), len);
            for (o, x) in out.iter_mut().zip(v.iter()) {
                *o += a * x;
            }
        }
        out
    }
    fn max_abs(&self) -> f64 {
        self.iter().fold(0.0_f64, |m, x| m.max(x.abs()))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DerivativeMode {
    Analytic,
    Fd,
}

type EvalFn<V> = Arc<dyn Fn(Point) -> V + Send + Sync>;
type Partial1Fn<V> = Arc<dyn Fn(Point, usize) -> V + Send + Sync>;
type Partial2Fn<V> = Arc<dyn Fn(Point, usize, usize) -> V + Send + Sync>;

/// A smooth field on an n-dimensional domain. Immutable and cheap to clone
/// (closures are shared); safe to evaluate from many threads.
#[derive(Clone)]
pub struct SmoothField<V> {
    n: usize,
    eval: EvalFn<V>,
    partial1: Option<Partial1Fn<V>>,
    partial2: Option<Partial2Fn<V>>,
    h_fd: f64,
    max_order: u8,
}

/// Default centered-difference step: 1e-4 of a unit-scale domain diameter.
/// Composed fields scale it by the actual diameter at construction.
pub const H_FD_REL: f64 = 1e-4;

impl<V: FieldValue> SmoothField<V> {
    /// Field with analytic first partials.
    pub fn analytic1(
        n: usize,
        eval: impl Fn(Point) -> V + Send + Sync + 'static,
        partial1: impl Fn(Point, usize) -> V + Send + Sync + 'static,
    ) -> Self {
        SmoothField {
            n,
            eval: Arc::new(eval),
            partial1: Some(Arc::new(partial1)),
            partial2: None,
            h_fd: H_FD_REL,
            max_order: 2,
        }
    }

    /// Field with analytic first and second partials.
    pub fn analytic2(
        n: usize,
        eval: impl Fn(Point) -> V + Send + Sync + 'static,
        partial1: impl Fn(Point, usize) -> V + Send + Sync + 'static,
        partial2: impl Fn(Point, usize, usize) -> V + Send + Sync + 'static,
    ) -> Self {
        SmoothField {
            n,
            eval: Arc::new(eval),
            partial1: Some(Arc::new(partial1)),
            partial2: Some(Arc::new(partial2)),
            h_fd: H_FD_REL,
            max_order: 2,
        }
    }

    /// Field whose derivatives are taken by centered differences with step
    /// `h_fd` (absolute).
    pub fn from_fn(n: usize, eval: impl Fn(Point) -> V + Send + Sync + 'static, h_fd: f64) -> Self {
        SmoothField {
            n,
            eval: Arc::new(eval),
            partial1: None,
            partial2: None,
            h_fd,
            max_order: 2,
        }
    }

    pub fn constant(n: usize, v: V) -> Self {
        let v1 = v.clone();
        let zero = V::lin_comb(&[(0.0, &v)]);
        SmoothField::analytic2(
            n,
            move |_| v1.clone(),
            {
                let z = zero.clone();
                move |_, _| z.clone()
            },
            move |_, _, _| zero.clone(),
        )
    }

    pub fn with_max_order(mut self, order: u8) -> Self {
        self.max_order = order;
        self
    }

    pub fn with_h_fd(mut self, h: f64) -> Self {
        self.h_fd = h;
        self
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn h_fd(&self) -> f64 {
        self.h_fd
    }

    pub fn max_order(&self) -> u8 {
        self.max_order
    }

    pub fn mode(&self) -> DerivativeMode {
        if self.partial1.is_some() {
            DerivativeMode::Analytic
        } else {
            DerivativeMode::Fd
        }
    }

    #[inline]
    pub fn value(&self, x: Point) -> V {
        (self.eval)(x)
    }

    /// First partial derivative along axis `j`.
    pub fn partial(&self, x: Point, j: usize) -> Result<V> {
        if self.max_order < 1 {
            return Err(Error::FieldOrder("field provides no derivatives".into()));
        }
        if let Some(p) = &self.partial1 {
            return Ok(p(x, j));
        }
        Ok(self.fd_partial(x, j))
    }

    /// Second partial derivative along axes `j`, `k`.
    pub fn partial2(&self, x: Point, j: usize, k: usize) -> Result<V> {
        if self.max_order < 2 {
            return Err(Error::FieldOrder(
                "field provides first derivatives only".into(),
            ));
        }
        if let Some(p) = &self.partial2 {
            return Ok(p(x, j, k));
        }
        if let Some(p1) = &self.partial1 {
            // differentiate the analytic first partial once by FD
            let h = self.h_fd;
            let mut xp = x;
            xp[k] += h;
            let mut xm = x;
            xm[k] -= h;
            let fp = p1(xp, j);
            let fm = p1(xm, j);
            return Ok(V::lin_comb(&[(0.5 / h, &fp), (-0.5 / h, &fm)]));
        }
        Ok(self.fd_partial2(x, j, k))
    }

    pub fn fd_partial(&self, x: Point, j: usize) -> V {
        let h = self.h_fd;
        let mut xp = x;
        xp[j] += h;
        let mut xm = x;
        xm[j] -= h;
        let fp = (self.eval)(xp);
        let fm = (self.eval)(xm);
        V::lin_comb(&[(0.5 / h, &fp), (-0.5 / h, &fm)])
    }

    fn fd_partial2(&self, x: Point, j: usize, k: usize) -> V {
        let h = self.h_fd;
        if j == k {
            let mut xp = x;
            xp[j] += h;
            let mut xm = x;
            xm[j] -= h;
            let fp = (self.eval)(xp);
            let f0 = (self.eval)(x);
            let fm = (self.eval)(xm);
            let s = 1.0 / (h * h);
            V::lin_comb(&[(s, &fp), (-2.0 * s, &f0), (s, &fm)])
        } else {
            let mut xpp = x;
            xpp[j] += h;
            xpp[k] += h;
            let mut xpm = x;
            xpm[j] += h;
            xpm[k] -= h;
            let mut xmp = x;
            xmp[j] -= h;
            xmp[k] += h;
            let mut xmm = x;
            xmm[j] -= h;
            xmm[k] -= h;
            let s = 0.25 / (h * h);
            let (a, b, c, d) = (
                (self.eval)(xpp),
                (self.eval)(xpm),
                (self.eval)(xmp),
                (self.eval)(xmm),
            );
            V::lin_comb(&[(s, &a), (-s, &b), (-s, &c), (s, &d)])
        }
    }

    /// Pointwise linear combination of two fields, with derivative chaining.
    pub fn lin_comb_fields(a: f64, fa: &SmoothField<V>, b: f64, fb: &SmoothField<V>) -> Self {
        assert_eq!(fa.n, fb.n);
        let analytic = fa.partial1.is_some() && fb.partial1.is_some();
        let (ea, eb) = (fa.clone(), fb.clone());
        let eval = move |x: Point| V::lin_comb(&[(a, &ea.value(x)), (b, &eb.value(x))]);
        if analytic {
            let (pa, pb) = (fa.clone(), fb.clone());
            let (qa, qb) = (fa.clone(), fb.clone());
            SmoothField::analytic2(
                fa.n,
                eval,
                move |x, j| {
                    V::lin_comb(&[
                        (a, &pa.partial(x, j).expect("order")),
                        (b, &pb.partial(x, j).expect("order")),
                    ])
                },
                move |x, j, k| {
                    V::lin_comb(&[
                        (a, &qa.partial2(x, j, k).expect("order")),
                        (b, &qb.partial2(x, j, k).expect("order")),
                    ])
                },
            )
            .with_h_fd(fa.h_fd)
        } else {
            SmoothField::from_fn(fa.n, eval, fa.h_fd.min(fb.h_fd))
        }
    }

    /// Product with a scalar field, derivatives by the product rule when both
    /// factors are analytic.
    pub fn scaled_by(&self, s: &SmoothField<f64>) -> Self {
        assert_eq!(self.n, s.dim());
        let analytic = self.partial1.is_some() && s.partial1.is_some();
        let (f0, s0) = (self.clone(), s.clone());
        let eval = move |x: Point| {
            let v = f0.value(x);
            V::lin_comb(&[(s0.value(x), &v)])
        };
        if analytic {
            let (f1, s1) = (self.clone(), s.clone());
            let (f2, s2) = (self.clone(), s.clone());
            SmoothField::analytic2(
                self.n,
                eval,
                move |x, j| {
                    let v = f1.value(x);
                    let dv = f1.partial(x, j).expect("order");
                    let sv = s1.value(x);
                    let ds = s1.partial(x, j).expect("order");
                    V::lin_comb(&[(ds, &v), (sv, &dv)])
                },
                move |x, j, k| {
                    let v = f2.value(x);
                    let dvj = f2.partial(x, j).expect("order");
                    let dvk = f2.partial(x, k).expect("order");
                    let dvjk = f2.partial2(x, j, k).expect("order");
                    let sv = s2.value(x);
                    let dsj = s2.partial(x, j).expect("order");
                    let dsk = s2.partial(x, k).expect("order");
                    let dsjk = s2.partial2(x, j, k).expect("order");
                    V::lin_comb(&[(dsjk, &v), (dsj, &dvk), (dsk, &dvj), (sv, &dvjk)])
                },
            )
            .with_h_fd(self.h_fd)
        } else {
            SmoothField::from_fn(self.n, eval, self.h_fd).with_max_order(self.max_order)
        }
    }
}

impl SmoothField<f64> {
    /// Pointwise power of a strictly positive or strictly negative scalar
    /// field, with chain-rule derivatives.
    pub fn powf_field(&self, p: f64) -> SmoothField<f64> {
        let analytic = self.partial1.is_some();
        let s0 = self.clone();
        let eval = move |x: Point| s0.value(x).powf(p);
        if analytic {
            let s1 = self.clone();
            let s2 = self.clone();
            SmoothField::analytic2(
                self.n,
                eval,
                move |x, j| {
                    let v = s1.value(x);
                    p * v.powf(p - 1.0) * s1.partial(x, j).expect("order")
                },
                move |x, j, k| {
                    let v = s2.value(x);
                    let dj = s2.partial(x, j).expect("order");
                    let dk = s2.partial(x, k).expect("order");
                    let djk = s2.partial2(x, j, k).expect("order");
                    p * (p - 1.0) * v.powf(p - 2.0) * dj * dk + p * v.powf(p - 1.0) * djk
                },
            )
            .with_h_fd(self.h_fd)
        } else {
            SmoothField::from_fn(self.n, eval, self.h_fd)
        }
    }

    /// Pointwise product of scalar fields.
    pub fn product(&self, other: &SmoothField<f64>) -> SmoothField<f64> {
        other.scaled_by(self)
    }
}

pub type ScalarField = SmoothField<f64>;
pub type VectorField = SmoothField<Vec<f64>>;

/// Checks that analytic first partials of a field agree with centered
/// differences at second order: the FD error must shrink by a factor in
/// [3, 5] when the step is halved (ratio 4 expected), unless it is already
/// at rounding level.
pub fn verify_analytic_partials<V: FieldValue>(
    field: &SmoothField<V>,
    probes: &[Point],
    h: f64,
) -> Result<()> {
    if field.mode() != DerivativeMode::Analytic {
        return Ok(());
    }
    let floor = 1e-9;
    for &x in probes {
        for j in 0..field.dim() {
            let exact = field.partial(x, j)?;
            let scale = exact.max_abs().max(field.value(x).max_abs()).max(1.0);
            let e1 = fd_error(field, x, j, h, &exact);
            let e2 = fd_error(field, x, j, 0.5 * h, &exact);
            if e1 / scale < floor {
                continue; // exact to rounding (constant or affine fields)
            }
            let ratio = e1 / e2;
            if !(3.0..=5.0).contains(&ratio) {
                return Err(Error::Field(format!(
                    "analytic partial mismatch at {:?} axis {}: FD error ratio {} outside [3,5] (e1={}, e2={})",
                    &x[..field.dim()], j, ratio, e1, e2
                )));
            }
        }
    }
    Ok(())
}

fn fd_error<V: FieldValue>(f: &SmoothField<V>, x: Point, j: usize, h: f64, exact: &V) -> f64 {
    let mut xp = x;
    xp[j] += h;
    let mut xm = x;
    xm[j] -= h;
    let fp = f.value(xp);
    let fm = f.value(xm);
    let fd = V::lin_comb(&[(0.5 / h, &fp), (-0.5 / h, &fm)]);
    V::lin_comb(&[(1.0, &fd), (-1.0, exact)]).max_abs()
}
