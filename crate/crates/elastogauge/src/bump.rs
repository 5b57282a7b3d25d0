//! The standard mollifier and the compactly supported bumps built from it.
//! Fixed profile so that runs are reproducible bit-for-bit given parameters.

use crate::domain::{Domain, Point};

/// Normalized mollifier: psi(0) = 1, support (-1, 1), all derivatives vanish
/// at the endpoints. psi(t) = exp(1 - 1/(1 - t^2)).
pub fn psi(t: f64) -> f64 {
    if t.abs() >= 1.0 - 1e-8 {
        return 0.0;
    }
    let w = 1.0 - t * t;
    (1.0 - 1.0 / w).exp()
}

pub fn psi_d1(t: f64) -> f64 {
    if t.abs() >= 1.0 - 1e-8 {
        return 0.0;
    }
    let w = 1.0 - t * t;
    psi(t) * (-2.0 * t / (w * w))
}

pub fn psi_d2(t: f64) -> f64 {
    if t.abs() >= 1.0 - 1e-8 {
        return 0.0;
    }
    let w = 1.0 - t * t;
    let a = -2.0 * t / (w * w);
    let da = -2.0 * (1.0 + 3.0 * t * t) / (w * w * w);
    psi(t) * (a * a + da)
}

/// 1-D bump supported on [lo, hi], peak 1 at the midpoint.
#[derive(Clone, Copy, Debug)]
pub struct Bump1 {
    lo: f64,
    hi: f64,
}

impl Bump1 {
    pub fn new(lo: f64, hi: f64) -> Self {
        assert!(hi > lo);
        Bump1 { lo, hi }
    }

    #[inline]
    fn map(&self, s: f64) -> (f64, f64) {
        let scale = 2.0 / (self.hi - self.lo);
        ((s - self.lo) * scale - 1.0, scale)
    }

    pub fn value(&self, s: f64) -> f64 {
        let (t, _) = self.map(s);
        psi(t)
    }

    pub fn d1(&self, s: f64) -> f64 {
        let (t, sc) = self.map(s);
        psi_d1(t) * sc
    }

    pub fn d2(&self, s: f64) -> f64 {
        let (t, sc) = self.map(s);
        psi_d2(t) * sc * sc
    }
}

/// Product bump on a box domain, vanishing (with all derivatives) within
/// `collar` of the boundary.
#[derive(Clone, Debug)]
pub struct BoxBump {
    n: usize,
    axes: Vec<Bump1>,
}

impl BoxBump {
    pub fn interior(domain: &Domain, collar: f64) -> Self {
        let n = domain.dim();
        let axes = (0..n)
            .map(|a| Bump1::new(collar, domain.length(a) - collar))
            .collect();
        BoxBump { n, axes }
    }

    pub fn value(&self, x: Point) -> f64 {
        (0..self.n).map(|a| self.axes[a].value(x[a])).product()
    }

    pub fn d1(&self, x: Point, j: usize) -> f64 {
        let mut p = 1.0;
        for a in 0..self.n {
            p *= if a == j {
                self.axes[a].d1(x[a])
            } else {
                self.axes[a].value(x[a])
            };
        }
        p
    }

    pub fn d2(&self, x: Point, j: usize, k: usize) -> f64 {
        let mut p = 1.0;
        for a in 0..self.n {
            let f = if j == k && a == j {
                self.axes[a].d2(x[a])
            } else if a == j || a == k {
                self.axes[a].d1(x[a])
            } else {
                self.axes[a].value(x[a])
            };
            p *= f;
        }
        p
    }
}

/// Radial bump supported in the ball |x - center| < radius.
#[derive(Clone, Debug)]
pub struct BallBump {
    n: usize,
    center: Point,
    radius: f64,
}

impl BallBump {
    pub fn new(n: usize, center: Point, radius: f64) -> Self {
        assert!(radius > 0.0);
        BallBump { n, center, radius }
    }

    fn r2(&self, x: Point) -> f64 {
        (0..self.n)
            .map(|a| (x[a] - self.center[a]) * (x[a] - self.center[a]))
            .sum::<f64>()
            / (self.radius * self.radius)
    }

    /// psi applied to scaled radius: value 1 at center, 0 outside the ball.
    pub fn value(&self, x: Point) -> f64 {
        let r2 = self.r2(x);
        if r2 >= 1.0 - 1e-8 {
            return 0.0;
        }
        (1.0 - 1.0 / (1.0 - r2)).exp()
    }

    pub fn d1(&self, x: Point, j: usize) -> f64 {
        let r2 = self.r2(x);
        if r2 >= 1.0 - 1e-8 {
            return 0.0;
        }
        let w = 1.0 - r2;
        let dr2 = 2.0 * (x[j] - self.center[j]) / (self.radius * self.radius);
        self.value(x) * (-dr2 / (w * w))
    }
}

/// C-infinity step: 0 for s <= 0, 1 for s >= 1.
pub fn smooth_step(s: f64) -> f64 {
    let b = |u: f64| if u > 0.0 { (-1.0 / u).exp() } else { 0.0 };
    let (a, c) = (b(s), b(1.0 - s));
    if a == 0.0 {
        0.0
    } else {
        a / (a + c)
    }
}

/// Smooth window: ramps 0 -> 1 over [t0, t0+ramp], holds, ramps back to 0
/// over [t1-ramp, t1]. Identically zero outside [t0, t1].
pub fn smooth_window(t: f64, t0: f64, t1: f64, ramp: f64) -> f64 {
    smooth_step((t - t0) / ramp) * smooth_step((t1 - t) / ramp)
}
