//! Axis-aligned rectangular domains and deterministic probe-point sampling.

use crate::error::{Error, Result};

/// Points are fixed-size triples; for n = 2 the trailing coordinate is zero
/// and ignored by every consumer.
pub type Point = [f64; 3];

/// Closed axis-aligned box [0, L1] x [0, L2] (x [0, L3]).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Domain {
    n: usize,
    lengths: [f64; 3],
}

impl Domain {
    pub fn new(n: usize, lengths: &[f64]) -> Result<Self> {
        if n < 2 || n > 3 {
            return Err(Error::Dimension(n));
        }
        if lengths.len() != n || lengths.iter().any(|&l| !(l > 0.0)) {
            return Err(Error::config("domain.L", "need one positive length per axis"));
        }
        let mut ls = [0.0; 3];
        ls[..n].copy_from_slice(lengths);
        Ok(Domain { n, lengths: ls })
    }

    pub fn unit_square() -> Self {
        Domain::new(2, &[1.0, 1.0]).unwrap()
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn length(&self, axis: usize) -> f64 {
        self.lengths[axis]
    }

    pub fn diameter(&self) -> f64 {
        self.lengths[..self.n].iter().map(|l| l * l).sum::<f64>().sqrt()
    }

    /// Distance from `x` to the boundary of the box.
    pub fn boundary_distance(&self, x: Point) -> f64 {
        let mut d = f64::INFINITY;
        for a in 0..self.n {
            d = d.min(x[a]).min(self.lengths[a] - x[a]);
        }
        d
    }

    pub fn contains(&self, x: Point, slack: f64) -> bool {
        (0..self.n).all(|a| x[a] >= -slack && x[a] <= self.lengths[a] + slack)
    }
}

/// Van der Corput radical inverse in the given base.
fn radical_inverse(mut i: u64, base: u64) -> f64 {
    let mut f = 1.0;
    let mut r = 0.0;
    while i > 0 {
        f /= base as f64;
        r += f * (i % base) as f64;
        i /= base;
    }
    r
}

/// Quasi-random (Halton) interior probe points. `seed` offsets the sequence
/// start so distinct seeds give distinct but reproducible point sets; `margin`
/// is the fraction of each axis length kept clear of the boundary.
pub fn interior_probes(domain: &Domain, count: usize, seed: u64, margin: f64) -> Vec<Point> {
    let bases = [2u64, 3, 5];
    let n = domain.dim();
    (0..count)
        .map(|k| {
            let i = seed.wrapping_mul(7919).wrapping_add(k as u64 + 1);
            let mut p = [0.0; 3];
            for a in 0..n {
                let l = domain.length(a);
                let t = radical_inverse(i, bases[a]);
                p[a] = l * (margin + (1.0 - 2.0 * margin) * t);
            }
            p
        })
        .collect()
}

/// Deterministic points on the boundary faces, `per_face` per face.
pub fn boundary_probes(domain: &Domain, per_face: usize, seed: u64) -> Vec<Point> {
    let n = domain.dim();
    let mut out = Vec::new();
    for axis in 0..n {
        for side in 0..2 {
            for k in 0..per_face {
                let i = seed.wrapping_mul(7919).wrapping_add(k as u64 + 1);
                let mut p = [0.0; 3];
                let mut b = 0;
                for a in 0..n {
                    if a == axis {
                        p[a] = if side == 0 { 0.0 } else { domain.length(a) };
                    } else {
                        let bases = [2u64, 3];
                        p[a] = domain.length(a) * radical_inverse(i, bases[b]);
                        b += 1;
                    }
                }
                out.push(p);
            }
        }
    }
    out
}
