//! Uniform tensor-product grid on the box with boundary classification.
//! Corner nodes (on two or more faces) belong to the Dirichlet set and never
//! carry a normal; open-face nodes each have a unique outward normal.

use crate::domain::{Domain, Point};
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Face {
    XMin,
    XMax,
    YMin,
    YMax,
    ZMin,
    ZMax,
}

impl Face {
    pub fn axis(self) -> usize {
        match self {
            Face::XMin | Face::XMax => 0,
            Face::YMin | Face::YMax => 1,
            Face::ZMin | Face::ZMax => 2,
        }
    }

    pub fn is_min(self) -> bool {
        matches!(self, Face::XMin | Face::YMin | Face::ZMin)
    }

    /// Unit outward normal as a covector/vector (Euclidean components).
    pub fn normal(self, n: usize) -> Vec<f64> {
        let mut v = vec![0.0; n];
        let s = if self.is_min() { -1.0 } else { 1.0 };
        v[self.axis()] = s;
        v
    }

    pub fn name(self) -> &'static str {
        match self {
            Face::XMin => "x_min",
            Face::XMax => "x_max",
            Face::YMin => "y_min",
            Face::YMax => "y_max",
            Face::ZMin => "z_min",
            Face::ZMax => "z_max",
        }
    }

    pub fn from_name(s: &str) -> Result<Face> {
        Ok(match s {
            "x_min" | "left" => Face::XMin,
            "x_max" | "right" => Face::XMax,
            "y_min" | "bottom" => Face::YMin,
            "y_max" | "top" => Face::YMax,
            "z_min" => Face::ZMin,
            "z_max" => Face::ZMax,
            _ => return Err(Error::config("source.face", format!("unknown face `{s}`"))),
        })
    }

    pub fn all(n: usize) -> Vec<Face> {
        let mut f = vec![Face::XMin, Face::XMax, Face::YMin, Face::YMax];
        if n == 3 {
            f.push(Face::ZMin);
            f.push(Face::ZMax);
        }
        f
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum NodeKind {
    Interior,
    Boundary(Face),
    Corner,
}

#[derive(Clone)]
pub struct Grid {
    domain: Domain,
    n: usize,
    nx: [usize; 3],
    h: f64,
    kinds: Vec<NodeKind>,
    open_nodes: Vec<(usize, Face)>,
}

impl Grid {
    /// `nx` holds nodes per axis. Spacing must be uniform across axes.
    pub fn new(domain: Domain, nx: &[usize]) -> Result<Grid> {
        let n = domain.dim();
        if nx.len() != n {
            return Err(Error::config("domain.nx", "need one node count per axis"));
        }
        if nx.iter().any(|&m| m < 5) {
            return Err(Error::config("domain.nx", "need at least 5 nodes per axis"));
        }
        let h = domain.length(0) / (nx[0] - 1) as f64;
        for a in 1..n {
            let ha = domain.length(a) / (nx[a] - 1) as f64;
            if (ha - h).abs() > 1e-12 * h {
                return Err(Error::config(
                    "domain.nx",
                    format!("non-uniform spacing: h0 = {h}, h{a} = {ha}"),
                ));
            }
        }
        let mut dims = [1usize; 3];
        dims[..n].copy_from_slice(nx);
        let total = dims[0] * dims[1] * dims[2];
        let mut kinds = vec![NodeKind::Interior; total];
        let mut open_nodes = Vec::new();
        for idx in 0..total {
            let c = coords_of(idx, &dims);
            let mut extremal = Vec::new();
            for a in 0..n {
                if c[a] == 0 {
                    extremal.push((a, true));
                } else if c[a] == dims[a] - 1 {
                    extremal.push((a, false));
                }
            }
            kinds[idx] = match extremal.len() {
                0 => NodeKind::Interior,
                1 => {
                    let (axis, at_min) = extremal[0];
                    let face = match (axis, at_min) {
                        (0, true) => Face::XMin,
                        (0, false) => Face::XMax,
                        (1, true) => Face::YMin,
                        (1, false) => Face::YMax,
                        (2, true) => Face::ZMin,
                        _ => Face::ZMax,
                    };
                    open_nodes.push((idx, face));
                    NodeKind::Boundary(face)
                }
                _ => NodeKind::Corner,
            };
        }
        Ok(Grid {
            domain,
            n,
            nx: dims,
            h,
            kinds,
            open_nodes,
        })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn domain(&self) -> &Domain {
        &self.domain
    }

    pub fn spacing(&self) -> f64 {
        self.h
    }

    pub fn nodes_per_axis(&self) -> &[usize; 3] {
        &self.nx
    }

    pub fn node_count(&self) -> usize {
        self.nx[0] * self.nx[1] * self.nx[2]
    }

    #[inline]
    pub fn stride(&self, axis: usize) -> usize {
        match axis {
            0 => 1,
            1 => self.nx[0],
            _ => self.nx[0] * self.nx[1],
        }
    }

    #[inline]
    pub fn flat(&self, c: [usize; 3]) -> usize {
        (c[2] * self.nx[1] + c[1]) * self.nx[0] + c[0]
    }

    #[inline]
    pub fn coords(&self, idx: usize) -> [usize; 3] {
        coords_of(idx, &self.nx)
    }

    pub fn point(&self, idx: usize) -> Point {
        let c = self.coords(idx);
        let mut p = [0.0; 3];
        for a in 0..self.n {
            p[a] = c[a] as f64 * self.h;
        }
        p
    }

    /// Midpoint of the face between `idx` and its +axis neighbor.
    pub fn face_midpoint(&self, idx: usize, axis: usize) -> Point {
        let mut p = self.point(idx);
        p[axis] += 0.5 * self.h;
        p
    }

    #[inline]
    pub fn kind(&self, idx: usize) -> NodeKind {
        self.kinds[idx]
    }

    pub fn is_interior(&self, idx: usize) -> bool {
        matches!(self.kinds[idx], NodeKind::Interior)
    }

    /// Boundary nodes on open faces (excludes corners/edges), in ascending
    /// flat-index order.
    pub fn open_face_nodes(&self) -> &[(usize, Face)] {
        &self.open_nodes
    }

    pub fn interior_indices(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.node_count()).filter(|&i| self.is_interior(i))
    }
}

fn coords_of(idx: usize, dims: &[usize; 3]) -> [usize; 3] {
    let i = idx % dims[0];
    let j = (idx / dims[0]) % dims[1];
    let k = idx / (dims[0] * dims[1]);
    [i, j, k]
}
