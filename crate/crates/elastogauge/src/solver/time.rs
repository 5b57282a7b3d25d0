//! Leapfrog time stepping for the displacement boundary-value problem:
//! hard Dirichlet injection on the boundary, conservative stencil in the
//! interior, CFL step control from the fastest-branch speed, and an energy
//! trace for stability monitoring.

use crate::bump::{psi, smooth_window};
use crate::domain::Point;
use crate::error::{Error, Result};
use crate::material::MaterialTriple;
use crate::operators::qp_conorm;
use crate::solver::grid::{Face, Grid};
use crate::solver::stencil::DiscreteElasticOperator;

/// Dirichlet boundary data f(t, x): a smooth time burst times a compact
/// spatial bump on one face, with f(0, .) = d_t f(0, .) = 0 by construction
/// (the window and all its derivatives vanish at t = 0).
#[derive(Clone)]
pub struct BoundarySignal {
    n: usize,
    face: Option<Face>,
    direction: Vec<f64>,
    amplitude: f64,
    center: f64,
    width: f64,
    frequency: f64,
    burst: f64,
    ramp: f64,
}

impl BoundarySignal {
    pub fn zero(n: usize) -> Self {
        BoundarySignal {
            n,
            face: None,
            direction: vec![0.0; n],
            amplitude: 0.0,
            center: 0.5,
            width: 0.25,
            frequency: 1.0,
            burst: 0.5,
            ramp: 0.1,
        }
    }

    #[allow(clippy::too_many_arguments)]
    pub fn burst(
        n: usize,
        face: Face,
        direction: Vec<f64>,
        amplitude: f64,
        center: f64,
        width: f64,
        frequency: f64,
        burst: f64,
    ) -> Result<Self> {
        if direction.len() != n {
            return Err(Error::config("source.direction", "needs n components"));
        }
        if !(width > 0.0) || !(burst > 0.0) {
            return Err(Error::config("source", "width and burst time must be positive"));
        }
        Ok(BoundarySignal {
            n,
            face: Some(face),
            direction,
            amplitude,
            center,
            width,
            frequency,
            burst,
            ramp: 0.25 * burst,
        })
    }

    pub fn is_zero(&self) -> bool {
        self.face.is_none() || self.amplitude == 0.0
    }

    /// Time after which the signal is identically zero.
    pub fn off_time(&self) -> f64 {
        if self.is_zero() {
            0.0
        } else {
            self.burst
        }
    }

    fn time_factor(&self, t: f64) -> f64 {
        smooth_window(t, 0.0, self.burst, self.ramp)
            * (2.0 * std::f64::consts::PI * self.frequency * t).sin()
    }

    /// Spatial profile along the face: product of mollifiers in the
    /// tangential coordinates.
    fn space_factor(&self, x: Point) -> f64 {
        let face = match self.face {
            Some(f) => f,
            None => return 0.0,
        };
        let mut b = 1.0;
        for a in 0..self.n {
            if a == face.axis() {
                continue;
            }
            b *= psi((x[a] - self.center) / self.width);
        }
        b
    }

    pub fn eval(&self, t: f64, x: Point) -> Vec<f64> {
        if self.is_zero() {
            return vec![0.0; self.n];
        }
        let s = self.amplitude * self.time_factor(t) * self.space_factor(x);
        self.direction.iter().map(|d| d * s).collect()
    }

    pub fn face(&self) -> Option<Face> {
        self.face
    }

    /// Pointwise sum of two signals on the same dimension (used for the
    /// superposition property; the result ignores per-signal face metadata
    /// and evaluates both).
    pub fn superpose(a: &BoundarySignal, b: &BoundarySignal) -> SuperposedSignal {
        SuperposedSignal {
            parts: vec![a.clone(), b.clone()],
        }
    }
}

/// Sum of boundary signals, evaluated as Dirichlet data everywhere on the
/// boundary.
#[derive(Clone)]
pub struct SuperposedSignal {
    parts: Vec<BoundarySignal>,
}

pub trait DirichletData: Send + Sync {
    fn dim(&self) -> usize;
    fn value(&self, t: f64, x: Point) -> Vec<f64>;
    fn off_time(&self) -> f64;
}

impl DirichletData for BoundarySignal {
    fn dim(&self) -> usize {
        self.n
    }
    fn value(&self, t: f64, x: Point) -> Vec<f64> {
        self.eval(t, x)
    }
    fn off_time(&self) -> f64 {
        BoundarySignal::off_time(self)
    }
}

impl DirichletData for SuperposedSignal {
    fn dim(&self) -> usize {
        self.parts[0].n
    }
    fn value(&self, t: f64, x: Point) -> Vec<f64> {
        let n = self.dim();
        let mut v = vec![0.0; n];
        for p in &self.parts {
            let pv = p.eval(t, x);
            for i in 0..n {
                v[i] += pv[i];
            }
        }
        v
    }
    fn off_time(&self) -> f64 {
        self.parts.iter().map(|p| p.off_time()).fold(0.0, f64::max)
    }
}

/// CFL-stable time step dt = cfl * h / v_max with v_max the fastest branch
/// speed maximized over grid nodes and slowness directions (64 directions in
/// 2-D, a Fibonacci set of 256 in 3-D). Also returns v_max for the manifest.
pub fn cfl_dt(triple: &MaterialTriple, grid: &Grid, cfl_factor: f64) -> Result<(f64, f64)> {
    if !(cfl_factor > 0.0 && cfl_factor <= 1.0) {
        return Err(Error::config(
            "time.cfl_factor",
            format!("cfl_factor = {cfl_factor} outside (0, 1]"),
        ));
    }
    let n = grid.dim();
    let dirs: Vec<Point> = if n == 2 {
        (0..64)
            .map(|k| {
                let th = std::f64::consts::PI * k as f64 / 64.0;
                [th.cos(), th.sin(), 0.0]
            })
            .collect()
    } else {
        let golden = std::f64::consts::PI * (3.0 - 5.0_f64.sqrt());
        (0..256)
            .map(|i| {
                let z = 1.0 - 2.0 * (i as f64 + 0.5) / 256.0;
                let r = (1.0 - z * z).sqrt();
                let th = golden * i as f64;
                [r * th.cos(), r * th.sin(), z]
            })
            .collect()
    };
    let mut v_max = 0.0_f64;
    for idx in 0..grid.node_count() {
        let x = grid.point(idx);
        for &p in &dirs {
            v_max = v_max.max(qp_conorm(triple, x, p)?);
        }
    }
    if !(v_max > 0.0) {
        return Err(Error::Positivity("v_max = 0 on the grid".into()));
    }
    Ok((cfl_factor * grid.spacing() / v_max, v_max))
}

#[derive(Clone, Debug)]
pub struct SolveOptions {
    pub cfl_factor: f64,
    /// Use this dt instead of computing one (gauge pairs share the reference
    /// step so record comparisons are not polluted by last-ulp differences).
    pub dt_override: Option<f64>,
    pub store_history: bool,
    /// Energy growth factor (relative to the first post-source energy) that
    /// triggers a StabilityError.
    pub growth_tol: f64,
}

impl Default for SolveOptions {
    fn default() -> Self {
        SolveOptions {
            cfl_factor: 0.5,
            dt_override: None,
            store_history: false,
            growth_tol: 10.0,
        }
    }
}

pub struct SolveResult {
    pub dt: f64,
    pub steps: usize,
    pub v_max: f64,
    pub cfl_factor: f64,
    /// (step, t, conserved energy) per step from step 1 on.
    pub energy: Vec<(usize, f64, f64)>,
    pub final_state: Vec<f64>,
    pub prev_state: Vec<f64>,
    pub history: Option<Vec<Vec<f64>>>,
}

/// Leapfrog solve of the Dirichlet problem up to (approximately) `t_final`:
/// u^{n+1} = 2 u^n - u^{n-1} + dt^2 rho^-1 L_h u^n at interior nodes,
/// boundary nodes overwritten with f(t, x); u^0 = 0 and u^1 has zero
/// interior values (consistent with f(0) = d_t f(0) = 0).
pub fn solve_ibvp(
    triple: &MaterialTriple,
    grid: &Grid,
    signal: &dyn DirichletData,
    t_final: f64,
    opts: &SolveOptions,
) -> Result<SolveResult> {
    solve_with_observer(triple, grid, signal, t_final, opts, |_, _, _| {})
}

pub fn solve_with_observer(
    triple: &MaterialTriple,
    grid: &Grid,
    signal: &dyn DirichletData,
    t_final: f64,
    opts: &SolveOptions,
    mut observer: impl FnMut(usize, f64, &[f64]),
) -> Result<SolveResult> {
    let n = grid.dim();
    assert_eq!(signal.dim(), n);
    let op = DiscreteElasticOperator::build(triple, grid)?;
    let (dt_raw, v_max) = match opts.dt_override {
        Some(d) => (d, f64::NAN),
        None => cfl_dt(triple, grid, opts.cfl_factor)?,
    };
    // land on t_final exactly: shrinking dt keeps the CFL bound satisfied
    let steps = ((t_final / dt_raw).ceil() as usize).max(1);
    let dt = t_final / steps as f64;
    let total = grid.node_count();
    let dof = total * n;

    let mut u_prev = vec![0.0; dof];
    let mut u_cur = vec![0.0; dof];
    set_boundary(grid, signal, dt, &mut u_cur);
    let mut lap = vec![0.0; dof];
    let mut u_next = vec![0.0; dof];

    let mut history = if opts.store_history {
        Some(vec![u_prev.clone(), u_cur.clone()])
    } else {
        None
    };
    observer(0, 0.0, &u_prev);
    if steps >= 1 {
        observer(1, dt, &u_cur);
    }

    let mut energy = Vec::with_capacity(steps);
    let off_t = signal.off_time();
    let mut e_ref: Option<f64> = None;

    for step in 2..=steps {
        let t = step as f64 * dt;
        op.apply(grid, &u_cur, &mut lap);
        for idx in 0..total {
            if grid.is_interior(idx) {
                let w = dt * dt / op.rho[idx];
                for i in 0..n {
                    let a = idx * n + i;
                    u_next[a] = 2.0 * u_cur[a] - u_prev[a] + w * lap[a];
                }
            }
        }
        set_boundary_full(grid, signal, t, &mut u_next);
        let e = op.conserved_energy(grid, &u_next, &u_cur, &lap, dt);
        if !e.is_finite() {
            return Err(Error::Stability(format!("non-finite energy at step {step}")));
        }
        energy.push((step, t, e));
        if t > off_t {
            match e_ref {
                None => e_ref = Some(e.max(1e-300)),
                Some(r) => {
                    if e > opts.growth_tol * r + 1e-12 {
                        return Err(Error::Stability(format!(
                            "energy grew from {r} to {e} after source off (step {step})"
                        )));
                    }
                }
            }
        }
        std::mem::swap(&mut u_prev, &mut u_cur);
        std::mem::swap(&mut u_cur, &mut u_next);
        if let Some(h) = history.as_mut() {
            h.push(u_cur.clone());
        }
        observer(step, t, &u_cur);
        if u_cur.iter().any(|v| !v.is_finite()) {
            return Err(Error::Stability(format!("NaN in displacement at step {step}")));
        }
    }

    Ok(SolveResult {
        dt,
        steps,
        v_max,
        cfl_factor: opts.cfl_factor,
        energy,
        final_state: u_cur,
        prev_state: u_prev,
        history,
    })
}

fn set_boundary(grid: &Grid, signal: &dyn DirichletData, t: f64, u: &mut [f64]) {
    set_boundary_full(grid, signal, t, u);
}

/// Hard Dirichlet overwrite on every boundary node (open faces and corners).
fn set_boundary_full(grid: &Grid, signal: &dyn DirichletData, t: f64, u: &mut [f64]) {
    let n = grid.dim();
    for idx in 0..grid.node_count() {
        if grid.is_interior(idx) {
            continue;
        }
        let v = signal.value(t, grid.point(idx));
        for i in 0..n {
            u[idx * n + i] = v[i];
        }
    }
}

/// Spec-facing discrete energy of a state pair: kinetic plus the positive
/// single-level strain quadrature.
pub fn discrete_energy(
    triple: &MaterialTriple,
    grid: &Grid,
    u_cur: &[f64],
    u_prev: &[f64],
    dt: f64,
) -> Result<f64> {
    let op = DiscreteElasticOperator::build(triple, grid)?;
    let n = grid.dim();
    let hn = grid.spacing().powi(n as i32);
    let mut kinetic = 0.0;
    for idx in 0..grid.node_count() {
        let w = op.sqrt_g[idx] * hn;
        for i in 0..n {
            let v = (u_cur[idx * n + i] - u_prev[idx * n + i]) / dt;
            kinetic += 0.5 * op.rho[idx] * w * v * v;
        }
    }
    Ok(kinetic + op.strain_energy(grid, u_cur))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::Domain;
    use crate::material::*;

    fn iso_triple() -> MaterialTriple {
        MaterialTriple::new(
            scalar_constant(2, 1.0),
            stiffness_isotropic(2, 2.0, 1.0).unwrap(),
            metric_euclidean(2),
        )
    }

    fn grid(nx: usize) -> Grid {
        Grid::new(Domain::unit_square(), &[nx, nx]).unwrap()
    }

    #[test]
    fn cfl_dt_matches_isotropic_speed() {
        // c_P = sqrt((lambda + 2 mu)/rho) = 2, h = 1/100 requires nx = 101
        let d = Domain::unit_square();
        let g = Grid::new(d, &[101, 101]).unwrap();
        let (dt, vmax) = cfl_dt(&iso_triple(), &g, 0.5).unwrap();
        approx::assert_relative_eq!(vmax, 2.0, epsilon = 1e-10);
        approx::assert_relative_eq!(dt, 0.5 * 0.01 / 2.0, epsilon = 1e-10);
        // doubling rho scales v_max by 1/sqrt(2)
        let t2 = MaterialTriple::new(
            scalar_constant(2, 2.0),
            stiffness_isotropic(2, 2.0, 1.0).unwrap(),
            metric_euclidean(2),
        );
        let (_, v2) = cfl_dt(&t2, &g, 0.5).unwrap();
        approx::assert_relative_eq!(v2, 2.0 / 2.0_f64.sqrt(), epsilon = 1e-10);
        assert!(cfl_dt(&iso_triple(), &g, 0.0).is_err());
    }

    #[test]
    fn zero_source_stays_zero() {
        let g = grid(33);
        let r = solve_ibvp(
            &iso_triple(),
            &g,
            &BoundarySignal::zero(2),
            0.4,
            &SolveOptions::default(),
        )
        .unwrap();
        assert!(r.final_state.iter().all(|&v| v == 0.0));
        assert!(r.energy.iter().all(|&(_, _, e)| e == 0.0));
    }

    fn test_signal(amp: f64, freq: f64) -> BoundarySignal {
        BoundarySignal::burst(2, Face::XMin, vec![1.0, 0.3], amp, 0.5, 0.25, freq, 0.4).unwrap()
    }

    #[test]
    fn signal_compatibility_at_t0() {
        let s = test_signal(1.0, 2.0);
        let x = [0.0, 0.5, 0.0];
        assert_eq!(s.eval(0.0, x)[0], 0.0);
        let dt = 1e-7;
        let v = s.eval(dt, x)[0] / dt; // ~ d_t f(0): the smooth window kills it
        assert!(v.abs() < 1e-8, "d_t f(0) = {v}");
    }

    #[test]
    fn superposition_of_the_solution_map() {
        let g = grid(33);
        let t = iso_triple();
        let s1 = test_signal(1.0, 2.0);
        let s2 = BoundarySignal::burst(2, Face::YMin, vec![0.2, 1.0], 0.7, 0.4, 0.2, 3.0, 0.35)
            .unwrap();
        let opts = SolveOptions::default();
        let r1 = solve_ibvp(&t, &g, &s1, 0.6, &opts).unwrap();
        let r2 = solve_ibvp(&t, &g, &s2, 0.6, &opts).unwrap();
        let r12 = solve_ibvp(&t, &g, &BoundarySignal::superpose(&s1, &s2), 0.6, &opts).unwrap();
        let mut err = 0.0_f64;
        let mut scale = 0.0_f64;
        for i in 0..r12.final_state.len() {
            err = err.max((r12.final_state[i] - r1.final_state[i] - r2.final_state[i]).abs());
            scale = scale.max(r12.final_state[i].abs());
        }
        assert!(err / scale.max(1e-12) < 1e-10, "superposition error {err} scale {scale}");
    }

    #[test]
    fn energy_conserved_after_source_off() {
        let g = grid(65);
        let t = iso_triple();
        let s = test_signal(1.0, 2.0);
        let r = solve_ibvp(&t, &g, &s, 1.0, &SolveOptions::default()).unwrap();
        let off = s.off_time();
        let post: Vec<f64> = r
            .energy
            .iter()
            .filter(|&&(_, tt, _)| tt > off + 2.0 * r.dt)
            .map(|&(_, _, e)| e)
            .collect();
        assert!(post.len() > 100);
        let e0 = post[0];
        let drift = post
            .iter()
            .fold(0.0_f64, |m, &e| m.max((e - e0).abs() / e0));
        assert!(drift < 1e-10, "constant-coefficient leapfrog drift {drift}");
    }

    #[test]
    fn instability_detected_above_cfl() {
        let g = grid(33);
        let t = iso_triple();
        let s = test_signal(1.0, 2.0);
        let (dt, _) = cfl_dt(&t, &g, 1.0).unwrap();
        let opts = SolveOptions {
            dt_override: Some(1.6 * dt),
            ..Default::default()
        };
        let r = solve_ibvp(&t, &g, &s, 1.5, &opts);
        assert!(matches!(r, Err(Error::Stability(_))));
    }

    #[test]
    fn self_convergence_second_order() {
        let t = iso_triple();
        // gentle source: wavelengths stay resolved on the coarsest grid
        let s = BoundarySignal::burst(2, Face::XMin, vec![1.0, 0.3], 1.0, 0.5, 0.3, 1.0, 0.6)
            .unwrap();
        // stop before the front meets the far wall: the corner interaction
        // afterwards is a genuine regularity loss, not a scheme defect
        let t_final = 0.4;
        let mut finals = Vec::new();
        let sizes = [33usize, 65, 129];
        for &nx in &sizes {
            let g = grid(nx);
            let r = solve_ibvp(&t, &g, &s, t_final, &SolveOptions::default()).unwrap();
            // sample on the coarsest common lattice (9 x 9)
            let skip = (nx - 1) / 8;
            let mut vals = Vec::new();
            for j in (0..nx).step_by(skip) {
                for i in (0..nx).step_by(skip) {
                    let idx = g.flat([i, j, 0]);
                    vals.push(r.final_state[idx * 2]);
                    vals.push(r.final_state[idx * 2 + 1]);
                }
            }
            finals.push(vals);
        }
        let dist = |a: &[f64], b: &[f64]| {
            let num: f64 = a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum();
            let den: f64 = b.iter().map(|y| y * y).sum();
            (num / den.max(1e-300)).sqrt()
        };
        let d1 = dist(&finals[0], &finals[1]);
        let d2 = dist(&finals[1], &finals[2]);
        let order = (d1 / d2).log2();
        assert!(
            order >= 1.8,
            "self-convergence order {order} (d1 = {d1}, d2 = {d2})"
        );
    }

    #[test]
    fn three_d_solve_runs_and_conserves() {
        let d = Domain::new(3, &[1.0, 1.0, 1.0]).unwrap();
        let g = Grid::new(d, &[13, 13, 13]).unwrap();
        let t = MaterialTriple::new(
            scalar_constant(3, 1.0),
            stiffness_isotropic(3, 2.0, 1.0).unwrap(),
            metric_euclidean(3),
        );
        let s = BoundarySignal::burst(
            3,
            Face::XMin,
            vec![1.0, 0.2, 0.1],
            1.0,
            0.5,
            0.3,
            1.0,
            0.25,
        )
        .unwrap();
        let r = solve_ibvp(&t, &g, &s, 0.6, &SolveOptions::default()).unwrap();
        assert!(r.final_state.iter().all(|v| v.is_finite()));
        let post: Vec<f64> = r
            .energy
            .iter()
            .filter(|&&(_, tt, _)| tt > 0.25 + 2.0 * r.dt)
            .map(|&(_, _, e)| e)
            .collect();
        assert!(!post.is_empty());
        let e0 = post[0];
        assert!(e0 > 0.0);
        let drift = post.iter().fold(0.0_f64, |m, &e| m.max((e - e0).abs() / e0));
        assert!(drift < 1e-10, "3-D constant-coefficient drift {drift}");
    }

    #[test]
    fn discrete_energy_examples() {
        let g = grid(17);
        let t = iso_triple();
        let zero = vec![0.0; g.node_count() * 2];
        assert_eq!(discrete_energy(&t, &g, &zero, &zero, 0.01).unwrap(), 0.0);
        // rigid motion: both kinetic (equal states) and strain vanish
        let mut rigid = vec![0.0; g.node_count() * 2];
        for idx in 0..g.node_count() {
            rigid[idx * 2] = 0.3;
            rigid[idx * 2 + 1] = -0.1;
        }
        let e = discrete_energy(&t, &g, &rigid, &rigid, 0.01).unwrap();
        assert!(e.abs() < 1e-13);
    }
}
