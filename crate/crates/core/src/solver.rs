//! Monotone explicit finite-difference scheme for `Δ_p u − ∂u/∂t = λ₀ u₊^q` on
//! intervals and radially symmetric balls with Dirichlet data.
//!
//! One step is a flux-form diffusion update followed by the absorption
//! substep:
//!
//! ```text
//! y_i     = u_i + dt·(w_{i+1/2}F_{i+1/2} − w_{i−1/2}F_{i−1/2}) / V_i,   F = |D₊u|^{p−2}D₊u
//! u_i^new = y_i − dt·s_i
//! ```
//!
//! With [`AbsorptionScheme::ExactFlow`] the sink `s_i` is the exact decrease of
//! `y' = −λ₀y₊^q` over the step, so the update is a composition of monotone maps
//! and extinguishes in finite time exactly like the ODE. With
//! [`AbsorptionScheme::Clamped`] the sink is `min(λ₀u_i^q, u_i/dt)`.

use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};

pub use crate::field::{BoundaryData, Geometry, GridSpec, SpaceTimeField, Trace};

use crate::error::{Error, Result};
use crate::exact::ClosedForm;
use crate::field::embed;
use crate::params::{positive_power, ProblemParams};

/// Guards the time step in fully flat states.
pub const EPS_CFL: f64 = 1e-14;
/// Smallest admissible CFL step before a run is declared blown up.
pub const DT_UNDERFLOW: f64 = 1e-15;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AbsorptionScheme {
    #[default]
    ExactFlow,
    Clamped,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum InitialData {
    Zero,
    Constant { value: f64 },
    /// `amplitude·max(0, 1 − ((x − center)/width)²)²`.
    Bump { amplitude: f64, center: f64, width: f64 },
    /// `scale · form(x, time_shift)`.
    Exact { form: ClosedForm, scale: f64, time_shift: f64 },
    Values { values: Vec<f64> },
}

impl InitialData {
    pub fn sample(&self, grid: &GridSpec, dim: usize) -> Result<Vec<f64>> {
        let nodes = grid.nodes();
        let values = match self {
            InitialData::Zero => vec![0.0; nodes.len()],
            InitialData::Constant { value } => vec![*value; nodes.len()],
            InitialData::Bump {
                amplitude,
                center,
                width,
            } => nodes
                .iter()
                .map(|&x| {
                    let s = (x - center) / width;
                    amplitude * (1.0 - s * s).max(0.0).powi(2)
                })
                .collect(),
            InitialData::Exact {
                form,
                scale,
                time_shift,
            } => nodes
                .iter()
                .map(|&x| Ok(scale * form.evaluate(&embed(x, dim), *time_shift)?))
                .collect::<Result<_>>()?,
            InitialData::Values { values } => {
                if values.len() != nodes.len() {
                    return Err(Error::InvalidArgument(format!(
                        "initial data has {} values, grid has {} nodes",
                        values.len(),
                        nodes.len()
                    )));
                }
                values.clone()
            }
        };
        Ok(values)
    }
}

/// Everything needed to run one simulation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Problem {
    pub params: ProblemParams,
    pub grid: GridSpec,
    pub initial: InitialData,
    pub boundary: BoundaryData,
    #[serde(default)]
    pub scheme: AbsorptionScheme,
}

impl Problem {
    pub fn new(
        params: ProblemParams,
        grid: GridSpec,
        initial: InitialData,
        boundary: BoundaryData,
    ) -> Self {
        Self {
            params,
            grid,
            initial,
            boundary,
            scheme: AbsorptionScheme::default(),
        }
    }

    pub fn with_scheme(mut self, scheme: AbsorptionScheme) -> Self {
        self.scheme = scheme;
        self
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct StepStats {
    pub dt_used: f64,
    /// max_i |D₊u_i| of the input slice.
    pub max_gradient: f64,
    /// Absorbed mass `Σ V_i (y_i − u_i^new)` over the step.
    pub mass_absorbed: f64,
    /// Net flux entering through the Dirichlet ends over the step.
    pub boundary_inflow: f64,
    /// Nodes where the sink hit its clamp (extinction within the step) or a
    /// negative value was reset to zero.
    pub positivity_clamps: usize,
    /// `min_i (u_i^new − u_i)` over updated nodes.
    pub min_increment: f64,
}

/// Metric weights of the finite-volume discretisation.
#[derive(Debug, Clone)]
pub(crate) struct Mesh {
    dx: f64,
    nx: usize,
    nodes: Vec<f64>,
    /// Face weights `w_{i+1/2}`, `i = 0..nx`.
    face: Vec<f64>,
    /// Control volumes `V_i`, `i = 0..=nx`.
    volume: Vec<f64>,
    radial: bool,
    /// `max_i (w_{i+1/2} + w_{i−1/2})·dx / (2 V_i)`; 1 on intervals.
    geometric_factor: f64,
}

impl Mesh {
    pub(crate) fn new(grid: &GridSpec, dim: usize) -> Self {
        let dx = grid.dx();
        let nx = grid.nx;
        let nodes = grid.nodes();
        let radial = grid.is_radial();
        let (face, volume) = if radial {
            let d = dim as i32;
            let face = (0..nx)
                .map(|i| ((i as f64 + 0.5) * dx).powi(d - 1))
                .collect::<Vec<_>>();
            let mut volume = (0..=nx)
                .map(|i| (i as f64 * dx).powi(d - 1) * dx)
                .collect::<Vec<_>>();
            volume[0] = (0.5 * dx).powi(d) / dim as f64;
            (face, volume)
        } else {
            (vec![1.0; nx], vec![dx; nx + 1])
        };
        let mut geometric_factor = 1.0f64;
        if radial {
            geometric_factor = face[0] * dx / (2.0 * volume[0]);
            for i in 1..nx {
                geometric_factor =
                    geometric_factor.max((face[i] + face[i - 1]) * dx / (2.0 * volume[i]));
            }
        }
        Self {
            dx,
            nx,
            nodes,
            face,
            volume,
            radial,
            geometric_factor,
        }
    }

    fn first_updated(&self) -> usize {
        if self.radial {
            0
        } else {
            1
        }
    }

    /// Mass `Σ V_i u_i` over the updated (non-Dirichlet) nodes.
    pub(crate) fn interior_mass(&self, u: &[f64]) -> f64 {
        (self.first_updated()..self.nx)
            .map(|i| self.volume[i] * u[i])
            .sum()
    }
}

fn check_finite(u: &[f64], t: f64) -> Result<()> {
    if let Some((index, &value)) = u.iter().enumerate().find(|(_, v)| !v.is_finite()) {
        return Err(Error::NonFinite { index, time: t, value });
    }
    Ok(())
}

fn max_gradient(u: &[f64], dx: f64) -> f64 {
    u.windows(2)
        .fold(0.0f64, |g, w| g.max(((w[1] - w[0]) / dx).abs()))
}

fn cfl_dt_on(mesh: &Mesh, u: &[f64], p: f64, sigma: f64) -> f64 {
    let g = max_gradient(u, mesh.dx);
    let stiffness = (p - 1.0) * g.powf(p - 2.0) + EPS_CFL;
    sigma * mesh.dx * mesh.dx / (stiffness * mesh.geometric_factor)
}

/// Adaptive step `σ·dx² / ((p−1)G^{p−2} + ε)`, divided by the radial metric factor.
pub fn cfl_dt(u: &[f64], params: &ProblemParams, grid: &GridSpec) -> f64 {
    let mesh = Mesh::new(grid, params.dim);
    cfl_dt_on(&mesh, u, params.p, grid.cfl_sigma)
}

/// Exact solution operator of `y' = −λ y₊^q` over `dt`.
fn absorb_exact(y: f64, lambda: f64, q: f64, dt: f64) -> f64 {
    if y <= 0.0 {
        return 0.0;
    }
    if q == 1.0 {
        return y * (-lambda * dt).exp();
    }
    if q == 0.0 {
        return (y - lambda * dt).max(0.0);
    }
    let base = y.powf(1.0 - q) - (1.0 - q) * lambda * dt;
    if base <= 0.0 {
        0.0
    } else {
        base.powf(1.0 / (1.0 - q))
    }
}

fn step_on(
    mesh: &Mesh,
    u: &[f64],
    t: f64,
    dt: f64,
    params: &ProblemParams,
    boundary: &BoundaryData,
    scheme: AbsorptionScheme,
) -> Result<(Vec<f64>, StepStats)> {
    let n = mesh.nx;
    let dx = mesh.dx;
    let p = params.p;
    let flux: Vec<f64> = u
        .windows(2)
        .map(|w| {
            let d = (w[1] - w[0]) / dx;
            if p == 2.0 {
                d
            } else {
                d.abs().powf(p - 2.0) * d
            }
        })
        .collect();
    let weighted: Vec<f64> = flux.iter().zip(&mesh.face).map(|(f, w)| f * w).collect();

    let mut next = u.to_vec();
    let mut absorbed = 0.0;
    let mut clamps = 0usize;
    let mut min_increment = f64::INFINITY;
    for i in mesh.first_updated()..n {
        let div = if i == 0 {
            weighted[0] / mesh.volume[0]
        } else {
            (weighted[i] - weighted[i - 1]) / mesh.volume[i]
        };
        let ui = u[i];
        let lambda = params.lambda0.at(mesh.nodes[i], t);
        let (mut value, sink) = match scheme {
            AbsorptionScheme::ExactFlow => {
                let y = ui + dt * div;
                if y < 0.0 {
                    clamps += 1;
                }
                let out = absorb_exact(y, lambda, params.q, dt);
                if y > 0.0 && out == 0.0 {
                    clamps += 1;
                }
                (out, y.max(0.0) - out)
            }
            AbsorptionScheme::Clamped => {
                let raw = lambda * positive_power(ui, params.q);
                let cap = ui.max(0.0) / dt;
                let s = if raw > cap {
                    clamps += 1;
                    cap
                } else {
                    raw
                };
                (ui + dt * (div - s), dt * s)
            }
        };
        if value < 0.0 {
            if scheme == AbsorptionScheme::Clamped {
                clamps += 1;
            }
            value = 0.0;
        }
        absorbed += mesh.volume[i] * sink;
        min_increment = min_increment.min(value - ui);
        next[i] = value;
    }
    let t_new = t + dt;
    if !mesh.radial {
        next[0] = boundary.left.value(mesh.nodes[0], t_new)?;
    }
    next[n] = boundary.right.value(mesh.nodes[n], t_new)?;
    let inflow = if mesh.radial {
        dt * weighted[n - 1]
    } else {
        dt * (weighted[n - 1] - weighted[0])
    };
    check_finite(&next, t_new)?;
    Ok((
        next,
        StepStats {
            dt_used: dt,
            max_gradient: max_gradient(u, dx),
            mass_absorbed: absorbed,
            boundary_inflow: inflow,
            positivity_clamps: clamps,
            min_increment,
        },
    ))
}

/// One adaptive step from `(u, t)`; `dt_cap` bounds the CFL step (snapshot hits,
/// user caps). Boundary nodes of the result hold the traces at `t + dt`.
pub fn step(
    u: &[f64],
    t: f64,
    params: &ProblemParams,
    grid: &GridSpec,
    boundary: &BoundaryData,
    dt_cap: f64,
) -> Result<(Vec<f64>, StepStats)> {
    step_with(u, t, params, grid, boundary, dt_cap, AbsorptionScheme::default())
}

pub fn step_with(
    u: &[f64],
    t: f64,
    params: &ProblemParams,
    grid: &GridSpec,
    boundary: &BoundaryData,
    dt_cap: f64,
    scheme: AbsorptionScheme,
) -> Result<(Vec<f64>, StepStats)> {
    if u.len() != grid.nx + 1 {
        return Err(Error::GridMismatch(format!(
            "slice has {} values, grid has {} nodes",
            u.len(),
            grid.nx + 1
        )));
    }
    check_finite(u, t)?;
    let mesh = Mesh::new(grid, params.dim);
    let dt_cfl = cfl_dt_on(&mesh, u, params.p, grid.cfl_sigma);
    if dt_cfl < DT_UNDERFLOW {
        return Err(Error::DtUnderflow { time: t, dt: dt_cfl });
    }
    let dt = dt_cfl.min(dt_cap).min(grid.dt_max.unwrap_or(f64::INFINITY));
    step_on(&mesh, u, t, dt, params, boundary, scheme)
}

/// Aggregate diagnostics of a run.
#[derive(Debug, Clone, Serialize)]
pub struct RunStats {
    pub steps: u64,
    #[serde(skip)]
    pub wall_time: Duration,
    pub total_absorbed: f64,
    pub total_inflow: f64,
    pub positivity_clamps: u64,
    /// Smallest `u^{n+1} − u^n` over all steps (negative values flag loss of
    /// time-monotonicity).
    pub min_increment: f64,
    pub dt_min: f64,
    pub dt_max: f64,
    /// Interior mass `Σ V_i u_i` at each snapshot.
    pub mass: Vec<f64>,
}

impl RunStats {
    fn new() -> Self {
        Self {
            steps: 0,
            wall_time: Duration::ZERO,
            total_absorbed: 0.0,
            total_inflow: 0.0,
            positivity_clamps: 0,
            min_increment: f64::INFINITY,
            dt_min: f64::INFINITY,
            dt_max: 0.0,
            mass: Vec::new(),
        }
    }

    fn record(&mut self, s: &StepStats) {
        self.steps += 1;
        self.total_absorbed += s.mass_absorbed;
        self.total_inflow += s.boundary_inflow;
        self.positivity_clamps += s.positivity_clamps as u64;
        self.min_increment = self.min_increment.min(s.min_increment);
        self.dt_min = self.dt_min.min(s.dt_used);
        self.dt_max = self.dt_max.max(s.dt_used);
    }
}

#[derive(Debug, Clone)]
pub struct RunOutput {
    pub field: SpaceTimeField,
    pub stats: RunStats,
}

/// Time-marching state shared by [`run`] and [`run_lockstep`].
struct Stepper<'a> {
    problem: &'a Problem,
    mesh: Mesh,
    u: Vec<f64>,
    t: f64,
}

impl<'a> Stepper<'a> {
    fn new(problem: &'a Problem) -> Result<Self> {
        problem.params.validate()?;
        problem.grid.validate()?;
        if let Geometry::Radial { .. } = problem.grid.geometry {
        } else if problem.params.dim != 1 {
            return Err(Error::InvalidArgument(
                "interval geometry requires dimension 1".into(),
            ));
        }
        let u = problem.initial.sample(&problem.grid, problem.params.dim)?;
        check_finite(&u, 0.0)?;
        if let Some((i, v)) = u.iter().enumerate().find(|(_, &v)| v < 0.0) {
            return Err(Error::Precondition(format!(
                "initial data negative ({v}) at node {i}"
            )));
        }
        let mesh = Mesh::new(&problem.grid, problem.params.dim);
        let n = problem.grid.nx;
        let mut ends = vec![(n, &problem.boundary.right)];
        if !mesh.radial {
            ends.push((0, &problem.boundary.left));
        }
        for (i, trace) in ends {
            let g = trace.value(mesh.nodes[i], 0.0)?;
            if g < 0.0 {
                return Err(Error::Precondition(format!("boundary datum {g} < 0 at node {i}")));
            }
            if (g - u[i]).abs() > 1e-9 * g.abs().max(1.0) {
                return Err(Error::Precondition(format!(
                    "initial value {} at node {i} disagrees with boundary trace {g}",
                    u[i]
                )));
            }
        }
        Ok(Self {
            problem,
            mesh,
            u,
            t: 0.0,
        })
    }

    fn cfl_dt(&self) -> Result<f64> {
        let dt = cfl_dt_on(&self.mesh, &self.u, self.problem.params.p, self.problem.grid.cfl_sigma);
        if dt < DT_UNDERFLOW {
            return Err(Error::DtUnderflow { time: self.t, dt });
        }
        Ok(dt.min(self.problem.grid.dt_max.unwrap_or(f64::INFINITY)))
    }

    fn advance(&mut self, dt: f64, target: f64) -> Result<StepStats> {
        let (next, stats) = step_on(
            &self.mesh,
            &self.u,
            self.t,
            dt,
            &self.problem.params,
            &self.problem.boundary,
            self.problem.scheme,
        )?;
        self.u = next;
        self.t = if target - (self.t + dt) <= 1e-13 * target.abs().max(1.0) {
            target
        } else {
            self.t + dt
        };
        Ok(stats)
    }
}

/// Step size towards `target`, merging a nearly-complete remainder into this step.
fn capped(dt: f64, t: f64, target: f64) -> f64 {
    let remaining = target - t;
    if dt >= remaining || remaining - dt <= 1e-13 * target.abs().max(1.0) {
        remaining
    } else {
        dt
    }
}

/// Drives the scheme to `t_end`, storing the snapshot schedule of the grid.
pub fn run(problem: &Problem) -> Result<RunOutput> {
    let started = Instant::now();
    let mut stepper = Stepper::new(problem)?;
    let times = problem.grid.snapshot_times();
    let mut slices = vec![stepper.u.clone()];
    let mut stats = RunStats::new();
    stats.mass.push(stepper.mesh.interior_mass(&stepper.u));
    for &target in &times[1..] {
        while stepper.t < target {
            let wrap = |e: Error, t: f64| Error::Run {
                time: t,
                source: Box::new(e),
            };
            let dt = stepper.cfl_dt().map_err(|e| wrap(e, stepper.t))?;
            let dt = capped(dt, stepper.t, target);
            let s = stepper
                .advance(dt, target)
                .map_err(|e| wrap(e, stepper.t))?;
            stats.record(&s);
        }
        slices.push(stepper.u.clone());
        stats.mass.push(stepper.mesh.interior_mass(&stepper.u));
    }
    stats.wall_time = started.elapsed();
    let field = SpaceTimeField::from_slices(
        problem.grid.clone(),
        problem.params.clone(),
        problem.boundary.clone(),
        times,
        slices,
    )?;
    Ok(RunOutput { field, stats })
}

#[derive(Debug, Clone)]
pub struct LockstepOutput {
    pub u: RunOutput,
    pub v: RunOutput,
    /// `max (v − u)` over every node of every step.
    pub worst_step_violation: f64,
}

/// Runs two problems on a common time-step sequence (the smaller of the two CFL
/// steps) and tracks `max(v − u)` after every step.
pub fn run_lockstep(u_problem: &Problem, v_problem: &Problem) -> Result<LockstepOutput> {
    if u_problem.grid != v_problem.grid {
        return Err(Error::GridMismatch("lockstep runs need identical grids".into()));
    }
    if u_problem.params != v_problem.params {
        return Err(Error::GridMismatch("lockstep runs need identical params".into()));
    }
    let started = Instant::now();
    let mut a = Stepper::new(u_problem)?;
    let mut b = Stepper::new(v_problem)?;
    let times = u_problem.grid.snapshot_times();
    let mut slices_a = vec![a.u.clone()];
    let mut slices_b = vec![b.u.clone()];
    let mut stats_a = RunStats::new();
    let mut stats_b = RunStats::new();
    stats_a.mass.push(a.mesh.interior_mass(&a.u));
    stats_b.mass.push(b.mesh.interior_mass(&b.u));
    let violation = |a: &[f64], b: &[f64]| {
        a.iter()
            .zip(b)
            .fold(f64::NEG_INFINITY, |m, (x, y)| m.max(y - x))
    };
    let mut worst = violation(&a.u, &b.u);
    for &target in &times[1..] {
        while a.t < target {
            let dt = a.cfl_dt()?.min(b.cfl_dt()?);
            let dt = capped(dt, a.t, target);
            stats_a.record(&a.advance(dt, target)?);
            stats_b.record(&b.advance(dt, target)?);
            worst = worst.max(violation(&a.u, &b.u));
        }
        slices_a.push(a.u.clone());
        slices_b.push(b.u.clone());
        stats_a.mass.push(a.mesh.interior_mass(&a.u));
        stats_b.mass.push(b.mesh.interior_mass(&b.u));
    }
    stats_a.wall_time = started.elapsed();
    stats_b.wall_time = stats_a.wall_time;
    let field = |p: &Problem, slices| {
        SpaceTimeField::from_slices(
            p.grid.clone(),
            p.params.clone(),
            p.boundary.clone(),
            times.clone(),
            slices,
        )
    };
    Ok(LockstepOutput {
        u: RunOutput {
            field: field(u_problem, slices_a)?,
            stats: stats_a,
        },
        v: RunOutput {
            field: field(v_problem, slices_b)?,
            stats: stats_b,
        },
        worst_step_violation: worst,
    })
}

/// Absolute slack of the ordering test.
pub const ORDERING_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Serialize)]
pub struct OrderingReport {
    pub pass: bool,
    /// `max (v − u)` over stored nodes.
    pub worst_violation: f64,
    pub worst_time: f64,
    pub worst_x: f64,
}

/// Checks `v ≤ u + 1e−12` at every stored node of two runs on the same grid.
pub fn compare_runs(u_run: &SpaceTimeField, v_run: &SpaceTimeField) -> Result<OrderingReport> {
    if u_run.grid != v_run.grid {
        return Err(Error::GridMismatch("runs were computed on different grids".into()));
    }
    if u_run.times != v_run.times {
        return Err(Error::GridMismatch("runs store different snapshot times".into()));
    }
    let mut worst = (f64::NEG_INFINITY, 0.0, 0.0);
    for (k, (su, sv)) in u_run.slices.iter().zip(&v_run.slices).enumerate() {
        for (i, (a, b)) in su.iter().zip(sv).enumerate() {
            if b - a > worst.0 {
                worst = (b - a, u_run.times[k], u_run.x(i));
            }
        }
    }
    Ok(OrderingReport {
        pass: worst.0 <= ORDERING_TOL,
        worst_violation: worst.0,
        worst_time: worst.1,
        worst_x: worst.2,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exact::Sign;

    fn p2q_half() -> ProblemParams {
        ProblemParams::new(2.0, 0.5, 1, 1.0).unwrap()
    }

    #[test]
    fn flat_slice_pure_absorption() {
        let grid = GridSpec::interval(0.0, 1.0, 16, 1.0, 1.0);
        let u = vec![1.0; 17];
        let bd = BoundaryData::constant(1.0, 1.0);
        let (next, stats) =
            step_with(&u, 0.0, &p2q_half(), &grid, &bd, 1.0, AbsorptionScheme::Clamped).unwrap();
        let dt = stats.dt_used;
        assert_eq!(dt, 0.4 / 256.0 / (1.0 + EPS_CFL));
        for &v in &next[1..16] {
            assert!((v - (1.0 - dt)).abs() < 1e-15);
        }
        // The exact flow agrees to second order in dt.
        let (next, _) = step(&u, 0.0, &p2q_half(), &grid, &bd, 1.0).unwrap();
        let expect = (1.0 - 0.5 * dt).powi(2);
        for &v in &next[1..16] {
            assert!((v - expect).abs() < 1e-15);
            assert!((v - (1.0 - dt)).abs() <= dt * dt);
        }
    }

    #[test]
    fn zero_is_a_fixed_point() {
        let grid = GridSpec::interval(0.0, 1.0, 32, 0.5, 0.1);
        let out = run(&Problem::new(
            p2q_half(),
            grid,
            InitialData::Zero,
            BoundaryData::zero(),
        ))
        .unwrap();
        assert!(out.field.slices.iter().flatten().all(|&v| v == 0.0));
    }

    #[test]
    fn linear_profile_only_absorbs() {
        let params = ProblemParams::new(2.0, 0.0, 1, 1.0).unwrap();
        let grid = GridSpec::interval(0.0, 1.0, 16, 1.0, 1.0);
        let u = grid.nodes();
        let bd = BoundaryData::constant(0.0, 1.0);
        let (next, stats) = step(&u, 0.0, &params, &grid, &bd, 1.0).unwrap();
        for i in 1..16 {
            assert!((next[i] - (u[i] - stats.dt_used)).abs() < 1e-14, "node {i}");
        }
    }

    #[test]
    fn non_finite_input_is_rejected() {
        let grid = GridSpec::interval(0.0, 1.0, 16, 1.0, 1.0);
        let mut u = vec![0.5; 17];
        u[3] = f64::NAN;
        let err = step(&u, 0.0, &p2q_half(), &grid, &BoundaryData::zero(), 1.0).unwrap_err();
        assert!(matches!(err, Error::NonFinite { index: 3, .. }));
    }

    #[test]
    fn huge_gradients_underflow() {
        let params = ProblemParams::new(6.0, 0.5, 1, 1.0).unwrap();
        let grid = GridSpec::interval(0.0, 1.0, 16, 1.0, 1.0);
        let mut u = vec![0.0; 17];
        u[8] = 1e6;
        let err = step(&u, 0.0, &params, &grid, &BoundaryData::zero(), 1.0).unwrap_err();
        assert!(matches!(err, Error::DtUnderflow { .. }));
    }

    #[test]
    fn t_end_zero_keeps_initial_slice() {
        let grid = GridSpec::interval(0.0, 1.0, 16, 0.0, 0.1);
        let out = run(&Problem::new(
            p2q_half(),
            grid,
            InitialData::Constant { value: 0.3 },
            BoundaryData::constant(0.3, 0.3),
        ))
        .unwrap();
        assert_eq!(out.field.times, vec![0.0]);
        assert_eq!(out.field.slices, vec![vec![0.3; 17]]);
        assert_eq!(out.stats.steps, 0);
    }

    #[test]
    fn incompatible_initial_data_rejected() {
        let grid = GridSpec::interval(0.0, 1.0, 16, 0.1, 0.1);
        let err = run(&Problem::new(
            p2q_half(),
            grid,
            InitialData::Constant { value: 0.3 },
            BoundaryData::constant(0.0, 0.3),
        ))
        .unwrap_err();
        assert!(matches!(err, Error::Precondition(_)));
    }

    #[test]
    fn flat_run_tracks_ode_profile() {
        let params = p2q_half();
        let ode = ClosedForm::ode_from_initial(params.clone(), 1.0).unwrap();
        for scheme in [AbsorptionScheme::ExactFlow, AbsorptionScheme::Clamped] {
            let grid = GridSpec::interval(0.0, 1.0, 16, 1.5, 0.25).with_dt_max(1e-4);
            let problem = Problem::new(
                params.clone(),
                grid,
                InitialData::Constant { value: 1.0 },
                BoundaryData::both(Trace::exact(ode.clone())),
            )
            .with_scheme(scheme);
            let out = run(&problem).unwrap();
            for (t, slice) in out.field.times.iter().zip(&out.field.slices) {
                let exact = ode.evaluate_1d(0.0, *t).unwrap();
                for &v in slice {
                    assert!((v - exact).abs() <= 1e-3 * exact, "{scheme:?} t = {t}");
                }
            }
        }
    }

    #[test]
    fn stationary_halfspace_stays_put() {
        let params = p2q_half();
        let cf = ClosedForm::halfspace(params.clone(), 0, Sign::Plus).unwrap();
        let mut drift = Vec::new();
        for nx in [32, 64] {
            let grid = GridSpec::interval(-1.0, 1.0, nx, 0.5, 0.5);
            let problem = Problem::new(
                params.clone(),
                grid.clone(),
                InitialData::Exact {
                    form: cf.clone(),
                    scale: 1.0,
                    time_shift: 0.0,
                },
                BoundaryData::both(Trace::exact(cf.clone())),
            );
            let out = run(&problem).unwrap();
            let d = out.field.slices[0]
                .iter()
                .zip(out.field.last())
                .fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
            drift.push(d);
            let dx = grid.dx();
            assert!(d <= 0.5 * dx * dx, "nx = {nx}: drift {d}");
        }
        assert!(drift[1] < drift[0]);
    }

    #[test]
    fn mass_balance_closes() {
        let params = p2q_half();
        for grid in [
            GridSpec::interval(0.0, 1.0, 32, 0.3, 0.1),
            GridSpec::radial(1.0, 32, 0.3, 0.1),
        ] {
            let params = if grid.is_radial() {
                ProblemParams::new(3.0, 0.5, 3, 1.0).unwrap()
            } else {
                params.clone()
            };
            let problem = Problem::new(
                params,
                grid,
                InitialData::Bump {
                    amplitude: 0.5,
                    center: 0.3,
                    width: 0.25,
                },
                BoundaryData::zero(),
            );
            let out = run(&problem).unwrap();
            let m = &out.stats.mass;
            let balance = m[0] - m[m.len() - 1] - out.stats.total_absorbed + out.stats.total_inflow;
            assert!(balance.abs() < 1e-12, "{balance}");
        }
    }

    #[test]
    fn radial_run_stays_nonnegative_and_symmetric_at_origin() {
        let params = ProblemParams::new(2.0, 0.5, 3, 1.0).unwrap();
        let grid = GridSpec::radial(1.0, 64, 0.5, 0.1);
        let problem = Problem::new(
            params,
            grid,
            InitialData::Constant { value: 1e-4 },
            BoundaryData::constant(0.0, 1e-4),
        );
        let out = run(&problem).unwrap();
        assert!(out.field.slices.iter().flatten().all(|&v| v >= 0.0));
        // Stationary core radius is about 0.55 for this boundary value.
        assert_eq!(out.field.last()[0], 0.0);
        assert!(out.field.last()[64] > 0.0);
    }

    #[test]
    fn compare_detects_mismatched_grids() {
        let params = p2q_half();
        let mk = |nx| {
            run(&Problem::new(
                params.clone(),
                GridSpec::interval(0.0, 1.0, nx, 0.01, 0.01),
                InitialData::Zero,
                BoundaryData::zero(),
            ))
            .unwrap()
            .field
        };
        assert!(compare_runs(&mk(16), &mk(32)).is_err());
        let a = mk(16);
        assert!(compare_runs(&a, &a).unwrap().pass);
    }
}
