//! Free-boundary extraction and the measure-theoretic probes built on it:
//! dead cores, θ-cylinders, positive density, porosity and finite speed of
//! propagation.
//!
//! Probe coordinates are real positions `x`. On radial fields they range over
//! `[−R, R]` and are folded to `|x|` when the stored slice is read.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::field::SpaceTimeField;
use crate::report::{ProbeReport, Verdict};

/// Relative dead threshold applied to `‖u‖_∞` when none is given.
pub const DEFAULT_DEAD_FRACTION: f64 = 1e-10;

/// Smallest probe radius, in cells, that is still considered resolved.
pub const MIN_RESOLVED_CELLS: f64 = 2.0;

/// The default dead threshold `1e-10·‖u‖_∞` (or the smallest positive float for a zero field).
pub fn default_threshold(field: &SpaceTimeField) -> f64 {
    let t = DEFAULT_DEAD_FRACTION * field.sup_norm();
    if t > 0.0 {
        t
    } else {
        f64::MIN_POSITIVE
    }
}

fn check_threshold(threshold: f64) -> Result<f64> {
    if threshold.is_finite() && threshold > 0.0 {
        Ok(threshold)
    } else {
        Err(Error::InvalidArgument(format!(
            "dead threshold must be positive and finite, got {threshold}"
        )))
    }
}

/// How a free-boundary point is placed inside a mask-transition cell.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize)]
pub enum Localization {
    /// Linear interpolation of `u` to the threshold crossing.
    #[default]
    Linear,
    /// Linear extrapolation of `u^{1/exponent}` from the two nearest positive
    /// nodes, exact for profiles behaving like `dist^exponent`.
    Homogeneous { exponent: f64 },
}

/// `(4π)`-style surface measure `|S^{N−1}|` for integer `N ≥ 1`.
fn sphere_area(dim: usize) -> f64 {
    match dim {
        0 => 0.0,
        1 => 2.0,
        2 => 2.0 * std::f64::consts::PI,
        n => 2.0 * std::f64::consts::PI / (n as f64 - 2.0) * sphere_area(n - 2),
    }
}

/// Positivity masks and free-boundary cells of every stored slice.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PositivitySet {
    pub threshold: f64,
    /// `masks[k][i]` is `u(x_i, t_k) > threshold`.
    pub masks: Vec<Vec<bool>>,
    /// Cells `i` (between nodes `i` and `i+1`) whose end nodes disagree.
    pub boundary_indices: Vec<Vec<usize>>,
    /// Sub-grid free-boundary positions, in probe coordinates.
    pub free_boundary_points: Vec<Vec<f64>>,
    /// Measure of the dead set among the updated nodes.
    pub dead_core_measure: Vec<f64>,
}

impl PositivitySet {
    pub fn is_positive(&self, k: usize, i: usize) -> bool {
        self.masks[k][i]
    }
}

pub fn extract_positivity(field: &SpaceTimeField, threshold: Option<f64>) -> Result<PositivitySet> {
    extract_positivity_with(field, threshold, Localization::Linear)
}

pub fn extract_positivity_with(
    field: &SpaceTimeField,
    threshold: Option<f64>,
    localization: Localization,
) -> Result<PositivitySet> {
    let threshold = check_threshold(threshold.unwrap_or_else(|| default_threshold(field)))?;
    let nx = field.nx();
    let dx = field.dx();
    let radial = field.grid.is_radial();
    let dim = field.params.dim;
    // Measure carried by each updated node.
    let weights: Vec<f64> = if radial {
        let area = sphere_area(dim);
        let n = dim as i32;
        (0..nx)
            .map(|i| {
                let r = field.x(i);
                let outer = (r + 0.5 * dx).powi(n);
                let inner = if i == 0 { 0.0 } else { (r - 0.5 * dx).powi(n) };
                area * (outer - inner) / dim as f64
            })
            .collect()
    } else {
        (0..=nx)
            .map(|i| if i == 0 || i == nx { 0.0 } else { dx })
            .collect()
    };

    let mut set = PositivitySet {
        threshold,
        masks: Vec::with_capacity(field.times.len()),
        boundary_indices: Vec::with_capacity(field.times.len()),
        free_boundary_points: Vec::with_capacity(field.times.len()),
        dead_core_measure: Vec::with_capacity(field.times.len()),
    };
    for k in 0..field.times.len() {
        let slice = &field.slices[k];
        let mask: Vec<bool> = slice.iter().map(|&u| u > threshold).collect();
        let cells: Vec<usize> = (0..nx).filter(|&i| mask[i] != mask[i + 1]).collect();
        let mut points = Vec::with_capacity(cells.len());
        for &i in &cells {
            let x = locate_in_cell(field, k, i, &mask, threshold, localization);
            points.push(x);
            if radial && x > 0.0 {
                points.push(-x);
            }
        }
        points.sort_by(f64::total_cmp);
        let dead: f64 = weights
            .iter()
            .enumerate()
            .filter(|&(i, _)| !mask[i])
            .map(|(_, w)| w)
            .sum();
        set.masks.push(mask);
        set.boundary_indices.push(cells);
        set.free_boundary_points.push(points);
        set.dead_core_measure.push(dead);
    }
    Ok(set)
}

/// Sub-grid position (stored coordinate) of the free boundary in cell `i`.
fn locate_in_cell(
    field: &SpaceTimeField,
    k: usize,
    i: usize,
    mask: &[bool],
    threshold: f64,
    localization: Localization,
) -> f64 {
    let u = &field.slices[k];
    let (dead, live) = if mask[i] { (i + 1, i) } else { (i, i + 1) };
    let xd = field.x(dead);
    let xl = field.x(live);
    let linear = || {
        let w = ((threshold - u[dead]) / (u[live] - u[dead])).clamp(0.0, 1.0);
        xd + (xl - xd) * w
    };
    match localization {
        Localization::Linear => linear(),
        Localization::Homogeneous { exponent } => {
            let next = if live > dead { live + 1 } else { live.wrapping_sub(1) };
            if next > field.nx() || !mask[next] {
                return linear();
            }
            let v1 = u[live].powf(1.0 / exponent);
            let v2 = u[next].powf(1.0 / exponent);
            if v2 <= v1 {
                return linear();
            }
            let x2 = field.x(next);
            let z = xl - (x2 - xl) * v1 / (v2 - v1);
            // Sub-threshold dust may cover several cells; the extrapolated zero
            // may lie anywhere in that run, but not past an exact zero.
            let mut far = dead;
            while u[far] > 0.0 {
                let step = if dead > live { far + 1 } else { far.wrapping_sub(1) };
                if step > field.nx() || mask[step] {
                    break;
                }
                far = step;
            }
            let xf = field.x(far);
            let (lo, hi) = if xf < xl { (xf, xl) } else { (xl, xf) };
            z.clamp(lo, hi)
        }
    }
}

/// Free-boundary point of snapshot `k` nearest to `near`, if any.
pub fn nearest_free_boundary_point(
    field: &SpaceTimeField,
    k: usize,
    near: f64,
    threshold: Option<f64>,
    localization: Localization,
) -> Result<Option<f64>> {
    let threshold = check_threshold(threshold.unwrap_or_else(|| default_threshold(field)))?;
    let slice = &field.slices[k];
    let mask: Vec<bool> = slice.iter().map(|&u| u > threshold).collect();
    let mut best: Option<f64> = None;
    for i in 0..field.nx() {
        if mask[i] == mask[i + 1] {
            continue;
        }
        let x = locate_in_cell(field, k, i, &mask, threshold, localization);
        let candidates: &[f64] = if field.grid.is_radial() { &[x, -x] } else { &[x] };
        for &c in candidates {
            if best.map_or(true, |b| (c - near).abs() < (b - near).abs()) {
                best = Some(c);
            }
        }
    }
    Ok(best)
}

/// Intrinsic parabolic distance `|x−y| + ‖u‖_∞^{(p−2)/p}·|t−s|^{1/p}`.
pub fn intrinsic_distance(field: &SpaceTimeField, a: (f64, f64), b: (f64, f64)) -> f64 {
    let p = field.params.p;
    let weight = field.sup_norm().powf((p - 2.0) / p);
    (a.0 - b.0).abs() + weight * (a.1 - b.1).abs().powf(1.0 / p)
}

/// Which part of an intrinsic cylinder a supremum is taken over.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Region {
    /// `B_r(x₀) × [t₀ − r^θ, t₀]`.
    Backward,
    /// `B_r(x₀) × [t₀ − r^θ, t₀ + r^θ]`.
    Full,
    /// `B_r(x₀) × [t₀, t₀ + r^θ]`.
    Forward,
    /// Bottom and lateral faces of the backward cylinder.
    ParabolicBoundary,
}

/// A θ-cylinder resolved against the grid and snapshot schedule of a field.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IntrinsicCylinder {
    pub center: (f64, f64),
    pub radius: f64,
    pub theta: f64,
    /// `(node index, probe coordinate)` of nodes in the closed ball.
    pub nodes: Vec<(usize, f64)>,
    /// Lateral edge positions `x₀ ± r`.
    pub edges: [f64; 2],
    /// Snapshot indices in `[t₀ − r^θ, t₀]`.
    pub backward: Vec<usize>,
    /// Snapshot indices in `[t₀, t₀ + r^θ]`, when that window is stored.
    pub forward: Option<Vec<usize>>,
}

impl IntrinsicCylinder {
    /// Resolves `Q_r(x₀, t₀)` with `θ` taken from the field's parameters.
    pub fn resolve(field: &SpaceTimeField, x0: f64, t0: f64, r: f64) -> Result<Self> {
        let theta = crate::params::compute_exponents(&field.params)?.theta;
        Self::resolve_with_theta(field, x0, t0, r, theta)
    }

    pub fn resolve_with_theta(
        field: &SpaceTimeField,
        x0: f64,
        t0: f64,
        r: f64,
        theta: f64,
    ) -> Result<Self> {
        if !(r > 0.0 && r.is_finite()) {
            return Err(Error::InvalidArgument(format!("cylinder radius must be positive, got {r}")));
        }
        let (lo, hi) = field.span();
        let tol = 1e-12 * (hi - lo);
        if x0 - r < lo - tol || x0 + r > hi + tol {
            return Err(Error::OutsideHistory(format!(
                "ball [{}, {}] clipped to [{}, {}]",
                x0 - r,
                x0 + r,
                (x0 - r).max(lo),
                (x0 + r).min(hi)
            )));
        }
        let h = r.powf(theta);
        let first = field.times[0];
        let last = *field.times.last().unwrap();
        let backward = field.snapshots_in(t0 - h, t0).map_err(|_| {
            Error::OutsideHistory(format!(
                "backward window [{}, {}] clipped to [{}, {}]",
                t0 - h,
                t0,
                (t0 - h).max(first),
                t0.min(last)
            ))
        })?;
        let forward = field.snapshots_in(t0, t0 + h).ok();
        Ok(Self {
            center: (x0, t0),
            radius: r,
            theta,
            nodes: field.nodes_in_ball(x0, r),
            edges: [(x0 - r).max(lo), (x0 + r).min(hi)],
            backward,
            forward,
        })
    }

    pub fn height(&self) -> f64 {
        self.radius.powf(self.theta)
    }

    /// Resolution in cells across the diameter.
    pub fn cells_across(&self, dx: f64) -> f64 {
        2.0 * self.radius / dx
    }
}

fn slice_sup(field: &SpaceTimeField, cyl: &IntrinsicCylinder, k: usize) -> Result<f64> {
    let slice = &field.slices[k];
    let mut m = cyl.nodes.iter().fold(0.0f64, |m, &(i, _)| m.max(slice[i]));
    for &e in &cyl.edges {
        m = m.max(field.interp_x(k, e)?);
    }
    Ok(m)
}

fn time_sup(field: &SpaceTimeField, cyl: &IntrinsicCylinder, t: f64) -> Result<f64> {
    let mut m = 0.0f64;
    for &(_, x) in &cyl.nodes {
        m = m.max(field.value_at(x, t)?);
    }
    for &e in &cyl.edges {
        m = m.max(field.value_at(e, t)?);
    }
    Ok(m)
}

/// Supremum of `u` over a region of the closed cylinder, sampled at the ball's
/// nodes and lateral edges, at every stored snapshot in the window and at the
/// window's end times.
pub fn cylinder_sup(field: &SpaceTimeField, cyl: &IntrinsicCylinder, region: Region) -> Result<f64> {
    let (t0, h) = (cyl.center.1, cyl.height());
    let forward = || {
        cyl.forward.as_ref().ok_or_else(|| {
            let last = *field.times.last().unwrap();
            Error::OutsideHistory(format!(
                "forward window [{}, {}] clipped to [{}, {}]",
                t0,
                t0 + h,
                t0.min(last),
                last
            ))
        })
    };
    match region {
        Region::Backward => {
            let mut m = time_sup(field, cyl, t0 - h)?.max(time_sup(field, cyl, t0)?);
            for &k in &cyl.backward {
                m = m.max(slice_sup(field, cyl, k)?);
            }
            Ok(m)
        }
        Region::Forward => {
            let ks = forward()?;
            let mut m = time_sup(field, cyl, t0)?.max(time_sup(field, cyl, t0 + h)?);
            for &k in ks {
                m = m.max(slice_sup(field, cyl, k)?);
            }
            Ok(m)
        }
        Region::Full => {
            forward()?;
            Ok(cylinder_sup(field, cyl, Region::Backward)?
                .max(cylinder_sup(field, cyl, Region::Forward)?))
        }
        Region::ParabolicBoundary => {
            let mut m = time_sup(field, cyl, t0 - h)?;
            let mut lateral = |t: f64| -> Result<()> {
                for &e in &cyl.edges {
                    m = m.max(field.value_at(e, t)?);
                }
                Ok(())
            };
            lateral(t0)?;
            for &k in &cyl.backward {
                lateral(field.times[k])?;
            }
            Ok(m)
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SpeedCheckResult {
    pub r: f64,
    pub s: f64,
    pub c_used: f64,
    pub later_time: f64,
    pub shrunken_radius: f64,
    pub verdict: Verdict,
    /// Position and value of the largest above-threshold sample, if any.
    pub worst_violation_location: Option<(f64, f64)>,
}

impl SpeedCheckResult {
    pub fn to_probe_report(&self, x0: f64, t0: f64) -> ProbeReport {
        let mut rep = ProbeReport::new("finite_speed", [x0, t0], vec![self.r])
            .verdict("overall", self.verdict)
            .constant("s", self.s)
            .constant("c", self.c_used)
            .constant("shrunken_radius", self.shrunken_radius);
        if let Some((x, v)) = self.worst_violation_location {
            rep = rep.constant("worst_x", x).constant("worst_u", v);
        }
        rep
    }
}

fn open_ball(field: &SpaceTimeField, center: f64, radius: f64) -> Vec<(usize, f64)> {
    let tol = 1e-12 * radius.max(field.dx());
    field
        .nodes_in_ball(center, radius)
        .into_iter()
        .filter(|&(_, x)| (x - center).abs() < radius - tol)
        .collect()
}

/// Checks that a ball dead at `t₀` stays dead on `B_{max(0, r − c·s)}(x₀)` at
/// time `t₀ + s^θ`.
#[allow(clippy::too_many_arguments)]
pub fn finite_speed_check(
    field: &SpaceTimeField,
    x0: f64,
    t0: f64,
    r: f64,
    s: f64,
    c: f64,
    threshold: Option<f64>,
) -> Result<SpeedCheckResult> {
    let threshold = check_threshold(threshold.unwrap_or_else(|| default_threshold(field)))?;
    if s < 0.0 || c < 0.0 || r <= 0.0 {
        return Err(Error::InvalidArgument("need r > 0, s ≥ 0, c ≥ 0".into()));
    }
    let theta = crate::params::compute_exponents(&field.params)?.theta;
    for (_, x) in open_ball(field, x0, r) {
        let u = field.value_at(x, t0)?;
        if u > threshold {
            return Err(Error::Precondition(format!(
                "u({x}, {t0}) = {u:e} exceeds the dead threshold {threshold:e} inside B_{r}({x0})"
            )));
        }
    }
    let later = t0 + s.powf(theta);
    let shrunk = (r - c * s).max(0.0);
    let mut worst: Option<(f64, f64)> = None;
    if s > 0.0 && shrunk > 0.0 {
        for (_, x) in open_ball(field, x0, shrunk) {
            let u = field.value_at(x, later)?;
            if u > threshold && worst.map_or(true, |(_, w)| u > w) {
                worst = Some((x, u));
            }
        }
    }
    Ok(SpeedCheckResult {
        r,
        s,
        c_used: c,
        later_time: later,
        shrunken_radius: shrunk,
        verdict: Verdict::from_bool(worst.is_none()),
        worst_violation_location: worst,
    })
}

/// Smallest `c` from an increasing list that passes [`finite_speed_check`].
pub fn minimal_speed_constant(
    field: &SpaceTimeField,
    x0: f64,
    t0: f64,
    r: f64,
    s: f64,
    cs: &[f64],
    threshold: Option<f64>,
) -> Result<Option<f64>> {
    for &c in cs {
        if finite_speed_check(field, x0, t0, r, s, c, threshold)?.verdict.is_pass() {
            return Ok(Some(c));
        }
    }
    Ok(None)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DensityReport {
    pub center: (f64, f64),
    pub radius: f64,
    pub best_varrho: Option<f64>,
    /// Center `(x′, t′)` of the witnessing positive sub-cylinder.
    pub witness: Option<(f64, f64)>,
    /// Entries of the ϱ grid with `ϱr` below resolution.
    pub unresolvable: Vec<f64>,
    pub verdict: Verdict,
}

impl DensityReport {
    pub fn to_probe_report(&self) -> ProbeReport {
        let mut rep = ProbeReport::new("density", [self.center.0, self.center.1], vec![self.radius])
            .verdict("overall", self.verdict);
        if let Some(v) = self.best_varrho {
            rep = rep.constant("varrho", v);
        }
        if !self.unresolvable.is_empty() {
            rep = rep.verdict("unresolvable", format!("{:?}", self.unresolvable));
        }
        rep
    }
}

/// Number of equally spaced candidate offsets per half-radius in the probes.
const CANDIDATES_PER_SIDE: i32 = 32;

/// Largest `ϱ` from the grid such that some `Q_{ϱr}(x′,t′) ⊂ Q_r(x₀,t₀)` with
/// `(x′,t′) ∈ Q_r⁻(x₀,t₀)` is entirely above the dead threshold.
pub fn density_probe(
    field: &SpaceTimeField,
    cyl: &IntrinsicCylinder,
    varrho_grid: &[f64],
    threshold: Option<f64>,
) -> Result<DensityReport> {
    let threshold = check_threshold(threshold.unwrap_or_else(|| default_threshold(field)))?;
    let (x0, t0) = cyl.center;
    let r = cyl.radius;
    let h = cyl.height();
    let dx = field.dx();
    let first = field.times[0];
    let last = *field.times.last().unwrap();
    let ttol = 1e-12 * (last - first).abs().max(1.0);

    let mut xs: Vec<f64> = (-CANDIDATES_PER_SIDE + 1..CANDIDATES_PER_SIDE)
        .map(|m| x0 + r * m as f64 / CANDIDATES_PER_SIDE as f64)
        .collect();
    xs.extend(open_ball(field, x0, r).into_iter().map(|(_, x)| x));
    let mut ts: Vec<f64> = cyl.backward.iter().map(|&k| field.times[k]).collect();
    ts.push(t0);

    let mut grid: Vec<f64> = varrho_grid.iter().copied().filter(|v| *v > 0.0).collect();
    grid.sort_by(|a, b| b.total_cmp(a));
    let mut unresolvable = Vec::new();
    let mut best = None;
    'outer: for &rho in &grid {
        let rr = rho * r;
        if rr < MIN_RESOLVED_CELLS * dx {
            unresolvable.push(rho);
            continue;
        }
        let tau = rr.powf(cyl.theta);
        for &tc in &ts {
            if tc - tau < t0 - h - ttol || tc + tau > t0 + h + ttol {
                continue;
            }
            if tc - tau < first - ttol || tc + tau > last + ttol {
                continue;
            }
            let ks: Vec<usize> = (0..field.times.len())
                .filter(|&k| (field.times[k] - tc).abs() < tau - ttol)
                .collect();
            for &xc in &xs {
                if (xc - x0).abs() + rr > r * (1.0 + 1e-12) {
                    continue;
                }
                let ball = open_ball(field, xc, rr);
                if ball.is_empty() {
                    continue;
                }
                let mut ok = true;
                for &k in &ks {
                    if ball.iter().any(|&(i, _)| field.slices[k][i] <= threshold) {
                        ok = false;
                        break;
                    }
                }
                if ok && !ks.iter().any(|&k| (field.times[k] - tc).abs() <= ttol) {
                    for &(_, x) in &ball {
                        if field.value_at(x, tc)? <= threshold {
                            ok = false;
                            break;
                        }
                    }
                }
                if ok {
                    best = Some((rho, (xc, tc)));
                    break 'outer;
                }
            }
        }
    }
    Ok(DensityReport {
        center: cyl.center,
        radius: r,
        best_varrho: best.map(|b| b.0),
        witness: best.map(|b| b.1),
        unresolvable,
        verdict: Verdict::from_bool(best.is_some()),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PorosityReport {
    pub time: f64,
    pub radii: Vec<f64>,
    pub free_boundary_points: Vec<f64>,
    pub best_delta: Option<f64>,
    /// True when the slice has no free boundary.
    pub vacuous: bool,
    pub unresolvable: Vec<f64>,
    pub verdict: Verdict,
}

impl PorosityReport {
    pub fn to_probe_report(&self) -> ProbeReport {
        let center = self.free_boundary_points.first().copied().unwrap_or(f64::NAN);
        let mut rep = ProbeReport::new("porosity", [center, self.time], self.radii.clone())
            .verdict(
                "overall",
                if self.vacuous {
                    "vacuous PASS".to_string()
                } else {
                    self.verdict.to_string()
                },
            );
        if let Some(d) = self.best_delta {
            rep = rep.constant("delta", d);
        }
        if !self.unresolvable.is_empty() {
            rep = rep.verdict("unresolvable", format!("{:?}", self.unresolvable));
        }
        rep
    }
}

/// Largest `δ` from the grid such that, for every free-boundary point `z` at
/// time `t₀` and every radius `r` whose ball fits the domain, some
/// `B_{δr}(y) ⊂ B_r(z)` avoids the free boundary.
pub fn porosity_probe(
    field: &SpaceTimeField,
    t0: f64,
    radii: &[f64],
    delta_grid: &[f64],
    threshold: Option<f64>,
) -> Result<PorosityReport> {
    let k = field.nearest_snapshot(t0);
    let tol = 1e-12 * field.times.last().unwrap().abs().max(1.0);
    if (field.times[k] - t0).abs() > tol {
        return Err(Error::OutsideHistory(format!("no snapshot stored at t = {t0}")));
    }
    let set = extract_positivity(field, threshold)?;
    let points = set.free_boundary_points[k].clone();
    let dx = field.dx();
    let (lo, hi) = field.span();
    if points.is_empty() {
        return Ok(PorosityReport {
            time: t0,
            radii: radii.to_vec(),
            free_boundary_points: points,
            best_delta: None,
            vacuous: true,
            unresolvable: Vec::new(),
            verdict: Verdict::Pass,
        });
    }
    let mut grid: Vec<f64> = delta_grid.iter().copied().filter(|d| *d > 0.0 && *d <= 1.0).collect();
    grid.sort_by(|a, b| b.total_cmp(a));
    let mut unresolvable = Vec::new();
    let mut best = None;
    for &delta in &grid {
        let mut resolved_any = false;
        let mut all_ok = true;
        'pairs: for &z in &points {
            for &r in radii {
                if z - r < lo || z + r > hi {
                    continue;
                }
                let rr = delta * r;
                if rr < MIN_RESOLVED_CELLS * dx {
                    if !unresolvable.contains(&delta) {
                        unresolvable.push(delta);
                    }
                    continue;
                }
                resolved_any = true;
                let found = (-CANDIDATES_PER_SIDE..=CANDIDATES_PER_SIDE).any(|m| {
                    let y = z + r * m as f64 / CANDIDATES_PER_SIDE as f64;
                    (y - z).abs() + rr <= r * (1.0 + 1e-12)
                        && points.iter().all(|&w| (y - w).abs() >= rr * (1.0 - 1e-12))
                });
                if !found {
                    all_ok = false;
                    break 'pairs;
                }
            }
        }
        if resolved_any && all_ok {
            best = Some(delta);
            break;
        }
    }
    Ok(PorosityReport {
        time: t0,
        radii: radii.to_vec(),
        free_boundary_points: points,
        best_delta: best,
        vacuous: false,
        unresolvable,
        verdict: Verdict::from_bool(best.is_some()),
    })
}
