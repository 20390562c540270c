//! Quantitative checks on stored fields: dyadic supremum sequences, growth,
//! non-degeneracy and gradient rate fits, blow-up rescaling, growth
//! classification at infinity and energy decay in the critical case.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::field::{BoundaryData, GridSpec, SpaceTimeField, Trace};
use crate::fit::{fit_log_log, LogLogFit, MIN_FIT_POINTS};
use crate::geometry::{cylinder_sup, IntrinsicCylinder, Region};
use crate::params::compute_exponents;
use crate::report::{ProbeReport, Verdict};

/// Minimum number of cells across a cylinder diameter for it to count as resolved.
pub const MIN_CELLS_ACROSS: f64 = 4.0;

/// Minimum coefficient of determination for a rate fit to pass.
pub const MIN_R_SQUARED: f64 = 0.95;

/// Largest spread `max/min` of envelope ratios accepted as "bounded away from zero".
pub const MAX_ENVELOPE_SPREAD: f64 = 10.0;

/// Decay factor of `ρ_r` across the ladder that counts as subcritical growth.
pub const SUBCRITICAL_DECAY: f64 = 10.0;

fn resolved(field: &SpaceTimeField, r: f64) -> bool {
    2.0 * r / field.dx() >= MIN_CELLS_ACROSS * (1.0 - 1e-12)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DyadicSequence {
    pub center: (f64, f64),
    pub j_max: usize,
    /// `S_j` for `j = 0..=j_max`.
    pub values: Vec<f64>,
    /// `members[j]` is `S_j ≤ A·S_{j+1}`, for `j = 0..j_max`.
    pub members: Vec<bool>,
    pub c_star: f64,
    pub amplification: f64,
    /// `sup` over members of `S_{j+1}·2^{j·α₀}`.
    pub implied_constant: f64,
    /// `sup_j S_j·2^{j·α₀}`, the constant of the envelope `S_j ≤ C·2^{−j·α₀}`.
    pub envelope_constant: f64,
}

impl DyadicSequence {
    pub fn to_probe_report(&self) -> ProbeReport {
        let radii = (0..=self.j_max).map(|j| 0.5f64.powi(j as i32)).collect();
        ProbeReport::new("dyadic_sequence", [self.center.0, self.center.1], radii)
            .verdict(
                "monotone",
                Verdict::from_bool(self.values.windows(2).all(|w| w[1] <= w[0])),
            )
            .verdict(
                "members",
                self.members
                    .iter()
                    .enumerate()
                    .filter(|(_, m)| **m)
                    .map(|(j, _)| j.to_string())
                    .collect::<Vec<_>>()
                    .join(" "),
            )
            .constant("amplification", self.amplification)
            .constant("c_star", self.c_star)
            .constant("implied_constant", self.implied_constant)
            .constant("envelope_constant", self.envelope_constant)
    }
}

/// Suprema `S_j` over `Q⁻_{2^{−j}}(x₀,t₀)` and membership in the set of scales
/// where `S_j ≤ 2^{α₀}·max{1, 1/C*}·S_{j+1}`.
pub fn dyadic_sequence(
    field: &SpaceTimeField,
    center: (f64, f64),
    j_max: usize,
    c_star: f64,
) -> Result<DyadicSequence> {
    if !(c_star > 0.0) {
        return Err(Error::InvalidArgument(format!("C* must be positive, got {c_star}")));
    }
    let alpha0 = compute_exponents(&field.params)?.alpha0;
    if !resolved(field, 0.5f64.powi(j_max as i32)) {
        let finest = (0..j_max).rev().find(|&j| resolved(field, 0.5f64.powi(j as i32)));
        return Err(Error::Unresolvable(match finest {
            Some(j) => format!("j_max = {j_max} is below grid resolution; finest legal j is {j}"),
            None => format!("j_max = {j_max} is below grid resolution; no legal j"),
        }));
    }
    let values = (0..=j_max)
        .map(|j| {
            let cyl = IntrinsicCylinder::resolve(field, center.0, center.1, 0.5f64.powi(j as i32))?;
            cylinder_sup(field, &cyl, Region::Backward)
        })
        .collect::<Result<Vec<_>>>()?;
    let amplification = 2f64.powf(alpha0) * (1.0f64).max(1.0 / c_star);
    let members: Vec<bool> = (0..j_max)
        .map(|j| values[j] <= amplification * values[j + 1])
        .collect();
    let implied_constant = (0..j_max)
        .filter(|&j| members[j])
        .map(|j| values[j + 1] * 2f64.powf(j as f64 * alpha0))
        .fold(0.0, f64::max);
    let envelope_constant = values
        .iter()
        .enumerate()
        .map(|(j, s)| s * 2f64.powf(j as f64 * alpha0))
        .fold(0.0, f64::max);
    Ok(DyadicSequence {
        center,
        j_max,
        values,
        members,
        c_star,
        amplification,
        implied_constant,
        envelope_constant,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum RateKind {
    Growth,
    Nondegeneracy,
    Gradient,
}

impl RateKind {
    fn name(self) -> &'static str {
        match self {
            RateKind::Growth => "growth_rate",
            RateKind::Nondegeneracy => "nondegeneracy",
            RateKind::Gradient => "gradient_rate",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RateReport {
    pub kind: RateKind,
    pub center: (f64, f64),
    /// Radii that entered the computation.
    pub radii: Vec<f64>,
    /// Measured supremum per radius.
    pub sups: Vec<f64>,
    /// Radii dropped, with the reason.
    pub dropped: Vec<(f64, String)>,
    pub slope: Option<f64>,
    pub intercept: Option<f64>,
    pub r_squared: Option<f64>,
    pub target: f64,
    pub tolerance: f64,
    /// `min_r sup/r^target`.
    pub envelope_min: f64,
    /// `max_r sup/r^target`.
    pub envelope_max: f64,
    pub verdict: Verdict,
}

impl RateReport {
    /// Ratio `max/min` of the envelope constants over the ladder.
    pub fn spread(&self) -> f64 {
        if self.envelope_min > 0.0 {
            self.envelope_max / self.envelope_min
        } else {
            f64::INFINITY
        }
    }

    pub fn to_probe_report(&self) -> ProbeReport {
        let mut rep = ProbeReport::new(self.kind.name(), [self.center.0, self.center.1], self.radii.clone())
            .verdict("overall", self.verdict)
            .constant("target", self.target)
            .constant("tolerance", self.tolerance)
            .constant("envelope_min", self.envelope_min)
            .constant("envelope_max", self.envelope_max);
        if let (Some(s), Some(b), Some(r2)) = (self.slope, self.intercept, self.r_squared) {
            rep = rep.constant("slope", s).constant("intercept", b).constant("r_squared", r2);
        }
        if !self.dropped.is_empty() {
            let notes: Vec<String> = self.dropped.iter().map(|(r, why)| format!("{r}: {why}")).collect();
            rep = rep.verdict("dropped", notes.join("; "));
        }
        rep
    }
}

fn collect_rates(
    field: &SpaceTimeField,
    center: (f64, f64),
    radii: &[f64],
    mut measure: impl FnMut(&IntrinsicCylinder) -> Result<f64>,
) -> Result<(Vec<f64>, Vec<f64>, Vec<(f64, String)>)> {
    let mut kept_r = Vec::new();
    let mut sups = Vec::new();
    let mut dropped = Vec::new();
    for &r in radii {
        if !resolved(field, r) {
            dropped.push((r, "below grid resolution".to_string()));
            continue;
        }
        let cyl = IntrinsicCylinder::resolve(field, center.0, center.1, r)?;
        let s = measure(&cyl)?;
        kept_r.push(r);
        sups.push(s);
    }
    Ok((kept_r, sups, dropped))
}

fn envelope(radii: &[f64], sups: &[f64], target: f64) -> (f64, f64) {
    radii
        .iter()
        .zip(sups)
        .map(|(r, s)| s / r.powf(target))
        .fold((f64::INFINITY, 0.0f64), |(lo, hi), v| (lo.min(v), hi.max(v)))
}

fn slope_report(
    kind: RateKind,
    center: (f64, f64),
    radii: Vec<f64>,
    sups: Vec<f64>,
    mut dropped: Vec<(f64, String)>,
    target: f64,
    tolerance: f64,
) -> Result<RateReport> {
    for (r, s) in radii.iter().zip(&sups) {
        if *s <= 0.0 {
            dropped.push((*r, "supremum is zero".to_string()));
        }
    }
    let fit: LogLogFit = fit_log_log(&radii, &sups)?;
    let (kr, ks): (Vec<f64>, Vec<f64>) = fit.used.iter().map(|&i| (radii[i], sups[i])).unzip();
    let (lo, hi) = envelope(&kr, &ks, target);
    let pass = (fit.slope - target).abs() <= tolerance && fit.r_squared >= MIN_R_SQUARED;
    Ok(RateReport {
        kind,
        center,
        radii,
        sups,
        dropped,
        slope: Some(fit.slope),
        intercept: Some(fit.intercept),
        r_squared: Some(fit.r_squared),
        target,
        tolerance,
        envelope_min: lo,
        envelope_max: hi,
        verdict: Verdict::from_bool(pass),
    })
}

/// Fit of `log sup_{Q⁻_r} u` against `log r`; target `α₀`.
pub fn growth_rate_fit(
    field: &SpaceTimeField,
    center: (f64, f64),
    radii: &[f64],
    tolerance: f64,
) -> Result<RateReport> {
    let target = compute_exponents(&field.params)?.alpha0;
    let (r, s, d) = collect_rates(field, center, radii, |cyl| cylinder_sup(field, cyl, Region::Backward))?;
    slope_report(RateKind::Growth, center, r, s, d, target, tolerance)
}

/// Lower envelope `min_r sup_{∂_pQ⁻_r} u / r^{α₀}`.
///
/// Passes when the envelope is positive and its spread over the ladder is at
/// most [`MAX_ENVELOPE_SPREAD`]. A log-log slope is attached when at least
/// three radii have positive suprema.
pub fn nondegeneracy_fit(field: &SpaceTimeField, center: (f64, f64), radii: &[f64]) -> Result<RateReport> {
    let target = compute_exponents(&field.params)?.alpha0;
    let (radii, sups, dropped) = collect_rates(field, center, radii, |cyl| {
        cylinder_sup(field, cyl, Region::ParabolicBoundary)
    })?;
    if radii.len() < MIN_FIT_POINTS {
        return Err(Error::TooFewRadii {
            usable: radii.len(),
            needed: MIN_FIT_POINTS,
        });
    }
    let (lo, hi) = envelope(&radii, &sups, target);
    let fit = fit_log_log(&radii, &sups).ok();
    let pass = lo > 0.0 && hi / lo <= MAX_ENVELOPE_SPREAD;
    Ok(RateReport {
        kind: RateKind::Nondegeneracy,
        center,
        radii,
        sups,
        dropped,
        slope: fit.as_ref().map(|f| f.slope),
        intercept: fit.as_ref().map(|f| f.intercept),
        r_squared: fit.as_ref().map(|f| f.r_squared),
        target,
        tolerance: MAX_ENVELOPE_SPREAD,
        envelope_min: lo,
        envelope_max: hi,
        verdict: Verdict::from_bool(pass),
    })
}

/// `|∇u|` at every node of snapshot `k`.
///
/// Centred differences inside the positivity set, one-sided differences into
/// it at nodes next to the dead set, zero on the dead set.
pub fn gradient_magnitudes(field: &SpaceTimeField, k: usize, threshold: f64) -> Vec<f64> {
    let u = &field.slices[k];
    let n = field.nx();
    let dx = field.dx();
    let live = |i: usize| u[i] > threshold;
    (0..=n)
        .map(|i| {
            if !live(i) {
                return 0.0;
            }
            if field.grid.is_radial() && i == 0 {
                return 0.0;
            }
            let left = i > 0 && live(i - 1);
            let right = i < n && live(i + 1);
            match (left, right) {
                (true, true) => (u[i + 1] - u[i - 1]).abs() / (2.0 * dx),
                (false, true) => (u[i + 1] - u[i]).abs() / dx,
                (true, false) => (u[i] - u[i - 1]).abs() / dx,
                (false, false) => {
                    // Isolated positive node: one-sided towards whichever side exists.
                    if i < n {
                        (u[i + 1] - u[i]).abs() / dx
                    } else {
                        (u[i] - u[i - 1]).abs() / dx
                    }
                }
            }
        })
        .collect()
}

/// Fit of `log sup_{Q⁻_r} |∇u|` against `log r`; target `(1+q)/(p−1−q)`.
pub fn gradient_rate_fit(
    field: &SpaceTimeField,
    center: (f64, f64),
    radii: &[f64],
    tolerance: f64,
) -> Result<RateReport> {
    let target = compute_exponents(&field.params)?.grad_alpha;
    // Gradients are taken on the exact support: sub-threshold dust next to the
    // free boundary is still smooth data for a difference quotient.
    let threshold = 0.0;
    let mut cache: Vec<Option<Vec<f64>>> = vec![None; field.times.len()];
    let (r, s, d) = collect_rates(field, center, radii, |cyl| {
        let mut m = 0.0f64;
        for &k in &cyl.backward {
            let g = cache[k].get_or_insert_with(|| gradient_magnitudes(field, k, threshold));
            for &(i, _) in &cyl.nodes {
                m = m.max(g[i]);
            }
        }
        Ok(m)
    })?;
    slope_report(RateKind::Gradient, center, r, s, d, target, tolerance)
}

/// A field rescaled around a free-boundary point.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Rescaled {
    pub field: SpaceTimeField,
    pub epsilon: f64,
    pub center: (f64, f64),
    /// Whether every rescaled node maps onto a stored node and every rescaled
    /// time onto a stored snapshot, so no interpolation was needed.
    pub node_aligned: bool,
}

/// Largest `ε` for which `Q₁` in rescaled coordinates maps into the stored data.
pub fn max_legal_epsilon(field: &SpaceTimeField, center: (f64, f64)) -> Result<f64> {
    let theta = compute_exponents(&field.params)?.theta;
    let (lo, hi) = field.span();
    let first = field.times[0];
    let last = *field.times.last().unwrap();
    let space = (center.0 - lo).min(hi - center.0);
    let time = (center.1 - first).min(last - center.1);
    if space <= 0.0 || time <= 0.0 {
        return Ok(0.0);
    }
    Ok(space.min(time.powf(1.0 / theta)))
}

/// `u_ε(y, s) = u(x₀ + εy, t₀ + ε^θ s) / ε^{α₀}` on `Q₁ = [−1,1] × [−1,1]`.
///
/// The rescaled grid has spacing `dx/ε` (at least 16 cells), and the rescaled
/// times are the images of stored snapshots in the window plus `s = ±1`.
/// Off-node samples use bilinear interpolation.
pub fn blowup_rescale(field: &SpaceTimeField, center: (f64, f64), epsilon: f64) -> Result<Rescaled> {
    let ex = compute_exponents(&field.params)?;
    let (x0, t0) = center;
    if !(epsilon > 0.0) {
        return Err(Error::InvalidArgument(format!("ε must be positive, got {epsilon}")));
    }
    let legal = max_legal_epsilon(field, center)?;
    if epsilon > legal * (1.0 + 1e-12) {
        return Err(Error::OutsideHistory(format!(
            "zoom ε = {epsilon} leaves the stored data; maximal legal ε is {legal}"
        )));
    }
    let h = epsilon.powf(ex.theta);
    let scale = epsilon.powf(ex.alpha0);
    let cells = (2.0 * epsilon / field.dx()).round().max(16.0) as usize;
    let grid = GridSpec {
        geometry: crate::field::Geometry::Interval { xl: -1.0, xr: 1.0 },
        nx: cells,
        t_end: 1.0,
        cfl_sigma: field.grid.cfl_sigma,
        snapshot_every: 2.0,
        dt_max: None,
    };
    let ttol = 1e-12 * (field.times.last().unwrap() - field.times[0]).abs().max(1.0);
    let mut times: Vec<f64> = vec![-1.0];
    for k in field.snapshots_in(t0 - h, t0 + h)? {
        let s = (field.times[k] - t0) / h;
        if s > -1.0 + 1e-12 && s < 1.0 - 1e-12 {
            times.push(s);
        }
    }
    times.push(1.0);
    let stored_time = |t: f64| field.times.iter().any(|&s| (s - t).abs() <= ttol);
    let stored_node = |x: f64| {
        let s = field.stored_coordinate(x);
        let pos = (s - field.grid.left()) / field.dx();
        (pos - pos.round()).abs() < 1e-9
    };
    let mut aligned = true;
    let mut slices = Vec::with_capacity(times.len());
    for &s in &times {
        let t = t0 + h * s;
        aligned &= stored_time(t);
        let slice = (0..=cells)
            .map(|j| {
                let y = grid.node(j);
                let x = x0 + epsilon * y;
                aligned &= stored_node(x);
                field.value_at(x, t).map(|u| u / scale)
            })
            .collect::<Result<Vec<_>>>()?;
        slices.push(slice);
    }
    let ends = [slices[0][0], slices[0][cells]];
    let rescaled = SpaceTimeField::from_slices(
        grid,
        field.params.clone(),
        BoundaryData {
            left: Trace::constant(ends[0]),
            right: Trace::constant(ends[1]),
        },
        times,
        slices,
    )?;
    Ok(Rescaled {
        field: rescaled,
        epsilon,
        center,
        node_aligned: aligned,
    })
}

/// Largest `|a − b|` over nodes and snapshot times the two fields share.
///
/// Returns `None` when they share nothing.
pub fn max_shared_deviation(a: &SpaceTimeField, b: &SpaceTimeField) -> Option<f64> {
    let tol = 1e-12;
    let mut worst: Option<f64> = None;
    for (ka, &ta) in a.times.iter().enumerate() {
        let Some(kb) = b.times.iter().position(|&tb| (tb - ta).abs() <= tol * ta.abs().max(1.0)) else {
            continue;
        };
        for i in 0..=a.nx() {
            let x = a.x(i);
            let pos = (x - b.grid.left()) / b.dx();
            let j = pos.round();
            if (pos - j).abs() > 1e-9 || j < 0.0 || j > b.nx() as f64 {
                continue;
            }
            let d = (a.slices[ka][i] - b.slices[kb][j as usize]).abs();
            worst = Some(worst.map_or(d, |w: f64| w.max(d)));
        }
    }
    worst
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum GrowthClass {
    #[serde(rename = "SUBCRITICAL")]
    Subcritical,
    #[serde(rename = "CRITICAL-OR-ABOVE")]
    CriticalOrAbove,
}

impl std::fmt::Display for GrowthClass {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            GrowthClass::Subcritical => "SUBCRITICAL",
            GrowthClass::CriticalOrAbove => "CRITICAL",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LiouvilleReport {
    pub center: (f64, f64),
    pub radii: Vec<f64>,
    /// `ρ_r = sup_{Q_r} u / r^{α₀}`.
    pub rho: Vec<f64>,
    pub class: GrowthClass,
    /// `max ρ / min ρ`, infinite when some `ρ_r` vanishes.
    pub spread: f64,
}

impl LiouvilleReport {
    pub fn to_probe_report(&self) -> ProbeReport {
        ProbeReport::new("liouville", [self.center.0, self.center.1], self.radii.clone())
            .verdict("class", self.class)
            .constant("rho_first", self.rho[0])
            .constant("rho_last", *self.rho.last().unwrap())
            .constant("spread", self.spread)
    }
}

/// Classifies the growth of `ρ_r` over increasing radii.
///
/// Subcritical when `ρ` is identically zero or falls by at least
/// [`SUBCRITICAL_DECAY`] from the first to the last radius.
pub fn liouville_classify(
    field: &SpaceTimeField,
    center: (f64, f64),
    radii_increasing: &[f64],
) -> Result<LiouvilleReport> {
    if radii_increasing.len() < MIN_FIT_POINTS {
        return Err(Error::TooFewRadii {
            usable: radii_increasing.len(),
            needed: MIN_FIT_POINTS,
        });
    }
    if radii_increasing.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidArgument("radii must be strictly increasing".into()));
    }
    let alpha0 = compute_exponents(&field.params)?.alpha0;
    let rho = radii_increasing
        .iter()
        .map(|&r| {
            let cyl = IntrinsicCylinder::resolve(field, center.0, center.1, r)?;
            Ok(cylinder_sup(field, &cyl, Region::Full)? / r.powf(alpha0))
        })
        .collect::<Result<Vec<f64>>>()?;
    let first = rho[0];
    let last = *rho.last().unwrap();
    let all_zero = rho.iter().all(|&v| v == 0.0);
    let class = if all_zero || (first > 0.0 && first >= SUBCRITICAL_DECAY * last) {
        GrowthClass::Subcritical
    } else {
        GrowthClass::CriticalOrAbove
    };
    let (lo, hi) = rho
        .iter()
        .fold((f64::INFINITY, 0.0f64), |(lo, hi), &v| (lo.min(v), hi.max(v)));
    let spread = if lo > 0.0 { hi / lo } else { f64::INFINITY };
    Ok(LiouvilleReport {
        center,
        radii: radii_increasing.to_vec(),
        rho,
        class,
        spread,
    })
}

/// Relative tolerance per snapshot for the energy monotonicity check.
pub const ENERGY_RTOL: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EnergyReport {
    pub times: Vec<f64>,
    /// Discrete `∫u²` per snapshot.
    pub energy: Vec<f64>,
    /// Largest increase `E_{k+1} − E_k` (negative when strictly decaying).
    pub worst_increase: f64,
    pub scale: f64,
    /// Minimum of `u` over interior nodes per snapshot.
    pub interior_min: Vec<f64>,
    pub verdict: Verdict,
}

impl EnergyReport {
    pub fn to_probe_report(&self) -> ProbeReport {
        ProbeReport::new("energy_decay", [f64::NAN, self.times[0]], Vec::new())
            .verdict("overall", self.verdict)
            .constant("energy_first", self.energy[0])
            .constant("energy_last", *self.energy.last().unwrap())
            .constant("worst_increase", self.worst_increase)
            .constant(
                "interior_min",
                self.interior_min.iter().copied().fold(f64::INFINITY, f64::min),
            )
    }
}

/// Discrete `∫u²` of one slice (trapezoidal on intervals, shell volumes on radial grids).
pub fn energy(field: &SpaceTimeField, k: usize) -> f64 {
    let u = &field.slices[k];
    let dx = field.dx();
    let n = field.nx();
    if field.grid.is_radial() {
        let dim = field.params.dim as i32;
        (0..=n)
            .map(|i| {
                let r = field.x(i);
                let outer = (r + 0.5 * dx).min(field.grid.right()).powi(dim);
                let inner = if i == 0 { 0.0 } else { (r - 0.5 * dx).powi(dim) };
                u[i] * u[i] * (outer - inner) / dim as f64
            })
            .sum()
    } else {
        (0..=n)
            .map(|i| {
                let w = if i == 0 || i == n { 0.5 } else { 1.0 };
                w * u[i] * u[i] * dx
            })
            .sum()
    }
}

/// Minimum of each slice over nodes at least `margin` away from the outer boundary.
pub fn interior_minimum(field: &SpaceTimeField, margin: f64) -> Vec<f64> {
    let (lo, hi) = (field.grid.left(), field.grid.right());
    let radial = field.grid.is_radial();
    field
        .slices
        .iter()
        .map(|u| {
            (0..=field.nx())
                .filter(|&i| {
                    let x = field.x(i);
                    (radial || x - lo >= margin) && hi - x >= margin
                })
                .map(|i| u[i])
                .fold(f64::INFINITY, f64::min)
        })
        .collect()
}

/// Checks that `∫u²` does not increase between snapshots of a critical run
/// with zero boundary data.
pub fn energy_decay_check(field: &SpaceTimeField) -> Result<EnergyReport> {
    if !field.params.critical {
        return Err(Error::Precondition(
            "energy decay applies only to critical parameters (q = p − 1)".into(),
        ));
    }
    if field.boundary != BoundaryData::zero() {
        return Err(Error::Precondition(
            "energy decay requires zero Dirichlet boundary data".into(),
        ));
    }
    let energy: Vec<f64> = (0..field.times.len()).map(|k| energy(field, k)).collect();
    let scale = energy.iter().copied().fold(0.0, f64::max);
    let worst_increase = energy
        .windows(2)
        .map(|w| w[1] - w[0])
        .fold(f64::NEG_INFINITY, f64::max);
    let pass = energy.len() < 2 || worst_increase <= ENERGY_RTOL * scale;
    let worst_increase = if energy.len() < 2 { 0.0 } else { worst_increase };
    let margin = 0.25 * (field.grid.right() - field.grid.left());
    Ok(EnergyReport {
        times: field.times.clone(),
        energy,
        worst_increase,
        scale,
        interior_min: interior_minimum(field, margin),
        verdict: Verdict::from_bool(pass),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exact::{ClosedForm, Sign};
    use crate::params::ProblemParams;

    fn p2q_half() -> ProblemParams {
        ProblemParams::new(2.0, 0.5, 1, 1.0).unwrap()
    }

    fn halfspace(nx: usize, times: Vec<f64>) -> SpaceTimeField {
        let cf = ClosedForm::halfspace(p2q_half(), 0, Sign::Plus).unwrap();
        SpaceTimeField::from_closed_form(&cf, GridSpec::interval(-1.0, 1.0, nx, 2.0, 1.0), times).unwrap()
    }

    fn zero(nx: usize, times: Vec<f64>) -> SpaceTimeField {
        let cf = ClosedForm::zero(p2q_half());
        SpaceTimeField::from_closed_form(&cf, GridSpec::interval(-1.0, 1.0, nx, 2.0, 1.0), times).unwrap()
    }

    #[test]
    fn dyadic_sequence_on_halfspace() {
        let f = halfspace(256, vec![0.0, 1.0]);
        let seq = dyadic_sequence(&f, (0.0, 1.0), 5, 1.0 / 144.0).unwrap();
        for (j, s) in seq.values.iter().enumerate() {
            let exact = 2f64.powi(-4 * j as i32) / 144.0;
            assert!((s - exact).abs() < 1e-15 * exact.max(1e-300) + 1e-18, "{j}");
        }
        assert!(seq.members.iter().all(|&m| m));
        assert!((seq.envelope_constant - 1.0 / 144.0).abs() < 1e-15);
        assert!((seq.implied_constant - 1.0 / 2304.0).abs() < 1e-15);
    }

    #[test]
    fn dyadic_flags_are_scale_invariant() {
        let cf = ClosedForm::halfspace(p2q_half(), 0, Sign::Plus).unwrap();
        let grid = GridSpec::interval(-2.0, 2.0, 256, 2.0, 1.0);
        let f = SpaceTimeField::from_closed_form(&cf, grid, vec![0.0, 1.0]).unwrap();
        let mut g = f.clone();
        for s in &mut g.slices {
            for v in s.iter_mut() {
                *v *= 7.5;
            }
        }
        let a = dyadic_sequence(&f, (0.3, 1.0), 4, 0.5).unwrap();
        let b = dyadic_sequence(&g, (0.3, 1.0), 4, 0.5).unwrap();
        assert_eq!(a.members, b.members);
    }

    #[test]
    fn dyadic_sequence_zero_field_and_resolution() {
        let f = zero(64, vec![0.0, 1.0]);
        let seq = dyadic_sequence(&f, (0.0, 1.0), 3, 1.0).unwrap();
        assert!(seq.values.iter().all(|&s| s == 0.0));
        assert_eq!(seq.implied_constant, 0.0);
        let err = dyadic_sequence(&f, (0.0, 1.0), 5, 1.0).unwrap_err();
        assert!(err.to_string().contains("finest legal j is 4"), "{err}");
    }

    #[test]
    fn halfspace_growth_slope_is_four() {
        let f = halfspace(2048, vec![0.0, 1.0]);
        let radii: Vec<f64> = (2..=8).map(|k| 0.5f64.powi(k)).collect();
        let rep = growth_rate_fit(&f, (0.0, 1.0), &radii, 0.05).unwrap();
        assert!((rep.slope.unwrap() - 4.0).abs() < 1e-9);
        assert!(rep.verdict.is_pass());
    }

    #[test]
    fn ode_window_temporal_slope_is_four() {
        let params = p2q_half();
        let cf = ClosedForm::ode_deadcore(params, 2.0).unwrap();
        let times: Vec<f64> = (0..=256).map(|k| k as f64 / 64.0).collect();
        let f = SpaceTimeField::from_closed_form(&cf, GridSpec::interval(-1.0, 1.0, 64, 4.0, 1.0 / 64.0), times)
            .unwrap();
        let radii = [0.5, 0.25, 0.125];
        let rep = growth_rate_fit(&f, (0.0, 2.0), &radii, 0.05).unwrap();
        assert!((rep.slope.unwrap() - 4.0).abs() < 1e-9, "{rep:?}");
    }

    #[test]
    fn halfspace_nondegeneracy_constant() {
        let f = halfspace(1024, vec![0.0, 1.0]);
        let radii: Vec<f64> = (1..=6).map(|k| 0.5f64.powi(k)).collect();
        let rep = nondegeneracy_fit(&f, (0.0, 1.0), &radii).unwrap();
        assert!((rep.envelope_min - 1.0 / 144.0).abs() < 1e-15);
        assert!((rep.spread() - 1.0).abs() < 1e-12);
        assert!(rep.verdict.is_pass());
        let z = zero(1024, vec![0.0, 1.0]);
        let rep = nondegeneracy_fit(&z, (0.0, 1.0), &radii).unwrap();
        assert_eq!(rep.envelope_min, 0.0);
        assert!(!rep.verdict.is_pass());
    }

    #[test]
    fn halfspace_gradient_slope_is_three() {
        let f = halfspace(2048, vec![0.0, 1.0]);
        let radii: Vec<f64> = (2..=8).map(|k| 0.5f64.powi(k)).collect();
        let rep = gradient_rate_fit(&f, (0.0, 1.0), &radii, 0.05).unwrap();
        assert!((rep.slope.unwrap() - 3.0).abs() < 0.05, "{rep:?}");
        let z = zero(256, vec![0.0, 1.0]);
        assert!(matches!(
            gradient_rate_fit(&z, (0.0, 1.0), &radii, 0.3),
            Err(Error::TooFewRadii { .. })
        ));
    }

    #[test]
    fn halfspace_rescale_is_invariant() {
        let f = halfspace(1024, vec![0.0, 0.5, 0.75, 1.0, 1.25, 1.5, 2.0]);
        for eps in [0.5, 0.25, 0.125] {
            let r = blowup_rescale(&f, (0.0, 1.0), eps).unwrap();
            let dev = max_shared_deviation(&r.field, &f).unwrap();
            assert!(dev <= 1e-12, "{eps}: {dev}");
        }
        let err = blowup_rescale(&f, (0.5, 1.0), 0.75).unwrap_err();
        assert!(err.to_string().contains("maximal legal"), "{err}");
    }

    #[test]
    fn ode_rescale_reproduces_profile() {
        let cf = ClosedForm::ode_deadcore(p2q_half(), 2.0).unwrap();
        let times: Vec<f64> = (0..=64).map(|k| k as f64 / 16.0).collect();
        let f = SpaceTimeField::from_closed_form(&cf, GridSpec::interval(-1.0, 1.0, 64, 4.0, 1.0), times).unwrap();
        let r = blowup_rescale(&f, (0.0, 2.0), 0.5).unwrap();
        let unit = ClosedForm::ode_deadcore(p2q_half(), 0.0).unwrap();
        for (k, &s) in r.field.times.iter().enumerate() {
            let want = unit.evaluate_1d(0.0, s).unwrap();
            assert!((r.field.slices[k][10] - want).abs() < 1e-12, "s = {s}");
        }
    }

    #[test]
    fn rescale_composes() {
        let cf = ClosedForm::radial(p2q_half(), vec![0.0], 0.25).unwrap();
        let times: Vec<f64> = (0..=16).map(|k| k as f64 / 16.0).collect();
        let f = SpaceTimeField::from_closed_form(&cf, GridSpec::interval(-1.0, 1.0, 512, 1.0, 1.0), times).unwrap();
        let c = (0.25, 0.5);
        let once = blowup_rescale(&f, c, 0.5).unwrap();
        let twice = blowup_rescale(&once.field, (0.0, 0.0), 0.5).unwrap();
        let direct = blowup_rescale(&f, c, 0.25).unwrap();
        let dev = max_shared_deviation(&twice.field, &direct.field).unwrap();
        assert!(dev <= 1e-10, "{dev}");
    }

    #[test]
    fn liouville_classes() {
        let radii = [0.125, 0.25, 0.5, 1.0];
        let z = zero(256, vec![0.0, 1.0, 2.0]);
        assert_eq!(liouville_classify(&z, (0.0, 1.0), &radii).unwrap().class, GrowthClass::Subcritical);

        let h = halfspace(256, vec![0.0, 1.0, 2.0]);
        let rep = liouville_classify(&h, (0.0, 1.0), &radii).unwrap();
        assert_eq!(rep.class, GrowthClass::CriticalOrAbove);
        assert!(rep.spread - 1.0 < 1e-12);
        let mut scaled = h.clone();
        scaled.slices.iter_mut().flatten().for_each(|v| *v *= 3.0);
        assert_eq!(liouville_classify(&scaled, (0.0, 1.0), &radii).unwrap().class, rep.class);

        let cf = ClosedForm::ode_deadcore(p2q_half(), 2.0).unwrap();
        let times: Vec<f64> = (0..=192).map(|k| k as f64 / 64.0).collect();
        let f = SpaceTimeField::from_closed_form(&cf, GridSpec::interval(-1.0, 1.0, 64, 3.0, 1.0), times).unwrap();
        let rep = liouville_classify(&f, (0.0, 2.0), &radii).unwrap();
        assert_eq!(rep.class, GrowthClass::CriticalOrAbove);
        assert!(rep.rho.iter().all(|r| (r - 0.25).abs() < 1e-12), "{:?}", rep.rho);

        assert!(matches!(
            liouville_classify(&z, (0.0, 1.0), &[0.5, 1.0]),
            Err(Error::TooFewRadii { .. })
        ));
    }

    #[test]
    fn energy_guards_and_zero_field() {
        let h = halfspace(64, vec![0.0, 1.0]);
        assert!(matches!(energy_decay_check(&h), Err(Error::Precondition(_))));
        let params = ProblemParams::critical(2.0, 1, 1.0).unwrap();
        let grid = GridSpec::interval(-1.0, 1.0, 32, 1.0, 0.5);
        let f = SpaceTimeField::from_slices(
            grid,
            params,
            BoundaryData::zero(),
            vec![0.0, 0.5, 1.0],
            vec![vec![0.0; 33]; 3],
        )
        .unwrap();
        let rep = energy_decay_check(&f).unwrap();
        assert!(rep.verdict.is_pass());
        assert!(rep.energy.iter().all(|&e| e == 0.0));
    }
}
