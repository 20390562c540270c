//! Explicit solutions and comparison functions of the dead-core equation, and a
//! flux-form finite-difference residual used to certify them.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::params::{
    barrier_constant_growth, barrier_constant_nondeg, compute_exponents, cpq_constant,
    ProblemParams,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Sign {
    Plus,
    Minus,
}

impl Sign {
    pub fn factor(self) -> f64 {
        match self {
            Sign::Plus => 1.0,
            Sign::Minus => -1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ProfileKind {
    /// `[(1−q)λ₀(t₀−t)]₊^{1/(1−q)}`, spatially flat and extinct after `t₀`.
    OdeDeadcore { extinction_time: f64 },
    /// `C_{p,q}·(±x_i)₊^{α₀}`.
    Halfspace { axis: usize, sign: Sign },
    /// `C_{p,q}·(|x−x₀|−R₀)₊^{α₀}`.
    Radial { center: Vec<f64>, core_radius: f64 },
    /// Growth barrier `𝔠₁(a|x|^{p/(p−1)} + b t^e)^{(p−1)/(p−1−q)}` on `t ≥ 0`.
    BarrierGrowth { a: f64, b: f64, c1: f64 },
    /// Non-degeneracy barrier `𝔠(|x|^{p/(p−1)} + (−t)^e)^{(p−1)/(p−1−q)}` on `t ≤ 0`.
    BarrierNondeg { c: f64 },
    /// `exp(√λ₀ x_i) + exp(−λ₀ t)` for p = 2, q = 1.
    CriticalExpP2 { axis: usize },
    /// `exp((λ₀/(p−1))^{1/p} x_i)` for q = p − 1.
    CriticalExpGeneral { axis: usize },
    /// `((p−2)λ₀ t)^{1/(2−p)}` for p > 2, q = p − 1, on `t > 0`.
    CriticalTimePGt2,
    Zero,
}

impl ProfileKind {
    pub fn name(&self) -> &'static str {
        match self {
            ProfileKind::OdeDeadcore { .. } => "ode_deadcore",
            ProfileKind::Halfspace { .. } => "halfspace",
            ProfileKind::Radial { .. } => "radial",
            ProfileKind::BarrierGrowth { .. } => "barrier_growth",
            ProfileKind::BarrierNondeg { .. } => "barrier_nondeg",
            ProfileKind::CriticalExpP2 { .. } => "critical_exp_p2",
            ProfileKind::CriticalExpGeneral { .. } => "critical_exp_general",
            ProfileKind::CriticalTimePGt2 => "critical_time_p_gt2",
            ProfileKind::Zero => "zero",
        }
    }
}

/// A closed-form function of `(x, t)` tied to the problem it solves (or bounds).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClosedForm {
    #[serde(flatten)]
    pub kind: ProfileKind,
    pub params: ProblemParams,
}

/// Variants of the smooth positive solutions in the critical case.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CriticalVariant {
    /// `exp((λ₀/(p−1))^{1/p} x_i)`, any p ≥ 2.
    Exponential { axis: usize },
    /// `((p−2)λ₀ t)^{1/(2−p)}`, p > 2 only.
    TimePower,
    /// `exp(√λ₀ x_i) + exp(−λ₀ t)`, p = 2 only.
    ExpSum { axis: usize },
}

fn constant_lambda(params: &ProblemParams) -> Result<f64> {
    params.lambda0.constant_value().ok_or(Error::NonConstantModulus)
}

impl ClosedForm {
    pub fn zero(params: ProblemParams) -> Self {
        Self {
            kind: ProfileKind::Zero,
            params,
        }
    }

    pub fn ode_deadcore(params: ProblemParams, extinction_time: f64) -> Result<Self> {
        compute_exponents(&params)?;
        constant_lambda(&params)?;
        Ok(Self {
            kind: ProfileKind::OdeDeadcore { extinction_time },
            params,
        })
    }

    /// The flat profile starting from `u0` at `t = 0`; extinct at `u0^{1−q}/((1−q)λ₀)`.
    pub fn ode_from_initial(params: ProblemParams, u0: f64) -> Result<Self> {
        let lambda = constant_lambda(&params)?;
        let t0 = u0.powf(1.0 - params.q) / ((1.0 - params.q) * lambda);
        Self::ode_deadcore(params, t0)
    }

    pub fn halfspace(params: ProblemParams, axis: usize, sign: Sign) -> Result<Self> {
        cpq_constant(&params)?;
        check_axis(&params, axis)?;
        Ok(Self {
            kind: ProfileKind::Halfspace { axis, sign },
            params,
        })
    }

    pub fn radial(params: ProblemParams, center: Vec<f64>, core_radius: f64) -> Result<Self> {
        cpq_constant(&params)?;
        if center.len() != params.dim {
            return Err(Error::InvalidArgument(format!(
                "center has {} coordinates, dimension is {}",
                center.len(),
                params.dim
            )));
        }
        if core_radius < 0.0 {
            return Err(Error::InvalidArgument("core radius must be >= 0".into()));
        }
        Ok(Self {
            kind: ProfileKind::Radial {
                center,
                core_radius,
            },
            params,
        })
    }

    pub fn barrier_growth(params: ProblemParams, a: f64, b: f64) -> Result<Self> {
        let c1 = barrier_constant_growth(&params, a)?;
        if !(b > 0.0) {
            return Err(Error::InvalidArgument(format!("barrier weight b = {b} must be positive")));
        }
        Ok(Self {
            kind: ProfileKind::BarrierGrowth { a, b, c1 },
            params,
        })
    }

    pub fn barrier_nondeg(params: ProblemParams) -> Result<Self> {
        let c = barrier_constant_nondeg(&params)?;
        Ok(Self::barrier_nondeg_with(params, c))
    }

    /// Non-degeneracy barrier with an explicit constant.
    pub fn barrier_nondeg_with(params: ProblemParams, c: f64) -> Self {
        Self {
            kind: ProfileKind::BarrierNondeg { c },
            params,
        }
    }

    pub fn evaluate(&self, x: &[f64], t: f64) -> Result<f64> {
        if x.len() != self.params.dim {
            return Err(Error::InvalidArgument(format!(
                "point has {} coordinates, dimension is {}",
                x.len(),
                self.params.dim
            )));
        }
        let (p, q) = (self.params.p, self.params.q);
        let value = match &self.kind {
            ProfileKind::Zero => 0.0,
            ProfileKind::OdeDeadcore { extinction_time } => {
                let lambda = constant_lambda(&self.params)?;
                let base = (1.0 - q) * lambda * (extinction_time - t);
                if base <= 0.0 {
                    0.0
                } else {
                    base.powf(1.0 / (1.0 - q))
                }
            }
            ProfileKind::Halfspace { axis, sign } => {
                let s = sign.factor() * x[*axis];
                if s <= 0.0 {
                    0.0
                } else {
                    let alpha0 = compute_exponents(&self.params)?.alpha0;
                    cpq_constant(&self.params)? * s.powf(alpha0)
                }
            }
            ProfileKind::Radial {
                center,
                core_radius,
            } => {
                let s = distance(x, center) - core_radius;
                if s <= 0.0 {
                    0.0
                } else {
                    let alpha0 = compute_exponents(&self.params)?.alpha0;
                    cpq_constant(&self.params)? * s.powf(alpha0)
                }
            }
            ProfileKind::BarrierGrowth { a, b, c1 } => {
                if t < 0.0 {
                    return Err(Error::Domain {
                        kind: "barrier_growth",
                        coordinate: "t",
                        value: t,
                        reason: "requires t >= 0",
                    });
                }
                let gap = p - 1.0 - q;
                let e = gap / ((p - 1.0) * (1.0 - q));
                let r = norm(x);
                let inner = a * r.powf(p / (p - 1.0)) + b * t.powf(e);
                c1 * inner.powf((p - 1.0) / gap)
            }
            ProfileKind::BarrierNondeg { c } => {
                if t > 0.0 {
                    return Err(Error::Domain {
                        kind: "barrier_nondeg",
                        coordinate: "t",
                        value: t,
                        reason: "requires t <= 0",
                    });
                }
                let gap = p - 1.0 - q;
                let e = gap / ((p - 1.0) * (1.0 - q));
                let r = norm(x);
                let inner = r.powf(p / (p - 1.0)) + (-t).powf(e);
                c * inner.powf((p - 1.0) / gap)
            }
            ProfileKind::CriticalExpP2 { axis } => {
                let lambda = constant_lambda(&self.params)?;
                (lambda.sqrt() * x[*axis]).exp() + (-lambda * t).exp()
            }
            ProfileKind::CriticalExpGeneral { axis } => {
                let lambda = constant_lambda(&self.params)?;
                ((lambda / (p - 1.0)).powf(1.0 / p) * x[*axis]).exp()
            }
            ProfileKind::CriticalTimePGt2 => {
                if t <= 0.0 {
                    return Err(Error::Domain {
                        kind: "critical_time_p_gt2",
                        coordinate: "t",
                        value: t,
                        reason: "requires t > 0",
                    });
                }
                let lambda = constant_lambda(&self.params)?;
                ((p - 2.0) * lambda * t).powf(1.0 / (2.0 - p))
            }
        };
        Ok(value)
    }

    /// Convenience evaluation for one-dimensional forms.
    pub fn evaluate_1d(&self, x: f64, t: f64) -> Result<f64> {
        self.evaluate(&[x], t)
    }

    /// Distance from `(x, t)` to the set where the profile is not smooth
    /// (free boundary, vertex of a barrier), or `None` if it is smooth everywhere.
    pub fn kink_distance(&self, x: &[f64], t: f64) -> Option<f64> {
        match &self.kind {
            ProfileKind::OdeDeadcore { extinction_time } => Some((extinction_time - t).abs()),
            ProfileKind::Halfspace { axis, .. } => Some(x[*axis].abs()),
            ProfileKind::Radial {
                center,
                core_radius,
            } => {
                let d = distance(x, center);
                // The radial centre is singular for a degenerate core.
                if *core_radius == 0.0 {
                    Some(d)
                } else {
                    Some((d - core_radius).abs())
                }
            }
            ProfileKind::BarrierGrowth { .. } | ProfileKind::BarrierNondeg { .. } => {
                Some(norm(x).max(t.abs()))
            }
            _ => None,
        }
    }

    /// Time interval on which the form is defined.
    fn time_domain(&self) -> (f64, f64) {
        match self.kind {
            ProfileKind::BarrierGrowth { .. } => (0.0, f64::INFINITY),
            ProfileKind::BarrierNondeg { .. } => (f64::NEG_INFINITY, 0.0),
            ProfileKind::CriticalTimePGt2 => (0.0, f64::INFINITY),
            _ => (f64::NEG_INFINITY, f64::INFINITY),
        }
    }
}

fn check_axis(params: &ProblemParams, axis: usize) -> Result<()> {
    if axis >= params.dim {
        return Err(Error::InvalidArgument(format!(
            "axis {axis} out of range for dimension {}",
            params.dim
        )));
    }
    Ok(())
}

fn norm(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum::<f64>().sqrt()
}

fn distance(x: &[f64], y: &[f64]) -> f64 {
    x.iter()
        .zip(y)
        .map(|(a, b)| (a - b) * (a - b))
        .sum::<f64>()
        .sqrt()
}

pub fn critical_solutions(params: ProblemParams, variant: CriticalVariant) -> Result<ClosedForm> {
    if !params.critical {
        return Err(Error::InvalidArgument(
            "critical solutions require the critical flag (q = p - 1)".into(),
        ));
    }
    constant_lambda(&params)?;
    let kind = match variant {
        CriticalVariant::Exponential { axis } => {
            check_axis(&params, axis)?;
            ProfileKind::CriticalExpGeneral { axis }
        }
        CriticalVariant::TimePower => {
            if params.p <= 2.0 {
                return Err(Error::InvalidArgument(
                    "time-power critical solution requires p > 2".into(),
                ));
            }
            ProfileKind::CriticalTimePGt2
        }
        CriticalVariant::ExpSum { axis } => {
            if params.p != 2.0 {
                return Err(Error::InvalidArgument(
                    "exp-sum critical solution requires p = 2".into(),
                ));
            }
            check_axis(&params, axis)?;
            ProfileKind::CriticalExpP2 { axis }
        }
    };
    Ok(ClosedForm { kind, params })
}

/// Finite-difference stencil used by [`pde_residual_with`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ResidualStencil {
    /// Flux-form 3-point differences in space, centred 2-point in time.
    #[default]
    Second,
    /// Richardson combination `(4·R(h/2) − R(h))/3` of the second-order stencil.
    Fourth,
}

/// `Δ_p u − ∂u/∂t − λ₀ u₊^q` at `(x, t)` with the default second-order stencil.
pub fn pde_residual(cf: &ClosedForm, x: &[f64], t: f64, h: f64) -> Result<f64> {
    pde_residual_with(cf, x, t, h, ResidualStencil::Second)
}

pub fn pde_residual_with(
    cf: &ClosedForm,
    x: &[f64],
    t: f64,
    h: f64,
    stencil: ResidualStencil,
) -> Result<f64> {
    if !(h > 0.0 && h.is_finite()) {
        return Err(Error::InvalidArgument(format!("step h = {h} must be positive")));
    }
    if let Some(d) = cf.kink_distance(x, t) {
        if d < 2.0 * h {
            return Err(Error::NearFreeBoundary {
                distance: d,
                reach: 2.0 * h,
            });
        }
    }
    let (lo, hi) = cf.time_domain();
    if t - h < lo || t + h > hi {
        return Err(Error::Domain {
            kind: cf.kind.name(),
            coordinate: "t",
            value: t,
            reason: "time stencil leaves the domain",
        });
    }
    let absorption = cf.params.absorption(cf.evaluate(x, t)?, x[0], t);
    let operator = |h: f64| -> Result<f64> {
        Ok(flux_divergence(cf, x, t, h)? - time_derivative(cf, x, t, h)?)
    };
    let op = match stencil {
        ResidualStencil::Second => operator(h)?,
        ResidualStencil::Fourth => (4.0 * operator(0.5 * h)? - operator(h)?) / 3.0,
    };
    Ok(op - absorption)
}

fn time_derivative(cf: &ClosedForm, x: &[f64], t: f64, h: f64) -> Result<f64> {
    Ok((cf.evaluate(x, t + h)? - cf.evaluate(x, t - h)?) / (2.0 * h))
}

/// Difference of midpoint fluxes `|∇u|^{p−2}∂_k u` along every axis.
fn flux_divergence(cf: &ClosedForm, x: &[f64], t: f64, h: f64) -> Result<f64> {
    let n = x.len();
    let p = cf.params.p;
    let mut point = x.to_vec();
    let mut div = 0.0;
    for k in 0..n {
        let mut flux = [0.0; 2];
        for (slot, side) in [0.5, -0.5].into_iter().enumerate() {
            point.copy_from_slice(x);
            point[k] += side * h;
            let mut grad_sq = 0.0;
            let mut grad_k = 0.0;
            let mut probe = point.clone();
            for j in 0..n {
                probe[j] = point[j] + 0.5 * h;
                let up = cf.evaluate(&probe, t)?;
                probe[j] = point[j] - 0.5 * h;
                let down = cf.evaluate(&probe, t)?;
                probe[j] = point[j];
                let g = (up - down) / h;
                grad_sq += g * g;
                if j == k {
                    grad_k = g;
                }
            }
            flux[slot] = grad_sq.sqrt().powf(p - 2.0) * grad_k;
        }
        div += (flux[0] - flux[1]) / h;
    }
    Ok(div)
}

/// Outcome of [`barrier_supersolution_check`].
#[derive(Debug, Clone, Serialize)]
pub struct SupersolutionReport {
    pub kind: &'static str,
    pub residuals: Vec<f64>,
    pub worst_residual: f64,
    pub worst_index: usize,
    pub tolerance: f64,
    pub pass: bool,
}

/// Relative tolerance applied to the barrier residual.
pub const SUPERSOLUTION_RTOL: f64 = 1e-8;

/// Checks `Δ_p Φ − ∂Φ/∂t − λ₀Φ^q ≤ tol` at each `(x, t)` sample.
pub fn barrier_supersolution_check(
    cf: &ClosedForm,
    samples: &[(Vec<f64>, f64)],
    h: f64,
    stencil: ResidualStencil,
) -> Result<SupersolutionReport> {
    match cf.kind {
        ProfileKind::BarrierGrowth { .. } | ProfileKind::BarrierNondeg { .. } | ProfileKind::Zero => {}
        _ => {
            return Err(Error::InvalidArgument(format!(
                "{} is not a barrier",
                cf.kind.name()
            )))
        }
    }
    if samples.is_empty() {
        return Err(Error::EmptyGrid);
    }
    let mut scale = 1.0f64;
    let mut residuals = Vec::with_capacity(samples.len());
    for (x, t) in samples {
        scale = scale.max(cf.evaluate(x, *t)?.abs());
        residuals.push(pde_residual_with(cf, x, *t, h, stencil)?);
    }
    let tolerance = SUPERSOLUTION_RTOL * scale;
    let (worst_index, worst_residual) = residuals
        .iter()
        .copied()
        .enumerate()
        .fold((0, f64::NEG_INFINITY), |acc, (i, r)| if r > acc.1 { (i, r) } else { acc });
    Ok(SupersolutionReport {
        kind: cf.kind.name(),
        pass: worst_residual <= tolerance,
        residuals,
        worst_residual,
        worst_index,
        tolerance,
    })
}

/// Weights found by [`search_growth_barrier`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GrowthBarrierChoice {
    pub a: f64,
    pub b: f64,
    pub c1: f64,
}

/// Scans `a ∈ {1, 2, 4, …, 2^10}` and `b ∈ a·2^{k/4}, k = 1..12` (so `b ∈ (a, 8a]`)
/// for the first pair whose growth barrier dominates every `(x, t, u)` sample.
///
/// Samples are expected on the parabolic boundary of the target cylinder, with
/// time measured from its bottom.
pub fn search_growth_barrier(
    params: &ProblemParams,
    boundary: &[(Vec<f64>, f64, f64)],
) -> Result<Option<GrowthBarrierChoice>> {
    if boundary.is_empty() {
        return Err(Error::EmptyGrid);
    }
    for i in 0..=10 {
        let a = 2f64.powi(i);
        for k in 1..=12 {
            let b = a * 2f64.powf(k as f64 / 4.0);
            let cf = ClosedForm::barrier_growth(params.clone(), a, b)?;
            let mut dominates = true;
            for (x, t, u) in boundary {
                let phi = cf.evaluate(x, *t)?;
                if phi < u - 1e-14 * u.abs().max(1.0) {
                    dominates = false;
                    break;
                }
            }
            if dominates {
                let ProfileKind::BarrierGrowth { c1, .. } = cf.kind else {
                    unreachable!()
                };
                return Ok(Some(GrowthBarrierChoice { a, b, c1 }));
            }
        }
    }
    Ok(None)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn p2q_half() -> ProblemParams {
        ProblemParams::new(2.0, 0.5, 1, 1.0).unwrap()
    }

    #[test]
    fn ode_profile_values() {
        let cf = ClosedForm::ode_deadcore(p2q_half(), 1.0).unwrap();
        assert!((cf.evaluate_1d(0.3, 0.0).unwrap() - 0.25).abs() < 1e-15);
        assert_eq!(cf.evaluate_1d(0.3, 1.0).unwrap(), 0.0);
        assert_eq!(cf.evaluate_1d(0.3, 5.0).unwrap(), 0.0);
    }

    #[test]
    fn ode_from_initial_extinction_time() {
        let cf = ClosedForm::ode_from_initial(p2q_half(), 1.0).unwrap();
        assert_eq!(cf.kind, ProfileKind::OdeDeadcore { extinction_time: 2.0 });
        assert!((cf.evaluate_1d(0.0, 0.0).unwrap() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn halfspace_values() {
        let cf = ClosedForm::halfspace(p2q_half(), 0, Sign::Plus).unwrap();
        assert!((cf.evaluate_1d(2.0, 0.0).unwrap() - 1.0 / 9.0).abs() < 1e-15);
        assert_eq!(cf.evaluate_1d(0.0, 0.0).unwrap(), 0.0);
        assert_eq!(cf.evaluate_1d(-1.0, 3.0).unwrap(), 0.0);
        let minus = ClosedForm::halfspace(p2q_half(), 0, Sign::Minus).unwrap();
        assert!((minus.evaluate_1d(-2.0, 0.0).unwrap() - 1.0 / 9.0).abs() < 1e-15);
    }

    #[test]
    fn domain_violations_name_the_coordinate() {
        let nd = ClosedForm::barrier_nondeg(p2q_half()).unwrap();
        let err = nd.evaluate_1d(0.0, 0.5).unwrap_err();
        assert!(err.to_string().contains("t = 0.5"), "{err}");
        let gr = ClosedForm::barrier_growth(p2q_half(), 1.0, 2.0).unwrap();
        assert!(gr.evaluate_1d(0.0, -0.1).is_err());
        assert!(nd.evaluate(&[0.0, 0.0], -0.1).is_err());
    }

    #[test]
    fn halfspace_residual_second_order_is_h_squared_over_72() {
        // u = x⁴/144: second difference = x²/12 + h²/72, absorption = x²/12.
        let cf = ClosedForm::halfspace(p2q_half(), 0, Sign::Plus).unwrap();
        for h in [0.1, 0.05, 0.01] {
            let r = pde_residual(&cf, &[1.0], 0.0, h).unwrap();
            assert!((r - h * h / 72.0).abs() < 1e-12, "h = {h}, r = {r}");
        }
    }

    #[test]
    fn halfspace_residual_fourth_order_vanishes() {
        let cf = ClosedForm::halfspace(p2q_half(), 0, Sign::Plus).unwrap();
        for h in [0.2, 0.1, 0.01, 1e-3] {
            let r = pde_residual_with(&cf, &[1.0], 0.0, h, ResidualStencil::Fourth).unwrap();
            assert!(r.abs() <= 1e-9, "h = {h}, r = {r}");
        }
    }

    #[test]
    fn zero_residual_is_exactly_zero() {
        let cf = ClosedForm::zero(p2q_half());
        assert_eq!(pde_residual(&cf, &[0.3], 0.7, 0.01).unwrap(), 0.0);
    }

    #[test]
    fn residual_refuses_stencils_across_the_free_boundary() {
        let cf = ClosedForm::halfspace(p2q_half(), 0, Sign::Plus).unwrap();
        assert!(matches!(
            pde_residual(&cf, &[0.015], 0.0, 0.01),
            Err(Error::NearFreeBoundary { .. })
        ));
        assert!(pde_residual(&cf, &[0.1], 0.0, 0.0).is_err());
    }

    #[test]
    fn ode_residual_refines_at_second_order() {
        // q = 0.3 makes the profile non-polynomial in t.
        let params = ProblemParams::new(2.0, 0.3, 1, 1.0).unwrap();
        let cf = ClosedForm::ode_deadcore(params, 1.0).unwrap();
        let r1 = pde_residual(&cf, &[0.0], 0.0, 0.02).unwrap();
        let r2 = pde_residual(&cf, &[0.0], 0.0, 0.01).unwrap();
        let ratio = r1 / r2;
        assert!((ratio - 4.0).abs() < 0.1, "ratio {ratio}");
    }

    #[test]
    fn ode_residual_q_half_is_exact() {
        // The q = 1/2 profile is quadratic in t, which the centred difference resolves.
        let cf = ClosedForm::ode_deadcore(p2q_half(), 1.0).unwrap();
        assert!(pde_residual(&cf, &[0.0], 0.0, 0.01).unwrap().abs() < 1e-13);
    }

    #[test]
    fn critical_exp_sum() {
        let params = ProblemParams::critical(2.0, 1, 1.0).unwrap();
        let cf = critical_solutions(params.clone(), CriticalVariant::ExpSum { axis: 0 }).unwrap();
        assert!((cf.evaluate_1d(0.0, 0.0).unwrap() - 2.0).abs() < 1e-15);
        for i in 0..20 {
            let x = -2.0 + 0.2 * i as f64;
            let t = 0.3 * i as f64;
            assert!(cf.evaluate_1d(x, t).unwrap() > 0.0);
        }
        let r1 = pde_residual(&cf, &[0.0], 1.0, 0.02).unwrap().abs();
        let r2 = pde_residual(&cf, &[0.0], 1.0, 0.01).unwrap().abs();
        assert!((r1 / r2).log2() >= 1.8);
    }

    #[test]
    fn critical_variant_mismatch() {
        let p2 = ProblemParams::critical(2.0, 1, 1.0).unwrap();
        assert!(critical_solutions(p2.clone(), CriticalVariant::TimePower).is_err());
        let p3 = ProblemParams::critical(3.0, 1, 1.0).unwrap();
        assert!(critical_solutions(p3.clone(), CriticalVariant::ExpSum { axis: 0 }).is_err());
        assert!(critical_solutions(p2q_half(), CriticalVariant::Exponential { axis: 0 }).is_err());
    }

    #[test]
    fn critical_general_and_time_power_solve_the_equation() {
        for p in [2.0, 3.0, 4.5] {
            let params = ProblemParams::critical(p, 1, 1.5).unwrap();
            let cf = critical_solutions(params, CriticalVariant::Exponential { axis: 0 }).unwrap();
            let r = pde_residual_with(&cf, &[0.3], 0.0, 1e-2, ResidualStencil::Fourth).unwrap();
            assert!(r.abs() < 1e-6, "p = {p}: {r}");
        }
        let params = ProblemParams::critical(3.0, 1, 1.0).unwrap();
        let cf = critical_solutions(params, CriticalVariant::TimePower).unwrap();
        let r = pde_residual_with(&cf, &[0.0], 1.0, 1e-2, ResidualStencil::Fourth).unwrap();
        assert!(r.abs() < 1e-7, "{r}");
        assert!(cf.evaluate_1d(0.0, 0.0).is_err());
    }

    fn q1_minus_samples(n: usize) -> Vec<(Vec<f64>, f64)> {
        // Interior of Q₁⁻ away from the barrier vertex.
        (0..n)
            .map(|k| {
                let x = -0.95 + 1.9 * ((k * 37) % n) as f64 / n as f64;
                let t = -0.05 - 0.9 * (k as f64 / n as f64);
                (vec![x], t)
            })
            .collect()
    }

    #[test]
    fn nondeg_barrier_is_supersolution_for_q_zero() {
        let params = ProblemParams::new(2.0, 0.0, 1, 1.0).unwrap();
        let cf = ClosedForm::barrier_nondeg(params.clone()).unwrap();
        let rep =
            barrier_supersolution_check(&cf, &q1_minus_samples(100), 1e-3, ResidualStencil::Second)
                .unwrap();
        assert!(rep.pass, "worst {}", rep.worst_residual);

        let c = barrier_constant_nondeg(&params).unwrap();
        let inflated = ClosedForm::barrier_nondeg_with(params, 10.0 * c);
        let rep = barrier_supersolution_check(
            &inflated,
            &q1_minus_samples(100),
            1e-3,
            ResidualStencil::Second,
        )
        .unwrap();
        assert!(!rep.pass);
    }

    #[test]
    fn nondeg_barrier_is_not_a_supersolution_at_q_half() {
        // With c = 1/16 the residual is (6c − √c)(x² − t) + 8c·x² > 0.
        let cf = ClosedForm::barrier_nondeg(p2q_half()).unwrap();
        let rep =
            barrier_supersolution_check(&cf, &q1_minus_samples(100), 1e-3, ResidualStencil::Second)
                .unwrap();
        assert!(!rep.pass);
        let (x, t) = (0.5, -0.5);
        let c: f64 = 1.0 / 16.0;
        let expected = (6.0 * c - c.sqrt()) * (x * x - t) + 8.0 * c * x * x;
        let r = pde_residual_with(&cf, &[x], t, 1e-3, ResidualStencil::Fourth).unwrap();
        assert!((r - expected).abs() < 1e-8, "{r} vs {expected}");
    }

    #[test]
    fn zero_barrier_passes_and_empty_grid_errors() {
        let cf = ClosedForm::zero(p2q_half());
        let rep =
            barrier_supersolution_check(&cf, &q1_minus_samples(10), 1e-3, ResidualStencil::Second)
                .unwrap();
        assert!(rep.pass);
        assert!(matches!(
            barrier_supersolution_check(&cf, &[], 1e-3, ResidualStencil::Second),
            Err(Error::EmptyGrid)
        ));
        let halfspace = ClosedForm::halfspace(p2q_half(), 0, Sign::Plus).unwrap();
        assert!(barrier_supersolution_check(
            &halfspace,
            &q1_minus_samples(10),
            1e-3,
            ResidualStencil::Second
        )
        .is_err());
    }

    #[test]
    fn growth_barrier_is_supersolution() {
        for (p, q) in [(2.0, 0.0), (2.0, 0.5), (3.0, 0.5), (4.0, 0.25)] {
            let params = ProblemParams::new(p, q, 1, 1.0).unwrap();
            let cf = ClosedForm::barrier_growth(params, 2.0, 4.0).unwrap();
            let samples: Vec<_> = (0..60)
                .map(|k| (vec![-0.9 + 1.8 * ((k * 13) % 60) as f64 / 60.0], 0.05 + k as f64 / 70.0))
                .filter(|(x, _)| x[0].abs() > 0.05)
                .collect();
            let rep = barrier_supersolution_check(&cf, &samples, 1e-3, ResidualStencil::Fourth)
                .unwrap();
            assert!(rep.pass, "p = {p}, q = {q}: worst {}", rep.worst_residual);
        }
    }

    #[test]
    fn growth_barrier_search_covers_halfspace() {
        // At t = 0 the barrier equals C_{2,1/2} x⁴, which the half-space profile touches.
        let params = p2q_half();
        let profile = ClosedForm::halfspace(params.clone(), 0, Sign::Plus).unwrap();
        let mut boundary = Vec::new();
        for k in 0..=40 {
            let x = -1.0 + k as f64 / 20.0;
            boundary.push((vec![x], 0.0, profile.evaluate_1d(x, 0.0).unwrap()));
        }
        for k in 0..=20 {
            let t = k as f64 / 20.0;
            for x in [-1.0, 1.0] {
                boundary.push((vec![x], t, profile.evaluate_1d(x, t).unwrap()));
            }
        }
        let choice = search_growth_barrier(&params, &boundary).unwrap().unwrap();
        assert_eq!(choice.a, 1.0);
        assert!(choice.b > choice.a && choice.b <= 8.0 * choice.a);

        // A datum far above any barrier at t = 0 cannot be covered.
        let hopeless = vec![(vec![0.5], 0.0, 10.0)];
        assert!(search_growth_barrier(&params, &hopeless).unwrap().is_none());
    }

    #[test]
    fn radial_profile_residual_in_one_dimension_vanishes() {
        let params = ProblemParams::new(3.0, 0.5, 1, 1.0).unwrap();
        let cf = ClosedForm::radial(params, vec![0.0], 0.25).unwrap();
        let r = pde_residual_with(&cf, &[0.6], 0.0, 1e-2, ResidualStencil::Fourth).unwrap();
        assert!(r.abs() < 1e-9, "{r}");
        assert_eq!(cf.evaluate_1d(0.1, 0.0).unwrap(), 0.0);
    }

    proptest! {
        #[test]
        fn halfspace_and_radial_are_homogeneous(
            x in 0.01f64..3.0,
            eps in 0.01f64..1.0,
            t in -1.0f64..1.0,
        ) {
            let params = p2q_half();
            let e = compute_exponents(&params).unwrap();
            for cf in [
                ClosedForm::halfspace(params.clone(), 0, Sign::Plus).unwrap(),
                ClosedForm::radial(params.clone(), vec![0.0], 0.0).unwrap(),
            ] {
                let scaled = cf.evaluate_1d(eps * x, eps.powf(e.theta) * t).unwrap()
                    / eps.powf(e.alpha0);
                let plain = cf.evaluate_1d(x, t).unwrap();
                prop_assert!((scaled - plain).abs() <= 1e-12 * plain.abs().max(1e-300));
            }
        }

        #[test]
        fn ode_profile_nonincreasing_and_nonnegative(t1 in -2.0f64..4.0, dt in 0.0f64..2.0) {
            let cf = ClosedForm::ode_deadcore(p2q_half(), 1.0).unwrap();
            let a = cf.evaluate_1d(0.0, t1).unwrap();
            let b = cf.evaluate_1d(0.0, t1 + dt).unwrap();
            prop_assert!(b <= a);
            prop_assert!(b >= 0.0);
        }
    }
}
