//! Problem parameters, intrinsic exponents and the closed-form constants of the
//! dead-core equation.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// The absorption modulus λ₀(x, t).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Modulus {
    Constant(f64),
    /// Time-independent, piecewise linear in the first spatial coordinate
    /// (the radius for radial problems). Knots are `(x, λ)` pairs sorted by
    /// `x`; values are held constant outside the knot range.
    PiecewiseLinear(Vec<(f64, f64)>),
}

impl Modulus {
    pub fn at(&self, x: f64, _t: f64) -> f64 {
        match self {
            Modulus::Constant(v) => *v,
            Modulus::PiecewiseLinear(knots) => {
                let first = knots[0];
                let last = knots[knots.len() - 1];
                if x <= first.0 {
                    return first.1;
                }
                if x >= last.0 {
                    return last.1;
                }
                let k = knots.partition_point(|&(xk, _)| xk <= x);
                let (x0, v0) = knots[k - 1];
                let (x1, v1) = knots[k];
                v0 + (v1 - v0) * (x - x0) / (x1 - x0)
            }
        }
    }

    pub fn constant_value(&self) -> Option<f64> {
        match self {
            Modulus::Constant(v) => Some(*v),
            Modulus::PiecewiseLinear(_) => None,
        }
    }

    fn extremes(&self) -> (f64, f64) {
        match self {
            Modulus::Constant(v) => (*v, *v),
            Modulus::PiecewiseLinear(knots) => knots
                .iter()
                .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &(_, v)| {
                    (lo.min(v), hi.max(v))
                }),
        }
    }
}

/// One dead-core problem instance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProblemParams {
    pub p: f64,
    pub q: f64,
    pub dim: usize,
    /// Lower bound m of the modulus.
    pub lambda_lo: f64,
    /// Upper bound M of the modulus.
    pub lambda_hi: f64,
    pub lambda0: Modulus,
    /// Set for the critical absorption q = p − 1.
    pub critical: bool,
}

impl ProblemParams {
    /// Parameters with a constant modulus; the bounds collapse onto it.
    pub fn new(p: f64, q: f64, dim: usize, lambda0: f64) -> Result<Self> {
        let params = Self {
            p,
            q,
            dim,
            lambda_lo: lambda0,
            lambda_hi: lambda0,
            lambda0: Modulus::Constant(lambda0),
            critical: false,
        };
        params.validate()?;
        Ok(params)
    }

    /// Critical problem with q = p − 1.
    pub fn critical(p: f64, dim: usize, lambda0: f64) -> Result<Self> {
        let params = Self {
            p,
            q: p - 1.0,
            dim,
            lambda_lo: lambda0,
            lambda_hi: lambda0,
            lambda0: Modulus::Constant(lambda0),
            critical: true,
        };
        params.validate()?;
        Ok(params)
    }

    /// Replace the modulus bounds m ≤ λ₀ ≤ M.
    pub fn with_bounds(mut self, lambda_lo: f64, lambda_hi: f64) -> Result<Self> {
        self.lambda_lo = lambda_lo;
        self.lambda_hi = lambda_hi;
        self.validate()?;
        Ok(self)
    }

    pub fn with_modulus(mut self, lambda0: Modulus) -> Result<Self> {
        self.lambda0 = lambda0;
        self.validate()?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidParams(msg));
        if !(self.p.is_finite() && self.p >= 2.0) {
            return bad(format!("p = {} must be finite and >= 2", self.p));
        }
        if self.critical {
            if (self.q - (self.p - 1.0)).abs() > 1e-12 {
                return bad(format!(
                    "critical flag requires q = p - 1, got q = {}, p = {}",
                    self.q, self.p
                ));
            }
        } else if !(self.q >= 0.0 && self.q < 1.0) {
            return bad(format!("q = {} must satisfy 0 <= q < 1", self.q));
        }
        if self.dim == 0 {
            return bad("dimension must be positive".into());
        }
        if !(self.lambda_lo > 0.0 && self.lambda_lo <= self.lambda_hi && self.lambda_hi.is_finite())
        {
            return bad(format!(
                "modulus bounds must satisfy 0 < m <= M < inf, got m = {}, M = {}",
                self.lambda_lo, self.lambda_hi
            ));
        }
        if let Modulus::PiecewiseLinear(knots) = &self.lambda0 {
            if knots.is_empty() {
                return bad("piecewise modulus needs at least one knot".into());
            }
            if knots.windows(2).any(|w| w[1].0 <= w[0].0) {
                return bad("piecewise modulus knots must be strictly increasing in x".into());
            }
        }
        let (lo, hi) = self.lambda0.extremes();
        // Relative slack so that bounds typed as decimals still admit the value.
        let slack = 1e-12 * self.lambda_hi;
        if lo < self.lambda_lo - slack || hi > self.lambda_hi + slack {
            return bad(format!(
                "modulus range [{lo}, {hi}] escapes the bounds [{}, {}]",
                self.lambda_lo, self.lambda_hi
            ));
        }
        Ok(())
    }

    /// `λ₀(x, t)·u₊^q`, with the convention `u₊^0 = 1` for `u > 0` and `0` otherwise.
    pub fn absorption(&self, u: f64, x: f64, t: f64) -> f64 {
        self.lambda0.at(x, t) * positive_power(u, self.q)
    }
}

/// `u₊^q` with `u₊^0 := 1` on `u > 0` and `0` on `u ≤ 0`.
pub fn positive_power(u: f64, q: f64) -> f64 {
    if u <= 0.0 {
        0.0
    } else if q == 0.0 {
        1.0
    } else {
        u.powf(q)
    }
}

/// Scaling exponents attached to a pair (p, q).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Exponents {
    /// Sharp growth exponent p/(p−q−1).
    pub alpha0: f64,
    /// Intrinsic time scaling p(1−q)/(p−1−q).
    pub theta: f64,
    /// 1 + 1/(p−1).
    pub alpha_sharp: f64,
    /// Gradient decay exponent (1+q)/(p−1−q).
    pub grad_alpha: f64,
}

pub fn compute_exponents(params: &ProblemParams) -> Result<Exponents> {
    if params.critical {
        return Err(Error::CriticalExponents);
    }
    let (p, q) = (params.p, params.q);
    let gap = p - 1.0 - q;
    Ok(Exponents {
        alpha0: p / gap,
        theta: p * (1.0 - q) / gap,
        alpha_sharp: 1.0 + 1.0 / (p - 1.0),
        grad_alpha: (1.0 + q) / gap,
    })
}

/// Coefficient of the stationary profiles `C·(x_i)₊^{α₀}`.
pub fn cpq_constant(params: &ProblemParams) -> Result<f64> {
    if params.critical {
        return Err(Error::CriticalExponents);
    }
    let lambda = params.lambda0.constant_value().ok_or(Error::NonConstantModulus)?;
    let (p, q, n) = (params.p, params.q, params.dim as f64);
    let gap = p - q - 1.0;
    let base = lambda * gap.powf(p) / (p.powf(p - 1.0) * (p * q + n * gap));
    Ok(base.powf(1.0 / gap))
}

/// Constant of the non-degeneracy comparison function, using `m = lambda_lo`.
///
/// The value is the minimum of `[m(1−q)/2]^{1/(1−q)}` and
/// `[(m/2)((p−1−q)/p)^{p−1}(N + pq/(p−1−q))]^{1/(p−1−q)}`.
pub fn barrier_constant_nondeg(params: &ProblemParams) -> Result<f64> {
    if params.critical {
        return Err(Error::CriticalExponents);
    }
    let (p, q, n, m) = (params.p, params.q, params.dim as f64, params.lambda_lo);
    let gap = p - 1.0 - q;
    let temporal = (m * (1.0 - q) / 2.0).powf(1.0 / (1.0 - q));
    let spatial =
        (m / 2.0 * (gap / p).powf(p - 1.0) * (n + p * q / gap)).powf(1.0 / gap);
    Ok(temporal.min(spatial))
}

/// Constant of the growth barrier for a given spatial weight `a > 0`.
pub fn barrier_constant_growth(params: &ProblemParams, a: f64) -> Result<f64> {
    if params.critical {
        return Err(Error::CriticalExponents);
    }
    if !(a > 0.0 && a.is_finite()) {
        return Err(Error::InvalidArgument(format!("barrier weight a = {a} must be positive")));
    }
    let (p, q, n, m) = (params.p, params.q, params.dim as f64, params.lambda_lo);
    let gap = p - 1.0 - q;
    let inner = m / (n + p * q / gap) * (gap / (a * p)).powf(p - 1.0);
    Ok(inner.powf(1.0 / gap))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol * b.abs().max(1.0)
    }

    #[test]
    fn heat_equation_scaling() {
        let e = compute_exponents(&ProblemParams::new(2.0, 0.0, 1, 1.0).unwrap()).unwrap();
        assert_eq!(e.alpha0, 2.0);
        assert_eq!(e.theta, 2.0);
        assert_eq!(e.alpha_sharp, 2.0);
    }

    #[test]
    fn hand_evaluated_exponents() {
        let e = compute_exponents(&ProblemParams::new(2.0, 0.5, 1, 1.0).unwrap()).unwrap();
        assert_eq!(e.alpha0, 4.0);
        assert_eq!(e.theta, 2.0);
        assert_eq!(e.grad_alpha, 3.0);

        let e = compute_exponents(&ProblemParams::new(3.0, 0.0, 1, 1.0).unwrap()).unwrap();
        assert_eq!(e.alpha0, 1.5);
        assert_eq!(e.alpha_sharp, 1.5);
    }

    #[test]
    fn critical_params_are_refused() {
        let crit = ProblemParams::critical(2.0, 1, 1.0).unwrap();
        assert!(matches!(compute_exponents(&crit), Err(Error::CriticalExponents)));
        assert!(cpq_constant(&crit).is_err());
        assert!(barrier_constant_nondeg(&crit).is_err());
    }

    #[test]
    fn invalid_params_rejected() {
        assert!(ProblemParams::new(1.5, 0.0, 1, 1.0).is_err());
        assert!(ProblemParams::new(2.0, 1.0, 1, 1.0).is_err());
        assert!(ProblemParams::new(2.0, -0.1, 1, 1.0).is_err());
        assert!(ProblemParams::new(2.0, 0.5, 0, 1.0).is_err());
        assert!(ProblemParams::new(2.0, 0.5, 1, 0.0).is_err());
        let p = ProblemParams::new(2.0, 0.5, 1, 1.0).unwrap();
        assert!(p.clone().with_bounds(2.0, 3.0).is_err());
        assert!(p
            .clone()
            .with_bounds(0.5, 2.0)
            .unwrap()
            .with_modulus(Modulus::PiecewiseLinear(vec![(0.0, 0.5), (1.0, 2.5)]))
            .is_err());
    }

    #[test]
    fn piecewise_modulus_interpolates() {
        let m = Modulus::PiecewiseLinear(vec![(0.0, 1.0), (1.0, 3.0)]);
        assert_eq!(m.at(-1.0, 0.0), 1.0);
        assert_eq!(m.at(0.5, 0.0), 2.0);
        assert_eq!(m.at(2.0, 0.0), 3.0);
    }

    #[test]
    fn cpq_hand_values() {
        let c = cpq_constant(&ProblemParams::new(2.0, 0.0, 1, 1.0).unwrap()).unwrap();
        assert!(close(c, 0.5, 1e-15));
        let c = cpq_constant(&ProblemParams::new(2.0, 0.5, 1, 1.0).unwrap()).unwrap();
        assert!(close(c, 1.0 / 144.0, 1e-14));
        let c = cpq_constant(&ProblemParams::new(2.0, 0.0, 1, 1e-300).unwrap()).unwrap();
        assert!(c < 1e-299);
    }

    #[test]
    fn cpq_rejects_non_constant_modulus() {
        let p = ProblemParams::new(2.0, 0.5, 1, 1.0)
            .unwrap()
            .with_bounds(1.0, 2.0)
            .unwrap()
            .with_modulus(Modulus::PiecewiseLinear(vec![(0.0, 1.0), (1.0, 2.0)]))
            .unwrap();
        assert!(matches!(cpq_constant(&p), Err(Error::NonConstantModulus)));
    }

    #[test]
    fn nondeg_constant_hand_values() {
        let c = barrier_constant_nondeg(&ProblemParams::new(2.0, 0.0, 1, 1.0).unwrap()).unwrap();
        assert!(close(c, 0.25, 1e-15));
        let c = barrier_constant_nondeg(&ProblemParams::new(2.0, 0.5, 1, 1.0).unwrap()).unwrap();
        assert!(close(c, 1.0 / 16.0, 1e-15));
        let tiny = ProblemParams::new(2.0, 0.5, 1, 1e-200).unwrap();
        assert!(barrier_constant_nondeg(&tiny).unwrap() < 1e-199);
    }

    #[test]
    fn growth_constant_hand_values() {
        let p = ProblemParams::new(2.0, 0.0, 1, 1.0).unwrap();
        assert!(close(barrier_constant_growth(&p, 1.0).unwrap(), 0.5, 1e-15));
        assert!(barrier_constant_growth(&p, 2.0).unwrap() < barrier_constant_growth(&p, 1.0).unwrap());
        assert!(barrier_constant_growth(&p, 0.0).is_err());
        assert!(barrier_constant_growth(&p, -1.0).is_err());
        let p = ProblemParams::new(2.0, 0.5, 1, 1.0).unwrap();
        assert!(close(barrier_constant_growth(&p, 1.0).unwrap(), 1.0 / 144.0, 1e-14));
    }

    #[test]
    fn alpha0_dominates_alpha_sharp() {
        let at = |q: f64| {
            compute_exponents(&ProblemParams::new(2.5, q, 1, 1.0).unwrap()).unwrap()
        };
        let e = at(0.0);
        assert!((e.alpha0 - e.alpha_sharp).abs() <= 4.0 * f64::EPSILON);
        for k in 1..10 {
            let e = at(k as f64 / 10.0);
            assert!(e.alpha0 > e.alpha_sharp, "q = {}", k as f64 / 10.0);
        }
    }

    #[test]
    fn theta_identity_random_pairs() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        for _ in 0..200 {
            let p = rng.gen_range(2.0..8.0);
            let q = rng.gen_range(0.0..0.999);
            let e = compute_exponents(&ProblemParams::new(p, q, 1, 1.0).unwrap()).unwrap();
            assert!((e.theta - (p + e.alpha0 * (2.0 - p))).abs() <= 1e-12);
            assert!(e.theta > 0.0);
        }
    }

    proptest! {
        #[test]
        fn alpha0_rearranged_definition(p in 2.0f64..10.0, q in 0.0f64..0.99) {
            let e = compute_exponents(&ProblemParams::new(p, q, 1, 1.0).unwrap()).unwrap();
            let lhs = e.alpha0 * (p - q - 1.0);
            prop_assert!((lhs - p).abs() <= 8.0 * f64::EPSILON * p);
        }

        #[test]
        fn cpq_increasing_in_modulus(
            p in 2.0f64..6.0,
            q in 0.0f64..0.95,
            dim in 1usize..4,
            lam in 0.01f64..10.0,
            factor in 1.01f64..5.0,
        ) {
            let lo = cpq_constant(&ProblemParams::new(p, q, dim, lam).unwrap()).unwrap();
            let hi = cpq_constant(&ProblemParams::new(p, q, dim, lam * factor).unwrap()).unwrap();
            prop_assert!(lo > 0.0);
            prop_assert!(hi > lo);
        }
    }
}
