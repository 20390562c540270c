//! Experiment configuration: a flat, line-oriented `key = value` format with
//! dotted section keys and `#` comments.
//!
//! ```text
//! name = theorem-1.1
//! params.p = 2
//! params.q = 0.5
//! grid.geometry = interval
//! grid.nx = 256
//! analyses = nondegeneracy, blowup
//! analysis.nondegeneracy.radii = 0.25, 0.125, 0.0625
//! ```
//!
//! Errors name the offending key path. [`ExperimentConfig::to_text`] writes a
//! canonical form that parses back to an equal value.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::exact::{critical_solutions, ClosedForm, CriticalVariant, ResidualStencil, Sign};
use crate::field::{BoundaryData, Geometry, GridSpec, Trace, DEFAULT_CFL_SIGMA};
use crate::geometry::Localization;
use crate::params::ProblemParams;
use crate::solver::{AbsorptionScheme, InitialData};

/// Raw `key → (value, line)` map of a config file.
#[derive(Debug, Clone, Default)]
pub struct FlatConfig {
    entries: BTreeMap<String, (String, usize)>,
}

impl FlatConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let mut entries = BTreeMap::new();
        for (n, raw) in text.lines().enumerate() {
            let line_no = n + 1;
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                return Err(Error::config(
                    format!("line {line_no}"),
                    format!("expected `key = value`, found `{line}`"),
                ));
            };
            let key = key.trim();
            if key.is_empty()
                || !key
                    .chars()
                    .all(|c| c.is_ascii_alphanumeric() || matches!(c, '.' | '_' | '-'))
            {
                return Err(Error::config(
                    format!("line {line_no}"),
                    format!("invalid key `{key}`"),
                ));
            }
            if entries
                .insert(key.to_string(), (value.trim().to_string(), line_no))
                .is_some()
            {
                return Err(Error::config(key, format!("duplicate key on line {line_no}")));
            }
        }
        Ok(Self { entries })
    }

    pub fn keys(&self) -> impl Iterator<Item = &str> {
        self.entries.keys().map(String::as_str)
    }
}

/// Typed reader over a [`FlatConfig`] that remembers which keys were used.
struct Reader<'a> {
    flat: &'a FlatConfig,
    used: std::cell::RefCell<std::collections::BTreeSet<String>>,
}

impl<'a> Reader<'a> {
    fn new(flat: &'a FlatConfig) -> Self {
        Self {
            flat,
            used: Default::default(),
        }
    }

    fn raw(&self, key: &str) -> Option<&'a str> {
        let v = self.flat.entries.get(key).map(|(v, _)| v.as_str());
        if v.is_some() {
            self.used.borrow_mut().insert(key.to_string());
        }
        v
    }

    fn str(&self, key: &str) -> Result<&'a str> {
        self.raw(key)
            .ok_or_else(|| Error::config(key, "missing required key"))
    }

    fn str_or(&self, key: &str, default: &'a str) -> &'a str {
        self.raw(key).unwrap_or(default)
    }

    fn f64_opt(&self, key: &str) -> Result<Option<f64>> {
        self.raw(key)
            .map(|v| parse_f64(key, v))
            .transpose()
    }

    fn f64(&self, key: &str) -> Result<f64> {
        parse_f64(key, self.str(key)?)
    }

    fn f64_or(&self, key: &str, default: f64) -> Result<f64> {
        Ok(self.f64_opt(key)?.unwrap_or(default))
    }

    fn usize_or(&self, key: &str, default: usize) -> Result<usize> {
        match self.raw(key) {
            None => Ok(default),
            Some(v) => v
                .parse()
                .map_err(|_| Error::config(key, format!("expected a non-negative integer, found `{v}`"))),
        }
    }

    fn u64_or(&self, key: &str, default: u64) -> Result<u64> {
        match self.raw(key) {
            None => Ok(default),
            Some(v) => v
                .parse()
                .map_err(|_| Error::config(key, format!("expected a non-negative integer, found `{v}`"))),
        }
    }

    fn bool_or(&self, key: &str, default: bool) -> Result<bool> {
        match self.raw(key) {
            None => Ok(default),
            Some("true") => Ok(true),
            Some("false") => Ok(false),
            Some(v) => Err(Error::config(key, format!("expected true or false, found `{v}`"))),
        }
    }

    fn list_f64(&self, key: &str) -> Result<Vec<f64>> {
        let v = self.str(key)?;
        split_list(v).map(|s| parse_f64(key, s)).collect()
    }

    fn list_f64_or(&self, key: &str, default: &[f64]) -> Result<Vec<f64>> {
        if self.raw(key).is_none() {
            return Ok(default.to_vec());
        }
        self.list_f64(key)
    }

    fn unused(&self) -> Vec<String> {
        let used = self.used.borrow();
        self.flat
            .keys()
            .filter(|k| !used.contains(*k))
            .map(str::to_string)
            .collect()
    }
}

fn split_list(v: &str) -> impl Iterator<Item = &str> {
    v.split(',').map(str::trim).filter(|s| !s.is_empty())
}

/// Parses a finite number, accepting fractions such as `1/16`; `key` names the
/// value in the error.
pub fn parse_f64(key: &str, v: &str) -> Result<f64> {
    let parsed = if let Some((a, b)) = v.split_once('/') {
        match (a.trim().parse::<f64>(), b.trim().parse::<f64>()) {
            (Ok(a), Ok(b)) => Ok(a / b),
            _ => Err(()),
        }
    } else {
        v.parse::<f64>().map_err(|_| ())
    };
    match parsed {
        Ok(x) if x.is_finite() => Ok(x),
        _ => Err(Error::config(key, format!("expected a finite number, found `{v}`"))),
    }
}

fn fmt_list(xs: &[f64]) -> String {
    xs.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(", ")
}

/// A closed-form profile named in a config.
#[derive(Debug, Clone, PartialEq)]
pub enum ProfileSpec {
    Zero,
    Halfspace { sign: Sign },
    Radial { core_radius: f64 },
    Ode { extinction_time: f64 },
    CriticalExp,
    CriticalTime,
    CriticalExpSum,
    BarrierGrowth { a: f64, b: f64 },
    BarrierNondeg { c: Option<f64> },
}

impl ProfileSpec {
    fn read(r: &Reader, prefix: &str) -> Result<Self> {
        let key = format!("{prefix}.profile");
        Ok(match r.str(&key)? {
            "zero" => ProfileSpec::Zero,
            "halfspace" => ProfileSpec::Halfspace {
                sign: match r.str_or(&format!("{prefix}.sign"), "plus") {
                    "plus" => Sign::Plus,
                    "minus" => Sign::Minus,
                    other => {
                        return Err(Error::config(
                            format!("{prefix}.sign"),
                            format!("expected plus or minus, found `{other}`"),
                        ))
                    }
                },
            },
            "radial" => ProfileSpec::Radial {
                core_radius: r.f64(&format!("{prefix}.core_radius"))?,
            },
            "ode" => ProfileSpec::Ode {
                extinction_time: r.f64(&format!("{prefix}.extinction_time"))?,
            },
            "critical_exp" => ProfileSpec::CriticalExp,
            "critical_time" => ProfileSpec::CriticalTime,
            "critical_expsum" => ProfileSpec::CriticalExpSum,
            "barrier_growth" => ProfileSpec::BarrierGrowth {
                a: r.f64(&format!("{prefix}.a"))?,
                b: r.f64(&format!("{prefix}.b"))?,
            },
            "barrier_nondeg" => ProfileSpec::BarrierNondeg {
                c: r.f64_opt(&format!("{prefix}.c"))?,
            },
            other => {
                return Err(Error::config(key, format!("unknown profile `{other}`")));
            }
        })
    }

    fn write(&self, out: &mut String, prefix: &str) {
        let name = match self {
            ProfileSpec::Zero => "zero",
            ProfileSpec::Halfspace { .. } => "halfspace",
            ProfileSpec::Radial { .. } => "radial",
            ProfileSpec::Ode { .. } => "ode",
            ProfileSpec::CriticalExp => "critical_exp",
            ProfileSpec::CriticalTime => "critical_time",
            ProfileSpec::CriticalExpSum => "critical_expsum",
            ProfileSpec::BarrierGrowth { .. } => "barrier_growth",
            ProfileSpec::BarrierNondeg { .. } => "barrier_nondeg",
        };
        let _ = writeln!(out, "{prefix}.profile = {name}");
        match self {
            ProfileSpec::Halfspace { sign } => {
                let s = if *sign == Sign::Plus { "plus" } else { "minus" };
                let _ = writeln!(out, "{prefix}.sign = {s}");
            }
            ProfileSpec::Radial { core_radius } => {
                let _ = writeln!(out, "{prefix}.core_radius = {core_radius}");
            }
            ProfileSpec::Ode { extinction_time } => {
                let _ = writeln!(out, "{prefix}.extinction_time = {extinction_time}");
            }
            ProfileSpec::BarrierGrowth { a, b } => {
                let _ = writeln!(out, "{prefix}.a = {a}\n{prefix}.b = {b}");
            }
            ProfileSpec::BarrierNondeg { c: Some(c) } => {
                let _ = writeln!(out, "{prefix}.c = {c}");
            }
            _ => {}
        }
    }

    /// Builds the closed form on the given parameters. Profiles live on the
    /// first coordinate axis; radial profiles are centred at the origin.
    pub fn build(&self, params: &ProblemParams) -> Result<ClosedForm> {
        let p = params.clone();
        match self {
            ProfileSpec::Zero => Ok(ClosedForm::zero(p)),
            ProfileSpec::Halfspace { sign } => ClosedForm::halfspace(p, 0, *sign),
            ProfileSpec::Radial { core_radius } => {
                let dim = p.dim;
                ClosedForm::radial(p, vec![0.0; dim], *core_radius)
            }
            ProfileSpec::Ode { extinction_time } => ClosedForm::ode_deadcore(p, *extinction_time),
            ProfileSpec::CriticalExp => critical_solutions(p, CriticalVariant::Exponential { axis: 0 }),
            ProfileSpec::CriticalTime => critical_solutions(p, CriticalVariant::TimePower),
            ProfileSpec::CriticalExpSum => critical_solutions(p, CriticalVariant::ExpSum { axis: 0 }),
            ProfileSpec::BarrierGrowth { a, b } => ClosedForm::barrier_growth(p, *a, *b),
            ProfileSpec::BarrierNondeg { c: None } => ClosedForm::barrier_nondeg(p),
            ProfileSpec::BarrierNondeg { c: Some(c) } => Ok(ClosedForm::barrier_nondeg_with(p, *c)),
        }
    }
}

/// Profile with a scale and time shift, as used for data and traces.
#[derive(Debug, Clone, PartialEq)]
pub struct ScaledProfile {
    pub profile: ProfileSpec,
    pub scale: f64,
    pub time_shift: f64,
}

impl ScaledProfile {
    fn read(r: &Reader, prefix: &str) -> Result<Self> {
        Ok(Self {
            profile: ProfileSpec::read(r, prefix)?,
            scale: r.f64_or(&format!("{prefix}.scale"), 1.0)?,
            time_shift: r.f64_or(&format!("{prefix}.time_shift"), 0.0)?,
        })
    }

    fn write(&self, out: &mut String, prefix: &str) {
        self.profile.write(out, prefix);
        let _ = writeln!(out, "{prefix}.scale = {}", self.scale);
        let _ = writeln!(out, "{prefix}.time_shift = {}", self.time_shift);
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum InitialSpec {
    Zero,
    Constant { value: f64 },
    Bump { amplitude: f64, center: f64, width: f64 },
    Exact(ScaledProfile),
}

#[derive(Debug, Clone, PartialEq)]
pub enum BoundarySpec {
    Constant { left: f64, right: f64 },
    Exact(ScaledProfile),
}

/// Where the field comes from: a solver run, or a closed form sampled on the grid.
#[derive(Debug, Clone, PartialEq)]
pub enum SourceSpec {
    Solve {
        initial: InitialSpec,
        boundary: BoundarySpec,
        scheme: AbsorptionScheme,
    },
    Sample(ProfileSpec),
}

/// Spatial anchor of an analysis centre.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum XAnchor {
    At(f64),
    /// The free-boundary point nearest to the given position.
    FreeBoundary(f64),
}

/// Temporal anchor of an analysis centre.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TAnchor {
    At(f64),
    /// The final stored time minus the given lag.
    Last(f64),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CenterSpec {
    pub x: XAnchor,
    pub t: TAnchor,
}

impl CenterSpec {
    fn read(r: &Reader, prefix: &str) -> Result<Self> {
        let xk = format!("{prefix}.center_x");
        let tk = format!("{prefix}.center_t");
        let x = match r.str_or(&xk, "0") {
            "free_boundary" => XAnchor::FreeBoundary(r.f64_or(&format!("{prefix}.near_x"), 0.0)?),
            v => XAnchor::At(parse_f64(&xk, v)?),
        };
        let t = match r.str_or(&tk, "last") {
            "last" => TAnchor::Last(0.0),
            v if v.starts_with("last-") => TAnchor::Last(parse_f64(&tk, &v[5..])?),
            v => TAnchor::At(parse_f64(&tk, v)?),
        };
        Ok(Self { x, t })
    }

    fn write(&self, out: &mut String, prefix: &str) {
        match self.x {
            XAnchor::At(x) => {
                let _ = writeln!(out, "{prefix}.center_x = {x}");
            }
            XAnchor::FreeBoundary(near) => {
                let _ = writeln!(out, "{prefix}.center_x = free_boundary\n{prefix}.near_x = {near}");
            }
        }
        match self.t {
            TAnchor::At(t) => {
                let _ = writeln!(out, "{prefix}.center_t = {t}");
            }
            TAnchor::Last(lag) if lag == 0.0 => {
                let _ = writeln!(out, "{prefix}.center_t = last");
            }
            TAnchor::Last(lag) => {
                let _ = writeln!(out, "{prefix}.center_t = last-{lag}");
            }
        }
    }
}

/// One analysis requested by a config, with its settings.
#[derive(Debug, Clone, PartialEq)]
pub enum AnalysisSpec {
    /// Largest discrete residual of the sampled profile over positive interior nodes.
    Residual { stencil: ResidualStencil, tolerance: f64 },
    /// Observed order of the residual of the sampled profile under halving of `h`.
    ResidualOrder { h: f64, min_order: f64 },
    /// Supersolution inequality for a barrier on the grid nodes.
    Supersolution { barrier: ProfileSpec },
    Positivity { expect_dead_core: bool },
    Growth { center: CenterSpec, radii: Vec<f64>, tolerance: f64 },
    Gradient { center: CenterSpec, radii: Vec<f64>, tolerance: f64 },
    Nondegeneracy { center: CenterSpec, radii: Vec<f64>, barrier_floor: bool },
    Dyadic { center: CenterSpec, j_max: usize, c_star: Option<f64> },
    Density { center: CenterSpec, radius: f64, varrho: Vec<f64>, min: f64 },
    Porosity { time: TAnchor, radii: Vec<f64>, delta: Vec<f64>, min: f64 },
    FiniteSpeed { x0: f64, t0: f64, r: f64, s: f64, c_grid: Vec<f64>, max_c: f64 },
    Blowup { center: CenterSpec, epsilons: Vec<f64>, band: f64, invariance_tol: Option<f64> },
    Liouville { center: CenterSpec, radii: Vec<f64>, expect: Option<String>, rho_rtol: Option<f64> },
    Energy,
    InteriorMin { margin: f64 },
    /// Relative error against the exact boundary trace, for `t ≤ until`.
    ProfileError { until: f64, rtol: f64 },
    /// The field is dead for `t ≥ T + steps·dt_max`, where `T` is the trace's extinction time.
    Extinction { steps: f64 },
    /// Random ordered data pairs run in lockstep.
    Ordering { pairs: usize, seed: u64, tolerance: f64 },
    /// A scaled non-degeneracy barrier dominates the run it bounds on the parabolic boundary.
    BarrierDomination { c: f64, shift: f64, factor: f64 },
}

impl AnalysisSpec {
    pub fn name(&self) -> &'static str {
        match self {
            AnalysisSpec::Residual { .. } => "residual",
            AnalysisSpec::ResidualOrder { .. } => "residual_order",
            AnalysisSpec::Supersolution { .. } => "supersolution",
            AnalysisSpec::Positivity { .. } => "positivity",
            AnalysisSpec::Growth { .. } => "growth",
            AnalysisSpec::Gradient { .. } => "gradient",
            AnalysisSpec::Nondegeneracy { .. } => "nondegeneracy",
            AnalysisSpec::Dyadic { .. } => "dyadic",
            AnalysisSpec::Density { .. } => "density",
            AnalysisSpec::Porosity { .. } => "porosity",
            AnalysisSpec::FiniteSpeed { .. } => "finite_speed",
            AnalysisSpec::Blowup { .. } => "blowup",
            AnalysisSpec::Liouville { .. } => "liouville",
            AnalysisSpec::Energy => "energy",
            AnalysisSpec::InteriorMin { .. } => "interior_min",
            AnalysisSpec::ProfileError { .. } => "profile_error",
            AnalysisSpec::Extinction { .. } => "extinction",
            AnalysisSpec::Ordering { .. } => "ordering",
            AnalysisSpec::BarrierDomination { .. } => "barrier_domination",
        }
    }

    fn read(r: &Reader, name: &str) -> Result<Self> {
        let pre = format!("analysis.{name}");
        let k = |s: &str| format!("{pre}.{s}");
        Ok(match name {
            "residual" => AnalysisSpec::Residual {
                stencil: match r.str_or(&k("stencil"), "second") {
                    "second" => ResidualStencil::Second,
                    "fourth" => ResidualStencil::Fourth,
                    other => {
                        return Err(Error::config(k("stencil"), format!("unknown stencil `{other}`")))
                    }
                },
                tolerance: r.f64(&k("tolerance"))?,
            },
            "residual_order" => AnalysisSpec::ResidualOrder {
                h: r.f64_or(&k("h"), 0.1)?,
                min_order: r.f64(&k("min_order"))?,
            },
            "supersolution" => AnalysisSpec::Supersolution {
                barrier: ProfileSpec::read(r, &pre)?,
            },
            "positivity" => AnalysisSpec::Positivity {
                expect_dead_core: r.bool_or(&k("expect_dead_core"), false)?,
            },
            "growth" => AnalysisSpec::Growth {
                center: CenterSpec::read(r, &pre)?,
                radii: r.list_f64(&k("radii"))?,
                tolerance: r.f64(&k("tolerance"))?,
            },
            "gradient" => AnalysisSpec::Gradient {
                center: CenterSpec::read(r, &pre)?,
                radii: r.list_f64(&k("radii"))?,
                tolerance: r.f64(&k("tolerance"))?,
            },
            "nondegeneracy" => AnalysisSpec::Nondegeneracy {
                center: CenterSpec::read(r, &pre)?,
                radii: r.list_f64(&k("radii"))?,
                barrier_floor: r.bool_or(&k("barrier_floor"), false)?,
            },
            "dyadic" => AnalysisSpec::Dyadic {
                center: CenterSpec::read(r, &pre)?,
                j_max: r.usize_or(&k("j_max"), 4)?,
                c_star: r.f64_opt(&k("c_star"))?,
            },
            "density" => AnalysisSpec::Density {
                center: CenterSpec::read(r, &pre)?,
                radius: r.f64(&k("radius"))?,
                varrho: r.list_f64_or(&k("varrho"), &[1.0, 0.5, 0.25, 0.125])?,
                min: r.f64_or(&k("min"), 0.0)?,
            },
            "porosity" => AnalysisSpec::Porosity {
                time: CenterSpec::read(r, &pre)?.t,
                radii: r.list_f64(&k("radii"))?,
                delta: r.list_f64_or(&k("delta"), &[0.75, 0.5, 0.25, 0.125])?,
                min: r.f64_or(&k("min"), 0.0)?,
            },
            "finite_speed" => AnalysisSpec::FiniteSpeed {
                x0: r.f64_or(&k("x0"), 0.0)?,
                t0: r.f64_or(&k("t0"), 0.0)?,
                r: r.f64(&k("r"))?,
                s: r.f64(&k("s"))?,
                c_grid: r.list_f64_or(&k("c_grid"), &[1.0, 2.0, 4.0, 8.0])?,
                max_c: r.f64_or(&k("max_c"), 8.0)?,
            },
            "blowup" => AnalysisSpec::Blowup {
                center: CenterSpec::read(r, &pre)?,
                epsilons: r.list_f64_or(&k("epsilons"), &[0.5, 0.25, 0.125])?,
                band: r.f64_or(&k("band"), 100.0)?,
                invariance_tol: r.f64_opt(&k("invariance_tol"))?,
            },
            "liouville" => AnalysisSpec::Liouville {
                center: CenterSpec::read(r, &pre)?,
                radii: r.list_f64(&k("radii"))?,
                expect: match r.raw(&k("expect")) {
                    None => None,
                    Some(v @ ("subcritical" | "critical")) => Some(v.to_string()),
                    Some(other) => {
                        return Err(Error::config(
                            k("expect"),
                            format!("expected subcritical or critical, found `{other}`"),
                        ))
                    }
                },
                rho_rtol: r.f64_opt(&k("rho_rtol"))?,
            },
            "energy" => AnalysisSpec::Energy,
            "interior_min" => AnalysisSpec::InteriorMin {
                margin: r.f64_or(&k("margin"), 0.25)?,
            },
            "profile_error" => AnalysisSpec::ProfileError {
                until: r.f64(&k("until"))?,
                rtol: r.f64(&k("rtol"))?,
            },
            "extinction" => AnalysisSpec::Extinction {
                steps: r.f64_or(&k("steps"), 10.0)?,
            },
            "ordering" => AnalysisSpec::Ordering {
                pairs: r.usize_or(&k("pairs"), 50)?,
                seed: r.u64_or(&k("seed"), 0)?,
                tolerance: r.f64_or(&k("tolerance"), 1e-12)?,
            },
            "barrier_domination" => AnalysisSpec::BarrierDomination {
                c: r.f64(&k("c"))?,
                shift: r.f64_or(&k("shift"), 1.0)?,
                factor: r.f64_or(&k("factor"), 0.9)?,
            },
            other => {
                return Err(Error::config("analyses", format!("unknown analysis `{other}`")));
            }
        })
    }

    fn write(&self, out: &mut String) {
        let pre = format!("analysis.{}", self.name());
        let mut kv = |k: &str, v: String| {
            let _ = writeln!(out, "{pre}.{k} = {v}");
        };
        match self {
            AnalysisSpec::Residual { stencil, tolerance } => {
                let s = if *stencil == ResidualStencil::Fourth { "fourth" } else { "second" };
                kv("stencil", s.into());
                kv("tolerance", tolerance.to_string());
            }
            AnalysisSpec::ResidualOrder { h, min_order } => {
                kv("h", h.to_string());
                kv("min_order", min_order.to_string());
            }
            AnalysisSpec::Supersolution { barrier } => barrier.write(out, &pre),
            AnalysisSpec::Positivity { expect_dead_core } => {
                kv("expect_dead_core", expect_dead_core.to_string())
            }
            AnalysisSpec::Growth { center, radii, tolerance }
            | AnalysisSpec::Gradient { center, radii, tolerance } => {
                kv("radii", fmt_list(radii));
                kv("tolerance", tolerance.to_string());
                center.write(out, &pre);
            }
            AnalysisSpec::Nondegeneracy { center, radii, barrier_floor } => {
                kv("radii", fmt_list(radii));
                kv("barrier_floor", barrier_floor.to_string());
                center.write(out, &pre);
            }
            AnalysisSpec::Dyadic { center, j_max, c_star } => {
                kv("j_max", j_max.to_string());
                if let Some(c) = c_star {
                    kv("c_star", c.to_string());
                }
                center.write(out, &pre);
            }
            AnalysisSpec::Density { center, radius, varrho, min } => {
                kv("radius", radius.to_string());
                kv("varrho", fmt_list(varrho));
                kv("min", min.to_string());
                center.write(out, &pre);
            }
            AnalysisSpec::Porosity { time, radii, delta, min } => {
                kv("radii", fmt_list(radii));
                kv("delta", fmt_list(delta));
                kv("min", min.to_string());
                CenterSpec {
                    x: XAnchor::At(0.0),
                    t: *time,
                }
                .write(out, &pre);
            }
            AnalysisSpec::FiniteSpeed { x0, t0, r, s, c_grid, max_c } => {
                kv("x0", x0.to_string());
                kv("t0", t0.to_string());
                kv("r", r.to_string());
                kv("s", s.to_string());
                kv("c_grid", fmt_list(c_grid));
                kv("max_c", max_c.to_string());
            }
            AnalysisSpec::Blowup { center, epsilons, band, invariance_tol } => {
                kv("epsilons", fmt_list(epsilons));
                kv("band", band.to_string());
                if let Some(t) = invariance_tol {
                    kv("invariance_tol", t.to_string());
                }
                center.write(out, &pre);
            }
            AnalysisSpec::Liouville { center, radii, expect, rho_rtol } => {
                kv("radii", fmt_list(radii));
                if let Some(e) = expect {
                    kv("expect", e.clone());
                }
                if let Some(t) = rho_rtol {
                    kv("rho_rtol", t.to_string());
                }
                center.write(out, &pre);
            }
            AnalysisSpec::Energy => {}
            AnalysisSpec::InteriorMin { margin } => kv("margin", margin.to_string()),
            AnalysisSpec::ProfileError { until, rtol } => {
                kv("until", until.to_string());
                kv("rtol", rtol.to_string());
            }
            AnalysisSpec::Extinction { steps } => kv("steps", steps.to_string()),
            AnalysisSpec::Ordering { pairs, seed, tolerance } => {
                kv("pairs", pairs.to_string());
                kv("seed", seed.to_string());
                kv("tolerance", tolerance.to_string());
            }
            AnalysisSpec::BarrierDomination { c, shift, factor } => {
                kv("c", c.to_string());
                kv("shift", shift.to_string());
                kv("factor", factor.to_string());
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub name: String,
    pub params: ProblemParams,
    pub grid: GridSpec,
    pub source: SourceSpec,
    /// Dead threshold override; the default is relative to `‖u‖_∞`.
    pub threshold: Option<f64>,
    pub localization: Localization,
    pub analyses: Vec<AnalysisSpec>,
    /// Output directory override; defaults to `<output root>/<name>`.
    pub output_dir: Option<PathBuf>,
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| {
            Error::config(path.display().to_string(), format!("cannot read config: {e}"))
        })?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> Result<Self> {
        let flat = FlatConfig::parse(text)?;
        let r = Reader::new(&flat);
        let name = r.str("name")?.to_string();
        if name.is_empty() || name.contains(['/', '\\']) || name == "." || name == ".." {
            return Err(Error::config("name", format!("`{name}` is not a valid directory name")));
        }

        let p = r.f64("params.p")?;
        let dim = r.usize_or("params.dim", 1)?;
        let lambda0 = r.f64_or("params.lambda0", 1.0)?;
        let critical = r.bool_or("params.critical", false)?;
        let params = if critical {
            ProblemParams::critical(p, dim, lambda0)
        } else {
            ProblemParams::new(p, r.f64("params.q")?, dim, lambda0)
        }
        .map_err(|e| Error::config("params", e.to_string()))?;
        if critical {
            // q is implied; accept it only when consistent.
            if let Some(q) = r.f64_opt("params.q")? {
                if (q - (p - 1.0)).abs() > 1e-12 {
                    return Err(Error::config("params.q", "critical runs need q = p - 1"));
                }
            }
        }

        let geometry = match r.str_or("grid.geometry", "interval") {
            "interval" => Geometry::Interval {
                xl: r.f64_or("grid.xl", -1.0)?,
                xr: r.f64_or("grid.xr", 1.0)?,
            },
            "radial" => Geometry::Radial {
                radius: r.f64("grid.radius")?,
            },
            other => {
                return Err(Error::config(
                    "grid.geometry",
                    format!("expected interval or radial, found `{other}`"),
                ))
            }
        };
        let grid = GridSpec {
            geometry,
            nx: r.usize_or("grid.nx", 128)?,
            t_end: r.f64("grid.t_end")?,
            cfl_sigma: r.f64_or("grid.cfl_sigma", DEFAULT_CFL_SIGMA)?,
            snapshot_every: r.f64("grid.snapshot_every")?,
            dt_max: r.f64_opt("grid.dt_max")?,
        };
        grid.validate().map_err(|e| Error::config("grid", e.to_string()))?;
        if let Geometry::Interval { .. } = grid.geometry {
            if params.dim != 1 {
                return Err(Error::config("params.dim", "interval grids need dim = 1"));
            }
        }

        let source = match r.str_or("source", "solve") {
            "solve" => {
                let initial = match r.str_or("initial.kind", "zero") {
                    "zero" => InitialSpec::Zero,
                    "constant" => InitialSpec::Constant {
                        value: r.f64("initial.value")?,
                    },
                    "bump" => InitialSpec::Bump {
                        amplitude: r.f64("initial.amplitude")?,
                        center: r.f64_or("initial.center", 0.0)?,
                        width: r.f64("initial.width")?,
                    },
                    "exact" => InitialSpec::Exact(ScaledProfile::read(&r, "initial")?),
                    other => {
                        return Err(Error::config("initial.kind", format!("unknown kind `{other}`")))
                    }
                };
                let boundary = match r.str_or("boundary.kind", "constant") {
                    "constant" => {
                        let both = r.f64_or("boundary.value", 0.0)?;
                        BoundarySpec::Constant {
                            left: r.f64_or("boundary.left", both)?,
                            right: r.f64_or("boundary.right", both)?,
                        }
                    }
                    "exact" => BoundarySpec::Exact(ScaledProfile::read(&r, "boundary")?),
                    other => {
                        return Err(Error::config("boundary.kind", format!("unknown kind `{other}`")))
                    }
                };
                let scheme = match r.str_or("solver.absorption", "exact_flow") {
                    "exact_flow" => AbsorptionScheme::ExactFlow,
                    "clamped" => AbsorptionScheme::Clamped,
                    other => {
                        return Err(Error::config(
                            "solver.absorption",
                            format!("expected exact_flow or clamped, found `{other}`"),
                        ))
                    }
                };
                SourceSpec::Solve {
                    initial,
                    boundary,
                    scheme,
                }
            }
            "sample" => SourceSpec::Sample(ProfileSpec::read(&r, "sample")?),
            other => {
                return Err(Error::config("source", format!("expected solve or sample, found `{other}`")))
            }
        };

        let threshold = r.f64_opt("geometry.threshold")?;
        if let Some(t) = threshold {
            if !(t > 0.0) {
                return Err(Error::config("geometry.threshold", "must be positive"));
            }
        }
        let localization = match r.str_or("geometry.localization", "linear") {
            "linear" => Localization::Linear,
            "homogeneous" => Localization::Homogeneous {
                exponent: crate::params::compute_exponents(&params)
                    .map_err(|e| Error::config("geometry.localization", e.to_string()))?
                    .alpha0,
            },
            other => {
                return Err(Error::config(
                    "geometry.localization",
                    format!("expected linear or homogeneous, found `{other}`"),
                ))
            }
        };

        let mut analyses = Vec::new();
        for name in split_list(r.str_or("analyses", "")) {
            if analyses.iter().any(|a: &AnalysisSpec| a.name() == name) {
                return Err(Error::config("analyses", format!("`{name}` listed twice")));
            }
            let spec = AnalysisSpec::read(&r, name)?;
            check_analysis(&spec, &params, &source)?;
            analyses.push(spec);
        }
        let output_dir = r.raw("output.dir").map(PathBuf::from);

        let unused = r.unused();
        if let Some(key) = unused.first() {
            return Err(Error::config(key.as_str(), "unknown or unused key"));
        }
        Ok(Self {
            name,
            params,
            grid,
            source,
            threshold,
            localization,
            analyses,
            output_dir,
        })
    }

    /// Canonical text form; parses back to an equal config.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "name = {}", self.name);
        let pr = &self.params;
        let _ = writeln!(out, "params.p = {}", pr.p);
        if pr.critical {
            let _ = writeln!(out, "params.critical = true");
        } else {
            let _ = writeln!(out, "params.q = {}", pr.q);
        }
        let _ = writeln!(out, "params.dim = {}", pr.dim);
        let lambda = pr.lambda0.constant_value().unwrap_or(f64::NAN);
        let _ = writeln!(out, "params.lambda0 = {lambda}");
        match self.grid.geometry {
            Geometry::Interval { xl, xr } => {
                let _ = writeln!(out, "grid.geometry = interval\ngrid.xl = {xl}\ngrid.xr = {xr}");
            }
            Geometry::Radial { radius } => {
                let _ = writeln!(out, "grid.geometry = radial\ngrid.radius = {radius}");
            }
        }
        let g = &self.grid;
        let _ = writeln!(out, "grid.nx = {}", g.nx);
        let _ = writeln!(out, "grid.t_end = {}", g.t_end);
        let _ = writeln!(out, "grid.cfl_sigma = {}", g.cfl_sigma);
        let _ = writeln!(out, "grid.snapshot_every = {}", g.snapshot_every);
        if let Some(d) = g.dt_max {
            let _ = writeln!(out, "grid.dt_max = {d}");
        }
        match &self.source {
            SourceSpec::Solve {
                initial,
                boundary,
                scheme,
            } => {
                let _ = writeln!(out, "source = solve");
                match initial {
                    InitialSpec::Zero => {
                        let _ = writeln!(out, "initial.kind = zero");
                    }
                    InitialSpec::Constant { value } => {
                        let _ = writeln!(out, "initial.kind = constant\ninitial.value = {value}");
                    }
                    InitialSpec::Bump {
                        amplitude,
                        center,
                        width,
                    } => {
                        let _ = writeln!(
                            out,
                            "initial.kind = bump\ninitial.amplitude = {amplitude}\n\
                             initial.center = {center}\ninitial.width = {width}"
                        );
                    }
                    InitialSpec::Exact(sp) => {
                        let _ = writeln!(out, "initial.kind = exact");
                        sp.write(&mut out, "initial");
                    }
                }
                match boundary {
                    BoundarySpec::Constant { left, right } => {
                        let _ = writeln!(
                            out,
                            "boundary.kind = constant\nboundary.left = {left}\nboundary.right = {right}"
                        );
                    }
                    BoundarySpec::Exact(sp) => {
                        let _ = writeln!(out, "boundary.kind = exact");
                        sp.write(&mut out, "boundary");
                    }
                }
                let s = match scheme {
                    AbsorptionScheme::ExactFlow => "exact_flow",
                    AbsorptionScheme::Clamped => "clamped",
                };
                let _ = writeln!(out, "solver.absorption = {s}");
            }
            SourceSpec::Sample(profile) => {
                let _ = writeln!(out, "source = sample");
                profile.write(&mut out, "sample");
            }
        }
        if let Some(t) = self.threshold {
            let _ = writeln!(out, "geometry.threshold = {t}");
        }
        if let Localization::Homogeneous { .. } = self.localization {
            let _ = writeln!(out, "geometry.localization = homogeneous");
        }
        let names: Vec<&str> = self.analyses.iter().map(AnalysisSpec::name).collect();
        let _ = writeln!(out, "analyses = {}", names.join(", "));
        for a in &self.analyses {
            a.write(&mut out);
        }
        if let Some(dir) = &self.output_dir {
            let _ = writeln!(out, "output.dir = {}", dir.display());
        }
        out
    }

    /// The same experiment on a grid with `factor` times as many cells.
    pub fn refined(&self, factor: usize) -> Self {
        let mut c = self.clone();
        c.grid.nx *= factor;
        c
    }

    pub fn initial_data(&self) -> Result<Option<InitialData>> {
        let SourceSpec::Solve { initial, .. } = &self.source else {
            return Ok(None);
        };
        Ok(Some(match initial {
            InitialSpec::Zero => InitialData::Zero,
            InitialSpec::Constant { value } => InitialData::Constant { value: *value },
            InitialSpec::Bump {
                amplitude,
                center,
                width,
            } => InitialData::Bump {
                amplitude: *amplitude,
                center: *center,
                width: *width,
            },
            InitialSpec::Exact(sp) => InitialData::Exact {
                form: sp.profile.build(&self.params)?,
                scale: sp.scale,
                time_shift: sp.time_shift,
            },
        }))
    }

    pub fn boundary_data(&self) -> Result<BoundaryData> {
        match &self.source {
            SourceSpec::Solve {
                boundary: BoundarySpec::Constant { left, right },
                ..
            } => Ok(BoundaryData::constant(*left, *right)),
            SourceSpec::Solve {
                boundary: BoundarySpec::Exact(sp),
                ..
            } => Ok(BoundaryData::both(Trace::Exact {
                form: sp.profile.build(&self.params)?,
                scale: sp.scale,
                time_shift: sp.time_shift,
            })),
            SourceSpec::Sample(profile) => Ok(BoundaryData::both(Trace::exact(profile.build(&self.params)?))),
        }
    }
}

fn check_analysis(spec: &AnalysisSpec, params: &ProblemParams, source: &SourceSpec) -> Result<()> {
    let path = format!("analysis.{}", spec.name());
    let needs_sample = matches!(
        spec,
        AnalysisSpec::Residual { .. } | AnalysisSpec::ResidualOrder { .. }
    );
    if needs_sample && !matches!(source, SourceSpec::Sample(_)) {
        return Err(Error::config(path, "requires `source = sample`"));
    }
    let needs_critical = matches!(spec, AnalysisSpec::Energy);
    if needs_critical && !params.critical {
        return Err(Error::config(path, "requires critical parameters (params.critical = true)"));
    }
    let needs_subcritical = !matches!(
        spec,
        AnalysisSpec::Energy
            | AnalysisSpec::InteriorMin { .. }
            | AnalysisSpec::ResidualOrder { .. }
            | AnalysisSpec::Residual { .. }
            | AnalysisSpec::Positivity { .. }
            | AnalysisSpec::Ordering { .. }
    );
    if needs_subcritical && params.critical {
        return Err(Error::config(path, "undefined for critical parameters"));
    }
    if let AnalysisSpec::Extinction { .. } | AnalysisSpec::ProfileError { .. } = spec {
        let ok = matches!(
            source,
            SourceSpec::Solve {
                boundary: BoundarySpec::Exact(_),
                ..
            }
        );
        if !ok {
            return Err(Error::config(path, "requires an exact boundary trace to compare against"));
        }
    }
    Ok(())
}
