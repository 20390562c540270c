//! Runs one configured experiment end to end and writes its artifacts.
//!
//! Layout of an experiment directory:
//!
//! ```text
//! <dir>/config.conf        canonical config text
//! <dir>/run.json           solver statistics (or sampling metadata)
//! <dir>/field.json         grid, params and snapshot times
//! <dir>/snapshots.csv      t,x,u rows
//! <dir>/reports/<a>.json   one probe report per analysis
//! <dir>/summary.csv        experiment,quantity,target,measured,tolerance,verdict
//! ```
//!
//! Every numeric output is a deterministic function of the config.

use std::fs;
use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::analysis::{
    blowup_rescale, dyadic_sequence, energy_decay_check, gradient_rate_fit, growth_rate_fit,
    interior_minimum, liouville_classify, max_shared_deviation, nondegeneracy_fit, GrowthClass,
    RateReport,
};
use crate::config::{
    AnalysisSpec, CenterSpec, ExperimentConfig, SourceSpec, TAnchor, XAnchor,
};
use crate::error::{Error, Result};
use crate::exact::{barrier_supersolution_check, pde_residual_with, ClosedForm, ProfileKind, ResidualStencil};
use crate::field::{embed, BoundaryData, SpaceTimeField, Trace};
use crate::geometry::{
    default_threshold, density_probe, extract_positivity, minimal_speed_constant,
    nearest_free_boundary_point, porosity_probe, IntrinsicCylinder, Localization,
};
use crate::params::{barrier_constant_nondeg, compute_exponents};
use crate::report::{write_summary_csv, ProbeReport, SummaryRow};
use crate::solver::{run, run_lockstep, InitialData, Problem, RunStats};

/// Environment variable naming the default output root.
pub const OUTPUT_ROOT_ENV: &str = "DEADCORE_OUTPUT";

/// Output root from [`OUTPUT_ROOT_ENV`], or `./output`.
pub fn default_output_root() -> PathBuf {
    std::env::var_os(OUTPUT_ROOT_ENV)
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from("output"))
}

/// The field produced by an experiment, with solver statistics when it was simulated.
#[derive(Debug, Clone)]
pub struct Produced {
    pub field: SpaceTimeField,
    pub stats: Option<RunStats>,
}

/// Runs the solver or samples the closed form, as the config asks.
pub fn produce_field(config: &ExperimentConfig) -> Result<Produced> {
    match &config.source {
        SourceSpec::Solve { scheme, .. } => {
            let initial = config.initial_data()?.expect("solve source has initial data");
            let problem = Problem::new(
                config.params.clone(),
                config.grid.clone(),
                initial,
                config.boundary_data()?,
            )
            .with_scheme(*scheme);
            let out = run(&problem).map_err(|e| e.in_stage("solver"))?;
            Ok(Produced {
                field: out.field,
                stats: Some(out.stats),
            })
        }
        SourceSpec::Sample(profile) => {
            let cf = profile.build(&config.params).map_err(|e| e.in_stage("sampling"))?;
            let field =
                SpaceTimeField::from_closed_form(&cf, config.grid.clone(), config.grid.snapshot_times())
                    .map_err(|e| e.in_stage("sampling"))?;
            Ok(Produced { field, stats: None })
        }
    }
}

/// Result of one analysis: its JSON report and its summary rows.
#[derive(Debug, Clone)]
pub struct AnalysisOutcome {
    pub name: &'static str,
    pub report: ProbeReport,
    pub rows: Vec<SummaryRow>,
}

#[derive(Debug, Clone)]
pub struct ExperimentOutcome {
    pub name: String,
    pub dir: Option<PathBuf>,
    pub analyses: Vec<AnalysisOutcome>,
    pub stats: Option<RunStats>,
}

impl ExperimentOutcome {
    pub fn rows(&self) -> Vec<SummaryRow> {
        self.analyses.iter().flat_map(|a| a.rows.clone()).collect()
    }

    pub fn passed(&self) -> bool {
        self.analyses
            .iter()
            .all(|a| a.rows.iter().all(|r| r.verdict.is_pass()))
    }
}

/// Runs an experiment in memory, without touching the file system.
pub fn evaluate(config: &ExperimentConfig) -> Result<(Produced, Vec<AnalysisOutcome>)> {
    let produced = produce_field(config)?;
    let mut outcomes = Vec::with_capacity(config.analyses.len());
    for spec in &config.analyses {
        let outcome = run_analysis(config, &produced, spec)
            .map_err(|e| e.in_stage(format!("analysis `{}`", spec.name())))?;
        outcomes.push(outcome);
    }
    Ok((produced, outcomes))
}

/// Runs an experiment and writes its artifacts under `output_root/<name>`
/// (or the config's own output directory).
///
/// An existing directory is only replaced when `force` is set.
pub fn run_experiment(config: &ExperimentConfig, output_root: &Path, force: bool) -> Result<ExperimentOutcome> {
    let dir = config
        .output_dir
        .clone()
        .unwrap_or_else(|| output_root.join(&config.name));
    prepare_dir(&dir, force)?;
    let (produced, analyses) = evaluate(config)?;
    write_artifacts(&dir, config, &produced, &analyses)?;
    Ok(ExperimentOutcome {
        name: config.name.clone(),
        dir: Some(dir),
        analyses,
        stats: produced.stats,
    })
}

/// Creates `dir`, refusing to replace a non-empty directory unless `force` is set.
pub fn prepare_dir(dir: &Path, force: bool) -> Result<()> {
    if dir.exists() {
        let non_empty = fs::read_dir(dir)?.next().is_some();
        if non_empty && !force {
            return Err(Error::OutputExists(dir.display().to_string()));
        }
        if non_empty {
            fs::remove_dir_all(dir)?;
        }
    }
    fs::create_dir_all(dir)?;
    Ok(())
}

#[derive(Serialize)]
struct RunRecord<'a> {
    name: &'a str,
    source: &'static str,
    snapshots: usize,
    stats: Option<&'a RunStats>,
}

fn write_artifacts(
    dir: &Path,
    config: &ExperimentConfig,
    produced: &Produced,
    analyses: &[AnalysisOutcome],
) -> Result<()> {
    fs::write(dir.join("config.conf"), config.to_text())?;
    let record = RunRecord {
        name: &config.name,
        source: match config.source {
            SourceSpec::Solve { .. } => "solve",
            SourceSpec::Sample(_) => "sample",
        },
        snapshots: produced.field.times.len(),
        stats: produced.stats.as_ref(),
    };
    fs::write(dir.join("run.json"), serde_json::to_string_pretty(&record)?)?;
    produced.field.write_meta(&dir.join("field.json"))?;
    produced.field.write_csv(&dir.join("snapshots.csv"))?;
    let reports = dir.join("reports");
    fs::create_dir_all(&reports)?;
    for a in analyses {
        fs::write(reports.join(format!("{}.json", a.name)), a.report.to_json())?;
    }
    let rows: Vec<SummaryRow> = analyses.iter().flat_map(|a| a.rows.clone()).collect();
    write_summary_csv(fs::File::create(dir.join("summary.csv"))?, &rows)?;
    Ok(())
}

/// Loads a field written by [`run_experiment`].
pub fn load_run_dir(dir: &Path) -> Result<SpaceTimeField> {
    SpaceTimeField::read(&dir.join("field.json"), &dir.join("snapshots.csv"))
}

/// Growth, non-degeneracy and gradient fits of a stored run at a fixed centre.
pub fn rates_at(field: &SpaceTimeField, center: (f64, f64), radii: &[f64], tolerance: f64) -> Result<Vec<RateReport>> {
    Ok(vec![
        growth_rate_fit(field, center, radii, tolerance)?,
        nondegeneracy_fit(field, center, radii)?,
        gradient_rate_fit(field, center, radii, tolerance)?,
    ])
}

fn threshold(config: &ExperimentConfig, field: &SpaceTimeField) -> f64 {
    config.threshold.unwrap_or_else(|| default_threshold(field))
}

fn resolve_time(field: &SpaceTimeField, t: TAnchor) -> f64 {
    let raw = match t {
        TAnchor::At(t) => t,
        TAnchor::Last(lag) => field.times.last().unwrap() - lag,
    };
    // Snap to a stored snapshot when within round-off of one.
    let k = field.nearest_snapshot(raw);
    if (field.times[k] - raw).abs() <= 1e-9 * raw.abs().max(1.0) {
        field.times[k]
    } else {
        raw
    }
}

fn resolve_center(config: &ExperimentConfig, field: &SpaceTimeField, c: &CenterSpec) -> Result<(f64, f64)> {
    let t = resolve_time(field, c.t);
    let x = match c.x {
        XAnchor::At(x) => x,
        XAnchor::FreeBoundary(near) => {
            let k = field.nearest_snapshot(t);
            nearest_free_boundary_point(field, k, near, config.threshold, config.localization)?
                .ok_or_else(|| {
                    Error::Precondition(format!("no free boundary in the snapshot at t = {}", field.times[k]))
                })?
        }
    };
    Ok((x, t))
}

fn rate_rows(name: &str, quantity: &str, rep: &RateReport) -> Vec<SummaryRow> {
    let slope = rep.slope.unwrap_or(f64::NAN);
    let r2 = rep.r_squared.unwrap_or(f64::NAN);
    vec![
        SummaryRow::new(
            name,
            quantity,
            rep.target,
            slope,
            rep.tolerance,
            (slope - rep.target).abs() <= rep.tolerance,
        ),
        SummaryRow::new(
            name,
            &format!("{quantity}_r_squared"),
            ">= 0.95",
            r2,
            "",
            r2 >= crate::analysis::MIN_R_SQUARED,
        ),
    ]
}

fn exact_trace(config: &ExperimentConfig) -> Result<(ClosedForm, f64, f64)> {
    match config.boundary_data()? {
        BoundaryData {
            right: Trace::Exact {
                form,
                scale,
                time_shift,
            },
            ..
        } => Ok((form, scale, time_shift)),
        _ => Err(Error::Precondition("no exact boundary trace".into())),
    }
}

fn run_analysis(config: &ExperimentConfig, produced: &Produced, spec: &AnalysisSpec) -> Result<AnalysisOutcome> {
    let field = &produced.field;
    let name = config.name.as_str();
    let tag = spec.name();
    let t_first = field.times[0];
    let (report, rows) = match spec {
        AnalysisSpec::Residual { stencil, tolerance } => {
            let SourceSpec::Sample(profile) = &config.source else {
                unreachable!("validated at parse time")
            };
            let cf = profile.build(&config.params)?;
            let h = field.dx();
            let (mut worst, mut checked, mut excluded) = (0.0f64, 0usize, 0usize);
            let k = 0;
            let t = field.times[k];
            for i in 1..field.nx() {
                if field.slices[k][i] <= 0.0 {
                    continue;
                }
                match pde_residual_with(&cf, &embed(field.x(i), config.params.dim), t, h, *stencil) {
                    Ok(r) => {
                        worst = worst.max(r.abs());
                        checked += 1;
                    }
                    Err(Error::NearFreeBoundary { .. }) => excluded += 1,
                    Err(e) => return Err(e),
                }
            }
            let pass = checked > 0 && worst <= *tolerance;
            let rep = ProbeReport::new(tag, [f64::NAN, t], vec![h])
                .verdict("overall", crate::report::Verdict::from_bool(pass))
                .verdict(
                    "stencil",
                    if *stencil == ResidualStencil::Fourth { "fourth" } else { "second" },
                )
                .constant("max_abs_residual", worst)
                .constant("nodes_checked", checked as f64)
                .constant("nodes_within_stencil_of_kink", excluded as f64);
            let row = SummaryRow::new(name, "max_abs_residual", "0", worst, format!("{tolerance:e}"), pass);
            (rep, vec![row])
        }
        AnalysisSpec::ResidualOrder { h, min_order } => {
            let SourceSpec::Sample(profile) = &config.source else {
                unreachable!("validated at parse time")
            };
            let cf = profile.build(&config.params)?;
            let t = field.times[field.times.len() / 2];
            let hs = [*h, h / 2.0, h / 4.0];
            let mut maxima = [0.0f64; 3];
            for i in 1..field.nx() {
                let x = embed(field.x(i), config.params.dim);
                let rs: Result<Vec<f64>> = hs
                    .iter()
                    .map(|&hh| pde_residual_with(&cf, &x, t, hh, ResidualStencil::Second))
                    .collect();
                match rs {
                    Ok(rs) => {
                        for (m, r) in maxima.iter_mut().zip(rs) {
                            *m = m.max(r.abs());
                        }
                    }
                    Err(Error::NearFreeBoundary { .. } | Error::Domain { .. }) => {}
                    Err(e) => return Err(e),
                }
            }
            let order = (maxima[0] / maxima[1]).log2().min((maxima[1] / maxima[2]).log2());
            let pass = order >= *min_order;
            let rep = ProbeReport::new(tag, [f64::NAN, t], hs.to_vec())
                .verdict("overall", crate::report::Verdict::from_bool(pass))
                .constant("residual_h", maxima[0])
                .constant("residual_h_2", maxima[1])
                .constant("residual_h_4", maxima[2])
                .constant("observed_order", order);
            let row = SummaryRow::new(name, "observed_order", format!(">= {min_order}"), order, "", pass);
            (rep, vec![row])
        }
        AnalysisSpec::Supersolution { barrier } => {
            let cf = barrier.build(&config.params)?;
            let h = field.dx();
            let mut samples = Vec::new();
            for &t in &field.times {
                for i in 0..=field.nx() {
                    let x = embed(field.x(i), config.params.dim);
                    if pde_residual_with(&cf, &x, t, h, ResidualStencil::Second).is_ok() {
                        samples.push((x, t));
                    }
                }
            }
            let rep = barrier_supersolution_check(&cf, &samples, h, ResidualStencil::Second)?;
            let probe = ProbeReport::new(tag, [f64::NAN, t_first], vec![h])
                .verdict("overall", crate::report::Verdict::from_bool(rep.pass))
                .verdict("barrier", rep.kind)
                .constant("worst_residual", rep.worst_residual)
                .constant("tolerance", rep.tolerance)
                .constant("samples", samples.len() as f64);
            let row = SummaryRow::new(name, "barrier_residual", "<= 0", rep.worst_residual, rep.tolerance, rep.pass);
            (probe, vec![row])
        }
        AnalysisSpec::Positivity { expect_dead_core } => {
            let set = extract_positivity(field, config.threshold)?;
            let last = *set.dead_core_measure.last().unwrap();
            let worst_growth = set
                .dead_core_measure
                .windows(2)
                .map(|w| w[1] - w[0])
                .fold(0.0f64, f64::max);
            let probe = ProbeReport::new(tag, [f64::NAN, *field.times.last().unwrap()], Vec::new())
                .constant("threshold", set.threshold)
                .constant("dead_core_measure_first", set.dead_core_measure[0])
                .constant("dead_core_measure_last", last)
                .constant("dead_core_worst_growth", worst_growth)
                .constant("free_boundary_points_last", set.free_boundary_points.last().unwrap().len() as f64);
            let mut rows = vec![SummaryRow::new(
                name,
                "dead_core_growth",
                "<= 0",
                worst_growth,
                1e-12,
                worst_growth <= 1e-12,
            )];
            if *expect_dead_core {
                rows.push(SummaryRow::new(name, "dead_core_measure", "> 0", last, "", last > 0.0));
            }
            let pass = rows.iter().all(|r| r.verdict.is_pass());
            (probe.verdict("overall", crate::report::Verdict::from_bool(pass)), rows)
        }
        AnalysisSpec::Growth { center, radii, tolerance } => {
            let c = resolve_center(config, field, center)?;
            let rep = growth_rate_fit(field, c, radii, *tolerance)?;
            (rep.to_probe_report(), rate_rows(name, "growth_slope", &rep))
        }
        AnalysisSpec::Gradient { center, radii, tolerance } => {
            let c = resolve_center(config, field, center)?;
            let rep = gradient_rate_fit(field, c, radii, *tolerance)?;
            (rep.to_probe_report(), rate_rows(name, "gradient_slope", &rep))
        }
        AnalysisSpec::Nondegeneracy {
            center,
            radii,
            barrier_floor,
        } => {
            let c = resolve_center(config, field, center)?;
            let rep = nondegeneracy_fit(field, c, radii)?;
            let mut probe = rep.to_probe_report();
            let mut rows = vec![
                SummaryRow::new(name, "envelope_constant", "> 0", rep.envelope_min, "", rep.envelope_min > 0.0),
                SummaryRow::new(
                    name,
                    "envelope_spread",
                    format!("<= {}", crate::analysis::MAX_ENVELOPE_SPREAD),
                    rep.spread(),
                    "",
                    rep.verdict.is_pass(),
                ),
            ];
            if *barrier_floor {
                let floor = barrier_constant_nondeg(&config.params)?;
                probe = probe.constant("barrier_constant", floor);
                rows.push(SummaryRow::new(
                    name,
                    "envelope_vs_barrier_constant",
                    format!(">= {floor}"),
                    rep.envelope_min,
                    "",
                    rep.envelope_min >= floor,
                ));
            }
            (probe, rows)
        }
        AnalysisSpec::Dyadic { center, j_max, c_star } => {
            let c = resolve_center(config, field, center)?;
            let c_star = match c_star {
                Some(v) => *v,
                None => {
                    let radii: Vec<f64> = (0..=*j_max).map(|j| 0.5f64.powi(j as i32)).collect();
                    nondegeneracy_fit(field, c, &radii)?.envelope_min
                }
            };
            if !(c_star > 0.0) {
                return Err(Error::Precondition(
                    "the measured non-degeneracy constant is zero; the centre is not in the closed positivity set"
                        .into(),
                ));
            }
            let seq = dyadic_sequence(field, c, *j_max, c_star)?;
            let monotone = seq.values.windows(2).all(|w| w[1] <= w[0] * (1.0 + 1e-12));
            let rows = vec![
                SummaryRow::new(name, "dyadic_monotone", "true", monotone as u8 as f64, "", monotone),
                SummaryRow::new(name, "dyadic_j0_member", "true", seq.members[0] as u8 as f64, "", seq.members[0]),
            ];
            (seq.to_probe_report(), rows)
        }
        AnalysisSpec::Density {
            center,
            radius,
            varrho,
            min,
        } => {
            let c = resolve_center(config, field, center)?;
            let cyl = IntrinsicCylinder::resolve(field, c.0, c.1, *radius)?;
            let rep = density_probe(field, &cyl, varrho, config.threshold)?;
            let best = rep.best_varrho.unwrap_or(0.0);
            let pass = rep.verdict.is_pass() && best >= *min;
            let row = SummaryRow::new(name, "density_varrho", format!(">= {min}"), best, "", pass);
            (rep.to_probe_report(), vec![row])
        }
        AnalysisSpec::Porosity { time, radii, delta, min } => {
            let t = resolve_time(field, *time);
            let rep = porosity_probe(field, t, radii, delta, config.threshold)?;
            let best = rep.best_delta.unwrap_or(if rep.vacuous { 1.0 } else { 0.0 });
            let pass = rep.verdict.is_pass() && (rep.vacuous || best >= *min);
            let row = SummaryRow::new(name, "porosity_delta", format!(">= {min}"), best, "", pass);
            (rep.to_probe_report(), vec![row])
        }
        AnalysisSpec::FiniteSpeed {
            x0,
            t0,
            r,
            s,
            c_grid,
            max_c,
        } => {
            let c = minimal_speed_constant(field, *x0, *t0, *r, *s, c_grid, config.threshold)?;
            let measured = c.unwrap_or(f64::INFINITY);
            let pass = measured <= *max_c;
            let probe = ProbeReport::new(tag, [*x0, *t0], vec![*r])
                .verdict("overall", crate::report::Verdict::from_bool(pass))
                .constant("s", *s)
                .constant("minimal_c", measured);
            let row = SummaryRow::new(name, "minimal_speed_constant", format!("<= {max_c}"), measured, "", pass);
            (probe, vec![row])
        }
        AnalysisSpec::Blowup {
            center,
            epsilons,
            band,
            invariance_tol,
        } => {
            let c = resolve_center(config, field, center)?;
            let alpha0 = compute_exponents(&config.params)?.alpha0;
            let mut sups = Vec::new();
            let mut worst_dev = 0.0f64;
            for &eps in epsilons {
                let resc = blowup_rescale(field, c, eps)?;
                sups.push(resc.field.sup_norm());
                if invariance_tol.is_some() {
                    let dev = max_shared_deviation(&resc.field, field).ok_or_else(|| {
                        Error::Precondition(format!("rescaling with ε = {eps} shares no nodes with the field"))
                    })?;
                    worst_dev = worst_dev.max(dev);
                }
            }
            let lo = sups.iter().copied().fold(f64::INFINITY, f64::min);
            let hi = sups.iter().copied().fold(0.0f64, f64::max);
            let ratio = if lo > 0.0 { hi / lo } else { f64::INFINITY };
            let mut rows = vec![SummaryRow::new(
                name,
                "blowup_band_ratio",
                format!("<= {band}"),
                ratio,
                "",
                ratio <= *band,
            )];
            let mut probe = ProbeReport::new(tag, [c.0, c.1], epsilons.clone())
                .constant("alpha0", alpha0)
                .constant("sup_min", lo)
                .constant("sup_max", hi)
                .constant("band_ratio", ratio);
            if let Some(tol) = invariance_tol {
                probe = probe.constant("max_shared_deviation", worst_dev);
                rows.push(SummaryRow::new(
                    name,
                    "blowup_invariance",
                    "0",
                    worst_dev,
                    format!("{tol:e}"),
                    worst_dev <= *tol,
                ));
            }
            let pass = rows.iter().all(|r| r.verdict.is_pass());
            (probe.verdict("overall", crate::report::Verdict::from_bool(pass)), rows)
        }
        AnalysisSpec::Liouville {
            center,
            radii,
            expect,
            rho_rtol,
        } => {
            let c = resolve_center(config, field, center)?;
            let rep = liouville_classify(field, c, radii)?;
            let mut rows = Vec::new();
            if let Some(e) = expect {
                let want = if e == "subcritical" {
                    GrowthClass::Subcritical
                } else {
                    GrowthClass::CriticalOrAbove
                };
                rows.push(SummaryRow::new(
                    name,
                    "liouville_class",
                    want,
                    rep.rho[0] / rep.rho.last().unwrap(),
                    "",
                    rep.class == want,
                ));
            }
            if let Some(tol) = rho_rtol {
                rows.push(SummaryRow::new(
                    name,
                    "liouville_rho_spread",
                    "1",
                    rep.spread,
                    tol,
                    rep.spread - 1.0 <= *tol,
                ));
            }
            (rep.to_probe_report(), rows)
        }
        AnalysisSpec::Energy => {
            let rep = energy_decay_check(field)?;
            let row = SummaryRow::new(
                name,
                "energy_worst_increase",
                "<= 0",
                rep.worst_increase,
                format!("{:e}", crate::analysis::ENERGY_RTOL * rep.scale),
                rep.verdict.is_pass(),
            );
            (rep.to_probe_report(), vec![row])
        }
        AnalysisSpec::InteriorMin { margin } => {
            let mins = interior_minimum(field, *margin);
            let m = mins.iter().copied().fold(f64::INFINITY, f64::min);
            let pass = m > 0.0;
            let probe = ProbeReport::new(tag, [f64::NAN, t_first], Vec::new())
                .verdict("overall", crate::report::Verdict::from_bool(pass))
                .constant("margin", *margin)
                .constant("interior_min", m);
            (probe, vec![SummaryRow::new(name, "interior_min", "> 0", m, "", pass)])
        }
        AnalysisSpec::ProfileError { until, rtol } => {
            let (form, scale, shift) = exact_trace(config)?;
            let mut worst = 0.0f64;
            for (k, &t) in field.times.iter().enumerate() {
                if t > *until + 1e-12 {
                    continue;
                }
                for i in 0..=field.nx() {
                    let e = scale * form.evaluate(&embed(field.x(i), config.params.dim), t + shift)?;
                    if e > 0.0 {
                        worst = worst.max((field.slices[k][i] - e).abs() / e);
                    }
                }
            }
            let pass = worst <= *rtol;
            let probe = ProbeReport::new(tag, [f64::NAN, t_first], Vec::new())
                .verdict("overall", crate::report::Verdict::from_bool(pass))
                .constant("until", *until)
                .constant("max_relative_error", worst);
            (probe, vec![SummaryRow::new(name, "max_relative_error", "0", worst, rtol, pass)])
        }
        AnalysisSpec::Extinction { steps } => {
            let (form, _, shift) = exact_trace(config)?;
            let ProfileKind::OdeDeadcore { extinction_time } = form.kind else {
                return Err(Error::Precondition("extinction needs an ode boundary trace".into()));
            };
            let dt = config
                .grid
                .dt_max
                .or(produced.stats.as_ref().map(|s| s.dt_max))
                .unwrap_or(field.dx() * field.dx());
            let after = extinction_time - shift + steps * dt;
            let eps = threshold(config, field);
            let ks: Vec<usize> = (0..field.times.len()).filter(|&k| field.times[k] >= after).collect();
            if ks.is_empty() {
                return Err(Error::OutsideHistory(format!("no snapshot at or after t = {after}")));
            }
            let worst = ks
                .iter()
                .flat_map(|&k| field.slices[k].iter())
                .fold(0.0f64, |m, &v| m.max(v));
            let pass = worst <= eps;
            let probe = ProbeReport::new(tag, [f64::NAN, after], Vec::new())
                .verdict("overall", crate::report::Verdict::from_bool(pass))
                .constant("extinction_time", extinction_time - shift)
                .constant("checked_from", after)
                .constant("max_after", worst)
                .constant("threshold", eps);
            (probe, vec![SummaryRow::new(name, "max_after_extinction", "0", worst, format!("{eps:e}"), pass)])
        }
        AnalysisSpec::Ordering { pairs, seed, tolerance } => {
            let (worst, worst_pair) = ordering_trials(config, *pairs, *seed)?;
            let pass = worst <= *tolerance;
            let probe = ProbeReport::new(tag, [f64::NAN, t_first], Vec::new())
                .verdict("overall", crate::report::Verdict::from_bool(pass))
                .constant("pairs", *pairs as f64)
                .constant("worst_violation", worst)
                .constant("worst_pair", worst_pair as f64);
            (probe, vec![SummaryRow::new(name, "ordering_worst_violation", "<= 0", worst, format!("{tolerance:e}"), pass)])
        }
        AnalysisSpec::BarrierDomination { c, shift, factor } => {
            let (excess, scale) = barrier_domination(config, *c, *shift, *factor)?;
            let tol = 1e-12 * scale.max(1.0);
            let pass = excess <= tol;
            let probe = ProbeReport::new(tag, [0.0, 0.0], Vec::new())
                .verdict("overall", crate::report::Verdict::from_bool(pass))
                .constant("c", *c)
                .constant("worst_excess", excess);
            (probe, vec![SummaryRow::new(name, "barrier_worst_excess", "<= 0", excess, format!("{tol:e}"), pass)])
        }
    };
    Ok(AnalysisOutcome { name: tag, report, rows })
}

/// Runs random ordered pairs `u₀ ≤ v₀` in lockstep; returns the largest
/// `u − v` seen at any step and the index of the pair where it occurred.
fn ordering_trials(config: &ExperimentConfig, pairs: usize, seed: u64) -> Result<(f64, usize)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = config.grid.nx + 1;
    let mut worst = f64::NEG_INFINITY;
    let mut worst_pair = 0;
    for pair in 0..pairs {
        let lo: Vec<f64> = (0..n).map(|_| rng.gen_range(0.0..1.0)).collect();
        let hi: Vec<f64> = lo.iter().map(|&v| v + rng.gen_range(0.0..0.5)).collect();
        let make = |values: Vec<f64>| {
            let boundary = BoundaryData::constant(values[0], values[n - 1]);
            Problem::new(
                config.params.clone(),
                config.grid.clone(),
                InitialData::Values { values },
                boundary,
            )
        };
        let out = run_lockstep(&make(hi), &make(lo))?;
        if out.worst_step_violation > worst {
            worst = out.worst_step_violation;
            worst_pair = pair;
        }
    }
    Ok((worst, worst_pair))
}

/// Runs data `factor·Φ̂` on `[0, shift]` (barrier time `t − shift`) and returns
/// the largest excess of the run over `Φ̂` and the barrier's scale.
fn barrier_domination(config: &ExperimentConfig, c: f64, shift: f64, factor: f64) -> Result<(f64, f64)> {
    let form = ClosedForm::barrier_nondeg_with(config.params.clone(), c);
    let mut grid = config.grid.clone();
    grid.t_end = shift;
    let trace = Trace::Exact {
        form: form.clone(),
        scale: factor,
        time_shift: -shift,
    };
    let problem = Problem::new(
        config.params.clone(),
        grid,
        InitialData::Exact {
            form: form.clone(),
            scale: factor,
            time_shift: -shift,
        },
        BoundaryData::both(trace),
    )
    .with_scheme(match &config.source {
        SourceSpec::Solve { scheme, .. } => *scheme,
        SourceSpec::Sample(_) => Default::default(),
    });
    let out = run(&problem)?;
    let field = &out.field;
    let mut excess = f64::NEG_INFINITY;
    let mut scale = 0.0f64;
    for (k, &t) in field.times.iter().enumerate() {
        for i in 0..=field.nx() {
            let phi = form.evaluate(&embed(field.x(i), config.params.dim), t - shift)?;
            scale = scale.max(phi);
            excess = excess.max(field.slices[k][i] - phi);
        }
    }
    Ok((excess, scale))
}

/// Name of the localization rule, for reports.
pub fn localization_name(l: Localization) -> &'static str {
    match l {
        Localization::Linear => "linear",
        Localization::Homogeneous { .. } => "homogeneous",
    }
}

