//! The bundled verification suite: ten named criteria evaluated over the
//! experiment configs shipped in `configs/`.
//!
//! Each criterion draws summary rows from one or more experiments; an
//! experiment shared by several criteria runs once. Experiments run in
//! parallel, and results are assembled in declaration order.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::thread;
use std::time::{Duration, Instant};

use crate::config::ExperimentConfig;
use crate::error::{Error, Result};
use crate::experiment::{evaluate, prepare_dir, run_experiment, AnalysisOutcome};
use crate::report::{write_summary_csv, SummaryRow, Verdict};

/// Environment variable naming the config directory used by `verify-all`.
pub const CONFIG_DIR_ENV: &str = "DEADCORE_CONFIGS";

/// Rows a criterion takes from one experiment.
#[derive(Debug, Clone, Copy)]
pub struct Source {
    pub config: &'static str,
    /// Analyses whose rows count; empty means all of them.
    pub analyses: &'static [&'static str],
}

/// A refinement check: the named quantity must change by at most `max_ratio`
/// when the grid is refined by `factor`.
#[derive(Debug, Clone, Copy)]
pub struct Refinement {
    pub config: &'static str,
    pub analysis: &'static str,
    pub quantity: &'static str,
    pub factor: usize,
    pub max_ratio: f64,
}

#[derive(Debug, Clone, Copy)]
pub struct Criterion {
    pub id: &'static str,
    pub title: &'static str,
    pub sources: &'static [Source],
    pub refinement: Option<Refinement>,
    /// Desk-scale runtime budget of the criterion's experiments, in seconds.
    pub budget_secs: f64,
}

const fn src(config: &'static str, analyses: &'static [&'static str]) -> Source {
    Source { config, analyses }
}

pub const CRITERIA: [Criterion; 10] = [
    Criterion {
        id: "C1",
        title: "exact stationary profile residual",
        sources: &[src("verify-exact", &["residual"])],
        refinement: None,
        budget_secs: 1.0,
    },
    Criterion {
        id: "C2",
        title: "ode dead-core reproduction",
        sources: &[src("ode-deadcore", &[])],
        refinement: None,
        budget_secs: 10.0,
    },
    Criterion {
        id: "C3",
        title: "sharp growth exponent",
        sources: &[
            src("halfspace-rates", &["growth"]),
            src("growth-steady", &["growth"]),
        ],
        refinement: None,
        budget_secs: 60.0,
    },
    Criterion {
        id: "C4",
        title: "non-degeneracy",
        sources: &[src("theorem-1.1", &["nondegeneracy"])],
        refinement: Some(Refinement {
            config: "theorem-1.1",
            analysis: "nondegeneracy",
            quantity: "envelope_constant",
            factor: 2,
            max_ratio: 2.0,
        }),
        budget_secs: 60.0,
    },
    Criterion {
        id: "C5",
        title: "comparison principle",
        sources: &[src("comparison", &[])],
        refinement: None,
        budget_secs: 30.0,
    },
    Criterion {
        id: "C6",
        title: "finite speed of propagation",
        sources: &[src("finite-speed", &[])],
        refinement: Some(Refinement {
            config: "finite-speed",
            analysis: "finite_speed",
            quantity: "minimal_speed_constant",
            factor: 2,
            max_ratio: 2.0,
        }),
        budget_secs: 30.0,
    },
    Criterion {
        id: "C7",
        title: "density and porosity",
        sources: &[src("halfspace-rates", &["density", "porosity"])],
        refinement: None,
        budget_secs: 5.0,
    },
    Criterion {
        id: "C8",
        title: "critical case",
        sources: &[
            src("critical-positive", &[]),
            src("critical-energy", &[]),
            src("critical-expsum", &[]),
        ],
        refinement: None,
        budget_secs: 30.0,
    },
    Criterion {
        id: "C9",
        title: "blow-up rescaling",
        sources: &[
            src("halfspace-rates", &["blowup"]),
            src("theorem-1.1", &["blowup"]),
        ],
        refinement: None,
        budget_secs: 30.0,
    },
    Criterion {
        id: "C10",
        title: "Liouville classification",
        sources: &[
            src("liouville-zero", &[]),
            src("halfspace-rates", &["liouville"]),
            src("liouville-ode", &[]),
        ],
        refinement: None,
        budget_secs: 5.0,
    },
];

/// Looks a criterion up by id, case-insensitively (`c4` and `C4` both work).
pub fn criterion(id: &str) -> Option<&'static Criterion> {
    CRITERIA.iter().find(|c| c.id.eq_ignore_ascii_case(id.trim()))
}

#[derive(Debug, Clone)]
pub struct CriterionResult {
    pub id: &'static str,
    pub title: &'static str,
    pub rows: Vec<SummaryRow>,
    /// Set when an experiment the criterion depends on failed to run.
    pub error: Option<String>,
    /// Wall time of the experiments the criterion depends on.
    pub elapsed: Duration,
    pub budget: Duration,
}

impl CriterionResult {
    pub fn verdict(&self) -> Verdict {
        Verdict::from_bool(
            self.error.is_none()
                && !self.rows.is_empty()
                && self.rows.iter().all(|r| r.verdict.is_pass())
                && self.within_budget(),
        )
    }

    pub fn within_budget(&self) -> bool {
        self.elapsed <= self.budget
    }

    /// One line: `C4   PASS non-degeneracy (3/3 checks, 1.2 s of 60 s)`.
    pub fn line(&self) -> String {
        let passed = self.rows.iter().filter(|r| r.verdict.is_pass()).count();
        let mut s = format!(
            "{:<4} {} {} ({}/{} checks, {:.1} s of {} s)",
            self.id,
            self.verdict(),
            self.title,
            passed,
            self.rows.len(),
            self.elapsed.as_secs_f64(),
            self.budget.as_secs_f64()
        );
        if !self.within_budget() {
            s.push_str(": over the runtime budget");
        }
        if let Some(e) = &self.error {
            let _ = write!(s, ": {e}");
        }
        s
    }
}

#[derive(Debug, Clone)]
pub struct SuiteSummary {
    pub results: Vec<CriterionResult>,
}

impl SuiteSummary {
    pub fn passed(&self) -> bool {
        self.results.iter().all(|r| r.verdict().is_pass())
    }

    pub fn failing(&self) -> Vec<&'static str> {
        self.results
            .iter()
            .filter(|r| !r.verdict().is_pass())
            .map(|r| r.id)
            .collect()
    }

    /// Verdict table: one line per criterion followed by its failing rows.
    pub fn table(&self) -> String {
        let mut out = String::new();
        for r in &self.results {
            let _ = writeln!(out, "{}", r.line());
            for row in r.rows.iter().filter(|row| !row.verdict.is_pass()) {
                let _ = writeln!(
                    out,
                    "       FAIL {}/{}: measured {:.6e}, target {} (tolerance {})",
                    row.experiment, row.quantity, row.measured, row.target, row.tolerance
                );
            }
        }
        out
    }

    /// All rows, with the experiment column prefixed by the criterion id.
    pub fn rows(&self) -> Vec<SummaryRow> {
        self.results
            .iter()
            .flat_map(|r| {
                r.rows.iter().map(move |row| SummaryRow {
                    experiment: format!("{}/{}", r.id, row.experiment),
                    ..row.clone()
                })
            })
            .collect()
    }
}

/// Config directory from [`CONFIG_DIR_ENV`], or `./configs`.
pub fn default_config_dir() -> PathBuf {
    std::env::var_os(CONFIG_DIR_ENV)
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from("configs"))
}

/// Options for [`verify_all`].
#[derive(Debug, Clone, Default)]
pub struct SuiteOptions {
    /// Criterion ids to run; empty runs all ten.
    pub only: Vec<String>,
    /// Where experiment artifacts go; `None` keeps everything in memory.
    pub output_root: Option<PathBuf>,
    pub force: bool,
}

/// Job key: config name and refinement factor.
type Job = (&'static str, usize);

#[derive(Debug, Clone)]
struct JobResult {
    analyses: std::result::Result<Vec<AnalysisOutcome>, String>,
    elapsed: Duration,
}

fn selected(only: &[String]) -> Result<Vec<&'static Criterion>> {
    if only.is_empty() {
        return Ok(CRITERIA.iter().collect());
    }
    let mut out = Vec::new();
    for id in only.iter().flat_map(|s| s.split(',')).filter(|s| !s.trim().is_empty()) {
        let c = criterion(id).ok_or_else(|| {
            let ids: Vec<&str> = CRITERIA.iter().map(|c| c.id).collect();
            Error::InvalidArgument(format!("unknown criterion `{id}` (expected one of {})", ids.join(", ")))
        })?;
        if !out.iter().any(|o: &&Criterion| o.id == c.id) {
            out.push(c);
        }
    }
    // Keep declaration order regardless of how the filter was written.
    out.sort_by_key(|c| CRITERIA.iter().position(|d| d.id == c.id));
    Ok(out)
}

fn config_path(dir: &Path, name: &str) -> PathBuf {
    dir.join(format!("{name}.conf"))
}

fn run_job(config: &ExperimentConfig, opts: &SuiteOptions) -> Result<Vec<AnalysisOutcome>> {
    match &opts.output_root {
        Some(root) => Ok(run_experiment(config, root, opts.force)?.analyses),
        None => Ok(evaluate(config)?.1),
    }
}

/// Runs the selected criteria over the configs in `config_dir`.
///
/// Fails only when the suite cannot start (missing directory or config,
/// unknown criterion, existing output without `force`); experiment failures
/// are reported per criterion.
pub fn verify_all(config_dir: &Path, opts: &SuiteOptions) -> Result<SuiteSummary> {
    if !config_dir.is_dir() {
        return Err(Error::config(
            config_dir.display().to_string(),
            "configuration directory not found",
        ));
    }
    let criteria = selected(&opts.only)?;

    let mut jobs: Vec<Job> = Vec::new();
    for c in &criteria {
        for s in c.sources {
            if !jobs.contains(&(s.config, 1)) {
                jobs.push((s.config, 1));
            }
        }
        if let Some(r) = c.refinement {
            for job in [(r.config, 1), (r.config, r.factor)] {
                if !jobs.contains(&job) {
                    jobs.push(job);
                }
            }
        }
    }

    let mut configs = BTreeMap::new();
    for &(name, factor) in &jobs {
        let path = config_path(config_dir, name);
        if !path.is_file() {
            return Err(Error::config(path.display().to_string(), "bundled config not found"));
        }
        let base = ExperimentConfig::load(&path)?;
        let config = if factor == 1 {
            base
        } else {
            let mut c = base.refined(factor);
            c.name = format!("{name}-x{factor}");
            c.output_dir = c.output_dir.map(|d| d.with_file_name(&c.name));
            c
        };
        configs.insert((name, factor), config);
    }
    if let Some(root) = &opts.output_root {
        // Refuse up front rather than after the long runs.
        for config in configs.values() {
            let dir = config.output_dir.clone().unwrap_or_else(|| root.join(&config.name));
            if dir.exists() && !opts.force && std::fs::read_dir(&dir)?.next().is_some() {
                return Err(Error::OutputExists(dir.display().to_string()));
            }
        }
        for config in configs.values() {
            let dir = config.output_dir.clone().unwrap_or_else(|| root.join(&config.name));
            prepare_dir(&dir, true)?;
        }
    }

    let results: BTreeMap<Job, JobResult> = thread::scope(|scope| {
        let handles: Vec<_> = configs
            .iter()
            .map(|(&job, config)| {
                let handle = scope.spawn(move || {
                    let start = Instant::now();
                    let analyses = run_job(config, opts).map_err(|e| format!("{}: {e}", config.name));
                    JobResult {
                        analyses,
                        elapsed: start.elapsed(),
                    }
                });
                (job, handle)
            })
            .collect();
        handles
            .into_iter()
            .map(|(job, h)| {
                let r = h.join().unwrap_or_else(|_| JobResult {
                    analyses: Err(format!("{}: experiment panicked", job.0)),
                    elapsed: Duration::ZERO,
                });
                (job, r)
            })
            .collect()
    });

    let results = criteria
        .iter()
        .map(|c| assemble(c, &results))
        .collect();
    Ok(SuiteSummary { results })
}

fn assemble(c: &Criterion, jobs: &BTreeMap<Job, JobResult>) -> CriterionResult {
    let mut rows = Vec::new();
    let mut errors = Vec::new();
    let mut elapsed = Duration::ZERO;
    let mut seen = Vec::new();
    let mut account = |job: Job, elapsed: &mut Duration| {
        if !seen.contains(&job) {
            seen.push(job);
            *elapsed += jobs[&job].elapsed;
        }
    };
    for s in c.sources {
        let job = jobs.get(&(s.config, 1)).expect("every source was scheduled");
        account((s.config, 1), &mut elapsed);
        match &job.analyses {
            Ok(analyses) => {
                let picked: Vec<&AnalysisOutcome> = analyses
                    .iter()
                    .filter(|a| s.analyses.is_empty() || s.analyses.contains(&a.name))
                    .collect();
                if picked.is_empty() {
                    errors.push(format!("{} ran none of {:?}", s.config, s.analyses));
                }
                rows.extend(picked.into_iter().flat_map(|a| a.rows.clone()));
            }
            Err(e) => errors.push(e.clone()),
        }
    }
    if let Some(r) = c.refinement {
        account((r.config, r.factor), &mut elapsed);
        let measure = |job: Job| -> std::result::Result<f64, String> {
            let analyses = jobs[&job].analyses.as_ref().map_err(|e| e.clone())?;
            analyses
                .iter()
                .filter(|a| a.name == r.analysis)
                .flat_map(|a| a.rows.iter())
                .find(|row| row.quantity == r.quantity)
                .map(|row| row.measured)
                .ok_or_else(|| format!("{} reported no {}", r.config, r.quantity))
        };
        match (measure((r.config, 1)), measure((r.config, r.factor))) {
            (Ok(coarse), Ok(fine)) => {
                let ratio = refinement_ratio(coarse, fine);
                rows.push(SummaryRow::new(
                    r.config,
                    &format!("{}_refinement_ratio", r.quantity),
                    format!("<= {}", r.max_ratio),
                    ratio,
                    format!("nx x{}", r.factor),
                    ratio <= r.max_ratio,
                ));
            }
            (a, b) => {
                // A failed fine run has already been reported above for the coarse one.
                if let Err(e) = b {
                    errors.push(e);
                } else if let Err(e) = a {
                    if !errors.contains(&e) {
                        errors.push(e);
                    }
                }
            }
        }
    }
    CriterionResult {
        id: c.id,
        title: c.title,
        rows,
        error: if errors.is_empty() { None } else { Some(errors.join("; ")) },
        elapsed,
        budget: Duration::from_secs_f64(c.budget_secs),
    }
}

/// `max(a, b) / min(a, b)`; two zeros count as unchanged.
pub fn refinement_ratio(a: f64, b: f64) -> f64 {
    if a == b {
        return 1.0;
    }
    let (lo, hi) = if a < b { (a, b) } else { (b, a) };
    if lo > 0.0 {
        hi / lo
    } else {
        f64::INFINITY
    }
}

/// Writes the suite rows to `path` as a summary CSV.
pub fn write_suite_csv(summary: &SuiteSummary, path: &Path) -> Result<()> {
    write_summary_csv(std::fs::File::create(path)?, &summary.rows())?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn criteria_ids_are_unique_and_ordered() {
        for (i, c) in CRITERIA.iter().enumerate() {
            assert_eq!(c.id, format!("C{}", i + 1));
        }
        assert_eq!(criterion("c10").unwrap().id, "C10");
        assert!(criterion("C11").is_none());
    }

    #[test]
    fn filter_keeps_declaration_order() {
        let picked = selected(&["c7,C2".to_string(), "c2".to_string()]).unwrap();
        let ids: Vec<&str> = picked.iter().map(|c| c.id).collect();
        assert_eq!(ids, ["C2", "C7"]);
        assert!(selected(&["C0".into()]).is_err());
    }

    #[test]
    fn refinement_ratio_is_symmetric() {
        assert_eq!(refinement_ratio(2.0, 4.0), 2.0);
        assert_eq!(refinement_ratio(4.0, 2.0), 2.0);
        assert_eq!(refinement_ratio(0.0, 0.0), 1.0);
        assert!(refinement_ratio(0.0, 1.0).is_infinite());
    }

    #[test]
    fn missing_config_dir_names_the_path() {
        let err = verify_all(Path::new("/nonexistent/deadcore-configs"), &SuiteOptions::default()).unwrap_err();
        assert!(err.to_string().contains("/nonexistent/deadcore-configs"), "{err}");
    }
}
