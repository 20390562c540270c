//! Grids, boundary traces and stored space-time grid functions.

use std::fmt::Write as _;
use std::fs;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exact::ClosedForm;
use crate::params::ProblemParams;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Geometry {
    Interval { xl: f64, xr: f64 },
    /// Radially symmetric ball of the given radius; the dimension is taken from the params.
    Radial { radius: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub geometry: Geometry,
    /// Cell count; nodes are `0..=nx`.
    pub nx: usize,
    pub t_end: f64,
    pub cfl_sigma: f64,
    pub snapshot_every: f64,
    /// Optional cap on the adaptive time step.
    #[serde(default)]
    pub dt_max: Option<f64>,
}

pub const DEFAULT_CFL_SIGMA: f64 = 0.4;
pub const MIN_CELLS: usize = 16;

impl GridSpec {
    pub fn interval(xl: f64, xr: f64, nx: usize, t_end: f64, snapshot_every: f64) -> Self {
        Self {
            geometry: Geometry::Interval { xl, xr },
            nx,
            t_end,
            cfl_sigma: DEFAULT_CFL_SIGMA,
            snapshot_every,
            dt_max: None,
        }
    }

    pub fn radial(radius: f64, nx: usize, t_end: f64, snapshot_every: f64) -> Self {
        Self {
            geometry: Geometry::Radial { radius },
            nx,
            t_end,
            cfl_sigma: DEFAULT_CFL_SIGMA,
            snapshot_every,
            dt_max: None,
        }
    }

    pub fn with_cfl(mut self, sigma: f64) -> Self {
        self.cfl_sigma = sigma;
        self
    }

    pub fn with_dt_max(mut self, dt_max: f64) -> Self {
        self.dt_max = Some(dt_max);
        self
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidArgument(m));
        if self.nx < MIN_CELLS {
            return bad(format!("nx = {} must be at least {MIN_CELLS}", self.nx));
        }
        match self.geometry {
            Geometry::Interval { xl, xr } if !(xr > xl && xl.is_finite() && xr.is_finite()) => {
                return bad(format!("interval [{xl}, {xr}] is empty"));
            }
            Geometry::Radial { radius } if !(radius > 0.0 && radius.is_finite()) => {
                return bad(format!("radius {radius} must be positive"));
            }
            _ => {}
        }
        if !(self.t_end >= 0.0 && self.t_end.is_finite()) {
            return bad(format!("t_end = {} must be >= 0", self.t_end));
        }
        if !(self.cfl_sigma > 0.0 && self.cfl_sigma.is_finite()) {
            return bad(format!("cfl_sigma = {} must be positive", self.cfl_sigma));
        }
        if !(self.snapshot_every > 0.0) {
            return bad(format!("snapshot_every = {} must be positive", self.snapshot_every));
        }
        if let Some(cap) = self.dt_max {
            if !(cap > 0.0) {
                return bad(format!("dt_max = {cap} must be positive"));
            }
        }
        Ok(())
    }

    /// True when `cfl_sigma` lies in the monotone range `(0, 1/2]`.
    pub fn cfl_is_monotone(&self) -> bool {
        self.cfl_sigma > 0.0 && self.cfl_sigma <= 0.5
    }

    pub fn left(&self) -> f64 {
        match self.geometry {
            Geometry::Interval { xl, .. } => xl,
            Geometry::Radial { .. } => 0.0,
        }
    }

    pub fn right(&self) -> f64 {
        match self.geometry {
            Geometry::Interval { xr, .. } => xr,
            Geometry::Radial { radius } => radius,
        }
    }

    pub fn dx(&self) -> f64 {
        (self.right() - self.left()) / self.nx as f64
    }

    pub fn node(&self, i: usize) -> f64 {
        if i == self.nx {
            self.right()
        } else {
            self.left() + i as f64 * self.dx()
        }
    }

    pub fn nodes(&self) -> Vec<f64> {
        (0..=self.nx).map(|i| self.node(i)).collect()
    }

    pub fn is_radial(&self) -> bool {
        matches!(self.geometry, Geometry::Radial { .. })
    }

    /// Snapshot schedule `0, Δ, 2Δ, …` closed by `t_end`.
    pub fn snapshot_times(&self) -> Vec<f64> {
        let mut times = vec![0.0];
        let mut k = 1u64;
        loop {
            let t = k as f64 * self.snapshot_every;
            if t >= self.t_end * (1.0 - 1e-12) {
                break;
            }
            times.push(t);
            k += 1;
        }
        if self.t_end > 0.0 {
            times.push(self.t_end);
        }
        times
    }
}

/// Dirichlet datum `g(t)` at one end of the domain.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Trace {
    Constant { value: f64 },
    /// `scale · form(x_end, t + time_shift)`.
    Exact {
        form: ClosedForm,
        scale: f64,
        time_shift: f64,
    },
}

impl Trace {
    pub fn constant(value: f64) -> Self {
        Trace::Constant { value }
    }

    pub fn exact(form: ClosedForm) -> Self {
        Trace::Exact {
            form,
            scale: 1.0,
            time_shift: 0.0,
        }
    }

    pub fn value(&self, x_end: f64, t: f64) -> Result<f64> {
        match self {
            Trace::Constant { value } => Ok(*value),
            Trace::Exact {
                form,
                scale,
                time_shift,
            } => Ok(scale * form.evaluate(&embed(x_end, form.params.dim), t + time_shift)?),
        }
    }
}

/// Dirichlet traces at both ends; radial grids ignore `left` (symmetry at r = 0).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundaryData {
    pub left: Trace,
    pub right: Trace,
}

impl BoundaryData {
    pub fn constant(left: f64, right: f64) -> Self {
        Self {
            left: Trace::constant(left),
            right: Trace::constant(right),
        }
    }

    pub fn both(trace: Trace) -> Self {
        Self {
            left: trace.clone(),
            right: trace,
        }
    }

    pub fn zero() -> Self {
        Self::constant(0.0, 0.0)
    }
}

/// Embeds a scalar coordinate as the point `(x, 0, …, 0)` of `R^dim`.
pub fn embed(x: f64, dim: usize) -> Vec<f64> {
    let mut point = vec![0.0; dim.max(1)];
    point[0] = x;
    point
}

/// A grid function `u(x_i, t_n)` with stored time slices.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpaceTimeField {
    pub grid: GridSpec,
    pub params: ProblemParams,
    pub boundary: BoundaryData,
    pub times: Vec<f64>,
    #[serde(skip)]
    pub slices: Vec<Vec<f64>>,
}

impl SpaceTimeField {
    /// Samples a closed form on the grid nodes at the given times.
    ///
    /// Radial grids sample along the ray `(r, 0, …, 0)`.
    pub fn from_closed_form(cf: &ClosedForm, grid: GridSpec, times: Vec<f64>) -> Result<Self> {
        grid.validate()?;
        if times.is_empty() || times.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidArgument(
                "sample times must be non-empty and strictly increasing".into(),
            ));
        }
        if !grid.is_radial() && cf.params.dim != 1 {
            return Err(Error::InvalidArgument(
                "interval grids need a one-dimensional form".into(),
            ));
        }
        let nodes = grid.nodes();
        let mut slices = Vec::with_capacity(times.len());
        for &t in &times {
            let slice = nodes
                .iter()
                .map(|&x| cf.evaluate(&embed(x, cf.params.dim), t))
                .collect::<Result<Vec<_>>>()?;
            slices.push(slice);
        }
        let boundary = BoundaryData::both(Trace::exact(cf.clone()));
        Ok(Self {
            grid,
            params: cf.params.clone(),
            boundary,
            times,
            slices,
        })
    }

    /// Field whose every slice is the same array of node values.
    pub fn from_slices(
        grid: GridSpec,
        params: ProblemParams,
        boundary: BoundaryData,
        times: Vec<f64>,
        slices: Vec<Vec<f64>>,
    ) -> Result<Self> {
        if times.len() != slices.len() || times.is_empty() {
            return Err(Error::InvalidArgument("times and slices disagree".into()));
        }
        if slices.iter().any(|s| s.len() != grid.nx + 1) {
            return Err(Error::InvalidArgument(format!(
                "every slice must have {} nodes",
                grid.nx + 1
            )));
        }
        Ok(Self {
            grid,
            params,
            boundary,
            times,
            slices,
        })
    }

    pub fn nx(&self) -> usize {
        self.grid.nx
    }

    pub fn dx(&self) -> f64 {
        self.grid.dx()
    }

    pub fn x(&self, i: usize) -> f64 {
        self.grid.node(i)
    }

    pub fn last(&self) -> &[f64] {
        &self.slices[self.slices.len() - 1]
    }

    pub fn sup_norm(&self) -> f64 {
        self.slices
            .iter()
            .flatten()
            .fold(0.0f64, |m, &v| m.max(v.abs()))
    }

    /// Coordinate span usable by probes. Radial fields are reflected to `[−R, R]`.
    pub fn span(&self) -> (f64, f64) {
        if self.grid.is_radial() {
            (-self.grid.right(), self.grid.right())
        } else {
            (self.grid.left(), self.grid.right())
        }
    }

    /// Maps a probe coordinate to the stored coordinate (`|x|` on radial grids).
    pub fn stored_coordinate(&self, x: f64) -> f64 {
        if self.grid.is_radial() {
            x.abs()
        } else {
            x
        }
    }

    /// Node indices `i` with `|x_i − center| ≤ radius`, in probe coordinates.
    ///
    /// On radial grids the returned pairs carry the reflected coordinate.
    pub fn nodes_in_ball(&self, center: f64, radius: f64) -> Vec<(usize, f64)> {
        let tol = 1e-12 * radius.max(self.dx());
        let mut out = Vec::new();
        for i in 0..=self.nx() {
            let x = self.x(i);
            if (x - center).abs() <= radius + tol {
                out.push((i, x));
            }
            if self.grid.is_radial() && i > 0 && (-x - center).abs() <= radius + tol {
                out.push((i, -x));
            }
        }
        out
    }

    /// Linear interpolation of snapshot `k` at probe coordinate `x`.
    pub fn interp_x(&self, k: usize, x: f64) -> Result<f64> {
        let s = self.stored_coordinate(x);
        let (lo, hi) = (self.grid.left(), self.grid.right());
        let tol = 1e-12 * (hi - lo);
        if s < lo - tol || s > hi + tol {
            return Err(Error::OutsideHistory(format!(
                "x = {x} outside stored span [{lo}, {hi}]"
            )));
        }
        let pos = ((s - lo) / self.dx()).clamp(0.0, self.nx() as f64);
        let i = (pos.floor() as usize).min(self.nx() - 1);
        let w = pos - i as f64;
        let slice = &self.slices[k];
        if w == 0.0 {
            return Ok(slice[i]);
        }
        if w == 1.0 {
            return Ok(slice[i + 1]);
        }
        Ok(slice[i] * (1.0 - w) + slice[i + 1] * w)
    }

    /// Bilinear interpolation in `(x, t)`.
    pub fn value_at(&self, x: f64, t: f64) -> Result<f64> {
        let first = self.times[0];
        let last = *self.times.last().unwrap();
        let tol = 1e-12 * (last - first).abs().max(1.0);
        if t < first - tol || t > last + tol {
            return Err(Error::OutsideHistory(format!(
                "t = {t} outside stored history [{first}, {last}]"
            )));
        }
        let k = self.times.partition_point(|&s| s <= t + tol);
        let k = k.saturating_sub(1).min(self.times.len() - 1);
        if (self.times[k] - t).abs() <= tol || k + 1 == self.times.len() {
            return self.interp_x(k, x);
        }
        let (t0, t1) = (self.times[k], self.times[k + 1]);
        let w = (t - t0) / (t1 - t0);
        let a = self.interp_x(k, x)?;
        let b = self.interp_x(k + 1, x)?;
        Ok(a * (1.0 - w) + b * w)
    }

    /// Indices of snapshots with `t_lo ≤ t ≤ t_hi`, or an error if the window
    /// extends beyond the stored history.
    pub fn snapshots_in(&self, t_lo: f64, t_hi: f64) -> Result<Vec<usize>> {
        let first = self.times[0];
        let last = *self.times.last().unwrap();
        let tol = 1e-9 * (last - first).abs().max(1e-300) + 1e-14;
        if t_lo < first - tol || t_hi > last + tol {
            return Err(Error::OutsideHistory(format!(
                "time window [{t_lo}, {t_hi}] exceeds stored history [{first}, {last}]"
            )));
        }
        Ok((0..self.times.len())
            .filter(|&k| self.times[k] >= t_lo - tol && self.times[k] <= t_hi + tol)
            .collect())
    }

    /// Index of the snapshot nearest to `t`.
    pub fn nearest_snapshot(&self, t: f64) -> usize {
        let mut best = 0;
        for k in 1..self.times.len() {
            if (self.times[k] - t).abs() < (self.times[best] - t).abs() {
                best = k;
            }
        }
        best
    }

    /// Writes `t,x,u` rows in time-outer order with 17 significant digits.
    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut out = BufWriter::new(fs::File::create(path)?);
        writeln!(out, "t,x,u")?;
        let nodes = self.grid.nodes();
        let mut line = String::new();
        for (t, slice) in self.times.iter().zip(&self.slices) {
            for (x, u) in nodes.iter().zip(slice) {
                line.clear();
                write!(line, "{t:.16e},{x:.16e},{u:.16e}").unwrap();
                writeln!(out, "{line}")?;
            }
        }
        out.flush()?;
        Ok(())
    }

    /// Writes the metadata (grid, params, boundary, times) as JSON.
    pub fn write_meta(&self, path: &Path) -> Result<()> {
        fs::write(path, serde_json::to_string_pretty(self)?)?;
        Ok(())
    }

    /// Reloads a field written by [`write_meta`](Self::write_meta) and
    /// [`write_csv`](Self::write_csv).
    pub fn read(meta: &Path, csv: &Path) -> Result<Self> {
        let mut field: SpaceTimeField = serde_json::from_str(&fs::read_to_string(meta)?)?;
        let n = field.grid.nx + 1;
        let reader = BufReader::new(fs::File::open(csv)?);
        let mut values = Vec::with_capacity(n * field.times.len());
        for (lineno, line) in reader.lines().enumerate() {
            let line = line?;
            if lineno == 0 {
                if line.trim() != "t,x,u" {
                    return Err(Error::InvalidArgument(format!("unexpected CSV header `{line}`")));
                }
                continue;
            }
            let u = line
                .rsplit(',')
                .next()
                .and_then(|s| s.trim().parse::<f64>().ok())
                .ok_or_else(|| {
                    Error::InvalidArgument(format!("malformed CSV row {}: `{line}`", lineno + 1))
                })?;
            values.push(u);
        }
        if values.len() != n * field.times.len() {
            return Err(Error::InvalidArgument(format!(
                "CSV holds {} values, metadata expects {}",
                values.len(),
                n * field.times.len()
            )));
        }
        field.slices = values.chunks(n).map(|c| c.to_vec()).collect();
        Ok(field)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exact::Sign;

    fn halfspace_field() -> SpaceTimeField {
        let params = ProblemParams::new(2.0, 0.5, 1, 1.0).unwrap();
        let cf = ClosedForm::halfspace(params, 0, Sign::Plus).unwrap();
        SpaceTimeField::from_closed_form(
            &cf,
            GridSpec::interval(-1.0, 1.0, 64, 1.0, 0.5),
            vec![0.0, 0.5, 1.0],
        )
        .unwrap()
    }

    #[test]
    fn snapshot_schedule_hits_t_end() {
        let g = GridSpec::interval(0.0, 1.0, 16, 1.0, 0.3);
        assert_eq!(g.snapshot_times(), vec![0.0, 0.3, 0.6, 0.8999999999999999, 1.0]);
        let g = GridSpec::interval(0.0, 1.0, 16, 0.0, 0.3);
        assert_eq!(g.snapshot_times(), vec![0.0]);
    }

    #[test]
    fn grid_validation() {
        assert!(GridSpec::interval(0.0, 1.0, 8, 1.0, 0.1).validate().is_err());
        assert!(GridSpec::interval(1.0, 0.0, 16, 1.0, 0.1).validate().is_err());
        assert!(GridSpec::radial(1.0, 16, 1.0, 0.1).validate().is_ok());
        assert!(GridSpec::interval(0.0, 1.0, 16, 1.0, 0.1).with_cfl(0.0).validate().is_err());
    }

    #[test]
    fn interpolation_is_exact_at_nodes() {
        let f = halfspace_field();
        let x = f.x(48);
        assert_eq!(f.interp_x(1, x).unwrap(), f.slices[1][48]);
        assert_eq!(f.value_at(x, 0.25).unwrap(), f.slices[0][48]);
        assert!(f.value_at(x, 1.5).is_err());
        assert!(f.interp_x(0, 1.5).is_err());
    }

    #[test]
    fn csv_round_trip() {
        let f = halfspace_field();
        let dir = tempfile::tempdir().unwrap();
        let (meta, csv) = (dir.path().join("run.json"), dir.path().join("snapshots.csv"));
        f.write_meta(&meta).unwrap();
        f.write_csv(&csv).unwrap();
        let text = fs::read_to_string(&csv).unwrap();
        assert!(text.starts_with("t,x,u\n0.0000000000000000e0,-1.0000000000000000e0,"));
        let g = SpaceTimeField::read(&meta, &csv).unwrap();
        assert_eq!(f, g);
    }

    #[test]
    fn radial_balls_reflect() {
        let params = ProblemParams::new(2.0, 0.5, 2, 1.0).unwrap();
        let cf = ClosedForm::radial(params, vec![0.0, 0.0], 0.5).unwrap();
        let f = SpaceTimeField::from_closed_form(
            &cf,
            GridSpec::radial(1.0, 16, 0.0, 1.0),
            vec![0.0],
        )
        .unwrap();
        assert_eq!(f.span(), (-1.0, 1.0));
        let ball = f.nodes_in_ball(0.0, 0.125);
        let coords: Vec<f64> = ball.iter().map(|&(_, x)| x).collect();
        assert_eq!(coords, vec![0.0, 0.0625, -0.0625, 0.125, -0.125]);
        assert_eq!(f.interp_x(0, -0.75).unwrap(), f.interp_x(0, 0.75).unwrap());
    }
}
