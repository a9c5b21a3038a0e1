//! Parameter sweeps over `(J, Jp, T)` with per-point root counts, free
//! energies and entropies, written as CSV or JSON.

use std::fmt;
use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::Path;
use std::str::FromStr;

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::ModelParams;
use crate::solver;
use crate::thermo;

pub const MAX_POINTS: usize = 10_000_000;

pub const CSV_HEADER: &str = "J,Jp,T,beta,c,d,n_roots,u1,u2,u3,F1,F2,F3,S1,S2,S3,transition,prop51_agree";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum Axis {
    J,
    Jp,
    T,
}

impl FromStr for Axis {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "J" => Ok(Axis::J),
            "Jp" => Ok(Axis::Jp),
            "T" => Ok(Axis::T),
            _ => Err(Error::InvalidGrid(format!("unknown axis `{s}` (expected J, Jp or T)"))),
        }
    }
}

impl fmt::Display for Axis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Axis::J => "J",
            Axis::Jp => "Jp",
            Axis::T => "T",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AxisSpec {
    pub axis: Axis,
    pub min: f64,
    pub max: f64,
    pub steps: usize,
}

impl AxisSpec {
    pub fn new(axis: Axis, min: f64, max: f64, steps: usize) -> Result<Self> {
        let spec = AxisSpec { axis, min, max, steps };
        spec.validate()?;
        Ok(spec)
    }

    fn validate(&self) -> Result<()> {
        if self.steps == 0 {
            return Err(Error::InvalidGrid(format!("axis {} needs at least one step", self.axis)));
        }
        if !self.min.is_finite() || !self.max.is_finite() || self.min > self.max {
            return Err(Error::InvalidGrid(format!(
                "axis {} needs finite min <= max, got {}:{}",
                self.axis, self.min, self.max
            )));
        }
        if self.axis == Axis::T && self.min <= 0.0 {
            return Err(Error::InvalidGrid("temperature axis must be strictly positive".into()));
        }
        Ok(())
    }

    pub fn value(&self, i: usize) -> f64 {
        if self.steps == 1 {
            self.min
        } else {
            self.min + (self.max - self.min) * i as f64 / (self.steps - 1) as f64
        }
    }
}

/// Parses `J=a:b:n`.
impl FromStr for AxisSpec {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::InvalidGrid(format!("axis spec `{s}` must look like NAME=min:max:steps"));
        let (name, range) = s.split_once('=').ok_or_else(bad)?;
        let parts: Vec<&str> = range.split(':').collect();
        if parts.len() != 3 {
            return Err(bad());
        }
        let min = parts[0].trim().parse::<f64>().map_err(|_| bad())?;
        let max = parts[1].trim().parse::<f64>().map_err(|_| bad())?;
        let steps = parts[2].trim().parse::<usize>().map_err(|_| bad())?;
        AxisSpec::new(name.trim().parse()?, min, max, steps)
    }
}

/// Swept axes (first axis varies slowest); anything not swept is taken from
/// the base parameters passed to [`run_scan`].
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScanGrid {
    pub axes: Vec<AxisSpec>,
}

impl ScanGrid {
    pub fn new(axes: Vec<AxisSpec>) -> Result<Self> {
        for (i, a) in axes.iter().enumerate() {
            a.validate()?;
            if axes[..i].iter().any(|b| b.axis == a.axis) {
                return Err(Error::InvalidGrid(format!("axis {} given twice", a.axis)));
            }
        }
        Ok(ScanGrid { axes })
    }

    /// Number of cells; `None` on overflow.
    pub fn len(&self) -> Option<usize> {
        self.axes.iter().try_fold(1usize, |acc, a| acc.checked_mul(a.steps))
    }

    pub fn is_empty(&self) -> bool {
        self.len() == Some(0)
    }

    fn params_at(&self, mut index: usize, base: &ModelParams) -> ModelParams {
        let mut p = *base;
        for a in self.axes.iter().rev() {
            let v = a.value(index % a.steps);
            index /= a.steps;
            match a.axis {
                Axis::J => p.j = v,
                Axis::Jp => p.jp = v,
                Axis::T => p.t = v,
            }
        }
        p
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PhasePoint {
    #[serde(rename = "J")]
    pub j: f64,
    #[serde(rename = "Jp")]
    pub jp: f64,
    #[serde(rename = "T")]
    pub t: f64,
    pub beta: f64,
    pub c: f64,
    pub d: f64,
    pub n_roots: usize,
    /// Ascending.
    pub roots: Vec<f64>,
    /// `βJp > ln(3)/2`.
    pub transition_flag: bool,
    #[serde(rename = "F")]
    pub f: Vec<f64>,
    #[serde(rename = "S")]
    pub s: Vec<f64>,
    /// `None` when the count criterion does not apply (`k != 2`).
    pub prop51_agree: Option<bool>,
}

pub fn transition_flag(params: &ModelParams) -> bool {
    params.beta() * params.jp > 0.5 * 3f64.ln()
}

/// Solves one grid cell.
pub fn phase_point(params: &ModelParams) -> Result<PhasePoint> {
    params.validate()?;
    let w = params.weights();
    let set = solver::solve_ti_symmetric(params)?;
    let mut f = Vec::with_capacity(set.count());
    let mut s = Vec::with_capacity(set.count());
    for r in &set.roots {
        f.push(thermo::free_energy_ti(params, r.h));
        s.push(thermo::entropy_ti(params, r.h)?.numeric);
    }
    let prop51_agree = (params.k == 2).then(|| solver::literal_count_prediction(w.c, w.d).admits(set.count()));
    Ok(PhasePoint {
        j: params.j,
        jp: params.jp,
        t: params.t,
        beta: w.beta,
        c: w.c,
        d: w.d,
        n_roots: set.count(),
        roots: set.values(),
        transition_flag: transition_flag(params),
        f,
        s,
        prop51_agree,
    })
}

/// One [`PhasePoint`] per grid cell in row-major order. Cells are solved in
/// parallel; the output order does not depend on scheduling.
pub fn run_scan(grid: &ScanGrid, base: &ModelParams) -> Result<Vec<PhasePoint>> {
    let n = grid
        .len()
        .filter(|&n| n <= MAX_POINTS)
        .ok_or_else(|| Error::InvalidGrid(format!("grid exceeds {MAX_POINTS} points")))?;
    (0..n)
        .into_par_iter()
        .map(|i| phase_point(&grid.params_at(i, base)))
        .collect()
}

/// Rounds to `digits` significant digits (at least one).
pub fn round_sig(x: f64, digits: usize) -> f64 {
    if !x.is_finite() || x == 0.0 {
        return x;
    }
    format!("{:.*e}", digits.max(1) - 1, x).parse().unwrap_or(x)
}

/// Shortest decimal form of `x` rounded to `digits` significant digits.
pub fn format_number(x: f64, digits: usize) -> String {
    format!("{:?}", round_sig(x, digits))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OutputFormat {
    Csv,
    Json,
}

impl FromStr for OutputFormat {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "csv" => Ok(OutputFormat::Csv),
            "json" => Ok(OutputFormat::Json),
            _ => Err(Error::InvalidGrid(format!("unknown output format `{s}`"))),
        }
    }
}

/// Flat row with the published column names.
#[derive(Serialize)]
struct Row {
    #[serde(rename = "J")]
    j: f64,
    #[serde(rename = "Jp")]
    jp: f64,
    #[serde(rename = "T")]
    t: f64,
    beta: f64,
    c: f64,
    d: f64,
    n_roots: usize,
    u1: Option<f64>,
    u2: Option<f64>,
    u3: Option<f64>,
    #[serde(rename = "F1")]
    f1: Option<f64>,
    #[serde(rename = "F2")]
    f2: Option<f64>,
    #[serde(rename = "F3")]
    f3: Option<f64>,
    #[serde(rename = "S1")]
    s1: Option<f64>,
    #[serde(rename = "S2")]
    s2: Option<f64>,
    #[serde(rename = "S3")]
    s3: Option<f64>,
    transition: bool,
    prop51_agree: Option<bool>,
}

impl Row {
    fn new(p: &PhasePoint, digits: usize) -> Self {
        let r = |x: f64| round_sig(x, digits);
        let at = |v: &[f64], i: usize| v.get(i).copied().map(r);
        Row {
            j: r(p.j),
            jp: r(p.jp),
            t: r(p.t),
            beta: r(p.beta),
            c: r(p.c),
            d: r(p.d),
            n_roots: p.n_roots,
            u1: at(&p.roots, 0),
            u2: at(&p.roots, 1),
            u3: at(&p.roots, 2),
            f1: at(&p.f, 0),
            f2: at(&p.f, 1),
            f3: at(&p.f, 2),
            s1: at(&p.s, 0),
            s2: at(&p.s, 1),
            s3: at(&p.s, 2),
            transition: p.transition_flag,
            prop51_agree: p.prop51_agree,
        }
    }

    fn csv(&self) -> String {
        let num = |x: f64| format!("{x:?}");
        let opt = |x: Option<f64>| x.map(num).unwrap_or_default();
        [
            num(self.j),
            num(self.jp),
            num(self.t),
            num(self.beta),
            num(self.c),
            num(self.d),
            self.n_roots.to_string(),
            opt(self.u1),
            opt(self.u2),
            opt(self.u3),
            opt(self.f1),
            opt(self.f2),
            opt(self.f3),
            opt(self.s1),
            opt(self.s2),
            opt(self.s3),
            self.transition.to_string(),
            self.prop51_agree.map(|b| b.to_string()).unwrap_or_default(),
        ]
        .join(",")
    }
}

pub fn write_points<W: Write>(points: &[PhasePoint], format: OutputFormat, digits: usize, mut out: W) -> io::Result<()> {
    match format {
        OutputFormat::Csv => {
            writeln!(out, "{CSV_HEADER}")?;
            for p in points {
                writeln!(out, "{}", Row::new(p, digits).csv())?;
            }
        }
        OutputFormat::Json => {
            let rows: Vec<Row> = points.iter().map(|p| Row::new(p, digits)).collect();
            serde_json::to_writer_pretty(&mut out, &rows)?;
            writeln!(out)?;
        }
    }
    out.flush()
}

/// Writes to `path`, or to stdout when `path` is `None` or `-`.
pub fn emit(points: &[PhasePoint], format: OutputFormat, path: Option<&Path>, digits: usize) -> Result<()> {
    match path {
        Some(p) if p != Path::new("-") => {
            let file = File::create(p).map_err(|e| Error::io(p, e))?;
            write_points(points, format, digits, BufWriter::new(file)).map_err(|e| Error::io(p, e))
        }
        _ => write_points(points, format, digits, io::stdout().lock()).map_err(|e| Error::io("<stdout>", e)),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn base() -> ModelParams {
        ModelParams::new(0.0, 0.0, 1.0, 2).unwrap()
    }

    fn csv(points: &[PhasePoint]) -> String {
        let mut buf = Vec::new();
        write_points(points, OutputFormat::Csv, 9, &mut buf).unwrap();
        String::from_utf8(buf).unwrap()
    }

    #[test]
    fn single_point_at_three_roots() {
        let grid = ScanGrid::new(vec![]).unwrap();
        let pts = run_scan(&grid, &ModelParams::new(-1.85, 4.5, 2.6, 2).unwrap()).unwrap();
        assert_eq!(pts.len(), 1);
        assert_eq!(pts[0].n_roots, 3);
        assert!(pts[0].transition_flag);
        assert!(pts[0].d > 3.0);
        let text = csv(&pts);
        assert_eq!(text.lines().count(), 2);
        assert_eq!(text.lines().next().unwrap(), CSV_HEADER);
        assert_eq!(text.lines().nth(1).unwrap().split(',').count(), 18);
    }

    #[test]
    fn empty_grid_writes_header_only() {
        let grid = ScanGrid::new(vec![AxisSpec::new(Axis::J, 0.0, 1.0, 1).unwrap()]).unwrap();
        assert_eq!(grid.len(), Some(1));
        assert_eq!(csv(&[]), format!("{CSV_HEADER}\n"));
    }

    #[test]
    fn json_has_published_fields() {
        let grid = ScanGrid::new(vec!["J=0:1:2".parse().unwrap(), "Jp=0:1:2".parse().unwrap()]).unwrap();
        let pts = run_scan(&grid, &base()).unwrap();
        let mut buf = Vec::new();
        write_points(&pts, OutputFormat::Json, 9, &mut buf).unwrap();
        let v: serde_json::Value = serde_json::from_slice(&buf).unwrap();
        let arr = v.as_array().unwrap();
        assert_eq!(arr.len(), 4);
        for obj in arr {
            let keys: Vec<&str> = obj.as_object().unwrap().keys().map(|s| s.as_str()).collect();
            let mut expected: Vec<&str> = CSV_HEADER.split(',').collect();
            expected.sort_unstable();
            let mut keys = keys;
            keys.sort_unstable();
            assert_eq!(keys, expected);
        }
        assert!(arr[0]["u2"].is_null());
    }

    #[test]
    fn row_major_order() {
        let grid = ScanGrid::new(vec!["J=0:1:2".parse().unwrap(), "Jp=0:2:3".parse().unwrap()]).unwrap();
        let pts = run_scan(&grid, &base()).unwrap();
        let coords: Vec<(f64, f64)> = pts.iter().map(|p| (p.j, p.jp)).collect();
        assert_eq!(
            coords,
            vec![(0.0, 0.0), (0.0, 1.0), (0.0, 2.0), (1.0, 0.0), (1.0, 1.0), (1.0, 2.0)]
        );
    }

    #[test]
    fn deterministic_output() {
        let grid = ScanGrid::new(vec!["Jp=0:2:200".parse().unwrap(), "T=0.5:3:5".parse().unwrap()]).unwrap();
        let base = ModelParams::new(-0.3, 0.0, 1.0, 2).unwrap();
        assert_eq!(csv(&run_scan(&grid, &base).unwrap()), csv(&run_scan(&grid, &base).unwrap()));
    }

    #[test]
    fn flag_flips_at_threshold() {
        let crit = 0.5 * 3f64.ln();
        let below = phase_point(&ModelParams::new(0.0, crit - 1e-9, 1.0, 2).unwrap()).unwrap();
        let above = phase_point(&ModelParams::new(0.0, crit + 1e-9, 1.0, 2).unwrap()).unwrap();
        assert!(!below.transition_flag && above.transition_flag);
        assert_eq!(below.d > 3.0, below.transition_flag);
        assert_eq!(above.d > 3.0, above.transition_flag);
    }

    #[test]
    fn free_line_has_unit_root() {
        let grid = ScanGrid::new(vec!["T=0.1:10:50".parse().unwrap()]).unwrap();
        for p in run_scan(&grid, &base()).unwrap() {
            assert_eq!(p.n_roots, 1);
            assert!((p.roots[0] - 1.0).abs() < 1e-12, "{p:?}");
            assert!(!p.transition_flag);
        }
    }

    #[test]
    fn rejects_bad_grids() {
        assert!("T=0:1:3".parse::<AxisSpec>().is_err());
        assert!("J=1:0:3".parse::<AxisSpec>().is_err());
        assert!("J=0:1:0".parse::<AxisSpec>().is_err());
        assert!("K=0:1:3".parse::<AxisSpec>().is_err());
        assert!("J=0:1".parse::<AxisSpec>().is_err());
        let j: AxisSpec = "J=0:1:2".parse().unwrap();
        assert!(ScanGrid::new(vec![j, j]).is_err());
        let huge = ScanGrid::new(vec![
            "J=0:1:10000".parse().unwrap(),
            "Jp=0:1:10000".parse().unwrap(),
        ])
        .unwrap();
        assert!(matches!(run_scan(&huge, &base()), Err(Error::InvalidGrid(_))));
    }

    #[test]
    fn number_formatting() {
        assert_eq!(format_number(4.866231234567, 6), "4.86623");
        assert_eq!(format_number(1.0, 9), "1.0");
        assert_eq!(format_number(-0.000123456789, 3), "-0.000123");
        assert_eq!(round_sig(0.0, 9), 0.0);
    }
}
