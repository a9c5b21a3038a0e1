//! Translation-invariant solutions of the boundary-field recursion.
//!
//! Symmetric solutions `u1 = u2 = u3 = U` satisfy `U = A((BU + 1)/(U + B))^k`.
//! Under the restricted boundary condition `h_{++} = h_{-+} = h_{--} = h_{+-} = ln u`
//! one has `U = A u²`, and for `k = 2` the scalar `u` solves
//! `u = g(u) = (cd u² + 1)/(c u² + d)`, i.e. the cubic `c u³ - cd u² + d u - 1 = 0`.
//! Roots are reported in the scalar variable `u` (so `h = ln u`) together with `U`.

use rayon::prelude::*;
use serde::{Serialize, Serializer};

use crate::error::{Error, Result};
use crate::model::{ModelParams, ReducedWeights};
use crate::newton::{damped_newton, NewtonOptions};
use crate::poly::{Polynomial, RootOptions};
use crate::recursion::{xyz_rhs, xyz_rhs_raw};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Stability {
    Attracting,
    Repelling,
    Marginal,
}

/// Which symmetric fixed-point equation to solve for general `k`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SymmetricForm {
    /// `((z+1)/(z+B²))^k = z/(A B^{k+1})` with `z = BU`, derived from the TI system.
    #[default]
    Derived,
    /// `((z+1)/(z+B²))^k = (B^{k-1}/A) z`, the same equation with the
    /// alternative coefficient `B^{k-1}/A`; kept for comparison only.
    PrintedCoefficient,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TiRoot {
    /// Scalar root `u = e^h`.
    pub u: f64,
    pub h: f64,
    /// Symmetric u-triple entry `U = A u²`.
    #[serde(rename = "U")]
    pub big_u: f64,
    /// `|u - g(u)| / (1 + u)` for `k = 2`, otherwise `|U - f(U)| / (1 + U)` with
    /// `f(U) = A((BU+1)/(U+B))^k`.
    pub residual: f64,
    /// Scale-free `|ln U - ln f(U)|`.
    pub log_residual: f64,
    /// Derivative of the symmetric map at the root.
    pub slope: f64,
    pub stability: Stability,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SolutionSet {
    pub params: ModelParams,
    pub form: SymmetricForm,
    pub roots: Vec<TiRoot>,
    /// Independent Sturm count of distinct positive roots of the solved polynomial.
    pub sturm_count: usize,
}

impl SolutionSet {
    pub fn count(&self) -> usize {
        self.roots.len()
    }

    pub fn values(&self) -> Vec<f64> {
        self.roots.iter().map(|r| r.u).collect()
    }
}

/// Whether the polynomial `((1+x)/(B+x))^{m-1} = a x` can have three roots.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum PrestonRegime {
    /// One root for every `a > 0`.
    Unique,
    /// Three roots for `η1 < a < η2`, two at `a = η_i`, one otherwise.
    Three,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PrestonClassification {
    pub b: f64,
    pub m: u32,
    pub regime: PrestonRegime,
    pub eta1: Option<f64>,
    pub eta2: Option<f64>,
    pub x1: Option<f64>,
    pub x2: Option<f64>,
}

impl PrestonClassification {
    /// Predicted number of nonnegative roots for a given `a`; within a
    /// relative `band` of `η_i` the count is 2.
    pub fn count_for(&self, a: f64, band: f64) -> usize {
        match (self.regime, self.eta1, self.eta2) {
            (PrestonRegime::Three, Some(e1), Some(e2)) => {
                if (a - e1).abs() <= band * e1 || (a - e2).abs() <= band * e2 {
                    2
                } else if a > e1 && a < e2 {
                    3
                } else {
                    1
                }
            }
            _ => 1,
        }
    }
}

/// Root count predicted for `k = 2` by the criterion "one solution if either
/// `c <= 1` or `d < 3`".
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CountPrediction {
    /// "one solution if either c ≤ 1 or d < 3".
    One,
    /// `c > 1`, `d ≥ 3`: one, two or three depending on thresholds `η_i(d)`
    /// that are not given explicitly.
    OneToThree,
}

impl CountPrediction {
    pub fn admits(&self, count: usize) -> bool {
        match self {
            CountPrediction::One => count == 1,
            CountPrediction::OneToThree => (1..=3).contains(&count),
        }
    }
}

impl Serialize for CountPrediction {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            CountPrediction::One => s.serialize_u64(1),
            CountPrediction::OneToThree => [1u64, 3].serialize(s),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CountReport {
    /// `None` when `k != 2`, where the statement does not apply.
    pub prediction: Option<CountPrediction>,
    pub empirical: usize,
    pub agree: Option<bool>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct NonSymSolution {
    pub x: f64,
    pub m: f64,
    pub t: f64,
    /// Max absolute residual of the three equations for `(x, mx, tx)`.
    pub residual: f64,
}

impl NonSymSolution {
    pub fn triple(&self) -> [f64; 3] {
        [self.x, self.m * self.x, self.t * self.x]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum SymmetryClass {
    /// All three coordinates equal.
    A,
    /// `x1 = x2` only.
    A1,
    /// `x1 = x3` only.
    A2,
    /// `x2 = x3` only.
    A3,
    None,
}

/// `c u³ - cd u² + d u - 1` for the `k = 2` scalar equation.
pub fn scalar_cubic(c: f64, d: f64) -> Polynomial {
    Polynomial::new(vec![-1.0, d, -c * d, c])
}

/// `U (U + B)^k - A (B U + 1)^k`, whose positive roots are the symmetric
/// TI solutions.
pub fn symmetric_polynomial(w: &ReducedWeights, k: usize) -> Polynomial {
    let (a, b) = (w.big_a, w.big_b);
    let k = k as u32;
    Polynomial::linear(0.0, 1.0)
        .mul(&Polynomial::linear(b, 1.0).pow(k))
        .sub(&Polynomial::linear(1.0, b).pow(k).scale(a))
}

/// `(z + 1)^k - (B^{k-1}/A) z (z + B²)^k` in the variable `z = BU`.
pub fn printed_coefficient_polynomial(w: &ReducedWeights, k: usize) -> Polynomial {
    let (a, b) = (w.big_a, w.big_b);
    let coef = b.powi(k as i32 - 1) / a;
    Polynomial::linear(1.0, 1.0)
        .pow(k as u32)
        .sub(&Polynomial::linear(0.0, coef).mul(&Polynomial::linear(b * b, 1.0).pow(k as u32)))
}

/// `f(U) = A((BU + 1)/(U + B))^k`.
pub fn symmetric_map(big_u: f64, w: &ReducedWeights, k: usize) -> f64 {
    w.big_a * ((w.big_b * big_u + 1.0) / (big_u + w.big_b)).powi(k as i32)
}

fn symmetric_slope(big_u: f64, w: &ReducedWeights, k: usize) -> f64 {
    let b = w.big_b;
    k as f64 * symmetric_map(big_u, w, k) * (b * b - 1.0) / ((b * big_u + 1.0) * (big_u + b))
}

/// `g(u) = (cd u² + 1)/(c u² + d)`.
pub fn scalar_map(u: f64, c: f64, d: f64) -> f64 {
    (c * d * u * u + 1.0) / (c * u * u + d)
}

/// Positive roots of the `k = 2` scalar equation for raw `(c, d)`.
pub fn scalar_roots(c: f64, d: f64) -> Vec<f64> {
    scalar_cubic(c, d).positive_roots(&RootOptions::default())
}

fn classify_slope(slope: f64) -> Stability {
    let s = slope.abs();
    if (s - 1.0).abs() <= 1e-8 {
        Stability::Marginal
    } else if s < 1.0 {
        Stability::Attracting
    } else {
        Stability::Repelling
    }
}

/// A few safeguarded Newton steps on `U - f(U)` in `ln U`.
fn polish_big_u(mut big_u: f64, w: &ReducedWeights, k: usize) -> f64 {
    for _ in 0..4 {
        let f = symmetric_map(big_u, w, k);
        let r = big_u.ln() - f.ln();
        let slope = symmetric_slope(big_u, w, k) * big_u / f;
        let denom = 1.0 - slope;
        if !r.is_finite() || denom.abs() < 1e-6 {
            break;
        }
        let next = big_u * (-r / denom).exp();
        let next_r = (next.ln() - symmetric_map(next, w, k).ln()).abs();
        if next_r.is_finite() && next_r < r.abs() {
            big_u = next;
        } else {
            break;
        }
    }
    big_u
}

fn make_root(u: f64, w: &ReducedWeights, k: usize) -> TiRoot {
    let big_u = w.big_a * u * u;
    let f = symmetric_map(big_u, w, k);
    let slope = symmetric_slope(big_u, w, k);
    let residual = if k == 2 {
        (u - scalar_map(u, w.c, w.d)).abs() / (1.0 + u)
    } else {
        (big_u - f).abs() / (1.0 + big_u)
    };
    TiRoot {
        u,
        h: u.ln(),
        big_u,
        residual,
        log_residual: (big_u.ln() - f.ln()).abs(),
        slope,
        stability: classify_slope(slope),
    }
}

/// All positive symmetric TI solutions using the derived equation.
pub fn solve_ti_symmetric(params: &ModelParams) -> Result<SolutionSet> {
    solve_ti_symmetric_with(params, SymmetricForm::Derived)
}

pub fn solve_ti_symmetric_with(params: &ModelParams, form: SymmetricForm) -> Result<SolutionSet> {
    params.validate()?;
    let k = params.k;
    if k < 2 && form == SymmetricForm::PrintedCoefficient {
        return Err(Error::InvalidParams("the printed-coefficient form needs k >= 2".into()));
    }
    let w = params.weights();
    let opts = RootOptions::default();
    let (scalar, sturm_count) = match form {
        SymmetricForm::Derived if k == 2 => {
            let cubic = scalar_cubic(w.c, w.d);
            let roots = cubic.positive_roots(&opts);
            (roots, cubic.sturm_count(0.0, cubic.cauchy_bound()))
        }
        SymmetricForm::Derived => {
            let p = symmetric_polynomial(&w, k);
            let roots = p
                .positive_roots(&opts)
                .into_iter()
                .map(|big_u| (polish_big_u(big_u, &w, k) / w.big_a).sqrt())
                .collect();
            (roots, p.sturm_count(0.0, p.cauchy_bound()))
        }
        SymmetricForm::PrintedCoefficient => {
            let p = printed_coefficient_polynomial(&w, k);
            let roots = p
                .positive_roots(&opts)
                .into_iter()
                .map(|z| (z / w.big_b / w.big_a).sqrt())
                .collect();
            (roots, p.sturm_count(0.0, p.cauchy_bound()))
        }
    };
    if scalar.iter().any(|u| !u.is_finite() || *u <= 0.0) {
        return Err(Error::Numerical("non-finite symmetric root".into()));
    }
    let roots: Vec<TiRoot> = scalar.into_iter().map(|u| make_root(u, &w, k)).collect();
    if form == SymmetricForm::Derived {
        if let Some(bad) = roots.iter().find(|r| r.residual > 1e-9) {
            return Err(Error::Numerical(format!(
                "symmetric root u={} has residual {:e}",
                bad.u, bad.residual
            )));
        }
    }
    Ok(SolutionSet {
        params: *params,
        form,
        roots,
        sturm_count,
    })
}

pub fn preston_classify(b: f64, m: u32) -> PrestonClassification {
    let unique = PrestonClassification {
        b,
        m,
        regime: PrestonRegime::Unique,
        eta1: None,
        eta2: None,
        x1: None,
        x2: None,
    };
    if m <= 2 {
        return unique;
    }
    let threshold = (f64::from(m) / f64::from(m - 2)).powi(2);
    if b <= threshold {
        return unique;
    }
    // x² + [2 - (b-1)(m-2)] x + b = 0
    let p = 2.0 - (b - 1.0) * f64::from(m - 2);
    let disc = p * p - 4.0 * b;
    if disc <= 0.0 {
        return unique;
    }
    let sq = disc.sqrt();
    // Both roots are positive since p < 0 here; avoid cancellation in the smaller one.
    let x2 = (-p + sq) / 2.0;
    let x1 = b / x2;
    let eta = |x: f64| ((1.0 + x) / (b + x)).powi(m as i32 - 1) / x;
    let (e1, e2) = (eta(x1), eta(x2));
    PrestonClassification {
        b,
        m,
        regime: PrestonRegime::Three,
        eta1: Some(e1.min(e2)),
        eta2: Some(e1.max(e2)),
        x1: Some(x1),
        x2: Some(x2),
    }
}

/// `(1 + x)^{m-1} - a x (B + x)^{m-1}`.
pub fn preston_polynomial(a: f64, b: f64, m: u32) -> Polynomial {
    Polynomial::linear(1.0, 1.0)
        .pow(m - 1)
        .sub(&Polynomial::linear(0.0, a).mul(&Polynomial::linear(b, 1.0).pow(m - 1)))
}

/// Literal `k = 2` prediction from `(c, d)`.
pub fn literal_count_prediction(c: f64, d: f64) -> CountPrediction {
    if c <= 1.0 || d < 3.0 {
        CountPrediction::One
    } else {
        CountPrediction::OneToThree
    }
}

pub fn count_solutions(params: &ModelParams) -> Result<CountReport> {
    let set = solve_ti_symmetric(params)?;
    let empirical = set.count();
    if params.k != 2 {
        return Ok(CountReport {
            prediction: None,
            empirical,
            agree: None,
        });
    }
    let w = params.weights();
    let prediction = literal_count_prediction(w.c, w.d);
    Ok(CountReport {
        prediction: Some(prediction),
        empirical,
        agree: Some(prediction.admits(empirical)),
    })
}

/// Residuals of the reduced `(m, t)` system.
pub fn mt_system(m: f64, t: f64, a_tilde: f64, b: f64) -> [f64; 2] {
    let q = m * m - m;
    let s = m - t * t;
    let r = m * m * t - 1.0;
    [
        b * b * q * (1.0 - t * t * t) - s * r,
        a_tilde * a_tilde * r * r - b * q * s,
    ]
}

fn mt_jacobian(m: f64, t: f64, a_tilde: f64, b: f64) -> [[f64; 2]; 2] {
    let q = m * m - m;
    let s = m - t * t;
    let r = m * m * t - 1.0;
    let a2 = a_tilde * a_tilde;
    [
        [
            b * b * (2.0 * m - 1.0) * (1.0 - t * t * t) - (r + s * 2.0 * m * t),
            -3.0 * b * b * q * t * t - (-2.0 * t * r + s * m * m),
        ],
        [
            a2 * 2.0 * r * 2.0 * m * t - b * ((2.0 * m - 1.0) * s + q),
            a2 * 2.0 * r * m * m + 2.0 * b * q * t,
        ],
    ]
}

/// `x = ã b⁻¹ (m²t - 1)/(t(m² - m))`.
pub fn x_from_mt(m: f64, t: f64, a_tilde: f64, b: f64) -> f64 {
    a_tilde / b * (m * m * t - 1.0) / (t * (m * m - m))
}

/// Max absolute residual of the `k = 2` system at `(x, mx, tx)`.
pub fn nonsym_residual(x: f64, m: f64, t: f64, a_tilde: f64, b: f64) -> f64 {
    let triple = [x, m * x, t * x];
    let rhs = xyz_rhs_raw(triple, 2, a_tilde, b);
    triple
        .iter()
        .zip(rhs)
        .map(|(l, r)| (l - r).abs())
        .fold(0.0, f64::max)
}

fn admissible(m: f64, t: f64) -> bool {
    let inv = 1.0 / (m * m);
    let far = |a: f64, b: f64| (a - b).abs() > 1e-6;
    m > 0.0
        && t > 0.0
        && far(m, 1.0)
        && far(t, 1.0)
        && far(m, t)
        && far(m * t, 1.0)
        && ((1.0 < t && t < inv) || (inv < t && t < 1.0))
}

/// Non-symmetric `k = 2` solutions `(x, mx, tx)` for explicit `ã` and `B`.
pub fn solve_nonsymmetric_raw(a_tilde: f64, b: f64) -> Vec<NonSymSolution> {
    const GRID: usize = 60;
    const LO: f64 = 0.02;
    const HI: f64 = 12.0;
    const TUBE: f64 = 0.05;
    let node = |i: usize| LO + (HI - LO) * (i + 1) as f64 / GRID as f64;
    let starts: Vec<(f64, f64)> = (0..GRID)
        .flat_map(|i| (0..GRID).map(move |j| (node(i), node(j))))
        .filter(|&(m, t)| (m - 1.0).abs() > TUBE && (t - 1.0).abs() > TUBE && (m * t - 1.0).abs() > TUBE)
        .collect();
    let opts = NewtonOptions {
        max_iter: 100,
        tol: 1e-12,
    };
    let found: Vec<NonSymSolution> = starts
        .par_iter()
        .filter_map(|&(m0, t0)| {
            let f = |v: &[f64; 2]| {
                (v[0] > 0.0 && v[1] > 0.0).then(|| mt_system(v[0], v[1], a_tilde, b))
            };
            let jac = |v: &[f64; 2]| Some(mt_jacobian(v[0], v[1], a_tilde, b));
            let [m, t] = damped_newton(f, jac, [m0, t0], &opts)?;
            if !admissible(m, t) {
                return None;
            }
            let x = x_from_mt(m, t, a_tilde, b);
            if !(x > 0.0 && x.is_finite()) {
                return None;
            }
            let residual = nonsym_residual(x, m, t, a_tilde, b);
            (residual <= 1e-9).then_some(NonSymSolution { x, m, t, residual })
        })
        .collect();
    dedupe_nonsym(found)
}

fn dedupe_nonsym(mut found: Vec<NonSymSolution>) -> Vec<NonSymSolution> {
    found.sort_by(|a, b| a.m.total_cmp(&b.m).then(a.t.total_cmp(&b.t)));
    let close = |a: f64, b: f64| (a - b).abs() <= 1e-7 * a.abs().max(b.abs());
    let mut out: Vec<NonSymSolution> = Vec::new();
    for s in found {
        match out.iter_mut().find(|o| close(o.m, s.m) && close(o.t, s.t)) {
            Some(o) if s.residual < o.residual => *o = s,
            Some(_) => {}
            None => out.push(s),
        }
    }
    out
}

/// Non-symmetric solutions for `k = 2` model parameters (`ã = e^{βJ}`, `B = e^{2βJp}`).
pub fn solve_nonsymmetric_k2(params: &ModelParams) -> Result<Vec<NonSymSolution>> {
    params.validate()?;
    if params.k != 2 {
        return Err(Error::InvalidParams(format!(
            "the non-symmetric search is implemented for k = 2, got k = {}",
            params.k
        )));
    }
    let w = params.weights();
    Ok(solve_nonsymmetric_raw(w.big_a.sqrt(), w.big_b))
}

pub fn classify_symmetry(x: [f64; 3], tol: f64) -> SymmetryClass {
    let eq = |a: f64, b: f64| (a - b).abs() <= tol * a.abs().max(b.abs());
    let (e12, e13, e23) = (eq(x[0], x[1]), eq(x[0], x[2]), eq(x[1], x[2]));
    match (e12, e13, e23) {
        (true, true, _) | (true, _, true) | (_, true, true) => SymmetryClass::A,
        (true, false, false) => SymmetryClass::A1,
        (false, true, false) => SymmetryClass::A2,
        (false, false, true) => SymmetryClass::A3,
        (false, false, false) => SymmetryClass::None,
    }
}

fn log_add_exp(a: f64, b: f64) -> f64 {
    let m = a.max(b);
    m + ((a - m).exp() + (b - m).exp()).ln()
}

/// Solutions of the `x_i = u_i^{1/k}` form of the TI system found by
/// multistart Newton in log coordinates over `ln x_i ∈ [-6, 6]`.
pub fn solve_xyz_multistart(params: &ModelParams, grid: usize) -> Result<Vec<[f64; 3]>> {
    params.validate()?;
    let w = params.weights();
    let k = params.k as f64;
    let ln_at = w.big_a.ln() / k;
    let ln_b = w.big_b.ln();
    // ln(b e^{ky} + 1) and ln(e^{ky} + b)
    let l1 = move |y: f64| log_add_exp(ln_b + k * y, 0.0);
    let l2 = move |y: f64| log_add_exp(k * y, ln_b);
    let f = move |y: &[f64; 3]| -> Option<[f64; 3]> {
        let g = [
            y[0] - (ln_at + l1(y[2]) - l2(y[2])),
            y[1] - (ln_at + l1(y[1]) + k * y[2] - l2(y[2]) - k * y[0]),
            y[2] - (ln_at + l1(y[2]) + k * y[0] - l2(y[1]) - k * y[2]),
        ];
        g.iter().all(|v| v.is_finite()).then_some(g)
    };
    let jac = move |y: &[f64; 3]| -> Option<[[f64; 3]; 3]> {
        // d/dy ln(b e^{ky} + 1) = k b p/(b p + 1), d/dy ln(e^{ky} + b) = k p/(p + b), p = e^{ky}
        let s = |y: f64| k / (1.0 + (-(ln_b + k * y)).exp());
        let q = |y: f64| k / (1.0 + (ln_b - k * y).exp());
        Some([
            [1.0, 0.0, -(s(y[2]) - q(y[2]))],
            [k, 1.0 - s(y[1]), -(k - q(y[2]))],
            [-k, q(y[1]), 1.0 - s(y[2]) + k],
        ])
    };
    let span = |i: usize| {
        if grid <= 1 {
            0.0
        } else {
            -6.0 + 12.0 * i as f64 / (grid - 1) as f64
        }
    };
    let starts: Vec<[f64; 3]> = (0..grid)
        .flat_map(|i| (0..grid).flat_map(move |j| (0..grid).map(move |l| [span(i), span(j), span(l)])))
        .collect();
    let opts = NewtonOptions {
        max_iter: 80,
        tol: 1e-13,
    };
    let mut found: Vec<[f64; 3]> = starts
        .par_iter()
        .filter_map(|&y0| {
            let y = damped_newton(f, jac, y0, &opts)?;
            let x = y.map(f64::exp);
            let rhs = xyz_rhs(x, params.k, &w);
            let ok = x
                .iter()
                .zip(rhs)
                .all(|(l, r)| (l - r).abs() <= 1e-9 * (1.0 + r.abs()));
            ok.then_some(x)
        })
        .collect();
    found.sort_by(|a, b| {
        a[0].total_cmp(&b[0])
            .then(a[1].total_cmp(&b[1]))
            .then(a[2].total_cmp(&b[2]))
    });
    let close = |a: &[f64; 3], b: &[f64; 3]| {
        a.iter()
            .zip(b)
            .all(|(p, q)| (p - q).abs() <= 1e-7 * p.abs().max(q.abs()))
    };
    let mut out: Vec<[f64; 3]> = Vec::new();
    for x in found {
        if !out.iter().any(|o| close(o, &x)) {
            out.push(x);
        }
    }
    Ok(out)
}
