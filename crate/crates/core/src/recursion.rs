//! Boundary-field functional equations.
//!
//! Two levels of description are used. The h-level quadruple
//! `(h_{++}, h_{+-}, h_{-+}, h_{--})` enters the finite-volume weights directly
//! and lives in the `a = e^{βJ}`, `b = e^{βJp}` convention. The u-level triple
//! collapses the gauge freedom of h and lives in the `A = e^{2βJ}`,
//! `B = e^{2βJp}` convention:
//!
//! ```text
//! u1 = A·e^{h++ + h-+},  u2 = A·e^{h-- + h-+},  u3 = A·e^{h++ + h+-}
//! ```
//!
//! Compatibility of the finite-volume measures along an edge `<x,y>` is
//!
//! ```text
//! u1 = A Π_z (B u3' + 1) / (u3' + B)
//! u2 = A Π_z (B u2' + 1) u3' / ((u3' + B) u1')
//! u3 = A Π_z (B u3' + 1) u1' / ((u2' + B) u3')
//! ```
//!
//! with primes denoting the values on the child edges `<y,z>`.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::lattice::FiniteTree;
use crate::model::ReducedWeights;

/// Boundary field on one directed edge, indexed by `(σ(x), σ(y))`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Default)]
pub struct EdgeField {
    pub pp: f64,
    pub pm: f64,
    pub mp: f64,
    pub mm: f64,
}

/// Reduced (gauge-free) field on one directed edge.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct UTriple {
    pub u1: f64,
    pub u2: f64,
    pub u3: f64,
}

/// A translation-invariant u-field on a tree of order `k`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TIField {
    pub u: UTriple,
    pub k: usize,
}

/// Field value for every edge of a tree, keyed by the child vertex (each
/// non-root vertex has exactly one incoming edge). Index 0 is unused.
#[derive(Debug, Clone, PartialEq)]
pub struct FieldAssignment {
    fields: Vec<Option<EdgeField>>,
}

/// Products beyond this magnitude are accumulated in log space.
const LOG_SPACE_THRESHOLD: f64 = 1e100;

impl EdgeField {
    pub fn uniform(h: f64) -> Self {
        Self {
            pp: h,
            pm: h,
            mp: h,
            mm: h,
        }
    }

    pub fn is_finite(&self) -> bool {
        self.pp.is_finite() && self.pm.is_finite() && self.mp.is_finite() && self.mm.is_finite()
    }

    /// `h_{xy, s_x s_y}`.
    pub fn get(&self, sx: i8, sy: i8) -> f64 {
        match (sx > 0, sy > 0) {
            (true, true) => self.pp,
            (true, false) => self.pm,
            (false, true) => self.mp,
            (false, false) => self.mm,
        }
    }

    /// The exponent `σ(x)σ(y)·h_{xy,σ(x)σ(y)}` that enters the Gibbs weight.
    pub fn weight_exponent(&self, sx: i8, sy: i8) -> f64 {
        f64::from(sx * sy) * self.get(sx, sy)
    }
}

impl UTriple {
    pub fn new(u1: f64, u2: f64, u3: f64) -> Result<Self> {
        let t = Self { u1, u2, u3 };
        t.check_positive()?;
        Ok(t)
    }

    pub fn symmetric(u: f64) -> Self {
        Self { u1: u, u2: u, u3: u }
    }

    pub fn as_array(&self) -> [f64; 3] {
        [self.u1, self.u2, self.u3]
    }

    pub fn check_positive(&self) -> Result<()> {
        for v in self.as_array() {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::NonPositive(v));
            }
        }
        Ok(())
    }
}

impl TIField {
    pub fn new(u: UTriple, k: usize) -> Result<Self> {
        u.check_positive()?;
        Ok(Self { u, k })
    }

    /// `x_i = u_i^{1/k}`.
    pub fn x(&self) -> [f64; 3] {
        let r = 1.0 / self.k as f64;
        self.u.as_array().map(|v| v.powf(r))
    }

    /// `ã = A^{1/k}`.
    pub fn a_tilde(&self, w: &ReducedWeights) -> f64 {
        w.big_a.powf(1.0 / self.k as f64)
    }
}

impl FieldAssignment {
    /// The same quadruple on every edge of `tree`.
    pub fn uniform(tree: &FiniteTree, h: EdgeField) -> Self {
        let mut fields = vec![Some(h); tree.len()];
        fields[0] = None;
        Self { fields }
    }

    pub fn from_fn(tree: &FiniteTree, mut f: impl FnMut(usize, usize) -> EdgeField) -> Self {
        let mut fields = vec![None; tree.len()];
        for &(x, y) in tree.nn_edges() {
            fields[y] = Some(f(x, y));
        }
        Self { fields }
    }

    /// Field on the edge ending at `child`.
    pub fn get(&self, child: usize) -> Result<&EdgeField> {
        self.fields
            .get(child)
            .and_then(Option::as_ref)
            .ok_or(Error::MissingField(child))
    }

    pub fn set(&mut self, child: usize, h: EdgeField) {
        if child >= self.fields.len() {
            self.fields.resize(child + 1, None);
        }
        self.fields[child] = Some(h);
    }

    pub fn remove(&mut self, child: usize) {
        if let Some(slot) = self.fields.get_mut(child) {
            *slot = None;
        }
    }
}

pub fn u_from_h(h: &EdgeField, w: &ReducedWeights) -> UTriple {
    let a = w.big_a;
    UTriple {
        u1: a * (h.pp + h.mp).exp(),
        u2: a * (h.mm + h.mp).exp(),
        u3: a * (h.pp + h.pm).exp(),
    }
}

/// One member of the gauge family of quadruples mapping to `u`; `gauge` is
/// the free value of `h_{++}`.
pub fn h_from_u(u: &UTriple, w: &ReducedWeights, gauge: f64) -> Result<EdgeField> {
    u.check_positive()?;
    let a = w.big_a;
    Ok(EdgeField {
        pp: gauge,
        pm: (u.u3 / a).ln() - gauge,
        mp: (u.u1 / a).ln() - gauge,
        mm: (u.u2 / u.u1).ln() + gauge,
    })
}

/// Translation-invariant boundary field for a root `u` of the scalar
/// equation `u = (cd u² + 1)/(c u² + d)`, where every entry of the quadruple
/// equals `ln u` at gauge `ln u`. The corresponding u-triple is `(A u², A u², A u²)`.
pub fn ti_field_from_scalar_root(root: f64, w: &ReducedWeights, gauge: f64) -> Result<EdgeField> {
    if !(root > 0.0) {
        return Err(Error::NonPositive(root));
    }
    h_from_u(&UTriple::symmetric(w.big_a * root * root), w, gauge)
}

/// `Π f(child)` computed directly, or as `exp(Σ ln f)` when any factor
/// leaves `[1e-100, 1e100]`.
fn guarded_product(factors: impl Iterator<Item = f64> + Clone) -> f64 {
    let extreme = factors
        .clone()
        .any(|f| f.abs() > LOG_SPACE_THRESHOLD || f.abs() < 1.0 / LOG_SPACE_THRESHOLD);
    if extreme {
        factors.map(f64::ln).sum::<f64>().exp()
    } else {
        factors.product()
    }
}

/// Right-hand side of the compatibility system for one edge given its child edges.
pub fn canonic_rhs(children: &[UTriple], w: &ReducedWeights) -> Result<UTriple> {
    for c in children {
        c.check_positive()?;
    }
    let (a, b) = (w.big_a, w.big_b);
    let r1 = guarded_product(children.iter().map(|c| (b * c.u3 + 1.0) / (c.u3 + b)));
    let r2 = guarded_product(
        children
            .iter()
            .map(|c| (b * c.u2 + 1.0) * c.u3 / ((c.u3 + b) * c.u1)),
    );
    let r3 = guarded_product(
        children
            .iter()
            .map(|c| (b * c.u3 + 1.0) * c.u1 / ((c.u2 + b) * c.u3)),
    );
    Ok(UTriple {
        u1: a * r1,
        u2: a * r2,
        u3: a * r3,
    })
}

fn relative_gap(lhs: &UTriple, rhs: &UTriple) -> f64 {
    lhs.as_array()
        .iter()
        .zip(rhs.as_array())
        .map(|(l, r)| (l - r).abs() / (1.0 + r.abs()))
        .fold(0.0, f64::max)
}

/// Residual of the compatibility system on one edge:
/// `max_i |lhs_i - rhs_i| / (1 + |rhs_i|)`.
pub fn canonic_residual(parent: &UTriple, children: &[UTriple], w: &ReducedWeights) -> Result<f64> {
    parent.check_positive()?;
    let rhs = canonic_rhs(children, w)?;
    Ok(relative_gap(parent, &rhs))
}

/// Maximum compatibility residual over all edges `<x,y>` with `y` in the
/// shell `W_m`, using the u-field on the edges into `W_{m+1}` as children.
pub fn canonic_residual_on_shell(
    tree: &FiniteTree,
    field: &FieldAssignment,
    w: &ReducedWeights,
    m: usize,
) -> Result<f64> {
    if m == 0 || m >= tree.depth() {
        return Err(Error::DomainMismatch(format!(
            "shell {m} needs both a parent edge and child edges in a depth-{} tree",
            tree.depth()
        )));
    }
    let mut worst = 0.0f64;
    for y in tree.shell(m) {
        let parent = u_from_h(field.get(y)?, w);
        let children = tree
            .successors(y)
            .iter()
            .map(|&z| field.get(z).map(|h| u_from_h(h, w)))
            .collect::<Result<Vec<_>>>()?;
        worst = worst.max(canonic_residual(&parent, &children, w)?);
    }
    Ok(worst)
}

/// One application of the translation-invariant right-hand side.
pub fn ti_map(u: &TIField, w: &ReducedWeights) -> Result<TIField> {
    let children = vec![u.u; u.k];
    Ok(TIField {
        u: canonic_rhs(&children, w)?,
        k: u.k,
    })
}

/// Residual of the translation-invariant system for a triple.
pub fn ti_residual(u: &TIField, w: &ReducedWeights) -> Result<f64> {
    Ok(relative_gap(&u.u, &ti_map(u, w)?.u))
}

/// Right-hand side of the translation-invariant system written in the
/// variables `x_i = u_i^{1/k}` with `ã = A^{1/k}`.
pub fn xyz_rhs(x: [f64; 3], k: usize, w: &ReducedWeights) -> [f64; 3] {
    xyz_rhs_raw(x, k, w.big_a.powf(1.0 / k as f64), w.big_b)
}

/// [`xyz_rhs`] with `ã` and `B` given directly.
pub fn xyz_rhs_raw(x: [f64; 3], k: usize, at: f64, b: f64) -> [f64; 3] {
    let kk = k as i32;
    let [x1, x2, x3] = x;
    let (p1, p2, p3) = (x1.powi(kk), x2.powi(kk), x3.powi(kk));
    [
        at * (b * p3 + 1.0) / (p3 + b),
        at * (b * p2 + 1.0) * p3 / ((p3 + b) * p1),
        at * (b * p3 + 1.0) * p1 / ((p2 + b) * p3),
    ]
}

pub fn xyz_residual(x: [f64; 3], k: usize, w: &ReducedWeights) -> f64 {
    let r = xyz_rhs(x, k, w);
    x.iter()
        .zip(r)
        .map(|(l, r)| (l - r).abs() / (1.0 + r.abs()))
        .fold(0.0, f64::max)
}
