//! Brute-force ground truth on small trees.
//!
//! The finite-volume weight of `σ ∈ Ω_{V_n}` is
//! `exp(-βH_n(σ) + Σ_{x∈W_{n-1}} Σ_{y∈S(x)} σ(x)σ(y) h_{xy,σ(x)σ(y)})`.
//! All sums over configurations use compensated summation over fixed-size
//! chunks, reduced in chunk order, so results do not depend on the thread count.

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::lattice::{FiniteTree, DEFAULT_ENUMERATION_CAP};
use crate::model::ModelParams;
use crate::recursion::FieldAssignment;

const CHUNK: usize = 1 << 12;

/// Normalized memory-2 Gibbs distribution on `Ω_{V_n}`, indexed by bitmask.
#[derive(Debug, Clone)]
pub struct FiniteGibbs {
    pub n: usize,
    pub probabilities: Vec<f64>,
    pub z: f64,
    pub ln_z: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum SignConvention {
    /// `+ (1/(β|V_n|)) ln Z_n`.
    Plus,
    /// `- (1/(β|V_n|)) ln Z_n`, the usual physics sign and the one the
    /// closed-form free energy carries.
    Minus,
}

/// Per-edge proportionality constant between the marginalized child sums and
/// the parent boundary weight, one value per `(σ(x), σ(y))` sector in the
/// order `++, +-, -+, --`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EdgeFactor {
    pub parent: usize,
    pub child: usize,
    pub sectors: [f64; 4],
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Telescoping {
    pub n: usize,
    pub z_n: f64,
    pub u_times_z_prev: f64,
    pub relative_gap: f64,
    pub ln_z_n: f64,
    pub ln_u: f64,
    pub ln_z_prev: f64,
    /// Largest relative disagreement between the four sector values of any `D(x,y)`.
    pub sector_spread: f64,
}

/// Neumaier-compensated running sum.
#[derive(Debug, Clone, Copy, Default)]
pub struct CompensatedSum {
    sum: f64,
    carry: f64,
}

impl CompensatedSum {
    pub fn add(&mut self, v: f64) {
        let t = self.sum + v;
        if self.sum.abs() >= v.abs() {
            self.carry += (self.sum - t) + v;
        } else {
            self.carry += (v - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn merge(&mut self, other: &CompensatedSum) {
        self.add(other.sum);
        self.add(other.carry);
    }

    pub fn value(&self) -> f64 {
        self.sum + self.carry
    }
}

impl FromIterator<f64> for CompensatedSum {
    fn from_iter<I: IntoIterator<Item = f64>>(iter: I) -> Self {
        let mut s = CompensatedSum::default();
        for v in iter {
            s.add(v);
        }
        s
    }
}

/// Sum of `f(i)` for `i in 0..len`, chunked and reduced deterministically.
fn chunked_sum(len: usize, f: impl Fn(usize) -> f64 + Sync) -> f64 {
    let partials: Vec<CompensatedSum> = (0..len.div_ceil(CHUNK))
        .into_par_iter()
        .map(|c| (c * CHUNK..((c + 1) * CHUNK).min(len)).map(&f).collect())
        .collect();
    let mut total = CompensatedSum::default();
    for p in &partials {
        total.merge(p);
    }
    total.value()
}

/// Enumeration engine over the balls `V_m` of one tree with one boundary field.
#[derive(Debug, Clone)]
pub struct Oracle<'a> {
    tree: &'a FiniteTree,
    params: ModelParams,
    field: &'a FieldAssignment,
    cap: usize,
}

impl<'a> Oracle<'a> {
    pub fn new(tree: &'a FiniteTree, params: ModelParams, field: &'a FieldAssignment) -> Self {
        Self {
            tree,
            params,
            field,
            cap: DEFAULT_ENUMERATION_CAP,
        }
    }

    pub fn with_cap(mut self, cap: usize) -> Self {
        self.cap = cap;
        self
    }

    fn check_level(&self, m: usize) -> Result<usize> {
        if m > self.tree.depth() {
            return Err(Error::DomainMismatch(format!(
                "level {m} exceeds tree depth {}",
                self.tree.depth()
            )));
        }
        let len = self.tree.ball_len(m);
        if len > self.cap || len > 63 {
            return Err(Error::EnumerationCap {
                size: len,
                cap: self.cap,
            });
        }
        Ok(len)
    }

    /// Log of the unnormalized weight of every configuration on `V_m`.
    pub fn log_weights(&self, m: usize) -> Result<Vec<f64>> {
        let len = self.check_level(m)?;
        let beta = self.params.beta();
        let (bj, bjp) = (beta * self.params.j, beta * self.params.jp);
        let nn: Vec<(usize, usize)> = self.tree.nn_edges_within(m).collect();
        let pp: Vec<(usize, usize)> = self.tree.prolonged_pairs_within(m).collect();
        let shell = if m == 0 {
            Vec::new()
        } else {
            self.tree
                .shell(m)
                .map(|y| {
                    let x = self.tree.parent(y).expect("non-root vertex");
                    self.field.get(y).map(|h| (x, y, *h))
                })
                .collect::<Result<Vec<_>>>()?
        };
        let spin = |bits: u64, i: usize| if bits >> i & 1 == 1 { 1i8 } else { -1i8 };
        Ok((0..1u64 << len)
            .into_par_iter()
            .map(|bits| {
                let s = |i| f64::from(spin(bits, i));
                let e_nn: f64 = nn.iter().map(|&(x, y)| s(x) * s(y)).sum();
                let e_pp: f64 = pp.iter().map(|&(x, z)| s(x) * s(z)).sum();
                let boundary: f64 = shell
                    .iter()
                    .map(|(x, y, h)| h.weight_exponent(spin(bits, *x), spin(bits, *y)))
                    .sum();
                bj * e_nn + bjp * e_pp + boundary
            })
            .collect())
    }

    /// `ln Z_m`.
    pub fn ln_partition(&self, m: usize) -> Result<f64> {
        let lw = self.log_weights(m)?;
        Ok(log_sum_exp(&lw))
    }

    pub fn gibbs(&self, m: usize) -> Result<FiniteGibbs> {
        let lw = self.log_weights(m)?;
        let ln_z = log_sum_exp(&lw);
        let probabilities = lw.iter().map(|l| (l - ln_z).exp()).collect();
        Ok(FiniteGibbs {
            n: m,
            probabilities,
            z: ln_z.exp(),
            ln_z,
        })
    }

    /// `max_σ |Σ_ω μ^{(m)}(σ∨ω) - μ^{(m-1)}(σ)|`.
    pub fn compatibility_error(&self, m: usize) -> Result<f64> {
        if m < 2 {
            return Err(Error::DomainMismatch(format!(
                "compatibility is defined for n >= 2, got {m}"
            )));
        }
        let outer = self.gibbs(m)?;
        let inner = self.gibbs(m - 1)?;
        let inner_len = self.tree.ball_len(m - 1);
        let shell_len = self.tree.shell(m).len();
        let worst = (0..inner.probabilities.len())
            .into_par_iter()
            .map(|sigma| {
                let marginal: CompensatedSum = (0..1usize << shell_len)
                    .map(|omega| outer.probabilities[sigma | (omega << inner_len)])
                    .collect();
                (marginal.value() - inner.probabilities[sigma]).abs()
            })
            .reduce(|| 0.0, f64::max);
        Ok(worst)
    }

    /// `D(x,y)` for every edge with `y ∈ W_{m-1}`, computed separately in
    /// each `(σ(x), σ(y))` sector from the child edges into `W_m`.
    pub fn edge_factors(&self, m: usize) -> Result<Vec<EdgeFactor>> {
        if m < 2 || m > self.tree.depth() {
            return Err(Error::DomainMismatch(format!(
                "edge factors need 2 <= n <= {}, got {m}",
                self.tree.depth()
            )));
        }
        let beta = self.params.beta();
        let (j, jp) = (self.params.j, self.params.jp);
        self.tree
            .shell(m - 1)
            .map(|y| {
                let x = self.tree.parent(y).expect("non-root vertex");
                let hxy = self.field.get(y)?;
                let children = self
                    .tree
                    .successors(y)
                    .iter()
                    .map(|&z| self.field.get(z).copied())
                    .collect::<Result<Vec<_>>>()?;
                let mut sectors = [0.0; 4];
                for (slot, (sx, sy)) in [(1i8, 1i8), (1, -1), (-1, 1), (-1, -1)].into_iter().enumerate() {
                    let ln_children: f64 = children
                        .iter()
                        .map(|h| {
                            let terms = [1i8, -1].map(|eta| {
                                h.weight_exponent(sy, eta)
                                    + beta * f64::from(eta) * (j * f64::from(sy) + jp * f64::from(sx))
                            });
                            log_sum_exp(&terms)
                        })
                        .sum();
                    sectors[slot] = (ln_children - hxy.weight_exponent(sx, sy)).exp();
                }
                Ok(EdgeFactor {
                    parent: x,
                    child: y,
                    sectors,
                })
            })
            .collect()
    }

    /// Compares `Z_m` with `U_{m-1} Z_{m-1}`, `U_{m-1} = Π D(x,y)` (the `++`
    /// sector value of each `D`).
    pub fn telescoping(&self, m: usize) -> Result<Telescoping> {
        let factors = self.edge_factors(m)?;
        let ln_u: f64 = factors.iter().map(|f| f.sectors[0].ln()).sum();
        let sector_spread = factors
            .iter()
            .map(|f| {
                let lo = f.sectors.iter().copied().fold(f64::INFINITY, f64::min);
                let hi = f.sectors.iter().copied().fold(0.0, f64::max);
                (hi - lo) / lo
            })
            .fold(0.0, f64::max);
        let ln_z_n = self.ln_partition(m)?;
        let ln_z_prev = self.ln_partition(m - 1)?;
        let relative_gap = (ln_u + ln_z_prev - ln_z_n).exp_m1().abs();
        Ok(Telescoping {
            n: m,
            z_n: ln_z_n.exp(),
            u_times_z_prev: (ln_u + ln_z_prev).exp(),
            relative_gap,
            ln_z_n,
            ln_u,
            ln_z_prev,
            sector_spread,
        })
    }

    pub fn free_energy(&self, m: usize, convention: SignConvention) -> Result<f64> {
        let ln_z = self.ln_partition(m)?;
        let per_site = ln_z / (self.params.beta() * self.tree.ball_len(m) as f64);
        Ok(match convention {
            SignConvention::Plus => per_site,
            SignConvention::Minus => -per_site,
        })
    }
}

/// Stable `ln Σ exp(v_i)` with compensated accumulation.
pub fn log_sum_exp(values: &[f64]) -> f64 {
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !max.is_finite() {
        return max;
    }
    max + chunked_sum(values.len(), |i| (values[i] - max).exp()).ln()
}

/// `Z_n` for `n = tree.depth()`.
pub fn partition_function(tree: &FiniteTree, params: &ModelParams, field: &FieldAssignment) -> Result<f64> {
    Ok(Oracle::new(tree, *params, field).ln_partition(tree.depth())?.exp())
}

pub fn finite_gibbs(tree: &FiniteTree, params: &ModelParams, field: &FieldAssignment) -> Result<FiniteGibbs> {
    Oracle::new(tree, *params, field).gibbs(tree.depth())
}

/// Marginalization error between levels `n-1` and `n`; `tree` must reach depth `n`.
pub fn check_compatibility(
    tree: &FiniteTree,
    params: &ModelParams,
    field: &FieldAssignment,
    n: usize,
) -> Result<f64> {
    Oracle::new(tree, *params, field).compatibility_error(n)
}

pub fn telescoping_check(
    tree: &FiniteTree,
    params: &ModelParams,
    field: &FieldAssignment,
    n: usize,
) -> Result<Telescoping> {
    Oracle::new(tree, *params, field).telescoping(n)
}

pub fn finite_free_energy(
    tree: &FiniteTree,
    params: &ModelParams,
    field: &FieldAssignment,
    n: usize,
    convention: SignConvention,
) -> Result<f64> {
    Oracle::new(tree, *params, field).free_energy(n, convention)
}
