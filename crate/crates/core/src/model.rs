//! Couplings, temperature and the Ising-Vannimenus Hamiltonian.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::lattice::{Configuration, FiniteTree, Region};

/// Couplings `J` (nearest neighbour) and `Jp` (prolonged next-nearest
/// neighbour), temperature `T` with `k_B = 1`, and tree order `k`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ModelParams {
    #[serde(rename = "J")]
    pub j: f64,
    #[serde(rename = "Jp")]
    pub jp: f64,
    #[serde(rename = "T")]
    pub t: f64,
    pub k: usize,
}

/// Boltzmann weights in all three conventions used for the recursions.
///
/// `a = e^{βJ}`, `b = e^{βJp}` enter the boundary-field (h) equations;
/// `big_a = e^{2βJ}`, `big_b = e^{2βJp}` enter the u-system; `c = a²`,
/// `d = b²` parametrize the scalar fixed-point equation. `big_a == c` and
/// `big_b == d` hold by construction.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ReducedWeights {
    pub beta: f64,
    pub a: f64,
    pub b: f64,
    #[serde(rename = "A")]
    pub big_a: f64,
    #[serde(rename = "B")]
    pub big_b: f64,
    pub c: f64,
    pub d: f64,
}

impl ModelParams {
    pub fn new(j: f64, jp: f64, t: f64, k: usize) -> Result<Self> {
        let p = Self { j, jp, t, k };
        p.validate()?;
        Ok(p)
    }

    pub fn from_beta(j: f64, jp: f64, beta: f64, k: usize) -> Result<Self> {
        if !(beta.is_finite() && beta > 0.0) {
            return Err(Error::InvalidParams(format!("beta must be positive and finite, got {beta}")));
        }
        Self::new(j, jp, 1.0 / beta, k)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.j.is_finite() && self.jp.is_finite()) {
            return Err(Error::InvalidParams("couplings must be finite".into()));
        }
        if !(self.t.is_finite() && self.t > 0.0) {
            return Err(Error::InvalidParams(format!("temperature must be positive, got {}", self.t)));
        }
        if self.k == 0 {
            return Err(Error::InvalidParams("branching order k must be >= 1".into()));
        }
        let w = self.weights();
        if ![w.a, w.b, w.c, w.d].iter().all(|v| v.is_finite() && *v > 0.0) {
            return Err(Error::InvalidParams(format!(
                "Boltzmann weights out of floating-point range at J={}, Jp={}, T={}",
                self.j, self.jp, self.t
            )));
        }
        Ok(())
    }

    pub fn beta(&self) -> f64 {
        1.0 / self.t
    }

    pub fn with_t(&self, t: f64) -> Self {
        Self { t, ..*self }
    }

    pub fn weights(&self) -> ReducedWeights {
        let beta = self.beta();
        let a = (beta * self.j).exp();
        let b = (beta * self.jp).exp();
        let c = (2.0 * beta * self.j).exp();
        let d = (2.0 * beta * self.jp).exp();
        ReducedWeights {
            beta,
            a,
            b,
            big_a: c,
            big_b: d,
            c,
            d,
        }
    }
}

/// `H(σ) = -Jp Σ_{prolonged} σ(x)σ(z) - J Σ_{nn} σ(x)σ(y)` over pairs inside `V_n`.
pub fn energy(tree: &FiniteTree, sigma: &Configuration, params: &ModelParams) -> Result<f64> {
    let Region::Ball(m) = sigma.region() else {
        return Err(Error::DomainMismatch("energy needs a configuration on a ball V_n".into()));
    };
    if m > tree.depth() || sigma.len() != tree.ball_len(m) {
        return Err(Error::DomainMismatch(format!(
            "configuration on V_{m} does not belong to a tree of depth {}",
            tree.depth()
        )));
    }
    let s = |x: usize| f64::from(sigma.spin(x));
    let nn: f64 = tree.nn_edges_within(m).map(|(x, y)| s(x) * s(y)).sum();
    let pp: f64 = tree.prolonged_pairs_within(m).map(|(x, z)| s(x) * s(z)).sum();
    Ok(-params.jp * pp - params.j * nn)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn all_spins(t: &FiniteTree, spin: i8) -> Configuration {
        Configuration::uniform(t, Region::Ball(t.depth()), spin).unwrap()
    }

    #[test]
    fn energy_examples() {
        let t = FiniteTree::new(2, 2).unwrap();
        let p = ModelParams::new(1.0, 0.5, 1.0, 2).unwrap();
        assert_eq!(energy(&t, &all_spins(&t, 1), &p).unwrap(), -8.0);
        assert_eq!(energy(&t, &all_spins(&t, -1), &p).unwrap(), -8.0);
        let leaf = t.shell(2).start;
        let flipped = all_spins(&t, 1).with_flipped(leaf);
        assert_eq!(energy(&t, &flipped, &p).unwrap(), -5.0);
    }

    #[test]
    fn energy_rejects_shell_configuration() {
        let t = FiniteTree::new(2, 2).unwrap();
        let p = ModelParams::new(1.0, 0.5, 1.0, 2).unwrap();
        let w = Configuration::uniform(&t, Region::Shell(2), 1).unwrap();
        assert!(matches!(energy(&t, &w, &p), Err(Error::DomainMismatch(_))));
    }

    #[test]
    fn spin_flip_symmetry_exhaustive() {
        let t = FiniteTree::new(2, 3).unwrap();
        let p = ModelParams::new(0.7, -1.3, 1.0, 2).unwrap();
        for sigma in t.enumerate_configs(Region::Ball(3), 25).unwrap() {
            let e = energy(&t, &sigma, &p).unwrap();
            let f = energy(&t, &sigma.flipped(), &p).unwrap();
            assert_eq!(e, f);
        }
    }

    #[test]
    fn single_flip_changes_by_broken_bonds() {
        let t = FiniteTree::new(2, 3).unwrap();
        let p = ModelParams::new(0.9, 0.4, 1.0, 2).unwrap();
        for sigma in t.enumerate_configs(Region::Ball(3), 25).unwrap().step_by(37) {
            for v in 0..t.len() {
                let after = sigma.with_flipped(v);
                // Bonds through v that are satisfied before the flip get broken, and vice versa.
                let mut delta = 0.0;
                for &(x, y) in t.nn_edges() {
                    if x == v || y == v {
                        delta += 2.0 * p.j * f64::from(sigma.spin(x) * sigma.spin(y));
                    }
                }
                for &(x, z) in t.prolonged_pairs() {
                    if x == v || z == v {
                        delta += 2.0 * p.jp * f64::from(sigma.spin(x) * sigma.spin(z));
                    }
                }
                let e0 = energy(&t, &sigma, &p).unwrap();
                let e1 = energy(&t, &after, &p).unwrap();
                assert!((e1 - e0 - delta).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn weights_examples() {
        let w = ModelParams::new(0.0, 0.0, 3.0, 2).unwrap().weights();
        assert_eq!((w.a, w.b, w.c, w.d), (1.0, 1.0, 1.0, 1.0));

        let w = ModelParams::new(-1.85, 4.5, 2.6, 2).unwrap().weights();
        assert!((w.c - (-3.7f64 / 2.6).exp()).abs() < 1e-15);
        assert!((w.c - 0.24098).abs() < 1e-5);
        assert!((w.d - 31.865963).abs() < 1e-6);
        assert_eq!(w.big_a, w.c);
        assert_eq!(w.big_b, w.d);
        assert!((w.a * w.a / w.c - 1.0).abs() < 1e-15);
        assert!((w.b * w.b / w.d - 1.0).abs() < 1e-15);

        // βJp = ln(3)/2 with T = 1.
        let w = ModelParams::new(0.0, 3f64.ln() / 2.0, 1.0, 2).unwrap().weights();
        assert!((w.d - 3.0).abs() < 1e-14);
    }

    #[test]
    fn rejects_bad_temperature() {
        assert!(ModelParams::new(1.0, 1.0, 0.0, 2).is_err());
        assert!(ModelParams::new(1.0, 1.0, -1.0, 2).is_err());
        assert!(ModelParams::new(1.0, 1.0, f64::NAN, 2).is_err());
        assert!(ModelParams::new(1000.0, 0.0, 1e-3, 2).is_err());
    }
}
