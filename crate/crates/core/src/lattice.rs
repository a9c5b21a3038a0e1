//! Finite truncations of the semi-infinite Cayley tree and spin configurations on them.
//!
//! Vertices are numbered breadth-first from the root (index 0), so the vertex
//! set of a depth-`m` truncation is always the prefix `0..|V_m|` of any deeper
//! truncation. Configurations are bitmasks: bit `i` set means `σ(i) = +1`.

use crate::error::{Error, Result};

/// Default bound on the number of vertices a configuration sum may range over.
pub const DEFAULT_ENUMERATION_CAP: usize = 25;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FiniteTree {
    k: usize,
    n: usize,
    level: Vec<usize>,
    parent: Vec<Option<usize>>,
    successors: Vec<Vec<usize>>,
    /// Start offset of each level `W_m` in the vertex numbering, plus a final sentinel.
    level_start: Vec<usize>,
    nn_edges: Vec<(usize, usize)>,
    prolonged_pairs: Vec<(usize, usize)>,
}

/// Which vertices a configuration lives on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Region {
    /// `V_m`: all vertices up to level `m`.
    Ball(usize),
    /// `W_m`: the vertices exactly at level `m`.
    Shell(usize),
}

/// Spin assignment on a [`Region`]. Spins are stored as a bitmask over the
/// region's vertices in breadth-first order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Configuration {
    region: Region,
    len: usize,
    bits: u64,
}

impl FiniteTree {
    /// Depth-`n` truncation `V_n` of the semi-infinite tree of order `k`.
    pub fn new(k: usize, n: usize) -> Result<Self> {
        if k == 0 {
            return Err(Error::InvalidTree("branching order k must be >= 1".into()));
        }
        let total = Self::ball_size(k, n)
            .ok_or_else(|| Error::InvalidTree(format!("tree k={k}, n={n} is too large")))?;
        if total > 1 << 26 {
            return Err(Error::InvalidTree(format!(
                "tree k={k}, n={n} has {total} vertices"
            )));
        }

        let mut level = Vec::with_capacity(total);
        let mut parent = Vec::with_capacity(total);
        let mut successors = vec![Vec::with_capacity(k); total];
        let mut level_start = vec![0usize];
        level.push(0);
        parent.push(None);
        level_start.push(1);

        let mut next = 1;
        for m in 1..=n {
            let (lo, hi) = (level_start[m - 1], level_start[m]);
            for x in lo..hi {
                for _ in 0..k {
                    level.push(m);
                    parent.push(Some(x));
                    successors[x].push(next);
                    next += 1;
                }
            }
            level_start.push(next);
        }
        debug_assert_eq!(next, total);

        let nn_edges = (1..total).map(|y| (parent[y].unwrap(), y)).collect();
        let mut prolonged_pairs = Vec::new();
        for x in 0..total {
            for &y in &successors[x] {
                for &z in &successors[y] {
                    prolonged_pairs.push((x, z));
                }
            }
        }

        Ok(Self {
            k,
            n,
            level,
            parent,
            successors,
            level_start,
            nn_edges,
            prolonged_pairs,
        })
    }

    /// `|V_n|`, or `None` on overflow.
    pub fn ball_size(k: usize, n: usize) -> Option<usize> {
        let mut total: usize = 0;
        let mut shell: usize = 1;
        for m in 0..=n {
            total = total.checked_add(shell)?;
            if m < n {
                shell = shell.checked_mul(k)?;
            }
        }
        Some(total)
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn depth(&self) -> usize {
        self.n
    }

    pub fn len(&self) -> usize {
        self.level.len()
    }

    pub fn is_empty(&self) -> bool {
        self.level.is_empty()
    }

    pub fn level(&self, x: usize) -> usize {
        self.level[x]
    }

    pub fn parent(&self, x: usize) -> Option<usize> {
        self.parent[x]
    }

    pub fn successors(&self, x: usize) -> &[usize] {
        &self.successors[x]
    }

    /// Index range of the shell `W_m`.
    pub fn shell(&self, m: usize) -> std::ops::Range<usize> {
        assert!(m <= self.n, "shell {m} beyond depth {}", self.n);
        self.level_start[m]..self.level_start[m + 1]
    }

    /// Number of vertices in `V_m`, `m <= n`.
    pub fn ball_len(&self, m: usize) -> usize {
        self.level_start[m + 1]
    }

    pub fn nn_edges(&self) -> &[(usize, usize)] {
        &self.nn_edges
    }

    pub fn prolonged_pairs(&self) -> &[(usize, usize)] {
        &self.prolonged_pairs
    }

    /// Nearest-neighbour pairs with both ends inside `V_m`.
    pub fn nn_edges_within(&self, m: usize) -> impl Iterator<Item = (usize, usize)> + '_ {
        let len = self.ball_len(m);
        self.nn_edges.iter().copied().filter(move |&(_, y)| y < len)
    }

    /// Prolonged pairs with both ends inside `V_m`.
    pub fn prolonged_pairs_within(&self, m: usize) -> impl Iterator<Item = (usize, usize)> + '_ {
        let len = self.ball_len(m);
        self.prolonged_pairs.iter().copied().filter(move |&(_, z)| z < len)
    }

    pub fn region_len(&self, region: Region) -> Result<usize> {
        match region {
            Region::Ball(m) if m <= self.n => Ok(self.ball_len(m)),
            Region::Shell(m) if m <= self.n => Ok(self.shell(m).len()),
            _ => Err(Error::DomainMismatch(format!(
                "{region:?} lies outside a tree of depth {}",
                self.n
            ))),
        }
    }

    /// Every configuration on `region` in bitmask order, provided the region has
    /// at most `cap` vertices.
    pub fn enumerate_configs(
        &self,
        region: Region,
        cap: usize,
    ) -> Result<impl Iterator<Item = Configuration>> {
        let len = self.region_len(region)?;
        if len > cap || len > 63 {
            return Err(Error::EnumerationCap { size: len, cap });
        }
        Ok((0..1u64 << len).map(move |bits| Configuration { region, len, bits }))
    }

    /// Concatenation `σ ∨ ω` of a configuration on `V_{m-1}` with one on `W_m`.
    pub fn concat(&self, sigma: &Configuration, omega: &Configuration) -> Result<Configuration> {
        let m = match (sigma.region, omega.region) {
            (Region::Ball(a), Region::Shell(b)) if b >= 1 && a + 1 == b && b <= self.n => b,
            (s, o) => {
                return Err(Error::DomainMismatch(format!(
                    "cannot concatenate {s:?} with {o:?}"
                )))
            }
        };
        let inner = self.ball_len(m - 1);
        if sigma.len != inner || omega.len != self.shell(m).len() {
            return Err(Error::DomainMismatch(
                "configuration sizes do not match the tree".into(),
            ));
        }
        let len = inner + omega.len;
        if len > 63 {
            return Err(Error::EnumerationCap { size: len, cap: 63 });
        }
        Ok(Configuration {
            region: Region::Ball(m),
            len,
            bits: sigma.bits | (omega.bits << inner),
        })
    }

    /// Restriction of a configuration on `V_m` to a sub-region.
    pub fn restrict(&self, sigma: &Configuration, region: Region) -> Result<Configuration> {
        let Region::Ball(m) = sigma.region else {
            return Err(Error::DomainMismatch("can only restrict ball configurations".into()));
        };
        let (offset, len) = match region {
            Region::Ball(j) if j <= m => (0, self.ball_len(j)),
            Region::Shell(j) if j <= m => (self.shell(j).start, self.shell(j).len()),
            _ => {
                return Err(Error::DomainMismatch(format!(
                    "{region:?} is not contained in {:?}",
                    sigma.region
                )))
            }
        };
        let mask = if len == 64 { u64::MAX } else { (1u64 << len) - 1 };
        Ok(Configuration {
            region,
            len,
            bits: (sigma.bits >> offset) & mask,
        })
    }
}

impl Configuration {
    pub fn from_bits(tree: &FiniteTree, region: Region, bits: u64) -> Result<Self> {
        let len = tree.region_len(region)?;
        if len > 63 || bits >> len != 0 {
            return Err(Error::DomainMismatch(format!(
                "bitmask {bits:#x} does not fit {len} vertices"
            )));
        }
        Ok(Self { region, len, bits })
    }

    pub fn from_spins(tree: &FiniteTree, region: Region, spins: &[i8]) -> Result<Self> {
        let len = tree.region_len(region)?;
        if spins.len() != len || len > 63 {
            return Err(Error::DomainMismatch(format!(
                "{} spins supplied for a region of {len} vertices",
                spins.len()
            )));
        }
        let mut bits = 0u64;
        for (i, &s) in spins.iter().enumerate() {
            match s {
                1 => bits |= 1 << i,
                -1 => {}
                other => {
                    return Err(Error::DomainMismatch(format!("spin value {other} is not ±1")))
                }
            }
        }
        Ok(Self { region, len, bits })
    }

    pub fn uniform(tree: &FiniteTree, region: Region, spin: i8) -> Result<Self> {
        let len = tree.region_len(region)?;
        Self::from_spins(tree, region, &vec![spin; len])
    }

    pub fn region(&self) -> Region {
        self.region
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn bits(&self) -> u64 {
        self.bits
    }

    /// Spin at position `i` of the region (for balls this is the vertex index).
    pub fn spin(&self, i: usize) -> i8 {
        debug_assert!(i < self.len);
        if self.bits >> i & 1 == 1 {
            1
        } else {
            -1
        }
    }

    pub fn spins(&self) -> Vec<i8> {
        (0..self.len).map(|i| self.spin(i)).collect()
    }

    /// Global spin flip.
    pub fn flipped(&self) -> Self {
        let mask = (1u64 << self.len) - 1;
        Self {
            bits: !self.bits & mask,
            ..*self
        }
    }

    pub fn with_flipped(&self, i: usize) -> Self {
        Self {
            bits: self.bits ^ (1 << i),
            ..*self
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn counts(k: usize, n: usize) -> (usize, usize, usize) {
        let t = FiniteTree::new(k, n).unwrap();
        (t.len(), t.nn_edges().len(), t.prolonged_pairs().len())
    }

    #[test]
    fn small_tree_counts() {
        assert_eq!(counts(2, 2), (7, 6, 4));
        assert_eq!(counts(2, 3), (15, 14, 12));
        assert_eq!(counts(3, 2), (13, 12, 9));
    }

    #[test]
    fn closed_form_counts() {
        for k in 1..=3usize {
            for n in 0..=4usize {
                let t = FiniteTree::new(k, n).unwrap();
                for m in 0..=n {
                    assert_eq!(t.shell(m).len(), k.pow(m as u32));
                }
                let v = |m: usize| {
                    if k == 1 {
                        m + 1
                    } else {
                        (k.pow(m as u32 + 1) - 1) / (k - 1)
                    }
                };
                assert_eq!(t.len(), v(n));
                assert_eq!(t.nn_edges().len(), v(n) - 1);
                let expected_pp = if n >= 2 { v(n - 2) * k * k } else { 0 };
                assert_eq!(t.prolonged_pairs().len(), expected_pp, "k={k} n={n}");
                assert_eq!(t.successors(0).len(), if n > 0 { k } else { 0 });
                for x in 1..t.len() {
                    let p = t.parent(x).unwrap();
                    assert_eq!(t.level(p) + 1, t.level(x));
                }
            }
        }
    }

    #[test]
    fn rejects_zero_branching() {
        assert!(matches!(FiniteTree::new(0, 2), Err(Error::InvalidTree(_))));
    }

    #[test]
    fn enumeration_sizes() {
        let t2 = FiniteTree::new(2, 2).unwrap();
        assert_eq!(t2.enumerate_configs(Region::Ball(2), 25).unwrap().count(), 128);
        let t1 = FiniteTree::new(2, 1).unwrap();
        assert_eq!(t1.enumerate_configs(Region::Shell(1), 25).unwrap().count(), 4);
        let t3 = FiniteTree::new(2, 3).unwrap();
        assert_eq!(t3.enumerate_configs(Region::Ball(3), 25).unwrap().count(), 32768);
    }

    #[test]
    fn enumeration_cap() {
        let t = FiniteTree::new(2, 4).unwrap();
        assert!(matches!(
            t.enumerate_configs(Region::Ball(4), 25),
            Err(Error::EnumerationCap { size: 31, cap: 25 })
        ));
        assert!(t.enumerate_configs(Region::Ball(4), 31).is_ok());
    }

    #[test]
    fn concat_examples() {
        let t = FiniteTree::new(2, 2).unwrap();
        let plus_v1 = Configuration::uniform(&t, Region::Ball(1), 1).unwrap();
        let plus_w2 = Configuration::uniform(&t, Region::Shell(2), 1).unwrap();
        let minus_w2 = Configuration::uniform(&t, Region::Shell(2), -1).unwrap();
        let all_plus = t.concat(&plus_v1, &plus_w2).unwrap();
        assert_eq!(all_plus, Configuration::uniform(&t, Region::Ball(2), 1).unwrap());

        let mixed = t.concat(&plus_v1, &minus_w2).unwrap();
        assert_eq!(mixed.spins(), vec![1, 1, 1, -1, -1, -1, -1]);
        assert_eq!(t.restrict(&mixed, Region::Ball(1)).unwrap(), plus_v1);
        assert_eq!(t.restrict(&mixed, Region::Shell(2)).unwrap(), minus_w2);
    }

    #[test]
    fn concat_rejects_mismatched_domains() {
        let t = FiniteTree::new(2, 3).unwrap();
        let s = Configuration::uniform(&t, Region::Ball(0), 1).unwrap();
        let w = Configuration::uniform(&t, Region::Shell(2), 1).unwrap();
        assert!(matches!(t.concat(&s, &w), Err(Error::DomainMismatch(_))));
    }

    #[test]
    fn concat_restrict_roundtrip_exhaustive() {
        let t = FiniteTree::new(2, 3).unwrap();
        for m in 1..=3 {
            for sigma in t.enumerate_configs(Region::Ball(m - 1), 25).unwrap() {
                for omega in t.enumerate_configs(Region::Shell(m), 25).unwrap() {
                    let joined = t.concat(&sigma, &omega).unwrap();
                    assert_eq!(joined.len(), t.ball_len(m));
                    assert_eq!(t.restrict(&joined, Region::Ball(m - 1)).unwrap(), sigma);
                    assert_eq!(t.restrict(&joined, Region::Shell(m)).unwrap(), omega);
                }
            }
        }
    }
}
