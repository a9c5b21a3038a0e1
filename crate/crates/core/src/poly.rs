//! Dense real polynomials with Sturm-sequence root counting and
//! derivative-based real root isolation.

use std::fmt;

#[derive(Clone, PartialEq)]
pub struct Polynomial {
    /// Ascending coefficients, no trailing zeros (the zero polynomial is empty).
    coeffs: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RootOptions {
    /// A critical point `c` is taken as a multiple root when
    /// `|p(c)| <= zero_tol * Σ|a_i||c|^i`.
    pub zero_tol: f64,
    /// Roots closer than this relative distance are merged.
    pub merge_rel: f64,
}

impl Default for RootOptions {
    fn default() -> Self {
        Self {
            zero_tol: 1e-12,
            merge_rel: 1e-7,
        }
    }
}

impl fmt::Debug for Polynomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Polynomial{:?}", self.coeffs)
    }
}

impl Polynomial {
    pub fn new(mut coeffs: Vec<f64>) -> Self {
        while coeffs.last() == Some(&0.0) {
            coeffs.pop();
        }
        Self { coeffs }
    }

    pub fn constant(c: f64) -> Self {
        Self::new(vec![c])
    }

    /// `c0 + c1 x`.
    pub fn linear(c0: f64, c1: f64) -> Self {
        Self::new(vec![c0, c1])
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    /// Degree, with the zero polynomial reported as 0.
    pub fn degree(&self) -> usize {
        self.coeffs.len().saturating_sub(1)
    }

    pub fn leading(&self) -> f64 {
        self.coeffs.last().copied().unwrap_or(0.0)
    }

    pub fn eval(&self, x: f64) -> f64 {
        self.coeffs.iter().rev().fold(0.0, |acc, &c| acc * x + c)
    }

    /// `Σ |a_i| |x|^i`, the natural scale of rounding errors in `eval(x)`.
    pub fn eval_scale(&self, x: f64) -> f64 {
        let ax = x.abs();
        self.coeffs.iter().rev().fold(0.0, |acc, &c| acc * ax + c.abs())
    }

    pub fn derivative(&self) -> Self {
        Self::new(
            self.coeffs
                .iter()
                .enumerate()
                .skip(1)
                .map(|(i, &c)| i as f64 * c)
                .collect(),
        )
    }

    pub fn scale(&self, s: f64) -> Self {
        Self::new(self.coeffs.iter().map(|c| c * s).collect())
    }

    pub fn add(&self, other: &Self) -> Self {
        let n = self.coeffs.len().max(other.coeffs.len());
        let get = |v: &[f64], i: usize| v.get(i).copied().unwrap_or(0.0);
        Self::new((0..n).map(|i| get(&self.coeffs, i) + get(&other.coeffs, i)).collect())
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.add(&other.scale(-1.0))
    }

    pub fn mul(&self, other: &Self) -> Self {
        if self.is_zero() || other.is_zero() {
            return Self::new(Vec::new());
        }
        let mut out = vec![0.0; self.coeffs.len() + other.coeffs.len() - 1];
        for (i, a) in self.coeffs.iter().enumerate() {
            for (j, b) in other.coeffs.iter().enumerate() {
                out[i + j] += a * b;
            }
        }
        Self::new(out)
    }

    pub fn pow(&self, e: u32) -> Self {
        (0..e).fold(Self::constant(1.0), |acc, _| acc.mul(self))
    }

    /// Remainder of division by `divisor`.
    pub fn rem(&self, divisor: &Self) -> Self {
        assert!(!divisor.is_zero(), "division by the zero polynomial");
        let mut r = self.coeffs.clone();
        let dn = divisor.coeffs.len();
        let lead = divisor.leading();
        while r.len() >= dn {
            let q = r[r.len() - 1] / lead;
            let shift = r.len() - dn;
            for (i, d) in divisor.coeffs.iter().enumerate() {
                r[shift + i] -= q * d;
            }
            r.pop();
        }
        Self::new(r)
    }

    fn max_abs(&self) -> f64 {
        self.coeffs.iter().fold(0.0, |m, c| m.max(c.abs()))
    }

    /// Every real root has modulus strictly below this bound.
    pub fn cauchy_bound(&self) -> f64 {
        let lead = self.leading().abs();
        let n = self.coeffs.len();
        1.0 + self.coeffs[..n.saturating_sub(1)]
            .iter()
            .fold(0.0f64, |m, c| m.max(c.abs() / lead))
    }

    /// Sturm sequence `p, p', -rem(p, p'), ...`. Remainders that are tiny
    /// relative to their dividend are treated as zero.
    pub fn sturm_sequence(&self) -> Vec<Polynomial> {
        let mut seq = vec![self.clone()];
        if self.degree() == 0 {
            return seq;
        }
        seq.push(self.derivative());
        loop {
            let n = seq.len();
            let (prev, cur) = (&seq[n - 2], &seq[n - 1]);
            if cur.degree() == 0 {
                break;
            }
            let r = prev.rem(cur).scale(-1.0);
            if r.is_zero() || r.max_abs() <= 1e-12 * prev.max_abs() {
                break;
            }
            seq.push(r);
        }
        seq
    }

    /// Number of distinct real roots in `(lo, hi]` by Sturm's theorem.
    pub fn sturm_count(&self, lo: f64, hi: f64) -> usize {
        let seq = self.sturm_sequence();
        let variations = |x: f64| {
            let mut count = 0usize;
            let mut last = 0.0f64;
            for p in &seq {
                let v = p.eval(x);
                if v != 0.0 {
                    if last != 0.0 && (v > 0.0) != (last > 0.0) {
                        count += 1;
                    }
                    last = v;
                }
            }
            count
        };
        variations(lo).saturating_sub(variations(hi))
    }

    /// Distinct real roots in the open interval `(lo, hi)`, ascending.
    ///
    /// Roots of `p'` split `(lo, hi)` into monotone pieces; a sign change on a
    /// piece is refined by bisection, and a critical point where `p` vanishes
    /// (within `opts.zero_tol`) is reported once as a multiple root.
    pub fn real_roots_in(&self, lo: f64, hi: f64, opts: &RootOptions) -> Vec<f64> {
        let mut roots = self.raw_roots_in(lo, hi, opts);
        roots.sort_by(f64::total_cmp);
        let mut merged: Vec<f64> = Vec::with_capacity(roots.len());
        for r in roots {
            match merged.last() {
                Some(&prev) if (r - prev).abs() <= opts.merge_rel * r.abs().max(prev.abs()) => {}
                _ => merged.push(r),
            }
        }
        merged
    }

    fn raw_roots_in(&self, lo: f64, hi: f64, opts: &RootOptions) -> Vec<f64> {
        match self.degree() {
            0 => return Vec::new(),
            1 => {
                let r = -self.coeffs[0] / self.coeffs[1];
                return if r > lo && r < hi { vec![r] } else { Vec::new() };
            }
            _ => {}
        }
        let critical = self.derivative().raw_roots_in(lo, hi, opts);
        let is_zero = |x: f64| self.eval(x).abs() <= opts.zero_tol * self.eval_scale(x);

        let mut roots = Vec::new();
        let mut points = Vec::with_capacity(critical.len() + 2);
        points.push((lo, is_zero(lo)));
        for &c in &critical {
            let z = is_zero(c);
            if z {
                roots.push(c);
            }
            points.push((c, z));
        }
        points.push((hi, is_zero(hi)));

        for pair in points.windows(2) {
            let ((l, lz), (r, rz)) = (pair[0], pair[1]);
            if lz || rz || r <= l {
                continue;
            }
            let (fl, fr) = (self.eval(l), self.eval(r));
            if (fl > 0.0) != (fr > 0.0) {
                roots.push(self.bisect(l, r, fl));
            }
        }
        roots
    }

    fn bisect(&self, mut l: f64, mut r: f64, mut fl: f64) -> f64 {
        for _ in 0..2000 {
            let mid = 0.5 * (l + r);
            if mid <= l || mid >= r {
                break;
            }
            let fm = self.eval(mid);
            if fm == 0.0 {
                return mid;
            }
            if (fm > 0.0) == (fl > 0.0) {
                l = mid;
                fl = fm;
            } else {
                r = mid;
            }
        }
        // Pick the endpoint with the smaller residual.
        if self.eval(l).abs() <= self.eval(r).abs() {
            l
        } else {
            r
        }
    }

    /// Distinct strictly positive real roots, ascending.
    pub fn positive_roots(&self, opts: &RootOptions) -> Vec<f64> {
        if self.degree() == 0 {
            return Vec::new();
        }
        self.real_roots_in(0.0, self.cauchy_bound(), opts)
    }
}
