//! Damped Newton iteration for small square nonlinear systems.

#[derive(Debug, Clone, Copy)]
pub struct NewtonOptions {
    pub max_iter: usize,
    /// Converged once the max-norm of the residual drops below this.
    pub tol: f64,
}

impl Default for NewtonOptions {
    fn default() -> Self {
        Self {
            max_iter: 100,
            tol: 1e-13,
        }
    }
}

fn norm<const N: usize>(v: &[f64; N]) -> f64 {
    v.iter().fold(0.0f64, |m, x| m.max(x.abs()))
}

/// Solves `a · x = b` by Gaussian elimination with partial pivoting.
pub fn solve_linear<const N: usize>(mut a: [[f64; N]; N], mut b: [f64; N]) -> Option<[f64; N]> {
    for col in 0..N {
        let pivot = (col..N).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))?;
        if a[pivot][col].abs() < 1e-300 || !a[pivot][col].is_finite() {
            return None;
        }
        a.swap(col, pivot);
        b.swap(col, pivot);
        for row in col + 1..N {
            let f = a[row][col] / a[col][col];
            for c in col..N {
                a[row][c] -= f * a[col][c];
            }
            b[row] -= f * b[col];
        }
    }
    let mut x = [0.0; N];
    for row in (0..N).rev() {
        let s: f64 = (row + 1..N).map(|c| a[row][c] * x[c]).sum();
        x[row] = (b[row] - s) / a[row][row];
    }
    x.iter().all(|v| v.is_finite()).then_some(x)
}

/// Central-difference Jacobian.
pub fn numeric_jacobian<const N: usize>(
    f: &impl Fn(&[f64; N]) -> Option<[f64; N]>,
    x: &[f64; N],
) -> Option<[[f64; N]; N]> {
    let mut jac = [[0.0; N]; N];
    for j in 0..N {
        let h = 1e-7 * x[j].abs().max(1.0);
        let (mut xp, mut xm) = (*x, *x);
        xp[j] += h;
        xm[j] -= h;
        let (fp, fm) = (f(&xp)?, f(&xm)?);
        for i in 0..N {
            jac[i][j] = (fp[i] - fm[i]) / (2.0 * h);
        }
    }
    Some(jac)
}

/// Newton's method with step halving on the residual max-norm. `f` returns
/// `None` outside its domain, which also triggers step halving.
pub fn damped_newton<const N: usize>(
    f: impl Fn(&[f64; N]) -> Option<[f64; N]>,
    jac: impl Fn(&[f64; N]) -> Option<[[f64; N]; N]>,
    x0: [f64; N],
    opts: &NewtonOptions,
) -> Option<[f64; N]> {
    let mut x = x0;
    let mut fx = f(&x)?;
    let mut r = norm(&fx);
    for _ in 0..opts.max_iter {
        if r <= opts.tol {
            return Some(x);
        }
        let step = solve_linear(jac(&x)?, fx.map(|v| -v))?;
        let mut lambda = 1.0;
        loop {
            let mut trial = x;
            for i in 0..N {
                trial[i] += lambda * step[i];
            }
            if let Some(ft) = f(&trial) {
                let rt = norm(&ft);
                if rt < r {
                    x = trial;
                    fx = ft;
                    r = rt;
                    break;
                }
            }
            lambda *= 0.5;
            if lambda < 1e-12 {
                return (r <= opts.tol).then_some(x);
            }
        }
    }
    (r <= opts.tol).then_some(x)
}
