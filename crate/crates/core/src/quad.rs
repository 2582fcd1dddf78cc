//! Quadrature and root-finding kernels used across the crate.
//!
//! The integrands here are smooth except for inverse-square-root endpoint
//! singularities (band edges, branch points). Those are removed by the sine
//! substitution of [`gauss_sqrt_endpoints`], after which fixed-order
//! Gauss–Legendre converges spectrally.

use alloc::vec::Vec;
use num_complex::Complex64;
#[allow(unused_imports)] use num_traits::Float; // float methods without std

/// Gauss–Legendre nodes and weights on `[-1, 1]`, computed by Newton
/// iteration on the Legendre recurrence.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 2);
    let mut nodes = Vec::with_capacity(n);
    let mut weights = Vec::with_capacity(n);
    let nf = n as f64;
    for i in 0..n {
        let mut x = (core::f64::consts::PI * (i as f64 + 0.75) / (nf + 0.5)).cos();
        // Newton on P_n(x) = 0.
        for _ in 0..100 {
            let (p, dp) = legendre_pair(n, x);
            let dx = p / dp;
            x -= dx;
            if dx.abs() < 1e-15 {
                break;
            }
        }
        let (_, dp) = legendre_pair(n, x);
        nodes.push(x);
        weights.push(2.0 / ((1.0 - x * x) * dp * dp));
    }
    nodes.reverse();
    weights.reverse();
    (nodes, weights)
}

fn legendre_pair(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let dp = (n as f64) * (x * p1 - p0) / (x * x - 1.0);
    (p1, dp)
}

/// Reusable Gauss–Legendre rule.
#[derive(Debug, Clone)]
pub struct GaussRule {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl GaussRule {
    pub fn new(n: usize) -> Self {
        let (nodes, weights) = gauss_legendre(n);
        GaussRule { nodes, weights }
    }

    /// ∫_a^b f(t) dt for a smooth complex-valued integrand.
    pub fn integrate<F: FnMut(f64) -> Complex64>(&self, a: f64, b: f64, mut f: F) -> Complex64 {
        let mid = 0.5 * (a + b);
        let half = 0.5 * (b - a);
        let mut acc = Complex64::new(0.0, 0.0);
        for (x, w) in self.nodes.iter().zip(&self.weights) {
            acc += f(mid + half * x) * *w;
        }
        acc * half
    }

    /// ∫_a^b f(t) dt for a smooth real-valued integrand.
    pub fn integrate_real<F: FnMut(f64) -> f64>(&self, a: f64, b: f64, mut f: F) -> f64 {
        let mid = 0.5 * (a + b);
        let half = 0.5 * (b - a);
        let mut acc = 0.0;
        for (x, w) in self.nodes.iter().zip(&self.weights) {
            acc += f(mid + half * x) * *w;
        }
        acc * half
    }

    /// ∫_a^b f(t) dt where f may blow up like an inverse square root at one
    /// or both endpoints. The substitution t = mid + half·sin θ turns the
    /// endpoint behaviour into a smooth function of θ.
    pub fn integrate_sqrt_endpoints<F: FnMut(f64) -> Complex64>(
        &self,
        a: f64,
        b: f64,
        mut f: F,
    ) -> Complex64 {
        let mid = 0.5 * (a + b);
        let half = 0.5 * (b - a);
        let mut acc = Complex64::new(0.0, 0.0);
        for (x, w) in self.nodes.iter().zip(&self.weights) {
            let th = core::f64::consts::FRAC_PI_2 * x;
            let t = mid + half * th.sin();
            let jac = half * th.cos() * core::f64::consts::FRAC_PI_2;
            acc += f(t) * jac * *w;
        }
        acc
    }
}

/// Composite adaptive Simpson for a complex integrand; used as a slow but
/// reliable cross-check route.
pub fn adaptive_simpson<F: Fn(f64) -> Complex64>(
    f: &F,
    a: f64,
    b: f64,
    tol: f64,
    max_depth: u32,
) -> Complex64 {
    fn simpson(fa: Complex64, fm: Complex64, fb: Complex64, h: f64) -> Complex64 {
        (fa + fm * 4.0 + fb) * (h / 6.0)
    }
    fn rec<F: Fn(f64) -> Complex64>(
        f: &F,
        a: f64,
        b: f64,
        fa: Complex64,
        fm: Complex64,
        fb: Complex64,
        whole: Complex64,
        tol: f64,
        depth: u32,
    ) -> Complex64 {
        let m = 0.5 * (a + b);
        let lm = 0.5 * (a + m);
        let rm = 0.5 * (m + b);
        let flm = f(lm);
        let frm = f(rm);
        let left = simpson(fa, flm, fm, m - a);
        let right = simpson(fm, frm, fb, b - m);
        let delta = left + right - whole;
        if depth == 0 || delta.norm() <= 15.0 * tol {
            left + right + delta / 15.0
        } else {
            rec(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1)
                + rec(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)
        }
    }
    let fa = f(a);
    let fb = f(b);
    let m = 0.5 * (a + b);
    let fm = f(m);
    let whole = simpson(fa, fm, fb, b - a);
    rec(f, a, b, fa, fm, fb, whole, tol, max_depth)
}

/// Locate a sign change of `f` on `[a, b]` by bisection, then polish with
/// secant steps. Requires f(a)·f(b) ≤ 0.
pub fn bisect_root<F: FnMut(f64) -> f64>(mut f: F, mut a: f64, mut b: f64, tol: f64) -> f64 {
    let mut fa = f(a);
    let mut fb = f(b);
    if fa == 0.0 {
        return a;
    }
    if fb == 0.0 {
        return b;
    }
    debug_assert!(fa * fb < 0.0, "bisect_root: no sign change in bracket");
    for _ in 0..200 {
        let m = 0.5 * (a + b);
        // Secant proposal, clamped to the bracket interior.
        let s = b - fb * (b - a) / (fb - fa);
        let x = if s > a + 0.1 * (b - a) && s < b - 0.1 * (b - a) {
            s
        } else {
            m
        };
        let fx = f(x);
        if fx == 0.0 || (b - a).abs() < tol {
            return x;
        }
        if fa * fx < 0.0 {
            b = x;
            fb = fx;
        } else {
            a = x;
            fa = fx;
        }
    }
    0.5 * (a + b)
}

#[cfg(test)]
mod tests {
    use super::*;
    use core::f64::consts::PI;

    #[test]
    fn gauss_rule_integrates_polynomials_exactly() {
        let rule = GaussRule::new(8);
        // degree 15 is exact for an 8-point rule
        let v = rule.integrate_real(0.0, 1.0, |t| 16.0 * t.powi(15));
        assert!((v - 1.0).abs() < 1e-13, "got {v}");
    }

    #[test]
    fn sqrt_endpoint_substitution_handles_arcsine_weight() {
        // ∫_{-1}^{1} dt/sqrt(1-t²) = π
        let rule = GaussRule::new(40);
        let v = rule
            .integrate_sqrt_endpoints(-1.0, 1.0, |t| {
                Complex64::new(1.0 / (1.0 - t * t).sqrt(), 0.0)
            })
            .re;
        assert!((v - PI).abs() < 1e-12, "got {v}");
    }

    #[test]
    fn adaptive_simpson_matches_closed_form() {
        let v = adaptive_simpson(&|t: f64| Complex64::new(t.sin(), 0.0), 0.0, PI, 1e-12, 40);
        assert!((v.re - 2.0).abs() < 1e-10);
    }

    #[test]
    fn bisect_finds_cosine_root() {
        let r = bisect_root(|x| x.cos(), 1.0, 2.0, 1e-14);
        assert!((r - PI / 2.0).abs() < 1e-12);
    }
}
