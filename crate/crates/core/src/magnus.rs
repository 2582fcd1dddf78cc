//! Fourth-order Magnus propagator for the Schrödinger system
//!
//! ```text
//!     (y, y')' = A(x)·(y, y'),      A(x) = [[0, 1], [q(x), 0]],
//! ```
//!
//! with `q(x) = V(x) − E`. Each step exponentiates the two-point Gauss
//! collocation average of `A`, so the one-step matrix is exactly unimodular
//! and the accumulated error constants involve derivatives of `V` rather
//! than the size of `E`. This keeps band-edge searches accurate at high
//! energy without step-size tuning.

use alloc::vec::Vec;
use num_complex::Complex64;
#[allow(unused_imports)] use num_traits::Float; // float methods without std

/// 2×2 complex matrix in row-major order.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Mat2c {
    pub a: Complex64,
    pub b: Complex64,
    pub c: Complex64,
    pub d: Complex64,
}

impl Mat2c {
    pub const IDENTITY: Mat2c = Mat2c {
        a: Complex64::new(1.0, 0.0),
        b: Complex64::new(0.0, 0.0),
        c: Complex64::new(0.0, 0.0),
        d: Complex64::new(1.0, 0.0),
    };

    pub fn mul(&self, rhs: &Mat2c) -> Mat2c {
        Mat2c {
            a: self.a * rhs.a + self.b * rhs.c,
            b: self.a * rhs.b + self.b * rhs.d,
            c: self.c * rhs.a + self.d * rhs.c,
            d: self.c * rhs.b + self.d * rhs.d,
        }
    }

    pub fn det(&self) -> Complex64 {
        self.a * self.d - self.b * self.c
    }

    pub fn trace(&self) -> Complex64 {
        self.a + self.d
    }

    pub fn apply(&self, v: (Complex64, Complex64)) -> (Complex64, Complex64) {
        (self.a * v.0 + self.b * v.1, self.c * v.0 + self.d * v.1)
    }
}

/// 2×2 real matrix, used on the long transfer-matrix runs where complex
/// arithmetic would double the cost for nothing.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Mat2r {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub d: f64,
}

impl Mat2r {
    pub const IDENTITY: Mat2r = Mat2r {
        a: 1.0,
        b: 0.0,
        c: 0.0,
        d: 1.0,
    };

    pub fn mul(&self, rhs: &Mat2r) -> Mat2r {
        Mat2r {
            a: self.a * rhs.a + self.b * rhs.c,
            b: self.a * rhs.b + self.b * rhs.d,
            c: self.c * rhs.a + self.d * rhs.c,
            d: self.c * rhs.b + self.d * rhs.d,
        }
    }

    pub fn det(&self) -> f64 {
        self.a * self.d - self.b * self.c
    }

    pub fn apply(&self, v: (f64, f64)) -> (f64, f64) {
        (self.a * v.0 + self.b * v.1, self.c * v.0 + self.d * v.1)
    }
}

const GAUSS_OFFSET: f64 = 0.288_675_134_594_812_9; // √3/6

/// One Magnus step of width `h` starting at `x`, complex coefficient.
fn step_c<Q: FnMut(f64) -> Complex64>(q: &mut Q, x: f64, h: f64) -> Mat2c {
    let q1 = q(x + h * (0.5 - GAUSS_OFFSET));
    let q2 = q(x + h * (0.5 + GAUSS_OFFSET));
    // Ω = [[a, h], [m, -a]] for the 4th-order two-point collocation.
    let a = (q1 - q2) * (h * h * 3.0f64.sqrt() / 12.0);
    let m = (q1 + q2) * (0.5 * h);
    let w2 = a * a + m * h;
    let (ch, shc) = cosh_sinhc(w2);
    Mat2c {
        a: ch + shc * a,
        b: shc * h,
        c: shc * m,
        d: ch - shc * a,
    }
}

/// cosh(w) and sinh(w)/w as entire functions of w² (stable near w = 0).
fn cosh_sinhc(w2: Complex64) -> (Complex64, Complex64) {
    if w2.norm() < 1e-8 {
        let ch = Complex64::new(1.0, 0.0) + w2 * 0.5 + w2 * w2 / 24.0;
        let sh = Complex64::new(1.0, 0.0) + w2 / 6.0 + w2 * w2 / 120.0;
        (ch, sh)
    } else {
        let w = w2.sqrt();
        (w.cosh(), w.sinh() / w)
    }
}

fn step_r<Q: FnMut(f64) -> f64>(q: &mut Q, x: f64, h: f64) -> Mat2r {
    let q1 = q(x + h * (0.5 - GAUSS_OFFSET));
    let q2 = q(x + h * (0.5 + GAUSS_OFFSET));
    let a = (q1 - q2) * (h * h * 3.0f64.sqrt() / 12.0);
    let m = (q1 + q2) * (0.5 * h);
    let w2 = a * a + m * h;
    let (ch, shc) = if w2 > 1e-8 {
        let w = w2.sqrt();
        (w.cosh(), w.sinh() / w)
    } else if w2 < -1e-8 {
        let v = (-w2).sqrt();
        (v.cos(), v.sin() / v)
    } else {
        (1.0 + w2 * 0.5, 1.0 + w2 / 6.0)
    };
    Mat2r {
        a: ch + shc * a,
        b: shc * h,
        c: shc * m,
        d: ch - shc * a,
    }
}

/// Transfer matrix of `(y, y')' = [[0,1],[q,0]](y, y')` from `x0` to `x1`.
pub fn transfer_c<Q: FnMut(f64) -> Complex64>(
    mut q: Q,
    x0: f64,
    x1: f64,
    n_steps: usize,
) -> Mat2c {
    let h = (x1 - x0) / n_steps as f64;
    let mut m = Mat2c::IDENTITY;
    for i in 0..n_steps {
        let x = x0 + i as f64 * h;
        m = step_c(&mut q, x, h).mul(&m);
    }
    m
}

/// Same as [`transfer_c`] for real coefficients.
pub fn transfer_r<Q: FnMut(f64) -> f64>(mut q: Q, x0: f64, x1: f64, n_steps: usize) -> Mat2r {
    let h = (x1 - x0) / n_steps as f64;
    let mut m = Mat2r::IDENTITY;
    for i in 0..n_steps {
        let x = x0 + i as f64 * h;
        m = step_r(&mut q, x, h).mul(&m);
    }
    m
}

/// Cumulative transfer matrices sampled on a uniform grid of `n_grid + 1`
/// points over `[x0, x1]`, each grid cell subdivided into `substeps` Magnus
/// steps. `out[i]` maps data at `x0` to data at `x0 + i·(x1-x0)/n_grid`.
pub fn transfer_grid_c<Q: FnMut(f64) -> Complex64>(
    mut q: Q,
    x0: f64,
    x1: f64,
    n_grid: usize,
    substeps: usize,
) -> Vec<Mat2c> {
    let dx = (x1 - x0) / n_grid as f64;
    let h = dx / substeps as f64;
    let mut out = Vec::with_capacity(n_grid + 1);
    let mut m = Mat2c::IDENTITY;
    out.push(m);
    for i in 0..n_grid {
        let base = x0 + i as f64 * dx;
        for j in 0..substeps {
            m = step_c(&mut q, base + j as f64 * h, h).mul(&m);
        }
        out.push(m);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn free_particle_transfer_is_exact() {
        // q = -E constant: the Magnus step is the exact propagator.
        let e = 7.3;
        let m = transfer_r(|_| -e, 0.0, 1.0, 4);
        let s = e.sqrt();
        assert!((m.a - s.cos()).abs() < 1e-14);
        assert!((m.b - s.sin() / s).abs() < 1e-14);
        assert!((m.c + s * s.sin()).abs() < 1e-14);
        assert!((m.det() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn determinant_is_unimodular_for_variable_coefficients() {
        let m = transfer_c(
            |x: f64| Complex64::new(2.0 * (2.0 * core::f64::consts::PI * x).cos() - 3.0, 0.4),
            0.0,
            1.0,
            512,
        );
        assert!((m.det() - Complex64::new(1.0, 0.0)).norm() < 1e-12);
    }

    #[test]
    fn convergence_is_fourth_order() {
        let q = |x: f64| -10.0 + 4.0 * (2.0 * core::f64::consts::PI * x).cos();
        let fine = transfer_r(q, 0.0, 1.0, 4096);
        let coarse = transfer_r(q, 0.0, 1.0, 64);
        let coarse2 = transfer_r(q, 0.0, 1.0, 128);
        let e1 = (coarse.a - fine.a).abs();
        let e2 = (coarse2.a - fine.a).abs();
        // halving the step should cut the error by about 2^4
        assert!(e2 < e1 / 8.0, "e1={e1:.3e} e2={e2:.3e}");
    }
}
