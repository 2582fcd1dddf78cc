//! The complex momentum `κ(ζ) = k(E - α·cos ζ)`, its branch points, the real
//! iso-energy branches `γ₀`, `γ_π`, and analytic continuation of `κ` along
//! paths in the ζ-plane.
//!
//! Continuation never re-derives a branch: at each step the candidate
//! determinations `±k + 2πl` are evaluated through the quasi-momentum of the
//! periodic operator and the one closest to the previous sample wins, with
//! the step size bisected until the runner-up is unambiguously far.

use alloc::format;
use alloc::vec::Vec;
use num_complex::Complex64;
#[allow(unused_imports)] use num_traits::Float; // float methods without std

use crate::hill::{BandStructure, BlochMomentum};
use crate::{Error, Result};

const PI: f64 = core::f64::consts::PI;
const TWO_PI: f64 = 2.0 * PI;

/// Energy window `F(E) = [E-α, E+α]` riding over gap `n`.
#[derive(Clone, Copy)]
pub struct WindowContext<'a> {
    pub momentum: &'a dyn BlochMomentum,
    pub energy: f64,
    pub alpha: f64,
    /// 1-based index of the interacting gap.
    pub gap: usize,
}

impl core::fmt::Debug for WindowContext<'_> {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        f.debug_struct("WindowContext")
            .field("energy", &self.energy)
            .field("alpha", &self.alpha)
            .field("gap", &self.gap)
            .finish()
    }
}

/// Margins of the band-edge-interaction hypothesis; all four must be
/// strictly positive for the window geometry to be admissible.
#[derive(Debug, Clone, Copy)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct BeiReport {
    pub holds: bool,
    /// E_{2n} - (E - α): lower band edge strictly inside the window
    pub lower_inside: f64,
    /// (E + α) - E_{2n+1}: upper band edge strictly inside the window
    pub upper_inside: f64,
    /// (E - α) - E_{2n-1}: window inside the adjacent band below
    pub lower_outside: f64,
    /// E_{2n+2} - (E + α): window inside the adjacent band above
    pub upper_outside: f64,
}

impl BeiReport {
    pub fn margin(&self) -> f64 {
        self.lower_inside
            .min(self.upper_inside)
            .min(self.lower_outside)
            .min(self.upper_outside)
    }
}

/// Check the window-geometry hypothesis for window `[E-α, E+α]` over gap `n`.
pub fn check_bei(bands: &BandStructure, n: usize, energy: f64, alpha: f64) -> Result<BeiReport> {
    let (g_lo, g_hi) = bands
        .gap(n)
        .ok_or_else(|| Error::OutOfRange(format!("gap {n} not tabulated")))?;
    let e_below = bands
        .edge(2 * n - 1)
        .ok_or_else(|| Error::OutOfRange(format!("edge {} missing", 2 * n - 1)))?;
    let e_above = bands
        .edge(2 * n + 2)
        .ok_or_else(|| Error::OutOfRange(format!("edge {} missing", 2 * n + 2)))?;
    let r = BeiReport {
        holds: false,
        lower_inside: g_lo - (energy - alpha),
        upper_inside: (energy + alpha) - g_hi,
        lower_outside: (energy - alpha) - e_below,
        upper_outside: e_above - (energy + alpha),
    };
    Ok(BeiReport {
        holds: r.margin() > 0.0,
        ..r
    })
}

/// One branch point of `κ`, solving `E - α·cos ζ = E_m`.
#[derive(Debug, Clone, Copy)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct BranchPoint {
    /// 1-based index of the band edge generating this point.
    pub edge: usize,
    pub zeta_re: f64,
    pub zeta_im: f64,
}

impl BranchPoint {
    pub fn zeta(&self) -> Complex64 {
        Complex64::new(self.zeta_re, self.zeta_im)
    }
}

/// Branch points in the fundamental half-strip `0 ≤ Re ζ ≤ π`, `Im ζ ≥ 0`.
/// All others follow by reflection across the real axis, the symmetry
/// `ζ → -ζ` and 2π-periodicity.
#[derive(Debug, Clone)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct BranchPointSet {
    pub gap: usize,
    /// `ζ_{2n}` and `ζ_{2n+1}`: the two real branch points in `(0, π)`.
    pub zeta_gap: (f64, f64),
    /// Points on the positive imaginary axis (edges `2n-1` down to `1`),
    /// ordered by increasing imaginary part.
    pub imag_axis: Vec<BranchPoint>,
    /// Points on `π + iℝ₊` (edges `2n+2`, `2n+3`, …), ordered by increasing
    /// imaginary part.
    pub pi_axis: Vec<BranchPoint>,
}

impl BranchPointSet {
    /// All canonical points as complex numbers, including the two real ones.
    pub fn all(&self) -> Vec<Complex64> {
        let mut v = Vec::with_capacity(2 + self.imag_axis.len() + self.pi_axis.len());
        v.push(Complex64::new(self.zeta_gap.0, 0.0));
        v.push(Complex64::new(self.zeta_gap.1, 0.0));
        v.extend(self.imag_axis.iter().map(|b| b.zeta()));
        v.extend(self.pi_axis.iter().map(|b| b.zeta()));
        v
    }

    /// Distance from `z` to the full (reflected, periodized) branch-point set.
    pub fn distance(&self, z: Complex64) -> f64 {
        // fold into the fundamental half-strip
        let re = z.re.rem_euclid(TWO_PI);
        let re = if re > PI { TWO_PI - re } else { re };
        let folded = Complex64::new(re, z.im.abs());
        self.all()
            .into_iter()
            .map(|b| (folded - b).norm())
            .fold(f64::INFINITY, f64::min)
    }

    /// Minimal pairwise distance between distinct canonical branch points.
    pub fn min_separation(&self) -> f64 {
        let pts = self.all();
        let mut best = f64::INFINITY;
        for i in 0..pts.len() {
            for j in i + 1..pts.len() {
                best = best.min((pts[i] - pts[j]).norm());
            }
        }
        best
    }
}

impl<'a> WindowContext<'a> {
    pub fn new(momentum: &'a dyn BlochMomentum, energy: f64, alpha: f64, gap: usize) -> Self {
        WindowContext {
            momentum,
            energy,
            alpha,
            gap,
        }
    }

    /// The energy the window map sends `ζ` to: `E - α·cos ζ`.
    pub fn window_map(&self, zeta: Complex64) -> Complex64 {
        Complex64::new(self.energy, 0.0) - self.alpha * zeta.cos()
    }

    pub fn bei(&self) -> Result<BeiReport> {
        check_bei(self.momentum.bands(), self.gap, self.energy, self.alpha)
    }

    fn require_bei(&self) -> Result<()> {
        let r = self.bei()?;
        if !r.holds {
            return Err(Error::Geometry(format!(
                "window [E-α, E+α] = [{}, {}] does not straddle gap {} admissibly \
                 (margin {:.3e})",
                self.energy - self.alpha,
                self.energy + self.alpha,
                self.gap,
                r.margin()
            )));
        }
        Ok(())
    }

    /// Branch points of `κ` in the fundamental half-strip, in closed form
    /// from `arccos`/`arccosh`, each verified against its defining equation.
    pub fn branch_points(&self) -> Result<BranchPointSet> {
        self.require_bei()?;
        let bands = self.momentum.bands();
        let n = self.gap;
        let (g_lo, g_hi) = bands.gap(n).unwrap();
        let z_lo = ((self.energy - g_lo) / self.alpha).acos();
        let z_hi = ((self.energy - g_hi) / self.alpha).acos();
        let mut imag_axis = Vec::new();
        for m in (1..=2 * n - 1).rev() {
            let em = bands.edge(m).unwrap();
            let y = ((self.energy - em) / self.alpha).acosh();
            imag_axis.push(BranchPoint {
                edge: m,
                zeta_re: 0.0,
                zeta_im: y,
            });
        }
        let mut pi_axis = Vec::new();
        let mut m = 2 * n + 2;
        while let Some(em) = bands.edge(m) {
            let y = ((em - self.energy) / self.alpha).acosh();
            pi_axis.push(BranchPoint {
                edge: m,
                zeta_re: PI,
                zeta_im: y,
            });
            m += 1;
        }
        let set = BranchPointSet {
            gap: n,
            zeta_gap: (z_lo, z_hi),
            imag_axis,
            pi_axis,
        };
        // residual check on the defining equation
        let scale = 1.0 + self.energy.abs() + self.alpha;
        for (bp, em) in set
            .all()
            .iter()
            .zip(
                [2 * n, 2 * n + 1]
                    .into_iter()
                    .chain(set.imag_axis.iter().map(|b| b.edge))
                    .chain(set.pi_axis.iter().map(|b| b.edge)),
            )
        {
            let res = (self.window_map(*bp) - bands.edge(em).unwrap()).norm();
            if res > 1e-12 * scale {
                return Err(Error::Geometry(format!(
                    "branch point for edge {em} has residual {res:.3e}"
                )));
            }
        }
        Ok(set)
    }

    /// `κ_p` on the real ζ-axis (principal determination of the underlying
    /// quasi-momentum).
    pub fn kappa_p(&self, zeta: f64) -> Result<Complex64> {
        self.momentum.kp_boundary(self.window_map(Complex64::new(zeta, 0.0)).re)
    }
}

/// Which real branch.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum BranchKind {
    Gamma0,
    GammaPi,
}

/// A closed real branch of the iso-energy variety, stored as a polyline in
/// the `(ζ, κ)` plane.
#[derive(Debug, Clone)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct RealBranch {
    pub which: BranchKind,
    /// closed polyline; last point equals the first
    pub points: Vec<(f64, f64)>,
    /// symmetry axis in ζ (0 for γ₀, π for γ_π)
    pub zeta_axis: f64,
    /// symmetry axis in κ (πn)
    pub kappa_axis: f64,
}

impl RealBranch {
    pub fn kappa_range(&self) -> (f64, f64) {
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for &(_, k) in &self.points {
            lo = lo.min(k);
            hi = hi.max(k);
        }
        (lo, hi)
    }

    pub fn zeta_range(&self) -> (f64, f64) {
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for &(z, _) in &self.points {
            lo = lo.min(z);
            hi = hi.max(z);
        }
        (lo, hi)
    }

    /// Oriented loop integral ∮ κ dζ over the stored polyline (trapezoid).
    pub fn loop_integral(&self) -> f64 {
        let mut acc = 0.0;
        for w in self.points.windows(2) {
            acc += 0.5 * (w[0].1 + w[1].1) * (w[1].0 - w[0].0);
        }
        acc
    }
}

impl WindowContext<'_> {
    /// The two real branches per periodicity cell: γ₀ around `ζ = 0` built
    /// from the graph of κ_p on `[0, ζ_{2n}]`, γ_π around `ζ = π` built from
    /// the graph on `[ζ_{2n+1}, π]`, each closed up by its two reflections.
    pub fn real_branches(&self, samples: usize) -> Result<(RealBranch, RealBranch)> {
        let bp = self.branch_points()?;
        let n = self.gap as f64;
        let kappa_axis = PI * n;
        let build = |lo: f64, hi: f64, zeta_axis: f64, which: BranchKind| -> Result<RealBranch> {
            // quarter graph sampled in the sine parameter so the √ behaviour
            // at the branch-point end is resolved
            let m = samples.max(8);
            let mut quarter = Vec::with_capacity(m + 1);
            for i in 0..=m {
                let th = -PI / 2.0 + PI * i as f64 / m as f64;
                let z = 0.5 * (lo + hi) + 0.5 * (hi - lo) * th.sin();
                let k = self.kappa_p(z)?;
                if k.im.abs() > 1e-7 {
                    return Err(Error::Geometry(format!(
                        "κ_p not real at ζ = {z} on a real branch (Im = {:.2e})",
                        k.im
                    )));
                }
                quarter.push((z, k.re));
            }
            // close up: graph, reflect in κ-axis (reversed), then the whole
            // thing reflected in the ζ-axis
            let mut pts: Vec<(f64, f64)> = Vec::with_capacity(4 * (m + 1));
            pts.extend(quarter.iter().copied());
            pts.extend(
                quarter
                    .iter()
                    .rev()
                    .map(|&(z, k)| (z, 2.0 * kappa_axis - k)),
            );
            pts.extend(
                quarter
                    .iter()
                    .map(|&(z, k)| (2.0 * zeta_axis - z, 2.0 * kappa_axis - k)),
            );
            pts.extend(quarter.iter().rev().map(|&(z, k)| (2.0 * zeta_axis - z, k)));
            // deduplicate the seams
            pts.dedup_by(|a, b| (a.0 - b.0).abs() < 1e-14 && (a.1 - b.1).abs() < 1e-14);
            let first = pts[0];
            let last = *pts.last().unwrap();
            if ((first.0 - last.0).powi(2) + (first.1 - last.1).powi(2)).sqrt() > 1e-8 {
                return Err(Error::Geometry(
                    "real branch polyline failed to close".into(),
                ));
            }
            if let Some(l) = pts.last_mut() {
                *l = first;
            }
            Ok(RealBranch {
                which,
                points: pts,
                zeta_axis,
                kappa_axis,
            })
        };
        let gamma0 = build(0.0, bp.zeta_gap.0, 0.0, BranchKind::Gamma0)?;
        let gamma_pi = build(bp.zeta_gap.1, PI, PI, BranchKind::GammaPi)?;
        Ok((gamma0, gamma_pi))
    }
}

/// Options for path continuation of κ.
#[derive(Debug, Clone, Copy)]
pub struct ContinuationOptions {
    /// target |Δκ| per accepted step
    pub max_step: f64,
    /// the runner-up determination must be this many times farther than the
    /// step change
    pub ambiguity_factor: f64,
    /// minimal allowed distance to a branch point, absolute
    pub clearance: f64,
    pub max_depth: u32,
}

impl Default for ContinuationOptions {
    fn default() -> Self {
        ContinuationOptions {
            max_step: 2e-2,
            ambiguity_factor: 10.0,
            clearance: 0.0,
            max_depth: 40,
        }
    }
}

/// κ tracked along a path: matched samples of ζ and κ.
#[derive(Debug, Clone)]
pub struct PathContinuation {
    pub zetas: Vec<Complex64>,
    pub kappas: Vec<Complex64>,
}

impl PathContinuation {
    pub fn start(&self) -> (Complex64, Complex64) {
        (self.zetas[0], self.kappas[0])
    }

    pub fn end(&self) -> (Complex64, Complex64) {
        (*self.zetas.last().unwrap(), *self.kappas.last().unwrap())
    }

    /// ∫ κ dζ along the stored samples (trapezoid; the adaptive sampling has
    /// already made each |Δκ| small).
    pub fn integral(&self) -> Complex64 {
        let mut acc = Complex64::new(0.0, 0.0);
        for i in 1..self.zetas.len() {
            acc += 0.5 * (self.kappas[i] + self.kappas[i - 1]) * (self.zetas[i] - self.zetas[i - 1]);
        }
        acc
    }
}

/// The candidate determination of κ at one point nearest to `near`, plus the
/// distance of the runner-up.
fn candidates(k_raw: Complex64, near: Complex64) -> (Complex64, f64, f64) {
    let mut best = Complex64::new(f64::NAN, f64::NAN);
    let mut d1 = f64::INFINITY;
    let mut d2 = f64::INFINITY;
    for &sgn in &[1.0, -1.0] {
        let base = k_raw * sgn;
        let l0 = ((near.re - base.re) / TWO_PI).round();
        for dl in -2..=2 {
            let cand = base + Complex64::new(TWO_PI * (l0 + dl as f64), 0.0);
            let d = (cand - near).norm();
            if d < d1 {
                d2 = d1;
                d1 = d;
                best = cand;
            } else if d < d2 && (cand - best).norm() > 1e-12 {
                d2 = d;
            }
        }
    }
    (best, d1, d2)
}

impl WindowContext<'_> {
    /// Continue κ along the polyline `path` starting from the determination
    /// `kappa_start` at `path[0]`. Steps are bisected until the chosen
    /// determination is unambiguous and the increment small.
    pub fn continue_kappa(
        &self,
        path: &[Complex64],
        kappa_start: Complex64,
        opts: &ContinuationOptions,
    ) -> Result<PathContinuation> {
        if path.len() < 2 {
            return Err(Error::Geometry("continuation path needs ≥ 2 nodes".into()));
        }
        let bp = self.branch_points()?;
        let clearance = if opts.clearance > 0.0 {
            opts.clearance
        } else {
            0.05 * bp.min_separation()
        };
        let mut out = PathContinuation {
            zetas: alloc::vec![path[0]],
            kappas: alloc::vec![kappa_start],
        };
        for w in path.windows(2) {
            self.continue_segment(w[0], w[1], &bp, clearance, opts, 0, &mut out)?;
        }
        Ok(out)
    }

    fn continue_segment(
        &self,
        za: Complex64,
        zb: Complex64,
        bp: &BranchPointSet,
        clearance: f64,
        opts: &ContinuationOptions,
        depth: u32,
        out: &mut PathContinuation,
    ) -> Result<()> {
        if bp.distance(zb) < clearance {
            return Err(Error::BranchPointProximity(format!(
                "path point {zb} is within {clearance:.3e} of a branch point"
            )));
        }
        let near = *out.kappas.last().unwrap();
        let raw = self.momentum.k_raw(self.window_map(zb))?;
        let (chosen, d1, d2) = candidates(raw, near);
        let ok = d1 <= opts.max_step && d2 - d1 > opts.ambiguity_factor * d1;
        if ok {
            out.zetas.push(zb);
            out.kappas.push(chosen);
            return Ok(());
        }
        if depth >= opts.max_depth {
            return Err(Error::ContinuationAmbiguity(format!(
                "cannot separate determinations near ζ = {zb} (d1 = {d1:.3e}, d2 = {d2:.3e})"
            )));
        }
        let mid = 0.5 * (za + zb);
        self.continue_segment(za, mid, bp, clearance, opts, depth + 1, out)?;
        self.continue_segment(mid, zb, bp, clearance, opts, depth + 1, out)
    }

    /// Refine a continuation by inserting tracked midpoints; returns the new
    /// continuation (used for Richardson control of loop integrals).
    pub fn refine_continuation(&self, c: &PathContinuation) -> Result<PathContinuation> {
        let mut out = PathContinuation {
            zetas: alloc::vec![c.zetas[0]],
            kappas: alloc::vec![c.kappas[0]],
        };
        for i in 1..c.zetas.len() {
            let mid = 0.5 * (c.zetas[i - 1] + c.zetas[i]);
            let raw = self.momentum.k_raw(self.window_map(mid))?;
            let (chosen, _, _) = candidates(raw, 0.5 * (c.kappas[i - 1] + c.kappas[i]));
            out.zetas.push(mid);
            out.kappas.push(chosen);
            out.zetas.push(c.zetas[i]);
            out.kappas.push(c.kappas[i]);
        }
        Ok(out)
    }

    /// ∮ κ dζ along a closed polyline with Richardson-controlled trapezoid
    /// quadrature; also returns the terminal determination of κ.
    pub fn loop_integral(
        &self,
        path: &[Complex64],
        kappa_start: Complex64,
        opts: &ContinuationOptions,
        tol: f64,
    ) -> Result<(Complex64, Complex64)> {
        let mut cont = self.continue_kappa(path, kappa_start, opts)?;
        let end = cont.end().1;
        let mut coarse = cont.integral();
        for _ in 0..6 {
            let fine_cont = self.refine_continuation(&cont)?;
            let fine = fine_cont.integral();
            let err = (fine - coarse).norm() / 3.0;
            if err <= tol {
                return Ok(((fine * 4.0 - coarse) / 3.0, end));
            }
            cont = fine_cont;
            coarse = fine;
        }
        Err(Error::Quadrature(format!(
            "loop integral failed to reach tolerance {tol:.1e}"
        )))
    }
}

/// Check the tunneling-dominance hypothesis: `2π·min(Im ζ_{2n-2}, Im ζ_{2n+3})`
/// must exceed `max(S_h, S_{v,0}, S_{v,π})`. Missing branch points (edges
/// below the window for `n = 1`, or beyond the tabulated range) count as
/// infinitely far.
#[derive(Debug, Clone, Copy)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct TunnelingDominanceReport {
    pub holds: bool,
    /// 2π·min(Im ζ_{2n-2}, Im ζ_{2n+3}); infinite when both are absent
    pub lhs: f64,
    /// max(S_h, S_{v,0}, S_{v,π})
    pub rhs: f64,
}

pub fn check_tunneling_dominance(
    bp: &BranchPointSet,
    s_h: f64,
    s_v0: f64,
    s_vpi: f64,
) -> TunnelingDominanceReport {
    let n = bp.gap;
    let im_below = bp
        .imag_axis
        .iter()
        .find(|b| n >= 1 && b.edge == 2 * n - 2)
        .map(|b| b.zeta_im)
        .unwrap_or(f64::INFINITY);
    let im_above = bp
        .pi_axis
        .iter()
        .find(|b| b.edge == 2 * n + 3)
        .map(|b| b.zeta_im)
        .unwrap_or(f64::INFINITY);
    let lhs = TWO_PI * im_below.min(im_above);
    let rhs = s_h.max(s_v0).max(s_vpi);
    TunnelingDominanceReport {
        holds: lhs > rhs,
        lhs,
        rhs,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::finite_gap::FiniteGapCurve;

    const EDGES: [f64; 5] = [0.0, 3.8571429, 6.8571429, 12.100395, 100.70923];

    fn curve() -> FiniteGapCurve {
        FiniteGapCurve::new(EDGES.to_vec()).unwrap()
    }

    #[test]
    fn bei_arithmetic_on_two_gap_window() {
        let c = curve();
        let r = check_bei(c.bands(), 1, 5.4, 2.0).unwrap();
        assert!(r.holds, "{r:?}");
        // α = 0 degenerates the window
        let r0 = check_bei(c.bands(), 1, 5.4, 0.0).unwrap();
        assert!(!r0.holds);
        // touching the lower gap edge fails strict inclusion
        let rt = check_bei(c.bands(), 1, EDGES[1] + 2.0, 2.0).unwrap();
        assert!(!rt.holds);
    }

    #[test]
    fn branch_points_solve_their_equation() {
        let c = curve();
        let ctx = WindowContext::new(&c, 5.4, 2.0, 1);
        let bp = ctx.branch_points().unwrap();
        assert!((bp.zeta_gap.0 - ((5.4 - EDGES[1]) / 2.0).acos()).abs() < 1e-14);
        assert!(bp.zeta_gap.0 < bp.zeta_gap.1);
        assert_eq!(bp.imag_axis.len(), 1);
        assert_eq!(bp.pi_axis.len(), 2);
        assert!(bp.pi_axis[0].zeta_im < bp.pi_axis[1].zeta_im);
        // E at the lower gap edge puts ζ_{2n} at π/2
        let ctx2 = WindowContext::new(&c, EDGES[1], 4.0, 1);
        if ctx2.bei().unwrap().holds {
            let bp2 = ctx2.branch_points().unwrap();
            assert!((bp2.zeta_gap.0 - PI / 2.0).abs() < 1e-12);
        }
    }

    #[test]
    fn kappa_on_segments_matches_composition() {
        let c = curve();
        let ctx = WindowContext::new(&c, 5.4, 2.0, 1);
        // ζ = π maps to E + α
        let k = ctx.kappa_p(PI).unwrap();
        let direct = c.kp_boundary(7.4).unwrap();
        assert!((k - direct).norm() < 1e-12);
        // ζ = ζ_{2n} sits exactly at the gap edge: κ_p = πn
        let bp = ctx.branch_points().unwrap();
        let k_edge = ctx.kappa_p(bp.zeta_gap.0).unwrap();
        assert!((k_edge.re - PI).abs() < 1e-7, "{k_edge}");
    }

    #[test]
    fn real_branches_close_and_are_symmetric() {
        let c = curve();
        let ctx = WindowContext::new(&c, 5.4, 2.0, 1);
        let (g0, gpi) = ctx.real_branches(64).unwrap();
        // κ range of γ₀ is [κ_p(0), 2πn - κ_p(0)]
        let k0 = ctx.kappa_p(0.0).unwrap().re;
        let (lo, hi) = g0.kappa_range();
        assert!((lo - k0).abs() < 1e-9);
        assert!((hi - (2.0 * PI - k0)).abs() < 1e-9);
        // reflection symmetry of γ₀ across ζ = 0: the ζ-range is symmetric
        let (zlo, zhi) = g0.zeta_range();
        assert!((zlo + zhi).abs() < 1e-12);
        // the two components live in disjoint ζ ranges within the cell
        let (plo, phi) = gpi.zeta_range();
        assert!(zhi < plo && phi <= 2.0 * PI - 0.0);
        // closed polylines
        assert_eq!(g0.points.first(), g0.points.last());
        assert_eq!(gpi.points.first(), gpi.points.last());
    }

    #[test]
    fn contractible_loop_returns_to_start_determination() {
        let c = curve();
        let ctx = WindowContext::new(&c, 5.4, 2.0, 1);
        let k0 = ctx.kappa_p(0.3).unwrap();
        // small diamond around ζ = 0.3 + 0.4i, far from branch points
        let center = Complex64::new(0.3, 0.4);
        let r = 0.12;
        let path: Vec<Complex64> = (0..=24)
            .map(|i| {
                let th = TWO_PI * i as f64 / 24.0;
                center + Complex64::new(r * th.cos(), r * th.sin())
            })
            .collect();
        // walk from the real axis up to the loop start, around, and require
        // the determination to come back
        let mut full = alloc::vec![Complex64::new(0.3, 0.0)];
        full.extend(path.iter().copied());
        full.push(Complex64::new(0.3, 0.0));
        let cont = ctx
            .continue_kappa(&full, k0, &ContinuationOptions::default())
            .unwrap();
        assert!((cont.end().1 - k0).norm() < 1e-8);
    }

    #[test]
    fn loop_around_one_branch_point_flips_the_determination() {
        let c = curve();
        let ctx = WindowContext::new(&c, 5.4, 2.0, 1);
        let bp = ctx.branch_points().unwrap();
        let z2 = bp.zeta_gap.0;
        // circle of radius r around ζ_{2n}, based at the real axis inside the band image
        let base = Complex64::new(z2 - 0.25, 0.0);
        let k_base = ctx.kappa_p(base.re).unwrap();
        let r = 0.25;
        let mut path = alloc::vec![base];
        for i in 0..=48 {
            let th = PI + TWO_PI * i as f64 / 48.0;
            path.push(Complex64::new(z2, 0.0) + Complex64::new(r * th.cos(), r * th.sin()));
        }
        path.push(base);
        let cont = ctx
            .continue_kappa(&path, k_base, &ContinuationOptions::default())
            .unwrap();
        // square-root monodromy around κ = πn: κ → 2πn - κ
        let expect = 2.0 * PI - k_base.re;
        assert!(
            (cont.end().1 - Complex64::new(expect, 0.0)).norm() < 1e-7,
            "end {} expect {}",
            cont.end().1,
            expect
        );
        // twice around returns to the start
        let mut twice = path.clone();
        twice.extend(path.iter().skip(1));
        let cont2 = ctx
            .continue_kappa(&twice, k_base, &ContinuationOptions::default())
            .unwrap();
        assert!((cont2.end().1 - k_base).norm() < 1e-7);
    }

    #[test]
    fn vertical_crossing_of_gap_has_positive_imaginary_momentum() {
        let c = curve();
        let ctx = WindowContext::new(&c, 5.4, 2.0, 1);
        let bp = ctx.branch_points().unwrap();
        let zmid = 0.5 * (bp.zeta_gap.0 + bp.zeta_gap.1);
        let k = ctx.kappa_p(zmid).unwrap();
        assert!(k.im > 0.0);
        assert!((k.re - PI).abs() < 1e-7);
    }

    #[test]
    fn tunneling_dominance_reduces_to_the_upper_outer_point_for_gap_one() {
        let c = curve();
        let ctx = WindowContext::new(&c, 5.4, 2.0, 1);
        let bp = ctx.branch_points().unwrap();
        let rep = check_tunneling_dominance(&bp, 1.0, 1.0, 1.0);
        // with n = 1 only ζ₅ = ζ_{2n+3} is finite
        let y5 = ((EDGES[4] - 5.4) / 2.0).acosh();
        assert!((rep.lhs - TWO_PI * y5).abs() < 1e-12);
        assert!(rep.holds);
        let rep2 = check_tunneling_dominance(&bp, 1.0e9, 1.0, 1.0);
        assert!(!rep2.holds);
    }
}
