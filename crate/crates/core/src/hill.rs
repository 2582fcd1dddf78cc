//! The unperturbed periodic operator `H₀ = -d²/dx² + V(x)` with `V(x+1) = V(x)`:
//! monodromy and discriminant, band edges, the Bloch quasi-momentum `k_p`,
//! normalized Bloch solutions, the function `ω(E)` built from them, and the
//! gap functional `Λ_n(V)`.
//!
//! `Λ_n` is obtained from `θ_n = exp(∮ ω dE)` over a contour enclosing the
//! n-th gap as `Λ_n = (θ_n + 1/θ_n)/2`. It is `≥ 1` always, `= 1` for even
//! potentials, and invariant under translation of `V`; it measures how far
//! the potential is from being even.

use alloc::format;
use alloc::vec::Vec;
use num_complex::Complex64;
#[allow(unused_imports)] use num_traits::Float; // float methods without std

use crate::magnus::{transfer_c, transfer_grid_c, transfer_r, Mat2c};
use crate::quad::bisect_root;
use crate::{Error, Result};

const TWO_PI: f64 = 2.0 * core::f64::consts::PI;
const PI: f64 = core::f64::consts::PI;

/// Interpolation rule for sampled potentials.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum InterpOrder {
    Linear,
    Cubic,
}

/// A 1-periodic potential, or a prescribed finite-gap band structure when no
/// pointwise potential is available.
#[derive(Debug, Clone, PartialEq)]
pub enum PeriodicPotential {
    /// Values on the uniform grid `x_i = i/N` over one period.
    Sampled { values: Vec<f64>, order: InterpOrder },
    /// `V(x) = a0 + Σ_m cos_coef[m-1]·cos(2πmx) + sin_coef[m-1]·sin(2πmx)`.
    Fourier {
        a0: f64,
        cos_coef: Vec<f64>,
        sin_coef: Vec<f64>,
    },
    /// Explicit band edges `E₁ < E₂ < … < E_{2g+1}`; the quasi-momentum is
    /// evaluated from the spectral curve instead of a pointwise potential.
    FiniteGap { edges: Vec<f64> },
}

impl PeriodicPotential {
    pub fn fourier(a0: f64, cos_coef: &[f64], sin_coef: &[f64]) -> Self {
        PeriodicPotential::Fourier {
            a0,
            cos_coef: cos_coef.into(),
            sin_coef: sin_coef.into(),
        }
    }

    pub fn zero() -> Self {
        PeriodicPotential::fourier(0.0, &[], &[])
    }

    pub fn has_pointwise_values(&self) -> bool {
        !matches!(self, PeriodicPotential::FiniteGap { .. })
    }

    /// Pointwise value of `V`; fails in finite-gap mode.
    pub fn eval(&self, x: f64) -> Result<f64> {
        match self {
            PeriodicPotential::Fourier {
                a0,
                cos_coef,
                sin_coef,
            } => {
                let mut v = *a0;
                for (m, c) in cos_coef.iter().enumerate() {
                    v += c * (TWO_PI * (m as f64 + 1.0) * x).cos();
                }
                for (m, s) in sin_coef.iter().enumerate() {
                    v += s * (TWO_PI * (m as f64 + 1.0) * x).sin();
                }
                Ok(v)
            }
            PeriodicPotential::Sampled { values, order } => {
                let n = values.len();
                if n == 0 {
                    return Err(Error::UnsupportedPotential("empty sample grid".into()));
                }
                let t = (x - x.floor()) * n as f64;
                let i = t.floor() as usize % n;
                let f = t - t.floor();
                let at = |j: isize| values[(((i as isize + j) % n as isize + n as isize) as usize) % n];
                Ok(match order {
                    InterpOrder::Linear => at(0) * (1.0 - f) + at(1) * f,
                    InterpOrder::Cubic => {
                        // Catmull-Rom through the four surrounding samples.
                        let (p0, p1, p2, p3) = (at(-1), at(0), at(1), at(2));
                        let a = -0.5 * p0 + 1.5 * p1 - 1.5 * p2 + 0.5 * p3;
                        let b = p0 - 2.5 * p1 + 2.0 * p2 - 0.5 * p3;
                        let c = -0.5 * p0 + 0.5 * p2;
                        ((a * f + b) * f + c) * f + p1
                    }
                })
            }
            PeriodicPotential::FiniteGap { .. } => Err(Error::UnsupportedMode(
                "finite-gap potentials have no pointwise values".into(),
            )),
        }
    }

    /// The translated potential `τ_s V = V(· + s)`.
    pub fn translate(&self, s: f64) -> Result<Self> {
        match self {
            PeriodicPotential::Fourier {
                a0,
                cos_coef,
                sin_coef,
            } => {
                let mut c2 = Vec::with_capacity(cos_coef.len().max(sin_coef.len()));
                let mut s2 = Vec::with_capacity(c2.capacity());
                let len = cos_coef.len().max(sin_coef.len());
                for m in 0..len {
                    let am = cos_coef.get(m).copied().unwrap_or(0.0);
                    let bm = sin_coef.get(m).copied().unwrap_or(0.0);
                    let ph = TWO_PI * (m as f64 + 1.0) * s;
                    c2.push(am * ph.cos() + bm * ph.sin());
                    s2.push(bm * ph.cos() - am * ph.sin());
                }
                Ok(PeriodicPotential::Fourier {
                    a0: *a0,
                    cos_coef: c2,
                    sin_coef: s2,
                })
            }
            PeriodicPotential::Sampled { values, order } => {
                let n = values.len();
                let mut out = Vec::with_capacity(n);
                let src = self.clone();
                for i in 0..n {
                    out.push(src.eval(i as f64 / n as f64 + s)?);
                }
                Ok(PeriodicPotential::Sampled {
                    values: out,
                    order: *order,
                })
            }
            PeriodicPotential::FiniteGap { .. } => Err(Error::UnsupportedMode(
                "cannot translate a finite-gap band prescription".into(),
            )),
        }
    }

    /// True when `V` is constant to numerical precision; such potentials are
    /// excluded by the standing hypotheses.
    pub fn is_constant(&self) -> bool {
        match self {
            PeriodicPotential::Fourier {
                cos_coef, sin_coef, ..
            } => {
                cos_coef.iter().all(|c| c.abs() < 1e-14)
                    && sin_coef.iter().all(|s| s.abs() < 1e-14)
            }
            PeriodicPotential::Sampled { values, .. } => values
                .iter()
                .all(|v| (v - values.first().copied().unwrap_or(0.0)).abs() < 1e-14),
            PeriodicPotential::FiniteGap { edges } => edges.len() <= 1,
        }
    }

    /// A lower bound for the spectrum of `H₀` (min of `V` on a scan grid).
    pub fn floor(&self) -> Result<f64> {
        let mut lo = f64::INFINITY;
        for i in 0..512 {
            lo = lo.min(self.eval(i as f64 / 512.0)?);
        }
        Ok(lo)
    }
}

/// Where the band edges came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum EdgeProvenance {
    Computed,
    Prescribed,
}

/// Ordered band edges `E₁ ≤ E₂ ≤ …` with gap bookkeeping. Band `n` is
/// `[E_{2n-1}, E_{2n}]` and gap `n` is `(E_{2n}, E_{2n+1})` (1-based).
#[derive(Debug, Clone, PartialEq)]
pub struct BandStructure {
    pub edges: Vec<f64>,
    pub provenance: EdgeProvenance,
    /// A gap counts as closed when its width is below this tolerance.
    pub closure_tol: f64,
}

impl BandStructure {
    pub fn prescribed(edges: Vec<f64>) -> Result<Self> {
        if edges.is_empty() {
            return Err(Error::Geometry("need at least one band edge".into()));
        }
        if edges.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::Geometry(
                "prescribed edges must be strictly increasing (all gaps open)".into(),
            ));
        }
        Ok(BandStructure {
            edges,
            provenance: EdgeProvenance::Prescribed,
            closure_tol: 1e-9,
        })
    }

    pub fn n_gaps(&self) -> usize {
        (self.edges.len().saturating_sub(1)) / 2
    }

    /// Edge `E_j`, 1-based as in the classical labeling.
    pub fn edge(&self, j: usize) -> Option<f64> {
        if j == 0 {
            None
        } else {
            self.edges.get(j - 1).copied()
        }
    }

    /// Gap `n` as `(E_{2n}, E_{2n+1})`, 1-based.
    pub fn gap(&self, n: usize) -> Option<(f64, f64)> {
        Some((self.edge(2 * n)?, self.edge(2 * n + 1)?))
    }

    /// Band `n` as `[E_{2n-1}, E_{2n}]`, 1-based; the last tabulated band is
    /// half-open in reality, we only know its lower edge.
    pub fn band(&self, n: usize) -> Option<(f64, f64)> {
        let lo = self.edge(2 * n - 1)?;
        let hi = self.edge(2 * n).unwrap_or(f64::INFINITY);
        Some((lo, hi))
    }

    pub fn gap_is_open(&self, n: usize) -> bool {
        match self.gap(n) {
            Some((a, b)) => b - a > self.closure_tol,
            None => false,
        }
    }

    /// Index of the band containing `e` (1-based), if any.
    pub fn band_index(&self, e: f64) -> Option<usize> {
        let m = self.edges.len();
        let mut n = 1;
        while 2 * n - 1 <= m {
            let (lo, hi) = self.band(n)?;
            if e >= lo && e <= hi {
                return Some(n);
            }
            if e < lo {
                return None;
            }
            n += 1;
        }
        None
    }

    /// Index of the open gap containing `e` (1-based), if any.
    pub fn gap_index(&self, e: f64) -> Option<usize> {
        for n in 1..=self.n_gaps() {
            let (a, b) = self.gap(n)?;
            if e > a && e < b {
                return Some(n);
            }
        }
        None
    }

    pub fn max_tabulated(&self) -> f64 {
        *self.edges.last().unwrap()
    }
}

/// Solution transfer over one period at a fixed (possibly complex) energy.
#[derive(Debug, Clone, Copy)]
pub struct Monodromy {
    pub matrix: Mat2c,
    pub energy: Complex64,
}

impl Monodromy {
    pub fn discriminant(&self) -> Complex64 {
        self.matrix.trace()
    }
}

/// The periodic operator with its integration settings.
#[derive(Debug, Clone)]
pub struct HillOperator {
    pub potential: PeriodicPotential,
    /// Magnus steps per period for monodromy evaluations.
    pub steps: usize,
    /// Relative tolerance on `det M = 1`.
    pub det_tol: f64,
}

impl HillOperator {
    pub fn new(potential: PeriodicPotential) -> Self {
        HillOperator {
            potential,
            steps: 2048,
            det_tol: 1e-10,
        }
    }

    /// Monodromy matrix at energy `e`: columns are `(y, y')` at `x = 1` for
    /// initial data `(1,0)` and `(0,1)`.
    pub fn monodromy(&self, e: Complex64) -> Result<Monodromy> {
        if !self.potential.has_pointwise_values() {
            return Err(Error::UnsupportedMode(
                "monodromy needs pointwise potential values".into(),
            ));
        }
        let pot = &self.potential;
        let m = transfer_c(
            |x| Complex64::new(pot.eval(x).unwrap_or(f64::NAN), 0.0) - e,
            0.0,
            1.0,
            self.steps,
        );
        let det = m.det();
        if (det - Complex64::new(1.0, 0.0)).norm() > self.det_tol * (1.0 + m.trace().norm()) {
            return Err(Error::Quadrature(format!(
                "monodromy determinant drifted to {det} at E = {e}"
            )));
        }
        Ok(Monodromy { matrix: m, energy: e })
    }

    /// Discriminant `Δ(E) = tr M(E)` for real energy (fast real-arithmetic path).
    pub fn discriminant_real(&self, e: f64) -> Result<f64> {
        if !self.potential.has_pointwise_values() {
            return Err(Error::UnsupportedMode(
                "discriminant needs pointwise potential values".into(),
            ));
        }
        let pot = &self.potential;
        let m = transfer_r(|x| pot.eval(x).unwrap_or(f64::NAN) - e, 0.0, 1.0, self.steps);
        Ok(m.a + m.d)
    }

    pub fn discriminant(&self, e: Complex64) -> Result<Complex64> {
        Ok(self.monodromy(e)?.discriminant())
    }

    /// First `2·n_max + 1` band edges, by scanning `Δ² - 4` and bisecting its
    /// sign changes; tangencies of `Δ²` with 4 inside a band region are
    /// reported as closed gaps.
    pub fn band_edges(&self, n_max: usize) -> Result<BandStructure> {
        if let PeriodicPotential::FiniteGap { edges } = &self.potential {
            let mut bs = BandStructure::prescribed(edges.clone())?;
            bs.provenance = EdgeProvenance::Prescribed;
            return Ok(bs);
        }
        let floor = self.potential.floor()?;
        let e_top = ((n_max as f64 + 1.5) * PI).powi(2) + self.potential.eval(0.0)?.abs() + 10.0;
        // Uniform grid in s = sqrt(E - floor + 1): resolves the ~cos(sqrt E)
        // oscillation of the discriminant with uniformly many points per band.
        let s_top = (e_top - floor + 1.0).sqrt();
        let n_scan = ((s_top / PI) * 160.0) as usize + 64;
        let mut es = Vec::with_capacity(n_scan + 1);
        let mut ts = Vec::with_capacity(n_scan + 1);
        for i in 0..=n_scan {
            let s = s_top * i as f64 / n_scan as f64;
            let e = floor - 1.0 + s * s;
            let d = self.discriminant_real(e)?;
            es.push(e);
            ts.push(d * d - 4.0);
        }
        let t_of = |e: f64| -> f64 {
            let d = self.discriminant_real(e).unwrap_or(f64::NAN);
            d * d - 4.0
        };
        let want = 2 * n_max + 1;
        let mut edges = Vec::new();
        let mut i = 0;
        'scan: while i < n_scan && edges.len() < want {
            if ts[i] > 0.0 && ts[i + 1] <= 0.0 {
                // entering a band
                edges.push(bisect_root(t_of, es[i], es[i + 1], 1e-12));
                // walk through the band region, catching interior closed or
                // narrow gaps via local maxima of Δ² - 4
                let mut j = i + 1;
                loop {
                    if edges.len() >= want {
                        break 'scan;
                    }
                    if j + 1 > n_scan {
                        break 'scan; // top of the scan inside the last band
                    }
                    if ts[j + 1] > 0.0 {
                        // leaving the band
                        edges.push(bisect_root(t_of, es[j], es[j + 1], 1e-12));
                        i = j + 1;
                        break;
                    }
                    // interior local max of Δ²-4 close to zero: a gap the grid
                    // did not resolve (closed or very narrow)
                    if j > i + 1 && ts[j] >= ts[j - 1] && ts[j] >= ts[j + 1] && ts[j] > -1e-3 {
                        let (em, tm) = parabolic_max(
                            es[j - 1], ts[j - 1], es[j], ts[j], es[j + 1], ts[j + 1], &t_of,
                        );
                        if tm > 0.0 {
                            // narrow open gap: bisect both crossings
                            edges.push(bisect_root(t_of, es[j - 1], em, 1e-13));
                            edges.push(bisect_root(t_of, em, es[j + 1], 1e-13));
                        } else if tm > -1e-9 {
                            // tangency: closed gap, double edge
                            edges.push(em);
                            edges.push(em);
                        }
                    }
                    j += 1;
                }
            } else {
                i += 1;
            }
        }
        if edges.len() < 2 * n_max + 1 {
            return Err(Error::EdgeSearch(format!(
                "found only {} edges below E = {:.3}, wanted {}",
                edges.len(),
                e_top,
                2 * n_max + 1
            )));
        }
        edges.truncate(2 * n_max + 1);
        Ok(BandStructure {
            edges,
            provenance: EdgeProvenance::Computed,
            closure_tol: 1e-9,
        })
    }

    /// Verify hypothesis (O) on the first `n_max` gaps of a computed band
    /// structure.
    pub fn check_all_gaps_open(&self, bands: &BandStructure) -> Result<()> {
        for n in 1..=bands.n_gaps() {
            if !bands.gap_is_open(n) {
                return Err(Error::UnsupportedPotential(format!(
                    "gap {n} is closed; the analysis assumes all gaps open"
                )));
            }
        }
        Ok(())
    }
}

fn parabolic_max(
    x0: f64,
    y0: f64,
    x1: f64,
    y1: f64,
    x2: f64,
    y2: f64,
    f: &dyn Fn(f64) -> f64,
) -> (f64, f64) {
    // One parabolic step followed by a short golden-section refinement.
    let denom = (x1 - x0) * (y1 - y2) - (x1 - x2) * (y1 - y0);
    let mut xm = if denom.abs() > 0.0 {
        x1 - 0.5 * ((x1 - x0).powi(2) * (y1 - y2) - (x1 - x2).powi(2) * (y1 - y0)) / denom
    } else {
        x1
    };
    if !(x0..=x2).contains(&xm) {
        xm = x1;
    }
    let (mut a, mut b) = (x0, x2);
    let mut best = (xm, f(xm));
    for _ in 0..60 {
        let l = a + 0.382 * (b - a);
        let r = a + 0.618 * (b - a);
        let (fl, fr) = (f(l), f(r));
        if fl > fr {
            b = r;
            if fl > best.1 {
                best = (l, fl);
            }
        } else {
            a = l;
            if fr > best.1 {
                best = (r, fr);
            }
        }
        if b - a < 1e-13 * (1.0 + x1.abs()) {
            break;
        }
    }
    best
}

/// A Bloch quasi-momentum evaluator: everything the complex-momentum and
/// action machinery needs to know about the periodic operator.
pub trait BlochMomentum {
    fn bands(&self) -> &BandStructure;

    /// Some continuous-near-`e` determination of `k(e)`; which one is
    /// unspecified. Continuation code only uses it through the candidate set
    /// `±k + 2πl`.
    fn k_raw(&self, e: Complex64) -> Result<Complex64>;

    /// The principal determination on the real axis, as the boundary value
    /// from the upper half-plane: real and increasing on band `n` with range
    /// `[π(n-1), πn]`, `πn + i·(positive)` on open gap `n`, purely imaginary
    /// `i·(positive)` below the spectrum.
    fn kp_boundary(&self, e: f64) -> Result<Complex64>;
}

/// Monodromy-backed quasi-momentum for potentials with pointwise values.
#[derive(Debug, Clone)]
pub struct HillMomentum {
    pub op: HillOperator,
    pub band_structure: BandStructure,
}

impl HillMomentum {
    pub fn new(op: HillOperator, n_max: usize) -> Result<Self> {
        let band_structure = op.band_edges(n_max)?;
        Ok(HillMomentum {
            op,
            band_structure,
        })
    }
}

impl BlochMomentum for HillMomentum {
    fn bands(&self) -> &BandStructure {
        &self.band_structure
    }

    fn k_raw(&self, e: Complex64) -> Result<Complex64> {
        let d = self.op.discriminant(e)?;
        Ok((d * 0.5).acos())
    }

    fn kp_boundary(&self, e: f64) -> Result<Complex64> {
        let bs = &self.band_structure;
        if e > bs.max_tabulated() {
            return Err(Error::OutOfRange(format!(
                "E = {e} beyond tabulated band range {}",
                bs.max_tabulated()
            )));
        }
        let d = self.op.discriminant_real(e)? * 0.5;
        if let Some(n) = bs.band_index(e) {
            let sign = if n % 2 == 1 { 1.0 } else { -1.0 };
            let c = (sign * d).clamp(-1.0, 1.0);
            return Ok(Complex64::new(PI * (n as f64 - 1.0) + c.acos(), 0.0));
        }
        if let Some(n) = bs.gap_index(e) {
            let sign = if n % 2 == 0 { 1.0 } else { -1.0 };
            let c = (sign * d).max(1.0);
            return Ok(Complex64::new(PI * n as f64, c.acosh()));
        }
        if e <= bs.edge(1).unwrap() {
            // below the spectrum
            return Ok(Complex64::new(0.0, d.max(1.0).acosh()));
        }
        // Inside a closure-tolerance sliver of a nominally closed gap.
        let n = bs
            .edges
            .iter()
            .position(|&x| e < x)
            .unwrap_or(bs.edges.len())
            / 2;
        Ok(Complex64::new(PI * n as f64, 0.0))
    }
}

/// Bloch solutions at one energy: `ψ±(x) = e^{±ik_p x} p±(x)` with
/// `ψ±(0) = 1`, sampled on a uniform grid over one period.
#[derive(Debug, Clone)]
pub struct BlochPair {
    pub energy: Complex64,
    pub kp: Complex64,
    /// grid values of the periodic parts p₊, p₋ at x_i = i/n, i = 0..n
    pub p_plus: Vec<Complex64>,
    pub p_minus: Vec<Complex64>,
}

impl BlochPair {
    pub fn n_grid(&self) -> usize {
        self.p_plus.len() - 1
    }
}

/// Settings for Bloch-solution and ω evaluations.
#[derive(Debug, Clone, Copy)]
pub struct BlochSettings {
    pub n_grid: usize,
    pub substeps: usize,
    /// Degeneracy threshold on the normalization denominators.
    pub degeneracy_tol: f64,
}

impl Default for BlochSettings {
    fn default() -> Self {
        BlochSettings {
            n_grid: 256,
            substeps: 8,
            degeneracy_tol: 1e-8,
        }
    }
}

impl HillOperator {
    /// Bloch pair at energy `e` for a *given* determination `k` of the
    /// quasi-momentum (`μ₊ = e^{ik}` selects the eigenvector).
    pub fn bloch_pair_with_k(
        &self,
        e: Complex64,
        k: Complex64,
        cfg: &BlochSettings,
    ) -> Result<BlochPair> {
        let pot = self.potential.clone();
        let grid = transfer_grid_c(
            |x| Complex64::new(pot.eval(x).unwrap_or(f64::NAN), 0.0) - e,
            0.0,
            1.0,
            cfg.n_grid,
            cfg.substeps,
        );
        let m = grid.last().unwrap();
        let mu_p = (Complex64::i() * k).exp();
        let mu_m = (-Complex64::i() * k).exp();
        let slope = |mu: Complex64| -> Result<Complex64> {
            // eigenvector (1, s) of M for eigenvalue mu, from the better-
            // conditioned of the two rows
            let r1 = mu - m.a;
            let r2 = mu - m.d;
            if m.b.norm() * r2.norm() >= m.c.norm() * r1.norm() && m.b.norm() > 1e-300 {
                Ok(r1 / m.b)
            } else if m.c.norm() > 1e-300 {
                Ok(m.c / r2)
            } else {
                Err(Error::BranchPointProximity(format!(
                    "monodromy is diagonal at E = {e}; Bloch eigenvectors degenerate"
                )))
            }
        };
        let sp = slope(mu_p)?;
        let sm = slope(mu_m)?;
        if (sp - sm).norm() < cfg.degeneracy_tol * (sp.norm() + sm.norm() + 1.0) {
            return Err(Error::BranchPointProximity(format!(
                "Bloch directions collapse at E = {e} (band edge nearby)"
            )));
        }
        let n = cfg.n_grid;
        let mut p_plus = Vec::with_capacity(n + 1);
        let mut p_minus = Vec::with_capacity(n + 1);
        for (i, g) in grid.iter().enumerate() {
            let x = i as f64 / n as f64;
            let psi_p = g.apply((Complex64::new(1.0, 0.0), sp)).0;
            let psi_m = g.apply((Complex64::new(1.0, 0.0), sm)).0;
            p_plus.push((-Complex64::i() * k * x).exp() * psi_p);
            p_minus.push((Complex64::i() * k * x).exp() * psi_m);
        }
        Ok(BlochPair {
            energy: e,
            kp: k,
            p_plus,
            p_minus,
        })
    }

    /// Bloch pair in the upper half-plane (or on a band), choosing the
    /// principal determination supplied by `momentum`.
    pub fn bloch_pair(
        &self,
        e: Complex64,
        momentum: &dyn BlochMomentum,
        cfg: &BlochSettings,
    ) -> Result<BlochPair> {
        let k = principal_k_at(momentum, e)?;
        self.bloch_pair_with_k(e, k, cfg)
    }

    /// ω(E) = −(∫₀¹ p₋ ∂_E p₊ dx) / (∫₀¹ p₋ p₊ dx) for a given determination
    /// of `k` at `e`; the E-derivative uses a central difference whose step
    /// follows the energy scale.
    pub fn omega_with_k(
        &self,
        e: Complex64,
        k: Complex64,
        k_step: &dyn Fn(Complex64, Complex64) -> Result<Complex64>,
        cfg: &BlochSettings,
    ) -> Result<Complex64> {
        if self.potential.is_constant() {
            return Err(Error::UnsupportedPotential(
                "constant potentials are excluded by the standing hypotheses".into(),
            ));
        }
        let h = 1e-5 * (1.0 + e.norm());
        let ep = e + h;
        let em = e - h;
        let kp1 = k_step(ep, k)?;
        let km1 = k_step(em, k)?;
        let base = self.bloch_pair_with_k(e, k, cfg)?;
        let plus = self.bloch_pair_with_k(ep, kp1, cfg)?;
        let minus = self.bloch_pair_with_k(em, km1, cfg)?;
        let n = base.n_grid();
        let mut num = Complex64::new(0.0, 0.0);
        let mut den = Complex64::new(0.0, 0.0);
        // periodic trapezoid over one period
        for i in 0..n {
            let dp = (plus.p_plus[i] - minus.p_plus[i]) / (2.0 * h);
            num += base.p_minus[i] * dp;
            den += base.p_minus[i] * base.p_plus[i];
        }
        num /= n as f64;
        den /= n as f64;
        if den.norm() < cfg.degeneracy_tol {
            return Err(Error::NearDegenerate(format!(
                "Bloch normalization integral {den:.3e} too small at E = {e}"
            )));
        }
        Ok(-num / den)
    }

    /// Λ_n over gap `n`: contour-integrate ω around the gap and fold the
    /// multiplier into `(θ + 1/θ)/2`.
    pub fn lambda_n(
        &self,
        momentum: &dyn BlochMomentum,
        n: usize,
        cfg: &LambdaSettings,
    ) -> Result<f64> {
        let bands = momentum.bands().clone();
        let (ga, gb) = bands
            .gap(n)
            .ok_or_else(|| Error::OutOfRange(format!("gap {n} not tabulated")))?;
        if !bands.gap_is_open(n) {
            return Err(Error::Contour(format!("gap {n} is closed")));
        }
        let center = 0.5 * (ga + gb);
        let (b_lo, _) = bands.band(n).unwrap();
        let (_, b_hi_u) = bands.band(n + 1).unwrap();
        let b_hi = if b_hi_u.is_finite() {
            b_hi_u
        } else {
            gb + (gb - ga).max(1.0)
        };
        // Horizontal clearance into the neighbor bands keeps the contour away
        // from every other excluded set.
        let margin = cfg.radius_factor * (ga - b_lo).min(b_hi - gb);
        if margin <= 0.0 {
            return Err(Error::Contour(
                "no room between the gap and its neighbor bands".into(),
            ));
        }
        let rx = 0.5 * (gb - ga) + margin;
        let ry = rx.min((gb - ga).max(margin));
        if center - rx <= b_lo || center + rx >= b_hi {
            return Err(Error::Contour(
                "contour would intersect a neighboring gap".into(),
            ));
        }
        let bloch_cfg = BlochSettings::default();
        // March around the ellipse tracking the determination of k.
        let m_pts = cfg.n_points;
        let mut sum = Complex64::new(0.0, 0.0);
        let mut k_prev = principal_k_at(momentum, Complex64::new(center + rx, 0.0))?;
        let step_k = |e: Complex64, near: Complex64| -> Result<Complex64> {
            nearest_determination(momentum.k_raw(e)?, near)
        };
        for j in 0..m_pts {
            let th = TWO_PI * j as f64 / m_pts as f64;
            let e = Complex64::new(center + rx * th.cos(), ry * th.sin());
            let de = Complex64::new(-rx * th.sin(), ry * th.cos()) * (TWO_PI / m_pts as f64);
            let k_here = step_k(e, k_prev)?;
            k_prev = k_here;
            let w = self.omega_with_k(e, k_here, &step_k, &bloch_cfg)?;
            sum += w * de;
        }
        let theta = sum.exp();
        let lambda = (theta + 1.0 / theta) * 0.5;
        if lambda.im.abs() > cfg.reality_tol * (1.0 + lambda.re.abs()) {
            return Err(Error::Consistency(format!(
                "Λ_{n} came out non-real: {lambda}"
            )));
        }
        Ok(lambda.re)
    }
}

/// Contour settings for the Λ_n integral.
#[derive(Debug, Clone, Copy)]
pub struct LambdaSettings {
    pub n_points: usize,
    /// Fraction of the adjacent band widths used as horizontal clearance.
    pub radius_factor: f64,
    pub reality_tol: f64,
}

impl Default for LambdaSettings {
    fn default() -> Self {
        LambdaSettings {
            n_points: 96,
            radius_factor: 0.35,
            reality_tol: 1e-4,
        }
    }
}

/// The determination of `k` at `e` closest to `near`, out of `±k_raw + 2πl`.
pub fn nearest_determination(k_raw: Complex64, near: Complex64) -> Result<Complex64> {
    let mut best = Complex64::new(f64::NAN, f64::NAN);
    let mut best_d = f64::INFINITY;
    for &sgn in &[1.0, -1.0] {
        let base = k_raw * sgn;
        let l = ((near.re - base.re) / TWO_PI).round();
        for dl in -1..=1 {
            let cand = base + Complex64::new(TWO_PI * (l + dl as f64), 0.0);
            let d = (cand - near).norm();
            if d < best_d {
                best_d = d;
                best = cand;
            }
        }
    }
    Ok(best)
}

/// Principal determination at a point reachable from the real axis by a
/// vertical segment: anchor at `Re e` with [`BlochMomentum::kp_boundary`] and
/// track `k` up (or down, by Schwarz symmetry) to `e`.
pub fn principal_k_at(momentum: &dyn BlochMomentum, e: Complex64) -> Result<Complex64> {
    if e.im == 0.0 {
        return momentum.kp_boundary(e.re);
    }
    let conj = e.im < 0.0;
    let target = if conj { e.conj() } else { e };
    let mut k = momentum.kp_boundary(target.re)?;
    let n_steps = 24.max((target.im.abs() * 16.0) as usize);
    for i in 1..=n_steps {
        let z = Complex64::new(target.re, target.im * i as f64 / n_steps as f64);
        k = nearest_determination(momentum.k_raw(z)?, k)?;
    }
    Ok(if conj { k.conj() } else { k })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn mathieu() -> HillOperator {
        HillOperator::new(PeriodicPotential::fourier(0.0, &[2.0], &[]))
    }

    #[test]
    fn free_particle_trace_closed_forms() {
        let op = HillOperator::new(PeriodicPotential::zero());
        let m = op.monodromy(Complex64::new(PI * PI, 0.0)).unwrap();
        assert!((m.discriminant() - Complex64::new(-2.0, 0.0)).norm() < 1e-10);
        let m = op.monodromy(Complex64::new(-1.0, 0.0)).unwrap();
        assert!((m.discriminant().re - 2.0 * 1.0f64.cosh()).abs() < 1e-10);
    }

    #[test]
    fn free_particle_edges_are_n_pi_squared() {
        let op = HillOperator::new(PeriodicPotential::zero());
        let bs = op.band_edges(4).unwrap();
        assert_eq!(bs.edges.len(), 9);
        assert!(bs.edges[0].abs() < 1e-8);
        for n in 1..=4usize {
            let expect = (n as f64 * PI).powi(2);
            assert!(
                (bs.edges[2 * n - 1] - expect).abs() < 1e-8,
                "edge {} = {}, want {}",
                2 * n,
                bs.edges[2 * n - 1],
                expect
            );
            assert!((bs.edges[2 * n] - expect).abs() < 1e-8);
            assert!(!bs.gap_is_open(n), "free gaps must be closed");
        }
    }

    #[test]
    fn mathieu_first_gap_is_open_and_kp_contract_holds() {
        let op = mathieu();
        let bs = op.band_edges(3).unwrap();
        assert!(bs.gap_is_open(1));
        let hm = HillMomentum {
            op,
            band_structure: bs.clone(),
        };
        // kp at band edges hits multiples of π
        let k1 = hm.kp_boundary(bs.edge(2).unwrap()).unwrap();
        assert!((k1.re - PI).abs() < 1e-6 && k1.im.abs() < 1e-7);
        let k2 = hm.kp_boundary(bs.edge(3).unwrap()).unwrap();
        assert!((k2.re - PI).abs() < 1e-6 && k2.im.abs() < 1e-7);
        // mid-gap: Re constant π, Im positive
        let (ga, gb) = bs.gap(1).unwrap();
        let km = hm.kp_boundary(0.5 * (ga + gb)).unwrap();
        assert!((km.re - PI).abs() < 1e-12);
        assert!(km.im > 0.0);
    }

    #[test]
    fn monodromy_rejects_finite_gap_mode() {
        let op = HillOperator::new(PeriodicPotential::FiniteGap {
            edges: alloc::vec![0.0, 1.0, 2.0],
        });
        match op.monodromy(Complex64::new(1.0, 0.0)) {
            Err(Error::UnsupportedMode(_)) => {}
            other => panic!("expected UnsupportedMode, got {other:?}"),
        }
    }

    #[test]
    fn bloch_solutions_satisfy_floquet_and_normalization() {
        let op = mathieu();
        let hm = HillMomentum::new(op.clone(), 3).unwrap();
        let e = Complex64::new(1.0, 1.0);
        let pair = op
            .bloch_pair(e, &hm, &BlochSettings::default())
            .unwrap();
        // ψ±(0) = 1 means p±(0) = 1
        assert!((pair.p_plus[0] - Complex64::new(1.0, 0.0)).norm() < 1e-12);
        assert!((pair.p_minus[0] - Complex64::new(1.0, 0.0)).norm() < 1e-12);
        // periodicity of p±: p(1) = p(0)
        assert!(
            (pair.p_plus[pair.n_grid()] - pair.p_plus[0]).norm() < 1e-8,
            "p+ not periodic: {:?}",
            pair.p_plus[pair.n_grid()]
        );
        assert!((pair.p_minus[pair.n_grid()] - pair.p_minus[0]).norm() < 1e-8);
    }

    #[test]
    fn free_bloch_has_constant_periodic_part() {
        let op = HillOperator::new(PeriodicPotential::zero());
        let e = Complex64::new(0.0, 1.0);
        let k = (e.sqrt()).re.atan2(0.0); // placeholder to silence unused warn
        let _ = k;
        let kp = e.sqrt(); // principal sqrt of i has positive imaginary part
        let pair = op
            .bloch_pair_with_k(e, kp, &BlochSettings::default())
            .unwrap();
        for p in &pair.p_plus {
            assert!((p - Complex64::new(1.0, 0.0)).norm() < 1e-9);
        }
    }

    #[test]
    fn omega_rejects_constant_potential() {
        let op = HillOperator::new(PeriodicPotential::zero());
        let err = op.omega_with_k(
            Complex64::new(1.0, 1.0),
            Complex64::new(1.0, 0.0),
            &|_, near| Ok(near),
            &BlochSettings::default(),
        );
        assert!(matches!(err, Err(Error::UnsupportedPotential(_))));
    }

    #[test]
    fn wronskian_of_bloch_pair_is_x_independent() {
        // W(ψ+, ψ-) evaluated from the periodic parts at x=0 and x=1/2 via
        // finite differences on the grid.
        let op = mathieu();
        let hm = HillMomentum::new(op.clone(), 3).unwrap();
        let e = Complex64::new(1.0, 1.0);
        let cfg = BlochSettings {
            n_grid: 512,
            substeps: 4,
            ..Default::default()
        };
        let pair = op.bloch_pair(e, &hm, &cfg).unwrap();
        let n = pair.n_grid();
        let k = pair.kp;
        let psi = |p: &Vec<Complex64>, sign: f64, i: usize| -> Complex64 {
            let x = i as f64 / n as f64;
            (Complex64::i() * k * sign * x).exp() * p[i]
        };
        let wr = |i: usize| -> Complex64 {
            let h = 1.0 / n as f64;
            let pp = psi(&pair.p_plus, 1.0, i);
            let pm = psi(&pair.p_minus, -1.0, i);
            let dpp = (psi(&pair.p_plus, 1.0, i + 1) - psi(&pair.p_plus, 1.0, i - 1)) / (2.0 * h);
            let dpm =
                (psi(&pair.p_minus, -1.0, i + 1) - psi(&pair.p_minus, -1.0, i - 1)) / (2.0 * h);
            pp * dpm - pm * dpp
        };
        let w1 = wr(n / 4);
        let w2 = wr(n / 2);
        assert!(w1.norm() > 1e-6);
        assert!((w1 - w2).norm() < 1e-4 * w1.norm());
    }
}
