//! Free additive convolution by subordination.
//!
//! For `μ ⊞ ν` the Cauchy transform factors as `G_{μ⊞ν}(z) = G_μ(ω₁(z))`, where
//! `ω₁` is the attracting fixed point of `w ↦ z + h_ν(z + h_μ(w))` with
//! `h(w) = 1/G(w) - w`. The output density is recovered on a grid by Stieltjes
//! inversion at height `eta` above the real axis; atoms of the output (which
//! exist exactly where an atom pair of the inputs has total mass above one) are
//! located in closed form and removed from the transform before inversion.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::bounds::TriangularRow;
use crate::measure::{trapezoid, Measure, MeasureError};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ConvError {
    #[error("point {re} + {im}i is not in the open upper half plane")]
    NotInUpperHalfPlane { re: f64, im: f64 },
    #[error("invalid convolution parameters: {0}")]
    Params(String),
    #[error("subordination did not converge at z = {re} + {im}i (residual {residual:e})")]
    NoConvergence { re: f64, im: f64, residual: f64 },
    #[error("mass defect {defect:e} exceeds limit {limit:e}")]
    MassDefect { defect: f64, limit: f64 },
    #[error("recovered density {value:e} at x = {x} is below the clipping floor")]
    NegativeDensity { x: f64, value: f64 },
    #[error("moment self-check failed: {what} expected {expected}, got {got}")]
    MomentDrift { what: &'static str, expected: f64, got: f64 },
    #[error("cannot convolve an empty list")]
    Empty,
    #[error("row has zero total variance")]
    ZeroVariance,
    #[error(transparent)]
    Measure(#[from] MeasureError),
}

/// A point strictly inside the upper half plane.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HalfPlanePoint(Complex64);

impl HalfPlanePoint {
    pub fn new(re: f64, im: f64) -> Result<Self, ConvError> {
        if !(im > 0.0 && im.is_finite() && re.is_finite()) {
            return Err(ConvError::NotInUpperHalfPlane { re, im });
        }
        Ok(Self(Complex64::new(re, im)))
    }

    pub fn value(&self) -> Complex64 {
        self.0
    }
}

impl TryFrom<Complex64> for HalfPlanePoint {
    type Error = ConvError;

    fn try_from(z: Complex64) -> Result<Self, ConvError> {
        Self::new(z.re, z.im)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ConvolutionParams {
    /// Inversion height as a fraction of the output support width.
    pub eta: f64,
    pub grid_points: usize,
    pub fp_tol: f64,
    pub fp_max_iter: usize,
    pub mass_defect_limit: f64,
    /// Combine heights `eta` and `2·eta` as `2·ρ(η) - ρ(2η)`.
    pub richardson: bool,
}

impl Default for ConvolutionParams {
    fn default() -> Self {
        Self { eta: 1e-7, grid_points: 4096, fp_tol: 1e-12, fp_max_iter: 2000, mass_defect_limit: 1e-2, richardson: false }
    }
}

impl ConvolutionParams {
    pub fn validate(&self) -> Result<(), ConvError> {
        let bad = |what: &str| Err(ConvError::Params(what.to_string()));
        if !(self.eta > 0.0 && self.eta.is_finite()) {
            return bad("eta must be positive");
        }
        if self.grid_points < 256 {
            return bad("grid_points must be at least 256");
        }
        if !(self.fp_tol > 0.0) {
            return bad("fp_tol must be positive");
        }
        if self.fp_max_iter == 0 {
            return bad("fp_max_iter must be positive");
        }
        if !(self.mass_defect_limit > 0.0) {
            return bad("mass_defect_limit must be positive");
        }
        Ok(())
    }

    pub fn with_grid_points(mut self, n: usize) -> Self {
        self.grid_points = n;
        self
    }
}

fn par_map<T: Sync, R: Send>(items: &[T], f: impl Fn(&T) -> R + Sync + Send) -> Vec<R> {
    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        items.par_iter().map(f).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        items.iter().map(f).collect()
    }
}

#[inline]
fn clog1p(u: Complex64) -> Complex64 {
    Complex64::new(0.5 * (u.re * (2.0 + u.re) + u.im * u.im).ln_1p(), u.im.atan2(1.0 + u.re))
}

/// Cell-exact Cauchy transform evaluator for one measure.
pub(crate) struct CauchyKernel<'a> {
    atoms: &'a [(f64, f64)],
    grid: &'a [f64],
    density: &'a [f64],
    slopes: Vec<f64>,
    /// Support centre, half width, and moments about the centre.
    center: f64,
    radius: f64,
    moments: Vec<f64>,
}

/// Number of moments kept for the expansion at infinity.
const LAURENT_TERMS: usize = 40;
/// The expansion is used when `|w - c| > LAURENT_RADII·R`.
const LAURENT_RADII: f64 = 3.0;

fn binomials(n: usize) -> Vec<Vec<f64>> {
    let mut rows: Vec<Vec<f64>> = vec![vec![1.0]];
    for k in 1..=n {
        let prev = &rows[k - 1];
        let row = (0..=k).map(|j| if j == 0 || j == k { 1.0 } else { prev[j - 1] + prev[j] }).collect();
        rows.push(row);
    }
    rows
}

/// Moments `∫ (t - c)^k μ(dt)` for `k < LAURENT_TERMS`. Each cell is expanded
/// about its midpoint so steep ramps do not cancel.
fn central_moments(atoms: &[(f64, f64)], grid: &[f64], density: &[f64], c: f64) -> Vec<f64> {
    let mut out = vec![0.0; LAURENT_TERMS];
    for &(a, m) in atoms {
        let t = a - c;
        let mut p = m;
        for v in out.iter_mut() {
            *v += p;
            p *= t;
        }
    }
    let binom = binomials(LAURENT_TERMS);
    let mut cell = vec![0.0; LAURENT_TERMS];
    let mut mpow = vec![0.0; LAURENT_TERMS];
    for k in 0..grid.len().saturating_sub(1) {
        let half = 0.5 * (grid[k + 1] - grid[k]);
        if half <= 0.0 {
            continue;
        }
        let mid = 0.5 * (grid[k] + grid[k + 1]) - c;
        let fmid = 0.5 * (density[k] + density[k + 1]);
        let s = (density[k + 1] - density[k]) / (2.0 * half);
        // ∫ v^j f(mid + v) dv over [-half, half]
        let mut hp = half;
        for (j, cj) in cell.iter_mut().enumerate() {
            *cj = if j % 2 == 0 { 2.0 * fmid * hp / (j + 1) as f64 } else { 2.0 * s * hp * half / (j + 2) as f64 };
            hp *= half;
        }
        let mut p = 1.0;
        for mp in mpow.iter_mut() {
            *mp = p;
            p *= mid;
        }
        for (kk, v) in out.iter_mut().enumerate() {
            *v += (0..=kk).map(|j| binom[kk][j] * mpow[kk - j] * cell[j]).sum::<f64>();
        }
    }
    out
}

impl<'a> CauchyKernel<'a> {
    pub(crate) fn new(mu: &'a Measure) -> Self {
        let grid = mu.grid();
        let density = mu.density_values();
        let slopes = grid.windows(2).zip(density.windows(2)).map(|(x, f)| (f[1] - f[0]) / (x[1] - x[0])).collect();
        let (lo, hi) = mu.support();
        let center = 0.5 * (lo + hi);
        let moments = central_moments(mu.atoms(), grid, density, center);
        Self { atoms: mu.atoms(), grid, density, slopes, center, radius: 0.5 * (hi - lo), moments }
    }

    /// `(G(w), h(w), h'(w))` with `h = 1/G - w`. Far from the support the
    /// moment series gives `h` without the cancellation in `1/G - w`: with
    /// `u = 1/(w - c)`, `S = Σ m_k u^k` and `D = S - 1`, one has `G = u·S`,
    /// `h = -(w - c)·D/S - c` and `h' = (u·S' - S·D)/S²`.
    pub(crate) fn eval_h(&self, w: Complex64) -> (Complex64, Complex64, Complex64) {
        let d = w - self.center;
        if d.norm() > LAURENT_RADII * self.radius {
            let u = d.inv();
            let mut up = u;
            let mut dsum = Complex64::new(0.0, 0.0);
            let mut usp = Complex64::new(0.0, 0.0);
            for (k, &m) in self.moments.iter().enumerate().skip(1) {
                dsum += m * up;
                usp += (k as f64 * m) * up;
                up *= u;
            }
            let s = dsum + self.moments[0];
            let g = u * s;
            let h = -d * dsum / s - self.center;
            let dh = (usp - s * dsum) / (s * s);
            return (g, h, dh);
        }
        let (g, dg) = self.eval(w);
        let f = g.inv();
        (g, f - w, -dg * f * f - 1.0)
    }

    /// `(G(w), G'(w))`.
    ///
    /// On a cell `[a, b]` of width `h` with `f(t) = f(a) + s·(t - a)`, put
    /// `u = h/(w - b)` and `L = log(1 + u) = ∫ dt/(w - t)`; then
    /// `∫ f(t)/(w-t) dt = f(a)·L + s·((w - a)·L - h)`. Using `log1p` keeps `L`
    /// accurate on cells much narrower than their distance to `w`.
    pub(crate) fn eval(&self, w: Complex64) -> (Complex64, Complex64) {
        let mut g = Complex64::new(0.0, 0.0);
        let mut dg = Complex64::new(0.0, 0.0);
        for &(a, m) in self.atoms {
            let r = (w - a).inv();
            g += m * r;
            dg -= m * r * r;
        }
        if let Some(&x0) = self.grid.first() {
            let mut ia = (w - x0).inv();
            for k in 0..self.slopes.len() {
                let h = self.grid[k + 1] - self.grid[k];
                let db = w - self.grid[k + 1];
                let ib = db.inv();
                let u = h * ib;
                let l = clog1p(u);
                let s = self.slopes[k];
                let f = self.density[k];
                g += f * l + s * ((db + h) * l - h);
                dg -= f * h * ia * ib + s * (u - l);
                ia = ib;
            }
        }
        (g, dg)
    }
}

/// `G_μ(z) = ∫ μ(dt) / (z - t)`.
pub fn cauchy_transform(mu: &Measure, z: HalfPlanePoint) -> Complex64 {
    CauchyKernel::new(mu).eval(z.value()).0
}


struct Subordination<'a> {
    mu: CauchyKernel<'a>,
    nu: CauchyKernel<'a>,
    tol: f64,
    max_iter: usize,
    /// Newton steps taken after convergence.
    polish_steps: usize,
}

struct Step {
    /// `w - T(w)`.
    phi: Complex64,
    dphi: Complex64,
    /// `G_μ(w)`, equal to `G_{μ⊞ν}(z)` at the fixed point.
    g_mu: Complex64,
}

const STALL_FACTOR: f64 = 1e5;

impl<'a> Subordination<'a> {
    fn new(mu: &'a Measure, nu: &'a Measure, params: &ConvolutionParams) -> Self {
        Self { mu: CauchyKernel::new(mu), nu: CauchyKernel::new(nu), tol: params.fp_tol, max_iter: params.fp_max_iter, polish_steps: 2 }
    }

    fn step(&self, z: Complex64, w: Complex64) -> Step {
        let (gm, hm, dhm) = self.mu.eval_h(w);
        let w2 = z + hm;
        let (_, hn, dhn) = self.nu.eval_h(w2);
        Step { phi: w - z - hn, dphi: 1.0 - dhn * dhm, g_mu: gm }
    }

    fn converged(&self, s: &Step, w: Complex64) -> bool {
        s.phi.norm() < self.tol * (1.0 + w.norm())
    }

    /// A few extra Newton steps past the tolerance, kept while the residual
    /// falls. Recovering the density next to an atom subtracts two large
    /// terms, so `ω` is wanted to rounding precision.
    fn polish(&self, z: Complex64, mut w: Complex64, mut s: Step) -> (Complex64, Complex64) {
        for _ in 0..self.polish_steps {
            let next = w - s.phi / s.dphi;
            if !(next.is_finite() && next.im >= z.im) {
                break;
            }
            let sn = self.step(z, next);
            if !(sn.phi.norm() < s.phi.norm()) {
                break;
            }
            w = next;
            s = sn;
        }
        (w, s.g_mu)
    }

    /// Loose acceptance for a stalled solve: the residual sits at the rounding
    /// floor and is small against the distance to the boundary `Im ω = Im z`.
    fn acceptable(z: Complex64, res: f64, w: Complex64, tol: f64) -> bool {
        res < STALL_FACTOR * tol * (1.0 + w.norm()) && w.im >= z.im && res < 1e-3 * w.im
    }

    /// Solves for `ω₁(z)` starting from `guess`. Newton steps are taken when they
    /// stay in the half plane and reduce the residual; otherwise a Picard step
    /// (damped by 1/2 once the residual stops decreasing). A solve that stalls
    /// within `STALL_FACTOR·tol` is accepted: that is the rounding floor of `G`.
    fn solve(&self, z: Complex64, guess: Complex64) -> Result<(Complex64, Complex64), ConvError> {
        const STALL_STEPS: usize = 4;
        let mut w = if guess.im >= z.im && guess.is_finite() { guess } else { z };
        let mut s = self.step(z, w);
        let mut last_res = f64::INFINITY;
        let mut best = (s.phi.norm(), w, s.g_mu);
        let mut stall = 0;
        for _ in 0..self.max_iter {
            if self.converged(&s, w) {
                return Ok(self.polish(z, w, s));
            }
            let res = s.phi.norm();
            if res < best.0 {
                if res < 0.5 * best.0 {
                    stall = 0;
                }
                best = (res, w, s.g_mu);
            } else {
                stall += 1;
            }
            if stall >= STALL_STEPS && Self::acceptable(z, best.0, best.1, self.tol) {
                return Ok((best.1, best.2));
            }
            let delta = s.phi / s.dphi;
            let newton = w - delta;
            if newton.is_finite() && newton.im >= z.im {
                let sn = self.step(z, newton);
                if delta.norm() < self.tol * (1.0 + w.norm()) && Self::acceptable(z, sn.phi.norm(), newton, self.tol) {
                    return Ok(self.polish(z, newton, sn));
                }
                if sn.phi.norm() < res {
                    w = newton;
                    s = sn;
                    last_res = res;
                    continue;
                }
            }
            let picard = w - s.phi;
            let next = if res >= last_res { 0.5 * (w + picard) } else { picard };
            last_res = res;
            w = next;
            s = self.step(z, w);
        }
        if self.converged(&s, w) {
            return Ok(self.polish(z, w, s));
        }
        if Self::acceptable(z, best.0, best.1, self.tol) {
            return Ok((best.1, best.2));
        }
        Err(ConvError::NoConvergence { re: z.re, im: z.im, residual: best.0 })
    }

    /// Solves at `z` by continuation down from a point high above the axis.
    /// The ratio between successive heights shrinks towards 1 after a failed
    /// step and grows back after a successful one.
    fn solve_cold(&self, z: Complex64, scale: f64) -> Result<(Complex64, Complex64), ConvError> {
        const MAX_STEPS: usize = 400;
        let mut y = scale.max(z.im);
        let mut w = Complex64::new(z.re, y);
        let mut prev: Option<(f64, Complex64)> = None;
        let mut ratio: f64 = 0.25;
        let mut last_err = None;
        let (omega, g) = self.solve(Complex64::new(z.re, y), w)?;
        if y <= z.im {
            return Ok((omega, g));
        }
        w = omega;
        for _ in 0..MAX_STEPS {
            let next = (ratio * y).max(z.im);
            // extrapolate linearly in the height
            let guess = match prev {
                Some((yp, wp)) => w + (w - wp) * ((next - y) / (y - yp)),
                None => w,
            };
            let guess = if guess.im > next { guess } else { w };
            match self.solve(Complex64::new(z.re, next), guess) {
                Ok((omega, g)) => {
                    if next <= z.im {
                        return Ok((omega, g));
                    }
                    prev = Some((y, w));
                    y = next;
                    w = omega;
                    ratio = (ratio * ratio).max(0.25);
                }
                Err(e) => {
                    last_err = Some(e);
                    ratio = ratio.sqrt();
                    if ratio > 1.0 - 1e-6 {
                        break;
                    }
                }
            }
        }
        Err(last_err.unwrap_or(ConvError::NoConvergence { re: z.re, im: z.im, residual: f64::INFINITY }))
    }

    /// `G_{μ⊞ν}` at `x + i·eta` for every `x`, continued along the list in
    /// fixed-size chunks (each chunk starts cold, so results do not depend on
    /// how chunks are scheduled).
    fn transform_on(&self, xs: &[f64], eta: f64, scale: f64) -> Result<Vec<(Complex64, Complex64)>, ConvError> {
        const CHUNK: usize = 128;
        let run_chunk = |chunk: &[f64]| -> Result<Vec<(Complex64, Complex64)>, ConvError> {
            let mut out = Vec::with_capacity(chunk.len());
            let mut prev: Option<(f64, Complex64)> = None;
            let mut prev2: Option<(f64, Complex64)> = None;
            for &x in chunk {
                let z = Complex64::new(x, eta);
                let (omega, g) = match (prev, prev2) {
                    (Some((x1, w1)), Some((x2, w2))) if x1 != x2 => {
                        let guess = w1 + (w1 - w2) * ((x - x1) / (x1 - x2));
                        self.solve(z, guess).or_else(|_| self.solve_cold(z, scale))?
                    }
                    (Some((x1, w1)), _) => self.solve(z, w1 + (x - x1)).or_else(|_| self.solve_cold(z, scale))?,
                    _ => self.solve_cold(z, scale)?,
                };
                prev2 = prev;
                prev = Some((x, omega));
                out.push((omega, g));
            }
            Ok(out)
        };
        let chunks: Vec<&[f64]> = xs.chunks(CHUNK).collect();
        let parts = par_map(&chunks, |c| run_chunk(c));
        let mut out = Vec::with_capacity(xs.len());
        for p in parts {
            out.extend(p?);
        }
        Ok(out)
    }

    /// Independent warm-started solves at `x + i·eta`.
    fn solve_warm(&self, pts: &[(f64, Complex64)], eta: f64, scale: f64) -> Result<Vec<(Complex64, Complex64)>, ConvError> {
        let chunks: Vec<&[(f64, Complex64)]> = pts.chunks(64).collect();
        let parts = par_map(&chunks, |c| {
            c.iter()
                .map(|&(x, guess)| {
                    let z = Complex64::new(x, eta);
                    self.solve(z, guess).or_else(|_| self.solve_cold(z, scale))
                })
                .collect::<Result<Vec<_>, _>>()
        });
        let mut out = Vec::with_capacity(pts.len());
        for p in parts {
            out.extend(p?);
        }
        Ok(out)
    }
}

/// `ω₁(z)`, the subordination function of `μ ⊞ ν` with respect to `μ`.
pub fn subordinator(mu: &Measure, nu: &Measure, z: HalfPlanePoint, params: &ConvolutionParams) -> Result<Complex64, ConvError> {
    params.validate()?;
    let s = Subordination::new(mu, nu, params);
    let (lo_m, hi_m) = mu.support();
    let (lo_n, hi_n) = nu.support();
    let scale = 1.0 + (hi_m - lo_m) + (hi_n - lo_n) + lo_m.abs().max(hi_m.abs()) + lo_n.abs().max(hi_n.abs());
    s.solve_cold(z.value(), scale).map(|(w, _)| w)
}

/// Diagnostics of one convolution.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ConvReport {
    /// `|1 - recovered mass|` before renormalization.
    pub mass_defect: f64,
    pub mean_error: f64,
    pub variance_error: f64,
}

impl ConvReport {
    fn merge(self, other: ConvReport) -> ConvReport {
        ConvReport {
            mass_defect: self.mass_defect.max(other.mass_defect),
            mean_error: self.mean_error.max(other.mean_error),
            variance_error: self.variance_error.max(other.variance_error),
        }
    }
}

/// Atoms of `μ ⊞ ν`: `a + b` with mass `μ{a} + ν{b} - 1` whenever that is positive.
pub fn convolution_atoms(mu: &Measure, nu: &Measure) -> Vec<(f64, f64)> {
    let mut out = Vec::new();
    for &(a, p) in mu.atoms() {
        for &(b, q) in nu.atoms() {
            if p + q > 1.0 {
                out.push((a + b, p + q - 1.0));
            }
        }
    }
    out
}

/// Relative density floor used to locate the support on the coarse pass.
const SUPPORT_THRESHOLD: f64 = 1e-4;
/// Values below this (before clipping) indicate a failed solve, not rounding.
const NEGATIVE_FLOOR: f64 = -1e-6;
/// Cells whose midpoint misses linear interpolation by less mass than this are
/// not refined.
const REFINE_MASS_TOL: f64 = 1e-9;

pub fn free_convolve(mu: &Measure, nu: &Measure, params: &ConvolutionParams) -> Result<Measure, ConvError> {
    free_convolve_report(mu, nu, params).map(|(m, _)| m)
}

struct Recovery<'a> {
    solver: Subordination<'a>,
    atoms: Vec<(f64, f64)>,
    eta: f64,
    scale: f64,
}

impl Recovery<'_> {
    fn density(&self, x: f64, g: Complex64) -> f64 {
        let z = Complex64::new(x, self.eta);
        let gc = self.atoms.iter().fold(g, |acc, &(a, m)| acc - m / (z - a));
        -gc.im / std::f64::consts::PI
    }

    /// `(ω, ρ)` along a sorted grid by continuation.
    fn sweep(&self, xs: &[f64]) -> Result<(Vec<Complex64>, Vec<f64>), ConvError> {
        let sol = self.solver.transform_on(xs, self.eta, self.scale)?;
        let rho = xs.iter().zip(&sol).map(|(&x, s)| self.density(x, s.1)).collect();
        Ok((sol.into_iter().map(|s| s.0).collect(), rho))
    }
}

/// [`free_convolve`] plus its diagnostics.
///
/// A coarse uniform pass over the padded Minkowski sum of the supports finds
/// where the output density lives; the grid is then rebuilt there and refined by
/// midpoint bisection wherever linear interpolation misrepresents the mass,
/// until `grid_points` is reached.
pub fn free_convolve_report(mu: &Measure, nu: &Measure, params: &ConvolutionParams) -> Result<(Measure, ConvReport), ConvError> {
    params.validate()?;
    // convolving with a point mass is a translation
    if let Some(a) = mu.point_mass() {
        return Ok((nu.affine_pushforward(1.0, -a)?, ConvReport::default()));
    }
    if let Some(b) = nu.point_mass() {
        return Ok((mu.affine_pushforward(1.0, -b)?, ConvReport::default()));
    }

    let (lo_m, hi_m) = mu.support();
    let (lo_n, hi_n) = nu.support();
    let lo = lo_m + lo_n;
    let hi = hi_m + hi_n;
    let width = hi - lo;
    let eta = params.eta * width;
    let pad = 4.0 * eta;
    let atoms = convolution_atoms(mu, nu);
    let atomic_mass: f64 = atoms.iter().map(|a| a.1).sum();
    // only atom subtraction needs the extra digits
    let solver = Subordination { polish_steps: if atoms.is_empty() { 0 } else { 2 }, ..Subordination::new(mu, nu, params) };
    let rec = Recovery { solver, atoms, eta, scale: width + lo.abs().max(hi.abs()) };
    let uniform = |a: f64, b: f64, n: usize| -> Vec<f64> { (0..n).map(|i| a + (b - a) * i as f64 / (n - 1) as f64).collect() };
    let base_points = (params.grid_points / 8).max(64);

    let coarse_x = uniform(lo - pad, hi + pad, base_points);
    let (_, coarse) = rec.sweep(&coarse_x)?;
    let peak = coarse.iter().copied().fold(0.0, f64::max);
    let (a, b) = if peak > 0.0 {
        let thr = SUPPORT_THRESHOLD * peak;
        let first = coarse.iter().position(|&d| d > thr).unwrap_or(0);
        let last = coarse.iter().rposition(|&d| d > thr).unwrap_or(coarse.len() - 1);
        (coarse_x[first.saturating_sub(1)], coarse_x[(last + 1).min(coarse_x.len() - 1)])
    } else {
        (lo - pad, hi + pad)
    };

    let mut xs = uniform(a, b, base_points);
    let (mut omega, mut rho) = rec.sweep(&xs)?;
    // best-first bisection: every cell caches its midpoint solve and the mass
    // error of linear interpolation there; each round splits the worst cells
    let mut cache: Vec<Option<(f64, Complex64, f64)>> = vec![None; xs.len() - 1];
    loop {
        let todo: Vec<usize> = (0..cache.len()).filter(|&i| cache[i].is_none()).collect();
        let pts: Vec<(f64, Complex64)> = todo.iter().map(|&i| (0.5 * (xs[i] + xs[i + 1]), 0.5 * (omega[i] + omega[i + 1]))).collect();
        let sol = rec.solver.solve_warm(&pts, eta, rec.scale)?;
        for ((&i, &(x, _)), &(w, g)) in todo.iter().zip(&pts).zip(&sol) {
            cache[i] = Some((x, w, rec.density(x, g)));
        }
        let budget = params.grid_points.saturating_sub(xs.len());
        if budget == 0 {
            break;
        }
        let mut ranked: Vec<(f64, usize)> = cache
            .iter()
            .enumerate()
            .filter_map(|(i, c)| {
                let (x, _, r) = c.expect("filled");
                let err = (r - 0.5 * (rho[i] + rho[i + 1])).abs() * (xs[i + 1] - xs[i]);
                (err > REFINE_MASS_TOL && x > xs[i] && x < xs[i + 1]).then_some((err, i))
            })
            .collect();
        if ranked.is_empty() {
            break;
        }
        ranked.sort_by(|p, q| q.0.total_cmp(&p.0).then(p.1.cmp(&q.1)));
        ranked.truncate((budget / 4).max(8).min(budget));
        let mut split = vec![false; cache.len()];
        for &(_, i) in &ranked {
            split[i] = true;
        }
        let cap = xs.len() + ranked.len();
        let (mut nx, mut nw, mut nr, mut nc) = (Vec::with_capacity(cap), Vec::with_capacity(cap), Vec::with_capacity(cap), Vec::with_capacity(cap));
        for i in 0..xs.len() {
            nx.push(xs[i]);
            nw.push(omega[i]);
            nr.push(rho[i]);
            if i + 1 == xs.len() {
                break;
            }
            if split[i] {
                let (x, w, r) = cache[i].expect("filled");
                nx.push(x);
                nw.push(w);
                nr.push(r);
                nc.extend([None, None]);
            } else {
                nc.push(cache[i]);
            }
        }
        xs = nx;
        omega = nw;
        rho = nr;
        cache = nc;
    }

    let mut density = if params.richardson {
        let doubled = Recovery { eta: 2.0 * eta, ..rec };
        let (_, r2) = doubled.sweep(&xs)?;
        rho.iter().zip(r2).map(|(a, b)| 2.0 * a - b).collect()
    } else {
        for (&x, &d) in xs.iter().zip(&rho) {
            if d < NEGATIVE_FLOOR {

                return Err(ConvError::NegativeDensity { x, value: d });
            }
        }
        rho
    };
    density.iter_mut().for_each(|d| *d = d.max(0.0));
    let atoms = convolution_atoms(mu, nu);
    let mass = atomic_mass + trapezoid(&xs, &density);
    let mass_defect = (1.0 - mass).abs();
    if mass_defect > params.mass_defect_limit {
        return Err(ConvError::MassDefect { defect: mass_defect, limit: params.mass_defect_limit });
    }
    // keep atom masses exact, rescale only the continuous part
    let cont_mass = mass - atomic_mass;
    if cont_mass > 0.0 {
        let f = (1.0 - atomic_mass) / cont_mass;
        density.iter_mut().for_each(|d| *d *= f);
    }
    let out = if density.iter().all(|&d| d == 0.0) {
        Measure::normalized(atoms, Vec::new(), Vec::new())?
    } else {
        Measure::normalized(atoms, xs, density)?
    };

    let mean_expected = mu.mean() + nu.mean();
    let var_expected = mu.variance() + nu.variance();
    let report = ConvReport {
        mass_defect,
        mean_error: (out.mean() - mean_expected).abs(),
        variance_error: (out.variance() - var_expected).abs(),
    };
    let spread = var_expected.sqrt().max(1.0);
    if report.mean_error > MEAN_TOLERANCE * spread {
        return Err(ConvError::MomentDrift { what: "mean", expected: mean_expected, got: out.mean() });
    }
    if report.variance_error > VARIANCE_TOLERANCE * spread * spread {
        return Err(ConvError::MomentDrift { what: "variance", expected: var_expected, got: out.variance() });
    }
    Ok((out, report))
}

/// Mean additivity tolerance of the self-check, relative to `max(1, sd)`.
pub const MEAN_TOLERANCE: f64 = 1e-4;
/// Variance additivity tolerance of the self-check, relative to `max(1, var)`.
pub const VARIANCE_TOLERANCE: f64 = 1e-3;

/// Left fold `((μ₁ ⊞ μ₂) ⊞ μ₃) ⊞ …`.
pub fn free_convolve_n(measures: &[Measure], params: &ConvolutionParams) -> Result<Measure, ConvError> {
    free_convolve_n_report(measures, params).map(|(m, _)| m)
}

pub fn free_convolve_n_report(measures: &[Measure], params: &ConvolutionParams) -> Result<(Measure, ConvReport), ConvError> {
    let (first, rest) = measures.split_first().ok_or(ConvError::Empty)?;
    let mut acc = first.clone();
    let mut report = ConvReport::default();
    for m in rest {
        let (next, r) = free_convolve_report(&acc, m, params)?;
        acc = next;
        report = report.merge(r);
    }
    Ok((acc, report))
}

/// Balanced pairwise fold. Identical pairs on the same level are convolved
/// once, so an i.i.d. row of length `n` costs `O(log n)` convolutions.
pub fn free_convolve_tree(measures: &[Measure], params: &ConvolutionParams) -> Result<(Measure, ConvReport), ConvError> {
    if measures.is_empty() {
        return Err(ConvError::Empty);
    }
    let mut level: Vec<Measure> = measures.to_vec();
    let mut report = ConvReport::default();
    while level.len() > 1 {
        let mut next: Vec<Measure> = Vec::with_capacity(level.len().div_ceil(2));
        let mut done: Vec<(usize, usize)> = Vec::new();
        for (i, pair) in level.chunks(2).enumerate() {
            match pair {
                [a, b] => {
                    let reuse = done.iter().find(|&&(j, _)| {
                        let prev = &level[2 * j..2 * j + 2];
                        prev[0] == *a && prev[1] == *b
                    });
                    if let Some(&(_, idx)) = reuse {
                        next.push(next[idx].clone());
                    } else {
                        let (m, r) = free_convolve_report(a, b, params)?;
                        report = report.merge(r);
                        done.push((i, next.len()));
                        next.push(m);
                    }
                }
                [a] => next.push(a.clone()),
                _ => unreachable!(),
            }
        }
        level = next;
    }
    Ok((level.pop().expect("one left"), report))
}

/// `μ⁽ⁿ⁾ = ⊞ⱼ μ_{n,j}` with `μ_{n,j}` the law of `X/Bₙ`.
pub fn clt_sum(row: &TriangularRow, params: &ConvolutionParams) -> Result<Measure, ConvError> {
    clt_sum_report(row, params).map(|(m, _)| m)
}

pub fn clt_sum_report(row: &TriangularRow, params: &ConvolutionParams) -> Result<(Measure, ConvReport), ConvError> {
    let b = row.b_n();
    if !(b > 0.0) {
        return Err(ConvError::ZeroVariance);
    }
    let scaled = row.measures().iter().map(|m| m.affine_pushforward(b, 0.0)).collect::<Result<Vec<_>, _>>()?;
    free_convolve_tree(&scaled, params)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn semicircle_g(z: Complex64) -> Complex64 {
        // root of G² - zG + 1 = 0 with Im G < 0 for Im z > 0
        let s = (z * z - 4.0).sqrt();
        let a = (z - s) / 2.0;
        let b = (z + s) / 2.0;
        if a.im < 0.0 {
            a
        } else {
            b
        }
    }

    #[test]
    fn cauchy_of_point_mass_and_rademacher() {
        let z = HalfPlanePoint::new(0.0, 1.0).unwrap();
        let g = cauchy_transform(&Measure::dirac(0.0), z);
        assert_abs_diff_eq!(g.re, 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(g.im, -1.0, epsilon = 1e-15);
        let z = Complex64::new(0.0, 2.0);
        let g = cauchy_transform(&Measure::rademacher(), z.try_into().unwrap());
        let want = z / (z * z - 1.0);
        assert!((g - want).norm() < 1e-15);
    }

    #[test]
    fn cauchy_of_uniform_matches_closed_form() {
        let u = Measure::uniform(-1.0, 1.0).unwrap();
        for z in [Complex64::new(0.3, 0.01), Complex64::new(-2.0, 0.5), Complex64::new(5.0, 3.0)] {
            let want = 0.5 * ((z + 1.0) / (z - 1.0)).ln();
            let got = cauchy_transform(&u, z.try_into().unwrap());
            assert!((got - want).norm() < 1e-13, "{z}: {got} vs {want}");
        }
    }

    #[test]
    fn cauchy_of_semicircle_grid() {
        let w = crate::semicircle::SemicircleLaw::standard().as_measure(4096).unwrap();
        let z = Complex64::new(0.0, 1.0);
        let got = cauchy_transform(&w, z.try_into().unwrap());
        let want = semicircle_g(z);
        assert!((got - want).norm() < 1e-6, "{got} vs {want}");
        assert!(got.im < 0.0);
    }

    #[test]
    fn derivative_matches_finite_difference() {
        let mu = Measure::normalized(vec![(0.3, 0.25)], vec![-1.0, -0.2, 0.5, 1.5], vec![0.1, 0.6, 0.4, 0.0]).unwrap();
        let k = CauchyKernel::new(&mu);
        let w = Complex64::new(0.1, 0.2);
        let h = 1e-6;
        let fd = (k.eval(w + h).0 - k.eval(w - h).0) / (2.0 * h);
        assert!((fd - k.eval(w).1).norm() < 1e-6);
    }

    #[test]
    fn series_agrees_with_cells_outside_the_support() {
        let mu = Measure::normalized(vec![(0.3, 0.25), (-1.2, 0.1)], vec![-1.0, -0.2, -0.2 + 1e-7, 0.5, 1.5], vec![0.1, 0.6, 2.0, 0.4, 0.0]).unwrap();
        let k = CauchyKernel::new(&mu);
        for w in [Complex64::new(5.0, 0.3), Complex64::new(-4.0, 1e-6), Complex64::new(0.1, 4.2)] {
            let (g, dg) = k.eval(w);
            let (gs, hs, dhs) = k.eval_h(w);
            assert!((g - gs).norm() < 1e-14 * g.norm());
            assert!((g.inv() - w - hs).norm() < 1e-12);
            assert!((-dg / (g * g) - 1.0 - dhs).norm() < 1e-11);
        }
        // far away h(w) ≈ -mean - var/w
        let w = Complex64::new(3e4, 1.0);
        let (_, h, _) = k.eval_h(w);
        let expect = -mu.mean() - mu.variance() / w;
        assert!((h - expect).norm() < 1e-3 * (mu.variance() / w).norm());
    }

    #[test]
    fn rejects_lower_half_plane() {
        assert!(HalfPlanePoint::new(0.0, 0.0).is_err());
        assert!(HalfPlanePoint::new(0.0, -1.0).is_err());
    }

    #[test]
    fn subordinator_with_point_mass_at_zero_is_identity() {
        let mu = Measure::uniform(-1.0, 2.0).unwrap();
        let z = HalfPlanePoint::new(0.4, 0.3).unwrap();
        let w = subordinator(&mu, &Measure::dirac(0.0), z, &ConvolutionParams::default()).unwrap();
        assert!((w - z.value()).norm() < 1e-12);
    }

    #[test]
    fn rademacher_pair_subordinator_closed_form() {
        // h(w) = -1/w for Rademacher, so ω = z - 1/(z - 1/ω), i.e. zω² - 2ω... solved as
        // ω(zω - 2) = z²ω - z - ... ; by symmetry ω₁ = ω₂ = ω with ω = z + h(ω) = z - 1/ω,
        // giving ω² - zω + 1 = 0 and the root with Im ω > Im z... see derivation below.
        let z = Complex64::new(0.0, 2.0);
        // ω = (z + √(z² - 4))/2 taking the root in the upper half plane with |ω| > 1
        let s = (z * z - 4.0).sqrt();
        let cands = [(z + s) / 2.0, (z - s) / 2.0];
        let want = cands.into_iter().find(|w| w.im > z.im).unwrap();
        let r = Measure::rademacher();
        let got = subordinator(&r, &r, z.try_into().unwrap(), &ConvolutionParams::default()).unwrap();
        assert!((got - want).norm() < 1e-8, "{got} vs {want}");
    }

    #[test]
    fn atoms_of_convolution() {
        let a = Measure::discrete(&[(0.0, 0.75), (1.0, 0.25)]).unwrap();
        let atoms = convolution_atoms(&a, &a);
        assert_eq!(atoms, vec![(0.0, 0.5)]);
        assert!(convolution_atoms(&Measure::rademacher(), &Measure::rademacher()).is_empty());
    }

    #[test]
    fn translation_identity() {
        let mu = Measure::uniform(-1.0, 1.0).unwrap();
        let out = free_convolve(&mu, &Measure::dirac(0.7), &ConvolutionParams::default()).unwrap();
        assert!(out.kolmogorov_distance(&Measure::uniform(-0.3, 1.7).unwrap()) <= 1e-6);
        let pts = free_convolve_n(&[Measure::dirac(0.25), Measure::dirac(-1.0)], &ConvolutionParams::default()).unwrap();
        assert_eq!(pts, Measure::dirac(-0.75));
    }

    #[test]
    fn params_validation() {
        let p = ConvolutionParams { grid_points: 100, ..Default::default() };
        assert!(p.validate().is_err());
        let p = ConvolutionParams { eta: 0.0, ..Default::default() };
        assert!(p.validate().is_err());
        assert!(free_convolve_n(&[], &ConvolutionParams::default()).is_err());
    }
}
