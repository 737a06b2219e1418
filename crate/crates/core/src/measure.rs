//! Compactly supported probability measures on the real line.
//!
//! A [`Measure`] is a finite list of atoms plus a piecewise-linear density on a
//! strictly increasing grid of breakpoints (zero outside the grid). Every
//! input, truncation and convolution output in this crate uses this one
//! representation, so all functionals (CDFs, moments, tail integrals,
//! Kolmogorov distance) are computed cell-exactly.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::bounds::GrowthFunction;

/// Total-mass deviation that constructors silently renormalize away.
pub const RENORMALIZE_LIMIT: f64 = 1e-6;
/// Atoms closer than this fraction of the support width are merged.
pub const ATOM_MERGE_REL: f64 = 1e-12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MeasureError {
    #[error("measure has neither atoms nor a density grid")]
    Empty,
    #[error("grid has {grid} breakpoints but {density} density values")]
    LengthMismatch { grid: usize, density: usize },
    #[error("a density grid needs at least two breakpoints, got {0}")]
    ShortGrid(usize),
    #[error("grid is not strictly increasing at index {0}")]
    UnsortedGrid(usize),
    #[error("density value {value} at index {index} is negative or not finite")]
    BadDensity { index: usize, value: f64 },
    #[error("atom at {position} has invalid mass {mass}")]
    BadAtom { position: f64, mass: f64 },
    #[error("non-finite breakpoint or atom position")]
    NonFinite,
    #[error("total mass {0} deviates from 1 by more than {RENORMALIZE_LIMIT}")]
    Mass(f64),
    #[error("pushforward scale must be finite and nonzero, got {0}")]
    ZeroScale(f64),
    #[error("invalid truncation window [{t}, {tau}]: need t < 0 < tau")]
    InvalidWindow { t: f64, tau: f64 },
    #[error("growth function {label} returned {value} at x = {x}")]
    BadGrowth { label: String, x: f64, value: f64 },
}

/// Window `I = [t, tau]` with `t < 0 < tau`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TruncationWindow {
    t: f64,
    tau: f64,
}

impl TruncationWindow {
    pub fn new(t: f64, tau: f64) -> Result<Self, MeasureError> {
        if !(t < 0.0 && tau > 0.0 && t.is_finite() && tau.is_finite()) {
            return Err(MeasureError::InvalidWindow { t, tau });
        }
        Ok(Self { t, tau })
    }

    /// `[-c, c]`.
    pub fn symmetric(c: f64) -> Result<Self, MeasureError> {
        Self::new(-c, c)
    }

    pub fn t(&self) -> f64 {
        self.t
    }

    pub fn tau(&self) -> f64 {
        self.tau
    }

    pub fn contains(&self, x: f64) -> bool {
        self.t <= x && x <= self.tau
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct MeasureRepr {
    atoms: Vec<[f64; 2]>,
    grid: Vec<f64>,
    density: Vec<f64>,
}

/// Atoms plus a piecewise-linear density. Immutable after construction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "MeasureRepr", into = "MeasureRepr")]
pub struct Measure {
    /// Sorted by position, masses strictly positive.
    atoms: Vec<(f64, f64)>,
    /// `atom_cum[i]` is the total mass of `atoms[..=i]`.
    atom_cum: Vec<f64>,
    grid: Vec<f64>,
    density: Vec<f64>,
    /// `cell_cum[k]` is the density integral over `[grid[0], grid[k]]`.
    cell_cum: Vec<f64>,
}

impl TryFrom<MeasureRepr> for Measure {
    type Error = MeasureError;

    fn try_from(r: MeasureRepr) -> Result<Self, Self::Error> {
        Measure::new(r.atoms.into_iter().map(|[x, m]| (x, m)).collect(), r.grid, r.density)
    }
}

impl From<Measure> for MeasureRepr {
    fn from(m: Measure) -> Self {
        MeasureRepr {
            atoms: m.atoms.iter().map(|&(x, w)| [x, w]).collect(),
            grid: m.grid,
            density: m.density,
        }
    }
}

// 8-point Gauss-Legendre rule on [-1, 1]; exact for polynomials of degree <= 15.
const GL_NODES: [f64; 4] = [
    0.183_434_642_495_649_8,
    0.525_532_409_916_329,
    0.796_666_477_413_626_7,
    0.960_289_856_497_536_3,
];
const GL_WEIGHTS: [f64; 4] = [
    0.362_683_783_378_362,
    0.313_706_645_877_887_3,
    0.222_381_034_453_374_5,
    0.101_228_536_290_376_3,
];

fn gauss_legendre(a: f64, b: f64, f: &impl Fn(f64) -> f64) -> f64 {
    let mid = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let mut acc = 0.0;
    for (node, weight) in GL_NODES.iter().zip(GL_WEIGHTS) {
        acc += weight * (f(mid - half * node) + f(mid + half * node));
    }
    acc * half
}

/// Which endpoints of an integration region are included (matters for atoms only).
#[derive(Debug, Clone, Copy)]
struct Region {
    lo: f64,
    hi: f64,
    closed: bool,
}

impl Region {
    fn contains(&self, x: f64) -> bool {
        if self.closed {
            self.lo <= x && x <= self.hi
        } else {
            self.lo < x && x < self.hi
        }
    }
}

impl Measure {
    /// Validates and builds a measure. Positions are sorted and near-duplicate
    /// atoms merged; a total mass within [`RENORMALIZE_LIMIT`] of 1 is rescaled
    /// to exactly 1, anything further off is rejected.
    pub fn new(atoms: Vec<(f64, f64)>, grid: Vec<f64>, density: Vec<f64>) -> Result<Self, MeasureError> {
        let m = Self::build(atoms, grid, density)?;
        let total = m.raw_total();
        if (total - 1.0).abs() > RENORMALIZE_LIMIT {
            return Err(MeasureError::Mass(total));
        }
        Ok(m.scaled(1.0 / total))
    }

    /// Like [`Measure::new`] but rescales any positive finite total mass to 1.
    pub fn normalized(atoms: Vec<(f64, f64)>, grid: Vec<f64>, density: Vec<f64>) -> Result<Self, MeasureError> {
        let m = Self::build(atoms, grid, density)?;
        let total = m.raw_total();
        if !(total > 0.0 && total.is_finite()) {
            return Err(MeasureError::Mass(total));
        }
        Ok(m.scaled(1.0 / total))
    }

    fn build(mut atoms: Vec<(f64, f64)>, grid: Vec<f64>, density: Vec<f64>) -> Result<Self, MeasureError> {
        if grid.len() != density.len() {
            return Err(MeasureError::LengthMismatch { grid: grid.len(), density: density.len() });
        }
        if grid.len() == 1 {
            return Err(MeasureError::ShortGrid(1));
        }
        if atoms.is_empty() && grid.is_empty() {
            return Err(MeasureError::Empty);
        }
        for &(x, m) in &atoms {
            if !x.is_finite() {
                return Err(MeasureError::NonFinite);
            }
            if !(m > 0.0 && m.is_finite()) {
                return Err(MeasureError::BadAtom { position: x, mass: m });
            }
        }
        if grid.iter().any(|x| !x.is_finite()) {
            return Err(MeasureError::NonFinite);
        }
        if let Some(i) = grid.windows(2).position(|w| w[0] >= w[1]) {
            return Err(MeasureError::UnsortedGrid(i + 1));
        }
        if let Some((index, &value)) = density.iter().enumerate().find(|(_, v)| !(**v >= 0.0 && v.is_finite())) {
            return Err(MeasureError::BadDensity { index, value });
        }

        atoms.sort_by(|a, b| a.0.total_cmp(&b.0));
        let lo = atoms.first().map(|a| a.0).into_iter().chain(grid.first().copied()).fold(f64::INFINITY, f64::min);
        let hi = atoms.last().map(|a| a.0).into_iter().chain(grid.last().copied()).fold(f64::NEG_INFINITY, f64::max);
        let tol = ATOM_MERGE_REL * (hi - lo);
        let mut merged: Vec<(f64, f64)> = Vec::with_capacity(atoms.len());
        for (x, m) in atoms {
            match merged.last_mut() {
                Some(last) if x - last.0 <= tol => {
                    // mass-weighted position keeps the first moment exact
                    let w = last.1 + m;
                    last.0 = (last.0 * last.1 + x * m) / w;
                    last.1 = w;
                }
                _ => merged.push((x, m)),
            }
        }

        let mut m = Measure { atoms: merged, atom_cum: Vec::new(), grid, density, cell_cum: Vec::new() };
        m.rebuild_cumulative();
        Ok(m)
    }

    fn rebuild_cumulative(&mut self) {
        let mut acc = 0.0;
        self.atom_cum = self
            .atoms
            .iter()
            .map(|&(_, m)| {
                acc += m;
                acc
            })
            .collect();
        let mut acc = 0.0;
        self.cell_cum = Vec::with_capacity(self.grid.len());
        if !self.grid.is_empty() {
            self.cell_cum.push(0.0);
            for k in 0..self.grid.len() - 1 {
                acc += 0.5 * (self.density[k] + self.density[k + 1]) * (self.grid[k + 1] - self.grid[k]);
                self.cell_cum.push(acc);
            }
        }
    }

    fn raw_total(&self) -> f64 {
        self.atom_cum.last().copied().unwrap_or(0.0) + self.cell_cum.last().copied().unwrap_or(0.0)
    }

    fn scaled(mut self, factor: f64) -> Self {
        if factor != 1.0 {
            self.atoms.iter_mut().for_each(|a| a.1 *= factor);
            self.density.iter_mut().for_each(|d| *d *= factor);
            self.rebuild_cumulative();
        }
        self
    }

    pub fn dirac(x: f64) -> Self {
        Self::new(vec![(x, 1.0)], Vec::new(), Vec::new()).expect("finite point mass")
    }

    /// Purely atomic measure; masses are renormalized.
    pub fn discrete(atoms: &[(f64, f64)]) -> Result<Self, MeasureError> {
        Self::normalized(atoms.to_vec(), Vec::new(), Vec::new())
    }

    /// `(δ₋₁ + δ₁)/2`.
    pub fn rademacher() -> Self {
        Self::discrete(&[(-1.0, 0.5), (1.0, 0.5)]).expect("valid")
    }

    /// Uniform law on `[a, b]`.
    pub fn uniform(a: f64, b: f64) -> Result<Self, MeasureError> {
        if !(a < b) {
            return Err(MeasureError::UnsortedGrid(1));
        }
        let h = 1.0 / (b - a);
        Self::new(Vec::new(), vec![a, b], vec![h, h])
    }

    /// Samples `f` at the given breakpoints and normalizes the result.
    pub fn from_density_fn(grid: Vec<f64>, f: impl Fn(f64) -> f64) -> Result<Self, MeasureError> {
        let density = grid.iter().map(|&x| f(x)).collect();
        Self::normalized(Vec::new(), grid, density)
    }

    /// Empirical measure of a sample (mass `1/len` per point, ties merged).
    pub fn empirical(samples: &[f64]) -> Result<Self, MeasureError> {
        if samples.is_empty() {
            return Err(MeasureError::Empty);
        }
        let w = 1.0 / samples.len() as f64;
        Self::normalized(samples.iter().map(|&x| (x, w)).collect(), Vec::new(), Vec::new())
    }

    pub fn atoms(&self) -> &[(f64, f64)] {
        &self.atoms
    }

    pub fn grid(&self) -> &[f64] {
        &self.grid
    }

    pub fn density_values(&self) -> &[f64] {
        &self.density
    }

    pub fn is_atomic(&self) -> bool {
        self.grid.is_empty()
    }

    /// `Some(x)` if the measure is a single point mass at `x`.
    pub fn point_mass(&self) -> Option<f64> {
        match (self.atoms.as_slice(), self.grid.is_empty()) {
            ([(x, _)], true) => Some(*x),
            _ => None,
        }
    }

    /// Smallest closed interval containing all atoms and the density grid.
    pub fn support(&self) -> (f64, f64) {
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        if let (Some(a), Some(b)) = (self.atoms.first(), self.atoms.last()) {
            lo = a.0;
            hi = b.0;
        }
        if let (Some(&a), Some(&b)) = (self.grid.first(), self.grid.last()) {
            lo = lo.min(a);
            hi = hi.max(b);
        }
        (lo, hi)
    }

    pub fn total_mass(&self) -> f64 {
        self.raw_total()
    }

    pub fn continuous_mass(&self) -> f64 {
        self.cell_cum.last().copied().unwrap_or(0.0)
    }

    /// Density at `x` (piecewise linear, zero outside the grid).
    pub fn density_at(&self, x: f64) -> f64 {
        match self.cell_of(x) {
            Some(k) => {
                let (x0, x1) = (self.grid[k], self.grid[k + 1]);
                let t = (x - x0) / (x1 - x0);
                self.density[k] + t * (self.density[k + 1] - self.density[k])
            }
            None => 0.0,
        }
    }

    /// Index `k` with `grid[k] <= x <= grid[k+1]`.
    fn cell_of(&self, x: f64) -> Option<usize> {
        let g = &self.grid;
        if g.is_empty() || x < g[0] || x > g[g.len() - 1] {
            return None;
        }
        let k = g.partition_point(|&p| p <= x);
        Some(k.saturating_sub(1).min(g.len() - 2))
    }

    fn continuous_cdf(&self, x: f64) -> f64 {
        let g = &self.grid;
        if g.is_empty() || x <= g[0] {
            return 0.0;
        }
        if x >= g[g.len() - 1] {
            return self.continuous_mass();
        }
        let k = self.cell_of(x).expect("inside grid");
        let d = x - g[k];
        let slope = (self.density[k + 1] - self.density[k]) / (g[k + 1] - g[k]);
        self.cell_cum[k] + self.density[k] * d + 0.5 * slope * d * d
    }

    /// `μ((-∞, x])`.
    pub fn cdf(&self, x: f64) -> f64 {
        let n = self.atoms.partition_point(|a| a.0 <= x);
        let atomic = if n == 0 { 0.0 } else { self.atom_cum[n - 1] };
        (atomic + self.continuous_cdf(x)).clamp(0.0, 1.0)
    }

    /// `μ((-∞, x))`.
    pub fn cdf_left(&self, x: f64) -> f64 {
        let n = self.atoms.partition_point(|a| a.0 < x);
        let atomic = if n == 0 { 0.0 } else { self.atom_cum[n - 1] };
        (atomic + self.continuous_cdf(x)).clamp(0.0, 1.0)
    }

    /// Generalized quantile `inf { x : F(x) >= u }` for `u` in `(0, 1]`.
    pub fn quantile(&self, u: f64) -> f64 {
        let (mut lo, mut hi) = self.support();
        if u <= 0.0 {
            return lo;
        }
        if self.cdf(lo) >= u {
            return lo;
        }
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            if self.cdf(mid) >= u {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        // land exactly on an atom when the jump there crosses u
        let i = self.atoms.partition_point(|a| a.0 < lo);
        for &(x, _) in self.atoms.iter().skip(i.saturating_sub(1)).take(3) {
            if self.cdf_left(x) < u && self.cdf(x) >= u {
                return x;
            }
        }
        hi
    }

    /// Integrates `f` against the measure over `region`; density cells are split at
    /// the region boundaries and at 0 so `|x|^p` integrands stay smooth per piece.
    fn integrate(&self, f: impl Fn(f64) -> f64, region: Region) -> f64 {
        let atomic: f64 = self.atoms.iter().filter(|a| region.contains(a.0)).map(|&(x, m)| m * f(x)).sum();
        let mut cont = 0.0;
        for k in 0..self.grid.len().saturating_sub(1) {
            let (x0, x1) = (self.grid[k], self.grid[k + 1]);
            let a = x0.max(region.lo);
            let b = x1.min(region.hi);
            if a >= b {
                continue;
            }
            let (f0, f1) = (self.density[k], self.density[k + 1]);
            let slope = (f1 - f0) / (x1 - x0);
            let dens = |x: f64| f0 + slope * (x - x0);
            let integrand = |x: f64| f(x) * dens(x);
            if a < 0.0 && b > 0.0 {
                cont += gauss_legendre(a, 0.0, &integrand) + gauss_legendre(0.0, b, &integrand);
            } else {
                cont += gauss_legendre(a, b, &integrand);
            }
        }
        atomic + cont
    }

    fn whole() -> Region {
        Region { lo: f64::NEG_INFINITY, hi: f64::INFINITY, closed: false }
    }

    /// `m_k(μ) = ∫ x^k dμ`. Exact for atoms; exact per density cell for `k <= 14`.
    pub fn moment(&self, k: u32) -> f64 {
        if k <= 14 {
            self.integrate(|x| x.powi(k as i32), Self::whole())
        } else {
            self.polynomial_moment(k)
        }
    }

    fn polynomial_moment(&self, k: u32) -> f64 {
        let p = k as i32;
        let atomic: f64 = self.atoms.iter().map(|&(x, m)| m * x.powi(p)).sum();
        let mut cont = 0.0;
        for c in 0..self.grid.len().saturating_sub(1) {
            let (a, b) = (self.grid[c], self.grid[c + 1]);
            let beta = (self.density[c + 1] - self.density[c]) / (b - a);
            let alpha = self.density[c] - beta * a;
            cont += alpha * (b.powi(p + 1) - a.powi(p + 1)) / (p + 1) as f64
                + beta * (b.powi(p + 2) - a.powi(p + 2)) / (p + 2) as f64;
        }
        atomic + cont
    }

    /// `γ_k(μ) = ∫ |x|^k dμ`.
    pub fn abs_moment(&self, k: u32) -> f64 {
        self.integrate(|x| x.abs().powi(k as i32), Self::whole())
    }

    /// `∫ |x|^p dμ` for real `p >= 0`.
    pub fn abs_moment_real(&self, p: f64) -> f64 {
        self.integrate(|x| x.abs().powf(p), Self::whole())
    }

    /// `γ_{2+g}(μ) = ∫ x² g(x) dμ`.
    pub fn g_moment(&self, g: &GrowthFunction) -> Result<f64, MeasureError> {
        let bad = std::cell::Cell::new(None);
        let value = self.integrate(
            |x| {
                let v = g.eval(x);
                if !(v >= 0.0 && v.is_finite()) && bad.get().is_none() {
                    bad.set(Some((x, v)));
                }
                x * x * v
            },
            Self::whole(),
        );
        match bad.get() {
            Some((x, value)) => Err(MeasureError::BadGrowth { label: g.label().to_string(), x, value }),
            None => Ok(value),
        }
    }

    /// `∫_{|x| > c} x² dμ`; atoms at exactly `±c` are excluded.
    pub fn tail_second_moment(&self, c: f64) -> f64 {
        let sq = |x: f64| x * x;
        self.integrate(sq, Region { lo: f64::NEG_INFINITY, hi: -c, closed: false })
            + self.integrate(sq, Region { lo: c, hi: f64::INFINITY, closed: false })
    }

    /// `∫_{|x| <= c} x² dμ`, the complement of [`Measure::tail_second_moment`].
    pub fn windowed_second_moment(&self, c: f64) -> f64 {
        self.integrate(|x| x * x, Region { lo: -c, hi: c, closed: true })
    }

    /// `∫_{|x| <= c} |x|³ dμ`; atoms at exactly `±c` are included.
    pub fn windowed_abs_third(&self, c: f64) -> f64 {
        self.integrate(|x| (x * x * x).abs(), Region { lo: -c, hi: c, closed: true })
    }

    /// `∫_{|x| > c} |x| dμ`.
    pub fn tail_abs_first(&self, c: f64) -> f64 {
        self.integrate(f64::abs, Region { lo: f64::NEG_INFINITY, hi: -c, closed: false })
            + self.integrate(f64::abs, Region { lo: c, hi: f64::INFINITY, closed: false })
    }

    /// Mass outside the closed window, `μ(Iᶜ)`.
    pub fn mass_outside(&self, w: &TruncationWindow) -> f64 {
        let inside = self.cdf(w.tau) - self.cdf_left(w.t);
        (self.total_mass() - inside).max(0.0)
    }

    pub fn mean(&self) -> f64 {
        self.moment(1)
    }

    pub fn variance(&self) -> f64 {
        let m = self.mean();
        (self.moment(2) - m * m).max(0.0)
    }

    /// Law of `(X - t) / s` for `X ~ μ`.
    pub fn affine_pushforward(&self, s: f64, t: f64) -> Result<Measure, MeasureError> {
        if s == 0.0 || !s.is_finite() || !t.is_finite() {
            return Err(MeasureError::ZeroScale(s));
        }
        let map = |x: f64| (x - t) / s;
        let atoms = self.atoms.iter().map(|&(x, m)| (map(x), m)).collect();
        let mut grid: Vec<f64> = self.grid.iter().map(|&x| map(x)).collect();
        let mut density: Vec<f64> = self.density.iter().map(|&d| d * s.abs()).collect();
        if s < 0.0 {
            grid.reverse();
            density.reverse();
        }
        Measure::new(atoms, grid, density)
    }

    /// Restriction to the window with the outside mass moved to an atom at 0.
    pub fn truncate(&self, w: &TruncationWindow) -> Result<Measure, MeasureError> {
        let mut atoms: Vec<(f64, f64)> = self.atoms.iter().copied().filter(|a| w.contains(a.0)).collect();
        let mut grid = Vec::new();
        let mut density = Vec::new();
        if let (Some(&g0), Some(&g1)) = (self.grid.first(), self.grid.last()) {
            let a = g0.max(w.t);
            let b = g1.min(w.tau);
            if a < b {
                grid.push(a);
                density.push(self.density_at(a));
                for (&x, &d) in self.grid.iter().zip(&self.density) {
                    if x > a && x < b {
                        grid.push(x);
                        density.push(d);
                    }
                }
                grid.push(b);
                density.push(self.density_at(b));
            }
        }
        let kept: f64 = atoms.iter().map(|a| a.1).sum::<f64>() + trapezoid(&grid, &density);
        let outside = self.total_mass() - kept;
        if outside > 0.0 {
            atoms.push((0.0, outside));
        }
        Measure::new(atoms, grid, density)
    }

    /// `(α, β²)`: mean and variance.
    pub fn centered_stats(&self) -> (f64, f64) {
        let alpha = self.moment(1);
        (alpha, (self.moment(2) - alpha * alpha).max(0.0))
    }

    /// Kolmogorov distance `sup_x |F_μ(x) - F_ν(x)|`.
    pub fn kolmogorov_distance(&self, other: &Measure) -> f64 {
        kolmogorov_distance(self, other)
    }

    /// Sorted breakpoints and atom positions.
    pub(crate) fn breakpoints(&self) -> Vec<f64> {
        let mut pts: Vec<f64> = self.atoms.iter().map(|a| a.0).chain(self.grid.iter().copied()).collect();
        pts.sort_by(f64::total_cmp);
        pts.dedup();
        pts
    }

    /// Density on the open interval `(a, b)` is linear if no breakpoint lies
    /// inside; returns its limits at `a+` and `b-`.
    pub(crate) fn density_limits(&self, a: f64, b: f64) -> (f64, f64) {
        let mid = 0.5 * (a + b);
        match self.cell_of(mid) {
            Some(k) if self.grid[k] <= a && b <= self.grid[k + 1] => {
                let (x0, x1) = (self.grid[k], self.grid[k + 1]);
                let slope = (self.density[k + 1] - self.density[k]) / (x1 - x0);
                (self.density[k] + slope * (a - x0), self.density[k] + slope * (b - x0))
            }
            _ => (self.density_at(a), self.density_at(b)),
        }
    }
}

pub(crate) fn trapezoid(grid: &[f64], density: &[f64]) -> f64 {
    grid.windows(2).zip(density.windows(2)).map(|(x, f)| 0.5 * (f[0] + f[1]) * (x[1] - x[0])).sum()
}

/// Kolmogorov distance between two measures.
///
/// Both CDFs are piecewise quadratic between the merged breakpoints, so the
/// supremum is attained at a breakpoint (value or left limit) or where the two
/// linear densities cross inside a merged cell.
pub fn kolmogorov_distance(mu: &Measure, nu: &Measure) -> f64 {
    let mut pts = mu.breakpoints();
    pts.extend(nu.breakpoints());
    pts.sort_by(f64::total_cmp);
    pts.dedup();

    let diff = |x: f64| (mu.cdf(x) - nu.cdf(x)).abs();
    let mut best = 0.0f64;
    for (i, &p) in pts.iter().enumerate() {
        best = best.max(diff(p)).max((mu.cdf_left(p) - nu.cdf_left(p)).abs());
        if let Some(&q) = pts.get(i + 1) {
            let (ma, mb) = mu.density_limits(p, q);
            let (na, nb) = nu.density_limits(p, q);
            let (ga, gb) = (ma - na, mb - nb);
            if ga * gb < 0.0 {
                let r = p + (q - p) * ga / (ga - gb);
                best = best.max(diff(r));
            }
        }
    }
    best.min(1.0)
}
