//! The semicircle family: density, exact CDF, grid discretization, and the
//! shift/scale deviation functionals of the standard CDF.

use std::f64::consts::PI;

use thiserror::Error;

use crate::measure::{Measure, MeasureError};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SemicircleError {
    #[error("variance must be positive and finite, got {0}")]
    Variance(f64),
    #[error("discretization needs at least 64 points, got {0}")]
    CoarseGrid(usize),
    #[error("scale factor must be positive, got {0}")]
    Scale(f64),
    #[error(transparent)]
    Measure(#[from] MeasureError),
}

/// Semicircle law with the given center and variance; the standard law has
/// center 0, variance 1 and support `[-2, 2]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SemicircleLaw {
    center: f64,
    variance: f64,
}

impl Default for SemicircleLaw {
    fn default() -> Self {
        Self::standard()
    }
}

/// Standard density `√(4 - x²) / 2π` on `[-2, 2]`.
pub fn standard_density(x: f64) -> f64 {
    if x.abs() >= 2.0 {
        0.0
    } else {
        (4.0 - x * x).sqrt() / (2.0 * PI)
    }
}

/// Standard CDF `1/2 + x√(4-x²)/4π + arcsin(x/2)/π`, clamped outside `[-2, 2]`.
pub fn standard_cdf(x: f64) -> f64 {
    if x <= -2.0 {
        0.0
    } else if x >= 2.0 {
        1.0
    } else {
        (0.5 + x * (4.0 - x * x).sqrt() / (4.0 * PI) + (0.5 * x).asin() / PI).clamp(0.0, 1.0)
    }
}

impl SemicircleLaw {
    pub const fn standard() -> Self {
        Self { center: 0.0, variance: 1.0 }
    }

    pub fn new(center: f64, variance: f64) -> Result<Self, SemicircleError> {
        if !(variance > 0.0 && variance.is_finite() && center.is_finite()) {
            return Err(SemicircleError::Variance(variance));
        }
        Ok(Self { center, variance })
    }

    pub fn center(&self) -> f64 {
        self.center
    }

    pub fn variance(&self) -> f64 {
        self.variance
    }

    fn sigma(&self) -> f64 {
        self.variance.sqrt()
    }

    pub fn support(&self) -> (f64, f64) {
        let r = 2.0 * self.sigma();
        (self.center - r, self.center + r)
    }

    pub fn density(&self, x: f64) -> f64 {
        let s = self.sigma();
        standard_density((x - self.center) / s) / s
    }

    pub fn cdf(&self, x: f64) -> f64 {
        standard_cdf((x - self.center) / self.sigma())
    }

    /// Grid discretization on `points` breakpoints clustered toward the edges
    /// (`x = -2cos θ` with uniform θ), which keeps the square-root edges accurate.
    pub fn as_measure(&self, points: usize) -> Result<Measure, SemicircleError> {
        if points < 64 {
            return Err(SemicircleError::CoarseGrid(points));
        }
        let m = points - 1;
        let s = self.sigma();
        let grid: Vec<f64> = (0..points)
            .map(|k| match k {
                0 => -2.0,
                k if k == m => 2.0,
                k => -2.0 * (PI * k as f64 / m as f64).cos(),
            })
            .map(|u| self.center + s * u)
            .collect();
        let density = grid.iter().map(|&x| self.density(x)).collect();
        Ok(Measure::normalized(Vec::new(), grid, density)?)
    }

    /// `sup_x |F(x) - μ((-∞, x])|` against a grid/atomic measure.
    ///
    /// Scans every breakpoint and atom of `mu` (value and left limit). Between
    /// breakpoints the derivative of the difference is linear minus concave, hence
    /// convex, so it has at most two roots; both are located and evaluated.
    pub fn kolmogorov_distance(&self, mu: &Measure) -> f64 {
        let (lo, hi) = self.support();
        let mut pts = mu.breakpoints();
        pts.push(lo);
        pts.push(hi);
        pts.push(self.center);
        pts.sort_by(f64::total_cmp);
        pts.dedup();

        let diff = |x: f64| (mu.cdf(x) - self.cdf(x)).abs();
        let mut best = 0.0f64;
        for (i, &p) in pts.iter().enumerate() {
            best = best.max(diff(p)).max((mu.cdf_left(p) - self.cdf(p)).abs());
            let Some(&q) = pts.get(i + 1) else { continue };
            let (ma, mb) = mu.density_limits(p, q);
            let slope = (mb - ma) / (q - p);
            let dprime = |x: f64| ma + slope * (x - p) - self.density(x);
            for r in convex_roots(p, q, dprime) {
                best = best.max(diff(r));
            }
        }
        best.min(1.0)
    }
}

/// Roots of a convex function on `(a, b)`.
fn convex_roots(a: f64, b: f64, f: impl Fn(f64) -> f64) -> Vec<f64> {
    let (fa, fb) = (f(a), f(b));
    let mut roots = Vec::new();
    if fa * fb < 0.0 {
        roots.push(bisect(a, b, &f));
        return roots;
    }
    if fa < 0.0 && fb < 0.0 {
        // convex and negative at both ends: negative throughout
        return roots;
    }
    // both ends >= 0: look for a negative minimum in between
    let (mut l, mut r) = (a, b);
    let g = 0.5 * (5f64.sqrt() - 1.0);
    for _ in 0..60 {
        let m1 = r - g * (r - l);
        let m2 = l + g * (r - l);
        if f(m1) < f(m2) {
            r = m2;
        } else {
            l = m1;
        }
    }
    let xm = 0.5 * (l + r);
    if f(xm) < 0.0 {
        roots.push(bisect(a, xm, &f));
        roots.push(bisect(xm, b, &f));
    }
    roots
}

fn bisect(mut a: f64, mut b: f64, f: &impl Fn(f64) -> f64) -> f64 {
    let fa_neg = f(a) < 0.0;
    for _ in 0..100 {
        let m = 0.5 * (a + b);
        if m <= a || m >= b {
            break;
        }
        if (f(m) < 0.0) == fa_neg {
            a = m;
        } else {
            b = m;
        }
    }
    0.5 * (a + b)
}

/// Dense-grid supremum of `|h(x)|` over `[lo, hi]` (grid of 10⁵ points plus the
/// given breakpoints, golden-section polish around the best cell). The grid
/// doubles until the supremum moves by less than 1e-9.
fn grid_supremum(lo: f64, hi: f64, extra: &[f64], h: impl Fn(f64) -> f64) -> f64 {
    let polish = |pts: &[f64]| -> f64 {
        let vals: Vec<f64> = pts.iter().map(|&x| h(x).abs()).collect();
        let (imax, &vmax) = vals.iter().enumerate().max_by(|a, b| a.1.total_cmp(b.1)).expect("nonempty");
        let mut best = vmax;
        for (a, b) in [(imax.saturating_sub(1), imax), (imax, (imax + 1).min(pts.len() - 1))] {
            if a == b {
                continue;
            }
            let (mut l, mut r) = (pts[a], pts[b]);
            let g = 0.5 * (5f64.sqrt() - 1.0);
            for _ in 0..80 {
                let m1 = r - g * (r - l);
                let m2 = l + g * (r - l);
                if h(m1).abs() > h(m2).abs() {
                    r = m2;
                } else {
                    l = m1;
                }
            }
            best = best.max(h(0.5 * (l + r)).abs());
        }
        best
    };
    let grid = |n: usize| -> Vec<f64> {
        let mut pts: Vec<f64> = (0..=n).map(|i| lo + (hi - lo) * i as f64 / n as f64).collect();
        pts.extend(extra.iter().copied().filter(|x| (lo..=hi).contains(x)));
        pts.sort_by(f64::total_cmp);
        pts.dedup();
        pts
    };
    let mut n = 100_000;
    let mut prev = polish(&grid(n));
    for _ in 0..4 {
        n *= 2;
        let next = polish(&grid(n));
        let done = (next - prev).abs() < 1e-9;
        prev = prev.max(next);
        if done {
            break;
        }
    }
    prev
}

/// `sup_x |F(x + q) - F(x)|` for the standard semicircle CDF.
pub fn shift_deviation(q: f64) -> f64 {
    if q == 0.0 {
        return 0.0;
    }
    let r = 2.0 + q.abs();
    grid_supremum(-r, r, &[-2.0, 2.0, -2.0 - q, 2.0 - q, 0.0], |x| standard_cdf(x + q) - standard_cdf(x))
}

/// `sup_x |F(px) - F(x)|` for the standard semicircle CDF, `p > 0`.
pub fn scale_deviation(p: f64) -> Result<f64, SemicircleError> {
    if !(p > 0.0 && p.is_finite()) {
        return Err(SemicircleError::Scale(p));
    }
    if p == 1.0 {
        return Ok(0.0);
    }
    let r = 2.0 * p.recip().max(1.0);
    Ok(grid_supremum(-r, r, &[-2.0, 2.0, -2.0 / p, 2.0 / p, 0.0], |x| standard_cdf(p * x) - standard_cdf(x)))
}
