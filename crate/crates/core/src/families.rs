//! Distribution families used to build rows for the experiments.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::bounds::{build_row, BoundsError, TriangularRow};
use crate::measure::{Measure, MeasureError};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FamilyError {
    #[error("invalid family parameter: {0}")]
    Param(String),
    #[error("row length must be positive")]
    ZeroLength,
    #[error(transparent)]
    Measure(#[from] MeasureError),
    #[error(transparent)]
    Bounds(#[from] BoundsError),
}

/// A rule producing the `n`-th row of a triangular array.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum Family {
    Rademacher,
    /// Unit-variance two-point law with mass `p` on the positive atom when
    /// centered, Bernoulli(`p`) on `{0, 1}` otherwise.
    TwoPoint { p: f64, centered: bool },
    Uniform { half_width: f64 },
    /// Density proportional to `|x|^-(3+delta)` on `cut <= |x| <= K`, with `K`
    /// chosen for unit variance.
    TruncatedPower { delta: f64, cut: f64 },
    /// The `j`-th entry of a row uses family `j mod len`.
    Mixed(Vec<Family>),
    /// `n - 1` Rademacher laws plus `±√(n-1)`, which keeps half the variance
    /// in the tail.
    LindebergCounterexample,
}

/// Points per side of the truncated power density.
const POWER_POINTS: usize = 512;

impl Family {
    pub fn validate(&self) -> Result<(), FamilyError> {
        let bad = |s: String| Err(FamilyError::Param(s));
        match self {
            Family::TwoPoint { p, .. } if !(*p > 0.0 && *p < 1.0) => bad(format!("two_point p = {p} must lie in (0, 1)")),
            Family::Uniform { half_width } if !(*half_width > 0.0 && half_width.is_finite()) => bad(format!("uniform half_width = {half_width} must be positive")),
            Family::TruncatedPower { delta, cut } => {
                if !(*delta > 0.0 && delta.is_finite()) {
                    return bad(format!("truncated_power delta = {delta} must be positive"));
                }
                let lo = (delta / (2.0 + delta)).sqrt();
                if !(*cut > lo && *cut < 1.0) {
                    return bad(format!("truncated_power cut = {cut} must lie in ({lo}, 1) for unit variance"));
                }
                Ok(())
            }
            Family::Mixed(fs) => {
                if fs.is_empty() {
                    return bad("mixed family list is empty".into());
                }
                fs.iter().try_for_each(Family::validate)
            }
            _ => Ok(()),
        }
    }

    /// Whether every member has mean zero.
    pub fn is_centered(&self) -> bool {
        match self {
            Family::TwoPoint { centered, .. } => *centered,
            Family::Mixed(fs) => fs.iter().all(Family::is_centered),
            _ => true,
        }
    }

    /// Entry `j` (0-based) of row `n`.
    pub fn measure(&self, j: usize, n: usize) -> Result<Measure, FamilyError> {
        self.validate()?;
        Ok(match self {
            Family::Rademacher => Measure::rademacher(),
            Family::TwoPoint { p, centered: true } => two_point(*p)?,
            Family::TwoPoint { p, centered: false } => Measure::discrete(&[(0.0, 1.0 - p), (1.0, *p)])?,
            Family::Uniform { half_width } => Measure::uniform(-half_width, *half_width)?,
            Family::TruncatedPower { delta, cut } => truncated_power(*delta, *cut)?,
            Family::Mixed(fs) => fs[j % fs.len()].measure(j / fs.len(), n)?,
            Family::LindebergCounterexample => {
                if j + 1 < n || n == 1 {
                    Measure::rademacher()
                } else {
                    let a = ((n - 1) as f64).sqrt();
                    Measure::discrete(&[(-a, 0.5), (a, 0.5)])?
                }
            }
        })
    }

    /// Row `n` of the array.
    pub fn row(&self, n: usize) -> Result<TriangularRow, FamilyError> {
        if n == 0 {
            return Err(FamilyError::ZeroLength);
        }
        let ms = (0..n).map(|j| self.measure(j, n)).collect::<Result<Vec<_>, _>>()?;
        if self.is_centered() {
            Ok(build_row(ms)?)
        } else {
            Ok(crate::bounds::build_row_uncentered(ms)?)
        }
    }
}

/// Mass `p` at `√((1-p)/p)` and `1-p` at `-√(p/(1-p))`: mean 0, variance 1.
pub fn two_point(p: f64) -> Result<Measure, FamilyError> {
    if !(p > 0.0 && p < 1.0) {
        return Err(FamilyError::Param(format!("p = {p} must lie in (0, 1)")));
    }
    Ok(Measure::discrete(&[(((1.0 - p) / p).sqrt(), p), (-(p / (1.0 - p)).sqrt(), 1.0 - p)])?)
}

/// Symmetric density `∝ |x|^-(3+δ)` on `cut <= |x| <= K`, rescaled to unit
/// variance after discretization.
pub fn truncated_power(delta: f64, cut: f64) -> Result<Measure, FamilyError> {
    Family::TruncatedPower { delta, cut }.validate()?;
    let variance = |k: f64| {
        let num = (cut.powf(-delta) - k.powf(-delta)) / delta;
        let den = (cut.powf(-2.0 - delta) - k.powf(-2.0 - delta)) / (2.0 + delta);
        num / den
    };
    // variance increases from cut² towards (2+δ)cut²/δ > 1 as K grows
    let (mut lo, mut hi) = (cut, cut * 2.0);
    while variance(hi) < 1.0 {
        lo = hi;
        hi *= 2.0;
    }
    for _ in 0..200 {
        let mid = (lo * hi).sqrt();
        if variance(mid) < 1.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let k = 0.5 * (lo + hi);
    let ratio = k / cut;
    let side: Vec<f64> = (0..=POWER_POINTS).map(|i| cut * ratio.powf(i as f64 / POWER_POINTS as f64)).collect();
    let f = |x: f64| x.abs().powf(-(3.0 + delta));
    // a steep ramp closes the gap (-cut, cut)
    let eps = 1e-9 * cut;
    let mut grid: Vec<f64> = side.iter().rev().map(|x| -x).collect();
    let mut dens: Vec<f64> = grid.iter().map(|&x| f(x)).collect();
    grid.extend([-cut + eps, cut - eps]);
    dens.extend([0.0, 0.0]);
    grid.extend(side.iter().copied());
    dens.extend(side.iter().map(|&x| f(x)));
    let m = Measure::normalized(Vec::new(), grid, dens)?;
    let sd = m.variance().sqrt();
    Ok(m.affine_pushforward(sd, 0.0)?)
}

/// Random compactly supported law: one to three atoms and up to two uniform
/// pieces inside `[-2, 2]`, mixed with random weights.
pub fn random_compact<R: rand::Rng + ?Sized>(rng: &mut R) -> Measure {
    let n_atoms = rng.random_range(0..=3usize);
    let n_pieces = if n_atoms == 0 { rng.random_range(1..=2usize) } else { rng.random_range(0..=2usize) };
    let mut weights: Vec<f64> = (0..n_atoms + n_pieces).map(|_| rng.random_range(0.2..1.0)).collect();
    let total: f64 = weights.iter().sum();
    weights.iter_mut().for_each(|w| *w /= total);
    let atoms: Vec<(f64, f64)> = (0..n_atoms).map(|i| (rng.random_range(-2.0..2.0), weights[i])).collect();
    let mut pieces: Vec<(f64, f64, f64)> = (0..n_pieces)
        .map(|i| {
            let a: f64 = rng.random_range(-2.0..1.5);
            let b = rng.random_range(a + 0.1..2.0f64.max(a + 0.2));
            (a, b, weights[n_atoms + i] / (b - a))
        })
        .collect();
    pieces.sort_by(|p, q| p.0.total_cmp(&q.0));
    // sum of box densities as a piecewise-linear density with sharp ramps
    let mut cuts: Vec<f64> = pieces.iter().flat_map(|p| [p.0, p.1]).collect();
    cuts.sort_by(f64::total_cmp);
    let ramp = 1e-7;
    cuts.dedup_by(|b, a| *b - *a < 4.0 * ramp);
    let height = |x: f64| pieces.iter().filter(|p| x >= p.0 && x < p.1).map(|p| p.2).sum::<f64>();
    let mut grid = Vec::new();
    let mut dens = Vec::new();
    for (k, &c) in cuts.iter().enumerate() {
        if k > 0 {
            grid.push(c - ramp);
            dens.push(height(c - 2.0 * ramp));
        }
        grid.push(c);
        dens.push(if k + 1 == cuts.len() { 0.0 } else { height(c + ramp) });
    }
    Measure::normalized(atoms, grid, dens).expect("valid random measure")
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn two_point_moments() {
        let m = two_point(0.25).unwrap();
        assert_abs_diff_eq!(m.mean(), 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(m.moment(2), 1.0, epsilon = 1e-14);
        assert_abs_diff_eq!(m.atoms()[1].0, 3f64.sqrt(), epsilon = 1e-15);
        assert!(two_point(1.0).is_err());
    }

    #[test]
    fn truncated_power_has_unit_variance() {
        for (d, c) in [(0.5, 0.6), (1.0, 0.7), (0.2, 0.5)] {
            let m = truncated_power(d, c).unwrap();
            assert_abs_diff_eq!(m.mean(), 0.0, epsilon = 1e-12);
            assert_abs_diff_eq!(m.variance(), 1.0, epsilon = 1e-12);
            assert!(m.cdf(0.0) - m.cdf(-0.3 * c) < 1e-8);
        }
        assert!(truncated_power(1.0, 0.5).is_err());
        assert!(truncated_power(1.0, 1.0).is_err());
    }

    #[test]
    fn rows() {
        let r = Family::Rademacher.row(4).unwrap();
        assert_abs_diff_eq!(r.b_n_sq(), 4.0);
        let mixed = Family::Mixed(vec![Family::Uniform { half_width: 0.5 }, Family::Uniform { half_width: 1.0 }, Family::Uniform { half_width: 1.5 }]);
        let r = mixed.row(6).unwrap();
        assert_abs_diff_eq!(r.b_n_sq(), 2.0 * (0.25 + 1.0 + 2.25) / 3.0, epsilon = 1e-12);
        let c = Family::LindebergCounterexample.row(5).unwrap();
        assert_abs_diff_eq!(c.b_n_sq(), 8.0, epsilon = 1e-12);
        assert!(Family::Rademacher.row(0).is_err());
        assert!(!Family::TwoPoint { p: 0.3, centered: false }.is_centered());
        assert!(Family::TwoPoint { p: 0.3, centered: false }.row(3).is_ok());
    }

    #[test]
    fn serde_shape() {
        let f: Family = serde_json::from_str(r#"{"mixed": ["rademacher", {"two_point": {"p": 0.25, "centered": true}}]}"#).unwrap();
        assert_eq!(f, Family::Mixed(vec![Family::Rademacher, Family::TwoPoint { p: 0.25, centered: true }]));
        assert!(serde_json::from_str::<Family>(r#"{"uniform": {"half_width": 1, "extra": 2}}"#).is_err());
    }
}
