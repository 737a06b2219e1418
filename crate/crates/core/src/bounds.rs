//! Row statistics, truncation summaries and the constant-free right-hand sides
//! of the rate bounds.

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::freeconv::{free_convolve_tree, ConvError, ConvReport, ConvolutionParams};
use crate::measure::{Measure, MeasureError, TruncationWindow};
use crate::semicircle::SemicircleLaw;

/// Centering tolerance for rows used in the rate bounds.
pub const CENTER_TOL: f64 = 1e-9;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum BoundsError {
    #[error("row is empty")]
    EmptyRow,
    #[error("measure {index} has mean {mean:e}, expected 0")]
    NotCentered { index: usize, mean: f64 },
    #[error("row has zero total variance")]
    ZeroVariance,
    #[error("epsilon must lie in (0, 1], got {0}")]
    Epsilon(f64),
    #[error("delta must lie in (0, 1], got {0}")]
    Delta(f64),
    #[error("scale must be positive, got {0}")]
    Scale(f64),
    #[error("a must be positive, got {0}")]
    NonPositiveA(f64),
    #[error("growth function {label} is not in class G: {witness}")]
    NotGClass { label: String, witness: String },
    #[error("growth function {label} is not finite at {x}")]
    NonFiniteGrowth { label: String, x: f64 },
    #[error("truncation leaves zero variance (N_n = 0)")]
    DegenerateTruncation,
    #[error("expected {expected} windows, got {got}")]
    WindowCount { expected: usize, got: usize },
    #[error("no data to fit")]
    EmptyFit,
    #[error("pair {0} has a non-positive right-hand side")]
    NonPositiveRhs(usize),
    #[error(transparent)]
    Conv(#[from] ConvError),
    #[error(transparent)]
    Measure(#[from] MeasureError),
}

/// Weight `g` for the moment `γ_{2+g}(μ) = ∫ x² g(x) dμ`.
#[derive(Clone)]
pub struct GrowthFunction {
    label: String,
    f: Arc<dyn Fn(f64) -> f64 + Send + Sync>,
}

impl fmt::Debug for GrowthFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_tuple("GrowthFunction").field(&self.label).finish()
    }
}

impl GrowthFunction {
    pub fn new(label: impl Into<String>, f: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Self {
        Self { label: label.into(), f: Arc::new(f) }
    }

    /// `|x|^δ`.
    pub fn power(delta: f64) -> Self {
        Self::new(format!("|x|^{delta}"), move |x: f64| x.abs().powf(delta))
    }

    /// `log(1 + |x|)`.
    pub fn log1p() -> Self {
        Self::new("log1p", |x: f64| x.abs().ln_1p())
    }

    /// `x²`; not in class G.
    pub fn square() -> Self {
        Self::new("x^2", |x: f64| x * x)
    }

    pub fn eval(&self, x: f64) -> f64 {
        (self.f)(x)
    }

    pub fn label(&self) -> &str {
        &self.label
    }
}

/// Which defining condition of class G failed, with the offending probe points.
#[derive(Debug, Clone, PartialEq)]
pub enum GClassViolation {
    Negative { x: f64, value: f64 },
    NotEven { x: f64, left: f64, right: f64 },
    Decreasing { x1: f64, x2: f64, g1: f64, g2: f64 },
    RatioDecreasing { x1: f64, x2: f64, r1: f64, r2: f64 },
}

impl fmt::Display for GClassViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Negative { x, value } => write!(f, "(a) g({x}) = {value} < 0"),
            Self::NotEven { x, left, right } => write!(f, "(a) g(-{x}) = {left} != g({x}) = {right}"),
            Self::Decreasing { x1, x2, g1, g2 } => write!(f, "(a) g({x1}) = {g1} > g({x2}) = {g2}"),
            Self::RatioDecreasing { x1, x2, r1, r2 } => {
                write!(f, "(b) x/g(x) = {r1} at {x1} > {r2} at {x2}")
            }
        }
    }
}

impl GClassViolation {
    /// `'a'` or `'b'`.
    pub fn condition(&self) -> char {
        match self {
            Self::RatioDecreasing { .. } => 'b',
            _ => 'a',
        }
    }
}

/// Probe points `10^k`, `k` from -3 to 3 in steps of 1/8.
pub fn default_probe_grid() -> Vec<f64> {
    (-24..=24).map(|k| 10f64.powf(k as f64 / 8.0)).collect()
}

/// Checks class G at the probes. `Ok(None)` is a pass, `Ok(Some(_))` the first
/// violation found.
pub fn check_g_class(g: &GrowthFunction, probes: &[f64]) -> Result<Option<GClassViolation>, BoundsError> {
    let slack = |a: f64, b: f64| 1e-12 * a.abs().max(b.abs());
    let mut prev: Option<(f64, f64, f64)> = None;
    for &x in probes.iter().filter(|&&x| x > 0.0) {
        let v = g.eval(x);
        let vl = g.eval(-x);
        if !v.is_finite() || !vl.is_finite() {
            return Err(BoundsError::NonFiniteGrowth { label: g.label().to_string(), x });
        }
        if v < 0.0 {
            return Ok(Some(GClassViolation::Negative { x, value: v }));
        }
        if (v - vl).abs() > slack(v, vl) {
            return Ok(Some(GClassViolation::NotEven { x, left: vl, right: v }));
        }
        let r = if v > 0.0 { x / v } else { f64::INFINITY };
        if let Some((x0, v0, r0)) = prev {
            if v0 > v + slack(v0, v) {
                return Ok(Some(GClassViolation::Decreasing { x1: x0, x2: x, g1: v0, g2: v }));
            }
            if r0 > r + slack(r0, r) {
                return Ok(Some(GClassViolation::RatioDecreasing { x1: x0, x2: x, r1: r0, r2: r }));
            }
        }
        prev = Some((x, v, r));
    }
    Ok(None)
}

/// Row `μ₁, …, μₙ` with `σⱼ² = m₂(μⱼ)` and `Bₙ² = Σσⱼ²`.
#[derive(Debug, Clone, PartialEq)]
pub struct TriangularRow {
    measures: Vec<Measure>,
    sigma_sq: Vec<f64>,
    b_n_sq: f64,
}

impl TriangularRow {
    pub fn measures(&self) -> &[Measure] {
        &self.measures
    }

    pub fn sigma_sq(&self) -> &[f64] {
        &self.sigma_sq
    }

    pub fn b_n_sq(&self) -> f64 {
        self.b_n_sq
    }

    pub fn b_n(&self) -> f64 {
        self.b_n_sq.sqrt()
    }

    pub fn len(&self) -> usize {
        self.measures.len()
    }

    pub fn is_empty(&self) -> bool {
        self.measures.is_empty()
    }

    /// Each measure scaled by `s > 0`.
    pub fn scaled(&self, s: f64) -> Result<Self, BoundsError> {
        let ms = self.measures.iter().map(|m| m.affine_pushforward(1.0 / s, 0.0)).collect::<Result<Vec<_>, _>>()?;
        row_from(ms, false)
    }
}

fn row_from(measures: Vec<Measure>, centered: bool) -> Result<TriangularRow, BoundsError> {
    if measures.is_empty() {
        return Err(BoundsError::EmptyRow);
    }
    if centered {
        for (index, m) in measures.iter().enumerate() {
            let mean = m.mean();
            if mean.abs() > CENTER_TOL {
                return Err(BoundsError::NotCentered { index, mean });
            }
        }
    }
    let sigma_sq: Vec<f64> = measures.iter().map(|m| m.moment(2)).collect();
    let b_n_sq: f64 = sigma_sq.iter().sum();
    if !(b_n_sq > 0.0) {
        return Err(BoundsError::ZeroVariance);
    }
    Ok(TriangularRow { measures, sigma_sq, b_n_sq })
}

/// Row of centered measures.
pub fn build_row(measures: Vec<Measure>) -> Result<TriangularRow, BoundsError> {
    row_from(measures, true)
}

/// Row without the centering requirement (the explicit-constant inequality
/// needs no moment condition).
pub fn build_row_uncentered(measures: Vec<Measure>) -> Result<TriangularRow, BoundsError> {
    row_from(measures, false)
}

fn check_eps(eps: f64) -> Result<(), BoundsError> {
    if eps > 0.0 && eps <= 1.0 {
        Ok(())
    } else {
        Err(BoundsError::Epsilon(eps))
    }
}

/// `Λₙ(ε) = Bₙ⁻² Σⱼ ∫_{|x|>εBₙ} x² dμⱼ`.
pub fn lambda_n(row: &TriangularRow, eps: f64) -> Result<f64, BoundsError> {
    check_eps(eps)?;
    let c = eps * row.b_n();
    let s: f64 = row.measures.iter().map(|m| m.tail_second_moment(c)).sum();
    Ok((s / row.b_n_sq).clamp(0.0, 1.0))
}

/// `ℓₙ(ε) = Bₙ⁻³ Σⱼ ∫_{|x|≤εBₙ} |x|³ dμⱼ`.
pub fn ell_n(row: &TriangularRow, eps: f64) -> Result<f64, BoundsError> {
    check_eps(eps)?;
    let b = row.b_n();
    let s: f64 = row.measures.iter().map(|m| m.windowed_abs_third(eps * b)).sum();
    let v = s / (row.b_n_sq * b);
    assert!(v <= eps * (1.0 + 1e-9), "ell_n({eps}) = {v} exceeds eps");
    Ok(v)
}

/// `±Bₙ` for every measure.
pub fn default_windows(row: &TriangularRow) -> Vec<TruncationWindow> {
    let w = TruncationWindow::symmetric(row.b_n()).expect("B_n > 0");
    vec![w; row.len()]
}

#[derive(Debug, Clone, PartialEq)]
pub struct TruncationSummary {
    pub windows: Vec<TruncationWindow>,
    /// Truncated measures `νⱼ`.
    pub nu: Vec<Measure>,
    pub alpha: Vec<f64>,
    pub beta_sq: Vec<f64>,
    pub m_n: f64,
    pub n_n_sq: f64,
    pub gamma_n: f64,
    /// `Δ(ν⁽ⁿ⁾, μ_w)`.
    pub delta_n: f64,
    /// `Σⱼ ∫ |x|³ dνⱼ`.
    pub third_abs_sum: f64,
    pub report: ConvReport,
}

impl TruncationSummary {
    pub fn n_n(&self) -> f64 {
        self.n_n_sq.sqrt()
    }
}

/// Truncates each `μⱼ` to its window, then measures how far the normalized free
/// sum of the truncations is from the semicircle.
///
/// `ν_{n,j}` is the law of `(X - αⱼ)/Nₙ`, so `ν⁽ⁿ⁾` is the law of `(S - Mₙ)/Nₙ`.
pub fn summarize_truncation(row: &TriangularRow, windows: &[TruncationWindow], params: &ConvolutionParams) -> Result<TruncationSummary, BoundsError> {
    if windows.len() != row.len() {
        return Err(BoundsError::WindowCount { expected: row.len(), got: windows.len() });
    }
    let nu = row.measures.iter().zip(windows).map(|(m, w)| m.truncate(w)).collect::<Result<Vec<_>, _>>()?;
    let stats: Vec<(f64, f64)> = nu.iter().map(Measure::centered_stats).collect();
    let alpha: Vec<f64> = stats.iter().map(|s| s.0).collect();
    let beta_sq: Vec<f64> = stats.iter().map(|s| s.1).collect();
    let m_n: f64 = alpha.iter().sum();
    let n_n_sq: f64 = beta_sq.iter().sum();
    if !(n_n_sq > 0.0) {
        return Err(BoundsError::DegenerateTruncation);
    }
    let n_n = n_n_sq.sqrt();
    let gamma_n: f64 = row.measures.iter().zip(windows).map(|(m, w)| m.mass_outside(w)).sum();
    let third_abs_sum: f64 = nu.iter().map(|m| m.abs_moment(3)).sum();
    let scaled = nu.iter().zip(&alpha).map(|(m, &a)| m.affine_pushforward(n_n, a)).collect::<Result<Vec<_>, _>>()?;
    let (sum, report) = free_convolve_tree(&scaled, params)?;
    let delta_n = SemicircleLaw::standard().kolmogorov_distance(&sum);
    Ok(TruncationSummary {
        windows: windows.to_vec(),
        nu,
        alpha,
        beta_sq,
        m_n,
        n_n_sq,
        gamma_n,
        delta_n,
        third_abs_sum,
        report,
    })
}

/// `(2√2·scale / Nₙ^{3/2}) · (Σⱼ ∫|x|³ dνⱼ)^{1/2}`.
pub fn delta_n_third_moment_bound(summary: &TruncationSummary, scale: f64) -> Result<f64, BoundsError> {
    if !(scale > 0.0) {
        return Err(BoundsError::Scale(scale));
    }
    if !(summary.n_n_sq > 0.0) {
        return Err(BoundsError::DegenerateTruncation);
    }
    Ok(2.0 * 2f64.sqrt() * scale * summary.third_abs_sum.sqrt() / summary.n_n_sq.powf(0.75))
}

/// `Δₙ + Γₙ + (1/π)|ab - Mₙ|/Nₙ + (2/π)|a/Nₙ - 1|`.
pub fn rhs_thm2(summary: &TruncationSummary, a: f64, b: f64) -> Result<f64, BoundsError> {
    if !(a > 0.0) {
        return Err(BoundsError::NonPositiveA(a));
    }
    if !(summary.n_n_sq > 0.0) {
        return Err(BoundsError::DegenerateTruncation);
    }
    let n = summary.n_n();
    Ok(summary.delta_n + summary.gamma_n + (a * b - summary.m_n).abs() / (PI * n) + 2.0 / PI * (a / n - 1.0).abs())
}

/// `sup_x |σ((-∞, a(x+b)]) - μ_w((-∞, x])|` for `σ = ⊞ⱼ μⱼ` given as `sum`.
pub fn thm2_lhs(sum: &Measure, a: f64, b: f64) -> Result<f64, BoundsError> {
    if !(a > 0.0) {
        return Err(BoundsError::NonPositiveA(a));
    }
    Ok(SemicircleLaw::standard().kolmogorov_distance(&sum.affine_pushforward(a, a * b)?))
}

/// `(Σⱼ γ₃(μⱼ))^{1/2} / Bₙ^{3/2}`.
pub fn rhs_cg(row: &TriangularRow) -> f64 {
    let s: f64 = row.measures.iter().map(|m| m.abs_moment(3)).sum();
    s.sqrt() / row.b_n_sq.powf(0.75)
}

/// `(Λₙ(ε) + ℓₙ(ε))^{1/2}`.
pub fn rhs_thm3(row: &TriangularRow, eps: f64) -> Result<f64, BoundsError> {
    Ok((lambda_n(row, eps)? + ell_n(row, eps)?).sqrt())
}

/// `(Σⱼ γ_{2+g}(μⱼ))^{1/2} / (Bₙ g(Bₙ)^{1/2})`.
pub fn rhs_thm4(row: &TriangularRow, g: &GrowthFunction) -> Result<f64, BoundsError> {
    if let Some(v) = check_g_class(g, &default_probe_grid())? {
        return Err(BoundsError::NotGClass { label: g.label().to_string(), witness: v.to_string() });
    }
    let mut s = 0.0;
    for m in &row.measures {
        s += m.g_moment(g)?;
    }
    let b = row.b_n();
    Ok(s.sqrt() / (b * g.eval(b).sqrt()))
}

/// `(Σⱼ γ_{2+δ}(μⱼ))^{1/2} / Bₙ^{1+δ/2}`.
pub fn rhs_cor(row: &TriangularRow, delta: f64) -> Result<f64, BoundsError> {
    if !(delta > 0.0 && delta <= 1.0) {
        return Err(BoundsError::Delta(delta));
    }
    rhs_thm4(row, &GrowthFunction::power(delta))
}

/// `Λₙ(ε)` along a sequence of rows.
pub fn lindeberg_profile(rows: &[TriangularRow], eps: f64) -> Result<Vec<f64>, BoundsError> {
    rows.iter().map(|r| lambda_n(r, eps)).collect()
}

/// Smallest `C` with `delta ≤ C·rhs` on every pair.
pub fn fit_constant(pairs: &[(f64, f64)]) -> Result<f64, BoundsError> {
    if pairs.is_empty() {
        return Err(BoundsError::EmptyFit);
    }
    let mut c: f64 = 0.0;
    for (i, &(d, r)) in pairs.iter().enumerate() {
        if !(r > 0.0) {
            return Err(BoundsError::NonPositiveRhs(i));
        }
        c = c.max(d / r);
    }
    Ok(c)
}

pub const DEFAULT_EPSILONS: [f64; 5] = [0.05, 0.1, 0.25, 0.5, 1.0];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundReport {
    pub n: usize,
    pub delta_measured: f64,
    /// `(ε, Λₙ(ε))`.
    pub lambda: Vec<(f64, f64)>,
    /// `(ε, ℓₙ(ε))`.
    pub ell: Vec<(f64, f64)>,
    pub rhs_cg: f64,
    /// `(ε, rhs_thm3(ε))`.
    pub rhs_thm3: Vec<(f64, f64)>,
    pub rhs_thm4: Option<f64>,
    pub rhs_cor: Option<f64>,
    pub fitted_c: f64,
}

impl BoundReport {
    /// All bound quantities for `row` at the given `ε`s. `fitted_c` is left at
    /// `delta_measured / rhs_cg` and is usually overwritten by the caller.
    pub fn evaluate(row: &TriangularRow, delta_measured: f64, epsilons: &[f64], g: Option<&GrowthFunction>, cor_delta: Option<f64>) -> Result<Self, BoundsError> {
        let mut lambda = Vec::with_capacity(epsilons.len());
        let mut ell = Vec::with_capacity(epsilons.len());
        let mut thm3 = Vec::with_capacity(epsilons.len());
        for &e in epsilons {
            let l = lambda_n(row, e)?;
            let t = ell_n(row, e)?;
            lambda.push((e, l));
            ell.push((e, t));
            thm3.push((e, (l + t).sqrt()));
        }
        let rhs_cg = rhs_cg(row);
        Ok(Self {
            n: row.len(),
            delta_measured,
            lambda,
            ell,
            rhs_cg,
            rhs_thm3: thm3,
            rhs_thm4: g.map(|g| rhs_thm4(row, g)).transpose()?,
            rhs_cor: cor_delta.map(|d| rhs_cor(row, d)).transpose()?,
            fitted_c: if rhs_cg > 0.0 { delta_measured / rhs_cg } else { 0.0 },
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn rad_row(n: usize) -> TriangularRow {
        build_row(vec![Measure::rademacher(); n]).unwrap()
    }

    #[test]
    fn row_construction() {
        assert_abs_diff_eq!(rad_row(5).b_n_sq(), 5.0);
        let r = build_row(vec![Measure::uniform(-1.0, 1.0).unwrap(), Measure::rademacher()]).unwrap();
        assert_abs_diff_eq!(r.b_n_sq(), 4.0 / 3.0, epsilon = 1e-12);
        assert_eq!(build_row(vec![Measure::dirac(0.0)]), Err(BoundsError::ZeroVariance));
        assert_eq!(build_row(vec![]), Err(BoundsError::EmptyRow));
        let e = build_row(vec![Measure::rademacher(), Measure::uniform(0.0, 1.0).unwrap()]).unwrap_err();
        assert!(matches!(e, BoundsError::NotCentered { index: 1, .. }));
    }

    #[test]
    fn lambda_examples() {
        for n in 1..6 {
            assert_eq!(lambda_n(&rad_row(n), 1.0).unwrap(), 0.0);
        }
        assert_abs_diff_eq!(lambda_n(&rad_row(1), 0.5).unwrap(), 1.0);
        for n in 4..10 {
            assert_eq!(lambda_n(&rad_row(n), 0.5).unwrap(), 0.0);
        }
        assert!(lambda_n(&rad_row(1), 0.0).is_err());
        assert!(lambda_n(&rad_row(1), 1.5).is_err());
    }

    #[test]
    fn ell_examples() {
        for n in [1, 4, 9, 16] {
            assert_abs_diff_eq!(ell_n(&rad_row(n), 1.0).unwrap(), 1.0 / (n as f64).sqrt(), epsilon = 1e-12);
        }
        let r = build_row(vec![Measure::uniform(-1.0, 1.0).unwrap(); 3]).unwrap();
        assert!(ell_n(&r, 1e-9).unwrap() < 1e-20);
    }

    #[test]
    fn rhs_examples() {
        for n in [1usize, 2, 8, 64] {
            let r = rad_row(n);
            let q = (n as f64).powf(-0.25);
            assert_abs_diff_eq!(rhs_cg(&r), q, epsilon = 1e-12);
            assert_abs_diff_eq!(rhs_thm3(&r, 1.0).unwrap(), q, epsilon = 1e-12);
            assert_abs_diff_eq!(rhs_thm4(&r, &GrowthFunction::power(1.0)).unwrap(), q, epsilon = 1e-12);
            assert_abs_diff_eq!(rhs_thm4(&r, &GrowthFunction::power(0.5)).unwrap(), (n as f64).powf(-0.125), epsilon = 1e-12);
            for d in [0.1, 0.5, 1.0] {
                assert_abs_diff_eq!(rhs_cor(&r, d).unwrap(), (n as f64).powf(-d / 4.0), epsilon = 1e-12);
            }
        }
        assert!(rhs_cor(&rad_row(2), 0.0).is_err());
        assert!(rhs_thm4(&rad_row(2), &GrowthFunction::square()).is_err());
    }

    #[test]
    fn g_class() {
        let probes = default_probe_grid();
        for d in [0.1, 0.5, 1.0] {
            assert_eq!(check_g_class(&GrowthFunction::power(d), &probes).unwrap(), None);
        }
        assert_eq!(check_g_class(&GrowthFunction::log1p(), &probes).unwrap(), None);
        let v = check_g_class(&GrowthFunction::square(), &probes).unwrap().unwrap();
        assert_eq!(v.condition(), 'b');
        let odd = GrowthFunction::new("odd", |x: f64| x.max(0.0));
        assert!(matches!(check_g_class(&odd, &probes).unwrap(), Some(GClassViolation::NotEven { .. })));
        let nan = GrowthFunction::new("nan", |_| f64::NAN);
        assert!(check_g_class(&nan, &probes).is_err());
    }

    #[test]
    fn fit() {
        assert_eq!(fit_constant(&[(0.0, 1.0), (0.0, 0.5)]).unwrap(), 0.0);
        assert_abs_diff_eq!(fit_constant(&[(0.2, 0.1)]).unwrap(), 2.0);
        assert!(fit_constant(&[]).is_err());
        assert!(fit_constant(&[(0.1, 0.0)]).is_err());
    }

    #[test]
    fn truncation_without_cut() {
        let row = rad_row(3);
        let s = summarize_truncation(&row, &default_windows(&row), &ConvolutionParams::default().with_grid_points(1024)).unwrap();
        assert_eq!(s.gamma_n, 0.0);
        assert_abs_diff_eq!(s.m_n, 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(s.n_n_sq, 3.0, epsilon = 1e-12);
        assert_eq!(s.nu, row.measures().to_vec());
        assert!((0.0..=1.0).contains(&s.delta_n));
        let b = delta_n_third_moment_bound(&s, 1.0).unwrap();
        assert_abs_diff_eq!(b, 2.0 * 2f64.sqrt() * 3f64.powf(-0.25), epsilon = 1e-12);
        // both correction terms vanish at a = N, b = M/a
        assert_abs_diff_eq!(rhs_thm2(&s, 3f64.sqrt(), 0.0).unwrap(), s.delta_n, epsilon = 1e-15);
        assert!(rhs_thm2(&s, 3f64.sqrt(), 0.5).unwrap() <= rhs_thm2(&s, 3f64.sqrt(), -1.0).unwrap());
    }

    #[test]
    fn truncation_of_wide_uniform() {
        let row = build_row(vec![Measure::uniform(-2.0, 2.0).unwrap()]).unwrap();
        let w = TruncationWindow::new(-1.0, 1.0).unwrap();
        let s = summarize_truncation(&row, &[w], &ConvolutionParams::default()).unwrap();
        assert_abs_diff_eq!(s.alpha[0], 0.0, epsilon = 1e-14);
        assert_abs_diff_eq!(s.beta_sq[0], 1.0 / 6.0, epsilon = 1e-12);
        assert_abs_diff_eq!(s.gamma_n, 0.5, epsilon = 1e-12);
    }

    #[test]
    fn degenerate_truncation() {
        let row = build_row(vec![Measure::rademacher()]).unwrap();
        let w = TruncationWindow::symmetric(0.5).unwrap();
        let e = summarize_truncation(&row, &[w], &ConvolutionParams::default()).unwrap_err();
        assert_eq!(e, BoundsError::DegenerateTruncation);
    }

    #[test]
    fn lindeberg_counterexample_shape() {
        // n-1 Rademacher plus ±√(n-1): half the variance sits in one far atom pair
        let rows: Vec<TriangularRow> = (2..20)
            .map(|n| {
                let mut ms = vec![Measure::rademacher(); n - 1];
                let a = ((n - 1) as f64).sqrt();
                ms.push(Measure::discrete(&[(-a, 0.5), (a, 0.5)]).unwrap());
                build_row(ms).unwrap()
            })
            .collect();
        for l in lindeberg_profile(&rows, 0.5).unwrap() {
            assert!(l >= 0.3);
        }
    }

    #[test]
    fn report_entries() {
        let r = BoundReport::evaluate(&rad_row(4), 0.03, &DEFAULT_EPSILONS, Some(&GrowthFunction::power(1.0)), Some(1.0)).unwrap();
        assert_eq!(r.n, 4);
        assert_eq!(r.lambda.len(), 5);
        assert_abs_diff_eq!(r.rhs_cor.unwrap(), r.rhs_cg, epsilon = 1e-12);
        assert_abs_diff_eq!(r.fitted_c, 0.03 / r.rhs_cg, epsilon = 1e-15);
    }
}
