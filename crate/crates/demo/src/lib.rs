//! JSON-in, JSON-out entry points for the browser page in `www/`.

use freeclt::families::Family;
use freeclt::{build_row, clt_sum, free_convolve, ConvolutionParams, Measure, SemicircleLaw};
use serde::Serialize;
use wasm_bindgen::prelude::*;

/// Larger grids freeze the page for too long.
const MAX_GRID: usize = 8192;
const MAX_N: usize = 256;
const PLOT_POINTS: usize = 400;

#[derive(Serialize)]
struct Curve {
    x: Vec<f64>,
    density: Vec<f64>,
    atoms: Vec<(f64, f64)>,
}

#[derive(Serialize)]
struct ConvolveOut {
    measure: Measure,
    curve: Curve,
    mean: f64,
    variance: f64,
}

#[derive(Serialize)]
struct CltOut {
    curve: Curve,
    semicircle: Vec<f64>,
    delta: f64,
}

fn params(grid_points: usize) -> Result<ConvolutionParams, String> {
    if !(16..=MAX_GRID).contains(&grid_points) {
        return Err(format!("grid_points must lie in [16, {MAX_GRID}]"));
    }
    Ok(ConvolutionParams::default().with_grid_points(grid_points))
}

fn curve(m: &Measure, lo: f64, hi: f64) -> Curve {
    let x: Vec<f64> = (0..PLOT_POINTS).map(|i| lo + (hi - lo) * i as f64 / (PLOT_POINTS - 1) as f64).collect();
    let density = x.iter().map(|&t| m.density_at(t)).collect();
    Curve { x, density, atoms: m.atoms().to_vec() }
}

fn parse_measure(s: &str) -> Result<Measure, String> {
    serde_json::from_str(s).map_err(|e| format!("measure: {e}"))
}

fn to_json<T: Serialize>(v: &T) -> Result<String, String> {
    serde_json::to_string(v).map_err(|e| e.to_string())
}

pub fn convolve_json(mu: &str, nu: &str, grid_points: usize) -> Result<String, String> {
    let (mu, nu) = (parse_measure(mu)?, parse_measure(nu)?);
    let out = free_convolve(&mu, &nu, &params(grid_points)?).map_err(|e| e.to_string())?;
    let (lo, hi) = out.support();
    let pad = 0.05 * (hi - lo).max(1e-3);
    to_json(&ConvolveOut { curve: curve(&out, lo - pad, hi + pad), mean: out.mean(), variance: out.variance(), measure: out })
}

pub fn clt_json(family: &str, n: usize, grid_points: usize) -> Result<String, String> {
    let family: Family = serde_json::from_str(family).map_err(|e| format!("family: {e}"))?;
    if !family.is_centered() {
        return Err("family must be centered".into());
    }
    if !(1..=MAX_N).contains(&n) {
        return Err(format!("n must lie in [1, {MAX_N}]"));
    }
    let row = family.row(n).map_err(|e| e.to_string())?;
    let sum = clt_sum(&row, &params(grid_points)?).map_err(|e| e.to_string())?;
    let sc = SemicircleLaw::standard();
    let (lo, hi) = sum.support();
    let c = curve(&sum, lo.min(-2.0) - 0.1, hi.max(2.0) + 0.1);
    to_json(&CltOut { semicircle: c.x.iter().map(|&t| sc.density(t)).collect(), delta: sc.kolmogorov_distance(&sum), curve: c })
}

pub fn semicircle_distance_json(measures: &str) -> Result<f64, String> {
    let ms: Vec<Measure> = serde_json::from_str(measures).map_err(|e| format!("measures: {e}"))?;
    if ms.is_empty() {
        return Err("need at least one measure".into());
    }
    let row = build_row(ms).map_err(|e| e.to_string())?;
    let sum = clt_sum(&row, &ConvolutionParams::default()).map_err(|e| e.to_string())?;
    Ok(SemicircleLaw::standard().kolmogorov_distance(&sum))
}

/// Free convolution of two measures given as JSON.
#[wasm_bindgen]
pub fn convolve(mu: &str, nu: &str, grid_points: usize) -> Result<String, JsError> {
    convolve_json(mu, nu, grid_points).map_err(|e| JsError::new(&e))
}

/// Normalized free sum of row `n` of a family, against the semicircle.
#[wasm_bindgen]
pub fn clt(family: &str, n: usize, grid_points: usize) -> Result<String, JsError> {
    clt_json(family, n, grid_points).map_err(|e| JsError::new(&e))
}

/// Kolmogorov distance of the normalized free sum of centered measures to the
/// semicircle.
#[wasm_bindgen]
pub fn semicircle_distance(measures: &str) -> Result<f64, JsError> {
    semicircle_distance_json(measures).map_err(|e| JsError::new(&e))
}
