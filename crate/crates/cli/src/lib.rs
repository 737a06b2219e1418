//! Experiment runner behind the `freeclt` binary: CLT sweeps, bound reports,
//! Lindeberg profiles, Monte Carlo cross-checks and single convolutions.

pub mod config;
pub mod format;
pub mod svg;

use std::path::{Path, PathBuf};
use std::time::Instant;

use freeclt::bounds::{fit_constant, lambda_n, BoundReport, BoundsError, TriangularRow};
use freeclt::families::{Family, FamilyError};
use freeclt::freeconv::{clt_sum_report, free_convolve_report, ConvError};
use freeclt::oracle::{free_sum_esd, OracleError};
use freeclt::SemicircleLaw;
use rayon::prelude::*;
use thiserror::Error;

pub use config::ExperimentConfig;
use format::{bounds_header, eps_label, opt_cell, sig9};

/// Oracle discrepancies above this are flagged.
pub const ORACLE_FLAG: f64 = 0.03;

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Subcommand {
    CltSweep,
    Lindeberg,
    OracleCheck,
    BoundsReport,
    Convolve,
}

#[derive(Debug, Error)]
pub enum RunError {
    #[error("{0}")]
    Config(String),
    #[error("{0}")]
    Numerical(String),
}

impl RunError {
    pub fn exit_code(&self) -> i32 {
        match self {
            RunError::Config(_) => 2,
            RunError::Numerical(_) => 3,
        }
    }

    fn at(n: usize) -> impl Fn(RunError) -> RunError {
        move |e| match e {
            RunError::Config(m) => RunError::Config(format!("n = {n}: {m}")),
            RunError::Numerical(m) => RunError::Numerical(format!("n = {n}: {m}")),
        }
    }
}

impl From<ConvError> for RunError {
    fn from(e: ConvError) -> Self {
        match e {
            ConvError::Params(_) => RunError::Config(e.to_string()),
            _ => RunError::Numerical(e.to_string()),
        }
    }
}

impl From<BoundsError> for RunError {
    fn from(e: BoundsError) -> Self {
        match e {
            BoundsError::Conv(c) => c.into(),
            BoundsError::Epsilon(_) | BoundsError::Delta(_) | BoundsError::NotGClass { .. } | BoundsError::EmptyRow => RunError::Config(e.to_string()),
            _ => RunError::Numerical(e.to_string()),
        }
    }
}

impl From<FamilyError> for RunError {
    fn from(e: FamilyError) -> Self {
        match e {
            FamilyError::Bounds(b) => b.into(),
            _ => RunError::Config(e.to_string()),
        }
    }
}

impl From<OracleError> for RunError {
    fn from(e: OracleError) -> Self {
        match e {
            OracleError::SmallMatrix(_) | OracleError::NoTrials | OracleError::Empty => RunError::Config(e.to_string()),
            _ => RunError::Numerical(e.to_string()),
        }
    }
}

#[derive(Debug, Clone, Copy, Default)]
pub struct RunOptions {
    /// Overrides the oracle seed.
    pub seed: Option<u64>,
    /// Fill `wall_ms`; off by default so outputs are reproducible.
    pub timing: bool,
}

#[derive(Debug, Clone, Default)]
pub struct RunOutput {
    pub files: Vec<PathBuf>,
    /// Notes for standard output.
    pub notes: Vec<String>,
}

/// One `n` of a sweep.
#[derive(Debug, Clone)]
pub struct SweepRow {
    pub report: BoundReport,
    pub mass_defect: f64,
    pub wall_ms: f64,
}

fn clt_delta(row: &TriangularRow, cfg: &ExperimentConfig) -> Result<(f64, f64), RunError> {
    let (sum, rep) = clt_sum_report(row, &cfg.conv_params)?;
    Ok((SemicircleLaw::standard().kolmogorov_distance(&sum), rep.mass_defect))
}

/// Measured distance and every bound for each `n`; `fitted_c` is the smallest
/// `C` with `Δ ≤ C·rhs_cg` across the sweep.
pub fn sweep(cfg: &ExperimentConfig, opts: &RunOptions) -> Result<Vec<SweepRow>, RunError> {
    let family = cfg.family()?;
    let g = cfg.g_spec.as_ref().map(|g| g.growth()).transpose()?;
    let cor = cfg.g_spec.as_ref().and_then(|g| g.power());
    let mut rows = cfg
        .n_values
        .par_iter()
        .map(|&n| {
            let go = || -> Result<SweepRow, RunError> {
                let start = Instant::now();
                let row = family.row(n)?;
                let (delta, mass_defect) = clt_delta(&row, cfg)?;
                let report = BoundReport::evaluate(&row, delta, &cfg.epsilons, g.as_ref(), cor)?;
                let wall_ms = if opts.timing { start.elapsed().as_secs_f64() * 1e3 } else { 0.0 };
                Ok(SweepRow { report, mass_defect, wall_ms })
            };
            go().map_err(RunError::at(n))
        })
        .collect::<Result<Vec<_>, _>>()?;
    let pairs: Vec<(f64, f64)> = rows.iter().map(|r| (r.report.delta_measured, r.report.rhs_cg)).collect();
    let c = fit_constant(&pairs)?;
    rows.iter_mut().for_each(|r| r.report.fitted_c = c);
    Ok(rows)
}

pub fn sweep_csv(epsilons: &[f64], rows: &[SweepRow]) -> String {
    let mut out = bounds_header(epsilons);
    out.push('\n');
    for r in rows {
        let b = &r.report;
        let mut cells = vec![b.n.to_string(), sig9(b.delta_measured), sig9(b.rhs_cg)];
        cells.extend(b.rhs_thm3.iter().map(|&(_, v)| sig9(v)));
        cells.extend([opt_cell(b.rhs_thm4), opt_cell(b.rhs_cor), sig9(b.fitted_c), sig9(r.mass_defect), sig9(r.wall_ms)]);
        out.push_str(&cells.join(","));
        out.push('\n');
    }
    out
}

/// Per-`n` Lindeberg function and measured distance.
#[derive(Debug, Clone)]
pub struct LindebergRow {
    pub n: usize,
    pub delta: f64,
    pub lambda: Vec<f64>,
    /// `max σⱼ² / Bₙ²`.
    pub max_share: f64,
}

pub fn lindeberg(cfg: &ExperimentConfig) -> Result<Vec<LindebergRow>, RunError> {
    let family = cfg.family()?;
    cfg.n_values
        .par_iter()
        .map(|&n| {
            let go = || -> Result<LindebergRow, RunError> {
                let row = family.row(n)?;
                let lambda = cfg.epsilons.iter().map(|&e| lambda_n(&row, e)).collect::<Result<Vec<_>, _>>()?;
                let (delta, _) = clt_delta(&row, cfg)?;
                let max_share = row.sigma_sq().iter().fold(0.0f64, |a, &s| a.max(s)) / row.b_n_sq();
                Ok(LindebergRow { n, delta, lambda, max_share })
            };
            go().map_err(RunError::at(n))
        })
        .collect()
}

pub fn lindeberg_csv(epsilons: &[f64], rows: &[LindebergRow]) -> String {
    let mut out = String::from("n,delta");
    for &e in epsilons {
        out.push_str(&format!(",lambda_eps{}", eps_label(e)));
    }
    out.push('\n');
    for r in rows {
        out.push_str(&r.n.to_string());
        out.push(',');
        out.push_str(&sig9(r.delta));
        for &l in &r.lambda {
            out.push(',');
            out.push_str(&sig9(l));
        }
        out.push('\n');
    }
    out
}

/// A profile fails Lindeberg's condition at desk scale when, for some `ε`,
/// `Λₙ(ε)` stops decreasing over the second half of the sweep while staying
/// above 0.05 and one summand keeps at least 5% of the variance.
pub fn lindeberg_verdict(epsilons: &[f64], rows: &[LindebergRow]) -> String {
    if rows.len() < 3 {
        return "too few n values for a Lindeberg verdict".into();
    }
    let tail = &rows[rows.len() / 2..];
    let last = rows.last().expect("nonempty");
    for (k, &e) in epsilons.iter().enumerate() {
        let stalled = tail.windows(2).all(|w| w[1].lambda[k] >= w[0].lambda[k] * (1.0 - 1e-9));
        if stalled && last.lambda[k] >= 0.05 && last.max_share >= 0.05 {
            return format!("Lindeberg violated: Λ_n({}) stays at {} up to n = {}", eps_label(e), sig9(last.lambda[k]), last.n);
        }
    }
    format!("Lindeberg profile decreasing up to n = {}", last.n)
}

#[derive(Debug, Clone)]
pub struct OracleRow {
    pub n: usize,
    pub delta: f64,
}

/// `Δ(analytic normalized sum, Monte Carlo spectrum)` for each `n`.
pub fn oracle_check(cfg: &ExperimentConfig, opts: &RunOptions) -> Result<Vec<OracleRow>, RunError> {
    let family = cfg.family()?;
    let mut spec = cfg.oracle_spec.ok_or_else(|| RunError::Config("oracle-check needs oracle_spec".into()))?;
    if let Some(s) = opts.seed {
        spec.seed = s;
    }
    cfg.n_values
        .iter()
        .map(|&n| {
            let go = || -> Result<OracleRow, RunError> {
                let row = family.row(n)?;
                let (analytic, _) = clt_sum_report(&row, &cfg.conv_params)?;
                let scaled = row.scaled(1.0 / row.b_n())?;
                let esd = free_sum_esd(scaled.measures(), &spec)?;
                Ok(OracleRow { n, delta: esd.kolmogorov_distance(&analytic) })
            };
            go().map_err(RunError::at(n))
        })
        .collect()
}

pub fn oracle_csv(rows: &[OracleRow]) -> String {
    let mut out = String::from("n,delta_oracle,flagged\n");
    for r in rows {
        out.push_str(&format!("{},{},{}\n", r.n, sig9(r.delta), u8::from(r.delta > ORACLE_FLAG)));
    }
    out
}

fn write(path: &Path, text: &str, out: &mut RunOutput) -> Result<(), RunError> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|e| RunError::Config(format!("cannot create {}: {e}", dir.display())))?;
    }
    std::fs::write(path, text).map_err(|e| RunError::Config(format!("cannot write {}: {e}", path.display())))?;
    out.files.push(path.to_path_buf());
    Ok(())
}

/// Validates `cfg` for `cmd`, runs it and writes `<output_prefix>.<ext>` files.
pub fn run(cmd: Subcommand, cfg: &ExperimentConfig, opts: &RunOptions) -> Result<RunOutput, RunError> {
    cfg.validate(cmd)?;
    let mut out = RunOutput::default();
    match cmd {
        Subcommand::CltSweep => {
            let rows = sweep(cfg, opts)?;
            let csv = sweep_csv(&cfg.epsilons, &rows);
            let title = format!("{} sweep", family_name(cfg.family()?));
            let svg = svg::svg_from_csv(&csv, &title).map_err(|e| RunError::Numerical(e.to_string()))?;
            write(&cfg.output("csv"), &csv, &mut out)?;
            write(&cfg.output("svg"), &svg, &mut out)?;
            out.notes.push(format!("fitted C = {}", sig9(rows[0].report.fitted_c)));
        }
        Subcommand::BoundsReport => {
            let rows = sweep(cfg, opts)?;
            let reports: Vec<&BoundReport> = rows.iter().map(|r| &r.report).collect();
            let json = serde_json::to_string_pretty(&reports).map_err(|e| RunError::Numerical(e.to_string()))?;
            write(&cfg.output("csv"), &sweep_csv(&cfg.epsilons, &rows), &mut out)?;
            write(&cfg.output("json"), &(json + "\n"), &mut out)?;
        }
        Subcommand::Lindeberg => {
            let rows = lindeberg(cfg)?;
            let verdict = lindeberg_verdict(&cfg.epsilons, &rows);
            write(&cfg.output("csv"), &lindeberg_csv(&cfg.epsilons, &rows), &mut out)?;
            write(&cfg.output("txt"), &format!("{verdict}\n"), &mut out)?;
            out.notes.push(verdict);
        }
        Subcommand::OracleCheck => {
            let rows = oracle_check(cfg, opts)?;
            write(&cfg.output("csv"), &oracle_csv(&rows), &mut out)?;
            for r in rows.iter().filter(|r| r.delta > ORACLE_FLAG) {
                out.notes.push(format!("flagged: n = {} has oracle discrepancy {} > {ORACLE_FLAG}", r.n, sig9(r.delta)));
            }
        }
        Subcommand::Convolve => {
            let (m, rep) = free_convolve_report(&cfg.measures[0], &cfg.measures[1], &cfg.conv_params)?;
            let json = serde_json::to_string(&m).map_err(|e| RunError::Numerical(e.to_string()))?;
            write(&cfg.output("json"), &(json + "\n"), &mut out)?;
            out.notes.push(format!("mass defect {}, mean error {}, variance error {}", sig9(rep.mass_defect), sig9(rep.mean_error), sig9(rep.variance_error)));
        }
    }
    Ok(out)
}

fn family_name(f: &Family) -> String {
    serde_json::to_string(f).unwrap_or_default().replace('"', "")
}

#[cfg(test)]
mod tests {
    use super::*;

    fn lrow(n: usize, lambda: f64, share: f64) -> LindebergRow {
        LindebergRow { n, delta: 0.0, lambda: vec![lambda], max_share: share }
    }

    #[test]
    fn verdicts() {
        let stalled: Vec<_> = [1, 4, 8, 16].iter().map(|&n| lrow(n, 0.5, 0.5)).collect();
        assert!(lindeberg_verdict(&[0.5], &stalled).starts_with("Lindeberg violated"));
        let decaying: Vec<_> = [1, 4, 8, 16].iter().map(|&n| lrow(n, 1.0 / n as f64, 1.0 / n as f64)).collect();
        assert!(lindeberg_verdict(&[0.5], &decaying).starts_with("Lindeberg profile decreasing"));
        // a flat profile of many equal summands is not flagged
        let flat_iid: Vec<_> = [8, 16, 32, 64].iter().map(|&n| lrow(n, 1.0, 1.0 / n as f64)).collect();
        assert!(!lindeberg_verdict(&[0.05], &flat_iid).starts_with("Lindeberg violated"));
        assert!(lindeberg_verdict(&[0.5], &stalled[..2]).starts_with("too few"));
    }

    #[test]
    fn error_codes() {
        assert_eq!(RunError::Config(String::new()).exit_code(), 2);
        assert_eq!(RunError::Numerical(String::new()).exit_code(), 3);
        let e: RunError = ConvError::MassDefect { defect: 0.1, limit: 0.01 }.into();
        assert_eq!(e.exit_code(), 3);
    }
}
