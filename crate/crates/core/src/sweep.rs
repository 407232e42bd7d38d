//! Convergence harness: runs the full pipeline (bands → edge → envelope →
//! ansatz → Petviashvili) across a list of ε values, measures the
//! asymptotic error E(ε) = sup|B − B_app|, and fits its order in ε.

use thiserror::Error;

use crate::bands::{
    default_box_half_width, default_points_per_axis, find_gap, locate_edge, sample_bands,
    BandError, EdgeSide,
};
use crate::field::make_grid;
use crate::model::{CmeParameters, ModelError};
use crate::nls::{
    canonicalize, effective_coefficients, solve_ground_state_radial, NlsError,
    DEFAULT_RADIAL_TOLERANCE,
};
use crate::solver::{build_ansatz, petviashvili_solve, SolveOptions};

#[derive(Debug, Error)]
pub enum SweepError {
    #[error("eps values must be positive and strictly decreasing")]
    InvalidEpsList,
    #[error("need at least two data points to fit a slope")]
    InsufficientData,
    #[error("the model has no spectral gap on the sampled box")]
    NoGap,
    #[error("{} of the runs failed: {}", failures.len(), summarize(failures))]
    Partial {
        report: Box<ConvergenceReport>,
        failures: Vec<EpsFailure>,
    },
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Bands(#[from] BandError),
    #[error(transparent)]
    Nls(#[from] NlsError),
}

fn summarize(failures: &[EpsFailure]) -> String {
    failures
        .iter()
        .map(|f| format!("eps={}: {}", f.eps, f.message))
        .collect::<Vec<_>>()
        .join("; ")
}

#[derive(Debug, Clone)]
pub struct EpsFailure {
    pub eps: f64,
    pub message: String,
}

/// One converged run.
#[derive(Debug, Clone)]
pub struct EpsRecord {
    pub eps: f64,
    pub omega: f64,
    pub e_sup: f64,
    pub residual_final: f64,
    pub iterations: usize,
    pub im_part_sup: f64,
}

/// Least-squares line through (log ε, log E).
#[derive(Debug, Clone, Copy)]
pub struct SlopeFit {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
}

#[derive(Debug, Clone)]
pub struct SweepMetadata {
    /// Content hash of the parameter set as solved (flip already applied).
    pub model_hash: String,
    pub sign_flip_applied: bool,
    /// Signed detuning coefficient: ω = ω₀ + ε²ω₁.
    pub omega1: f64,
    pub edge_side: EdgeSide,
    pub grid_points: usize,
    pub box_mult: f64,
    pub tol: f64,
    pub max_iter: usize,
    pub relax: f64,
    pub dealias: bool,
}

#[derive(Debug, Clone)]
pub struct ConvergenceReport {
    pub records: Vec<EpsRecord>,
    /// None when fewer than two runs converged (slope undefined).
    pub fit: Option<SlopeFit>,
    /// Successive error ratios E(ε_i)/E(ε_{i+1}) in list order.
    pub ratios: Vec<f64>,
    pub metadata: SweepMetadata,
}

#[derive(Debug, Clone)]
pub struct SweepConfig {
    /// Strictly decreasing; the default four-value list stops at 0.025.
    pub eps_list: Vec<f64>,
    pub omega1_magnitude: f64,
    pub flip_nonlinearity: bool,
    pub side: EdgeSide,
    pub grid_points: usize,
    pub box_mult: f64,
    pub solve: SolveOptions,
}

impl Default for SweepConfig {
    fn default() -> Self {
        SweepConfig {
            eps_list: vec![0.2, 0.1, 0.05, 0.025],
            omega1_magnitude: 1.0,
            flip_nonlinearity: false,
            side: EdgeSide::Lower,
            grid_points: 160,
            box_mult: 3.0,
            solve: SolveOptions::default(),
        }
    }
}

/// Ordinary least squares on (x, y) pairs; r² = 1 for an exact fit.
pub fn fit_slope(points: &[(f64, f64)]) -> Result<SlopeFit, SweepError> {
    if points.len() < 2 {
        return Err(SweepError::InsufficientData);
    }
    let n = points.len() as f64;
    let xbar = points.iter().map(|(x, _)| x).sum::<f64>() / n;
    let ybar = points.iter().map(|(_, y)| y).sum::<f64>() / n;
    let mut sxx = 0.0;
    let mut sxy = 0.0;
    for (x, y) in points {
        sxx += (x - xbar) * (x - xbar);
        sxy += (x - xbar) * (y - ybar);
    }
    let slope = sxy / sxx;
    let intercept = ybar - slope * xbar;
    let mut ss_res = 0.0;
    let mut ss_tot = 0.0;
    for (x, y) in points {
        let fitted = slope * x + intercept;
        ss_res += (y - fitted) * (y - fitted);
        ss_tot += (y - ybar) * (y - ybar);
    }
    let r_squared = if ss_tot == 0.0 { 1.0 } else { 1.0 - ss_res / ss_tot };
    Ok(SlopeFit { slope, intercept, r_squared })
}

/// Full study. The spectral analysis, envelope reduction, and canonical
/// ground state are computed once; each ε then gets its own grid, ansatz,
/// and Petviashvili solve. Runs are sequential in list order so reports
/// are reproducible bit-for-bit.
pub fn run_convergence_study(
    params: &CmeParameters,
    config: &SweepConfig,
) -> Result<ConvergenceReport, SweepError> {
    if config.eps_list.is_empty()
        || config.eps_list.iter().any(|e| !e.is_finite() || *e <= 0.0)
        || config.eps_list.windows(2).any(|w| w[1] >= w[0])
    {
        return Err(SweepError::InvalidEpsList);
    }

    let work = if config.flip_nonlinearity {
        params.flip_nonlinearity()
    } else {
        params.clone()
    };
    work.validate()?;
    let dim = work.dim();

    let bands = sample_bands(
        &work,
        default_box_half_width(&work),
        default_points_per_axis(dim),
    )?;
    let gap = find_gap(&bands).ok_or(SweepError::NoGap)?;
    let edge = locate_edge(&work, &bands, &gap, config.side)?;
    let nls = effective_coefficients(&edge, &work, config.omega1_magnitude, config.flip_nonlinearity);
    let scaling = canonicalize(&nls)?;
    let profile = solve_ground_state_radial(dim, DEFAULT_RADIAL_TOLERANCE)?.with_scaling(&scaling);

    let mut records = Vec::new();
    let mut failures = Vec::new();
    for &eps in &config.eps_list {
        let grid = make_grid(dim, eps, config.box_mult, config.grid_points);
        let (ansatz, _) = build_ansatz(eps, &edge, &profile, &grid);
        let omega = edge.omega0 + eps * eps * nls.omega1;
        match petviashvili_solve(&ansatz, omega, &work, &config.solve) {
            Ok((soliton, diagnostics)) => records.push(EpsRecord {
                eps,
                omega,
                e_sup: soliton.sup_distance(&ansatz),
                residual_final: *diagnostics.residual_sup_history.last().unwrap(),
                iterations: diagnostics.iterations,
                im_part_sup: soliton.sup_norm_imag(),
            }),
            Err(err) => failures.push(EpsFailure { eps, message: err.to_string() }),
        }
    }

    let fit = if records.len() >= 2 {
        let points: Vec<(f64, f64)> = records
            .iter()
            .map(|r| (r.eps.ln(), r.e_sup.ln()))
            .collect();
        Some(fit_slope(&points)?)
    } else {
        None
    };
    let ratios = records
        .windows(2)
        .map(|w| w[0].e_sup / w[1].e_sup)
        .collect();

    let report = ConvergenceReport {
        records,
        fit,
        ratios,
        metadata: SweepMetadata {
            model_hash: work.content_hash(),
            sign_flip_applied: config.flip_nonlinearity,
            omega1: nls.omega1,
            edge_side: config.side,
            grid_points: config.grid_points,
            box_mult: config.box_mult,
            tol: config.solve.tol,
            max_iter: config.solve.max_iter,
            relax: config.solve.relax,
            dealias: config.solve.dealias,
        },
    };
    if failures.is_empty() {
        Ok(report)
    } else {
        Err(SweepError::Partial { report: Box::new(report), failures })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::CMat;
    use crate::model::CubicTerm;
    use approx::assert_relative_eq;
    use num_complex::Complex64 as C64;

    fn two_mode_line(kappa: f64) -> CmeParameters {
        let mut coupling = CMat::zeros(2);
        coupling.set(0, 1, C64::new(kappa, 0.0));
        coupling.set(1, 0, C64::new(kappa, 0.0));
        let one = C64::new(1.0, 0.0);
        let cubic = vec![
            CubicTerm::new(0, 0, 0, 0, one),
            CubicTerm::new(0, 0, 1, 1, one),
            CubicTerm::new(0, 1, 1, 0, one),
            CubicTerm::new(1, 1, 1, 1, one),
            CubicTerm::new(1, 1, 0, 0, one),
            CubicTerm::new(1, 0, 0, 1, one),
        ];
        CmeParameters::new(1, vec![vec![1.0], vec![-1.0]], coupling, cubic).unwrap()
    }

    #[test]
    fn exact_line_is_recovered() {
        let points: Vec<(f64, f64)> = (0..5).map(|i| {
            let x = -(i as f64);
            (x, 2.0 * x + 1.0)
        }).collect();
        let fit = fit_slope(&points).unwrap();
        assert_relative_eq!(fit.slope, 2.0, epsilon = 1e-12);
        assert_relative_eq!(fit.intercept, 1.0, epsilon = 1e-12);
        assert_relative_eq!(fit.r_squared, 1.0, epsilon = 1e-12);
    }

    #[test]
    fn two_points_interpolate_exactly() {
        let fit = fit_slope(&[(0.0, 1.0), (1.0, 4.0)]).unwrap();
        assert_relative_eq!(fit.slope, 3.0, epsilon = 1e-12);
        assert_relative_eq!(fit.r_squared, 1.0, epsilon = 1e-12);
    }

    #[test]
    fn one_point_cannot_be_fit() {
        assert!(matches!(fit_slope(&[(0.0, 1.0)]), Err(SweepError::InsufficientData)));
    }

    #[test]
    fn eps_lists_must_strictly_decrease() {
        let params = two_mode_line(1.0);
        for bad in [vec![], vec![0.1, 0.2], vec![0.1, 0.1], vec![0.1, -0.05]] {
            let config = SweepConfig { eps_list: bad, ..SweepConfig::default() };
            assert!(matches!(
                run_convergence_study(&params, &config),
                Err(SweepError::InvalidEpsList)
            ));
        }
    }

    #[test]
    fn single_eps_run_reports_without_a_slope() {
        let params = two_mode_line(1.0);
        let config = SweepConfig {
            eps_list: vec![0.1],
            flip_nonlinearity: true,
            ..SweepConfig::default()
        };
        let report = run_convergence_study(&params, &config).unwrap();
        assert_eq!(report.records.len(), 1);
        assert!(report.fit.is_none());
        assert!(report.ratios.is_empty());
        assert!(report.metadata.sign_flip_applied);
        assert_eq!(report.metadata.model_hash.len(), 64);
        let record = &report.records[0];
        assert!(record.e_sup > 0.0);
        assert_relative_eq!(record.omega, -1.0 + 0.01, epsilon = 1e-9);
    }

    #[test]
    fn two_eps_study_shows_second_order_error() {
        let params = two_mode_line(1.0);
        let config = SweepConfig {
            eps_list: vec![0.2, 0.1],
            flip_nonlinearity: true,
            ..SweepConfig::default()
        };
        let report = run_convergence_study(&params, &config).unwrap();
        assert_eq!(report.records.len(), 2);
        assert_eq!(report.ratios.len(), 1);
        assert!(
            report.ratios[0] > 3.0 && report.ratios[0] < 5.0,
            "ratio = {}",
            report.ratios[0]
        );
        let fit = report.fit.unwrap();
        assert!(fit.slope > 1.6 && fit.slope < 2.4, "slope = {}", fit.slope);
    }

    #[test]
    fn unflipped_defocusing_case_is_rejected_before_any_solve() {
        // Positive cubic coefficient with a positive detuning at the lower
        // edge: no real decaying envelope exists, and the study reports it.
        let params = two_mode_line(1.0);
        let config = SweepConfig { eps_list: vec![0.1], ..SweepConfig::default() };
        assert!(matches!(
            run_convergence_study(&params, &config),
            Err(SweepError::Nls(NlsError::NoRealGroundState { .. }))
        ));
    }

    #[test]
    fn iteration_starvation_surfaces_as_partial_report() {
        let params = two_mode_line(1.0);
        let config = SweepConfig {
            eps_list: vec![0.2, 0.1],
            flip_nonlinearity: true,
            solve: SolveOptions { max_iter: 1, ..SolveOptions::default() },
            ..SweepConfig::default()
        };
        match run_convergence_study(&params, &config) {
            Err(SweepError::Partial { report, failures }) => {
                assert!(report.records.is_empty());
                assert!(report.fit.is_none());
                assert_eq!(failures.len(), 2);
                assert!(failures[0].message.contains("1 iterations"));
            }
            other => panic!("expected Partial, got {other:?}"),
        }
    }

    #[test]
    fn reports_are_deterministic() {
        let params = two_mode_line(1.0);
        let config = SweepConfig {
            eps_list: vec![0.2, 0.1],
            flip_nonlinearity: true,
            ..SweepConfig::default()
        };
        let a = run_convergence_study(&params, &config).unwrap();
        let b = run_convergence_study(&params, &config).unwrap();
        assert_eq!(a.metadata.model_hash, b.metadata.model_hash);
        for (ra, rb) in a.records.iter().zip(&b.records) {
            assert_eq!(ra.e_sup.to_bits(), rb.e_sup.to_bits());
            assert_eq!(ra.residual_final.to_bits(), rb.residual_final.to_bits());
            assert_eq!(ra.im_part_sup.to_bits(), rb.im_part_sup.to_bits());
            assert_eq!(ra.iterations, rb.iterations);
        }
    }
}
