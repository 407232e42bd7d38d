//! Gap-soliton solver: the slowly-varying ansatz sampled on the periodic
//! grid, stationary residuals of the first-order system, and Petviashvili
//! refinement in Fourier variables.

use num_complex::Complex64;
use thiserror::Error;

use crate::bands::{symbol, SpectralEdge};
use crate::field::{ComplexField, Grid, Transformer};
use crate::linalg::{hermitian_eigen, lu_factor, CMat, LinalgError, LuFactors};
use crate::model::CmeParameters;
use crate::nls::{evaluate_envelope, RadialProfile};

pub type C64 = Complex64;

/// Convergence threshold, relative to the iterate's sup norm.
pub const DEFAULT_SOLVE_TOLERANCE: f64 = 1e-10;
pub const DEFAULT_MAX_ITERATIONS: usize = 500;
/// |S − 1| must fall below this together with the residual test.
const STABILIZATION_TOLERANCE: f64 = 1e-10;
/// ω counts as inside the gap when every lattice M(k) keeps |eig| above
/// this floor.
const GAP_DISTANCE_FLOOR: f64 = 1e-8;
const DIVERGENCE_FACTOR: f64 = 1e6;
const DENOMINATOR_FLOOR: f64 = 1e-280;
/// Envelope mass at the box faces beyond this fraction of C(0) means the
/// periodic extension aliases noticeably.
pub const DOMAIN_DECAY_THRESHOLD: f64 = 1e-6;

#[derive(Debug, Error)]
pub enum SolveError {
    #[error("ω = {omega} is not inside a spectral gap on this lattice: min |eig(L(ik) − ωI)| = {min_eigenvalue:.3e}")]
    NotInGap { omega: f64, min_eigenvalue: f64 },
    #[error("stabilization denominator ⟨N̂(B), B̂⟩ vanished at iteration {at_iteration}; the iterate carries no cubic response (zero initial guess?)")]
    ZeroDenominator { at_iteration: usize },
    #[error("Petviashvili iteration diverged after {iterations} iterations: {reason}")]
    Diverged { iterations: usize, reason: String },
    #[error(transparent)]
    Linalg(#[from] LinalgError),
}

/// How well the envelope fits the periodic box.
#[derive(Debug, Clone, Copy)]
pub struct AnsatzReport {
    /// max over box faces of |C| there relative to |C(0)|.
    pub edge_decay_ratio: f64,
    /// Warning-level: ratio above [`DOMAIN_DECAY_THRESHOLD`], so the
    /// periodic extension of the ansatz aliases.
    pub domain_too_small: bool,
}

/// Sample B_app(x) = ε C(εx) e^{i k₀·x} η on the grid.
pub fn build_ansatz(
    eps: f64,
    edge: &SpectralEdge,
    envelope: &RadialProfile,
    grid: &Grid,
) -> (ComplexField, AnsatzReport) {
    assert!(eps > 0.0, "eps must be positive");
    assert_eq!(grid.dim, edge.k0.len(), "grid and edge dimensions must agree");
    let num_modes = edge.eta.len();
    let num_points = grid.num_points();

    let c0 = evaluate_envelope(envelope, &vec![0.0; grid.dim]).abs();
    let mut ratio = 0.0_f64;
    for a in 0..grid.dim {
        let mut face = vec![0.0; grid.dim];
        face[a] = eps * grid.half_extents[a];
        ratio = ratio.max(evaluate_envelope(envelope, &face).abs() / c0.max(f64::MIN_POSITIVE));
    }

    let mut components = vec![vec![C64::new(0.0, 0.0); num_points]; num_modes];
    for p in 0..num_points {
        let x = grid.coordinate(p);
        let slow: Vec<f64> = x.iter().map(|v| eps * v).collect();
        let c = evaluate_envelope(envelope, &slow);
        let phase: f64 = edge.k0.iter().zip(&x).map(|(k, v)| k * v).sum();
        let value = C64::from_polar(eps * c, phase);
        for (j, comp) in components.iter_mut().enumerate() {
            comp[p] = value * edge.eta[j];
        }
    }

    let report = AnsatzReport {
        edge_decay_ratio: ratio,
        domain_too_small: ratio > DOMAIN_DECAY_THRESHOLD,
    };
    (ComplexField::from_components(grid.clone(), components), report)
}

fn nonlinearity_field(field_components: &[Vec<C64>], params: &CmeParameters) -> Vec<Vec<C64>> {
    let num_modes = field_components.len();
    let num_points = field_components[0].len();
    let mut out = vec![vec![C64::new(0.0, 0.0); num_points]; num_modes];
    let mut slot = vec![C64::new(0.0, 0.0); num_modes];
    for p in 0..num_points {
        for (j, comp) in field_components.iter().enumerate() {
            slot[j] = comp[p];
        }
        let nl = params.nonlinearity(&slot);
        for (j, row) in out.iter_mut().enumerate() {
            row[p] = nl[j];
        }
    }
    out
}

/// Norms of ωB̂ − L(ik)B̂ + N̂(B) on the wavevector lattice: the sup norm of
/// its inverse transform and the spectral L² norm.
pub fn stationary_residual(
    field: &ComplexField,
    omega: f64,
    params: &CmeParameters,
) -> (f64, f64) {
    let grid = &field.grid;
    let num_modes = field.num_components();
    assert_eq!(num_modes, params.num_modes(), "field/model mode count");
    let num_points = grid.num_points();
    let t = Transformer::new(grid);

    let b_hat = field.to_spectral(&t);
    let mut r_hat = nonlinearity_field(field.components(), params);
    for row in r_hat.iter_mut() {
        t.forward_in_place(row);
    }

    let mut slot = vec![C64::new(0.0, 0.0); num_modes];
    let mut l2_sq = 0.0;
    for p in 0..num_points {
        let k = grid.wavevector(p);
        let l = symbol(params, &k);
        for (j, row) in b_hat.iter().enumerate() {
            slot[j] = row[p];
        }
        let lb = l.mul_vec(&slot);
        for j in 0..num_modes {
            let r = omega * slot[j] - lb[j] + r_hat[j][p];
            r_hat[j][p] = r;
            l2_sq += r.norm_sqr();
        }
    }

    let mut sup = 0.0_f64;
    for row in r_hat.iter_mut() {
        t.inverse_in_place(row);
        for z in row.iter() {
            sup = sup.max(z.norm());
        }
    }
    (sup, l2_sq.sqrt())
}

#[derive(Debug, Clone, Copy)]
pub struct SolveOptions {
    /// Residual target relative to sup|B|.
    pub tol: f64,
    pub max_iter: usize,
    /// Under-relaxation θ: B̂ ← (1−θ)B̂ + θ·S^{3/2}M⁻¹N̂.
    pub relax: f64,
    /// 2/3-rule truncation of the nonlinearity spectrum. Off by default:
    /// the fields here are spectrally concentrated near k₀ and only the
    /// Nyquist mode needs suppressing.
    pub dealias: bool,
}

impl Default for SolveOptions {
    fn default() -> Self {
        SolveOptions {
            tol: DEFAULT_SOLVE_TOLERANCE,
            max_iter: DEFAULT_MAX_ITERATIONS,
            relax: 1.0,
            dealias: false,
        }
    }
}

#[derive(Debug, Clone)]
pub struct SolveDiagnostics {
    /// Number of fixed-point updates applied.
    pub iterations: usize,
    pub final_s: f64,
    pub residual_sup_history: Vec<f64>,
    pub residual_l2_history: Vec<f64>,
    pub converged: bool,
}

/// Petviashvili fixed-point iteration in Fourier variables:
/// B̂ ← S^{3/2} M(k)⁻¹ N̂(B) with M(k) = L(ik) − ωI and the stabilization
/// factor S = Re⟨MB̂, B̂⟩ / Re⟨N̂, B̂⟩. Stops when |S − 1| ≤ 1e-10 and the
/// sup residual is below tol·sup|B|.
pub fn petviashvili_solve(
    initial: &ComplexField,
    omega: f64,
    params: &CmeParameters,
    options: &SolveOptions,
) -> Result<(ComplexField, SolveDiagnostics), SolveError> {
    let grid = initial.grid.clone();
    let num_modes = params.num_modes();
    assert_eq!(initial.num_components(), num_modes, "field/model mode count");
    assert!(options.relax > 0.0 && options.relax <= 1.0, "relax must be in (0, 1]");
    let num_points = grid.num_points();
    let t = Transformer::new(&grid);

    // M(k) per lattice slot: Hermitian, factorized once. The smallest
    // |eigenvalue| over the lattice is the distance from ω to the sampled
    // spectrum; a near-zero value means ω is not inside a gap.
    let mut matrices: Vec<CMat> = Vec::with_capacity(num_points);
    let mut min_abs_eigen = f64::INFINITY;
    for p in 0..num_points {
        let k = grid.wavevector(p);
        let mut m = symbol(params, &k);
        for j in 0..num_modes {
            m.add_to(j, j, C64::new(-omega, 0.0));
        }
        let eig = hermitian_eigen(&m)?;
        for v in &eig.values {
            min_abs_eigen = min_abs_eigen.min(v.abs());
        }
        matrices.push(m);
    }
    if min_abs_eigen < GAP_DISTANCE_FLOOR {
        return Err(SolveError::NotInGap { omega, min_eigenvalue: min_abs_eigen });
    }
    let factors: Vec<LuFactors> = matrices
        .iter()
        .map(lu_factor)
        .collect::<Result<_, _>>()?;

    let dealias_cut: Vec<usize> = grid.sizes.iter().map(|n| n / 3).collect();

    let mut b_hat = initial.to_spectral(&t);
    let mut sup_history = Vec::new();
    let mut l2_history = Vec::new();
    let mut best_sup = f64::INFINITY;
    let mut slot = vec![C64::new(0.0, 0.0); num_modes];

    for pass in 0..=options.max_iter {
        // Physical iterate, its nonlinearity, and the true residual
        // r̂ = N̂ − MB̂ (measured before any dealiasing touches N̂).
        let b_phys: Vec<Vec<C64>> = b_hat
            .iter()
            .map(|row| {
                let mut v = row.clone();
                t.inverse_in_place(&mut v);
                v
            })
            .collect();
        let sup_b = b_phys
            .iter()
            .flat_map(|row| row.iter())
            .map(|z| z.norm())
            .fold(0.0, f64::max);

        let mut n_hat = nonlinearity_field(&b_phys, params);
        for row in n_hat.iter_mut() {
            t.forward_in_place(row);
        }

        let mut r_hat = vec![vec![C64::new(0.0, 0.0); num_points]; num_modes];
        let mut l2_sq = 0.0;
        let mut s_num = 0.0;
        let mut s_den = 0.0;
        for p in 0..num_points {
            for (j, row) in b_hat.iter().enumerate() {
                slot[j] = row[p];
            }
            let mb = matrices[p].mul_vec(&slot);
            for j in 0..num_modes {
                let r = n_hat[j][p] - mb[j];
                r_hat[j][p] = r;
                l2_sq += r.norm_sqr();
                s_num += (mb[j] * slot[j].conj()).re;
                s_den += (n_hat[j][p] * slot[j].conj()).re;
            }
        }
        let mut sup_res = 0.0_f64;
        for row in r_hat.iter_mut() {
            t.inverse_in_place(row);
            for z in row.iter() {
                sup_res = sup_res.max(z.norm());
            }
        }
        sup_history.push(sup_res);
        l2_history.push(l2_sq.sqrt());

        if s_den.abs() < DENOMINATOR_FLOOR {
            return Err(SolveError::ZeroDenominator { at_iteration: pass });
        }
        let s = s_num / s_den;

        if (s - 1.0).abs() <= STABILIZATION_TOLERANCE && sup_res <= options.tol * sup_b {
            let diagnostics = SolveDiagnostics {
                iterations: pass,
                final_s: s,
                residual_sup_history: sup_history,
                residual_l2_history: l2_history,
                converged: true,
            };
            return Ok((ComplexField::from_components(grid, b_phys), diagnostics));
        }

        best_sup = best_sup.min(sup_res);
        if sup_res > DIVERGENCE_FACTOR * best_sup {
            return Err(SolveError::Diverged {
                iterations: pass,
                reason: format!(
                    "sup residual grew to {sup_res:.3e} from a best of {best_sup:.3e}"
                ),
            });
        }
        if s <= 0.0 {
            return Err(SolveError::Diverged {
                iterations: pass,
                reason: format!("stabilization factor became nonpositive ({s:.3e})"),
            });
        }
        if pass == options.max_iter {
            return Err(SolveError::Diverged {
                iterations: pass,
                reason: format!(
                    "no convergence within {} iterations (last sup residual {sup_res:.3e})",
                    options.max_iter
                ),
            });
        }

        // The cubic term triples the bandwidth; drop the unpaired Nyquist
        // mode (always) and optionally everything past 2/3 Nyquist.
        for p in 0..num_points {
            let cut = grid.is_nyquist(p)
                || (options.dealias
                    && (0..grid.dim).any(|a| {
                        let idx = grid.axis_index(p, a);
                        let m = if idx <= grid.sizes[a] / 2 { idx } else { grid.sizes[a] - idx };
                        m > dealias_cut[a]
                    }));
            if cut {
                for row in n_hat.iter_mut() {
                    row[p] = C64::new(0.0, 0.0);
                }
            }
        }

        let s_pow = s.powf(1.5);
        let theta = options.relax;
        for p in 0..num_points {
            for (j, row) in n_hat.iter().enumerate() {
                slot[j] = row[p];
            }
            factors[p].solve_in_place(&mut slot);
            for (j, row) in b_hat.iter_mut().enumerate() {
                let updated = s_pow * slot[j];
                row[p] = if theta == 1.0 {
                    updated
                } else {
                    (1.0 - theta) * row[p] + theta * updated
                };
            }
        }
    }
    unreachable!("loop exits via convergence or error");
}
