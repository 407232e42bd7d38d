//! Dispersion analysis of the coupled-mode symbol: band sampling over a
//! wavevector box, spectral-gap detection, and refinement of a gap edge
//! into (k0, omega0, eta, G0) data for the envelope reduction.

use num_complex::Complex64;
use thiserror::Error;

use crate::linalg::{hermitian_eigen, refined_rayleigh_quotient, CMat, HermitianEigen, LinalgError};
use crate::model::CmeParameters;

pub type C64 = Complex64;

/// Band tracking by sorted index is only trusted while neighboring bands
/// stay at least this far apart.
pub const DEGENERACY_TOLERANCE: f64 = 1e-8;
/// Edge refinement stops once the central-difference gradient is this small.
pub const GRADIENT_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Error)]
pub enum BandError {
    #[error(transparent)]
    Linalg(#[from] LinalgError),
    #[error("band {band} is within {separation:.3e} of a neighboring band at k = {at:?}; tracking by sorted index is ambiguous")]
    DegenerateEigenvalue { band: usize, separation: f64, at: Vec<f64> },
    #[error("extremal value {omega0:.6e} of band {band} is also attained near k = {at:?}, away from the located extremum")]
    NonIsolatedExtremum { band: usize, omega0: f64, at: Vec<f64> },
    #[error("edge refinement did not reach the gradient tolerance (|grad| = {gradient:.3e} after {cycles} cycles)")]
    RefinementFailed { gradient: f64, cycles: usize },
    #[error("refined edges cross: alpha = {alpha:.6e} >= beta = {beta:.6e}")]
    GapInverted { alpha: f64, beta: f64 },
}

/// L(ik) = diag(v_j . k) - kappa; Hermitian for every real k.
pub fn symbol(params: &CmeParameters, k: &[f64]) -> CMat {
    assert_eq!(k.len(), params.dim(), "wavevector dimension");
    let n = params.num_modes();
    let mut m = CMat::zeros(n);
    for i in 0..n {
        for j in 0..n {
            m.set(i, j, -params.coupling().at(i, j));
        }
    }
    for (j, v) in params.velocities().iter().enumerate() {
        let advect: f64 = v.iter().zip(k).map(|(a, b)| a * b).sum();
        m.add_to(j, j, C64::new(advect, 0.0));
    }
    m
}

/// Eigendecomposition of the symbol at one wavevector: real ascending
/// eigenvalues, orthonormal eigenvectors.
pub fn eigen_decomposition(params: &CmeParameters, k: &[f64]) -> Result<HermitianEigen, BandError> {
    Ok(hermitian_eigen(&symbol(params, k))?)
}

/// Dispersion surfaces sampled on a uniform tensor grid over [-K, K]^d.
#[derive(Debug, Clone)]
pub struct BandStructure {
    pub dim: usize,
    pub num_bands: usize,
    pub half_width: f64,
    pub points_per_axis: usize,
    /// Row-major over the tensor grid; k_points[p] is the d-vector.
    pub k_points: Vec<Vec<f64>>,
    /// values[p][j] = j-th ascending eigenvalue at k_points[p].
    pub values: Vec<Vec<f64>>,
}

impl BandStructure {
    pub fn num_points(&self) -> usize {
        self.k_points.len()
    }

    pub fn axis_spacing(&self) -> f64 {
        2.0 * self.half_width / (self.points_per_axis - 1) as f64
    }

    /// (min, argmin, max, argmax) of one band over the sampled grid.
    pub fn band_range(&self, band: usize) -> (f64, usize, f64, usize) {
        let mut min = f64::INFINITY;
        let mut max = f64::NEG_INFINITY;
        let (mut argmin, mut argmax) = (0usize, 0usize);
        for (p, vals) in self.values.iter().enumerate() {
            let v = vals[band];
            if v < min {
                min = v;
                argmin = p;
            }
            if v > max {
                max = v;
                argmax = p;
            }
        }
        (min, argmin, max, argmax)
    }

    /// Largest violation of the velocity-bound Lipschitz estimate
    /// |lambda_j(k) - lambda_j(k')| <= max_j |v_j| * |k - k'| over
    /// axis-adjacent grid neighbors. Nonpositive when the bound holds.
    pub fn lipschitz_excess(&self, velocity_bound: f64) -> f64 {
        let n = self.points_per_axis;
        let spacing = self.axis_spacing();
        let mut excess = f64::NEG_INFINITY;
        let mut strides = vec![1usize; self.dim];
        for axis in (0..self.dim.saturating_sub(1)).rev() {
            strides[axis] = strides[axis + 1] * n;
        }
        for p in 0..self.num_points() {
            for axis in 0..self.dim {
                let idx_along = (p / strides[axis]) % n;
                if idx_along + 1 >= n {
                    continue;
                }
                let q = p + strides[axis];
                for band in 0..self.num_bands {
                    let diff = (self.values[p][band] - self.values[q][band]).abs();
                    excess = excess.max(diff - velocity_bound * spacing);
                }
            }
        }
        excess
    }
}

/// Default half-width of the sampling box: comfortably beyond the scale on
/// which the coupling can reshape the dispersion away from the free planes.
pub fn default_box_half_width(params: &CmeParameters) -> f64 {
    let vmax = params
        .velocities()
        .iter()
        .map(|v| v.iter().map(|x| x * x).sum::<f64>().sqrt())
        .fold(0.0_f64, f64::max);
    8.0 * vmax.max(params.coupling_scale()).max(1.0)
}

/// Default per-axis resolution (odd, so k = 0 is always sampled).
pub fn default_points_per_axis(dim: usize) -> usize {
    if dim == 1 {
        4097
    } else {
        129
    }
}

pub fn sample_bands(
    params: &CmeParameters,
    half_width: f64,
    points_per_axis: usize,
) -> Result<BandStructure, BandError> {
    assert!(points_per_axis >= 2, "need at least two samples per axis");
    assert!(half_width > 0.0, "sampling box must have positive extent");
    let dim = params.dim();
    let n = points_per_axis;
    let total = n.pow(dim as u32);
    let spacing = 2.0 * half_width / (n - 1) as f64;

    let mut k_points = Vec::with_capacity(total);
    let mut values = Vec::with_capacity(total);
    let mut idx = vec![0usize; dim];
    for _ in 0..total {
        let k: Vec<f64> = idx.iter().map(|&i| -half_width + i as f64 * spacing).collect();
        let eig = eigen_decomposition(params, &k)?;
        values.push(eig.values);
        k_points.push(k);
        // Row-major increment, last axis fastest.
        for axis in (0..dim).rev() {
            idx[axis] += 1;
            if idx[axis] < n {
                break;
            }
            idx[axis] = 0;
        }
    }
    Ok(BandStructure {
        dim,
        num_bands: params.num_modes(),
        half_width,
        points_per_axis: n,
        k_points,
        values,
    })
}

/// A spectral gap read off the sampled grid: the first adjacent band pair
/// whose sampled ranges do not overlap. Grid-resolution dependent; edge
/// refinement tightens the endpoints afterwards.
#[derive(Debug, Clone)]
pub struct GapCandidate {
    /// 0-based index of the band just below the gap.
    pub band_below: usize,
    pub alpha: f64,
    pub beta: f64,
    pub alpha_at: Vec<f64>,
    pub beta_at: Vec<f64>,
}

pub fn find_gap(bands: &BandStructure) -> Option<GapCandidate> {
    for band in 0..bands.num_bands.saturating_sub(1) {
        let (_, _, alpha, argmax) = bands.band_range(band);
        let (beta, argmin, _, _) = bands.band_range(band + 1);
        if alpha < beta {
            return Some(GapCandidate {
                band_below: band,
                alpha,
                beta,
                alpha_at: bands.k_points[argmax].clone(),
                beta_at: bands.k_points[argmin].clone(),
            });
        }
    }
    None
}

/// Which edge of the gap the reduction expands around.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EdgeSide {
    /// omega0 = alpha: top of the band below the gap.
    Lower,
    /// omega0 = beta: bottom of the band above the gap.
    Upper,
}

impl std::fmt::Display for EdgeSide {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            EdgeSide::Lower => write!(f, "lower"),
            EdgeSide::Upper => write!(f, "upper"),
        }
    }
}

/// Refined description of one gap edge.
#[derive(Debug, Clone)]
pub struct SpectralEdge {
    pub side: EdgeSide,
    /// 1-based index of the extremal band among ascending-sorted bands.
    pub band_number: usize,
    pub k0: Vec<f64>,
    pub omega0: f64,
    /// Unit eigenvector at (band, k0); phase fixed so the largest-magnitude
    /// component is real and positive.
    pub eta: Vec<C64>,
    /// Half the Hessian of the band at k0 (d x d, symmetric).
    pub g0: Vec<Vec<f64>>,
    /// Refined gap endpoints (alpha, beta); omega0 equals the chosen side.
    pub gap: (f64, f64),
    /// min over other bands of |lambda_j(k0) - omega0|.
    pub separation: f64,
}

/// Eigenvalue of one tracked band, refined through the compensated Rayleigh
/// quotient so that differences of order 1e-9 survive finite differencing.
fn band_sample(params: &CmeParameters, band: usize, k: &[f64]) -> Result<f64, BandError> {
    let h = symbol(params, k);
    let eig = hermitian_eigen(&h)?;
    let mut separation = f64::INFINITY;
    for (j, v) in eig.values.iter().enumerate() {
        if j != band {
            separation = separation.min((v - eig.values[band]).abs());
        }
    }
    if separation < DEGENERACY_TOLERANCE {
        return Err(BandError::DegenerateEigenvalue { band, separation, at: k.to_vec() });
    }
    Ok(refined_rayleigh_quotient(&h, &eig.vectors[band]))
}

fn band_gradient(params: &CmeParameters, band: usize, k: &[f64]) -> Result<Vec<f64>, BandError> {
    let h = 1e-5;
    let mut grad = vec![0.0; k.len()];
    for axis in 0..k.len() {
        let mut kp = k.to_vec();
        let mut km = k.to_vec();
        kp[axis] += h;
        km[axis] -= h;
        let fp = band_sample(params, band, &kp)?;
        let fm = band_sample(params, band, &km)?;
        grad[axis] = (fp - fm) / (2.0 * h);
    }
    Ok(grad)
}

/// Derivative-free local refinement: per-axis quadratic fits with a
/// shrinking probe step, iterated until the central-difference gradient is
/// below GRADIENT_TOLERANCE.
fn refine_extremum(
    params: &CmeParameters,
    band: usize,
    start: &[f64],
    initial_step: f64,
    maximize: bool,
) -> Result<Vec<f64>, BandError> {
    let dim = start.len();
    let mut k = start.to_vec();
    let mut h = initial_step.max(1e-6);
    let mut last_gradient = f64::INFINITY;
    const MAX_CYCLES: usize = 120;

    for cycle in 0..MAX_CYCLES {
        for axis in 0..dim {
            let mut kp = k.clone();
            let mut km = k.clone();
            kp[axis] += h;
            km[axis] -= h;
            let f0 = band_sample(params, band, &k)?;
            let fp = band_sample(params, band, &kp)?;
            let fm = band_sample(params, band, &km)?;
            let curvature = fp - 2.0 * f0 + fm;
            let well_shaped = if maximize { curvature < 0.0 } else { curvature > 0.0 };
            let step = if well_shaped && curvature.abs() > 0.0 {
                // Vertex of the interpolating parabola, clamped to the probe.
                (0.5 * h * (fm - fp) / curvature).clamp(-h, h)
            } else {
                // Fall back to hill climbing toward the better sample.
                let toward_plus = if maximize { fp > fm } else { fp < fm };
                let better = if toward_plus { fp } else { fm };
                let improves = if maximize { better > f0 } else { better < f0 };
                if !improves {
                    0.0
                } else if toward_plus {
                    h
                } else {
                    -h
                }
            };
            k[axis] += step;
        }
        let grad = band_gradient(params, band, &k)?;
        last_gradient = grad.iter().map(|g| g * g).sum::<f64>().sqrt();
        if last_gradient <= GRADIENT_TOLERANCE {
            return Ok(k);
        }
        if cycle >= 2 {
            h = (h * 0.35).max(1e-6);
        }
    }
    Err(BandError::RefinementFailed { gradient: last_gradient, cycles: MAX_CYCLES })
}

/// Verify the extremal value is attained only near k0 on the sampled grid.
fn check_isolated(
    bands: &BandStructure,
    band: usize,
    omega0: f64,
    k0: &[f64],
) -> Result<(), BandError> {
    let mut spread = 0.0_f64;
    for vals in &bands.values {
        for v in vals {
            spread = spread.max(v.abs());
        }
    }
    let value_tol = 1e-6 * spread.max(1.0);
    let ball = 3.0 * bands.axis_spacing();
    for (p, vals) in bands.values.iter().enumerate() {
        if (vals[band] - omega0).abs() <= value_tol {
            let dist: f64 = bands.k_points[p]
                .iter()
                .zip(k0)
                .map(|(a, b)| (a - b) * (a - b))
                .sum::<f64>()
                .sqrt();
            if dist > ball {
                return Err(BandError::NonIsolatedExtremum {
                    band,
                    omega0,
                    at: bands.k_points[p].clone(),
                });
            }
        }
    }
    Ok(())
}

/// Central-difference Hessian of one band with a single Richardson step
/// (steps h and h/2), symmetrized. The probe eigenvalues come from the
/// compensated Rayleigh quotient, which keeps the second differences from
/// drowning in eigensolver roundoff at h = 1e-4.
pub fn band_hessian(
    params: &CmeParameters,
    band: usize,
    k0: &[f64],
) -> Result<Vec<Vec<f64>>, BandError> {
    let k0_norm: f64 = k0.iter().map(|x| x * x).sum::<f64>().sqrt();
    let h = 1e-4_f64.max(1e-4 * k0_norm);
    let coarse = fd_hessian(params, band, k0, h)?;
    let fine = fd_hessian(params, band, k0, h / 2.0)?;
    let dim = k0.len();
    let mut out = vec![vec![0.0; dim]; dim];
    for i in 0..dim {
        for j in 0..dim {
            let rich_ij = (4.0 * fine[i][j] - coarse[i][j]) / 3.0;
            let rich_ji = (4.0 * fine[j][i] - coarse[j][i]) / 3.0;
            out[i][j] = 0.5 * (rich_ij + rich_ji);
        }
    }
    Ok(out)
}

fn fd_hessian(
    params: &CmeParameters,
    band: usize,
    k0: &[f64],
    h: f64,
) -> Result<Vec<Vec<f64>>, BandError> {
    let dim = k0.len();
    let f = |k: &[f64]| band_sample(params, band, k);
    let f0 = f(k0)?;
    let mut hess = vec![vec![0.0; dim]; dim];
    for i in 0..dim {
        let mut kp = k0.to_vec();
        let mut km = k0.to_vec();
        kp[i] += h;
        km[i] -= h;
        hess[i][i] = (f(&kp)? - 2.0 * f0 + f(&km)?) / (h * h);
        for j in (i + 1)..dim {
            let mut kpp = k0.to_vec();
            let mut kpm = k0.to_vec();
            let mut kmp = k0.to_vec();
            let mut kmm = k0.to_vec();
            kpp[i] += h;
            kpp[j] += h;
            kpm[i] += h;
            kpm[j] -= h;
            kmp[i] -= h;
            kmp[j] += h;
            kmm[i] -= h;
            kmm[j] -= h;
            let cross = (f(&kpp)? - f(&kpm)? - f(&kmp)? + f(&kmm)?) / (4.0 * h * h);
            hess[i][j] = cross;
            hess[j][i] = cross;
        }
    }
    Ok(hess)
}

/// Refine one edge of a sampled gap into full edge data.
pub fn locate_edge(
    params: &CmeParameters,
    bands: &BandStructure,
    gap: &GapCandidate,
    side: EdgeSide,
) -> Result<SpectralEdge, BandError> {
    let spacing = bands.axis_spacing();
    // Tighten both endpoints; the requested side supplies (k0, omega0).
    let lower_band = gap.band_below;
    let upper_band = gap.band_below + 1;
    let k_alpha = refine_extremum(params, lower_band, &gap.alpha_at, 0.5 * spacing, true)?;
    let alpha = band_sample(params, lower_band, &k_alpha)?;
    let k_beta = refine_extremum(params, upper_band, &gap.beta_at, 0.5 * spacing, false)?;
    let beta = band_sample(params, upper_band, &k_beta)?;
    if alpha >= beta {
        return Err(BandError::GapInverted { alpha, beta });
    }

    let (band, k0, omega0) = match side {
        EdgeSide::Lower => (lower_band, k_alpha, alpha),
        EdgeSide::Upper => (upper_band, k_beta, beta),
    };
    check_isolated(bands, band, omega0, &k0)?;

    let eig = eigen_decomposition(params, &k0)?;
    let mut separation = f64::INFINITY;
    for (j, v) in eig.values.iter().enumerate() {
        if j != band {
            separation = separation.min((v - omega0).abs());
        }
    }
    if separation < DEGENERACY_TOLERANCE {
        return Err(BandError::DegenerateEigenvalue { band, separation, at: k0.clone() });
    }

    let mut eta = eig.vectors[band].clone();
    fix_phase(&mut eta);

    let hessian = band_hessian(params, band, &k0)?;
    let dim = k0.len();
    let mut g0 = vec![vec![0.0; dim]; dim];
    for i in 0..dim {
        for j in 0..dim {
            g0[i][j] = 0.5 * hessian[i][j];
        }
    }

    Ok(SpectralEdge {
        side,
        band_number: band + 1,
        k0,
        omega0,
        eta,
        g0,
        gap: (alpha, beta),
        separation,
    })
}

/// Rotate the global phase so the largest-magnitude component is real and
/// positive (first such component on ties).
fn fix_phase(eta: &mut [C64]) {
    let mut best = 0usize;
    for (j, z) in eta.iter().enumerate() {
        if z.norm() > eta[best].norm() {
            best = j;
        }
    }
    let magnitude = eta[best].norm();
    if magnitude == 0.0 {
        return;
    }
    let phase = eta[best] / magnitude;
    let rotate = phase.conj();
    for z in eta.iter_mut() {
        *z *= rotate;
    }
    eta[best] = C64::new(magnitude, 0.0);
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::CMat;
    use crate::model::CubicTerm;
    use approx::assert_relative_eq;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    fn reference_model() -> CmeParameters {
        CmeParameters::symmetric_example(
            [0.0, 1.0],
            [1.0, 0.0],
            c(2.0, 0.0),
            c(1.0, 0.0),
            c(1.0, 0.0),
        )
    }

    /// Two counter-propagating modes in 1d: lambda(k) = +/- sqrt(k^2 + |kappa|^2).
    fn two_mode_model(kappa: C64, speed: f64) -> CmeParameters {
        let mut coupling = CMat::zeros(2);
        coupling.set(0, 1, kappa);
        coupling.set(1, 0, kappa.conj());
        CmeParameters::new(
            1,
            vec![vec![speed], vec![-speed]],
            coupling,
            vec![CubicTerm::new(0, 0, 0, 0, c(1.0, 0.0))],
        )
        .unwrap()
    }

    #[test]
    fn symbol_is_hermitian_and_matches_two_mode_form() {
        let params = two_mode_model(c(0.8, 0.6), 1.0);
        let m = symbol(&params, &[0.7]);
        assert!(m.max_asymmetry() <= 1e-15);
        assert_eq!(m.at(0, 0), c(0.7, 0.0));
        assert_eq!(m.at(1, 1), c(-0.7, 0.0));
        assert_eq!(m.at(0, 1), c(-0.8, -0.6));
    }

    #[test]
    fn two_mode_bands_match_closed_form() {
        let kappa = c(0.8, 0.6);
        let params = two_mode_model(kappa, 1.0);
        for i in 0..=100 {
            let k = -5.0 + 0.1 * i as f64;
            let eig = eigen_decomposition(&params, &[k]).unwrap();
            let expected = (k * k + kappa.norm_sqr()).sqrt();
            assert!((eig.values[0] + expected).abs() <= 1e-12);
            assert!((eig.values[1] - expected).abs() <= 1e-12);
        }
    }

    #[test]
    fn reference_model_spectrum_at_zero() {
        let eig = eigen_decomposition(&reference_model(), &[0.0, 0.0]).unwrap();
        let expected = [-4.0, 0.0, 2.0, 2.0];
        for (got, want) in eig.values.iter().zip(expected) {
            assert_relative_eq!(got, &want, epsilon = 1e-12);
        }
    }

    #[test]
    fn two_mode_gap_spans_minus_kappa_to_kappa() {
        let params = two_mode_model(c(0.8, 0.6), 1.0);
        let bands = sample_bands(&params, 5.0, 1001).unwrap();
        let gap = find_gap(&bands).expect("two-mode system has a gap");
        assert_eq!(gap.band_below, 0);
        assert_relative_eq!(gap.alpha, -1.0, epsilon = 1e-12);
        assert_relative_eq!(gap.beta, 1.0, epsilon = 1e-12);
    }

    #[test]
    fn free_modes_have_no_gap() {
        // kappa = 0: bands are the planes +/- v k and touch at zero.
        let params = two_mode_model(c(0.0, 0.0), 1.0);
        let bands = sample_bands(&params, 5.0, 101).unwrap();
        assert!(find_gap(&bands).is_none());
    }

    #[test]
    fn two_mode_upper_edge_data() {
        let kappa = c(0.8, 0.6);
        let params = two_mode_model(kappa, 1.0);
        let bands = sample_bands(&params, 5.0, 1001).unwrap();
        let gap = find_gap(&bands).unwrap();
        let edge = locate_edge(&params, &bands, &gap, EdgeSide::Upper).unwrap();
        assert_eq!(edge.band_number, 2);
        assert!(edge.k0[0].abs() <= 1e-6);
        assert_relative_eq!(edge.omega0, 1.0, epsilon = 1e-9);
        // G0 = lambda''(0)/2 = 1/(2 |kappa|).
        assert_relative_eq!(edge.g0[0][0], 0.5, epsilon = 1e-6);
        assert_relative_eq!(edge.separation, 2.0, epsilon = 1e-9);
    }

    #[test]
    fn hessian_scales_quadratically_with_velocity() {
        let kappa = c(1.0, 0.0);
        let slow = two_mode_model(kappa, 1.0);
        let fast = two_mode_model(kappa, 2.0);
        let h_slow = band_hessian(&slow, 1, &[0.0]).unwrap()[0][0];
        let h_fast = band_hessian(&fast, 1, &[0.0]).unwrap()[0][0];
        // Second differences divide eigenvalue roundoff by h^2; the scheme
        // is good to ~1e-7 near unit curvature, not to machine precision.
        assert_relative_eq!(h_slow, 1.0, epsilon = 1e-6);
        assert_relative_eq!(h_fast, 4.0 * h_slow, epsilon = 1e-6);
    }

    #[test]
    fn hessian_rejects_degenerate_tracking() {
        let params = two_mode_model(c(0.0, 0.0), 1.0);
        let err = band_hessian(&params, 0, &[0.0]);
        assert!(matches!(err, Err(BandError::DegenerateEigenvalue { .. })));
    }

    #[test]
    fn flat_band_extremum_is_rejected_as_non_isolated() {
        // Zero velocities give k-independent bands: the extremum is attained
        // everywhere, which the isolation check must flag.
        let mut coupling = CMat::zeros(2);
        coupling.set(0, 1, c(1.0, 0.0));
        coupling.set(1, 0, c(1.0, 0.0));
        let params =
            CmeParameters::new(1, vec![vec![0.0], vec![0.0]], coupling, vec![]).unwrap();
        let bands = sample_bands(&params, 5.0, 101).unwrap();
        let gap = find_gap(&bands).expect("flat bands at -1 and 1 leave a gap");
        let err = locate_edge(&params, &bands, &gap, EdgeSide::Lower);
        assert!(matches!(err, Err(BandError::NonIsolatedExtremum { .. })));
    }

    #[test]
    fn shifting_the_coupling_diagonal_shifts_the_spectrum() {
        let shift = 0.7;
        let base = two_mode_model(c(0.8, 0.6), 1.0);
        let mut coupling = base.coupling().clone();
        for i in 0..2 {
            coupling.add_to(i, i, c(shift, 0.0));
        }
        let shifted = CmeParameters::new(
            1,
            base.velocities().to_vec(),
            coupling,
            base.cubic_terms().to_vec(),
        )
        .unwrap();

        let bands = sample_bands(&base, 5.0, 1001).unwrap();
        let bands_shifted = sample_bands(&shifted, 5.0, 1001).unwrap();
        let gap = find_gap(&bands).unwrap();
        let gap_shifted = find_gap(&bands_shifted).unwrap();
        let edge = locate_edge(&base, &bands, &gap, EdgeSide::Upper).unwrap();
        let edge_shifted =
            locate_edge(&shifted, &bands_shifted, &gap_shifted, EdgeSide::Upper).unwrap();

        // L(ik) picks up -shift * I: bands translate down, geometry intact.
        assert_relative_eq!(edge_shifted.omega0, edge.omega0 - shift, epsilon = 1e-9);
        assert!((edge_shifted.k0[0] - edge.k0[0]).abs() <= 1e-6);
        assert_relative_eq!(edge_shifted.g0[0][0], edge.g0[0][0], epsilon = 1e-6);
        for (a, b) in edge_shifted.eta.iter().zip(&edge.eta) {
            assert!((a - b).norm() <= 1e-8);
        }
    }

    #[test]
    fn band_lipschitz_bound_holds_on_samples() {
        let params = reference_model();
        let bands = sample_bands(&params, 4.0, 33).unwrap();
        // max_j |v_j| = 1 for the reference model.
        assert!(bands.lipschitz_excess(1.0) <= 1e-9);
    }
}
