//! Shared fixtures and independent oracles for the integration suites:
//! a collocation (finite-difference + Newton) solver for the radial ground
//! state, and a dense quadruple-sum evaluation of the effective cubic
//! coefficient. Both deliberately avoid the library's own code paths.

#![allow(dead_code)]

use gapsol_core::num_complex::Complex64 as C64;
use gapsol_core::{CMat, CmeParameters, CubicTerm};

/// The four-mode reference system: crossing wavepacket pairs with
/// velocities v=(0,1), w=(1,0) and couplings 2, 1, 1.
pub fn reference_model() -> CmeParameters {
    CmeParameters::symmetric_example(
        [0.0, 1.0],
        [1.0, 0.0],
        C64::new(2.0, 0.0),
        C64::new(1.0, 0.0),
        C64::new(1.0, 0.0),
    )
}

/// 1D two-mode system with counter-propagating velocities and a complex
/// off-diagonal coupling; its bands are the closed form ±sqrt(k² + |κ|²).
pub fn two_mode_line(kappa: C64) -> CmeParameters {
    let mut coupling = CMat::zeros(2);
    coupling.set(0, 1, kappa);
    coupling.set(1, 0, kappa.conj());
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

/// Effective cubic coefficient evaluated the slow way: scatter the sparse
/// term list into a dense rank-4 tensor, then sum conj(η_t)·γ[t,m,n,o]·
/// η_m·conj(η_n)·η_o over every one of the N⁴ index tuples in
/// lexicographic order.
pub fn brute_force_gamma(params: &CmeParameters, eta: &[C64]) -> C64 {
    let nm = params.num_modes();
    assert_eq!(eta.len(), nm);
    let zero = C64::new(0.0, 0.0);
    let mut dense = vec![zero; nm * nm * nm * nm];
    for term in params.cubic_terms() {
        let [m, n, o] = term.factors;
        dense[((term.target * nm + m) * nm + n) * nm + o] += term.coeff;
    }
    let mut projected = zero;
    for t in 0..nm {
        let mut bucket = zero;
        for m in 0..nm {
            for n in 0..nm {
                for o in 0..nm {
                    let coeff = dense[((t * nm + m) * nm + n) * nm + o];
                    bucket += coeff * eta[m] * eta[n].conj() * eta[o];
                }
            }
        }
        projected += eta[t].conj() * bucket;
    }
    projected
}

/// Solves a general tridiagonal system in place; `sub[i]`, `diag[i]`,
/// `sup[i]` are the coefficients of row i (sub[0] and sup[n-1] unused).
fn thomas_solve(sub: &[f64], diag: &[f64], sup: &[f64], rhs: &mut [f64]) {
    let n = diag.len();
    let mut c_prime = vec![0.0; n];
    let mut denom = diag[0];
    c_prime[0] = sup[0] / denom;
    rhs[0] /= denom;
    for i in 1..n {
        denom = diag[i] - sub[i] * c_prime[i - 1];
        if i + 1 < n {
            c_prime[i] = sup[i] / denom;
        }
        rhs[i] = (rhs[i] - sub[i] * rhs[i - 1]) / denom;
    }
    for i in (0..n - 1).rev() {
        rhs[i] -= c_prime[i] * rhs[i + 1];
    }
}

/// Residual of the radial boundary-value problem
///   u'' + (d−1)/r·u' − u + u³ = 0,  u'(0) = 0,  u(R) = 0
/// on a uniform grid; the r = 0 row uses the symmetric limit
/// d·u''(0) − u(0) + u(0)³ with a ghost node u(−h) = u(h).
fn bvp_residual(dim: usize, h: f64, u: &[f64], out: &mut [f64]) {
    let n = u.len() - 1;
    let d = dim as f64;
    out[0] = 2.0 * d * (u[1] - u[0]) / (h * h) - u[0] + u[0] * u[0] * u[0];
    for i in 1..n {
        let r = i as f64 * h;
        out[i] = (u[i + 1] - 2.0 * u[i] + u[i - 1]) / (h * h)
            + (d - 1.0) / r * (u[i + 1] - u[i - 1]) / (2.0 * h)
            - u[i]
            + u[i] * u[i] * u[i];
    }
    out[n] = u[n];
}

/// Ground state of the canonical radial NLS by damped Newton iteration on
/// the finite-difference collocation system. Returns the node values
/// u(i·R/n) for i = 0..=n. Entirely independent of the shooting solver.
pub fn collocation_ground_state(dim: usize, n: usize, r_max: f64) -> Vec<f64> {
    let h = r_max / n as f64;
    // Seed close to the ground state so Newton avoids the trivial branch.
    let amp = [1.42, 2.21, 4.34][dim - 1];
    let mut u: Vec<f64> = (0..=n)
        .map(|i| amp / (i as f64 * h).cosh())
        .collect();
    u[n] = 0.0;

    let mut residual = vec![0.0; n + 1];
    let mut trial_residual = vec![0.0; n + 1];
    bvp_residual(dim, h, &u, &mut residual);
    let mut best = sup(&residual);

    // The residual is a cancellation of O(1/h²) terms, so its evaluation
    // floor is ~1e-11; the induced u-error stays O(residual) since the BVP
    // operator's inverse is bounded independently of h.
    for _ in 0..60 {
        if best < 1e-12 {
            break;
        }
        let d = dim as f64;
        let mut sub = vec![0.0; n + 1];
        let mut diag = vec![0.0; n + 1];
        let mut sup_band = vec![0.0; n + 1];
        diag[0] = -2.0 * d / (h * h) - 1.0 + 3.0 * u[0] * u[0];
        sup_band[0] = 2.0 * d / (h * h);
        for i in 1..n {
            let mixed = (d - 1.0) / (2.0 * i as f64 * h * h);
            sub[i] = 1.0 / (h * h) - mixed;
            diag[i] = -2.0 / (h * h) - 1.0 + 3.0 * u[i] * u[i];
            sup_band[i] = 1.0 / (h * h) + mixed;
        }
        diag[n] = 1.0;

        let mut step: Vec<f64> = residual.iter().map(|f| -f).collect();
        thomas_solve(&sub, &diag, &sup_band, &mut step);
        if sup(&step) < 1e-12 {
            break;
        }

        let mut lambda = 1.0;
        loop {
            let trial: Vec<f64> = u
                .iter()
                .zip(&step)
                .map(|(ui, si)| ui + lambda * si)
                .collect();
            bvp_residual(dim, h, &trial, &mut trial_residual);
            let trial_norm = sup(&trial_residual);
            if trial_norm < best || lambda < 1e-4 {
                u = trial;
                residual.copy_from_slice(&trial_residual);
                best = trial_norm;
                break;
            }
            lambda *= 0.5;
        }
    }
    assert!(best < 1e-9, "collocation Newton stalled at {best:.3e}");
    assert!(u[0] > 0.0 && u[0] > u[n / 2], "converged to a wrong branch");
    u
}

/// Second-order collocation solutions on grids h and h/2 combined node-wise
/// by Richardson extrapolation; returns (r, u) pairs on the coarse nodes.
pub fn richardson_ground_state(dim: usize, n_coarse: usize, r_max: f64) -> Vec<(f64, f64)> {
    let coarse = collocation_ground_state(dim, n_coarse, r_max);
    let fine = collocation_ground_state(dim, 2 * n_coarse, r_max);
    (0..=n_coarse)
        .map(|i| {
            let r = r_max * i as f64 / n_coarse as f64;
            (r, (4.0 * fine[2 * i] - coarse[i]) / 3.0)
        })
        .collect()
}

fn sup(values: &[f64]) -> f64 {
    values.iter().fold(0.0, |acc, v| acc.max(v.abs()))
}

/// Simpson quadrature of r^{d-1}·u(r)² times the unit-sphere surface
/// measure — the squared L² norm of the radial function on ℝ^d.
pub fn radial_l2_squared(dim: usize, h: f64, u: &[f64]) -> f64 {
    let surface = match dim {
        1 => 2.0,
        2 => std::f64::consts::TAU,
        _ => 4.0 * std::f64::consts::PI,
    };
    let n = u.len() - 1;
    let mut acc = 0.0;
    for i in 0..=n {
        let r = i as f64 * h;
        let weight = if i == 0 || i == n {
            1.0
        } else if i % 2 == 1 {
            4.0
        } else {
            2.0
        };
        acc += weight * r.powi(dim as i32 - 1) * u[i] * u[i];
    }
    surface * acc * h / 3.0
}
