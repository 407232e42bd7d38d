//! Coupled-mode model data: group velocities, Hermitian linear coupling,
//! and a sparse cubic nonlinearity tensor. Everything downstream (band
//! structure, envelope reduction, soliton solves) consumes this type.

use num_complex::Complex64;
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::linalg::CMat;

pub type C64 = Complex64;

/// Relative tolerance on |kappa_jr - conj(kappa_rj)|; asymmetry beyond this
/// is an error, never silently symmetrized.
pub const HERMITICITY_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("coupling matrix is not Hermitian: max |k_jr - conj(k_rj)| = {asymmetry:.3e} exceeds {tolerance:.3e}")]
    NonHermitianCoupling { asymmetry: f64, tolerance: f64 },
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("cubic term {term} references mode {index} but the model has {num_modes} modes")]
    IndexOutOfRange { term: usize, index: usize, num_modes: usize },
}

/// One entry of the cubic tensor: coeff * A_m * conj(A_n) * A_o added to
/// component `target`. `factors` stores (m, n, o); all indices 0-based.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CubicTerm {
    pub target: usize,
    pub factors: [usize; 3],
    pub coeff: C64,
}

impl CubicTerm {
    pub fn new(target: usize, m: usize, n: usize, o: usize, coeff: C64) -> Self {
        CubicTerm { target, factors: [m, n, o], coeff }
    }

    fn sort_key(&self) -> (usize, usize, usize, usize) {
        (self.target, self.factors[0], self.factors[1], self.factors[2])
    }
}

/// Parameters of the first-order coupled-mode system
///   i (d_t A_j + v_j . grad A_j) + sum_r kappa_jr A_r + N_j(A) = 0.
#[derive(Debug, Clone, PartialEq)]
pub struct CmeParameters {
    dim: usize,
    num_modes: usize,
    velocities: Vec<Vec<f64>>,
    coupling: CMat,
    /// Sorted lexicographically by (target, m, n, o); the fixed order keeps
    /// every reduction over the tensor bitwise reproducible.
    cubic: Vec<CubicTerm>,
}

impl CmeParameters {
    pub fn new(
        dim: usize,
        velocities: Vec<Vec<f64>>,
        coupling: CMat,
        mut cubic: Vec<CubicTerm>,
    ) -> Result<Self, ModelError> {
        cubic.sort_by_key(CubicTerm::sort_key);
        let params = CmeParameters {
            dim,
            num_modes: coupling.n,
            velocities,
            coupling,
            cubic,
        };
        params.validate()?;
        Ok(params)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn num_modes(&self) -> usize {
        self.num_modes
    }

    pub fn velocities(&self) -> &[Vec<f64>] {
        &self.velocities
    }

    pub fn coupling(&self) -> &CMat {
        &self.coupling
    }

    pub fn cubic_terms(&self) -> &[CubicTerm] {
        &self.cubic
    }

    /// Re-check all structural invariants.
    pub fn validate(&self) -> Result<(), ModelError> {
        if self.dim == 0 {
            return Err(ModelError::DimensionMismatch("spatial dimension must be >= 1".into()));
        }
        if self.num_modes == 0 {
            return Err(ModelError::DimensionMismatch("model must have at least one mode".into()));
        }
        if self.coupling.n != self.num_modes {
            return Err(ModelError::DimensionMismatch(format!(
                "coupling matrix is {}x{} but the model has {} modes",
                self.coupling.n, self.coupling.n, self.num_modes
            )));
        }
        if self.velocities.len() != self.num_modes {
            return Err(ModelError::DimensionMismatch(format!(
                "{} velocity vectors for {} modes",
                self.velocities.len(),
                self.num_modes
            )));
        }
        for (j, v) in self.velocities.iter().enumerate() {
            if v.len() != self.dim {
                return Err(ModelError::DimensionMismatch(format!(
                    "velocity {} has {} components, expected {}",
                    j,
                    v.len(),
                    self.dim
                )));
            }
        }

        let scale = self.coupling_scale();
        let asymmetry = self.coupling.max_asymmetry();
        let tolerance = HERMITICITY_TOLERANCE * scale;
        if asymmetry > tolerance {
            return Err(ModelError::NonHermitianCoupling { asymmetry, tolerance });
        }

        for (idx, term) in self.cubic.iter().enumerate() {
            for &k in std::iter::once(&term.target).chain(term.factors.iter()) {
                if k >= self.num_modes {
                    return Err(ModelError::IndexOutOfRange {
                        term: idx,
                        index: k,
                        num_modes: self.num_modes,
                    });
                }
            }
        }
        Ok(())
    }

    /// max |kappa_jr|, the scale the Hermiticity tolerance is relative to.
    pub fn coupling_scale(&self) -> f64 {
        let mut scale = 0.0_f64;
        for i in 0..self.coupling.n {
            for j in 0..self.coupling.n {
                scale = scale.max(self.coupling.at(i, j).norm());
            }
        }
        scale
    }

    /// N_j(A) = sum over stored terms; gauge covariant (N(e^{i t} A) =
    /// e^{i t} N(A)) and cubically homogeneous by construction.
    pub fn nonlinearity(&self, amplitudes: &[C64]) -> Vec<C64> {
        assert_eq!(amplitudes.len(), self.num_modes, "amplitude vector length");
        let mut out = vec![C64::new(0.0, 0.0); self.num_modes];
        for term in &self.cubic {
            let [m, n, o] = term.factors;
            out[term.target] += term.coeff * amplitudes[m] * amplitudes[n].conj() * amplitudes[o];
        }
        out
    }

    /// Copy with every cubic coefficient negated. Used by the sign-flip
    /// pipeline switch so the envelope reduction and the direct solver keep
    /// seeing one consistent equation.
    pub fn flip_nonlinearity(&self) -> CmeParameters {
        let mut flipped = self.clone();
        for term in &mut flipped.cubic {
            term.coeff = -term.coeff;
        }
        flipped
    }

    /// SHA-256 over a canonical byte encoding of the full parameter set;
    /// identifies the model in exported reports.
    pub fn content_hash(&self) -> String {
        let mut hasher = Sha256::new();
        let push_u64 = |h: &mut Sha256, v: u64| h.update(v.to_le_bytes());
        let push_f64 = |h: &mut Sha256, v: f64| h.update(v.to_bits().to_le_bytes());
        push_u64(&mut hasher, self.dim as u64);
        push_u64(&mut hasher, self.num_modes as u64);
        for v in &self.velocities {
            for &x in v {
                push_f64(&mut hasher, x);
            }
        }
        for i in 0..self.num_modes {
            for j in 0..self.num_modes {
                let z = self.coupling.at(i, j);
                push_f64(&mut hasher, z.re);
                push_f64(&mut hasher, z.im);
            }
        }
        for term in &self.cubic {
            hasher.update((term.target as u64).to_le_bytes());
            for &f in &term.factors {
                hasher.update((f as u64).to_le_bytes());
            }
            push_f64(&mut hasher, term.coeff.re);
            push_f64(&mut hasher, term.coeff.im);
        }
        let digest = hasher.finalize();
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }

    /// Four-mode planar model with counter-propagating pairs along v and w,
    /// couplings alpha1 (within pairs: modes 1-2 and 3-4), alpha2 and alpha3
    /// (across pairs), and the fully symmetric cubic tensor: self- and
    /// cross-phase slots with unit weight plus the eight four-wave-mixing
    /// slots, each tensor slot stored at most once.
    pub fn symmetric_example(
        v: [f64; 2],
        w: [f64; 2],
        alpha1: C64,
        alpha2: C64,
        alpha3: C64,
    ) -> CmeParameters {
        let velocities = vec![
            vec![v[0], v[1]],
            vec![-v[0], -v[1]],
            vec![w[0], w[1]],
            vec![-w[0], -w[1]],
        ];

        let mut coupling = CMat::zeros(4);
        // Upper-triangle values (0-based): (0,1)=(2,3)=alpha1,
        // (0,3)=(2,1)=alpha2, (0,2)=(3,1)=alpha3, Hermitian completion.
        let assignments = [
            (0usize, 1usize, alpha1),
            (2, 3, alpha1),
            (0, 3, alpha2),
            (2, 1, alpha2),
            (0, 2, alpha3),
            (3, 1, alpha3),
        ];
        for (j, r, value) in assignments {
            coupling.set(j, r, value);
            coupling.set(r, j, value.conj());
        }

        let one = C64::new(1.0, 0.0);
        let mut cubic = Vec::new();
        for j in 0..4 {
            cubic.push(CubicTerm::new(j, j, j, j, one));
            for i in 0..4 {
                if i != j {
                    cubic.push(CubicTerm::new(j, j, i, i, one));
                    cubic.push(CubicTerm::new(j, i, i, j, one));
                }
            }
        }
        // Four-wave-mixing slots coupling both propagation pairs.
        let mixing = [
            (0, [2, 1, 3]),
            (0, [3, 1, 2]),
            (1, [2, 0, 3]),
            (1, [3, 0, 2]),
            (2, [0, 3, 1]),
            (2, [1, 3, 0]),
            (3, [0, 2, 1]),
            (3, [1, 2, 0]),
        ];
        for (target, [m, n, o]) in mixing {
            cubic.push(CubicTerm::new(target, m, n, o, one));
        }

        CmeParameters::new(2, velocities, coupling, cubic)
            .expect("symmetric example satisfies all model invariants")
    }
}
