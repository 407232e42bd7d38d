//! Periodic spatial grids, unitary discrete Fourier transforms, and
//! multi-component complex fields — the discrete function spaces the
//! stationary solver works in.

use num_complex::Complex64;
use rustfft::{Fft, FftDirection, FftPlanner};
use std::sync::Arc;

pub type C64 = Complex64;

/// Uniform periodic grid over the box Π_i [-L_i, L_i), row-major layout,
/// last axis fastest.
#[derive(Debug, Clone, PartialEq)]
pub struct Grid {
    pub dim: usize,
    pub half_extents: Vec<f64>,
    pub sizes: Vec<usize>,
}

impl Grid {
    pub fn uniform(dim: usize, half_extent: f64, n: usize) -> Grid {
        assert!(dim >= 1, "grid needs at least one axis");
        assert!(half_extent > 0.0, "grid extent must be positive");
        assert!(n >= 8 && n % 2 == 0, "points per axis must be even and >= 8");
        Grid {
            dim,
            half_extents: vec![half_extent; dim],
            sizes: vec![n; dim],
        }
    }

    pub fn num_points(&self) -> usize {
        self.sizes.iter().product()
    }

    pub fn spacing(&self, axis: usize) -> f64 {
        2.0 * self.half_extents[axis] / self.sizes[axis] as f64
    }

    /// Per-axis index of the flattened point.
    pub fn axis_index(&self, flat: usize, axis: usize) -> usize {
        let stride: usize = self.sizes[axis + 1..].iter().product();
        (flat / stride) % self.sizes[axis]
    }

    pub fn coordinate(&self, flat: usize) -> Vec<f64> {
        (0..self.dim)
            .map(|a| -self.half_extents[a] + self.axis_index(flat, a) as f64 * self.spacing(a))
            .collect()
    }

    /// DFT lattice wavevector of the flattened point: component a is
    /// π·m/L_a with the signed index m ∈ {0,…,n/2−1, −n/2,…,−1}.
    pub fn wavevector(&self, flat: usize) -> Vec<f64> {
        (0..self.dim)
            .map(|a| {
                let n = self.sizes[a];
                let idx = self.axis_index(flat, a);
                let m = if idx < n / 2 { idx as f64 } else { idx as f64 - n as f64 };
                std::f64::consts::PI * m / self.half_extents[a]
            })
            .collect()
    }

    /// True when any axis index sits on the unpaired Nyquist frequency.
    pub fn is_nyquist(&self, flat: usize) -> bool {
        (0..self.dim).any(|a| self.axis_index(flat, a) == self.sizes[a] / 2)
    }
}

/// Solver grid for a given ε: box [-box_mult/eps, box_mult/eps)^d.
pub fn make_grid(dim: usize, eps: f64, box_mult: f64, n: usize) -> Grid {
    assert!(eps > 0.0, "eps must be positive");
    assert!(box_mult > 0.0, "box multiplier must be positive");
    Grid::uniform(dim, box_mult / eps, n)
}

/// Unitary d-dimensional FFT on a grid: both directions carry 1/√N_total,
/// so Parseval holds exactly and inverse∘forward = identity.
pub struct Transformer {
    sizes: Vec<usize>,
    forward: Vec<Arc<dyn Fft<f64>>>,
    inverse: Vec<Arc<dyn Fft<f64>>>,
}

impl Transformer {
    pub fn new(grid: &Grid) -> Transformer {
        let mut planner = FftPlanner::new();
        let forward = grid
            .sizes
            .iter()
            .map(|&n| planner.plan_fft(n, FftDirection::Forward))
            .collect();
        let inverse = grid
            .sizes
            .iter()
            .map(|&n| planner.plan_fft(n, FftDirection::Inverse))
            .collect();
        Transformer { sizes: grid.sizes.clone(), forward, inverse }
    }

    pub fn forward_in_place(&self, data: &mut [C64]) {
        self.run(data, &self.forward);
    }

    pub fn inverse_in_place(&self, data: &mut [C64]) {
        self.run(data, &self.inverse);
    }

    fn run(&self, data: &mut [C64], plans: &[Arc<dyn Fft<f64>>]) {
        let total: usize = self.sizes.iter().product();
        assert_eq!(data.len(), total, "field length must match grid");
        let max_n = *self.sizes.iter().max().unwrap();
        let max_scratch = plans
            .iter()
            .map(|p| p.get_inplace_scratch_len())
            .max()
            .unwrap_or(0);
        let mut line = vec![C64::new(0.0, 0.0); max_n];
        let mut scratch = vec![C64::new(0.0, 0.0); max_scratch];

        for axis in 0..self.sizes.len() {
            let n = self.sizes[axis];
            let stride: usize = self.sizes[axis + 1..].iter().product();
            let block = n * stride;
            let plan = &plans[axis];
            for outer in 0..total / block {
                for inner in 0..stride {
                    let base = outer * block + inner;
                    for j in 0..n {
                        line[j] = data[base + j * stride];
                    }
                    plan.process_with_scratch(&mut line[..n], &mut scratch);
                    for j in 0..n {
                        data[base + j * stride] = line[j];
                    }
                }
            }
        }
        let scale = 1.0 / (total as f64).sqrt();
        for z in data.iter_mut() {
            *z *= scale;
        }
    }
}

/// N-component complex field sampled on a grid (physical space).
#[derive(Debug, Clone)]
pub struct ComplexField {
    pub grid: Grid,
    components: Vec<Vec<C64>>,
}

impl ComplexField {
    pub fn zeros(grid: Grid, num_components: usize) -> ComplexField {
        let n = grid.num_points();
        ComplexField {
            grid,
            components: vec![vec![C64::new(0.0, 0.0); n]; num_components],
        }
    }

    pub fn from_components(grid: Grid, components: Vec<Vec<C64>>) -> ComplexField {
        for c in &components {
            assert_eq!(c.len(), grid.num_points(), "component length must match grid");
        }
        ComplexField { grid, components }
    }

    pub fn num_components(&self) -> usize {
        self.components.len()
    }

    pub fn components(&self) -> &[Vec<C64>] {
        &self.components
    }

    pub fn component(&self, j: usize) -> &[C64] {
        &self.components[j]
    }

    pub fn component_mut(&mut self, j: usize) -> &mut [C64] {
        &mut self.components[j]
    }

    pub fn sup_norm(&self) -> f64 {
        self.components
            .iter()
            .flat_map(|c| c.iter())
            .map(|z| z.norm())
            .fold(0.0, f64::max)
    }

    pub fn sup_norm_imag(&self) -> f64 {
        self.components
            .iter()
            .flat_map(|c| c.iter())
            .map(|z| z.im.abs())
            .fold(0.0, f64::max)
    }

    /// Max over grid points and components of |self − other|.
    pub fn sup_distance(&self, other: &ComplexField) -> f64 {
        assert_eq!(self.grid, other.grid, "fields must share a grid");
        assert_eq!(self.num_components(), other.num_components());
        self.components
            .iter()
            .zip(&other.components)
            .flat_map(|(a, b)| a.iter().zip(b.iter()))
            .map(|(x, y)| (x - y).norm())
            .fold(0.0, f64::max)
    }

    /// Per-component forward transforms.
    pub fn to_spectral(&self, t: &Transformer) -> Vec<Vec<C64>> {
        self.components
            .iter()
            .map(|c| {
                let mut hat = c.clone();
                t.forward_in_place(&mut hat);
                hat
            })
            .collect()
    }

    pub fn from_spectral(grid: Grid, spectral: &[Vec<C64>], t: &Transformer) -> ComplexField {
        let components = spectral
            .iter()
            .map(|c| {
                let mut phys = c.clone();
                t.inverse_in_place(&mut phys);
                phys
            })
            .collect();
        ComplexField::from_components(grid, components)
    }
}
