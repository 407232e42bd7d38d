//! Model files on disk: TOML with `[model]`, `[velocities]`, `[kappa]`,
//! and `[[gamma]]` sections. Indices are 1-based in the file and 0-based
//! in memory; complex values are stored as explicit re/im parts. Floats
//! serialize in shortest round-trip form, so load(save(p)) == p bitwise.

use std::path::Path;

use anyhow::{bail, Context, Result};
use gapsol_core::num_complex::Complex64 as C64;
use gapsol_core::{CMat, CmeParameters, CubicTerm};
use serde::{Deserialize, Serialize};

#[derive(Debug, Serialize, Deserialize)]
struct ModelFile {
    model: ModelSection,
    velocities: VelocitySection,
    kappa: KappaSection,
    #[serde(default)]
    gamma: Vec<GammaEntry>,
}

#[derive(Debug, Serialize, Deserialize)]
struct ModelSection {
    d: usize,
    #[serde(rename = "N")]
    num_modes: usize,
}

#[derive(Debug, Serialize, Deserialize)]
struct VelocitySection {
    /// One row of length d per mode.
    rows: Vec<Vec<f64>>,
}

#[derive(Debug, Serialize, Deserialize)]
struct KappaSection {
    re: Vec<Vec<f64>>,
    im: Vec<Vec<f64>>,
}

/// One cubic tensor entry gamma_j^{(m,n,o)}; the n-indexed amplitude is
/// the conjugated factor.
#[derive(Debug, Serialize, Deserialize)]
struct GammaEntry {
    j: usize,
    m: usize,
    n: usize,
    o: usize,
    re: f64,
    #[serde(default)]
    im: f64,
}

fn check_matrix(name: &str, rows: &[Vec<f64>], n: usize) -> Result<()> {
    if rows.len() != n || rows.iter().any(|r| r.len() != n) {
        bail!("field `kappa.{name}` must be an {n}x{n} matrix");
    }
    Ok(())
}

fn one_based(name: &str, entry: usize, index: usize, num_modes: usize) -> Result<usize> {
    if index == 0 || index > num_modes {
        bail!("field `gamma[{entry}].{name}` = {index} is outside 1..={num_modes}");
    }
    Ok(index - 1)
}

pub fn load_model(path: &Path) -> Result<CmeParameters> {
    let text = std::fs::read_to_string(path)
        .with_context(|| format!("cannot read model file {}", path.display()))?;
    let file: ModelFile = toml::from_str(&text)
        .with_context(|| format!("parse error in {}", path.display()))?;

    let d = file.model.d;
    let n = file.model.num_modes;
    if file.velocities.rows.len() != n {
        bail!("field `velocities.rows` must have N = {n} rows");
    }
    if file.velocities.rows.iter().any(|row| row.len() != d) {
        bail!("field `velocities.rows` entries must each have d = {d} components");
    }
    check_matrix("re", &file.kappa.re, n)?;
    check_matrix("im", &file.kappa.im, n)?;

    let mut coupling = CMat::zeros(n);
    for j in 0..n {
        for r in 0..n {
            coupling.set(j, r, C64::new(file.kappa.re[j][r], file.kappa.im[j][r]));
        }
    }
    let mut cubic = Vec::with_capacity(file.gamma.len());
    for (idx, entry) in file.gamma.iter().enumerate() {
        cubic.push(CubicTerm::new(
            one_based("j", idx, entry.j, n)?,
            one_based("m", idx, entry.m, n)?,
            one_based("n", idx, entry.n, n)?,
            one_based("o", idx, entry.o, n)?,
            C64::new(entry.re, entry.im),
        ));
    }

    CmeParameters::new(d, file.velocities.rows, coupling, cubic)
        .with_context(|| format!("model file {} failed validation", path.display()))
}

pub fn save_model(params: &CmeParameters, path: &Path) -> Result<()> {
    let n = params.num_modes();
    let file = ModelFile {
        model: ModelSection { d: params.dim(), num_modes: n },
        velocities: VelocitySection { rows: params.velocities().to_vec() },
        kappa: KappaSection {
            re: (0..n)
                .map(|j| (0..n).map(|r| params.coupling().at(j, r).re).collect())
                .collect(),
            im: (0..n)
                .map(|j| (0..n).map(|r| params.coupling().at(j, r).im).collect())
                .collect(),
        },
        gamma: params
            .cubic_terms()
            .iter()
            .map(|t| GammaEntry {
                j: t.target + 1,
                m: t.factors[0] + 1,
                n: t.factors[1] + 1,
                o: t.factors[2] + 1,
                re: t.coeff.re,
                im: t.coeff.im,
            })
            .collect(),
    };
    let text = toml::to_string_pretty(&file).context("serialize model")?;
    std::fs::write(path, text)
        .with_context(|| format!("cannot write model file {}", path.display()))?;
    Ok(())
}
