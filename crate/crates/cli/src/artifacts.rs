//! Output artifacts: edge and envelope JSON, solver diagnostics, field
//! tables, and convergence reports. CSV floats print with 17 significant
//! digits so every value survives a parse round trip.

use std::path::Path;

use anyhow::{bail, Context, Result};
use gapsol_core::num_complex::Complex64 as C64;
use gapsol_core::{
    BandStructure, ComplexField, ConvergenceReport, EdgeSide, SolveDiagnostics, SpectralEdge,
};
use serde::{Deserialize, Serialize};

/// 17 significant digits: enough to reproduce any f64 exactly.
pub fn fmt17(v: f64) -> String {
    format!("{v:.16e}")
}

#[derive(Debug, Serialize, Deserialize)]
pub struct EdgeJson {
    pub side: String,
    /// 1-based index of the extremal band.
    pub j0: usize,
    pub k0: Vec<f64>,
    pub omega0: f64,
    pub eta_re: Vec<f64>,
    pub eta_im: Vec<f64>,
    pub g0: Vec<Vec<f64>>,
    pub gap: (f64, f64),
    pub separation: f64,
}

impl EdgeJson {
    pub fn from_edge(edge: &SpectralEdge) -> EdgeJson {
        EdgeJson {
            side: edge.side.to_string(),
            j0: edge.band_number,
            k0: edge.k0.clone(),
            omega0: edge.omega0,
            eta_re: edge.eta.iter().map(|e| e.re).collect(),
            eta_im: edge.eta.iter().map(|e| e.im).collect(),
            g0: edge.g0.clone(),
            gap: edge.gap,
            separation: edge.separation,
        }
    }

    pub fn into_edge(self) -> Result<SpectralEdge> {
        let side = match self.side.as_str() {
            "lower" => EdgeSide::Lower,
            "upper" => EdgeSide::Upper,
            other => bail!("unknown edge side {other:?} (expected \"lower\" or \"upper\")"),
        };
        if self.eta_re.len() != self.eta_im.len() {
            bail!("eta_re and eta_im must have equal length");
        }
        Ok(SpectralEdge {
            side,
            band_number: self.j0,
            k0: self.k0,
            omega0: self.omega0,
            eta: self
                .eta_re
                .iter()
                .zip(&self.eta_im)
                .map(|(re, im)| C64::new(*re, *im))
                .collect(),
            g0: self.g0,
            gap: self.gap,
            separation: self.separation,
        })
    }
}

#[derive(Debug, Serialize, Deserialize)]
pub struct EnvelopeJson {
    pub omega1: f64,
    pub gamma_re: f64,
    pub gamma_im: f64,
    pub sign_flip_applied: bool,
    pub focusing: bool,
    /// Envelope C(x) = amplitude * u(length * |x|) in the isotropic case.
    pub amplitude: f64,
    pub length: f64,
    pub axis_map: Option<Vec<Vec<f64>>>,
    /// Canonical profile peak u(0) and the scaled peak C(0).
    pub u0: f64,
    pub peak: f64,
    pub decay_rate: f64,
    /// Weighted spectral moments for s = 0..=4.
    pub moments: Vec<f64>,
    pub dr: f64,
    pub u: Vec<f64>,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct DiagnosticsJson {
    pub eps: f64,
    pub omega: f64,
    pub converged: bool,
    pub iterations: usize,
    pub final_s: f64,
    pub residual_sup: Vec<f64>,
    pub residual_l2: Vec<f64>,
    pub model_hash: String,
    pub sign_flip_applied: bool,
}

impl DiagnosticsJson {
    pub fn new(
        eps: f64,
        omega: f64,
        diagnostics: &SolveDiagnostics,
        model_hash: String,
        sign_flip_applied: bool,
    ) -> DiagnosticsJson {
        DiagnosticsJson {
            eps,
            omega,
            converged: diagnostics.converged,
            iterations: diagnostics.iterations,
            final_s: diagnostics.final_s,
            residual_sup: diagnostics.residual_sup_history.clone(),
            residual_l2: diagnostics.residual_l2_history.clone(),
            model_hash,
            sign_flip_applied,
        }
    }
}

#[derive(Debug, Serialize, Deserialize)]
pub struct RecordJson {
    pub eps: f64,
    pub omega: f64,
    pub e_sup: f64,
    pub residual_final: f64,
    pub iterations: usize,
    pub im_part_sup: f64,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct FitJson {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct ReportJson {
    pub records: Vec<RecordJson>,
    pub fit: Option<FitJson>,
    pub ratios: Vec<f64>,
    pub model_hash: String,
    pub sign_flip_applied: bool,
    pub omega1: f64,
    pub edge_side: String,
    pub grid_points: usize,
    pub box_mult: f64,
    pub tol: f64,
    pub max_iter: usize,
    pub relax: f64,
    pub dealias: bool,
}

impl ReportJson {
    pub fn from_report(report: &ConvergenceReport) -> ReportJson {
        ReportJson {
            records: report
                .records
                .iter()
                .map(|r| RecordJson {
                    eps: r.eps,
                    omega: r.omega,
                    e_sup: r.e_sup,
                    residual_final: r.residual_final,
                    iterations: r.iterations,
                    im_part_sup: r.im_part_sup,
                })
                .collect(),
            fit: report.fit.map(|f| FitJson {
                slope: f.slope,
                intercept: f.intercept,
                r_squared: f.r_squared,
            }),
            ratios: report.ratios.clone(),
            model_hash: report.metadata.model_hash.clone(),
            sign_flip_applied: report.metadata.sign_flip_applied,
            omega1: report.metadata.omega1,
            edge_side: report.metadata.edge_side.to_string(),
            grid_points: report.metadata.grid_points,
            box_mult: report.metadata.box_mult,
            tol: report.metadata.tol,
            max_iter: report.metadata.max_iter,
            relax: report.metadata.relax,
            dealias: report.metadata.dealias,
        }
    }
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let text = serde_json::to_string_pretty(value).context("serialize JSON")?;
    std::fs::write(path, text).with_context(|| format!("cannot write {}", path.display()))?;
    Ok(())
}

pub fn read_edge_json(path: &Path) -> Result<SpectralEdge> {
    let text = std::fs::read_to_string(path)
        .with_context(|| format!("cannot read edge file {}", path.display()))?;
    let parsed: EdgeJson = serde_json::from_str(&text)
        .with_context(|| format!("parse error in {}", path.display()))?;
    parsed.into_edge()
}

/// One row per wavevector: the k components, then the ascending band values.
pub fn write_bands_csv(path: &Path, bands: &BandStructure) -> Result<()> {
    let mut out = String::new();
    let k_cols: Vec<String> = (0..bands.dim).map(|a| format!("k{a}")).collect();
    let band_cols: Vec<String> = (1..=bands.num_bands).map(|j| format!("lambda{j}")).collect();
    out.push_str(&format!("{},{}\n", k_cols.join(","), band_cols.join(",")));
    for (k, values) in bands.k_points.iter().zip(&bands.values) {
        let mut cells: Vec<String> = k.iter().map(|v| fmt17(*v)).collect();
        cells.extend(values.iter().map(|v| fmt17(*v)));
        out.push_str(&cells.join(","));
        out.push('\n');
    }
    std::fs::write(path, out).with_context(|| format!("cannot write {}", path.display()))?;
    Ok(())
}

/// Grid metadata header, then one row per point (row-major): coordinates
/// followed by re/im pairs for every component.
pub fn write_field_csv(path: &Path, field: &ComplexField, eps: f64, omega: f64) -> Result<()> {
    let grid = &field.grid;
    let mut out = String::new();
    out.push_str(&format!("# dim,{}\n", grid.dim));
    out.push_str(&format!(
        "# sizes,{}\n",
        grid.sizes.iter().map(|s| s.to_string()).collect::<Vec<_>>().join(",")
    ));
    out.push_str(&format!(
        "# half_extents,{}\n",
        grid.half_extents.iter().map(|h| fmt17(*h)).collect::<Vec<_>>().join(",")
    ));
    out.push_str(&format!("# eps,{}\n", fmt17(eps)));
    out.push_str(&format!("# omega,{}\n", fmt17(omega)));
    out.push_str(&format!("# components,{}\n", field.num_components()));
    let coord_cols: Vec<String> = (0..grid.dim).map(|a| format!("x{a}")).collect();
    let value_cols: Vec<String> = (0..field.num_components())
        .flat_map(|j| [format!("re{}", j + 1), format!("im{}", j + 1)])
        .collect();
    out.push_str(&format!("{},{}\n", coord_cols.join(","), value_cols.join(",")));
    for p in 0..grid.num_points() {
        let mut cells: Vec<String> = grid.coordinate(p).iter().map(|v| fmt17(*v)).collect();
        for j in 0..field.num_components() {
            let v = field.component(j)[p];
            cells.push(fmt17(v.re));
            cells.push(fmt17(v.im));
        }
        out.push_str(&cells.join(","));
        out.push('\n');
    }
    std::fs::write(path, out).with_context(|| format!("cannot write {}", path.display()))?;
    Ok(())
}

/// Side-by-side table of the first component of the solution and the
/// ansatz (real and imaginary parts) for envelope-accuracy plots.
pub fn write_field_comparison_csv(
    path: &Path,
    solution: &ComplexField,
    ansatz: &ComplexField,
) -> Result<()> {
    let grid = &solution.grid;
    let mut out = String::new();
    let coord_cols: Vec<String> = (0..grid.dim).map(|a| format!("x{a}")).collect();
    out.push_str(&format!(
        "{},re_b1,im_b1,re_bapp1,im_bapp1\n",
        coord_cols.join(",")
    ));
    for p in 0..grid.num_points() {
        let mut cells: Vec<String> = grid.coordinate(p).iter().map(|v| fmt17(*v)).collect();
        let b = solution.component(0)[p];
        let a = ansatz.component(0)[p];
        for v in [b.re, b.im, a.re, a.im] {
            cells.push(fmt17(v));
        }
        out.push_str(&cells.join(","));
        out.push('\n');
    }
    std::fs::write(path, out).with_context(|| format!("cannot write {}", path.display()))?;
    Ok(())
}

pub fn write_convergence_csv(path: &Path, report: &ConvergenceReport) -> Result<()> {
    let mut out = String::from("eps,E,residual,iterations,im_sup\n");
    for r in &report.records {
        out.push_str(&format!(
            "{},{},{},{},{}\n",
            fmt17(r.eps),
            fmt17(r.e_sup),
            fmt17(r.residual_final),
            r.iterations,
            fmt17(r.im_part_sup)
        ));
    }
    std::fs::write(path, out).with_context(|| format!("cannot write {}", path.display()))?;
    Ok(())
}

/// Two-column table for log-log plotting (`set logscale xy` in gnuplot).
pub fn write_loglog_dat(path: &Path, report: &ConvergenceReport) -> Result<()> {
    let mut out = String::from("# eps E_sup\n");
    for r in &report.records {
        out.push_str(&format!("{} {}\n", fmt17(r.eps), fmt17(r.e_sup)));
    }
    std::fs::write(path, out).with_context(|| format!("cannot write {}", path.display()))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn seventeen_digits_round_trip() {
        for v in [0.1, 2.0 / 3.0, 1e-300, -3.75e17, std::f64::consts::PI] {
            let printed = fmt17(v);
            let back: f64 = printed.parse().unwrap();
            assert_eq!(back.to_bits(), v.to_bits(), "{printed}");
        }
    }

    #[test]
    fn edge_json_round_trips() {
        let edge = SpectralEdge {
            side: EdgeSide::Lower,
            band_number: 2,
            k0: vec![0.0, 0.0],
            omega0: 0.0,
            eta: vec![
                C64::new(0.5, 0.0),
                C64::new(0.5, 0.0),
                C64::new(-0.5, 0.0),
                C64::new(-0.5, 0.0),
            ],
            g0: vec![vec![-0.25, 0.0], vec![0.0, -0.25]],
            gap: (0.0, 2.0),
            separation: 2.0,
        };
        let json = serde_json::to_string(&EdgeJson::from_edge(&edge)).unwrap();
        let parsed: EdgeJson = serde_json::from_str(&json).unwrap();
        let back = parsed.into_edge().unwrap();
        assert_eq!(back.side, edge.side);
        assert_eq!(back.band_number, edge.band_number);
        assert_eq!(back.eta, edge.eta);
        assert_eq!(back.g0, edge.g0);
    }
}
