//! Implementations behind the CLI subcommands: each one loads inputs,
//! drives the library pipeline, and writes artifacts.

use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context, Result};
use gapsol_core::nls::DEFAULT_RADIAL_TOLERANCE;
use gapsol_core::{
    build_ansatz, canonicalize, decay_moments, default_box_half_width, default_points_per_axis,
    effective_coefficients, find_gap, locate_edge, make_grid, petviashvili_solve,
    run_convergence_study, sample_bands, solve_ground_state_radial, CmeParameters, ComplexField,
    EdgeSide, SolveDiagnostics, SolveOptions, SpectralEdge, SweepConfig,
    SweepError,
};

use crate::artifacts::{
    write_bands_csv, write_convergence_csv, write_field_comparison_csv, write_field_csv,
    write_json, write_loglog_dat, DiagnosticsJson, EdgeJson, EnvelopeJson, ReportJson,
};
use crate::config::{load_model, save_model};

pub fn model_validate(path: &Path) -> Result<()> {
    let params = load_model(path)?;
    params.validate()?;
    println!(
        "ok: d = {}, N = {}, {} cubic terms, coupling scale {:.6}, hash {}",
        params.dim(),
        params.num_modes(),
        params.cubic_terms().len(),
        params.coupling_scale(),
        params.content_hash()
    );
    Ok(())
}

pub fn model_example(
    alpha1: f64,
    alpha2: f64,
    alpha3: f64,
    v: [f64; 2],
    w: [f64; 2],
    output: &Path,
) -> Result<()> {
    let params = CmeParameters::symmetric_example(
        v,
        w,
        gapsol_core::num_complex::Complex64::new(alpha1, 0.0),
        gapsol_core::num_complex::Complex64::new(alpha2, 0.0),
        gapsol_core::num_complex::Complex64::new(alpha3, 0.0),
    );
    save_model(&params, output)?;
    println!("wrote {} (hash {})", output.display(), params.content_hash());
    Ok(())
}

fn sampled_bands(
    params: &CmeParameters,
    box_half_width: Option<f64>,
    points: Option<usize>,
) -> Result<gapsol_core::BandStructure> {
    let half_width = box_half_width.unwrap_or_else(|| default_box_half_width(params));
    let n = points.unwrap_or_else(|| default_points_per_axis(params.dim()));
    Ok(sample_bands(params, half_width, n)?)
}

pub fn bands(
    model: &Path,
    box_half_width: Option<f64>,
    points: Option<usize>,
    output: &Path,
) -> Result<()> {
    let params = load_model(model)?;
    let structure = sampled_bands(&params, box_half_width, points)?;
    write_bands_csv(output, &structure)?;
    println!(
        "wrote {} ({} wavevectors x {} bands on [-{}, {}]^{})",
        output.display(),
        structure.num_points(),
        structure.num_bands,
        structure.half_width,
        structure.half_width,
        structure.dim
    );
    Ok(())
}

fn locate(
    params: &CmeParameters,
    box_half_width: Option<f64>,
    points: Option<usize>,
    side: EdgeSide,
) -> Result<SpectralEdge> {
    let structure = sampled_bands(params, box_half_width, points)?;
    let gap = find_gap(&structure)
        .ok_or_else(|| anyhow!("no spectral gap on the sampled box; try a finer or wider grid"))?;
    Ok(locate_edge(params, &structure, &gap, side)?)
}

pub fn edge(
    model: &Path,
    side: EdgeSide,
    box_half_width: Option<f64>,
    points: Option<usize>,
    output: &Path,
) -> Result<()> {
    let params = load_model(model)?;
    let edge = locate(&params, box_half_width, points, side)?;
    write_json(output, &EdgeJson::from_edge(&edge))?;
    println!(
        "wrote {} (band {}, omega0 = {:.6e}, gap ({:.6}, {:.6}))",
        output.display(),
        edge.band_number,
        edge.omega0,
        edge.gap.0,
        edge.gap.1
    );
    Ok(())
}

/// Envelope reduction at a previously computed edge. The cubic tensor is
/// not part of the edge file, so the model file is required here as well.
pub fn nls(
    edge_path: &Path,
    model: &Path,
    omega1: f64,
    flip: bool,
    output: &Path,
) -> Result<()> {
    let edge = crate::artifacts::read_edge_json(edge_path)?;
    let loaded = load_model(model)?;
    let params = if flip { loaded.flip_nonlinearity() } else { loaded };
    if edge.eta.len() != params.num_modes() {
        bail!(
            "edge eigenvector has {} components but the model has N = {}",
            edge.eta.len(),
            params.num_modes()
        );
    }
    let effective = effective_coefficients(&edge, &params, omega1, flip);
    let scaling = canonicalize(&effective)?;
    let profile = solve_ground_state_radial(effective.dim, DEFAULT_RADIAL_TOLERANCE)?
        .with_scaling(&scaling);
    let mut moments = Vec::with_capacity(5);
    for s in 0..=4 {
        moments.push(decay_moments(&profile, s)?);
    }
    let envelope = EnvelopeJson {
        omega1: effective.omega1,
        gamma_re: effective.gamma.re,
        gamma_im: effective.gamma.im,
        sign_flip_applied: flip,
        focusing: scaling.focusing,
        amplitude: scaling.amplitude,
        length: scaling.length,
        axis_map: scaling.axis_map.clone(),
        u0: profile.u0,
        peak: scaling.amplitude * profile.u0,
        decay_rate: profile.decay_rate,
        moments,
        dr: profile.dr,
        u: profile.u.clone(),
    };
    write_json(output, &envelope)?;
    println!(
        "wrote {} (C(0) = {:.6}, decay rate {:.4}, moments s=0..4 finite)",
        output.display(),
        envelope.peak,
        envelope.decay_rate
    );
    Ok(())
}

pub struct SolveSettings {
    pub eps: f64,
    pub omega1: f64,
    pub flip: bool,
    pub side: EdgeSide,
    pub grid_points: usize,
    pub box_mult: f64,
    pub options: SolveOptions,
}

/// Shared single-solve pipeline: bands, edge, envelope, ansatz, iteration.
/// Returns the converged field, the ansatz, omega, and diagnostics.
fn solve_single(
    params: &CmeParameters,
    settings: &SolveSettings,
) -> Result<(ComplexField, ComplexField, f64, SolveDiagnostics)> {
    let work = if settings.flip {
        params.flip_nonlinearity()
    } else {
        params.clone()
    };
    let edge = locate(&work, None, None, settings.side)?;
    let effective = effective_coefficients(&edge, &work, settings.omega1, settings.flip);
    let scaling = canonicalize(&effective)?;
    let profile = solve_ground_state_radial(effective.dim, DEFAULT_RADIAL_TOLERANCE)?
        .with_scaling(&scaling);
    let grid = make_grid(work.dim(), settings.eps, settings.box_mult, settings.grid_points);
    let (ansatz, report) = build_ansatz(settings.eps, &edge, &profile, &grid);
    if report.domain_too_small {
        eprintln!(
            "warning: envelope decays to {:.2e} of its peak at the box edge; consider a larger --box-mult",
            report.edge_decay_ratio
        );
    }
    let omega = edge.omega0 + settings.eps * settings.eps * effective.omega1;
    let (solution, diagnostics) = petviashvili_solve(&ansatz, omega, &work, &settings.options)?;
    Ok((solution, ansatz, omega, diagnostics))
}

pub fn solve(model: &Path, settings: &SolveSettings, output: &Path) -> Result<()> {
    let params = load_model(model)?;
    let (solution, ansatz, omega, diagnostics) = solve_single(&params, settings)?;
    write_field_csv(output, &solution, settings.eps, omega)?;
    let work_hash = if settings.flip {
        params.flip_nonlinearity().content_hash()
    } else {
        params.content_hash()
    };
    let diag_path = diagnostics_path(output);
    write_json(
        &diag_path,
        &DiagnosticsJson::new(settings.eps, omega, &diagnostics, work_hash, settings.flip),
    )?;
    println!(
        "wrote {} and {} (converged in {} iterations, sup residual {:.3e}, sup|B - B_app| = {:.6e})",
        output.display(),
        diag_path.display(),
        diagnostics.iterations,
        diagnostics.residual_sup_history.last().copied().unwrap_or(f64::NAN),
        solution.sup_distance(&ansatz)
    );
    Ok(())
}

fn diagnostics_path(output: &Path) -> PathBuf {
    let stem = output
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "solve".to_string());
    output.with_file_name(format!("{stem}.diagnostics.json"))
}

pub struct SweepSettings {
    pub eps_list: Vec<f64>,
    pub omega1: f64,
    pub flip: bool,
    pub side: EdgeSide,
    pub grid_points: usize,
    pub box_mult: f64,
    pub options: SolveOptions,
    pub dump_field: Option<f64>,
}

pub fn sweep(model: &Path, settings: &SweepSettings, out_dir: &Path) -> Result<()> {
    let params = load_model(model)?;
    std::fs::create_dir_all(out_dir)
        .with_context(|| format!("cannot create {}", out_dir.display()))?;
    let config = SweepConfig {
        eps_list: settings.eps_list.clone(),
        omega1_magnitude: settings.omega1,
        flip_nonlinearity: settings.flip,
        side: settings.side,
        grid_points: settings.grid_points,
        box_mult: settings.box_mult,
        solve: settings.options.clone(),
    };

    let (report, failures) = match run_convergence_study(&params, &config) {
        Ok(report) => (report, Vec::new()),
        Err(SweepError::Partial { report, failures }) => (*report, failures),
        Err(other) => return Err(other.into()),
    };

    write_convergence_csv(&out_dir.join("convergence.csv"), &report)?;
    write_json(&out_dir.join("convergence.json"), &ReportJson::from_report(&report))?;
    write_loglog_dat(&out_dir.join("loglog.dat"), &report)?;

    if let Some(eps) = settings.dump_field {
        let single = SolveSettings {
            eps,
            omega1: settings.omega1,
            flip: settings.flip,
            side: settings.side,
            grid_points: settings.grid_points,
            box_mult: settings.box_mult,
            options: settings.options.clone(),
        };
        let (solution, ansatz, _, _) = solve_single(&params, &single)?;
        let name = format!("field_eps{eps}.csv");
        write_field_comparison_csv(&out_dir.join(&name), &solution, &ansatz)?;
    }

    match report.fit {
        Some(fit) => println!(
            "wrote {}: {} runs, slope {:.4}, r^2 = {:.5}",
            out_dir.display(),
            report.records.len(),
            fit.slope,
            fit.r_squared
        ),
        None => println!(
            "wrote {}: {} runs, slope undefined (need at least two converged runs)",
            out_dir.display(),
            report.records.len()
        ),
    }
    if !failures.is_empty() {
        for f in &failures {
            eprintln!("eps = {}: {}", f.eps, f.message);
        }
        bail!("{} of {} runs failed; partial report written", failures.len(), settings.eps_list.len());
    }
    Ok(())
}
