use std::path::Path;

use kms_core::analysis::{
    collocated_pairs, compare_eigenvalues, eigen_csv, error_csv, frf, reduced_eigenvalues, relative_error_frf,
    write_csv, ErrorCurve, TransferModel,
};
use kms_core::bundle::{load_bundle, save_bundle};
use kms_core::error_bound::bound_check_frf;
use kms_core::mech::{FullThermoMech, ReducedThermoMech};
use kms_core::model::{assemble_box_3d, assemble_plate_2d, assemble_rod_1d, load_system, save_system, InputKind};
use kms_core::pipeline::{reduce, ReductionConfig};
use kms_core::reduction::{count_eigenvalues_below, zero_threshold, ModalOptions, DROP_TOL};
use kms_core::{write_atomic, KmsError, Result};
use serde::Serialize;
use serde_json::json;

use crate::config::{GeometryConfig, MechInput, ModelConfig, RunConfig, VerifyConfig};
use crate::spec::{parse_grid, parse_htc, parse_pair, sample_tag};

pub enum Outcome {
    Pass,
    Fail,
}

fn write_json(path: &Path, value: &serde_json::Value) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value).expect("json values always serialize");
    text.push('\n');
    write_atomic(path, text.as_bytes())
}

fn tool_info() -> serde_json::Value {
    json!({
        "name": "kms",
        "version": env!("CARGO_PKG_VERSION"),
        "threads": rayon::current_num_threads(),
    })
}

pub fn generate(config: &Path, out: &Path) -> Result<Outcome> {
    let cfg = ModelConfig::load(config)?;
    let material = cfg.material.resolve();
    let patches = cfg.boundary_patches()?;
    let (thermal, mech) = match &cfg.geometry {
        GeometryConfig::Rod(g) => (assemble_rod_1d(g, &material, &patches)?, None),
        GeometryConfig::Plate(g) => (assemble_plate_2d(g, &material, &patches)?, None),
        GeometryConfig::Box(g) => {
            let (t, m) = assemble_box_3d(g, &material, &patches)?;
            (t, Some(m))
        }
    };
    let manifest = save_system(out, &thermal, mech.as_ref())?;
    match &mech {
        Some(m) => println!(
            "wrote {}: thermal n = {}, {} patches, {} inputs; mechanical n = {}",
            manifest.display(),
            thermal.n(),
            thermal.num_patches(),
            thermal.num_inputs(),
            m.n()
        ),
        None => println!(
            "wrote {}: thermal n = {}, {} patches, {} inputs",
            manifest.display(),
            thermal.n(),
            thermal.num_patches(),
            thermal.num_inputs()
        ),
    }
    Ok(Outcome::Pass)
}

pub fn reduce_cmd(manifest: &Path, cfg: &ReductionConfig, out: &Path) -> Result<Outcome> {
    let (thermal, mech) = load_system(manifest)?;
    let res = reduce(&thermal, mech.as_ref(), cfg)?;
    let index = save_bundle(out, &res.thermal, res.mechanical.as_ref())?;
    res.kms.save(&out.join("kms_basis.bin"))?;
    write_json(
        &out.join("provenance.json"),
        &json!({
            "tool": tool_info(),
            "command": "reduce",
            "manifest": manifest.display().to_string(),
            "config": cfg,
            "budget": res.budget,
            "stats": res.stats,
            "tolerances": {
                "deflation": DROP_TOL,
                "eigen_residual": ModalOptions::default().residual_tol,
                "orthonormality_error": res.parametric.orthonormality_error(),
            },
        }),
    )?;
    let s = &res.stats;
    println!(
        "omega_m = {:.6e} rad/s, mu = {}, KMS r = {} ({} before deflation), parametric r = {} ({} before deflation)",
        s.omega_m, s.mu, s.kms_width, s.kms_pre_deflation, s.parametric_width, s.parametric_pre_deflation
    );
    if let (Some(w), Some(p)) = (s.mech_width, s.mech_pre_deflation) {
        println!("mechanical r = {w} ({p} before deflation)");
    }
    println!("wrote {}", index.display());
    Ok(Outcome::Pass)
}

#[derive(Debug, Serialize)]
struct SampleSummary {
    htc: Vec<f64>,
    collocated_exceedances: usize,
    other_exceedances: usize,
    undefined_points: usize,
    max_range_error: Option<f64>,
    eigen_count: usize,
    max_eigen_error: Option<f64>,
    max_mech_error: Option<f64>,
    pass: bool,
}

pub struct VerifyArgs<'a> {
    pub manifest: &'a Path,
    pub bundle: &'a Path,
    pub out: &'a Path,
}

fn max_of(values: impl Iterator<Item = Option<f64>>) -> Option<f64> {
    values.flatten().reduce(f64::max)
}

fn mech_csv(omegas: &[f64], curves: &[ErrorCurve], labels: &[String]) -> String {
    let mut s = String::from("omega");
    for l in labels {
        s.push_str(",err_");
        s.push_str(l);
    }
    s.push('\n');
    for (k, w) in omegas.iter().enumerate() {
        s.push_str(&format!("{w:e}"));
        for c in curves {
            s.push(',');
            if let Some(v) = c.values[k] {
                s.push_str(&format!("{v:e}"));
            }
        }
        s.push('\n');
    }
    s
}

pub fn verify(args: &VerifyArgs, run: &RunConfig) -> Result<Outcome> {
    let v: &VerifyConfig = &run.verify;
    let (full, mech) = load_system(args.manifest)?;
    let (red, rmech) = load_bundle(args.bundle)?;
    if red.patch_names != full.patch_names
        || red.num_inputs() != full.num_inputs()
        || red.num_outputs() != full.num_outputs()
        || red.basis.n() != full.n()
    {
        return Err(KmsError::Config(format!(
            "bundle {} does not belong to {}: patches, inputs, outputs or dimension differ",
            args.bundle.display(),
            args.manifest.display()
        )));
    }
    let grid = parse_grid(&v.grid)?;
    let samples = parse_htc(&v.htc, &full.patch_names)?;
    let pairs = if v.pairs.is_empty() {
        collocated_pairs(full.num_inputs().min(full.num_outputs()))
    } else {
        v.pairs
            .iter()
            .map(|p| parse_pair(p, full.num_outputs(), full.num_inputs()))
            .collect::<Result<Vec<_>>>()?
    };
    let lo = grid[0];
    std::fs::create_dir_all(args.out).map_err(|e| KmsError::Config(format!("{}: {e}", args.out.display())))?;
    let mech_pair = match (&mech, &rmech) {
        (Some(m), Some(rm)) => Some((FullThermoMech::new(&full, m)?, ReducedThermoMech::new(&red, rm)?)),
        (Some(_), None) => {
            log::warn!("model has a mechanical part but the bundle does not; skipping displacement checks");
            None
        }
        _ => None,
    };
    let mech_grid: Vec<f64> = grid.iter().copied().filter(|w| *w <= v.omega_max).collect();
    let mut summaries = Vec::new();
    for s in &samples {
        let tag = sample_tag(s);
        let f = frf(&full, &grid, s)?;
        let r = frf(&red, &grid, s)?;
        let report = bound_check_frf(&full, &red, &f, &r, &pairs)?;
        write_csv(&args.out.join(format!("bound_{tag}.csv")), &report.to_csv())?;
        let curves = relative_error_frf(&f, &r, &pairs)?;
        write_csv(
            &args.out.join(format!("frf_error_{tag}.csv")),
            &error_csv(&grid, &curves),
        )?;
        let collocated: Vec<&ErrorCurve> = curves
            .iter()
            .zip(&report.pairs)
            .filter(|(_, p)| p.collocated)
            .map(|(c, _)| c)
            .collect();
        let max_range_error = max_of(collocated.iter().map(|c| c.max_in(&grid, lo, v.omega_max)));
        let undefined = curves.iter().map(ErrorCurve::undefined).sum();

        // only eigenvalues below the cutoff are resolved by construction
        let sigma = zero_threshold(&full, s)?;
        let nonzero = reduced_eigenvalues(&red, s)?
            .iter()
            .filter(|a| a.abs() >= sigma)
            .count();
        let below =
            count_eigenvalues_below(&full, s, red.basis.omega_m)?.0 - count_eigenvalues_below(&full, s, sigma)?.0;
        let k = v.eigen_count.min(nonzero).min(below);
        if k < v.eigen_count {
            log::info!("comparing {k} eigenvalues for {}", s.label());
        }
        let eig = compare_eigenvalues(&full, &red, s, k)?;
        write_csv(&args.out.join(format!("eigen_{tag}.csv")), &eigen_csv(&eig))?;
        let max_eigen_error = eig.iter().map(|e| e.rel_error).reduce(f64::max);

        let mut max_mech_error = None;
        if let (Some((fm, rm)), false) = (&mech_pair, mech_grid.is_empty()) {
            let ff = frf(fm, &mech_grid, s)?;
            let rr = frf(rm, &mech_grid, s)?;
            let weights: Vec<f64> = full
                .inputs
                .iter()
                .map(|c| {
                    if matches!(c.kind, InputKind::Ambient { .. }) {
                        1.0
                    } else {
                        0.0
                    }
                })
                .collect();
            let ambient = v.mech_input == MechInput::Ambient && weights.iter().any(|w| *w > 0.0);
            let (ff, rr, mp, labels): (_, _, Vec<(usize, usize)>, Vec<String>) = if ambient {
                let p = fm.num_outputs();
                (
                    ff.combine_inputs(&weights)?,
                    rr.combine_inputs(&weights)?,
                    (0..p).map(|i| (i, 0)).collect(),
                    (0..p).map(|i| format!("{}_ambient", i + 1)).collect(),
                )
            } else {
                let (p, m) = (fm.num_outputs(), full.num_inputs());
                let mp: Vec<(usize, usize)> = (0..p).flat_map(|i| (0..m).map(move |j| (i, j))).collect();
                let labels = mp.iter().map(|(i, j)| format!("{}_{}", i + 1, j + 1)).collect();
                (ff, rr, mp, labels)
            };
            let mc = relative_error_frf(&ff, &rr, &mp)?;
            write_csv(
                &args.out.join(format!("mech_error_{tag}.csv")),
                &mech_csv(&mech_grid, &mc, &labels),
            )?;
            max_mech_error = max_of(mc.iter().map(ErrorCurve::max));
        }

        let pass = report.collocated_exceedances() == 0
            && max_range_error.is_none_or(|e| e <= v.max_range_error)
            && max_eigen_error.is_none_or(|e| e <= v.max_eigen_error)
            && max_mech_error.is_none_or(|e| e <= v.max_mech_error);
        let fmt = |x: Option<f64>| x.map_or("-".to_string(), |v| format!("{v:.3e}"));
        println!(
            "{:<16} exceedances {} (collocated {}), range error {}, eigen error {} ({k}), mech error {}  {}",
            s.label(),
            report.exceedances(),
            report.collocated_exceedances(),
            fmt(max_range_error),
            fmt(max_eigen_error),
            fmt(max_mech_error),
            if pass { "ok" } else { "FAIL" }
        );
        summaries.push(SampleSummary {
            htc: s.values().to_vec(),
            collocated_exceedances: report.collocated_exceedances(),
            other_exceedances: report.exceedances() - report.collocated_exceedances(),
            undefined_points: undefined,
            max_range_error,
            eigen_count: k,
            max_eigen_error,
            max_mech_error,
            pass,
        });
    }
    let pass = summaries.iter().all(|s| s.pass);
    write_json(
        &args.out.join("summary.json"),
        &json!({
            "tool": tool_info(),
            "command": "verify",
            "manifest": args.manifest.display().to_string(),
            "bundle": args.bundle.display().to_string(),
            "omega_m": red.basis.omega_m,
            "s_e": red.basis.s_e,
            "pairs": pairs.iter().map(|(i, j)| format!("{}:{}", i + 1, j + 1)).collect::<Vec<_>>(),
            "thresholds": v,
            "samples": summaries,
            "pass": pass,
        }),
    )?;
    Ok(if pass { Outcome::Pass } else { Outcome::Fail })
}
