use std::fs::File;
use std::io::BufWriter;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use serde_json::{json, Value};
use subwave::dislocation::{midgap_diagnostics, midgap_summary, unit_roots_lambda, ZoneSampler};
use subwave::export::{csv_writer, fmt_f64};
use subwave::spectra::{
    band_curvature, band_gap, band_structure, decay_rate, finite_spectrum, freq_from_lambda,
    gap_lambdas, mode_field,
};
use subwave::stability::{
    dislocation_sweep, midgap_branches, min_variance_scan, stability_experiment, write_reports_csv,
    SIGMA_GRID,
};
use subwave::{build_finite_chain, ChainParams};

use crate::config::ExperimentConfig;
use crate::CliError;

pub const DEFAULT_GRID: usize = 1024;
pub const DEFAULT_SEED: u64 = 2024;
pub const DEFAULT_SCAN_SIGMA: f64 = 0.2;

/// A loaded config with command-line overrides applied.
pub struct Run {
    pub cfg: ExperimentConfig,
    pub out: PathBuf,
    pub seed: u64,
    pub grid: usize,
}

impl Run {
    fn params(&self) -> &ChainParams {
        &self.cfg.params
    }

    fn file(&self, name: &str) -> Result<BufWriter<File>, CliError> {
        let path = self.out.join(name);
        File::create(&path)
            .map(BufWriter::new)
            .map_err(|e| CliError::Io(format!("{}: {e}", path.display())))
    }

    fn write_json(&self, name: &str, mut body: Value) -> Result<PathBuf, CliError> {
        let stamp = SystemTime::now()
            .duration_since(UNIX_EPOCH)
            .map(|d| d.as_secs())
            .unwrap_or(0);
        let obj = body.as_object_mut().expect("summaries are JSON objects");
        obj.insert("params".into(), json!(self.params()));
        obj.insert("generated_unix".into(), json!(stamp));
        let path = self.out.join(name);
        serde_json::to_writer_pretty(self.file(name)?, &body)
            .map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
        Ok(path)
    }

    fn section<'a, T>(&self, s: &'a Option<T>, name: &str) -> Result<&'a T, CliError> {
        s.as_ref().ok_or_else(|| {
            self.cfg
                .field_error(name, "section required by this command is missing")
        })
    }
}

fn announce(paths: &[PathBuf]) {
    for p in paths {
        println!("wrote {}", p.display());
    }
}

fn csv_path(run: &Run, name: &str) -> PathBuf {
    run.out.join(name)
}

pub fn bands(run: &Run) -> Result<(), CliError> {
    let b = band_structure(run.params(), run.grid)?;
    b.write_csv(run.file("bands.csv")?)?;
    let json = run.write_json(
        "bands_summary.json",
        json!({
            "l0": run.params().l0(),
            "grid": run.grid,
            "points": b.alphas.len(),
            "gap_lo": b.gap_lo,
            "gap_hi": b.gap_hi,
            "gap_width": b.gap_width(),
            "lambda_lo": b.lambda_lo,
            "lambda_hi": b.lambda_hi,
            "clamped": b.clamped,
        }),
    )?;
    println!(
        "gap ({:.10e}, {:.10e}), width {:.3e}",
        b.gap_lo,
        b.gap_hi,
        b.gap_width()
    );
    announce(&[csv_path(run, "bands.csv"), json]);
    Ok(())
}

pub fn gap(run: &Run) -> Result<(), CliError> {
    let p = run.params();
    let (lo, hi) = band_gap(p)?;
    let (llo, lhi) = gap_lambdas(p)?;
    let curvature = if hi > lo {
        band_curvature(p).ok()
    } else {
        None
    };
    let json = run.write_json(
        "gap.json",
        json!({
            "l0": p.l0(),
            "gap_lo": lo,
            "gap_hi": hi,
            "gap_width": hi - lo,
            "lambda_lo": llo,
            "lambda_hi": lhi,
            "curvature": curvature.map(|(c1, c2)| json!({"c1": c1, "c2": c2})),
        }),
    )?;
    println!("gap ({lo:.10e}, {hi:.10e}), width {:.3e}", hi - lo);
    announce(&[json]);
    Ok(())
}

pub fn midgap(run: &Run, interval: bool) -> Result<(), CliError> {
    let p = run.params();
    let s = match run.cfg.raw.midgap.exclusion {
        Some(x) => ZoneSampler::with_exclusion(p, x)?,
        None => ZoneSampler::new(p)?,
    };
    let (la, lb) = unit_roots_lambda(&s)?;
    let unit = (freq_from_lambda(la, p)?, freq_from_lambda(lb, p)?);
    let r = midgap_summary(&s, run.cfg.raw.midgap.n_max)?;
    r.write_csv(run.file("midgap.csv")?)?;
    let brackets: Vec<Value> = r
        .brackets
        .iter()
        .map(|&(n, a, b)| json!({"N": n, "omega1": a, "omega2": b}))
        .collect();
    let mut written = vec![csv_path(run, "midgap.csv")];
    written.push(run.write_json(
        "midgap.json",
        json!({
            "gap": [r.gap.0, r.gap.1],
            "unit_roots": [unit.0, unit.1],
            "omega_minus": r.omega_minus,
            "omega_plus": r.omega_plus,
            "omega_inf": r.omega_inf,
            "omega_inf_residual": r.omega_inf_residual,
            "brackets": brackets,
        }),
    )?);
    if interval {
        let (a, b) = r.interval;
        written.push(run.write_json(
            "interval.json",
            json!({
                "interval": [a, b],
                "omega_inf": r.omega_inf,
                "omega_inf_in_interval": a <= r.omega_inf && r.omega_inf <= b,
            }),
        )?);
    }
    println!(
        "omega_inf {:.12e} in [{:.12e}, {:.12e}]",
        r.omega_inf, r.interval.0, r.interval.1
    );
    announce(&written);
    Ok(())
}

pub fn sweep(run: &Run) -> Result<(), CliError> {
    let sec = run.section(&run.cfg.raw.sweep, "sweep")?;
    let grid = match (&sec.d_grid, &sec.d_range) {
        (Some(g), _) => g.clone(),
        (None, Some(r)) => r.values(),
        (None, None) => unreachable!("validated at load time"),
    };
    let sw = dislocation_sweep(run.params(), sec.k, &grid)?;
    sw.write_csv(run.file("sweep.csv")?)?;
    let in_gap: Vec<usize> = (0..grid.len()).map(|i| sw.in_gap(i, 1e-6).len()).collect();
    let json = run.write_json(
        "sweep.json",
        json!({
            "K": sec.k,
            "M": 4 * sec.k + 2,
            "gap": [sw.gap.0, sw.gap.1],
            "d": grid,
            "in_gap_count": in_gap,
            "errors": sw.errors,
        }),
    )?;
    let rejected = sw.errors.iter().filter(|e| e.is_some()).count();
    println!(
        "{} dislocations, {} rejected geometries",
        grid.len(),
        rejected
    );
    announce(&[csv_path(run, "sweep.csv"), json]);
    Ok(())
}

pub fn stability(run: &Run) -> Result<(), CliError> {
    let sec = run.section(&run.cfg.raw.stability, "stability")?;
    let p = run.params();
    let sigmas = sec.sigmas.clone().unwrap_or_else(|| SIGMA_GRID.to_vec());
    let reports = sigmas
        .iter()
        .map(|&s| stability_experiment(p, sec.k, sec.d, s, sec.trials, run.seed))
        .collect::<Result<Vec<_>, _>>()?;
    write_reports_csv(&reports, run.file("stability.csv")?)?;
    let mut written = vec![csv_path(run, "stability.csv")];
    let mut scan_json = Value::Null;
    if let Some(d_grid) = &sec.scan_d {
        let sigma = sec.scan_sigma.unwrap_or(DEFAULT_SCAN_SIGMA);
        let scan = min_variance_scan(p, sec.k, d_grid, sigma, sec.trials, run.seed)?;
        write_reports_csv(&scan.surface, run.file("scan.csv")?)?;
        written.push(csv_path(run, "scan.csv"));
        let (lo, hi) = band_gap(p)?;
        let (a, b) = midgap_branches(4 * sec.k + 2);
        scan_json = json!({
            "sigma": sigma,
            "d_star": scan.d_star,
            "branch_star": scan.branch_star,
            "variance": scan.variance,
            "mean": scan.mean,
            "gap_position": (scan.mean - lo) / (hi - lo),
            "midgap_branch": scan.branch_star == a || scan.branch_star == b,
        });
        println!(
            "minimum variance at d = {}, branch {} ({:.3e})",
            scan.d_star, scan.branch_star, scan.variance
        );
    }
    written.push(run.write_json(
        "stability.json",
        json!({
            "K": sec.k,
            "d": sec.d,
            "seed": run.seed,
            "reports": reports,
            "scan": scan_json,
        }),
    )?);
    let risky = reports.iter().filter(|r| r.branch_mixing_risk).count();
    if risky > 0 {
        eprintln!(
            "warning: branch-mixing risk flagged at {risky} of {} disorder levels",
            reports.len()
        );
    }
    announce(&written);
    Ok(())
}

fn write_mode(path: &Path, run: &Run, centers: &[f64], amp: &[f64]) -> Result<(), CliError> {
    let name = path
        .file_name()
        .and_then(|n| n.to_str())
        .unwrap_or("mode.csv");
    let mut w = csv_writer(run.file(name)?);
    w.write_record(["index", "center", "amplitude"])
        .map_err(subwave::Error::from)?;
    for (k, (c, a)) in centers.iter().zip(amp).enumerate() {
        w.write_record([k.to_string(), fmt_f64(*c), fmt_f64(*a)])
            .map_err(subwave::Error::from)?;
    }
    w.flush().map_err(subwave::Error::from)?;
    Ok(())
}

pub fn modes(run: &Run) -> Result<(), CliError> {
    let sec = run.section(&run.cfg.raw.modes, "modes")?;
    let p = run.params();
    let chain = build_finite_chain(p, sec.k, sec.d)?;
    let spec = finite_spectrum(&chain)?;
    let (a, b) = midgap_branches(chain.len());
    let z = chain.centers();
    let paths = [
        csv_path(run, "mode_lower.csv"),
        csv_path(run, "mode_upper.csv"),
    ];
    write_mode(&paths[0], run, z, &spec.modes[a])?;
    write_mode(&paths[1], run, z, &spec.modes[b])?;

    let x_min = sec.x_min.unwrap_or(z[0] - 2.0 * p.cell);
    let x_max = sec.x_max.unwrap_or(z[z.len() - 1] + 2.0 * p.cell);
    let r0 = chain.radius();
    // the line passes through every resonator; interior points are skipped
    let points: Vec<[f64; 3]> = (0..sec.points)
        .map(|k| x_min + (x_max - x_min) * k as f64 / (sec.points - 1) as f64)
        .filter(|x| z.iter().all(|c| (x - c).abs() > r0))
        .map(|x| [x, 0.0, 0.0])
        .collect();
    let lower = mode_field(&chain, &spec.modes[a], &points)?;
    let upper = mode_field(&chain, &spec.modes[b], &points)?;
    let mut w = csv_writer(run.file("field.csv")?);
    w.write_record(["x", "u_lower", "u_upper"])
        .map_err(subwave::Error::from)?;
    for ((pt, u1), u2) in points.iter().zip(&lower).zip(&upper) {
        w.write_record([fmt_f64(pt[0]), fmt_f64(*u1), fmt_f64(*u2)])
            .map_err(subwave::Error::from)?;
    }
    w.flush().map_err(subwave::Error::from)?;

    let (lo, hi) = band_gap(p)?;
    let fit = |k: usize| match decay_rate(&spec.modes[k], z) {
        Ok(f) => json!(f),
        Err(e) => json!({"error": e.to_string()}),
    };
    let (wa, wb) = (spec.frequencies[a], spec.frequencies[b]);
    let json = run.write_json(
        "modes.json",
        json!({
            "K": sec.k,
            "d": sec.d,
            "M": chain.len(),
            "branches": [a, b],
            "frequencies": [wa, wb],
            "gap": [lo, hi],
            "in_gap": [lo < wa && wa < hi, lo < wb && wb < hi],
            "decay": [fit(a), fit(b)],
            "field_points": points.len(),
            "clamped": spec.clamped,
        }),
    )?;
    println!("mid-gap frequencies {wa:.10e}, {wb:.10e}");
    announce(&[
        paths[0].clone(),
        paths[1].clone(),
        csv_path(run, "field.csv"),
        json,
    ]);
    Ok(())
}

pub fn diagnostics(run: &Run) -> Result<(), CliError> {
    let r = midgap_diagnostics(run.params())?;
    let body = serde_json::to_value(&r).map_err(|e| CliError::Io(e.to_string()))?;
    let json = run.write_json("diagnostics.json", body)?;
    println!("all checks passed: {}", r.all_ok);
    announce(&[json]);
    Ok(())
}
