//! Dislocation sweeps and Monte Carlo positional-disorder statistics on finite
//! arrays.

use std::io::Write;

use rayon::prelude::*;
use serde::Serialize;

use crate::capacitance::finite_capacitance;
use crate::error::{Error, Result};
use crate::export::{csv_writer, fmt_f64};
use crate::geometry::{build_finite_chain, perturb_chain_stream, ChainParams, FiniteChain};
use crate::linalg::symmetric_eigen;
use crate::spectra::{band_gap, finite_spectrum};

/// Resampling attempts per trial before the trial counts as failed.
pub const MAX_ATTEMPTS: u64 = 100;

/// Default disorder levels.
pub const SIGMA_GRID: [f64; 5] = [0.0, 0.05, 0.1, 0.15, 0.2];

/// Sorted-branch indices of the two central (mid-gap) frequencies of an
/// `M`-resonator chain.
pub fn midgap_branches(m: usize) -> (usize, usize) {
    (m / 2 - 1, m / 2)
}

#[derive(Debug, Clone, Serialize)]
pub struct SweepResult {
    pub k: usize,
    pub d_grid: Vec<f64>,
    /// Sorted frequencies per `d`; `None` where the geometry was rejected.
    pub spectra: Vec<Option<Vec<f64>>>,
    pub errors: Vec<Option<String>>,
    /// Gap of the infinite periodic chain.
    pub gap: (f64, f64),
}

impl SweepResult {
    /// Long format: `d, index, omega, gap_lo, gap_hi`.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv_writer(out);
        w.write_record(["d", "index", "omega", "gap_lo", "gap_hi"])?;
        for (d, s) in self.d_grid.iter().zip(&self.spectra) {
            if let Some(s) = s {
                for (k, o) in s.iter().enumerate() {
                    w.write_record([
                        fmt_f64(*d),
                        k.to_string(),
                        fmt_f64(*o),
                        fmt_f64(self.gap.0),
                        fmt_f64(self.gap.1),
                    ])?;
                }
            }
        }
        w.flush()?;
        Ok(())
    }

    /// Frequencies strictly inside the gap, farther than `margin·width` from
    /// both edges.
    pub fn in_gap(&self, index: usize, margin: f64) -> Vec<f64> {
        let (lo, hi) = self.gap;
        let m = margin * (hi - lo);
        self.spectra[index]
            .as_deref()
            .unwrap_or(&[])
            .iter()
            .copied()
            .filter(|&w| w > lo + m && w < hi - m)
            .collect()
    }
}

fn check_grid(d_grid: &[f64]) -> Result<()> {
    if d_grid.is_empty() {
        return Err(Error::invalid("d_grid", "must not be empty"));
    }
    if d_grid.iter().any(|d| !(d.is_finite() && *d >= 0.0)) {
        return Err(Error::invalid(
            "d_grid",
            "dislocations must be finite and >= 0",
        ));
    }
    if d_grid.windows(2).any(|w| w[0] > w[1]) {
        return Err(Error::invalid("d_grid", "must be sorted ascending"));
    }
    Ok(())
}

/// Spectrum of the canonical `4K + 2` chain for every dislocation in `d_grid`.
pub fn dislocation_sweep(params: &ChainParams, k: usize, d_grid: &[f64]) -> Result<SweepResult> {
    params.validate()?;
    check_grid(d_grid)?;
    let gap = band_gap(params)?;
    let rows: Vec<Result<Vec<f64>>> = d_grid
        .par_iter()
        .map(|&d| Ok(finite_spectrum(&build_finite_chain(params, k, d)?)?.frequencies))
        .collect();
    let mut spectra = vec![];
    let mut errors = vec![];
    for r in rows {
        match r {
            Ok(s) => {
                spectra.push(Some(s));
                errors.push(None);
            }
            Err(e @ Error::Overlap { .. }) | Err(e @ Error::InvalidParameter { .. }) => {
                spectra.push(None);
                errors.push(Some(e.to_string()));
            }
            Err(e) => return Err(e),
        }
    }
    Ok(SweepResult {
        k,
        d_grid: d_grid.to_vec(),
        spectra,
        errors,
        gap,
    })
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct BranchStats {
    pub mean: f64,
    /// Unbiased sample variance.
    pub variance: f64,
    /// Jackknife standard error of `variance`.
    pub stderr: f64,
    pub min: f64,
    pub max: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct StabilityReport {
    pub sigma: f64,
    pub d: f64,
    pub seed: u64,
    pub trials: usize,
    pub successes: usize,
    /// Trials that found no admissible geometry in [`MAX_ATTEMPTS`] draws.
    pub failed_trials: usize,
    /// Overlapping geometries that were redrawn.
    pub rejections: usize,
    pub per_branch: Vec<BranchStats>,
    /// Smallest eigenvalue spacing of the unperturbed chain.
    pub min_lambda_gap: f64,
    /// Largest `|∂λ_k/∂z_j|` of the unperturbed chain.
    pub max_lambda_slope: f64,
    /// Sorted matching may conflate branches: `min_lambda_gap ≤ 6σ·max_lambda_slope`.
    pub branch_mixing_risk: bool,
}

impl StabilityReport {
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        write_reports_csv(std::slice::from_ref(self), out)
    }
}

/// `sigma, d, branch, mean, variance, stderr, trials, rejections`.
pub fn write_reports_csv<W: Write>(reports: &[StabilityReport], out: W) -> Result<()> {
    let mut w = csv_writer(out);
    w.write_record([
        "sigma",
        "d",
        "branch",
        "mean",
        "variance",
        "stderr",
        "trials",
        "rejections",
    ])?;
    for r in reports {
        for (b, s) in r.per_branch.iter().enumerate() {
            w.write_record([
                fmt_f64(r.sigma),
                fmt_f64(r.d),
                b.to_string(),
                fmt_f64(s.mean),
                fmt_f64(s.variance),
                fmt_f64(s.stderr),
                r.successes.to_string(),
                r.rejections.to_string(),
            ])?;
        }
    }
    w.flush()?;
    Ok(())
}

fn branch_stats(samples: &[f64]) -> BranchStats {
    let n = samples.len();
    let nf = n as f64;
    let mean = samples.iter().sum::<f64>() / nf;
    let min = samples.iter().cloned().fold(f64::INFINITY, f64::min);
    let max = samples.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if n < 2 {
        return BranchStats {
            mean,
            variance: 0.0,
            stderr: 0.0,
            min,
            max,
        };
    }
    let dev: Vec<f64> = samples.iter().map(|x| x - mean).collect();
    let s2: f64 = dev.iter().map(|x| x * x).sum();
    let variance = s2 / (nf - 1.0);
    let stderr = if n < 3 {
        0.0
    } else {
        // leave-one-out variances from the centered sums (Σdev = 0)
        let loo: Vec<f64> = dev
            .iter()
            .map(|x| {
                let m = -x / (nf - 1.0);
                (s2 - x * x - (nf - 1.0) * m * m) / (nf - 2.0)
            })
            .collect();
        let lm = loo.iter().sum::<f64>() / nf;
        ((nf - 1.0) / nf * loo.iter().map(|v| (v - lm).powi(2)).sum::<f64>()).sqrt()
    };
    BranchStats {
        mean,
        variance,
        stderr,
        min,
        max,
    }
}

/// Smallest consecutive eigenvalue spacing and the largest position
/// derivative of any eigenvalue, by central differences.
fn mixing_scales(chain: &FiniteChain) -> Result<(f64, f64)> {
    let eig = |c: &FiniteChain| -> Result<Vec<f64>> {
        let m = finite_capacitance(c);
        Ok(symmetric_eigen(m.entries(), m.dim())?.values)
    };
    let base = eig(chain)?;
    let min_gap = base
        .windows(2)
        .map(|w| w[1] - w[0])
        .fold(f64::INFINITY, f64::min);
    let h = 1e-6;
    let mut slope = 0.0f64;
    for j in 0..chain.len() {
        let shifted = |s: f64| {
            let mut z = chain.centers().to_vec();
            z[j] += s;
            FiniteChain::from_centers(*chain.params(), z)
        };
        let (a, b) = (eig(&shifted(h)?)?, eig(&shifted(-h)?)?);
        for k in 0..base.len() {
            slope = slope.max(((a[k] - b[k]) / (2.0 * h)).abs());
        }
    }
    Ok((min_gap, slope))
}

/// Sorted frequencies of `trials` perturbed copies of the canonical chain.
/// Trial `i` draws from seed `seed ⊕ i`; rejected geometries are redrawn on
/// further ChaCha streams of the same seed.
pub fn stability_experiment(
    params: &ChainParams,
    k: usize,
    d: f64,
    sigma: f64,
    trials: usize,
    seed: u64,
) -> Result<StabilityReport> {
    let chain = build_finite_chain(params, k, d)?;
    if !(sigma.is_finite() && sigma >= 0.0) {
        return Err(Error::invalid(
            "sigma",
            format!("must be >= 0, got {sigma}"),
        ));
    }
    if trials < 2 {
        return Err(Error::invalid("trials", "need at least 2 trials"));
    }
    let outcomes: Vec<(Option<Vec<f64>>, usize)> = (0..trials as u64)
        .into_par_iter()
        .map(|i| {
            let sub = seed ^ i;
            let mut rejected = 0;
            for attempt in 0..MAX_ATTEMPTS {
                match perturb_chain_stream(&chain, sigma, sub, attempt) {
                    Ok(c) => return Ok((Some(finite_spectrum(&c)?.frequencies), rejected)),
                    Err(Error::Overlap { .. }) => rejected += 1,
                    Err(e) => return Err(e),
                }
            }
            Ok((None, rejected))
        })
        .collect::<Result<_>>()?;
    let m = chain.len();
    let mut columns = vec![Vec::with_capacity(trials); m];
    let (mut rejections, mut failed) = (0, 0);
    for (spec, r) in outcomes {
        rejections += r;
        match spec {
            Some(s) => {
                for (col, w) in columns.iter_mut().zip(s) {
                    col.push(w);
                }
            }
            None => failed += 1,
        }
    }
    let successes = trials - failed;
    if successes < 2 {
        return Err(Error::invalid(
            "sigma",
            format!("only {successes} of {trials} trials produced non-overlapping geometries"),
        ));
    }
    let per_branch = columns.iter().map(|c| branch_stats(c)).collect();
    let (min_lambda_gap, max_lambda_slope) = mixing_scales(&chain)?;
    Ok(StabilityReport {
        sigma,
        d,
        seed,
        trials,
        successes,
        failed_trials: failed,
        rejections,
        per_branch,
        min_lambda_gap,
        max_lambda_slope,
        branch_mixing_risk: min_lambda_gap <= 6.0 * sigma * max_lambda_slope,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct MinVarianceScan {
    pub d_star: f64,
    pub branch_star: usize,
    pub variance: f64,
    /// Mean frequency of the minimizing branch.
    pub mean: f64,
    pub surface: Vec<StabilityReport>,
}

/// [`stability_experiment`] for each `d` (same seed throughout); returns the
/// `(d, branch)` with the smallest variance.
pub fn min_variance_scan(
    params: &ChainParams,
    k: usize,
    d_grid: &[f64],
    sigma: f64,
    trials: usize,
    seed: u64,
) -> Result<MinVarianceScan> {
    check_grid(d_grid)?;
    let surface: Vec<StabilityReport> = d_grid
        .iter()
        .map(|&d| stability_experiment(params, k, d, sigma, trials, seed))
        .collect::<Result<_>>()?;
    let mut best = (0, 0, f64::INFINITY);
    for (i, r) in surface.iter().enumerate() {
        for (b, s) in r.per_branch.iter().enumerate() {
            if s.variance < best.2 {
                best = (i, b, s.variance);
            }
        }
    }
    let (i, b, variance) = best;
    Ok(MinVarianceScan {
        d_star: d_grid[i],
        branch_star: b,
        variance,
        mean: surface[i].per_branch[b].mean,
        surface,
    })
}
