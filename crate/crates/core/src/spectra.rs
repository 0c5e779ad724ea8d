//! Subwavelength frequencies from capacitance eigenvalues: band structures of
//! the periodic chain, spectra and modes of finite arrays, the closed-form
//! trimer eigenvalues and their sensitivities.

use std::f64::consts::PI;
use std::io::Write;

use rayon::prelude::*;
use serde::Serialize;

use crate::capacitance::{finite_capacitance, quasi_capacitance_at, quasi_eigen};
use crate::error::{Error, Result};
use crate::export::{csv_writer, fmt_f64};
use crate::geometry::{ChainParams, FiniteChain};
use crate::linalg::symmetric_eigen;
use crate::special_sums::BrillouinPoint;

/// `ω = sqrt(δλ/|D₁|)`.
pub fn freq_from_lambda(lambda: f64, params: &ChainParams) -> Result<f64> {
    if !(lambda >= 0.0) {
        return Err(Error::domain(
            "freq_from_lambda",
            format!("eigenvalue must be >= 0, got {lambda}"),
        ));
    }
    Ok((params.delta * lambda / params.vol1).sqrt())
}

/// Inverse of [`freq_from_lambda`].
pub fn lambda_from_freq(omega: f64, params: &ChainParams) -> f64 {
    omega * omega * params.vol1 / params.delta
}

/// As [`freq_from_lambda`], mapping negative eigenvalues to zero. The second
/// value tells whether clamping happened.
fn freq_clamped(lambda: f64, params: &ChainParams) -> (f64, bool) {
    if lambda < 0.0 {
        (0.0, true)
    } else {
        ((params.delta * lambda / params.vol1).sqrt(), false)
    }
}

/// Reduced grid `αL = −π + 2πk/n`, `k = 1..n`, with `αL = 0` removed. Contains
/// `π` and is symmetric under `α ↦ −α` apart from that endpoint.
pub fn zone_grid(n: usize) -> Vec<f64> {
    (1..=n)
        .filter(|&k| 2 * k != n)
        .map(|k| PI * (2.0 * k as f64 - n as f64) / n as f64)
        .collect()
}

#[derive(Debug, Clone, Serialize)]
pub struct BandStructure {
    pub alphas: Vec<f64>,
    pub lambda1: Vec<f64>,
    pub lambda2: Vec<f64>,
    pub omega1: Vec<f64>,
    pub omega2: Vec<f64>,
    /// `ω₁` and `ω₂` at `α = π/L`.
    pub gap_lo: f64,
    pub gap_hi: f64,
    /// `λ₁` and `λ₂` at `α = π/L`.
    pub lambda_lo: f64,
    pub lambda_hi: f64,
    /// Grid points where a negative dilute eigenvalue was mapped to `ω = 0`.
    pub clamped: usize,
}

impl BandStructure {
    pub fn gap_width(&self) -> f64 {
        self.gap_hi - self.gap_lo
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv_writer(out);
        w.write_record(["alpha", "lambda1", "lambda2", "omega1", "omega2"])?;
        for i in 0..self.alphas.len() {
            w.write_record([
                fmt_f64(self.alphas[i]),
                fmt_f64(self.lambda1[i]),
                fmt_f64(self.lambda2[i]),
                fmt_f64(self.omega1[i]),
                fmt_f64(self.omega2[i]),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// The band edges `(λ₁^{π/L}, λ₂^{π/L})`.
pub fn gap_lambdas(params: &ChainParams) -> Result<(f64, f64)> {
    params.validate()?;
    let p = BrillouinPoint::from_reduced(PI, params.cell)?;
    let e = quasi_eigen(&quasi_capacitance_at(params, &p)?);
    Ok((e.lambda1, e.lambda2))
}

/// Band gap `(ω₁^⋄, ω₂^⋄)`.
pub fn band_gap(params: &ChainParams) -> Result<(f64, f64)> {
    let (lo, hi) = gap_lambdas(params)?;
    Ok((freq_from_lambda(lo, params)?, freq_from_lambda(hi, params)?))
}

/// Dispersion relation on [`zone_grid`]`(grid_size)`.
pub fn band_structure(params: &ChainParams, grid_size: usize) -> Result<BandStructure> {
    params.validate()?;
    if grid_size < 2 {
        return Err(Error::invalid("grid", "need at least 2 points"));
    }
    let cell = params.cell;
    let rows: Vec<(f64, f64, f64)> = zone_grid(grid_size)
        .into_par_iter()
        .map(|s| {
            let p = BrillouinPoint::from_reduced(s, cell)?;
            let e = quasi_eigen(&quasi_capacitance_at(params, &p)?);
            Ok((p.alpha(), e.lambda1, e.lambda2))
        })
        .collect::<Result<_>>()?;
    let mut b = BandStructure {
        alphas: Vec::with_capacity(rows.len()),
        lambda1: Vec::with_capacity(rows.len()),
        lambda2: Vec::with_capacity(rows.len()),
        omega1: Vec::with_capacity(rows.len()),
        omega2: Vec::with_capacity(rows.len()),
        gap_lo: 0.0,
        gap_hi: 0.0,
        lambda_lo: 0.0,
        lambda_hi: 0.0,
        clamped: 0,
    };
    for (a, l1, l2) in rows {
        let (w1, c1) = freq_clamped(l1, params);
        let (w2, c2) = freq_clamped(l2, params);
        b.clamped += c1 as usize + c2 as usize;
        b.alphas.push(a);
        b.lambda1.push(l1);
        b.lambda2.push(l2);
        b.omega1.push(w1);
        b.omega2.push(w2);
    }
    let last = b.alphas.len() - 1;
    b.lambda_lo = b.lambda1[last];
    b.lambda_hi = b.lambda2[last];
    b.gap_lo = b.omega1[last];
    b.gap_hi = b.omega2[last];
    Ok(b)
}

/// Coefficients of `ω₁ ≈ ω₁^⋄ − c₁(α − π/L)²`, `ω₂ ≈ ω₂^⋄ + c₂(α − π/L)²`,
/// fitted by least squares on eight points next to the zone edge.
pub fn band_curvature(params: &ChainParams) -> Result<(f64, f64)> {
    let (lo, hi) = band_gap(params)?;
    let edge = PI / params.cell;
    let step = 1e-3 * edge;
    let (mut sxx, mut sx1, mut sx2) = (0.0, 0.0, 0.0);
    for k in 1..=8 {
        let da = k as f64 * step;
        let p = BrillouinPoint::new(edge - da, params.cell)?;
        let e = quasi_eigen(&quasi_capacitance_at(params, &p)?);
        let x = da * da;
        sxx += x * x;
        sx1 += x * (freq_from_lambda(e.lambda1, params)? - lo);
        sx2 += x * (freq_from_lambda(e.lambda2, params)? - hi);
    }
    Ok((-sx1 / sxx, sx2 / sxx))
}

#[derive(Debug, Clone, Serialize)]
pub struct SpectrumResult {
    /// Ascending.
    pub frequencies: Vec<f64>,
    /// `modes[k]` is the unit eigenvector for `matrix_eigvals[k]`.
    pub modes: Vec<Vec<f64>>,
    pub matrix_eigvals: Vec<f64>,
    /// Eigenvalues below zero, reported with `ω = 0`.
    pub clamped: usize,
}

impl SpectrumResult {
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv_writer(out);
        w.write_record(["index", "lambda", "omega"])?;
        for (k, (l, o)) in self
            .matrix_eigvals
            .iter()
            .zip(&self.frequencies)
            .enumerate()
        {
            w.write_record([k.to_string(), fmt_f64(*l), fmt_f64(*o)])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Eigen-decomposition of the dilute capacitance matrix of `chain`.
pub fn finite_spectrum(chain: &FiniteChain) -> Result<SpectrumResult> {
    let c = finite_capacitance(chain);
    let e = symmetric_eigen(c.entries(), c.dim())?;
    let params = chain.params();
    let mut clamped = 0;
    let frequencies = e
        .values
        .iter()
        .map(|&l| {
            let (w, c) = freq_clamped(l, params);
            clamped += c as usize;
            w
        })
        .collect();
    Ok(SpectrumResult {
        frequencies,
        modes: e.vectors,
        matrix_eigvals: e.values,
        clamped,
    })
}

/// Closed-form eigenvalues of the trimer with centers `(0, l, L)`, ascending:
/// `λ_k = εCap_B + (εCap_B)²γ/(2√3π)·cos((arccos x + 2kπ)/3)` with
/// `γ = sqrt(l⁻² + L⁻² + (L−l)⁻²)` and `x = −3√3/(lL(L−l)γ³)`.
pub fn trimer_eigenvalues(params: &ChainParams, sep: f64, cell: f64) -> Result<[f64; 3]> {
    if !(sep > 0.0 && sep < cell && cell.is_finite()) {
        return Err(Error::domain(
            "trimer_eigenvalues",
            format!("need 0 < l < L, got l = {sep}, L = {cell}"),
        ));
    }
    let rest = cell - sep;
    let gamma = (sep.powi(-2) + cell.powi(-2) + rest.powi(-2)).sqrt();
    let mut x = -3.0 * 3f64.sqrt() / (sep * cell * rest * gamma.powi(3));
    if x.abs() > 1.0 {
        if x.abs() - 1.0 > 1e-12 {
            return Err(Error::domain(
                "trimer_eigenvalues",
                format!("arccos argument {x} outside [-1, 1]"),
            ));
        }
        x = x.signum();
    }
    let cap = params.cap();
    let amp = cap * cap * gamma / (2.0 * 3f64.sqrt() * PI);
    let acos = x.acos();
    let mut out = [1.0, 2.0, 3.0].map(|k: f64| cap + amp * ((acos + 2.0 * k * PI) / 3.0).cos());
    out.sort_by(f64::total_cmp);
    Ok(out)
}

/// Central differences of [`trimer_eigenvalues`]. `d_sep` is taken at fixed
/// `L`; `d_cell` moves `L` at fixed `l′ = L − l`.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct Sensitivities {
    pub d_sep: [f64; 3],
    pub d_cell: [f64; 3],
}

pub fn eigenvalue_sensitivities(
    params: &ChainParams,
    sep: f64,
    cell: f64,
    h: f64,
) -> Result<Sensitivities> {
    let rest = cell - sep;
    if !(h > 0.0 && h < 0.5 * rest && h < 0.5 * sep) {
        return Err(Error::domain(
            "eigenvalue_sensitivities",
            format!("step {h} must be positive and below half of l = {sep} and L - l = {rest}"),
        ));
    }
    let diff = |a: [f64; 3], b: [f64; 3]| [0, 1, 2].map(|k| (a[k] - b[k]) / (2.0 * h));
    let d_sep = diff(
        trimer_eigenvalues(params, sep + h, cell)?,
        trimer_eigenvalues(params, sep - h, cell)?,
    );
    let d_cell = diff(
        trimer_eigenvalues(params, cell + h - rest, cell + h)?,
        trimer_eigenvalues(params, cell - h - rest, cell - h)?,
    );
    Ok(Sensitivities { d_sep, d_cell })
}

/// Monopole field `u(x) = Σ_j q_j/(4π|x − z_j|)` of charges `mode` placed at
/// the chain centers on the x₁ axis.
pub fn mode_field(chain: &FiniteChain, mode: &[f64], points: &[[f64; 3]]) -> Result<Vec<f64>> {
    if mode.len() != chain.len() {
        return Err(Error::invalid(
            "mode",
            format!("expected {} amplitudes, got {}", chain.len(), mode.len()),
        ));
    }
    let r0 = chain.radius();
    points
        .iter()
        .map(|&[x, y, z]| {
            let mut u = 0.0;
            for (j, (&c, &q)) in chain.centers().iter().zip(mode).enumerate() {
                let r = ((x - c).powi(2) + y * y + z * z).sqrt();
                if r <= r0 {
                    return Err(Error::InsideResonator { x, y, z, index: j });
                }
                u += q / (4.0 * PI * r);
            }
            Ok(u)
        })
        .collect()
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct DecayFit {
    /// Exponential decay rate per unit length.
    pub rate: f64,
    pub r_squared: f64,
    /// Index of the largest amplitude.
    pub peak: usize,
    /// Number of resonators used in the fit.
    pub points: usize,
}

/// Fits `log|a_j| ≈ c − rate·|z_j − z_peak|`.
///
/// The fit runs from the peak toward the end where the mode is weaker, over
/// every second resonator (the peak's own sublattice), with weights `|a_j|²`.
pub fn decay_rate(mode: &[f64], centers: &[f64]) -> Result<DecayFit> {
    let n = mode.len();
    if n < 6 || centers.len() != n {
        return Err(Error::DegenerateFit(format!(
            "need at least 6 amplitudes with matching centers, got {n} and {}",
            centers.len()
        )));
    }
    let amp: Vec<f64> = mode.iter().map(|a| a.abs()).collect();
    let (peak, &top) =
        amp.iter().enumerate().fold(
            (0, &amp[0]),
            |best, cur| if cur.1 > best.1 { cur } else { best },
        );
    if top < 1e-14 {
        return Err(Error::DegenerateFit(
            "all amplitudes are below 1e-14".into(),
        ));
    }
    let side_max = |r: &[f64]| r.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let left = side_max(&amp[..peak]);
    let right = side_max(&amp[peak + 1..]);
    let go_left = match (peak > 0, peak + 1 < n) {
        (true, false) => true,
        (false, _) => false,
        _ if left != right => left < right,
        _ => peak >= n - 1 - peak,
    };
    let idx: Vec<usize> = if go_left {
        (0..=peak).rev().step_by(2).collect()
    } else {
        (peak..n).step_by(2).collect()
    };
    let pts: Vec<(f64, f64, f64)> = idx
        .iter()
        .filter(|&&i| amp[i] > 0.0)
        .map(|&i| {
            (
                (centers[i] - centers[peak]).abs(),
                amp[i].ln(),
                amp[i] * amp[i],
            )
        })
        .collect();
    if pts.len() < 3 {
        return Err(Error::DegenerateFit(format!(
            "only {} usable amplitudes on the decaying side",
            pts.len()
        )));
    }
    let wsum: f64 = pts.iter().map(|p| p.2).sum();
    let xm = pts.iter().map(|p| p.2 * p.0).sum::<f64>() / wsum;
    let ym = pts.iter().map(|p| p.2 * p.1).sum::<f64>() / wsum;
    let sxx: f64 = pts.iter().map(|p| p.2 * (p.0 - xm).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| p.2 * (p.0 - xm) * (p.1 - ym)).sum();
    let syy: f64 = pts.iter().map(|p| p.2 * (p.1 - ym).powi(2)).sum();
    if sxx <= 0.0 {
        return Err(Error::DegenerateFit(
            "all fit points at the same distance".into(),
        ));
    }
    let slope = sxy / sxx;
    let sse = (syy - slope * sxy).max(0.0);
    let r_squared = if syy <= 1e-30 * wsum {
        1.0
    } else {
        1.0 - sse / syy
    };
    Ok(DecayFit {
        rate: -slope,
        r_squared,
        peak,
        points: pts.len(),
    })
}
