//! Mid-gap frequencies of the infinite dislocated dimer chain.
//!
//! Everything here is expressed through the spectral parameter
//! `λ = ω²|D₁|/δ`, in which `η_j = λ_j^α/(λ − λ_j^α)` no longer depends on `δ`.
//! Integrals over the Brillouin zone use a [`ZoneSampler`]: composite
//! Gauss–Legendre panels on `[ρ, π]` and `[−π, −ρ]` in `t = αL`, graded
//! geometrically toward the logarithmic singularity at `t = 0` (cut off at the
//! exclusion radius `ρ`) and toward the band edge at `t = ±π`, where `η_j`
//! develops a narrow peak as `λ` approaches the gap edges. The capacitance
//! eigenpairs at the nodes are computed once per sampler, on the panel set and
//! on its bisection; the second set is used for results, the first to check
//! convergence.

use std::f64::consts::PI;
use std::io::Write;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use crate::capacitance::{quasi_capacitance_at, quasi_eigen};
use crate::error::{Error, Result};
use crate::export::{csv_writer, fmt_f64};
use crate::geometry::ChainParams;
use crate::linalg::hermitian_eigen;
use crate::quadrature::{refine, GaussLegendre};
use crate::special_sums::{g_of_alpha, g_of_alpha_lerch, BrillouinPoint};
use crate::spectra::{freq_from_lambda, gap_lambdas, lambda_from_freq};

/// Default half-width of the window around `αL = 0` left out of zone integrals.
pub const DEFAULT_EXCLUSION: f64 = 1e-3;
/// Distance of the roots' search interval from the gap edges, relative to the
/// gap width.
pub const EDGE_MARGIN: f64 = 1e-6;
const INTEGRAL_TOL: f64 = 1e-6;
const BLOCK_TOL: f64 = 1e-9;
const SCAN_STEPS: usize = 400;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EtaPair {
    pub eta1: f64,
    pub eta2: f64,
}

/// `η_j = λ_j/(λ − λ_j)`.
fn etas(lambda: f64, l1: f64, l2: f64) -> EtaPair {
    EtaPair {
        eta1: l1 / (lambda - l1),
        eta2: l2 / (lambda - l2),
    }
}

/// `η_j = (ω_j^α)²/(ω² − (ω_j^α)²)` from the dilute band values at `alpha`.
pub fn eta_pair(params: &ChainParams, omega: f64, alpha: f64) -> Result<EtaPair> {
    params.validate()?;
    let p = BrillouinPoint::new(alpha, params.cell)?;
    let e = quasi_eigen(&quasi_capacitance_at(params, &p)?);
    for l in [e.lambda1, e.lambda2] {
        if l >= 0.0 && (omega - freq_from_lambda(l, params)?).abs() < 1e-14 {
            return Err(Error::Pole {
                omega,
                alpha_l: p.reduced(),
            });
        }
    }
    Ok(etas(lambda_from_freq(omega, params), e.lambda1, e.lambda2))
}

#[derive(Debug, Clone, Copy)]
struct Node {
    t: f64,
    /// Quadrature weight including the `1/2π` normalization.
    w: f64,
    lam1: f64,
    lam2: f64,
    phase: Complex64,
}

/// Cached Brillouin-zone quadrature for one parameter set.
#[derive(Debug, Clone)]
pub struct ZoneSampler {
    params: ChainParams,
    exclusion: f64,
    coarse: Vec<Node>,
    fine: Vec<Node>,
    lam_lo: f64,
    lam_hi: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ZoneIntegrals {
    /// `(1/2π)∫(η₁ + η₂)`.
    pub i1: f64,
    /// Real part of `(1/2π)∫e^{iθ}(η₁ − η₂)`.
    pub i2: f64,
    /// Discarded imaginary part of `I₂`.
    pub i2_imag: f64,
}

impl ZoneSampler {
    pub fn new(params: &ChainParams) -> Result<Self> {
        Self::with_exclusion(params, DEFAULT_EXCLUSION)
    }

    pub fn with_exclusion(params: &ChainParams, exclusion: f64) -> Result<Self> {
        params.validate()?;
        if !(exclusion >= 1e-12 && exclusion < 0.5) {
            return Err(Error::invalid(
                "exclusion",
                format!("must lie in [1e-12, 0.5), got {exclusion}"),
            ));
        }
        let (lam_lo, lam_hi) = gap_lambdas(params)?;
        let breaks = half_zone_breaks(exclusion);
        let coarse = nodes(params, &refine(&breaks, 1))?;
        let fine = nodes(params, &refine(&breaks, 2))?;
        Ok(ZoneSampler {
            params: *params,
            exclusion,
            coarse,
            fine,
            lam_lo,
            lam_hi,
        })
    }

    pub fn params(&self) -> &ChainParams {
        &self.params
    }

    pub fn exclusion(&self) -> f64 {
        self.exclusion
    }

    /// Band gap in the spectral parameter.
    pub fn gap_lambdas(&self) -> (f64, f64) {
        (self.lam_lo, self.lam_hi)
    }

    pub fn gap(&self) -> Result<(f64, f64)> {
        Ok((
            freq_from_lambda(self.lam_lo, &self.params)?,
            freq_from_lambda(self.lam_hi, &self.params)?,
        ))
    }

    fn check_in_gap(&self, lambda: f64) -> Result<()> {
        if lambda > self.lam_lo && lambda < self.lam_hi {
            Ok(())
        } else {
            Err(Error::OutOfGap {
                value: lambda,
                lo: self.lam_lo,
                hi: self.lam_hi,
            })
        }
    }

    /// `I₁(λ)` and `I₂(λ)` for `λ` strictly inside the gap.
    pub fn integrals(&self, lambda: f64) -> Result<ZoneIntegrals> {
        self.check_in_gap(lambda)?;
        let eval = |nodes: &[Node]| {
            let (mut i1, mut i2) = (0.0, Complex64::new(0.0, 0.0));
            for n in nodes {
                let e = etas(lambda, n.lam1, n.lam2);
                i1 += n.w * (e.eta1 + e.eta2);
                i2 += n.phase * (n.w * (e.eta1 - e.eta2));
            }
            (i1, i2)
        };
        let (c1, c2) = eval(&self.coarse);
        let (f1, f2) = eval(&self.fine);
        let change = (f1 - c1).abs().max((f2 - c2).norm());
        let scale = f1.abs().max(f2.norm()).max(1.0);
        if change > INTEGRAL_TOL * scale {
            return Err(Error::NonConvergence {
                what: "Brillouin-zone integrals",
                change,
                tol: INTEGRAL_TOL,
            });
        }
        Ok(ZoneIntegrals {
            i1: f1,
            i2: f2.re,
            i2_imag: f2.im,
        })
    }

    /// `I(λ) = I₁ − I₂`.
    pub fn i_minus(&self, lambda: f64) -> Result<f64> {
        self.integrals(lambda).map(|z| z.i1 - z.i2)
    }

    /// `I₁ + I₂`.
    pub fn i_plus(&self, lambda: f64) -> Result<f64> {
        self.integrals(lambda).map(|z| z.i1 + z.i2)
    }

    /// Fourier blocks `T_m`, `|m| ≤ n − 1`, of the symbol at `λ`.
    pub fn blocks(&self, lambda: f64, n: usize) -> Result<BlockToeplitz> {
        self.check_in_gap(lambda)?;
        if n == 0 {
            return Err(Error::invalid("N", "must be at least 1"));
        }
        let cap = self.params.cap();
        let m_max = n as i64 - 1;
        let eval = |nodes: &[Node]| -> Vec<[[Complex64; 2]; 2]> {
            (-m_max..=m_max)
                .map(|m| {
                    let zero = Complex64::new(0.0, 0.0);
                    let (mut a, mut b, mut bc) = (zero, zero, zero);
                    for nd in nodes {
                        let e = etas(lambda, nd.lam1, nd.lam2);
                        let f = Complex64::from_polar(nd.w, m as f64 * nd.t);
                        a += f * (e.eta1 + e.eta2);
                        b += f * nd.phase * (e.eta1 - e.eta2);
                        bc += f * nd.phase.conj() * (e.eta1 - e.eta2);
                    }
                    let h = -0.5 * cap;
                    [[a * h, -b * h], [-bc * h, a * h]]
                })
                .collect()
        };
        let coarse = eval(&self.coarse);
        let fine = eval(&self.fine);
        let mut change = 0.0f64;
        let mut scale = 0.0f64;
        for (c, f) in coarse.iter().zip(&fine) {
            for i in 0..2 {
                for j in 0..2 {
                    change = change.max((c[i][j] - f[i][j]).norm());
                    scale = scale.max(f[i][j].norm());
                }
            }
        }
        if change > BLOCK_TOL * scale.max(cap) {
            return Err(Error::NonConvergence {
                what: "Toeplitz block quadrature",
                change,
                tol: BLOCK_TOL,
            });
        }
        Ok(BlockToeplitz::from_blocks(n, fine))
    }
}

/// Panel breakpoints on `[ρ, π]`.
fn half_zone_breaks(rho: f64) -> Vec<f64> {
    let mut b = vec![];
    let mut x = rho;
    while x < 0.5 {
        b.push(x);
        x *= 2.0;
    }
    let mut right = vec![PI];
    let mut h = 1e-8;
    while PI - h > 0.5 + 0.25 {
        right.push(PI - h);
        h *= 2.0;
    }
    b.push(0.5);
    b.extend(right.into_iter().rev());
    b
}

fn nodes(params: &ChainParams, panels: &[(f64, f64)]) -> Result<Vec<Node>> {
    let rule = GaussLegendre::order16();
    let half: Vec<(f64, f64)> = panels
        .iter()
        .flat_map(|&(a, b)| rule.mapped(a, b).collect::<Vec<_>>())
        .collect();
    half.par_iter()
        .flat_map_iter(|&(t, w)| [(t, w), (-t, w)])
        .map(|(t, w)| {
            let p = BrillouinPoint::from_reduced(t, params.cell)?;
            let e = quasi_eigen(&quasi_capacitance_at(params, &p)?);
            Ok(Node {
                t,
                w: w / (2.0 * PI),
                lam1: e.lambda1,
                lam2: e.lambda2,
                phase: e.phase(),
            })
        })
        .collect()
}

/// `I₁`, `I₂` at spectral parameter `lambda`.
pub fn midgap_integrals(params: &ChainParams, lambda: f64) -> Result<ZoneIntegrals> {
    ZoneSampler::new(params)?.integrals(lambda)
}

/// Bisection for a root of a decreasing function on `(a, b)` with
/// `f(a) > 0 > f(b)`.
fn bisect<F: FnMut(f64) -> Result<f64>>(mut f: F, mut a: f64, mut b: f64, rel: f64) -> Result<f64> {
    for _ in 0..200 {
        let mid = 0.5 * (a + b);
        if b - a <= rel * mid.abs() || mid == a || mid == b {
            return Ok(mid);
        }
        if f(mid)? > 0.0 {
            a = mid;
        } else {
            b = mid;
        }
    }
    Ok(0.5 * (a + b))
}

/// Search interval `(λ₁^⋄ + m, λ₂^⋄ − m)`.
fn search_interval(s: &ZoneSampler) -> Result<(f64, f64)> {
    let (lo, hi) = s.gap_lambdas();
    if !(hi > lo) {
        return Err(Error::NoMidGap("the band gap is closed".into()));
    }
    let m = EDGE_MARGIN * (hi - lo);
    Ok((lo + m, hi - m))
}

/// Roots in `λ` of `I₁ − I₂` and `I₁ + I₂`, ascending.
pub fn unit_roots_lambda(s: &ZoneSampler) -> Result<(f64, f64)> {
    let (a, b) = search_interval(s)?;
    let mut roots = vec![];
    for sign in [-1.0, 1.0] {
        let f = |l: f64| s.integrals(l).map(|z| z.i1 + sign * z.i2);
        let (fa, fb) = (f(a)?, f(b)?);
        if !(fa > 0.0 && fb < 0.0) {
            return Err(Error::NoMidGap(format!(
                "I1 {} I2 does not change sign across the gap ({fa:.3e} .. {fb:.3e})",
                if sign < 0.0 { "-" } else { "+" }
            )));
        }
        roots.push(bisect(f, a, b, 1e-13)?);
    }
    roots.sort_by(f64::total_cmp);
    Ok((roots[0], roots[1]))
}

/// The two mid-gap frequencies of the chain with one dimer removed.
pub fn solve_midgap_unit(params: &ChainParams) -> Result<(f64, f64)> {
    let s = ZoneSampler::new(params)?;
    let (a, b) = unit_roots_lambda(&s)?;
    Ok((freq_from_lambda(a, params)?, freq_from_lambda(b, params)?))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ToeplitzSymbol {
    pub eta: EtaPair,
    /// Row-major `φ(α)`.
    #[serde(skip)]
    pub phi: [[Complex64; 2]; 2],
    pub cap: f64,
}

impl ToeplitzSymbol {
    pub fn det(&self) -> Complex64 {
        self.phi[0][0] * self.phi[1][1] - self.phi[0][1] * self.phi[1][0]
    }
}

/// `φ(α) = −(Cap/2)[[η₁+η₂, −e^{iθ}(η₁−η₂)], [−e^{−iθ}(η₁−η₂), η₁+η₂]]`.
pub fn toeplitz_symbol(params: &ChainParams, omega: f64, alpha: f64) -> Result<ToeplitzSymbol> {
    let eta = eta_pair(params, omega, alpha)?;
    let p = BrillouinPoint::new(alpha, params.cell)?;
    let ph = quasi_eigen(&quasi_capacitance_at(params, &p)?).phase();
    let cap = params.cap();
    let h = -0.5 * cap;
    let s = Complex64::new(eta.eta1 + eta.eta2, 0.0) * h;
    let d = eta.eta1 - eta.eta2;
    Ok(ToeplitzSymbol {
        eta,
        phi: [[s, ph * (-d * h)], [ph.conj() * (-d * h), s]],
        cap,
    })
}

/// Blocks `T_m`, `|m| < N`, and the assembled `2N × 2N` matrix with block
/// `(k, n)` equal to `T_{k−n}`.
#[derive(Debug, Clone)]
pub struct BlockToeplitz {
    n: usize,
    blocks: Vec<[[Complex64; 2]; 2]>,
    matrix: Vec<Complex64>,
}

impl BlockToeplitz {
    fn from_blocks(n: usize, blocks: Vec<[[Complex64; 2]; 2]>) -> Self {
        let dim = 2 * n;
        let mut matrix = vec![Complex64::new(0.0, 0.0); dim * dim];
        for k in 0..n {
            for l in 0..n {
                let b = &blocks[k + n - 1 - l];
                for i in 0..2 {
                    for j in 0..2 {
                        matrix[(2 * k + i) * dim + 2 * l + j] = b[i][j];
                    }
                }
            }
        }
        BlockToeplitz { n, blocks, matrix }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn dim(&self) -> usize {
        2 * self.n
    }

    /// `T_m` for `|m| < N`.
    pub fn block(&self, m: i64) -> [[Complex64; 2]; 2] {
        self.blocks[(m + self.n as i64 - 1) as usize]
    }

    /// Row-major assembled matrix.
    pub fn matrix(&self) -> &[Complex64] {
        &self.matrix
    }

    pub fn frobenius(&self) -> f64 {
        self.matrix.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    /// `max |𝒯 − 𝒯†|`.
    pub fn hermitian_residual(&self) -> f64 {
        let d = self.dim();
        let mut r = 0.0f64;
        for i in 0..d {
            for j in 0..d {
                r = r.max((self.matrix[i * d + j] - self.matrix[j * d + i].conj()).norm());
            }
        }
        r
    }

    /// `max |𝒯 − J conj(𝒯) J|` with `J` the exchange matrix.
    pub fn centrosymmetry_residual(&self) -> f64 {
        let d = self.dim();
        let mut r = 0.0f64;
        for i in 0..d {
            for j in 0..d {
                let flipped = self.matrix[(d - 1 - i) * d + d - 1 - j].conj();
                r = r.max((self.matrix[i * d + j] - flipped).norm());
            }
        }
        r
    }

    /// `max_m |T_m − J₁ conj(T_{−m}) J₁|`.
    pub fn block_symmetry_residual(&self) -> f64 {
        let mut r = 0.0f64;
        let n = self.n as i64;
        for m in 1 - n..n {
            let a = self.block(m);
            let b = self.block(-m);
            for i in 0..2 {
                for j in 0..2 {
                    r = r.max((a[i][j] - b[1 - i][1 - j].conj()).norm());
                }
            }
        }
        r
    }

    pub fn det_t0(&self) -> f64 {
        let t = self.block(0);
        (t[0][0] * t[1][1] - t[0][1] * t[1][0]).re
    }

    pub fn eigen(&self) -> Result<crate::linalg::HermitianEigen> {
        hermitian_eigen(&self.matrix, self.dim())
    }
}

/// Assembled `𝒯_N(ω)`.
pub fn toeplitz_blocks(params: &ChainParams, omega: f64, n: usize) -> Result<BlockToeplitz> {
    ZoneSampler::new(params)?.blocks(lambda_from_freq(omega, params), n)
}

/// A zero crossing of one sorted eigenvalue branch of `𝒯_N(ω)`.
#[derive(Debug, Clone, Serialize)]
pub struct NullCrossing {
    pub omega: f64,
    pub branch: usize,
    /// `|λ_branch| / ‖𝒯_N‖_F` at the returned frequency.
    pub residual: f64,
    #[serde(skip)]
    pub null_vector: Vec<Complex64>,
    /// `‖v − J conj(v)‖/‖v‖` after fixing the phase of `v`.
    pub symmetric_defect: f64,
    /// `‖v + J conj(v)‖/‖v‖`.
    pub antisymmetric_defect: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct RemovedRoots {
    pub n: usize,
    pub lower: NullCrossing,
    pub upper: NullCrossing,
}

impl RemovedRoots {
    pub fn omegas(&self) -> (f64, f64) {
        (self.lower.omega, self.upper.omega)
    }
}

/// Phase-fixed `J`-conjugation defects of a vector.
fn j_defects(v: &[Complex64]) -> (f64, f64) {
    let d = v.len();
    let top = (0..(d / 2).max(1))
        .max_by(|&i, &j| v[i].norm().total_cmp(&v[j].norm()))
        .unwrap_or(0);
    let g = if v[top].norm() > 0.0 {
        v[top].conj() / v[top].norm()
    } else {
        Complex64::new(1.0, 0.0)
    };
    let u: Vec<Complex64> = v.iter().map(|z| z * g).collect();
    let norm = u.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    let (mut s, mut a) = (0.0, 0.0);
    for i in 0..d {
        let jc = u[d - 1 - i].conj();
        s += (u[i] - jc).norm_sqr();
        a += (u[i] + jc).norm_sqr();
    }
    (s.sqrt() / norm, a.sqrt() / norm)
}

/// Frequencies where `𝒯_N(ω)` is singular: sorted eigenvalue branches are
/// scanned across the gap interior in steps of at most `gap/400`, and every
/// sign change is refined by bisection on its branch.
pub fn removed_roots_with(s: &ZoneSampler, n: usize) -> Result<RemovedRoots> {
    let params = *s.params();
    let (la, lb) = search_interval(s)?;
    let (wa, wb) = (
        freq_from_lambda(la, &params)?,
        freq_from_lambda(lb, &params)?,
    );
    let grid: Vec<f64> = (0..=SCAN_STEPS)
        .map(|k| wa + (wb - wa) * k as f64 / SCAN_STEPS as f64)
        .collect();
    let spectra: Vec<Vec<f64>> = grid
        .par_iter()
        .map(|&w| Ok(s.blocks(lambda_from_freq(w, &params), n)?.eigen()?.values))
        .collect::<Result<_>>()?;
    let mut brackets = vec![];
    for k in 0..SCAN_STEPS {
        for b in 0..2 * n {
            let (x, y) = (spectra[k][b], spectra[k + 1][b]);
            if (x < 0.0) != (y < 0.0) {
                brackets.push((grid[k], grid[k + 1], b, x < 0.0));
            }
        }
    }
    if brackets.len() > 2 {
        return Err(Error::BranchAmbiguity {
            count: brackets.len(),
        });
    }
    if brackets.len() < 2 {
        return Err(Error::NoMidGap(format!(
            "found {} zero crossing(s) of the Toeplitz spectrum for N = {n}",
            brackets.len()
        )));
    }
    let mut found: Vec<NullCrossing> = brackets
        .par_iter()
        .map(|&(mut a, mut b, branch, rising)| {
            let value = |w: f64| -> Result<f64> {
                Ok(s.blocks(lambda_from_freq(w, &params), n)?.eigen()?.values[branch])
            };
            for _ in 0..200 {
                let mid = 0.5 * (a + b);
                if b - a <= 1e-15 * mid || mid == a || mid == b {
                    break;
                }
                if (value(mid)? < 0.0) == rising {
                    a = mid;
                } else {
                    b = mid;
                }
            }
            let omega = 0.5 * (a + b);
            let t = s.blocks(lambda_from_freq(omega, &params), n)?;
            let e = t.eigen()?;
            let v = e.vectors[branch].clone();
            let (sym, anti) = j_defects(&v);
            Ok(NullCrossing {
                omega,
                branch,
                residual: e.values[branch].abs() / t.frobenius(),
                null_vector: v,
                symmetric_defect: sym,
                antisymmetric_defect: anti,
            })
        })
        .collect::<Result<_>>()?;
    found.sort_by(|x, y| x.omega.total_cmp(&y.omega));
    let upper = found.pop().unwrap();
    let lower = found.pop().unwrap();
    Ok(RemovedRoots { n, lower, upper })
}

pub fn solve_midgap_removed(params: &ChainParams, n: usize) -> Result<RemovedRoots> {
    removed_roots_with(&ZoneSampler::new(params)?, n)
}

#[derive(Debug, Clone, Serialize)]
pub struct OmegaInfinity {
    pub omega_inf: f64,
    /// Change between the last two extrapolations, or the distance to the last
    /// midpoint when only one is available.
    pub residual: f64,
    /// `(N, ω₁(N), ω₂(N))`.
    pub brackets: Vec<(usize, f64, f64)>,
}

/// Aitken extrapolation of the bracket midpoints `(ω₁(N) + ω₂(N))/2`, which
/// approach their limit geometrically.
pub fn omega_infinity_with(s: &ZoneSampler, n_max: usize) -> Result<OmegaInfinity> {
    if n_max < 3 {
        return Err(Error::invalid("N_max", "must be at least 3"));
    }
    let brackets: Vec<(usize, f64, f64)> = (1..=n_max)
        .map(|n| {
            let r = removed_roots_with(s, n)?;
            Ok((n, r.lower.omega, r.upper.omega))
        })
        .collect::<Result<_>>()?;
    Ok(extrapolate(brackets))
}

fn extrapolate(brackets: Vec<(usize, f64, f64)>) -> OmegaInfinity {
    let mids: Vec<f64> = brackets.iter().map(|b| 0.5 * (b.1 + b.2)).collect();
    let aitken = |i: usize| {
        let (x0, x1, x2) = (mids[i], mids[i + 1], mids[i + 2]);
        let den = x2 - 2.0 * x1 + x0;
        if den.abs() <= 1e-14 * x2.abs() {
            x2
        } else {
            x2 - (x2 - x1).powi(2) / den
        }
    };
    let k = mids.len();
    let last = *brackets.last().unwrap();
    let mut est = aitken(k - 3);
    // keep the estimate inside the tightest bracket
    if !(est >= last.1 && est <= last.2) {
        est = mids[k - 1];
    }
    let residual = if k >= 4 {
        (est - aitken(k - 4)).abs()
    } else {
        (est - mids[k - 1]).abs()
    };
    OmegaInfinity {
        omega_inf: est,
        residual,
        brackets,
    }
}

pub fn omega_infinity(params: &ChainParams, n_max: usize) -> Result<OmegaInfinity> {
    omega_infinity_with(&ZoneSampler::new(params)?, n_max)
}

/// `[ω₋, ω₊]` at the smallest dislocation, `N = 1`.
pub fn midgap_interval(params: &ChainParams) -> Result<(f64, f64)> {
    Ok(solve_midgap_removed(params, 1)?.omegas())
}

#[derive(Debug, Clone, Serialize)]
pub struct MidGapResult {
    pub omega_minus: f64,
    pub omega_plus: f64,
    pub gap: (f64, f64),
    pub omega_inf: f64,
    pub omega_inf_residual: f64,
    pub interval: (f64, f64),
    pub brackets: Vec<(usize, f64, f64)>,
}

impl MidGapResult {
    /// Rows `(N, omega1, omega2, gap_lo, gap_hi)`.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv_writer(out);
        w.write_record(["N", "omega1", "omega2", "gap_lo", "gap_hi"])?;
        for &(n, a, b) in &self.brackets {
            w.write_record([
                n.to_string(),
                fmt_f64(a),
                fmt_f64(b),
                fmt_f64(self.gap.0),
                fmt_f64(self.gap.1),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Removed-dimer roots for `N = 1..n_max`, their limit and the interval.
pub fn midgap_summary(s: &ZoneSampler, n_max: usize) -> Result<MidGapResult> {
    let inf = omega_infinity_with(s, n_max.max(3))?;
    let first = inf.brackets[0];
    let shown: Vec<_> = inf
        .brackets
        .iter()
        .copied()
        .filter(|b| b.0 <= n_max)
        .collect();
    Ok(MidGapResult {
        omega_minus: first.1,
        omega_plus: first.2,
        gap: s.gap()?,
        omega_inf: inf.omega_inf,
        omega_inf_residual: inf.residual,
        interval: (first.1, first.2),
        brackets: shown,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct DiagnosticsReport {
    pub l0: f64,
    pub c12_edge: f64,
    /// `C₁₂^{π/L} > 0` exactly when `l₀ > 1/2`.
    pub c12_sign_ok: bool,
    /// `max_α (Re g(α) − g(π/L))`, nonpositive in theory.
    pub bound_max: f64,
    /// Grid point where `bound_max` is attained.
    pub bound_argmax: f64,
    pub bound_ok: bool,
    /// Central differences of `I₁ − I₂` and `I₁ + I₂` at interior samples.
    pub di_minus_max: f64,
    pub di_plus_max: f64,
    pub monotone_ok: bool,
    pub samples: usize,
    pub i2_imag_max: f64,
    pub symmetry_ok: bool,
    /// Largest disagreement between the two evaluations of `g`.
    pub g_paths_max_diff: f64,
    pub g_paths_ok: bool,
    pub all_ok: bool,
}

/// Checks of the sign and monotonicity facts behind the existence and
/// uniqueness of mid-gap roots.
pub fn midgap_diagnostics(params: &ChainParams) -> Result<DiagnosticsReport> {
    let s = ZoneSampler::new(params)?;
    let l0 = params.l0();
    let edge = BrillouinPoint::from_reduced(PI, params.cell)?;
    let c12_edge = quasi_capacitance_at(params, &edge)?.c12.re;
    let c12_sign_ok = (c12_edge > 0.0) == (l0 > 0.5) && c12_edge != 0.0;

    let g_edge = g_of_alpha(&edge, l0)?.re;
    let mut bound_max = f64::NEG_INFINITY;
    let mut bound_argmax = PI;
    for k in 1..=64 {
        let t = PI * k as f64 / 64.0;
        let v = g_of_alpha(&BrillouinPoint::from_reduced(t, params.cell)?, l0)?.re - g_edge;
        if v > bound_max {
            bound_max = v;
            bound_argmax = t;
        }
    }
    let bound_ok = bound_max <= 1e-10;

    let (lo, hi) = search_interval(&s)?;
    let samples = 50;
    let h = 1e-4 * (hi - lo);
    let mut di_minus_max = f64::NEG_INFINITY;
    let mut di_plus_max = f64::NEG_INFINITY;
    let mut i2_imag_max = 0.0f64;
    for k in 0..samples {
        let lam = lo + (hi - lo) * (k as f64 + 0.5) / samples as f64;
        let a = s.integrals(lam - h)?;
        let b = s.integrals(lam + h)?;
        di_minus_max = di_minus_max.max(((b.i1 - b.i2) - (a.i1 - a.i2)) / (2.0 * h));
        di_plus_max = di_plus_max.max(((b.i1 + b.i2) - (a.i1 + a.i2)) / (2.0 * h));
        i2_imag_max = i2_imag_max.max(a.i2_imag.abs()).max(b.i2_imag.abs());
    }
    let monotone_ok = di_minus_max < 0.0 && di_plus_max < 0.0;
    let symmetry_ok = i2_imag_max < 1e-8;

    let mut g_paths_max_diff = 0.0f64;
    for k in 1..=16 {
        let t = PI * k as f64 / 16.0;
        let p = BrillouinPoint::from_reduced(t, params.cell)?;
        for l in [0.2, 0.4, 0.6, 0.8] {
            let d = (g_of_alpha(&p, l)? - g_of_alpha_lerch(&p, l)?).norm();
            g_paths_max_diff = g_paths_max_diff.max(d);
        }
    }
    let g_paths_ok = g_paths_max_diff < 1e-8;
    Ok(DiagnosticsReport {
        l0,
        c12_edge,
        c12_sign_ok,
        bound_max,
        bound_argmax,
        bound_ok,
        di_minus_max,
        di_plus_max,
        monotone_ok,
        samples,
        i2_imag_max,
        symmetry_ok,
        g_paths_max_diff,
        g_paths_ok,
        all_ok: c12_sign_ok && bound_ok && monotone_ok && symmetry_ok && g_paths_ok,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn dilute(sep: f64) -> ChainParams {
        ChainParams::unit_sphere(9.0, sep, 0.1, 1e-4).unwrap()
    }

    #[test]
    fn eta_limits() {
        let p = dilute(6.0);
        let e = eta_pair(&p, 0.0, 0.2).unwrap();
        assert!((e.eta1 + 1.0).abs() < 1e-15 && (e.eta2 + 1.0).abs() < 1e-15);
        let b = BrillouinPoint::new(0.2, 9.0).unwrap();
        let q = quasi_eigen(&quasi_capacitance_at(&p, &b).unwrap());
        let w1 = freq_from_lambda(q.lambda1, &p).unwrap();
        let e = eta_pair(&p, 2f64.sqrt() * w1, 0.2).unwrap();
        assert!((e.eta1 - 1.0).abs() < 1e-12);
        assert!(matches!(eta_pair(&p, w1, 0.2), Err(Error::Pole { .. })));
    }

    #[test]
    fn etas_have_gap_signs_at_zone_edge() {
        let p = dilute(6.0);
        let s = ZoneSampler::new(&p).unwrap();
        let (lo, hi) = s.gap().unwrap();
        let e = eta_pair(&p, 0.5 * (lo + hi), PI / 9.0).unwrap();
        assert!(e.eta1 > 0.0 && e.eta2 < 0.0);
    }

    #[test]
    fn out_of_gap_is_rejected() {
        let s = ZoneSampler::new(&dilute(6.0)).unwrap();
        let (lo, _) = s.gap_lambdas();
        assert!(matches!(s.integrals(lo), Err(Error::OutOfGap { .. })));
        assert!(s.blocks(lo - 1.0, 2).is_err());
    }

    #[test]
    fn symbol_structure() {
        let p = dilute(6.0);
        let s = ZoneSampler::new(&p).unwrap();
        let (lo, hi) = s.gap().unwrap();
        let w = lo + 0.3 * (hi - lo);
        for a in [0.05, -0.2, 0.33] {
            let phi = toeplitz_symbol(&p, w, a).unwrap();
            let want = phi.cap * phi.cap * phi.eta.eta1 * phi.eta.eta2;
            assert!((phi.det().re - want).abs() < 1e-10 * want.abs());
            assert!(phi.det().im.abs() < 1e-10 * want.abs());
            let m = phi.phi;
            let scale = m[0][0].norm() + m[0][1].norm();
            assert!((m[0][1] - m[1][0].conj()).norm() < 1e-12 * scale);
            // J₁ φ J₁ = conj(φ)
            for i in 0..2 {
                for j in 0..2 {
                    assert!((m[1 - i][1 - j] - m[i][j].conj()).norm() < 1e-12 * scale);
                }
            }
        }
    }

    #[test]
    fn single_block_matches_integrals() {
        let p = dilute(6.0);
        let s = ZoneSampler::new(&p).unwrap();
        let (lo, hi) = s.gap_lambdas();
        let lam = lo + 0.4 * (hi - lo);
        let z = s.integrals(lam).unwrap();
        let t = s.blocks(lam, 1).unwrap();
        let want = p.cap() * p.cap() / 4.0 * (z.i1 * z.i1 - z.i2 * z.i2);
        assert!((t.det_t0() - want).abs() < 1e-9 * want.abs().max(1e-12));
        assert!(z.i2_imag.abs() < 1e-8);
    }

    #[test]
    fn short_dimer_has_no_midgap_root() {
        assert!(matches!(
            solve_midgap_unit(&dilute(3.0)),
            Err(Error::NoMidGap(_))
        ));
    }

    #[test]
    fn closed_gap_has_no_midgap_root() {
        assert!(matches!(
            solve_midgap_unit(&dilute(4.5)),
            Err(Error::NoMidGap(_))
        ));
    }

    #[test]
    fn aitken_on_geometric_sequence() {
        let b: Vec<(usize, f64, f64)> = (1..=5)
            .map(|n| {
                let r = 0.5f64.powi(n as i32);
                (n, 1.0 - r, 1.0 + 0.5 * r)
            })
            .collect();
        let e = extrapolate(b);
        assert!((e.omega_inf - 1.0).abs() < 1e-14);
    }

    #[test]
    fn defects_of_symmetric_vectors() {
        let v: Vec<Complex64> = [1.0, 2.0, 2.0, 1.0]
            .iter()
            .map(|&x| Complex64::new(0.0, x))
            .collect();
        let (s, a) = j_defects(&v);
        assert!(s < 1e-15 && (a - 2.0).abs() < 1e-15);
        let v: Vec<Complex64> = [1.0, -2.0, 2.0, -1.0]
            .iter()
            .map(|&x| Complex64::new(x, 0.0))
            .collect();
        let (s, a) = j_defects(&v);
        assert!(a < 1e-15 && (s - 2.0).abs() < 1e-15);
    }

    #[test]
    fn breaks_are_increasing() {
        let b = half_zone_breaks(1e-3);
        assert!(b.windows(2).all(|w| w[0] < w[1]));
        assert_eq!(b[0], 1e-3);
        assert_eq!(*b.last().unwrap(), PI);
    }
}
