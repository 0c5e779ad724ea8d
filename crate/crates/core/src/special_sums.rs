//! One-dimensional lattice sums and the special functions behind the dilute
//! capacitance asymptotics.
//!
//! All sums are written in the reduced variable `s = αL`. The oscillatory
//! series `Σ e^{ims}/(m+a)` converge only conditionally; their tails are
//! evaluated with repeated summation by parts, which turns the tail into a
//! rapidly converging expansion in forward differences of `1/(m+a)` as long as
//! the truncation index satisfies `|1 − e^{is}|·M ≫ 1`.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::quadrature::integrate_graded;

/// Target bound for every series tail.
pub const TAIL_TOL: f64 = 1e-14;

/// A quasimomentum in the Brillouin zone `(−π/L, π/L]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BrillouinPoint {
    alpha: f64,
    cell: f64,
}

impl BrillouinPoint {
    pub fn new(alpha: f64, cell: f64) -> Result<Self> {
        if !(cell.is_finite() && cell > 0.0) {
            return Err(Error::invalid("L", format!("must be positive, got {cell}")));
        }
        let s = alpha * cell;
        if !(s.is_finite() && s > -PI - 1e-12 && s <= PI + 1e-12) {
            return Err(Error::domain(
                "Brillouin zone",
                format!("alpha*L = {s} is outside (-pi, pi]"),
            ));
        }
        Ok(BrillouinPoint { alpha, cell })
    }

    /// Point with reduced coordinate `s = αL`.
    pub fn from_reduced(s: f64, cell: f64) -> Result<Self> {
        Self::new(s / cell, cell)
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn cell(&self) -> f64 {
        self.cell
    }

    /// `αL`.
    pub fn reduced(&self) -> f64 {
        self.alpha * self.cell
    }

    /// The point `−α`.
    pub fn mirrored(&self) -> Self {
        BrillouinPoint {
            alpha: -self.alpha,
            cell: self.cell,
        }
    }

    pub fn is_singular(&self) -> bool {
        self.alpha == 0.0
    }

    fn check_regular(&self) -> Result<f64> {
        let s = self.reduced();
        if s == 0.0 || (s / 2.0).sin() == 0.0 {
            return Err(Error::Singular {
                alpha_l: s,
                radius: 0.0,
            });
        }
        Ok(s)
    }
}

/// `Σ_{m≠0} e^{imαL}/|m| = −log(2 − 2cos αL)`.
pub fn monopole_sum(p: &BrillouinPoint) -> Result<f64> {
    let s = p.check_regular()?;
    // 2 - 2cos s = 4 sin²(s/2), evaluated without cancellation
    Ok(-2.0 * (2.0 * (s / 2.0).sin().abs()).ln())
}

/// The same sum evaluated numerically: `2 Re Σ_{m≥1} e^{ims}/m` through the
/// accelerated oscillatory series. Independent of the closed form.
pub fn monopole_series(p: &BrillouinPoint) -> Result<f64> {
    let s = p.check_regular()?;
    Ok(2.0 * unit_series(s, 0.0, 1)?.re)
}

/// `Σ_{m∈ℤ} e^{imαL}/|mL + l|`.
///
/// The `m = 0` term is split off and `m`, `−m` are paired. The real part has
/// the monopole kernel `2cos(ms)/(mL)` subtracted (its sum is known in closed
/// form), leaving an `O(m⁻³)` remainder; the imaginary part is the `O(m⁻²)`
/// series `−Σ 2l sin(ms)/((mL)² − l²)`. Both remainders are summed directly up
/// to an index `M` and their tails are taken from [`unit_tail`].
pub fn dimer_sum(p: &BrillouinPoint, sep: f64) -> Result<Complex64> {
    let cell = p.cell();
    if !(sep > 0.0 && sep < cell) {
        return Err(Error::invalid(
            "l",
            format!("must satisfy 0 < l < L, got {sep}"),
        ));
    }
    let s = p.check_regular()?;
    let l0 = sep / cell;
    if s.abs() == PI {
        return Ok(Complex64::new(zone_edge_dimer_sum(l0)? / cell, 0.0));
    }
    let m_cut = truncation_index(s, 8)?;

    let (mut re, mut im) = (0.0, 0.0);
    let mut phase = Phasor::new(s, 1);
    for m in 1..m_cut {
        let mf = m as f64;
        let z = phase.next();
        let q = mf * mf - l0 * l0;
        re += z.re * 2.0 * l0 * l0 / (mf * q);
        im -= z.im * 2.0 * l0 / q;
    }
    let u0 = unit_tail(s, 0.0, m_cut)?;
    let um = unit_tail(s, -l0, m_cut)?;
    let up = unit_tail(s, l0, m_cut)?;
    re += (um + up - u0 * 2.0).re;
    im -= (um - up).im;

    let re = 1.0 / l0 + monopole_sum(p)? + re;
    Ok(Complex64::new(re, im) / cell)
}

/// At `s = π` the terms `m` and `−m−1` are paired instead, giving the
/// alternating series `Σ_{m≥0} (−1)^m (1 − 2l₀)/((m + l₀)(m + 1 − l₀))` which
/// vanishes identically at `l₀ = 1/2`.
fn zone_edge_dimer_sum(l0: f64) -> Result<f64> {
    let m_cut = 32u64;
    let mut acc = 0.0;
    for m in 0..m_cut {
        let mf = m as f64;
        let sign = if m % 2 == 0 { 1.0 } else { -1.0 };
        acc += sign * (1.0 - 2.0 * l0) / ((mf + l0) * (mf + 1.0 - l0));
    }
    let tail = unit_tail(PI, l0, m_cut)? - unit_tail(PI, 1.0 - l0, m_cut)?;
    Ok(acc + tail.re)
}

/// `Σ_{m≥m0} e^{ims}/(m + a)` on the unit circle, `s ≠ 0 (mod 2π)`.
pub fn unit_series(s: f64, a: f64, m0: u64) -> Result<Complex64> {
    if m0 as f64 + a <= 0.0 {
        return Err(Error::domain(
            "oscillatory series",
            "m0 + a must be positive",
        ));
    }
    let m_cut = truncation_index(s, m0)?;
    let mut phase = Phasor::new(s, m0);
    let mut acc = Complex64::new(0.0, 0.0);
    for m in m0..m_cut {
        acc += phase.next() / (m as f64 + a);
    }
    Ok(acc + unit_tail(s, a, m_cut)?)
}

/// Tail `Σ_{m≥M} e^{ims}/(m + a)` by iterated summation by parts:
///
/// `S = z^M/(1−z) · Σ_j (z/(1−z))^j Δ^j h(M)` with `h(m) = 1/(m+a)` and
/// `Δ^j h(M) = (−1)^j j! / Π_{i=0..j}(M+a+i)`. After `k` terms the remainder is
/// bounded by `|1−z|^{−k} (k−1)! / Π_{i<k}(M+a+i)`.
pub fn unit_tail(s: f64, a: f64, m: u64) -> Result<Complex64> {
    let x = m as f64 + a;
    if x <= 0.0 {
        return Err(Error::domain("series tail", "M + a must be positive"));
    }
    let z = Complex64::from_polar(1.0, s);
    let one_minus = Complex64::new(1.0, 0.0) - z;
    let gap = one_minus.norm();
    if gap == 0.0 {
        return Err(Error::Singular {
            alpha_l: s,
            radius: 0.0,
        });
    }
    let ratio = -z / one_minus;
    let mut term = Complex64::from_polar(1.0, s * m as f64) / one_minus / x;
    let mut sum = term;
    // bound on the remainder after k terms
    let mut bound = 1.0 / (gap * x);
    for j in 0..400u32 {
        let jf = j as f64;
        term *= ratio * (jf + 1.0) / (x + jf + 1.0);
        if j > 0 {
            bound *= jf / (gap * (x + jf));
        }
        if bound < TAIL_TOL {
            return Ok(sum);
        }
        sum += term;
    }
    Err(Error::NonConvergence {
        what: "oscillatory series tail",
        change: bound,
        tol: TAIL_TOL,
    })
}

/// Smallest index with `|1 − e^{is}|·M ≥ 40`, so that the tail expansion
/// converges geometrically.
fn truncation_index(s: f64, min: u64) -> Result<u64> {
    let gap = 2.0 * (s / 2.0).sin().abs();
    if gap < 1e-7 {
        return Err(Error::Singular {
            alpha_l: s,
            radius: 1e-7,
        });
    }
    Ok(((40.0 / gap).ceil() as u64).max(min).max(8))
}

/// `e^{ims}` for consecutive `m`, re-anchored periodically to keep the phase
/// error at rounding level.
struct Phasor {
    s: f64,
    m: u64,
    z: Complex64,
    step: Complex64,
}

impl Phasor {
    fn new(s: f64, m0: u64) -> Self {
        Phasor {
            s,
            m: m0,
            z: Complex64::from_polar(1.0, s * m0 as f64),
            step: Complex64::from_polar(1.0, s),
        }
    }

    fn next(&mut self) -> Complex64 {
        let out = self.z;
        self.m += 1;
        self.z = if self.m % 64 == 0 {
            Complex64::from_polar(1.0, self.s * self.m as f64)
        } else {
            self.z * self.step
        };
        out
    }
}

/// Lerch transcendent at `s = 1`: `Φ(z,1,a) = Σ_{m≥0} z^m/(m+a)`, evaluated
/// from `∫₀^∞ e^{−at}/(1 − z e^{−t}) dt`.
pub fn lerch_phi(z: Complex64, a: f64) -> Result<Complex64> {
    if !(a.is_finite() && a > 0.0) {
        return Err(Error::domain(
            "lerch_phi",
            format!("a must be positive, got {a}"),
        ));
    }
    if !(z.re.is_finite() && z.im.is_finite()) || z.norm() > 1.0 + 1e-14 {
        return Err(Error::domain(
            "lerch_phi",
            format!("|z| must be <= 1, got {z}"),
        ));
    }
    if z.im == 0.0 && z.re >= 1.0 {
        return Err(Error::domain(
            "lerch_phi",
            "z lies on the branch cut [1, inf)",
        ));
    }
    let gap = (Complex64::new(1.0, 0.0) - z).norm();
    let r = z.norm().min(1.0);
    // tail past T is below e^{-aT}/(a(1 - |z|e^{-T})); |Φ| >= 1/(2a)
    let mut t_max = 1.0f64;
    loop {
        let bound = (-a * t_max).exp() / (a * (1.0 - r * (-t_max).exp()));
        if bound < 1e-15 / (2.0 * a) {
            break;
        }
        t_max *= 1.25;
    }
    let f = |t: f64| {
        let w = z * (-t).exp();
        Complex64::new((-a * t).exp(), 0.0) / (Complex64::new(1.0, 0.0) - w)
    };
    integrate_graded(f, 0.5 * gap.min(1.0), t_max, 1e-13, 1.0 / (2.0 * a))
}

/// `g(α) = Σ_{m≥1} e^{imαL}(2/m − 1/(m+l₀) − 1/(m−l₀))` from the real-line
/// representation
///
/// `g = ∫₀^∞ (cosh(l₀t) − 1)(e^{−t} − e^{iαL}) / (cosh t − cos αL) dt`.
pub fn g_of_alpha(p: &BrillouinPoint, l0: f64) -> Result<Complex64> {
    check_l0(l0)?;
    let s = p.check_regular()?;
    let (cs, sn) = (s.cos(), s.sin());
    let half_s = (s / 2.0).sin();
    // (cosh(l0 t) - 1)/(cosh t - cos s) without overflow or cancellation
    let ratio = move |t: f64| {
        if t < 40.0 {
            let num = 2.0 * (0.5 * l0 * t).sinh().powi(2);
            let den = 2.0 * (0.5 * t).sinh().powi(2) + 2.0 * half_s * half_s;
            num / den
        } else {
            let num = 0.5 * ((l0 - 1.0) * t).exp() * (1.0 + (-2.0 * l0 * t).exp()) - (-t).exp();
            let den = 0.5 * (1.0 + (-2.0 * t).exp()) - cs * (-t).exp();
            num / den
        }
    };
    let f = move |t: f64| {
        let r = ratio(t);
        Complex64::new(r * ((-t).exp() - cs), -r * sn)
    };
    let decay = 1.0 - l0;
    let t_max = (40.0f64).max(((4.5 / decay).ln() + 34.0) / decay);
    integrate_graded(f, 0.5 * s.abs().min(1.0), t_max, 1e-13, 1e-3)
}

/// `g(α)` through the Lerch transcendent:
/// `e^{iαL}[2Φ(e^{iαL},1,1) − Φ(e^{iαL},1,1+l₀) − Φ(e^{iαL},1,1−l₀)]`.
pub fn g_of_alpha_lerch(p: &BrillouinPoint, l0: f64) -> Result<Complex64> {
    check_l0(l0)?;
    let s = p.check_regular()?;
    let z = Complex64::from_polar(1.0, s);
    let total = lerch_phi(z, 1.0)? * 2.0 - lerch_phi(z, 1.0 + l0)? - lerch_phi(z, 1.0 - l0)?;
    Ok(z * total)
}

fn check_l0(l0: f64) -> Result<()> {
    if l0 > 0.0 && l0 < 1.0 {
        Ok(())
    } else {
        Err(Error::invalid(
            "l0",
            format!("must lie in (0, 1), got {l0}"),
        ))
    }
}
