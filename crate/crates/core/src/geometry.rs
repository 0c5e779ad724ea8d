//! Chain geometries: the periodic dimer lattice parameters, the canonical
//! truncated dislocated array and random positional perturbations of it.
//!
//! Only resonator centers along the x₁ axis and a common radius are stored;
//! the dilute capacitance formulas need nothing else.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::capacitance::sphere_cap_b;
use crate::error::{Error, Result};

/// Dimensionless geometry and material parameters of the dimer chain.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChainParams {
    /// Unit-cell length `L`.
    pub cell: f64,
    /// Separation `l` of the two resonators inside a cell, `0 < l < L`.
    pub sep: f64,
    /// Resonator size scale (the radius for spheres).
    pub eps: f64,
    /// Material contrast.
    pub delta: f64,
    /// Capacitance of the unit reference domain.
    pub cap_b: f64,
    /// Volume of a single resonator.
    pub vol1: f64,
}

impl ChainParams {
    pub fn new(cell: f64, sep: f64, eps: f64, delta: f64, cap_b: f64, vol1: f64) -> Result<Self> {
        let p = ChainParams {
            cell,
            sep,
            eps,
            delta,
            cap_b,
            vol1,
        };
        p.validate()?;
        Ok(p)
    }

    /// Spherical resonators of radius `eps`: `Cap_B = 4π`, `|D₁| = 4πε³/3`.
    pub fn unit_sphere(cell: f64, sep: f64, eps: f64, delta: f64) -> Result<Self> {
        let vol1 = 4.0 * std::f64::consts::PI * eps.powi(3) / 3.0;
        Self::new(cell, sep, eps, delta, sphere_cap_b(), vol1)
    }

    pub fn validate(&self) -> Result<()> {
        let finite_pos = |name: &'static str, v: f64| {
            if v.is_finite() && v > 0.0 {
                Ok(())
            } else {
                Err(Error::invalid(
                    name,
                    format!("must be finite and positive, got {v}"),
                ))
            }
        };
        finite_pos("L", self.cell)?;
        finite_pos("l", self.sep)?;
        finite_pos("eps", self.eps)?;
        finite_pos("delta", self.delta)?;
        finite_pos("cap_b", self.cap_b)?;
        finite_pos("vol1", self.vol1)?;
        if self.sep >= self.cell {
            return Err(Error::invalid(
                "l",
                format!(
                    "must satisfy 0 < l < L, got l = {} and L = {}",
                    self.sep, self.cell
                ),
            ));
        }
        let d = 2.0 * self.eps;
        if d >= self.sep || d >= self.cell - self.sep {
            return Err(Error::invalid(
                "eps",
                format!(
                    "resonators overlap: 2*eps = {d} must be below l = {} and L - l = {}",
                    self.sep,
                    self.cell - self.sep
                ),
            ));
        }
        Ok(())
    }

    /// `l₀ = l / L`.
    pub fn l0(&self) -> f64 {
        self.sep / self.cell
    }

    /// Capacitance of one scaled resonator, `ε·Cap_B`.
    pub fn cap(&self) -> f64 {
        self.eps * self.cap_b
    }

    /// Same chain with a different intra-cell separation.
    pub fn with_sep(&self, sep: f64) -> Result<Self> {
        Self::new(self.cell, sep, self.eps, self.delta, self.cap_b, self.vol1)
    }
}

/// A finite array of identical resonators on the x₁ axis.
#[derive(Debug, Clone, PartialEq)]
pub struct FiniteChain {
    centers: Vec<f64>,
    radius: f64,
    params: ChainParams,
}

impl FiniteChain {
    /// Wraps an explicit center list, checking ordering and the `2ε` gap.
    pub fn from_centers(params: ChainParams, centers: Vec<f64>) -> Result<Self> {
        if centers.is_empty() {
            return Err(Error::invalid("centers", "chain must contain a resonator"));
        }
        if let Some(bad) = centers.iter().position(|z| !z.is_finite()) {
            return Err(Error::invalid(
                "centers",
                format!("center {bad} is not finite"),
            ));
        }
        let min_gap = 2.0 * params.eps;
        for (i, w) in centers.windows(2).enumerate() {
            let gap = w[1] - w[0];
            if gap <= min_gap {
                return Err(Error::Overlap {
                    i,
                    j: i + 1,
                    gap,
                    min_gap,
                });
            }
        }
        Ok(FiniteChain {
            centers,
            radius: params.eps,
            params,
        })
    }

    pub fn centers(&self) -> &[f64] {
        &self.centers
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    pub fn params(&self) -> &ChainParams {
        &self.params
    }

    pub fn len(&self) -> usize {
        self.centers.len()
    }

    pub fn is_empty(&self) -> bool {
        self.centers.is_empty()
    }
}

/// Canonical truncation with `M = 4K + 2` resonators: a lone `D₂` cell end,
/// `K` full cells on the left, `K` cells shifted by `d` on the right and a lone
/// shifted `D₁`. Cell `m` holds `D₁` at `mL − l/2` and `D₂` at `mL + l/2`.
pub fn build_finite_chain(params: &ChainParams, k: usize, d: f64) -> Result<FiniteChain> {
    params.validate()?;
    if k == 0 {
        return Err(Error::invalid("K", "must be a positive integer"));
    }
    if !(d.is_finite() && d >= 0.0) {
        return Err(Error::invalid(
            "d",
            format!("dislocation must be >= 0, got {d}"),
        ));
    }
    let (cell, half) = (params.cell, params.sep / 2.0);
    let k = k as i64;
    let mut centers = Vec::with_capacity((4 * k + 2) as usize);
    centers.push(-((k + 1) as f64) * cell + half);
    for m in -k..0 {
        let x = m as f64 * cell;
        centers.push(x - half);
        centers.push(x + half);
    }
    for m in 0..k {
        let x = m as f64 * cell + d;
        centers.push(x - half);
        centers.push(x + half);
    }
    centers.push(k as f64 * cell - half + d);
    FiniteChain::from_centers(*params, centers)
}

/// Adds independent `N(0, σ²)` offsets to every center. Pure in
/// `(chain, sigma, seed)`; overlapping results are reported as errors.
pub fn perturb_chain(chain: &FiniteChain, sigma: f64, seed: u64) -> Result<FiniteChain> {
    perturb_chain_stream(chain, sigma, seed, 0)
}

/// As [`perturb_chain`], drawing from an independent ChaCha stream. Used to
/// resample rejected geometries without touching the base sub-seed.
pub fn perturb_chain_stream(
    chain: &FiniteChain,
    sigma: f64,
    seed: u64,
    stream: u64,
) -> Result<FiniteChain> {
    if !(sigma.is_finite() && sigma >= 0.0) {
        return Err(Error::invalid(
            "sigma",
            format!("must be >= 0, got {sigma}"),
        ));
    }
    if sigma == 0.0 {
        return Ok(chain.clone());
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    let normal = Normal::new(0.0, sigma).map_err(|e| Error::invalid("sigma", e.to_string()))?;
    let centers = chain
        .centers
        .iter()
        .map(|z| z + normal.sample(&mut rng))
        .collect();
    FiniteChain::from_centers(chain.params, centers)
}
