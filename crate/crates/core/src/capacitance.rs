//! Dilute capacitance matrices: the 2×2 quasiperiodic matrix of the dimer
//! lattice and the dense matrix of a finite array.

use std::f64::consts::PI;
use std::io::Write;

use num_complex::Complex64;

use crate::error::Result;
use crate::export::{csv_writer, fmt_f64};
use crate::geometry::{ChainParams, FiniteChain};
use crate::special_sums::{dimer_sum, monopole_sum, BrillouinPoint};

/// Capacitance of the unit ball.
pub fn sphere_cap_b() -> f64 {
    4.0 * PI
}

/// `C^α = [[c11, c12], [conj(c12), c11]]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuasiCapacitance {
    pub alpha: f64,
    pub c11: f64,
    pub c12: Complex64,
}

impl QuasiCapacitance {
    pub fn c21(&self) -> Complex64 {
        self.c12.conj()
    }

    pub fn c22(&self) -> f64 {
        self.c11
    }

    /// Row-major entries.
    pub fn matrix(&self) -> [[Complex64; 2]; 2] {
        let d = Complex64::new(self.c11, 0.0);
        [[d, self.c12], [self.c12.conj(), d]]
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuasiEigen {
    pub lambda1: f64,
    pub lambda2: f64,
    /// Phase of `c12` in `[0, 2π)`; `None` when `c12 = 0`.
    pub theta: Option<f64>,
    pub eigvec1: [Complex64; 2],
    pub eigvec2: [Complex64; 2],
}

impl QuasiEigen {
    /// `e^{iθ}`, taken as 1 in the degenerate case.
    pub fn phase(&self) -> Complex64 {
        Complex64::from_polar(1.0, self.theta.unwrap_or(0.0))
    }
}

/// Dilute quasiperiodic capacitance at quasimomentum `alpha`.
pub fn quasi_capacitance(params: &ChainParams, alpha: f64) -> Result<QuasiCapacitance> {
    params.validate()?;
    let p = BrillouinPoint::new(alpha, params.cell)?;
    quasi_capacitance_at(params, &p)
}

pub fn quasi_capacitance_at(params: &ChainParams, p: &BrillouinPoint) -> Result<QuasiCapacitance> {
    let cap = params.cap();
    let k = cap * cap / (4.0 * PI);
    let c11 = cap - k * monopole_sum(p)? / params.cell;
    let c12 = -dimer_sum(p, params.sep)? * k;
    Ok(QuasiCapacitance {
        alpha: p.alpha(),
        c11,
        c12,
    })
}

pub fn quasi_eigen(c: &QuasiCapacitance) -> QuasiEigen {
    let r = c.c12.norm();
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let theta = (r > 0.0).then(|| c.c12.arg().rem_euclid(2.0 * PI));
    let ph = Complex64::from_polar(1.0, theta.unwrap_or(0.0));
    let one = Complex64::new(s, 0.0);
    QuasiEigen {
        lambda1: c.c11 - r,
        lambda2: c.c11 + r,
        theta,
        eigvec1: [-ph * s, one],
        eigvec2: [ph * s, one],
    }
}

/// Dense real symmetric `M × M` matrix, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct CapacitanceMatrix {
    n: usize,
    entries: Vec<f64>,
}

impl CapacitanceMatrix {
    pub fn from_entries(n: usize, entries: Vec<f64>) -> Self {
        assert_eq!(entries.len(), n * n);
        CapacitanceMatrix { n, entries }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.entries[i * self.n + j]
    }

    pub fn entries(&self) -> &[f64] {
        &self.entries
    }

    pub fn frobenius(&self) -> f64 {
        self.entries.iter().map(|x| x * x).sum::<f64>().sqrt()
    }

    /// Row-major CSV with a header row of column indices.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv_writer(out);
        let mut header = vec!["row".to_string()];
        header.extend((0..self.n).map(|j| j.to_string()));
        w.write_record(&header)?;
        for i in 0..self.n {
            let mut rec = vec![i.to_string()];
            rec.extend((0..self.n).map(|j| fmt_f64(self.get(i, j))));
            w.write_record(&rec)?;
        }
        w.flush()?;
        Ok(())
    }
}

/// `C_ii = εCap_B`, `C_ij = −(εCap_B)²/(4π|z_i − z_j|)`.
pub fn finite_capacitance(chain: &FiniteChain) -> CapacitanceMatrix {
    let cap = chain.params().cap();
    let k = cap * cap / (4.0 * PI);
    let z = chain.centers();
    let n = z.len();
    let mut entries = vec![0.0; n * n];
    for i in 0..n {
        entries[i * n + i] = cap;
        for j in 0..i {
            let c = -k / (z[i] - z[j]).abs();
            entries[i * n + j] = c;
            entries[j * n + i] = c;
        }
    }
    CapacitanceMatrix { n, entries }
}
