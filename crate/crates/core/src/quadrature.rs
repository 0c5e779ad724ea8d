//! Composite Gauss–Legendre quadrature on graded panels.

use std::ops::{Add, Mul};
use std::sync::OnceLock;

use crate::error::{Error, Result};

/// Nodes and weights of an n-point Gauss–Legendre rule on [-1, 1].
#[derive(Debug, Clone)]
pub struct GaussLegendre {
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl GaussLegendre {
    pub fn new(n: usize) -> Self {
        assert!(n >= 1);
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        let nf = n as f64;
        for i in 0..(n + 1) / 2 {
            // Tricomi initial guess, then Newton on P_n.
            let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (nf + 0.5)).cos();
            let mut dp = 1.0;
            for _ in 0..100 {
                let (p, d) = legendre(n, x);
                dp = d;
                let dx = p / d;
                x -= dx;
                if dx.abs() < 1e-16 {
                    break;
                }
            }
            let (_, d) = legendre(n, x);
            if d != 0.0 {
                dp = d;
            }
            let w = 2.0 / ((1.0 - x * x) * dp * dp);
            nodes[i] = -x;
            nodes[n - 1 - i] = x;
            weights[i] = w;
            weights[n - 1 - i] = w;
        }
        GaussLegendre { nodes, weights }
    }

    /// Shared 16-point rule.
    pub fn order16() -> &'static GaussLegendre {
        static RULE: OnceLock<GaussLegendre> = OnceLock::new();
        RULE.get_or_init(|| GaussLegendre::new(16))
    }

    /// Nodes and weights mapped onto `[a, b]`.
    pub fn mapped(&self, a: f64, b: f64) -> impl Iterator<Item = (f64, f64)> + '_ {
        let (c, h) = (0.5 * (a + b), 0.5 * (b - a));
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(move |(x, w)| (c + h * x, h * w))
    }

    pub fn integrate<T, F>(&self, a: f64, b: f64, f: F) -> T
    where
        T: Add<Output = T> + Mul<f64, Output = T> + Default,
        F: Fn(f64) -> T,
    {
        self.mapped(a, b)
            .fold(T::default(), |acc, (x, w)| acc + f(x) * w)
    }
}

fn legendre(n: usize, x: f64) -> (f64, f64) {
    let (mut p0, mut p1) = (1.0, x);
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let p = if n == 0 { 1.0 } else { p1 };
    let d = n as f64 * (x * p - p0) / (x * x - 1.0);
    (p, d)
}

/// Splits every panel `[a, b]` of `breaks` into `parts` equal subpanels.
pub fn refine(breaks: &[f64], parts: usize) -> Vec<(f64, f64)> {
    breaks
        .windows(2)
        .flat_map(|w| {
            let h = (w[1] - w[0]) / parts as f64;
            (0..parts).map(move |i| (w[0] + i as f64 * h, w[0] + (i + 1) as f64 * h))
        })
        .collect()
}

/// Integrates `f` over `[0, t_max]` on panels graded geometrically from
/// `scale`, doubling the subdivision until successive estimates agree to
/// `rel_tol` (relative to `floor.max(|I|)`).
pub fn integrate_graded<T, F>(f: F, scale: f64, t_max: f64, rel_tol: f64, floor: f64) -> Result<T>
where
    T: Add<Output = T> + Mul<f64, Output = T> + Default + Copy + Norm,
    F: Fn(f64) -> T,
{
    let mut breaks = vec![0.0];
    let mut x = scale.min(t_max);
    while x < t_max {
        breaks.push(x);
        x *= 2.0;
    }
    breaks.push(t_max);
    let rule = GaussLegendre::order16();
    let eval = |parts: usize| {
        refine(&breaks, parts)
            .into_iter()
            .fold(T::default(), |acc, (a, b)| acc + rule.integrate(a, b, &f))
    };
    let mut prev = eval(1);
    let mut change = f64::INFINITY;
    for parts in [2usize, 4, 8, 16, 32] {
        let next = eval(parts);
        change = (next + prev * -1.0).norm();
        if change <= rel_tol * next.norm().max(floor) {
            return Ok(next);
        }
        prev = next;
    }
    Err(Error::NonConvergence {
        what: "graded Gauss-Legendre quadrature",
        change,
        tol: rel_tol,
    })
}

/// Magnitude used by the convergence tests.
pub trait Norm {
    fn norm(&self) -> f64;
}

impl Norm for f64 {
    fn norm(&self) -> f64 {
        self.abs()
    }
}

impl Norm for num_complex::Complex64 {
    fn norm(&self) -> f64 {
        num_complex::Complex64::norm(*self)
    }
}
