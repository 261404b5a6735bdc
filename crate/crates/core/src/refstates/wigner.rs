use std::io::Write;

use num_complex::Complex;
use rayon::prelude::*;

use crate::hilbert::DensityMatrix;
use crate::scalar::Real;

/// `⟨m|D(γ)|n⟩` for `m, n < dim`, row-major.
///
/// Uses `⟨n+k|D|n⟩ = √(n!/(n+k)!) γ^k e^{-|γ|²/2} L_n^{(k)}(|γ|²)` with the
/// prefactor folded into the Laguerre recurrence so nothing overflows; the
/// upper triangle follows from `⟨n|D(γ)|n+k⟩ = ⟨n+k|D(-γ*)|n⟩`.
pub fn displacement_matrix(gamma: Complex<f64>, dim: usize) -> Vec<Complex<f64>> {
    let mut d = vec![Complex::new(0.0, 0.0); dim * dim];
    let x = gamma.norm_sqr();
    let ln_abs = gamma.norm().ln();
    let phase = if x > 0.0 { gamma / gamma.norm() } else { Complex::new(1.0, 0.0) };
    let upper_phase = -phase.conj();
    let mut ln_fact_k = 0.0;
    let mut lower_k = Complex::new(1.0, 0.0);
    let mut upper_k = Complex::new(1.0, 0.0);
    for k in 0..dim {
        if k > 0 {
            ln_fact_k += (k as f64).ln();
            lower_k *= phase;
            upper_k *= upper_phase;
        }
        // M_n = √(n!/(n+k)!) |γ|^k e^{-x/2} L_n^{(k)}(x)
        let kf = k as f64;
        let m0 = if k == 0 { (-x / 2.0).exp() } else if x > 0.0 { (-x / 2.0 + kf * ln_abs - 0.5 * ln_fact_k).exp() } else { 0.0 };
        let mut prev = 0.0;
        let mut cur = m0;
        for n in 0..dim - k {
            d[(n + k) * dim + n] = lower_k * cur;
            if k > 0 {
                d[n * dim + n + k] = upper_k * cur;
            }
            let nf = n as f64;
            let next = ((2.0 * nf + 1.0 + kf - x) * cur - (nf * (nf + kf)).sqrt() * prev)
                / ((nf + 1.0) * (nf + kf + 1.0)).sqrt();
            prev = cur;
            cur = next;
        }
    }
    d
}

/// `W(x₁ + i x₂) = (2/π) Σ ρ_nm (-1)^n ⟨m|D(2β)|n⟩`, normalized to unit
/// integral over the plane.
pub fn wigner_at<T: Real>(rho: &DensityMatrix<T>, x1: f64, x2: f64) -> f64 {
    let rho = rho.to_f64();
    wigner_point(&rho, x1, x2)
}

fn wigner_point(rho: &DensityMatrix<f64>, x1: f64, x2: f64) -> f64 {
    let dim = rho.dim();
    let d = displacement_matrix(Complex::new(2.0 * x1, 2.0 * x2), dim);
    let mut acc = Complex::new(0.0, 0.0);
    for n in 0..dim {
        let sign = if n % 2 == 0 { 1.0 } else { -1.0 };
        let mut row = Complex::new(0.0, 0.0);
        for m in 0..dim {
            row += rho.get(n, m) * d[m * dim + n];
        }
        acc += row * sign;
    }
    std::f64::consts::FRAC_2_PI * acc.re
}

/// Rectangular grid in the `(X₁, X₂)` plane.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WignerGridSpec {
    pub x1_range: (f64, f64),
    pub x2_range: (f64, f64),
    pub resolution: usize,
}

impl WignerGridSpec {
    /// Square grid of half-width `max(4, 3√(⟨n⟩+1))` with 201 points per axis.
    pub fn auto(mean_n: f64) -> Self {
        let h = (3.0 * (mean_n.max(0.0) + 1.0).sqrt()).max(4.0);
        Self { x1_range: (-h, h), x2_range: (-h, h), resolution: 201 }
    }

    fn axis(range: (f64, f64), n: usize) -> Vec<f64> {
        if n == 1 {
            return vec![0.5 * (range.0 + range.1)];
        }
        let step = (range.1 - range.0) / (n - 1) as f64;
        (0..n).map(|i| range.0 + step * i as f64).collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct WignerGrid {
    pub x1: Vec<f64>,
    pub x2: Vec<f64>,
    /// `values[i * x2.len() + j] = W(x1[i], x2[j])`.
    pub values: Vec<f64>,
}

impl WignerGrid {
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.x2.len() + j]
    }

    /// Riemann sum of `W` over the grid.
    pub fn integral(&self) -> f64 {
        let step = |v: &[f64]| if v.len() > 1 { v[1] - v[0] } else { 1.0 };
        self.values.iter().sum::<f64>() * step(&self.x1) * step(&self.x2)
    }

    pub fn min_value(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    /// CSV with header `x1,x2,w`, `x1` outer, 9 significant digits.
    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "x1,x2,w")?;
        for (i, x1) in self.x1.iter().enumerate() {
            for (j, x2) in self.x2.iter().enumerate() {
                writeln!(out, "{:.8e},{:.8e},{:.8e}", x1, x2, self.get(i, j))?;
            }
        }
        Ok(())
    }
}

pub fn wigner<T: Real>(rho: &DensityMatrix<T>, spec: &WignerGridSpec) -> WignerGrid {
    let rho = rho.to_f64();
    let x1 = WignerGridSpec::axis(spec.x1_range, spec.resolution);
    let x2 = WignerGridSpec::axis(spec.x2_range, spec.resolution);
    let values = x1
        .par_iter()
        .flat_map_iter(|&a| x2.iter().map(move |&b| (a, b)).collect::<Vec<_>>())
        .map(|(a, b)| wigner_point(&rho, a, b))
        .collect();
    WignerGrid { x1, x2, values }
}
