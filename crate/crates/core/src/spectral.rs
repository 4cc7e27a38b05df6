//! Fourier diagnostics of colourings and correlation functions.
//!
//! Conventions: `f̂ₙ = (1/2π)∫ f(x) e^{-inx} dx` for a colouring `f`, and
//! `ρ(γ) = Σ_{n≥1} aₙ cos nγ`. Since `ρ` is minus the autocorrelation of `f`,
//! `aₙ = -2|f̂ₙ|²` for a single colouring and the weighted average of that for
//! a mixture.
//!
//! The quantum curve `-cos γ` has one nonzero cosine coefficient (`a₁ = -1`),
//! i.e. the two complex coefficients at `n = ±1`. Every finite-switch colouring
//! has jumps, so infinitely many `f̂ₙ` are nonzero, and squaring before
//! averaging means no mixture can cancel them.

use std::f64::consts::{PI, SQRT_2, TAU};

use num_complex::Complex64;
use serde::Serialize;

use crate::circle::{Colouring, Mixture};
use crate::correlation::PiecewiseLinearCorrelation;

pub const DEFAULT_N_MAX: usize = 99;

/// Lower bound on `a₁` for every classical model.
///
/// `|f̂₁| = (1/2π)|∫ f(x) e^{-ix} dx| ≤ (1/2π)∫|cos(x - φ)| dx = 2/π` for any
/// `±1`-valued `f`, with equality for `f = sign(cos(x - φ))`, which is the
/// one-segment disk. Hence `a₁ = -2|f̂₁|² ≥ -8/π²`, and mixtures average.
pub const FIRST_HARMONIC_BOUND: f64 = -8.0 / (PI * PI);

/// Lower bound on the normalised L2 distance to `-cos γ`.
///
/// `D² = ½[(a₁ + 1)² + Σ_{n≥2} aₙ²] ≥ ½(1 - 8/π²)²`.
pub const L2_LOWER_BOUND: f64 = (1.0 - 8.0 / (PI * PI)) / SQRT_2;

/// `f̂₀ … f̂_{n_max}` of a colouring, in closed form per constant segment.
pub fn colouring_spectrum(c: &Colouring, n_max: usize) -> Vec<Complex64> {
    let segments = c.segments();
    (0..=n_max)
        .map(|n| {
            if n == 0 {
                let mean: f64 = segments.iter().map(|&(lo, hi, col)| col as f64 * (hi - lo)).sum();
                return Complex64::new(mean / TAU, 0.0);
            }
            let nf = n as f64;
            let mut acc = Complex64::new(0.0, 0.0);
            for &(lo, hi, col) in &segments {
                // ∫_lo^hi e^{-inx} dx = (e^{-in·hi} - e^{-in·lo}) / (-in)
                let diff = Complex64::from_polar(1.0, -nf * hi) - Complex64::from_polar(1.0, -nf * lo);
                acc += diff * col as f64;
            }
            acc / Complex64::new(0.0, -nf * TAU)
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct Spectrum {
    n_max: usize,
    /// `f̂ₙ` for `0 ≤ n ≤ n_max`; negative `n` are conjugates. Only defined for a single colouring.
    colouring_coeffs: Option<Vec<Complex64>>,
    /// `aₙ` for `0 ≤ n ≤ n_max`.
    cosine_coeffs: Vec<f64>,
}

impl Spectrum {
    pub fn of_colouring(c: &Colouring, n_max: usize) -> Self {
        let fhat = colouring_spectrum(c, n_max);
        let cosine_coeffs = fhat
            .iter()
            .enumerate()
            .map(|(n, f)| if n == 0 { -f.norm_sqr() } else { -2.0 * f.norm_sqr() })
            .collect();
        Spectrum {
            n_max,
            colouring_coeffs: Some(fhat),
            cosine_coeffs,
        }
    }

    pub fn of_mixture(m: &Mixture, n_max: usize) -> Self {
        if let [(_, c)] = m.components() {
            return Self::of_colouring(c, n_max);
        }
        let mut cosine_coeffs = vec![0.0; n_max + 1];
        for (w, c) in m.components() {
            for (a, s) in cosine_coeffs.iter_mut().zip(Self::of_colouring(c, n_max).cosine_coeffs) {
                *a += w * s;
            }
        }
        Spectrum {
            n_max,
            colouring_coeffs: None,
            cosine_coeffs,
        }
    }

    /// Coefficients by direct integration of a piecewise-linear curve.
    pub fn of_curve(pl: &PiecewiseLinearCorrelation, n_max: usize) -> Self {
        Spectrum {
            n_max,
            colouring_coeffs: None,
            cosine_coeffs: pl.cosine_coefficients(n_max),
        }
    }

    /// A spectrum given only by its cosine coefficients `a₀, a₁, …`.
    pub fn from_cosine_coeffs(cosine_coeffs: Vec<f64>) -> Self {
        assert!(cosine_coeffs.len() >= 2, "need at least a0 and a1");
        Spectrum {
            n_max: cosine_coeffs.len() - 1,
            colouring_coeffs: None,
            cosine_coeffs,
        }
    }

    /// The quantum target `-cos γ`.
    pub fn quantum(n_max: usize) -> Self {
        let mut a = vec![0.0; n_max.max(1) + 1];
        a[1] = -1.0;
        Self::from_cosine_coeffs(a)
    }

    pub fn n_max(&self) -> usize {
        self.n_max
    }

    pub fn cosine_coeffs(&self) -> &[f64] {
        &self.cosine_coeffs
    }

    pub fn colouring_coeffs(&self) -> Option<&[Complex64]> {
        self.colouring_coeffs.as_deref()
    }

    /// `f̂ₙ` for any `|n| ≤ n_max`.
    pub fn fhat(&self, n: i64) -> Option<Complex64> {
        let coeffs = self.colouring_coeffs.as_ref()?;
        let f = *coeffs.get(n.unsigned_abs() as usize)?;
        Some(if n < 0 { f.conj() } else { f })
    }

    /// Rows `n,re_fhat,im_fhat,a_n`; the `f̂` columns are empty when undefined.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("n,re_fhat,im_fhat,a_n\n");
        for n in 0..=self.n_max {
            let a = self.cosine_coeffs[n];
            match self.colouring_coeffs.as_ref() {
                Some(f) => out.push_str(&format!(
                    "{n},{:.16e},{:.16e},{a:.16e}\n",
                    f[n].re, f[n].im
                )),
                None => out.push_str(&format!("{n},,,{a:.16e}\n")),
            }
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GullReport {
    pub nonzero_count: usize,
    pub tail_mass: f64,
    pub parseval_residual: f64,
}

pub fn gull_diagnostic(s: &Spectrum, tol: f64) -> GullReport {
    let a = &s.cosine_coeffs;
    let nonzero_count = a[1..].iter().filter(|x| x.abs() > tol).count();
    let tail_mass = a.iter().skip(2).map(|x| x.abs()).sum();
    let captured: f64 = match s.colouring_coeffs.as_ref() {
        Some(f) => f[1..].iter().map(|x| 2.0 * x.norm_sqr()).sum(),
        None => -a[1..].iter().sum::<f64>(),
    };
    GullReport {
        nonzero_count,
        tail_mass,
        parseval_residual: 1.0 - captured,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FirstHarmonicCheck {
    pub holds: bool,
    pub a1: f64,
    pub bound: f64,
}

pub fn first_harmonic_bound_check(s: &Spectrum) -> FirstHarmonicCheck {
    let a1 = s.cosine_coeffs[1];
    FirstHarmonicCheck {
        holds: a1 >= FIRST_HARMONIC_BOUND - 1e-12,
        a1,
        bound: FIRST_HARMONIC_BOUND,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::correlation::exact_correlation;
    use std::f64::consts::FRAC_PI_3;

    /// Plain discrete Fourier sum on `m` midpoints, independent of the segment formula.
    fn dft(c: &Colouring, n: usize, m: usize) -> Complex64 {
        let h = TAU / m as f64;
        (0..m)
            .map(|i| {
                let x = (i as f64 + 0.5) * h;
                Complex64::from_polar(c.colour_at(x) as f64, -(n as f64) * x)
            })
            .sum::<Complex64>()
            / m as f64
    }

    #[test]
    fn triangle_coefficients() {
        let s = Spectrum::of_colouring(&Colouring::triangle(), 99);
        let f1 = s.fhat(1).unwrap();
        assert!((f1.norm() - 2.0 / PI).abs() < 1e-15);
        assert!((dft(&Colouring::triangle(), 1, 4096).norm() - f1.norm()).abs() < 1e-6);
        assert!((s.cosine_coeffs()[1] + 8.0 / (PI * PI)).abs() < 1e-15);
        assert!((s.cosine_coeffs()[3] + 8.0 / (9.0 * PI * PI)).abs() < 1e-15);
        assert!((s.cosine_coeffs()[1] - -0.81057).abs() < 1e-5);
        assert!((s.cosine_coeffs()[3] - -0.09006).abs() < 1e-5);
        assert_eq!(s.fhat(-1).unwrap(), f1.conj());
    }

    #[test]
    fn even_and_zero_harmonics_vanish() {
        let c = Colouring::new(vec![0.3, 0.9, 1.4, 2.9]).unwrap();
        let s = Spectrum::of_colouring(&c, 40);
        for n in (0..=40).step_by(2) {
            assert!(s.fhat(n).unwrap().norm() < 1e-15, "n={n}");
            assert!(s.cosine_coeffs()[n as usize].abs() < 1e-15);
        }
        for n in [1usize, 3, 5, 7] {
            assert!((dft(&c, n, 1 << 16) - s.fhat(n as i64).unwrap()).norm() < 1e-4);
        }
    }

    #[test]
    fn wiener_khinchin_single() {
        let c = Colouring::new(vec![0.5, 1.0, 1.5, 2.0]).unwrap();
        let via_f = Spectrum::of_colouring(&c, 25);
        let via_rho = Spectrum::of_curve(&exact_correlation(&c), 25);
        for n in 0..=25 {
            assert!((via_f.cosine_coeffs()[n] - via_rho.cosine_coeffs()[n]).abs() < 1e-10);
        }
    }

    #[test]
    fn gull_quantum_and_triangle() {
        let q = gull_diagnostic(&Spectrum::quantum(99), 1e-9);
        assert_eq!(q.nonzero_count, 1);
        assert_eq!(q.tail_mass, 0.0);
        assert_eq!(q.parseval_residual, 0.0);

        let t = gull_diagnostic(&Spectrum::of_colouring(&Colouring::triangle(), 99), 1e-9);
        // Σ_{odd n≥3} 8/(π²n²) → 1 - 8/π²
        let limit = 1.0 - 8.0 / (PI * PI);
        assert!((t.tail_mass - limit).abs() < 0.007);
        assert!(t.tail_mass < limit);
        assert!(t.parseval_residual > 0.0 && t.parseval_residual < 0.01);
        assert_eq!(t.nonzero_count, 50);
    }

    #[test]
    fn first_harmonic() {
        let t = first_harmonic_bound_check(&Spectrum::of_colouring(&Colouring::triangle(), 5));
        assert!(t.holds);
        assert!((t.a1 - t.bound).abs() < 1e-15);
        let c = Colouring::new(vec![FRAC_PI_3, 2.0 * FRAC_PI_3]).unwrap();
        let r = first_harmonic_bound_check(&Spectrum::of_colouring(&c, 5));
        assert!(r.holds);
        assert!(r.a1 > r.bound + 1e-3);
        assert!(((-2.0 * dft(&c, 1, 1 << 16).norm_sqr()) - r.a1).abs() < 1e-5);
    }

    #[test]
    fn l2_bound_constant() {
        assert!((L2_LOWER_BOUND - 0.133_948).abs() < 1e-6);
    }

    #[test]
    fn csv_layout() {
        let csv = Spectrum::of_colouring(&Colouring::triangle(), 3).to_csv();
        let lines: Vec<_> = csv.lines().collect();
        assert_eq!(lines[0], "n,re_fhat,im_fhat,a_n");
        assert_eq!(lines.len(), 5);
        let q = Spectrum::quantum(2).to_csv();
        assert!(q.lines().nth(2).unwrap().starts_with("1,,,"));
    }
}
