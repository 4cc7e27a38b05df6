//! CHSH functional for classical models and the quantum reference.

use std::f64::consts::TAU;

use serde::Serialize;

use crate::circle::Angle;
use crate::correlation::Correlation;

pub use crate::correlation::quantum_correlation;

/// Setting quadruple `(a, a', b, b')`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ChshSettings {
    pub a: Angle,
    pub a_prime: Angle,
    pub b: Angle,
    pub b_prime: Angle,
}

impl ChshSettings {
    pub fn new(a: f64, a_prime: f64, b: f64, b_prime: f64) -> Self {
        ChshSettings {
            a: Angle::new(a),
            a_prime: Angle::new(a_prime),
            b: Angle::new(b),
            b_prime: Angle::new(b_prime),
        }
    }

    pub fn as_array(&self) -> [f64; 4] {
        [
            self.a.radians(),
            self.a_prime.radians(),
            self.b.radians(),
            self.b_prime.radians(),
        ]
    }

    pub fn rotated(&self, by: f64) -> Self {
        let [a, ap, b, bp] = self.as_array();
        ChshSettings::new(a + by, ap + by, b + by, bp + by)
    }
}

/// `S = ρ(a-b) - ρ(a-b') + ρ(a'-b) + ρ(a'-b')`.
pub fn chsh(rho: &impl Correlation, s: &ChshSettings) -> f64 {
    let [a, ap, b, bp] = s.as_array();
    rho.rho(a - b) - rho.rho(a - bp) + rho.rho(ap - b) + rho.rho(ap - bp)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ChshScan {
    pub max_abs_s: f64,
    pub argmax: ChshSettings,
    pub grid_step: f64,
}

/// Largest `|S|` over the grid `{j·step}` with `a` fixed at 0.
///
/// For fixed `a'` the functional splits into a part depending only on `b`
/// and a part depending only on `b'`, so the extremes over `(b, b')` are
/// found by two independent one-dimensional scans. Ties keep the
/// lexicographically smallest `(a', b, b')`.
pub fn chsh_scan(rho: &impl Correlation, grid_step: f64) -> ChshScan {
    assert!(grid_step > 0.0 && grid_step.is_finite(), "grid step must be positive");
    let m = (TAU / grid_step - 1e-9).ceil() as usize;
    let angles: Vec<f64> = (0..m).map(|j| j as f64 * grid_step).collect();
    // ρ at every pairwise difference; on an exact subdivision of the circle this is a function of j - i
    let periodic = ((m as f64) * grid_step - TAU).abs() < 1e-9;
    let table: Vec<f64> = if periodic {
        (0..m).map(|d| rho.rho(TAU * d as f64 / m as f64)).collect()
    } else {
        Vec::new()
    };
    let r = |i: usize, j: usize| -> f64 {
        if periodic {
            table[(i + m - j) % m]
        } else {
            rho.rho(angles[i] - angles[j])
        }
    };

    let mut best = (f64::NEG_INFINITY, 0usize, 0usize, 0usize);
    for ap in 0..m {
        // S = [ρ(-b) + ρ(a'-b)] + [ρ(a'-b') - ρ(-b')]
        let (mut xmax, mut xmin) = ((f64::NEG_INFINITY, 0), (f64::INFINITY, 0));
        let (mut ymax, mut ymin) = ((f64::NEG_INFINITY, 0), (f64::INFINITY, 0));
        for j in 0..m {
            let x = r(0, j) + r(ap, j);
            let y = r(ap, j) - r(0, j);
            if x > xmax.0 {
                xmax = (x, j);
            }
            if x < xmin.0 {
                xmin = (x, j);
            }
            if y > ymax.0 {
                ymax = (y, j);
            }
            if y < ymin.0 {
                ymin = (y, j);
            }
        }
        let hi = ((xmax.0 + ymax.0).abs(), ap, xmax.1, ymax.1);
        let lo = ((xmin.0 + ymin.0).abs(), ap, xmin.1, ymin.1);
        for cand in [hi, lo] {
            if cand.0 > best.0 || (cand.0 == best.0 && (cand.1, cand.2, cand.3) < (best.1, best.2, best.3)) {
                best = cand;
            }
        }
    }
    ChshScan {
        max_abs_s: best.0,
        argmax: ChshSettings::new(0.0, angles[best.1], angles[best.2], angles[best.3]),
        grid_step,
    }
}

/// Exhaustive three-dimensional scan; quadratic cost per `a'`, kept for cross-checking.
pub fn chsh_scan_brute(rho: &impl Correlation, grid_step: f64) -> f64 {
    let m = (TAU / grid_step - 1e-9).ceil() as usize;
    let mut best: f64 = 0.0;
    for ap in 0..m {
        for b in 0..m {
            for bp in 0..m {
                let s = ChshSettings::new(
                    0.0,
                    ap as f64 * grid_step,
                    b as f64 * grid_step,
                    bp as f64 * grid_step,
                );
                best = best.max(chsh(rho, &s).abs());
            }
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circle::Colouring;
    use crate::correlation::{exact_correlation, triangle_wave};
    use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, PI, SQRT_2};

    fn reference() -> ChshSettings {
        ChshSettings::new(0.0, FRAC_PI_2, FRAC_PI_4, 3.0 * FRAC_PI_4)
    }

    #[test]
    fn reference_settings() {
        let tri = exact_correlation(&Colouring::triangle());
        assert!((chsh(&tri, &reference()) + 2.0).abs() < 1e-12);
        assert!((chsh(&quantum_correlation, &reference()) + 2.0 * SQRT_2).abs() < 1e-12);
    }

    #[test]
    fn degenerate_settings() {
        let tri = exact_correlation(&Colouring::new(vec![0.3, 1.9]).unwrap());
        let s = ChshSettings::new(0.4, 0.4, 2.1, 2.1);
        let v = chsh(&tri, &s);
        assert!((v - 2.0 * tri.evaluate(0.4 - 2.1)).abs() < 1e-15);
        assert!(v.abs() <= 2.0);
    }

    #[test]
    fn quantum_values() {
        assert_eq!(quantum_correlation(0.0), -1.0);
        assert_eq!(quantum_correlation(PI), 1.0);
        assert!(quantum_correlation(FRAC_PI_2).abs() < 1e-16);
    }

    #[test]
    fn rotation_invariance() {
        let rho = exact_correlation(&Colouring::new(vec![0.5, 1.0, 1.5, 2.0]).unwrap());
        let s = ChshSettings::new(0.1, 1.3, 2.2, 4.0);
        for by in [0.3, 1.7, 5.5] {
            assert!((chsh(&rho, &s) - chsh(&rho, &s.rotated(by))).abs() < 1e-12);
        }
    }

    #[test]
    fn scan_matches_brute_force() {
        let rho = exact_correlation(&Colouring::new(vec![0.4, 0.9, 2.0, 2.8]).unwrap());
        let step = TAU / 24.0;
        let fast = chsh_scan(&rho, step);
        let brute = chsh_scan_brute(&rho, step);
        assert!((fast.max_abs_s - brute).abs() < 1e-12);
        assert!((chsh(&rho, &fast.argmax).abs() - fast.max_abs_s).abs() < 1e-12);
        // non-dividing step takes the direct-evaluation path
        let odd = chsh_scan(&triangle_wave, 0.7);
        assert!((odd.max_abs_s - chsh_scan_brute(&triangle_wave, 0.7)).abs() < 1e-12);
    }

    #[test]
    fn scan_triangle_and_quantum() {
        let tri = exact_correlation(&Colouring::triangle());
        assert!((chsh_scan(&tri, PI / 180.0).max_abs_s - 2.0).abs() < 1e-9);
        assert!(chsh_scan(&quantum_correlation, PI / 180.0).max_abs_s >= 2.8284 - 1e-3);
    }
}
