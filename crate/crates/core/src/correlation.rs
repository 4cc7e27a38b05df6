//! Exact correlation functions of colourings and mixtures.
//!
//! For a colouring `f`, `ρ(γ) = 2·m(γ)/2π - 1` where `m(γ)` is the measure
//! of `{x : f(x) ≠ f(x + γ)}`. This is piecewise linear in `γ` with kinks only
//! at pairwise differences of switch points, so it is stored exactly as a
//! list of breakpoints with values.

use std::f64::consts::{PI, TAU};

use rayon::prelude::*;

use crate::circle::{reduce, Colouring, Mixture, ANGLE_TOL};

/// Anything that can be evaluated as a correlation function of the angle difference.
pub trait Correlation: Sync {
    fn rho(&self, gamma: f64) -> f64;
}

impl<F: Fn(f64) -> f64 + Sync> Correlation for F {
    fn rho(&self, gamma: f64) -> f64 {
        self(gamma)
    }
}

/// Linear interpolation between breakpoints on `[0, 2π)`, wrapping at `2π`.
#[derive(Debug, Clone, PartialEq)]
pub struct PiecewiseLinearCorrelation {
    breakpoints: Vec<f64>,
    values: Vec<f64>,
}

/// The quantum singlet correlation `-cos γ`.
pub fn quantum_correlation(gamma: f64) -> f64 {
    -gamma.cos()
}

/// Triangle wave `2γ/π - 1` on `[0, π]`, mirrored on `[π, 2π]`.
pub fn triangle_wave(gamma: f64) -> f64 {
    let g = reduce(gamma);
    let g = if g > PI { TAU - g } else { g };
    2.0 * g / PI - 1.0
}

fn sorted_dedup(mut xs: Vec<f64>) -> Vec<f64> {
    xs.sort_by(f64::total_cmp);
    let mut out: Vec<f64> = Vec::with_capacity(xs.len());
    for x in xs {
        if x >= TAU - ANGLE_TOL {
            continue;
        }
        match out.last() {
            Some(&y) if x - y <= ANGLE_TOL => {}
            _ => out.push(x),
        }
    }
    if out.first() != Some(&0.0) {
        if out.first().is_some_and(|&x| x <= ANGLE_TOL) {
            out[0] = 0.0;
        } else {
            out.insert(0, 0.0);
        }
    }
    out
}

/// Autocorrelation `(1/2π)∫ f(x) f(x+γ) dx` by interval overlap.
///
/// The circle is cut at the switch points of `f` and of `f(· + γ)`; both are
/// constant on every resulting interval, so the integral is a finite sum.
pub fn overlap_autocorrelation(c: &Colouring, gamma: f64) -> f64 {
    let pts = c.full_switch_set();
    let mut cuts: Vec<f64> = Vec::with_capacity(2 * pts.len() + 1);
    cuts.extend_from_slice(&pts);
    cuts.extend(pts.iter().map(|&s| reduce(s - gamma)));
    cuts.sort_by(f64::total_cmp);
    cuts.push(TAU);
    let mut acc = 0.0;
    for w in cuts.windows(2) {
        let len = w[1] - w[0];
        if len <= 0.0 {
            continue;
        }
        let mid = 0.5 * (w[0] + w[1]);
        let prod = c.colour_at(mid) as f64 * c.colour_at(mid + gamma) as f64;
        acc += prod * len;
    }
    acc / TAU
}

/// Exact correlation function of a single colouring.
pub fn exact_correlation(c: &Colouring) -> PiecewiseLinearCorrelation {
    let pts = c.full_switch_set();
    let mut diffs = Vec::with_capacity(pts.len() * pts.len());
    for &a in &pts {
        for &b in &pts {
            diffs.push(reduce(b - a));
        }
    }
    let mut breakpoints = sorted_dedup(diffs);
    for g in breakpoints.iter_mut() {
        if (*g - PI).abs() <= ANGLE_TOL {
            *g = PI;
        }
    }
    let values = breakpoints
        .iter()
        .map(|&g| {
            if g == 0.0 {
                -1.0
            } else if g == PI {
                1.0
            } else {
                (-overlap_autocorrelation(c, g)).clamp(-1.0, 1.0)
            }
        })
        .collect();
    PiecewiseLinearCorrelation {
        breakpoints,
        values,
    }
}

/// Exact correlation of a mixture: the weighted sum of the component curves.
pub fn mixture_correlation(m: &Mixture) -> PiecewiseLinearCorrelation {
    let parts: Vec<(f64, PiecewiseLinearCorrelation)> = m
        .components()
        .par_iter()
        .map(|(w, c)| (*w, exact_correlation(c)))
        .collect();
    PiecewiseLinearCorrelation::weighted_sum(&parts)
}

impl PiecewiseLinearCorrelation {
    /// Build from raw breakpoints and values. Breakpoints must be sorted, start at 0, and lie in `[0, 2π)`.
    pub fn from_parts(breakpoints: Vec<f64>, values: Vec<f64>) -> Self {
        assert_eq!(breakpoints.len(), values.len());
        assert!(!breakpoints.is_empty() && breakpoints[0] == 0.0);
        assert!(breakpoints.windows(2).all(|w| w[0] < w[1]));
        assert!(*breakpoints.last().unwrap() < TAU);
        PiecewiseLinearCorrelation {
            breakpoints,
            values,
        }
    }

    /// Piecewise-linear interpolant of `f` at `n` equally spaced points on `[0, 2π)`.
    pub fn sampled(n: usize, f: impl Fn(f64) -> f64) -> Self {
        let breakpoints: Vec<f64> = (0..n).map(|i| TAU * i as f64 / n as f64).collect();
        let values = breakpoints.iter().map(|&g| f(g)).collect();
        PiecewiseLinearCorrelation {
            breakpoints,
            values,
        }
    }

    pub fn breakpoints(&self) -> &[f64] {
        &self.breakpoints
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Linear pieces as `(start, end, value at start, value at end)`.
    pub fn pieces(&self) -> impl Iterator<Item = (f64, f64, f64, f64)> + '_ {
        let n = self.breakpoints.len();
        (0..n).map(move |i| {
            let (g1, v1) = if i + 1 < n {
                (self.breakpoints[i + 1], self.values[i + 1])
            } else {
                (TAU, self.values[0])
            };
            (self.breakpoints[i], g1, self.values[i], v1)
        })
    }

    pub fn evaluate(&self, gamma: f64) -> f64 {
        let g = reduce(gamma);
        let i = self.breakpoints.partition_point(|&b| b <= g) - 1;
        let (g0, v0) = (self.breakpoints[i], self.values[i]);
        let (g1, v1) = if i + 1 < self.breakpoints.len() {
            (self.breakpoints[i + 1], self.values[i + 1])
        } else {
            (TAU, self.values[0])
        };
        let t = (g - g0) / (g1 - g0);
        (v0 + t * (v1 - v0)).clamp(-1.0, 1.0)
    }

    /// `Σ wᵢ ρᵢ` on the union of the component breakpoints.
    pub fn weighted_sum(parts: &[(f64, PiecewiseLinearCorrelation)]) -> Self {
        let all: Vec<f64> = parts
            .iter()
            .flat_map(|(_, p)| p.breakpoints.iter().copied())
            .collect();
        let breakpoints = sorted_dedup(all);
        let values = breakpoints
            .iter()
            .map(|&g| parts.iter().map(|(w, p)| w * p.evaluate(g)).sum())
            .collect();
        PiecewiseLinearCorrelation {
            breakpoints,
            values,
        }
    }

    /// Slopes of every linear piece.
    pub fn slopes(&self) -> Vec<f64> {
        self.pieces()
            .map(|(g0, g1, v0, v1)| (v1 - v0) / (g1 - g0))
            .collect()
    }

    /// `(1/2π)∫ ρ σ` for two piecewise-linear functions, exact.
    pub fn inner(&self, other: &PiecewiseLinearCorrelation) -> f64 {
        let mut cuts: Vec<f64> = self
            .breakpoints
            .iter()
            .chain(other.breakpoints.iter())
            .copied()
            .collect();
        cuts.sort_by(f64::total_cmp);
        cuts.dedup();
        cuts.push(TAU);
        let mut acc = 0.0;
        for w in cuts.windows(2) {
            let (a, b) = (w[0], w[1]);
            let h = b - a;
            if h <= 0.0 {
                continue;
            }
            let m = 0.5 * (a + b);
            // product of two linear functions is quadratic: Simpson is exact
            let fa = self.value_right_of(a) * other.value_right_of(a);
            let fm = self.evaluate(m) * other.evaluate(m);
            let fb = self.value_left_of(b) * other.value_left_of(b);
            acc += h / 6.0 * (fa + 4.0 * fm + fb);
        }
        acc / TAU
    }

    fn value_right_of(&self, g: f64) -> f64 {
        self.evaluate(g)
    }

    fn value_left_of(&self, g: f64) -> f64 {
        // continuous function, so the left limit is the value itself
        if g >= TAU {
            self.values[0]
        } else {
            self.evaluate(g)
        }
    }

    /// `(1/2π)∫ ρ(γ) cos(nγ) dγ`, exact per piece. For `n = 0` this is the mean.
    pub fn cos_moment(&self, n: u32) -> f64 {
        let mut acc = 0.0;
        if n == 0 {
            for (g0, g1, v0, v1) in self.pieces() {
                acc += 0.5 * (v0 + v1) * (g1 - g0);
            }
            return acc / TAU;
        }
        let nf = n as f64;
        for (g0, g1, v0, v1) in self.pieces() {
            let h = g1 - g0;
            let s = (v1 - v0) / h;
            let (s0, c0) = (nf * g0).sin_cos();
            let (s1, c1) = (nf * g1).sin_cos();
            acc += v0 * (s1 - s0) / nf + s * (h * s1 / nf + (c1 - c0) / (nf * nf));
        }
        acc / TAU
    }

    /// Cosine-series coefficients `a₀ … a_{n_max}` with `ρ = a₀ + Σ aₙ cos nγ`.
    pub fn cosine_coefficients(&self, n_max: usize) -> Vec<f64> {
        (0..=n_max)
            .map(|n| {
                let m = self.cos_moment(n as u32);
                if n == 0 {
                    m
                } else {
                    2.0 * m
                }
            })
            .collect()
    }

    /// Squared normalised L2 distance `(1/2π)∫(ρ + cos γ)² dγ`.
    pub fn l2_distance_squared_to_cosine(&self) -> f64 {
        let mut acc = 0.0;
        for (g0, g1, v0, v1) in self.pieces() {
            let h = g1 - g0;
            let s = (v1 - v0) / h;
            let (sin0, cos0) = g0.sin_cos();
            let (sin1, cos1) = g1.sin_cos();
            let lin2 = v0 * v0 * h + v0 * s * h * h + s * s * h * h * h / 3.0;
            let cross = v0 * (sin1 - sin0) + s * (h * sin1 + cos1 - cos0);
            let cos2 = 0.5 * h + 0.25 * ((2.0 * g1).sin() - (2.0 * g0).sin());
            acc += lin2 + 2.0 * cross + cos2;
        }
        (acc / TAU).max(0.0)
    }

    pub fn l2_distance_to_cosine(&self) -> f64 {
        self.l2_distance_squared_to_cosine().sqrt()
    }

    /// `max_γ |ρ(γ) + cos γ|`, using the closed-form stationary points of each piece.
    pub fn sup_distance_to_cosine(&self) -> f64 {
        let mut best: f64 = 0.0;
        for (g0, g1, v0, v1) in self.pieces() {
            let s = (v1 - v0) / (g1 - g0);
            let err = |g: f64| (v0 + s * (g - g0) + g.cos()).abs();
            best = best.max(err(g0)).max(err(g1));
            if s.abs() <= 1.0 {
                // stationary points solve sin γ = s
                let base = s.asin();
                for cand in [base, PI - base, base + TAU] {
                    if cand > g0 && cand < g1 {
                        best = best.max(err(cand));
                    }
                }
            }
        }
        best
    }

    /// Sample on `n_points` equally spaced points covering `[0, 2π]` inclusive.
    pub fn sample_grid(&self, n_points: usize) -> Vec<(f64, f64)> {
        grid(n_points)
            .into_iter()
            .map(|g| (g, self.evaluate(g)))
            .collect()
    }

    /// Check the invariants every model correlation satisfies.
    pub fn check_invariants(&self, grid_points: usize, tol: f64) -> Result<(), String> {
        if (self.evaluate(0.0) + 1.0).abs() > tol {
            return Err(format!("rho(0) = {}", self.evaluate(0.0)));
        }
        if (self.evaluate(PI) - 1.0).abs() > tol {
            return Err(format!("rho(pi) = {}", self.evaluate(PI)));
        }
        if let Some(v) = self.values.iter().find(|v| v.abs() > 1.0 + tol) {
            return Err(format!("value {v} outside [-1, 1]"));
        }
        for g in grid(grid_points) {
            let r = self.evaluate(g);
            let even = self.evaluate(TAU - g);
            let anti = self.evaluate(g + PI);
            if (r - even).abs() > tol {
                return Err(format!("evenness fails at {g}: {r} vs {even}"));
            }
            if (r + anti).abs() > tol {
                return Err(format!("antiperiodicity fails at {g}: {r} vs {anti}"));
            }
        }
        Ok(())
    }
}

impl Correlation for PiecewiseLinearCorrelation {
    fn rho(&self, gamma: f64) -> f64 {
        self.evaluate(gamma)
    }
}

/// `n` equally spaced points from 0 to 2π inclusive.
pub fn grid(n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![0.0],
        _ => (0..n).map(|i| TAU * i as f64 / (n - 1) as f64).collect(),
    }
}

/// CSV export with header `gamma,rho`.
pub fn curve_csv(pl: &PiecewiseLinearCorrelation, n_points: usize) -> String {
    let mut out = String::from("gamma,rho\n");
    for (g, r) in pl.sample_grid(n_points) {
        out.push_str(&format!("{g:.16e},{r:.16e}\n"));
    }
    out
}
