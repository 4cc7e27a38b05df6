#![allow(dead_code)]

use std::f64::consts::{PI, TAU};

use proptest::prelude::*;
use rand::Rng;
use spindisk::circle::{Colouring, Mixture};

pub fn random_colouring<R: Rng>(rng: &mut R, k: usize) -> Colouring {
    loop {
        let theta: Vec<f64> = (0..k).map(|_| rng.random::<f64>() * PI).collect();
        if let Ok(c) = Colouring::new(theta) {
            return c;
        }
    }
}

/// One to three components with switch counts drawn from {0, 2, 4, 6}.
pub fn random_mixture<R: Rng>(rng: &mut R) -> Mixture {
    let m = rng.random_range(1..=3);
    let raw: Vec<f64> = (0..m).map(|_| 0.05 + rng.random::<f64>()).collect();
    let total: f64 = raw.iter().sum();
    let mut weights: Vec<f64> = raw.iter().map(|w| w / total).collect();
    let head: f64 = weights[..m - 1].iter().sum();
    weights[m - 1] = 1.0 - head;
    let comps = weights
        .into_iter()
        .map(|w| {
            let k = 2 * rng.random_range(0..=3);
            (w, random_colouring(rng, k))
        })
        .collect();
    Mixture::new(comps).unwrap()
}

pub fn colouring_strategy(max_half: usize) -> impl Strategy<Value = Colouring> {
    (0..=max_half)
        .prop_flat_map(|h| prop::collection::vec(0.001..PI - 0.001, 2 * h))
        .prop_filter_map("degenerate switches", |t| Colouring::new(t).ok())
}

pub fn mixture_strategy() -> impl Strategy<Value = Mixture> {
    prop::collection::vec((0.05..1.0f64, colouring_strategy(3)), 1..4).prop_map(|parts| {
        let total: f64 = parts.iter().map(|p| p.0).sum();
        let n = parts.len();
        let mut acc = 0.0;
        let comps = parts
            .into_iter()
            .enumerate()
            .map(|(i, (w, c))| {
                let w = if i + 1 == n { 1.0 - acc } else { w / total };
                acc += w;
                (w, c)
            })
            .collect();
        Mixture::new(comps).unwrap()
    })
}

/// Midpoint rule for `(1/2π)∫ f` on a uniform grid.
pub fn mean_on_circle(f: impl Fn(f64) -> f64, n: usize) -> f64 {
    let h = TAU / n as f64;
    (0..n).map(|i| f((i as f64 + 0.5) * h)).sum::<f64>() / n as f64
}
