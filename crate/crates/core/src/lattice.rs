//! Discrete-angle disk: `N` equally spaced positions, exact integer counting.
//!
//! Serves as a brute-force oracle for the continuous correlation code.

use std::f64::consts::TAU;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::circle::{Colour, Colouring};

/// Half-degree resolution.
pub const DEFAULT_N: usize = 720;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum LatticeError {
    #[error("lattice size {0} must be even and at least 2")]
    BadSize(usize),
    #[error("odd number of switch indices ({0})")]
    OddSwitchCount(usize),
    #[error("switch index {index} outside (0, {half})")]
    OutOfRange { index: usize, half: usize },
    #[error("switch indices must be strictly increasing")]
    NotIncreasing,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "LatticeRepr", into = "LatticeRepr")]
pub struct LatticeColouring {
    n: usize,
    switch_indices: Vec<usize>,
}

#[derive(Serialize, Deserialize)]
struct LatticeRepr {
    #[serde(rename = "N")]
    n: usize,
    switch_indices: Vec<usize>,
}

impl TryFrom<LatticeRepr> for LatticeColouring {
    type Error = LatticeError;
    fn try_from(r: LatticeRepr) -> Result<Self, Self::Error> {
        LatticeColouring::new(r.n, r.switch_indices)
    }
}

impl From<LatticeColouring> for LatticeRepr {
    fn from(l: LatticeColouring) -> Self {
        LatticeRepr {
            n: l.n,
            switch_indices: l.switch_indices,
        }
    }
}

impl LatticeColouring {
    pub fn new(n: usize, switch_indices: Vec<usize>) -> Result<Self, LatticeError> {
        if n < 2 || !n.is_multiple_of(2) {
            return Err(LatticeError::BadSize(n));
        }
        if !switch_indices.len().is_multiple_of(2) {
            return Err(LatticeError::OddSwitchCount(switch_indices.len()));
        }
        let half = n / 2;
        for &index in &switch_indices {
            if index == 0 || index >= half {
                return Err(LatticeError::OutOfRange { index, half });
            }
        }
        if switch_indices.windows(2).any(|w| w[0] >= w[1]) {
            return Err(LatticeError::NotIncreasing);
        }
        Ok(LatticeColouring { n, switch_indices })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn switch_indices(&self) -> &[usize] {
        &self.switch_indices
    }

    /// Colour of each lattice cell `[i, i+1)`.
    pub fn colours(&self) -> Vec<Colour> {
        let half = self.n / 2;
        let mut out = vec![0 as Colour; self.n];
        let mut colour: Colour = 1;
        let mut next = 0;
        for i in 0..half {
            while next < self.switch_indices.len() && self.switch_indices[next] == i {
                colour = -colour;
                next += 1;
            }
            out[i] = colour;
            out[i + half] = -colour;
        }
        out
    }
}

/// Mismatch counts `#{i : colour[i] ≠ colour[i+d mod N]}` for every displacement `d`.
pub fn mismatch_counts(lc: &LatticeColouring) -> Vec<u64> {
    let col = lc.colours();
    let n = lc.n;
    (0..n)
        .into_par_iter()
        .map(|d| (0..n).filter(|&i| col[i] != col[(i + d) % n]).count() as u64)
        .collect()
}

/// `ρ[d] = 2·mismatch[d]/N - 1`, an exact rational with denominator `N` rounded once.
pub fn lattice_correlation(lc: &LatticeColouring) -> Vec<f64> {
    let n = lc.n as f64;
    mismatch_counts(lc)
        .into_iter()
        .map(|m| (2 * m) as f64 / n - 1.0)
        .collect()
}

/// Place switch `j` at angle `2πj/N`.
pub fn lift_to_continuous(lc: &LatticeColouring) -> Colouring {
    let n = lc.n as f64;
    Colouring::new(
        lc.switch_indices
            .iter()
            .map(|&j| TAU * j as f64 / n)
            .collect(),
    )
    .expect("lattice indices lie strictly inside (0, N/2)")
}

/// CSV export with header `d,rho`.
pub fn lattice_csv(lc: &LatticeColouring) -> String {
    let mut out = String::from("d,rho\n");
    for (d, r) in lattice_correlation(lc).into_iter().enumerate() {
        out.push_str(&format!("{d},{r:.16e}\n"));
    }
    out
}
