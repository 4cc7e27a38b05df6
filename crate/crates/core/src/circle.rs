//! Colourings of the unit circle and circle arithmetic.
//!
//! A [`Colouring`] is the hidden variable of the spinning disk model: the
//! half circle `[0, π)` is split at an even number of switch angles into
//! segments coloured black (`+1`), white (`-1`), ..., black, and the other
//! half is coloured in the complementary way so that `f(x + π) = -f(x)`.

use std::f64::consts::{PI, TAU};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Two switch angles closer than this are treated as equal.
pub const ANGLE_TOL: f64 = 1e-12;

/// Weight below which a mixture component is considered degenerate.
pub const WEIGHT_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CircleError {
    #[error("odd number of switch angles ({0}); a colouring needs an even count")]
    OddSwitchCount(usize),
    #[error("switch angle {0} is outside the open interval (0, pi)")]
    OutOfRange(f64),
    #[error("switch angles {0} and {1} coincide")]
    Duplicate(f64, f64),
    #[error("mixture has no components")]
    EmptyMixture,
    #[error("mixture weight {0} is not a positive finite number")]
    BadWeight(f64),
    #[error("mixture weights sum to {0}, expected 1")]
    WeightSum(f64),
}

/// Reduce a real angle into `[0, 2π)`.
#[inline]
pub fn reduce(x: f64) -> f64 {
    let r = x.rem_euclid(TAU);
    // rem_euclid can round up to exactly TAU for tiny negative inputs
    if r >= TAU {
        0.0
    } else {
        r
    }
}

/// An angle in radians, always held in the canonical range `[0, 2π)`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Default, Serialize, Deserialize)]
#[serde(from = "f64", into = "f64")]
pub struct Angle(f64);

impl Angle {
    pub const ZERO: Angle = Angle(0.0);
    pub const HALF_TURN: Angle = Angle(PI);

    pub fn new(radians: f64) -> Self {
        Angle(reduce(radians))
    }

    pub fn radians(self) -> f64 {
        self.0
    }

    /// Total order used for map keys; angles are never NaN after reduction of finite input.
    pub fn total_cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.0.total_cmp(&other.0)
    }
}

impl From<f64> for Angle {
    fn from(x: f64) -> Self {
        Angle::new(x)
    }
}

impl From<Angle> for f64 {
    fn from(a: Angle) -> f64 {
        a.0
    }
}

impl std::ops::Add for Angle {
    type Output = Angle;
    fn add(self, rhs: Angle) -> Angle {
        Angle::new(self.0 + rhs.0)
    }
}

impl std::ops::Sub for Angle {
    type Output = Angle;
    fn sub(self, rhs: Angle) -> Angle {
        Angle::new(self.0 - rhs.0)
    }
}

impl fmt::Display for Angle {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// Outcome colour: black is `+1`, white is `-1`.
pub type Colour = i8;

/// Parity of the number of switch points in an arc.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Parity {
    Even,
    Odd,
}

/// An antiperiodic two-colouring of the circle with finitely many switches.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "ColouringRepr", into = "ColouringRepr")]
pub struct Colouring {
    switches: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct ColouringRepr {
    theta: Vec<f64>,
}

impl TryFrom<ColouringRepr> for Colouring {
    type Error = CircleError;
    fn try_from(r: ColouringRepr) -> Result<Self, Self::Error> {
        Colouring::new(r.theta)
    }
}

impl From<Colouring> for ColouringRepr {
    fn from(c: Colouring) -> Self {
        ColouringRepr { theta: c.switches }
    }
}

impl Colouring {
    /// Validate switch angles in `(0, π)`. The input may be in any order.
    pub fn new(mut switch_angles: Vec<f64>) -> Result<Self, CircleError> {
        if !switch_angles.len().is_multiple_of(2) {
            return Err(CircleError::OddSwitchCount(switch_angles.len()));
        }
        for &s in &switch_angles {
            if !(s > 0.0 && s < PI) {
                return Err(CircleError::OutOfRange(s));
            }
        }
        switch_angles.sort_by(f64::total_cmp);
        for w in switch_angles.windows(2) {
            if w[1] - w[0] <= ANGLE_TOL {
                return Err(CircleError::Duplicate(w[0], w[1]));
            }
        }
        Ok(Colouring {
            switches: switch_angles,
        })
    }

    /// The one-segment disk: black on `(0, π)`, white on `(π, 2π)`.
    pub fn triangle() -> Self {
        Colouring {
            switches: Vec::new(),
        }
    }

    /// Number of interior switches `k` on the half circle.
    pub fn k(&self) -> usize {
        self.switches.len()
    }

    pub fn switches(&self) -> &[f64] {
        &self.switches
    }

    /// All `2k + 2` points on `[0, 2π)` where the colour changes, sorted.
    pub fn full_switch_set(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(2 * self.switches.len() + 2);
        out.push(0.0);
        out.extend_from_slice(&self.switches);
        out.push(PI);
        out.extend(self.switches.iter().map(|s| s + PI));
        out
    }

    /// Full switch set paired with the signed jump `f(s+) - f(s-)` at each point.
    pub fn jumps(&self) -> Vec<(f64, f64)> {
        // colour just right of the i-th point of the full set alternates +1, -1, ...
        // starting with black at 0, because the colour changes at every point
        self.full_switch_set()
            .into_iter()
            .enumerate()
            .map(|(i, s)| (s, if i % 2 == 0 { 2.0 } else { -2.0 }))
            .collect()
    }

    /// Colour at `x`, right-continuous at switch points.
    pub fn colour_at(&self, x: f64) -> Colour {
        let x = reduce(x);
        if x >= PI {
            -self.half_colour(x - PI)
        } else {
            self.half_colour(x)
        }
    }

    fn half_colour(&self, x: f64) -> Colour {
        let passed = self.switches.partition_point(|&s| s <= x);
        if passed % 2 == 0 {
            1
        } else {
            -1
        }
    }

    /// Parity of the number of switch points in the arc `(x, x + γ]`.
    pub fn switch_parity(&self, x: f64, gamma: f64) -> Parity {
        let x = reduce(x);
        let count = self
            .full_switch_set()
            .into_iter()
            .filter(|&s| {
                let d = reduce(s - x);
                d > 0.0 && d <= gamma
            })
            .count();
        if count % 2 == 0 {
            Parity::Even
        } else {
            Parity::Odd
        }
    }

    /// Lengths and colours of the `2k + 2` segments of the full circle, starting at 0.
    pub fn segments(&self) -> Vec<(f64, f64, Colour)> {
        let pts = self.full_switch_set();
        (0..pts.len())
            .map(|i| {
                let lo = pts[i];
                let hi = if i + 1 < pts.len() { pts[i + 1] } else { TAU };
                (lo, hi, if i % 2 == 0 { 1 } else { -1 })
            })
            .collect()
    }

    /// Build a colouring from arbitrary colour toggles on `[0, π]`.
    ///
    /// Toggles that coincide within `tol` cancel, toggles at either end of
    /// the half circle are absorbed, and an odd toggle count is handled by
    /// rotating a toggle onto 0. The result has the same correlation
    /// function as the relaxed colouring up to measure `O(tol)`.
    pub fn canonical_from_toggles(toggles: &[f64], tol: f64) -> Colouring {
        let mut pts: Vec<f64> = toggles.iter().map(|t| t.clamp(0.0, PI)).collect();
        pts.sort_by(f64::total_cmp);

        let mut kept: Vec<f64> = Vec::with_capacity(pts.len());
        for p in pts {
            if p >= PI - tol {
                continue;
            }
            match kept.last() {
                Some(&q) if p - q < tol => {
                    kept.pop();
                }
                _ => kept.push(p),
            }
        }
        // a toggle at 0 only flips the overall sign, which leaves the correlation unchanged
        if kept.first().is_some_and(|&p| p < tol) {
            kept.remove(0);
        }

        if kept.len() % 2 == 1 {
            let shift = kept[0];
            kept = kept[1..].iter().map(|p| p - shift).collect();
        }
        kept.retain(|&p| p > 0.0 && p < PI);
        // remaining gaps are all >= tol; enforce the constructor's strict tolerance as well
        let mut out: Vec<f64> = Vec::with_capacity(kept.len());
        for p in kept {
            match out.last() {
                Some(&q) if p - q <= ANGLE_TOL => {
                    out.pop();
                }
                _ => out.push(p),
            }
        }
        if out.len() % 2 == 1 {
            out.pop();
        }
        Colouring { switches: out }
    }
}

/// A finite convex combination of colourings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "MixtureRepr", into = "MixtureRepr")]
pub struct Mixture {
    components: Vec<(f64, Colouring)>,
}

#[derive(Serialize, Deserialize)]
struct MixtureRepr {
    components: Vec<ComponentRepr>,
}

#[derive(Serialize, Deserialize)]
struct ComponentRepr {
    w: f64,
    theta: Vec<f64>,
}

impl TryFrom<MixtureRepr> for Mixture {
    type Error = CircleError;
    fn try_from(r: MixtureRepr) -> Result<Self, Self::Error> {
        let comps = r
            .components
            .into_iter()
            .map(|c| Colouring::new(c.theta).map(|col| (c.w, col)))
            .collect::<Result<Vec<_>, _>>()?;
        Mixture::new(comps)
    }
}

impl From<Mixture> for MixtureRepr {
    fn from(m: Mixture) -> Self {
        MixtureRepr {
            components: m
                .components
                .into_iter()
                .map(|(w, c)| ComponentRepr {
                    w,
                    theta: c.switches,
                })
                .collect(),
        }
    }
}

impl Mixture {
    pub fn new(components: Vec<(f64, Colouring)>) -> Result<Self, CircleError> {
        if components.is_empty() {
            return Err(CircleError::EmptyMixture);
        }
        let mut total = 0.0;
        for (w, _) in &components {
            if !w.is_finite() || *w < WEIGHT_TOL || *w > 1.0 + WEIGHT_TOL {
                return Err(CircleError::BadWeight(*w));
            }
            total += w;
        }
        if (total - 1.0).abs() > WEIGHT_TOL {
            return Err(CircleError::WeightSum(total));
        }
        Ok(Mixture { components })
    }

    pub fn single(c: Colouring) -> Self {
        Mixture {
            components: vec![(1.0, c)],
        }
    }

    pub fn components(&self) -> &[(f64, Colouring)] {
        &self.components
    }

    pub fn len(&self) -> usize {
        self.components.len()
    }

    pub fn is_empty(&self) -> bool {
        self.components.is_empty()
    }

    /// Index of the component selected by a uniform draw `u ∈ [0, 1)`.
    pub fn select(&self, u: f64) -> &Colouring {
        let mut acc = 0.0;
        for (w, c) in &self.components {
            acc += w;
            if u < acc {
                return c;
            }
        }
        &self.components[self.components.len() - 1].1
    }
}

impl From<Colouring> for Mixture {
    fn from(c: Colouring) -> Self {
        Mixture::single(c)
    }
}

/// A model file holds either a single colouring or a mixture.
#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(untagged)]
pub enum ModelFile {
    Mixture(Mixture),
    Colouring(Colouring),
}

impl ModelFile {
    pub fn into_mixture(self) -> Mixture {
        match self {
            ModelFile::Mixture(m) => m,
            ModelFile::Colouring(c) => Mixture::single(c),
        }
    }
}
