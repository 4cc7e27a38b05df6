//! Search for the classical correlation function closest to `-cos γ`.
//!
//! Single colourings with `k` switches are searched with a multi-start
//! Nelder–Mead simplex in an unconstrained parametrisation. Mixtures are
//! built by Frank–Wolfe over the convex hull of single-colouring curves,
//! with an exact line search for the squared L2 objective.

use std::f64::consts::{PI, TAU};

use rand::Rng;
use rayon::prelude::*;
use serde::ser::SerializeStruct;
use serde::Serialize;
use thiserror::Error;

use crate::circle::{Colouring, Mixture, WEIGHT_TOL};
use crate::correlation::{exact_correlation, mixture_correlation, PiecewiseLinearCorrelation};
use crate::montecarlo::stream_rng;

/// Toggles closer than this are merged when mapping search points to colourings.
const COLLAPSE_TOL: f64 = 1e-10;

/// Resampling cap for random feasible starts.
const START_RETRIES: usize = 64;

/// Minimum gap between sampled start angles.
const START_GAP: f64 = 1e-9;

/// Slope tolerance for the monotonicity filter.
const MONOTONE_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum OptimizeError {
    #[error("switch count {0} must be even")]
    OddK(usize),
    #[error("at least one start is required")]
    NoStarts,
    #[error("could not draw a non-degenerate start for k = {k} after {retries} attempts")]
    InfeasibleStart { k: usize, retries: usize },
    #[error("none of the {starts} starts for k = {k} has a monotone correlation")]
    NoFeasiblePoint { k: usize, starts: usize },
    #[error("mixture pool is empty")]
    EmptyPool,
    #[error("mixture optimisation supports only the L2 metric")]
    NotL2,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Metric {
    L2,
    #[serde(rename = "sup")]
    Sup,
}

impl Metric {
    pub fn of(self, pl: &PiecewiseLinearCorrelation) -> f64 {
        match self {
            Metric::L2 => pl.l2_distance_to_cosine(),
            Metric::Sup => pl.sup_distance_to_cosine(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Constraint {
    None,
    Monotone,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SearchConfig {
    pub n_starts: usize,
    pub seed: u64,
    /// Simplex diameter at which a local search stops.
    pub tol: f64,
    pub max_iter: usize,
    /// Initial simplex edge in the unconstrained coordinates.
    pub initial_step: f64,
}

impl Default for SearchConfig {
    fn default() -> Self {
        SearchConfig {
            n_starts: 32,
            seed: 0,
            tol: 1e-9,
            max_iter: 2000,
            initial_step: 0.5,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OptimizationResult {
    pub best_model: Mixture,
    pub distance: f64,
    pub metric: Metric,
    /// `(iteration, best distance so far)`.
    pub trace: Vec<(usize, f64)>,
    pub constraint: Constraint,
    /// Monotone search only: how many starts satisfied the constraint.
    pub feasible_starts: Option<usize>,
    /// Frank–Wolfe only: `(iteration, duality gap estimate)`.
    pub duality_gaps: Vec<(usize, f64)>,
}

impl Serialize for OptimizationResult {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        let mut st = s.serialize_struct("OptimizationResult", 7)?;
        st.serialize_field("metric", &self.metric)?;
        st.serialize_field("distance", &self.distance)?;
        st.serialize_field("model", &self.best_model)?;
        st.serialize_field("trace", &self.trace)?;
        st.serialize_field("constraint", &self.constraint)?;
        if let Some(n) = self.feasible_starts {
            st.serialize_field("feasible_starts", &n)?;
        }
        if !self.duality_gaps.is_empty() {
            st.serialize_field("duality_gaps", &self.duality_gaps)?;
        }
        st.end()
    }
}

/// Outcome of one local search.
#[derive(Debug, Clone, PartialEq)]
pub struct LocalMinimum {
    pub x: Vec<f64>,
    pub value: f64,
    pub iterations: usize,
}

/// Nelder–Mead simplex minimisation with the standard coefficients.
///
/// Stops when every vertex is within `tol` of the best one or after `max_iter` iterations.
pub fn nelder_mead(
    f: impl Fn(&[f64]) -> f64,
    x0: &[f64],
    step: f64,
    tol: f64,
    max_iter: usize,
) -> LocalMinimum {
    let n = x0.len();
    if n == 0 {
        return LocalMinimum {
            x: Vec::new(),
            value: f(x0),
            iterations: 0,
        };
    }
    let (alpha, gamma, rho, sigma) = (1.0, 2.0, 0.5, 0.5);
    let mut simplex: Vec<(Vec<f64>, f64)> = Vec::with_capacity(n + 1);
    simplex.push((x0.to_vec(), f(x0)));
    for i in 0..n {
        let mut x = x0.to_vec();
        x[i] += step;
        let fx = f(&x);
        simplex.push((x, fx));
    }
    let order = |s: &mut Vec<(Vec<f64>, f64)>| s.sort_by(|a, b| a.1.total_cmp(&b.1));
    let point = |c: &[f64], w: &[f64], t: f64| -> Vec<f64> {
        c.iter().zip(w).map(|(ci, wi)| ci + t * (wi - ci)).collect()
    };

    let mut iterations = 0;
    order(&mut simplex);
    while iterations < max_iter {
        let diameter = simplex[1..]
            .iter()
            .map(|(x, _)| {
                x.iter()
                    .zip(&simplex[0].0)
                    .map(|(a, b)| (a - b).abs())
                    .fold(0.0, f64::max)
            })
            .fold(0.0, f64::max);
        if diameter < tol {
            break;
        }
        iterations += 1;

        let mut centroid = vec![0.0; n];
        for (x, _) in &simplex[..n] {
            for (c, xi) in centroid.iter_mut().zip(x) {
                *c += xi / n as f64;
            }
        }
        let worst = simplex[n].clone();
        let xr = point(&centroid, &worst.0, -alpha);
        let fr = f(&xr);
        if fr < simplex[0].1 {
            let xe = point(&centroid, &worst.0, -gamma);
            let fe = f(&xe);
            simplex[n] = if fe < fr { (xe, fe) } else { (xr, fr) };
        } else if fr < simplex[n - 1].1 {
            simplex[n] = (xr, fr);
        } else {
            let (xc, fc) = if fr < worst.1 {
                let xc = point(&centroid, &xr, rho);
                let fc = f(&xc);
                (xc, fc)
            } else {
                let xc = point(&centroid, &worst.0, rho);
                let fc = f(&xc);
                (xc, fc)
            };
            if fc < worst.1.min(fr) {
                simplex[n] = (xc, fc);
            } else {
                let best = simplex[0].0.clone();
                for v in simplex.iter_mut().skip(1) {
                    let x = point(&best, &v.0, sigma);
                    let fx = f(&x);
                    *v = (x, fx);
                }
            }
        }
        order(&mut simplex);
    }
    let (x, value) = simplex.swap_remove(0);
    LocalMinimum {
        x,
        value,
        iterations,
    }
}

/// Unconstrained coordinates to ordered switch angles: `θ = sort(π·σ(z))`.
pub fn thetas_from_unconstrained(z: &[f64]) -> Vec<f64> {
    let mut t: Vec<f64> = z.iter().map(|&zi| PI / (1.0 + (-zi).exp())).collect();
    t.sort_by(f64::total_cmp);
    t
}

pub fn unconstrained_from_thetas(theta: &[f64]) -> Vec<f64> {
    theta.iter().map(|&t| (t / (PI - t)).ln()).collect()
}

/// The valid colouring a search point stands for.
pub fn colouring_from_unconstrained(z: &[f64]) -> Colouring {
    Colouring::canonical_from_toggles(&thetas_from_unconstrained(z), COLLAPSE_TOL)
}

/// All piece slopes on `(0, π)` are non-negative (up to tolerance).
pub fn is_monotone(pl: &PiecewiseLinearCorrelation) -> bool {
    pl.pieces()
        .filter(|&(g0, _, _, _)| g0 < PI)
        .all(|(g0, g1, v0, v1)| (v1 - v0) / (g1 - g0) >= -MONOTONE_TOL)
}

fn random_start<R: Rng>(k: usize, rng: &mut R) -> Result<Vec<f64>, OptimizeError> {
    for _ in 0..START_RETRIES {
        let mut t: Vec<f64> = (0..k).map(|_| rng.random::<f64>() * PI).collect();
        t.sort_by(f64::total_cmp);
        let interior = t.iter().all(|&x| x > START_GAP && x < PI - START_GAP);
        let separated = t.windows(2).all(|w| w[1] - w[0] > START_GAP);
        if interior && separated {
            return Ok(t);
        }
    }
    Err(OptimizeError::InfeasibleStart {
        k,
        retries: START_RETRIES,
    })
}

/// Per-start RNG stream, independent of thread scheduling.
fn start_rng(seed: u64, tag: u64, start: usize) -> rand_chacha::ChaCha8Rng {
    stream_rng(seed ^ tag.wrapping_mul(0x9E37_79B9_7F4A_7C15), start as u64)
}

struct StartOutcome {
    colouring: Colouring,
    distance: f64,
    feasible: bool,
}

fn multi_start(
    k: usize,
    metric: Metric,
    constraint: Constraint,
    cfg: &SearchConfig,
) -> Result<Vec<StartOutcome>, OptimizeError> {
    let objective = |z: &[f64]| -> f64 {
        let pl = exact_correlation(&colouring_from_unconstrained(z));
        if constraint == Constraint::Monotone && !is_monotone(&pl) {
            return f64::INFINITY;
        }
        metric.of(&pl)
    };
    (0..cfg.n_starts)
        .into_par_iter()
        .map(|i| {
            let mut rng = start_rng(cfg.seed, k as u64, i);
            let theta = random_start(k, &mut rng)?;
            let z0 = unconstrained_from_thetas(&theta);
            if constraint == Constraint::Monotone && !objective(&z0).is_finite() {
                return Ok(StartOutcome {
                    colouring: Colouring::new(theta).expect("sampled start is valid"),
                    distance: f64::INFINITY,
                    feasible: false,
                });
            }
            let local = nelder_mead(objective, &z0, cfg.initial_step, cfg.tol, cfg.max_iter);
            let colouring = colouring_from_unconstrained(&local.x);
            let distance = metric.of(&exact_correlation(&colouring));
            Ok(StartOutcome {
                colouring,
                distance,
                feasible: true,
            })
        })
        .collect()
}

fn fixed_k_search(
    k: usize,
    metric: Metric,
    constraint: Constraint,
    cfg: &SearchConfig,
) -> Result<OptimizationResult, OptimizeError> {
    if !k.is_multiple_of(2) {
        return Err(OptimizeError::OddK(k));
    }
    if cfg.n_starts == 0 {
        return Err(OptimizeError::NoStarts);
    }
    if k == 0 {
        let c = Colouring::triangle();
        let distance = metric.of(&exact_correlation(&c));
        return Ok(OptimizationResult {
            best_model: Mixture::single(c),
            distance,
            metric,
            trace: vec![(0, distance)],
            constraint,
            feasible_starts: (constraint == Constraint::Monotone).then_some(1),
            duality_gaps: Vec::new(),
        });
    }

    let outcomes = multi_start(k, metric, constraint, cfg)?;
    let feasible = outcomes.iter().filter(|o| o.feasible).count();
    if feasible == 0 {
        return Err(OptimizeError::NoFeasiblePoint {
            k,
            starts: cfg.n_starts,
        });
    }
    let mut best: Option<&StartOutcome> = None;
    let mut trace = Vec::new();
    for (i, o) in outcomes.iter().enumerate() {
        // strict improvement only, so the lowest start index wins ties
        if o.feasible && best.is_none_or(|b| o.distance < b.distance) {
            best = Some(o);
        }
        if let Some(b) = best {
            trace.push((i, b.distance));
        }
    }
    let best = best.expect("at least one feasible start");
    Ok(OptimizationResult {
        best_model: Mixture::single(best.colouring.clone()),
        distance: best.distance,
        metric,
        trace,
        constraint,
        feasible_starts: (constraint == Constraint::Monotone).then_some(feasible),
        duality_gaps: Vec::new(),
    })
}

/// Best single colouring with `k` interior switches.
pub fn optimise_fixed_k(
    k: usize,
    metric: Metric,
    cfg: &SearchConfig,
) -> Result<OptimizationResult, OptimizeError> {
    fixed_k_search(k, metric, Constraint::None, cfg)
}

/// As [`optimise_fixed_k`], restricted to correlations non-decreasing on `(0, π)`.
pub fn monotone_search(k: usize, metric: Metric, cfg: &SearchConfig) -> Result<OptimizationResult, OptimizeError> {
    fixed_k_search(k, metric, Constraint::Monotone, cfg)
}

/// Periodic second antiderivative of a zero-mean piecewise-linear function.
struct SecondAntiderivative {
    breakpoints: Vec<f64>,
    values: Vec<f64>,
    slopes: Vec<f64>,
    first: Vec<f64>,
    second: Vec<f64>,
    drift: f64,
}

impl SecondAntiderivative {
    fn new(pl: &PiecewiseLinearCorrelation) -> Self {
        let pieces: Vec<_> = pl.pieces().collect();
        let mut first = Vec::with_capacity(pieces.len());
        let mut second = Vec::with_capacity(pieces.len());
        let mut slopes = Vec::with_capacity(pieces.len());
        let (mut q, mut p) = (0.0, 0.0);
        for &(g0, g1, v0, v1) in &pieces {
            let h = g1 - g0;
            let s = (v1 - v0) / h;
            first.push(q);
            second.push(p);
            slopes.push(s);
            p += q * h + v0 * h * h / 2.0 + s * h * h * h / 6.0;
            q += v0 * h + s * h * h / 2.0;
        }
        SecondAntiderivative {
            breakpoints: pl.breakpoints().to_vec(),
            values: pl.values().to_vec(),
            slopes,
            first,
            second,
            drift: -p / TAU,
        }
    }

    fn eval(&self, gamma: f64) -> f64 {
        let g = crate::circle::reduce(gamma);
        let i = self.breakpoints.partition_point(|&b| b <= g) - 1;
        let t = g - self.breakpoints[i];
        self.second[i] + self.first[i] * t + self.values[i] * t * t / 2.0 + self.slopes[i] * t * t * t / 6.0
            + self.drift * g
    }
}

/// `⟨h, ρ_c⟩ = (1/2π)∫ h ρ_c` for `h = ρ_m + cos`, through the kinks of `ρ_c`.
///
/// `ρ_c''` is a sum of point masses `J_i J_j / 2π` at the switch differences
/// `s_j - s_i`, so two integrations by parts reduce the integral to a double
/// sum of `H = P_m - cos` with `H'' = h`.
struct LinearOracle {
    potential: SecondAntiderivative,
}

impl LinearOracle {
    fn new(current: &PiecewiseLinearCorrelation) -> Self {
        LinearOracle {
            potential: SecondAntiderivative::new(current),
        }
    }

    fn value(&self, c: &Colouring) -> f64 {
        let jumps = c.jumps();
        let mut acc = 0.0;
        for &(si, ji) in &jumps {
            for &(sj, jj) in &jumps {
                let d = sj - si;
                acc += ji * jj * (self.potential.eval(d) - d.cos());
            }
        }
        acc / (TAU * TAU)
    }
}

fn lmo_search(oracle: &LinearOracle, k: usize, cfg: &SearchConfig, iteration: usize) -> Result<Colouring, OptimizeError> {
    if k == 0 {
        return Ok(Colouring::triangle());
    }
    let objective = |z: &[f64]| oracle.value(&colouring_from_unconstrained(z));
    let found: Vec<(f64, Colouring)> = (0..cfg.n_starts)
        .into_par_iter()
        .map(|i| {
            let tag = (k as u64) << 32 | iteration as u64;
            let mut rng = start_rng(cfg.seed, tag, i);
            let z0 = unconstrained_from_thetas(&random_start(k, &mut rng)?);
            let local = nelder_mead(objective, &z0, cfg.initial_step, cfg.tol, cfg.max_iter);
            let c = colouring_from_unconstrained(&local.x);
            Ok((oracle.value(&c), c))
        })
        .collect::<Result<_, OptimizeError>>()?;
    let mut best = &found[0];
    for f in &found[1..] {
        if f.0 < best.0 {
            best = f;
        }
    }
    Ok(best.1.clone())
}

struct Atom {
    weight: f64,
    colouring: Colouring,
    curve: PiecewiseLinearCorrelation,
}

fn mixture_from_atoms(atoms: &[Atom]) -> Mixture {
    let kept: Vec<(f64, Colouring)> = atoms
        .iter()
        .filter(|a| a.weight >= WEIGHT_TOL)
        .map(|a| (a.weight, a.colouring.clone()))
        .collect();
    let total: f64 = kept.iter().map(|(w, _)| w).sum();
    Mixture::new(kept.into_iter().map(|(w, c)| (w / total, c)).collect())
        .expect("renormalised positive weights form a valid mixture")
}

/// Frank–Wolfe over mixtures of colourings with `k` drawn from `pool_ks`.
pub fn optimise_mixture(
    pool_ks: &[usize],
    metric: Metric,
    n_iterations: usize,
    cfg: &SearchConfig,
) -> Result<OptimizationResult, OptimizeError> {
    if metric != Metric::L2 {
        return Err(OptimizeError::NotL2);
    }
    if pool_ks.is_empty() {
        return Err(OptimizeError::EmptyPool);
    }
    if let Some(&k) = pool_ks.iter().find(|&&k| k % 2 != 0) {
        return Err(OptimizeError::OddK(k));
    }

    // start from the best single colouring in the pool
    let mut start: Option<OptimizationResult> = None;
    for &k in pool_ks {
        let r = optimise_fixed_k(k, Metric::L2, cfg)?;
        if start.as_ref().is_none_or(|s| r.distance < s.distance) {
            start = Some(r);
        }
    }
    let start = start.expect("pool is non-empty");
    let first = start.best_model.components()[0].1.clone();
    let mut current = exact_correlation(&first);
    let mut atoms = vec![Atom {
        weight: 1.0,
        colouring: first,
        curve: current.clone(),
    }];
    let mut objective = current.l2_distance_squared_to_cosine();
    let mut trace = vec![(0, objective.sqrt())];
    let mut gaps = Vec::new();

    for iteration in 1..=n_iterations {
        let oracle = LinearOracle::new(&current);
        let mut candidates: Vec<Colouring> = atoms.iter().map(|a| a.colouring.clone()).collect();
        for &k in pool_ks {
            candidates.push(lmo_search(&oracle, k, cfg, iteration)?);
        }
        let grad_dot_current = current.inner(&current) + current.cos_moment(1);
        let mut best: Option<(f64, Colouring, PiecewiseLinearCorrelation)> = None;
        for c in candidates {
            let curve = exact_correlation(&c);
            let v = current.inner(&curve) + curve.cos_moment(1);
            if best.as_ref().is_none_or(|b| v < b.0) {
                best = Some((v, c, curve));
            }
        }
        let (vertex_value, vertex, vertex_curve) = best.expect("candidates are non-empty");
        // the objective is ‖ρ + cos‖², whose gradient is 2(ρ + cos)
        let gap = 2.0 * (grad_dot_current - vertex_value);
        gaps.push((iteration, gap));

        let dir_sq = vertex_curve.inner(&vertex_curve) - 2.0 * vertex_curve.inner(&current) + current.inner(&current);
        if gap <= 0.0 || dir_sq <= 1e-15 {
            trace.push((iteration, objective.sqrt()));
            continue;
        }
        let step = (0.5 * gap / dir_sq).clamp(0.0, 1.0);
        let next = PiecewiseLinearCorrelation::weighted_sum(&[(1.0 - step, current.clone()), (step, vertex_curve.clone())]);
        let next_objective = next.l2_distance_squared_to_cosine();
        if next_objective <= objective {
            for a in atoms.iter_mut() {
                a.weight *= 1.0 - step;
            }
            match atoms.iter_mut().find(|a| a.colouring == vertex) {
                Some(a) => a.weight += step,
                None => atoms.push(Atom {
                    weight: step,
                    colouring: vertex,
                    curve: vertex_curve,
                }),
            }
            atoms.retain(|a| a.weight >= WEIGHT_TOL);
            current = next;
            objective = next_objective;
        }
        trace.push((iteration, objective.sqrt()));
    }

    let best_model = mixture_from_atoms(&atoms);
    let distance = mixture_correlation(&best_model).l2_distance_to_cosine();
    debug_assert!(atoms.iter().all(|a| a.curve.breakpoints()[0] == 0.0));
    Ok(OptimizationResult {
        best_model,
        distance,
        metric,
        trace,
        constraint: Constraint::None,
        feasible_starts: None,
        duality_gaps: gaps,
    })
}
