//! Representation walks, their ladder structure, and walks conditioned to stay
//! nonnegative.

use std::collections::VecDeque;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{usage, Error, Result};
use crate::numerics::{argmin_first, LatticeDist};
use crate::sampling::{IncrementSampler, ModelParams, SeedSpec};

/// Walk positions `S_0 = 0, S_1, ..., S_n`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WalkPath {
    positions: Vec<f64>,
}

impl WalkPath {
    pub fn new(positions: Vec<f64>) -> Result<Self> {
        match positions.first() {
            None => Err(usage("walk path needs at least S_0")),
            Some(&s0) if s0 != 0.0 => Err(Error::Invariant(format!("walk must start at 0, got {s0}"))),
            _ if positions.iter().any(|s| !s.is_finite()) => Err(Error::Invariant("non-finite walk position".into())),
            _ => Ok(Self { positions }),
        }
    }

    pub fn from_increments(increments: &[f64]) -> Self {
        let mut positions = Vec::with_capacity(increments.len() + 1);
        let mut s = 0.0;
        positions.push(s);
        for x in increments {
            s += x;
            positions.push(s);
        }
        Self { positions }
    }

    pub fn positions(&self) -> &[f64] {
        &self.positions
    }

    /// Number of steps `n`.
    pub fn steps(&self) -> usize {
        self.positions.len() - 1
    }

    pub fn increments(&self) -> impl Iterator<Item = f64> + '_ {
        self.positions.windows(2).map(|w| w[1] - w[0])
    }

    pub fn into_positions(self) -> Vec<f64> {
        self.positions
    }
}

/// `n` steps of the representation walk drawn from `rng`.
pub fn sample_walk_with<R: Rng + ?Sized>(rng: &mut R, n: usize, inc: &IncrementSampler) -> WalkPath {
    let mut positions = Vec::with_capacity(n + 1);
    let mut s = 0.0;
    positions.push(s);
    for _ in 0..n {
        s += inc.sample(rng);
        positions.push(s);
    }
    WalkPath { positions }
}

pub fn sample_walk(seed: SeedSpec, n: usize, params: ModelParams) -> Result<WalkPath> {
    Ok(sample_walk_with(&mut seed.rng(), n, &IncrementSampler::new(params)?))
}

/// Smallest index of the minimum, `l_n`.
pub fn argmin_walk(path: &WalkPath) -> usize {
    argmin_first(&path.positions).unwrap()
}

/// `xi^n_k = exp(-(S_k - S_l)) / sum_i exp(-(S_i - S_l))`.
pub fn xi_n(path: &WalkPath) -> LatticeDist {
    let min = path.positions[argmin_walk(path)];
    let w: Vec<f64> = path.positions.iter().map(|s| (-(s - min)).exp()).collect();
    let z: f64 = w.iter().sum();
    LatticeDist::from_parts(0, w.into_iter().map(|x| x / z).collect())
}

/// `(pre, post)` with `pre_k = S_{l-k} - S_l` (`k = 1..=l`) and `post_k = S_{l+k} - S_l` (`k = 1..=n-l`).
pub fn split_at_min(path: &WalkPath) -> (Vec<f64>, Vec<f64>) {
    let l = argmin_walk(path);
    let s = &path.positions;
    let pre = (1..=l).map(|k| s[l - k] - s[l]).collect();
    let post = (l + 1..s.len()).map(|i| s[i] - s[l]).collect();
    (pre, post)
}

/// Largest `delta` with `post_k > delta k^eta` for every `k` (`inf` for an empty segment).
pub fn lower_envelope_delta(post: &[f64], eta: f64) -> f64 {
    post.iter().enumerate().map(|(i, y)| y / ((i + 1) as f64).powf(eta)).fold(f64::INFINITY, f64::min)
}

/// Which strict ascending ladder to extract.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum LadderSide {
    /// Ladder of `-S` (descending ladder of the walk).
    OfNegated,
    /// Ladder of `S` itself.
    OfWalk,
}

/// Strict ascending ladder epochs, heights and time-reversed excursions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LadderDecomp {
    pub epochs: Vec<usize>,
    pub heights: Vec<f64>,
    /// `e_k(j)` for `j = 0..=T_k - T_{k-1}`.
    pub excursions: Vec<Vec<f64>>,
}

impl LadderDecomp {
    /// Number of completed ladder epochs after `T_0`.
    pub fn count(&self) -> usize {
        self.epochs.len() - 1
    }
}

impl LadderDecomp {
    pub fn durations(&self) -> impl Iterator<Item = usize> + '_ {
        self.epochs.windows(2).map(|w| w[1] - w[0])
    }
}

/// Ladder of the chosen side; a partial walk yields only the epochs it reaches.
pub fn ladder_decompose(path: &WalkPath, side: LadderSide) -> LadderDecomp {
    let sign = match side {
        LadderSide::OfNegated => -1.0,
        LadderSide::OfWalk => 1.0,
    };
    let y: Vec<f64> = path.positions.iter().map(|s| sign * s).collect();
    let mut epochs = vec![0];
    let mut heights = vec![0.0];
    let mut excursions = Vec::new();
    for t in 1..y.len() {
        if y[t] > *heights.last().unwrap() {
            let start = *epochs.last().unwrap();
            excursions.push((0..=t - start).map(|j| y[t] - y[t - j]).collect());
            epochs.push(t);
            heights.push(y[t]);
        }
    }
    LadderDecomp { epochs, heights, excursions }
}

/// Nonnegative path `W_0 = 0, ..., W_K`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConditionedPath {
    positions: Vec<f64>,
}

impl ConditionedPath {
    pub fn new(positions: Vec<f64>) -> Result<Self> {
        if positions.first() != Some(&0.0) {
            return Err(Error::Invariant("conditioned path must start at 0".into()));
        }
        if let Some(bad) = positions.iter().find(|w| !(**w >= 0.0)) {
            return Err(Error::Invariant(format!("conditioned path takes negative value {bad}")));
        }
        Ok(Self { positions })
    }

    pub fn positions(&self) -> &[f64] {
        &self.positions
    }

    pub fn into_positions(self) -> Vec<f64> {
        self.positions
    }
}

/// Assemble `W` from a finished walk per Tanaka's piecewise formula, using the ladder of `S`.
/// Only indices covered by completed excursions are returned.
pub fn tanaka_from_walk(path: &WalkPath) -> Vec<f64> {
    let lad = ladder_decompose(path, LadderSide::OfWalk);
    let mut w = Vec::new();
    for (k, e) in lad.excursions.iter().enumerate() {
        let h = lad.heights[k];
        w.extend(e[..e.len() - 1].iter().map(|x| h + x));
    }
    w
}

/// Default cap on the length of one excursion in [`tanaka_up_sample`].
pub const DEFAULT_EXCURSION_CAP: u64 = 1 << 22;

/// Tanaka draw with the number of excursions that hit the cap and were redrawn.
#[derive(Debug, Clone, PartialEq)]
pub struct TanakaSample {
    pub path: ConditionedPath,
    pub capped: u32,
}

/// First `K + 1` values of the walk conditioned to stay nonnegative, built by
/// concatenating time-reversed excursions of `S` between its strict ascending
/// ladder epochs.
///
/// Increments are drawn lazily. An excursion longer than `cap` steps is
/// discarded and redrawn from its start, which conditions on excursions of at
/// most `cap` steps; only the last `K + 1 - start` positions of an excursion
/// are retained.
pub fn tanaka_up_sample_with<R: Rng + ?Sized>(
    rng: &mut R,
    k: usize,
    inc: &IncrementSampler,
    cap: u64,
) -> Result<TanakaSample> {
    let p = inc.params();
    if !p.is_equilibrium() && p.increment_mean() < 0.0 {
        return Err(usage(format!(
            "ascending ladder epochs are not a.s. finite for E X = {} < 0",
            p.increment_mean()
        )));
    }
    if cap == 0 {
        return Err(usage("excursion cap must be positive"));
    }
    let mut w = Vec::with_capacity(k + 1);
    let mut height = 0.0;
    let mut capped = 0u32;
    let mut ring: VecDeque<f64> = VecDeque::new();
    while w.len() <= k {
        let need = k + 1 - w.len();
        let (d, top) = loop {
            ring.clear();
            let mut y = 0.0;
            let mut d = 0u64;
            let done = loop {
                y += inc.sample(rng);
                d += 1;
                if y > 0.0 {
                    break true;
                }
                if ring.len() == need {
                    ring.pop_front();
                }
                ring.push_back(y);
                if d >= cap {
                    break false;
                }
            };
            if done {
                break (d, y);
            }
            capped += 1;
        };
        // W_{start + j} = H + y_d - y_{d-j}; ring holds y_{d-1}, y_{d-2}, ... at its back.
        w.push(height);
        let take = (need - 1).min(d as usize - 1);
        for j in 1..=take {
            w.push(height + top - ring[ring.len() - j]);
        }
        height += top;
    }
    w.truncate(k + 1);
    Ok(TanakaSample { path: ConditionedPath { positions: w }, capped })
}

pub fn tanaka_up_sample(seed: SeedSpec, k: usize, params: ModelParams, cap: u64) -> Result<TanakaSample> {
    tanaka_up_sample_with(&mut seed.rng(), k, &IncrementSampler::new(params)?, cap)
}

/// Exact draw of `S_0..S_K` given `S_k >= 0` for all `k <= n`, by rejection.
///
/// Paths are abandoned at their first negative value. At equilibrium the
/// acceptance probability decays like `n^{-1/2}`, so the expected number of
/// attempts grows like `sqrt(n)`. Returns the path and the attempt count.
pub fn rejection_conditioned_sample_with<R: Rng + ?Sized>(
    rng: &mut R,
    n: usize,
    k: usize,
    inc: &IncrementSampler,
) -> Result<(ConditionedPath, u64)> {
    if k > n {
        return Err(usage(format!("need K <= n, got K={k} n={n}")));
    }
    let mut attempts = 0u64;
    let mut buf = Vec::with_capacity(k + 1);
    loop {
        attempts += 1;
        buf.clear();
        buf.push(0.0);
        let mut s = 0.0;
        let mut ok = true;
        for i in 1..=n {
            s += inc.sample(rng);
            if s < 0.0 {
                ok = false;
                break;
            }
            if i <= k {
                buf.push(s);
            }
        }
        if ok {
            return Ok((ConditionedPath { positions: buf }, attempts));
        }
    }
}

pub fn rejection_conditioned_sample(seed: SeedSpec, n: usize, k: usize, params: ModelParams) -> Result<ConditionedPath> {
    Ok(rejection_conditioned_sample_with(&mut seed.rng(), n, k, &IncrementSampler::new(params)?)?.0)
}

/// Monte Carlo `P(S_k >= 0, k <= n)` for each requested `n`, sharing trials.
pub fn survival_probabilities(seed: SeedSpec, ns: &[usize], trials: u64, params: ModelParams) -> Result<Vec<f64>> {
    let inc = IncrementSampler::new(params)?;
    let horizon = ns.iter().copied().max().unwrap_or(0);
    let mut rng = seed.rng();
    let mut survived = vec![0u64; ns.len()];
    for _ in 0..trials {
        let mut s = 0.0;
        let mut exit = horizon + 1;
        for i in 1..=horizon {
            s += inc.sample(&mut rng);
            if s < 0.0 {
                exit = i;
                break;
            }
        }
        for (c, &n) in survived.iter_mut().zip(ns) {
            if exit > n {
                *c += 1;
            }
        }
    }
    Ok(survived.into_iter().map(|c| c as f64 / trials as f64).collect())
}

/// Estimate of the renewal function with its standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RenewalEstimate {
    pub x: f64,
    pub estimate: f64,
    pub stderr: f64,
}

/// Estimates of `V(x) = 1 + E sum_{i < sigma(0)} 1{S_i >= -x}` at several `x` on common paths,
/// with `sigma(0) = min{k >= 1 : S_k >= 0}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RenewalReport {
    pub points: Vec<RenewalEstimate>,
    /// Paths stopped at the step cap before returning to `[0, inf)`.
    pub truncated: u64,
}

pub const RENEWAL_STEP_CAP: u64 = 10_000_000;

pub fn renewal_v_estimate(seed: SeedSpec, xs: &[f64], reps: u64, params: ModelParams) -> Result<RenewalReport> {
    if reps == 0 {
        return Err(usage("renewal estimate needs reps >= 1"));
    }
    if let Some(x) = xs.iter().find(|x| !(**x >= 0.0)) {
        return Err(usage(format!("renewal function needs x >= 0, got {x}")));
    }
    let inc = IncrementSampler::new(params)?;
    let mut rng = seed.rng();
    let mut sum = vec![0.0; xs.len()];
    let mut sum2 = vec![0.0; xs.len()];
    let mut counts = vec![0u64; xs.len()];
    let mut truncated = 0;
    for _ in 0..reps {
        counts.iter_mut().for_each(|c| *c = 0);
        let mut s = 0.0;
        let mut steps = 0u64;
        loop {
            s += inc.sample(&mut rng);
            steps += 1;
            if s >= 0.0 {
                break;
            }
            if steps >= RENEWAL_STEP_CAP {
                truncated += 1;
                break;
            }
            for (c, x) in counts.iter_mut().zip(xs) {
                if s >= -x {
                    *c += 1;
                }
            }
        }
        for i in 0..xs.len() {
            let v = 1.0 + counts[i] as f64;
            sum[i] += v;
            sum2[i] += v * v;
        }
    }
    let r = reps as f64;
    let points = xs
        .iter()
        .enumerate()
        .map(|(i, &x)| {
            let mean = sum[i] / r;
            let var = if reps > 1 { ((sum2[i] - r * mean * mean) / (r - 1.0)).max(0.0) } else { 0.0 };
            RenewalEstimate { x, estimate: mean, stderr: (var / r).sqrt() }
        })
        .collect();
    Ok(RenewalReport { points, truncated })
}
