//! Log-domain partition functions and the endpoint laws they induce.

use serde::{Deserialize, Serialize};

use crate::environment::{EnvGrid, Regime, SiteSampler};
use crate::error::{usage, Result};
use crate::numerics::{argmax_first, log_sum_exp, log_sum_exp_slice, LatticeDist};
use crate::sampling::{ModelParams, SeedSpec};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Direction {
    Forward,
    Reverse,
}

/// `log Z` over a full rectangle, forward from `(0, 0)` or reverse from the far corner.
#[derive(Debug, Clone, PartialEq)]
pub struct LogZGrid {
    cols: usize,
    rows: usize,
    logz: Vec<f64>,
    direction: Direction,
}

impl LogZGrid {
    pub fn m(&self) -> usize {
        self.cols - 1
    }

    pub fn n(&self) -> usize {
        self.rows - 1
    }

    pub fn direction(&self) -> Direction {
        self.direction
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.logz[j * self.cols + i]
    }

    fn check(&self, i: usize, j: usize) -> Result<()> {
        if i >= self.cols || j >= self.rows {
            return Err(usage(format!("({i}, {j}) outside the {}x{} grid", self.cols, self.rows)));
        }
        Ok(())
    }

    fn forward_only(&self) -> Result<()> {
        match self.direction {
            Direction::Forward => Ok(()),
            Direction::Reverse => Err(usage("operation needs a forward partition function")),
        }
    }

    /// `log U(m, n) = log Z(m, n) - log Z(m - 1, n)`.
    pub fn ratio_log_u(&self, m: usize, n: usize) -> Result<f64> {
        self.forward_only()?;
        self.check(m, n)?;
        if m == 0 {
            return Err(usage("U(m, n) needs m >= 1"));
        }
        Ok(self.get(m, n) - self.get(m - 1, n))
    }

    /// `log V(m, n) = log Z(m, n) - log Z(m, n - 1)`.
    pub fn ratio_log_v(&self, m: usize, n: usize) -> Result<f64> {
        self.forward_only()?;
        self.check(m, n)?;
        if n == 0 {
            return Err(usage("V(m, n) needs n >= 1"));
        }
        Ok(self.get(m, n) - self.get(m, n - 1))
    }

    /// Law of the endpoint on the antidiagonal `i + j = n`.
    pub fn endpoint_law(&self, n: usize) -> Result<EndpointLaw> {
        self.forward_only()?;
        if n > self.m() || n > self.n() {
            return Err(usage(format!("antidiagonal {n} leaves the {}x{} grid", self.cols, self.rows)));
        }
        Ok(EndpointLaw::from_log_weights((0..=n).map(|k| self.get(k, n - k)).collect()))
    }

    pub fn deviation_profile(&self, n: usize, s_grid: &[f64], scale: Scale) -> Result<Vec<f64>> {
        self.endpoint_law(n)?.deviation_profile(s_grid, scale)
    }
}

/// `log Z(m, n)` summed over up/right paths from the origin, weight at every visited site.
pub fn forward_log_z(env: &EnvGrid) -> LogZGrid {
    let (cols, rows) = (env.m() + 1, env.n() + 1);
    let mut logz = vec![f64::NEG_INFINITY; cols * rows];
    for j in 0..rows {
        for i in 0..cols {
            let v = if i == 0 && j == 0 {
                0.0
            } else {
                let left = if i > 0 { logz[j * cols + i - 1] } else { f64::NEG_INFINITY };
                let down = if j > 0 { logz[(j - 1) * cols + i] } else { f64::NEG_INFINITY };
                env.weight(i, j) + log_sum_exp(left, down)
            };
            logz[j * cols + i] = v;
        }
    }
    LogZGrid { cols, rows, logz, direction: Direction::Forward }
}

/// Reverse partition function of a point-to-point grid: paths from `(m, n)` to the
/// far corner, weight at the start included and corner weight excluded.
pub fn reverse_log_z(env: &EnvGrid) -> Result<LogZGrid> {
    if !matches!(env.regime(), Regime::PointToPoint(_)) {
        return Err(usage("reverse partition function needs a point-to-point grid"));
    }
    let (cols, rows) = (env.m() + 1, env.n() + 1);
    let mut logz = vec![f64::NEG_INFINITY; cols * rows];
    for j in (0..rows).rev() {
        for i in (0..cols).rev() {
            let v = if i + 1 == cols && j + 1 == rows {
                0.0
            } else {
                let right = if i + 1 < cols { logz[j * cols + i + 1] } else { f64::NEG_INFINITY };
                let up = if j + 1 < rows { logz[(j + 1) * cols + i] } else { f64::NEG_INFINITY };
                env.weight(i, j) + log_sum_exp(right, up)
            };
            logz[j * cols + i] = v;
        }
    }
    Ok(LogZGrid { cols, rows, logz, direction: Direction::Reverse })
}

/// Normalization of a deviation profile.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Scale {
    Sqrt,
    Linear,
}

/// Endpoint law on `{0..n}` with its log-masses and mode.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EndpointLaw {
    n: usize,
    dist: LatticeDist,
    log_mass: Vec<f64>,
    mode: usize,
}

impl EndpointLaw {
    /// Normalize unnormalized log-weights `w_0..w_n`.
    pub fn from_log_weights(raw: Vec<f64>) -> Self {
        assert!(!raw.is_empty(), "endpoint law needs at least one site");
        let lse = log_sum_exp_slice(&raw);
        let log_mass: Vec<f64> = raw.iter().map(|w| w - lse).collect();
        let mode = argmax_first(&log_mass).unwrap();
        let dist = LatticeDist::from_parts(0, log_mass.iter().map(|l| l.exp()).collect());
        Self { n: raw.len() - 1, dist, log_mass, mode }
    }

    /// Law proportional to `exp(-S_k)` for a walk path `S_0..S_n`.
    pub fn from_walk(path: &[f64]) -> Self {
        Self::from_log_weights(path.iter().map(|s| -s).collect())
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn dist(&self) -> &LatticeDist {
        &self.dist
    }

    pub fn mass(&self) -> &[f64] {
        self.dist.mass()
    }

    pub fn log_mass(&self) -> &[f64] {
        &self.log_mass
    }

    /// Favourite endpoint `l_n` (smallest maximizer).
    pub fn mode(&self) -> usize {
        self.mode
    }

    /// `-(1/sqrt n) log Q(floor(n s))` or `-(1/n) log Q(floor(n s))` per grid point.
    pub fn deviation_profile(&self, s_grid: &[f64], scale: Scale) -> Result<Vec<f64>> {
        let n = self.n as f64;
        let norm = match scale {
            Scale::Sqrt => n.sqrt(),
            Scale::Linear => n,
        }
        .max(1.0);
        s_grid
            .iter()
            .map(|&s| {
                if !(0.0..=1.0).contains(&s) {
                    return Err(usage(format!("s = {s} outside [0, 1]")));
                }
                let k = ((n * s).floor() as usize).min(self.n);
                Ok(-self.log_mass[k] / norm)
            })
            .collect()
    }
}

/// Default deviation grid `{0, 0.05, ..., 1}`.
pub fn default_s_grid() -> Vec<f64> {
    (0..=20).map(|i| i as f64 / 20.0).collect()
}

/// Largest point mass at step `n` given the law at step `n - 1`: the last step
/// splits evenly, so this is `max_k (dist(k) + dist(k + 1)) / 2` over `k = -1..n-1`.
pub fn endpoint_mass_in(law_prev: &EndpointLaw) -> f64 {
    let m = law_prev.mass();
    let at = |k: isize| if k < 0 || k as usize >= m.len() { 0.0 } else { m[k as usize] };
    (-1..m.len() as isize).map(|k| (at(k) + at(k + 1)) / 2.0).fold(0.0, f64::max)
}

/// Point-to-line DP along antidiagonals with weights drawn on the fly.
///
/// Site weights come from the same per-site streams as [`crate::environment::build_p2l_env`],
/// so level `t` reproduces the full-grid values bit for bit in `O(t)` memory.
pub struct StreamingDp {
    sampler: SiteSampler,
    level: usize,
    cur: Vec<f64>,
    prev: Vec<f64>,
}

impl StreamingDp {
    pub fn new(seed: SeedSpec, params: ModelParams) -> Result<Self> {
        Ok(Self {
            sampler: SiteSampler::new(seed, Regime::PointToLine(params))?,
            level: 0,
            cur: vec![0.0],
            prev: Vec::new(),
        })
    }

    pub fn level(&self) -> usize {
        self.level
    }

    /// `log Z(k, t - k)` for `k = 0..=t`.
    pub fn current(&self) -> &[f64] {
        &self.cur
    }

    pub fn advance(&mut self) {
        let t = self.level + 1;
        std::mem::swap(&mut self.prev, &mut self.cur);
        self.cur.clear();
        let prev = &self.prev;
        for i in 0..=t {
            let left = if i > 0 { prev[i - 1] } else { f64::NEG_INFINITY };
            let down = if i < t { prev[i] } else { f64::NEG_INFINITY };
            self.cur.push(self.sampler.log_weight(i, t - i) + log_sum_exp(left, down));
        }
        self.level = t;
    }

    pub fn advance_to(&mut self, t: usize) -> Result<()> {
        if t < self.level {
            return Err(usage(format!("cannot rewind from level {} to {t}", self.level)));
        }
        while self.level < t {
            self.advance();
        }
        Ok(())
    }

    pub fn endpoint_law(&self) -> EndpointLaw {
        EndpointLaw::from_log_weights(self.cur.clone())
    }

    /// `log U(k, t - k)` for `k = 1..=t`.
    pub fn log_u(&self) -> Vec<f64> {
        (1..=self.level).map(|k| self.cur[k] - self.prev[k - 1]).collect()
    }

    /// `log V(k, t - k)` for `k = 0..t`.
    pub fn log_v(&self) -> Vec<f64> {
        (0..self.level).map(|k| self.cur[k] - self.prev[k]).collect()
    }
}

/// Endpoint laws of one replica at each requested length (same environment).
pub fn streaming_endpoint_laws(seed: SeedSpec, params: ModelParams, ns: &[usize]) -> Result<Vec<EndpointLaw>> {
    let mut order: Vec<usize> = (0..ns.len()).collect();
    order.sort_by_key(|&i| ns[i]);
    let mut dp = StreamingDp::new(seed, params)?;
    let mut out = vec![None; ns.len()];
    for i in order {
        dp.advance_to(ns[i])?;
        out[i] = Some(dp.endpoint_law());
    }
    Ok(out.into_iter().map(Option::unwrap).collect())
}
