//! Point-to-point polymer: where paths cross the transverse diagonal
//! `q i + p j = pqN` of the rectangle `[0, pN] x [0, qN]`.

use serde::{Deserialize, Serialize};

use crate::conditioned_walk::WalkPath;
use crate::environment::{EnvGrid, P2PParams, Regime};
use crate::error::{usage, Error, Result};
use crate::numerics::{argmax_first, log_sum_exp_slice, LatticeDist};
use crate::partition::{forward_log_z, reverse_log_z, LogZGrid};

pub type Point = (usize, usize);

/// Up or right edge `z1 -> z2` leaving the lower half-space `q i + p j <= pqN`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct CrossingEdge {
    pub z1: Point,
    pub z2: Point,
    /// Block `k` with `0 <= k < N`.
    pub block: usize,
    /// Position `a` inside the block, `0 <= a < p + q`.
    pub offset: usize,
}

impl CrossingEdge {
    pub fn is_horizontal(&self) -> bool {
        self.z2.1 == self.z1.1
    }
}

/// `F = (z1 + z2) . (q, -p)`.
pub fn f_statistic(z1: Point, z2: Point, p: usize, q: usize) -> i64 {
    let (p, q) = (p as i64, q as i64);
    (z1.0 + z2.0) as i64 * q - (z1.1 + z2.1) as i64 * p
}

/// Anchor `z1^k = (kp, (N - k) q)` on the diagonal.
pub fn anchor(p: usize, q: usize, n: usize, k: usize) -> Point {
    (k * p, (n - k) * q)
}

/// All `N (p + q)` crossing edges, ordered by `F` (down-right along the diagonal)
/// and grouped into blocks of `p + q` that each start at an anchor edge.
pub fn crossing_set(p: usize, q: usize, n: usize) -> Result<Vec<CrossingEdge>> {
    if p == 0 || q == 0 || n == 0 {
        return Err(usage(format!("p, q, N must be positive, got ({p}, {q}, {n})")));
    }
    let (w, h, c) = (p * n, q * n, p * q * n);
    let mut raw: Vec<(Point, Point)> = Vec::with_capacity(n * (p + q));
    for j in 0..=h {
        let imax = (c - p * j) / q;
        if imax < w {
            raw.push(((imax, j), (imax + 1, j)));
        }
    }
    for i in 0..=w {
        let jmax = (c - q * i) / p;
        if jmax < h {
            raw.push(((i, jmax), (i, jmax + 1)));
        }
    }
    raw.sort_by_key(|&(z1, z2)| (f_statistic(z1, z2, p, q), z1.0, z2.1));
    Ok(raw
        .into_iter()
        .enumerate()
        .map(|(pos, (z1, z2))| CrossingEdge { z1, z2, block: pos / (p + q), offset: pos % (p + q) })
        .collect())
}

/// Points of the down-right staircase from `(0, qN)` to `(pN, 0)` hugging the
/// diagonal from below.
pub fn lower_transverse_diagonal(p: usize, q: usize, n: usize) -> Vec<Point> {
    let (c, mut i, mut j) = (p * q * n, 0usize, q * n);
    let mut out = vec![(i, j)];
    while (i, j) != (p * n, 0) {
        if i < p * n && q * (i + 1) + p * j <= c {
            i += 1;
        } else {
            j -= 1;
        }
        out.push((i, j));
    }
    out
}

/// Crossing-edge law of one point-to-point environment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CrossingLaw {
    pub params: P2PParams,
    pub edges: Vec<CrossingEdge>,
    pub log_prob: Vec<f64>,
    pub dist: LatticeDist,
    /// Edge index of the most likely edge (first on ties).
    pub mode: usize,
    /// `s_k = log Z(z1^k) + log Z~(z2^k)`, `k < N`.
    pub block_scores: Vec<f64>,
    /// `argmax_k s_k`.
    pub favourite_block: usize,
    /// `log Z(pN, qN)`.
    pub log_z: f64,
}

fn p2p_params(env: &EnvGrid) -> Result<P2PParams> {
    match env.regime() {
        Regime::PointToPoint(p) => Ok(*p),
        Regime::PointToLine(_) => Err(usage("crossing law needs a point-to-point grid")),
    }
}

/// `Q(crossing at <z1, z2>) = Z(z1) Z~(z2) e^{omega(pN, qN)} / Z(pN, qN)`.
pub fn crossing_law(env: &EnvGrid) -> Result<CrossingLaw> {
    let params = p2p_params(env)?;
    let fwd = forward_log_z(env);
    let rev = reverse_log_z(env)?;
    crossing_law_from(env, &fwd, &rev, params)
}

fn crossing_law_from(env: &EnvGrid, fwd: &LogZGrid, rev: &LogZGrid, params: P2PParams) -> Result<CrossingLaw> {
    let (p, q, n) = (params.p, params.q, params.n);
    let edges = crossing_set(p, q, n)?;
    let log_z = fwd.get(env.m(), env.n());
    let corner = env.corner_log_weight();
    let log_prob: Vec<f64> =
        edges.iter().map(|e| fwd.get(e.z1.0, e.z1.1) + rev.get(e.z2.0, e.z2.1) + corner - log_z).collect();
    let dist = LatticeDist::from_parts(0, log_prob.iter().map(|l| l.exp()).collect());
    let mode = argmax_first(&log_prob).ok_or_else(|| Error::Invariant("empty crossing set".into()))?;
    let block_scores: Vec<f64> = (0..n)
        .map(|k| {
            let (i, j) = anchor(p, q, n, k);
            fwd.get(i, j) + rev.get(i + 1, j)
        })
        .collect();
    let favourite_block = argmax_first(&block_scores).unwrap();
    Ok(CrossingLaw { params, edges, log_prob, dist, mode, block_scores, favourite_block, log_z })
}

/// `|log Z(pN, qN) - LSE_edges(log Z(z1) + log Z~(z2) + omega_corner)|`.
pub fn crossing_identity_residual(env: &EnvGrid) -> Result<f64> {
    let params = p2p_params(env)?;
    let fwd = forward_log_z(env);
    let rev = reverse_log_z(env)?;
    let terms: Vec<f64> = crossing_set(params.p, params.q, params.n)?
        .iter()
        .map(|e| fwd.get(e.z1.0, e.z1.1) + rev.get(e.z2.0, e.z2.1) + env.corner_log_weight())
        .collect();
    Ok((fwd.get(env.m(), env.n()) - log_sum_exp_slice(&terms)).abs())
}

/// `m_N = F` of the favourite anchor edge `<z1^l, z1^l + e1>`.
pub fn m_n_statistic(law: &CrossingLaw) -> i64 {
    let P2PParams { p, q, n, .. } = law.params;
    let z1 = anchor(p, q, n, law.favourite_block);
    f_statistic(z1, (z1.0 + 1, z1.1), p, q)
}

/// `m_N / (4 N p q) + 1/2`, which lies in `[0, 1]` up to `O(1/N)`.
pub fn m_n_scaled(law: &CrossingLaw) -> f64 {
    let P2PParams { p, q, n, .. } = law.params;
    m_n_statistic(law) as f64 / (4 * n * p * q) as f64 + 0.5
}

impl CrossingLaw {
    /// Block walk `W_k = -(s_k - s_0)`, `k < N`; the crossing law is proportional to `e^{-W}` on anchors.
    pub fn block_walk(&self) -> WalkPath {
        let s0 = self.block_scores[0];
        WalkPath::new(self.block_scores.iter().map(|s| s0 - s).collect()).expect("block walk starts at 0")
    }

    pub fn mode_mass(&self) -> f64 {
        self.dist.mass()[self.mode]
    }
}

/// Block walk rebuilt from edge ratio variables along the lower staircase and its
/// `e1` shift; equals [`CrossingLaw::block_walk`] up to rounding.
pub fn block_walk_from_ratios(env: &EnvGrid) -> Result<WalkPath> {
    let params = p2p_params(env)?;
    let (p, q, n) = (params.p, params.q, params.n);
    let fwd = forward_log_z(env);
    let rev = reverse_log_z(env)?;
    let path = lower_transverse_diagonal(p, q, n);
    let mut w = vec![0.0];
    let mut acc = 0.0;
    let mut next_anchor = 1;
    for step in path.windows(2) {
        if next_anchor >= n {
            break;
        }
        let ((i0, j0), (i1, j1)) = (step[0], step[1]);
        // Lower side: log U into a right step, -log V out of a down step.
        let lower = if i1 > i0 { fwd.get(i1, j1) - fwd.get(i0, j0) } else { -(fwd.get(i0, j0) - fwd.get(i1, j1)) };
        // Upper side (shifted by e1): log U~^{-1} across a right step, log V~ across a down step.
        let upper = if i1 > i0 {
            -(rev.get(i0 + 1, j0) - rev.get(i1 + 1, j1))
        } else {
            rev.get(i1 + 1, j1) - rev.get(i0 + 1, j0)
        };
        acc -= lower + upper;
        if (i1, j1) == anchor(p, q, n, next_anchor) {
            w.push(acc);
            next_anchor += 1;
        }
    }
    WalkPath::new(w)
}

/// Where to center a crossing window.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum CrossingCenter {
    /// Block of the favourite anchor `l_N`.
    FavouriteBlock,
    /// Block containing the most likely edge.
    ModeBlock,
}

/// Crossing law over blocks `center - K ..= center + K`, flattened as `k (p + q) + a`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CrossingWindow {
    pub k: usize,
    pub block_len: usize,
    pub mass: LatticeDist,
    pub tail: f64,
}

impl CrossingWindow {
    pub fn at(&self, block: i64, a: usize) -> f64 {
        self.mass.get(block * self.block_len as i64 + a as i64)
    }

    pub fn tv(&self, other: &CrossingWindow) -> f64 {
        crate::numerics::tv_distance(&self.mass, &other.mass).expect("nonnegative window mass")
    }
}

pub fn centered_crossing_window(law: &CrossingLaw, k: usize, center: CrossingCenter) -> CrossingWindow {
    let b = law.params.p + law.params.q;
    let c = match center {
        CrossingCenter::FavouriteBlock => law.favourite_block,
        CrossingCenter::ModeBlock => law.edges[law.mode].block,
    } as i64;
    let lo = -(k as i64) * b as i64;
    let len = (2 * k + 1) * b;
    let m = law.dist.mass();
    let mass: Vec<f64> = (0..len as i64)
        .map(|i| {
            let pos = c * b as i64 + lo + i;
            if pos >= 0 && (pos as usize) < m.len() {
                m[pos as usize]
            } else {
                0.0
            }
        })
        .collect();
    let inside: std::ops::Range<i64> = (c * b as i64 + lo)..(c * b as i64 + lo + len as i64);
    let tail = m.iter().enumerate().filter(|(i, _)| !inside.contains(&(*i as i64))).map(|(_, x)| x).sum();
    CrossingWindow { k, block_len: b, mass: LatticeDist::from_parts(lo, mass), tail }
}
