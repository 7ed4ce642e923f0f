//! Lattice environments of log-weights `omega(i, j)`.
//!
//! Each site draws from its own stream keyed by `(i, j)` only, so for a fixed
//! replica seed the weight at a site does not depend on the grid dimensions.
//! Grids of different sizes built from one seed are therefore coupled.

use std::io::{Read, Write};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{domain, usage, Error, Result};
use rand::SeedableRng;
use rand_xoshiro::SplitMix64;

use crate::sampling::{mix, LogGammaSampler, ModelParams, SeedSpec};

/// Point-to-point parameters: rectangle `[0, pN] x [0, qN]` with four boundary shapes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct P2PParams {
    pub p: usize,
    pub q: usize,
    pub n: usize,
    pub mu: f64,
    pub theta_n: f64,
    pub theta_s: f64,
}

impl P2PParams {
    pub fn new(p: usize, q: usize, n: usize, mu: f64, theta_n: f64, theta_s: f64) -> Result<Self> {
        let params = Self { p, q, n, mu, theta_n, theta_s };
        params.validate()?;
        Ok(params)
    }

    pub fn validate(&self) -> Result<()> {
        if self.p == 0 || self.q == 0 || self.n == 0 {
            return Err(domain(format!("p, q, N must be positive, got ({}, {}, {})", self.p, self.q, self.n)));
        }
        let ok = |t: f64| t.is_finite() && 0.0 < t && t < self.mu;
        if !(self.mu.is_finite() && ok(self.theta_n) && ok(self.theta_s)) {
            return Err(domain(format!(
                "P2P parameters need 0 < thetaN, thetaS < mu, got mu={} thetaN={} thetaS={}",
                self.mu, self.theta_n, self.theta_s
            )));
        }
        Ok(())
    }

    pub fn theta_e(&self) -> f64 {
        self.mu - self.theta_n
    }

    pub fn theta_w(&self) -> f64 {
        self.mu - self.theta_s
    }

    /// `pN`
    pub fn width(&self) -> usize {
        self.p * self.n
    }

    /// `qN`
    pub fn height(&self) -> usize {
        self.q * self.n
    }

    /// Mean block-walk increment `p(Psi0(thS) - Psi0(thN)) + q(Psi0(thE) - Psi0(thW))`.
    pub fn block_drift(&self) -> f64 {
        use crate::numerics::digamma;
        let d = |t: f64| digamma(t).unwrap();
        self.p as f64 * (d(self.theta_s) - d(self.theta_n)) + self.q as f64 * (d(self.theta_e()) - d(self.theta_w()))
    }
}

/// Boundary-condition regime of a grid.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Regime {
    PointToLine(ModelParams),
    PointToPoint(P2PParams),
}

impl Regime {
    /// Gamma shape of the inverse weight at `(i, j)`; `None` for unweighted corners.
    pub fn site_shape(&self, i: usize, j: usize) -> Option<f64> {
        match *self {
            Regime::PointToLine(p) => match (i, j) {
                (0, 0) => None,
                (_, 0) => Some(p.theta),
                (0, _) => Some(p.dual_theta()),
                _ => Some(p.mu),
            },
            Regime::PointToPoint(p) => {
                let (w, h) = (p.width(), p.height());
                if (i, j) == (0, 0) || (i, j) == (w, h) {
                    None
                } else if j == 0 {
                    Some(p.theta_s)
                } else if i == 0 {
                    Some(p.theta_w())
                } else if i == w {
                    Some(p.theta_e())
                } else if j == h {
                    Some(p.theta_n)
                } else {
                    Some(p.mu)
                }
            }
        }
    }
}

/// Per-site stream derivation for one replica.
///
/// Sites use a SplitMix64 stream keyed by a hash of `(replica, i, j)`; one
/// site needs only a handful of draws, so a cheap generator keeps grid
/// construction fast.
#[derive(Debug, Clone, Copy)]
pub struct SiteStreams {
    base: u64,
}

impl SiteStreams {
    pub fn new(replica: SeedSpec) -> Self {
        Self { base: mix(replica.master_seed, replica.stream_id) }
    }

    #[inline]
    pub fn key(i: usize, j: usize) -> u64 {
        ((i as u64) << 32) | j as u64
    }

    #[inline]
    pub fn rng(&self, i: usize, j: usize) -> SplitMix64 {
        SplitMix64::from_seed(mix(self.base, Self::key(i, j)).to_le_bytes())
    }
}

/// Cache of the (at most five) samplers a regime needs.
pub(crate) struct SiteSampler {
    regime: Regime,
    shapes: Vec<(f64, LogGammaSampler)>,
    streams: SiteStreams,
}

impl SiteSampler {
    pub(crate) fn new(seed: SeedSpec, regime: Regime) -> Result<Self> {
        let shapes = match regime {
            Regime::PointToLine(p) => {
                p.validate()?;
                vec![p.theta, p.dual_theta(), p.mu]
            }
            Regime::PointToPoint(p) => {
                p.validate()?;
                vec![p.theta_s, p.theta_w(), p.theta_e(), p.theta_n, p.mu]
            }
        };
        let shapes = shapes
            .into_iter()
            .map(|s| LogGammaSampler::new(s).map(|g| (s, g)))
            .collect::<Result<_>>()?;
        Ok(Self { regime, shapes, streams: SiteStreams::new(seed) })
    }

    #[inline]
    pub(crate) fn log_weight(&self, i: usize, j: usize) -> f64 {
        match self.regime.site_shape(i, j) {
            None => 0.0,
            Some(shape) => {
                let g = &self.shapes.iter().find(|(s, _)| *s == shape).unwrap().1;
                -g.sample_ln(&mut self.streams.rng(i, j))
            }
        }
    }
}

/// Dense grid of log-weights `omega(i, j)`, `0 <= i <= m`, `0 <= j <= n`.
#[derive(Debug, Clone, PartialEq)]
pub struct EnvGrid {
    cols: usize,
    rows: usize,
    logw: Vec<f64>,
    regime: Regime,
    seed: SeedSpec,
}

impl EnvGrid {
    fn build(seed: SeedSpec, m: usize, n: usize, regime: Regime) -> Result<Self> {
        let sampler = SiteSampler::new(seed, regime)?;
        let (cols, rows) = (m + 1, n + 1);
        let mut logw = vec![0.0; cols * rows];
        logw.par_chunks_mut(cols).enumerate().for_each(|(j, row)| {
            for (i, w) in row.iter_mut().enumerate() {
                *w = sampler.log_weight(i, j);
            }
        });
        Ok(Self { cols, rows, logw, regime, seed })
    }

    /// Build a grid from explicit weights (row `j` holds `omega(0..=m, j)`).
    pub fn from_weights(m: usize, n: usize, logw: Vec<f64>, regime: Regime, seed: SeedSpec) -> Result<Self> {
        if logw.len() != (m + 1) * (n + 1) {
            return Err(usage(format!("expected {} weights, got {}", (m + 1) * (n + 1), logw.len())));
        }
        if logw.iter().any(|w| !w.is_finite()) {
            return Err(Error::Invariant("grid weights must be finite".into()));
        }
        if let Regime::PointToPoint(p) = regime {
            if (p.width(), p.height()) != (m, n) {
                return Err(usage("P2P grid must span [0, pN] x [0, qN]"));
            }
        }
        Ok(Self { cols: m + 1, rows: n + 1, logw, regime, seed })
    }

    pub fn m(&self) -> usize {
        self.cols - 1
    }

    pub fn n(&self) -> usize {
        self.rows - 1
    }

    pub fn regime(&self) -> &Regime {
        &self.regime
    }

    pub fn seed(&self) -> SeedSpec {
        self.seed
    }

    #[inline]
    pub fn contains(&self, i: usize, j: usize) -> bool {
        i < self.cols && j < self.rows
    }

    #[inline]
    pub fn weight(&self, i: usize, j: usize) -> f64 {
        self.logw[j * self.cols + i]
    }

    pub fn weights(&self) -> &[f64] {
        &self.logw
    }

    /// Weight of `(pN, qN)` in the crossing decomposition. The model leaves the
    /// corner unweighted, so this is the stored `0`.
    pub fn corner_log_weight(&self) -> f64 {
        self.weight(self.m(), self.n())
    }

    /// Mirror `(i, j) -> (j, i)`. A point-to-line regime `theta` becomes `mu - theta`.
    pub fn transposed(&self) -> Result<EnvGrid> {
        let regime = match self.regime {
            Regime::PointToLine(p) => Regime::PointToLine(ModelParams::new(p.mu, p.dual_theta())?),
            Regime::PointToPoint(_) => return Err(usage("transposition is defined for point-to-line grids")),
        };
        let mut logw = vec![0.0; self.logw.len()];
        for j in 0..self.rows {
            for i in 0..self.cols {
                logw[i * self.rows + j] = self.weight(i, j);
            }
        }
        Ok(EnvGrid { cols: self.rows, rows: self.cols, logw, regime, seed: self.seed })
    }

    const MAGIC: &'static [u8; 8] = b"LGPGRID\0";
    const VERSION: u32 = 1;

    /// Binary dump: header then little-endian `f64` payload in row order.
    pub fn write_to<W: Write>(&self, mut w: W) -> Result<()> {
        w.write_all(Self::MAGIC)?;
        w.write_all(&Self::VERSION.to_le_bytes())?;
        w.write_all(&(self.cols as u64).to_le_bytes())?;
        w.write_all(&(self.rows as u64).to_le_bytes())?;
        match self.regime {
            Regime::PointToLine(p) => {
                w.write_all(&[0u8])?;
                for x in [p.mu, p.theta] {
                    w.write_all(&x.to_le_bytes())?;
                }
            }
            Regime::PointToPoint(p) => {
                w.write_all(&[1u8])?;
                for x in [p.mu, p.theta_n, p.theta_s] {
                    w.write_all(&x.to_le_bytes())?;
                }
                for x in [p.p, p.q, p.n] {
                    w.write_all(&(x as u64).to_le_bytes())?;
                }
            }
        }
        w.write_all(&self.seed.master_seed.to_le_bytes())?;
        w.write_all(&self.seed.stream_id.to_le_bytes())?;
        for x in &self.logw {
            w.write_all(&x.to_le_bytes())?;
        }
        Ok(())
    }

    pub fn read_from<R: Read>(mut r: R) -> Result<Self> {
        fn take<const N: usize, R: Read>(r: &mut R) -> Result<[u8; N]> {
            let mut b = [0u8; N];
            r.read_exact(&mut b)?;
            Ok(b)
        }
        let u64_of = |b: [u8; 8]| u64::from_le_bytes(b);
        if &take::<8, _>(&mut r)? != Self::MAGIC {
            return Err(Error::Format("bad magic".into()));
        }
        let version = u32::from_le_bytes(take::<4, _>(&mut r)?);
        if version != Self::VERSION {
            return Err(Error::Format(format!("unsupported version {version}")));
        }
        let cols = u64_of(take(&mut r)?) as usize;
        let rows = u64_of(take(&mut r)?) as usize;
        let regime = match take::<1, _>(&mut r)?[0] {
            0 => {
                let mu = f64::from_le_bytes(take(&mut r)?);
                let theta = f64::from_le_bytes(take(&mut r)?);
                Regime::PointToLine(ModelParams::new(mu, theta)?)
            }
            1 => {
                let mu = f64::from_le_bytes(take(&mut r)?);
                let theta_n = f64::from_le_bytes(take(&mut r)?);
                let theta_s = f64::from_le_bytes(take(&mut r)?);
                let p = u64_of(take(&mut r)?) as usize;
                let q = u64_of(take(&mut r)?) as usize;
                let n = u64_of(take(&mut r)?) as usize;
                Regime::PointToPoint(P2PParams::new(p, q, n, mu, theta_n, theta_s)?)
            }
            t => return Err(Error::Format(format!("unknown regime tag {t}"))),
        };
        let seed = SeedSpec::new(u64_of(take(&mut r)?), u64_of(take(&mut r)?));
        if cols == 0 || rows == 0 || cols.checked_mul(rows).is_none() {
            return Err(Error::Format("bad dimensions".into()));
        }
        let mut payload = vec![0u8; cols * rows * 8];
        r.read_exact(&mut payload)?;
        let logw = payload.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().unwrap())).collect();
        Self::from_weights(cols - 1, rows - 1, logw, regime, seed).map_err(|e| Error::Format(e.to_string()))
    }
}

/// Point-to-line grid `[0, m] x [0, n]` under b.c.(theta).
pub fn build_p2l_env(seed: SeedSpec, m: usize, n: usize, params: ModelParams) -> Result<EnvGrid> {
    EnvGrid::build(seed, m, n, Regime::PointToLine(params))
}

/// Point-to-point grid `[0, pN] x [0, qN]` under P2P-b.c.(Theta).
pub fn build_p2p_env(seed: SeedSpec, params: P2PParams) -> Result<EnvGrid> {
    EnvGrid::build(seed, params.width(), params.height(), Regime::PointToPoint(params))
}
