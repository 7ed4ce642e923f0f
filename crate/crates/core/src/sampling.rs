//! Seeded random streams and the model's primitive distributions.
//!
//! Every Monte Carlo quantity in the crate is a pure function of a
//! [`SeedSpec`]. Streams are derived by hashing `(master_seed, stream_id)`, so a
//! replica's draws do not depend on how many workers run or in which order.

use rand::{Rng, SeedableRng};
use rand_distr::{Distribution, Gamma};
use rand_xoshiro::Xoshiro256PlusPlus;
use serde::{Deserialize, Serialize};

use crate::error::{domain, Result};
use crate::numerics::{digamma, trigamma};

/// Generator behind every stream.
pub type StreamRng = Xoshiro256PlusPlus;

#[inline]
fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

#[inline]
pub(crate) fn mix(a: u64, b: u64) -> u64 {
    splitmix64(a ^ splitmix64(b ^ 0x6A09_E667_F3BC_C909).rotate_left(17))
}

/// Identifies one independent random stream.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SeedSpec {
    pub master_seed: u64,
    pub stream_id: u64,
}

impl SeedSpec {
    pub const fn new(master_seed: u64, stream_id: u64) -> Self {
        Self { master_seed, stream_id }
    }

    /// Fresh generator for this stream; same seed, same sequence.
    pub fn rng(&self) -> StreamRng {
        StreamRng::seed_from_u64(mix(self.master_seed, self.stream_id))
    }

    /// Namespace for sub-streams (e.g. lattice sites of one replica).
    pub fn child(&self, stream_id: u64) -> SeedSpec {
        SeedSpec {
            master_seed: mix(self.master_seed, self.stream_id),
            stream_id,
        }
    }
}

/// Point-to-line model parameters `0 < theta < mu`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    pub mu: f64,
    pub theta: f64,
}

impl ModelParams {
    pub fn new(mu: f64, theta: f64) -> Result<Self> {
        let p = Self { mu, theta };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.mu.is_finite() && self.theta.is_finite() && 0.0 < self.theta && self.theta < self.mu) {
            return Err(domain(format!(
                "model parameters need 0 < theta < mu, got mu={} theta={}",
                self.mu, self.theta
            )));
        }
        Ok(())
    }

    /// Shape of the vertical boundary weights, `mu - theta`.
    pub fn dual_theta(&self) -> f64 {
        self.mu - self.theta
    }

    pub fn is_equilibrium(&self) -> bool {
        (2.0 * self.theta - self.mu).abs() <= 1e-12 * self.mu
    }

    /// `E X = Psi_0(theta) - Psi_0(mu - theta)`.
    pub fn increment_mean(&self) -> f64 {
        digamma(self.theta).unwrap() - digamma(self.dual_theta()).unwrap()
    }

    /// `Var X = Psi_1(theta) + Psi_1(mu - theta)`; `2 Psi_1(mu/2)` at equilibrium.
    pub fn increment_variance(&self) -> f64 {
        trigamma(self.theta).unwrap() + trigamma(self.dual_theta()).unwrap()
    }
}

/// Sampler for `log G` with `G ~ Gamma(shape, 1)`.
///
/// Shapes below one use `G_a = G_{a+1} U^{1/a}` in log form, which keeps
/// `log G` finite where `G` itself would underflow.
#[derive(Debug, Clone, Copy)]
pub struct LogGammaSampler {
    shape: f64,
    boosted: bool,
    inner: Gamma<f64>,
}

impl LogGammaSampler {
    pub fn new(shape: f64) -> Result<Self> {
        if !(shape > 0.0) || !shape.is_finite() {
            return Err(domain(format!("gamma shape must be positive, got {shape}")));
        }
        let boosted = shape < 1.0;
        let inner_shape = if boosted { shape + 1.0 } else { shape };
        let inner = Gamma::new(inner_shape, 1.0).map_err(|e| domain(e.to_string()))?;
        Ok(Self { shape, boosted, inner })
    }

    pub fn shape(&self) -> f64 {
        self.shape
    }

    #[inline]
    pub fn sample_ln<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let g: f64 = self.inner.sample(rng);
        if self.boosted {
            let u: f64 = 1.0 - rng.random::<f64>();
            g.ln() + u.ln() / self.shape
        } else {
            g.ln()
        }
    }
}

/// One `Gamma(shape, 1)` variate.
pub fn gamma_sample<R: Rng + ?Sized>(rng: &mut R, shape: f64) -> Result<f64> {
    Ok(LogGammaSampler::new(shape)?.sample_ln(rng).exp())
}

/// One log-weight `omega = -log G`, `G ~ Gamma(shape, 1)`.
pub fn log_weight_sample<R: Rng + ?Sized>(rng: &mut R, shape: f64) -> Result<f64> {
    Ok(-LogGammaSampler::new(shape)?.sample_ln(rng))
}

/// Sampler for the representation-walk increment `X = log G_U - log G_V`.
///
/// `G_U ~ Gamma(theta)`, `G_V ~ Gamma(mu - theta)`. With this sign the endpoint
/// law is proportional to `exp(-S_k)` and the favourite endpoint is the argmin.
#[derive(Debug, Clone, Copy)]
pub struct IncrementSampler {
    params: ModelParams,
    u: LogGammaSampler,
    v: LogGammaSampler,
}

impl IncrementSampler {
    pub fn new(params: ModelParams) -> Result<Self> {
        params.validate()?;
        Ok(Self {
            params,
            u: LogGammaSampler::new(params.theta)?,
            v: LogGammaSampler::new(params.dual_theta())?,
        })
    }

    pub fn params(&self) -> ModelParams {
        self.params
    }

    #[inline]
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        self.u.sample_ln(rng) - self.v.sample_ln(rng)
    }
}

pub fn walk_increment_sample<R: Rng + ?Sized>(rng: &mut R, params: ModelParams) -> Result<f64> {
    Ok(IncrementSampler::new(params)?.sample(rng))
}
