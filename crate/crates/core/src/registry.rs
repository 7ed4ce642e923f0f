//! Named, runtime-selectable implementations of the two places where the crate
//! offers interchangeable algorithms: producing endpoint laws and drawing
//! conditioned walks.

use rayon::prelude::*;

use crate::conditioned_walk::{
    rejection_conditioned_sample, sample_walk, tanaka_up_sample, ConditionedPath, DEFAULT_EXCURSION_CAP,
};
use crate::error::{usage, Result};
use crate::partition::{streaming_endpoint_laws, EndpointLaw};
use crate::sampling::{ModelParams, SeedSpec};

/// Produces point-to-line endpoint laws for one replica.
pub trait EndpointPipeline: Send + Sync {
    fn name(&self) -> &'static str;

    /// Laws at each requested length, in request order.
    fn laws(&self, seed: SeedSpec, params: ModelParams, ns: &[usize]) -> Result<Vec<EndpointLaw>>;

    fn law(&self, seed: SeedSpec, params: ModelParams, n: usize) -> Result<EndpointLaw> {
        Ok(self.laws(seed, params, &[n])?.pop().unwrap())
    }
}

/// Exact polymer DP on a sampled environment; all lengths share one environment.
pub struct DpPipeline;

impl EndpointPipeline for DpPipeline {
    fn name(&self) -> &'static str {
        "dp"
    }

    fn laws(&self, seed: SeedSpec, params: ModelParams, ns: &[usize]) -> Result<Vec<EndpointLaw>> {
        streaming_endpoint_laws(seed, params, ns)
    }
}

/// Law proportional to `exp(-S_k)` for a representation walk; each length uses
/// its own independent walk.
pub struct WalkPipeline;

impl EndpointPipeline for WalkPipeline {
    fn name(&self) -> &'static str {
        "walk"
    }

    fn laws(&self, seed: SeedSpec, params: ModelParams, ns: &[usize]) -> Result<Vec<EndpointLaw>> {
        ns.iter()
            .map(|&n| Ok(EndpointLaw::from_walk(sample_walk(seed.child(n as u64), n, params)?.positions())))
            .collect()
    }
}

pub const ENDPOINT_PIPELINES: &[&str] = &["dp", "walk"];

pub fn endpoint_pipeline(name: &str) -> Result<Box<dyn EndpointPipeline>> {
    match name {
        "dp" => Ok(Box::new(DpPipeline)),
        "walk" => Ok(Box::new(WalkPipeline)),
        other => Err(usage(format!("unknown pipeline '{other}', expected one of {ENDPOINT_PIPELINES:?}"))),
    }
}

/// Draws the first `K + 1` values of the walk conditioned to stay nonnegative.
pub trait ConditionedSampler: Send + Sync {
    fn name(&self) -> &'static str;
    fn sample(&self, seed: SeedSpec, k: usize, params: ModelParams) -> Result<ConditionedPath>;
}

pub struct TanakaSampler {
    pub cap: u64,
}

impl ConditionedSampler for TanakaSampler {
    fn name(&self) -> &'static str {
        "tanaka"
    }

    fn sample(&self, seed: SeedSpec, k: usize, params: ModelParams) -> Result<ConditionedPath> {
        Ok(tanaka_up_sample(seed, k, params, self.cap)?.path)
    }
}

/// Conditions on staying nonnegative up to a finite horizon.
pub struct RejectionSampler {
    pub horizon: usize,
}

impl ConditionedSampler for RejectionSampler {
    fn name(&self) -> &'static str {
        "rejection"
    }

    fn sample(&self, seed: SeedSpec, k: usize, params: ModelParams) -> Result<ConditionedPath> {
        rejection_conditioned_sample(seed, self.horizon.max(k), k, params)
    }
}

/// Settings shared by the conditioned samplers.
#[derive(Debug, Clone, Copy)]
pub struct SamplerConfig {
    pub excursion_cap: u64,
    pub horizon: usize,
}

impl Default for SamplerConfig {
    fn default() -> Self {
        Self { excursion_cap: DEFAULT_EXCURSION_CAP, horizon: 400 }
    }
}

pub const CONDITIONED_SAMPLERS: &[&str] = &["tanaka", "rejection"];

pub fn conditioned_sampler(name: &str, cfg: SamplerConfig) -> Result<Box<dyn ConditionedSampler>> {
    match name {
        "tanaka" => Ok(Box::new(TanakaSampler { cap: cfg.excursion_cap })),
        "rejection" => Ok(Box::new(RejectionSampler { horizon: cfg.horizon })),
        other => Err(usage(format!("unknown sampler '{other}', expected one of {CONDITIONED_SAMPLERS:?}"))),
    }
}

/// Run `f` on replicas `0..replicas` with streams `seed.child(r)`; results come
/// back in replica order regardless of scheduling.
pub fn replicate<T, F>(seed: SeedSpec, replicas: usize, f: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(SeedSpec) -> Result<T> + Sync,
{
    (0..replicas as u64).into_par_iter().map(|r| f(seed.child(r))).collect()
}
