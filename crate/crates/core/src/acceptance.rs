//! The acceptance suite: fifteen statistical and exact checks run at fixed
//! sizes and tolerances from one master seed.

use std::collections::BTreeMap;

use serde::Serialize;

use crate::conditioned_walk::{argmin_walk, sample_walk, xi_n, DEFAULT_EXCURSION_CAP};
use crate::environment::{build_p2p_env, P2PParams};
use crate::error::Result;
use crate::limit_law::{centered_endpoint_window, mean_window, tail_mass_from_mode, xi_limit_equilibrium};
use crate::numerics::{arcsine_cdf, gamma_cdf, ks_statistic, ks_two_sample, trigamma, EmpiricalSample};
use crate::p2p::{crossing_identity_residual, crossing_law, m_n_scaled, m_n_statistic};
use crate::partition::{default_s_grid, endpoint_mass_in, Scale, StreamingDp};
use crate::registry::{conditioned_sampler, replicate, DpPipeline, EndpointPipeline, SamplerConfig, WalkPipeline};
use crate::sampling::{ModelParams, SeedSpec};

/// Default master seed of the suite.
pub const DEFAULT_SEED: u64 = 7;

#[derive(Debug, Clone, Copy)]
pub struct SuiteConfig {
    pub master_seed: u64,
}

impl Default for SuiteConfig {
    fn default() -> Self {
        Self { master_seed: DEFAULT_SEED }
    }
}

impl SuiteConfig {
    fn stream(&self, id: u8, sub: u64) -> SeedSpec {
        SeedSpec::new(self.master_seed, ((id as u64) << 16) | sub)
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct CriterionReport {
    pub id: u8,
    pub title: &'static str,
    pub passed: bool,
    pub detail: String,
    pub metrics: BTreeMap<String, f64>,
}

impl CriterionReport {
    pub fn line(&self) -> String {
        let tag = if self.passed { "PASS" } else { "FAIL" };
        format!("[{tag}] {:02} {}: {}", self.id, self.title, self.detail)
    }
}

pub struct Criterion {
    pub id: u8,
    pub title: &'static str,
    pub run: fn(&SuiteConfig) -> Result<CriterionReport>,
}

impl Criterion {
    fn report(&self, passed: bool, detail: String, metrics: &[(&str, f64)]) -> CriterionReport {
        CriterionReport {
            id: self.id,
            title: self.title,
            passed,
            detail,
            metrics: metrics.iter().map(|(k, v)| (k.to_string(), *v)).collect(),
        }
    }
}

fn sample(xs: Vec<f64>) -> Result<EmpiricalSample> {
    EmpiricalSample::new(xs)
}

fn frac(xs: impl Iterator<Item = bool>) -> f64 {
    let (mut hit, mut n) = (0usize, 0usize);
    for x in xs {
        hit += x as usize;
        n += 1;
    }
    hit as f64 / n as f64
}

fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

fn eq_params() -> ModelParams {
    ModelParams { mu: 2.0, theta: 1.0 }
}

fn drift_params() -> ModelParams {
    ModelParams { mu: 2.0, theta: 1.5 }
}

fn c01(cfg: &SuiteConfig) -> Result<CriterionReport> {
    let params = P2PParams::new(2, 1, 64, 2.0, 1.0, 1.0)?;
    let res = replicate(cfg.stream(1, 0), 100, |s| crossing_identity_residual(&build_p2p_env(s, params)?))?;
    let worst = res.iter().copied().fold(0.0, f64::max);
    Ok(CRITERIA[0].report(
        worst < 1e-9,
        format!("max residual {worst:.2e} over 100 grids (< 1e-9)"),
        &[("max_residual", worst)],
    ))
}

fn c02(cfg: &SuiteConfig) -> Result<CriterionReport> {
    let p = eq_params();
    let n = 128;
    let reps = 2000;
    let ratios = replicate(cfg.stream(2, 0), reps, |s| {
        let mut dp = StreamingDp::new(s, p)?;
        dp.advance_to(n)?;
        Ok((dp.log_u(), dp.log_v()))
    })?;
    let u = sample(ratios.iter().flat_map(|r| r.0.iter().map(|x| (-x).exp())).collect())?;
    let v = sample(ratios.iter().flat_map(|r| r.1.iter().map(|x| (-x).exp())).collect())?;
    let ku = ks_statistic(&u, |x| gamma_cdf(x, p.theta).unwrap());
    let kv = ks_statistic(&v, |x| gamma_cdf(x, p.dual_theta()).unwrap());
    let tol = 1.63 / ((reps * (n + 1)) as f64).sqrt();
    Ok(CRITERIA[1].report(
        ku.d < tol && kv.d < tol,
        format!("D_U={:.5} D_V={:.5} (< {tol:.5}), {} and {} pooled ratios", ku.d, kv.d, u.len(), v.len()),
        &[("d_u", ku.d), ("d_v", kv.d), ("tolerance", tol)],
    ))
}

fn c03(cfg: &SuiteConfig) -> Result<CriterionReport> {
    let p = eq_params();
    let n = 256;
    let dp = replicate(cfg.stream(3, 0), 10_000, |s| Ok(DpPipeline.law(s, p, n)?.dist().max_mass()))?;
    let walk = replicate(cfg.stream(3, 1), 10_000, |s| Ok(xi_n(&sample_walk(s, n, p)?).max_mass()))?;
    let ks = ks_two_sample(&sample(dp)?, &sample(walk)?);
    Ok(CRITERIA[2].report(ks.d < 0.025, format!("D={:.4} (< 0.025), p={:.3}", ks.d, ks.p), &[("d", ks.d)]))
}

fn c04(cfg: &SuiteConfig) -> Result<CriterionReport> {
    let n = 4096;
    let s = replicate(cfg.stream(4, 0), 10_000, |s| Ok(argmin_walk(&sample_walk(s, n, eq_params())?) as f64 / n as f64))?;
    let ks = ks_statistic(&sample(s)?, |x| arcsine_cdf(x).unwrap());
    Ok(CRITERIA[3].report(ks.d < 0.03, format!("D={:.4} (< 0.03), p={:.3}", ks.d, ks.p), &[("d", ks.d)]))
}

fn c05(cfg: &SuiteConfig) -> Result<CriterionReport> {
    let mirror = ModelParams { mu: 2.0, theta: 0.5 };
    let mut metrics = Vec::new();
    let mut pass = true;
    let mut parts = Vec::new();
    for (i, &n) in [512usize, 2048, 8192].iter().enumerate() {
        let up = replicate(cfg.stream(5, i as u64), 2000, |s| Ok(argmin_walk(&sample_walk(s, n, drift_params())?)))?;
        let down = replicate(cfg.stream(5, 10 + i as u64), 2000, |s| Ok(argmin_walk(&sample_walk(s, n, mirror)?)))?;
        let fu = frac(up.iter().map(|&l| l <= 50));
        let fd = frac(down.iter().map(|&l| n - l <= 50));
        pass &= fu >= 0.95 && fd >= 0.95;
        parts.push(format!("n={n}: {fu:.4}/{fd:.4}"));
        metrics.push((n, fu, fd));
    }
    let m: Vec<(String, f64)> = metrics
        .iter()
        .flat_map(|(n, a, b)| [(format!("p_ln_le_50_n{n}"), *a), (format!("p_mirror_le_50_n{n}"), *b)])
        .collect();
    let mut r = CRITERIA[4].report(pass, format!("P(l_n<=50)/P(n-l_n<=50) {} (>= 0.95)", parts.join(", ")), &[]);
    r.metrics = m.into_iter().collect();
    Ok(r)
}

fn c06(cfg: &SuiteConfig) -> Result<CriterionReport> {
    let n = 8192;
    let rates = replicate(cfg.stream(6, 0), 200, |s| {
        Ok(WalkPipeline.law(s, drift_params(), n)?.deviation_profile(&[0.5], Scale::Linear)?[0])
    })?;
    let m = mean(&rates);
    Ok(CRITERIA[5].report((m - 1.0).abs() <= 0.05, format!("mean rate {m:.4} (1.00 +/- 0.05)"), &[("mean_rate", m)]))
}

fn c07(cfg: &SuiteConfig) -> Result<CriterionReport> {
    let n = 8192;
    let grid = default_s_grid();
    let spacing = grid[1] - grid[0];
    let tol = 2.0 * spacing * (2.0 * trigamma(1.0)?).sqrt();
    let bound = ((n + 1) as f64).ln() / (n as f64).sqrt();
    let rows = replicate(cfg.stream(7, 0), 200, |s| {
        let law = WalkPipeline.law(s, eq_params(), n)?;
        let at_mode = -law.log_mass()[law.mode()] / (n as f64).sqrt();
        let min = law.deviation_profile(&grid, Scale::Sqrt)?.into_iter().fold(f64::INFINITY, f64::min);
        Ok((at_mode, min))
    })?;
    let mode_ok = rows.iter().all(|(a, _)| *a >= 0.0 && *a <= bound);
    let close = frac(rows.iter().map(|(_, m)| *m <= tol));
    let mut mins: Vec<f64> = rows.iter().map(|r| r.1).collect();
    mins.sort_by(f64::total_cmp);
    let q95 = mins[(0.95 * mins.len() as f64) as usize - 1];
    Ok(CRITERIA[6].report(
        mode_ok && close >= 0.95,
        format!(
            "mode value in [0, {bound:.4}]: {mode_ok}; grid minimum <= {tol:.4} in {:.1}% (>= 95%), 95th percentile {q95:.4}",
            100.0 * close
        ),
        &[("fraction_close", close), ("tolerance", tol), ("q95_min", q95)],
    ))
}

fn c08(cfg: &SuiteConfig) -> Result<CriterionReport> {
    let n = 10_000;
    let target = 2.0 * trigamma(1.0)?;
    let rows = replicate(cfg.stream(8, 0), 1000, |s| {
        let w = sample_walk(s, n, eq_params())?;
        let incs: Vec<f64> = w.increments().collect();
        let m = mean(&incs);
        let qv = incs.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (n - 1) as f64;
        Ok((qv, w.positions()[n]))
    })?;
    let pooled = mean(&rows.iter().map(|r| r.0).collect::<Vec<_>>());
    let ends: Vec<f64> = rows.iter().map(|r| r.1).collect();
    let naive = sample(ends)?.variance() / n as f64;
    let rel = pooled / target - 1.0;
    Ok(CRITERIA[7].report(
        rel.abs() <= 0.03,
        format!(
            "Var(S_n)/n = {pooled:.4} from pooled increments ({:+.2}% vs pi^2/3, tol 3%); endpoint-only estimate {naive:.4} ({:+.2}%)",
            100.0 * rel,
            100.0 * (naive / target - 1.0)
        ),
        &[("pooled", pooled), ("endpoint_only", naive), ("target", target)],
    ))
}

fn c09(cfg: &SuiteConfig) -> Result<CriterionReport> {
    let k = 5;
    let scfg = SamplerConfig { excursion_cap: DEFAULT_EXCURSION_CAP, horizon: 400 };
    let tanaka = conditioned_sampler("tanaka", scfg)?;
    let oracle = conditioned_sampler("rejection", scfg)?;
    let a = replicate(cfg.stream(9, 0), 5000, |s| Ok(tanaka.sample(s, k, eq_params())?.into_positions()))?;
    let b = replicate(cfg.stream(9, 1), 5000, |s| Ok(oracle.sample(s, k, eq_params())?.into_positions()))?;
    let mut ds = Vec::new();
    for i in 1..=k {
        let ks = ks_two_sample(&sample(a.iter().map(|p| p[i]).collect())?, &sample(b.iter().map(|p| p[i]).collect())?);
        ds.push(ks.d);
    }
    let worst = ds.iter().copied().fold(0.0, f64::max);
    let metrics: Vec<(String, f64)> = ds.iter().enumerate().map(|(i, d)| (format!("d_k{}", i + 1), *d)).collect();
    let mut r = CRITERIA[8].report(
        worst < 0.03,
        format!("D_k = {} (all < 0.03)", ds.iter().map(|d| format!("{d:.4}")).collect::<Vec<_>>().join(", ")),
        &[],
    );
    r.metrics = metrics.into_iter().collect();
    Ok(r)
}

fn c10(cfg: &SuiteConfig) -> Result<CriterionReport> {
    let k = 15;
    let p = eq_params();
    let pairs = replicate(cfg.stream(10, 0), 2000, |s| {
        let laws = DpPipeline.laws(s, p, &[512, 2048])?;
        Ok((centered_endpoint_window(&laws[0], k), centered_endpoint_window(&laws[1], k)))
    })?;
    let (small, large): (Vec<_>, Vec<_>) = pairs.into_iter().unzip();
    let tv = mean_window(&small)?.tv(&mean_window(&large)?);
    let paired = mean(&small.iter().zip(&large).map(|(a, b)| a.tv(b)).collect::<Vec<_>>());

    let xi0 = replicate(cfg.stream(10, 1), 10_000, |s| Ok(xi_limit_equilibrium(s, k, p, DEFAULT_EXCURSION_CAP)?.window.center()))?;
    let modes = replicate(cfg.stream(10, 2), 10_000, |s| Ok(WalkPipeline.law(s, p, 2048)?.dist().max_mass()))?;
    let (m_xi, m_mode) = (mean(&xi0), mean(&modes));
    let ks = ks_two_sample(&sample(xi0)?, &sample(modes)?);
    Ok(CRITERIA[9].report(
        tv < 0.05 && ks.d < 0.03,
        format!(
            "TV(mean window n=512, n=2048) = {tv:.4} (< 0.05; per-replica paired TV {paired:.3}); xi_0 vs mode mass at n=2048: D={:.4} (< 0.03), means {m_xi:.4}/{m_mode:.4}",
            ks.d
        ),
        &[("tv_mean_windows", tv), ("paired_tv", paired), ("d_xi0", ks.d), ("mean_xi0", m_xi), ("mean_mode_mass", m_mode)],
    ))
}

fn c11(cfg: &SuiteConfig) -> Result<CriterionReport> {
    let p = eq_params();
    let i_n = |sub: u64, n: usize| replicate(cfg.stream(11, sub), 10_000, |s| Ok(endpoint_mass_in(&WalkPipeline.law(s, p, n - 1)?)));
    let a = i_n(0, 512)?;
    let b = i_n(1, 2048)?;
    let pa = frac(a.iter().map(|x| *x > 0.05));
    let pb = frac(b.iter().map(|x| *x > 0.05));
    let ks = ks_two_sample(&sample(a)?, &sample(b)?);
    Ok(CRITERIA[10].report(
        ks.d < 0.03 && pa > 0.9 && pb > 0.9,
        format!("D(I_512, I_2048)={:.4} (< 0.03); P(I_n > 0.05) = {pa:.4}/{pb:.4} (> 0.9)", ks.d),
        &[("d", ks.d), ("p_512", pa), ("p_2048", pb)],
    ))
}

fn c12(cfg: &SuiteConfig) -> Result<CriterionReport> {
    let ks = [5usize, 10, 15, 20, 25];
    let rows = replicate(cfg.stream(12, 0), 2000, |s| {
        let law = WalkPipeline.law(s, eq_params(), 2048)?;
        Ok(ks.iter().map(|&k| tail_mass_from_mode(&law, k)).collect::<Vec<_>>())
    })?;
    let means: Vec<f64> = (0..ks.len()).map(|i| mean(&rows.iter().map(|r| r[i]).collect::<Vec<_>>())).collect();
    let last = *means.last().unwrap();
    let decreasing = means.windows(2).all(|w| w[1] <= w[0]);
    Ok(CRITERIA[11].report(
        last <= 0.05 && decreasing,
        format!(
            "mean tail mass at K=5..25: {} (K=25 <= 0.05, decreasing: {decreasing})",
            means.iter().map(|m| format!("{m:.4}")).collect::<Vec<_>>().join(", ")
        ),
        &[("tail_k25", last)],
    ))
}

fn c13(cfg: &SuiteConfig) -> Result<CriterionReport> {
    let params = P2PParams::new(2, 1, 512, 2.0, 1.0, 1.0)?;
    let xs = replicate(cfg.stream(13, 0), 4000, |s| Ok(m_n_scaled(&crossing_law(&build_p2p_env(s, params)?)?)))?;
    let ks = ks_statistic(&sample(xs)?, |x| arcsine_cdf(x.clamp(0.0, 1.0)).unwrap());
    Ok(CRITERIA[12].report(ks.d < 0.04, format!("D={:.4} (< 0.04), p={:.3}", ks.d, ks.p), &[("d", ks.d)]))
}

fn c14(cfg: &SuiteConfig) -> Result<CriterionReport> {
    let run = |sub: u64, n: usize| -> Result<Vec<f64>> {
        let params = P2PParams::new(2, 1, n, 2.0, 0.5, 1.5)?;
        let shift = (2 * params.p * params.q * n) as i64;
        replicate(cfg.stream(14, sub), 2000, |s| Ok((m_n_statistic(&crossing_law(&build_p2p_env(s, params)?)?) + shift) as f64))
    };
    let a = run(0, 128)?;
    let b = run(1, 512)?;
    let (ma, mb) = (mean(&a), mean(&b));
    let ks = ks_two_sample(&sample(a)?, &sample(b)?);
    Ok(CRITERIA[13].report(
        ks.d < 0.05,
        format!("D(m_N+2pqN at N=128, N=512)={:.4} (< 0.05), means {ma:.2}/{mb:.2}", ks.d),
        &[("d", ks.d)],
    ))
}

fn c15(cfg: &SuiteConfig) -> Result<CriterionReport> {
    let kmax = 10_000;
    let tanaka = conditioned_sampler("tanaka", SamplerConfig::default())?;
    let rows = replicate(cfg.stream(15, 0), 10_000, |s| {
        let w = tanaka.sample(s, kmax, eq_params())?;
        Ok((100..=kmax).all(|k| w.positions()[k] >= (k as f64).powf(0.4)))
    })?;
    let f = frac(rows.into_iter());
    Ok(CRITERIA[14].report(
        f >= 0.95,
        format!("{:.2}% of paths stay above k^0.4 on [100, 10^4] (>= 95%)", 100.0 * f),
        &[("fraction", f)],
    ))
}

pub static CRITERIA: &[Criterion] = &[
    Criterion { id: 1, title: "crossing identity", run: c01 },
    Criterion { id: 2, title: "stationary ratios", run: c02 },
    Criterion { id: 3, title: "walk/DP equality in law", run: c03 },
    Criterion { id: 4, title: "arcsine law of l_n/n", run: c04 },
    Criterion { id: 5, title: "tight favourite endpoint off equilibrium", run: c05 },
    Criterion { id: 6, title: "large-deviation rate", run: c06 },
    Criterion { id: 7, title: "diffusive deviation profile", run: c07 },
    Criterion { id: 8, title: "diffusion constant", run: c08 },
    Criterion { id: 9, title: "Tanaka vs rejection", run: c09 },
    Criterion { id: 10, title: "endpoint window stabilization", run: c10 },
    Criterion { id: 11, title: "endpoint mass I_n", run: c11 },
    Criterion { id: 12, title: "tightness around the mode", run: c12 },
    Criterion { id: 13, title: "arcsine crossing location", run: c13 },
    Criterion { id: 14, title: "tight crossing location off equilibrium", run: c14 },
    Criterion { id: 15, title: "growth of the conditioned walk", run: c15 },
];

pub fn criterion(id: u8) -> Option<&'static Criterion> {
    CRITERIA.iter().find(|c| c.id == id)
}

/// Run the selected criteria (all when `ids` is empty) in id order.
pub fn run_suite(cfg: &SuiteConfig, ids: &[u8]) -> Result<Vec<CriterionReport>> {
    CRITERIA.iter().filter(|c| ids.is_empty() || ids.contains(&c.id)).map(|c| (c.run)(cfg)).collect()
}
