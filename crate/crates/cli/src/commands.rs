use anyhow::{bail, Result};
use serde_json::json;

use lgpolymer::acceptance::{run_suite, SuiteConfig};
use lgpolymer::conditioned_walk::DEFAULT_EXCURSION_CAP;
use lgpolymer::environment::{build_p2p_env, P2PParams};
use lgpolymer::limit_law::{centered_endpoint_window, mean_window, xi_limit_drift, xi_limit_equilibrium};
use lgpolymer::numerics::{arcsine_cdf, gamma_cdf, ks_statistic, EmpiricalSample};
use lgpolymer::p2p::{centered_crossing_window, crossing_law, m_n_scaled, m_n_statistic, CrossingCenter};
use lgpolymer::partition::{default_s_grid, endpoint_mass_in, Scale, StreamingDp};
use lgpolymer::registry::{endpoint_pipeline, replicate};
use lgpolymer::sampling::{ModelParams, SeedSpec};

use crate::output::{emit, num, Artifact};
use crate::{Cli, Command, ScaleArg};

/// Returns `Ok(false)` when the command ran but reports failure (acceptance).
pub fn run(cli: &Cli) -> Result<bool> {
    let config = serde_json::to_value(cli)?;
    let seed = SeedSpec::new(cli.seed, 0);
    let (artifact, ok) = match &cli.command {
        Command::Endpoint { model, n, replicas, k, pipeline } => {
            (endpoint(seed, params(model.mu, model.theta)?, *n, *replicas, *k, pipeline)?, true)
        }
        Command::Arcsine { model, n, replicas, pipeline } => {
            (arcsine(seed, params(model.mu, model.theta)?, *n, *replicas, pipeline)?, true)
        }
        Command::Ldp { model, n, s, replicas, scale, pipeline } => {
            let grid = if s.is_empty() { default_s_grid() } else { s.clone() };
            let scale = match scale {
                ScaleArg::Sqrt => Scale::Sqrt,
                ScaleArg::Linear => Scale::Linear,
            };
            (ldp(seed, params(model.mu, model.theta)?, *n, &grid, *replicas, scale, pipeline)?, true)
        }
        Command::Limit { model, k, samples } => (limit(seed, params(model.mu, model.theta)?, *k, *samples)?, true),
        Command::P2p { p, q, big_n, mu, theta_n, theta_s, replicas, k } => {
            let pp = P2PParams::new(*p, *q, *big_n, *mu, *theta_n, *theta_s)?;
            (p2p(seed, pp, *replicas, *k)?, true)
        }
        Command::Stationarity { model, n, replicas } => {
            (stationarity(seed, params(model.mu, model.theta)?, *n, *replicas)?, true)
        }
        Command::VerifyAll { only } => verify(cli.seed, only)?,
    };
    emit(&artifact.render(cli.format, &config), cli.output.as_deref())?;
    Ok(ok)
}

fn params(mu: f64, theta: f64) -> Result<ModelParams> {
    Ok(ModelParams::new(mu, theta)?)
}

fn positive(name: &str, v: usize) -> Result<()> {
    if v == 0 {
        return Err(lgpolymer::Error::Usage(format!("--{name} must be positive")).into());
    }
    Ok(())
}

fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

fn endpoint(seed: SeedSpec, p: ModelParams, n: usize, replicas: usize, k: usize, pipeline: &str) -> Result<Artifact> {
    positive("n", n)?;
    positive("replicas", replicas)?;
    let pipe = endpoint_pipeline(pipeline)?;
    let reps = replicate(seed, replicas, |s| {
        let laws = pipe.laws(s, p, &[n - 1, n])?;
        let i_n = endpoint_mass_in(&laws[0]);
        Ok((centered_endpoint_window(&laws[1], k), laws[1].mode(), i_n))
    })?;
    let mut a = Artifact::new(vec!["replica", "k", "mass", "tail_bound", "l_n", "i_n"]);
    for (r, (w, l, i_n)) in reps.iter().enumerate() {
        for off in -(k as i64)..=k as i64 {
            a.push(vec![r.to_string(), off.to_string(), num(w.at(off)), num(w.tail_bound), l.to_string(), num(*i_n)]);
        }
    }
    let windows: Vec<_> = reps.iter().map(|r| r.0.clone()).collect();
    let m = mean_window(&windows)?;
    a.summary = json!({
        "pipeline": pipe.name(),
        "mean_window": m.mass.mass(),
        "mean_tail": m.tail_bound,
        "mean_i_n": mean(&reps.iter().map(|r| r.2).collect::<Vec<_>>()),
    });
    Ok(a)
}

fn arcsine(seed: SeedSpec, p: ModelParams, n: usize, replicas: usize, pipeline: &str) -> Result<Artifact> {
    positive("n", n)?;
    positive("replicas", replicas)?;
    let pipe = endpoint_pipeline(pipeline)?;
    let modes = replicate(seed, replicas, |s| Ok(pipe.law(s, p, n)?.mode()))?;
    let xs: Vec<f64> = modes.iter().map(|&l| l as f64 / n as f64).collect();
    let ks = ks_statistic(&EmpiricalSample::new(xs)?, |x| arcsine_cdf(x.clamp(0.0, 1.0)).unwrap());
    let mut a = Artifact::new(vec!["replica", "l_n", "s"]);
    for (r, &l) in modes.iter().enumerate() {
        a.push(vec![r.to_string(), l.to_string(), num(l as f64 / n as f64)]);
    }
    a.summary = json!({ "pipeline": pipe.name(), "equilibrium": p.is_equilibrium(), "D": ks.d, "p_value": ks.p });
    Ok(a)
}

fn ldp(
    seed: SeedSpec,
    p: ModelParams,
    n: usize,
    grid: &[f64],
    replicas: usize,
    scale: Scale,
    pipeline: &str,
) -> Result<Artifact> {
    positive("n", n)?;
    positive("replicas", replicas)?;
    let pipe = endpoint_pipeline(pipeline)?;
    let rows = replicate(seed, replicas, |s| pipe.law(s, p, n)?.deviation_profile(grid, scale))?;
    let mut a = Artifact::new(vec!["replica", "s", "rate"]);
    for (r, row) in rows.iter().enumerate() {
        for (s, v) in grid.iter().zip(row) {
            a.push(vec![r.to_string(), num(*s), num(*v)]);
        }
    }
    let means: Vec<f64> = (0..grid.len()).map(|i| mean(&rows.iter().map(|r| r[i]).collect::<Vec<_>>())).collect();
    a.summary = json!({
        "pipeline": pipe.name(),
        "scale": match scale { Scale::Sqrt => "sqrt", Scale::Linear => "linear" },
        "s": grid,
        "mean_rate": means,
        "increment_mean": p.increment_mean(),
    });
    Ok(a)
}

fn limit(seed: SeedSpec, p: ModelParams, k: usize, samples: usize) -> Result<Artifact> {
    positive("samples", samples)?;
    let draws = replicate(seed, samples, |s| {
        if p.is_equilibrium() {
            Ok(xi_limit_equilibrium(s, k, p, DEFAULT_EXCURSION_CAP)?)
        } else {
            Ok(xi_limit_drift(s, k, p)?)
        }
    })?;
    let mut a = Artifact::new(vec!["sample", "k", "mass", "tail_bound"]);
    for (r, d) in draws.iter().enumerate() {
        for off in -(k as i64)..=k as i64 {
            a.push(vec![r.to_string(), off.to_string(), num(d.window.at(off)), num(d.window.tail_bound)]);
        }
    }
    let windows: Vec<_> = draws.iter().map(|d| d.window.clone()).collect();
    let m = mean_window(&windows)?;
    a.summary = json!({
        "equilibrium": p.is_equilibrium(),
        "mean_window": m.mass.mass(),
        "mean_tail_bound": m.tail_bound,
        "capped_excursions": draws.iter().map(|d| d.capped as u64).sum::<u64>(),
    });
    Ok(a)
}

fn p2p(seed: SeedSpec, pp: P2PParams, replicas: usize, k: usize) -> Result<Artifact> {
    positive("replicas", replicas)?;
    let reps = replicate(seed, replicas, |s| {
        let law = crossing_law(&build_p2p_env(s, pp)?)?;
        let w = centered_crossing_window(&law, k, CrossingCenter::FavouriteBlock);
        Ok((m_n_statistic(&law), m_n_scaled(&law), law.mode_mass(), w))
    })?;
    let b = pp.p + pp.q;
    let mut a = Artifact::new(vec!["replica", "N", "p", "q", "thetaN", "thetaS", "m_N", "mode_mass", "k", "a", "mass"]);
    for (r, (m, _, mode_mass, w)) in reps.iter().enumerate() {
        for blk in -(k as i64)..=k as i64 {
            for off in 0..b {
                a.push(vec![
                    r.to_string(),
                    pp.n.to_string(),
                    pp.p.to_string(),
                    pp.q.to_string(),
                    num(pp.theta_n),
                    num(pp.theta_s),
                    m.to_string(),
                    num(*mode_mass),
                    blk.to_string(),
                    off.to_string(),
                    num(w.at(blk, off)),
                ]);
            }
        }
    }
    let scaled: Vec<f64> = reps.iter().map(|r| r.1).collect();
    let mut summary = json!({
        "block_drift": pp.block_drift(),
        "mean_mode_mass": mean(&reps.iter().map(|r| r.2).collect::<Vec<_>>()),
        "mean_tail": mean(&reps.iter().map(|r| r.3.tail).collect::<Vec<_>>()),
        "mean_m_N_scaled": mean(&scaled),
    });
    if pp.block_drift().abs() < 1e-12 {
        let ks = ks_statistic(&EmpiricalSample::new(scaled)?, |x| arcsine_cdf(x.clamp(0.0, 1.0)).unwrap());
        summary["arcsine_D"] = json!(ks.d);
        summary["arcsine_p_value"] = json!(ks.p);
    }
    a.summary = summary;
    Ok(a)
}

fn stationarity(seed: SeedSpec, p: ModelParams, n: usize, replicas: usize) -> Result<Artifact> {
    positive("n", n)?;
    positive("replicas", replicas)?;
    let ratios = replicate(seed, replicas, |s| {
        let mut dp = StreamingDp::new(s, p)?;
        dp.advance_to(n)?;
        Ok((dp.log_u(), dp.log_v()))
    })?;
    let mut a = Artifact::new(vec!["replica", "kind", "k", "inverse_ratio"]);
    let (mut u, mut v) = (Vec::new(), Vec::new());
    for (r, (lu, lv)) in ratios.iter().enumerate() {
        for (i, x) in lu.iter().enumerate() {
            u.push((-x).exp());
            a.push(vec![r.to_string(), "U".into(), (i + 1).to_string(), num((-x).exp())]);
        }
        for (i, x) in lv.iter().enumerate() {
            v.push((-x).exp());
            a.push(vec![r.to_string(), "V".into(), i.to_string(), num((-x).exp())]);
        }
    }
    let ku = ks_statistic(&EmpiricalSample::new(u)?, |x| gamma_cdf(x, p.theta).unwrap());
    let kv = ks_statistic(&EmpiricalSample::new(v)?, |x| gamma_cdf(x, p.dual_theta()).unwrap());
    a.summary = json!({ "D_U": ku.d, "p_U": ku.p, "D_V": kv.d, "p_V": kv.p });
    Ok(a)
}

fn verify(master: u64, only: &[u8]) -> Result<(Artifact, bool)> {
    if let Some(bad) = only.iter().find(|&&id| lgpolymer::acceptance::criterion(id).is_none()) {
        bail!(lgpolymer::Error::Usage(format!("no criterion with id {bad}")));
    }
    let reports = run_suite(&SuiteConfig { master_seed: master }, only)?;
    let mut a = Artifact::new(vec!["id", "passed", "title", "detail"]);
    for r in &reports {
        eprintln!("{}", r.line());
        a.push(vec![r.id.to_string(), r.passed.to_string(), r.title.to_string(), csv_field(&r.detail)]);
    }
    let ok = reports.iter().all(|r| r.passed);
    a.summary = json!({ "all_passed": ok, "reports": reports });
    Ok((a, ok))
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

