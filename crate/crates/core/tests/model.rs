use lgpolymer::conditioned_walk::{
    argmin_walk, renewal_v_estimate, sample_walk, survival_probabilities, tanaka_up_sample, xi_n,
    DEFAULT_EXCURSION_CAP,
};
use lgpolymer::environment::{build_p2p_env, P2PParams};
use lgpolymer::limit_law::{centered_endpoint_window, mean_window, xi_limit_drift, xi_limit_equilibrium};
use lgpolymer::numerics::arcsine_cdf;
use lgpolymer::p2p::{centered_crossing_window, crossing_law, m_n_statistic, CrossingCenter};
use lgpolymer::registry::{replicate, DpPipeline, EndpointPipeline};
use lgpolymer::sampling::{ModelParams, SeedSpec};

fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

fn eq() -> ModelParams {
    ModelParams::new(2.0, 1.0).unwrap()
}

#[test]
fn p2p_mode_mass_does_not_vanish() {
    let at = |n: usize, stream: u64| {
        let params = P2PParams::new(2, 1, n, 2.0, 1.0, 1.0).unwrap();
        let xs = replicate(SeedSpec::new(11, stream), 300, |s| Ok(crossing_law(&build_p2p_env(s, params)?)?.mode_mass()))
            .unwrap();
        mean(&xs)
    };
    let (a, b) = (at(32, 0), at(128, 1));
    eprintln!("mean P2P mode mass N=32: {a:.4}, N=128: {b:.4}");
    assert!(a > 0.1 && b > 0.1);
    assert!((a - b).abs() < 0.06);
}

#[test]
fn p2p_crossing_tight_off_equilibrium() {
    let at = |n: usize, stream: u64| {
        let params = P2PParams::new(2, 1, n, 2.0, 0.5, 1.5).unwrap();
        assert!(params.block_drift().abs() > 0.1);
        let shift = (2 * params.p * params.q * n) as i64;
        let m = replicate(SeedSpec::new(12, stream), 300, |s| {
            Ok(m_n_statistic(&crossing_law(&build_p2p_env(s, params)?)?) + shift)
        })
        .unwrap();
        m.iter().filter(|&&x| x.abs() < 30).count() as f64 / m.len() as f64
    };
    let (a, b) = (at(32, 0), at(128, 1));
    eprintln!("fraction of |m_N + 2pqN| < 30 at N=32: {a:.3}, N=128: {b:.3}");
    assert!(a > 0.9 && b > 0.9);
}

#[test]
fn favourite_endpoint_bulk_probability_matches_arcsine() {
    let n = 1024;
    let eps = 0.3;
    let s = replicate(SeedSpec::new(13, 0), 4000, |s| Ok(argmin_walk(&sample_walk(s, n, eq())?) as f64 / n as f64))
        .unwrap();
    let got = s.iter().filter(|&&x| x > eps && x < 1.0 - eps).count() as f64 / s.len() as f64;
    let want = arcsine_cdf(1.0 - eps).unwrap() - arcsine_cdf(eps).unwrap();
    eprintln!("P(l_n/n in (0.3, 0.7)) = {got:.4}, arcsine {want:.4}");
    assert!((got - want).abs() < 0.03);
}

#[test]
fn survival_decays_like_inverse_square_root() {
    let p = survival_probabilities(SeedSpec::new(14, 0), &[64, 256], 200_000, eq()).unwrap();
    let ratio = p[1] / p[0];
    eprintln!("survival 64: {:.4}, 256: {:.4}, ratio {ratio:.4}", p[0], p[1]);
    assert!((ratio - 0.5).abs() < 0.04);
}

#[test]
fn renewal_function_grows_linearly() {
    let r = renewal_v_estimate(SeedSpec::new(15, 0), &[0.0, 2.0, 4.0, 8.0], 20_000, eq()).unwrap();
    let v: Vec<f64> = r.points.iter().map(|p| p.estimate).collect();
    eprintln!("V at 0, 2, 4, 8: {v:?}, truncated {}", r.truncated);
    assert!(v.windows(2).all(|w| w[1] > w[0]));
    let slope_a = (v[2] - v[1]) / 2.0;
    let slope_b = (v[3] - v[2]) / 4.0;
    assert!((slope_a / slope_b - 1.0).abs() < 0.2);
}

#[test]
fn conditioned_walk_grows_like_square_root() {
    let w = |k: usize, stream: u64| {
        let xs = replicate(SeedSpec::new(16, stream), 2000, |s| {
            Ok(*tanaka_up_sample(s, k, eq(), DEFAULT_EXCURSION_CAP)?.path.positions().last().unwrap())
        })
        .unwrap();
        mean(&xs)
    };
    let (a, b) = (w(100, 0), w(400, 1));
    eprintln!("mean W_100 {a:.3}, W_400 {b:.3}");
    assert!((b / a - 2.0).abs() < 0.15);
}

#[test]
fn limit_center_matches_mode_mass() {
    let xi0 = replicate(SeedSpec::new(17, 0), 2000, |s| Ok(xi_limit_equilibrium(s, 5, eq(), DEFAULT_EXCURSION_CAP)?.window.center()))
        .unwrap();
    let mode = replicate(SeedSpec::new(17, 1), 2000, |s| Ok(xi_n(&sample_walk(s, 1024, eq())?).max_mass())).unwrap();
    let (a, b) = (mean(&xi0), mean(&mode));
    eprintln!("E xi_0 {a:.4}, E max Q_1024 {b:.4}");
    assert!((a - b).abs() < 0.03);
}

#[test]
fn drift_limit_matches_dp_window() {
    let p = ModelParams::new(2.0, 1.5).unwrap();
    let k = 15;
    let lim: Vec<_> =
        replicate(SeedSpec::new(18, 0), 2000, |s| Ok(xi_limit_drift(s, k, p)?.window)).unwrap();
    let dp: Vec<_> =
        replicate(SeedSpec::new(18, 1), 2000, |s| Ok(centered_endpoint_window(&DpPipeline.law(s, p, 512)?, k)))
            .unwrap();
    let tv = mean_window(&lim).unwrap().tv(&mean_window(&dp).unwrap());
    eprintln!("TV(limit, DP n=512) = {tv:.4}");
    assert!(tv < 0.05);
}

#[test]
fn p2p_window_stabilizes() {
    let k = 10;
    let windows = |n: usize, stream: u64| {
        let params = P2PParams::new(2, 1, n, 2.0, 1.0, 1.0).unwrap();
        let ws = replicate(SeedSpec::new(19, stream), 2000, |s| {
            Ok(centered_crossing_window(&crossing_law(&build_p2p_env(s, params)?)?, k, CrossingCenter::ModeBlock))
        })
        .unwrap();
        let len = ws[0].mass.mass().len();
        (0..len).map(|i| ws.iter().map(|w| w.mass.mass()[i]).sum::<f64>() / ws.len() as f64).collect::<Vec<_>>()
    };
    let (a, b) = (windows(64, 0), windows(256, 1));
    let tv: f64 = a.iter().zip(&b).map(|(x, y)| (x - y).abs()).sum();
    eprintln!("TV(mean crossing window N=64, N=256) = {tv:.4}");
    assert!(tv < 0.07);
}
