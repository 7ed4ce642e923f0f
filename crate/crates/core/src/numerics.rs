//! Special functions and statistical distances shared by every other module.

use std::f64::consts::PI;

use crate::error::{domain, usage, Error, Result};

/// Numerically stable `log(exp(a) + exp(b))` on the extended reals.
///
/// `-inf` is the neutral element; two `-inf` arguments give `-inf`.
#[inline]
pub fn log_sum_exp(a: f64, b: f64) -> f64 {
    let (hi, lo) = if a >= b { (a, b) } else { (b, a) };
    if hi == f64::NEG_INFINITY {
        return f64::NEG_INFINITY;
    }
    hi + (lo - hi).exp().ln_1p()
}

/// Log-sum-exp over a slice. Empty input gives `-inf`.
pub fn log_sum_exp_slice(xs: &[f64]) -> f64 {
    let hi = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if hi == f64::NEG_INFINITY {
        return f64::NEG_INFINITY;
    }
    hi + xs.iter().map(|&x| (x - hi).exp()).sum::<f64>().ln()
}

// Recurrence threshold for the asymptotic expansions below. At x >= 8 the
// first omitted term is below 2e-15 for both functions.
const ASYMPTOTIC_FROM: f64 = 8.0;

/// Digamma function `Psi_0(x) = (log Gamma)'(x)` for `x > 0`.
pub fn digamma(x: f64) -> Result<f64> {
    if !(x > 0.0) || !x.is_finite() {
        return Err(domain(format!("digamma needs x > 0, got {x}")));
    }
    let mut x = x;
    let mut acc = 0.0;
    while x < ASYMPTOTIC_FROM {
        acc -= 1.0 / x;
        x += 1.0;
    }
    let r = 1.0 / (x * x);
    // Bernoulli tail: B_2k / (2k x^2k), k = 1..7
    let tail = r
        * (1.0 / 12.0
            - r * (1.0 / 120.0
                - r * (1.0 / 252.0
                    - r * (1.0 / 240.0
                        - r * (1.0 / 132.0 - r * (691.0 / 32760.0 - r / 12.0))))));
    Ok(acc + x.ln() - 0.5 / x - tail)
}

/// Trigamma function `Psi_1(x) = (log Gamma)''(x)` for `x > 0`.
pub fn trigamma(x: f64) -> Result<f64> {
    if !(x > 0.0) || !x.is_finite() {
        return Err(domain(format!("trigamma needs x > 0, got {x}")));
    }
    let mut x = x;
    let mut acc = 0.0;
    while x < ASYMPTOTIC_FROM {
        acc += 1.0 / (x * x);
        x += 1.0;
    }
    let r = 1.0 / (x * x);
    // B_2k / x^(2k+1), k = 1..7
    let tail = r
        * (1.0 / 6.0
            - r * (1.0 / 30.0
                - r * (1.0 / 42.0
                    - r * (1.0 / 30.0
                        - r * (5.0 / 66.0 - r * (691.0 / 2730.0 - r * 7.0 / 6.0))))))
        / x;
    Ok(acc + 1.0 / x + 0.5 * r + tail)
}

/// CDF of the arcsine law on `[0, 1]`: `(2/pi) asin(sqrt(s))`.
pub fn arcsine_cdf(s: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&s) {
        return Err(domain(format!("arcsine_cdf needs s in [0,1], got {s}")));
    }
    Ok(2.0 / PI * s.sqrt().asin())
}

/// Regularized lower incomplete gamma `P(shape, x)`: the Gamma(shape, 1) CDF.
pub fn gamma_cdf(x: f64, shape: f64) -> Result<f64> {
    if !(shape > 0.0) || !shape.is_finite() {
        return Err(domain(format!("gamma_cdf needs shape > 0, got {shape}")));
    }
    if x.is_nan() || x < 0.0 {
        return Err(domain(format!("gamma_cdf needs x >= 0, got {x}")));
    }
    if x == 0.0 {
        return Ok(0.0);
    }
    if x.is_infinite() {
        return Ok(1.0);
    }
    Ok(statrs::function::gamma::gamma_lr(shape, x))
}

/// Sorted sample with uniform weights, the input of every KS check.
#[derive(Debug, Clone, PartialEq)]
pub struct EmpiricalSample {
    values: Vec<f64>,
}

impl EmpiricalSample {
    pub fn new(mut values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(usage("empirical sample must be nonempty"));
        }
        if values.iter().any(|v| v.is_nan()) {
            return Err(domain("empirical sample contains NaN"));
        }
        values.sort_by(f64::total_cmp);
        Ok(Self { values })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn mean(&self) -> f64 {
        self.values.iter().sum::<f64>() / self.len() as f64
    }

    /// Unbiased sample variance (0 for a single value).
    pub fn variance(&self) -> f64 {
        let n = self.len();
        if n < 2 {
            return 0.0;
        }
        let m = self.mean();
        self.values.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / (n - 1) as f64
    }

    /// Fraction of the sample `<= x`.
    pub fn ecdf(&self, x: f64) -> f64 {
        self.values.partition_point(|&v| v <= x) as f64 / self.len() as f64
    }
}

/// Result of a Kolmogorov-Smirnov comparison.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KsResult {
    pub d: f64,
    pub p: f64,
}

/// One-sample KS statistic against a continuous CDF, with asymptotic p-value.
pub fn ks_statistic(sample: &EmpiricalSample, cdf: impl Fn(f64) -> f64) -> KsResult {
    let n = sample.len() as f64;
    let mut d = 0.0f64;
    for (i, &x) in sample.values().iter().enumerate() {
        let f = cdf(x);
        let above = (i + 1) as f64 / n - f;
        let below = f - i as f64 / n;
        d = d.max(above).max(below);
    }
    KsResult {
        d,
        p: kolmogorov_survival(n.sqrt() * d),
    }
}

/// Two-sample KS statistic `sup |F_a - F_b|` with asymptotic p-value.
pub fn ks_two_sample(a: &EmpiricalSample, b: &EmpiricalSample) -> KsResult {
    let (xs, ys) = (a.values(), b.values());
    let (na, nb) = (xs.len() as f64, ys.len() as f64);
    let (mut i, mut j) = (0usize, 0usize);
    let mut d = 0.0f64;
    while i < xs.len() && j < ys.len() {
        let v = xs[i].min(ys[j]);
        while i < xs.len() && xs[i] <= v {
            i += 1;
        }
        while j < ys.len() && ys[j] <= v {
            j += 1;
        }
        d = d.max((i as f64 / na - j as f64 / nb).abs());
    }
    let en = (na * nb / (na + nb)).sqrt();
    KsResult {
        d,
        p: kolmogorov_survival(en * d),
    }
}

/// `P(K > lambda)` for the Kolmogorov distribution.
///
/// Alternating series (100 terms) for `lambda >= 1.18`, Jacobi theta form below,
/// where the alternating series converges too slowly.
pub fn kolmogorov_survival(lambda: f64) -> f64 {
    if lambda <= 0.0 {
        return 1.0;
    }
    if lambda < 1.18 {
        let y = -PI * PI / (8.0 * lambda * lambda);
        let cdf = (2.0 * PI).sqrt() / lambda
            * (1..=50)
                .map(|k| {
                    let m = (2 * k - 1) as f64;
                    (m * m * y).exp()
                })
                .sum::<f64>();
        return (1.0 - cdf).clamp(0.0, 1.0);
    }
    let mut sum = 0.0;
    for k in 1..=100 {
        let kf = k as f64;
        let term = (-2.0 * kf * kf * lambda * lambda).exp();
        sum += if k % 2 == 1 { term } else { -term };
    }
    (2.0 * sum).clamp(0.0, 1.0)
}

/// Finitely supported nonnegative mass on a contiguous window of Z.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct LatticeDist {
    offset: i64,
    mass: Vec<f64>,
}

impl LatticeDist {
    /// Slack allowed on total mass for rounding.
    pub const MASS_SLACK: f64 = 1e-9;

    pub fn new(offset: i64, mass: Vec<f64>) -> Result<Self> {
        if let Some(bad) = mass.iter().find(|m| !(**m >= 0.0) || !m.is_finite()) {
            return Err(Error::Invariant(format!("lattice mass entry {bad} is not a finite nonnegative number")));
        }
        let total: f64 = mass.iter().sum();
        if total > 1.0 + Self::MASS_SLACK {
            return Err(Error::Invariant(format!("lattice mass sums to {total} > 1")));
        }
        Ok(Self { offset, mass })
    }

    /// Build without validation; callers guarantee the invariants.
    pub(crate) fn from_parts(offset: i64, mass: Vec<f64>) -> Self {
        Self { offset, mass }
    }

    pub fn offset(&self) -> i64 {
        self.offset
    }

    pub fn mass(&self) -> &[f64] {
        &self.mass
    }

    /// Index one past the last support point.
    pub fn end(&self) -> i64 {
        self.offset + self.mass.len() as i64
    }

    pub fn get(&self, k: i64) -> f64 {
        if k < self.offset || k >= self.end() {
            0.0
        } else {
            self.mass[(k - self.offset) as usize]
        }
    }

    pub fn total(&self) -> f64 {
        self.mass.iter().sum()
    }

    /// Smallest index attaining the maximal mass.
    pub fn mode(&self) -> Option<i64> {
        argmax_first(&self.mass).map(|i| self.offset + i as i64)
    }

    pub fn max_mass(&self) -> f64 {
        self.mass.iter().copied().fold(0.0, f64::max)
    }
}

/// Total-variation distance `sum_k |p(k) - q(k)|` (no factor 1/2).
pub fn tv_distance(p: &LatticeDist, q: &LatticeDist) -> Result<f64> {
    for d in [p, q] {
        if d.mass.iter().any(|m| *m < 0.0) {
            return Err(Error::Invariant("negative lattice mass".into()));
        }
    }
    let lo = p.offset.min(q.offset);
    let hi = p.end().max(q.end());
    Ok((lo..hi).map(|k| (p.get(k) - q.get(k)).abs()).sum())
}

/// Index of the first maximum; `None` for an empty slice.
pub fn argmax_first(xs: &[f64]) -> Option<usize> {
    let mut best: Option<(usize, f64)> = None;
    for (i, &x) in xs.iter().enumerate() {
        match best {
            Some((_, b)) if x <= b => {}
            _ => best = Some((i, x)),
        }
    }
    best.map(|(i, _)| i)
}

/// Index of the first minimum; `None` for an empty slice.
pub fn argmin_first(xs: &[f64]) -> Option<usize> {
    let mut best: Option<(usize, f64)> = None;
    for (i, &x) in xs.iter().enumerate() {
        match best {
            Some((_, b)) if x >= b => {}
            _ => best = Some((i, x)),
        }
    }
    best.map(|(i, _)| i)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;

    // Independent oracle: psi(x) = -gamma + sum_{k>=0} (1/(k+1) - 1/(k+x)),
    // accelerated by an Euler-Maclaurin tail after `terms` summands.
    fn digamma_series(x: f64) -> f64 {
        let terms = 200_000usize;
        let mut s = 0.0;
        for k in 0..terms {
            let kf = k as f64;
            s += 1.0 / (kf + 1.0) - 1.0 / (kf + x);
        }
        // Euler-Maclaurin tail of sum_{k>=N} (1/(k+1) - 1/(k+x))
        let n = terms as f64;
        let tail = ((n + x) / (n + 1.0)).ln() + 0.5 * (1.0 / (n + 1.0) - 1.0 / (n + x));
        -EULER_GAMMA + s + tail
    }

    // Independent oracle: psi_1(x) = sum_{k>=0} 1/(k+x)^2 with integral tail.
    fn trigamma_series(x: f64) -> f64 {
        let terms = 200_000usize;
        let s: f64 = (0..terms).map(|k| 1.0 / ((k as f64 + x) * (k as f64 + x))).sum();
        let a = terms as f64 + x;
        s + 1.0 / a + 0.5 / (a * a) + 1.0 / (6.0 * a * a * a)
    }

    #[test]
    fn log_sum_exp_examples() {
        assert!((log_sum_exp(0.0, 0.0) - 2f64.ln()).abs() < 1e-15);
        assert_eq!(log_sum_exp(f64::NEG_INFINITY, 5.0), 5.0);
        assert_eq!(log_sum_exp(5.0, f64::NEG_INFINITY), 5.0);
        assert!((log_sum_exp(1000.0, 1000.0) - (1000.0 + 2f64.ln())).abs() < 1e-12);
        assert_eq!(log_sum_exp(f64::NEG_INFINITY, f64::NEG_INFINITY), f64::NEG_INFINITY);
        assert!((log_sum_exp_slice(&[0.0, 0.0, 0.0]) - 3f64.ln()).abs() < 1e-15);
    }

    #[test]
    fn digamma_matches_series_oracle() {
        assert!((digamma(1.0).unwrap() + EULER_GAMMA).abs() < 1e-12);
        for &x in &[0.3, 1.0, 1.5, 2.7, 7.9, 8.0, 12.5] {
            let want = digamma_series(x);
            let got = digamma(x).unwrap();
            assert!((got - want).abs() < 1e-9 * want.abs().max(1.0), "x={x} got={got} want={want}");
        }
    }

    #[test]
    fn digamma_recurrence_examples() {
        let x = 0.5;
        let r = digamma(x + 1.0).unwrap() - digamma(x).unwrap() - 1.0 / x;
        assert!(r.abs() < 1e-13);
        let d = digamma(1.5).unwrap() - digamma(0.5).unwrap();
        assert!((d - 2.0).abs() < 1e-13);
    }

    #[test]
    fn trigamma_examples() {
        assert!((trigamma(1.0).unwrap() - PI * PI / 6.0).abs() < 1e-13);
        assert!((trigamma(0.5).unwrap() - PI * PI / 2.0).abs() < 1e-12);
        let x = 2.0;
        let r = trigamma(x + 1.0).unwrap() - trigamma(x).unwrap() + 1.0 / (x * x);
        assert!(r.abs() < 1e-14);
        for &x in &[0.3, 1.0, 3.3, 9.1] {
            let want = trigamma_series(x);
            assert!((trigamma(x).unwrap() - want).abs() < 1e-10 * want, "x={x}");
        }
    }

    #[test]
    fn polygamma_recurrences_on_grid() {
        for i in 1..=100 {
            let x = i as f64 * 0.1;
            let d = digamma(x + 1.0).unwrap() - digamma(x).unwrap() - 1.0 / x;
            let t = trigamma(x + 1.0).unwrap() - trigamma(x).unwrap() + 1.0 / (x * x);
            assert!(d.abs() < 1e-10, "digamma recurrence at {x}: {d}");
            assert!(t.abs() < 1e-10, "trigamma recurrence at {x}: {t}");
        }
    }

    #[test]
    fn polygamma_domain_errors() {
        assert!(matches!(digamma(0.0), Err(Error::Domain(_))));
        assert!(matches!(digamma(-1.5), Err(Error::Domain(_))));
        assert!(matches!(trigamma(0.0), Err(Error::Domain(_))));
        assert!(matches!(trigamma(f64::NAN), Err(Error::Domain(_))));
    }

    #[test]
    fn arcsine_examples_and_symmetry() {
        assert!((arcsine_cdf(0.5).unwrap() - 0.5).abs() < 1e-15);
        assert_eq!(arcsine_cdf(0.0).unwrap(), 0.0);
        assert!((arcsine_cdf(1.0).unwrap() - 1.0).abs() < 1e-15);
        assert!((arcsine_cdf(0.25).unwrap() - 1.0 / 3.0).abs() < 1e-15);
        assert!(arcsine_cdf(1.1).is_err());
        assert!(arcsine_cdf(-0.1).is_err());
        let mut prev = 0.0;
        for i in 0..=100 {
            let s = i as f64 / 100.0;
            let f = arcsine_cdf(s).unwrap();
            assert!(f >= prev);
            assert!((f + arcsine_cdf(1.0 - s).unwrap() - 1.0).abs() < 1e-14);
            prev = f;
        }
    }

    #[test]
    fn gamma_cdf_examples() {
        assert!((gamma_cdf(2f64.ln(), 1.0).unwrap() - 0.5).abs() < 1e-12);
        assert_eq!(gamma_cdf(0.0, 2.0).unwrap(), 0.0);
        let want = statrs::function::erf::erf(0.5f64.sqrt());
        assert!((gamma_cdf(0.5, 0.5).unwrap() - want).abs() < 1e-10);
        assert!((want - 0.682_689_492).abs() < 1e-9);
        assert!(gamma_cdf(1.0, 0.0).is_err());
        assert!(gamma_cdf(1.0, -2.0).is_err());
    }

    #[test]
    fn gamma_cdf_monotone_and_saturates() {
        for &shape in &[0.3, 0.5, 1.0, 2.0, 7.5] {
            let mut prev = 0.0;
            for i in 0..200 {
                let x = i as f64 * 0.1;
                let f = gamma_cdf(x, shape).unwrap();
                assert!(f >= prev - 1e-15);
                prev = f;
            }
            let far = shape + 40.0 * shape.sqrt();
            assert!((gamma_cdf(far, shape).unwrap() - 1.0).abs() < 1e-8);
        }
    }

    #[test]
    fn ks_examples() {
        let uniform = |x: f64| x.clamp(0.0, 1.0);
        let s = EmpiricalSample::new(vec![0.9, 0.1]).unwrap();
        assert!((ks_statistic(&s, uniform).d - 0.4).abs() < 1e-15);
        let n = 50;
        let q: Vec<f64> = (1..=n).map(|i| (i as f64 - 0.5) / n as f64).collect();
        let r = ks_statistic(&EmpiricalSample::new(q).unwrap(), uniform);
        assert!((r.d - 0.5 / n as f64).abs() < 1e-14);
        assert_eq!(kolmogorov_survival(0.0), 1.0);
        assert!(EmpiricalSample::new(vec![]).is_err());
    }

    #[test]
    fn kolmogorov_branches_agree_and_match_quantiles() {
        // both representations at the switch point
        let lam: f64 = 1.18;
        let y = -PI * PI / (8.0 * lam * lam);
        let theta: f64 = (2.0 * PI).sqrt() / lam
            * (1..=50).map(|k| (((2 * k - 1) * (2 * k - 1)) as f64 * y).exp()).sum::<f64>();
        let alt: f64 = 2.0
            * (1..=100)
                .map(|k| {
                    let t = (-2.0 * (k * k) as f64 * lam * lam).exp();
                    if k % 2 == 1 { t } else { -t }
                })
                .sum::<f64>();
        assert!((1.0 - theta - alt).abs() < 1e-12);
        // classical critical values
        assert!((kolmogorov_survival(1.358) - 0.05).abs() < 5e-4);
        assert!((kolmogorov_survival(1.628) - 0.01).abs() < 2e-4);
    }

    #[test]
    fn ks_two_sample_basic() {
        let a = EmpiricalSample::new(vec![1.0, 2.0, 3.0]).unwrap();
        let b = EmpiricalSample::new(vec![1.0, 2.0, 3.0]).unwrap();
        assert_eq!(ks_two_sample(&a, &b).d, 0.0);
        let c = EmpiricalSample::new(vec![10.0, 11.0]).unwrap();
        assert_eq!(ks_two_sample(&a, &c).d, 1.0);
        let d = EmpiricalSample::new(vec![1.5, 2.5, 3.5, 4.5]).unwrap();
        // ECDFs at 1,1.5,2,2.5,3,3.5: |1/3-0|,|1/3-1/4|,|2/3-1/4|,|2/3-1/2|,|1-1/2|,|1-3/4|
        assert!((ks_two_sample(&a, &d).d - 0.5).abs() < 1e-15);
    }

    #[test]
    fn tv_examples() {
        let p = LatticeDist::new(0, vec![0.5, 0.5]).unwrap();
        let q = LatticeDist::new(0, vec![0.25, 0.75]).unwrap();
        assert_eq!(tv_distance(&p, &p).unwrap(), 0.0);
        assert!((tv_distance(&p, &q).unwrap() - 0.5).abs() < 1e-15);
        let r = LatticeDist::new(5, vec![1.0]).unwrap();
        assert!((tv_distance(&p, &r).unwrap() - 2.0).abs() < 1e-15);
        assert!(LatticeDist::new(0, vec![-0.1, 0.5]).is_err());
        assert!(LatticeDist::new(0, vec![0.7, 0.7]).is_err());
        let bad = LatticeDist::from_parts(0, vec![-0.5]);
        assert!(matches!(tv_distance(&p, &bad), Err(Error::Invariant(_))));
    }

    #[test]
    fn argmin_argmax_tie_break() {
        assert_eq!(argmin_first(&[0.0, -1.0, 1.0, -1.0]), Some(1));
        assert_eq!(argmax_first(&[0.25, 0.5, 0.5]), Some(1));
        assert_eq!(argmax_first(&[]), None);
    }

    fn dist_strategy() -> impl Strategy<Value = LatticeDist> {
        (-3i64..3, prop::collection::vec(0.0f64..1.0, 1..6)).prop_map(|(off, w)| {
            let s: f64 = w.iter().sum::<f64>() + 1e-9;
            LatticeDist::new(off, w.iter().map(|x| x / s).collect()).unwrap()
        })
    }

    proptest! {
        #[test]
        fn lse_symmetric_and_shift_invariant(a in -50.0f64..50.0, b in -50.0f64..50.0, c in -100.0f64..100.0) {
            prop_assert_eq!(log_sum_exp(a, b), log_sum_exp(b, a));
            prop_assert!((log_sum_exp(a + c, b + c) - c - log_sum_exp(a, b)).abs() < 1e-12);
            let r = log_sum_exp(a, b);
            prop_assert!(r >= a.max(b) && r <= a.max(b) + 2f64.ln() + 1e-15);
        }

        #[test]
        fn tv_is_a_metric(p in dist_strategy(), q in dist_strategy(), r in dist_strategy()) {
            let pq = tv_distance(&p, &q).unwrap();
            prop_assert!((pq - tv_distance(&q, &p).unwrap()).abs() < 1e-15);
            prop_assert!(pq <= tv_distance(&p, &r).unwrap() + tv_distance(&r, &q).unwrap() + 1e-12);
            prop_assert!((0.0..=2.0 + 1e-12).contains(&pq));
        }
    }
}
