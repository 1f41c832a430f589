//! Monte Carlo oracles for the concentration bounds, the noise sampler and the tests.

use colme::bernstein::{
    scaled_sample_mean_params, tail_bound, type2_bound, z_threshold_exact, BernsteinParams, TestSpec,
};
use colme::privacy::{laplace_inverse_cdf, PrivacySpec};
use colme::rng::{Purpose, RandomStream};
use colme::rules::{bernstein_decide, PublicStats};
use colme::topology::assign_classes_uniform;

fn laplace_draws(n: usize, scale: f64, seed: u64) -> Vec<f64> {
    let mut s = RandomStream::from_seed(seed);
    (0..n).map(|_| laplace_inverse_cdf(s.uniform_open(), scale)).collect()
}

#[test]
fn laplace_tail_is_below_bound() {
    let scale = 1.0 / 2f64.sqrt();
    let p = BernsteinParams::laplace(0.0, scale).unwrap();
    assert!((p.variance - 1.0).abs() < 1e-15);
    let draws = laplace_draws(1_000_000, scale, 1);
    for x in [0.5, 1.0, 2.0, 4.0] {
        let freq = draws.iter().filter(|v| v.abs() >= x).count() as f64 / draws.len() as f64;
        assert!(freq <= tail_bound(x, &p).unwrap(), "x={x}: {freq}");
        // the exact tail exp(−x/b) as a sanity check of the sampler
        let exact = (-x / scale).exp();
        assert!((freq - exact).abs() < 5.0 * (exact / draws.len() as f64).sqrt() + 1e-6, "x={x}");
    }
}

#[test]
fn calibrated_noise_moments() {
    let privacy = PrivacySpec::calibrate(1.0, 3f64.sqrt() / 2.0).unwrap();
    assert!((privacy.sigma_dp_sq - 6.0).abs() < 1e-12);
    let mut stream = RandomStream::for_agent(4, 0, 0, Purpose::DpNoise);
    let n = 1_000_000;
    let draws: Vec<f64> = (0..n).map(|_| privacy.sample_noise(&mut stream)).collect();
    let mean = draws.iter().sum::<f64>() / n as f64;
    let var = draws.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
    assert!((var / 6.0 - 1.0).abs() < 0.02, "variance {var}");
    assert!(mean.abs() < 4.0 * privacy.sigma_dp / 1e3, "mean {mean}");
    let p = privacy.noise_params().unwrap();
    for k in [1.0, 2.0, 4.0] {
        let x = k * privacy.sigma_dp;
        let freq = draws.iter().filter(|v| v.abs() >= x).count() as f64 / n as f64;
        assert!(freq <= tail_bound(x, &p).unwrap());
    }
}

#[test]
fn no_privacy_noise_is_zero() {
    let privacy = PrivacySpec::calibrate(f64::INFINITY, 1.0).unwrap();
    let mut s = RandomStream::from_seed(3);
    assert!((0..1000).all(|_| privacy.sample_noise(&mut s) == 0.0));
}

fn laplace_mean(stream: &mut RandomStream, mean: f64, scale: f64, t: usize) -> f64 {
    (0..t).map(|_| mean + laplace_inverse_cdf(stream.uniform_open(), scale)).sum::<f64>() / t as f64
}

#[test]
fn type2_frequency_below_bound() {
    let t = 400;
    let scale = 1.0 / 2f64.sqrt();
    let per_sample = BernsteinParams::laplace(0.0, scale).unwrap();
    let side = scaled_sample_mean_params(per_sample, t).unwrap();
    for theta in [0.05, 0.5] {
        let spec = TestSpec::for_difference(&side, &side, theta).unwrap().with_gap(1.0);
        let z = z_threshold_exact(&spec).unwrap();
        let bound = type2_bound(z, &spec).unwrap();
        let trials = 100_000;
        let mut sa = RandomStream::from_seed(10);
        let mut sb = RandomStream::from_seed(11);
        let accepted = (0..trials)
            .filter(|_| (laplace_mean(&mut sa, 0.0, scale, t as usize) - laplace_mean(&mut sb, 1.0, scale, t as usize)).abs() < z)
            .count();
        let freq = accepted as f64 / trials as f64;
        assert!(freq <= bound, "theta={theta}: {freq} > {bound}");
    }
}

fn uniform_noisy_mean(data: &mut RandomStream, noise: &mut RandomStream, privacy: &PrivacySpec, mu: f64, t: u64) -> f64 {
    let l = privacy.half_range;
    (0..t).map(|_| mu - l + 2.0 * l * data.uniform() + privacy.sample_noise(noise)).sum::<f64>() / t as f64
}

#[test]
fn type1_rate_at_small_theta() {
    let l = 3f64.sqrt() / 2.0;
    let privacy = PrivacySpec::calibrate(1.0, l).unwrap();
    let stats = PublicStats::uniform(l);
    let (trials, t, theta) = (100_000u64, 50, 1.9);
    let mut rejected = 0;
    for i in 0..trials {
        let mut d0 = RandomStream::for_agent(1, i, 0, Purpose::Data);
        let mut d1 = RandomStream::for_agent(1, i, 1, Purpose::Data);
        let mut n0 = RandomStream::for_agent(1, i, 0, Purpose::DpNoise);
        let mut n1 = RandomStream::for_agent(1, i, 1, Purpose::DpNoise);
        let xa = uniform_noisy_mean(&mut d0, &mut n0, &privacy, 0.2, t);
        let xb = uniform_noisy_mean(&mut d1, &mut n1, &privacy, 0.2, t);
        if !bernstein_decide(xa, xb, t, &stats, &stats, &privacy, theta).unwrap() {
            rejected += 1;
        }
    }
    let p = rejected as f64 / trials as f64;
    assert!(p <= theta + 3.0 * (theta.min(1.0) * (1.0 - theta.min(1.0)) / trials as f64).sqrt(), "{p}");
}

#[test]
fn rejection_grows_with_samples() {
    let l = 3f64.sqrt() / 2.0;
    let privacy = PrivacySpec::none(l).unwrap();
    let stats = PublicStats::uniform(l);
    let theta = 0.1;
    let trials = 400u64;
    let mut rates = Vec::new();
    for t in [100u64, 1000, 10_000] {
        let mut rejected = 0;
        for i in 0..trials {
            let mut d0 = RandomStream::for_agent(2, i, 0, Purpose::Data);
            let mut d1 = RandomStream::for_agent(2, i, 1, Purpose::Data);
            let mut n0 = RandomStream::for_agent(2, i, 0, Purpose::DpNoise);
            let mut n1 = RandomStream::for_agent(2, i, 1, Purpose::DpNoise);
            let xa = uniform_noisy_mean(&mut d0, &mut n0, &privacy, 0.2, t);
            let xb = uniform_noisy_mean(&mut d1, &mut n1, &privacy, 0.4, t);
            if !bernstein_decide(xa, xb, t, &stats, &stats, &privacy, theta).unwrap() {
                rejected += 1;
            }
        }
        rates.push(rejected as f64 / trials as f64);
    }
    let slack = 3.0 * (0.25 / trials as f64).sqrt();
    assert!(rates[1] + slack >= rates[0] && rates[2] + slack >= rates[1], "{rates:?}");
    assert_eq!(rates[2], 1.0, "{rates:?}");
}

#[test]
fn class_assignment_is_balanced() {
    // Pearson statistic for 3 cells has 2 degrees of freedom, mean 2
    let mut s = RandomStream::from_seed(8);
    let draws = 1000;
    let mut total = 0.0;
    for _ in 0..draws {
        let labels = assign_classes_uniform(200, 3, &mut s).unwrap();
        let mut counts = [0.0f64; 3];
        for c in labels {
            counts[c] += 1.0;
        }
        let e: f64 = 200.0 / 3.0;
        total += counts.iter().map(|c| (c - e).powi(2) / e).sum::<f64>();
    }
    let mean = total / draws as f64;
    // sd of the mean is 2/√1000
    assert!((mean - 2.0).abs() < 4.0 * 2.0 / (draws as f64).sqrt(), "{mean}");
}
