use proptest::prelude::*;

use fdlink::channel::{achievable_rate, capacity_limit, required_power, LinkParams};
use fdlink::distortion::{fit_exponential, RateDistortionSample};
use fdlink::wavelet::{compress, dwt_forward, dwt_inverse, prd, SignalFrame, WaveletConfig};

fn frame_strategy() -> impl Strategy<Value = SignalFrame> {
    (6u32..11).prop_flat_map(|log_len| {
        prop::collection::vec(-100.0f64..100.0, 1usize << log_len)
            .prop_filter("non-zero frame", |v| v.iter().any(|x| *x != 0.0))
            .prop_map(|v| SignalFrame::new(v, 250.0, 12).unwrap())
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn dwt_is_orthonormal(frame in frame_strategy(), order in 1usize..6) {
        let levels = WaveletConfig::max_levels(order, frame.len()).clamp(1, 4);
        let cfg = WaveletConfig { family_order: order, levels, ..WaveletConfig::default() };
        let c = dwt_forward(&frame, &cfg).unwrap();
        prop_assert_eq!(c.len(), frame.len());
        let energy: f64 = frame.samples().iter().map(|x| x * x).sum();
        prop_assert!((c.energy() - energy).abs() <= 1e-9 * energy);
        let back = dwt_inverse(&c, &cfg).unwrap();
        prop_assert!(prd(&frame, &back).unwrap() <= 1e-7);
    }

    #[test]
    fn compression_ratio_is_exact(frame in frame_strategy(), kappa in 0.0f64..=1.0) {
        let cfg = WaveletConfig { levels: 2, ..WaveletConfig::default() };
        let r = compress(&frame, &cfg, kappa).unwrap();
        prop_assert!((r.kappa - kappa).abs() <= 1.0 / frame.len() as f64);
        prop_assert!(r.kept.count_zeros() >= r.zeroed);
    }

    #[test]
    fn prd_grows_with_compression(frame in frame_strategy(), k1 in 0.0f64..=1.0, k2 in 0.0f64..=1.0) {
        let cfg = WaveletConfig { levels: 3, ..WaveletConfig::default() };
        let (lo, hi) = if k1 <= k2 { (k1, k2) } else { (k2, k1) };
        let d = |k| prd(&frame, &compress(&frame, &cfg, k).unwrap().reconstruct(&cfg).unwrap()).unwrap();
        prop_assert!(d(lo) <= d(hi) + 1e-9);
    }

    #[test]
    fn power_rate_inverse(
        h in 1e-4f64..10.0,
        mu_exp in -6.0f64..0.0,
        bw in 1e3f64..1e6,
        frac in 0.0f64..1.0,
    ) {
        let link = LinkParams { bandwidth_b: bw, si_quality_mu: 10f64.powf(mu_exp), ..LinkParams::default() };
        let r = frac * capacity_limit(h, &link);
        let p = required_power(r, h, &link).unwrap();
        prop_assert!(p >= 0.0 && p.is_finite());
        if r > 0.0 {
            prop_assert!(((achievable_rate(p, h, &link) - r) / r).abs() <= 1e-9);
            let p_more = required_power(r * (1.0 + 1e-3), h, &link);
            if let Ok(p_more) = p_more {
                prop_assert!(p_more > p);
            }
        }
    }

    #[test]
    fn exponential_fit_recovers_parameters(a in 1.0f64..500.0, b in -1e-3f64..-1e-6) {
        let s: Vec<RateDistortionSample> = (0..20)
            .map(|i| {
                let rs = i as f64 * 1000.0;
                RateDistortionSample { rs, d: a * (b * rs).exp() }
            })
            .collect();
        let m = fit_exponential(&s).unwrap();
        prop_assert!(((m.a - a) / a).abs() <= 1e-6);
        prop_assert!(((m.b - b) / b).abs() <= 1e-6);
    }
}
