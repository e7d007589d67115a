use afb_core::dataset::Waveform;
use afb_core::envelope::{frame_count, EnvelopeConfig};
use afb_core::extractor::{extract_spectrogram, fit_normalizer, normalize, Spectrogram, LOG_FLOOR};
use afb_core::filterbank::*;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const FS: f64 = 16_000.0;

/// Magnitude from the difference equation's coefficients, written out longhand.
fn gain(c: &BiquadCoeffs<f64>, f: f64) -> f64 {
    let w = 2.0 * std::f64::consts::PI * f / FS;
    let (c1, s1, c2, s2) = (w.cos(), w.sin(), (2.0 * w).cos(), (2.0 * w).sin());
    let nr = c.b0 + c.b1 * c1 + c.b2 * c2;
    let ni = -(c.b1 * s1 + c.b2 * s2);
    let dr = 1.0 + c.a1 * c1 + c.a2 * c2;
    let di = -(c.a1 * s1 + c.a2 * s2);
    ((nr * nr + ni * ni) / (dr * dr + di * di)).sqrt()
}

/// Q from a dense linear scan for the half-power crossings around the center.
fn scanned_q(c: &BiquadCoeffs<f64>) -> f64 {
    let fc = c.f_c_hz;
    let target = 0.5f64.sqrt();
    let crossing = |from: f64, to: f64| {
        let steps = 200_000;
        let mut prev = (from, gain(c, from));
        for i in 1..=steps {
            let f = from + (to - from) * i as f64 / steps as f64;
            let g = gain(c, f);
            if (prev.1 - target) * (g - target) <= 0.0 {
                let t = (target - prev.1) / (g - prev.1);
                return prev.0 + t * (f - prev.0);
            }
            prev = (f, g);
        }
        panic!("no crossing between {from} and {to}");
    };
    let lo = crossing(fc, 1e-6);
    let hi = crossing(fc, FS / 2.0);
    fc / (hi - lo)
}

fn noise(seed: u64, n: usize, amp: f64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n).map(|_| rng.random_range(-amp..amp)).collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn realizable_bandpass_hits_center_gain_and_q(fc in 50.0f64..2000.0, q in 0.5f64..64.0) {
        let c = design_bandpass::<f64>(fc, q, FS).unwrap();
        prop_assert!(c.active && c.is_stable());
        prop_assert!((gain(&c, fc) - 1.0).abs() < 1e-9);
        let measured = scanned_q(&c);
        prop_assert!((measured / q - 1.0).abs() < 0.05, "fc {} q {} measured {}", fc, q, measured);
    }

    #[test]
    fn response_never_exceeds_unity(fc in 20.0f64..7500.0, q in 0.25f64..100.0) {
        let c = design_bandpass::<f64>(fc, q, FS).unwrap();
        for i in 0..=2000 {
            let f = FS / 2.0 * i as f64 / 2000.0;
            prop_assert!(gain(&c, f) <= 1.0 + 1e-9);
        }
    }

    #[test]
    fn every_designed_channel_is_stable(
        n in 1usize..80,
        f_max in 100.0f64..8000.0,
        q in 0.1f64..200.0,
    ) {
        let design = FilterbankDesign::<f64>::new(FilterbankConfig::new(n, f_max, q)).unwrap();
        prop_assert_eq!(design.n_channels(), n);
        for ch in design.channels.iter().filter(|c| c.active) {
            prop_assert!(ch.is_stable());
            // A stable recursion's impulse response dies out.
            let mut impulse = vec![0.0; 40_000];
            impulse[0] = 1.0;
            let y = filter_signal(ch, &impulse).unwrap();
            prop_assert!(y.iter().all(|v| v.abs() <= 1.0));
            prop_assert!(y[39_000..].iter().all(|v| v.abs() < 1e-3));
        }
    }

    #[test]
    fn channels_are_linear(seed in any::<u64>(), a in -3.0f64..3.0, b in -3.0f64..3.0, fc in 100.0f64..7000.0) {
        let c = design_bandpass::<f64>(fc, 4.0, FS).unwrap();
        let x = noise(seed, 2000, 1.0);
        let y = noise(seed.wrapping_add(1), 2000, 1.0);
        let mixed: Vec<f64> = x.iter().zip(&y).map(|(p, r)| a * p + b * r).collect();
        let fx = filter_signal(&c, &x).unwrap();
        let fy = filter_signal(&c, &y).unwrap();
        let fm = filter_signal(&c, &mixed).unwrap();
        for i in 0..mixed.len() {
            prop_assert!((fm[i] - (a * fx[i] + b * fy[i])).abs() < 1e-9);
        }
    }

    #[test]
    fn centers_are_geometric_and_pinned(n in 2usize..64, f_max in 200.0f64..8000.0) {
        let cfg = FilterbankConfig::new(n, f_max, 8.0);
        let c = center_frequencies(&cfg).unwrap();
        prop_assert_eq!(c[0], DEFAULT_F_MIN_HZ);
        prop_assert_eq!(c[n - 1], f_max);
        let r = (f_max / DEFAULT_F_MIN_HZ).powf(1.0 / (n - 1) as f64);
        for w in c.windows(2) {
            prop_assert!((w[1] / w[0] / r - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn afbs_records_round_trip(ch in 1usize..8, frames in 1usize..20, seed in any::<u64>()) {
        let values: Vec<f32> = noise(seed, ch * frames, 50.0).into_iter().map(|v| v as f32).collect();
        let mut s = Spectrogram::from_values(ch, frames, values).unwrap();
        s.frame_hop_ms = 10.0;
        let mut buf = Vec::new();
        s.write_afbs(&mut buf).unwrap();
        let back = Spectrogram::<f32>::read_afbs(buf.as_slice()).unwrap();
        prop_assert_eq!(back.values, s.values);
        prop_assert_eq!((back.n_channels, back.n_frames), (ch, frames));
    }
}

#[test]
fn steady_state_sinusoid_follows_the_response() {
    for (fc, q) in [(250.0, 8.0), (1000.0, 2.0), (3000.0, 16.0)] {
        let c = design_bandpass::<f64>(fc, q, FS).unwrap();
        for f in [fc, fc * 1.3, fc / 1.5] {
            let x: Vec<f64> = (0..32_000).map(|i| (2.0 * std::f64::consts::PI * f * i as f64 / FS).sin()).collect();
            let y = filter_signal(&c, &x).unwrap();
            let peak = y[24_000..].iter().fold(0.0f64, |m, v| m.max(v.abs()));
            assert!((peak - gain(&c, f)).abs() < 2e-3, "fc {fc} f {f}: peak {peak} vs {}", gain(&c, f));
        }
    }
}

#[test]
fn centers_above_the_clamp_are_inactive() {
    let c = design_bandpass::<f64>(7700.0, 8.0, FS).unwrap();
    assert!(!c.active);
    let design = FilterbankDesign::<f64>::new(FilterbankConfig::new(16, 8000.0, 8.0)).unwrap();
    assert!(!design.channels[15].active);
    assert!(design.channels[..15].iter().all(|c| c.active));
}

#[test]
fn one_second_clip_gives_99_frames_per_channel() {
    let env = EnvelopeConfig::default();
    assert_eq!(frame_count(16_000, &env).unwrap(), 99);
    for cfg in [FilterbankConfig::typical(), FilterbankConfig::tiny(), FilterbankConfig::new(1, 1000.0, 1.0)] {
        let design = FilterbankDesign::<f64>::new(cfg).unwrap();
        let clip = Waveform {
            samples: noise(3, 16_000, 0.3),
            sample_rate_hz: 16_000,
        };
        let s = extract_spectrogram(&design, &env, &clip).unwrap();
        assert_eq!((s.n_channels, s.n_frames), (cfg.n_filters, 99));
        assert_eq!(s.channel_centers_hz, design.centers_hz);
        assert!(s.values.iter().all(|v| v.is_finite()));
    }
}

#[test]
fn silence_sits_on_the_log_floor() {
    let design = FilterbankDesign::<f64>::new(FilterbankConfig::typical()).unwrap();
    let clip = Waveform {
        samples: vec![0.0; 16_000],
        sample_rate_hz: 16_000,
    };
    let s = extract_spectrogram(&design, &EnvelopeConfig::default(), &clip).unwrap();
    assert!(s.values.iter().all(|&v| v == LOG_FLOOR.ln()));
}

#[test]
fn scaling_the_input_shifts_log_power() {
    let design = FilterbankDesign::<f64>::new(FilterbankConfig::typical()).unwrap();
    let env = EnvelopeConfig::default();
    let x = noise(11, 16_000, 0.5);
    let k = 3.0;
    let a = extract_spectrogram(&design, &env, &Waveform { samples: x.clone(), sample_rate_hz: 16_000 }).unwrap();
    let scaled = Waveform {
        samples: x.iter().map(|v| v * k).collect(),
        sample_rate_hz: 16_000,
    };
    let b = extract_spectrogram(&design, &env, &scaled).unwrap();
    for (u, v) in a.values.iter().zip(&b.values) {
        let expected = (k * k * (u.exp() - LOG_FLOOR) + LOG_FLOOR).ln();
        assert!((v - expected).abs() < 1e-9, "{u} {v}");
    }
}

#[test]
fn single_and_double_precision_agree() {
    let design64 = FilterbankDesign::<f64>::new(FilterbankConfig::typical()).unwrap();
    let design32 = FilterbankDesign::<f32>::new(FilterbankConfig::typical()).unwrap();
    let x = noise(12, 16_000, 0.5);
    let env = EnvelopeConfig::default();
    let a = extract_spectrogram(&design64, &env, &Waveform { samples: x.clone(), sample_rate_hz: 16_000 }).unwrap();
    let b = extract_spectrogram(
        &design32,
        &env,
        &Waveform {
            samples: x.iter().map(|&v| v as f32).collect(),
            sample_rate_hz: 16_000,
        },
    )
    .unwrap();
    let worst = a
        .values
        .iter()
        .zip(&b.values)
        .map(|(u, v)| (u - *v as f64).abs())
        .fold(0.0, f64::max);
    assert!(worst < 1e-2, "{worst}");
}

#[test]
fn normalized_training_features_are_standardized() {
    let design = FilterbankDesign::<f64>::new(FilterbankConfig::tiny()).unwrap();
    let env = EnvelopeConfig::default();
    let set: Vec<Spectrogram<f64>> = (0..6)
        .map(|i| {
            let clip = Waveform {
                samples: noise(20 + i, 16_000, 0.05 * (i + 1) as f64),
                sample_rate_hz: 16_000,
            };
            extract_spectrogram(&design, &env, &clip).unwrap()
        })
        .collect();
    let n = fit_normalizer(set.iter()).unwrap();
    let normed: Vec<_> = set.iter().map(|s| normalize(s, &n).unwrap()).collect();
    for k in 0..10 {
        let all: Vec<f64> = normed.iter().flat_map(|s| s.row(k).to_vec()).collect();
        let m = all.iter().sum::<f64>() / all.len() as f64;
        let v = all.iter().map(|x| (x - m).powi(2)).sum::<f64>() / all.len() as f64;
        assert!(m.abs() < 1e-9 && (v - 1.0).abs() < 1e-9, "channel {k}: mean {m} var {v}");
    }
}
