use std::f64::consts::{FRAC_1_SQRT_2, TAU};
use std::path::Path;

use num_complex::Complex64;
use proptest::prelude::*;

use phasenoise_capacity::channel::{
    simulate, singular_value_bounds, CMatrix, ChannelMatrix, ChannelParams, Constellation,
    Normalization, PhaseTrajectory, SimulationOptions,
};
use phasenoise_capacity::mathcore::WrappedGaussian;
use phasenoise_capacity::rng;

fn dft2() -> CMatrix {
    let a = Complex64::new(FRAC_1_SQRT_2, 0.0);
    CMatrix::from_rows(vec![vec![a, a], vec![a, -a]]).unwrap()
}

#[test]
fn increments_follow_the_wrapped_gaussian() {
    let sigma = 6f64.to_radians();
    let mut r = rng::stream(17, &[]);
    let traj = PhaseTrajectory::sample(20_001, sigma, Some(1.0), &mut r);
    let mut inc: Vec<f64> = traj.increments().collect();
    inc.sort_by(f64::total_cmp);
    let wg = WrappedGaussian::new(sigma).unwrap();
    let n = inc.len() as f64;
    let d = inc
        .iter()
        .enumerate()
        .map(|(i, &x)| {
            let f = wg.interval_probability(0.0, x);
            (f - i as f64 / n).abs().max((f - (i + 1) as f64 / n).abs())
        })
        .fold(0.0, f64::max);
    // 1% critical value of the one-sample Kolmogorov-Smirnov statistic.
    assert!(d < 1.63 / n.sqrt(), "KS statistic {d}");
}

#[test]
fn stationary_phase_is_uniform() {
    let bins = 20;
    let draws = 5000;
    let mut counts = vec![0usize; bins];
    for k in 0..draws {
        let mut r = rng::stream(5, &[k as u64]);
        let traj = PhaseTrajectory::sample(40, 0.3, None, &mut r);
        let b = ((traj.theta[39] / TAU) * bins as f64) as usize;
        counts[b.min(bins - 1)] += 1;
    }
    let expected = draws as f64 / bins as f64;
    let chi2: f64 = counts.iter().map(|&c| (c as f64 - expected).powi(2) / expected).sum();
    // 99.9% quantile of chi-square with 19 degrees of freedom.
    assert!(chi2 < 43.82, "chi2 {chi2}");
}

#[test]
fn unitary_matrix_preserves_output_energy() {
    let h = dft2();
    assert!(h.is_unitary(1e-12));
    let (lo, hi) = singular_value_bounds(&h).unwrap();
    assert!((lo - 1.0).abs() < 1e-12 && (hi - 1.0).abs() < 1e-12);
    let general = ChannelParams::new(2, 0.1, ChannelMatrix::General(h.clone()), 10.0).unwrap();
    assert!(general.is_unitary());
    let inputs: Vec<Vec<Complex64>> = (0..50)
        .map(|k| vec![Complex64::from_polar(2.0, k as f64), Complex64::new(-1.0, 0.5)])
        .collect();
    let opts = SimulationOptions {
        noiseless: true,
        ..Default::default()
    };
    let (ys, _) = simulate(&general, &inputs, 8, opts).unwrap();
    for (x, y) in inputs.iter().zip(&ys) {
        let ex: f64 = x.iter().map(|v| v.norm_sqr()).sum();
        let ey: f64 = y.iter().map(|v| v.norm_sqr()).sum();
        assert!((ex - ey).abs() < 1e-12);
        let back = h.adjoint_mul_vec(y);
        let ratio = back[0] / x[0];
        assert!((ratio.norm() - 1.0).abs() < 1e-12);
        assert!((back[1] / x[1] - ratio).norm() < 1e-12);
    }
}

#[test]
fn identity_matrix_matches_the_unitary_shortcut() {
    let inputs = vec![vec![Complex64::new(1.0, 1.0), Complex64::new(0.0, -2.0)]; 20];
    let a = ChannelParams::unitary(2, 0.2, 20.0).unwrap();
    let b = ChannelParams::new(2, 0.2, ChannelMatrix::General(CMatrix::identity(2)), 20.0).unwrap();
    let ya = simulate(&a, &inputs, 3, SimulationOptions::default()).unwrap();
    let yb = simulate(&b, &inputs, 3, SimulationOptions::default()).unwrap();
    assert_eq!(ya, yb);
}

proptest! {
    #[test]
    fn matrix_text_round_trips(entries in proptest::collection::vec((-1e3f64..1e3, -1e3f64..1e3), 4)) {
        let rows = vec![
            vec![Complex64::new(entries[0].0, entries[0].1), Complex64::new(entries[1].0, entries[1].1)],
            vec![Complex64::new(entries[2].0, entries[2].1), Complex64::new(entries[3].0, entries[3].1)],
        ];
        let m = CMatrix::from_rows(rows).unwrap();
        let back = CMatrix::parse(&m.to_string(), Path::new("prop")).unwrap();
        prop_assert_eq!(back, m);
    }

    #[test]
    fn peak_normalization_respects_the_constraint(db in -5.0f64..40.0, m in 1usize..4, k in 1u32..4) {
        let snr = 10f64.powf(db / 10.0);
        let qam = Constellation::qam(4usize.pow(k)).unwrap().normalized(snr, m, Normalization::Peak);
        let peak = qam.max_magnitude().powi(2) * m as f64;
        prop_assert!(peak <= snr * (1.0 + 1e-12));
        prop_assert!(peak >= snr * (1.0 - 1e-12));
    }
}
