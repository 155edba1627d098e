mod common;

use memsched::fixtures;
use memsched::profiles::{fit_transfer_params, load_platform_profile, load_workload};
use rand::Rng;
use rand_distr::{Distribution, Normal};

#[test]
fn generated_workloads_round_trip() {
    let mut rng = common::rng(201);
    for i in 0..50 {
        let w = common::workload(&mut rng, 1 + i % 5, i % 2 == 0);
        assert_eq!(load_workload(&w.to_json()).unwrap(), w);
    }
}

#[test]
fn fixture_workload_round_trips() {
    let w = fixtures::batch(vec![fixtures::nw_like(), fixtures::gaussian_like()]);
    let back = load_workload(&w.to_json()).unwrap();
    assert_eq!(back, w);
    let p = fixtures::reference_platform();
    assert_eq!(load_platform_profile(&p.to_json()).unwrap(), p);
}

#[test]
fn fit_recovers_parameters_from_noisy_samples() {
    let mut rng = common::rng(202);
    let noise = Normal::new(1.0, 0.01).unwrap();
    for _ in 0..20 {
        let tr_ini = rng.gen_range(0.01..1.0);
        let rate = rng.gen_range(1e-9..1e-7);
        let samples: Vec<(f64, f64)> = (1..=50)
            .map(|i| {
                let bytes = i as f64 * 1e6;
                (bytes, (tr_ini + rate * bytes) * noise.sample(&mut rng))
            })
            .collect();
        let fit = fit_transfer_params(&samples).unwrap();
        assert!((fit.rate - rate).abs() / rate < 0.05, "{fit:?} vs {rate}");
    }
}
