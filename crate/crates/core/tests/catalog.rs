use ratelab_core::engine::{run_instance, RunConfig, StepSchedule};
use ratelab_core::zoo::{self, Certificate};

fn close(a: f64, b: f64) -> bool {
    (a - b).abs() <= 1e-14 * b.abs().max(1.0)
}

#[test]
fn catalog_constants() {
    let cat = zoo::catalog();
    assert_eq!(cat.len(), zoo::BUNDLED.len());
    let get = |n: &str| cat.iter().find(|e| e.name == n).unwrap();

    // Two operators with uniform weights: rho = 1/2, p = rho / (2 - rho) = 1/3.
    for n in ["rkmm_theta1", "rkmm_theta_half"] {
        let e = get(n);
        assert_eq!((e.constants.c1, e.constants.c2, e.constants.c3), (1.0, 0.5, 1.0));
        assert!(close(e.p, 1.0 / 3.0));
    }
    // diag(1, 4) with singleton blocks: gamma_i L_i = 1, Lambda = 1, max L^2 = 16.
    let e = get("rcd_quadratic");
    assert!(close(e.constants.c1, 0.5));
    assert!(close(e.constants.c2, 1.0 / 32.0));
    assert!(close(e.constants.c3, 1.0));
    assert!(close(e.p, 1.0 / 63.0));

    assert_eq!(
        get("rkmm_theta_half").certificate,
        Certificate::Holder {
            theta: 0.5,
            r: 5f64.sqrt()
        }
    );
    assert!(matches!(get("rcd_quartic").certificate, Certificate::Kl { kappa, .. } if kappa == 0.75));
    assert_eq!(get("synthetic_sqrt").certificate, Certificate::Modulus);
}

#[test]
fn regimes_name_the_predicted_rate() {
    let cat = zoo::catalog();
    let regime = |n: &str| cat.iter().find(|e| e.name == n).unwrap().regime.clone();
    assert!(regime("rkmm_theta1").starts_with("linear"));
    assert!(regime("rkmm_theta_half").contains("A_k^-1"));
    assert!(regime("rcd_quartic").contains("A_k^-2"));
    assert!(regime("synthetic_sqrt").starts_with("finite termination"));
}

#[test]
fn bundled_instances_start_at_their_gap() {
    for name in zoo::BUNDLED {
        let inst = zoo::bundled(name).unwrap();
        let t = run_instance(
            &inst,
            &StepSchedule::constant(1.0).unwrap(),
            &RunConfig::new(5, 1, 0),
            0,
            0,
        )
        .unwrap();
        assert_eq!(t.records[0].h, inst.h0_gap(), "{name}");
        assert_eq!(t.h0, inst.h0_gap(), "{name}");
        assert!(t.records[0].a == 0.0);
    }
}
