use proptest::prelude::*;

use ratelab_core::auditor::{audit_suite, extract_z};
use ratelab_core::engine::{run_instance, synthetic_run, z_rule, RunConfig, StepSchedule, SyntheticProcess};
use ratelab_core::lab::{dominance_couple, fit_exponent};
use ratelab_core::math::Matrix;
use ratelab_core::rate_kernel::envelope::{almost_sure_h, expectation_h};
use ratelab_core::rate_kernel::{DescentConstants, EnvelopeParams, Extended, PhiSpec, RateProfile};
use ratelab_core::rng;
use ratelab_core::zoo::{FeasibilitySpec, Instance, InstanceSpec, Objective, OperatorSpec, SmoothSpec};

fn schedule() -> impl Strategy<Value = StepSchedule> {
    prop_oneof![
        (0.1f64..=1.0).prop_map(|a| StepSchedule::constant(a).unwrap()),
        (0.1f64..=1.0, 0.0f64..=1.0).prop_map(|(s, q)| StepSchedule::poly_decay(s, q).unwrap()),
    ]
}

fn constants() -> impl Strategy<Value = DescentConstants> {
    (0.1f64..2.0, 0.05f64..1.0, 1.0f64..3.0)
        .prop_map(|(c1, c2, ratio)| DescentConstants::new(c1, c2, c2 * ratio).unwrap())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn synthetic_runs_satisfy_structural_audits(
        a in 0.2f64..4.0,
        q in 0.3f64..3.0,
        c in constants(),
        h0 in 0.01f64..1.0,
        s in schedule(),
        seed in any::<u64>(),
    ) {
        let params = EnvelopeParams::from_constants(c, s.alpha_bar(), h0).unwrap();
        let process = SyntheticProcess::new("p", PhiSpec::power(a, q, 2.0).unwrap(), params).unwrap();
        let cfg = RunConfig::new(300, 1, seed);
        let t = synthetic_run(&process, &s, &cfg, seed, 0).unwrap();
        prop_assert!(t.check_invariants().is_ok());
        let audit = audit_suite(&t);
        prop_assert!(audit.passed, "{:?}", audit.checks);
        let again = synthetic_run(&process, &s, &cfg, seed, 0).unwrap();
        prop_assert_eq!(t.records, again.records);
    }

    #[test]
    fn rkmm_on_random_halfspaces_passes_audits(
        angles in proptest::collection::vec(0.0f64..std::f64::consts::TAU, 1..5),
        x0 in proptest::collection::vec(-3.0f64..3.0, 2),
        rho in 0.1f64..=1.0,
        seed in any::<u64>(),
    ) {
        let operators = angles
            .iter()
            .map(|t| OperatorSpec::HalfspaceProj { normal: vec![t.cos(), t.sin()], offset: 0.0 })
            .collect();
        let spec = InstanceSpec::Feasibility(FeasibilitySpec {
            name: "random".into(),
            operators,
            x0,
            certified_theta: 1.0,
            certified_r: 1.0,
            valid_radius: 10.0,
            weights: None,
            witness: Some(vec![0.0, 0.0]),
        });
        let inst = spec.build().unwrap();
        let c = inst.constants();
        prop_assert_eq!((c.c1, c.c3), (1.0, 1.0));
        let s = StepSchedule::constant(rho).unwrap();
        let t = run_instance(&inst, &s, &RunConfig::new(200, 1, seed), seed, 0).unwrap();
        prop_assert!(t.check_invariants().is_ok());
        let audit = audit_suite(&t);
        prop_assert!(audit.passed, "{:?}", audit.checks);
    }

    #[test]
    fn rsd_on_random_diagonal_quadratics_passes_audits(
        diag in proptest::collection::vec(0.2f64..5.0, 1..4),
        seed in any::<u64>(),
    ) {
        let d = diag.len();
        let spec = InstanceSpec::Smooth(SmoothSpec {
            name: "q".into(),
            objective: Objective::Quadratic { a: Matrix::diagonal(&diag), b: vec![0.0; d] },
            blocks: (0..d).map(|i| vec![i]).collect(),
            preconditioners: None,
            x0: vec![1.0; d],
            certified_kappa: 0.5,
            certified_cbar: 1.0,
            weights: None,
            lipschitz: None,
            argmin: None,
        });
        let inst = spec.build().unwrap();
        let t = run_instance(&inst, &StepSchedule::constant(1.0).unwrap(), &RunConfig::new(200, 1, seed), seed, 0).unwrap();
        prop_assert!(t.check_invariants().is_ok());
        prop_assert!(audit_suite(&t).passed);
    }

    #[test]
    fn psi_inverse_round_trips(
        a in 0.1f64..10.0,
        q in 0.2f64..3.0,
        frac in 1e-6f64..0.999,
    ) {
        let tau = 4.0;
        let profile = RateProfile::new(PhiSpec::power(a, q, tau).unwrap(), 1.0).unwrap();
        let t = frac * tau;
        let Extended::Finite(y) = profile.psi(t).unwrap() else {
            return Err(TestCaseError::fail("Psi is finite inside the domain"));
        };
        let back = profile.psi_inverse(y).unwrap();
        prop_assert!((back - t).abs() <= 1e-9 * t, "{} vs {}", back, t);
    }

    #[test]
    fn envelopes_start_at_h0_and_decrease(
        c in constants(),
        q in 1.0f64..3.0,
        h0 in 0.01f64..1.0,
    ) {
        let params = EnvelopeParams::from_constants(c, 1.0, h0).unwrap();
        let profile = RateProfile::with_default_t0(PhiSpec::power(1.0, q, 2.0).unwrap(), Some(h0)).unwrap();
        let mut prev_e = f64::INFINITY;
        let mut prev_s = f64::INFINITY;
        for k in 0..50 {
            let a = k as f64 * 2.0;
            let e = expectation_h(&profile, &params, a).unwrap();
            let s = almost_sure_h(&profile, &params, a).unwrap();
            prop_assert!(e <= prev_e * (1.0 + 1e-12));
            prop_assert!(s <= prev_s * (1.0 + 1e-12));
            prev_e = e;
            prev_s = s;
        }
        // At A = 0 both terms of the expectation bound equal h0.
        let e0 = expectation_h(&profile, &params, 0.0).unwrap();
        prop_assert!((e0 - 2.0 * h0).abs() <= 1e-9 * h0);
    }

    #[test]
    fn fit_exponent_is_scale_invariant(
        slope in -3.0f64..-0.1,
        scale in 1e-3f64..1e3,
    ) {
        let a: Vec<f64> = (1..=500).map(|k| k as f64).collect();
        let v: Vec<f64> = a.iter().map(|x| x.powf(slope)).collect();
        let w: Vec<f64> = v.iter().map(|x| scale * x).collect();
        let f = fit_exponent(&a, &v, 0.5).unwrap();
        let g = fit_exponent(&a, &w, 0.5).unwrap();
        prop_assert!((f.slope - slope).abs() < 1e-9);
        prop_assert!((g.slope - f.slope).abs() < 1e-9);
        prop_assert!((g.intercept - f.intercept - scale.ln()).abs() < 1e-9);
    }

    #[test]
    fn coupling_never_exceeds_input(
        z in proptest::collection::vec(any::<bool>(), 1..200),
        p in 0.05f64..=1.0,
        seed in any::<u64>(),
    ) {
        let mut r = rng::stream(seed, 0);
        let q: Vec<f64> = z.iter().map(|_| p + (1.0 - p) * rng::open01(&mut r)).collect();
        let y = dominance_couple(&z, &q, p, &mut rng::stream(seed, 1)).unwrap();
        prop_assert!(y.iter().zip(&z).all(|(a, b)| !a || *b));
    }

    #[test]
    fn summable_schedules_are_rejected(q in 1.0001f64..4.0, scale in 0.01f64..1.0) {
        prop_assert!(StepSchedule::poly_decay(scale, q).is_err());
    }

    #[test]
    fn divergent_schedules_are_non_increasing(s in schedule()) {
        prop_assert!(s.validate().is_ok());
        let mut prev = s.alpha_bar();
        for k in 0..200 {
            let a = s.alpha(k);
            prop_assert!(a > 0.0 && a <= prev);
            prev = a;
        }
    }

    #[test]
    fn z_rule_threshold(c in constants(), g in 1e-6f64..10.0, alpha in 0.01f64..1.0, ratio in 0.0f64..2.0) {
        let step_sq = ratio * c.c2 * alpha * alpha * g;
        let (z_ratio, z) = z_rule(&c, g, step_sq, alpha);
        prop_assert!((z_ratio - ratio * c.c2).abs() <= 1e-12 * c.c2.max(z_ratio));
        if (ratio - 0.5).abs() > 1e-9 {
            prop_assert_eq!(z, ratio > 0.5);
        }
        prop_assert!(z_rule(&c, 0.0, 0.0, alpha).1);
    }
}

#[test]
fn extracted_indicators_match_recorded_column() {
    for name in ratelab_core::zoo::BUNDLED {
        let inst = ratelab_core::zoo::bundled(name).unwrap();
        let t = run_instance(
            &inst,
            &StepSchedule::constant(1.0).unwrap(),
            &RunConfig::new(300, 1, 4),
            4,
            0,
        )
        .unwrap();
        let z = extract_z(&t).z;
        let recorded: Vec<bool> = t.records.iter().map(|r| r.z).collect();
        assert_eq!(z, recorded, "{name}");
        if let Instance::Synthetic(_) = inst {
            assert!(t.terminated);
        }
    }
}
