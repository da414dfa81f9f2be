use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use setquant::geometry::linf;
use setquant::scenario::{
    make_lead_follow, make_three_vehicle, run_seeded, DrivingConfig, Policy, ScenarioSystem, SvKind,
};

fn builtins() -> Vec<ScenarioSystem> {
    let mut out = Vec::new();
    for sv in [SvKind::Brake, SvKind::Idm] {
        for omega_bar in [0.0, 0.5] {
            let cfg = DrivingConfig { sv, omega_bar, ..Default::default() };
            out.push(make_lead_follow(&cfg).unwrap());
            out.push(make_three_vehicle(&cfg).unwrap());
        }
    }
    out
}

fn random_disturbance(sys: &ScenarioSystem, rng: &mut ChaCha8Rng) -> Vec<f64> {
    let w = sys.disturbance_bound();
    (0..sys.disturbance_dim()).map(|_| if w > 0.0 { rng.random_range(-w..=w) } else { 0.0 }).collect()
}

#[test]
fn one_step_displacement_is_bounded() {
    for sys in builtins() {
        let mut rng = ChaCha8Rng::seed_from_u64(0xb0b);
        let bound = sys.one_step_bound();
        let mut worst: f64 = 0.0;
        for _ in 0..100_000 {
            let s = sys.state_box().sample(&mut rng);
            let u = sys.actions().sample(&mut rng);
            let w = random_disturbance(&sys, &mut rng);
            let out = sys.step(&s, &u, &w).unwrap();
            worst = worst.max(linf(&out.next, &s));
        }
        assert!(worst <= bound, "{}: {worst} > {bound}", sys.name());
    }
}

#[test]
fn speeds_never_go_negative() {
    for sys in builtins() {
        let speeds = if sys.dim() == 3 { 2 } else { 3 };
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        for _ in 0..20_000 {
            let mut s = sys.state_box().sample(&mut rng);
            for v in s.iter_mut().take(speeds) {
                *v = rng.random_range(0.0..0.6);
            }
            let u = sys.actions().sample(&mut rng);
            let w = random_disturbance(&sys, &mut rng);
            let out = sys.step(&s, &u, &w).unwrap();
            assert!(out.next[..speeds].iter().all(|v| *v >= 0.0), "{:?}", out.next);
        }
    }
}

#[test]
fn policies_emit_admissible_actions() {
    for sys in builtins() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for policy in [Policy::Uniform(sys.actions().clone()), Policy::adversarial_for(&sys)] {
            for _ in 0..2_000 {
                let s = sys.state_box().sample(&mut rng);
                let u = policy.act(&sys, &s, &mut rng).unwrap();
                assert!(sys.actions().contains(&u), "{u:?}");
            }
        }
    }
}

#[test]
fn equal_speeds_keep_gaps() {
    let lf = make_lead_follow(&DrivingConfig::default()).unwrap();
    let tv = make_three_vehicle(&DrivingConfig::default()).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    for _ in 0..5_000 {
        let v = rng.random_range(0.0..6.0);
        let p10 = rng.random_range(5.5..60.0);
        let u = lf.actions().sample(&mut rng);
        let out = lf.step(&[v, v, p10], &u, &[0.0, 0.0]).unwrap();
        assert_eq!(out.next[2], p10);

        let (p10, p20) = (rng.random_range(5.0..25.0), rng.random_range(-25.0..-5.0));
        let u = tv.actions().sample(&mut rng);
        let out = tv.step(&[v, v, v, p10, p20], &u, &[0.0; 3]).unwrap();
        assert_eq!((out.next[3], out.next[4]), (p10, p20));
    }
    // At rest with a braking lead, the gap never changes over a whole rollout.
    let t = run_seeded(&lf, &[0.0, 0.0, 7.0], 40, &Policy::constant(vec![-5.0]), 3).unwrap();
    assert!(t.states.iter().all(|s| s[2] == 7.0));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn rollouts_are_reproducible(seed in any::<u64>(), t in prop::collection::vec(0.0f64..=1.0, 5), k in 2usize..60, which in 0usize..8) {
        let sys = &builtins()[which];
        let b = sys.state_box();
        let s0: Vec<f64> = (0..sys.dim()).map(|i| b.lower()[i] + t[i] * b.width(i)).collect();
        let policy = Policy::Uniform(sys.actions().clone());
        let a = run_seeded(sys, &s0, k, &policy, seed).unwrap();
        let c = run_seeded(sys, &s0, k, &policy, seed).unwrap();
        prop_assert_eq!(&a, &c);
        prop_assert_eq!(a.states.len(), a.actions.len() + 1);
        prop_assert_eq!(&a.states[0], &s0);
        prop_assert!(a.states.len() <= k);
        if !a.is_unsafe() {
            prop_assert_eq!(a.states.len(), k);
        }
    }
}
