use massdist::dynamics::{
    compute_accel, dissipation_step_bound, kinetic_energy, simulate, state_accel, step,
    ObjectState, SimConfig, WrenchInput,
};
use massdist::object_model::{builtin_object, Object, CATALOG};
use nalgebra::Vector3;
use proptest::prelude::*;

fn object(i: usize) -> Object {
    builtin_object(CATALOG[i % CATALOG.len()]).unwrap()
}

fn state_strategy() -> impl Strategy<Value = ObjectState> {
    (
        -1.0..1.0f64,
        -1.0..1.0f64,
        -3.2..3.2f64,
        -0.3..0.3f64,
        -0.3..0.3f64,
        -1.0..1.0f64,
    )
        .prop_map(|(x, y, a, vx, vy, w)| {
            ObjectState::new(Vector3::new(x, y, a), Vector3::new(vx, vy, w))
        })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn grasp_transfer_keeps_accel(i in 0usize..8, st in state_strategy(), fx in -5.0..5.0f64, fy in -5.0..5.0f64, tw in -1.0..1.0f64, a in 0usize..64, b in 0usize..64) {
        let obj = object(i);
        let cfg = SimConfig::default();
        let h = obj.hidden_states(cfg.gravity).unwrap();
        let n = obj.model.len();
        let (pa, pb) = (a % n, b % n);
        let arm = st.to_world(&obj.model.positions[pa]) - st.to_world(&obj.model.positions[pb]);
        // compensating torque (u_x, u_y) ⊗ (p_a − p_b)
        let extra = fx * arm.y - fy * arm.x;
        let ua = WrenchInput::new(pa, Vector3::new(fx, fy, tw));
        let ub = WrenchInput::new(pb, Vector3::new(fx, fy, tw + extra));
        let x = compute_accel(&obj.model, &obj.maps, &h, &st, &ua, &cfg).unwrap().as_vector();
        let y = compute_accel(&obj.model, &obj.maps, &h, &st, &ub, &cfg).unwrap().as_vector();
        prop_assert!((x - y).amax() <= 1e-12 * x.amax().max(1.0));
    }

    #[test]
    fn frictionless_angular_accel_is_affine_in_torque(i in 0usize..8, st in state_strategy(), fx in -5.0..5.0f64, fy in -5.0..5.0f64, u in -2.0..2.0f64, d in 0.1..2.0f64, g in 0usize..64) {
        let mut obj = object(i);
        obj.params.mus.iter_mut().for_each(|m| *m = 0.0);
        let cfg = SimConfig::default();
        let h = obj.hidden_states(cfg.gravity).unwrap();
        let p = g % obj.model.len();
        let alpha = |uw: f64| compute_accel(&obj.model, &obj.maps, &h, &st, &WrenchInput::new(p, Vector3::new(fx, fy, uw)), &cfg).unwrap().angular;
        let (a0, a1, a2) = (alpha(u), alpha(u + d), alpha(u + 2.0 * d));
        prop_assert!(((a2 - a1) - (a1 - a0)).abs() <= 1e-12 * a0.abs().max(a2.abs()).max(1.0));
    }

    #[test]
    fn unforced_step_dissipates(i in 0usize..8, st in state_strategy(), frac in 0.0..1.0f64) {
        let obj = object(i);
        let mut cfg = SimConfig { velocity_epsilon: 0.0, ..SimConfig::default() };
        let h = obj.hidden_states(cfg.gravity).unwrap();
        let bound = dissipation_step_bound(&obj.model, &obj.maps, &h, &st, &cfg).unwrap();
        cfg.dt = (0.5 * frac * bound).clamp(1e-6, 0.01);
        let acc = state_accel(&obj.model, &obj.maps, &h, &st, &WrenchInput::zero(0), &cfg).unwrap();
        let next = step(&st, &acc, cfg.dt);
        let (k0, k1) = (kinetic_energy(&h, &st), kinetic_energy(&h, &next));
        prop_assert!(k1 <= k0 * (1.0 + 1e-12), "{k0} -> {k1} at dt {} (bound {bound})", cfg.dt);
    }

    #[test]
    fn simulate_is_bit_deterministic(i in 0usize..8, st in state_strategy(), fx in -5.0..5.0f64, tw in -1.0..1.0f64) {
        let obj = object(i);
        let cfg = SimConfig::default();
        let h = obj.hidden_states(cfg.gravity).unwrap();
        let inputs = vec![WrenchInput::new(0, Vector3::new(fx, 0.5, tw)); 50];
        let a = simulate(&obj.model, &obj.maps, &h, st, &inputs, &cfg).unwrap();
        let b = simulate(&obj.model, &obj.maps, &h, st, &inputs, &cfg).unwrap();
        prop_assert_eq!(a, b);
    }
}
