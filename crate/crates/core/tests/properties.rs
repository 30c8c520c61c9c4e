use std::f64::consts::TAU;

use num_complex::Complex64;
use proptest::prelude::*;
use rotators_core::clock::{jump_rate, rate_bound};
use rotators_core::observables::unwrap_phase;
use rotators_core::state::wrap_angle;
use rotators_core::{
    energy, grad_site, local_energy_delta, magnetization, Boundary, ClockParams, Direction, Interaction, Lattice,
    SpinState,
};

fn boundary() -> impl Strategy<Value = Boundary> {
    prop_oneof![
        Just(Boundary::Periodic),
        (0.0..TAU).prop_map(|zeta| Boundary::Coherent { zeta }),
        (0u32..4).prop_map(|k| Boundary::InterfaceClamped { k, n: 4 }),
        Just(Boundary::Open),
    ]
}

fn interaction() -> impl Strategy<Value = Interaction> {
    prop_oneof![
        Just(Interaction::Cosine),
        (1.0..8.0f64).prop_map(|p| Interaction::VeryNonlinear { p }),
    ]
}

fn dims() -> impl Strategy<Value = [usize; 3]> {
    (prop::sample::select(vec![2usize, 4]), 1usize..4, 1usize..4).prop_map(|(a, b, c)| [a, b, c])
}

fn xy_case() -> impl Strategy<Value = (Lattice, SpinState)> {
    (dims(), boundary()).prop_flat_map(|(d, b)| {
        let lat = Lattice::new(d, b).unwrap();
        let n = lat.num_sites();
        (Just(lat), prop::collection::vec(0.0..TAU, n).prop_map(SpinState::xy))
    })
}

fn torus_case() -> impl Strategy<Value = (Lattice, SpinState)> {
    (1usize..5, 1usize..5, 1usize..5).prop_flat_map(|(a, b, c)| {
        let lat = Lattice::new([a, b, c], Boundary::Periodic).unwrap();
        let n = lat.num_sites();
        (Just(lat), prop::collection::vec(0.0..TAU, n).prop_map(SpinState::xy))
    })
}

fn clock_case() -> impl Strategy<Value = (Lattice, SpinState, u32)> {
    (dims(), prop::sample::select(vec![3u32, 4, 6, 7])).prop_flat_map(|(d, n)| {
        let lat = Lattice::new(d, Boundary::Periodic).unwrap();
        let sites = lat.num_sites();
        (
            Just(lat),
            prop::collection::vec(0..n as u16, sites).prop_map(move |v| SpinState::clock(n, v).unwrap()),
            Just(n),
        )
    })
}

fn rel_close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * a.abs().max(b.abs()).max(1e-300)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn energy_is_translation_invariant_on_the_torus((lat, s) in torus_case(), shift in (0usize..5, 0usize..5, 0usize..5)) {
        let [l1, l2, l3] = lat.dims();
        let mut shifted = vec![0.0; lat.num_sites()];
        for x in 0..lat.num_sites() {
            let [a, b, c] = lat.coords(x);
            let y = lat.index([(a + shift.0) % l1, (b + shift.1) % l2, (c + shift.2) % l3]);
            shifted[y] = s.angle(x);
        }
        let e0 = energy(&s, &lat, &Interaction::Cosine).unwrap();
        let e1 = energy(&SpinState::xy(shifted), &lat, &Interaction::Cosine).unwrap();
        prop_assert!((e0 - e1).abs() <= 1e-10 * e0.abs().max(1.0));
    }

    #[test]
    fn energy_is_rotation_invariant((lat, s) in torus_case(), alpha in 0.0..TAU, inter in interaction()) {
        let e0 = energy(&s, &lat, &inter).unwrap();
        let e1 = energy(&s.rotated(alpha), &lat, &inter).unwrap();
        prop_assert!((e0 - e1).abs() <= 1e-12 * e0.abs().max(1.0));
    }

    #[test]
    fn clock_energy_is_invariant_under_grid_rotation((lat, s, n) in clock_case(), j in 0i64..12) {
        let e0 = energy(&s, &lat, &Interaction::Cosine).unwrap();
        let e1 = energy(&s.rotated_clock(j), &lat, &Interaction::Cosine).unwrap();
        prop_assert!((e0 - e1).abs() <= 1e-12 * e0.abs().max(1.0), "N = {}", n);
    }

    #[test]
    fn very_nonlinear_p1_is_affine_in_cosine((lat, s) in xy_case()) {
        let cos = energy(&s, &lat, &Interaction::Cosine).unwrap();
        let vn = energy(&s, &lat, &Interaction::VeryNonlinear { p: 1.0 }).unwrap();
        prop_assert!((vn - (cos / 2.0 - lat.num_bonds() as f64 / 2.0)).abs() < 1e-10);
    }

    #[test]
    fn gradient_is_rotation_invariant((lat, s) in xy_case(), alpha in 0.0..TAU, inter in interaction()) {
        let r = s.rotated(alpha);
        // fixed virtual spins break the symmetry, so only internal bonds count
        if matches!(lat.boundary(), Boundary::Periodic | Boundary::Open) {
            for x in 0..lat.num_sites() {
                let g0 = grad_site(&s, &lat, &inter, x);
                let g1 = grad_site(&r, &lat, &inter, x);
                prop_assert!((g0 - g1).abs() < 1e-14 * 6.0 * g0.abs().max(1.0), "{} vs {}", g0, g1);
            }
        }
    }

    #[test]
    fn total_torque_vanishes_on_the_torus((lat, s) in torus_case(), inter in interaction()) {
        let total: f64 = (0..lat.num_sites()).map(|x| grad_site(&s, &lat, &inter, x)).sum();
        prop_assert!(total.abs() < 1e-10);
    }

    #[test]
    fn magnetization_is_equivariant((_lat, s) in xy_case(), alpha in 0.0..TAU) {
        let m0 = magnetization(&s);
        let m1 = magnetization(&s.rotated(alpha));
        prop_assert!((m1 - m0 * Complex64::from_polar(1.0, alpha)).norm() < 1e-14);
        prop_assert!(m0.norm() <= 1.0 + 1e-15);
    }

    #[test]
    fn clock_magnetization_modulus_is_one_only_when_aligned((_lat, s, _n) in clock_case()) {
        let SpinState::Clock { indices, .. } = &s else { unreachable!() };
        let aligned = indices.iter().all(|&k| k == indices[0]);
        let m = magnetization(&s).norm();
        prop_assert!(m <= 1.0 + 1e-15);
        prop_assert_eq!(aligned, (m - 1.0).abs() < 1e-12);
    }

    #[test]
    fn unwrapped_phase_differs_by_whole_turns(steps in prop::collection::vec(-3.0..3.0f64, 1..200), start in 0.0..TAU) {
        let mut acc = start;
        let wrapped: Vec<f64> = steps.iter().map(|s| { acc += s; wrap_angle(acc) - std::f64::consts::PI }).collect();
        let u = unwrap_phase(&wrapped);
        for (v, w) in u.values.iter().zip(&wrapped) {
            let turns = (v - w) / TAU;
            prop_assert!((turns - turns.round()).abs() < 1e-12);
        }
        for i in 1..wrapped.len() {
            prop_assert!((u.values[i] - u.values[i - 1]).abs() <= std::f64::consts::PI + 1e-12);
        }
    }

    #[test]
    fn clock_rates_are_invariant_under_grid_rotation((lat, s, n) in clock_case(), j in 0i64..12, d in 0.0..3.0f64, beta in 0.0..3.0f64) {
        let p = ClockParams::from_drift(beta, n, d, Interaction::Cosine).unwrap();
        let r = s.rotated_clock(j);
        for x in 0..lat.num_sites() {
            for dir in [Direction::Plus, Direction::Minus] {
                let a = jump_rate(&s, &lat, &p, x, dir);
                let b = jump_rate(&r, &lat, &p, x, dir);
                prop_assert!(rel_close(a, b, 1e-13));
                prop_assert!(a > 0.0 && a <= rate_bound(&p) * (1.0 + 1e-12));
            }
        }
    }
}

#[test]
fn local_delta_matches_full_recomputation_over_many_moves() {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
    for (b, inter) in [
        (Boundary::Periodic, Interaction::Cosine),
        (Boundary::Coherent { zeta: 0.4 }, Interaction::VeryNonlinear { p: 3.0 }),
        (Boundary::InterfaceClamped { k: 1, n: 6 }, Interaction::Cosine),
        (Boundary::Open, Interaction::VeryNonlinear { p: 6.0 }),
    ] {
        let lat = Lattice::new([4, 3, 2], b).unwrap();
        let mut angles: Vec<f64> = (0..lat.num_sites()).map(|_| rng.random_range(0.0..TAU)).collect();
        let mut e = energy(&SpinState::xy(angles.clone()), &lat, &inter).unwrap();
        for _ in 0..1000 {
            let x = rng.random_range(0..lat.num_sites());
            let new = rng.random_range(0.0..TAU);
            let s = SpinState::xy(angles.clone());
            let delta = local_energy_delta(&s, &lat, &inter, x, new);
            angles[x] = new;
            let e_new = energy(&SpinState::xy(angles.clone()), &lat, &inter).unwrap();
            assert!((delta - (e_new - e)).abs() < 1e-10, "{delta} vs {}", e_new - e);
            e = e_new;
        }
    }
}

#[test]
fn gradient_matches_central_differences() {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
    let h = 1e-6;
    for inter in [
        Interaction::Cosine,
        Interaction::VeryNonlinear { p: 1.0 },
        Interaction::VeryNonlinear { p: 6.0 },
    ] {
        for case in 0..100 {
            let b = match case % 3 {
                0 => Boundary::Periodic,
                1 => Boundary::Coherent { zeta: 1.0 },
                _ => Boundary::InterfaceClamped { k: 0, n: 4 },
            };
            let lat = Lattice::new([4, 3, 3], b).unwrap();
            let s = SpinState::xy((0..lat.num_sites()).map(|_| rng.random_range(0.0..TAU)).collect());
            for x in [0, lat.num_sites() / 2, lat.num_sites() - 1] {
                let plus = local_energy_delta(&s, &lat, &inter, x, s.angle(x) + h);
                let minus = local_energy_delta(&s, &lat, &inter, x, s.angle(x) - h);
                let fd = (plus - minus) / (2.0 * h);
                let g = grad_site(&s, &lat, &inter, x);
                assert!((fd - g).abs() < 1e-6, "{inter:?}: fd {fd} vs grad {g}");
            }
        }
    }
}

#[test]
fn detailed_balance_identity_on_random_configurations() {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(99);
    let lat = Lattice::new([4, 4, 4], Boundary::Periodic).unwrap();
    for &n in &[3u32, 4, 6] {
        for &beta in &[0.5, 2.0] {
            for &d in &[0.0, 0.7] {
                let p = ClockParams::from_drift(beta, n, d, Interaction::Cosine).unwrap();
                for _ in 0..200 {
                    let idx: Vec<u16> = (0..64).map(|_| rng.random_range(0..n as u16)).collect();
                    let s = SpinState::clock(n, idx.clone()).unwrap();
                    let x = rng.random_range(0..64);
                    let mut moved = idx;
                    moved[x] = ((moved[x] as u32 + 1) % n) as u16;
                    let t = SpinState::clock(n, moved).unwrap();
                    let dh = energy(&t, &lat, &Interaction::Cosine).unwrap() - energy(&s, &lat, &Interaction::Cosine).unwrap();
                    let fwd = jump_rate(&s, &lat, &p, x, Direction::Plus);
                    let back = jump_rate(&t, &lat, &p, x, Direction::Minus);
                    let lhs = fwd;
                    let rhs = (p.p_plus / p.p_minus) * back * (-beta * dh).exp();
                    assert!(rel_close(lhs, rhs, 1e-12), "{lhs} vs {rhs}");
                }
            }
        }
    }
}

#[test]
fn mirror_symmetry_at_zero_drift() {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
    let lat = Lattice::new([3, 3, 3], Boundary::Periodic).unwrap();
    let n = 5;
    let p = ClockParams::from_drift(1.3, n, 0.0, Interaction::Cosine).unwrap();
    for _ in 0..100 {
        let idx: Vec<u16> = (0..27).map(|_| rng.random_range(0..n as u16)).collect();
        let mirror: Vec<u16> = idx.iter().map(|&k| (n as u16 - k) % n as u16).collect();
        let s = SpinState::clock(n, idx).unwrap();
        let m = SpinState::clock(n, mirror).unwrap();
        for x in 0..27 {
            let a = jump_rate(&s, &lat, &p, x, Direction::Plus);
            let b = jump_rate(&m, &lat, &p, x, Direction::Minus);
            assert!((a - b).abs() < 1e-14 * a.max(1.0));
        }
    }
}
