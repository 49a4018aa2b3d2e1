//! Randomised structural properties of the scheme: conservation, comparison
//! principle, L1 contraction, sup-norm envelope, entropy decay, and the
//! identities behind them.

use fastreact::diagnostics::{l1_distance, Lyapunov};
use fastreact::scheme::{ode_upper_solution, step};
use fastreact::{integrate, Dimerisation, Kinetics, Mesh, OutputLevels, SolverConfig, State, TimeGrid};
use proptest::prelude::*;

fn dimer(k: f64) -> Kinetics {
    Dimerisation::reference().kinetics().unwrap().with_k(k).unwrap()
}

fn field(n: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(0.0..0.5f64, n)
}

fn k_value() -> impl Strategy<Value = f64> {
    prop_oneof![Just(0.0), Just(1.0), Just(1e3), 1e-3..1e2f64]
}

const TOL: f64 = 1e-12;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn double_sum_symmetry(a in prop::collection::vec(-1.0..1.0f64, 1..40)) {
        let mesh = Mesh::uniform_1d(1.0, a.len()).unwrap();
        let (mut lhs, mut rhs) = (0.0, 0.0);
        for k in 0..mesh.n_cells() {
            for &(l, f) in mesh.neighbors(k) {
                let t = mesh.faces()[f].transmissibility;
                lhs += t * a[k];
                rhs += t * a[l];
            }
        }
        prop_assert!((lhs - rhs).abs() <= 1e-12 * lhs.abs().max(1.0));
    }

    #[test]
    fn equilibrium_maps_round_trip(u in 0.0..5.0f64) {
        let kin = dimer(1.0);
        let w = kin.h(u).unwrap();
        prop_assert!((kin.h_inverse(w).unwrap() - u).abs() <= 1e-10 * u.max(1.0));
        let v = kin.eta(u).unwrap();
        prop_assert!((kin.r_a(u) - kin.r_b(v)).abs() <= 1e-10 * kin.r_a(u).max(1e-300));
        prop_assert!((kin.conserved(u, v) - w).abs() <= 1e-12 * w.max(1.0));
    }

    #[test]
    fn one_step_conserves_and_stays_in_envelope(
        u in field(12), v in field(12), k in k_value(), dt in prop_oneof![Just(1e-2), Just(1e2), Just(1e6)]
    ) {
        let mesh = Mesh::uniform_1d(0.1, 12).unwrap();
        let kin = dimer(k);
        let prev = State::new(u, v).unwrap();
        let (next, _) = step(&mesh, &kin, dt, &prev, &SolverConfig::default()).unwrap();
        let (m0, m1) = (prev.mass_w(&mesh, &kin), next.mass_w(&mesh, &kin));
        prop_assert!((m1 - m0).abs() <= 1e-10 * m0.max(1e-300));
        let ub = prev.max_u() + 2.0 * prev.max_v();
        let vb = prev.max_v() + 0.5 * prev.max_u();
        prop_assert!(next.min_u() >= -10.0 * TOL && next.min_v() >= -10.0 * TOL);
        prop_assert!(next.max_u() <= ub + 10.0 * TOL && next.max_v() <= vb + 10.0 * TOL);
    }

    #[test]
    fn comparison_and_l1_contraction(
        u in field(8), v in field(8), du in field(8), dv in field(8), k in k_value()
    ) {
        let mesh = Mesh::uniform_1d(0.1, 8).unwrap();
        let kin = dimer(k);
        let cfg = SolverConfig::default();
        let lo = State::new(u.clone(), v.clone()).unwrap();
        let hi = State::new(
            u.iter().zip(&du).map(|(a, b)| a + b).collect(),
            v.iter().zip(&dv).map(|(a, b)| a + b).collect(),
        ).unwrap();
        let grid = TimeGrid::uniform(1e5, 10).unwrap();
        let a = integrate(&mesh, &kin, &grid, &lo, &cfg, &OutputLevels::All).unwrap();
        let b = integrate(&mesh, &kin, &grid, &hi, &cfg, &OutputLevels::All).unwrap();
        let mut prev = l1_distance(&mesh, &kin, &a.states[0], &b.states[0]).unwrap();
        for (x, y) in a.states.iter().zip(&b.states) {
            for i in 0..8 {
                prop_assert!(x.u[i] <= y.u[i] + 10.0 * TOL && x.v[i] <= y.v[i] + 10.0 * TOL);
            }
            let d = l1_distance(&mesh, &kin, x, y).unwrap();
            prop_assert!(d <= prev + 10.0 * TOL, "{d} > {prev}");
            prev = d;
        }
    }

    #[test]
    fn lyapunov_is_nonincreasing(u in field(10), v in field(10), k in prop_oneof![Just(1.0), Just(1e2)]) {
        let mesh = Mesh::uniform_1d(0.1, 10).unwrap();
        let kin = dimer(k);
        // keep the mean of u positive so the reference pair exists
        let s0 = State::new(u.iter().map(|x| x + 0.01).collect(), v).unwrap();
        let grid = TimeGrid::ramped(1.0, 1.5, 1e7).unwrap();
        let traj = integrate(&mesh, &kin, &grid, &s0, &SolverConfig::default(), &OutputLevels::All).unwrap();
        let lyap = Lyapunov::new(&kin, Lyapunov::default_reference(&mesh, &kin, &s0).unwrap()).unwrap();
        let values: Vec<f64> = traj.states.iter().map(|s| lyap.evaluate(&mesh, s).unwrap()).collect();
        for w in values.windows(2) {
            prop_assert!(w[1] <= w[0] + 10.0 * TOL * 10.0, "{} -> {}", w[0], w[1]);
        }
    }

    #[test]
    fn ode_solution_dominates(u in field(10), v in field(10), k in k_value()) {
        let mesh = Mesh::uniform_1d(0.1, 10).unwrap();
        let kin = dimer(k);
        let s0 = State::new(u, v).unwrap();
        let grid = TimeGrid::ramped(10.0, 1.3, 1e6).unwrap();
        let traj = integrate(&mesh, &kin, &grid, &s0, &SolverConfig::default(), &OutputLevels::All).unwrap();
        let ode = ode_upper_solution(&kin, &grid, s0.max_u(), s0.max_v()).unwrap();
        for (s, &(ub, vb)) in traj.states.iter().zip(&ode) {
            prop_assert!(s.max_u() <= ub + 1e-10 && s.max_v() <= vb + 1e-10);
        }
    }
}

#[test]
fn zero_data_stays_zero() {
    let mesh = Mesh::uniform_1d(0.1, 5).unwrap();
    let grid = TimeGrid::uniform(1e3, 5).unwrap();
    let traj = integrate(
        &mesh,
        &dimer(1.0),
        &grid,
        &State::constant(5, 0.0, 0.0),
        &SolverConfig::default(),
        &OutputLevels::All,
    )
    .unwrap();
    assert!(traj.states.iter().all(|s| s.max_u() == 0.0 && s.max_v() == 0.0));
}
