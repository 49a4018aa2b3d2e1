//! Observed orders of the scheme on pure diffusion (`k = 0`) with smooth
//! data: second order in space at cell centres, first order in time.

use std::f64::consts::PI;

use fastreact::scheme::project_initial;
use fastreact::{integrate, Kinetics, Mesh, OutputLevels, SolverConfig, State, TimeGrid};

const T: f64 = 0.05;

fn kinetics() -> Kinetics {
    Kinetics::power_law(2.0, 1.0, 1.0, 0.5, 0.0, 1.0, 2.0, 1.0, 1.0).unwrap()
}

fn solve(cells: usize, steps: usize) -> State {
    let mesh = Mesh::uniform_1d(1.0, cells).unwrap();
    let s0 = project_initial(
        &mesh,
        |x| 1.0 + (PI * x[0]).cos(),
        |x| 1.0 + 0.5 * (2.0 * PI * x[0]).cos(),
        5,
    )
    .unwrap();
    let grid = TimeGrid::uniform(T, steps).unwrap();
    integrate(
        &mesh,
        &kinetics(),
        &grid,
        &s0,
        &SolverConfig::default(),
        &OutputLevels::Listed(vec![]),
    )
    .unwrap()
    .last()
    .clone()
}

/// Discrete L2 distance of a coarse solution to a fine one averaged over the
/// `ratio` fine cells inside each coarse cell.
fn distance(coarse: &State, fine: &State, ratio: usize) -> f64 {
    let n = coarse.u.len();
    let avg = |f: &[f64], i: usize| f[i * ratio..(i + 1) * ratio].iter().sum::<f64>() / ratio as f64;
    let sum: f64 = (0..n)
        .map(|i| (coarse.u[i] - avg(&fine.u, i)).powi(2) + (coarse.v[i] - avg(&fine.v, i)).powi(2))
        .sum();
    (sum / n as f64).sqrt()
}

#[test]
fn spatial_order_is_two() {
    // tripling keeps cell centres nested; dt is shared so time errors cancel
    let steps = 200;
    let reference = solve(729, steps);
    let errors: Vec<f64> = [9, 27, 81]
        .iter()
        .map(|&n| distance(&solve(n, steps), &reference, 729 / n))
        .collect();
    for w in errors.windows(2) {
        let order = (w[0] / w[1]).ln() / 3f64.ln();
        eprintln!("spatial order {order:.4}");
        assert!((order - 2.0).abs() < 0.2, "errors {errors:?}, order {order}");
    }
}

#[test]
fn temporal_order_is_one() {
    let cells = 27;
    let reference = solve(cells, 10240);
    let errors: Vec<f64> = [20, 40, 80]
        .iter()
        .map(|&n| distance(&solve(cells, n), &reference, 1))
        .collect();
    for w in errors.windows(2) {
        let order = (w[0] / w[1]).log2();
        eprintln!("temporal order {order:.4}");
        assert!((order - 1.0).abs() < 0.2, "errors {errors:?}, order {order}");
    }
}
