//! Structural properties of the discrete problem: comparison principle,
//! oddness, sublinearity, the cocycle identity, and the principal eigenpair
//! against a dense eigensolver and the continuum values.

use attractor_lab::cocycle::{log_cocycle, DEFAULT_STEP};
use attractor_lab::parabolic::{evolve, BoundaryCondition, FieldState, Grid, LinearCoefficientSpec, NonlinearitySpec};
use attractor_lab::{DriverSpec, HullPoint};
use nalgebra::{DMatrix, SymmetricEigen};
use proptest::prelude::*;

const BCS: [BoundaryCondition; 3] = [
    BoundaryCondition::Neumann,
    BoundaryCondition::Robin { alpha_bar: 1.0 },
    BoundaryCondition::Dirichlet,
];

fn field(grid: &Grid, mut v: Vec<f64>) -> FieldState {
    if grid.bc == BoundaryCondition::Dirichlet {
        let n = v.len();
        v[0] = 0.0;
        v[n - 1] = 0.0;
    }
    FieldState::from_values(grid, v).unwrap()
}

fn coeff(grid: &Grid, d: DriverSpec, shift: f64) -> LinearCoefficientSpec {
    LinearCoefficientSpec::new(grid.gamma0(), HullPoint::new(d, shift))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn ordered_data_stay_ordered(
        bc in 0usize..3,
        shift in -30.0..30.0f64,
        base in prop::collection::vec(0.0..2.0f64, 17),
        delta in prop::collection::vec(0.0..0.5f64, 17),
    ) {
        let grid = Grid::unit(17, BCS[bc]).unwrap();
        let c = coeff(&grid, DriverSpec::P1, shift);
        let g = NonlinearitySpec::pure_power(1.0, 3.0).unwrap();
        let z1 = field(&grid, base.clone());
        let z2 = field(&grid, base.iter().zip(&delta).map(|(a, b)| a + b).collect());
        let u1 = evolve(&c, &g, &grid, &z1, 1.0, 0.005).unwrap();
        let u2 = evolve(&c, &g, &grid, &z2, 1.0, 0.005).unwrap();
        for (a, b) in u1.values.iter().zip(&u2.values) {
            prop_assert!(*a <= *b + 1e-12);
        }
        prop_assert!(u1.values.iter().all(|v| *v >= 0.0));
    }

    #[test]
    fn a_nonzero_gap_becomes_strictly_positive(
        bc in 0usize..3,
        base in prop::collection::vec(0.0..1.0f64, 17),
        node in 1usize..16,
        bump in 1e-2..1.0f64,
    ) {
        let grid = Grid::unit(17, BCS[bc]).unwrap();
        let c = coeff(&grid, DriverSpec::P0, 0.0);
        let g = NonlinearitySpec::pure_power(1.0, 3.0).unwrap();
        let z1 = field(&grid, base.clone());
        let mut raised = base;
        raised[node] += bump;
        let z2 = field(&grid, raised);
        let u1 = evolve(&c, &g, &grid, &z1, 0.5, 0.005).unwrap();
        let u2 = evolve(&c, &g, &grid, &z2, 0.5, 0.005).unwrap();
        for i in 1..16 {
            prop_assert!(u2.values[i] > u1.values[i], "node {}", i);
        }
    }

    #[test]
    fn odd_and_sublinear(
        base in prop::collection::vec(0.0..1.5f64, 17),
        lambda in 1.01..6.0f64,
        dead in any::<bool>(),
    ) {
        let grid = Grid::unit(17, BoundaryCondition::Neumann).unwrap();
        let c = coeff(&grid, DriverSpec::P2, -2.0);
        let g = if dead {
            NonlinearitySpec::deadzone(1.0, 2.0, 0.3).unwrap()
        } else {
            NonlinearitySpec::pure_power(1.0, 2.0).unwrap()
        };
        let z = field(&grid, base);
        let u = evolve(&c, &g, &grid, &z, 1.0, 0.005).unwrap();
        let um = evolve(&c, &g, &grid, &z.scaled(-1.0), 1.0, 0.005).unwrap();
        prop_assert!(u.add(&um).sup_norm() < 1e-12);
        let ul = evolve(&c, &g, &grid, &z.scaled(lambda), 1.0, 0.005).unwrap();
        for (a, b) in ul.values.iter().zip(&u.values) {
            prop_assert!(*a <= lambda * b + 1e-12);
        }
    }

    #[test]
    fn cocycle_identity(
        which in 0usize..4,
        shift in -100.0..100.0f64,
        t in -60.0..60.0f64,
        s in -60.0..60.0f64,
    ) {
        let d = [DriverSpec::P0, DriverSpec::P1, DriverSpec::P2, DriverSpec::constant(-0.3)][which].clone();
        let p = HullPoint::new(d, shift);
        let lhs = log_cocycle(&p, t + s, DEFAULT_STEP);
        let rhs = log_cocycle(&p.advance(s), t, DEFAULT_STEP) + log_cocycle(&p, s, DEFAULT_STEP);
        prop_assert!((lhs - rhs).abs() < 1e-8, "{} vs {}", lhs, rhs);
    }
}

/// Dense `-Δ` built column by column from the grid's own operator, restricted
/// to the unknowns, and the trapezoid weights that make it symmetric.
fn dense_operator(grid: &Grid) -> (DMatrix<f64>, Vec<f64>, std::ops::Range<usize>) {
    let n = grid.n_nodes;
    let r = if grid.bc == BoundaryCondition::Dirichlet { 1..n - 1 } else { 0..n };
    let m = r.len();
    let mut a = DMatrix::zeros(m, m);
    for (j, col) in r.clone().enumerate() {
        let mut v = vec![0.0; n];
        v[col] = 1.0;
        let out = grid.apply_minus_laplacian(&FieldState::from_values(grid, v).unwrap());
        for (i, row) in r.clone().enumerate() {
            a[(i, j)] = out[row];
        }
    }
    let mut w = vec![1.0; m];
    if grid.bc != BoundaryCondition::Dirichlet {
        w[0] = 0.5;
        w[m - 1] = 0.5;
    }
    (a, w, r)
}

#[test]
fn principal_eigenpair_matches_dense_solver() {
    for bc in [
        BoundaryCondition::Neumann,
        BoundaryCondition::Robin { alpha_bar: 0.5 },
        BoundaryCondition::Robin { alpha_bar: 3.0 },
        BoundaryCondition::Dirichlet,
    ] {
        let grid = Grid::unit(41, bc).unwrap();
        let (a, w, r) = dense_operator(&grid);
        let m = a.nrows();
        let s = DMatrix::from_fn(m, m, |i, j| w[i].sqrt() * a[(i, j)] / w[j].sqrt());
        let sym_err = (&s - s.transpose()).abs().max();
        assert!(sym_err < 1e-9 * s.abs().max(), "{bc}: not symmetrizable ({sym_err})");
        let eig = SymmetricEigen::new(s);
        let (k, lambda) = eig
            .eigenvalues
            .iter()
            .enumerate()
            .min_by(|x, y| x.1.total_cmp(y.1))
            .unwrap();
        let g0 = grid.gamma0();
        assert!((lambda - g0).abs() < 1e-8 * (1.0 + g0), "{bc}: dense {lambda} vs {g0}");

        let mut v: Vec<f64> = (0..m).map(|i| eig.eigenvectors[(i, k)] / w[i].sqrt()).collect();
        let scale = v.iter().fold(0.0_f64, |acc, x| if x.abs() > acc.abs() { *x } else { acc });
        v.iter_mut().for_each(|x| *x /= scale);
        let e0 = grid.e0();
        for (i, node) in r.enumerate() {
            assert!((v[i] - e0.values[node]).abs() < 1e-7, "{bc}: e0 mismatch at node {node}");
        }
        assert!(e0.values[r_interior(&grid)].iter().all(|x| *x > 0.0));
    }
}

fn r_interior(grid: &Grid) -> std::ops::Range<usize> {
    1..grid.n_nodes - 1
}

/// First root of `(k² - α²) sin k = 2αk cos k` on `(0, π)`: the continuum
/// Robin eigenvalue is `k²`.
fn robin_continuum(alpha: f64) -> f64 {
    let f = |k: f64| (k * k - alpha * alpha) * k.sin() - 2.0 * alpha * k * k.cos();
    let (mut lo, mut hi) = (1e-6, std::f64::consts::PI);
    assert!(f(lo) < 0.0 && f(hi) > 0.0);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if f(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    (0.5 * (lo + hi)).powi(2)
}

#[test]
fn eigenvalues_converge_at_second_order() {
    let pi2 = std::f64::consts::PI.powi(2);
    for (bc, exact) in [
        (BoundaryCondition::Dirichlet, pi2),
        (BoundaryCondition::Robin { alpha_bar: 1.0 }, robin_continuum(1.0)),
        (BoundaryCondition::Robin { alpha_bar: 4.0 }, robin_continuum(4.0)),
    ] {
        let errs: Vec<f64> = [33, 65, 129, 257]
            .iter()
            .map(|n| (Grid::unit(*n, bc).unwrap().gamma0() - exact).abs())
            .collect();
        for w in errs.windows(2) {
            let ratio = w[0] / w[1];
            assert!((ratio - 4.0).abs() < 0.5, "{bc}: ratio {ratio} ({errs:?})");
        }
        assert!(errs[3] < 1e-3, "{bc}: {errs:?}");
    }
    // The discrete Dirichlet eigenvalue is known exactly as well.
    let g = Grid::unit(65, BoundaryCondition::Dirichlet).unwrap();
    let discrete = 4.0 / g.dx.powi(2) * (std::f64::consts::PI * g.dx / 2.0).sin().powi(2);
    assert!((g.gamma0() - discrete).abs() < 1e-9 * discrete);
    assert_eq!(Grid::unit(65, BoundaryCondition::Neumann).unwrap().gamma0(), 0.0);
}

#[test]
fn steps_beyond_the_monotonicity_bound_are_refused() {
    let grid = Grid::unit(17, BoundaryCondition::Neumann).unwrap();
    let c = coeff(&grid, DriverSpec::constant(0.5), 0.0);
    let g = NonlinearitySpec::pure_power(1.0, 3.0).unwrap();
    let z = FieldState::constant(&grid, 10.0);
    assert!(evolve(&c, &g, &grid, &z, 1.0, 0.5).is_err());
    assert!(evolve(&c, &g, &grid, &z, 1.0, 0.002).is_ok());
}
