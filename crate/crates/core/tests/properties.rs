//! Property tests for the invariants of each module.

use holoml::detector::{self, BeamstopMask};
use holoml::objective::Problem;
use holoml::references::{self, ReferenceKind};
use holoml::solvers::{self, SolverConfig};
use holoml::{ComplexField, Geometry, HoloOperator, ImageGrid, Layout};
use ndarray::Array2;
use num_complex::Complex64;
use proptest::prelude::*;

fn grid(n: usize, vals: &[f64]) -> Array2<f64> {
    Array2::from_shape_fn((n, n), |(i, j)| vals[(i * n + j) % vals.len()])
}

fn kind_strategy() -> impl Strategy<Value = ReferenceKind> {
    prop_oneof![
        Just(ReferenceKind::Ura),
        Just(ReferenceKind::Block),
        Just(ReferenceKind::pinhole()),
    ]
}

fn ratio_strategy() -> impl Strategy<Value = f64> {
    prop_oneof![Just(1.0), Just(1.25), Just(1.5), Just(1.75), Just(2.0), Just(3.0)]
}

fn noisy_problem(n: usize, kind: ReferenceKind, x: Array2<f64>, beamstop: usize, np: f64, seed: u64) -> Problem {
    let layout = Layout::new(ImageGrid::new(x).unwrap(), references::generate(kind, n).unwrap(), n, 2.0, 2.0)
        .unwrap();
    let g = layout.geometry();
    let mask = if beamstop == 0 {
        BeamstopMask::none(g.m1, g.m2)
    } else {
        BeamstopMask::from_block(beamstop, g.m1, g.m2).unwrap()
    };
    let meas = detector::simulate(&layout, kind, mask, np, seed).unwrap();
    Problem::new(meas, HoloOperator::from_layout(&layout).unwrap()).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn column_ranges_hold_distinct_constants(n in 1usize..8, d in 0usize..6) {
        let layout = Layout::new(
            ImageGrid::new(Array2::from_elem((n, n), 2.0)).unwrap(),
            ImageGrid::new(Array2::from_elem((n, n), 3.0)).unwrap(),
            d, 1.0, 1.0,
        ).unwrap();
        let s = layout.compose();
        prop_assert_eq!(s.cols(), 2 * n + d);
        for ((_, j), &v) in s.values().indexed_iter() {
            let expected = if j < n { 2.0 } else if j < n + d { 0.0 } else { 3.0 };
            prop_assert_eq!(v, expected);
        }
    }

    #[test]
    fn operator_is_an_isometry_with_exact_adjoint(
        n in 1usize..10,
        d in 0usize..10,
        osx in ratio_strategy(),
        osy in ratio_strategy(),
        xs in prop::collection::vec(-3.0f64..3.0, 1..100),
        ws in prop::collection::vec(-3.0f64..3.0, 2..200),
    ) {
        let geom = Geometry::new(n, d, osx, osy).unwrap();
        let reference = ImageGrid::new(grid(n, &xs)).unwrap();
        let op = HoloOperator::new(geom, &reference).unwrap();
        let x = grid(n, &xs);
        let w = ComplexField::new(Array2::from_shape_fn((geom.m1, geom.m2), |(i, j)| {
            let k = i * geom.m2 + j;
            Complex64::new(ws[k % ws.len()], ws[(k * 7 + 1) % ws.len()])
        })).unwrap();
        let fx = op.forward(&x).unwrap();
        let xn = x.iter().map(|v| v * v).sum::<f64>().sqrt();
        prop_assert!((fx.norm_sqr().sqrt() - xn).abs() <= 1e-12 * xn.max(1e-300));
        let back = op.adjoint(&fx).unwrap();
        let err = (&back - &x).iter().map(|v| v * v).sum::<f64>().sqrt();
        prop_assert!(err <= 1e-12 * xn.max(1e-300));
        let lhs: f64 = fx.values().iter().zip(w.values()).map(|(a, b)| (a.conj() * b).re).sum();
        let rhs: f64 = x.iter().zip(op.adjoint(&w).unwrap().iter()).map(|(a, b)| a * b).sum();
        let scale = fx.norm_sqr().sqrt() * w.norm_sqr().sqrt();
        prop_assert!((lhs - rhs).abs() <= 1e-12 * scale.max(1e-300));
    }

    #[test]
    fn references_are_binary_and_deterministic(n in 1usize..40, kind in kind_strategy()) {
        let a = references::generate(kind, n).unwrap();
        let b = references::generate(kind, n).unwrap();
        prop_assert_eq!(&a, &b);
        prop_assert!(a.values().iter().all(|&v| v == 0.0 || v == 1.0));
    }

    #[test]
    fn measurements_are_reproducible_and_quantized(
        n in 2usize..7,
        xs in prop::collection::vec(0.0f64..1.0, 1..49),
        kind in kind_strategy(),
        np in 0.05f64..50.0,
        seed in any::<u64>(),
    ) {
        let layout = Layout::new(
            ImageGrid::new(grid(n, &xs)).unwrap(),
            references::generate(kind, n).unwrap(),
            n, 2.0, 2.0,
        ).unwrap();
        let g = layout.geometry();
        let a = detector::simulate(&layout, kind, BeamstopMask::from_block(1, g.m1, g.m2).unwrap(), np, seed).unwrap();
        let b = detector::simulate(&layout, kind, BeamstopMask::from_block(1, g.m1, g.m2).unwrap(), np, seed).unwrap();
        prop_assert_eq!(a.noisy_intensity(), b.noisy_intensity());
        prop_assert_eq!(a.noisy_intensity()[[0, 0]], 0.0);
        let rate = np / a.mean_intensity();
        for &v in a.noisy_intensity() {
            let counts = v * rate;
            prop_assert!(counts >= 0.0);
            prop_assert!((counts - counts.round()).abs() <= 1e-6 * counts.max(1.0));
        }
    }

    #[test]
    fn masked_pixels_do_not_affect_objective(
        xs in prop::collection::vec(0.0f64..1.0, 1..64),
        junk in 0.0f64..1e3,
        seed in any::<u64>(),
    ) {
        let n = 8;
        let problem = noisy_problem(n, ReferenceKind::Ura, grid(n, &xs), 5, 2.0, seed);
        let mut altered = problem.measurement().noisy_intensity().clone();
        for ((i, j), v) in altered.indexed_iter_mut() {
            if !problem.measurement().mask().is_measured(i, j) {
                *v = junk;
            }
        }
        let other = Problem::new(
            problem.measurement().with_intensity(altered).unwrap(),
            problem.operator().clone(),
        ).unwrap();
        let at = grid(n, &xs).mapv(|v| 0.5 - v);
        prop_assert_eq!(problem.nll(&at).unwrap().to_bits(), other.nll(&at).unwrap().to_bits());
        prop_assert_eq!(problem.grad(&at).unwrap(), other.grad(&at).unwrap());
    }

    #[test]
    fn negative_gradient_descends(
        xs in prop::collection::vec(0.0f64..1.0, 1..64),
        kind in kind_strategy(),
        np in 0.1f64..100.0,
        seed in any::<u64>(),
    ) {
        let n = 8;
        let problem = noisy_problem(n, kind, grid(n, &xs), 0, np, seed);
        let at = grid(n, &xs).mapv(|v| 1.0 - 2.0 * v);
        let f0 = problem.nll(&at).unwrap();
        let g = problem.grad(&at).unwrap();
        prop_assume!(g.iter().any(|&v| v != 0.0));
        let mut alpha = 1.0;
        let mut descended = false;
        for _ in 0..60 {
            if problem.nll(&(&at - &(&g * alpha))).unwrap() < f0 {
                descended = true;
                break;
            }
            alpha *= 0.5;
        }
        prop_assert!(descended);
    }

    #[test]
    fn field_update_preserves_phase(
        re in -100.0f64..100.0,
        im in -100.0f64..100.0,
        y in 0.0f64..100.0,
        rho in 0.01f64..100.0,
    ) {
        let c = Complex64::new(re, im);
        prop_assume!(c.norm() > 1e-9);
        let u = solvers::admm_field_update(c, y, rho, true);
        let (pu, pc) = (u / u.norm(), c / c.norm());
        prop_assert!((pu - pc).norm() <= 1e-15);
        // the magnitude is a stationary point of the 1-D objective
        let g = u.norm();
        let deriv = 2.0 * g - 2.0 * y / g + 2.0 * rho * (g - c.norm());
        prop_assert!(deriv.abs() <= 1e-9 * (1.0 + y / g + rho * c.norm()));
        prop_assert_eq!(solvers::admm_field_update(c, y, rho, false), c);
    }

    #[test]
    fn solvers_are_deterministic(xs in prop::collection::vec(0.0f64..1.0, 1..16), seed in any::<u64>()) {
        let n = 4;
        let problem = noisy_problem(n, ReferenceKind::Block, grid(n, &xs), 0, 1.0, seed);
        let cfg = SolverConfig { max_iters: 50, ..Default::default() };
        for solve in [solvers::solve_cg, solvers::solve_admm] {
            let a = solve(&problem, &cfg).unwrap();
            let b = solve(&problem, &cfg).unwrap();
            prop_assert_eq!(&a.image, &b.image);
            prop_assert_eq!(a.iterations(), b.iterations());
        }
    }
}

#[test]
fn noise_variance_scales_inversely_with_flux() {
    let clean = Array2::from_elem((1, 200_000), 2.0);
    let mask = BeamstopMask::none(1, 200_000);
    let var = |np: f64| {
        let (y, _) = detector::poisson_corrupt(&clean, &mask, np, 9).unwrap();
        let m = y.mean().unwrap();
        y.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / (y.len() - 1) as f64
    };
    let ratio = var(1.0) / var(10.0);
    assert!((ratio / 10.0 - 1.0).abs() <= 0.1, "variance ratio {ratio}");
}
