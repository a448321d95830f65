//! End-to-end scenarios at desk scale (64x64 specimens).

use holoml::baselines::{self, FilterConfig};
use holoml::detector::{self, BeamstopMask};
use holoml::experiment::{self, DataCell, RunConfig};
use holoml::metrics;
use holoml::objective::Problem;
use holoml::references::{self, ReferenceKind};
use holoml::solvers::{self, SolverConfig, StopReason};
use holoml::{ImageGrid, Layout};

fn desk_layout(specimen: &str, kind: ReferenceKind) -> Layout {
    Layout::new(
        experiment::load_specimen(specimen, 64).unwrap(),
        references::generate(kind, 64).unwrap(),
        64,
        2.0,
        2.0,
    )
    .unwrap()
}

fn cell(np: f64, beamstop: usize) -> DataCell {
    DataCell {
        specimen: "shepp-logan".into(),
        n: 64,
        reference: ReferenceKind::Ura,
        gap: 64,
        oversampling_x: 2.0,
        oversampling_y: 2.0,
        beamstop,
        photon_flux: np,
        seed: 11,
    }
}

#[test]
fn default_config_measurement_shape() {
    let cfg = RunConfig::default();
    let cells = cfg.data_cells();
    assert_eq!(cells.len(), 1);
    let meas = cells[0].simulate(&cells[0].layout().unwrap()).unwrap();
    assert_eq!(meas.noisy_intensity().dim(), (128, 384));
}

#[test]
fn huge_flux_reproduces_clean_intensity() {
    let c = cell(1e9, 0);
    let layout = c.layout().unwrap();
    let clean = detector::clean_intensity(&layout);
    let meas = c.simulate(&layout).unwrap();
    let dev = (meas.noisy_intensity() - &clean).iter().map(|v| v * v).sum::<f64>().sqrt();
    let norm = clean.iter().map(|v| v * v).sum::<f64>().sqrt();
    assert!(dev / norm <= 1e-3, "{}", dev / norm);
}

#[test]
fn paper_scale_beamstop_zeroes_625_pixels() {
    let c = cell(1.0, 25);
    let meas = c.simulate(&c.layout().unwrap()).unwrap();
    assert_eq!(meas.mask().occluded_count(), 625);
    let zeroed = meas
        .noisy_intensity()
        .indexed_iter()
        .filter(|((i, j), _)| !meas.mask().is_measured(*i, *j))
        .all(|(_, &v)| v == 0.0);
    assert!(zeroed);
}

#[test]
fn noiseless_cg_recovers_truth_within_500_iterations() {
    let layout = desk_layout("shepp-logan", ReferenceKind::Ura);
    let meas = detector::noiseless(&layout, ReferenceKind::Ura, BeamstopMask::none(128, 384)).unwrap();
    let problem = Problem::from_measurement(meas).unwrap();
    let res = solvers::solve_cg(&problem, &SolverConfig { max_iters: 500, ..Default::default() }).unwrap();
    let err = metrics::truth_relative_error(&res.image, layout.specimen().values()).unwrap();
    assert!(err <= 1e-3, "truth error {err}");
}

#[test]
fn noiseless_admm_primal_residual_at_rho_two() {
    let layout = desk_layout("disc", ReferenceKind::Ura);
    let meas = detector::noiseless(&layout, ReferenceKind::Ura, BeamstopMask::none(128, 384)).unwrap();
    let problem = Problem::from_measurement(meas).unwrap();
    let cfg = SolverConfig { admm_rho: 2.0, admm_primal_tol: 1e-4, ..Default::default() };
    let res = solvers::solve_admm(&problem, &cfg).unwrap();
    assert_eq!(res.reason, StopReason::PrimalTolerance);
    assert!(res.trace.last().unwrap().residual <= 1e-4);
}

#[test]
fn zero_data_minimizer_is_reflected_reference() {
    // with Ytilde = 0 the objective is (1/2)||F(X) + B||^2, minimized at -Re(F'B)
    let layout = desk_layout("disc", ReferenceKind::Ura);
    let meas = detector::noiseless(&layout, ReferenceKind::Ura, BeamstopMask::none(128, 384)).unwrap();
    let zero = meas.with_intensity(ndarray::Array2::zeros((128, 384))).unwrap();
    let problem = Problem::from_measurement(zero).unwrap();
    let op = problem.operator();
    let expected = -op.adjoint(op.reference_field()).unwrap();
    let res = solvers::solve_cg(&problem, &SolverConfig::default()).unwrap();
    let diff = (&res.image - &expected).iter().map(|v| v.abs()).fold(0.0, f64::max);
    assert!(diff <= 1e-6, "{diff}");
}

#[test]
fn cg_objective_never_increases() {
    for np in [0.1, 1.0, 10.0] {
        let c = cell(np, 7);
        let problem = Problem::from_measurement(c.simulate(&c.layout().unwrap()).unwrap()).unwrap();
        let res = solvers::solve_cg(&problem, &SolverConfig { max_iters: 300, ..Default::default() }).unwrap();
        for w in res.trace.windows(2) {
            assert!(w[1].objective <= w[0].objective, "np {np}: {} -> {}", w[0].objective, w[1].objective);
        }
    }
}

#[test]
fn baselines_lose_to_cg_at_one_photon() {
    let c = cell(1.0, 0);
    let layout = c.layout().unwrap();
    let problem = Problem::from_measurement(c.simulate(&layout).unwrap()).unwrap();
    let cfg = FilterConfig::default();
    let inv = baselines::inverse_filter(problem.measurement(), layout.reference(), &cfg).unwrap();
    let wie = baselines::wiener_filter(problem.measurement(), layout.reference(), &cfg).unwrap();
    let cg = solvers::solve_cg(&problem, &SolverConfig::default()).unwrap();
    let err = |x: &ndarray::Array2<f64>| metrics::data_relative_error(x, &problem).unwrap();
    let e_cg = err(&cg.image);
    assert!(e_cg < err(inv.values()), "cg {e_cg} inverse {}", err(inv.values()));
    assert!(e_cg < err(wie.values()), "cg {e_cg} wiener {}", err(wie.values()));
}

#[test]
fn wiener_no_worse_than_inverse_at_high_flux() {
    let c = cell(1000.0, 0);
    let layout = c.layout().unwrap();
    let problem = Problem::from_measurement(c.simulate(&layout).unwrap()).unwrap();
    let cfg = FilterConfig::default();
    let inv = baselines::inverse_filter(problem.measurement(), layout.reference(), &cfg).unwrap();
    let wie = baselines::wiener_filter(problem.measurement(), layout.reference(), &cfg).unwrap();
    let e_inv = metrics::data_relative_error(inv.values(), &problem).unwrap();
    let e_wie = metrics::data_relative_error(wie.values(), &problem).unwrap();
    assert!(e_wie <= e_inv, "wiener {e_wie} inverse {e_inv}");
}

#[test]
fn some_wiener_constant_beats_inverse_filter_at_low_flux() {
    let c = cell(0.1, 0);
    let layout = c.layout().unwrap();
    let problem = Problem::from_measurement(c.simulate(&layout).unwrap()).unwrap();
    let meas = problem.measurement();
    let inv = baselines::inverse_filter(meas, layout.reference(), &FilterConfig::default()).unwrap();
    let e_inv = metrics::data_relative_error(inv.values(), &problem).unwrap();
    let base = baselines::auto_lambda(meas, layout.reference()).unwrap();
    let best = [1e-3, 1e-2, 1e-1, 1.0, 10.0]
        .iter()
        .map(|s| {
            let cfg = FilterConfig { wiener_lambda: Some(s * base), ..Default::default() };
            let w = baselines::wiener_filter(meas, layout.reference(), &cfg).unwrap();
            metrics::data_relative_error(w.values(), &problem).unwrap()
        })
        .fold(f64::INFINITY, f64::min);
    assert!(best < e_inv, "best wiener {best} inverse {e_inv}");
}

#[test]
fn data_error_ignores_padding_anchor_phase() {
    // shifting the whole composite circularly only multiplies the field by a
    // phase ramp, so the intensity and the data error are unchanged
    let layout = desk_layout("cameraman", ReferenceKind::Block);
    let clean = detector::clean_intensity(&layout);
    let composite = layout.compose();
    let (m1, m2) = (128, 384);
    let mut shifted = ndarray::Array2::<f64>::zeros((m1, m2));
    for ((i, j), &v) in composite.values().indexed_iter() {
        shifted[[(i + 5) % m1, (j + 17) % m2]] = v;
    }
    let field = holoml::fourier::dft(&ImageGrid::new(shifted).unwrap(), m1, m2).unwrap();
    let diff = (&field.intensity() - &clean).iter().map(|v| v.abs()).fold(0.0, f64::max);
    assert!(diff <= 1e-9 * clean.iter().cloned().fold(0.0, f64::max));
}
