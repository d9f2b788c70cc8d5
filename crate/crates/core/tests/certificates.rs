use std::f64::consts::PI;

use qds_core::bounds::{form_bound_constant, lemma41_constants, verify_relative_bound};
use qds_core::criteria::{
    check_assumption_c, check_cf, check_phi_domination, check_resolvent_bound, default_eps_grid, default_p_candidates,
    fit_constants, geometric_extrapolation, verdict, CriterionCertificate, ExtrapolationMethod, VerdictLabel,
};
use qds_core::generator::{assemble, Basis, Mode};
use qds_core::hilbert::{FockBasis, GridBasis, SpectralLaplacian};
use qds_core::linops::{diag_real, identity, max_abs, CMat, C64};
use qds_core::models::{damped_oscillator, heavy_ion, quadratic_pump, HeavyIonParams};
use qds_core::quad::integrate_half_line;
use qds_core::{Error, StateSelector};

fn reference() -> HeavyIonParams {
    HeavyIonParams {
        w: 2f64.sqrt(),
        alpha: 1.0,
        nu: 2.0,
        b1: 1.0,
    }
}

fn trivial(n: usize) -> qds_core::LindbladModel {
    assemble(CMat::zeros(n, n), vec![], Basis::Fock(FockBasis::new(n, 2).unwrap()), Mode::Exact).unwrap()
}

#[test]
fn cf_on_dissipation_free_model_passes() {
    let model = trivial(8);
    let c = diag_real(&[0.0, 1.0, 2.0, 3.0, 4.0, 5.0, 6.0, 7.0]);
    let cert = check_cf(&model, &c, 0.0, 2, None).unwrap();
    assert!(cert.passed());
    assert!(cert.worst_margin() <= 0.0);
}

#[test]
fn cf_damped_oscillator_passes_for_b_at_least_gamma() {
    let (model, c) = damped_oscillator(0.8, 1.0, 16, None, Mode::Absorbing).unwrap();
    let buffer = model.basis().buffer();
    assert!(check_cf(&model, &c, 0.8, buffer, None).unwrap().passed());
    assert!(check_cf(&model, &c, 2.0, buffer, None).unwrap().passed());
}

#[test]
fn assumption_c_sign_analysis_without_dissipation() {
    let model = trivial(6);
    let eps = [0.5, 0.25];
    let c = diag_real(&[1.0, 2.0, 0.0, 0.0, 0.0, 0.0]);
    assert!(!check_assumption_c(&model, &c, 0.0, 0.0, 0.5, &eps, 2, None).unwrap().passed());
    assert!(check_assumption_c(&model, &CMat::zeros(6, 6), 0.0, 0.0, 0.5, &eps, 2, None).unwrap().passed());
    assert!(matches!(
        check_assumption_c(&model, &c, 0.0, 0.0, 1.0, &eps, 2, None),
        Err(Error::Input(_))
    ));
}

#[test]
fn phi_domination_examples() {
    let (model, m) = damped_oscillator(1.0, 0.0, 12, None, Mode::Absorbing).unwrap();
    let cert = check_phi_domination(&model, &m, 1.0, None).unwrap();
    assert!(cert.passed());
    assert!(cert.worst_margin().abs() < 1e-12);
    let shifted = &m + identity(12).scale(4.0);
    let cert = check_phi_domination(&model, &shifted, 1.0, None).unwrap();
    assert!(cert.passed());
    assert!((cert.worst_margin() + 4.0).abs() < 1e-10);
    assert!(!check_phi_domination(&model, &m.scale(0.5), 1.0, None).unwrap().passed());
}

#[test]
fn fit_on_trivial_model_and_oscillator_reverifies() {
    let model = trivial(6);
    let fit = fit_constants(&model, &CMat::zeros(6, 6), &default_eps_grid(), &default_p_candidates(), 2, None).unwrap();
    assert_eq!((fit.a, fit.b), (0.0, 0.0));
    assert!(fit.feasible);

    let (model, c) = damped_oscillator(1.0, 1.0, 24, None, Mode::Absorbing).unwrap();
    let buffer = model.basis().buffer();
    let fit = fit_constants(&model, &c, &default_eps_grid(), &default_p_candidates(), buffer, None).unwrap();
    assert!(fit.feasible);
    let again = check_assumption_c(&model, &c, fit.a, fit.b, fit.p, &default_eps_grid(), buffer, None).unwrap();
    assert!(again.passed());
}

#[test]
fn heavy_ion_fit_is_ladder_stable() {
    let a = heavy_ion(reference(), 32, None, Mode::Absorbing).unwrap();
    let b = heavy_ion(reference(), 64, None, Mode::Absorbing).unwrap();
    let fit = |hi: &qds_core::models::HeavyIonModel| {
        fit_constants(&hi.model, &hi.c, &default_eps_grid(), &default_p_candidates(), hi.model.basis().buffer(), None).unwrap()
    };
    let (fa, fb) = (fit(&a), fit(&b));
    assert!(fa.feasible && fb.feasible);
    // C = 4N + 4 with L = 2a: CG + G†C + L†CL = −4C + 16, so b = 4 and a = 0
    assert_eq!((fa.a, fa.b, fa.p), (fb.a, fb.b, fb.p));
    assert!((fa.b - 4.0).abs() < 1e-12);
}

#[test]
fn resolvent_bound_examples() {
    let hi = heavy_ion(reference(), 24, None, Mode::Absorbing).unwrap();
    let zero = qds_core::CVec::zeros(24);
    let check = check_resolvent_bound(&hi.model, &hi.c, 0.0, 4.0, 0.1, &zero, 5.0, 0.5, 1e-3, None).unwrap();
    assert_eq!(check.lhs, 0.0);
    assert_eq!(check.rhs, 0.0);
    assert!(check.passed);
    assert!(matches!(
        check_resolvent_bound(&hi.model, &hi.c, 0.0, 4.0, 0.1, &zero, 4.0, 0.5, 1e-3, None),
        Err(Error::Input(_))
    ));
}

#[test]
fn extrapolation_recovers_geometric_sequence() {
    let ns = [10, 20, 40];
    let ds: Vec<f64> = ns.iter().map(|&n| 0.3 + 0.5 * 0.9f64.powi(n as i32)).collect();
    let e = geometric_extrapolation(&ns, &ds).unwrap();
    assert_eq!(e.method, ExtrapolationMethod::Geometric);
    assert!((e.value - 0.3).abs() < 1e-9);
    assert!((e.ratio.unwrap() - 0.9).abs() < 1e-6);
    let flat = geometric_extrapolation(&ns, &[0.0, 0.0, 0.0]).unwrap();
    assert_eq!(flat.method, ExtrapolationMethod::LastValue);
    assert_eq!(flat.value, 0.0);
}

#[test]
fn verdict_rejects_short_or_exact_ladders() {
    let models: Vec<_> = [16, 32].iter().map(|&n| quadratic_pump(n, None, Mode::Absorbing).unwrap()).collect();
    assert!(matches!(verdict(&models, 1.0, &StateSelector::Index(0), 1e-3), Err(Error::Input(_))));
    let exact: Vec<_> = [8, 16, 32]
        .iter()
        .map(|&n| damped_oscillator(1.0, 0.0, n, None, Mode::Exact).unwrap().0)
        .collect();
    assert!(matches!(verdict(&exact, 1.0, &StateSelector::Index(0), 1e-3), Err(Error::Contract(_))));
}

#[test]
fn passing_certificates_are_not_contradicted_by_the_ladder() {
    let ladder: Vec<_> = [16, 24, 32]
        .iter()
        .map(|&n| heavy_ion(reference(), n, None, Mode::Absorbing).unwrap())
        .collect();
    for hi in &ladder {
        assert!(check_phi_domination(&hi.model, &hi.c, 1.0, None).unwrap().passed());
    }
    let models: Vec<_> = ladder.iter().map(|h| h.model.clone()).collect();
    let report = verdict(&models, 1.0, &StateSelector::Index(2), 1e-3).unwrap();
    assert_ne!(report.verdict, VerdictLabel::NonConservativeConsistent);
    assert!(report.series_converged.iter().all(|c| *c));
}

#[test]
fn certificate_json_round_trip() {
    let (model, m) = damped_oscillator(1.0, 0.0, 10, None, Mode::Absorbing).unwrap();
    let cert = check_phi_domination(&model, &m, 1.0, None).unwrap();
    let text = serde_json::to_string(&cert).unwrap();
    for key in ["\"kind\"", "\"N\"", "\"buffer\"", "\"constants\"", "\"eps_grid\"", "\"margins\"", "\"verdict\"", "\"model_hash\""] {
        assert!(text.contains(key), "missing {key}");
    }
    let back: CriterionCertificate = serde_json::from_str(&text).unwrap();
    assert_eq!(back, cert);
}

fn lorentzian(grid: &GridBasis) -> Vec<f64> {
    grid.axis().iter().map(|x| 1.0 / (1.0 + x * x)).collect()
}

#[test]
fn sampled_norm_matches_integral() {
    let grid = GridBasis::new(512, 20.0, 1).unwrap();
    let w = lorentzian(&grid);
    let k = lemma41_constants(&w, 1, 0.0, &grid).unwrap();
    let exact = 2.0 * integrate_half_line(&|x: f64| (1.0 + x * x).powi(-2), 1e-12).unwrap();
    assert!((exact - PI / 2.0).abs() < 1e-10);
    // the periodic box drops the tail beyond |x| = 20, about 2/(3·20³)
    assert!((k.w_norm_sq - exact).abs() < 1e-4);
    assert!((k.c_lambda - PI / 2f64.sqrt()).abs() < 1e-10);
}

#[test]
fn relative_bound_holds_on_desk_grid() {
    let grid = GridBasis::new(512, 20.0, 1).unwrap();
    let w = lorentzian(&grid);
    let k = lemma41_constants(&w, 1, 0.0, &grid).unwrap();
    let eps: Vec<f64> = (1..=10).map(|j| 2f64.powi(-j)).collect();
    let cert = verify_relative_bound(&w, &grid, &eps, k.a, k.p, None).unwrap().with_constants(&k);
    assert!(cert.passed());
    let radii = cert.radii.as_ref().unwrap();
    assert!(radii.windows(2).all(|r| r[1] > r[0]));
    // a constant much too small must fail on the finest eps
    let weak = verify_relative_bound(&w, &grid, &eps, 1e-4 * k.a, k.p, None).unwrap();
    assert!(!weak.passed());
}

#[test]
fn doubling_w_scales_a_by_predicted_factor() {
    let grid = GridBasis::new(256, 20.0, 1).unwrap();
    let w = lorentzian(&grid);
    let w2: Vec<f64> = w.iter().map(|v| 2.0 * v).collect();
    let a1 = lemma41_constants(&w, 1, 0.0, &grid).unwrap().a;
    let a2 = lemma41_constants(&w2, 1, 0.0, &grid).unwrap().a;
    // a = C₂^{4/(4−q)}, C₂ ∝ ‖W‖²: q = 1 gives 4^{4/3} = 2^{8/3}
    assert!((a2 / a1 - 2f64.powf(8.0 / 3.0)).abs() < 1e-6);
    let grid2 = GridBasis::new(32, 8.0, 2).unwrap();
    let w: Vec<f64> = grid2.nodes().iter().map(|p| 1.0 / (1.0 + p[0] * p[0] + p[1] * p[1])).collect();
    let w2: Vec<f64> = w.iter().map(|v| 2.0 * v).collect();
    let b1 = lemma41_constants(&w, 2, 1.0, &grid2).unwrap().a;
    let b2 = lemma41_constants(&w2, 2, 1.0, &grid2).unwrap().a;
    // α = 1: C₂ ∝ ‖W²‖ ∝ 4, q = 1, factor 4^{4/3}
    assert!((b2 / b1 - 4f64.powf(4.0 / 3.0)).abs() < 1e-6);
}

#[test]
fn form_bound_holds_for_random_states() {
    let grid = GridBasis::new(128, 15.0, 1).unwrap();
    let w: Vec<f64> = grid.axis().iter().map(|x| (1.0 + x * x).powf(-0.5)).collect();
    let b = form_bound_constant(&w, &grid).unwrap();
    assert!(b > 0.0 && b <= 1.0 + 1e-12);
    let lap = SpectralLaplacian::new(grid);
    for seed in 0..5 {
        let phi: Vec<C64> = grid
            .axis()
            .iter()
            .map(|x| C64::new((-(x - seed as f64).powi(2)).exp() * (1.0 + x.sin()), 0.3 * (x * seed as f64).cos()))
            .collect();
        let lphi = lap.apply(&phi).unwrap();
        let kinetic: f64 = phi.iter().zip(&lphi).map(|(p, l)| -(p.conj() * l).re).sum();
        let mass: f64 = phi.iter().map(|p| p.norm_sqr()).sum();
        let lhs: f64 = phi.iter().zip(&w).map(|(p, v)| v * v * p.norm_sqr()).sum();
        assert!(lhs <= b * (kinetic + mass) * (1.0 + 1e-10));
    }
}

#[test]
fn interior_commutator_of_c_and_l() {
    for alpha in [1.0, 2.0, -1.5] {
        let p = HeavyIonParams { alpha, ..reference() };
        let hi = heavy_ion(p, 40, None, Mode::Absorbing).unwrap();
        let l = &hi.model.jump_ops()[0];
        let defect = &hi.c * l - l * &hi.c + l.scale(2.0 * p.w * p.w * p.alpha);
        let k = hi.model.basis().interior_dim();
        assert!(max_abs(&defect.view((0, 0), (k, k)).into_owned()) < 1e-9, "alpha {alpha}");
    }
}
