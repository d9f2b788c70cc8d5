//! Acceptance suite. Runs every criterion in sequence and prints one line per
//! criterion. Criteria whose literal target is known to be unreachable are
//! listed in `KNOWN_UNATTAINABLE`; they are printed as FAIL with the reason,
//! and the process only succeeds if the accompanying sibling checks confirm
//! the recorded analysis.

use std::f64::consts::LN_2;
use std::process::ExitCode;
use std::time::Instant;

use qds_core::bounds::{lemma41_constants, lemma41_exponent, verify_relative_bound};
use qds_core::criteria::{
    check_assumption_c, check_phi_domination, check_resolvent_bound, default_eps_grid, default_p_candidates,
    fit_constants, verdict, ConstantFit, VerdictLabel,
};
use qds_core::generator::Mode;
use qds_core::hilbert::GridBasis;
use qds_core::linops::{hermitian_spectrum, identity, leading_block, max_abs, op_norm, CMat, CVec, C64};
use qds_core::models::{damped_oscillator, heavy_ion, quadratic_pump, HeavyIonParams, HeavyIonModel};
use qds_core::semigroup::{leakage_curve, propagate, resolvent_direct, ResolventEngine, SeriesOptions};
use qds_core::{Error, LindbladModel, StateSelector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const KNOWN_UNATTAINABLE: &[(usize, &str)] = &[(
    7,
    "the pure-birth chain with rates (n+1)(n+2) from 0 has mean explosion time sum 1/((2k+1)(2k+2)) = ln 2, \
     and the truncated deficiency E[exp(-lambda tau_N)] decreases in N",
)];

struct Outcome {
    passed: bool,
    detail: String,
    /// For criteria in `KNOWN_UNATTAINABLE`: whether the sibling checks
    /// confirming the analysis passed.
    analysis_confirmed: Option<bool>,
}

impl Outcome {
    fn plain(passed: bool, detail: String) -> Self {
        Self {
            passed,
            detail,
            analysis_confirmed: None,
        }
    }
}

fn tag(ok: bool) -> &'static str {
    if ok {
        "ok"
    } else {
        "FAILED"
    }
}

fn reference() -> HeavyIonParams {
    HeavyIonParams {
        w: 2f64.sqrt(),
        alpha: 1.0,
        nu: 2.0,
        b1: 1.0,
    }
}

fn basis_state(dim: usize, n: usize) -> CVec {
    StateSelector::Index(n).resolve(dim).unwrap()
}

fn criterion_1() -> Result<Outcome, Error> {
    let tol = 1e-11;
    let mut worst = 0.0_f64;
    let mut ok = true;
    for n in [16, 32, 64] {
        let mut models: Vec<(String, LindbladModel)> = vec![
            ("oscillator(1,1)".into(), damped_oscillator(1.0, 1.0, n, None, Mode::Exact)?.0),
            ("oscillator(0.5,0)".into(), damped_oscillator(0.5, 0.0, n, None, Mode::Exact)?.0),
        ];
        models.push(("heavy-ion".into(), heavy_ion(reference(), n, None, Mode::Exact)?.model));
        for (_, m) in &models {
            let scale = 1.0 + op_norm(m.m());
            let direct = op_norm(&(m.g() + m.g().adjoint() + m.m())) / scale;
            let dissipation = op_norm(&m.dissipation_residual()) / scale;
            worst = worst.max(direct).max(dissipation);
            ok &= direct <= tol && dissipation <= tol;
        }
    }
    Ok(Outcome::plain(
        ok,
        format!("worst relative residual {worst:.2e} (tol {tol:.0e}); pump has no exact mode"),
    ))
}

/// `∫₀^∞ e^{−λs} P(s)† M P(s) ds` by composite Simpson, stepping `P` by
/// repeated multiplication.
fn q_of_identity_by_time_quadrature(model: &LindbladModel, lambda: f64) -> Result<CMat, Error> {
    let integrand = |p: &CMat, s: f64| (p.adjoint() * model.m() * p).scale((-lambda * s).exp());
    let simpson = |start: f64, stop: f64, steps: usize, p0: &CMat| -> Result<(CMat, CMat), Error> {
        let h = (stop - start) / steps as f64;
        let step = propagate(model, h)?;
        let mut p = p0.clone();
        let mut acc = integrand(&p, start);
        for k in 1..=steps {
            p = &p * &step;
            let weight = if k == steps {
                1.0
            } else if k % 2 == 1 {
                4.0
            } else {
                2.0
            };
            acc += integrand(&p, start + k as f64 * h).scale(weight);
        }
        Ok((acc.scale(h / 3.0), p))
    };
    let dim = model.dim();
    let (head, p_mid) = simpson(0.0, 2.0, 4000, &identity(dim))?;
    let horizon = 2.0 + 40.0 / lambda;
    let (tail, _) = simpson(2.0, horizon, 8000, &p_mid)?;
    Ok(head + tail)
}

fn criterion_2() -> Result<Outcome, Error> {
    let (model, _) = damped_oscillator(1.0, 1.0, 16, None, Mode::Exact)?;
    let engine = ResolventEngine::new(&model)?;
    let mut worst_analytic = 0.0_f64;
    let mut worst_time = 0.0_f64;
    for lambda in [0.5, 1.0, 2.0] {
        let q = engine.q_lambda(lambda, &identity(16))?;
        let analytic = CMat::from_fn(16, 16, |i, j| {
            if i == j {
                C64::new(i as f64 / (lambda + i as f64), 0.0)
            } else {
                C64::new(0.0, 0.0)
            }
        });
        worst_analytic = worst_analytic.max(max_abs(&(&q - analytic)));
        worst_time = worst_time.max(max_abs(&(&q - q_of_identity_by_time_quadrature(&model, lambda)?)));
    }
    Ok(Outcome::plain(
        worst_analytic <= 1e-9 && worst_time <= 1e-6,
        format!("max |Q(I) - n/(lambda+n)| {worst_analytic:.2e} (tol 1e-9), max |Q(I) - time quadrature| {worst_time:.2e} (tol 1e-6)"),
    ))
}

fn criterion_3() -> Result<Outcome, Error> {
    let lambda = 1.0;
    let hi = heavy_ion(reference(), 32, None, Mode::Exact)?;
    let (osc, osc_c) = damped_oscillator(1.0, 1.0, 32, None, Mode::Exact)?;
    let cases = [("oscillator", &osc, &osc_c), ("heavy-ion", &hi.model, &hi.c)];
    let mut worst = 0.0_f64;
    let mut worst_c = 0.0_f64;
    let mut terms = 0;
    for (_, model, c) in cases {
        let engine = ResolventEngine::new(model)?;
        for n in [0, 1, 5] {
            let u = basis_state(32, n);
            let series = engine.resolvent_series(lambda, &identity(32), 1.0, &u, &SeriesOptions::default())?;
            let direct = resolvent_direct(model, &identity(32), lambda, &u, 1e-7)?;
            worst = worst.max((series.value - direct).abs());
            terms = terms.max(series.terms);
            // same comparison on a non-invariant observable
            let series_c = engine.resolvent_series(lambda, c, 1.0, &u, &SeriesOptions::default())?;
            let direct_c = resolvent_direct(model, c, lambda, &u, 1e-7)?;
            worst_c = worst_c.max((series_c.value - direct_c).abs() / (1.0 + direct_c.abs()));
        }
    }
    Ok(Outcome::plain(
        worst <= 1e-4 && worst_c <= 1e-4,
        format!("X = I: max |series - direct| {worst:.2e}; X = C: relative {worst_c:.2e} (tol 1e-4); up to {terms} terms"),
    ))
}

fn criterion_4() -> Result<Outcome, Error> {
    let n = 24;
    let models = [
        damped_oscillator(1.0, 1.0, n, None, Mode::Exact)?.0,
        damped_oscillator(0.3, 2.0, n, None, Mode::Exact)?.0,
        heavy_ion(reference(), n, None, Mode::Exact)?.model,
    ];
    let mut rng = ChaCha8Rng::seed_from_u64(20_240_611);
    let states: Vec<CVec> = (0..50)
        .map(|_| {
            let u = CVec::from_fn(n, |_, _| C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)));
            let norm = u.norm();
            u.unscale(norm)
        })
        .collect();
    let mut worst = 0.0_f64;
    for model in &models {
        let engine = ResolventEngine::new(model)?;
        for lambda in [0.5, 1.0, 2.0] {
            let p = engine.p_lambda(lambda, &identity(n))?;
            let q = engine.q_lambda(lambda, &identity(n))?;
            for u in &states {
                let lhs = lambda * u.dotc(&(&p * u)).re + u.dotc(&(&q * u)).re;
                worst = worst.max((lhs - 1.0).abs());
            }
        }
    }
    Ok(Outcome::plain(
        worst <= 1e-9,
        format!("3 exact-mode models x 3 lambdas x 50 random unit states: max deviation {worst:.2e} (tol 1e-9); pump has no exact mode"),
    ))
}

fn criterion_5() -> Result<Outcome, Error> {
    let mut models: Vec<LindbladModel> = Vec::new();
    for n in [16, 32] {
        models.push(damped_oscillator(1.0, 1.0, n, None, Mode::Exact)?.0);
        models.push(damped_oscillator(1.0, 1.0, n, None, Mode::Absorbing)?.0);
        models.push(heavy_ion(reference(), n, None, Mode::Absorbing)?.model);
        models.push(heavy_ion(HeavyIonParams { alpha: -1.5, ..reference() }, n, None, Mode::Absorbing)?.model);
        models.push(heavy_ion(HeavyIonParams { nu: 1.0, ..reference() }, n, None, Mode::Absorbing)?.model);
        models.push(quadratic_pump(n, None, Mode::Absorbing)?);
    }
    let mut count = 0;
    let mut worst = f64::NEG_INFINITY;
    let mut ok = true;
    for model in &models {
        let engine = ResolventEngine::new(model)?;
        for lambda in [0.5, 1.0, 2.0] {
            for n in [0, 1, 5] {
                let u = basis_state(model.dim(), n);
                let trace = engine.q_power_trace(lambda, &u, 1.0, 200, &format!("|{n}>"))?;
                ok &= trace.is_monotone(1e-10);
                worst = worst.max(trace.max_increase());
                count += 1;
            }
        }
    }
    Ok(Outcome::plain(
        ok,
        format!("{count} traces, largest step increase {worst:.2e} (slack 1e-10)"),
    ))
}

fn criterion_6() -> Result<Outcome, Error> {
    let models = [16, 32, 64]
        .iter()
        .map(|&n| damped_oscillator(1.0, 1.0, n, None, Mode::Absorbing).map(|m| m.0))
        .collect::<Result<Vec<_>, _>>()?;
    let report = verdict(&models, 1.0, &StateSelector::Index(1), 1e-3)?;
    let worst = report.deficiency.iter().map(|d| d.abs()).fold(0.0, f64::max);
    let ok = worst <= 1e-6 && report.verdict == VerdictLabel::ConservativeConsistent;
    Ok(Outcome::plain(
        ok,
        format!("max |deficiency| {worst:.2e} (tol 1e-6), verdict {}", report.verdict),
    ))
}

/// Survival `P(τ > t)` of the pure-birth chain `n → n+2` with rates
/// `(n+1)(n+2)` from 0, by backward Euler on the forward equation.
fn birth_chain_survival(times: &[f64], states: usize, dt: f64) -> Vec<f64> {
    let rate = |k: usize| {
        let n = 2.0 * k as f64;
        (n + 1.0) * (n + 2.0)
    };
    let mut p = vec![0.0; states];
    p[0] = 1.0;
    let mut out = Vec::with_capacity(times.len());
    let mut now = 0.0;
    for &t in times {
        let steps = ((t - now) / dt).round() as usize;
        for _ in 0..steps {
            let mut inflow = 0.0;
            for (k, pk) in p.iter_mut().enumerate() {
                let next = (*pk + dt * inflow) / (1.0 + dt * rate(k));
                inflow = rate(k) * next;
                *pk = next;
            }
        }
        now = t;
        out.push(p.iter().sum());
    }
    out
}

/// `E[e^{−λτ}]` for the chain absorbed once it jumps from an even state `n`
/// with `n + 2 ≥ size`.
fn birth_chain_laplace(lambda: f64, size: usize) -> f64 {
    (0..size)
        .step_by(2)
        .map(|n| {
            let r = ((n + 1) * (n + 2)) as f64;
            r / (lambda + r)
        })
        .product()
}

fn criterion_7() -> Result<Outcome, Error> {
    let lambda = 1.0;
    let big = quadratic_pump(128, None, Mode::Absorbing)?;
    let u = basis_state(128, 0);

    let checkpoints = [0.5, 1.0, 2.0];
    let leak = leakage_curve(&big, &u, &checkpoints)?;
    let chain = birth_chain_survival(&checkpoints, 2000, 1e-5);
    let survival_err = leak
        .iter()
        .zip(&chain)
        .map(|(l, s)| ((1.0 - l) - s).abs() / s)
        .fold(0.0, f64::max);
    let survival_ok = survival_err <= 0.01;

    let h = 0.005;
    let horizon = 20.0;
    let steps = (horizon / h) as usize;
    let grid: Vec<f64> = (0..=steps).map(|k| k as f64 * h).collect();
    let leak = leakage_curve(&big, &u, &grid)?;
    let mean_time = leak
        .iter()
        .enumerate()
        .map(|(k, l)| {
            let w = if k == 0 || k == steps {
                1.0
            } else if k % 2 == 1 {
                4.0
            } else {
                2.0
            };
            w * (1.0 - l)
        })
        .sum::<f64>()
        * h
        / 3.0;
    let mean_literal_ok = (mean_time - 1.0).abs() <= 0.05;
    let mean_ln2_ok = (mean_time - LN_2).abs() <= 0.05 * LN_2;

    let ladder = [32, 64, 128]
        .iter()
        .map(|&n| quadratic_pump(n, None, Mode::Absorbing))
        .collect::<Result<Vec<_>, _>>()?;
    let report = verdict(&ladder, lambda, &StateSelector::Index(0), 1e-3)?;
    let d = &report.deficiency;
    let increasing = d.windows(2).all(|w| w[1] > w[0]);
    let decreasing = d.windows(2).all(|w| w[1] < w[0]);
    let d_inf = report.extrapolated_deficiency.value;
    let extrapolation_ok = d_inf >= 0.1;
    let label_ok = report.verdict == VerdictLabel::NonConservativeConsistent;
    let oracle_err = [32, 64, 128]
        .iter()
        .zip(d)
        .map(|(&n, v)| (v - birth_chain_laplace(lambda, n)).abs())
        .fold(0.0, f64::max);
    let limit = birth_chain_laplace(lambda, 2_000_000);
    // d_N approaches the limit like 1/N, so the geometric fit is only
    // expected to land within a percent
    let limit_ok = (d_inf - limit).abs() <= 0.01 * limit;

    let passed = survival_ok && mean_literal_ok && increasing && extrapolation_ok && label_ok;
    let confirmed = survival_ok && mean_ln2_ok && decreasing && oracle_err <= 1e-8 && extrapolation_ok && label_ok && limit_ok;
    Ok(Outcome {
        passed,
        detail: format!(
            "survival vs chain ODE max rel {survival_err:.2e} [{}]; mean explosion time {mean_time:.4} vs 1 [{}], vs ln 2 = {LN_2:.4} [{}]; \
             deficiency {:.4} / {:.4} / {:.4} increasing [{}], matches finite-chain Laplace transform to {oracle_err:.1e} [{}]; \
             extrapolated {d_inf:.4} >= 0.1 [{}], chain limit {limit:.4} within 1% [{}]; verdict {} [{}]",
            tag(survival_ok),
            tag(mean_literal_ok),
            tag(mean_ln2_ok),
            d[0],
            d[1],
            d[2],
            tag(increasing),
            tag(oracle_err <= 1e-8),
            tag(extrapolation_ok),
            tag(limit_ok),
            report.verdict,
            tag(label_ok),
        ),
        analysis_confirmed: Some(confirmed),
    })
}

fn stable(x: f64, y: f64) -> bool {
    (x - y).abs() <= 0.1 * x.abs().max(y.abs())
}

fn fit_for(hi: &HeavyIonModel) -> Result<ConstantFit, Error> {
    fit_constants(
        &hi.model,
        &hi.c,
        &default_eps_grid(),
        &default_p_candidates(),
        hi.model.basis().buffer(),
        None,
    )
}

fn criterion_8(fit_out: &mut Option<(HeavyIonModel, ConstantFit)>) -> Result<Outcome, Error> {
    let params = reference();
    let hi32 = heavy_ion(params, 32, None, Mode::Absorbing)?;
    let hi64 = heavy_ion(params, 64, None, Mode::Absorbing)?;

    let phi_ok = [&hi32, &hi64]
        .iter()
        .map(|hi| check_phi_domination(&hi.model, &hi.c, 1.0, None).map(|c| c.passed()))
        .collect::<Result<Vec<_>, _>>()?
        .into_iter()
        .all(|b| b);

    let f32 = fit_for(&hi32)?;
    let f64_ = fit_for(&hi64)?;
    let fit_ok = f32.feasible && f64_.feasible && f32.p > 0.0 && f32.p < 1.0 && f64_.p > 0.0 && f64_.p < 1.0;
    let stable_ok = stable(f32.a, f64_.a) && stable(f32.b, f64_.b) && stable(f32.p, f64_.p);

    let eps = default_eps_grid();
    let mut assumption_ok = true;
    for (hi, fit) in [(&hi32, &f32), (&hi64, &f64_)] {
        let cert = check_assumption_c(&hi.model, &hi.c, fit.a, fit.b, fit.p, &eps, hi.model.basis().buffer(), None)?;
        assumption_ok &= cert.passed();
    }

    let mut commutator = 0.0_f64;
    for hi in [&hi32, &hi64] {
        let l = &hi.model.jump_ops()[0];
        let w2a = params.w * params.w * params.alpha;
        let defect = &hi.c * l - l * &hi.c + l.scale(2.0 * w2a);
        commutator = commutator.max(op_norm(&leading_block(&defect, hi.model.basis().interior_dim())));
    }
    let commutator_ok = commutator <= 1e-9;

    let ladder = [16, 32, 64]
        .iter()
        .map(|&n| heavy_ion(params, n, None, Mode::Absorbing).map(|h| h.model))
        .collect::<Result<Vec<_>, _>>()?;
    let report = verdict(&ladder, 1.0, &StateSelector::Index(0), 1e-3)?;
    let label_ok = report.verdict == VerdictLabel::ConservativeConsistent;

    let detail = format!(
        "phi-domination delta=1 [{}]; fit N=32 (a,b,p)=({:.3e},{:.4},{}) N=64 ({:.3e},{:.4},{}) feasible [{}] stable [{}]; \
         assumption C on 2^-1..2^-8 [{}]; commutator residual {commutator:.1e} [{}]; verdict {} [{}]",
        tag(phi_ok),
        f32.a,
        f32.b,
        f32.p,
        f64_.a,
        f64_.b,
        f64_.p,
        tag(fit_ok),
        tag(stable_ok),
        tag(assumption_ok),
        tag(commutator_ok),
        report.verdict,
        tag(label_ok),
    );
    let passed = phi_ok && fit_ok && stable_ok && assumption_ok && commutator_ok && label_ok;
    *fit_out = Some((hi32, f32));
    Ok(Outcome::plain(passed, detail))
}

fn criterion_9(fitted: Option<&(HeavyIonModel, ConstantFit)>) -> Result<Outcome, Error> {
    let Some((hi, fit)) = fitted else {
        return Ok(Outcome::plain(false, "no fitted constants from criterion 8".into()));
    };
    let model = &hi.model;
    let k = model.basis().interior_dim();
    let spectrum = hermitian_spectrum(&leading_block(model.h(), k))?;
    let mut u = CVec::zeros(model.dim());
    for i in 0..k {
        u[i] = spectrum.eigenvectors[(i, 0)];
    }
    let lambda = fit.b.max(1.0) + 1.0;
    let mut worst = f64::INFINITY;
    let mut ok = true;
    for x in [0.25, 0.5, 0.75] {
        let check = check_resolvent_bound(model, &hi.c, fit.a, fit.b, fit.p, &u, lambda, x, 1e-3, Some(1e-6))?;
        worst = worst.min(check.margin);
        ok &= check.margin >= -1e-6;
    }
    Ok(Outcome::plain(
        ok,
        format!(
            "lambda = {lambda}, (a,b,p) = ({:.3e},{},{}): smallest margin rhs - lhs = {worst:.4} (tol -1e-6)",
            fit.a, fit.b, fit.p
        ),
    ))
}

fn criterion_10() -> Result<Outcome, Error> {
    let p = lemma41_exponent(1, 0.0)?;
    let p_ok = p == 1.0 / 3.0;
    let grid = GridBasis::new(512, 20.0, 1)?;
    let w: Vec<f64> = grid.axis().iter().map(|x| 1.0 / (1.0 + x * x)).collect();
    let k = lemma41_constants(&w, 1, 0.0, &grid)?;
    let eps: Vec<f64> = (1..=10).map(|j| 2f64.powi(-j)).collect();
    let cert = verify_relative_bound(&w, &grid, &eps, k.a, k.p, None)?.with_constants(&k);
    let worst = cert.margins.iter().copied().fold(f64::INFINITY, f64::min);
    let gate_ok = matches!(lemma41_exponent(3, 0.5), Err(Error::Hypothesis(_)));
    Ok(Outcome::plain(
        p_ok && cert.passed() && gate_ok,
        format!(
            "p = {p} [{}]; a = {:.4}, smallest margin over 10 eps {worst:.3e} [{}]; gate (3, 0.5) rejected [{}]",
            tag(p_ok),
            k.a,
            tag(cert.passed()),
            tag(gate_ok)
        ),
    ))
}

fn main() -> ExitCode {
    let titles = [
        "dissipation identity",
        "Q(I) against analytic and time quadrature",
        "resolvent series against direct integral",
        "partition identity",
        "monotone Q-power traces",
        "conservative control",
        "non-conservative control",
        "heavy-ion certificates",
        "weighted resolvent bound",
        "relative bound constants",
    ];
    let mut fitted = None;
    let mut unexpected = 0;
    println!("acceptance suite");
    for (idx, title) in titles.iter().enumerate() {
        let number = idx + 1;
        let clock = Instant::now();
        let outcome = match number {
            1 => criterion_1(),
            2 => criterion_2(),
            3 => criterion_3(),
            4 => criterion_4(),
            5 => criterion_5(),
            6 => criterion_6(),
            7 => criterion_7(),
            8 => criterion_8(&mut fitted),
            9 => criterion_9(fitted.as_ref()),
            _ => criterion_10(),
        };
        let seconds = clock.elapsed().as_secs_f64();
        match outcome {
            Ok(o) => {
                let status = if o.passed { "PASS" } else { "FAIL" };
                println!("criterion {number:>2} {status} {title} ({seconds:.1}s): {}", o.detail);
                if !o.passed {
                    let known = KNOWN_UNATTAINABLE.iter().find(|(n, _)| *n == number);
                    match (known, o.analysis_confirmed) {
                        (Some((_, why)), Some(true)) => println!("             known unattainable: {why}"),
                        _ => unexpected += 1,
                    }
                }
            }
            Err(e) => {
                println!("criterion {number:>2} FAIL {title} ({seconds:.1}s): error: {e}");
                unexpected += 1;
            }
        }
    }
    if unexpected == 0 {
        println!("acceptance: no unexpected failures");
        ExitCode::SUCCESS
    } else {
        println!("acceptance: {unexpected} unexpected failure(s)");
        ExitCode::FAILURE
    }
}
