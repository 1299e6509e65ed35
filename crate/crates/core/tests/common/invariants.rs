//! Property checks shared by the `invariants` test target and the
//! acceptance run.

use proptest::prelude::*;
use proptest::test_runner::{Config, TestCaseError, TestRunner};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use smallnoise::asymptotics::{contrast_g, fisher_information, gamma_limit, gamma_limit_dtheta, theoretical_variance};
use smallnoise::coefficients::{builtin_model, CoefficientKind, CoefficientModel, Family, Params};
use smallnoise::estimators::{
    bayes_estimate, h_function, maximize, mde, mde_objective, mle, one_step_mle_process, EstimationResult, Method,
    PriorSpec, SearchConfig,
};
use smallnoise::kalman_filter::{
    comparison_constants, gamma_hat_bound, run_filter, run_filter_derivatives, solve_riccati,
};
use smallnoise::mc::{emit_report, run_experiment, summarize, ExperimentConfig};
use smallnoise::sde_sim::{derive_seed, limit_ode, simulate, simulate_with_increments, NoiseConfig, SamplePath, TimeGrid};

use super::{ensure, rel_err, Check};

const KINDS: [CoefficientKind; 4] = [CoefficientKind::F, CoefficientKind::A, CoefficientKind::B, CoefficientKind::Sigma];

fn families() -> Vec<CoefficientModel> {
    vec![
        builtin_model(
            Family::Const,
            &Params::new().set_poly("c_f", &[1.0, 0.5]).set_poly("c_sigma", &[1.0, -0.2]),
            (0.5, 4.0),
            1.0,
            0.0,
        )
        .unwrap(),
        builtin_model(
            Family::LinearF,
            &Params::new().set_poly("phi", &[1.0, 0.5]).set_poly("c_a", &[-1.0, 0.5]),
            (0.5, 3.0),
            1.0,
            0.0,
        )
        .unwrap(),
        builtin_model(Family::ExpA, &Params::new().set_poly("c_b", &[1.0, 1.0]), (0.5, 3.0), 1.0, 0.0).unwrap(),
        builtin_model(
            Family::Reciprocal,
            &Params::new().set_poly("phi", &[1.0, 0.3]).set("k_a", -0.5),
            (0.5, 3.0),
            1.0,
            0.0,
        )
        .unwrap(),
        builtin_model(
            Family::SqrtB,
            &Params::new().set_poly("beta", &[1.0, 0.4]).set_poly("c_f", &[1.0, -0.3]),
            (0.5, 3.0),
            1.0,
            0.0,
        )
        .unwrap(),
    ]
}

fn to_err(e: impl std::fmt::Display) -> String {
    e.to_string()
}

fn runner(cases: u32) -> TestRunner {
    TestRunner::new_with_rng(
        Config {
            cases,
            failure_persistence: None,
            ..Config::default()
        },
        proptest::test_runner::TestRng::deterministic_rng(proptest::test_runner::RngAlgorithm::ChaCha),
    )
}

fn prop_result<T: std::fmt::Debug>(r: Result<(), proptest::test_runner::TestError<T>>) -> Result<(), String> {
    r.map_err(|e| e.to_string())
}

pub fn coefficient_theta_derivatives() -> Result<(), String> {
    for m in families() {
        let d = m.domain();
        for theta in d.lattice(9).into_iter().skip(1).take(7) {
            for k in 0..=10 {
                let t = k as f64 / 10.0;
                let step = 1e-5 * theta.abs();
                for kind in KINDS {
                    let fd1 = (m.eval(kind, theta + step, t).map_err(to_err)? - m.eval(kind, theta - step, t).map_err(to_err)?)
                        / (2.0 * step);
                    if kind == CoefficientKind::Sigma {
                        ensure(fd1 == 0.0, || "σ depends on θ".into())?;
                        continue;
                    }
                    let d1 = m.eval_dtheta(kind, theta, t, 1).map_err(to_err)?;
                    ensure(rel_err(d1, fd1, 1e-3) <= 1e-6, || {
                        format!("{} {kind:?} order 1 at θ={theta}, t={t}: {d1} vs {fd1}", m.family())
                    })?;
                    let fd2 = (m.eval_dtheta(kind, theta + step, t, 1).map_err(to_err)?
                        - m.eval_dtheta(kind, theta - step, t, 1).map_err(to_err)?)
                        / (2.0 * step);
                    let d2 = m.eval_dtheta(kind, theta, t, 2).map_err(to_err)?;
                    ensure(rel_err(d2, fd2, 1e-3) <= 1e-6, || {
                        format!("{} {kind:?} order 2 at θ={theta}, t={t}: {d2} vs {fd2}", m.family())
                    })?;
                }
            }
        }
    }
    Ok(())
}

pub fn coefficient_eval_is_pure() -> Result<(), String> {
    let models = families();
    prop_result(runner(256).run(&(0usize..5, 0.0..1.0f64, 0.0..1.0f64), |(i, u, t)| {
        let m = &models[i];
        let theta = m.domain().lo + u * m.domain().width();
        for kind in KINDS {
            let a = m.eval(kind, theta, t).unwrap();
            let b = m.eval(kind, theta, t).unwrap();
            prop_assert_eq!(a.to_bits(), b.to_bits());
        }
        Ok(())
    }))
}

pub fn reciprocal_s_is_theta_free() -> Result<(), String> {
    let m = &families()[3];
    for theta in m.domain().lattice(21) {
        for k in 0..=20 {
            let t = k as f64 / 20.0;
            let s = m.eval(CoefficientKind::F, theta, t).unwrap() * m.eval(CoefficientKind::B, theta, t).unwrap();
            let s0 = m.eval(CoefficientKind::F, 1.0, t).unwrap() * m.eval(CoefficientKind::B, 1.0, t).unwrap();
            ensure(rel_err(s, s0, 1e-12) <= 4e-16, || format!("S({theta},{t}) = {s} vs {s0}"))?;
        }
    }
    Ok(())
}

pub fn silent_simulation_follows_limit_ode() -> Result<(), String> {
    let m = builtin_model(
        Family::LinearF,
        &Params::new().set_poly("phi", &[1.0, 0.5]).set_poly("c_a", &[-1.0, 0.8]),
        (0.5, 3.0),
        1.0,
        1.0,
    )
    .unwrap();
    let noise = NoiseConfig::new(1e-3, 0.25).unwrap().silenced();
    let mut errs = Vec::new();
    for n in [500, 1000] {
        let g = TimeGrid::new(n, 1.0).unwrap();
        let p = simulate(&m, 1.5, &noise, &g, 1, true).map_err(to_err)?;
        let (x, y) = limit_ode(&m, 1.5, &g, 1.0).map_err(to_err)?;
        let yp = p.y.as_ref().unwrap();
        let e = (0..=n)
            .map(|i| (p.x[i] - x[i]).abs().max((yp[i] - y[i]).abs()))
            .fold(0.0, f64::max);
        ensure(e < 2.0 * g.h(), || format!("n = {n}: sup error {e} not O(h)"))?;
        errs.push(e);
    }
    let ratio = errs[0] / errs[1];
    ensure((1.8..2.2).contains(&ratio), || format!("halving h changed the error by {ratio}"))
}

pub fn observation_increment_variance() -> Result<(), String> {
    let m = builtin_model(
        Family::Const,
        &Params::new().set("c_a", 0.0).set("c_sigma", 1.5),
        (0.5, 4.0),
        1.0,
        0.0,
    )
    .unwrap();
    let noise = NoiseConfig::new(1e-3, 0.25).unwrap();
    let g = TimeGrid::new(100_000, 1.0).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let dw: Vec<f64> = (0..g.n_steps()).map(|_| g.h().sqrt() * rng.sample::<f64, _>(StandardNormal)).collect();
    // ψ = 0: the state increments are zero.
    let p = simulate_with_increments(&m, 1.0, &noise, &g, &dw, &vec![0.0; g.n_steps()]).map_err(to_err)?;
    let inc: Vec<f64> = p.x.windows(2).map(|w| w[1] - w[0]).collect();
    let mean = inc.iter().sum::<f64>() / inc.len() as f64;
    let var = inc.iter().map(|d| (d - mean) * (d - mean)).sum::<f64>() / (inc.len() - 1) as f64;
    let expected = 1e-6 * 2.25 * g.h();
    ensure(rel_err(var, expected, 0.0) < 0.05, || format!("increment variance {var} vs {expected}"))
}

pub fn euler_strong_order() -> Result<(), String> {
    let m = builtin_model(
        Family::LinearF,
        &Params::new().set_poly("phi", &[1.0, 1.0]).set_poly("c_a", &[-2.0, 3.0]).set_poly("c_b", &[1.0, 1.0]),
        (0.5, 3.0),
        1.0,
        1.0,
    )
    .unwrap();
    let noise = NoiseConfig::new(0.1, 0.25).unwrap();
    let fine = 1 << 14;
    let mut err = [0.0f64; 2];
    for path in 0..40u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(100 + path);
        let hf = 1.0 / fine as f64;
        let dv: Vec<f64> = (0..fine).map(|_| hf.sqrt() * rng.sample::<f64, _>(StandardNormal)).collect();
        let dw: Vec<f64> = (0..fine).map(|_| hf.sqrt() * rng.sample::<f64, _>(StandardNormal)).collect();
        let reference = simulate_with_increments(&m, 1.5, &noise, &TimeGrid::new(fine, 1.0).unwrap(), &dw, &dv)
            .map_err(to_err)?;
        for (slot, n) in [64usize, 128].into_iter().enumerate() {
            let k = fine / n;
            let sum = |v: &[f64]| v.chunks(k).map(|c| c.iter().sum()).collect::<Vec<f64>>();
            let p = simulate_with_increments(&m, 1.5, &noise, &TimeGrid::new(n, 1.0).unwrap(), &sum(&dw), &sum(&dv))
                .map_err(to_err)?;
            let (ry, py) = (reference.y.as_ref().unwrap(), p.y.as_ref().unwrap());
            let e = (0..=n)
                .map(|i| (ry[i * k] - py[i]).abs().max((reference.x[i * k] - p.x[i]).abs()))
                .fold(0.0, f64::max);
            err[slot] += e;
        }
    }
    let ratio = err[0] / err[1];
    ensure((1.7..=2.3).contains(&ratio), || format!("strong error ratio {ratio}"))
}

pub fn riccati_bounds() -> Result<(), String> {
    for m in families() {
        for theta in m.domain().lattice(5) {
            for (eps, delta) in [(1e-2, 0.25), (1e-3, 0.25), (1e-4, 0.1), (1e-3, 0.3)] {
                let noise = NoiseConfig::new(eps, delta).unwrap();
                let g = TimeGrid::new(2000, 1.0).unwrap();
                let gamma = solve_riccati(&m, theta, eps, noise.psi, &g).map_err(to_err)?;
                let (a_m, f_m, big_b, s_m) = comparison_constants(&m, theta, 2001);
                for (i, &v) in gamma.iter().enumerate() {
                    let bound = gamma_hat_bound(a_m, f_m, big_b, s_m, eps, noise.psi, g.t(i));
                    ensure(v >= 0.0 && v <= bound * (1.0 + 1e-9) + 1e-14, || {
                        format!("{} θ={theta} ε={eps}: γ*={v} > bound {bound} at t={}", m.family(), g.t(i))
                    })?;
                }
            }
        }
    }
    Ok(())
}

pub fn filter_is_linear_in_observations() -> Result<(), String> {
    let models = families();
    prop_result(runner(24).run(
        &(0usize..5, 0.0..1.0f64, -3.0..3.0f64, -3.0..3.0f64, any::<u64>()),
        |(i, u, ca, cb, seed)| {
            let m = &models[i];
            let theta = m.domain().lo + u * m.domain().width();
            let noise = NoiseConfig::new(1e-3, 0.25).unwrap();
            let g = TimeGrid::new(1000, 1.0).unwrap();
            let p1 = simulate(m, theta, &noise, &g, seed, false).unwrap();
            let p2 = simulate(m, theta, &noise, &g, seed ^ 0xABCD, false).unwrap();
            let mix: Vec<f64> = p1.x.iter().zip(&p2.x).map(|(a, b)| ca * a + cb * b).collect();
            let p3 = SamplePath::from_observations(g, mix).unwrap();
            let gamma = solve_riccati(m, theta, noise.eps, noise.psi, &g).unwrap();
            let f = |p: &SamplePath| run_filter(m, theta, noise.eps, noise.psi, p, &gamma).unwrap();
            let (m1, m2, m3) = (f(&p1), f(&p2), f(&p3));
            let scale = m1.iter().chain(&m2).fold(0.0f64, |s, v| s.max(v.abs())) * (ca.abs() + cb.abs()) + 1e-300;
            for k in 0..m3.len() {
                let lin = ca * m1[k] + cb * m2[k];
                if (m3[k] - lin).abs() > 1e-12 * scale {
                    return Err(TestCaseError::fail(format!("node {k}: {} vs {lin}", m3[k])));
                }
            }
            Ok(())
        },
    ))
}

pub fn filter_derivative_matches_finite_differences() -> Result<(), String> {
    for m in families() {
        let m = m.with_y0(0.5);
        let noise = NoiseConfig::new(1e-3, 0.25).unwrap();
        let g = TimeGrid::new(2000, 1.0).unwrap();
        let theta = m.domain().midpoint();
        let obs = simulate(&m, theta, &noise, &g, 17, false).map_err(to_err)?;
        let mean = |th: f64| {
            let gamma = solve_riccati(&m, th, noise.eps, noise.psi, &g).unwrap();
            let mm = run_filter(&m, th, noise.eps, noise.psi, &obs, &gamma).unwrap();
            (gamma, mm)
        };
        let (gamma, mm) = mean(theta);
        let (m_dot, _) = run_filter_derivatives(&m, theta, noise.eps, noise.psi, &obs, &gamma, &mm).map_err(to_err)?;
        let hfd = 1e-4;
        let (_, up) = mean(theta + hfd);
        let (_, dn) = mean(theta - hfd);
        let scale = m_dot.iter().fold(0.0f64, |s, v| s.max(v.abs()));
        for k in 0..mm.len() {
            let fd = (up[k] - dn[k]) / (2.0 * hfd);
            ensure((m_dot[k] - fd).abs() <= 1e-3 * m_dot[k].abs().max(1e-2 * scale), || {
                format!("{}: ṁ = {} vs FD {fd} at node {k}", m.family(), m_dot[k])
            })?;
        }
    }
    Ok(())
}

fn const_model() -> CoefficientModel {
    builtin_model(Family::Const, &Params::new(), (0.5, 4.0), 1.0, 0.0).unwrap()
}

pub fn mle_argmax_ignores_constants() -> Result<(), String> {
    let m = const_model();
    let noise = NoiseConfig::new(1e-3, 0.25).unwrap();
    let g = TimeGrid::new(2000, 1.0).unwrap();
    let cfg = SearchConfig::default();
    for seed in 0..4 {
        let obs = simulate(&m, 2.0, &noise, &g, seed, false).map_err(to_err)?;
        let r = mle(&m, noise.eps, noise.psi, &obs, &cfg).map_err(to_err)?;
        // dyadic shifts, so that ll + c is exact in floating point
        for c in [-0.75, 0.0, 0.5, 2.0] {
            let shifted = maximize(m.domain(), &cfg, |th| {
                Ok(smallnoise::estimators::log_likelihood(&m, th, noise.eps, noise.psi, &obs)? + c)
            })
            .map_err(to_err)?;
            ensure(shifted.arg == r.estimate, || format!("seed {seed}, c={c}: {} vs {}", shifted.arg, r.estimate))?;
        }
    }
    Ok(())
}

pub fn posterior_mean_bounds() -> Result<(), String> {
    let m = const_model();
    let noise = NoiseConfig::new(1e-3, 0.25).unwrap();
    let g = TimeGrid::new(1000, 1.0).unwrap();
    // flat likelihood: the zero path
    let zero = SamplePath::from_observations(g, vec![0.0; g.len()]).map_err(to_err)?;
    let r = bayes_estimate(&m, noise.eps, noise.psi, &zero, &PriorSpec::Uniform, 64).map_err(to_err)?;
    ensure((r.estimate - m.domain().midpoint()).abs() <= 1e-10, || format!("flat posterior mean {}", r.estimate))?;
    let priors = [
        PriorSpec::Uniform,
        PriorSpec::TruncatedGaussian { mean: 0.2, sd: 0.1 },
        PriorSpec::TruncatedGaussian { mean: 3.9, sd: 2.0 },
    ];
    for seed in 0..3 {
        let obs = simulate(&m, 0.6 + 1.4 * seed as f64, &noise, &g, seed, false).map_err(to_err)?;
        for prior in &priors {
            let r = bayes_estimate(&m, noise.eps, noise.psi, &obs, prior, 64).map_err(to_err)?;
            ensure(m.domain().contains_closed(r.estimate), || format!("posterior mean {} outside Θ", r.estimate))?;
        }
    }
    Ok(())
}

pub fn one_step_at_truth_without_noise() -> Result<(), String> {
    let m = builtin_model(
        Family::LinearF,
        &Params::new().set_poly("phi", &[1.0, 0.5]),
        (0.5, 3.0),
        1.0,
        1.0,
    )
    .map_err(to_err)?;
    let noise = NoiseConfig::new(1e-4, 0.25).unwrap();
    let g = TimeGrid::new(4000, 1.0).unwrap();
    let obs = simulate(&m, 1.3, &noise.silenced(), &g, 0, false).map_err(to_err)?;
    let prelim = EstimationResult {
        method: Method::Mde,
        estimate: 1.3,
        objective: 0.0,
        normalized_error: None,
        n_evals: 0,
        flags: Default::default(),
    };
    let p = one_step_mle_process(&m, &obs, &prelim, 0.2, noise.eps, noise.psi).map_err(to_err)?;
    ensure(p.theta_star.iter().all(|&v| v == 1.3), || "non-zero correction at the truth".into())
}

pub fn mde_objective_zero_iff_exact() -> Result<(), String> {
    let m = builtin_model(Family::ExpA, &Params::new(), (0.5, 3.0), 1.0, 1.0).map_err(to_err)?;
    let g = TimeGrid::new(1000, 1.0).unwrap();
    let h = h_function(&m, 1.7, &g, 1.0).map_err(to_err)?;
    let exact = SamplePath::from_observations(g, h.clone()).map_err(to_err)?;
    ensure(mde_objective(&m, 1.7, &exact, 1.0).map_err(to_err)? == 0.0, || "objective not zero on H".into())?;
    let mut bumped = h;
    bumped[500] += 1e-9;
    let other = SamplePath::from_observations(g, bumped).map_err(to_err)?;
    ensure(mde_objective(&m, 1.7, &other, 1.0).map_err(to_err)? > 0.0, || "objective zero off H".into())?;
    ensure(mde_objective(&m, 1.71, &exact, 1.0).map_err(to_err)? > 0.0, || "objective zero at another θ".into())
}

pub fn estimators_are_deterministic() -> Result<(), String> {
    let m = const_model().with_y0(1.0);
    let noise = NoiseConfig::new(1e-3, 0.25).unwrap();
    let g = TimeGrid::new(1000, 1.0).unwrap();
    let obs = simulate(&m, 2.0, &noise, &g, 9, false).map_err(to_err)?;
    let cfg = SearchConfig::default();
    let run = || -> Result<Vec<EstimationResult>, String> {
        Ok(vec![
            mle(&m, noise.eps, noise.psi, &obs, &cfg).map_err(to_err)?,
            bayes_estimate(&m, noise.eps, noise.psi, &obs, &PriorSpec::Uniform, 64).map_err(to_err)?,
            mde(&m.with_y0(1.0), &obs, &cfg, 1.0).map_err(to_err)?,
        ])
    };
    ensure(run()? == run()?, || "estimates differ between runs".into())
}

pub fn contrast_g_properties() -> Result<(), String> {
    for m in families() {
        let d = m.domain();
        for th0 in d.lattice(7) {
            ensure(contrast_g(&m, th0, th0).map_err(to_err)? == 0.0, || "G(θ0,θ0) ≠ 0".into())?;
            for th in d.lattice(15) {
                let v = contrast_g(&m, th, th0).map_err(to_err)?;
                ensure(v >= 0.0, || format!("G({th},{th0}) = {v}"))?;
            }
        }
    }
    Ok(())
}

pub fn contrast_g_is_locally_quadratic() -> Result<(), String> {
    for m in families() {
        let th0 = m.domain().midpoint();
        let info = fisher_information(&m, th0, 0.0, m.horizon()).map_err(to_err)?;
        if info < 1e-10 {
            continue;
        }
        for dh in [-1e-2, -3e-3, 1e-3, 1e-2] {
            let g = contrast_g(&m, th0 + dh, th0).map_err(to_err)?;
            let ratio = 2.0 * g / (info * dh * dh);
            ensure((ratio - 1.0).abs() <= 0.05, || format!("{}: 2G/(I h²) = {ratio} at h = {dh}", m.family()))?;
        }
    }
    Ok(())
}

pub fn fisher_information_is_additive() -> Result<(), String> {
    for m in families() {
        let th = m.domain().midpoint();
        if fisher_information(&m, th, 0.0, m.horizon()).map_err(to_err)? < 1e-10 {
            continue;
        }
        for (tau, t, u) in [(0.0, 0.3, 1.0), (0.2, 0.5, 0.9), (0.1, 0.7, 1.0)] {
            let a = fisher_information(&m, th, tau, t).map_err(to_err)?;
            let b = fisher_information(&m, th, t, u).map_err(to_err)?;
            let c = fisher_information(&m, th, tau, u).map_err(to_err)?;
            ensure(rel_err(a + b, c, 0.0) <= 1e-10, || format!("{}: {a} + {b} vs {c}", m.family()))?;
        }
    }
    Ok(())
}

pub fn gamma_limit_derivative() -> Result<(), String> {
    for m in families() {
        for th in m.domain().lattice(9).into_iter().skip(1).take(7) {
            for k in 0..=10 {
                let t = k as f64 / 10.0;
                let s = 1e-5 * th;
                let fd = (gamma_limit(&m, th + s, t) - gamma_limit(&m, th - s, t)) / (2.0 * s);
                let d = gamma_limit_dtheta(&m, th, t);
                ensure(rel_err(d, fd, 1e-3) <= 1e-6, || format!("{} θ={th} t={t}: {d} vs {fd}", m.family()))?;
            }
        }
    }
    Ok(())
}

pub fn theoretical_variance_monotone_in_state_noise() -> Result<(), String> {
    let m = const_model();
    for eps in [1e-3, 1e-4, 1e-5] {
        let mut prev = 0.0;
        for k in 1..=30 {
            let delta = k as f64 / 31.0;
            let v = theoretical_variance(&m, 2.0, eps, delta).map_err(to_err)?;
            ensure(v > prev, || format!("ε={eps}: variance not increasing in δ at δ={delta}"))?;
            prev = v;
        }
    }
    Ok(())
}

const SMALL_CONFIG: &str = r#"
[model]
family = "CONST"
theta_min = 0.5
theta_max = 4.0

[experiment]
theta0 = 2.0
eps = [1e-3]
delta = [0.25, 0.3]
n_replicates = 6
master_seed = 77
n_steps = 1000
estimators = ["MLE", "BAYES"]

[bayes]
n_quad = 64
"#;

pub fn harness_outputs_are_byte_identical() -> Result<(), String> {
    let cfg = ExperimentConfig::from_toml_str(SMALL_CONFIG).map_err(to_err)?;
    let dirs = [tempfile::tempdir().map_err(to_err)?, tempfile::tempdir().map_err(to_err)?];
    let mut files = Vec::new();
    for d in &dirs {
        let s = run_experiment(&cfg).map_err(to_err)?;
        files.push(emit_report(&s, d.path()).map_err(to_err)?);
    }
    ensure(files[0].len() == 4, || format!("expected 4 files, got {}", files[0].len()))?;
    for (a, b) in files[0].iter().zip(&files[1]) {
        let (x, y) = (std::fs::read(a).map_err(to_err)?, std::fs::read(b).map_err(to_err)?);
        ensure(x == y, || format!("{} differs between runs", a.display()))?;
    }
    Ok(())
}

pub fn statistics_ignore_replicate_order() -> Result<(), String> {
    prop_result(runner(64).run(
        &(prop::collection::vec(-5.0..5.0f64, 2..200), any::<u64>()),
        |(v, seed)| {
            let mut w = v.clone();
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            for i in (1..w.len()).rev() {
                w.swap(i, rng.random_range(0..=i));
            }
            let (a, b) = (summarize(&v, 0.5).unwrap(), summarize(&w, 0.5).unwrap());
            for (x, y) in [
                (a.mean, b.mean),
                (a.variance, b.variance),
                (a.skewness, b.skewness),
                (a.excess_kurtosis, b.excess_kurtosis),
                (a.ks_distance, b.ks_distance),
                (a.abs_moments[2], b.abs_moments[2]),
            ] {
                prop_assert!((x - y).abs() <= 1e-12 * x.abs().max(1.0), "{} vs {}", x, y);
            }
            Ok(())
        },
    ))
}

pub fn seed_derivation_is_injective() -> Result<(), String> {
    for master in [0u64, 42, u64::MAX] {
        let mut seeds: Vec<u64> = (0..1_000_000u64).map(|i| derive_seed(master, i)).collect();
        seeds.sort_unstable();
        seeds.dedup();
        ensure(seeds.len() == 1_000_000, || format!("collision for master {master}"))?;
    }
    Ok(())
}

pub fn all() -> Vec<(&'static str, Check)> {
    vec![
        ("coefficient θ-derivatives vs finite differences", coefficient_theta_derivatives),
        ("coefficient evaluation is pure", coefficient_eval_is_pure),
        ("RECIPROCAL S is θ-free", reciprocal_s_is_theta_free),
        ("silent simulation follows the limit ODE", silent_simulation_follows_limit_ode),
        ("observation increment variance", observation_increment_variance),
        ("Euler strong order", euler_strong_order),
        ("γ* nonnegative and below the comparison bound", riccati_bounds),
        ("filter linear in the observations", filter_is_linear_in_observations),
        ("ṁ vs finite differences", filter_derivative_matches_finite_differences),
        ("MLE argmax ignores constants", mle_argmax_ignores_constants),
        ("posterior mean bounds", posterior_mean_bounds),
        ("one-step correction zero at the truth", one_step_at_truth_without_noise),
        ("MDE objective zero iff exact", mde_objective_zero_iff_exact),
        ("estimators deterministic", estimators_are_deterministic),
        ("G(θ0,θ0) = 0 and G ≥ 0", contrast_g_properties),
        ("2G ≈ I h²", contrast_g_is_locally_quadratic),
        ("Fisher information additive", fisher_information_is_additive),
        ("γ̇₀ vs finite differences", gamma_limit_derivative),
        ("limit variance monotone in δ", theoretical_variance_monotone_in_state_noise),
        ("harness outputs byte-identical", harness_outputs_are_byte_identical),
        ("statistics ignore replicate order", statistics_ignore_replicate_order),
        ("seed derivation injective", seed_derivation_is_injective),
    ]
}
