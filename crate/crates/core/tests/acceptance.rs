//! Acceptance suite: one PASS/FAIL line per criterion, non-zero exit on any failure.
#![allow(clippy::excessive_precision, clippy::type_complexity)]

mod common;

use std::process::ExitCode;
use std::time::{Duration, Instant};

use common::{random_crowd_model, random_model, random_policy, random_small, rng, simplex};
use mfg_prox::solvers::{pp_solve_observed, rmd_solve_observed};
use mfg_prox::*;
use rand::Rng;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn within(elapsed: Duration, limit_s: u64) -> bool {
    elapsed <= Duration::from_secs(limit_s)
}

fn beach_bar() -> MfgModel {
    beach_bar_model(10, 10, 0.1, 1e-9).unwrap()
}

fn config(inner: usize, outer: usize) -> SolverConfig {
    SolverConfig {
        inner_iters: inner,
        outer_iters: outer,
        ..SolverConfig::default()
    }
}

fn simplex_conservation() -> Outcome {
    let start = Instant::now();
    let model = beach_bar();
    let mut worst_sum: f64 = 0.0;
    let mut min_entry = f64::INFINITY;
    let mut check = |p: &Policy, flow: &MeanFieldFlow| {
        worst_sum = worst_sum.max(p.max_row_error()).max(flow.max_step_error());
        min_entry = min_entry.min(p.min_prob());
        min_entry = min_entry.min(flow.as_slice().iter().cloned().fold(f64::INFINITY, f64::min));
    };
    let result = pp_solve_observed(&model, &model.uniform_policy(), &config(100, 20), |e| {
        check(e.new, &forward_flow(&model, e.new).unwrap());
        check(e.old, e.flow);
    });
    let elapsed = start.elapsed();
    let ok = result.is_ok() && worst_sum <= 1e-10 && min_entry > 0.0 && within(elapsed, 60);
    outcome(
        ok,
        format!(
            "max |sum - 1| = {worst_sum:.2e}, min entry = {min_entry:.2e}, {:.2}s",
            elapsed.as_secs_f64()
        ),
    )
}

fn fixed_point_residual() -> Outcome {
    let model = beach_bar();
    let cfg = config(100, 20);
    let mut worst: f64 = 0.0;
    let mut steps = 0usize;
    pp_solve_observed(&model, &model.uniform_policy(), &cfg, |e| {
        worst = worst.max(e.residual(cfg.lambda, cfg.eta));
        steps += 1;
    })
    .unwrap();
    // Spot-check the standalone form, which recomputes Q from scratch.
    let pi = model.uniform_policy();
    let next = rmd_step(&model, &pi, &pi, cfg.lambda, cfg.eta).unwrap();
    let standalone = rmd_first_order_residual(&model, &pi, &next, &pi, cfg.lambda, cfg.eta).unwrap();
    worst = worst.max(standalone);
    outcome(worst <= 1e-8, format!("max residual = {worst:.2e} over {steps} steps"))
}

/// Least-squares slope of ln d_t against t, exponentiated.
fn geometric_rate(d: &[f64]) -> f64 {
    let points: Vec<(f64, f64)> = d
        .iter()
        .enumerate()
        .filter(|(_, &x)| x > 0.0)
        .map(|(t, &x)| (t as f64, x.ln()))
        .collect();
    let n = points.len() as f64;
    let mx = points.iter().map(|p| p.0).sum::<f64>() / n;
    let my = points.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = points.iter().map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = points.iter().map(|(x, _)| (x - mx).powi(2)).sum();
    (sxy / sxx).exp()
}

fn contraction() -> Outcome {
    let start = Instant::now();
    let model = beach_bar();
    let init = model.uniform_policy();
    let (lambda, eta, tau) = (0.1, 0.1, 300);
    let (reference, _) = rmd_solve(&model, &init, &init, &config(10 * tau, 1)).unwrap();
    let weights = forward_flow(&model, &reference).unwrap();
    let mut d = vec![weighted_kl(&weights, &reference, &init).unwrap()];
    rmd_solve_observed(&model, &init, &init, &config(tau, 1), |e| {
        d.push(weighted_kl(&weights, &reference, e.new).unwrap());
    })
    .unwrap();
    let monotone = d.windows(2).all(|w| w[1] <= w[0]);
    let rate = geometric_rate(&d);
    let bound = 1.0 - lambda * eta / 2.0 + 0.05;
    let elapsed = start.elapsed();
    outcome(
        monotone && rate <= bound && within(elapsed, 120),
        format!(
            "d_0 = {:.3e}, d_{tau} = {:.3e}, non-increasing = {monotone}, rate = {rate:.6} (bound {bound}), {:.2}s",
            d[0],
            d[tau],
            elapsed.as_secs_f64()
        ),
    )
}

fn proximal_vs_fixed_anchor() -> Outcome {
    let model = beach_bar();
    let init = model.uniform_policy();
    let (_, pp) = pp_solve(&model, &init, &config(100, 20)).unwrap();
    let (_, rmd) = rmd_solve(&model, &init, &init, &config(2000, 1)).unwrap();
    let series = pp.exploitability_series();
    let monotone = series.windows(2).all(|w| w[1].1 <= w[0].1 + 1e-6);
    let (pp_final, rmd_final) = (pp.final_exploitability().unwrap(), rmd.final_exploitability().unwrap());
    outcome(
        monotone && series.len() == 20 && pp_final <= rmd_final,
        format!("proximal {pp_final:.6e} vs fixed anchor {rmd_final:.6e}, outer sequence non-increasing = {monotone}"),
    )
}

fn best_response_oracle() -> Outcome {
    let start = Instant::now();
    let mut r = rng(500);
    let mut worst_gap: f64 = 0.0;
    let mut lowest = f64::INFINITY;
    for _ in 0..50 {
        let model = random_small(&mut r);
        let pi = random_policy(&mut r, model.horizon(), model.num_states(), model.num_actions());
        let e = exploitability(&model, &pi).unwrap();
        let brute = brute_force_equilibrium_check(&model, &pi, 1).unwrap();
        worst_gap = worst_gap.max((e - brute).abs());
        lowest = lowest.min(e);
    }
    let elapsed = start.elapsed();
    outcome(
        worst_gap <= 1e-12 && lowest >= -1e-10 && within(elapsed, 60),
        format!(
            "max gap = {worst_gap:.2e}, min exploitability = {lowest:.3e}, {:.2}s",
            elapsed.as_secs_f64()
        ),
    )
}

fn value_identity() -> Outcome {
    let mut r = rng(600);
    let mut worst: f64 = 0.0;
    for _ in 0..100 {
        let (h, ns, na) = (r.random_range(2..=6), r.random_range(1..=5), r.random_range(1..=4));
        let model = random_crowd_model(&mut r, h, ns, na);
        let pi = random_policy(&mut r, h, ns, na);
        let sigma = random_policy(&mut r, h, ns, na);
        let lambda = r.random_range(0.0..3.0);
        worst = worst.max(consistency_check_j_equals_v(&model, &pi, &sigma, lambda).unwrap());
    }
    outcome(worst <= 1e-10, format!("max |J - E[V_1]| = {worst:.2e}"))
}

fn lipschitz_flow() -> Outcome {
    let mut r = rng(700);
    let mut worst = f64::NEG_INFINITY;
    for _ in 0..20 {
        let (h, ns, na) = (r.random_range(2..=6), r.random_range(2..=5), r.random_range(2..=4));
        let model = random_model(&mut r, h, ns, na);
        for _ in 0..100 {
            let pi = random_policy(&mut r, h, ns, na);
            let alt = random_policy(&mut r, h, ns, na);
            let (m, m_alt) = (forward_flow(&model, &pi).unwrap(), forward_flow(&model, &alt).unwrap());
            let mut budget = 0.0;
            for l in 0..h - 1 {
                budget += (0..ns)
                    .map(|s| m.step(l)[s] * tv_distance(pi.row(l, s), alt.row(l, s)).unwrap())
                    .sum::<f64>();
                let gap = tv_distance(m.step(l + 1), m_alt.step(l + 1)).unwrap();
                worst = worst.max(gap - budget);
            }
        }
    }
    outcome(worst <= 1e-10, format!("max (lhs - rhs) = {worst:.3e}"))
}

fn value_bounds() -> Outcome {
    let mut r = rng(800);
    let mut worst = f64::NEG_INFINITY;
    for _ in 0..50 {
        let (h, ns, na) = (r.random_range(2..=6), r.random_range(1..=5), r.random_range(1..=4));
        let model = random_model(&mut r, h, ns, na);
        let pi = random_policy(&mut r, h, ns, na);
        let sigma = random_policy(&mut r, h, ns, na);
        let lambda = r.random_range(0.01..2.0);
        let flow = forward_flow(&model, &pi).unwrap();
        let table = backward_values(&model, &flow, &pi, &sigma, lambda).unwrap();
        let log_min = sigma.min_prob().ln();
        // Zero-based step h has H − h steps to go.
        for step in 0..h {
            let left = (h - step) as f64;
            let lower = lambda * left * log_min;
            for s in 0..ns {
                let v = table.v(step, s);
                worst = worst.max(lower - v).max(v - left);
                for a in 0..na {
                    let q = table.q(step, s, a);
                    worst = worst.max(lower - q).max(q - (left + 1.0));
                }
            }
        }
    }
    outcome(worst <= 1e-12, format!("max violation = {worst:.3e}"))
}

/// (λ, σ_min, H, |A|, L, ln η*, ln C, ln C_λ), evaluated at 60 digits with mpmath.
const ETA_REFERENCE: [(f64, f64, usize, usize, f64, f64, f64, f64); 10] = [
    (
        0.1,
        1.0 / 3.0,
        2,
        3,
        1.0,
        -25.845282049731212036,
        22.849549776177221099,
        21.686398956153932794,
    ),
    (
        0.5,
        0.5,
        2,
        2,
        0.0,
        -10.276539163482830983,
        8.8902448023629403638,
        6.0985488109014975272,
    ),
    (
        1.0,
        0.2,
        3,
        3,
        2.0,
        -14.593924845460335719,
        13.90077766490039041,
        9.6214969848565969277,
    ),
    (
        2.0,
        1.0,
        4,
        1,
        1.0,
        -9.5871686151119979472,
        9.5871686151119979472,
        3.6777230622534851148,
    ),
    (
        0.3,
        0.1,
        3,
        4,
        0.5,
        -22.753037903924456335,
        20.855917919038574996,
        17.783224274873570905,
    ),
    (
        0.8,
        0.25,
        5,
        4,
        3.0,
        -21.029291327824038722,
        20.113000595949883712,
        15.037777577565897005,
    ),
    (
        1.5,
        0.05,
        2,
        5,
        10.0,
        -14.200478254932685081,
        13.912796182480904153,
        10.034309814510462365,
    ),
    (
        0.25,
        1.0 / 3.0,
        4,
        3,
        0.0,
        -26.345091731381008165,
        24.265650189701172237,
        20.799914274841024419,
    ),
    (
        5.0,
        0.3,
        6,
        3,
        1.0,
        -18.182678900812874769,
        19.098969632687029834,
        11.825789569693190915,
    ),
    (
        0.1,
        1.0 / 3.0,
        10,
        3,
        1e9,
        -117.85305617114297334,
        114.8573238975889824,
        110.47529726291510074,
    ),
];

fn step_size_constants() -> Outcome {
    // Ten significant digits on the value means ~1e-10 relative, i.e. 1e-10 absolute in log-space.
    let mut worst_digits: f64 = 0.0;
    let mut bound_ok = true;
    for &(lambda, smin, h, na, l, ln_eta, ln_c, ln_ca) in &ETA_REFERENCE {
        let e = eta_star(lambda, smin, h, na, l).unwrap();
        for (got, want) in [(e.log_eta_star, ln_eta), (e.log_big_c, ln_c), (e.log_c_lambda, ln_ca)] {
            worst_digits = worst_digits.max((got - want).abs());
        }
        bound_ok &= e.log_big_c + e.log_eta_star <= (lambda / 2.0).ln() + 1e-12;
    }
    let mut r = rng(900);
    for _ in 0..1000 {
        let lambda = r.random_range(0.01..10.0);
        let e = eta_star(
            lambda,
            r.random_range(0.01..1.0),
            r.random_range(2..=50),
            r.random_range(1..=10),
            r.random_range(0.0..100.0),
        )
        .unwrap();
        bound_ok &= e.log_big_c + e.log_eta_star <= (lambda / 2.0).ln() + 1e-12;
    }
    outcome(
        worst_digits <= 1e-10 && bound_ok,
        format!("max |Δ ln| = {worst_digits:.2e}, C·η* ≤ λ/2 on all tuples = {bound_ok}"),
    )
}

fn monotonicity() -> Outcome {
    let model = beach_bar();
    let beach = check_weak_monotonicity(&model, 1000, 2024);
    let kernel = TransitionKernel::from_fn(2, 2, 1, |_, _, _| vec![0.5, 0.5]).unwrap();
    let anti = MfgModel::new(kernel, RewardModel::custom(|_, s, _, mu| mu[s], 1.0), vec![0.5, 0.5]).unwrap();
    let anti_max = check_weak_monotonicity(&anti, 1000, 2024);
    outcome(
        beach <= 1e-10 && anti_max > 0.0,
        format!("beach bar max = {beach:.3e}, anti-monotone max = {anti_max:.3e}"),
    )
}

fn mirror_flow() -> Outcome {
    let model = beach_bar_model(5, 3, 0.1, 1e-9).unwrap();
    let lambda = 0.5;
    let anchor = model.uniform_policy();
    let cfg = SolverConfig {
        lambda,
        eta: 0.5,
        inner_iters: 5000,
        outer_iters: 1,
        ..SolverConfig::default()
    };
    let (reference, trace) = rmd_solve(&model, &anchor, &anchor, &cfg).unwrap();
    let settled = trace.kl_series().last().copied().unwrap_or(f64::INFINITY);
    let weights = forward_flow(&model, &reference).unwrap();

    let mut r = rng(1100);
    let init = Policy::from_fn(3, 5, 3, |_, _| simplex(&mut r, 3)).unwrap();
    let t_end = 10.0;
    let fine = mirror_flow_integrate(&model, &init, &anchor, lambda, 0.005, t_end).unwrap();
    let coarse = mirror_flow_integrate(&model, &init, &anchor, lambda, 0.01, t_end).unwrap();
    let d: Vec<f64> = fine
        .policies
        .iter()
        .map(|p| weighted_kl(&weights, &reference, p).unwrap())
        .collect();
    let monotone = d.windows(2).all(|w| w[1] <= w[0]);
    let endpoint_gap: f64 = fine
        .last()
        .as_slice()
        .iter()
        .zip(coarse.last().as_slice())
        .map(|(a, b)| (a - b).abs())
        .sum();
    outcome(
        settled < 1e-10 && monotone && endpoint_gap <= 1e-6,
        format!(
            "reference step KL = {settled:.1e}, d: {:.3e} -> {:.3e}, non-increasing = {monotone}, dt-halving gap = {endpoint_gap:.2e}",
            d[0],
            d[d.len() - 1]
        ),
    )
}

fn main() -> ExitCode {
    let criteria: [(&str, fn() -> Outcome); 11] = [
        ("simplex conservation", simplex_conservation),
        ("RMD fixed-point residual", fixed_point_residual),
        ("contraction to the regularized equilibrium", contraction),
        ("proximal point beats fixed anchor", proximal_vs_fixed_anchor),
        ("best-response oracle equivalence", best_response_oracle),
        ("value identity J = E[V_1]", value_identity),
        ("1-Lipschitz population flow", lipschitz_flow),
        ("value function bounds", value_bounds),
        ("step-size constants", step_size_constants),
        ("monotonicity certification", monotonicity),
        ("mirror flow diagnostic", mirror_flow),
    ];
    let mut failures = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let result = std::panic::catch_unwind(run).unwrap_or_else(|_| outcome(false, "panicked".into()));
        let tag = if result.pass { "PASS" } else { "FAIL" };
        println!("[{tag}] {:>2}. {name}: {}", i + 1, result.detail);
        if !result.pass {
            failures += 1;
        }
    }
    println!("{} of {} criteria passed", criteria.len() - failures, criteria.len());
    if failures == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
