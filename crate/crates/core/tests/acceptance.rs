//! End-to-end acceptance checks. Runs as a plain binary and prints one
//! PASS/FAIL line per criterion; exits nonzero if any criterion fails.

mod common;

use std::process::ExitCode;
use std::time::Instant;

use common::*;
use druid_core::analysis::*;
use druid_core::curvature::CurvatureModel;
use druid_core::harness::{write_trace, CostIterate, Experiment, TraceRecord};
use druid_core::topology::random_connected_graph;
use druid_core::{ActivationSampler, Druid, Hyperparams, NetworkState, Regularizer, Result, Scheme};
use nalgebra::{DMatrix, DVector};

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Result<Outcome> {
    Ok(Outcome { pass, detail })
}

fn sym_min_eig(a: &DMatrix<f64>) -> f64 {
    a.clone().symmetric_eigen().eigenvalues.min()
}

fn equivalence() -> Result<Outcome> {
    let start = Instant::now();
    let (mut dev, mut dual, mut manifold) = (0.0f64, 0.0f64, 0.0f64);
    for scheme in Scheme::ALL {
        let net = small_lasso(scheme);
        let mut ns = net.init();
        let mut st = FullAdmmState::zero(&net);
        for _ in 0..100 {
            net.sync_step(&mut ns)?;
            full_admm_oracle_step(&mut st, &net)?;
            let phi = st.phi(&net.graph);
            for (i, a) in ns.agents.iter().enumerate() {
                dev = dev.max(max_dev(&a.x, &st.x.row(i).transpose()));
                dev = dev.max(max_dev(&a.phi, &phi.row(i).transpose()));
            }
            dev = dev.max(max_dev(ns.theta(), &st.theta)).max(max_dev(ns.lambda(), &st.lambda));
            dual = dual.max(st.dual_sum_defect());
            manifold = manifold.max(st.manifold_defect());
        }
    }
    let secs = start.elapsed().as_secs_f64();
    outcome(
        dev <= 1e-10 && dual <= 1e-12 && manifold <= 1e-12 && secs < 1.0,
        format!("max deviation {dev:.2e}, |α+β| {dual:.2e}, |z−½E_u x| {manifold:.2e}, {secs:.3}s"),
    )
}

fn fixed_point() -> Result<Outcome> {
    let mut worst = 0.0f64;
    for scheme in Scheme::ALL {
        let net = small_lasso(scheme);
        let r = centralized_reference(&net.problem, 1e-13, DEFAULT_REFERENCE_MAX_ITER)?;
        let dual = project_dual(&r.x_star, &net, 1e-8)?;
        let before = net.state_at(&dual);
        let mut after = before.clone();
        net.sync_step(&mut after)?;
        for (a, b) in before.agents.iter().zip(&after.agents) {
            worst = worst.max(max_dev(&a.x, &b.x)).max(max_dev(&a.phi, &b.phi));
        }
        worst = worst.max(max_dev(before.theta(), after.theta())).max(max_dev(before.lambda(), after.lambda()));
    }
    outcome(worst <= 1e-9, format!("largest block movement {worst:.2e}"))
}

fn dist_err(ns: &NetworkState, x_star: &DVector<f64>) -> f64 {
    let m = ns.agents.len() as f64;
    ns.agents.iter().map(|a| (&a.x - x_star).norm_squared()).sum::<f64>().sqrt() / (m.sqrt() * x_star.norm())
}

fn linear_rate() -> Result<Outcome> {
    let start = Instant::now();
    let (problem, graph) = ridge_instance();
    let mut pass = true;
    let mut notes = Vec::new();
    for scheme in Scheme::ALL {
        let net = Druid::new(problem.clone(), graph.clone(), ridge_linear_hyper(scheme))?;
        let r = centralized_reference(&net.problem, 1e-13, DEFAULT_REFERENCE_MAX_ITER)?;
        let dual = project_dual(&r.x_star, &net, 1e-8)?;
        let star = VAlpha::optimal(&net.graph, &dual);
        let rc = rate_constants(&net, None, None)?;
        let factor = if rc.conditions.linear() { rc.contraction_factor().ok() } else { None };
        let w = LyapunovWeights::h(&net.hp);
        let mut ns = net.init();
        let mut tracker = AlphaTracker::new(&net);
        let v0 = lyapunov_norm(&VAlpha::from_network(&net, &ns, Some(&tracker))?, &star, &w);
        // Below this level the reference error dominates the norm.
        let floor = 1e-12 * v0;
        let (mut prev, mut worst_ratio) = (v0, 0.0f64);
        let mut errs = Vec::new();
        let mut hit = None;
        for t in 1..=10_000 {
            net.sync_step(&mut ns)?;
            tracker.update(&net, &ns);
            let v = lyapunov_norm(&VAlpha::from_network(&net, &ns, Some(&tracker))?, &star, &w);
            if prev > floor {
                worst_ratio = worst_ratio.max(v / prev);
            }
            prev = v;
            let e = dist_err(&ns, &r.x_star);
            errs.push(e);
            if e <= 1e-8 {
                hit = Some(t);
                break;
            }
        }
        let n = errs.len();
        let tail: Vec<usize> = (n / 2..n).collect();
        let fit = log_linear_fit(
            &tail.iter().map(|&k| (k + 1) as f64).collect::<Vec<_>>(),
            &tail.iter().map(|&k| errs[k]).collect::<Vec<_>>(),
        );
        let contraction_ok = factor.map_or(true, |f| worst_ratio <= f);
        pass &= hit.is_some() && fit.slope < 0.0 && fit.r_squared >= 0.99 && contraction_ok;
        notes.push(format!(
            "{}: t={} slope {:.2e} R² {:.4} ratio {:.4}{}",
            scheme.name(),
            hit.map_or("none".into(), |t| t.to_string()),
            fit.slope,
            fit.r_squared,
            worst_ratio,
            factor.map_or(" (conditions not met, no bound)".into(), |f| format!(" ≤ {f:.6}")),
        ));
    }
    let secs = start.elapsed().as_secs_f64();
    outcome(pass && secs < 10.0, format!("{}; {secs:.2}s", notes.join("; ")))
}

fn sublinear() -> Result<Outcome> {
    // Three rows per agent in six dimensions: every local Gram is singular,
    // the stacked one is not.
    let p = least_squares_problem(7, 6, 6, 3, Regularizer::L1(0.01));
    let g = random_connected_graph(6, 0.5, 7)?;
    let hp = Hyperparams { epsilon: epsilon_above_half(&p, 1.2), ..Default::default() };
    let net = Druid::new(p, g, hp)?;
    let sm = net.problem.smoothness()?;
    let mut ns = net.init();
    let mut series = [Vec::new(), Vec::new(), Vec::new()];
    for _ in 0..2000 {
        net.sync_step(&mut ns)?;
        let k = kkt_residuals(&net, &ns);
        for (s, r) in series.iter_mut().zip([k.r_opt, k.r_cons, k.r_reg]) {
            s.push(r * r);
        }
    }
    let ts: Vec<f64> = (100..=2000).map(f64::from).collect();
    let slopes: Vec<f64> =
        series.iter().map(|s| log_log_fit(&ts, &running_average(s)[99..]).slope).collect();
    outcome(
        sm.m_f < 1e-12 && slopes.iter().all(|&s| s <= -0.9),
        format!("m_f {:.1e}, slopes opt {:.3} cons {:.3} reg {:.3}", sm.m_f, slopes[0], slopes[1], slopes[2]),
    )
}

fn iterations_to_cost(exp: &Experiment, target: f64, cap: usize) -> Result<Option<usize>> {
    let mut ns = exp.net.init();
    for t in 1..=cap {
        exp.step(&mut ns)?;
        let c = exp.record(&ns).cost_err;
        if !c.is_finite() {
            return Ok(None);
        }
        if c <= target {
            return Ok(Some(t));
        }
    }
    Ok(None)
}

fn curvature_ordering() -> Result<Outcome> {
    let (problem, graph) = ridge_instance();
    let mut its = Vec::new();
    for scheme in Scheme::ALL {
        let hp = Hyperparams { mu_z: 0.2, mu_theta: 0.1, epsilon: 0.8, scheme, ..Default::default() };
        let net = Druid::new(problem.clone(), graph.clone(), hp)?;
        let r = centralized_reference(&net.problem, 1e-13, DEFAULT_REFERENCE_MAX_ITER)?;
        let exp = Experiment::new(net, r, None, CostIterate::Average)?;
        its.push(iterations_to_cost(&exp, 1e-5, 10_000)?);
    }
    let detail = format!("gradient {:?}, newton {:?}, bfgs {:?}", its[0], its[1], its[2]);
    let pass = match (its[0], its[1], its[2]) {
        (Some(g), Some(n), Some(b)) => n <= b && b <= g && 2 * n <= g,
        _ => false,
    };
    outcome(pass, detail)
}

fn trace_bytes(records: &[TraceRecord]) -> Result<Vec<u8>> {
    let mut out = Vec::new();
    write_trace(records, &mut out)?;
    Ok(out)
}

fn async_correctness() -> Result<Outcome> {
    let (problem, graph) = ridge_instance();
    let m = graph.num_agents();
    let mut identical = true;
    for scheme in Scheme::ALL {
        let net = Druid::new(problem.clone(), graph.clone(), ridge_linear_hyper(scheme))?;
        let r = centralized_reference(&net.problem, 1e-13, DEFAULT_REFERENCE_MAX_ITER)?;
        let sync = Experiment::new(net.clone(), r.clone(), None, CostIterate::Average)?;
        let full = Experiment::new(net, r, Some(ActivationSampler::uniform(1.0, m, 5)?), CostIterate::Average)?;
        identical &= trace_bytes(&sync.run(300, 1)?)? == trace_bytes(&full.run(300, 1)?)?;
    }
    let net = Druid::new(problem, graph, ridge_linear_hyper(Scheme::Gradient))?;
    let r = centralized_reference(&net.problem, 1e-13, DEFAULT_REFERENCE_MAX_ITER)?;
    let seeds = 20;
    let mut mean: Vec<(f64, f64)> = Vec::new();
    for seed in 0..seeds {
        let exp = Experiment::new(
            net.clone(),
            r.clone(),
            Some(ActivationSampler::uniform(0.5, m, seed)?),
            CostIterate::Average,
        )?;
        let trace = exp.run(2000, 10)?;
        if mean.is_empty() {
            mean = trace.iter().map(|rec| (rec.t as f64, 0.0)).collect();
        }
        for (acc, rec) in mean.iter_mut().zip(&trace) {
            acc.1 += rec.dist_err / seeds as f64;
        }
    }
    let (ts, ys): (Vec<f64>, Vec<f64>) = mean.iter().copied().unzip();
    let fit = log_linear_fit(&ts, &ys);
    let last = *ys.last().unwrap();
    outcome(
        identical && fit.slope < 0.0 && last < 1e-3,
        format!("p=1 traces identical: {identical}; p=0.5 mean slope {:.2e}, error at t=2000 {last:.2e}", fit.slope),
    )
}

fn bfgs_internals() -> Result<Outcome> {
    let mut worst_secant = 0.0f64;
    let mut min_eig = f64::INFINITY;
    let mut accepted = 0usize;
    let net = logistic_instance(Scheme::Bfgs);
    let mut ns = net.init();
    for _ in 0..1000 {
        net.sync_step(&mut ns)?;
        for a in &ns.agents {
            if let CurvatureModel::Bfgs(st) = &a.curvature.model {
                if st.last_accepted {
                    let (s, q) = st.last_pair.as_ref().unwrap();
                    worst_secant = worst_secant.max((&st.inverse * q - s).norm() / s.norm());
                    min_eig = min_eig.min(sym_min_eig(&st.inverse));
                    accepted += 1;
                }
            }
        }
    }
    let max_shift = ns.agents.iter().map(|a| a.curvature.shift).fold(0.0, f64::max);
    let psi = 2.0 * max_shift;
    let bounded = Druid::new(net.problem.clone(), net.graph.clone(), Hyperparams { psi, bfgs_bounding: true, ..net.hp })?;
    let mut ns = bounded.init();
    let mut floor_gap = f64::INFINITY;
    for _ in 0..1000 {
        bounded.sync_step(&mut ns)?;
        for a in &ns.agents {
            if let CurvatureModel::Bfgs(st) = &a.curvature.model {
                floor_gap = floor_gap.min(sym_min_eig(&st.effective_inverse()) - 1.0 / psi);
            }
        }
    }
    outcome(
        accepted > 0 && worst_secant <= 1e-9 && min_eig > 0.0 && floor_gap >= -1e-15,
        format!(
            "{accepted} accepted updates, secant {worst_secant:.2e}, λ_min(B) {min_eig:.3e}, λ_min(B_eff) − 1/ψ {floor_gap:.2e}"
        ),
    )
}

fn error_bounds() -> Result<Outcome> {
    let mut violations = 0usize;
    let mut checked = 0usize;
    let mut newton_quadratic = 0.0f64;
    for quadratic in [true, false] {
        for scheme in Scheme::ALL {
            let net = if quadratic { small_lasso(scheme) } else { logistic_instance(scheme) };
            let mut ns = net.init();
            for _ in 0..300 {
                let before = ns.clone();
                net.sync_step(&mut ns)?;
                let rep = error_term(&net, &before, &ns)?;
                checked += 1;
                violations += usize::from(!rep.bound_satisfied);
                if quadratic && scheme == Scheme::Newton {
                    newton_quadratic = newton_quadratic.max(rep.norm_e);
                }
            }
        }
    }
    outcome(
        violations == 0 && newton_quadratic <= 1e-13,
        format!("{violations} violations in {checked} steps, Newton quadratic max ‖e‖ {newton_quadratic:.2e}"),
    )
}

fn lyapunov_monotone() -> Result<Outcome> {
    let net = small_lasso(Scheme::Gradient);
    let r = centralized_reference(&net.problem, 1e-13, DEFAULT_REFERENCE_MAX_ITER)?;
    let dual = project_dual(&r.x_star, &net, 1e-8)?;
    let star = VAlpha::optimal(&net.graph, &dual);
    let w = LyapunovWeights::g(&net.hp)?;
    let mut ns = net.init();
    let mut tracker = AlphaTracker::new(&net);
    let v0 = lyapunov_norm(&VAlpha::from_network(&net, &ns, Some(&tracker))?, &star, &w);
    let mut prev = v0;
    let mut worst_increase = f64::NEG_INFINITY;
    for _ in 0..2000 {
        net.sync_step(&mut ns)?;
        tracker.update(&net, &ns);
        let v = lyapunov_norm(&VAlpha::from_network(&net, &ns, Some(&tracker))?, &star, &w);
        worst_increase = worst_increase.max((v - prev) / v0);
        prev = v;
    }
    outcome(
        worst_increase <= 1e-12,
        format!("largest relative increase {worst_increase:.2e}, final {:.2e}", prev / v0),
    )
}

fn regularizer_inclusion() -> Result<Outcome> {
    let mut checked = 0usize;
    let mut failures = 0usize;
    for reg in [Regularizer::L1(0.1), Regularizer::SquaredL2(0.1)] {
        for scheme in Scheme::ALL {
            let base = small_lasso(scheme);
            let net = Druid::new(
                druid_core::Problem::new(base.problem.locals.clone(), reg)?,
                base.graph.clone(),
                base.hp,
            )?;
            let sampler = ActivationSampler::uniform(0.5, net.num_agents(), 2)?;
            for asynchronous in [false, true] {
                let mut ns = net.init();
                for t in 0..300 {
                    if asynchronous {
                        net.async_step(&mut ns, &sampler.sample(t))?;
                    } else {
                        net.sync_step(&mut ns)?;
                    }
                    checked += 1;
                    failures += usize::from(!reg.contains_subgradient(ns.theta(), ns.lambda(), 1e-9));
                }
            }
        }
    }
    outcome(failures == 0, format!("{failures} failures in {checked} iterates"))
}

fn main() -> ExitCode {
    let criteria: [(&str, fn() -> Result<Outcome>); 10] = [
        ("reduced updates match the three-block oracle", equivalence),
        ("optimal state is a fixed point", fixed_point),
        ("linear convergence on strongly convex ridge", linear_rate),
        ("sublinear KKT decay on rank-deficient least squares", sublinear),
        ("curvature ordering of iterations to cost 1e-5", curvature_ordering),
        ("asynchronous correctness", async_correctness),
        ("BFGS secant and positivity", bfgs_internals),
        ("error-term bounds", error_bounds),
        ("Lyapunov monotonicity", lyapunov_monotone),
        ("regularizer subgradient inclusion", regularizer_inclusion),
    ];
    let mut failed = 0;
    for (k, (name, check)) in criteria.iter().enumerate() {
        let (pass, detail) = match check() {
            Ok(o) => (o.pass, o.detail),
            Err(e) => (false, format!("error: {e}")),
        };
        failed += usize::from(!pass);
        println!("criterion {:2}: {} {name}: {detail}", k + 1, if pass { "PASS" } else { "FAIL" });
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
