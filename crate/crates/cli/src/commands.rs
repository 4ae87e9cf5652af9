use anyhow::Result;
use pathrep::frac_calc::{gls_integral, rl_derivative_left, Beta, GridFunction};
use pathrep::gp_sim::{check_class_membership, check_smallball_conditions, PathSampler};
use pathrep::io::{write_paths_csv, write_records_csv};
use pathrep::pathwise::{ito_residual, ItoRule};
use pathrep::replicate::{
    default_holder_params_with_theta, default_lemma_params, path_order, replicate_distribution, replicate_holder,
    replicate_rv_with, ConditionalArctan, HolderOptions, HolderParams, HolderTarget, LemmaParams, PartitionSchedule,
    TargetDistribution, XiSpec,
};
use pathrep::verify::{
    crossing_sweep, fou_companion, ks_test, smallball_shape_check, zero_integral_demo, ZeroIntegralConfig,
    KS_MIN_SAMPLES,
};
use pathrep::TimeGrid;
use serde::Serialize;
use statrs::function::gamma::gamma;

use crate::setup::Run;
use crate::Command;

const TAIL_TOL: f64 = 1e-10;
const DEFAULT_TOLERANCE: f64 = 0.05;

pub fn dispatch(cmd: Command, run: &Run) -> Result<bool> {
    match cmd {
        Command::Simulate => simulate(run),
        Command::CheckClass => check_class(run),
        Command::CheckSmallballConditions => check_smallball(run),
        Command::FracOracle => frac_oracle(run),
        Command::ItoCheck => ito_check(run),
        Command::ReplicateDist => replicate_dist(run),
        Command::ReplicateRv => replicate_rv(run),
        Command::ReplicateHolder => holder(run),
        Command::VerifySmallball => verify_smallball(run),
        Command::VerifyCrossing => verify_crossing(run),
        Command::DemoZeroIntegral => demo_zero_integral(run),
    }
}

fn median(v: &[f64]) -> f64 {
    if v.is_empty() {
        return f64::NAN;
    }
    let mut s = v.to_vec();
    s.sort_by(f64::total_cmp);
    let n = s.len();
    if n % 2 == 1 {
        s[n / 2]
    } else {
        0.5 * (s[n / 2 - 1] + s[n / 2])
    }
}

fn rate(flags: impl Iterator<Item = bool>) -> f64 {
    let (mut k, mut n) = (0usize, 0usize);
    for f in flags {
        k += f as usize;
        n += 1;
    }
    k as f64 / n.max(1) as f64
}

fn lemma(run: &Run) -> Result<LemmaParams> {
    let alpha = run.alpha();
    let d = default_lemma_params(alpha)?;
    let p = &run.cfg.params;
    Ok(LemmaParams::new(alpha, p.gamma.unwrap_or(d.gamma), p.eta.unwrap_or(d.eta))?)
}

fn sampler(run: &Run, default_cells: usize) -> Result<PathSampler> {
    Ok(PathSampler::new(&run.model, run.cfg.grid(default_cells)?)?)
}

fn simulate(run: &Run) -> Result<bool> {
    let s = sampler(run, 4096)?;
    let count = run.cfg.paths.unwrap_or(10);
    let batch = s.sample_batch(count, run.cfg.seed)?;
    write_paths_csv(&batch, run.file("paths.csv")?)?;

    #[derive(Serialize)]
    struct Summary {
        model: String,
        method: String,
        cells: usize,
        paths: usize,
    }
    run.summary(&Summary {
        model: run.model.tag(),
        method: format!("{:?}", s.method()),
        cells: s.grid().intervals(),
        paths: count,
    })?;
    Ok(true)
}

#[derive(Serialize)]
struct ConditionRow {
    condition: &'static str,
    pass: bool,
    value: f64,
}

fn check_class(run: &Run) -> Result<bool> {
    let grid = run.cfg.grid(1024)?;
    let delta = run.cfg.params.delta.unwrap_or(run.cfg.horizon / 2.0);
    let r = check_class_membership(&run.model, run.alpha(), delta, &grid)?;
    run.csv(
        "conditions.csv",
        &[
            ConditionRow { condition: "positive_covariance", pass: r.positive_covariance, value: r.min_covariance },
            ConditionRow { condition: "worst_case_bound", pass: r.worst_case_bound, value: r.fitted_exponent },
            ConditionRow { condition: "variance_lower_bound", pass: r.variance_lower_bound, value: r.constant_c_lower },
            ConditionRow { condition: "ratio_bounded", pass: r.ratio_bounded, value: r.ratio_sup },
        ],
    )?;
    println!("class membership at α = {}: {}", r.alpha, if r.pass { "all conditions hold" } else { "fails" });
    run.summary(&r)?;
    // a report, not a test: failed conditions are a result
    Ok(true)
}

fn check_smallball(run: &Run) -> Result<bool> {
    let grid = run.cfg.grid(4096)?;
    let r = check_smallball_conditions(&run.model, &grid)?;
    run.csv(
        "conditions.csv",
        &[
            ConditionRow { condition: "doubling", pass: r.doubling_pass, value: r.doubling_ratio },
            ConditionRow { condition: "fourth_difference", pass: r.inequality_pass, value: r.min_margin },
        ],
    )?;
    println!("small-ball conditions: {}", if r.pass { "hold" } else { "fail" });
    run.summary(&r)?;
    Ok(true)
}

fn frac_oracle(run: &Run) -> Result<bool> {
    #[derive(Serialize)]
    struct Row {
        mu: f64,
        beta: f64,
        max_rel_err: f64,
    }
    let tol = run.cfg.tolerances.replication.unwrap_or(1e-3);
    let grid = run.cfg.grid(4096)?;
    let mut rows = Vec::new();
    for mu in [0.5, 1.0, 2.0] {
        let f = GridFunction::from_fn(grid.clone(), |s| s.powf(mu))?;
        for b in [0.25, 0.5, 0.75] {
            let d = rl_derivative_left(&f, Beta::new(b)?)?;
            let c = gamma(mu + 1.0) / gamma(mu + 1.0 - b);
            let mut worst: f64 = 0.0;
            for (s, v) in grid.points().iter().zip(d.values()) {
                if *s >= 0.1 * run.cfg.horizon {
                    let exact = c * s.powf(mu - b);
                    worst = worst.max(((v - exact) / exact).abs());
                }
            }
            rows.push(Row { mu, beta: b, max_rel_err: worst });
        }
    }
    run.csv("derivative_errors.csv", &rows)?;

    let t = run.cfg.horizon;
    let id = GridFunction::from_fn(grid.clone(), |s| s)?;
    let betas = [0.3, 0.45];
    let gls = betas.iter().map(|&b| gls_integral(&id, &id, Beta::new(b)?, t)).collect::<pathrep::Result<Vec<_>>>()?;
    let gls_err = gls.iter().map(|v| (v - 0.5 * t * t).abs()).fold(0.0, f64::max);
    let max_rel_err = rows.iter().map(|r| r.max_rel_err).fold(0.0, f64::max);
    let pass = max_rel_err <= tol && gls_err <= tol;

    #[derive(Serialize)]
    struct Summary {
        cells: usize,
        max_rel_err: f64,
        identity_integral: Vec<f64>,
        identity_betas: Vec<f64>,
        identity_err: f64,
        tolerance: f64,
        pass: bool,
    }
    println!("derivative max rel err {max_rel_err:.3e}; ∫s ds error {gls_err:.3e}");
    run.summary(&Summary {
        cells: grid.intervals(),
        max_rel_err,
        identity_integral: gls,
        identity_betas: betas.to_vec(),
        identity_err: gls_err,
        tolerance: tol,
        pass,
    })?;
    Ok(pass)
}

fn ito_check(run: &Run) -> Result<bool> {
    #[derive(Serialize)]
    struct Row {
        path: u64,
        cells: usize,
        residual: f64,
    }
    let s = sampler(run, 8192)?;
    let count = run.cfg.paths.unwrap_or(200);
    let rule = ItoRule::Indicator { level: run.cfg.params.level.or(run.cfg.params.strike).unwrap_or(0.0) };
    let u = run.cfg.params.u.unwrap_or(0.0);
    let tol = run.cfg.tolerances.ito.unwrap_or(5e-2);
    // the same paths read at strides 8, 4, 2, 1
    let strides = [8usize, 4, 2, 1];
    let mut rows = Vec::new();
    let mut by_stride = vec![Vec::with_capacity(count); strides.len()];
    for i in 0..count as u64 {
        let x = s.sample(run.cfg.seed, i);
        for (k, &st) in strides.iter().enumerate() {
            if s.grid().intervals() % st != 0 {
                continue;
            }
            let xc = x.coarsen(st)?;
            let r = ito_residual(&run.model, rule, u, &xc)?.abs();
            rows.push(Row { path: i, cells: xc.grid.intervals(), residual: r });
            by_stride[k].push(r);
        }
    }
    run.csv("residuals.csv", &rows)?;
    let medians: Vec<f64> = by_stride.iter().filter(|v| !v.is_empty()).map(|v| median(v)).collect();
    let finest = *medians.last().unwrap_or(&f64::NAN);
    let nonincreasing = medians.windows(2).all(|w| w[1] <= w[0]);
    let pass = finest <= tol && nonincreasing;

    #[derive(Serialize)]
    struct Summary {
        cells: Vec<usize>,
        median_abs_residual: Vec<f64>,
        nonincreasing: bool,
        tolerance: f64,
        pass: bool,
    }
    println!("median |residual| by refinement: {medians:.4?}");
    run.summary(&Summary {
        cells: strides
            .iter()
            .filter(|&&st| s.grid().intervals() % st == 0)
            .map(|st| s.grid().intervals() / st)
            .collect(),
        median_abs_residual: medians,
        nonincreasing,
        tolerance: tol,
        pass,
    })?;
    Ok(pass)
}

fn replicate_dist(run: &Run) -> Result<bool> {
    #[derive(Serialize)]
    struct Row {
        path: u64,
        target: f64,
        achieved: f64,
        final_error: f64,
        success: bool,
        stop_time: Option<f64>,
    }
    let s = sampler(run, 4096)?;
    let count = run.cfg.paths.unwrap_or(1000);
    let lp = lemma(run)?;
    let v = run.cfg.params.v.unwrap_or(0.5 * run.cfg.horizon);
    let n_max = run.cfg.params.n_max.unwrap_or(200);
    let tol = run.cfg.tolerances.replication.unwrap_or(DEFAULT_TOLERANCE);
    let dist = run.cfg.distribution.clone().unwrap_or_else(TargetDistribution::standard_normal);
    let sch = PartitionSchedule::on(lp.gamma, v, run.cfg.horizon, n_max, TAIL_TOL)?;
    let mut rows = Vec::with_capacity(count);
    for i in 0..count as u64 {
        let x = s.sample(run.cfg.seed, i);
        let o = replicate_distribution(&dist, &run.model, &x, v, &lp, &sch, tol)?;
        if i == 0 {
            o.integrand.write_trajectory_csv(&x, run.file("trajectory_0.csv")?)?;
            write_records_csv(&o.records, run.file("blocks_0.csv")?)?;
        }
        rows.push(Row {
            path: i,
            target: o.target,
            achieved: o.achieved,
            final_error: o.final_error,
            success: o.success,
            stop_time: o.stop_time,
        });
    }
    run.csv("samples.csv", &rows)?;
    let achieved: Vec<f64> = rows.iter().map(|r| r.achieved).collect();
    let ks = if count >= KS_MIN_SAMPLES { Some(ks_test(&achieved, |y| dist.cdf(y))?) } else { None };
    let success_rate = rate(rows.iter().map(|r| r.success));
    let ks_tol = run.cfg.tolerances.ks.unwrap_or(0.08);
    let rate_tol = run.cfg.tolerances.success_rate.unwrap_or(0.99);
    let pass = ks.is_some_and(|k| k.d <= ks_tol) && success_rate >= rate_tol;

    #[derive(Serialize)]
    struct Summary {
        samples: usize,
        v: f64,
        gamma: f64,
        eta: f64,
        n_max: usize,
        ks_d: Option<f64>,
        ks_p_value: Option<f64>,
        ks_tolerance: f64,
        success_rate: f64,
        success_tolerance: f64,
        pass: bool,
    }
    match ks {
        Some(k) => println!("KS D {:.4} (p {:.2e}); success {success_rate:.3}", k.d, k.p_value),
        None => println!("success {success_rate:.3}; KS needs at least {KS_MIN_SAMPLES} samples"),
    }
    run.summary(&Summary {
        samples: count,
        v,
        gamma: lp.gamma,
        eta: lp.eta,
        n_max,
        ks_d: ks.map(|k| k.d),
        ks_p_value: ks.map(|k| k.p_value),
        ks_tolerance: ks_tol,
        success_rate,
        success_tolerance: rate_tol,
        pass,
    })?;
    Ok(pass)
}

fn replicate_rv(run: &Run) -> Result<bool> {
    #[derive(Serialize)]
    struct Row {
        path: u64,
        xi: f64,
        achieved: f64,
        final_error: f64,
        success: bool,
    }
    let s = sampler(run, 4096)?;
    let count = run.cfg.paths.unwrap_or(200);
    let lp = lemma(run)?;
    let n_max = run.cfg.params.n_max.unwrap_or(9);
    let tol = run.cfg.tolerances.replication.unwrap_or(DEFAULT_TOLERANCE);
    let xi = run
        .cfg
        .xi
        .clone()
        .unwrap_or(XiSpec::Call { time: run.cfg.horizon, strike: run.cfg.params.strike.unwrap_or(0.2) });
    let sch = PartitionSchedule::new(lp.gamma, run.cfg.horizon, n_max, TAIL_TOL)?;
    let cond = ConditionalArctan::new(&run.model, s.grid().clone(), &xi)?;
    let mut rows = Vec::with_capacity(count);
    let mut tracking = vec![Vec::with_capacity(count); n_max];
    for i in 0..count as u64 {
        let x = s.sample(run.cfg.seed, i);
        let o = replicate_rv_with(&cond, &x, &sch, &lp, tol)?;
        if i == 0 {
            write_records_csv(&o.records, run.file("blocks_0.csv")?)?;
        }
        for (k, e) in o.tracking_error.iter().enumerate().take(n_max) {
            tracking[k].push(*e);
        }
        rows.push(Row { path: i, xi: o.target, achieved: o.achieved, final_error: o.final_error, success: o.success });
    }
    run.csv("paths.csv", &rows)?;
    let median_tracking: Vec<f64> = tracking.iter().filter(|v| !v.is_empty()).map(|v| median(v)).collect();
    let final_median = median(&rows.iter().map(|r| r.final_error).collect::<Vec<_>>());
    let pass = final_median <= tol;

    #[derive(Serialize)]
    struct Summary {
        xi: XiSpec,
        paths: usize,
        block_times: Vec<f64>,
        median_tracking_error: Vec<f64>,
        median_final_error: f64,
        success_rate: f64,
        tolerance: f64,
        pass: bool,
    }
    println!("median |V − ξ| by block: {median_tracking:.4?}");
    run.summary(&Summary {
        xi,
        paths: count,
        block_times: sch.times[1..].to_vec(),
        median_tracking_error: median_tracking,
        median_final_error: final_median,
        success_rate: rate(rows.iter().map(|r| r.success)),
        tolerance: tol,
        pass,
    })?;
    Ok(pass)
}

fn holder_params(run: &Run) -> Result<HolderParams> {
    let alpha = run.alpha();
    let p = &run.cfg.params;
    let a = p.a.unwrap_or(path_order(alpha));
    let theta = p.theta.unwrap_or(1.0);
    let d = default_holder_params_with_theta(alpha, a, theta)?;
    if p.beta.is_none() && p.gamma.is_none() && p.kappa.is_none() {
        return Ok(d);
    }
    Ok(HolderParams::new(
        alpha,
        a,
        p.beta.unwrap_or(d.beta),
        p.gamma.unwrap_or(d.gamma),
        p.kappa.unwrap_or(d.kappa),
        theta,
    )?)
}

fn holder_options(run: &Run) -> Result<HolderOptions> {
    let alpha = run.alpha();
    let d = default_lemma_params(alpha)?;
    let lp = LemmaParams::new(alpha, d.gamma, run.cfg.params.eta.unwrap_or(d.eta))?;
    Ok(HolderOptions::new(lp, run.cfg.tolerances.replication.unwrap_or(DEFAULT_TOLERANCE)))
}

fn holder(run: &Run) -> Result<bool> {
    #[derive(Serialize)]
    struct Row {
        path: u64,
        target: f64,
        achieved: f64,
        final_error: f64,
        success: bool,
        case_b_frequency: f64,
    }
    let s = sampler(run, 8192)?;
    let count = run.cfg.paths.unwrap_or(200);
    let hp = holder_params(run)?;
    let opts = holder_options(run)?;
    let n_max = run.cfg.params.n_max.unwrap_or(30);
    let target = run.cfg.holder_target.clone().unwrap_or(HolderTarget::Path);
    let sch = PartitionSchedule::new(hp.gamma, run.cfg.horizon, n_max, TAIL_TOL)?;
    let mut rows = Vec::with_capacity(count);
    for i in 0..count as u64 {
        let x = s.sample(run.cfg.seed, i);
        let o = replicate_holder(&target, &x, &hp, &sch, &opts)?;
        if i == 0 {
            o.integrand.write_trajectory_csv(&x, run.file("trajectory_0.csv")?)?;
            write_records_csv(&o.records, run.file("blocks_0.csv")?)?;
        }
        rows.push(Row {
            path: i,
            target: o.target,
            achieved: o.achieved,
            final_error: o.final_error,
            success: o.success,
            case_b_frequency: o.case_b_frequency(),
        });
    }
    run.csv("paths.csv", &rows)?;
    let success_rate = rate(rows.iter().map(|r| r.success));
    let rate_tol = run.cfg.tolerances.success_rate.unwrap_or(0.9);
    let pass = success_rate >= rate_tol;

    #[derive(Serialize)]
    struct Summary {
        params: HolderParams,
        t1: f64,
        paths: usize,
        median_final_error: f64,
        mean_case_b_frequency: f64,
        success_rate: f64,
        success_tolerance: f64,
        pass: bool,
    }
    let med = median(&rows.iter().map(|r| r.final_error).collect::<Vec<_>>());
    println!("final error within {} on {success_rate:.3} of paths; median {med:.4}", opts.tolerance);
    run.summary(&Summary {
        params: hp,
        t1: sch.times[1],
        paths: count,
        median_final_error: med,
        mean_case_b_frequency: rows.iter().map(|r| r.case_b_frequency).sum::<f64>() / count as f64,
        success_rate,
        success_tolerance: rate_tol,
        pass,
    })?;
    Ok(pass)
}

fn verify_smallball(run: &Run) -> Result<bool> {
    #[derive(Serialize)]
    struct Row {
        cells: usize,
        eps: f64,
        estimate: f64,
        lower: f64,
        upper: f64,
    }
    let delta = run.cfg.params.delta.unwrap_or(0.1 * run.cfg.horizon);
    let start = run.cfg.params.s.unwrap_or(run.cfg.horizon - delta);
    let radii = run.cfg.radii.clone().unwrap_or_else(|| (2..=10).map(|k| 0.01 * k as f64).collect());
    let count = run.cfg.paths.unwrap_or(10_000);
    let cells = run.cfg.cells.unwrap_or(256);
    let c = smallball_shape_check(&run.model, start, delta, &radii, count, run.cfg.seed, cells)?;
    let mut rows = Vec::new();
    for (n, est) in [(cells, &c.coarse_estimates), (2 * cells, &c.fine_estimates)] {
        for (e, p) in radii.iter().zip(est) {
            rows.push(Row { cells: n, eps: *e, estimate: p.estimate, lower: p.lower, upper: p.upper });
        }
    }
    run.csv("estimates.csv", &rows)?;
    let pass = c.decaying && c.stable;
    println!(
        "log p vs ε^(-1/α): slope {:.4} at {cells} cells, {:.4} at {}; decaying {}, stable {}",
        c.coarse.fit.slope,
        c.fine.fit.slope,
        2 * cells,
        c.decaying,
        c.stable
    );
    run.summary(&c)?;
    Ok(pass)
}

fn verify_crossing(run: &Run) -> Result<bool> {
    #[derive(Serialize)]
    struct Row {
        s: f64,
        t: f64,
        empirical: f64,
        reverse: f64,
        bound: f64,
        implied_c: Option<f64>,
        symmetric: bool,
    }
    let s = run.cfg.params.s.unwrap_or(0.5 * run.cfg.horizon);
    let lags = run.cfg.lags.clone().unwrap_or_else(|| (1..=20).map(|k| 0.01 * k as f64).collect());
    let count = run.cfg.paths.unwrap_or(100_000);
    let sw = crossing_sweep(&run.model, s, &lags, count, run.cfg.seed)?;
    let rows: Vec<Row> = sw
        .reports
        .iter()
        .map(|r| Row {
            s: r.s,
            t: r.t,
            empirical: r.empirical.estimate,
            reverse: r.reverse.estimate,
            bound: r.bound,
            implied_c: r.implied_c,
            symmetric: r.symmetric,
        })
        .collect();
    run.csv("crossings.csv", &rows)?;
    let max_ratio = 10.0;
    let pass = sw.c_ratio <= max_ratio && sw.all_symmetric;
    println!("implied constant max/min {:.3}; symmetric {}", sw.c_ratio, sw.all_symmetric);
    run.summary(&sw)?;
    Ok(pass)
}

fn demo_zero_integral(run: &Run) -> Result<bool> {
    #[derive(Serialize)]
    struct Row {
        path: usize,
        gap: f64,
        occupation: f64,
        fou_gap: f64,
    }
    let alpha = run.alpha();
    let strike = run.cfg.params.strike.unwrap_or(0.2);
    let mut cfg = ZeroIntegralConfig::defaults(alpha, strike, run.cfg.seed)?;
    cfg.params = holder_params(run)?;
    cfg.options = holder_options(run)?;
    if let Some(c) = run.cfg.cells {
        cfg.cells = c;
    }
    if let Some(n) = run.cfg.paths {
        cfg.count = n;
    }
    if let Some(n) = run.cfg.params.n_max {
        cfg.n_max = n;
    }
    // the grid must cover the model horizon
    TimeGrid::uniform(run.model.horizon(), cfg.cells)?;
    let r = zero_integral_demo(&run.model, &cfg)?;
    let fou = fou_companion(&run.model, run.cfg.params.theta.unwrap_or(1.0), &cfg)?;
    let rows: Vec<Row> = (0..r.gaps.len())
        .map(|i| Row { path: i, gap: r.gaps[i], occupation: r.occupations[i], fou_gap: fou.gaps[i] })
        .collect();
    run.csv("gaps.csv", &rows)?;
    let (gap_tol, occ_tol) = (run.cfg.tolerances.replication.unwrap_or(DEFAULT_TOLERANCE), 0.01);
    let pass = r.median_gap <= gap_tol && r.mean_occupation >= occ_tol && !r.degenerate;

    #[derive(Serialize)]
    struct Summary {
        strike: f64,
        t1: f64,
        median_gap: f64,
        mean_occupation: f64,
        in_the_money: f64,
        median_gap_in_the_money: f64,
        replication_success: f64,
        degenerate: bool,
        fou_theta: f64,
        fou_median_gap: f64,
        fou_integrand_difference: f64,
        gap_tolerance: f64,
        occupation_minimum: f64,
        pass: bool,
    }
    println!(
        "median gap {:.4}; occupation above K before t_1 = {:.3}: {:.4}; payoff positive on {:.3} of paths",
        r.median_gap, r.t1, r.mean_occupation, r.in_the_money
    );
    run.summary(&Summary {
        strike,
        t1: r.t1,
        median_gap: r.median_gap,
        mean_occupation: r.mean_occupation,
        in_the_money: r.in_the_money,
        median_gap_in_the_money: r.median_gap_in_the_money,
        replication_success: r.replication_success,
        degenerate: r.degenerate,
        fou_theta: fou.theta,
        fou_median_gap: fou.median_gap,
        fou_integrand_difference: fou.integrand_difference,
        gap_tolerance: gap_tol,
        occupation_minimum: occ_tol,
        pass,
    })?;
    Ok(pass)
}
