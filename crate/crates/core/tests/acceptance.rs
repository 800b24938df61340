//! Acceptance suite: one PASS/FAIL line per criterion, nonzero exit if any
//! criterion fails. Runs with `harness = false` so the lines always print.

use std::process::ExitCode;
use std::time::{Duration, Instant};

use gmnorm::analysis::scalar::{eta, q, r, r_bar, sigma_star};
use gmnorm::analysis::{aggregator_identity, certificate_matrix, certify};
use gmnorm::cli::{run_bench, table_rows, BenchArgs, TableArgs, TableKind};
use gmnorm::engines::{
    iterate_gap, run_meta, run_ocgmg, run_ogmg, run_racgm, run_reduced, run_template, Acgm, Form, LineSearch,
    MetaParams, RacgmParams, Reduced, StepOutcome, Verdict,
};
use gmnorm::problems::{CompositeProblem, LassoInstance, QuadraticInstance};
use gmnorm::schedules::{
    fistag_accumulators, ocgmg_schedule, t_sequence, theta_table, Schedule, TFamily, REFERENCE_RATE_TABLE,
};
use gmnorm::Vector;
use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = Result<String, String>;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn within(start: Instant, limit: Duration) -> Result<(), String> {
    let el = start.elapsed();
    ensure(el <= limit, || format!("took {el:?}, limit {limit:?}"))
}

fn quadratics() -> Vec<QuadraticInstance> {
    (0..10).map(|s| QuadraticInstance::generate(50, 0.01, 1.0, s).unwrap()).collect()
}

fn lasso_toys() -> Vec<LassoInstance> {
    (0..10).map(|s| LassoInstance::generate(20, 20, 1.0, 100 + s).unwrap()).collect()
}

fn c1_rate_table() -> Outcome {
    let t0 = Instant::now();
    let rows = table_rows(&TableArgs {
        which: TableKind::RateConstants,
        t: 10,
        from: 2,
        to: 999,
        out: None,
    })
    .map_err(|e| e.to_string())?;
    ensure(rows.len() == 9, || format!("{} rows", rows.len()))?;
    let mut worst = 0.0f64;
    for (row, (l, g, t)) in rows[1..].iter().zip(REFERENCE_RATE_TABLE) {
        ensure(row[0] == l.to_string(), || format!("row order {row:?}"))?;
        let (gv, tv): (f64, f64) = (row[1].parse().unwrap(), row[2].parse().unwrap());
        worst = worst.max((gv - g).abs()).max((tv - t).abs());
    }
    ensure(worst <= 1e-6, || format!("max deviation {worst:e}"))?;
    within(t0, Duration::from_secs(1))?;
    Ok(format!("8 rows, max deviation {worst:.1e}"))
}

fn c2_sequences() -> Outcome {
    let t0 = Instant::now();
    for t in [10usize, 100, 10_000] {
        let ts = t_sequence(t, TFamily::Ocgmg).map_err(|e| e.to_string())?;
        ensure((ts[t - 5] - 5.21581).abs() <= 1e-4, || format!("T={t}: t_(T-5) = {}", ts[t - 5]))?;
        ensure((ts[t - 1] - (1.0 + 3f64.sqrt())).abs() <= 1e-10, || format!("T={t}: t_(T-1) = {}", ts[t - 1]))?;
    }
    let mut worst = 0.0f64;
    for t in [2usize, 3, 10, 100, 1000, 10_000] {
        let th = theta_table(t).map_err(|e| e.to_string())?;
        for k in 1..t {
            worst = worst.max((th[k] * th[k] - th[k] - th[k + 1] * th[k + 1]).abs() / (th[k] * th[k]));
        }
        worst = worst.max((th[0] * th[0] - th[0] - 2.0 * th[1] * th[1]).abs() / (th[0] * th[0]));
    }
    ensure(worst <= 1e-12, || format!("theta residual {worst:e}"))?;
    within(t0, Duration::from_secs(1))?;
    Ok(format!("t anchors hold, theta residual {worst:.1e}"))
}

fn c3_unified_sweep() -> Outcome {
    let t0 = Instant::now();
    let rows = table_rows(&TableArgs {
        which: TableKind::UnifiedSweep,
        t: 10,
        from: 2,
        to: 999,
        out: None,
    })
    .map_err(|e| e.to_string())?;
    let (best, at) = rows[1..]
        .iter()
        .map(|r| (r[1].parse::<f64>().unwrap(), r[0].clone()))
        .fold((f64::NEG_INFINITY, String::new()), |a, b| if b.0 > a.0 { b } else { a });
    ensure(rows.len() == 999, || format!("{} rows", rows.len()))?;
    ensure(best <= 56.67, || format!("max {best} at T={at}"))?;
    within(t0, Duration::from_secs(1))?;
    Ok(format!("max {best:.6} at T={at}"))
}

fn forms_agree(p: &CompositeProblem, x0: &Vector, l: f64, t: usize, ogmg: bool) -> Result<f64, String> {
    let run = |f| {
        if ogmg {
            run_ogmg(p, x0, l, t, f)
        } else {
            run_ocgmg(p, x0, l, t, f)
        }
        .map_err(|e| e.to_string())
    };
    let base = run(Form::Canonical)?;
    let mut worst = 0.0f64;
    for f in &Form::ALL[1..] {
        worst = worst.max(iterate_gap(&base.states, &run(*f)?.states));
    }
    Ok(worst)
}

fn c4_cross_form() -> Outcome {
    let t0 = Instant::now();
    let mut worst = 0.0f64;
    for inst in quadratics() {
        let p = inst.problem();
        for t in [2usize, 8, 32] {
            worst = worst.max(forms_agree(&p, &inst.start, inst.lipschitz, t, true)?);
            worst = worst.max(forms_agree(&p, &inst.start, inst.lipschitz, t, false)?);
        }
    }
    for inst in lasso_toys() {
        let p = inst.problem();
        for t in [2usize, 8, 32] {
            worst = worst.max(forms_agree(&p, &inst.start, inst.lipschitz, t, false)?);
        }
    }
    ensure(worst <= 1e-9, || format!("max relative gap {worst:e}"))?;
    within(t0, Duration::from_secs(10))?;
    Ok(format!("max relative gap {worst:.1e}"))
}

fn c5_fistag() -> Outcome {
    let mut worst = 0.0f64;
    let mut check = |p: &CompositeProblem, x0: &Vector, l: f64| -> Result<(), String> {
        for t in [2usize, 8, 32] {
            let oc = run_ocgmg(p, x0, l, t, Form::Canonical).map_err(|e| e.to_string())?;
            for which in [Reduced::FistaG, Reduced::FistaGAccumulators] {
                let fg = run_reduced(p, x0, l, t, which).map_err(|e| e.to_string())?;
                worst = worst.max(iterate_gap(&oc.states, &fg.states));
            }
        }
        Ok(())
    };
    for inst in quadratics() {
        check(&inst.problem(), &inst.start, inst.lipschitz)?;
    }
    for inst in lasso_toys() {
        check(&inst.problem(), &inst.start, inst.lipschitz)?;
    }
    ensure(worst <= 1e-10, || format!("iterate gap {worst:e}"))?;
    let mut acc_worst = 0.0f64;
    for t in [2usize, 3, 8, 32, 256, 4096] {
        for l in [1.0, 7.5] {
            let closed = fistag_accumulators(t, l).map_err(|e| e.to_string())?;
            let s = ocgmg_schedule(t, 1.0).map_err(|e| e.to_string())?.rescaled(l);
            for (k, c) in closed.iter().enumerate() {
                acc_worst = acc_worst.max((c - s.b_to_t(k)).abs() / s.b_to_t(k).max(1e-300).max(*c));
            }
        }
    }
    ensure(acc_worst <= 1e-10, || format!("accumulator routes differ by {acc_worst:e}"))?;
    Ok(format!("iterate gap {worst:.1e}, accumulator gap {acc_worst:.1e}"))
}

fn c6_aggregator() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut worst = 0.0f64;
    for trial in 0..100u64 {
        let t = rng.random_range(2..=16usize);
        let a: Vec<f64> = (1..t).map(|_| rng.random_range(0.05..4.0)).collect();
        let b: Vec<f64> = (1..t).map(|_| rng.random_range(0.01..2.0)).collect();
        let l = rng.random_range(0.5..5.0);
        let s = Schedule::custom(rng.random_range(0.05..3.0), &a, &b, l).map_err(|e| e.to_string())?;
        let (p, x0) = if trial % 2 == 0 {
            let inst = QuadraticInstance::generate(rng.random_range(2..=12), 0.05, l, trial).unwrap();
            (inst.problem(), inst.start.clone())
        } else {
            let inst = LassoInstance::generate(15, 10, 0.5, trial).unwrap();
            (inst.problem(), inst.start.clone())
        };
        let tr = run_template(&p, &x0, &s, l, Form::Canonical).map_err(|e| e.to_string())?;
        let v = aggregator_identity(&tr, &s, &p.metric).map_err(|e| e.to_string())?;
        worst = worst.max(v.residual);
    }
    ensure(worst <= 1e-10, || format!("worst residual {worst:e}"))?;
    Ok(format!("100 trials, worst residual {worst:.1e}"))
}

fn c7_certificates() -> Outcome {
    let mut runs = 0;
    let mut checks = 0;
    let mut min_slack = f64::INFINITY;
    let mut tally = |tr: &gmnorm::engines::RunTrace, family: &str| -> Result<(), String> {
        let rep = certify(tr).map_err(|e| e.to_string())?;
        if let Some(c) = rep.failures().next() {
            return Err(format!("{family} T={}: {} at k={:?} slack {:e}", tr.oracle_calls, c.name, c.k, c.slack));
        }
        let finals = rep.checks.iter().filter(|c| c.name.ends_with(".final")).count();
        ensure(finals == 1, || format!("{family}: no final check"))?;
        runs += 1;
        checks += rep.checks.len();
        min_slack = rep
            .checks
            .iter()
            .filter(|c| c.name.ends_with("midway"))
            .fold(min_slack, |m, c| m.min(c.slack));
        Ok(())
    };
    for inst in quadratics() {
        let p = inst.problem();
        for t in [2usize, 8, 32] {
            tally(&run_ogmg(&p, &inst.start, inst.lipschitz, t, Form::OneAux).unwrap(), "ogmg")?;
            tally(&run_ocgmg(&p, &inst.start, inst.lipschitz, t, Form::TwoAux).unwrap(), "ocgmg")?;
        }
    }
    for inst in lasso_toys() {
        let p = inst.problem();
        for t in [2usize, 8, 32] {
            tally(&run_ocgmg(&p, &inst.start, inst.lipschitz, t, Form::Extrapolated).unwrap(), "ocgmg")?;
        }
    }
    Ok(format!("{runs} runs, {checks} checks, min midway slack {min_slack:.2e}"))
}

fn c8_psd() -> Outcome {
    let mut worst = 0.0f64;
    for t in [2usize, 3, 4, 8, 16, 64, 256] {
        let s = ocgmg_schedule(t, 1.0).map_err(|e| e.to_string())?;
        let m = certificate_matrix(&s, &vec![1.0; t], 0.0).map_err(|e| e.to_string())?;
        ensure(m.is_zero(), || format!("T={t}: max |C| = {:e}, scale {:e}", m.max_abs(), m.scale))?;
        worst = worst.max(m.max_abs() / m.scale);
        for k in 1..t {
            let pm = certificate_matrix(&s.with_b_scaled(k, 1.1), &vec![1.0; t], 0.0).map_err(|e| e.to_string())?;
            ensure(!pm.is_zero(), || format!("T={t}: perturbing b_{k} went undetected"))?;
        }
    }
    Ok(format!("max |C|/scale {worst:.1e}; every single-b_k perturbation detected"))
}

fn c9_eta() -> Outcome {
    let (s, v) = sigma_star();
    ensure((s - 0.0981709).abs() <= 2e-6, || format!("sigma* = {s}"))?;
    ensure((v - 0.9444).abs() <= 1e-4, || format!("eta(sigma*) = {v}"))?;
    let e2 = eta((-2f64).exp()).map_err(|e| e.to_string())?;
    ensure((e2 - 0.9273).abs() <= 1e-4, || format!("eta(e^-2) = {e2}"))?;
    ensure(eta(0.5).is_err() && eta(0.0).is_err(), || "domain not enforced".into())?;
    Ok(format!("sigma* = {s:.7}, eta* = {v:.5}, eta(e^-2) = {e2:.5}"))
}

fn c10_scalars() -> Outcome {
    let xs = [1.01, 1.1, 2.0, 3.0, 5.0, 10.0, 100.0];
    let ks = [2.0, 3.0, 5.0, 10.0, 100.0];
    let err = |e: gmnorm::Error| e.to_string();
    for w in xs.windows(2) {
        ensure(q(w[0]).map_err(err)? > 0.0 && q(w[1]).map_err(err)? > q(w[0]).map_err(err)?, || {
            format!("q not positive increasing at {w:?}")
        })?;
    }
    for &x in &xs {
        let closed = 1.0 / (4.0 * x * (x - 1.0));
        ensure((r(x, 2.0).map_err(err)? - closed).abs() <= 1e-12 * closed.max(1.0), || format!("r({x}, 2)"))?;
        let far = r(x, 1e6).map_err(err)?;
        ensure((far - closed).abs() <= 1e-4 * closed.max(1.0), || format!("r({x}, 1e6) = {far}"))?;
        for &k in &ks {
            ensure(r(x, k).map_err(err)? >= r(x, 2.0).map_err(err)? * (1.0 - 1e-12), || format!("r({x}, {k}) < r({x}, 2)"))?;
        }
    }
    let big: Vec<f64> = xs.iter().copied().filter(|x| *x >= 3.0).collect();
    for &k in &ks {
        for w in big.windows(2) {
            ensure(r_bar(w[1], k).map_err(err)? > r_bar(w[0], k).map_err(err)?, || format!("r_bar not increasing, kappa {k}"))?;
        }
    }
    let rb = r_bar(5.0, 2.0).map_err(err)?;
    ensure((rb - 0.1).abs() <= 1e-12, || format!("r_bar(5, 2) = {rb}"))?;
    Ok("grid properties hold, r_bar(5, 2) = 0.1".into())
}

fn c11_acgm() -> Outcome {
    let ls = LineSearch::default();
    let mut ratios = Vec::new();
    for seed in 0..10u64 {
        let inst = QuadraticInstance::generate(30, 0.05, 2.0, seed).unwrap();
        let p = inst.problem();
        let l0 = 0.5;
        let mut m = Acgm::new(&p, &inst.start, l0, ls, false).map_err(|e| e.to_string())?;
        while m.step(300).map_err(|e| e.to_string())? == StepOutcome::Accepted {}
        let d = p.distance_to_optimum(&inst.start).map_err(|e| e.to_string())?;
        let fstar = p.optimum.as_ref().unwrap().value;
        let lu = (ls.gamma_d * l0).max(ls.gamma_u * inst.lipschitz);
        for k in 1..m.acc_hist.len() {
            let a = m.acc_hist[k];
            ensure(m.f_hist[k] - fstar <= d * d / (2.0 * a) * (1.0 + 1e-12) + 1e-14, || {
                format!("seed {seed}: residual bound fails at k={k}")
            })?;
            ensure(a >= ((k + 1) * (k + 1)) as f64 / (4.0 * lu) * (1.0 - 1e-12), || {
                format!("seed {seed}: A_k growth fails at k={k}")
            })?;
        }
        // stop well above the rounding floor, where ratios are noise
        let g0 = p.metric.dual_norm_sq(&p.gradient_mapping(inst.lipschitz, &inst.start).unwrap()).sqrt();
        // gmap_start is taken at the first trial L of each run, so the ratio
        // is only meaningful when the runs start from comparable estimates
        let params = RacgmParams {
            l0: inst.lipschitz,
            budget: 2000,
            eps: Some(1e-10 * g0),
            ..Default::default()
        };
        let res = run_racgm(&p, &inst.start, &params).map_err(|e| e.to_string())?;
        let g: Vec<f64> = res.restarts.iter().filter_map(|r| r.gmap_start).collect();
        ensure(g.len() >= 3, || format!("seed {seed}: only {} restarts", g.len()))?;
        // restart points r_1, r_2, ... (r_0 is the reference start); the last
        // restart may be cut by the budget and still has a valid start point
        for w in g[1..].windows(2) {
            let ratio = w[1] / w[0];
            ensure(ratio < 1.0, || format!("seed {seed}: restart gradient ratio {ratio} over {:?}", g))?;
            ratios.push(ratio);
        }
    }
    let worst = ratios.iter().copied().fold(0.0f64, f64::max);
    Ok(format!("10 quadratics; {} restart ratios, worst {worst:.3}", ratios.len()))
}

fn c12_meta() -> Outcome {
    let t0 = Instant::now();
    let inst = LassoInstance::generate(100, 100, 4.0, 1).unwrap();
    let p = inst.problem();
    let l = inst.lipschitz;
    let g1 = p.metric.dual_norm_sq(&p.gradient_mapping(l, &inst.start).unwrap()).sqrt();
    let eps = 1e-8 * g1;
    let base = MetaParams {
        l0: l,
        eps: Some(eps),
        budget: Some(50_000),
        ..MetaParams::default()
    };
    let res = run_meta(&p, &inst.start, &base).map_err(|e| e.to_string())?;
    ensure(res.trace.verdict == Verdict::Converged, || format!("verdict {:?}", res.trace.verdict))?;
    ensure(res.trace.oracle_calls <= 50_000, || format!("{} calls", res.trace.oracle_calls))?;
    let mut boundary: Vec<f64> = res.cycles.iter().map(|c| c.f_start).collect();
    boundary.extend(res.cycles.last().map(|c| c.f_end));
    for w in boundary.windows(2) {
        ensure(w[1] <= w[0], || format!("cycle boundary F increased: {:?}", boundary))?;
    }
    let low = MetaParams {
        l0: l / 64.0,
        ls: LineSearch {
            gamma_u: 2.0,
            ..LineSearch::default()
        },
        ..base
    };
    let res_low = run_meta(&p, &inst.start, &low).map_err(|e| e.to_string())?;
    ensure(res_low.failures <= 6, || format!("{} OCGM-G failures with L/64", res_low.failures))?;
    within(t0, Duration::from_secs(60))?;
    Ok(format!(
        "eps reached in {} calls ({} cycles); L/64: {} failures, {} calls",
        res.trace.oracle_calls,
        res.cycles.len(),
        res_low.failures,
        res_low.trace.oracle_calls
    ))
}

fn c13_bench() -> Outcome {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let inst = gmnorm::problems::io::Instance::Lasso(LassoInstance::generate(100, 100, 4.0, 1).unwrap());
    let manifest = gmnorm::problems::io::save(&inst, dir.path(), "lasso").map_err(|e| e.to_string())?;
    let rep = run_bench(&BenchArgs {
        problem: manifest,
        budget: 50_000,
        eps_rel: 1e-8,
        l0: None,
        gamma_d: None,
        gamma_u: None,
        out: Some(dir.path().join("bench")),
        timing: false,
    })
    .map_err(|e| e.to_string())?;
    let calls: Vec<String> = rep.methods.iter().map(|m| format!("{}={}", m.method, m.oracle_calls)).collect();
    Ok(format!(
        "recorded, not asserted: {}; meta ahead of acgm from gradient decade {:?}",
        calls.join(" "),
        rep.meta_ahead_of_acgm_from_decade
    ))
}

fn main() -> ExitCode {
    let criteria: [(&str, fn() -> Outcome); 13] = [
        ("rate-constant table", c1_rate_table),
        ("sequence anchors", c2_sequences),
        ("unified-rate sweep", c3_unified_sweep),
        ("cross-form equivalence", c4_cross_form),
        ("FISTA-G equivalence", c5_fistag),
        ("aggregator identity fuzzing", c6_aggregator),
        ("runtime certificates", c7_certificates),
        ("PSD certificate", c8_psd),
        ("efficiency function", c9_eta),
        ("scalar function properties", c10_scalars),
        ("ACGM and R-ACGM guarantees", c11_acgm),
        ("meta-scheme end-to-end", c12_meta),
        ("benchmark report", c13_bench),
    ];
    let mut failed = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        let t0 = Instant::now();
        let out = std::panic::catch_unwind(f).unwrap_or_else(|_| Err("panicked".into()));
        let secs = t0.elapsed().as_secs_f64();
        match out {
            Ok(msg) => println!("criterion {:>2} PASS  {name} ({secs:.2}s): {msg}", i + 1),
            Err(msg) => {
                failed += 1;
                println!("criterion {:>2} FAIL  {name} ({secs:.2}s): {msg}", i + 1);
            }
        }
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
