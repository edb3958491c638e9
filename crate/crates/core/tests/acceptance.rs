//! End-to-end acceptance checks. Each criterion prints one PASS/FAIL line;
//! they run sequentially inside one test so the timing checks are not
//! disturbed by other tests.

mod common;

use std::io::Write;
use std::time::{Duration, Instant};

use nalgebra::DVector;
use nphc::experiment::{self, median, ExperimentConfig, Preset};
use nphc::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

struct Outcome {
    id: usize,
    pass: bool,
    detail: String,
}

/// Written straight to the stderr handle so the lines show up even when the
/// harness captures output of passing tests.
fn say(line: &str) {
    let _ = writeln!(std::io::stderr(), "{line}");
}

fn report(id: usize, pass: bool, detail: String) -> Outcome {
    say(&format!("criterion {id}: {} | {detail}", if pass { "PASS" } else { "FAIL" }));
    Outcome { id, pass, detail }
}

fn rel_frob(est: &Matrix, truth: &Matrix) -> f64 {
    (est - truth).norm() / truth.norm()
}

fn criterion_1() -> Outcome {
    let cum = IntegratedCumulants::from_parts(
        DVector::from_element(1, 2.0),
        Matrix::from_element(1, 1, 8.0),
        Matrix::from_element(1, 1, 64.0),
    )
    .unwrap();
    let start = Instant::now();
    let fit = solve(&cum, &ExperimentConfig::preset(Preset::Custom).solver).unwrap();
    let secs = start.elapsed().as_secs_f64();
    let g = fit.g_hat[(0, 0)];
    let err = (g - 0.5).abs();
    report(1, err <= 1e-4 && secs < 1.0, format!("g_hat = {g:.8}, |err| = {err:.2e}, {secs:.3} s"))
}

fn preset_run(preset: Preset, runs: usize) -> (experiment::ExperimentReport, f64) {
    let mut cfg = ExperimentConfig::preset(preset);
    cfg.runs = runs;
    cfg.seed = 1;
    let start = Instant::now();
    let rep = experiment::run(&cfg).unwrap();
    (rep, start.elapsed().as_secs_f64())
}

fn criterion_2() -> Outcome {
    let (rep, secs) = preset_run(Preset::Rect10, 3);
    let per_run = secs / rep.runs.len() as f64;
    let n = median(&rep.runs.iter().map(|r| {
        r.events_per_node.iter().sum::<usize>() as f64 / r.events_per_node.len() as f64
    }).collect::<Vec<_>>());
    let pass = rep.median_rel_err <= 0.05
        && rep.median_mean_rank_corr >= 0.25
        && per_run <= 300.0
        && n >= 5e4;
    report(
        2,
        pass,
        format!(
            "Rect10, {n:.0} events/node, median of {} seeds: RelErr {:.4}, MRankCorr {:.4}, {per_run:.1} s per run",
            rep.runs.len(),
            rep.median_rel_err,
            rep.median_mean_rank_corr
        ),
    )
}

fn criterion_3() -> Outcome {
    let mut parts = Vec::new();
    let mut pass = true;
    for preset in [Preset::Plaw10, Preset::Exp10] {
        let (rep, secs) = preset_run(preset, 3);
        pass &= rep.median_rel_err <= 0.08;
        parts.push(format!(
            "{} RelErr {:.4} (MRankCorr {:.3}, {secs:.0} s)",
            preset.name(),
            rep.median_rel_err,
            rep.median_mean_rank_corr
        ));
    }
    report(3, pass, parts.join("; "))
}

fn criterion_4() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(404);
    let mut worst: f64 = 0.0;
    let mut events = 0;
    for _ in 0..50 {
        let (ev, h) = common::random_dataset(&mut rng, 500);
        events += ev.total_events();
        worst = worst.max(common::oracle_gap(&ev, h));
    }
    report(4, worst <= 1e-10, format!("50 datasets ({events} events), max |fast - brute| = {worst:.2e}"))
}

fn criterion_5() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(505);
    let worst = (0..100).map(|_| common::gradient_gap(&mut rng)).fold(0.0, f64::max);
    report(5, worst <= 1e-5, format!("100 instances, max relative gap {worst:.2e}"))
}

fn consistency_model() -> HawkesModel {
    // few events per window: the skewness noise grows with H times the rate
    let g = Matrix::from_row_slice(2, 2, &[0.5, 0.0, 0.4, 0.3]);
    HawkesModel::exponential(vec![0.2, 0.2], &g, 1.0).unwrap()
}

fn criterion_6() -> Outcome {
    let model = consistency_model();
    let g = model.integral_matrix();
    let exact = exact_cumulants(&g, &model.mu_vector()).unwrap();
    let solver = ExperimentConfig::preset(Preset::Custom).solver;
    let mut rows = Vec::new();
    for t in [1e3, 1e4, 1e5] {
        let h = f64::powf(t, 0.3);
        let (mut ec, mut ek, mut eg) = (Vec::new(), Vec::new(), Vec::new());
        for seed in 0..10 {
            let sim = simulate(&model, &SimulationConfig::new(t, 600 + seed)).unwrap();
            let cum = estimate_cumulants(&sim.events, &CumulantConfig::new(h)).unwrap();
            ec.push(rel_frob(&cum.c, &exact.c));
            ek.push(rel_frob(&cum.kc, &exact.kc));
            let fit = solve(&cum, &solver).unwrap();
            eg.push(rel_err(&g, &fit.g_hat).unwrap());
        }
        rows.push((t, median(&ec), median(&ek), median(&eg)));
    }
    let non_increasing = |f: fn(&(f64, f64, f64, f64)) -> f64| rows.windows(2).all(|w| f(&w[1]) <= f(&w[0]));
    let pass = non_increasing(|r| r.1) && non_increasing(|r| r.2) && non_increasing(|r| r.3);
    let detail = rows
        .iter()
        .map(|(t, c, k, g)| format!("T={t:.0e}: C {c:.3}, Kc {k:.3}, RelErr {g:.3}"))
        .collect::<Vec<_>>()
        .join("; ");
    report(6, pass, detail)
}

fn criterion_7() -> Outcome {
    let g = Matrix::from_row_slice(2, 2, &[0.3, 0.1, 0.4, 0.2]);
    let model = HawkesModel::exponential(vec![1.0, 0.5], &g, 1.0).unwrap();
    let sim = simulate(&model, &SimulationConfig::new(1e4, 77).with_ancestry()).unwrap();
    let counts = sim.ancestor_counts().unwrap();
    let n = sim.events.counts();
    let mut worst_z: f64 = 0.0;
    for i in 0..2 {
        for j in 0..2 {
            let nj = n[j] as f64;
            let ratio = counts[(i, j)] / nj;
            let se = (g[(i, j)] / nj).sqrt();
            worst_z = worst_z.max((ratio - g[(i, j)]).abs() / se);
        }
    }
    report(7, worst_z <= 5.0, format!("T = 1e4, {} events, max |ratio - g| / SE = {worst_z:.2}", sim.events.total_events()))
}

fn criterion_8() -> Outcome {
    let model = HawkesModel::exponential(vec![0.02; 2], &Matrix::zeros(2, 2), 1.0).unwrap();
    let solver = ExperimentConfig::preset(Preset::Custom).solver;
    let maxima: Vec<f64> = (0..20)
        .map(|seed| {
            let sim = simulate(&model, &SimulationConfig::new(1e5, 800 + seed)).unwrap();
            let cum = estimate_cumulants(&sim.events, &CumulantConfig::new(10.0)).unwrap();
            solve(&cum, &solver).unwrap().g_hat.amax()
        })
        .collect();
    let within = maxima.iter().filter(|m| **m <= 0.05).count();
    let med = median(&maxima);
    report(
        8,
        med <= 0.05,
        format!("G = 0, d = 2, T = 1e5, H = 10: median max|g_hat| = {med:.4} over 20 seeds, {within}/20 seeds within 0.05"),
    )
}

fn min_time(pool: &rayon::ThreadPool, events: &EventSequences, cfg: &CumulantConfig) -> Duration {
    (0..5)
        .map(|_| {
            let start = Instant::now();
            pool.install(|| estimate_cumulants(events, cfg).unwrap());
            start.elapsed()
        })
        .min()
        .unwrap()
}

fn scaling_events(d: usize, horizon: f64) -> EventSequences {
    let g = Matrix::from_diagonal_element(d, d, 0.3);
    let model = HawkesModel::exponential(vec![1.0; d], &g, 1.0).unwrap();
    simulate(&model, &SimulationConfig::new(horizon, 909)).unwrap().events
}

fn criterion_9() -> Outcome {
    let pool = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
    let cfg = CumulantConfig::new(10.0);
    let base = scaling_events(10, 2e4);
    let double_n = scaling_events(10, 4e4);
    let double_d = scaling_events(20, 1e4);
    let t_base = min_time(&pool, &base, &cfg).as_secs_f64();
    let t_n = min_time(&pool, &double_n, &cfg).as_secs_f64();
    let t_d = min_time(&pool, &double_d, &cfg).as_secs_f64();
    let (rn, rd) = (t_n / t_base, t_d / t_base);
    report(
        9,
        rn <= 2.5 && rd <= 5.0,
        format!(
            "n {} -> {}: x{rn:.2}; d 10 -> 20 at n {}: x{rd:.2} (base {:.3} s, one thread)",
            base.total_events(),
            double_n.total_events(),
            double_d.total_events(),
            t_base
        ),
    )
}

#[test]
fn acceptance() {
    let outcomes = vec![
        criterion_1(),
        criterion_2(),
        criterion_3(),
        criterion_4(),
        criterion_5(),
        criterion_6(),
        criterion_7(),
        criterion_8(),
        criterion_9(),
    ];
    let failed: Vec<_> = outcomes.iter().filter(|o| !o.pass).map(|o| format!("{}: {}", o.id, o.detail)).collect();
    say(&format!("{}/{} criteria passed", outcomes.len() - failed.len(), outcomes.len()));
    assert!(failed.is_empty(), "failed criteria:\n{}", failed.join("\n"));
}

#[test]
#[ignore = "slow: d = 100, run with --ignored"]
fn exp100_end_to_end() {
    let (rep, secs) = preset_run(Preset::Exp100, 1);
    say(&format!(
        "exp100: RelErr {:.4}, MRankCorr {:.4}, {secs:.0} s",
        rep.median_rel_err, rep.median_mean_rank_corr
    ));
    assert!(rep.median_rel_err.is_finite());
    assert!(rep.median_mean_rank_corr > 0.0);
}
