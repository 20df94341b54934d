//! Acceptance report: one PASS/FAIL line per criterion, non-zero exit on any
//! failure.

use std::path::Path;
use std::process::ExitCode;
use std::time::{Duration, Instant};

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use whittle_core::baselines::{qgi_run, qwi_run, QLearningParams};
use whittle_core::experiments::{ex1_arm, ex2_arm, ex8_arm};
use whittle_core::index::{ewisc_with, index_bounds, EwiscOptions, InverseUpdate};
use whittle_core::learner::{blinq_run, order_statistics, ArmBackedSimulator, BlinqConfig, Reference, Schedule};
use whittle_core::mdp::{random_dense_arm, validate_arm};
use whittle_core::oracle::{sample_search_arm, scan_arm, search_non_indexable, LambdaScan};
use whittle_core::{classify_indexability, ewisc, Arm, IndexComputation};

const SCAN_GRID: usize = 256;

struct Outcome {
    pass: bool,
    detail: String,
}

impl Outcome {
    fn new(pass: bool, detail: impl Into<String>) -> Self {
        Outcome { pass, detail: detail.into() }
    }
}

/// Least-squares slope of `log y` against `log x`.
fn log_log_slope(x: &[f64], y: &[f64]) -> f64 {
    let lx: Vec<f64> = x.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = y.iter().map(|v| v.ln()).collect();
    let n = lx.len() as f64;
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxy: f64 = lx.iter().zip(&ly).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = lx.iter().map(|a| (a - mx).powi(2)).sum();
    sxy / sxx
}

fn max_gap(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

struct Instance {
    arm: Arm,
    computed: IndexComputation,
    scan: LambdaScan,
}

/// Two hundred unichain arms with 3 to 8 states. The first half is
/// average-reward, the second half discounted with 0.9. Even positions are
/// dense restless arms, odd ones have Dirichlet(1/2) rows.
fn corpus() -> Vec<Instance> {
    (0..200u64)
        .map(|i| {
            let s = 3 + (i % 6) as usize;
            let discount = if i < 100 { None } else { Some(0.9) };
            let arm = if i % 2 == 0 {
                random_dense_arm(s, 1000 + i, discount)
            } else {
                let mut rng = ChaCha8Rng::seed_from_u64(2000 + i);
                loop {
                    let arm = sample_search_arm(&mut rng, s);
                    if validate_arm(&arm).unichain_all_policies {
                        break arm.with_discount(discount).unwrap();
                    }
                }
            };
            let computed = ewisc(&arm).expect("ewisc on a unichain arm");
            let scan = scan_arm(&arm, SCAN_GRID).expect("oracle scan");
            Instance { arm, computed, scan }
        })
        .collect()
}

fn criterion_1(corpus: &[Instance]) -> Outcome {
    let agree = corpus.iter().filter(|c| c.computed.indexable == c.scan.indexable).count();
    let worst = corpus
        .iter()
        .map(|c| max_gap(&c.computed.indices, &c.scan.indices))
        .fold(0.0, f64::max);
    let indexable = corpus.iter().filter(|c| c.scan.indexable).count();
    Outcome::new(
        agree == corpus.len() && worst < 1e-6,
        format!("{agree}/{} verdicts agree ({indexable} indexable), max index gap {worst:.1e}", corpus.len()),
    )
}

fn criterion_2(corpus: &[Instance]) -> Outcome {
    let indexable: Vec<_> = corpus.iter().filter(|c| c.computed.indexable).collect();
    let bad = indexable
        .iter()
        .filter(|c| {
            let s = c.arm.num_states();
            c.computed.num_steps != s
                || !c.computed.strictly_nested()
                || c.computed.crossings.iter().any(|z| z.len() != 1)
        })
        .count();
    Outcome::new(
        bad == 0 && !indexable.is_empty(),
        format!("{} indexable instances, {bad} with K != S, non-nested policies or extra crossings", indexable.len()),
    )
}

fn criterion_3() -> Outcome {
    let mut found = 0;
    let mut failures = Vec::new();
    let mut worst: f64 = 0.0;
    for s in [4usize, 5] {
        for seed in 0..5u64 {
            let arm = match search_non_indexable(seed, s, 10_000) {
                Ok(arm) => arm,
                Err(e) => {
                    failures.push(format!("S={s} seed={seed}: {e}"));
                    continue;
                }
            };
            found += 1;
            let scan = scan_arm(&arm, SCAN_GRID).expect("scan of a found arm");
            match classify_indexability(&arm) {
                Ok(verdict) if !verdict.is_indexable() => {
                    worst = worst.max(max_gap(verdict.indices(), &scan.indices));
                }
                Ok(_) => failures.push(format!("S={s} seed={seed}: classified indexable")),
                Err(e) => failures.push(format!("S={s} seed={seed}: {e}")),
            }
        }
    }
    Outcome::new(
        found >= 5 && failures.is_empty() && worst < 1e-6,
        format!("{found} non-indexable arms found, max crossing-average gap {worst:.1e}, failures {failures:?}"),
    )
}

fn criterion_4(corpus: &[Instance]) -> Outcome {
    let mut checked = 0;
    let mut violations = 0;
    for c in corpus.iter().filter(|c| c.scan.indexable) {
        let bounds = index_bounds(&c.arm).expect("bounds on a unichain arm");
        for (&oracle, &fast) in c.scan.indices.iter().zip(&c.computed.indices) {
            checked += 1;
            if !bounds.contains(oracle) || !bounds.contains(fast) {
                violations += 1;
            }
        }
    }
    Outcome::new(violations == 0, format!("{checked} indices checked, {violations} outside the bounds"))
}

/// Same-support perturbation of every transition row and reward along a
/// direction drawn from `rng`, scaled by `eps` (at most 0.25).
fn perturb(arm: &Arm, eps: f64, rng: &mut ChaCha8Rng) -> Arm {
    let s = arm.num_states();
    let mut p = |m: &DMatrix<f64>| {
        let u = DMatrix::from_fn(s, s, |_, _| rng.random_range(-1.0..1.0));
        DMatrix::from_fn(s, s, |i, j| {
            let mean: f64 = (0..s).map(|k| m[(i, k)] * u[(i, k)]).sum();
            m[(i, j)] * (1.0 + eps * (u[(i, j)] - mean))
        })
    };
    let p0 = p(arm.p_passive());
    let p1 = p(arm.p_active());
    let mut r = |v: &DVector<f64>| v.map(|x| x + eps * rng.random_range(-1.0..1.0));
    let r0 = r(arm.r_passive());
    let r1 = r(arm.r_active());
    Arm::new(p0, p1, r0, r1, arm.discount()).expect("perturbation stays stochastic")
}

/// Ten dense average-reward arms, indexable, with indices at least 0.01 apart.
fn well_separated_arms() -> Vec<(Arm, Vec<f64>)> {
    (0u64..)
        .filter_map(|seed| {
            let arm = random_dense_arm(4, 500 + seed, None);
            let c = ewisc(&arm).ok()?;
            let mut sorted = c.indices.clone();
            sorted.sort_by(f64::total_cmp);
            let separated = sorted.windows(2).all(|w| w[1] - w[0] >= 0.01);
            (c.indexable && separated).then_some((arm, c.indices))
        })
        .take(10)
        .collect()
}

fn criterion_5(arms: &[(Arm, Vec<f64>)]) -> Outcome {
    let eps = [1e-2, 1e-3, 1e-4];
    let mut slopes = Vec::new();
    for (k, (arm, indices)) in arms.iter().enumerate() {
        let errors: Vec<f64> = eps
            .iter()
            .map(|&e| {
                // Same direction for every eps.
                let mut rng = ChaCha8Rng::seed_from_u64(k as u64);
                let c = ewisc(&perturb(arm, e, &mut rng)).expect("ewisc on a perturbed arm");
                max_gap(&c.indices, indices)
            })
            .collect();
        slopes.push(log_log_slope(&eps, &errors));
    }
    let ok = slopes.len() == 10 && slopes.iter().all(|s| (0.8..=1.2).contains(s));
    let shown: Vec<String> = slopes.iter().map(|s| format!("{s:.3}")).collect();
    Outcome::new(ok, format!("slopes [{}]", shown.join(", ")))
}

fn criterion_6(arms: &[(Arm, Vec<f64>)]) -> Outcome {
    let mut total = 0;
    let mut indexable = 0;
    for (k, (arm, _)) in arms.iter().enumerate() {
        let mut rng = ChaCha8Rng::seed_from_u64(100 + k as u64);
        for _ in 0..100 {
            total += 1;
            if classify_indexability(&perturb(arm, 1e-4, &mut rng)).is_ok_and(|v| v.is_indexable()) {
                indexable += 1;
            }
        }
    }
    Outcome::new(
        total == 1000 && indexable * 100 >= total * 99,
        format!("{indexable}/{total} perturbed arms indexable"),
    )
}

fn criterion_7() -> Outcome {
    let arm = random_dense_arm(5, 0, None);
    let reference = Reference::from_arm(&arm).expect("indices of the fixed arm");
    if !ewisc(&arm).unwrap().indexable {
        return Outcome::new(false, "fixed arm is not indexable");
    }
    let sim = ArmBackedSimulator::new(arm.clone());
    let checkpoints = [1_000u64, 2_000, 5_000, 10_000, 20_000, 50_000, 100_000];
    let mut means = Vec::new();
    for &t in &checkpoints {
        let mut sum = 0.0;
        for seed in 0..10 {
            // A run truncated at t sees the same trajectory prefix and ends
            // with an index computation at t.
            let trace = blinq_run(&sim, &BlinqConfig::for_arm(&arm, t, seed), Some(&reference));
            let last = trace.last_ok().expect("coverage within 1000 steps");
            sum += last.abs_errors.as_ref().unwrap().iter().cloned().fold(0.0, f64::max);
        }
        means.push(sum / 10.0);
    }
    let x: Vec<f64> = checkpoints.iter().map(|&t| t as f64).collect();
    let slope = log_log_slope(&x, &means);
    let shown: Vec<String> = means.iter().map(|m| format!("{m:.2e}")).collect();
    Outcome::new(
        (-0.65..=-0.35).contains(&slope),
        format!("slope {slope:.3}, mean max errors [{}]", shown.join(", ")),
    )
}

fn criterion_8() -> Outcome {
    let (arm_seed, arm) = ex8_arm();
    let reference = Reference::from_arm(&arm).expect("ex8 indices");
    let truth = reference.indices.as_slice();
    let sim = ArmBackedSimulator::new(arm.clone());
    let horizon = 100_000;
    let params = QLearningParams::default();
    let max_final = |t: &whittle_core::learner::LearningTrace| {
        t.last_ok()
            .and_then(|r| r.abs_errors.as_ref())
            .map_or(f64::INFINITY, |e| order_statistics(e).2)
    };
    let blinq = max_final(&blinq_run(&sim, &BlinqConfig::for_arm(&arm, horizon, 0), Some(&reference)));
    let qgi = max_final(&qgi_run(&sim, arm.discount(), &params, horizon, 0, Some(truth)).expect("rested arm"));
    let qwi = max_final(&qwi_run(&sim, arm.discount(), &params, horizon, 0, Some(truth)));
    Outcome::new(
        blinq < 0.05 && qgi > blinq && qwi > qgi,
        format!("arm seed {arm_seed}, max final errors: blinq {blinq:.4}, qgi {qgi:.4}, qwi {qwi:.4}"),
    )
}

fn criterion_9() -> Option<Outcome> {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures/restart5.json");
    let text = std::fs::read_to_string(path).ok()?;
    let arm: Arm = serde_json::from_str(&text).expect("fixture parses");
    let got = ewisc(&arm).expect("ewisc on the fixture").indices;
    let want = [-0.9, -0.73, -0.51, -0.26, 0.01];
    let gap = max_gap(&got, &want);
    let shown: Vec<String> = got.iter().map(|x| format!("{x:.4}")).collect();
    Some(Outcome::new(gap <= 0.01, format!("indices [{}], max deviation {gap:.4}", shown.join(", "))))
}

fn criterion_10() -> Outcome {
    let sm = EwiscOptions { inverse_update: InverseUpdate::ShermanMorrison };
    let full = EwiscOptions { inverse_update: InverseUpdate::Refactorize };
    let mut worst: f64 = 0.0;
    let mut mismatched = 0;
    for i in 0..50u64 {
        let discount = if i % 2 == 0 { None } else { Some(0.9) };
        let arm = random_dense_arm(3 + (i % 10) as usize, 3000 + i, discount);
        let (a, _) = ewisc_with(&arm, &sm).expect("rank-1 sweep");
        let (b, _) = ewisc_with(&arm, &full).expect("refactorizing sweep");
        if a.thresholds.len() != b.thresholds.len() {
            mismatched += 1;
            continue;
        }
        worst = worst.max(max_gap(&a.thresholds, &b.thresholds));
    }

    let sizes = [20usize, 40, 80, 160];
    let mut per_iteration = Vec::new();
    for &s in &sizes {
        let arm = random_dense_arm(s, 7, None);
        let best = (0..5)
            .map(|_| {
                let (_, stats) = ewisc_with(&arm, &sm).expect("sweep");
                stats.sweep.as_secs_f64() / stats.iterations.max(1) as f64
            })
            .fold(f64::INFINITY, f64::min);
        per_iteration.push(best);
    }
    let x: Vec<f64> = sizes.iter().map(|&s| s as f64).collect();
    let slope = log_log_slope(&x, &per_iteration);
    let shown: Vec<String> = per_iteration.iter().map(|t| format!("{:.1}us", t * 1e6)).collect();
    Outcome::new(
        mismatched == 0 && worst <= 1e-8 && slope <= 2.4,
        format!(
            "max threshold gap {worst:.1e} over 50 arms ({mismatched} length mismatches); per-iteration cost [{}], slope {slope:.2}",
            shown.join(", ")
        ),
    )
}

fn criterion_11() -> Outcome {
    let horizon = 100_000u64;
    // Runs are anchored at coverage, so the offset term is zero.
    let allowed = (horizon as f64).log2() + 2.0;
    let arms = [("ex1", ex1_arm()), ("ex2", ex2_arm().1), ("ex8", ex8_arm().1)];
    let mut worst = 0;
    let mut detail = Vec::new();
    for (name, arm) in &arms {
        let sim = ArmBackedSimulator::new(arm.clone());
        for seed in 0..3 {
            let mut config = BlinqConfig::for_arm(arm, horizon, seed);
            config.schedule = Schedule::new(2.0, 1).unwrap();
            let trace = blinq_run(&sim, &config, None);
            worst = worst.max(trace.index_calls);
            detail.push(format!("{name}/{seed}: {}", trace.index_calls));
        }
    }
    Outcome::new(
        (worst as f64) <= allowed,
        format!("max {worst} calls, allowed {allowed:.2} [{}]", detail.join(", ")),
    )
}

fn report(number: u32, name: &str, elapsed: Duration, outcome: Option<Outcome>, failed: &mut bool) {
    match outcome {
        Some(o) => {
            *failed |= !o.pass;
            println!(
                "criterion {number:>2} {name}: {} ({:.1}s) {}",
                if o.pass { "PASS" } else { "FAIL" },
                elapsed.as_secs_f64(),
                o.detail
            );
        }
        None => println!("criterion {number:>2} {name}: SKIP (fixture absent)"),
    }
}

fn timed<T>(f: impl FnOnce() -> T) -> (T, Duration) {
    let start = Instant::now();
    let out = f();
    (out, start.elapsed())
}

fn main() -> ExitCode {
    let mut failed = false;
    let (instances, corpus_time) = timed(corpus);
    let (o, t) = timed(|| criterion_1(&instances));
    let c1 = o.pass && corpus_time + t < Duration::from_secs(120);
    report(1, "oracle equivalence", corpus_time + t, Some(Outcome { pass: c1, ..o }), &mut failed);
    let (o, t) = timed(|| criterion_2(&instances));
    report(2, "sweep structure", t, Some(o), &mut failed);
    let (o, t) = timed(criterion_3);
    report(3, "non-indexable handling", t, Some(o), &mut failed);
    let (o, t) = timed(|| criterion_4(&instances));
    report(4, "index bounds", t, Some(o), &mut failed);

    let (arms, arms_time) = timed(well_separated_arms);
    let (o, t) = timed(|| criterion_5(&arms));
    let pass = o.pass && arms_time + t < Duration::from_secs(60);
    report(5, "lipschitz rate", arms_time + t, Some(Outcome { pass, ..o }), &mut failed);
    let (o, t) = timed(|| criterion_6(&arms));
    report(6, "indexable neighbourhood", t, Some(o), &mut failed);
    let (o, t) = timed(criterion_7);
    let pass = o.pass && t < Duration::from_secs(300);
    report(7, "learning rate", t, Some(Outcome { pass, ..o }), &mut failed);
    let (o, t) = timed(criterion_8);
    let pass = o.pass && t < Duration::from_secs(600);
    report(8, "ex8 comparison", t, Some(Outcome { pass, ..o }), &mut failed);
    let (o, t) = timed(criterion_9);
    report(9, "restart arm indices", t, o, &mut failed);
    let (o, t) = timed(criterion_10);
    report(10, "incremental solver", t, Some(o), &mut failed);
    let (o, t) = timed(criterion_11);
    report(11, "schedule amortization", t, Some(o), &mut failed);

    if failed {
        ExitCode::FAILURE
    } else {
        ExitCode::SUCCESS
    }
}
