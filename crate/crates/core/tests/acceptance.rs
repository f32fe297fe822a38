//! Acceptance suite: one PASS/FAIL line per criterion; exits non-zero on any failure.

use std::collections::BTreeMap;
use std::path::Path;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::{Arc, Mutex};
use std::time::{Duration, Instant};

use bchmlab::analysis::{complete_linkage_cluster, similarity_matrix, Metric, SimilarityMatrix, TrajectoryMatrix};
use bchmlab::bchm::{
    exp_confined, exp_confined_component, fit_beta_params, vector_correct, AdaptiveParams, AdaptiveState,
    BetaFitParams, CorrectionContext, DEFAULT_EPSILON,
};
use bchmlab::benchmarks::OptimumPlacement;
use bchmlab::engine::{lpsr_target_size, ClassicDEParams, EngineKind, ShadeParams};
use bchmlab::experiment::{run_sweep, SweepConfig};
use bchmlab::par::{map_indexed, Execution};
use bchmlab::{
    classify, run, BchmChoice, BehaviourClass, BenchmarkProblem, Bounds, ClassifierConfig, EngineConfig, FunctionId,
    Method, Mode, Objective, PopulationStats, RngStream, RunConfig,
};

type Verdict = Result<String, String>;

fn check(cond: bool, msg: String) -> Verdict {
    if cond {
        Ok(msg)
    } else {
        Err(msg)
    }
}

fn within(t: Duration, limit_s: u64, what: &str) -> Result<(), String> {
    if t.as_secs_f64() < limit_s as f64 {
        Ok(())
    } else {
        Err(format!("{what} took {:.1}s, limit {limit_s}s", t.as_secs_f64()))
    }
}

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

fn random_vec(rng: &mut RngStream, n: usize, lo: f64, hi: f64) -> Vec<f64> {
    (0..n).map(|_| lo + (hi - lo) * rng.unit()).collect()
}

fn correction_feasibility() -> Verdict {
    const N: usize = 20;
    const TRIALS: usize = 1_000_000;
    const CHUNK: usize = 10_000;
    let start = Instant::now();
    let bounds = Bounds::uniform(N, -5.0, 5.0).unwrap();
    let root = RngStream::new(0xACC1);
    let methods: Vec<BchmChoice> =
        BchmChoice::all_ids().filter(|id| *id != "dismiss").map(|id| id.parse().unwrap()).collect();
    let mut failures = Vec::new();
    for m in &methods {
        let stream = root.split_str(m.id());
        let bad: Vec<usize> = map_indexed(TRIALS / CHUNK, Execution::Parallel { threads: 0 }, |c| {
            let mut rng = stream.split(c as u64);
            // a fresh feasible context per chunk
            let target = random_vec(&mut rng, N, -5.0, 5.0);
            let pbest = random_vec(&mut rng, N, -5.0, 5.0);
            let mean = random_vec(&mut rng, N, -5.0, 5.0);
            let variance = random_vec(&mut rng, N, 0.0, 10.0);
            let beta = fit_beta_params(&PopulationStats { mean: mean.clone(), variance }, &bounds, DEFAULT_EPSILON);
            let ctx =
                CorrectionContext { target: &target, pbest: &pbest, population_mean: &mean, bounds: &bounds, beta: &beta };
            let mut adaptive = AdaptiveState::new(AdaptiveParams::default()).unwrap();
            let mut bad = 0;
            for t in 0..CHUNK {
                let y = random_vec(&mut rng, N, -15.0, 15.0);
                let method = match m {
                    BchmChoice::Fixed(f) => *f,
                    BchmChoice::Adaptive => {
                        // move the probabilities around while sampling
                        let (k, f) = adaptive.select(&mut rng);
                        if rng.unit() < 0.3 {
                            adaptive.record_success(k);
                        }
                        if t % 100 == 99 {
                            adaptive.end_generation();
                        }
                        f
                    }
                };
                match method.correct(&y, &ctx, &mut rng) {
                    Ok(out) => match out.corrected_vector() {
                        Some(c) if bounds.contains(c) => {}
                        _ => bad += 1,
                    },
                    Err(_) => bad += 1,
                }
            }
            bad
        });
        let total: usize = bad.iter().sum();
        if total > 0 {
            failures.push(format!("{m}: {total} infeasible"));
        }
    }
    within(start.elapsed(), 60, "correction")?;
    check(
        failures.is_empty(),
        if failures.is_empty() {
            format!("{} methods x {TRIALS} trials all feasible in {:.1}s", methods.len(), start.elapsed().as_secs_f64())
        } else {
            failures.join(", ")
        },
    )
}

fn beta_fit_oracle() -> Verdict {
    let b = Bounds::uniform(1, -5.0, 5.0).unwrap();
    let fit = |mean: f64, var: f64| -> BetaFitParams {
        fit_beta_params(&PopulationStats { mean: vec![mean], variance: vec![var] }, &b, DEFAULT_EPSILON)
    };
    let p = fit(0.0, 1.0);
    let exact = (p.alpha[0] - 12.0).abs() < 1e-12 && (p.beta[0] - 12.0).abs() < 1e-12 && !p.fallback_mask[0];
    let low = fit(-5.0, 1.0).m[0] == 0.1;
    let high = fit(5.0, 1.0).m[0] == 0.9;
    let wide = fit(0.0, 25.0);
    let fallback = wide.alpha[0] == 0.0 && wide.fallback_mask[0] && fit(0.0, 0.0).fallback_mask[0];
    check(
        exact && low && high && fallback,
        format!(
            "alpha={} beta={}, eps substitution {low}/{high}, fallback {fallback}",
            p.alpha[0], p.beta[0]
        ),
    )
}

fn exp_confined_limits() -> Verdict {
    let start = Instant::now();
    let (a, b, r_i) = (-5.0, 5.0, 2.0);
    let at_bound = (exp_confined_component(-7.0, a, b, r_i, 0.0) - a).abs() < 1e-12;
    let at_ref = (exp_confined_component(-7.0, a, b, r_i, 1.0) - r_i).abs() < 1e-12;
    let up_bound = (exp_confined_component(7.0, a, b, r_i, 1.0) - b).abs() < 1e-12;
    let up_ref = (exp_confined_component(7.0, a, b, r_i, 0.0) - r_i).abs() < 1e-12;
    let bounds = Bounds::uniform(1, a, b).unwrap();
    let mut rng = RngStream::new(0xE2);
    let mut outside = 0;
    for _ in 0..100_000 {
        let c = exp_confined(&[-9.0], &bounds, &[r_i], &mut rng).unwrap().into_vector().unwrap()[0];
        if !(c > a && c < r_i) {
            outside += 1;
        }
    }
    within(start.elapsed(), 10, "sampling")?;
    check(
        at_bound && at_ref && up_bound && up_ref && outside == 0,
        format!("r=0 -> bound {at_bound}/{up_bound}, r=1 -> reference {at_ref}/{up_ref}, {outside} of 1e5 outside (a, R)"),
    )
}

fn vector_oracle() -> Verdict {
    let start = Instant::now();
    let b2 = Bounds::uniform(2, -5.0, 5.0).unwrap();
    let out = vector_correct(&[10.0, 2.0], &[0.0, 0.0], &b2).unwrap();
    let c = out.corrected_vector().unwrap();
    let exact = (c[0] - 5.0).abs() < 1e-12 && (c[1] - 1.0).abs() < 1e-12 && out.vector_alpha == Some(0.5);

    const N: usize = 10;
    let bounds = Bounds::uniform(N, -5.0, 5.0).unwrap();
    let mut rng = RngStream::new(0xC0);
    let mut worst: f64 = 1.0;
    let mut done = 0;
    while done < 100_000 {
        let x = random_vec(&mut rng, N, -5.0, 5.0);
        let y = random_vec(&mut rng, N, -15.0, 15.0);
        if bounds.contains(&y) {
            continue;
        }
        let c = vector_correct(&y, &x, &bounds).unwrap().into_vector().unwrap();
        let d1: Vec<f64> = y.iter().zip(&x).map(|(p, q)| p - q).collect();
        let d2: Vec<f64> = c.iter().zip(&x).map(|(p, q)| p - q).collect();
        let cos = bchmlab::analysis::cosine_similarity(&d1, &d2).unwrap();
        worst = worst.min(cos);
        done += 1;
    }
    within(start.elapsed(), 30, "sampling")?;
    check(exact && worst >= 1.0 - 1e-9, format!("c=({}, {}), alpha=0.5: {exact}; min cosine over 1e5 pairs {worst}", c[0], c[1]))
}

fn engine_convergence() -> Verdict {
    let start = Instant::now();
    let sphere: Arc<dyn Objective> =
        Arc::new(BenchmarkProblem::with_optimum(FunctionId::Sphere, Mode::Sbox, vec![0.0; 10], 0.0).unwrap());
    let classic: Vec<f64> = map_indexed(5, Execution::Parallel { threads: 0 }, |s| {
        let cfg = RunConfig::new(
            sphere.clone(),
            EngineConfig::Classic(ClassicDEParams::default()),
            BchmChoice::Fixed(Method::Saturation),
            s as u64 + 1,
        );
        run(&cfg).unwrap().final_best_error
    });
    let ellipsoid: Arc<dyn Objective> =
        Arc::new(BenchmarkProblem::make_instance(FunctionId::SeparableEllipsoid, 1, 10, Mode::BbobLike).unwrap());
    let lshade: Vec<f64> = map_indexed(5, Execution::Parallel { threads: 0 }, |s| {
        let cfg = RunConfig::new(
            ellipsoid.clone(),
            EngineConfig::Lshade(ShadeParams::default()),
            BchmChoice::Fixed(Method::Saturation),
            s as u64 + 1,
        );
        run(&cfg).unwrap().final_best_error
    });
    let (mc, ml) = (median(classic), median(lshade));
    within(start.elapsed(), 300, "runs")?;
    check(mc < 1e-8 && ml < 1e-6, format!("classic/sphere median {mc:.3e} (< 1e-8), lshade/ellipsoid median {ml:.3e} (< 1e-6)"))
}

fn lpsr_schedule() -> Verdict {
    let n = 10;
    let problem: Arc<dyn Objective> =
        Arc::new(BenchmarkProblem::make_instance(FunctionId::Sphere, 1, n, Mode::Sbox).unwrap());
    let cfg = RunConfig::new(problem, EngineConfig::Lshade(ShadeParams::default()), BchmChoice::Fixed(Method::Saturation), 7);
    let r = run(&cfg).map_err(|e| e.to_string())?;
    let recs = &r.trajectory.records;
    let sizes: Vec<usize> = recs.iter().map(|r| r.population_size).collect();
    let monotone = sizes.windows(2).all(|w| w[1] <= w[0]);
    let half = cfg.budget / 2;
    let at_half = recs
        .iter()
        .min_by_key(|r| r.feasible_evaluations.abs_diff(half))
        .map(|r| r.population_size)
        .unwrap_or(0);
    let expected = ((18 * n) as f64 - ((18 * n) as f64 - 4.0) / 2.0).round() as usize;
    debug_assert_eq!(expected, lpsr_target_size(18 * n, 4, half, cfg.budget));
    let (first, last) = (sizes[0], *sizes.last().unwrap());
    check(
        monotone && first == 18 * n && last == 4 && at_half.abs_diff(expected) <= 1,
        format!("non-increasing {monotone}, start {first}, end {last}, at half budget {at_half} (expected {expected} +- 1)"),
    )
}

fn violation_pattern() -> Verdict {
    let start = Instant::now();
    let n = 20;
    let mean_ratio = |x_star: f64| -> f64 {
        let problem: Arc<dyn Objective> =
            Arc::new(BenchmarkProblem::with_optimum(FunctionId::Sphere, Mode::Sbox, vec![x_star; n], 0.0).unwrap());
        let per_seed = map_indexed(5, Execution::Parallel { threads: 0 }, |s| {
            let mut cfg = RunConfig::new(
                problem.clone(),
                EngineConfig::Lshade(ShadeParams::default()),
                BchmChoice::Fixed(Method::Dismiss),
                100 + s as u64,
            );
            cfg.max_generations = Some(50);
            let r = run(&cfg).unwrap();
            let gens: Vec<f64> = r
                .trajectory
                .records
                .iter()
                .filter(|g| (1..=50).contains(&g.generation))
                .map(|g| g.infeasible_component_ratio)
                .collect();
            gens.iter().sum::<f64>() / gens.len() as f64
        });
        per_seed.iter().sum::<f64>() / per_seed.len() as f64
    };
    let near = mean_ratio(4.99);
    let centred = mean_ratio(0.0);
    within(start.elapsed(), 300, "runs")?;
    let factor = near / centred;
    check(factor >= 5.0, format!("near-bound {near:.4}, centred {centred:.4}, factor {factor:.2} (>= 5)"))
}

fn classifier_table() -> Verdict {
    let cfg = ClassifierConfig::default();
    let got = [classify(1e-8, 1e-9, &cfg), classify(1e-8, 1e-3, &cfg), classify(1.0, 1e-9, &cfg), classify(1.0, 1.0, &cfg)];
    let want = [
        BehaviourClass::GoodBehaviour,
        BehaviourClass::SolutionFound,
        BehaviourClass::PrematureConvergence,
        BehaviourClass::BadBehaviour,
    ];
    check(got == want, got.iter().map(|c| c.code()).collect::<Vec<_>>().join("/"))
}

fn clustering_oracle() -> Verdict {
    let sim = SimilarityMatrix::new(
        vec!["A".into(), "B".into(), "C".into()],
        vec![vec![1.0, 0.9, 0.1], vec![0.9, 1.0, 0.2], vec![0.1, 0.2, 1.0]],
    )
    .unwrap();
    let d = complete_linkage_cluster(&sim).map_err(|e| e.to_string())?;
    let hand = d.merges.len() == 2
        && (d.merges[0].left, d.merges[0].right) == (0, 1)
        && (d.merges[0].height - 0.1).abs() < 1e-12
        && (d.merges[1].left, d.merges[1].right) == (3, 2)
        && (d.merges[1].height - 0.9).abs() < 1e-12;

    // three groups of four rows around orthogonal directions
    let g = 60;
    let mut rng = RngStream::new(0xC1);
    let mut labels = Vec::new();
    let mut rows = Vec::new();
    for grp in 0..3 {
        for k in 0..4 {
            let row: Vec<f64> =
                (0..g).map(|i| if i / 20 == grp { 1.0 + 0.05 * rng.unit() } else { 0.02 * rng.unit() }).collect();
            labels.push(format!("g{grp}_{k}"));
            rows.push(row);
        }
    }
    let m = TrajectoryMatrix::new(Metric::ViolationProbability, labels, rows).unwrap();
    let s = similarity_matrix(&m, Execution::Sequential).unwrap();
    let mut within_min: f64 = 1.0;
    let mut across_max: f64 = -1.0;
    for i in 0..12 {
        for j in 0..12 {
            if i / 4 == j / 4 {
                within_min = within_min.min(s.values[i][j]);
            } else {
                across_max = across_max.max(s.values[i][j]);
            }
        }
    }
    let d = complete_linkage_cluster(&s).unwrap();
    let recovered = [0.011, 0.1, 0.25, 0.49].iter().all(|&t| {
        let cut = d.cut(t);
        cut.len() == 3 && cut.iter().all(|c| c.len() == 4 && c.iter().all(|l| l[..2] == c[0][..2]))
    });
    check(
        hand && within_min >= 0.99 && across_max <= 0.5 && recovered,
        format!("hand dendrogram {hand}; synthetic groups within >= {within_min:.4}, across <= {across_max:.4}, recovered {recovered}"),
    )
}

fn beta_moments() -> Verdict {
    let b = Bounds::uniform(1, -5.0, 5.0).unwrap();
    let p = fit_beta_params(&PopulationStats { mean: vec![0.0], variance: vec![1.0] }, &b, DEFAULT_EPSILON);
    let mut rng = RngStream::new(0xB7);
    let n = 100_000;
    let xs: Vec<f64> =
        (0..n).map(|_| bchmlab::bchm::beta_correct(&[9.0], &b, &p, &mut rng).into_vector().unwrap()[0]).collect();
    let mean = xs.iter().sum::<f64>() / n as f64;
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n as f64;
    check(mean.abs() <= 0.05 && (var - 1.0).abs() <= 0.1, format!("mean {mean:.4} (0 +- 0.05), variance {var:.4} (1 +- 10%)"))
}

fn csv_tree(dir: &Path) -> BTreeMap<String, Vec<u8>> {
    fn walk(base: &Path, dir: &Path, out: &mut BTreeMap<String, Vec<u8>>) {
        for e in std::fs::read_dir(dir).unwrap() {
            let p = e.unwrap().path();
            if p.is_dir() {
                walk(base, &p, out);
            } else if p.extension().is_some_and(|x| x == "csv") {
                out.insert(p.strip_prefix(base).unwrap().display().to_string(), std::fs::read(&p).unwrap());
            }
        }
    }
    let mut out = BTreeMap::new();
    walk(dir, dir, &mut out);
    out
}

fn sweep_determinism() -> Verdict {
    let tmp = tempfile::tempdir().map_err(|e| e.to_string())?;
    let make = |workers: usize| -> Result<BTreeMap<String, Vec<u8>>, String> {
        let out = tmp.path().join(format!("p{workers}"));
        let cfg = SweepConfig {
            functions: vec!["sphere".into(), "rastrigin".into()],
            instances: vec![1, 2],
            dimensions: vec![3],
            modes: vec![Mode::Sbox],
            engines: vec![EngineKind::Lshade],
            bchms: vec![BchmChoice::Fixed(Method::Saturation), BchmChoice::Adaptive],
            runs_per_cell: 1,
            budget_multiplier: 500,
            base_seed: 2024,
            output_directory: out.clone(),
            parallelism: workers,
            placement: OptimumPlacement::Instance,
            ..SweepConfig::default()
        };
        run_sweep(&cfg, &Default::default()).map_err(|e| e.to_string())?;
        Ok(csv_tree(&out))
    };
    let one = make(1)?;
    let eight = make(8)?;
    check(
        one.len() == 8 && one == eight,
        format!("{} CSV files with parallelism 1, {} with 8, identical: {}", one.len(), eight.len(), one == eight),
    )
}

/// Rewards a trial only if it differs from every point seen so far in at
/// least two coordinates. With CR = 0 a trial differs from its target in one
/// coordinate, and every component-wise repair keeps it that way; only a
/// vector-wise pull towards the population best moves the whole vector.
struct NoveltyStub {
    bounds: Bounds,
    seen: Mutex<Vec<Vec<f64>>>,
    calls: AtomicU64,
}

impl Objective for NoveltyStub {
    fn name(&self) -> &str {
        "novelty_stub"
    }

    fn bounds(&self) -> &Bounds {
        &self.bounds
    }

    fn evaluate(&self, x: &[f64]) -> f64 {
        let calls = self.calls.fetch_add(1, Ordering::SeqCst) as f64 + 1.0;
        let mut seen = self.seen.lock().unwrap();
        let novel = seen.iter().all(|p| p.iter().zip(x).filter(|(a, b)| a != b).count() >= 2);
        seen.push(x.to_vec());
        if novel {
            -calls
        } else {
            calls
        }
    }
}

fn adaptive_sanity() -> Verdict {
    let start = Instant::now();
    let stub = Arc::new(NoveltyStub {
        bounds: Bounds::uniform(5, -5.0, 5.0).unwrap(),
        seen: Mutex::new(Vec::new()),
        calls: AtomicU64::new(0),
    });
    let mut cfg = RunConfig::new(
        stub,
        EngineConfig::Classic(ClassicDEParams { population_size: 20, scale_factor: 1.0, crossover_rate: 0.0 }),
        BchmChoice::Adaptive,
        12,
    );
    cfg.max_generations = Some(100);
    let r = run(&cfg).map_err(|e| e.to_string())?;
    let probs = r.final_adaptive_probabilities.ok_or("no adaptive state")?;
    within(start.elapsed(), 60, "run")?;
    // pool order: vectorBest first
    let floor_ok = probs[1..].iter().all(|&p| p >= 0.05 - 1e-12);
    check(probs[0] > 0.5 && floor_ok, format!("probabilities after 4 periods {probs:.3?}"))
}

type Criterion = (&'static str, fn() -> Verdict);

fn main() {
    let criteria: Vec<Criterion> = vec![
        ("correction feasibility", correction_feasibility),
        ("beta shape oracle", beta_fit_oracle),
        ("exponential confinement limits", exp_confined_limits),
        ("vector correction oracle", vector_oracle),
        ("engine convergence", engine_convergence),
        ("population size schedule", lpsr_schedule),
        ("violation pattern near the bound", violation_pattern),
        ("classifier truth table", classifier_table),
        ("clustering oracle", clustering_oracle),
        ("beta moment preservation", beta_moments),
        ("sweep determinism", sweep_determinism),
        ("adaptive selection sanity", adaptive_sanity),
    ];
    let mut failed = 0;
    for (k, (name, f)) in criteria.iter().enumerate() {
        let t = Instant::now();
        let verdict = std::panic::catch_unwind(f).unwrap_or_else(|_| Err("panicked".into()));
        let secs = t.elapsed().as_secs_f64();
        match verdict {
            Ok(msg) => println!("PASS {:>2} {name}: {msg} [{secs:.1}s]", k + 1),
            Err(msg) => {
                failed += 1;
                println!("FAIL {:>2} {name}: {msg} [{secs:.1}s]", k + 1);
            }
        }
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
