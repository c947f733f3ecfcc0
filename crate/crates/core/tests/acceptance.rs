//! One PASS/FAIL line per acceptance criterion. Criterion 7 runs the full
//! synthetic pipeline for five seeds and takes several minutes.

use std::fs;
use std::path::Path;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use swarmcnn::experiment::{self, ExperimentConfig};
use swarmcnn::metrics::{class_metrics, f1_score, numbered_classes, ConfusionMatrix};
use swarmcnn::objective::{Benchmark, BenchmarkKind};
use swarmcnn::space::{ParamKind, ParamSpec, Position, SearchSpace};
use swarmcnn::swarm::{
    decay_schedule, pso_velocity_update, woa_position_update, Pso, PsoConfig, TraceTable, Woa,
    WoaCoefficients, WoaConfig,
};
use swarmcnn::tinycnn::{ppm, Architecture, CnnModel, Tensor};
use swarmcnn::Error;

type Criterion = (&'static str, fn() -> Outcome);

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome { pass, detail: detail.into() }
}

fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol
}

fn pos(v: &[f64]) -> Position<f64> {
    Position::new(v.to_vec())
}

fn criterion_1() -> Outcome {
    let mut failures: Vec<String> = Vec::new();
    let check = |failures: &mut Vec<String>, name: &str, got: f64, want: f64| {
        if !close(got, want, 1e-12) {
            failures.push(format!("{name}: got {got}, want {want}"));
        }
    };

    let x = [1.5, -2.0];
    let v = pso_velocity_update(&[0.0, 0.0], &pos(&x), &pos(&x), &pos(&x), 0.729, 1.49445, 1.49445, 0.3, 0.8)
        .unwrap();
    check(&mut failures, "pso fixed point[0]", v[0], 0.0);
    check(&mut failures, "pso fixed point[1]", v[1], 0.0);
    let v = pso_velocity_update(&[2.0], &pos(&[0.0]), &pos(&[4.0]), &pos(&[8.0]), 0.5, 1.0, 1.0, 0.5, 0.5)
        .unwrap();
    check(&mut failures, "pso substitution", v[0], 7.0);
    let v = pso_velocity_update(
        &[3.0, -1.0],
        &pos(&[1.0, 1.0]),
        &pos(&[9.0, 9.0]),
        &pos(&[-4.0, 2.0]),
        0.7,
        2.0,
        2.0,
        0.0,
        0.0,
    )
    .unwrap();
    check(&mut failures, "pso pure inertia[0]", v[0], 0.7 * 3.0);
    check(&mut failures, "pso pure inertia[1]", v[1], -0.7);

    check(&mut failures, "a(0)", decay_schedule::<f64>(0, 10), 2.0);
    check(&mut failures, "a(final)", decay_schedule::<f64>(9, 10), 0.0);
    if decay_schedule::<f64>(0, 10) != 2.0 || decay_schedule::<f64>(9, 10) != 0.0 {
        failures.push("schedule endpoints are not exact".into());
    }
    check(&mut failures, "A at a=2, r1=1", WoaCoefficients::from_draws(2.0, 1.0, 0.0, 0.0, 0.0).big_a, 2.0);
    check(&mut failures, "A at a=0", WoaCoefficients::from_draws(0.0, 0.83, 0.1, 0.0, 0.0).big_a, 0.0);
    check(&mut failures, "A at r1=0.5", WoaCoefficients::from_draws(1.37, 0.5, 0.1, 0.0, 0.0).big_a, 0.0);

    let zero_step = WoaCoefficients { a: 0.0, big_a: 0.0, big_c: 1.3, l: 0.0, switch: 0.2 };
    let x = woa_position_update(&pos(&[3.0, -1.0]), &pos(&[5.0, 2.0]), &pos(&[0.0, 0.0]), &zero_step, 1.0)
        .unwrap();
    check(&mut failures, "encircle A=0 [0]", x.coords()[0], 5.0);
    check(&mut failures, "encircle A=0 [1]", x.coords()[1], 2.0);
    let enc = WoaCoefficients { a: 1.0, big_a: 0.5, big_c: 1.0, l: 0.0, switch: 0.2 };
    let x = woa_position_update(&pos(&[3.0]), &pos(&[5.0]), &pos(&[0.0]), &enc, 1.0).unwrap();
    check(&mut failures, "encircle substitution", x.coords()[0], 4.0);
    let spiral = WoaCoefficients { a: 1.0, big_a: 0.5, big_c: 1.0, l: 0.0, switch: 0.7 };
    let x = woa_position_update(&pos(&[3.0]), &pos(&[5.0]), &pos(&[0.0]), &spiral, 1.0).unwrap();
    check(&mut failures, "spiral substitution", x.coords()[0], 7.0);

    if failures.is_empty() {
        outcome(true, "all hand substitutions within 1e-12; a(0)=2 and a(final)=0 exactly")
    } else {
        outcome(false, failures.join("; "))
    }
}

fn criterion_2() -> Outcome {
    let arch =
        Architecture { height: 8, width: 8, channels: 1, num_filters: 2, dense_units: 3, num_classes: 3 };
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut model = CnnModel::<f64>::he_normal(arch, 0.0, &mut rng).unwrap();
    // Non-zero biases so the check also covers bias paths away from zero.
    for t in [1usize, 3, 5] {
        for v in model.params_mut().tensors_mut()[t].data_mut() {
            *v = rng.random_range(-0.1..0.1);
        }
    }
    let batch = Tensor::from_fn(vec![3, 8, 8, 1], || rng.random::<f64>());
    let labels = [0usize, 2, 1];
    let (_, grads) = model.loss_and_grads(&batch, &labels, false, &mut rng).unwrap();

    let h = 1e-5;
    let mut worst = 0.0f64;
    let mut worst_at = String::new();
    let mut checked = 0;
    for t in 0..6 {
        for j in 0..model.params().tensors()[t].len() {
            let orig = model.params().tensors()[t].data()[j];
            model.params_mut().tensors_mut()[t].data_mut()[j] = orig + h;
            let up = model.loss(&batch, &labels, false, &mut rng).unwrap();
            model.params_mut().tensors_mut()[t].data_mut()[j] = orig - h;
            let down = model.loss(&batch, &labels, false, &mut rng).unwrap();
            model.params_mut().tensors_mut()[t].data_mut()[j] = orig;
            let numeric = (up - down) / (2.0 * h);
            let analytic = grads.tensors()[t].data()[j];
            // Floor keeps exact-zero gradients (dead units) from dividing by zero.
            let rel = (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(1e-7);
            if rel > worst {
                worst = rel;
                worst_at = format!("{}[{j}]", swarmcnn::tinycnn::Params::<f64>::NAMES[t]);
            }
            checked += 1;
        }
    }
    outcome(worst <= 1e-4, format!("{checked} parameters, worst relative error {worst:.3e} at {worst_at}"))
}

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

fn random_search(space: &SearchSpace<f64>, kind: BenchmarkKind, budget: usize, seed: u64) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..budget)
        .map(|_| swarmcnn::objective::benchmark_eval(kind, space.sample(&mut rng).coords()))
        .fold(f64::INFINITY, f64::min)
}

fn criterion_3() -> Outcome {
    let sphere_space = SearchSpace::uniform_box(4, -5.0, 5.0).unwrap();
    let rastrigin_space = SearchSpace::uniform_box(4, -5.12, 5.12).unwrap();
    let sphere = Benchmark::new(BenchmarkKind::Sphere);
    let rastrigin = Benchmark::new(BenchmarkKind::Rastrigin);

    let mut pso_best = Vec::new();
    let mut pso_random = Vec::new();
    let mut woa_best = Vec::new();
    let mut woa_random = Vec::new();
    for seed in 0..20u64 {
        let cfg = PsoConfig { swarm_size: 20, iterations: 100, seed, ..PsoConfig::default() };
        let budget = cfg.evaluation_budget();
        pso_best.push(Pso::new(cfg).unwrap().run(&sphere_space, &sphere).unwrap().best_fitness);
        pso_random.push(random_search(&sphere_space, BenchmarkKind::Sphere, budget, 1000 + seed));

        let cfg = WoaConfig { population_size: 20, iterations: 200, seed, ..WoaConfig::default() };
        let budget = cfg.evaluation_budget();
        woa_best.push(Woa::new(cfg).unwrap().run(&rastrigin_space, &rastrigin).unwrap().best_fitness);
        woa_random.push(random_search(&rastrigin_space, BenchmarkKind::Rastrigin, budget, 2000 + seed));
    }
    let pso_hits = pso_best.iter().filter(|&&f| f < 1e-3).count();
    let (pso_med, pso_rand_med) = (median(pso_best), median(pso_random));
    let (woa_med, woa_rand_med) = (median(woa_best), median(woa_random));
    let pass = pso_hits >= 19 && woa_med < 1.0 && pso_med < pso_rand_med && woa_med < woa_rand_med;
    outcome(
        pass,
        format!(
            "PSO sphere f<1e-3 in {pso_hits}/20 (median {pso_med:.2e} vs random {pso_rand_med:.2e}); \
             WOA rastrigin median {woa_med:.3e} (random {woa_rand_med:.3})"
        ),
    )
}

fn trace_rows(path: &Path) -> TraceTable {
    TraceTable::parse(std::io::BufReader::new(fs::File::open(path).unwrap()), path).unwrap()
}

fn criterion_4() -> Outcome {
    let dir = tempfile::tempdir().unwrap();
    let mut config: ExperimentConfig<f64> =
        experiment::parse_config_str("[objective]\nkind = sphere\n", Path::new("inline"), dir.path())
            .unwrap();
    config.output_dir = dir.path().to_path_buf();
    experiment::run_experiment(&config).unwrap();
    let pso = trace_rows(&dir.path().join("trace_pso.csv")).rows.len();
    let woa = trace_rows(&dir.path().join("trace_woa.csv")).rows.len();
    outcome(pso == 30 && woa == 55, format!("trace rows: PSO {pso}, WOA {woa}"))
}

fn random_space(rng: &mut ChaCha8Rng) -> SearchSpace<f64> {
    if rng.random_bool(0.3) {
        return SearchSpace::cnn_default();
    }
    let dim = rng.random_range(1..=5);
    let params = (0..dim)
        .map(|i| {
            let lo: f64 = rng.random_range(-50.0..50.0);
            let hi = lo + rng.random_range(0.0..40.0);
            let kind = if rng.random_bool(0.5) { ParamKind::Integer } else { ParamKind::Continuous };
            let (lo, hi) = if kind == ParamKind::Integer { (lo.floor(), hi.ceil()) } else { (lo, hi) };
            ParamSpec::new(format!("p{i}"), kind, lo, hi).unwrap()
        })
        .collect();
    SearchSpace::new(params).unwrap()
}

fn criterion_5() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut problems = Vec::new();
    let mut evaluated = 0;
    for case in 0..100 {
        let space = random_space(&mut rng);
        let kind = [BenchmarkKind::Sphere, BenchmarkKind::Rastrigin, BenchmarkKind::Rosenbrock]
            [rng.random_range(0..3)];
        let objective = Benchmark::new(kind);
        let seed = rng.random();
        let size = rng.random_range(1..=8);
        let iterations = rng.random_range(1..=12);
        let result = if rng.random_bool(0.5) {
            let cfg = PsoConfig {
                swarm_size: size,
                iterations,
                seed,
                per_dimension_random: rng.random_bool(0.5),
                ..PsoConfig::default()
            };
            Pso::new(cfg).unwrap().run(&space, &objective).unwrap()
        } else {
            let cfg = WoaConfig {
                population_size: size,
                iterations,
                seed,
                literal_spiral: rng.random_bool(0.2),
                ..WoaConfig::default()
            };
            Woa::new(cfg).unwrap().run(&space, &objective).unwrap()
        };
        let csv = result.trace.to_csv_string();
        let table = TraceTable::parse(csv.as_bytes(), Path::new("trace")).unwrap();
        if !table.best_is_monotone()
            || table.recomputed_best().iter().zip(&table.rows).any(|(b, r)| *b != r.best_so_far)
        {
            problems.push(format!("case {case}: best_so_far not the running minimum"));
        }
        for rec in result.trace.records() {
            evaluated += 1;
            let in_range = space.params().iter().zip(&rec.candidate).all(|(p, &v)| {
                v >= p.lower() && v <= p.upper() && (p.kind() == ParamKind::Continuous || v.fract() == 0.0)
            });
            if !in_range || space.decode_values(&rec.position).is_err() {
                problems.push(format!("case {case}: evaluation {} out of range", rec.evaluation));
            }
            if space.is_hyperparameter_space() {
                let hp = space.decode(&rec.position).unwrap();
                if !(8..=32).contains(&hp.num_filters)
                    || !(32..=128).contains(&hp.dense_units)
                    || !(0.1..=0.5).contains(&hp.dropout_rate)
                    || !(1e-4..=1e-2).contains(&hp.learning_rate)
                {
                    problems.push(format!("case {case}: hyperparameters {hp:?} out of range"));
                }
            }
        }
    }
    let detail = format!("100 configs, {evaluated} evaluated candidates, {} violations", problems.len());
    outcome(
        problems.is_empty(),
        if problems.is_empty() { detail } else { format!("{detail}: {}", problems[0]) },
    )
}

fn run_in(dir: &Path, text: &str) -> Vec<(String, Vec<u8>)> {
    let mut config: ExperimentConfig<f64> =
        experiment::parse_config_str(text, Path::new("inline"), dir).unwrap();
    config.output_dir = dir.to_path_buf();
    experiment::run_experiment(&config).unwrap();
    let mut files: Vec<(String, Vec<u8>)> = fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.file_name().unwrap() != "run_info.txt")
        .map(|p| (p.file_name().unwrap().to_string_lossy().into_owned(), fs::read(&p).unwrap()))
        .collect();
    files.sort();
    files
}

fn criterion_6() -> Outcome {
    let cnn = "seed = 6\n[pso]\nswarm_size = 3\niterations = 2\n[woa]\npopulation_size = 3\niterations = 2\n\
               [objective]\nkind = cnn\nsynthetic_per_class = 6\nsynthetic_size = 8x8\neval_epochs = 1\n\
               final_epochs = 1\nbatch_size = 8\n";
    let bench = "seed = 7\n[objective]\nkind = rastrigin\n";
    let mut details = Vec::new();
    let mut pass = true;
    for (label, text) in [("cnn", cnn), ("rastrigin", bench)] {
        let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
        let first = run_in(a.path(), text);
        let second = run_in(b.path(), text);
        let traces = first.iter().filter(|(n, _)| n.starts_with("trace_")).count();
        let same = first == second;
        pass &= same && traces == 2;
        details.push(format!("{label}: {} artifacts ({traces} traces) identical={same}", first.len()));
    }
    outcome(pass, details.join("; "))
}

fn criterion_7() -> Outcome {
    let seeds = [1u64, 2, 3, 4, 5];
    let limit = Duration::from_secs(15 * 60);
    let mut pso_ok = 0;
    let mut woa_ok = 0;
    let mut layout_ok = true;
    let mut slowest = Duration::ZERO;
    let mut per_seed = Vec::new();
    for seed in seeds {
        let dir = tempfile::tempdir().unwrap();
        let text = format!(
            "algorithm = both\nseed = {seed}\n[objective]\nkind = cnn\ndataset = synthetic\nsynthetic_classes = 4\n\
             synthetic_per_class = 50\nsynthetic_size = 32x32\neval_epochs = 5\nfinal_epochs = 5\n"
        );
        let mut config: ExperimentConfig<f64> =
            experiment::parse_config_str(&text, Path::new("inline"), dir.path()).unwrap();
        config.output_dir = dir.path().to_path_buf();
        let start = Instant::now();
        let summary = experiment::run_experiment(&config).unwrap();
        let elapsed = start.elapsed();
        slowest = slowest.max(elapsed);
        let acc = |alg: &str| {
            summary.outcomes.iter().find(|o| o.algorithm == alg).unwrap().metrics.as_ref().unwrap().accuracy
        };
        let (p, w) = (acc("pso"), acc("woa"));
        pso_ok += usize::from(p >= 0.90);
        woa_ok += usize::from(w >= 0.90);
        layout_ok &= dir.path().join("comparison.csv").is_file()
            && summary.report.contains("Evaluation Metrics of PSO-CNN")
            && summary.report.contains("Evaluation Metrics of WOA-CNN")
            && summary.report.contains("Best Hyperparameters Values of WOA and PSO");
        per_seed.push(format!("seed {seed}: PSO {p:.3} WOA {w:.3} in {:.0}s", elapsed.as_secs_f64()));
        eprintln!("  criterion 7 {}", per_seed.last().unwrap());
    }
    let pass = pso_ok * 2 > seeds.len() && woa_ok * 2 > seeds.len() && slowest < limit && layout_ok;
    outcome(
        pass,
        format!(
            "accuracy >= 0.90: PSO {pso_ok}/5, WOA {woa_ok}/5; slowest run {:.0}s; report layout {}; [{}]",
            slowest.as_secs_f64(),
            if layout_ok { "ok" } else { "missing" },
            per_seed.join(", ")
        ),
    )
}

/// Definitional precision/recall/F1 by walking every (true, predicted) pair.
fn brute_force(counts: &[Vec<u64>]) -> (Vec<(f64, f64, f64)>, f64) {
    let k = counts.len();
    let mut pairs = Vec::new();
    for (t, row) in counts.iter().enumerate() {
        for (p, &c) in row.iter().enumerate() {
            pairs.extend(std::iter::repeat_n((t, p), c as usize));
        }
    }
    let per_class = (0..k)
        .map(|c| {
            let tp = pairs.iter().filter(|&&(t, p)| t == c && p == c).count() as f64;
            let predicted = pairs.iter().filter(|&&(_, p)| p == c).count() as f64;
            let actual = pairs.iter().filter(|&&(t, _)| t == c).count() as f64;
            let precision = if predicted == 0.0 { 0.0 } else { tp / predicted };
            let recall = if actual == 0.0 { 0.0 } else { tp / actual };
            let f1 =
                if precision + recall == 0.0 { 0.0 } else { 2.0 * precision * recall / (precision + recall) };
            (precision, recall, f1)
        })
        .collect();
    let correct = pairs.iter().filter(|&&(t, p)| t == p).count() as f64;
    (per_class, correct / pairs.len() as f64)
}

fn criterion_8() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let mut worst = 0.0f64;
    let mut tested = 0;
    while tested < 1000 {
        let k = rng.random_range(2..=6);
        let zero_bias = rng.random_bool(0.3);
        let counts: Vec<Vec<u64>> = (0..k)
            .map(|_| {
                (0..k)
                    .map(|_| if zero_bias && rng.random_bool(0.5) { 0 } else { rng.random_range(0..20) })
                    .collect()
            })
            .collect();
        if counts.iter().flatten().sum::<u64>() == 0 {
            continue;
        }
        tested += 1;
        let cm = ConfusionMatrix::from_counts(counts.clone(), numbered_classes(k)).unwrap();
        let m = class_metrics::<f64>(&cm).unwrap();
        let (oracle, acc) = brute_force(&counts);
        worst = worst.max((m.accuracy - acc).abs());
        for (s, (p, r, f)) in m.per_class.iter().zip(oracle) {
            worst = worst.max((s.precision - p).abs()).max((s.recall - r).abs()).max((s.f1 - f).abs());
        }
    }
    let alluvial = format!("{:.2}", f1_score(0.94f64, 0.83));
    outcome(
        worst <= 1e-12 && alluvial == "0.88",
        format!("1000 matrices, max deviation {worst:.1e}; Alluvial F1 {alluvial}"),
    )
}

fn criterion_9() -> Outcome {
    let path = Path::new("pixel.ppm");
    let mut notes = Vec::new();
    let red = ppm::decode_ppm(b"P6\n1 1\n255\n\xff\x00\x00", path).unwrap();
    let pixels: Vec<f64> = ppm::to_unit_pixels(&red, 1, 1);
    let exact = pixels == vec![1.0, 0.0, 0.0];
    notes.push(format!("1-pixel file -> {pixels:?}"));

    let named = |r: swarmcnn::Result<ppm::RgbImage>| match r {
        Err(Error::Parse { path: p, message }) => p == path && !message.is_empty(),
        _ => false,
    };
    let bad_magic = named(ppm::decode_ppm(b"P3\n1 1\n255\n1 0 0", path));
    let truncated = named(ppm::decode_ppm(b"P6\n2 2\n255\n\xff\x00\x00\x00", path));
    let empty = named(ppm::decode_ppm(b"", path));
    notes.push(format!("bad magic named={bad_magic}, truncated named={truncated}, empty named={empty}"));
    outcome(exact && bad_magic && truncated && empty, notes.join("; "))
}

#[test]
fn acceptance() {
    let criteria: [Criterion; 9] = [
        ("update-equation correctness", criterion_1),
        ("gradient oracle", criterion_2),
        ("optimizer convergence", criterion_3),
        ("budget identities", criterion_4),
        ("monotonicity and feasibility", criterion_5),
        ("determinism", criterion_6),
        ("end-to-end synthetic analogue", criterion_7),
        ("metrics oracle", criterion_8),
        ("dataset I/O", criterion_9),
    ];
    let mut failed = Vec::new();
    for (i, (name, run)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let result = run();
        let status = if result.pass { "PASS" } else { "FAIL" };
        println!(
            "criterion {}: {status} {name} ({:.1}s): {}",
            i + 1,
            start.elapsed().as_secs_f64(),
            result.detail
        );
        if !result.pass {
            failed.push(i + 1);
        }
    }
    assert!(failed.is_empty(), "failed criteria: {failed:?}");
}
