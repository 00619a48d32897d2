//! Acceptance suite: one test per criterion, each printing a PASS line
//! (visible with `--nocapture`). Run with
//! `cargo test -p eenas-cli --test acceptance`.

mod oracle;

use eenas_core::cost_model::{architecture_cost, MacroConfig};
use eenas_core::eepi::{initialize_population, EarlyExitConfig};
use eenas_core::evaluators::{SurrogateEvaluator, TabularBenchmark};
use eenas_core::evolution::engine::{Engine, GenerationRecord, SearchParams};
use eenas_core::evolution::{
    crossover_with, mutate, mutate_at, non_dominated_sort, ObjectiveVector,
};
use eenas_core::metrics::hypervolume;
use eenas_core::rng::{derive_rng, stream};
use eenas_core::search_space::{
    previous_index, random_genotype, Gene, GeneSource, Genotype, SpaceKind,
};
use rand::Rng;
use std::path::Path;
use std::process::Command;
use std::time::Instant;

fn pass(criterion: usize, name: &str, started: Instant) {
    println!(
        "ACCEPTANCE {criterion} {name}: PASS ({:.2}s)",
        started.elapsed().as_secs_f64()
    );
}

// -------------------------------------------------------------------------
// 1. Encoding fixtures: worked connectivity, crossover, and mutation
//    examples reproduce exactly.
// -------------------------------------------------------------------------
#[test]
fn acceptance_1_encoding_fixtures() {
    let started = Instant::now();

    // previous-index rule
    assert_eq!(previous_index(2).unwrap(), 0);
    assert_eq!(previous_index(3).unwrap(), 1);
    assert!(previous_index(0).is_err());

    // gene pair 12-02: both genes carry index 2 and read block 0
    assert_eq!(Gene::new(1, 2).source(), Some(GeneSource::Block(0)));
    assert_eq!(Gene::new(0, 2).source(), Some(GeneSource::Block(0)));
    // gene pair 63-73: index 3 reads block 1
    assert_eq!(Gene::new(6, 3).source(), Some(GeneSource::Block(1)));
    assert_eq!(Gene::new(7, 3).source(), Some(GeneSource::Block(1)));
    // mixed pair 63-72: operator 6 from block 1, operator 7 from block 0
    assert_eq!(Gene::new(6, 3).source(), Some(GeneSource::Block(1)));
    assert_eq!(Gene::new(7, 2).source(), Some(GeneSource::Block(0)));

    // worked crossover: stated per-component coin sequence reproduces the
    // child exactly (true = take the component from parent 1)
    let p1 = Genotype::parse("40-30-61-31-00-60-42-13").unwrap();
    let p2 = Genotype::parse("40-30-21-61-22-72-53-11").unwrap();
    let picks_per_cell = [
        (true, true),
        (true, true),
        (true, true),
        (false, true),
        (true, false),
        (false, false),
        (false, true),
        (true, true),
    ];
    let mut coins: Vec<bool> = Vec::new();
    for _ in 0..2 {
        for (op, index) in picks_per_cell {
            coins.push(op);
            coins.push(index);
        }
    }
    let mut feed = coins.into_iter();
    let child = crossover_with(&p1, &p2, || feed.next().unwrap()).unwrap();
    let child_cell_text = match &child {
        Genotype::CellBased { normal, .. } => normal
            .genes
            .iter()
            .map(|g| format!("{}{}", g.op, g.index))
            .collect::<Vec<_>>()
            .join("-"),
        _ => unreachable!(),
    };
    assert_eq!(child_cell_text, "40-30-61-61-02-72-52-13");
    assert!(child.is_valid());

    // worked mutation: the pair (7,2) is replaced by (3,3), everything
    // else untouched
    let g = Genotype::parse("40-30-61-31-00-60-72-13").unwrap();
    assert_eq!(g.gene_at(6), Some(Gene::new(7, 2)));
    let mutated = mutate_at(&g, 6, Gene::new(3, 3)).unwrap();
    assert_eq!(mutated.gene_at(6), Some(Gene::new(3, 3)));
    let diffs = (0..16).filter(|&p| g.gene_at(p) != mutated.gene_at(p)).count();
    assert_eq!(diffs, 1);
    assert!(mutated.is_valid());

    // stochastic mutation replaces at most one pair, always validly
    let mut rng = derive_rng(1, 0, 0, 0);
    for _ in 0..300 {
        let g = random_genotype(&mut rng, SpaceKind::CellBased);
        let m = mutate(&g, &mut rng, 1.0);
        let diffs = (0..16).filter(|&p| g.gene_at(p) != m.gene_at(p)).count();
        assert!(diffs <= 1);
        assert!(m.is_valid());
    }

    assert!(started.elapsed().as_secs_f64() < 1.0, "criterion 1 exceeded 1 s");
    pass(1, "encoding fixtures", started);
}

// -------------------------------------------------------------------------
// 2. EE-PI invariant: every member of 1,000 seeded initializations with a
//    feasible budget satisfies params <= beta; beta = 0 passes raw samples
//    through unmodified.
// -------------------------------------------------------------------------
#[test]
fn acceptance_2_eepi_invariant() {
    let started = Instant::now();
    let macro_cfg = MacroConfig::default();
    let floor = architecture_cost(&Genotype::floor_of(SpaceKind::CellBased), &macro_cfg)
        .unwrap()
        .params_m();
    let n = 20;
    let mut beta_rng = derive_rng(2, 0, 0, 0);
    for seed in 0..1000u64 {
        let beta = beta_rng.gen_range((floor + 1.0)..8.0);
        let cfg = EarlyExitConfig::new(beta, macro_cfg);
        let population =
            initialize_population(n, &cfg, SpaceKind::CellBased, seed, stream::INIT_P).unwrap();
        assert_eq!(population.members.len(), n);
        for member in &population.members {
            assert!(
                member.measured_params <= beta,
                "seed {seed}: {} M > beta {beta} M",
                member.measured_params
            );
        }
    }

    // disabled sentinel: the first n raw samples come back unchanged
    for seed in [3u64, 99, 12345] {
        let cfg = EarlyExitConfig::new(0.0, macro_cfg);
        let population =
            initialize_population(n, &cfg, SpaceKind::CellBased, seed, stream::INIT_P).unwrap();
        for (slot, member) in population.members.iter().enumerate() {
            let mut rng = derive_rng(seed, stream::INIT_P, 0, slot as u64);
            assert_eq!(member.genotype, random_genotype(&mut rng, SpaceKind::CellBased));
        }
    }

    assert!(started.elapsed().as_secs_f64() < 10.0, "criterion 2 exceeded 10 s");
    pass(2, "EE-PI budget invariant", started);
}

// -------------------------------------------------------------------------
// 3. Sorting oracle: fast non-dominated sort equals brute-force dominance
//    filtering on 100 random populations.
// -------------------------------------------------------------------------
#[test]
fn acceptance_3_sorting_oracle() {
    let started = Instant::now();
    for trial in 0..100u64 {
        let mut rng = derive_rng(3, 0, trial, 0);
        let n = rng.gen_range(1..=64);
        let objectives: Vec<ObjectiveVector> = (0..n)
            .map(|_| ObjectiveVector {
                error: rng.gen_range(0.0..1.0),
                flops: rng.gen_range(0.0..500.0),
                params: rng.gen_range(0.0..10.0),
            })
            .collect();
        assert_eq!(
            non_dominated_sort(&objectives),
            oracle::brute_force_fronts(&objectives),
            "trial {trial}"
        );
    }
    assert!(started.elapsed().as_secs_f64() < 5.0, "criterion 3 exceeded 5 s");
    pass(3, "non-dominated sorting oracle", started);
}

// -------------------------------------------------------------------------
// 4. Hypervolume oracle: exact HV within 1% of the reference-box volume
//    of a 1e6-sample Monte-Carlo estimate on 100 random non-dominated
//    fronts; trivial boxes exact.
// -------------------------------------------------------------------------
#[test]
fn acceptance_4_hypervolume_oracle() {
    let started = Instant::now();

    // trivial boxes
    assert!((hypervolume(&[vec![0.5, 0.5]], &[1.0, 1.0]) - 0.25).abs() < 1e-15);
    assert!((hypervolume(&[vec![0.0, 0.0, 0.0]], &[1.0, 1.0, 1.0]) - 1.0).abs() < 1e-15);

    for trial in 0..100u64 {
        let mut rng = derive_rng(4, 0, trial, 0);
        let reference = [
            rng.gen_range(0.5..2.0),
            rng.gen_range(0.5..2.0),
            rng.gen_range(0.5..2.0),
        ];
        let raw_count = rng.gen_range(1..=80);
        let raw: Vec<[f64; 3]> = (0..raw_count)
            .map(|_| {
                [
                    rng.gen_range(0.0..reference[0]),
                    rng.gen_range(0.0..reference[1]),
                    rng.gen_range(0.0..reference[2]),
                ]
            })
            .collect();
        // keep the non-dominated subset (off-front points are no-ops for
        // both routes); cap at 50
        let objectives: Vec<ObjectiveVector> = raw
            .iter()
            .map(|p| ObjectiveVector { error: p[0] / 2.0, flops: p[1], params: p[2] })
            .collect();
        let front_index = eenas_core::metrics::pareto_front(&objectives);
        let front: Vec<[f64; 3]> =
            front_index.iter().take(50).map(|&i| raw[i]).collect();

        let points: Vec<Vec<f64>> = front.iter().map(|p| p.to_vec()).collect();
        let exact = hypervolume(&points, &reference);
        let mc = oracle::mc_hypervolume(&front, &reference, 1_000_000, &mut rng);
        let box_volume: f64 = reference.iter().product();
        assert!(
            (exact - mc).abs() <= 0.01 * box_volume,
            "trial {trial}: exact {exact} vs mc {mc} (box {box_volume})"
        );
    }
    assert!(started.elapsed().as_secs_f64() < 60.0, "criterion 4 exceeded 60 s");
    pass(4, "hypervolume Monte-Carlo oracle", started);
}

// -------------------------------------------------------------------------
// 5. Cost-model oracle: analytic costs equal the per-tensor enumeration
//    exactly on 50 random genotypes under 3 macro configurations.
// -------------------------------------------------------------------------
#[test]
fn acceptance_5_cost_model_oracle() {
    let started = Instant::now();
    let macros = [
        MacroConfig::default(),
        MacroConfig {
            total_cells: 6,
            init_channels: 16,
            input_resolution: 32,
            inv_res_expansion: 6,
            num_classes: 10,
        },
        MacroConfig {
            total_cells: 9,
            init_channels: 24,
            input_resolution: 64,
            inv_res_expansion: 16,
            num_classes: 100,
        },
    ];
    let mut rng = derive_rng(5, 0, 0, 0);
    for index in 0..50 {
        let space = if index < 35 { SpaceKind::CellBased } else { SpaceKind::Nb201 };
        let genotype = random_genotype(&mut rng, space);
        for (m, macro_cfg) in macros.iter().enumerate() {
            let report = architecture_cost(&genotype, macro_cfg).unwrap();
            let (params, macs) = oracle::cost_oracle(&genotype, macro_cfg);
            assert_eq!(
                report.params, params,
                "genotype {index} macro {m}: params {} != oracle {params}",
                report.params
            );
            assert_eq!(
                report.flops, macs,
                "genotype {index} macro {m}: flops {} != oracle {macs}",
                report.flops
            );
        }
    }
    assert!(started.elapsed().as_secs_f64() < 5.0, "criterion 5 exceeded 5 s");
    pass(5, "cost-model tensor oracle", started);
}

// -------------------------------------------------------------------------
// 6. Elitist monotonicity: with the deterministic surrogate, the
//    normalized front-0 hypervolume series never decreases, in each of 20
//    seeded runs (G = 10, n = 40).
// -------------------------------------------------------------------------
#[test]
fn acceptance_6_hv_monotonicity() {
    let started = Instant::now();
    for seed in 0..20u64 {
        let mut params = SearchParams::defaults(SpaceKind::CellBased);
        params.generations = 10;
        params.population = 40;
        params.seed = seed;
        let mut engine = Engine::new(params.clone()).unwrap();
        let mut evaluator = SurrogateEvaluator::new(params.macro_cfg);
        let records = engine.run(&mut evaluator, |_| Ok(())).unwrap();
        assert_eq!(records.len(), 10);
        for pair in records.windows(2) {
            assert!(
                pair[1].hv >= pair[0].hv - 1e-9,
                "seed {seed}: hv dropped {} -> {}",
                pair[0].hv,
                pair[1].hv
            );
        }
        assert!(records.iter().all(|r| (0.0..=1.0).contains(&r.hv)));
    }
    assert!(started.elapsed().as_secs_f64() < 60.0, "criterion 6 exceeded 60 s");
    pass(6, "elitist hypervolume monotonicity", started);
}

// -------------------------------------------------------------------------
// 7. Search-cost direction: with surrogate cost proportional to params,
//    the budgeted first generation costs strictly less than the
//    unconstrained one (sign test over 20 seeds, p < 0.05).
// -------------------------------------------------------------------------
#[test]
fn acceptance_7_search_cost_direction() {
    let started = Instant::now();
    let generation_one_cost = |seed: u64, beta: f64| -> f64 {
        let mut params = SearchParams::defaults(SpaceKind::CellBased);
        params.generations = 1;
        params.population = 40;
        params.seed = seed;
        params.beta = beta;
        let mut engine = Engine::new(params.clone()).unwrap();
        let mut evaluator = SurrogateEvaluator::new(params.macro_cfg);
        let records = engine.run(&mut evaluator, |_| Ok(())).unwrap();
        records[0].cost_units
    };
    let seeds = 20u64;
    let mut wins = 0u64;
    for seed in 0..seeds {
        if generation_one_cost(seed, 3.0) < generation_one_cost(seed, 0.0) {
            wins += 1;
        }
    }
    // exact one-sided binomial tail under p = 1/2
    let tail_probability = |n: u64, k: u64| -> f64 {
        let mut total = 0.0;
        for i in k..=n {
            let mut choose = 1.0f64;
            for j in 0..i {
                choose = choose * (n - j) as f64 / (j + 1) as f64;
            }
            total += choose * 0.5f64.powi(n as i32);
        }
        total
    };
    let p = tail_probability(seeds, wins);
    assert!(
        p < 0.05,
        "budgeted init cheaper in only {wins}/{seeds} seeds (sign test p = {p:.4})"
    );
    assert!(started.elapsed().as_secs_f64() < 30.0, "criterion 7 exceeded 30 s");
    pass(7, "search-cost direction (sign test)", started);
}

// -------------------------------------------------------------------------
// 8. NB201 protocol: benchgen emits exactly 15,625 entries; a full search
//    with the vector-space settings (G = 10, n = 100, mutation 0.1,
//    tournament 10, beta a configured fraction of the synthetic params
//    range) runs deterministically and its final front exists in the
//    table.
// -------------------------------------------------------------------------
#[test]
fn acceptance_8_nb201_protocol() {
    let started = Instant::now();
    let dir = tempfile::tempdir().unwrap();
    let table_path = dir.path().join("bench.jsonl");
    let out = Command::new(env!("CARGO_BIN_EXE_eenas"))
        .args(["benchgen", "--seed", "5", "--out"])
        .arg(&table_path)
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let line_count = std::fs::read_to_string(&table_path).unwrap().lines().count();
    assert_eq!(line_count, 15_625);

    let bench = TabularBenchmark::load(&table_path).unwrap();
    assert_eq!(bench.len(), 15_625);

    // full-space scan: every enumerated genotype resolves to a table
    // entry; beta is a fraction of the synthetic params range
    let (min_params, max_params) = {
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        let mut scanned = 0usize;
        for g in eenas_core::search_space::enumerate_nb201() {
            let entry = bench.get(&g.serialize()).expect("full space is tabulated");
            lo = lo.min(entry.params_m);
            hi = hi.max(entry.params_m);
            scanned += 1;
        }
        assert_eq!(scanned, 15_625);
        (lo, hi)
    };
    let beta = min_params + 0.4 * (max_params - min_params);

    let run_search = |out_dir: &Path| {
        let config = dir.path().join("nb201.toml");
        std::fs::write(
            &config,
            format!(
                "[search]\nspace = \"nb201\"\ngenerations = 10\npopulation = 100\nseed = 2020\nbeta = {beta}\noutput_dir = \"{}\"\n[evolution]\nmutation_prob = 0.1\ntournament_size = 10\ncrossover_keep_prob = 0.5\n[evaluator]\nkind = \"tabular\"\ntable = \"{}\"\n",
                out_dir.display(),
                table_path.display()
            ),
        )
        .unwrap();
        let out = Command::new(env!("CARGO_BIN_EXE_eenas"))
            .args(["search", "--config"])
            .arg(&config)
            .output()
            .unwrap();
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    };

    let first = dir.path().join("first");
    let second = dir.path().join("second");
    run_search(&first);
    run_search(&second);
    let log_a = std::fs::read(first.join("run.jsonl")).unwrap();
    let log_b = std::fs::read(second.join("run.jsonl")).unwrap();
    assert_eq!(log_a, log_b, "nb201 search is not deterministic");

    let log_text = std::fs::read_to_string(first.join("run.jsonl")).unwrap();
    assert_eq!(log_text.lines().count(), 10);

    // every final front-0 member exists in the table
    let pareto: Vec<serde_json::Value> =
        serde_json::from_str(&std::fs::read_to_string(first.join("pareto.json")).unwrap())
            .unwrap();
    assert!(!pareto.is_empty());
    for model in &pareto {
        let key = model["genotype"].as_str().unwrap();
        assert!(bench.get(key).is_some(), "front member {key} not in table");
    }
    // members stay within the configured budget in generation 1
    let first_record: GenerationRecord =
        serde_json::from_str(log_text.lines().next().unwrap()).unwrap();
    for member in &first_record.members {
        assert!(member.params_m <= beta + 1e-12);
    }

    assert!(started.elapsed().as_secs_f64() < 120.0, "criterion 8 exceeded 120 s");
    pass(8, "NB201 tabular protocol", started);
}

// -------------------------------------------------------------------------
// 9. Determinism: identical config + seed give byte-identical run logs,
//    including under parallel evaluator workers (in-process and external).
// -------------------------------------------------------------------------
#[test]
fn acceptance_9_run_log_determinism() {
    let started = Instant::now();
    let dir = tempfile::tempdir().unwrap();

    let run = |config: &Path, out_dir: &Path| -> Vec<u8> {
        let out = Command::new(env!("CARGO_BIN_EXE_eenas"))
            .args(["search", "--config"])
            .arg(config)
            .args(["--output-dir"])
            .arg(out_dir)
            .output()
            .unwrap();
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
        std::fs::read(out_dir.join("run.jsonl")).unwrap()
    };

    // surrogate evaluator with 4 in-process workers
    let surrogate_config = dir.path().join("surrogate.toml");
    std::fs::write(
        &surrogate_config,
        "[search]\ngenerations = 5\npopulation = 20\nseed = 404\nbeta = 4.0\n[evaluator]\nkind = \"surrogate\"\nworkers = 4\n",
    )
    .unwrap();
    let a = run(&surrogate_config, &dir.path().join("sa"));
    let b = run(&surrogate_config, &dir.path().join("sb"));
    assert_eq!(a, b, "surrogate runs differ");

    // external evaluator: pool of 3 python worker processes
    let stub = dir.path().join("stub.py");
    std::fs::write(
        &stub,
        r#"
import sys, json, hashlib
for line in sys.stdin:
    req = json.loads(line)
    digest = hashlib.sha256(req["genotype"].encode()).digest()
    noise = int.from_bytes(digest[:4], "big") / 2**32
    resp = {"id": req["id"], "error": 0.1 + 0.8 * noise, "params_m": None,
            "flops_m": None, "cost_units": 1.0}
    print(json.dumps(resp), flush=True)
"#,
    )
    .unwrap();
    let external_config = dir.path().join("external.toml");
    std::fs::write(
        &external_config,
        format!(
            "[search]\ngenerations = 4\npopulation = 12\nseed = 505\n[evaluator]\nkind = \"external\"\ncommand = [\"python3\", \"{}\"]\nworkers = 3\ntimeout_ms = 30000\n",
            stub.display()
        ),
    )
    .unwrap();
    let a = run(&external_config, &dir.path().join("ea"));
    let b = run(&external_config, &dir.path().join("eb"));
    assert_eq!(a, b, "external-evaluator runs differ");

    assert!(started.elapsed().as_secs_f64() < 60.0, "criterion 9 exceeded 60 s");
    pass(9, "run-log determinism", started);
}
