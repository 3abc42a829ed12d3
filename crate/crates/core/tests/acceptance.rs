//! Acceptance suite: one PASS/FAIL line per criterion, nonzero exit if any
//! criterion fails. Runs without the libtest harness so the report is
//! always printed.

mod common;

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::path::{Path, PathBuf};
use std::process::Command;
use std::time::{Duration, Instant};

use gaze_tna::ingest::{write_fixation_csv, FixationRecord, Role};
use gaze_tna::network::{export_dot, export_json, parse_network_json};
use gaze_tna::pipeline::{
    analyze_all, group_samples, pooled_networks, validate_inputs, CompareBy, GroupBy, Inputs,
    Metric, PipelineConfig,
};
use gaze_tna::sequence::{merge_fixations, remerge, AoiSequence, ParticipantKey};
use gaze_tna::stats::{kruskal_wallis, summarize, GroupSample};
use gaze_tna::synth::{demo_corpus, generate, GeneratorSpec, UniformRange};
use gaze_tna::tna::{analyze_sequence_full, AnalysisConfig, SmoothingConfig};
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};
use sha2::{Digest, Sha256};

use common::{fixation, oracle_merge, oracle_metrics, random_labels, random_log, saccade, LETTERS};

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);
type Transform = (&'static str, fn(f64) -> f64);

macro_rules! ensure {
    ($cond:expr, $($msg:tt)+) => {
        let ok: bool = $cond;
        if !ok {
            return Err(format!($($msg)+));
        }
    };
}

fn key() -> ParticipantKey {
    ParticipantKey {
        session_id: "s".into(),
        participant_id: "p".into(),
        role: Role::Airway,
    }
}

fn config(alpha: f64) -> AnalysisConfig {
    AnalysisConfig {
        smoothing: SmoothingConfig::new(alpha, false).unwrap(),
        entropy_renormalize: true,
    }
}

fn strings(labels: &[&str]) -> Vec<String> {
    labels.iter().map(|s| s.to_string()).collect()
}

fn oracle_equivalence() -> Outcome {
    let start = Instant::now();
    let mut rng = StdRng::seed_from_u64(20_240_601);
    let mut worst = 0.0f64;
    for case in 0..1000 {
        let k = rng.random_range(2..=7);
        let len = rng.random_range(2..=500);
        let alpha = [0.5, 0.0, 1.0, 0.1][case % 4];
        let labels = random_labels(&mut rng, k, len);
        let order = &LETTERS[..k];
        let seq = AoiSequence::from_labels(key(), &labels);
        let got = analyze_sequence_full(&seq, &strings(order), &config(alpha))
            .map_err(|e| e.to_string())?;
        let want = oracle_metrics(&labels, order, alpha, true);
        let mut diffs = vec![
            (got.metrics.self_loop_rate - want.self_loop).abs(),
            (got.metrics.cross_scan_rate - want.cross_scan).abs(),
        ];
        match (got.metrics.entropy, want.entropy) {
            (Some(a), Some(b)) => diffs.push((a - b).abs()),
            (None, None) => {}
            (a, b) => {
                return Err(format!(
                    "case {case}: entropy presence differs ({a:?} vs {b:?})"
                ))
            }
        }
        for i in 0..k {
            for j in 0..k {
                diffs.push((got.matrix.prob(i, j) - want.p[i][j]).abs());
            }
        }
        let case_worst = diffs.into_iter().fold(0.0, f64::max);
        ensure!(
            case_worst <= 1e-12,
            "case {case} (k={k}, len={len}): deviation {case_worst:e}"
        );
        worst = worst.max(case_worst);
    }
    let elapsed = start.elapsed();
    ensure!(elapsed < Duration::from_secs(10), "took {elapsed:?}");
    Ok(format!(
        "1000 sequences, max deviation {worst:.1e}, {elapsed:.2?}"
    ))
}

fn formula_spot_checks() -> Outcome {
    let order = strings(&["A", "B", "C"]);
    let row = analyze_sequence_full(
        &AoiSequence::from_labels(key(), &["A", "A"]),
        &order,
        &config(0.5),
    )
    .map_err(|e| e.to_string())?;
    let got = row.matrix.row(0).to_vec();
    ensure!(got == [0.6, 0.2, 0.2], "row (1,0,0) smoothed to {got:?}");

    let toy = ["P", "P", "V", "P", "E", "E", "V"];
    let m = analyze_sequence_full(
        &AoiSequence::from_labels(key(), &toy),
        &strings(&["P", "V", "E"]),
        &config(0.5),
    )
    .map_err(|e| e.to_string())?
    .metrics;
    let h = m.entropy.ok_or("toy entropy missing")?;
    ensure!((h - 0.874185).abs() <= 1e-6, "toy entropy {h}");
    ensure!(
        (m.self_loop_rate - 0.322449).abs() <= 1e-6,
        "toy self-loop {}",
        m.self_loop_rate
    );
    Ok(format!(
        "row (0.6, 0.2, 0.2); toy entropy {h:.6}, self-loop {:.6}",
        m.self_loop_rate
    ))
}

/// Closed walk over every ordered pair of distinct nodes exactly once.
fn eulerian_circuit(k: usize) -> Vec<usize> {
    let mut unused: Vec<Vec<usize>> = (0..k)
        .map(|i| (0..k).filter(|&j| j != i).collect())
        .collect();
    let mut stack = vec![0];
    let mut circuit = Vec::new();
    while let Some(&v) = stack.last() {
        match unused[v].pop() {
            Some(w) => stack.push(w),
            None => circuit.push(stack.pop().unwrap()),
        }
    }
    circuit.reverse();
    circuit
}

fn demo_results(seed: u64) -> Result<Vec<gaze_tna::pipeline::SequenceResult>, String> {
    let corpus = demo_corpus(seed).map_err(|e| e.to_string())?;
    let inputs = Inputs {
        records: corpus.records,
        aoi_map: corpus.aoi_map,
        stages: corpus.stages,
    };
    analyze_all(&inputs, &PipelineConfig::default()).map_err(|e| e.to_string())
}

fn role_medians(
    results: &[gaze_tna::pipeline::SequenceResult],
    metric: Metric,
) -> Vec<(String, f64)> {
    group_samples(results, CompareBy::Role, metric)
        .into_iter()
        .map(|g| (g.group_label.clone(), summarize(&g.values).unwrap().median))
        .collect()
}

fn entropy_bounds() -> Outcome {
    let mut rng = StdRng::seed_from_u64(77);
    for case in 0..1000 {
        let k = rng.random_range(2..=7);
        let len = rng.random_range(2..=300);
        let labels = random_labels(&mut rng, k, len);
        let m = analyze_sequence_full(
            &AoiSequence::from_labels(key(), &labels),
            &strings(&LETTERS[..k]),
            &config(0.5),
        )
        .map_err(|e| e.to_string())?
        .metrics;
        let bound = ((k - 1) as f64).log2();
        for h in m.per_aoi_entropy.iter().flatten().chain(m.entropy.iter()) {
            ensure!(
                *h >= 0.0 && *h <= bound + 1e-12,
                "case {case}: entropy {h} outside [0, {bound}]"
            );
        }
        ensure!(
            (0.0..=1.0).contains(&m.self_loop_rate),
            "case {case}: self-loop {}",
            m.self_loop_rate
        );
    }

    let walk: Vec<&str> = eulerian_circuit(7)
        .into_iter()
        .map(|i| LETTERS[i])
        .collect();
    let uniform = analyze_sequence_full(
        &AoiSequence::from_labels(key(), &walk),
        &strings(&LETTERS),
        &config(0.5),
    )
    .map_err(|e| e.to_string())?
    .metrics
    .entropy
    .ok_or("no entropy for the uniform walk")?;
    ensure!(
        (uniform - 2.584963).abs() <= 1e-6,
        "uniform off-diagonal entropy {uniform}"
    );

    let results = demo_results(0)?;
    let entropy = role_medians(&results, Metric::Entropy);
    let self_loop = role_medians(&results, Metric::SelfLoop);
    ensure!(
        entropy.iter().all(|(_, m)| (0.0..=2.585).contains(m)),
        "demo entropy medians {entropy:?}"
    );
    ensure!(
        self_loop.iter().all(|(_, m)| (0.0..=1.0).contains(m)),
        "demo self-loop medians {self_loop:?}"
    );
    for (lo, hi, upper) in [(1.95, 2.21, 2.585), (0.38, 0.49, 1.0)] {
        ensure!(
            0.0 <= lo && hi <= upper,
            "reference band [{lo}, {hi}] outside [0, {upper}]"
        );
    }
    let show = |v: &[(String, f64)]| {
        v.iter()
            .map(|(g, m)| format!("{g} {m:.3}"))
            .collect::<Vec<_>>()
            .join(", ")
    };
    Ok(format!(
        "uniform K=7 entropy {uniform:.6}; demo entropy medians [{}]; self-loop medians [{}]",
        show(&entropy),
        show(&self_loop)
    ))
}

fn merging_rule() -> Outcome {
    let as_dwells = |m: Vec<gaze_tna::sequence::ObjectFixation>| -> Vec<common::Dwell> {
        m.into_iter()
            .map(|f| (f.object_id, f.start_ms, f.end_ms, f.merged_count))
            .collect()
    };
    for gap in 0..=700u64 {
        let log = [
            fixation("p1", 0, 200, "a"),
            fixation("p1", 200 + gap, 500 + gap, "a"),
        ];
        let n = merge_fixations(&log, 300).map_err(|e| e.to_string())?.len();
        ensure!(
            n == if gap <= 300 { 1 } else { 2 },
            "gap {gap} ms gave {n} dwells"
        );
    }

    let mut micro = 0;
    for objects in 0..8u32 {
        for g1 in [0u64, 300, 301] {
            for g2 in [0u64, 300, 301] {
                for with_saccade in [false, true] {
                    let obj = |i: u32| if objects >> i & 1 == 1 { "b" } else { "a" };
                    let mut log = vec![fixation("p1", 0, 100, obj(0))];
                    if with_saccade {
                        log.push(saccade("p1", 100, 100 + g1.min(50)));
                    }
                    log.push(fixation("p1", 100 + g1, 200 + g1, obj(1)));
                    log.push(fixation("p1", 200 + g1 + g2, 300 + g1 + g2, obj(2)));
                    let got = as_dwells(merge_fixations(&log, 300).map_err(|e| e.to_string())?);
                    ensure!(
                        got == oracle_merge(&log, 300),
                        "micro-case {objects:03b} {g1} {g2} {with_saccade}"
                    );
                    micro += 1;
                }
            }
        }
    }

    let mut rng = StdRng::seed_from_u64(4);
    for case in 0..500 {
        let len = rng.random_range(1..200);
        let objects = rng.random_range(1..4);
        let log = random_log(&mut rng, len, objects);
        let merged = merge_fixations(&log, 300).map_err(|e| e.to_string())?;
        ensure!(
            remerge(&merged, 300).map_err(|e| e.to_string())? == merged,
            "case {case}: not idempotent"
        );
        let total: usize = merged.iter().map(|f| f.merged_count).sum();
        let fixations = log.iter().filter(|r| r.is_fixation()).count();
        ensure!(
            total == fixations,
            "case {case}: merged_count sums to {total}, expected {fixations}"
        );
        ensure!(
            as_dwells(merged) == oracle_merge(&log, 300),
            "case {case}: differs from reference merge"
        );
    }
    Ok(format!(
        "300 ms merges, 301 ms does not; {micro} micro-cases and 500 random logs agree"
    ))
}

/// Circulant, hence doubly stochastic, so every AOI is visited equally often.
fn circulant(k: usize) -> Vec<Vec<f64>> {
    let base = [0.3, 0.25, 0.15, 0.1, 0.1, 0.05, 0.05];
    (0..k)
        .map(|i| (0..k).map(|j| base[(j + k - i) % k]).collect())
        .collect()
}

fn estimator_consistency() -> Outcome {
    let start = Instant::now();
    let order: Vec<String> = LETTERS.iter().map(|s| s.to_string()).collect();
    let q = circulant(7);
    let mut worst = 0.0f64;
    for seed in 0..10 {
        let spec = GeneratorSpec {
            aoi_order: order.clone(),
            transition_probs: q.clone(),
            dwell_ms: UniformRange { min: 100, max: 400 },
            // Pauses above the merge threshold keep every draw a separate dwell.
            gap_ms: UniformRange { min: 301, max: 600 },
            objects_per_aoi: 2,
            length: 100_000,
            seed,
            session_id: "sim".into(),
            participant_id: "p1".into(),
            role: Role::Cpr,
            start_ms: 0,
        };
        let records = generate(&spec).map_err(|e| e.to_string())?;
        let merged = merge_fixations(&records, 300).map_err(|e| e.to_string())?;
        ensure!(
            merged.len() == 100_000,
            "seed {seed}: {} dwells after merging",
            merged.len()
        );
        let built =
            gaze_tna::sequence::build_aoi_sequence(key(), &merged, &spec.aoi_map().unwrap());
        let a = analyze_sequence_full(&built.sequence, &order, &config(0.5))
            .map_err(|e| e.to_string())?;
        let mut seed_worst = 0.0f64;
        for (i, row) in q.iter().enumerate() {
            for (j, qij) in row.iter().enumerate() {
                seed_worst = seed_worst.max((a.matrix.prob(i, j) - qij).abs());
            }
        }
        ensure!(seed_worst < 0.02, "seed {seed}: max |P - Q| = {seed_worst}");
        worst = worst.max(seed_worst);
    }
    let elapsed = start.elapsed();
    ensure!(elapsed < Duration::from_secs(5), "took {elapsed:?}");
    Ok(format!(
        "10 seeds x 100000 fixations, max |P - Q| = {worst:.4}, {elapsed:.2?}"
    ))
}

fn kruskal_wallis_checks() -> Outcome {
    let groups = [
        GroupSample::new("a", vec![1.0, 2.0, 3.0]),
        GroupSample::new("b", vec![4.0, 5.0, 6.0]),
        GroupSample::new("c", vec![7.0, 8.0, 9.0]),
    ];
    let kw = kruskal_wallis(&groups).map_err(|e| e.to_string())?;
    ensure!(
        (kw.h_statistic - 7.2).abs() < 1e-12,
        "H = {}",
        kw.h_statistic
    );
    ensure!((kw.p_value - 0.027324).abs() <= 1e-5, "p = {}", kw.p_value);

    let transforms: [Transform; 3] = [
        ("affine", |x| 3.0 * x + 7.0),
        ("exp", |x| (x / 3.0).exp()),
        ("cube", |x| x * x * x + 0.5),
    ];
    let mut rng = StdRng::seed_from_u64(606);
    let mut tested = 0;
    while tested < 100 {
        let sets: Vec<GroupSample> = (0..rng.random_range(2..=5))
            .map(|g| {
                let n = rng.random_range(2..=12);
                GroupSample::new(
                    format!("g{g}"),
                    (0..n).map(|_| rng.random_range(0..15) as f64).collect(),
                )
            })
            .collect();
        let Ok(base) = kruskal_wallis(&sets) else {
            continue;
        };
        for (name, f) in transforms {
            let moved: Vec<GroupSample> = sets
                .iter()
                .map(|g| {
                    GroupSample::new(
                        g.group_label.clone(),
                        g.values.iter().map(|&x| f(x)).collect(),
                    )
                })
                .collect();
            let got = kruskal_wallis(&moved).map_err(|e| e.to_string())?;
            ensure!(
                got.h_statistic == base.h_statistic && got.p_value == base.p_value,
                "set {tested}: {name} transform changed H {} -> {}",
                base.h_statistic,
                got.h_statistic
            );
        }
        tested += 1;
    }
    Ok(format!(
        "H = {}, p = {:.6}; 100 group sets invariant under 3 monotone maps",
        kw.h_statistic, kw.p_value
    ))
}

fn demo_study_shape() -> Outcome {
    let mut good = 0;
    let mut notes = Vec::new();
    for seed in 0..10 {
        let results = demo_results(seed)?;
        ensure!(
            results.len() == 40,
            "seed {seed}: {} metric rows",
            results.len()
        );
        let mut ok = true;
        let mut ps = Vec::new();
        for (metric, leader) in [(Metric::Entropy, "CPR"), (Metric::SelfLoop, "Defib")] {
            let kw = kruskal_wallis(&group_samples(&results, CompareBy::Role, metric))
                .map_err(|e| e.to_string())?;
            let medians = role_medians(&results, metric);
            let top = medians
                .iter()
                .max_by(|a, b| a.1.total_cmp(&b.1))
                .map(|(g, _)| g.clone())
                .unwrap_or_default();
            ok &= kw.p_value < 0.01 && top == leader;
            ps.push(kw.p_value);
        }
        if ok {
            good += 1;
        } else {
            notes.push(format!("seed {seed} p={ps:?}"));
        }
    }
    ensure!(
        good >= 9,
        "only {good}/10 seeds reproduce the shape ({})",
        notes.join("; ")
    );
    Ok(format!(
        "{good}/10 seeds: KW p < 0.01 for both metrics, CPR top entropy, Defib top self-loop"
    ))
}

fn binary() -> &'static str {
    env!("CARGO_BIN_EXE_gaze-tna")
}

fn demo_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../data/demo")
}

fn run_cli(args: &[&str]) -> Result<Duration, String> {
    let start = Instant::now();
    let out = Command::new(binary())
        .args(args)
        .output()
        .map_err(|e| e.to_string())?;
    let elapsed = start.elapsed();
    ensure!(
        out.status.success(),
        "`gaze-tna {}` failed: {}",
        args.join(" "),
        String::from_utf8_lossy(&out.stderr)
    );
    Ok(elapsed)
}

fn digest_dir(dir: &Path) -> Result<BTreeMap<String, String>, String> {
    let mut out = BTreeMap::new();
    for entry in fs::read_dir(dir).map_err(|e| e.to_string())? {
        let path = entry.map_err(|e| e.to_string())?.path();
        if path.is_dir() {
            continue;
        }
        let bytes = fs::read(&path).map_err(|e| e.to_string())?;
        let hex: String = Sha256::digest(&bytes)
            .iter()
            .map(|b| format!("{b:02x}"))
            .collect();
        out.insert(
            path.file_name().unwrap().to_string_lossy().into_owned(),
            hex,
        );
    }
    Ok(out)
}

fn determinism() -> Outcome {
    let demo = demo_dir();
    let fix = demo.join("fixations.csv");
    let map = demo.join("aoi_map.txt");
    let stages = demo.join("stages.csv");
    let (fix, map, stages) = (
        fix.to_str().unwrap(),
        map.to_str().unwrap(),
        stages.to_str().unwrap(),
    );
    let mut digests = Vec::new();
    for _ in 0..2 {
        let tmp = tempfile::tempdir().map_err(|e| e.to_string())?;
        let out = tmp.path().to_str().unwrap();
        let common = ["--fixations", fix, "--aoi-map", map, "--stages", stages];
        run_cli(
            &[
                &["analyze"][..],
                &common,
                &[
                    "--group-by",
                    "role,stage",
                    "--format",
                    "csv,json",
                    "--out",
                    out,
                ],
            ]
            .concat(),
        )?;
        run_cli(
            &[
                &["network"][..],
                &common,
                &["--group-by", "role,stage", "--out", out],
            ]
            .concat(),
        )?;
        let sim = tmp.path().join("sim.csv");
        run_cli(&[
            "simulate",
            "--preset",
            "cpr-stage5",
            "--seed",
            "11",
            "--out",
            sim.to_str().unwrap(),
        ])?;
        run_cli(&[
            "simulate",
            "--demo-corpus",
            "--seed",
            "3",
            "--out",
            tmp.path().join("corpus").to_str().unwrap(),
        ])?;
        let mut d = digest_dir(tmp.path())?;
        d.extend(
            digest_dir(&tmp.path().join("corpus"))?
                .into_iter()
                .map(|(k, v)| (format!("corpus/{k}"), v)),
        );
        digests.push(d);
    }
    ensure!(
        digests[0].len() >= 12,
        "only {} output files",
        digests[0].len()
    );
    ensure!(digests[0] == digests[1], "outputs differ between runs");
    Ok(format!(
        "{} files byte-identical across two runs (sha256)",
        digests[0].len()
    ))
}

fn performance() -> Outcome {
    const TARGET: usize = 20_628;
    let tmp = tempfile::tempdir().map_err(|e| e.to_string())?;
    let mut records: Vec<FixationRecord> = Vec::new();
    let participants = 40;
    let mut spec = gaze_tna::synth::role_preset(Role::Cpr, "stage1").map_err(|e| e.to_string())?;
    // Pauses above the merge threshold make raw and merged counts coincide.
    spec.gap_ms = UniformRange { min: 320, max: 600 };
    for p in 0..participants {
        let role = Role::ALL[p % 4];
        spec.role = role;
        spec.participant_id = format!("P{:02}", p + 1);
        spec.session_id = format!("s{:02}", p / 4 + 1);
        spec.seed = p as u64;
        spec.length = TARGET / participants + usize::from(p < TARGET % participants);
        records.extend(generate(&spec).map_err(|e| e.to_string())?);
    }
    let fix = tmp.path().join("fixations.csv");
    let map = tmp.path().join("aoi_map.txt");
    let mut buf = Vec::new();
    write_fixation_csv(&records, &mut buf).map_err(|e| e.to_string())?;
    fs::write(&fix, buf).map_err(|e| e.to_string())?;
    let aoi_map = spec.aoi_map().map_err(|e| e.to_string())?;
    fs::write(&map, aoi_map.to_text()).map_err(|e| e.to_string())?;
    let inputs = Inputs {
        records,
        aoi_map,
        stages: Vec::new(),
    };
    let merged = validate_inputs(&inputs, 300)
        .map_err(|e| e.to_string())?
        .merged_fixations;
    ensure!(merged == TARGET, "corpus has {merged} merged fixations");

    let (fix, map) = (fix.to_str().unwrap(), map.to_str().unwrap());
    let out = tmp.path().join("out");
    let out = out.to_str().unwrap();
    let analyze = run_cli(&[
        "analyze",
        "--fixations",
        fix,
        "--aoi-map",
        map,
        "--out",
        out,
    ])?;
    let network = run_cli(&[
        "network",
        "--fixations",
        fix,
        "--aoi-map",
        map,
        "--group-by",
        "role",
        "--out",
        out,
    ])?;
    ensure!(analyze < Duration::from_secs(1), "analyze took {analyze:?}");
    ensure!(
        network < Duration::from_millis(500),
        "network took {network:?}"
    );
    Ok(format!("{merged} merged fixations: analyze {analyze:.0?}, network {network:.0?} (wall clock, whole process)"))
}

type EdgeSet = BTreeSet<(String, String, String)>;

fn dot_edges(dot: &str) -> EdgeSet {
    dot.lines()
        .filter(|l| l.contains(" -> "))
        .map(|l| {
            let quoted: Vec<&str> = l.split('"').collect();
            let weight = l
                .split("weight=")
                .nth(1)
                .unwrap()
                .split(',')
                .next()
                .unwrap();
            (
                quoted[1].to_string(),
                quoted[3].to_string(),
                weight.to_string(),
            )
        })
        .collect()
}

fn json_edges(json: &str) -> EdgeSet {
    let v: serde_json::Value = serde_json::from_str(json).unwrap();
    v["edges"]
        .as_array()
        .unwrap()
        .iter()
        .map(|e| {
            (
                e["from"].as_str().unwrap().to_string(),
                e["to"].as_str().unwrap().to_string(),
                gaze_tna::format::sig6(e["probability"].as_f64().unwrap()),
            )
        })
        .collect()
}

fn export_fidelity() -> Outcome {
    let corpus = demo_corpus(0).map_err(|e| e.to_string())?;
    let inputs = Inputs {
        records: corpus.records,
        aoi_map: corpus.aoi_map,
        stages: corpus.stages,
    };
    let mut edges = 0;
    let mut cells = 0;
    for (group_by, min_prob) in [("role,stage", 0.0), ("role", 0.1), ("", 0.0)] {
        let cfg = PipelineConfig {
            group_by: group_by.parse::<GroupBy>().map_err(|e| e.to_string())?,
            ..PipelineConfig::default()
        };
        for cell in pooled_networks(&inputs, &cfg, min_prob).map_err(|e| e.to_string())? {
            let net = cell.network.ok_or("empty demo cell")?;
            let json = export_json(&net, false).map_err(|e| e.to_string())?;
            let (from_dot, from_json) = (dot_edges(&export_dot(&net)), json_edges(&json));
            ensure!(
                from_dot == from_json,
                "{}: DOT and JSON edge sets differ",
                cell.key.file_stem("tna")
            );
            let back = parse_network_json(&json).map_err(|e| e.to_string())?;
            ensure!(
                export_json(&back, false).map_err(|e| e.to_string())? == json,
                "JSON re-export differs"
            );
            ensure!(
                back.edges.len() == net.edges.len(),
                "edge count changed on round trip"
            );
            for (a, b) in net.edges.iter().zip(&back.edges) {
                ensure!(
                    a.from == b.from
                        && a.to == b.to
                        && ((a.probability - b.probability) / a.probability).abs() <= 5e-6,
                    "edge {}->{} drifted to {}",
                    a.from,
                    a.to,
                    b.probability
                );
            }
            edges += net.edges.len();
            cells += 1;
        }
    }
    Ok(format!(
        "{cells} networks, {edges} edges: DOT = JSON, round trip within 6 significant digits"
    ))
}

fn main() {
    let criteria: [Criterion; 10] = [
        ("oracle equivalence", oracle_equivalence),
        ("formula spot checks", formula_spot_checks),
        ("entropy and rate bounds", entropy_bounds),
        ("merging rule", merging_rule),
        ("estimator consistency", estimator_consistency),
        ("Kruskal-Wallis", kruskal_wallis_checks),
        ("demo study shape", demo_study_shape),
        ("determinism", determinism),
        ("performance", performance),
        ("export fidelity", export_fidelity),
    ];
    let mut failures = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let outcome = std::panic::catch_unwind(check).unwrap_or_else(|_| Err("panicked".into()));
        match outcome {
            Ok(detail) => println!("PASS {:>2} {name}: {detail}", i + 1),
            Err(why) => {
                failures += 1;
                println!("FAIL {:>2} {name}: {why}", i + 1);
            }
        }
    }
    println!(
        "acceptance: {}/{} criteria passed",
        criteria.len() - failures,
        criteria.len()
    );
    if failures > 0 {
        std::process::exit(1);
    }
}
