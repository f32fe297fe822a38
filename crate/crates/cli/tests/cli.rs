use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::{json, Value};

fn bchmlab(args: &[&str], cwd: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_bchmlab")).args(args).current_dir(cwd).output().expect("binary runs")
}

fn write_json(path: &Path, v: &Value) -> PathBuf {
    fs::write(path, serde_json::to_string_pretty(v).unwrap()).unwrap();
    path.to_path_buf()
}

fn files_with_ext(dir: &Path, ext: &str) -> Vec<PathBuf> {
    let mut out = Vec::new();
    for entry in fs::read_dir(dir).unwrap() {
        let p = entry.unwrap().path();
        if p.is_dir() {
            out.extend(files_with_ext(&p, ext));
        } else if p.extension().is_some_and(|e| e == ext) {
            out.push(p);
        }
    }
    out.sort();
    out
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn minimal_run() -> Value {
    json!({"function": "sphere", "dimension": 3, "engine": "classic", "bchm": "sat", "seed": 3, "budget": 2000})
}

#[test]
fn run_writes_two_files() {
    let dir = tempfile::tempdir().unwrap();
    write_json(&dir.path().join("run.json"), &minimal_run());
    let o = bchmlab(&["run", "--config", "run.json", "--out", "out"], dir.path());
    assert!(o.status.success(), "{}", stderr(&o));
    let mut names: Vec<String> =
        fs::read_dir(dir.path().join("out")).unwrap().map(|e| e.unwrap().file_name().into_string().unwrap()).collect();
    names.sort();
    assert_eq!(names, vec!["summary.json", "trajectory.csv"]);

    let summary: Value = serde_json::from_str(&fs::read_to_string(dir.path().join("out/summary.json")).unwrap()).unwrap();
    // the echo carries defaults that were not in the file
    assert_eq!(summary["config"]["classic"]["population_size"], 50);
    assert_eq!(summary["config"]["mode"], "sbox");
    assert!(summary["wall_time_seconds"].as_f64().unwrap() >= 0.0);
}

#[test]
fn missing_bchm_exits_2_and_names_the_field() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = minimal_run();
    cfg.as_object_mut().unwrap().remove("bchm");
    write_json(&dir.path().join("run.json"), &cfg);
    let o = bchmlab(&["run", "--config", "run.json"], dir.path());
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("bchm"), "{}", stderr(&o));
    assert!(!dir.path().join("trajectory.csv").exists());
}

#[test]
fn unknown_key_and_bad_method_id_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = minimal_run();
    cfg["bchm"] = json!("Saturation");
    cfg["popsize"] = json!(10);
    write_json(&dir.path().join("run.json"), &cfg);
    let o = bchmlab(&["run", "--config", "run.json"], dir.path());
    assert_eq!(o.status.code(), Some(2));
    let err = stderr(&o);
    assert!(err.contains("popsize: unknown field") && err.contains("bchm:"), "{err}");
}

#[test]
fn same_config_twice_gives_identical_csv() {
    let dir = tempfile::tempdir().unwrap();
    write_json(&dir.path().join("run.json"), &minimal_run());
    for out in ["a", "b"] {
        assert!(bchmlab(&["run", "--config", "run.json", "--out", out], dir.path()).status.success());
    }
    let a = fs::read(dir.path().join("a/trajectory.csv")).unwrap();
    let b = fs::read(dir.path().join("b/trajectory.csv")).unwrap();
    assert_eq!(a, b);
}

fn small_sweep(dir: &Path) -> PathBuf {
    write_json(
        &dir.join("sweep.json"),
        &json!({
            "functions": ["sphere", "rastrigin"],
            "instances": [1],
            "dimensions": [2],
            "engines": ["classic"],
            "bchms": ["sat", "mirror"],
            "runs_per_cell": 3,
            "budget_multiplier": 100,
            "base_seed": 11,
            "output_directory": "results"
        }),
    )
}

#[test]
fn sweep_counts_and_resumes() {
    let dir = tempfile::tempdir().unwrap();
    small_sweep(dir.path());
    let o = bchmlab(&["sweep", "--config", "sweep.json", "--parallelism", "2"], dir.path());
    assert!(o.status.success(), "{}", stderr(&o));
    let results = dir.path().join("results");
    let csvs = files_with_ext(&results, "csv");
    assert_eq!(csvs.len(), 12);

    // every artifact appears in exactly one manifest entry
    let manifest: Value = serde_json::from_str(&fs::read_to_string(results.join("manifest.json")).unwrap()).unwrap();
    let mut listed: Vec<PathBuf> = manifest["runs"]
        .as_array()
        .unwrap()
        .iter()
        .flat_map(|r| [r["trajectory"].as_str().unwrap(), r["summary"].as_str().unwrap()])
        .map(|p| results.join(p))
        .collect();
    listed.sort();
    let mut on_disk = csvs.clone();
    on_disk.extend(files_with_ext(&results, "json").into_iter().filter(|p| !p.ends_with("manifest.json")));
    on_disk.sort();
    assert_eq!(listed, on_disk);

    let victim = &csvs[5];
    let before = fs::read(victim).unwrap();
    let untouched = fs::metadata(&csvs[0]).unwrap().modified().unwrap();
    fs::remove_file(victim).unwrap();
    let o = bchmlab(&["sweep", "--config", "sweep.json"], dir.path());
    assert!(String::from_utf8_lossy(&o.stdout).contains("1 executed, 11 already present"));
    assert_eq!(fs::read(victim).unwrap(), before);
    assert_eq!(fs::metadata(&csvs[0]).unwrap().modified().unwrap(), untouched);
}

#[test]
fn sweep_output_independent_of_parallelism() {
    let dir = tempfile::tempdir().unwrap();
    small_sweep(dir.path());
    for (p, out) in [("1", "p1"), ("4", "p4")] {
        assert!(bchmlab(&["sweep", "--config", "sweep.json", "--parallelism", p, "--out", out], dir.path())
            .status
            .success());
    }
    let a = files_with_ext(&dir.path().join("p1"), "csv");
    let b = files_with_ext(&dir.path().join("p4"), "csv");
    assert_eq!(a.len(), b.len());
    for (x, y) in a.iter().zip(&b) {
        assert_eq!(fs::read(x).unwrap(), fs::read(y).unwrap(), "{}", x.display());
    }
}

#[test]
fn classify_finds_good_behaviour() {
    let dir = tempfile::tempdir().unwrap();
    write_json(
        &dir.path().join("sweep.json"),
        &json!({
            "functions": ["sphere"],
            "instances": [1],
            "dimensions": [2],
            "engines": ["classic"],
            "bchms": ["sat"],
            "runs_per_cell": 1,
            "budget_multiplier": 5000,
            "placement": "center",
            "output_directory": "results"
        }),
    );
    assert!(bchmlab(&["sweep", "--config", "sweep.json"], dir.path()).status.success());
    let summary: Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("results/classic/sbox/sphere/d2/i1/sat/run0.json")).unwrap())
            .unwrap();
    assert!(summary["final_error"].as_f64().unwrap() < 1e-6);
    assert!(summary["final_max_variance"].as_f64().unwrap() < 1e-8);

    let o = bchmlab(&["classify", "--manifest", "results/manifest.json"], dir.path());
    assert!(o.status.success(), "{}", stderr(&o));
    let table = fs::read_to_string(dir.path().join("results/classes.csv")).unwrap();
    let row = table.lines().nth(1).unwrap();
    assert!(row.starts_with("classic,sbox,sphere,2,1,sat,1,1,0,0,0,"), "{row}");
    assert!(row.ends_with(",GB,0"), "{row}");
}

/// Replace the three trajectories of a one-function, three-method sweep.
fn synthetic_cluster_manifest(dir: &Path) -> PathBuf {
    write_json(
        &dir.join("sweep.json"),
        &json!({
            "functions": ["sphere"],
            "instances": [1],
            "dimensions": [2],
            "engines": ["classic"],
            "bchms": ["sat", "mirror", "uniform"],
            "runs_per_cell": 1,
            "budget_multiplier": 50,
            "output_directory": "results"
        }),
    );
    assert!(bchmlab(&["sweep", "--config", "sweep.json"], dir).status.success());
    let header = "generation,feasible_evaluations,population_size,best_error,infeasible_component_ratio,\
infeasible_individual_ratio,max_component_variance,mean_component_variance,corrections_applied,adaptive_probabilities";
    // mirror and sat rise, uniform falls
    let series: [(&str, [f64; 4]); 3] =
        [("sat", [0.1, 0.2, 0.3, 0.4]), ("mirror", [0.1, 0.2, 0.3, 0.5]), ("uniform", [0.9, 0.2, 0.05, 0.0])];
    for (bchm, ratios) in series {
        let mut text = format!("{header}\n0,0,4,1,0,0,1,1,0,\n");
        for (g, r) in ratios.iter().enumerate() {
            text += &format!("{},{},4,1,{r},{r},1,1,0,\n", g + 1, (g + 1) * 10);
        }
        fs::write(dir.join(format!("results/classic/sbox/sphere/d2/i1/{bchm}/run0.csv")), text).unwrap();
    }
    dir.join("results/manifest.json")
}

#[test]
fn cluster_merges_the_similar_pair_first() {
    let dir = tempfile::tempdir().unwrap();
    synthetic_cluster_manifest(dir.path());
    let o = bchmlab(
        &["cluster", "--manifest", "results/manifest.json", "--metric", "violation_probability", "--grid-points", "4"],
        dir.path(),
    );
    assert!(o.status.success(), "{}", stderr(&o));
    let results = dir.path().join("results");
    for f in ["similarity_violation_probability.csv", "dendrogram_violation_probability.json"] {
        assert!(results.join(f).is_file(), "{f}");
    }
    let tree: Value =
        serde_json::from_str(&fs::read_to_string(results.join("dendrogram_violation_probability.json")).unwrap()).unwrap();
    let kids = tree["children"].as_array().unwrap();
    let pair: Vec<&str> = kids[0]["children"].as_array().unwrap().iter().map(|c| c["label"].as_str().unwrap()).collect();
    assert_eq!(pair, vec!["mirror", "sat"]);
    assert_eq!(kids[1]["label"], "uniform");
    assert!(kids[0]["height"].as_f64().unwrap() < tree["height"].as_f64().unwrap());
    let nwk = fs::read_to_string(results.join("dendrogram_violation_probability.nwk")).unwrap();
    assert!(nwk.starts_with("((mirror:") && nwk.trim_end().ends_with(");"), "{nwk}");
}

#[test]
fn rank_reproduces_mean_ranks() {
    let dir = tempfile::tempdir().unwrap();
    write_json(
        &dir.path().join("sweep.json"),
        &json!({
            "functions": ["sphere", "rastrigin", "rosenbrock"],
            "instances": [1],
            "dimensions": [2],
            "engines": ["classic"],
            "bchms": ["sat", "mirror"],
            "runs_per_cell": 1,
            "budget_multiplier": 50,
            "output_directory": "results"
        }),
    );
    assert!(bchmlab(&["sweep", "--config", "sweep.json"], dir.path()).status.success());
    // sat wins on two functions, mirror on one
    let errors = [("sphere", 1.0, 2.0), ("rastrigin", 1.0, 2.0), ("rosenbrock", 3.0, 2.0)];
    for (f, sat, mirror) in errors {
        for (bchm, e) in [("sat", sat), ("mirror", mirror)] {
            let p = dir.path().join(format!("results/classic/sbox/{f}/d2/i1/{bchm}/run0.json"));
            let mut s: Value = serde_json::from_str(&fs::read_to_string(&p).unwrap()).unwrap();
            s["final_error"] = json!(e);
            write_json(&p, &s);
        }
    }
    let o = bchmlab(&["rank", "--manifest", "results/manifest.json", "--out", "tables"], dir.path());
    assert!(o.status.success(), "{}", stderr(&o));
    let table = fs::read_to_string(dir.path().join("tables/ranking.csv")).unwrap();
    let rows: Vec<Vec<&str>> = table.lines().map(|l| l.split(',').collect()).collect();
    assert_eq!(rows[0], vec!["method", "mean_rank", "rastrigin", "rosenbrock", "sphere"]);
    assert_eq!(rows[1][0], "sat");
    assert!((rows[1][1].parse::<f64>().unwrap() - 4.0 / 3.0).abs() < 1e-12);
    assert_eq!(rows[2][0], "mirror");
    assert!((rows[2][1].parse::<f64>().unwrap() - 5.0 / 3.0).abs() < 1e-12);
}

#[test]
fn reports_on_incomplete_manifest_exit_1_listing_gaps() {
    let dir = tempfile::tempdir().unwrap();
    small_sweep(dir.path());
    assert!(bchmlab(&["sweep", "--config", "sweep.json"], dir.path()).status.success());
    let gone = dir.path().join("results/classic/sbox/rastrigin/d2/i1/mirror/run2.csv");
    fs::remove_file(&gone).unwrap();
    for cmd in ["classify", "cluster", "rank"] {
        let o = bchmlab(&[cmd, "--manifest", "results/manifest.json"], dir.path());
        assert_eq!(o.status.code(), Some(1), "{cmd}");
        assert!(stderr(&o).contains("mirror/run2.csv"), "{cmd}: {}", stderr(&o));
    }
}

#[test]
fn list_prints_catalogue() {
    let dir = tempfile::tempdir().unwrap();
    let o = bchmlab(&["list"], dir.path());
    let text = String::from_utf8(o.stdout).unwrap();
    for id in ["sphere", "linear_slope", "sat", "vectorMidpoint", "dismiss", "adaptive", "lshade"] {
        assert!(text.lines().any(|l| l.trim() == id), "{id}");
    }
}
