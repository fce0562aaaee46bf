use std::path::Path;
use std::process::{Command, Output};

fn rlhh(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_rlhh"))
        .args(args)
        .output()
        .expect("spawn rlhh")
}

fn assert_ok(out: &Output) {
    assert!(
        out.status.success(),
        "stdout: {}\nstderr: {}",
        String::from_utf8_lossy(&out.stdout),
        String::from_utf8_lossy(&out.stderr)
    );
}

fn path_str(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn gen_bdsp_is_deterministic_and_loadable() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.inst");
    let b = dir.path().join("b.inst");
    assert_ok(&rlhh(&["gen-bdsp", "--n", "10", "--seed", "3", "--out", path_str(&a)]));
    assert_ok(&rlhh(&["gen-bdsp", "--n", "10", "--seed", "3", "--out", path_str(&b)]));
    let ta = std::fs::read(&a).unwrap();
    assert_eq!(ta, std::fs::read(&b).unwrap());
    assert!(!ta.is_empty());
}

#[test]
fn solve_prints_csv_row_and_writes_trace() {
    let dir = tempfile::tempdir().unwrap();
    let inst = dir.path().join("i.inst");
    let trace = dir.path().join("run.trace");
    assert_ok(&rlhh(&["gen-bdsp", "--n", "8", "--seed", "1", "--out", path_str(&inst)]));
    let out = rlhh(&[
        "solve",
        "--instance",
        path_str(&inst),
        "--selector",
        "full",
        "--trace",
        path_str(&trace),
    ]);
    assert_ok(&out);
    let stdout = String::from_utf8(out.stdout).unwrap();
    let mut lines = stdout.lines();
    assert!(lines.next().unwrap().starts_with("instance,kind,n,selector"));
    let row = lines.next().unwrap();
    assert!(row.contains(",bdsp,8,full,"));
    assert!(trace.exists());
}

#[test]
fn solve_rejects_unknown_selector_with_machine_readable_error() {
    let dir = tempfile::tempdir().unwrap();
    let inst = dir.path().join("i.inst");
    assert_ok(&rlhh(&["gen-bdsp", "--n", "5", "--seed", "0", "--out", path_str(&inst)]));
    let out = rlhh(&["solve", "--instance", path_str(&inst), "--selector", "bogus"]);
    assert!(!out.status.success());
    let stderr = String::from_utf8(out.stderr).unwrap();
    let line = stderr.lines().last().unwrap();
    assert!(line.starts_with("error: {"), "{stderr}");
    assert!(line.contains("bogus"));
}

#[test]
fn identical_seed_and_config_give_identical_traces() {
    let dir = tempfile::tempdir().unwrap();
    let inst = dir.path().join("i.inst");
    assert_ok(&rlhh(&["gen-bdsp", "--n", "10", "--seed", "4", "--out", path_str(&inst)]));
    let run = |name: &str| {
        let trace = dir.path().join(name);
        assert_ok(&rlhh(&[
            "solve",
            "--instance",
            path_str(&inst),
            "--selector",
            "random",
            "--seed",
            "9",
            "--trace",
            path_str(&trace),
        ]));
        std::fs::read(trace).unwrap()
    };
    assert_eq!(run("a.trace"), run("b.trace"));
}

#[test]
fn bench_writes_rows_and_summary() {
    let dir = tempfile::tempdir().unwrap();
    let i1 = dir.path().join("i1.inst");
    let i2 = dir.path().join("i2.inst");
    let rows = dir.path().join("rows.csv");
    let summary = dir.path().join("summary.csv");
    assert_ok(&rlhh(&["gen-bdsp", "--n", "8", "--seed", "1", "--out", path_str(&i1)]));
    assert_ok(&rlhh(&["gen-bdsp", "--n", "8", "--seed", "2", "--out", path_str(&i2)]));
    assert_ok(&rlhh(&[
        "bench",
        "--instances",
        path_str(&i1),
        path_str(&i2),
        "--selectors",
        "be1,full",
        "--out",
        path_str(&rows),
        "--summary",
        path_str(&summary),
    ]));
    let rows_text = std::fs::read_to_string(&rows).unwrap();
    assert_eq!(rows_text.lines().count(), 1 + 4); // header + 2 instances × 2 selectors
    // No rlhh selector in the sweep: summary holds only its header.
    let summary_text = std::fs::read_to_string(&summary).unwrap();
    assert_eq!(summary_text.lines().count(), 1);
}

#[test]
fn train_then_solve_with_model_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let inst = dir.path().join("i.inst");
    assert_ok(&rlhh(&["gen-bdsp", "--n", "10", "--seed", "6", "--out", path_str(&inst)]));
    let model = dir.path().join("m.rlhh.model");
    let log = dir.path().join("train.jsonl");
    let config = dir.path().join("train.toml");
    std::fs::write(
        &config,
        format!(
            r#"
episodes = 3
seed = 5
instances = [{:?}]
n_range = [6, 10]
model_out = {:?}
log_out = {:?}

[hyper]
hidden = [16]
batch_size = 8
buffer_capacity = 128
"#,
            path_str(&inst),
            path_str(&model),
            path_str(&log)
        ),
    )
    .unwrap();
    assert_ok(&rlhh(&["train", "--config", path_str(&config)]));
    assert!(model.exists());
    let log_text = std::fs::read_to_string(&log).unwrap();
    assert_eq!(log_text.lines().count(), 3);

    // Same config and seed twice: bytewise-identical checkpoint.
    let saved = std::fs::read(&model).unwrap();
    assert_ok(&rlhh(&["train", "--config", path_str(&config)]));
    assert_eq!(saved, std::fs::read(&model).unwrap());

    // Greedy inference is deterministic.
    let selector = format!("rlhh:{}", path_str(&model));
    let solve = || {
        let out = rlhh(&["solve", "--instance", path_str(&inst), "--selector", &selector]);
        assert_ok(&out);
        String::from_utf8(out.stdout).unwrap()
    };
    assert_eq!(solve(), solve());
}

#[test]
fn model_kind_mismatch_is_rejected() {
    // Train on BDSP, then try to solve... there is only one generator in the
    // CLI, so fabricate the mismatch by training a BDSP model and asking the
    // loader for a VRPTW run via a crafted Solomon-format instance file.
    let dir = tempfile::tempdir().unwrap();
    let bdsp = dir.path().join("b.inst");
    assert_ok(&rlhh(&["gen-bdsp", "--n", "8", "--seed", "2", "--out", path_str(&bdsp)]));
    let model = dir.path().join("m.rlhh.model");
    let config = dir.path().join("t.toml");
    std::fs::write(
        &config,
        format!(
            "episodes = 1\nseed = 1\ninstances = [{:?}]\nmodel_out = {:?}\n\n[hyper]\nhidden = [8]\nbatch_size = 4\n",
            path_str(&bdsp),
            path_str(&model)
        ),
    )
    .unwrap();
    assert_ok(&rlhh(&["train", "--config", path_str(&config)]));

    let vrptw = dir.path().join("v.inst");
    let body = "FORMAT v1\nKIND VRPTW\nNAME tiny\nCAPACITY 100\nVEHICLE_FIXED_COST 0\n\
DEPOT 0 50 50 0 0 1000 0\nCUSTOMERS 2\n1 10 10 5 0 900 10\n2 20 20 5 0 900 10\nEND\n";
    std::fs::write(&vrptw, body).unwrap();
    let selector = format!("rlhh:{}", path_str(&model));
    let out = rlhh(&["solve", "--instance", path_str(&vrptw), "--selector", &selector]);
    assert!(!out.status.success());
    let stderr = String::from_utf8(out.stderr).unwrap();
    assert!(stderr.contains("mismatch"), "{stderr}");
}

#[test]
fn trace_export_produces_non_increasing_series() {
    let dir = tempfile::tempdir().unwrap();
    let inst = dir.path().join("i.inst");
    let trace = dir.path().join("full.trace");
    let csv = dir.path().join("series.csv");
    assert_ok(&rlhh(&["gen-bdsp", "--n", "9", "--seed", "8", "--out", path_str(&inst)]));
    assert_ok(&rlhh(&[
        "solve",
        "--instance",
        path_str(&inst),
        "--selector",
        "bn",
        "--trace",
        path_str(&trace),
    ]));
    assert_ok(&rlhh(&["trace-export", path_str(&trace), "--out", path_str(&csv)]));
    let text = std::fs::read_to_string(&csv).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next().unwrap(), "series,iteration,millis,objective");
    let objectives: Vec<f64> = lines
        .map(|l| l.rsplit(',').next().unwrap().parse().unwrap())
        .collect();
    assert!(!objectives.is_empty());
    for pair in objectives.windows(2) {
        assert!(pair[1] <= pair[0] + 1e-7);
    }
}
