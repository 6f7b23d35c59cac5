use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn edgebench(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_edgebench"))
        .args(args)
        .env("EDGEBENCH_LOG", "warn")
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

// Element-wise stub: 8.8 ms per image after a slow first call; every
// predict for the second dataset fails.
const STUB: &str = r#"n=0
loads=0
while IFS= read -r line; do
  case "$line" in
    *'"load"'*) n=0; loads=$((loads+1)); echo '{"ok":true,"load_ms":2.5}' ;;
    *'"predict"'*)
      n=$((n+1))
      if [ $loads -eq 2 ]; then echo '{"ok":false,"error":"memory error"}'; continue; fi
      if [ $n -eq 1 ]; then echo '{"ok":true,"wall_ms":40.0}'; else echo '{"ok":true,"wall_ms":8.8}'; fi ;;
    *'"quit"'*) exit 0 ;;
  esac
done
"#;

#[test]
fn help_and_usage_exit_codes() {
    let help = edgebench(&["--help"]);
    assert_eq!(help.status.code(), Some(0));
    assert!(stdout(&help).contains("convert-log"));
    assert_eq!(edgebench(&["fit", "--nope"]).status.code(), Some(2));
    let missing = edgebench(&["speedup", "--slow", "a1"]);
    assert_eq!(missing.status.code(), Some(2));
    assert!(stderr(&missing).contains("--fast"));
}

#[test]
fn report_on_empty_directory_fails() {
    let dir = tempfile::tempdir().unwrap();
    let out = edgebench(&["report", "--in", p(dir.path()), "--out", p(&dir.path().join("r"))]);
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr(&out).starts_with("EmptyBundle:"), "{}", stderr(&out));
    let out = edgebench(&["report", "--in", p(dir.path())]);
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr(&out).starts_with("EmptyBundle:"), "{}", stderr(&out));
}

#[test]
fn bench_run_with_shell_runner() {
    let dir = tempfile::tempdir().unwrap();
    let stub = dir.path().join("stub.sh");
    fs::write(&stub, STUB).unwrap();
    let plan = dir.path().join("plan.json");
    fs::write(
        &plan,
        r#"{"task":"od_segmentation","device":"edge_tpu","dataset_sizes":[10,30,100],"model":"od.tflite",
            "input_shape":[8,8,3],"data":"synthetic-files"}"#,
    )
    .unwrap();
    let out_dir = dir.path().join("out");
    let runner = format!("sh '{}'", p(&stub));
    let out = edgebench(&["bench", "run", "--plan", p(&plan), "--runner", &runner, "--no-sleep", "--out", p(&out_dir)]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let text = stdout(&out);
    assert!(text.contains("edge_tpu 10: 8.80 ± 0.00 ms"), "{text}");
    assert!(text.contains("edge_tpu 30: anomalous (memory error)"), "{text}");
    assert!(text.contains("edge_tpu 100: 8.80 ± 0.00 ms"), "{text}");

    let latency = fs::read_to_string(out_dir.join("latency.csv")).unwrap();
    let records = edgebench::fixture::parse_latency_csv(&latency).unwrap();
    assert_eq!(records.len(), 3);
    assert!(records[1].anomalous);
    let result: serde_json::Value = serde_json::from_str(&fs::read_to_string(out_dir.join("result.json")).unwrap()).unwrap();
    assert_eq!(result["runs"].as_array().unwrap().len(), 3);
    assert_eq!(fs::read_dir(out_dir.join("data")).unwrap().count(), 100);
}

#[test]
fn bench_run_with_missing_runner() {
    let dir = tempfile::tempdir().unwrap();
    let plan = dir.path().join("plan.json");
    fs::write(&plan, r#"{"task":"fundus_classification","device":"edge_tpu","dataset_sizes":[10]}"#).unwrap();
    let out = edgebench(&[
        "bench", "run", "--plan", p(&plan), "--runner", "/nonexistent/runner", "--no-sleep", "--out", p(dir.path()),
    ]);
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr(&out).starts_with("RunnerLaunchFailure:"));
}

#[test]
fn convert_then_analyze_trace() {
    let dir = tempfile::tempdir().unwrap();
    // 1 Hz tester export: idle 2 W, load 3 W, inference 4 W then 5 W.
    let mut export = String::from("Time\tVoltage(V)\tCurrent(mA)\n");
    let mut second = 0;
    for (len, watts) in [(12, 2.0), (3, 3.0), (5, 2.0), (10, 4.0), (12, 2.0), (3, 3.0), (5, 2.0), (10, 5.0), (4, 2.0)] {
        for _ in 0..len {
            let ma = watts / 5.0 * 1000.0;
            export.push_str(&format!("10:{:02}:{:02}\t5.00\t{ma}\n", second / 60, second % 60));
            second += 1;
        }
    }
    let raw = dir.path().join("export.txt");
    fs::write(&raw, export).unwrap();
    let log = dir.path().join("power.csv");
    let out = edgebench(&["convert-log", "--in", p(&raw), "--out", p(&log)]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    assert!(stdout(&out).starts_with("64 samples"));

    let plan = dir.path().join("plan.json");
    fs::write(&plan, r#"{"task":"od_segmentation","device":"edge_tpu","dataset_sizes":[10,20]}"#).unwrap();
    let latency = dir.path().join("latency.csv");
    fs::write(
        &latency,
        "task,device,power_mode,dataset_size,per_image_ms,std_ms,anomalous,error\n\
         od_segmentation,edge_tpu,,10,8.80,1.10,false,\n\
         od_segmentation,edge_tpu,,20,10.00,1.00,false,\n",
    )
    .unwrap();
    let out_dir = dir.path().join("analysis");
    let out = edgebench(&[
        "trace", "analyze", "--log", p(&log), "--plan", p(&plan), "--latency", p(&latency), "--out", p(&out_dir),
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let text = stdout(&out);
    assert!(text.contains("dataset 10: 4.00 ± 0.00 W"), "{text}");
    assert!(text.contains("dataset 20: 5.00 ± 0.00 W"), "{text}");
    assert!(text.contains("mean power 4.5 ± 0.5 W"), "{text}");
    let energy = edgebench::fixture::parse_energy_csv(&fs::read_to_string(out_dir.join("energy.csv")).unwrap()).unwrap();
    assert_eq!(energy.len(), 2);
    assert!((energy[0].energy_mj - 35.2).abs() < 1e-9);
    assert!((energy[1].energy_mj - 50.0).abs() < 1e-9);
    let phases = fs::read_to_string(out_dir.join("phases.csv")).unwrap();
    assert_eq!(phases.lines().count(), 1 + 6);

    // One plateau too few for the plan.
    fs::write(&plan, r#"{"task":"od_segmentation","device":"edge_tpu","dataset_sizes":[10,20,30]}"#).unwrap();
    let out = edgebench(&["trace", "analyze", "--log", p(&log), "--plan", p(&plan), "--out", p(&out_dir)]);
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr(&out).starts_with("CountMismatch:"), "{}", stderr(&out));
}

#[test]
fn quality_commands() {
    let dir = tempfile::tempdir().unwrap();
    let (r, c) = (dir.path().join("ref"), dir.path().join("cand"));
    fs::create_dir_all(&r).unwrap();
    fs::create_dir_all(&c).unwrap();
    fs::write(r.join("a.pgm"), "P2\n2 2\n255\n255 0\n0 255\n").unwrap();
    fs::write(c.join("a.pgm"), "P2\n2 2\n255\n255 0\n0 255\n").unwrap();
    fs::write(r.join("b.pgm"), "P2\n2 2\n255\n255 255\n0 0\n").unwrap();
    fs::write(c.join("b.pgm"), "P2\n2 2\n255\n255 0\n0 0\n").unwrap();
    let dice_csv = dir.path().join("dice.csv");
    let out = edgebench(&["quality", "dice", "--ref", p(&r), "--cand", p(&c), "--out", p(&dice_csv)]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    assert_eq!(stdout(&out).trim(), "dice=0.833 ± 0.167 n=2");

    let (rp, cp) = (dir.path().join("ref.csv"), dir.path().join("cand.csv"));
    fs::write(&rp, "image_id,p_glaucoma,p_healthy\na,0.9,0.1\nb,0.2,0.8\n").unwrap();
    fs::write(&cp, "image_id,p_glaucoma,p_healthy\nb,0.6,0.4\na,0.8,0.2\n").unwrap();
    let err_csv = dir.path().join("err.csv");
    let out = edgebench(&["quality", "classify", "--ref", p(&rp), "--cand", p(&cp), "--out", p(&err_csv)]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    assert_eq!(stdout(&out).trim(), "mean_error=0.250 ± 0.150 n=2 label_changes=1");

    let report = dir.path().join("report");
    let out = edgebench(&["report", "--in", p(dir.path()), "--out", p(&report), "--format", "markdown"]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let md = fs::read_to_string(report.join("all/dice.md")).unwrap();
    assert!(md.contains("0.833 ± 0.167"), "{md}");

    fs::remove_file(c.join("b.pgm")).unwrap();
    let out = edgebench(&["quality", "dice", "--ref", p(&r), "--cand", p(&c)]);
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr(&out).starts_with("UnmatchedFile:"));
}

#[test]
fn replay_fit_speedup_chain() {
    let dir = tempfile::tempdir().unwrap();
    let (slow, fast) = (dir.path().join("maxn.csv"), dir.path().join("edge.csv"));
    for (dev, path) in [("maxwell_gpu:MaxN", &slow), ("edge_tpu", &fast)] {
        let out = edgebench(&["replay", "--fixture", "a3", "--task", "fundus", "--device", dev, "--out", p(path)]);
        assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    }
    let out = edgebench(&["speedup", "--slow", p(&slow), "--fast", p(&fast)]);
    assert!(stdout(&out).starts_with("speedup=1.25 "), "{}", stdout(&out));

    let out = edgebench(&["replay", "--fixture", "a1", "--task", "od", "--device", "colab_tpu"]);
    let series = dir.path().join("tpu.csv");
    fs::write(&series, out.stdout).unwrap();
    let out = edgebench(&["fit", "--series", p(&series)]);
    assert_eq!(stdout(&out).trim(), "OT=672.867 IT=5.742 residual_rms=0.415");
}
