use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use vtid_core::ingest::pcap::{build_ethernet_frame, CaptureWriter, LINKTYPE_ETHERNET};
use vtid_core::ingest::tls::build_client_hello;
use vtid_core::ingest::Flow;
use vtid_core::synth::{burst_corpus, write_corpus, CorpusConfig};

fn vtid(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_vtid")).args(args).output().unwrap()
}

fn ok(args: &[&str]) -> String {
    let out = vtid(args);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout).unwrap()
}

fn wine() -> String {
    let p = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../data/wine.dat");
    p.to_string_lossy().into_owned()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn corpus(n: usize) -> Vec<Flow> {
    burst_corpus(&CorpusConfig {
        flows_per_class: n,
        seed: 5,
        ..Default::default()
    })
}

fn write_pcap(path: &Path, flows: &[Flow]) {
    let base = 1_700_000_000_000_000u64;
    let mut frames = Vec::new();
    for (i, f) in flows.iter().enumerate() {
        let host = format!("cdn{i}.{}.example", f.label().unwrap());
        let hello = f.packets().iter().position(|p| f.is_upstream(p) && p.payload_len >= 200).unwrap();
        for (j, p) in f.packets().iter().enumerate() {
            let t = base + i as u64 * 1000 + (p.timestamp * 1e6).round() as u64;
            let prefix = if j == hello { build_client_hello(&host) } else { Vec::new() };
            frames.push((t, build_ethernet_frame(p, &prefix)));
        }
    }
    frames.sort_by_key(|f| f.0);
    let mut w = CaptureWriter::create(path, LINKTYPE_ETHERNET).unwrap();
    for (t, frame) in &frames {
        w.write_frame(*t, frame).unwrap();
    }
    w.into_inner().unwrap();
}

fn data_rows(csv: &str) -> Vec<Vec<String>> {
    csv.lines()
        .filter(|l| !l.starts_with('#'))
        .skip(1)
        .map(|l| l.split(',').map(str::to_owned).collect())
        .collect()
}

#[test]
fn extract_labels_capture_flows_by_sni() {
    let dir = tempfile::tempdir().unwrap();
    let pcap = dir.path().join("capture.pcap");
    write_pcap(&pcap, &corpus(2));
    let rules = dir.path().join("rules.tsv");
    fs::write(&rules, "*.bursty.example\tlive\n*.STEADY.example\tvod\n").unwrap();
    let out = dir.path().join("features.csv");
    let stdout = ok(&["extract", s(&pcap), "-o", s(&out), "--labels", s(&rules)]);
    assert!(stdout.contains("4 flows assembled"), "{stdout}");
    let text = fs::read_to_string(&out).unwrap();
    assert_eq!(text.lines().next(), Some("# elephant_threshold=500"));
    let header: Vec<&str> = text.lines().nth(1).unwrap().split(',').collect();
    assert_eq!((header[0], header.len(), header[90]), ("flow_id", 91, "label"));
    let mut labels: Vec<String> = data_rows(&text).into_iter().map(|r| r[90].clone()).collect();
    labels.sort();
    assert_eq!(labels, ["live", "live", "vod", "vod"]);
}

#[test]
fn extract_labels_by_directory_and_drops_unlabeled() {
    let dir = tempfile::tempdir().unwrap();
    let traces = dir.path().join("traces");
    write_corpus(&traces, &corpus(3)).unwrap();
    let stray = dir.path().join("stray.pcap");
    write_pcap(&stray, &corpus(1));
    let out = dir.path().join("f.csv");
    let stdout = ok(&["extract", s(&traces), s(&stray), "-o", s(&out)]);
    assert!(stdout.contains("8 flows assembled, 6 labeled, 6 kept"), "{stdout}");
    let rows = data_rows(&fs::read_to_string(&out).unwrap());
    assert_eq!(rows.len(), 6);
    assert!(rows.iter().all(|r| r[0].starts_with(&format!("{}/", r[90]))));

    let none = dir.path().join("none.csv");
    ok(&["extract", s(&traces), "-o", s(&none), "--elephant-threshold", "100000"]);
    assert!(data_rows(&fs::read_to_string(&none).unwrap()).is_empty());
    let all = dir.path().join("all.csv");
    ok(&["extract", s(&traces), "-o", s(&all), "--elephant-threshold", "100000", "--no-elephant-filter"]);
    let text = fs::read_to_string(&all).unwrap();
    assert!(text.starts_with("# elephant_filter=off"));
    assert_eq!(data_rows(&text).len(), 6);
}

#[test]
fn rank_writes_every_feature_once() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("rank.csv");
    ok(&["rank", "--dataset", &wine(), "-o", s(&out), "--support", "index"]);
    let text = fs::read_to_string(&out).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("rank,feature_name,emd_score"));
    let rows: Vec<Vec<&str>> = lines.map(|l| l.split(',').collect()).collect();
    assert_eq!(rows.len(), 13);
    let scores: Vec<f64> = rows.iter().map(|r| r[2].parse().unwrap()).collect();
    assert!(scores.windows(2).all(|w| w[0] >= w[1]));
    assert!(rows.iter().enumerate().all(|(i, r)| r[0] == (i + 1).to_string()));
}

#[test]
fn eval_requires_a_seed() {
    let dir = tempfile::tempdir().unwrap();
    let out = vtid(&["eval", "--dataset", &wine(), "--out-dir", s(dir.path())]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("--seed"));
}

#[test]
fn bad_inputs_fail_cleanly() {
    let dir = tempfile::tempdir().unwrap();
    let d = s(dir.path());
    let bad_fraction = vtid(&["eval", "--dataset", &wine(), "--out-dir", d, "--seed", "1", "--fractions", "0.1:x:0.1"]);
    assert!(!bad_fraction.status.success());
    let out_of_range = vtid(&["eval", "--dataset", &wine(), "--out-dir", d, "--seed", "1", "--fractions", "1.5"]);
    assert!(!out_of_range.status.success());
    let missing = vtid(&["rank", "--dataset", "/nonexistent.csv", "-o", "x.csv"]);
    assert!(!missing.status.success());
    let cfg = dir.path().join("c.toml");
    fs::write(&cfg, "[rank]\nmax_interval = 3\n").unwrap();
    let typo = vtid(&["--config", s(&cfg), "rank"]);
    assert!(!typo.status.success());
    assert!(String::from_utf8_lossy(&typo.stderr).contains("max_interval"));
}

#[test]
fn flags_override_config_file() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("c.toml");
    let out = dir.path().join("r.csv");
    fs::write(
        &cfg,
        format!("[rank]\ndataset = {:?}\noutput = {:?}\n[rank.addfs]\nmax_intervals = 2\nconfidence = 0.9\n", wine(), s(&out)),
    )
    .unwrap();
    let echo = dir.path().join("echo.toml");
    ok(&["--config", s(&cfg), "--echo-config", s(&echo), "rank", "--max-intervals", "7"]);
    let effective: toml::Value = toml::from_str(&fs::read_to_string(&echo).unwrap()).unwrap();
    let addfs = &effective["rank"]["addfs"];
    assert_eq!(addfs["max_intervals"].as_integer(), Some(7));
    assert_eq!(addfs["confidence"].as_float(), Some(0.9));
    assert!(out.exists());
}

#[test]
fn thread_count_does_not_change_results() {
    let dir = tempfile::tempdir().unwrap();
    let mut outputs = Vec::new();
    for jobs in ["1", "3"] {
        let d: PathBuf = dir.path().join(jobs);
        let stdout = ok(&[
            "--jobs", jobs, "eval", "--dataset", &wine(), "--out-dir", s(&d), "--seed", "4",
            "--selector", "relief", "--classifier", "knn", "--k", "3", "--fractions", "0.2,0.5",
        ]);
        assert!(stdout.contains("relief"));
        outputs.push(fs::read(d.join("sweep.csv")).unwrap());
    }
    assert_eq!(outputs[0], outputs[1]);
}

#[test]
fn compare_skips_wilcoxon_for_one_dataset() {
    let dir = tempfile::tempdir().unwrap();
    ok(&[
        "compare", "--datasets", &wine(), "--out-dir", s(dir.path()), "--seed", "2",
        "--selectors", "addfs,pearson", "--fractions", "0.5", "--folds", "3",
    ]);
    let text = fs::read_to_string(dir.path().join("comparison.csv")).unwrap();
    assert_eq!(text.lines().next(), Some("dataset,selector,fraction,accuracy"));
    assert_eq!(text.lines().count(), 3);
    assert!(!dir.path().join("wilcoxon_0.5.csv").exists());
}
