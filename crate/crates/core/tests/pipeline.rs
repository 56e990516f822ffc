use std::collections::HashMap;

use vtid_core::dataset::LabeledDataset;
use vtid_core::features::{
    extract_features, extract_matrix_with, feature_dictionary, FeatureMatrix, PeakParams, FEATURE_COUNT,
    FEATURE_NAMES,
};
use vtid_core::ingest::pcap::{build_arp_frame, build_ethernet_frame, CaptureWriter, LINKTYPE_ETHERNET};
use vtid_core::ingest::tls::build_client_hello;
use vtid_core::ingest::{
    assemble_flows, filter_elephant, label_flows, read_capture, read_text_trace, Flow, LabelRules, PacketRecord,
    DEFAULT_ELEPHANT_THRESHOLD,
};
use vtid_core::synth::{burst_corpus, write_corpus, CorpusConfig, BURSTY, STEADY};
use vtid_core::Exec;

fn corpus() -> Vec<Flow> {
    burst_corpus(&CorpusConfig {
        flows_per_class: 2,
        seed: 77,
        ..Default::default()
    })
}

fn close(a: f64, b: f64) -> bool {
    a == b || (a - b).abs() <= 1e-9 * a.abs().max(b.abs()).max(1.0)
}

#[test]
fn capture_round_trip_preserves_features() {
    let flows = corpus();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("mixed.pcap");
    let base = 1_700_000_000_000_000u64;
    let mut tagged: Vec<(u64, PacketRecord, Vec<u8>)> = Vec::new();
    for (i, f) in flows.iter().enumerate() {
        let host = format!("edge{i}.{}.example", f.label().unwrap());
        let hello_at = f
            .packets()
            .iter()
            .position(|p| f.is_upstream(p) && p.payload_len >= 200)
            .unwrap();
        for (j, p) in f.packets().iter().enumerate() {
            let offset = i as u64 * 1_000;
            let micros = base + offset + (p.timestamp * 1e6).round() as u64;
            let prefix = if j == hello_at { build_client_hello(&host) } else { Vec::new() };
            tagged.push((micros, p.clone(), prefix));
        }
    }
    tagged.sort_by_key(|t| t.0);
    let mut w = CaptureWriter::create(&path, LINKTYPE_ETHERNET).unwrap();
    w.write_frame(base, &build_arp_frame()).unwrap();
    for (micros, p, prefix) in &tagged {
        w.write_frame(*micros, &build_ethernet_frame(p, prefix)).unwrap();
    }
    w.into_inner().unwrap();

    let packets = read_capture(&path).unwrap();
    assert_eq!(packets.len(), tagged.len());
    let assembled = filter_elephant(assemble_flows(packets), DEFAULT_ELEPHANT_THRESHOLD);
    assert_eq!(assembled.len(), flows.len());
    let rules = LabelRules::parse("*.bursty.example\tbursty\n*.STEADY.example\tsteady\n").unwrap();
    let labeled = label_flows(assembled, Some(&rules), None);
    assert!(labeled.unlabeled.is_empty());

    let originals: HashMap<String, &Flow> = flows.iter().map(|f| (f.key().to_string(), f)).collect();
    let params = PeakParams::default();
    for got in &labeled.flows {
        let want = originals[&got.key().to_string()];
        assert_eq!(got.label(), want.label());
        assert_eq!(got.client(), want.client());
        let a = extract_features(got, &params).unwrap();
        let b = extract_features(want, &params).unwrap();
        for (k, name) in FEATURE_NAMES.iter().enumerate() {
            assert!(close(a.values[k], b.values[k]), "{name}: {} vs {}", a.values[k], b.values[k]);
        }
    }
}

#[test]
fn text_corpus_round_trip() {
    let flows = corpus();
    let dir = tempfile::tempdir().unwrap();
    write_corpus(dir.path(), &flows).unwrap();
    for f in &flows {
        let path = dir.path().join(f.label().unwrap()).join(format!("{}.trace", f.id()));
        let back = read_text_trace(path).unwrap();
        assert_eq!(back, f.packets());
    }
}

#[test]
fn feature_census() {
    let flows = corpus();
    let m = extract_matrix_with(&flows, &PeakParams::default(), Exec::Parallel).unwrap();
    assert_eq!(m, extract_matrix_with(&flows, &PeakParams::default(), Exec::Sequential).unwrap());
    let mut csv = Vec::new();
    m.write_csv(&mut csv).unwrap();
    let text = String::from_utf8(csv).unwrap();
    let header: Vec<&str> = text.lines().next().unwrap().split(',').collect();
    assert_eq!(header.len(), FEATURE_COUNT + 2);
    assert_eq!(&header[1..=FEATURE_COUNT], &FEATURE_NAMES[..]);
    let dict: Vec<String> = feature_dictionary()
        .lines()
        .filter(|l| !l.starts_with('#'))
        .map(|l| l.split('\t').next().unwrap().to_string())
        .collect();
    assert_eq!(dict, FEATURE_NAMES.map(String::from).to_vec());

    let parsed = vtid_core::dataset::parse_tabular(&text).unwrap().dataset;
    let direct = LabeledDataset::from_feature_matrix(&m).unwrap();
    assert_eq!(parsed, direct);
    assert_eq!(direct.class_names(), &[BURSTY.to_string(), STEADY.to_string()]);
    let _: &FeatureMatrix = &m;
}
