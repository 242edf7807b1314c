mod common;

use common::{e2e_workspace, raw_pair_keys, run_pipeline_bin};

const BIN: &str = env!("CARGO_BIN_EXE_linksynth");

#[test]
fn pipeline_produces_dataset_and_stats() {
    let (dir, cfg) = e2e_workspace();
    let o = run_pipeline_bin(BIN, &cfg, &[]);
    assert_eq!(
        o.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&o.stderr)
    );
    let out = dir.path().join("e2e-out");
    let dataset = std::fs::read_to_string(out.join("dataset.jsonl")).unwrap();
    assert_eq!(dataset.lines().count(), 7);
    let stats: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out.join("stats.json")).unwrap()).unwrap();
    assert_eq!(stats["overall"]["qa_chars"]["count"], 7);
    assert_eq!(stats["composition"]["dual_link"]["count"], 3);
    assert_eq!(stats["composition"]["co_mention"]["count"], 4);
}

#[test]
fn library_entry_point_matches_binary() {
    let (dir, cfg) = e2e_workspace();
    let config = linksynth::PipelineConfig::load(&cfg).unwrap();
    let client = config.endpoint.build_client().unwrap();
    let rt = tokio::runtime::Runtime::new().unwrap();
    let report = rt
        .block_on(linksynth::pipeline::run_pipeline(&config, client))
        .unwrap();
    assert_eq!(report.discovery.dual_link_pairs, 3);
    assert_eq!(report.discovery.co_mention_pairs, 4);
    assert_eq!(report.validation.accepted, 7);

    let (dir2, cfg2) = e2e_workspace();
    assert_eq!(run_pipeline_bin(BIN, &cfg2, &[]).status.code(), Some(0));
    assert_eq!(
        std::fs::read(dir.path().join("e2e-out/dataset.jsonl")).unwrap(),
        std::fs::read(dir2.path().join("e2e-out/dataset.jsonl")).unwrap()
    );
}

#[test]
fn half_run_then_resume() {
    let (dir, cfg) = e2e_workspace();
    let o = run_pipeline_bin(BIN, &cfg, &["--limit", "3"]);
    assert_eq!(o.status.code(), Some(0));
    let raw = dir.path().join("e2e-out/raw.jsonl");
    assert_eq!(raw_pair_keys(&raw).len(), 3);
    assert_eq!(run_pipeline_bin(BIN, &cfg, &[]).status.code(), Some(0));
    assert_eq!(raw_pair_keys(&raw).len(), 7);
}
