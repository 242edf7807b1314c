//! Dual-link and co-mention discovery on a small hand-made graph, with and
//! without a hub in-degree cap.
//!
//! ```bash
//! cargo run -p linksynth --example discover_motifs
//! ```

use linksynth::motif::{discover_co_mentions, discover_dual_links};
use linksynth::{build_graph, discover, DiscoveryConfig, Document};

fn page(id: u32, title: &str, links: &[&str]) -> Document {
    Document {
        doc_id: id,
        title: title.into(),
        text: String::new(),
        links: links.iter().map(|s| s.to_string()).collect(),
    }
}

fn main() -> linksynth::Result<()> {
    // Paris <-> France is a dual link; Louvre -> Paris with both -> France is a co-mention.
    let docs = vec![
        page(0, "Paris", &["France", "Europe"]),
        page(1, "France", &["Paris", "Europe"]),
        page(2, "Louvre", &["Paris", "France"]),
        page(3, "Europe", &[]),
        page(4, "Seine", &["Paris", "France", "Europe"]),
    ];
    let graph = build_graph(&docs)?;

    for p in discover_dual_links(&graph) {
        println!(
            "dual-link  {} <-> {}",
            graph.title(p.a).unwrap(),
            graph.title(p.b).unwrap()
        );
    }

    let all = DiscoveryConfig {
        emit_all_hubs: true,
        ..DiscoveryConfig::default()
    };
    let (co, _) = discover_co_mentions(&graph, &all)?;
    for p in &co {
        println!(
            "co-mention {} -> {} via {}",
            graph.title(p.a).unwrap(),
            graph.title(p.b).unwrap(),
            graph.title(p.hub.unwrap()).unwrap()
        );
    }

    // every hub here has in-degree 3, so a cap of 2 drops them all
    let capped = DiscoveryConfig {
        hub_in_degree_cap: 2,
        ..DiscoveryConfig::default()
    };
    let (pairs, report) = discover(&graph, &capped)?;
    println!("capped: {} pairs, {report:?}", pairs.len());
    Ok(())
}
