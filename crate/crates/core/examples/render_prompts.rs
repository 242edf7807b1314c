//! Render the three prompt variants and show passage truncation.
//!
//! ```bash
//! cargo run -p linksynth --example render_prompts
//! ```

use linksynth::synthesis::{
    render_cross_doc_prompt, render_single_doc_prompt, render_three_doc_prompt, truncate_passage,
};
use linksynth::Document;

fn doc(title: &str, text: &str) -> Document {
    Document {
        doc_id: 0,
        title: title.into(),
        text: text.into(),
        links: vec![],
    }
}

fn main() -> linksynth::Result<()> {
    let a = doc(
        "Ada Lovelace",
        "Ada Lovelace wrote the first published algorithm for the Analytical Engine.",
    );
    let b = doc(
        "Analytical Engine",
        "The Analytical Engine was a mechanical computer designed by Charles Babbage.",
    );
    let hub = doc(
        "Charles Babbage",
        "Charles Babbage was an English mathematician and engineer.",
    );

    println!("{}\n", render_cross_doc_prompt(&a, &b, 50_000)?);
    println!("{}\n", render_single_doc_prompt(&a, 50_000)?);
    println!("{}\n", render_three_doc_prompt(&a, &b, Some(&hub), 50_000)?);

    let long = "word ".repeat(20);
    println!("truncated to 23 chars: {:?}", truncate_passage(&long, 23));
    Ok(())
}
