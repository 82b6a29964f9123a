//! Regenerates the synthetic desk fixture.
//!
//! ```text
//! cargo run --example make_desk_fixture -- [output_dir]
//! ```

use std::path::PathBuf;

use verdec::harness::desk::{generate, DeskSpec};

fn main() -> verdec::Result<()> {
    let dir = std::env::args()
        .nth(1)
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("fixtures/desk"));
    let fixture = generate(&DeskSpec::default())?;
    fixture.write(&dir)?;
    println!(
        "wrote {} facts, {} documents, {} validation and {} test prefixes to {}",
        fixture.facts.len(),
        fixture.documents.len(),
        fixture.validation.len(),
        fixture.test.len(),
        dir.display()
    );
    Ok(())
}
