//! Runs the full pipeline on the shipped desk fixture and prints the
//! results table.
//!
//! ```text
//! cargo run --release --example desk_experiment -- [config.json]
//! ```

use std::path::PathBuf;
use std::time::Instant;

use verdec::harness::{render_table, run_experiment, ExperimentConfig};

fn main() -> verdec::Result<()> {
    let path = std::env::args()
        .nth(1)
        .map(PathBuf::from)
        .unwrap_or_else(|| {
            PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("fixtures/desk/experiment.json")
        });
    let config = ExperimentConfig::load(&path)?;
    let start = Instant::now();
    let result = run_experiment(&config)?;
    print!("{}", render_table(&result.rows));
    if let Some(ppl) = result.reference_perplexity {
        println!("\nreference perplexity: {ppl:.3}");
    }
    println!("\ncorrelations with the supported / verified indicators:");
    for c in &result.correlations {
        let r = c
            .pearson
            .map_or("undefined".to_string(), |r| format!("{r:+.3}"));
        println!(
            "  {:<18} {:<10} n={:<5} r={r}",
            c.feature, c.target, c.samples
        );
    }
    println!(
        "\n{} generations, {} failed cells, {:.1}s; artifacts in {}",
        result.generations.len(),
        result.diagnostics.len(),
        start.elapsed().as_secs_f64(),
        config.output_dir.display()
    );
    Ok(())
}
