//! Grid search over the delay length of delayed beam search on the
//! validation prefixes, reporting unique supported sentences per setting.
//!
//! ```text
//! cargo run --release --example delay_sweep
//! ```

use std::path::PathBuf;

use verdec::harness::{parse_grid, sweep, ExperimentConfig, Objective};

fn main() -> verdec::Result<()> {
    let mut config = ExperimentConfig::load(
        PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("fixtures/desk/experiment.json"),
    )?;
    config.output_dir = config.output_dir.with_file_name("desk-delay-sweep");
    let grid = parse_grid("delayed-bs:delay=1|2|4|8|16")?;
    let result = sweep(&config, &grid, Objective::UniqueSupported)?;
    print!("{}", result.render());
    println!();
    for row in &result.rows {
        if let Some(r) = &row.report {
            println!(
                "{:<40} unique supported {:>7.2}",
                row.config.to_string(),
                r.unique_supported
            );
        }
    }
    Ok(())
}
