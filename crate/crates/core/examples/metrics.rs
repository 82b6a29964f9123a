//! Verifiability metrics on hand-made verdicts, the 4-gram proportion and
//! Pearson correlation.
//!
//! ```text
//! cargo run --example metrics
//! ```

use verdec::factcheck::Verdict;
use verdec::metrics::{
    compute_metrics, dedupe_verdicts, fourgram_proportion, pearson, percent, PrefixVerdicts,
};

fn main() -> verdec::Result<()> {
    let nei = || Verdict::not_enough_info(0.0);
    let all = vec![
        PrefixVerdicts {
            prefix_id: "p1".into(),
            verdicts: vec![
                Verdict::supported(["f1"]),
                Verdict::supported(["f2"]),
                nei(),
                nei(),
                nei(),
            ],
        },
        PrefixVerdicts {
            prefix_id: "p2".into(),
            verdicts: vec![
                Verdict::supported(["f3"]),
                Verdict::refuted(["f4"]),
                Verdict::refuted(["f5"]),
                Verdict::refuted(["f6"]),
                nei(),
            ],
        },
    ];
    let r = compute_metrics(&all, 5)?;
    println!(
        "SPG {}  SPV {}  USPG {}  USPV {}",
        percent(r.spg),
        percent(r.spv),
        percent(r.uspg),
        percent(r.uspv)
    );

    let looping = vec![Verdict::supported(["f1"]); 5];
    println!("\na generation repeating one supported sentence five times:");
    println!(
        "  after dedupe: {} verdict(s)",
        dedupe_verdicts(&looping).len()
    );
    let r = compute_metrics(
        &[PrefixVerdicts {
            prefix_id: "p".into(),
            verdicts: looping,
        }],
        5,
    )?;
    println!(
        "  SPG {}  SPV {}  USPG {}  USPV {}",
        percent(r.spg),
        percent(r.spv),
        percent(r.uspg),
        percent(r.uspv)
    );

    let (proportion, skipped) = fourgram_proportion(&[143.52; 4], &[222.48; 4])?;
    println!(
        "\n4-gram proportion of 143.52 against 222.48: {} ({skipped} skipped)",
        percent(proportion)
    );

    println!(
        "pearson([1,2,3],[2,4,6]) = {}",
        pearson(&[1.0, 2.0, 3.0], &[2.0, 4.0, 6.0])?
    );
    println!(
        "pearson([1,2,3],[1,1,1]) -> {}",
        pearson(&[1.0, 2.0, 3.0], &[1.0, 1.0, 1.0]).unwrap_err()
    );
    Ok(())
}
