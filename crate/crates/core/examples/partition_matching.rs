//! Comparing two row partitions up to label switching and group unions.
//!
//! cargo run --example partition_matching

use lbm::evaluation::GroupMap;
use lbm::{best_match, contingency};

fn labels(table: &[&[usize]]) -> (Vec<usize>, Vec<usize>) {
    let (mut reference, mut estimate) = (Vec::new(), Vec::new());
    for (k, row) in table.iter().enumerate() {
        for (l, &count) in row.iter().enumerate() {
            reference.extend(std::iter::repeat_n(k, count));
            estimate.extend(std::iter::repeat_n(l, count));
        }
    }
    (reference, estimate)
}

fn show(reference: &[usize], estimate: &[usize], g_ref: usize, g_est: usize) -> lbm::Result<()> {
    let table = contingency(reference, estimate, g_ref, g_est)?;
    for row in table.rows() {
        println!("  {row:?}");
    }
    let m = best_match(reference, estimate, g_ref, g_est)?;
    let mapping = match &m.mapping {
        GroupMap::EstimatedToReference(map) => {
            format!("estimated -> reference {:?}", one_based(map))
        }
        GroupMap::ReferenceToEstimated(map) => {
            format!("reference -> estimated {:?}", one_based(map))
        }
    };
    println!(
        "  misclassified {} ({:.1}%), {mapping}\n",
        m.misclassified,
        100.0 * m.rate
    );
    Ok(())
}

fn one_based(v: &[usize]) -> Vec<usize> {
    v.iter().map(|x| x + 1).collect()
}

fn main() -> lbm::Result<()> {
    println!("same number of groups, two labels swapped:");
    let (r, e) = labels(&[&[6, 1, 1], &[0, 1, 6], &[0, 5, 0]]);
    show(&r, &e, 3, 3)?;

    println!("one reference group split in two:");
    let (r, e) = labels(&[&[5, 4, 0], &[0, 0, 7]]);
    show(&r, &e, 2, 3)?;

    println!("two reference groups merged:");
    let (r, e) = labels(&[&[8, 0], &[6, 0], &[1, 9]]);
    show(&r, &e, 3, 2)
}
