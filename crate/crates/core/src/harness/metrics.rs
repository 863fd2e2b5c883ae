use crate::error::{Error, Result};
use crate::link::argmax;

fn check_lengths(rows: usize, sets: usize) -> Result<()> {
    if rows != sets {
        return Err(Error::Dimension {
            expected: rows,
            got: sets,
            context: "one selected set per test row",
        });
    }
    if rows == 0 {
        return Err(Error::TooFewRows { needed: 1, have: 0 });
    }
    Ok(())
}

/// Fraction of rows whose best pair (lowest index among equal maxima) is
/// missing from the row's selected set of flattened pair indices.
pub fn misalignment_probability(ratios: &[&[f64]], sets: &[Vec<usize>]) -> Result<f64> {
    check_lengths(ratios.len(), sets.len())?;
    let missed = ratios
        .iter()
        .zip(sets)
        .filter(|(r, s)| {
            let best = argmax(r).expect("non-empty row");
            !s.contains(&best)
        })
        .count();
    Ok(missed as f64 / ratios.len() as f64)
}

/// Mean over rows of the best ratio inside the row's selected set; an empty
/// set contributes 0.
pub fn avg_throughput_ratio(ratios: &[&[f64]], sets: &[Vec<usize>]) -> Result<f64> {
    check_lengths(ratios.len(), sets.len())?;
    let mut total = 0.0;
    for (r, s) in ratios.iter().zip(sets) {
        let mut best = 0.0f64;
        for &n in s {
            let v = *r.get(n).ok_or_else(|| Error::InvalidArgument(format!("pair index {n} out of range")))?;
            best = best.max(v);
        }
        total += best;
    }
    Ok(total / ratios.len() as f64)
}
