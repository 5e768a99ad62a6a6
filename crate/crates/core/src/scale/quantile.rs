use std::collections::HashMap;

use crate::dom::Rgba;

use super::{Domain, InferredScale, Orientation, Range, ScaleError, ScaleKind};

/// Thresholds of a k-quantile partition: the `i/k` quantiles for
/// `i = 1..k`, linearly interpolated between order statistics (the
/// interpolation d3's quantile scale uses).
pub fn quantile_thresholds(values: &[f64], k: usize) -> Vec<f64> {
    let mut sorted: Vec<f64> = values.to_vec();
    sorted.sort_by(|a, b| a.total_cmp(b));
    if sorted.is_empty() || k == 0 {
        return Vec::new();
    }
    let n = sorted.len();
    (1..k)
        .map(|i| {
            let h = (n - 1) as f64 * i as f64 / k as f64;
            let lo = h.floor() as usize;
            let base = sorted[lo];
            match sorted.get(lo + 1) {
                Some(next) => base + (h - lo as f64) * (next - base),
                None => base,
            }
        })
        .collect()
}

/// Verify that mark colors follow a k-quantile partition of their data
/// values and recover the thresholds and per-bucket colors.
pub fn infer_quantile_colors(
    values: &[f64],
    colors: &[Rgba],
    k: usize,
) -> Result<InferredScale, ScaleError> {
    if values.len() != colors.len() {
        return Err(ScaleError::MismatchedLengths {
            values: values.len(),
            colors: colors.len(),
        });
    }
    let mut distinct: Vec<Rgba> = Vec::new();
    for c in colors {
        if !distinct.contains(c) {
            distinct.push(*c);
        }
    }
    if distinct.len() != k || k == 0 {
        return Err(ScaleError::WrongColorCount {
            found: distinct.len(),
            expected: k,
        });
    }

    let thresholds = quantile_thresholds(values, k);
    let buckets: Vec<usize> = values
        .iter()
        .map(|v| thresholds.partition_point(|t| t <= v))
        .collect();

    // each bucket's color is the one most of its members carry
    let mut counts: Vec<HashMap<Rgba, (usize, usize)>> = vec![HashMap::new(); k];
    for (i, (&b, c)) in buckets.iter().zip(colors).enumerate() {
        counts[b].entry(*c).or_insert((0, i)).0 += 1;
    }
    let bucket_colors: Vec<Option<Rgba>> = counts
        .iter()
        .map(|m| {
            m.iter()
                .max_by(|a, b| a.1 .0.cmp(&b.1 .0).then(b.1 .1.cmp(&a.1 .1)))
                .map(|(c, _)| *c)
        })
        .collect();

    for (i, (&b, c)) in buckets.iter().zip(colors).enumerate() {
        let expected = bucket_colors[b].expect("bucket of an existing datum is non-empty");
        if *c != expected {
            return Err(ScaleError::QuantileMismatch {
                index: i,
                value: values[i],
                expected,
                found: *c,
            });
        }
    }

    // monochrome buckets with k distinct colors means every bucket is
    // populated with its own color
    let ordered: Vec<Rgba> = bucket_colors
        .into_iter()
        .map(|c| c.expect("all buckets populated"))
        .collect();
    Ok(InferredScale {
        kind: ScaleKind::QuantileColor,
        orientation: Orientation::Color,
        domain: Domain::Thresholds(thresholds),
        range: Range::Colors(ordered),
        fit_r2: 1.0,
        tick_count: 0,
        fit: None,
        bandwidth: None,
        ticks: Vec::new(),
        unparsed_labels: 0,
    })
}
