use super::hungarian::solve_flat;
use super::{validate_tau, MatchResult, TpPair};
use crate::error::Result;
use crate::geometry::BoundingBox;

/// A matched `(x index, y index, 1 - IoU)` triple.
pub(crate) type DistancePair = (usize, usize, f64);

/// Optimal partial matching under a cutoff.
///
/// Minimizes `sum d^p` over matched pairs plus `c^p` for every unmatched box
/// on either side, where only pairs with `d < c` may be matched. Any partial
/// matching extends to a full assignment of `min(|xs|, |ys|)` pairs, so the
/// problem is solved as a rectangular assignment with entry cost `d^p` for
/// admissible pairs and `2 c^p` (the price of leaving both unmatched)
/// otherwise; inadmissible pairs are then severed.
///
/// Pairs come back sorted by distance, then by index, so that sums over them
/// do not depend on which side was passed first.
pub(crate) fn optimal_pairs(
    xs: &[BoundingBox],
    ys: &[BoundingBox],
    cutoff: f64,
    p: f64,
) -> Vec<DistancePair> {
    let (rows, cols) = (xs.len(), ys.len());
    let mut dist = Vec::with_capacity(rows * cols);
    for x in xs {
        for y in ys {
            dist.push(x.iou_distance(y));
        }
    }
    let cut_pow = cutoff.powf(p);
    let cost: Vec<f64> = dist
        .iter()
        .map(|&d| if d < cutoff { d.powf(p) } else { 2.0 * cut_pow })
        .collect();

    let mut pairs: Vec<DistancePair> = solve_flat(&cost, rows, cols)
        .into_iter()
        .map(|(r, c)| (r, c, dist[r * cols + c]))
        .filter(|&(_, _, d)| d < cutoff)
        .collect();
    pairs.sort_by(|a, b| a.2.total_cmp(&b.2).then(a.0.cmp(&b.0)).then(a.1.cmp(&b.1)));
    pairs
}

/// Optimal one-to-one assignment of boxes `ys` to reference boxes `xs`.
///
/// A pair is a TP when `1 - IoU < 1 - tau`. Among all admissible matchings
/// the one chosen minimizes the total distance of matched pairs plus
/// `1 - tau` for each unmatched box. In the result, `gt` indexes `xs` and
/// `det` indexes `ys`.
pub fn match_optimal(xs: &[BoundingBox], ys: &[BoundingBox], tau: f64) -> Result<MatchResult> {
    validate_tau(tau)?;
    let pairs = optimal_pairs(xs, ys, 1.0 - tau, 1.0);
    let tp_pairs: Vec<TpPair> = pairs
        .iter()
        .map(|&(x, y, d)| TpPair {
            det: y,
            gt: x,
            iou: 1.0 - d,
        })
        .collect();
    let n_tp = tp_pairs.len();
    Ok(MatchResult {
        tp_pairs,
        n_tp,
        n_fp: ys.len() - n_tp,
        n_fn: xs.len() - n_tp,
        n_ignored: 0,
    })
}
