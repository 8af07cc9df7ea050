//! DASA, the cutoff set distance LRP is a scaled instance of.
//!
//! `e = (1/l) * (sum_TP d^p + c^p * N_FP + c^p * N_FN)^(1/p)` with
//! `l = max(|X|, |Y|)`, base distance `d = 1 - IoU` and the matching that
//! minimizes the bracket. With `p = 1` and `c = 1 - tau`,
//! `LRP = e * l / ((1 - tau) * Z)`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::BoundingBox;
use crate::matching::optimal_pairs;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DasaParams {
    p: f64,
    c: f64,
}

impl DasaParams {
    /// `p >= 1` is the norm order and `c` in `(0, 1]` the cutoff on `1 - IoU`.
    pub fn new(p: f64, c: f64) -> Result<Self> {
        if !(p.is_finite() && p >= 1.0) {
            return Err(Error::InvalidDasaParams(format!("norm p = {p} must be >= 1")));
        }
        if !(c > 0.0 && c <= 1.0) {
            return Err(Error::InvalidDasaParams(format!("cutoff c = {c} must be in (0, 1]")));
        }
        Ok(Self { p, c })
    }

    /// The parameters under which DASA reduces to LRP at `tau`.
    pub fn for_lrp(tau: f64) -> Result<Self> {
        Self::new(1.0, 1.0 - tau)
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    pub fn c(&self) -> f64 {
        self.c
    }
}

pub fn dasa(xs: &[BoundingBox], ys: &[BoundingBox], params: DasaParams) -> Result<f64> {
    let l = xs.len().max(ys.len());
    if l == 0 {
        return Err(Error::UndefinedLrp);
    }
    let DasaParams { p, c } = params;
    let pairs = optimal_pairs(xs, ys, c, p);
    let unmatched = xs.len() + ys.len() - 2 * pairs.len();
    let localization: f64 = pairs.iter().map(|&(_, _, d)| d.powf(p)).sum();
    let bracket = localization + c.powf(p) * unmatched as f64;
    Ok(bracket.powf(1.0 / p) / l as f64)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn bb(x0: f64, y0: f64, x1: f64, y1: f64) -> BoundingBox {
        BoundingBox::new(x0, y0, x1, y1).unwrap()
    }

    #[test]
    fn identical_sets_are_at_distance_zero() {
        let xs = vec![bb(0.0, 0.0, 1.0, 1.0), bb(3.0, 3.0, 4.0, 5.0)];
        for (p, c) in [(1.0, 0.5), (2.0, 1.0), (3.5, 0.2)] {
            assert_eq!(dasa(&xs, &xs, DasaParams::new(p, c).unwrap()).unwrap(), 0.0);
        }
    }

    #[test]
    fn empty_side_costs_the_cutoff() {
        let ys: Vec<_> = (0..4).map(|i| bb(i as f64 * 3.0, 0.0, i as f64 * 3.0 + 1.0, 1.0)).collect();
        let e = dasa(&[], &ys, DasaParams::new(1.0, 0.3).unwrap()).unwrap();
        assert!((e - 0.3).abs() < 1e-15);
    }

    #[test]
    fn both_empty_is_undefined() {
        assert!(dasa(&[], &[], DasaParams::new(1.0, 0.5).unwrap()).is_err());
    }

    #[test]
    fn parameter_validation() {
        assert!(DasaParams::new(0.5, 0.5).is_err());
        assert!(DasaParams::new(1.0, 0.0).is_err());
        assert!(DasaParams::new(1.0, 1.2).is_err());
        assert!(DasaParams::new(f64::NAN, 0.5).is_err());
        assert!(DasaParams::new(1.0, 1.0).is_ok());
    }
}
