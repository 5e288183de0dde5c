//! Cluster distance: the volume of the symmetric difference of two balls.

use alloc::vec::Vec;
use core::cmp::Ordering;

use rand::Rng;

use super::MacroCluster;
use crate::error::{bail, Result};
use crate::math::{ball_volume, euclidean, squared_distance};
use crate::rng::seeded;

pub const DEFAULT_MC_SAMPLES: usize = 100_000;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ClusterDistance {
    /// Volume of the symmetric difference.
    pub raw: f64,
    /// `raw` divided by the volume of the union, in `[0, 1]`.
    pub normalized: f64,
}

impl ClusterDistance {
    const ZERO: ClusterDistance = ClusterDistance {
        raw: 0.0,
        normalized: 0.0,
    };
}

pub fn cluster_distance(
    a: &MacroCluster,
    b: &MacroCluster,
    samples: usize,
    seed: u64,
) -> Result<ClusterDistance> {
    ball_distance(&a.center, a.radius, &b.center, b.radius, samples, seed)
}

/// Distance between the balls `(ca, ra)` and `(cb, rb)`.
///
/// Exact when the balls coincide, are disjoint, are nested or are 1-D
/// intervals. Otherwise estimated from `samples` stratified uniform draws in
/// the union's bounding box. The result does not depend on argument order.
pub fn ball_distance(
    ca: &[f64],
    ra: f64,
    cb: &[f64],
    rb: f64,
    samples: usize,
    seed: u64,
) -> Result<ClusterDistance> {
    if !(ra > 0.0) || !(rb > 0.0) {
        bail!(
            Contract,
            "ball radii must be positive, got {} and {}",
            ra,
            rb
        );
    }
    if ca.len() != cb.len() || ca.is_empty() {
        bail!(
            Contract,
            "ball dimensions differ: {} vs {}",
            ca.len(),
            cb.len()
        );
    }
    if ca == cb && ra == rb {
        return Ok(ClusterDistance::ZERO);
    }
    // canonical order keeps the estimate exactly symmetric
    let ((ca, ra), (cb, rb)) = match order(ca, ra, cb, rb) {
        Ordering::Greater => ((cb, rb), (ca, ra)),
        _ => ((ca, ra), (cb, rb)),
    };
    let d = ca.len();
    let gap = euclidean(ca, cb);
    let (va, vb) = (ball_volume(d, ra), ball_volume(d, rb));
    if gap >= ra + rb {
        return Ok(ClusterDistance {
            raw: va + vb,
            normalized: 1.0,
        });
    }
    if d == 1 {
        let lo = (ca[0] - ra).max(cb[0] - rb);
        let hi = (ca[0] + ra).min(cb[0] + rb);
        let overlap = (hi - lo).max(0.0);
        let raw = va + vb - 2.0 * overlap;
        return Ok(ClusterDistance {
            raw,
            normalized: raw / (va + vb - overlap),
        });
    }
    if gap + ra.min(rb) <= ra.max(rb) {
        let (big, small) = (va.max(vb), va.min(vb));
        return Ok(ClusterDistance {
            raw: big - small,
            normalized: 1.0 - small / big,
        });
    }
    if samples == 0 {
        bail!(Contract, "Monte Carlo estimate needs at least one sample");
    }
    let lo: Vec<f64> = (0..d).map(|i| (ca[i] - ra).min(cb[i] - rb)).collect();
    let hi: Vec<f64> = (0..d).map(|i| (ca[i] + ra).max(cb[i] + rb)).collect();
    let box_volume: f64 = lo.iter().zip(&hi).map(|(l, h)| h - l).product();
    let (ra2, rb2) = (ra * ra, rb * rb);
    let mut rng = seeded(seed);
    let mut x = alloc::vec![0.0; d];
    let (mut only, mut both) = (0u64, 0u64);
    for s in 0..samples {
        // stratified along the first axis, uniform along the rest
        let u0 = (s as f64 + rng.random::<f64>()) / samples as f64;
        x[0] = lo[0] + u0 * (hi[0] - lo[0]);
        for i in 1..d {
            x[i] = rng.random_range(lo[i]..hi[i]);
        }
        let in_a = squared_distance(&x, ca) <= ra2;
        let in_b = squared_distance(&x, cb) <= rb2;
        match (in_a, in_b) {
            (true, true) => both += 1,
            (true, false) | (false, true) => only += 1,
            _ => {}
        }
    }
    let raw = box_volume * only as f64 / samples as f64;
    let normalized = if only + both > 0 {
        only as f64 / (only + both) as f64
    } else {
        0.0
    };
    Ok(ClusterDistance { raw, normalized })
}

fn order(ca: &[f64], ra: f64, cb: &[f64], rb: f64) -> Ordering {
    ra.total_cmp(&rb).then_with(|| {
        ca.iter()
            .zip(cb)
            .map(|(x, y)| x.total_cmp(y))
            .find(|o| o.is_ne())
            .unwrap_or(Ordering::Equal)
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use core::f64::consts::PI;

    /// Area of intersection of two discs (circular lens).
    fn lens_area(r1: f64, r2: f64, d: f64) -> f64 {
        if d >= r1 + r2 {
            return 0.0;
        }
        if d <= (r1 - r2).abs() {
            return PI * r1.min(r2).powi(2);
        }
        let a1 = r1 * r1 * ((d * d + r1 * r1 - r2 * r2) / (2.0 * d * r1)).acos();
        let a2 = r2 * r2 * ((d * d + r2 * r2 - r1 * r1) / (2.0 * d * r2)).acos();
        let k = 0.5 * ((-d + r1 + r2) * (d + r1 - r2) * (d - r1 + r2) * (d + r1 + r2)).sqrt();
        a1 + a2 - k
    }

    #[test]
    fn identity_is_exact() {
        let c = [0.3, -1.0, 2.0];
        assert_eq!(
            ball_distance(&c, 0.7, &c, 0.7, 1000, 1).unwrap(),
            ClusterDistance::ZERO
        );
    }

    #[test]
    fn disjoint_balls() {
        let r = ball_distance(&[0.0, 0.0], 1.0, &[5.0, 0.0], 2.0, 1000, 1).unwrap();
        assert_eq!(r.normalized, 1.0);
        assert!((r.raw - 5.0 * PI).abs() < 1e-12);
    }

    #[test]
    fn interval_example() {
        let r = ball_distance(&[1.0], 1.0, &[2.0], 1.0, 0, 0).unwrap();
        assert_eq!(r.raw, 2.0);
        assert!((r.normalized - 2.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn interval_matches_numeric_integration() {
        // midpoint-rule integral of |1_a − 1_b|
        let (a, b) = ((0.2, 0.9), (0.7, 0.4));
        let n = 200_000;
        let (lo, hi) = (-1.0, 2.0);
        let h = (hi - lo) / n as f64;
        let mut sym = 0.0;
        let mut uni = 0.0;
        for i in 0..n {
            let x = lo + (i as f64 + 0.5) * h;
            let ia = ((x - a.0) as f64).abs() <= a.1;
            let ib = ((x - b.0) as f64).abs() <= b.1;
            if ia != ib {
                sym += h;
            }
            if ia || ib {
                uni += h;
            }
        }
        let r = ball_distance(&[a.0], a.1, &[b.0], b.1, 0, 0).unwrap();
        assert!((r.raw - sym).abs() < 1e-4);
        assert!((r.normalized - sym / uni).abs() < 1e-4);
    }

    #[test]
    fn nested_balls_are_exact() {
        let r = ball_distance(&[0.0, 0.0], 2.0, &[0.5, 0.0], 1.0, 10, 1).unwrap();
        assert!((r.raw - 3.0 * PI).abs() < 1e-12);
        assert!((r.normalized - 0.75).abs() < 1e-12);
    }

    #[test]
    fn monte_carlo_matches_lens_geometry() {
        for (r1, r2, d) in [
            (1.0, 1.0, 0.1),
            (1.0, 1.0, 1.0),
            (1.0, 0.6, 1.2),
            (2.0, 1.5, 0.9),
        ] {
            let inter = lens_area(r1, r2, d);
            let union = PI * (r1 * r1 + r2 * r2) - inter;
            let sym = union - inter;
            let r = ball_distance(&[0.0, 0.0], r1, &[d, 0.0], r2, DEFAULT_MC_SAMPLES, 3).unwrap();
            assert!(
                (r.raw - sym).abs() < 0.02 * union,
                "{r1} {r2} {d}: {} vs {sym}",
                r.raw
            );
            assert!((r.normalized - sym / union).abs() < 0.02);
        }
    }

    #[test]
    fn shifted_ball_is_within_movement_threshold() {
        // a 10% shift leaves the normalized distance far below 0.2
        let inter = lens_area(1.0, 1.0, 0.1);
        let oracle = (2.0 * PI - 2.0 * inter) / (2.0 * PI - inter);
        let r = ball_distance(&[0.0, 0.0], 1.0, &[0.1, 0.0], 1.0, DEFAULT_MC_SAMPLES, 8).unwrap();
        assert!((r.normalized - oracle).abs() < 0.02);
        assert!(r.normalized < 0.2);
    }

    #[test]
    fn argument_order_does_not_matter() {
        let x = ball_distance(&[0.0, 0.3], 1.0, &[0.8, 0.0], 1.3, 5000, 4).unwrap();
        let y = ball_distance(&[0.8, 0.0], 1.3, &[0.0, 0.3], 1.0, 5000, 4).unwrap();
        assert_eq!(x, y);
    }

    #[test]
    fn bad_radius_is_a_contract_error() {
        assert!(matches!(
            ball_distance(&[0.0], 0.0, &[1.0], 1.0, 10, 0),
            Err(crate::Error::Contract(_))
        ));
        assert!(ball_distance(&[0.0], -1.0, &[1.0], 1.0, 10, 0).is_err());
    }
}
