//! Exact minimization of one quadratic slice over a closed interval.

use crate::error::{AeqError, Result};

/// Minimizer of `a z^2 + b z + c` over `[p, q]` (infinite bounds
/// allowed): `min(max(p, -b/2a), q)`. Requires `a > 0`; anything else
/// signals a non-convex slice.
pub fn quadratic_box_min(a: f64, b: f64, p: f64, q: f64) -> Result<f64> {
    if !(a > 0.0) {
        return Err(AeqError::Curvature { curvature: a });
    }
    debug_assert!(p <= q);
    Ok((-b / (2.0 * a)).clamp(p, q))
}

/// Slice minimization in Newton form: the slice through the current
/// value `z0` has first derivative `g` and second derivative `h` there.
///
/// `h > 0` delegates to [`quadratic_box_min`]. `h == 0` (a linear slice)
/// is still well-posed on a finite interval - the minimum sits at the
/// wall the gradient pushes toward - which the squared-error cost
/// produces on output units at nudging exactly `-1/2`. Negative `h`, or
/// a flat unbounded slice, propagates the curvature error.
pub fn slice_min(z0: f64, g: f64, h: f64, p: f64, q: f64) -> Result<f64> {
    if h > 0.0 {
        quadratic_box_min(h / 2.0, g - h * z0, p, q)
    } else if h == 0.0 {
        if g == 0.0 {
            Ok(z0)
        } else {
            let wall = if g > 0.0 { p } else { q };
            if wall.is_finite() {
                Ok(wall)
            } else {
                Err(AeqError::Curvature { curvature: 0.0 })
            }
        }
    } else {
        Err(AeqError::Curvature { curvature: h / 2.0 })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn unconstrained_minimum() {
        let z = quadratic_box_min(1.0, -2.0, f64::NEG_INFINITY, f64::INFINITY).unwrap();
        assert_eq!(z, 1.0);
    }

    #[test]
    fn clamps_to_lower_bound() {
        let z = quadratic_box_min(0.5, 2.0, 0.0, 1.0).unwrap();
        assert_eq!(z, 0.0);
    }

    #[test]
    fn rejects_nonpositive_curvature() {
        assert!(matches!(
            quadratic_box_min(0.0, 1.0, 0.0, 1.0),
            Err(AeqError::Curvature { .. })
        ));
        assert!(quadratic_box_min(-1.0, 1.0, 0.0, 1.0).is_err());
    }

    #[test]
    fn matches_grid_scan_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..25 {
            let a = rng.random_range(0.05..3.0);
            let b = rng.random_range(-4.0..4.0);
            let p = rng.random_range(-3.0..0.5);
            let q = p + rng.random_range(0.0..4.0);
            let z = quadratic_box_min(a, b, p, q).unwrap();

            // brute force over a 10^6-point grid
            let n = 1_000_000;
            let step = (q - p) / n as f64;
            let mut best = (f64::INFINITY, p);
            for i in 0..=n {
                let zz = p + i as f64 * step;
                let e = a * zz * zz + b * zz;
                if e < best.0 {
                    best = (e, zz);
                }
            }
            assert!(
                (z - best.1).abs() <= step,
                "a={a} b={b} [{p},{q}]: exact {z} vs scan {}",
                best.1
            );
        }
    }

    #[test]
    fn flat_slice_on_finite_box_goes_to_the_wall() {
        assert_eq!(slice_min(0.3, 1.0, 0.0, -1.0, 2.0).unwrap(), -1.0);
        assert_eq!(slice_min(0.3, -1.0, 0.0, -1.0, 2.0).unwrap(), 2.0);
        assert_eq!(slice_min(0.3, 0.0, 0.0, -1.0, 2.0).unwrap(), 0.3);
        assert!(slice_min(0.3, 1.0, 0.0, f64::NEG_INFINITY, 2.0).is_err());
    }

    #[test]
    fn newton_form_agrees_with_coefficient_form() {
        // slice 2 z^2 - 3 z + 1: derivative at z0 = 0.5 is 4*0.5 - 3
        let z = slice_min(0.5, 4.0 * 0.5 - 3.0, 4.0, 0.0, 10.0).unwrap();
        let direct = quadratic_box_min(2.0, -3.0, 0.0, 10.0).unwrap();
        assert!((z - direct).abs() < 1e-15);
        assert!((z - 0.75).abs() < 1e-15);
    }
}
