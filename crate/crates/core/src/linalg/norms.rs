use crate::error::{invalid, Result};

/// ℓr norm of `v`; pass `f64::INFINITY` for the max norm.
pub fn lp_norm(v: &[f64], r: f64) -> Result<f64> {
    if v.is_empty() {
        return Err(invalid("lp_norm of an empty vector"));
    }
    if r.is_nan() || r < 1.0 {
        return Err(invalid(format!("norm order must be >= 1, got {r}")));
    }
    if r.is_infinite() {
        return Ok(v.iter().fold(0.0, |m, x| f64::max(m, x.abs())));
    }
    if r == 1.0 {
        return Ok(v.iter().map(|x| x.abs()).sum());
    }
    if r == 2.0 {
        return Ok(v.iter().map(|x| x * x).sum::<f64>().sqrt());
    }
    Ok(v.iter().map(|x| x.abs().powf(r)).sum::<f64>().powf(1.0 / r))
}

/// Block ℓ1-then-ℓ2 norm.
///
/// Magnitudes are sorted in decreasing order and cut into consecutive blocks
/// of `s` entries (the last block may be shorter). The result is the ℓ2 norm
/// of the vector of block ℓ1 norms, so `s = 1` gives ℓ2 and `s = dim` gives ℓ1.
pub fn interpolation_norm(v: &[f64], s: usize) -> Result<f64> {
    if s == 0 || s > v.len() {
        return Err(invalid(format!("block size {s} outside [1, {}]", v.len())));
    }
    let mut mags: Vec<f64> = v.iter().map(|x| x.abs()).collect();
    mags.sort_by(|a, b| b.total_cmp(a));
    let sum_sq: f64 = mags
        .chunks(s)
        .map(|block| {
            let l1: f64 = block.iter().sum();
            l1 * l1
        })
        .sum();
    Ok(sum_sq.sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn lp_examples() {
        assert_eq!(lp_norm(&[3.0, 4.0], 2.0).unwrap(), 5.0);
        assert_eq!(lp_norm(&[3.0, 4.0], 1.0).unwrap(), 7.0);
        assert_eq!(lp_norm(&[1.0, -2.0, 2.0], f64::INFINITY).unwrap(), 2.0);
        assert!((lp_norm(&[3.0, 4.0], 3.0).unwrap() - 91f64.cbrt()).abs() < 1e-12);
        assert!(lp_norm(&[1.0], 0.5).is_err());
        assert!(lp_norm(&[], 2.0).is_err());
    }

    #[test]
    fn interpolation_examples() {
        let v = [3.0, 1.0, 2.0, 4.0];
        assert!((interpolation_norm(&v, 1).unwrap() - 30f64.sqrt()).abs() < 1e-12);
        assert!((interpolation_norm(&v, 4).unwrap() - 10.0).abs() < 1e-12);
        // blocks {4,3} and {2,1}
        assert!((interpolation_norm(&v, 2).unwrap() - 58f64.sqrt()).abs() < 1e-12);
        assert!(interpolation_norm(&v, 0).is_err());
        assert!(interpolation_norm(&v, 5).is_err());
    }

    #[test]
    fn sparse_vector_interpolation_is_l1() {
        let v = [0.0, -2.0, 0.0, 0.5, 0.0, 0.0, 1.0, 0.0];
        let l1 = lp_norm(&v, 1.0).unwrap();
        for s in 3..=8 {
            assert!((interpolation_norm(&v, s).unwrap() - l1).abs() < 1e-12);
        }
    }

    proptest! {
        #[test]
        fn norm_ordering(v in prop::collection::vec(-1e3f64..1e3, 1..40)) {
            let inf = lp_norm(&v, f64::INFINITY).unwrap();
            let l2 = lp_norm(&v, 2.0).unwrap();
            let l1 = lp_norm(&v, 1.0).unwrap();
            prop_assert!(inf <= l2 * (1.0 + 1e-12));
            prop_assert!(l2 <= l1 * (1.0 + 1e-12));
        }

        #[test]
        fn interpolation_is_between_l2_and_l1(
            v in prop::collection::vec(-1e3f64..1e3, 1..40),
            s_frac in 0.0f64..1.0,
        ) {
            let s = 1 + ((v.len() - 1) as f64 * s_frac) as usize;
            let mid = interpolation_norm(&v, s).unwrap();
            let l2 = lp_norm(&v, 2.0).unwrap();
            let l1 = lp_norm(&v, 1.0).unwrap();
            prop_assert!(l2 <= mid * (1.0 + 1e-12) + 1e-12);
            prop_assert!(mid <= l1 * (1.0 + 1e-12) + 1e-12);
        }
    }
}
