use crate::error::{shape_err, Result};

/// Floor on the denominator of the relative error.
pub const RELATIVE_FLOOR: f64 = 1e-12;

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct CompareReport {
    pub max_abs: f64,
    pub max_rel: f64,
    /// Index with the largest relative error.
    pub worst: Option<usize>,
}

pub fn relative_error(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(RELATIVE_FLOOR)
}

pub fn compare_gradients(a: &[f64], b: &[f64]) -> Result<CompareReport> {
    if a.len() != b.len() {
        return Err(shape_err("compare_gradients", a.len(), b.len()));
    }
    let mut r = CompareReport::default();
    for (i, (x, y)) in a.iter().zip(b).enumerate() {
        let abs = (x - y).abs();
        let rel = relative_error(*x, *y);
        if rel.is_nan() {
            return Ok(CompareReport {
                max_abs: f64::NAN,
                max_rel: f64::NAN,
                worst: Some(i),
            });
        }
        r.max_abs = r.max_abs.max(abs);
        if rel > r.max_rel {
            r.max_rel = rel;
            r.worst = Some(i);
        }
    }
    Ok(r)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identical() {
        let r = compare_gradients(&[1.0, -2.0], &[1.0, -2.0]).unwrap();
        assert_eq!((r.max_abs, r.max_rel, r.worst), (0.0, 0.0, None));
    }

    #[test]
    fn one_per_mille() {
        let r = compare_gradients(&[1.0], &[1.001]).unwrap();
        // 0.001 / 1.001
        assert!((r.max_rel - 1e-3).abs() < 1e-6);
        assert_eq!(r.worst, Some(0));
    }

    #[test]
    fn zeros() {
        assert_eq!(
            compare_gradients(&[0.0; 3], &[0.0; 3]).unwrap().max_rel,
            0.0
        );
    }

    #[test]
    fn mismatch() {
        assert!(compare_gradients(&[0.0], &[]).is_err());
    }

    #[test]
    fn nan_reported() {
        assert!(compare_gradients(&[f64::NAN], &[0.0])
            .unwrap()
            .max_rel
            .is_nan());
    }
}
