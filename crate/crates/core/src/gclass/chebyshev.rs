//! Up-to-second-order Chebyshev functional-link expansion.

use nalgebra::DVector;

/// Expands `x` into `[1, T1(x1), T2(x1), …, T1(xn), T2(xn)]` with
/// `T1(x) = x` and `T2(x) = 2x² − 1`. The result has length `2n + 1`.
pub fn chebyshev_expand(x: &[f64]) -> DVector<f64> {
    let mut out = DVector::zeros(2 * x.len() + 1);
    out[0] = 1.0;
    for (j, &v) in x.iter().enumerate() {
        out[2 * j + 1] = v;
        out[2 * j + 2] = 2.0 * v * v - 1.0;
    }
    out
}

/// Length of the expansion of an `input_dim`-dimensional vector.
pub fn expanded_dim(input_dim: usize) -> usize {
    2 * input_dim + 1
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn expansion_of_ones() {
        assert_eq!(chebyshev_expand(&[1.0, 1.0]).as_slice(), &[1.0; 5]);
    }

    #[test]
    fn expansion_of_half() {
        assert_eq!(
            chebyshev_expand(&[0.5, -0.5]).as_slice(),
            &[1.0, 0.5, -0.5, -0.5, -0.5]
        );
    }

    #[test]
    fn empty_input_is_bias_only() {
        assert_eq!(chebyshev_expand(&[]).as_slice(), &[1.0]);
        assert_eq!(expanded_dim(3), 7);
    }

    proptest! {
        #[test]
        fn second_order_matches_cosine_form(x in -1.0f64..=1.0) {
            let e = chebyshev_expand(&[x]);
            prop_assert!((e[2] - (2.0 * x.acos()).cos()).abs() < 1e-9);
        }
    }
}
