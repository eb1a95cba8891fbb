//! Small dense-matrix helpers shared by the rule premise and consequent code.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

pub(crate) fn symmetrize(m: &mut DMatrix<f64>) {
    let n = m.nrows();
    for i in 0..n {
        for j in (i + 1)..n {
            let avg = 0.5 * (m[(i, j)] + m[(j, i)]);
            m[(i, j)] = avg;
            m[(j, i)] = avg;
        }
    }
}

/// Clamps the eigenvalues of a symmetric matrix into `[low, high]`.
/// Returns `true` when any eigenvalue had to move.
pub(crate) fn clip_eigenvalues(m: &mut DMatrix<f64>, low: f64, high: f64) -> bool {
    let eig = m.clone().symmetric_eigen();
    if eig.eigenvalues.iter().all(|&v| v >= low && v <= high) {
        return false;
    }
    let clipped = eig.eigenvalues.map(|v| v.clamp(low, high));
    let q = &eig.eigenvectors;
    *m = q * DMatrix::from_diagonal(&clipped) * q.transpose();
    symmetrize(m);
    true
}

pub(crate) fn min_eigenvalue(m: &DMatrix<f64>) -> f64 {
    m.clone().symmetric_eigen().eigenvalues.min()
}

/// `ln det` of a symmetric positive-definite matrix, `None` if not SPD.
pub(crate) fn log_det_spd(m: &DMatrix<f64>) -> Option<f64> {
    let chol = m.clone().cholesky()?;
    Some(2.0 * chol.l().diagonal().iter().map(|v| v.ln()).sum::<f64>())
}

/// `d·M·d` for symmetric `M`.
pub(crate) fn quadratic_form(m: &DMatrix<f64>, d: &DVector<f64>) -> f64 {
    (m * d).dot(d)
}

pub(crate) fn is_finite(m: &DMatrix<f64>) -> bool {
    m.iter().all(|v| v.is_finite())
}

#[derive(Serialize, Deserialize)]
struct MatrixRepr {
    rows: usize,
    cols: usize,
    /// Row-major entries.
    data: Vec<f64>,
}

/// Serde adapter writing matrices as `{rows, cols, data}` with row-major data.
pub(crate) mod matrix_serde {
    use super::*;

    pub fn serialize<S: Serializer>(m: &DMatrix<f64>, s: S) -> Result<S::Ok, S::Error> {
        let data = (0..m.nrows())
            .flat_map(|i| (0..m.ncols()).map(move |j| (i, j)))
            .map(|(i, j)| m[(i, j)])
            .collect();
        MatrixRepr {
            rows: m.nrows(),
            cols: m.ncols(),
            data,
        }
        .serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<DMatrix<f64>, D::Error> {
        let repr = MatrixRepr::deserialize(d)?;
        if repr.data.len() != repr.rows * repr.cols {
            return Err(serde::de::Error::custom(format!(
                "matrix {}x{} carries {} entries",
                repr.rows,
                repr.cols,
                repr.data.len()
            )));
        }
        Ok(DMatrix::from_row_slice(repr.rows, repr.cols, &repr.data))
    }
}

pub(crate) mod vector_serde {
    use super::*;

    pub fn serialize<S: Serializer>(v: &DVector<f64>, s: S) -> Result<S::Ok, S::Error> {
        v.as_slice().serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<DVector<f64>, D::Error> {
        Ok(DVector::from_vec(Vec::<f64>::deserialize(d)?))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn clip_moves_only_out_of_range_eigenvalues() {
        let mut m = DMatrix::from_diagonal(&DVector::from_vec(vec![1e-9, 2.0, 1e9]));
        assert!(clip_eigenvalues(&mut m, 1e-6, 1e6));
        let mut d: Vec<f64> = m.diagonal().iter().copied().collect();
        d.sort_by(f64::total_cmp);
        assert!((d[0] - 1e-6).abs() < 1e-12 && (d[1] - 2.0).abs() < 1e-9 && (d[2] - 1e6).abs() < 1e-3);
        let mut ok = DMatrix::<f64>::identity(3, 3);
        assert!(!clip_eigenvalues(&mut ok, 1e-6, 1e6));
    }

    #[test]
    fn log_det_of_diagonal() {
        let m = DMatrix::from_diagonal(&DVector::from_vec(vec![2.0, 3.0]));
        assert!((log_det_spd(&m).unwrap() - 6f64.ln()).abs() < 1e-12);
        assert!(log_det_spd(&(-m)).is_none());
    }
}
