use nalgebra::DMatrix;

use crate::scalar::Scalar;

/// Z-scores every feature row with the population (1/n) standard deviation.
///
/// Rows with zero variance are centered and left at zero.
pub fn zscore_standardize<T: Scalar>(x: &DMatrix<T>) -> DMatrix<T> {
    let n = T::from_count(x.ncols());
    let mut out = x.clone();
    for mut row in out.row_iter_mut() {
        let mean = row.sum() / n;
        row.add_scalar_mut(-mean);
        let var = row.norm_squared() / n;
        if var > T::zero() {
            row /= var.sqrt();
        }
    }
    out
}
