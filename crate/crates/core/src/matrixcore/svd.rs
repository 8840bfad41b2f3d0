use super::DenseMatrix;
use crate::error::{Error, Result};

/// Singular values in descending order, by one-sided Jacobi rotations
/// (Hestenes). Small singular values come out with high relative accuracy,
/// which is what the solvability diagnostics need.
pub fn singular_values(a: &DenseMatrix) -> Result<Vec<f64>> {
    // Work on the orientation with fewer columns.
    let w = if a.cols() > a.rows() { a.transpose() } else { a.clone() };
    let (m, n) = w.shape();
    // Column-major copy so that column operations are contiguous.
    let mut cols: Vec<Vec<f64>> = (0..n).map(|j| (0..m).map(|i| w[(i, j)]).collect()).collect();
    let tol = f64::EPSILON * (m as f64).sqrt();
    let max_sweeps = 60;
    let mut converged = false;
    for _ in 0..max_sweeps {
        let mut rotated = false;
        for p in 0..n {
            for q in p + 1..n {
                let (alpha, beta, gamma) = {
                    let (cp, cq) = (&cols[p], &cols[q]);
                    let mut al = 0.0;
                    let mut be = 0.0;
                    let mut ga = 0.0;
                    for i in 0..m {
                        al += cp[i] * cp[i];
                        be += cq[i] * cq[i];
                        ga += cp[i] * cq[i];
                    }
                    (al, be, ga)
                };
                if gamma == 0.0 || gamma.abs() <= tol * (alpha * beta).sqrt() {
                    continue;
                }
                rotated = true;
                let zeta = (beta - alpha) / (2.0 * gamma);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                let (left, right) = cols.split_at_mut(q);
                let (cp, cq) = (&mut left[p], &mut right[0]);
                for i in 0..m {
                    let x = cp[i];
                    let y = cq[i];
                    cp[i] = c * x - s * y;
                    cq[i] = s * x + c * y;
                }
            }
        }
        if !rotated {
            converged = true;
            break;
        }
    }
    if !converged {
        return Err(Error::NoConvergence { op: "singular_values", iterations: max_sweeps });
    }
    let mut sv: Vec<f64> = cols.iter().map(|c| super::norm2(c)).collect();
    sv.sort_by(|a, b| b.partial_cmp(a).unwrap_or(std::cmp::Ordering::Equal));
    Ok(sv)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn diagonal_values() {
        let a = DenseMatrix::from_rows(&[[3.0, 0.0], [0.0, -4.0], [0.0, 0.0]]).unwrap();
        assert_eq!(singular_values(&a).unwrap(), vec![4.0, 3.0]);
    }

    #[test]
    fn rank_one() {
        let a = DenseMatrix::from_rows(&[[1.0, 2.0], [2.0, 4.0]]).unwrap();
        let sv = singular_values(&a).unwrap();
        assert!((sv[0] - 5.0).abs() < 1e-14);
        assert!(sv[1].abs() < 1e-15);
    }

    #[test]
    fn wide_matrix() {
        let a = DenseMatrix::from_rows(&[[1.0, 1.0]]).unwrap();
        let sv = singular_values(&a).unwrap();
        assert_eq!(sv.len(), 1);
        assert!((sv[0] - 2f64.sqrt()).abs() < 1e-15);
    }
}
