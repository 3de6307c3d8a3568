//! Dense LU with partial pivoting and an explicit pivot threshold.

use nalgebra::{DMatrix, Dyn, LU};

use crate::error::{Error, Result};

/// Pivots smaller than this (relative to the largest entry) mark the system singular.
pub(crate) const PIVOT_TOLERANCE: f64 = 1e-12;

pub(crate) struct Factorization {
    lu: LU<f64, Dyn, Dyn>,
}

pub(crate) fn factor(a: DMatrix<f64>) -> Result<Factorization> {
    let scale = a.iter().fold(0.0f64, |acc, x| acc.max(x.abs())).max(1.0);
    let lu = a.lu();
    let u = lu.u();
    let mut smallest = f64::INFINITY;
    for i in 0..u.nrows() {
        smallest = smallest.min(u[(i, i)].abs());
    }
    if u.nrows() > 0 && smallest.partial_cmp(&(PIVOT_TOLERANCE * scale)) != Some(std::cmp::Ordering::Greater)
    {
        return Err(Error::SingularSystem { pivot: smallest });
    }
    Ok(Factorization { lu })
}

impl Factorization {
    pub(crate) fn solve(&self, b: &DMatrix<f64>) -> Result<DMatrix<f64>> {
        self.lu
            .solve(b)
            .filter(|x| x.iter().all(|v| v.is_finite()))
            .ok_or(Error::SingularSystem { pivot: 0.0 })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn solves_small_system() {
        let a = DMatrix::from_row_slice(2, 2, &[2.0, 1.0, 1.0, 3.0]);
        let b = DMatrix::from_row_slice(2, 1, &[3.0, 5.0]);
        let x = factor(a).unwrap().solve(&b).unwrap();
        assert!((x[0] - 0.8).abs() < 1e-12);
        assert!((x[1] - 1.4).abs() < 1e-12);
    }

    #[test]
    fn detects_singular() {
        let a = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 2.0, 4.0]);
        assert!(matches!(factor(a), Err(Error::SingularSystem { .. })));
    }
}
