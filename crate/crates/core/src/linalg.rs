//! Block-tridiagonal elimination.
//!
//! Row `i` of the system reads
//! `lower[i]·x[i−1] + diag[i]·x[i] + upper[i]·x[i+1] = rhs[i]`;
//! `lower[0]` and `upper[n−1]` are ignored. Elimination runs from the last
//! block to the first, so the first block is the final pivot. Callers place
//! any constraint row that regularizes a singular operator in block 0.

use nalgebra::{DMatrix, DVector, Matrix3, Vector3};
use num_complex::Complex64;

use crate::error::{Error, Result};

/// Fixed 3×3 blocks.
pub fn solve_block_tridiagonal3(
    lower: &[Matrix3<Complex64>],
    diag: &[Matrix3<Complex64>],
    upper: &[Matrix3<Complex64>],
    rhs: &[Vector3<Complex64>],
) -> Result<Vec<Vector3<Complex64>>> {
    let n = diag.len();
    if lower.len() != n || upper.len() != n || rhs.len() != n || n == 0 {
        return Err(Error::Shape("block-tridiagonal operands differ in length".into()));
    }
    let mut inv: Vec<Matrix3<Complex64>> = vec![Matrix3::zeros(); n];
    let mut g = rhs.to_vec();
    let singular = || Error::Degenerate("singular pivot block in harmonic balance".into());
    inv[n - 1] = diag[n - 1].try_inverse().ok_or_else(singular)?;
    for i in (0..n - 1).rev() {
        let w = upper[i] * inv[i + 1];
        let s = diag[i] - w * lower[i + 1];
        g[i] = g[i] - w * g[i + 1];
        inv[i] = s.try_inverse().ok_or_else(singular)?;
    }
    let mut x = vec![Vector3::zeros(); n];
    x[0] = inv[0] * g[0];
    for i in 1..n {
        x[i] = inv[i] * (g[i] - lower[i] * x[i - 1]);
    }
    if x.iter().any(|v| v.iter().any(|c| !c.re.is_finite() || !c.im.is_finite())) {
        return Err(singular());
    }
    Ok(x)
}

/// Dense blocks of arbitrary (per-row) size, LU-factorized with partial pivoting.
pub fn solve_block_tridiagonal(
    lower: &[DMatrix<Complex64>],
    diag: &[DMatrix<Complex64>],
    upper: &[DMatrix<Complex64>],
    rhs: &[DVector<Complex64>],
) -> Result<Vec<DVector<Complex64>>> {
    let n = diag.len();
    if lower.len() != n || upper.len() != n || rhs.len() != n || n == 0 {
        return Err(Error::Shape("block-tridiagonal operands differ in length".into()));
    }
    let singular = |i: usize| Error::Rank(format!("numerically singular pivot block {i}"));
    let mut lus = Vec::with_capacity(n);
    let mut g = rhs.to_vec();
    let last = diag[n - 1].clone().lu();
    lus.push(last);
    for i in (0..n - 1).rev() {
        let lu_next = lus.last().unwrap();
        // S⁻¹_{i+1} [L_{i+1} | g_{i+1}]
        let sl = lu_next.solve(&lower[i + 1]).ok_or_else(|| singular(i + 1))?;
        let sg = lu_next.solve(&g[i + 1]).ok_or_else(|| singular(i + 1))?;
        let s = &diag[i] - &upper[i] * sl;
        g[i] = &g[i] - &upper[i] * sg;
        lus.push(s.lu());
    }
    lus.reverse();
    let mut x: Vec<DVector<Complex64>> = Vec::with_capacity(n);
    x.push(lus[0].solve(&g[0]).ok_or_else(|| singular(0))?);
    for i in 1..n {
        let r = &g[i] - &lower[i] * &x[i - 1];
        x.push(lus[i].solve(&r).ok_or_else(|| singular(i))?);
    }
    if x.iter().any(|v| v.iter().any(|c| !c.re.is_finite() || !c.im.is_finite())) {
        return Err(Error::Rank("non-finite solution of block-tridiagonal system".into()));
    }
    Ok(x)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::rngs::StdRng;
    use rand::{Rng, SeedableRng};

    fn c(rng: &mut StdRng) -> Complex64 {
        Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))
    }

    fn dense_reference(l: &[DMatrix<Complex64>], d: &[DMatrix<Complex64>], u: &[DMatrix<Complex64>], r: &[DVector<Complex64>]) -> DVector<Complex64> {
        let sizes: Vec<usize> = d.iter().map(|m| m.nrows()).collect();
        let offs: Vec<usize> = sizes.iter().scan(0, |s, &x| { let o = *s; *s += x; Some(o) }).collect();
        let total: usize = sizes.iter().sum();
        let mut a = DMatrix::zeros(total, total);
        let mut b = DVector::zeros(total);
        for i in 0..d.len() {
            a.view_mut((offs[i], offs[i]), (sizes[i], sizes[i])).copy_from(&d[i]);
            if i > 0 {
                a.view_mut((offs[i], offs[i - 1]), (sizes[i], sizes[i - 1])).copy_from(&l[i]);
            }
            if i + 1 < d.len() {
                a.view_mut((offs[i], offs[i + 1]), (sizes[i], sizes[i + 1])).copy_from(&u[i]);
            }
            b.rows_mut(offs[i], sizes[i]).copy_from(&r[i]);
        }
        a.lu().solve(&b).unwrap()
    }

    #[test]
    fn matches_dense_solve_with_ragged_blocks() {
        let mut rng = StdRng::seed_from_u64(7);
        let sizes = [3usize, 5, 4, 4, 2];
        let n = sizes.len();
        let mut l = Vec::new();
        let mut d = Vec::new();
        let mut u = Vec::new();
        let mut r = Vec::new();
        for i in 0..n {
            let prev = if i > 0 { sizes[i - 1] } else { 1 };
            let next = if i + 1 < n { sizes[i + 1] } else { 1 };
            l.push(DMatrix::from_fn(sizes[i], prev, |_, _| c(&mut rng)));
            let mut di = DMatrix::from_fn(sizes[i], sizes[i], |_, _| c(&mut rng));
            for k in 0..sizes[i] {
                di[(k, k)] += Complex64::from(6.0);
            }
            d.push(di);
            u.push(DMatrix::from_fn(sizes[i], next, |_, _| c(&mut rng)));
            r.push(DVector::from_fn(sizes[i], |_, _| c(&mut rng)));
        }
        let x = solve_block_tridiagonal(&l, &d, &u, &r).unwrap();
        let reference = dense_reference(&l, &d, &u, &r);
        let flat: Vec<Complex64> = x.iter().flat_map(|v| v.iter().cloned()).collect();
        for (a, b) in flat.iter().zip(reference.iter()) {
            assert!((a - b).norm() < 1e-12);
        }
    }

    #[test]
    fn fixed_blocks_match_dynamic() {
        let mut rng = StdRng::seed_from_u64(11);
        let n = 6;
        let m3 = |rng: &mut StdRng, shift: f64| {
            let mut m = Matrix3::from_fn(|_, _| c(rng));
            for k in 0..3 {
                m[(k, k)] += Complex64::from(shift);
            }
            m
        };
        let l: Vec<_> = (0..n).map(|_| m3(&mut rng, 0.0)).collect();
        let d: Vec<_> = (0..n).map(|_| m3(&mut rng, 5.0)).collect();
        let u: Vec<_> = (0..n).map(|_| m3(&mut rng, 0.0)).collect();
        let r: Vec<_> = (0..n).map(|_| Vector3::from_fn(|_, _| c(&mut rng))).collect();
        let x3 = solve_block_tridiagonal3(&l, &d, &u, &r).unwrap();
        let dynm = |v: &[Matrix3<Complex64>]| v.iter().map(|m| DMatrix::from_column_slice(3, 3, m.as_slice())).collect::<Vec<_>>();
        let rv: Vec<_> = r.iter().map(|v| DVector::from_column_slice(v.as_slice())).collect();
        let xd = solve_block_tridiagonal(&dynm(&l), &dynm(&d), &dynm(&u), &rv).unwrap();
        for (a, b) in x3.iter().zip(&xd) {
            for k in 0..3 {
                assert!((a[k] - b[k]).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn singular_block_reported() {
        let z = vec![Matrix3::zeros(); 2];
        let r = vec![Vector3::zeros(); 2];
        assert!(matches!(solve_block_tridiagonal3(&z, &z, &z, &r), Err(Error::Degenerate(_))));
    }
}
