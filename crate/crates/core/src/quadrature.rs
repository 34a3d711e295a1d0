//! Gauss–Hermite quadrature for averages over a Gaussian detuning distribution.

use nalgebra::{DMatrix, SymmetricEigen};

use crate::error::{Error, Result};
use crate::model::Frequency;

/// Nodes `x_i` and weights `w_i` with `∫ e^{−x²} f(x) dx ≈ Σ w_i f(x_i)`.
///
/// Computed from the Jacobi matrix (Golub–Welsch). Nodes are returned in
/// increasing order and symmetrized exactly about zero.
pub fn gauss_hermite(n: usize) -> Result<(Vec<f64>, Vec<f64>)> {
    if n == 0 {
        return Err(Error::Precondition("quadrature needs at least one node".into()));
    }
    let mut j = DMatrix::<f64>::zeros(n, n);
    for k in 1..n {
        let b = (k as f64 / 2.0).sqrt();
        j[(k, k - 1)] = b;
        j[(k - 1, k)] = b;
    }
    let eig = SymmetricEigen::new(j);
    let mut pairs: Vec<(f64, f64)> = (0..n)
        .map(|i| {
            let v0 = eig.eigenvectors[(0, i)];
            (eig.eigenvalues[i], std::f64::consts::PI.sqrt() * v0 * v0)
        })
        .collect();
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut x: Vec<f64> = pairs.iter().map(|p| p.0).collect();
    let mut w: Vec<f64> = pairs.iter().map(|p| p.1).collect();
    for i in 0..n / 2 {
        let xs = 0.5 * (x[n - 1 - i] - x[i]);
        let ws = 0.5 * (w[n - 1 - i] + w[i]);
        x[i] = -xs;
        x[n - 1 - i] = xs;
        w[i] = ws;
        w[n - 1 - i] = ws;
    }
    if n % 2 == 1 {
        x[n / 2] = 0.0;
    }
    Ok((x, w))
}

/// Offsets and probabilities for averaging over a Gaussian of the given FWHM.
///
/// Requires an odd node count of at least three so that the center is sampled.
pub fn gaussian_nodes(fwhm: Frequency, n_nodes: usize) -> Result<Vec<(Frequency, f64)>> {
    if n_nodes < 3 || n_nodes % 2 == 0 {
        return Err(Error::Precondition(format!("node count must be odd and at least 3, got {n_nodes}")));
    }
    if !(fwhm.ghz() >= 0.0) || !fwhm.is_finite() {
        return Err(Error::Domain(format!("Gaussian FWHM must be non-negative, got {fwhm}")));
    }
    let sigma = fwhm.ghz() / (2.0 * (2.0 * std::f64::consts::LN_2).sqrt());
    let (x, w) = gauss_hermite(n_nodes)?;
    let norm = std::f64::consts::PI.sqrt();
    Ok(x.iter()
        .zip(&w)
        .map(|(xi, wi)| (Frequency::from_ghz(std::f64::consts::SQRT_2 * sigma * xi), wi / norm))
        .collect())
}
