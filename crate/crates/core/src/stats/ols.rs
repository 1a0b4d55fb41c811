//! Least squares by Householder QR with column pivoting.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// A column whose residual norm after projecting out the pivoted columns
/// falls below this fraction of its own norm counts as dependent.
const RANK_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub struct LinearModelFit {
    pub coefficients: DVector<f64>,
    pub residual_sum_squares: f64,
    /// Residual variance times (XᵀX)⁻¹.
    pub coefficient_covariance: DMatrix<f64>,
    pub design_column_names: Vec<String>,
    pub df_residual: usize,
}

impl LinearModelFit {
    pub fn predict(&self, row: &DVector<f64>) -> f64 {
        self.coefficients.dot(row)
    }

    /// Standard error of the linear combination `row · β`.
    pub fn prediction_se(&self, row: &DVector<f64>) -> f64 {
        (row.transpose() * &self.coefficient_covariance * row)[(0, 0)]
            .max(0.0)
            .sqrt()
    }
}

struct PivotedQr {
    /// Householder-reduced copy of the design; R sits in the upper triangle.
    a: DMatrix<f64>,
    /// Qᵀy
    qty: DVector<f64>,
    perm: Vec<usize>,
}

fn column_name(names: &[String], j: usize) -> String {
    names.get(j).cloned().unwrap_or_else(|| format!("x{j}"))
}

fn pivoted_qr(design: &DMatrix<f64>, response: &DVector<f64>, names: &[String]) -> Result<PivotedQr> {
    let (n, p) = design.shape();
    let mut a = design.clone();
    let mut qty = response.clone();
    let mut perm: Vec<usize> = (0..p).collect();
    let original_norms: Vec<f64> = (0..p).map(|j| design.column(j).norm()).collect();

    for k in 0..p {
        // pivot: largest residual norm relative to the column's own scale
        let mut best = k;
        let mut best_ratio = -1.0;
        for j in k..p {
            let norm0 = original_norms[perm[j]];
            let ratio = if norm0 > 0.0 {
                a.view((k, j), (n - k, 1)).norm() / norm0
            } else {
                0.0
            };
            if ratio > best_ratio {
                best_ratio = ratio;
                best = j;
            }
        }
        if best_ratio <= RANK_TOLERANCE {
            let dependent = perm[k..].iter().copied().max().expect("remaining columns");
            return Err(Error::RankDeficient(column_name(names, dependent)));
        }
        a.swap_columns(k, best);
        perm.swap(k, best);

        let norm = (k..n).map(|i| a[(i, k)].powi(2)).sum::<f64>().sqrt();
        let alpha = if a[(k, k)] >= 0.0 { -norm } else { norm };
        let mut v: Vec<f64> = (k..n).map(|i| a[(i, k)]).collect();
        v[0] -= alpha;
        let vnorm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if vnorm > 0.0 {
            v.iter_mut().for_each(|x| *x /= vnorm);
            for j in k..p {
                let proj = 2.0 * (k..n).map(|i| v[i - k] * a[(i, j)]).sum::<f64>();
                for i in k..n {
                    a[(i, j)] -= proj * v[i - k];
                }
            }
            let proj = 2.0 * (k..n).map(|i| v[i - k] * qty[i]).sum::<f64>();
            for i in k..n {
                qty[i] -= proj * v[i - k];
            }
        }
        a[(k, k)] = alpha;
        for i in k + 1..n {
            a[(i, k)] = 0.0;
        }
    }
    Ok(PivotedQr { a, qty, perm })
}

/// Fit `response ≈ design · β`. Requires more rows than columns and full
/// column rank; otherwise names the offending column.
pub fn ols_fit(design: &DMatrix<f64>, response: &[f64], names: &[String]) -> Result<LinearModelFit> {
    let (n, p) = design.shape();
    if response.len() != n {
        return Err(Error::Domain(format!(
            "{n} design rows but {} responses",
            response.len()
        )));
    }
    if p == 0 || n <= p {
        return Err(Error::TooFewRows { rows: n, cols: p });
    }
    if design.iter().chain(response).any(|v| !v.is_finite()) {
        return Err(Error::Domain("non-finite value in regression data".into()));
    }
    let y = DVector::from_column_slice(response);
    let qr = pivoted_qr(design, &y, names)?;

    let r = qr.a.view((0, 0), (p, p)).upper_triangle();
    let z = r
        .solve_upper_triangular(&qr.qty.rows(0, p).clone_owned())
        .ok_or_else(|| Error::RankDeficient(column_name(names, qr.perm[p - 1])))?;
    let mut beta = DVector::zeros(p);
    for (i, &j) in qr.perm.iter().enumerate() {
        beta[j] = z[i];
    }

    let residuals = &y - design * &beta;
    let rss = residuals.norm_squared();
    let df = n - p;

    let r_inv = r
        .solve_upper_triangular(&DMatrix::identity(p, p))
        .ok_or_else(|| Error::RankDeficient(column_name(names, qr.perm[p - 1])))?;
    let unscaled = &r_inv * r_inv.transpose();
    let sigma2 = rss / df as f64;
    let mut cov = DMatrix::zeros(p, p);
    for (i, &pi) in qr.perm.iter().enumerate() {
        for (j, &pj) in qr.perm.iter().enumerate() {
            cov[(pi, pj)] = sigma2 * unscaled[(i, j)];
        }
    }

    Ok(LinearModelFit {
        coefficients: beta,
        residual_sum_squares: rss,
        coefficient_covariance: cov,
        design_column_names: (0..p).map(|j| column_name(names, j)).collect(),
        df_residual: df,
    })
}

/// Whether the columns of `design` are linearly independent.
pub fn has_full_column_rank(design: &DMatrix<f64>) -> bool {
    let zeros = DVector::zeros(design.nrows());
    design.ncols() <= design.nrows() && pivoted_qr(design, &zeros, &[]).is_ok()
}
