use nalgebra::{Cholesky, Dyn, PermutationSequence};

use crate::error::Result;
use crate::{CVector, Complex64, DMatrix, Error};

/// Row count above which the projection matrix is never stored.
pub const DEFAULT_PROJECTION_CAP: usize = 4096;

// Relative threshold on the pivots of the Gram factorization.
const RANK_TOL: f64 = 1e-12;

#[derive(Debug, Clone)]
enum GramFactor {
    Cholesky(Cholesky<Complex64, Dyn>),
    // A P = Q R, so A^H A = P R^H R P^T.
    PivotedQr {
        r: DMatrix<Complex64>,
        perm: PermutationSequence<Dyn>,
    },
}

impl GramFactor {
    fn solve(&self, v: &CVector) -> CVector {
        match self {
            GramFactor::Cholesky(chol) => chol.solve(v),
            GramFactor::PivotedQr { r, perm } => {
                let mut w = v.clone();
                perm.permute_rows(&mut w);
                let s = r
                    .ad_solve_upper_triangular(&w)
                    .expect("triangular factor has a non-zero diagonal");
                let mut u = r
                    .solve_upper_triangular(&s)
                    .expect("triangular factor has a non-zero diagonal");
                perm.inv_permute_rows(&mut u);
                u
            }
        }
    }

    fn solve_matrix(&self, m: &DMatrix<Complex64>) -> DMatrix<Complex64> {
        let mut out = DMatrix::zeros(m.nrows(), m.ncols());
        for (j, col) in m.column_iter().enumerate() {
            out.set_column(j, &self.solve(&col.into_owned()));
        }
        out
    }
}

/// An explicit `N x K` complex sensing matrix with its Gram factorization,
/// pseudo-inverse and (for small, wide-enough problems) projection matrix.
#[derive(Debug, Clone)]
pub struct DenseOperator {
    entries: DMatrix<Complex64>,
    gram: GramFactor,
    pinv: DMatrix<Complex64>,
    projection: Option<DMatrix<Complex64>>,
    projection_cap: usize,
}

impl DenseOperator {
    pub fn new(entries: DMatrix<Complex64>) -> Result<Self> {
        Self::with_projection_cap(entries, DEFAULT_PROJECTION_CAP)
    }

    /// Builds the operator, storing the `N x N` projection only when
    /// `N <= cap` and a stored product is cheaper than `A (A^+ v)`, i.e.
    /// `N <= 2K`.
    pub fn with_projection_cap(entries: DMatrix<Complex64>, cap: usize) -> Result<Self> {
        let gram = factorize(&entries)?;
        Ok(Self::assemble(entries, gram, cap))
    }

    fn assemble(entries: DMatrix<Complex64>, gram: GramFactor, cap: usize) -> Self {
        let (n, k) = entries.shape();
        let pinv = gram.solve_matrix(&entries.adjoint());
        let projection = (n <= cap && n <= 2 * k).then(|| &entries * &pinv);
        DenseOperator {
            entries,
            gram,
            pinv,
            projection,
            projection_cap: cap,
        }
    }

    pub fn rows(&self) -> usize {
        self.entries.nrows()
    }

    pub fn cols(&self) -> usize {
        self.entries.ncols()
    }

    pub fn entries(&self) -> &DMatrix<Complex64> {
        &self.entries
    }

    pub fn has_cached_projection(&self) -> bool {
        self.projection.is_some()
    }

    /// True when the Gram system is solved through the pivoted-QR fallback.
    pub fn uses_qr_fallback(&self) -> bool {
        matches!(self.gram, GramFactor::PivotedQr { .. })
    }

    pub(crate) fn scaled(&self, factor: f64) -> Result<Self> {
        Self::with_projection_cap(
            self.entries.map(|a| a * factor),
            self.projection_cap,
        )
    }

    pub(crate) fn apply_unchecked(&self, x: &CVector) -> CVector {
        &self.entries * x
    }

    pub(crate) fn adjoint_unchecked(&self, v: &CVector) -> CVector {
        self.entries.ad_mul(v)
    }

    pub(crate) fn pinv_unchecked(&self, v: &CVector) -> CVector {
        &self.pinv * v
    }

    pub(crate) fn projection_unchecked(&self, v: &CVector) -> CVector {
        match &self.projection {
            Some(p) => p * v,
            None => self.apply_unchecked(&self.pinv_unchecked(v)),
        }
    }

    pub(crate) fn gram_solve_unchecked(&self, v: &CVector) -> CVector {
        self.gram.solve(v)
    }

    #[cfg(test)]
    fn with_forced_qr(entries: DMatrix<Complex64>) -> Result<Self> {
        let gram = pivoted_qr(&entries)?;
        Ok(Self::assemble(entries, gram, DEFAULT_PROJECTION_CAP))
    }
}

fn factorize(entries: &DMatrix<Complex64>) -> Result<GramFactor> {
    let (n, k) = entries.shape();
    if n == 0 || k == 0 {
        return Err(Error::InvalidArgument(format!(
            "sensing matrix must be non-empty, got {n}x{k}"
        )));
    }
    if entries.iter().any(|a| !a.re.is_finite() || !a.im.is_finite()) {
        return Err(Error::InvalidArgument(
            "sensing matrix has non-finite entries".into(),
        ));
    }
    if n < k {
        return Err(Error::RankDeficient);
    }
    let gram = entries.ad_mul(entries);
    if let Some(chol) = Cholesky::new(gram) {
        let diag = chol.l_dirty().diagonal();
        let max = diag.iter().map(|d| d.re).fold(0.0, f64::max);
        let min = diag.iter().map(|d| d.re).fold(f64::INFINITY, f64::min);
        // Squared pivot ratio bounds the conditioning of A^H A; beyond
        // sqrt(RANK_TOL) the normal equations lose too much accuracy.
        if min > RANK_TOL.sqrt() * max {
            return Ok(GramFactor::Cholesky(chol));
        }
    }
    pivoted_qr(entries)
}

fn pivoted_qr(entries: &DMatrix<Complex64>) -> Result<GramFactor> {
    let qr = entries.clone().col_piv_qr();
    let r = qr.r();
    let lead = r[(0, 0)].norm();
    if lead == 0.0 || (0..r.nrows()).any(|i| r[(i, i)].norm() <= RANK_TOL * lead) {
        return Err(Error::RankDeficient);
    }
    Ok(GramFactor::PivotedQr {
        r,
        perm: qr.p().clone(),
    })
}
