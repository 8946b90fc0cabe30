//! Small dense linear-algebra helpers on top of nalgebra.

use nalgebra::{ColPivQR, DMatrix, DVector, SymmetricEigen, QR, SVD};

pub fn symmetrize(a: &DMatrix<f64>) -> DMatrix<f64> {
    (a + a.transpose()) * 0.5
}

/// Thin SVD `a = U diag(s) Vᵀ`.
#[derive(Clone, Debug)]
pub struct Svd {
    pub u: DMatrix<f64>,
    pub singular_values: DVector<f64>,
    pub v_t: DMatrix<f64>,
}

fn svd_direct(a: &DMatrix<f64>) -> Svd {
    let s = SVD::new(a.clone(), true, true);
    Svd {
        u: s.u.expect("u requested"),
        singular_values: s.singular_values,
        v_t: s.v_t.expect("v_t requested"),
    }
}

fn recompose_error(a: &DMatrix<f64>, s: &Svd) -> f64 {
    (&s.u * DMatrix::from_diagonal(&s.singular_values) * &s.v_t - a).amax()
}

/// SVD checked against its own reconstruction. nalgebra's bidiagonal
/// iteration occasionally stalls on large difference-like operators in one
/// orientation or the other, so both are tried and the more accurate kept.
pub fn svd(a: &DMatrix<f64>) -> Svd {
    let first = svd_direct(a);
    let err = recompose_error(a, &first);
    if err <= 1e-12 * a.amax().max(f64::MIN_POSITIVE) * (a.nrows().max(a.ncols()) as f64) {
        return first;
    }
    let t = svd_direct(&a.transpose());
    let second = Svd { u: t.v_t.transpose(), singular_values: t.singular_values, v_t: t.u.transpose() };
    if recompose_error(a, &second) < err {
        second
    } else {
        first
    }
}

pub fn singular_values(a: &DMatrix<f64>) -> DVector<f64> {
    if a.nrows() == 0 || a.ncols() == 0 {
        return DVector::zeros(0);
    }
    if a.nrows() > a.ncols() {
        SVD::new(a.transpose(), false, false).singular_values
    } else {
        SVD::new(a.clone(), false, false).singular_values
    }
}

pub fn spectral_norm(a: &DMatrix<f64>) -> f64 {
    singular_values(a).iter().cloned().fold(0.0, f64::max)
}

/// Numerical rank: singular values above `tol_rel * sigma_max`.
pub fn rank(a: &DMatrix<f64>, tol_rel: f64) -> usize {
    let sv = singular_values(a);
    let smax = sv.iter().cloned().fold(0.0, f64::max);
    if smax == 0.0 {
        return 0;
    }
    sv.iter().filter(|s| **s > tol_rel * smax).count()
}

/// Eigenvalues of a symmetric matrix in ascending order.
pub fn sym_eigenvalues(a: &DMatrix<f64>) -> Vec<f64> {
    if a.nrows() == 0 {
        return Vec::new();
    }
    let mut ev: Vec<f64> = SymmetricEigen::new(symmetrize(a)).eigenvalues.iter().cloned().collect();
    ev.sort_by(|x, y| x.total_cmp(y));
    ev
}

/// Above this size spans come from column-pivoted QR, which stays accurate
/// where the SVD iteration does not.
const SVD_SPAN_LIMIT: usize = 32;

/// Orthonormal basis (columns) of the column span of `a`, rank decided at `tol_rel`.
pub fn orthonormal_span(a: &DMatrix<f64>, tol_rel: f64) -> DMatrix<f64> {
    let rows = a.nrows();
    if a.ncols() == 0 || rows == 0 {
        return DMatrix::zeros(rows, 0);
    }
    if rows.max(a.ncols()) > SVD_SPAN_LIMIT {
        return pivoted_span(a, tol_rel);
    }
    let svd = svd(a);
    let u = svd.u;
    let smax = svd.singular_values.iter().cloned().fold(0.0, f64::max);
    if smax == 0.0 {
        return DMatrix::zeros(rows, 0);
    }
    let keep: Vec<usize> = (0..svd.singular_values.len())
        .filter(|&i| svd.singular_values[i] > tol_rel * smax)
        .collect();
    DMatrix::from_fn(rows, keep.len(), |i, j| u[(i, keep[j])])
}

fn pivoted_span(a: &DMatrix<f64>, tol_rel: f64) -> DMatrix<f64> {
    let rows = a.nrows();
    let qr = ColPivQR::new(a.clone());
    let r = qr.r();
    let lead = r[(0, 0)].abs();
    if lead == 0.0 {
        return DMatrix::zeros(rows, 0);
    }
    let rank = (0..r.nrows().min(r.ncols())).take_while(|&i| r[(i, i)].abs() > tol_rel * lead).count();
    qr.q().columns(0, rank).into_owned()
}

/// Orthonormal basis of the Euclidean orthogonal complement of the span of the
/// orthonormal columns `basis`.
pub fn orthogonal_complement(basis: &DMatrix<f64>) -> DMatrix<f64> {
    let d = basis.nrows();
    let r = basis.ncols();
    if r == 0 {
        return DMatrix::identity(d, d);
    }
    if r >= d {
        return DMatrix::zeros(d, 0);
    }
    let qr = QR::new(basis.clone());
    let mut qt = DMatrix::<f64>::identity(d, d);
    qr.q_tr_mul(&mut qt);
    // rows r.. of Q^T are the complement directions
    DMatrix::from_fn(d, d - r, |i, j| qt[(r + j, i)])
}

/// Orthonormal basis (columns) of the null space of `a`.
pub fn null_space(a: &DMatrix<f64>, tol_rel: f64) -> DMatrix<f64> {
    let row_space = orthonormal_span(&a.transpose(), tol_rel);
    orthogonal_complement(&row_space)
}

/// Largest principal-angle sine between two subspaces given by column bases.
/// Returns `None` when the dimensions differ.
pub fn max_principal_sine(a: &DMatrix<f64>, b: &DMatrix<f64>, tol_rel: f64) -> Option<f64> {
    let qa = orthonormal_span(a, tol_rel);
    let qb = orthonormal_span(b, tol_rel);
    if qa.ncols() != qb.ncols() {
        return None;
    }
    if qa.ncols() == 0 {
        return Some(0.0);
    }
    let residual = &qb - &qa * (qa.transpose() * &qb);
    Some(spectral_norm(&residual))
}

/// Cubic Hermite interpolation of a matrix-valued track given values and
/// derivatives on a strictly increasing grid.
#[derive(Clone, Debug)]
pub struct HermiteTrack {
    pub grid: Vec<f64>,
    pub values: Vec<DMatrix<f64>>,
    pub derivs: Vec<DMatrix<f64>>,
}

impl HermiteTrack {
    pub fn new(grid: Vec<f64>, values: Vec<DMatrix<f64>>, derivs: Vec<DMatrix<f64>>) -> Self {
        assert_eq!(grid.len(), values.len());
        assert_eq!(grid.len(), derivs.len());
        assert!(grid.len() >= 2);
        Self { grid, values, derivs }
    }

    fn locate(&self, t: f64) -> usize {
        let last = self.grid.len() - 2;
        match self
            .grid
            .binary_search_by(|probe| probe.total_cmp(&t))
        {
            Ok(i) => i.min(last),
            Err(i) => i.saturating_sub(1).min(last),
        }
    }

    /// Value and first derivative at `t` (clamped to the grid range).
    pub fn eval(&self, t: f64) -> (DMatrix<f64>, DMatrix<f64>) {
        let t = t.clamp(self.grid[0], *self.grid.last().unwrap());
        let i = self.locate(t);
        let (t0, t1) = (self.grid[i], self.grid[i + 1]);
        let h = t1 - t0;
        let s = (t - t0) / h;
        let s2 = s * s;
        let s3 = s2 * s;
        let h00 = 2.0 * s3 - 3.0 * s2 + 1.0;
        let h10 = s3 - 2.0 * s2 + s;
        let h01 = -2.0 * s3 + 3.0 * s2;
        let h11 = s3 - s2;
        let d00 = (6.0 * s2 - 6.0 * s) / h;
        let d10 = 3.0 * s2 - 4.0 * s + 1.0;
        let d01 = (-6.0 * s2 + 6.0 * s) / h;
        let d11 = 3.0 * s2 - 2.0 * s;
        let (y0, y1) = (&self.values[i], &self.values[i + 1]);
        let (m0, m1) = (&self.derivs[i], &self.derivs[i + 1]);
        let value = y0 * h00 + m0 * (h10 * h) + y1 * h01 + m1 * (h11 * h);
        let deriv = y0 * d00 + m0 * d10 + y1 * d01 + m1 * d11;
        (value, deriv)
    }

    pub fn value(&self, t: f64) -> DMatrix<f64> {
        self.eval(t).0
    }
}

/// Convert nested rows into a matrix; all rows must share one length.
pub fn from_rows(rows: &[Vec<f64>], ncols: usize) -> Option<DMatrix<f64>> {
    if rows.iter().any(|r| r.len() != ncols) {
        return None;
    }
    Some(DMatrix::from_fn(rows.len(), ncols, |i, j| rows[i][j]))
}

pub fn to_rows(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    (0..m.nrows())
        .map(|i| (0..m.ncols()).map(|j| m[(i, j)]).collect())
        .collect()
}
