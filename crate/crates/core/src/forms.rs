//! Symmetric bilinear forms on R^n: inertia, restrictions to subspaces,
//! g-orthogonal complements and g-symmetry of linear maps.

use std::fmt;
use std::path::Path;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::linalg;
use crate::{Error, Result};

/// Threshold used for subspace equality (largest principal-angle sine).
pub const SUBSPACE_ANGLE_TOL: f64 = 1e-8;

/// A constant symmetric bilinear form `g` on R^n, stored by its Gram matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct MetricForm {
    entries: DMatrix<f64>,
}

impl MetricForm {
    /// Builds the form from a square matrix. The stored matrix is the exact
    /// symmetric part of the input.
    pub fn new(entries: DMatrix<f64>) -> Result<Self> {
        if entries.nrows() != entries.ncols() || entries.nrows() == 0 {
            return Err(Error::Dimension(format!(
                "metric must be a non-empty square matrix, got {}x{}",
                entries.nrows(),
                entries.ncols()
            )));
        }
        let n = entries.nrows();
        let mut sym = entries.clone();
        for i in 0..n {
            for j in (i + 1)..n {
                let v = 0.5 * (entries[(i, j)] + entries[(j, i)]);
                sym[(i, j)] = v;
                sym[(j, i)] = v;
            }
        }
        Ok(Self { entries: sym })
    }

    pub fn diagonal(diag: &[f64]) -> Self {
        Self {
            entries: DMatrix::from_diagonal(&nalgebra::DVector::from_column_slice(diag)),
        }
    }

    /// Lorentzian form diag(1, ..., 1, -1) on R^n.
    pub fn minkowski(n: usize) -> Self {
        let mut d = vec![1.0; n];
        d[n - 1] = -1.0;
        Self::diagonal(&d)
    }

    pub fn euclidean(n: usize) -> Self {
        Self::diagonal(&vec![1.0; n])
    }

    pub fn n(&self) -> usize {
        self.entries.nrows()
    }

    pub fn entries(&self) -> &DMatrix<f64> {
        &self.entries
    }

    pub fn eval(&self, u: &[f64], v: &[f64]) -> f64 {
        let n = self.n();
        let mut s = 0.0;
        for i in 0..n {
            for j in 0..n {
                s += u[i] * self.entries[(i, j)] * v[j];
            }
        }
        s
    }

    /// Ratio of smallest to largest singular value.
    pub fn conditioning(&self) -> f64 {
        let sv = linalg::singular_values(&self.entries);
        let smax = sv.iter().cloned().fold(0.0, f64::max);
        let smin = sv.iter().cloned().fold(f64::INFINITY, f64::min);
        if smax == 0.0 {
            0.0
        } else {
            smin / smax
        }
    }

    pub fn is_nondegenerate(&self, tol_rank: f64) -> bool {
        self.conditioning() >= tol_rank
    }

    pub fn ensure_nondegenerate(&self, tol_rank: f64) -> Result<()> {
        let ratio = self.conditioning();
        if ratio >= tol_rank {
            Ok(())
        } else {
            Err(Error::DegenerateMetric { ratio })
        }
    }

    pub fn inertia(&self, tol_eig: f64) -> Inertia {
        inertia(&self.entries, tol_eig)
    }

    pub fn scaled(&self, c: f64) -> Self {
        Self {
            entries: &self.entries * c,
        }
    }
}

/// Counts of positive, negative and zero eigenvalues of a symmetric form.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Inertia {
    pub n_plus: usize,
    pub n_minus: usize,
    pub n_zero: usize,
}

impl Inertia {
    pub fn signature(&self) -> i64 {
        self.n_plus as i64 - self.n_minus as i64
    }

    pub fn dim(&self) -> usize {
        self.n_plus + self.n_minus + self.n_zero
    }

    pub fn rank(&self) -> usize {
        self.n_plus + self.n_minus
    }

    pub fn is_degenerate(&self) -> bool {
        self.n_zero > 0
    }
}

impl fmt::Display for Inertia {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {}, {})", self.n_plus, self.n_minus, self.n_zero)
    }
}

/// Inertia together with the spectrum it was read from.
#[derive(Clone, Debug)]
pub struct InertiaDetail {
    pub inertia: Inertia,
    pub eigenvalues: Vec<f64>,
    pub threshold: f64,
}

impl InertiaDetail {
    /// Smallest |eigenvalue| among the nonzero ones, relative to the threshold
    /// scale. Large values mean the count is robust.
    pub fn margin(&self) -> f64 {
        self.eigenvalues
            .iter()
            .map(|e| e.abs())
            .filter(|e| *e > self.threshold)
            .fold(f64::INFINITY, f64::min)
    }
}

/// Inertia of a symmetric matrix. Eigenvalues within
/// `tol_eig * max(1, ||form||)` of zero count as zero.
pub fn inertia(form: &DMatrix<f64>, tol_eig: f64) -> Inertia {
    inertia_detailed(form, tol_eig).inertia
}

pub fn inertia_detailed(form: &DMatrix<f64>, tol_eig: f64) -> InertiaDetail {
    let eigenvalues = linalg::sym_eigenvalues(form);
    let norm = eigenvalues.iter().map(|e| e.abs()).fold(0.0, f64::max);
    let threshold = tol_eig * norm.max(1.0);
    let mut inertia = Inertia::default();
    for &e in &eigenvalues {
        if e > threshold {
            inertia.n_plus += 1;
        } else if e < -threshold {
            inertia.n_minus += 1;
        } else {
            inertia.n_zero += 1;
        }
    }
    InertiaDetail {
        inertia,
        eigenvalues,
        threshold,
    }
}

/// A linear subspace of R^n given by linearly independent basis columns.
#[derive(Clone, Debug, PartialEq)]
pub struct Subspace {
    ambient_dim: usize,
    basis: DMatrix<f64>,
}

impl Subspace {
    /// Builds a subspace from the columns of `basis` (n x k). Fails when the
    /// columns are not independent at `tol_rank`.
    pub fn new(basis: DMatrix<f64>, tol_rank: f64) -> Result<Self> {
        let k = basis.ncols();
        if k > 0 && linalg::rank(&basis, tol_rank) != k {
            return Err(Error::InvalidInput(
                "subspace basis vectors are linearly dependent".into(),
            ));
        }
        Ok(Self {
            ambient_dim: basis.nrows(),
            basis,
        })
    }

    /// Subspace from basis vectors given as rows.
    pub fn from_vectors(ambient_dim: usize, vectors: &[Vec<f64>], tol_rank: f64) -> Result<Self> {
        if vectors.iter().any(|v| v.len() != ambient_dim) {
            return Err(Error::Dimension(format!(
                "basis vectors must have length {ambient_dim}"
            )));
        }
        let basis = DMatrix::from_fn(ambient_dim, vectors.len(), |i, j| vectors[j][i]);
        Self::new(basis, tol_rank)
    }

    pub fn zero(ambient_dim: usize) -> Self {
        Self {
            ambient_dim,
            basis: DMatrix::zeros(ambient_dim, 0),
        }
    }

    pub fn full(ambient_dim: usize) -> Self {
        Self {
            ambient_dim,
            basis: DMatrix::identity(ambient_dim, ambient_dim),
        }
    }

    pub fn ambient_dim(&self) -> usize {
        self.ambient_dim
    }

    pub fn dim(&self) -> usize {
        self.basis.ncols()
    }

    pub fn basis(&self) -> &DMatrix<f64> {
        &self.basis
    }

    pub fn vectors(&self) -> Vec<Vec<f64>> {
        (0..self.dim())
            .map(|j| self.basis.column(j).iter().cloned().collect())
            .collect()
    }

    /// Equal column spans, decided by principal angles.
    pub fn same_span(&self, other: &Subspace) -> bool {
        self.ambient_dim == other.ambient_dim
            && linalg::max_principal_sine(&self.basis, &other.basis, 1e-12)
                .is_some_and(|s| s < SUBSPACE_ANGLE_TOL)
    }

    pub fn contains(&self, v: &[f64]) -> bool {
        let v = nalgebra::DVector::from_column_slice(v);
        let norm = v.norm();
        if norm == 0.0 {
            return true;
        }
        let q = linalg::orthonormal_span(&self.basis, 1e-12);
        let residual = &v - &q * (q.transpose() * &v);
        residual.norm() < SUBSPACE_ANGLE_TOL * norm
    }
}

/// Gram matrix of `g` on the basis of `w`.
pub fn restrict(g: &MetricForm, w: &Subspace) -> Result<DMatrix<f64>> {
    if w.ambient_dim() != g.n() {
        return Err(Error::Dimension(format!(
            "subspace lives in R^{} but metric is on R^{}",
            w.ambient_dim(),
            g.n()
        )));
    }
    Ok(linalg::symmetrize(&(w.basis().transpose() * g.entries() * w.basis())))
}

/// Orthonormal (Euclidean) basis of `{v : g(v, w) = 0 for all w in W}`.
pub fn g_orthogonal_complement(g: &MetricForm, w: &Subspace, tol_rank: f64) -> Result<Subspace> {
    g.ensure_nondegenerate(tol_rank)?;
    if w.ambient_dim() != g.n() {
        return Err(Error::Dimension("subspace/metric dimension mismatch".into()));
    }
    if w.dim() == 0 {
        return Ok(Subspace::full(g.n()));
    }
    let constraints = w.basis().transpose() * g.entries();
    let basis = linalg::null_space(&constraints, 1e-12);
    Ok(Subspace {
        ambient_dim: g.n(),
        basis,
    })
}

/// Whether `a` is g-symmetric: `||GA - A^T G|| <= tol * ||GA||` (Frobenius).
pub fn check_g_symmetric(g: &MetricForm, a: &DMatrix<f64>, tol: f64) -> bool {
    g_symmetry_defect(g.entries(), a) <= tol
}

/// Relative defect `||GA - A^T G|| / ||GA||` (zero when `GA` vanishes).
pub fn g_symmetry_defect(gram: &DMatrix<f64>, a: &DMatrix<f64>) -> f64 {
    let ga = gram * a;
    let defect = (&ga - a.transpose() * gram).norm();
    let scale = ga.norm();
    if scale == 0.0 {
        0.0
    } else {
        defect / scale
    }
}

/// Per-sample inertia along a sampled curve of symmetric matrices.
pub fn matrix_curve_inertia(samples: &[(f64, DMatrix<f64>)], tol_eig: f64) -> Vec<(f64, Inertia)> {
    samples
        .iter()
        .map(|(t, m)| (*t, inertia(m, tol_eig)))
        .collect()
}

/// A symmetric matrix curve `B(t) = sum_k t^k C_k`, used by the jump fixtures.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PolynomialMatrixCurve {
    pub name: String,
    pub n: usize,
    /// Coefficient matrices `C_0, C_1, ...` as lists of rows.
    pub coefficients: Vec<Vec<Vec<f64>>>,
}

impl PolynomialMatrixCurve {
    pub fn eval(&self, t: f64) -> DMatrix<f64> {
        let mut out = DMatrix::zeros(self.n, self.n);
        let mut p = 1.0;
        for c in &self.coefficients {
            for i in 0..self.n {
                for j in 0..self.n {
                    out[(i, j)] += p * c[i][j];
                }
            }
            p *= t;
        }
        out
    }

    pub fn sample(&self, ts: &[f64]) -> Vec<(f64, DMatrix<f64>)> {
        ts.iter().map(|&t| (t, self.eval(t))).collect()
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let curve: Self = serde_json::from_str(&text).map_err(|e| Error::Parse {
            line: e.line(),
            column: e.column(),
            message: e.to_string(),
        })?;
        for c in &curve.coefficients {
            if c.len() != curve.n || c.iter().any(|r| r.len() != curve.n) {
                return Err(Error::Schema(format!(
                    "coefficient of curve '{}' is not {}x{}",
                    curve.name, curve.n, curve.n
                )));
            }
        }
        Ok(curve)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    const TOL: f64 = 1e-9;

    fn m(rows: usize, cols: usize, data: &[f64]) -> DMatrix<f64> {
        DMatrix::from_row_slice(rows, cols, data)
    }

    fn span(n: usize, vectors: &[&[f64]]) -> Subspace {
        let v: Vec<Vec<f64>> = vectors.iter().map(|v| v.to_vec()).collect();
        Subspace::from_vectors(n, &v, 1e-10).unwrap()
    }

    #[test]
    fn inertia_examples() {
        let i = inertia(&m(2, 2, &[1.0, 0.0, 0.0, -1.0]), TOL);
        assert_eq!(i, Inertia { n_plus: 1, n_minus: 1, n_zero: 0 });
        assert_eq!(inertia(&DMatrix::identity(3, 3), TOL).n_plus, 3);
        let b1 = m(2, 2, &[0.25, -0.5, -0.5, 0.5]);
        assert_eq!(inertia(&b1, TOL).n_minus, 1);
    }

    #[test]
    fn inertia_threshold_scales_with_norm() {
        // threshold is tol * max(1, ||A||) = 1e-3 here, so 1e-5 counts as zero
        let a = m(2, 2, &[1e6, 0.0, 0.0, 1e-5]);
        assert_eq!(inertia(&a, 1e-9).n_zero, 1);
        assert_eq!(inertia(&a, 1e-12).n_zero, 0);
        // small matrices use the absolute floor of 1
        assert_eq!(inertia(&m(1, 1, &[1e-10]), 1e-9).n_zero, 1);
    }

    #[test]
    fn restrict_examples() {
        let g = MetricForm::diagonal(&[1.0, -1.0]);
        assert_eq!(restrict(&g, &span(2, &[&[0.0, 1.0]])).unwrap(), m(1, 1, &[-1.0]));
        assert_eq!(restrict(&g, &Subspace::full(2)).unwrap(), m(2, 2, &[1.0, 0.0, 0.0, -1.0]));
        let g3 = MetricForm::diagonal(&[1.0, 1.0, -1.0]);
        let w = span(3, &[&[1.0, 0.0, 1.0]]);
        assert_eq!(restrict(&g3, &w).unwrap(), m(1, 1, &[0.0]));
    }

    #[test]
    fn restrict_rejects_dimension_mismatch() {
        let g = MetricForm::euclidean(2);
        assert!(restrict(&g, &Subspace::full(3)).is_err());
    }

    #[test]
    fn complement_examples() {
        let g = MetricForm::diagonal(&[1.0, -1.0]);
        let c = g_orthogonal_complement(&g, &span(2, &[&[0.0, 1.0]]), 1e-7).unwrap();
        assert!(c.same_span(&span(2, &[&[1.0, 0.0]])));

        let g3 = MetricForm::diagonal(&[1.0, 1.0, -1.0]);
        let c = g_orthogonal_complement(&g3, &span(3, &[&[0.0, 1.0, 1.0]]), 1e-7).unwrap();
        assert_eq!(c.dim(), 2);
        assert!(c.contains(&[1.0, 0.0, 0.0]));
        assert!(c.contains(&[0.0, 1.0, 1.0]));

        let c = g_orthogonal_complement(&g, &Subspace::zero(2), 1e-7).unwrap();
        assert_eq!(c.dim(), 2);
    }

    #[test]
    fn complement_rejects_degenerate_metric() {
        let g = MetricForm::diagonal(&[1.0, 0.0]);
        let err = g_orthogonal_complement(&g, &Subspace::zero(2), 1e-7).unwrap_err();
        assert!(matches!(err, Error::DegenerateMetric { .. }));
    }

    #[test]
    fn g_symmetry_examples() {
        let id = MetricForm::euclidean(2);
        assert!(check_g_symmetric(&id, &m(2, 2, &[2.0, 3.0, 3.0, -1.0]), TOL));
        let g = MetricForm::diagonal(&[1.0, -1.0]);
        assert!(!check_g_symmetric(&g, &m(2, 2, &[0.0, 1.0, 1.0, 0.0]), TOL));
        // G A = [[0,1],[1,0]] is symmetric
        assert!(check_g_symmetric(&g, &m(2, 2, &[0.0, 1.0, -1.0, 0.0]), TOL));
    }

    #[test]
    fn remark_jump_table() {
        let b1 = |t: f64| m(2, 2, &[t * t, t, t, 1.0 + t]);
        let b2 = |t: f64| m(2, 2, &[t * t, 0.0, 0.0, 1.0]);
        let s1 = matrix_curve_inertia(&[(-0.5, b1(-0.5)), (0.0, b1(0.0)), (0.5, b1(0.5))], TOL);
        let s2 = matrix_curve_inertia(&[(-0.5, b2(-0.5)), (0.0, b2(0.0)), (0.5, b2(0.5))], TOL);
        assert_eq!(
            s1.iter().map(|(_, i)| i.n_minus).collect::<Vec<_>>(),
            vec![1, 0, 0]
        );
        assert_eq!(
            s2.iter().map(|(_, i)| i.n_minus).collect::<Vec<_>>(),
            vec![0, 0, 0]
        );
        assert_eq!(s1[1].1.n_zero, 1);
        assert_eq!(s2[1].1.n_zero, 1);
    }

    #[test]
    fn polynomial_curve_eval() {
        let c = PolynomialMatrixCurve {
            name: "b1".into(),
            n: 2,
            coefficients: vec![
                vec![vec![0.0, 0.0], vec![0.0, 1.0]],
                vec![vec![0.0, 1.0], vec![1.0, 1.0]],
                vec![vec![1.0, 0.0], vec![0.0, 0.0]],
            ],
        };
        assert_eq!(c.eval(-0.5), m(2, 2, &[0.25, -0.5, -0.5, 0.5]));
    }

    fn matrix_strategy(n: usize) -> impl Strategy<Value = DMatrix<f64>> {
        proptest::collection::vec(-1.0f64..1.0, n * n)
            .prop_map(move |v| DMatrix::from_row_slice(n, n, &v))
    }

    fn well_conditioned(n: usize) -> impl Strategy<Value = DMatrix<f64>> {
        matrix_strategy(n).prop_map(move |a| a * 0.3 + DMatrix::identity(n, n))
    }

    proptest! {
        #[test]
        fn sylvester_congruence_invariance(a in matrix_strategy(4), t in well_conditioned(4)) {
            let g = linalg::symmetrize(&a);
            let lhs = inertia(&(t.transpose() * &g * &t), 1e-9);
            let rhs = inertia(&g, 1e-9);
            // Congruence can move eigenvalues across the zero threshold only when
            // they already sit next to it.
            let detail = inertia_detailed(&g, 1e-9);
            prop_assume!(detail.margin() > 1e-6);
            prop_assert_eq!(lhs, rhs);
        }

        #[test]
        fn plus_minus_is_rank(a in matrix_strategy(5), k in 0usize..5) {
            // force rank <= 5 - k by zeroing a block of a congruent diagonal
            let g = linalg::symmetrize(&a);
            let eig = nalgebra::SymmetricEigen::new(g.clone());
            let mut d = eig.eigenvalues.clone();
            for i in 0..k { d[i] = 0.0; }
            let h = &eig.eigenvectors * DMatrix::from_diagonal(&d) * eig.eigenvectors.transpose();
            let det = inertia_detailed(&h, 1e-9);
            prop_assume!(det.margin() > 1e-6);
            prop_assert_eq!(det.inertia.rank(), linalg::rank(&h, 1e-9));
        }

        #[test]
        fn complement_is_involution(b in proptest::collection::vec(-1.0f64..1.0, 8)) {
            let g = MetricForm::diagonal(&[1.0, 1.0, 1.0, -1.0]);
            let w = Subspace::new(DMatrix::from_column_slice(4, 2, &b), 1e-6);
            prop_assume!(w.is_ok());
            let w = w.unwrap();
            let gw = inertia_detailed(&restrict(&g, &w).unwrap(), 1e-9);
            prop_assume!(gw.inertia.n_zero == 0 && gw.margin() > 1e-3);
            let perp = g_orthogonal_complement(&g, &w, 1e-7).unwrap();
            prop_assert_eq!(perp.dim(), 2);
            let back = g_orthogonal_complement(&g, &perp, 1e-7).unwrap();
            prop_assert!(back.same_span(&w));
        }

        #[test]
        fn restricted_inertia_is_basis_independent(
            b in proptest::collection::vec(-1.0f64..1.0, 6),
            c in well_conditioned(2),
        ) {
            let g = MetricForm::diagonal(&[1.0, 1.0, -1.0]);
            let w = Subspace::new(DMatrix::from_column_slice(3, 2, &b), 1e-6);
            prop_assume!(w.is_ok());
            let w = w.unwrap();
            let w2 = Subspace::new(w.basis() * &c, 1e-9).unwrap();
            let d1 = inertia_detailed(&restrict(&g, &w).unwrap(), 1e-9);
            prop_assume!(d1.margin() > 1e-6);
            let d2 = inertia(&restrict(&g, &w2).unwrap(), 1e-9);
            prop_assert_eq!(d1.inertia, d2);
        }
    }
}
