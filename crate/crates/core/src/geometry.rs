//! Reduction of a semi-Riemannian geodesic problem to a Morse–Sturm system by
//! parallel trivialization.
//!
//! Curvature convention: `R(X, Y) = ∇_X ∇_Y - ∇_Y ∇_X - ∇_[X,Y]`. With it the
//! Jacobi equation reads `J'' = R(γ', J) γ'`, so the trivialized coefficient is
//! `+` the frame components of `R(γ', E_j) γ'`. The conformally flat chart
//! `e^{t^2}(dx^2 - dt^2)` pins this down: along the x-axis it must give
//! `v'' = 0, w'' + w = 0`.

use nalgebra::{DMatrix, DVector};

use crate::forms::{self, MetricForm, Subspace};
use crate::linalg::HermiteTrack;
use crate::ode::{self, OdeOptions};
use crate::problem::{BoundaryData, CoefficientPath, MorseSturmProblem, SampledPath, WitnessSeed};
use crate::{Error, Result, Tolerances};

/// Central-difference step for derivatives of Christoffel symbols.
pub const H_FD: f64 = 1e-5;
/// Number of samples of the trivialized coefficient path.
pub const TRIVIALIZE_SAMPLES: usize = 513;
/// Relative g-symmetry tolerance for the trivialized curvature.
pub const CURVATURE_SYMMETRY_TOL: f64 = 1e-6;

/// A metric on an open subset of R^n given in one chart.
pub trait MetricChart: Sync {
    fn name(&self) -> &str;
    fn dim(&self) -> usize;
    /// Metric at `x`, or `None` outside the chart domain.
    fn metric(&self, x: &DVector<f64>) -> Option<DMatrix<f64>>;
    /// `∂_l g` for `l = 0..n`. Defaults to central differences.
    fn metric_partials(&self, x: &DVector<f64>) -> Option<Vec<DMatrix<f64>>> {
        (0..self.dim())
            .map(|l| {
                let mut e = DVector::zeros(self.dim());
                e[l] = H_FD;
                Some((self.metric(&(x + &e))? - self.metric(&(x - &e))?) / (2.0 * H_FD))
            })
            .collect()
    }
}

/// Flat metric `diag(1, ..., 1, -1)`.
#[derive(Clone, Debug)]
pub struct Minkowski {
    name: String,
    n: usize,
}

impl Minkowski {
    pub fn new(n: usize) -> Self {
        Self { name: format!("minkowski{n}"), n }
    }
}

impl MetricChart for Minkowski {
    fn name(&self) -> &str {
        &self.name
    }
    fn dim(&self) -> usize {
        self.n
    }
    fn metric(&self, x: &DVector<f64>) -> Option<DMatrix<f64>> {
        x.iter().all(|v| v.is_finite()).then(|| MetricForm::minkowski(self.n).entries().clone())
    }
    fn metric_partials(&self, x: &DVector<f64>) -> Option<Vec<DMatrix<f64>>> {
        x.iter()
            .all(|v| v.is_finite())
            .then(|| vec![DMatrix::zeros(self.n, self.n); self.n])
    }
}

/// `e^{t^2} (dx^2 - dt^2)` in coordinates `(x, t)`, defined for `|t| < 10`.
#[derive(Clone, Debug, Default)]
pub struct ConformalExpT2;

impl ConformalExpT2 {
    const T_MAX: f64 = 10.0;
}

impl MetricChart for ConformalExpT2 {
    fn name(&self) -> &str {
        "conformal_exp_t2"
    }
    fn dim(&self) -> usize {
        2
    }
    fn metric(&self, x: &DVector<f64>) -> Option<DMatrix<f64>> {
        let t = x[1];
        if !(x[0].is_finite() && t.abs() < Self::T_MAX) {
            return None;
        }
        let c = (t * t).exp();
        Some(DMatrix::from_row_slice(2, 2, &[c, 0.0, 0.0, -c]))
    }
    fn metric_partials(&self, x: &DVector<f64>) -> Option<Vec<DMatrix<f64>>> {
        let g = self.metric(x)?;
        Some(vec![DMatrix::zeros(2, 2), g * (2.0 * x[1])])
    }
}

pub const BUILTIN_CHARTS: [&str; 3] = ["minkowski2", "minkowski3", "conformal_exp_t2"];

pub fn builtin_chart(name: &str) -> Option<Box<dyn MetricChart>> {
    match name {
        "minkowski2" => Some(Box::new(Minkowski::new(2))),
        "minkowski3" => Some(Box::new(Minkowski::new(3))),
        "conformal_exp_t2" => Some(Box::new(ConformalExpT2)),
        _ => None,
    }
}

/// `Γ[i][(j, k)] = Γ^i_{jk}` at `x`.
pub fn christoffel(chart: &dyn MetricChart, x: &DVector<f64>) -> Option<Vec<DMatrix<f64>>> {
    let n = chart.dim();
    let g = chart.metric(x)?;
    let ginv = g.try_inverse()?;
    let dg = chart.metric_partials(x)?;
    // lowered symbols Γ_{l jk} = (∂_j g_{lk} + ∂_k g_{lj} - ∂_l g_{jk}) / 2
    let lowered: Vec<DMatrix<f64>> = (0..n)
        .map(|l| DMatrix::from_fn(n, n, |j, k| 0.5 * (dg[j][(l, k)] + dg[k][(l, j)] - dg[l][(j, k)])))
        .collect();
    Some(
        (0..n)
            .map(|i| {
                let mut gi = DMatrix::zeros(n, n);
                for (l, low) in lowered.iter().enumerate() {
                    gi += low * ginv[(i, l)];
                }
                gi
            })
            .collect(),
    )
}

/// `Γ(a, b)` as a vector.
fn contract(gamma: &[DMatrix<f64>], a: &DVector<f64>, b: &DVector<f64>) -> DVector<f64> {
    DVector::from_iterator(gamma.len(), gamma.iter().map(|gi| a.dot(&(gi * b))))
}

#[derive(Clone, Debug)]
pub struct GeodesicSeed {
    pub x0: DVector<f64>,
    pub v0: DVector<f64>,
    /// Parameter length; the output is rescaled to [0, 1].
    pub t_len: f64,
}

/// Tangent space of the initial submanifold and its shape operator in the
/// normal direction `γ'(0)`, written in the tangent basis.
#[derive(Clone, Debug)]
pub struct SubmanifoldGerm {
    pub tangent_basis: DMatrix<f64>,
    pub second_fundamental: DMatrix<f64>,
}

impl SubmanifoldGerm {
    pub fn point(n: usize) -> Self {
        Self {
            tangent_basis: DMatrix::zeros(n, 0),
            second_fundamental: DMatrix::zeros(0, 0),
        }
    }
}

/// A geodesic on [0, 1] with C^1 dense output.
#[derive(Clone, Debug)]
pub struct Geodesic {
    x: HermiteTrack,
    v: HermiteTrack,
    pub t_len: f64,
    /// Largest relative change of `g(x', x')`.
    pub energy_drift: f64,
}

impl Geodesic {
    pub fn grid(&self) -> &[f64] {
        &self.x.grid
    }

    /// Position and velocity (with respect to the rescaled parameter).
    pub fn eval(&self, u: f64) -> (DVector<f64>, DVector<f64>) {
        (self.x.value(u).column(0).into_owned(), self.v.value(u).column(0).into_owned())
    }
}

fn left_chart(u: f64) -> Error {
    Error::LeftChart { u }
}

/// Integrates `x'' = -Γ(x', x')` with `x(0) = x0`, `x'(0) = T v0` on [0, 1].
pub fn integrate_geodesic(chart: &dyn MetricChart, seed: &GeodesicSeed, tol: &Tolerances) -> Result<Geodesic> {
    let n = chart.dim();
    if seed.x0.len() != n || seed.v0.len() != n {
        return Err(Error::Dimension(format!("seed must live in R^{n}")));
    }
    if !(seed.t_len > 0.0 && seed.t_len.is_finite()) {
        return Err(Error::InvalidInput("geodesic length T must be positive".into()));
    }
    let g0 = chart.metric(&seed.x0).ok_or_else(|| left_chart(0.0))?;
    let mut y0 = DVector::zeros(2 * n);
    y0.rows_mut(0, n).copy_from(&seed.x0);
    y0.rows_mut(n, n).copy_from(&(&seed.v0 * seed.t_len));
    let rhs = |u: f64, y: &DVector<f64>| {
        let x = y.rows(0, n).into_owned();
        let v = y.rows(n, n).into_owned();
        let gamma = christoffel(chart, &x).ok_or_else(|| left_chart(u))?;
        let mut dy = DVector::zeros(2 * n);
        dy.rows_mut(0, n).copy_from(&v);
        dy.rows_mut(n, n).copy_from(&(-contract(&gamma, &v, &v)));
        Ok(dy)
    };
    let grid = ode::uniform_grid(tol.grid_size);
    let sol = ode::integrate(rhs, y0, &grid, OdeOptions::new(tol.ode_tol))?;

    let col = |v: DVector<f64>| DMatrix::from_column_slice(v.len(), 1, v.as_slice());
    let (mut xs, mut vs, mut accs) = (Vec::new(), Vec::new(), Vec::new());
    for (y, dy) in sol.values.iter().zip(&sol.derivs) {
        xs.push(col(y.rows(0, n).into_owned()));
        vs.push(col(y.rows(n, n).into_owned()));
        accs.push(col(dy.rows(n, n).into_owned()));
    }
    let v0 = &seed.v0 * seed.t_len;
    let e0 = v0.dot(&(&g0 * &v0));
    // null geodesics have e0 = 0: measure against |v|^2 instead
    let scale = e0.abs().max(f64::EPSILON * v0.norm_squared());
    let mut drift: f64 = 0.0;
    if scale > 0.0 {
        for (k, (x, v)) in xs.iter().zip(&vs).enumerate() {
            let g = chart.metric(&x.column(0).into_owned()).ok_or_else(|| left_chart(grid[k]))?;
            let e = (v.transpose() * g * v)[(0, 0)];
            drift = drift.max((e - e0).abs() / scale);
        }
    }
    Ok(Geodesic {
        x: HermiteTrack::new(grid.clone(), xs, vs.clone()),
        v: HermiteTrack::new(grid, vs, accs),
        t_len: seed.t_len,
        energy_drift: drift,
    })
}

/// Parallel vector fields along a geodesic; column `i` of `e[k]` is `E_i` at
/// grid point `k`.
#[derive(Clone, Debug)]
pub struct ParallelFrame {
    pub grid: Vec<f64>,
    pub e: Vec<DMatrix<f64>>,
    /// `g(E_i, E_j)` at u = 0.
    pub gram: DMatrix<f64>,
    /// Largest entrywise change of the Gram matrix along the path.
    pub gram_drift: f64,
}

/// g-orthonormal basis at a point: Gram–Schmidt on the coordinate basis, or
/// an eigenbasis when a coordinate vector is too close to null.
pub fn g_orthonormal_basis(g: &DMatrix<f64>) -> DMatrix<f64> {
    let n = g.nrows();
    let mut basis: Vec<DVector<f64>> = Vec::with_capacity(n);
    for i in 0..n {
        let mut v = DVector::zeros(n);
        v[i] = 1.0;
        for b in &basis {
            let bb = b.dot(&(g * b));
            v -= b * (v.dot(&(g * b)) / bb);
        }
        let vv = v.dot(&(g * &v));
        if vv.abs() < 1e-8 * g.amax() {
            let eig = nalgebra::SymmetricEigen::new(crate::linalg::symmetrize(g));
            return DMatrix::from_fn(n, n, |r, c| eig.eigenvectors[(r, c)] / eig.eigenvalues[c].abs().sqrt());
        }
        basis.push(v / vv.abs().sqrt());
    }
    DMatrix::from_columns(&basis)
}

/// Transports the g-orthonormal basis at `x(0)` along the geodesic.
pub fn parallel_frame(chart: &dyn MetricChart, geo: &Geodesic, tol: &Tolerances) -> Result<ParallelFrame> {
    let n = chart.dim();
    let (x0, _) = geo.eval(0.0);
    let g0 = chart.metric(&x0).ok_or_else(|| left_chart(0.0))?;
    let e0 = g_orthonormal_basis(&g0);
    let rhs = |u: f64, y: &DVector<f64>| {
        let (x, v) = geo.eval(u);
        let gamma = christoffel(chart, &x).ok_or_else(|| left_chart(u))?;
        let e = DMatrix::from_column_slice(n, n, y.as_slice());
        let mut de = DMatrix::zeros(n, n);
        for j in 0..n {
            de.set_column(j, &(-contract(&gamma, &v, &e.column(j).into_owned())));
        }
        Ok(DVector::from_column_slice(de.as_slice()))
    };
    let grid = geo.grid().to_vec();
    let sol = ode::integrate(rhs, DVector::from_column_slice(e0.as_slice()), &grid, OdeOptions::new(tol.ode_tol))?;
    let e: Vec<DMatrix<f64>> = sol.values.iter().map(|y| DMatrix::from_column_slice(n, n, y.as_slice())).collect();
    let gram = crate::linalg::symmetrize(&(e0.transpose() * &g0 * &e0));
    let mut gram_drift: f64 = 0.0;
    for (k, ek) in e.iter().enumerate() {
        let (x, _) = geo.eval(grid[k]);
        let g = chart.metric(&x).ok_or_else(|| left_chart(grid[k]))?;
        gram_drift = gram_drift.max((ek.transpose() * g * ek - &gram).amax());
    }
    Ok(ParallelFrame { grid, e, gram, gram_drift })
}

/// `R(ẋ, w) ẋ` at `x` by central differences of the Christoffel symbols.
pub fn curvature_operator(
    chart: &dyn MetricChart,
    x: &DVector<f64>,
    xdot: &DVector<f64>,
    w: &DVector<f64>,
    u: f64,
) -> Result<DVector<f64>> {
    let gamma = christoffel(chart, x).ok_or_else(|| left_chart(u))?;
    let directional = |dir: &DVector<f64>| -> Result<Vec<DMatrix<f64>>> {
        let norm = dir.norm();
        if norm == 0.0 {
            return Ok(vec![DMatrix::zeros(x.len(), x.len()); x.len()]);
        }
        let h = H_FD / norm;
        let plus = christoffel(chart, &(x + dir * h)).ok_or_else(|| left_chart(u))?;
        let minus = christoffel(chart, &(x - dir * h)).ok_or_else(|| left_chart(u))?;
        Ok(plus.iter().zip(&minus).map(|(p, m)| (p - m) / (2.0 * h)).collect())
    };
    let d_xdot = directional(xdot)?;
    let d_w = directional(w)?;
    Ok(contract(&d_xdot, w, xdot) - contract(&d_w, xdot, xdot)
        + contract(&gamma, xdot, &contract(&gamma, w, xdot))
        - contract(&gamma, w, &contract(&gamma, xdot, xdot)))
}

fn frame_at(frame: &ParallelFrame, u: f64) -> DMatrix<f64> {
    // frame is sampled on the geodesic grid; linear interpolation of a
    // smooth field between fine grid points is ample for 513 output samples
    let grid = &frame.grid;
    let i = match grid.binary_search_by(|p| p.total_cmp(&u)) {
        Ok(i) => return frame.e[i].clone(),
        Err(i) => i.clamp(1, grid.len() - 1),
    };
    let s = (u - grid[i - 1]) / (grid[i] - grid[i - 1]);
    &frame.e[i - 1] * (1.0 - s) + &frame.e[i] * s
}

/// Builds the Morse–Sturm problem of the geodesic in the parallel frame.
///
/// `S` is multiplied by `T`: on the rescaled parameter `J'` picks up a factor
/// `T`, and the initial condition `J'(0) + S J(0) ∈ P^⊥` must stay invariant.
pub fn trivialize(
    chart: &dyn MetricChart,
    geo: &Geodesic,
    frame: &ParallelFrame,
    germ: &SubmanifoldGerm,
    tol: &Tolerances,
) -> Result<MorseSturmProblem> {
    let n = chart.dim();
    let gram = frame.gram.clone();
    let g = MetricForm::new(gram.clone())?;

    let k = germ.tangent_basis.ncols();
    if germ.tangent_basis.nrows() != n || germ.second_fundamental.shape() != (k, k) {
        return Err(Error::Dimension("germ does not match the chart dimension".into()));
    }
    let (x0, v0) = geo.eval(0.0);
    let g0 = chart.metric(&x0).ok_or_else(|| left_chart(0.0))?;
    for j in 0..k {
        let p = germ.tangent_basis.column(j);
        let inner = v0.dot(&(&g0 * p));
        if inner.abs() > 1e-9 * (v0.norm() * p.norm()).max(1e-300) {
            return Err(Error::InvalidInput(format!(
                "tangent vector {j} is not g-orthogonal to the initial velocity"
            )));
        }
    }
    let e0inv = frame.e[0].clone().try_inverse().ok_or_else(|| Error::InvalidInput("singular frame".into()))?;
    let p = Subspace::new(&e0inv * &germ.tangent_basis, tol.tol_rank)?;
    if k > 0 && forms::inertia(&forms::restrict(&g, &p)?, tol.tol_eig).n_zero > 0 {
        return Err(Error::InvalidInput("g is degenerate on the germ's tangent space".into()));
    }

    let ts: Vec<f64> = (0..TRIVIALIZE_SAMPLES).map(|i| i as f64 / (TRIVIALIZE_SAMPLES - 1) as f64).collect();
    let mut values = Vec::with_capacity(ts.len());
    for &u in &ts {
        let (x, xdot) = geo.eval(u);
        let e = frame_at(frame, u);
        let einv = e.clone().try_inverse().ok_or_else(|| Error::InvalidInput("singular frame".into()))?;
        let mut r = DMatrix::zeros(n, n);
        for j in 0..n {
            let col = curvature_operator(chart, &x, &xdot, &e.column(j).into_owned(), u)?;
            r.set_column(j, &(&einv * col));
        }
        let ga = &gram * &r;
        let defect = (&ga - r.transpose() * &gram).norm();
        if defect > CURVATURE_SYMMETRY_TOL * ga.norm() && defect > 1e-10 {
            return Err(Error::CurvatureAsymmetry { u, defect: defect / ga.norm().max(f64::MIN_POSITIVE) });
        }
        values.push(r);
    }
    let problem = MorseSturmProblem::new(
        g,
        CoefficientPath::SampledGrid(SampledPath::new(ts, values)?),
        BoundaryData { p, s: &germ.second_fundamental * geo.t_len },
        None,
    )?;
    Ok(problem.with_meta(serde_json::json!({
        "chart": chart.name(),
        "T": geo.t_len,
        "x0": x0.as_slice(),
        "v0": (v0 / geo.t_len).as_slice(),
    })))
}

/// Geodesic, frame and trivialization in one call.
pub fn trivialize_chart(
    chart: &dyn MetricChart,
    seed: &GeodesicSeed,
    germ: &SubmanifoldGerm,
    y_seed: Option<WitnessSeed>,
    tol: &Tolerances,
) -> Result<MorseSturmProblem> {
    let geo = integrate_geodesic(chart, seed, tol)?;
    let frame = parallel_frame(chart, &geo, tol)?;
    Ok(trivialize(chart, &geo, &frame, germ, tol)?.with_seed(y_seed))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::focal;
    use crate::fixtures;
    use crate::problem::coefficient_distance;
    use std::f64::consts::PI;

    fn tol() -> Tolerances {
        Tolerances::default()
    }

    fn v(x: &[f64]) -> DVector<f64> {
        DVector::from_column_slice(x)
    }

    fn seed(x0: &[f64], v0: &[f64], t_len: f64) -> GeodesicSeed {
        GeodesicSeed { x0: v(x0), v0: v(v0), t_len }
    }

    #[test]
    fn christoffel_of_conformal_metric() {
        // g = e^{2φ} η with φ = t^2 / 2: Γ^i_jk = δ^i_j φ_k + δ^i_k φ_j - η_jk η^il φ_l
        let x = v(&[0.3, 0.7]);
        let gamma = christoffel(&ConformalExpT2, &x).unwrap();
        let phi_t = 0.7;
        let expect_x = DMatrix::from_row_slice(2, 2, &[0.0, phi_t, phi_t, 0.0]);
        let expect_t = DMatrix::from_row_slice(2, 2, &[phi_t, 0.0, 0.0, phi_t]);
        assert!((&gamma[0] - expect_x).amax() < 1e-14);
        assert!((&gamma[1] - expect_t).amax() < 1e-14);
    }

    struct NumericConformal;
    impl MetricChart for NumericConformal {
        fn name(&self) -> &str {
            "numeric"
        }
        fn dim(&self) -> usize {
            2
        }
        fn metric(&self, x: &DVector<f64>) -> Option<DMatrix<f64>> {
            ConformalExpT2.metric(x)
        }
    }

    #[test]
    fn finite_difference_partials_match_analytic() {
        let x = v(&[0.1, -0.4]);
        let a = christoffel(&ConformalExpT2, &x).unwrap();
        let b = christoffel(&NumericConformal, &x).unwrap();
        for (p, q) in a.iter().zip(&b) {
            assert!((p - q).amax() < 1e-9);
        }
    }

    #[test]
    fn flat_geodesic_is_a_line() {
        let chart = Minkowski::new(2);
        let geo = integrate_geodesic(&chart, &seed(&[0.0, 0.0], &[1.0, 0.0], 1.0), &tol()).unwrap();
        for &u in &[0.0, 0.4, 1.0] {
            let (x, xd) = geo.eval(u);
            assert!((x - v(&[u, 0.0])).amax() < 1e-12);
            assert!((xd - v(&[1.0, 0.0])).amax() < 1e-14);
        }
        let rest = integrate_geodesic(&chart, &seed(&[0.5, 0.2], &[0.0, 0.0], 1.0), &tol()).unwrap();
        assert!((rest.eval(0.8).0 - v(&[0.5, 0.2])).amax() < 1e-15);
        assert_eq!(rest.energy_drift, 0.0);
    }

    #[test]
    fn conformal_geodesic_conserves_energy() {
        let chart = ConformalExpT2;
        let geo = integrate_geodesic(&chart, &seed(&[0.0, 0.0], &[1.0, 0.0], PI), &tol()).unwrap();
        let (x, _) = geo.eval(1.0);
        assert!((x - v(&[PI, 0.0])).amax() < 1e-12);
        // an off-axis geodesic bends but keeps g(x', x')
        let geo = integrate_geodesic(&chart, &seed(&[0.0, 0.2], &[1.0, 0.3], 1.0), &tol()).unwrap();
        assert!(geo.energy_drift < 1e-8, "{}", geo.energy_drift);
        let frame = parallel_frame(&chart, &geo, &tol()).unwrap();
        assert!(frame.gram_drift < 1e-8);
        assert!((&frame.gram - DMatrix::from_diagonal(&v(&[1.0, -1.0]))).amax() < 1e-12);
    }

    #[test]
    fn leaving_the_chart_is_reported() {
        let chart = ConformalExpT2;
        // straight up in the time direction until |t| reaches the domain bound
        let r = integrate_geodesic(&chart, &seed(&[0.0, 9.99], &[0.0, 1.0], 5.0), &tol());
        assert!(matches!(r, Err(Error::LeftChart { .. })), "{r:?}");
    }

    #[test]
    fn orthonormal_basis_for_off_diagonal_metric() {
        let g = DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 1.0, 0.0]);
        let e = g_orthonormal_basis(&g);
        let gram = e.transpose() * &g * &e;
        let mut d: Vec<f64> = (0..2).map(|i| gram[(i, i)]).collect();
        d.sort_by(|a, b| a.total_cmp(b));
        assert!((d[0] + 1.0).abs() < 1e-12 && (d[1] - 1.0).abs() < 1e-12);
        assert!(gram[(0, 1)].abs() < 1e-12);
    }

    #[test]
    fn flat_charts_reproduce_fixtures() {
        let chart = Minkowski::new(2);
        let line = seed(&[0.0, 0.0], &[1.0, 0.0], 1.0);
        for (s, fixture) in [(0.0, fixtures::example_simple()), (1.0, fixtures::example_causal())] {
            let germ = SubmanifoldGerm {
                tangent_basis: DMatrix::from_column_slice(2, 1, &[0.0, 1.0]),
                second_fundamental: DMatrix::from_element(1, 1, s),
            };
            let p = trivialize_chart(&chart, &line, &germ, fixture.y_seed.clone(), &tol()).unwrap();
            assert!((p.g.entries() - fixture.g.entries()).amax() < 1e-8);
            assert!(p.boundary.p.same_span(&fixture.boundary.p));
            assert!((p.boundary.s_ambient() - fixture.boundary.s_ambient()).amax() < 1e-8);
            assert!(coefficient_distance(&p, &fixture, 200) < 1e-10);
        }
        let p3 = trivialize_chart(
            &Minkowski::new(3),
            &seed(&[0.0; 3], &[1.0, 0.5, 0.2], 2.0),
            &SubmanifoldGerm::point(3),
            None,
            &tol(),
        )
        .unwrap();
        assert!((0..=50).all(|i| p3.r.eval(i as f64 / 50.0).amax() < 1e-10));
    }

    #[test]
    fn conformal_example_decouples() {
        let chart = ConformalExpT2;
        let p = trivialize_chart(&chart, &seed(&[0.0, 0.0], &[1.0, 0.0], PI), &SubmanifoldGerm::point(2), None, &tol())
            .unwrap();
        // v'' = 0 and w'' = -w on [0, π], i.e. -π^2 after rescaling
        let expected = DMatrix::from_row_slice(2, 2, &[0.0, 0.0, 0.0, -PI * PI]);
        for i in 0..=20 {
            let r = p.r.eval(i as f64 / 20.0);
            assert!((r - &expected).amax() < 1e-5);
        }
        let scan = focal::scan_problem(&p, &tol()).unwrap();
        assert_eq!(scan.instants.len(), 1);
        assert!((scan.instants[0].t - 1.0).abs() < 1e-4);
        assert_eq!(scan.instants[0].multiplicity, 1);
    }

    #[test]
    fn germ_must_be_orthogonal_to_velocity() {
        let germ = SubmanifoldGerm {
            tangent_basis: DMatrix::from_column_slice(2, 1, &[1.0, 1.0]),
            second_fundamental: DMatrix::zeros(1, 1),
        };
        let r = trivialize_chart(&Minkowski::new(2), &seed(&[0.0, 0.0], &[1.0, 0.0], 1.0), &germ, None, &tol());
        assert!(matches!(r, Err(Error::InvalidInput(_))));
    }

    #[test]
    fn shape_operator_scales_with_length() {
        let germ = SubmanifoldGerm {
            tangent_basis: DMatrix::from_column_slice(2, 1, &[0.0, 1.0]),
            second_fundamental: DMatrix::from_element(1, 1, 0.5),
        };
        // flat plane, S = 1/2 on [0, 2]: focal at τ = 2, i.e. t = 1
        let p = trivialize_chart(&Minkowski::new(2), &seed(&[0.0, 0.0], &[1.0, 0.0], 2.0), &germ, None, &tol()).unwrap();
        assert!((p.boundary.s[(0, 0)] - 1.0).abs() < 1e-14);
        let scan = focal::scan_problem(&p, &tol()).unwrap();
        assert!(scan.endpoint_focal);
    }
}
