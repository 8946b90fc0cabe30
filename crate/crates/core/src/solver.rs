//! Fundamental solutions of `J'' = R(t) J` and timelike witnesses.

use std::io::Write;

use nalgebra::{DMatrix, DVector};

use crate::forms::{self, MetricForm};
use crate::linalg::{self, HermiteTrack};
use crate::ode::{self, OdeOptions};
use crate::problem::MorseSturmProblem;
use crate::search;
use crate::{Error, Result, Tolerances};

/// The `n` solutions with the initial conditions of the problem, sampled on a
/// master grid with C^1 Hermite dense output. Column `i` of `M(t)` is
/// `J_i(t)`; column `i` of `Mp(t)` is `J_i'(t)`.
#[derive(Clone, Debug)]
pub struct FundamentalSolution {
    m: HermiteTrack,
    mp: HermiteTrack,
    /// Scaled error estimate of the worst accepted step.
    pub max_error: f64,
}

impl FundamentalSolution {
    pub fn n(&self) -> usize {
        self.m.values[0].nrows()
    }

    pub fn grid(&self) -> &[f64] {
        &self.m.grid
    }

    pub fn samples(&self) -> impl Iterator<Item = (f64, &DMatrix<f64>, &DMatrix<f64>)> {
        self.m
            .grid
            .iter()
            .zip(self.m.values.iter().zip(&self.mp.values))
            .map(|(t, (m, mp))| (*t, m, mp))
    }

    /// `(M(t), Mp(t))` from the dense output.
    pub fn eval(&self, t: f64) -> (DMatrix<f64>, DMatrix<f64>) {
        (self.m.value(t), self.mp.value(t))
    }

    pub fn m(&self, t: f64) -> DMatrix<f64> {
        self.m.value(t)
    }

    /// Writes `t, M00, M01, ..., Mp00, ...` (row-major) for every grid point.
    pub fn write_csv<W: Write>(&self, mut w: W, tol: &Tolerances) -> std::io::Result<()> {
        writeln!(w, "# ode_tol={:e} grid_size={}", tol.ode_tol, tol.grid_size)?;
        let n = self.n();
        let mut header = vec!["t".to_string()];
        for prefix in ["M", "Mp"] {
            for i in 0..n {
                for j in 0..n {
                    header.push(format!("{prefix}{i}{j}"));
                }
            }
        }
        writeln!(w, "{}", header.join(","))?;
        for (t, m, mp) in self.samples() {
            let mut row = vec![format!("{t:.17e}")];
            for mat in [m, mp] {
                for i in 0..n {
                    for j in 0..n {
                        row.push(format!("{:.17e}", mat[(i, j)]));
                    }
                }
            }
            writeln!(w, "{}", row.join(","))?;
        }
        Ok(())
    }
}

/// Initial matrices `(M(0), Mp(0))`: `k` columns `(p_i, -S p_i)` followed by
/// `n - k` columns `(0, w_i)` with `w_i` an orthonormal basis of `P^perp`.
pub fn initial_conditions(problem: &MorseSturmProblem, tol: &Tolerances) -> Result<(DMatrix<f64>, DMatrix<f64>)> {
    let n = problem.n();
    let k = problem.boundary.k();
    let perp = forms::g_orthogonal_complement(&problem.g, &problem.boundary.p, tol.tol_rank)?;
    if perp.dim() != n - k {
        return Err(Error::InvalidInput(format!(
            "g-orthogonal complement of P has dimension {} instead of {}",
            perp.dim(),
            n - k
        )));
    }
    let mut m0 = DMatrix::zeros(n, n);
    let mut mp0 = DMatrix::zeros(n, n);
    let p = problem.boundary.p.basis();
    let sp = problem.boundary.s_ambient();
    for i in 0..k {
        m0.set_column(i, &p.column(i));
        mp0.set_column(i, &(-sp.column(i)));
    }
    for i in 0..(n - k) {
        mp0.set_column(k + i, &perp.basis().column(i));
    }
    let mut stacked = DMatrix::zeros(2 * n, n);
    stacked.rows_mut(0, n).copy_from(&m0);
    stacked.rows_mut(n, n).copy_from(&mp0);
    if linalg::rank(&stacked, tol.tol_rank) != n {
        return Err(Error::InvalidInput(
            "initial data do not span an n-dimensional solution space (g degenerate on P?)".into(),
        ));
    }
    Ok((m0, mp0))
}

fn pack(m: &DMatrix<f64>, mp: &DMatrix<f64>) -> DVector<f64> {
    let (n, c) = (m.nrows(), m.ncols());
    let mut s = DMatrix::zeros(2 * n, c);
    s.rows_mut(0, n).copy_from(m);
    s.rows_mut(n, n).copy_from(mp);
    DVector::from_column_slice(s.as_slice())
}

fn unpack(v: &DVector<f64>, n: usize, c: usize) -> (DMatrix<f64>, DMatrix<f64>) {
    let s = DMatrix::from_column_slice(2 * n, c, v.as_slice());
    (s.rows(0, n).into_owned(), s.rows(n, n).into_owned())
}

/// Integrates `M'' = R M` from arbitrary initial matrices.
pub fn solve_from(
    problem: &MorseSturmProblem,
    m0: &DMatrix<f64>,
    mp0: &DMatrix<f64>,
    ode_tol: f64,
    grid_size: usize,
) -> Result<FundamentalSolution> {
    let n = problem.n();
    let c = m0.ncols();
    let grid = ode::uniform_grid(grid_size);
    let r = &problem.r;
    let rhs = |t: f64, y: &DVector<f64>| {
        let (m, mp) = unpack(y, n, c);
        Ok(pack(&mp, &(r.eval(t) * m)))
    };
    let sol = ode::integrate(rhs, pack(m0, mp0), &grid, OdeOptions::new(ode_tol))?;
    let mut ms = Vec::with_capacity(grid.len());
    let mut mps = Vec::with_capacity(grid.len());
    let mut accs = Vec::with_capacity(grid.len());
    for (y, dy) in sol.values.iter().zip(&sol.derivs) {
        let (m, mp) = unpack(y, n, c);
        let (_, acc) = unpack(dy, n, c);
        ms.push(m);
        mps.push(mp);
        accs.push(acc);
    }
    Ok(FundamentalSolution {
        m: HermiteTrack::new(grid.clone(), ms, mps.clone()),
        mp: HermiteTrack::new(grid, mps, accs),
        max_error: sol.max_error,
    })
}

/// The full family of `(P, S)`-solutions.
pub fn solve_fundamental(problem: &MorseSturmProblem, tol: &Tolerances) -> Result<FundamentalSolution> {
    let (m0, mp0) = initial_conditions(problem, tol)?;
    solve_from(problem, &m0, &mp0, tol.ode_tol, tol.grid_size)
}

/// Largest `|g(J_i', J_j) - g(J_i, J_j')|` over grid points and pairs.
pub fn wronskian_drift(fund: &FundamentalSolution, g: &MetricForm) -> f64 {
    let gm = g.entries();
    fund.samples()
        .map(|(_, m, mp)| (mp.transpose() * gm * m - m.transpose() * gm * mp).amax())
        .fold(0.0, f64::max)
}

/// Number of samples used to certify the witness margin.
pub const WITNESS_SAMPLES: usize = 1024;

/// A solution `Y` of `Y'' = R Y` with `g(Y, Y) < 0` on [0, 1].
#[derive(Clone, Debug)]
pub struct TimelikeWitness {
    y: HermiteTrack,
    yp: HermiteTrack,
    /// `min over [0, 1] of -g(Y, Y)`.
    pub min_margin: f64,
    pub argmin: f64,
}

impl TimelikeWitness {
    pub fn grid(&self) -> &[f64] {
        &self.y.grid
    }

    /// `(Y(t), Y'(t))`.
    pub fn eval(&self, t: f64) -> (DVector<f64>, DVector<f64>) {
        let y = self.y.value(t);
        let yp = self.yp.value(t);
        (y.column(0).into_owned(), yp.column(0).into_owned())
    }
}

/// Integrates the seeded witness and certifies that it stays timelike.
pub fn solve_witness(problem: &MorseSturmProblem, tol: &Tolerances) -> Result<TimelikeWitness> {
    let seed = problem.y_seed.as_ref().ok_or(Error::MissingSeed)?;
    let n_minus = problem.g.inertia(tol.tol_eig).n_minus;
    if n_minus != 1 {
        return Err(Error::InvalidInput(format!(
            "a timelike witness needs n_-(g) = 1, found {n_minus}"
        )));
    }
    let g = &problem.g;
    let y0 = seed.value.as_slice();
    let v0 = g.eval(y0, y0);
    if !(v0 < 0.0) {
        return Err(Error::NotTimelike { t: 0.0, value: v0 });
    }
    let m0 = DMatrix::from_column_slice(problem.n(), 1, seed.value.as_slice());
    let mp0 = DMatrix::from_column_slice(problem.n(), 1, seed.velocity.as_slice());
    let fund = solve_from(problem, &m0, &mp0, tol.ode_tol, tol.grid_size)?;
    let FundamentalSolution { m: y, mp: yp, .. } = fund;

    let margin = |t: f64| {
        let v = y.value(t);
        -g.eval(v.as_slice(), v.as_slice())
    };
    let ts: Vec<f64> = (0..=WITNESS_SAMPLES).map(|i| i as f64 / WITNESS_SAMPLES as f64).collect();
    let vals: Vec<f64> = ts.iter().map(|&t| margin(t)).collect();
    let mut best = (0.0, f64::INFINITY);
    for i in 0..ts.len() {
        let left = if i == 0 { f64::INFINITY } else { vals[i - 1] };
        let right = if i + 1 == ts.len() { f64::INFINITY } else { vals[i + 1] };
        if vals[i] <= left && vals[i] <= right {
            let lo = ts[i.saturating_sub(1)];
            let hi = ts[(i + 1).min(ts.len() - 1)];
            let (t, v) = search::golden_min(margin, lo, hi, 1e-12);
            if v < best.1 {
                best = (t, v);
            }
        }
    }
    if !(best.1 > 0.0) {
        return Err(Error::NotTimelike { t: best.0, value: -best.1 });
    }
    Ok(TimelikeWitness {
        y,
        yp,
        min_margin: best.1,
        argmin: best.0,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;
    use crate::problem::{BoundaryData, CoefficientPath, WitnessSeed};
    use std::f64::consts::PI;

    fn tol() -> Tolerances {
        Tolerances::default()
    }

    #[test]
    fn free_particle() {
        let p = MorseSturmProblem::new(
            MetricForm::euclidean(2),
            CoefficientPath::Constant(DMatrix::zeros(2, 2)),
            BoundaryData::point(2),
            None,
        )
        .unwrap();
        let f = solve_fundamental(&p, &tol()).unwrap();
        for &t in &[0.0, 0.37, 1.0] {
            let (m, mp) = f.eval(t);
            assert!((m - DMatrix::identity(2, 2) * t).amax() < 1e-12);
            assert!((mp - DMatrix::identity(2, 2)).amax() < 1e-12);
        }
    }

    #[test]
    fn causal_example_columns() {
        let f = solve_fundamental(&fixtures::example_causal(), &tol()).unwrap();
        for &t in &[0.0, 0.25, 0.8, 1.0] {
            let m = f.m(t);
            // J1 = (1 - t) e2, J2 = t e1 up to the sign of the P-perp basis
            assert!((m[(0, 0)]).abs() < 1e-12);
            assert!((m[(1, 0)] - (1.0 - t)).abs() < 1e-12);
            assert!((m[(0, 1)].abs() - t).abs() < 1e-12);
            assert!((m[(1, 1)]).abs() < 1e-12);
        }
    }

    #[test]
    fn harmonic_closed_form() {
        let w = 2.0 * PI;
        let f = solve_fundamental(&fixtures::harmonic(w), &tol()).unwrap();
        for i in 0..=50 {
            let t = i as f64 / 50.0 + 0.0031 * (i % 3) as f64;
            let t = t.min(1.0);
            let expected = DMatrix::identity(2, 2) * ((w * t).sin() / w);
            assert!((f.m(t) - expected).amax() < 1e-8, "t = {t}");
        }
    }

    #[test]
    fn wronskian_drift_levels() {
        let g = MetricForm::diagonal(&[1.0, -1.0]);
        let f = solve_fundamental(&fixtures::example_causal(), &tol()).unwrap();
        assert!(wronskian_drift(&f, &g) < 1e-12);

        let h = fixtures::harmonic(2.5 * PI);
        let f = solve_fundamental(&h, &tol()).unwrap();
        assert!(wronskian_drift(&f, &h.g) < 1e-8);

        // R not g-symmetric: conservation fails at order one
        let bad = MorseSturmProblem::new(
            g.clone(),
            CoefficientPath::Constant(DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 1.0, 0.0])),
            BoundaryData::point(2),
            None,
        )
        .unwrap();
        let f = solve_fundamental(&bad, &tol()).unwrap();
        assert!(wronskian_drift(&f, &g) > 0.1);
    }

    #[test]
    fn drift_scales_with_tolerance() {
        let h = MorseSturmProblem::new(
            MetricForm::diagonal(&[1.0, -1.0]),
            CoefficientPath::Polynomial(vec![
                DMatrix::from_row_slice(2, 2, &[-30.0, 4.0, -4.0, 2.0]),
                DMatrix::from_row_slice(2, 2, &[5.0, -3.0, 3.0, 1.0]),
            ]),
            BoundaryData::point(2),
            None,
        )
        .unwrap();
        let drift = |ode_tol: f64| {
            let t = Tolerances { ode_tol, grid_size: 16, ..tol() };
            wronskian_drift(&solve_fundamental(&h, &t).unwrap(), &h.g)
        };
        let (coarse, fine) = (drift(1e-6), drift(1e-10));
        assert!(fine < coarse);
        assert!(fine < 1e-8);
        assert!(coarse < 1e-4);
    }

    #[test]
    fn linearity_in_initial_data() {
        let h = fixtures::lorentz_cosh(2.5 * PI, 1.0);
        let (m0, mp0) = initial_conditions(&h, &tol()).unwrap();
        let c = DMatrix::from_row_slice(3, 3, &[1.0, 0.5, 0.0, -0.3, 2.0, 0.1, 0.0, 0.4, 1.5]);
        let base = solve_from(&h, &m0, &mp0, 1e-10, 2048).unwrap();
        let mixed = solve_from(&h, &(&m0 * &c), &(&mp0 * &c), 1e-10, 2048).unwrap();
        for &t in &[0.2, 0.55, 1.0] {
            let (a, ap) = base.eval(t);
            let (b, bp) = mixed.eval(t);
            assert!((a * &c - b).amax() < 1e-7);
            assert!((ap * &c - bp).amax() < 1e-6);
        }
    }

    #[test]
    fn convergence_order_at_least_four() {
        let w = 2.0 * PI;
        let h = fixtures::harmonic(w);
        let (m0, mp0) = initial_conditions(&h, &tol()).unwrap();
        let err = |steps: usize| {
            let f = solve_from(&h, &m0, &mp0, f64::INFINITY, steps).unwrap();
            f.samples()
                .map(|(t, m, _)| (m[(0, 0)] - (w * t).sin() / w).abs())
                .fold(0.0, f64::max)
        };
        let (e1, e2) = (err(32), err(64));
        assert!((e1 / e2).log2() >= 4.0, "observed order {}", (e1 / e2).log2());
    }

    #[test]
    fn simple_example_witness() {
        let w = solve_witness(&fixtures::example_simple(), &tol()).unwrap();
        assert!((w.min_margin - 1.0).abs() < 1e-14);
        for &t in &[0.0, 0.5, 1.0] {
            let (y, yp) = w.eval(t);
            assert!((y - DVector::from_column_slice(&[0.0, 1.0])).amax() < 1e-14);
            assert!(yp.amax() < 1e-14);
        }
        let w = solve_witness(&fixtures::example_causal(), &tol()).unwrap();
        assert!((w.min_margin - 1.0).abs() < 1e-14);
    }

    #[test]
    fn spacelike_seed_rejected() {
        let p = fixtures::example_simple().with_seed(Some(WitnessSeed {
            value: DVector::from_column_slice(&[1.0, 0.0]),
            velocity: DVector::zeros(2),
        }));
        match solve_witness(&p, &tol()) {
            Err(Error::NotTimelike { t, value }) => {
                assert_eq!(t, 0.0);
                assert_eq!(value, 1.0);
            }
            other => panic!("{other:?}"),
        }
        let p = fixtures::example_simple().with_seed(None);
        assert!(matches!(solve_witness(&p, &tol()), Err(Error::MissingSeed)));
    }

    #[test]
    fn witness_that_turns_spacelike_is_rejected() {
        // Y = (t*2, 1): g(Y, Y) = 4t^2 - 1 turns positive at t = 0.5
        let p = fixtures::example_simple().with_seed(Some(WitnessSeed {
            value: DVector::from_column_slice(&[0.0, 1.0]),
            velocity: DVector::from_column_slice(&[2.0, 0.0]),
        }));
        match solve_witness(&p, &tol()) {
            Err(Error::NotTimelike { t, .. }) => assert!(t > 0.5),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn csv_layout() {
        let f = solve_fundamental(&fixtures::example_causal(), &Tolerances { grid_size: 4, ..tol() }).unwrap();
        let mut buf = Vec::new();
        f.write_csv(&mut buf, &tol()).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert!(lines[0].starts_with("# ode_tol="));
        assert_eq!(lines[1], "t,M00,M01,M10,M11,Mp00,Mp01,Mp10,Mp11");
        assert_eq!(lines.len(), 2 + 5);
    }
}
