//! Test-problem generators.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{BoundaryData, CoefficientPath, CurveTerm, MorseSturmProblem, SampledPath, SmoothCurve, WitnessSeed};
use crate::forms::{self, MetricForm, Subspace};
use crate::{problem, solver, Error, Result, Tolerances};

/// Number of samples of the generated coefficient path.
pub const GENERATOR_SAMPLES: usize = 513;

/// Builds a 2D problem with `g = diag(1, -1)`, `P = {0}` and a sampled
/// g-symmetric `R(t)` for which the given timelike curve solves `Y'' = R Y`.
///
/// In two dimensions the g-symmetric operators are `[[a, b], [-b, d]]`. The
/// equation `R Y = Y''` fixes two of the three parameters; the remaining one
/// is the minimum-Frobenius-norm solution plus `lambda` times the unit
/// (Frobenius) kernel direction.
pub fn generate_timelike_2d(curve: &SmoothCurve, lambda: f64) -> Result<MorseSturmProblem> {
    if curve.dim() != 2 {
        return Err(Error::Dimension("timelike generator works in R^2".into()));
    }
    let g = MetricForm::diagonal(&[1.0, -1.0]);
    let ts: Vec<f64> = (0..GENERATOR_SAMPLES)
        .map(|i| i as f64 / (GENERATOR_SAMPLES - 1) as f64)
        .collect();
    let mut values = Vec::with_capacity(ts.len());
    for &t in &ts {
        let [y, _, ypp] = curve.jet(t);
        let norm = y[0] * y[0] - y[1] * y[1];
        if !(norm < 0.0) {
            return Err(Error::NotTimelike { t, value: norm });
        }
        values.push(operator_for(&y, &ypp, lambda));
    }
    let r = CoefficientPath::SampledGrid(SampledPath::new(ts, values)?);
    let [y0, v0, _] = curve.jet(0.0);
    let seed = WitnessSeed {
        value: DVector::from_vec(y0),
        velocity: DVector::from_vec(v0),
    };
    let meta = serde_json::json!({
        "generator": "timelike_2d",
        "lambda": lambda,
        "curve": curve,
    });
    Ok(MorseSturmProblem::new(g, r, BoundaryData::point(2), Some(seed))?.with_meta(meta))
}

/// `R = [[a, b], [-b, d]]` with `R y = z`.
fn operator_for(y: &[f64], z: &[f64], lambda: f64) -> DMatrix<f64> {
    // Unknowns x = (a, sqrt(2) b, d) so that |x| is the Frobenius norm of R.
    let r2 = std::f64::consts::SQRT_2;
    let rows = DMatrix::from_row_slice(2, 3, &[y[0], y[1] / r2, 0.0, 0.0, -y[0] / r2, y[1]]);
    let rhs = DVector::from_column_slice(&[z[0], z[1]]);
    let gram = &rows * rows.transpose();
    let x = rows.transpose() * gram.try_inverse().expect("timelike Y is nonzero") * rhs;
    // kernel direction: cross product of the two rows
    let k = DVector::from_column_slice(&[
        rows[(0, 1)] * rows[(1, 2)] - rows[(0, 2)] * rows[(1, 1)],
        rows[(0, 2)] * rows[(1, 0)] - rows[(0, 0)] * rows[(1, 2)],
        rows[(0, 0)] * rows[(1, 1)] - rows[(0, 1)] * rows[(1, 0)],
    ]);
    let x = x + k.normalize() * lambda;
    let (a, b, d) = (x[0], x[1] / r2, x[2]);
    DMatrix::from_row_slice(2, 2, &[a, b, -b, d])
}

/// A random smooth timelike curve for `g = diag(1, -1)`: a boosted pair
/// `(small oscillation, 1 + small quadratic)`.
pub fn random_timelike_curve(seed: u64) -> SmoothCurve {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let amp = rng.random_range(0.0..0.3);
    let freq = rng.random_range(0.0..6.0);
    let phase = rng.random_range(0.0..std::f64::consts::TAU);
    let drift = rng.random_range(-0.1..0.1);
    let c1 = rng.random_range(-0.3..0.3);
    let c2 = rng.random_range(-0.3..0.3);
    let base = SmoothCurve {
        components: vec![
            vec![
                CurveTerm::Sin { amp, freq, phase },
                CurveTerm::Poly { coeffs: vec![0.0, drift] },
            ],
            vec![CurveTerm::Poly { coeffs: vec![1.0, c1, c2] }],
        ],
    };
    let rapidity: f64 = rng.random_range(-1.0..1.0);
    let (sh, ch) = (rapidity.sinh(), rapidity.cosh());
    base.transformed(&DMatrix::from_row_slice(2, 2, &[ch, sh, sh, ch]))
}

fn random_symmetric(rng: &mut ChaCha8Rng, n: usize, scale: f64) -> DMatrix<f64> {
    let a = DMatrix::from_fn(n, n, |_, _| rng.random_range(-scale..=scale));
    (&a + a.transpose()) * 0.5
}

/// Random `P` of dimension `k` with a g-symmetric `S` on it.
fn random_boundary(rng: &mut ChaCha8Rng, g: &MetricForm, k: usize) -> Result<BoundaryData> {
    let n = g.n();
    if k == 0 {
        return Ok(BoundaryData::point(n));
    }
    let basis = DMatrix::from_fn(n, k, |_, _| rng.random_range(-1.0..=1.0));
    let p = Subspace::new(basis, 1e-6)?;
    let gp = forms::restrict(g, &p)?;
    let gp_inv = gp.try_inverse().ok_or(Error::DegenerateMetric { ratio: 0.0 })?;
    let s = gp_inv * random_symmetric(rng, k, 1.0);
    Ok(BoundaryData { p, s })
}

/// A random Riemannian problem on `R^2` or `R^3` with several conjugate
/// instants: `g` positive definite, `R(t) = G^{-1} (B_0 + t B_1)` with
/// `B_0 = -w^2 G + noise`, and a random `(P, S)`.
pub fn random_riemannian(seed: u64) -> MorseSturmProblem {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    loop {
        let n = rng.random_range(2..=3);
        let a = DMatrix::from_fn(n, n, |_, _| rng.random_range(-1.0..=1.0));
        let gram = &a * a.transpose() + DMatrix::identity(n, n) * 0.5;
        let g = MetricForm::new(gram.clone()).expect("positive definite");
        let w: f64 = rng.random_range(3.0..9.0);
        let b0 = &gram * (-w * w) + random_symmetric(&mut rng, n, 2.0);
        let b1 = random_symmetric(&mut rng, n, 3.0);
        let ginv = gram.try_inverse().expect("positive definite");
        let r = CoefficientPath::Polynomial(vec![&ginv * b0, &ginv * b1]);
        let k = rng.random_range(0..n);
        let Ok(boundary) = random_boundary(&mut rng, &g, k) else { continue };
        let p = MorseSturmProblem::new(g, r, boundary, None).expect("shapes agree");
        if problem::validate(&p, &Tolerances::default()).is_empty() {
            return p.with_meta(serde_json::json!({"generator": "random_riemannian", "seed": seed}));
        }
    }
}

/// A random Lorentzian problem on `R^2` or `R^3` with a certified timelike
/// witness: `g = diag(a_1, .., -b)`, an oscillating spacelike block, a growing
/// timelike direction, small couplings, and a random `(P, S)`.
pub fn random_lorentzian(seed: u64) -> MorseSturmProblem {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let tol = Tolerances::default();
    loop {
        let n = rng.random_range(2..=3);
        let diag: Vec<f64> = (0..n)
            .map(|i| {
                let v = rng.random_range(0.5..2.0);
                if i + 1 == n { -v } else { v }
            })
            .collect();
        let g = MetricForm::diagonal(&diag);
        let gram = g.entries().clone();
        let w: f64 = rng.random_range(1.0..8.0);
        let a: f64 = rng.random_range(0.0..1.5);
        let mut b = random_symmetric(&mut rng, n, 0.3);
        for i in 0..n - 1 {
            b[(i, i)] += -w * w * diag[i];
        }
        b[(n - 1, n - 1)] += a * a * diag[n - 1];
        let ginv = gram.try_inverse().expect("diagonal metric");
        let r = CoefficientPath::Constant(&ginv * b);
        let k = rng.random_range(0..n);
        let Ok(boundary) = random_boundary(&mut rng, &g, k) else { continue };
        let mut value = DVector::zeros(n);
        value[n - 1] = 1.0;
        let velocity = DVector::from_fn(n, |_, _| rng.random_range(-0.2..=0.2));
        let seed_data = WitnessSeed { value, velocity };
        let p = MorseSturmProblem::new(g, r, boundary, Some(seed_data)).expect("shapes agree");
        if problem::validate(&p, &tol).is_empty() && solver::solve_witness(&p, &tol).is_ok() {
            return p.with_meta(serde_json::json!({"generator": "random_lorentzian", "seed": seed}));
        }
    }
}
