//! Morse-Sturm problem data `(g, R, P, S)` plus an optional timelike seed.

mod generate;
mod io;
mod path;

pub use generate::{generate_timelike_2d, random_lorentzian, random_riemannian, random_timelike_curve, GENERATOR_SAMPLES};
pub use io::{load, save, from_json_str, to_json_string};
pub use path::{CoefficientPath, CurveTerm, SampledPath, SmoothCurve, TrigTerm};

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::forms::{self, MetricForm, Subspace};
use crate::{Error, Result, Tolerances};

/// Relative tolerance for the g-symmetry checks performed by [`validate`].
pub const SYMMETRY_TOL: f64 = 1e-8;

/// Initial subspace `P` and the g-symmetric map `S: P -> P`, written in the
/// basis of `P` (column `j` holds the coordinates of `S p_j`).
#[derive(Clone, Debug, PartialEq)]
pub struct BoundaryData {
    pub p: Subspace,
    pub s: DMatrix<f64>,
}

impl BoundaryData {
    /// Fixed initial point: `P = {0}`.
    pub fn point(n: usize) -> Self {
        Self {
            p: Subspace::zero(n),
            s: DMatrix::zeros(0, 0),
        }
    }

    pub fn k(&self) -> usize {
        self.p.dim()
    }

    /// `S p_j` as vectors of R^n, one column per basis vector of `P`.
    pub fn s_ambient(&self) -> DMatrix<f64> {
        self.p.basis() * &self.s
    }
}

/// Initial data `(Y(0), Y'(0))` of a timelike solution.
#[derive(Clone, Debug, PartialEq)]
pub struct WitnessSeed {
    pub value: DVector<f64>,
    pub velocity: DVector<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct MorseSturmProblem {
    pub g: MetricForm,
    pub r: CoefficientPath,
    pub boundary: BoundaryData,
    pub y_seed: Option<WitnessSeed>,
    pub meta: serde_json::Value,
}

impl MorseSturmProblem {
    /// Assembles a problem, checking only shapes. Use [`validate`] for the
    /// mathematical invariants.
    pub fn new(
        g: MetricForm,
        r: CoefficientPath,
        boundary: BoundaryData,
        y_seed: Option<WitnessSeed>,
    ) -> Result<Self> {
        let n = g.n();
        match r.dim() {
            Some(d) if d == n => {}
            Some(d) => {
                return Err(Error::Schema(format!("R is {d}x{d} but g is {n}x{n}")));
            }
            None => return Err(Error::Schema("R has inconsistent matrix sizes".into())),
        }
        if boundary.p.ambient_dim() != n {
            return Err(Error::Schema(format!(
                "P lives in R^{} but n = {n}",
                boundary.p.ambient_dim()
            )));
        }
        let k = boundary.k();
        if boundary.s.nrows() != k || boundary.s.ncols() != k {
            return Err(Error::Schema(format!(
                "S must be {k}x{k} in the basis of P, got {}x{}",
                boundary.s.nrows(),
                boundary.s.ncols()
            )));
        }
        if let Some(seed) = &y_seed {
            if seed.value.len() != n || seed.velocity.len() != n {
                return Err(Error::Schema(format!("y_seed vectors must have length {n}")));
            }
        }
        Ok(Self {
            g,
            r,
            boundary,
            y_seed,
            meta: serde_json::Value::Object(Default::default()),
        })
    }

    pub fn n(&self) -> usize {
        self.g.n()
    }

    pub fn with_meta(mut self, meta: serde_json::Value) -> Self {
        self.meta = meta;
        self
    }

    pub fn with_seed(mut self, seed: Option<WitnessSeed>) -> Self {
        self.y_seed = seed;
        self
    }

    /// Gram matrix of `g` on `P`.
    pub fn gram_p(&self) -> DMatrix<f64> {
        forms::restrict(&self.g, &self.boundary.p).expect("dimensions checked at construction")
    }

    /// `n_-(g|P)`.
    pub fn index_g_on_p(&self, tol_eig: f64) -> usize {
        forms::inertia(&self.gram_p(), tol_eig).n_minus
    }
}

/// A broken invariant with the measured margin.
#[derive(Clone, Debug, PartialEq)]
pub struct Violation {
    pub invariant: &'static str,
    pub margin: f64,
    pub detail: String,
}

/// Chebyshev nodes mapped to [0, 1].
pub fn chebyshev_points(count: usize) -> Vec<f64> {
    (0..count)
        .map(|k| {
            let theta = (2 * k + 1) as f64 * std::f64::consts::PI / (2 * count) as f64;
            0.5 * (1.0 - theta.cos())
        })
        .collect()
}

/// Checks every invariant of the problem and returns the violated ones.
pub fn validate(problem: &MorseSturmProblem, tol: &Tolerances) -> Vec<Violation> {
    let mut out = Vec::new();
    let g = &problem.g;
    let cond = g.conditioning();
    if cond < tol.tol_rank {
        out.push(Violation {
            invariant: "g nondegenerate",
            margin: cond,
            detail: format!("singular value ratio {cond:.3e} below {:.1e}", tol.tol_rank),
        });
    }

    let mut worst: (f64, f64) = (0.0, 0.0);
    let mut finite = true;
    for t in chebyshev_points(32) {
        let r = problem.r.eval(t);
        if r.iter().any(|v| !v.is_finite()) {
            finite = false;
        }
        let defect = forms::g_symmetry_defect(g.entries(), &r);
        if defect > worst.0 {
            worst = (defect, t);
        }
    }
    if !finite {
        out.push(Violation {
            invariant: "R finite",
            margin: f64::NAN,
            detail: "R(t) has non-finite entries".into(),
        });
    }
    if worst.0 > SYMMETRY_TOL {
        out.push(Violation {
            invariant: "R g-symmetric",
            margin: worst.0,
            detail: format!("relative defect {:.3e} at t = {:.4}", worst.0, worst.1),
        });
    }

    if problem.boundary.k() > 0 {
        let gp = problem.gram_p();
        let detail = forms::inertia_detailed(&gp, tol.tol_eig);
        if detail.inertia.n_zero > 0 {
            let smallest = detail.eigenvalues.iter().map(|e| e.abs()).fold(f64::INFINITY, f64::min);
            out.push(Violation {
                invariant: "g nondegenerate on P",
                margin: smallest,
                detail: format!("g|P has inertia {}", detail.inertia),
            });
        }
        let defect = forms::g_symmetry_defect(&gp, &problem.boundary.s);
        if defect > SYMMETRY_TOL {
            out.push(Violation {
                invariant: "S g-symmetric",
                margin: defect,
                detail: format!("S not g-symmetric on P (relative defect {defect:.3e})"),
            });
        }
    }
    out
}

/// Which parts of the data a perturbation moves.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Targets {
    pub r: bool,
    pub s: bool,
    pub p: bool,
}

impl Targets {
    pub const ALL: Targets = Targets { r: true, s: true, p: true };
    pub const R_ONLY: Targets = Targets { r: true, s: false, p: false };
}

/// A seeded C^0-small perturbation of the problem data.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Perturbation {
    pub eps: f64,
    pub seed: u64,
    pub targets: Targets,
}

/// g-symmetric part of `a`: `(a + G^{-1} a^T G) / 2`.
pub fn g_symmetric_part(gram: &DMatrix<f64>, a: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let ginv = gram
        .clone()
        .try_inverse()
        .ok_or(Error::DegenerateMetric { ratio: 0.0 })?;
    Ok((a + ginv * a.transpose() * gram) * 0.5)
}

fn uniform_matrix(rng: &mut ChaCha8Rng, rows: usize, cols: usize, eps: f64) -> DMatrix<f64> {
    DMatrix::from_fn(rows, cols, |_, _| rng.random_range(-eps..=eps))
}

fn clamp_max_entry(a: DMatrix<f64>, eps: f64) -> DMatrix<f64> {
    let amax = a.amax();
    if amax > eps {
        a * (eps / amax)
    } else {
        a
    }
}

/// Applies `pert`. `R` moves by a constant g-symmetric matrix with entries in
/// `[-eps, eps]`; basis vectors of `P` and the entries of `S` move entrywise by
/// at most `eps`, after which `S` is projected back to g-symmetry on the new `P`.
pub fn perturb(
    problem: &MorseSturmProblem,
    pert: &Perturbation,
    tol: &Tolerances,
) -> Result<MorseSturmProblem> {
    if !(pert.eps >= 0.0) {
        return Err(Error::InvalidInput("perturbation size must be >= 0".into()));
    }
    if pert.eps == 0.0 {
        return Ok(problem.clone());
    }
    let eps = pert.eps;
    let n = problem.n();
    let mut rng = ChaCha8Rng::seed_from_u64(pert.seed);
    let gram = problem.g.entries();

    let mut out = problem.clone();
    if pert.targets.r {
        let delta = uniform_matrix(&mut rng, n, n, eps);
        let delta = clamp_max_entry(g_symmetric_part(gram, &delta)?, eps);
        out.r = problem.r.shifted(&delta);
    }

    let k = problem.boundary.k();
    if k > 0 && (pert.targets.p || pert.targets.s) {
        let mut basis = problem.boundary.p.basis().clone();
        if pert.targets.p {
            basis += uniform_matrix(&mut rng, n, k, eps);
        }
        let p = Subspace::new(basis, tol.tol_rank).map_err(|_| {
            Error::PerturbationBrokeInvariant("perturbed P lost a dimension".into())
        })?;
        let gp = forms::restrict(&problem.g, &p)?;
        if forms::inertia(&gp, tol.tol_eig).n_zero > 0 {
            return Err(Error::PerturbationBrokeInvariant(
                "g became degenerate on the perturbed P".into(),
            ));
        }
        let mut s = problem.boundary.s.clone();
        if pert.targets.s {
            s += uniform_matrix(&mut rng, k, k, eps);
        }
        let s = g_symmetric_part(&gp, &s)
            .map_err(|_| Error::PerturbationBrokeInvariant("g|P not invertible".into()))?;
        out.boundary = BoundaryData { p, s };
    }
    Ok(out)
}

/// Sup-norm distance (max entry) between the coefficient paths of two
/// problems on a uniform grid.
pub fn coefficient_distance(a: &MorseSturmProblem, b: &MorseSturmProblem, samples: usize) -> f64 {
    (0..=samples)
        .map(|i| {
            let t = i as f64 / samples as f64;
            (a.r.eval(t) - b.r.eval(t)).amax()
        })
        .fold(0.0, f64::max)
}

#[cfg(test)]
pub(crate) fn symmetric_defect_on_p(problem: &MorseSturmProblem) -> f64 {
    forms::g_symmetry_defect(&problem.gram_p(), &problem.boundary.s)
}
