//! Galerkin discretization of the index forms and of the constrained space.
//!
//! Trial fields are continuous piecewise-linear vector fields on a uniform mesh
//! of [0, 1]. The coefficient vector holds `k` coordinates of `V(0)` in the
//! basis of `P`, then `V(u_j)` for the interior nodes; `V(1) = 0` is
//! eliminated. Stiffness is integrated exactly and everything that involves
//! `R` or the witness by two-point Gauss quadrature.
//!
//! The constraint `g(V', Y) - t g(V, Y') = const` is imposed on element
//! averages: the mean of `c_V` over each element must equal the mean over the
//! whole interval.

use std::fmt;
use std::io::Write;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::focal::{self, FocalInstant, FocalScan, RobustMaslov};
use crate::forms::Inertia;
use crate::linalg;
use crate::problem::MorseSturmProblem;
use crate::solver::TimelikeWitness;
use crate::{Error, Result, Tolerances};

/// Perturbation size and trial count used when a degenerate interior instant
/// forces the perturbation-backed Maslov index.
pub const ROBUST_EPS: f64 = 1e-4;
pub const ROBUST_TRIALS: usize = 8;

const GAUSS_OFFSET: f64 = 0.211_324_865_405_187_1; // (1 - 1/sqrt 3) / 2

#[derive(Clone, Debug, PartialEq)]
pub struct Mesh {
    pub m: usize,
    pub nodes: Vec<f64>,
    /// Per element: two `(abscissa, weight)` pairs.
    pub quad: Vec<[(f64, f64); 2]>,
}

impl Mesh {
    pub fn uniform(m: usize) -> Result<Self> {
        if m < 2 {
            return Err(Error::InvalidInput(format!("mesh needs at least 2 elements, got {m}")));
        }
        let h = 1.0 / m as f64;
        let nodes: Vec<f64> = (0..=m).map(|j| j as f64 * h).collect();
        let quad = (0..m)
            .map(|e| {
                let a = nodes[e];
                [(a + GAUSS_OFFSET * h, 0.5 * h), (a + (1.0 - GAUSS_OFFSET) * h, 0.5 * h)]
            })
            .collect();
        Ok(Self { m, nodes, quad })
    }

    pub fn h(&self) -> f64 {
        1.0 / self.m as f64
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum SpaceTag {
    #[serde(rename = "H1_P-full")]
    Full,
    #[serde(rename = "K-constrained")]
    Constrained,
    #[serde(rename = "C0-limit")]
    C0Limit,
}

impl fmt::Display for SpaceTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SpaceTag::Full => "H1_P-full",
            SpaceTag::Constrained => "K-constrained",
            SpaceTag::C0Limit => "C0-limit",
        })
    }
}

#[derive(Clone, Debug)]
pub struct DiscreteForm {
    pub dim: usize,
    pub a: DMatrix<f64>,
    pub space_tag: SpaceTag,
}

/// Placement of node coefficients in the global vector.
struct Layout {
    n: usize,
    k: usize,
    m: usize,
    pbasis: DMatrix<f64>,
}

impl Layout {
    fn new(problem: &MorseSturmProblem, mesh: &Mesh) -> Self {
        Self {
            n: problem.n(),
            k: problem.boundary.k(),
            m: mesh.m,
            pbasis: problem.boundary.p.basis().clone(),
        }
    }

    fn dim(&self) -> usize {
        self.k + self.n * (self.m - 1)
    }

    /// Offset and width of node `j`; `None` for the eliminated last node.
    fn slot(&self, j: usize) -> Option<(usize, usize)> {
        match j {
            0 => Some((0, self.k)),
            j if j == self.m => None,
            j => Some((self.k + (j - 1) * self.n, self.n)),
        }
    }

    /// Matrix taking node coefficients to the nodal value in R^n.
    fn node_map(&self, j: usize) -> DMatrix<f64> {
        if j == 0 {
            self.pbasis.clone()
        } else {
            DMatrix::identity(self.n, self.n)
        }
    }

    /// Adds `D_aᵀ block D_b` into `a`.
    fn add_block(&self, a: &mut DMatrix<f64>, ja: usize, jb: usize, block: &DMatrix<f64>) {
        let (Some((oa, wa)), Some((ob, wb))) = (self.slot(ja), self.slot(jb)) else {
            return;
        };
        if wa == 0 || wb == 0 {
            return;
        }
        let local = self.node_map(ja).transpose() * block * self.node_map(jb);
        let mut view = a.view_mut((oa, ob), (wa, wb));
        view += local;
    }

    /// Places a nodal value as coefficients (node 0 projected onto `P`).
    fn coefficients(&self, values: &[DVector<f64>]) -> DVector<f64> {
        let mut x = DVector::zeros(self.dim());
        for (j, v) in values.iter().enumerate() {
            let Some((o, w)) = self.slot(j) else { continue };
            if w == 0 {
                continue;
            }
            let c = if j == 0 {
                self.pbasis
                    .clone()
                    .svd(true, true)
                    .solve(v, 1e-14)
                    .expect("pseudo-inverse solve")
            } else {
                v.clone()
            };
            x.rows_mut(o, w).copy_from(&c);
        }
        x
    }
}

/// `stiff ∫ g(V', W') + react ∫ g(R(t u) V, W) - boundary g(S V(0), W(0))`
/// on the mesh of [0, 1].
fn assemble_scaled(
    problem: &MorseSturmProblem,
    mesh: &Mesh,
    stiff: f64,
    react: f64,
    t: f64,
    boundary: f64,
) -> DMatrix<f64> {
    let lay = Layout::new(problem, mesh);
    let g = problem.g.entries();
    let h = mesh.h();
    let mut a = DMatrix::zeros(lay.dim(), lay.dim());
    for e in 0..mesh.m {
        let (l, r) = (e, e + 1);
        let k_local = g * (stiff / h);
        let mut mass = [[DMatrix::zeros(lay.n, lay.n), DMatrix::zeros(lay.n, lay.n)], [DMatrix::zeros(lay.n, lay.n), DMatrix::zeros(lay.n, lay.n)]];
        if react != 0.0 {
            for &(q, w) in &mesh.quad[e] {
                let s = (q - mesh.nodes[e]) / h;
                let phi = [1.0 - s, s];
                let gr = g * problem.r.eval(t * q) * (react * w);
                for i in 0..2 {
                    for j in 0..2 {
                        mass[i][j] += &gr * (phi[i] * phi[j]);
                    }
                }
            }
        }
        let nodes = [l, r];
        for i in 0..2 {
            for j in 0..2 {
                let sign = if i == j { 1.0 } else { -1.0 };
                let block = &k_local * sign + &mass[i][j];
                lay.add_block(&mut a, nodes[i], nodes[j], &block);
            }
        }
    }
    if boundary != 0.0 && lay.k > 0 {
        let sp = problem.boundary.s_ambient();
        let term = sp.transpose() * g * &lay.pbasis * boundary;
        let mut view = a.view_mut((0, 0), (lay.k, lay.k));
        view -= linalg::symmetrize(&term);
    }
    linalg::symmetrize(&a)
}

/// `I_1` on `H^1_P`.
pub fn assemble_i1(problem: &MorseSturmProblem, mesh: &Mesh) -> DiscreteForm {
    let a = assemble_scaled(problem, mesh, 1.0, 1.0, 1.0, 1.0);
    DiscreteForm { dim: a.nrows(), a, space_tag: SpaceTag::Full }
}

/// `I_t` pulled back to [0, 1] by `u = s / t`.
pub fn assemble_it_hat(problem: &MorseSturmProblem, mesh: &Mesh, t: f64) -> Result<DiscreteForm> {
    if !(t > 0.0 && t <= 1.0) {
        return Err(Error::InvalidInput(format!("t = {t} outside (0, 1]")));
    }
    let a = assemble_scaled(problem, mesh, 1.0 / t, t, t, 1.0);
    Ok(DiscreteForm { dim: a.nrows(), a, space_tag: SpaceTag::Full })
}

/// `C_t = t Î_t`, which extends to `C_0 = ∫ g(V', W')` at `t = 0`.
pub fn assemble_ct(problem: &MorseSturmProblem, mesh: &Mesh, t: f64) -> Result<DiscreteForm> {
    if !(0.0..=1.0).contains(&t) {
        return Err(Error::InvalidInput(format!("t = {t} outside [0, 1]")));
    }
    let a = assemble_scaled(problem, mesh, 1.0, t * t, t, t);
    let space_tag = if t == 0.0 { SpaceTag::C0Limit } else { SpaceTag::Full };
    Ok(DiscreteForm { dim: a.nrows(), a, space_tag })
}

/// `I_t` assembled directly on a uniform `m`-element mesh of [0, t].
pub fn assemble_on_interval(problem: &MorseSturmProblem, m: usize, t: f64) -> Result<DiscreteForm> {
    if !(t > 0.0 && t <= 1.0) {
        return Err(Error::InvalidInput(format!("t = {t} outside (0, 1]")));
    }
    let unit = Mesh::uniform(m)?;
    let lay = Layout::new(problem, &unit);
    let g = problem.g.entries();
    let len = t / m as f64;
    let mut a = DMatrix::zeros(lay.dim(), lay.dim());
    for e in 0..m {
        let s0 = e as f64 * len;
        let gauss = [
            (s0 + GAUSS_OFFSET * len, 0.5 * len),
            (s0 + (1.0 - GAUSS_OFFSET) * len, 0.5 * len),
        ];
        for i in 0..2 {
            for j in 0..2 {
                let sign = if i == j { 1.0 } else { -1.0 };
                let mut block = g * (sign / len);
                for &(s, w) in &gauss {
                    let x = (s - s0) / len;
                    let phi = [1.0 - x, x];
                    block += g * problem.r.eval(s) * (w * phi[i] * phi[j]);
                }
                lay.add_block(&mut a, e + i, e + j, &block);
            }
        }
    }
    if lay.k > 0 {
        let term = problem.boundary.s_ambient().transpose() * g * &lay.pbasis;
        let mut view = a.view_mut((0, 0), (lay.k, lay.k));
        view -= linalg::symmetrize(&term);
    }
    let a = linalg::symmetrize(&a);
    Ok(DiscreteForm { dim: a.nrows(), a, space_tag: SpaceTag::Full })
}

/// Rows `c̄_e - mean(c̄)` of the discrete constraint, one per element.
pub fn constraint_matrix(
    problem: &MorseSturmProblem,
    witness: &TimelikeWitness,
    mesh: &Mesh,
    t: f64,
) -> DMatrix<f64> {
    let lay = Layout::new(problem, mesh);
    let g = problem.g.entries();
    let h = mesh.h();
    let mut c = DMatrix::zeros(mesh.m, lay.dim());
    for e in 0..mesh.m {
        for &(q, w) in &mesh.quad[e] {
            let (y, yp) = witness.eval(t * q);
            let gy = (g * y).transpose();
            let gyp = (g * yp).transpose();
            let s = (q - mesh.nodes[e]) / h;
            let phi = [1.0 - s, s];
            let dphi = [-1.0 / h, 1.0 / h];
            for i in 0..2 {
                let node = e + i;
                let Some((o, wd)) = lay.slot(node) else { continue };
                if wd == 0 {
                    continue;
                }
                let row = (&gy * dphi[i] - &gyp * (t * phi[i])) * lay.node_map(node) * (w / h);
                let mut view = c.view_mut((e, o), (1, wd));
                view += row;
            }
        }
    }
    let mean = c.row_mean();
    for mut row in c.row_iter_mut() {
        row -= &mean;
    }
    c
}

#[derive(Clone, Debug)]
pub struct ConstraintKernel {
    /// Orthonormal columns spanning the discrete constrained space.
    pub z: DMatrix<f64>,
    /// Number of independent constraint rows.
    pub rank: usize,
    /// Number of free coefficients before the constraint.
    pub free: usize,
}

pub fn constraint_kernel(
    problem: &MorseSturmProblem,
    witness: &TimelikeWitness,
    mesh: &Mesh,
    t: f64,
    tol: &Tolerances,
) -> Result<ConstraintKernel> {
    let c = constraint_matrix(problem, witness, mesh, t);
    let free = c.ncols();
    let row_space = linalg::orthonormal_span(&c.transpose(), tol.tol_rank);
    let rank = row_space.ncols();
    let z = linalg::orthogonal_complement(&row_space);
    if z.ncols() == 0 {
        return Err(Error::EmptyKernel);
    }
    Ok(ConstraintKernel { z, rank, free })
}

/// Inertia of a discrete form with the relative threshold `tol_eig * ||A||`.
#[derive(Clone, Debug, Serialize)]
pub struct FormInertia {
    pub inertia: Inertia,
    pub dim: usize,
    /// Smallest `|eigenvalue| / ||A||`; tiny values signal `t` near a focal instant.
    pub smallest_relative: f64,
}

pub fn form_inertia(a: &DMatrix<f64>, tol_eig: f64) -> FormInertia {
    let ev = linalg::sym_eigenvalues(a);
    let norm = ev.iter().map(|e| e.abs()).fold(0.0, f64::max);
    let threshold = tol_eig * norm;
    let mut inertia = Inertia::default();
    for &e in &ev {
        if e < -threshold {
            inertia.n_minus += 1;
        } else if e > threshold {
            inertia.n_plus += 1;
        } else {
            inertia.n_zero += 1;
        }
    }
    let smallest = ev.iter().map(|e| e.abs()).fold(f64::INFINITY, f64::min);
    FormInertia {
        inertia,
        dim: ev.len(),
        smallest_relative: if norm > 0.0 { smallest / norm } else { 0.0 },
    }
}

/// `C_t` restricted to the discrete constrained space. Same inertia as
/// `Î_t` for `t > 0`; at `t = 0` it is the limit form.
pub fn constrained_index(
    problem: &MorseSturmProblem,
    witness: &TimelikeWitness,
    mesh: &Mesh,
    t: f64,
    tol: &Tolerances,
) -> Result<FormInertia> {
    let form = assemble_ct(problem, mesh, t)?;
    let ker = constraint_kernel(problem, witness, mesh, t, tol)?;
    let reduced = linalg::symmetrize(&(ker.z.transpose() * &form.a * &ker.z));
    Ok(form_inertia(&reduced, tol.tol_eig))
}

/// `C_t` on the full space `H^1_P` (finite index only for definite `g`).
pub fn unconstrained_index(
    problem: &MorseSturmProblem,
    mesh: &Mesh,
    t: f64,
    tol: &Tolerances,
) -> Result<FormInertia> {
    let form = assemble_ct(problem, mesh, t)?;
    Ok(form_inertia(&form.a, tol.tol_eig))
}

/// Constrained index with a witness, the full index without one. The full
/// space is only meaningful for positive definite `g`.
pub fn index_at(
    problem: &MorseSturmProblem,
    witness: Option<&TimelikeWitness>,
    mesh: &Mesh,
    t: f64,
    tol: &Tolerances,
) -> Result<FormInertia> {
    match witness {
        Some(w) => constrained_index(problem, w, mesh, t, tol),
        None => {
            if problem.g.inertia(tol.tol_eig).n_minus > 0 {
                return Err(Error::MissingSeed);
            }
            unconstrained_index(problem, mesh, t, tol)
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Jump {
    pub t_lo: f64,
    pub t_hi: f64,
    pub delta: i64,
    /// Focal instants within one grid cell of the bracket: first instant and
    /// the sum of their signatures.
    pub matched: Option<(f64, i64)>,
}

#[derive(Clone, Debug, Serialize)]
pub struct EvolutionTrace {
    pub ts: Vec<f64>,
    pub i_of_t: Vec<usize>,
    pub jumps: Vec<Jump>,
}

impl EvolutionTrace {
    pub fn write_csv<W: Write>(&self, mut w: W, mesh: &Mesh, tol: &Tolerances) -> std::io::Result<()> {
        writeln!(w, "# mesh={} tol_eig={:e} tol_rank={:e} ode_tol={:e}", mesh.m, tol.tol_eig, tol.tol_rank, tol.ode_tol)?;
        writeln!(w, "t,i_t")?;
        for (t, i) in self.ts.iter().zip(&self.i_of_t) {
            writeln!(w, "{t:.10},{i}")?;
        }
        Ok(())
    }

    pub fn write_jumps<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "t_jump,delta_i,matched_focal_t,matched_signature")?;
        for j in &self.jumps {
            let mid = 0.5 * (j.t_lo + j.t_hi);
            match j.matched {
                Some((t, s)) => writeln!(w, "{mid:.10},{},{t:.10},{s}", j.delta)?,
                None => writeln!(w, "{mid:.10},{},,", j.delta)?,
            }
        }
        Ok(())
    }
}

/// Parses `a:b:step` into the grid `a, a + step, ...` up to `b` inclusive.
pub fn parse_t_grid(spec: &str) -> Result<Vec<f64>> {
    let parts: Vec<&str> = spec.split(':').collect();
    let bad = || Error::InvalidInput(format!("t-grid must be a:b:step, got {spec:?}"));
    if parts.len() != 3 {
        return Err(bad());
    }
    let nums: Vec<f64> = parts
        .iter()
        .map(|p| p.trim().parse::<f64>().map_err(|_| bad()))
        .collect::<Result<_>>()?;
    let (a, b, step) = (nums[0], nums[1], nums[2]);
    if !(step > 0.0 && a > 0.0 && b <= 1.0 && a <= b) {
        return Err(Error::InvalidInput(format!(
            "t-grid needs 0 < a <= b <= 1 and step > 0, got {spec:?}"
        )));
    }
    let count = ((b - a) / step + 1e-9).floor() as usize;
    let mut ts: Vec<f64> = (0..=count).map(|i| a + i as f64 * step).collect();
    if let Some(last) = ts.last_mut() {
        if (*last - b).abs() < 1e-9 * step.max(1.0) {
            *last = b;
        }
    }
    Ok(ts)
}

/// `i(t)` on `ts` and the jumps between consecutive grid points.
pub fn evolution_trace(
    problem: &MorseSturmProblem,
    witness: Option<&TimelikeWitness>,
    mesh: &Mesh,
    ts: &[f64],
    scan: Option<&FocalScan>,
    tol: &Tolerances,
) -> Result<EvolutionTrace> {
    if ts.windows(2).any(|w| w[1] <= w[0]) || ts.iter().any(|t| !(*t > 0.0 && *t <= 1.0)) {
        return Err(Error::InvalidInput("t-grid must be increasing inside (0, 1]".into()));
    }
    let workers = std::thread::available_parallelism().map_or(1, |n| n.get()).min(ts.len().max(1));
    let chunk = ts.len().div_ceil(workers).max(1);
    let results: Vec<Result<Vec<usize>>> = std::thread::scope(|scope| {
        let handles: Vec<_> = ts
            .chunks(chunk)
            .map(|part| {
                scope.spawn(move || {
                    part.iter()
                        .map(|&t| index_at(problem, witness, mesh, t, tol).map(|f| f.inertia.n_minus))
                        .collect::<Result<Vec<usize>>>()
                })
            })
            .collect();
        handles.into_iter().map(|h| h.join().expect("evolution worker panicked")).collect()
    });
    let mut i_of_t = Vec::with_capacity(ts.len());
    for r in results {
        i_of_t.extend(r?);
    }

    let cell = if ts.len() > 1 { ts[1] - ts[0] } else { 0.0 };
    let mut jumps = Vec::new();
    for k in 0..ts.len().saturating_sub(1) {
        let delta = i_of_t[k + 1] as i64 - i_of_t[k] as i64;
        if delta == 0 {
            continue;
        }
        let (lo, hi) = (ts[k], ts[k + 1]);
        // instants inside the step; otherwise the nearest one within a cell,
        // since the discrete instant sits O(h^2) away from the continuous one
        let matched = scan.and_then(|s| {
            let inside: Vec<_> = s.instants.iter().filter(|f| f.t > lo && f.t <= hi).collect();
            if let Some(first) = inside.first() {
                return Some((first.t, inside.iter().map(|f| f.signature).sum()));
            }
            let gap = |f: &&FocalInstant| if f.t <= lo { lo - f.t } else { f.t - hi };
            s.instants
                .iter()
                .filter(|f| gap(f) <= cell)
                .min_by(|a, b| gap(a).total_cmp(&gap(b)))
                .map(|f| (f.t, f.signature))
        });
        jumps.push(Jump { t_lo: lo, t_hi: hi, delta, matched });
    }
    Ok(EvolutionTrace { ts: ts.to_vec(), i_of_t, jumps })
}

#[derive(Clone, Debug, Serialize)]
pub struct FocalRow {
    pub t: f64,
    pub multiplicity: usize,
    pub signature: i64,
    pub degenerate: bool,
}

/// Every term of the index formula together with the settings used.
#[derive(Clone, Debug, Serialize)]
pub struct IndexReport {
    pub n_minus_k: usize,
    pub n_minus_gp: usize,
    pub maslov: i64,
    /// `signature-sum` or `perturbation`.
    pub maslov_method: String,
    pub endpoint_correction: usize,
    pub residual: i64,
    pub mesh_history: Vec<(usize, usize)>,
    pub stabilized: bool,
    pub space: SpaceTag,
    pub focal_instants: Vec<FocalRow>,
    pub warnings: Vec<String>,
    pub tolerances: Tolerances,
}

impl IndexReport {
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }
}

/// Assembles every term of
/// `n_-(I_1|K) = n_-(g|P) + sum sgn - n_-(g|J[1]^perp)`
/// and refines the mesh until two consecutive counts agree.
///
/// With `witness = None` the full space is used, which requires `g` positive
/// definite.
pub fn verify(
    problem: &MorseSturmProblem,
    witness: Option<&TimelikeWitness>,
    schedule: &[usize],
    tol: &Tolerances,
) -> Result<IndexReport> {
    let scan = focal::scan_problem(problem, tol)?;
    verify_with_scan(problem, witness, schedule, &scan, tol)
}

pub fn verify_with_scan(
    problem: &MorseSturmProblem,
    witness: Option<&TimelikeWitness>,
    schedule: &[usize],
    scan: &FocalScan,
    tol: &Tolerances,
) -> Result<IndexReport> {
    let mut warnings = Vec::new();
    let (maslov, maslov_method) = match focal::interior_signature_sum(scan) {
        Ok(v) => (v, "signature-sum"),
        Err(Error::DegenerateFocalInstant { t }) => {
            warnings.push(format!("degenerate focal instant at t = {t:.8}; using perturbed count"));
            let RobustMaslov { value, .. } = focal::maslov_robust(problem, ROBUST_EPS, ROBUST_TRIALS, 0, tol)?;
            (value, "perturbation")
        }
        Err(e) => return Err(e),
    };
    let endpoint_correction = match scan.endpoint() {
        Some(f) if f.degenerate => return Err(Error::EndpointDegenerate),
        Some(f) => f.inertia.n_minus,
        None => 0,
    };
    let n_minus_gp = problem.index_g_on_p(tol.tol_eig);

    let mut history: Vec<(usize, usize)> = Vec::new();
    let mut stabilized = false;
    for &m in schedule {
        let mesh = Mesh::uniform(m)?;
        let fi = index_at(problem, witness, &mesh, 1.0, tol)?;
        if fi.smallest_relative < 1e3 * tol.tol_eig && !scan.endpoint_focal {
            warnings.push(format!("m = {m}: near-zero eigenvalue ({:.2e} relative)", fi.smallest_relative));
        }
        history.push((m, fi.inertia.n_minus));
        if let [.., (_, a), (_, b)] = history.as_slice() {
            if a == b {
                stabilized = true;
                break;
            }
        }
    }
    if !stabilized {
        return Err(Error::NotStabilized { history });
    }
    let n_minus_k = history.last().expect("nonempty history").1;
    let residual = n_minus_k as i64 - n_minus_gp as i64 - maslov + endpoint_correction as i64;
    Ok(IndexReport {
        n_minus_k,
        n_minus_gp,
        maslov,
        maslov_method: maslov_method.into(),
        endpoint_correction,
        residual,
        mesh_history: history,
        stabilized,
        space: if witness.is_some() { SpaceTag::Constrained } else { SpaceTag::Full },
        focal_instants: scan
            .instants
            .iter()
            .map(|f| FocalRow { t: f.t, multiplicity: f.multiplicity, signature: f.signature, degenerate: f.degenerate })
            .collect(),
        warnings,
        tolerances: tol.clone(),
    })
}

/// `|I_1(V_h, W_h)|` normalized by the `H^1` seminorms, where `V_h` is the
/// projection of the interpolant of `v` onto the discrete constrained space
/// and `W_h` interpolates `f Y` (with `f(0) = f(1) = 0`).
pub fn orthogonality_defect(
    problem: &MorseSturmProblem,
    witness: &TimelikeWitness,
    mesh: &Mesh,
    v: &dyn Fn(f64) -> DVector<f64>,
    f: &dyn Fn(f64) -> f64,
    tol: &Tolerances,
) -> Result<f64> {
    let lay = Layout::new(problem, mesh);
    let a = assemble_i1(problem, mesh).a;
    let ker = constraint_kernel(problem, witness, mesh, 1.0, tol)?;
    let xv: Vec<DVector<f64>> = mesh.nodes.iter().map(|&u| v(u)).collect();
    let xv = lay.coefficients(&xv);
    let xv = &ker.z * (ker.z.transpose() * xv);
    let xw: Vec<DVector<f64>> = mesh.nodes.iter().map(|&u| witness.eval(u).0 * f(u)).collect();
    let xw = lay.coefficients(&xw);

    let euclid = MorseSturmProblem {
        g: crate::MetricForm::euclidean(problem.n()),
        r: crate::CoefficientPath::Constant(DMatrix::zeros(problem.n(), problem.n())),
        boundary: crate::BoundaryData {
            p: problem.boundary.p.clone(),
            s: DMatrix::zeros(lay.k, lay.k),
        },
        y_seed: None,
        meta: serde_json::Value::Null,
    };
    let k = assemble_i1(&euclid, mesh).a;
    let nv = xv.dot(&(&k * &xv)).sqrt();
    let nw = xw.dot(&(&k * &xw)).sqrt();
    if nv == 0.0 || nw == 0.0 {
        return Err(Error::InvalidInput("test fields vanish on this mesh".into()));
    }
    Ok(xv.dot(&(&a * &xw)).abs() / (nv * nw))
}
