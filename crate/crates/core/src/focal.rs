//! Focal instants, their multiplicity and signature, and the Maslov index as a
//! signature count.
//!
//! The scan samples `s(t) = sigma_min(M(t)) / sigma_max([M(t); Mp(t)])` and
//! polishes every local minimum by golden section. The stacked scale keeps the
//! test meaningful when `M(t0)` vanishes identically. Sign changes of
//! `det M(t)` are a cross-check for odd-order roots.

use std::io::Write;

use nalgebra::DMatrix;

use crate::forms::{self, Inertia, MetricForm};
use crate::linalg;
use crate::problem::{self, MorseSturmProblem, Perturbation, Targets};
use crate::search;
use crate::solver::{self, FundamentalSolution};
use crate::{Error, Result, Tolerances};

/// Roots this close to 1 (in units of `refine_tol`) are reported at t = 1.
const ENDPOINT_SNAP: f64 = 1e3;
/// Roots this close together (in units of `refine_tol`) are one root.
const DUPLICATE: f64 = 10.0;

#[derive(Clone, Debug)]
pub struct FocalInstant {
    pub t: f64,
    pub multiplicity: usize,
    pub signature: i64,
    /// `g` restricted to the orthogonal space has a kernel.
    pub degenerate: bool,
    /// Coefficient vectors (columns) of the solutions vanishing at `t`.
    pub kernel_basis: DMatrix<f64>,
    /// Orthonormal basis (columns) of `{J'(t) : J(t) = 0}`.
    pub jperp_basis: DMatrix<f64>,
    pub inertia: Inertia,
    /// Scaled smallest singular value at the polished root.
    pub residual: f64,
}

#[derive(Clone, Debug, Default)]
pub struct FocalScan {
    pub instants: Vec<FocalInstant>,
    pub endpoint_focal: bool,
    /// `(t, det M(t))` at the scan points.
    pub det_trace: Vec<(f64, f64)>,
    /// `(t, sigma_min(M(t)))` at the scan points.
    pub sigma_min_trace: Vec<(f64, f64)>,
}

impl FocalScan {
    pub fn interior(&self) -> impl Iterator<Item = &FocalInstant> {
        self.instants.iter().filter(|f| f.t < 1.0)
    }

    pub fn endpoint(&self) -> Option<&FocalInstant> {
        self.instants.iter().find(|f| f.t == 1.0)
    }

    pub fn total_multiplicity(&self) -> usize {
        self.instants.iter().map(|f| f.multiplicity).sum()
    }

    /// Focal table: `t, multiplicity, signature, degenerate`.
    pub fn write_table<W: Write>(&self, mut w: W, tol: &Tolerances) -> std::io::Result<()> {
        writeln!(
            w,
            "# tol_rank={:e} tol_eig={:e} refine_tol={:e} scan_points={}",
            tol.tol_rank, tol.tol_eig, tol.refine_tol, tol.scan_points
        )?;
        writeln!(w, "t,multiplicity,signature,degenerate")?;
        for f in &self.instants {
            writeln!(w, "{:.10},{},{},{}", f.t, f.multiplicity, f.signature, f.degenerate)?;
        }
        Ok(())
    }

    /// Trace table: `t, det, sigma_min`.
    pub fn write_traces<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "t,det,sigma_min")?;
        for ((t, d), (_, s)) in self.det_trace.iter().zip(&self.sigma_min_trace) {
            writeln!(w, "{t:.10},{d:.17e},{s:.17e}")?;
        }
        Ok(())
    }
}

struct Sample {
    det: f64,
    sigma_min: f64,
    scaled: f64,
}

fn stacked(m: &DMatrix<f64>, mp: &DMatrix<f64>) -> DMatrix<f64> {
    let n = m.nrows();
    let mut s = DMatrix::zeros(2 * n, m.ncols());
    s.rows_mut(0, n).copy_from(m);
    s.rows_mut(n, n).copy_from(mp);
    s
}

fn sample(fund: &FundamentalSolution, t: f64) -> Sample {
    let (m, mp) = fund.eval(t);
    let sigma_min = linalg::singular_values(&m).iter().cloned().fold(f64::INFINITY, f64::min);
    let scale = linalg::spectral_norm(&stacked(&m, &mp));
    Sample {
        det: m.determinant(),
        sigma_min,
        scaled: if scale > 0.0 { sigma_min / scale } else { 0.0 },
    }
}

fn scaled_sigma(fund: &FundamentalSolution, t: f64) -> f64 {
    sample(fund, t).scaled
}

/// Sub-samples per interval when zooming into a possible root.
const ZOOM_POINTS: usize = 32;
/// Safety factor on the local slope estimate used to rule out roots.
const SLOPE_SAFETY: f64 = 2.0;
const MAX_ZOOM_DEPTH: usize = 24;

/// Finds the roots of the scaled smallest singular value `f` sampled at
/// `(xs, vs)`. A cell may hold a root only if both end values lie below the
/// local slope times the cell width; contiguous such cells are resampled and
/// searched recursively until they are narrower than the duplicate distance.
/// Roots closer together than a cell are therefore found separately.
fn zoom(
    f: &dyn Fn(f64) -> f64,
    xs: &[f64],
    vs: &[f64],
    skip_first: bool,
    depth: usize,
    tol: &Tolerances,
    out: &mut Vec<(f64, f64)>,
) {
    let n = xs.len() - 1;
    let slope = |k: usize| (vs[k + 1] - vs[k]).abs() / (xs[k + 1] - xs[k]);
    let admissible: Vec<bool> = (0..n)
        .map(|j| {
            if skip_first && j == 0 {
                return false;
            }
            let local = (j.saturating_sub(1)..(j + 2).min(n)).map(slope).fold(0.0, f64::max);
            let h = xs[j + 1] - xs[j];
            vs[j].max(vs[j + 1]) <= SLOPE_SAFETY * local * h
        })
        .collect();

    let mut j = 0;
    while j < n {
        if !admissible[j] {
            j += 1;
            continue;
        }
        let start = j;
        while j < n && admissible[j] {
            j += 1;
        }
        let (lo, hi) = (xs[start], xs[j]);
        if hi - lo <= DUPLICATE * tol.refine_tol || depth == MAX_ZOOM_DEPTH {
            let (t, v) = search::golden_min(f, lo, hi, tol.refine_tol);
            if v <= tol.tol_rank {
                out.push((t, v));
            }
            continue;
        }
        let h = (hi - lo) / ZOOM_POINTS as f64;
        let sub_x: Vec<f64> = (0..=ZOOM_POINTS).map(|i| if i == ZOOM_POINTS { hi } else { lo + i as f64 * h }).collect();
        let sub_v: Vec<f64> = sub_x.iter().map(|&x| f(x)).collect();
        zoom(f, &sub_x, &sub_v, false, depth + 1, tol, out);
    }
}

/// Builds the instant at a polished root `t`.
pub fn classify(fund: &FundamentalSolution, g: &MetricForm, t: f64, tol: &Tolerances) -> FocalInstant {
    let (m, mp) = fund.eval(t);
    let n = m.ncols();
    let scale = linalg::spectral_norm(&stacked(&m, &mp));
    let svd = linalg::svd(&m);
    let v_t = svd.v_t;
    let small: Vec<usize> = (0..svd.singular_values.len())
        .filter(|&i| svd.singular_values[i] <= tol.tol_rank * scale)
        .collect();
    let residual = svd.singular_values.iter().cloned().fold(f64::INFINITY, f64::min) / scale;
    let kernel_basis = DMatrix::from_fn(n, small.len(), |i, j| v_t[(small[j], i)]);
    with_kernel(&mp, g, t, kernel_basis, residual, tol)
}

fn with_kernel(
    mp: &DMatrix<f64>,
    g: &MetricForm,
    t: f64,
    kernel_basis: DMatrix<f64>,
    residual: f64,
    tol: &Tolerances,
) -> FocalInstant {
    let jperp_basis = linalg::orthonormal_span(&(mp * &kernel_basis), tol.tol_rank);
    let gram = linalg::symmetrize(&(jperp_basis.transpose() * g.entries() * &jperp_basis));
    let inertia = forms::inertia(&gram, tol.tol_eig);
    FocalInstant {
        t,
        multiplicity: kernel_basis.ncols(),
        signature: inertia.signature(),
        degenerate: inertia.n_zero > 0,
        kernel_basis,
        jperp_basis,
        inertia,
        residual,
    }
}

/// Neighbouring roots belong to one instant when one of them already counts
/// the other's kernel, or when they are the same root found twice.
fn same_cluster(a: &FocalInstant, b: &FocalInstant, cell: f64, tol: &Tolerances) -> bool {
    if b.t - a.t > cell {
        return false;
    }
    if b.t - a.t <= DUPLICATE * tol.refine_tol {
        return true;
    }
    if a.multiplicity < 2 && b.multiplicity < 2 {
        return false;
    }
    let overlap = a.kernel_basis.transpose() * &b.kernel_basis;
    linalg::spectral_norm(&overlap) >= 0.5
}

/// One instant for a cluster of nearby roots. Its kernel is the span of the
/// members' kernels, so the signature is the sum over the split crossings.
fn merge_cluster(fund: &FundamentalSolution, g: &MetricForm, cluster: Vec<FocalInstant>, tol: &Tolerances) -> FocalInstant {
    let rep = cluster
        .iter()
        .enumerate()
        .max_by(|(_, x), (_, y)| {
            (x.t == 1.0, x.multiplicity)
                .cmp(&(y.t == 1.0, y.multiplicity))
                .then(y.residual.total_cmp(&x.residual))
        })
        .map(|(i, _)| i)
        .expect("nonempty cluster");
    let n = cluster[rep].kernel_basis.nrows();
    let cols: usize = cluster.iter().map(|c| c.multiplicity).sum();
    let mut all = DMatrix::zeros(n, cols);
    let mut j = 0;
    for c in &cluster {
        all.columns_mut(j, c.multiplicity).copy_from(&c.kernel_basis);
        j += c.multiplicity;
    }
    let union = linalg::orthonormal_span(&all, 0.1);
    let mut cluster = cluster;
    let chosen = cluster.swap_remove(rep);
    if union.ncols() == chosen.multiplicity {
        return chosen;
    }
    let (_, mp) = fund.eval(chosen.t);
    with_kernel(&mp, g, chosen.t, union, chosen.residual, tol)
}

/// Locates every focal instant in `(0, 1]`.
///
/// Instants closer to 0 than one scan cell are not searched for; there are
/// none in a neighbourhood of 0.
pub fn scan_focal(fund: &FundamentalSolution, g: &MetricForm, tol: &Tolerances) -> Result<FocalScan> {
    let n_pts = tol.scan_points;
    let cell = 1.0 / n_pts as f64;
    let ts: Vec<f64> = (0..=n_pts).map(|i| i as f64 * cell).collect();
    let samples: Vec<Sample> = ts.iter().map(|&t| sample(fund, t)).collect();
    let f = |t: f64| scaled_sigma(fund, t);

    let mut candidates: Vec<(f64, f64)> = Vec::new();
    let values: Vec<f64> = samples.iter().map(|s| s.scaled).collect();
    zoom(&f, &ts, &values, true, 0, tol, &mut candidates);

    // det sign changes must be explained by an accepted root
    for i in 1..n_pts {
        let (d0, d1) = (samples[i].det, samples[i + 1].det);
        if d0 * d1 >= 0.0 {
            continue;
        }
        let (lo, hi) = (ts[i] - cell, ts[i + 1] + cell);
        if candidates.iter().any(|(t, _)| *t >= lo && *t <= hi) {
            continue;
        }
        let (a, b) = search::bisect(|t| fund.m(t).determinant(), ts[i], ts[i + 1], tol.refine_tol)
            .expect("bracket has a sign change");
        let t = 0.5 * (a + b);
        let v = f(t);
        if v <= tol.tol_rank {
            candidates.push((t, v));
        } else {
            return Err(Error::UnresolvedRoot { lo: a, hi: b });
        }
    }

    for c in candidates.iter_mut() {
        if c.0 > 1.0 - ENDPOINT_SNAP * tol.refine_tol {
            c.0 = 1.0;
        }
    }
    candidates.sort_by(|a, b| a.0.total_cmp(&b.0));

    let mut instants: Vec<FocalInstant> = Vec::new();
    let mut cluster: Vec<FocalInstant> = Vec::new();
    for (t, _) in candidates {
        let inst = classify(fund, g, t, tol);
        if inst.multiplicity == 0 {
            continue;
        }
        if let Some(last) = cluster.last() {
            if !same_cluster(last, &inst, cell, tol) {
                instants.push(merge_cluster(fund, g, std::mem::take(&mut cluster), tol));
            }
        }
        cluster.push(inst);
    }
    if !cluster.is_empty() {
        instants.push(merge_cluster(fund, g, cluster, tol));
    }
    let endpoint_focal = instants.last().is_some_and(|f| f.t == 1.0);
    Ok(FocalScan {
        instants,
        endpoint_focal,
        det_trace: ts.iter().zip(&samples).map(|(t, s)| (*t, s.det)).collect(),
        sigma_min_trace: ts.iter().zip(&samples).map(|(t, s)| (*t, s.sigma_min)).collect(),
    })
}

/// Solves the problem and scans it.
pub fn scan_problem(problem: &MorseSturmProblem, tol: &Tolerances) -> Result<FocalScan> {
    let fund = solver::solve_fundamental(problem, tol)?;
    scan_focal(&fund, &problem.g, tol)
}

/// Sum of signatures over the interior instants. Fails on a degenerate
/// interior instant; the endpoint is not inspected.
pub fn interior_signature_sum(scan: &FocalScan) -> Result<i64> {
    let mut total = 0;
    for f in scan.interior() {
        if f.degenerate {
            return Err(Error::DegenerateFocalInstant { t: f.t });
        }
        total += f.signature;
    }
    Ok(total)
}

/// The Maslov index as the signature count over `(0, 1)`.
pub fn maslov_index(scan: &FocalScan) -> Result<i64> {
    if scan.endpoint_focal {
        return Err(Error::EndpointFocal);
    }
    interior_signature_sum(scan)
}

#[derive(Clone, Debug, PartialEq)]
pub enum TrialOutcome {
    Value(i64),
    /// The perturbed scan had a degenerate or endpoint instant.
    Degenerate(String),
    /// The perturbation itself was rejected.
    Rejected(String),
}

#[derive(Clone, Debug)]
pub struct Trial {
    pub seed: u64,
    pub instants: usize,
    pub outcome: TrialOutcome,
}

#[derive(Clone, Debug)]
pub struct RobustMaslov {
    pub value: i64,
    pub trials: Vec<Trial>,
}

impl RobustMaslov {
    pub fn write_table<W: Write>(&self, w: W) -> std::io::Result<()> {
        write_trials(w, &self.trials)
    }
}

/// Trial table: `trial, seed, instants, outcome`.
pub fn write_trials<W: Write>(mut w: W, trials: &[Trial]) -> std::io::Result<()> {
    writeln!(w, "trial,seed,instants,outcome")?;
    for (i, t) in trials.iter().enumerate() {
        let outcome = match &t.outcome {
            TrialOutcome::Value(v) => v.to_string(),
            TrialOutcome::Degenerate(why) => format!("degenerate ({why})"),
            TrialOutcome::Rejected(why) => format!("rejected ({why})"),
        };
        writeln!(w, "{i},{},{},{outcome}", t.seed, t.instants)?;
    }
    Ok(())
}

fn run_trial(problem: &MorseSturmProblem, eps: f64, seed: u64, tol: &Tolerances) -> Result<Trial> {
    let pert = Perturbation { eps, seed, targets: Targets::ALL };
    let perturbed = match problem::perturb(problem, &pert, tol) {
        Ok(p) => p,
        Err(e @ Error::PerturbationBrokeInvariant(_)) => {
            return Ok(Trial { seed, instants: 0, outcome: TrialOutcome::Rejected(e.to_string()) })
        }
        Err(e) => return Err(e),
    };
    let violations = problem::validate(&perturbed, tol);
    if let Some(v) = violations.first() {
        return Ok(Trial { seed, instants: 0, outcome: TrialOutcome::Rejected(v.detail.clone()) });
    }
    let scan = scan_problem(&perturbed, tol)?;
    let outcome = match maslov_index(&scan) {
        Ok(v) => TrialOutcome::Value(v),
        Err(e @ (Error::EndpointFocal | Error::DegenerateFocalInstant { .. })) => {
            TrialOutcome::Degenerate(e.to_string())
        }
        Err(e) => return Err(e),
    };
    Ok(Trial { seed, instants: scan.instants.len(), outcome })
}

/// Runs `n_trials` perturbed scans concurrently. Trial `i` uses seed `seed + i`.
pub fn perturbation_trials(
    problem: &MorseSturmProblem,
    eps: f64,
    n_trials: usize,
    seed: u64,
    tol: &Tolerances,
) -> Result<Vec<Trial>> {
    let seeds: Vec<u64> = (0..n_trials as u64).map(|i| seed.wrapping_add(i)).collect();
    let results: Vec<Result<Trial>> = std::thread::scope(|scope| {
        let handles: Vec<_> = seeds
            .iter()
            .map(|&s| scope.spawn(move || run_trial(problem, eps, s, tol)))
            .collect();
        handles.into_iter().map(|h| h.join().expect("trial thread panicked")).collect()
    });
    results.into_iter().collect()
}

/// Maslov index from `n_trials` independently perturbed copies of the problem.
/// Trial `i` uses seed `seed + i`. The value is returned only when every
/// nondegenerate trial agrees.
pub fn maslov_robust(
    problem: &MorseSturmProblem,
    eps: f64,
    n_trials: usize,
    seed: u64,
    tol: &Tolerances,
) -> Result<RobustMaslov> {
    let base = scan_problem(problem, tol)?;
    if base.endpoint_focal {
        return Err(Error::EndpointFocal);
    }
    if eps == 0.0 {
        let value = maslov_index(&base)?;
        let trial = Trial { seed, instants: base.instants.len(), outcome: TrialOutcome::Value(value) };
        return Ok(RobustMaslov { value, trials: vec![trial] });
    }

    let trials = perturbation_trials(problem, eps, n_trials, seed, tol)?;

    let values: Vec<i64> = trials
        .iter()
        .filter_map(|t| match t.outcome {
            TrialOutcome::Value(v) => Some(v),
            _ => None,
        })
        .collect();
    let Some(&first) = values.first() else {
        return Err(Error::AllTrialsDegenerate);
    };
    if values.iter().any(|v| *v != first) {
        return Err(Error::NoAgreement { values });
    }
    Ok(RobustMaslov { value: first, trials })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;
    use std::f64::consts::PI;

    fn tol() -> Tolerances {
        Tolerances::default()
    }

    #[test]
    fn simple_example_has_no_focal_instants() {
        let scan = scan_problem(&fixtures::example_simple(), &tol()).unwrap();
        assert!(scan.instants.is_empty());
        assert!(!scan.endpoint_focal);
        assert_eq!(maslov_index(&scan).unwrap(), 0);
    }

    #[test]
    fn causal_example_endpoint_instant() {
        let scan = scan_problem(&fixtures::example_causal(), &tol()).unwrap();
        assert_eq!(scan.instants.len(), 1);
        let f = &scan.instants[0];
        assert_eq!(f.t, 1.0);
        assert_eq!(f.multiplicity, 1);
        assert_eq!(f.signature, -1);
        assert!(!f.degenerate);
        assert!(scan.endpoint_focal);
        // the orthogonal space is the e2 line
        assert!(f.jperp_basis[(0, 0)].abs() < 1e-9);
        assert!((f.jperp_basis[(1, 0)].abs() - 1.0).abs() < 1e-9);
        assert!(matches!(maslov_index(&scan), Err(Error::EndpointFocal)));
    }

    #[test]
    fn harmonic_instants() {
        let scan = scan_problem(&fixtures::harmonic(2.0 * PI), &tol()).unwrap();
        let ts: Vec<f64> = scan.instants.iter().map(|f| f.t).collect();
        assert_eq!(ts.len(), 2, "{ts:?}");
        assert!((ts[0] - 0.5).abs() < 1e-9);
        assert_eq!(ts[1], 1.0);
        for f in &scan.instants {
            assert_eq!((f.multiplicity, f.signature), (2, 2));
        }

        let scan = scan_problem(&fixtures::harmonic(2.5 * PI), &tol()).unwrap();
        let ts: Vec<f64> = scan.instants.iter().map(|f| f.t).collect();
        assert_eq!(ts.len(), 2);
        assert!((ts[0] - 0.4).abs() < 1e-9 && (ts[1] - 0.8).abs() < 1e-9);
        assert_eq!(maslov_index(&scan).unwrap(), 4);
    }

    #[test]
    fn interior_negative_instant() {
        let scan = scan_problem(&fixtures::minkowski_line(2.0), &tol()).unwrap();
        assert_eq!(scan.instants.len(), 1);
        assert!((scan.instants[0].t - 0.5).abs() < 1e-9);
        assert_eq!(scan.instants[0].signature, -1);
        assert_eq!(maslov_index(&scan).unwrap(), -1);
    }

    #[test]
    fn odd_root_found_by_both_detectors() {
        // a simple root in one dimension: det changes sign
        let p = MorseSturmProblem::new(
            MetricForm::euclidean(1),
            crate::CoefficientPath::Constant(DMatrix::from_element(1, 1, -(1.5 * PI).powi(2))),
            crate::BoundaryData::point(1),
            None,
        )
        .unwrap();
        let scan = scan_problem(&p, &tol()).unwrap();
        assert_eq!(scan.instants.len(), 1);
        assert!((scan.instants[0].t - 2.0 / 3.0).abs() < 1e-9);
        let changes = scan.det_trace.windows(2).filter(|w| w[0].1 * w[1].1 < 0.0).count();
        assert_eq!(changes, 1);
    }

    #[test]
    fn roots_closer_than_a_scan_cell_are_separated() {
        let w1 = 1.5 * PI;
        let w2 = w1 * (1.0 + 3e-5);
        let r = DMatrix::from_diagonal(&nalgebra::DVector::from_column_slice(&[-w1 * w1, -w2 * w2]));
        let p = MorseSturmProblem::new(
            MetricForm::euclidean(2),
            crate::CoefficientPath::Constant(r),
            crate::BoundaryData::point(2),
            None,
        )
        .unwrap();
        let scan = scan_problem(&p, &tol()).unwrap();
        let ts: Vec<f64> = scan.instants.iter().map(|f| f.t).collect();
        assert_eq!(ts.len(), 2, "{ts:?}");
        assert!((ts[0] - PI / w2).abs() < 1e-9 && (ts[1] - PI / w1).abs() < 1e-9);
        assert!(scan.instants.iter().all(|f| f.multiplicity == 1 && f.signature == 1));
    }

    #[test]
    fn scale_invariance() {
        let base = fixtures::lorentz_cosh(2.5 * PI, 1.0);
        let a = scan_problem(&base, &tol()).unwrap();
        let mut scaled = base.clone();
        scaled.g = base.g.scaled(3.7);
        let b = scan_problem(&scaled, &tol()).unwrap();
        assert_eq!(a.instants.len(), b.instants.len());
        for (x, y) in a.instants.iter().zip(&b.instants) {
            assert!((x.t - y.t).abs() < 1e-9);
            assert_eq!((x.multiplicity, x.signature), (y.multiplicity, y.signature));
        }
    }

    #[test]
    fn robust_matches_plain_count() {
        let h = fixtures::harmonic(2.5 * PI);
        let r = maslov_robust(&h, 1e-5, 8, 7, &tol()).unwrap();
        assert_eq!(r.value, 4);
        assert_eq!(r.trials.len(), 8);
        assert!(r.trials.iter().all(|t| t.outcome == TrialOutcome::Value(4)));

        let s = fixtures::example_simple();
        assert_eq!(maslov_robust(&s, 1e-4, 8, 0, &tol()).unwrap().value, 0);
        assert_eq!(maslov_robust(&s, 0.0, 8, 0, &tol()).unwrap().value, 0);
        assert!(matches!(
            maslov_robust(&fixtures::example_causal(), 1e-4, 4, 0, &tol()),
            Err(Error::EndpointFocal)
        ));
    }

    #[test]
    fn tables_are_deterministic() {
        let scan = scan_problem(&fixtures::example_causal(), &tol()).unwrap();
        let mut a = Vec::new();
        scan.write_table(&mut a, &tol()).unwrap();
        let text = String::from_utf8(a).unwrap();
        assert!(text.contains("\n1.0000000000,1,-1,false\n"));
        let mut b = Vec::new();
        scan.write_traces(&mut b).unwrap();
        assert_eq!(String::from_utf8(b).unwrap().lines().count(), tol().scan_points + 2);
    }
}
