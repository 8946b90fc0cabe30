//! Constructors for the shipped fixture problems.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};

use crate::forms::{MetricForm, PolynomialMatrixCurve, Subspace};
use crate::problem::{BoundaryData, CoefficientPath, MorseSturmProblem, WitnessSeed};

fn e(n: usize, i: usize) -> Vec<f64> {
    let mut v = vec![0.0; n];
    v[i] = 1.0;
    v
}

fn constant_seed(v: &[f64]) -> WitnessSeed {
    WitnessSeed {
        value: DVector::from_column_slice(v),
        velocity: DVector::zeros(v.len()),
    }
}

/// Flat Minkowski plane, geodesic along the x-axis, timelike initial line
/// `P = span{e2}` with vanishing second fundamental form.
pub fn example_simple() -> MorseSturmProblem {
    minkowski_line(0.0)
        .with_meta(serde_json::json!({"name": "exsimple", "note": "flat plane, timelike P, no focal points"}))
}

/// Same geometry with the parabola germ `S(e2) = e2`: one negative focal
/// instant at t = 1.
pub fn example_causal() -> MorseSturmProblem {
    minkowski_line(1.0)
        .with_meta(serde_json::json!({"name": "excausal", "note": "parabola germ, negative focal point at t = 1"}))
}

/// Flat Minkowski plane with `S = [s]`; focal instant at `t = 1/s` with
/// signature -1 when `s > 1`.
pub fn minkowski_line(s: f64) -> MorseSturmProblem {
    let p = Subspace::from_vectors(2, &[e(2, 1)], 1e-12).unwrap();
    MorseSturmProblem::new(
        MetricForm::diagonal(&[1.0, -1.0]),
        CoefficientPath::Constant(DMatrix::zeros(2, 2)),
        BoundaryData {
            p,
            s: DMatrix::from_element(1, 1, s),
        },
        Some(constant_seed(&[0.0, 1.0])),
    )
    .unwrap()
}

/// `g = Id_2`, `P = {0}`, `R = -omega^2 Id`. Conjugate instants at
/// multiples of `pi / omega`, each of multiplicity 2.
pub fn harmonic(omega: f64) -> MorseSturmProblem {
    MorseSturmProblem::new(
        MetricForm::euclidean(2),
        CoefficientPath::Constant(DMatrix::identity(2, 2) * (-omega * omega)),
        BoundaryData::point(2),
        None,
    )
    .unwrap()
    .with_meta(serde_json::json!({"name": "harmonic", "omega": omega}))
}

/// Lorentzian problem on R^3 with `g = diag(1, 1, -1)`, two oscillating
/// spacelike directions `R = diag(-w^2, -w^2, a^2)` and the non-parallel
/// timelike witness `Y = cosh(a t) e3`.
pub fn lorentz_cosh(omega: f64, a: f64) -> MorseSturmProblem {
    let r = DMatrix::from_diagonal(&DVector::from_column_slice(&[-omega * omega, -omega * omega, a * a]));
    MorseSturmProblem::new(
        MetricForm::diagonal(&[1.0, 1.0, -1.0]),
        CoefficientPath::Constant(r),
        BoundaryData::point(3),
        Some(WitnessSeed {
            value: DVector::from_column_slice(&[0.0, 0.0, 1.0]),
            velocity: DVector::zeros(3),
        }),
    )
    .unwrap()
    .with_meta(serde_json::json!({"name": "lorentz_cosh", "omega": omega, "a": a}))
}

/// Fixture file names paired with their constructors.
pub fn library() -> Vec<(&'static str, MorseSturmProblem)> {
    vec![
        ("exsimple.msp.json", example_simple()),
        ("excausal.msp.json", example_causal()),
        ("harmonic_0p5.msp.json", harmonic(0.5 * PI)),
        ("harmonic_1.msp.json", harmonic(PI)),
        ("harmonic_1p5.msp.json", harmonic(1.5 * PI)),
        ("harmonic_2.msp.json", harmonic(2.0 * PI)),
        ("harmonic_2p5.msp.json", harmonic(2.5 * PI)),
        (
            "negative_focal.msp.json",
            minkowski_line(2.0).with_meta(serde_json::json!({
                "name": "negative_focal",
                "note": "interior negative focal instant at t = 0.5"
            })),
        ),
        ("lorentz_cosh.msp.json", lorentz_cosh(2.5 * PI, 1.0)),
    ]
}

/// The two matrix curves of the nondegeneracy counterexample.
pub fn remark_curves() -> (PolynomialMatrixCurve, PolynomialMatrixCurve) {
    let b1 = PolynomialMatrixCurve {
        name: "B1".into(),
        n: 2,
        coefficients: vec![
            vec![vec![0.0, 0.0], vec![0.0, 1.0]],
            vec![vec![0.0, 1.0], vec![1.0, 1.0]],
            vec![vec![1.0, 0.0], vec![0.0, 0.0]],
        ],
    };
    let b2 = PolynomialMatrixCurve {
        name: "B2".into(),
        n: 2,
        coefficients: vec![
            vec![vec![0.0, 0.0], vec![0.0, 1.0]],
            vec![vec![0.0, 0.0], vec![0.0, 0.0]],
            vec![vec![1.0, 0.0], vec![0.0, 0.0]],
        ],
    };
    (b1, b2)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problem;
    use std::path::PathBuf;

    fn fixture_dir() -> PathBuf {
        PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../fixtures")
    }

    #[test]
    fn shipped_fixtures_match_constructors() {
        for (name, expected) in library() {
            let loaded = problem::load(fixture_dir().join(name)).unwrap();
            assert_eq!(loaded, expected, "{name}");
        }
        let (b1, b2) = remark_curves();
        assert_eq!(PolynomialMatrixCurve::load(fixture_dir().join("remark26_b1.json")).unwrap(), b1);
        assert_eq!(PolynomialMatrixCurve::load(fixture_dir().join("remark26_b2.json")).unwrap(), b2);
    }

    #[test]
    #[ignore = "regenerates the fixture directory"]
    fn write_fixtures() {
        for (name, p) in library() {
            problem::save(&p, fixture_dir().join(name)).unwrap();
        }
        let (b1, b2) = remark_curves();
        for (name, c) in [("remark26_b1.json", b1), ("remark26_b2.json", b2)] {
            let text = serde_json::to_string_pretty(&c).unwrap() + "\n";
            std::fs::write(fixture_dir().join(name), text).unwrap();
        }
    }
}
