//! `.msp.json` problem files.

use std::path::Path;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::{BoundaryData, CoefficientPath, MorseSturmProblem, SampledPath, TrigTerm, WitnessSeed};
use crate::forms::{MetricForm, Subspace};
use crate::linalg::{from_rows, to_rows};
use crate::{Error, Result};

type Rows = Vec<Vec<f64>>;

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ProblemFile {
    n: usize,
    g: Rows,
    #[serde(rename = "P")]
    p: Rows,
    #[serde(rename = "S")]
    s: Rows,
    #[serde(rename = "R")]
    r: PathFile,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    y_seed: Option<SeedFile>,
    #[serde(default)]
    meta: serde_json::Value,
}

#[derive(Serialize, Deserialize)]
#[serde(tag = "kind", content = "data")]
enum PathFile {
    #[serde(rename = "constant")]
    Constant(Rows),
    #[serde(rename = "polynomial-in-t")]
    Polynomial(Vec<Rows>),
    #[serde(rename = "trigonometric")]
    Trigonometric { offset: Rows, terms: Vec<TrigTermFile> },
    #[serde(rename = "sampled-grid")]
    Sampled { t: Vec<f64>, values: Vec<Rows> },
}

#[derive(Serialize, Deserialize)]
struct TrigTermFile {
    freq: f64,
    cos: Rows,
    sin: Rows,
}

#[derive(Serialize, Deserialize)]
struct SeedFile {
    value: Vec<f64>,
    velocity: Vec<f64>,
}

fn square(rows: &Rows, n: usize, what: &str) -> Result<DMatrix<f64>> {
    if rows.len() != n {
        return Err(Error::Schema(format!("{what} must have {n} rows, found {}", rows.len())));
    }
    from_rows(rows, n).ok_or_else(|| Error::Schema(format!("{what} must be {n}x{n}")))
}

fn path_from_file(file: &PathFile, n: usize) -> Result<CoefficientPath> {
    Ok(match file {
        PathFile::Constant(m) => CoefficientPath::Constant(square(m, n, "R")?),
        PathFile::Polynomial(c) => {
            if c.is_empty() {
                return Err(Error::Schema("polynomial R needs at least one coefficient".into()));
            }
            CoefficientPath::Polynomial(
                c.iter()
                    .map(|m| square(m, n, "R coefficient"))
                    .collect::<Result<_>>()?,
            )
        }
        PathFile::Trigonometric { offset, terms } => CoefficientPath::Trigonometric {
            offset: square(offset, n, "R offset")?,
            terms: terms
                .iter()
                .map(|t| {
                    Ok(TrigTerm {
                        freq: t.freq,
                        cos: square(&t.cos, n, "R cos term")?,
                        sin: square(&t.sin, n, "R sin term")?,
                    })
                })
                .collect::<Result<_>>()?,
        },
        PathFile::Sampled { t, values } => {
            let values = values
                .iter()
                .map(|m| square(m, n, "R sample"))
                .collect::<Result<Vec<_>>>()?;
            CoefficientPath::SampledGrid(SampledPath::new(t.clone(), values)?)
        }
    })
}

fn path_to_file(path: &CoefficientPath) -> PathFile {
    match path {
        CoefficientPath::Constant(m) => PathFile::Constant(to_rows(m)),
        CoefficientPath::Polynomial(c) => PathFile::Polynomial(c.iter().map(to_rows).collect()),
        CoefficientPath::Trigonometric { offset, terms } => PathFile::Trigonometric {
            offset: to_rows(offset),
            terms: terms
                .iter()
                .map(|t| TrigTermFile {
                    freq: t.freq,
                    cos: to_rows(&t.cos),
                    sin: to_rows(&t.sin),
                })
                .collect(),
        },
        CoefficientPath::SampledGrid(s) => PathFile::Sampled {
            t: s.times().to_vec(),
            values: s.values().iter().map(to_rows).collect(),
        },
    }
}

fn map_json_error(e: serde_json::Error) -> Error {
    use serde_json::error::Category;
    match e.classify() {
        Category::Data => Error::Schema(format!("{e}")),
        _ => Error::Parse {
            line: e.line(),
            column: e.column(),
            message: e.to_string(),
        },
    }
}

pub fn from_json_str(text: &str) -> Result<MorseSturmProblem> {
    let file: ProblemFile = serde_json::from_str(text).map_err(map_json_error)?;
    let n = file.n;
    if n == 0 {
        return Err(Error::Schema("n must be positive".into()));
    }
    let g = MetricForm::new(square(&file.g, n, "g")?)?;
    let r = path_from_file(&file.r, n)?;
    let p = Subspace::from_vectors(n, &file.p, 1e-12)
        .map_err(|e| Error::Schema(format!("P: {e}")))?;
    let k = p.dim();
    let s = if k == 0 {
        if !file.s.is_empty() {
            return Err(Error::Schema("S must be empty when P = {0}".into()));
        }
        DMatrix::zeros(0, 0)
    } else {
        square(&file.s, k, "S")?
    };
    let y_seed = file.y_seed.map(|sf| WitnessSeed {
        value: DVector::from_vec(sf.value),
        velocity: DVector::from_vec(sf.velocity),
    });
    let problem = MorseSturmProblem::new(g, r, BoundaryData { p, s }, y_seed)?;
    Ok(problem.with_meta(file.meta))
}

pub fn to_json_string(problem: &MorseSturmProblem) -> String {
    let file = ProblemFile {
        n: problem.n(),
        g: to_rows(problem.g.entries()),
        p: problem.boundary.p.vectors(),
        s: to_rows(&problem.boundary.s),
        r: path_to_file(&problem.r),
        y_seed: problem.y_seed.as_ref().map(|s| SeedFile {
            value: s.value.iter().cloned().collect(),
            velocity: s.velocity.iter().cloned().collect(),
        }),
        meta: problem.meta.clone(),
    };
    let mut text = serde_json::to_string_pretty(&file).expect("problem serializes");
    text.push('\n');
    text
}

pub fn load(path: impl AsRef<Path>) -> Result<MorseSturmProblem> {
    from_json_str(&std::fs::read_to_string(path)?)
}

pub fn save(problem: &MorseSturmProblem, path: impl AsRef<Path>) -> Result<()> {
    std::fs::write(path, to_json_string(problem))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;
    use proptest::prelude::*;

    #[test]
    fn round_trip_simple_example() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("exsimple.msp.json");
        let p = fixtures::example_simple();
        save(&p, &path).unwrap();
        assert_eq!(load(&path).unwrap(), p);
    }

    #[test]
    fn dimension_mismatch_is_schema_error() {
        let text = r#"{"n": 2, "g": [[1,0],[0,-1]], "P": [], "S": [],
            "R": {"kind": "constant", "data": [[0,0,0],[0,0,0],[0,0,0]]}}"#;
        assert!(matches!(from_json_str(text), Err(Error::Schema(_))));
    }

    #[test]
    fn missing_field_is_schema_error() {
        let text = r#"{"n": 2, "P": [], "S": [], "R": {"kind": "constant", "data": [[0,0],[0,0]]}}"#;
        match from_json_str(text) {
            Err(Error::Schema(msg)) => assert!(msg.contains("`g`"), "{msg}"),
            other => panic!("expected schema error, got {other:?}"),
        }
    }

    #[test]
    fn syntax_error_reports_position() {
        let text = "{\n  \"n\": 2,\n  \"g\": [[1, 0], [0, -1]\n}";
        match from_json_str(text) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 4),
            other => panic!("expected parse error, got {other:?}"),
        }
    }

    #[test]
    fn polynomial_kind_evaluates_affinely() {
        let text = r#"{"n": 1, "g": [[1]], "P": [], "S": [],
            "R": {"kind": "polynomial-in-t", "data": [[[2.0]], [[-3.0]]]}}"#;
        let p = from_json_str(text).unwrap();
        assert_eq!(p.r.eval(0.25)[(0, 0)], 2.0 - 0.75);
    }

    fn finite() -> impl Strategy<Value = f64> {
        prop_oneof![-1e3f64..1e3, -1e-6f64..1e-6, Just(0.0), Just(-0.0)]
    }

    proptest! {
        #[test]
        fn save_load_is_identity(
            vals in proptest::collection::vec(finite(), 4 * 4 + 3 * 4 + 4 + 8),
            kind in 0usize..4,
        ) {
            let n = 2;
            let m = |o: usize| DMatrix::from_row_slice(n, n, &vals[o..o + 4]);
            let r = match kind {
                0 => CoefficientPath::Constant(m(0)),
                1 => CoefficientPath::Polynomial(vec![m(0), m(4), m(8)]),
                2 => CoefficientPath::Trigonometric {
                    offset: m(0),
                    terms: vec![TrigTerm { freq: vals[32], cos: m(4), sin: m(8) }],
                },
                _ => CoefficientPath::SampledGrid(
                    SampledPath::new(vec![0.0, 0.5, 1.0], vec![m(0), m(4), m(8)]).unwrap(),
                ),
            };
            let g = MetricForm::diagonal(&[1.0 + vals[12].abs(), -1.0]);
            let p = Subspace::from_vectors(2, &[vec![vals[28], 1.0]], 1e-12).unwrap();
            let s = DMatrix::from_element(1, 1, vals[29]);
            let seed = WitnessSeed {
                value: DVector::from_vec(vec![vals[30], vals[31]]),
                velocity: DVector::from_vec(vec![vals[33], vals[34]]),
            };
            let prob = MorseSturmProblem::new(g, r, BoundaryData { p, s }, Some(seed))
                .unwrap()
                .with_meta(serde_json::json!({"label": "prop"}));
            let back = from_json_str(&to_json_string(&prob)).unwrap();
            prop_assert_eq!(back, prob);
        }
    }
}
