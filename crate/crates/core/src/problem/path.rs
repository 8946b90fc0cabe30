use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

/// One harmonic of a trigonometric coefficient path.
#[derive(Clone, Debug, PartialEq)]
pub struct TrigTerm {
    pub freq: f64,
    pub cos: DMatrix<f64>,
    pub sin: DMatrix<f64>,
}

/// Piecewise-cubic C^1 interpolant through `(t, R)` samples.
#[derive(Clone, Debug)]
pub struct SampledPath {
    t: Vec<f64>,
    values: Vec<DMatrix<f64>>,
    slopes: Vec<DMatrix<f64>>,
}

impl PartialEq for SampledPath {
    fn eq(&self, other: &Self) -> bool {
        self.t == other.t && self.values == other.values
    }
}

impl SampledPath {
    /// Requires at least two strictly increasing sample times.
    pub fn new(t: Vec<f64>, values: Vec<DMatrix<f64>>) -> crate::Result<Self> {
        if t.len() < 2 || t.len() != values.len() {
            return Err(crate::Error::Schema(
                "sampled-grid path needs >= 2 samples with one matrix per time".into(),
            ));
        }
        if t.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(crate::Error::Schema(
                "sampled-grid times must be strictly increasing".into(),
            ));
        }
        let slopes = slopes(&t, &values);
        Ok(Self { t, values, slopes })
    }

    pub fn times(&self) -> &[f64] {
        &self.t
    }

    pub fn values(&self) -> &[DMatrix<f64>] {
        &self.values
    }

    fn segment(&self, t: f64) -> usize {
        let last = self.t.len() - 2;
        match self.t.binary_search_by(|p| p.total_cmp(&t)) {
            Ok(i) => i.min(last),
            Err(i) => i.saturating_sub(1).min(last),
        }
    }

    fn eval(&self, t: f64) -> (DMatrix<f64>, DMatrix<f64>) {
        let t = t.clamp(self.t[0], *self.t.last().unwrap());
        let i = self.segment(t);
        let h = self.t[i + 1] - self.t[i];
        let s = (t - self.t[i]) / h;
        let (s2, s3) = (s * s, s * s * s);
        let (y0, y1) = (&self.values[i], &self.values[i + 1]);
        let (m0, m1) = (&self.slopes[i], &self.slopes[i + 1]);
        let v = y0 * (2.0 * s3 - 3.0 * s2 + 1.0)
            + m0 * ((s3 - 2.0 * s2 + s) * h)
            + y1 * (-2.0 * s3 + 3.0 * s2)
            + m1 * ((s3 - s2) * h);
        let d = y0 * ((6.0 * s2 - 6.0 * s) / h)
            + m0 * (3.0 * s2 - 4.0 * s + 1.0)
            + y1 * ((-6.0 * s2 + 6.0 * s) / h)
            + m1 * (3.0 * s2 - 2.0 * s);
        (v, d)
    }
}

/// Second-order finite-difference slopes on a non-uniform grid.
fn slopes(t: &[f64], y: &[DMatrix<f64>]) -> Vec<DMatrix<f64>> {
    let n = t.len();
    if n == 2 {
        let d = (&y[1] - &y[0]) / (t[1] - t[0]);
        return vec![d.clone(), d];
    }
    let mut out = Vec::with_capacity(n);
    let three_point = |a: usize, b: usize, c: usize, at: usize| {
        // derivative at t[at] of the quadratic through a, b, c
        let (ta, tb, tc, x) = (t[a], t[b], t[c], t[at]);
        let la = ((x - tb) + (x - tc)) / ((ta - tb) * (ta - tc));
        let lb = ((x - ta) + (x - tc)) / ((tb - ta) * (tb - tc));
        let lc = ((x - ta) + (x - tb)) / ((tc - ta) * (tc - tb));
        &y[a] * la + &y[b] * lb + &y[c] * lc
    };
    out.push(three_point(0, 1, 2, 0));
    for i in 1..n - 1 {
        out.push(three_point(i - 1, i, i + 1, i));
    }
    out.push(three_point(n - 3, n - 2, n - 1, n - 1));
    out
}

/// The coefficient `R(t)` of the system `J'' = R(t) J` on [0, 1].
#[derive(Clone, Debug, PartialEq)]
pub enum CoefficientPath {
    Constant(DMatrix<f64>),
    /// `R(t) = sum_k t^k R_k`
    Polynomial(Vec<DMatrix<f64>>),
    /// `R(t) = offset + sum_j cos(w_j t) C_j + sin(w_j t) S_j`
    Trigonometric {
        offset: DMatrix<f64>,
        terms: Vec<TrigTerm>,
    },
    SampledGrid(SampledPath),
}

impl CoefficientPath {
    pub fn kind(&self) -> &'static str {
        match self {
            Self::Constant(_) => "constant",
            Self::Polynomial(_) => "polynomial-in-t",
            Self::Trigonometric { .. } => "trigonometric",
            Self::SampledGrid(_) => "sampled-grid",
        }
    }

    /// Matrix dimension, or `None` when the data mixes sizes.
    pub fn dim(&self) -> Option<usize> {
        let mats: Vec<&DMatrix<f64>> = match self {
            Self::Constant(m) => vec![m],
            Self::Polynomial(c) => c.iter().collect(),
            Self::Trigonometric { offset, terms } => std::iter::once(offset)
                .chain(terms.iter().flat_map(|t| [&t.cos, &t.sin]))
                .collect(),
            Self::SampledGrid(s) => s.values.iter().collect(),
        };
        let n = mats.first()?.nrows();
        mats.iter()
            .all(|m| m.nrows() == n && m.ncols() == n)
            .then_some(n)
    }

    pub fn eval(&self, t: f64) -> DMatrix<f64> {
        match self {
            Self::Constant(m) => m.clone(),
            Self::Polynomial(c) => {
                let mut acc = DMatrix::zeros(c[0].nrows(), c[0].ncols());
                for m in c.iter().rev() {
                    acc = acc * t + m;
                }
                acc
            }
            Self::Trigonometric { offset, terms } => {
                let mut acc = offset.clone();
                for term in terms {
                    let (s, c) = (term.freq * t).sin_cos();
                    acc += &term.cos * c + &term.sin * s;
                }
                acc
            }
            Self::SampledGrid(s) => s.eval(t).0,
        }
    }

    /// `R'(t)`; the sampled kind returns the derivative of its interpolant.
    pub fn derivative(&self, t: f64) -> DMatrix<f64> {
        match self {
            Self::Constant(m) => DMatrix::zeros(m.nrows(), m.ncols()),
            Self::Polynomial(c) => {
                let mut acc = DMatrix::zeros(c[0].nrows(), c[0].ncols());
                for (k, m) in c.iter().enumerate().skip(1).rev() {
                    acc = acc * t + m * (k as f64);
                }
                acc
            }
            Self::Trigonometric { offset, terms } => {
                let mut acc = DMatrix::zeros(offset.nrows(), offset.ncols());
                for term in terms {
                    let (s, c) = (term.freq * t).sin_cos();
                    acc += (&term.sin * c - &term.cos * s) * term.freq;
                }
                acc
            }
            Self::SampledGrid(s) => s.eval(t).1,
        }
    }

    /// Adds a constant matrix to the path.
    pub fn shifted(&self, delta: &DMatrix<f64>) -> Self {
        match self {
            Self::Constant(m) => Self::Constant(m + delta),
            Self::Polynomial(c) => {
                let mut c = c.clone();
                c[0] += delta;
                Self::Polynomial(c)
            }
            Self::Trigonometric { offset, terms } => Self::Trigonometric {
                offset: offset + delta,
                terms: terms.clone(),
            },
            Self::SampledGrid(s) => {
                let values = s.values.iter().map(|v| v + delta).collect();
                Self::SampledGrid(SampledPath {
                    t: s.t.clone(),
                    values,
                    slopes: s.slopes.clone(),
                })
            }
        }
    }
}

/// One additive term of a scalar curve component.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum CurveTerm {
    Poly { coeffs: Vec<f64> },
    Sin { amp: f64, freq: f64, phase: f64 },
    Sinh { amp: f64, rate: f64 },
    Cosh { amp: f64, rate: f64 },
}

impl CurveTerm {
    /// Value and first two derivatives.
    pub fn jet(&self, t: f64) -> [f64; 3] {
        match self {
            Self::Poly { coeffs } => {
                let (mut v, mut d1, mut d2) = (0.0, 0.0, 0.0);
                for (k, &c) in coeffs.iter().enumerate() {
                    let k = k as i32;
                    v += c * t.powi(k);
                    if k >= 1 {
                        d1 += c * k as f64 * t.powi(k - 1);
                    }
                    if k >= 2 {
                        d2 += c * (k * (k - 1)) as f64 * t.powi(k - 2);
                    }
                }
                [v, d1, d2]
            }
            Self::Sin { amp, freq, phase } => {
                let (s, c) = (freq * t + phase).sin_cos();
                [amp * s, amp * freq * c, -amp * freq * freq * s]
            }
            Self::Sinh { amp, rate } => {
                let x = rate * t;
                [amp * x.sinh(), amp * rate * x.cosh(), amp * rate * rate * x.sinh()]
            }
            Self::Cosh { amp, rate } => {
                let x = rate * t;
                [amp * x.cosh(), amp * rate * x.sinh(), amp * rate * rate * x.cosh()]
            }
        }
    }
}

/// A smooth curve in R^n given componentwise as sums of elementary terms.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SmoothCurve {
    pub components: Vec<Vec<CurveTerm>>,
}

impl SmoothCurve {
    pub fn constant(v: &[f64]) -> Self {
        Self {
            components: v
                .iter()
                .map(|&c| vec![CurveTerm::Poly { coeffs: vec![c] }])
                .collect(),
        }
    }

    pub fn dim(&self) -> usize {
        self.components.len()
    }

    /// Position, velocity and acceleration at `t`.
    pub fn jet(&self, t: f64) -> [Vec<f64>; 3] {
        let mut out = [Vec::new(), Vec::new(), Vec::new()];
        for comp in &self.components {
            let mut acc = [0.0; 3];
            for term in comp {
                let j = term.jet(t);
                for k in 0..3 {
                    acc[k] += j[k];
                }
            }
            for k in 0..3 {
                out[k].push(acc[k]);
            }
        }
        out
    }

    /// Linear change of coordinates `Y -> A Y`.
    pub fn transformed(&self, a: &DMatrix<f64>) -> Self {
        let mut components = Vec::with_capacity(a.nrows());
        for i in 0..a.nrows() {
            let mut terms = Vec::new();
            for (j, comp) in self.components.iter().enumerate() {
                let w = a[(i, j)];
                if w == 0.0 {
                    continue;
                }
                for term in comp {
                    terms.push(match term {
                        CurveTerm::Poly { coeffs } => CurveTerm::Poly {
                            coeffs: coeffs.iter().map(|c| c * w).collect(),
                        },
                        CurveTerm::Sin { amp, freq, phase } => CurveTerm::Sin {
                            amp: amp * w,
                            freq: *freq,
                            phase: *phase,
                        },
                        CurveTerm::Sinh { amp, rate } => CurveTerm::Sinh { amp: amp * w, rate: *rate },
                        CurveTerm::Cosh { amp, rate } => CurveTerm::Cosh { amp: amp * w, rate: *rate },
                    });
                }
            }
            components.push(terms);
        }
        Self { components }
    }
}
