//! Dormand-Prince 5(4) integration on a fixed master grid. Each master
//! interval is subdivided adaptively until the embedded error estimate meets
//! the tolerance; with an infinite tolerance every master step is a single
//! fifth-order step.

use nalgebra::DVector;

use crate::{Error, Result};

const C: [f64; 7] = [0.0, 0.2, 0.3, 0.8, 8.0 / 9.0, 1.0, 1.0];
const A: [[f64; 6]; 7] = [
    [0.0; 6],
    [0.2, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
    [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
    [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
];
const B: [f64; 7] = [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0, 0.0];
const B_LOW: [f64; 7] = [
    5179.0 / 57600.0,
    0.0,
    7571.0 / 16695.0,
    393.0 / 640.0,
    -92097.0 / 339200.0,
    187.0 / 2100.0,
    1.0 / 40.0,
];

#[derive(Clone, Copy, Debug)]
pub struct OdeOptions {
    /// Mixed absolute/relative local error target; `f64::INFINITY` disables
    /// adaptive subdivision.
    pub tol: f64,
    /// Upper bound on substeps inside one master interval.
    pub max_substeps: usize,
}

impl OdeOptions {
    pub fn new(tol: f64) -> Self {
        Self { tol, max_substeps: 100_000 }
    }
}

#[derive(Clone, Debug)]
pub struct OdeSolution {
    pub grid: Vec<f64>,
    pub values: Vec<DVector<f64>>,
    /// Right-hand side at each grid point.
    pub derivs: Vec<DVector<f64>>,
    /// Largest accepted scaled error estimate (<= 1 when adaptive).
    pub max_error: f64,
    pub steps: usize,
}

struct Stepper<F> {
    rhs: F,
}

impl<F> Stepper<F>
where
    F: FnMut(f64, &DVector<f64>) -> Result<DVector<f64>>,
{
    /// One DP step from `(t, y)` with first stage `k0`; returns the new state,
    /// its right-hand side and the error vector.
    fn step(
        &mut self,
        t: f64,
        y: &DVector<f64>,
        k0: &DVector<f64>,
        h: f64,
    ) -> Result<(DVector<f64>, DVector<f64>, DVector<f64>)> {
        let mut k: Vec<DVector<f64>> = Vec::with_capacity(7);
        k.push(k0.clone());
        for s in 1..7 {
            let mut ys = y.clone();
            for (j, kj) in k.iter().enumerate() {
                let a = A[s][j];
                if a != 0.0 {
                    ys.axpy(h * a, kj, 1.0);
                }
            }
            k.push((self.rhs)(t + C[s] * h, &ys)?);
        }
        // stage 7 is evaluated at the new point (FSAL)
        let mut y_new = y.clone();
        let mut err = DVector::zeros(y.len());
        for s in 0..7 {
            if B[s] != 0.0 {
                y_new.axpy(h * B[s], &k[s], 1.0);
            }
            let d = B[s] - B_LOW[s];
            if d != 0.0 {
                err.axpy(h * d, &k[s], 1.0);
            }
        }
        let f_new = k.pop().unwrap();
        Ok((y_new, f_new, err))
    }
}

fn scaled_norm(err: &DVector<f64>, y0: &DVector<f64>, y1: &DVector<f64>, tol: f64) -> f64 {
    let n = err.len().max(1) as f64;
    let sum: f64 = err
        .iter()
        .zip(y0.iter().zip(y1.iter()))
        .map(|(e, (a, b))| {
            let sc = tol * (1.0 + a.abs().max(b.abs()));
            (e / sc).powi(2)
        })
        .sum();
    (sum / n).sqrt()
}

/// Integrates `y' = rhs(t, y)` and reports the state at every grid point.
pub fn integrate<F>(rhs: F, y0: DVector<f64>, grid: &[f64], opts: OdeOptions) -> Result<OdeSolution>
where
    F: FnMut(f64, &DVector<f64>) -> Result<DVector<f64>>,
{
    assert!(grid.len() >= 2, "grid needs at least two points");
    let mut stepper = Stepper { rhs };
    let mut t = grid[0];
    let mut y = y0;
    let mut f = (stepper.rhs)(t, &y)?;
    let mut values = vec![y.clone()];
    let mut derivs = vec![f.clone()];
    let mut max_error: f64 = 0.0;
    let mut steps = 0;
    let adaptive = opts.tol.is_finite();
    let mut h_try = grid[1] - grid[0];

    for w in grid.windows(2) {
        let end = w[1];
        let span = end - w[0];
        if !adaptive {
            let (yn, fnew, _) = stepper.step(t, &y, &f, span)?;
            check_finite(&yn, end)?;
            y = yn;
            f = fnew;
            t = end;
            steps += 1;
        } else {
            let mut sub = 0;
            h_try = h_try.min(span);
            while t < end {
                let last = end - t <= h_try * (1.0 + 1e-12);
                let h = if last { end - t } else { h_try };
                let (yn, fnew, err) = stepper.step(t, &y, &f, h)?;
                let norm = scaled_norm(&err, &y, &yn, opts.tol);
                if norm.is_finite() && norm <= 1.0 {
                    check_finite(&yn, t + h)?;
                    t = if last { end } else { t + h };
                    y = yn;
                    f = fnew;
                    max_error = max_error.max(norm);
                    steps += 1;
                    let grow = if norm == 0.0 { 5.0 } else { (0.9 * norm.powf(-0.2)).clamp(0.2, 5.0) };
                    if !last {
                        h_try = h * grow;
                    } else {
                        h_try = h_try.max(h * grow);
                    }
                } else {
                    let shrink = if norm.is_finite() { (0.9 * norm.powf(-0.2)).clamp(0.1, 0.9) } else { 0.1 };
                    h_try = h * shrink;
                }
                sub += 1;
                if sub > opts.max_substeps || h_try < 1e-14 * span.max(1e-300) {
                    return Err(Error::IntegrationFailure {
                        t,
                        reason: format!("step size collapsed to {h_try:.3e}"),
                    });
                }
            }
        }
        values.push(y.clone());
        derivs.push(f.clone());
    }
    Ok(OdeSolution {
        grid: grid.to_vec(),
        values,
        derivs,
        max_error,
        steps,
    })
}

fn check_finite(y: &DVector<f64>, t: f64) -> Result<()> {
    if y.iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(Error::IntegrationFailure {
            t,
            reason: "state became non-finite".into(),
        })
    }
}

pub fn uniform_grid(steps: usize) -> Vec<f64> {
    (0..=steps).map(|i| i as f64 / steps as f64).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn oscillator(w: f64) -> impl FnMut(f64, &DVector<f64>) -> Result<DVector<f64>> {
        move |_, y| Ok(DVector::from_column_slice(&[y[1], -w * w * y[0]]))
    }

    #[test]
    fn adaptive_meets_tolerance() {
        let w = 7.0;
        let sol = integrate(
            oscillator(w),
            DVector::from_column_slice(&[0.0, 1.0]),
            &uniform_grid(16),
            OdeOptions::new(1e-11),
        )
        .unwrap();
        for (t, y) in sol.grid.iter().zip(&sol.values) {
            assert!((y[0] - (w * t).sin() / w).abs() < 1e-9);
        }
        assert!(sol.steps > 16);
    }

    #[test]
    fn fixed_step_is_fifth_order() {
        let w = 5.0;
        let err = |n: usize| {
            let sol = integrate(
                oscillator(w),
                DVector::from_column_slice(&[0.0, 1.0]),
                &uniform_grid(n),
                OdeOptions::new(f64::INFINITY),
            )
            .unwrap();
            (sol.values[n][0] - w.sin() / w).abs()
        };
        let ratio = err(40) / err(80);
        assert!(ratio > 2f64.powf(4.5), "ratio {ratio}");
    }

    #[test]
    fn blowup_is_reported() {
        let res = integrate(
            |_, y: &DVector<f64>| Ok(DVector::from_column_slice(&[y[0] * y[0] * 1e6])),
            DVector::from_column_slice(&[1.0]),
            &uniform_grid(4),
            OdeOptions { tol: 1e-8, max_substeps: 2000 },
        );
        assert!(matches!(res, Err(Error::IntegrationFailure { .. })));
    }
}
