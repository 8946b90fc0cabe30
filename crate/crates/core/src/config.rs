use serde::{Deserialize, Serialize};

/// Numerical tolerances shared by every stage. Every report echoes the set it used.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Tolerances {
    /// Local error target of the Runge-Kutta integrator.
    pub ode_tol: f64,
    /// Number of master steps of the integrator on [0, 1].
    pub grid_size: usize,
    /// Relative singular-value threshold for numerical rank.
    pub tol_rank: f64,
    /// Relative eigenvalue threshold for inertia.
    pub tol_eig: f64,
    /// Target width of focal root brackets.
    pub refine_tol: f64,
    /// Number of sample points used to scan for focal instants.
    pub scan_points: usize,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            ode_tol: 1e-10,
            grid_size: 2048,
            tol_rank: 1e-7,
            tol_eig: 1e-9,
            refine_tol: 1e-10,
            scan_points: 4096,
        }
    }
}

impl Tolerances {
    pub fn validate(&self) -> crate::Result<()> {
        let positive = [self.ode_tol, self.tol_rank, self.tol_eig, self.refine_tol];
        if positive.iter().any(|v| !(*v > 0.0)) {
            return Err(crate::Error::InvalidInput(
                "tolerances must be positive".into(),
            ));
        }
        if self.grid_size < 2 || self.scan_points < 8 {
            return Err(crate::Error::InvalidInput(
                "grid_size must be >= 2 and scan_points >= 8".into(),
            ));
        }
        Ok(())
    }
}

/// Default mesh schedule for the constrained index.
pub const DEFAULT_MESH_SCHEDULE: [usize; 5] = [32, 64, 128, 256, 512];
