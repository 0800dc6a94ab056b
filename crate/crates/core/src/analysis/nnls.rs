//! Two-weight non-negative least squares for the disk-I/O baseline.

use serde::{Deserialize, Serialize};

use super::disk::DiskCostUnits;
use crate::error::{Error, Result};

const MAX_SWEEPS: usize = 10_000_000;
const OBJECTIVE_TOL: f64 = 1e-10;
const STEP_TOL: f64 = 1e-13;

/// `time ~ c_s * n_s + c_r * n_r` with both weights non-negative.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FittedDiskModel {
    pub c_s: f64,
    pub c_r: f64,
    /// Sum of squared residuals at the optimum.
    pub residual: f64,
}

impl FittedDiskModel {
    pub fn predict(&self, units: &DiskCostUnits) -> f64 {
        self.c_s * units.n_s as f64 + self.c_r * units.n_r as f64
    }

    pub fn objective(units: &[DiskCostUnits], observed: &[f64], c_s: f64, c_r: f64) -> f64 {
        units
            .iter()
            .zip(observed)
            .map(|(u, t)| {
                let e = c_s * u.n_s as f64 + c_r * u.n_r as f64 - t;
                e * e
            })
            .sum()
    }
}

/// Projected coordinate descent on the normal equations.
pub fn fit_nonnegative(units: &[DiskCostUnits], observed: &[f64]) -> Result<FittedDiskModel> {
    if units.len() != observed.len() {
        return Err(Error::LengthMismatch { what: "observations", expected: units.len(), actual: observed.len() });
    }
    if units.len() < 2 {
        return Err(Error::invalid("need at least two observations to fit"));
    }
    let (mut ss, mut rr, mut sr, mut st, mut rt, mut tt) = (0.0, 0.0, 0.0, 0.0, 0.0, 0.0);
    for (u, &t) in units.iter().zip(observed) {
        let (s, r) = (u.n_s as f64, u.n_r as f64);
        ss += s * s;
        rr += r * r;
        sr += s * r;
        st += s * t;
        rt += r * t;
        tt += t * t;
    }
    if ss == 0.0 && rr == 0.0 {
        return Err(Error::invalid("all cost unit columns are zero"));
    }
    let objective = |cs: f64, cr: f64| cs * cs * ss + cr * cr * rr + 2.0 * cs * cr * sr - 2.0 * (cs * st + cr * rt) + tt;

    let (mut cs, mut cr) = (0.0f64, 0.0f64);
    let mut prev = objective(cs, cr);
    for _ in 0..MAX_SWEEPS {
        let (old_s, old_r) = (cs, cr);
        if ss > 0.0 {
            cs = ((st - sr * cr) / ss).max(0.0);
        }
        if rr > 0.0 {
            cr = ((rt - sr * cs) / rr).max(0.0);
        }
        let current = objective(cs, cr);
        let rel_obj = (prev - current).abs() / prev.abs().max(f64::MIN_POSITIVE);
        let step = (cs - old_s).abs().max((cr - old_r).abs());
        let scale = cs.abs().max(cr.abs()).max(f64::MIN_POSITIVE);
        prev = current;
        // The objective alone stalls on noiseless, correlated columns, so
        // also require the step to have settled.
        let settled = rel_obj < OBJECTIVE_TOL && step <= 1e-9 * scale;
        if settled || step <= STEP_TOL * scale || current <= 0.0 {
            break;
        }
    }
    Ok(FittedDiskModel { c_s: cs, c_r: cr, residual: FittedDiskModel::objective(units, observed, cs, cr) })
}
