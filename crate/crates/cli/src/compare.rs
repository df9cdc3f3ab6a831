//! Point-by-point comparison of two experiments on the same grid.

use std::fs;
use std::path::Path;

use crate::engine::Row;
use crate::error::CliError;
use crate::output::format_float;

#[derive(Debug, Clone, PartialEq)]
pub struct PointComparison {
    pub t: f64,
    pub tau: Option<f64>,
    pub quantity: String,
    pub a: f64,
    pub b: f64,
    pub diff: f64,
    /// Combined standard error; `None` when both sides are exact.
    pub sigma: Option<f64>,
    pub pass: bool,
}

impl PointComparison {
    /// `|Δ|/σ` for estimates, `|Δ|` for exact pairs.
    pub fn score(&self) -> f64 {
        match self.sigma {
            Some(s) => self.diff.abs() / s,
            None => self.diff.abs(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct Comparison {
    pub points: Vec<PointComparison>,
    pub sigma_tol: f64,
    pub abs_tol: f64,
}

impl Comparison {
    pub fn passed(&self) -> bool {
        self.points.iter().all(|p| p.pass)
    }

    pub fn max_z(&self) -> Option<f64> {
        self.points
            .iter()
            .filter(|p| p.sigma.is_some())
            .map(PointComparison::score)
            .reduce(f64::max)
    }

    pub fn max_abs(&self) -> f64 {
        self.points.iter().map(|p| p.diff.abs()).fold(0.0, f64::max)
    }

    pub fn summary(&self) -> String {
        let failed = self.points.iter().filter(|p| !p.pass).count();
        let z = self
            .max_z()
            .map(|z| format!(", max |Δ|/σ = {z:.3} (tol {})", self.sigma_tol))
            .unwrap_or_default();
        format!(
            "{}: {} points, {failed} failed, max |Δ| = {:.3e} (abs tol {:e}){z}",
            if self.passed() { "PASS" } else { "FAIL" },
            self.points.len(),
            self.max_abs(),
            self.abs_tol,
        )
    }

    pub fn write_csv(&self, path: &Path) -> Result<(), CliError> {
        if let Some(dir) = path.parent() {
            fs::create_dir_all(dir)?;
        }
        let mut w = csv::Writer::from_path(path)?;
        w.write_record([
            "t", "tau", "quantity", "value_a", "value_b", "diff", "sigma", "score", "pass",
        ])?;
        for p in &self.points {
            w.write_record([
                format_float(p.t),
                p.tau.map(format_float).unwrap_or_default(),
                p.quantity.clone(),
                format_float(p.a),
                format_float(p.b),
                format_float(p.diff),
                p.sigma.map(format_float).unwrap_or_default(),
                format_float(p.score()),
                p.pass.to_string(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Pairs rows by position; grids and quantity labels must match exactly.
/// A point passes when `|Δ| ≤ sigma_tol·σ` if either side carries a
/// standard error, and `|Δ| ≤ abs_tol` otherwise.
pub fn compare_rows(
    a: &[Row],
    b: &[Row],
    sigma_tol: f64,
    abs_tol: f64,
) -> Result<Comparison, CliError> {
    if a.len() != b.len() {
        return Err(CliError::config(
            "grid",
            format!("grid mismatch: {} vs {} rows", a.len(), b.len()),
        ));
    }
    let mut points = Vec::with_capacity(a.len());
    for (ra, rb) in a.iter().zip(b) {
        let same_tau = match (ra.tau, rb.tau) {
            (Some(x), Some(y)) => x.to_bits() == y.to_bits(),
            (None, None) => true,
            _ => false,
        };
        if ra.t.to_bits() != rb.t.to_bits() || !same_tau || ra.quantity != rb.quantity {
            return Err(CliError::config(
                "grid",
                format!(
                    "grid mismatch at t = {}, tau = {:?}, quantity {} vs {}",
                    ra.t, ra.tau, ra.quantity, rb.quantity
                ),
            ));
        }
        let diff = ra.value - rb.value;
        let sigma = match (ra.std_error, rb.std_error) {
            (None, None) => None,
            (x, y) => Some(x.unwrap_or(0.0).hypot(y.unwrap_or(0.0))),
        };
        let pass = match sigma {
            Some(s) if s > 0.0 => diff.abs() <= sigma_tol * s,
            _ => diff.abs() <= abs_tol,
        };
        points.push(PointComparison {
            t: ra.t,
            tau: ra.tau,
            quantity: ra.quantity.clone(),
            a: ra.value,
            b: rb.value,
            diff,
            sigma,
            pass,
        });
    }
    Ok(Comparison {
        points,
        sigma_tol,
        abs_tol,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row(value: f64, se: Option<f64>) -> Row {
        Row {
            t: 1.0,
            tau: Some(0.5),
            value,
            std_error: se,
            n_samples: se.map(|_| 100),
            quantity: "cpf".into(),
        }
    }

    #[test]
    fn exact_pairs_use_absolute_tolerance() {
        let c = compare_rows(&[row(0.5, None)], &[row(0.5 + 1e-11, None)], 3.0, 1e-10).unwrap();
        assert!(c.passed());
        assert_eq!(c.max_z(), None);
        let c = compare_rows(&[row(0.5, None)], &[row(0.5 + 1e-9, None)], 3.0, 1e-10).unwrap();
        assert!(!c.passed());
    }

    #[test]
    fn estimates_use_combined_sigma() {
        // σ = hypot(0.03, 0.04) = 0.05
        let c = compare_rows(&[row(0.0, Some(0.03))], &[row(0.149, Some(0.04))], 3.0, 0.0).unwrap();
        assert!(c.passed());
        assert!((c.max_z().unwrap() - 2.98).abs() < 1e-12);
        let c = compare_rows(&[row(0.0, Some(0.03))], &[row(0.151, Some(0.04))], 3.0, 0.0).unwrap();
        assert!(!c.passed());
        // One-sided error against an exact reference.
        let c = compare_rows(&[row(0.1, Some(0.05))], &[row(0.0, None)], 3.0, 0.0).unwrap();
        assert!((c.points[0].score() - 2.0).abs() < 1e-12);
    }

    #[test]
    fn mismatched_grids_rejected() {
        let mut other = row(0.5, None);
        other.tau = Some(0.6);
        assert!(matches!(
            compare_rows(&[row(0.5, None)], &[other], 3.0, 1e-10),
            Err(CliError::Config { .. })
        ));
        assert!(compare_rows(&[row(0.5, None)], &[], 3.0, 1e-10).is_err());
    }
}
