use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum OperatorKind {
    T1,
    T2,
    T3,
    /// Band-limited frame iteration on the real line.
    Bandlimited,
    /// Caller supplied operator.
    Custom,
}

/// Diagnostics of an iterative inversion.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ReconstructionReport {
    pub operator: OperatorKind,
    pub eps: Option<f64>,
    pub p: Option<f64>,
    pub iterations: usize,
    /// Relative increment norms, one per iteration.
    pub residuals: Vec<f64>,
    pub fitted_rate: Option<f64>,
    pub final_error: Option<f64>,
    pub converged: bool,
}

impl ReconstructionReport {
    pub fn new(operator: OperatorKind) -> Self {
        Self {
            operator,
            eps: None,
            p: None,
            iterations: 0,
            residuals: Vec::new(),
            fitted_rate: None,
            final_error: None,
            converged: false,
        }
    }
}

/// Least-squares slope of log(r_k) against k, returned as a geometric rate.
///
/// Entries that are zero or not finite are skipped. Returns None with fewer
/// than two usable points.
pub fn fit_geometric_rate(residuals: &[f64]) -> Option<f64> {
    let pts: Vec<(f64, f64)> = residuals
        .iter()
        .enumerate()
        .filter(|(_, r)| r.is_finite() && **r > 0.0)
        .map(|(k, r)| (k as f64, r.ln()))
        .collect();
    if pts.len() < 2 {
        return None;
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum();
    if sxx == 0.0 {
        return None;
    }
    Some((sxy / sxx).exp())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rate_of_exact_geometric_sequence() {
        let r: Vec<f64> = (0..10).map(|k| 3.0 * 0.4f64.powi(k)).collect();
        let q = fit_geometric_rate(&r).unwrap();
        assert!((q - 0.4).abs() < 1e-12);
    }

    #[test]
    fn rate_needs_two_points() {
        assert!(fit_geometric_rate(&[1.0]).is_none());
        assert!(fit_geometric_rate(&[1.0, 0.0]).is_none());
    }
}
