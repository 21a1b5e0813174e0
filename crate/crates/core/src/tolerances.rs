use serde::{Deserialize, Serialize};

/// Numeric thresholds and sampling parameters used throughout the pipeline.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Tolerances {
    /// Relative singular-value cutoff for the rank of N.
    pub rank_tol: f64,
    /// Zero test: |v| < zero_tol * (1 + local magnitude).
    pub zero_tol: f64,
    /// Frobenius and Darboux compatibility residual bound.
    pub compat_tol: f64,
    /// Relative agreement of two integration orders.
    pub path_tol: f64,
    /// Algebraic relations and exactly-preserved quantities on the grid.
    pub integ_tol: f64,
    /// Curl residual of the reconstructed flux Jacobian.
    pub curl_tol: f64,
    /// Torsion and curvature identities.
    pub flat_tol: f64,
    /// Chart normalization and inverse checks.
    pub chart_tol: f64,
    /// Number of sample points for "identically zero" decisions.
    pub samples: usize,
    pub seed: u64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            rank_tol: 1e-8,
            zero_tol: 1e-9,
            compat_tol: 1e-6,
            path_tol: 1e-5,
            integ_tol: 1e-8,
            curl_tol: 1e-3,
            flat_tol: 1e-7,
            chart_tol: 1e-8,
            samples: 50,
            seed: 20_240_917,
        }
    }
}

impl Tolerances {
    pub fn is_zero(&self, v: f64, magnitude: f64) -> bool {
        v.abs() < self.zero_tol * (1.0 + magnitude.abs())
    }

    /// Sets a field by name, as used by `--tol key=val`.
    pub fn set(&mut self, key: &str, value: &str) -> Result<(), String> {
        let parse = |v: &str| v.parse::<f64>().map_err(|e| format!("{key}: {e}"));
        match key {
            "rank_tol" => self.rank_tol = parse(value)?,
            "zero_tol" => self.zero_tol = parse(value)?,
            "compat_tol" => self.compat_tol = parse(value)?,
            "path_tol" => self.path_tol = parse(value)?,
            "integ_tol" => self.integ_tol = parse(value)?,
            "curl_tol" => self.curl_tol = parse(value)?,
            "flat_tol" => self.flat_tol = parse(value)?,
            "chart_tol" => self.chart_tol = parse(value)?,
            "samples" => self.samples = value.parse().map_err(|e| format!("{key}: {e}"))?,
            "seed" => self.seed = value.parse().map_err(|e| format!("{key}: {e}"))?,
            _ => return Err(format!("unknown tolerance `{key}`")),
        }
        Ok(())
    }
}
