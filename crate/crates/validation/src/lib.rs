//! Reference oracles and statistical checks used by the acceptance suite.

pub mod laws;
pub mod oracles;

use std::fmt;

/// Outcome of one acceptance sub-check.
#[derive(Debug, Clone)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

impl Check {
    pub fn new(name: impl Into<String>, passed: bool, detail: impl Into<String>) -> Self {
        Self { name: name.into(), passed, detail: detail.into() }
    }

    /// `|value − target| ≤ k·se`.
    pub fn within(name: impl Into<String>, value: f64, target: f64, se: f64, k: f64) -> Self {
        let dev = (value - target).abs();
        let passed = dev <= k * se;
        let detail = format!("{value:.6} vs {target:.6} ({:.2}σ, se {se:.2e})", dev / se);
        Self::new(name, passed, detail)
    }
}

impl fmt::Display for Check {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let tag = if self.passed { "ok  " } else { "FAIL" };
        write!(f, "{tag} {}: {}", self.name, self.detail)
    }
}

/// Running mean and variance.
#[derive(Debug, Clone, Copy, Default)]
pub struct Stat {
    n: f64,
    mean: f64,
    m2: f64,
}

impl Stat {
    pub fn push(&mut self, x: f64) {
        self.n += 1.0;
        let d = x - self.mean;
        self.mean += d / self.n;
        self.m2 += d * (x - self.mean);
    }

    pub fn mean(&self) -> f64 {
        self.mean
    }

    pub fn variance(&self) -> f64 {
        self.m2 / (self.n - 1.0)
    }

    pub fn se(&self) -> f64 {
        (self.variance() / self.n).sqrt()
    }
}
