//! Green function of the beam operator `∂ₜ² + ∂ₓ⁴` in one dimension.
//!
//! `g₂(r, z) = √r G(z/√r)` with `G(0) = 1/√(2π)` and
//! `2G'(x) = F_s(x/√(2π)) − F_c(x/√(2π))`. The profile `G` is tabulated once on
//! a symmetric window together with the cumulative distribution of `|G|`, which
//! drives inverse-CDF sampling of the increment law `|G| / ‖G‖₁`.

use std::f64::consts::PI;
use std::sync::{Arc, OnceLock};

use crate::error::{Error, Result};
use crate::quadrature::{integrate, Tolerance};

pub const DEFAULT_WINDOW: f64 = 10.0;
pub const DEFAULT_RESOLUTION: usize = 100_000;

const FRESNEL_TOL: Tolerance = Tolerance {
    abs: 1e-13,
    rel: 1e-12,
    max_intervals: 4000,
};

/// Fresnel integrals `(C(x), S(x)) = (∫₀ˣ cos(πt²/2) dt, ∫₀ˣ sin(πt²/2) dt)`.
pub fn fresnel(x: f64) -> Result<(f64, f64)> {
    fresnel_between(0.0, x)
}

fn fresnel_between(a: f64, b: f64) -> Result<(f64, f64)> {
    let (c, _) = integrate(|t| (0.5 * PI * t * t).cos(), a, b, FRESNEL_TOL)?;
    let (s, _) = integrate(|t| (0.5 * PI * t * t).sin(), a, b, FRESNEL_TOL)?;
    Ok((c, s))
}

#[derive(Debug, Clone)]
pub struct BeamTable {
    window: f64,
    step: f64,
    /// `G` at the knots `−window + k·step`.
    values: Vec<f64>,
    /// Normalised cumulative distribution of `|G|` at the knots; ends at 1.
    cdf: Vec<f64>,
    l1_norm: f64,
}

impl BeamTable {
    /// Tabulates `G` on `[−window, window]` with `resolution` panels.
    ///
    /// `G'` is integrated outward from `G(0)` with Simpson's rule; the Fresnel
    /// integrals it needs are accumulated panel by panel with adaptive
    /// Gauss-Kronrod quadrature.
    pub fn build(window: f64, resolution: usize) -> Result<Self> {
        if !(window > 0.0 && window.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "beam window must be positive and finite, got {window}"
            )));
        }
        if resolution < 1000 {
            return Err(Error::InvalidArgument(format!(
                "beam table resolution must be at least 1000, got {resolution}"
            )));
        }
        let half = resolution.div_ceil(2);
        let step = window / half as f64;
        let scale = 1.0 / (2.0 * PI).sqrt();

        let g_prime = |c: f64, s: f64| 0.5 * (s - c);

        // Right half, x_k = k·step. G is even, so the left half is a mirror.
        let mut right = Vec::with_capacity(half + 1);
        right.push(scale);
        let (mut c, mut s) = (0.0, 0.0);
        let mut gp_left = 0.0;
        for k in 0..half {
            let y0 = k as f64 * step * scale;
            let ym = (k as f64 + 0.5) * step * scale;
            let y1 = (k + 1) as f64 * step * scale;
            let (dcm, dsm) = fresnel_between(y0, ym).map_err(|e| diagnose(e, k))?;
            let (dc1, ds1) = fresnel_between(ym, y1).map_err(|e| diagnose(e, k))?;
            let gp_mid = g_prime(c + dcm, s + dsm);
            c += dcm + dc1;
            s += dsm + ds1;
            let gp_right = g_prime(c, s);
            let g = right[k] + step / 6.0 * (gp_left + 4.0 * gp_mid + gp_right);
            if !g.is_finite() {
                return Err(Error::Numeric(format!("beam profile diverged at knot {k}")));
            }
            right.push(g);
            gp_left = gp_right;
        }

        let mut values: Vec<f64> = Vec::with_capacity(2 * half + 1);
        values.extend(right.iter().rev());
        values.extend(right.iter().skip(1));

        let mut cdf = Vec::with_capacity(values.len());
        cdf.push(0.0);
        let mut acc = 0.0;
        for pair in values.windows(2) {
            acc += 0.5 * step * (pair[0].abs() + pair[1].abs());
            cdf.push(acc);
        }
        let l1_norm = acc;
        for v in &mut cdf {
            *v /= l1_norm;
        }
        *cdf.last_mut().expect("table has knots") = 1.0;

        Ok(Self {
            window,
            step,
            values,
            cdf,
            l1_norm,
        })
    }

    /// Process-wide table with the default window and resolution, built on first use.
    pub fn shared() -> Result<Arc<BeamTable>> {
        static TABLE: OnceLock<Result<Arc<BeamTable>>> = OnceLock::new();
        TABLE
            .get_or_init(|| BeamTable::build(DEFAULT_WINDOW, DEFAULT_RESOLUTION).map(Arc::new))
            .clone()
    }

    pub fn window(&self) -> f64 {
        self.window
    }

    /// `‖G‖₁` over the window, consistent with the sampling distribution.
    pub fn l1_norm(&self) -> f64 {
        self.l1_norm
    }

    pub fn knot(&self, k: usize) -> f64 {
        -self.window + k as f64 * self.step
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn cdf(&self) -> &[f64] {
        &self.cdf
    }

    /// Linear interpolation of `G`; zero outside the window.
    pub fn value(&self, x: f64) -> f64 {
        if x.abs() > self.window {
            return 0.0;
        }
        let pos = (x + self.window) / self.step;
        let k = (pos.floor() as usize).min(self.values.len() - 2);
        let frac = pos - k as f64;
        self.values[k] * (1.0 - frac) + self.values[k + 1] * frac
    }

    /// Inverse CDF of `|G| / ‖G‖₁`, linear between knots.
    pub fn quantile(&self, u: f64) -> f64 {
        let k = self
            .cdf
            .partition_point(|&c| c <= u)
            .saturating_sub(1)
            .min(self.cdf.len() - 2);
        let lo = self.cdf[k];
        let width = self.cdf[k + 1] - lo;
        let frac = if width > 0.0 { (u - lo) / width } else { 0.0 };
        self.knot(k) + frac.clamp(0.0, 1.0) * self.step
    }
}

fn diagnose(err: Error, knot: usize) -> Error {
    match err {
        Error::Numeric(msg) => Error::Numeric(format!("beam table knot {knot}: {msg}")),
        other => other,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small() -> BeamTable {
        BeamTable::build(DEFAULT_WINDOW, 20_000).unwrap()
    }

    #[test]
    fn fresnel_limits() {
        let (c, s) = fresnel(0.0).unwrap();
        assert_eq!((c, s), (0.0, 0.0));
        // C(1), S(1) reference values (Abramowitz & Stegun table 7.7).
        let (c, s) = fresnel(1.0).unwrap();
        assert!((c - 0.779_893_400_376_822_8).abs() < 1e-12);
        assert!((s - 0.438_259_147_390_354_8).abs() < 1e-12);
        // Odd symmetry.
        let (cn, sn) = fresnel(-1.0).unwrap();
        assert!((cn + c).abs() < 1e-15 && (sn + s).abs() < 1e-15);
    }

    #[test]
    fn centre_value_and_flat_derivative() {
        let t = small();
        let mid = t.values().len() / 2;
        assert!((t.values()[mid] - 1.0 / (2.0 * PI).sqrt()).abs() < 1e-15);
        // G'(0) = 0: neighbours agree to second order.
        assert!((t.values()[mid + 1] - t.values()[mid - 1]).abs() < 1e-14);
    }

    #[test]
    fn cdf_monotone_and_normalised() {
        let t = small();
        assert!(t.cdf().windows(2).all(|w| w[1] >= w[0]));
        assert_eq!(*t.cdf().last().unwrap(), 1.0);
        assert_eq!(t.cdf()[0], 0.0);
    }

    #[test]
    fn quantile_inverts_cdf() {
        let t = small();
        for k in [1usize, 500, 10_000, 19_999] {
            let x = t.quantile(t.cdf()[k]);
            assert!((x - t.knot(k)).abs() < 1e-9 * t.window(), "{k}: {x} vs {}", t.knot(k));
        }
        assert_eq!(t.quantile(0.0), -t.window());
    }

    #[test]
    fn rejects_bad_parameters() {
        assert!(matches!(BeamTable::build(0.0, 10_000), Err(Error::InvalidArgument(_))));
        assert!(matches!(BeamTable::build(10.0, 999), Err(Error::InvalidArgument(_))));
    }
}
