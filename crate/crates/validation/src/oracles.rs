use std::f64::consts::PI;

use branchpde::Complex64;

/// Composite Simpson rule with `n` (even) panels.
pub fn simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, n: usize) -> f64 {
    assert!(n % 2 == 0);
    let h = (b - a) / n as f64;
    let mut sum = f(a) + f(b);
    for k in 1..n {
        sum += f(a + k as f64 * h) * if k % 2 == 1 { 4.0 } else { 2.0 };
    }
    sum * h / 3.0
}

pub fn simpson_complex(f: impl Fn(f64) -> Complex64, a: f64, b: f64, n: usize) -> Complex64 {
    let re = simpson(|x| f(x).re, a, b, n);
    let im = simpson(|x| f(x).im, a, b, n);
    Complex64::new(re, im)
}

/// Beam profile `G(x) = (x/2)(S(y) − C(y)) + (cos(x²/4) + sin(x²/4))/√(2π)`, `y = x/√(2π)`,
/// tabulated on `x = k·step`, `k = 0..=n`, with Fresnel integrals accumulated by
/// per-panel Simpson quadrature.
pub struct BeamOracle {
    pub step: f64,
    pub g: Vec<f64>,
}

impl BeamOracle {
    pub fn new(x_max: f64, n: usize) -> Self {
        let step = x_max / n as f64;
        let a = (2.0 * PI).sqrt();
        let (mut c, mut s) = (0.0, 0.0);
        let mut g = Vec::with_capacity(n + 1);
        for k in 0..=n {
            let x = k as f64 * step;
            if k > 0 {
                let (y0, y1) = ((x - step) / a, x / a);
                c += simpson(|t| (0.5 * PI * t * t).cos(), y0, y1, 4);
                s += simpson(|t| (0.5 * PI * t * t).sin(), y0, y1, 4);
            }
            let q = x * x / 4.0;
            g.push(0.5 * x * (s - c) + (q.cos() + q.sin()) / a);
        }
        Self { step, g }
    }

    pub fn x_max(&self) -> f64 {
        self.step * (self.g.len() - 1) as f64
    }

    /// `∫ |G|` over `[lo, hi] ⊂ [−x_max, x_max]`, trapezoid rule on the oracle knots.
    pub fn abs_mass(&self, lo: f64, hi: f64) -> f64 {
        let segment = |a: f64, b: f64| -> f64 {
            // 0 ≤ a ≤ b
            let ka = (a / self.step).round() as usize;
            let kb = (b / self.step).round() as usize;
            (ka..kb).map(|k| 0.5 * self.step * (self.g[k].abs() + self.g[k + 1].abs())).sum()
        };
        if lo >= 0.0 {
            segment(lo, hi)
        } else if hi <= 0.0 {
            segment(-hi, -lo)
        } else {
            segment(0.0, -lo) + segment(0.0, hi)
        }
    }
}

/// Large-`|x|` behaviour of the beam profile.
pub fn beam_asymptote(x: f64) -> f64 {
    let q = x * x / 4.0;
    (2.0 / PI).sqrt() * (q.cos() - q.sin()) / (x * x)
}

/// Free Schrödinger evolution `∂ₜu = (i/2)Δu` of `√d·sech(Σxᵢ)`, by Fourier quadrature in `s = Σxᵢ`.
pub fn free_sech_evolution(dim: usize, t: f64, s: f64) -> Complex64 {
    let d = dim as f64;
    let integrand = |k: f64| -> Complex64 {
        let amplitude = PI / (0.5 * PI * k).cosh();
        amplitude * Complex64::from_polar(1.0, k * s - 0.5 * d * k * k * t)
    };
    d.sqrt() / (2.0 * PI) * simpson_complex(integrand, -40.0, 40.0, 160_000)
}
