#![allow(dead_code)]

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

    pub fn se(&self) -> f64 {
        (self.m2 / (self.n - 1.0) / self.n).sqrt()
    }
}

/// Composite Simpson rule with `n` (even) panels.
pub fn simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, n: usize) -> f64 {
    let h = (b - a) / n as f64;
    let mut sum = f(a) + f(b);
    for k in 1..n {
        sum += f(a + k as f64 * h) * if k % 2 == 1 { 4.0 } else { 2.0 };
    }
    sum * h / 3.0
}

/// `∫_r^∞ ds / H(s)` through `s = r + v/(1 − v)`; requires `H` of degree at least 2.
pub fn tail_integral(terms: &[(u32, f64)], p: f64, r: f64) -> f64 {
    let h = |s: f64| -> f64 { terms.iter().map(|&(e, c)| c.powf(p) * s.powi(e as i32)).sum() };
    let degree = terms.iter().filter(|t| t.1 > 0.0).map(|t| t.0).max().unwrap_or(0);
    let top: f64 = terms.iter().filter(|t| t.0 == 2).map(|t| t.1.powf(p)).sum();
    let integrand = |v: f64| -> f64 {
        if v >= 1.0 {
            return if degree == 2 { 1.0 / top } else { 0.0 };
        }
        let w = 1.0 - v;
        1.0 / (h(r + v / w) * w * w)
    };
    simpson(integrand, 0.0, 1.0, 200_000)
}
