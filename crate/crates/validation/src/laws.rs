use std::f64::consts::PI;

use branchpde::estimator::path_rng;
use branchpde::kernels::{
    sample_beam, sample_heat, sample_schrodinger, sample_wave, sample_wave_gradient, BeamTable,
};

use crate::oracles::{beam_asymptote, simpson, BeamOracle};
use crate::{Check, Stat};

pub const DRAWS: usize = 1_000_000;
const K: f64 = 5.0;

pub fn heat() -> Vec<Check> {
    let mut rng = path_rng(101, 0);
    let mut means = [Stat::default(); 3];
    let mut cov = [[Stat::default(); 3]; 3];
    let mut unit_gamma = true;
    for _ in 0..DRAWS {
        let s = sample_heat(3, 0.5, &mut rng).unwrap();
        unit_gamma &= s.gamma.re == 1.0 && s.gamma.im == 0.0;
        for i in 0..3 {
            means[i].push(s.z[i].re);
            for j in 0..3 {
                cov[i][j].push(s.z[i].re * s.z[j].re);
            }
        }
    }
    let mut out = vec![Check::new("heat gamma", unit_gamma, "γ = 1 on every draw")];
    for i in 0..3 {
        out.push(Check::within(format!("heat d=3 E[z{i}]"), means[i].mean(), 0.0, means[i].se(), K));
        for j in 0..3 {
            let target = if i == j { 1.0 } else { 0.0 };
            let c = &cov[i][j];
            let mut check = Check::within(format!("heat d=3 cov[{i}][{j}]"), c.mean(), target, c.se(), K);
            check.passed &= (c.mean() - target).abs() < 0.01;
            out.push(check);
        }
    }
    let mut var = Stat::default();
    for _ in 0..DRAWS {
        let z = sample_heat(1, 2.0, &mut rng).unwrap().z[0].re;
        var.push(z * z);
    }
    out.push(Check::within("heat d=1 dt=2 E[z²]", var.mean(), 4.0, var.se(), K));
    out
}

pub fn wave() -> Vec<Check> {
    let mut rng = path_rng(102, 0);
    let mut out = Vec::new();

    let (mut m1, mut m2) = (Stat::default(), Stat::default());
    let mut ok = true;
    for _ in 0..DRAWS {
        let s = sample_wave(1, 1.0, &mut rng).unwrap();
        let z = s.z[0].re;
        ok &= s.gamma.re == 1.0 && z.abs() <= 1.0;
        m1.push(z);
        m2.push(z * z);
    }
    out.push(Check::new("wave d=1 support and gamma", ok, "|z| ≤ 1, γ = 1"));
    out.push(Check::within("wave d=1 E[z]", m1.mean(), 0.0, m1.se(), K));
    out.push(Check::within("wave d=1 E[z²]", m2.mean(), 1.0 / 3.0, m2.se(), K));

    // Radial law r/√(1 − r²) on [0, 1], with r = sin φ.
    let radial = simpson(|phi: f64| phi.sin().powi(3), 0.0, 0.5 * PI, 2000)
        / simpson(|phi: f64| phi.sin(), 0.0, 0.5 * PI, 2000);
    let (mut r2, mut x, mut y) = (Stat::default(), Stat::default(), Stat::default());
    let mut ok = true;
    for _ in 0..DRAWS {
        let s = sample_wave(2, 1.0, &mut rng).unwrap();
        let (a, b) = (s.z[0].re, s.z[1].re);
        ok &= s.gamma.re == 1.0 && a * a + b * b <= 1.0 + 1e-15;
        r2.push(a * a + b * b);
        x.push(a);
        y.push(b);
    }
    out.push(Check::new("wave d=2 support and gamma", ok, "|z| ≤ 1, γ = 1"));
    out.push(Check::within("wave d=2 E|z|²", r2.mean(), radial, r2.se(), K));
    out.push(Check::within("wave d=2 E[z1]", x.mean(), 0.0, x.se(), K));
    out.push(Check::within("wave d=2 E[z2]", y.mean(), 0.0, y.se(), K));

    let mut worst: f64 = 0.0;
    let mut ok = true;
    let mut sq = [Stat::default(); 3];
    for _ in 0..DRAWS {
        let s = sample_wave(3, 2.0, &mut rng).unwrap();
        ok &= s.gamma.re == 2.0;
        let norm = s.z.iter().map(|c| c.re * c.re).sum::<f64>().sqrt();
        worst = worst.max((norm - 2.0).abs());
        for k in 0..3 {
            sq[k].push(s.z[k].re * s.z[k].re);
        }
    }
    out.push(Check::new("wave d=3 gamma", ok, "γ = dt on every draw"));
    out.push(Check::new("wave d=3 |z| = dt", worst < 1e-14, format!("max ||z| − 2| = {worst:.1e}")));
    for k in 0..3 {
        out.push(Check::within(format!("wave d=3 E[z{k}²]"), sq[k].mean(), 4.0 / 3.0, sq[k].se(), K));
    }
    out
}

pub fn wave_gradient() -> Vec<Check> {
    let mut rng = path_rng(103, 0);
    let dt = 0.7;
    let mut sign = Stat::default();
    let mut ok = true;
    for _ in 0..DRAWS {
        let s = sample_wave_gradient(dt, &mut rng).unwrap();
        let z = s.z[0].re;
        let g = s.gamma.re;
        ok &= z.abs() == dt && g.abs() == 1.0 && z * g == dt && s.light_cone_sign == Some(g as i8);
        sign.push(g);
    }
    vec![
        Check::new("wave gradient edges", ok, "z = ±dt with weight ±1 (forward edge positive)"),
        Check::within("wave gradient P(+) = 1/2", sign.mean(), 0.0, sign.se(), K),
    ]
}

pub fn schrodinger() -> Vec<Check> {
    let mut out = Vec::new();
    for (conjugate, im_target) in [(false, 1.0), (true, -1.0)] {
        let mut rng = path_rng(104, 0);
        let (mut re1, mut im1, mut re2, mut im2, mut abs2) =
            (Stat::default(), Stat::default(), Stat::default(), Stat::default(), Stat::default());
        for _ in 0..DRAWS {
            let s = sample_schrodinger(2, 1.0, conjugate, &mut rng).unwrap();
            for z in &s.z {
                re1.push(z.re);
                im1.push(z.im);
                let sq = z * z;
                re2.push(sq.re);
                im2.push(sq.im);
                abs2.push(z.norm_sqr());
            }
        }
        let tag = if conjugate { "conjugate" } else { "direct" };
        out.push(Check::within(format!("schrodinger {tag} Re E[z]"), re1.mean(), 0.0, re1.se(), K));
        out.push(Check::within(format!("schrodinger {tag} Im E[z]"), im1.mean(), 0.0, im1.se(), K));
        out.push(Check::within(format!("schrodinger {tag} Re E[z²]"), re2.mean(), 0.0, re2.se().max(1e-300), K));
        out.push(Check::within(format!("schrodinger {tag} Im E[z²]"), im2.mean(), im_target, im2.se(), K));
        out.push(Check::within(format!("schrodinger {tag} E|z|²"), abs2.mean(), 1.0, abs2.se(), K));
    }
    let (mut a, mut b) = (path_rng(105, 0), path_rng(105, 0));
    let paired = (0..1000).all(|_| {
        let u = sample_schrodinger(3, 0.4, false, &mut a).unwrap();
        let v = sample_schrodinger(3, 0.4, true, &mut b).unwrap();
        u.z.iter().zip(&v.z).all(|(p, q)| p.conj() == *q)
    });
    out.push(Check::new("schrodinger conjugate pairing", paired, "same Gaussian ⇒ exact conjugates"));
    out
}

pub fn beam() -> Vec<Check> {
    let table = BeamTable::shared().unwrap();
    let window = table.window();
    let oracle = BeamOracle::new(window, 100_000);
    let mut out = Vec::new();

    let g0 = table.value(0.0);
    out.push(Check::new(
        "beam G(0)",
        (g0 - 1.0 / (2.0 * PI).sqrt()).abs() < 1e-14,
        format!("{g0:.15}"),
    ));

    let mut worst: f64 = 0.0;
    for k in (0..=100_000).step_by(37) {
        let x = k as f64 * oracle.step;
        worst = worst.max((table.value(x) - oracle.g[k]).abs()).max((table.value(-x) - oracle.g[k]).abs());
    }
    out.push(Check::new("beam table vs closed form", worst < 1e-8, format!("max |Δ| = {worst:.2e}")));

    let edge = table.value(window);
    let asym = beam_asymptote(window);
    let rel = (edge - asym).abs() / asym.abs();
    out.push(Check::new(
        "beam window-edge asymptote",
        rel < 0.05,
        format!("G({window}) = {edge:.6e}, asymptote {asym:.6e}, rel {rel:.3}"),
    ));

    let norm = oracle.abs_mass(-window, window);
    let rel = (table.l1_norm() - norm).abs() / norm;
    out.push(Check::new(
        "beam ‖G‖₁",
        rel < 1e-6,
        format!("table {:.9}, oracle {norm:.9}", table.l1_norm()),
    ));

    let cdf = table.cdf();
    let monotone = cdf.windows(2).all(|w| w[1] >= w[0]);
    let last = *cdf.last().unwrap();
    out.push(Check::new(
        "beam cdf",
        monotone && (last - 1.0).abs() < 1e-9,
        format!("monotone {monotone}, final {last}"),
    ));

    let bins = 100;
    let width = 2.0 * window / bins as f64;
    let mut counts = vec![0usize; bins];
    let mut rng = path_rng(106, 0);
    let mut ok = true;
    for _ in 0..DRAWS {
        let s = sample_beam(&table, 1.0, &mut rng).unwrap();
        let z = s.z[0].re;
        let sign = if table.value(z) >= 0.0 { 1.0 } else { -1.0 };
        ok &= s.gamma.re == sign * table.l1_norm();
        let b = (((z + window) / width) as usize).min(bins - 1);
        counts[b] += 1;
    }
    out.push(Check::new("beam gamma", ok, "γ = dt·sgn(G(z))·‖G‖₁"));
    let mut worst_sigma: f64 = 0.0;
    for (b, &count) in counts.iter().enumerate() {
        let lo = -window + b as f64 * width;
        let p = oracle.abs_mass(lo, lo + width) / norm;
        let expected = p * DRAWS as f64;
        let sd = (expected * (1.0 - p)).sqrt();
        worst_sigma = worst_sigma.max((count as f64 - expected).abs() / sd);
    }
    out.push(Check::new(
        "beam histogram (100 bins)",
        worst_sigma <= K,
        format!("largest bin deviation {worst_sigma:.2}σ"),
    ));
    out
}

pub fn all() -> Vec<Check> {
    [heat(), wave(), wave_gradient(), schrodinger(), beam()].concat()
}
