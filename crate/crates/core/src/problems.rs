//! Built-in Cauchy problems with closed-form solutions.
//!
//! The nonlinear wave and beam problems are solved for `U = u − f₁`, which has
//! zero initial value, so only the level-2 Green function is ever sampled.

use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;

use crate::branching::BranchingLaw;
use crate::error::{Error, Result};
use crate::functional::{BoundaryData, Coefficient, NonlinearitySpec, Payoff, Term};
use crate::kernels::{BeamTable, KernelFamily, ParticleRole};

/// Closed-form solution `(t, x) ↦ u(t, x)`.
pub type Exact = Arc<dyn Fn(f64, &[Complex64]) -> Complex64 + Send + Sync>;

pub const PROBLEM_NAMES: [&str; 7] = [
    "klein-gordon",
    "yang-mills",
    "beam",
    "gross-pitaevskii",
    "linear-heat",
    "linear-wave",
    "linear-schrodinger",
];

pub const KG_PROBS: [f64; 4] = [0.25; 4];
pub const YM_PROBS: [f64; 6] = [1.0 / 6.0; 6];
pub const BEAM_PROBS: [f64; 3] = [1.0 / 3.0; 3];

/// Sup of `|tanh² x + tanh''''(x) + h(s, y)|` over all `x, y`.
pub const BEAM_SOURCE_BOUND: f64 = 7.54;

#[derive(Clone)]
pub struct ProblemSpec {
    pub name: String,
    pub dim: usize,
    pub kernel: KernelFamily,
    pub nl: NonlinearitySpec,
    pub bd: BoundaryData,
    pub p_levels: Vec<f64>,
    /// `f₁` when the problem is posed for `U = u − f₁`.
    pub shift: Option<Payoff>,
    pub exact: Option<Exact>,
}

impl ProblemSpec {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        name: impl Into<String>,
        kernel: KernelFamily,
        nl: NonlinearitySpec,
        bd: BoundaryData,
        p_levels: Vec<f64>,
        shift: Option<Payoff>,
        exact: Option<Exact>,
    ) -> Result<Self> {
        let n = kernel.n_levels();
        if bd.n_levels() != n || p_levels.len() != n {
            return Err(Error::InvalidArgument(format!(
                "kernel has {n} levels, boundary data {} and level law {}",
                bd.n_levels(),
                p_levels.len()
            )));
        }
        for (level, &p) in (1..).zip(&p_levels) {
            if p > 0.0 && bd.payoff(level).is_none() {
                return Err(Error::InvalidArgument(format!(
                    "level {level} has probability {p} but no boundary datum"
                )));
            }
        }
        let spec = Self {
            name: name.into(),
            dim: kernel.dim(),
            kernel,
            nl,
            bd,
            p_levels,
            shift,
            exact,
        };
        spec.law(1.0)?;
        Ok(spec)
    }

    pub fn law(&self, beta: f64) -> Result<BranchingLaw> {
        self.nl.branching_law(beta, self.p_levels.clone())
    }

    pub fn shift_at(&self, x: &[Complex64]) -> Complex64 {
        self.shift.as_ref().map_or(Complex64::ZERO, |f| f(x))
    }

    pub fn exact_at(&self, t: f64, x: &[Complex64]) -> Option<Complex64> {
        self.exact.as_ref().map(|u| u(t, x))
    }

    /// Same problem with every boundary datum multiplied by `lambda`.
    pub fn with_scaled_data(&self, lambda: f64) -> Self {
        Self {
            bd: self.bd.scaled(lambda.into()),
            exact: None,
            ..self.clone()
        }
    }
}

impl fmt::Debug for ProblemSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ProblemSpec")
            .field("name", &self.name)
            .field("dim", &self.dim)
            .field("kernel", &self.kernel.kind())
            .field("nl", &self.nl)
            .field("p_levels", &self.p_levels)
            .field("shifted", &self.shift.is_some())
            .field("exact", &self.exact.is_some())
            .finish()
    }
}

fn re(v: f64) -> Complex64 {
    Complex64::new(v, 0.0)
}

fn coordinate_sum(x: &[Complex64]) -> Complex64 {
    x.iter().sum()
}

fn real_sum(x: &[Complex64]) -> f64 {
    x.iter().map(|c| c.re).sum()
}

fn coefficient(f: impl Fn(f64, &[Complex64]) -> f64 + Send + Sync + 'static) -> Coefficient {
    Arc::new(move |s, x| re(f(s, x)))
}

fn payoff(f: impl Fn(&[Complex64]) -> f64 + Send + Sync + 'static) -> Payoff {
    Arc::new(move |x| re(f(x)))
}

fn check_probs(probs: &[f64]) -> Result<()> {
    if probs.iter().any(|&q| !(q > 0.0 && q.is_finite())) {
        return Err(Error::InvalidArgument(format!(
            "importance probabilities must be positive, got {probs:?}"
        )));
    }
    Ok(())
}

fn require_dim_one(name: &str, dim: usize) -> Result<()> {
    if dim != 1 {
        return Err(Error::InvalidArgument(format!("{name} is one-dimensional, got dim={dim}")));
    }
    Ok(())
}

pub mod kg {
    //! `f₁(s) = −12/(9 + 2s²)` and its derivatives, `s = Σ xᵢ`.

    pub fn f1(s: f64) -> f64 {
        -12.0 / (9.0 + 2.0 * s * s)
    }

    pub fn f1_second(s: f64) -> f64 {
        let q = 9.0 + 2.0 * s * s;
        48.0 * (9.0 - 6.0 * s * s) / (q * q * q)
    }

    pub fn f2(dim: usize, s: f64) -> f64 {
        let q = 2.0 * s * s + 9.0;
        -48.0 * ((dim + 1) as f64).sqrt() * s / (q * q)
    }

    pub fn exact(dim: usize, t: f64, s: f64) -> f64 {
        f1(((dim + 1) as f64).sqrt() * t - s)
    }

    pub fn f2_bound(dim: usize) -> f64 {
        (1.5 * (dim + 1) as f64).sqrt() / 3.0
    }

    /// `f₁³ + f₁² − Δf₁`, `3f₁² + 2f₁`, `3f₁ + 1`, `1`.
    pub fn shifted_coefficients(dim: usize, s: f64) -> [f64; 4] {
        let f = f1(s);
        [
            f * f * f + f * f - dim as f64 * f1_second(s),
            3.0 * f * f + 2.0 * f,
            3.0 * f + 1.0,
            1.0,
        ]
    }

    pub fn coefficient_bounds(dim: usize) -> [f64; 4] {
        [16.0 * (1 + dim) as f64 / 27.0, 8.0 / 3.0, 3.0, 1.0]
    }
}

/// `(∂ₜₜ − Δ)u + u³ + u² = 0` in dimension 1 to 3, exact solution `f₁(√(d+1) t − Σxᵢ)`.
pub fn klein_gordon(dim: usize) -> Result<ProblemSpec> {
    klein_gordon_with_probs(dim, KG_PROBS)
}

/// Klein-Gordon with importance probabilities for the events with 0, 1, 2, 3 children.
pub fn klein_gordon_with_probs(dim: usize, probs: [f64; 4]) -> Result<ProblemSpec> {
    if !(1..=3).contains(&dim) {
        return Err(Error::InvalidArgument(format!("klein-gordon needs dim in 1..=3, got {dim}")));
    }
    check_probs(&probs)?;
    let bounds = kg::coefficient_bounds(dim);
    let terms = (0..4)
        .map(|k| {
            let q = probs[k];
            let c = coefficient(move |_, x| -kg::shifted_coefficients(dim, real_sum(x))[k] / q);
            Term::new(q, vec![k as u32], c, bounds[k] / q)
        })
        .collect();
    let f2 = payoff(move |x| kg::f2(dim, real_sum(x)));
    ProblemSpec::new(
        "klein-gordon",
        KernelFamily::wave(dim)?,
        NonlinearitySpec::scalar(terms)?,
        BoundaryData::new(vec![None, Some(f2)], vec![0.0, kg::f2_bound(dim)])?,
        vec![0.0, 1.0],
        Some(payoff(|x| kg::f1(real_sum(x)))),
        Some(Arc::new(move |t, x| re(kg::exact(dim, t, real_sum(x))))),
    )
}

pub mod ym {
    //! `f₁ = 1/(x − 1)` and its derivatives.

    pub fn f1(x: f64) -> f64 {
        1.0 / (x - 1.0)
    }

    pub fn f2(x: f64) -> f64 {
        1.0 / ((1.0 - x) * (1.0 - x))
    }

    pub fn exact(t: f64, x: f64) -> f64 {
        -1.0 / (1.0 + t - x)
    }

    /// Events as `(children of type 0, children of type 1, coefficient)` with
    /// coefficients `f₁³ + f₁f₁' − f₁''`, `3f₁² + f₁'`, `f₁`, `3f₁`, `1`, `1`.
    pub fn shifted_coefficients(x: f64) -> [(u32, u32, f64); 6] {
        let w = f1(x);
        let (d1, d2) = (-w * w, 2.0 * w * w * w);
        [
            (0, 0, w * w * w + w * d1 - d2),
            (1, 0, 3.0 * w * w + d1),
            (0, 1, w),
            (2, 0, 3.0 * w),
            (1, 1, 1.0),
            (3, 0, 1.0),
        ]
    }

    /// Bounds of the coefficients for `x ∈ [2, 6]`, the region reachable from `x₀ ∈ [3, 5]` before `t = 1`.
    pub const COEFFICIENT_BOUNDS: [f64; 6] = [2.0, 2.0, 1.0, 3.0, 1.0, 1.0];
}

/// Scalar toy Yang-Mills `∂ₜₜu − ∂ₓₓu + u³ + u ∂ₓu = 0`, exact solution `−1/(1 + t − x)`.
pub fn yang_mills_toy() -> Result<ProblemSpec> {
    yang_mills_with_probs(YM_PROBS)
}

pub fn yang_mills_with_probs(probs: [f64; 6]) -> Result<ProblemSpec> {
    check_probs(&probs)?;
    let terms = (0..6)
        .map(|k| {
            let q = probs[k];
            let (a, b, _) = ym::shifted_coefficients(3.0)[k];
            let c = coefficient(move |_, x| -ym::shifted_coefficients(x[0].re)[k].2 / q);
            let term = Term::new(q, vec![a, b], c, ym::COEFFICIENT_BOUNDS[k] / q);
            if b > 0 {
                term.with_direction(1, coefficient(|_, _| 1.0))
            } else {
                term
            }
        })
        .collect();
    ProblemSpec::new(
        "yang-mills",
        KernelFamily::wave(1)?,
        NonlinearitySpec::new(vec![ParticleRole::Value, ParticleRole::Gradient], vec![terms])?,
        BoundaryData::new(vec![None, Some(payoff(|x| ym::f2(x[0].re)))], vec![0.0, 1.0])?,
        vec![0.0, 1.0],
        Some(payoff(|x| ym::f1(x[0].re))),
        Some(Arc::new(|t, x| re(ym::exact(t, x[0].re)))),
    )
}

pub mod beam {
    //! Closed forms for `u = tanh(x + t)`.

    /// Fourth derivative of `tanh` at a point where `tanh = th`.
    pub fn tanh_fourth(th: f64) -> f64 {
        8.0 * th * (1.0 - th * th) * (2.0 - 3.0 * th * th)
    }

    /// `h = −∂ₜ²u − ∂ₓ⁴u − u²` at PDE time `s`.
    pub fn source(s: f64, x: f64) -> f64 {
        let th = (x + s).tanh();
        2.0 * th * (1.0 - th * th) - tanh_fourth(th) - th * th
    }

    /// `f₁² + ∂ₓ⁴f₁ + h`, `2f₁`, `1`.
    pub fn shifted_coefficients(s: f64, x: f64) -> [f64; 3] {
        let f = x.tanh();
        [f * f + tanh_fourth(f) + source(s, x), 2.0 * f, 1.0]
    }
}

/// `∂ₜ²u + ∂ₓ⁴u + u² + h = 0` with `h` chosen so that `u = tanh(x + t)`.
pub fn nonlinear_beam(table: Option<Arc<BeamTable>>) -> Result<ProblemSpec> {
    let table = table.ok_or_else(|| Error::State("beam problem needs a beam density table".into()))?;
    let bounds = [BEAM_SOURCE_BOUND, 2.0, 1.0];
    let terms = (0..3)
        .map(|k| {
            let q = BEAM_PROBS[k];
            let c = coefficient(move |s, x| -beam::shifted_coefficients(s, x[0].re)[k] / q);
            Term::new(q, vec![k as u32], c, bounds[k] / q)
        })
        .collect();
    let f2 = payoff(|x| {
        let c = x[0].re.cosh();
        1.0 / (c * c)
    });
    ProblemSpec::new(
        "beam",
        KernelFamily::beam(Some(table)),
        NonlinearitySpec::scalar(terms)?,
        BoundaryData::new(vec![None, Some(f2)], vec![0.0, 1.0])?,
        vec![0.0, 1.0],
        Some(payoff(|x| x[0].re.tanh())),
        Some(Arc::new(|t, x| re((x[0].re + t).tanh()))),
    )
}

/// Below this `|cosh|` the Gross-Pitaevskii datum is treated as a pole hit.
pub const POLE_GUARD: f64 = 1e-12;

fn sech_datum(dim: usize) -> Payoff {
    let amp = (dim as f64).sqrt();
    Arc::new(move |x| {
        let c = coordinate_sum(x).cosh();
        if c.norm() < POLE_GUARD {
            Complex64::new(f64::NAN, f64::NAN)
        } else {
            amp / c
        }
    })
}

/// `i∂ₜu = −½Δu − |u|²u` with `u(0, x) = √d / cosh(Σxᵢ)`,
/// exact solution `e^{idt/2} √d / cosh(Σxᵢ)`.
pub fn gross_pitaevskii(dim: usize) -> Result<ProblemSpec> {
    let mut spec = gross_pitaevskii_with(dim, -1.0)?;
    let amp = (dim as f64).sqrt();
    spec.exact = Some(Arc::new(move |t, x| {
        Complex64::from_polar(1.0, 0.5 * dim as f64 * t) * amp / coordinate_sum(x).cosh()
    }));
    Ok(spec)
}

/// `i∂ₜu = −½Δu + h|u|²u` with the sech datum. For `h = 0` this is the free
/// Schrödinger equation and no branching occurs. No closed form is attached.
pub fn gross_pitaevskii_with(dim: usize, h: f64) -> Result<ProblemSpec> {
    if dim == 0 {
        return Err(Error::InvalidArgument("gross-pitaevskii needs dim >= 1".into()));
    }
    let nl = if h == 0.0 {
        NonlinearitySpec::linear(None, 0.0)
    } else {
        // ∂ₜu = (i/2)Δu − ih u²ū for type 0 and the conjugate equation for type 1.
        let c = Complex64::new(0.0, -h);
        NonlinearitySpec::new(
            vec![ParticleRole::Value, ParticleRole::Conjugate],
            vec![
                vec![Term::constant(1.0, vec![2, 1], c)],
                vec![Term::constant(1.0, vec![1, 2], c.conj())],
            ],
        )?
    };
    ProblemSpec::new(
        "gross-pitaevskii",
        KernelFamily::schrodinger(dim)?,
        nl,
        BoundaryData::new(vec![Some(sech_datum(dim))], vec![(dim as f64).sqrt()])?,
        vec![1.0],
        None,
        None,
    )
}

/// Heat equation `∂ₜu = Δu` with `u(0, x) = cos(Σxᵢ)`, exact `e^{−dt} cos(Σxᵢ)`.
pub fn linear_heat(dim: usize) -> Result<ProblemSpec> {
    ProblemSpec::new(
        "linear-heat",
        KernelFamily::heat(dim)?,
        NonlinearitySpec::linear(None, 0.0),
        BoundaryData::new(vec![Some(Arc::new(|x| coordinate_sum(x).cos()))], vec![1.0])?,
        vec![1.0],
        None,
        Some(Arc::new(move |t, x| (-(dim as f64) * t).exp() * coordinate_sum(x).cos())),
    )
}

/// Heat equation with constant data `c`.
pub fn constant_heat(dim: usize, c: f64) -> Result<ProblemSpec> {
    ProblemSpec::new(
        "constant-heat",
        KernelFamily::heat(dim)?,
        NonlinearitySpec::linear(None, 0.0),
        BoundaryData::new(vec![Some(payoff(move |_| c))], vec![c.abs()])?,
        vec![1.0],
        None,
        Some(Arc::new(move |_, _| re(c))),
    )
}

/// Wave equation in one dimension with `u(0) = 0`, `∂ₜu(0) = sin x`; exact `sin x sin t`.
pub fn linear_wave() -> Result<ProblemSpec> {
    ProblemSpec::new(
        "linear-wave",
        KernelFamily::wave(1)?,
        NonlinearitySpec::linear(None, 0.0),
        BoundaryData::new(vec![None, Some(Arc::new(|x| x[0].sin()))], vec![0.0, 1.0])?,
        vec![0.0, 1.0],
        None,
        Some(Arc::new(|t, x| x[0].sin() * t.sin())),
    )
}

/// Free Schrödinger equation `∂ₜu = (i/2)Δu` with a Gaussian datum,
/// exact `(1 + it)^{−d/2} exp(−|x|²/(2(1 + it)))`.
pub fn linear_schrodinger(dim: usize) -> Result<ProblemSpec> {
    let square = |x: &[Complex64]| -> Complex64 { x.iter().map(|c| c * c).sum() };
    ProblemSpec::new(
        "linear-schrodinger",
        KernelFamily::schrodinger(dim)?,
        NonlinearitySpec::linear(None, 0.0),
        BoundaryData::new(vec![Some(Arc::new(move |x| (-0.5 * square(x)).exp()))], vec![1.0])?,
        vec![1.0],
        None,
        Some(Arc::new(move |t, x| {
            let a = Complex64::new(1.0, t);
            a.powf(-0.5 * dim as f64) * (-square(x) / (2.0 * a)).exp()
        })),
    )
}

/// Registry lookup. One-dimensional problems reject any other `dim`.
pub fn by_name(name: &str, dim: usize) -> Result<ProblemSpec> {
    match name {
        "klein-gordon" => klein_gordon(dim),
        "yang-mills" => {
            require_dim_one(name, dim)?;
            yang_mills_toy()
        }
        "beam" => {
            require_dim_one(name, dim)?;
            nonlinear_beam(Some(BeamTable::shared()?))
        }
        "gross-pitaevskii" => gross_pitaevskii(dim),
        "linear-heat" => linear_heat(dim),
        "linear-wave" => {
            require_dim_one(name, dim)?;
            linear_wave()
        }
        "linear-schrodinger" => linear_schrodinger(dim),
        other => Err(Error::UnknownProblem(other.to_string())),
    }
}

/// Point with every coordinate equal to `x0`.
pub fn diagonal_point(dim: usize, x0: f64) -> Vec<Complex64> {
    vec![re(x0); dim]
}

#[cfg(test)]
mod tests {
    use super::*;

    fn d2(f: impl Fn(f64) -> f64, x: f64, h: f64) -> f64 {
        (-f(x + 2.0 * h) + 16.0 * f(x + h) - 30.0 * f(x) + 16.0 * f(x - h) - f(x - 2.0 * h)) / (12.0 * h * h)
    }

    fn d1(f: impl Fn(f64) -> f64, x: f64, h: f64) -> f64 {
        (-f(x + 2.0 * h) + 8.0 * f(x + h) - 8.0 * f(x - h) + f(x - 2.0 * h)) / (12.0 * h)
    }

    fn d4(f: impl Fn(f64) -> f64, x: f64, h: f64) -> f64 {
        const C: [f64; 9] = [
            7.0 / 240.0, -2.0 / 5.0, 169.0 / 60.0, -122.0 / 15.0, 91.0 / 8.0,
            -122.0 / 15.0, 169.0 / 60.0, -2.0 / 5.0, 7.0 / 240.0,
        ];
        C.iter().enumerate().map(|(i, c)| c * f(x + (i as f64 - 4.0) * h)).sum::<f64>() / h.powi(4)
    }

    /// Sum over terms of `q_j c_j(s, x) U^{ℓ₀} (∂ₓU)^{ℓ₁}` for a one-type or value/gradient problem.
    fn source(p: &ProblemSpec, s: f64, x: &[Complex64], u: f64, du: f64) -> f64 {
        p.nl
            .terms(0)
            .iter()
            .map(|t| {
                let grad = t.children.get(1).copied().unwrap_or(0) as i32;
                t.prob * (t.coefficient)(s, x).re * u.powi(t.children[0] as i32) * du.powi(grad)
            })
            .sum()
    }

    #[test]
    fn klein_gordon_shifted_residual() {
        for dim in 1..=3 {
            let p = klein_gordon(dim).unwrap();
            let exact = |t: f64, x: &[f64]| p.exact_at(t, &x.iter().map(|&v| re(v)).collect::<Vec<_>>()).unwrap().re;
            for t in [0.0, 0.3, 0.7, 1.0] {
                for x0 in [-1.0, 0.0, 0.4, 1.5] {
                    let x = vec![x0; dim];
                    let cx = diagonal_point(dim, x0);
                    let big_u = |t: f64, x: &[f64]| exact(t, x) - kg::f1(x.iter().sum());
                    let utt = d2(|s| big_u(s, &x), t, 1e-3);
                    let lap: f64 = (0..dim)
                        .map(|i| {
                            d2(
                                |v| {
                                    let mut y = x.clone();
                                    y[i] = v;
                                    big_u(t, &y)
                                },
                                x[i],
                                1e-3,
                            )
                        })
                        .sum();
                    let residual = utt - lap - source(&p, t, &cx, big_u(t, &x), 0.0);
                    assert!(residual.abs() < 1e-6, "d={dim} t={t} x0={x0}: {residual}");
                }
            }
        }
    }

    #[test]
    fn klein_gordon_initial_data() {
        for dim in 1..=3 {
            let p = klein_gordon(dim).unwrap();
            for x0 in [-2.0, 0.0, 0.3, 1.1] {
                let x = diagonal_point(dim, x0);
                assert!((p.exact_at(0.0, &x).unwrap() - p.shift_at(&x)).norm() < 1e-15);
                let ut = d1(|t| p.exact_at(t, &x).unwrap().re, 0.0, 1e-3);
                let f2 = p.bd.payoff(2).unwrap()(&x).re;
                assert!((ut - f2).abs() < 1e-9);
            }
        }
        let p = klein_gordon(1).unwrap();
        assert!((p.exact_at(1.0, &[re(0.0)]).unwrap().re + 12.0 / 13.0).abs() < 1e-15);
        assert!(klein_gordon(4).is_err());
    }

    #[test]
    fn yang_mills_shifted_residual() {
        let p = yang_mills_toy().unwrap();
        let big_u = |t: f64, x: f64| ym::exact(t, x) - ym::f1(x);
        for t in [0.0, 0.25, 0.6, 1.0] {
            for x in [2.5, 3.0, 4.0, 5.5] {
                let utt = d2(|s| big_u(s, x), t, 1e-3);
                let uxx = d2(|y| big_u(t, y), x, 1e-3);
                let ux = d1(|y| big_u(t, y), x, 1e-3);
                let residual = utt - uxx - source(&p, t, &[re(x)], big_u(t, x), ux);
                assert!(residual.abs() < 1e-6, "t={t} x={x}: {residual}");
            }
        }
        assert_eq!(p.exact_at(1.0, &[re(4.0)]).unwrap().re, 0.5);
    }

    #[test]
    fn yang_mills_event_table() {
        let p = yang_mills_toy().unwrap();
        let terms = p.nl.terms(0);
        let shapes: Vec<_> = terms.iter().map(|t| t.children.clone()).collect();
        assert_eq!(shapes, vec![vec![0, 0], vec![1, 0], vec![0, 1], vec![2, 0], vec![1, 1], vec![3, 0]]);
        // Two value children: −3 f₁ / p.
        let x = [re(3.5)];
        let c = (terms[3].coefficient)(0.0, &x).re;
        assert!((c - (-3.0 / (1.0 / 6.0)) * ym::f1(3.5)).abs() < 1e-13);
        assert!(by_name("yang-mills", 2).is_err());
    }

    #[test]
    fn beam_source_matches_finite_differences() {
        for t in [0.0, 0.2, 0.5, 0.9] {
            for x in [-2.0, -0.5, 0.0, 0.3, 1.7] {
                let u = |s: f64, y: f64| (y + s).tanh();
                let utt = d2(|s| u(s, x), t, 1e-3);
                let uxxxx = d4(|y| u(t, y), x, 0.02);
                let residual = beam::source(t, x) + utt + uxxxx + u(t, x).powi(2);
                assert!(residual.abs() < 1e-6, "t={t} x={x}: {residual}");
            }
        }
    }

    #[test]
    fn beam_shifted_residual() {
        let p = nonlinear_beam(Some(Arc::new(BeamTable::build(10.0, 2000).unwrap()))).unwrap();
        for t in [0.1, 0.5] {
            for x in [-0.5, 0.0, 0.5] {
                let big_u = |s: f64, y: f64| (y + s).tanh() - y.tanh();
                let utt = d2(|s| big_u(s, x), t, 1e-3);
                let uxxxx = d4(|y| big_u(t, y), x, 0.02);
                let residual = utt + uxxxx - source(&p, t, &[re(x)], big_u(t, x), 0.0);
                assert!(residual.abs() < 1e-6, "t={t} x={x}: {residual}");
            }
        }
        assert!((p.exact_at(0.5, &[re(0.0)]).unwrap().re - 0.5f64.tanh()).abs() < 1e-15);
        assert!(matches!(nonlinear_beam(None), Err(Error::State(_))));
    }

    #[test]
    fn gross_pitaevskii_solves_its_equation() {
        for dim in 1..=3 {
            let p = gross_pitaevskii(dim).unwrap();
            for (t, x0) in [(0.0, 0.2), (0.1, 0.5), (0.05, 1.2)] {
                let x = diagonal_point(dim, x0);
                let u = |s: f64, y: &[Complex64]| p.exact_at(s, y).unwrap();
                let h = 1e-3;
                let ut = (u(t + h, &x) * 8.0 - u(t - h, &x) * 8.0 - u(t + 2.0 * h, &x) + u(t - 2.0 * h, &x)) / (12.0 * h);
                let mut lap = Complex64::ZERO;
                for i in 0..dim {
                    let at = |v: f64| {
                        let mut y = x.clone();
                        y[i] = re(v);
                        u(t, &y)
                    };
                    let xi = x0;
                    lap += (-at(xi + 2.0 * h) + at(xi + h) * 16.0 - at(xi) * 30.0 + at(xi - h) * 16.0 - at(xi - 2.0 * h))
                        / (12.0 * h * h);
                }
                let v = u(t, &x);
                let term = &p.nl.terms(0)[0];
                let f = term.prob * (term.coefficient)(t, &x) * v * v * v.conj();
                let residual = ut - Complex64::I * 0.5 * lap - f;
                assert!(residual.norm() < 1e-6, "d={dim}: {residual}");
                // Modulus is conserved in time.
                assert!((v.norm() - u(0.0, &x).norm()).abs() < 1e-14);
            }
        }
        let x = diagonal_point(2, 0.3);
        let u0 = gross_pitaevskii(2).unwrap().exact_at(0.0, &x).unwrap();
        assert_eq!(u0.im, 0.0);
        assert!((u0.re - 2f64.sqrt() / 0.6f64.cosh()).abs() < 1e-15);
    }

    #[test]
    fn gross_pitaevskii_conjugate_type_and_linear_case() {
        let p = gross_pitaevskii(1).unwrap();
        let law = p.law(1.0).unwrap();
        assert_eq!(law.events(0)[0].children, vec![2, 1]);
        assert_eq!(law.events(1)[0].children, vec![1, 2]);
        let x = [re(0.0)];
        assert_eq!((p.nl.terms(0)[0].coefficient)(0.0, &x), Complex64::I);
        assert_eq!((p.nl.terms(1)[0].coefficient)(0.0, &x), -Complex64::I);
        let exact = p.exact_at(0.1, &x).unwrap();
        assert!((exact.re - 0.05f64.cos()).abs() < 1e-15);
        assert!(gross_pitaevskii_with(2, 0.0).unwrap().nl.is_linear());
        // Pole of 1/cosh at iπ/2.
        let f = p.bd.payoff(1).unwrap();
        assert!(f(&[Complex64::new(0.0, std::f64::consts::FRAC_PI_2)]).is_nan());
    }

    #[test]
    fn declared_bounds_dominate_samples() {
        for dim in 1..=3 {
            let p = klein_gordon(dim).unwrap();
            let bounds = kg::coefficient_bounds(dim);
            for k in 0..=60_000 {
                let s = -30.0 + k as f64 * 1e-3;
                for (c, b) in kg::shifted_coefficients(dim, s).iter().zip(bounds) {
                    assert!(c.abs() <= b + 1e-12, "d={dim} s={s}: {c} > {b}");
                }
                assert!(kg::f2(dim, s).abs() <= p.bd.bounds()[1] + 1e-15);
            }
        }
        for k in 0..=40_000 {
            let x = 2.0 + k as f64 * 1e-4;
            for (c, b) in ym::shifted_coefficients(x).iter().zip(ym::COEFFICIENT_BOUNDS) {
                assert!(c.2.abs() <= b + 1e-12, "x={x}");
            }
            assert!(ym::f2(x) <= 1.0);
        }
        for i in 0..=400 {
            for j in 0..=400 {
                let (x, y) = (-10.0 + 0.05 * i as f64, -10.0 + 0.05 * j as f64);
                let th = x.tanh();
                let c0 = th * th + beam::tanh_fourth(th) + beam::source(0.0, y);
                assert!(c0.abs() <= BEAM_SOURCE_BOUND);
            }
        }
        let p = gross_pitaevskii(3).unwrap();
        for k in 0..1000 {
            let x = diagonal_point(3, -5.0 + 0.01 * k as f64);
            assert!(p.bd.payoff(1).unwrap()(&x).norm() <= p.bd.bounds()[0] + 1e-15);
        }
    }

    #[test]
    fn linear_oracles_at_time_zero() {
        let x = diagonal_point(2, 0.4);
        let heat = linear_heat(2).unwrap();
        assert!((heat.exact_at(0.0, &x).unwrap() - heat.bd.payoff(1).unwrap()(&x)).norm() < 1e-15);
        let schr = linear_schrodinger(2).unwrap();
        assert!((schr.exact_at(0.0, &x).unwrap() - schr.bd.payoff(1).unwrap()(&x)).norm() < 1e-15);
        let wave = linear_wave().unwrap();
        assert_eq!(wave.exact_at(0.0, &[re(0.7)]).unwrap(), Complex64::ZERO);
    }

    #[test]
    fn registry_names() {
        for name in PROBLEM_NAMES {
            let dim = if matches!(name, "yang-mills" | "beam" | "linear-wave") { 1 } else { 2 };
            let p = by_name(name, dim).unwrap();
            assert_eq!(p.name, name);
            assert_eq!(p.dim, dim);
        }
        assert!(matches!(by_name("burgers", 1), Err(Error::UnknownProblem(_))));
    }

    #[test]
    fn spec_validation() {
        let nl = NonlinearitySpec::linear(None, 0.0);
        let bd = BoundaryData::new(vec![None, None], vec![0.0, 0.0]).unwrap();
        let err = ProblemSpec::new("x", KernelFamily::wave(1).unwrap(), nl, bd, vec![0.0, 1.0], None, None);
        assert!(err.is_err());
    }
}
