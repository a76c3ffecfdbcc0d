//! Monte-Carlo driver and the moment / blow-up horizon check.

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::branching::{grow_tree, DEFAULT_NODE_CAP};
use crate::error::{Error, Result};
use crate::functional::{evaluate_linear, evaluate_xi};
use crate::kernels::ParticleRole;
use crate::problems::ProblemSpec;
use crate::quadrature::{integrate, Tolerance};

/// Paths per work item. Fixed so that the reduction tree does not depend on the thread count.
pub const CHUNK_SIZE: usize = 1024;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EstimatorOptions {
    pub n_paths: usize,
    pub seed: u64,
    pub threads: usize,
    pub beta: f64,
    pub node_cap: usize,
}

impl Default for EstimatorOptions {
    fn default() -> Self {
        Self {
            n_paths: 1 << 16,
            seed: 0,
            threads: 1,
            beta: 1.0,
            node_cap: DEFAULT_NODE_CAP,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Estimate {
    pub mean: Complex64,
    /// Componentwise standard error of the real and imaginary parts.
    pub stderr: Complex64,
    /// Paths that contributed to the mean.
    pub n_paths: usize,
    /// Paths aborted at the node cap; excluded from the mean.
    pub n_blowups: usize,
    pub max_tree_size: usize,
}

impl Estimate {
    /// An estimate with blow-ups is biased and must not be used.
    pub fn is_flagged(&self) -> bool {
        self.n_blowups > 0
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq)]
struct Moments {
    n: u64,
    mean: f64,
    m2: f64,
}

impl Moments {
    fn push(&mut self, x: f64) {
        self.n += 1;
        let delta = x - self.mean;
        self.mean += delta / self.n as f64;
        self.m2 += delta * (x - self.mean);
    }

    fn merge(a: Self, b: Self) -> Self {
        if a.n == 0 {
            return b;
        }
        if b.n == 0 {
            return a;
        }
        let n = a.n + b.n;
        let delta = b.mean - a.mean;
        let wb = b.n as f64 / n as f64;
        Self {
            n,
            mean: a.mean + delta * wb,
            m2: a.m2 + b.m2 + delta * delta * a.n as f64 * wb,
        }
    }

    fn stderr(&self) -> f64 {
        (self.m2 / (self.n - 1) as f64 / self.n as f64).sqrt()
    }
}

#[derive(Debug, Clone, Copy, Default)]
struct Tally {
    re: Moments,
    im: Moments,
    blowups: usize,
    max_tree_size: usize,
}

impl Tally {
    fn merge(a: Self, b: Self) -> Self {
        Self {
            re: Moments::merge(a.re, b.re),
            im: Moments::merge(a.im, b.im),
            blowups: a.blowups + b.blowups,
            max_tree_size: a.max_tree_size.max(b.max_tree_size),
        }
    }
}

fn pairwise(mut items: Vec<Tally>) -> Tally {
    while items.len() > 1 {
        items = items
            .chunks(2)
            .map(|pair| match pair {
                [a, b] => Tally::merge(*a, *b),
                [a] => *a,
                _ => unreachable!(),
            })
            .collect();
    }
    items.pop().unwrap_or_default()
}

/// Random stream of path `index` under `seed`.
pub fn path_rng(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

/// Outcome of one path: the sample and the number of particles it used.
pub type PathSample = Result<(Complex64, usize)>;

/// Runs `path` for every path index on its own random stream and aggregates the samples.
///
/// Path `i` draws from `ChaCha8(seed)` on stream `i`, and chunks of [`CHUNK_SIZE`]
/// paths are reduced pairwise in index order, so the result is bit-identical for
/// every thread count. [`Error::BlowUp`] results are counted and skipped; any other
/// error aborts the run.
pub fn estimate_with<F>(opts: &EstimatorOptions, path: F) -> Result<Estimate>
where
    F: Fn(&mut ChaCha8Rng) -> PathSample + Sync,
{
    if opts.n_paths < 2 {
        return Err(Error::InvalidArgument(format!("need at least 2 paths, got {}", opts.n_paths)));
    }
    if opts.threads == 0 {
        return Err(Error::InvalidArgument("thread count must be at least 1".into()));
    }
    let base = ChaCha8Rng::seed_from_u64(opts.seed);
    let n_chunks = opts.n_paths.div_ceil(CHUNK_SIZE);
    let run_chunk = |c: usize| -> Result<Tally> {
        let mut tally = Tally::default();
        for i in c * CHUNK_SIZE..((c + 1) * CHUNK_SIZE).min(opts.n_paths) {
            let mut rng = base.clone();
            rng.set_stream(i as u64);
            match path(&mut rng) {
                Ok((xi, size)) => {
                    tally.re.push(xi.re);
                    tally.im.push(xi.im);
                    tally.max_tree_size = tally.max_tree_size.max(size);
                }
                Err(Error::BlowUp { nodes, .. }) => {
                    tally.blowups += 1;
                    tally.max_tree_size = tally.max_tree_size.max(nodes);
                }
                Err(e) => return Err(e),
            }
        }
        Ok(tally)
    };

    let chunks: Vec<Tally> = if opts.threads == 1 {
        (0..n_chunks).map(run_chunk).collect::<Result<_>>()?
    } else {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(opts.threads)
            .build()
            .map_err(|e| Error::InvalidArgument(format!("cannot start worker pool: {e}")))?;
        pool.install(|| (0..n_chunks).into_par_iter().map(run_chunk).collect::<Result<_>>())?
    };
    let total = pairwise(chunks);
    let n = total.re.n as usize;
    if n < 2 {
        return Err(Error::AllPathsFailed { blowups: total.blowups });
    }
    Ok(Estimate {
        mean: Complex64::new(total.re.mean, total.im.mean),
        stderr: Complex64::new(total.re.stderr(), total.im.stderr()),
        n_paths: n,
        n_blowups: total.blowups,
        max_tree_size: total.max_tree_size,
    })
}

fn check_point(problem: &ProblemSpec, horizon: f64, x: &[Complex64]) -> Result<()> {
    if !(horizon > 0.0 && horizon.is_finite()) {
        return Err(Error::InvalidArgument(format!("horizon must be positive, got {horizon}")));
    }
    if x.len() != problem.dim {
        return Err(Error::InvalidArgument(format!(
            "point has {} coordinates, problem '{}' has dimension {}",
            x.len(),
            problem.name,
            problem.dim
        )));
    }
    Ok(())
}

/// Estimates `u(horizon, x)` by averaging `ξ` over independent trees.
pub fn estimate(problem: &ProblemSpec, horizon: f64, x: &[Complex64], opts: &EstimatorOptions) -> Result<Estimate> {
    check_point(problem, horizon, x)?;
    let law = problem.law(opts.beta)?;
    let mut est = estimate_with(opts, |rng| {
        let tree = grow_tree(&law, &problem.kernel, horizon, x, rng, opts.node_cap)?;
        let xi = evaluate_xi(&tree, &problem.nl, &problem.bd, &law)?;
        Ok((xi, tree.node_count()))
    })?;
    est.mean += problem.shift_at(x);
    Ok(est)
}

/// Estimates a linear problem with the single-particle representation (no branching).
pub fn estimate_linear(
    problem: &ProblemSpec,
    horizon: f64,
    x: &[Complex64],
    opts: &EstimatorOptions,
) -> Result<Estimate> {
    check_point(problem, horizon, x)?;
    let law = problem.law(opts.beta)?;
    let mut est = estimate_with(opts, |rng| {
        let xi = evaluate_linear(&problem.kernel, &law, &problem.nl, &problem.bd, horizon, x, rng)?;
        Ok((xi, 1))
    })?;
    est.mean += problem.shift_at(x);
    Ok(est)
}

/// Data of the `L^p` moment condition: `H_p(s) = Σ_j (q_j ‖c_j‖_∞)^p s^{ℓ_j}`.
#[derive(Debug, Clone, PartialEq)]
pub struct MomentCheckInput {
    /// Pairs `(ℓ_j, q_j ‖c_j‖_∞)`; raised to the power `p` inside the check.
    pub terms: Vec<(u32, f64)>,
    pub p: f64,
    pub r_p: f64,
    pub alpha_p: f64,
    /// Radius of convergence of `H_p`; infinite for polynomial nonlinearities.
    pub radius: f64,
}

impl MomentCheckInput {
    /// Builds the check for `problem` at `horizon` from its declared bounds:
    /// `r_p = max_n ‖f_n‖^p sup_s |γ_n(s)|^p ρ̄(s)^{1−p}` (twice `‖f_n‖` for gradient leaves) and
    /// `α_p = sup_s |γ_N(s)|^p ρ(s)^{1−p}`, suprema over `s ∈ (0, horizon]`.
    pub fn for_problem(problem: &ProblemSpec, horizon: f64, beta: f64, p: f64) -> Result<Self> {
        if !(p > 1.0) {
            return Err(Error::InvalidArgument(format!("moment order p must exceed 1, got {p}")));
        }
        if !(horizon > 0.0 && beta > 0.0) {
            return Err(Error::InvalidArgument("horizon and beta must be positive".into()));
        }
        let growth = (beta * (p - 1.0) * horizon).exp();
        let roles = problem.nl.roles();
        // Gradient leaves pay a difference of two data values.
        let leaf_sup = |level: usize, bound: f64| -> f64 {
            roles
                .iter()
                .filter_map(|&role| {
                    let spread = if role == ParticleRole::Gradient { 2.0 } else { 1.0 };
                    problem.kernel.gamma_sup(level, role, horizon).map(|g| spread * bound * g)
                })
                .fold(0.0, f64::max)
        };
        let gamma_sup = |level: usize| -> f64 {
            roles
                .iter()
                .filter_map(|&role| problem.kernel.gamma_sup(level, role, horizon))
                .fold(0.0, f64::max)
        };
        let mut r_p: f64 = 0.0;
        for (n, (&prob, &bound)) in (1..).zip(problem.p_levels.iter().zip(problem.bd.bounds())) {
            if prob > 0.0 {
                r_p = r_p.max(leaf_sup(n, bound).powf(p) * growth);
            }
        }
        let alpha_p = gamma_sup(problem.kernel.n_levels()).powf(p) * beta.powf(1.0 - p) * growth;
        Ok(Self {
            terms: problem.nl.moment_coefficients(),
            p,
            r_p,
            alpha_p,
            radius: f64::INFINITY,
        })
    }

    /// Multiplies every nonlinearity bound by `lambda`.
    pub fn scaled(mut self, lambda: f64) -> Self {
        for t in &mut self.terms {
            t.1 *= lambda;
        }
        self
    }

    /// `H_p(s)`.
    pub fn h(&self, s: f64) -> f64 {
        self.terms.iter().map(|&(e, c)| c.powf(self.p) * s.powi(e as i32)).sum()
    }
}

const HORIZON_TOL: Tolerance = Tolerance {
    abs: 1e-14,
    rel: 1e-10,
    max_intervals: 5000,
};

/// Partial integrals beyond `DIVERGENCE_FACTOR · α_p` are treated as divergent.
pub const DIVERGENCE_FACTOR: f64 = 1e12;

/// Largest horizon `T_max = α_p⁻¹ ∫_{r_p}^{R_p} ds / H_p(s)` covered by the moment
/// condition; `+∞` when the integral diverges.
pub fn blowup_horizon(input: &MomentCheckInput) -> Result<f64> {
    let MomentCheckInput { p, r_p, alpha_p, radius, .. } = *input;
    if !(p > 1.0) {
        return Err(Error::InvalidArgument(format!("moment order p must exceed 1, got {p}")));
    }
    if !(r_p >= 0.0 && r_p.is_finite()) {
        return Err(Error::InvalidArgument(format!("r_p must be finite and nonnegative, got {r_p}")));
    }
    if !(alpha_p > 0.0 && alpha_p.is_finite()) {
        return Err(Error::InvalidArgument(format!("alpha_p must be positive, got {alpha_p}")));
    }
    if !(radius > 0.0) {
        return Err(Error::InvalidArgument(format!("radius must be positive, got {radius}")));
    }
    if let Some(&(_, c)) = input.terms.iter().find(|t| !(t.1 >= 0.0 && t.1.is_finite())) {
        return Err(Error::InvalidArgument(format!("H coefficients must be nonnegative, got {c}")));
    }
    if r_p >= radius {
        return Err(Error::Infeasible { r: r_p, radius });
    }
    let active: Vec<(u32, f64)> = input
        .terms
        .iter()
        .filter(|t| t.1 > 0.0)
        .map(|&(e, c)| (e, c.powf(p)))
        .collect();
    let (Some(low), Some(degree)) = (active.iter().map(|t| t.0).min(), active.iter().map(|t| t.0).max()) else {
        return Ok(f64::INFINITY);
    };
    // 1/H is not integrable at 0 when H vanishes there.
    if r_p == 0.0 && low >= 1 {
        return Ok(f64::INFINITY);
    }
    let h = |s: f64| -> f64 { active.iter().map(|&(e, a)| a * s.powi(e as i32)).sum() };
    let cap = DIVERGENCE_FACTOR * alpha_p;

    let integral = if radius.is_finite() {
        integrate(|s| 1.0 / h(s), r_p, radius, HORIZON_TOL)?.0
    } else {
        if degree <= 1 {
            return Ok(f64::INFINITY);
        }
        let split = r_p.max(1.0);
        let near = if r_p < split {
            integrate(|s| 1.0 / h(s), r_p, split, HORIZON_TOL)?.0
        } else {
            0.0
        };
        if near > cap {
            return Ok(f64::INFINITY);
        }
        // s = split / v maps [split, ∞) onto (0, 1]: ds / H(s) = split v^{K−2} dv / Σ a_j split^j v^{K−j}.
        let tail = |v: f64| -> f64 {
            let denom: f64 = active
                .iter()
                .map(|&(e, a)| a * split.powi(e as i32) * v.powi((degree - e) as i32))
                .sum();
            split * v.powi(degree as i32 - 2) / denom
        };
        near + integrate(tail, 0.0, 1.0, HORIZON_TOL)?.0
    };
    if integral > cap {
        return Ok(f64::INFINITY);
    }
    Ok(integral / alpha_p)
}
