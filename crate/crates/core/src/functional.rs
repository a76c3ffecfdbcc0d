//! The tree functional `ξ_{t,x}` and its gradient-augmented form.
//!
//! For a completed tree,
//!
//! ```text
//! ξ = Π_leaves   W_k e^{βΔt_k} [f_{I_k}(X_k) − 1_{θ_k≠0} f_{I_k}(X_{k−})]
//!   · Π_interior W_k β⁻¹e^{βΔt_k} c_{J_k,0}(t − T_k, X_k)
//! ```
//!
//! with `W_k = γ` for value particles and `W_k = c_{J_{k−},θ_k}(t − T_{k−}, X_{k−}) γ¹`
//! for gradient particles.

use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;
use rand::distr::Open01;
use rand::Rng;

use crate::branching::{BranchingLaw, BranchingTree, OffspringEvent, ParticleRecord};
use crate::error::{Error, Result};
use crate::kernels::{KernelFamily, ParticleRole};

/// Function of PDE time and position, `(s, x) ↦ c(s, x)`.
pub type Coefficient = Arc<dyn Fn(f64, &[Complex64]) -> Complex64 + Send + Sync>;

/// Boundary datum `x ↦ f_n(x)`, evaluated at complex positions for the Schrödinger family.
pub type Payoff = Arc<dyn Fn(&[Complex64]) -> Complex64 + Send + Sync>;

/// Products over more nodes than this are accumulated in log-magnitude and phase.
pub const LOG_PRODUCT_THRESHOLD: usize = 64;

pub fn constant_coefficient(c: Complex64) -> Coefficient {
    Arc::new(move |_, _| c)
}

/// One monomial `q_j c_{j,0} u^{ℓ_{j,0}} Π_h (c_{j,h}·Du)^{ℓ_{j,h}}` of the source term.
#[derive(Clone)]
pub struct Term {
    pub prob: f64,
    /// `ℓ_{j,h}` for every particle type `h`.
    pub children: Vec<u32>,
    pub coefficient: Coefficient,
    /// Direction fields `c_{j,h}` indexed by particle type; only gradient types use them.
    /// Gradient kernels are one-dimensional, so a direction is its scalar component.
    pub directions: Vec<Option<Coefficient>>,
    /// Declared bound on `|c_{j,0}|`.
    pub sup_norm: f64,
}

impl Term {
    pub fn new(prob: f64, children: Vec<u32>, coefficient: Coefficient, sup_norm: f64) -> Self {
        let directions = vec![None; children.len()];
        Self { prob, children, coefficient, directions, sup_norm }
    }

    pub fn constant(prob: f64, children: Vec<u32>, c: Complex64) -> Self {
        Self::new(prob, children, constant_coefficient(c), c.norm())
    }

    pub fn with_direction(mut self, theta: usize, direction: Coefficient) -> Self {
        self.directions[theta] = Some(direction);
        self
    }

    pub fn total_children(&self) -> u32 {
        self.children.iter().sum()
    }
}

impl fmt::Debug for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Term")
            .field("prob", &self.prob)
            .field("children", &self.children)
            .field("sup_norm", &self.sup_norm)
            .finish_non_exhaustive()
    }
}

/// Source term of the PDE split into weighted monomials, one list shared by all
/// particle types or one list per type.
#[derive(Clone, Debug)]
pub struct NonlinearitySpec {
    roles: Vec<ParticleRole>,
    laws: Vec<Vec<Term>>,
}

impl NonlinearitySpec {
    pub fn new(roles: Vec<ParticleRole>, laws: Vec<Vec<Term>>) -> Result<Self> {
        let spec = Self { roles, laws };
        // Reuses the probability and shape checks of the branching law.
        spec.branching_law(1.0, vec![1.0])?;
        for term in spec.laws.iter().flatten() {
            if term.directions.len() != spec.roles.len() {
                return Err(Error::InvalidArgument(format!(
                    "term carries {} direction slots for {} particle types",
                    term.directions.len(),
                    spec.roles.len()
                )));
            }
            if !(term.sup_norm >= 0.0) {
                return Err(Error::InvalidArgument(format!("negative sup-norm bound {}", term.sup_norm)));
            }
            for (h, &role) in spec.roles.iter().enumerate() {
                if role == ParticleRole::Gradient && term.children[h] > 0 && term.directions[h].is_none() {
                    return Err(Error::InvalidArgument(format!(
                        "term spawns gradient particles of type {h} without a direction field"
                    )));
                }
            }
        }
        Ok(spec)
    }

    /// Single value-particle type.
    pub fn scalar(terms: Vec<Term>) -> Result<Self> {
        Self::new(vec![ParticleRole::Value], vec![terms])
    }

    /// Linear problem with source `F(s, x)`; no branching ever produces children.
    pub fn linear(source: Option<Coefficient>, sup_norm: f64) -> Self {
        let coefficient = source.unwrap_or_else(|| constant_coefficient(Complex64::ZERO));
        Self {
            roles: vec![ParticleRole::Value],
            laws: vec![vec![Term::new(1.0, vec![0], coefficient, sup_norm)]],
        }
    }

    pub fn roles(&self) -> &[ParticleRole] {
        &self.roles
    }

    pub fn n_types(&self) -> usize {
        self.roles.len()
    }

    /// Number of gradient blocks `H`.
    pub fn gradient_blocks(&self) -> usize {
        self.roles.iter().filter(|&&r| r == ParticleRole::Gradient).count()
    }

    pub fn terms(&self, theta: usize) -> &[Term] {
        if self.laws.len() == 1 {
            &self.laws[0]
        } else {
            &self.laws[theta]
        }
    }

    pub fn term_lists(&self) -> &[Vec<Term>] {
        &self.laws
    }

    pub fn is_linear(&self) -> bool {
        self.laws.iter().flatten().all(|t| t.total_children() == 0)
    }

    /// Branching law whose offspring events mirror the terms one-to-one.
    pub fn branching_law(&self, beta: f64, p_levels: Vec<f64>) -> Result<BranchingLaw> {
        let offspring = self
            .laws
            .iter()
            .map(|terms| {
                terms
                    .iter()
                    .map(|t| OffspringEvent::new(t.prob, t.children.clone()))
                    .collect()
            })
            .collect();
        BranchingLaw::new(beta, p_levels, self.roles.clone(), offspring)
    }

    /// One pair `(|ℓ_j|, q_j ‖c_{j,0}‖_∞)` per term. Per-type laws of the same
    /// shape are merged term by term with the larger bound.
    pub fn moment_coefficients(&self) -> Vec<(u32, f64)> {
        let pairs = |terms: &[Term]| -> Vec<(u32, f64)> {
            terms.iter().map(|t| (t.total_children(), t.prob * t.sup_norm)).collect()
        };
        let mut out = pairs(&self.laws[0]);
        for other in self.laws.iter().skip(1).map(|l| pairs(l)) {
            if other.len() == out.len() && other.iter().zip(&out).all(|(a, b)| a.0 == b.0) {
                for (slot, (_, c)) in out.iter_mut().zip(other) {
                    slot.1 = slot.1.max(c);
                }
            } else {
                out.extend(other);
            }
        }
        out
    }
}

/// Boundary data `f_1, …, f_N`, already divided by the level probabilities
/// (the initial condition of order `n−1` is `p_n f_n`). `None` marks a level with zero data.
#[derive(Clone)]
pub struct BoundaryData {
    levels: Vec<Option<Payoff>>,
    bounds: Vec<f64>,
}

impl BoundaryData {
    pub fn new(levels: Vec<Option<Payoff>>, bounds: Vec<f64>) -> Result<Self> {
        if levels.is_empty() || levels.len() != bounds.len() {
            return Err(Error::InvalidArgument(format!(
                "{} boundary levels with {} bounds",
                levels.len(),
                bounds.len()
            )));
        }
        Ok(Self { levels, bounds })
    }

    pub fn n_levels(&self) -> usize {
        self.levels.len()
    }

    /// 1-based level lookup.
    pub fn payoff(&self, level: usize) -> Option<&Payoff> {
        self.levels.get(level.wrapping_sub(1)).and_then(Option::as_ref)
    }

    pub fn bounds(&self) -> &[f64] {
        &self.bounds
    }

    /// Multiplies every datum by `lambda`.
    pub fn scaled(&self, lambda: Complex64) -> Self {
        let levels = self
            .levels
            .iter()
            .map(|f| {
                f.clone().map(|f| -> Payoff { Arc::new(move |x: &[Complex64]| lambda * f(x)) })
            })
            .collect();
        let bounds = self.bounds.iter().map(|b| b * lambda.norm()).collect();
        Self { levels, bounds }
    }
}

impl fmt::Debug for BoundaryData {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let present: Vec<bool> = self.levels.iter().map(Option::is_some).collect();
        f.debug_struct("BoundaryData")
            .field("levels", &present)
            .field("bounds", &self.bounds)
            .finish()
    }
}

struct Product {
    log_mode: bool,
    direct: Complex64,
    log_mag: f64,
    phase: f64,
    zero: bool,
}

impl Product {
    fn new(nodes: usize) -> Self {
        Self {
            log_mode: nodes > LOG_PRODUCT_THRESHOLD,
            direct: Complex64::ONE,
            log_mag: 0.0,
            phase: 0.0,
            zero: false,
        }
    }

    fn mul(&mut self, factor: Complex64, particle: usize, what: &'static str) -> Result<()> {
        if !factor.is_finite() {
            return Err(Error::NumericFault { particle, what });
        }
        if factor == Complex64::ZERO {
            self.zero = true;
        } else if self.log_mode {
            let (r, arg) = factor.to_polar();
            self.log_mag += r.ln();
            self.phase += arg;
        } else {
            self.direct *= factor;
        }
        Ok(())
    }

    fn finish(self) -> Result<Complex64> {
        if self.zero {
            return Ok(Complex64::ZERO);
        }
        let value = if self.log_mode {
            Complex64::from_polar(self.log_mag.exp(), self.phase)
        } else {
            self.direct
        };
        if value.is_finite() {
            Ok(value)
        } else {
            Err(Error::NumericFault { particle: 0, what: "product overflow" })
        }
    }
}

fn role_payoff(payoff: &Payoff, role: ParticleRole, x: &[Complex64]) -> Complex64 {
    match role {
        ParticleRole::Conjugate => {
            let xc: Vec<Complex64> = x.iter().map(Complex64::conj).collect();
            payoff(&xc).conj()
        }
        _ => payoff(x),
    }
}

/// Weight `W_k`: the kernel density weight, times the parent's direction field for gradient particles.
fn particle_weight(tree: &BranchingTree, nl: &NonlinearitySpec, p: &ParticleRecord) -> Result<Complex64> {
    let gamma = p.increment.gamma;
    if nl.roles()[p.theta] != ParticleRole::Gradient {
        return Ok(gamma);
    }
    let parent = &tree.particles[p.parent.ok_or_else(|| {
        Error::Contract(format!("gradient particle {} has no parent", p.id))
    })?];
    let j = parent.offspring_choice.ok_or_else(|| {
        Error::Contract(format!("parent {} of particle {} never branched", parent.id, p.id))
    })?;
    let direction = nl.terms(parent.theta)[j].directions[p.theta]
        .as_ref()
        .ok_or_else(|| Error::Contract(format!("no direction field for particle {}", p.id)))?;
    Ok(direction(tree.horizon - parent.death_time, &parent.position) * gamma)
}

/// Evaluates `ξ` on a completed tree.
pub fn evaluate_xi(
    tree: &BranchingTree,
    nl: &NonlinearitySpec,
    bd: &BoundaryData,
    law: &BranchingLaw,
) -> Result<Complex64> {
    if law.n_types() != nl.n_types() {
        return Err(Error::Contract(format!(
            "law has {} particle types, nonlinearity {}",
            law.n_types(),
            nl.n_types()
        )));
    }
    let t = tree.horizon;
    let mut product = Product::new(tree.node_count());
    for p in &tree.particles {
        let role = *nl.roles().get(p.theta).ok_or_else(|| {
            Error::Contract(format!("particle {} has unknown type {}", p.id, p.theta))
        })?;
        let w = particle_weight(tree, nl, p)?;
        product.mul(w, p.id, "kernel weight")?;
        if p.is_leaf {
            product.mul(law.survival_factor(t - p.birth_time).into(), p.id, "survival weight")?;
            let f = bd.payoff(p.kernel_index).ok_or_else(|| {
                Error::Contract(format!(
                    "leaf {} landed on level {} which carries no boundary datum",
                    p.id, p.kernel_index
                ))
            })?;
            let mut value = role_payoff(f, role, &p.position);
            if role == ParticleRole::Gradient {
                value -= role_payoff(f, role, &p.parent_position);
            }
            product.mul(value, p.id, "boundary payoff")?;
        } else {
            product.mul(law.death_factor(p.lifetime()).into(), p.id, "death weight")?;
            let j = p.offspring_choice.ok_or_else(|| {
                Error::Contract(format!("interior particle {} has no offspring choice", p.id))
            })?;
            let term = &nl.terms(p.theta)[j];
            product.mul((term.coefficient)(t - p.death_time, &p.position), p.id, "nonlinearity coefficient")?;
        }
    }
    product.finish()
}

/// One draw of the linear representation: a single particle, no branching.
///
/// Survival returns `γ_I(t, Z) f_I(x + Z) / ρ̄(t)`, death returns
/// `γ_N(τ, Z) F(t − τ, x + Z) / ρ(τ)` where `F = Σ_j q_j c_{j,0}`.
pub fn evaluate_linear<R: Rng + ?Sized>(
    kernel: &KernelFamily,
    law: &BranchingLaw,
    nl: &NonlinearitySpec,
    bd: &BoundaryData,
    horizon: f64,
    x: &[Complex64],
    rng: &mut R,
) -> Result<Complex64> {
    if !nl.is_linear() || nl.n_types() != 1 {
        return Err(Error::Contract("evaluate_linear needs a source term without branching".into()));
    }
    if !(horizon > 0.0 && horizon.is_finite()) {
        return Err(Error::InvalidArgument(format!("horizon must be positive, got {horizon}")));
    }
    if x.len() != kernel.dim() {
        return Err(Error::InvalidArgument(format!(
            "point has {} coordinates, kernel dimension is {}",
            x.len(),
            kernel.dim()
        )));
    }
    let u: f64 = rng.sample(Open01);
    let tau = -u.ln() / law.beta();
    let shift = |z: &[Complex64]| -> Vec<Complex64> { x.iter().zip(z).map(|(a, b)| a + b).collect() };

    let value = if tau >= horizon {
        let level = 1 + pick(law.p_levels(), rng);
        let inc = kernel.sample(level, ParticleRole::Value, horizon, rng)?;
        let f = bd.payoff(level).ok_or_else(|| {
            Error::Contract(format!("level {level} has mass but no boundary datum"))
        })?;
        inc.gamma * law.survival_factor(horizon) * f(&shift(&inc.z))
    } else {
        let inc = kernel.sample(kernel.n_levels(), ParticleRole::Value, tau, rng)?;
        let y = shift(&inc.z);
        let source: Complex64 = nl.terms(0).iter().map(|t| t.prob * (t.coefficient)(horizon - tau, &y)).sum();
        inc.gamma * law.death_factor(tau) * source
    };
    if value.is_finite() {
        Ok(value)
    } else {
        Err(Error::NumericFault { particle: 0, what: "linear draw" })
    }
}

fn pick<R: Rng + ?Sized>(probs: &[f64], rng: &mut R) -> usize {
    let u: f64 = rng.random();
    let mut acc = 0.0;
    let mut last = 0;
    for (i, &p) in probs.iter().enumerate() {
        if p > 0.0 {
            last = i;
            acc += p;
            if u < acc {
                return i;
            }
        }
    }
    last
}
