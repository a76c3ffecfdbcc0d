//! Galton-Watson tree growth.
//!
//! Every particle lives an `Exp(β)` lifetime. If it outlives the horizon it
//! becomes a leaf: it draws a boundary level `I ~ p` and an increment from
//! `μ_I` over its remaining time. Otherwise it draws its increment from `μ_N`
//! over its lifetime, picks an offspring event `j ~ q` and spawns
//! `ℓ_{j,h}` children of type `h` for every type block.

use std::collections::VecDeque;
use std::fmt::Write as _;
use std::ops::Range;

use num_complex::Complex64;
use rand::distr::Open01;
use rand::Rng;

use crate::error::{Error, Result};
use crate::kernels::{KernelFamily, ParticleRole, SampledIncrement};

pub const DEFAULT_NODE_CAP: usize = 1_000_000;

const SIMPLEX_TOL: f64 = 1e-12;

/// One atom of the offspring law: probability `q_j` and the children count per type.
#[derive(Debug, Clone, PartialEq)]
pub struct OffspringEvent {
    pub prob: f64,
    pub children: Vec<u32>,
}

impl OffspringEvent {
    pub fn new(prob: f64, children: Vec<u32>) -> Self {
        Self { prob, children }
    }

    pub fn total_children(&self) -> usize {
        self.children.iter().map(|&c| c as usize).sum()
    }
}

/// Lifetime intensity, boundary-level probabilities, particle types and offspring laws.
///
/// `offspring` holds either one law shared by all particle types or one law
/// per type (systems such as `(u, u*)` branch differently per component).
#[derive(Debug, Clone)]
pub struct BranchingLaw {
    beta: f64,
    p_levels: Vec<f64>,
    roles: Vec<ParticleRole>,
    offspring: Vec<Vec<OffspringEvent>>,
}

impl BranchingLaw {
    pub fn new(
        beta: f64,
        p_levels: Vec<f64>,
        roles: Vec<ParticleRole>,
        offspring: Vec<Vec<OffspringEvent>>,
    ) -> Result<Self> {
        check_beta(beta)?;
        check_simplex("p_levels", p_levels.iter().copied())?;
        if roles.first() != Some(&ParticleRole::Value) {
            return Err(Error::InvalidArgument(
                "particle type 0 must exist and be a value particle".into(),
            ));
        }
        if offspring.len() != 1 && offspring.len() != roles.len() {
            return Err(Error::InvalidArgument(format!(
                "expected 1 shared offspring law or {} per-type laws, got {}",
                roles.len(),
                offspring.len()
            )));
        }
        for events in &offspring {
            check_simplex("offspring probabilities", events.iter().map(|e| e.prob))?;
            if let Some(bad) = events.iter().find(|e| e.children.len() != roles.len()) {
                return Err(Error::InvalidArgument(format!(
                    "offspring event lists {} type counts for {} particle types",
                    bad.children.len(),
                    roles.len()
                )));
            }
        }
        Ok(Self { beta, p_levels, roles, offspring })
    }

    /// Law with a single value-particle type.
    pub fn scalar(beta: f64, p_levels: Vec<f64>, events: Vec<OffspringEvent>) -> Result<Self> {
        Self::new(beta, p_levels, vec![ParticleRole::Value], vec![events])
    }

    pub fn with_beta(&self, beta: f64) -> Result<Self> {
        check_beta(beta)?;
        Ok(Self { beta, ..self.clone() })
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn p_levels(&self) -> &[f64] {
        &self.p_levels
    }

    pub fn roles(&self) -> &[ParticleRole] {
        &self.roles
    }

    pub fn n_types(&self) -> usize {
        self.roles.len()
    }

    /// Offspring law used by a dying particle of type `theta`.
    pub fn events(&self, theta: usize) -> &[OffspringEvent] {
        if self.offspring.len() == 1 {
            &self.offspring[0]
        } else {
            &self.offspring[theta]
        }
    }

    /// All distinct offspring laws (one, or one per type).
    pub fn offspring_laws(&self) -> &[Vec<OffspringEvent>] {
        &self.offspring
    }

    pub fn has_gradient_types(&self) -> bool {
        self.roles.contains(&ParticleRole::Gradient)
    }

    /// `1 / ρ̄(Δt) = e^{βΔt}`.
    pub fn survival_factor(&self, dt: f64) -> f64 {
        (self.beta * dt).exp()
    }

    /// `1 / ρ(Δt) = β⁻¹ e^{βΔt}`.
    pub fn death_factor(&self, dt: f64) -> f64 {
        (self.beta * dt).exp() / self.beta
    }

    fn draw_lifetime<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let u: f64 = rng.sample(Open01);
        -u.ln() / self.beta
    }

    fn draw_level<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        1 + draw_atom(self.p_levels.iter().copied(), rng)
    }

    fn draw_event<R: Rng + ?Sized>(&self, theta: usize, rng: &mut R) -> usize {
        draw_atom(self.events(theta).iter().map(|e| e.prob), rng)
    }

    /// Rejects kernel/law combinations that would fail mid-tree.
    fn check_kernel(&self, kernel: &KernelFamily) -> Result<()> {
        let n = kernel.n_levels();
        if self.p_levels.len() != n {
            return Err(Error::InvalidArgument(format!(
                "law has {} boundary levels, kernel has {n}",
                self.p_levels.len()
            )));
        }
        for &role in &self.roles {
            if !kernel.supports(n, role) {
                return Err(Error::UnsupportedKernel(format!(
                    "{role:?} particles cannot branch: no level-{n} sampler for {:?}",
                    kernel.kind()
                )));
            }
            for (level, &p) in (1..).zip(&self.p_levels) {
                if p > 0.0 && !kernel.supports(level, role) {
                    return Err(Error::UnsupportedKernel(format!(
                        "level {level} has mass {p} but {:?} has no {role:?} sampler for it",
                        kernel.kind()
                    )));
                }
            }
        }
        Ok(())
    }
}

fn check_beta(beta: f64) -> Result<()> {
    if !(beta > 0.0 && beta.is_finite()) {
        return Err(Error::InvalidArgument(format!("beta must be positive, got {beta}")));
    }
    Ok(())
}

fn check_simplex(what: &str, probs: impl Iterator<Item = f64>) -> Result<()> {
    let mut sum = 0.0;
    let mut count = 0;
    for p in probs {
        if !(p >= 0.0 && p.is_finite()) {
            return Err(Error::InvalidArgument(format!("{what}: negative or non-finite entry {p}")));
        }
        sum += p;
        count += 1;
    }
    if count == 0 || (sum - 1.0).abs() > SIMPLEX_TOL {
        return Err(Error::InvalidArgument(format!("{what} must sum to 1, got {sum}")));
    }
    Ok(())
}

fn draw_atom<R: Rng + ?Sized>(probs: impl Iterator<Item = f64> + Clone, rng: &mut R) -> usize {
    let u: f64 = rng.random();
    let mut acc = 0.0;
    let mut last_positive = 0;
    for (i, p) in probs.enumerate() {
        if p > 0.0 {
            last_positive = i;
            acc += p;
            if u < acc {
                return i;
            }
        }
    }
    last_positive
}

#[derive(Debug, Clone, PartialEq)]
pub struct ParticleRecord {
    pub id: usize,
    pub parent: Option<usize>,
    pub depth: usize,
    pub birth_time: f64,
    /// Branching time, or the horizon for leaves.
    pub death_time: f64,
    pub theta: usize,
    /// Boundary level for leaves, `N` for particles that branched (1-based).
    pub kernel_index: usize,
    pub offspring_choice: Option<usize>,
    /// Ids of this particle's children (contiguous).
    pub children: Range<usize>,
    pub increment: SampledIncrement,
    pub position: Vec<Complex64>,
    pub parent_position: Vec<Complex64>,
    pub is_leaf: bool,
}

impl ParticleRecord {
    pub fn lifetime(&self) -> f64 {
        self.death_time - self.birth_time
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BranchingTree {
    /// Parents precede children; `particles[k].id == k`.
    pub particles: Vec<ParticleRecord>,
    pub horizon: f64,
    pub root: Vec<Complex64>,
    pub max_depth: usize,
}

impl BranchingTree {
    pub fn node_count(&self) -> usize {
        self.particles.len()
    }

    pub fn leaves(&self) -> impl Iterator<Item = &ParticleRecord> {
        self.particles.iter().filter(|p| p.is_leaf)
    }

    /// One line per particle: `id parent birth death theta I position...`.
    pub fn dump(&self) -> String {
        let mut out = String::new();
        for p in &self.particles {
            let parent = p.parent.map_or_else(|| "-".to_string(), |q| q.to_string());
            let _ = write!(
                out,
                "{} {} {:.9} {:.9} {} {}",
                p.id, parent, p.birth_time, p.death_time, p.theta, p.kernel_index
            );
            for c in &p.position {
                let _ = write!(out, " {:.9}{:+.9}i", c.re, c.im);
            }
            out.push('\n');
        }
        out
    }
}

struct Pending {
    parent: Option<usize>,
    depth: usize,
    birth_time: f64,
    theta: usize,
    parent_position: Vec<Complex64>,
}

/// Grows one tree breadth-first up to `horizon` from `root`.
///
/// Fails with [`Error::BlowUp`] once more than `node_cap` particles exist.
pub fn grow_tree<R: Rng + ?Sized>(
    law: &BranchingLaw,
    kernel: &KernelFamily,
    horizon: f64,
    root: &[Complex64],
    rng: &mut R,
    node_cap: usize,
) -> Result<BranchingTree> {
    if !(horizon > 0.0 && horizon.is_finite()) {
        return Err(Error::InvalidArgument(format!("horizon must be positive, got {horizon}")));
    }
    if node_cap == 0 {
        return Err(Error::InvalidArgument("node cap must be at least 1".into()));
    }
    if root.len() != kernel.dim() {
        return Err(Error::InvalidArgument(format!(
            "root has {} coordinates, kernel dimension is {}",
            root.len(),
            kernel.dim()
        )));
    }
    law.check_kernel(kernel)?;

    let n_levels = kernel.n_levels();
    let mut particles: Vec<ParticleRecord> = Vec::new();
    let mut queue = VecDeque::new();
    queue.push_back(Pending {
        parent: None,
        depth: 0,
        birth_time: 0.0,
        theta: 0,
        parent_position: root.to_vec(),
    });
    let mut next_id = 1;
    let mut max_depth = 0;

    while let Some(stub) = queue.pop_front() {
        let id = particles.len();
        let role = law.roles[stub.theta];
        let tau = law.draw_lifetime(rng);
        let is_leaf = stub.birth_time + tau >= horizon;

        let (death_time, kernel_index, increment, offspring_choice) = if is_leaf {
            let level = law.draw_level(rng);
            let inc = kernel.sample(level, role, horizon - stub.birth_time, rng)?;
            (horizon, level, inc, None)
        } else {
            let inc = kernel.sample(n_levels, role, tau, rng)?;
            (stub.birth_time + tau, n_levels, inc, Some(law.draw_event(stub.theta, rng)))
        };

        let position: Vec<Complex64> = stub
            .parent_position
            .iter()
            .zip(&increment.z)
            .map(|(x, z)| x + z)
            .collect();

        let first_child = next_id;
        if let Some(j) = offspring_choice {
            for (theta, &count) in law.events(stub.theta)[j].children.iter().enumerate() {
                for _ in 0..count {
                    queue.push_back(Pending {
                        parent: Some(id),
                        depth: stub.depth + 1,
                        birth_time: death_time,
                        theta,
                        parent_position: position.clone(),
                    });
                    next_id += 1;
                }
            }
            if next_id > node_cap {
                return Err(Error::BlowUp { nodes: next_id, cap: node_cap });
            }
        }
        max_depth = max_depth.max(stub.depth);

        particles.push(ParticleRecord {
            id,
            parent: stub.parent,
            depth: stub.depth,
            birth_time: stub.birth_time,
            death_time,
            theta: stub.theta,
            kernel_index,
            offspring_choice,
            children: first_child..next_id,
            increment,
            position,
            parent_position: stub.parent_position,
            is_leaf,
        });
    }

    Ok(BranchingTree {
        particles,
        horizon,
        root: root.to_vec(),
        max_depth,
    })
}

/// `1 / ρ̄(t − birth)` for a leaf.
pub fn survival_weight(record: &ParticleRecord, law: &BranchingLaw, horizon: f64) -> Result<f64> {
    if !record.is_leaf {
        return Err(Error::Contract(format!(
            "survival weight requested for particle {} which branched",
            record.id
        )));
    }
    Ok(law.survival_factor(horizon - record.birth_time))
}

/// `1 / ρ(Δt)` for a particle that branched.
pub fn death_weight(record: &ParticleRecord, law: &BranchingLaw) -> Result<f64> {
    if record.is_leaf {
        return Err(Error::Contract(format!(
            "death weight requested for leaf particle {}",
            record.id
        )));
    }
    Ok(law.death_factor(record.lifetime()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn heat() -> KernelFamily {
        KernelFamily::heat(1).unwrap()
    }

    fn quartic_law(beta: f64) -> BranchingLaw {
        let events = (0..4).map(|k| OffspringEvent::new(0.25, vec![k])).collect();
        BranchingLaw::scalar(beta, vec![1.0], events).unwrap()
    }

    fn record(is_leaf: bool, birth: f64, death: f64) -> ParticleRecord {
        ParticleRecord {
            id: 0,
            parent: None,
            depth: 0,
            birth_time: birth,
            death_time: death,
            theta: 0,
            kernel_index: 1,
            offspring_choice: if is_leaf { None } else { Some(0) },
            children: 1..1,
            increment: SampledIncrement { z: vec![], gamma: Complex64::ONE, light_cone_sign: None },
            position: vec![],
            parent_position: vec![],
            is_leaf,
        }
    }

    #[test]
    fn law_validation() {
        let ev = vec![OffspringEvent::new(1.0, vec![0])];
        assert!(BranchingLaw::scalar(0.0, vec![1.0], ev.clone()).is_err());
        assert!(BranchingLaw::scalar(1.0, vec![0.5, 0.4], ev.clone()).is_err());
        assert!(BranchingLaw::scalar(1.0, vec![1.0], vec![OffspringEvent::new(0.9, vec![0])]).is_err());
        assert!(BranchingLaw::scalar(1.0, vec![1.0], vec![OffspringEvent::new(1.0, vec![0, 1])]).is_err());
        assert!(BranchingLaw::scalar(1.0, vec![0.0, 1.0], ev).is_ok());
    }

    #[test]
    fn degenerate_law_gives_single_particle() {
        let law = BranchingLaw::scalar(1.0, vec![1.0], vec![OffspringEvent::new(1.0, vec![0])]).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..200 {
            let tree = grow_tree(&law, &heat(), 1.0, &[Complex64::ZERO], &mut rng, 10).unwrap();
            assert_eq!(tree.node_count(), 1);
            let root = &tree.particles[0];
            assert!(root.children.is_empty());
            assert!(root.death_time <= 1.0);
            assert_eq!(root.is_leaf, root.death_time == 1.0);
        }
    }

    #[test]
    fn tiny_horizon_is_almost_surely_a_leaf() {
        let law = quartic_law(1.0);
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let leaves = (0..10_000)
            .filter(|_| {
                let t = grow_tree(&law, &heat(), 1e-9, &[Complex64::ZERO], &mut rng, 100).unwrap();
                t.node_count() == 1 && t.particles[0].is_leaf
            })
            .count();
        assert_eq!(leaves, 10_000);
    }

    #[test]
    fn structure_invariants_hold() {
        let law = quartic_law(1.0);
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..2000 {
            let tree = grow_tree(&law, &heat(), 1.5, &[Complex64::new(0.3, 0.0)], &mut rng, 10_000).unwrap();
            let mut child_total = 0;
            for p in &tree.particles {
                assert!(p.birth_time <= p.death_time && p.death_time <= tree.horizon);
                if let Some(parent) = p.parent {
                    assert!(parent < p.id);
                    assert!(tree.particles[parent].children.contains(&p.id));
                    assert_eq!(p.birth_time, tree.particles[parent].death_time);
                    assert_eq!(p.parent_position, tree.particles[parent].position);
                }
                for (x, (x0, z)) in p.position.iter().zip(p.parent_position.iter().zip(&p.increment.z)) {
                    assert_eq!(*x, x0 + z);
                }
                if p.is_leaf {
                    assert_eq!(p.death_time, tree.horizon);
                    assert!(p.children.is_empty());
                } else {
                    assert_eq!(p.kernel_index, 1);
                    let j = p.offspring_choice.unwrap();
                    assert_eq!(p.children.len(), law.events(0)[j].total_children());
                }
                child_total += p.children.len();
            }
            assert_eq!(child_total, tree.node_count() - 1);
        }
    }

    #[test]
    fn same_seed_same_tree() {
        let law = quartic_law(1.0);
        let a = grow_tree(&law, &heat(), 1.0, &[Complex64::ZERO], &mut ChaCha8Rng::seed_from_u64(9), 1000).unwrap();
        let b = grow_tree(&law, &heat(), 1.0, &[Complex64::ZERO], &mut ChaCha8Rng::seed_from_u64(9), 1000).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.dump(), b.dump());
    }

    #[test]
    fn node_cap_reports_blow_up() {
        // Always three children: the population explodes.
        let law = BranchingLaw::scalar(5.0, vec![1.0], vec![OffspringEvent::new(1.0, vec![3])]).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let err = grow_tree(&law, &heat(), 10.0, &[Complex64::ZERO], &mut rng, 50).unwrap_err();
        assert!(matches!(err, Error::BlowUp { cap: 50, .. }), "{err:?}");
    }

    #[test]
    fn kernel_law_mismatch_rejected() {
        let law = quartic_law(1.0);
        let wave = KernelFamily::wave(1).unwrap();
        assert!(grow_tree(&law, &wave, 1.0, &[Complex64::ZERO], &mut ChaCha8Rng::seed_from_u64(0), 10).is_err());
        let law = BranchingLaw::scalar(1.0, vec![0.5, 0.5], vec![OffspringEvent::new(1.0, vec![0])]).unwrap();
        let err = grow_tree(&law, &wave, 1.0, &[Complex64::ZERO], &mut ChaCha8Rng::seed_from_u64(0), 10).unwrap_err();
        assert!(matches!(err, Error::UnsupportedKernel(_)));
    }

    #[test]
    fn weights_closed_form() {
        let law1 = quartic_law(1.0);
        let law2 = quartic_law(2.0);
        let law4 = quartic_law(4.0);
        assert_eq!(survival_weight(&record(true, 1.0, 1.0), &law1, 1.0).unwrap(), 1.0);
        assert!((survival_weight(&record(true, 0.0, 1.0), &law1, 1.0).unwrap() - std::f64::consts::E).abs() < 1e-15);
        assert!((survival_weight(&record(true, 0.5, 1.0), &law2, 1.0).unwrap() - std::f64::consts::E).abs() < 1e-15);
        assert_eq!(death_weight(&record(false, 0.2, 0.2), &law1).unwrap(), 1.0);
        assert!((death_weight(&record(false, 0.0, 2f64.ln()), &law1).unwrap() - 2.0).abs() < 1e-15);
        assert_eq!(death_weight(&record(false, 0.3, 0.3), &law4).unwrap(), 0.25);
        assert!(matches!(survival_weight(&record(false, 0.0, 0.5), &law1, 1.0), Err(Error::Contract(_))));
        assert!(matches!(death_weight(&record(true, 0.0, 1.0), &law1), Err(Error::Contract(_))));
    }
}
