//! Green-function samplers.
//!
//! For every supported operator family this module draws increments `Z` from
//! the normalised total-variation law `μₙ(t, ·)` of the Green function `gₙ(t, ·)`
//! and returns the density weight `γₙ(t, Z)` with `gₙ(t, dz) = γₙ(t, z) μₙ(t, dz)`.

mod beam;

use std::f64::consts::{FRAC_1_SQRT_2, PI};
use std::sync::Arc;

use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;

pub use beam::{fresnel, BeamTable, DEFAULT_RESOLUTION, DEFAULT_WINDOW};

use crate::error::{Error, Result};

/// One draw `Z ~ μ(Δt, ·)` together with its density weight.
#[derive(Debug, Clone, PartialEq)]
pub struct SampledIncrement {
    pub z: Vec<Complex64>,
    pub gamma: Complex64,
    /// `±1` for draws on the light cone of the one-dimensional wave gradient kernel.
    pub light_cone_sign: Option<i8>,
}

/// How a particle samples its increment.
///
/// `Value` particles use `μₙ`, `Gradient` particles the gradient kernel `μ¹ₙ`,
/// and `Conjugate` particles the complex-conjugate law (the `u*` component of a
/// Schrödinger system).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ParticleRole {
    Value,
    Gradient,
    Conjugate,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum KernelKind {
    /// `∂ₜu = Δu`, one level.
    Heat { dim: usize },
    /// `∂ₜ²u = Δu`, two levels; only `g₂` is sampled.
    Wave { dim: usize },
    /// `∂ₜ²u + ∂ₓ⁴u = 0` in one dimension; only `g₂` is sampled.
    Beam,
    /// `i∂ₜu = −½Δu`, one level, sampled by analytic continuation.
    Schrodinger { dim: usize },
}

#[derive(Debug, Clone)]
pub struct KernelFamily {
    kind: KernelKind,
    beam_table: Option<Arc<BeamTable>>,
}

impl KernelFamily {
    pub fn heat(dim: usize) -> Result<Self> {
        check_dim(dim)?;
        Ok(Self { kind: KernelKind::Heat { dim }, beam_table: None })
    }

    pub fn wave(dim: usize) -> Result<Self> {
        if !(1..=3).contains(&dim) {
            return Err(Error::UnsupportedKernel(format!(
                "wave Green function sampler exists for d ∈ {{1, 2, 3}}, got d = {dim}"
            )));
        }
        Ok(Self { kind: KernelKind::Wave { dim }, beam_table: None })
    }

    /// Beam kernel. Sampling without a table is a state error.
    pub fn beam(table: Option<Arc<BeamTable>>) -> Self {
        Self { kind: KernelKind::Beam, beam_table: table }
    }

    pub fn schrodinger(dim: usize) -> Result<Self> {
        check_dim(dim)?;
        Ok(Self { kind: KernelKind::Schrodinger { dim }, beam_table: None })
    }

    pub fn kind(&self) -> KernelKind {
        self.kind
    }

    pub fn dim(&self) -> usize {
        match self.kind {
            KernelKind::Heat { dim } | KernelKind::Wave { dim } | KernelKind::Schrodinger { dim } => dim,
            KernelKind::Beam => 1,
        }
    }

    /// Number of initial conditions `N` (order of the time derivative).
    pub fn n_levels(&self) -> usize {
        match self.kind {
            KernelKind::Heat { .. } | KernelKind::Schrodinger { .. } => 1,
            KernelKind::Wave { .. } | KernelKind::Beam => 2,
        }
    }

    pub fn beam_table(&self) -> Option<&Arc<BeamTable>> {
        self.beam_table.as_ref()
    }

    /// Whether `(level, role)` has a sampler. Levels are 1-based.
    pub fn supports(&self, level: usize, role: ParticleRole) -> bool {
        use KernelKind::*;
        use ParticleRole::*;
        matches!(
            (self.kind, level, role),
            (Heat { .. }, 1, Value)
                | (Wave { .. }, 2, Value)
                | (Wave { dim: 1 }, 2, Gradient)
                | (Beam, 2, Value)
                | (Schrodinger { .. }, 1, Value | Conjugate)
        )
    }

    /// Draws from `μ_level(dt, ·)` (or its gradient / conjugate variant).
    pub fn sample<R: Rng + ?Sized>(
        &self,
        level: usize,
        role: ParticleRole,
        dt: f64,
        rng: &mut R,
    ) -> Result<SampledIncrement> {
        use KernelKind::*;
        use ParticleRole::*;
        match (self.kind, level, role) {
            (Heat { dim }, 1, Value) => sample_heat(dim, dt, rng),
            (Wave { dim }, 2, Value) => sample_wave(dim, dt, rng),
            (Wave { dim: 1 }, 2, Gradient) => sample_wave_gradient(dt, rng),
            (Beam, 2, Value) => match &self.beam_table {
                Some(table) => sample_beam(table, dt, rng),
                None => Err(Error::State("beam kernel sampled before its table was built".into())),
            },
            (Schrodinger { dim }, 1, Value) => sample_schrodinger(dim, dt, false, rng),
            (Schrodinger { dim }, 1, Conjugate) => sample_schrodinger(dim, dt, true, rng),
            (kind, level, role) => Err(Error::UnsupportedKernel(format!(
                "no {role:?} sampler for level {level} of {kind:?}"
            ))),
        }
    }

    /// `sup_z |γ_level(dt, z)|` for a given role, used by the moment bounds.
    pub fn gamma_sup(&self, level: usize, role: ParticleRole, dt: f64) -> Option<f64> {
        if !self.supports(level, role) {
            return None;
        }
        Some(match (self.kind, role) {
            (_, ParticleRole::Gradient) => 1.0,
            (KernelKind::Wave { .. }, _) => dt,
            (KernelKind::Beam, _) => dt * self.beam_table.as_ref()?.l1_norm(),
            _ => 1.0,
        })
    }
}

fn check_dim(dim: usize) -> Result<()> {
    if dim == 0 {
        return Err(Error::InvalidArgument("dimension must be at least 1".into()));
    }
    Ok(())
}

fn check_dt(dt: f64) -> Result<()> {
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(Error::InvalidArgument(format!("time step must be positive, got {dt}")));
    }
    Ok(())
}

fn real(x: f64) -> Complex64 {
    Complex64::new(x, 0.0)
}

/// Heat kernel: `Z = √(2Δt)·N(0, I_d)`, `γ = 1`.
pub fn sample_heat<R: Rng + ?Sized>(dim: usize, dt: f64, rng: &mut R) -> Result<SampledIncrement> {
    check_dim(dim)?;
    check_dt(dt)?;
    let scale = (2.0 * dt).sqrt();
    let z = (0..dim)
        .map(|_| real(scale * rng.sample::<f64, _>(StandardNormal)))
        .collect();
    Ok(SampledIncrement { z, gamma: Complex64::ONE, light_cone_sign: None })
}

/// Wave kernel `g₂`: `Z = Δt·Y`, `γ = Δt`, with `Y` uniform on `[−1, 1]` (d = 1),
/// of density `(2π)⁻¹(1 − |y|²)^{−1/2}` on the unit disk (d = 2), or uniform on
/// the unit sphere (d = 3).
pub fn sample_wave<R: Rng + ?Sized>(dim: usize, dt: f64, rng: &mut R) -> Result<SampledIncrement> {
    check_dt(dt)?;
    let z = match dim {
        1 => vec![real(dt * (2.0 * rng.random::<f64>() - 1.0))],
        2 => {
            let u1: f64 = rng.random();
            let u2: f64 = rng.random();
            let radius = (1.0 - u1 * u1).sqrt();
            let (sin, cos) = (2.0 * PI * u2).sin_cos();
            vec![real(dt * radius * cos), real(dt * radius * sin)]
        }
        3 => {
            let u1: f64 = rng.random();
            let u2: f64 = rng.random();
            let height = 2.0 * u2 - 1.0;
            let radius = (1.0 - height * height).sqrt();
            let (sin, cos) = (2.0 * PI * u1).sin_cos();
            vec![real(dt * radius * cos), real(dt * radius * sin), real(dt * height)]
        }
        _ => {
            return Err(Error::UnsupportedKernel(format!(
                "wave Green function sampler exists for d ∈ {{1, 2, 3}}, got d = {dim}"
            )))
        }
    };
    Ok(SampledIncrement { z, gamma: real(dt), light_cone_sign: None })
}

/// Gradient of the one-dimensional wave kernel: `Z = ±Δt` with probability ½,
/// weight `+1` on the forward and `−1` on the backward edge of the light cone.
pub fn sample_wave_gradient<R: Rng + ?Sized>(dt: f64, rng: &mut R) -> Result<SampledIncrement> {
    check_dt(dt)?;
    let sign: i8 = if rng.random::<bool>() { 1 } else { -1 };
    Ok(SampledIncrement {
        z: vec![real(f64::from(sign) * dt)],
        gamma: real(f64::from(sign)),
        light_cone_sign: Some(sign),
    })
}

/// Beam kernel: `Z = √Δt·Y` with `Y ~ |G| / ‖G‖₁`, `γ = Δt·sgn(G(Y))·‖G‖₁`.
pub fn sample_beam<R: Rng + ?Sized>(table: &BeamTable, dt: f64, rng: &mut R) -> Result<SampledIncrement> {
    check_dt(dt)?;
    let y = table.quantile(rng.random());
    let sign = if table.value(y) >= 0.0 { 1.0 } else { -1.0 };
    Ok(SampledIncrement {
        z: vec![real(dt.sqrt() * y)],
        gamma: real(dt * sign * table.l1_norm()),
        light_cone_sign: None,
    })
}

/// Free Schrödinger kernel by contour rotation: `Z = e^{±iπ/4}√Δt·N(0, I_d)`, `γ = 1`.
/// `conjugate` selects the `e^{−iπ/4}` branch used by `u*` particles.
pub fn sample_schrodinger<R: Rng + ?Sized>(
    dim: usize,
    dt: f64,
    conjugate: bool,
    rng: &mut R,
) -> Result<SampledIncrement> {
    check_dim(dim)?;
    check_dt(dt)?;
    let rotation = Complex64::new(FRAC_1_SQRT_2, if conjugate { -FRAC_1_SQRT_2 } else { FRAC_1_SQRT_2 });
    let scale = dt.sqrt();
    let z = (0..dim)
        .map(|_| rotation * (scale * rng.sample::<f64, _>(StandardNormal)))
        .collect();
    Ok(SampledIncrement { z, gamma: Complex64::ONE, light_cone_sign: None })
}
