//! The spherical minimum `M_{p,a,b}(ω)` for cross-sections given by a
//! polar-angle interval.
//!
//! For `p = 2` the minimum is `H² + λ1`, with `λ1` the first eigenvalue of
//! `−(w φ')' = λ w φ`, `w = cos^{k+a−1}θ sin^{d−k−1}θ`. For other `p` the
//! quotient `∫ w (φ'² + H²φ²)^{p/2} / ∫ w |φ|^p` is minimized directly.

mod discretization;
mod eigen;
mod plap;

use std::f64::consts::FRAC_PI_2;

use serde::{Deserialize, Serialize};

use crate::error::{HardyError, Result};
use crate::params::{cone_admissible, hardy_exponent, ConeSpec, HardyParams};
use crate::quadrature::{at_pole, at_sigma0};

pub use discretization::{graded_mesh, singular_exponent, Discretization, MeshOptions, QuadPoint};
pub use eigen::{
    smallest_eigenpair, smallest_eigenpair_from, DensePencil, EigenOptions, Eigenpair, Pencil, ShiftedSolve,
    SymTridiagonal, TridiagonalPencil,
};
pub use plap::{minimize_rayleigh_p, rayleigh_quotient_p, PMinOptions};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BoundaryCondition {
    Dirichlet,
    Natural,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AngularDomain {
    pub theta1: f64,
    pub theta2: f64,
    pub bc1: BoundaryCondition,
    pub bc2: BoundaryCondition,
}

impl AngularDomain {
    pub fn new(theta1: f64, theta2: f64, bc1: BoundaryCondition, bc2: BoundaryCondition) -> Result<Self> {
        let d = Self {
            theta1,
            theta2,
            bc1,
            bc2,
        };
        d.validate()?;
        Ok(d)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.theta1 >= 0.0 && self.theta1 < self.theta2 && self.theta2 <= FRAC_PI_2 + 1e-15) {
            return Err(HardyError::InvalidArgument(format!(
                "angular domain ({}, {}) must satisfy 0 <= θ1 < θ2 <= π/2",
                self.theta1, self.theta2
            )));
        }
        Ok(())
    }

    pub fn is_natural(&self) -> bool {
        self.bc1 == BoundaryCondition::Natural && self.bc2 == BoundaryCondition::Natural
    }
}

/// Nodal values of a continuous piecewise function on a mesh.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiscretizedFunction {
    pub mesh: Vec<f64>,
    pub values: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectralResult {
    #[serde(rename = "M")]
    pub m: f64,
    /// `M − H²`, only for `p = 2`.
    pub lambda: Option<f64>,
    pub minimizer: DiscretizedFunction,
    pub iterations: usize,
    pub residual: f64,
}

/// Angular interval and endpoint conditions of an axisymmetric cone.
///
/// `Σ0` sits at `θ = π/2`. It is a Dirichlet end for the complement of
/// `Σ0` and for the half space, unless `k + a ≥ p`, where it carries no
/// capacity and the condition is natural.
pub fn bc_for_cone(params: &HardyParams, cone: &ConeSpec) -> Result<AngularDomain> {
    let report = cone_admissible(params, cone);
    if !report.cone_admissible {
        return Err(HardyError::Inadmissible(report.notes.join("; ")));
    }
    use BoundaryCondition::{Dirichlet, Natural};
    let sigma0 = if report.superdegenerate { Natural } else { Dirichlet };
    let domain = match *cone {
        ConeSpec::FullSpace | ConeSpec::PuncturedSpace => AngularDomain::new(0.0, FRAC_PI_2, Natural, Natural)?,
        ConeSpec::ComplementSigma0 | ConeSpec::HalfSpace => AngularDomain::new(0.0, FRAC_PI_2, Natural, sigma0)?,
        ConeSpec::AxisymmetricBand { theta1, theta2 } => {
            let bc1 = if at_pole(theta1) { Natural } else { Dirichlet };
            // a band reaching π/2 contains Σ0 \ {0}
            let (theta2, bc2) = if at_sigma0(theta2) {
                (FRAC_PI_2, Natural)
            } else {
                (theta2, Dirichlet)
            };
            AngularDomain::new(theta1.max(0.0), theta2, bc1, bc2)?
        }
    };
    Ok(domain)
}

/// Stiffness `∫ w φ_i' φ_j'` and mass `∫ w φ_i φ_j` on the free nodes.
pub fn assemble_p2(disc: &Discretization) -> TridiagonalPencil {
    let n = disc.dofs();
    let mut k = SymTridiagonal::zeros(n);
    let mut m = SymTridiagonal::zeros(n);
    for e in 0..disc.elements() {
        let dofs = [disc.dof_of_node[e], disc.dof_of_node[e + 1]];
        let mut ke = [[0.0; 2]; 2];
        let mut me = [[0.0; 2]; 2];
        for q in disc.element_points(e) {
            let kw = q.stiffness_weight();
            for a in 0..2 {
                for b in 0..2 {
                    ke[a][b] += kw * q.dshape[a] * q.dshape[b];
                    me[a][b] += q.weight * q.shape[a] * q.shape[b];
                }
            }
        }
        for a in 0..2 {
            if let Some(i) = dofs[a] {
                k.diag[i] += ke[a][a];
                m.diag[i] += me[a][a];
            }
        }
        if let (Some(i), Some(j)) = (dofs[0], dofs[1]) {
            debug_assert_eq!(j, i + 1);
            k.off[i] += ke[0][1];
            m.off[i] += me[0][1];
        }
    }
    TridiagonalPencil { stiffness: k, mass: m }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
pub struct SolveOptions {
    pub mesh: MeshOptions,
    pub eigen: EigenOptions,
    pub pmin: PMinOptions,
}

/// `M_{p,a,b}(ω_C)` for an axisymmetric cone.
pub fn solve_m(params: &HardyParams, cone: &ConeSpec, mesh_size: usize) -> Result<SpectralResult> {
    solve_m_with(params, cone, mesh_size, &SolveOptions::default())
}

pub fn solve_m_with(
    params: &HardyParams,
    cone: &ConeSpec,
    mesh_size: usize,
    options: &SolveOptions,
) -> Result<SpectralResult> {
    let domain = bc_for_cone(params, cone)?;
    let disc = Discretization::with_options(params, &domain, mesh_size, &options.mesh)?;
    solve_on(params, &disc, options)
}

/// Solves on a prepared discretization, whatever its endpoint conditions.
pub fn solve_on(params: &HardyParams, disc: &Discretization, options: &SolveOptions) -> Result<SpectralResult> {
    let h = hardy_exponent(params);
    if disc.domain.is_natural() {
        // the gradient term vanishes on constants and the pointwise bound is attained
        let ones = vec![1.0; disc.dofs()];
        let norm = disc.lp_norm(&disc.expand(&ones), params.p());
        let values = vec![1.0 / norm; disc.dofs()];
        return Ok(SpectralResult {
            m: h.h_abs_p,
            lambda: (params.p() == 2.0).then_some(0.0),
            minimizer: disc.function(&values),
            iterations: 0,
            residual: 0.0,
        });
    }
    if params.p() == 2.0 {
        let pencil = assemble_p2(disc);
        let pair = smallest_eigenpair(&pencil, &options.eigen)?;
        return Ok(SpectralResult {
            m: pair.lambda + h.h * h.h,
            lambda: Some(pair.lambda),
            minimizer: disc.function(&pair.vector),
            iterations: pair.iterations,
            residual: pair.residual,
        });
    }
    let pencil = assemble_p2(disc);
    let pair = smallest_eigenpair(&pencil, &options.eigen)?;
    let mut init = disc.function(&pair.vector);
    if disc.domain.bc2 == BoundaryCondition::Dirichlet && at_sigma0(disc.domain.theta2) {
        // move the p = 2 profile onto the endpoint behaviour sin^m(π/2 − θ) of the p problem
        let m_p = singular_exponent(params).max(0.0);
        let m_2 = (2.0 - params.k_plus_a()).max(0.0);
        for (v, s) in init.values.iter_mut().zip(&disc.gaps) {
            if *s > 0.0 {
                *v = if m_2 > 0.0 {
                    *v * s.sin().powf(m_p - m_2)
                } else {
                    s.sin().powf(m_p)
                };
            }
        }
    }
    minimize_rayleigh_p(params, disc, &init, &options.pmin)
}

/// First eigenpair on the complement of `Σ0` for `p = 2`, `k + a < 2`:
/// `λ1 = (d − k)(2 − (k + a))`, `φ1 = cos^{2−(k+a)} θ`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClosedEigen {
    pub lambda1: f64,
    pub exponent: f64,
}

impl ClosedEigen {
    pub fn eval(&self, theta: f64) -> f64 {
        theta.cos().powf(self.exponent)
    }

    /// `cos^e θ` evaluated through `π/2 − θ`.
    pub fn eval_gap(&self, gap: f64) -> f64 {
        gap.sin().powf(self.exponent)
    }

    pub fn sample(&self, mesh: &[f64]) -> DiscretizedFunction {
        DiscretizedFunction {
            mesh: mesh.to_vec(),
            values: mesh.iter().map(|&t| self.eval_gap(FRAC_PI_2 - t)).collect(),
        }
    }
}

pub fn closed_eigen_sigma0(params: &HardyParams) -> Result<ClosedEigen> {
    if params.p() != 2.0 {
        return Err(HardyError::InvalidArgument(format!(
            "closed eigenpair needs p = 2, got {}",
            params.p()
        )));
    }
    let exponent = 2.0 - params.k_plus_a();
    if exponent <= 0.0 {
        return Err(HardyError::InvalidArgument(format!(
            "closed eigenpair needs k + a < 2, got {}",
            params.k_plus_a()
        )));
    }
    Ok(ClosedEigen {
        lambda1: (params.d() - params.k()) as f64 * exponent,
        exponent,
    })
}
