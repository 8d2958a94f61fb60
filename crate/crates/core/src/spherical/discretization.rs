//! Graded meshes on a polar-angle interval and the per-element quadrature
//! shared by assembly, quotient evaluation and the verifier.

use std::f64::consts::FRAC_PI_2;

use serde::{Deserialize, Serialize};

use crate::error::{HardyError, Result};
use crate::params::HardyParams;
use crate::quadrature::{at_pole, at_sigma0, AngularWeight, GaussJacobi, ReferenceRules};

use super::{AngularDomain, BoundaryCondition, DiscretizedFunction};

/// Number of dyadic layers in the composite rule on the element touching `Σ0`.
const GEOMETRIC_LAYERS: usize = 60;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeshOptions {
    /// Grading exponent `γ` toward `θ = π/2`.
    pub grading: f64,
    /// Gauss points per element.
    pub points_per_element: usize,
    /// Use shape functions linear in `(π/2 − θ)^m` when `π/2` carries a
    /// Dirichlet condition with singular exponent `m > 0`.
    pub singular_map: bool,
}

impl Default for MeshOptions {
    fn default() -> Self {
        Self {
            grading: 2.0,
            points_per_element: 8,
            singular_map: true,
        }
    }
}

/// Exponent of the expected behaviour `(π/2 − θ)^m` of a minimizer that
/// vanishes on `Σ0`: `m = (p − (k + a)) / (p − 1)`.
pub fn singular_exponent(params: &HardyParams) -> f64 {
    (params.p() - params.k_plus_a()) / (params.p() - 1.0)
}

/// Nodes `θ_j` of a mesh with `n` elements, returned with `π/2 − θ_j`.
/// Meshes reaching `π/2` are graded as `π/2 − θ_j = (π/2 − θ1)(1 − j/n)^γ`.
pub fn graded_mesh(theta1: f64, theta2: f64, n: usize, grading: f64) -> (Vec<f64>, Vec<f64>) {
    let mut theta = Vec::with_capacity(n + 1);
    let mut gaps = Vec::with_capacity(n + 1);
    if at_sigma0(theta2) {
        let span = FRAC_PI_2 - theta1;
        for j in 0..=n {
            let s = span * (1.0 - j as f64 / n as f64).powf(grading);
            gaps.push(s);
            theta.push(FRAC_PI_2 - s);
        }
        theta[0] = theta1;
        theta[n] = FRAC_PI_2;
        gaps[n] = 0.0;
    } else {
        for j in 0..=n {
            let t = theta1 + (theta2 - theta1) * j as f64 / n as f64;
            theta.push(t);
            gaps.push(FRAC_PI_2 - t);
        }
        theta[n] = theta2;
        gaps[n] = FRAC_PI_2 - theta2;
    }
    (theta, gaps)
}

/// A quadrature point with the values and derivatives of the two shape
/// functions of its element.
///
/// Derivatives are taken in the element's local coordinate `ξ`, with
/// `dξ/dθ = exp(ln_slope) > 0`. Near `Σ0` on mapped elements the weight
/// underflows while `θ`-derivatives overflow, so energy terms are evaluated
/// in rescaled form: with `T = max(1, dξ/dθ)`,
/// `ω (φ_θ² + h² φ²)^{p/2} = eweight · ((dscale φ_ξ)² + h² (vscale φ)²)^{p/2}`,
/// where `eweight = ω T^p`, `dscale = (dξ/dθ)/T`, `vscale = 1/T`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuadPoint {
    pub theta: f64,
    /// `π/2 − θ`, accurate near `Σ0`; may underflow to 0.
    pub gap: f64,
    /// `ω`: `w(θ)` times the Jacobian of the element map and the rule weight.
    pub weight: f64,
    pub ln_weight: f64,
    pub ln_slope: f64,
    pub eweight: f64,
    pub dscale: f64,
    pub vscale: f64,
    pub shape: [f64; 2],
    pub dshape: [f64; 2],
}

impl QuadPoint {
    fn new(theta: f64, gap: f64, ln_weight: f64, ln_slope: f64, shape: [f64; 2], dshape: [f64; 2], p: f64) -> Self {
        let ln_t = ln_slope.max(0.0);
        Self {
            theta,
            gap,
            weight: ln_weight.exp(),
            ln_weight,
            ln_slope,
            eweight: (ln_weight + p * ln_t).exp(),
            dscale: (ln_slope - ln_t).exp(),
            vscale: (-ln_t).exp(),
            shape,
            dshape,
        }
    }

    /// `dφ/dθ` from the local derivative; may overflow next to `Σ0`.
    pub fn theta_derivative(&self, dv: f64) -> f64 {
        dv * self.ln_slope.exp()
    }

    /// `ω (dξ/dθ)²`, the weight of a product of two local derivatives in
    /// the quadratic energy.
    pub fn stiffness_weight(&self) -> f64 {
        (self.ln_weight + 2.0 * self.ln_slope).exp()
    }

    /// `ω (φ_θ² + h2 φ²)^{p/2}` for the value `v` and local derivative `dv`.
    pub fn energy(&self, v: f64, dv: f64, h2: f64, p: f64) -> f64 {
        let x = dv * self.dscale;
        let y = v * self.vscale;
        self.eweight * (x * x + h2 * y * y).powf(0.5 * p)
    }
}

/// Per-element quadrature on a mesh, with the degrees of freedom left after
/// eliminating Dirichlet nodes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Discretization {
    pub domain: AngularDomain,
    pub weight: AngularWeight,
    /// Exponent the energy scaling of the points was built for.
    pub p: f64,
    pub mesh: Vec<f64>,
    pub gaps: Vec<f64>,
    /// Exponent `m` of the singular map, or `None` for plain P1 elements.
    pub map_exponent: Option<f64>,
    /// Points of element `e` are `points[offsets[e]..offsets[e + 1]]`.
    pub offsets: Vec<usize>,
    pub points: Vec<QuadPoint>,
    /// Node index of each degree of freedom.
    pub free: Vec<usize>,
    /// Degree of freedom of each node, `None` on Dirichlet nodes.
    pub dof_of_node: Vec<Option<usize>>,
}

impl Discretization {
    pub fn new(params: &HardyParams, domain: &AngularDomain, n: usize) -> Result<Self> {
        Self::with_options(params, domain, n, &MeshOptions::default())
    }

    pub fn with_options(params: &HardyParams, domain: &AngularDomain, n: usize, options: &MeshOptions) -> Result<Self> {
        domain.validate()?;
        if n < 2 {
            return Err(HardyError::InvalidArgument(format!(
                "mesh needs at least 2 elements, got {n}"
            )));
        }
        if options.points_per_element == 0 || !(options.grading >= 1.0) {
            return Err(HardyError::InvalidArgument(
                "mesh options need a positive point count and grading >= 1".into(),
            ));
        }
        let weight = AngularWeight::for_params(params);
        let p = params.p();
        let touches_sigma0 = at_sigma0(domain.theta2);
        let m = singular_exponent(params);
        let map_exponent =
            (options.singular_map && touches_sigma0 && domain.bc2 == BoundaryCondition::Dirichlet && m > 0.0)
                .then_some(m);
        // with k + a <= 0 only functions vanishing like ρ on Σ0 have finite
        // mass, which the mapped elements represent and P1 elements do not
        if touches_sigma0 && weight.alpha <= -1.0 && map_exponent.is_none() {
            return Err(HardyError::NonIntegrableWeight { alpha: weight.alpha });
        }
        let grading = if touches_sigma0 { options.grading } else { 1.0 };
        let (mesh, gaps) = graded_mesh(domain.theta1, domain.theta2, n, grading);

        let refs = ReferenceRules::new(options.points_per_element, &weight)?;
        let legendre = refs.legendre().clone();
        // the mass density in ρ is ρ^{c−1} and the energy density is flat;
        // layers shrink so that each sees a bounded variation of the former,
        // and the rest down to ρ = 0 is one Jacobi cell
        let layers = match map_exponent {
            Some(m) => {
                let c = (weight.alpha + 1.0) / m;
                // for c <= 0 the free shape functions carry ρ^{c+1}, negligible on the tail
                let tail_exponent = if c > 0.0 && c < 4.0 { c - 1.0 } else { 0.0 };
                let tail = GaussJacobi::new(options.points_per_element, 0.0, tail_exponent)?;
                Some(Layers {
                    ratio: 2f64.powf(1.0 / (c / 4.0).max(1.0)),
                    tail,
                })
            }
            None => None,
        };
        let mut offsets = vec![0];
        let mut points = Vec::new();
        for e in 0..n {
            match map_exponent {
                Some(m) => mapped_element(
                    &weight,
                    &legendre,
                    layers.as_ref().unwrap(),
                    &gaps,
                    e,
                    m,
                    p,
                    &mut points,
                ),
                None => linear_element(&weight, &refs, &mesh, &gaps, e, p, &mut points),
            }
            offsets.push(points.len());
        }

        let mut dof_of_node = vec![None; n + 1];
        let mut free = Vec::with_capacity(n + 1);
        for (j, slot) in dof_of_node.iter_mut().enumerate() {
            let pinned = (j == 0 && domain.bc1 == BoundaryCondition::Dirichlet)
                || (j == n && domain.bc2 == BoundaryCondition::Dirichlet);
            if !pinned {
                *slot = Some(free.len());
                free.push(j);
            }
        }
        if free.is_empty() {
            return Err(HardyError::InvalidArgument("no free degrees of freedom".into()));
        }

        Ok(Self {
            domain: *domain,
            weight,
            p,
            mesh,
            gaps,
            map_exponent,
            offsets,
            points,
            free,
            dof_of_node,
        })
    }

    pub fn elements(&self) -> usize {
        self.mesh.len() - 1
    }

    pub fn dofs(&self) -> usize {
        self.free.len()
    }

    pub fn element_points(&self, e: usize) -> &[QuadPoint] {
        &self.points[self.offsets[e]..self.offsets[e + 1]]
    }

    /// Nodal values with zeros on Dirichlet nodes.
    pub fn expand(&self, dofs: &[f64]) -> Vec<f64> {
        let mut nodal = vec![0.0; self.mesh.len()];
        for (i, &j) in self.free.iter().enumerate() {
            nodal[j] = dofs[i];
        }
        nodal
    }

    pub fn restrict(&self, nodal: &[f64]) -> Vec<f64> {
        self.free.iter().map(|&j| nodal[j]).collect()
    }

    pub fn function(&self, dofs: &[f64]) -> DiscretizedFunction {
        DiscretizedFunction {
            mesh: self.mesh.clone(),
            values: self.expand(dofs),
        }
    }

    /// Calls `f(point, φ, φ_ξ)` at every quadrature point for nodal values
    /// `nodal`; `φ_ξ` is the derivative in the element coordinate.
    pub fn for_each_point<F: FnMut(&QuadPoint, f64, f64)>(&self, nodal: &[f64], mut f: F) {
        for e in 0..self.elements() {
            let (u0, u1) = (nodal[e], nodal[e + 1]);
            for q in self.element_points(e) {
                let v = u0 * q.shape[0] + u1 * q.shape[1];
                let dv = u0 * q.dshape[0] + u1 * q.dshape[1];
                f(q, v, dv);
            }
        }
    }

    /// `∫ w g(θ, φ, φ_θ) dθ` for nodal values of a discrete function. The
    /// derivative is formed explicitly; use [`Discretization::energy`] for
    /// energies of functions that vanish on `Σ0`.
    pub fn integrate<F: Fn(f64, f64, f64) -> f64>(&self, nodal: &[f64], g: F) -> Result<f64> {
        let mut acc = 0.0;
        let mut bad = None;
        self.for_each_point(nodal, |q, v, dv| {
            if q.weight == 0.0 {
                return;
            }
            let y = g(q.theta, v, q.theta_derivative(dv));
            if !y.is_finite() && bad.is_none() {
                bad = Some(q.theta);
            }
            acc += q.weight * y;
        });
        match bad {
            Some(theta) => Err(HardyError::NonFinite { theta }),
            None => Ok(acc),
        }
    }

    /// `∫ w dθ` over the domain as seen by the element rules.
    pub fn mass(&self) -> f64 {
        self.points.iter().map(|q| q.weight).sum()
    }

    /// Weighted `L^p` norm `(∫ w |φ|^p)^{1/p}`.
    pub fn lp_norm(&self, nodal: &[f64], p: f64) -> f64 {
        let mut acc = 0.0;
        self.for_each_point(nodal, |q, v, _| acc += q.weight * v.abs().powf(p));
        acc.powf(1.0 / p)
    }

    /// `∫ w (φ_θ² + h2 φ²)^{p/2}` with the exponent `p` of the discretization.
    pub fn energy(&self, nodal: &[f64], h2: f64) -> f64 {
        let mut acc = 0.0;
        self.for_each_point(nodal, |q, v, dv| acc += q.energy(v, dv, h2, self.p));
        acc
    }
}

fn linear_element(
    weight: &AngularWeight,
    refs: &ReferenceRules,
    mesh: &[f64],
    gaps: &[f64],
    e: usize,
    p: f64,
    out: &mut Vec<QuadPoint>,
) {
    let (ta, tb) = (mesh[e], mesh[e + 1]);
    // element length from the gaps keeps digits near π/2
    let h = gaps[e] - gaps[e + 1];
    let rule = refs.cell_rule(weight, ta, tb);
    for i in 0..rule.nodes.len() {
        let theta = rule.nodes[i];
        let gap = rule.gaps[i];
        let right = (gaps[e] - gap) / h;
        out.push(QuadPoint::new(
            theta,
            gap,
            rule.weights[i].ln(),
            0.0,
            [1.0 - right, right],
            [-1.0 / h, 1.0 / h],
            p,
        ));
    }
    // a cell at θ = 0 is regular since the sine exponent is a non-negative integer
    debug_assert!(!at_pole(ta) || weight.beta_exp.fract() == 0.0);
}

/// Element with shape functions linear in `ρ = s^m`, `s = π/2 − θ`,
/// integrated in `ρ`. The element touching `s = 0` is split into dyadic
/// layers, on each of which the integrands are smooth.
struct Layers {
    /// Ratio `ρ_hi / ρ_lo` of one layer.
    ratio: f64,
    tail: GaussJacobi,
}

#[allow(clippy::too_many_arguments)]
fn mapped_element(
    weight: &AngularWeight,
    legendre: &GaussJacobi,
    layers: &Layers,
    gaps: &[f64],
    e: usize,
    m: f64,
    p: f64,
    out: &mut Vec<QuadPoint>,
) {
    let (sa, sb) = (gaps[e], gaps[e + 1]);
    let (ra, rb) = (sa.powf(m), sb.powf(m));
    let dr = ra - rb;
    let ln_m = m.ln();
    let mut layer = |rule: &GaussJacobi, lo: f64, hi: f64| {
        let half = 0.5 * (hi - lo);
        for j in 0..rule.nodes.len() {
            // `factor` divides out the Jacobi weight built into `rule`
            let factor = if rule.beta == 0.0 {
                1.0
            } else {
                rule.one_plus[j].powf(-rule.beta)
            };
            let rho = lo + half * rule.one_plus[j];
            let ln_rho = rho.ln();
            let ln_s = ln_rho / m;
            let s = ln_s.exp();
            let sinc = if s < 1e-4 { 1.0 - s * s / 6.0 } else { s.sin() / s };
            let mut ln_w = weight.alpha * (ln_s + sinc.ln());
            if weight.beta_exp != 0.0 {
                ln_w += weight.beta_exp * s.cos().ln();
            }
            // ds/dρ = s / (m ρ); dρ/dθ = −m ρ / s
            let ln_jac = ln_s - ln_m - ln_rho;
            let ln_slope = ln_m + ln_rho - ln_s;
            out.push(QuadPoint::new(
                FRAC_PI_2 - s,
                s,
                (rule.weights[j] * factor * half).ln() + ln_jac + ln_w,
                ln_slope,
                [(rho - rb) / dr, (ra - rho) / dr],
                // local coordinate ξ = −ρ increases with θ
                [-1.0 / dr, 1.0 / dr],
                p,
            ));
        }
    };
    if sb == 0.0 {
        let mut hi = ra;
        for _ in 0..GEOMETRIC_LAYERS {
            let lo = hi / layers.ratio;
            layer(legendre, lo, hi);
            hi = lo;
        }
        layer(&layers.tail, 0.0, hi);
    } else {
        let mut lo = rb;
        while lo < ra {
            let hi = (layers.ratio * lo).min(ra);
            layer(legendre, lo, hi);
            lo = hi;
        }
    }
}
