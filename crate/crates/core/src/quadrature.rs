//! Quadrature against the angular weight `w(θ) = cos^α(θ) sin^β(θ)` on
//! subintervals of `[0, π/2]`, with `α = k + a − 1` and `β = d − k − 1`.
//!
//! For functions of the polar angle alone,
//! `∫_{S^{d-1}} f |Πσ|^a dσ = prefactor · ∫ f(θ) w(θ) dθ`.
//! Endpoint singularities are absorbed into Gauss–Jacobi weights, either in
//! the variable `t = cos 2θ` (which turns `w dθ` into an exact Jacobi weight
//! on the whole quarter circle) or directly in `θ` on short elements.

use std::f64::consts::{FRAC_PI_2, PI};

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};
use statrs::function::beta::beta;
use statrs::function::gamma::ln_gamma;

use crate::error::{HardyError, Result};
use crate::params::{ConeSpec, HardyParams};

/// Default number of nodes for whole-interval rules.
pub const DEFAULT_RULE_SIZE: usize = 256;

/// Angles within this distance of `0` or `π/2` are treated as the endpoint.
const ENDPOINT_EPS: f64 = 1e-14;

pub(crate) fn at_sigma0(theta: f64) -> bool {
    (FRAC_PI_2 - theta).abs() <= ENDPOINT_EPS
}

pub(crate) fn at_pole(theta: f64) -> bool {
    theta.abs() <= ENDPOINT_EPS
}

/// `|S^n| = 2 π^{(n+1)/2} / Γ((n+1)/2)`.
pub fn sphere_surface_area(n: usize) -> f64 {
    let half = (n as f64 + 1.0) / 2.0;
    2.0 * (half * PI.ln() - ln_gamma(half)).exp()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AngularWeight {
    /// Exponent of `cos θ`, `k + a − 1`.
    pub alpha: f64,
    /// Exponent of `sin θ`, `d − k − 1`.
    pub beta_exp: f64,
    /// `|S^{k-1}| · |S^{d-k-1}|`, halved for the half space.
    pub prefactor: f64,
}

impl AngularWeight {
    /// The weight for cross-sections that are symmetric under `y ↦ −y`.
    pub fn for_params(params: &HardyParams) -> Self {
        let d = params.d();
        let k = params.k();
        Self {
            alpha: params.k_plus_a() - 1.0,
            beta_exp: (d - k - 1) as f64,
            prefactor: sphere_surface_area(k - 1) * sphere_surface_area(d - k - 1),
        }
    }

    pub fn for_cone(params: &HardyParams, cone: &ConeSpec) -> Self {
        let mut w = Self::for_params(params);
        if matches!(cone, ConeSpec::HalfSpace) {
            w.prefactor *= 0.5;
        }
        w
    }

    pub fn eval(&self, theta: f64) -> f64 {
        theta.cos().powf(self.alpha) * theta.sin().powf(self.beta_exp)
    }

    /// `∫_0^{π/2} w dθ = B((α+1)/2, (β+1)/2) / 2`.
    pub fn total_mass(&self) -> Result<f64> {
        if self.alpha <= -1.0 {
            return Err(HardyError::NonIntegrableWeight { alpha: self.alpha });
        }
        Ok(0.5 * beta((self.alpha + 1.0) / 2.0, (self.beta_exp + 1.0) / 2.0))
    }

    fn check_interval(&self, theta1: f64, theta2: f64) -> Result<()> {
        if !(theta1.is_finite() && theta2.is_finite())
            || theta1 < -ENDPOINT_EPS
            || theta2 > FRAC_PI_2 + ENDPOINT_EPS
            || theta1 >= theta2
        {
            return Err(HardyError::InvalidArgument(format!(
                "interval ({theta1}, {theta2}) is not a subinterval of [0, π/2]"
            )));
        }
        if at_sigma0(theta2) && self.alpha <= -1.0 {
            return Err(HardyError::NonIntegrableWeight { alpha: self.alpha });
        }
        if at_pole(theta1) && self.beta_exp <= -1.0 {
            return Err(HardyError::InvalidArgument(format!(
                "sin exponent {} is not integrable at θ = 0",
                self.beta_exp
            )));
        }
        Ok(())
    }
}

/// Gauss–Jacobi rule on `[-1, 1]` for the weight `(1 − x)^α (1 + x)^β`.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussJacobi {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
    /// `1 − x` per node, accurate near `x = 1`.
    pub one_minus: Vec<f64>,
    /// `1 + x` per node, accurate near `x = −1`.
    pub one_plus: Vec<f64>,
    pub alpha: f64,
    pub beta: f64,
}

/// A point of `(-1, 1)` stored by its distance `u` to the nearer endpoint.
#[derive(Debug, Clone, Copy)]
struct EndpointCoord {
    /// `+1` when measured from `x = 1`, `−1` from `x = −1`.
    side: f64,
    u: f64,
}

impl EndpointCoord {
    fn from_x(x: f64) -> Self {
        if x >= 0.0 {
            Self { side: 1.0, u: 1.0 - x }
        } else {
            Self { side: -1.0, u: 1.0 + x }
        }
    }

    fn x(self) -> f64 {
        self.side * (1.0 - self.u)
    }

    fn one_minus(self) -> f64 {
        if self.side > 0.0 {
            self.u
        } else {
            2.0 - self.u
        }
    }

    fn one_plus(self) -> f64 {
        if self.side > 0.0 {
            2.0 - self.u
        } else {
            self.u
        }
    }
}

/// `P_n^{(α,β)}` and `P_{n-1}^{(α,β)}` by the three-term recurrence, with
/// every affine factor in `x` rewritten in the endpoint distance.
fn jacobi_pair(n: usize, alpha: f64, beta: f64, at: EndpointCoord) -> (f64, f64) {
    if n == 0 {
        return (1.0, 0.0);
    }
    let (side, u) = (at.side, at.u);
    let mut prev = 1.0;
    let mut cur = if side > 0.0 {
        (alpha + 1.0) - (alpha + beta + 2.0) * u / 2.0
    } else {
        -(beta + 1.0) + (alpha + beta + 2.0) * u / 2.0
    };
    for k in 2..=n {
        let k = k as f64;
        let s = 2.0 * k + alpha + beta;
        let a1 = 2.0 * k * (k + alpha + beta) * (s - 2.0);
        let a2 = (s - 1.0) * (alpha * alpha - beta * beta);
        let a3 = (s - 2.0) * (s - 1.0) * s;
        let a4 = 2.0 * (k + alpha - 1.0) * (k + beta - 1.0) * s;
        // a2 + a3 x with x = side (1 − u)
        let lin = (a2 + side * a3) - side * a3 * u;
        let next = (lin * cur - a4 * prev) / a1;
        prev = cur;
        cur = next;
    }
    (cur, prev)
}

/// `dP_n/dx` from `P_n` and `P_{n-1}`.
fn jacobi_derivative(n: usize, alpha: f64, beta: f64, at: EndpointCoord, pn: f64, pnm1: f64) -> f64 {
    let nf = n as f64;
    let s = 2.0 * nf + alpha + beta;
    let lin = (alpha - beta - at.side * s) + at.side * s * at.u;
    (nf * lin * pn + 2.0 * (nf + alpha) * (nf + beta) * pnm1) / (s * at.one_minus() * at.one_plus())
}

impl GaussJacobi {
    /// Golub–Welsch nodes, polished by Newton steps on `P_n^{(α,β)}`, with
    /// weights from the closed-form derivative formula.
    pub fn new(n: usize, alpha: f64, beta: f64) -> Result<Self> {
        if n == 0 {
            return Err(HardyError::InvalidArgument("rule size must be positive".into()));
        }
        if !(alpha > -1.0 && beta > -1.0 && alpha.is_finite() && beta.is_finite()) {
            return Err(HardyError::InvalidArgument(format!(
                "Jacobi exponents must exceed -1, got ({alpha}, {beta})"
            )));
        }
        let ab = alpha + beta;
        let log_mu0 =
            (ab + 1.0) * std::f64::consts::LN_2 + ln_gamma(alpha + 1.0) + ln_gamma(beta + 1.0) - ln_gamma(ab + 2.0);
        if n == 1 {
            let x = (beta - alpha) / (ab + 2.0);
            return Ok(Self {
                nodes: vec![x],
                weights: vec![log_mu0.exp()],
                one_minus: vec![2.0 * (alpha + 1.0) / (ab + 2.0)],
                one_plus: vec![2.0 * (beta + 1.0) / (ab + 2.0)],
                alpha,
                beta,
            });
        }

        let mut jacobi = DMatrix::<f64>::zeros(n, n);
        jacobi[(0, 0)] = (beta - alpha) / (ab + 2.0);
        for i in 1..n {
            let fi = i as f64;
            let s = 2.0 * fi + ab;
            jacobi[(i, i)] = (beta * beta - alpha * alpha) / (s * (s + 2.0));
            let off2 = if i == 1 {
                4.0 * (1.0 + alpha) * (1.0 + beta) / ((2.0 + ab).powi(2) * (3.0 + ab))
            } else {
                4.0 * fi * (fi + alpha) * (fi + beta) * (fi + ab) / (s * s * (s + 1.0) * (s - 1.0))
            };
            jacobi[(i, i - 1)] = off2.sqrt();
            jacobi[(i - 1, i)] = off2.sqrt();
        }
        let mut nodes: Vec<f64> = jacobi.symmetric_eigenvalues().iter().copied().collect();
        nodes.sort_by(f64::total_cmp);

        let log_c =
            (ab + 1.0) * std::f64::consts::LN_2 + ln_gamma(n as f64 + alpha + 1.0) + ln_gamma(n as f64 + beta + 1.0)
                - ln_gamma(n as f64 + ab + 1.0)
                - ln_gamma(n as f64 + 1.0);
        let c = log_c.exp();

        let mut nodes_out = Vec::with_capacity(n);
        let mut weights = Vec::with_capacity(n);
        for i in 0..n {
            let lo = if i == 0 { -1.0 } else { nodes[i - 1] };
            let hi = if i + 1 == n { 1.0 } else { nodes[i + 1] };
            let mut at = EndpointCoord::from_x(nodes[i]);
            for _ in 0..6 {
                let (pn, pnm1) = jacobi_pair(n, alpha, beta, at);
                let dp = jacobi_derivative(n, alpha, beta, at, pn, pnm1);
                // x = side (1 − u), so du = −side dx
                let du = at.side * pn / dp;
                let cand = EndpointCoord {
                    side: at.side,
                    u: at.u + du,
                };
                if !cand.u.is_finite() || cand.u <= 0.0 || cand.x() <= lo || cand.x() >= hi {
                    break;
                }
                at = cand;
                if du.abs() <= 1e-16 * at.u {
                    break;
                }
            }
            let (pn, pnm1) = jacobi_pair(n, alpha, beta, at);
            let dp = jacobi_derivative(n, alpha, beta, at, pn, pnm1);
            let w = c / (at.one_minus() * at.one_plus() * dp * dp);
            if !(w.is_finite() && w > 0.0) {
                return Err(HardyError::NonFinite { theta: at.x() });
            }
            nodes_out.push(at);
            weights.push(w);
        }

        Ok(Self {
            nodes: nodes_out.iter().map(|c| c.x()).collect(),
            weights,
            one_minus: nodes_out.iter().map(|c| c.one_minus()).collect(),
            one_plus: nodes_out.iter().map(|c| c.one_plus()).collect(),
            alpha,
            beta,
        })
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }
}

/// The integration variable a rule is built in.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Substitution {
    /// `t = cos 2θ`; exact for polynomials in `cos 2θ` on `[0, π/2]`.
    DoubleAngleCosine,
    /// Affine in `θ`; the natural choice on finite-element cells.
    Angle,
}

/// Nodes in `θ` and positive weights that already include `w(θ) dθ`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuadratureRule {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
    /// `π/2 − θ` per node, accurate close to `Σ0`.
    pub gaps: Vec<f64>,
    pub order: usize,
}

impl QuadratureRule {
    /// `Σ weights · f(nodes)`; a non-finite sample is an error.
    pub fn integrate<F: Fn(f64) -> f64>(&self, f: F) -> Result<f64> {
        let mut acc = 0.0;
        for (&theta, &w) in self.nodes.iter().zip(&self.weights) {
            let v = f(theta);
            if !v.is_finite() {
                return Err(HardyError::NonFinite { theta });
            }
            acc += w * v;
        }
        Ok(acc)
    }

    /// `∫ w dθ` as seen by the rule.
    pub fn mass(&self) -> f64 {
        self.weights.iter().sum()
    }
}

/// Builds an `n`-point rule for `∫_{θ1}^{θ2} f(θ) w(θ) dθ` in the `cos 2θ` variable.
pub fn build_rule(weight: &AngularWeight, interval: (f64, f64), n: usize) -> Result<QuadratureRule> {
    build_rule_with(weight, interval, n, Substitution::DoubleAngleCosine)
}

pub fn build_rule_with(
    weight: &AngularWeight,
    interval: (f64, f64),
    n: usize,
    substitution: Substitution,
) -> Result<QuadratureRule> {
    let (theta1, theta2) = interval;
    weight.check_interval(theta1, theta2)?;
    let touches_pole = at_pole(theta1);
    let touches_sigma0 = at_sigma0(theta2);
    let mut rule = match substitution {
        Substitution::DoubleAngleCosine => {
            let exp_pole = (weight.beta_exp - 1.0) / 2.0;
            let exp_sigma0 = (weight.alpha - 1.0) / 2.0;
            let jac = GaussJacobi::new(
                n,
                if touches_pole { exp_pole } else { 0.0 },
                if touches_sigma0 { exp_sigma0 } else { 0.0 },
            )?;
            double_angle_rule(weight, theta1, theta2, &jac, touches_pole, touches_sigma0)
        }
        Substitution::Angle => {
            let refs = ReferenceRules::new(n, weight)?;
            refs.cell_rule(weight, theta1, theta2)
        }
    };
    rule.order = n;
    Ok(rule)
}

fn double_angle_rule(
    weight: &AngularWeight,
    theta1: f64,
    theta2: f64,
    jac: &GaussJacobi,
    touches_pole: bool,
    touches_sigma0: bool,
) -> QuadratureRule {
    let exp_pole = (weight.beta_exp - 1.0) / 2.0;
    let exp_sigma0 = (weight.alpha - 1.0) / 2.0;
    let t_hi = if touches_pole { 1.0 } else { (2.0 * theta1).cos() };
    let t_lo = if touches_sigma0 { -1.0 } else { (2.0 * theta2).cos() };
    let half = 0.5 * (t_hi - t_lo);
    let mut pts: Vec<(f64, f64, f64)> = (0..jac.len())
        .map(|i| {
            let wx = jac.weights[i];
            // 1 − t and 1 + t evaluated without cancellation at the touched ends.
            let one_minus_t = if touches_pole {
                half * jac.one_minus[i]
            } else {
                (1.0 - t_hi) + half * jac.one_minus[i]
            };
            let one_plus_t = if touches_sigma0 {
                half * jac.one_plus[i]
            } else {
                (1.0 + t_lo) + half * jac.one_plus[i]
            };
            let pole_factor = if touches_pole {
                half.powf(exp_pole)
            } else {
                one_minus_t.powf(exp_pole)
            };
            let sigma0_factor = if touches_sigma0 {
                half.powf(exp_sigma0)
            } else {
                one_plus_t.powf(exp_sigma0)
            };
            // w dθ = (1/4) ((1+t)/2)^{(α-1)/2} ((1-t)/2)^{(β-1)/2} dt
            let scale = 0.25 * 2f64.powf(-(exp_pole + exp_sigma0));
            let (sn, cs) = ((0.5 * one_minus_t).sqrt(), (0.5 * one_plus_t).sqrt());
            let theta = sn.atan2(cs);
            let gap = cs.atan2(sn);
            (theta, wx * half * scale * pole_factor * sigma0_factor, gap)
        })
        .collect();
    pts.sort_by(|l, r| l.0.total_cmp(&r.0));
    QuadratureRule {
        nodes: pts.iter().map(|p| p.0).collect(),
        weights: pts.iter().map(|p| p.1).collect(),
        gaps: pts.iter().map(|p| p.2).collect(),
        order: jac.len(),
    }
}

/// Reference rules on `[-1, 1]` reused across the cells of a mesh: plain
/// Gauss–Legendre for interior cells and Jacobi rules for cells touching a
/// singular endpoint.
#[derive(Debug, Clone)]
pub struct ReferenceRules {
    legendre: GaussJacobi,
    sigma0: Option<GaussJacobi>,
    pole: Option<GaussJacobi>,
}

impl ReferenceRules {
    pub fn new(n: usize, weight: &AngularWeight) -> Result<Self> {
        let legendre = GaussJacobi::new(n, 0.0, 0.0)?;
        let sigma0 = if weight.alpha > -1.0 && weight.alpha != 0.0 {
            Some(GaussJacobi::new(n, weight.alpha, 0.0)?)
        } else {
            None
        };
        let pole = if weight.beta_exp > -1.0 && weight.beta_exp.fract() != 0.0 {
            Some(GaussJacobi::new(n, 0.0, weight.beta_exp)?)
        } else {
            None
        };
        Ok(Self { legendre, sigma0, pole })
    }

    pub fn legendre(&self) -> &GaussJacobi {
        &self.legendre
    }

    /// Rule for `∫_{θa}^{θb} f w dθ`, affine in `θ`. Only one endpoint of a cell
    /// may be singular; cells spanning the whole quarter circle treat `θ = 0`
    /// as regular, which is exact when `d − k − 1` is a non-negative integer.
    pub fn cell_rule(&self, weight: &AngularWeight, theta_a: f64, theta_b: f64) -> QuadratureRule {
        let half = 0.5 * (theta_b - theta_a);
        let mid = 0.5 * (theta_a + theta_b);
        let sigma0_end = at_sigma0(theta_b);
        let pole_end = at_pole(theta_a) && !sigma0_end;
        let (reference, kind) = match (sigma0_end, pole_end) {
            (true, _) => match &self.sigma0 {
                Some(r) => (r, 1),
                None => (&self.legendre, 0),
            },
            (false, true) => match &self.pole {
                Some(r) => (r, 2),
                None => (&self.legendre, 0),
            },
            _ => (&self.legendre, 0),
        };
        let mut nodes = Vec::with_capacity(reference.len());
        let mut weights = Vec::with_capacity(reference.len());
        let mut gaps = Vec::with_capacity(reference.len());
        let right_gap = FRAC_PI_2 - theta_b;
        for i in 0..reference.len() {
            let (x, wx) = (reference.nodes[i], reference.weights[i]);
            let theta = mid + half * x;
            // π/2 − θ, measured from the right end of the cell
            let gap = right_gap + half * reference.one_minus[i];
            let w = match kind {
                1 => {
                    // cos θ = sin(u), u = half (1 − x)
                    let u = gap;
                    let sinc = if u == 0.0 { 1.0 } else { u.sin() / u };
                    half.powf(weight.alpha) * sinc.powf(weight.alpha) * gap.cos().powf(weight.beta_exp)
                }
                2 => {
                    let v = half * reference.one_plus[i];
                    let sinc = if v == 0.0 { 1.0 } else { v.sin() / v };
                    half.powf(weight.beta_exp) * sinc.powf(weight.beta_exp) * gap.sin().powf(weight.alpha)
                }
                _ => gap.sin().powf(weight.alpha) * gap.cos().powf(weight.beta_exp),
            };
            nodes.push(theta);
            weights.push(wx * half * w);
            gaps.push(gap);
        }
        QuadratureRule {
            nodes,
            gaps,
            weights,
            order: reference.len(),
        }
    }
}

/// `∫_{S^{d-1}} |Πσ|^a dσ`.
pub fn sphere_weight_mass(params: &HardyParams) -> Result<f64> {
    if params.k_plus_a() <= 0.0 {
        return Err(HardyError::NonIntegrableWeight {
            alpha: params.k_plus_a() - 1.0,
        });
    }
    let w = AngularWeight::for_params(params);
    Ok(w.prefactor * w.total_mass()?)
}
