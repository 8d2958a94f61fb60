//! Direct minimization of the discrete quotient
//! `Q(φ) = ∫ w (φ'² + H²φ²)^{p/2} / ∫ w |φ|^p`.

use serde::{Deserialize, Serialize};

use crate::error::{HardyError, Result};
use crate::params::{hardy_exponent, HardyParams};

use super::discretization::Discretization;
use super::eigen::{ShiftedSolve, SymTridiagonal};
use super::{DiscretizedFunction, SpectralResult};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PMinOptions {
    /// Bound on the relative decrease of `Q` over one step.
    pub rel_tol: f64,
    /// Bound on the preconditioned gradient norm relative to `Q`.
    pub grad_tol: f64,
    pub max_iter: usize,
}

impl Default for PMinOptions {
    fn default() -> Self {
        Self {
            rel_tol: 1e-9,
            grad_tol: 1e-7,
            max_iter: 100_000,
        }
    }
}

/// Numerator and denominator of the discrete quotient for nodal values.
pub fn rayleigh_quotient_p(params: &HardyParams, disc: &Discretization, nodal: &[f64]) -> (f64, f64) {
    let p = params.p();
    let h2 = hardy_exponent(params).h.powi(2);
    let mut num = 0.0;
    let mut den = 0.0;
    disc.for_each_point(nodal, |q, v, dv| {
        num += q.energy(v, dv, h2, p);
        den += q.weight * v.abs().powf(p);
    });
    (num, den)
}

struct Local {
    num: f64,
    den: f64,
    g_num: Vec<f64>,
    g_den: Vec<f64>,
    /// `∇²N + ∇²D`, with small floors where the integrands degenerate.
    hess: SymTridiagonal,
}

impl Local {
    fn quotient(&self) -> f64 {
        self.num / self.den
    }
}

fn local_model(params: &HardyParams, disc: &Discretization, u: &[f64]) -> Local {
    let p = params.p();
    let h2 = hardy_exponent(params).h.powi(2);
    let nodal = disc.expand(u);
    let (num, den) = rayleigh_quotient_p(params, disc, &nodal);

    let n = disc.dofs();
    let mut g_num = vec![0.0; n];
    let mut g_den = vec![0.0; n];
    let mut hess = SymTridiagonal::zeros(n);
    for e in 0..disc.elements() {
        let dofs = [disc.dof_of_node[e], disc.dof_of_node[e + 1]];
        let (u0, u1) = (nodal[e], nodal[e + 1]);
        for q in disc.element_points(e) {
            let v = u0 * q.shape[0] + u1 * q.shape[1];
            let dv = u0 * q.dshape[0] + u1 * q.dshape[1];
            // rescaled energy variables, see `QuadPoint`
            let x = dv * q.dscale;
            let y = v * q.vscale;
            let ds = [q.dshape[0] * q.dscale, q.dshape[1] * q.dscale];
            let ns = [q.shape[0] * q.vscale, q.shape[1] * q.vscale];
            let energy = x * x + h2 * y * y;
            let g = if energy > 0.0 { energy.powf(0.5 * p - 1.0) } else { 0.0 };
            let gv = if v != 0.0 { v.abs().powf(p - 2.0) * v } else { 0.0 };
            // floors relative to the local scale; a global one would swamp
            // the graded elements
            let size = u0 * u0 + u1 * u1;
            let v_floor = 1e-14 * size * (q.shape[0].powi(2) + q.shape[1].powi(2));
            let e_floor = 1e-14 * size * (ds[0].powi(2) + ds[1].powi(2) + h2 * (ns[0].powi(2) + ns[1].powi(2)));
            let g_reg = (energy + e_floor).powf(0.5 * p - 1.0);
            let v_reg = (v * v + v_floor).powf(0.5 * p - 1.0);
            for a in 0..2 {
                let Some(i) = dofs[a] else { continue };
                let va = x * ds[a] + h2 * y * ns[a];
                g_num[i] += p * q.eweight * g * va;
                g_den[i] += p * q.weight * gv * q.shape[a];
                for b in a..2 {
                    let Some(j) = dofs[b] else { continue };
                    let vb = x * ds[b] + h2 * y * ns[b];
                    let entry = p
                        * (q.eweight
                            * (g_reg * (ds[a] * ds[b] + h2 * ns[a] * ns[b])
                                + (p - 2.0) * g_reg / (energy + e_floor) * va * vb)
                            + q.weight * (p - 1.0) * v_reg * q.shape[a] * q.shape[b]);
                    if i == j {
                        hess.diag[i] += entry;
                    } else {
                        hess.off[i.min(j)] += entry;
                    }
                }
            }
        }
    }
    Local {
        num,
        den,
        g_num,
        g_den,
        hess,
    }
}

fn normalize(params: &HardyParams, disc: &Discretization, u: &mut [f64]) -> Result<()> {
    u.iter_mut().for_each(|x| *x = x.abs());
    let norm = disc.lp_norm(&disc.expand(u), params.p());
    if !(norm > 0.0 && norm.is_finite()) {
        return Err(HardyError::DegenerateInit);
    }
    u.iter_mut().for_each(|x| *x /= norm);
    Ok(())
}

/// Preconditioned norm of `∇Q` relative to `Q`.
fn residual(local: &Local) -> Result<f64> {
    let q = local.quotient();
    let grad: Vec<f64> = local
        .g_num
        .iter()
        .zip(&local.g_den)
        .map(|(gn, gd)| (gn - q * gd) / local.den)
        .collect();
    let mut z = grad.clone();
    local.hess.ldlt()?.solve(&mut z);
    let s: f64 = grad.iter().zip(&z).map(|(g, z)| g * z).sum();
    Ok((s * local.den).max(0.0).sqrt() / q.max(f64::MIN_POSITIVE))
}

const INNER_MAX_ITER: usize = 100;

/// Solves `∇N(v) + ∇D(v) = c·b` by damped Newton on the strictly convex
/// functional `N(v) + D(v) − c·b·v`, starting from `v`.
fn inner_solve(params: &HardyParams, disc: &Discretization, v: &mut Vec<f64>, b: &[f64], c: f64) -> Result<()> {
    let energy = |x: &[f64]| {
        let (num, den) = rayleigh_quotient_p(params, disc, &disc.expand(x));
        num + den - c * x.iter().zip(b).map(|(x, b)| x * b).sum::<f64>()
    };
    let mut f = energy(v);
    for _ in 0..INNER_MAX_ITER {
        let local = local_model(params, disc, v);
        let grad: Vec<f64> = (0..v.len())
            .map(|i| local.g_num[i] + local.g_den[i] - c * b[i])
            .collect();
        let mut dir = grad.clone();
        local.hess.ldlt()?.solve(&mut dir);
        dir.iter_mut().for_each(|x| *x = -*x);
        let slope: f64 = grad.iter().zip(&dir).map(|(g, d)| g * d).sum();
        let tiny = -slope < 1e-12 * (local.num + local.den);
        if tiny && -slope < 1e-24 * (local.num + local.den) {
            return Ok(());
        }
        let mut t = 1.0;
        let mut moved = false;
        for _ in 0..60 {
            let trial: Vec<f64> = v.iter().zip(&dir).map(|(x, d)| x + t * d).collect();
            let ft = energy(&trial);
            if ft.is_finite() && ft <= f + 1e-4 * t * slope {
                *v = trial;
                f = ft;
                moved = true;
                break;
            }
            t *= 0.5;
        }
        // after a step from a small decrement the error is below rounding
        if !moved || tiny {
            return Ok(());
        }
    }
    Ok(())
}

/// Minimizes the discrete quotient by nonlinear inverse iteration with
/// shift `−1`: each step solves `∇N(v) + ∇D(v) = (Q(u) + 1)·∇D(u)` and
/// normalizes. At `p = 2` this is exactly shifted inverse iteration.
/// The inner problems are convex and are solved by damped Newton with
/// the tridiagonal Hessian. Iterates are kept nonnegative and at unit
/// weighted `L^p` norm.
pub fn minimize_rayleigh_p(
    params: &HardyParams,
    disc: &Discretization,
    init: &DiscretizedFunction,
    options: &PMinOptions,
) -> Result<SpectralResult> {
    if init.values.len() != disc.mesh.len() {
        return Err(HardyError::InvalidArgument(format!(
            "initial profile has {} values for {} nodes",
            init.values.len(),
            disc.mesh.len()
        )));
    }
    let mut u = disc.restrict(&init.values);
    normalize(params, disc, &mut u)?;

    let mut local = local_model(params, disc, &u);
    let mut last_decrease = f64::INFINITY;
    let mut res = f64::INFINITY;
    for iter in 1..=options.max_iter {
        res = residual(&local)?;
        if last_decrease < options.rel_tol && res < options.grad_tol {
            return Ok(finish(disc, &u, local.quotient(), iter - 1, res));
        }
        let mut next = u.clone();
        inner_solve(params, disc, &mut next, &local.g_den, local.quotient() + 1.0)?;
        normalize(params, disc, &mut next)?;
        let next_local = local_model(params, disc, &next);
        let (q, q_next) = (local.quotient(), next_local.quotient());
        if !(q_next <= q * (1.0 + 1e-14)) {
            // no further progress is possible at this precision
            if res < options.grad_tol {
                return Ok(finish(disc, &u, q, iter - 1, res));
            }
            return Err(HardyError::NonConvergence {
                iterations: iter,
                residual: res,
            });
        }
        last_decrease = (q - q_next) / q_next.abs().max(f64::MIN_POSITIVE);
        u = next;
        local = next_local;
    }
    Err(HardyError::NonConvergence {
        iterations: options.max_iter,
        residual: res,
    })
}

fn finish(disc: &Discretization, u: &[f64], quotient: f64, iterations: usize, residual: f64) -> SpectralResult {
    SpectralResult {
        m: quotient,
        lambda: None,
        minimizer: disc.function(u),
        iterations,
        residual,
    }
}
