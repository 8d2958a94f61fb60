//! Hardy quotients of explicit test functions.
//!
//! Test functions are separated, `u(rσ) = R(r) Φ(θ)`. The cone and both
//! weights are dilation homogeneous, so in `t = ln r` every quotient reads
//!
//! ```text
//! N = ∫ e^{pHt} ∫ w (R_t² Φ² + R² Φ_θ²)^{p/2} dθ dt,
//! D = ∫ e^{pHt} |R|^p dt · ∫ w |Φ|^p dθ.
//! ```
//!
//! Angular integrals are taken over `θ` against `w` without the constant
//! sphere factor, which cancels in every quotient.

use serde::{Deserialize, Serialize};

use crate::error::{HardyError, Result};
use crate::params::{closed_form_constant, hardy_exponent, ConeSpec, HardyParams};
use crate::quadrature::{sphere_surface_area, GaussJacobi};
use crate::spherical::{bc_for_cone, solve_m, BoundaryCondition, Discretization, DiscretizedFunction};

/// `e^{-1/x}` for `x > 0`.
fn psi(x: f64) -> f64 {
    if x <= 0.0 {
        0.0
    } else {
        (-1.0 / x).exp()
    }
}

/// The C^∞ transition from 0 (at `x ≤ 0`) to 1 (at `x ≥ 1`).
pub fn smooth_step(x: f64) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    if x >= 1.0 {
        return 1.0;
    }
    let (a, b) = (psi(x), psi(1.0 - x));
    a / (a + b)
}

/// Derivative of [`smooth_step`].
pub fn smooth_step_derivative(x: f64) -> f64 {
    if x <= 0.0 || x >= 1.0 {
        return 0.0;
    }
    let y = 1.0 - x;
    let (a, b) = (psi(x), psi(y));
    let s = a + b;
    // ψ' = ψ / x²
    (a * b) * (1.0 / (x * x) + 1.0 / (y * y)) / (s * s)
}

/// The cutoff `η`: 1 on `t ≤ 1`, 0 on `t ≥ 2`.
pub fn cutoff_eta(t: f64) -> f64 {
    1.0 - smooth_step(t - 1.0)
}

pub fn cutoff_eta_derivative(t: f64) -> f64 {
    -smooth_step_derivative(t - 1.0)
}

/// Radial factor of a separated test function.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum RadialProfile {
    /// `r^{-H+δ}` on `r < 1` and `r^{-H-δ}` on `r > 1`.
    PowerLawSplit { delta: f64 },
    /// `r^s` on `[r0, r1]`, decaying smoothly to zero over one unit of
    /// `ln r` on either side.
    PowerWindow { s: f64, r0: f64, r1: f64 },
    /// The multiplier `η(−ln|y| / h)`. Not separated in `(r, θ)`, so it is
    /// only used through [`cutoff_decay`].
    LogCutoff { h: u32 },
}

impl RadialProfile {
    pub fn validate(&self) -> Result<()> {
        match *self {
            RadialProfile::PowerLawSplit { delta } => check_delta(delta),
            RadialProfile::PowerWindow { s, r0, r1 } => {
                if !(s.is_finite() && r0 > 0.0 && r1 > r0 && r1.is_finite()) {
                    return Err(HardyError::InvalidArgument(format!(
                        "power window needs finite s and 0 < r0 < r1, got s = {s}, r0 = {r0}, r1 = {r1}"
                    )));
                }
                Ok(())
            }
            RadialProfile::LogCutoff { h } => {
                if h < 1 {
                    return Err(HardyError::InvalidArgument("cutoff level h must be at least 1".into()));
                }
                Ok(())
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeparatedTestFunction {
    pub radial: RadialProfile,
    pub angular: DiscretizedFunction,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RayleighEvaluation {
    pub numerator: f64,
    pub denominator: f64,
    pub quotient: f64,
    pub closed_form_reference: Option<f64>,
}

impl RayleighEvaluation {
    fn new(numerator: f64, denominator: f64, reference: Option<f64>) -> Result<Self> {
        if !(denominator > 0.0) {
            return Err(HardyError::ZeroDenominator);
        }
        Ok(Self {
            numerator,
            denominator,
            quotient: numerator / denominator,
            closed_form_reference: reference,
        })
    }
}

fn check_delta(delta: f64) -> Result<()> {
    if !(delta > 0.0 && delta.is_finite()) {
        return Err(HardyError::InvalidArgument(format!("δ must be positive, got {delta}")));
    }
    Ok(())
}

fn check_profile(disc: &Discretization, phi: &DiscretizedFunction) -> Result<()> {
    let same = phi.mesh.len() == disc.mesh.len()
        && phi.values.len() == disc.mesh.len()
        && phi
            .mesh
            .iter()
            .zip(&disc.mesh)
            .all(|(a, b)| (a - b).abs() <= 1e-12 * (1.0 + b.abs()));
    if !same {
        return Err(HardyError::InvalidArgument(
            "angular profile does not live on the discretization mesh".into(),
        ));
    }
    Ok(())
}

/// `∫ w |Φ|^p` on the discretization.
fn angular_mass(disc: &Discretization, phi: &DiscretizedFunction) -> f64 {
    disc.lp_norm(&phi.values, disc.p).powf(disc.p)
}

/// Hardy quotient of `u_δ = r^{-H±δ} Φ`.
///
/// Both radial integrals equal `1/(pδ)`, so
/// `N = (1/(pδ)) Σ_± ∫ w ((H ∓ δ)² Φ² + Φ_θ²)^{p/2}` and `D = (2/(pδ)) ∫ w |Φ|^p`.
pub fn evaluate_quotient_udelta(
    params: &HardyParams,
    disc: &Discretization,
    phi: &DiscretizedFunction,
    delta: f64,
    reference: Option<f64>,
) -> Result<RayleighEvaluation> {
    check_delta(delta)?;
    check_profile(disc, phi)?;
    let h = hardy_exponent(params).h;
    let p = params.p();
    let radial = 1.0 / (p * delta);
    let below = disc.energy(&phi.values, (h - delta).powi(2));
    let above = disc.energy(&phi.values, (h + delta).powi(2));
    let numerator = radial * (below + above);
    let denominator = 2.0 * radial * angular_mass(disc, phi);
    RayleighEvaluation::new(numerator, denominator, reference)
}

/// The denominator `(2/(pδ)) ∫ w |Φ|^p` of `u_δ`, which diverges like `1/δ`.
pub fn denominator_blowup(
    params: &HardyParams,
    disc: &Discretization,
    phi: &DiscretizedFunction,
    delta: f64,
) -> Result<f64> {
    check_delta(delta)?;
    check_profile(disc, phi)?;
    Ok(2.0 / (params.p() * delta) * angular_mass(disc, phi))
}

/// Which cutoff multiplies the model function on the strip.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Cutoff {
    #[default]
    Smooth,
    /// `η ≡ 1`: no cutoff at all.
    Flat,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StripEnergy {
    pub h: u32,
    /// `I_h = ∫ |y|^a |z|^{-b} |u|^p |∇η_h|^p dz` over the strip.
    pub value: f64,
    /// `I_h · h^{p−1}`, bounded in the threshold case `k + a = p`.
    pub scaled: f64,
}

/// `I_h` for the smooth cutoff, see [`cutoff_decay_with`].
pub fn cutoff_decay(params: &HardyParams, support: (f64, f64), h: u32) -> Result<StripEnergy> {
    cutoff_decay_with(params, support, h, Cutoff::Smooth)
}

/// Energy of the cutoff gradient on `e^{-2h} < |y| < e^{-h}`.
///
/// The model function is the radial bump `u(z) = ζ(|z|)`, supported in
/// `support.0 < |z| < support.1`; it does not vanish on `Σ0`, so this is the
/// cost of pushing it into `R^d \ Σ0` with `η_h(z) = η(−ln|y| / h)`. With
/// `|y| = e^{−ht}`,
///
/// ```text
/// I_h = c h^{1−p} ∫_1^2 e^{−ht(k+a−p)} |η'(t)|^p G(e^{−ht}) dt,
/// G(ρ) = ∫_0^∞ ξ^{d−k−1} (ξ² + ρ²)^{−b/2} ζ(√(ξ² + ρ²))^p dξ,
/// ```
///
/// where `c = |S^{k−1}| |S^{d−k−1}|`.
pub fn cutoff_decay_with(params: &HardyParams, support: (f64, f64), h: u32, cutoff: Cutoff) -> Result<StripEnergy> {
    if h < 1 {
        return Err(HardyError::InvalidArgument("cutoff level h must be at least 1".into()));
    }
    let (inner, outer) = support;
    if !(inner > 0.0 && outer > inner && outer.is_finite()) {
        return Err(HardyError::InvalidArgument(format!(
            "model support needs 0 < inner < outer, got ({inner}, {outer})"
        )));
    }
    let excess = params.k_plus_a() - params.p();
    if excess < 0.0 {
        return Err(HardyError::InvalidArgument(format!(
            "the cutoff argument needs k + a >= p, got k + a - p = {excess}"
        )));
    }
    let hf = h as f64;
    let p = params.p();
    if cutoff == Cutoff::Flat {
        return Ok(StripEnergy {
            h,
            value: 0.0,
            scaled: 0.0,
        });
    }

    let d = params.d();
    let k = params.k();
    let c = sphere_surface_area(k - 1) * sphere_surface_area(d - k - 1);
    let (t0, t1) = (inner.ln(), outer.ln());
    let half = 0.5 * (t1 - t0);
    let bump = |r: f64| {
        let t = r.ln();
        smooth_step((t - t0) / half) * smooth_step((t1 - t) / half)
    };
    let xi_exp = (d - k - 1) as f64;
    let b = params.b();
    let rule = GaussJacobi::new(24, 0.0, 0.0)?;
    let g = |rho: f64| {
        let lo = (inner * inner - rho * rho).max(0.0).sqrt();
        let hi = (outer * outer - rho * rho).max(0.0).sqrt();
        composite(&rule, lo, hi, 16, |xi| {
            let r2 = xi * xi + rho * rho;
            xi.powf(xi_exp) * r2.powf(-0.5 * b) * bump(r2.sqrt()).powf(p)
        })
    };
    let integral = composite(&rule, 1.0, 2.0, 16, |t| {
        let eta = cutoff_eta_derivative(t).abs();
        if eta == 0.0 {
            return 0.0;
        }
        (-hf * t * excess).exp() * eta.powf(p) * g((-hf * t).exp())
    });
    let value = c * hf.powf(1.0 - p) * integral;
    Ok(StripEnergy {
        h,
        value,
        scaled: value * hf.powf(p - 1.0),
    })
}

/// Composite rule on `[lo, hi]` with `cells` equal cells.
fn composite<F: Fn(f64) -> f64>(rule: &GaussJacobi, lo: f64, hi: f64, cells: usize, f: F) -> f64 {
    if hi <= lo {
        return 0.0;
    }
    let width = (hi - lo) / cells as f64;
    let mut acc = 0.0;
    for c in 0..cells {
        let mid = lo + (c as f64 + 0.5) * width;
        for (x, w) in rule.nodes.iter().zip(&rule.weights) {
            acc += w * f(mid + 0.5 * width * x);
        }
    }
    0.5 * width * acc
}

/// Points `r_i` equally spaced in `ln r`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogGrid {
    pub ln_r: Vec<f64>,
}

impl LogGrid {
    pub const DEFAULT_POINTS: usize = 1 << 12;

    pub fn new(r_min: f64, r_max: f64, n: usize) -> Result<Self> {
        if !(r_min > 0.0 && r_max > r_min && r_max.is_finite() && n >= 2) {
            return Err(HardyError::InvalidArgument(format!(
                "log grid needs 0 < r_min < r_max and n >= 2, got ({r_min}, {r_max}, {n})"
            )));
        }
        let (a, b) = (r_min.ln(), r_max.ln());
        Ok(Self::from_ln(a, b, n))
    }

    /// Grid on `[t_min, t_max]` in `t = ln r`; for ranges beyond `f64` radii.
    pub fn from_ln(t_min: f64, t_max: f64, n: usize) -> Self {
        let step = (t_max - t_min) / (n - 1) as f64;
        Self {
            ln_r: (0..n).map(|i| t_min + step * i as f64).collect(),
        }
    }

    /// 2^12 points over `[1e-6, 1e6]`.
    pub fn standard() -> Self {
        Self::new(1e-6, 1e6, Self::DEFAULT_POINTS).expect("valid grid")
    }

    pub fn len(&self) -> usize {
        self.ln_r.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ln_r.is_empty()
    }
}

/// One-dimensional Hardy quotient
/// `∫ r^e |f'|^p dr / ∫ r^{e−p} |f|^p dr` with `e = weight_exponent`.
///
/// `f` is sampled on the grid and taken piecewise linear in `ln r`, which is
/// an honest `W^{1,p}` function; both integrals are then computed cell by
/// cell with Gauss–Legendre points. With `e = d + a − b − 1` the result is
/// bounded below by `|H|^p`.
pub fn radial_hardy_quotient(p: f64, weight_exponent: f64, grid: &LogGrid, values: &[f64]) -> Result<f64> {
    if !(p > 1.0) {
        return Err(HardyError::InvalidArgument(format!("p must exceed 1, got {p}")));
    }
    if values.len() != grid.len() || grid.len() < 2 {
        return Err(HardyError::InvalidArgument(format!(
            "expected {} samples, got {}",
            grid.len(),
            values.len()
        )));
    }
    if values[0] != 0.0 || values[values.len() - 1] != 0.0 {
        return Err(HardyError::InvalidArgument(
            "radial profile must vanish at both ends of the grid".into(),
        ));
    }
    // dr = r dt and f' = f_t / r: both integrands carry e^{(e+1−p)t}.
    // Terms are accumulated as logarithms since |f|^p may overflow on
    // wide grids even when f itself does not.
    let c = weight_exponent + 1.0 - p;
    let rule = GaussJacobi::new(4, 0.0, 0.0)?;
    let (mut num, mut den) = (Vec::new(), Vec::new());
    for (t, f) in grid.ln_r.windows(2).zip(values.windows(2)) {
        if f[0] == 0.0 && f[1] == 0.0 {
            continue;
        }
        let width = t[1] - t[0];
        let ln_slope = ((f[1] - f[0]) / width).abs().ln();
        let mid = 0.5 * (t[0] + t[1]);
        for (x, w) in rule.nodes.iter().zip(&rule.weights) {
            let tau = mid + 0.5 * width * x;
            let ln_weight = (0.5 * width * w).ln() + c * tau;
            let value = 0.5 * (f[0] + f[1]) + 0.5 * (f[1] - f[0]) * x;
            num.push(ln_weight + p * ln_slope);
            den.push(ln_weight + p * value.abs().ln());
        }
    }
    let shift = num.iter().chain(&den).copied().fold(f64::NEG_INFINITY, f64::max);
    if !shift.is_finite() {
        return Err(HardyError::ZeroDenominator);
    }
    let sum = |v: &[f64]| v.iter().map(|l| (l - shift).exp()).sum::<f64>();
    let (num, den) = (sum(&num), sum(&den));
    if !(den > 0.0) || !num.is_finite() {
        return Err(HardyError::ZeroDenominator);
    }
    Ok(num / den)
}

/// Knobs of [`verify_inequality_with`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VerifyOptions {
    /// Allowed undershoot, relative to `max(1, |m|)`.
    pub tol: f64,
}

impl Default for VerifyOptions {
    fn default() -> Self {
        Self { tol: 1e-6 }
    }
}

pub fn verify_inequality(
    params: &HardyParams,
    cone: &ConeSpec,
    testfn: &SeparatedTestFunction,
) -> Result<RayleighEvaluation> {
    verify_inequality_with(params, cone, testfn, &VerifyOptions::default())
}

/// Full Hardy quotient of a separated test function, checked against the
/// sharp constant: the closed form when one exists, else the spherical
/// minimum on the mesh of the angular profile.
pub fn verify_inequality_with(
    params: &HardyParams,
    cone: &ConeSpec,
    testfn: &SeparatedTestFunction,
    options: &VerifyOptions,
) -> Result<RayleighEvaluation> {
    testfn.radial.validate()?;
    if let RadialProfile::LogCutoff { .. } = testfn.radial {
        return Err(HardyError::Unsupported(
            "the log cutoff is not separated in (r, θ); use the strip energy instead".into(),
        ));
    }
    if let ConeSpec::AxisymmetricBand { .. } = cone {
        cone.validate()?;
    }
    let domain = bc_for_cone(params, cone)?;
    let n = testfn.angular.mesh.len().saturating_sub(1);
    let disc = Discretization::new(params, &domain, n)?;
    let phi = &testfn.angular;
    check_profile(&disc, phi)?;
    let ends = [(domain.bc1, phi.values[0]), (domain.bc2, phi.values[n])];
    if ends
        .iter()
        .any(|&(bc, v)| bc == BoundaryCondition::Dirichlet && v != 0.0)
    {
        return Err(HardyError::InvalidArgument(
            "angular profile must vanish at the Dirichlet ends of the cross-section".into(),
        ));
    }

    let reference = match closed_form_constant(params, cone)? {
        Some(form) => form.value,
        None => solve_m(params, cone, n)?.m,
    };
    let eval = match testfn.radial {
        RadialProfile::PowerLawSplit { delta } => evaluate_quotient_udelta(params, &disc, phi, delta, Some(reference))?,
        RadialProfile::PowerWindow { s, r0, r1 } => window_quotient(params, &disc, phi, s, r0, r1, reference)?,
        RadialProfile::LogCutoff { .. } => unreachable!(),
    };
    let tol = options.tol * reference.abs().max(1.0);
    if eval.quotient < reference - tol {
        return Err(HardyError::InequalityViolated {
            quotient: eval.quotient,
            reference,
            tol,
        });
    }
    Ok(eval)
}

/// Quotient of `R(r) Φ` with `R = r^s ζ(ln r)`, `ζ = 1` on `[ln r0, ln r1]`.
/// The plateau is integrated in closed form, the two transitions by
/// Gauss–Legendre in `t`.
fn window_quotient(
    params: &HardyParams,
    disc: &Discretization,
    phi: &DiscretizedFunction,
    s: f64,
    r0: f64,
    r1: f64,
    reference: f64,
) -> Result<RayleighEvaluation> {
    let p = params.p();
    let h = hardy_exponent(params).h;
    let (t0, t1) = (r0.ln(), r1.ln());
    let c = p * (h + s);
    let mass = angular_mass(disc, phi);

    let plateau = exp_integral(c, t0, t1);
    let mut numerator = plateau * disc.energy(&phi.values, s * s);
    let mut denominator = plateau * mass;

    // R = e^{st} ζ, R_t = e^{st} (s ζ + ζ'); e^{pHt} |R|^p = e^{ct} |ζ|^p
    let rule = GaussJacobi::new(16, 0.0, 0.0)?;
    let mut transition = |zeta: &dyn Fn(f64) -> (f64, f64), lo: f64, hi: f64| {
        let (num, den) = (
            composite(&rule, lo, hi, 8, |t| {
                let (z, dz) = zeta(t);
                let ratio = s * z + dz;
                let scale = (c * t).exp();
                if z.abs() < 1e-150 {
                    scale * ratio.abs().powf(p) * mass
                } else {
                    scale * z.abs().powf(p) * disc.energy(&phi.values, (ratio / z).powi(2))
                }
            }),
            composite(&rule, lo, hi, 8, |t| (c * t).exp() * zeta(t).0.abs().powf(p) * mass),
        );
        numerator += num;
        denominator += den;
    };
    transition(
        &|t| (smooth_step(t - (t0 - 1.0)), smooth_step_derivative(t - (t0 - 1.0))),
        t0 - 1.0,
        t0,
    );
    transition(
        &|t| (smooth_step(t1 + 1.0 - t), -smooth_step_derivative(t1 + 1.0 - t)),
        t1,
        t1 + 1.0,
    );
    RayleighEvaluation::new(numerator, denominator, Some(reference))
}

/// `∫_a^b e^{ct} dt`, stable for `c → 0`.
fn exp_integral(c: f64, a: f64, b: f64) -> f64 {
    let x = c * (b - a);
    let rel = if x.abs() < 1e-8 { 1.0 + 0.5 * x } else { x.exp_m1() / x };
    (c * a).exp() * (b - a) * rel
}

/// Fit of `q(δ) = m + C δ^r` through a geometric `δ` sequence.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Extrapolation {
    /// Limit from the two smallest `δ`, assuming `r = 2`.
    pub limit: f64,
    /// `r` from the three smallest `δ`; absent with fewer points or when the
    /// differences carry no sign-consistent signal.
    pub observed_order: Option<f64>,
}

/// Richardson extrapolation in `δ²`.
pub fn richardson_delta2(deltas: &[f64], values: &[f64]) -> Result<Extrapolation> {
    if deltas.len() != values.len() || deltas.len() < 2 {
        return Err(HardyError::InvalidArgument(
            "extrapolation needs at least two (δ, value) pairs".into(),
        ));
    }
    let mut pairs: Vec<(f64, f64)> = deltas.iter().copied().zip(values.iter().copied()).collect();
    pairs.sort_by(|x, y| y.0.total_cmp(&x.0));
    let n = pairs.len();
    let (da, qa) = pairs[n - 2];
    let (db, qb) = pairs[n - 1];
    let limit = (qb * da * da - qa * db * db) / (da * da - db * db);

    let observed_order = if n >= 3 {
        let (d1, q1) = pairs[n - 3];
        let ratio1 = d1 / da;
        let ratio2 = da / db;
        let (e1, e2) = (q1 - qa, qa - qb);
        let geometric = (ratio1 - ratio2).abs() <= 1e-9 * ratio2;
        if geometric && e1 * e2 > 0.0 {
            Some((e1 / e2).ln() / ratio2.ln())
        } else {
            None
        }
    } else {
        None
    };
    Ok(Extrapolation { limit, observed_order })
}

/// Least-squares slope of `ln y` against `ln x`.
pub fn log_log_slope(xs: &[f64], ys: &[f64]) -> Result<f64> {
    if xs.len() != ys.len() || xs.len() < 2 || xs.iter().chain(ys).any(|v| !(*v > 0.0)) {
        return Err(HardyError::InvalidArgument(
            "log-log fit needs at least two positive pairs".into(),
        ));
    }
    let lx: Vec<f64> = xs.iter().map(|x| x.ln()).collect();
    let ly: Vec<f64> = ys.iter().map(|y| y.ln()).collect();
    let n = lx.len() as f64;
    let (mx, my) = (lx.iter().sum::<f64>() / n, ly.iter().sum::<f64>() / n);
    let sxy: f64 = lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = lx.iter().map(|x| (x - mx) * (x - mx)).sum();
    if sxx == 0.0 {
        return Err(HardyError::InvalidArgument(
            "log-log fit needs distinct abscissae".into(),
        ));
    }
    Ok(sxy / sxx)
}
