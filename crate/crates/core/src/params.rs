//! Problem parameters, the Hardy exponent, integrability predicates and the
//! table of explicitly known sharp constants.
//!
//! Coordinates are split as `z = (x, y) ∈ R^{d-k} × R^k`; the inequality
//! carries the weight `|y|^a |z|^{-b}` on the gradient side and
//! `|y|^a |z|^{-b-p}` on the function side. On the unit sphere the polar
//! angle `θ ∈ [0, π/2]` is defined by `|y| = r cos θ`, `|x| = r sin θ`, so the
//! singular set `Σ0 = {y = 0}` sits at `θ = π/2`.

use std::f64::consts::FRAC_PI_2;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{HardyError, Result};

/// Relative slack used when deciding threshold equalities such as `a = p − k`.
const THRESHOLD_EPS: f64 = 1e-12;

fn nearly_equal(x: f64, y: f64) -> bool {
    (x - y).abs() <= THRESHOLD_EPS * (1.0 + x.abs().max(y.abs()))
}

/// The tuple `(d, k, p, a, b)`.
///
/// `a = 0` is accepted; it reduces the problem to the unweighted
/// Laplace–Beltrami case and is used for cross-validation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawParams", into = "RawParams")]
pub struct HardyParams {
    d: usize,
    k: usize,
    p: f64,
    a: f64,
    b: f64,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
struct RawParams {
    d: usize,
    k: usize,
    p: f64,
    a: f64,
    b: f64,
}

impl TryFrom<RawParams> for HardyParams {
    type Error = HardyError;

    fn try_from(raw: RawParams) -> Result<Self> {
        HardyParams::new(raw.d, raw.k, raw.p, raw.a, raw.b)
    }
}

impl From<HardyParams> for RawParams {
    fn from(p: HardyParams) -> Self {
        RawParams {
            d: p.d,
            k: p.k,
            p: p.p,
            a: p.a,
            b: p.b,
        }
    }
}

impl HardyParams {
    pub fn new(d: usize, k: usize, p: f64, a: f64, b: f64) -> Result<Self> {
        if d < 2 {
            return Err(HardyError::InvalidParams(format!("d = {d} must be at least 2")));
        }
        if k < 1 || k >= d {
            return Err(HardyError::InvalidParams(format!(
                "k = {k} must satisfy 1 <= k < d = {d}"
            )));
        }
        if !(p.is_finite() && p > 1.0) {
            return Err(HardyError::InvalidParams(format!("p = {p} must be > 1")));
        }
        if !a.is_finite() || !b.is_finite() {
            return Err(HardyError::InvalidParams("a and b must be finite".into()));
        }
        Ok(Self { d, k, p, a, b })
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    pub fn a(&self) -> f64 {
        self.a
    }

    pub fn b(&self) -> f64 {
        self.b
    }

    /// `k + a`, the quantity that governs integrability near `Σ0`.
    pub fn k_plus_a(&self) -> f64 {
        self.k as f64 + self.a
    }

    /// Same parameters with a different `b`.
    pub fn with_b(&self, b: f64) -> Result<Self> {
        Self::new(self.d, self.k, self.p, self.a, b)
    }

    /// Same parameters with a different `p`.
    pub fn with_p(&self, p: f64) -> Result<Self> {
        Self::new(self.d, self.k, p, self.a, self.b)
    }

    /// The value `b' = 2(d + a − p) − b`, which flips the sign of the Hardy
    /// exponent and leaves every sharp constant unchanged.
    pub fn mirrored_b(&self) -> f64 {
        2.0 * (self.d as f64 + self.a - self.p) - self.b
    }

    pub fn exponent(&self) -> HardyExponent {
        hardy_exponent(self)
    }
}

impl fmt::Display for HardyParams {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "d={} k={} p={} a={} b={}", self.d, self.k, self.p, self.a, self.b)
    }
}

/// The Hardy exponent `H = (d + a − p − b) / p` and `|H|^p`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HardyExponent {
    pub h: f64,
    pub h_abs_p: f64,
}

pub fn hardy_exponent(params: &HardyParams) -> HardyExponent {
    let h = (params.d as f64 + params.a - params.p - params.b) / params.p;
    HardyExponent {
        h,
        h_abs_p: h.abs().powf(params.p),
    }
}

/// Cones whose spherical cross-section is invariant under rotations in `x`
/// and in `y` separately, i.e. described by a polar-angle interval.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum ConeSpec {
    /// `R^d`.
    FullSpace,
    /// `R^d \ {0}`.
    PuncturedSpace,
    /// `R^d \ Σ0`.
    ComplementSigma0,
    /// `R^{d-1} × (0, ∞)`, only for `k = 1`.
    HalfSpace,
    /// `{θ1 < θ < θ2}`; with `θ2 = π/2` the band contains `Σ0 \ {0}`.
    AxisymmetricBand { theta1: f64, theta2: f64 },
}

impl ConeSpec {
    pub fn band(theta1: f64, theta2: f64) -> Result<Self> {
        let cone = ConeSpec::AxisymmetricBand { theta1, theta2 };
        cone.validate()?;
        Ok(cone)
    }

    /// Checks the band invariant `0 ≤ θ1 < θ2 ≤ π/2`.
    pub fn validate(&self) -> Result<()> {
        if let ConeSpec::AxisymmetricBand { theta1, theta2 } = *self {
            if !(theta1.is_finite() && theta2.is_finite()) {
                return Err(HardyError::InvalidCone("band angles must be finite".into()));
            }
            if theta1 < 0.0 || theta2 > FRAC_PI_2 + 1e-15 {
                return Err(HardyError::InvalidCone(format!(
                    "band ({theta1}, {theta2}) must lie in [0, π/2]"
                )));
            }
            if theta1 >= theta2 {
                return Err(HardyError::InvalidCone(format!(
                    "band requires θ1 < θ2, got ({theta1}, {theta2})"
                )));
            }
        }
        Ok(())
    }

    /// Checks the constraints that depend on the parameters (half space needs `k = 1`).
    pub fn validate_for(&self, params: &HardyParams) -> Result<()> {
        self.validate()?;
        if matches!(self, ConeSpec::HalfSpace) && params.k() != 1 {
            return Err(HardyError::InvalidCone(format!(
                "half space requires k = 1, got k = {}",
                params.k()
            )));
        }
        Ok(())
    }

    /// Whether the closure of the spherical cross-section meets `Σ0`.
    pub fn closure_meets_sigma0(&self) -> bool {
        match *self {
            ConeSpec::AxisymmetricBand { theta2, .. } => theta2 >= FRAC_PI_2,
            _ => true,
        }
    }

    /// Whether the cone itself is contained in `R^d \ Σ0`.
    pub fn avoids_sigma0(&self) -> bool {
        match *self {
            ConeSpec::FullSpace | ConeSpec::PuncturedSpace => false,
            ConeSpec::ComplementSigma0 | ConeSpec::HalfSpace => true,
            ConeSpec::AxisymmetricBand { theta2, .. } => theta2 < FRAC_PI_2,
        }
    }
}

impl fmt::Display for ConeSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ConeSpec::FullSpace => write!(f, "full"),
            ConeSpec::PuncturedSpace => write!(f, "punctured"),
            ConeSpec::ComplementSigma0 => write!(f, "complement-sigma0"),
            ConeSpec::HalfSpace => write!(f, "half-space"),
            ConeSpec::AxisymmetricBand { theta1, theta2 } => {
                write!(f, "band:{theta1}:{theta2}")
            }
        }
    }
}

impl FromStr for ConeSpec {
    type Err = HardyError;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "full" => Ok(ConeSpec::FullSpace),
            "punctured" => Ok(ConeSpec::PuncturedSpace),
            "complement-sigma0" => Ok(ConeSpec::ComplementSigma0),
            "half-space" => Ok(ConeSpec::HalfSpace),
            other => {
                let parts: Vec<&str> = other.split(':').collect();
                if parts.len() == 3 && parts[0] == "band" {
                    let parse = |t: &str| {
                        t.parse::<f64>()
                            .map_err(|_| HardyError::InvalidCone(format!("bad band angle '{t}'")))
                    };
                    ConeSpec::band(parse(parts[1])?, parse(parts[2])?)
                } else {
                    Err(HardyError::InvalidCone(format!("unknown cone '{other}'")))
                }
            }
        }
    }
}

/// Where local integrability of `|y|^a |z|^{-β}` is asked for.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WeightDomain {
    Punctured,
    WholeSpace,
}

/// Local integrability of `|y|^a |z|^{-β}` on `R^d \ {0}` or on `R^d`.
pub fn weight_locally_integrable(params: &HardyParams, beta: f64, domain: WeightDomain) -> bool {
    let near_sigma0 = params.k_plus_a() > 0.0;
    match domain {
        WeightDomain::Punctured => near_sigma0,
        WeightDomain::WholeSpace => near_sigma0 && params.d() as f64 + params.a() > beta,
    }
}

/// `|Πσ|^a ∈ L^1(S^{d-1})`.
pub fn sphere_weight_integrable(params: &HardyParams) -> bool {
    params.k_plus_a() > 0.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdmissibilityReport {
    pub weight_integrable_punctured: bool,
    pub weight_integrable_origin: bool,
    pub sphere_weight_integrable: bool,
    pub cone_admissible: bool,
    pub muckenhoupt_ap: bool,
    pub superdegenerate: bool,
    pub notes: Vec<String>,
}

pub fn cone_admissible(params: &HardyParams, cone: &ConeSpec) -> AdmissibilityReport {
    let kpa = params.k_plus_a();
    let p = params.p();
    let origin_beta = params.b() + p;
    let mut notes = Vec::new();

    let weight_integrable_punctured = weight_locally_integrable(params, origin_beta, WeightDomain::Punctured);
    let weight_integrable_origin = weight_locally_integrable(params, origin_beta, WeightDomain::WholeSpace);

    let mut admissible = match cone.validate_for(params) {
        Err(e) => {
            notes.push(e.to_string());
            false
        }
        Ok(()) => cone.avoids_sigma0() || kpa > 0.0,
    };
    if !admissible && kpa <= 0.0 {
        notes.push(format!("k + a = {kpa} <= 0 and the cone meets Σ0"));
    }
    if admissible && matches!(cone, ConeSpec::FullSpace) && !weight_integrable_origin {
        admissible = false;
        notes.push(format!(
            "full space needs d + a > p + b, got {} <= {}",
            params.d() as f64 + params.a(),
            origin_beta
        ));
    }

    let superdegenerate = kpa >= p;
    if superdegenerate {
        notes.push("superdegenerate: removing Σ0 does not change the constant".into());
    }

    AdmissibilityReport {
        weight_integrable_punctured,
        weight_integrable_origin,
        sphere_weight_integrable: sphere_weight_integrable(params),
        cone_admissible: admissible,
        muckenhoupt_ap: kpa > 0.0 && kpa < p,
        superdegenerate,
        notes,
    }
}

/// Which result pins down a closed-form constant.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ClosedFormSource {
    /// `m(R^d \ {0}) = |H|^p`.
    RadialPunctured,
    /// `m(R^d) = H^p` when `d + a > p + b`.
    RadialFullSpace,
    /// `a = p − k`, `b = 0`: `((d − k)/p)^p` on `R^d`.
    MixedThreshold,
    /// `k + a ≥ p`: `m(R^d \ Σ0) = |H|^p`.
    Superdegenerate,
    /// `p = 2`: `m(R^d \ Σ0) = (d − k)(2 − (k + a))^+ + H²`.
    ComplementSigma0Quadratic,
    /// `k = 1`, `a ≥ p − 1`: `m(R^d_+) = |H|^p`.
    HalfSpaceSuperdegenerate,
    /// `k = 1`, `p = 2`: `m(R^d_+) = (d − 1)(1 − a)^+ + H²`.
    HalfSpaceQuadratic,
}

impl fmt::Display for ClosedFormSource {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let tag = match self {
            ClosedFormSource::RadialPunctured => "radial-punctured",
            ClosedFormSource::RadialFullSpace => "radial-full-space",
            ClosedFormSource::MixedThreshold => "mixed-threshold",
            ClosedFormSource::Superdegenerate => "superdegenerate",
            ClosedFormSource::ComplementSigma0Quadratic => "complement-sigma0-quadratic",
            ClosedFormSource::HalfSpaceSuperdegenerate => "half-space-superdegenerate",
            ClosedFormSource::HalfSpaceQuadratic => "half-space-quadratic",
        };
        f.write_str(tag)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClosedForm {
    pub value: f64,
    pub source: ClosedFormSource,
}

/// The sharp constant `m_{p,a,b}(C)` when an explicit formula is known.
///
/// Returns `Ok(None)` when the cone is admissible but no formula applies
/// (for instance the half space with `p ≠ 2` and `a < p − 1`).
pub fn closed_form_constant(params: &HardyParams, cone: &ConeSpec) -> Result<Option<ClosedForm>> {
    let report = cone_admissible(params, cone);
    if !report.cone_admissible {
        return Err(HardyError::Inadmissible(report.notes.join("; ")));
    }
    let HardyExponent { h, h_abs_p } = hardy_exponent(params);
    let p = params.p();
    let kpa = params.k_plus_a();
    let dk = (params.d() - params.k()) as f64;
    let is_quadratic = p == 2.0;

    let form = match cone {
        ConeSpec::FullSpace => {
            if h <= 0.0 {
                None
            } else if nearly_equal(params.a(), p - params.k() as f64) && params.b() == 0.0 {
                Some(ClosedForm {
                    value: (dk / p).powf(p),
                    source: ClosedFormSource::MixedThreshold,
                })
            } else {
                Some(ClosedForm {
                    value: h.powf(p),
                    source: ClosedFormSource::RadialFullSpace,
                })
            }
        }
        ConeSpec::PuncturedSpace => Some(ClosedForm {
            value: h_abs_p,
            source: ClosedFormSource::RadialPunctured,
        }),
        ConeSpec::ComplementSigma0 => {
            if is_quadratic {
                Some(ClosedForm {
                    value: dk * (2.0 - kpa).max(0.0) + h * h,
                    source: ClosedFormSource::ComplementSigma0Quadratic,
                })
            } else if kpa >= p {
                Some(ClosedForm {
                    value: h_abs_p,
                    source: ClosedFormSource::Superdegenerate,
                })
            } else {
                None
            }
        }
        ConeSpec::HalfSpace => {
            if is_quadratic {
                Some(ClosedForm {
                    value: (params.d() as f64 - 1.0) * (1.0 - params.a()).max(0.0) + h * h,
                    source: ClosedFormSource::HalfSpaceQuadratic,
                })
            } else if params.a() >= p - 1.0 {
                Some(ClosedForm {
                    value: h_abs_p,
                    source: ClosedFormSource::HalfSpaceSuperdegenerate,
                })
            } else {
                None
            }
        }
        ConeSpec::AxisymmetricBand { .. } => None,
    };
    Ok(form)
}

/// The constant `((k + a − p)/p)^p` of the purely cylindrical inequality.
pub fn cylindrical_constant(params: &HardyParams) -> Result<f64> {
    let excess = params.k_plus_a() - params.p();
    if excess <= 0.0 {
        return Err(HardyError::InvalidArgument(format!(
            "cylindrical constant needs a > p - k, got k + a - p = {excess}"
        )));
    }
    Ok((excess / params.p()).powf(params.p()))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params(d: usize, k: usize, p: f64, a: f64, b: f64) -> HardyParams {
        HardyParams::new(d, k, p, a, b).unwrap()
    }

    #[test]
    fn construction_rejects_bad_tuples() {
        assert!(HardyParams::new(1, 1, 2.0, 0.0, 0.0).is_err());
        assert!(HardyParams::new(3, 0, 2.0, 0.0, 0.0).is_err());
        assert!(HardyParams::new(3, 3, 2.0, 0.0, 0.0).is_err());
        assert!(HardyParams::new(3, 1, 1.0, 0.0, 0.0).is_err());
        assert!(HardyParams::new(3, 1, 2.0, f64::NAN, 0.0).is_err());
        assert!(HardyParams::new(3, 1, 2.0, 0.0, 0.0).is_ok());
    }

    #[test]
    fn exponent_examples() {
        let e = hardy_exponent(&params(3, 1, 2.0, 0.0, 0.0));
        assert_eq!(e.h, 0.5);
        assert_eq!(e.h_abs_p, 0.25);

        // b = d + a - p puts H on the threshold.
        let e = hardy_exponent(&params(5, 2, 2.5, 0.7, 5.0 + 0.7 - 2.5));
        assert!(e.h.abs() < 1e-15);

        // (4 + 1.5 - 3 + 0.5) / 3 = 1, all terms exact in binary.
        let e = hardy_exponent(&params(4, 2, 3.0, 1.5, -0.5));
        assert_eq!(e.h, 1.0);
        assert_eq!(e.h_abs_p, 1.0);
    }

    #[test]
    fn local_integrability() {
        let p = params(3, 1, 2.0, -1.0, 0.0);
        assert!(!weight_locally_integrable(&p, 7.0, WeightDomain::Punctured));
        let p = params(3, 2, 2.0, 0.0, 0.0);
        assert!(weight_locally_integrable(&p, 0.0, WeightDomain::WholeSpace));
        let p = params(3, 1, 2.0, 0.5, 0.0);
        assert!(!weight_locally_integrable(&p, 3.6, WeightDomain::WholeSpace));
        assert!(weight_locally_integrable(&p, 3.4, WeightDomain::WholeSpace));
    }

    #[test]
    fn sphere_weight() {
        assert!(sphere_weight_integrable(&params(3, 1, 2.0, 0.5, 0.0)));
        assert!(!sphere_weight_integrable(&params(4, 2, 2.0, -2.0, 0.0)));
        assert!(sphere_weight_integrable(&params(4, 3, 2.0, 0.0, 0.0)));
    }

    #[test]
    fn admissibility_of_bands_and_full_space() {
        let p = params(3, 1, 2.0, -1.5, 0.0);
        let band = ConeSpec::band(0.1, 1.0).unwrap();
        assert!(cone_admissible(&p, &band).cone_admissible);
        let touching = ConeSpec::band(0.1, FRAC_PI_2).unwrap();
        assert!(!cone_admissible(&p, &touching).cone_admissible);

        let full = cone_admissible(&params(3, 1, 2.0, 0.0, 0.0), &ConeSpec::FullSpace);
        assert!(full.cone_admissible);
        assert!(full.muckenhoupt_ap);
        assert!(!full.superdegenerate);

        let r = cone_admissible(&params(3, 1, 2.0, 1.5, 0.0), &ConeSpec::ComplementSigma0);
        assert!(r.superdegenerate);
        assert!(!r.muckenhoupt_ap);

        // d + a <= p + b
        let r = cone_admissible(&params(3, 1, 2.0, 0.0, 1.0), &ConeSpec::FullSpace);
        assert!(!r.cone_admissible);
        // half space with k = 2
        let r = cone_admissible(&params(3, 2, 2.0, 0.0, 0.0), &ConeSpec::HalfSpace);
        assert!(!r.cone_admissible);
    }

    #[test]
    fn degenerate_band_is_rejected() {
        assert!(ConeSpec::band(0.3, 0.3).is_err());
        assert!(ConeSpec::band(0.5, 0.3).is_err());
        assert!(ConeSpec::band(-0.1, 0.3).is_err());
        assert!(ConeSpec::band(0.0, 2.0).is_err());
    }

    #[test]
    fn cone_strings_round_trip() {
        for s in ["full", "punctured", "complement-sigma0", "half-space", "band:0.25:1.5"] {
            let cone: ConeSpec = s.parse().unwrap();
            assert_eq!(cone.to_string(), s);
        }
        assert!("band:1".parse::<ConeSpec>().is_err());
        assert!("cylinder".parse::<ConeSpec>().is_err());
    }

    #[test]
    fn caffarelli_silvestre_values() {
        for n in [2usize, 3] {
            for s in [0.25, 0.5, 0.75] {
                let p = params(n + 1, 1, 2.0, 1.0 - 2.0 * s, 0.0);
                let nf = n as f64;
                let full = closed_form_constant(&p, &ConeSpec::FullSpace).unwrap().unwrap();
                assert!((full.value - ((nf - 2.0 * s) / 2.0).powi(2)).abs() < 1e-14);
                let half = closed_form_constant(&p, &ConeSpec::HalfSpace).unwrap().unwrap();
                assert!((half.value - ((nf + 2.0 * s) / 2.0).powi(2)).abs() < 1e-13);
            }
        }
    }

    #[test]
    fn complement_sigma0_three_dimensional() {
        let c = closed_form_constant(&params(3, 1, 2.0, 0.0, 0.0), &ConeSpec::ComplementSigma0)
            .unwrap()
            .unwrap();
        assert_eq!(c.value, 2.25);
        assert_eq!(c.source, ClosedFormSource::ComplementSigma0Quadratic);
    }

    #[test]
    fn dispatch_gaps_and_errors() {
        // half space, p != 2, a < p - 1: nothing known.
        let p = params(3, 1, 3.0, 0.5, 0.0);
        assert_eq!(closed_form_constant(&p, &ConeSpec::HalfSpace).unwrap(), None);
        // complement of Σ0 with p != 2 below the superdegenerate threshold.
        assert_eq!(closed_form_constant(&p, &ConeSpec::ComplementSigma0).unwrap(), None);
        // inadmissible full space
        let p = params(3, 2, 2.0, -3.0, 0.0);
        assert!(closed_form_constant(&p, &ConeSpec::FullSpace).is_err());
        // bands have no closed form
        let p = params(3, 1, 2.0, 0.0, 0.0);
        let band = ConeSpec::band(0.2, 1.0).unwrap();
        assert_eq!(closed_form_constant(&p, &band).unwrap(), None);
    }

    #[test]
    fn mixed_threshold_corollary() {
        let p = params(5, 2, 3.0, 1.0, 0.0);
        let c = closed_form_constant(&p, &ConeSpec::FullSpace).unwrap().unwrap();
        assert_eq!(c.source, ClosedFormSource::MixedThreshold);
        assert!((c.value - 1.0).abs() < 1e-15);
    }

    #[test]
    fn cylindrical() {
        assert_eq!(cylindrical_constant(&params(3, 1, 2.0, 3.0, 0.0)).unwrap(), 1.0);
        assert!(cylindrical_constant(&params(3, 2, 2.0, 0.0, 0.0)).is_err());
        let eps = 1e-4;
        let c = cylindrical_constant(&params(3, 1, 2.0, 1.0 + eps, 0.0)).unwrap();
        assert!((c - eps * eps / 4.0).abs() < 1e-15);
    }

    #[test]
    fn raw_params_validate_on_conversion() {
        let raw = RawParams {
            d: 3,
            k: 3,
            p: 2.0,
            a: 0.0,
            b: 0.0,
        };
        assert!(HardyParams::try_from(raw).is_err());
    }
}
