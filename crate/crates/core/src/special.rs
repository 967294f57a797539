//! Special functions and closed-form lifespan laws.
//!
//! `I₀` switches from its power series to the large-argument expansion at
//! `y = 20`; `W₀` is Halley's iteration on `w e^w = z`. The data families are
//! Hermite-Gaussians built on `g(x) = e^{-x²/4}`, whose moments are known in
//! closed form, so each family sits in a definite moment class.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{lp_norm, moment, GridFunction, GridSpec};

/// Switch point between the series and the asymptotic expansion of `I₀`.
pub const I0_SWITCH: f64 = 20.0;

/// Power series `Σ (y²/4)^k / (k!)²`.
pub fn bessel_i0_series(y: f64) -> f64 {
    let q = 0.25 * y * y;
    let mut term = 1.0;
    let mut sum = 1.0;
    let mut k = 1.0;
    loop {
        term *= q / (k * k);
        sum += term;
        if term <= 1e-17 * sum {
            return sum;
        }
        k += 1.0;
    }
}

/// `e^y / √(2πy) · Σ a_k y^{-k}`, `a_k = ((2k-1)!!)² / (k! 8^k)`, summed until the
/// terms stop shrinking.
pub fn bessel_i0_asymptotic(y: f64) -> f64 {
    let mut term = 1.0_f64;
    let mut sum = 1.0;
    let mut k = 0.0_f64;
    loop {
        let next = term * (2.0 * k + 1.0).powi(2) / (8.0 * (k + 1.0) * y);
        if next.abs() >= term.abs() || next <= 1e-17 * sum {
            break;
        }
        sum += next;
        term = next;
        k += 1.0;
    }
    // split the exponential so large y overflows as late as possible
    let half = (0.5 * y).exp();
    half * (half / (2.0 * std::f64::consts::PI * y).sqrt()) * sum
}

/// Modified Bessel function of the first kind, order zero, for `y >= 0`.
pub fn bessel_i0(y: f64) -> Result<f64> {
    if y.is_nan() || y < 0.0 {
        return Err(Error::Domain(format!("bessel_i0 needs y >= 0, got {y}")));
    }
    Ok(i0_unchecked(y))
}

#[inline]
pub(crate) fn i0_unchecked(y: f64) -> f64 {
    if y <= I0_SWITCH {
        bessel_i0_series(y)
    } else {
        bessel_i0_asymptotic(y)
    }
}

/// Principal branch of the Lambert function on `z >= 0`.
pub fn lambert_w0(z: f64) -> Result<f64> {
    if z.is_nan() || z < 0.0 {
        return Err(Error::Domain(format!("lambert_w0 needs z >= 0, got {z}")));
    }
    if z == 0.0 {
        return Ok(0.0);
    }
    if z.is_infinite() {
        return Ok(f64::INFINITY);
    }
    let mut w = z.ln_1p();
    for _ in 0..64 {
        let ew = w.exp();
        let f = w * ew - z;
        let wp1 = w + 1.0;
        let denom = ew * wp1 - (w + 2.0) * f / (2.0 * wp1);
        let step = f / denom;
        w -= step;
        if step.abs() <= 4.0 * f64::EPSILON * w.abs().max(f64::MIN_POSITIVE) {
            break;
        }
    }
    Ok(w)
}

/// `g^{(j)}(x)` for `g = e^{-x²/4}`, `j <= 3`.
pub fn gaussian_derivative_at(j: usize, x: f64) -> f64 {
    let g = (-0.25 * x * x).exp();
    match j {
        0 => g,
        1 => -0.5 * x * g,
        2 => (0.25 * x * x - 0.5) * g,
        3 => (0.75 * x - 0.125 * x * x * x) * g,
        _ => panic!("gaussian_derivative_at: order {j} > 3"),
    }
}

pub fn gaussian_derivative(j: usize, spec: GridSpec) -> Result<GridFunction> {
    if j > 3 {
        return Err(Error::Domain(format!("derivative order {j} > 3")));
    }
    Ok(GridFunction::from_fn(spec, |x| gaussian_derivative_at(j, x)))
}

/// Which leading moments of `f₀ + f₁` vanish.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum MomentClass {
    #[serde(rename = "M0_nonzero")]
    M0Nonzero,
    #[serde(rename = "M0_zero_M1_nonzero")]
    M0ZeroM1Nonzero,
    #[serde(rename = "M0_M1_zero")]
    M0M1Zero,
}

impl MomentClass {
    pub const ALL: [MomentClass; 3] = [Self::M0Nonzero, Self::M0ZeroM1Nonzero, Self::M0M1Zero];

    pub fn as_str(&self) -> &'static str {
        match self {
            Self::M0Nonzero => "M0_nonzero",
            Self::M0ZeroM1Nonzero => "M0_zero_M1_nonzero",
            Self::M0M1Zero => "M0_M1_zero",
        }
    }

    /// Number of vanishing leading moments.
    pub fn vanishing(&self) -> usize {
        match self {
            Self::M0Nonzero => 0,
            Self::M0ZeroM1Nonzero => 1,
            Self::M0M1Zero => 2,
        }
    }
}

impl fmt::Display for MomentClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for MomentClass {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "m0_nonzero" => Ok(Self::M0Nonzero),
            "m0_zero_m1_nonzero" => Ok(Self::M0ZeroM1Nonzero),
            "m0_m1_zero" => Ok(Self::M0M1Zero),
            _ => Err(Error::Config(format!("unknown moment class {s:?}"))),
        }
    }
}

/// Initial data `(u₀, u₁) = ε (f₀, f₁)`.
#[derive(Debug, Clone)]
pub struct DataFamily {
    pub f0: GridFunction,
    pub f1: GridFunction,
    pub eps: f64,
    pub moment_class: MomentClass,
    pub label: String,
    /// `ε = 0`: the solution is identically zero.
    pub degenerate: bool,
    /// Spatially periodic data (no decay at the boundary).
    pub periodic: bool,
}

impl DataFamily {
    pub fn u0(&self) -> GridFunction {
        self.f0.scale(self.eps)
    }

    pub fn u1(&self) -> GridFunction {
        self.f1.scale(self.eps)
    }

    pub fn spec(&self) -> &GridSpec {
        self.f0.spec()
    }

    pub fn sum(&self) -> GridFunction {
        self.f0.combine(1.0, &self.f1, 1.0).expect("same grid")
    }

    /// Checks that the computed moments of `f₀ + f₁` agree with the class.
    pub fn check_moment_class(&self) -> Result<()> {
        let s = self.sum();
        let scale = lp_norm(&s, 1.0)?;
        let tol = 1e-8 * scale;
        let m0 = moment(&s, 0)?;
        let m1 = moment(&s, 1)?;
        let ok = match self.moment_class {
            MomentClass::M0Nonzero => m0.abs() > tol,
            MomentClass::M0ZeroM1Nonzero => m0.abs() <= tol && m1.abs() > tol,
            MomentClass::M0M1Zero => m0.abs() <= tol && m1.abs() <= tol,
        };
        if ok {
            Ok(())
        } else {
            Err(Error::Domain(format!(
                "moments M0 = {m0:.3e}, M1 = {m1:.3e} inconsistent with {}",
                self.moment_class
            )))
        }
    }

    /// Spatially constant data `u₀ ≡ a`, `u₁ ≡ 0` on the periodic grid.
    pub fn constant(a: f64, spec: GridSpec) -> Self {
        Self {
            f0: GridFunction::from_fn(spec, |_| a),
            f1: GridFunction::zeros(spec),
            eps: 1.0,
            moment_class: MomentClass::M0Nonzero,
            label: format!("constant {a}"),
            degenerate: a == 0.0,
            periodic: true,
        }
    }
}

/// `M0_nonzero`: `(g, 0)`; `M0_zero_M1_nonzero`: `(g', 0)`; `M0_M1_zero`: `(g'', 0)`.
pub fn make_data_family(class: MomentClass, eps: f64, spec: GridSpec) -> Result<DataFamily> {
    if !(eps >= 0.0 && eps.is_finite()) {
        return Err(Error::Domain(format!("eps must be >= 0, got {eps}")));
    }
    let j = class.vanishing();
    let label = ["g", "g'", "g''"][j];
    Ok(DataFamily {
        f0: gaussian_derivative(j, spec)?,
        f1: GridFunction::zeros(spec),
        eps,
        moment_class: class,
        label: format!("({label}, 0)"),
        degenerate: eps == 0.0,
        periodic: false,
    })
}

/// The cancelling pair `(g, -g)`, i.e. `u₀ + u₁ ≡ 0`.
pub fn make_cancelling_family(eps: f64, spec: GridSpec) -> Result<DataFamily> {
    if !(eps >= 0.0 && eps.is_finite()) {
        return Err(Error::Domain(format!("eps must be >= 0, got {eps}")));
    }
    let g = gaussian_derivative(0, spec)?;
    Ok(DataFamily {
        f1: g.scale(-1.0),
        f0: g,
        eps,
        moment_class: MomentClass::M0M1Zero,
        label: "(g, -g)".into(),
        degenerate: eps == 0.0,
        periodic: false,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Regime {
    /// `M₀ ≠ 0`: the classical `T_p(cε)`.
    Classical,
    /// `p < 3/2`, `M₁ ≠ 0`.
    SubcriticalM1,
    /// `p = 3/2`, `M₁ ≠ 0`.
    CriticalM1,
    /// `M₁ = 0` or `p > 3/2`.
    Generic,
}

impl Regime {
    pub fn of(p: f64, class: MomentClass) -> Self {
        match class {
            MomentClass::M0Nonzero => Self::Classical,
            MomentClass::M0M1Zero => Self::Generic,
            MomentClass::M0ZeroM1Nonzero if is_critical(p) => Self::CriticalM1,
            MomentClass::M0ZeroM1Nonzero if p < 1.5 => Self::SubcriticalM1,
            MomentClass::M0ZeroM1Nonzero => Self::Generic,
        }
    }

    pub fn as_str(&self) -> &'static str {
        match self {
            Self::Classical => "classical",
            Self::SubcriticalM1 => "subcritical_M1",
            Self::CriticalM1 => "critical_M1",
            Self::Generic => "generic",
        }
    }

    /// Exponent `a` in `T ≍ ε^a` (the critical case reports its leading power).
    pub fn exponent(&self, p: f64) -> f64 {
        match self {
            Self::Classical => -2.0 * (p - 1.0) / (3.0 - p),
            Self::SubcriticalM1 => -(p - 1.0) / (2.0 - p),
            Self::CriticalM1 => -2.0 / 3.0,
            Self::Generic => -2.0 * p * (p - 1.0) / (3.0 - p),
        }
    }
}

pub(crate) fn is_critical(p: f64) -> bool {
    (p - 1.5).abs() < 1e-12
}

/// `T_p(η) = η^{-2(p-1)/(3-p)}` for `p < 3`, `exp(η^{-2})` at `p = 3`.
pub fn t_p(p: f64, eta: f64) -> f64 {
    if p >= 3.0 {
        (eta.powi(-2)).exp()
    } else {
        eta.powf(-2.0 * (p - 1.0) / (3.0 - p))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LifespanPrediction {
    pub p: f64,
    pub eps: f64,
    pub class: MomentClass,
    pub regime: Regime,
    /// Evaluated with the lower constant `c`.
    pub value: f64,
    /// Evaluated with the upper constant `C`.
    pub upper: f64,
    pub formula_text: String,
}

pub fn predict_lifespan(
    p: f64,
    eps: f64,
    class: MomentClass,
    (c_lo, c_hi): (f64, f64),
) -> Result<LifespanPrediction> {
    if !(p > 1.0 && p <= 3.0) {
        return Err(Error::Exponent(p));
    }
    if !(eps > 0.0 && eps.is_finite()) {
        return Err(Error::Domain(format!("eps must be positive, got {eps}")));
    }
    if !(c_lo > 0.0 && c_hi > 0.0) {
        return Err(Error::Domain("prediction constants must be positive".into()));
    }
    let regime = Regime::of(p, class);
    let eval = |c: f64| -> Result<f64> {
        Ok(match regime {
            Regime::Classical => t_p(p, c * eps),
            Regime::SubcriticalM1 => c * eps.powf(-(p - 1.0) / (2.0 - p)),
            Regime::CriticalM1 => {
                c * eps.powf(-2.0 / 3.0) * (2.0 * lambert_w0(c / eps.sqrt())? / 3.0).exp()
            }
            Regime::Generic => t_p(p, c * eps.powf(p)),
        })
    };
    let formula_text = match regime {
        Regime::Classical if p >= 3.0 => "exp((c eps)^-2)".to_string(),
        Regime::Classical => format!("(c eps)^({:.6})", regime.exponent(p)),
        Regime::SubcriticalM1 => format!("c eps^({:.6})", regime.exponent(p)),
        Regime::CriticalM1 => "c eps^(-2/3) exp(2 W(c eps^(-1/2)) / 3)".to_string(),
        Regime::Generic if p >= 3.0 => "exp((c eps^p)^-2)".to_string(),
        Regime::Generic => format!("(c eps^p)^({:.6})", -2.0 * (p - 1.0) / (3.0 - p)),
    };
    Ok(LifespanPrediction {
        p,
        eps,
        class,
        regime,
        value: eval(c_lo)?,
        upper: eval(c_hi)?,
        formula_text,
    })
}

/// `(T+1)^{1/2} ∫₀^T (1+t)^{-(2p-1)/2} dt`, integral in closed form.
pub fn tilde_t2p_lhs(p: f64, t: f64) -> f64 {
    let a = p - 0.5;
    let x = 1.0 + t;
    let integral = if (a - 1.0).abs() < 1e-12 {
        x.ln()
    } else {
        (x.powf(1.0 - a) - 1.0) / (1.0 - a)
    };
    x.sqrt() * integral
}

/// Root `T > 1` of `tilde_t2p_lhs(p, T) = C ε^{1-p}` by bracketed bisection.
pub fn tilde_t2p(p: f64, eps: f64, c: f64) -> Result<f64> {
    if !(p > 1.0 && p <= 3.0) {
        return Err(Error::Exponent(p));
    }
    if !(eps > 0.0 && c > 0.0) {
        return Err(Error::Domain("eps and C must be positive".into()));
    }
    let rhs = c * eps.powf(1.0 - p);
    if !rhs.is_finite() || tilde_t2p_lhs(p, 1.0) >= rhs {
        return Err(Error::Horizon(rhs));
    }
    let mut lo = 1.0;
    let mut hi = 2.0;
    while tilde_t2p_lhs(p, hi) < rhs {
        lo = hi;
        hi *= 2.0;
        if hi > 1e300 {
            return Err(Error::Horizon(rhs));
        }
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if tilde_t2p_lhs(p, mid) < rhs {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Leading-order closed form of [`tilde_t2p`] with the constant tracked:
/// `((p-3/2) C ε^{1-p})²` for `p > 3/2`, `e^{2 W(C ε^{-1/2} / 2)} - 1` at `p = 3/2`,
/// `((3/2-p) C ε^{1-p})^{1/(2-p)}` for `p < 3/2`.
pub fn tilde_t2p_closed_form(p: f64, eps: f64, c: f64) -> Result<f64> {
    if !(p > 1.0 && p <= 3.0) {
        return Err(Error::Exponent(p));
    }
    let rhs = c * eps.powf(1.0 - p);
    Ok(if is_critical(p) {
        (2.0 * lambert_w0(0.5 * rhs)?).exp() - 1.0
    } else if p > 1.5 {
        ((p - 1.5) * rhs).powi(2)
    } else {
        ((1.5 - p) * rhs).powf(1.0 / (2.0 - p))
    })
}
