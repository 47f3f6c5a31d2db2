//! Closed-form sharp constants of the problem, from Gamma-function formulas.
//!
//! With S the sharp Sobolev constant in R^3 and C_alpha the sharp
//! Hardy-Littlewood-Sobolev constant at the conjugate pair
//! theta = r = 6/(6-alpha), the nonlocal quotient saturates at
//! S_HL = S C_alpha^{-1/(6-alpha)}, and the normalized bubble
//! Ubar = Cbar_alpha U solves the whole-space equation with unit coupling.

use crate::error::{Error, Result};
use std::f64::consts::PI;

/// Validated exponent parameter alpha in (0, 3).
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct Alpha(f64);

impl Alpha {
    pub fn new(value: f64) -> Result<Self> {
        if value.is_finite() && value > 0.0 && value < 3.0 {
            Ok(Self(value))
        } else {
            Err(Error::AlphaOutOfRange { value })
        }
    }

    pub fn get(self) -> f64 {
        self.0
    }
}

impl TryFrom<f64> for Alpha {
    type Error = Error;
    fn try_from(value: f64) -> Result<Self> {
        Self::new(value)
    }
}

/// All five closed-form constants at a given alpha.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConstantsBundle {
    /// Sharp Sobolev constant S = 3 (pi/2)^{4/3}.
    pub s: f64,
    /// Sharp HLS constant C_alpha.
    pub c_alpha: f64,
    /// Sharp reversed-HLS constant Ctilde_alpha.
    pub c_tilde_alpha: f64,
    /// S_HL = S C_alpha^{-1/(6-alpha)}.
    pub s_hl: f64,
    /// Bubble normalization Cbar_alpha.
    pub c_bar_alpha: f64,
}

impl ConstantsBundle {
    pub fn new(alpha: Alpha) -> Self {
        Self {
            s: sobolev_constant(),
            c_alpha: hls_constant(alpha),
            c_tilde_alpha: rhls_constant(alpha),
            s_hl: shl_constant(alpha),
            c_bar_alpha: bubble_normalization(alpha),
        }
    }
}

/// Lanczos approximation (g = 7, 9 terms), accurate to ~1e-14 relative on
/// the arguments used here (all in (0, 5]).
const LANCZOS_G: f64 = 7.0;
const LANCZOS_COEF: [f64; 9] = [
    0.999_999_999_999_809_93,
    676.520_368_121_885_1,
    -1_259.139_216_722_402_8,
    771.323_428_777_653_13,
    -176.615_029_162_140_59,
    12.507_343_278_686_905,
    -0.138_571_095_265_720_12,
    9.984_369_578_019_571_6e-6,
    1.505_632_735_149_311_6e-7,
];

/// Gamma function for positive real arguments.
pub fn gamma(z: f64) -> f64 {
    if z < 0.5 {
        // reflection, needed for (3-alpha)/2 when alpha > 2
        return PI / ((PI * z).sin() * gamma(1.0 - z));
    }
    let z = z - 1.0;
    let mut acc = LANCZOS_COEF[0];
    for (k, &c) in LANCZOS_COEF.iter().enumerate().skip(1) {
        acc += c / (z + k as f64);
    }
    let t = z + LANCZOS_G + 0.5;
    (2.0 * PI).sqrt() * t.powf(z + 0.5) * (-t).exp() * acc
}

/// S = 3 (pi/2)^{4/3}.
pub fn sobolev_constant() -> f64 {
    3.0 * (PI / 2.0).powf(4.0 / 3.0)
}

/// Sharp HLS constant at theta = r = 6/(6-alpha):
/// C_alpha = pi^{alpha/2} Gamma((3-alpha)/2)/Gamma(3-alpha/2)
///           (Gamma(3)/Gamma(3/2))^{(3-alpha)/3}.
pub fn hls_constant(alpha: Alpha) -> f64 {
    let a = alpha.get();
    PI.powf(a / 2.0) * gamma((3.0 - a) / 2.0) / gamma(3.0 - a / 2.0)
        * (gamma(3.0) / gamma(1.5)).powf((3.0 - a) / 3.0)
}

/// Sharp reversed HLS constant at theta = r = 6/(6+alpha):
/// Ctilde_alpha = pi^{-alpha/2} Gamma((3+alpha)/2)/Gamma(3+alpha/2)
///                (Gamma(3)/Gamma(3/2))^{(3+alpha)/3}.
pub fn rhls_constant(alpha: Alpha) -> f64 {
    let a = alpha.get();
    PI.powf(-a / 2.0) * gamma((3.0 + a) / 2.0) / gamma(3.0 + a / 2.0)
        * (gamma(3.0) / gamma(1.5)).powf((3.0 + a) / 3.0)
}

/// S_HL = S C_alpha^{-1/(6-alpha)}.
pub fn shl_constant(alpha: Alpha) -> f64 {
    sobolev_constant() * hls_constant(alpha).powf(-1.0 / (6.0 - alpha.get()))
}

/// Cbar_alpha = 3^{1/4} S^{-(3-alpha)/(4(5-alpha))} C_alpha^{-1/(2(5-alpha))}.
pub fn bubble_normalization(alpha: Alpha) -> f64 {
    let a = alpha.get();
    3.0_f64.powf(0.25)
        * sobolev_constant().powf(-(3.0 - a) / (4.0 * (5.0 - a)))
        * hls_constant(alpha).powf(-1.0 / (2.0 * (5.0 - a)))
}
