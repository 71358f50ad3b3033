use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::Error;

/// Paraxial transverse mode.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum ModeDescriptor {
    Gaussian,
    /// Laguerre–Gauss with azimuthal index `l` and radial index `p`.
    LaguerreGauss {
        l: i32,
        p: u32,
    },
}

impl ModeDescriptor {
    pub fn azimuthal(&self) -> i32 {
        match *self {
            ModeDescriptor::Gaussian => 0,
            ModeDescriptor::LaguerreGauss { l, .. } => l,
        }
    }

    pub fn radial(&self) -> u32 {
        match *self {
            ModeDescriptor::Gaussian => 0,
            ModeDescriptor::LaguerreGauss { p, .. } => p,
        }
    }

    /// Radial profile at |q| = rho, including the constant (−i)^(2p+|l|)
    /// phase but not the azimuthal factor e^{ilφ}.
    pub fn radial_amplitude(&self, rho: f64, waist: f64) -> Complex64 {
        let l = self.azimuthal().unsigned_abs();
        let p = self.radial();
        let x = 0.5 * rho * rho * waist * waist;
        let norm =
            (waist * waist * factorial(p) / (2.0 * std::f64::consts::PI * factorial(p + l))).sqrt();
        let value = norm * x.sqrt().powi(l as i32) * laguerre(p, l as f64, x) * (-0.5 * x).exp();
        value * minus_i_pow(2 * p + l)
    }
}

impl fmt::Display for ModeDescriptor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ModeDescriptor::Gaussian => write!(f, "gaussian"),
            ModeDescriptor::LaguerreGauss { l, p } => write!(f, "lg({l},{p})"),
        }
    }
}

impl FromStr for ModeDescriptor {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Error> {
        let t: String = s
            .chars()
            .filter(|c| !c.is_whitespace())
            .collect::<String>()
            .to_ascii_lowercase();
        if t == "gaussian" || t == "gauss" {
            return Ok(ModeDescriptor::Gaussian);
        }
        let bad = || {
            Error::Config(format!(
                "unsupported mode '{s}' (expected 'gaussian' or 'lg(l,p)')"
            ))
        };
        let inner = t
            .strip_prefix("lg(")
            .and_then(|r| r.strip_suffix(')'))
            .ok_or_else(bad)?;
        let (l, p) = inner.split_once(',').ok_or_else(bad)?;
        let l: i32 = l.parse().map_err(|_| bad())?;
        let p: u32 = p.parse().map_err(|_| bad())?;
        Ok(ModeDescriptor::LaguerreGauss { l, p })
    }
}

impl TryFrom<String> for ModeDescriptor {
    type Error = Error;
    fn try_from(s: String) -> Result<Self, Error> {
        s.parse()
    }
}

impl From<ModeDescriptor> for String {
    fn from(m: ModeDescriptor) -> String {
        m.to_string()
    }
}

/// Momentum-space mode value G(q) at q = (qx, qy), normalized to
/// ∫|G|² d²q = 1. A nonzero `axial_offset` adds the defocus phase
/// e^{−i|q|²z/(2k)} for wavenumber `k`.
pub fn mode_amplitude(
    mode: ModeDescriptor,
    q: [f64; 2],
    waist: f64,
    axial_offset: f64,
    k: f64,
) -> Complex64 {
    let rho2 = q[0] * q[0] + q[1] * q[1];
    let mut g = mode.radial_amplitude(rho2.sqrt(), waist);
    let l = mode.azimuthal();
    if l != 0 {
        g *= Complex64::from_polar(1.0, l as f64 * q[1].atan2(q[0]));
    }
    if axial_offset != 0.0 {
        g *= Complex64::from_polar(1.0, -rho2 * axial_offset / (2.0 * k));
    }
    g
}

/// Generalized Laguerre polynomial L_p^α(x).
pub fn laguerre(p: u32, alpha: f64, x: f64) -> f64 {
    let mut l0 = 1.0;
    if p == 0 {
        return l0;
    }
    let mut l1 = 1.0 + alpha - x;
    for k in 1..p {
        let kf = k as f64;
        let l2 = ((2.0 * kf + 1.0 + alpha - x) * l1 - (kf + alpha) * l0) / (kf + 1.0);
        l0 = l1;
        l1 = l2;
    }
    l1
}

fn factorial(n: u32) -> f64 {
    (1..=n).map(f64::from).product()
}

fn minus_i_pow(n: u32) -> Complex64 {
    match n % 4 {
        0 => Complex64::new(1.0, 0.0),
        1 => Complex64::new(0.0, -1.0),
        2 => Complex64::new(-1.0, 0.0),
        _ => Complex64::new(0.0, 1.0),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_and_display() {
        assert_eq!(
            "Gaussian".parse::<ModeDescriptor>().unwrap(),
            ModeDescriptor::Gaussian
        );
        let m: ModeDescriptor = "LG(-1, 0)".parse().unwrap();
        assert_eq!(m, ModeDescriptor::LaguerreGauss { l: -1, p: 0 });
        assert_eq!(m.to_string(), "lg(-1,0)");
        assert!("hermite(1,0)".parse::<ModeDescriptor>().is_err());
    }

    #[test]
    fn laguerre_low_orders() {
        let x = 0.7;
        assert_eq!(laguerre(0, 2.0, x), 1.0);
        assert!((laguerre(1, 2.0, x) - (3.0 - x)).abs() < 1e-15);
        let l2 = 0.5 * (x * x - 2.0 * (2.0 + 2.0) * x + (2.0 + 1.0) * (2.0 + 2.0));
        assert!((laguerre(2, 2.0, x) - l2).abs() < 1e-14);
    }

    #[test]
    fn gaussian_peak_and_vortex_null() {
        let g = mode_amplitude(ModeDescriptor::Gaussian, [0.0, 0.0], 1e-5, 0.0, 1.0);
        assert!(g.re > 0.0 && g.im == 0.0);
        let off = mode_amplitude(ModeDescriptor::Gaussian, [1e5, 0.0], 1e-5, 0.0, 1.0);
        assert!(off.norm() < g.norm());
        let v = mode_amplitude(
            ModeDescriptor::LaguerreGauss { l: 1, p: 0 },
            [0.0, 0.0],
            1e-5,
            0.0,
            1.0,
        );
        assert_eq!(v.norm(), 0.0);
    }
}
