//! Crystal refractive indices, wavenumbers, phase mismatch and the
//! linear shift constants that map temperature or pump detuning onto the
//! relative signal/idler frequency.

mod crystal;
mod index;

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

pub use crystal::{CrystalModel, Role, BUILTIN_PPKTP_NAME};
pub use index::{AxisIndex, Dispersion, ThermoOptic};

use crate::error::{Error, Result};
use crate::spectral::SPEED_OF_LIGHT;

/// Relative agreement required between successive derivative estimates.
pub const DERIVATIVE_TOLERANCE: f64 = 1e-7;
/// Maximum number of step halvings before giving up.
pub const MAX_HALVINGS: u32 = 6;

/// Absolute frequency of a field, given the pump frequency and the relative
/// frequency Ω (signal at ω_p/2 + Ω, idler at ω_p/2 − Ω).
pub fn field_frequency(role: Role, omega_p: f64, omega_rel: f64) -> f64 {
    match role {
        Role::Pump => omega_p,
        Role::Signal => 0.5 * omega_p + omega_rel,
        Role::Idler => 0.5 * omega_p - omega_rel,
    }
}

/// k = n(ω, T)·ω/c (1/m).
pub fn wavenumber(model: &CrystalModel, role: Role, omega: f64, temp_c: f64) -> Result<f64> {
    if !(omega.is_finite() && omega > 0.0) || !temp_c.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "wavenumber needs positive finite ω and finite T, got ω = {omega}, T = {temp_c}"
        )));
    }
    Ok(model.axis(role).index(omega, temp_c)? * omega / SPEED_OF_LIGHT)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Variable {
    Omega,
    Temperature,
}

/// Five-point central difference with step halving until two successive
/// estimates agree to [`DERIVATIVE_TOLERANCE`].
pub fn converged_derivative<F>(f: F, x: f64, h0: f64) -> Result<f64>
where
    F: Fn(f64) -> Result<f64>,
{
    let stencil = |h: f64| -> Result<f64> {
        let fm2 = f(x - 2.0 * h)?;
        let fm1 = f(x - h)?;
        let fp1 = f(x + h)?;
        let fp2 = f(x + 2.0 * h)?;
        Ok(((fm2 - fp2) + 8.0 * (fp1 - fm1)) / (12.0 * h))
    };
    let mut h = h0;
    let mut prev = stencil(h)?;
    let mut change = f64::INFINITY;
    for _ in 0..MAX_HALVINGS {
        h *= 0.5;
        let next = stencil(h)?;
        let scale = next.abs().max(prev.abs());
        change = if scale == 0.0 {
            0.0
        } else {
            (next - prev).abs() / scale
        };
        if change <= DERIVATIVE_TOLERANCE {
            return Ok(next);
        }
        prev = next;
    }
    Err(Error::DerivativeNotConverged {
        halvings: MAX_HALVINGS,
        change,
    })
}

/// Initial finite-difference steps.
fn initial_step(wrt: Variable, omega: f64) -> f64 {
    match wrt {
        Variable::Omega => 1e-3 * omega,
        Variable::Temperature => 0.5,
    }
}

/// ∂k/∂ω (s/m) or ∂k/∂T (1/(m·°C)) of one field.
pub fn derivative(
    model: &CrystalModel,
    role: Role,
    wrt: Variable,
    omega: f64,
    temp_c: f64,
) -> Result<f64> {
    let h0 = initial_step(wrt, omega);
    match wrt {
        Variable::Omega => converged_derivative(|w| wavenumber(model, role, w, temp_c), omega, h0),
        Variable::Temperature => {
            converged_derivative(|t| wavenumber(model, role, omega, t), temp_c, h0)
        }
    }
}

/// Δk = k_p(ω_p) − k_s(ω_p/2 + Ω) − k_i(ω_p/2 − Ω) − 2π/Λ(T) + q_terms.
///
/// `q_terms` carries the transverse contribution; zero for collinear fields.
pub fn phase_mismatch(
    model: &CrystalModel,
    omega_rel: f64,
    temp_c: f64,
    omega_p: f64,
    q_terms: f64,
) -> Result<f64> {
    let kp = wavenumber(model, Role::Pump, omega_p, temp_c)?;
    let ks = wavenumber(model, Role::Signal, 0.5 * omega_p + omega_rel, temp_c)?;
    let ki = wavenumber(model, Role::Idler, 0.5 * omega_p - omega_rel, temp_c)?;
    Ok(kp - ks - ki - 2.0 * PI / model.poling_period_at(temp_c) + q_terms)
}

/// Degenerate collinear phase-matching point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhaseMatchPoint {
    pub omega_p0: f64,
    pub omega_s0: f64,
    pub omega_i0: f64,
    pub t0_c: f64,
}

impl PhaseMatchPoint {
    /// ω_s0 = ω_i0 = ω_p0/2 (their sum is exactly ω_p0).
    pub fn degenerate(omega_p0: f64, t0_c: f64) -> Self {
        let half = 0.5 * omega_p0;
        Self {
            omega_p0,
            omega_s0: half,
            omega_i0: omega_p0 - half,
            t0_c,
        }
    }
}

/// Default half-width of the phase-matching search bracket (°C).
pub const PHASE_MATCH_BRACKET_C: f64 = 40.0;

/// Solves Δk(Ω = 0; T, ω_p) = 0 for T. The bracket [hint − w, hint + w] is
/// scanned for sign changes; the one nearest the hint is refined by bisection.
pub fn find_phase_match(
    model: &CrystalModel,
    omega_p: f64,
    t_hint: f64,
    half_width: f64,
) -> Result<PhaseMatchPoint> {
    let lo = t_hint - half_width;
    let hi = t_hint + half_width;
    let g = |t: f64| phase_mismatch(model, 0.0, t, omega_p, 0.0);
    const SCAN: usize = 64;
    let ts: Vec<f64> = (0..=SCAN)
        .map(|j| lo + (hi - lo) * j as f64 / SCAN as f64)
        .collect();
    let gs = ts.iter().map(|&t| g(t)).collect::<Result<Vec<_>>>()?;
    let mut best: Option<(f64, f64, f64)> = None;
    for j in 0..SCAN {
        if gs[j] == 0.0 {
            return Ok(PhaseMatchPoint::degenerate(omega_p, ts[j]));
        }
        if gs[j].signum() != gs[j + 1].signum() {
            let mid = 0.5 * (ts[j] + ts[j + 1]);
            if best.is_none_or(|(_, _, m)| (mid - t_hint).abs() < (m - t_hint).abs()) {
                best = Some((ts[j], ts[j + 1], mid));
            }
        }
    }
    let Some((mut a, mut b, _)) = best else {
        if gs[SCAN] == 0.0 {
            return Ok(PhaseMatchPoint::degenerate(omega_p, hi));
        }
        return Err(Error::NoPhaseMatch { lo_c: lo, hi_c: hi });
    };
    let mut ga = g(a)?;
    for _ in 0..200 {
        let m = 0.5 * (a + b);
        if b - a < 1e-11 || m == a || m == b {
            break;
        }
        let gm = g(m)?;
        if gm == 0.0 {
            return Ok(PhaseMatchPoint::degenerate(omega_p, m));
        }
        if gm.signum() == ga.signum() {
            a = m;
            ga = gm;
        } else {
            b = m;
        }
    }
    Ok(PhaseMatchPoint::degenerate(omega_p, 0.5 * (a + b)))
}

/// Linear shift constants at an operating point, with the first-order
/// mismatch coefficients they derive from.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ShiftConstants {
    /// Ω' = Ω + c_t·ΔT (rad/s per °C).
    pub c_t: f64,
    /// Ω' = Ω + c_ωp·Δω_p (dimensionless).
    pub c_omega_p: f64,
    /// ∂Δk/∂T at fixed Ω (1/(m·°C)).
    pub x_t: f64,
    /// ∂Δk/∂ω_p at fixed Ω (s/m).
    pub x_omega: f64,
    /// Group index mismatch ∂k_s/∂ω − ∂k_i/∂ω (s/m).
    pub group_mismatch: f64,
    pub point: PhaseMatchPoint,
}

impl ShiftConstants {
    /// Δk ≈ X_T·ΔT + X_ω·Δω_p − D·Ω about the operating point.
    pub fn linear_mismatch(&self, omega_rel: f64, d_temp: f64, d_omega_p: f64) -> f64 {
        self.x_t * d_temp + self.x_omega * d_omega_p - self.group_mismatch * omega_rel
    }

    /// Equivalent relative frequency at the operating point.
    pub fn shifted(&self, omega_rel: f64, d_temp: f64, d_omega_p: f64) -> f64 {
        omega_rel + self.c_t * d_temp + self.c_omega_p * d_omega_p
    }
}

/// Computes c_t = −X_T/D and c_ωp = −X_ω/D at (T0, ω_p).
pub fn shift_constants(model: &CrystalModel, point: PhaseMatchPoint) -> Result<ShiftConstants> {
    let PhaseMatchPoint {
        omega_p0: omega_p,
        omega_s0,
        omega_i0,
        t0_c,
    } = point;
    let d = |role, wrt, omega| derivative(model, role, wrt, omega, t0_c);
    let kp_t = d(Role::Pump, Variable::Temperature, omega_p)?;
    let ks_t = d(Role::Signal, Variable::Temperature, omega_s0)?;
    let ki_t = d(Role::Idler, Variable::Temperature, omega_i0)?;
    let kp_w = d(Role::Pump, Variable::Omega, omega_p)?;
    let ks_w = d(Role::Signal, Variable::Omega, omega_s0)?;
    let ki_w = d(Role::Idler, Variable::Omega, omega_i0)?;
    let period = model.poling_period_at(t0_c);
    let x_t = kp_t - ks_t - ki_t + 2.0 * PI / (period * period) * model.poling_slope;
    let x_omega = kp_w - 0.5 * ks_w - 0.5 * ki_w;
    let group_mismatch = ks_w - ki_w;
    let scale = ks_w.abs().max(ki_w.abs());
    if group_mismatch.abs() <= 1e-12 * scale {
        return Err(Error::MethodInapplicable(group_mismatch));
    }
    Ok(ShiftConstants {
        c_t: -x_t / group_mismatch,
        c_omega_p: -x_omega / group_mismatch,
        x_t,
        x_omega,
        group_mismatch,
        point,
    })
}

/// Angular frequency for a vacuum wavelength in nm.
pub fn omega_from_nm(nm: f64) -> f64 {
    2.0 * PI * SPEED_OF_LIGHT / (nm * 1e-9)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn derivative_of_quadratic_wavenumber() {
        // k = a·ω² exactly, through n = a·c·ω
        let omega0 = omega_from_nm(808.5);
        let a = 2.0 / (SPEED_OF_LIGHT * omega0);
        let axis = AxisIndex::new(
            "q",
            Dispersion::OmegaPolynomial {
                omega_ref: 0.0,
                coefficients: vec![0.0, a * SPEED_OF_LIGHT],
            },
            ThermoOptic::none(),
            [300.0, 2000.0],
        );
        let mut m = CrystalModel::builtin_ppktp();
        m.signal = axis;
        let got = derivative(&m, Role::Signal, Variable::Omega, omega0, 20.0).unwrap();
        let expect = 2.0 * a * omega0;
        assert!(((got - expect) / expect).abs() < 1e-9, "{got} vs {expect}");
    }

    #[test]
    fn non_smooth_function_does_not_converge() {
        let r = converged_derivative(|x: f64| Ok((1e6 * x).sin() * 1e-3 + x.abs()), 0.0, 1.0);
        assert!(matches!(r, Err(Error::DerivativeNotConverged { .. })));
    }

    #[test]
    fn builtin_phase_matches_near_58c() {
        let m = CrystalModel::builtin_ppktp();
        let p = find_phase_match(&m, omega_from_nm(404.25), 50.0, PHASE_MATCH_BRACKET_C).unwrap();
        assert!((p.t0_c - 58.0).abs() < 0.05, "{}", p.t0_c);
        let dk = phase_mismatch(&m, 0.0, p.t0_c, p.omega_p0, 0.0).unwrap();
        assert!(dk.abs() < 1e-6, "{dk}");
    }
}
