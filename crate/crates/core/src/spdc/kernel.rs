use std::f64::consts::PI;

use num_complex::Complex64;

use super::modes::ModeDescriptor;
use super::quadrature::gauss_legendre;
use super::{DetectionConfig, Quadrature};

/// Fraction of Σ|W| that node pruning may discard.
const PRUNE_FRACTION: f64 = 1e-10;

/// Quadrature nodes of the transverse integral with their mode weights.
///
/// Per node: |Q|² (pump transverse wavevector), ρ_s², ρ_i² and the weight
/// W = 2π·w·ρ_sρ_i·V_p(Q)·G_s*(ρ_s)·G_i*(ρ_i) with the relative-angle
/// factors folded in. Nodes at ψ and 2π − ψ share all three squares and are
/// merged.
#[derive(Debug, Clone)]
pub struct SpatialKernel {
    pub(crate) q_pump_sq: Vec<f64>,
    pub(crate) rho_s_sq: Vec<f64>,
    pub(crate) rho_i_sq: Vec<f64>,
    pub(crate) weight: Vec<Complex64>,
    /// false when the azimuthal selection rule forbids the process.
    pub(crate) allowed: bool,
    pub(crate) q_max: f64,
}

impl SpatialKernel {
    pub fn build(detection: &DetectionConfig, quadrature: &Quadrature) -> Self {
        let q_max = quadrature.q_max_for(detection);
        let allowed = detection.pump_mode.azimuthal()
            == detection.signal_mode.azimuthal() + detection.idler_mode.azimuthal();
        let mut kernel = Self {
            q_pump_sq: Vec::new(),
            rho_s_sq: Vec::new(),
            rho_i_sq: Vec::new(),
            weight: Vec::new(),
            allowed,
            q_max,
        };
        if !allowed {
            return kernel;
        }
        let (rho, w_rho) = gauss_legendre(quadrature.radial_order, 0.0, q_max);
        let (psi, w_psi) = gauss_legendre(quadrature.azimuthal_order, 0.0, 2.0 * PI);
        let radial = |mode: ModeDescriptor, waist: f64| -> Vec<Complex64> {
            rho.iter()
                .map(|&r| mode.radial_amplitude(r, waist).conj())
                .collect()
        };
        let gs = radial(detection.signal_mode, detection.detection_waist);
        let gi = radial(detection.idler_mode, detection.detection_waist);
        let l_p = detection.pump_mode.azimuthal() as f64;
        let l_s = detection.signal_mode.azimuthal() as f64;

        let n_psi = psi.len();
        let half = n_psi / 2;
        let mut entries: Vec<(f64, f64, f64, Complex64)> = Vec::new();
        for (a, (&rs, &ws)) in rho.iter().zip(&w_rho).enumerate() {
            for (b, (&ri, &wi)) in rho.iter().zip(&w_rho).enumerate() {
                let base = 2.0 * PI * ws * wi * rs * ri * gs[a] * gi[b];
                if base == Complex64::new(0.0, 0.0) {
                    continue;
                }
                let angular = |j: usize| -> (f64, Complex64) {
                    let (sin_p, cos_p) = psi[j].sin_cos();
                    let q2 = (rs * rs + ri * ri + 2.0 * rs * ri * cos_p).max(0.0);
                    let vp = detection
                        .pump_mode
                        .radial_amplitude(q2.sqrt(), detection.pump_waist);
                    let beta = (rs * sin_p).atan2(ri + rs * cos_p);
                    let phase = Complex64::from_polar(1.0, l_p * beta - l_s * psi[j]);
                    (q2, w_psi[j] * vp * phase)
                };
                for j in 0..half {
                    let (q2, wa) = angular(j);
                    let (_, wb) = angular(n_psi - 1 - j);
                    entries.push((q2, rs * rs, ri * ri, base * (wa + wb)));
                }
                if n_psi % 2 == 1 {
                    let (q2, wm) = angular(half);
                    entries.push((q2, rs * rs, ri * ri, base * wm));
                }
            }
        }
        prune(&mut entries);
        for (q2, s2, i2, w) in entries {
            kernel.q_pump_sq.push(q2);
            kernel.rho_s_sq.push(s2);
            kernel.rho_i_sq.push(i2);
            kernel.weight.push(w);
        }
        kernel
    }

    pub fn len(&self) -> usize {
        self.weight.len()
    }

    /// Radial cutoff the nodes were laid out on (1/m).
    pub fn q_max(&self) -> f64 {
        self.q_max
    }

    pub fn is_empty(&self) -> bool {
        self.weight.is_empty()
    }

    /// Σ W·sinc((Δk_c + δ)L/2)·e^{iδz₀} with
    /// δ = −|Q|²/(2k_p) + ρ_s²/(2k_s) + ρ_i²/(2k_i).
    pub fn project(&self, dk_collinear: f64, k: [f64; 3], length: f64, z0: f64) -> Complex64 {
        if !self.allowed {
            return Complex64::new(0.0, 0.0);
        }
        let [kp, ks, ki] = k;
        let (cp, cs, ci) = (-0.5 / kp, 0.5 / ks, 0.5 / ki);
        let half_l = 0.5 * length;
        let mut re = 0.0;
        let mut im = 0.0;
        if z0 == 0.0 {
            for n in 0..self.weight.len() {
                let delta = cp * self.q_pump_sq[n] + cs * self.rho_s_sq[n] + ci * self.rho_i_sq[n];
                let s = sinc((dk_collinear + delta) * half_l);
                re += self.weight[n].re * s;
                im += self.weight[n].im * s;
            }
        } else {
            for n in 0..self.weight.len() {
                let delta = cp * self.q_pump_sq[n] + cs * self.rho_s_sq[n] + ci * self.rho_i_sq[n];
                let s = sinc((dk_collinear + delta) * half_l);
                let (sn, cn) = (delta * z0).sin_cos();
                let w = self.weight[n];
                re += s * (w.re * cn - w.im * sn);
                im += s * (w.re * sn + w.im * cn);
            }
        }
        Complex64::new(re, im)
    }
}

/// Drops the smallest-weight nodes whose combined magnitude stays below
/// PRUNE_FRACTION of the total; keeps the original node order otherwise.
fn prune(entries: &mut Vec<(f64, f64, f64, Complex64)>) {
    let total: f64 = entries.iter().map(|e| e.3.norm()).sum();
    if total == 0.0 {
        entries.clear();
        return;
    }
    let mut mags: Vec<f64> = entries.iter().map(|e| e.3.norm()).collect();
    mags.sort_by(f64::total_cmp);
    let budget = PRUNE_FRACTION * total;
    let mut acc = 0.0;
    let mut cut = 0.0;
    for m in mags {
        if acc + m > budget {
            break;
        }
        acc += m;
        cut = m;
    }
    if acc > 0.0 {
        entries.retain(|e| e.3.norm() > cut);
    }
}

pub fn sinc(x: f64) -> f64 {
    if x.abs() < 1e-4 {
        1.0 - x * x / 6.0
    } else {
        x.sin() / x
    }
}
