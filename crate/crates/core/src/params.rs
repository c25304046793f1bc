//! Device and drive parameters, and the quantities derived from them.
//!
//! All frequencies are stored as angular (rad/s) and all times in
//! seconds. External interfaces quote MHz-over-2pi and microseconds and
//! convert at the boundary.

use num_complex::Complex;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::C64;

pub const TWO_PI: f64 = std::f64::consts::TAU;

/// MHz-over-2pi to angular rad/s.
pub fn from_mhz(f: f64) -> f64 {
    TWO_PI * 1e6 * f
}

/// Angular rad/s to MHz-over-2pi.
pub fn to_mhz(w: f64) -> f64 {
    w / (TWO_PI * 1e6)
}

pub fn from_us(t: f64) -> f64 {
    t * 1e-6
}

pub fn to_us(t: f64) -> f64 {
    t * 1e6
}

#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct SystemParams {
    /// Cavity frequency (rad/s).
    pub omega_c: f64,
    /// Qubit frequency (rad/s).
    pub omega_q: f64,
    /// Dispersive shift (rad/s, negative for this device).
    pub chi: f64,
    /// Cavity decay rate (rad/s).
    pub kappa: f64,
    /// Rabi drive amplitude (rad/s).
    pub omega_rabi: f64,
    /// Sideband drive amplitude (rad/s).
    pub epsilon_sb: f64,
    /// Sideband pump frequency (rad/s).
    pub omega_sb: f64,
    /// Qubit pump frequency (rad/s).
    pub omega_qp: f64,
    /// Readout drive amplitude (rad/s).
    pub epsilon_r: f64,
    /// Readout detuning from the effective cavity (rad/s).
    pub delta_r: f64,
    /// Transmon anharmonicity (rad/s). Not stated by the device table;
    /// defaults to -2pi * 200 MHz, a typical transmon value.
    pub alpha_anh: f64,
    /// Qubit relaxation time (s).
    pub t1: f64,
    /// Qubit Ramsey coherence time (s).
    pub t2r: f64,
    /// Thermal excited-state population.
    pub p_e_thermal: f64,
    /// |f> -> |e> relaxation rate (1/s). Not stated by the device table;
    /// defaults to the bosonic-ladder value 2/T1.
    pub gamma_f_relax: f64,
}

impl SystemParams {
    /// The main-text device table with the paper's operating point:
    /// Delta_c/2pi = 15 MHz, n_sb = 12, Omega_R/2pi = 70 MHz, readout on
    /// the effective cavity resonance with n = 0.9 photons.
    pub fn paper_device() -> Self {
        let omega_c = TWO_PI * 7.48e9;
        let omega_q = TWO_PI * 4.9e9;
        let chi = from_mhz(-3.2);
        let kappa = from_mhz(4.0);
        let delta_c = from_mhz(15.0);
        let n_sb = 12.0_f64;
        // invert |a_bar|^2 = eps^2 / (Delta_c^2 + kappa^2/4)
        let epsilon_sb = n_sb.sqrt() * (delta_c * delta_c + kappa * kappa / 4.0).sqrt();
        let omega_rabi = from_mhz(70.0);
        // frame-matched condition Delta_q = -n_sb * chi
        let delta_q = -n_sb * chi;
        let zeta = 0.5 * chi * chi
            * (n_sb / (omega_rabi - delta_c) + n_sb / (omega_rabi + delta_c) + 1.0 / omega_rabi);
        // readout amplitude for |a_pm|^2 = 0.9 at Delta_r = 0
        let n_ro = 0.9_f64;
        let epsilon_r = n_ro.sqrt() * (zeta * zeta / 4.0 + kappa * kappa / 4.0).sqrt();
        let t1 = from_us(90.0);
        Self {
            omega_c,
            omega_q,
            chi,
            kappa,
            omega_rabi,
            epsilon_sb,
            omega_sb: omega_c - delta_c,
            omega_qp: omega_q - delta_q,
            epsilon_r,
            delta_r: 0.0,
            alpha_anh: from_mhz(-200.0),
            t1,
            t2r: from_us(40.0),
            p_e_thermal: 0.12,
            gamma_f_relax: 2.0 / t1,
        }
    }

    pub fn delta_c(&self) -> f64 {
        self.omega_c - self.omega_sb
    }

    pub fn delta_q(&self) -> f64 {
        self.omega_q - self.omega_qp
    }

    /// Pure-dephasing time from 1/T2R = 1/(2 T1) + 1/Tphi.
    pub fn t_phi(&self) -> Result<f64> {
        let inv = 1.0 / self.t2r - 1.0 / (2.0 * self.t1);
        if inv < 0.0 {
            return Err(Error::InvalidParams(format!(
                "1/T2R = {:.3e} < 1/(2 T1) = {:.3e}",
                1.0 / self.t2r,
                1.0 / (2.0 * self.t1)
            )));
        }
        Ok(if inv == 0.0 { f64::INFINITY } else { 1.0 / inv })
    }

    /// Residual of the sigma_z-cancelling condition Delta_q = -n_sb chi.
    pub fn frame_residual(&self) -> f64 {
        let n_sb = self.steady_state_amplitude().norm_sqr();
        (self.delta_q() + n_sb * self.chi).abs()
    }

    /// Steady-state cavity amplitude under the sideband drive,
    /// `a_bar = -eps_sb / (Delta_c - i kappa/2)`.
    pub fn steady_state_amplitude(&self) -> C64 {
        -Complex::new(self.epsilon_sb, 0.0) / Complex::new(self.delta_c(), -self.kappa / 2.0)
    }

    pub fn validate(&self) -> Result<()> {
        if self.kappa <= 0.0 {
            return Err(Error::InvalidParams(format!("kappa = {:.3e} <= 0", self.kappa)));
        }
        if self.t1 <= 0.0 || self.t2r <= 0.0 {
            return Err(Error::InvalidParams("T1 and T2R must be positive".into()));
        }
        self.t_phi()?;
        if !(0.0..1.0).contains(&self.p_e_thermal) {
            return Err(Error::InvalidParams(format!(
                "p_e_thermal = {} outside [0, 1)",
                self.p_e_thermal
            )));
        }
        if self.gamma_f_relax < 0.0 {
            return Err(Error::InvalidParams("gamma_f_relax < 0".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct DerivedParams {
    /// Dimensionless steady-state cavity amplitude.
    pub a_bar: C64,
    /// Sideband photon number |a_bar|^2.
    pub n_bar_sb: f64,
    /// Effective JC coupling |chi a_bar| / 2 (rad/s).
    pub g_eff: f64,
    /// Delta = Omega_R - Delta_c (rad/s).
    pub delta: f64,
    /// Sigma = Omega_R + Delta_c (rad/s).
    pub sigma: f64,
    /// Dispersive sigma_x coupling strength (rad/s).
    pub zeta: f64,
    /// Lamb shift of the effective qubit (rad/s).
    pub zeta_prime: f64,
}

impl DerivedParams {
    pub fn from_params(p: &SystemParams) -> Result<Self> {
        let a_bar = p.steady_state_amplitude();
        let n_bar_sb = a_bar.norm_sqr();
        let g_eff = (p.chi * a_bar.norm() / 2.0).abs();
        let delta = p.omega_rabi - p.delta_c();
        let sigma = p.omega_rabi + p.delta_c();
        // zeta is only defined away from resonance; NaN marks the
        // resonant regime where the dispersive treatment does not apply
        let (zeta, zeta_prime) = zeta_formula(p.chi, n_bar_sb, delta, sigma, p.omega_rabi)
            .unwrap_or((f64::NAN, f64::NAN));
        Ok(Self {
            a_bar,
            n_bar_sb,
            g_eff,
            delta,
            sigma,
            zeta,
            zeta_prime,
        })
    }

    /// The main-text rough estimate `zeta ~ g_eff^2 / (Omega_R - Delta_c)`.
    /// The full expression in [`zeta_formula`] is authoritative; this one
    /// differs from its leading term by a factor of 2.
    pub fn zeta_rough_estimate(&self) -> f64 {
        self.g_eff * self.g_eff / self.delta
    }

    /// Validity ratios |Delta|/g_eff, |Sigma|/g_eff, Omega_R/(|chi|/2)
    /// for the dispersive treatment; warn below 5.
    pub fn dispersive_ratios(&self, chi: f64) -> [f64; 3] {
        let omega_rabi = 0.5 * (self.delta + self.sigma);
        [
            (self.delta / self.g_eff).abs(),
            (self.sigma / self.g_eff).abs(),
            (omega_rabi / (chi / 2.0)).abs(),
        ]
    }
}

/// Dispersive sigma_x coupling strength and Lamb shift:
/// `zeta = (chi^2/2)(n_sb/Delta + n_sb/Sigma + 1/Omega_R)` and
/// `zeta' = (chi^2/2)(n_sb/Delta + n_sb/Sigma)`.
pub fn zeta_formula(
    chi: f64,
    n_bar_sb: f64,
    delta: f64,
    sigma: f64,
    omega_rabi: f64,
) -> Result<(f64, f64)> {
    if delta == 0.0 || sigma == 0.0 || omega_rabi == 0.0 {
        return Err(Error::DivisionByZero(
            "zeta: Delta, Sigma and Omega_R must all be nonzero".into(),
        ));
    }
    let half_chi_sq = 0.5 * chi * chi;
    let zeta_prime = half_chi_sq * (n_bar_sb / delta + n_bar_sb / sigma);
    let zeta = zeta_prime + half_chi_sq / omega_rabi;
    Ok((zeta, zeta_prime))
}
