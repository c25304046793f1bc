//! Analytic rate predictions: cavity shot-noise spectrum, golden-rule
//! transition rates of the effective qubit, their Purcell interpretation,
//! sideband-induced dephasing, and measurement-fidelity composition.

use crate::error::{Error, Result};
use crate::params::{DerivedParams, SystemParams};

/// Cavity photon shot-noise spectral density parameters.
#[derive(Debug, Clone, Copy)]
pub struct NoiseSpectrum {
    pub n_bar: f64,
    pub kappa: f64,
    pub delta_c: f64,
}

impl NoiseSpectrum {
    pub fn new(n_bar: f64, kappa: f64, delta_c: f64) -> Result<Self> {
        if !(n_bar >= 0.0) || !(kappa > 0.0) {
            return Err(Error::InvalidParams(format!(
                "noise spectrum requires n_bar >= 0 and kappa > 0, got {n_bar}, {kappa}"
            )));
        }
        Ok(Self { n_bar, kappa, delta_c })
    }

    pub fn from_params(p: &SystemParams, d: &DerivedParams) -> Result<Self> {
        Self::new(d.n_bar_sb, p.kappa, p.delta_c())
    }
}

/// S_nn[omega] = n_bar kappa / ((omega - Delta_c)^2 + (kappa/2)^2),
/// a Lorentzian peaked at Delta_c with FWHM kappa. Units of seconds.
pub fn s_nn(spec: &NoiseSpectrum, omega: f64) -> f64 {
    let dw = omega - spec.delta_c;
    spec.n_bar * spec.kappa / (dw * dw + (spec.kappa / 2.0).powi(2))
}

#[derive(Debug, Clone, Copy)]
pub struct TransitionRates {
    /// |+> -> |-> rate, (chi/2)^2 S_nn[Omega_R]
    pub gamma_plus_minus: f64,
    /// |-> -> |+> rate, (chi/2)^2 S_nn[-Omega_R]
    pub gamma_minus_plus: f64,
    /// sideband-induced dephasing lifetime at Omega_R = 0
    pub t2_sideband: f64,
    /// Purcell-form |+> -> |->: kappa (chi |a_bar| / 2 Delta)^2
    pub gamma_purcell_pm: f64,
    /// Purcell-form |-> -> |+>: kappa (chi |a_bar| / 2 Sigma)^2
    pub gamma_purcell_mp: f64,
}

/// Fermi-golden-rule rates of the effective qubit against the cavity
/// shot-noise bath, with the Purcell-form counterparts alongside.
pub fn golden_rule_rates(p: &SystemParams, d: &DerivedParams) -> Result<TransitionRates> {
    let spec = NoiseSpectrum::from_params(p, d)?;
    let half_chi_sq = (p.chi / 2.0).powi(2);
    let (purcell_pm, purcell_mp) = purcell_rates(p, d);
    Ok(TransitionRates {
        gamma_plus_minus: half_chi_sq * s_nn(&spec, p.omega_rabi),
        gamma_minus_plus: half_chi_sq * s_nn(&spec, -p.omega_rabi),
        t2_sideband: sideband_induced_t2(p),
        gamma_purcell_pm: purcell_pm,
        gamma_purcell_mp: purcell_mp,
    })
}

/// Decay of the effective qubit read as a Purcell effect of the
/// sideband-dressed cavity: (kappa (chi |a_bar| / 2 Delta)^2,
/// kappa (chi |a_bar| / 2 Sigma)^2). Agrees with the golden-rule rates
/// for |Delta|, |Sigma| >> kappa.
pub fn purcell_rates(p: &SystemParams, d: &DerivedParams) -> (f64, f64) {
    let g = p.chi * d.a_bar.norm() / 2.0;
    let pm = if d.delta != 0.0 {
        p.kappa * (g / d.delta).powi(2)
    } else {
        f64::INFINITY
    };
    let mp = if d.sigma != 0.0 {
        p.kappa * (g / d.sigma).powi(2)
    } else {
        f64::INFINITY
    };
    (pm, mp)
}

/// Sideband-induced qubit lifetime with the Rabi drive off:
/// T2 = 2 / (chi^2 S_nn[0]). Infinite without sideband photons.
pub fn sideband_induced_t2(p: &SystemParams) -> f64 {
    let a_bar = p.steady_state_amplitude();
    let n_bar = a_bar.norm_sqr();
    if n_bar == 0.0 || p.chi == 0.0 {
        return f64::INFINITY;
    }
    let spec = NoiseSpectrum { n_bar, kappa: p.kappa, delta_c: p.delta_c() };
    2.0 / (p.chi * p.chi * s_nn(&spec, 0.0))
}

/// Probability of assigning the pre-measurement state correctly:
/// survival over the integration window times the histogram overlap
/// complement, e^(-t_m/t_jump) (1 - overlap_error).
pub fn fidelity_composition(t_m: f64, t_jump: f64, overlap_error: f64) -> Result<f64> {
    if !(t_m > 0.0 && t_jump > 0.0) {
        return Err(Error::InvalidParams(format!(
            "integration and jump times must be positive, got {t_m}, {t_jump}"
        )));
    }
    if !(0.0..1.0).contains(&overlap_error) {
        return Err(Error::InvalidParams(format!(
            "overlap error must be in [0, 1), got {overlap_error}"
        )));
    }
    Ok((-t_m / t_jump).exp() * (1.0 - overlap_error))
}
