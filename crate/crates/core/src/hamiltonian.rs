//! Hamiltonians of the two-pump system in each frame: lab, rotating,
//! displaced Jaynes-Cummings, and dispersive, plus the f-state
//! correction and the Schrieffer-Wolff transformation chain.

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::C64;
use crate::operator::{HilbertSpace, Operator};
use crate::params::{zeta_formula, DerivedParams, SystemParams};

#[derive(Clone, Copy, PartialEq, Eq, Debug, Serialize, Deserialize)]
pub enum Frame {
    Lab,
    Rotating,
    DisplacedJc,
    Dispersive,
}

/// Real-valued drive coefficient as a function of time.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub enum DriveEnvelope {
    /// `amplitude * cos(frequency t)`
    Cosine { amplitude: f64, frequency: f64 },
    /// `amplitude * exp(-(t - center)^2 / (2 sigma^2))`
    Gaussian { amplitude: f64, center: f64, sigma: f64 },
}

impl DriveEnvelope {
    pub fn value(&self, t: f64) -> f64 {
        match *self {
            DriveEnvelope::Cosine { amplitude, frequency } => amplitude * (frequency * t).cos(),
            DriveEnvelope::Gaussian { amplitude, center, sigma } => {
                let x = (t - center) / sigma;
                amplitude * (-0.5 * x * x).exp()
            }
        }
    }
}

#[derive(Clone, Debug)]
pub struct HamiltonianModel {
    pub frame: Frame,
    pub include_f_level: bool,
    pub static_part: Operator,
    pub time_dependent_parts: Vec<(Operator, DriveEnvelope)>,
}

impl HamiltonianModel {
    pub fn from_static(frame: Frame, static_part: Operator) -> Self {
        Self { frame, include_f_level: false, static_part, time_dependent_parts: Vec::new() }
    }

    pub fn from_parts(
        frame: Frame,
        static_part: Operator,
        time_dependent_parts: Vec<(Operator, DriveEnvelope)>,
    ) -> Self {
        Self { frame, include_f_level: false, static_part, time_dependent_parts }
    }

    pub fn space(&self) -> HilbertSpace {
        self.static_part.space
    }

    /// Full Hamiltonian matrix at time `t`.
    pub fn at(&self, t: f64) -> Array2<C64> {
        let mut m = self.static_part.matrix.clone();
        for (op, env) in &self.time_dependent_parts {
            let c = C64::new(env.value(t), 0.0);
            m.zip_mut_with(&op.matrix, |a, &b| *a += c * b);
        }
        m
    }

    pub fn is_static(&self) -> bool {
        self.time_dependent_parts.is_empty()
    }

    pub fn add_correction(&mut self, correction: &HamiltonianModel) {
        assert_eq!(self.space(), correction.space());
        self.static_part = &self.static_part + &correction.static_part;
        self.time_dependent_parts
            .extend(correction.time_dependent_parts.iter().cloned());
        self.include_f_level |= correction.include_f_level;
    }
}

fn re(x: f64) -> C64 {
    C64::new(x, 0.0)
}

/// Lab-frame Hamiltonian: static dispersive part
/// `w_c a^dag a + (w_q/2) sigma_z + (chi/2) a^dag a sigma_z` plus the two
/// cosine-modulated pump terms.
pub fn build_lab_hamiltonian(p: &SystemParams, space: HilbertSpace) -> HamiltonianModel {
    let n = Operator::number(space);
    let sz = Operator::sigma_z(space);
    let sx = Operator::sigma_x(space);
    let a = Operator::annihilation(space);
    let static_part = &(&n.scale(re(p.omega_c)) + &sz.scale(re(p.omega_q / 2.0)))
        + &(&n * &sz).scale(re(p.chi / 2.0));
    let quad = &a + &a.dagger();
    HamiltonianModel {
        frame: Frame::Lab,
        include_f_level: false,
        static_part,
        time_dependent_parts: vec![
            (
                sx,
                DriveEnvelope::Cosine {
                    amplitude: p.omega_rabi,
                    frequency: p.omega_qp,
                },
            ),
            (
                quad,
                DriveEnvelope::Cosine {
                    amplitude: p.epsilon_sb,
                    frequency: p.omega_sb,
                },
            ),
        ],
    }
}

/// Doubly-rotating-frame Hamiltonian after the rotating-wave
/// approximation:
/// `Delta_c a^dag a + (Delta_q/2) sigma_z + (chi/2) a^dag a sigma_z
///  + (Omega_R/2) sigma_x + eps_sb (a + a^dag)`.
pub fn build_rotating_hamiltonian(p: &SystemParams, space: HilbertSpace) -> HamiltonianModel {
    let n = Operator::number(space);
    let sz = Operator::sigma_z(space);
    let sx = Operator::sigma_x(space);
    let a = Operator::annihilation(space);
    let static_part = &(&(&n.scale(re(p.delta_c())) + &sz.scale(re(p.delta_q() / 2.0)))
        + &(&n * &sz).scale(re(p.chi / 2.0)))
        + &(&sx.scale(re(p.omega_rabi / 2.0)) + &(&a + &a.dagger()).scale(re(p.epsilon_sb)));
    HamiltonianModel {
        frame: Frame::Rotating,
        include_f_level: false,
        static_part,
        time_dependent_parts: vec![],
    }
}

/// Tolerance on the sigma_z-cancelling condition `Delta_q = -n_sb chi`,
/// relative to kappa.
const FRAME_MATCH_TOL: f64 = 1e-6;

/// Effective Jaynes-Cummings Hamiltonian in the displaced frame:
/// `Delta_c d^dag d + (Omega_R/2) sigma_x
///  + (chi/2)(abar^* d + abar d^dag + d^dag d)(sigma_x^+ + sigma_x^-)`.
/// With `rwa` set, the counter-rotating terms are dropped, leaving
/// `(chi/2)(abar^* d sigma_x^+ + abar d^dag sigma_x^-)`.
pub fn build_jc_hamiltonian(
    p: &SystemParams,
    d: &DerivedParams,
    space: HilbertSpace,
    rwa: bool,
) -> Result<HamiltonianModel> {
    let residual = (p.delta_q() + d.n_bar_sb * p.chi).abs();
    if residual > FRAME_MATCH_TOL * p.kappa {
        return Err(Error::FrameMismatch { residual });
    }
    let dd = Operator::annihilation(space); // displaced-frame lowering operator
    let n = Operator::number(space);
    let sx = Operator::sigma_x(space);
    let bare = &n.scale(re(p.delta_c())) + &sx.scale(re(p.omega_rabi / 2.0));
    let coupling = if rwa {
        let sxp = Operator::sigma_x_plus(space);
        let sxm = Operator::sigma_x_minus(space);
        &(&dd * &sxp).scale(d.a_bar.conj() * (p.chi / 2.0))
            + &(&dd.dagger() * &sxm).scale(d.a_bar * (p.chi / 2.0))
    } else {
        let sz = Operator::sigma_z(space); // sigma_x^+ + sigma_x^-
        let field = &(&dd.scale(d.a_bar.conj()) + &dd.dagger().scale(d.a_bar)) + &n;
        (&field * &sz).scale(re(p.chi / 2.0))
    };
    Ok(HamiltonianModel {
        frame: Frame::DisplacedJc,
        include_f_level: false,
        static_part: &bare + &coupling,
        time_dependent_parts: vec![],
    })
}

/// Dispersive sigma_x Hamiltonian:
/// `Delta_c d^dag d + ((Omega_R + zeta'/2)/2) sigma_x
///  + (zeta/2) d^dag d sigma_x + (chi^2/4 Omega_R) d^dag d^dag d d sigma_x`.
/// Returns validity warnings when |Delta|/g_eff, |Sigma|/g_eff or
/// Omega_R/(|chi|/2) drop below 5.
pub fn build_dispersive_hamiltonian(
    p: &SystemParams,
    d: &DerivedParams,
    space: HilbertSpace,
) -> (HamiltonianModel, Vec<String>) {
    let mut warnings = Vec::new();
    let names = ["|Delta|/g_eff", "|Sigma|/g_eff", "Omega_R/(|chi|/2)"];
    for (name, ratio) in names.iter().zip(d.dispersive_ratios(p.chi)) {
        if ratio < 5.0 {
            warnings.push(format!("dispersive validity ratio {name} = {ratio:.2} < 5"));
        }
    }
    let dd = Operator::annihilation(space);
    let n = Operator::number(space);
    let sx = Operator::sigma_x(space);
    let kerr = &(&dd.dagger() * &dd.dagger()) * &(&dd * &dd);
    let static_part = &(&n.scale(re(p.delta_c()))
        + &sx.scale(re((p.omega_rabi + d.zeta_prime / 2.0) / 2.0)))
        + &(&(&n * &sx).scale(re(d.zeta / 2.0))
            + &(&kerr * &sx).scale(re(p.chi * p.chi / (4.0 * p.omega_rabi))));
    (
        HamiltonianModel {
            frame: Frame::Dispersive,
            include_f_level: false,
            static_part,
            time_dependent_parts: vec![],
        },
        warnings,
    )
}

/// Dispersive sigma_x coupling strength and Lamb shift (supplementary
/// closed form). Thin wrapper over [`zeta_formula`] taking the derived
/// parameter set.
pub fn zeta(p: &SystemParams, d: &DerivedParams) -> Result<(f64, f64)> {
    zeta_formula(p.chi, d.n_bar_sb, d.delta, d.sigma, p.omega_rabi)
}

/// The three Schrieffer-Wolff unitaries that diagonalize the JC coupling
/// to first order:
/// `U   = exp[(chi/2Delta)(abar^* d sigma_x^+ - abar d^dag sigma_x^-)]`
/// `U'  = exp[(chi/2Sigma)(abar d^dag sigma_x^+ - abar^* d sigma_x^-)]`
/// `U'' = exp[(chi/2Omega_R) d^dag d (sigma_x^+ - sigma_x^-)]`
pub fn schrieffer_wolff_generators(
    p: &SystemParams,
    d: &DerivedParams,
    space: HilbertSpace,
) -> Result<(Operator, Operator, Operator)> {
    let (g1, g2, g3) = sw_generator_matrices(p, d, space);
    Ok((g1.expm()?, g2.expm()?, g3.expm()?))
}

/// The anti-Hermitian generators before exponentiation.
pub fn sw_generator_matrices(
    p: &SystemParams,
    d: &DerivedParams,
    space: HilbertSpace,
) -> (Operator, Operator, Operator) {
    let dd = Operator::annihilation(space);
    let n = Operator::number(space);
    let sxp = Operator::sigma_x_plus(space);
    let sxm = Operator::sigma_x_minus(space);
    let c1 = re(p.chi / (2.0 * d.delta));
    let g1 = (&(&dd * &sxp).scale(d.a_bar.conj()) - &(&dd.dagger() * &sxm).scale(d.a_bar))
        .scale(c1);
    let c2 = re(p.chi / (2.0 * d.sigma));
    let g2 = (&(&dd.dagger() * &sxp).scale(d.a_bar) - &(&dd * &sxm).scale(d.a_bar.conj()))
        .scale(c2);
    let c3 = re(p.chi / (2.0 * p.omega_rabi));
    let g3 = (&n * &(&sxp - &sxm)).scale(c3);
    (g1, g2, g3)
}

/// f-state correction to the displaced-frame Hamiltonian:
/// `alpha |f><f| + sqrt(2) Omega_R (|e><f| + |f><e|)
///  + (3chi/2)(abar^* d + abar d^dag + d^dag d)|f><f|`.
pub fn build_f_correction(p: &SystemParams, space: HilbertSpace) -> Result<HamiltonianModel> {
    if space.n_qubit < 3 {
        return Err(Error::DimensionMismatch {
            context: format!("f correction needs n_qubit >= 3, got {}", space.n_qubit),
        });
    }
    let a_bar = p.steady_state_amplitude();
    let dd = Operator::annihilation(space);
    let n = Operator::number(space);
    let proj_f = Operator::qubit_projector(space, 2)?;
    let ef = Operator::qubit_transition(space, 1, 2)?;
    let fe = Operator::qubit_transition(space, 2, 1)?;
    let field = &(&dd.scale(a_bar.conj()) + &dd.dagger().scale(a_bar)) + &n;
    let static_part = &(&proj_f.scale(re(p.alpha_anh))
        + &(&ef + &fe).scale(re(std::f64::consts::SQRT_2 * p.omega_rabi)))
        + &(&field * &proj_f).scale(re(1.5 * p.chi));
    Ok(HamiltonianModel {
        frame: Frame::DisplacedJc,
        include_f_level: true,
        static_part,
        time_dependent_parts: vec![],
    })
}

/// Displaced-frame n-level transmon ladder with quartic (Kerr-type)
/// anharmonicity: level energies `(alpha/2) k(k-1)` under the
/// frame-matched condition, sqrt(k)-scaled Rabi drive elements, and
/// per-level cavity pull `(k - 1/2) chi`. Used for the high-level
/// population robustness check.
pub fn build_n_level_transmon(
    p: &SystemParams,
    n_levels: usize,
    space: HilbertSpace,
) -> Result<HamiltonianModel> {
    if !(3..=7).contains(&n_levels) || space.n_qubit != n_levels {
        return Err(Error::DimensionMismatch {
            context: format!(
                "n_levels = {} must be in 3..=7 and match n_qubit = {}",
                n_levels, space.n_qubit
            ),
        });
    }
    let a_bar = p.steady_state_amplitude();
    let dd = Operator::annihilation(space);
    let n = Operator::number(space);
    let b = Operator::qubit_lowering(space);
    let field = &(&dd.scale(a_bar.conj()) + &dd.dagger().scale(a_bar)) + &n;

    let mut ladder = Operator::zeros(space);
    let mut pull = Operator::zeros(space);
    for k in 0..n_levels {
        let proj = Operator::qubit_projector(space, k)?;
        let energy = 0.5 * p.alpha_anh * (k as f64) * (k as f64 - 1.0);
        ladder = &ladder + &proj.scale(re(energy));
        pull = &pull + &proj.scale(re((2.0 * k as f64 - 1.0) * p.chi / 2.0));
    }
    let static_part = &(&(&n.scale(re(p.delta_c())) + &ladder)
        + &(&b + &b.dagger()).scale(re(p.omega_rabi / 2.0)))
        + &(&field * &pull);
    Ok(HamiltonianModel {
        frame: Frame::DisplacedJc,
        include_f_level: true,
        static_part,
        time_dependent_parts: vec![],
    })
}
