//! Open-system evolution: Lindblad right-hand side, fixed and adaptive
//! time integration, and steady states via the vectorized Liouvillian.

use ndarray::Array2;

use crate::error::{Error, Result};
use crate::hamiltonian::{Frame, HamiltonianModel};
use crate::linalg::{self, C64};
use crate::operator::{HilbertSpace, Operator, StateVector};
use crate::params::SystemParams;

/// A jump operator together with its rate; the dissipator applied is
/// rate * D[op].
#[derive(Debug, Clone)]
pub struct CollapseOperator {
    pub op: Operator,
    pub rate: f64,
}

impl CollapseOperator {
    pub fn new(op: Operator, rate: f64) -> Result<Self> {
        if !(rate >= 0.0) {
            return Err(Error::InvalidParams(format!(
                "collapse rate must be nonnegative, got {rate}"
            )));
        }
        Ok(Self { op, rate })
    }

    /// sqrt(rate) * op, the normalized jump operator L.
    pub fn scaled(&self) -> Array2<C64> {
        self.op.matrix.mapv(|z| z * self.rate.sqrt())
    }
}

#[derive(Debug, Clone)]
pub struct DensityMatrix {
    pub space: HilbertSpace,
    pub matrix: Array2<C64>,
}

impl DensityMatrix {
    pub fn from_pure(state: &StateVector) -> Self {
        let d = state.space.dim();
        let mut m = Array2::zeros((d, d));
        for i in 0..d {
            for j in 0..d {
                m[[i, j]] = state.amplitudes[i] * state.amplitudes[j].conj();
            }
        }
        Self { space: state.space, matrix: m }
    }

    /// Validating constructor: Hermitian within 1e-9, unit trace within 1e-8.
    pub fn from_matrix(space: HilbertSpace, matrix: Array2<C64>) -> Result<Self> {
        if matrix.nrows() != space.dim() || matrix.ncols() != space.dim() {
            return Err(Error::DimensionMismatch {
                context: format!(
                    "density matrix is {}x{}, space dimension {}",
                    matrix.nrows(),
                    matrix.ncols(),
                    space.dim()
                ),
            });
        }
        let herm = linalg::max_abs(&(&matrix - &linalg::dagger(&matrix)));
        if herm > 1e-9 {
            return Err(Error::InvalidParams(format!(
                "density matrix not Hermitian, residual {herm:.2e}"
            )));
        }
        let tr = linalg::trace(&matrix);
        if (tr - C64::new(1.0, 0.0)).norm() > 1e-8 {
            return Err(Error::InvalidParams(format!(
                "density matrix trace {tr} != 1"
            )));
        }
        Ok(Self { space, matrix })
    }

    /// Thermal qubit state diag(1 - p_e, p_e, 0, ...) with the cavity in
    /// vacuum.
    pub fn thermal_qubit(space: HilbertSpace, p_e: f64) -> Self {
        let mut m = Array2::zeros((space.dim(), space.dim()));
        let g = space.index(0, 0);
        let e = space.index(1, 0);
        m[[g, g]] = C64::new(1.0 - p_e, 0.0);
        m[[e, e]] = C64::new(p_e, 0.0);
        Self { space, matrix: m }
    }

    pub fn trace(&self) -> C64 {
        linalg::trace(&self.matrix)
    }

    /// tr(op rho)
    pub fn expectation(&self, op: &Operator) -> C64 {
        assert_eq!(self.space, op.space, "operator acts on a different space");
        linalg::trace(&op.matrix.dot(&self.matrix))
    }

    pub fn herm_residual(&self) -> f64 {
        linalg::max_abs(&(&self.matrix - &linalg::dagger(&self.matrix)))
    }

    pub fn min_eigenvalue(&self) -> Result<f64> {
        let sym = (&self.matrix + &linalg::dagger(&self.matrix)).mapv(|z| z * 0.5);
        let (w, _) = linalg::hermitian_eig(&sym)?;
        Ok(w[0])
    }

    /// Trace distance (1/2) sum |eigenvalues of rho - sigma|.
    pub fn trace_distance(&self, other: &DensityMatrix) -> Result<f64> {
        let diff = &self.matrix - &other.matrix;
        let sym = (&diff + &linalg::dagger(&diff)).mapv(|z| z * 0.5);
        let (w, _) = linalg::hermitian_eig(&sym)?;
        Ok(0.5 * w.iter().map(|x| x.abs()).sum::<f64>())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum IntegrationMethod {
    FixedRk4,
    AdaptiveRk45,
}

#[derive(Debug, Clone)]
pub struct EvolutionConfig {
    pub t_final: f64,
    pub dt_max: f64,
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub method: IntegrationMethod,
}

impl EvolutionConfig {
    pub fn new(t_final: f64) -> Result<Self> {
        if !(t_final > 0.0) {
            return Err(Error::InvalidParams(format!(
                "t_final must be positive, got {t_final}"
            )));
        }
        Ok(Self {
            t_final,
            dt_max: t_final / 50.0,
            rel_tol: 1e-8,
            abs_tol: 1e-12,
            method: IntegrationMethod::AdaptiveRk45,
        })
    }

    fn validate(&self) -> Result<()> {
        if !(self.t_final > 0.0 && self.dt_max > 0.0 && self.rel_tol > 0.0 && self.abs_tol > 0.0)
        {
            return Err(Error::InvalidParams(
                "evolution config requires positive t_final, dt_max and tolerances".into(),
            ));
        }
        Ok(())
    }
}

/// Standard dissipator set for the device: cavity decay, qubit relaxation
/// split against thermal excitation so the undriven steady state carries
/// the equilibrium excited population, pure dephasing, and (with a third
/// qubit level present) f -> e relaxation.
///
/// The cavity jump operator has the same matrix in every frame; in the
/// displaced frame it reads d and the commutator term the displacement
/// generates is carried by the Hamiltonian builder.
pub fn dissipator_set(
    p: &SystemParams,
    frame: Frame,
    space: HilbertSpace,
) -> Result<Vec<CollapseOperator>> {
    let _ = frame;
    let t_phi = p.t_phi()?;
    let mut set = vec![
        CollapseOperator::new(Operator::annihilation(space), p.kappa)?,
        CollapseOperator::new(
            Operator::qubit_transition(space, 0, 1)?,
            (1.0 - p.p_e_thermal) / p.t1,
        )?,
        CollapseOperator::new(
            Operator::qubit_transition(space, 1, 0)?,
            p.p_e_thermal / p.t1,
        )?,
        CollapseOperator::new(Operator::sigma_z(space), 1.0 / (2.0 * t_phi))?,
    ];
    if space.n_qubit >= 3 {
        set.push(CollapseOperator::new(
            Operator::qubit_transition(space, 1, 2)?,
            p.gamma_f_relax,
        )?);
    }
    Ok(set)
}

/// Precomputed generator pieces for the master-equation right-hand side.
pub struct LindbladGenerator<'a> {
    model: &'a HamiltonianModel,
    h_static: Array2<C64>,
    /// (sqrt(rate) L, L^dag L scaled by rate) pairs
    jumps: Vec<(Array2<C64>, Array2<C64>)>,
}

impl<'a> LindbladGenerator<'a> {
    pub fn new(model: &'a HamiltonianModel, collapse: &[CollapseOperator]) -> Result<Self> {
        let space = model.space();
        let mut jumps = Vec::with_capacity(collapse.len());
        for c in collapse {
            if c.op.space != space {
                return Err(Error::DimensionMismatch {
                    context: "collapse operator space differs from Hamiltonian space".into(),
                });
            }
            let l = c.scaled();
            let ldl = linalg::dagger(&l).dot(&l);
            jumps.push((l, ldl));
        }
        Ok(Self { model, h_static: model.at(0.0), jumps })
    }

    pub fn space(&self) -> HilbertSpace {
        self.model.space()
    }

    /// -i[H(t), rho] + sum_k D[L_k] rho
    pub fn rhs(&self, t: f64, rho: &Array2<C64>) -> Array2<C64> {
        let h;
        let h_ref = if self.model.is_static() {
            &self.h_static
        } else {
            h = self.model.at(t);
            &h
        };
        let mut out = linalg::commutator(h_ref, rho).mapv(|z| z * C64::new(0.0, -1.0));
        for (l, ldl) in &self.jumps {
            let l_rho = l.dot(rho);
            out = out + l_rho.dot(&linalg::dagger(l));
            let anti = ldl.dot(rho) + rho.dot(ldl);
            out = out - anti.mapv(|z| z * 0.5);
        }
        out
    }
}

/// One evaluation of the Lindblad generator. Checked entry point; the
/// integrators use the precomputed [`LindbladGenerator`] internally.
pub fn lindblad_rhs(
    h: &Operator,
    collapse: &[CollapseOperator],
    rho: &DensityMatrix,
) -> Result<Array2<C64>> {
    if h.space != rho.space {
        return Err(Error::DimensionMismatch {
            context: "Hamiltonian space differs from density-matrix space".into(),
        });
    }
    let model = HamiltonianModel::from_static(Frame::Rotating, h.clone());
    let gen = LindbladGenerator::new(&model, collapse)?;
    Ok(gen.rhs(0.0, &rho.matrix))
}

const SAFETY: f64 = 0.9;
const MIN_SCALE: f64 = 0.2;
const MAX_SCALE: f64 = 5.0;
const MAX_STEPS: usize = 50_000_000;

// Dormand-Prince 5(4) tableau
const DP_C: [f64; 7] = [0.0, 1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0, 8.0 / 9.0, 1.0, 1.0];
const DP_A: [[f64; 6]; 7] = [
    [0.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [
        19372.0 / 6561.0,
        -25360.0 / 2187.0,
        64448.0 / 6561.0,
        -212.0 / 729.0,
        0.0,
        0.0,
    ],
    [
        9017.0 / 3168.0,
        -355.0 / 33.0,
        46732.0 / 5247.0,
        49.0 / 176.0,
        -5103.0 / 18656.0,
        0.0,
    ],
    [
        35.0 / 384.0,
        0.0,
        500.0 / 1113.0,
        125.0 / 192.0,
        -2187.0 / 6784.0,
        11.0 / 84.0,
    ],
];
const DP_B5: [f64; 7] = [
    35.0 / 384.0,
    0.0,
    500.0 / 1113.0,
    125.0 / 192.0,
    -2187.0 / 6784.0,
    11.0 / 84.0,
    0.0,
];
const DP_B4: [f64; 7] = [
    5179.0 / 57600.0,
    0.0,
    7571.0 / 16695.0,
    393.0 / 640.0,
    -92097.0 / 339200.0,
    187.0 / 2100.0,
    1.0 / 40.0,
];

fn axpy(y: &mut Array2<C64>, a: f64, x: &Array2<C64>) {
    if a != 0.0 {
        y.zip_mut_with(x, |yi, xi| *yi += xi * a);
    }
}

struct Stepper<'a, 'b> {
    gen: &'a LindbladGenerator<'b>,
    dt: f64,
    rel_tol: f64,
    abs_tol: f64,
    steps: usize,
}

impl Stepper<'_, '_> {
    /// Single RK4 step of size dt (no error control).
    fn rk4(&mut self, t: f64, rho: &Array2<C64>, dt: f64) -> Array2<C64> {
        let k1 = self.gen.rhs(t, rho);
        let mut y = rho.clone();
        axpy(&mut y, dt / 2.0, &k1);
        let k2 = self.gen.rhs(t + dt / 2.0, &y);
        y = rho.clone();
        axpy(&mut y, dt / 2.0, &k2);
        let k3 = self.gen.rhs(t + dt / 2.0, &y);
        y = rho.clone();
        axpy(&mut y, dt, &k3);
        let k4 = self.gen.rhs(t + dt, &y);
        self.steps += 1;
        let mut out = rho.clone();
        axpy(&mut out, dt / 6.0, &k1);
        axpy(&mut out, dt / 3.0, &k2);
        axpy(&mut out, dt / 3.0, &k3);
        axpy(&mut out, dt / 6.0, &k4);
        out
    }

    /// Adaptive Dormand-Prince 5(4) step; advances t/rho in place to
    /// exactly t_stop at the end of a span.
    fn rk45_span(
        &mut self,
        t: &mut f64,
        rho: &mut Array2<C64>,
        t_stop: f64,
        dt_max: f64,
    ) -> Result<()> {
        while *t < t_stop - 1e-16 * t_stop.abs().max(1.0) {
            let dt = self.dt.min(dt_max).min(t_stop - *t);
            let mut k: Vec<Array2<C64>> = Vec::with_capacity(7);
            for s in 0..7 {
                let mut y = rho.clone();
                for (j, kj) in k.iter().enumerate() {
                    axpy(&mut y, dt * DP_A[s][j], kj);
                }
                k.push(self.gen.rhs(*t + DP_C[s] * dt, &y));
            }
            let mut y5 = rho.clone();
            let mut y4 = rho.clone();
            for s in 0..7 {
                axpy(&mut y5, dt * DP_B5[s], &k[s]);
                axpy(&mut y4, dt * DP_B4[s], &k[s]);
            }
            let err = linalg::max_abs(&(&y5 - &y4));
            let scale = self.abs_tol + self.rel_tol * linalg::max_abs(&y5).max(linalg::max_abs(rho));
            let ratio = err / scale;
            self.steps += 1;
            if self.steps > MAX_STEPS {
                return Err(Error::StepFailure(format!(
                    "step budget exhausted after {} steps",
                    self.steps
                )));
            }
            if ratio <= 1.0 {
                *t += dt;
                *rho = y5;
                let grow = if ratio > 0.0 {
                    (SAFETY * ratio.powf(-0.2)).min(MAX_SCALE)
                } else {
                    MAX_SCALE
                };
                self.dt = (dt * grow).min(dt_max);
            } else {
                let shrink = (SAFETY * ratio.powf(-0.2)).max(MIN_SCALE);
                self.dt = dt * shrink;
                if self.dt < 1e-18 {
                    return Err(Error::StepFailure(format!(
                        "step size underflow at t = {t} (dt = {})",
                        self.dt
                    )));
                }
            }
        }
        Ok(())
    }
}

/// Evolve rho0 under the master equation, returning the state at each of
/// the requested times (ascending, within [0, t_final]).
pub fn evolve(
    model: &HamiltonianModel,
    collapse: &[CollapseOperator],
    rho0: &DensityMatrix,
    config: &EvolutionConfig,
    times: &[f64],
) -> Result<Vec<DensityMatrix>> {
    config.validate()?;
    if rho0.space != model.space() {
        return Err(Error::DimensionMismatch {
            context: "initial state space differs from Hamiltonian space".into(),
        });
    }
    for w in times.windows(2) {
        if w[1] < w[0] {
            return Err(Error::InvalidParams("sample times must be ascending".into()));
        }
    }
    if let Some(&last) = times.last() {
        if last > config.t_final * (1.0 + 1e-12) {
            return Err(Error::InvalidParams(
                "sample time beyond t_final".into(),
            ));
        }
    }
    let gen = LindbladGenerator::new(model, collapse)?;
    let mut stepper = Stepper {
        gen: &gen,
        dt: config.dt_max,
        rel_tol: config.rel_tol,
        abs_tol: config.abs_tol,
        steps: 0,
    };
    let mut t = 0.0;
    let mut rho = rho0.matrix.clone();
    let mut out = Vec::with_capacity(times.len());
    for &ts in times {
        match config.method {
            IntegrationMethod::AdaptiveRk45 => {
                stepper.rk45_span(&mut t, &mut rho, ts, config.dt_max)?;
            }
            IntegrationMethod::FixedRk4 => {
                while ts - t > 1e-16 * ts.abs().max(1.0) {
                    let dt = config.dt_max.min(ts - t);
                    rho = stepper.rk4(t, &rho, dt);
                    t += dt;
                }
            }
        }
        out.push(DensityMatrix { space: rho0.space, matrix: rho.clone() });
    }
    Ok(out)
}

/// The vectorized Liouvillian acting on column-stacked rho
/// (vec index j*dim + i for element rho[i, j]).
pub fn liouvillian_matrix(h: &Operator, collapse: &[CollapseOperator]) -> Result<Array2<C64>> {
    let d = h.space.dim();
    let id = linalg::identity(d);
    let ht = h.matrix.t().to_owned();
    // -i (I (x) H - H^T (x) I)
    let mut l = (linalg::kron(&id, &h.matrix) - linalg::kron(&ht, &id))
        .mapv(|z| z * C64::new(0.0, -1.0));
    for c in collapse {
        if c.op.space != h.space {
            return Err(Error::DimensionMismatch {
                context: "collapse operator space differs from Hamiltonian space".into(),
            });
        }
        let lm = c.scaled();
        let ldl = linalg::dagger(&lm).dot(&lm);
        let lconj = lm.mapv(|z| z.conj());
        l = l + linalg::kron(&lconj, &lm);
        let half = linalg::kron(&id, &ldl) + linalg::kron(&ldl.t().to_owned(), &id);
        l = l - half.mapv(|z| z * 0.5);
    }
    Ok(l)
}

/// Propagate a *static* master equation by exponentiating the vectorized
/// Liouvillian. Suited to long horizons on small spaces where stepwise
/// integration would need millions of steps.
pub fn evolve_expm(
    h: &Operator,
    collapse: &[CollapseOperator],
    rho0: &DensityMatrix,
    times: &[f64],
) -> Result<Vec<DensityMatrix>> {
    if h.space != rho0.space {
        return Err(Error::DimensionMismatch {
            context: "initial state space differs from Hamiltonian space".into(),
        });
    }
    let d = h.space.dim();
    let n = d * d;
    let l = liouvillian_matrix(h, collapse)?;
    let mut v = Array2::zeros((n, 1));
    for j in 0..d {
        for i in 0..d {
            v[[j * d + i, 0]] = rho0.matrix[[i, j]];
        }
    }
    let mut out = Vec::with_capacity(times.len());
    for &t in times {
        if t < 0.0 {
            return Err(Error::InvalidParams("negative sample time".into()));
        }
        let p = linalg::expm(&l.mapv(|z| z * t))?;
        let w = p.dot(&v);
        let mut rho = Array2::zeros((d, d));
        for j in 0..d {
            for i in 0..d {
                rho[[i, j]] = w[[j * d + i, 0]];
            }
        }
        out.push(DensityMatrix { space: h.space, matrix: rho });
    }
    Ok(out)
}

/// Steady state by null-space solve of the vectorized Liouvillian with a
/// trace-normalization row. Verifies the residual and checks uniqueness by
/// solving with two different replaced rows.
pub fn steady_state(h: &Operator, collapse: &[CollapseOperator]) -> Result<DensityMatrix> {
    let d = h.space.dim();
    let n = d * d;
    let l_raw = liouvillian_matrix(h, collapse)?;
    let scale = linalg::max_abs(&l_raw).max(f64::MIN_POSITIVE);
    let l = l_raw.mapv(|z| z / scale);

    let solve_with_row = |row: usize| -> Result<Array2<C64>> {
        let mut a = l.clone();
        for j in 0..n {
            a[[row, j]] = C64::new(0.0, 0.0);
        }
        for i in 0..d {
            a[[row, i * d + i]] = C64::new(1.0, 0.0);
        }
        let mut b = Array2::zeros((n, 1));
        b[[row, 0]] = C64::new(1.0, 0.0);
        // a singular constrained system means the null space is not
        // one-dimensional
        let v = linalg::lu_solve(&a, &b).map_err(|e| match e {
            Error::SingularMatrix => Error::DegenerateSteadyState(2),
            other => other,
        })?;
        let mut rho = Array2::zeros((d, d));
        for j in 0..d {
            for i in 0..d {
                rho[[i, j]] = v[[j * d + i, 0]];
            }
        }
        // hermitize and renormalize
        let rho = (&rho + &linalg::dagger(&rho)).mapv(|z| z * 0.5);
        let tr = linalg::trace(&rho);
        Ok(rho.mapv(|z| z / tr))
    };

    let rho = solve_with_row(n - 1)?;
    // residual of the unmodified (normalized) Liouvillian
    let mut v = Array2::zeros((n, 1));
    for j in 0..d {
        for i in 0..d {
            v[[j * d + i, 0]] = rho[[i, j]];
        }
    }
    let res = linalg::max_abs(&l.dot(&v));
    if res > 1e-10 {
        return Err(Error::DegenerateSteadyState(0));
    }
    // uniqueness heuristic: a different constraint row must pick the same state
    let rho_alt = solve_with_row(0)?;
    if linalg::max_abs(&(&rho - &rho_alt)) > 1e-8 {
        return Err(Error::DegenerateSteadyState(2));
    }
    Ok(DensityMatrix { space: h.space, matrix: rho })
}
