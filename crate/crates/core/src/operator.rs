//! Operators and states on a truncated qubit (x) cavity Hilbert space.
//!
//! Basis ordering: qubit levels g, e, f, ... (slow index) tensor Fock
//! levels 0..n_cavity (fast index), so `index = q * n_cavity + n`.
//! Sign convention: `sigma_z = |e><e| - |g><g|`.

use ndarray::{Array1, Array2};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{self, C64};

#[derive(Clone, Copy, PartialEq, Eq, Debug, Serialize, Deserialize)]
pub struct HilbertSpace {
    pub n_qubit: usize,
    pub n_cavity: usize,
}

impl HilbertSpace {
    pub fn new(n_qubit: usize, n_cavity: usize) -> Result<Self> {
        if n_qubit < 2 {
            return Err(Error::InvalidParams(format!("n_qubit = {n_qubit} < 2")));
        }
        if n_cavity < 1 {
            return Err(Error::InvalidParams(format!("n_cavity = {n_cavity} < 1")));
        }
        Ok(Self { n_qubit, n_cavity })
    }

    pub fn dim(&self) -> usize {
        self.n_qubit * self.n_cavity
    }

    pub fn index(&self, q: usize, n: usize) -> usize {
        debug_assert!(q < self.n_qubit && n < self.n_cavity);
        q * self.n_cavity + n
    }
}

#[derive(Clone, Debug)]
pub struct Operator {
    pub space: HilbertSpace,
    pub matrix: Array2<C64>,
}

impl Operator {
    pub fn from_matrix(space: HilbertSpace, matrix: Array2<C64>) -> Result<Self> {
        if matrix.nrows() != space.dim() || matrix.ncols() != space.dim() {
            return Err(Error::DimensionMismatch {
                context: format!(
                    "operator {}x{} on space of dimension {}",
                    matrix.nrows(),
                    matrix.ncols(),
                    space.dim()
                ),
            });
        }
        Ok(Self { space, matrix })
    }

    /// Build `Q (x) C` from factor-local matrices.
    pub fn from_factors(
        space: HilbertSpace,
        qubit: &Array2<C64>,
        cavity: &Array2<C64>,
    ) -> Result<Self> {
        if qubit.nrows() != space.n_qubit || cavity.nrows() != space.n_cavity {
            return Err(Error::DimensionMismatch {
                context: format!(
                    "factors {}x{} on ({}, {})",
                    qubit.nrows(),
                    cavity.nrows(),
                    space.n_qubit,
                    space.n_cavity
                ),
            });
        }
        Ok(Self {
            space,
            matrix: linalg::kron(qubit, cavity),
        })
    }

    pub fn identity(space: HilbertSpace) -> Self {
        Self {
            space,
            matrix: linalg::identity(space.dim()),
        }
    }

    pub fn zeros(space: HilbertSpace) -> Self {
        Self {
            space,
            matrix: Array2::zeros((space.dim(), space.dim())),
        }
    }

    /// Cavity annihilation operator on the composite space,
    /// `<n-1| a |n> = sqrt(n)`.
    pub fn annihilation(space: HilbertSpace) -> Self {
        let nc = space.n_cavity;
        let mut a = Array2::zeros((nc, nc));
        for n in 1..nc {
            a[[n - 1, n]] = C64::new((n as f64).sqrt(), 0.0);
        }
        Self::from_factors(space, &linalg::identity(space.n_qubit), &a).unwrap()
    }

    pub fn number(space: HilbertSpace) -> Self {
        let a = Self::annihilation(space);
        &a.dagger() * &a
    }

    /// `|j><k|` on the qubit factor, identity on the cavity.
    pub fn qubit_transition(space: HilbertSpace, j: usize, k: usize) -> Result<Self> {
        if j >= space.n_qubit || k >= space.n_qubit {
            return Err(Error::DimensionMismatch {
                context: format!("qubit levels ({j}, {k}) on n_qubit = {}", space.n_qubit),
            });
        }
        let mut q = Array2::zeros((space.n_qubit, space.n_qubit));
        q[[j, k]] = C64::new(1.0, 0.0);
        Self::from_factors(space, &q, &linalg::identity(space.n_cavity))
    }

    pub fn qubit_projector(space: HilbertSpace, level: usize) -> Result<Self> {
        Self::qubit_transition(space, level, level)
    }

    /// Multi-level qubit lowering operator with sqrt(k) matrix elements.
    pub fn qubit_lowering(space: HilbertSpace) -> Self {
        let nq = space.n_qubit;
        let mut b = Array2::zeros((nq, nq));
        for k in 1..nq {
            b[[k - 1, k]] = C64::new((k as f64).sqrt(), 0.0);
        }
        Self::from_factors(space, &b, &linalg::identity(space.n_cavity)).unwrap()
    }

    /// `sigma_z = |e><e| - |g><g|` on the g,e subspace, zero on higher levels.
    pub fn sigma_z(space: HilbertSpace) -> Self {
        let mut q = Array2::zeros((space.n_qubit, space.n_qubit));
        q[[0, 0]] = C64::new(-1.0, 0.0);
        q[[1, 1]] = C64::new(1.0, 0.0);
        Self::from_factors(space, &q, &linalg::identity(space.n_cavity)).unwrap()
    }

    /// `sigma_x = |g><e| + |e><g|`.
    pub fn sigma_x(space: HilbertSpace) -> Self {
        let mut q = Array2::zeros((space.n_qubit, space.n_qubit));
        q[[0, 1]] = C64::new(1.0, 0.0);
        q[[1, 0]] = C64::new(1.0, 0.0);
        Self::from_factors(space, &q, &linalg::identity(space.n_cavity)).unwrap()
    }

    /// `sigma_y = -i|e><g| + i|g><e|`.
    pub fn sigma_y(space: HilbertSpace) -> Self {
        let mut q = Array2::zeros((space.n_qubit, space.n_qubit));
        q[[0, 1]] = C64::new(0.0, 1.0);
        q[[1, 0]] = C64::new(0.0, -1.0);
        Self::from_factors(space, &q, &linalg::identity(space.n_cavity)).unwrap()
    }

    /// Raising operator between sigma_x eigenstates:
    /// `sigma_x^+ = (sigma_z - i sigma_y)/2`, so `sigma_x^+ |-> = |+>`.
    pub fn sigma_x_plus(space: HilbertSpace) -> Self {
        let sz = Self::sigma_z(space);
        let sy = Self::sigma_y(space);
        (&sz - &sy.scale(C64::new(0.0, 1.0))).scale(C64::new(0.5, 0.0))
    }

    /// `sigma_x^- = (sigma_z + i sigma_y)/2`.
    pub fn sigma_x_minus(space: HilbertSpace) -> Self {
        let sz = Self::sigma_z(space);
        let sy = Self::sigma_y(space);
        (&sz + &sy.scale(C64::new(0.0, 1.0))).scale(C64::new(0.5, 0.0))
    }

    /// Displacement unitary `D(alpha) = exp(alpha a^dag - alpha^* a)`,
    /// with `D(alpha)|0> = |alpha>` and the frame map
    /// `D(alpha)^dag a D(alpha) = a + alpha`. Guarded by the truncation
    /// safety bound `|alpha|^2 <= n_cavity/4`.
    pub fn displacement(space: HilbertSpace, alpha: C64) -> Result<Self> {
        let n_alpha = alpha.norm_sqr();
        let bound = space.n_cavity as f64 / 4.0;
        if n_alpha > bound {
            return Err(Error::TruncationError { n_alpha, bound });
        }
        let a = Self::annihilation(space);
        let gen = &a.dagger().scale(alpha) - &a.scale(alpha.conj());
        gen.expm()
    }

    pub fn dagger(&self) -> Self {
        Self {
            space: self.space,
            matrix: linalg::dagger(&self.matrix),
        }
    }

    pub fn scale(&self, z: C64) -> Self {
        Self {
            space: self.space,
            matrix: self.matrix.mapv(|m| m * z),
        }
    }

    pub fn expm(&self) -> Result<Self> {
        Ok(Self {
            space: self.space,
            matrix: linalg::expm(&self.matrix)?,
        })
    }

    /// `exp(scale * self)`.
    pub fn expm_scaled(&self, scale: C64) -> Result<Self> {
        self.scale(scale).expm()
    }

    pub fn commutator(&self, other: &Self) -> Self {
        assert_eq!(self.space, other.space);
        Self {
            space: self.space,
            matrix: linalg::commutator(&self.matrix, &other.matrix),
        }
    }

    pub fn herm_residual(&self) -> f64 {
        linalg::max_abs(&(&self.matrix - &linalg::dagger(&self.matrix)))
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        self.herm_residual() < tol
    }

    pub fn unitarity_residual(&self) -> f64 {
        let d = linalg::dagger(&self.matrix).dot(&self.matrix) - linalg::identity(self.space.dim());
        linalg::max_abs(&d)
    }

    pub fn apply(&self, state: &StateVector) -> StateVector {
        assert_eq!(self.space, state.space);
        StateVector {
            space: self.space,
            amplitudes: self.matrix.dot(&state.amplitudes),
        }
    }

    pub fn expectation(&self, state: &StateVector) -> C64 {
        assert_eq!(self.space, state.space);
        let applied = self.matrix.dot(&state.amplitudes);
        state
            .amplitudes
            .iter()
            .zip(applied.iter())
            .map(|(c, v)| c.conj() * v)
            .sum()
    }

    /// Eigenvalues of a Hermitian operator, ascending.
    pub fn eigenvalues(&self) -> Result<Array1<f64>> {
        let (w, _) = linalg::hermitian_eig(&self.matrix)?;
        Ok(w)
    }
}

macro_rules! op_binop {
    ($trait:ident, $method:ident, $op:tt) => {
        impl std::ops::$trait for &Operator {
            type Output = Operator;
            fn $method(self, rhs: &Operator) -> Operator {
                assert_eq!(self.space, rhs.space, "operator space mismatch");
                Operator {
                    space: self.space,
                    matrix: &self.matrix $op &rhs.matrix,
                }
            }
        }
    };
}
op_binop!(Add, add, +);
op_binop!(Sub, sub, -);

impl std::ops::Mul for &Operator {
    type Output = Operator;
    fn mul(self, rhs: &Operator) -> Operator {
        assert_eq!(self.space, rhs.space, "operator space mismatch");
        Operator {
            space: self.space,
            matrix: self.matrix.dot(&rhs.matrix),
        }
    }
}

#[derive(Clone, Debug)]
pub struct StateVector {
    pub space: HilbertSpace,
    pub amplitudes: Array1<C64>,
}

impl StateVector {
    pub fn basis(space: HilbertSpace, qubit_level: usize, fock: usize) -> Self {
        let mut amps = Array1::zeros(space.dim());
        amps[space.index(qubit_level, fock)] = C64::new(1.0, 0.0);
        Self {
            space,
            amplitudes: amps,
        }
    }

    pub fn ground(space: HilbertSpace) -> Self {
        Self::basis(space, 0, 0)
    }

    pub fn excited(space: HilbertSpace) -> Self {
        Self::basis(space, 1, 0)
    }

    /// `|+> = (|g> + |e>)/sqrt(2)` with the cavity in vacuum.
    pub fn plus(space: HilbertSpace) -> Self {
        Self::superposition(space, C64::new(1.0, 0.0), C64::new(1.0, 0.0))
    }

    /// `|-> = (|e> - |g>)/sqrt(2)` with the cavity in vacuum. The global
    /// phase is chosen so that `sigma_x^+ |-> = |+>` holds exactly.
    pub fn minus(space: HilbertSpace) -> Self {
        Self::superposition(space, C64::new(-1.0, 0.0), C64::new(1.0, 0.0))
    }

    /// `|i> = (|g> + i|e>)/sqrt(2)` with the cavity in vacuum.
    pub fn i_state(space: HilbertSpace) -> Self {
        Self::superposition(space, C64::new(1.0, 0.0), C64::new(0.0, 1.0))
    }

    fn superposition(space: HilbertSpace, g_amp: C64, e_amp: C64) -> Self {
        let mut amps = Array1::zeros(space.dim());
        let inv_sqrt2 = std::f64::consts::FRAC_1_SQRT_2;
        amps[space.index(0, 0)] = g_amp * inv_sqrt2;
        amps[space.index(1, 0)] = e_amp * inv_sqrt2;
        Self {
            space,
            amplitudes: amps,
        }
    }

    /// Coherent state `|alpha>` on the cavity factor, qubit in `|g>`.
    pub fn coherent(space: HilbertSpace, alpha: C64) -> Self {
        let mut amps = Array1::zeros(space.dim());
        let mut term = C64::new((-alpha.norm_sqr() / 2.0).exp(), 0.0);
        for n in 0..space.n_cavity {
            amps[space.index(0, n)] = term;
            term = term * alpha / C64::new(((n + 1) as f64).sqrt(), 0.0);
        }
        let nrm = amps.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        Self {
            space,
            amplitudes: amps.mapv(|z| z / nrm),
        }
    }

    pub fn norm(&self) -> f64 {
        self.amplitudes.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn inner(&self, other: &Self) -> C64 {
        assert_eq!(self.space, other.space);
        self.amplitudes
            .iter()
            .zip(other.amplitudes.iter())
            .map(|(a, b)| a.conj() * b)
            .sum()
    }
}
