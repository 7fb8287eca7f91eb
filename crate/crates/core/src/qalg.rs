//! Dense operator and state algebra on small multi-qubit registers.
//!
//! Basis convention: the computational basis index of a product state
//! `|b_0 b_1 ... b_{n-1}>` is `sum_k b_k * 2^(n-1-k)`, i.e. qubit 0 is the
//! most significant bit. Single-qubit `|0>` is index 0 and `|1>` is index 1.

use std::fmt;
use std::ops::{Add, Mul, Sub};

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;

use crate::error::{QbatError, Result};

pub type C64 = Complex64;

/// Largest register the dense representation accepts.
pub const MAX_QUBITS: usize = 12;
/// Tolerance for the hermiticity flag on constructed operators.
pub const HERMITIAN_TOL: f64 = 1e-12;
/// Tolerance for unitarity checks.
pub const UNITARY_TOL: f64 = 1e-10;
/// Tolerance on the norm of a pure state.
pub const NORM_TOL: f64 = 1e-12;
/// Largest imaginary part tolerated in the expectation of a hermitian operator.
pub const EXPECTATION_IMAG_TOL: f64 = 1e-10;

pub(crate) const ZERO: C64 = C64::new(0.0, 0.0);
pub(crate) const ONE: C64 = C64::new(1.0, 0.0);
pub(crate) const I: C64 = C64::new(0.0, 1.0);

pub(crate) fn check_qubits(n: usize) -> Result<()> {
    if n == 0 || n > MAX_QUBITS {
        return Err(QbatError::TooManyQubits { n, max: MAX_QUBITS });
    }
    Ok(())
}

/// Largest entrywise modulus.
pub fn max_abs(m: &DMatrix<C64>) -> f64 {
    m.iter().fold(0.0_f64, |acc, z| acc.max(z.norm()))
}

fn hermiticity_defect(m: &DMatrix<C64>) -> f64 {
    let n = m.nrows();
    let mut worst = 0.0_f64;
    for i in 0..n {
        for j in i..n {
            worst = worst.max((m[(i, j)] - m[(j, i)].conj()).norm());
        }
    }
    worst
}

fn unitarity_defect(m: &DMatrix<C64>) -> f64 {
    let prod = m.adjoint() * m;
    let id = DMatrix::<C64>::identity(m.nrows(), m.ncols());
    max_abs(&(prod - id))
}

/// Intent flag carried by an [`Operator`].
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum OperatorKind {
    General,
    Hermitian,
    Unitary,
}

/// Dense square operator on an `n`-qubit register.
#[derive(Clone, PartialEq)]
pub struct Operator {
    n_qubits: usize,
    matrix: DMatrix<C64>,
    kind: OperatorKind,
}

impl fmt::Debug for Operator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Operator")
            .field("n_qubits", &self.n_qubits)
            .field("kind", &self.kind)
            .field("matrix", &self.matrix)
            .finish()
    }
}

impl Operator {
    fn checked_dim(n_qubits: usize, matrix: &DMatrix<C64>) -> Result<()> {
        check_qubits(n_qubits)?;
        let dim = 1usize << n_qubits;
        if matrix.nrows() != dim {
            return Err(QbatError::DimensionMismatch {
                expected: dim,
                found: matrix.nrows(),
            });
        }
        if matrix.ncols() != dim {
            return Err(QbatError::DimensionMismatch {
                expected: dim,
                found: matrix.ncols(),
            });
        }
        Ok(())
    }

    pub fn general(n_qubits: usize, matrix: DMatrix<C64>) -> Result<Self> {
        Self::checked_dim(n_qubits, &matrix)?;
        Ok(Operator {
            n_qubits,
            matrix,
            kind: OperatorKind::General,
        })
    }

    /// Builds a hermitian-flagged operator, rejecting inputs whose
    /// hermiticity defect exceeds [`HERMITIAN_TOL`].
    pub fn hermitian(n_qubits: usize, matrix: DMatrix<C64>) -> Result<Self> {
        Self::checked_dim(n_qubits, &matrix)?;
        let defect = hermiticity_defect(&matrix);
        if defect > HERMITIAN_TOL {
            return Err(QbatError::NotHermitian { defect });
        }
        Ok(Operator {
            n_qubits,
            matrix,
            kind: OperatorKind::Hermitian,
        })
    }

    /// Real combinations of hermitian operators, already known to be hermitian.
    pub(crate) fn hermitian_unchecked(n_qubits: usize, matrix: DMatrix<C64>) -> Self {
        debug_assert!(hermiticity_defect(&matrix) <= HERMITIAN_TOL);
        Operator {
            n_qubits,
            matrix,
            kind: OperatorKind::Hermitian,
        }
    }

    pub fn unitary(n_qubits: usize, matrix: DMatrix<C64>) -> Result<Self> {
        Self::checked_dim(n_qubits, &matrix)?;
        let defect = unitarity_defect(&matrix);
        if defect > UNITARY_TOL {
            return Err(QbatError::NotUnitary { defect });
        }
        Ok(Operator {
            n_qubits,
            matrix,
            kind: OperatorKind::Unitary,
        })
    }

    pub fn identity(n_qubits: usize) -> Self {
        let dim = 1usize << n_qubits;
        Operator {
            n_qubits,
            matrix: DMatrix::identity(dim, dim),
            kind: OperatorKind::Hermitian,
        }
    }

    pub fn zeros(n_qubits: usize) -> Self {
        let dim = 1usize << n_qubits;
        Operator {
            n_qubits,
            matrix: DMatrix::zeros(dim, dim),
            kind: OperatorKind::Hermitian,
        }
    }

    /// Real diagonal operator; hermitian by construction.
    pub fn diagonal(n_qubits: usize, diag: &[f64]) -> Result<Self> {
        check_qubits(n_qubits)?;
        let dim = 1usize << n_qubits;
        if diag.len() != dim {
            return Err(QbatError::DimensionMismatch {
                expected: dim,
                found: diag.len(),
            });
        }
        let matrix = DMatrix::from_diagonal(&DVector::from_iterator(
            dim,
            diag.iter().map(|&d| C64::new(d, 0.0)),
        ));
        Ok(Operator {
            n_qubits,
            matrix,
            kind: OperatorKind::Hermitian,
        })
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn kind(&self) -> OperatorKind {
        self.kind
    }

    pub fn is_hermitian(&self) -> bool {
        self.kind == OperatorKind::Hermitian
    }

    pub fn matrix(&self) -> &DMatrix<C64> {
        &self.matrix
    }

    pub fn into_matrix(self) -> DMatrix<C64> {
        self.matrix
    }

    pub fn entry(&self, row: usize, col: usize) -> C64 {
        self.matrix[(row, col)]
    }

    pub fn hermiticity_defect(&self) -> f64 {
        hermiticity_defect(&self.matrix)
    }

    pub fn unitarity_defect(&self) -> f64 {
        unitarity_defect(&self.matrix)
    }

    /// Largest entrywise difference `max |A_ij - B_ij|`.
    pub fn max_abs_diff(&self, other: &Operator) -> f64 {
        assert_eq!(self.dim(), other.dim(), "max_abs_diff: dimension mismatch");
        max_abs(&(&self.matrix - &other.matrix))
    }

    pub fn max_abs(&self) -> f64 {
        max_abs(&self.matrix)
    }

    pub fn dagger(&self) -> Operator {
        Operator {
            n_qubits: self.n_qubits,
            matrix: self.matrix.adjoint(),
            kind: self.kind,
        }
    }

    /// Real rescaling; preserves the hermitian flag.
    pub fn scaled(&self, factor: f64) -> Operator {
        let kind = match self.kind {
            OperatorKind::Unitary if (factor.abs() - 1.0).abs() > 0.0 => OperatorKind::General,
            k => k,
        };
        Operator {
            n_qubits: self.n_qubits,
            matrix: &self.matrix * C64::new(factor, 0.0),
            kind,
        }
    }

    pub fn scaled_complex(&self, factor: C64) -> Operator {
        let kind = if factor.im == 0.0 && self.kind == OperatorKind::Hermitian {
            OperatorKind::Hermitian
        } else {
            OperatorKind::General
        };
        Operator {
            n_qubits: self.n_qubits,
            matrix: &self.matrix * factor,
            kind,
        }
    }

    pub fn trace(&self) -> C64 {
        self.matrix.trace()
    }

    /// Tensor product `self ⊗ other` (self on the more significant qubits).
    pub fn kron(&self, other: &Operator) -> Result<Operator> {
        check_qubits(self.n_qubits + other.n_qubits)?;
        let kind = match (self.kind, other.kind) {
            (OperatorKind::Hermitian, OperatorKind::Hermitian) => OperatorKind::Hermitian,
            (OperatorKind::Unitary, OperatorKind::Unitary) => OperatorKind::Unitary,
            _ => OperatorKind::General,
        };
        Ok(Operator {
            n_qubits: self.n_qubits + other.n_qubits,
            matrix: self.matrix.kronecker(&other.matrix),
            kind,
        })
    }

    /// Matrix-vector product on a state's amplitudes.
    pub fn act(&self, psi: &PureState) -> Result<DVector<C64>> {
        if psi.dim() != self.dim() {
            return Err(QbatError::DimensionMismatch {
                expected: self.dim(),
                found: psi.dim(),
            });
        }
        Ok(&self.matrix * psi.amplitudes())
    }

    /// Applies a unitary-flagged operator and returns the (normalized) image.
    pub fn apply_unitary(&self, psi: &PureState) -> Result<PureState> {
        if self.kind != OperatorKind::Unitary {
            return Err(QbatError::NotUnitary {
                defect: self.unitarity_defect(),
            });
        }
        let v = self.act(psi)?;
        PureState::new(self.n_qubits, v)
    }

    /// Re-flag the operator as hermitian after checking it.
    pub fn into_hermitian(self) -> Result<Operator> {
        Operator::hermitian(self.n_qubits, self.matrix)
    }

    pub fn into_unitary(self) -> Result<Operator> {
        Operator::unitary(self.n_qubits, self.matrix)
    }

    fn assert_same_dim(&self, other: &Operator, what: &str) {
        assert_eq!(
            self.dim(),
            other.dim(),
            "{what}: dimension mismatch ({} vs {})",
            self.dim(),
            other.dim()
        );
    }
}

impl Add for &Operator {
    type Output = Operator;

    /// # Panics
    /// On dimension mismatch.
    fn add(self, rhs: &Operator) -> Operator {
        self.assert_same_dim(rhs, "add");
        let kind = if self.is_hermitian() && rhs.is_hermitian() {
            OperatorKind::Hermitian
        } else {
            OperatorKind::General
        };
        Operator {
            n_qubits: self.n_qubits,
            matrix: &self.matrix + &rhs.matrix,
            kind,
        }
    }
}

impl Sub for &Operator {
    type Output = Operator;

    fn sub(self, rhs: &Operator) -> Operator {
        self.assert_same_dim(rhs, "sub");
        let kind = if self.is_hermitian() && rhs.is_hermitian() {
            OperatorKind::Hermitian
        } else {
            OperatorKind::General
        };
        Operator {
            n_qubits: self.n_qubits,
            matrix: &self.matrix - &rhs.matrix,
            kind,
        }
    }
}

impl Mul for &Operator {
    type Output = Operator;

    fn mul(self, rhs: &Operator) -> Operator {
        self.assert_same_dim(rhs, "mul");
        let kind = if self.kind == OperatorKind::Unitary && rhs.kind == OperatorKind::Unitary {
            OperatorKind::Unitary
        } else {
            OperatorKind::General
        };
        Operator {
            n_qubits: self.n_qubits,
            matrix: &self.matrix * &rhs.matrix,
            kind,
        }
    }
}

/// Single-qubit Pauli axis.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Pauli {
    I,
    X,
    Y,
    Z,
}

/// The 2x2 Pauli matrix. `Z = diag(+1, -1)` in the order `(|0>, |1>)`.
pub fn pauli(axis: Pauli) -> Operator {
    let m = match axis {
        Pauli::I => DMatrix::from_row_slice(2, 2, &[ONE, ZERO, ZERO, ONE]),
        Pauli::X => DMatrix::from_row_slice(2, 2, &[ZERO, ONE, ONE, ZERO]),
        Pauli::Y => DMatrix::from_row_slice(2, 2, &[ZERO, -I, I, ZERO]),
        Pauli::Z => DMatrix::from_row_slice(2, 2, &[ONE, ZERO, ZERO, -ONE]),
    };
    Operator {
        n_qubits: 1,
        matrix: m,
        kind: OperatorKind::Hermitian,
    }
}

/// Embeds a `k`-qubit operator on `target_sites` of an `n_total`-qubit
/// register. `target_sites[0]` carries the operator's most significant qubit.
pub fn embed(op: &Operator, target_sites: &[usize], n_total: usize) -> Result<Operator> {
    check_qubits(n_total)?;
    let k = op.n_qubits();
    if target_sites.len() != k {
        return Err(QbatError::DimensionMismatch {
            expected: k,
            found: target_sites.len(),
        });
    }
    for (i, &site) in target_sites.iter().enumerate() {
        if site >= n_total {
            return Err(QbatError::SiteOutOfRange {
                site,
                n_qubits: n_total,
            });
        }
        if target_sites[..i].contains(&site) {
            return Err(QbatError::DuplicateSite(site));
        }
    }

    let dim = 1usize << n_total;
    // bit position (from the least significant end) of each target site
    let shifts: Vec<usize> = target_sites.iter().map(|&s| n_total - 1 - s).collect();
    let target_mask: usize = shifts.iter().fold(0, |m, &sh| m | (1 << sh));
    let sub_index = |full: usize| -> usize {
        shifts
            .iter()
            .fold(0usize, |acc, &sh| (acc << 1) | ((full >> sh) & 1))
    };

    let mut out = DMatrix::<C64>::zeros(dim, dim);
    let src = op.matrix();
    for row in 0..dim {
        let rest = row & !target_mask;
        let r_sub = sub_index(row);
        for col in 0..dim {
            if col & !target_mask != rest {
                continue;
            }
            let v = src[(r_sub, sub_index(col))];
            if v != ZERO {
                out[(row, col)] = v;
            }
        }
    }
    Ok(Operator {
        n_qubits: n_total,
        matrix: out,
        kind: op.kind(),
    })
}

/// `a ⊗ b` placed on sites `(i, j)` of an `n`-qubit register.
pub fn two_site(a: Pauli, i: usize, b: Pauli, j: usize, n: usize) -> Result<Operator> {
    embed(&pauli(a).kron(&pauli(b))?, &[i, j], n)
}

/// `ab - ba`, unsymmetrized.
pub fn commutator(a: &Operator, b: &Operator) -> Result<Operator> {
    if a.dim() != b.dim() {
        return Err(QbatError::DimensionMismatch {
            expected: a.dim(),
            found: b.dim(),
        });
    }
    let m = a.matrix() * b.matrix() - b.matrix() * a.matrix();
    Operator::general(a.n_qubits(), m)
}

/// Normalized pure state.
#[derive(Clone, Debug, PartialEq)]
pub struct PureState {
    n_qubits: usize,
    amps: DVector<C64>,
}

impl PureState {
    /// Accepts amplitudes whose norm is within [`NORM_TOL`] of one.
    pub fn new(n_qubits: usize, amps: DVector<C64>) -> Result<Self> {
        check_qubits(n_qubits)?;
        let dim = 1usize << n_qubits;
        if amps.len() != dim {
            return Err(QbatError::DimensionMismatch {
                expected: dim,
                found: amps.len(),
            });
        }
        let norm = amps.norm();
        if (norm - 1.0).abs() > NORM_TOL {
            return Err(QbatError::NotNormalized { norm });
        }
        Ok(PureState { n_qubits, amps })
    }

    /// Normalizes arbitrary nonzero amplitudes.
    pub fn normalized(n_qubits: usize, amps: DVector<C64>) -> Result<Self> {
        let norm = amps.norm();
        if norm == 0.0 || !norm.is_finite() {
            return Err(QbatError::NotNormalized { norm });
        }
        PureState::new(n_qubits, amps.unscale(norm))
    }

    pub fn basis(n_qubits: usize, index: usize) -> Result<Self> {
        check_qubits(n_qubits)?;
        let dim = 1usize << n_qubits;
        if index >= dim {
            return Err(QbatError::SiteOutOfRange {
                site: index,
                n_qubits,
            });
        }
        let mut amps = DVector::zeros(dim);
        amps[index] = ONE;
        Ok(PureState { n_qubits, amps })
    }

    /// Product basis state from a bit string, qubit 0 first.
    pub fn from_bits(bits: &[u8]) -> Result<Self> {
        PureState::basis(bits.len(), basis_index(bits))
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn dim(&self) -> usize {
        self.amps.len()
    }

    pub fn amplitudes(&self) -> &DVector<C64> {
        &self.amps
    }

    pub fn into_amplitudes(self) -> DVector<C64> {
        self.amps
    }

    pub fn amplitude(&self, index: usize) -> C64 {
        self.amps[index]
    }

    /// `<self|other>`.
    pub fn inner(&self, other: &PureState) -> C64 {
        assert_eq!(self.dim(), other.dim(), "inner: dimension mismatch");
        self.amps.dotc(&other.amps)
    }

    /// `|<self|other>|^2`, blind to global phase.
    pub fn fidelity(&self, other: &PureState) -> f64 {
        self.inner(other).norm_sqr()
    }

    pub fn kron(&self, other: &PureState) -> Result<PureState> {
        check_qubits(self.n_qubits + other.n_qubits)?;
        Ok(PureState {
            n_qubits: self.n_qubits + other.n_qubits,
            amps: self.amps.kronecker(&other.amps),
        })
    }

    pub fn to_density(&self) -> DensityMatrix {
        DensityMatrix {
            n_qubits: self.n_qubits,
            matrix: &self.amps * self.amps.adjoint(),
        }
    }

    /// Global phase rotation `e^{i phi} |psi>`.
    pub fn with_phase(&self, phi: f64) -> PureState {
        PureState {
            n_qubits: self.n_qubits,
            amps: &self.amps * C64::from_polar(1.0, phi),
        }
    }

    /// Euclidean distance between amplitude vectors.
    pub fn distance(&self, other: &PureState) -> f64 {
        (&self.amps - &other.amps).norm()
    }

    pub(crate) fn from_parts_unchecked(n_qubits: usize, amps: DVector<C64>) -> PureState {
        PureState { n_qubits, amps }
    }
}

/// Unit-trace hermitian positive semidefinite matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct DensityMatrix {
    n_qubits: usize,
    matrix: DMatrix<C64>,
}

/// Hermiticity/trace tolerance for density matrices.
pub const DENSITY_TOL: f64 = 1e-12;
/// Most negative eigenvalue tolerated in a density matrix.
pub const DENSITY_NEG_TOL: f64 = 1e-10;

impl DensityMatrix {
    pub fn new(n_qubits: usize, matrix: DMatrix<C64>) -> Result<Self> {
        check_qubits(n_qubits)?;
        let dim = 1usize << n_qubits;
        if matrix.nrows() != dim || matrix.ncols() != dim {
            return Err(QbatError::DimensionMismatch {
                expected: dim,
                found: matrix.nrows().max(matrix.ncols()),
            });
        }
        let defect = hermiticity_defect(&matrix);
        if defect > DENSITY_TOL {
            return Err(QbatError::InvalidDensityMatrix(format!(
                "hermiticity defect {defect:.3e}"
            )));
        }
        let tr = matrix.trace();
        if (tr - ONE).norm() > DENSITY_TOL {
            return Err(QbatError::InvalidDensityMatrix(format!(
                "trace {tr} differs from 1"
            )));
        }
        let rho = DensityMatrix { n_qubits, matrix };
        let min = rho.spectrum().first().copied().unwrap_or(0.0);
        if min < -DENSITY_NEG_TOL {
            return Err(QbatError::InvalidDensityMatrix(format!(
                "negative eigenvalue {min:.3e}"
            )));
        }
        Ok(rho)
    }

    pub fn maximally_mixed(n_qubits: usize) -> Result<Self> {
        check_qubits(n_qubits)?;
        let dim = 1usize << n_qubits;
        Ok(DensityMatrix {
            n_qubits,
            matrix: DMatrix::identity(dim, dim) * C64::new(1.0 / dim as f64, 0.0),
        })
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<C64> {
        &self.matrix
    }

    pub fn entry(&self, row: usize, col: usize) -> C64 {
        self.matrix[(row, col)]
    }

    /// Eigenvalues, ascending.
    pub fn spectrum(&self) -> Vec<f64> {
        hermitian_spectrum(&self.matrix)
    }

    pub fn purity(&self) -> f64 {
        (&self.matrix * &self.matrix).trace().re
    }

    /// `1/2 || rho - sigma ||_1`.
    pub fn trace_distance(&self, other: &DensityMatrix) -> f64 {
        assert_eq!(self.dim(), other.dim(), "trace_distance: dimension mismatch");
        let diff = &self.matrix - &other.matrix;
        0.5 * hermitian_spectrum(&diff).iter().map(|e| e.abs()).sum::<f64>()
    }

    pub fn kron(&self, other: &DensityMatrix) -> Result<DensityMatrix> {
        check_qubits(self.n_qubits + other.n_qubits)?;
        Ok(DensityMatrix {
            n_qubits: self.n_qubits + other.n_qubits,
            matrix: self.matrix.kronecker(&other.matrix),
        })
    }

    /// `U rho U^dagger`.
    pub fn conjugated(&self, u: &Operator) -> DensityMatrix {
        assert_eq!(self.dim(), u.dim(), "conjugated: dimension mismatch");
        DensityMatrix {
            n_qubits: self.n_qubits,
            matrix: u.matrix() * &self.matrix * u.matrix().adjoint(),
        }
    }

    pub(crate) fn from_parts_unchecked(n_qubits: usize, matrix: DMatrix<C64>) -> DensityMatrix {
        DensityMatrix { n_qubits, matrix }
    }
}

fn hermitian_spectrum(m: &DMatrix<C64>) -> Vec<f64> {
    let mut vals: Vec<f64> = SymmetricEigen::new(m.clone()).eigenvalues.iter().copied().collect();
    vals.sort_by(f64::total_cmp);
    vals
}

/// Anything an observable can be evaluated on.
pub trait QuantumState {
    fn n_qubits(&self) -> usize;
    fn dim(&self) -> usize;
    /// `<psi|A|psi>` or `tr(A rho)` without any checks on `A`.
    fn raw_expectation(&self, a: &DMatrix<C64>) -> C64;
    fn density(&self) -> DensityMatrix;
}

impl QuantumState for PureState {
    fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    fn dim(&self) -> usize {
        self.amps.len()
    }

    fn raw_expectation(&self, a: &DMatrix<C64>) -> C64 {
        self.amps.dotc(&(a * &self.amps))
    }

    fn density(&self) -> DensityMatrix {
        self.to_density()
    }
}

impl QuantumState for DensityMatrix {
    fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    fn raw_expectation(&self, a: &DMatrix<C64>) -> C64 {
        // tr(A rho) without forming the product
        let n = self.matrix.nrows();
        let mut acc = ZERO;
        for i in 0..n {
            for k in 0..n {
                acc += a[(i, k)] * self.matrix[(k, i)];
            }
        }
        acc
    }

    fn density(&self) -> DensityMatrix {
        self.clone()
    }
}

/// Expectation value of `op`. For hermitian-flagged operators an imaginary
/// part above [`EXPECTATION_IMAG_TOL`] is an error.
pub fn expectation<S: QuantumState + ?Sized>(op: &Operator, state: &S) -> Result<C64> {
    if op.dim() != state.dim() {
        return Err(QbatError::DimensionMismatch {
            expected: op.dim(),
            found: state.dim(),
        });
    }
    let v = state.raw_expectation(op.matrix());
    if op.is_hermitian() && v.im.abs() > EXPECTATION_IMAG_TOL {
        return Err(QbatError::ImaginaryExpectation { imag: v.im });
    }
    Ok(v)
}

/// Real part of [`expectation`]; intended for hermitian observables.
pub fn expectation_real<S: QuantumState + ?Sized>(op: &Operator, state: &S) -> Result<f64> {
    expectation(op, state).map(|v| v.re)
}

/// Basis index of a product state, qubit 0 most significant.
pub fn basis_index(bits: &[u8]) -> usize {
    bits.iter().fold(0usize, |acc, &b| (acc << 1) | usize::from(b != 0))
}

/// Role of one qubit in a battery/hub register.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum QubitRole {
    /// Battery qubit; `slot` is 1 or 2.
    Battery { cell: usize, slot: u8 },
    Hub { cell: usize },
}

/// Assignment of register sites to battery and hub roles.
///
/// Basis ordering is fixed: site 0 is the most significant bit.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct QubitLayout {
    roles: Vec<QubitRole>,
}

impl QubitLayout {
    /// Validates uniqueness and that each cell owns two battery slots and
    /// exactly one hub qubit.
    pub fn new(roles: Vec<QubitRole>) -> Result<Self> {
        check_qubits(roles.len())?;
        for (i, r) in roles.iter().enumerate() {
            if roles[..i].contains(r) {
                return Err(QbatError::InvalidLayout(format!("duplicate role {r:?}")));
            }
            if let QubitRole::Battery { slot, .. } = r {
                if !(1..=2).contains(slot) {
                    return Err(QbatError::InvalidLayout(format!(
                        "battery slot must be 1 or 2, got {slot}"
                    )));
                }
            }
        }
        let n_cells = roles
            .iter()
            .map(|r| match r {
                QubitRole::Battery { cell, .. } | QubitRole::Hub { cell } => *cell + 1,
            })
            .max()
            .unwrap_or(0);
        for cell in 0..n_cells {
            for role in [
                QubitRole::Battery { cell, slot: 1 },
                QubitRole::Battery { cell, slot: 2 },
                QubitRole::Hub { cell },
            ] {
                if !roles.contains(&role) {
                    return Err(QbatError::InvalidLayout(format!("missing {role:?}")));
                }
            }
        }
        Ok(QubitLayout { roles })
    }

    /// `B1, B2, A` on sites 0, 1, 2.
    pub fn single_cell() -> Self {
        QubitLayout::cells(1).expect("one cell always fits")
    }

    /// `n_cells` consecutive `(B1, B2, A)` blocks.
    pub fn cells(n_cells: usize) -> Result<Self> {
        if n_cells == 0 {
            return Err(QbatError::InvalidLayout("at least one cell required".into()));
        }
        let roles = (0..n_cells)
            .flat_map(|cell| {
                [
                    QubitRole::Battery { cell, slot: 1 },
                    QubitRole::Battery { cell, slot: 2 },
                    QubitRole::Hub { cell },
                ]
            })
            .collect();
        QubitLayout::new(roles)
    }

    pub fn n_qubits(&self) -> usize {
        self.roles.len()
    }

    pub fn roles(&self) -> &[QubitRole] {
        &self.roles
    }

    pub fn n_cells(&self) -> usize {
        self.roles
            .iter()
            .filter(|r| matches!(r, QubitRole::Hub { .. }))
            .count()
    }

    pub fn site_of(&self, role: QubitRole) -> Option<usize> {
        self.roles.iter().position(|&r| r == role)
    }

    pub fn hub_site(&self, cell: usize) -> Option<usize> {
        self.site_of(QubitRole::Hub { cell })
    }

    pub fn battery_sites(&self, cell: usize) -> Option<[usize; 2]> {
        Some([
            self.site_of(QubitRole::Battery { cell, slot: 1 })?,
            self.site_of(QubitRole::Battery { cell, slot: 2 })?,
        ])
    }

    pub fn hub_sites(&self) -> Vec<usize> {
        (0..self.n_cells()).filter_map(|c| self.hub_site(c)).collect()
    }

    pub fn all_battery_sites(&self) -> Vec<usize> {
        (0..self.n_cells())
            .filter_map(|c| self.battery_sites(c))
            .flatten()
            .collect()
    }
}

impl Default for QubitLayout {
    fn default() -> Self {
        QubitLayout::single_cell()
    }
}

/// Eigendecomposition of a hermitian operator.
#[derive(Clone, Debug)]
pub struct Eigh {
    /// Ascending eigenvalues.
    pub values: Vec<f64>,
    /// Orthonormal eigenvectors as columns, in the order of `values`.
    pub vectors: DMatrix<C64>,
    n_qubits: usize,
}

/// A cluster of (numerically) degenerate eigenvalues.
#[derive(Clone, Debug, PartialEq)]
pub struct Eigenspace {
    /// Mean eigenvalue of the cluster.
    pub energy: f64,
    pub start: usize,
    pub len: usize,
}

impl Eigh {
    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn vector(&self, k: usize) -> DVector<C64> {
        self.vectors.column(k).into_owned()
    }

    /// `V f(Λ) V^dagger`.
    pub fn map_spectrum(&self, f: impl Fn(f64) -> C64) -> DMatrix<C64> {
        let mut scaled = self.vectors.clone();
        for (k, &e) in self.values.iter().enumerate() {
            let w = f(e);
            scaled.column_mut(k).iter_mut().for_each(|z| *z *= w);
        }
        scaled * self.vectors.adjoint()
    }

    pub fn reconstruct(&self) -> DMatrix<C64> {
        self.map_spectrum(|e| C64::new(e, 0.0))
    }

    /// `exp(-i H t)` with `hbar = 1`.
    pub fn propagator(&self, t: f64) -> Operator {
        Operator {
            n_qubits: self.n_qubits,
            matrix: self.map_spectrum(|e| C64::from_polar(1.0, -e * t)),
            kind: OperatorKind::Unitary,
        }
    }

    /// Groups eigenvalues closer than `tol` (chained) into eigenspaces.
    pub fn eigenspaces(&self, tol: f64) -> Vec<Eigenspace> {
        let mut out: Vec<Eigenspace> = Vec::new();
        let mut start = 0;
        for k in 1..=self.values.len() {
            if k == self.values.len() || self.values[k] - self.values[k - 1] > tol {
                let len = k - start;
                let energy = self.values[start..k].iter().sum::<f64>() / len as f64;
                out.push(Eigenspace { energy, start, len });
                start = k;
            }
        }
        out
    }

    /// Orthogonal projector onto columns `start..start+len`.
    pub fn projector(&self, space: &Eigenspace) -> DMatrix<C64> {
        let cols = self.vectors.columns(space.start, space.len);
        cols * cols.adjoint()
    }
}

/// Eigendecomposition of a hermitian-flagged operator, eigenvalues ascending.
///
/// Inside degenerate eigenspaces the basis is arbitrary.
pub fn eigh(op: &Operator) -> Result<Eigh> {
    if !op.is_hermitian() {
        return Err(QbatError::NotHermitian {
            defect: op.hermiticity_defect(),
        });
    }
    let (values, vectors) = eigh_matrix(op.matrix());
    Ok(Eigh {
        values,
        vectors,
        n_qubits: op.n_qubits(),
    })
}

/// Raw hermitian eigensolver; real inputs take the cheaper real path.
pub(crate) fn eigh_matrix(m: &DMatrix<C64>) -> (Vec<f64>, DMatrix<C64>) {
    let n = m.nrows();
    let is_real = m.iter().all(|z| z.im == 0.0);
    let (raw_vals, raw_vecs): (Vec<f64>, DMatrix<C64>) = if is_real {
        let re = m.map(|z| z.re);
        let se = SymmetricEigen::new(re);
        (
            se.eigenvalues.iter().copied().collect(),
            se.eigenvectors.map(|x| C64::new(x, 0.0)),
        )
    } else {
        let se = SymmetricEigen::new(m.clone());
        (se.eigenvalues.iter().copied().collect(), se.eigenvectors)
    };
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| raw_vals[a].total_cmp(&raw_vals[b]));
    let values = order.iter().map(|&k| raw_vals[k]).collect();
    let vectors = DMatrix::from_fn(n, n, |r, c| raw_vecs[(r, order[c])]);
    (values, vectors)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    #[test]
    fn pauli_x_matrix() {
        let x = pauli(Pauli::X);
        assert_eq!(x.entry(0, 1), ONE);
        assert_eq!(x.entry(1, 0), ONE);
        assert_eq!(x.entry(0, 0), ZERO);
        assert_eq!(x.entry(1, 1), ZERO);
    }

    #[test]
    fn pauli_products_and_commutators() {
        let xy = &pauli(Pauli::X) * &pauli(Pauli::Y);
        let iz = pauli(Pauli::Z).scaled_complex(I);
        assert_eq!(xy.max_abs_diff(&iz), 0.0);

        let zx = commutator(&pauli(Pauli::Z), &pauli(Pauli::X)).unwrap();
        let two_iy = pauli(Pauli::Y).scaled_complex(c(0.0, 2.0));
        assert_eq!(zx.max_abs_diff(&two_iy), 0.0);

        let a = pauli(Pauli::Y);
        assert_eq!(commutator(&a, &a).unwrap().max_abs(), 0.0);
    }

    #[test]
    fn z_spectrum() {
        let e = eigh(&pauli(Pauli::Z)).unwrap();
        assert_eq!(e.values, vec![-1.0, 1.0]);
        assert!((e.vectors[(1, 0)].norm() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn embed_examples() {
        let z0 = embed(&pauli(Pauli::Z), &[0], 2).unwrap();
        let expected = Operator::diagonal(2, &[1.0, 1.0, -1.0, -1.0]).unwrap();
        assert_eq!(z0.max_abs_diff(&expected), 0.0);

        let x1 = embed(&pauli(Pauli::X), &[1], 2).unwrap();
        let out = x1.act(&PureState::from_bits(&[0, 0]).unwrap()).unwrap();
        assert_eq!(out[basis_index(&[0, 1])], ONE);

        let xx = pauli(Pauli::X).kron(&pauli(Pauli::X)).unwrap();
        let e = embed(&xx, &[0, 2], 3).unwrap();
        let out = e.act(&PureState::from_bits(&[0, 0, 0]).unwrap()).unwrap();
        assert_eq!(out[basis_index(&[1, 0, 1])], ONE);
        assert_eq!(out.iter().filter(|z| z.norm() > 0.0).count(), 1);
    }

    #[test]
    fn embed_respects_site_order() {
        // |1><0| on site 2, |0><0| on site 0: Z⊗X reversed onto [2, 0]
        let zx = pauli(Pauli::Z).kron(&pauli(Pauli::X)).unwrap();
        let a = embed(&zx, &[2, 0], 3).unwrap();
        let b = &embed(&pauli(Pauli::Z), &[2], 3).unwrap() * &embed(&pauli(Pauli::X), &[0], 3).unwrap();
        assert_eq!(a.max_abs_diff(&b), 0.0);
    }

    #[test]
    fn embed_rejects_bad_sites() {
        let x = pauli(Pauli::X);
        assert!(matches!(
            embed(&x, &[3], 3),
            Err(QbatError::SiteOutOfRange { site: 3, .. })
        ));
        let xx = x.kron(&x).unwrap();
        assert_eq!(embed(&xx, &[1, 1], 3).unwrap_err(), QbatError::DuplicateSite(1));
        assert!(embed(&x, &[0], 13).is_err());
    }

    #[test]
    fn commutator_dimension_mismatch() {
        let err = commutator(&pauli(Pauli::X), &Operator::identity(2)).unwrap_err();
        assert!(matches!(err, QbatError::DimensionMismatch { .. }));
    }

    #[test]
    fn expectation_of_z_on_zero() {
        let up = PureState::basis(1, 0).unwrap();
        assert_eq!(expectation(&pauli(Pauli::Z), &up).unwrap(), ONE);
        assert_eq!(expectation(&pauli(Pauli::Z), &up.to_density()).unwrap(), ONE);
    }

    #[test]
    fn expectation_general_operator_and_dimension_check() {
        let iy = pauli(Pauli::Y).scaled_complex(I); // i*Y is anti-hermitian -> General
        let plus = PureState::normalized(1, DVector::from_vec(vec![ONE, I])).unwrap();
        let v = expectation(&iy, &plus).unwrap();
        assert!((v - I).norm() < 1e-15);
        assert_eq!(expectation(&pauli(Pauli::X), &PureState::basis(2, 0).unwrap()).unwrap_err(),
            QbatError::DimensionMismatch { expected: 2, found: 4 });
    }

    #[test]
    fn hermitian_constructor_rejects() {
        let m = DMatrix::from_row_slice(2, 2, &[ZERO, ONE, ZERO, ZERO]);
        assert!(matches!(Operator::hermitian(1, m.clone()), Err(QbatError::NotHermitian { .. })));
        let op = Operator::general(1, m).unwrap();
        assert!(eigh(&op).is_err());
    }

    #[test]
    fn state_validation() {
        let v = DVector::from_vec(vec![ONE, ONE]);
        assert!(matches!(PureState::new(1, v.clone()), Err(QbatError::NotNormalized { .. })));
        let s = PureState::normalized(1, v).unwrap();
        assert!((s.amplitudes().norm() - 1.0).abs() < 1e-15);
        let bad = DMatrix::from_row_slice(2, 2, &[c(1.5, 0.0), ZERO, ZERO, c(-0.5, 0.0)]);
        assert!(DensityMatrix::new(1, bad).is_err());
    }

    #[test]
    fn layout_validation() {
        let l = QubitLayout::single_cell();
        assert_eq!(l.battery_sites(0), Some([0, 1]));
        assert_eq!(l.hub_site(0), Some(2));
        let two = QubitLayout::cells(2).unwrap();
        assert_eq!(two.hub_sites(), vec![2, 5]);
        assert!(QubitLayout::new(vec![
            QubitRole::Battery { cell: 0, slot: 1 },
            QubitRole::Battery { cell: 0, slot: 1 },
            QubitRole::Hub { cell: 0 },
        ])
        .is_err());
        assert!(QubitLayout::new(vec![
            QubitRole::Battery { cell: 0, slot: 1 },
            QubitRole::Hub { cell: 0 },
        ])
        .is_err());
    }

    #[test]
    fn basis_index_big_endian() {
        assert_eq!(basis_index(&[1, 0, 0]), 4);
        assert_eq!(basis_index(&[0, 0, 1]), 1);
    }

    #[test]
    fn eigenspace_clustering() {
        let op = Operator::diagonal(2, &[1.0, -2.0, 1.0, 3.0]).unwrap();
        let e = eigh(&op).unwrap();
        let spaces = e.eigenspaces(1e-9);
        assert_eq!(spaces.len(), 3);
        assert_eq!(spaces[1].len, 2);
        assert_eq!(spaces[1].energy, 1.0);
        let p = e.projector(&spaces[1]);
        assert!((p.trace().re - 2.0).abs() < 1e-14);
    }

    fn random_hermitian(n: usize, seed: &[f64]) -> Operator {
        let dim = 1 << n;
        let mut m = DMatrix::<C64>::zeros(dim, dim);
        let mut it = seed.iter().cycle();
        for i in 0..dim {
            for j in i..dim {
                let re = *it.next().unwrap();
                let im = if i == j { 0.0 } else { *it.next().unwrap() };
                m[(i, j)] = c(re, im);
                m[(j, i)] = c(re, -im);
            }
        }
        Operator::hermitian(n, m).unwrap()
    }

    fn random_state(n: usize, seed: &[f64]) -> PureState {
        let dim = 1 << n;
        let v = DVector::from_iterator(
            dim,
            (0..dim).map(|k| c(seed[(2 * k) % seed.len()], seed[(2 * k + 1) % seed.len()] + 0.1)),
        );
        PureState::normalized(n, v).unwrap()
    }

    proptest! {
        #[test]
        fn eigh_round_trip(n in 1usize..4, seed in prop::collection::vec(-2.0f64..2.0, 16..80)) {
            let a = random_hermitian(n, &seed);
            let e = eigh(&a).unwrap();
            prop_assert!(max_abs(&(e.reconstruct() - a.matrix())) <= 1e-10);
            let gram = e.vectors.adjoint() * &e.vectors;
            prop_assert!(max_abs(&(gram - DMatrix::identity(1 << n, 1 << n))) <= 1e-10);
            prop_assert!(e.values.windows(2).all(|w| w[0] <= w[1]));
        }

        #[test]
        fn embed_is_homomorphism(
            a_seed in prop::collection::vec(-1.0f64..1.0, 16..40),
            b_seed in prop::collection::vec(-1.0f64..1.0, 16..40),
            s0 in 0usize..3, s1 in 0usize..3,
        ) {
            prop_assume!(s0 != s1);
            let a = random_hermitian(2, &a_seed);
            let b = random_hermitian(2, &b_seed);
            let lhs = embed(&(&a * &b), &[s0, s1], 3).unwrap();
            let rhs = &embed(&a, &[s0, s1], 3).unwrap() * &embed(&b, &[s0, s1], 3).unwrap();
            prop_assert!(lhs.max_abs_diff(&rhs) <= 1e-12);
        }

        #[test]
        fn commutator_antisymmetric(
            a_seed in prop::collection::vec(-1.0f64..1.0, 16..40),
            b_seed in prop::collection::vec(-1.0f64..1.0, 16..40),
        ) {
            let a = random_hermitian(2, &a_seed);
            let b = random_hermitian(2, &b_seed);
            let ab = commutator(&a, &b).unwrap();
            let ba = commutator(&b, &a).unwrap();
            prop_assert_eq!(ab.matrix(), &(-ba.matrix()));
        }

        #[test]
        fn expectation_is_linear(
            a_seed in prop::collection::vec(-1.0f64..1.0, 16..40),
            b_seed in prop::collection::vec(-1.0f64..1.0, 16..40),
            s_seed in prop::collection::vec(-1.0f64..1.0, 4..20),
            alpha in -3.0f64..3.0,
        ) {
            let a = random_hermitian(2, &a_seed);
            let b = random_hermitian(2, &b_seed);
            let psi = random_state(2, &s_seed);
            let combo = &a.scaled(alpha) + &b;
            let lhs = expectation(&combo, &psi).unwrap();
            let rhs = expectation(&a, &psi).unwrap() * alpha + expectation(&b, &psi).unwrap();
            prop_assert!((lhs - rhs).norm() <= 1e-12);
        }
    }
}
