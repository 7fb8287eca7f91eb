//! Physical objects of one battery/hub register: bare and charging
//! Hamiltonians, the energy-current operator, charge and ergotropy.
//!
//! Units: `hbar = 1`. Energies are in the same units as `omega` and `J`;
//! times in units of `1/J` when `J = 1`.

use nalgebra::DMatrix;

use crate::error::{QbatError, Result};
use crate::qalg::{
    commutator, eigh, embed, expectation_real, two_site, DensityMatrix, Operator, Pauli,
    QuantumState, QubitLayout, C64, I,
};

/// Physical parameters of a battery/hub register.
#[derive(Clone, Debug, PartialEq)]
pub struct SystemSpec {
    pub omega: f64,
    pub j_coupling: f64,
    pub layout: QubitLayout,
}

impl SystemSpec {
    /// One cell: `B1, B2, A` on sites 0, 1, 2.
    pub fn new(omega: f64, j_coupling: f64) -> Result<Self> {
        Self::with_layout(omega, j_coupling, QubitLayout::single_cell())
    }

    pub fn with_cells(omega: f64, j_coupling: f64, n_cells: usize) -> Result<Self> {
        Self::with_layout(omega, j_coupling, QubitLayout::cells(n_cells)?)
    }

    pub fn with_layout(omega: f64, j_coupling: f64, layout: QubitLayout) -> Result<Self> {
        if !(omega > 0.0 && omega.is_finite()) {
            return Err(QbatError::param("omega", format!("must be positive, got {omega}")));
        }
        if !(j_coupling > 0.0 && j_coupling.is_finite()) {
            return Err(QbatError::param(
                "j_coupling",
                format!("must be positive, got {j_coupling}"),
            ));
        }
        Ok(SystemSpec {
            omega,
            j_coupling,
            layout,
        })
    }

    pub fn n_qubits(&self) -> usize {
        self.layout.n_qubits()
    }

    /// Energy initially stored in one Bell cell, `2 omega`.
    pub fn cell_energy(&self) -> f64 {
        2.0 * self.omega
    }

    /// Full-discharge time of a Bell cell, `pi / (4 sqrt(2) J)`.
    pub fn discharge_time(&self) -> f64 {
        std::f64::consts::PI / (4.0 * std::f64::consts::SQRT_2 * self.j_coupling)
    }
}

/// `omega (|1><1| - |0><0|)` on one qubit.
pub fn qubit_energy(omega: f64) -> Operator {
    Operator::diagonal(1, &[-omega, omega]).expect("2x2 diagonal")
}

/// Sum of [`qubit_energy`] over every qubit of an `n`-qubit register.
pub fn reference_hamiltonian(omega: f64, n_qubits: usize) -> Result<Operator> {
    let sites: Vec<usize> = (0..n_qubits).collect();
    sum_qubit_energies(omega, &sites, n_qubits)
}

fn sum_qubit_energies(omega: f64, sites: &[usize], n_total: usize) -> Result<Operator> {
    let single = qubit_energy(omega);
    let mut acc = Operator::zeros(n_total);
    for &site in sites {
        acc = &acc + &embed(&single, &[site], n_total)?;
    }
    Ok(acc)
}

/// Bare (non-interacting) Hamiltonians of the register.
#[derive(Clone, Debug)]
pub struct BareHamiltonian {
    pub h0_battery: Operator,
    pub h0_hub: Operator,
    pub h0_total: Operator,
    /// Ground energy of the hub part: `-omega` per hub qubit.
    pub e_empty: f64,
}

pub fn bare_hamiltonian(spec: &SystemSpec) -> Result<BareHamiltonian> {
    let n = spec.n_qubits();
    let hubs = spec.layout.hub_sites();
    let h0_battery = sum_qubit_energies(spec.omega, &spec.layout.all_battery_sites(), n)?;
    let h0_hub = sum_qubit_energies(spec.omega, &hubs, n)?;
    let h0_total = &h0_battery + &h0_hub;
    Ok(BareHamiltonian {
        h0_battery,
        h0_hub,
        h0_total,
        e_empty: -spec.omega * hubs.len() as f64,
    })
}

/// XY exchange `J (XX + YY)` between sites `a` and `b`.
pub fn xy_coupling(j: f64, a: usize, b: usize, n: usize) -> Result<Operator> {
    let xx = two_site(Pauli::X, a, Pauli::X, b, n)?;
    let yy = two_site(Pauli::Y, a, Pauli::Y, b, n)?;
    Ok((&xx + &yy).scaled(j))
}

/// Charging Hamiltonian: every battery qubit of a cell is XY-coupled to the
/// cell's hub qubit with strength `J`. Cells are mutually uncoupled.
pub fn charging_hamiltonian(spec: &SystemSpec) -> Result<Operator> {
    let n = spec.n_qubits();
    let mut acc = Operator::zeros(n);
    for cell in 0..spec.layout.n_cells() {
        let hub = spec
            .layout
            .hub_site(cell)
            .ok_or_else(|| QbatError::InvalidLayout(format!("cell {cell} has no hub")))?;
        let batteries = spec
            .layout
            .battery_sites(cell)
            .ok_or_else(|| QbatError::InvalidLayout(format!("cell {cell} lacks battery qubits")))?;
        for b in batteries {
            acc = &acc + &xy_coupling(spec.j_coupling, b, hub, n)?;
        }
    }
    Ok(acc)
}

/// Every Hamiltonian needed to run and measure a discharge.
#[derive(Clone, Debug)]
pub struct HamiltonianSet {
    pub h0_battery: Operator,
    pub h0_hub: Operator,
    pub h0_total: Operator,
    pub h_charging: Operator,
    pub e_empty: f64,
}

impl HamiltonianSet {
    pub fn build(spec: &SystemSpec) -> Result<Self> {
        let bare = bare_hamiltonian(spec)?;
        Ok(HamiltonianSet {
            h0_battery: bare.h0_battery,
            h0_hub: bare.h0_hub,
            h0_total: bare.h0_total,
            h_charging: charging_hamiltonian(spec)?,
            e_empty: bare.e_empty,
        })
    }

    /// Energy-current operator for the charging Hamiltonian.
    pub fn ec_operator(&self) -> Result<Operator> {
        ec_operator(&self.h0_hub, &self.h_charging)
    }
}

/// `(1/i) [h0_hub, h_int]`, checked hermitian.
pub fn ec_operator(h0_hub: &Operator, h_int: &Operator) -> Result<Operator> {
    let c = commutator(h0_hub, h_int)?;
    c.scaled_complex(-I).into_hermitian()
}

/// The energy-current operator of the one-cell XY register written out term
/// by term:
///
/// `2 J omega sum_n (sx^{Bn} sy^{A} - sy^{Bn} sx^{A})`
///
/// with the Pauli matrices oriented so that the excited state `|1>` is the
/// `+1` eigenvector of `sz`. In that orientation `sy` is the negative of
/// [`crate::qalg::pauli`]`(Y)`.
pub fn ec_operator_closed_form(spec: &SystemSpec) -> Result<Operator> {
    let n = spec.n_qubits();
    let hub = spec
        .layout
        .hub_site(0)
        .ok_or_else(|| QbatError::InvalidLayout("no hub".into()))?;
    let batteries = spec
        .layout
        .battery_sites(0)
        .ok_or_else(|| QbatError::InvalidLayout("no battery".into()))?;
    let mut acc = Operator::zeros(n);
    for b in batteries {
        // sx sy' - sy' sx with sy' = -Y
        let xy = two_site(Pauli::X, b, Pauli::Y, hub, n)?.scaled(-1.0);
        let yx = two_site(Pauli::Y, b, Pauli::X, hub, n)?.scaled(-1.0);
        acc = &acc + &(&xy - &yx);
    }
    Ok(acc.scaled(2.0 * spec.j_coupling * spec.omega))
}

/// Energy delivered to the hub: `tr(H0_hub rho) - E_empty`.
pub fn charge<S: QuantumState + ?Sized>(state: &S, hs: &HamiltonianSet) -> Result<f64> {
    Ok(expectation_real(&hs.h0_hub, state)? - hs.e_empty)
}

/// Charge of each hub qubit separately, in cell order.
pub fn hub_charges<S: QuantumState + ?Sized>(state: &S, spec: &SystemSpec) -> Result<Vec<f64>> {
    let single = qubit_energy(spec.omega);
    spec.layout
        .hub_sites()
        .into_iter()
        .map(|site| {
            let h = embed(&single, &[site], spec.n_qubits())?;
            Ok(expectation_real(&h, state)? + spec.omega)
        })
        .collect()
}

/// One sample of a discharge trajectory.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ChargeRecord {
    pub time: f64,
    pub charge: f64,
    pub ec: f64,
}

fn require_hermitian(h: &Operator) -> Result<()> {
    if !h.is_hermitian() {
        return Err(QbatError::NotHermitian {
            defect: h.hermiticity_defect(),
        });
    }
    Ok(())
}

/// Passive state of `rho` relative to `h`: populations sorted descending
/// placed on energy levels sorted ascending. Ties pair in index order.
pub fn passive_state(rho: &DensityMatrix, h: &Operator) -> Result<DensityMatrix> {
    require_hermitian(h)?;
    if rho.dim() != h.dim() {
        return Err(QbatError::DimensionMismatch {
            expected: h.dim(),
            found: rho.dim(),
        });
    }
    let pops = descending_populations(rho);
    let levels = eigh(h)?;
    let dim = h.dim();
    let mut m = DMatrix::<C64>::zeros(dim, dim);
    for (k, &p) in pops.iter().enumerate() {
        let v = levels.vector(k);
        m += (&v * v.adjoint()) * C64::new(p, 0.0);
    }
    Ok(DensityMatrix::from_parts_unchecked(rho.n_qubits(), m))
}

fn descending_populations(rho: &DensityMatrix) -> Vec<f64> {
    let mut pops = rho.spectrum();
    pops.reverse();
    pops
}

/// Maximum unitarily extractable work, `tr(h rho) - tr(h passive)`.
pub fn ergotropy(rho: &DensityMatrix, h: &Operator) -> Result<f64> {
    require_hermitian(h)?;
    let energy = expectation_real(h, rho)?;
    let levels = eigh(h)?;
    let passive_energy: f64 = descending_populations(rho)
        .iter()
        .zip(&levels.values)
        .map(|(p, e)| p * e)
        .sum();
    Ok(energy - passive_energy)
}

/// Pure-state ergotropy: energy above the ground level of `h`.
pub fn pure_state_ergotropy(psi: &crate::qalg::PureState, h: &Operator) -> Result<f64> {
    require_hermitian(h)?;
    let ground = eigh(h)?.values[0];
    Ok(expectation_real(h, psi)? - ground)
}
