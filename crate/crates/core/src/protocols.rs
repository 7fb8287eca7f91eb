//! Concrete discharge experiments on Bell batteries: closed-form discharge
//! laws, trapping checks, switch gates, separable and single-particle
//! baselines and multi-cell plans.

use std::f64::consts::{FRAC_1_SQRT_2, SQRT_2};
use std::fmt;
use std::str::FromStr;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::dynamics::{sample_trajectory, uniform_times, StaticEvolver};
use crate::error::{QbatError, Result};
use crate::model::{charge, hub_charges, pure_state_ergotropy, xy_coupling, HamiltonianSet, SystemSpec};
use crate::qalg::{
    embed, expectation_real, pauli, DensityMatrix, Operator, Pauli, PureState, QuantumState, C64,
    ZERO,
};
use crate::series::TimeSeries;

/// Label `(n, m)` of the Bell state `(|0 n> + (-1)^m |1 !n>) / sqrt 2`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct BellLabel {
    n: u8,
    m: u8,
}

impl BellLabel {
    pub const ALL: [BellLabel; 4] = [
        BellLabel { n: 0, m: 0 },
        BellLabel { n: 0, m: 1 },
        BellLabel { n: 1, m: 0 },
        BellLabel { n: 1, m: 1 },
    ];
    /// The singlet.
    pub const SINGLET: BellLabel = BellLabel { n: 1, m: 1 };

    pub fn new(n: u8, m: u8) -> Result<Self> {
        if n > 1 || m > 1 {
            return Err(QbatError::param("bell", format!("bits must be 0 or 1, got ({n}, {m})")));
        }
        Ok(BellLabel { n, m })
    }

    pub fn n(&self) -> u8 {
        self.n
    }

    pub fn m(&self) -> u8 {
        self.m
    }

    /// Two-qubit battery state.
    pub fn state(&self) -> PureState {
        let mut amps = DVector::from_element(4, ZERO);
        let sign = if self.m == 0 { 1.0 } else { -1.0 };
        amps[self.n as usize] = C64::new(FRAC_1_SQRT_2, 0.0);
        amps[2 + (1 - self.n) as usize] = C64::new(sign * FRAC_1_SQRT_2, 0.0);
        PureState::new(2, amps).expect("bell states are normalized")
    }

    /// Battery state followed by an empty hub qubit.
    pub fn with_empty_hub(&self) -> PureState {
        self.state()
            .kron(&PureState::basis(1, 0).expect("one qubit"))
            .expect("three qubits")
    }

    /// Fraction of the cell energy this state can hand to the hub.
    pub fn g(&self) -> f64 {
        match (self.n, self.m) {
            (0, _) => 0.5,
            (1, 0) => 1.0,
            _ => 0.0,
        }
    }
}

impl fmt::Display for BellLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}{}", self.n, self.m)
    }
}

impl FromStr for BellLabel {
    type Err = QbatError;

    fn from_str(s: &str) -> Result<Self> {
        let bits: Vec<u8> = s
            .trim()
            .chars()
            .map(|c| match c {
                '0' => Ok(0),
                '1' => Ok(1),
                _ => Err(QbatError::param("bell", format!("expected two bits like 10, got {s:?}"))),
            })
            .collect::<Result<_>>()?;
        if bits.len() != 2 {
            return Err(QbatError::param("bell", format!("expected two bits like 10, got {s:?}")));
        }
        BellLabel::new(bits[0], bits[1])
    }
}

/// `E0 g_nm sin^2(2 sqrt 2 J t)` with `E0 = 2 omega`.
pub fn bell_charge_closed_form(label: BellLabel, t: f64, spec: &SystemSpec) -> f64 {
    let s = (2.0 * SQRT_2 * spec.j_coupling * t).sin();
    spec.cell_energy() * label.g() * s * s
}

/// Local Pauli on one battery qubit that unlocks a trapped singlet.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum SwitchGate {
    HalfOnQubit1,
    HalfOnQubit2,
    FullOnQubit1,
    FullOnQubit2,
}

impl SwitchGate {
    pub const ALL: [SwitchGate; 4] = [
        SwitchGate::HalfOnQubit1,
        SwitchGate::HalfOnQubit2,
        SwitchGate::FullOnQubit1,
        SwitchGate::FullOnQubit2,
    ];

    /// Pauli axis and battery slot (1 or 2).
    pub fn parts(&self) -> (Pauli, u8) {
        match self {
            SwitchGate::HalfOnQubit1 => (Pauli::X, 1),
            SwitchGate::HalfOnQubit2 => (Pauli::X, 2),
            SwitchGate::FullOnQubit1 => (Pauli::Z, 1),
            SwitchGate::FullOnQubit2 => (Pauli::Z, 2),
        }
    }

    /// Bell label reached from `label` (up to a global phase).
    pub fn relabel(&self, label: BellLabel) -> BellLabel {
        match self.parts().0 {
            Pauli::X => BellLabel { n: 1 - label.n, m: label.m },
            _ => BellLabel { n: label.n, m: 1 - label.m },
        }
    }

    /// The gate as an operator on the one-cell register.
    pub fn operator(&self) -> Operator {
        let (axis, slot) = self.parts();
        embed(&pauli(axis), &[usize::from(slot - 1)], 3).expect("site inside a 3-qubit register")
    }
}

/// Applies a switch gate to a one-cell (3-qubit) state.
pub fn switch_gate(kind: SwitchGate, psi: &PureState) -> Result<PureState> {
    if psi.n_qubits() != 3 {
        return Err(QbatError::DimensionMismatch {
            expected: 8,
            found: psi.dim(),
        });
    }
    PureState::new(3, kind.operator().act(psi)?)
}

/// Charge and current of a Bell cell with an empty hub, optionally after a
/// switch gate, over `[0, 2 tau_d]`. The `closed_form_over_E0` channel carries
/// the discharge law over `E0` for the resulting Bell state.
pub fn bell_discharge(
    label: BellLabel,
    gate: Option<SwitchGate>,
    spec: &SystemSpec,
    n_samples: usize,
) -> Result<TimeSeries> {
    one_cell(spec)?;
    let hs = HamiltonianSet::build(spec)?;
    let p_hat = hs.ec_operator()?;
    let mut psi0 = label.with_empty_hub();
    let mut effective = label;
    if let Some(g) = gate {
        psi0 = switch_gate(g, &psi0)?;
        effective = g.relabel(label);
    }
    let mut ts = sample_trajectory(
        &hs.h_charging,
        &psi0,
        2.0 * spec.discharge_time(),
        n_samples,
        &hs,
        &p_hat,
    )?;
    let e0 = spec.cell_energy();
    for k in 0..ts.len() {
        let t = ts.times[k];
        ts.push_extra("closed_form_over_E0", bell_charge_closed_form(effective, t, spec) / e0);
    }
    Ok(ts)
}

fn one_cell(spec: &SystemSpec) -> Result<()> {
    if spec.layout.n_cells() != 1 || spec.n_qubits() != 3 {
        return Err(QbatError::InvalidLayout("protocol needs exactly one cell".into()));
    }
    Ok(())
}

/// Outcome of [`trapping_check`].
#[derive(Clone, Debug, PartialEq)]
pub struct TrapReport {
    pub is_h_eigenstate: bool,
    /// `<H_int>`.
    pub h_eigenvalue: f64,
    /// `<P>`.
    pub ec_value: f64,
    pub trapped: bool,
    /// `|| H_int psi - <H_int> psi ||`.
    pub h_residual: f64,
    /// `|| P psi ||`.
    pub ec_residual: f64,
}

/// Whether `psi` is a joint eigenstate of `h_int` and of the current operator
/// with zero current. Commutation of the two operators is not required.
pub fn trapping_check(
    h_int: &Operator,
    hs: &HamiltonianSet,
    psi: &PureState,
    tol: f64,
) -> Result<TrapReport> {
    if !(tol > 0.0) {
        return Err(QbatError::param("tol", format!("must be positive, got {tol}")));
    }
    let p_hat = crate::model::ec_operator(&hs.h0_hub, h_int)?;
    let h_eigenvalue = expectation_real(h_int, psi)?;
    let h_residual = (h_int.act(psi)? - psi.amplitudes() * C64::new(h_eigenvalue, 0.0)).norm();
    let ec_value = expectation_real(&p_hat, psi)?;
    let ec_residual = p_hat.act(psi)?.norm();
    let is_h_eigenstate = h_residual <= tol;
    Ok(TrapReport {
        is_h_eigenstate,
        h_eigenvalue,
        ec_value,
        trapped: is_h_eigenstate && ec_value.abs() <= tol && ec_residual <= tol,
        h_residual,
        ec_residual,
    })
}

/// Battery density matrix with elements `rho11 .. rho44` on
/// `|00>, |01>, |10>, |11>`, plus the real `|01><10|` coherence.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RestrictedBattery {
    pub diag: [f64; 4],
    pub rho23: f64,
}

impl RestrictedBattery {
    pub fn to_density(&self) -> Result<DensityMatrix> {
        let mut m = DMatrix::from_element(4, 4, ZERO);
        for k in 0..4 {
            m[(k, k)] = C64::new(self.diag[k], 0.0);
        }
        m[(1, 2)] = C64::new(self.rho23, 0.0);
        m[(2, 1)] = C64::new(self.rho23, 0.0);
        DensityMatrix::new(2, m)
    }

    /// Constraint set of a trapped battery holding `E0`:
    /// `rho11 = rho44`, `2 rho11 + rho22 + rho33 + 2 rho23 = 0`,
    /// unit trace, and `0 <= 1 - 4 (rho22 rho33 - rho23^2) <= 1`.
    pub fn constraint_residuals(&self) -> [f64; 4] {
        let [r11, r22, r33, r44] = self.diag;
        let det = 1.0 - 4.0 * (r22 * r33 - self.rho23 * self.rho23);
        let cond4 = if det < 0.0 { -det } else if det > 1.0 { det - 1.0 } else { 0.0 };
        [
            (r11 - r44).abs(),
            (2.0 * r11 + r22 + r33 + 2.0 * self.rho23).abs(),
            (r11 + r22 + r33 + r44 - 1.0).abs(),
            cond4,
        ]
    }

    /// Solution of the constraints: `rho11 = 0`, `rho22 = rho33 = 1/2`,
    /// `rho23 = -1/2`.
    pub fn constraint_solution() -> Self {
        RestrictedBattery {
            diag: [0.0, 0.5, 0.5, 0.0],
            rho23: -0.5,
        }
    }
}

/// Energy the cell offers per the trace formula `omega (2 + rho11 - rho44)`.
pub fn available_energy(rho: &DensityMatrix, omega: f64) -> f64 {
    omega * (2.0 + rho.entry(0, 0).re - rho.entry(3, 3).re)
}

/// Evaluates `<P(t)>` for battery states with an empty hub at fixed times,
/// using Heisenberg-picture current operators restricted to the hub-empty
/// block.
#[derive(Clone, Debug)]
pub struct CurrentProbe {
    pub times: Vec<f64>,
    blocks: Vec<DMatrix<C64>>,
}

impl CurrentProbe {
    pub fn new(spec: &SystemSpec, t_final: f64, n_times: usize) -> Result<Self> {
        one_cell(spec)?;
        let hs = HamiltonianSet::build(spec)?;
        let p_hat = hs.ec_operator()?;
        let times = uniform_times(t_final, n_times)?;
        let eig = crate::qalg::eigh(&hs.h_charging)?;
        let blocks = times
            .iter()
            .map(|&t| {
                let u = eig.propagator(t);
                let heis = u.matrix().adjoint() * p_hat.matrix() * u.matrix();
                // hub is the least significant qubit: hub-empty rows are even
                DMatrix::from_fn(4, 4, |r, c| heis[(2 * r, 2 * c)])
            })
            .collect();
        Ok(CurrentProbe { times, blocks })
    }

    /// `max_t |<P(t)>|` for battery state `rho` and an empty hub.
    pub fn max_abs_current(&self, rho: &DensityMatrix) -> f64 {
        self.blocks
            .iter()
            .map(|b| rho.raw_expectation(b).re.abs())
            .fold(0.0, f64::max)
    }
}

/// Scan outcome for one sampling family.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct ScanTally {
    pub samples: usize,
    pub passed_ca: usize,
    pub passed_both: usize,
    pub counterexamples: usize,
    /// Largest trace distance to the singlet among states passing both.
    pub worst_distance: f64,
}

/// Result of [`trapping_uniqueness_scan`].
#[derive(Clone, Debug, PartialEq)]
pub struct UniquenessReport {
    /// Worst constraint residual of the solved matrix.
    pub solution_residual: f64,
    /// Trace distance between the solved matrix and the singlet.
    pub solution_distance: f64,
    pub restricted: ScanTally,
    pub unrestricted: ScanTally,
    /// Trace distance above which a state passing both conditions counts as
    /// a counterexample.
    pub distance_threshold: f64,
}

impl UniquenessReport {
    pub fn restricted_ok(&self, tol: f64) -> bool {
        self.solution_distance <= tol && self.restricted.counterexamples == 0
    }
}

/// Checks that the singlet is the only battery state that both offers `E0`
/// and carries no current at any time.
///
/// `n_random` states are drawn from the restricted family (diagonal plus a
/// real `rho23`): a third generic, a third on the `rho11 = rho44` manifold and
/// a third as small admixtures to the singlet at log-uniform strengths. The
/// same number of unrestricted states (random full-rank matrices symmetrized
/// to satisfy `rho11 = rho44`, again partly as admixtures) is scanned and
/// only reported. The current is simulated at 64 times over two discharge
/// periods.
pub fn trapping_uniqueness_scan(
    spec: &SystemSpec,
    n_random: usize,
    tol: f64,
    seed: u64,
) -> Result<UniquenessReport> {
    if n_random == 0 {
        return Err(QbatError::param("samples", "must be at least 1"));
    }
    if !(tol > 0.0) {
        return Err(QbatError::param("tol", format!("must be positive, got {tol}")));
    }
    let singlet = BellLabel::SINGLET.state().to_density();
    let sol = RestrictedBattery::constraint_solution();
    let solution_residual = sol.constraint_residuals().iter().copied().fold(0.0, f64::max);
    let solution_distance = sol.to_density()?.trace_distance(&singlet);

    let probe = CurrentProbe::new(spec, 2.0 * spec.discharge_time(), 64)?;
    let ec_tol = tol * spec.omega * spec.j_coupling;
    // passing Cb bounds the bright population by ~tol, which bounds the
    // distance to the singlet by ~sqrt(tol)
    let distance_threshold = 10.0 * tol.sqrt();

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let restricted: Vec<DensityMatrix> = (0..n_random)
        .map(|k| sample_restricted(&mut rng, k % 3).to_density())
        .collect::<Result<_>>()?;
    let unrestricted: Vec<DensityMatrix> = (0..n_random)
        .map(|k| sample_unrestricted(&mut rng, k % 2 == 1, &singlet))
        .collect::<Result<_>>()?;

    let tally = |states: &[DensityMatrix]| -> ScanTally {
        let outcomes: Vec<(bool, bool, f64)> = states
            .par_iter()
            .map(|rho| {
                let ca = (available_energy(rho, spec.omega) - spec.cell_energy()).abs()
                    <= tol * spec.omega;
                let cb = ca && probe.max_abs_current(rho) <= ec_tol;
                let d = if cb { rho.trace_distance(&singlet) } else { 0.0 };
                (ca, cb, d)
            })
            .collect();
        let mut t = ScanTally {
            samples: states.len(),
            ..ScanTally::default()
        };
        for (ca, cb, d) in outcomes {
            t.passed_ca += usize::from(ca);
            if cb {
                t.passed_both += 1;
                t.worst_distance = t.worst_distance.max(d);
                t.counterexamples += usize::from(d > distance_threshold);
            }
        }
        t
    };

    Ok(UniquenessReport {
        solution_residual,
        solution_distance,
        restricted: tally(&restricted),
        unrestricted: tally(&unrestricted),
        distance_threshold,
    })
}

fn random_simplex<R: Rng>(rng: &mut R, k: usize) -> Vec<f64> {
    // flat Dirichlet via normalized exponentials
    let e: Vec<f64> = (0..k).map(|_| -(1.0 - rng.random::<f64>()).ln()).collect();
    let s: f64 = e.iter().sum();
    e.into_iter().map(|x| x / s).collect()
}

fn sample_restricted<R: Rng>(rng: &mut R, kind: usize) -> RestrictedBattery {
    let with_coherence = |rng: &mut R, diag: [f64; 4]| RestrictedBattery {
        diag,
        rho23: rng.random_range(-1.0..=1.0) * (diag[1] * diag[2]).sqrt(),
    };
    match kind {
        0 => {
            let p = random_simplex(rng, 4);
            with_coherence(rng, [p[0], p[1], p[2], p[3]])
        }
        1 => {
            let p = random_simplex(rng, 3);
            // p[0] is split evenly between |00> and |11>
            with_coherence(rng, [p[0] / 2.0, p[1], p[2], p[0] / 2.0])
        }
        _ => {
            let p = random_simplex(rng, 3);
            let other = with_coherence(rng, [p[0] / 2.0, p[1], p[2], p[0] / 2.0]);
            let eps = 10f64.powf(rng.random_range(-14.0..0.0));
            let s = RestrictedBattery::constraint_solution();
            let mix = |a: f64, b: f64| (1.0 - eps) * a + eps * b;
            RestrictedBattery {
                diag: [
                    mix(s.diag[0], other.diag[0]),
                    mix(s.diag[1], other.diag[1]),
                    mix(s.diag[2], other.diag[2]),
                    mix(s.diag[3], other.diag[3]),
                ],
                rho23: mix(s.rho23, other.rho23),
            }
        }
    }
}

fn sample_unrestricted<R: Rng>(
    rng: &mut R,
    near_singlet: bool,
    singlet: &DensityMatrix,
) -> Result<DensityMatrix> {
    let g = DMatrix::from_fn(4, 4, |_, _| {
        C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))
    });
    let raw = &g * g.adjoint();
    // average with its image under X (x) X so that rho11 = rho44
    let xx = pauli(Pauli::X).kron(&pauli(Pauli::X))?;
    let sym = (&raw + xx.matrix() * &raw * xx.matrix()) * C64::new(0.5, 0.0);
    let tr = sym.trace();
    let mut m = sym.map(|z| z / tr);
    if near_singlet {
        let eps = 10f64.powf(rng.random_range(-14.0..0.0));
        m = singlet.matrix() * C64::new(1.0 - eps, 0.0) + m * C64::new(eps, 0.0);
    }
    // restore exact hermiticity lost to rounding
    let m = (&m + m.adjoint()) * C64::new(0.5, 0.0);
    DensityMatrix::new(2, m)
}

/// Product battery state `|phi1>|phi2>` with
/// `|phi_n> = alpha_n |0> + beta_n e^{i theta_n} |1>`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SeparableParams {
    pub beta1: f64,
    pub beta2: f64,
    pub theta1: f64,
    pub theta2: f64,
}

impl SeparableParams {
    pub fn new(beta1: f64, beta2: f64, theta1: f64, theta2: f64) -> Result<Self> {
        for (field, b) in [("beta1", beta1), ("beta2", beta2)] {
            if !(0.0..=1.0).contains(&b) {
                return Err(QbatError::param(field, format!("must lie in [0, 1], got {b}")));
            }
        }
        if !(theta1.is_finite() && theta2.is_finite()) {
            return Err(QbatError::param("theta", "must be finite"));
        }
        Ok(SeparableParams {
            beta1,
            beta2,
            theta1,
            theta2,
        })
    }

    pub fn alpha1(&self) -> f64 {
        (1.0 - self.beta1 * self.beta1).max(0.0).sqrt()
    }

    pub fn alpha2(&self) -> f64 {
        (1.0 - self.beta2 * self.beta2).max(0.0).sqrt()
    }

    pub fn battery_state(&self) -> PureState {
        let q = |a: f64, b: f64, th: f64| {
            PureState::new(1, DVector::from_vec(vec![C64::new(a, 0.0), C64::from_polar(b, th)]))
        };
        let q1 = q(self.alpha1(), self.beta1, self.theta1).expect("normalized qubit");
        let q2 = q(self.alpha2(), self.beta2, self.theta2).expect("normalized qubit");
        q1.kron(&q2).expect("two qubits")
    }
}

/// Charge at the first maximum `t = tau_d`:
/// `E0 [beta1 beta2 alpha1 alpha2 cos(theta1 - theta2) + (beta1^2 + beta2^2) / 2]`.
pub fn separable_max_charge(p: &SeparableParams, spec: &SystemSpec) -> f64 {
    let cross = p.beta1 * p.beta2 * p.alpha1() * p.alpha2() * (p.theta1 - p.theta2).cos();
    spec.cell_energy() * (cross + 0.5 * (p.beta1 * p.beta1 + p.beta2 * p.beta2))
}

/// Charge of a separable battery with an empty hub after evolving for `t`.
pub fn separable_charge_simulated(p: &SeparableParams, t: f64, spec: &SystemSpec) -> Result<f64> {
    one_cell(spec)?;
    let hs = HamiltonianSet::build(spec)?;
    let psi0 = p.battery_state().kron(&PureState::basis(1, 0)?)?;
    let psi = StaticEvolver::new(&hs.h_charging, &psi0)?.state_at(t);
    charge(&psi, &hs)
}

/// Phase-optimized separable maximum over a `grid_n x grid_n` grid on
/// `[0, 1]^2`.
#[derive(Clone, Debug, PartialEq)]
pub struct SeparableSurface {
    pub betas: Vec<f64>,
    /// `values[i][j]` is `C_max / E0` at `(betas[i], betas[j])`.
    pub values: Vec<Vec<f64>>,
    pub argmax: (usize, usize),
    pub max: f64,
    /// Grid points within `1e-9` of the maximum.
    pub near_max: Vec<(usize, usize)>,
    /// Largest closed-form vs simulation gap (units of `E0`) on the checked
    /// subsample.
    pub crosscheck_error: f64,
    pub crosscheck_points: usize,
}

pub fn separable_sweep(
    grid_n: usize,
    spec: &SystemSpec,
    n_check: usize,
    seed: u64,
) -> Result<SeparableSurface> {
    if grid_n < 2 {
        return Err(QbatError::param("grid", format!("must be at least 2, got {grid_n}")));
    }
    let betas: Vec<f64> = (0..grid_n).map(|k| k as f64 / (grid_n - 1) as f64).collect();
    let e0 = spec.cell_energy();
    let values: Vec<Vec<f64>> = betas
        .iter()
        .map(|&b1| {
            betas
                .iter()
                .map(|&b2| {
                    // cos = 1 maximizes since the cross coefficient is >= 0
                    let p = SeparableParams::new(b1, b2, 0.0, 0.0).expect("grid inside [0, 1]");
                    separable_max_charge(&p, spec) / e0
                })
                .collect()
        })
        .collect();
    let mut argmax = (0, 0);
    let mut max = f64::NEG_INFINITY;
    for (i, row) in values.iter().enumerate() {
        for (j, &v) in row.iter().enumerate() {
            if v > max {
                max = v;
                argmax = (i, j);
            }
        }
    }
    let near_max = values
        .iter()
        .enumerate()
        .flat_map(|(i, row)| {
            row.iter()
                .enumerate()
                .filter(move |(_, &v)| v >= max - 1e-9)
                .map(move |(j, _)| (i, j))
        })
        .collect();

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let picks: Vec<(usize, usize)> = (0..n_check)
        .map(|_| (rng.random_range(0..grid_n), rng.random_range(0..grid_n)))
        .collect();
    let hs = HamiltonianSet::build(spec)?;
    let eig = crate::qalg::eigh(&hs.h_charging)?;
    let u = eig.propagator(spec.discharge_time());
    let errors: Vec<f64> = picks
        .par_iter()
        .map(|&(i, j)| -> Result<f64> {
            let p = SeparableParams::new(betas[i], betas[j], 0.0, 0.0)?;
            let psi0 = p.battery_state().kron(&PureState::basis(1, 0)?)?;
            let psi = PureState::from_parts_unchecked(3, u.act(&psi0)?);
            Ok((charge(&psi, &hs)? / e0 - values[i][j]).abs())
        })
        .collect::<Result<_>>()?;
    Ok(SeparableSurface {
        betas,
        values,
        argmax,
        max,
        near_max,
        crosscheck_error: errors.iter().copied().fold(0.0, f64::max),
        crosscheck_points: errors.len(),
    })
}

/// Energy a fully charged separable battery `|11>` stores above its ground
/// state.
pub fn separable_full_energy(spec: &SystemSpec) -> Result<f64> {
    let h0b = crate::model::reference_hamiltonian(spec.omega, 2)?;
    pure_state_ergotropy(&PureState::from_bits(&[1, 1])?, &h0b)
}

/// One excited battery qubit coupled to an empty hub by a single XY term:
/// `2 omega sin^2(2 J t)`.
pub fn single_particle_baseline(t: f64, spec: &SystemSpec) -> f64 {
    let s = (2.0 * spec.j_coupling * t).sin();
    2.0 * spec.omega * s * s
}

/// Full transfer time of the single-particle baseline, `pi / (4 J)`.
pub fn single_particle_time(spec: &SystemSpec) -> f64 {
    std::f64::consts::PI / (4.0 * spec.j_coupling)
}

/// Simulated single-particle baseline on a two-qubit register (battery on
/// site 0, hub on site 1).
pub fn single_particle_simulated(t: f64, spec: &SystemSpec) -> Result<f64> {
    let h = xy_coupling(spec.j_coupling, 0, 1, 2)?;
    let psi = StaticEvolver::new(&h, &PureState::from_bits(&[1, 0])?)?.state_at(t);
    let hub = embed(&crate::model::qubit_energy(spec.omega), &[1], 2)?;
    Ok(expectation_real(&hub, &psi)? + spec.omega)
}

/// Trajectory of the single-particle baseline over `[0, 2 tau_sp]`.
pub fn single_particle_trajectory(spec: &SystemSpec, n_samples: usize) -> Result<TimeSeries> {
    let h = xy_coupling(spec.j_coupling, 0, 1, 2)?;
    let hub = embed(&crate::model::qubit_energy(spec.omega), &[1], 2)?;
    let h0_hub = hub.clone();
    let p_hat = crate::model::ec_operator(&h0_hub, &h)?;
    let psi0 = PureState::from_bits(&[1, 0])?;
    let ev = StaticEvolver::new(&h, &psi0)?;
    let mut ts = TimeSeries::with_capacity(n_samples);
    for t in uniform_times(2.0 * single_particle_time(spec), n_samples)? {
        let psi = ev.state_at(t);
        ts.push(t, expectation_real(&hub, &psi)? + spec.omega, expectation_real(&p_hat, &psi)?);
        ts.push_extra("closed_form_over_E0", single_particle_baseline(t, spec) / spec.cell_energy());
    }
    Ok(ts)
}

/// Per-cell action in a multi-cell discharge.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum CellAction {
    Hold,
    Half,
    Full,
}

impl CellAction {
    pub fn gate(&self) -> Option<SwitchGate> {
        match self {
            CellAction::Hold => None,
            CellAction::Half => Some(SwitchGate::HalfOnQubit1),
            CellAction::Full => Some(SwitchGate::FullOnQubit1),
        }
    }

    pub fn symbol(&self) -> &'static str {
        match self {
            CellAction::Hold => "h",
            CellAction::Half => "H",
            CellAction::Full => "f",
        }
    }
}

impl FromStr for CellAction {
    type Err = QbatError;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "h" | "hold" => Ok(CellAction::Hold),
            "H" | "half" => Ok(CellAction::Half),
            "f" | "F" | "full" => Ok(CellAction::Full),
            other => Err(QbatError::param(
                "plan",
                format!("unknown cell action {other:?} (use h, H or f)"),
            )),
        }
    }
}

/// Actions for each of `n_cells` independent Bell cells.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct NCellPlan {
    actions: Vec<CellAction>,
}

impl NCellPlan {
    pub fn new(actions: Vec<CellAction>) -> Result<Self> {
        if actions.is_empty() {
            return Err(QbatError::param("plan", "needs at least one cell"));
        }
        Ok(NCellPlan { actions })
    }

    pub fn n_cells(&self) -> usize {
        self.actions.len()
    }

    pub fn actions(&self) -> &[CellAction] {
        &self.actions
    }
}

impl FromStr for NCellPlan {
    type Err = QbatError;

    fn from_str(s: &str) -> Result<Self> {
        let actions = s
            .split(',')
            .filter(|p| !p.trim().is_empty())
            .map(str::parse)
            .collect::<Result<Vec<_>>>()?;
        NCellPlan::new(actions)
    }
}

/// Energy quantum of a multi-cell battery, `E0 / 2`.
pub fn energy_quantum(spec: &SystemSpec) -> f64 {
    0.5 * spec.cell_energy()
}

/// Per-cell and total charge at `tau_d`.
#[derive(Clone, Debug, PartialEq)]
pub struct NCellEnergy {
    pub total: f64,
    pub per_cell: Vec<f64>,
}

fn cell_initial_state(action: CellAction) -> Result<PureState> {
    let psi = BellLabel::SINGLET.with_empty_hub();
    match action.gate() {
        Some(g) => switch_gate(g, &psi),
        None => Ok(psi),
    }
}

/// Runs every cell as an independent one-cell register to `tau_d`.
pub fn ncell_plan_energy(plan: &NCellPlan, spec: &SystemSpec) -> Result<NCellEnergy> {
    let cell = SystemSpec::new(spec.omega, spec.j_coupling)?;
    let hs = HamiltonianSet::build(&cell)?;
    let per_cell = plan
        .actions
        .iter()
        .map(|&a| {
            let psi0 = cell_initial_state(a)?;
            let psi = StaticEvolver::new(&hs.h_charging, &psi0)?.state_at(cell.discharge_time());
            charge(&psi, &hs)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(NCellEnergy {
        total: per_cell.iter().sum(),
        per_cell,
    })
}

/// Summed charge and current of all cells over `[0, 2 tau_d]`; one extra
/// channel per cell with its charge over `E0`.
pub fn ncell_trajectory(plan: &NCellPlan, spec: &SystemSpec, n_samples: usize) -> Result<TimeSeries> {
    let cell = SystemSpec::new(spec.omega, spec.j_coupling)?;
    let hs = HamiltonianSet::build(&cell)?;
    let p_hat = hs.ec_operator()?;
    let runs = plan
        .actions
        .iter()
        .map(|&a| {
            sample_trajectory(
                &hs.h_charging,
                &cell_initial_state(a)?,
                2.0 * cell.discharge_time(),
                n_samples,
                &hs,
                &p_hat,
            )
        })
        .collect::<Result<Vec<_>>>()?;
    let mut ts = TimeSeries::with_capacity(n_samples);
    let width = plan.n_cells().to_string().len();
    for k in 0..n_samples {
        let c: f64 = runs.iter().map(|r| r.charge[k]).sum();
        let p: f64 = runs.iter().map(|r| r.ec[k]).sum();
        ts.push(runs[0].times[k], c, p);
        for (idx, r) in runs.iter().enumerate() {
            ts.push_extra(
                &format!("cell{:0width$}_over_E0", idx + 1),
                r.charge[k] / cell.cell_energy(),
            );
        }
    }
    Ok(ts)
}

/// Compares a joint simulation of all cells with the product of independent
/// cell simulations at time `t`. Returns the largest amplitude difference
/// and the largest per-hub charge difference.
pub fn ncell_joint_check(plan: &NCellPlan, spec: &SystemSpec, t: f64) -> Result<(f64, f64)> {
    let joint_spec = SystemSpec::with_cells(spec.omega, spec.j_coupling, plan.n_cells())?;
    let joint_hs = HamiltonianSet::build(&joint_spec)?;
    let cell = SystemSpec::new(spec.omega, spec.j_coupling)?;
    let cell_hs = HamiltonianSet::build(&cell)?;

    let mut psi0: Option<PureState> = None;
    let mut product: Option<PureState> = None;
    let mut cell_charges = Vec::new();
    for &a in &plan.actions {
        let init = cell_initial_state(a)?;
        let evolved = StaticEvolver::new(&cell_hs.h_charging, &init)?.state_at(t);
        cell_charges.push(charge(&evolved, &cell_hs)?);
        psi0 = Some(match psi0 {
            None => init,
            Some(p) => p.kron(&init)?,
        });
        product = Some(match product {
            None => evolved,
            Some(p) => p.kron(&evolved)?,
        });
    }
    let psi0 = psi0.expect("plan is non-empty");
    let product = product.expect("plan is non-empty");
    let joint = StaticEvolver::new(&joint_hs.h_charging, &psi0)?.state_at(t);
    let amp_diff = (joint.amplitudes() - product.amplitudes())
        .iter()
        .fold(0.0_f64, |m, z| m.max(z.norm()));
    let hubs = hub_charges(&joint, &joint_spec)?;
    let charge_diff = hubs
        .iter()
        .zip(&cell_charges)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    Ok((amp_diff, charge_diff))
}
