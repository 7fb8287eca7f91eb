//! Adiabatic stable discharge of a singlet cell:
//! `H(s) = (1 - f) H_i + (1 - f) f H_m + f H_f` on `B1, B2, A`, driven from
//! `|singlet>|0>` to `|00>|1>` over a total time `tau`.

use std::fmt;
use std::str::FromStr;

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;

use crate::dynamics::{evolve_timedep, evolve_timedep_observed, SteppingConfig};
use crate::error::{QbatError, Result};
use crate::model::{charge, ec_operator, xy_coupling, HamiltonianSet, SystemSpec};
use crate::protocols::BellLabel;
use crate::qalg::{
    commutator, eigh_matrix, embed, expectation_real, pauli, two_site, Operator, Pauli, PureState,
    C64, ZERO,
};
use crate::series::{Cell, Table, TimeSeries};

/// Interpolation function `f(s)` with `f(0) = 0` and `f(1) = 1`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Schedule {
    Linear,
    SinSquared,
    Smoothstep,
}

impl Schedule {
    pub const ALL: [Schedule; 3] = [Schedule::Linear, Schedule::SinSquared, Schedule::Smoothstep];

    pub fn f(&self, s: f64) -> f64 {
        match self {
            Schedule::Linear => s,
            Schedule::SinSquared => {
                let x = (std::f64::consts::FRAC_PI_2 * s).sin();
                x * x
            }
            Schedule::Smoothstep => s * s * (3.0 - 2.0 * s),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Schedule::Linear => "linear",
            Schedule::SinSquared => "sin2",
            Schedule::Smoothstep => "smoothstep",
        }
    }
}

impl fmt::Display for Schedule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Schedule {
    type Err = QbatError;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "linear" => Ok(Schedule::Linear),
            "sin2" | "sin-squared" | "sinsquared" => Ok(Schedule::SinSquared),
            "smoothstep" | "cubic" => Ok(Schedule::Smoothstep),
            other => Err(QbatError::param(
                "schedule",
                format!("unknown schedule {other:?} (use linear, sin2 or smoothstep)"),
            )),
        }
    }
}

/// Parameters of one adiabatic run. `tau` is a time; `J tau` is the
/// dimensionless run length.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AdiabaticSpec {
    pub j_coupling: f64,
    pub tau: f64,
    pub schedule: Schedule,
    pub stepping: SteppingConfig,
}

impl AdiabaticSpec {
    pub fn new(j_coupling: f64, tau: f64, schedule: Schedule, stepping: SteppingConfig) -> Result<Self> {
        if !(j_coupling > 0.0 && j_coupling.is_finite()) {
            return Err(QbatError::param("j_coupling", format!("must be positive, got {j_coupling}")));
        }
        if !(tau > 0.0 && tau.is_finite()) {
            return Err(QbatError::param("tau", format!("must be positive, got {tau}")));
        }
        Ok(AdiabaticSpec {
            j_coupling,
            tau,
            schedule,
            stepping,
        })
    }

    /// Spec with run length given as `J tau`.
    pub fn from_jtau(j_coupling: f64, jtau: f64, schedule: Schedule) -> Result<Self> {
        Self::new(j_coupling, jtau / j_coupling, schedule, SteppingConfig::default())
    }

    pub fn jtau(&self) -> f64 {
        self.j_coupling * self.tau
    }

    pub fn n_steps(&self) -> usize {
        self.stepping.steps_for(self.jtau())
    }
}

/// The three fixed Hamiltonians of the interpolation.
#[derive(Clone, Debug)]
pub struct InterpolationTerms {
    pub h_i: Operator,
    pub h_m: Operator,
    pub h_f: Operator,
}

impl InterpolationTerms {
    pub fn new(j: f64) -> Result<Self> {
        let h_i = xy_coupling(j, 0, 1, 3)?;
        let h_m = &h_i + &xy_coupling(j, 1, 2, 3)?;
        let zz1 = two_site(Pauli::Z, 0, Pauli::Z, 2, 3)?;
        let zz2 = two_site(Pauli::Z, 1, Pauli::Z, 2, 3)?;
        let h_f = (&zz1 + &zz2).scaled(j);
        Ok(InterpolationTerms { h_i, h_m, h_f })
    }

    pub fn at(&self, schedule: Schedule, s: f64) -> Result<Operator> {
        if !(0.0..=1.0).contains(&s) {
            return Err(QbatError::param("s", format!("must lie in [0, 1], got {s}")));
        }
        let f = schedule.f(s);
        let a = 1.0 - f;
        let (ci, cm, cf) = (a, a * f, f);
        let m = self
            .h_i
            .matrix()
            .zip_zip_map(self.h_m.matrix(), self.h_f.matrix(), |x, y, z| {
                x * ci + y * cm + z * cf
            });
        Ok(Operator::hermitian_unchecked(3, m))
    }
}

/// `H(s)` for the spec's schedule.
pub fn build_ht(spec: &AdiabaticSpec, s: f64) -> Result<Operator> {
    InterpolationTerms::new(spec.j_coupling)?.at(spec.schedule, s)
}

/// `Z (x) Z (x) Z` on `B1, B2, A`.
pub fn parity_operator() -> Operator {
    let z = pauli(Pauli::Z);
    z.kron(&z).and_then(|zz| zz.kron(&z)).expect("three qubits")
}

/// Basis indices with an odd (`true`) or even number of excitations.
pub fn parity_sector(n_qubits: usize, odd: bool) -> Vec<usize> {
    (0..1usize << n_qubits)
        .filter(|i| (i.count_ones() % 2 == 1) == odd)
        .collect()
}

pub fn initial_state() -> PureState {
    BellLabel::SINGLET.with_empty_hub()
}

/// `|00>|1>`.
pub fn target_state() -> PureState {
    PureState::from_bits(&[0, 0, 1]).expect("basis state")
}

/// `|11>|0>`, degenerate with the target at `s = 1` but of opposite parity.
pub fn forbidden_state() -> PureState {
    PureState::from_bits(&[1, 1, 0]).expect("basis state")
}

#[derive(Clone, Debug, PartialEq)]
pub struct ParityReport {
    /// Largest `max |[H(s), Pi]|` over the sampled `s`.
    pub max_commutator: f64,
    pub samples: usize,
    pub parity_initial: f64,
    pub parity_target: f64,
    pub parity_forbidden: f64,
}

impl ParityReport {
    pub fn ok(&self, tol: f64) -> bool {
        self.max_commutator <= tol
            && (self.parity_initial - self.parity_target).abs() <= tol
            && (self.parity_initial + self.parity_forbidden).abs() <= tol
    }
}

/// Checks `[H(s), Pi] = 0` at `n_samples` uniform points of `[0, 1]` and
/// reports the parities of the initial, target and forbidden states.
pub fn parity_check(spec: &AdiabaticSpec, n_samples: usize) -> Result<ParityReport> {
    if n_samples < 2 {
        return Err(QbatError::param("n_samples", format!("must be at least 2, got {n_samples}")));
    }
    let terms = InterpolationTerms::new(spec.j_coupling)?;
    let pi = parity_operator();
    let mut worst = 0.0_f64;
    for k in 0..n_samples {
        let s = k as f64 / (n_samples - 1) as f64;
        let h = terms.at(spec.schedule, s)?;
        worst = worst.max(commutator(&h, &pi)?.max_abs());
    }
    Ok(ParityReport {
        max_commutator: worst,
        samples: n_samples,
        parity_initial: expectation_real(&pi, &initial_state())?,
        parity_target: expectation_real(&pi, &target_state())?,
        parity_forbidden: expectation_real(&pi, &forbidden_state())?,
    })
}

/// Summary of one adiabatic discharge.
#[derive(Clone, Debug, PartialEq)]
pub struct DischargeReport {
    pub jtau: f64,
    pub schedule: Schedule,
    pub final_charge: f64,
    /// `|<00 1|psi(tau)>|^2`.
    pub fidelity_target: f64,
    /// `|<11 0|psi(tau)>|^2`.
    pub leakage_forbidden: f64,
    /// Smallest gap above the lowest odd-parity level along the path.
    pub min_gap_sector: f64,
    /// Largest `|<P(t)>|` over the last tenth of the run.
    pub ec_tail: f64,
    /// Largest parity drift `|<Pi>(t) - <Pi>(0)|` along the run.
    pub parity_drift: f64,
    /// Change of `fidelity_target` when the step count is doubled; `None`
    /// when the check was skipped.
    pub convergence_delta: Option<f64>,
}

/// Smallest gap between the lowest and next level inside a block.
fn sector_gap(h: &DMatrix<C64>, sector: &[usize]) -> f64 {
    let sub = DMatrix::from_fn(sector.len(), sector.len(), |r, c| h[(sector[r], sector[c])]);
    let (vals, _) = eigh_matrix(&sub);
    vals[1] - vals[0]
}

/// Minimum over `n_grid` uniform `s` of the gap above the lowest odd-parity
/// level. The path, and so the gap, does not depend on `tau`.
pub fn min_sector_gap(j_coupling: f64, schedule: Schedule, n_grid: usize) -> Result<f64> {
    let terms = InterpolationTerms::new(j_coupling)?;
    min_gap_on_grid(&terms, schedule, n_grid, &parity_sector(3, true))
}

fn min_gap_on_grid(terms: &InterpolationTerms, schedule: Schedule, n_grid: usize, sector: &[usize]) -> Result<f64> {
    if n_grid < 2 {
        return Err(QbatError::param("n_grid", format!("must be at least 2, got {n_grid}")));
    }
    let mut gap = f64::INFINITY;
    for k in 0..n_grid {
        let s = k as f64 / (n_grid - 1) as f64;
        gap = gap.min(sector_gap(terms.at(schedule, s)?.matrix(), sector));
    }
    Ok(gap)
}

const GAP_GRID: usize = 2001;

struct Discharger {
    terms: InterpolationTerms,
    hs: HamiltonianSet,
    pi: Operator,
    odd: Vec<usize>,
}

impl Discharger {
    fn new(j: f64, omega: f64) -> Result<Self> {
        Ok(Discharger {
            terms: InterpolationTerms::new(j)?,
            hs: HamiltonianSet::build(&SystemSpec::new(omega, j)?)?,
            pi: parity_operator(),
            odd: parity_sector(3, true),
        })
    }

    fn run(
        &self,
        jtau: f64,
        j: f64,
        schedule: Schedule,
        stepping: SteppingConfig,
        check_convergence: bool,
    ) -> Result<DischargeReport> {
        let psi0 = initial_state();
        let tau = jtau / j;
        let n = stepping.steps_for(jtau);
        let parity0 = expectation_real(&self.pi, &psi0)?;
        let mut ec_tail = 0.0_f64;
        let mut parity_drift = 0.0_f64;
        let tail_from = n - n / 10;
        let fin = evolve_timedep_observed(
            |s| self.terms.at(schedule, s),
            &psi0,
            tau,
            n,
            |info, psi| {
                parity_drift = parity_drift.max((expectation_real(&self.pi, psi)? - parity0).abs());
                if info.step >= tail_from {
                    let h = self.terms.at(schedule, info.s)?;
                    let p = ec_operator(&self.hs.h0_hub, &h)?;
                    ec_tail = ec_tail.max(expectation_real(&p, psi)?.abs());
                }
                Ok(())
            },
        )?;
        if tau == 0.0 {
            // sudden limit: the run is the identity
            let h = self.terms.at(schedule, 0.0)?;
            let p = ec_operator(&self.hs.h0_hub, &h)?;
            ec_tail = expectation_real(&p, &psi0)?.abs();
        }
        let fidelity_target = fin.fidelity(&target_state());
        let convergence_delta = if !check_convergence {
            None
        } else if tau == 0.0 {
            Some(0.0)
        } else {
            let fine = evolve_timedep(
                |s| self.terms.at(schedule, s),
                &psi0,
                tau,
                stepping.doubled().steps_for(jtau),
            )?;
            Some((fine.fidelity(&target_state()) - fidelity_target).abs())
        };
        Ok(DischargeReport {
            jtau,
            schedule,
            final_charge: charge(&fin, &self.hs)?,
            fidelity_target,
            leakage_forbidden: fin.fidelity(&forbidden_state()),
            min_gap_sector: min_gap_on_grid(&self.terms, schedule, GAP_GRID, &self.odd)?,
            ec_tail,
            parity_drift,
            convergence_delta,
        })
    }
}

/// Evolves `|singlet>|0>` under `H(t / tau)` and summarizes the end state,
/// including a convergence check against a run with doubled steps.
pub fn run_discharge(spec: &AdiabaticSpec, omega: f64) -> Result<DischargeReport> {
    Discharger::new(spec.j_coupling, omega)?.run(
        spec.jtau(),
        spec.j_coupling,
        spec.schedule,
        spec.stepping,
        true,
    )
}

/// One sweep point.
#[derive(Clone, Debug, PartialEq)]
pub struct SweepRow {
    pub report: DischargeReport,
    /// `final_charge / (2 omega)`.
    pub ratio: f64,
}

/// Runs every schedule at every `J tau` (zero allowed: the sudden limit).
/// Rows are ordered by input `J tau`, then by [`Schedule::ALL`].
pub fn sweep_tau(
    j_coupling: f64,
    stepping: SteppingConfig,
    jtau_values: &[f64],
    omega: f64,
    check_convergence: bool,
) -> Result<Vec<SweepRow>> {
    if jtau_values.is_empty() {
        return Err(QbatError::param("jtau", "needs at least one value"));
    }
    for &x in jtau_values {
        if !(x >= 0.0 && x.is_finite()) {
            return Err(QbatError::param("jtau", format!("must be non-negative, got {x}")));
        }
    }
    let d = Discharger::new(j_coupling, omega)?;
    let jobs: Vec<(f64, Schedule)> = jtau_values
        .iter()
        .flat_map(|&x| Schedule::ALL.into_iter().map(move |s| (x, s)))
        .collect();
    jobs.par_iter()
        .map(|&(x, sched)| {
            let report = d.run(x, j_coupling, sched, stepping, check_convergence)?;
            let ratio = report.final_charge / (2.0 * omega);
            Ok(SweepRow { report, ratio })
        })
        .collect()
}

/// Smallest swept `J tau` from which every row reaches `level` and keeps the
/// current tail at or below `ec_tol`.
pub fn saturation_threshold(rows: &[SweepRow], level: f64, ec_tol: f64) -> Option<f64> {
    let mut grid: Vec<f64> = rows.iter().map(|r| r.report.jtau).collect();
    grid.sort_by(f64::total_cmp);
    grid.dedup();
    let good = |x: f64| {
        rows.iter()
            .filter(|r| r.report.jtau == x)
            .all(|r| r.ratio >= level && r.report.ec_tail <= ec_tol)
    };
    let mut threshold = None;
    for &x in grid.iter().rev() {
        if good(x) {
            threshold = Some(x);
        } else {
            break;
        }
    }
    threshold
}

pub fn sweep_table(rows: &[SweepRow], omega: f64, j: f64) -> Table {
    let mut t = Table::new(&[
        "tau_J",
        "schedule",
        "fidelity_target",
        "leakage_forbidden",
        "min_gap_hbar_J",
        "ec_tail_hbar_omega_J",
        "step_doubling_change",
        "final_charge_over_E0",
    ]);
    for r in rows {
        t.push(vec![
            Cell::Num(r.report.jtau),
            Cell::Text(r.report.schedule.name().to_string()),
            Cell::Num(r.report.fidelity_target),
            Cell::Num(r.report.leakage_forbidden),
            Cell::Num(r.report.min_gap_sector / j),
            Cell::Num(r.report.ec_tail / (omega * j)),
            r.report
                .convergence_delta
                .map_or(Cell::Missing, Cell::Num),
            Cell::Num(r.ratio),
        ]);
    }
    t
}

/// Decomposition of the transported state over the occupied eigenbranches.
#[derive(Clone, Debug, PartialEq)]
pub struct AdiabaticDecomposition {
    /// Initial amplitude of each branch (its norm; phases live in the
    /// transported vectors).
    pub coefficients: Vec<C64>,
    /// Branch energies at the final sample.
    pub energies: Vec<f64>,
    /// Dynamic phases `-int E dt`.
    pub dynamic_phases: Vec<f64>,
    /// Discrete parallel-transport phase of each non-degenerate branch
    /// relative to a gauge-fixed eigenvector (zero for degenerate branches).
    pub geometric_phases: Vec<f64>,
    pub dims: Vec<usize>,
}

impl AdiabaticDecomposition {
    pub fn total_weight(&self) -> f64 {
        self.coefficients.iter().map(|c| c.norm_sqr()).sum()
    }

    pub fn phase_difference(&self, n: usize, m: usize) -> f64 {
        (self.dynamic_phases[n] + self.geometric_phases[n])
            - (self.dynamic_phases[m] + self.geometric_phases[m])
    }

    /// `E_m - E_n`.
    pub fn gap(&self, m: usize, n: usize) -> f64 {
        self.energies[m] - self.energies[n]
    }
}

/// Exact and adiabatic energy currents along a path.
#[derive(Clone, Debug)]
pub struct AdiabaticEc {
    /// `charge`, exact `ec`, and the channels `ec_adiabatic_hbar_omega_J`,
    /// `fidelity_adiabatic`.
    pub series: TimeSeries,
    pub decomposition: AdiabaticDecomposition,
}

/// Eigenspace cluster with its orthonormal basis embedded in the full space.
struct Cluster {
    energy: f64,
    basis: DMatrix<C64>,
}

const CLUSTER_TOL: f64 = 1e-9;
const OCCUPIED_WEIGHT: f64 = 1e-14;

fn clusters(h: &Operator, sectors: &[Vec<usize>]) -> Vec<Cluster> {
    let m = h.matrix();
    let dim = h.dim();
    let mut out = Vec::new();
    for sector in sectors {
        let sub = DMatrix::from_fn(sector.len(), sector.len(), |r, c| m[(sector[r], sector[c])]);
        let (vals, vecs) = eigh_matrix(&sub);
        let mut start = 0;
        for k in 1..=vals.len() {
            if k == vals.len() || vals[k] - vals[k - 1] > CLUSTER_TOL * (1.0 + vals[k].abs()) {
                let len = k - start;
                let mut basis = DMatrix::from_element(dim, len, ZERO);
                for c in 0..len {
                    for (r, &row) in sector.iter().enumerate() {
                        basis[(row, c)] = vecs[(r, start + c)];
                    }
                }
                out.push(Cluster {
                    energy: vals[start..k].iter().sum::<f64>() / len as f64,
                    basis,
                });
                start = k;
            }
        }
    }
    out
}

fn project(basis: &DMatrix<C64>, v: &DVector<C64>) -> DVector<C64> {
    basis * (basis.adjoint() * v)
}

/// Phase of `v` against the cluster's single eigenvector, gauge-fixed so
/// that its largest component is real and positive.
fn gauge_phase(basis: &DMatrix<C64>, v: &DVector<C64>) -> f64 {
    let u = basis.column(0);
    let (imax, _) = u
        .iter()
        .enumerate()
        .fold((0, 0.0), |(bi, bn), (i, z)| if z.norm() > bn + 1e-12 { (i, z.norm()) } else { (bi, bn) });
    let fix = u[imax].conj() / u[imax].norm();
    (u.dotc(v) * fix.conj()).arg()
}

struct Branch {
    phi: DVector<C64>,
    norm: f64,
    energy: f64,
    dynamic: f64,
    geometric0: f64,
    geometric: f64,
    dim: usize,
}

/// Adiabatic prediction `(1/i) sum_{k != l} e^{i(theta_k - theta_l)}
/// (E_k - E_l) <phi_l|H0_hub|phi_k>` from transported branch vectors.
fn adiabatic_current(branches: &[Branch], h0_hub: &DMatrix<C64>) -> f64 {
    let mut acc = 0.0;
    for k in 0..branches.len() {
        let a_phi_k = h0_hub * &branches[k].phi;
        for l in 0..branches.len() {
            if l == k {
                continue;
            }
            let de = branches[k].energy - branches[l].energy;
            let phase = C64::from_polar(1.0, branches[k].dynamic - branches[l].dynamic);
            let y = phase * de * branches[l].phi.dotc(&a_phi_k);
            // (1/i) y
            acc += y.im;
        }
    }
    acc
}

fn adiabatic_state(branches: &[Branch], dim: usize) -> DVector<C64> {
    branches.iter().fold(DVector::from_element(dim, ZERO), |acc, b| {
        acc + &b.phi * C64::from_polar(1.0, b.dynamic)
    })
}

/// Evolves `psi0` exactly under `H(s)` (`s = t / tau`) and, alongside, the
/// adiabatic approximation built by transporting each occupied eigenspace of
/// `H(0)` with its projector. `sectors` partitions the basis into blocks left
/// invariant by every `H(s)`; eigenspaces are resolved inside each block.
/// `charge_offset` is subtracted from `<h0_hub>` to give the charge.
#[allow(clippy::too_many_arguments)]
pub fn adiabatic_ec_path<F>(
    h_of: F,
    h0_hub: &Operator,
    charge_offset: f64,
    psi0: &PureState,
    tau: f64,
    n_steps: usize,
    sectors: &[Vec<usize>],
    n_samples: usize,
) -> Result<AdiabaticEc>
where
    F: Fn(f64) -> Result<Operator>,
{
    if !(tau > 0.0 && tau.is_finite()) {
        return Err(QbatError::param("tau", format!("must be positive, got {tau}")));
    }
    if n_samples < 2 {
        return Err(QbatError::param("n_samples", format!("must be at least 2, got {n_samples}")));
    }
    let dim = psi0.dim();
    let all: Vec<Vec<usize>> = vec![(0..dim).collect()];
    let sectors = if sectors.is_empty() { &all[..] } else { sectors };

    let h0 = h_of(0.0)?;
    let mut branches: Vec<Branch> = clusters(&h0, sectors)
        .into_iter()
        .filter_map(|c| {
            let phi = project(&c.basis, psi0.amplitudes());
            let w = phi.norm_squared();
            (w > OCCUPIED_WEIGHT).then(|| {
                let g = if c.basis.ncols() == 1 { gauge_phase(&c.basis, &phi) } else { 0.0 };
                Branch {
                    norm: w.sqrt(),
                    phi,
                    energy: c.energy,
                    dynamic: 0.0,
                    geometric0: g,
                    geometric: g,
                    dim: c.basis.ncols(),
                }
            })
        })
        .collect();
    let coefficients: Vec<C64> = branches.iter().map(|b| C64::new(b.norm, 0.0)).collect();

    let stride = (n_steps / (n_samples - 1)).max(1);
    let dt = tau / n_steps as f64;
    let mut ts = TimeSeries::with_capacity(n_samples + 1);
    let record = |ts: &mut TimeSeries, t: f64, h: &Operator, psi: &PureState, branches: &[Branch]| -> Result<()> {
        let p = ec_operator(h0_hub, h)?;
        ts.push(t, expectation_real(h0_hub, psi)? - charge_offset, expectation_real(&p, psi)?);
        ts.push_extra("ec_adiabatic_hbar_omega_J", adiabatic_current(branches, h0_hub.matrix()));
        let ad = adiabatic_state(branches, dim);
        ts.push_extra("fidelity_adiabatic", ad.dotc(psi.amplitudes()).norm_sqr());
        Ok(())
    };
    record(&mut ts, 0.0, &h0, psi0, &branches)?;

    evolve_timedep_observed(&h_of, psi0, tau, n_steps, |info, psi| {
        let h = h_of(info.s)?;
        let cl = clusters(&h, sectors);
        for b in branches.iter_mut() {
            let (best, weight) = cl
                .iter()
                .enumerate()
                .map(|(i, c)| (i, (c.basis.adjoint() * &b.phi).norm_squared() / (b.norm * b.norm)))
                .fold((0, -1.0), |acc, x| if x.1 > acc.1 { x } else { acc });
            if weight < 0.5 {
                return Err(QbatError::TrackingFailure { s: info.s, weight });
            }
            let c = &cl[best];
            let moved = project(&c.basis, &b.phi);
            b.phi = &moved * C64::new(b.norm / moved.norm(), 0.0);
            b.dynamic -= 0.5 * (b.energy + c.energy) * dt;
            b.energy = c.energy;
            b.dim = c.basis.ncols();
            if b.dim == 1 {
                b.geometric = gauge_phase(&c.basis, &b.phi);
            }
        }
        if (info.step + 1) % stride == 0 || info.step + 1 == n_steps {
            record(&mut ts, info.t, &h, psi, &branches)?;
        }
        Ok(())
    })?;

    let decomposition = AdiabaticDecomposition {
        coefficients,
        energies: branches.iter().map(|b| b.energy).collect(),
        dynamic_phases: branches.iter().map(|b| b.dynamic).collect(),
        geometric_phases: branches
            .iter()
            .map(|b| if b.dim == 1 { b.geometric - b.geometric0 } else { 0.0 })
            .collect(),
        dims: branches.iter().map(|b| b.dim).collect(),
    };
    Ok(AdiabaticEc {
        series: ts,
        decomposition,
    })
}

/// [`adiabatic_ec_path`] for the interpolated discharge Hamiltonian, with
/// eigenspaces resolved inside the two parity sectors.
pub fn adiabatic_ec(spec: &AdiabaticSpec, psi0: &PureState, omega: f64, n_samples: usize) -> Result<AdiabaticEc> {
    let terms = InterpolationTerms::new(spec.j_coupling)?;
    let hs = HamiltonianSet::build(&SystemSpec::new(omega, spec.j_coupling)?)?;
    let sectors = [parity_sector(3, true), parity_sector(3, false)];
    adiabatic_ec_path(
        |s| terms.at(spec.schedule, s),
        &hs.h0_hub,
        hs.e_empty,
        psi0,
        spec.tau,
        spec.n_steps(),
        &sectors,
        n_samples,
    )
}

/// Direct evaluation of the current carried by a two-level superposition
/// `a |u> + b |v>` of eigenvectors of a constant Hamiltonian:
/// `2 Im[a conj(b) e^{-i(E_u - E_v)t} (E_u - E_v) <v|A|u>]`.
#[allow(clippy::too_many_arguments)]
pub fn two_level_current(
    a: C64,
    b: C64,
    u: &DVector<C64>,
    v: &DVector<C64>,
    e_u: f64,
    e_v: f64,
    h0_hub: &Operator,
    t: f64,
) -> f64 {
    let de = e_u - e_v;
    let x = a * b.conj() * C64::from_polar(1.0, -de * t) * de * v.dotc(&(h0_hub.matrix() * u));
    2.0 * x.im
}

/// Hub bare energy for the three-qubit register, used by callers that need
/// the measurement operator without a full [`HamiltonianSet`].
pub fn hub_energy(omega: f64) -> Result<Operator> {
    embed(&crate::model::qubit_energy(omega), &[2], 3)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec(jtau: f64, sched: Schedule) -> AdiabaticSpec {
        AdiabaticSpec::from_jtau(1.0, jtau, sched).unwrap()
    }

    #[test]
    fn schedule_endpoints_exact() {
        for s in Schedule::ALL {
            assert_eq!(s.f(0.0), 0.0);
            assert_eq!(s.f(1.0), 1.0);
        }
        assert_eq!("sin2".parse::<Schedule>().unwrap(), Schedule::SinSquared);
        assert!("cosine".parse::<Schedule>().is_err());
    }

    #[test]
    fn endpoints_are_exact_hamiltonians() {
        let terms = InterpolationTerms::new(1.3).unwrap();
        for sched in Schedule::ALL {
            assert_eq!(terms.at(sched, 0.0).unwrap().max_abs_diff(&terms.h_i), 0.0);
            assert_eq!(terms.at(sched, 1.0).unwrap().max_abs_diff(&terms.h_f), 0.0);
        }
        assert!(terms.at(Schedule::Linear, 1.01).is_err());
        assert!(terms.at(Schedule::Linear, -0.1).is_err());
    }

    #[test]
    fn final_ground_space() {
        let terms = InterpolationTerms::new(1.0).unwrap();
        let e = crate::qalg::eigh(&terms.h_f).unwrap();
        assert!((e.values[0] + 2.0).abs() < 1e-12 && (e.values[1] + 2.0).abs() < 1e-12);
        assert!(e.values[2] > -2.0 + 1e-6);
        let ground = e.eigenspaces(1e-9).into_iter().next().unwrap();
        let p = e.projector(&ground);
        for st in [target_state(), forbidden_state()] {
            let v = &p * st.amplitudes();
            assert!((v - st.amplitudes()).norm() < 1e-12);
        }
    }

    #[test]
    fn initial_state_is_ground_of_initial_hamiltonian() {
        let terms = InterpolationTerms::new(1.0).unwrap();
        let psi = initial_state();
        assert!((expectation_real(&terms.h_i, &psi).unwrap() + 2.0).abs() < 1e-14);
        let e = crate::qalg::eigh(&terms.h_i).unwrap();
        assert!((e.values[0] + 2.0).abs() < 1e-12);
    }

    #[test]
    fn parity_commutes_everywhere() {
        let r = parity_check(&spec(10.0, Schedule::SinSquared), 33).unwrap();
        assert!(r.ok(1e-12));
        assert!((r.parity_initial + 1.0).abs() < 1e-12);
        let pi = parity_operator();
        assert_eq!((&pi * &pi).max_abs_diff(&Operator::identity(3)), 0.0);
    }

    #[test]
    fn sudden_limit() {
        let rows = sweep_tau(1.0, SteppingConfig::default(), &[0.0], 1.0, true).unwrap();
        assert_eq!(rows.len(), 3);
        for r in rows {
            assert!(r.ratio.abs() < 1e-9);
            assert!(r.report.fidelity_target < 1e-15);
        }
    }

    #[test]
    fn slow_run_discharges_fully() {
        let r = run_discharge(&spec(120.0, Schedule::SinSquared), 1.0).unwrap();
        assert!(r.final_charge >= 0.999 * 2.0, "{r:?}");
        assert!(r.leakage_forbidden <= 1e-10);
        assert!(r.fidelity_target + r.leakage_forbidden <= 1.0 + 1e-9);
        assert!(r.min_gap_sector > 0.0);
        assert!(r.parity_drift <= 1e-10);
        assert!(r.convergence_delta.unwrap() <= 1e-8);
    }

    #[test]
    fn single_branch_prediction_is_zero() {
        let res = adiabatic_ec(&spec(20.0, Schedule::Linear), &initial_state(), 1.0, 65).unwrap();
        let pred = res.series.channel("ec_adiabatic_hbar_omega_J").unwrap();
        assert!(pred.iter().all(|&x| x == 0.0));
        assert_eq!(res.decomposition.coefficients.len(), 1);
        assert!((res.decomposition.total_weight() - 1.0).abs() < 1e-10);
        let fid = res.series.channel("fidelity_adiabatic").unwrap();
        assert!(*fid.last().unwrap() > 0.95, "{:?}", fid.last());
    }

    #[test]
    fn two_branch_prediction_on_a_constant_path() {
        let sp = SystemSpec::new(0.9, 1.0).unwrap();
        let hs = HamiltonianSet::build(&sp).unwrap();
        let h = hs.h_charging.clone();
        // the two bright single-excitation levels +-2 sqrt 2 J, resolved in
        // the odd sector where they are non-degenerate
        let odd = parity_sector(3, true);
        let sub = DMatrix::from_fn(4, 4, |r, c| h.matrix()[(odd[r], odd[c])]);
        let (vals, vecs) = eigh_matrix(&sub);
        let lift = |k: usize| {
            let mut v = DVector::from_element(8, ZERO);
            for (r, &row) in odd.iter().enumerate() {
                v[row] = vecs[(r, k)];
            }
            v
        };
        let (eu, u) = (vals[0], lift(0));
        let (ev, v) = (vals[3], lift(3));
        assert!((eu + 2.0 * 2f64.sqrt()).abs() < 1e-12 && (ev - 2.0 * 2f64.sqrt()).abs() < 1e-12);
        let (a, b) = (C64::new(0.6, 0.0), C64::new(0.0, 0.8));
        let psi0 = PureState::new(3, &u * a + &v * b).unwrap();
        let tau = 3.0;
        let sectors = [odd.clone(), parity_sector(3, false)];
        let res =
            adiabatic_ec_path(|_| Ok(h.clone()), &hs.h0_hub, hs.e_empty, &psi0, tau, 600, &sectors, 31).unwrap();
        let pred = res.series.channel("ec_adiabatic_hbar_omega_J").unwrap();
        let mut peak = 0.0_f64;
        for k in 0..res.series.len() {
            let t = res.series.times[k];
            let direct = two_level_current(a, b, &u, &v, eu, ev, &hs.h0_hub, t);
            assert!((pred[k] - direct).abs() < 1e-9, "k={k}");
            assert!((res.series.ec[k] - direct).abs() < 1e-9, "k={k}");
            peak = peak.max(direct.abs());
        }
        assert!(peak > 0.1);
    }

    #[test]
    fn hub_energy_matches_model() {
        let hs = HamiltonianSet::build(&SystemSpec::new(1.7, 1.0).unwrap()).unwrap();
        assert_eq!(hub_energy(1.7).unwrap().max_abs_diff(&hs.h0_hub), 0.0);
    }
}
