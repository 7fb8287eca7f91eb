//! Time evolution: exact propagation for constant Hamiltonians, an
//! exponential-midpoint stepper for time-dependent ones, interaction-frame
//! transforms, trajectory sampling and collective dephasing.

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::error::{QbatError, Result};
use crate::model::{charge, HamiltonianSet};
use crate::qalg::{
    check_qubits, eigh, eigh_matrix, expectation_real, DensityMatrix, Eigh, Operator, PureState,
    C64, ZERO,
};
use crate::series::TimeSeries;

/// Step-count policy for the time-dependent integrator.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SteppingConfig {
    pub steps_per_unit_jt: u32,
}

impl SteppingConfig {
    pub const MIN_STEPS_PER_UNIT: u32 = 16;
    pub const DEFAULT_STEPS_PER_UNIT: u32 = 256;

    pub fn new(steps_per_unit_jt: u32) -> Result<Self> {
        if steps_per_unit_jt < Self::MIN_STEPS_PER_UNIT {
            return Err(QbatError::param(
                "steps_per_unit_jt",
                format!(
                    "must be at least {}, got {steps_per_unit_jt}",
                    Self::MIN_STEPS_PER_UNIT
                ),
            ));
        }
        Ok(SteppingConfig { steps_per_unit_jt })
    }

    /// Number of steps for a run of dimensionless length `jt`; at least one.
    pub fn steps_for(&self, jt: f64) -> usize {
        ((self.steps_per_unit_jt as f64 * jt).ceil() as usize).max(1)
    }

    pub fn doubled(&self) -> SteppingConfig {
        SteppingConfig {
            steps_per_unit_jt: self.steps_per_unit_jt * 2,
        }
    }
}

impl Default for SteppingConfig {
    fn default() -> Self {
        SteppingConfig {
            steps_per_unit_jt: Self::DEFAULT_STEPS_PER_UNIT,
        }
    }
}

fn require_hermitian(h: &Operator) -> Result<()> {
    if !h.is_hermitian() {
        return Err(QbatError::NotHermitian {
            defect: h.hermiticity_defect(),
        });
    }
    Ok(())
}

fn check_dims(h: &Operator, psi: &PureState) -> Result<()> {
    if h.dim() != psi.dim() {
        return Err(QbatError::DimensionMismatch {
            expected: h.dim(),
            found: psi.dim(),
        });
    }
    Ok(())
}

/// `exp(-i H t)`.
pub fn propagator(h: &Operator, t: f64) -> Result<Operator> {
    Ok(eigh(h)?.propagator(t))
}

/// Exact evolution under a constant Hamiltonian, sampled at arbitrary times.
#[derive(Clone, Debug)]
pub struct StaticEvolver {
    eig: Eigh,
    coeffs: DVector<C64>,
    n_qubits: usize,
}

impl StaticEvolver {
    pub fn new(h: &Operator, psi0: &PureState) -> Result<Self> {
        require_hermitian(h)?;
        check_dims(h, psi0)?;
        let eig = eigh(h)?;
        let coeffs = eig.vectors.adjoint() * psi0.amplitudes();
        Ok(StaticEvolver {
            eig,
            coeffs,
            n_qubits: psi0.n_qubits(),
        })
    }

    pub fn state_at(&self, t: f64) -> PureState {
        if t == 0.0 {
            let v = &self.eig.vectors * &self.coeffs;
            return PureState::from_parts_unchecked(self.n_qubits, v);
        }
        let phased = DVector::from_iterator(
            self.coeffs.len(),
            self.coeffs
                .iter()
                .zip(&self.eig.values)
                .map(|(c, &e)| c * C64::from_polar(1.0, -e * t)),
        );
        PureState::from_parts_unchecked(self.n_qubits, &self.eig.vectors * phased)
    }

    pub fn spectrum(&self) -> &Eigh {
        &self.eig
    }
}

/// `exp(-i H t) |psi0>` via eigendecomposition. `t = 0` returns `psi0`
/// unchanged.
pub fn evolve_static(h: &Operator, psi0: &PureState, t: f64) -> Result<PureState> {
    require_hermitian(h)?;
    check_dims(h, psi0)?;
    if t == 0.0 {
        return Ok(psi0.clone());
    }
    Ok(StaticEvolver::new(h, psi0)?.state_at(t))
}

/// Position of one midpoint step inside a run.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StepInfo {
    /// Index of the step just taken, starting at 0.
    pub step: usize,
    /// Time at the end of the step.
    pub t: f64,
    /// Normalized time `t / tau` at the end of the step.
    pub s: f64,
}

/// Index sets of the blocks left uncoupled by exactly-zero entries of `m`.
fn decoupled_blocks(m: &DMatrix<C64>) -> Vec<Vec<usize>> {
    let n = m.nrows();
    let mut label = vec![usize::MAX; n];
    let mut blocks = Vec::new();
    for root in 0..n {
        if label[root] != usize::MAX {
            continue;
        }
        let id = blocks.len();
        let mut members = vec![root];
        label[root] = id;
        let mut k = 0;
        while k < members.len() {
            let i = members[k];
            for j in 0..n {
                if label[j] == usize::MAX && (m[(i, j)] != ZERO || m[(j, i)] != ZERO) {
                    label[j] = id;
                    members.push(j);
                }
            }
            k += 1;
        }
        members.sort_unstable();
        blocks.push(members);
    }
    blocks
}

/// `exp(-i m dt) v` for a hermitian block given as a dense matrix.
fn block_propagate(m: &DMatrix<C64>, v: &DVector<C64>, dt: f64) -> DVector<C64> {
    if m.nrows() == 1 {
        return v * C64::from_polar(1.0, -m[(0, 0)].re * dt);
    }
    if m.iter().all(|z| z.im == 0.0) {
        // real symmetric: V diag(e^{-iEdt}) V^T without complex eigenvectors
        let se = SymmetricEigen::new(m.map(|z| z.re));
        let w = &se.eigenvectors;
        let c_re = w.tr_mul(&v.map(|z| z.re));
        let c_im = w.tr_mul(&v.map(|z| z.im));
        let mut out_re = DVector::zeros(v.len());
        let mut out_im = DVector::zeros(v.len());
        for (k, &e) in se.eigenvalues.iter().enumerate() {
            let (sin, cos) = (-e * dt).sin_cos();
            let re = c_re[k] * cos - c_im[k] * sin;
            let im = c_re[k] * sin + c_im[k] * cos;
            out_re.axpy(re, &w.column(k), 1.0);
            out_im.axpy(im, &w.column(k), 1.0);
        }
        return DVector::from_fn(v.len(), |i, _| C64::new(out_re[i], out_im[i]));
    }
    let (values, vectors) = eigh_matrix(m);
    let mut c = vectors.adjoint() * v;
    for (ck, &e) in c.iter_mut().zip(&values) {
        *ck *= C64::from_polar(1.0, -e * dt);
    }
    vectors * c
}

/// One exponential-midpoint step: `psi <- exp(-i H(s_mid) dt) psi`.
/// Blocks that `H` leaves exactly uncoupled are exponentiated separately.
fn midpoint_step(h: &Operator, psi: &DVector<C64>, dt: f64) -> Result<DVector<C64>> {
    require_hermitian(h)?;
    let m = h.matrix();
    let blocks = decoupled_blocks(m);
    if blocks.len() == 1 {
        return Ok(block_propagate(m, psi, dt));
    }
    let mut out = DVector::from_element(psi.len(), ZERO);
    for idx in &blocks {
        let sub = DMatrix::from_fn(idx.len(), idx.len(), |r, c| m[(idx[r], idx[c])]);
        let v = DVector::from_fn(idx.len(), |r, _| psi[idx[r]]);
        let w = block_propagate(&sub, &v, dt);
        for (r, &i) in idx.iter().enumerate() {
            out[i] = w[r];
        }
    }
    Ok(out)
}

/// Exponential-midpoint integration of `i d|psi>/dt = H(t/tau) |psi>` over
/// `[0, tau]` in `n_steps` equal steps. `observer` sees the state after every
/// step.
pub fn evolve_timedep_observed<F, O>(
    mut h_of: F,
    psi0: &PureState,
    tau: f64,
    n_steps: usize,
    mut observer: O,
) -> Result<PureState>
where
    F: FnMut(f64) -> Result<Operator>,
    O: FnMut(StepInfo, &PureState) -> Result<()>,
{
    if !(tau >= 0.0 && tau.is_finite()) {
        return Err(QbatError::param("tau", format!("must be non-negative, got {tau}")));
    }
    if n_steps == 0 {
        return Err(QbatError::param("n_steps", "must be positive"));
    }
    if tau == 0.0 {
        return Ok(psi0.clone());
    }
    let dt = tau / n_steps as f64;
    let mut psi = psi0.amplitudes().clone();
    for k in 0..n_steps {
        let s_mid = (k as f64 + 0.5) / n_steps as f64;
        let h = h_of(s_mid)?;
        if h.dim() != psi.len() {
            return Err(QbatError::DimensionMismatch {
                expected: psi.len(),
                found: h.dim(),
            });
        }
        psi = midpoint_step(&h, &psi, dt)?;
        let s = (k + 1) as f64 / n_steps as f64;
        let state = PureState::from_parts_unchecked(psi0.n_qubits(), psi);
        observer(
            StepInfo {
                step: k,
                t: s * tau,
                s,
            },
            &state,
        )?;
        psi = state.into_amplitudes();
    }
    Ok(PureState::from_parts_unchecked(psi0.n_qubits(), psi))
}

/// [`evolve_timedep_observed`] without an observer.
pub fn evolve_timedep<F>(h_of: F, psi0: &PureState, tau: f64, n_steps: usize) -> Result<PureState>
where
    F: FnMut(f64) -> Result<Operator>,
{
    evolve_timedep_observed(h_of, psi0, tau, n_steps, |_, _| Ok(()))
}

/// Measured convergence exponent of the midpoint stepper from runs with
/// `n`, `2n` and `4n` steps: `log2(|psi_n - psi_2n| / |psi_2n - psi_4n|)`.
pub fn self_convergence_order<F>(mut h_of: F, psi0: &PureState, tau: f64, n: usize) -> Result<f64>
where
    F: FnMut(f64) -> Result<Operator>,
{
    let a = evolve_timedep(&mut h_of, psi0, tau, n)?;
    let b = evolve_timedep(&mut h_of, psi0, tau, 2 * n)?;
    let c = evolve_timedep(&mut h_of, psi0, tau, 4 * n)?;
    Ok((a.distance(&b) / b.distance(&c)).log2())
}

/// Change between interaction and Schrödinger frames.
///
/// With `Z(t) = exp(-i H0 t)`, operators map as `A_int = Z^dagger A Z` and
/// states as `psi_int = Z^dagger psi`.
pub trait FrameTransform: Sized {
    fn conjugate_by(&self, z_dagger: &Operator, z: &Operator) -> Result<Self>;
}

impl FrameTransform for Operator {
    fn conjugate_by(&self, z_dagger: &Operator, z: &Operator) -> Result<Self> {
        if self.dim() != z.dim() {
            return Err(QbatError::DimensionMismatch {
                expected: z.dim(),
                found: self.dim(),
            });
        }
        let m = z_dagger.matrix() * self.matrix() * z.matrix();
        if self.is_hermitian() {
            // conjugation preserves hermiticity; re-symmetrize rounding
            let sym = (&m + m.adjoint()) * C64::new(0.5, 0.0);
            Operator::hermitian(self.n_qubits(), sym)
        } else {
            Operator::general(self.n_qubits(), m)
        }
    }
}

impl FrameTransform for PureState {
    fn conjugate_by(&self, z_dagger: &Operator, _z: &Operator) -> Result<Self> {
        let v = z_dagger.act(self)?;
        Ok(PureState::from_parts_unchecked(self.n_qubits(), v))
    }
}

impl FrameTransform for DensityMatrix {
    fn conjugate_by(&self, z_dagger: &Operator, _z: &Operator) -> Result<Self> {
        if self.dim() != z_dagger.dim() {
            return Err(QbatError::DimensionMismatch {
                expected: z_dagger.dim(),
                found: self.dim(),
            });
        }
        Ok(self.conjugated(z_dagger))
    }
}

/// Schrödinger-frame object to the interaction frame of `h0` at time `t`.
pub fn to_interaction_picture<T: FrameTransform>(h0: &Operator, x: &T, t: f64) -> Result<T> {
    let z = propagator(h0, t)?;
    x.conjugate_by(&z.dagger(), &z)
}

/// Inverse of [`to_interaction_picture`].
pub fn from_interaction_picture<T: FrameTransform>(h0: &Operator, x: &T, t: f64) -> Result<T> {
    let z = propagator(h0, t)?;
    x.conjugate_by(&z, &z.dagger())
}

/// `n_samples` uniformly spaced times on `[0, t_final]`.
pub fn uniform_times(t_final: f64, n_samples: usize) -> Result<Vec<f64>> {
    if n_samples < 2 {
        return Err(QbatError::param("n_samples", format!("must be at least 2, got {n_samples}")));
    }
    if !(t_final >= 0.0 && t_final.is_finite()) {
        return Err(QbatError::param("t_final", format!("must be non-negative, got {t_final}")));
    }
    let last = (n_samples - 1) as f64;
    Ok((0..n_samples)
        .map(|k| if k + 1 == n_samples { t_final } else { t_final * k as f64 / last })
        .collect())
}

/// Charge and energy current along the exact evolution of `psi0` under the
/// constant Hamiltonian `h`.
pub fn sample_trajectory(
    h: &Operator,
    psi0: &PureState,
    t_final: f64,
    n_samples: usize,
    hs: &HamiltonianSet,
    p_hat: &Operator,
) -> Result<TimeSeries> {
    let times = uniform_times(t_final, n_samples)?;
    let evolver = StaticEvolver::new(h, psi0)?;
    let mut ts = TimeSeries::with_capacity(n_samples);
    for t in times {
        let psi = if t == 0.0 { psi0.clone() } else { evolver.state_at(t) };
        ts.push(t, charge(&psi, hs)?, expectation_real(p_hat, &psi)?);
    }
    Ok(ts)
}

/// Collective pure dephasing of a register under the single jump operator
/// `L = sqrt(gamma) sum_k Z_k`, integrated exactly:
/// `rho_ij -> rho_ij exp(-gamma t (z_i - z_j)^2 / 2)` where `z_i` is the
/// collective `Z` eigenvalue of basis state `i`.
pub fn collective_dephasing(rho: &DensityMatrix, gamma: f64, t: f64) -> Result<DensityMatrix> {
    if !(gamma >= 0.0 && gamma.is_finite()) {
        return Err(QbatError::param("gamma", format!("must be non-negative, got {gamma}")));
    }
    if !(t >= 0.0 && t.is_finite()) {
        return Err(QbatError::param("t", format!("must be non-negative, got {t}")));
    }
    let n = rho.n_qubits();
    check_qubits(n)?;
    let z: Vec<f64> = (0..rho.dim())
        .map(|idx| {
            let ones = idx.count_ones() as f64;
            n as f64 - 2.0 * ones
        })
        .collect();
    let mut m = rho.matrix().clone();
    for i in 0..rho.dim() {
        for j in 0..rho.dim() {
            let dz = z[i] - z[j];
            if dz != 0.0 {
                m[(i, j)] *= (-0.5 * gamma * t * dz * dz).exp();
            }
        }
    }
    DensityMatrix::new(n, m)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{SystemSpec, HamiltonianSet};
    use crate::qalg::{basis_index, max_abs};
    use std::f64::consts::{FRAC_1_SQRT_2, PI, SQRT_2};

    fn hs() -> HamiltonianSet {
        HamiltonianSet::build(&SystemSpec::new(1.0, 1.0).unwrap()).unwrap()
    }

    fn bell10_hub0() -> PureState {
        let mut v = DVector::zeros(8);
        v[basis_index(&[0, 1, 0])] = C64::new(FRAC_1_SQRT_2, 0.0);
        v[basis_index(&[1, 0, 0])] = C64::new(FRAC_1_SQRT_2, 0.0);
        PureState::new(3, v).unwrap()
    }

    fn p0() -> PureState {
        let mut v = DVector::zeros(8);
        v[basis_index(&[0, 1, 0])] = C64::new(FRAC_1_SQRT_2, 0.0);
        v[basis_index(&[1, 0, 0])] = C64::new(-FRAC_1_SQRT_2, 0.0);
        PureState::new(3, v).unwrap()
    }

    #[test]
    fn zero_time_is_identity() {
        let psi = bell10_hub0();
        assert_eq!(evolve_static(&hs().h_charging, &psi, 0.0).unwrap(), psi);
    }

    #[test]
    fn full_transfer_at_discharge_time() {
        // single-excitation reduction: hub population sin^2(2 sqrt2 J t)
        let tau_d = PI / (4.0 * SQRT_2);
        let psi = evolve_static(&hs().h_charging, &bell10_hub0(), tau_d).unwrap();
        let hub = psi.amplitude(basis_index(&[0, 0, 1])).norm_sqr();
        assert!((hub - 1.0).abs() <= 1e-10);
        assert!((psi.amplitudes().norm() - 1.0).abs() <= 1e-12);
    }

    #[test]
    fn eigenstate_only_acquires_phase() {
        let h = hs().h_charging;
        for t in [0.3, 1.7, 12.0] {
            let psi = evolve_static(&h, &p0(), t).unwrap();
            // E_p0 = 0, so the state is unchanged up to rounding
            assert!((psi.fidelity(&p0()) - 1.0).abs() <= 1e-12);
            assert!(psi.distance(&p0()) <= 1e-12);
        }
    }

    #[test]
    fn static_rejects_non_hermitian() {
        let g = Operator::general(3, hs().h_charging.matrix().clone()).unwrap();
        assert!(matches!(
            evolve_static(&g, &p0(), 1.0),
            Err(QbatError::NotHermitian { .. })
        ));
    }

    #[test]
    fn propagator_is_unitary() {
        let u = propagator(&hs().h_charging, 0.77).unwrap();
        assert!(u.unitarity_defect() <= 1e-10);
    }

    #[test]
    fn midpoint_is_exact_for_constant_h() {
        let h = hs().h_charging;
        let exact = evolve_static(&h, &bell10_hub0(), 1.3).unwrap();
        let stepped = evolve_timedep(|_| Ok(h.clone()), &bell10_hub0(), 1.3, 37).unwrap();
        assert!(exact.distance(&stepped) <= 1e-12);
    }

    #[test]
    fn midpoint_second_order_convergence() {
        let hs = hs();
        let h_of = |s: f64| -> Result<Operator> {
            Ok(&hs.h_charging.scaled(1.0 + s) + &hs.h0_hub.scaled((3.0 * s).sin()))
        };
        let order = self_convergence_order(h_of, &bell10_hub0(), 2.0, 40).unwrap();
        assert!(order >= 1.9, "order {order}");
    }

    #[test]
    fn timedep_validation() {
        let h = hs().h_charging;
        assert!(evolve_timedep(|_| Ok(h.clone()), &p0(), 1.0, 0).is_err());
        assert!(evolve_timedep(|_| Ok(h.clone()), &p0(), -1.0, 4).is_err());
        let bad = Operator::general(3, h.matrix().clone()).unwrap();
        assert!(evolve_timedep(|_| Ok(bad.clone()), &p0(), 1.0, 4).is_err());
    }

    #[test]
    fn interaction_picture_round_trip_and_invariance() {
        let hs = hs();
        let a = to_interaction_picture(&hs.h0_total, &hs.h_charging, 0.0).unwrap();
        assert!(a.max_abs_diff(&hs.h_charging) <= 1e-15);
        for t in [0.4, 2.5] {
            let hint = to_interaction_picture(&hs.h0_total, &hs.h_charging, t).unwrap();
            assert!(hint.max_abs_diff(&hs.h_charging) <= 1e-12);
            let psi = bell10_hub0();
            let rt = from_interaction_picture(
                &hs.h0_total,
                &to_interaction_picture(&hs.h0_total, &psi, t).unwrap(),
                t,
            )
            .unwrap();
            assert!(rt.distance(&psi) <= 1e-12);
            // a non-commuting operator still round-trips
            let p = hs.ec_operator().unwrap();
            let q = to_interaction_picture(&hs.h0_battery, &p, t).unwrap();
            let back = from_interaction_picture(&hs.h0_battery, &q, t).unwrap();
            assert!(back.max_abs_diff(&p) <= 1e-12);
        }
    }

    #[test]
    fn trapped_trajectory_is_flat() {
        let hs = hs();
        let p = hs.ec_operator().unwrap();
        let ts = sample_trajectory(&hs.h_charging, &p0(), 3.0, 50, &hs, &p).unwrap();
        assert!(ts.max_abs_ec() <= 1e-12);
        assert!(ts.charge.iter().all(|c| c.abs() <= 1e-12));
    }

    #[test]
    fn two_samples_are_endpoints() {
        let hs = hs();
        let p = hs.ec_operator().unwrap();
        let ts = sample_trajectory(&hs.h_charging, &bell10_hub0(), 1.0, 2, &hs, &p).unwrap();
        assert_eq!(ts.times, vec![0.0, 1.0]);
        assert!(ts.charge[0].abs() <= 1e-15);
        assert!(sample_trajectory(&hs.h_charging, &bell10_hub0(), 1.0, 1, &hs, &p).is_err());
    }

    #[test]
    fn energy_and_excitation_conserved() {
        let hs = hs();
        let h = &hs.h0_total + &hs.h_charging;
        let n_exc = &hs.h0_total.scaled(0.5) + &Operator::identity(3).scaled(1.5);
        let psi0 = PureState::normalized(
            3,
            DVector::from_fn(8, |k, _| C64::new(1.0 + k as f64, 0.3 * k as f64)),
        )
        .unwrap();
        let ev = StaticEvolver::new(&h, &psi0).unwrap();
        let e0 = expectation_real(&h, &psi0).unwrap();
        let n0 = expectation_real(&n_exc, &psi0).unwrap();
        for k in 0..20 {
            let psi = ev.state_at(0.37 * k as f64);
            assert!((expectation_real(&h, &psi).unwrap() - e0).abs() <= 1e-10);
            assert!((expectation_real(&n_exc, &psi).unwrap() - n0).abs() <= 1e-10);
        }
    }

    #[test]
    fn dephasing_examples() {
        let singlet = {
            let mut v = DVector::zeros(4);
            v[1] = C64::new(FRAC_1_SQRT_2, 0.0);
            v[2] = C64::new(-FRAC_1_SQRT_2, 0.0);
            PureState::new(2, v).unwrap().to_density()
        };
        for (g, t) in [(0.1, 1.0), (1.0, 1.0), (5.0, 2.0)] {
            let out = collective_dephasing(&singlet, g, t).unwrap();
            assert!(out.trace_distance(&singlet) <= 1e-12);
        }
        let ghz = {
            let mut v = DVector::zeros(4);
            v[0] = C64::new(FRAC_1_SQRT_2, 0.0);
            v[3] = C64::new(FRAC_1_SQRT_2, 0.0);
            PureState::new(2, v).unwrap().to_density()
        };
        assert_eq!(collective_dephasing(&ghz, 0.0, 10.0).unwrap(), ghz);
        let out = collective_dephasing(&ghz, 1.0, 10.0).unwrap();
        // Delta z = 4 coherence decays as exp(-8 gamma t)
        assert!((out.entry(0, 3).re - 0.5 * (-80.0f64).exp()).abs() <= 1e-15);
        assert!(out.entry(0, 3).norm() < 1e-30);
        assert!(max_abs(&(out.matrix() - out.matrix().adjoint())) == 0.0);
        assert!(collective_dephasing(&ghz, -1.0, 1.0).is_err());
    }
}
