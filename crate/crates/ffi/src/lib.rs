//! C ABI for the `qbat` simulator.
//!
//! Every fallible function returns a [`QbatStatus`]. On failure the message is
//! kept per thread and can be read with [`qbat_last_error`]. Handles are
//! opaque; each `*_new`/producer function has a matching `*_free`.

#![allow(clippy::missing_safety_doc)]

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use qbat::adiabatic::{run_discharge, AdiabaticSpec, Schedule};
use qbat::dynamics::SteppingConfig;
use qbat::model::{HamiltonianSet, SystemSpec};
use qbat::protocols::{
    bell_charge_closed_form, bell_discharge, ncell_plan_energy, separable_max_charge,
    trapping_check, BellLabel, CellAction, NCellPlan, SeparableParams, SwitchGate,
};
use qbat::series::TimeSeries;
use qbat::QbatError;

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum QbatStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    DimensionMismatch = 3,
    Numerical = 4,
    BufferTooSmall = 5,
    UnknownChannel = 6,
    Panic = 7,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum QbatGate {
    None = 0,
    HalfOnQubit1 = 1,
    HalfOnQubit2 = 2,
    FullOnQubit1 = 3,
    FullOnQubit2 = 4,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum QbatSchedule {
    Linear = 0,
    SinSquared = 1,
    Smoothstep = 2,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum QbatCellAction {
    Hold = 0,
    Half = 1,
    Full = 2,
}

/// Opaque one-cell system (`omega`, `J`).
pub struct QbatSystem {
    spec: SystemSpec,
}

/// Opaque sampled trajectory.
pub struct QbatSeries {
    series: TimeSeries,
    names: Vec<CString>,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct QbatTrapReport {
    pub is_h_eigenstate: bool,
    pub trapped: bool,
    pub h_eigenvalue: f64,
    pub ec_value: f64,
    pub h_residual: f64,
    pub ec_residual: f64,
}

/// Adiabatic discharge summary. `convergence_delta` is the change in target
/// fidelity when the step count is doubled, NaN if unavailable.
#[repr(C)]
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct QbatDischargeReport {
    pub jtau: f64,
    pub final_charge: f64,
    pub fidelity_target: f64,
    pub leakage_forbidden: f64,
    pub min_gap_sector: f64,
    pub ec_tail: f64,
    pub parity_drift: f64,
    pub convergence_delta: f64,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).expect("interior nul removed");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

struct Failure(QbatStatus, String);

impl From<QbatError> for Failure {
    fn from(e: QbatError) -> Self {
        let status = match e {
            QbatError::InvalidParameter { .. }
            | QbatError::InvalidLayout(_)
            | QbatError::TooManyQubits { .. }
            | QbatError::SiteOutOfRange { .. }
            | QbatError::DuplicateSite(_) => QbatStatus::InvalidArgument,
            QbatError::DimensionMismatch { .. } => QbatStatus::DimensionMismatch,
            _ => QbatStatus::Numerical,
        };
        Failure(status, e.to_string())
    }
}

fn null(what: &str) -> Failure {
    Failure(QbatStatus::NullPointer, format!("{what} is null"))
}

fn guard(f: impl FnOnce() -> Result<(), Failure>) -> QbatStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => QbatStatus::Ok,
        Ok(Err(Failure(status, msg))) => {
            set_error(msg);
            status
        }
        Err(payload) => {
            let msg = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".into());
            set_error(format!("panic: {msg}"));
            QbatStatus::Panic
        }
    }
}

unsafe fn out_ref<'a, T>(p: *mut T, what: &str) -> Result<&'a mut T, Failure> {
    p.as_mut().ok_or_else(|| null(what))
}

unsafe fn system_ref<'a>(p: *const QbatSystem) -> Result<&'a SystemSpec, Failure> {
    p.as_ref().map(|s| &s.spec).ok_or_else(|| null("system"))
}

fn bell(n: u8, m: u8) -> Result<BellLabel, Failure> {
    Ok(BellLabel::new(n, m)?)
}

/// Message of the last failed call on this thread, or null. Valid until the
/// next failing call on the same thread.
#[no_mangle]
pub extern "C" fn qbat_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

#[no_mangle]
pub extern "C" fn qbat_clear_error() {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
}

/// Library version as a static nul-terminated string.
#[no_mangle]
pub extern "C" fn qbat_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

#[no_mangle]
pub unsafe extern "C" fn qbat_system_new(omega: f64, j_coupling: f64, out: *mut *mut QbatSystem) -> QbatStatus {
    guard(|| {
        let out = out_ref(out, "out")?;
        *out = ptr::null_mut();
        let spec = SystemSpec::new(omega, j_coupling)?;
        *out = Box::into_raw(Box::new(QbatSystem { spec }));
        Ok(())
    })
}

#[no_mangle]
pub unsafe extern "C" fn qbat_system_free(system: *mut QbatSystem) {
    if !system.is_null() {
        drop(Box::from_raw(system));
    }
}

/// `E0 g_nm sin^2(2 sqrt2 J t)`.
#[no_mangle]
pub unsafe extern "C" fn qbat_bell_charge_closed_form(
    system: *const QbatSystem,
    n: u8,
    m: u8,
    t: f64,
    out: *mut f64,
) -> QbatStatus {
    guard(|| {
        let spec = system_ref(system)?;
        let out = out_ref(out, "out")?;
        *out = bell_charge_closed_form(bell(n, m)?, t, spec);
        Ok(())
    })
}

/// Simulated discharge of `|beta_nm>|0>` over two discharge periods.
#[no_mangle]
pub unsafe extern "C" fn qbat_bell_discharge(
    system: *const QbatSystem,
    n: u8,
    m: u8,
    gate: QbatGate,
    n_samples: usize,
    out: *mut *mut QbatSeries,
) -> QbatStatus {
    guard(|| {
        let spec = system_ref(system)?;
        let out = out_ref(out, "out")?;
        *out = ptr::null_mut();
        let gate = match gate {
            QbatGate::None => None,
            QbatGate::HalfOnQubit1 => Some(SwitchGate::HalfOnQubit1),
            QbatGate::HalfOnQubit2 => Some(SwitchGate::HalfOnQubit2),
            QbatGate::FullOnQubit1 => Some(SwitchGate::FullOnQubit1),
            QbatGate::FullOnQubit2 => Some(SwitchGate::FullOnQubit2),
        };
        let series = bell_discharge(bell(n, m)?, gate, spec, n_samples)?;
        let names = ["times", "charge", "ec"]
            .into_iter()
            .map(String::from)
            .chain(series.extra.keys().cloned())
            .map(|s| CString::new(s).expect("channel names have no nul"))
            .collect();
        *out = Box::into_raw(Box::new(QbatSeries { series, names }));
        Ok(())
    })
}

#[no_mangle]
pub unsafe extern "C" fn qbat_series_free(series: *mut QbatSeries) {
    if !series.is_null() {
        drop(Box::from_raw(series));
    }
}

/// Number of samples, or 0 for a null handle.
#[no_mangle]
pub unsafe extern "C" fn qbat_series_len(series: *const QbatSeries) -> usize {
    series.as_ref().map_or(0, |s| s.series.len())
}

/// Number of channels, including `times`, `charge` and `ec`.
#[no_mangle]
pub unsafe extern "C" fn qbat_series_channel_count(series: *const QbatSeries) -> usize {
    series.as_ref().map_or(0, |s| s.names.len())
}

/// Name of channel `index`, owned by the series; null if out of range.
#[no_mangle]
pub unsafe extern "C" fn qbat_series_channel_name(series: *const QbatSeries, index: usize) -> *const c_char {
    series
        .as_ref()
        .and_then(|s| s.names.get(index))
        .map_or(ptr::null(), |c| c.as_ptr())
}

/// Copies channel `name` into `buf`, which must hold `qbat_series_len`
/// values.
#[no_mangle]
pub unsafe extern "C" fn qbat_series_copy(
    series: *const QbatSeries,
    name: *const c_char,
    buf: *mut f64,
    buf_len: usize,
) -> QbatStatus {
    guard(|| {
        let s = series.as_ref().ok_or_else(|| null("series"))?;
        if name.is_null() {
            return Err(null("name"));
        }
        if buf.is_null() {
            return Err(null("buf"));
        }
        let name = CStr::from_ptr(name)
            .to_str()
            .map_err(|_| Failure(QbatStatus::InvalidArgument, "channel name is not UTF-8".into()))?;
        let data = s
            .series
            .channel(name)
            .ok_or_else(|| Failure(QbatStatus::UnknownChannel, format!("no channel named {name:?}")))?;
        if buf_len < data.len() {
            return Err(Failure(
                QbatStatus::BufferTooSmall,
                format!("buffer holds {buf_len} values, need {}", data.len()),
            ));
        }
        std::slice::from_raw_parts_mut(buf, data.len()).copy_from_slice(data);
        Ok(())
    })
}

/// Trapping test of `|beta_nm>|0>` under the charging Hamiltonian.
#[no_mangle]
pub unsafe extern "C" fn qbat_trap_check(
    system: *const QbatSystem,
    n: u8,
    m: u8,
    tol: f64,
    out: *mut QbatTrapReport,
) -> QbatStatus {
    guard(|| {
        let spec = system_ref(system)?;
        let out = out_ref(out, "out")?;
        let hs = HamiltonianSet::build(spec)?;
        let r = trapping_check(&hs.h_charging, &hs, &bell(n, m)?.with_empty_hub(), tol)?;
        *out = QbatTrapReport {
            is_h_eigenstate: r.is_h_eigenstate,
            trapped: r.trapped,
            h_eigenvalue: r.h_eigenvalue,
            ec_value: r.ec_value,
            h_residual: r.h_residual,
            ec_residual: r.ec_residual,
        };
        Ok(())
    })
}

/// One adiabatic discharge of the singlet at `J tau = jtau`.
#[no_mangle]
pub unsafe extern "C" fn qbat_adiabatic_run(
    system: *const QbatSystem,
    jtau: f64,
    schedule: QbatSchedule,
    steps_per_unit: u32,
    out: *mut QbatDischargeReport,
) -> QbatStatus {
    guard(|| {
        let spec = system_ref(system)?;
        let out = out_ref(out, "out")?;
        let schedule = match schedule {
            QbatSchedule::Linear => Schedule::Linear,
            QbatSchedule::SinSquared => Schedule::SinSquared,
            QbatSchedule::Smoothstep => Schedule::Smoothstep,
        };
        let j = spec.j_coupling;
        let stepping = SteppingConfig::new(steps_per_unit)?;
        let ad = AdiabaticSpec::new(j, jtau / j, schedule, stepping)?;
        let r = run_discharge(&ad, spec.omega)?;
        *out = QbatDischargeReport {
            jtau: r.jtau,
            final_charge: r.final_charge,
            fidelity_target: r.fidelity_target,
            leakage_forbidden: r.leakage_forbidden,
            min_gap_sector: r.min_gap_sector,
            ec_tail: r.ec_tail,
            parity_drift: r.parity_drift,
            convergence_delta: r.convergence_delta.unwrap_or(f64::NAN),
        };
        Ok(())
    })
}

/// Largest charge a product battery with excited amplitudes `beta1, beta2`
/// and phases `theta1, theta2` can deliver.
#[no_mangle]
pub unsafe extern "C" fn qbat_separable_max_charge(
    system: *const QbatSystem,
    beta1: f64,
    beta2: f64,
    theta1: f64,
    theta2: f64,
    out: *mut f64,
) -> QbatStatus {
    guard(|| {
        let spec = system_ref(system)?;
        let out = out_ref(out, "out")?;
        let p = SeparableParams::new(beta1, beta2, theta1, theta2)?;
        *out = separable_max_charge(&p, spec);
        Ok(())
    })
}

/// Charge delivered at `tau_d` by independent cells. `per_cell` may be null;
/// otherwise it receives `n_cells` values.
#[no_mangle]
pub unsafe extern "C" fn qbat_ncell_energy(
    system: *const QbatSystem,
    actions: *const QbatCellAction,
    n_cells: usize,
    total: *mut f64,
    per_cell: *mut f64,
) -> QbatStatus {
    guard(|| {
        let spec = system_ref(system)?;
        let total = out_ref(total, "total")?;
        if actions.is_null() {
            return Err(null("actions"));
        }
        let plan: Vec<CellAction> = std::slice::from_raw_parts(actions, n_cells)
            .iter()
            .map(|a| match a {
                QbatCellAction::Hold => CellAction::Hold,
                QbatCellAction::Half => CellAction::Half,
                QbatCellAction::Full => CellAction::Full,
            })
            .collect();
        let e = ncell_plan_energy(&NCellPlan::new(plan)?, spec)?;
        *total = e.total;
        if !per_cell.is_null() {
            std::slice::from_raw_parts_mut(per_cell, n_cells).copy_from_slice(&e.per_cell);
        }
        Ok(())
    })
}
