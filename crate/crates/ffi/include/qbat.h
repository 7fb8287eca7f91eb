#ifndef QBAT_H
#define QBAT_H

#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>

typedef enum QbatStatus {
  QBAT_STATUS_OK = 0,
  QBAT_STATUS_NULL_POINTER = 1,
  QBAT_STATUS_INVALID_ARGUMENT = 2,
  QBAT_STATUS_DIMENSION_MISMATCH = 3,
  QBAT_STATUS_NUMERICAL = 4,
  QBAT_STATUS_BUFFER_TOO_SMALL = 5,
  QBAT_STATUS_UNKNOWN_CHANNEL = 6,
  QBAT_STATUS_PANIC = 7,
} QbatStatus;

typedef enum QbatGate {
  QBAT_GATE_NONE = 0,
  QBAT_GATE_HALF_ON_QUBIT1 = 1,
  QBAT_GATE_HALF_ON_QUBIT2 = 2,
  QBAT_GATE_FULL_ON_QUBIT1 = 3,
  QBAT_GATE_FULL_ON_QUBIT2 = 4,
} QbatGate;

typedef enum QbatSchedule {
  QBAT_SCHEDULE_LINEAR = 0,
  QBAT_SCHEDULE_SIN_SQUARED = 1,
  QBAT_SCHEDULE_SMOOTHSTEP = 2,
} QbatSchedule;

typedef enum QbatCellAction {
  QBAT_CELL_ACTION_HOLD = 0,
  QBAT_CELL_ACTION_HALF = 1,
  QBAT_CELL_ACTION_FULL = 2,
} QbatCellAction;

/**
 * Opaque sampled trajectory.
 */
typedef struct QbatSeries QbatSeries;

/**
 * Opaque one-cell system (`omega`, `J`).
 */
typedef struct QbatSystem QbatSystem;

typedef struct QbatTrapReport {
  bool is_h_eigenstate;
  bool trapped;
  double h_eigenvalue;
  double ec_value;
  double h_residual;
  double ec_residual;
} QbatTrapReport;

/**
 * Adiabatic discharge summary. `convergence_delta` is the change in target
 * fidelity when the step count is doubled, NaN if unavailable.
 */
typedef struct QbatDischargeReport {
  double jtau;
  double final_charge;
  double fidelity_target;
  double leakage_forbidden;
  double min_gap_sector;
  double ec_tail;
  double parity_drift;
  double convergence_delta;
} QbatDischargeReport;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failed call on this thread, or null. Valid until the
 * next failing call on the same thread.
 */
const char *qbat_last_error(void);

void qbat_clear_error(void);

/**
 * Library version as a static nul-terminated string.
 */
const char *qbat_version(void);

enum QbatStatus qbat_system_new(double omega, double j_coupling, struct QbatSystem **out);

void qbat_system_free(struct QbatSystem *system);

/**
 * `E0 g_nm sin^2(2 sqrt2 J t)`.
 */
enum QbatStatus qbat_bell_charge_closed_form(const struct QbatSystem *system,
                                             uint8_t n,
                                             uint8_t m,
                                             double t,
                                             double *out);

/**
 * Simulated discharge of `|beta_nm>|0>` over two discharge periods.
 */
enum QbatStatus qbat_bell_discharge(const struct QbatSystem *system,
                                    uint8_t n,
                                    uint8_t m,
                                    enum QbatGate gate,
                                    size_t n_samples,
                                    struct QbatSeries **out);

void qbat_series_free(struct QbatSeries *series);

/**
 * Number of samples, or 0 for a null handle.
 */
size_t qbat_series_len(const struct QbatSeries *series);

/**
 * Number of channels, including `times`, `charge` and `ec`.
 */
size_t qbat_series_channel_count(const struct QbatSeries *series);

/**
 * Name of channel `index`, owned by the series; null if out of range.
 */
const char *qbat_series_channel_name(const struct QbatSeries *series, size_t index);

/**
 * Copies channel `name` into `buf`, which must hold `qbat_series_len`
 * values.
 */
enum QbatStatus qbat_series_copy(const struct QbatSeries *series,
                                 const char *name,
                                 double *buf,
                                 size_t buf_len);

/**
 * Trapping test of `|beta_nm>|0>` under the charging Hamiltonian.
 */
enum QbatStatus qbat_trap_check(const struct QbatSystem *system,
                                uint8_t n,
                                uint8_t m,
                                double tol,
                                struct QbatTrapReport *out);

/**
 * One adiabatic discharge of the singlet at `J tau = jtau`.
 */
enum QbatStatus qbat_adiabatic_run(const struct QbatSystem *system,
                                   double jtau,
                                   enum QbatSchedule schedule,
                                   uint32_t steps_per_unit,
                                   struct QbatDischargeReport *out);

/**
 * Largest charge a product battery with excited amplitudes `beta1, beta2`
 * and phases `theta1, theta2` can deliver.
 */
enum QbatStatus qbat_separable_max_charge(const struct QbatSystem *system,
                                          double beta1,
                                          double beta2,
                                          double theta1,
                                          double theta2,
                                          double *out);

/**
 * Charge delivered at `tau_d` by independent cells. `per_cell` may be null;
 * otherwise it receives `n_cells` values.
 */
enum QbatStatus qbat_ncell_energy(const struct QbatSystem *system,
                                  const enum QbatCellAction *actions,
                                  size_t n_cells,
                                  double *total,
                                  double *per_cell);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* QBAT_H */
