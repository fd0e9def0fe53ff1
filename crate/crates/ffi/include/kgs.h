#ifndef KGS_H
#define KGS_H

/* C interface to the kgs ground-state solver. Mirrors crates/ffi/src/lib.rs. */

#include <stddef.h>
#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

typedef enum KgsStatus {
  KGS_STATUS_OK = 0,
  KGS_STATUS_NULL_POINTER = 1,
  KGS_STATUS_STRUCTURAL = 2,
  KGS_STATUS_DOMAIN = 3,
  KGS_STATUS_NO_ROOT = 4,
  KGS_STATUS_PRECONDITION = 5,
  KGS_STATUS_NON_CONVERGENCE = 6,
  KGS_STATUS_INCONSISTENCY = 7,
  KGS_STATUS_INSUFFICIENT_DATA = 8,
  KGS_STATUS_PARSE = 9,
  KGS_STATUS_IO = 10,
  KGS_STATUS_BUFFER_TOO_SMALL = 11,
  KGS_STATUS_PANIC = 12,
} KgsStatus;

/* Opaque solved ground state. */
typedef struct KgsGroundState KgsGroundState;

typedef struct KgsConstantProblem {
  double a;
  double b;
  double p;
  double k;
  double tau;
  double nu;
  double radius;
  size_t nodes;
  double tol;
  size_t max_iter;
} KgsConstantProblem;

/* Message of the last failed call on this thread, or NULL after a success.
   Valid until the next kgs_* call on the same thread. */
const char *kgs_last_error(void);

KgsStatus kgs_solve_ts(double a, double b, double sobolev, double lambda, double *t0, double *s0);
KgsStatus kgs_critical_level(double a, double b, double sobolev, double q, double *c_star);
KgsStatus kgs_threshold_consistency(double a, double b, double sobolev, double q, double *residual);
KgsStatus kgs_sobolev_constant(double radius, size_t nodes, double *out);

/* On NON_CONVERGENCE *out still holds a handle to the best iterate. */
KgsStatus kgs_solve_constant(const KgsConstantProblem *problem, KgsGroundState **out);

KgsStatus kgs_ground_state_level(const KgsGroundState *state, double *out);
KgsStatus kgs_ground_state_nehari_residual(const KgsGroundState *state, double *out);
KgsStatus kgs_ground_state_converged(const KgsGroundState *state, int32_t *out);
KgsStatus kgs_ground_state_iterations(const KgsGroundState *state, size_t *out);
KgsStatus kgs_ground_state_len(const KgsGroundState *state, size_t *out);
KgsStatus kgs_ground_state_copy_values(const KgsGroundState *state, double *buf, size_t len);
void kgs_ground_state_free(KgsGroundState *state);

#ifdef __cplusplus
}
#endif

#endif
