#ifndef QSLAB_H
#define QSLAB_H

#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>

/**
 * Result code of every fallible call. Zero means success.
 */
typedef enum QslabStatus {
  QslabStatus_Ok = 0,
  QslabStatus_NullPointer = 1,
  QslabStatus_InvalidParameter = 2,
  QslabStatus_InvalidState = 3,
  QslabStatus_NegativeTime = 4,
  QslabStatus_SingularRate = 5,
  QslabStatus_Degenerate = 6,
  QslabStatus_GridTooCoarse = 7,
  QslabStatus_NoConvergence = 8,
  QslabStatus_NonFinite = 9,
  QslabStatus_NegativeRadicand = 10,
  QslabStatus_Io = 11,
  QslabStatus_InvalidUtf8 = 12,
  /**
   * A sweep finished but some points failed.
   */
  QslabStatus_Partial = 13,
  QslabStatus_Panic = 14,
} QslabStatus;

/**
 * Opaque channel handle.
 */
typedef struct QslabChannel QslabChannel;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Library version as a static NUL-terminated string.
 */
const char *qslab_version(void);

/**
 * Message of the last failed call on this thread, or NULL after a success.
 * The pointer stays valid until the next qslab call on the same thread.
 */
const char *qslab_last_error(void);

/**
 * Ornstein-Uhlenbeck dephasing with coupling `mu` and bandwidth `gamma_big`.
 */
enum QslabStatus qslab_channel_oun(double mu, double gamma_big, struct QslabChannel **out);

/**
 * Random telegraph dephasing with amplitude `a` and switching rate `mu`.
 */
enum QslabStatus qslab_channel_rtn(double a, double mu, struct QslabChannel **out);

/**
 * Non-Markovian amplitude damping with coupling `mu` and width `gamma_big`.
 */
enum QslabStatus qslab_channel_nmad(double mu, double gamma_big, struct QslabChannel **out);

/**
 * Releases a handle. NULL is ignored.
 */
void qslab_channel_free(struct QslabChannel *ch);

/**
 * Human-readable tag such as `oun(mu=1,gamma_big=0.1)`; free with
 * [`qslab_string_free`].
 */
enum QslabStatus qslab_channel_tag(const struct QslabChannel *ch, char **out);

/**
 * Releases a string returned by this library. NULL is ignored.
 */
void qslab_string_free(char *s);

/**
 * Decoherence function p(t).
 */
enum QslabStatus qslab_decoherence(const struct QslabChannel *ch, double t, double *out);

/**
 * Time-local rate γ(t).
 */
enum QslabStatus qslab_rate(const struct QslabChannel *ch, double t, double *out);

/**
 * Evolves the Bloch vector `r_in[3]` to time `t`, writing `r_out[3]`.
 * The two arrays may alias.
 */
enum QslabStatus qslab_evolve(const struct QslabChannel *ch,
                              const double *r_in,
                              double t,
                              double *r_out);

/**
 * Memory measure ζ over `[0, horizon]` on a grid of `grid` points.
 * `gamma_star` may be NULL.
 */
enum QslabStatus qslab_zeta(const struct QslabChannel *ch,
                            double horizon,
                            size_t grid,
                            double *zeta,
                            double *gamma_star);

/**
 * Speed-limit bound named by `bound` (`relative_purity`, `fisher_speed`,
 * `bures_dl_op`, `wu_mixed_tr`, ...) for the Bloch vector `r[3]`.
 */
enum QslabStatus qslab_qsl(const struct QslabChannel *ch,
                           const double *r,
                           double tau,
                           const char *bound,
                           bool closed_form,
                           double *out);

/**
 * Writes figure preset `id` (1-4) as CSV, SVG and JSON under `out_dir`.
 * `jobs` = 0 uses every core. Returns `Partial` if some points failed.
 */
enum QslabStatus qslab_fig_preset(uint8_t id, const char *out_dir, size_t jobs);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* QSLAB_H */
