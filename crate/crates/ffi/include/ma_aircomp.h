#ifndef MA_AIRCOMP_H
#define MA_AIRCOMP_H

/* Generated by cbindgen from crates/ffi/src. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum MaStatus {
  MA_STATUS_OK = 0,
  MA_STATUS_NULL_POINTER = 1,
  MA_STATUS_INVALID_ARGUMENT = 2,
  MA_STATUS_DIMENSION_MISMATCH = 3,
  // Singular system or non-finite intermediate value.
  MA_STATUS_NUMERICAL = 4,
  MA_STATUS_INFEASIBLE = 5,
  MA_STATUS_PARSE = 6,
  // Caller buffer too small; the required length was written back.
  MA_STATUS_BUFFER_TOO_SMALL = 7,
  MA_STATUS_PANIC = 99,
} MaStatus;

// Opaque channel realization.
typedef struct MaChannel MaChannel;

// Opaque PSO result.
typedef struct MaSolution MaSolution;

// Parameters for `ma_pso_run`. Start from `ma_pso_config_default`.
typedef struct MaPsoConfig {
  size_t n_particles;
  size_t max_iter;
  double c1;
  double c2;
  double omega_max;
  double omega_min;
  double penalty_tau;
  // Non-positive disables velocity clamping.
  double velocity_clamp;
  double side_length;
  double min_separation;
  // Noise variance in milliwatts.
  double noise_variance;
  // Per-user power cap in milliwatts.
  double power_cap;
  double inner_tol;
  size_t inner_max_iter;
} MaPsoConfig;

typedef struct MaCmse {
  double cmse;
  double misalignment;
  double noise_term;
  size_t iterations;
} MaCmse;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message for the last failed call on this thread, or null after a
// successful one. The pointer stays valid until the next call into this
// library on the same thread.
const char *ma_last_error_message(void);

struct MaPsoConfig ma_pso_config_default(void);

// Draws a channel realization with `k_users` users and `paths` paths each.
// Identical arguments give identical channels.
//
// # Safety
// `out` must be a valid pointer to writable storage for one handle.
enum MaStatus ma_channel_sample(size_t k_users,
                                size_t paths,
                                double pathloss_exp,
                                double min_distance,
                                double max_distance,
                                uint64_t seed,
                                struct MaChannel **out);

// Parses a realization from its JSON form (see `ma_channel_to_json`).
//
// # Safety
// `json` must be a NUL-terminated UTF-8 string; `out` as for
// `ma_channel_sample`.
enum MaStatus ma_channel_from_json(const char *json, struct MaChannel **out);

// Serializes a realization. Release the string with `ma_string_free`.
//
// # Safety
// `channel` must be a live handle; `out` must be writable.
enum MaStatus ma_channel_to_json(const struct MaChannel *channel, char **out);

// Number of users, or 0 for a null handle.
//
// # Safety
// `channel` must be null or a live handle.
size_t ma_channel_user_count(const struct MaChannel *channel);

// # Safety
// `channel` must be null or a handle not yet freed.
void ma_channel_free(struct MaChannel *channel);

// # Safety
// `s` must be null or a string returned by this library and not yet freed.
void ma_string_free(char *s);

// Writes the centred half-wavelength planar array as interleaved
// `x0, y0, x1, y1, ...` into `out_xy`, which must hold `2 * m_antennas`
// values.
//
// # Safety
// `out_xy` must point to `capacity` writable doubles.
enum MaStatus ma_fpa_layout(size_t m_antennas,
                            double side_length,
                            double min_separation,
                            double *out_xy,
                            size_t capacity);

// Runs the inner combiner/coefficient optimization at a fixed layout given
// as `m_antennas` interleaved `(x, y)` pairs and reports the resulting CMSE.
//
// # Safety
// `channel` must be a live handle, `xy` must point to `2 * m_antennas`
// doubles and `out` must be writable.
enum MaStatus ma_evaluate_cmse(const struct MaChannel *channel,
                               const double *xy,
                               size_t m_antennas,
                               double noise_variance,
                               double power_cap,
                               struct MaCmse *out);

// Optimizes `m_antennas` positions with the particle swarm. The result is a
// deterministic function of the arguments, independent of thread count.
//
// # Safety
// `channel` must be a live handle, `config` must point to a valid
// `MaPsoConfig` and `out` must be writable.
enum MaStatus ma_pso_run(const struct MaChannel *channel,
                         size_t m_antennas,
                         const struct MaPsoConfig *config,
                         uint64_t seed,
                         struct MaSolution **out);

// CMSE of the best layout, or NaN for a null handle.
//
// # Safety
// `solution` must be null or a live handle.
double ma_solution_cmse(const struct MaSolution *solution);

// Separation violations of the best layout; 0 means feasible.
//
// # Safety
// `solution` must be null or a live handle.
size_t ma_solution_violations(const struct MaSolution *solution);

// # Safety
// `solution` must be null or a live handle.
size_t ma_solution_antenna_count(const struct MaSolution *solution);

// Copies the best layout as interleaved `(x, y)` pairs. `required`, if not
// null, receives the needed length even when the buffer is too small.
//
// # Safety
// `solution` must be a live handle and `out_xy` must point to `capacity`
// writable doubles.
enum MaStatus ma_solution_positions(const struct MaSolution *solution,
                                    double *out_xy,
                                    size_t capacity,
                                    size_t *required);

// Copies the global-best penalized fitness after each iteration, starting
// with the initial swarm (`max_iter + 1` values).
//
// # Safety
// As for `ma_solution_positions`.
enum MaStatus ma_solution_trace(const struct MaSolution *solution,
                                double *out,
                                size_t capacity,
                                size_t *required);

// # Safety
// `solution` must be null or a handle not yet freed.
void ma_solution_free(struct MaSolution *solution);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* MA_AIRCOMP_H */
