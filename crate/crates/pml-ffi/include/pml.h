/* C interface for the pml lane-keeping stack. Generated; do not edit. */

#ifndef PML_H
#define PML_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Outcome of a call. Anything but `Ok` leaves a message readable through
 * `pml_last_error_message` on the same thread.
 */
typedef enum PmlStatus {
  PML_STATUS_OK = 0,
  /**
   * A required pointer argument was null.
   */
  PML_STATUS_NULL_ARGUMENT = 1,
  /**
   * Arguments were structurally valid but semantically rejected.
   */
  PML_STATUS_INVALID_ARGUMENT = 2,
  /**
   * A name (track, file) did not resolve.
   */
  PML_STATUS_NOT_FOUND = 3,
  /**
   * The operating system refused a file operation.
   */
  PML_STATUS_IO = 4,
  /**
   * A file existed but its contents did not parse.
   */
  PML_STATUS_PARSE = 5,
  /**
   * A computation produced non-finite values.
   */
  PML_STATUS_NUMERIC = 6,
  /**
   * A policy or model failed while running.
   */
  PML_STATUS_FAULT = 7,
  /**
   * A bug: the library panicked and the unwind was caught at the
   * boundary.
   */
  PML_STATUS_PANIC = 8,
} PmlStatus;

/**
 * Where a simulation or episode stands.
 */
typedef enum PmlEpisodeStatus {
  PML_EPISODE_STATUS_RUNNING = 0,
  PML_EPISODE_STATUS_SUCCESS = 1,
  PML_EPISODE_STATUS_OFF_LANE = 2,
  PML_EPISODE_STATUS_TIMEOUT = 3,
} PmlEpisodeStatus;

/**
 * Opaque steering policy.
 */
typedef struct PmlAgent PmlAgent;

/**
 * Opaque run configuration.
 */
typedef struct PmlConfig PmlConfig;

/**
 * Opaque simulator session: one vehicle on one track.
 */
typedef struct PmlSim PmlSim;

/**
 * Final account of one closed-loop episode.
 */
typedef struct PmlEpisodeReport {
  enum PmlEpisodeStatus status;
  size_t steps;
  /**
   * Mean distance to the lane center over the episode; NaN if no step
   * was recorded.
   */
  double avg_deviation;
  double final_x;
  double final_y;
  double final_heading;
} PmlEpisodeReport;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Library version as a static NUL-terminated string.
 */
const char *pml_version(void);

/**
 * Static name of a status code, for logging.
 */
const char *pml_status_name(enum PmlStatus status);

/**
 * Message behind the most recent failure on this thread. The pointer
 * stays valid until the next failing call on the same thread. Never null;
 * empty before the first failure.
 */
const char *pml_last_error_message(void);

/**
 * Creates the default run configuration.
 */
enum PmlStatus pml_config_default(struct PmlConfig **out);

/**
 * Loads a run configuration from a TOML file.
 */
enum PmlStatus pml_config_load(const char *path, struct PmlConfig **out);

/**
 * Side length of the square camera frame, in pixels.
 */
enum PmlStatus pml_config_image_size(const struct PmlConfig *cfg, size_t *out);

/**
 * Releases a configuration. Null is a no-op.
 */
void pml_config_free(struct PmlConfig *cfg);

/**
 * Structural similarity of two row-major grayscale buffers of
 * `width * height` doubles in [0, 1]. Writes a score in [-1, 1].
 */
enum PmlStatus pml_ssim(const double *a,
                        const double *b,
                        size_t width,
                        size_t height,
                        double *out_score);

/**
 * Creates a simulator session on a named track, parked at the canonical
 * start pose.
 */
enum PmlStatus pml_sim_new(const char *track, const struct PmlConfig *cfg, struct PmlSim **out);

/**
 * Puts the vehicle back at the start pose and the step counter to zero.
 */
enum PmlStatus pml_sim_reset(struct PmlSim *sim);

/**
 * Number of doubles `pml_sim_observe` writes: image_size squared.
 */
enum PmlStatus pml_sim_observation_len(const struct PmlSim *sim, size_t *out);

/**
 * Renders the current camera frame into `buf`, row-major, values in
 * [0, 1]. `len` must equal the value from `pml_sim_observation_len`.
 */
enum PmlStatus pml_sim_observe(const struct PmlSim *sim, double *buf, size_t len);

/**
 * Advances one step under a steering value in [-1, 1]. Fails once the
 * episode has ended; `pml_sim_reset` starts a fresh one.
 */
enum PmlStatus pml_sim_step(struct PmlSim *sim, double steering);

/**
 * Current vehicle pose.
 */
enum PmlStatus pml_sim_pose(const struct PmlSim *sim, double *x, double *y, double *heading);

/**
 * Distance from the lane center, in meters.
 */
enum PmlStatus pml_sim_deviation(const struct PmlSim *sim, double *out);

/**
 * Whether the session is still running, has reached the goal, or has
 * left the lane.
 */
enum PmlStatus pml_sim_status(const struct PmlSim *sim, enum PmlEpisodeStatus *out);

/**
 * Steps taken since the last reset.
 */
enum PmlStatus pml_sim_step_count(const struct PmlSim *sim, size_t *out);

/**
 * Releases a simulator session. Null is a no-op.
 */
void pml_sim_free(struct PmlSim *sim);

/**
 * Scripted lookahead controller for a named track.
 */
enum PmlStatus pml_agent_expert(const char *track,
                                const struct PmlConfig *cfg,
                                struct PmlAgent **out);

/**
 * Action-sweep agent over the exact simulator model of a named track.
 * Needs `pml_agent_note_state` before each `pml_agent_act`.
 */
enum PmlStatus pml_agent_oracle(const char *track,
                                const struct PmlConfig *cfg,
                                struct PmlAgent **out);

/**
 * Action-sweep agent over a trained forward model. `pref_path` may be
 * null, in which case the goal frame is rendered from the track's own
 * lane geometry; otherwise it names a single-frame corpus.
 */
enum PmlStatus pml_agent_learned(const char *model_path,
                                 const char *pref_path,
                                 const char *track,
                                 const struct PmlConfig *cfg,
                                 struct PmlAgent **out);

/**
 * Behavioral-cloning agent from a trained parameter store.
 */
enum PmlStatus pml_agent_bc(const char *model_path, struct PmlAgent **out);

/**
 * Hands the agent the true vehicle state. Only privileged agents (the
 * oracle sweep, the expert) consume it; others ignore the call.
 */
enum PmlStatus pml_agent_note_state(struct PmlAgent *agent,
                                    double x,
                                    double y,
                                    double heading,
                                    double speed);

/**
 * Picks a steering value in [-1, 1] for a row-major grayscale frame of
 * `width * height` doubles in [0, 1].
 */
enum PmlStatus pml_agent_act(struct PmlAgent *agent,
                             const double *obs,
                             size_t width,
                             size_t height,
                             double *out_steering);

/**
 * Releases an agent. Null is a no-op.
 */
void pml_agent_free(struct PmlAgent *agent);

/**
 * Drives one full episode on a named track and fills `report`. A
 * `max_steps` of zero picks an on-pace budget for the track. The agent
 * handle stays valid and keeps any state it built up.
 */
enum PmlStatus pml_run_episode(const char *track,
                               struct PmlAgent *agent,
                               const struct PmlConfig *cfg,
                               size_t max_steps,
                               struct PmlEpisodeReport *report);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* PML_H */
