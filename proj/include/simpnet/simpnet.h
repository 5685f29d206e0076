/* C interface of the simpnet shared library.
 *
 * Every function returning simp_status leaves a message for the calling
 * thread in simp_last_error() on failure. Handles are opaque and owned by
 * the caller; release them with the matching *_free function. Strings
 * returned through char** are released with simp_string_free. Joint
 * vectors are arrays of 6 doubles in radians.
 */
#ifndef SIMPNET_H
#define SIMPNET_H

#include <stddef.h>
#include <stdint.h>

#if defined(SIMPNET_BUILD_SHARED)
#define SIMP_API __attribute__((visibility("default")))
#else
#define SIMP_API
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum simp_status {
  SIMP_OK = 0,
  SIMP_ERR_INVALID_ARGUMENT = 1,
  SIMP_ERR_INVALID_QUERY = 2,
  SIMP_ERR_IO = 3,
  SIMP_ERR_FORMAT = 4,
  SIMP_ERR_RESOURCE_EXHAUSTED = 5,
  SIMP_ERR_NUMERIC = 6,
  SIMP_ERR_INTERNAL = 7
} simp_status;

typedef enum simp_planner {
  SIMP_PLANNER_RRT = 0,
  SIMP_PLANNER_BIRRT = 1,
  SIMP_PLANNER_RRT_STAR = 2,
  SIMP_PLANNER_INFORMED_RRT_STAR = 3,
  SIMP_PLANNER_SIMPNET = 4
} simp_planner;

#define SIMP_DOF 6
#define SIMP_FRAME_COUNT 7

typedef struct simp_robot simp_robot;
typedef struct simp_world simp_world;
typedef struct simp_weights simp_weights;
typedef struct simp_plan_result simp_plan_result;

/* Receives progress lines from long-running calls (collect, train, bench). */
typedef void (*simp_progress_fn)(const char* message, void* user);

SIMP_API const char* simp_version(void);
SIMP_API const char* simp_status_name(simp_status status);
SIMP_API const char* simp_last_error(void);
SIMP_API void simp_string_free(char* s);
/* Process-wide; pass NULL to disable. */
SIMP_API void simp_set_progress(simp_progress_fn fn, void* user);

/* Robot model. */
SIMP_API simp_status simp_robot_default(simp_robot** out);
SIMP_API simp_status simp_robot_load(const char* path, simp_robot** out);
SIMP_API simp_status simp_robot_save(const simp_robot* robot, const char* path);
SIMP_API void simp_robot_free(simp_robot* robot);
/* positions receives SIMP_FRAME_COUNT xyz triples, base frame first. */
SIMP_API simp_status simp_robot_fk(const simp_robot* robot, const double q[SIMP_DOF], double positions[3 * SIMP_FRAME_COUNT]);

/* Workspaces. profile is "simple" or "complex". */
SIMP_API simp_status simp_world_empty(const char* profile, simp_world** out);
SIMP_API simp_status simp_world_generate(const simp_robot* robot, const char* profile, uint64_t seed, const char* id,
                                         simp_world** out);
SIMP_API simp_status simp_world_load(const char* path, simp_world** out);
SIMP_API simp_status simp_world_save(const simp_world* world, const char* path);
SIMP_API void simp_world_free(simp_world* world);
SIMP_API simp_status simp_world_obstacle_count(const simp_world* world, size_t* out);
SIMP_API simp_status simp_world_in_collision(const simp_world* world, const simp_robot* robot,
                                             const double q[SIMP_DOF], int* out);
SIMP_API simp_status simp_world_clearance(const simp_world* world, const simp_robot* robot, const double q[SIMP_DOF],
                                          double* out);
SIMP_API simp_status simp_motion_valid(const simp_world* world, const simp_robot* robot, const double a[SIMP_DOF],
                                       const double b[SIMP_DOF], int* out);
/* Draws a collision-free configuration; SIMP_ERR_RESOURCE_EXHAUSTED when none is found. */
SIMP_API simp_status simp_sample_free(const simp_world* world, const simp_robot* robot, uint64_t seed,
                                      double q[SIMP_DOF]);

/* Heuristic weights. feature_mode is "full" or "relaxed_fk". */
SIMP_API simp_status simp_weights_init(const char* feature_mode, size_t obstacle_capacity, uint64_t seed,
                                       simp_weights** out);
SIMP_API simp_status simp_weights_load(const char* path, simp_weights** out);
SIMP_API simp_status simp_weights_save(const simp_weights* weights, const char* path);
SIMP_API void simp_weights_free(simp_weights* weights);

/* Planning. params_json may be NULL (defaults) or a JSON object of planner
 * parameters; weights may be NULL except for SIMP_PLANNER_SIMPNET. A query
 * with a colliding endpoint fails with SIMP_ERR_INVALID_QUERY; a search that
 * finds nothing succeeds with simp_plan_result_success() == 0. */
SIMP_API simp_status simp_planner_parse(const char* name, simp_planner* out);
SIMP_API const char* simp_planner_name(simp_planner planner);
SIMP_API simp_status simp_plan(const simp_world* world, const simp_robot* robot, simp_planner planner,
                               const double start[SIMP_DOF], const double goal[SIMP_DOF],
                               const simp_weights* weights, const char* params_json, uint64_t seed,
                               simp_plan_result** out);
SIMP_API int simp_plan_result_success(const simp_plan_result* result);
SIMP_API size_t simp_plan_result_waypoint_count(const simp_plan_result* result);
SIMP_API simp_status simp_plan_result_waypoint(const simp_plan_result* result, size_t index, double q[SIMP_DOF]);
SIMP_API double simp_plan_result_cost(const simp_plan_result* result);
SIMP_API double simp_plan_result_wall_time(const simp_plan_result* result);
SIMP_API size_t simp_plan_result_iterations(const simp_plan_result* result);
/* Writes a path file; fails with SIMP_ERR_INVALID_ARGUMENT for an unsuccessful result. */
SIMP_API simp_status simp_plan_result_save(const simp_plan_result* result, const char* path);
SIMP_API void simp_plan_result_free(simp_plan_result* result);

/* Sum of joint-space distances; waypoints holds count * SIMP_DOF doubles. */
SIMP_API simp_status simp_path_cost(const double* waypoints, size_t count, double* out);

/* Data pipeline over a data root (worlds/<suite>, paths/<suite>, pairs/<suite>).
 * Option and config arguments are JSON objects or NULL for defaults; summaries
 * come back as JSON strings. */
SIMP_API simp_status simp_gen_worlds(const simp_robot* robot, const char* data_root, const char* suite,
                                     const char* profile, size_t count, uint64_t seed, char** summary_json);
SIMP_API simp_status simp_collect(const simp_robot* robot, const char* data_root, const char* suite,
                                  size_t paths_per_world, uint64_t seed, const char* options_json,
                                  char** summary_json);
/* suites: comma-separated suite names whose pairs are trained on. resume_path may be NULL. */
SIMP_API simp_status simp_train(const simp_robot* robot, const char* data_root, const char* suites,
                                const char* train_config_json, const char* heuristic_json, const char* out_path,
                                const char* resume_path, char** report_json);
SIMP_API simp_status simp_bench(const simp_robot* robot, const char* data_root, const char* spec_json,
                                const char* out_dir, char** summary_json);
SIMP_API simp_status simp_bench_replay(const char* bundle_dir, const char* out_dir, char** summary_json);
/* Markdown report rendered from a bench directory's CSV files. */
SIMP_API simp_status simp_report(const char* bench_dir, char** markdown);

#ifdef __cplusplus
}
#endif

#endif
