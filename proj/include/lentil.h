#ifndef LENTIL_H
#define LENTIL_H

#include <stddef.h>
#include <stdint.h>

#if defined(LENTIL_BUILDING)
#define LENTIL_API __attribute__((visibility("default")))
#else
#define LENTIL_API
#endif

#ifdef __cplusplus
extern "C" {
#endif

/* Every call returns a status; on failure lentil_last_error() holds the
 * message for the calling thread until its next failing call. */
typedef enum lentil_status
{
    LENTIL_OK = 0,
    LENTIL_ERR_INVALID_ARGUMENT = 1,
    LENTIL_ERR_PARSE = 2,
    LENTIL_ERR_IO = 3,
    LENTIL_ERR_SOLVER = 4,
    LENTIL_ERR_CONSTRAINT = 5,
    LENTIL_ERR_DEGENERATE = 6,
    LENTIL_ERR_INTERNAL = 99
} lentil_status;

typedef enum lentil_verdict
{
    LENTIL_PASS = 0,
    LENTIL_FAIL = 1
} lentil_verdict;

typedef struct lentil_model lentil_model;           /* manifold model */
typedef struct lentil_constants lentil_constants;   /* fundamental + derived constants */
typedef struct lentil_tolerances lentil_tolerances; /* numerical tolerances */
typedef struct lentil_cloud lentil_cloud;           /* unlabeled arrival samples */
typedef struct lentil_separation lentil_separation; /* per-source arrival functions */
typedef struct lentil_space lentil_space;           /* recovered discrete space */

LENTIL_API const char* lentil_version(void);
LENTIL_API const char* lentil_last_error(void);
/* Frees strings returned through char** out-parameters. */
LENTIL_API void lentil_string_free(char* s);
/* Whole-file text I/O through the library, so that every access lands in
 * the LENTIL_AUDIT_LOG trail. */
LENTIL_API lentil_status lentil_read_file(const char* path, char** text);
LENTIL_API lentil_status lentil_write_file(const char* path, const char* text);
/* 0 restores the default (LENTIL_THREADS or hardware concurrency). */
LENTIL_API void lentil_set_threads(int n);

/* Tolerances: NULL json gives the defaults. */
LENTIL_API lentil_status lentil_tolerances_create(const char* json, lentil_tolerances** out);
LENTIL_API lentil_status lentil_tolerances_to_json(const lentil_tolerances* t, char** json);
LENTIL_API void lentil_tolerances_free(lentil_tolerances* t);

/* Manifold config {kind, radius, kappa?, conformal?}. */
LENTIL_API lentil_status lentil_model_create(const char* json, lentil_model** out);
LENTIL_API lentil_status lentil_model_to_json(const lentil_model* m, char** json);
LENTIL_API lentil_status lentil_model_distance(const lentil_model* m, double px, double py, double qx, double qy,
                                               double* out);
LENTIL_API void lentil_model_free(lentil_model* m);

/* Constants from a fundamental-constants JSON object, or estimated from a
 * model (spec_json may be NULL). */
LENTIL_API lentil_status lentil_constants_create(const char* json, lentil_constants** out);
LENTIL_API lentil_status lentil_constants_estimate(const lentil_model* m, const char* spec_json, uint64_t seed,
                                                   lentil_constants** out);
/* Flat object: the nine fundamental constants, "estimated", then derived. */
LENTIL_API lentil_status lentil_constants_to_json(const lentil_constants* c, char** json);
LENTIL_API void lentil_constants_free(lentil_constants* c);

/* Forward simulation. scene_json: {"sources": [...]} or {"poisson": {...}};
 * forward_json: {grid_size, t_min?, t_max?, noise_amplitude?}. The ground
 * truth goes to truth_path (sidecar CSV) when it is not NULL. */
LENTIL_API lentil_status lentil_simulate(const lentil_model* m, const char* scene_json, const char* forward_json,
                                         uint64_t seed, const char* truth_path, lentil_cloud** out);
LENTIL_API lentil_status lentil_cloud_read(const char* csv_path, lentil_cloud** out);
LENTIL_API lentil_status lentil_cloud_write(const lentil_cloud* c, const char* csv_path);
/* {"header": {...}, "samples": n} */
LENTIL_API lentil_status lentil_cloud_info(const lentil_cloud* c, char** json);
LENTIL_API void lentil_cloud_free(lentil_cloud* c);

LENTIL_API lentil_status lentil_disentangle(const lentil_cloud* c, const lentil_tolerances* t,
                                            lentil_separation** out);
LENTIL_API lentil_status lentil_separation_to_json(const lentil_separation* s, char** json);
LENTIL_API lentil_status lentil_separation_from_json(const char* json, lentil_separation** out);
/* Plot data: node, boundary_param, function, time. */
LENTIL_API lentil_status lentil_separation_write_csv(const lentil_separation* s, const char* path);
LENTIL_API void lentil_separation_free(lentil_separation* s);

/* Merges spatial duplicates and assembles distances and time differences.
 * An empty separation yields an empty space. */
LENTIL_API lentil_status lentil_observables(const lentil_separation* s, const lentil_tolerances* t,
                                            lentil_space** out);
LENTIL_API lentil_status lentil_space_to_json(const lentil_space* s, char** json);
LENTIL_API lentil_status lentil_space_from_json(const char* json, lentil_space** out);
LENTIL_API lentil_status lentil_space_size(const lentil_space* s, size_t* n);
/* dd-functions of the given pairs (flat array of 2*npairs indices). */
LENTIL_API lentil_status lentil_space_write_dd_csv(const lentil_space* s, const size_t* pairs, size_t npairs,
                                                   const char* path);
LENTIL_API void lentil_space_free(lentil_space* s);

/* Reconstruction report. With sweep != 0 epsilon1 is ignored and the
 * smallest certified value on the data grid is used. verdict is FAIL when
 * the report is NOT-CERTIFIED. */
LENTIL_API lentil_status lentil_reconstruct(const lentil_space* s, const lentil_constants* c,
                                            const lentil_tolerances* t, double epsilon1, int sweep, char** report,
                                            lentil_verdict* verdict);
/* Time windows over an ascending T list: one report per window. */
LENTIL_API lentil_status lentil_window(const lentil_cloud* cl, const lentil_constants* c, const lentil_tolerances* t,
                                       const double* t_list, size_t n, char** json);

/* Labeled GH bounds between two space files' JSON. */
LENTIL_API lentil_status lentil_lgh(const char* x_json, const char* y_json, char** json);

/* Ground-truth evaluation. options_json: {epsilon1?, density_samples?,
 * lgh_samples?, reverse?: {epsilon, ...}, lentils?: {lentils, cover_points}}.
 * Reads truth_path; never called by the inversion commands. */
LENTIL_API lentil_status lentil_evaluate(const lentil_model* m, const lentil_cloud* cl, const char* truth_path,
                                         const lentil_constants* c, const lentil_tolerances* t,
                                         const char* options_json, uint64_t seed, char** json,
                                         lentil_verdict* verdict);

/* Acceptance suite. Each finished criterion is reported through the
 * callback (may be NULL) as one line of text. options_json may be NULL. */
typedef void (*lentil_line_callback)(const char* line, void* user);
LENTIL_API lentil_status lentil_selftest(const char* options_json, lentil_line_callback cb, void* user, char** json,
                                         lentil_verdict* verdict);

#ifdef __cplusplus
}
#endif

#endif
