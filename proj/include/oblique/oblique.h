/* C interface to the oblique library.
 *
 * All objects are opaque and owned by the caller once returned; free them
 * with the matching *_free function. Every call returns an obq_status; on
 * failure obq_last_error() holds a message for the calling thread. */
#ifndef OBLIQUE_H
#define OBLIQUE_H

#include <stddef.h>

#if defined(OBQ_BUILDING_LIBRARY)
#define OBQ_API __attribute__((visibility("default")))
#else
#define OBQ_API
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum obq_status {
    OBQ_OK = 0,
    OBQ_ERR_PARSE = 1,
    OBQ_ERR_ASSUMPTION = 2,
    OBQ_ERR_ELLIPTICITY = 3,
    OBQ_ERR_MONOTONICITY = 4,
    OBQ_ERR_SINGULAR = 5,
    OBQ_ERR_NONCONVERGENCE = 6,
    OBQ_ERR_UNSUPPORTED_DEGENERATE = 7,
    OBQ_ERR_RESOLUTION = 8,
    OBQ_ERR_TABLE_RANGE = 9,
    OBQ_ERR_OUTER_NONCONVERGENCE = 10,
    OBQ_ERR_MONOTONICITY_VIOLATION = 11,
    OBQ_ERR_INVALID_ARGUMENT = 12,
    OBQ_ERR_IO = 13,
    OBQ_ERR_INTERNAL = 14
} obq_status;

typedef enum obq_method {
    OBQ_METHOD_AUTO = 0,
    OBQ_METHOD_DISCOUNT = 1,
    OBQ_METHOD_TRUNCATION = 2,
    OBQ_METHOD_VISCOSITY = 3
} obq_method;

typedef struct obq_problem obq_problem;
typedef struct obq_result obq_result;

typedef struct obq_options {
    size_t n1, n2;           /* solve grid */
    double tol_d;            /* ergodic constant tolerance */
    double tol_solver;       /* Howard nonlinear residual */
    int method;              /* obq_method */
    int k_min, k_max;        /* discount lambda = 2^-k */
    int max_doublings;       /* truncation heights */
    int early_stop;          /* 0 runs every schedule step */
    int has_x0;              /* pin u at x0 instead of the centroid */
    double x0[2];
    size_t cell_n1;          /* cell columns per period */
    double cell_r0;          /* first cell truncation height */
    int cell_max_doublings;  /* cell truncation heights */
    size_t knots[3];         /* law table knots in x1, r, p1 (homogenize) */
    double r_range[2];       /* table command r range */
    double p1_range[2];      /* table command p1 range */
} obq_options;

OBQ_API void obq_options_default(obq_options* opt);

OBQ_API const char* obq_version(void);
OBQ_API const char* obq_status_name(obq_status s);
/* Message and error code name of the last failure on this thread. */
OBQ_API const char* obq_last_error(void);
OBQ_API const char* obq_last_error_code(void);

/* Problem specs are validated on the probe grid n1 x n2. */
OBQ_API obq_status obq_problem_parse(const char* json, size_t n1, size_t n2, obq_problem** out);
OBQ_API obq_status obq_problem_load(const char* path, size_t n1, size_t n2, obq_problem** out);
OBQ_API void obq_problem_free(obq_problem* p);
OBQ_API const char* obq_problem_name(const obq_problem* p);

/* Checks a spec file without failing on violations: *out describes them and
 * *ok is 1 when none were found. */
OBQ_API obq_status obq_validate(const char* path, size_t n1, size_t n2, obq_result** out, int* ok);

OBQ_API obq_status obq_ergodic(const obq_problem* p, const obq_options* opt, obq_result** out);
OBQ_API obq_status obq_cell(const obq_problem* p, double x1, double r, double p1, double p2,
                            const obq_options* opt, obq_result** out);
/* Table over x1 knots spanning the domain and the r / p1 ranges of opt. */
OBQ_API obq_status obq_table(const obq_problem* p, const obq_options* opt, obq_result** out);
OBQ_API obq_status obq_homogenize(const obq_problem* p, const double* eps, size_t n_eps,
                                  const obq_options* opt, obq_result** out);

/* When a schedule stops short of its tolerance the call returns
 * OBQ_ERR_NONCONVERGENCE and still sets *out, with converged = 0. */
OBQ_API double obq_result_d(const obq_result* r);
OBQ_API int obq_result_converged(const obq_result* r);
/* 1 when the result is a band [lo, hi] rather than a value. */
OBQ_API int obq_result_band(const obq_result* r, double* lo, double* hi);
OBQ_API const char* obq_result_json(const obq_result* r);
OBQ_API size_t obq_result_artifact_count(const obq_result* r);
OBQ_API const char* obq_result_artifact_name(const obq_result* r, size_t i);
/* Text of a named artifact (e.g. "schedule.csv"), or NULL. */
OBQ_API const char* obq_result_artifact(const obq_result* r, const char* name);
OBQ_API void obq_result_free(obq_result* r);

#ifdef __cplusplus
}
#endif

#endif
