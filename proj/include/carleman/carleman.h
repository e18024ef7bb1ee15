/* C interface to the Carleman toolbox.
 *
 * Every object is an opaque handle created by a clm_*_new/parse function and
 * released by the matching clm_*_free.  Calls return CLM_OK or an error code;
 * on failure clm_last_error() gives a thread-local description of what went
 * wrong.  Strings returned through char** are heap-allocated and must be
 * released with clm_string_free.
 */
#ifndef CARLEMAN_H
#define CARLEMAN_H

#include <stddef.h>
#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

#if defined(CARLEMAN_BUILD_SHARED)
#define CLM_API __attribute__((visibility("default")))
#else
#define CLM_API
#endif

typedef enum clm_status {
  CLM_OK = 0,
  CLM_ERR_PARSE = 1,
  CLM_ERR_DIMENSION = 2,
  CLM_ERR_DOMAIN = 3,
  CLM_ERR_NUMERIC = 4,
  CLM_ERR_INVARIANT = 5,
  CLM_ERR_SCHEDULE = 6,
  CLM_ERR_CONVERGENCE = 7,
  CLM_ERR_IO = 8,
  CLM_ERR_CONFIG = 9,
  CLM_ERR_VERDICT = 10,
  CLM_ERR_OTHER = 99
} clm_status;

/* Message for the most recent failure on this thread ("" if none). */
CLM_API const char* clm_last_error(void);

CLM_API void clm_string_free(char* s);

/* --------------------------------------------------------------- fields -- */

typedef struct clm_expr clm_expr;

/* Parses a scalar field over `dim` variables.  With time_space != 0 the
 * variables are named t, x1, ..; otherwise x1, x2, ...  */
CLM_API clm_status clm_expr_parse(const char* source, int dim, int time_space,
                                  clm_expr** out);
CLM_API void clm_expr_free(clm_expr* e);

/* Value, gradient (dim entries) and packed upper-triangle Hessian
 * (dim*(dim+1)/2 entries) at `point`.  Any output pointer may be NULL. */
CLM_API clm_status clm_expr_eval_jet2(const clm_expr* e, const double* point,
                                      int dim, double* value, double* grad,
                                      double* hess_upper);

/* -------------------------------------------------------------- symbols -- */

typedef struct clm_symbol clm_symbol;

/* Wave-type symbol -xi_t^2 + sum g^{jk}(x) xi_j xi_k over t and
 * spatial_dim space variables; g_upper holds the d*(d+1)/2 upper-triangle
 * coefficient expressions in x1..xd (row-major). */
CLM_API clm_status clm_symbol_wave(int spatial_dim, const char* const* g_upper,
                                   clm_symbol** out);

/* General quadratic symbol xi^T A(x) xi over `dim` variables; with
 * time_space != 0 coefficients may use t as the first variable. */
CLM_API clm_status clm_symbol_general(int dim, const char* const* a_upper,
                                      int time_space, clm_symbol** out);

CLM_API void clm_symbol_free(clm_symbol* s);

CLM_API clm_status clm_symbol_dim(const clm_symbol* s, int* out_dim);

CLM_API clm_status clm_eval_p2(const clm_symbol* s, const double* x,
                               const double* xi, int dim, double* out);

/* Bracket values of the symbol against the weight `psi` at (x, xi, tau).
 * out[0..7] = p2, b1, b2, Re p_psi, Im p_psi / tau, Re {p_psi, psi},
 *             Im {p_psi, psi}, c_psi. */
CLM_API clm_status clm_bracket_suite(const clm_symbol* s, const clm_expr* psi,
                                     const double* x, const double* xi,
                                     int dim, double tau, double out[8]);

/* --------------------------------------------------------------- checks -- */

/* Pseudoconvexity check of the oriented surface {psi = psi(x0)} at x0.
 * mode_xit0 != 0 restricts to xi_t = 0 (wave-type symbols only).  On
 * success *report_json holds the full structured report. */
CLM_API clm_status clm_check_surface(const clm_symbol* s, const clm_expr* psi,
                                     const double* x0, int dim, int mode_xit0,
                                     char** report_json);

/* Same but for the weight function itself (no constraint set). */
CLM_API clm_status clm_check_function(const clm_symbol* s, const clm_expr* phi,
                                      const double* x0, int dim, int mode_xit0,
                                      char** report_json);

/* ------------------------------------------------------------- scenario -- */

/* Runs a scenario described by a TOML config, writing report.json and all
 * artifacts into out_dir.  Returns CLM_ERR_VERDICT if the scenario ran but
 * an expected verdict did not match.  *report_json (optional) receives the
 * report text. */
CLM_API clm_status clm_run_scenario(const char* config_path, const char* out_dir,
                                    uint64_t seed, int threads,
                                    char** report_json);

#ifdef __cplusplus
} /* extern "C" */
#endif

#endif /* CARLEMAN_H */
