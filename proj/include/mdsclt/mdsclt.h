#ifndef MDSCLT_H
#define MDSCLT_H

#include <stddef.h>
#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

#if defined(_WIN32)
#define MDSCLT_API __declspec(dllexport)
#else
#define MDSCLT_API __attribute__((visibility("default")))
#endif

typedef enum mdsclt_status {
  MDSCLT_OK = 0,
  MDSCLT_INVALID_ARGUMENT = 1,
  MDSCLT_NUMERICAL = 2,
  MDSCLT_NOT_CONVERGED = 3,
  MDSCLT_IO = 4,
  MDSCLT_INTERNAL = 5
} mdsclt_status;

/* Dense row-major matrix owned by the library. */
typedef struct mdsclt_matrix mdsclt_matrix;

/* Message for the last non-OK status on this thread ("" if none). */
MDSCLT_API const char* mdsclt_last_error(void);
MDSCLT_API const char* mdsclt_version(void);

/* data may be NULL for a zero matrix. */
MDSCLT_API mdsclt_status mdsclt_matrix_create(size_t rows, size_t cols, const double* data, mdsclt_matrix** out);
MDSCLT_API void mdsclt_matrix_free(mdsclt_matrix* m);
MDSCLT_API size_t mdsclt_matrix_rows(const mdsclt_matrix* m);
MDSCLT_API size_t mdsclt_matrix_cols(const mdsclt_matrix* m);
MDSCLT_API const double* mdsclt_matrix_data(const mdsclt_matrix* m);

MDSCLT_API mdsclt_status mdsclt_matrix_read_csv(const char* path, mdsclt_matrix** out);
/* Temporary file plus rename. */
MDSCLT_API mdsclt_status mdsclt_matrix_write_csv(const char* path, const mdsclt_matrix* m);
MDSCLT_API mdsclt_status mdsclt_write_text(const char* path, const char* text);

MDSCLT_API void mdsclt_string_free(char* s);

/* distribution_json: e.g. {"three_point_mass": {}} or {"gaussian": {"mean": [0,0], "covariance": [[1,0],[0,1]]}}.
   labels (n x 1) may be NULL; it is set to NULL when the distribution has no classes. */
MDSCLT_API mdsclt_status mdsclt_sample_points(const char* distribution_json, size_t n, uint64_t seed,
                                              mdsclt_matrix** points, mdsclt_matrix** labels);

MDSCLT_API mdsclt_status mdsclt_distance_matrix(const mdsclt_matrix* points, mdsclt_matrix** out);

/* d must be a symmetric hollow distance matrix. delta may be NULL; it is set
   to NULL for the models that only define squared dissimilarities. */
MDSCLT_API mdsclt_status mdsclt_perturb(const mdsclt_matrix* d, const char* noise_json, uint64_t seed,
                                        mdsclt_matrix** delta_sq, mdsclt_matrix** delta);

/* sidecar_json receives {"n", "eigenvalues", "all_top_eigenvalues", "flags", "warnings"}. */
MDSCLT_API mdsclt_status mdsclt_embed(const mdsclt_matrix* delta_sq, size_t d, int allow_deficient,
                                      mdsclt_matrix** config, char** sidecar_json);

MDSCLT_API mdsclt_status mdsclt_select_dim(const mdsclt_matrix* delta_sq, size_t max_d, char** result_json);

/* options_json may be NULL: {"init": "cmds" | "random", "seed": int, "max_iter": int, "tol": real}. */
MDSCLT_API mdsclt_status mdsclt_rawstress(const mdsclt_matrix* delta, size_t d, const char* options_json,
                                          mdsclt_matrix** config, char** result_json);

/* options_json may be NULL: {"q_n": real, "z_list": [[...]], "mc_draws": int, "seed": int,
   "hetero": {"i": int, "n": int}} (the last one for model1_hetero). */
MDSCLT_API mdsclt_status mdsclt_theory_cov(const char* distribution_json, const char* noise_json,
                                           const char* options_json, char** result_json);

/* threads == 0 keeps the config's value. */
MDSCLT_API mdsclt_status mdsclt_mc_run(const char* config_json, unsigned threads, char** report_json);

/* Growth check, six-term split and scaling ratios for the config's n_list,
   plus the bias experiment when the config asks for it. */
MDSCLT_API mdsclt_status mdsclt_diagnose(const char* config_json, unsigned threads, char** result_json);

/* kind: "ellipses", "scree", "bias-trend", "bound-ratios"; n == 0 picks the largest. */
MDSCLT_API mdsclt_status mdsclt_plot(const char* report_json, const char* kind, size_t n, char** svg);

#ifdef __cplusplus
}
#endif

#endif
