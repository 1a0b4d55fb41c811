#ifndef CIUGRAPH_H
#define CIUGRAPH_H

/* Generated by cbindgen from src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

// Result code of every fallible call.
typedef enum CiuStatus {
  CIU_STATUS_OK = 0,
  // A required pointer argument was NULL.
  CIU_STATUS_NULL_ARGUMENT = 1,
  // A string argument was not valid UTF-8.
  CIU_STATUS_INVALID_UTF8 = 2,
  // The transcript could not be read (bad encoding, malformed CHAT).
  CIU_STATUS_INPUT = 3,
  // A lexicon, coordinate or lemma-rule table failed to load.
  CIU_STATUS_CONFIG = 4,
  // Graph, feature or statistics computation failed.
  CIU_STATUS_COMPUTE = 5,
  // The library panicked; the handle should not be reused.
  CIU_STATUS_PANIC = 6,
} CiuStatus;

// Opaque pipeline handle.
typedef struct CiuPipeline CiuPipeline;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Builds a pipeline. Each path may be NULL to use `$CIUGRAPH_CONFIG_DIR`
// or the bundled default table.
//
// # Safety
// String arguments are NULL or NUL-terminated; `out` is valid for one
// pointer write.
enum CiuStatus ciu_pipeline_new(const char *lexicon_path,
                                const char *coords_path,
                                const char *lemma_rules_path,
                                struct CiuPipeline **out);

// Releases a pipeline. NULL is ignored.
//
// # Safety
// `pipeline` is NULL or a handle from [`ciu_pipeline_new`] not yet freed.
void ciu_pipeline_free(struct CiuPipeline *pipeline);

// Extracts the CIU sequence of a CHAT or plain-text transcript as JSON.
//
// # Safety
// `pipeline` is a live handle; `transcript_id` is NUL-terminated; `data`
// points to `len` bytes; `out_json` is valid for one pointer write.
enum CiuStatus ciu_extract(const struct CiuPipeline *pipeline,
                           const char *transcript_id,
                           const uint8_t *data,
                           size_t len,
                           char **out_json);

// Computes the twelve graph features of a transcript as JSON; features
// of an empty sequence are null.
//
// # Safety
// As for [`ciu_extract`].
enum CiuStatus ciu_features(const struct CiuPipeline *pipeline,
                            const char *transcript_id,
                            const uint8_t *data,
                            size_t len,
                            char **out_json);

// Renders the spatio-semantic graph of a transcript as DOT.
//
// # Safety
// As for [`ciu_extract`].
enum CiuStatus ciu_render_dot(const struct CiuPipeline *pipeline,
                              const char *transcript_id,
                              const uint8_t *data,
                              size_t len,
                              char **out_dot);

// Renders the spatio-semantic graph of a transcript as SVG.
//
// # Safety
// As for [`ciu_extract`].
enum CiuStatus ciu_render_svg(const struct CiuPipeline *pipeline,
                              const char *transcript_id,
                              const uint8_t *data,
                              size_t len,
                              char **out_svg);

// Upper tail P(F > f) of the F distribution with (df1, df2) degrees of
// freedom.
//
// # Safety
// `out` is valid for one double write.
enum CiuStatus ciu_f_sf(double f, double df1, double df2, double *out);

// Releases a string returned by this library. NULL is ignored.
//
// # Safety
// `s` is NULL or a string from this library not yet freed.
void ciu_string_free(char *s);

// Message of the last failed call on this thread, or "" after a success.
// Valid until the next call on the same thread; never NULL.
const char *ciu_last_error(void);

// Library version as a static string.
const char *ciu_version(void);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* CIUGRAPH_H */
