/* C interface to the longtail pipeline. All strings are UTF-8 and NUL
 * terminated. Strings returned through char** are owned by the caller and
 * must be released with lt_free. On failure a function returns a non-zero
 * lt_status and lt_last_error() describes it (per thread). */
#ifndef LONGTAIL_H
#define LONGTAIL_H

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#define LT_API __declspec(dllexport)
#else
#define LT_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum lt_status {
    LT_OK = 0,
    LT_ERR_USAGE = 1,
    LT_ERR_DATA = 2,
    LT_ERR_BACKEND = 3,
    LT_ERR_NOT_FOUND = 4,
    LT_ERR_INTERNAL = 5
} lt_status;

typedef struct lt_pipeline lt_pipeline;
typedef struct lt_kg lt_kg;

LT_API const char* lt_version(void);
LT_API const char* lt_last_error(void);
LT_API void lt_free(void* p);

/* overrides: n strings of the form "section.key=value"; may be NULL when n is 0 */
LT_API lt_status lt_pipeline_open(const char* config_path, const char* const* overrides, size_t n, lt_pipeline** out);
LT_API lt_status lt_pipeline_run_stage(lt_pipeline* p, const char* stage);
LT_API lt_status lt_pipeline_run_all(lt_pipeline* p);
/* JSON of the manifest written by the last successful stage */
LT_API lt_status lt_pipeline_last_manifest(const lt_pipeline* p, char** json);
/* Blocks until the process is stopped. */
LT_API lt_status lt_pipeline_serve(lt_pipeline* p);
LT_API void lt_pipeline_close(lt_pipeline* p);

/* entities/properties may be NULL; strict != 0 fails on unresolved ids */
LT_API lt_status lt_kg_open(const char* triplets, const char* entities, const char* properties, int strict, lt_kg** out);
LT_API lt_status lt_kg_degree(const lt_kg* kg, const char* entity, uint64_t* degree);
LT_API uint64_t lt_kg_triplet_count(const lt_kg* kg);
LT_API lt_status lt_kg_histogram_jsonl(const lt_kg* kg, char** jsonl);
LT_API lt_status lt_kg_triplets_of_jsonl(const lt_kg* kg, const char* entity, char** jsonl);
/* holdout: JSONL of triplets; removed/absent may be NULL */
LT_API lt_status lt_kg_remove_holdout_jsonl(lt_kg* kg, const char* holdout, uint64_t* removed, uint64_t* absent);
LT_API void lt_kg_close(lt_kg* kg);

LT_API lt_status lt_normalize(const char* text, char** out);
/* aliases: n strings, may be NULL when n is 0; *match receives 0 or 1 */
LT_API lt_status lt_exact_match(const char* prediction, const char* label, const char* const* aliases, size_t n,
                                int* match);

LT_API lt_status lt_synthesize(const char* dir, uint64_t entities, uint64_t seed);

#ifdef __cplusplus
}
#endif

#endif
