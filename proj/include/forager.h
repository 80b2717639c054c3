/* forager C API: survival-foraging RL platform.
 *
 * Opaque handles + integer status codes. All functions returning fg_status
 * set a thread-local error message retrievable via fg_last_error().
 * Status values double as CLI exit codes: 0 ok, 2 config, 3 runtime.
 */
#ifndef FORAGER_H
#define FORAGER_H

#include <stddef.h>
#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

#if defined(_WIN32)
#define FORAGER_API __declspec(dllexport)
#else
#define FORAGER_API __attribute__((visibility("default")))
#endif

typedef enum fg_status {
    FG_OK = 0,
    FG_ERR_CONFIG = 2,  /* bad configuration or config file */
    FG_ERR_RUNTIME = 3, /* I/O, format, training, or internal failures */
    FG_ERR_USAGE = 4    /* API misuse (null handles, bad arguments) */
} fg_status;

FORAGER_API const char* fg_version(void);

/* Last error message for the calling thread; empty string when none. */
FORAGER_API const char* fg_last_error(void);

/* ------------------------------------------------------------------ */
/* Configuration                                                       */

typedef struct fg_config fg_config;

FORAGER_API fg_status fg_config_create(fg_config** out);
FORAGER_API fg_status fg_config_load(const char* path, fg_config** out);
/* key is "section.key", e.g. "ppo.lr". */
FORAGER_API fg_status fg_config_set(fg_config* cfg, const char* key, const char* value);
FORAGER_API fg_status fg_config_get(const fg_config* cfg, const char* key, char* buf,
                                    size_t buflen);
FORAGER_API uint64_t fg_config_fingerprint(const fg_config* cfg);
FORAGER_API fg_status fg_config_save(const fg_config* cfg, const char* path);
/* Applies FORAGER_LOG_DIR / FORAGER_WORKERS. */
FORAGER_API fg_status fg_config_apply_env(fg_config* cfg);
FORAGER_API void fg_config_destroy(fg_config* cfg);

/* ------------------------------------------------------------------ */
/* Environment (one agent, one arena)                                  */

typedef struct fg_env fg_env;

typedef struct fg_step_result {
    double reward;        /* summed over the repeated frames */
    double satiety;       /* after the step */
    int64_t frame;        /* episode-local frames elapsed */
    int64_t frames_advanced;
    int terminated;       /* satiety reached zero */
    int truncated;        /* episode frame cap */
    int pickups;          /* objects consumed this step */
    double wasted;        /* satiety lost to the 100 cap */
} fg_step_result;

FORAGER_API fg_status fg_env_create(const fg_config* cfg, uint64_t seed, fg_env** out);
/* heading: 0 left, 1 centre, 2 right. velocity: 0 forward, 1 stationary,
 * 2 backward. action_repeat <= 0 uses the configured default. */
FORAGER_API fg_status fg_env_step(fg_env* env, int heading, int velocity, int action_repeat,
                                  fg_step_result* out);
FORAGER_API fg_status fg_env_reset(fg_env* env, uint64_t seed);
/* rgb_out must hold width*height*3 floats (row-major, [0,1]). */
FORAGER_API fg_status fg_env_render(fg_env* env, int width, int height, float* rgb_out);
FORAGER_API fg_status fg_env_object_count(const fg_env* env, int* out);
FORAGER_API void fg_env_destroy(fg_env* env);

/* ------------------------------------------------------------------ */
/* Orchestration                                                       */

/* Trains run.repeats times under run.log_dir; resume != 0 skips finished
 * repeats and continues partial ones. */
FORAGER_API fg_status fg_train(const fg_config* cfg, int resume);

FORAGER_API fg_status fg_record(const char* checkpoint, int64_t frames, int stride,
                                const char* out_log, uint64_t seed);

/* analyses: comma list of frequencies|regression|behavior|ig|export or
 * "all"; checkpoint may be NULL (disables ig). */
FORAGER_API fg_status fg_analyze(const char* log_path, const char* analyses,
                                 const char* out_dir, const char* checkpoint);

FORAGER_API fg_status fg_bench(const fg_config* cfg);

/* JSON description of a checkpoint; free with fg_string_free. */
FORAGER_API fg_status fg_checkpoint_inspect(const char* path, char** json_out);
FORAGER_API void fg_string_free(char* s);

#ifdef __cplusplus
} /* extern "C" */
#endif

#endif /* FORAGER_H */
