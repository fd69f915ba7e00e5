#ifndef DNL_H
#define DNL_H

/* C interface to the doubly nonlinear SPDE laboratory. A session carries a
 * config plus overrides; dnl_run executes one subcommand and writes CSV
 * outputs and manifest.json into the output directory. Status codes follow
 * the CLI contract: 0 pass, 1 criterion or runtime failure, 2 usage error. */

#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

typedef struct dnl_session dnl_session;

typedef enum {
    DNL_OK = 0,
    DNL_ERR_RUN = 1,
    DNL_ERR_USAGE = 2
} dnl_status;

dnl_session* dnl_session_new(void);
void dnl_session_free(dnl_session* s);

/* path = NULL or "" selects the built-in defaults; the file may be a config
 * or a previously written manifest.json (reruns its embedded config). The
 * path is validated lazily when dnl_run loads it. */
dnl_status dnl_session_set_config(dnl_session* s, const char* path);
dnl_status dnl_session_set_seed(dnl_session* s, uint64_t seed);
dnl_status dnl_session_set_workers(dnl_session* s, int workers);
dnl_status dnl_session_set_force(dnl_session* s, int force);

/* subcommand in {validate-config, branch, simulate, stability, contrast,
 * feller, kolmogorov}; out_dir NULL means the current directory. */
dnl_status dnl_run(dnl_session* s, const char* subcommand, const char* out_dir);

/* Summary or error text of the last dnl_run; owned by the session, valid
 * until the next call on the same session. Never NULL. */
const char* dnl_last_message(const dnl_session* s);

const char* dnl_version(void);

#ifdef __cplusplus
}
#endif

#endif
