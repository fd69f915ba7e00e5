#include "dnl.h"

#include <new>
#include <string>

#include "dnl/runner.hpp"

struct dnl_session {
    dnl::RunOptions opt;
    std::string message = "no run yet";
};

extern "C" {

dnl_session* dnl_session_new(void) { return new (std::nothrow) dnl_session(); }

void dnl_session_free(dnl_session* s) { delete s; }

dnl_status dnl_session_set_config(dnl_session* s, const char* path) {
    if (!s) return DNL_ERR_USAGE;
    s->opt.config_path = path ? path : "";
    return DNL_OK;
}

dnl_status dnl_session_set_seed(dnl_session* s, uint64_t seed) {
    if (!s) return DNL_ERR_USAGE;
    s->opt.has_seed = true;
    s->opt.seed = seed;
    return DNL_OK;
}

dnl_status dnl_session_set_workers(dnl_session* s, int workers) {
    if (!s || workers < 0) return DNL_ERR_USAGE;
    s->opt.workers = workers;
    return DNL_OK;
}

dnl_status dnl_session_set_force(dnl_session* s, int force) {
    if (!s) return DNL_ERR_USAGE;
    s->opt.force = force != 0;
    return DNL_OK;
}

dnl_status dnl_run(dnl_session* s, const char* subcommand, const char* out_dir) {
    if (!s || !subcommand) return DNL_ERR_USAGE;
    dnl::RunOptions opt = s->opt;
    opt.out_dir = out_dir && *out_dir ? out_dir : ".";
    try {
        dnl::RunResult res = dnl::run_subcommand(subcommand, opt);
        s->message = res.summary;
        if (res.status == 0) return DNL_OK;
        return res.status == 2 ? DNL_ERR_USAGE : DNL_ERR_RUN;
    } catch (const std::exception& e) {
        s->message = std::string("runtime failure: ") + e.what() + "\n";
        return DNL_ERR_RUN;
    } catch (...) {
        s->message = "runtime failure: unknown error\n";
        return DNL_ERR_RUN;
    }
}

const char* dnl_last_message(const dnl_session* s) {
    return s ? s->message.c_str() : "null session";
}

const char* dnl_version(void) { return dnl::kToolVersion; }

} // extern "C"
