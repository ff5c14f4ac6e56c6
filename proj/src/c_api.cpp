#include "hyperstab/hyperstab.h"

#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "hyperstab/errors.hpp"
#include "hyperstab/runner.hpp"
#include "hyperstab/spectral.hpp"

struct hs_summary {
    hyperstab::RunSummary summary;
    std::string json, table;
};

namespace {

thread_local std::string last_error;

std::string joined(const std::vector<std::string>& names) {
    std::string out;
    for (const auto& n : names) out += n + "\n";
    return out;
}

template <class F>
hs_status guarded(F&& body) {
    last_error.clear();
    try {
        body();
        return HS_OK;
    } catch (const hyperstab::Error& e) {
        last_error = e.what();
        return static_cast<hs_status>(hyperstab::exit_code_for(int(e.kind())));
    } catch (const std::exception& e) {
        last_error = e.what();
        return HS_FAILED;
    }
}

hs_status wrap(hyperstab::RunSummary s, hs_summary** out) {
    auto* h = new hs_summary{std::move(s), {}, {}};
    h->json = h->summary.to_json();
    h->table = h->summary.to_table();
    *out = h;
    return HS_OK;
}

const hyperstab::ExperimentResult* entry_of(const hs_summary* s, size_t i) {
    return s && i < s->summary.entries.size() ? &s->summary.entries[i] : nullptr;
}

}  // namespace

extern "C" {

const char* hs_version(void) { return HS_VERSION; }

const char* hs_last_error(void) { return last_error.c_str(); }

const char* hs_experiment_names(void) {
    static const std::string names = joined(hyperstab::experiment_names());
    return names.c_str();
}

const char* hs_preset_names(void) {
    static const std::string names = joined(hyperstab::preset_names());
    return names.c_str();
}

hs_status hs_run(const char* config_json, hs_summary** out) { return hs_sweep(config_json, 1, out); }

hs_status hs_sweep(const char* configs_json, unsigned threads, hs_summary** out) {
    if (!out) return HS_ERR_CONFIG;
    *out = nullptr;
    hyperstab::RunSummary s;
    const auto st = guarded([&] {
        hyperstab::require(configs_json != nullptr, hyperstab::ErrorKind::config, "no configuration given");
        s = hyperstab::sweep(hyperstab::parse_run_configs(configs_json), threads);
    });
    return st == HS_OK ? wrap(std::move(s), out) : st;
}

hs_status hs_run_preset(const char* name, const char* out_dir, hs_summary** out) {
    if (!out) return HS_ERR_CONFIG;
    *out = nullptr;
    hyperstab::RunSummary s;
    const auto st = guarded([&] {
        hyperstab::require(name != nullptr, hyperstab::ErrorKind::config, "no preset name given");
        auto cfg = hyperstab::preset(name);
        if (out_dir) cfg.out_dir = out_dir;
        s = hyperstab::run(cfg);
    });
    return st == HS_OK ? wrap(std::move(s), out) : st;
}

size_t hs_summary_size(const hs_summary* s) { return s ? s->summary.entries.size() : 0; }

int hs_summary_exit_code(const hs_summary* s) { return s ? s->summary.exit_code() : HS_ERR_CONFIG; }

const char* hs_summary_json(const hs_summary* s) { return s ? s->json.c_str() : ""; }

const char* hs_summary_table(const hs_summary* s) { return s ? s->table.c_str() : ""; }

const char* hs_summary_id(const hs_summary* s, size_t entry) {
    const auto* e = entry_of(s, entry);
    return e ? e->id.c_str() : nullptr;
}

const char* hs_summary_status(const hs_summary* s, size_t entry) {
    const auto* e = entry_of(s, entry);
    return e ? e->status.c_str() : nullptr;
}

double hs_summary_scalar(const hs_summary* s, size_t entry, const char* name) {
    const auto* e = entry_of(s, entry);
    return e && name ? e->scalar(name) : std::numeric_limits<double>::quiet_NaN();
}

const char* hs_summary_note(const hs_summary* s, size_t entry, const char* name) {
    const auto* e = entry_of(s, entry);
    if (!e || !name) return nullptr;
    for (const auto& [k, v] : e->notes)
        if (k == name) return v.c_str();
    return nullptr;
}

hs_status hs_summary_write(const hs_summary* s, const char* dir) {
    return guarded([&] {
        hyperstab::require(s && dir, hyperstab::ErrorKind::config, "summary and directory required");
        s->summary.write(dir);
    });
}

void hs_summary_free(hs_summary* s) { delete s; }

hs_status hs_rho_hat(const double* entries, size_t n, const char* p, uint64_t seed, double* value) {
    return guarded([&] {
        hyperstab::require(entries && p && value && n > 0, hyperstab::ErrorKind::config, "invalid arguments");
        const hyperstab::RealMatrix m(n, std::vector<double>(entries, entries + n * n));
        const std::string which = p;
        if (which == "zero" || which == "0") {
            *value = hyperstab::rho_hat_zero(m).value;
        } else {
            hyperstab::ScalingOptions so;
            so.seed = seed;
            *value = hyperstab::rho_hat_p(m, hyperstab::parse_pnorm(which), so).value;
        }
    });
}

}  // extern "C"
