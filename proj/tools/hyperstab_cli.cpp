// hyperstab command line tool; talks to the library only through hyperstab.h
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "hyperstab/hyperstab.h"

using json = nlohmann::ordered_json;

namespace {

const char* kExitCodes =
    "Exit codes:\n"
    "  0  every experiment passed (or nothing ran)\n"
    "  1  an experiment ran and failed its check\n"
    "  2  configuration or usage error, including unknown experiment ids\n"
    "  3  input error (malformed or missing file)\n"
    "  4  numerical error (no convergence, colliding node times)\n"
    "  5  dynamics error (blow-up, safety margin)\n"
    "  6  output directory or file not writable\n"
    "  7  evaluation budget exhausted\n"
    "  8  unsupported request (for example m >= 3)\n"
    "Environment: HYPERSTAB_THREADS caps parallelism.";

std::string slurp(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot read " + path);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

struct Common {
    std::string out;
    bool as_json = false;
    std::uint64_t seed = 0;
};

void add_common(CLI::App* sub, Common& c) {
    sub->add_option("--out", c.out, "output directory for artifacts and the summary");
    sub->add_flag("--json", c.as_json, "print the summary as JSON instead of a table");
}

void report_errors(const json& summary) {
    for (const auto& e : summary["entries"])
        if (e.contains("error")) std::cerr << e["id"].get<std::string>() << ": " << e["error"]["message"].get<std::string>() << "\n";
}

// runs the configuration, prints and writes the summary, returns the exit code
int execute(const json& cfg, const Common& c, unsigned threads = 1, bool quiet = false) {
    hs_summary* s = nullptr;
    const hs_status st = hs_sweep(cfg.dump().c_str(), threads, &s);
    if (st != HS_OK) {
        std::cerr << "error: " << hs_last_error() << "\n";
        return st;
    }
    const json summary = json::parse(hs_summary_json(s));
    if (!quiet) std::cout << (c.as_json ? summary.dump(2) + "\n" : std::string(hs_summary_table(s)));
    report_errors(summary);
    int code = hs_summary_exit_code(s);
    if (!c.out.empty() && hs_summary_write(s, c.out.c_str()) != HS_OK) {
        std::cerr << "error: " << hs_last_error() << "\n";
        if (code == 0) code = HS_ERR_IO;
    }
    hs_summary_free(s);
    return code;
}

json run_object(const std::string& experiment, json params, const Common& c) {
    json j;
    j["id"] = experiment;
    j["experiment"] = experiment;
    j["params"] = std::move(params);
    if (!c.out.empty()) j["out_dir"] = c.out;
    j["seed"] = c.seed;
    return j;
}

std::vector<double> split_numbers(const std::string& text) {
    std::vector<double> out;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) out.push_back(std::stod(item));
    return out;
}

std::vector<std::string> split_words(const std::string& text) {
    std::vector<std::string> out;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) out.push_back(item);
    return out;
}

void put_rect(json& params, const std::string& rect) {
    if (rect.empty()) return;
    const auto v = split_numbers(rect);
    if (v.size() != 3) throw CLI::ValidationError("--rect", "expects re_min,re_max,im_max");
    params["re_min"] = v[0];
    params["re_max"] = v[1];
    params["im_max"] = v[2];
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"hyperstab: stability experiments for boundary-coupled hyperbolic systems"};
    app.footer(kExitCodes);
    app.require_subcommand(1);
    app.set_version_flag("--version", hs_version());

    // rho
    Common rc;
    std::string matrix, p = "2";
    double tol = 1e-13;
    auto* rho = app.add_subcommand("rho", "scaled norm index of a matrix; prints {value, witness, iterations}");
    rho->add_option("--matrix", matrix, "matrix document {n, entries}")->required()->check(CLI::ExistingFile);
    rho->add_option("--p", p, "1, 2, inf, a number >= 1, or zero")->capture_default_str();
    rho->add_option("--tol", tol, "optimizer tolerance")->capture_default_str();
    rho->add_option("--seed", rc.seed, "seed for multi-start searches");
    add_common(rho, rc);

    // delay subcommands share flags
    Common dc;
    std::string system, rect;
    double T = 10, dt = 0, radius = 0.1;
    int samples = 32;
    auto* dsim = app.add_subcommand("delay-sim", "simulate the difference-delay system from constant history");
    auto* droots = app.add_subcommand("delay-roots", "characteristic roots in a rectangle");
    auto* dsweep = app.add_subcommand("delay-sweep", "random delay perturbation sweep");
    for (auto* sub : {dsim, droots, dsweep}) {
        sub->add_option("--system", system, "delay system document {K, r}")->required()->check(CLI::ExistingFile);
        sub->add_option("--seed", dc.seed, "seed");
        add_common(sub, dc);
    }
    dsim->add_option("--T", T, "horizon")->capture_default_str();
    dsim->add_option("--dt", dt, "step (default min r / 16)");
    for (auto* sub : {droots, dsweep}) sub->add_option("--rect", rect, "re_min,re_max,im_max");
    dsweep->add_option("--samples", samples, "number of perturbed delay vectors")->capture_default_str();
    dsweep->add_option("--radius", radius, "relative perturbation radius")->capture_default_str();

    // pde-sim
    Common pc;
    std::string u0, scheme = "characteristics", norms = "c0,c1";
    std::size_t cells = 200;
    double pT = 5, cfl = 1;
    auto* pde = app.add_subcommand("pde-sim", "solve the boundary-coupled hyperbolic system");
    pde->add_option("--system", system, "hyperbolic system document {speeds, G}")->required()->check(CLI::ExistingFile);
    pde->add_option("--u0", u0, "initial grid CSV x,u1..un")->check(CLI::ExistingFile);
    pde->add_option("--T", pT, "horizon")->capture_default_str();
    pde->add_option("--cells", cells, "grid cells when no --u0 is given")->capture_default_str();
    pde->add_option("--scheme", scheme, "upwind or characteristics")->capture_default_str();
    pde->add_option("--cfl", cfl, "CFL number")->capture_default_str();
    pde->add_option("--norms", norms, "comma separated: c0, c1, w1p:P, w2p:P")->capture_default_str();
    add_common(pde, pc);

    // counterexample
    Common cc;
    double cT = 12.5, a = 0.51, xi = 1.01, eta = 1.01;
    std::string eps = "auto";
    int m = 1;
    std::size_t ccells = 0;
    bool no_pde = false;
    auto* cex = app.add_subcommand("counterexample", "time tree, synthesized trace and growth certificate");
    cex->add_option("--T", cT, "horizon, off the delay lattice")->capture_default_str();
    cex->add_option("--eps", eps, "auto or a positive number")->capture_default_str();
    cex->add_option("--m", m, "matched derivative order")->capture_default_str();
    cex->add_option("--a", a, "gain scale")->capture_default_str();
    cex->add_option("--xi", xi, "gain parameter xi")->capture_default_str();
    cex->add_option("--eta", eta, "gain parameter eta")->capture_default_str();
    cex->add_option("--cells", ccells, "grid cells for u0 and the forward solve (default: resolve the narrowest value bump)");
    cex->add_flag("--no-pde", no_pde, "skip the forward PDE solve");
    add_common(cex, cc);

    // sweep / run / accept
    Common sc;
    std::string file;
    unsigned threads = 0;
    auto* sw = app.add_subcommand("sweep", "run a list of configurations, possibly in parallel");
    sw->add_option("config", file, "JSON file: array of runs or {\"runs\": [...]}")->required()->check(CLI::ExistingFile);
    sw->add_option("--threads", threads, "worker threads (0: HYPERSTAB_THREADS or all cores)");
    add_common(sw, sc);

    Common uc;
    std::string target;
    auto* runc = app.add_subcommand("run", "run a preset by name or a configuration file");
    runc->add_option("target", target, "preset name or JSON file")->required();
    add_common(runc, uc);

    Common ac;
    std::vector<std::string> only;
    auto* acc = app.add_subcommand("accept", "run the acceptance suite, one line per criterion");
    acc->add_option("criteria", only, "criterion ids to run (default all)");
    add_common(acc, ac);

    auto* list = app.add_subcommand("list", "list experiment ids and presets");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : HS_ERR_CONFIG;
    }

    try {
        if (*rho) {
            json params{{"matrix", matrix}, {"p", p}, {"tol", tol}};
            hs_summary* s = nullptr;
            json cfg = run_object("rho", params, rc);
            if (hs_run(cfg.dump().c_str(), &s) != HS_OK) {
                std::cerr << "error: " << hs_last_error() << "\n";
                return HS_ERR_CONFIG;
            }
            const int code = hs_summary_exit_code(s);
            if (std::string(hs_summary_status(s, 0)) == "error") {
                report_errors(json::parse(hs_summary_json(s)));
            } else {
                json rec;
                rec["value"] = hs_summary_scalar(s, 0, "value");
                rec["witness"] = json::parse(hs_summary_note(s, 0, "witness"));
                rec["iterations"] = int(hs_summary_scalar(s, 0, "iterations"));
                std::cout << rec.dump() << "\n";
            }
            if (!rc.out.empty()) hs_summary_write(s, rc.out.c_str());
            hs_summary_free(s);
            return code;
        }
        if (*dsim) {
            json params{{"system", system}, {"T", T}};
            if (dt > 0) params["dt"] = dt;
            return execute(run_object("delay-sim", params, dc), dc);
        }
        if (*droots) {
            json params{{"system", system}};
            put_rect(params, rect);
            return execute(run_object("delay-roots", params, dc), dc);
        }
        if (*dsweep) {
            json params{{"system", system}, {"samples", samples}, {"radius", radius}};
            put_rect(params, rect);
            return execute(run_object("delay-sweep", params, dc), dc);
        }
        if (*pde) {
            json params{{"system", system}, {"T", pT}, {"scheme", scheme}, {"cfl", cfl}, {"norms", split_words(norms)}};
            if (!u0.empty())
                params["initial_csv"] = u0;
            else
                params["cells"] = cells;
            return execute(run_object("pde-sim", params, pc), pc);
        }
        if (*cex) {
            json params{{"T", cT}, {"eps", eps}, {"m", m}, {"a", a}, {"xi", xi},
                        {"eta", eta}, {"pde", !no_pde}};
            if (ccells > 0) params["cells"] = ccells;
            return execute(run_object("counterexample", params, cc), cc);
        }
        if (*sw) {
            json cfg = json::parse(slurp(file));
            return execute(cfg, sc, threads);
        }
        if (*runc) {
            json cfg;
            if (std::ifstream(target).good()) {
                cfg = json::parse(slurp(target));
                if (!uc.out.empty() && cfg.is_object() && !cfg.contains("runs")) cfg["out_dir"] = uc.out;
            } else {
                cfg = {{"experiment", target}};
                if (!uc.out.empty()) cfg["out_dir"] = uc.out;
            }
            return execute(cfg, uc);
        }
        if (*acc) {
            json cfg = run_object("accept", json{{"only", only}}, ac);
            hs_summary* s = nullptr;
            if (hs_run(cfg.dump().c_str(), &s) != HS_OK) {
                std::cerr << "error: " << hs_last_error() << "\n";
                return HS_ERR_CONFIG;
            }
            const json summary = json::parse(hs_summary_json(s));
            const auto& e = summary["entries"][0];
            int failed = 0, total = 0;
            for (const auto& [k, v] : e["scalars"].items()) {
                const std::string id = k.substr(std::string("criterion_").size());
                const bool ok = v.is_number() && v.get<double>() == 1.0;
                ++total;
                failed += !ok;
                std::cout << (ok ? "PASS" : "FAIL") << " [" << id << "] " << e["notes"][k].get<std::string>() << "\n";
            }
            report_errors(summary);
            std::cout << total << " criteria, " << failed << " failed\n";
            const int code = hs_summary_exit_code(s);
            if (!ac.out.empty()) hs_summary_write(s, ac.out.c_str());
            hs_summary_free(s);
            return code;
        }
        if (*list) {
            std::cout << "experiments:\n" << hs_experiment_names() << "presets:\n" << hs_preset_names();
            return 0;
        }
    } catch (const CLI::Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return HS_ERR_CONFIG;
    } catch (const nlohmann::json::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return HS_ERR_INPUT;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return HS_ERR_INPUT;
    }
    return 0;
}
