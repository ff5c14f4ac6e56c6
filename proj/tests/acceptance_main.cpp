#include <cstdio>
#include <string>

#include "hyperstab/acceptance.hpp"

int main(int argc, char** argv) {
    hyperstab::AcceptanceOptions opts;
    for (int i = 1; i < argc; ++i) opts.only.emplace_back(argv[i]);
    opts.on_result = [](const hyperstab::CriterionResult& r) {
        std::printf("%s\n", hyperstab::format_result(r).c_str());
        std::fflush(stdout);
    };
    const auto results = hyperstab::run_acceptance(opts);
    int failed = 0;
    for (const auto& r : results) failed += r.pass ? 0 : 1;
    std::printf("%zu criteria, %d failed\n", results.size(), failed);
    return failed == 0 ? 0 : 1;
}
