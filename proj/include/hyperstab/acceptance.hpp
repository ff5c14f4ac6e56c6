#pragma once

#include <functional>
#include <string>
#include <vector>

namespace hyperstab {

struct CriterionResult {
    std::string id;    // "1" ... "8", with letters for the certificate parts
    std::string name;
    bool pass = false;
    std::string detail;
    double seconds = 0.0;
};

struct AcceptanceOptions {
    std::vector<std::string> only;  // criterion numbers to run; empty runs all
    unsigned threads = 1;
    // called as each line completes
    std::function<void(const CriterionResult&)> on_result;
};

std::vector<CriterionResult> run_acceptance(const AcceptanceOptions& opts = {});
std::string format_result(const CriterionResult& r);

}  // namespace hyperstab
