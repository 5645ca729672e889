#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include <json.hpp>

namespace lentil::acceptance {

struct CriterionResult
{
    std::string id;    // "1", "3a", ...
    std::string name;
    bool pass = false;
    std::string detail;  // measured vs pinned tolerance, one line
    nlohmann::json data;
    double seconds = 0.0;
};

struct SuiteOptions
{
    // Criterion ids to run ("1" selects 1 and every 1x); empty runs all.
    std::vector<std::string> only;
    std::uint64_t seed = 20240601;
};
SuiteOptions options_from_json(const nlohmann::json& j);

using Reporter = std::function<void(const CriterionResult&)>;
std::vector<CriterionResult> run_suite(const SuiteOptions& opt, const Reporter& on_done = {});

// "[PASS] 3a proximity soundness: ..." style line.
std::string format_line(const CriterionResult& r);
nlohmann::json to_json(const std::vector<CriterionResult>& rs);

}  // namespace lentil::acceptance
