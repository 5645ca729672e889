#include <cstdio>
#include <cstdlib>
#include <string>

#include "acceptance.hpp"

// One line per criterion; exit status 1 if any criterion fails.
// Arguments select criteria by id ("3" runs 3a and 3b).
int main(int argc, char** argv)
{
    lentil::acceptance::SuiteOptions opt;
    for (int i = 1; i < argc; ++i)
        opt.only.emplace_back(argv[i]);
    if (const char* s = std::getenv("LENTIL_ACCEPTANCE_SEED"))
        opt.seed = std::strtoull(s, nullptr, 10);
    const auto rs = lentil::acceptance::run_suite(opt, [](const lentil::acceptance::CriterionResult& r) {
        std::printf("%s\n", lentil::acceptance::format_line(r).c_str());
        std::fflush(stdout);
    });
    int failed = 0;
    for (const auto& r : rs)
        failed += !r.pass;
    std::printf("%zu criteria, %d failed\n", rs.size(), failed);
    return failed ? 1 : 0;
}
