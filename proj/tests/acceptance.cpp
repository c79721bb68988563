// Acceptance suite: one line per criterion, exit status 1 if any fails.
#include "afftail/acceptance.hpp"

#include <iostream>

int main() {
    afftail::AcceptanceOptions opts;
    const auto results = afftail::run_acceptance(opts, [](const afftail::CriterionResult& r) {
        std::cout << afftail::format_result(r) << std::endl;
    });
    std::size_t failed = 0;
    for (const auto& r : results) failed += r.passed ? 0 : 1;
    std::cout << (failed == 0 ? "all " + std::to_string(results.size()) + " criteria passed"
                              : std::to_string(failed) + " of " + std::to_string(results.size()) + " criteria failed")
              << std::endl;
    return failed == 0 ? 0 : 1;
}
