#pragma once

#include <string>
#include <vector>

namespace tacos {

struct CriterionResult {
    int id = 0;
    std::string name;
    bool pass = false;
    std::string detail;
};

/// Executes one acceptance criterion (1..10) at its pinned tolerances.
CriterionResult run_criterion(int id);

/// The verification suite. fast_only restricts to the criteria that need no
/// policy training (8, 9, 10); the full suite runs all ten and takes hours
/// of CPU on a desk machine.
std::vector<CriterionResult> run_acceptance(bool fast_only);

} // namespace tacos
