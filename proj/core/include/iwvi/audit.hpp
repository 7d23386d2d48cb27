#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace iwvi {

struct AuditCheck {
    std::string name;
    bool passed = false;
    std::string detail;
};

// Cross-validates the estimator, optimizer, gradients and the enumeration
// oracle against each other. Deterministic given the seed. Every check is
// named; a failed check carries the measured violation in `detail`.
std::vector<AuditCheck> run_audit(std::uint64_t seed);

}  // namespace iwvi
