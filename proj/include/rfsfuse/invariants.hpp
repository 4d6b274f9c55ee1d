#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

namespace rfsfuse {

struct InvariantCheck {
    std::string name;
    std::size_t instances = 0;
    std::size_t failures = 0;
    /// Description of the first failing instance.
    std::string first_failure;

    [[nodiscard]] bool passed() const { return failures == 0; }
};

/// Checks the fusion closures, PHD linearity, the KLD decomposition, reduce
/// bookkeeping, consensus mass conservation and the OSPA axioms on
/// `instances` random inputs each.
[[nodiscard]] std::vector<InvariantCheck> run_invariant_suite(std::uint64_t seed, std::size_t instances);

}  // namespace rfsfuse
