#pragma once

#include <cstdint>
#include <ostream>

namespace focusdd {

/// Self-check suites run by `focusdd verify`: window argmax against brute force, crop
/// against direct indexing, PNG/PNM and NTF round-trips, attention row-stochasticity.
/// Prints one line per suite; returns true when every suite passes.
bool run_verification(std::ostream& out, std::uint64_t seed = 0);

}  // namespace focusdd
