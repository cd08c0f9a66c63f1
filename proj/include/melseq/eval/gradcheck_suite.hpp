#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

namespace melseq::eval {

// Finite-difference checks over every layer plus the full decode-step loss,
// run on a reduced-dimension model so the whole suite stays fast. Returns
// (component, max relative error) pairs.
std::vector<std::pair<std::string, double>> gradcheck_report(std::uint64_t seed);

constexpr double kGradTolerance = 1e-4;

}  // namespace melseq::eval
