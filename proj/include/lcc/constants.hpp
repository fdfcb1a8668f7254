#ifndef LCC_CONSTANTS_HPP
#define LCC_CONSTANTS_HPP

#include <array>
#include <string_view>

namespace lcc {

/// Columns fed to the network, in order: flux, error, time, passband, detected.
inline constexpr int kFeatureCount = 5;
inline constexpr int kClassCount = 5;
inline constexpr int kDefaultSequenceLength = 352;

inline constexpr int kPassbandCount = 6;

enum FeatureColumn : int { kFlux = 0, kFluxErr = 1, kTime = 2, kPassband = 3, kDetected = 4 };

inline constexpr std::array<std::string_view, kClassCount> kClassNames = {
    "S-Like", "Fast", "Long", "Periodic", "Non-Periodic"};

}  // namespace lcc

#endif  // LCC_CONSTANTS_HPP
