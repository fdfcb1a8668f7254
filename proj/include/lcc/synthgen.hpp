#ifndef LCC_SYNTHGEN_HPP
#define LCC_SYNTHGEN_HPP

#include <cstdint>
#include <span>

#include "lcc/ingest.hpp"

namespace lcc {

/// Seeded five-class light-curve generator producing objects in the same
/// schema the ingest path reads. Archetypes:
///   S-Like        fast rise, exponential decay
///   Fast          narrow spike (<= 10 days)
///   Long          slow symmetric bump (>= 150 days)
///   Periodic      sinusoid, period 0.2-100 days
///   Non-Periodic  bounded random walk
/// Every object has 30-300 measurements over passbands 0-5 and at least one
/// detection (|flux - baseline| > 3 flux_err).
Dataset generate_dataset(int n_per_class, std::uint64_t seed);

/// Lag (in samples) of the strongest autocorrelation peak beyond the main
/// lobe at lag 0. Returns 0 if the series never decorrelates.
int dominant_autocorrelation_lag(std::span<const double> series);

}  // namespace lcc

#endif  // LCC_SYNTHGEN_HPP
