#ifndef LCC_INGEST_HPP
#define LCC_INGEST_HPP

#include <array>
#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "lcc/constants.hpp"

namespace lcc {

/// One photometric observation.
struct Measurement {
    double time = 0.0;      // MJD, days
    double flux = 0.0;
    double flux_err = 0.0;  // >= 0
    int passband = 0;       // 0..5 (ugrizY)
    bool detected = false;

    bool operator==(const Measurement&) const = default;
};

/// All measurements of one object, sorted by time. Labels are absent for
/// unlabeled (prediction) input.
struct LightCurve {
    std::int64_t object_id = 0;
    std::vector<Measurement> measurements;
    std::optional<int> original_class;
    std::optional<int> generalized_class;

    bool operator==(const LightCurve&) const = default;
};

struct Dataset {
    std::vector<LightCurve> curves;
    /// generalized class -> number of curves carrying it
    std::map<int, std::size_t> class_counts;

    std::size_t size() const { return curves.size(); }
    bool empty() const { return curves.empty(); }
    bool labeled() const;

    /// Builds a dataset from curves, recomputing class_counts. Throws
    /// ParseError on duplicate object ids.
    static Dataset from_curves(std::vector<LightCurve> curves);
};

/// Original class ids that appear in the five-class regrouping.
inline constexpr std::array<int, 14> kOriginalClassIds = {6,  15, 16, 42, 52, 53, 62,
                                                          64, 65, 67, 88, 90, 92, 95};

/// Maps an original class id onto S-Like=0, Fast=1, Long=2, Periodic=3,
/// Non-Periodic=4. Throws UnknownClass for ids outside the table.
int remap_class(int original_id);

/// Reads comma-separated text with a header row. Rows may be interleaved
/// across objects; each object's measurements are stably sorted by time.
/// Objects appear in order of first occurrence.
Dataset parse_table(std::istream& in, bool has_labels);
Dataset read_table_file(const std::string& path, bool has_labels);

/// Writes the table in a form that `parse_table` reads back exactly.
void write_table(std::ostream& out, const Dataset& d);
void write_table_file(const std::string& path, const Dataset& d);

/// Seeded stratified split. The validation set holds round-half-up(fraction * N)
/// objects, distributed over generalized classes by largest remainder.
/// Returns (training, validation); both preserve the input order.
std::pair<Dataset, Dataset> split_train_validation(const Dataset& d, double fraction,
                                                   std::uint64_t seed);

}  // namespace lcc

#endif  // LCC_INGEST_HPP
