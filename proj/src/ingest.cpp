#include "lcc/ingest.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <sstream>
#include <string_view>
#include <unordered_map>
#include <unordered_set>

#include "lcc/errors.hpp"
#include "lcc/random.hpp"

namespace lcc {

namespace {

std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '"')) {
        s.remove_prefix(1);
    }
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r' ||
                          s.back() == '"')) {
        s.remove_suffix(1);
    }
    return s;
}

std::vector<std::string_view> split_row(std::string_view line) {
    std::vector<std::string_view> cells;
    std::size_t start = 0;
    while (true) {
        const std::size_t comma = line.find(',', start);
        if (comma == std::string_view::npos) {
            cells.push_back(trim(line.substr(start)));
            break;
        }
        cells.push_back(trim(line.substr(start, comma - start)));
        start = comma + 1;
    }
    return cells;
}

std::string lower(std::string_view s) {
    std::string out(s);
    std::transform(out.begin(), out.end(), out.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return out;
}

enum Column { kColFlux, kColErr, kColMjd, kColFilter, kColDetection, kColClass, kColId, kColCount };

int column_for(const std::string& name) {
    static const std::unordered_map<std::string, int> aliases = {
        {"flux", kColFlux},         {"error", kColErr},         {"flux_err", kColErr},
        {"mjd", kColMjd},           {"filter", kColFilter},     {"passband", kColFilter},
        {"detection", kColDetection}, {"detected", kColDetection}, {"class", kColClass},
        {"target", kColClass},      {"id", kColId},             {"object_id", kColId}};
    const auto it = aliases.find(name);
    return it == aliases.end() ? -1 : it->second;
}

const char* column_label(int col) {
    static const char* labels[kColCount] = {"flux",      "error|flux_err",   "mjd",
                                            "filter|passband", "detection|detected",
                                            "class|target", "id|object_id"};
    return labels[col];
}

double parse_real(std::string_view cell, std::size_t row, const char* column) {
    double value = 0.0;
    const auto* first = cell.data();
    const auto* last = cell.data() + cell.size();
    if (!cell.empty() && *first == '+') ++first;
    const auto [ptr, ec] = std::from_chars(first, last, value);
    if (cell.empty() || ec != std::errc() || ptr != last || !std::isfinite(value)) {
        throw ParseError("row " + std::to_string(row) + ": column '" + column +
                         "' is not a finite number: '" + std::string(cell) + "'");
    }
    return value;
}

std::int64_t parse_integer(std::string_view cell, std::size_t row, const char* column) {
    // Accept "2" as well as "2.0"; reject fractional values.
    const double value = parse_real(cell, row, column);
    if (value != std::floor(value) || std::abs(value) > 9.0e15) {
        throw ParseError("row " + std::to_string(row) + ": column '" + column +
                         "' is not an integer: '" + std::string(cell) + "'");
    }
    return static_cast<std::int64_t>(value);
}

}  // namespace

bool Dataset::labeled() const {
    return std::all_of(curves.begin(), curves.end(),
                       [](const LightCurve& c) { return c.generalized_class.has_value(); });
}

Dataset Dataset::from_curves(std::vector<LightCurve> curves) {
    Dataset d;
    std::unordered_set<std::int64_t> seen;
    for (const auto& c : curves) {
        if (!seen.insert(c.object_id).second) {
            throw ParseError("duplicate object id " + std::to_string(c.object_id));
        }
        if (c.generalized_class) ++d.class_counts[*c.generalized_class];
    }
    d.curves = std::move(curves);
    return d;
}

int remap_class(int original_id) {
    switch (original_id) {
        case 42: case 52: case 62: case 67: case 90: return 0;  // S-Like
        case 6: case 64: case 65: return 1;                     // Fast
        case 15: case 95: return 2;                             // Long
        case 16: case 53: case 92: return 3;                    // Periodic
        case 88: return 4;                                      // Non-Periodic
        default:
            throw UnknownClass("unknown original class id " + std::to_string(original_id));
    }
}

Dataset parse_table(std::istream& in, bool has_labels) {
    std::string line;
    std::size_t line_no = 0;
    bool have_header = false;
    while (!have_header && std::getline(in, line)) {
        ++line_no;
        have_header = !trim(line).empty();
    }
    if (!have_header) throw EmptyInput("input contains no header row");

    std::array<int, kColCount> index;
    index.fill(-1);
    const auto header = split_row(line);
    for (std::size_t i = 0; i < header.size(); ++i) {
        const int col = column_for(lower(header[i]));
        if (col >= 0 && index[col] < 0) index[col] = static_cast<int>(i);
    }
    for (int col = 0; col < kColCount; ++col) {
        if (col == kColClass && !has_labels) continue;
        if (index[col] < 0) {
            throw SchemaError(std::string("missing required column ") + column_label(col));
        }
    }
    const bool read_labels = has_labels && index[kColClass] >= 0;
    const int max_index = *std::max_element(index.begin(), index.end());

    std::vector<LightCurve> curves;
    std::unordered_map<std::int64_t, std::size_t> slot;
    std::size_t rows = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (trim(line).empty()) continue;
        ++rows;
        const auto cells = split_row(line);
        if (static_cast<int>(cells.size()) <= max_index) {
            throw ParseError("row " + std::to_string(line_no) + ": expected at least " +
                             std::to_string(max_index + 1) + " cells, found " +
                             std::to_string(cells.size()));
        }

        Measurement m;
        m.flux = parse_real(cells[index[kColFlux]], line_no, "flux");
        m.flux_err = parse_real(cells[index[kColErr]], line_no, "error");
        m.time = parse_real(cells[index[kColMjd]], line_no, "mjd");
        const auto passband = parse_integer(cells[index[kColFilter]], line_no, "filter");
        const auto detected = parse_integer(cells[index[kColDetection]], line_no, "detection");
        const auto id = parse_integer(cells[index[kColId]], line_no, "id");
        if (passband < 0 || passband >= kPassbandCount) {
            throw ParseError("row " + std::to_string(line_no) + ": passband " +
                             std::to_string(passband) + " outside 0-5");
        }
        if (detected != 0 && detected != 1) {
            throw ParseError("row " + std::to_string(line_no) + ": detection flag " +
                             std::to_string(detected) + " is not 0 or 1");
        }
        if (m.flux_err < 0.0) {
            throw ParseError("row " + std::to_string(line_no) + ": negative flux error");
        }
        m.passband = static_cast<int>(passband);
        m.detected = detected == 1;

        auto [it, inserted] = slot.try_emplace(id, curves.size());
        if (inserted) {
            curves.emplace_back();
            curves.back().object_id = id;
        }
        LightCurve& curve = curves[it->second];

        if (read_labels) {
            const auto original = parse_integer(cells[index[kColClass]], line_no, "class");
            int generalized = 0;
            try {
                generalized = remap_class(static_cast<int>(original));
            } catch (const UnknownClass& e) {
                throw UnknownClass("row " + std::to_string(line_no) + ": " + e.what());
            }
            if (curve.original_class && *curve.original_class != original) {
                throw ParseError("row " + std::to_string(line_no) + ": object " +
                                 std::to_string(id) + " has conflicting class labels");
            }
            curve.original_class = static_cast<int>(original);
            curve.generalized_class = generalized;
        }
        curve.measurements.push_back(m);
    }
    if (rows == 0) throw EmptyInput("input contains a header but no data rows");

    for (auto& c : curves) {
        std::stable_sort(c.measurements.begin(), c.measurements.end(),
                         [](const Measurement& a, const Measurement& b) { return a.time < b.time; });
    }
    return Dataset::from_curves(std::move(curves));
}

Dataset read_table_file(const std::string& path, bool has_labels) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open '" + path + "' for reading");
    return parse_table(in, has_labels);
}

void write_table(std::ostream& out, const Dataset& d) {
    const bool labels = !d.empty() && d.labeled();
    out << "object_id,mjd,passband,flux,flux_err,detected";
    if (labels) out << ",target";
    out << '\n';
    char buf[256];
    for (const auto& c : d.curves) {
        for (const auto& m : c.measurements) {
            int n = std::snprintf(buf, sizeof buf, "%lld,%.17g,%d,%.17g,%.17g,%d",
                                  static_cast<long long>(c.object_id), m.time, m.passband, m.flux,
                                  m.flux_err, m.detected ? 1 : 0);
            out.write(buf, n);
            if (labels) out << ',' << *c.original_class;
            out << '\n';
        }
    }
}

void write_table_file(const std::string& path, const Dataset& d) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot open '" + path + "' for writing");
    write_table(out, d);
    if (!out) throw IoError("failed writing '" + path + "'");
}

std::pair<Dataset, Dataset> split_train_validation(const Dataset& d, double fraction,
                                                   std::uint64_t seed) {
    if (!(fraction > 0.0 && fraction < 1.0)) {
        throw ConfigError("validation fraction must lie in (0, 1), got " + std::to_string(fraction));
    }
    if (d.empty()) throw ConfigError("cannot split an empty dataset");

    // Unlabeled curves form their own stratum (key -1).
    std::map<int, std::vector<std::size_t>> strata;
    for (std::size_t i = 0; i < d.curves.size(); ++i) {
        strata[d.curves[i].generalized_class.value_or(-1)].push_back(i);
    }

    const auto n = static_cast<double>(d.size());
    const auto total = static_cast<std::size_t>(std::floor(fraction * n + 0.5));

    // Largest-remainder apportionment; ties go to the lower class key.
    struct Share {
        int key;
        std::size_t count;
        double remainder;
    };
    std::vector<Share> shares;
    std::size_t assigned = 0;
    for (const auto& [key, members] : strata) {
        const double exact = fraction * static_cast<double>(members.size());
        const auto base = static_cast<std::size_t>(std::floor(exact));
        shares.push_back({key, base, exact - static_cast<double>(base)});
        assigned += base;
    }
    std::vector<std::size_t> order(shares.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return shares[a].remainder > shares[b].remainder;
    });
    for (std::size_t k = 0; assigned < total && k < order.size(); ++k) {
        auto& s = shares[order[k]];
        if (s.count < strata[s.key].size()) {
            ++s.count;
            ++assigned;
        }
    }

    std::vector<bool> in_validation(d.size(), false);
    Rng rng(mix_seed(seed, 0x5117));
    for (const auto& s : shares) {
        auto members = strata[s.key];
        for (std::size_t i = 0; i < s.count; ++i) {
            std::uniform_int_distribution<std::size_t> pick(i, members.size() - 1);
            std::swap(members[i], members[pick(rng)]);
            in_validation[members[i]] = true;
        }
    }

    std::vector<LightCurve> train, validation;
    for (std::size_t i = 0; i < d.curves.size(); ++i) {
        (in_validation[i] ? validation : train).push_back(d.curves[i]);
    }
    return {Dataset::from_curves(std::move(train)), Dataset::from_curves(std::move(validation))};
}

}  // namespace lcc
