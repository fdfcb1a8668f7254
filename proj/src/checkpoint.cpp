#include "lcc/checkpoint.hpp"

#include <array>
#include <bit>
#include <charconv>
#include <fstream>
#include <iterator>
#include <sstream>

#include "lcc/errors.hpp"

namespace lcc {

namespace {

constexpr const char* kMagic = "lcc-checkpoint";
constexpr const char* kEndManifest = "end-manifest";

void put_f64(std::string& buf, double v) {
    const auto bits = std::bit_cast<std::uint64_t>(v);
    for (int i = 0; i < 8; ++i) buf.push_back(static_cast<char>((bits >> (8 * i)) & 0xFF));
}

double get_f64(const char* p) {
    std::uint64_t bits = 0;
    for (int i = 0; i < 8; ++i) bits |= static_cast<std::uint64_t>(static_cast<unsigned char>(p[i])) << (8 * i);
    return std::bit_cast<double>(bits);
}

std::string format_real(double v) {
    std::array<char, 64> buf{};
    const auto [ptr, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), v);
    return std::string(buf.data(), ptr);
}

template <typename T>
T manifest_number(const std::map<std::string, std::string>& m, const std::string& key) {
    const auto it = m.find(key);
    if (it == m.end()) throw CorruptCheckpoint("checkpoint manifest lacks '" + key + "'");
    T value{};
    const auto& s = it->second;
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), value);
    if (ec != std::errc() || ptr != s.data() + s.size()) {
        throw CorruptCheckpoint("checkpoint manifest has malformed '" + key + "': " + s);
    }
    return value;
}

std::size_t payload_values(Eigen::Index hidden) {
    return static_cast<std::size_t>(ModelParams<double>::zeros(hidden).parameter_count());
}

}  // namespace

void save_model(std::ostream& out, const ModelCheckpoint& ckpt) {
    const auto& p = ckpt.params;
    p.check_shape();
    if (p.forward_cell.feature_count() != kFeatureCount) throw ShapeError("checkpoint expects 5 input features");

    std::string payload;
    payload.reserve(payload_values(p.hidden_size()) * 8);
    for_each_tensor(
        [&payload](const auto& t) {
            for (Eigen::Index r = 0; r < t.rows(); ++r) {
                for (Eigen::Index c = 0; c < t.cols(); ++c) put_f64(payload, t(r, c));
            }
        },
        p);

    std::map<std::string, std::string> manifest = ckpt.metadata;
    manifest["format_version"] = std::to_string(kCheckpointFormatVersion);
    manifest["hidden_size"] = std::to_string(p.hidden_size());
    manifest["feature_count"] = std::to_string(kFeatureCount);
    manifest["sequence_length"] = std::to_string(ckpt.preprocess.target_len);
    manifest["class_count"] = std::to_string(kClassCount);
    manifest["time_scale"] = format_real(ckpt.preprocess.time_scale);
    manifest["seed"] = std::to_string(ckpt.seed);
    manifest["payload_bytes"] = std::to_string(payload.size());

    out << kMagic << '\n';
    for (const auto& [key, value] : manifest) {
        if (key.find_first_of("=\n") != std::string::npos || value.find('\n') != std::string::npos) {
            throw ConfigError("checkpoint metadata entry '" + key + "' is not a single key=value line");
        }
        out << key << '=' << value << '\n';
    }
    out << kEndManifest << '\n';
    out.write(payload.data(), static_cast<std::streamsize>(payload.size()));
    if (!out) throw IoError("failed writing checkpoint");
}

void save_model(const std::string& path, const ModelCheckpoint& ckpt) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open '" + path + "' for writing");
    save_model(out, ckpt);
}

ModelCheckpoint load_model(std::istream& in) {
    std::string line;
    if (!std::getline(in, line) || line != kMagic) throw CorruptCheckpoint("not an lcc checkpoint");

    std::map<std::string, std::string> manifest;
    bool terminated = false;
    while (std::getline(in, line)) {
        if (line == kEndManifest) {
            terminated = true;
            break;
        }
        const auto eq = line.find('=');
        if (eq == std::string::npos) throw CorruptCheckpoint("malformed manifest line: " + line);
        manifest[line.substr(0, eq)] = line.substr(eq + 1);
    }
    if (!terminated) throw CorruptCheckpoint("checkpoint manifest is not terminated");

    const auto version = manifest_number<int>(manifest, "format_version");
    if (version != kCheckpointFormatVersion) {
        throw VersionError("checkpoint format_version " + std::to_string(version) + " is not supported (expected " +
                           std::to_string(kCheckpointFormatVersion) + ")");
    }
    const auto hidden = manifest_number<long>(manifest, "hidden_size");
    if (hidden < 1 || hidden > 65536) throw CorruptCheckpoint("checkpoint hidden_size out of range");
    if (manifest_number<int>(manifest, "feature_count") != kFeatureCount ||
        manifest_number<int>(manifest, "class_count") != kClassCount) {
        throw CorruptCheckpoint("checkpoint feature/class counts do not match this build");
    }

    ModelCheckpoint ckpt;
    ckpt.preprocess.target_len = manifest_number<int>(manifest, "sequence_length");
    ckpt.preprocess.time_scale = manifest_number<double>(manifest, "time_scale");
    ckpt.seed = manifest_number<std::uint64_t>(manifest, "seed");
    if (ckpt.preprocess.target_len < 1 || !(ckpt.preprocess.time_scale > 0.0)) {
        throw CorruptCheckpoint("checkpoint preprocessing settings out of range");
    }

    const std::size_t expected = payload_values(hidden) * 8;
    if (manifest_number<std::size_t>(manifest, "payload_bytes") != expected) {
        throw CorruptCheckpoint("checkpoint payload_bytes disagrees with hidden_size " + std::to_string(hidden));
    }
    const std::string payload{std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
    if (payload.size() != expected) {
        throw CorruptCheckpoint("checkpoint payload holds " + std::to_string(payload.size()) + " bytes, expected " +
                                std::to_string(expected));
    }

    ckpt.params = ModelParams<double>::zeros(hidden);
    const char* cursor = payload.data();
    for_each_tensor(
        [&cursor](auto& t) {
            for (Eigen::Index r = 0; r < t.rows(); ++r) {
                for (Eigen::Index c = 0; c < t.cols(); ++c, cursor += 8) t(r, c) = get_f64(cursor);
            }
        },
        ckpt.params);

    for (const char* key : {"format_version", "hidden_size", "feature_count", "sequence_length", "class_count",
                            "time_scale", "seed", "payload_bytes"}) {
        manifest.erase(key);
    }
    ckpt.metadata = std::move(manifest);
    return ckpt;
}

ModelCheckpoint load_model(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open '" + path + "' for reading");
    return load_model(in);
}

}  // namespace lcc
