#ifndef LCC_CHECKPOINT_HPP
#define LCC_CHECKPOINT_HPP

#include <cstdint>
#include <iosfwd>
#include <map>
#include <string>

#include "lcc/model.hpp"
#include "lcc/preprocess.hpp"

namespace lcc {

/// Checkpoint layout (format_version 1):
///
///   lcc-checkpoint\n
///   key=value\n ...            manifest; always includes format_version,
///                              hidden_size, feature_count, sequence_length,
///                              class_count, payload_bytes
///   end-manifest\n
///   <payload>                  float64 little-endian values
///
/// Payload order: forward cell W_i W_f W_g W_o, U_i U_f U_g U_o,
/// b_i b_f b_g b_o; backward cell likewise; dense weights; dense bias.
/// Every matrix is written row-major.
inline constexpr int kCheckpointFormatVersion = 1;

struct ModelCheckpoint {
    ModelParams<double> params;
    PreprocessConfig preprocess;
    std::uint64_t seed = 0;
    /// Extra manifest entries, written sorted by key.
    std::map<std::string, std::string> metadata;
};

void save_model(std::ostream& out, const ModelCheckpoint& ckpt);
void save_model(const std::string& path, const ModelCheckpoint& ckpt);

/// Throws VersionError on a format_version mismatch and CorruptCheckpoint on
/// any structural problem (bad magic, missing keys, dimension/payload mismatch).
ModelCheckpoint load_model(std::istream& in);
ModelCheckpoint load_model(const std::string& path);

}  // namespace lcc

#endif  // LCC_CHECKPOINT_HPP
