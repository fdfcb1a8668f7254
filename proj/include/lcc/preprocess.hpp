#ifndef LCC_PREPROCESS_HPP
#define LCC_PREPROCESS_HPP

#include <cstdint>
#include <optional>
#include <vector>

#include <Eigen/Dense>

#include "lcc/constants.hpp"
#include "lcc/ingest.hpp"

namespace lcc {

using FeatureMatrix = Eigen::Matrix<double, Eigen::Dynamic, kFeatureCount>;
using Mask = Eigen::Array<bool, Eigen::Dynamic, 1>;
using ClassVector = Eigen::Matrix<double, kClassCount, 1>;

/// Fixed-shape network input for one object. Rows are timesteps; columns
/// follow FeatureColumn. Rows past the mask-true prefix hold kPaddingValue.
struct PreprocessedSequence {
    std::int64_t object_id = 0;
    FeatureMatrix features;
    Mask mask;
    std::optional<ClassVector> label_onehot;

    Eigen::Index length() const { return features.rows(); }
    Eigen::Index valid_count() const { return mask.count(); }
    /// Index of the one-hot entry; throws MissingLabel when unlabeled.
    int label() const;
};

inline constexpr double kPaddingValue = 0.0;

struct PreprocessConfig {
    int target_len = kDefaultSequenceLength;
    /// Rescaled times are divided by this before entering the feature matrix.
    double time_scale = 1.0;
};

/// Shifts times so the first measurement sits at 0.
LightCurve rescale_time(LightCurve lc);

/// Per-object min-max flux normalization to [0, 1]; flux errors are divided by
/// the same range. A constant-flux object maps to 0.5 with errors untouched.
LightCurve normalize_flux(LightCurve lc);

/// Keeps every measurement with time <= t_detect + horizon_days, where
/// t_detect is the first detected measurement. Expects raw (unshifted) times.
/// Throws NoDetection when no measurement is detected.
LightCurve truncate_after_detection(LightCurve lc, double horizon_days);

/// Throws SequenceTooLong when the curve does not fit in cfg.target_len rows.
PreprocessedSequence pad_and_mask(const LightCurve& lc, const PreprocessConfig& cfg = {});

struct PreprocessResult {
    std::vector<PreprocessedSequence> sequences;
    /// Objects with no detection, dropped under a horizon.
    std::vector<std::int64_t> dropped_no_detection;
};

/// truncate (optional) -> rescale_time -> normalize_flux -> pad_and_mask for
/// every object in input order.
PreprocessResult preprocess_dataset(const Dataset& d, std::optional<double> horizon_days,
                                    const PreprocessConfig& cfg = {});

ClassVector one_hot(int class_index);

}  // namespace lcc

#endif  // LCC_PREPROCESS_HPP
