#include "lcc/preprocess.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "lcc/errors.hpp"

namespace lcc {

int PreprocessedSequence::label() const {
    if (!label_onehot) {
        throw MissingLabel("object " + std::to_string(object_id) + " has no label");
    }
    Eigen::Index idx = 0;
    label_onehot->maxCoeff(&idx);
    return static_cast<int>(idx);
}

ClassVector one_hot(int class_index) {
    if (class_index < 0 || class_index >= kClassCount) {
        throw LabelError("class index " + std::to_string(class_index) + " outside 0-4");
    }
    ClassVector v = ClassVector::Zero();
    v(class_index) = 1.0;
    return v;
}

LightCurve rescale_time(LightCurve lc) {
    if (lc.measurements.empty()) return lc;
    const double first = lc.measurements.front().time;
    for (auto& m : lc.measurements) m.time -= first;
    return lc;
}

LightCurve normalize_flux(LightCurve lc) {
    if (lc.measurements.empty()) return lc;
    const auto [lo, hi] = std::minmax_element(
        lc.measurements.begin(), lc.measurements.end(),
        [](const Measurement& a, const Measurement& b) { return a.flux < b.flux; });
    const double f_min = lo->flux;
    const double range = hi->flux - f_min;
    if (!(range > 0.0)) {
        for (auto& m : lc.measurements) m.flux = 0.5;
        return lc;
    }
    for (auto& m : lc.measurements) {
        m.flux = (m.flux - f_min) / range;
        m.flux_err /= range;
    }
    return lc;
}

LightCurve truncate_after_detection(LightCurve lc, double horizon_days) {
    if (!(horizon_days > 0.0)) {
        throw ConfigError("horizon must be positive, got " + std::to_string(horizon_days));
    }
    const auto first_detection =
        std::find_if(lc.measurements.begin(), lc.measurements.end(),
                     [](const Measurement& m) { return m.detected; });
    if (first_detection == lc.measurements.end()) {
        throw NoDetection("object " + std::to_string(lc.object_id) + " has no detection");
    }
    const double cutoff = first_detection->time + horizon_days;
    std::erase_if(lc.measurements, [cutoff](const Measurement& m) { return m.time > cutoff; });
    return lc;
}

PreprocessedSequence pad_and_mask(const LightCurve& lc, const PreprocessConfig& cfg) {
    const auto n = static_cast<Eigen::Index>(lc.measurements.size());
    if (n > cfg.target_len) {
        throw SequenceTooLong("object " + std::to_string(lc.object_id) + " has " +
                              std::to_string(n) + " measurements; limit is " +
                              std::to_string(cfg.target_len));
    }
    PreprocessedSequence seq;
    seq.object_id = lc.object_id;
    seq.features = FeatureMatrix::Constant(cfg.target_len, kFeatureCount, kPaddingValue);
    seq.mask = Mask::Constant(cfg.target_len, false);
    for (Eigen::Index t = 0; t < n; ++t) {
        const Measurement& m = lc.measurements[static_cast<std::size_t>(t)];
        seq.features(t, kFlux) = m.flux;
        seq.features(t, kFluxErr) = m.flux_err;
        seq.features(t, kTime) = m.time / cfg.time_scale;
        seq.features(t, kPassband) = static_cast<double>(m.passband);
        seq.features(t, kDetected) = m.detected ? 1.0 : 0.0;
        seq.mask(t) = true;
    }
    if (lc.generalized_class) seq.label_onehot = one_hot(*lc.generalized_class);
    return seq;
}

PreprocessResult preprocess_dataset(const Dataset& d, std::optional<double> horizon_days,
                                    const PreprocessConfig& cfg) {
    PreprocessResult result;
    result.sequences.reserve(d.size());
    for (const auto& curve : d.curves) {
        LightCurve lc = curve;
        if (horizon_days) {
            try {
                lc = truncate_after_detection(std::move(lc), *horizon_days);
            } catch (const NoDetection&) {
                result.dropped_no_detection.push_back(curve.object_id);
                continue;
            }
        }
        result.sequences.push_back(pad_and_mask(normalize_flux(rescale_time(std::move(lc))), cfg));
    }
    return result;
}

}  // namespace lcc
