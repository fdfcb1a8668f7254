#include "lcc/gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

#include "lcc/random.hpp"
#include "lcc/trainer.hpp"

namespace lcc {

namespace {

double forward_loss(const ModelParams<double>& model, std::span<const PreprocessedSequence> batch,
                    const std::optional<ClassVector>& class_weights) {
    const MatrixX<double> probs = predict(model, batch);
    MatrixX<double> labels(probs.rows(), kClassCount);
    for (std::size_t i = 0; i < batch.size(); ++i) {
        labels.row(static_cast<Eigen::Index>(i)) = batch[i].label_onehot->transpose();
    }
    return cross_entropy_loss(probs, labels, class_weights);
}

}  // namespace

double relative_error(double analytic, double numeric) {
    return std::abs(analytic - numeric) /
           std::max({std::abs(analytic), std::abs(numeric), kGradientMagnitudeFloor});
}

double pooling_margin(const ModelParams<double>& model, std::span<const PreprocessedSequence> batch) {
    double margin = std::numeric_limits<double>::infinity();
    for (const auto& seq : batch) {
        const MatrixX<double> hidden = bidirectional_encode(seq, model);
        for (Eigen::Index j = 0; j < hidden.cols(); ++j) {
            double best = -std::numeric_limits<double>::infinity();
            double second = best;
            for (Eigen::Index t = 0; t < hidden.rows(); ++t) {
                if (!seq.mask(t)) continue;
                const double v = hidden(t, j);
                if (v > best) {
                    second = best;
                    best = v;
                } else if (v > second) {
                    second = v;
                }
            }
            if (std::isfinite(second)) margin = std::min(margin, best - second);
        }
    }
    return margin;
}

GradCheckResult finite_difference_check(const ModelParams<double>& model,
                                        std::span<const PreprocessedSequence> batch,
                                        const std::optional<ClassVector>& class_weights,
                                        double step) {
    const auto analytic = compute_gradients(model, batch, class_weights).gradients;
    ModelParams<double> probe = model;
    GradCheckResult result;
    result.pooling_margin = pooling_margin(model, batch);
    std::size_t tensor = 0;
    for_each_tensor(
        [&](auto& theta, const auto& grad) {
            for (Eigen::Index c = 0; c < theta.cols(); ++c) {
                for (Eigen::Index r = 0; r < theta.rows(); ++r) {
                    const double saved = theta(r, c);
                    theta(r, c) = saved + step;
                    const double up = forward_loss(probe, batch, class_weights);
                    theta(r, c) = saved - step;
                    const double down = forward_loss(probe, batch, class_weights);
                    theta(r, c) = saved;

                    const double numeric = (up - down) / (2.0 * step);
                    const double rel = relative_error(grad(r, c), numeric);
                    const double scale = std::max(std::abs(grad(r, c)), std::abs(numeric));
                    if (scale > 0.0) {
                        result.max_unfloored_relative_error = std::max(
                            result.max_unfloored_relative_error, std::abs(grad(r, c) - numeric) / scale);
                    }
                    result.max_absolute_error =
                        std::max(result.max_absolute_error, std::abs(grad(r, c) - numeric));
                    if (rel > result.max_relative_error || result.worst_parameter.empty()) {
                        result.max_relative_error = std::max(rel, result.max_relative_error);
                        result.worst_parameter = std::string(kTensorNames[tensor]) + "[" +
                                                 std::to_string(r) + "," + std::to_string(c) + "]";
                    }
                    ++result.parameters_checked;
                }
            }
            ++tensor;
        },
        probe, analytic);
    return result;
}

ModelParams<double> random_model(int hidden, std::uint64_t seed) {
    auto p = ModelParams<double>::zeros(hidden);
    Rng rng(mix_seed(seed, 0x60D));
    std::uniform_real_distribution<double> u(-0.5, 0.5);
    for_each_tensor(
        [&](auto& t) {
            for (Eigen::Index c = 0; c < t.cols(); ++c) {
                for (Eigen::Index r = 0; r < t.rows(); ++r) t(r, c) = u(rng);
            }
        },
        p);
    return p;
}

std::vector<PreprocessedSequence> random_batch(const GradCheckOptions& opts, std::uint64_t seed) {
    Rng rng(mix_seed(seed, 0xBA7C));
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::uniform_int_distribution<int> length(1, opts.sequence_length);
    std::uniform_int_distribution<int> label(0, kClassCount - 1);
    std::uniform_int_distribution<int> band(0, kPassbandCount - 1);
    std::vector<PreprocessedSequence> batch;
    for (int b = 0; b < opts.batch; ++b) {
        LightCurve lc;
        lc.object_id = b;
        lc.generalized_class = label(rng);
        const int n = length(rng);
        double t = 0.0;
        for (int i = 0; i < n; ++i) {
            lc.measurements.push_back({t, unit(rng), 0.1 * unit(rng), band(rng), unit(rng) < 0.5});
            t += 0.5 * unit(rng);
        }
        batch.push_back(pad_and_mask(lc, {opts.sequence_length, 1.0}));
    }
    return batch;
}

GradCheckResult run_gradient_check(std::uint64_t seed, const GradCheckOptions& opts) {
    int redraws = 0;
    for (std::uint64_t draw = seed;; draw = mix_seed(draw, 0xD1FF), ++redraws) {
        const auto model = random_model(opts.hidden, draw);
        const auto batch = random_batch(opts, draw);
        if (pooling_margin(model, batch) < kMinPoolingMargin) continue;
        auto result = finite_difference_check(model, batch, std::nullopt, opts.step);
        result.redraws = redraws;
        return result;
    }
}

}  // namespace lcc
