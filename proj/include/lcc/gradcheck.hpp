#ifndef LCC_GRADCHECK_HPP
#define LCC_GRADCHECK_HPP

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "lcc/model.hpp"
#include "lcc/preprocess.hpp"

namespace lcc {

struct GradCheckOptions {
    int hidden = 8;
    int sequence_length = 12;
    int batch = 4;
    double step = 1e-5;
};

struct GradCheckResult {
    double max_relative_error = 0.0;
    /// Same ratio without the magnitude floor; informational only.
    double max_unfloored_relative_error = 0.0;
    double max_absolute_error = 0.0;
    Eigen::Index parameters_checked = 0;
    std::string worst_parameter;  // "<tensor>[row,col]"
    /// Smallest gap between the top two valid values of any pooled column.
    double pooling_margin = 0.0;
    /// Seeds rejected because the pooling margin was too small.
    int redraws = 0;
};

/// Gradients smaller than this are compared on an absolute scale: a central
/// difference with step 1e-5 carries O(1e-10) truncation error regardless of
/// the gradient's size.
inline constexpr double kGradientMagnitudeFloor = 1e-3;

/// Max pooling is not differentiable where two valid timesteps tie; a check
/// whose top-two gap is below this is redrawn.
inline constexpr double kMinPoolingMargin = 1e-4;

/// |a - n| / max(|a|, |n|, kGradientMagnitudeFloor).
double relative_error(double analytic, double numeric);

/// Smallest top-two gap over all pooled columns of all sequences.
double pooling_margin(const ModelParams<double>& model, std::span<const PreprocessedSequence> batch);

/// Compares compute_gradients against central finite differences of the
/// forward-only loss for every parameter of the model.
GradCheckResult finite_difference_check(const ModelParams<double>& model,
                                        std::span<const PreprocessedSequence> batch,
                                        const std::optional<ClassVector>& class_weights,
                                        double step);

/// Random model with every entry in [-0.5, 0.5]; random labeled sequences of
/// random valid length, padded to opts.sequence_length.
ModelParams<double> random_model(int hidden, std::uint64_t seed);
std::vector<PreprocessedSequence> random_batch(const GradCheckOptions& opts, std::uint64_t seed);

/// The self-check used by `lcc gradcheck`. Redraws the model and batch (with
/// derived seeds) while the pooling margin is below kMinPoolingMargin.
GradCheckResult run_gradient_check(std::uint64_t seed, const GradCheckOptions& opts = {});

}  // namespace lcc

#endif  // LCC_GRADCHECK_HPP
