#ifndef LCC_METRICS_HPP
#define LCC_METRICS_HPP

#include <array>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "lcc/constants.hpp"
#include "lcc/ingest.hpp"
#include "lcc/model.hpp"
#include "lcc/preprocess.hpp"

namespace lcc {

enum class CurveKind { kRoc, kPrecisionRecall };

const char* to_string(CurveKind kind);

/// One-vs-rest curve. ROC points are (FPR, TPR); PR points are
/// (recall, precision). thresholds[i] is the score cut producing points[i];
/// anchor points carry +infinity.
struct CurvePoints {
    CurveKind kind = CurveKind::kRoc;
    int class_index = 0;
    std::vector<std::pair<double, double>> points;
    std::vector<double> thresholds;
};

using ConfusionMatrix = Eigen::Matrix<long long, kClassCount, kClassCount>;

/// Sweeps thresholds over the distinct scores in descending order; tied
/// scores move together. Throws DegenerateLabels when there are no
/// positives, or (ROC only) no negatives.
CurvePoints curve_points(std::span<const double> scores, std::span<const bool> positives,
                         CurveKind kind, int class_index = 0);

/// Trapezoidal area under the points.
double auc_trapezoid(const CurvePoints& c);

/// Rows are true classes, columns argmax predictions (lowest index on ties).
ConfusionMatrix confusion_matrix(const MatrixX<double>& probs, std::span<const int> labels);

struct EvalReport {
    /// NaN where a class has no positives (or, for ROC, no negatives) in the set.
    std::array<double, kClassCount> auc_roc{};
    std::array<double, kClassCount> auc_pr{};
    ConfusionMatrix confusion = ConfusionMatrix::Zero();
    std::array<long long, kClassCount> counts{};
    long long n_objects = 0;
    std::optional<double> horizon_days;
    std::vector<std::int64_t> dropped_no_detection;
    std::vector<CurvePoints> curves;  // ROC then PR for each class that has one

    double accuracy() const;
};

/// Scores a labeled probability matrix.
EvalReport evaluate_probabilities(const MatrixX<double>& probs, std::span<const int> labels);

/// Preprocess (optionally truncated at the horizon), predict and score.
EvalReport evaluate(const ModelParams<double>& model, const Dataset& test_set,
                    std::optional<double> horizon_days, const PreprocessConfig& cfg = {});

/// JSON document with auc_roc, auc_pr, confusion, counts and bookkeeping.
std::string report_to_json(const EvalReport& r);

/// Delimited text: class,kind,threshold,x,y.
void write_curves_csv(std::ostream& out, const EvalReport& r);

}  // namespace lcc

#endif  // LCC_METRICS_HPP
