#include "lcc/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <memory>
#include <numeric>

#include <json.hpp>

#include "lcc/errors.hpp"

namespace lcc {

const char* to_string(CurveKind kind) { return kind == CurveKind::kRoc ? "roc" : "pr"; }

CurvePoints curve_points(std::span<const double> scores, std::span<const bool> positives,
                         CurveKind kind, int class_index) {
    if (scores.size() != positives.size()) throw ShapeError("curve_points: score/label length mismatch");
    if (scores.empty()) throw DegenerateLabels("curve_points: no samples");
    const auto n_pos = static_cast<double>(std::count(positives.begin(), positives.end(), true));
    const auto n_neg = static_cast<double>(positives.size()) - n_pos;
    if (n_pos == 0) throw DegenerateLabels("curve_points: no positive samples for class " + std::to_string(class_index));
    if (kind == CurveKind::kRoc && n_neg == 0) {
        throw DegenerateLabels("curve_points: no negative samples for class " + std::to_string(class_index));
    }

    std::vector<std::size_t> order(scores.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });

    CurvePoints c{kind, class_index, {}, {}};
    constexpr double kInf = std::numeric_limits<double>::infinity();
    if (kind == CurveKind::kRoc) {
        c.points.emplace_back(0.0, 0.0);
        c.thresholds.push_back(kInf);
    }
    double tp = 0, fp = 0;
    for (std::size_t i = 0; i < order.size();) {
        const double threshold = scores[order[i]];
        for (; i < order.size() && scores[order[i]] == threshold; ++i) {
            (positives[order[i]] ? tp : fp) += 1.0;
        }
        if (kind == CurveKind::kRoc) {
            c.points.emplace_back(fp / n_neg, tp / n_pos);
        } else {
            const double precision = tp / (tp + fp);
            if (c.points.empty()) {
                c.points.emplace_back(0.0, precision);
                c.thresholds.push_back(kInf);
            }
            c.points.emplace_back(tp / n_pos, precision);
        }
        c.thresholds.push_back(threshold);
    }
    return c;
}

double auc_trapezoid(const CurvePoints& c) {
    double area = 0.0;
    for (std::size_t i = 1; i < c.points.size(); ++i) {
        const auto [x0, y0] = c.points[i - 1];
        const auto [x1, y1] = c.points[i];
        area += (x1 - x0) * (y0 + y1) / 2.0;
    }
    return area;
}

ConfusionMatrix confusion_matrix(const MatrixX<double>& probs, std::span<const int> labels) {
    if (probs.rows() != static_cast<Eigen::Index>(labels.size()) || probs.cols() != kClassCount) {
        throw ShapeError("confusion_matrix: expected N x 5 probabilities and N labels");
    }
    ConfusionMatrix m = ConfusionMatrix::Zero();
    for (std::size_t i = 0; i < labels.size(); ++i) {
        if (labels[i] < 0 || labels[i] >= kClassCount) {
            throw LabelError("label " + std::to_string(labels[i]) + " outside 0-4");
        }
        ++m(labels[i], argmax_lowest(probs.row(static_cast<Eigen::Index>(i))));
    }
    return m;
}

double EvalReport::accuracy() const {
    return n_objects == 0 ? 0.0 : static_cast<double>(confusion.trace()) / static_cast<double>(n_objects);
}

EvalReport evaluate_probabilities(const MatrixX<double>& probs, std::span<const int> labels) {
    EvalReport r;
    r.confusion = confusion_matrix(probs, labels);
    r.n_objects = static_cast<long long>(labels.size());
    for (int label : labels) ++r.counts[static_cast<std::size_t>(label)];

    const double nan = std::numeric_limits<double>::quiet_NaN();
    std::vector<double> scores(labels.size());
    std::unique_ptr<bool[]> positives(new bool[labels.size()]);
    for (int k = 0; k < kClassCount; ++k) {
        for (std::size_t i = 0; i < labels.size(); ++i) {
            scores[i] = probs(static_cast<Eigen::Index>(i), k);
            positives[i] = labels[i] == k;
        }
        const std::span<const bool> pos(positives.get(), labels.size());
        const auto n_pos = r.counts[static_cast<std::size_t>(k)];
        r.auc_roc[static_cast<std::size_t>(k)] = nan;
        r.auc_pr[static_cast<std::size_t>(k)] = nan;
        if (n_pos > 0 && n_pos < r.n_objects) {
            r.curves.push_back(curve_points(scores, pos, CurveKind::kRoc, k));
            r.auc_roc[static_cast<std::size_t>(k)] = auc_trapezoid(r.curves.back());
        }
        if (n_pos > 0) {
            r.curves.push_back(curve_points(scores, pos, CurveKind::kPrecisionRecall, k));
            r.auc_pr[static_cast<std::size_t>(k)] = auc_trapezoid(r.curves.back());
        }
    }
    return r;
}

EvalReport evaluate(const ModelParams<double>& model, const Dataset& test_set,
                    std::optional<double> horizon_days, const PreprocessConfig& cfg) {
    if (!test_set.labeled()) throw MissingLabel("evaluation requires a labeled dataset");
    auto prep = preprocess_dataset(test_set, horizon_days, cfg);
    std::vector<int> labels;
    labels.reserve(prep.sequences.size());
    for (const auto& s : prep.sequences) labels.push_back(s.label());
    const MatrixX<double> probs = predict(model, std::span<const PreprocessedSequence>(prep.sequences));

    EvalReport r = evaluate_probabilities(probs, labels);
    r.horizon_days = horizon_days;
    r.dropped_no_detection = std::move(prep.dropped_no_detection);
    return r;
}

namespace {

nlohmann::json number_or_null(double v) {
    return std::isfinite(v) ? nlohmann::json(v) : nlohmann::json(nullptr);
}

}  // namespace

std::string report_to_json(const EvalReport& r) {
    using nlohmann::json;
    json doc;
    doc["class_names"] = json::array();
    for (auto name : kClassNames) doc["class_names"].push_back(std::string(name));
    doc["auc_roc"] = json::array();
    doc["auc_pr"] = json::array();
    for (int k = 0; k < kClassCount; ++k) {
        doc["auc_roc"].push_back(number_or_null(r.auc_roc[static_cast<std::size_t>(k)]));
        doc["auc_pr"].push_back(number_or_null(r.auc_pr[static_cast<std::size_t>(k)]));
    }
    doc["confusion"] = json::array();
    for (int row = 0; row < kClassCount; ++row) {
        json line = json::array();
        for (int col = 0; col < kClassCount; ++col) line.push_back(r.confusion(row, col));
        doc["confusion"].push_back(line);
    }
    doc["confusion_orientation"] = "rows=true,cols=predicted";
    doc["counts"] = r.counts;
    doc["n_objects"] = r.n_objects;
    doc["accuracy"] = r.accuracy();
    doc["horizon_days"] = r.horizon_days ? json(*r.horizon_days) : json(nullptr);
    doc["dropped_no_detection"] = r.dropped_no_detection.size();
    return doc.dump(2) + "\n";
}

void write_curves_csv(std::ostream& out, const EvalReport& r) {
    out << "class,kind,threshold,x,y\n";
    char buf[160];
    for (const auto& c : r.curves) {
        for (std::size_t i = 0; i < c.points.size(); ++i) {
            const int n = std::snprintf(buf, sizeof buf, "%d,%s,%.9g,%.9g,%.9g\n", c.class_index,
                                        to_string(c.kind), c.thresholds[i], c.points[i].first,
                                        c.points[i].second);
            out.write(buf, n);
        }
    }
}

}  // namespace lcc
