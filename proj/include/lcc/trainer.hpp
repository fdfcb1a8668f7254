#ifndef LCC_TRAINER_HPP
#define LCC_TRAINER_HPP

#include <cmath>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "lcc/model.hpp"
#include "lcc/preprocess.hpp"

namespace lcc {

struct TrainConfig {
    int max_epochs = 50;
    int batch_size = 32;
    double learning_rate = 1e-3;
    double adam_beta1 = 0.9;
    double adam_beta2 = 0.999;
    double adam_epsilon = 1e-8;
    int patience = 5;
    std::optional<ClassVector> class_weights;
    std::uint64_t seed = 0;
    int hidden_size = 64;

    /// Throws ConfigError naming the first violated constraint.
    void validate() const;
};

struct EpochRecord {
    int epoch = 0;  // 1-based
    double train_loss = 0.0;
    double val_loss = 0.0;
    double val_accuracy = 0.0;
};

struct TrainHistory {
    std::vector<EpochRecord> epochs;
    int best_epoch = 0;  // 1-based; 0 before any epoch ran
    bool stopped_early = false;
};

template <typename Scalar = double>
struct AdamState {
    ModelParams<Scalar> first_moment;
    ModelParams<Scalar> second_moment;
    std::int64_t step_count = 0;

    static AdamState for_params(const ModelParams<Scalar>& p) {
        return {ModelParams<Scalar>::zeros(p.hidden_size(), p.forward_cell.feature_count()),
                ModelParams<Scalar>::zeros(p.hidden_size(), p.forward_cell.feature_count()), 0};
    }
};

/// Mean over rows of -w_c * ln(p_c), c being the true class. Throws
/// ShapeError on mismatched shapes.
template <typename Scalar>
Scalar cross_entropy_loss(const MatrixX<Scalar>& probs, const MatrixX<Scalar>& labels_onehot,
                          const std::optional<ClassVector>& class_weights = std::nullopt) {
    if (probs.rows() != labels_onehot.rows() || probs.cols() != kClassCount ||
        labels_onehot.cols() != kClassCount || probs.rows() == 0) {
        throw ShapeError("cross_entropy_loss: expected matching nonempty N x 5 matrices");
    }
    Scalar total = 0;
    for (Eigen::Index i = 0; i < probs.rows(); ++i) {
        const int c = argmax_lowest(labels_onehot.row(i));
        Scalar term = -std::log(probs(i, c));
        if (class_weights) term *= static_cast<Scalar>((*class_weights)(c));
        total += term;
    }
    return total / static_cast<Scalar>(probs.rows());
}

template <typename Scalar = double>
struct GradientResult {
    ModelParams<Scalar> gradients;
    Scalar loss = 0;  // batch loss at the current parameters
};

namespace detail {

/// BPTT through one direction. dh holds dLoss/dh for each processing step
/// (H x n); accumulates into grads.
template <typename Scalar>
void backprop_direction(const LstmCellParams<Scalar>& p, const DirectionTrace<Scalar>& tr,
                        const MatrixX<Scalar>& dh_out, LstmCellParams<Scalar>& grads) {
    const Eigen::Index hs = p.hidden_size();
    const auto n = static_cast<Eigen::Index>(tr.steps.size());
    MatrixX<Scalar> dpre(kGateCount * hs, n);
    Eigen::Array<Scalar, Eigen::Dynamic, 1> dh = Eigen::Array<Scalar, Eigen::Dynamic, 1>::Zero(hs);
    Eigen::Array<Scalar, Eigen::Dynamic, 1> dc = Eigen::Array<Scalar, Eigen::Dynamic, 1>::Zero(hs);
    VectorX<Scalar> dh_next = VectorX<Scalar>::Zero(hs);

    for (Eigen::Index k = n - 1; k >= 0; --k) {
        const auto gates = tr.gates.col(k).array();
        const auto i = gates.segment(0, hs);
        const auto f = gates.segment(hs, hs);
        const auto g = gates.segment(2 * hs, hs);
        const auto o = gates.segment(3 * hs, hs);
        const auto tc = tr.tanh_c.col(k).array();
        const auto c_prev = tr.cells.col(k).array();

        dh = dh_out.col(k).array() + dh_next.array();
        dc += dh * o * (Scalar(1) - tc.square());

        auto da = dpre.col(k).array();
        da.segment(0, hs) = dc * g * i * (Scalar(1) - i);
        da.segment(hs, hs) = dc * c_prev * f * (Scalar(1) - f);
        da.segment(2 * hs, hs) = dc * i * (Scalar(1) - g.square());
        da.segment(3 * hs, hs) = dh * tc * o * (Scalar(1) - o);

        dc *= f;
        dh_next.noalias() = p.recurrent_weights.transpose() * dpre.col(k);
    }

    grads.input_weights.noalias() += dpre * tr.inputs.transpose();
    grads.recurrent_weights.noalias() += dpre * tr.hidden.leftCols(n).transpose();
    grads.bias.noalias() += dpre.rowwise().sum();
}

}  // namespace detail

/// Exact gradient of the mean (optionally class-weighted) cross-entropy over
/// the batch. Max pooling routes each column's gradient to its argmax
/// timestep only; masked timesteps receive nothing. Examples are reduced in
/// input order.
template <typename Scalar>
GradientResult<Scalar> compute_gradients(const ModelParams<Scalar>& p,
                                         std::span<const PreprocessedSequence> batch,
                                         const std::optional<ClassVector>& class_weights = std::nullopt) {
    p.check_shape();
    if (batch.empty()) throw ShapeError("compute_gradients: empty batch");
    const Eigen::Index hs = p.hidden_size();
    GradientResult<Scalar> r{ModelParams<Scalar>::zeros(hs, p.forward_cell.feature_count()), 0};
    const Scalar inv_n = Scalar(1) / static_cast<Scalar>(batch.size());

    for (const auto& seq : batch) {
        const int label = seq.label();
        if (!seq.mask.any()) throw EmptySequence("object " + std::to_string(seq.object_id) + " is empty");
        const auto fwd = detail::run_direction(p.forward_cell, seq.features, seq.mask, false);
        const auto bwd = detail::run_direction(p.backward_cell, seq.features, seq.mask, true);

        MatrixX<Scalar> hidden = MatrixX<Scalar>::Constant(seq.length(), 2 * hs, masked_sentinel<Scalar>());
        detail::scatter_hidden(fwd, 0, hidden);
        detail::scatter_hidden(bwd, hs, hidden);
        const auto pooled = masked_global_max_pool_with_argmax(hidden, seq.mask);
        const VectorX<Scalar> probs = dense_softmax(pooled.values, p);

        const Scalar weight = class_weights ? static_cast<Scalar>((*class_weights)(label)) : Scalar(1);
        Scalar term = -std::log(probs(label));
        if (class_weights) term *= weight;
        r.loss += term;

        VectorX<Scalar> dz = probs;
        dz(label) -= Scalar(1);
        if (class_weights) dz *= weight;
        dz *= inv_n;
        r.gradients.dense_weights.noalias() += dz * pooled.values.transpose();
        r.gradients.dense_bias += dz;
        const VectorX<Scalar> dv = p.dense_weights.transpose() * dz;

        // Map timestep -> processing index for each direction.
        std::vector<Eigen::Index> rank(static_cast<std::size_t>(seq.length()), -1);
        for (std::size_t k = 0; k < fwd.steps.size(); ++k) {
            rank[static_cast<std::size_t>(fwd.steps[k])] = static_cast<Eigen::Index>(k);
        }
        const auto n = static_cast<Eigen::Index>(fwd.steps.size());
        MatrixX<Scalar> dh_fwd = MatrixX<Scalar>::Zero(hs, n);
        MatrixX<Scalar> dh_bwd = MatrixX<Scalar>::Zero(hs, n);
        for (Eigen::Index j = 0; j < hs; ++j) {
            const auto kf = rank[static_cast<std::size_t>(pooled.argmax[static_cast<std::size_t>(j)])];
            const auto kb = n - 1 - rank[static_cast<std::size_t>(pooled.argmax[static_cast<std::size_t>(hs + j)])];
            dh_fwd(j, kf) += dv(j);
            dh_bwd(j, kb) += dv(hs + j);
        }
        detail::backprop_direction(p.forward_cell, fwd, dh_fwd, r.gradients.forward_cell);
        detail::backprop_direction(p.backward_cell, bwd, dh_bwd, r.gradients.backward_cell);
    }
    r.loss *= inv_n;
    return r;
}

/// Bias-corrected Adam, epsilon outside the square root:
///   m <- b1 m + (1-b1) g;  v <- b2 v + (1-b2) g^2
///   theta <- theta - lr * m_hat / (sqrt(v_hat) + eps)
template <typename Scalar>
void adam_step(ModelParams<Scalar>& params, const ModelParams<Scalar>& grads, AdamState<Scalar>& state,
               const TrainConfig& cfg) {
    ++state.step_count;
    const auto b1 = static_cast<Scalar>(cfg.adam_beta1);
    const auto b2 = static_cast<Scalar>(cfg.adam_beta2);
    const auto lr = static_cast<Scalar>(cfg.learning_rate);
    const auto eps = static_cast<Scalar>(cfg.adam_epsilon);
    const Scalar c1 = Scalar(1) - std::pow(b1, static_cast<Scalar>(state.step_count));
    const Scalar c2 = Scalar(1) - std::pow(b2, static_cast<Scalar>(state.step_count));
    for_each_tensor(
        [&](auto& theta, const auto& g, auto& m, auto& v) {
            m = b1 * m + (Scalar(1) - b1) * g;
            v.array() = b2 * v.array() + (Scalar(1) - b2) * g.array().square();
            theta.array() -= lr * (m.array() / c1) / ((v.array() / c2).sqrt() + eps);
        },
        params, grads, state.first_moment, state.second_moment);
}

/// Glorot-uniform weights per gate matrix, zero biases except the forget
/// gate (1.0). Deterministic in seed.
ModelParams<double> initialize_params(int hidden, std::uint64_t seed);

/// w_c = N / (5 N_c); classes absent from the set get weight 1.
ClassVector balanced_class_weights(std::span<const PreprocessedSequence> seqs);

/// Early-stopping bookkeeping on validation loss.
class EarlyStopping {
public:
    explicit EarlyStopping(int patience) : patience_(patience) {}

    /// Records an epoch's validation loss; returns true when training should stop.
    bool observe(int epoch, double val_loss) {
        if (best_epoch_ == 0 || val_loss < best_loss_) {
            best_loss_ = val_loss;
            best_epoch_ = epoch;
            return false;
        }
        return epoch - best_epoch_ >= patience_;
    }
    bool improved_at(int epoch) const { return best_epoch_ == epoch; }
    int best_epoch() const { return best_epoch_; }
    double best_loss() const { return best_loss_; }

private:
    int patience_;
    int best_epoch_ = 0;
    double best_loss_ = 0.0;
};

struct EvalLoss {
    double loss = 0.0;
    double accuracy = 0.0;
};

/// Mean cross-entropy and argmax accuracy (lowest-index ties) over a set.
EvalLoss evaluate_loss(const ModelParams<double>& p, std::span<const PreprocessedSequence> seqs,
                       const std::optional<ClassVector>& class_weights = std::nullopt);

struct TrainResult {
    ModelParams<double> params;  // best-epoch weights
    TrainHistory history;
};

using EpochCallback = std::function<void(const EpochRecord&)>;

/// Mini-batch Adam with per-epoch seeded shuffling and early stopping on
/// validation loss. Returns the weights from the best epoch.
TrainResult train(std::span<const PreprocessedSequence> train_set,
                  std::span<const PreprocessedSequence> val_set, const TrainConfig& cfg,
                  const EpochCallback& on_epoch = {});

}  // namespace lcc

#endif  // LCC_TRAINER_HPP
