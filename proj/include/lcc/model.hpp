#ifndef LCC_MODEL_HPP
#define LCC_MODEL_HPP

// Bidirectional LSTM classifier: masked BiLSTM -> masked global max pool ->
// dense softmax. Everything here is templated on the scalar type; the rest of
// the library instantiates it with double.

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "lcc/constants.hpp"
#include "lcc/errors.hpp"
#include "lcc/preprocess.hpp"

namespace lcc {

template <typename Scalar>
using MatrixX = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
template <typename Scalar>
using VectorX = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

/// Gate blocks inside the stacked 4H-row weight matrices, in storage order.
enum Gate : int { kInputGate = 0, kForgetGate = 1, kCellGate = 2, kOutputGate = 3 };
inline constexpr int kGateCount = 4;

/// One LSTM direction. The four gate matrices are stacked vertically in
/// (input, forget, cell candidate, output) order, so e.g. the forget gate's
/// input weights are input_weights.middleRows(H, H).
template <typename Scalar = double>
struct LstmCellParams {
    MatrixX<Scalar> input_weights;      // 4H x F
    MatrixX<Scalar> recurrent_weights;  // 4H x H
    VectorX<Scalar> bias;               // 4H

    static LstmCellParams zeros(Eigen::Index hidden, Eigen::Index features = kFeatureCount) {
        return {MatrixX<Scalar>::Zero(kGateCount * hidden, features),
                MatrixX<Scalar>::Zero(kGateCount * hidden, hidden),
                VectorX<Scalar>::Zero(kGateCount * hidden)};
    }

    Eigen::Index hidden_size() const { return recurrent_weights.cols(); }
    Eigen::Index feature_count() const { return input_weights.cols(); }

    auto gate_input_weights(Gate g) { return input_weights.middleRows(g * hidden_size(), hidden_size()); }
    auto gate_recurrent_weights(Gate g) {
        return recurrent_weights.middleRows(g * hidden_size(), hidden_size());
    }
    auto gate_bias(Gate g) { return bias.segment(g * hidden_size(), hidden_size()); }
    auto gate_bias(Gate g) const { return bias.segment(g * hidden_size(), hidden_size()); }

    void check_shape() const {
        const Eigen::Index h = hidden_size();
        if (h < 1 || recurrent_weights.rows() != kGateCount * h ||
            input_weights.rows() != kGateCount * h || bias.size() != kGateCount * h) {
            throw ShapeError("inconsistent LSTM cell dimensions");
        }
    }

    bool operator==(const LstmCellParams&) const = default;
};

template <typename Scalar = double>
struct ModelParams {
    LstmCellParams<Scalar> forward_cell;
    LstmCellParams<Scalar> backward_cell;
    MatrixX<Scalar> dense_weights;  // classes x 2H
    VectorX<Scalar> dense_bias;     // classes

    static ModelParams zeros(Eigen::Index hidden, Eigen::Index features = kFeatureCount) {
        return {LstmCellParams<Scalar>::zeros(hidden, features),
                LstmCellParams<Scalar>::zeros(hidden, features),
                MatrixX<Scalar>::Zero(kClassCount, 2 * hidden), VectorX<Scalar>::Zero(kClassCount)};
    }

    Eigen::Index hidden_size() const { return forward_cell.hidden_size(); }

    void check_shape() const {
        forward_cell.check_shape();
        backward_cell.check_shape();
        if (backward_cell.hidden_size() != hidden_size() ||
            backward_cell.feature_count() != forward_cell.feature_count() ||
            dense_weights.rows() != kClassCount || dense_weights.cols() != 2 * hidden_size() ||
            dense_bias.size() != kClassCount) {
            throw ShapeError("inconsistent model dimensions");
        }
    }

    Eigen::Index parameter_count() const;
    bool all_finite() const;

    template <typename Other>
    ModelParams<Other> cast() const;

    bool operator==(const ModelParams&) const = default;
};

/// Calls f(tensor_a, tensor_b, ...) once per parameter tensor, walking several
/// identically-shaped ModelParams in lockstep. The walk order is the
/// checkpoint order: forward W, U, b; backward W, U, b; dense W; dense b.
template <typename F, typename... Params>
void for_each_tensor(F&& f, Params&... params) {
    f(params.forward_cell.input_weights...);
    f(params.forward_cell.recurrent_weights...);
    f(params.forward_cell.bias...);
    f(params.backward_cell.input_weights...);
    f(params.backward_cell.recurrent_weights...);
    f(params.backward_cell.bias...);
    f(params.dense_weights...);
    f(params.dense_bias...);
}

inline constexpr std::array<const char*, 8> kTensorNames = {
    "forward.input_weights",  "forward.recurrent_weights",  "forward.bias",
    "backward.input_weights", "backward.recurrent_weights", "backward.bias",
    "dense.weights",          "dense.bias"};

template <typename Scalar>
Eigen::Index ModelParams<Scalar>::parameter_count() const {
    Eigen::Index n = 0;
    for_each_tensor([&n](const auto& t) { n += t.size(); }, *this);
    return n;
}

template <typename Scalar>
bool ModelParams<Scalar>::all_finite() const {
    bool finite = true;
    for_each_tensor([&finite](const auto& t) { finite = finite && t.allFinite(); }, *this);
    return finite;
}

template <typename Scalar>
template <typename Other>
ModelParams<Other> ModelParams<Scalar>::cast() const {
    auto cell = [](const LstmCellParams<Scalar>& c) {
        return LstmCellParams<Other>{c.input_weights.template cast<Other>(),
                                     c.recurrent_weights.template cast<Other>(),
                                     c.bias.template cast<Other>()};
    };
    return {cell(forward_cell), cell(backward_cell), dense_weights.template cast<Other>(),
            dense_bias.template cast<Other>()};
}

template <typename Scalar>
struct CellState {
    VectorX<Scalar> h;
    VectorX<Scalar> c;
};

namespace detail {

template <typename Scalar, typename Derived>
auto sigmoid(const Eigen::ArrayBase<Derived>& a) {
    return (Scalar(1) + (-a).exp()).inverse();
}

/// Scratch buffers for one cell evaluation, reused across timesteps.
template <typename Scalar>
struct StepBuffers {
    explicit StepBuffers(Eigen::Index hidden)
        : preact(kGateCount * hidden), gates(kGateCount * hidden), tanh_c(hidden) {}
    VectorX<Scalar> preact;
    VectorX<Scalar> gates;  // post-activation i, f, g, o
    VectorX<Scalar> tanh_c;
};

/// One LSTM step. Writes the new state into h and c (which may alias
/// h_prev / c_prev only if the caller copied them first).
template <typename Scalar, typename X, typename HPrev, typename CPrev>
void cell_step(const LstmCellParams<Scalar>& p, const Eigen::MatrixBase<X>& x,
               const Eigen::MatrixBase<HPrev>& h_prev, const Eigen::MatrixBase<CPrev>& c_prev,
               StepBuffers<Scalar>& buf, VectorX<Scalar>& h, VectorX<Scalar>& c) {
    const Eigen::Index hs = p.hidden_size();
    buf.preact.noalias() = p.input_weights * x;
    buf.preact.noalias() += p.recurrent_weights * h_prev;
    buf.preact += p.bias;

    auto a = buf.preact.array();
    auto g = buf.gates.array();
    g.segment(0, 2 * hs) = sigmoid<Scalar>(a.segment(0, 2 * hs));
    g.segment(2 * hs, hs) = a.segment(2 * hs, hs).tanh();
    g.segment(3 * hs, hs) = sigmoid<Scalar>(a.segment(3 * hs, hs));

    c.array() = g.segment(hs, hs) * c_prev.array() + g.segment(0, hs) * g.segment(2 * hs, hs);
    buf.tanh_c.array() = c.array().tanh();
    h.array() = g.segment(3 * hs, hs) * buf.tanh_c.array();
}

/// Everything one direction's backward pass needs. Columns are in
/// processing order k = 0..n-1; steps[k] is the timestep processed at k.
template <typename Scalar>
struct DirectionTrace {
    std::vector<Eigen::Index> steps;
    MatrixX<Scalar> inputs;  // F x n
    MatrixX<Scalar> gates;   // 4H x n, post-activation
    MatrixX<Scalar> cells;   // H x (n+1); column k is the state before step k
    MatrixX<Scalar> hidden;  // H x (n+1)
    MatrixX<Scalar> tanh_c;  // H x n
};

inline std::vector<Eigen::Index> valid_steps(const Mask& mask, bool reverse) {
    std::vector<Eigen::Index> steps;
    steps.reserve(static_cast<std::size_t>(mask.count()));
    for (Eigen::Index t = 0; t < mask.size(); ++t) {
        if (mask(t)) steps.push_back(t);
    }
    if (reverse) std::reverse(steps.begin(), steps.end());
    return steps;
}

/// Runs one direction over the valid timesteps only; masked steps are
/// skipped, which leaves (h, c) unchanged across them.
template <typename Scalar, typename Features>
DirectionTrace<Scalar> run_direction(const LstmCellParams<Scalar>& p,
                                     const Eigen::MatrixBase<Features>& features, const Mask& mask,
                                     bool reverse) {
    const Eigen::Index hs = p.hidden_size();
    DirectionTrace<Scalar> tr;
    tr.steps = valid_steps(mask, reverse);
    const auto n = static_cast<Eigen::Index>(tr.steps.size());
    tr.inputs.resize(features.cols(), n);
    for (Eigen::Index k = 0; k < n; ++k) {
        tr.inputs.col(k) = features.row(tr.steps[static_cast<std::size_t>(k)]).transpose().template cast<Scalar>();
    }
    tr.gates.resize(kGateCount * hs, n);
    tr.cells.resize(hs, n + 1);
    tr.hidden.resize(hs, n + 1);
    tr.tanh_c.resize(hs, n);
    tr.cells.col(0).setZero();
    tr.hidden.col(0).setZero();

    StepBuffers<Scalar> buf(hs);
    VectorX<Scalar> h(hs), c(hs);
    for (Eigen::Index k = 0; k < n; ++k) {
        cell_step(p, tr.inputs.col(k), tr.hidden.col(k), tr.cells.col(k), buf, h, c);
        tr.gates.col(k) = buf.gates;
        tr.tanh_c.col(k) = buf.tanh_c;
        tr.cells.col(k + 1) = c;
        tr.hidden.col(k + 1) = h;
    }
    return tr;
}

/// Scatters a direction's hidden states into columns [offset, offset+H) of
/// a T x 2H output.
template <typename Scalar>
void scatter_hidden(const DirectionTrace<Scalar>& tr, Eigen::Index offset, MatrixX<Scalar>& out) {
    const Eigen::Index hs = tr.hidden.rows();
    for (std::size_t k = 0; k < tr.steps.size(); ++k) {
        out.row(tr.steps[k]).segment(offset, hs) =
            tr.hidden.col(static_cast<Eigen::Index>(k) + 1).transpose();
    }
}

}  // namespace detail

/// Standard LSTM step with forget gate:
///   i = σ(W_i x + U_i h + b_i), f = σ(...), g = tanh(...), o = σ(...)
///   c' = f ⊙ c + i ⊙ g,  h' = o ⊙ tanh(c')
template <typename Scalar>
CellState<Scalar> lstm_cell_step(const VectorX<Scalar>& x, const VectorX<Scalar>& h_prev,
                                 const VectorX<Scalar>& c_prev, const LstmCellParams<Scalar>& p) {
    p.check_shape();
    const Eigen::Index hs = p.hidden_size();
    if (x.size() != p.feature_count() || h_prev.size() != hs || c_prev.size() != hs) {
        throw ShapeError("lstm_cell_step: input/state size does not match cell parameters");
    }
    detail::StepBuffers<Scalar> buf(hs);
    CellState<Scalar> out{VectorX<Scalar>(hs), VectorX<Scalar>(hs)};
    detail::cell_step(p, x, h_prev, c_prev, buf, out.h, out.c);
    return out;
}

/// Sentinel stored in hidden rows at masked timesteps. Pooling ignores them.
template <typename Scalar>
constexpr Scalar masked_sentinel() {
    return std::numeric_limits<Scalar>::quiet_NaN();
}

/// T x 2H hidden states: row t = (forward h_t, backward h_t). Masked rows are
/// filled with masked_sentinel().
template <typename Scalar, typename Features>
MatrixX<Scalar> bidirectional_encode(const Eigen::MatrixBase<Features>& features, const Mask& mask,
                                     const ModelParams<Scalar>& p) {
    p.check_shape();
    if (features.rows() != mask.size() || features.cols() != p.forward_cell.feature_count()) {
        throw ShapeError("bidirectional_encode: feature matrix does not match mask/model");
    }
    if (!mask.any()) throw EmptySequence("sequence has no valid timestep");
    const Eigen::Index hs = p.hidden_size();
    MatrixX<Scalar> out = MatrixX<Scalar>::Constant(features.rows(), 2 * hs, masked_sentinel<Scalar>());
    detail::scatter_hidden(detail::run_direction(p.forward_cell, features, mask, false), 0, out);
    detail::scatter_hidden(detail::run_direction(p.backward_cell, features, mask, true), hs, out);
    return out;
}

template <typename Scalar>
MatrixX<Scalar> bidirectional_encode(const PreprocessedSequence& seq, const ModelParams<Scalar>& p) {
    return bidirectional_encode(seq.features, seq.mask, p);
}

template <typename Scalar>
struct PoolResult {
    VectorX<Scalar> values;
    std::vector<Eigen::Index> argmax;  // timestep chosen per column
};

/// Per-column maximum over rows where mask is true. Ties resolve to the
/// earliest timestep.
template <typename Scalar>
PoolResult<Scalar> masked_global_max_pool_with_argmax(const MatrixX<Scalar>& hidden, const Mask& mask) {
    if (hidden.rows() != mask.size()) throw ShapeError("masked_global_max_pool: mask length mismatch");
    if (!mask.any()) throw EmptySequence("sequence has no valid timestep");
    PoolResult<Scalar> r{VectorX<Scalar>(hidden.cols()),
                         std::vector<Eigen::Index>(static_cast<std::size_t>(hidden.cols()), -1)};
    for (Eigen::Index j = 0; j < hidden.cols(); ++j) {
        auto& best = r.argmax[static_cast<std::size_t>(j)];
        for (Eigen::Index t = 0; t < hidden.rows(); ++t) {
            if (mask(t) && (best < 0 || hidden(t, j) > hidden(best, j))) best = t;
        }
        r.values(j) = hidden(best, j);
    }
    return r;
}

template <typename Scalar>
VectorX<Scalar> masked_global_max_pool(const MatrixX<Scalar>& hidden, const Mask& mask) {
    return masked_global_max_pool_with_argmax(hidden, mask).values;
}

/// Numerically stable softmax (max-subtracted).
template <typename Derived>
auto softmax(const Eigen::MatrixBase<Derived>& z) {
    using Scalar = typename Derived::Scalar;
    VectorX<Scalar> e = (z.array() - z.maxCoeff()).exp().matrix();
    return VectorX<Scalar>(e / e.sum());
}

template <typename Scalar>
VectorX<Scalar> dense_softmax(const VectorX<Scalar>& v, const ModelParams<Scalar>& p) {
    if (v.size() != p.dense_weights.cols() || p.dense_bias.size() != p.dense_weights.rows()) {
        throw ShapeError("dense_softmax: pooled width does not match dense layer");
    }
    VectorX<Scalar> z = p.dense_bias;
    z.noalias() += p.dense_weights * v;
    return softmax(z);
}

/// Class probabilities for one sequence.
template <typename Scalar>
VectorX<Scalar> forward(const ModelParams<Scalar>& p, const PreprocessedSequence& seq) {
    return dense_softmax(masked_global_max_pool(bidirectional_encode(seq, p), seq.mask), p);
}

/// N x 5 probabilities, one row per input sequence.
template <typename Scalar>
MatrixX<Scalar> predict(const ModelParams<Scalar>& p, std::span<const PreprocessedSequence> seqs) {
    MatrixX<Scalar> probs(static_cast<Eigen::Index>(seqs.size()), kClassCount);
    for (std::size_t i = 0; i < seqs.size(); ++i) {
        probs.row(static_cast<Eigen::Index>(i)) = forward(p, seqs[i]).transpose();
    }
    return probs;
}

/// Index of the largest entry; ties resolve to the lowest index.
template <typename Derived>
int argmax_lowest(const Eigen::MatrixBase<Derived>& v) {
    Eigen::Index best = 0;
    for (Eigen::Index i = 1; i < v.size(); ++i) {
        if (v(i) > v(best)) best = i;
    }
    return static_cast<int>(best);
}

}  // namespace lcc

#endif  // LCC_MODEL_HPP
