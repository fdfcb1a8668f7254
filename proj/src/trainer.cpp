#include "lcc/trainer.hpp"

#include <numeric>
#include <random>
#include <string>

#include "lcc/errors.hpp"
#include "lcc/random.hpp"

namespace lcc {

void TrainConfig::validate() const {
    auto fail = [](const std::string& what) { throw ConfigError("invalid training config: " + what); };
    if (max_epochs < 1) fail("max_epochs must be >= 1");
    if (batch_size < 1) fail("batch_size must be >= 1");
    if (!(learning_rate > 0.0)) fail("learning_rate must be > 0");
    if (!(adam_beta1 > 0.0 && adam_beta1 < 1.0)) fail("adam_beta1 must lie in (0, 1)");
    if (!(adam_beta2 > 0.0 && adam_beta2 < 1.0)) fail("adam_beta2 must lie in (0, 1)");
    if (!(adam_epsilon > 0.0)) fail("adam_epsilon must be > 0");
    if (patience < 1) fail("patience must be >= 1");
    if (hidden_size < 1) fail("hidden_size must be >= 1");
    if (class_weights && !(class_weights->array() > 0.0).all()) fail("class weights must be positive");
}

ModelParams<double> initialize_params(int hidden, std::uint64_t seed) {
    if (hidden < 1) throw ConfigError("hidden size must be >= 1");
    const Eigen::Index h = hidden;
    auto p = ModelParams<double>::zeros(h);
    Rng rng(mix_seed(seed, 0x1417));

    auto glorot = [&rng](auto&& block, Eigen::Index fan_in, Eigen::Index fan_out) {
        const double a = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
        std::uniform_real_distribution<double> u(-a, a);
        for (Eigen::Index r = 0; r < block.rows(); ++r) {
            for (Eigen::Index c = 0; c < block.cols(); ++c) block(r, c) = u(rng);
        }
    };
    for (auto* cell : {&p.forward_cell, &p.backward_cell}) {
        for (int g = 0; g < kGateCount; ++g) {
            glorot(cell->gate_input_weights(static_cast<Gate>(g)), kFeatureCount, h);
        }
        for (int g = 0; g < kGateCount; ++g) {
            glorot(cell->gate_recurrent_weights(static_cast<Gate>(g)), h, h);
        }
        cell->gate_bias(kForgetGate).setOnes();
    }
    glorot(p.dense_weights, 2 * h, kClassCount);
    return p;
}

ClassVector balanced_class_weights(std::span<const PreprocessedSequence> seqs) {
    ClassVector counts = ClassVector::Zero();
    for (const auto& s : seqs) counts(s.label()) += 1.0;
    const auto n = static_cast<double>(seqs.size());
    ClassVector w;
    for (int c = 0; c < kClassCount; ++c) {
        w(c) = counts(c) > 0.0 ? n / (kClassCount * counts(c)) : 1.0;
    }
    return w;
}

EvalLoss evaluate_loss(const ModelParams<double>& p, std::span<const PreprocessedSequence> seqs,
                       const std::optional<ClassVector>& class_weights) {
    if (seqs.empty()) return {};
    const MatrixX<double> probs = predict(p, seqs);
    MatrixX<double> labels(probs.rows(), kClassCount);
    std::size_t correct = 0;
    for (std::size_t i = 0; i < seqs.size(); ++i) {
        const auto row = static_cast<Eigen::Index>(i);
        const int label = seqs[i].label();
        labels.row(row) = one_hot(label).transpose();
        if (argmax_lowest(probs.row(row)) == label) ++correct;
    }
    return {cross_entropy_loss(probs, labels, class_weights),
            static_cast<double>(correct) / static_cast<double>(seqs.size())};
}

TrainResult train(std::span<const PreprocessedSequence> train_set,
                  std::span<const PreprocessedSequence> val_set, const TrainConfig& cfg,
                  const EpochCallback& on_epoch) {
    cfg.validate();
    if (train_set.empty()) throw ConfigError("training set is empty");
    if (val_set.empty()) throw ConfigError("validation set is empty");
    for (const auto& s : train_set) s.label();
    for (const auto& s : val_set) s.label();

    TrainResult result{initialize_params(cfg.hidden_size, cfg.seed), {}};
    ModelParams<double> params = result.params;
    auto adam = AdamState<double>::for_params(params);
    EarlyStopping stopping(cfg.patience);
    Rng shuffle_rng(mix_seed(cfg.seed, 0x5A11));

    std::vector<std::size_t> order(train_set.size());
    std::iota(order.begin(), order.end(), 0);
    std::vector<PreprocessedSequence> batch;
    const auto batch_size = static_cast<std::size_t>(cfg.batch_size);

    for (int epoch = 1; epoch <= cfg.max_epochs; ++epoch) {
        std::shuffle(order.begin(), order.end(), shuffle_rng);
        double loss_sum = 0.0;
        std::size_t batches = 0;
        for (std::size_t start = 0; start < order.size(); start += batch_size) {
            const std::size_t end = std::min(start + batch_size, order.size());
            batch.clear();
            for (std::size_t i = start; i < end; ++i) batch.push_back(train_set[order[i]]);
            const auto g = compute_gradients<double>(params, batch, cfg.class_weights);
            adam_step(params, g.gradients, adam, cfg);
            loss_sum += g.loss;
            ++batches;
        }

        const EvalLoss val = evaluate_loss(params, val_set, cfg.class_weights);
        const EpochRecord record{epoch, loss_sum / static_cast<double>(batches), val.loss, val.accuracy};
        result.history.epochs.push_back(record);
        if (on_epoch) on_epoch(record);

        const bool stop = stopping.observe(epoch, val.loss);
        if (stopping.improved_at(epoch)) result.params = params;
        if (stop) {
            result.history.stopped_early = epoch < cfg.max_epochs;
            break;
        }
    }
    result.history.best_epoch = stopping.best_epoch();
    return result;
}

}  // namespace lcc
