// lcc: light-curve classifier command line.
//
//   lcc synth     --n-per-class K --seed S --out data.csv
//   lcc train     --data data.csv --out model.lcc [--val-fraction 0.1 --hidden 64 ...]
//   lcc eval      --model model.lcc --data test.csv [--horizon-days D] --report r.json --curves c.csv
//   lcc predict   --model model.lcc --data data.csv --out probs.csv
//   lcc gradcheck --seed S
//
// Exit codes: 0 success, 1 usage error, 2 data error, 3 failed self-check.

#include <chrono>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "lcc/checkpoint.hpp"
#include "lcc/errors.hpp"
#include "lcc/gradcheck.hpp"
#include "lcc/ingest.hpp"
#include "lcc/metrics.hpp"
#include "lcc/preprocess.hpp"
#include "lcc/synthgen.hpp"
#include "lcc/trainer.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitData = 2;
constexpr int kExitCheckFailed = 3;

/// Resolved-config log: always to stderr, additionally appended to --log.
class RunLog {
public:
    void open(const std::string& path) {
        if (path.empty()) return;
        file_.open(path, std::ios::app);
        if (!file_) throw lcc::IoError("cannot open log file '" + path + "'");
    }
    void line(const std::string& text) {
        std::cerr << "[lcc] " << text << '\n';
        if (file_) file_ << text << '\n';
    }
    template <typename T>
    void kv(const std::string& key, const T& value) {
        std::ostringstream os;
        os << key << '=' << value;
        line(os.str());
    }

private:
    std::ofstream file_;
};

std::optional<lcc::ClassVector> parse_weights(const std::string& spec,
                                              std::span<const lcc::PreprocessedSequence> train_set) {
    if (spec.empty()) return std::nullopt;
    if (spec == "balanced") return lcc::balanced_class_weights(train_set);
    lcc::ClassVector w;
    std::stringstream ss(spec);
    std::string item;
    int k = 0;
    while (std::getline(ss, item, ',')) {
        if (k >= lcc::kClassCount) break;
        try {
            w(k++) = std::stod(item);
        } catch (const std::exception&) {
            throw CLI::ValidationError("--class-weights", "not a number: " + item);
        }
    }
    if (k != lcc::kClassCount || std::getline(ss, item, ',')) {
        throw CLI::ValidationError("--class-weights", "expected 'balanced' or five comma-separated values");
    }
    return w;
}

std::string format_weights(const std::optional<lcc::ClassVector>& w) {
    if (!w) return "none";
    std::ostringstream os;
    os.precision(9);
    for (int k = 0; k < lcc::kClassCount; ++k) os << (k ? "," : "") << (*w)(k);
    return os.str();
}

void write_text_file(const std::string& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw lcc::IoError("cannot open '" + path + "' for writing");
    out << text;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Light-curve classifier: bidirectional LSTM over padded, masked photometric sequences"};
    app.require_subcommand(1);
    std::string log_path;
    app.add_option("--log", log_path, "Append the resolved configuration of this run to a file");

    // synth
    auto* synth = app.add_subcommand("synth", "Generate a labeled synthetic five-class dataset");
    int n_per_class = 200;
    std::uint64_t synth_seed = 0;
    std::string synth_out;
    synth->add_option("--n-per-class", n_per_class, "Objects per class")->check(CLI::PositiveNumber);
    synth->add_option("--seed", synth_seed, "Generator seed");
    synth->add_option("--out", synth_out, "Output CSV")->required();

    // train
    auto* train_cmd = app.add_subcommand("train", "Train a classifier on a labeled CSV");
    std::string train_data, train_out, class_weights_spec, history_path;
    double val_fraction = 0.1;
    lcc::TrainConfig cfg;
    lcc::PreprocessConfig prep_cfg;
    train_cmd->add_option("--data", train_data, "Labeled input CSV")->required();
    train_cmd->add_option("--out", train_out, "Checkpoint to write")->required();
    train_cmd->add_option("--val-fraction", val_fraction, "Fraction held out for validation");
    train_cmd->add_option("--hidden", cfg.hidden_size, "LSTM hidden size per direction");
    train_cmd->add_option("--epochs", cfg.max_epochs, "Maximum epochs");
    train_cmd->add_option("--batch", cfg.batch_size, "Mini-batch size");
    train_cmd->add_option("--lr", cfg.learning_rate, "Adam learning rate");
    train_cmd->add_option("--beta1", cfg.adam_beta1, "Adam beta1");
    train_cmd->add_option("--beta2", cfg.adam_beta2, "Adam beta2");
    train_cmd->add_option("--epsilon", cfg.adam_epsilon, "Adam epsilon");
    train_cmd->add_option("--patience", cfg.patience, "Early-stopping patience (epochs)");
    train_cmd->add_option("--class-weights", class_weights_spec, "'balanced' or v0,v1,v2,v3,v4");
    train_cmd->add_option("--seed", cfg.seed, "Seed for split, initialization and shuffling");
    train_cmd->add_option("--sequence-length", prep_cfg.target_len, "Padded sequence length")
        ->check(CLI::PositiveNumber);
    train_cmd->add_option("--time-scale", prep_cfg.time_scale, "Divide rescaled times by this")
        ->check(CLI::PositiveNumber);
    train_cmd->add_option("--history", history_path, "Write per-epoch records as JSON lines");

    // eval
    auto* eval_cmd = app.add_subcommand("eval", "Evaluate a checkpoint on a labeled CSV");
    std::string eval_model, eval_data, report_path, curves_path;
    std::optional<double> horizon;
    eval_cmd->add_option("--model", eval_model, "Checkpoint")->required();
    eval_cmd->add_option("--data", eval_data, "Labeled input CSV")->required();
    eval_cmd->add_option("--horizon-days", horizon, "Keep only data up to D days after first detection")
        ->check(CLI::PositiveNumber);
    eval_cmd->add_option("--report", report_path, "JSON report (stdout when omitted)");
    eval_cmd->add_option("--curves", curves_path, "ROC/PR points as CSV");

    // predict
    auto* predict_cmd = app.add_subcommand("predict", "Write class probabilities for every object");
    std::string predict_model, predict_data, predict_out;
    predict_cmd->add_option("--model", predict_model, "Checkpoint")->required();
    predict_cmd->add_option("--data", predict_data, "Input CSV (labels optional)")->required();
    predict_cmd->add_option("--out", predict_out, "Output CSV")->required();

    // gradcheck
    auto* gradcheck_cmd = app.add_subcommand("gradcheck", "Compare analytic gradients with finite differences");
    std::uint64_t gradcheck_seed = 0;
    lcc::GradCheckOptions gc_opts;
    double gc_tolerance = 1e-6;
    gradcheck_cmd->add_option("--seed", gradcheck_seed, "Seed for the random model and batch");
    gradcheck_cmd->add_option("--hidden", gc_opts.hidden, "Hidden size")->check(CLI::PositiveNumber);
    gradcheck_cmd->add_option("--length", gc_opts.sequence_length, "Sequence length")->check(CLI::PositiveNumber);
    gradcheck_cmd->add_option("--batch", gc_opts.batch, "Batch size")->check(CLI::PositiveNumber);
    gradcheck_cmd->add_option("--step", gc_opts.step, "Central-difference step")->check(CLI::PositiveNumber);
    gradcheck_cmd->add_option("--tolerance", gc_tolerance, "Maximum accepted relative error");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        std::cerr << "error: " << e.what() << "\n\n" << app.help();
        return kExitUsage;
    }

    RunLog log;
    try {
        log.open(log_path);

        if (*synth) {
            log.line("command=synth");
            log.kv("n_per_class", n_per_class);
            log.kv("seed", synth_seed);
            log.kv("out", synth_out);
            const auto d = lcc::generate_dataset(n_per_class, synth_seed);
            lcc::write_table_file(synth_out, d);
            std::cout << "wrote " << d.size() << " objects to " << synth_out << '\n';
            return kExitOk;
        }

        if (*train_cmd) {
            const auto data = lcc::read_table_file(train_data, true);
            const auto [train_set, val_set] = lcc::split_train_validation(data, val_fraction, cfg.seed);
            const auto train_seqs = lcc::preprocess_dataset(train_set, std::nullopt, prep_cfg).sequences;
            const auto val_seqs = lcc::preprocess_dataset(val_set, std::nullopt, prep_cfg).sequences;
            try {
                cfg.class_weights = parse_weights(class_weights_spec, train_seqs);
            } catch (const CLI::ValidationError& e) {
                std::cerr << "error: " << e.what() << '\n';
                return kExitUsage;
            }

            log.line("command=train");
            log.kv("data", train_data);
            log.kv("objects", data.size());
            log.kv("train_objects", train_seqs.size());
            log.kv("val_objects", val_seqs.size());
            log.kv("val_fraction", val_fraction);
            log.kv("hidden", cfg.hidden_size);
            log.kv("epochs", cfg.max_epochs);
            log.kv("batch", cfg.batch_size);
            log.kv("lr", cfg.learning_rate);
            log.kv("beta1", cfg.adam_beta1);
            log.kv("beta2", cfg.adam_beta2);
            log.kv("epsilon", cfg.adam_epsilon);
            log.kv("patience", cfg.patience);
            log.kv("class_weights", format_weights(cfg.class_weights));
            log.kv("seed", cfg.seed);
            log.kv("sequence_length", prep_cfg.target_len);
            log.kv("time_scale", prep_cfg.time_scale);

            std::ofstream history;
            if (!history_path.empty()) {
                history.open(history_path);
                if (!history) throw lcc::IoError("cannot open '" + history_path + "' for writing");
            }
            const auto result = lcc::train(train_seqs, val_seqs, cfg, [&](const lcc::EpochRecord& r) {
                char buf[200];
                std::snprintf(buf, sizeof buf,
                              "{\"epoch\":%d,\"train_loss\":%.9g,\"val_loss\":%.9g,\"val_acc\":%.9g}", r.epoch,
                              r.train_loss, r.val_loss, r.val_accuracy);
                if (history) history << buf << '\n' << std::flush;
                std::cerr << "[lcc] " << buf << '\n';
            });

            lcc::ModelCheckpoint ckpt{result.params, prep_cfg, cfg.seed, {}};
            ckpt.metadata["created_by"] = "lcc train";
            ckpt.metadata["best_epoch"] = std::to_string(result.history.best_epoch);
            ckpt.metadata["epochs_run"] = std::to_string(result.history.epochs.size());
            lcc::save_model(train_out, ckpt);
            log.kv("best_epoch", result.history.best_epoch);
            log.kv("stopped_early", result.history.stopped_early);
            std::cout << "trained " << result.history.epochs.size() << " epochs (best " << result.history.best_epoch
                      << "); wrote " << train_out << '\n';
            return kExitOk;
        }

        if (*eval_cmd) {
            const auto ckpt = lcc::load_model(eval_model);
            const auto data = lcc::read_table_file(eval_data, true);
            log.line("command=eval");
            log.kv("model", eval_model);
            log.kv("data", eval_data);
            log.kv("horizon_days", horizon ? std::to_string(*horizon) : std::string("none"));
            log.kv("hidden", ckpt.params.hidden_size());
            log.kv("sequence_length", ckpt.preprocess.target_len);
            log.kv("time_scale", ckpt.preprocess.time_scale);

            const auto report = lcc::evaluate(ckpt.params, data, horizon, ckpt.preprocess);
            const std::string json = lcc::report_to_json(report);
            if (report_path.empty()) {
                std::cout << json;
            } else {
                write_text_file(report_path, json);
            }
            if (!curves_path.empty()) {
                std::ostringstream curves;
                lcc::write_curves_csv(curves, report);
                write_text_file(curves_path, curves.str());
            }
            log.kv("evaluated", report.n_objects);
            log.kv("dropped_no_detection", report.dropped_no_detection.size());
            log.kv("accuracy", report.accuracy());
            return kExitOk;
        }

        if (*predict_cmd) {
            const auto ckpt = lcc::load_model(predict_model);
            const auto data = lcc::read_table_file(predict_data, false);
            log.line("command=predict");
            log.kv("model", predict_model);
            log.kv("data", predict_data);
            const auto seqs = lcc::preprocess_dataset(data, std::nullopt, ckpt.preprocess).sequences;
            const auto probs = lcc::predict(ckpt.params, std::span<const lcc::PreprocessedSequence>(seqs));

            std::ostringstream out;
            out << "object_id,p_s_like,p_fast,p_long,p_periodic,p_non_periodic,predicted\n";
            char buf[64];
            for (std::size_t i = 0; i < seqs.size(); ++i) {
                const auto row = static_cast<Eigen::Index>(i);
                out << seqs[i].object_id;
                for (int k = 0; k < lcc::kClassCount; ++k) {
                    std::snprintf(buf, sizeof buf, ",%.9g", probs(row, k));
                    out << buf;
                }
                out << ',' << lcc::argmax_lowest(probs.row(row)) << '\n';
            }
            write_text_file(predict_out, out.str());
            std::cout << "wrote " << seqs.size() << " predictions to " << predict_out << '\n';
            return kExitOk;
        }

        if (*gradcheck_cmd) {
            log.line("command=gradcheck");
            log.kv("seed", gradcheck_seed);
            log.kv("hidden", gc_opts.hidden);
            log.kv("length", gc_opts.sequence_length);
            log.kv("batch", gc_opts.batch);
            log.kv("step", gc_opts.step);
            const auto start = std::chrono::steady_clock::now();
            const auto r = lcc::run_gradient_check(gradcheck_seed, gc_opts);
            const double seconds =
                std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
            std::printf("parameters_checked=%lld\nmax_relative_error=%.3e\nmax_absolute_error=%.3e\n"
                        "max_unfloored_relative_error=%.3e\nworst_parameter=%s\npooling_margin=%.3e\n"
                        "redraws=%d\nseconds=%.2f\n",
                        static_cast<long long>(r.parameters_checked), r.max_relative_error,
                        r.max_absolute_error, r.max_unfloored_relative_error, r.worst_parameter.c_str(),
                        r.pooling_margin, r.redraws, seconds);
            return r.max_relative_error <= gc_tolerance ? kExitOk : kExitCheckFailed;
        }
    } catch (const lcc::Error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitData;
    }
    return kExitUsage;
}
