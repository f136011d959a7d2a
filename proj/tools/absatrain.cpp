// absatrain: train, attack and evaluate small BERT-style ABSA models with
// FGM adversarial training, from SemEval XML or the built-in synthetic data.

#include <CLI11.hpp>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <numeric>
#include <string>
#include <vector>

#include "absa/adversarial.hpp"
#include "absa/checkpoint.hpp"
#include "absa/csv.hpp"
#include "absa/dataset.hpp"
#include "absa/error.hpp"
#include "absa/metrics.hpp"
#include "absa/model.hpp"
#include "absa/semeval.hpp"
#include "absa/svg_plot.hpp"
#include "absa/sweep.hpp"
#include "absa/tokenizer.hpp"
#include "absa/trainer.hpp"

namespace fs = std::filesystem;
using namespace absa;

namespace {

std::string g_data_dir;

// Relative inputs resolve against --data-dir / $ABSA_DATA_DIR when set.
std::string resolve(const std::string& path) {
    if (path.empty() || g_data_dir.empty() || fs::path(path).is_absolute()) return path;
    return (fs::path(g_data_dir) / path).string();
}

struct ModelFlags {
    std::size_t hidden = 64, layers = 2, heads = 2, ff = 256, max_len = 64;

    void attach(CLI::App* cmd) {
        cmd->add_option("--hidden", hidden, "encoder width d");
        cmd->add_option("--layers", layers, "encoder depth");
        cmd->add_option("--heads", heads, "attention heads");
        cmd->add_option("--ff", ff, "feed-forward width");
        cmd->add_option("--max-len", max_len, "maximum sequence length");
    }

    ModelConfig to_config(std::size_t vocab_size, Task task) const {
        ModelConfig cfg;
        cfg.vocab_size = vocab_size;
        cfg.hidden = hidden;
        cfg.layers = layers;
        cfg.heads = heads;
        cfg.ff = ff;
        cfg.max_len = max_len;
        cfg.task = task;
        return cfg;
    }
};

struct DataFlags {
    std::string train_records, val_records, test_records, vocab_path;
    std::size_t synthetic = 0;
    std::size_t val_count = 150;
    std::uint64_t synthetic_seed = 1;

    void attach(CLI::App* cmd) {
        cmd->add_option("--train-records", train_records, "training record file (JSONL)");
        cmd->add_option("--val-records", val_records, "validation record file");
        cmd->add_option("--test-records", test_records, "test record file");
        cmd->add_option("--vocab", vocab_path, "vocab file (sets the model vocab size)");
        cmd->add_option("--synthetic", synthetic,
                        "generate this many synthetic training sentences instead of reading records");
        cmd->add_option("--val-count", val_count,
                        "with no --val-records, split off this many trailing examples (0 = none)");
        cmd->add_option("--synthetic-seed", synthetic_seed, "seed of the synthetic corpus");
    }

    // Loads data and resolves the vocabulary size the model needs.
    std::pair<DataBundle, std::size_t> load(Task task, std::size_t max_len) const {
        DataBundle bundle;
        bundle.task = task;
        if (synthetic > 0) {
            auto corpus = synthetic_sentences(std::max<std::size_t>(synthetic, 64),
                                              Rng(synthetic_seed).stream("vocab-corpus"));
            Vocab vocab = build_vocab(sentence_texts(corpus), 256);
            bundle = synthetic_bundle(task, synthetic, synthetic_seed, vocab, max_len);
            bundle.name = "synthetic";
            return {std::move(bundle), vocab.size()};
        }

        if (train_records.empty()) {
            throw ConfigError("either --train-records or --synthetic is required");
        }
        if (vocab_path.empty()) throw ConfigError("--vocab is required with record files");
        Vocab vocab = Vocab::load(resolve(vocab_path));
        bundle.name = fs::path(train_records).stem().string();

        auto load_split = [&](const std::string& path, std::vector<AeExample>& ae,
                              std::vector<AscExample>& asc) {
            if (path.empty()) return;
            std::string kind = record_file_kind(resolve(path));
            std::string want = to_string(task);
            if (kind != want) {
                throw ConfigError(path + " holds '" + kind + "' records but the task is '" + want + "'");
            }
            if (task == Task::AspectExtraction) {
                ae = read_ae_records(resolve(path));
            } else {
                asc = read_asc_records(resolve(path));
            }
        };

        load_split(train_records, bundle.train_ae, bundle.train_asc);
        load_split(val_records, bundle.val_ae, bundle.val_asc);
        load_split(test_records, bundle.test_ae, bundle.test_asc);

        if (val_records.empty() && val_count > 0) {
            if (task == Task::AspectExtraction) {
                auto [tr, va] = split_train_validation(std::move(bundle.train_ae), val_count);
                bundle.train_ae = std::move(tr);
                bundle.val_ae = std::move(va);
            } else {
                auto [tr, va] = split_train_validation(std::move(bundle.train_asc), val_count);
                bundle.train_asc = std::move(tr);
                bundle.val_asc = std::move(va);
            }
        }
        return {std::move(bundle), vocab.size()};
    }
};

void write_run_outputs(const std::string& out_dir, const TrainConfig& cfg, const TrainResult& result) {
    fs::create_directories(out_dir);
    write_text_file((fs::path(out_dir) / ("run_" + result.run_id + ".csv")).string(),
                    rows_to_csv(result.rows));
    std::string manifest = result.model.to_json();
    save_checkpoint((fs::path(out_dir) / ("run_" + result.run_id + ".best.ckpt")).string(),
                    result.best_params, manifest);
    save_checkpoint((fs::path(out_dir) / ("run_" + result.run_id + ".final.ckpt")).string(),
                    result.final_params, manifest);

    std::ostringstream report;
    report << "run " << result.run_id << "  (" << cfg.fingerprint() << ", seed " << cfg.seed
           << ")\n";
    report << "best validation epoch: " << result.best_epoch << "\n";
    if (!result.final_val.split.empty()) report << result.final_val.to_text();
    if (!result.final_test.split.empty()) {
        report << "final-epoch test:\n" << result.final_test.to_text();
        report << "best-validation-epoch test:\n" << result.best_test.to_text();
    }
    write_text_file((fs::path(out_dir) / ("run_" + result.run_id + ".txt")).string(), report.str());
    std::cout << report.str();
}

int cmd_build_vocab(const std::vector<std::string>& inputs, const std::string& schema,
                    std::size_t target_size, bool lowercase, const std::string& out) {
    std::vector<std::string> corpus;
    for (const auto& input : inputs) {
        std::string path = resolve(input);
        if (schema == "sem2014") {
            for (auto& s : parse_semeval2014_file(path)) corpus.push_back(std::move(s.text));
        } else if (schema == "sem2016") {
            for (auto& s : parse_semeval2016_file(path)) corpus.push_back(std::move(s.text));
        } else {
            std::istringstream is(read_text_file(path));
            std::string line;
            while (std::getline(is, line)) {
                if (!line.empty()) corpus.push_back(line);
            }
        }
    }
    Vocab vocab = build_vocab(corpus, target_size, lowercase);
    vocab.save(out);
    std::cout << "wrote " << vocab.size() << " tokens to " << out << "\n";
    return 0;
}

int cmd_prepare(const std::string& xml, const std::string& schema, const std::string& task_name,
                const std::string& vocab_path, std::size_t max_len, bool lowercase,
                const std::string& out) {
    Task task = task_from_string(task_name);
    ParseStats stats;
    std::vector<RawSentence> sentences = schema == "2016"
                                             ? parse_semeval2016_file(resolve(xml), &stats)
                                             : parse_semeval2014_file(resolve(xml), &stats);
    Vocab vocab = Vocab::load(resolve(vocab_path));

    std::printf("parsed %zu sentences, %zu aspects", stats.sentences, stats.aspects);
    if (stats.dropped_overlaps) std::printf(" (%zu overlapping spans dropped)", stats.dropped_overlaps);
    if (stats.null_targets) std::printf(" (%zu NULL targets skipped)", stats.null_targets);
    std::printf("\npolarity counts: positive=%zu negative=%zu neutral=%zu conflict=%zu\n",
                stats.polarity_counts[static_cast<std::size_t>(Polarity::Positive)],
                stats.polarity_counts[static_cast<std::size_t>(Polarity::Negative)],
                stats.polarity_counts[static_cast<std::size_t>(Polarity::Neutral)],
                stats.polarity_counts[static_cast<std::size_t>(Polarity::Conflict)]);

    if (task == Task::AspectExtraction) {
        auto examples = make_ae_examples(sentences, vocab, max_len, lowercase);
        write_ae_records(out, examples);
        std::printf("wrote %zu ae records to %s\n", examples.size(), out.c_str());
    } else {
        auto examples = make_asc_examples(sentences, vocab, max_len, lowercase);
        write_asc_records(out, examples);
        std::printf("wrote %zu asc records to %s\n", examples.size(), out.c_str());
    }
    return 0;
}

int cmd_eval(const std::string& checkpoint_path, const std::string& records, std::size_t batch_size) {
    Checkpoint ckpt = load_checkpoint(resolve(checkpoint_path));
    ModelConfig cfg = ModelConfig::from_json(ckpt.manifest);
    Model model(cfg);

    MetricsReport report;
    if (cfg.task == Task::AspectExtraction) {
        report = evaluate_ae(model, ckpt.params, read_ae_records(resolve(records)), batch_size);
    } else {
        report = evaluate_asc(model, ckpt.params, read_asc_records(resolve(records)), batch_size);
    }
    report.split = "eval";
    std::cout << report.to_text();
    return 0;
}

int cmd_attack_demo(Task task, double epsilon, std::size_t batch_size, std::uint64_t seed,
                    const ModelFlags& mf, const DataFlags& df) {
    auto [bundle, vocab_size] = df.load(task, mf.max_len);
    if (bundle.train_size() == 0) throw DataError("no examples to attack");

    Model model(mf.to_config(vocab_size, task));
    ParamSet params;
    Rng rng(seed);
    model.init_params(params, rng.stream("init"));

    std::vector<std::size_t> idx(std::min(batch_size, bundle.train_size()));
    std::iota(idx.begin(), idx.end(), 0);
    Batch batch = task == Task::AspectExtraction ? make_ae_batch(bundle.train_ae, idx)
                                                 : make_asc_batch(bundle.train_asc, idx);

    Tensor g = input_gradient(model, batch, params.detached_view(), nullptr, false);
    auto pert = fgm_perturbation(g, AdvConfig::for_task(task, epsilon), batch);

    std::size_t d = model.config().hidden;
    std::printf("task=%s epsilon=%g batch=%zu seq_len=%zu hidden=%zu\n", to_string(task).c_str(),
                epsilon, batch.size, batch.seq_len, d);
    std::printf("%-8s %-14s %-14s %-12s %s\n", "example", "||g||2", "||r_adv||2", "cos(r,g)",
                "degenerate");
    for (std::size_t b = 0; b < batch.size; ++b) {
        double r_sq = 0.0, dot = 0.0, g_sq = 0.0;
        for (std::size_t l = 0; l < batch.seq_len; ++l) {
            std::size_t row = b * batch.seq_len + l;
            for (std::size_t j = 0; j < d; ++j) {
                double r = pert.r_adv.values()[row * d + j];
                r_sq += r * r;
                if (!pert.excluded[row]) {
                    double gv = g.values()[row * d + j];
                    dot += r * gv;
                    g_sq += gv * gv;
                }
            }
        }
        double r_norm = std::sqrt(r_sq);
        double cosine = r_norm > 0 && g_sq > 0 ? dot / (r_norm * std::sqrt(g_sq)) : 0.0;
        std::printf("%-8zu %-14.8f %-14.8f %-12.8f %s\n", b, pert.grad_norms[b], r_norm, cosine,
                    pert.degenerate[b] ? "yes" : "no");
    }

    std::printf("g[0][0..5]      =");
    for (std::size_t j = 0; j < std::min<std::size_t>(6, d); ++j) {
        std::printf(" % .6e", static_cast<double>(g.values()[batch.seq_len ? d + j : j]));
    }
    std::printf("\nr_adv[0][0..5]  =");
    for (std::size_t j = 0; j < std::min<std::size_t>(6, d); ++j) {
        std::printf(" % .6e", static_cast<double>(pert.r_adv.values()[batch.seq_len ? d + j : j]));
    }
    std::printf("\n");
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"adversarial training workbench for aspect-based sentiment analysis"};
    app.require_subcommand(1);
    app.set_config("--config", "", "key=value config file; command-line flags win");
    app.add_option("--data-dir", g_data_dir, "directory that relative data paths resolve against")
        ->envname("ABSA_DATA_DIR");

    // ---- build-vocab ----
    auto* build = app.add_subcommand("build-vocab", "build a subword vocabulary");
    std::vector<std::string> bv_inputs;
    std::string bv_schema = "text";
    std::size_t bv_size = 4000;
    bool bv_lowercase = true;
    std::string bv_out = "vocab.txt";
    build->add_option("--input", bv_inputs, "input file(s)")->required();
    build->add_option("--schema", bv_schema, "text | sem2014 | sem2016")
        ->check(CLI::IsMember({"text", "sem2014", "sem2016"}));
    build->add_option("--target-size", bv_size, "vocabulary size including reserved tokens");
    build->add_flag("--lowercase,!--no-lowercase", bv_lowercase, "lowercase before merging");
    build->add_option("--out", bv_out, "output vocab file");

    // ---- prepare ----
    auto* prepare = app.add_subcommand("prepare", "parse SemEval XML into a record file");
    std::string pr_xml, pr_schema = "2014", pr_task = "ae", pr_vocab, pr_out = "records.jsonl";
    std::size_t pr_max_len = 64;
    bool pr_lowercase = true;
    prepare->add_option("--xml", pr_xml, "input XML file")->required();
    prepare->add_option("--schema", pr_schema, "2014 | 2016")->check(CLI::IsMember({"2014", "2016"}));
    prepare->add_option("--task", pr_task, "ae | asc")->check(CLI::IsMember({"ae", "asc"}));
    prepare->add_option("--vocab", pr_vocab, "vocab file")->required();
    prepare->add_option("--max-len", pr_max_len, "maximum sequence length");
    prepare->add_flag("--lowercase,!--no-lowercase", pr_lowercase, "lowercase before matching");
    prepare->add_option("--out", pr_out, "output record file");

    // ---- train ----
    auto* tr = app.add_subcommand("train", "train one model (epsilon 0 = baseline)");
    std::string tr_task = "ae", tr_out_dir = "runs";
    TrainConfig tr_cfg;
    ModelFlags tr_model;
    DataFlags tr_data;
    tr->add_option("--task", tr_task, "ae | asc")->check(CLI::IsMember({"ae", "asc"}));
    tr->add_option("--epochs", tr_cfg.epochs, "training epochs");
    tr->add_option("--dropout", tr_cfg.dropout, "dropout probability");
    tr->add_option("--epsilon", tr_cfg.epsilon, "perturbation size (0 disables)");
    tr->add_option("--lr", tr_cfg.lr, "Adam learning rate");
    tr->add_option("--batch-size", tr_cfg.batch_size, "mini-batch size");
    tr->add_option("--seed", tr_cfg.seed, "run seed");
    tr->add_option("--out-dir", tr_out_dir, "output directory");
    tr_model.attach(tr);
    tr_data.attach(tr);

    // ---- eval ----
    auto* ev = app.add_subcommand("eval", "evaluate a checkpoint on a record file");
    std::string ev_ckpt, ev_records;
    std::size_t ev_batch = 16;
    ev->add_option("--checkpoint", ev_ckpt, "checkpoint file")->required();
    ev->add_option("--records", ev_records, "record file")->required();
    ev->add_option("--batch-size", ev_batch, "evaluation batch size");

    // ---- sweep ----
    auto* sw = app.add_subcommand("sweep", "epochs x dropout x epsilon grid, averaged over seeds");
    std::string sw_task = "ae", sw_out_dir = "sweep";
    TrainConfig sw_cfg;
    ModelFlags sw_model;
    DataFlags sw_data;
    SweepGrid sw_grid;
    std::size_t sw_jobs = 1;
    sw->add_option("--task", sw_task, "ae | asc")->check(CLI::IsMember({"ae", "asc"}));
    sw->add_option("--epochs", sw_cfg.epochs, "epoch count the epsilon table reports at");
    sw->add_option("--lr", sw_cfg.lr, "Adam learning rate");
    sw->add_option("--batch-size", sw_cfg.batch_size, "mini-batch size");
    sw->add_option("--epochs-min", sw_grid.epochs_min, "first reported epoch");
    sw->add_option("--epochs-max", sw_grid.epochs_max, "last reported epoch (runs train this long)");
    sw->add_option("--dropouts", sw_grid.dropouts, "dropout axis")->delimiter(',');
    sw->add_option("--epsilons", sw_grid.epsilons, "epsilon axis (0 = baseline row)")->delimiter(',');
    sw->add_option("--seeds", sw_grid.seeds_per_cell, "seeds averaged per cell");
    sw->add_option("--seed-base", sw_grid.seed_base, "first seed value");
    sw->add_option("--jobs", sw_jobs, "concurrent runs");
    sw->add_option("--out-dir", sw_out_dir, "output directory");
    sw_model.attach(sw);
    sw_data.attach(sw);

    // ---- plot ----
    auto* pl = app.add_subcommand("plot", "render SVG charts from a results CSV");
    std::string pl_rows, pl_out_dir = "plots";
    pl->add_option("--rows", pl_rows, "results CSV (from train or sweep)")->required();
    pl->add_option("--out-dir", pl_out_dir, "output directory");

    // ---- attack-demo ----
    auto* at = app.add_subcommand("attack-demo", "print g, r_adv and their norms for one batch");
    std::string at_task = "ae";
    double at_epsilon = 1.0;
    std::size_t at_batch = 4;
    std::uint64_t at_seed = 1;
    ModelFlags at_model;
    DataFlags at_data;
    at_data.synthetic = 8;  // runs out of the box
    at->add_option("--task", at_task, "ae | asc")->check(CLI::IsMember({"ae", "asc"}));
    at->add_option("--epsilon", at_epsilon, "perturbation size");
    at->add_option("--batch-size", at_batch, "examples in the demo batch");
    at->add_option("--seed", at_seed, "model init seed");
    at_model.attach(at);
    at_data.attach(at);

    CLI11_PARSE(app, argc, argv);

    try {
        if (build->parsed()) {
            return cmd_build_vocab(bv_inputs, bv_schema, bv_size, bv_lowercase, bv_out);
        }
        if (prepare->parsed()) {
            return cmd_prepare(pr_xml, pr_schema, pr_task, pr_vocab, pr_max_len, pr_lowercase, pr_out);
        }
        if (tr->parsed()) {
            tr_cfg.task = task_from_string(tr_task);
            auto [bundle, vocab_size] = tr_data.load(tr_cfg.task, tr_model.max_len);
            tr_cfg.dataset_name = bundle.name;
            tr_cfg.model = tr_model.to_config(vocab_size, tr_cfg.task);
            TrainResult result = train(tr_cfg, bundle);
            write_run_outputs(tr_out_dir, tr_cfg, result);
            return 0;
        }
        if (ev->parsed()) {
            return cmd_eval(ev_ckpt, ev_records, ev_batch);
        }
        if (sw->parsed()) {
            sw_cfg.task = task_from_string(sw_task);
            auto [bundle, vocab_size] = sw_data.load(sw_cfg.task, sw_model.max_len);
            sw_cfg.dataset_name = bundle.name;
            sw_cfg.model = sw_model.to_config(vocab_size, sw_cfg.task);
            SweepResult result = sweep(sw_grid, sw_cfg, bundle, sw_jobs);

            fs::create_directories(sw_out_dir);
            write_text_file((fs::path(sw_out_dir) / "sweep_rows.csv").string(), rows_to_csv(result.rows));
            write_text_file((fs::path(sw_out_dir) / "sweep_cells.csv").string(), result.cells_csv());
            write_text_file((fs::path(sw_out_dir) / "sweep_table.csv").string(), result.table_csv);
            write_text_file((fs::path(sw_out_dir) / "sweep_table.txt").string(), result.table_text);
            std::cout << result.table_text;
            for (const auto& err : result.errors) std::cerr << "failed: " << err << "\n";
            return result.errors.empty() ? 0 : 3;
        }
        if (pl->parsed()) {
            auto rows = rows_from_csv(read_text_file(resolve(pl_rows)));
            fs::create_directories(pl_out_dir);
            for (const auto& [name, svg] : charts_from_rows(rows)) {
                write_text_file((fs::path(pl_out_dir) / name).string(), svg);
                std::cout << "wrote " << (fs::path(pl_out_dir) / name).string() << "\n";
            }
            return 0;
        }
        if (at->parsed()) {
            return cmd_attack_demo(task_from_string(at_task), at_epsilon, at_batch, at_seed, at_model,
                                   at_data);
        }
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "unexpected error: " << e.what() << "\n";
        return 2;
    }
    return 0;
}
