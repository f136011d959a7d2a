#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <sstream>

#include "absa/svg_plot.hpp"
#include "absa/sweep.hpp"
#include "absa/trainer.hpp"

using namespace absa;

namespace {

struct Tiny {
    Vocab vocab;
    DataBundle data;
    TrainConfig cfg;
};

Tiny tiny_setup(Task task, std::size_t train_count = 12) {
    Tiny t;
    auto corpus = synthetic_sentences(64, Rng(1234));
    t.vocab = build_vocab(sentence_texts(corpus), 160);
    t.data = synthetic_bundle(task, train_count, 5, t.vocab, 24, 6, 6);
    t.data.name = "synthetic";

    t.cfg.task = task;
    t.cfg.lr = 1e-3;
    t.cfg.batch_size = 8;
    t.cfg.epochs = 2;
    t.cfg.dropout = 0.1;
    t.cfg.epsilon = 0.0;
    t.cfg.seed = 7;
    t.cfg.model.vocab_size = t.vocab.size();
    t.cfg.model.hidden = 8;
    t.cfg.model.layers = 1;
    t.cfg.model.heads = 2;
    t.cfg.model.ff = 16;
    t.cfg.model.max_len = 24;
    return t;
}

}  // namespace

TEST_CASE("train config validation and run ids") {
    Tiny t = tiny_setup(Task::AspectExtraction);
    TrainConfig bad = t.cfg;
    bad.lr = 0;
    CHECK_THROWS_AS(bad.validate(), ConfigError);
    bad = t.cfg;
    bad.batch_size = 0;
    CHECK_THROWS_AS(bad.validate(), ConfigError);
    bad = t.cfg;
    bad.epochs = 0;
    CHECK_THROWS_AS(bad.validate(), ConfigError);

    // The run id ignores the epoch count (shared trajectory prefix) but not
    // the seed or epsilon.
    TrainConfig longer = t.cfg;
    longer.epochs = 9;
    CHECK(longer.run_id() == t.cfg.run_id());
    TrainConfig other_seed = t.cfg;
    other_seed.seed = 8;
    CHECK(other_seed.run_id() != t.cfg.run_id());
    TrainConfig adv = t.cfg;
    adv.epsilon = 0.1;
    CHECK(adv.run_id() != t.cfg.run_id());
}

TEST_CASE("training twice with one seed is bit-identical; config errors precede training") {
    Tiny t = tiny_setup(Task::AspectExtraction);
    TrainResult a = train(t.cfg, t.data);
    TrainResult b = train(t.cfg, t.data);
    CHECK(rows_to_csv(a.rows) == rows_to_csv(b.rows));
    CHECK(a.best_epoch == b.best_epoch);

    // Rows cover train losses and both metric splits for every epoch.
    std::size_t loss_rows = 0, val_rows = 0, test_rows = 0, best_rows = 0;
    for (const auto& row : a.rows) {
        if (row.split == "train") ++loss_rows;
        if (row.split == "val") ++val_rows;
        if (row.split == "test") ++test_rows;
        if (row.split == "test_best") ++best_rows;
        CHECK(row.run_id == a.run_id);
    }
    CHECK(loss_rows == 4 * t.cfg.epochs);  // clean/adv/total/degenerate
    CHECK(val_rows == 3 * t.cfg.epochs);   // f1/precision/recall
    CHECK(test_rows == 3 * t.cfg.epochs);
    CHECK(best_rows == 3);

    DataBundle wrong = t.data;
    wrong.task = Task::SentimentClassification;
    CHECK_THROWS_AS(train(t.cfg, wrong), ConfigError);
}

TEST_CASE("a longer run reproduces the shorter run's rows as a prefix") {
    Tiny t = tiny_setup(Task::AspectExtraction);
    TrainConfig longer = t.cfg;
    longer.epochs = 4;

    TrainResult small = train(t.cfg, t.data);
    TrainResult big = train(longer, t.data);

    auto keep_epochs = [&](const std::vector<CsvRow>& rows, std::size_t max_epoch) {
        std::vector<CsvRow> out;
        for (const auto& r : rows) {
            if (r.split != "test_best" && r.epoch <= max_epoch) out.push_back(r);
        }
        return out;
    };
    CHECK(rows_to_csv(keep_epochs(small.rows, t.cfg.epochs)) ==
          rows_to_csv(keep_epochs(big.rows, t.cfg.epochs)));
}

TEST_CASE("asc training path produces accuracy and macro-F1 rows") {
    Tiny t = tiny_setup(Task::SentimentClassification);
    TrainResult result = train(t.cfg, t.data);
    bool saw_acc = false, saw_mf1 = false;
    for (const auto& row : result.rows) {
        if (row.split == "val" && row.metric == "acc") saw_acc = true;
        if (row.split == "val" && row.metric == "mf1") saw_mf1 = true;
        if (row.metric == "acc" || row.metric == "mf1") {
            CHECK(row.value >= 0.0);
            CHECK(row.value <= 1.0);
        }
    }
    CHECK(saw_acc);
    CHECK(saw_mf1);
}

TEST_CASE("sweep: run counting, exact means, determinism across thread counts") {
    Tiny t = tiny_setup(Task::AspectExtraction, 10);
    SweepGrid grid;
    grid.epochs_min = 1;
    grid.epochs_max = 2;
    grid.dropouts = {0.0, 0.1};
    grid.epsilons = {0.0, 0.1};
    grid.seeds_per_cell = 2;
    grid.seed_base = 7;

    CHECK(grid.run_count() == 8);  // 2 dropouts x 2 epsilons x 2 seeds

    SweepResult serial = sweep(grid, t.cfg, t.data, 1);
    CHECK(serial.errors.empty());

    // 4 averaged cells per (epoch, metric): epochs {1,2} x f1/precision/recall.
    std::size_t f1_cells = 0;
    for (const auto& cell : serial.cells) {
        if (cell.metric == "f1") ++f1_cells;
        REQUIRE(cell.per_seed.size() == 2);
        double mean = (cell.per_seed[0] + cell.per_seed[1]) / 2.0;
        CHECK(cell.mean == mean);  // exact arithmetic mean
    }
    CHECK(f1_cells == 8);  // 2 epochs x 2 dropouts x 2 epsilons

    SweepResult parallel = sweep(grid, t.cfg, t.data, 4);
    CHECK(rows_to_csv(parallel.rows) == rows_to_csv(serial.rows));
    CHECK(parallel.table_csv == serial.table_csv);
    CHECK(parallel.table_text == serial.table_text);
    CHECK(parallel.cells_csv() == serial.cells_csv());

    // Idempotence: a re-run reproduces identical bytes.
    SweepResult again = sweep(grid, t.cfg, t.data, 2);
    CHECK(rows_to_csv(again.rows) == rows_to_csv(serial.rows));
}

TEST_CASE("sweep baseline rows are byte-identical to a standalone baseline run") {
    Tiny t = tiny_setup(Task::AspectExtraction, 10);
    SweepGrid grid;
    grid.epochs_min = 1;
    grid.epochs_max = 2;
    grid.dropouts = {t.cfg.dropout};
    grid.epsilons = {0.0, 0.1};
    grid.seeds_per_cell = 1;
    grid.seed_base = 7;

    SweepResult result = sweep(grid, t.cfg, t.data, 2);

    TrainConfig standalone = t.cfg;
    standalone.epochs = grid.epochs_max;
    standalone.epsilon = 0.0;
    standalone.seed = 7;
    TrainResult base = train(standalone, t.data);

    auto baseline_rows = [](const std::vector<CsvRow>& rows) {
        std::vector<CsvRow> out;
        for (const auto& r : rows) {
            if (r.epsilon == 0.0) out.push_back(r);
        }
        return out;
    };
    CHECK(rows_to_csv(baseline_rows(result.rows)) == rows_to_csv(baseline_rows(base.rows)));
}

TEST_CASE("sweep epsilon table has the documented shape and recomputable deltas") {
    Tiny t = tiny_setup(Task::AspectExtraction, 8);
    SweepGrid grid;  // default epsilon axis
    CHECK(grid.epsilons == std::vector<double>{0.0, 0.01, 0.1, 1.0, 2.0, 5.0});

    grid.epochs_min = 1;
    grid.epochs_max = 1;
    grid.seeds_per_cell = 1;
    TrainConfig cfg = t.cfg;
    cfg.epochs = 1;
    SweepResult result = sweep(grid, cfg, t.data, 4);

    // Row order and labels.
    std::vector<std::string> labels;
    std::istringstream table(result.table_text);
    std::string line;
    std::getline(table, line);  // header line
    std::getline(table, line);  // column names
    while (std::getline(table, line)) {
        labels.push_back(line.substr(0, line.find('\t')));
    }
    CHECK(labels == std::vector<std::string>{"baseline", "eps=0.01", "eps=0.1", "eps=1", "eps=2",
                                             "eps=5"});

    // Deltas in the raw table equal value - baseline exactly.
    double baseline = 0.0;
    std::istringstream csv(result.table_csv);
    std::getline(csv, line);  // header
    while (std::getline(csv, line)) {
        std::vector<std::string> fields;
        std::istringstream ls(line);
        std::string f;
        while (std::getline(ls, f, ',')) fields.push_back(f);
        REQUIRE(fields.size() == 4);
        double value = std::stod(fields[2]);
        double delta = std::stod(fields[3]);
        if (fields[0] == "baseline") {
            baseline = value;
            CHECK(delta == 0.0);
        } else {
            CHECK(delta == value - baseline);  // exact recomputation
        }
    }
}

TEST_CASE("svg charts are deterministic and embed their source values") {
    // Hand-made sweep rows: 5 epsilon lines x 6 epochs.
    std::vector<CsvRow> rows;
    const std::vector<double> eps = {0.01, 0.1, 1.0, 2.0, 5.0};
    for (double e : eps) {
        for (std::size_t epoch = 3; epoch <= 8; ++epoch) {
            rows.push_back(CsvRow{"r", Task::AspectExtraction, "demo", epoch, 0.1, e, 1, "test",
                                  "f1", 0.5 + 0.01 * e + 0.001 * static_cast<double>(epoch)});
        }
    }

    auto charts = charts_from_rows(rows);
    REQUIRE(charts.size() == 1);
    CHECK(charts[0].first == "demo_test_f1.svg");
    const std::string& svg = charts[0].second;

    // Byte-identical on identical input.
    CHECK(charts_from_rows(rows)[0].second == svg);

    // 5 polylines, 6 points each, values matching the rows exactly.
    std::size_t found = 0;
    std::size_t at = 0;
    while ((at = svg.find("data-points=\"", at)) != std::string::npos) {
        at += 13;
        std::size_t end = svg.find('"', at);
        std::string data = svg.substr(at, end - at);
        std::size_t pairs = static_cast<std::size_t>(std::count(data.begin(), data.end(), ':'));
        CHECK(pairs == 6);
        ++found;
    }
    CHECK(found == 5);
    for (const auto& row : rows) {
        std::string needle = std::to_string(row.epoch) + ":" + format_exact(row.value);
        CHECK(svg.find(needle) != std::string::npos);
    }

    // Single-cell chart renders.
    std::vector<CsvRow> one = {rows[0]};
    auto single = charts_from_rows(one);
    CHECK(single[0].second.find("<polyline") != std::string::npos);

    CHECK_THROWS_AS(charts_from_rows({}), UsageError);
    CHECK_THROWS_AS(render_line_chart(ChartSpec{}), UsageError);
}

TEST_CASE("csv rows round-trip through parse") {
    CsvRow row{"abc123", Task::SentimentClassification, "laptop", 4, 0.1, 2.0, 9, "test", "mf1",
               0.7512345678901234};
    CsvRow back = CsvRow::parse(row.to_line());
    CHECK(back.run_id == row.run_id);
    CHECK(back.task == row.task);
    CHECK(back.epoch == row.epoch);
    CHECK(back.dropout == row.dropout);
    CHECK(back.epsilon == row.epsilon);
    CHECK(back.seed == row.seed);
    CHECK(back.metric == row.metric);
    CHECK(back.value == row.value);  // %.17g round-trips exactly

    CHECK_THROWS_AS(CsvRow::parse("not,enough,fields"), ParseError);
}
