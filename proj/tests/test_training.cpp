#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>
#include <vector>

#include <gtest/gtest.h>

#include "dcits/datagen.hpp"
#include "dcits/error.hpp"
#include "dcits/training.hpp"
#include "support.hpp"

using namespace dcits;

namespace {

struct Problem {
    SplitSet split;
    ModelConfig model;
    TrainConfig train;
};

Problem small_problem(std::size_t window = 3) {
    GeneratorSpec spec = GeneratorSpec::defaults(DatasetKind::Dataset2);
    spec.series = 2;
    spec.length = 400;
    spec.seed = 31;
    const SeriesMatrix s = generate(spec);
    Problem p;
    p.split = split(build_windows(s, window), window);
    p.model.series = 2;
    p.model.window = window;
    p.model.orders = {0, 1};
    p.model.hidden_width = 6;
    p.model.hidden_layers = 2;
    p.train.max_epochs = 6;
    p.train.patience = 2;
    p.train.repeats = 3;
    p.train.batch_size = 32;
    p.train.learning_rate = 1e-2;
    p.train.seed = 5;
    return p;
}

double loss_on(const DcitsModel& model, const std::vector<WindowSample>& samples, LossKind kind) {
    RunResult r{0, model, {}, {}, 0, 0, 0, 0, {}, {}, {}};
    run_inference(model, samples, r);
    std::vector<double> targets;
    for (const auto& s : samples) targets.insert(targets.end(), s.target.begin(), s.target.end());
    return loss_value(r.predictions, targets, kind);
}

}  // namespace

TEST(Loss, MseAndMae) {
    const std::vector<double> p{1.0, -2.0, 0.5}, y{0.0, 1.0, 0.5};
    EXPECT_DOUBLE_EQ(loss_value(p, y, LossKind::Mse), (1.0 + 9.0) / 3.0);
    EXPECT_DOUBLE_EQ(loss_value(p, y, LossKind::Mae), (1.0 + 3.0) / 3.0);
    const Tensor tp = Tensor::from({3}, p), ty = Tensor::from({3}, y);
    EXPECT_DOUBLE_EQ(loss_value(tp, ty, LossKind::Mse).item(), 10.0 / 3.0);
    EXPECT_THROW(loss_value(std::vector<double>{1.0}, y, LossKind::Mse), ShapeError);
    EXPECT_EQ(parse_loss_kind("mse"), LossKind::Mse);
    EXPECT_FALSE(parse_loss_kind("l1").has_value());
}

TEST(StabilityRatio, SampleStdOverMean) {
    const std::vector<double> a{1.0, 3.0};
    EXPECT_NEAR(stability_ratio(a), std::sqrt(2.0) / 2.0, 1e-12);
    EXPECT_THROW(stability_ratio(std::vector<double>{1.0}), ConfigError);
    EXPECT_THROW(stability_ratio(std::vector<double>{1.0, -1.0}), NumericError);
}

TEST(Significance, Rule) {
    EXPECT_TRUE(is_significant(0.5, 0.1));
    EXPECT_FALSE(is_significant(0.5, 0.3));
    EXPECT_FALSE(is_significant(0.005, 0.0));
    EXPECT_TRUE(is_significant(-0.02, 0.0));
}

TEST(TrainConfig, Validation) {
    TrainConfig c;
    EXPECT_NO_THROW(c.validate());
    c.patience = 0;
    EXPECT_THROW(c.validate(), ConfigError);
    c.patience = c.max_epochs;
    EXPECT_THROW(c.validate(), ConfigError);
    c = TrainConfig{};
    c.repeats = 0;
    EXPECT_THROW(c.validate(), ConfigError);
    c = TrainConfig{};
    c.learning_rate = -1.0;
    EXPECT_THROW(c.validate(), ConfigError);
}

TEST(TrainOnce, RestoresBestValidationCheckpoint) {
    const Problem p = small_problem();
    const RunResult r = train_once(p.model, p.split, p.train, 42);
    ASSERT_FALSE(r.val_loss.empty());
    EXPECT_EQ(r.val_loss.size(), r.train_loss.size());
    EXPECT_LE(r.val_loss.size(), p.train.max_epochs);
    const auto best = std::min_element(r.val_loss.begin(), r.val_loss.end());
    EXPECT_EQ(static_cast<std::size_t>(best - r.val_loss.begin()), r.best_epoch);
    // The returned model is the best one, not the last one.
    EXPECT_NEAR(loss_on(r.model, p.split.validation, p.train.loss), *best, 1e-12);
    EXPECT_NEAR(loss_on(r.model, p.split.test, LossKind::Mse), r.test_mse, 1e-12);
    EXPECT_EQ(r.sample_count(), p.split.test.size());
    EXPECT_EQ(r.predictions.size(), p.split.test.size() * 2);
    EXPECT_EQ(r.trace(1).alpha.size(), p.split.test.size() * 2 * 2 * 3);
    EXPECT_EQ(r.trace(0).alpha.size(), p.split.test.size() * 2 * 2);
    // Early stopping: no more than patience epochs after the best one.
    EXPECT_LE(r.val_loss.size(), r.best_epoch + p.train.patience + 1);
}

TEST(TrainOnce, DeterministicForSeed) {
    const Problem p = small_problem();
    const RunResult a = train_once(p.model, p.split, p.train, 7);
    const RunResult b = train_once(p.model, p.split, p.train, 7);
    const RunResult c = train_once(p.model, p.split, p.train, 8);
    EXPECT_EQ(a.predictions, b.predictions);
    EXPECT_EQ(a.val_loss, b.val_loss);
    EXPECT_NE(a.predictions, c.predictions);
}

TEST(TrainOnce, NonFiniteLossCarriesEpoch) {
    Problem p = small_problem();
    p.split.train[3].target[0] = std::numeric_limits<double>::quiet_NaN();
    try {
        train_once(p.model, p.split, p.train, 1);
        FAIL() << "expected NumericError";
    } catch (const NumericError& e) {
        EXPECT_EQ(e.epoch(), 0);
    }
    EXPECT_THROW(run_repeated(p.model, p.split, p.train), NumericError);
}

TEST(TrainOnce, RejectsMismatchedWindow) {
    Problem p = small_problem();
    p.model.window = 4;
    EXPECT_THROW(train_once(p.model, p.split, p.train, 1), ConfigError);
}

TEST(RunRepeated, ParallelMatchesSerial) {
    const Problem p = small_problem();
    const RepeatedResult serial = run_repeated(p.model, p.split, p.train, 1);
    const RepeatedResult parallel = run_repeated(p.model, p.split, p.train, 3);
    ASSERT_EQ(serial.runs.size(), 3u);
    ASSERT_EQ(parallel.runs.size(), 3u);
    for (std::size_t r = 0; r < 3; ++r) {
        EXPECT_EQ(serial.runs[r].seed, derive_seed(p.train.seed, r));
        EXPECT_EQ(serial.runs[r].predictions, parallel.runs[r].predictions);
    }
    EXPECT_EQ(serial.stats.order(1).mean, parallel.stats.order(1).mean);
}

TEST(Aggregate, MeanStdAcrossRuns) {
    const Problem p = small_problem();
    const RepeatedResult rr = run_repeated(p.model, p.split, p.train, 3);
    const OrderStats& os = rr.stats.order(1);
    ASSERT_EQ(os.mean.size(), 2u * 2u * 3u);
    for (std::size_t k = 0; k < os.mean.size(); ++k) {
        std::vector<double> xs;
        for (const RunResult& r : rr.runs) {
            const auto& a = r.trace(1).alpha;
            const std::size_t per = os.mean.size();
            double m = 0.0;
            for (std::size_t s = 0; s < r.sample_count(); ++s) m += a[s * per + k];
            xs.push_back(m / static_cast<double>(r.sample_count()));
        }
        const double mean = std::accumulate(xs.begin(), xs.end(), 0.0) / 3.0;
        double ss = 0.0;
        for (double x : xs) ss += (x - mean) * (x - mean);
        EXPECT_NEAR(os.mean[k], mean, 1e-12);
        EXPECT_NEAR(os.std[k], std::sqrt(ss / 2.0), 1e-12);
        EXPECT_EQ(os.significant[k], is_significant(mean, std::sqrt(ss / 2.0)));
    }

    Problem single = p;
    single.train.repeats = 1;
    const RepeatedResult one = run_repeated(single.model, single.split, single.train);
    for (double s : one.stats.order(1).std) EXPECT_EQ(s, 0.0);
}

TEST(RunDirectory, WritesArtifacts) {
    Problem p = small_problem();
    p.train.max_epochs = 3;
    const RunResult r = train_once(p.model, p.split, p.train, 3);
    const auto dir = test::scratch_dir("rundir");
    write_run_directory(r, dir / "run_1");
    EXPECT_TRUE(std::filesystem::exists(dir / "run_1" / "checkpoint.json"));
    EXPECT_TRUE(std::filesystem::exists(dir / "run_1" / "loss_curve.csv"));
    std::ifstream in(dir / "run_1" / "alpha_p1.csv");
    std::string header, first;
    std::getline(in, header);
    std::getline(in, first);
    EXPECT_EQ(header.substr(0, 24), "n,i,j,l,value,sample_t\r");
    // First row is column j=1, the oldest lag (l = L).
    EXPECT_EQ(first.substr(0, 8), "1,1,1,3,");
    EXPECT_EQ(lag_to_column(1, 3), 2u);
    EXPECT_EQ(column_to_lag(0, 3), 3u);
}
