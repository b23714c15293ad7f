#include <sys/wait.h>

#include <cstdlib>
#include <fstream>
#include <sstream>
#include <string>

#include <gtest/gtest.h>

#include "dcits/summary.hpp"
#include "support.hpp"

namespace fs = std::filesystem;

namespace {

int run(const std::string& args) {
    const std::string cmd = std::string(DCITS_CLI_PATH) + " " + args + " > /dev/null 2>&1";
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

fs::path write_config(const fs::path& dir, const std::string& name, const std::string& text) {
    const fs::path p = dir / name;
    std::ofstream(p) << text;
    return p;
}

const char* kTinyTrain =
    "seed=4\n"
    "generator.kind=dataset2\n"
    "generator.series=2\n"
    "generator.length=300\n"
    "window.length=3\n"
    "model.orders=0,1\n"
    "model.hidden_width=4\n"
    "model.hidden_layers=1\n"
    "train.max_epochs=3\n"
    "train.patience=1\n"
    "train.repeats=2\n";

}  // namespace

TEST(Cli, UsageErrorsExitTwo) {
    const fs::path dir = dcits::test::scratch_dir("cli_usage");
    EXPECT_EQ(run(""), 2);
    EXPECT_EQ(run("generate --out " + (dir / "o").string()), 2);
    EXPECT_EQ(run("generate --config " + (dir / "missing.cfg").string() + " --out " + (dir / "o").string()), 2);
    const fs::path bad = write_config(dir, "bad.cfg", "generator.colour=blue\n");
    EXPECT_EQ(run("generate --config " + bad.string() + " --out " + (dir / "o").string()), 2);
    EXPECT_EQ(run("reproduce no-such-suite"), 2);
    EXPECT_EQ(run("--jobs 0 reproduce var2"), 2);
}

TEST(Cli, GenerateIsByteIdenticalAndGuardsOverwrite) {
    const fs::path dir = dcits::test::scratch_dir("cli_generate");
    const fs::path cfg = write_config(dir, "g.cfg", "seed=12\ngenerator.kind=dataset7\ngenerator.length=500\n");
    ASSERT_EQ(run("generate --config " + cfg.string() + " --out " + (dir / "a").string()), 0);
    ASSERT_EQ(run("generate --config " + cfg.string() + " --out " + (dir / "b").string()), 0);
    for (const char* f : {"series.csv", "series.json", "config.txt"}) {
        EXPECT_EQ(slurp(dir / "a" / f), slurp(dir / "b" / f)) << f;
    }
    EXPECT_FALSE(slurp(dir / "a" / "series.csv").empty());
    EXPECT_EQ(run("generate --config " + cfg.string() + " --out " + (dir / "a").string()), 4);
    EXPECT_EQ(run("generate --config " + cfg.string() + " --out " + (dir / "a").string() + " --force"), 0);
    // --seed changes the data.
    ASSERT_EQ(run("generate --config " + cfg.string() + " --seed 13 --out " + (dir / "c").string()), 0);
    EXPECT_NE(slurp(dir / "a" / "series.csv"), slurp(dir / "c" / "series.csv"));
}

TEST(Cli, TrainWritesReports) {
    const fs::path dir = dcits::test::scratch_dir("cli_train");
    const fs::path cfg = write_config(dir, "t.cfg", kTinyTrain);
    ASSERT_EQ(run("train --config " + cfg.string() + " --out " + (dir / "out").string()), 0);
    const fs::path out = dir / "out";
    for (const char* f : {"summary.json", "coefficients.csv", "metadata.json", "config.txt", "series.csv",
                          "run_1/checkpoint.json", "run_2/alpha_p1.csv", "heatmaps/beta.csv", "lag_matrices/A1.csv"}) {
        EXPECT_TRUE(fs::exists(out / f)) << f;
    }
    const dcits::Summary s = dcits::read_summary(out / "summary.json");
    EXPECT_EQ(s.command, "train");
    EXPECT_EQ(s.runs.size(), 2u);
    EXPECT_EQ(s.window, 3u);
    EXPECT_EQ(s.lag_matrices.size(), 3u);
    EXPECT_EQ(s.bias.size(), 2u);
    EXPECT_TRUE(s.stability_ratio.has_value());

    // Same seed, same numbers.
    ASSERT_EQ(run("train --config " + cfg.string() + " --out " + (dir / "again").string()), 0);
    EXPECT_EQ(slurp(out / "summary.json"), slurp(dir / "again" / "summary.json"));
    EXPECT_EQ(slurp(out / "coefficients.csv"), slurp(dir / "again" / "coefficients.csv"));
}

TEST(Cli, TrainOnLoadedData) {
    const fs::path dir = dcits::test::scratch_dir("cli_data");
    const fs::path gen = write_config(dir, "g.cfg", "seed=2\ngenerator.kind=dataset2\ngenerator.series=2\n"
                                                    "generator.length=300\n");
    ASSERT_EQ(run("generate --config " + gen.string() + " --out " + (dir / "data").string()), 0);
    const fs::path cfg = write_config(dir, "t.cfg",
                                      "data.path=" + (dir / "data" / "series.csv").string() +
                                          "\nwindow.length=3\nmodel.hidden_width=4\nmodel.hidden_layers=1\n"
                                          "train.max_epochs=2\ntrain.patience=1\ntrain.repeats=1\n");
    EXPECT_EQ(run("train --config " + cfg.string() + " --out " + (dir / "out").string()), 0);
}

TEST(Cli, DivergenceExitsThree) {
    const fs::path dir = dcits::test::scratch_dir("cli_nan");
    std::ofstream(dir / "nan.csv") << "1,2,3,4,5,6,7,8,9,10,11,12,13,14,15,16,17,18,19,20,21,22,23,24,25,26,27,28,29,30,"
                                      "31,32,33,34,35,36,37,38,39,40\n"
                                      "nan,2,3,4,5,6,7,8,9,10,11,12,13,14,15,16,17,18,19,20,21,22,23,24,25,26,27,28,29,"
                                      "nan,31,32,33,34,35,36,37,38,39,40\n";
    const fs::path cfg = write_config(dir, "t.cfg",
                                      "data.path=" + (dir / "nan.csv").string() +
                                          "\nwindow.length=2\nmodel.hidden_width=4\nmodel.hidden_layers=1\n"
                                          "train.max_epochs=2\ntrain.patience=1\ntrain.repeats=2\n");
    EXPECT_EQ(run("train --config " + cfg.string() + " --out " + (dir / "out").string()), 3);
}

TEST(Cli, WindowSearchReportsBestWindow) {
    const fs::path dir = dcits::test::scratch_dir("cli_search");
    std::string text = kTinyTrain;
    text.replace(text.find("window.length=3\n"), 16, "search.l_min=2\nsearch.l_max=3\n");
    const fs::path cfg = write_config(dir, "s.cfg", text);
    ASSERT_EQ(run("window-search --config " + cfg.string() + " --out " + (dir / "out").string()), 0);
    EXPECT_TRUE(fs::exists(dir / "out" / "window_search.csv"));
    const dcits::Summary s = dcits::read_summary(dir / "out" / "summary.json");
    ASSERT_EQ(s.window_search.size(), 2u);
    ASSERT_TRUE(s.best_window.has_value());
    EXPECT_TRUE(*s.best_window == 2 || *s.best_window == 3);
}
