#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <sys/wait.h>

#include "stockcast/stockcast.hpp"

namespace fs = std::filesystem;
using namespace stockcast;

namespace {

const fs::path& workdir() {
    static const fs::path dir = [] {
        auto d = fs::temp_directory_path() / "stockcast_cli_test";
        fs::remove_all(d);
        fs::create_directories(d);
        std::ofstream(d / "config.json") << R"({
            "seed": 6,
            "sentiment": {"trees": 8},
            "network": {"hidden": 4, "filters": 2, "window_length": 6, "epochs": 4}
        })";
        return d;
    }();
    return dir;
}

int run(const std::string& args) {
    const std::string cmd = std::string(STOCKCAST_CLI) + " " + args + " >" +
                            (workdir() / "last.log").string() + " 2>&1";
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream s;
    s << in.rdbuf();
    return s.str();
}

std::string at(const char* name) { return (workdir() / name).string(); }

void generate() {
    static const bool once = [] {
        return run("gen-synth --days 90 --seed 6 --out " + at("data")) == 0;
    }();
    ASSERT_TRUE(once);
}

} // namespace

TEST(Cli, FullWorkflow) {
    generate();
    const auto cfg = "--config " + at("config.json");
    const auto candles = "--candles " + at("data/candles.csv");
    const auto tweets = "--tweets " + at("data/tweets.csv");

    ASSERT_EQ(run("train-sentiment " + cfg + " " + tweets + " --out " + at("s")), 0) << slurp(at("last.log"));
    EXPECT_TRUE(fs::exists(at("s/model.bundle")));
    EXPECT_TRUE(nlohmann::json::parse(slurp(at("s/metrics.json"))).contains("classification"));

    ASSERT_EQ(run("score-tweets " + cfg + " --bundle " + at("s/model.bundle") + " " + tweets + " --out " + at("s")), 0);
    std::ifstream index_in(at("s/daily_index.csv"));
    EXPECT_FALSE(load_daily_index(index_in).empty());

    ASSERT_EQ(run("train-forecaster " + cfg + " " + candles + " --index " + at("s/daily_index.csv") +
                  " --bundle " + at("s/model.bundle") + " --out " + at("f")),
              0)
        << slurp(at("last.log"));
    ASSERT_EQ(run("train-forecaster " + cfg + " " + candles + " --index " + at("s/daily_index.csv") +
                  " --bundle " + at("s/model.bundle") + " --out " + at("f2")),
              0);
    EXPECT_EQ(slurp(at("f/model.bundle")), slurp(at("f2/model.bundle")));
    const auto history = slurp(at("f/history.csv"));
    EXPECT_EQ(std::count(history.begin(), history.end(), '\n'), 5);

    ASSERT_EQ(run("evaluate " + cfg + " --bundle " + at("f/model.bundle") + " " + candles + " " + tweets +
                  " --out " + at("e")),
              0)
        << slurp(at("last.log"));
    const auto metrics = nlohmann::json::parse(slurp(at("e/metrics.json")));
    EXPECT_EQ(metrics.size(), 4u);
    std::ifstream pred_in(at("e/predictions.csv"));
    const auto rows = load_predictions(pred_in);
    EXPECT_EQ(rows.size(), 18u);  // 90 days, 72 train rows
    EXPECT_DOUBLE_EQ(report_for(rows).mse, metrics["mse"].get<double>());

    ASSERT_EQ(run("predict --bundle " + at("f/model.bundle") + " " + candles + " --index " +
                  at("s/daily_index.csv") + " --out " + at("p")),
              0);
    EXPECT_EQ(slurp(at("p/predictions.csv")), slurp(at("e/predictions.csv")));
    EXPECT_FALSE(fs::exists(at("p/metrics.json")));
}

TEST(Cli, CompareWritesReport) {
    generate();
    ASSERT_EQ(run("compare --config " + at("config.json") + " --seed 2 --candles " + at("data/candles.csv") +
                  " --tweets " + at("data/tweets.csv") + " --out " + at("c")),
              0)
        << slurp(at("last.log"));
    const auto doc = nlohmann::json::parse(slurp(at("c/comparison.json")));
    EXPECT_EQ(doc["seed"], 2);
    EXPECT_EQ(doc["variants"]["with_nlp"].size(), 4u);
    EXPECT_TRUE(fs::exists(at("c/predictions_with_nlp.csv")));
    EXPECT_TRUE(fs::exists(at("c/daily_index.csv")));
    EXPECT_NE(slurp(at("last.log")).find("With NLP"), std::string::npos);
}

TEST(Cli, ExitCodes) {
    generate();
    EXPECT_EQ(run("--help"), 0);
    EXPECT_EQ(run(""), 1);
    EXPECT_EQ(run("frobnicate"), 1);
    EXPECT_EQ(run("gen-synth --days 10 --out " + at("tiny")), 1);
    EXPECT_EQ(run("train-sentiment --tweets " + at("missing.csv")), 1);
    std::ofstream(workdir() / "bad.json") << R"({"network": {"hiden": 3}})";
    EXPECT_EQ(run("compare --config " + at("bad.json")), 1);
    EXPECT_NE(slurp(at("last.log")).find("hiden"), std::string::npos);
    std::ofstream(workdir() / "garbage.bundle") << "not a bundle";
    EXPECT_EQ(run("evaluate --bundle " + at("garbage.bundle") + " --candles " + at("data/candles.csv")), 1);

    // A config that diverges numerically is a runtime failure.
    std::ofstream(workdir() / "diverge.json") << R"({"network": {"learning_rate": 1e300, "epochs": 50,
        "hidden": 2, "filters": 1, "window_length": 6}})";
    EXPECT_EQ(run("train-forecaster --config " + at("diverge.json") + " --variant without_nlp --candles " +
                  at("data/candles.csv") + " --out " + at("d")),
              2)
        << slurp(at("last.log"));
}
