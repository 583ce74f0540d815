#include <gtest/gtest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "ge/csv_io.hpp"
#include "ge/lars.hpp"

namespace fs = std::filesystem;
using namespace ge;

namespace {

class Cli : public ::testing::Test {
protected:
    void SetUp() override {
        const auto* info = ::testing::UnitTest::GetInstance()->current_test_info();
        dir_ = fs::temp_directory_path() / ("gexp_cli_" + std::string(info->name()) + "_" +
                                            std::to_string(::getpid()));
        fs::remove_all(dir_);
        fs::create_directories(dir_);
    }
    void TearDown() override { fs::remove_all(dir_); }

    int run(const std::string& args) const {
        const std::string cmd = std::string(GEXP_PATH) + " " + args + " >" +
                                (dir_ / "stdout.txt").string() + " 2>" +
                                (dir_ / "stderr.txt").string();
        const int status = std::system(cmd.c_str());
        return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    }

    std::string path(const std::string& name) const { return (dir_ / name).string(); }

    void write(const std::string& name, const std::string& text) const {
        std::ofstream(dir_ / name) << text;
    }

    static std::string slurp(const fs::path& p) {
        std::ifstream in(p);
        std::stringstream ss;
        ss << in.rdbuf();
        return ss.str();
    }

    fs::path dir_;
};

std::vector<std::vector<std::string>> rows_of(const std::string& file) {
    std::ifstream in(file);
    std::vector<std::vector<std::string>> rows;
    for (std::string line; std::getline(in, line);) {
        if (!line.empty() && line[0] != '#') rows.push_back(csv::split_line(line));
    }
    return rows;
}

}  // namespace

TEST_F(Cli, SimulateShapesAndDeterminism) {
    ASSERT_EQ(run("simulate --seed 9 --p 5 --n 30 --out " + path("a")), 0);
    ASSERT_EQ(run("simulate --seed 9 --p 5 --n 30 --out " + path("b")), 0);
    for (const char* f : {"panel.csv", "factors.csv", "true_sigma.csv", "config.txt"}) {
        ASSERT_TRUE(fs::exists(dir_ / "a" / f)) << f;
        EXPECT_EQ(slurp(dir_ / "a" / f), slurp(dir_ / "b" / f)) << f;
    }
    EXPECT_TRUE(fs::exists(dir_ / "a" / "manifest.json"));
    const auto panel = rows_of(path("a/panel.csv"));
    ASSERT_EQ(panel.size(), 31u);
    for (const auto& r : panel) EXPECT_EQ(r.size(), 6u);
    EXPECT_EQ(panel[0][1], "A1");
}

TEST_F(Cli, SimulateLargeUniverseCovarianceIsSymmetric) {
    ASSERT_EQ(run("simulate --p 200 --n 10 --out " + path("s")), 0);
    const auto m = csv::read_matrix_file(path("s/true_sigma.csv"));
    ASSERT_EQ(m.values.rows(), 200);
    EXPECT_EQ(m.values, m.values.transpose());
}

TEST_F(Cli, OptimizeClosedForms) {
    write("id.csv", "asset,a,b,c\na,1,0,0\nb,0,1,0\nc,0,0,1\n");
    ASSERT_EQ(run("optimize --cov " + path("id.csv") + " --c 1.5 --out " + path("o1")), 0);
    std::ifstream in(path("o1/weights.csv"));
    const auto w = csv::read_weights(in);
    for (Index i = 0; i < 3; ++i) EXPECT_NEAR(w.weights[i], 1.0 / 3.0, 1e-12);

    write("two.csv", "asset,x,y\nx,1,1.5\ny,1.5,4\n");
    ASSERT_EQ(run("optimize --cov " + path("two.csv") + " --c 1.2 --out " + path("o2")), 0);
    std::ifstream in2(path("o2/weights.csv"));
    const auto w2 = csv::read_weights(in2);
    EXPECT_NEAR(w2.weights[0], 1.1, 1e-9);
    EXPECT_NEAR(w2.weights[1], -0.1, 1e-9);
}

TEST_F(Cli, WeightsRoundTripThroughEstimateAndOptimize) {
    ASSERT_EQ(run("simulate --seed 3 --p 8 --n 60 --out " + path("s")), 0);
    ASSERT_EQ(run("estimate --panel " + path("s/panel.csv") + " --out " + path("e")), 0);
    ASSERT_EQ(run("optimize --cov " + path("e/covariance.csv") + " --c 2 --out " + path("o")), 0);
    std::ifstream in(path("o/weights.csv"));
    const auto w = csv::read_weights(in);
    EXPECT_NEAR(w.weights.weights().sum(), 1.0, 1e-12);
    EXPECT_LE(w.weights.gross_exposure(), 2.0 + 1e-9);
}

TEST_F(Cli, PathMatchesLibrary) {
    write("cov.csv", "asset,a,b,c\na,2,0.3,0.1\nb,0.3,1,0.2\nc,0.1,0.2,1.5\n");
    ASSERT_EQ(run("path --cov " + path("cov.csv") + " --y a --out " + path("p")), 0);
    const auto m = csv::read_matrix_file(path("cov.csv"));
    const auto sp = lars_path(transform_regression(CovarianceEstimate(m.values), Index{0}));
    const auto rows = rows_of(path("p/knots.csv"));
    ASSERT_EQ(rows.size(), sp.knots().size() + 1);
    for (std::size_t k = 0; k < sp.knots().size(); ++k) {
        const auto& knot = sp.knots()[k];
        const auto& r = rows[k + 1];
        EXPECT_EQ(csv::parse_double(r[0], "d"), knot.d);
        EXPECT_EQ(csv::parse_double(r[2], "c"), knot.implied_c);
        for (Index j = 0; j < knot.w_star.size(); ++j) {
            EXPECT_EQ(csv::parse_double(r[6 + static_cast<std::size_t>(j)], "w"), knot.w_star[j]);
        }
    }
}

TEST_F(Cli, SweepWithTrueEstimateHasEqualColumns) {
    ASSERT_EQ(run("simulate --seed 4 --p 20 --n 10 --out " + path("s")), 0);
    const std::string cov = path("s/true_sigma.csv");
    ASSERT_EQ(run("sweep --cov " + cov + " --est " + cov + " --out " + path("w")), 0);
    const auto rows = rows_of(path("w/risk_curve.csv"));
    ASSERT_GT(rows.size(), 1u);
    for (std::size_t i = 1; i < rows.size(); ++i) {
        EXPECT_EQ(rows[i][1], rows[i][2]);
        EXPECT_EQ(rows[i][1], rows[i][3]);
    }
}

TEST_F(Cli, BacktestOnConstantPanel) {
    std::string text = "date,a,b\n";
    for (int t = 0; t < 40; ++t) text += std::to_string(t) + ",0.002,0.002\n";
    write("panel.csv", text);
    ASSERT_EQ(run("backtest --panel " + path("panel.csv") +
                  " --strategy equal --window 10 --rebalance 5 --out " + path("b")),
              0);
    const auto rows = rows_of(path("b/aggregate.csv"));
    ASSERT_EQ(rows.size(), 2u);
    EXPECT_NEAR(csv::parse_double(rows[1][2], "sd"), 0.0, 1e-9);
    EXPECT_NEAR(csv::parse_double(rows[1][1], "mean"), 100 * 0.002 * 252, 1e-9);
}

TEST_F(Cli, ExitCodes) {
    write("bad.csv", "asset,a,b\na,1,0\n");
    EXPECT_EQ(run("optimize --cov " + path("bad.csv") + " --c 1.5 --out " + path("x")), 3);
    write("id.csv", "asset,a,b\na,1,0\nb,0,1\n");
    EXPECT_EQ(run("optimize --cov " + path("id.csv") + " --out " + path("x")), 2);
    EXPECT_EQ(run("optimize --cov " + path("id.csv") + " --c 2 --gmv --out " + path("x")), 2);
    EXPECT_EQ(run("nonsense"), 2);
    EXPECT_EQ(run("estimate --panel " + path("missing.csv") + " --out " + path("x")), 3);
}
