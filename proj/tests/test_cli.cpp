#include <gtest/gtest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <json.hpp>

#include "lcc/checkpoint.hpp"
#include "lcc/ingest.hpp"

namespace {

namespace fs = std::filesystem;

struct Cli {
    fs::path dir;

    Cli() {
        dir = fs::path(::testing::TempDir()) /
              ("lcc_cli_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
        fs::remove_all(dir);
        fs::create_directories(dir);
    }

    std::string path(const std::string& name) const { return (dir / name).string(); }

    /// Runs `lcc args`, capturing stdout and stderr into files; returns the exit code.
    int run(const std::string& args) const {
        const std::string cmd = std::string(LCC_CLI_PATH) + " " + args + " >" + path("stdout.txt") + " 2>" +
                                path("stderr.txt");
        const int status = std::system(cmd.c_str());
        return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    }

    std::string read(const std::string& name) const {
        std::ifstream in(path(name), std::ios::binary);
        std::ostringstream ss;
        ss << in.rdbuf();
        return ss.str();
    }
};

TEST(Cli, GradcheckPasses) {
    Cli cli;
    ASSERT_EQ(cli.run("gradcheck --seed 7"), 0) << cli.read("stderr.txt");
    const auto out = cli.read("stdout.txt");
    const auto at = out.find("max_relative_error=");
    ASSERT_NE(at, std::string::npos);
    EXPECT_LE(std::stod(out.substr(at + 19)), 1e-6);
}

TEST(Cli, UsageErrors) {
    Cli cli;
    EXPECT_EQ(cli.run("eval --data x.csv"), 1);
    EXPECT_EQ(cli.run("train --data x.csv --out m.lcc --bogus 3"), 1);
    EXPECT_EQ(cli.run(""), 1);
    EXPECT_EQ(cli.run("frobnicate"), 1);
}

TEST(Cli, DataErrorsNamePath) {
    Cli cli;
    const auto missing = cli.path("does_not_exist.csv");
    EXPECT_EQ(cli.run("train --data " + missing + " --out " + cli.path("m.lcc")), 2);
    EXPECT_NE(cli.read("stderr.txt").find(missing), std::string::npos);
    std::ofstream(cli.path("bad.csv")) << "id,mjd,filter,flux,error,detection,class\n1,1,9,1,1,1,90\n";
    EXPECT_EQ(cli.run("train --data " + cli.path("bad.csv") + " --out " + cli.path("m.lcc")), 2);
}

TEST(Cli, EndToEndSmallPipeline) {
    Cli cli;
    ASSERT_EQ(cli.run("synth --n-per-class 8 --seed 4 --out " + cli.path("train.csv")), 0);
    ASSERT_EQ(cli.run("synth --n-per-class 4 --seed 5 --out " + cli.path("test.csv")), 0);
    const auto d = lcc::read_table_file(cli.path("train.csv"), true);
    EXPECT_EQ(d.size(), 40u);

    ASSERT_EQ(cli.run("--log " + cli.path("run.log") + " train --data " + cli.path("train.csv") + " --out " +
                      cli.path("m.lcc") + " --hidden 4 --epochs 2 --history " + cli.path("hist.jsonl")),
              0)
        << cli.read("stderr.txt");
    const auto log = cli.read("run.log");
    EXPECT_NE(log.find("epochs=2"), std::string::npos);
    EXPECT_NE(log.find("batch=32"), std::string::npos);
    EXPECT_NE(log.find("hidden=4"), std::string::npos);
    std::istringstream hist(cli.read("hist.jsonl"));
    std::string line;
    int epochs = 0;
    while (std::getline(hist, line)) {
        const auto rec = nlohmann::json::parse(line);
        EXPECT_EQ(rec["epoch"].get<int>(), ++epochs);
        EXPECT_TRUE(rec.contains("val_acc"));
    }
    EXPECT_EQ(epochs, 2);
    EXPECT_EQ(lcc::load_model(cli.path("m.lcc")).params.hidden_size(), 4);

    ASSERT_EQ(cli.run("eval --model " + cli.path("m.lcc") + " --data " + cli.path("test.csv") +
                      " --horizon-days 10 --report " + cli.path("r.json") + " --curves " + cli.path("c.csv")),
              0);
    const auto report = nlohmann::json::parse(cli.read("r.json"));
    EXPECT_EQ(report["auc_roc"].size(), 5u);
    EXPECT_EQ(report["horizon_days"].get<double>(), 10.0);
    long long total = 0;
    for (const auto& row : report["confusion"]) {
        for (const auto& v : row) total += v.get<long long>();
    }
    EXPECT_EQ(total + report["dropped_no_detection"].get<long long>(), 20);
    EXPECT_EQ(cli.read("c.csv").rfind("class,kind,threshold,x,y\n", 0), 0u);

    ASSERT_EQ(cli.run("predict --model " + cli.path("m.lcc") + " --data " + cli.path("test.csv") + " --out " +
                      cli.path("p.csv")),
              0);
    std::istringstream preds(cli.read("p.csv"));
    std::getline(preds, line);
    EXPECT_EQ(line, "object_id,p_s_like,p_fast,p_long,p_periodic,p_non_periodic,predicted");
    int rows = 0;
    while (std::getline(preds, line)) {
        ++rows;
        std::istringstream cells(line);
        std::string cell;
        double sum = 0.0;
        std::getline(cells, cell, ',');
        for (int k = 0; k < 5; ++k) {
            std::getline(cells, cell, ',');
            sum += std::stod(cell);
        }
        EXPECT_NEAR(sum, 1.0, 1e-7);
    }
    EXPECT_EQ(rows, 20);
}

TEST(Cli, TrainDefaultsLogged) {
    Cli cli;
    ASSERT_EQ(cli.run("synth --n-per-class 2 --seed 1 --out " + cli.path("d.csv")), 0);
    // Patience 1 with a single epoch keeps the run short; epochs/batch come from the defaults.
    ASSERT_EQ(cli.run("--log " + cli.path("run.log") + " train --data " + cli.path("d.csv") + " --out " +
                      cli.path("m.lcc") + " --hidden 2 --val-fraction 0.3 --patience 1"),
              0)
        << cli.read("stderr.txt");
    const auto log = cli.read("run.log");
    EXPECT_NE(log.find("epochs=50"), std::string::npos);
    EXPECT_NE(log.find("batch=32"), std::string::npos);
    EXPECT_NE(log.find("lr=0.001"), std::string::npos);
    EXPECT_NE(log.find("patience=1"), std::string::npos);
}

TEST(Cli, ClassWeightsParsing) {
    Cli cli;
    ASSERT_EQ(cli.run("synth --n-per-class 2 --seed 1 --out " + cli.path("d.csv")), 0);
    const std::string base = "train --data " + cli.path("d.csv") + " --out " + cli.path("m.lcc") +
                             " --hidden 2 --epochs 1 --val-fraction 0.3 --class-weights ";
    EXPECT_EQ(cli.run(base + "balanced"), 0);
    EXPECT_EQ(cli.run(base + "1,2,3,4,5"), 0);
    EXPECT_EQ(cli.run(base + "1,2,3"), 1);
    EXPECT_EQ(cli.run(base + "a,b,c,d,e"), 1);
    EXPECT_EQ(cli.run(base + "1,2,3,4,-5"), 2);
}

TEST(Cli, CorruptCheckpointIsDataError) {
    Cli cli;
    ASSERT_EQ(cli.run("synth --n-per-class 1 --seed 1 --out " + cli.path("d.csv")), 0);
    std::ofstream(cli.path("m.lcc")) << "lcc-checkpoint\nformat_version=1\n";
    EXPECT_EQ(cli.run("eval --model " + cli.path("m.lcc") + " --data " + cli.path("d.csv")), 2);
}

}  // namespace
