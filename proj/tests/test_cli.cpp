#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <json.hpp>

#include "camokit/cli.hpp"
#include "camokit/raster_io.hpp"

using namespace camokit;
namespace fs = std::filesystem;
using json = nlohmann::json;

namespace {

class Cli : public ::testing::Test {
protected:
    void SetUp() override {
        dir_ = fs::temp_directory_path() /
               ("camokit_cli_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
        fs::remove_all(dir_);
        fs::create_directories(dir_);
    }
    void TearDown() override {
        fs::remove_all(dir_);
        unsetenv("CAMOKIT_THREADS");
    }

    std::string path(const std::string& name) const { return (dir_ / name).string(); }
    json read_json(const std::string& name) const { return json::parse(read_file(path(name))); }

    int synth(const std::string& out, int count, std::uint64_t seed = 1) {
        return run_cli({"synth", "--out", path(out), "--count", std::to_string(count), "--seed", std::to_string(seed),
                        "--height", "64", "--width", "64", "--quiet"});
    }

    fs::path dir_;
};

}  // namespace

TEST_F(Cli, NoSubcommandOrUnknownFlagIsUsageError) {
    EXPECT_EQ(run_cli(std::vector<std::string>{}), 1);
    EXPECT_EQ(run_cli({"paint"}), 1);
    EXPECT_EQ(run_cli({"gradcheck", "--bogus"}), 1);
    EXPECT_EQ(run_cli({"synth"}), 1);  // --out is required
}

TEST_F(Cli, MissingOrMalformedInputIsIoError) {
    EXPECT_EQ(run_cli({"loss", "--pred", path("nope.pf32"), "--gt", path("nope.pgm"), "--manifest", path("m.json")}),
              2);
    write_file(path("bad.pgm"), "P5\n4 4\n255\n\x01");
    EXPECT_EQ(run_cli({"loss", "--pred", path("bad.pgm"), "--gt", path("bad.pgm"), "--manifest", path("m.json")}), 2);
}

TEST_F(Cli, InvalidParameterIsValidationError) {
    ASSERT_EQ(synth("s", 1), 0);
    EXPECT_EQ(run_cli({"augment", "--in", path("s/0000_sketch.pgm"), "--out", path("a.pgm"), "--n", "63", "--quiet"}),
              1);
    setenv("CAMOKIT_THREADS", "0", 1);
    EXPECT_EQ(synth("t", 1), 1);
}

TEST_F(Cli, SynthWritesLayoutAndManifestEvenWhenQuiet) {
    ASSERT_EQ(synth("s", 3, 5), 0);
    for (const char* id : {"0000", "0001", "0002"}) {
        for (const char* suffix : {"_img.pf32", "_gt.pgm", "_sketch.pgm"}) {
            EXPECT_TRUE(fs::exists(dir_ / "s" / (std::string(id) + suffix))) << id << suffix;
        }
    }
    const json m = read_json("s/manifest.json");
    EXPECT_EQ(m["subcommand"], "synth");
    EXPECT_EQ(m["seed"], 5);
    EXPECT_EQ(m["version"], kVersion);
    EXPECT_EQ(m["config"]["count"], 3);
    EXPECT_EQ(m["config"]["height"], 64);
    EXPECT_EQ(m["outputs"].size(), 9u);
    EXPECT_TRUE(m["runtime"].contains("wall_clock_s"));
}

TEST_F(Cli, SameArgvGivesIdenticalFilesAcrossThreadCounts) {
    setenv("CAMOKIT_THREADS", "1", 1);
    ASSERT_EQ(synth("a", 6, 9), 0);
    setenv("CAMOKIT_THREADS", "4", 1);
    ASSERT_EQ(synth("b", 6, 9), 0);
    for (const fs::directory_entry& e : fs::directory_iterator(dir_ / "a")) {
        const std::string name = e.path().filename().string();
        if (name != "manifest.json") {
            EXPECT_EQ(read_file(e.path()), read_file(dir_ / "b" / name)) << name;
        }
    }
    EXPECT_NE(read_file(dir_ / "a" / "0000_img.pf32"), (synth("c", 1, 10), read_file(dir_ / "c" / "0000_img.pf32")));
}

TEST_F(Cli, ConfigFileOverridesFlags) {
    write_file(path("cfg.json"), R"({"count": 2, "seed": 4})");
    ASSERT_EQ(run_cli({"synth", "--out", path("s"), "--count", "5", "--seed", "1", "--height", "64", "--width", "64",
                       "--config", path("cfg.json"), "--quiet"}),
              0);
    EXPECT_TRUE(fs::exists(dir_ / "s" / "0001_gt.pgm"));
    EXPECT_FALSE(fs::exists(dir_ / "s" / "0002_gt.pgm"));
    EXPECT_EQ(read_json("s/manifest.json")["seed"], 4);
}

TEST_F(Cli, ManifestReplaysTheRun) {
    ASSERT_EQ(synth("s", 2, 11), 0);
    json m = read_json("s/manifest.json");
    m["config"]["out"] = path("r");
    write_file(path("replay.json"), m.dump());
    ASSERT_EQ(run_cli({"synth", "--out", path("ignored"), "--config", path("replay.json"), "--quiet"}), 0);
    EXPECT_EQ(read_file(dir_ / "s" / "0001_sketch.pgm"), read_file(dir_ / "r" / "0001_sketch.pgm"));
    EXPECT_EQ(read_file(dir_ / "s" / "0001_img.pf32"), read_file(dir_ / "r" / "0001_img.pf32"));
}

TEST_F(Cli, BadConfigFile) {
    write_file(path("unknown.json"), R"({"colour": 3})");
    EXPECT_EQ(run_cli({"synth", "--out", path("s"), "--config", path("unknown.json")}), 1);
    write_file(path("typed.json"), R"({"count": "many"})");
    EXPECT_EQ(run_cli({"synth", "--out", path("s"), "--config", path("typed.json")}), 1);
    write_file(path("broken.json"), "{");
    EXPECT_EQ(run_cli({"synth", "--out", path("s"), "--config", path("broken.json")}), 2);
    EXPECT_EQ(run_cli({"synth", "--out", path("s"), "--config", path("absent.json")}), 2);
}

TEST_F(Cli, AugmentEmitsRasterAndVectorJson) {
    ASSERT_EQ(run_cli({"synth", "--out", path("s"), "--count", "1", "--seed", "2", "--quiet"}), 0);
    const std::vector<std::string> argv = {"augment", "--in", path("s/0000_sketch.pgm"), "--n", "64", "--C", "64",
                                           "--K", "8", "--seed", "7", "--out", path("a.pgm"), "--emit-json",
                                           path("v.json"), "--quiet"};
    ASSERT_EQ(run_cli(argv), 0);
    const std::string first = read_file(path("a.pgm"));
    const json v = read_json("v.json");
    EXPECT_FALSE(v["curves"].empty());
    EXPECT_TRUE(fs::exists(path("a.pgm.manifest.json")));
    ASSERT_EQ(run_cli(argv), 0);
    EXPECT_EQ(read_file(path("a.pgm")), first);
}

TEST_F(Cli, LossReportUsesDefaults) {
    ASSERT_EQ(synth("s", 1), 0);
    ASSERT_EQ(run_cli({"loss", "--pred", path("s/0000_img.pf32"), "--gt", path("s/0000_gt.pgm"), "--report",
                       path("r.json"), "--quiet"}),
              0);
    const json r = read_json("r.json");
    EXPECT_EQ(r["config"]["gamma"], 2.0);
    EXPECT_EQ(r["config"]["alpha"], 0.25);
    EXPECT_EQ(r["config"]["theta1"], 3);
    EXPECT_EQ(r["config"]["theta2"], 3);
    for (const char* key : {"bce", "dice", "focal", "afl", "total"}) {
        EXPECT_TRUE(r[key].is_number()) << key;
    }
    EXPECT_TRUE(r["boundary"].contains("bf1"));
    EXPECT_EQ(read_json("r.json.manifest.json")["subcommand"], "loss");
}

TEST_F(Cli, EvalPairsBatchByStem) {
    ASSERT_EQ(synth("s", 3), 0);
    fs::create_directories(dir_ / "p");
    for (const char* id : {"0000", "0001", "0002"}) {
        fs::copy_file(dir_ / "s" / (std::string(id) + "_gt.pgm"), dir_ / "p" / (std::string(id) + "_pred.pgm"));
    }
    ASSERT_EQ(run_cli({"eval", "--pred-dir", path("p"), "--gt-dir", path("s"), "--pred-suffix", "_pred.pgm",
                       "--report", path("e.json"), "--quiet"}),
              0);
    const json r = read_json("e.json");
    EXPECT_EQ(r["count"], 3);
    EXPECT_EQ(r["mean"]["mae"], 0.0);
    EXPECT_EQ(r["mean"]["boundary_f1"], 1.0);
    fs::remove(dir_ / "p" / "0001_pred.pgm");
    EXPECT_EQ(run_cli({"eval", "--pred-dir", path("p"), "--gt-dir", path("s"), "--pred-suffix", "_pred.pgm",
                       "--report", path("e.json"), "--quiet"}),
              1);
}

TEST_F(Cli, GradcheckFusionPasses) {
    ASSERT_EQ(run_cli({"gradcheck", "--target", "fusion", "--seed", "3", "--tol", "1e-4", "--report", path("g.json")}),
              0);
    const json g = read_json("g.json");
    EXPECT_EQ(g["pass"], true);
    EXPECT_LT(g["max_rel_err"].get<double>(), 1e-4);
    EXPECT_EQ(run_cli({"gradcheck", "--target", "fusion", "--tol", "1e-30", "--report", path("f.json")}), 1);
    EXPECT_EQ(read_json("f.json")["pass"], false);
    EXPECT_EQ(run_cli({"gradcheck", "--target", "nothing", "--report", path("n.json")}), 1);
}

TEST_F(Cli, FusionDemoRunsOnRandomTokens) {
    ASSERT_EQ(run_cli({"fusion-demo", "--seed", "2", "--report", path("d.json"), "--quiet"}), 0);
    const json d = read_json("d.json");
    EXPECT_EQ(d["pass"], true);
    EXPECT_TRUE(fs::exists(path("d.json.manifest.json")));
}
