#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <unistd.h>
#include <vector>

#include "regalign/cli.hpp"

using namespace regalign;
namespace fs = std::filesystem;

namespace {

fs::path test_root() {
    fs::path d = fs::temp_directory_path() / ("regalign_cli_" + std::to_string(::getpid()));
    fs::create_directories(d);
    return d;
}

fs::path fresh_dir(const std::string& name) {
    fs::path d = test_root() / name;
    fs::remove_all(d);
    fs::create_directories(d);
    return d;
}

int run(const std::vector<std::string>& args) {
    testing::internal::CaptureStdout();
    testing::internal::CaptureStderr();
    int rc = cli_dispatch(args);
    testing::internal::GetCapturedStdout();
    testing::internal::GetCapturedStderr();
    return rc;
}

std::string run_stdout(const std::vector<std::string>& args, int expect_rc = 0) {
    testing::internal::CaptureStdout();
    testing::internal::CaptureStderr();
    int rc = cli_dispatch(args);
    std::string out = testing::internal::GetCapturedStdout();
    testing::internal::GetCapturedStderr();
    EXPECT_EQ(rc, expect_rc);
    return out;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    EXPECT_TRUE(in.good()) << "missing " << p;
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

nlohmann::json load_json_file(const fs::path& p) { return nlohmann::json::parse(slurp(p)); }

double bumpy(double t) { return std::sin(1.3 * t) + 0.5 * std::sin(0.4 * t + 1.0) + 0.2 * t; }

struct Fixture {
    fs::path dir;
    fs::path data1;
    fs::path data2;
    TimeSeries a;
    TimeSeries b;
};

Fixture make_fixture(const std::string& name) {
    fs::path dir = fresh_dir(name);
    std::vector<double> t(60), v1(60), v2(60);
    for (std::size_t i = 0; i < t.size(); ++i) {
        t[i] = 10.0 * static_cast<double>(i) / 59.0;
        v1[i] = bumpy(t[i]);
        v2[i] = bumpy(t[i] + 0.25 * std::sin(0.6 * t[i]));
    }
    Fixture f{dir, dir / "data1.csv", dir / "data2.csv", TimeSeries(t, v1), TimeSeries(t, v2)};
    save_csv(f.a, f.data1.string());
    save_csv(f.b, f.data2.string());
    return f;
}

}  // namespace

TEST(CliRegister, WritesResultAndManifest) {
    Fixture f = make_fixture("register_basic");
    fs::path out = f.dir / "result.json";
    int rc = run({"register", "--data1", f.data1.string(), "--data2", f.data2.string(), "--knots",
                  "8", "--out", out.string()});
    ASSERT_EQ(rc, 0);

    nlohmann::json result = load_json_file(out);
    for (const char* key : {"warp", "initial_warp", "objective_trace", "iterations", "converged",
                            "plateau", "measure", "registered"})
        EXPECT_TRUE(result.contains(key)) << key;
    LinearSplineWarp w = LinearSplineWarp::from_json(result["warp"]);
    EXPECT_EQ(w.knot_count(), 8u);
    EXPECT_DOUBLE_EQ(w.domain_lo(), f.b.t_min());
    EXPECT_DOUBLE_EQ(w.domain_hi(), f.b.t_max());
    auto trace = result["objective_trace"].get<std::vector<double>>();
    for (std::size_t i = 1; i < trace.size(); ++i) EXPECT_GT(trace[i], trace[i - 1]);
    auto mapped = result["registered"]["times"].get<std::vector<double>>();
    ASSERT_EQ(mapped.size(), f.b.size());
    for (std::size_t i = 1; i < mapped.size(); ++i) EXPECT_GT(mapped[i], mapped[i - 1]);

    nlohmann::json man = load_json_file(f.dir / "result.json.manifest.json");
    EXPECT_EQ(man["tool"]["name"], "regalign");
    EXPECT_EQ(man["command"], "register");
    ASSERT_EQ(man["inputs"].size(), 2u);
    EXPECT_EQ(man["inputs"][0]["digest"].get<std::string>().size(), 16u);
    EXPECT_EQ(man["config"]["knots"], 8);
    EXPECT_EQ(man["seed"], 42);
}

TEST(CliRegister, AlignedSeriesIsWritten) {
    Fixture f = make_fixture("register_aligned");
    fs::path out = f.dir / "r.json";
    fs::path aligned = f.dir / "aligned.csv";
    int rc = run({"register", "--data1", f.data1.string(), "--data2", f.data2.string(), "--knots",
                  "6", "--out", out.string(), "--aligned", aligned.string()});
    ASSERT_EQ(rc, 0);
    TimeSeries shifted = load_csv(aligned.string());
    EXPECT_EQ(shifted.size(), f.b.size());
    EXPECT_EQ(shifted.values(), f.b.values());
}

TEST(CliRegister, DomainFlagsMustComeTogether) {
    Fixture f = make_fixture("register_domain_pair");
    int rc = run({"register", "--data1", f.data1.string(), "--data2", f.data2.string(),
                  "--domain-lo", "0"});
    EXPECT_EQ(rc, 1);
}

TEST(CliRegister, ExplicitDomainIsUsed) {
    Fixture f = make_fixture("register_domain");
    fs::path out = f.dir / "r.json";
    int rc = run({"register", "--data1", f.data1.string(), "--data2", f.data2.string(), "--knots",
                  "6", "--out", out.string(), "--domain-lo", "-1", "--domain-hi", "11"});
    ASSERT_EQ(rc, 0);
    LinearSplineWarp w = LinearSplineWarp::from_json(load_json_file(out)["warp"]);
    EXPECT_DOUBLE_EQ(w.domain_lo(), -1.0);
    EXPECT_DOUBLE_EQ(w.domain_hi(), 11.0);
}

TEST(CliMeasure, MatchesLibraryValue) {
    Fixture f = make_fixture("measure_basic");
    std::string out = run_stdout(
        {"--json", "measure", "--data1", f.data1.string(), "--data2", f.data2.string()});
    nlohmann::json j = nlohmann::json::parse(out);
    LinearSplineWarp id = LinearSplineWarp::identity(f.b.t_min(), f.b.t_max(), 2);
    AlignmentValue want = measure(f.a, f.b, id, {});
    EXPECT_NEAR(j["L_n"].get<double>(), want.l_n, 1e-15 * std::abs(want.l_n));
    EXPECT_NEAR(j["N_n"].get<double>(), want.numerator, 1e-15 * std::abs(want.numerator));
    EXPECT_NEAR(j["D_n"].get<double>(), want.denominator, 1e-15 * std::abs(want.denominator));
}

TEST(CliMeasure, AcceptsWarpFileAndWritesResult) {
    Fixture f = make_fixture("measure_warp");
    LinearSplineWarp w(f.b.t_min(), f.b.t_max(), {0.3, 2.2, 4.8, 7.1, 10.2});
    fs::path warp_file = f.dir / "warp.json";
    std::ofstream(warp_file) << w.to_json().dump(2);
    fs::path out = f.dir / "measure.json";
    int rc = run({"measure", "--data1", f.data1.string(), "--data2", f.data2.string(), "--warp",
                  warp_file.string(), "--out", out.string()});
    ASSERT_EQ(rc, 0);
    nlohmann::json j = load_json_file(out);
    AlignmentValue want = measure(f.a, f.b, w, {});
    EXPECT_NEAR(j["L_n"].get<double>(), want.l_n, 1e-15 * std::abs(want.l_n));
    nlohmann::json man = load_json_file(f.dir / "measure.json.manifest.json");
    EXPECT_EQ(man["command"], "measure");
    EXPECT_EQ(man["inputs"].size(), 3u);
}

TEST(CliLandmarks, WritesCsvOutputs) {
    Fixture f = make_fixture("landmarks_files");
    fs::path prefix = f.dir / "lm";
    int rc = run({"landmarks", "--data1", f.data1.string(), "--data2", f.data2.string(),
                  "--out-prefix", prefix.string()});
    ASSERT_EQ(rc, 0);
    std::string csv = slurp(prefix.string() + "_data1.csv");
    EXPECT_EQ(csv.substr(0, csv.find('\n')), "time,value,kind,prominence");
    std::size_t rows = static_cast<std::size_t>(std::count(csv.begin(), csv.end(), '\n')) - 1;
    EXPECT_EQ(rows, detect(f.a, 0.05).size());
    EXPECT_TRUE(fs::exists(prefix.string() + "_data2.csv"));
    std::string pairs = slurp(prefix.string() + "_pairs.csv");
    EXPECT_EQ(pairs.substr(0, pairs.find('\n')), "s,t");
    nlohmann::json man = load_json_file(prefix.string() + ".manifest.json");
    EXPECT_EQ(man["command"], "landmarks");
    EXPECT_EQ(man["config"]["prominence"], 0.05);
}

TEST(CliLandmarks, JsonMode) {
    Fixture f = make_fixture("landmarks_json");
    std::string out = run_stdout({"--json", "landmarks", "--data1", f.data1.string(), "--data2",
                                  f.data2.string()});
    nlohmann::json j = nlohmann::json::parse(out);
    ASSERT_TRUE(j.contains("data1"));
    ASSERT_TRUE(j.contains("pairs"));
    ASSERT_GT(j["data1"].size(), 0u);
    EXPECT_TRUE(j["data1"][0].contains("time"));
    EXPECT_TRUE(j["data1"][0].contains("kind"));
    EXPECT_TRUE(j["data1"][0].contains("prominence"));
}

namespace {

std::vector<std::string> simulate_args(const fs::path& out, const std::string& seed,
                                       const std::string& threads) {
    return {"simulate", "--scenario", "1",     "--runs",    "3",       "--seed",
            seed,       "--n1",       "40",    "--n2",      "40",      "--knots",
            "8",        "--grid",     "101",   "--max-iter", "5",      "--threads",
            threads,    "--out",      out.string()};
}

}  // namespace

TEST(CliSimulate, RerunsAreByteIdentical) {
    fs::path dir = fresh_dir("simulate_rerun");
    fs::path out_a = dir / "a", out_b = dir / "b";
    ASSERT_EQ(run(simulate_args(out_a, "7", "1")), 0);
    ASSERT_EQ(run(simulate_args(out_b, "7", "1")), 0);
    for (const char* name : {"summary.csv", "imse.txt", "manifest.json", "warp_run_0000.json",
                             "warp_run_0001.json", "warp_run_0002.json"})
        EXPECT_EQ(slurp(out_a / name), slurp(out_b / name)) << name;
    // a different seed must actually change the outputs
    fs::path out_c = dir / "c";
    ASSERT_EQ(run(simulate_args(out_c, "8", "1")), 0);
    EXPECT_NE(slurp(out_a / "summary.csv"), slurp(out_c / "summary.csv"));
}

TEST(CliSimulate, ThreadCountDoesNotChangeOutputs) {
    fs::path dir = fresh_dir("simulate_threads");
    fs::path out_a = dir / "t1", out_b = dir / "t3";
    ASSERT_EQ(run(simulate_args(out_a, "5", "1")), 0);
    ASSERT_EQ(run(simulate_args(out_b, "5", "3")), 0);
    for (const char* name :
         {"summary.csv", "imse.txt", "warp_run_0000.json", "warp_run_0002.json"})
        EXPECT_EQ(slurp(out_a / name), slurp(out_b / name)) << name;
}

TEST(CliSimulate, ManifestRecordsConfiguration) {
    fs::path dir = fresh_dir("simulate_manifest");
    fs::path out = dir / "study";
    ASSERT_EQ(run(simulate_args(out, "7", "1")), 0);
    nlohmann::json man = load_json_file(out / "manifest.json");
    EXPECT_EQ(man["command"], "simulate");
    EXPECT_EQ(man["seed"], 7);
    EXPECT_EQ(man["config"]["scenario"], 1);
    EXPECT_EQ(man["config"]["true_warp"], "spline");
    EXPECT_EQ(man["config"]["knots"], 8);
    EXPECT_EQ(man["config"]["base"], "bundled");
    // summary rows: header plus one row per grid point
    std::string summary = slurp(out / "summary.csv");
    EXPECT_EQ(std::count(summary.begin(), summary.end(), '\n'), 102);
    EXPECT_EQ(summary.substr(0, summary.find('\n')), "time,bias,sd,mse");
}

TEST(CliSimulate, RejectsBadWarpName) {
    fs::path dir = fresh_dir("simulate_badwarp");
    int rc = run({"simulate", "--scenario", "1", "--runs", "1", "--n1", "40", "--n2", "40",
                  "--warp", "cubic", "--out", (dir / "x").string()});
    EXPECT_EQ(rc, 1);
}

TEST(CliDistance, ReportsPreAndPostGap) {
    Fixture f = make_fixture("distance_basic");
    fs::path out = f.dir / "dist.json";
    int rc = run({"distance", "--data1", f.data1.string(), "--data2", f.data2.string(), "--out",
                  out.string()});
    ASSERT_EQ(rc, 0);
    nlohmann::json j = load_json_file(out);
    double want = mean_squared_distance(f.a, f.b, 1000);
    EXPECT_NEAR(j["pre"].get<double>(), want, 1e-15 * want);
    EXPECT_FALSE(j.contains("post"));

    LinearSplineWarp w(f.b.t_min(), f.b.t_max(), {0.0, 3.4, 6.6, 10.0});
    fs::path warp_file = f.dir / "w.json";
    std::ofstream(warp_file) << w.to_json().dump(2);
    std::string stdout_text =
        run_stdout({"--json", "distance", "--data1", f.data1.string(), "--data2",
                    f.data2.string(), "--warp", warp_file.string()});
    nlohmann::json j2 = nlohmann::json::parse(stdout_text);
    ASSERT_TRUE(j2.contains("post"));
    std::vector<double> mapped(f.b.size());
    for (std::size_t i = 0; i < f.b.size(); ++i) mapped[i] = w(f.b.times()[i]);
    double want_post =
        mean_squared_distance(TimeSeries(mapped, f.b.values()), f.a, 1000);
    EXPECT_NEAR(j2["post"].get<double>(), want_post, 1e-15 * want_post);
}

TEST(CliErrors, ExitCodes) {
    Fixture f = make_fixture("exit_codes");
    EXPECT_EQ(run({"frobnicate"}), 2);
    EXPECT_EQ(run({"register", "--data1", f.data1.string()}), 2);  // missing --data2
    EXPECT_EQ(run({"measure", "--data1", f.data1.string(), "--data2",
                   (f.dir / "missing.csv").string()}),
              1);
    EXPECT_EQ(run({}), 2);  // a subcommand is required
}

TEST(CliInvariants, InputsAreNeverMutated) {
    Fixture f = make_fixture("inputs_untouched");
    std::string before1 = slurp(f.data1), before2 = slurp(f.data2);
    fs::path out = f.dir / "r.json";
    ASSERT_EQ(run({"register", "--data1", f.data1.string(), "--data2", f.data2.string(),
                   "--knots", "6", "--out", out.string()}),
              0);
    ASSERT_EQ(run({"measure", "--data1", f.data1.string(), "--data2", f.data2.string()}), 0);
    ASSERT_EQ(run({"landmarks", "--data1", f.data1.string()}), 0);
    ASSERT_EQ(run({"distance", "--data1", f.data1.string(), "--data2", f.data2.string()}), 0);
    EXPECT_EQ(slurp(f.data1), before1);
    EXPECT_EQ(slurp(f.data2), before2);
}
