#pragma once

#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "regalign/alignment.hpp"
#include "regalign/error.hpp"
#include "regalign/landmarks.hpp"
#include "regalign/metrics.hpp"
#include "regalign/optimizer.hpp"
#include "regalign/series.hpp"
#include "regalign/simulate.hpp"
#include "regalign/version.hpp"
#include "regalign/warp.hpp"

namespace regalign {
namespace cli_detail {

inline std::string fnv1a64_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) raise(ErrorCode::io_error, "cannot open " + path);
    std::uint64_t h = 1469598103934665603ULL;
    char buf[65536];
    for (;;) {
        in.read(buf, sizeof(buf));
        std::streamsize got = in.gcount();
        if (got <= 0) break;
        for (std::streamsize i = 0; i < got; ++i) {
            h ^= static_cast<unsigned char>(buf[i]);
            h *= 1099511628211ULL;
        }
        if (!in) break;
    }
    char out[17];
    std::snprintf(out, sizeof(out), "%016llx", static_cast<unsigned long long>(h));
    return out;
}

inline nlohmann::json input_digest(const std::string& path) {
    return {{"file", std::filesystem::path(path).filename().string()},
            {"digest", fnv1a64_file(path)}};
}

inline void write_text(const std::string& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) raise(ErrorCode::io_error, "cannot write " + path);
    out << text;
}

inline void write_json(const std::string& path, const nlohmann::json& j) {
    write_text(path, j.dump(2) + "\n");
}

inline nlohmann::json load_json(const std::string& path) {
    std::ifstream in(path);
    if (!in) raise(ErrorCode::io_error, "cannot open " + path);
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        raise(ErrorCode::parse_error, path + ": " + e.what());
    }
    return j;
}

inline LinearSplineWarp load_warp(const std::string& path) {
    return LinearSplineWarp::from_json(load_json(path));
}

inline nlohmann::json manifest_skeleton(const std::string& command) {
    return {{"tool", {{"name", tool_name}, {"version", tool_version}}},
            {"command", command},
            {"inputs", nlohmann::json::array()},
            {"config", nlohmann::json::object()}};
}

inline std::string fmt(double x) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", x);
    return buf;
}

// flags shared by every subcommand that evaluates the alignment measure
struct AlignFlags {
    double h1 = 0.0;
    double h2 = 0.0;
    std::string kernel = "gaussian";
    std::string kernel2;
    double prune = 0.0;
    int partitions = 1;

    void attach(CLI::App* cmd) {
        cmd->add_option("--h1", h1, "time bandwidth (default: 5% of the first series' time span)");
        cmd->add_option("--h2", h2, "value bandwidth (default: 10% of the combined value span)");
        cmd->add_option("--kernel", kernel, "kernel for both factors")->capture_default_str();
        cmd->add_option("--kernel2", kernel2, "override the value kernel");
        cmd->add_option("--prune", prune,
                        "skip pairs farther than this many h1 from the warped time (0 = exact)");
        cmd->add_option("--partitions", partitions, "inner-sum partition count")
            ->capture_default_str();
    }

    AlignmentConfig to_config() const {
        AlignmentConfig c;
        c.kernel1 = kernel_from_name(kernel);
        c.kernel2 = kernel_from_name(kernel2.empty() ? kernel : kernel2);
        c.h1 = h1;
        c.h2 = h2;
        c.prune_tau = prune;
        c.partitions = partitions;
        return c;
    }

    nlohmann::json to_json() const {
        return {{"h1", h1},
                {"h2", h2},
                {"kernel", kernel},
                {"kernel2", kernel2.empty() ? kernel : kernel2},
                {"prune", prune},
                {"partitions", partitions}};
    }
};

struct OptFlags {
    int max_iter = 500;
    double tol = 1e-8;
    double step = 1.0;
    double margin = default_monotone_margin;
    double prominence = 0.05;
    bool precondition = false;
    std::string init = "landmarks";
    std::string init_warp_file;

    void attach(CLI::App* cmd) {
        cmd->add_option("--max-iter", max_iter, "iteration budget")->capture_default_str();
        cmd->add_option("--tol", tol, "relative objective-change stop")->capture_default_str();
        cmd->add_option("--step", step, "largest knot move per iteration, in h1 units")
            ->capture_default_str();
        cmd->add_option("--margin", margin, "strict-monotonicity margin")->capture_default_str();
        cmd->add_option("--prominence", prominence, "landmark prominence fraction")
            ->capture_default_str();
        cmd->add_flag("--precondition", precondition,
                      "scale each gradient component by its basis mass");
        cmd->add_option("--init", init, "initial warp: landmarks or identity")
            ->capture_default_str();
        cmd->add_option("--init-warp", init_warp_file, "JSON file with the starting warp");
    }

    OptimizerConfig to_config() const {
        OptimizerConfig c;
        c.max_iterations = max_iter;
        c.rel_tolerance = tol;
        c.initial_step = step;
        c.monotone_margin = margin;
        c.prominence_frac = prominence;
        c.precondition = precondition;
        if (!init_warp_file.empty()) {
            c.init = InitMode::provided;
            c.init_warp = load_warp(init_warp_file);
        } else {
            c.init = init_mode_from_name(init);
        }
        return c;
    }

    nlohmann::json to_json() const {
        return {{"max_iter", max_iter},
                {"tol", tol},
                {"step", step},
                {"margin", margin},
                {"prominence", prominence},
                {"precondition", precondition},
                {"init", init_warp_file.empty() ? init : "provided:" + init_warp_file}};
    }
};

inline void warn_compact_kernel(const AlignmentConfig& cfg) {
    if (kernel_compact_support(cfg.kernel1))
        std::cerr << "warning: compact-support time kernel can zero out the gradient far from "
                     "alignment; gaussian is the safe default\n";
}

inline nlohmann::json registration_json(const RegistrationResult& r, const TimeSeries& data2) {
    std::vector<double> mapped(data2.size());
    for (std::size_t j = 0; j < data2.size(); ++j) mapped[j] = r.warp(data2.times()[j]);
    return {{"warp", r.warp.to_json()},
            {"initial_warp", r.initial_warp.to_json()},
            {"objective_trace", r.objective_trace},
            {"iterations", r.iterations},
            {"converged", r.converged},
            {"plateau", r.plateau},
            {"measure",
             {{"L_n", r.value.l_n}, {"N_n", r.value.numerator}, {"D_n", r.value.denominator}}},
            {"registered", {{"times", mapped}, {"values", data2.values()}}}};
}

inline std::string landmarks_csv(const std::vector<Landmark>& ls) {
    std::string out = "time,value,kind,prominence\n";
    for (const Landmark& l : ls)
        out += fmt(l.time) + "," + fmt(l.value) + "," + landmark_kind_name(l.kind) + "," +
               fmt(l.prominence) + "\n";
    return out;
}

inline nlohmann::json landmarks_json(const std::vector<Landmark>& ls) {
    nlohmann::json arr = nlohmann::json::array();
    for (const Landmark& l : ls)
        arr.push_back({{"time", l.time},
                       {"value", l.value},
                       {"kind", landmark_kind_name(l.kind)},
                       {"prominence", l.prominence}});
    return arr;
}

}  // namespace cli_detail

inline int cli_dispatch(const std::vector<std::string>& args) {
    namespace cd = cli_detail;
    namespace fs = std::filesystem;

    CLI::App app{"feature-sensitive registration of functional data"};
    app.require_subcommand(1);
    bool as_json = false;
    app.add_flag("--json", as_json, "machine-readable output on stdout");

    // ---- register ----
    auto* reg = app.add_subcommand("register", "align the second series' time scale to the first");
    std::string r_data1, r_data2, r_out = "result.json", r_aligned;
    std::size_t r_knots = 20;
    double r_dlo = 0.0, r_dhi = 0.0;
    bool r_have_dlo = false, r_have_dhi = false;
    std::uint64_t r_seed = 42;
    cd::AlignFlags r_align;
    cd::OptFlags r_opt;
    reg->add_option("--data1", r_data1, "reference series CSV")->required();
    reg->add_option("--data2", r_data2, "series to be warped, CSV")->required();
    reg->add_option("--knots", r_knots, "knot count of the search space")->capture_default_str();
    reg->add_option("--out", r_out, "result JSON path")->capture_default_str();
    reg->add_option("--aligned", r_aligned, "also write the warped series as CSV here");
    reg->add_option("--domain-lo", r_dlo, "warp domain start (default: data2 range)")
        ->each([&](const std::string&) { r_have_dlo = true; });
    reg->add_option("--domain-hi", r_dhi, "warp domain end (default: data2 range)")
        ->each([&](const std::string&) { r_have_dhi = true; });
    reg->add_option("--seed", r_seed, "recorded in the manifest")->capture_default_str();
    r_align.attach(reg);
    r_opt.attach(reg);

    // ---- measure ----
    auto* mea = app.add_subcommand("measure", "evaluate the alignment measure for a given warp");
    std::string m_data1, m_data2, m_warp, m_out;
    cd::AlignFlags m_align;
    mea->add_option("--data1", m_data1, "reference series CSV")->required();
    mea->add_option("--data2", m_data2, "second series CSV")->required();
    mea->add_option("--warp", m_warp, "warp JSON (default: identity over data2's range)");
    mea->add_option("--out", m_out, "also write the result JSON here");
    m_align.attach(mea);

    // ---- landmarks ----
    auto* lmk = app.add_subcommand("landmarks", "detect and match prominent peaks and valleys");
    std::string l_data1, l_data2, l_prefix;
    double l_prominence = 0.05;
    lmk->add_option("--data1", l_data1, "first series CSV")->required();
    lmk->add_option("--data2", l_data2, "second series CSV (enables matching)");
    lmk->add_option("--out-prefix", l_prefix, "write CSVs with this path prefix");
    lmk->add_option("--prominence", l_prominence, "prominence fraction threshold")
        ->capture_default_str();

    // ---- simulate ----
    auto* sim = app.add_subcommand("simulate", "run a seeded replication study");
    int s_scenario = 1;
    std::size_t s_runs = 100, s_n1 = 250, s_n2 = 250, s_knots = 0, s_grid = 1001;
    std::uint64_t s_seed = 42;
    double s_noise = -1.0;
    int s_threads = 1;
    std::string s_base, s_out = "study", s_warp;
    cd::AlignFlags s_align;
    cd::OptFlags s_opt;
    sim->add_option("--scenario", s_scenario, "sampling design, 1..4")
        ->required()
        ->check(CLI::Range(1, 4));
    sim->add_option("--runs", s_runs, "replication count")->capture_default_str();
    sim->add_option("--seed", s_seed, "master seed")->capture_default_str();
    sim->add_option("--base", s_base, "base series CSV (default: bundled synthetic curve)");
    sim->add_option("--out", s_out, "output directory")->capture_default_str();
    sim->add_option("--n1", s_n1, "first sample size")->capture_default_str();
    sim->add_option("--n2", s_n2, "second sample size")->capture_default_str();
    sim->add_option("--noise-sd", s_noise, "noise SD (default: 5% of the base values' SD)");
    sim->add_option("--warp", s_warp, "true warp override: spline or periodic");
    sim->add_option("--knots", s_knots, "search-space knots (default: 21 for scenario 1, else 20)");
    sim->add_option("--grid", s_grid, "evaluation grid points (odd)")->capture_default_str();
    sim->add_option("--threads", s_threads, "parallel runs")->capture_default_str();
    s_align.attach(sim);
    s_opt.attach(sim);

    // ---- distance ----
    auto* dis = app.add_subcommand("distance", "mean squared gap between interpolated curves");
    std::string d_data1, d_data2, d_warp, d_out;
    std::size_t d_grid = 1000;
    dis->add_option("--data1", d_data1, "first series CSV")->required();
    dis->add_option("--data2", d_data2, "second series CSV")->required();
    dis->add_option("--warp", d_warp, "warp JSON: also report the post-alignment distance");
    dis->add_option("--grid", d_grid, "grid size over the common range")->capture_default_str();
    dis->add_option("--out", d_out, "also write the result JSON here");

    std::vector<const char*> argv;
    argv.push_back(tool_name);
    for (const std::string& a : args) argv.push_back(a.c_str());
    try {
        app.parse(static_cast<int>(argv.size()), argv.data());
    } catch (const CLI::ParseError& e) {
        int rc = app.exit(e);
        return rc == 0 ? 0 : 2;
    }

    try {
        if (app.got_subcommand(reg)) {
            TimeSeries a = load_csv(r_data1);
            TimeSeries b = load_csv(r_data2);
            if (r_have_dlo != r_have_dhi)
                raise(ErrorCode::usage_error, "--domain-lo and --domain-hi go together");
            std::optional<std::pair<double, double>> domain;
            if (r_have_dlo) domain = {r_dlo, r_dhi};
            AlignmentConfig ac = r_align.to_config();
            cd::warn_compact_kernel(ac);
            RegistrationResult res =
                register_series(a, b, r_knots, ac, r_opt.to_config(), domain);
            nlohmann::json result = cd::registration_json(res, b);
            cd::write_json(r_out, result);
            if (!r_aligned.empty()) {
                auto mapped = result["registered"]["times"].get<std::vector<double>>();
                save_csv(TimeSeries(std::move(mapped), b.values()), r_aligned);
            }
            nlohmann::json man = cd::manifest_skeleton("register");
            man["inputs"].push_back(cd::input_digest(r_data1));
            man["inputs"].push_back(cd::input_digest(r_data2));
            man["seed"] = r_seed;
            man["config"] = {{"knots", r_knots},
                             {"domain", domain ? nlohmann::json{domain->first, domain->second}
                                               : nlohmann::json{b.t_min(), b.t_max()}},
                             {"align", r_align.to_json()},
                             {"optimizer", r_opt.to_json()}};
            cd::write_json(r_out + ".manifest.json", man);
            if (as_json)
                std::cout << result.dump(2) << "\n";
            else
                std::cout << "L_n=" << cd::fmt(res.value.l_n) << " iterations=" << res.iterations
                          << " converged=" << (res.converged ? "yes" : "no") << " out=" << r_out
                          << "\n";
        } else if (app.got_subcommand(mea)) {
            TimeSeries a = load_csv(m_data1);
            TimeSeries b = load_csv(m_data2);
            LinearSplineWarp w = m_warp.empty()
                                     ? LinearSplineWarp::identity(b.t_min(), b.t_max(), 2)
                                     : cd::load_warp(m_warp);
            AlignmentValue v = measure(a, b, w, m_align.to_config());
            nlohmann::json result = {
                {"L_n", v.l_n}, {"N_n", v.numerator}, {"D_n", v.denominator}};
            std::cout << result.dump(2) << "\n";
            if (!m_out.empty()) {
                cd::write_json(m_out, result);
                nlohmann::json man = cd::manifest_skeleton("measure");
                man["inputs"].push_back(cd::input_digest(m_data1));
                man["inputs"].push_back(cd::input_digest(m_data2));
                if (!m_warp.empty()) man["inputs"].push_back(cd::input_digest(m_warp));
                man["config"] = {{"align", m_align.to_json()}};
                cd::write_json(m_out + ".manifest.json", man);
            }
        } else if (app.got_subcommand(lmk)) {
            TimeSeries a = load_csv(l_data1);
            auto la = detect(a, l_prominence);
            std::optional<TimeSeries> b;
            std::vector<Landmark> lb;
            LandmarkMatch match_result;
            if (!l_data2.empty()) {
                b = load_csv(l_data2);
                lb = detect(*b, l_prominence);
                match_result = match_series(*b, a, l_prominence);
            }
            if (as_json) {
                nlohmann::json result = {{"data1", cd::landmarks_json(la)}};
                if (b) {
                    nlohmann::json pairs = nlohmann::json::array();
                    for (auto [s, t] : match_result.pairs) pairs.push_back({s, t});
                    result["data2"] = cd::landmarks_json(lb);
                    result["pairs"] = pairs;
                    result["score"] = match_result.score;
                }
                std::cout << result.dump(2) << "\n";
            } else if (l_prefix.empty()) {
                std::cout << cd::landmarks_csv(la);
                if (b) {
                    std::cout << "\n" << cd::landmarks_csv(lb) << "\ns,t\n";
                    for (auto [s, t] : match_result.pairs)
                        std::cout << cd::fmt(s) << "," << cd::fmt(t) << "\n";
                }
            }
            if (!l_prefix.empty()) {
                cd::write_text(l_prefix + "_data1.csv", cd::landmarks_csv(la));
                if (b) {
                    cd::write_text(l_prefix + "_data2.csv", cd::landmarks_csv(lb));
                    std::string pairs = "s,t\n";
                    for (auto [s, t] : match_result.pairs)
                        pairs += cd::fmt(s) + "," + cd::fmt(t) + "\n";
                    cd::write_text(l_prefix + "_pairs.csv", pairs);
                }
                nlohmann::json man = cd::manifest_skeleton("landmarks");
                man["inputs"].push_back(cd::input_digest(l_data1));
                if (b) man["inputs"].push_back(cd::input_digest(l_data2));
                man["config"] = {{"prominence", l_prominence}};
                cd::write_json(l_prefix + ".manifest.json", man);
            }
        } else if (app.got_subcommand(sim)) {
            TimeSeries base = s_base.empty() ? default_base_curve() : load_csv(s_base);
            ScenarioSpec spec = ScenarioSpec::make(s_scenario, std::move(base), s_runs, s_seed);
            spec.n1 = s_n1;
            spec.n2 = s_n2;
            if (s_noise >= 0.0) spec.noise_sd = s_noise;
            if (!s_warp.empty()) {
                if (s_warp == "spline")
                    spec.true_warp = TrueWarp::spline();
                else if (s_warp == "periodic")
                    spec.true_warp = TrueWarp::periodic(spec.base.t_min(), spec.base.t_max());
                else
                    raise(ErrorCode::usage_error, "--warp must be spline or periodic");
            }
            EstimatorConfig est;
            est.knots = s_knots;
            est.align = s_align.to_config();
            est.opt = s_opt.to_config();
            est.grid_points = s_grid;
            cd::warn_compact_kernel(est.align);

            StudyResult sr = run_study(spec, est, s_threads);

            fs::create_directories(s_out);
            std::string summary = "time,bias,sd,mse\n";
            for (std::size_t i = 0; i < sr.grid.size(); ++i)
                summary += cd::fmt(sr.grid[i]) + "," + cd::fmt(sr.summary.bias[i]) + "," +
                           cd::fmt(sr.summary.sd[i]) + "," + cd::fmt(sr.summary.mse[i]) + "\n";
            cd::write_text((fs::path(s_out) / "summary.csv").string(), summary);
            cd::write_text((fs::path(s_out) / "imse.txt").string(),
                           cd::fmt(sr.summary.normalized_imse) + "\n");
            for (std::size_t r = 0; r < sr.records.size(); ++r) {
                const RunRecord& rec = sr.records[r];
                char name[32];
                std::snprintf(name, sizeof(name), "warp_run_%04zu.json", r);
                nlohmann::json j;
                if (rec.ok)
                    j = {{"run", r},
                         {"warp", rec.warp->to_json()},
                         {"L_n", rec.l_n},
                         {"iterations", rec.iterations},
                         {"converged", rec.converged}};
                else
                    j = {{"run", r}, {"error", rec.error}};
                cd::write_json((fs::path(s_out) / name).string(), j);
            }
            nlohmann::json man = cd::manifest_skeleton("simulate");
            if (!s_base.empty()) man["inputs"].push_back(cd::input_digest(s_base));
            man["seed"] = s_seed;
            man["config"] = {{"scenario", s_scenario},
                             {"runs", s_runs},
                             {"n1", s_n1},
                             {"n2", s_n2},
                             {"noise_sd", spec.resolved_noise_sd()},
                             {"true_warp", spec.true_warp.name()},
                             {"knots", est.resolved_knots(s_scenario)},
                             {"grid", s_grid},
                             {"threads", s_threads},
                             {"base", s_base.empty() ? "bundled" : "file"},
                             {"align", s_align.to_json()},
                             {"optimizer", s_opt.to_json()}};
            cd::write_json((fs::path(s_out) / "manifest.json").string(), man);
            if (as_json) {
                nlohmann::json result = {{"runs", s_runs},
                                         {"failures", sr.failures},
                                         {"normalized_imse", sr.summary.normalized_imse},
                                         {"out", s_out}};
                std::cout << result.dump(2) << "\n";
            } else {
                std::cout << "runs=" << s_runs << " failures=" << sr.failures
                          << " imse=" << cd::fmt(sr.summary.normalized_imse) << " out=" << s_out
                          << "\n";
            }
        } else if (app.got_subcommand(dis)) {
            TimeSeries a = load_csv(d_data1);
            TimeSeries b = load_csv(d_data2);
            double pre = mean_squared_distance(a, b, d_grid);
            std::optional<double> post;
            if (!d_warp.empty()) {
                LinearSplineWarp w = cd::load_warp(d_warp);
                std::vector<double> mapped(b.size());
                for (std::size_t j = 0; j < b.size(); ++j) mapped[j] = w(b.times()[j]);
                post = mean_squared_distance(TimeSeries(std::move(mapped), b.values()), a, d_grid);
            }
            nlohmann::json result = {{"pre", pre}};
            if (post) result["post"] = *post;
            if (as_json)
                std::cout << result.dump(2) << "\n";
            else {
                std::cout << "pre=" << cd::fmt(pre) << "\n";
                if (post) std::cout << "post=" << cd::fmt(*post) << "\n";
            }
            if (!d_out.empty()) {
                cd::write_json(d_out, result);
                nlohmann::json man = cd::manifest_skeleton("distance");
                man["inputs"].push_back(cd::input_digest(d_data1));
                man["inputs"].push_back(cd::input_digest(d_data2));
                if (!d_warp.empty()) man["inputs"].push_back(cd::input_digest(d_warp));
                man["config"] = {{"grid", d_grid}};
                cd::write_json(d_out + ".manifest.json", man);
            }
        }
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}

}  // namespace regalign
