#include <gtest/gtest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "orthokalman/scenario_io.hpp"
#include "random_systems.hpp"

using namespace orthokalman;

namespace {

std::vector<std::string> lines(const std::string& text) {
    std::vector<std::string> out;
    std::istringstream in(text);
    for (std::string line; std::getline(in, line);) {
        out.push_back(line);
    }
    return out;
}

std::string csv(const RunResult& r) {
    std::ostringstream out;
    io::write_csv(out, r);
    return out.str();
}

std::string error_of(std::string_view text) {
    try {
        io::parse_scenario(text);
    } catch (const ScenarioError& e) {
        return e.what();
    }
    return "";
}

const char* kMinimal = R"({
  "steps": [
    {"observe": {"G": [[1]], "o": [2.5], "C": {"type": "w", "data": [2]}}},
    {"evolve": {"n": 1, "F": [[1]], "c": [0], "K": {"type": "C", "data": [[1]]}},
     "observe": {"G": [[1]], "o": [3], "C": {"type": "C_inverse", "data": [[4]]}}}
  ],
  "commands": ["filter_all", "smooth"]
})";

}  // namespace

TEST(ScenarioJson, RoundTripIsExact) {
    std::vector<Scenario> all{gen_rotation(7),
                              gen_variance(3, VarianceMode::Slope, true),
                              gen_variance(4, VarianceMode::RandomWalk, false),
                              gen_add_remove(2),
                              gen_projectile(1),
                              gen_clock_offsets(5)};
    for (std::uint64_t seed = 1; seed <= 10; ++seed) {
        all.push_back(testkit::random_system(seed));
    }
    for (const Scenario& s : all) {
        const std::string text = io::dump_scenario(s);
        const Scenario back = io::parse_scenario(text);
        EXPECT_EQ(io::dump_scenario(back), text) << s.name;
        EXPECT_EQ(back.name, s.name);
        EXPECT_EQ(back.seed, s.seed);
        EXPECT_EQ(back.commands, s.commands);
        ASSERT_EQ(back.truth.size(), s.truth.size());
        for (std::size_t i = 0; i < s.truth.size(); ++i) {
            EXPECT_TRUE(back.truth[i].cwiseEqual(s.truth[i]).all());
        }
        EXPECT_EQ(csv(run(back)), csv(run(s))) << s.name;
    }
}

TEST(ScenarioJson, MinimalDocument) {
    const Scenario s = io::parse_scenario(kMinimal);
    EXPECT_EQ(s.steps.size(), 2u);
    EXPECT_TRUE(s.truth.empty());
    EXPECT_EQ(s.steps[0].observation->C.kind(), CovarianceKind::DiagonalWeights);
    EXPECT_EQ(s.steps[1].evolution->K.kind(), CovarianceKind::Explicit);
    EXPECT_EQ(s.steps[1].observation->C.kind(), CovarianceKind::Inverse);
    const RunResult r = run(s);
    // Weights 4 and 2 on observations 2.5 and 3 of a constant with unit process noise.
    EXPECT_TRUE(r.steps[1].filtered->observable());
    EXPECT_GT(r.steps[1].smoothed->state(0), 2.5);
    EXPECT_LT(r.steps[1].smoothed->state(0), 3.0);
}

TEST(ScenarioJson, CommandsWithArguments) {
    Scenario s = gen_rotation(1);
    s.commands = {Command::predict_to(4), Command::forget(2), Command::rollback(4),
                  Command::filter_all(), Command::smooth()};
    const std::string text = io::dump_scenario(s);
    EXPECT_NE(text.find("\"predict_to\": 4"), std::string::npos);
    EXPECT_NE(text.find("\"forget\": 2"), std::string::npos);
    EXPECT_EQ(io::parse_scenario(text).commands, s.commands);
}

TEST(ScenarioJson, SyntaxErrorsReportPosition) {
    const std::string msg = error_of("{\n  \"steps\": [\n    {,}\n  ]\n}");
    EXPECT_NE(msg.find("line 3"), std::string::npos) << msg;
}

TEST(ScenarioJson, ErrorsNameThePath) {
    EXPECT_NE(error_of(R"({"commands": []})").find("missing \"steps\""), std::string::npos);
    EXPECT_NE(error_of(R"({"steps": [{"observe": {"G": [[1]], "o": ["x"],
                           "C": {"type": "w", "data": [1]}}}]})")
                  .find("steps[0].observe.o[0]"),
              std::string::npos);
    EXPECT_NE(error_of(R"({"steps": [{"observe": {"G": [[1, 2], [3]], "o": [1, 1],
                           "C": {"type": "w", "data": [1, 1]}}}]})")
                  .find("steps[0].observe.G"),
              std::string::npos);
    EXPECT_NE(error_of(R"({"steps": [{"observe": {"G": [[1]], "o": [1],
                           "C": {"type": "Q", "data": [1]}}}]})")
                  .find("unknown covariance type"),
              std::string::npos);
    EXPECT_NE(error_of(R"({"steps": [{"observe": {"G": [[1]], "o": [1],
                           "C": {"type": "C", "data": [[-1]]}}}]})")
                  .find("steps[0].observe.C"),
              std::string::npos);
    EXPECT_NE(error_of(R"({"steps": [{"n": 0}]})").find("steps[0].n"), std::string::npos);
    EXPECT_NE(error_of(R"({"steps": [{"n": 1}], "commands": ["jump"]})").find("commands[0]"),
              std::string::npos);
    EXPECT_NE(error_of(R"({"steps": [{"n": 1}], "commands": [{"forget": 3}]})").find("step 3"),
              std::string::npos);
    EXPECT_NE(error_of(R"({"steps": [{"n": 1}], "truth": [[1, 2]]})").find("truth"),
              std::string::npos);
    EXPECT_NE(error_of("[1, 2]").find("expected an object"), std::string::npos);
}

TEST(ScenarioJson, LoadReportsTheFile) {
    const auto dir = std::filesystem::temp_directory_path() / "orthokalman_io_test";
    std::filesystem::create_directories(dir);
    const auto good = dir / "good.json";
    const auto bad = dir / "bad.json";
    std::ofstream(good) << kMinimal;
    std::ofstream(bad) << "{\"steps\": [";
    EXPECT_EQ(io::load_scenario(good.string()).steps.size(), 2u);
    try {
        io::load_scenario(bad.string());
        FAIL() << "expected ScenarioError";
    } catch (const ScenarioError& e) {
        EXPECT_NE(std::string(e.what()).find(bad.string()), std::string::npos);
    }
    EXPECT_THROW(io::load_scenario((dir / "missing.json").string()), ScenarioError);
    std::filesystem::remove_all(dir);
}

TEST(ResultCsv, FormatsValues) {
    EXPECT_EQ(io::format_double(kNaN), "NaN");
    EXPECT_EQ(io::format_double(0.1), "0.10000000000000001");
    EXPECT_EQ(io::format_double(2.0), "2");
    EXPECT_EQ(std::stod(io::format_double(1.0 / 3.0)), 1.0 / 3.0);
}

TEST(ResultCsv, OneRowPerComponent) {
    RotationOptions opt;
    opt.obs_rows = 1;
    const std::vector<std::string> rows = lines(csv(run(gen_rotation(7, opt))));
    ASSERT_EQ(rows.size(), 33u);
    EXPECT_EQ(rows[0], io::kResultHeader);
    EXPECT_EQ(rows[1].rfind("0,0,1,NaN,NaN,", 0), 0u) << rows[1];
    EXPECT_EQ(rows[32].rfind("15,1,", 0), 0u);
    for (std::size_t i = 1; i < rows.size(); ++i) {
        EXPECT_EQ(std::count(rows[i].begin(), rows[i].end(), ','), 6) << rows[i];
    }
}

TEST(ResultCsv, MissingEstimatesAreNaN) {
    Scenario s = gen_variance(1, VarianceMode::Slope, false);
    s.commands = {Command::predict_to(2)};
    const std::vector<std::string> rows = lines(csv(run(s)));
    ASSERT_EQ(rows.size(), 4u);
    EXPECT_EQ(rows[3].substr(rows[3].size() - 8), ",NaN,NaN");
}

TEST(PerfCsv, GroupsCoverAllSteps) {
    PerfResult r;
    r.group_seconds_per_step = {1e-6, 2e-6, 3e-6};
    std::ostringstream out;
    io::write_perf_csv(out, r, 100, 250);
    const std::vector<std::string> rows = lines(out.str());
    ASSERT_EQ(rows.size(), 4u);
    EXPECT_EQ(rows[0], "group,first_step,last_step,seconds_per_step");
    EXPECT_EQ(rows[1].rfind("0,0,99,", 0), 0u);
    EXPECT_EQ(rows[3].rfind("2,200,249,", 0), 0u);
}
