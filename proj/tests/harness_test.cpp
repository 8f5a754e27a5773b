#include <gtest/gtest.h>

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "promptwise/harness.hpp"

using namespace pw;
namespace fs = std::filesystem;

namespace {

HarnessConfig tiny_config() {
    HarnessConfig cfg;
    cfg.n_train = 48;
    cfg.n_test = 24;
    cfg.synth.classes = 4;
    cfg.vocab_size = 32;
    cfg.dim = 8;
    cfg.depth = 2;
    cfg.prompt_len = 4;
    cfg.prompt_start = 0;
    cfg.prompt_end = 1;
    cfg.pretrain.total_steps = 20;
    cfg.pretrain.batch_size = 8;
    cfg.train.total_steps = 20;
    cfg.train.batch_size = 8;
    cfg.seed = 3;
    return cfg;
}

fs::path fresh_dir(const std::string& name) {
    const fs::path dir = fs::temp_directory_path() / ("pw_harness_" + name);
    fs::remove_all(dir);
    return dir;
}

std::string slurp(const fs::path& path) {
    std::ifstream is(path, std::ios::binary);
    std::stringstream ss;
    ss << is.rdbuf();
    return ss.str();
}

std::size_t count_lines(const std::string& text) {
    std::size_t n = 0;
    for (char c : text) {
        n += c == '\n' ? 1 : 0;
    }
    return n;
}

} // namespace

TEST(Config, RoundTripThroughText) {
    HarnessConfig cfg = tiny_config();
    cfg.mode = "attention";
    cfg.train_eta = 42.5;
    cfg.metric = MetricKind::F1Macro;
    const auto text = config_to_text(cfg);
    const auto reparsed = parse_config_text(text);
    EXPECT_EQ(config_to_text(reparsed), text);
    EXPECT_EQ(config_hash_hex(reparsed), config_hash_hex(cfg));
}

TEST(Config, ParseErrorsCarryLineNumbers) {
    try {
        parse_config_text("[data]\nn_train = 4\nbogus_key = 1\n");
        FAIL() << "expected ParseError";
    } catch (const ParseError& e) {
        EXPECT_EQ(e.line(), 3u);
    }
    EXPECT_THROW(parse_config_text("[nosuch]\n"), ParseError);
    EXPECT_THROW(parse_config_text("key_outside = 1\n"), ParseError);
    EXPECT_THROW(parse_config_text("[data]\nn_train = abc\n"), ParseError);
    EXPECT_THROW(parse_config_text("[model]\nmode = bogus\n"), ParseError);
    EXPECT_THROW(parse_config_text("[data]\nno equals sign\n"), ParseError);
}

TEST(Config, TestScenarioOverrideRoundTripsAndDrivesEvaluation) {
    HarnessConfig cfg = tiny_config();
    cfg.scenario = MissingScenario::MissingBoth;
    cfg.test_scenario = MissingScenario::MissingText;
    const auto reparsed = parse_config_text(config_to_text(cfg));
    ASSERT_TRUE(reparsed.test_scenario.has_value());
    EXPECT_EQ(*reparsed.test_scenario, MissingScenario::MissingText);
    EXPECT_EQ(reparsed.eval_scenario(), MissingScenario::MissingText);
    EXPECT_EQ(tiny_config().eval_scenario(), MissingScenario::MissingBoth);

    // train on missing-both, evaluate on missing-text only
    const auto dir = fresh_dir("mismatch");
    const auto result = run_pipeline(cfg, dir.string());
    EXPECT_EQ(result.eval.case_counts.count(MissingCase::MissingImage), 0u);
    const auto report = slurp(dir / "eval_report.csv");
    EXPECT_NE(report.find("\ntext,"), std::string::npos);
    fs::remove_all(dir);
}

TEST(Config, HashDistinguishesConfigs) {
    HarnessConfig a = tiny_config();
    HarnessConfig b = tiny_config();
    b.seed = 4;
    EXPECT_NE(config_hash_hex(a), config_hash_hex(b));
    EXPECT_EQ(config_hash_hex(a).size(), 16u);
}

TEST(Pipeline, WritesAllArtifactsAndLabelsMode) {
    const auto dir = fresh_dir("pipeline");
    HarnessConfig cfg = tiny_config();
    cfg.mode = "baseline";
    const auto result = run_pipeline(cfg, dir.string());
    for (const char* name : {"manifest.txt", "vocab.txt", "backbone.pwck", "model.pwck",
                             "pretrain_loss.csv", "train_loss.csv", "eval_report.csv"}) {
        EXPECT_TRUE(fs::exists(dir / name)) << name;
    }
    const auto report = slurp(dir / "eval_report.csv");
    EXPECT_NE(report.find(",baseline\n"), std::string::npos);
    EXPECT_NE(report.find("scenario,train_eta,test_eta,case,metric,value,mode"),
              std::string::npos);
    EXPECT_GT(result.eval.overall, 0.0);
    // loss history rows = steps + header
    EXPECT_EQ(count_lines(slurp(dir / "train_loss.csv")), cfg.train.total_steps + 1);
    fs::remove_all(dir);
}

TEST(Pipeline, DeterministicAcrossRuns) {
    const auto dir1 = fresh_dir("det1");
    const auto dir2 = fresh_dir("det2");
    HarnessConfig cfg = tiny_config();
    cfg.mode = "input";
    run_pipeline(cfg, dir1.string());
    run_pipeline(cfg, dir2.string());
    for (const char* name : {"model.pwck", "backbone.pwck", "eval_report.csv",
                             "train_loss.csv", "pretrain_loss.csv", "manifest.txt"}) {
        EXPECT_EQ(slurp(dir1 / name), slurp(dir2 / name)) << name;
    }
    fs::remove_all(dir1);
    fs::remove_all(dir2);
}

TEST(Pipeline, RerunFromWrittenManifestReproducesArtifacts) {
    const auto dir1 = fresh_dir("manifest1");
    const auto dir2 = fresh_dir("manifest2");
    HarnessConfig cfg = tiny_config();
    cfg.mode = "attention";
    run_pipeline(cfg, dir1.string());
    const auto reparsed = parse_config_file((dir1 / "manifest.txt").string());
    run_pipeline(reparsed, dir2.string());
    EXPECT_EQ(slurp(dir1 / "model.pwck"), slurp(dir2 / "model.pwck"));
    EXPECT_EQ(slurp(dir1 / "eval_report.csv"), slurp(dir2 / "eval_report.csv"));
    fs::remove_all(dir1);
    fs::remove_all(dir2);
}

TEST(Pipeline, ReusedBackboneSkipsPretraining) {
    const auto dir1 = fresh_dir("reuse1");
    const auto dir2 = fresh_dir("reuse2");
    HarnessConfig cfg = tiny_config();
    run_pipeline(cfg, dir1.string());
    run_pipeline(cfg, dir2.string(), (dir1 / "backbone.pwck").string());
    EXPECT_FALSE(fs::exists(dir2 / "backbone.pwck"));
    EXPECT_EQ(slurp(dir1 / "model.pwck"), slurp(dir2 / "model.pwck"));
    fs::remove_all(dir1);
    fs::remove_all(dir2);
}

TEST(Stages, PromptTrainWithoutBackboneIsDependencyError) {
    const auto dir = fresh_dir("nostage");
    fs::create_directories(dir);
    EXPECT_THROW(stage_prompt_train(tiny_config(), dir.string()), DependencyError);
    fs::remove_all(dir);
}

TEST(Stages, PretrainTrainEvalChain) {
    const auto dir = fresh_dir("chain");
    HarnessConfig cfg = tiny_config();
    cfg.mode = "input";
    stage_pretrain(cfg, dir.string());
    EXPECT_TRUE(fs::exists(dir / "backbone.pwck"));
    stage_prompt_train(cfg, dir.string());
    EXPECT_TRUE(fs::exists(dir / "model.pwck"));
    const auto eval = stage_evaluate(cfg, dir.string());
    EXPECT_TRUE(fs::exists(dir / "eval_report.csv"));
    EXPECT_GE(eval.overall, 0.0);
    EXPECT_LE(eval.overall, 1.0);
    fs::remove_all(dir);
}

TEST(MissingSet, QuotasAndDeterminism) {
    auto complete = gen_synthetic(40, tiny_config().synth, 1);
    const auto a = make_missing_set(complete, 50.0, MissingScenario::MissingBoth, 7);
    const auto b = make_missing_set(complete, 50.0, MissingScenario::MissingBoth, 7);
    std::size_t mt = 0, mi = 0, c = 0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        EXPECT_EQ(a[i].missing_case, b[i].missing_case);
        switch (a[i].missing_case) {
            case MissingCase::MissingText: ++mt; break;
            case MissingCase::MissingImage: ++mi; break;
            case MissingCase::Complete: ++c; break;
        }
    }
    EXPECT_EQ(mt, 10u);
    EXPECT_EQ(mi, 10u);
    EXPECT_EQ(c, 20u);
}

TEST(SweepEta, GridRowCountLaw) {
    const auto dir = fresh_dir("sweepeta");
    HarnessConfig cfg = tiny_config();
    sweep_missing_rate(cfg, {0.0, 50.0},
                       {MissingScenario::MissingBoth, MissingScenario::MissingText},
                       dir.string());
    const auto grid = slurp(dir / "eta_grid.csv");
    // header + |scenarios| * |etas| * |etas|
    EXPECT_EQ(count_lines(grid), 1u + 2u * 2u * 2u);
    EXPECT_TRUE(fs::exists(dir / "plot_eta.gp"));
    EXPECT_NE(grid.find("config_hash"), std::string::npos);
    fs::remove_all(dir);
}

TEST(SweepEta, DegenerateSinglePoint) {
    const auto dir = fresh_dir("sweepeta0");
    sweep_missing_rate(tiny_config(), {0.0}, {MissingScenario::MissingBoth}, dir.string());
    EXPECT_EQ(count_lines(slurp(dir / "eta_grid.csv")), 2u);
    EXPECT_THROW(
        sweep_missing_rate(tiny_config(), {120.0}, {MissingScenario::MissingBoth}, dir.string()),
        ConfigError);
    fs::remove_all(dir);
}

TEST(SweepLayers, PairEnumerationAndValidation) {
    const auto pairs = all_continuous_pairs(6);
    EXPECT_EQ(pairs.size(), 21u);
    for (std::size_t e = 0; e < 6; ++e) {
        EXPECT_NE(std::find(pairs.begin(), pairs.end(), std::make_pair(std::size_t{0}, e)),
                  pairs.end());
    }
    // the early-half placement is part of the default grid
    EXPECT_NE(std::find(pairs.begin(), pairs.end(), std::make_pair(std::size_t{0}, std::size_t{2})),
              pairs.end());

    EXPECT_THROW(sweep_prompt_layers(tiny_config(), {{0, 5}}, "unused"), RangeError);
    EXPECT_THROW(sweep_prompt_layers(tiny_config(), {{1, 0}}, "unused"), RangeError);
}

TEST(SweepLayers, RunsCellsOnSharedBackbone) {
    const auto dir = fresh_dir("sweeplayers");
    HarnessConfig cfg = tiny_config();
    sweep_prompt_layers(cfg, {{0, 0}, {0, 1}}, dir.string());
    const auto grid = slurp(dir / "layer_grid.csv");
    EXPECT_EQ(count_lines(grid), 3u);
    EXPECT_TRUE(fs::exists(dir / "shared" / "backbone.pwck"));
    EXPECT_TRUE(fs::exists(dir / "cell_s0_e1" / "model.pwck"));
    fs::remove_all(dir);
}

TEST(SweepLength, EmitsRatioColumnAndMatchedBaseline) {
    const auto dir = fresh_dir("sweeplength");
    HarnessConfig cfg = tiny_config();
    sweep_prompt_length(cfg, {2}, dir.string());
    const auto grid = slurp(dir / "length_grid.csv");
    // header + prompted row + matched-baseline row
    EXPECT_EQ(count_lines(grid), 3u);
    EXPECT_NE(grid.find("param_ratio"), std::string::npos);
    EXPECT_NE(grid.find("baseline_matched"), std::string::npos);
    fs::remove_all(dir);

    HarnessConfig attention = tiny_config();
    attention.mode = "attention";
    EXPECT_THROW(sweep_prompt_length(attention, {3}, "unused"), ConfigError);
    HarnessConfig baseline = tiny_config();
    baseline.mode = "baseline";
    EXPECT_THROW(sweep_prompt_length(baseline, {2}, "unused"), ConfigError);
}

#ifdef PW_CLI_PATH
namespace {

int run_cli(const std::string& args) {
    const std::string cmd = std::string(PW_CLI_PATH) + " " + args + " > /dev/null 2>&1";
    const int status = std::system(cmd.c_str());
    return WEXITSTATUS(status);
}

} // namespace

TEST(Cli, ExitCodesFollowTheContract) {
    const auto dir = fresh_dir("cli");
    fs::create_directories(dir);
    const auto config_path = dir / "config.txt";
    {
        std::ofstream os(config_path);
        os << config_to_text(tiny_config());
    }
    EXPECT_EQ(run_cli("params --config " + config_path.string()), 0);
    EXPECT_EQ(run_cli("nonsense-verb"), 2);
    EXPECT_EQ(run_cli("params --config /does/not/exist.txt"), 1);

    const auto bad_config = dir / "bad.txt";
    {
        std::ofstream os(bad_config);
        os << "[data]\nn_train = what\n";
    }
    EXPECT_EQ(run_cli("params --config " + bad_config.string()), 2);
    fs::remove_all(dir);
}

TEST(Cli, PipelineVerbProducesArtifacts) {
    const auto dir = fresh_dir("clipipe");
    fs::create_directories(dir);
    const auto config_path = dir / "config.txt";
    {
        std::ofstream os(config_path);
        os << config_to_text(tiny_config());
    }
    EXPECT_EQ(run_cli("pipeline --config " + config_path.string() + " --out " +
                      (dir / "run").string() + " --mode baseline"),
              0);
    EXPECT_TRUE(fs::exists(dir / "run" / "eval_report.csv"));
    const auto report = slurp(dir / "run" / "eval_report.csv");
    EXPECT_NE(report.find(",baseline\n"), std::string::npos);

    // numeric failure: a diverging learning rate must exit with code 3
    HarnessConfig diverge = tiny_config();
    diverge.train.base_lr = 1e18;
    diverge.train.total_steps = 40;
    const auto bad_path = dir / "diverge.txt";
    {
        std::ofstream os(bad_path);
        os << config_to_text(diverge);
    }
    const int code = run_cli("pipeline --config " + bad_path.string() + " --out " +
                             (dir / "run2").string() + " --mode input");
    EXPECT_EQ(code, 3);
    fs::remove_all(dir);
}
#endif
