#include <cstdio>
#include <iostream>
#include <string>
#include <vector>

#include "promptwise/harness.hpp"

namespace {

const char* kUsage = R"(usage: promptwise <verb> [flags]

verbs:
  pretrain      train the full backbone on modality-complete data, freeze it
  train         prompt-train against an existing backbone.pwck in --out
  eval          evaluate an existing model.pwck in --out
  pipeline      pretrain -> freeze -> prompt-train -> evaluate in one go
  sweep-eta     train per (scenario, train eta), evaluate across test etas
  sweep-layers  one run per (start, end) prompt placement
  sweep-length  one run per prompt length plus parameter-matched baselines
  params        print trainable/frozen parameter counts for the config

flags:
  --config PATH   experiment config (defaults apply when omitted)
  --out DIR       artifact directory (default: runs)
  --seed N        overrides [data] seed
  --mode M        overrides [model] mode: baseline | input | attention
  --etas LIST     sweep-eta rates, e.g. 10,30,50,70,90
  --scenarios L   sweep-eta scenarios, e.g. both,text,image
  --pairs LIST    sweep-layers placements, e.g. 0:2,0:5 (default: all)
  --lengths LIST  sweep-length prompt lengths, e.g. 1,2,4,8,16

exit codes: 0 ok, 2 configuration error, 3 numeric failure
)";

std::vector<std::string> split(const std::string& s, char sep) {
    std::vector<std::string> out;
    std::size_t begin = 0;
    while (begin <= s.size()) {
        const auto end = s.find(sep, begin);
        if (end == std::string::npos) {
            out.push_back(s.substr(begin));
            break;
        }
        out.push_back(s.substr(begin, end - begin));
        begin = end + 1;
    }
    return out;
}

std::vector<double> parse_eta_list(const std::string& s) {
    std::vector<double> out;
    for (const auto& piece : split(s, ',')) {
        out.push_back(std::stod(piece));
    }
    return out;
}

std::vector<std::size_t> parse_count_list(const std::string& s) {
    std::vector<std::size_t> out;
    for (const auto& piece : split(s, ',')) {
        out.push_back(std::stoull(piece));
    }
    return out;
}

std::vector<std::pair<std::size_t, std::size_t>> parse_pair_list(const std::string& s) {
    std::vector<std::pair<std::size_t, std::size_t>> out;
    for (const auto& piece : split(s, ',')) {
        const auto colon = piece.find(':');
        if (colon == std::string::npos) {
            throw pw::ConfigError("expected start:end pair, got '" + piece + "'");
        }
        out.emplace_back(std::stoull(piece.substr(0, colon)),
                         std::stoull(piece.substr(colon + 1)));
    }
    return out;
}

std::vector<pw::MissingScenario> parse_scenario_list(const std::string& s) {
    std::vector<pw::MissingScenario> out;
    for (const auto& piece : split(s, ',')) {
        out.push_back(pw::scenario_from_name(piece));
    }
    return out;
}

int run(int argc, char** argv) {
    if (argc < 2) {
        std::cerr << kUsage;
        return 2;
    }
    const std::string verb = argv[1];
    std::string config_path;
    std::string out_dir = "runs";
    std::string seed_override;
    std::string mode_override;
    std::vector<double> etas{10, 30, 50, 70, 90};
    std::vector<pw::MissingScenario> scenarios{pw::MissingScenario::MissingBoth};
    std::vector<std::pair<std::size_t, std::size_t>> pairs;
    std::vector<std::size_t> lengths{1, 2, 4, 8, 16};

    for (int i = 2; i < argc; ++i) {
        const std::string flag = argv[i];
        auto value = [&]() -> std::string {
            if (i + 1 >= argc) {
                throw pw::ConfigError("flag " + flag + " needs a value");
            }
            return argv[++i];
        };
        if (flag == "--config") {
            config_path = value();
        } else if (flag == "--out") {
            out_dir = value();
        } else if (flag == "--seed") {
            seed_override = value();
        } else if (flag == "--mode") {
            mode_override = value();
        } else if (flag == "--etas") {
            etas = parse_eta_list(value());
        } else if (flag == "--scenarios") {
            scenarios = parse_scenario_list(value());
        } else if (flag == "--pairs") {
            pairs = parse_pair_list(value());
        } else if (flag == "--lengths") {
            lengths = parse_count_list(value());
        } else if (flag == "--help" || flag == "-h") {
            std::cout << kUsage;
            return 0;
        } else {
            std::cerr << "unknown flag: " << flag << "\n" << kUsage;
            return 2;
        }
    }

    pw::HarnessConfig cfg =
        config_path.empty() ? pw::HarnessConfig{} : pw::parse_config_file(config_path);
    if (!seed_override.empty()) {
        cfg.seed = std::stoull(seed_override);
    }
    if (!mode_override.empty()) {
        if (mode_override != "baseline" && mode_override != "input" &&
            mode_override != "attention") {
            throw pw::ConfigError("mode must be baseline, input or attention, got " +
                                  mode_override);
        }
        cfg.mode = mode_override;
    }

    if (verb == "pretrain") {
        pw::stage_pretrain(cfg, out_dir);
        std::cout << "backbone checkpoint written to " << out_dir << "/backbone.pwck\n";
    } else if (verb == "train") {
        pw::stage_prompt_train(cfg, out_dir);
        std::cout << "model checkpoint written to " << out_dir << "/model.pwck\n";
    } else if (verb == "eval") {
        const auto eval = pw::stage_evaluate(cfg, out_dir);
        std::printf("%s overall = %.4f\n", pw::metric_name(cfg.metric), eval.overall);
        for (const auto& [c, v] : eval.per_case) {
            std::printf("%s %s = %.4f (n=%zu)\n", pw::metric_name(cfg.metric), pw::case_name(c),
                        v, eval.case_counts.at(c));
        }
    } else if (verb == "pipeline") {
        const auto result = pw::run_pipeline(cfg, out_dir);
        std::printf("%s overall = %.4f (mode %s)\n", pw::metric_name(cfg.metric),
                    result.eval.overall, cfg.mode.c_str());
    } else if (verb == "sweep-eta") {
        pw::sweep_missing_rate(cfg, etas, scenarios, out_dir);
        std::cout << "grid written to " << out_dir << "/eta_grid.csv\n";
    } else if (verb == "sweep-layers") {
        if (pairs.empty()) {
            pairs = pw::all_continuous_pairs(cfg.depth);
        }
        pw::sweep_prompt_layers(cfg, pairs, out_dir);
        std::cout << "grid written to " << out_dir << "/layer_grid.csv\n";
    } else if (verb == "sweep-length") {
        pw::sweep_prompt_length(cfg, lengths, out_dir);
        std::cout << "grid written to " << out_dir << "/length_grid.csv\n";
    } else if (verb == "params") {
        std::mt19937_64 rng(cfg.seed);
        auto backbone = pw::BackboneParams::init(cfg.backbone_config(), cfg.embedder_config(),
                                                 rng);
        auto bank = cfg.mode == "baseline"
                        ? pw::PromptBank::empty()
                        : pw::PromptBank::init(cfg.bank_config(), cfg.dim, cfg.seed);
        const auto counts = pw::count_params(backbone, bank);
        std::printf("trainable = %zu\n", counts.trainable);
        std::printf("frozen    = %zu\n", counts.frozen);
        std::printf("prompt/frozen ratio = %.6f\n", counts.prompt_ratio);
    } else {
        std::cerr << "unknown verb: " << verb << "\n" << kUsage;
        return 2;
    }
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    try {
        return run(argc, argv);
    } catch (const pw::ParseError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const pw::ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const pw::NumericError& e) {
        std::cerr << "numeric failure: " << e.what() << "\n";
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}
