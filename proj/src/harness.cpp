#include "promptwise/harness.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "promptwise/checkpoint.hpp"

namespace pw {

namespace fs = std::filesystem;

namespace stream {
constexpr std::uint64_t kTrainData = 1;
constexpr std::uint64_t kTestData = 2;
constexpr std::uint64_t kBackboneInit = 3;
constexpr std::uint64_t kTrainPartition = 4;
constexpr std::uint64_t kTestPartition = 5;
constexpr std::uint64_t kTrainShuffle = 6;
constexpr std::uint64_t kBankInit = 7;
constexpr std::uint64_t kPretrainShuffle = 8;
} // namespace stream

namespace {

std::string fmt_double(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

std::string fmt_eta(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%g", v);
    return buf;
}

std::string trim(const std::string& s) {
    std::size_t b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) {
        return "";
    }
    std::size_t e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

std::size_t parse_count(const std::string& v, std::size_t line) {
    try {
        std::size_t pos = 0;
        const auto out = std::stoull(v, &pos);
        if (pos != v.size()) {
            throw std::invalid_argument(v);
        }
        return out;
    } catch (const std::exception&) {
        throw ParseError("expected a count, got '" + v + "'", line);
    }
}

double parse_real(const std::string& v, std::size_t line) {
    try {
        std::size_t pos = 0;
        const double out = std::stod(v, &pos);
        if (pos != v.size()) {
            throw std::invalid_argument(v);
        }
        return out;
    } catch (const std::exception&) {
        throw ParseError("expected a real number, got '" + v + "'", line);
    }
}

bool parse_bool(const std::string& v, std::size_t line) {
    if (v == "true" || v == "1") {
        return true;
    }
    if (v == "false" || v == "0") {
        return false;
    }
    throw ParseError("expected true or false, got '" + v + "'", line);
}

} // namespace

TrainConfig HarnessConfig::default_pretrain() {
    TrainConfig c;
    c.total_steps = 2000;
    c.batch_size = 16;
    c.base_lr = 1.5e-3;
    c.weight_decay = 1e-2;
    c.warmup_fraction = 0.1;
    return c;
}

TrainConfig HarnessConfig::default_train() {
    TrainConfig c;
    c.total_steps = 1000;
    return c;
}

EmbedderConfig HarnessConfig::embedder_config() const {
    EmbedderConfig e;
    e.vocab_size = vocab_size;
    e.dim = dim;
    e.max_text_len = synth.max_text_len;
    e.image_height = synth.image_height;
    e.image_width = synth.image_width;
    e.channels = synth.channels;
    e.patch_size = synth.patch_size;
    return e;
}

BackboneConfig HarnessConfig::backbone_config() const {
    BackboneConfig b;
    b.depth = depth;
    b.dim = dim;
    b.classes = synth.classes;
    b.head_hidden = head_hidden;
    return b;
}

PromptBankConfig HarnessConfig::bank_config() const {
    PromptBankConfig p;
    p.prompt_len = prompt_len;
    p.start_layer = prompt_start;
    p.end_layer = prompt_end;
    p.mode = mode == "attention" ? PromptMode::AttentionLevel : PromptMode::InputLevel;
    return p;
}

HarnessConfig parse_config_text(const std::string& text) {
    HarnessConfig cfg;
    std::istringstream is(text);
    std::string raw;
    std::string section;
    std::size_t line_no = 0;
    while (std::getline(is, raw)) {
        ++line_no;
        const std::string line = trim(raw);
        if (line.empty() || line[0] == '#') {
            continue;
        }
        if (line.front() == '[') {
            if (line.back() != ']') {
                throw ParseError("unterminated section header", line_no);
            }
            section = line.substr(1, line.size() - 2);
            if (section != "data" && section != "model" && section != "pretrain" &&
                section != "train" && section != "missing" && section != "eval") {
                throw ParseError("unknown section [" + section + "]", line_no);
            }
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string::npos) {
            throw ParseError("expected key = value", line_no);
        }
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        if (section.empty()) {
            throw ParseError("key '" + key + "' outside any section", line_no);
        }

        auto unknown = [&]() -> ParseError {
            return ParseError("unknown key '" + key + "' in section [" + section + "]", line_no);
        };
        if (section == "data") {
            if (key == "n_train") {
                cfg.n_train = parse_count(value, line_no);
            } else if (key == "n_test") {
                cfg.n_test = parse_count(value, line_no);
            } else if (key == "classes") {
                cfg.synth.classes = parse_count(value, line_no);
            } else if (key == "vocab_size") {
                cfg.vocab_size = parse_count(value, line_no);
            } else if (key == "image_size") {
                cfg.synth.image_height = parse_count(value, line_no);
                cfg.synth.image_width = cfg.synth.image_height;
            } else if (key == "patch_size") {
                cfg.synth.patch_size = parse_count(value, line_no);
            } else if (key == "channels") {
                cfg.synth.channels = parse_count(value, line_no);
            } else if (key == "max_text_len") {
                cfg.synth.max_text_len = parse_count(value, line_no);
            } else if (key == "noise_words") {
                cfg.synth.noise_words = parse_count(value, line_no);
            } else if (key == "text_words") {
                cfg.synth.text_words = parse_count(value, line_no);
            } else if (key == "keyword_copies") {
                cfg.synth.keyword_copies = parse_count(value, line_no);
            } else if (key == "signal_drop_prob") {
                cfg.synth.signal_drop_prob = parse_real(value, line_no);
            } else if (key == "pixel_noise") {
                cfg.synth.pixel_noise = parse_real(value, line_no);
            } else if (key == "pixel_scale") {
                cfg.synth.pixel_scale = parse_real(value, line_no);
            } else if (key == "hint_reliability") {
                cfg.synth.hint_reliability = parse_real(value, line_no);
            } else if (key == "seed") {
                cfg.seed = parse_count(value, line_no);
            } else {
                throw unknown();
            }
        } else if (section == "model") {
            if (key == "depth") {
                cfg.depth = parse_count(value, line_no);
            } else if (key == "dim") {
                cfg.dim = parse_count(value, line_no);
            } else if (key == "mode") {
                if (value != "baseline" && value != "input" && value != "attention") {
                    throw ParseError("mode must be baseline, input or attention", line_no);
                }
                cfg.mode = value;
            } else if (key == "prompt_len") {
                cfg.prompt_len = parse_count(value, line_no);
            } else if (key == "prompt_start") {
                cfg.prompt_start = parse_count(value, line_no);
            } else if (key == "prompt_end") {
                cfg.prompt_end = parse_count(value, line_no);
            } else if (key == "head_hidden") {
                cfg.head_hidden = parse_count(value, line_no);
            } else {
                throw unknown();
            }
        } else if (section == "pretrain" || section == "train") {
            TrainConfig& t = section == "pretrain" ? cfg.pretrain : cfg.train;
            if (key == "steps") {
                t.total_steps = parse_count(value, line_no);
            } else if (key == "batch_size") {
                t.batch_size = parse_count(value, line_no);
            } else if (key == "base_lr") {
                t.base_lr = parse_real(value, line_no);
            } else if (key == "weight_decay") {
                t.weight_decay = parse_real(value, line_no);
            } else if (key == "warmup_fraction") {
                t.warmup_fraction = parse_real(value, line_no);
            } else if (key == "loss" && section == "train") {
                try {
                    t.loss_kind = loss_from_name(value);
                } catch (const ConfigError& e) {
                    throw ParseError(e.what(), line_no);
                }
            } else if (key == "resample_per_epoch" && section == "train") {
                t.resample_per_epoch = parse_bool(value, line_no);
            } else {
                throw unknown();
            }
        } else if (section == "missing") {
            if (key == "scenario") {
                try {
                    cfg.scenario = scenario_from_name(value);
                } catch (const ConfigError& e) {
                    throw ParseError(e.what(), line_no);
                }
            } else if (key == "test_scenario") {
                try {
                    cfg.test_scenario = scenario_from_name(value);
                } catch (const ConfigError& e) {
                    throw ParseError(e.what(), line_no);
                }
            } else if (key == "train_eta") {
                cfg.train_eta = parse_real(value, line_no);
            } else if (key == "test_eta") {
                cfg.test_eta = parse_real(value, line_no);
            } else {
                throw unknown();
            }
        } else {  // eval
            if (key == "metric") {
                try {
                    cfg.metric = metric_from_name(value);
                } catch (const ConfigError& e) {
                    throw ParseError(e.what(), line_no);
                }
            } else {
                throw unknown();
            }
        }
    }
    return cfg;
}

HarnessConfig parse_config_file(const std::string& path) {
    std::ifstream is(path);
    if (!is) {
        throw DependencyError("cannot open config file: " + path);
    }
    std::stringstream ss;
    ss << is.rdbuf();
    return parse_config_text(ss.str());
}

std::string config_to_text(const HarnessConfig& c) {
    std::ostringstream os;
    os << "[data]\n";
    os << "n_train = " << c.n_train << "\n";
    os << "n_test = " << c.n_test << "\n";
    os << "classes = " << c.synth.classes << "\n";
    os << "vocab_size = " << c.vocab_size << "\n";
    os << "image_size = " << c.synth.image_height << "\n";
    os << "patch_size = " << c.synth.patch_size << "\n";
    os << "channels = " << c.synth.channels << "\n";
    os << "max_text_len = " << c.synth.max_text_len << "\n";
    os << "noise_words = " << c.synth.noise_words << "\n";
    os << "text_words = " << c.synth.text_words << "\n";
    os << "keyword_copies = " << c.synth.keyword_copies << "\n";
    os << "signal_drop_prob = " << fmt_double(c.synth.signal_drop_prob) << "\n";
    os << "pixel_noise = " << fmt_double(c.synth.pixel_noise) << "\n";
    os << "pixel_scale = " << fmt_double(c.synth.pixel_scale) << "\n";
    os << "hint_reliability = " << fmt_double(c.synth.hint_reliability) << "\n";
    os << "seed = " << c.seed << "\n";
    os << "\n[model]\n";
    os << "depth = " << c.depth << "\n";
    os << "dim = " << c.dim << "\n";
    os << "mode = " << c.mode << "\n";
    os << "prompt_len = " << c.prompt_len << "\n";
    os << "prompt_start = " << c.prompt_start << "\n";
    os << "prompt_end = " << c.prompt_end << "\n";
    os << "head_hidden = " << c.head_hidden << "\n";
    os << "\n[pretrain]\n";
    os << "steps = " << c.pretrain.total_steps << "\n";
    os << "batch_size = " << c.pretrain.batch_size << "\n";
    os << "base_lr = " << fmt_double(c.pretrain.base_lr) << "\n";
    os << "weight_decay = " << fmt_double(c.pretrain.weight_decay) << "\n";
    os << "warmup_fraction = " << fmt_double(c.pretrain.warmup_fraction) << "\n";
    os << "\n[train]\n";
    os << "steps = " << c.train.total_steps << "\n";
    os << "batch_size = " << c.train.batch_size << "\n";
    os << "base_lr = " << fmt_double(c.train.base_lr) << "\n";
    os << "weight_decay = " << fmt_double(c.train.weight_decay) << "\n";
    os << "warmup_fraction = " << fmt_double(c.train.warmup_fraction) << "\n";
    os << "loss = " << loss_name(c.train.loss_kind) << "\n";
    os << "resample_per_epoch = " << (c.train.resample_per_epoch ? "true" : "false") << "\n";
    os << "\n[missing]\n";
    os << "scenario = " << scenario_name(c.scenario) << "\n";
    if (c.test_scenario) {
        os << "test_scenario = " << scenario_name(*c.test_scenario) << "\n";
    }
    os << "train_eta = " << fmt_double(c.train_eta) << "\n";
    os << "test_eta = " << fmt_double(c.test_eta) << "\n";
    os << "\n[eval]\n";
    os << "metric = " << metric_name(c.metric) << "\n";
    return os.str();
}

std::string config_hash_hex(const HarnessConfig& config) {
    const std::string text = config_to_text(config);
    std::uint64_t h = 1469598103934665603ull;
    for (unsigned char ch : text) {
        h ^= ch;
        h *= 1099511628211ull;
    }
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

std::vector<MultimodalSample> make_missing_set(const std::vector<MultimodalSample>& complete,
                                               double eta, MissingScenario scenario,
                                               std::uint64_t seed) {
    const auto cases = partition(complete.size(), MissingSpec{eta, scenario, seed});
    std::vector<MultimodalSample> out;
    out.reserve(complete.size());
    for (std::size_t i = 0; i < complete.size(); ++i) {
        out.push_back(apply_case(complete[i], cases[i]));
    }
    return out;
}

namespace {

void write_manifest(const HarnessConfig& cfg, const fs::path& out_dir) {
    std::ofstream os(out_dir / "manifest.txt");
    if (!os) {
        throw Error("cannot write manifest in " + out_dir.string());
    }
    os << "# promptwise run manifest; re-runnable as a config file\n";
    os << "# config_hash = " << config_hash_hex(cfg) << "\n";
    os << config_to_text(cfg);
}

void write_eval_report(const fs::path& path, const HarnessConfig& cfg, const EvalResult& eval,
                       double test_eta) {
    std::ofstream os(path);
    if (!os) {
        throw Error("cannot write eval report: " + path.string());
    }
    os << "scenario,train_eta,test_eta,case,metric,value,mode\n";
    auto row = [&](const std::string& case_label, double value) {
        os << scenario_name(cfg.eval_scenario()) << ',' << fmt_eta(cfg.train_eta) << ','
           << fmt_eta(test_eta) << ',' << case_label << ',' << metric_name(cfg.metric) << ','
           << fmt_double(value) << ',' << cfg.mode << '\n';
    };
    row("overall", eval.overall);
    for (const auto& [c, value] : eval.per_case) {
        row(case_name(c), value);
    }
}

/// Strict on backbone/* names, lenient on head/* (a resized head keeps its
/// fresh initialization).
void restore_pretrained(const NamedTensors& loaded, BackboneParams& backbone) {
    NamedTensors strict;
    for (const auto& entry : backbone.named_tensors()) {
        if (entry.first.rfind("backbone/", 0) == 0) {
            strict.push_back(entry);
        }
    }
    restore_into(loaded, strict);
    for (const auto& [name, dst] : backbone.named_tensors()) {
        if (name.rfind("head/", 0) != 0) {
            continue;
        }
        for (const auto& [lname, src] : loaded) {
            if (lname == name && src->rows == dst->rows && src->cols == dst->cols) {
                dst->data = src->data;
            }
        }
    }
}

struct DataBundle {
    std::shared_ptr<const Vocab> vocab;
    std::vector<MultimodalSample> train_set;
    std::vector<MultimodalSample> test_set;
};

DataBundle build_data(const HarnessConfig& cfg) {
    DataBundle d;
    d.vocab = std::make_shared<const Vocab>(make_synthetic_vocab(cfg.synth, cfg.vocab_size));
    d.train_set = gen_synthetic(cfg.n_train, cfg.synth, derive_seed(cfg.seed, stream::kTrainData));
    d.test_set = gen_synthetic(cfg.n_test, cfg.synth, derive_seed(cfg.seed, stream::kTestData));
    return d;
}

BackboneParams init_backbone(const HarnessConfig& cfg) {
    std::mt19937_64 rng(derive_seed(cfg.seed, stream::kBackboneInit));
    return BackboneParams::init(cfg.backbone_config(), cfg.embedder_config(), rng);
}

PromptBank init_bank(const HarnessConfig& cfg) {
    if (cfg.mode == "baseline") {
        return PromptBank::empty();
    }
    return PromptBank::init(cfg.bank_config(), cfg.dim, derive_seed(cfg.seed, stream::kBankInit));
}

TrainResult do_pretrain(const HarnessConfig& cfg, BackboneParams& backbone,
                        const DataBundle& data) {
    backbone.set_backbone_trainable(true);
    TrainConfig tc = cfg.pretrain;
    tc.loss_kind = cfg.train.loss_kind;
    tc.seed = derive_seed(cfg.seed, stream::kPretrainShuffle);
    MissingSpec complete_spec{0.0, cfg.scenario, derive_seed(cfg.seed, stream::kTrainPartition)};
    auto result = train_loop(data.train_set, complete_spec, tc, backbone, PromptBank::empty(),
                             *data.vocab);
    backbone.freeze_backbone();
    return result;
}

TrainResult do_prompt_train(const HarnessConfig& cfg, BackboneParams& backbone,
                            const PromptBank& bank, const DataBundle& data) {
    TrainConfig tc = cfg.train;
    tc.seed = derive_seed(cfg.seed, stream::kTrainShuffle);
    MissingSpec spec{cfg.train_eta, cfg.scenario, derive_seed(cfg.seed, stream::kTrainPartition)};
    return train_loop(data.train_set, spec, tc, backbone, bank, *data.vocab);
}

EvalResult do_eval(const HarnessConfig& cfg, const BackboneParams& backbone,
                   const PromptBank& bank, const Vocab& vocab,
                   const std::vector<MultimodalSample>& test_complete, double test_eta) {
    const auto test_set = make_missing_set(test_complete, test_eta, cfg.eval_scenario(),
                                           derive_seed(cfg.seed, stream::kTestPartition));
    return evaluate(backbone, bank, vocab, test_set, cfg.metric);
}

} // namespace

PipelineResult run_pipeline(const HarnessConfig& cfg, const std::string& out_dir,
                            const std::string& reuse_backbone) {
    const fs::path out(out_dir);
    fs::create_directories(out);
    write_manifest(cfg, out);

    DataBundle data = build_data(cfg);
    data.vocab->save((out / "vocab.txt").string());

    BackboneParams backbone = init_backbone(cfg);
    if (reuse_backbone.empty()) {
        const auto pretrain_result = do_pretrain(cfg, backbone, data);
        save_loss_history((out / "pretrain_loss.csv").string(), pretrain_result);
        save_checkpoint((out / "backbone.pwck").string(), backbone.named_tensors());
    } else {
        restore_pretrained(load_checkpoint(reuse_backbone), backbone);
        backbone.freeze_backbone();
    }

    PromptBank bank = init_bank(cfg);
    bank.validate_for_depth(cfg.depth);
    auto history = do_prompt_train(cfg, backbone, bank, data);
    save_loss_history((out / "train_loss.csv").string(), history);

    NamedTensors model = backbone.named_tensors();
    for (const auto& entry : bank.named_tensors()) {
        model.push_back(entry);
    }
    save_checkpoint((out / "model.pwck").string(), model);

    PipelineResult result{
        do_eval(cfg, backbone, bank, *data.vocab, data.test_set, cfg.test_eta),
        count_params(backbone, bank),
        std::move(history),
        std::move(backbone),
        std::move(bank),
        data.vocab,
        std::move(data.test_set),
    };
    write_eval_report(out / "eval_report.csv", cfg, result.eval, cfg.test_eta);
    return result;
}

void stage_pretrain(const HarnessConfig& cfg, const std::string& out_dir) {
    const fs::path out(out_dir);
    fs::create_directories(out);
    write_manifest(cfg, out);
    DataBundle data = build_data(cfg);
    data.vocab->save((out / "vocab.txt").string());
    BackboneParams backbone = init_backbone(cfg);
    const auto result = do_pretrain(cfg, backbone, data);
    save_loss_history((out / "pretrain_loss.csv").string(), result);
    save_checkpoint((out / "backbone.pwck").string(), backbone.named_tensors());
}

void stage_prompt_train(const HarnessConfig& cfg, const std::string& out_dir) {
    const fs::path out(out_dir);
    fs::create_directories(out);
    write_manifest(cfg, out);
    DataBundle data = build_data(cfg);
    BackboneParams backbone = init_backbone(cfg);
    restore_pretrained(load_checkpoint((out / "backbone.pwck").string()), backbone);
    backbone.freeze_backbone();
    PromptBank bank = init_bank(cfg);
    bank.validate_for_depth(cfg.depth);
    const auto history = do_prompt_train(cfg, backbone, bank, data);
    save_loss_history((out / "train_loss.csv").string(), history);
    NamedTensors model = backbone.named_tensors();
    for (const auto& entry : bank.named_tensors()) {
        model.push_back(entry);
    }
    save_checkpoint((out / "model.pwck").string(), model);
}

EvalResult stage_evaluate(const HarnessConfig& cfg, const std::string& out_dir) {
    const fs::path out(out_dir);
    DataBundle data = build_data(cfg);
    BackboneParams backbone = init_backbone(cfg);
    PromptBank bank = init_bank(cfg);
    bank.validate_for_depth(cfg.depth);
    const auto loaded = load_checkpoint((out / "model.pwck").string());
    NamedTensors model = backbone.named_tensors();
    for (const auto& entry : bank.named_tensors()) {
        model.push_back(entry);
    }
    restore_into(loaded, model);
    backbone.freeze_backbone();
    const auto eval =
        do_eval(cfg, backbone, bank, *data.vocab, data.test_set, cfg.test_eta);
    write_eval_report(out / "eval_report.csv", cfg, eval, cfg.test_eta);
    return eval;
}

namespace {

std::string pretrain_shared_backbone(const HarnessConfig& base, const fs::path& out) {
    HarnessConfig cfg = base;
    cfg.head_hidden = 0;
    fs::create_directories(out / "shared");
    DataBundle data = build_data(cfg);
    BackboneParams backbone = init_backbone(cfg);
    const auto result = do_pretrain(cfg, backbone, data);
    const std::string path = (out / "shared" / "backbone.pwck").string();
    save_loss_history((out / "shared" / "pretrain_loss.csv").string(), result);
    save_checkpoint(path, backbone.named_tensors());
    return path;
}

void write_plot_script(const fs::path& path, const std::string& csv, int xcol, int ycol,
                       const std::string& xlabel, const std::string& ylabel) {
    std::ofstream os(path);
    os << "set datafile separator ','\n";
    os << "set key autotitle columnhead\n";
    os << "set xlabel '" << xlabel << "'\n";
    os << "set ylabel '" << ylabel << "'\n";
    os << "plot '" << csv << "' using " << xcol << ":" << ycol << " with linespoints\n";
}

} // namespace

void sweep_missing_rate(const HarnessConfig& base, const std::vector<double>& etas,
                        const std::vector<MissingScenario>& scenarios,
                        const std::string& out_dir) {
    if (etas.empty() || scenarios.empty()) {
        throw ArgumentError("sweep_missing_rate: need at least one eta and one scenario");
    }
    for (double eta : etas) {
        if (eta < 0.0 || eta > 100.0) {
            throw ConfigError("sweep_missing_rate: eta " + std::to_string(eta) +
                              " outside [0, 100]");
        }
    }
    const fs::path out(out_dir);
    fs::create_directories(out);
    const std::string backbone_path = pretrain_shared_backbone(base, out);

    std::ofstream grid(out / "eta_grid.csv");
    grid << "mode,scenario,train_eta,test_eta,metric,value,seed,config_hash\n";
    for (MissingScenario scenario : scenarios) {
        for (double train_eta : etas) {
            HarnessConfig cfg = base;
            cfg.scenario = scenario;
            cfg.train_eta = train_eta;
            cfg.test_eta = train_eta;
            const std::string cell =
                (out / ("cell_" + std::string(scenario_name(scenario)) + "_tr" +
                        fmt_eta(train_eta)))
                    .string();
            auto result = run_pipeline(cfg, cell, backbone_path);
            const std::string hash = config_hash_hex(cfg);
            for (double test_eta : etas) {
                const auto eval = do_eval(cfg, result.backbone, result.bank, *result.vocab,
                                          result.test_set_complete, test_eta);
                grid << cfg.mode << ',' << scenario_name(scenario) << ',' << fmt_eta(train_eta)
                     << ',' << fmt_eta(test_eta) << ',' << metric_name(cfg.metric) << ','
                     << fmt_double(eval.overall) << ',' << cfg.seed << ',' << hash << '\n';
            }
        }
    }
    write_plot_script(out / "plot_eta.gp", "eta_grid.csv", 4, 6, "test missing rate (%)",
                      metric_name(base.metric));
}

void sweep_prompt_layers(const HarnessConfig& base,
                         const std::vector<std::pair<std::size_t, std::size_t>>& pairs,
                         const std::string& out_dir) {
    if (pairs.empty()) {
        throw ArgumentError("sweep_prompt_layers: need at least one (start, end) pair");
    }
    for (const auto& [s, e] : pairs) {
        if (s > e || e >= base.depth) {
            throw RangeError("sweep_prompt_layers: pair (" + std::to_string(s) + ", " +
                             std::to_string(e) + ") invalid for depth " +
                             std::to_string(base.depth));
        }
    }
    const fs::path out(out_dir);
    fs::create_directories(out);
    const std::string backbone_path = pretrain_shared_backbone(base, out);

    std::ofstream grid(out / "layer_grid.csv");
    grid << "mode,start_layer,end_layer,metric,value,seed,config_hash\n";
    for (const auto& [s, e] : pairs) {
        HarnessConfig cfg = base;
        cfg.prompt_start = s;
        cfg.prompt_end = e;
        const std::string cell =
            (out / ("cell_s" + std::to_string(s) + "_e" + std::to_string(e))).string();
        auto result = run_pipeline(cfg, cell, backbone_path);
        grid << cfg.mode << ',' << s << ',' << e << ',' << metric_name(cfg.metric) << ','
             << fmt_double(result.eval.overall) << ',' << cfg.seed << ','
             << config_hash_hex(cfg) << '\n';
    }
    write_plot_script(out / "plot_layers.gp", "layer_grid.csv", 3, 5, "end layer",
                      metric_name(base.metric));
}

void sweep_prompt_length(const HarnessConfig& base, const std::vector<std::size_t>& lengths,
                         const std::string& out_dir) {
    if (lengths.empty()) {
        throw ArgumentError("sweep_prompt_length: need at least one length");
    }
    if (base.mode == "baseline") {
        throw ConfigError("sweep_prompt_length: base mode must be a prompted mode");
    }
    for (std::size_t len : lengths) {
        if (len < 1) {
            throw ConfigError("sweep_prompt_length: lengths must be at least 1");
        }
        if (base.mode == "attention" && len % 2 != 0) {
            throw ConfigError("sweep_prompt_length: attention-level length " +
                              std::to_string(len) + " must be even");
        }
    }
    const fs::path out(out_dir);
    fs::create_directories(out);
    const std::string backbone_path = pretrain_shared_backbone(base, out);

    std::ofstream grid(out / "length_grid.csv");
    grid << "mode,prompt_len,param_ratio,metric,value,seed,config_hash\n";
    const std::size_t cases = kAllCases.size();
    const std::size_t layers = base.prompt_end - base.prompt_start + 1;
    const std::size_t classes = base.synth.classes;
    for (std::size_t len : lengths) {
        HarnessConfig cfg = base;
        cfg.prompt_len = len;
        const std::string cell = (out / ("cell_len" + std::to_string(len))).string();
        auto result = run_pipeline(cfg, cell, backbone_path);
        grid << cfg.mode << ',' << len << ',' << fmt_double(result.counts.prompt_ratio) << ','
             << metric_name(cfg.metric) << ',' << fmt_double(result.eval.overall) << ','
             << cfg.seed << ',' << config_hash_hex(cfg) << '\n';

        // Control: plain baseline with a classifier hidden layer holding as
        // many extra parameters as the prompts.
        const std::size_t prompt_params = cases * layers * len * base.dim;
        const double h_real =
            static_cast<double>(prompt_params + base.dim * classes) /
            static_cast<double>(base.dim + 1 + classes);
        const std::size_t hidden = std::max<std::size_t>(1, std::llround(h_real));
        HarnessConfig control = base;
        control.mode = "baseline";
        control.head_hidden = hidden;
        const std::string control_cell =
            (out / ("cell_len" + std::to_string(len) + "_matched")).string();
        auto control_result = run_pipeline(control, control_cell, backbone_path);
        const std::size_t extra = hidden * (base.dim + 1 + classes) - base.dim * classes;
        const double control_ratio = control_result.counts.frozen == 0
                                         ? 0.0
                                         : static_cast<double>(extra) /
                                               static_cast<double>(control_result.counts.frozen);
        grid << "baseline_matched," << len << ',' << fmt_double(control_ratio) << ','
             << metric_name(control.metric) << ',' << fmt_double(control_result.eval.overall)
             << ',' << control.seed << ',' << config_hash_hex(control) << '\n';
    }
    write_plot_script(out / "plot_length.gp", "length_grid.csv", 2, 5, "prompt length",
                      metric_name(base.metric));
}

std::vector<std::pair<std::size_t, std::size_t>> all_continuous_pairs(std::size_t depth) {
    std::vector<std::pair<std::size_t, std::size_t>> out;
    for (std::size_t s = 0; s < depth; ++s) {
        for (std::size_t e = s; e < depth; ++e) {
            out.emplace_back(s, e);
        }
    }
    return out;
}

} // namespace pw
