#include "lexigrad/config.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

namespace lexigrad {

namespace {

std::string trim(const std::string& s) {
    const auto a = s.find_first_not_of(" \t\r\n");
    if (a == std::string::npos) return "";
    const auto b = s.find_last_not_of(" \t\r\n");
    return s.substr(a, b - a + 1);
}

std::vector<std::string> split_list(const std::string& s, char sep) {
    std::vector<std::string> out;
    std::string cur;
    std::istringstream is(s);
    while (std::getline(is, cur, sep)) {
        cur = trim(cur);
        if (!cur.empty()) out.push_back(cur);
    }
    return out;
}

std::int64_t parse_int(const std::string& key, const std::string& v) {
    try {
        std::size_t used = 0;
        const std::int64_t x = std::stoll(v, &used);
        if (used != v.size()) throw std::invalid_argument("trailing");
        return x;
    } catch (const std::exception&) {
        throw ConfigError("config key \"" + key + "\": bad integer \"" + v + "\"");
    }
}

std::uint64_t parse_u64(const std::string& key, const std::string& v) {
    try {
        std::size_t used = 0;
        const std::uint64_t x = std::stoull(v, &used);
        if (used != v.size()) throw std::invalid_argument("trailing");
        return x;
    } catch (const std::exception&) {
        throw ConfigError("config key \"" + key + "\": bad integer \"" + v + "\"");
    }
}

double parse_double(const std::string& key, const std::string& v) {
    try {
        std::size_t used = 0;
        const double x = std::stod(v, &used);
        if (used != v.size()) throw std::invalid_argument("trailing");
        return x;
    } catch (const std::exception&) {
        throw ConfigError("config key \"" + key + "\": bad number \"" + v + "\"");
    }
}

bool parse_bool(const std::string& key, const std::string& v) {
    if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
    if (v == "false" || v == "0" || v == "no" || v == "off") return false;
    throw ConfigError("config key \"" + key + "\": bad boolean \"" + v + "\"");
}

void parse_image_shape(const std::string& key, const std::string& v, DataSpec& data) {
    const auto parts = split_list(v, 'x');
    if (parts.size() != 3) throw ConfigError("config key \"" + key + "\": want CxHxW, got \"" + v + "\"");
    data.image_c = parse_int(key, parts[0]);
    data.image_h = parse_int(key, parts[1]);
    data.image_w = parse_int(key, parts[2]);
}

std::string fmt_double(double v) {
    std::ostringstream os;
    os.precision(17);
    os << v;
    return os.str();
}

}  // namespace

void validate_spec(ExperimentSpec& spec) {
    RunConfig& run = spec.run;
    if (run.strategy == Strategy::SgdBaseline) run.population = 1;  // p = 1 by definition
    if (run.population < 1) throw ConfigError("config key \"population\": must be >= 1");
    if (run.generations < 0) throw ConfigError("config key \"generations\": must be >= 0");
    if (run.batch_size < 1) throw ConfigError("config key \"batch_size\": must be >= 1");
    if (run.momentum < 0.0 || run.momentum >= 1.0)
        throw ConfigError("config key \"momentum\": must be in [0, 1)");
    if (run.lr_max <= 0.0) throw ConfigError("config key \"lr_max\": must be positive");
    if (run.lr_min < 0.0 || run.lr_min > run.lr_max)
        throw ConfigError("config key \"lr_min\": must be in [0, lr_max]");
    if (run.weight_decay < 0.0) throw ConfigError("config key \"weight_decay\": must be >= 0");
    if (run.selection_window < 1) throw ConfigError("config key \"selection_window\": must be >= 1");
    if (run.selection_case_cap < 0) throw ConfigError("config key \"selection_case_cap\": must be >= 0");
    if (run.workers < 1) throw ConfigError("config key \"workers\": must be >= 1");
    if (run.mlp_hidden < 1) throw ConfigError("config key \"mlp_hidden\": must be >= 1");
    if (run.augment.crop_padding < 0) throw ConfigError("config key \"crop_padding\": must be >= 0");
    if (run.augment.hflip_prob < 0.0)  // auto: flips suit photos, not digits or synthetic rows
        run.augment.hflip_prob = run.data.source == DataSpec::Source::Cifar10 ? 0.5 : 0.0;
    if (run.augment.hflip_prob > 1.0)
        throw ConfigError("config key \"hflip_prob\": must be in [0, 1]");
    if (spec.replicates < 1) throw ConfigError("config key \"replicates\": must be >= 1");
    if (spec.epochs < 0) throw ConfigError("config key \"epochs\": must be >= 0");
    if (spec.profile_k < 1) throw ConfigError("config key \"profile_k\": must be >= 1");
    if (spec.profile_bins < 1) throw ConfigError("config key \"profile_bins\": must be >= 1");
    for (auto s : spec.sweep_sizes)
        if (s < 1) throw ConfigError("config key \"sweep_sizes\": sizes must be >= 1");
}

Strategy parse_strategy(const std::string& s) {
    if (s == "sgd-baseline") return Strategy::SgdBaseline;
    if (s == "random") return Strategy::Random;
    if (s == "tournament") return Strategy::Tournament;
    if (s == "lexicase") return Strategy::Lexicase;
    throw ConfigError("unknown strategy \"" + s +
                      "\" (want sgd-baseline, random, tournament or lexicase)");
}

MomentumPolicy parse_momentum_policy(const std::string& s) {
    if (s == "none") return MomentumPolicy::NoMomentum;
    if (s == "reset") return MomentumPolicy::ResetEachGeneration;
    if (s == "inherit") return MomentumPolicy::Inherit;
    throw ConfigError("unknown momentum policy \"" + s + "\" (want none, reset or inherit)");
}

SelectionMode parse_selection_mode(const std::string& s) {
    if (s == "modified") return SelectionMode::Modified;
    if (s == "original") return SelectionMode::Original;
    throw ConfigError("unknown selection mode \"" + s + "\" (want modified or original)");
}

DataSpec::Source parse_source(const std::string& s) {
    if (s == "synthetic-blobs") return DataSpec::Source::SyntheticBlobs;
    if (s == "synthetic-moons") return DataSpec::Source::SyntheticMoons;
    if (s == "idx") return DataSpec::Source::Idx;
    if (s == "cifar10") return DataSpec::Source::Cifar10;
    if (s == "csv") return DataSpec::Source::Csv;
    throw ConfigError("unknown dataset \"" + s +
                      "\" (want synthetic-blobs, synthetic-moons, idx, cifar10 or csv)");
}

const char* source_name(DataSpec::Source s) {
    switch (s) {
        case DataSpec::Source::SyntheticBlobs: return "synthetic-blobs";
        case DataSpec::Source::SyntheticMoons: return "synthetic-moons";
        case DataSpec::Source::Idx: return "idx";
        case DataSpec::Source::Cifar10: return "cifar10";
        case DataSpec::Source::Csv: return "csv";
    }
    return "?";
}

std::int64_t ExperimentSpec::resolved_generations(std::int64_t population) const {
    if (epochs > 0) return budget_generations(epochs, population, budget);
    return run.generations;
}

std::vector<std::uint64_t> ExperimentSpec::resolved_seeds() const {
    if (!replicate_seeds.empty()) return replicate_seeds;
    std::vector<std::uint64_t> seeds;
    for (std::int64_t i = 0; i < replicates; ++i) seeds.push_back(run.seed + static_cast<std::uint64_t>(i));
    return seeds;
}

void apply_config_entry(ExperimentSpec& spec, const std::string& key, const std::string& value) {
    RunConfig& run = spec.run;
    DataSpec& data = run.data;

    if (key == "strategy") run.strategy = parse_strategy(value);
    else if (key == "population") run.population = parse_int(key, value);
    else if (key == "generations") run.generations = parse_int(key, value);
    else if (key == "epochs") spec.epochs = parse_int(key, value);
    else if (key == "budget") {
        if (value == "parity") spec.budget = BudgetRule::StepParity;
        else if (value == "plus-one") spec.budget = BudgetRule::PlusOne;
        else throw ConfigError("config key \"budget\": want parity or plus-one, got \"" + value + "\"");
    }
    else if (key == "batch_size") run.batch_size = parse_int(key, value);
    else if (key == "momentum") run.momentum = parse_double(key, value);
    else if (key == "momentum_policy") run.momentum_policy = parse_momentum_policy(value);
    else if (key == "lr_max") run.lr_max = parse_double(key, value);
    else if (key == "lr_min") run.lr_min = parse_double(key, value);
    else if (key == "weight_decay") run.weight_decay = parse_double(key, value);
    else if (key == "selection_mode") run.selection_mode = parse_selection_mode(value);
    else if (key == "selection_case_cap") run.selection_case_cap = parse_int(key, value);
    else if (key == "selection_window") run.selection_window = parse_int(key, value);
    else if (key == "trace_cap") run.trace_cap = static_cast<std::size_t>(parse_int(key, value));
    else if (key == "seed") run.seed = parse_u64(key, value);
    else if (key == "workers") run.workers = static_cast<int>(parse_int(key, value));
    else if (key == "model") {
        if (value != "mlp-small" && value != "conv-small")
            throw ConfigError("config key \"model\": want mlp-small or conv-small, got \"" + value + "\"");
        run.model = value;
    }
    else if (key == "mlp_hidden") run.mlp_hidden = parse_int(key, value);
    else if (key == "augment") run.augment.enabled = parse_bool(key, value);
    else if (key == "crop_padding") run.augment.crop_padding = parse_int(key, value);
    else if (key == "hflip_prob") run.augment.hflip_prob = parse_double(key, value);
    else if (key == "dataset") data.source = parse_source(value);
    else if (key == "data_train_n") data.train_n = parse_int(key, value);
    else if (key == "data_test_n") data.test_n = parse_int(key, value);
    else if (key == "data_classes") data.classes = parse_int(key, value);
    else if (key == "data_dims") data.dims = parse_int(key, value);
    else if (key == "data_noise") data.noise = parse_double(key, value);
    else if (key == "data_seed") data.seed = parse_u64(key, value);
    else if (key == "data_image") parse_image_shape(key, value, data);
    else if (key == "data_train_images") data.train_images = value;
    else if (key == "data_train_labels") data.train_labels = value;
    else if (key == "data_test_images") data.test_images = value;
    else if (key == "data_test_labels") data.test_labels = value;
    else if (key == "data_train_files") data.train_files = split_list(value, ';');
    else if (key == "data_test_file") data.test_file = value;
    else if (key == "data_train_csv") data.train_csv = value;
    else if (key == "data_test_csv") data.test_csv = value;
    else if (key == "out") spec.out_dir = value;
    else if (key == "replicates") spec.replicates = parse_int(key, value);
    else if (key == "replicate_seeds") {
        spec.replicate_seeds.clear();
        for (const auto& tok : split_list(value, ',')) spec.replicate_seeds.push_back(parse_u64(key, tok));
    }
    else if (key == "strategies") {
        spec.compare_strategies.clear();
        for (const auto& tok : split_list(value, ',')) spec.compare_strategies.push_back(parse_strategy(tok));
        if (spec.compare_strategies.empty()) throw ConfigError("config key \"strategies\": empty list");
    }
    else if (key == "sweep_sizes") {
        spec.sweep_sizes.clear();
        for (const auto& tok : split_list(value, ',')) spec.sweep_sizes.push_back(parse_int(key, tok));
        if (spec.sweep_sizes.empty()) throw ConfigError("config key \"sweep_sizes\": empty list");
    }
    else if (key == "profile_k") spec.profile_k = parse_int(key, value);
    else if (key == "profile_bins") spec.profile_bins = static_cast<int>(parse_int(key, value));
    else throw ConfigError("unknown config key \"" + key + "\"");
}

ExperimentSpec parse_config_text(const std::string& text, const std::string& name) {
    ExperimentSpec spec;
    std::istringstream in(text);
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const std::string t = trim(line);
        if (t.empty() || t[0] == '#') continue;
        const auto eq = t.find('=');
        if (eq == std::string::npos)
            throw ConfigError(name + ":" + std::to_string(lineno) + ": expected \"key = value\", got \"" +
                              t + "\"");
        const std::string key = trim(t.substr(0, eq));
        const std::string value = trim(t.substr(eq + 1));
        if (key.empty()) throw ConfigError(name + ":" + std::to_string(lineno) + ": empty key");
        try {
            apply_config_entry(spec, key, value);
        } catch (const ConfigError& e) {
            throw ConfigError(name + ":" + std::to_string(lineno) + ": " + e.what());
        }
    }
    validate_spec(spec);
    return spec;
}

ExperimentSpec parse_config_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_config_text(ss.str(), path);
}

std::string render_config(const ExperimentSpec& spec) {
    const RunConfig& run = spec.run;
    const DataSpec& data = run.data;
    std::ostringstream os;
    os << "strategy = " << strategy_name(run.strategy) << "\n";
    os << "population = " << run.population << "\n";
    os << "generations = " << run.generations << "\n";
    os << "epochs = " << spec.epochs << "\n";
    os << "budget = " << (spec.budget == BudgetRule::StepParity ? "parity" : "plus-one") << "\n";
    os << "batch_size = " << run.batch_size << "\n";
    os << "momentum = " << fmt_double(run.momentum) << "\n";
    os << "momentum_policy = " << momentum_policy_name(run.momentum_policy) << "\n";
    os << "lr_max = " << fmt_double(run.lr_max) << "\n";
    os << "lr_min = " << fmt_double(run.lr_min) << "\n";
    os << "weight_decay = " << fmt_double(run.weight_decay) << "\n";
    os << "selection_mode = " << selection_mode_name(run.selection_mode) << "\n";
    os << "selection_case_cap = " << run.selection_case_cap << "\n";
    os << "selection_window = " << run.selection_window << "\n";
    os << "trace_cap = " << run.trace_cap << "\n";
    os << "seed = " << run.seed << "\n";
    os << "workers = " << run.workers << "\n";
    os << "model = " << run.model << "\n";
    os << "mlp_hidden = " << run.mlp_hidden << "\n";
    os << "augment = " << (run.augment.enabled ? "true" : "false") << "\n";
    os << "crop_padding = " << run.augment.crop_padding << "\n";
    os << "hflip_prob = " << fmt_double(run.augment.hflip_prob) << "\n";
    os << "dataset = " << source_name(data.source) << "\n";
    os << "data_train_n = " << data.train_n << "\n";
    os << "data_test_n = " << data.test_n << "\n";
    os << "data_classes = " << data.classes << "\n";
    os << "data_dims = " << data.dims << "\n";
    os << "data_noise = " << fmt_double(data.noise) << "\n";
    os << "data_seed = " << data.seed << "\n";
    if (data.image_c > 0)
        os << "data_image = " << data.image_c << "x" << data.image_h << "x" << data.image_w << "\n";
    if (!data.train_images.empty()) os << "data_train_images = " << data.train_images << "\n";
    if (!data.train_labels.empty()) os << "data_train_labels = " << data.train_labels << "\n";
    if (!data.test_images.empty()) os << "data_test_images = " << data.test_images << "\n";
    if (!data.test_labels.empty()) os << "data_test_labels = " << data.test_labels << "\n";
    if (!data.train_files.empty()) {
        os << "data_train_files = ";
        for (std::size_t i = 0; i < data.train_files.size(); ++i)
            os << (i ? ";" : "") << data.train_files[i];
        os << "\n";
    }
    if (!data.test_file.empty()) os << "data_test_file = " << data.test_file << "\n";
    if (!data.train_csv.empty()) os << "data_train_csv = " << data.train_csv << "\n";
    if (!data.test_csv.empty()) os << "data_test_csv = " << data.test_csv << "\n";
    os << "out = " << spec.out_dir << "\n";
    os << "replicates = " << spec.replicates << "\n";
    if (!spec.replicate_seeds.empty()) {
        os << "replicate_seeds = ";
        for (std::size_t i = 0; i < spec.replicate_seeds.size(); ++i)
            os << (i ? "," : "") << spec.replicate_seeds[i];
        os << "\n";
    }
    os << "strategies = ";
    for (std::size_t i = 0; i < spec.compare_strategies.size(); ++i)
        os << (i ? "," : "") << strategy_name(spec.compare_strategies[i]);
    os << "\n";
    os << "sweep_sizes = ";
    for (std::size_t i = 0; i < spec.sweep_sizes.size(); ++i) os << (i ? "," : "") << spec.sweep_sizes[i];
    os << "\n";
    os << "profile_k = " << spec.profile_k << "\n";
    os << "profile_bins = " << spec.profile_bins << "\n";
    return os.str();
}

}  // namespace lexigrad
