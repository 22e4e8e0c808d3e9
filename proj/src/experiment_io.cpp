#include "cpzrepair/experiment_io.hpp"
#include "cpzrepair/text_util.hpp"

#include <map>
#include <sstream>

namespace cpzrepair {

namespace {

std::string trim(const std::string& s)
{
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

}  // namespace

ExperimentConfig parse_experiment_config(const std::string& text)
{
    std::map<std::string, std::pair<std::string, int>> kv;  // key -> (value, line)
    std::istringstream in(text);
    std::string line;
    int n = 0;
    while (std::getline(in, line)) {
        ++n;
        if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos) throw ConfigError("line " + std::to_string(n) + ": expected key = value");
        const std::string key = trim(line.substr(0, eq)), value = trim(line.substr(eq + 1));
        if (key.empty() || value.empty()) throw ConfigError("line " + std::to_string(n) + ": empty key or value");
        if (!kv.emplace(key, std::make_pair(value, n)).second)
            throw ConfigError("line " + std::to_string(n) + ": duplicate key '" + key + "'");
    }

    ExperimentConfig cfg;
    try {
        const auto it = kv.find("experiment");
        cfg = default_config(it == kv.end() ? ExperimentId::Param : experiment_from_name(it->second.first));
    } catch (const std::invalid_argument& e) {
        throw ConfigError(e.what());
    }
    for (const auto& [key, entry] : kv) {
        const auto& [v, ln] = entry;
        try {
            if (key == "experiment") continue;
            else if (key == "trials") cfg.trials = static_cast<int>(parse_int(v));
            else if (key == "seed") cfg.seed = static_cast<std::uint64_t>(parse_int(v));
            else if (key == "budget_s") cfg.repair.budget_s = parse_double(v);
            else if (key == "budget_edits") cfg.repair.budget_edits = static_cast<int>(parse_int(v));
            else if (key == "plateau_margin") cfg.repair.plateau_margin = parse_double(v);
            else if (key == "zero_error") cfg.repair.zero_error = parse_double(v);
            else if (key == "max_unexpected") cfg.stop.max_unexpected = static_cast<int>(parse_int(v));
            else if (key == "max_consecutive_expected") cfg.stop.max_consecutive_expected = static_cast<int>(parse_int(v));
            else if (key == "max_samples") cfg.stop.max_samples = parse_int(v);
            else if (key == "p_naive") cfg.sampler.p_naive = parse_double(v);
            else if (key == "max_rejections") cfg.sampler.max_rejections = static_cast<int>(parse_int(v));
            else if (key == "num_objects") cfg.num_objects = static_cast<int>(parse_int(v));
            else if (key == "half_extent") cfg.half_extent = parse_double(v);
            else if (key == "out") cfg.out = v;
            else throw ConfigError("unknown key '" + key + "'");
        } catch (const ConfigError& e) {
            throw ConfigError("line " + std::to_string(ln) + ": " + e.what());
        } catch (const std::invalid_argument& e) {
            throw ConfigError("line " + std::to_string(ln) + ": " + key + ": " + e.what());
        }
    }
    try {
        cfg.validate();
    } catch (const std::invalid_argument& e) {
        throw ConfigError(e.what());
    }
    return cfg;
}

std::string print_experiment_config(const ExperimentConfig& cfg)
{
    std::ostringstream o;
    o << "experiment = " << experiment_name(cfg.experiment) << '\n'
      << "trials = " << cfg.trials << '\n'
      << "seed = " << cfg.seed << '\n'
      << "budget_s = " << format_double(cfg.repair.budget_s) << '\n'
      << "budget_edits = " << cfg.repair.budget_edits << '\n'
      << "plateau_margin = " << format_double(cfg.repair.plateau_margin) << '\n'
      << "zero_error = " << format_double(cfg.repair.zero_error) << '\n'
      << "max_unexpected = " << cfg.stop.max_unexpected << '\n'
      << "max_consecutive_expected = " << cfg.stop.max_consecutive_expected << '\n'
      << "max_samples = " << cfg.stop.max_samples << '\n'
      << "p_naive = " << format_double(cfg.sampler.p_naive) << '\n'
      << "max_rejections = " << cfg.sampler.max_rejections << '\n'
      << "num_objects = " << cfg.num_objects << '\n'
      << "half_extent = " << format_double(cfg.half_extent) << '\n';
    if (!cfg.out.empty()) o << "out = " << cfg.out << '\n';
    return o.str();
}

}  // namespace cpzrepair
