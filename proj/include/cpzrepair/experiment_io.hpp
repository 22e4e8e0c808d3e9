#ifndef CPZREPAIR_EXPERIMENT_IO_HPP
#define CPZREPAIR_EXPERIMENT_IO_HPP

// Experiment configuration as `key = value` lines; `#` starts a comment.
// The `experiment` key selects the defaults the other keys override.

#include "cpzrepair/harness.hpp"

#include <stdexcept>
#include <string>

namespace cpzrepair {

class ConfigError : public std::invalid_argument
{
public:
    using std::invalid_argument::invalid_argument;
};

ExperimentConfig parse_experiment_config(const std::string& text);
std::string print_experiment_config(const ExperimentConfig& cfg);

}  // namespace cpzrepair

#endif  // CPZREPAIR_EXPERIMENT_IO_HPP
