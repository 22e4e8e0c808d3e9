#ifndef CPZREPAIR_HARNESS_HPP
#define CPZREPAIR_HARNESS_HPP

// Simulated ground-truth controllers, the observe-repair loop and the three
// pick experiments (wrong parameter, missing predicate, multiple flaws).

#include "cpzrepair/counterexample_sampling.hpp"
#include "cpzrepair/repair.hpp"

#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace cpzrepair {

using EffectRule = std::function<State(const State&, const ParamBinding&, const EvalContext&)>;

struct SimulatedController
{
    std::string name;
    std::vector<ParamSpec> params;
    Formula truth;  // hidden from the repair engine
    EffectRule effect;
};

/// Gripper takes the object: manip-empty := false, object pose := gripper pose.
State pick_effect(const State& q, const ParamBinding& theta, const EvalContext& ctx);
SimulatedController pick_controller(Formula truth);

/// effect(q) when the ground truth holds at (q, θ), else q. Throws
/// std::invalid_argument for an unknown object.
State execute_controller(const SimulatedController& ctrl, const State& q, const ParamBinding& theta,
                         const EvalContext& ctx);

enum class ExperimentId
{
    Param,     // (dist obj manip 0.5), truth radius 0.1
    Missing,   // (dist obj manip 0.1), truth adds a roll condition
    Multiple,  // (dist obj manip 0.7), truth dist + roll + empty
};
const char* experiment_name(ExperimentId id);
/// Throws std::invalid_argument for an unknown name.
ExperimentId experiment_from_name(const std::string& name);

struct StopRule
{
    int max_unexpected = 5;
    int max_consecutive_expected = -1;  // -1: no limit
    long max_samples = 5000;            // safety cap per trial
};

struct ExperimentConfig
{
    ExperimentId experiment = ExperimentId::Param;
    int trials = 10;
    StopRule stop;
    RepairOptions repair;
    SamplerConfig sampler;
    std::uint64_t seed = 1;
    std::string out;  // metrics CSV path; empty: no files
    int num_objects = 2;
    double half_extent = 1.0;

    /// Throws std::invalid_argument.
    void validate() const;
};

/// Trial counts, stop rules and sampling mode of each experiment.
ExperimentConfig default_config(ExperimentId id);

struct ExperimentSetup
{
    ActionModel initial;
    SimulatedController controller;
    bool active_sampling = false;
    std::optional<double> true_radius;  // reported as param_error
};
ExperimentSetup experiment_setup(ExperimentId id);

struct MetricsRecord
{
    int trial = 0;
    int invocation = 0;
    int edit_index = 0;  // applied (improving) edits so far
    double error = 0.0;
    double best_error = 0.0;
    std::optional<double> elapsed_s;
    std::string formula;
    std::optional<double> param_error;
};

struct InvocationSummary
{
    int trial = 0;
    int invocation = 0;
    double initial_error = 0.0;
    double final_error = 0.0;
    int applied = 0;
    int evaluated = 0;
    int edits_to_zero = -1;  // applied edits when best error first <= 1e-6
    RepairLabel adopted = RepairLabel::ShouldExclude;
    std::string constraint;  // model constraint afterwards
    std::optional<double> param_error;
    std::vector<double> best_by_edit;  // best error after k applied edits
};

struct TrialResult
{
    ActionModel model;
    State world;
    std::vector<Observation> history;
    std::vector<MetricsRecord> metrics;
    std::vector<InvocationSummary> invocations;
    long samples = 0;
    int unexpected = 0;
};

/// Sample, execute, classify, repair on each unexpected observation, until
/// the stop rule fires.
TrialResult run_repair_loop(const ExperimentSetup& setup, const ExperimentConfig& cfg, const EvalContext& ctx,
                            const State& world, int trial, Rng& rng);

struct ExperimentResult
{
    ExperimentConfig config;
    std::vector<TrialResult> trials;
    double elapsed_s = 0.0;
};

/// Runs every trial with seed + trial; writes files when cfg.out is set.
ExperimentResult run_experiment(const ExperimentConfig& cfg);

/// Columns: trial, invocation, edit_index, error, best_error, elapsed_s,
/// formula, param_error.
void write_metrics_csv(std::ostream& out, const ExperimentResult& r);
/// Per edit index: count, min, q1, median, q3, max, mean, outliers.
void write_boxplot(std::ostream& out, const ExperimentResult& r);
void write_invocations_csv(std::ostream& out, const ExperimentResult& r);
/// <out>, <out>.boxplot.csv, <out>.invocations.csv
void write_outputs(const ExperimentResult& r, const std::string& out);

/// Linear-interpolation quantile of sorted data.
double quantile(const std::vector<double>& sorted, double q);

}  // namespace cpzrepair

#endif  // CPZREPAIR_HARNESS_HPP
