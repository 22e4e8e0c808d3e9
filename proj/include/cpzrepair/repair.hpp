#ifndef CPZREPAIR_REPAIR_HPP
#define CPZREPAIR_REPAIR_HPP

// Observation classification, formula error, edit generation and the anytime
// edit search used to repair action constraints and effects.

#include "cpzrepair/predicates.hpp"

#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace cpzrepair {

struct ActionModel
{
    std::string name;
    std::vector<ParamSpec> params;  // object references, e.g. obj
    Formula constraint;
    Formula effect;
    friend bool operator==(const ActionModel&, const ActionModel&) = default;

    std::vector<std::string> object_params() const;
};

struct Observation
{
    std::string action;
    State q;
    ParamBinding theta;
    State q_next;
    double timestamp = 0.0;
};

/// Which side of the model a repair targets. Constraint repairs exclude
/// no-op observations; effect repairs include result states.
enum class RepairLabel
{
    ShouldExclude,
    ShouldInclude,
};

const char* label_name(RepairLabel label);

/// Context for one observation: the base context with theta bound.
EvalContext bind(const EvalContext& base, const Observation& h);

/// True iff the observation contradicts the model (no-op while the
/// constraint holds, or a change while it fails or lands outside the effect).
bool unexpected(const ActionModel& model, const Observation& h, const EvalContext& ctx);

struct ErrorReport
{
    double total = 0.0;
    std::vector<int> misclassified;  // indices into the observation list
    bool low_confidence = false;     // some NLP answer had no feasible start
};

/// Sum of squared set distances of misclassified observations.
ErrorReport formula_error(const Formula& f, const std::vector<Observation>& obs, RepairLabel label,
                          const EvalContext& ctx);
double error(const Formula& f, const std::vector<Observation>& obs, RepairLabel label, const EvalContext& ctx);

enum class EditOp
{
    Param = 0,
    Remove = 1,
    Add = 2,
    Replace = 3,
};

const char* edit_op_name(EditOp op);

struct Edit
{
    EditOp op = EditOp::Param;
    int disjunct = -1;  // Add: -1 means a new top-level disjunct
    int atom = -1;      // Param / Remove / Replace
    std::string predicate;  // Add / Replace payload template
    friend bool operator==(const Edit&, const Edit&) = default;
};

/// Edits for f when at least one observation is misclassified: param edits
/// for atoms with continuous parameters, removals, adds (every template at
/// every conjunct and at a new disjunct) and replacements. Deduplicated.
std::vector<Edit> generate_edits(const Formula& f, const std::vector<int>& misclassified,
                                 const TemplateRegistry& registry);

/// Per-call settings of the edit search.
struct RepairOptions
{
    double budget_s = 20.0;      // <= 0: no wall-clock limit
    long budget_edits = 400;     // < 0: no edit-count limit
    std::vector<std::string> object_params{"obj"};
    // Continuous search: parameters are moved this fraction of the
    // zero-error interval inside its edge.
    double plateau_margin = 0.01;
    // The search stops once the best error is at or below this. Squared
    // distances under the squared membership tolerance are numerical zeros.
    double zero_error = 1e-12;
};

/// Best values for one atom's parameters (discrete ones enumerated,
/// continuous ones searched), everything else in f fixed. Among equal-error
/// continuous values the one nearest a reference wins: the atom's value at
/// `seed_observation` when given, else its current value.
struct ParamResult
{
    Formula formula;
    double error = 0.0;
};
ParamResult optimize_params(const Formula& f, int disjunct, int atom, const std::vector<Observation>& obs,
                            RepairLabel label, const EvalContext& ctx, const RepairOptions& opts,
                            int seed_observation = -1);

/// Apply one edit; nullopt when the result is invalid (for instance an
/// empty formula) or degenerate (every cover element empty). New atoms are
/// seeded from `seed_observation` (an index into obs, or -1).
std::optional<Formula> apply_edit(const Formula& f, const Edit& e, const std::vector<Observation>& obs,
                                  RepairLabel label, const EvalContext& ctx, const RepairOptions& opts,
                                  int seed_observation = -1);

struct RepairStep
{
    long evaluated = 0;   // edits evaluated so far (this one included)
    int applied = 0;      // best-so-far updates so far
    double error = 0.0;   // this candidate
    double best_error = 0.0;
    double elapsed_s = 0.0;
    std::string formula;  // best so far
    Edit edit;
};

struct RepairResult
{
    Formula best;
    double initial_error = 0.0;
    double best_error = 0.0;
    long evaluated = 0;
    int applied = 0;
    std::vector<RepairStep> steps;
};

/// Anytime edit search. error(result) <= error(f) on `obs`.
RepairResult repair(const Formula& f, const std::vector<Observation>& obs, RepairLabel label,
                    const EvalContext& ctx, const RepairOptions& opts);

/// Unexpected observations plus an equally sized random subset of the
/// expected ones (all of them if there are fewer).
std::vector<Observation> subsample(const std::vector<Observation>& expected,
                                   const std::vector<Observation>& unexpected, Rng& rng);

struct ActionRepair
{
    ActionModel model;
    RepairLabel adopted = RepairLabel::ShouldExclude;
    RepairResult constraint;
    RepairResult effect;
    double constraint_candidate_error = 0.0;  // total model error with the repaired constraint
    double effect_candidate_error = 0.0;      // total model error with the repaired effect
    std::vector<Observation> sample;          // the sub-sample repaired against
};

/// Sub-sample H, repair the constraint and the effect with half the budget
/// each, keep the candidate with the lower total model error (ties go to the
/// constraint).
ActionRepair repair_action(const ActionModel& model, const std::vector<Observation>& history,
                           const EvalContext& ctx, const RepairOptions& opts, Rng& rng);

}  // namespace cpzrepair

#endif  // CPZREPAIR_REPAIR_HPP
