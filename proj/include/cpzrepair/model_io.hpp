#ifndef CPZREPAIR_MODEL_IO_HPP
#define CPZREPAIR_MODEL_IO_HPP

// Text formats for action models and observation logs.
//
// Action model:
//   (action pick
//     (params (obj object))
//     (constraint (dist obj manip 0.5))
//     (effect (symbol manip-empty false)))
//
// Parameter kinds: object, robot, symbol. Observation logs hold one JSON
// object per line: {"action", "q", "theta", "q_next", "timestamp"}.

#include "cpzrepair/repair.hpp"

#include <iosfwd>
#include <stdexcept>
#include <string>
#include <vector>

namespace cpzrepair {

class ModelFormatError : public std::invalid_argument
{
public:
    using std::invalid_argument::invalid_argument;
};

ActionModel parse_model(const std::string& text, const TemplateRegistry& registry = builtin_registry(),
                        const StateSpace* space = nullptr);
std::string print_model(const ActionModel& m);

/// Both formulas valid in ctx (θ bound to `binding`), parameter names unique.
void validate_model(const ActionModel& m, const EvalContext& ctx);

std::string observation_to_json(const StateSpace& space, const Observation& h);
Observation observation_from_json(const StateSpace& space, const std::string& line);

/// Blank lines are skipped; errors carry the 1-based line number.
std::vector<Observation> read_observation_log(const StateSpace& space, std::istream& in);
void write_observation_log(const StateSpace& space, std::ostream& out, const std::vector<Observation>& obs);

}  // namespace cpzrepair

#endif  // CPZREPAIR_MODEL_IO_HPP
