#ifndef CPZREPAIR_PREDICATES_HPP
#define CPZREPAIR_PREDICATES_HPP

// Predicate templates, atoms and DNF formulas over CPZ regions.

#include "cpzrepair/cpz.hpp"
#include "cpzrepair/state_space.hpp"

#include <map>
#include <memory>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

namespace cpzrepair {

enum class ParamKind
{
    Continuous,
    Discrete,   // value from the domain of the symbol named by another parameter
    ObjectRef,  // action parameter name (or object name)
    RobotRef,   // the robot
    SymbolRef,  // symbol name
};

struct ParamSpec
{
    std::string name;
    ParamKind kind = ParamKind::Continuous;
    double lower = 0.0;  // Continuous only
    double upper = 0.0;
    int domain_of = -1;  // Discrete only: index of the SymbolRef parameter
};

/// One argument: `value` for continuous parameters, `text` otherwise.
struct Arg
{
    std::string text;
    double value = 0.0;

    static Arg ref(std::string t) { return {std::move(t), 0.0}; }
    static Arg number(double v) { return {std::string(), v}; }
    friend bool operator==(const Arg&, const Arg&) = default;
};

struct Atom
{
    std::string predicate;
    std::vector<Arg> args;
    friend bool operator==(const Atom&, const Atom&) = default;
};

/// Disjunction of conjunctions of atoms.
struct Formula
{
    std::vector<std::vector<Atom>> disjuncts;
    friend bool operator==(const Formula&, const Formula&) = default;
    int atom_count() const;
};

/// Action parameter name -> object name.
using ParamBinding = std::map<std::string, std::string>;

class TemplateRegistry;

/// Everything needed to resolve and evaluate atoms.
struct EvalContext
{
    const StateSpace* space = nullptr;
    const TemplateRegistry* registry = nullptr;
    ParamBinding theta;
    SolverOptions solver;

    int object(const Arg& ref) const;  // throws std::invalid_argument when unresolvable
    int symbol(const Arg& ref) const;
    void robot(const Arg& ref) const;  // validates only
};

class PredicateTemplate
{
public:
    virtual ~PredicateTemplate() = default;

    virtual const std::string& name() const = 0;
    virtual const std::vector<ParamSpec>& params() const = 0;

    /// Constraint-space dims (bounded) of an atom of this template.
    virtual std::vector<DimensionInfo> dims(const Atom& atom, const EvalContext& ctx) const = 0;
    /// Constraint-space transform of a state.
    virtual Vector transform(const Atom& atom, const EvalContext& ctx, const State& s) const = 0;
    /// CPZ over dims(); object-dependent parameters come from `context`.
    virtual Cpz region(const Atom& atom, const EvalContext& ctx, const State& context) const = 0;
    /// Write a constraint-space point back into `s` (inverse of transform on
    /// the dims it reads from the robot / symbols).
    virtual void pullback(const Atom& atom, const EvalContext& ctx, const Vector& t, State& s) const = 0;
    /// Continuous-parameter values that put `s` on the boundary of this atom.
    virtual std::vector<double> seeds(const Atom& atom, const EvalContext& ctx, const State& context,
                                      const State& s) const;
    /// The complementary atom, if this template registers one. `space` may
    /// be null (then only Boolean true/false domains are known).
    virtual std::optional<Atom> complement(const Atom& atom, const StateSpace* space) const;
    /// True when the constraint-space dims hold enumerated codes.
    virtual bool quantized() const { return false; }
};

class TemplateRegistry
{
public:
    void add(std::shared_ptr<const PredicateTemplate> t);
    const PredicateTemplate* find(const std::string& name) const;
    const PredicateTemplate& at(const std::string& name) const;
    const std::vector<std::shared_ptr<const PredicateTemplate>>& all() const { return ordered_; }

private:
    std::vector<std::shared_ptr<const PredicateTemplate>> ordered_;
};

/// `empty`, `dist`, `roll`, `symbol`, in that order.
const TemplateRegistry& builtin_registry();
std::vector<std::shared_ptr<const PredicateTemplate>> builtin_templates();

/// Ball of radius d around `center` over the given three dims.
Cpz distance_cpz(const Vector& center, double d, std::vector<DimId> dims);

/// Throws std::invalid_argument if the atom does not match its template
/// (arity, numeric parameters within bounds, resolvable references).
void validate_atom(const Atom& atom, const EvalContext& ctx);
/// Every atom valid, DNF non-empty, no duplicate atom within a conjunct.
void validate_formula(const Formula& f, const EvalContext& ctx);

/// Membership of the transformed `s` in the atom region built from `context`.
bool eval_atom(const Atom& atom, const State& s, const EvalContext& ctx);
bool eval_atom(const Atom& atom, const State& s, const State& context, const EvalContext& ctx);
bool eval_formula(const Formula& f, const State& s, const EvalContext& ctx);
bool eval_formula(const Formula& f, const State& s, const State& context, const EvalContext& ctx);

/// One CPZ per disjunct over the unified constraint space of its atoms.
std::vector<Cpz> formula_region(const Formula& f, const State& context, const EvalContext& ctx);
/// Bounds of every constraint-space dim the formula's atoms use.
BoundsMap constraint_bounds(const Formula& f, const EvalContext& ctx);
/// Transformed coordinates of `s`, keyed by constraint-space dim.
std::map<DimId, double> transformed_values(const Formula& f, const State& s, const EvalContext& ctx);
/// Gather `values` in the dim order of S.
Vector point_in(const Cpz& S, const std::map<DimId, double>& values);
/// Constraint-space dims holding enumerated codes.
std::set<DimId> quantized_dims(const Formula& f, const EvalContext& ctx);

/// Parse error with the byte offset of the offending token.
class FormulaSyntaxError : public std::invalid_argument
{
public:
    FormulaSyntaxError(const std::string& what, std::size_t pos);
    std::size_t position() const { return pos_; }

private:
    std::size_t pos_;
};

/// s-expression DNF: `(or ...)` at the top, `(and ...)` below it, atoms
/// `(<template> <args>)` and `(not <atom>)` for templates with a complement.
Formula parse_formula(const std::string& text, const TemplateRegistry& registry = builtin_registry(),
                      const StateSpace* space = nullptr);
std::string print_formula(const Formula& f);
std::string print_atom(const Atom& a);

}  // namespace cpzrepair

#endif  // CPZREPAIR_PREDICATES_HPP
