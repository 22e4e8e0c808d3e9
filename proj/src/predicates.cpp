#include "cpzrepair/predicates.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace cpzrepair {

int Formula::atom_count() const
{
    int n = 0;
    for (const auto& c : disjuncts) n += static_cast<int>(c.size());
    return n;
}

// ---------------------------------------------------------------------------
// Reference resolution

int EvalContext::object(const Arg& ref) const
{
    auto it = theta.find(ref.text);
    const std::string& name = it == theta.end() ? ref.text : it->second;
    const int idx = space->object_index(name);
    if (idx < 0) throw std::invalid_argument("unresolvable object reference '" + ref.text + "'");
    return idx;
}

int EvalContext::symbol(const Arg& ref) const
{
    const int idx = space->symbol_index(ref.text);
    if (idx < 0) throw std::invalid_argument("unknown symbol '" + ref.text + "'");
    return idx;
}

void EvalContext::robot(const Arg& ref) const
{
    if (ref.text != space->robot_name()) throw std::invalid_argument("unknown robot '" + ref.text + "'");
}

std::vector<double> PredicateTemplate::seeds(const Atom&, const EvalContext&, const State&, const State&) const
{
    return {};
}

std::optional<Atom> PredicateTemplate::complement(const Atom&, const StateSpace*) const
{
    return std::nullopt;
}

// ---------------------------------------------------------------------------
// Builtin templates

Cpz distance_cpz(const Vector& center, double d, std::vector<DimId> dims)
{
    Matrix G = d * Matrix::Identity(3, 3);
    ExponentMatrix E = ExponentMatrix::Zero(4, 3);
    E.topRows(3).setIdentity();
    Matrix A(1, 4);
    A << 1, 1, 1, -0.5;
    Vector b(1);
    b << 0.5;
    ExponentMatrix R = ExponentMatrix::Zero(4, 4);
    R.topLeftCorner(3, 3) = 2 * ExponentMatrix::Identity(3, 3);
    R(3, 3) = 1;
    return Cpz(center, std::move(G), std::move(E), std::move(A), std::move(b), std::move(R), std::move(dims));
}

namespace {

const double kPi = std::numbers::pi;

Vector object_position(const StateSpace& space, const State& s, int obj)
{
    Vector p(3);
    p << s.objects[obj][space.object_dim_index(obj, "x")], s.objects[obj][space.object_dim_index(obj, "y")],
        s.objects[obj][space.object_dim_index(obj, "z")];
    return p;
}

Vector robot_position(const StateSpace& space, const State& s)
{
    Vector p(3);
    p << s.robot[space.robot_dim_index("x")], s.robot[space.robot_dim_index("y")], s.robot[space.robot_dim_index("z")];
    return p;
}

class DistTemplate final : public PredicateTemplate
{
public:
    const std::string& name() const override { return name_; }
    const std::vector<ParamSpec>& params() const override { return params_; }

    std::vector<DimensionInfo> dims(const Atom& atom, const EvalContext& ctx) const override
    {
        ctx.robot(atom.args[1]);
        std::vector<DimensionInfo> out;
        for (const char* axis : {"x", "y", "z"}) out.push_back(ctx.space->robot_dims()[ctx.space->robot_dim_index(axis)]);
        return out;
    }
    Vector transform(const Atom&, const EvalContext& ctx, const State& s) const override
    {
        return robot_position(*ctx.space, s);
    }
    Cpz region(const Atom& atom, const EvalContext& ctx, const State& context) const override
    {
        std::vector<DimId> ids;
        for (const auto& d : dims(atom, ctx)) ids.push_back(d.id);
        return distance_cpz(object_position(*ctx.space, context, ctx.object(atom.args[0])), atom.args[2].value,
                            std::move(ids));
    }
    void pullback(const Atom&, const EvalContext& ctx, const Vector& t, State& s) const override
    {
        s.robot[ctx.space->robot_dim_index("x")] = t[0];
        s.robot[ctx.space->robot_dim_index("y")] = t[1];
        s.robot[ctx.space->robot_dim_index("z")] = t[2];
    }
    std::vector<double> seeds(const Atom& atom, const EvalContext& ctx, const State& context,
                              const State& s) const override
    {
        return {(robot_position(*ctx.space, s) - object_position(*ctx.space, context, ctx.object(atom.args[0]))).norm()};
    }

private:
    std::string name_ = "dist";
    std::vector<ParamSpec> params_{{"obj", ParamKind::ObjectRef},
                                   {"manip", ParamKind::RobotRef},
                                   {"d", ParamKind::Continuous, 1e-6, 2.0 * std::sqrt(3.0)}};
};

class RollTemplate final : public PredicateTemplate
{
public:
    const std::string& name() const override { return name_; }
    const std::vector<ParamSpec>& params() const override { return params_; }

    std::vector<DimensionInfo> dims(const Atom& atom, const EvalContext& ctx) const override
    {
        ctx.robot(atom.args[1]);
        const auto& obj = ctx.space->objects()[ctx.object(atom.args[0])];
        const std::string id = "roll(" + obj.name + "," + ctx.space->robot_name() + ")";
        return {{id, -kPi, kPi}};
    }
    Vector transform(const Atom& atom, const EvalContext& ctx, const State& s) const override
    {
        const int obj = ctx.object(atom.args[0]);
        Vector t(1);
        t[0] = wrap_angle(s.robot[ctx.space->robot_dim_index("roll")] -
                          s.objects[obj][ctx.space->object_dim_index(obj, "roll")]);
        return t;
    }
    Cpz region(const Atom& atom, const EvalContext& ctx, const State&) const override
    {
        Matrix G(1, 1);
        G << atom.args[2].value;
        ExponentMatrix E(1, 1);
        E << 1;
        return Cpz::zonotope(Vector::Zero(1), std::move(G), std::move(E), {dims(atom, ctx)[0].id});
    }
    void pullback(const Atom& atom, const EvalContext& ctx, const Vector& t, State& s) const override
    {
        const int obj = ctx.object(atom.args[0]);
        s.robot[ctx.space->robot_dim_index("roll")] =
            wrap_angle(t[0] + s.objects[obj][ctx.space->object_dim_index(obj, "roll")]);
    }
    std::vector<double> seeds(const Atom& atom, const EvalContext& ctx, const State&, const State& s) const override
    {
        return {std::abs(transform(atom, ctx, s)[0])};
    }

private:
    std::string name_ = "roll";
    std::vector<ParamSpec> params_{{"obj", ParamKind::ObjectRef},
                                   {"manip", ParamKind::RobotRef},
                                   {"delta", ParamKind::Continuous, 1e-6, kPi}};
};

// Point region at one symbol code.
Cpz symbol_point(const SymbolDef& sym, int code)
{
    return Cpz::point(Vector::Constant(1, static_cast<double>(code)), {sym.name});
}

class SymbolTemplate final : public PredicateTemplate
{
public:
    const std::string& name() const override { return name_; }
    const std::vector<ParamSpec>& params() const override { return params_; }
    bool quantized() const override { return true; }

    std::vector<DimensionInfo> dims(const Atom& atom, const EvalContext& ctx) const override
    {
        const auto& sym = ctx.space->symbols()[ctx.symbol(atom.args[0])];
        return {{sym.name, -0.5, sym.size() - 0.5}};
    }
    Vector transform(const Atom& atom, const EvalContext& ctx, const State& s) const override
    {
        return Vector::Constant(1, static_cast<double>(s.symbols[ctx.symbol(atom.args[0])]));
    }
    Cpz region(const Atom& atom, const EvalContext& ctx, const State&) const override
    {
        const auto& sym = ctx.space->symbols()[ctx.symbol(atom.args[0])];
        const int code = sym.code(atom.args[1].text);
        if (code < 0) throw std::invalid_argument("symbol '" + sym.name + "' has no value '" + atom.args[1].text + "'");
        return symbol_point(sym, code);
    }
    void pullback(const Atom& atom, const EvalContext& ctx, const Vector& t, State& s) const override
    {
        const int i = ctx.symbol(atom.args[0]);
        const double code = std::floor(t[0] + 0.5);
        s.symbols[i] = static_cast<int>(std::clamp(code, 0.0, ctx.space->symbols()[i].size() - 1.0));
    }
    std::optional<Atom> complement(const Atom& atom, const StateSpace* space) const override
    {
        std::vector<std::string> domain{"false", "true"};
        if (space) {
            const int i = space->symbol_index(atom.args[0].text);
            if (i < 0) return std::nullopt;
            domain = space->symbols()[i].domain;
        }
        if (domain.size() != 2) return std::nullopt;
        const auto& v = atom.args[1].text;
        if (v != domain[0] && v != domain[1]) return std::nullopt;
        return Atom{name_, {atom.args[0], Arg::ref(v == domain[0] ? domain[1] : domain[0])}};
    }

private:
    std::string name_ = "symbol";
    std::vector<ParamSpec> params_{{"s", ParamKind::SymbolRef}, {"v", ParamKind::Discrete, 0.0, 0.0, 0}};
};

// (empty manip) == (symbol manip-empty true)
class EmptyTemplate final : public PredicateTemplate
{
public:
    const std::string& name() const override { return name_; }
    const std::vector<ParamSpec>& params() const override { return params_; }
    bool quantized() const override { return true; }

    std::vector<DimensionInfo> dims(const Atom& atom, const EvalContext& ctx) const override
    {
        const auto& sym = symbol_def(atom, ctx);
        return {{sym.name, -0.5, sym.size() - 0.5}};
    }
    Vector transform(const Atom& atom, const EvalContext& ctx, const State& s) const override
    {
        return Vector::Constant(1, static_cast<double>(s.symbols[symbol_index(atom, ctx)]));
    }
    Cpz region(const Atom& atom, const EvalContext& ctx, const State&) const override
    {
        const auto& sym = symbol_def(atom, ctx);
        return symbol_point(sym, sym.code("true"));
    }
    void pullback(const Atom& atom, const EvalContext& ctx, const Vector& t, State& s) const override
    {
        const int i = symbol_index(atom, ctx);
        const double code = std::floor(t[0] + 0.5);
        s.symbols[i] = static_cast<int>(std::clamp(code, 0.0, ctx.space->symbols()[i].size() - 1.0));
    }
    std::optional<Atom> complement(const Atom& atom, const StateSpace*) const override
    {
        return Atom{"symbol", {Arg::ref(atom.args[0].text + "-empty"), Arg::ref("false")}};
    }

private:
    int symbol_index(const Atom& atom, const EvalContext& ctx) const
    {
        ctx.robot(atom.args[0]);
        const int i = ctx.space->symbol_index(atom.args[0].text + "-empty");
        if (i < 0 || ctx.space->symbols()[i].code("true") < 0)
            throw std::invalid_argument("space has no Boolean symbol '" + atom.args[0].text + "-empty'");
        return i;
    }
    const SymbolDef& symbol_def(const Atom& atom, const EvalContext& ctx) const
    {
        return ctx.space->symbols()[symbol_index(atom, ctx)];
    }

    std::string name_ = "empty";
    std::vector<ParamSpec> params_{{"manip", ParamKind::RobotRef}};
};

}  // namespace

void TemplateRegistry::add(std::shared_ptr<const PredicateTemplate> t)
{
    if (find(t->name())) throw std::invalid_argument("template '" + t->name() + "' already registered");
    ordered_.push_back(std::move(t));
}

const PredicateTemplate* TemplateRegistry::find(const std::string& name) const
{
    for (const auto& t : ordered_)
        if (t->name() == name) return t.get();
    return nullptr;
}

const PredicateTemplate& TemplateRegistry::at(const std::string& name) const
{
    const auto* t = find(name);
    if (!t) throw std::invalid_argument("unknown predicate template '" + name + "'");
    return *t;
}

std::vector<std::shared_ptr<const PredicateTemplate>> builtin_templates()
{
    return {std::make_shared<EmptyTemplate>(), std::make_shared<DistTemplate>(), std::make_shared<RollTemplate>(),
            std::make_shared<SymbolTemplate>()};
}

const TemplateRegistry& builtin_registry()
{
    static const TemplateRegistry reg = [] {
        TemplateRegistry r;
        for (auto& t : builtin_templates()) r.add(std::move(t));
        return r;
    }();
    return reg;
}

// ---------------------------------------------------------------------------
// Validation and evaluation

void validate_atom(const Atom& atom, const EvalContext& ctx)
{
    const auto& t = ctx.registry->at(atom.predicate);
    const auto& spec = t.params();
    if (atom.args.size() != spec.size())
        throw std::invalid_argument("'" + atom.predicate + "' takes " + std::to_string(spec.size()) + " arguments");
    for (std::size_t i = 0; i < spec.size(); ++i) {
        const auto& a = atom.args[i];
        switch (spec[i].kind) {
        case ParamKind::Continuous:
            if (!(a.value >= spec[i].lower && a.value <= spec[i].upper))
                throw std::invalid_argument("'" + atom.predicate + "' parameter " + spec[i].name + " out of bounds");
            break;
        case ParamKind::ObjectRef: ctx.object(a); break;
        case ParamKind::RobotRef: ctx.robot(a); break;
        case ParamKind::SymbolRef: ctx.symbol(a); break;
        case ParamKind::Discrete: {
            const auto& sym = ctx.space->symbols()[ctx.symbol(atom.args[spec[i].domain_of])];
            if (sym.code(a.text) < 0)
                throw std::invalid_argument("symbol '" + sym.name + "' has no value '" + a.text + "'");
            break;
        }
        }
    }
}

void validate_formula(const Formula& f, const EvalContext& ctx)
{
    if (f.disjuncts.empty()) throw std::invalid_argument("formula has no disjuncts");
    for (const auto& conj : f.disjuncts) {
        if (conj.empty()) throw std::invalid_argument("formula has an empty conjunct");
        for (std::size_t i = 0; i < conj.size(); ++i) {
            validate_atom(conj[i], ctx);
            for (std::size_t j = 0; j < i; ++j) {
                // Same template and same references (continuous values aside).
                bool same = conj[i].predicate == conj[j].predicate;
                const auto& spec = ctx.registry->at(conj[i].predicate).params();
                for (std::size_t k = 0; same && k < spec.size(); ++k)
                    if (spec[k].kind != ParamKind::Continuous && spec[k].kind != ParamKind::Discrete)
                        same = conj[i].args[k].text == conj[j].args[k].text;
                if (same) throw std::invalid_argument("duplicate atom in conjunct: " + print_atom(conj[i]));
            }
        }
    }
}

bool eval_atom(const Atom& atom, const State& s, const EvalContext& ctx)
{
    return eval_atom(atom, s, s, ctx);
}

bool eval_atom(const Atom& atom, const State& s, const State& context, const EvalContext& ctx)
{
    const auto& t = ctx.registry->at(atom.predicate);
    return contains(t.region(atom, ctx, context), t.transform(atom, ctx, s), ctx.solver);
}

bool eval_formula(const Formula& f, const State& s, const EvalContext& ctx)
{
    return eval_formula(f, s, s, ctx);
}

bool eval_formula(const Formula& f, const State& s, const State& context, const EvalContext& ctx)
{
    for (const auto& conj : f.disjuncts) {
        bool all = true;
        for (const auto& atom : conj)
            if (!eval_atom(atom, s, context, ctx)) {
                all = false;
                break;
            }
        if (all) return true;
    }
    return false;
}

BoundsMap constraint_bounds(const Formula& f, const EvalContext& ctx)
{
    BoundsMap out;
    for (const auto& conj : f.disjuncts)
        for (const auto& atom : conj)
            for (const auto& d : ctx.registry->at(atom.predicate).dims(atom, ctx)) out[d.id] = d;
    return out;
}

std::vector<Cpz> formula_region(const Formula& f, const State& context, const EvalContext& ctx)
{
    const BoundsMap bounds = constraint_bounds(f, ctx);
    std::vector<Cpz> cover;
    for (const auto& conj : f.disjuncts) {
        std::optional<Cpz> acc;
        for (const auto& atom : conj) {
            Cpz r = ctx.registry->at(atom.predicate).region(atom, ctx, context);
            if (!acc) {
                acc = std::move(r);
                continue;
            }
            auto [a, b] = unify(*acc, r, bounds);
            acc = intersect(a, b);
        }
        cover.push_back(std::move(*acc));
    }
    return cover;
}

std::map<DimId, double> transformed_values(const Formula& f, const State& s, const EvalContext& ctx)
{
    std::map<DimId, double> out;
    for (const auto& conj : f.disjuncts)
        for (const auto& atom : conj) {
            const auto& t = ctx.registry->at(atom.predicate);
            const auto dims = t.dims(atom, ctx);
            const Vector v = t.transform(atom, ctx, s);
            for (std::size_t i = 0; i < dims.size(); ++i) out[dims[i].id] = v[static_cast<Eigen::Index>(i)];
        }
    return out;
}

Vector point_in(const Cpz& S, const std::map<DimId, double>& values)
{
    Vector p(S.dimension());
    for (int i = 0; i < S.dimension(); ++i) {
        auto it = values.find(S.dims()[i]);
        if (it == values.end()) throw DimensionError("no transformed value for '" + S.dims()[i] + "'");
        p[i] = it->second;
    }
    return p;
}

std::set<DimId> quantized_dims(const Formula& f, const EvalContext& ctx)
{
    std::set<DimId> out;
    for (const auto& conj : f.disjuncts)
        for (const auto& atom : conj) {
            const auto& t = ctx.registry->at(atom.predicate);
            if (!t.quantized()) continue;
            for (const auto& d : t.dims(atom, ctx)) out.insert(d.id);
        }
    return out;
}

}  // namespace cpzrepair
