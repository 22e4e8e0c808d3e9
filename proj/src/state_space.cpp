#include "cpzrepair/state_space.hpp"

#include <json.hpp>

#include <cmath>
#include <numbers>
#include <set>

namespace cpzrepair {

int SymbolDef::code(const std::string& value) const
{
    for (std::size_t i = 0; i < domain.size(); ++i)
        if (domain[i] == value) return static_cast<int>(i);
    return -1;
}

StateSpace::StateSpace(std::string robot_name, std::vector<DimensionInfo> robot_dims, std::vector<ObjectDef> objects,
                       std::vector<SymbolDef> symbols)
    : robot_name_(std::move(robot_name)), robot_dims_(std::move(robot_dims)), objects_(std::move(objects)),
      symbols_(std::move(symbols))
{
    std::set<DimId> ids;
    auto check = [&](const DimensionInfo& d) {
        if (!(d.lower < d.upper) || !std::isfinite(d.lower) || !std::isfinite(d.upper))
            throw std::invalid_argument("dimension '" + d.id + "' needs finite bounds with lower < upper");
        if (!ids.insert(d.id).second) throw DimensionError("duplicate dimension id '" + d.id + "'");
    };
    for (const auto& d : robot_dims_) check(d);
    for (const auto& o : objects_)
        for (const auto& d : o.dims) check(d);
    for (const auto& s : symbols_) {
        if (s.domain.empty()) throw std::invalid_argument("symbol '" + s.name + "' has an empty domain");
        if (!ids.insert(s.name).second) throw DimensionError("duplicate dimension id '" + s.name + "'");
    }
}

StateSpace StateSpace::desk(int num_objects, double half_extent)
{
    const double pi = std::numbers::pi;
    auto pose = [&](const std::string& prefix) {
        return std::vector<DimensionInfo>{{prefix + ".x", -half_extent, half_extent},
                                          {prefix + ".y", -half_extent, half_extent},
                                          {prefix + ".z", -half_extent, half_extent},
                                          {prefix + ".roll", -pi, pi}};
    };
    std::vector<ObjectDef> objects;
    for (int i = 0; i < num_objects; ++i) {
        const std::string name = "block" + std::to_string(i);
        objects.push_back({name, pose(name)});
    }
    return StateSpace("manip", pose("manip"), std::move(objects), {{"manip-empty", {"false", "true"}}});
}

int StateSpace::dimension() const
{
    int n = static_cast<int>(robot_dims_.size() + symbols_.size());
    for (const auto& o : objects_) n += static_cast<int>(o.dims.size());
    return n;
}

std::vector<DimId> StateSpace::dim_ids() const
{
    std::vector<DimId> out;
    for (const auto& d : robot_dims_) out.push_back(d.id);
    for (const auto& o : objects_)
        for (const auto& d : o.dims) out.push_back(d.id);
    for (const auto& s : symbols_) out.push_back(s.name);
    return out;
}

BoundsMap StateSpace::bounds() const
{
    BoundsMap out;
    for (const auto& d : robot_dims_) out[d.id] = d;
    for (const auto& o : objects_)
        for (const auto& d : o.dims) out[d.id] = d;
    for (const auto& s : symbols_) out[s.name] = {s.name, -0.5, s.size() - 0.5};
    return out;
}

int StateSpace::object_index(const std::string& name) const
{
    for (std::size_t i = 0; i < objects_.size(); ++i)
        if (objects_[i].name == name) return static_cast<int>(i);
    return -1;
}

int StateSpace::symbol_index(const std::string& name) const
{
    for (std::size_t i = 0; i < symbols_.size(); ++i)
        if (symbols_[i].name == name) return static_cast<int>(i);
    return -1;
}

int StateSpace::robot_dim_index(const std::string& suffix) const
{
    const std::string id = robot_name_ + "." + suffix;
    for (std::size_t i = 0; i < robot_dims_.size(); ++i)
        if (robot_dims_[i].id == id) return static_cast<int>(i);
    return -1;
}

int StateSpace::object_dim_index(int object, const std::string& suffix) const
{
    const auto& o = objects_.at(static_cast<std::size_t>(object));
    const std::string id = o.name + "." + suffix;
    for (std::size_t i = 0; i < o.dims.size(); ++i)
        if (o.dims[i].id == id) return static_cast<int>(i);
    return -1;
}

bool StateSpace::valid(const State& s) const
{
    auto inside = [](const Vector& v, const std::vector<DimensionInfo>& dims) {
        if (v.size() != static_cast<Eigen::Index>(dims.size())) return false;
        for (std::size_t i = 0; i < dims.size(); ++i)
            if (!(v[i] >= dims[i].lower && v[i] <= dims[i].upper)) return false;
        return true;
    };
    if (!inside(s.robot, robot_dims_) || s.objects.size() != objects_.size() || s.symbols.size() != symbols_.size())
        return false;
    for (std::size_t i = 0; i < objects_.size(); ++i)
        if (!inside(s.objects[i], objects_[i].dims)) return false;
    for (std::size_t i = 0; i < symbols_.size(); ++i)
        if (s.symbols[i] < 0 || s.symbols[i] >= symbols_[i].size()) return false;
    return true;
}

Vector encode(const StateSpace& space, const State& s)
{
    if (s.robot.size() != static_cast<Eigen::Index>(space.robot_dims().size()) ||
        s.objects.size() != space.objects().size() || s.symbols.size() != space.symbols().size())
        throw std::invalid_argument("encode: state shape does not match the space");
    Vector r(space.dimension());
    Eigen::Index k = 0;
    r.segment(k, s.robot.size()) = s.robot;
    k += s.robot.size();
    for (std::size_t i = 0; i < s.objects.size(); ++i) {
        if (s.objects[i].size() != static_cast<Eigen::Index>(space.objects()[i].dims.size()))
            throw std::invalid_argument("encode: object pose size mismatch");
        r.segment(k, s.objects[i].size()) = s.objects[i];
        k += s.objects[i].size();
    }
    for (std::size_t i = 0; i < s.symbols.size(); ++i) {
        if (s.symbols[i] < 0 || s.symbols[i] >= space.symbols()[i].size())
            throw std::invalid_argument("encode: symbol '" + space.symbols()[i].name + "' out of domain");
        r[k++] = s.symbols[i];
    }
    return r;
}

State decode(const StateSpace& space, const Vector& r)
{
    if (r.size() != space.dimension()) throw DimensionError("decode: vector length mismatch");
    State s;
    Eigen::Index k = 0;
    const auto nr = static_cast<Eigen::Index>(space.robot_dims().size());
    s.robot = r.segment(k, nr);
    k += nr;
    for (const auto& o : space.objects()) {
        const auto no = static_cast<Eigen::Index>(o.dims.size());
        s.objects.push_back(r.segment(k, no));
        k += no;
    }
    for (const auto& sym : space.symbols()) {
        const double code = std::floor(r[k++] + 0.5);
        s.symbols.push_back(static_cast<int>(std::clamp(code, 0.0, static_cast<double>(sym.size() - 1))));
    }
    return s;
}

State sample_state(const StateSpace& space, Rng& rng)
{
    auto draw = [&](const std::vector<DimensionInfo>& dims) {
        Vector v(static_cast<Eigen::Index>(dims.size()));
        for (std::size_t i = 0; i < dims.size(); ++i)
            v[i] = std::uniform_real_distribution<double>(dims[i].lower, dims[i].upper)(rng);
        return v;
    };
    State s;
    s.robot = draw(space.robot_dims());
    for (const auto& o : space.objects()) s.objects.push_back(draw(o.dims));
    for (const auto& sym : space.symbols())
        s.symbols.push_back(std::uniform_int_distribution<int>(0, sym.size() - 1)(rng));
    return s;
}

bool same_state(const State& a, const State& b, double tol)
{
    auto close = [tol](const Vector& x, const Vector& y) {
        return x.size() == y.size() && (x.size() == 0 || (x - y).cwiseAbs().maxCoeff() <= tol);
    };
    if (!close(a.robot, b.robot) || a.objects.size() != b.objects.size() || a.symbols != b.symbols) return false;
    for (std::size_t i = 0; i < a.objects.size(); ++i)
        if (!close(a.objects[i], b.objects[i])) return false;
    return true;
}

std::string state_to_json(const StateSpace& space, const State& s)
{
    nlohmann::ordered_json j;
    for (std::size_t i = 0; i < space.robot_dims().size(); ++i) j[space.robot_dims()[i].id] = s.robot[i];
    for (std::size_t o = 0; o < space.objects().size(); ++o)
        for (std::size_t i = 0; i < space.objects()[o].dims.size(); ++i)
            j[space.objects()[o].dims[i].id] = s.objects[o][i];
    for (std::size_t i = 0; i < space.symbols().size(); ++i)
        j[space.symbols()[i].name] = space.symbols()[i].domain.at(static_cast<std::size_t>(s.symbols[i]));
    return j.dump();
}

State state_from_json(const StateSpace& space, const std::string& text)
{
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        throw std::invalid_argument(std::string("state record: ") + e.what());
    }
    if (!j.is_object()) throw std::invalid_argument("state record: expected an object");
    auto number = [&](const DimId& id) {
        if (!j.contains(id) || !j[id].is_number()) throw std::invalid_argument("state record: missing '" + id + "'");
        return j[id].get<double>();
    };
    State s;
    s.robot.resize(static_cast<Eigen::Index>(space.robot_dims().size()));
    for (std::size_t i = 0; i < space.robot_dims().size(); ++i) s.robot[i] = number(space.robot_dims()[i].id);
    for (const auto& o : space.objects()) {
        Vector v(static_cast<Eigen::Index>(o.dims.size()));
        for (std::size_t i = 0; i < o.dims.size(); ++i) v[i] = number(o.dims[i].id);
        s.objects.push_back(v);
    }
    for (const auto& sym : space.symbols()) {
        if (!j.contains(sym.name) || !j[sym.name].is_string())
            throw std::invalid_argument("state record: missing symbol '" + sym.name + "'");
        const int code = sym.code(j[sym.name].get<std::string>());
        if (code < 0) throw std::invalid_argument("state record: bad value for '" + sym.name + "'");
        s.symbols.push_back(code);
    }
    return s;
}

double wrap_angle(double a)
{
    const double two_pi = 2.0 * std::numbers::pi;
    double w = std::remainder(a, two_pi);  // [-pi, pi]
    return w;
}

}  // namespace cpzrepair
