#ifndef CPZREPAIR_STATE_SPACE_HPP
#define CPZREPAIR_STATE_SPACE_HPP

// Hybrid robot / object / symbol states and their real-vector encoding.

#include "cpzrepair/cpz.hpp"

#include <string>
#include <vector>

namespace cpzrepair {

struct SymbolDef
{
    std::string name;
    std::vector<std::string> domain;  // value i has code i

    int code(const std::string& value) const;  // -1 if not in domain
    int size() const { return static_cast<int>(domain.size()); }
};

struct ObjectDef
{
    std::string name;
    std::vector<DimensionInfo> dims;
};

struct State
{
    Vector robot;
    std::vector<Vector> objects;
    std::vector<int> symbols;  // codes
};

class StateSpace
{
public:
    StateSpace() = default;
    StateSpace(std::string robot_name, std::vector<DimensionInfo> robot_dims, std::vector<ObjectDef> objects,
               std::vector<SymbolDef> symbols);

    /// Free-flying gripper `manip` (x, y, z, roll), `num_objects` objects
    /// block0.. with the same pose layout, and the Boolean `manip-empty`.
    static StateSpace desk(int num_objects = 2, double half_extent = 1.0);

    const std::string& robot_name() const { return robot_name_; }
    const std::vector<DimensionInfo>& robot_dims() const { return robot_dims_; }
    const std::vector<ObjectDef>& objects() const { return objects_; }
    const std::vector<SymbolDef>& symbols() const { return symbols_; }

    int dimension() const;
    /// Canonical order: robot, objects (in order), symbols.
    std::vector<DimId> dim_ids() const;
    /// Geometric bounds; symbol dims span their code bins [-0.5, k - 0.5].
    BoundsMap bounds() const;

    int object_index(const std::string& name) const;  // -1 if unknown
    int symbol_index(const std::string& name) const;  // -1 if unknown
    int robot_dim_index(const std::string& suffix) const;
    int object_dim_index(int object, const std::string& suffix) const;

    bool valid(const State& s) const;

private:
    std::string robot_name_;
    std::vector<DimensionInfo> robot_dims_;
    std::vector<ObjectDef> objects_;
    std::vector<SymbolDef> symbols_;
};

/// Concatenate geometry and symbol codes. Throws std::invalid_argument on an
/// out-of-domain symbol code or a shape mismatch.
Vector encode(const StateSpace& space, const State& s);

/// Inverse of encode; symbol coordinates go to the code whose half-open bin
/// [code - 0.5, code + 0.5) contains them, clamped to the domain.
State decode(const StateSpace& space, const Vector& r);

/// Uniform over every bounded dimension and every symbol domain.
State sample_state(const StateSpace& space, Rng& rng);

/// Geometry within `tol` per coordinate, symbols exactly equal.
bool same_state(const State& a, const State& b, double tol = 1e-9);

/// Flat JSON object keyed by dimension id; symbols by their value names.
std::string state_to_json(const StateSpace& space, const State& s);
State state_from_json(const StateSpace& space, const std::string& json);

/// Wrap an angle into [-pi, pi].
double wrap_angle(double a);

}  // namespace cpzrepair

#endif  // CPZREPAIR_STATE_SPACE_HPP
