#ifndef CPZREPAIR_CPZ_HPP
#define CPZREPAIR_CPZ_HPP

/**
 * @file cpz.hpp
 * @brief Constrained polynomial zonotopes and their set algebra.
 *
 * A constrained polynomial zonotope (CPZ) is the point set
 *
 *   { c + sum_j (prod_k a_k^E(k,j)) G(:,j)  |  sum_j (prod_k a_k^R(k,j)) A(:,j) = b,
 *     a in [-1, 1]^p }.
 *
 * Every dimension carries a string identifier so that sets built from
 * different constraint-space transforms can be brought into a common space
 * (see unify()).
 *
 * Exact operations (evaluate_point, intersect, unite, project, unify) are
 * pure matrix constructions. Membership, distances, emptiness and sampling
 * are nonlinear programs over the factor box, solved by multi-start local
 * search; they are sound only up to the configured tolerances.
 */

#include <Eigen/Dense>

#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <random>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

namespace cpzrepair {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;
using ExponentMatrix = Eigen::MatrixXi;
using DimId = std::string;
using Rng = std::mt19937_64;

/// Thrown when operand sizes or dimension identifiers do not line up.
class DimensionError : public std::invalid_argument
{
public:
    using std::invalid_argument::invalid_argument;
};

/// Extent of one bounded dimension.
struct DimensionInfo
{
    DimId id;
    double lower = -1.0;
    double upper = 1.0;

    double extent() const { return upper - lower; }
    double midpoint() const { return 0.5 * (upper + lower); }
};

using BoundsMap = std::map<DimId, DimensionInfo>;

namespace detail {
struct Structure;
}

class Cpz
{
public:
    /// Validates shapes, exponent signs and dimension-id uniqueness.
    Cpz(Vector c, Matrix G, ExponentMatrix E, Matrix A, Vector b, ExponentMatrix R,
        std::vector<DimId> dims);

    /// Unconstrained polynomial zonotope (m = 0).
    static Cpz zonotope(Vector c, Matrix G, ExponentMatrix E, std::vector<DimId> dims);
    /// Single point, no factors.
    static Cpz point(Vector c, std::vector<DimId> dims);

    const Vector& center() const { return c_; }
    const Matrix& generators() const { return G_; }
    const ExponentMatrix& exponents() const { return E_; }
    const Matrix& constraint_generators() const { return A_; }
    const Vector& constraint_values() const { return b_; }
    const ExponentMatrix& constraint_exponents() const { return R_; }
    const std::vector<DimId>& dims() const { return dims_; }

    int dimension() const { return static_cast<int>(c_.size()); }
    int num_generators() const { return static_cast<int>(G_.cols()); }
    int num_factors() const { return static_cast<int>(E_.rows()); }
    int num_constraints() const { return static_cast<int>(A_.rows()); }
    int num_constraint_terms() const { return static_cast<int>(A_.cols()); }

    /// Index of `id` in dims(), or -1.
    int dim_index(const DimId& id) const;

    const detail::Structure& structure() const { return *structure_; }

    /// Exact structural equality (matrices and dims).
    friend bool operator==(const Cpz& a, const Cpz& b);

private:
    Vector c_;
    Matrix G_;
    ExponentMatrix E_;
    Matrix A_;
    Vector b_;
    ExponentMatrix R_;
    std::vector<DimId> dims_;
    std::shared_ptr<const detail::Structure> structure_;
};

/// Tolerances and multi-start settings shared by every NLP-backed query.
struct SolverOptions
{
    double feasibility_tolerance = 1e-6;
    double membership_tolerance = 1e-6;
    int restarts = 16;
    int max_iterations = 200;
    std::uint64_t seed = 0x5eedc0ffeeULL;
};

/// Result of a distance-style query. `confident` is false when no local
/// solve reached a feasible factor assignment.
struct SetDistance
{
    double squared = 0.0;
    bool confident = true;
};

/// Options for boundary_depth().
struct DepthOptions
{
    /// Dimensions that hold enumerated (integer-coded) values. A product
    /// component living only in such dimensions is left by moving one
    /// half-bin, so its depth is `quantum_half_width`^2.
    std::set<DimId> quantized_dims;
    double quantum_half_width = 0.5;
    /// Offset used to confirm that a face point is on the set boundary.
    double probe_step = 1e-4;
};

/// c + sum_j (prod_k a_k^E(k,j)) G(:,j). No feasibility check.
Vector evaluate_point(const Cpz& S, const Vector& a);

/// ||sum_j (prod_k a_k^R(k,j)) A(:,j) - b||_inf.
double constraint_residual(const Cpz& S, const Vector& a);

/// True iff some a in the factor box satisfies the constraints within
/// feasibility tolerance and maps to `point` within membership tolerance.
bool contains(const Cpz& S, const Vector& point, const SolverOptions& opts = {});

/// Exact intersection of two CPZs over identical (same order) dims.
Cpz intersect(const Cpz& S1, const Cpz& S2);

/// Exact union via a selector factor lambda with lambda^2 = 1.
Cpz unite(const Cpz& S1, const Cpz& S2);

/// Keep only the listed dims, in the listed order.
Cpz project(const Cpz& S, const std::vector<DimId>& keep);

/// Re-express S1 and S2 over the common ordered space
/// (D1 \ D2, D1 n D2, D2 \ D1); dims missing from a set are spanned by new
/// factors over their full bounded extent.
std::pair<Cpz, Cpz> unify(const Cpz& S1, const Cpz& S2, const BoundsMap& bounds);

/// A point of S or nullopt when no restart reaches a feasible assignment.
std::optional<Vector> sample_point(const Cpz& S, Rng& rng, int max_restarts = 16,
                                   const SolverOptions& opts = {});

/// Squared distance from `point` to S (0 when contained).
SetDistance distance_to_set(const Cpz& S, const Vector& point, const SolverOptions& opts = {});

/// Approximate squared distance from an interior `point` to the boundary of
/// S, taken over factor-box faces whose image is confirmed to lie on the
/// boundary by an outward probe.
SetDistance boundary_depth(const Cpz& S, const Vector& point, const DepthOptions& depth = {},
                           const SolverOptions& opts = {});

/// Multi-start residual minimization never reaching feasibility. A true
/// answer can be a false positive on hard instances.
bool is_empty(const Cpz& S, int budget = 16, const SolverOptions& opts = {});

/// Interval hull of the unconstrained image, per dimension (lower, upper).
std::pair<Vector, Vector> interval_hull(const Cpz& S);

/// Text record: dims, then c, G, E, A, b, R in row-major order.
std::string to_text(const Cpz& S);
Cpz cpz_from_text(const std::string& text);

}  // namespace cpzrepair

#endif  // CPZREPAIR_CPZ_HPP
