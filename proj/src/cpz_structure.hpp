#ifndef CPZREPAIR_CPZ_STRUCTURE_HPP
#define CPZREPAIR_CPZ_STRUCTURE_HPP

// Compiled evaluation form of a CPZ and its product decomposition.
//
// Dimensions, factors and constraint rows are linked whenever they share a
// generator or constraint term. Each connected group is an independent
// factor of a Cartesian product, so membership, distance and sampling can be
// solved per group.

#include "cpzrepair/cpz.hpp"

#include <utility>
#include <vector>

namespace cpzrepair::detail {

struct Monomial
{
    std::vector<std::pair<int, int>> terms;  // (factor, exponent > 0)

    double value(const Vector& a) const;
};

/// A CPZ flattened for repeated evaluation: monomial term lists instead of
/// dense exponent matrices, and constants folded into c and b.
struct Compiled
{
    Vector c;
    Matrix G;
    Matrix A;
    Vector b;
    std::vector<Monomial> gen;
    std::vector<Monomial> con;
    int p = 0;
    // Factors forced to +-1 by a row of the form alpha a_k^2 = alpha.
    std::vector<int> binary;

    int n() const { return static_cast<int>(c.size()); }
    int m() const { return static_cast<int>(b.size()); }

    void point(const Vector& a, Vector& x) const;
    void point_jacobian(const Vector& a, Vector& x, Matrix& J) const;
    void residual(const Vector& a, Vector& r) const;  // A m(a) - b
    void residual_jacobian(const Vector& a, Vector& r, Matrix& J) const;
};

struct Component
{
    std::vector<int> dims;     // indices into the parent dims
    std::vector<int> factors;  // indices into the parent factors
    Compiled problem;
};

struct Structure
{
    Compiled whole;
    std::vector<Component> components;  // each has >= 1 factor or >= 1 row
    std::vector<int> fixed_dims;        // dims touched by no factor
    Vector fixed_values;                // their (constant) coordinates
    double constant_row_residual = 0.0; // |b| on rows with no factor terms

    static Structure build(const Cpz& S);
};

Monomial monomial_from_column(const ExponentMatrix& E, int col);

}  // namespace cpzrepair::detail

#endif  // CPZREPAIR_CPZ_STRUCTURE_HPP
