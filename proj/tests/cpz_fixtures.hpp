#ifndef CPZREPAIR_TESTS_CPZ_FIXTURES_HPP
#define CPZREPAIR_TESTS_CPZ_FIXTURES_HPP

#include "cpzrepair/cpz.hpp"

#include <random>

namespace fixtures {

using namespace cpzrepair;

// The two-factor CPZ with three constraint rows used as a worked example.
inline Cpz example_se()
{
    Vector c(2);
    c << 1, 0;
    Matrix G(2, 3);
    G << 2, 1, 2, 0, 0, 3;
    ExponentMatrix E(2, 3);
    E << 1, 0, 1, 0, 2, 1;
    Matrix A(3, 3);
    A << 1, 0, 3, 0, 1, 5, 0, 0, 7;
    Vector b(3);
    b << 2, 1, 2;
    ExponentMatrix R(2, 3);
    R << 1, 0, 2, 0, 1, 2;
    return Cpz(c, G, E, A, b, R, {"x", "y"});
}

// Ball of radius d: a1^2 + a2^2 + a3^2 - 0.5 a4 = 0.5.
inline Cpz ball(const Vector& center, double d, std::vector<DimId> dims = {"x", "y", "z"})
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
    return Cpz(center, G, E, A, b, R, std::move(dims));
}

inline Cpz interval(double lo, double hi, DimId id)
{
    Vector c(1);
    c << 0.5 * (lo + hi);
    Matrix G(1, 1);
    G << 0.5 * (hi - lo);
    ExponentMatrix E(1, 1);
    E << 1;
    return Cpz::zonotope(c, G, E, {std::move(id)});
}

inline Vector vec(std::initializer_list<double> v)
{
    Vector out(static_cast<Eigen::Index>(v.size()));
    Eigen::Index i = 0;
    for (double x : v) out[i++] = x;
    return out;
}

// Random CPZ that is nonempty by construction: b = A m(a0) for some a0 in
// the box.
inline Cpz random_cpz(Rng& rng, const std::vector<DimId>& dims, int max_gens = 4, int max_factors = 4,
                      int max_rows = 2)
{
    std::uniform_int_distribution<int> gens(1, max_gens), facs(1, max_factors), rows(0, max_rows), expo(0, 2);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    const int n = static_cast<int>(dims.size());
    const int l = gens(rng), p = facs(rng), m = rows(rng);
    Vector c(n);
    for (int i = 0; i < n; ++i) c[i] = 0.5 * u(rng);
    Matrix G(n, l);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < l; ++j) G(i, j) = 0.6 * u(rng);
    ExponentMatrix E(p, l);
    for (int k = 0; k < p; ++k)
        for (int j = 0; j < l; ++j) E(k, j) = expo(rng);
    // Keep each generator linear in at least one factor so the set is not
    // degenerate in every direction.
    for (int j = 0; j < l; ++j) E(j % p, j) = 1;
    const int q = m > 0 ? m + 1 : 0;
    Matrix A(m, q);
    ExponentMatrix R(p, q);
    for (int i = 0; i < m; ++i)
        for (int j = 0; j < q; ++j) A(i, j) = u(rng);
    for (int k = 0; k < p; ++k)
        for (int j = 0; j < q; ++j) R(k, j) = expo(rng);
    Vector a0(p);
    for (int k = 0; k < p; ++k) a0[k] = 0.8 * u(rng);
    Vector b = Vector::Zero(m);
    for (int j = 0; j < q; ++j) {
        double mono = 1.0;
        for (int k = 0; k < p; ++k) mono *= std::pow(a0[k], R(k, j));
        b += A.col(j) * mono;
    }
    return Cpz(c, G, E, A, b, R, dims);
}

}  // namespace fixtures

#endif
