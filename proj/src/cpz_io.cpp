#include "cpzrepair/cpz.hpp"
#include "cpzrepair/text_util.hpp"

#include <sstream>

namespace cpzrepair {

namespace {

template <class M>
void write_matrix(std::ostringstream& os, const char* tag, const M& X)
{
    os << tag << ' ' << X.rows() << ' ' << X.cols();
    for (Eigen::Index i = 0; i < X.rows(); ++i)
        for (Eigen::Index j = 0; j < X.cols(); ++j) {
            os << ' ';
            if constexpr (std::is_same_v<typename M::Scalar, double>)
                os << format_double(X(i, j));
            else
                os << X(i, j);
        }
    os << '\n';
}

template <class M>
M read_matrix(std::istringstream& is, const char* tag)
{
    std::string word;
    Eigen::Index rows = 0, cols = 0;
    if (!(is >> word) || word != tag || !(is >> rows >> cols) || rows < 0 || cols < 0)
        throw std::invalid_argument(std::string("cpz text: expected '") + tag + "' block");
    M X(rows, cols);
    for (Eigen::Index i = 0; i < rows; ++i)
        for (Eigen::Index j = 0; j < cols; ++j) {
            if (!(is >> word)) throw std::invalid_argument(std::string("cpz text: truncated '") + tag + "' block");
            if constexpr (std::is_same_v<typename M::Scalar, double>)
                X(i, j) = parse_double(word);
            else
                X(i, j) = static_cast<int>(parse_int(word));
        }
    return X;
}

}  // namespace

std::string to_text(const Cpz& S)
{
    std::ostringstream os;
    os << "cpz\ndims " << S.dimension();
    for (const auto& d : S.dims()) os << ' ' << d;
    os << '\n';
    write_matrix(os, "c", Matrix(S.center()));
    write_matrix(os, "G", S.generators());
    write_matrix(os, "E", S.exponents());
    write_matrix(os, "A", S.constraint_generators());
    write_matrix(os, "b", Matrix(S.constraint_values()));
    write_matrix(os, "R", S.constraint_exponents());
    os << "end\n";
    return os.str();
}

Cpz cpz_from_text(const std::string& text)
{
    std::istringstream is(text);
    std::string word;
    if (!(is >> word) || word != "cpz") throw std::invalid_argument("cpz text: missing 'cpz' header");
    long n = 0;
    if (!(is >> word) || word != "dims" || !(is >> n) || n < 0)
        throw std::invalid_argument("cpz text: expected 'dims <n> ...'");
    std::vector<DimId> dims(static_cast<std::size_t>(n));
    for (auto& d : dims)
        if (!(is >> d)) throw std::invalid_argument("cpz text: truncated dims");
    Matrix c = read_matrix<Matrix>(is, "c");
    Matrix G = read_matrix<Matrix>(is, "G");
    ExponentMatrix E = read_matrix<ExponentMatrix>(is, "E");
    Matrix A = read_matrix<Matrix>(is, "A");
    Matrix b = read_matrix<Matrix>(is, "b");
    ExponentMatrix R = read_matrix<ExponentMatrix>(is, "R");
    if (!(is >> word) || word != "end") throw std::invalid_argument("cpz text: missing 'end'");
    if (c.cols() != 1 && c.size() != 0) throw std::invalid_argument("cpz text: c must be a column");
    if (b.cols() != 1 && b.size() != 0) throw std::invalid_argument("cpz text: b must be a column");
    Vector cv = c.size() ? Vector(c.col(0)) : Vector(c.rows());
    Vector bv = b.size() ? Vector(b.col(0)) : Vector(b.rows());
    return Cpz(std::move(cv), std::move(G), std::move(E), std::move(A), std::move(bv), std::move(R), std::move(dims));
}

}  // namespace cpzrepair
