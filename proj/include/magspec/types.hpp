#pragma once

#include <array>
#include <complex>
#include <stdexcept>
#include <string>

#include <Eigen/Dense>
#include <Eigen/Sparse>

namespace magspec {

using cplx = std::complex<double>;
using Point = std::array<double, 2>;
using MatC = Eigen::MatrixXcd;
using VecC = Eigen::VectorXcd;
using SpMatC = Eigen::SparseMatrix<cplx>;

inline constexpr cplx I{0.0, 1.0};

// Every failure the library reports carries a category so callers can
// decide whether to continue a sweep or abort.
class Error : public std::runtime_error {
public:
  enum class Kind {
    InvalidInput,
    InvalidModel,
    NoConvergence,
    Degenerate,
    Ambiguous,
    IllConditioned,
    Advisory,
  };
  Error(Kind kind, const std::string& msg) : std::runtime_error(msg), kind_(kind) {}
  Kind kind() const noexcept { return kind_; }

private:
  Kind kind_;
};

inline double norm_inf(const Point& p) { return std::max(std::abs(p[0]), std::abs(p[1])); }

}  // namespace magspec
