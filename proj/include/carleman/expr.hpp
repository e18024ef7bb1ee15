#pragma once

#include <Eigen/Core>
#include <cmath>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

#include "carleman/util.hpp"

namespace carleman {

// Symmetric matrix stored as the packed upper triangle, row major.
class SymMat {
 public:
  SymMat() = default;
  explicit SymMat(int n) : n_(n), a_(std::size_t(n) * (n + 1) / 2, 0.0) {}

  int size() const { return n_; }
  double operator()(int i, int j) const { return a_[idx(i, j)]; }
  double& at(int i, int j) { return a_[idx(i, j)]; }

  const std::vector<double>& packed() const { return a_; }
  std::vector<double>& packed() { return a_; }

  Eigen::MatrixXd dense() const {
    Eigen::MatrixXd m(n_, n_);
    for (int i = 0; i < n_; ++i)
      for (int j = i; j < n_; ++j) m(i, j) = m(j, i) = (*this)(i, j);
    return m;
  }

  bool all_finite() const {
    for (double v : a_)
      if (!std::isfinite(v)) return false;
    return true;
  }

 private:
  std::size_t idx(int i, int j) const {
    if (i > j) std::swap(i, j);
    return std::size_t(i) * n_ - std::size_t(i) * (i - 1) / 2 + std::size_t(j - i);
  }

  int n_ = 0;
  std::vector<double> a_;
};

// Value, gradient and Hessian of a scalar field at one point.
struct Jet2 {
  double value = 0.0;
  Eigen::VectorXd grad;
  SymMat hess;

  explicit Jet2(int n = 0) : grad(Eigen::VectorXd::Zero(n)), hess(n) {}

  int dim() const { return int(grad.size()); }
  bool finite() const { return std::isfinite(value) && grad.allFinite() && hess.all_finite(); }
};

struct Expr;
using ExprPtr = std::shared_ptr<const Expr>;

// A scalar field is a parsed expression; it is evaluated through eval_jet2.
using ScalarField = ExprPtr;

struct Expr {
  enum class Kind {
    constant,
    variable,
    add,
    sub,
    mul,
    div,
    pow_int,  // a^k with a literal integer exponent k >= 0
    exp_fn,
    sin_fn,
    cos_fn,
  };

  Kind kind{};
  double cval = 0.0;  // Kind::constant
  int var = 0;        // Kind::variable
  int exponent = 0;   // Kind::pow_int
  ExprPtr a, b;       // children (b empty for unary nodes)
};

// Variable naming convention.  `spatial` maps x1..xn to slots 0..n-1;
// `time_space` maps t to slot 0 and x1..x{n-1} to slots 1..n-1.
enum class VarConvention { spatial, time_space };

// Parses an expression over `dim` variables.  Grammar (loosest to tightest):
// +,- < *,/ < unary minus < ^, with ^ taking a literal integer exponent >= 0.
// Functions: exp, sin, cos.  Throws ParseError with a byte offset.
ExprPtr parse(std::string_view source, int dim, VarConvention conv = VarConvention::spatial);

// Pretty-prints with minimal parentheses; reparsing yields a structurally
// equal tree.
std::string to_string(const ExprPtr& e, VarConvention conv = VarConvention::spatial);

// Display name of variable slot `index` under a naming convention:
// spatial -> x1, x2, ...; time_space -> t, x1, x2, ...
std::string variable_name(VarConvention conv, int index);

bool structurally_equal(const ExprPtr& a, const ExprPtr& b);

// Number of variable slots the expression actually references (max index + 1).
int min_dimension(const ExprPtr& e);

// Evaluates value/gradient/Hessian at `point` by forward 2-jet propagation.
// Division by zero at the point throws Error(domain); overflow is not an
// error but leaves non-finite entries (check Jet2::finite()).
Jet2 eval_jet2(const ExprPtr& e, const Eigen::VectorXd& point);

// Value-only evaluation (cheaper; same domain rules).
double eval_value(const ExprPtr& e, const Eigen::VectorXd& point);

// Programmatic constructors, used to assemble derived weight fields.
ExprPtr make_constant(double v);
ExprPtr make_variable(int index);
ExprPtr make_add(ExprPtr a, ExprPtr b);
ExprPtr make_sub(ExprPtr a, ExprPtr b);
ExprPtr make_mul(ExprPtr a, ExprPtr b);
ExprPtr make_div(ExprPtr a, ExprPtr b);
ExprPtr make_pow(ExprPtr a, int k);
ExprPtr make_exp(ExprPtr a);
ExprPtr make_sin(ExprPtr a);
ExprPtr make_cos(ExprPtr a);

}  // namespace carleman
