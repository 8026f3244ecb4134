#pragma once

#include <string>
#include <vector>

#include "nip/types.hpp"

namespace nip {

/// Scalar expression in the time variable t, parsed once and evaluated per
/// time. Supported atoms: numeric literals, t, i, pi, sin/cos/exp, the
/// operators + - * / ^ and parentheses. Evaluation is complex throughout.
class ParsedExpr {
 public:
  static ParsedExpr parse(const std::string& source);

  Complex eval(double t) const;
  const std::string& source() const { return source_; }

 private:
  enum class Op : uint8_t {
    number, time, imaginary, pi, add, sub, mul, div, pow, neg, sin, cos, exp
  };
  struct Node {
    Op op;
    double value = 0.0;
    int a = -1;
    int b = -1;
  };

  Complex eval_node(int idx, double t) const;

  std::vector<Node> nodes_;
  int root_ = -1;
  std::string source_;

  friend class ExprParser;
};

/// Matrix of expressions; evaluates to a dense complex matrix.
class MatrixExpr {
 public:
  MatrixExpr() = default;
  static MatrixExpr parse(const std::vector<std::vector<std::string>>& entries);

  Eigen::Index rows() const { return static_cast<Eigen::Index>(entries_.size()); }
  Eigen::Index cols() const {
    return entries_.empty() ? 0 : static_cast<Eigen::Index>(entries_.front().size());
  }
  Operator eval(double t) const;

 private:
  std::vector<std::vector<ParsedExpr>> entries_;
};

}  // namespace nip
