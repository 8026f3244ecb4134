#include "nip/expr.hpp"

#include <cctype>
#include <cmath>
#include <cstdlib>

namespace nip {

namespace {

[[noreturn]] void fail(const std::string& source, size_t pos, const std::string& msg) {
  throw Error(Errc::config_error,
              "expression '" + source + "': " + msg + " at offset " + std::to_string(pos));
}

}  // namespace

class ExprParser {
 public:
  explicit ExprParser(const std::string& src) : src_(src) {}

  ParsedExpr run() {
    ParsedExpr out;
    out.source_ = src_;
    nodes_ = &out.nodes_;
    pos_ = 0;
    out.root_ = parse_sum();
    skip_ws();
    if (pos_ != src_.size()) fail(src_, pos_, "unexpected trailing input");
    return out;
  }

 private:
  using Node = ParsedExpr::Node;
  using Op = ParsedExpr::Op;

  int push(Op op, double value = 0.0, int a = -1, int b = -1) {
    nodes_->push_back(Node{op, value, a, b});
    return static_cast<int>(nodes_->size()) - 1;
  }

  void skip_ws() {
    while (pos_ < src_.size() && std::isspace(static_cast<unsigned char>(src_[pos_]))) ++pos_;
  }

  bool consume(char c) {
    skip_ws();
    if (pos_ < src_.size() && src_[pos_] == c) {
      ++pos_;
      return true;
    }
    return false;
  }

  int parse_sum() {
    int lhs = parse_product();
    for (;;) {
      if (consume('+'))
        lhs = push(Op::add, 0.0, lhs, parse_product());
      else if (consume('-'))
        lhs = push(Op::sub, 0.0, lhs, parse_product());
      else
        return lhs;
    }
  }

  int parse_product() {
    int lhs = parse_unary();
    for (;;) {
      if (consume('*'))
        lhs = push(Op::mul, 0.0, lhs, parse_unary());
      else if (consume('/'))
        lhs = push(Op::div, 0.0, lhs, parse_unary());
      else
        return lhs;
    }
  }

  int parse_unary() {
    if (consume('-')) return push(Op::neg, 0.0, parse_unary());
    if (consume('+')) return parse_unary();
    return parse_power();
  }

  int parse_power() {
    int base = parse_primary();
    if (consume('^')) return push(Op::pow, 0.0, base, parse_unary());
    return base;
  }

  int parse_primary() {
    skip_ws();
    if (pos_ >= src_.size()) fail(src_, pos_, "expected a value");
    const char c = src_[pos_];
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') return parse_number();
    if (std::isalpha(static_cast<unsigned char>(c))) return parse_name();
    if (c == '(') {
      ++pos_;
      int inner = parse_sum();
      if (!consume(')')) fail(src_, pos_, "missing ')'");
      return inner;
    }
    fail(src_, pos_, std::string("unexpected character '") + c + "'");
  }

  int parse_number() {
    const char* begin = src_.c_str() + pos_;
    char* end = nullptr;
    const double value = std::strtod(begin, &end);
    if (end == begin) fail(src_, pos_, "malformed number");
    pos_ += static_cast<size_t>(end - begin);
    return push(Op::number, value);
  }

  int parse_name() {
    const size_t start = pos_;
    while (pos_ < src_.size() && std::isalnum(static_cast<unsigned char>(src_[pos_]))) ++pos_;
    const std::string name = src_.substr(start, pos_ - start);
    if (name == "t") return push(Op::time);
    if (name == "i") return push(Op::imaginary);
    if (name == "pi") return push(Op::pi);
    Op fn;
    if (name == "sin")
      fn = Op::sin;
    else if (name == "cos")
      fn = Op::cos;
    else if (name == "exp")
      fn = Op::exp;
    else
      fail(src_, start, "unknown name '" + name + "'");
    if (!consume('(')) fail(src_, pos_, "expected '(' after '" + name + "'");
    int arg = parse_sum();
    if (!consume(')')) fail(src_, pos_, "missing ')'");
    return push(fn, 0.0, arg);
  }

  const std::string& src_;
  std::vector<Node>* nodes_ = nullptr;
  size_t pos_ = 0;
};

ParsedExpr ParsedExpr::parse(const std::string& source) { return ExprParser(source).run(); }

Complex ParsedExpr::eval_node(int idx, double t) const {
  const Node& n = nodes_[static_cast<size_t>(idx)];
  switch (n.op) {
    case Op::number: return Complex(n.value, 0.0);
    case Op::time: return Complex(t, 0.0);
    case Op::imaginary: return imag_unit;
    case Op::pi: return Complex(M_PI, 0.0);
    case Op::add: return eval_node(n.a, t) + eval_node(n.b, t);
    case Op::sub: return eval_node(n.a, t) - eval_node(n.b, t);
    case Op::mul: return eval_node(n.a, t) * eval_node(n.b, t);
    case Op::div: return eval_node(n.a, t) / eval_node(n.b, t);
    case Op::pow: return std::pow(eval_node(n.a, t), eval_node(n.b, t));
    case Op::neg: return -eval_node(n.a, t);
    case Op::sin: return std::sin(eval_node(n.a, t));
    case Op::cos: return std::cos(eval_node(n.a, t));
    case Op::exp: return std::exp(eval_node(n.a, t));
  }
  throw Error(Errc::config_error, "expression: corrupt node");
}

Complex ParsedExpr::eval(double t) const {
  if (root_ < 0) throw Error(Errc::config_error, "expression: empty");
  return eval_node(root_, t);
}

MatrixExpr MatrixExpr::parse(const std::vector<std::vector<std::string>>& entries) {
  MatrixExpr m;
  const size_t rows = entries.size();
  for (const auto& row : entries) {
    if (row.size() != rows)
      throw Error(Errc::config_error, "generator: expression matrix must be square");
    std::vector<ParsedExpr> parsed;
    parsed.reserve(row.size());
    for (const auto& cell : row) parsed.push_back(ParsedExpr::parse(cell));
    m.entries_.push_back(std::move(parsed));
  }
  return m;
}

Operator MatrixExpr::eval(double t) const {
  Operator out(rows(), cols());
  for (Eigen::Index r = 0; r < rows(); ++r)
    for (Eigen::Index c = 0; c < cols(); ++c)
      out(r, c) = entries_[static_cast<size_t>(r)][static_cast<size_t>(c)].eval(t);
  return out;
}

}  // namespace nip
