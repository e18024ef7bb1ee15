#include "carleman/expr.hpp"

#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdlib>

namespace carleman {

namespace {

using Kind = Expr::Kind;

std::shared_ptr<Expr> node(Kind k) {
  auto e = std::make_shared<Expr>();
  e->kind = k;
  return e;
}

// ---------------------------------------------------------------------------
// Tokenizer.

struct Token {
  enum class Type { number, ident, op, end };
  Type type = Type::end;
  double num = 0.0;
  bool num_is_int = false;
  long num_int = 0;
  std::string text;  // ident name or operator character
  std::size_t pos = 0;
};

class Lexer {
 public:
  explicit Lexer(std::string_view s) : s_(s) { advance(); }

  const Token& peek() const { return tok_; }
  Token take() {
    Token t = tok_;
    advance();
    return t;
  }

 private:
  void advance() {
    while (i_ < s_.size() && std::isspace(static_cast<unsigned char>(s_[i_]))) ++i_;
    tok_ = Token{};
    tok_.pos = i_;
    if (i_ >= s_.size()) {
      tok_.type = Token::Type::end;
      return;
    }
    const char c = s_[i_];
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') {
      lex_number();
      return;
    }
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
      std::size_t j = i_;
      while (j < s_.size() &&
             (std::isalnum(static_cast<unsigned char>(s_[j])) || s_[j] == '_'))
        ++j;
      tok_.type = Token::Type::ident;
      tok_.text.assign(s_.substr(i_, j - i_));
      i_ = j;
      return;
    }
    if (std::string_view("+-*/^()").find(c) != std::string_view::npos) {
      tok_.type = Token::Type::op;
      tok_.text.assign(1, c);
      ++i_;
      return;
    }
    throw ParseError(std::string("unexpected character '") + c + "'", i_);
  }

  void lex_number() {
    std::size_t j = i_;
    bool is_int = true;
    while (j < s_.size() && std::isdigit(static_cast<unsigned char>(s_[j]))) ++j;
    if (j < s_.size() && s_[j] == '.') {
      is_int = false;
      ++j;
      while (j < s_.size() && std::isdigit(static_cast<unsigned char>(s_[j]))) ++j;
    }
    if (j < s_.size() && (s_[j] == 'e' || s_[j] == 'E')) {
      std::size_t k = j + 1;
      if (k < s_.size() && (s_[k] == '+' || s_[k] == '-')) ++k;
      if (k < s_.size() && std::isdigit(static_cast<unsigned char>(s_[k]))) {
        is_int = false;
        j = k;
        while (j < s_.size() && std::isdigit(static_cast<unsigned char>(s_[j]))) ++j;
      }
    }
    const std::string text(s_.substr(i_, j - i_));
    double v = 0.0;
    auto [p, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
    if (ec != std::errc() || p != text.data() + text.size())
      throw ParseError("malformed number", i_);
    tok_.type = Token::Type::number;
    tok_.num = v;
    tok_.num_is_int = is_int;
    if (is_int) tok_.num_int = std::strtol(text.c_str(), nullptr, 10);
    i_ = j;
  }

  std::string_view s_;
  std::size_t i_ = 0;
  Token tok_;
};

// ---------------------------------------------------------------------------
// Recursive-descent parser.

class Parser {
 public:
  Parser(std::string_view src, int dim, VarConvention conv)
      : lex_(src), dim_(dim), conv_(conv) {}

  ExprPtr run() {
    ExprPtr e = sum();
    const Token& t = lex_.peek();
    if (t.type != Token::Type::end)
      throw ParseError("unexpected trailing input", t.pos);
    return e;
  }

 private:
  ExprPtr sum() {
    ExprPtr e = product();
    for (;;) {
      const Token& t = lex_.peek();
      if (t.type == Token::Type::op && (t.text == "+" || t.text == "-")) {
        const bool plus = t.text == "+";
        lex_.take();
        ExprPtr r = product();
        auto n = node(plus ? Kind::add : Kind::sub);
        n->a = e;
        n->b = r;
        e = n;
      } else {
        return e;
      }
    }
  }

  ExprPtr product() {
    ExprPtr e = factor();
    for (;;) {
      const Token& t = lex_.peek();
      if (t.type == Token::Type::op && (t.text == "*" || t.text == "/")) {
        const bool mul = t.text == "*";
        lex_.take();
        ExprPtr r = factor();
        auto n = node(mul ? Kind::mul : Kind::div);
        n->a = e;
        n->b = r;
        e = n;
      } else {
        return e;
      }
    }
  }

  // Unary minus binds tighter than * but looser than ^, so -x^2 == -(x^2).
  ExprPtr factor() {
    const Token& t = lex_.peek();
    if (t.type == Token::Type::op && t.text == "-") {
      lex_.take();
      ExprPtr inner = factor();
      if (inner->kind == Kind::constant) return make_constant(-inner->cval);
      return make_mul(make_constant(-1.0), inner);
    }
    if (t.type == Token::Type::op && t.text == "+") {
      lex_.take();
      return factor();
    }
    return power();
  }

  ExprPtr power() {
    ExprPtr base = atom();
    const Token& t = lex_.peek();
    if (t.type == Token::Type::op && t.text == "^") {
      lex_.take();
      const Token& e = lex_.peek();
      if (e.type == Token::Type::op && e.text == "-")
        throw ParseError("negative exponent not allowed", e.pos);
      if (e.type != Token::Type::number || !e.num_is_int)
        throw ParseError("integer literal expected after '^'", e.pos);
      Token et = lex_.take();
      const Token& chain = lex_.peek();
      if (chain.type == Token::Type::op && chain.text == "^")
        throw ParseError("chained '^' needs parentheses", chain.pos);
      return make_pow(base, int(et.num_int));
    }
    return base;
  }

  ExprPtr atom() {
    const Token& t = lex_.peek();
    switch (t.type) {
      case Token::Type::number: {
        Token n = lex_.take();
        return make_constant(n.num);
      }
      case Token::Type::ident: {
        Token id = lex_.take();
        const Token& nxt = lex_.peek();
        if (nxt.type == Token::Type::op && nxt.text == "(") {
          Kind k;
          if (id.text == "exp")
            k = Kind::exp_fn;
          else if (id.text == "sin")
            k = Kind::sin_fn;
          else if (id.text == "cos")
            k = Kind::cos_fn;
          else
            throw ParseError("unknown function '" + id.text + "'", id.pos);
          lex_.take();  // '('
          ExprPtr arg = sum();
          expect_close();
          auto n = node(k);
          n->a = arg;
          return n;
        }
        return variable(id);
      }
      case Token::Type::op:
        if (t.text == "(") {
          lex_.take();
          ExprPtr e = sum();
          expect_close();
          return e;
        }
        throw ParseError("operand expected", t.pos);
      case Token::Type::end:
        throw ParseError("operand expected", t.pos);
    }
    throw ParseError("operand expected", t.pos);
  }

  void expect_close() {
    const Token& t = lex_.peek();
    if (t.type != Token::Type::op || t.text != ")")
      throw ParseError("')' expected", t.pos);
    lex_.take();
  }

  ExprPtr variable(const Token& id) {
    int index = -1;
    if (conv_ == VarConvention::time_space && id.text == "t") {
      index = 0;
    } else if (id.text.size() >= 2 && id.text[0] == 'x') {
      long k = 0;
      const char* b = id.text.c_str() + 1;
      char* end = nullptr;
      k = std::strtol(b, &end, 10);
      if (end && *end == '\0' && k >= 1) {
        index = int(k) - 1 + (conv_ == VarConvention::time_space ? 1 : 0);
      }
    }
    if (index < 0)
      throw ParseError("unknown identifier '" + id.text + "'", id.pos);
    if (index >= dim_)
      throw ParseError("variable '" + id.text + "' exceeds dimension " + std::to_string(dim_), id.pos);
    return make_variable(index);
  }

  Lexer lex_;
  int dim_;
  VarConvention conv_;
};

// ---------------------------------------------------------------------------
// Jet arithmetic.

Jet2 jconst(double v, int n) {
  Jet2 j(n);
  j.value = v;
  return j;
}

Jet2 jvar(int idx, double v, int n) {
  Jet2 j(n);
  j.value = v;
  j.grad[idx] = 1.0;
  return j;
}

Jet2 jadd(const Jet2& a, const Jet2& b, bool minus) {
  Jet2 r(a.dim());
  const double s = minus ? -1.0 : 1.0;
  r.value = a.value + s * b.value;
  r.grad = a.grad + s * b.grad;
  auto& rp = r.hess.packed();
  const auto& ap = a.hess.packed();
  const auto& bp = b.hess.packed();
  for (std::size_t i = 0; i < rp.size(); ++i) rp[i] = ap[i] + s * bp[i];
  return r;
}

Jet2 jmul(const Jet2& a, const Jet2& b) {
  const int n = a.dim();
  Jet2 r(n);
  r.value = a.value * b.value;
  r.grad = a.grad * b.value + b.grad * a.value;
  for (int i = 0; i < n; ++i)
    for (int j = i; j < n; ++j)
      r.hess.at(i, j) = a.hess(i, j) * b.value + a.grad[i] * b.grad[j] +
                        a.grad[j] * b.grad[i] + a.value * b.hess(i, j);
  return r;
}

Jet2 jdiv(const Jet2& a, const Jet2& b) {
  if (b.value == 0.0)
    throw Error(ErrorCode::domain, "division by zero at evaluation point");
  const int n = a.dim();
  Jet2 r(n);
  r.value = a.value / b.value;
  r.grad = (a.grad - r.value * b.grad) / b.value;
  for (int i = 0; i < n; ++i)
    for (int j = i; j < n; ++j)
      r.hess.at(i, j) = (a.hess(i, j) - r.value * b.hess(i, j) -
                         r.grad[i] * b.grad[j] - r.grad[j] * b.grad[i]) /
                        b.value;
  return r;
}

// Composition with a scalar function: value u0, first and second derivative
// u1, u2 evaluated at g.value.
Jet2 jchain(const Jet2& g, double u0, double u1, double u2) {
  const int n = g.dim();
  Jet2 r(n);
  r.value = u0;
  r.grad = u1 * g.grad;
  for (int i = 0; i < n; ++i)
    for (int j = i; j < n; ++j)
      r.hess.at(i, j) = u2 * g.grad[i] * g.grad[j] + u1 * g.hess(i, j);
  return r;
}

Jet2 jpow(const Jet2& a, int k) {
  const int n = a.dim();
  if (k == 0) return jconst(1.0, n);
  if (k == 1) return a;
  const double v = a.value;
  const double u0 = std::pow(v, k);
  const double u1 = k * std::pow(v, k - 1);
  const double u2 = double(k) * (k - 1) * ((k == 2) ? 1.0 : std::pow(v, k - 2));
  return jchain(a, u0, u1, u2);
}

Jet2 eval_rec(const Expr& e, const Eigen::VectorXd& x) {
  const int n = int(x.size());
  switch (e.kind) {
    case Kind::constant:
      return jconst(e.cval, n);
    case Kind::variable:
      return jvar(e.var, x[e.var], n);
    case Kind::add:
      return jadd(eval_rec(*e.a, x), eval_rec(*e.b, x), false);
    case Kind::sub:
      return jadd(eval_rec(*e.a, x), eval_rec(*e.b, x), true);
    case Kind::mul:
      return jmul(eval_rec(*e.a, x), eval_rec(*e.b, x));
    case Kind::div:
      return jdiv(eval_rec(*e.a, x), eval_rec(*e.b, x));
    case Kind::pow_int:
      return jpow(eval_rec(*e.a, x), e.exponent);
    case Kind::exp_fn: {
      Jet2 g = eval_rec(*e.a, x);
      const double v = std::exp(g.value);
      return jchain(g, v, v, v);
    }
    case Kind::sin_fn: {
      Jet2 g = eval_rec(*e.a, x);
      const double s = std::sin(g.value), c = std::cos(g.value);
      return jchain(g, s, c, -s);
    }
    case Kind::cos_fn: {
      Jet2 g = eval_rec(*e.a, x);
      const double s = std::sin(g.value), c = std::cos(g.value);
      return jchain(g, c, -s, -c);
    }
  }
  throw Error(ErrorCode::invariant, "eval: corrupt expression node");
}

double eval_value_rec(const Expr& e, const Eigen::VectorXd& x) {
  switch (e.kind) {
    case Kind::constant:
      return e.cval;
    case Kind::variable:
      return x[e.var];
    case Kind::add:
      return eval_value_rec(*e.a, x) + eval_value_rec(*e.b, x);
    case Kind::sub:
      return eval_value_rec(*e.a, x) - eval_value_rec(*e.b, x);
    case Kind::mul:
      return eval_value_rec(*e.a, x) * eval_value_rec(*e.b, x);
    case Kind::div: {
      const double d = eval_value_rec(*e.b, x);
      if (d == 0.0) throw Error(ErrorCode::domain, "division by zero at evaluation point");
      return eval_value_rec(*e.a, x) / d;
    }
    case Kind::pow_int:
      return std::pow(eval_value_rec(*e.a, x), e.exponent);
    case Kind::exp_fn:
      return std::exp(eval_value_rec(*e.a, x));
    case Kind::sin_fn:
      return std::sin(eval_value_rec(*e.a, x));
    case Kind::cos_fn:
      return std::cos(eval_value_rec(*e.a, x));
  }
  throw Error(ErrorCode::invariant, "eval: corrupt expression node");
}

// ---------------------------------------------------------------------------
// Printing.  Precedence levels: 1 sum, 2 product, 3 unary minus, 4 power,
// 5 atom.

int precedence(const Expr& e) {
  switch (e.kind) {
    case Kind::add:
    case Kind::sub:
      return 1;
    case Kind::mul:
      if (e.a->kind == Kind::constant && e.a->cval == -1.0) return 3;
      return 2;
    case Kind::div:
      return 2;
    case Kind::pow_int:
      return 4;
    case Kind::constant:
      return (e.cval < 0.0) ? 3 : 5;
    default:
      return 5;
  }
}

void print_rec(const Expr& e, VarConvention conv, int parent_prec, std::string& out) {
  const int prec = precedence(e);
  const bool parens = prec < parent_prec;
  if (parens) out += '(';
  switch (e.kind) {
    case Kind::constant:
      out += format_exact(e.cval);
      break;
    case Kind::variable:
      out += variable_name(conv, e.var);
      break;
    case Kind::add:
      print_rec(*e.a, conv, 1, out);
      out += " + ";
      print_rec(*e.b, conv, 2, out);
      break;
    case Kind::sub:
      print_rec(*e.a, conv, 1, out);
      out += " - ";
      print_rec(*e.b, conv, 2, out);
      break;
    case Kind::mul:
      if (e.a->kind == Kind::constant && e.a->cval == -1.0) {
        out += '-';
        print_rec(*e.b, conv, 4, out);
        break;
      }
      print_rec(*e.a, conv, 2, out);
      out += "*";
      print_rec(*e.b, conv, 3, out);
      break;
    case Kind::div:
      print_rec(*e.a, conv, 2, out);
      out += "/";
      print_rec(*e.b, conv, 3, out);
      break;
    case Kind::pow_int:
      print_rec(*e.a, conv, 5, out);
      out += "^" + std::to_string(e.exponent);
      break;
    case Kind::exp_fn:
    case Kind::sin_fn:
    case Kind::cos_fn:
      out += (e.kind == Kind::exp_fn) ? "exp" : (e.kind == Kind::sin_fn ? "sin" : "cos");
      out += '(';
      print_rec(*e.a, conv, 0, out);
      out += ')';
      break;
  }
  if (parens) out += ')';
}

void min_dim_rec(const Expr& e, int& d) {
  if (e.kind == Kind::variable) d = std::max(d, e.var + 1);
  if (e.a) min_dim_rec(*e.a, d);
  if (e.b) min_dim_rec(*e.b, d);
}

}  // namespace

ExprPtr parse(std::string_view source, int dim, VarConvention conv) {
  if (dim < 1) throw Error(ErrorCode::dimension, "parse: dimension must be >= 1");
  return Parser(source, dim, conv).run();
}

std::string to_string(const ExprPtr& e, VarConvention conv) {
  std::string out;
  print_rec(*e, conv, 0, out);
  return out;
}

std::string variable_name(VarConvention conv, int index) {
  if (conv == VarConvention::time_space)
    return (index == 0) ? std::string("t") : "x" + std::to_string(index);
  return "x" + std::to_string(index + 1);
}

bool structurally_equal(const ExprPtr& a, const ExprPtr& b) {
  if (a.get() == b.get()) return true;
  if (!a || !b) return false;
  if (a->kind != b->kind) return false;
  switch (a->kind) {
    case Kind::constant:
      return a->cval == b->cval;
    case Kind::variable:
      return a->var == b->var;
    case Kind::pow_int:
      if (a->exponent != b->exponent) return false;
      return structurally_equal(a->a, b->a);
    default:
      if (bool(a->a) != bool(b->a) || bool(a->b) != bool(b->b)) return false;
      if (a->a && !structurally_equal(a->a, b->a)) return false;
      if (a->b && !structurally_equal(a->b, b->b)) return false;
      return true;
  }
}

int min_dimension(const ExprPtr& e) {
  int d = 0;
  min_dim_rec(*e, d);
  return d;
}

Jet2 eval_jet2(const ExprPtr& e, const Eigen::VectorXd& point) {
  if (!e) throw Error(ErrorCode::invariant, "eval_jet2: empty expression");
  if (min_dimension(e) > point.size())
    throw Error(ErrorCode::dimension, "eval_jet2: point has fewer coordinates than the expression uses");
  return eval_rec(*e, point);
}

double eval_value(const ExprPtr& e, const Eigen::VectorXd& point) {
  if (!e) throw Error(ErrorCode::invariant, "eval_value: empty expression");
  return eval_value_rec(*e, point);
}

ExprPtr make_constant(double v) {
  auto e = node(Kind::constant);
  e->cval = v;
  return e;
}
ExprPtr make_variable(int index) {
  if (index < 0) throw Error(ErrorCode::dimension, "make_variable: negative index");
  auto e = node(Kind::variable);
  e->var = index;
  return e;
}
ExprPtr make_add(ExprPtr a, ExprPtr b) {
  auto e = node(Kind::add);
  e->a = std::move(a);
  e->b = std::move(b);
  return e;
}
ExprPtr make_sub(ExprPtr a, ExprPtr b) {
  auto e = node(Kind::sub);
  e->a = std::move(a);
  e->b = std::move(b);
  return e;
}
ExprPtr make_mul(ExprPtr a, ExprPtr b) {
  auto e = node(Kind::mul);
  e->a = std::move(a);
  e->b = std::move(b);
  return e;
}
ExprPtr make_div(ExprPtr a, ExprPtr b) {
  auto e = node(Kind::div);
  e->a = std::move(a);
  e->b = std::move(b);
  return e;
}
ExprPtr make_pow(ExprPtr a, int k) {
  if (k < 0) throw Error(ErrorCode::domain, "make_pow: negative exponent");
  auto e = node(Kind::pow_int);
  e->a = std::move(a);
  e->exponent = k;
  return e;
}
ExprPtr make_exp(ExprPtr a) {
  auto e = node(Kind::exp_fn);
  e->a = std::move(a);
  return e;
}
ExprPtr make_sin(ExprPtr a) {
  auto e = node(Kind::sin_fn);
  e->a = std::move(a);
  return e;
}
ExprPtr make_cos(ExprPtr a) {
  auto e = node(Kind::cos_fn);
  e->a = std::move(a);
  return e;
}

}  // namespace carleman
