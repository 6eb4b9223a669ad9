#include <susyfactor/expr.hpp>

#include <cctype>
#include <cmath>
#include <cstdio>
#include <map>
#include <optional>

namespace susyfactor {
namespace detail {

enum class K { Num, VarX, VarT, VarH, Neg, Add, Sub, Mul, Div, Pow, Call, Bump, Cex };

struct Node {
  K k;
  double num = 0.0;       // Num value; Pow exponent; Bump a
  double num2 = 0.0;      // Bump b
  int ivar = 0;           // VarX index; Cex power k
  bool pow_integral = false;
  std::string fn;
  std::vector<NodeP> args;
};

namespace {

std::shared_ptr<Node> make(K k) {
  auto n = std::make_shared<Node>();
  n->k = k;
  return n;
}

NodeP mk_num(double v) {
  auto n = std::make_shared<Node>();
  n->k = K::Num;
  n->num = v;
  return n;
}

bool is_num(const NodeP& n, double v) { return n->k == K::Num && n->num == v; }

// Folding constructors used by symbolic differentiation; the parser only uses
// mk_neg (so "-3" becomes the literal -3 and printing round-trips).
NodeP mk_neg(const NodeP& a) {
  if (a->k == K::Num) return mk_num(-a->num);
  if (a->k == K::Neg) return a->args[0];
  auto n = make(K::Neg);
  n->args = {a};
  return n;
}

NodeP mk_add(const NodeP& a, const NodeP& b) {
  if (is_num(a, 0.0)) return b;
  if (is_num(b, 0.0)) return a;
  if (a->k == K::Num && b->k == K::Num) return mk_num(a->num + b->num);
  auto n = make(K::Add);
  n->args = {a, b};
  return n;
}

NodeP mk_sub(const NodeP& a, const NodeP& b) {
  if (is_num(b, 0.0)) return a;
  if (is_num(a, 0.0)) return mk_neg(b);
  if (a->k == K::Num && b->k == K::Num) return mk_num(a->num - b->num);
  auto n = make(K::Sub);
  n->args = {a, b};
  return n;
}

NodeP mk_mul(const NodeP& a, const NodeP& b) {
  if (is_num(a, 0.0) || is_num(b, 0.0)) return mk_num(0.0);
  if (is_num(a, 1.0)) return b;
  if (is_num(b, 1.0)) return a;
  if (a->k == K::Num && b->k == K::Num) return mk_num(a->num * b->num);
  auto n = make(K::Mul);
  n->args = {a, b};
  return n;
}

NodeP mk_div(const NodeP& a, const NodeP& b) {
  if (is_num(a, 0.0)) return mk_num(0.0);
  if (is_num(b, 1.0)) return a;
  auto n = make(K::Div);
  n->args = {a, b};
  return n;
}

NodeP mk_pow(const NodeP& a, double p, bool integral) {
  if (integral && p == 1.0) return a;
  if (integral && p == 0.0) return mk_num(1.0);
  auto n = make(K::Pow);
  n->args = {a};
  n->num = p;
  n->pow_integral = integral;
  return n;
}

NodeP mk_call(const std::string& fn, const NodeP& a) {
  auto n = make(K::Call);
  n->fn = fn;
  n->args = {a};
  return n;
}

NodeP mk_cex(const NodeP& a, int k) {
  auto n = make(K::Cex);
  n->args = {a};
  n->ivar = k;
  return n;
}

NodeP mk_bump(const NodeP& u, double a, double b) {
  auto n = make(K::Bump);
  n->args = {u};
  n->num = a;
  n->num2 = b;
  return n;
}

// ---------------------------------------------------------------------------
// Tokenizer

enum class Tok { Num, Ident, Plus, Minus, Star, Slash, Caret, LParen, RParen, Comma, End };

struct Token {
  Tok t;
  double num = 0.0;
  std::string ident;
  int line = 1, col = 1;
};

struct Lexer {
  const std::string& s;
  std::size_t pos = 0;
  int line = 1, col = 1;

  explicit Lexer(const std::string& text) : s(text) {}

  void advance(std::size_t k) {
    for (std::size_t i = 0; i < k && pos < s.size(); ++i, ++pos) {
      if (s[pos] == '\n') {
        ++line;
        col = 1;
      } else {
        ++col;
      }
    }
  }

  Token next() {
    while (pos < s.size() && std::isspace(static_cast<unsigned char>(s[pos]))) advance(1);
    Token tok;
    tok.line = line;
    tok.col = col;
    if (pos >= s.size()) {
      tok.t = Tok::End;
      return tok;
    }
    const char c = s[pos];
    if (std::isdigit(static_cast<unsigned char>(c)) ||
        (c == '.' && pos + 1 < s.size() && std::isdigit(static_cast<unsigned char>(s[pos + 1])))) {
      std::size_t start = pos;
      while (pos < s.size() && (std::isdigit(static_cast<unsigned char>(s[pos])) || s[pos] == '.'))
        advance(1);
      if (pos < s.size() && (s[pos] == 'e' || s[pos] == 'E')) {
        std::size_t save = pos;
        int sl = line, sc = col;
        advance(1);
        if (pos < s.size() && (s[pos] == '+' || s[pos] == '-')) advance(1);
        if (pos < s.size() && std::isdigit(static_cast<unsigned char>(s[pos]))) {
          while (pos < s.size() && std::isdigit(static_cast<unsigned char>(s[pos]))) advance(1);
        } else {
          pos = save;
          line = sl;
          col = sc;
        }
      }
      tok.t = Tok::Num;
      tok.num = std::strtod(s.substr(start, pos - start).c_str(), nullptr);
      return tok;
    }
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
      std::size_t start = pos;
      while (pos < s.size() &&
             (std::isalnum(static_cast<unsigned char>(s[pos])) || s[pos] == '_'))
        advance(1);
      tok.t = Tok::Ident;
      tok.ident = s.substr(start, pos - start);
      return tok;
    }
    advance(1);
    switch (c) {
      case '+': tok.t = Tok::Plus; return tok;
      case '-': tok.t = Tok::Minus; return tok;
      case '*': tok.t = Tok::Star; return tok;
      case '/': tok.t = Tok::Slash; return tok;
      case '^': tok.t = Tok::Caret; return tok;
      case '(': tok.t = Tok::LParen; return tok;
      case ')': tok.t = Tok::RParen; return tok;
      case ',': tok.t = Tok::Comma; return tok;
      default:
        throw ParseError(tok.line, tok.col, std::string("unexpected character '") + c + "'");
    }
  }
};

// ---------------------------------------------------------------------------
// Parser

struct Parser {
  Lexer lex;
  Token cur;
  const ParseContext& ctx;

  Parser(const std::string& text, const ParseContext& c) : lex(text), ctx(c) { cur = lex.next(); }

  [[noreturn]] void fail(const std::string& msg) const {
    throw ParseError(cur.line, cur.col, msg);
  }

  void eat(Tok t, const char* what) {
    if (cur.t != t) fail(std::string("expected ") + what);
    cur = lex.next();
  }

  // Constant subtrees (exponents, bump bounds) may not reference variables.
  std::optional<double> fold_const(const NodeP& n) const {
    switch (n->k) {
      case K::Num: return n->num;
      case K::Neg: {
        auto a = fold_const(n->args[0]);
        return a ? std::optional<double>(-*a) : std::nullopt;
      }
      case K::Add: case K::Sub: case K::Mul: case K::Div: {
        auto a = fold_const(n->args[0]), b = fold_const(n->args[1]);
        if (!a || !b) return std::nullopt;
        switch (n->k) {
          case K::Add: return *a + *b;
          case K::Sub: return *a - *b;
          case K::Mul: return *a * *b;
          default: return *a / *b;
        }
      }
      case K::Pow: {
        auto a = fold_const(n->args[0]);
        if (!a) return std::nullopt;
        return n->pow_integral ? jet_pow_int(*a, static_cast<long>(n->num))
                               : std::pow(*a, n->num);
      }
      default: return std::nullopt;
    }
  }

  NodeP parse_expr() {
    NodeP lhs = parse_term();
    while (cur.t == Tok::Plus || cur.t == Tok::Minus) {
      bool plus = cur.t == Tok::Plus;
      cur = lex.next();
      NodeP rhs = parse_term();
      auto n = make(plus ? K::Add : K::Sub);
      n->args = {lhs, rhs};
      lhs = n;
    }
    return lhs;
  }

  NodeP parse_term() {
    NodeP lhs = parse_unary();
    while (cur.t == Tok::Star || cur.t == Tok::Slash) {
      bool star = cur.t == Tok::Star;
      cur = lex.next();
      NodeP rhs = parse_unary();
      auto n = make(star ? K::Mul : K::Div);
      n->args = {lhs, rhs};
      lhs = n;
    }
    return lhs;
  }

  NodeP parse_unary() {
    if (cur.t == Tok::Minus) {
      cur = lex.next();
      return mk_neg(parse_unary());
    }
    return parse_power();
  }

  NodeP parse_power() {
    NodeP base = parse_primary();
    if (cur.t != Tok::Caret) return base;
    Token caret = cur;
    cur = lex.next();
    NodeP expo = parse_unary();
    auto c = fold_const(expo);
    if (!c)
      throw ParseError(caret.line, caret.col, "exponent must be a constant");
    const double p = *c;
    const bool integral = std::nearbyint(p) == p && std::abs(p) < 1e9;
    return mk_pow(base, p, integral);
  }

  NodeP parse_primary() {
    if (cur.t == Tok::Num) {
      NodeP n = mk_num(cur.num);
      cur = lex.next();
      return n;
    }
    if (cur.t == Tok::LParen) {
      cur = lex.next();
      NodeP n = parse_expr();
      eat(Tok::RParen, "')'");
      return n;
    }
    if (cur.t == Tok::Ident) {
      Token id = cur;
      cur = lex.next();
      if (cur.t == Tok::LParen) return parse_call(id);
      return resolve_var(id);
    }
    fail("expected expression");
  }

  NodeP resolve_var(const Token& id) const {
    const std::string& name = id.ident;
    if (name == "h") {
      if (!ctx.allow_h)
        throw ParseError(id.line, id.col, "h is not allowed in this context");
      return make(K::VarH);
    }
    if (name == "t") {
      if (!ctx.t_context)
        throw ParseError(id.line, id.col, "t is only valid in profile (t-context) expressions");
      return make(K::VarT);
    }
    if (name.size() >= 2 && name[0] == 'x') {
      bool digits = true;
      for (std::size_t i = 1; i < name.size(); ++i)
        if (!std::isdigit(static_cast<unsigned char>(name[i]))) digits = false;
      if (digits) {
        if (ctx.t_context)
          throw ParseError(id.line, id.col,
                           "x-variables are not valid in profile (t-context) expressions");
        int idx = std::atoi(name.c_str() + 1);
        if (idx < 1 || idx > ctx.dim)
          throw ParseError(id.line, id.col, "unknown identifier '" + name + "' (dimension is " +
                                                std::to_string(ctx.dim) + ")");
        auto n = make(K::VarX);
        n->ivar = idx - 1;
        return n;
      }
    }
    throw ParseError(id.line, id.col, "unknown identifier '" + name + "'");
  }

  NodeP parse_call(const Token& id) {
    eat(Tok::LParen, "'('");
    std::vector<NodeP> args;
    args.push_back(parse_expr());
    while (cur.t == Tok::Comma) {
      cur = lex.next();
      args.push_back(parse_expr());
    }
    eat(Tok::RParen, "')'");
    const std::string& fn = id.ident;
    static const std::map<std::string, int> unary_fns = {
        {"exp", 1}, {"sin", 1}, {"cos", 1}, {"sqrt", 1}, {"log", 1}, {"tanh", 1}};
    if (auto it = unary_fns.find(fn); it != unary_fns.end()) {
      if (args.size() != 1)
        throw ParseError(id.line, id.col, fn + " takes exactly 1 argument");
      return mk_call(fn, args[0]);
    }
    if (fn == "bump") {
      if (args.size() != 3) throw ParseError(id.line, id.col, "bump takes exactly 3 arguments");
      auto a = fold_const(args[1]), b = fold_const(args[2]);
      if (!a || !b)
        throw ParseError(id.line, id.col, "bump bounds must be constants");
      if (!(*a < *b)) throw ParseError(id.line, id.col, "bump requires a < b");
      return mk_bump(args[0], *a, *b);
    }
    if (fn == "__cex") {
      if (args.size() != 2) throw ParseError(id.line, id.col, "__cex takes exactly 2 arguments");
      auto k = fold_const(args[1]);
      if (!k || std::nearbyint(*k) != *k || *k < 0)
        throw ParseError(id.line, id.col, "__cex power must be a non-negative integer constant");
      return mk_cex(args[0], static_cast<int>(*k));
    }
    throw ParseError(id.line, id.col, "unknown function '" + fn + "'");
  }
};

// ---------------------------------------------------------------------------
// Printer

int prec_of(const NodeP& n) {
  switch (n->k) {
    case K::Add: case K::Sub: return 1;
    case K::Mul: case K::Div: return 2;
    case K::Neg: return 3;
    case K::Pow: return 4;
    default: return 5;
  }
}

std::string fmt_num(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  std::string s(buf);
  // trim to the shortest representation that round-trips
  for (int prec = 1; prec < 17; ++prec) {
    char b2[40];
    std::snprintf(b2, sizeof(b2), "%.*g", prec, v);
    if (std::strtod(b2, nullptr) == v) return b2;
  }
  return s;
}

void print_node(const NodeP& n, std::string& out);

void print_child(const NodeP& c, int parent_prec, bool tight, std::string& out) {
  // tight: right operand of '-' or '/' (needs parens at equal precedence too)
  const int p = prec_of(c);
  const bool neg_atom = c->k == K::Num && c->num < 0;
  const bool parens = p < parent_prec || (tight && p == parent_prec) || neg_atom;
  if (parens) out += '(';
  print_node(c, out);
  if (parens) out += ')';
}

void print_node(const NodeP& n, std::string& out) {
  switch (n->k) {
    case K::Num: out += fmt_num(n->num); return;
    case K::VarX: out += "x" + std::to_string(n->ivar + 1); return;
    case K::VarT: out += "t"; return;
    case K::VarH: out += "h"; return;
    case K::Neg:
      out += '-';
      print_child(n->args[0], 3, true, out);
      return;
    case K::Add:
      print_child(n->args[0], 1, false, out);
      out += " + ";
      print_child(n->args[1], 1, false, out);
      return;
    case K::Sub:
      print_child(n->args[0], 1, false, out);
      out += " - ";
      print_child(n->args[1], 1, true, out);
      return;
    case K::Mul:
      print_child(n->args[0], 2, false, out);
      out += "*";
      print_child(n->args[1], 2, false, out);
      return;
    case K::Div:
      print_child(n->args[0], 2, false, out);
      out += "/";
      print_child(n->args[1], 2, true, out);
      return;
    case K::Pow:
      print_child(n->args[0], 5, true, out);
      out += '^';
      if (n->num < 0) {
        out += '(' + fmt_num(n->num) + ')';
      } else {
        out += fmt_num(n->num);
      }
      return;
    case K::Call:
      out += n->fn + "(";
      print_node(n->args[0], out);
      out += ')';
      return;
    case K::Bump:
      out += "bump(";
      print_node(n->args[0], out);
      out += ", " + fmt_num(n->num) + ", " + fmt_num(n->num2) + ")";
      return;
    case K::Cex:
      out += "__cex(";
      print_node(n->args[0], out);
      out += ", " + std::to_string(n->ivar) + ")";
      return;
  }
}

bool node_equal(const NodeP& a, const NodeP& b) {
  if (a->k != b->k) return false;
  switch (a->k) {
    case K::Num: return a->num == b->num;
    case K::VarX: return a->ivar == b->ivar;
    case K::VarT: case K::VarH: return true;
    case K::Pow:
      if (a->num != b->num || a->pow_integral != b->pow_integral) return false;
      break;
    case K::Call:
      if (a->fn != b->fn) return false;
      break;
    case K::Bump:
      if (a->num != b->num || a->num2 != b->num2) return false;
      break;
    case K::Cex:
      if (a->ivar != b->ivar) return false;
      break;
    default: break;
  }
  if (a->args.size() != b->args.size()) return false;
  for (std::size_t i = 0; i < a->args.size(); ++i)
    if (!node_equal(a->args[i], b->args[i])) return false;
  return true;
}

bool node_contains_h(const NodeP& n) {
  if (n->k == K::VarH) return true;
  for (const auto& a : n->args)
    if (node_contains_h(a)) return true;
  return false;
}

// ---------------------------------------------------------------------------
// Symbolic differentiation. var < 0 means d/dt.

NodeP diff(const NodeP& n, int var) {
  switch (n->k) {
    case K::Num: case K::VarH: return mk_num(0.0);
    case K::VarX: return mk_num(var >= 0 && n->ivar == var ? 1.0 : 0.0);
    case K::VarT: return mk_num(var < 0 ? 1.0 : 0.0);
    case K::Neg: return mk_neg(diff(n->args[0], var));
    case K::Add: return mk_add(diff(n->args[0], var), diff(n->args[1], var));
    case K::Sub: return mk_sub(diff(n->args[0], var), diff(n->args[1], var));
    case K::Mul:
      return mk_add(mk_mul(diff(n->args[0], var), n->args[1]),
                    mk_mul(n->args[0], diff(n->args[1], var)));
    case K::Div: {
      const NodeP& u = n->args[0];
      const NodeP& w = n->args[1];
      return mk_div(mk_sub(mk_mul(diff(u, var), w), mk_mul(u, diff(w, var))),
                    mk_pow(w, 2.0, true));
    }
    case K::Pow: {
      const NodeP& u = n->args[0];
      NodeP du = diff(u, var);
      return mk_mul(mk_mul(mk_num(n->num), mk_pow(u, n->num - 1.0, n->pow_integral)), du);
    }
    case K::Call: {
      const NodeP& u = n->args[0];
      NodeP du = diff(u, var);
      NodeP outer;
      if (n->fn == "exp") outer = mk_call("exp", u);
      else if (n->fn == "sin") outer = mk_call("cos", u);
      else if (n->fn == "cos") outer = mk_neg(mk_call("sin", u));
      else if (n->fn == "sqrt") outer = mk_div(mk_num(0.5), mk_call("sqrt", u));
      else if (n->fn == "log") outer = mk_div(mk_num(1.0), u);
      else if (n->fn == "tanh")
        outer = mk_sub(mk_num(1.0), mk_pow(mk_call("tanh", u), 2.0, true));
      else throw Error("diff: unknown function " + n->fn);
      return mk_mul(outer, du);
    }
    case K::Cex: {
      // d/du [e(u) u^-k] = e(u) u^-(k+2) - k e(u) u^-(k+1)
      const NodeP& u = n->args[0];
      NodeP du = diff(u, var);
      NodeP d = mk_cex(u, n->ivar + 2);
      if (n->ivar > 0)
        d = mk_sub(d, mk_mul(mk_num(static_cast<double>(n->ivar)), mk_cex(u, n->ivar + 1)));
      return mk_mul(d, du);
    }
    case K::Bump: {
      // w = (b-u)/(b-a); d/du bump = -[e'(w) e(1-w) + e(w) e'(1-w)] / d^2 / (b-a)
      // with e'(s) = __cex(s, 2) and d = e(w) + e(1-w).
      const NodeP& u = n->args[0];
      const double a = n->num, b = n->num2;
      NodeP du = diff(u, var);
      NodeP w = mk_mul(mk_sub(mk_num(b), u), mk_num(1.0 / (b - a)));
      NodeP omw = mk_sub(mk_num(1.0), w);
      NodeP numr = mk_add(mk_mul(mk_cex(w, 2), mk_cex(omw, 0)),
                          mk_mul(mk_cex(w, 0), mk_cex(omw, 2)));
      NodeP den = mk_pow(mk_add(mk_cex(w, 0), mk_cex(omw, 0)), 2.0, true);
      NodeP dbump = mk_neg(mk_div(mk_mul(numr, mk_num(1.0 / (b - a))), den));
      return mk_mul(dbump, du);
    }
  }
  throw Error("diff: unreachable");
}

NodeP rebuild_shift(const NodeP& n, int offset) {
  if (n->args.empty() && n->k != K::VarX) return n;
  if (n->k == K::VarX) {
    auto m = make(K::VarX);
    m->ivar = n->ivar + offset;
    return m;
  }
  auto m = std::make_shared<Node>(*n);
  for (auto& a : m->args) a = rebuild_shift(a, offset);
  return m;
}

NodeP rebuild_subst_t(const NodeP& n, const NodeP& repl) {
  if (n->k == K::VarT) return repl;
  if (n->args.empty()) return n;
  auto m = std::make_shared<Node>(*n);
  for (auto& a : m->args) a = rebuild_subst_t(a, repl);
  return m;
}

// ---------------------------------------------------------------------------
// Evaluation

constexpr double kCexCutoff = 2.0e-3;  // exp(-1/s) < 1e-217 below this

inline double value_of(double v) { return v; }
inline double value_of(const Jet2& j) { return j.v; }
inline double value_of(const Jet3& j) { return j.v; }

inline double like_const(double, double c) { return c; }
inline Jet2 like_const(const Jet2& j, double c) { return Jet2::constant(j.dim(), c); }
inline Jet3 like_const(const Jet3& j, double c) { return Jet3::constant(j.dim(), c); }

template <class T>
T eval_cex(const T& s, int k) {
  if (value_of(s) <= kCexCutoff) return like_const(s, 0.0);
  T inv = like_const(s, 1.0) / s;
  T r = jet_exp(-inv);
  if (k > 0) r = r * jet_pow_int(inv, k);
  return r;
}

template <class T>
T eval_node(const NodeP& n, const std::vector<T>& vars, const T& hval) {
  switch (n->k) {
    case K::Num: return like_const(hval, n->num);
    case K::VarH: return hval;
    case K::VarT: return vars.at(0);
    case K::VarX: return vars.at(n->ivar);
    case K::Neg: return -eval_node(n->args[0], vars, hval);
    case K::Add: return eval_node(n->args[0], vars, hval) + eval_node(n->args[1], vars, hval);
    case K::Sub: return eval_node(n->args[0], vars, hval) - eval_node(n->args[1], vars, hval);
    case K::Mul: return eval_node(n->args[0], vars, hval) * eval_node(n->args[1], vars, hval);
    case K::Div: return eval_node(n->args[0], vars, hval) / eval_node(n->args[1], vars, hval);
    case K::Pow: {
      T base = eval_node(n->args[0], vars, hval);
      return n->pow_integral ? jet_pow_int(base, static_cast<long>(n->num))
                             : jet_pow_real(base, n->num);
    }
    case K::Call: {
      T a = eval_node(n->args[0], vars, hval);
      if (n->fn == "exp") return jet_exp(a);
      if (n->fn == "sin") return jet_sin(a);
      if (n->fn == "cos") return jet_cos(a);
      if (n->fn == "sqrt") return jet_sqrt(a);
      if (n->fn == "log") return jet_log(a);
      if (n->fn == "tanh") return jet_tanh(a);
      throw EvalError("unknown function " + n->fn);
    }
    case K::Cex: return eval_cex(eval_node(n->args[0], vars, hval), n->ivar);
    case K::Bump: {
      T u = eval_node(n->args[0], vars, hval);
      const double a = n->num, b = n->num2;
      T w = like_const(u, b / (b - a)) + (-(1.0 / (b - a)) * u);
      T nmr = eval_cex(w, 0);
      T den = nmr + eval_cex(like_const(u, 1.0) - w, 0);
      return nmr / den;
    }
  }
  throw EvalError("eval: unreachable");
}

// unary minus and scalar ops exist for Jet2/Jet3; provide the double versions
// the template needs via the primitives above.

}  // namespace
}  // namespace detail

using detail::NodeP;

bool Expr::contains_h() const { return root_ && detail::node_contains_h(root_); }

namespace {

void check_eval_dims(const Expr& e, const Vec& x) {
  if (e.t_context()) {
    if (x.size() != 1) throw EvalError("t-context expression expects a single variable");
  } else if (x.size() != e.dim()) {
    throw EvalError("point dimension does not match expression context");
  }
}

}  // namespace

double Expr::value(const Vec& x, double h) const {
  check_eval_dims(*this, x);
  std::vector<double> vars(x.data(), x.data() + x.size());
  return detail::eval_node<double>(root_, vars, h);
}

Jet2 Expr::jet2(const Vec& x, double h) const {
  check_eval_dims(*this, x);
  const int n = static_cast<int>(x.size());
  std::vector<Jet2> vars;
  vars.reserve(n);
  for (int i = 0; i < n; ++i) vars.push_back(Jet2::variable(n, i, x[i]));
  return detail::eval_node<Jet2>(root_, vars, Jet2::constant(n, h));
}

Jet3 Expr::jet3(const Vec& x, double h) const {
  check_eval_dims(*this, x);
  const int n = static_cast<int>(x.size());
  std::vector<Jet3> vars;
  vars.reserve(n);
  for (int i = 0; i < n; ++i) vars.push_back(Jet3::variable(n, i, x[i]));
  return detail::eval_node<Jet3>(root_, vars, Jet3::constant(n, h));
}

double Expr::value_t(double t, double h) const {
  Vec x(1);
  x[0] = t;
  return value(x, h);
}

Jet3 Expr::jet3_t(double t, double h) const {
  Vec x(1);
  x[0] = t;
  return jet3(x, h);
}

Expr parse(const std::string& text, const ParseContext& ctx) {
  detail::Parser p(text, ctx);
  NodeP root = p.parse_expr();
  if (p.cur.t != detail::Tok::End) p.fail("unexpected trailing input");
  Expr e;
  e.root_ = root;
  e.dim_ = ctx.t_context ? 1 : ctx.dim;
  e.t_ctx_ = ctx.t_context;
  return e;
}

std::string print(const Expr& e) {
  std::string out;
  detail::print_node(e.root_, out);
  return out;
}

bool structurally_equal(const Expr& a, const Expr& b) {
  return detail::node_equal(a.root_, b.root_);
}

Expr diff_x(const Expr& e, int i) {
  if (e.t_context()) throw Error("diff_x on a t-context expression");
  Expr r = e;
  r.root_ = detail::diff(e.root_, i);
  return r;
}

Expr diff_t(const Expr& e) {
  if (!e.t_context()) throw Error("diff_t on an x-context expression");
  Expr r = e;
  r.root_ = detail::diff(e.root_, -1);
  return r;
}

Expr shift_vars(const Expr& e, int offset, int new_dim) {
  if (e.t_context()) throw Error("shift_vars on a t-context expression");
  Expr r = e;
  r.root_ = detail::rebuild_shift(e.root_, offset);
  r.dim_ = new_dim;
  return r;
}

Expr subst_t_scale(const Expr& e, double c) {
  if (!e.t_context()) throw Error("subst_t_scale on an x-context expression");
  auto t = detail::make(detail::K::VarT);
  auto repl = detail::mk_mul(detail::mk_num(c), t);
  Expr r = e;
  r.root_ = detail::rebuild_subst_t(e.root_, repl);
  return r;
}

Expr subst_t(const Expr& profile, const Expr& inner) {
  if (!profile.t_context()) throw Error("subst_t: profile must be a t-context expression");
  if (inner.t_context()) throw Error("subst_t: inner must be an x-context expression");
  Expr r;
  r.root_ = detail::rebuild_subst_t(profile.root_, inner.root_);
  r.dim_ = inner.dim();
  r.t_ctx_ = false;
  return r;
}

// ---------------------------------------------------------------------------
// ExprBuilder

Expr ExprBuilder::wrap(detail::NodeP n) const {
  Expr e;
  e.root_ = std::move(n);
  e.dim_ = t_ctx_ ? 1 : dim_;
  e.t_ctx_ = t_ctx_;
  return e;
}

Expr ExprBuilder::num(double v) const { return wrap(detail::mk_num(v)); }

Expr ExprBuilder::x(int i) const {
  if (t_ctx_ || i < 0 || i >= dim_) throw Error("ExprBuilder::x: bad index");
  auto n = detail::make(detail::K::VarX);
  n->ivar = i;
  return wrap(n);
}

Expr ExprBuilder::t() const {
  if (!t_ctx_) throw Error("ExprBuilder::t: not a t-context builder");
  return wrap(detail::make(detail::K::VarT));
}

Expr ExprBuilder::h() const { return wrap(detail::make(detail::K::VarH)); }

Expr ExprBuilder::add(const Expr& a, const Expr& b) const {
  return wrap(detail::mk_add(a.root_, b.root_));
}
Expr ExprBuilder::sub(const Expr& a, const Expr& b) const {
  return wrap(detail::mk_sub(a.root_, b.root_));
}
Expr ExprBuilder::mul(const Expr& a, const Expr& b) const {
  return wrap(detail::mk_mul(a.root_, b.root_));
}
Expr ExprBuilder::div(const Expr& a, const Expr& b) const {
  return wrap(detail::mk_div(a.root_, b.root_));
}
Expr ExprBuilder::neg(const Expr& a) const { return wrap(detail::mk_neg(a.root_)); }
Expr ExprBuilder::powi(const Expr& a, long p) const {
  return wrap(detail::mk_pow(a.root_, static_cast<double>(p), true));
}
Expr ExprBuilder::call(const std::string& fn, const Expr& a) const {
  return wrap(detail::mk_call(fn, a.root_));
}
Expr ExprBuilder::bump(const Expr& u, double a, double b) const {
  if (!(a < b)) throw Error("ExprBuilder::bump: requires a < b");
  return wrap(detail::mk_bump(u.root_, a, b));
}

}  // namespace susyfactor
