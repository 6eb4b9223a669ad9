#include <susyfactor/specfile.hpp>

#include <cctype>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>

namespace susyfactor {

namespace {

struct TomlValue {
  enum class T { Num, Str, Bool, Array };
  T t = T::Num;
  double num = 0.0;
  std::string str;
  bool b = false;
  std::vector<TomlValue> arr;
  int line = 0;
};

struct TomlDoc {
  // section -> key -> value ("" is the top level)
  std::map<std::string, std::map<std::string, TomlValue>> sections;
};

struct TomlParser {
  const std::string& s;
  std::size_t pos = 0;
  int line = 1;

  explicit TomlParser(const std::string& text) : s(text) {}

  [[noreturn]] void fail(const std::string& msg) const { throw SpecError(line, msg); }

  void skip_ws_inline() {
    while (pos < s.size() && (s[pos] == ' ' || s[pos] == '\t')) ++pos;
    if (pos < s.size() && s[pos] == '#') {
      while (pos < s.size() && s[pos] != '\n') ++pos;
    }
  }

  void skip_ws_multiline() {
    for (;;) {
      skip_ws_inline();
      if (pos < s.size() && (s[pos] == '\n' || s[pos] == '\r')) {
        if (s[pos] == '\n') ++line;
        ++pos;
        continue;
      }
      return;
    }
  }

  bool eof() const { return pos >= s.size(); }

  TomlValue parse_value() {
    skip_ws_multiline();
    if (eof()) fail("expected a value");
    TomlValue v;
    v.line = line;
    const char c = s[pos];
    if (c == '[') {
      ++pos;
      v.t = TomlValue::T::Array;
      skip_ws_multiline();
      if (!eof() && s[pos] == ']') {
        ++pos;
        return v;
      }
      for (;;) {
        v.arr.push_back(parse_value());
        skip_ws_multiline();
        if (!eof() && s[pos] == ',') {
          ++pos;
          skip_ws_multiline();
          if (!eof() && s[pos] == ']') {  // trailing comma
            ++pos;
            return v;
          }
          continue;
        }
        if (!eof() && s[pos] == ']') {
          ++pos;
          return v;
        }
        fail("expected ',' or ']' in array");
      }
    }
    if (c == '"') {
      ++pos;
      v.t = TomlValue::T::Str;
      while (pos < s.size() && s[pos] != '"') {
        if (s[pos] == '\n') fail("unterminated string");
        if (s[pos] == '\\' && pos + 1 < s.size() && s[pos + 1] == '"') ++pos;
        v.str += s[pos++];
      }
      if (eof()) fail("unterminated string");
      ++pos;
      return v;
    }
    // bare token: number, bool, inf
    std::size_t start = pos;
    while (pos < s.size() && !std::isspace(static_cast<unsigned char>(s[pos])) && s[pos] != ',' &&
           s[pos] != ']' && s[pos] != '#')
      ++pos;
    std::string tok = s.substr(start, pos - start);
    if (tok == "true" || tok == "false") {
      v.t = TomlValue::T::Bool;
      v.b = tok == "true";
      return v;
    }
    if (tok == "inf" || tok == "+inf") {
      v.num = std::numeric_limits<double>::infinity();
      return v;
    }
    if (tok == "-inf") {
      v.num = -std::numeric_limits<double>::infinity();
      return v;
    }
    char* end = nullptr;
    v.num = std::strtod(tok.c_str(), &end);
    if (end == tok.c_str() || *end != '\0') fail("cannot parse value '" + tok + "'");
    return v;
  }

  TomlDoc parse() {
    TomlDoc doc;
    std::string section;
    doc.sections[section];
    while (!eof()) {
      skip_ws_inline();
      if (eof()) break;
      if (s[pos] == '\n' || s[pos] == '\r') {
        if (s[pos] == '\n') ++line;
        ++pos;
        continue;
      }
      if (s[pos] == '[') {
        ++pos;
        std::size_t start = pos;
        while (pos < s.size() && s[pos] != ']' && s[pos] != '\n') ++pos;
        if (eof() || s[pos] != ']') fail("unterminated section header");
        section = s.substr(start, pos - start);
        ++pos;
        doc.sections[section];
        continue;
      }
      // key = value
      std::size_t start = pos;
      while (pos < s.size() && (std::isalnum(static_cast<unsigned char>(s[pos])) || s[pos] == '_'))
        ++pos;
      const std::string key = s.substr(start, pos - start);
      if (key.empty()) fail("expected a key");
      skip_ws_inline();
      if (eof() || s[pos] != '=') fail("expected '=' after key '" + key + "'");
      ++pos;
      TomlValue v = parse_value();
      if (doc.sections[section].count(key)) fail("duplicate key '" + key + "'");
      doc.sections[section][key] = v;
      skip_ws_inline();
      if (!eof() && s[pos] != '\n' && s[pos] != '\r') fail("trailing input after value");
    }
    return doc;
  }
};

const TomlValue* find(const TomlDoc& doc, const std::string& sec, const std::string& key) {
  auto s = doc.sections.find(sec);
  if (s == doc.sections.end()) return nullptr;
  auto k = s->second.find(key);
  if (k == s->second.end()) return nullptr;
  return &k->second;
}

const TomlValue& need(const TomlDoc& doc, const std::string& sec, const std::string& key) {
  const TomlValue* v = find(doc, sec, key);
  if (!v)
    throw SpecError(0, "missing required key '" + key + "'" +
                           (sec.empty() ? "" : " in section [" + sec + "]"));
  return *v;
}

double as_num(const TomlValue& v, const std::string& what) {
  if (v.t != TomlValue::T::Num) throw SpecError(v.line, what + " must be a number");
  return v.num;
}

std::string as_str(const TomlValue& v, const std::string& what) {
  if (v.t != TomlValue::T::Str) throw SpecError(v.line, what + " must be a string");
  return v.str;
}

std::vector<double> as_num_list(const TomlValue& v, const std::string& what) {
  if (v.t != TomlValue::T::Array) throw SpecError(v.line, what + " must be a list");
  std::vector<double> out;
  for (const auto& e : v.arr) out.push_back(as_num(e, what + " entry"));
  return out;
}

Expr parse_entry(const TomlValue& v, const ParseContext& ctx, const std::string& what) {
  const std::string text = as_str(v, what);
  try {
    return parse(text, ctx);
  } catch (const ParseError& e) {
    throw SpecError(v.line, what + ": " + e.what());
  }
}

std::vector<std::vector<ScalarField>> parse_matrix(const TomlValue& v, const ParseContext& ctx,
                                                   int n, const std::string& what) {
  if (v.t != TomlValue::T::Array || static_cast<int>(v.arr.size()) != n)
    throw SpecError(v.line, what + " must be a " + std::to_string(n) + "x" + std::to_string(n) +
                                " matrix of expression strings");
  std::vector<std::vector<ScalarField>> m(n);
  for (int i = 0; i < n; ++i) {
    const TomlValue& row = v.arr[i];
    if (row.t != TomlValue::T::Array || static_cast<int>(row.arr.size()) != n)
      throw SpecError(row.line, what + " row " + std::to_string(i + 1) + " must have " +
                                    std::to_string(n) + " entries");
    for (int j = 0; j < n; ++j)
      m[i].push_back(ScalarField(
          parse_entry(row.arr[j], ctx, what + "[" + std::to_string(i + 1) + "][" +
                                       std::to_string(j + 1) + "]")));
  }
  return m;
}

}  // namespace

SpecFile parse_spec(const std::string& text, const std::string& name) {
  TomlParser tp(text);
  TomlDoc doc = tp.parse();

  SpecFile spec;
  spec.name = name;
  if (const TomlValue* v = find(doc, "", "name")) spec.name = as_str(*v, "name");
  spec.dimension = static_cast<int>(as_num(need(doc, "", "dimension"), "dimension"));
  if (spec.dimension < 1) throw SpecError(0, "dimension must be >= 1");
  const int n = spec.dimension;

  spec.h = {0.05, 0.1, 0.2, 0.4};
  if (const TomlValue* v = find(doc, "", "h")) spec.h = as_num_list(*v, "h");
  for (double h : spec.h)
    if (!(h > 0.0 && h <= 1.0)) throw SpecError(0, "h values must lie in ]0, 1]");

  ParseContext xh{n, false, true};   // coefficients: x and h
  ParseContext xo{n, false, false};  // phases: x only
  ParseContext to{0, true, false};   // profiles: t only

  const Expr phi = parse_entry(need(doc, "phases", "phi"), xo, "phi");
  Expr psi = phi;
  if (const TomlValue* v = find(doc, "phases", "psi")) psi = parse_entry(*v, xo, "psi");

  spec.verify.box.lo = Vec::Constant(n, -2.0);
  spec.verify.box.hi = Vec::Constant(n, 2.0);
  if (const TomlValue* v = find(doc, "verify", "box_min")) {
    auto lo = as_num_list(*v, "box_min");
    if (static_cast<int>(lo.size()) != n) throw SpecError(v->line, "box_min has wrong length");
    for (int i = 0; i < n; ++i) spec.verify.box.lo[i] = lo[i];
  }
  if (const TomlValue* v = find(doc, "verify", "box_max")) {
    auto hi = as_num_list(*v, "box_max");
    if (static_cast<int>(hi.size()) != n) throw SpecError(v->line, "box_max has wrong length");
    for (int i = 0; i < n; ++i) spec.verify.box.hi[i] = hi[i];
  }
  for (int i = 0; i < n; ++i)
    if (!(spec.verify.box.lo[i] < spec.verify.box.hi[i]))
      throw SpecError(0, "verify box is degenerate");
  if (const TomlValue* v = find(doc, "verify", "grid_points"))
    spec.verify.grid_points = static_cast<int>(as_num(*v, "grid_points"));
  if (const TomlValue* v = find(doc, "verify", "test_functions"))
    spec.verify.test_functions = static_cast<int>(as_num(*v, "test_functions"));
  if (const TomlValue* v = find(doc, "verify", "seed"))
    spec.verify.seed = static_cast<std::uint64_t>(as_num(*v, "seed"));
  if (const TomlValue* v = find(doc, "verify", "tol_assumption"))
    spec.verify.tol_assumption = as_num(*v, "tol_assumption");
  if (const TomlValue* v = find(doc, "verify", "tol_eikonal"))
    spec.verify.tol_eikonal = as_num(*v, "tol_eikonal");
  if (const TomlValue* v = find(doc, "verify", "tol_factorization"))
    spec.verify.tol_factorization = as_num(*v, "tol_factorization");
  if (const TomlValue* v = find(doc, "verify", "tol_pde"))
    spec.verify.tol_pde = as_num(*v, "tol_pde");
  for (double t : {spec.verify.tol_assumption, spec.verify.tol_eikonal,
                   spec.verify.tol_factorization, spec.verify.tol_pde})
    if (!(t > 0.0)) throw SpecError(0, "tolerances must be positive");

  // operator
  spec.op.name = spec.name;
  spec.op.f.n = n;
  spec.op.f.A =
      SymMatField::from_full(n, parse_matrix(need(doc, "operator", "A"), xh, n, "A"),
                             spec.verify.box);
  {
    const TomlValue& uv = need(doc, "operator", "U");
    if (uv.t != TomlValue::T::Array || static_cast<int>(uv.arr.size()) != n)
      throw SpecError(uv.line, "U must be a list of " + std::to_string(n) + " expressions");
    for (int k = 0; k < n; ++k)
      spec.op.f.U.push_back(
          ScalarField(parse_entry(uv.arr[k], xh, "U[" + std::to_string(k + 1) + "]")));
  }
  spec.op.f.v = ScalarField(parse_entry(need(doc, "operator", "v"), xh, "v"));
  spec.op.f.phi = ScalarField(phi);
  spec.op.f.psi = ScalarField(psi);

  // theta decomposition
  if (doc.sections.count("theta")) {
    spec.has_theta = true;
    spec.dec.N = 1;
    if (const TomlValue* v = find(doc, "theta", "N"))
      spec.dec.N = static_cast<int>(as_num(*v, "N"));
    spec.dec.m_inf = std::numeric_limits<double>::infinity();
    if (const TomlValue* v = find(doc, "theta", "m_infinity")) {
      if (v->t == TomlValue::T::Str) {
        if (v->str != "inf") throw SpecError(v->line, "m_infinity must be a number or \"inf\"");
      } else {
        spec.dec.m_inf = as_num(*v, "m_infinity");
      }
    }
    const TomlValue& av = need(doc, "theta", "alpha");
    if (av.t != TomlValue::T::Array || av.arr.empty())
      throw SpecError(av.line, "alpha must be a non-empty list of profile expressions");
    for (std::size_t k = 0; k < av.arr.size(); ++k) {
      ThetaTerm term;
      term.alpha = parse_entry(av.arr[k], to, "alpha[" + std::to_string(k + 1) + "]");
      const std::string key = "theta_" + std::to_string(k + 1);
      term.theta = BivecField::from_full(
          n, parse_matrix(need(doc, "theta", key), xh, n, key), spec.verify.box);
      spec.dec.terms.push_back(std::move(term));
    }
  }

  if (doc.sections.count("morse2d")) {
    Morse2dSettings m;
    if (const TomlValue* v = find(doc, "morse2d", "grid_points"))
      m.grid_points = static_cast<int>(as_num(*v, "grid_points"));
    if (const TomlValue* v = find(doc, "morse2d", "saddle_margin"))
      m.saddle_margin = as_num(*v, "saddle_margin");
    if (const TomlValue* v = find(doc, "morse2d", "fit_tol")) m.fit_tol = as_num(*v, "fit_tol");
    if (const TomlValue* v = find(doc, "morse2d", "glue_tol")) m.glue_tol = as_num(*v, "glue_tol");
    if (const TomlValue* v = find(doc, "morse2d", "div_tol")) m.div_tol = as_num(*v, "div_tol");
    spec.morse = m;
  }
  return spec;
}

SpecFile load_spec(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw SpecError(0, "cannot open spec file '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_spec(ss.str(), path);
}

}  // namespace susyfactor
