#include "slipstokes/config.hpp"

#include "slipstokes/errors.hpp"

#include <json.hpp>

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cstdio>
#include <cmath>
#include <fstream>
#include <functional>
#include <map>
#include <set>
#include <sstream>
#include <variant>

namespace slipstokes {
namespace {

using json = nlohmann::json;
using Intervals = std::vector<std::pair<double, double>>;
using FieldPtr = std::variant<std::string*, std::uint64_t*, int*, double*, std::array<double, 2>*,
                              Intervals*, std::vector<std::string>*>;

struct FieldDef {
  const char* path;
  std::function<FieldPtr(RunConfig&)> get;
};

// Order here is the canonical serialization order.
const std::vector<FieldDef>& schema() {
  static const std::vector<FieldDef> defs = {
      {"experiment", [](RunConfig& c) -> FieldPtr { return &c.experiment; }},
      {"seed", [](RunConfig& c) -> FieldPtr { return &c.seed; }},
      {"grid.n", [](RunConfig& c) -> FieldPtr { return &c.n; }},
      {"time.horizon", [](RunConfig& c) -> FieldPtr { return &c.horizon; }},
      {"time.time_set", [](RunConfig& c) -> FieldPtr { return &c.time_set; }},
      {"region.shape", [](RunConfig& c) -> FieldPtr { return &c.region.shape; }},
      {"region.x", [](RunConfig& c) -> FieldPtr { return &c.region.x; }},
      {"region.y", [](RunConfig& c) -> FieldPtr { return &c.region.y; }},
      {"region.center", [](RunConfig& c) -> FieldPtr { return &c.region.center; }},
      {"region.radius", [](RunConfig& c) -> FieldPtr { return &c.region.radius; }},
      {"initial.kind", [](RunConfig& c) -> FieldPtr { return &c.initial.kind; }},
      {"initial.mode", [](RunConfig& c) -> FieldPtr { return &c.initial.mode; }},
      {"initial.modes", [](RunConfig& c) -> FieldPtr { return &c.initial.modes; }},
      {"simulate.samples", [](RunConfig& c) -> FieldPtr { return &c.simulate.samples; }},
      {"simulate.steps", [](RunConfig& c) -> FieldPtr { return &c.simulate.steps; }},
      {"diagnostics.cases", [](RunConfig& c) -> FieldPtr { return &c.diagnostics.cases; }},
      {"diagnostics.time_samples",
       [](RunConfig& c) -> FieldPtr { return &c.diagnostics.time_samples; }},
      {"uc_fit.samples", [](RunConfig& c) -> FieldPtr { return &c.uc_fit.samples; }},
      {"uc_fit.holdout", [](RunConfig& c) -> FieldPtr { return &c.uc_fit.holdout; }},
      {"uc_fit.modes", [](RunConfig& c) -> FieldPtr { return &c.uc_fit.modes; }},
      {"obs_constant.modes", [](RunConfig& c) -> FieldPtr { return &c.obs_constant.modes; }},
      {"obs_constant.starts", [](RunConfig& c) -> FieldPtr { return &c.obs_constant.starts; }},
      {"obs_constant.max_iterations",
       [](RunConfig& c) -> FieldPtr { return &c.obs_constant.max_iterations; }},
      {"min_norm.modes", [](RunConfig& c) -> FieldPtr { return &c.min_norm.modes; }},
      {"min_norm.cases", [](RunConfig& c) -> FieldPtr { return &c.min_norm.cases; }},
      {"min_norm.pieces", [](RunConfig& c) -> FieldPtr { return &c.min_norm.pieces; }},
      {"min_norm.eps_initial", [](RunConfig& c) -> FieldPtr { return &c.min_norm.eps_initial; }},
      {"min_norm.eps_factor", [](RunConfig& c) -> FieldPtr { return &c.min_norm.eps_factor; }},
      {"min_norm.eps_floor", [](RunConfig& c) -> FieldPtr { return &c.min_norm.eps_floor; }},
      {"min_norm.max_iterations",
       [](RunConfig& c) -> FieldPtr { return &c.min_norm.max_iterations; }},
      {"min_norm.gradient_tolerance",
       [](RunConfig& c) -> FieldPtr { return &c.min_norm.gradient_tolerance; }},
      {"min_time.budget", [](RunConfig& c) -> FieldPtr { return &c.min_time.budget; }},
      {"min_time.t_lo", [](RunConfig& c) -> FieldPtr { return &c.min_time.t_lo; }},
      {"min_time.t_hi", [](RunConfig& c) -> FieldPtr { return &c.min_time.t_hi; }},
      {"min_time.iterations", [](RunConfig& c) -> FieldPtr { return &c.min_time.iterations; }},
      {"min_time.modes", [](RunConfig& c) -> FieldPtr { return &c.min_time.modes; }},
      {"min_time.relative_time_set",
       [](RunConfig& c) -> FieldPtr { return &c.min_time.relative_time_set; }},
      {"tolerances.energy", [](RunConfig& c) -> FieldPtr { return &c.tolerances.energy; }},
      {"tolerances.log_convexity",
       [](RunConfig& c) -> FieldPtr { return &c.tolerances.log_convexity; }},
      {"tolerances.duality", [](RunConfig& c) -> FieldPtr { return &c.tolerances.duality; }},
      {"tolerances.rho", [](RunConfig& c) -> FieldPtr { return &c.tolerances.rho; }},
      {"tolerances.bang_bang", [](RunConfig& c) -> FieldPtr { return &c.tolerances.bang_bang; }},
      {"tolerances.dispersion",
       [](RunConfig& c) -> FieldPtr { return &c.tolerances.dispersion; }},
      {"tolerances.holdout_violations",
       [](RunConfig& c) -> FieldPtr { return &c.tolerances.holdout_violations; }},
      {"tolerances.refit_growth",
       [](RunConfig& c) -> FieldPtr { return &c.tolerances.refit_growth; }},
      {"output.dir", [](RunConfig& c) -> FieldPtr { return &c.out_dir; }},
      {"output.formats", [](RunConfig& c) -> FieldPtr { return &c.formats; }},
  };
  return defs;
}

[[noreturn]] void config_error(const std::string& message) {
  throw Error(ErrorKind::Config, message);
}

struct Location {
  int line = 0;
  int column = 0;
};
using Locations = std::map<std::string, Location>;

// ---------------------------------------------------------------------------
// key = value reader

class TextReader {
 public:
  TextReader(std::string_view text, std::string origin, Locations& locations)
      : text_(text), origin_(std::move(origin)), locations_(locations) {}

  json read() {
    json root = json::object();
    json* table = &root;
    std::string prefix;
    for (;;) {
      skip_blank_lines();
      if (at_end()) break;
      if (peek() == '[') {
        const Location at = here();
        advance();
        skip_spaces();
        const std::string name = read_key();
        skip_spaces();
        expect(']');
        if (tables_.count(name)) fail(at, "duplicate table [" + name + "]");
        tables_.insert(name);
        table = &descend(root, name, at);
        prefix = name + ".";
        locations_[name] = at;
      } else {
        const Location at = here();
        const std::string key = read_key();
        skip_spaces();
        expect('=');
        skip_spaces();
        json value = read_value();
        const std::string full = prefix + key;
        const auto dot = key.rfind('.');
        json& parent = dot == std::string::npos ? *table : descend(*table, key.substr(0, dot), at);
        const std::string leaf = dot == std::string::npos ? key : key.substr(dot + 1);
        if (parent.contains(leaf)) fail(at, "duplicate key '" + full + "'");
        parent[leaf] = std::move(value);
        locations_[full] = at;
      }
      finish_line();
    }
    return root;
  }

 private:
  bool at_end() const { return pos_ >= text_.size(); }
  char peek() const { return text_[pos_]; }
  Location here() const { return {line_, column_}; }

  void advance() {
    if (text_[pos_] == '\n') {
      ++line_;
      column_ = 1;
    } else {
      ++column_;
    }
    ++pos_;
  }

  [[noreturn]] void fail(Location at, const std::string& message) const {
    config_error(origin_ + ":" + std::to_string(at.line) + ":" + std::to_string(at.column) +
                 ": " + message);
  }
  [[noreturn]] void fail(const std::string& message) const { fail(here(), message); }

  void skip_spaces() {
    while (!at_end() && (peek() == ' ' || peek() == '\t' || peek() == '\r')) advance();
  }

  void skip_comment() {
    if (!at_end() && peek() == '#') {
      while (!at_end() && peek() != '\n') advance();
    }
  }

  void skip_blank_lines() {
    for (;;) {
      skip_spaces();
      skip_comment();
      if (!at_end() && peek() == '\n') {
        advance();
        continue;
      }
      return;
    }
  }

  // Whitespace, comments and newlines, as allowed inside arrays.
  void skip_all() {
    for (;;) {
      skip_spaces();
      skip_comment();
      if (!at_end() && peek() == '\n') {
        advance();
        continue;
      }
      return;
    }
  }

  void finish_line() {
    skip_spaces();
    skip_comment();
    if (at_end()) return;
    if (peek() != '\n') fail("unexpected text after value");
    advance();
  }

  void expect(char c) {
    if (at_end() || peek() != c) fail(std::string("expected '") + c + "'");
    advance();
  }

  static bool key_char(char c) {
    return std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '-' || c == '.';
  }

  std::string read_key() {
    const std::size_t start = pos_;
    while (!at_end() && key_char(peek())) advance();
    std::string key(text_.substr(start, pos_ - start));
    if (key.empty() || key.front() == '.' || key.back() == '.' ||
        key.find("..") != std::string::npos) {
      fail("invalid key");
    }
    return key;
  }

  json& descend(json& root, const std::string& dotted, Location at) {
    json* node = &root;
    std::size_t start = 0;
    for (;;) {
      const auto dot = dotted.find('.', start);
      const std::string part = dotted.substr(start, dot - start);
      json& next = (*node)[part];
      if (next.is_null()) next = json::object();
      if (!next.is_object()) fail(at, "'" + dotted + "' is already a value");
      node = &next;
      if (dot == std::string::npos) return *node;
      start = dot + 1;
    }
  }

  json read_value() {
    if (at_end()) fail("missing value");
    const char c = peek();
    if (c == '"') return read_string();
    if (c == '[') return read_array();
    if (std::isalpha(static_cast<unsigned char>(c))) {
      const Location at = here();
      std::string word;
      while (!at_end() && std::isalpha(static_cast<unsigned char>(peek()))) {
        word += peek();
        advance();
      }
      if (word == "true") return true;
      if (word == "false") return false;
      fail(at, "unknown literal '" + word + "'");
    }
    return read_number();
  }

  json read_string() {
    expect('"');
    std::string out;
    for (;;) {
      if (at_end() || peek() == '\n') fail("unterminated string");
      const char c = peek();
      advance();
      if (c == '"') break;
      if (c != '\\') {
        out += c;
        continue;
      }
      if (at_end()) fail("unterminated escape");
      const char e = peek();
      advance();
      switch (e) {
        case '"': out += '"'; break;
        case '\\': out += '\\'; break;
        case 'n': out += '\n'; break;
        case 't': out += '\t'; break;
        default: fail(std::string("unsupported escape '\\") + e + "'");
      }
    }
    return out;
  }

  json read_array() {
    expect('[');
    json out = json::array();
    skip_all();
    if (!at_end() && peek() == ']') {
      advance();
      return out;
    }
    for (;;) {
      skip_all();
      out.push_back(read_value());
      skip_all();
      if (at_end()) fail("unterminated array");
      if (peek() == ',') {
        advance();
        skip_all();
        if (!at_end() && peek() == ']') {
          advance();
          return out;
        }
        continue;
      }
      expect(']');
      return out;
    }
  }

  json read_number() {
    const Location at = here();
    const std::size_t start = pos_;
    while (!at_end() && (std::isalnum(static_cast<unsigned char>(peek())) || peek() == '+' ||
                         peek() == '-' || peek() == '.')) {
      advance();
    }
    std::string token(text_.substr(start, pos_ - start));
    if (token.empty()) fail(at, "expected a value");
    const std::string body = token.front() == '+' ? token.substr(1) : token;
    const bool is_float = body.find_first_of(".eE") != std::string::npos;
    const char* first = body.data();
    const char* last = body.data() + body.size();
    if (!is_float) {
      if (body.front() != '-') {
        std::uint64_t u = 0;
        const auto r = std::from_chars(first, last, u);
        if (r.ec == std::errc() && r.ptr == last) {
          if (u <= static_cast<std::uint64_t>(INT64_MAX)) return static_cast<std::int64_t>(u);
          return u;
        }
      } else {
        std::int64_t i = 0;
        const auto r = std::from_chars(first, last, i);
        if (r.ec == std::errc() && r.ptr == last) return i;
      }
      fail(at, "invalid integer '" + token + "'");
    }
    double d = 0.0;
    const auto r = std::from_chars(first, last, d);
    if (r.ec != std::errc() || r.ptr != last || !std::isfinite(d)) {
      fail(at, "invalid number '" + token + "'");
    }
    return d;
  }

  std::string_view text_;
  std::string origin_;
  Locations& locations_;
  std::set<std::string> tables_;
  std::size_t pos_ = 0;
  int line_ = 1;
  int column_ = 1;
};

// ---------------------------------------------------------------------------
// json tree -> RunConfig

std::string where(const Locations& locations, const std::string& origin, const std::string& path) {
  const auto it = locations.find(path);
  if (it == locations.end()) return origin + ": field '" + path + "'";
  return origin + ":" + std::to_string(it->second.line) + ":" +
         std::to_string(it->second.column) + ": field '" + path + "'";
}

const json* lookup(const json& root, const std::string& dotted) {
  const json* node = &root;
  std::size_t start = 0;
  for (;;) {
    const auto dot = dotted.find('.', start);
    const std::string part = dotted.substr(start, dot - start);
    if (!node->is_object() || !node->contains(part)) return nullptr;
    node = &(*node)[part];
    if (dot == std::string::npos) return node;
    start = dot + 1;
  }
}

void collect_leaves(const json& node, const std::string& prefix, std::vector<std::string>& out) {
  for (auto it = node.begin(); it != node.end(); ++it) {
    const std::string path = prefix.empty() ? it.key() : prefix + "." + it.key();
    if (it->is_object()) {
      collect_leaves(*it, path, out);
    } else {
      out.push_back(path);
    }
  }
}

double as_double(const json& v, const std::string& context) {
  if (!v.is_number()) config_error(context + " expects a number");
  const double d = v.get<double>();
  if (!std::isfinite(d)) config_error(context + " must be finite");
  return d;
}

std::pair<double, double> as_pair(const json& v, const std::string& context) {
  if (!v.is_array() || v.size() != 2) config_error(context + " expects a pair [a, b]");
  return {as_double(v[0], context), as_double(v[1], context)};
}

void assign(const json& v, FieldPtr target, const std::string& context) {
  std::visit(
      [&](auto* out) {
        using T = std::remove_pointer_t<decltype(out)>;
        if constexpr (std::is_same_v<T, std::string>) {
          if (!v.is_string()) config_error(context + " expects a string");
          *out = v.get<std::string>();
        } else if constexpr (std::is_same_v<T, std::uint64_t>) {
          if (v.is_number_unsigned()) {
            *out = v.get<std::uint64_t>();
          } else if (v.is_number_integer() && v.get<std::int64_t>() >= 0) {
            *out = static_cast<std::uint64_t>(v.get<std::int64_t>());
          } else {
            config_error(context + " expects a non-negative integer");
          }
        } else if constexpr (std::is_same_v<T, int>) {
          if (!v.is_number_integer()) config_error(context + " expects an integer");
          const auto i = v.get<std::int64_t>();
          if (i < INT32_MIN || i > INT32_MAX) config_error(context + " is out of range");
          *out = static_cast<int>(i);
        } else if constexpr (std::is_same_v<T, double>) {
          *out = as_double(v, context);
        } else if constexpr (std::is_same_v<T, std::array<double, 2>>) {
          const auto [a, b] = as_pair(v, context);
          *out = {a, b};
        } else if constexpr (std::is_same_v<T, Intervals>) {
          if (!v.is_array()) config_error(context + " expects a list of [a, b] pairs");
          out->clear();
          for (const auto& item : v) out->push_back(as_pair(item, context));
        } else {
          if (!v.is_array()) config_error(context + " expects a list of strings");
          out->clear();
          for (const auto& item : v) {
            if (!item.is_string()) config_error(context + " expects a list of strings");
            out->push_back(item.get<std::string>());
          }
        }
      },
      target);
}

RunConfig from_tree(const json& root, const Locations& locations, const std::string& origin) {
  if (!root.is_object()) config_error(origin + ": configuration must be a table");
  RunConfig config;
  std::set<std::string> known;
  for (const auto& def : schema()) {
    known.insert(def.path);
    if (const json* v = lookup(root, def.path)) {
      assign(*v, def.get(config), where(locations, origin, def.path));
    }
  }
  std::vector<std::string> leaves;
  collect_leaves(root, "", leaves);
  for (const auto& leaf : leaves) {
    if (!known.count(leaf)) config_error(where(locations, origin, leaf) + " is not a known key");
  }
  validate_config(config);
  return config;
}

std::pair<int, int> line_column(std::string_view text, std::size_t byte) {
  int line = 1, column = 1;
  for (std::size_t i = 0; i < std::min(byte, text.size()); ++i) {
    if (text[i] == '\n') {
      ++line;
      column = 1;
    } else {
      ++column;
    }
  }
  return {line, column};
}

// ---------------------------------------------------------------------------
// serialization

std::string number(double v) {
  char buf[64];
  const auto r = std::to_chars(buf, buf + sizeof buf, v);
  std::string s(buf, r.ptr);
  if (s.find_first_of(".eEn") == std::string::npos) s += ".0";
  return s;
}

std::string quote_string(const std::string& s) {
  std::string out = "\"";
  for (char c : s) {
    switch (c) {
      case '"': out += "\\\""; break;
      case '\\': out += "\\\\"; break;
      case '\n': out += "\\n"; break;
      case '\t': out += "\\t"; break;
      default: out += c;
    }
  }
  return out + "\"";
}

std::string render(FieldPtr value) {
  return std::visit(
      [](auto* v) -> std::string {
        using T = std::remove_pointer_t<decltype(v)>;
        if constexpr (std::is_same_v<T, std::string>) {
          return quote_string(*v);
        } else if constexpr (std::is_same_v<T, std::uint64_t> || std::is_same_v<T, int>) {
          return std::to_string(*v);
        } else if constexpr (std::is_same_v<T, double>) {
          return number(*v);
        } else if constexpr (std::is_same_v<T, std::array<double, 2>>) {
          return "[" + number((*v)[0]) + ", " + number((*v)[1]) + "]";
        } else if constexpr (std::is_same_v<T, Intervals>) {
          std::string s = "[";
          for (std::size_t i = 0; i < v->size(); ++i) {
            s += (i ? ", [" : "[") + number((*v)[i].first) + ", " + number((*v)[i].second) + "]";
          }
          return s + "]";
        } else {
          std::string s = "[";
          for (std::size_t i = 0; i < v->size(); ++i) s += (i ? ", " : "") + quote_string((*v)[i]);
          return s + "]";
        }
      },
      value);
}

void require(bool ok, const std::string& field, const std::string& message) {
  if (!ok) config_error("invalid " + field + ": " + message);
}

}  // namespace

const std::vector<std::string>& experiment_names() {
  static const std::vector<std::string> names = {"simulate",     "diagnostics", "uc-fit",
                                                 "obs-constant", "min-norm",    "min-time"};
  return names;
}

bool RunConfig::wants(std::string_view format) const {
  return std::find(formats.begin(), formats.end(), format) != formats.end();
}

ControlSettings RunConfig::control_settings(int modes) const {
  ControlSettings s;
  s.modes = modes;
  s.eps_initial = min_norm.eps_initial;
  s.eps_factor = min_norm.eps_factor;
  s.eps_floor = min_norm.eps_floor;
  s.pieces_per_interval = min_norm.pieces;
  s.max_iterations = min_norm.max_iterations;
  s.gradient_tolerance = min_norm.gradient_tolerance;
  return s;
}

RegionShape region_shape(const RegionSpec& spec) {
  if (spec.shape == "disk") return Disk{spec.center[0], spec.center[1], spec.radius};
  return Rectangle{spec.x[0], spec.x[1], spec.y[0], spec.y[1]};
}

void validate_config(const RunConfig& c) {
  const auto& names = experiment_names();
  require(std::find(names.begin(), names.end(), c.experiment) != names.end(), "experiment",
          "unknown experiment '" + c.experiment + "'");
  require(c.n >= 2 && c.n <= 256, "grid.n", "must lie in [2, 256]");
  if (c.experiment != "simulate") {
    require(c.n <= kMaxSpectralN, "grid.n",
            "must be <= " + std::to_string(kMaxSpectralN) + " for spectral experiments");
  }
  const int dofs = c.n * c.n;
  require(c.horizon > 0.0, "time.horizon", "must be positive");
  require(!c.time_set.empty(), "time_set", "needs at least one interval");
  for (const auto& [a, b] : c.time_set) {
    require(a >= 0.0 && b <= c.horizon && a < b, "time_set",
            "interval [" + number(a) + ", " + number(b) + "] must satisfy 0 <= a < b <= T");
  }

  require(c.region.shape == "rectangle" || c.region.shape == "disk", "region.shape",
          "must be \"rectangle\" or \"disk\"");
  if (c.region.shape == "rectangle") {
    require(c.region.x[0] < c.region.x[1], "region.x", "needs x0 < x1");
    require(c.region.y[0] < c.region.y[1], "region.y", "needs y0 < y1");
  } else {
    require(c.region.radius > 0.0, "region.radius", "must be positive");
  }
  try {
    build_region_mask(build_grid(c.n), region_shape(c.region));
  } catch (const Error& e) {
    config_error(std::string("invalid region: ") + e.what());
  }

  require(c.initial.kind == "random" || c.initial.kind == "mode", "initial.kind",
          "must be \"random\" or \"mode\"");
  require(c.initial.mode >= 0 && c.initial.mode < dofs, "initial.mode", "must lie in [0, n^2)");
  require(c.initial.modes >= 1, "initial.modes", "must be positive");

  require(c.simulate.samples >= 2, "simulate.samples", "must be >= 2");
  require(c.simulate.steps >= 1, "simulate.steps", "must be positive");
  require(c.diagnostics.cases >= 1, "diagnostics.cases", "must be positive");
  require(c.diagnostics.time_samples >= 2, "diagnostics.time_samples", "must be >= 2");
  require(c.uc_fit.samples >= 10, "uc_fit.samples", "needs at least 10 samples");
  require(c.uc_fit.holdout >= 0, "uc_fit.holdout", "must be non-negative");
  require(c.uc_fit.modes >= 1 && c.uc_fit.modes <= dofs, "uc_fit.modes", "must lie in [1, n^2]");
  require(c.obs_constant.modes >= 1 && c.obs_constant.modes <= dofs, "obs_constant.modes",
          "must lie in [1, n^2]");
  require(c.obs_constant.starts >= 1, "obs_constant.starts", "must be positive");
  require(c.obs_constant.max_iterations >= 1, "obs_constant.max_iterations", "must be positive");

  require(c.min_norm.modes >= 1 && c.min_norm.modes <= dofs, "min_norm.modes",
          "must lie in [1, n^2]");
  require(c.min_norm.cases >= 1, "min_norm.cases", "must be positive");
  require(c.min_norm.pieces >= 1, "min_norm.pieces", "must be positive");
  require(c.min_norm.eps_factor > 1.0, "min_norm.eps_factor", "must exceed 1");
  require(c.min_norm.eps_floor >= 1e-10, "min_norm.eps_floor", "must be >= 1e-10");
  require(c.min_norm.eps_initial >= c.min_norm.eps_floor, "min_norm.eps_initial",
          "must not be below the floor");
  require(c.min_norm.max_iterations >= 1, "min_norm.max_iterations", "must be positive");
  require(c.min_norm.gradient_tolerance > 0.0, "min_norm.gradient_tolerance", "must be positive");

  require(c.min_time.budget > 0.0, "min_time.budget", "must be positive");
  require(c.min_time.t_lo > 0.0, "min_time.t_lo", "must be positive");
  require(c.min_time.t_hi > c.min_time.t_lo, "min_time.t_hi", "must exceed t_lo");
  require(c.min_time.iterations >= 1, "min_time.iterations", "must be positive");
  require(c.min_time.modes >= 1 && c.min_time.modes <= dofs, "min_time.modes",
          "must lie in [1, n^2]");
  require(!c.min_time.relative_time_set.empty(), "min_time.relative_time_set",
          "needs at least one interval");
  for (const auto& [a, b] : c.min_time.relative_time_set) {
    require(a >= 0.0 && b <= 1.0 && a < b, "min_time.relative_time_set",
            "fractions must satisfy 0 <= a < b <= 1");
  }

  const Tolerances& t = c.tolerances;
  for (const auto& [name, value] :
       std::vector<std::pair<std::string, double>>{{"energy", t.energy},
                                                   {"log_convexity", t.log_convexity},
                                                   {"duality", t.duality},
                                                   {"rho", t.rho},
                                                   {"bang_bang", t.bang_bang},
                                                   {"dispersion", t.dispersion},
                                                   {"refit_growth", t.refit_growth}}) {
    require(value > 0.0, "tolerances." + name, "must be positive");
  }
  require(t.holdout_violations >= 0, "tolerances.holdout_violations", "must be non-negative");

  require(!c.out_dir.empty(), "output.dir", "must not be empty");
  for (const auto& f : c.formats) {
    require(f == "csv" || f == "json" || f == "bin", "output.formats",
            "unknown format '" + f + "'");
  }
}

RunConfig parse_config(std::string_view text, const std::string& origin) {
  const auto first = text.find_first_not_of(" \t\r\n");
  if (first == std::string_view::npos) config_error(origin + ": configuration is empty");
  if (text[first] == '{') {
    json root;
    try {
      root = json::parse(text);
    } catch (const json::parse_error& e) {
      const auto [line, column] = line_column(text, e.byte > 0 ? e.byte - 1 : 0);
      config_error(origin + ":" + std::to_string(line) + ":" + std::to_string(column) +
                   ": invalid JSON");
    }
    return from_tree(root, {}, origin);
  }
  Locations locations;
  const json root = TextReader(text, origin, locations).read();
  return from_tree(root, locations, origin);
}

RunConfig parse_config_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) config_error("cannot read configuration file '" + path.string() + "'");
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return parse_config(buffer.str(), path.string());
}

std::string serialize_config(const RunConfig& config) {
  RunConfig copy = config;
  std::string out;
  std::string table;
  for (const auto& def : schema()) {
    const std::string path = def.path;
    const auto dot = path.find('.');
    const std::string section = dot == std::string::npos ? "" : path.substr(0, dot);
    const std::string key = dot == std::string::npos ? path : path.substr(dot + 1);
    if (section != table) {
      out += "\n[" + section + "]\n";
      table = section;
    }
    out += key + " = " + render(def.get(copy)) + "\n";
  }
  return out;
}

bool config_key_known(std::string_view dotted) {
  const auto& defs = schema();
  return std::any_of(defs.begin(), defs.end(),
                     [&](const FieldDef& d) { return dotted == d.path; });
}

std::uint64_t fnv1a64(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string hex64(std::uint64_t value) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(value));
  return buf;
}

std::string config_hash(const RunConfig& config) {
  // Where results are written does not change what is computed.
  RunConfig copy = config;
  copy.out_dir.clear();
  return hex64(fnv1a64(serialize_config(copy)));
}

}  // namespace slipstokes
