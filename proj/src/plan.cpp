#include "iqm/plan.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>

#include "iqm/error.hpp"
#include "iqm/execute.hpp"
#include "iqm/experiments.hpp"

namespace iqm {
namespace {

std::string escape_token(const std::string& key) {
  std::string out;
  for (char c : key) {
    if (c == '~') out += "~0";
    else if (c == '/') out += "~1";
    else out += c;
  }
  return out;
}

std::string child(const std::string& ptr, const std::string& key) { return ptr + "/" + escape_token(key); }
std::string child(const std::string& ptr, std::size_t i) { return ptr + "/" + std::to_string(i); }

void append_utf8(std::string& out, unsigned cp) {
  if (cp < 0x80) {
    out += static_cast<char>(cp);
  } else if (cp < 0x800) {
    out += static_cast<char>(0xC0 | (cp >> 6));
    out += static_cast<char>(0x80 | (cp & 0x3F));
  } else if (cp < 0x10000) {
    out += static_cast<char>(0xE0 | (cp >> 12));
    out += static_cast<char>(0x80 | ((cp >> 6) & 0x3F));
    out += static_cast<char>(0x80 | (cp & 0x3F));
  } else {
    out += static_cast<char>(0xF0 | (cp >> 18));
    out += static_cast<char>(0x80 | ((cp >> 12) & 0x3F));
    out += static_cast<char>(0x80 | ((cp >> 6) & 0x3F));
    out += static_cast<char>(0x80 | (cp & 0x3F));
  }
}

/// Byte offsets of every value (and object key) of an already well-formed
/// JSON text, indexed by JSON pointer.
class OffsetIndex {
 public:
  explicit OffsetIndex(const std::string& text) : text_(text) { value(""); }

  std::size_t locate(const std::string& ptr, bool prefer_key = false) const {
    if (prefer_key)
      if (auto it = keys_.find(ptr); it != keys_.end()) return it->second;
    std::string p = ptr;
    while (true) {
      if (auto it = values_.find(p); it != values_.end()) return it->second;
      if (p.empty()) return 0;
      p.erase(p.rfind('/'));
    }
  }

  const std::vector<std::string>& duplicates() const { return duplicates_; }

 private:
  void ws() {
    while (pos_ < text_.size() && (text_[pos_] == ' ' || text_[pos_] == '\t' || text_[pos_] == '\n' || text_[pos_] == '\r'))
      ++pos_;
  }

  unsigned hex4() {
    unsigned v = 0;
    for (int k = 0; k < 4 && pos_ < text_.size(); ++k, ++pos_) {
      const char c = text_[pos_];
      v = v * 16 + static_cast<unsigned>(c <= '9' ? c - '0' : (c | 0x20) - 'a' + 10);
    }
    return v;
  }

  std::string string_token() {
    std::string out;
    ++pos_;  // opening quote
    while (pos_ < text_.size() && text_[pos_] != '"') {
      if (text_[pos_] != '\\') {
        out += text_[pos_++];
        continue;
      }
      ++pos_;
      const char e = text_[pos_++];
      switch (e) {
        case 'b': out += '\b'; break;
        case 'f': out += '\f'; break;
        case 'n': out += '\n'; break;
        case 'r': out += '\r'; break;
        case 't': out += '\t'; break;
        case 'u': {
          unsigned cp = hex4();
          if (cp >= 0xD800 && cp < 0xDC00 && text_.compare(pos_, 2, "\\u") == 0) {
            pos_ += 2;
            cp = 0x10000 + ((cp - 0xD800) << 10) + (hex4() - 0xDC00);
          }
          append_utf8(out, cp);
          break;
        }
        default: out += e;
      }
    }
    ++pos_;  // closing quote
    return out;
  }

  void value(const std::string& ptr) {
    ws();
    values_[ptr] = pos_;
    if (pos_ >= text_.size()) return;
    const char c = text_[pos_];
    if (c == '{') {
      ++pos_;
      ws();
      if (text_[pos_] == '}') {
        ++pos_;
        return;
      }
      while (pos_ < text_.size()) {
        ws();
        const std::size_t key_at = pos_;
        const auto p = child(ptr, string_token());
        if (keys_.count(p)) duplicates_.push_back(p);
        keys_[p] = key_at;
        ws();
        ++pos_;  // ':'
        value(p);
        ws();
        if (text_[pos_++] == '}') break;
      }
    } else if (c == '[') {
      ++pos_;
      ws();
      if (text_[pos_] == ']') {
        ++pos_;
        return;
      }
      for (std::size_t i = 0; pos_ < text_.size(); ++i) {
        value(child(ptr, i));
        ws();
        if (text_[pos_++] == ']') break;
      }
    } else if (c == '"') {
      string_token();
    } else {
      while (pos_ < text_.size() && std::string_view(",}] \t\r\n").find(text_[pos_]) == std::string_view::npos) ++pos_;
    }
  }

  const std::string& text_;
  std::size_t pos_ = 0;
  std::map<std::string, std::size_t> values_;
  std::map<std::string, std::size_t> keys_;
  std::vector<std::string> duplicates_;
};

std::pair<std::size_t, std::size_t> line_column(const std::string& text, std::size_t offset) {
  std::size_t line = 1, column = 1;
  for (std::size_t i = 0; i < offset && i < text.size(); ++i) {
    if (text[i] == '\n') {
      ++line;
      column = 1;
    } else if ((static_cast<unsigned char>(text[i]) & 0xC0) != 0x80) {
      ++column;
    }
  }
  return {line, column};
}

//---------------------------------------------------------------------------//
// Action argument schemas
//---------------------------------------------------------------------------//

enum class Arg { Label, Labels, Count, Number, Numbers, Point, String, Object, Event, BranchEvent, Tamper };
enum class Ref { None, Generation, Channel, Conditions, Tree, Grid, Scenario };

struct ArgSpec {
  const char* key;
  Arg kind;
  bool required;
  Ref ref = Ref::None;
};

const std::map<std::string, std::vector<ArgSpec>>& action_schemas() {
  static const std::map<std::string, std::vector<ArgSpec>> schemas = {
      {"run_succession",
       {{"generation", Arg::Label, true, Ref::Generation},
        {"channel", Arg::Label, true, Ref::Channel},
        {"trials", Arg::Count, true}}},
      {"build_tree",
       {{"generation", Arg::Label, true, Ref::Generation},
        {"channels", Arg::Labels, true, Ref::Channel},
        {"trials", Arg::Count, true},
        {"tamper", Arg::Tamper, false}}},
      {"measure_joint",
       {{"generation", Arg::Label, true, Ref::Generation},
        {"channels", Arg::Labels, true, Ref::Channel},
        {"trials", Arg::Count, true}}},
      {"interference_deficit",
       {{"first", Arg::Label, true, Ref::Generation},
        {"second", Arg::Label, true, Ref::Generation},
        {"composed", Arg::Label, true, Ref::Generation},
        {"channel", Arg::Label, true, Ref::Channel},
        {"weights", Arg::Numbers, false},
        {"trials", Arg::Count, true}}},
      {"evolution_family",
       {{"generation", Arg::Label, true, Ref::Generation},
        {"conditions", Arg::Label, true, Ref::Conditions},
        {"durations", Arg::Numbers, true},
        {"channels", Arg::Labels, true, Ref::Channel},
        {"trials", Arg::Count, true}}},
      {"run_scenario",
       {{"name", Arg::Label, true, Ref::Scenario}, {"params", Arg::Object, false}, {"backend", Arg::String, false}}},
      {"tof_decode",
       {{"impact", Arg::Point, true},
        {"t", Arg::Number, true},
        {"t0", Arg::Number, true},
        {"mass", Arg::Number, true},
        {"origin", Arg::Point, false},
        {"generation", Arg::Label, false, Ref::Generation}}},
      {"event_dependence",
       {{"tree", Arg::Label, true, Ref::Tree},
        {"branch", Arg::Count, false},
        {"a", Arg::Event, true},
        {"b", Arg::Event, true}}},
      {"cross_branch_joint",
       {{"tree", Arg::Label, true, Ref::Tree},
        {"other_tree", Arg::Label, false, Ref::Tree},
        {"a", Arg::BranchEvent, true},
        {"b", Arg::BranchEvent, true}}},
      {"meta_dependence",
       {{"tree", Arg::Label, true, Ref::Tree},
        {"grid_x", Arg::Label, true, Ref::Grid},
        {"grid_y", Arg::Label, true, Ref::Grid}}},
  };
  return schemas;
}

//---------------------------------------------------------------------------//

class PlanReader {
 public:
  PlanReader(const OffsetIndex& index, const std::string& text, bool strict, std::vector<Diagnostic>& out)
      : index_(index), text_(text), strict_(strict), out_(out) {}

  void report(const std::string& severity, const std::string& kind, const std::string& code, const std::string& msg,
              const std::string& ptr, bool at_key = false) {
    const auto [line, column] = line_column(text_, index_.locate(ptr, at_key));
    out_.push_back({severity, kind, code, msg, ptr, line, column});
  }
  void error(const std::string& code, const std::string& msg, const std::string& ptr, bool at_key = false) {
    report("error", "SemanticError", code, msg, ptr, at_key);
  }

  bool errors() const {
    return std::any_of(out_.begin(), out_.end(), [](const Diagnostic& d) { return d.severity == "error"; });
  }

  /// Type check plus unknown-key rejection.
  bool object(const Json& j, const std::string& ptr, const std::vector<std::string>& keys, const std::string& what) {
    if (!j.is_object()) {
      error("TypeMismatch", what + " must be an object", ptr);
      return false;
    }
    for (const auto& [key, value] : j.items()) {
      if (std::find(keys.begin(), keys.end(), key) != keys.end()) continue;
      const auto msg = "unknown key '" + key + "' in " + what;
      if (strict_) report("error", "SemanticError", "UnknownKey", msg, child(ptr, key), true);
      else report("warning", "SemanticError", "UnknownKey", msg, child(ptr, key), true);
    }
    return true;
  }

  const Json* field(const Json& o, const std::string& key, const std::string& ptr, bool required) {
    if (o.contains(key)) return &o[key];
    if (required) error("MissingKey", "missing required key '" + key + "'", ptr);
    return nullptr;
  }

  std::string string(const Json& o, const std::string& key, const std::string& ptr, bool required) {
    const auto* v = field(o, key, ptr, required);
    if (!v) return {};
    if (!v->is_string()) {
      error("TypeMismatch", "'" + key + "' must be a string", child(ptr, key));
      return {};
    }
    return v->get<std::string>();
  }

  std::optional<double> number(const Json& o, const std::string& key, const std::string& ptr, bool required) {
    const auto* v = field(o, key, ptr, required);
    if (!v) return std::nullopt;
    return number_value(*v, child(ptr, key), "'" + key + "'");
  }

  std::optional<double> number_value(const Json& v, const std::string& ptr, const std::string& what) {
    if (!v.is_number() || !std::isfinite(v.get<double>())) {
      error("TypeMismatch", what + " must be a finite number", ptr);
      return std::nullopt;
    }
    return v.get<double>();
  }

  std::optional<std::uint64_t> count_value(const Json& v, const std::string& ptr, const std::string& what) {
    if (!v.is_number_unsigned() && !(v.is_number_integer() && v.get<std::int64_t>() >= 0)) {
      error("TypeMismatch", what + " must be a nonnegative integer", ptr);
      return std::nullopt;
    }
    return v.get<std::uint64_t>();
  }

  std::optional<std::uint64_t> count(const Json& o, const std::string& key, const std::string& ptr, bool required) {
    const auto* v = field(o, key, ptr, required);
    if (!v) return std::nullopt;
    return count_value(*v, child(ptr, key), "'" + key + "'");
  }

  std::vector<double> numbers(const Json& o, const std::string& key, const std::string& ptr, bool required) {
    std::vector<double> out;
    const auto* v = field(o, key, ptr, required);
    if (!v) return out;
    if (!v->is_array()) {
      error("TypeMismatch", "'" + key + "' must be an array of numbers", child(ptr, key));
      return out;
    }
    for (std::size_t i = 0; i < v->size(); ++i)
      if (auto x = number_value((*v)[i], child(child(ptr, key), i), "'" + key + "' entry")) out.push_back(*x);
    return out;
  }

  std::vector<std::string> strings(const Json& o, const std::string& key, const std::string& ptr, bool required) {
    std::vector<std::string> out;
    const auto* v = field(o, key, ptr, required);
    if (!v) return out;
    if (!v->is_array()) {
      error("TypeMismatch", "'" + key + "' must be an array of strings", child(ptr, key));
      return out;
    }
    for (std::size_t i = 0; i < v->size(); ++i) {
      if (!(*v)[i].is_string()) error("TypeMismatch", "'" + key + "' entries must be strings", child(child(ptr, key), i));
      else out.push_back((*v)[i].get<std::string>());
    }
    return out;
  }

  std::optional<std::complex<double>> complex_value(const Json& v, const std::string& ptr) {
    if (v.is_number()) return std::complex<double>(v.get<double>(), 0.0);
    if (v.is_array() && v.size() == 2 && v[0].is_number() && v[1].is_number())
      return std::complex<double>(v[0].get<double>(), v[1].get<double>());
    error("TypeMismatch", "complex entries are a number or [re, im]", ptr);
    return std::nullopt;
  }

  std::optional<ComplexRows> matrix(const Json& o, const std::string& key, const std::string& ptr, bool required) {
    const auto* v = field(o, key, ptr, required);
    if (!v) return std::nullopt;
    const auto p = child(ptr, key);
    if (!v->is_array() || v->empty()) {
      error("TypeMismatch", "'" + key + "' must be a non-empty array of rows", p);
      return std::nullopt;
    }
    ComplexRows rows;
    for (std::size_t r = 0; r < v->size(); ++r) {
      const auto& row = (*v)[r];
      if (!row.is_array() || row.size() != v->size()) {
        error("DimensionMismatch", "'" + key + "' must be square", child(p, r));
        return std::nullopt;
      }
      rows.emplace_back();
      for (std::size_t c = 0; c < row.size(); ++c) {
        auto z = complex_value(row[c], child(child(p, r), c));
        if (!z) return std::nullopt;
        rows.back().push_back(*z);
      }
    }
    return rows;
  }

  std::optional<RealRows> real_matrix(const Json& o, const std::string& key, const std::string& ptr) {
    const auto rows = matrix(o, key, ptr, false);
    if (!rows) return std::nullopt;
    RealRows out;
    for (std::size_t r = 0; r < rows->size(); ++r) {
      out.emplace_back();
      for (const auto& z : (*rows)[r]) {
        if (z.imag() != 0) error("TypeMismatch", "'" + key + "' must be real", child(child(ptr, key), r));
        out.back().push_back(z.real());
      }
    }
    return out;
  }

  std::optional<Point3> point(const Json& v, const std::string& ptr, const std::string& what) {
    if (!v.is_array() || v.size() != 3) {
      error("TypeMismatch", what + " must be an array of three numbers", ptr);
      return std::nullopt;
    }
    Point3 p{};
    for (std::size_t k = 0; k < 3; ++k) {
      auto x = number_value(v[k], child(ptr, k), what + " coordinate");
      if (!x) return std::nullopt;
      p[k] = *x;
    }
    return p;
  }

  std::optional<SpacetimeDomain> domain(const Json& v, const std::string& ptr) {
    if (!object(v, ptr, {"box_min", "box_max", "t_start", "t_end"}, "space-time domain")) return std::nullopt;
    SpacetimeDomain d;
    bool ok = true;
    for (const char* key : {"box_min", "box_max"}) {
      const auto* f = field(v, key, ptr, true);
      auto p = f ? point(*f, child(ptr, key), std::string("'") + key + "'") : std::nullopt;
      if (!p) {
        ok = false;
        continue;
      }
      (std::string(key) == "box_min" ? d.box_min : d.box_max) = *p;
    }
    const auto ts = number(v, "t_start", ptr, true);
    const auto te = number(v, "t_end", ptr, true);
    if (!ts || !te || !ok) return std::nullopt;
    d.t_start = *ts;
    d.t_end = *te;
    if (!d.well_formed()) {
      error("InvalidDomain", "space-time domain has negative extent", ptr);
      return std::nullopt;
    }
    return d;
  }

  //-------------------------------------------------------------------------//

  ExperimentPlan read(const Json& doc) {
    ExperimentPlan plan;
    if (!object(doc, "",
                {"schema", "backend", "seed", "threads", "outputs", "observables", "conditions", "generations", "grids",
                 "channels", "actions"},
                "plan"))
      return plan;

    plan.schema = string(doc, "schema", "", true);
    if (doc.contains("schema") && doc["schema"].is_string() && plan.schema != kPlanSchema)
      error("UnsupportedSchema", "schema must be \"" + std::string(kPlanSchema) + "\", got \"" + plan.schema + "\"",
            "/schema");
    if (doc.contains("backend")) {
      const auto b = string(doc, "backend", "", true);
      if (b == "quantum") plan.backend = BackendKind::Quantum;
      else if (b == "classical") plan.backend = BackendKind::Classical;
      else if (doc["backend"].is_string())
        error("InvalidValue", "backend must be \"quantum\" or \"classical\"", "/backend");
    }
    if (auto s = count(doc, "seed", "", false)) plan.seed = *s;
    if (auto t = count(doc, "threads", "", false)) {
      if (*t < 1 || *t > 256) error("InvalidValue", "threads must lie in [1, 256]", "/threads");
      plan.threads = static_cast<unsigned>(*t);
    }
    if (const auto* o = field(doc, "outputs", "", false)) {
      if (object(*o, "/outputs", {"report", "csv_dir"}, "outputs")) {
        plan.outputs.report = string(*o, "report", "/outputs", false);
        plan.outputs.csv_dir = string(*o, "csv_dir", "/outputs", false);
      }
    }

    each(doc, "observables", [&](const Json& j, const std::string& p) { read_observable(plan, j, p); });
    each(doc, "conditions", [&](const Json& j, const std::string& p) { read_conditions(plan, j, p); });
    each(doc, "generations", [&](const Json& j, const std::string& p) { read_generation(plan, j, p); });
    each(doc, "grids", [&](const Json& j, const std::string& p) { read_grid(plan, j, p); });
    each(doc, "channels", [&](const Json& j, const std::string& p) { read_channel(plan, j, p); });
    each(doc, "actions", [&](const Json& j, const std::string& p) { read_action(plan, j, p); });
    return plan;
  }

 private:
  template <typename F>
  void each(const Json& doc, const std::string& key, F&& f) {
    if (!doc.contains(key)) return;
    const auto& arr = doc[key];
    if (!arr.is_array()) {
      error("TypeMismatch", "'" + key + "' must be an array", "/" + key);
      return;
    }
    for (std::size_t i = 0; i < arr.size(); ++i) f(arr[i], child("/" + key, i));
  }

  /// A name that must be unique within its namespace.
  bool declare(std::set<std::string>& names, const std::string& name, const std::string& what, const std::string& ptr) {
    if (name.empty()) return false;
    if (!names.insert(name).second) {
      error("DuplicateLabel", what + " '" + name + "' is declared twice", ptr);
      return false;
    }
    return true;
  }

  void undeclared(const std::string& what, const std::string& name, const std::string& ptr) {
    error("UndeclaredLabel", "undeclared " + what + " '" + name + "'", ptr);
  }

  void read_observable(ExperimentPlan& plan, const Json& j, const std::string& p) {
    if (!object(j, p, {"name", "matrix"}, "observable")) return;
    ObservableDecl o;
    o.name = string(j, "name", p, true);
    auto m = matrix(j, "matrix", p, true);
    if (m) o.matrix = std::move(*m);
    declare(observables_, o.name, "observable", child(p, "name"));
    plan.observables.push_back(std::move(o));
  }

  void read_conditions(ExperimentPlan& plan, const Json& j, const std::string& p) {
    if (!object(j, p, {"name", "generator", "rate_matrix"}, "conditions")) return;
    ExternalConditions c;
    c.name = string(j, "name", p, true);
    c.generator = matrix(j, "generator", p, false);
    c.rate_matrix = real_matrix(j, "rate_matrix", p);
    declare(conditions_, c.name, "conditions", child(p, "name"));
    plan.conditions.push_back(std::move(c));
  }

  void read_generation(ExperimentPlan& plan, const Json& j, const std::string& p) {
    if (!j.is_object()) {
      error("TypeMismatch", "generation must be an object", p);
      return;
    }
    GenerationDecl g;
    g.kind = j.contains("kind") && j["kind"].is_string() ? j["kind"].get<std::string>() : "simple";
    std::vector<std::string> keys = {"label", "kind", "trunk_domain"};
    if (g.kind == "simple") keys.insert(keys.end(), {"factors", "amplitudes"});
    else if (g.kind == "composed") keys.insert(keys.end(), {"children", "weights", "phases", "delays"});
    else if (g.kind == "evolved") keys.insert(keys.end(), {"base", "conditions", "duration"});
    else error("InvalidValue", "generation kind must be simple, composed or evolved", child(p, "kind"));
    object(j, p, keys, "generation");
    if (j.contains("kind") && !j["kind"].is_string()) error("TypeMismatch", "'kind' must be a string", child(p, "kind"));

    g.label = string(j, "label", p, true);
    if (j.contains("trunk_domain")) g.trunk_domain = domain(j["trunk_domain"], child(p, "trunk_domain"));

    if (g.kind == "simple") {
      if (const auto* f = field(j, "factors", p, true)) {
        if (!f->is_array() || f->empty()) error("TypeMismatch", "'factors' must be a non-empty array", child(p, "factors"));
        else
          for (std::size_t i = 0; i < f->size(); ++i)
            if (auto d = count_value((*f)[i], child(child(p, "factors"), i), "factor dimension")) {
              if (*d < 1) error("InvalidValue", "factor dimensions are at least 1", child(child(p, "factors"), i));
              g.factors.push_back(*d);
            }
      }
      if (const auto* a = field(j, "amplitudes", p, true)) {
        if (!a->is_array()) error("TypeMismatch", "'amplitudes' must be an array", child(p, "amplitudes"));
        else
          for (std::size_t i = 0; i < a->size(); ++i)
            if (auto z = complex_value((*a)[i], child(child(p, "amplitudes"), i))) g.amplitudes.push_back(*z);
      }
    } else if (g.kind == "composed") {
      g.children = strings(j, "children", p, true);
      g.weights = numbers(j, "weights", p, true);
      g.phases = numbers(j, "phases", p, false);
      g.delays = numbers(j, "delays", p, false);
      for (std::size_t i = 0; i < g.children.size(); ++i)
        if (!generations_.count(g.children[i])) undeclared("generation", g.children[i], child(child(p, "children"), i));
    } else if (g.kind == "evolved") {
      g.base = string(j, "base", p, true);
      g.conditions = string(j, "conditions", p, true);
      if (auto d = number(j, "duration", p, true)) g.duration = *d;
      if (!g.base.empty() && !generations_.count(g.base)) undeclared("generation", g.base, child(p, "base"));
      if (!g.conditions.empty() && !conditions_.count(g.conditions))
        undeclared("conditions", g.conditions, child(p, "conditions"));
    }
    declare(generations_, g.label, "generation", child(p, "label"));
    plan.generations.push_back(std::move(g));
  }

  void read_grid(ExperimentPlan& plan, const Json& j, const std::string& p) {
    if (!object(j, p, {"name", "observable", "spectrum", "bins", "derived_from", "function", "units"}, "grid")) return;
    GridDecl g;
    g.name = string(j, "name", p, true);
    g.units = string(j, "units", p, false);
    g.observable = string(j, "observable", p, false);
    g.derived_from = string(j, "derived_from", p, false);
    if (g.observable.empty() == g.derived_from.empty())
      error("MissingKey", "a grid declares exactly one of 'observable' or 'derived_from'", p);
    if (!g.observable.empty() && !observables_.count(g.observable))
      undeclared("observable", g.observable, child(p, "observable"));
    if (!g.derived_from.empty() && !grids_.count(g.derived_from))
      undeclared("grid", g.derived_from, child(p, "derived_from"));

    if (const auto* s = field(j, "spectrum", p, false)) {
      const auto sp = child(p, "spectrum");
      if (!s->is_array()) error("TypeMismatch", "'spectrum' must be an array", sp);
      else
        for (std::size_t i = 0; i < s->size(); ++i) {
          const auto ep = child(sp, i);
          if (!object((*s)[i], ep, {"value", "code"}, "spectrum value")) continue;
          auto code = number((*s)[i], "code", ep, true);
          if (code) g.spectrum.push_back({string((*s)[i], "value", ep, true), *code});
        }
    }
    if (j.contains("bins")) g.bins = numbers(j, "bins", p, true);
    if (const auto* f = field(j, "function", p, false)) {
      const auto fp = child(p, "function");
      if (object(*f, fp, {"polynomial", "table"}, "function")) {
        FunctionDecl fd;
        if (f->contains("polynomial") == f->contains("table"))
          error("MissingKey", "a function is either 'polynomial' or 'table'", fp);
        if (f->contains("polynomial")) {
          fd.kind = "polynomial";
          fd.coefficients = numbers(*f, "polynomial", fp, true);
        } else if (f->contains("table")) {
          fd.kind = "table";
          const auto& t = (*f)["table"];
          const auto tp = child(fp, "table");
          if (!t.is_array()) error("TypeMismatch", "'table' must be an array of [x, f(x)] pairs", tp);
          else
            for (std::size_t i = 0; i < t.size(); ++i) {
              if (!t[i].is_array() || t[i].size() != 2 || !t[i][0].is_number() || !t[i][1].is_number())
                error("TypeMismatch", "table entries are [x, f(x)] pairs", child(tp, i));
              else fd.table.push_back({t[i][0].get<double>(), t[i][1].get<double>()});
            }
        }
        g.function = std::move(fd);
      }
    }
    if (!g.derived_from.empty() && !g.function) error("MissingKey", "a derived grid needs a 'function'", p);
    if (g.derived_from.empty() && g.function) error("InvalidValue", "'function' only applies to derived grids", child(p, "function"));
    if (!g.observable.empty() && !g.bins && g.spectrum.empty())
      error("MissingKey", "an elementary grid needs a 'spectrum' or 'bins'", p);
    declare(grids_, g.name, "grid", child(p, "name"));
    plan.grids.push_back(std::move(g));
  }

  void read_channel(ExperimentPlan& plan, const Json& j, const std::string& p) {
    if (!object(j, p, {"id", "grid", "apparatus", "subsystem", "branch_domain", "regions"}, "channel")) return;
    ChannelDecl c;
    c.id = string(j, "id", p, true);
    c.grid = string(j, "grid", p, true);
    c.apparatus = string(j, "apparatus", p, false);
    if (j.contains("subsystem")) c.subsystem = count(j, "subsystem", p, true);
    if (j.contains("branch_domain")) c.branch_domain = domain(j["branch_domain"], child(p, "branch_domain"));
    if (const auto* r = field(j, "regions", p, false)) {
      if (!r->is_array()) error("TypeMismatch", "'regions' must be an array", child(p, "regions"));
      else
        for (std::size_t i = 0; i < r->size(); ++i)
          if (auto d = domain((*r)[i], child(child(p, "regions"), i))) c.regions.push_back(*d);
    }
    if (!c.grid.empty() && !grids_.count(c.grid)) undeclared("grid", c.grid, child(p, "grid"));
    if (declare(channels_, c.id, "channel", child(p, "id"))) channel_grid_[c.id] = c.grid;
    plan.channels.push_back(std::move(c));
  }

  void check_ref(Ref ref, const std::string& name, const std::string& ptr) {
    switch (ref) {
      case Ref::Generation:
        if (!generations_.count(name)) undeclared("generation", name, ptr);
        break;
      case Ref::Channel:
        if (!channels_.count(name)) undeclared("channel", name, ptr);
        break;
      case Ref::Conditions:
        if (!conditions_.count(name)) undeclared("conditions", name, ptr);
        break;
      case Ref::Grid:
        if (!grids_.count(name)) undeclared("grid", name, ptr);
        break;
      case Ref::Tree:
        if (!trees_.count(name)) undeclared("tree (an earlier build_tree action id)", name, ptr);
        break;
      case Ref::Scenario: {
        const auto& names = scenario_names();
        if (std::find(names.begin(), names.end(), name) == names.end())
          error("UnknownScenario", "no scenario named '" + name + "'", ptr);
        break;
      }
      case Ref::None: break;
    }
  }

  void check_event(const Json& v, const std::string& ptr) {
    if (v.is_array()) {
      for (std::size_t i = 0; i < v.size(); ++i) count_value(v[i], child(ptr, i), "event outcome index");
    } else if (v.is_object()) {
      if (!object(v, ptr, {"grid", "code"}, "event")) return;
      const auto grid = string(v, "grid", ptr, true);
      number(v, "code", ptr, true);
      if (!grid.empty()) check_ref(Ref::Grid, grid, child(ptr, "grid"));
    } else {
      error("TypeMismatch", "an event is an array of outcome indices or {grid, code}", ptr);
    }
  }

  void read_action(ExperimentPlan& plan, const Json& j, const std::string& p) {
    if (!j.is_object()) {
      error("TypeMismatch", "action must be an object", p);
      return;
    }
    ActionDecl a;
    a.type = string(j, "type", p, true);
    a.id = string(j, "id", p, false);
    const auto& schemas = action_schemas();
    const auto it = schemas.find(a.type);
    if (it == schemas.end()) {
      if (!a.type.empty()) error("UnknownAction", "unknown action type '" + a.type + "'", child(p, "type"));
      return;
    }
    std::vector<std::string> keys = {"type", "id"};
    for (const auto& s : it->second) keys.push_back(s.key);
    object(j, p, keys, a.type + " action");

    for (const auto& s : it->second) {
      const auto* v = field(j, s.key, p, s.required);
      if (!v) continue;
      const auto vp = child(p, s.key);
      const std::string what = std::string("'") + s.key + "'";
      switch (s.kind) {
        case Arg::Label:
        case Arg::String:
          if (!v->is_string()) error("TypeMismatch", what + " must be a string", vp);
          else check_ref(s.ref, v->get<std::string>(), vp);
          break;
        case Arg::Labels:
          if (!v->is_array() || v->empty()) error("TypeMismatch", what + " must be a non-empty array of strings", vp);
          else
            for (std::size_t i = 0; i < v->size(); ++i) {
              if (!(*v)[i].is_string()) error("TypeMismatch", what + " entries must be strings", child(vp, i));
              else check_ref(s.ref, (*v)[i].get<std::string>(), child(vp, i));
            }
          break;
        case Arg::Count:
          count_value(*v, vp, what);
          break;
        case Arg::Number:
          number_value(*v, vp, what);
          break;
        case Arg::Numbers:
          if (!v->is_array() || v->empty()) error("TypeMismatch", what + " must be a non-empty array of numbers", vp);
          else
            for (std::size_t i = 0; i < v->size(); ++i) number_value((*v)[i], child(vp, i), what + " entry");
          break;
        case Arg::Point:
          point(*v, vp, what);
          break;
        case Arg::Object:
          if (!v->is_object()) error("TypeMismatch", what + " must be an object", vp);
          break;
        case Arg::Event:
          check_event(*v, vp);
          break;
        case Arg::BranchEvent:
          if (object(*v, vp, {"branch", "event"}, "branch event")) {
            count(*v, "branch", vp, true);
            if (const auto* e = field(*v, "event", vp, true)) check_event(*e, child(vp, "event"));
          }
          break;
        case Arg::Tamper:
          if (object(*v, vp, {"branch", "event", "probability"}, "tamper")) {
            count(*v, "branch", vp, false);
            if (const auto* e = field(*v, "event", vp, true)) {
              if (!(e->is_string() && e->get<std::string>() == "universe")) check_event(*e, child(vp, "event"));
            }
            if (const auto* pr = field(*v, "probability", vp, true)) {
              bool ok = pr->is_number();
              if (pr->is_string()) {
                try {
                  Ratio r(pr->get<std::string>());
                  ok = true;
                } catch (...) {
                }
              }
              if (!ok) error("TypeMismatch", "'probability' must be a number or \"n/d\"", child(vp, "probability"));
            }
          }
          break;
      }
      if (s.key != std::string("type")) a.args[s.key] = *v;
    }

    if (a.type == "run_scenario" && j.contains("name") && j["name"].is_string()) {
      if (j.contains("backend") && j["backend"].is_string() && j["backend"] != "quantum" && j["backend"] != "classical")
        error("InvalidValue", "backend must be \"quantum\" or \"classical\"", child(p, "backend"));
      if (j.contains("params") && j["params"].is_object()) {
        try {
          check_scenario_params(j["name"].get<std::string>(), j["params"]);
        } catch (const Error& e) {
          if (e.code() == ErrorCode::SchemaViolation) error("SchemaViolation", e.what(), child(p, "params"));
        }
      }
    }
    if (a.type == "meta_dependence" && j.contains("tree") && j["tree"].is_string()) {
      const auto t = trees_.find(j["tree"].get<std::string>());
      for (const char* key : {"grid_x", "grid_y"}) {
        if (t == trees_.end() || !j.contains(key) || !j[key].is_string()) continue;
        if (!t->second.count(j[key].get<std::string>()))
          error("UndeclaredLabel", "grid '" + j[key].get<std::string>() + "' is not measured by tree '" + t->first + "'",
                child(p, key));
      }
    }

    if (!a.id.empty() && declare(action_ids_, a.id, "action id", child(p, "id")) && a.type == "build_tree" &&
        j.contains("channels") && j["channels"].is_array()) {
      auto& grids = trees_[a.id];
      for (const auto& c : j["channels"])
        if (c.is_string() && channel_grid_.count(c.get<std::string>())) grids.insert(channel_grid_[c.get<std::string>()]);
    }
    plan.actions.push_back(std::move(a));
  }

  const OffsetIndex& index_;
  const std::string& text_;
  bool strict_;
  std::vector<Diagnostic>& out_;
  std::set<std::string> observables_, conditions_, generations_, grids_, channels_, action_ids_;
  std::map<std::string, std::string> channel_grid_;
  std::map<std::string, std::set<std::string>> trees_;
};

/// Elaborates the plan and checks joint requests for static incompatibility.
void static_checks(const ExperimentPlan& plan, PlanReader& reader) {
  Elaboration e;
  try {
    e = elaborate(plan);
  } catch (const ElaborationError& err) {
    reader.error(std::string(to_string(err.code())), err.what(), err.pointer());
    return;
  }
  for (std::size_t i = 0; i < plan.actions.size(); ++i) {
    const auto& a = plan.actions[i];
    const auto p = child(child("", "actions"), i);
    if (a.type == "measure_joint" || a.type == "build_tree" || a.type == "evolution_family") {
      const auto channels = e.channel_list(a.args.at("channels"));
      const auto& g = e.lab->oracle_state(e.lab->handle(a.args.at("generation").get<std::string>()));
      for (const auto& ch : channels) {
        if (ch.subsystem && *ch.subsystem >= g.system_count())
          reader.error("SystemCountMismatch",
                       "channel '" + ch.id + "' targets subsystem " + std::to_string(*ch.subsystem) + " of '" +
                           a.args.at("generation").get<std::string>() + "', which has " +
                           std::to_string(g.system_count()) + " system(s)",
                       child(p, "channels"));
        else if (!ch.subsystem && g.system_count() != 1)
          reader.error("SystemCountMismatch",
                       "channel '" + ch.id + "' names no subsystem but '" + a.args.at("generation").get<std::string>() +
                           "' has " + std::to_string(g.system_count()) + " systems",
                       child(p, "channels"));
      }
      if (a.type != "measure_joint") continue;
      for (std::size_t x = 0; x < channels.size(); ++x)
        for (std::size_t y = x + 1; y < channels.size(); ++y)
          if (!compatible(e.lab->backend(), channels[x], channels[y]))
            reader.error("IncompatibleGrids",
                         "grids '" + channels[x].grid->name() + "' and '" + channels[y].grid->name() +
                             "' cannot be measured jointly: their observables do not commute on the same system",
                         child(p, "channels"));
    }
    if (a.type == "tof_decode" && a.args.contains("generation")) {
      const auto label = a.args["generation"].get<std::string>();
      const auto& op = e.lab->registry().resolve(label);
      if (const auto* ev = std::get_if<EvolvedKind>(&op.kind); ev && ev->conditions.fields_active())
        reader.report("warning", "Lint", "FieldsActive",
                      "'" + label + "' evolves under active fields; free-flight decoding assumes none", child(p, "generation"));
    }
  }
}

Json complex_json(const std::complex<double>& z) {
  if (z.imag() == 0) return z.real();
  return Json::array({z.real(), z.imag()});
}

Json matrix_json(const ComplexRows& rows) {
  Json out = Json::array();
  for (const auto& row : rows) {
    Json r = Json::array();
    for (const auto& z : row) r.push_back(complex_json(z));
    out.push_back(std::move(r));
  }
  return out;
}

}  // namespace

bool ParseResult::has_errors() const {
  return std::any_of(diagnostics.begin(), diagnostics.end(),
                     [](const Diagnostic& d) { return d.severity == "error"; });
}

std::string format_diagnostic(const Diagnostic& d, const std::string& file) {
  std::string out = file.empty() ? "" : file + ":";
  out += std::to_string(d.line) + ":" + std::to_string(d.column) + ": " + d.severity + ": " + d.kind + " [" + d.code +
         "] " + d.message;
  if (!d.pointer.empty()) out += " (at " + d.pointer + ")";
  return out;
}

ParseResult parse_experiment_spec(const std::string& text, const ParseOptions& options) {
  ParseResult result;
  Json doc;
  try {
    doc = Json::parse(text);
  } catch (const Json::parse_error& e) {
    const auto offset = e.byte == 0 ? 0 : e.byte - 1;
    const auto [line, column] = line_column(text, offset);
    std::string msg = e.what();
    if (const auto at = msg.find("parse error"); at != std::string::npos) msg = msg.substr(at);
    result.diagnostics.push_back({"error", "ParseError", "Syntax", msg, "", line, column});
    return result;
  }

  const OffsetIndex index(text);
  PlanReader reader(index, text, options.strict, result.diagnostics);
  for (const auto& dup : index.duplicates()) {
    const auto severity = options.strict ? "error" : "warning";
    reader.report(severity, "ParseError", "DuplicateKey", "key '" + dup.substr(dup.rfind('/') + 1) + "' appears twice",
                  dup, true);
  }
  auto plan = reader.read(doc);
  if (options.backend_override) plan.backend = *options.backend_override;
  if (options.seed_override) plan.seed = *options.seed_override;
  if (reader.errors()) return result;
  static_checks(plan, reader);
  if (reader.errors()) return result;
  result.plan = std::move(plan);
  return result;
}

Json print_plan(const ExperimentPlan& plan) {
  Json out = {{"schema", plan.schema},
              {"backend", std::string(to_string(plan.backend))},
              {"seed", plan.seed},
              {"threads", plan.threads}};
  Json outputs = Json::object();
  if (!plan.outputs.report.empty()) outputs["report"] = plan.outputs.report;
  if (!plan.outputs.csv_dir.empty()) outputs["csv_dir"] = plan.outputs.csv_dir;
  if (!outputs.empty()) out["outputs"] = outputs;

  Json observables = Json::array();
  for (const auto& o : plan.observables) observables.push_back({{"name", o.name}, {"matrix", matrix_json(o.matrix)}});
  out["observables"] = observables;

  Json conditions = Json::array();
  for (const auto& c : plan.conditions) {
    Json j = {{"name", c.name}};
    if (c.generator) j["generator"] = matrix_json(*c.generator);
    if (c.rate_matrix) j["rate_matrix"] = *c.rate_matrix;
    conditions.push_back(std::move(j));
  }
  out["conditions"] = conditions;

  Json generations = Json::array();
  for (const auto& g : plan.generations) {
    Json j = {{"label", g.label}, {"kind", g.kind}};
    if (g.kind == "simple") {
      j["factors"] = g.factors;
      Json amps = Json::array();
      for (const auto& z : g.amplitudes) amps.push_back(complex_json(z));
      j["amplitudes"] = amps;
    } else if (g.kind == "composed") {
      j["children"] = g.children;
      j["weights"] = g.weights;
      if (!g.phases.empty()) j["phases"] = g.phases;
      if (!g.delays.empty()) j["delays"] = g.delays;
    } else {
      j["base"] = g.base;
      j["conditions"] = g.conditions;
      j["duration"] = g.duration;
    }
    if (g.trunk_domain) j["trunk_domain"] = to_json(*g.trunk_domain);
    generations.push_back(std::move(j));
  }
  out["generations"] = generations;

  Json grids = Json::array();
  for (const auto& g : plan.grids) {
    Json j = {{"name", g.name}};
    if (!g.observable.empty()) j["observable"] = g.observable;
    if (!g.derived_from.empty()) j["derived_from"] = g.derived_from;
    if (!g.units.empty()) j["units"] = g.units;
    if (!g.spectrum.empty()) {
      Json s = Json::array();
      for (const auto& v : g.spectrum) s.push_back({{"value", v.label}, {"code", v.code}});
      j["spectrum"] = s;
    }
    if (g.bins) j["bins"] = *g.bins;
    if (g.function) {
      if (g.function->kind == "polynomial") j["function"] = {{"polynomial", g.function->coefficients}};
      else j["function"] = {{"table", g.function->table}};
    }
    grids.push_back(std::move(j));
  }
  out["grids"] = grids;

  Json channels = Json::array();
  for (const auto& c : plan.channels) {
    Json j = {{"id", c.id}, {"grid", c.grid}};
    if (!c.apparatus.empty()) j["apparatus"] = c.apparatus;
    if (c.subsystem) j["subsystem"] = *c.subsystem;
    if (c.branch_domain) j["branch_domain"] = to_json(*c.branch_domain);
    if (!c.regions.empty()) {
      Json r = Json::array();
      for (const auto& d : c.regions) r.push_back(to_json(d));
      j["regions"] = r;
    }
    channels.push_back(std::move(j));
  }
  out["channels"] = channels;

  Json actions = Json::array();
  for (const auto& a : plan.actions) {
    Json j = a.args;
    j["type"] = a.type;
    if (!a.id.empty()) j["id"] = a.id;
    actions.push_back(std::move(j));
  }
  out["actions"] = actions;
  return out;
}

}  // namespace iqm
