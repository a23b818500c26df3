#include "iqm/execute.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "iqm/experiments.hpp"
#include "iqm/json_io.hpp"
#include "iqm/probtree.hpp"

namespace iqm {

inline constexpr const char* kArtifactVersion = "1.0.0";

namespace {

MatrixXc to_matrix(const ComplexRows& rows) {
  const auto n = static_cast<Index>(rows.size());
  MatrixXc m(n, n);
  for (Index r = 0; r < n; ++r) {
    if (static_cast<Index>(rows[r].size()) != n) fail(ErrorCode::DimensionMismatch, "matrix is not square");
    for (Index c = 0; c < n; ++c) m(r, c) = rows[r][c];
  }
  return m;
}

PointwiseFunction make_function(const FunctionDecl& f) {
  if (f.kind == "polynomial") {
    std::string desc = "polynomial[";
    for (std::size_t i = 0; i < f.coefficients.size(); ++i) desc += (i ? "," : "") + Json(f.coefficients[i]).dump();
    desc += "]";
    return {desc, [c = f.coefficients](double x) {
              double y = 0;
              for (auto it = c.rbegin(); it != c.rend(); ++it) y = y * x + *it;
              return y;
            }};
  }
  return {"table", [t = f.table](double x) {
            for (const auto& row : t)
              if (row[0] == x) return row[1];
            fail(ErrorCode::SpectrumMismatch, "function table has no entry for code " + Json(x).dump());
          }};
}

template <typename F>
auto at(const std::string& pointer, F&& f) {
  try {
    return f();
  } catch (const ElaborationError&) {
    throw;
  } catch (const Error& err) {
    throw ElaborationError(err, pointer);
  }
}

std::string ptr(const char* section, std::size_t i) { return std::string("/") + section + "/" + std::to_string(i); }

//---------------------------------------------------------------------------//

struct Validation {
  std::string name;
  bool passed = false;
  std::string detail;
};

struct ActionContext {
  const ExperimentPlan& plan;
  Elaboration& e;
  SeededStream rng;
  SuccessionOptions options;
  std::string name;  // action id or positional name
  std::map<std::string, ProbabilityTree>& trees;
  std::vector<Validation> validations;
  std::vector<std::pair<std::string, std::string>>& csv;
  Json warnings = Json::array();

  void check(std::string what, bool ok, std::string detail = {}) {
    validations.push_back({std::move(what), ok, std::move(detail)});
  }
  void table(const FrequencyTable& t, const std::string& suffix = {}) {
    csv.emplace_back(name + "_" + t.grid + suffix, to_csv(t));
  }
};

FrequencyTable table_of(const ProbabilityLaw& law) {
  FrequencyTable t;
  t.generation = law.generation;
  t.grid = law.grid;
  t.codes = law.codes;
  t.counts = law.counts;
  t.half_counts = law.half_counts;
  t.total = law.total;
  t.half_total = law.half_total;
  return t;
}

std::string label_arg(const Json& args, const char* key) { return args.at(key).get<std::string>(); }

Event resolve_event(const Branch& branch, const Json& spec) {
  if (spec.is_array()) return branch.space.event(spec.get<std::vector<std::size_t>>());
  const auto grid = spec.at("grid").get<std::string>();
  const double code = spec.at("code").get<double>();
  const auto k = branch.channel_of(grid);
  if (k == static_cast<std::size_t>(-1)) fail(ErrorCode::UnknownGrid, "grid '" + grid + "' is not measured in this branch");
  const auto codes = branch.channels[k].grid->codes();
  const auto j = static_cast<std::size_t>(std::find(codes.begin(), codes.end(), code) - codes.begin());
  if (j == codes.size()) fail(ErrorCode::SpectrumMismatch, "grid '" + grid + "' has no code " + Json(code).dump());
  std::vector<std::size_t> members;
  for (std::size_t o = 0; o < branch.space.universe_size(); ++o) {
    std::size_t rest = o;
    std::size_t idx = 0;
    for (std::size_t m = branch.channels.size(); m-- > 0;) {
      const auto size = branch.channels[m].grid->size();
      if (m == k) idx = rest % size;
      rest /= size;
    }
    if (idx == j) members.push_back(o);
  }
  return branch.space.event(members);
}

const Branch& branch_at(const ProbabilityTree& tree, std::uint64_t b) {
  if (b >= tree.branches.size())
    fail(ErrorCode::EventOutsideUniverse, "tree has " + std::to_string(tree.branches.size()) + " branches, no branch " +
                                              std::to_string(b));
  return tree.branches[b];
}

void validate_tree(ActionContext& c, const ProbabilityTree& tree, const std::string& prefix) {
  for (std::size_t b = 0; b < tree.branches.size(); ++b) {
    const auto& br = tree.branches[b];
    std::string failures;
    for (const auto& f : br.validation.failures()) failures += (failures.empty() ? "" : ", ") + f;
    std::string witness;
    for (const auto& chk : br.validation.checks)
      if (!chk.passed) witness += (witness.empty() ? "" : "; ") + chk.axiom + ": " + chk.witness;
    c.check(prefix + "branch " + std::to_string(b) + ": Kolmogorov axioms", br.validation.passed(),
            failures.empty() ? "all axioms hold" : "failing: " + failures + " (" + witness + ")");
    c.check(prefix + "branch " + std::to_string(b) + ": shares the tree trunk", br.trunk == tree.trunk);
  }
  for (const auto& col : check_colinearity(tree))
    c.check(prefix + "branch " + std::to_string(col.branch) + ": " + col.derived_grid + " is the pushforward of " +
                col.base_grid,
            col.passed, "pushforward " + Json(col.pushforward).dump() + ", derived " + Json(col.derived_counts).dump());
}

Json run_action(const ActionDecl& a, ActionContext& c) {
  auto& lab = *c.e.lab;
  const auto& args = a.args;

  if (a.type == "run_succession") {
    const auto g = lab.handle(label_arg(args, "generation"));
    const auto& ch = c.e.channels.at(label_arg(args, "channel"));
    const auto table = run_succession(lab, g, ch, args.at("trials").get<std::uint64_t>(), c.rng, c.options);
    const auto law = estimate_law(table);
    Ratio sum = 0;
    for (const auto& f : law.frequencies()) sum += f;
    c.check("frequencies sum to 1", sum == 1, to_string(sum));
    c.table(table);
    return {{"table", to_json(table)}, {"law", to_json(law)}};
  }

  if (a.type == "build_tree") {
    const auto g = lab.handle(label_arg(args, "generation"));
    auto tree = build_tree(lab, g, c.e.channel_list(args.at("channels")), args.at("trials").get<std::uint64_t>(), c.rng,
                           c.options);
    Json tamper_json;
    if (args.contains("tamper")) {
      const auto& t = args["tamper"];
      const auto b = t.value("branch", std::uint64_t{0});
      branch_at(tree, b);
      auto& br = tree.branches[b];
      const Event ev = t["event"].is_string() ? br.space.universe() : resolve_event(br, t["event"]);
      const Ratio value = t["probability"].is_string() ? Ratio(t["probability"].get<std::string>())
                                                       : exact(t["probability"].get<double>());
      br.space.tamper_for_testing(ev, value);
      br.revalidate();
      tamper_json = {{"branch", b}, {"event", br.space.describe(ev)}, {"probability", to_string(value)}};
    }
    validate_tree(c, tree, "");
    for (std::size_t b = 0; b < tree.branches.size(); ++b)
      for (const auto& t : tree.branches[b].tables) c.table(t, "_b" + std::to_string(b));
    Json out = {{"tree", to_json(tree)}};
    if (!tamper_json.is_null()) out["tamper"] = tamper_json;
    if (!a.id.empty()) c.trees.insert_or_assign(a.id, std::move(tree));
    return out;
  }

  if (a.type == "measure_joint") {
    const auto g = lab.handle(label_arg(args, "generation"));
    const auto& state = lab.oracle_state(g);
    const ChannelSet set(lab.backend(), state.factors, c.e.channel_list(args.at("channels")));
    const auto trials = args.at("trials").get<std::uint64_t>();
    const auto joint = run_joint_succession(lab, g, set, trials, c.rng, c.options);
    std::set<std::size_t> systems;
    for (const auto& ch : set.channels()) systems.insert(ch.subsystem.value_or(0));
    Json outcomes = Json::array();
    std::uint64_t sum = 0;
    for (std::size_t o = 0; o < set.joint_size(); ++o) {
      const auto idx = set.split_joint(o);
      Json values = Json::array();
      for (std::size_t k = 0; k < idx.size(); ++k) values.push_back(set.channels()[k].grid->spectrum()[idx[k]].code);
      outcomes.push_back({{"values", values}, {"count", joint.counts[o]}});
      sum += joint.counts[o];
    }
    c.check("joint counts sum to the trial count", sum == trials, std::to_string(sum));
    Json laws = Json::array();
    for (std::size_t k = 0; k < set.channels().size(); ++k) {
      const auto t = marginal_table(joint, set, k, g.label, c.rng.descriptor());
      c.table(t, "_c" + std::to_string(k));
      laws.push_back(to_json(estimate_law(t)));
    }
    return {{"outcomes", outcomes},
            {"laws", laws},
            {"incomplete", systems.size() < state.system_count()},
            {"oracle", set.exact_joint(state)}};
  }

  if (a.type == "interference_deficit") {
    const auto w = args.contains("weights") ? args["weights"].get<std::vector<double>>() : std::vector<double>{0.5, 0.5};
    if (w.size() != 2) fail(ErrorCode::InvalidWeights, "deficit weights are a pair");
    const auto d = interference_deficit(lab, lab.handle(label_arg(args, "first")), lab.handle(label_arg(args, "second")),
                                        lab.handle(label_arg(args, "composed")), c.e.channels.at(label_arg(args, "channel")),
                                        {w[0], w[1]}, args.at("trials").get<std::uint64_t>(), c.rng, c.options);
    c.check("mixture frequencies sum to 1", d.mixture_total == 1, to_string(d.mixture_total));
    c.table(table_of(d.law1), "_first");
    c.table(table_of(d.law2), "_second");
    c.table(table_of(d.law12), "_composed");
    return {{"deficit", to_json(d)}};
  }

  if (a.type == "evolution_family") {
    const auto family = evolution_family(lab, lab.handle(label_arg(args, "generation")),
                                         c.e.conditions.at(label_arg(args, "conditions")),
                                         args.at("durations").get<std::vector<double>>(),
                                         c.e.channel_list(args.at("channels")), args.at("trials").get<std::uint64_t>(),
                                         c.rng, c.options);
    Json members = Json::array();
    for (std::size_t m = 0; m < family.size(); ++m) {
      validate_tree(c, family[m].tree, "dt=" + Json(family[m].dt).dump() + " ");
      for (std::size_t b = 0; b < family[m].tree.branches.size(); ++b)
        for (const auto& t : family[m].tree.branches[b].tables)
          c.table(t, "_m" + std::to_string(m) + "_b" + std::to_string(b));
      members.push_back({{"dt", family[m].dt}, {"generation", family[m].generation.label}, {"tree", to_json(family[m].tree)}});
    }
    return {{"members", members}};
  }

  if (a.type == "run_scenario") {
    const auto backend = args.contains("backend") ? backend_kind_from_string(args["backend"].get<std::string>())
                                                  : c.plan.backend;
    const auto report = run_scenario(label_arg(args, "name"), args.value("params", Json::object()), c.rng.split(0).key(),
                                     backend, c.options);
    for (const auto& ex : report.expectations) c.check(ex.name, ex.passed, ex.detail);
    return {{"scenario", report.to_json()}};
  }

  if (a.type == "tof_decode") {
    const Point3 origin = args.contains("origin") ? args["origin"].get<Point3>() : Point3{0, 0, 0};
    if (args.contains("generation")) {
      const auto& op = lab.registry().resolve(label_arg(args, "generation"));
      if (const auto* ev = std::get_if<EvolvedKind>(&op.kind); ev && ev->conditions.fields_active())
        c.warnings.push_back("'" + op.label + "' evolves under active fields; free-flight decoding assumes none");
    }
    const auto tof = tof_decode(args.at("impact").get<Point3>(), args.at("t").get<double>(), args.at("t0").get<double>(),
                                args.at("mass").get<double>(), origin);
    return {{"tof", to_json(tof)}};
  }

  if (a.type == "event_dependence") {
    const auto& tree = c.trees.at(label_arg(args, "tree"));
    const auto& br = branch_at(tree, args.value("branch", std::uint64_t{0}));
    const auto ea = resolve_event(br, args.at("a"));
    const auto eb = resolve_event(br, args.at("b"));
    const auto dep = event_dependence(br.space, ea, eb);
    return {{"a", br.space.describe(ea)}, {"b", br.space.describe(eb)}, {"dependence", to_json(dep)}};
  }

  if (a.type == "cross_branch_joint") {
    const auto& ta = c.trees.at(label_arg(args, "tree"));
    const auto& tb = args.contains("other_tree") ? c.trees.at(label_arg(args, "other_tree")) : ta;
    const auto& ja = args.at("a");
    const auto& jb = args.at("b");
    const BranchEvent ea{ja.at("branch").get<std::size_t>(),
                         resolve_event(branch_at(ta, ja.at("branch").get<std::uint64_t>()), ja.at("event"))};
    const BranchEvent eb{jb.at("branch").get<std::size_t>(),
                         resolve_event(branch_at(tb, jb.at("branch").get<std::uint64_t>()), jb.at("event"))};
    try {
      cross_branch_joint(ta, ea, tb, eb);
    } catch (const Error& err) {
      if (err.code() != ErrorCode::UndefinedJointProbability) throw;
      c.check("joint probability refused as undefined", true, err.what());
      return {{"refused", true}, {"code", std::string(to_string(err.code()))}, {"reason", err.what()}};
    }
    return {};
  }

  if (a.type == "meta_dependence") {
    const auto& tree = c.trees.at(label_arg(args, "tree"));
    const auto m = meta_dependence_report(lab, tree, label_arg(args, "grid_x"), label_arg(args, "grid_y"));
    c.check("non-commuting grids are never both exactly sharp", m.consequence_holds);
    return {{"meta_dependence", to_json(m)}};
  }

  fail(ErrorCode::SchemaViolation, "unknown action type '" + a.type + "'");
}

/// Earlier action ids this action reads from.
std::vector<std::string> dependencies(const ActionDecl& a) {
  std::vector<std::string> out;
  for (const char* key : {"tree", "other_tree"})
    if (a.args.contains(key)) out.push_back(a.args[key].get<std::string>());
  return out;
}

}  // namespace

std::vector<MeasurementChannel> Elaboration::channel_list(const Json& ids) const {
  std::vector<MeasurementChannel> out;
  for (const auto& id : ids) {
    const auto it = channels.find(id.get<std::string>());
    if (it == channels.end()) fail(ErrorCode::UnknownChannel, "no channel '" + id.get<std::string>() + "'");
    out.push_back(it->second);
  }
  return out;
}

Elaboration elaborate(const ExperimentPlan& plan) {
  Elaboration e;
  e.lab = std::make_unique<Laboratory>(plan.backend);

  for (std::size_t i = 0; i < plan.observables.size(); ++i) {
    const auto& o = plan.observables[i];
    e.observables[o.name] =
        at(ptr("observables", i), [&] { return std::make_shared<const ObservableSpec>(o.name, to_matrix(o.matrix)); });
  }
  for (const auto& c : plan.conditions) e.conditions[c.name] = c;

  for (std::size_t i = 0; i < plan.generations.size(); ++i) {
    const auto& g = plan.generations[i];
    at(ptr("generations", i), [&] {
      GenerationOp op;
      op.label = g.label;
      if (g.trunk_domain) op.trunk_domain = *g.trunk_domain;
      if (g.kind == "simple") {
        op.kind = SimpleKind{PreparationSpec{g.factors, g.amplitudes}};
        return e.lab->register_generation(std::move(op));
      }
      if (g.kind == "composed") {
        if (!g.trunk_domain) {
          std::vector<GenerationHandle> children;
          for (const auto& ch : g.children) children.push_back(e.lab->handle(ch));
          return e.lab->compose_generations(children, g.weights, g.phases, g.label, g.delays);
        }
        op.kind = ComposedKind{g.children, g.weights, g.phases, g.delays};
        return e.lab->register_generation(std::move(op));
      }
      const auto& cond = e.conditions.at(g.conditions);
      if (!g.trunk_domain) return e.lab->evolve_generation(e.lab->handle(g.base), cond, g.duration, g.label);
      op.kind = EvolvedKind{g.base, cond, g.duration};
      return e.lab->register_generation(std::move(op));
    });
  }

  for (std::size_t i = 0; i < plan.grids.size(); ++i) {
    const auto& g = plan.grids[i];
    at(ptr("grids", i), [&]() -> const QualificationGrid& {
      if (!g.derived_from.empty()) return e.catalog.derive_grid(g.derived_from, make_function(*g.function), g.name, g.units);
      const auto& obs = e.observables.at(g.observable);
      if (g.bins) return e.catalog.define_binned_grid(g.name, obs, *g.bins, g.units, g.spectrum);
      return e.catalog.define_grid(g.name, g.spectrum, obs, g.units);
    });
  }

  for (std::size_t i = 0; i < plan.channels.size(); ++i) {
    const auto& c = plan.channels[i];
    e.channels.emplace(c.id, at(ptr("channels", i), [&] {
                         return make_channel(c.id, e.catalog.share(c.grid), c.subsystem,
                                             c.branch_domain.value_or(default_branch_domain()), c.regions, c.apparatus);
                       }));
  }
  return e;
}

ExecutionResult execute_plan(const ExperimentPlan& plan) {
  ExecutionResult out;
  Json actions = Json::array();
  bool runtime_error = false;
  bool validation_failed = false;

  std::optional<Elaboration> e;
  try {
    e = elaborate(plan);
  } catch (const Error& err) {
    runtime_error = true;
    actions.push_back({{"status", "error"}, {"error", {{"code", std::string(to_string(err.code()))}, {"message", err.what()}}}});
  }

  if (e) {
    const SeededStream master(plan.seed);
    std::map<std::string, ProbabilityTree> trees;
    std::set<std::string> failed;
    for (std::size_t i = 0; i < plan.actions.size(); ++i) {
      const auto& a = plan.actions[i];
      ActionContext ctx{plan, *e, master.split(i), SuccessionOptions{plan.threads},
                        a.id.empty() ? "action" + std::to_string(i) : a.id, trees, {}, out.csv_tables};
      Json entry = {{"index", i}, {"type", a.type}};
      if (!a.id.empty()) entry["id"] = a.id;
      entry["seed"] = ctx.rng.descriptor();

      std::string blocked;
      for (const auto& dep : dependencies(a))
        if (failed.count(dep)) blocked = dep;
      if (!blocked.empty()) {
        entry["status"] = "skipped";
        entry["reason"] = "depends on failed action '" + blocked + "'";
        runtime_error = true;
        if (!a.id.empty()) failed.insert(a.id);
        actions.push_back(std::move(entry));
        continue;
      }

      try {
        entry["result"] = run_action(a, ctx);
        entry["status"] = "ok";
      } catch (const Error& err) {
        entry["status"] = "error";
        entry["error"] = {{"code", std::string(to_string(err.code()))}, {"message", err.what()}};
        runtime_error = true;
        if (!a.id.empty()) failed.insert(a.id);
      }
      Json validations = Json::array();
      bool passed = entry["status"] == "ok";
      for (const auto& v : ctx.validations) {
        validations.push_back({{"name", v.name}, {"passed", v.passed}, {"detail", v.detail}});
        passed = passed && v.passed;
        validation_failed = validation_failed || !v.passed;
      }
      entry["validations"] = validations;
      entry["passed"] = passed;
      if (!ctx.warnings.empty()) entry["warnings"] = ctx.warnings;
      actions.push_back(std::move(entry));
    }
  }

  out.exit_code = runtime_error ? kExitRuntime : validation_failed ? kExitValidation : kExitPass;
  out.report = {{"schema", kReportSchema},
                {"artifact_version", kArtifactVersion},
                {"seed", plan.seed},
                {"backend", std::string(to_string(plan.backend))},
                {"plan", print_plan(plan)},
                {"actions", actions},
                {"passed", out.exit_code == kExitPass},
                {"exit_code", out.exit_code}};
  return out;
}

std::string dump_report(const Json& report) { return report.dump(2) + "\n"; }

}  // namespace iqm
