#include "iqm/experiments.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numbers>

#include "iqm/core.hpp"
#include "iqm/error.hpp"
#include "iqm/grids.hpp"
#include "iqm/probtree.hpp"

namespace iqm {
namespace {

std::string num(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6g", x);
  return buf;
}

[[noreturn]] void violation(const std::string& scenario, const std::string& msg) {
  fail(ErrorCode::SchemaViolation, scenario + ": " + msg);
}

bool same_kind(const Json& a, const Json& b) {
  if (a.is_number()) return b.is_number();
  return a.type() == b.type();
}

std::string kind_name(const Json& j) {
  if (j.is_number()) return "a number";
  if (j.is_array()) return "an array";
  if (j.is_string()) return "a string";
  if (j.is_boolean()) return "a boolean";
  return "an object";
}

/// Declared parameters of one scenario with overrides applied.
class Params {
 public:
  Params(std::string scenario, const Json& given) : scenario_(std::move(scenario)), merged_(scenario_defaults(scenario_)) {
    if (given.is_null()) return;
    if (!given.is_object()) violation(scenario_, "parameters must be a JSON object");
    for (const auto& [key, value] : given.items()) {
      if (!merged_.contains(key)) violation(scenario_, "unknown parameter '" + key + "'");
      if (!same_kind(merged_[key], value)) violation(scenario_, "parameter '" + key + "' must be " + kind_name(merged_[key]));
      merged_[key] = value;
    }
  }

  const Json& merged() const { return merged_; }

  std::uint64_t count(const std::string& key, std::uint64_t min) const {
    const auto& v = merged_.at(key);
    double x = 0;
    if (v.is_number_unsigned()) {
      const auto n = v.get<std::uint64_t>();
      if (n < min) violation(scenario_, "'" + key + "' must be at least " + std::to_string(min));
      return n;
    }
    x = v.get<double>();
    if (!(x >= static_cast<double>(min)) || x != std::floor(x) || x > 1e15)
      violation(scenario_, "'" + key + "' must be an integer of at least " + std::to_string(min));
    return static_cast<std::uint64_t>(x);
  }

  double number(const std::string& key) const {
    const double x = merged_.at(key).get<double>();
    if (!std::isfinite(x)) violation(scenario_, "'" + key + "' must be finite");
    return x;
  }

  double positive(const std::string& key) const {
    const double x = number(key);
    if (!(x > 0)) violation(scenario_, "'" + key + "' must be positive");
    return x;
  }

  std::vector<double> numbers(const std::string& key, std::size_t size = 0) const {
    std::vector<double> out;
    for (const auto& v : merged_.at(key)) {
      if (!v.is_number()) violation(scenario_, "'" + key + "' must hold numbers");
      out.push_back(v.get<double>());
      if (!std::isfinite(out.back())) violation(scenario_, "'" + key + "' must hold finite numbers");
    }
    if (size != 0 && out.size() != size)
      violation(scenario_, "'" + key + "' must hold " + std::to_string(size) + " numbers");
    if (out.empty()) violation(scenario_, "'" + key + "' must not be empty");
    return out;
  }

  std::vector<std::string> choices(const std::string& key, const std::vector<std::string>& allowed,
                                   std::size_t size) const {
    std::vector<std::string> out;
    for (const auto& v : merged_.at(key)) {
      if (!v.is_string() || std::find(allowed.begin(), allowed.end(), v.get<std::string>()) == allowed.end())
        violation(scenario_, "'" + key + "' entries must be one of the declared grids");
      out.push_back(v.get<std::string>());
    }
    if (out.size() != size) violation(scenario_, "'" + key + "' must hold " + std::to_string(size) + " entries");
    return out;
  }

 private:
  std::string scenario_;
  Json merged_;
};

MatrixXc pauli(char axis) {
  MatrixXc m = MatrixXc::Zero(2, 2);
  const Complex i(0, 1);
  switch (axis) {
    case 'x': m << 0, 1, 1, 0; break;
    case 'y': m << 0, -i, i, 0; break;
    default: m << 1, 0, 0, -1; break;
  }
  return m;
}

/// Spin grids z, x and y with codes ±1.
void define_pauli_grids(GridCatalog& catalog) {
  for (char axis : {'z', 'x', 'y'}) {
    const std::string name(1, axis);
    catalog.define_grid(name, {{"-1", -1.0}, {"+1", 1.0}}, std::make_shared<ObservableSpec>("sigma_" + name, pauli(axis)));
  }
}

GenerationOp simple(const std::string& label, PreparationSpec prep) {
  GenerationOp op;
  op.label = label;
  op.kind = SimpleKind{std::move(prep)};
  return op;
}

std::size_t index_of_code(const QualificationGrid& grid, double code) {
  const auto codes = grid.codes();
  return static_cast<std::size_t>(std::find(codes.begin(), codes.end(), code) - codes.begin());
}

void expect(ScenarioReport& r, std::string name, bool passed, std::string detail) {
  r.expectations.push_back({std::move(name), passed, std::move(detail)});
}

double binomial_sigma(double p, double n) { return std::sqrt(std::max(0.0, p * (1 - p)) / n); }

//---------------------------------------------------------------------------//

void young_slits(const Params& p, const SeededStream& rng, SuccessionOptions options, ScenarioReport& r) {
  const auto trials = p.count("trials", 2);
  const auto weights = p.numbers("weights", 2);
  const auto filters = p.numbers("composition_weights", 2);
  const auto phases = p.numbers("phases", 2);
  if (weights[0] < 0 || weights[1] < 0 || std::abs(weights[0] + weights[1] - 1) > 1e-12)
    violation(r.scenario, "'weights' must be nonnegative and sum to 1");
  if (filters[0] < 0 || filters[1] < 0 || filters[0] + filters[1] <= 0)
    violation(r.scenario, "'composition_weights' must be nonnegative with a positive sum");

  const BackendKind kinds[] = {BackendKind::Quantum, BackendKind::Classical};
  std::vector<DeficitReport> deficits;
  for (std::size_t b = 0; b < 2; ++b) {
    Laboratory lab(kinds[b]);
    GridCatalog catalog;
    define_pauli_grids(catalog);
    const auto g1 = lab.register_generation(simple("G1", PreparationSpec::basis(2, 0)));
    const auto g2 = lab.register_generation(simple("G2", PreparationSpec::basis(2, 1)));
    const GenerationHandle children[] = {g1, g2};
    const auto g12 = lab.compose_generations(children, filters, phases, "G12");
    const auto screen = make_channel("screen", catalog.share("x"));
    auto d = interference_deficit(lab, g1, g2, g12, screen, {weights[0], weights[1]}, trials, rng.split(b), options);

    const std::string tag(to_string(kinds[b]));
    for (std::size_t j = 0; j < d.codes.size(); ++j) {
      const std::string cell = tag + " " + d.grid + "=" + num(d.codes[j]);
      const double dev = std::abs(to_double(d.deficit[j]) - d.exact_deficit[j]);
      expect(r, cell + ": deficit within 4 sigma of oracle", dev <= 4 * d.deficit_sigma[j],
             "|" + num(to_double(d.deficit[j])) + " - " + num(d.exact_deficit[j]) + "| = " + num(dev) +
                 ", band " + num(4 * d.deficit_sigma[j]));
      const auto var = [](double q) { return q * (1 - q); };
      const double sr = std::sqrt((var(d.exact_p12[j]) + var(d.exact_p1[j]) + var(d.exact_p2[j])) / double(trials));
      const double rdev = std::abs(to_double(d.raw_residual[j]) - d.exact_raw_residual[j]);
      expect(r, cell + ": raw-sum residual within 4 sigma of oracle", rdev <= 4 * sr,
             "|" + num(to_double(d.raw_residual[j])) + " - " + num(d.exact_raw_residual[j]) + "| = " + num(rdev) +
                 ", band " + num(4 * sr));
      if (kinds[b] == BackendKind::Classical)
        expect(r, cell + ": mixture oracle has no deficit", std::abs(d.exact_deficit[j]) <= 1e-12,
               "oracle deficit " + num(d.exact_deficit[j]));
    }
    expect(r, tag + ": mixture total is exactly 1", d.mixture_total == 1, to_string(d.mixture_total));
    deficits.push_back(std::move(d));
  }

  Json contrast = Json::array();
  for (std::size_t j = 0; j < deficits[0].codes.size(); ++j)
    contrast.push_back({{"code", deficits[0].codes[j]},
                        {"quantum_deficit", to_double(deficits[0].deficit[j])},
                        {"classical_deficit", to_double(deficits[1].deficit[j])},
                        {"difference", to_string(Ratio(deficits[0].deficit[j] - deficits[1].deficit[j]))}});
  r.results = {{"quantum", to_json(deficits[0])}, {"classical", to_json(deficits[1])}, {"contrast", contrast}};
}

void singlet_pair(const Params& p, const SeededStream& rng, SuccessionOptions options, BackendKind kind,
                  ScenarioReport& r) {
  const auto trials = p.count("trials", 2);
  const auto bases = p.choices("bases", {"z", "x", "y"}, 2);
  const double separation = p.number("separation");
  if (separation < 0) violation(r.scenario, "'separation' must be nonnegative");
  const double tolerance = p.positive("tolerance");

  Laboratory lab(kind);
  GridCatalog catalog;
  define_pauli_grids(catalog);
  const double s = 1 / std::numbers::sqrt2;
  PreparationSpec prep{{2, 2}, {0.0, s, -s, 0.0}};
  const auto g = lab.register_generation(simple("singlet", prep));

  // Separation is pure metadata: the two branch domains sit ±separation/2 apart along x.
  std::vector<MeasurementChannel> channels;
  for (std::size_t k = 0; k < 2; ++k) {
    const double cx = (k == 0 ? -0.5 : 0.5) * separation;
    const SpacetimeDomain domain{{cx - 0.5, 0, 0}, {cx + 0.5, 1, 1}, 1, 2};
    channels.push_back(make_channel(k == 0 ? "first" : "second", catalog.share(bases[k]), k, domain));
  }
  const auto tree = build_tree(lab, g, channels, trials, rng, options);

  expect(r, "one branch", tree.branches.size() == 1, std::to_string(tree.branches.size()) + " branches");
  const auto& branch = tree.branches.front();
  expect(r, "Kolmogorov axioms hold", branch.validation.passed(), "");

  Json joint = Json::array();
  for (std::size_t o = 0; o < branch.space.universe_size(); ++o) {
    const double pe = branch.exact_joint[o];
    const double ph = static_cast<double>(branch.joint.counts[o]) / double(trials);
    const double band = 4 * binomial_sigma(pe, double(trials));
    expect(r, "joint cell " + branch.space.labels()[o] + " within 4 sigma of oracle", std::abs(ph - pe) <= band,
           num(ph) + " vs " + num(pe) + ", band " + num(band));
    joint.push_back({{"outcome", branch.space.labels()[o]},
                     {"count", branch.joint.counts[o]},
                     {"frequency", to_string(Ratio(branch.joint.counts[o], trials))},
                     {"oracle", pe}});
  }

  // A: first system found +1.  B: second system found -1.
  std::size_t k_first = 0;
  for (std::size_t k = 0; k < branch.channels.size(); ++k)
    if (branch.channels[k].subsystem == 0u) k_first = k;
  const std::size_t k_second = 1 - k_first;
  const auto plus = index_of_code(*branch.channels[k_first].grid, 1.0);
  const auto minus = index_of_code(*branch.channels[k_second].grid, -1.0);
  std::vector<std::size_t> in_a, in_b;
  std::vector<double> exact_joint = branch.exact_joint;
  double ea = 0, eb = 0, eab = 0;
  for (std::size_t o = 0; o < branch.space.universe_size(); ++o) {
    // Joint outcomes are mixed radix over the branch's channels, first channel most significant.
    const std::size_t idx[2] = {o / 2, o % 2};
    const bool a = idx[k_first] == plus;
    const bool b = idx[k_second] == minus;
    if (a) in_a.push_back(o), ea += exact_joint[o];
    if (b) in_b.push_back(o), eb += exact_joint[o];
    if (a && b) eab += exact_joint[o];
  }
  const auto dep = event_dependence(branch.space, branch.space.event(in_a), branch.space.event(in_b));
  const double exact_difference = eab - ea * eb;
  const double dev = std::abs(to_double(dep.difference) - exact_difference);
  expect(r, "p(A and B) - p(A)p(B) matches oracle", dev <= tolerance,
         num(to_double(dep.difference)) + " vs " + num(exact_difference) + ", tolerance " + num(tolerance));

  Json laws = Json::array();
  for (const auto& law : branch.laws) laws.push_back(to_json(law));
  r.results = {{"joint", joint},
               {"universe", branch.space.labels()},
               {"laws", laws},
               {"validation", to_json(branch.validation)},
               {"dependence", to_json(dep)},
               {"oracle_dependence", {{"p_a", ea}, {"p_b", eb}, {"p_ab", eab}, {"difference", exact_difference}}},
               {"metadata",
                {{"separation", separation},
                 {"branch_domains", {to_json(channels[0].branch_domain), to_json(channels[1].branch_domain)}}}}};
}

void dispersion_panel(const Params& p, const SeededStream& rng, SuccessionOptions options, BackendKind kind,
                      ScenarioReport& r) {
  const auto states = p.count("states", 1);
  const auto trials = p.count("trials", 2);

  Laboratory lab(kind);
  GridCatalog catalog;
  define_pauli_grids(catalog);
  const std::vector<MeasurementChannel> channels = {make_channel("z", catalog.share("z")),
                                                    make_channel("x", catalog.share("x")),
                                                    make_channel("y", catalog.share("y"))};

  // Haar-random qubit states from four Box-Muller normals.
  auto state_rng = rng.split(0);
  const auto normal_pair = [&] {
    const double u1 = state_rng.next_unit();
    const double u2 = state_rng.next_unit();
    const double radius = std::sqrt(-2 * std::log1p(-u1));
    return std::pair{radius * std::cos(2 * std::numbers::pi * u2), radius * std::sin(2 * std::numbers::pi * u2)};
  };

  std::uint64_t all_sharp = 0, zx_sharp = 0, consequence_failures = 0;
  Json rows = Json::array();
  const char* names[] = {"z", "x", "y"};
  for (std::uint64_t s = 0; s < states; ++s) {
    const auto [a, b] = normal_pair();
    const auto [c, d] = normal_pair();
    PreparationSpec prep{{2}, {Complex(a, b), Complex(c, d)}};
    const auto g = lab.register_generation(simple("psi" + std::to_string(s), prep));
    const auto tree = build_tree(lab, g, channels, trials, rng.split(1).split(s), options);

    double exact[3], empirical[3];
    for (int k = 0; k < 3; ++k) {
      const auto& br = tree.branches[tree.branch_of(names[k])];
      const auto ch = br.channel_of(names[k]);
      exact[k] = dispersion(br.exact_laws[ch], br.laws[ch].codes);
      empirical[k] = dispersion(br.laws[ch]);
    }
    const bool every = std::all_of(exact, exact + 3, [](double x) { return x < kExactDispersionEpsilon; });
    const bool zx = empirical[0] < kEmpiricalDispersionEpsilon && empirical[1] < kEmpiricalDispersionEpsilon;
    all_sharp += every;
    zx_sharp += zx;

    Json row = {{"generation", g.label},
                {"amplitudes", {{a, b}, {c, d}}},
                {"branches", tree.branches.size()},
                {"tree_valid", tree.valid()},
                {"exact_dispersion", {exact[0], exact[1], exact[2]}},
                {"empirical_dispersion", {empirical[0], empirical[1], empirical[2]}}};
    if (tree.branch_of("z") != tree.branch_of("x")) {
      const auto meta = meta_dependence_report(lab, tree, "z", "x");
      consequence_failures += !meta.consequence_holds;
      row["meta_dependence_zx"] = to_json(meta);
    }
    if (!tree.valid()) expect(r, g.label + ": tree valid", false, "a branch failed validation");
    rows.push_back(std::move(row));
  }

  expect(r, "no state is exactly dispersion-free on z, x and y", all_sharp == 0,
         std::to_string(all_sharp) + " of " + std::to_string(states));
  expect(r, "no state has empirical z and x dispersion both below " + num(kEmpiricalDispersionEpsilon), zx_sharp == 0,
         std::to_string(zx_sharp) + " of " + std::to_string(states));
  expect(r, "non-commuting grids never both exactly sharp", consequence_failures == 0,
         std::to_string(consequence_failures) + " violations");
  r.results = {{"states", rows}, {"all_three_exact_sharp", all_sharp}, {"z_and_x_empirically_sharp", zx_sharp}};
}

void tof_flight(const Params& p, const SeededStream& rng, BackendKind kind, ScenarioReport& r) {
  const auto trials = p.count("trials", 2);
  const double mass = p.positive("mass");
  const double flight = p.positive("flight_time");
  const double t0 = p.number("t0");
  const auto origin_v = p.numbers("origin", 3);
  auto dir_v = p.numbers("direction", 3);
  const auto momenta = p.numbers("momenta");
  const auto weights = p.numbers("weights", momenta.size());
  const double norm = std::sqrt(dir_v[0] * dir_v[0] + dir_v[1] * dir_v[1] + dir_v[2] * dir_v[2]);
  if (!(norm > 0)) violation(r.scenario, "'direction' must be non-zero");
  for (auto& x : dir_v) x /= norm;
  if (std::any_of(weights.begin(), weights.end(), [](double w) { return w < 0; }))
    violation(r.scenario, "'weights' must be nonnegative");
  if (momenta.size() > static_cast<std::size_t>(kMaxDimension))
    violation(r.scenario, "too many momentum bins");

  Laboratory lab(kind);
  GridCatalog catalog;
  MatrixXc pm = MatrixXc::Zero(Index(momenta.size()), Index(momenta.size()));
  for (std::size_t i = 0; i < momenta.size(); ++i) pm(Index(i), Index(i)) = momenta[i];
  auto obs = std::make_shared<ObservableSpec>("momentum", pm);
  if (obs->eigenvalues().size() != momenta.size()) violation(r.scenario, "'momenta' must be distinct");
  std::vector<SpectrumValue> spectrum;
  for (double e : obs->eigenvalues()) spectrum.push_back({num(e), e});
  const auto& grid = catalog.define_grid("momentum", spectrum, obs, "kg*m/s");

  PreparationSpec prep;
  prep.factors = {momenta.size()};
  for (double w : weights) prep.amplitudes.emplace_back(std::sqrt(w), 0.0);
  const auto g = lab.register_generation(simple("beam", prep));
  const auto channel = make_channel("detector", catalog.share("momentum"));
  const auto exact_law = lab.backend().born_distribution(lab.oracle_state(g), *obs);

  const Point3 origin{origin_v[0], origin_v[1], origin_v[2]};
  const double t = t0 + flight;
  std::vector<std::uint64_t> decoded_counts(grid.size(), 0);
  std::uint64_t hits = 0;
  double worst_magnitude = 0;
  Json samples = Json::array();
  for (std::uint64_t q = 0; q < trials; ++q) {
    auto stream = rng.split(q);
    auto ex = lab.generate(g, stream);
    const auto rec = measure(ex, channel, lab.backend(), stream, q);
    Point3 impact;
    for (int k = 0; k < 3; ++k) impact[k] = origin[k] + rec.value / mass * flight * dir_v[k];
    const auto tof = tof_decode(impact, t, t0, mass, origin);
    const double along = tof.momentum[0] * dir_v[0] + tof.momentum[1] * dir_v[1] + tof.momentum[2] * dir_v[2];
    const auto codes = grid.codes();
    std::size_t nearest = 0;
    for (std::size_t j = 1; j < codes.size(); ++j)
      if (std::abs(codes[j] - along) < std::abs(codes[nearest] - along)) nearest = j;
    hits += nearest == rec.index;
    ++decoded_counts[nearest];
    worst_magnitude = std::max(worst_magnitude, std::abs(tof.magnitude - std::abs(rec.value)));
    if (q < 8)
      samples.push_back({{"measured", rec.value}, {"impact", impact}, {"t", t}, {"decoded", to_json(tof)}});
  }

  expect(r, "every decoded momentum falls in its measured bin", hits == trials,
         std::to_string(hits) + " of " + std::to_string(trials));
  Json law = Json::array();
  for (std::size_t j = 0; j < grid.size(); ++j) {
    const double ph = static_cast<double>(decoded_counts[j]) / double(trials);
    const double band = 4 * binomial_sigma(exact_law[j], double(trials));
    expect(r, "decoded bin " + grid.spectrum()[j].label + " within 4 sigma of oracle", std::abs(ph - exact_law[j]) <= band,
           num(ph) + " vs " + num(exact_law[j]) + ", band " + num(band));
    law.push_back({{"code", grid.codes()[j]}, {"count", decoded_counts[j]}, {"oracle", exact_law[j]}});
  }
  r.results = {{"accuracy", to_string(Ratio(hits, trials))},
               {"decoded_law", law},
               {"max_magnitude_error", worst_magnitude},
               {"samples", samples}};
}

void rabi_evolution(const Params& p, const SeededStream& rng, SuccessionOptions options, BackendKind kind,
                    ScenarioReport& r) {
  const auto trials = p.count("trials", 2);
  const auto points = p.count("points", 1);
  const double omega = p.positive("omega");
  const double step = p.positive("step");

  Laboratory lab(kind);
  GridCatalog catalog;
  define_pauli_grids(catalog);
  const auto g = lab.register_generation(simple("G0", PreparationSpec::basis(2, 0)));

  ExternalConditions drive;
  drive.name = "drive";
  drive.generator = ComplexRows{{0.0, omega / 2}, {omega / 2, 0.0}};
  drive.rate_matrix = RealRows{{-omega / 2, omega / 2}, {omega / 2, -omega / 2}};

  std::vector<double> durations;
  for (std::uint64_t k = 0; k < points; ++k) durations.push_back(double(k) * step);
  const std::vector<MeasurementChannel> channels = {make_channel("z", catalog.share("z"))};
  const auto family = evolution_family(lab, g, drive, durations, channels, trials, rng, options);
  const auto base_tree = build_tree(lab, g, channels, trials, rng, options);

  Json curve = Json::array();
  const auto plus = index_of_code(catalog.get("z"), 1.0);
  for (const auto& m : family) {
    const auto& br = m.tree.branches.front();
    const double pe = br.exact_laws[0][plus];
    const double ph = to_double(br.laws[0].frequency(plus));
    const double band = 4 * binomial_sigma(pe, double(trials));
    const double closed = std::pow(std::cos(omega * m.dt / 2), 2);
    expect(r, "dt=" + num(m.dt) + ": p(+1) within 4 sigma of oracle", std::abs(ph - pe) <= band,
           num(ph) + " vs " + num(pe) + ", band " + num(band));
    if (kind == BackendKind::Quantum)
      expect(r, "dt=" + num(m.dt) + ": oracle matches cos^2(omega dt / 2)", std::abs(pe - closed) <= 1e-9,
             num(pe) + " vs " + num(closed));
    expect(r, "dt=" + num(m.dt) + ": Kolmogorov axioms hold", br.validation.passed(), "");
    curve.push_back({{"dt", m.dt},
                     {"generation", m.generation.label},
                     {"p_plus", to_string(br.laws[0].frequency(plus))},
                     {"p_plus_decimal", ph},
                     {"oracle", pe},
                     {"cos2", closed},
                     {"band", band},
                     {"law", to_json(br.laws[0])}});
  }
  if (!family.empty() && family.front().dt == 0)
    expect(r, "zero duration reproduces the base generation",
           family.front().tree.branches.front().joint == base_tree.branches.front().joint, "");
  r.results = {{"omega", omega}, {"curve", curve}};
}

}  // namespace

bool ScenarioReport::passed() const {
  return std::all_of(expectations.begin(), expectations.end(), [](const Expectation& e) { return e.passed; });
}

Json ScenarioReport::to_json() const {
  Json ex = Json::array();
  for (const auto& e : expectations) ex.push_back({{"name", e.name}, {"passed", e.passed}, {"detail", e.detail}});
  return {{"schema", "iqm.scenario/v1"}, {"scenario", scenario}, {"backend", backend}, {"seed", seed},
          {"params", params},            {"results", results},   {"expectations", ex},  {"passed", passed()}};
}

const std::vector<std::string>& scenario_names() {
  static const std::vector<std::string> names = {"young_slits", "singlet_pair", "dispersion_panel", "tof_flight",
                                                 "rabi_evolution"};
  return names;
}

Json scenario_defaults(const std::string& name) {
  if (name == "young_slits")
    return {{"trials", 100000}, {"weights", {0.5, 0.5}}, {"composition_weights", {1.0, 1.0}}, {"phases", {0.0, 0.0}}};
  if (name == "singlet_pair")
    return {{"trials", 100000}, {"bases", {"z", "z"}}, {"separation", 1.0}, {"tolerance", 0.01}};
  if (name == "dispersion_panel") return {{"states", 50}, {"trials", 10000}};
  if (name == "tof_flight")
    return {{"trials", 1000},
            {"mass", 2.0},
            {"flight_time", 5.0},
            {"t0", 1.0},
            {"origin", {0.0, 0.0, 0.0}},
            {"direction", {0.0, 0.0, 1.0}},
            {"momenta", {-2.0, -1.0, 1.0, 2.0}},
            {"weights", {1.0, 1.0, 1.0, 1.0}}};
  if (name == "rabi_evolution")
    return {{"trials", 10000}, {"points", 8}, {"omega", 2 * std::numbers::pi}, {"step", 0.125}};
  fail(ErrorCode::UnknownScenario, "no scenario named '" + name + "'");
}

void check_scenario_params(const std::string& name, const Json& params) { Params(name, params); }

ScenarioReport run_scenario(const std::string& name, const Json& params, std::uint64_t seed, BackendKind backend,
                            SuccessionOptions options) {
  const Params p(name, params);
  ScenarioReport r;
  r.scenario = name;
  r.seed = seed;
  r.backend = name == "young_slits" ? "quantum+classical" : std::string(to_string(backend));
  r.params = p.merged();
  const SeededStream rng(seed);
  if (name == "young_slits") young_slits(p, rng, options, r);
  else if (name == "singlet_pair") singlet_pair(p, rng, options, backend, r);
  else if (name == "dispersion_panel") dispersion_panel(p, rng, options, backend, r);
  else if (name == "tof_flight") tof_flight(p, rng, backend, r);
  else rabi_evolution(p, rng, options, backend, r);
  return r;
}

}  // namespace iqm
