#include "iqm/probtree.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <numeric>

#include "iqm/error.hpp"

namespace iqm {
namespace {

std::atomic<std::uint64_t> g_tree_identity{1};

Event from_mask(std::size_t n, std::uint64_t mask) {
  Event e(n);
  for (std::size_t i = 0; i < n; ++i)
    if ((mask >> i) & 1u) e.set(i);
  return e;
}

template <typename Witness>
void record(AxiomCheck& check, bool ok, Witness&& witness) {
  ++check.instances;
  if (!ok && check.passed) {
    check.passed = false;
    check.witness = witness();
  }
}

std::string format_double(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

}  // namespace

//---------------------------------------------------------------------------//
// Kolmogorov spaces
//---------------------------------------------------------------------------//

KolmogorovSpace::KolmogorovSpace(std::vector<std::string> outcome_labels, std::vector<std::uint64_t> counts)
    : labels_(std::move(outcome_labels)), counts_(std::move(counts)) {
  if (labels_.size() != counts_.size()) fail(ErrorCode::EventOutsideUniverse, "labels and counts differ in size");
  total_ = std::accumulate(counts_.begin(), counts_.end(), std::uint64_t{0});
  if (total_ == 0) fail(ErrorCode::EmptyTable, "a probability space needs at least one trial");
  const std::size_t n = labels_.size();
  if (n <= kExplicitAlgebraLimit) {
    table_.assign(std::size_t{1} << n, 0);
    for (std::size_t mask = 1; mask < table_.size(); ++mask) {
      const auto low = static_cast<std::size_t>(__builtin_ctzll(mask));
      table_[mask] = table_[mask & (mask - 1)] + counts_[low];
    }
  }
}

void KolmogorovSpace::check(const Event& e) const {
  if (e.size() != labels_.size())
    fail(ErrorCode::EventOutsideUniverse, "event over " + std::to_string(e.size()) + " outcomes in a universe of " +
                                              std::to_string(labels_.size()));
}

Event KolmogorovSpace::universe() const {
  Event e(labels_.size());
  e.set();
  return e;
}

Event KolmogorovSpace::empty_event() const { return Event(labels_.size()); }

Event KolmogorovSpace::event(const std::vector<std::size_t>& outcomes) const {
  Event e(labels_.size());
  for (auto i : outcomes) {
    if (i >= labels_.size())
      fail(ErrorCode::EventOutsideUniverse, "outcome " + std::to_string(i) + " is not in the universe");
    e.set(i);
  }
  return e;
}

std::uint64_t KolmogorovSpace::count(const Event& e) const {
  check(e);
  if (!table_.empty()) return table_[e.to_ulong()];
  std::uint64_t c = 0;
  for (auto i = e.find_first(); i != Event::npos; i = e.find_next(i)) c += counts_[i];
  return c;
}

Ratio KolmogorovSpace::measure(const Event& e) const {
  check(e);
  if (const auto it = overrides_.find(e); it != overrides_.end()) return it->second;
  return Ratio(count(e), total_);
}

void KolmogorovSpace::tamper_for_testing(const Event& e, Ratio value) {
  check(e);
  overrides_[e] = std::move(value);
}

std::string KolmogorovSpace::describe(const Event& e) const {
  std::string out = "{";
  bool first = true;
  for (auto i = e.find_first(); i != Event::npos; i = e.find_next(i)) {
    out += (first ? "" : ",") + labels_[i];
    first = false;
  }
  return out + "}";
}

bool ValidationReport::passed() const {
  return std::all_of(checks.begin(), checks.end(), [](const AxiomCheck& c) { return c.passed; });
}

std::vector<std::string> ValidationReport::failures() const {
  std::vector<std::string> out;
  for (const auto& c : checks)
    if (!c.passed) out.push_back(c.axiom);
  return out;
}

ValidationReport validate_kolmogorov(const KolmogorovSpace& s) {
  const std::size_t n = s.universe_size();
  AxiomCheck normalization{"normalization", true, 0, {}};
  AxiomCheck empty{"empty_event", true, 0, {}};
  AxiomCheck range{"range", true, 0, {}};
  AxiomCheck additivity{"additivity", true, 0, {}};
  AxiomCheck subadditivity{"subadditivity", true, 0, {}};

  const auto pu = s.measure(s.universe());
  record(normalization, pu == 1, [&] { return "p(U) = " + to_string(pu) + ", expected 1"; });
  const auto pe = s.measure(s.empty_event());
  record(empty, pe == 0, [&] { return "p(∅) = " + to_string(pe) + ", expected 0"; });

  const auto check_range = [&](const Event& e) {
    const auto p = s.measure(e);
    record(range, p >= 0 && p <= 1, [&] { return "p(" + s.describe(e) + ") = " + to_string(p) + " outside [0,1]"; });
  };
  const auto check_pair = [&](const Event& a, const Event& b) {
    const auto pa = s.measure(a);
    const auto pb = s.measure(b);
    const Event u = a | b;
    const auto pu_ab = s.measure(u);
    if (!a.intersects(b)) {
      record(additivity, pu_ab == pa + pb, [&] {
        return "p(" + s.describe(u) + ") = " + to_string(pu_ab) + " but p(" + s.describe(a) + ") + p(" +
               s.describe(b) + ") = " + to_string(Ratio(pa + pb));
      });
    } else {
      record(subadditivity, pu_ab <= pa + pb, [&] {
        return "p(" + s.describe(u) + ") = " + to_string(pu_ab) + " exceeds p(" + s.describe(a) + ") + p(" +
               s.describe(b) + ") = " + to_string(Ratio(pa + pb));
      });
    }
  };

  if (s.explicit_algebra()) {
    for (std::uint64_t mask = 0; mask < (std::uint64_t{1} << n); ++mask) check_range(from_mask(n, mask));
  } else {
    for (std::size_t i = 0; i < n; ++i) {
      Event e = s.empty_event();
      e.set(i);
      check_range(e);
      check_range(~e);
    }
  }

  if (n <= 6) {
    // Every ordered pair of events.
    const std::uint64_t size = std::uint64_t{1} << n;
    for (std::uint64_t a = 0; a < size; ++a)
      for (std::uint64_t b = 0; b < size; ++b) check_pair(from_mask(n, a), from_mask(n, b));
  } else {
    // A fixed pseudo-random family of pairs, the same for every space.
    SeededStream family(0x6B6F6C6D6F676F72ull);
    for (int i = 0; i < 1024; ++i) {
      Event a = s.empty_event();
      Event b = s.empty_event();
      const bool disjoint = (i % 2) == 0;
      for (std::size_t k = 0; k < n; ++k) {
        const auto r = family.next_u64() % 4;
        if (r == 1 || (r == 3 && !disjoint)) a.set(k);
        if (r == 2 || (r == 3 && !disjoint)) b.set(k);
      }
      check_pair(a, b);
    }
    for (std::size_t i = 0; i < n; ++i) {
      Event e = s.empty_event();
      e.set(i);
      check_pair(e, (~e));
    }
  }

  // Events with an injected value are always exercised against their splits.
  for (const auto& [e, value] : s.tampered()) {
    check_range(e);
    for (auto i = e.find_first(); i != Event::npos; i = e.find_next(i)) {
      Event single = s.empty_event();
      single.set(i);
      Event rest = e;
      rest.reset(i);
      check_pair(rest, single);
    }
    for (std::size_t i = 0; i < n; ++i) {
      if (e.test(i)) continue;
      Event single = s.empty_event();
      single.set(i);
      check_pair(e, single);
    }
  }

  ValidationReport report;
  report.checks = {normalization, empty, range, additivity, subadditivity};
  return report;
}

DependenceReport event_dependence(const KolmogorovSpace& s, const Event& a, const Event& b) {
  DependenceReport r;
  r.p_a = s.measure(a);
  r.p_b = s.measure(b);
  const Event both = a & b;
  r.p_ab = s.measure(both);
  r.product = r.p_a * r.p_b;
  r.difference = r.p_ab - r.product;
  r.independent = r.difference == 0;
  const double hw = wilson_half_width(s.count(both), s.total());
  r.empirically_independent = std::abs(to_double(r.difference)) <= hw;
  return r;
}

//---------------------------------------------------------------------------//
// Trees
//---------------------------------------------------------------------------//

std::vector<std::string> Branch::grid_names() const {
  std::vector<std::string> out;
  for (const auto& ch : channels) out.push_back(ch.grid->name());
  return out;
}

std::size_t Branch::channel_of(const std::string& grid) const {
  for (std::size_t k = 0; k < channels.size(); ++k)
    if (channels[k].grid->name() == grid) return k;
  return static_cast<std::size_t>(-1);
}

std::size_t ProbabilityTree::branch_of(const std::string& grid) const {
  for (std::size_t b = 0; b < branches.size(); ++b)
    if (branches[b].channel_of(grid) != static_cast<std::size_t>(-1)) return b;
  fail(ErrorCode::UnknownGrid, "grid '" + grid + "' is not part of this tree");
}

bool ProbabilityTree::valid() const {
  return std::all_of(branches.begin(), branches.end(),
                     [&](const Branch& b) { return b.trunk == trunk && b.validation.passed(); });
}

std::vector<std::vector<std::size_t>> group_compatible(const Backend& backend,
                                                       const std::vector<MeasurementChannel>& channels) {
  std::vector<std::size_t> order(channels.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    const auto& ga = channels[a].grid->name();
    const auto& gb = channels[b].grid->name();
    return ga != gb ? ga < gb : channels[a].id < channels[b].id;
  });
  std::vector<std::vector<std::size_t>> groups;
  for (auto i : order) {
    bool placed = false;
    for (auto& group : groups) {
      const bool fits = std::all_of(group.begin(), group.end(),
                                    [&](std::size_t j) { return compatible(backend, channels[i], channels[j]); });
      if (fits) {
        group.push_back(i);
        placed = true;
        break;
      }
    }
    if (!placed) groups.push_back({i});
  }
  return groups;
}

ProbabilityTree build_tree(const Laboratory& lab, const GenerationHandle& g, const std::vector<MeasurementChannel>& channels,
                           std::uint64_t trials, const SeededStream& rng, SuccessionOptions options) {
  if (channels.empty()) fail(ErrorCode::InvalidChannel, "a tree needs at least one grid");
  if (trials < 2) fail(ErrorCode::InvalidTrialCount, "a tree needs at least two trials per branch");
  for (std::size_t i = 0; i < channels.size(); ++i)
    for (std::size_t j = i + 1; j < channels.size(); ++j)
      if (channels[i].grid->name() == channels[j].grid->name() && channels[i].subsystem == channels[j].subsystem)
        fail(ErrorCode::DuplicateGridName, "grid '" + channels[i].grid->name() + "' requested twice");

  const auto& op = lab.resolve(g);
  const auto& state = lab.oracle_state(g);

  ProbabilityTree tree;
  tree.identity = g_tree_identity.fetch_add(1);
  tree.trunk = {op.label, op.trunk_domain, op.trunk_domain.t_start, op.trunk_domain.t_end};
  tree.trials_per_branch = trials;
  tree.seed = rng.descriptor();

  const auto groups = group_compatible(lab.backend(), channels);
  for (std::size_t b = 0; b < groups.size(); ++b) {
    Branch branch;
    branch.trunk = tree.trunk;
    for (auto i : groups[b]) branch.channels.push_back(channels[i]);
    branch.branch_domain = branch.channels.front().branch_domain;
    for (const auto& ch : branch.channels) {
      for (int k = 0; k < 3; ++k) {
        branch.branch_domain.box_min[k] = std::min(branch.branch_domain.box_min[k], ch.branch_domain.box_min[k]);
        branch.branch_domain.box_max[k] = std::max(branch.branch_domain.box_max[k], ch.branch_domain.box_max[k]);
      }
      branch.branch_domain.t_start = std::min(branch.branch_domain.t_start, ch.branch_domain.t_start);
      branch.branch_domain.t_end = std::max(branch.branch_domain.t_end, ch.branch_domain.t_end);
    }

    const ChannelSet set(lab.backend(), state.factors, branch.channels);
    const auto stream = rng.split(b);
    branch.seed = stream.descriptor();
    branch.joint = run_joint_succession(lab, g, set, trials, stream, options);
    tree.exemplars_generated += trials;

    std::vector<std::string> labels;
    for (std::size_t o = 0; o < set.joint_size(); ++o) {
      const auto idx = set.split_joint(o);
      std::string label;
      for (std::size_t k = 0; k < idx.size(); ++k)
        label += (k == 0 ? "" : ",") + branch.channels[k].grid->spectrum()[idx[k]].label;
      labels.push_back(std::move(label));
    }
    branch.space = KolmogorovSpace(std::move(labels), branch.joint.counts);
    branch.validation = validate_kolmogorov(branch.space);
    for (std::size_t k = 0; k < branch.channels.size(); ++k) {
      branch.tables.push_back(marginal_table(branch.joint, set, k, op.label, branch.seed));
      branch.laws.push_back(estimate_law(branch.tables.back()));
    }
    branch.exact_joint = set.exact_joint(state);
    for (std::size_t k = 0; k < branch.channels.size(); ++k) branch.exact_laws.push_back(set.exact_marginal(state, k));
    tree.branches.push_back(std::move(branch));
  }
  return tree;
}

std::vector<ColinearityCheck> check_colinearity(const ProbabilityTree& tree) {
  std::vector<ColinearityCheck> out;
  for (std::size_t b = 0; b < tree.branches.size(); ++b) {
    const auto& br = tree.branches[b];
    for (std::size_t i = 0; i < br.channels.size(); ++i) {
      for (std::size_t j = 0; j < br.channels.size(); ++j) {
        const auto& base = *br.channels[i].grid;
        const auto& derived = *br.channels[j].grid;
        if (i == j || !derived.derived() || br.channels[i].subsystem != br.channels[j].subsystem) continue;
        if (derived.base() != base.name() && derived.root() != base.name()) continue;
        ColinearityCheck c;
        c.branch = b;
        c.base_grid = base.name();
        c.derived_grid = derived.name();
        c.pushforward.assign(derived.size(), 0);
        std::vector<std::size_t> image(base.size(), 0);
        for (std::size_t r = 0; r < derived.from_root().size(); ++r)
          image[base.from_root()[r]] = derived.from_root()[r];
        for (std::size_t k = 0; k < base.size(); ++k) c.pushforward[image[k]] += br.tables[i].counts[k];
        c.derived_counts = br.tables[j].counts;
        c.passed = c.pushforward == c.derived_counts;
        out.push_back(std::move(c));
      }
    }
  }
  return out;
}

void cross_branch_joint(const ProbabilityTree& tree, const BranchEvent& a, const BranchEvent& b) {
  cross_branch_joint(tree, a, tree, b);
}

void cross_branch_joint(const ProbabilityTree& ta, const BranchEvent& a, const ProbabilityTree& tb,
                        const BranchEvent& b) {
  if (ta.identity != tb.identity || ta.trunk.generation != tb.trunk.generation) {
    fail(ErrorCode::UndefinedJointProbability,
         "events belong to two different trees (generations '" + ta.trunk.generation + "' and '" +
             tb.trunk.generation + "'); no exemplar is ever produced by both, so no joint outcome exists");
  }
  if (a.branch >= ta.branches.size() || b.branch >= tb.branches.size())
    fail(ErrorCode::EventOutsideUniverse, "branch index out of range");
  if (a.branch == b.branch)
    fail(ErrorCode::SameBranch, "both events live in branch " + std::to_string(a.branch) +
                                    "; their joint probability is given by event_dependence");
  const auto names = [](const Branch& br) {
    std::string s;
    for (const auto& g : br.grid_names()) s += (s.empty() ? "" : ",") + g;
    return s;
  };
  fail(ErrorCode::UndefinedJointProbability,
       "branch " + std::to_string(a.branch) + " {" + names(ta.branches[a.branch]) + "} and branch " +
           std::to_string(b.branch) + " {" + names(ta.branches[b.branch]) +
           "} use mutually exclusive measurement processes; each exemplar is consumed by one of them, so the "
           "two events never co-occur and their joint probability has no meaning");
}

MetaDependenceReport meta_dependence_report(const Laboratory& lab, const ProbabilityTree& tree,
                                            const std::string& grid_x, const std::string& grid_y) {
  MetaDependenceReport r;
  r.grid_x = grid_x;
  r.grid_y = grid_y;
  r.branch_x = tree.branch_of(grid_x);
  r.branch_y = tree.branch_of(grid_y);
  if (r.branch_x == r.branch_y)
    fail(ErrorCode::SameBranch, "grids '" + grid_x + "' and '" + grid_y + "' share a branch; use event_dependence");

  const auto& bx = tree.branches[r.branch_x];
  const auto& by = tree.branches[r.branch_y];
  const auto kx = bx.channel_of(grid_x);
  const auto ky = by.channel_of(grid_y);
  r.dispersion_x = dispersion(bx.laws[kx]);
  r.dispersion_y = dispersion(by.laws[ky]);
  r.exact_dispersion_x = dispersion(bx.exact_laws[kx], bx.laws[kx].codes);
  r.exact_dispersion_y = dispersion(by.exact_laws[ky], by.laws[ky].codes);
  r.commuting = compatible(lab.backend(), bx.channels[kx], by.channels[ky]);

  const auto floor_of = [](const std::vector<double>& codes) {
    const auto [lo, hi] = std::minmax_element(codes.begin(), codes.end());
    return kEmpiricalDispersionEpsilon * 0.5 * (*hi - *lo);
  };
  const double floor_x = floor_of(bx.laws[kx].codes);
  const double floor_y = floor_of(by.laws[ky].codes);
  if (r.dispersion_x < kEmpiricalDispersionEpsilon && r.dispersion_y > floor_y) {
    r.extremal_witness = true;
    r.sharp_grid = grid_x;
  } else if (r.dispersion_y < kEmpiricalDispersionEpsilon && r.dispersion_x > floor_x) {
    r.extremal_witness = true;
    r.sharp_grid = grid_y;
  }
  r.both_exactly_sharp = r.exact_dispersion_x < kExactDispersionEpsilon && r.exact_dispersion_y < kExactDispersionEpsilon;
  r.consequence_holds = r.commuting || !r.both_exactly_sharp;
  return r;
}

DeficitReport interference_deficit(const Laboratory& lab, const GenerationHandle& g1, const GenerationHandle& g2,
                                   const GenerationHandle& composed, const MeasurementChannel& channel,
                                   std::pair<double, double> weights, std::uint64_t trials, const SeededStream& rng,
                                   SuccessionOptions options) {
  const auto& op = lab.resolve(composed);
  const auto* kind = std::get_if<ComposedKind>(&op.kind);
  if (kind == nullptr || kind->children != std::vector<std::string>{g1.label, g2.label})
    fail(ErrorCode::NotComposedOf, "'" + op.label + "' is not composed of ('" + g1.label + "', '" + g2.label + "')");
  const auto [w1, w2] = weights;
  if (!(w1 >= 0) || !(w2 >= 0) || std::abs(w1 + w2 - 1) > 1e-12)
    fail(ErrorCode::InvalidWeights, "deficit weights must be nonnegative and sum to 1");

  DeficitReport r;
  r.grid = channel.grid->name();
  r.codes = channel.grid->codes();
  r.w1 = exact(w1);
  r.w2 = Ratio(1) - r.w1;

  r.law1 = estimate_law(run_succession(lab, g1, channel, trials, rng.split(0), options));
  r.law2 = estimate_law(run_succession(lab, g2, channel, trials, rng.split(1), options));
  r.law12 = estimate_law(run_succession(lab, composed, channel, trials, rng.split(2), options));

  const ChannelSet set(lab.backend(), lab.oracle_state(composed).factors, {channel});
  r.exact_p1 = set.exact_marginal(lab.oracle_state(g1), 0);
  r.exact_p2 = set.exact_marginal(lab.oracle_state(g2), 0);
  r.exact_p12 = set.exact_marginal(lab.oracle_state(composed), 0);

  const double n = static_cast<double>(trials);
  const double dw1 = to_double(r.w1);
  const double dw2 = to_double(r.w2);
  r.mixture_total = 0;
  for (std::size_t j = 0; j < r.codes.size(); ++j) {
    const Ratio mixture = r.w1 * r.law1.frequency(j) + r.w2 * r.law2.frequency(j);
    r.mixture_total += mixture;
    r.deficit.push_back(r.law12.frequency(j) - mixture);
    r.raw_residual.push_back(r.law12.frequency(j) - r.law1.frequency(j) - r.law2.frequency(j));
    const double d = to_double(r.deficit.back());
    r.max_abs_deficit = std::max(r.max_abs_deficit, std::abs(d));

    const double band = r.law12.wilson_half_width[j] + dw1 * r.law1.wilson_half_width[j] +
                        dw2 * r.law2.wilson_half_width[j];
    r.significant.push_back(std::abs(d) > band);
    r.any_significant = r.any_significant || r.significant.back();

    r.exact_deficit.push_back(r.exact_p12[j] - (dw1 * r.exact_p1[j] + dw2 * r.exact_p2[j]));
    r.exact_raw_residual.push_back(r.exact_p12[j] - r.exact_p1[j] - r.exact_p2[j]);
    const auto var = [](double p) { return p * (1 - p); };
    r.deficit_sigma.push_back(
        std::sqrt((var(r.exact_p12[j]) + dw1 * dw1 * var(r.exact_p1[j]) + dw2 * dw2 * var(r.exact_p2[j])) / n));
  }
  return r;
}

std::string evolved_label(const std::string& base, const std::string& conditions, double dt) {
  return base + "~" + conditions + "@" + format_double(dt);
}

std::vector<FamilyMember> evolution_family(Laboratory& lab, const GenerationHandle& g,
                                           const ExternalConditions& conditions, const std::vector<double>& durations,
                                           const std::vector<MeasurementChannel>& channels, std::uint64_t trials,
                                           const SeededStream& rng, SuccessionOptions options) {
  if (durations.empty()) fail(ErrorCode::InvalidDurations, "evolution family needs at least one duration");
  for (std::size_t i = 0; i < durations.size(); ++i) {
    if (!(durations[i] >= 0) || !std::isfinite(durations[i]))
      fail(ErrorCode::InvalidDurations, "durations must be finite and nonnegative");
    if (i > 0 && durations[i] < durations[i - 1]) fail(ErrorCode::InvalidDurations, "durations must be sorted");
  }
  std::vector<FamilyMember> family;
  for (double dt : durations) {
    const auto h = lab.evolve_generation(g, conditions, dt, evolved_label(g.label, conditions.name, dt));
    family.push_back({dt, h, build_tree(lab, h, channels, trials, rng, options)});
  }
  return family;
}

}  // namespace iqm
