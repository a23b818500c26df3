#pragma once

// Probability trees: one trunk (the generation and its space-time domain)
// and one branch per maximal group of mutually compatible channels, each
// branch crowned by a Kolmogorov space built from its own exemplars.

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include <boost/dynamic_bitset.hpp>

#include "iqm/core.hpp"
#include "iqm/grids.hpp"
#include "iqm/ratio.hpp"
#include "iqm/stats.hpp"

namespace iqm {

using Event = boost::dynamic_bitset<>;

inline constexpr std::size_t kExplicitAlgebraLimit = 16;
inline constexpr double kEmpiricalDispersionEpsilon = 0.05;
inline constexpr double kExactDispersionEpsilon = 1e-9;

/// [U, τ, p]: U is the branch's joint outcome set, τ its power set and p the
/// additive measure induced by elementary counts. For |U| ≤ 16 the measure of
/// every event is tabulated; larger universes evaluate events on demand.
class KolmogorovSpace {
 public:
  KolmogorovSpace() = default;
  KolmogorovSpace(std::vector<std::string> outcome_labels, std::vector<std::uint64_t> counts);

  std::size_t universe_size() const noexcept { return labels_.size(); }
  const std::vector<std::string>& labels() const noexcept { return labels_; }
  const std::vector<std::uint64_t>& counts() const noexcept { return counts_; }
  std::uint64_t total() const noexcept { return total_; }
  bool explicit_algebra() const noexcept { return !table_.empty(); }

  Event universe() const;
  Event empty_event() const;
  /// EventOutsideUniverse for an index ≥ |U|.
  Event event(const std::vector<std::size_t>& outcomes) const;

  Ratio measure(const Event& e) const;
  std::uint64_t count(const Event& e) const;

  /// Replaces p(e) by `value`. Exists only so tests and plans can inject a violation.
  void tamper_for_testing(const Event& e, Ratio value);
  const std::map<Event, Ratio>& tampered() const noexcept { return overrides_; }

  std::string describe(const Event& e) const;

 private:
  void check(const Event& e) const;

  std::vector<std::string> labels_;
  std::vector<std::uint64_t> counts_;
  std::uint64_t total_ = 0;
  std::vector<std::uint64_t> table_;
  std::map<Event, Ratio> overrides_;
};

struct AxiomCheck {
  std::string axiom;
  bool passed = true;
  std::uint64_t instances = 0;
  std::string witness;
};

struct ValidationReport {
  std::vector<AxiomCheck> checks;

  bool passed() const;
  /// Names of failing axioms.
  std::vector<std::string> failures() const;
};

/// Normalization, empty event, range, additivity on disjoint pairs and
/// subadditivity on overlapping pairs, all at exact rational equality.
ValidationReport validate_kolmogorov(const KolmogorovSpace& space);

struct DependenceReport {
  Ratio p_a, p_b, p_ab, product, difference;
  bool independent = false;
  /// Product lies inside the Wilson interval of p(A∩B).
  bool empirically_independent = false;
};

DependenceReport event_dependence(const KolmogorovSpace& space, const Event& a, const Event& b);

struct Trunk {
  std::string generation;
  SpacetimeDomain trunk_domain;
  double t0 = 0;
  double tG = 0;

  friend bool operator==(const Trunk&, const Trunk&) = default;
};

struct Branch {
  Trunk trunk;
  std::vector<MeasurementChannel> channels;
  SpacetimeDomain branch_domain;
  JointCounts joint;
  std::vector<FrequencyTable> tables;
  std::vector<ProbabilityLaw> laws;
  KolmogorovSpace space;
  ValidationReport validation;
  std::string seed;
  /// Oracle expectations: joint and per-channel exact laws.
  std::vector<double> exact_joint;
  std::vector<std::vector<double>> exact_laws;

  std::vector<std::string> grid_names() const;
  /// Index of the channel measuring `grid`, or npos.
  std::size_t channel_of(const std::string& grid) const;
  /// Revalidates the space (after a tamper).
  void revalidate() { validation = validate_kolmogorov(space); }
};

struct ProbabilityTree {
  std::uint64_t identity = 0;
  Trunk trunk;
  std::vector<Branch> branches;
  std::uint64_t trials_per_branch = 0;
  std::uint64_t exemplars_generated = 0;
  std::string seed;

  /// Branch containing `grid`; UnknownGrid otherwise.
  std::size_t branch_of(const std::string& grid) const;
  bool valid() const;
};

/// Channels are taken in lexicographic grid-name order (channel id breaks
/// ties); each joins the first group it is pairwise compatible with.
/// Returns indices into `channels`.
std::vector<std::vector<std::size_t>> group_compatible(const Backend& backend,
                                                       const std::vector<MeasurementChannel>& channels);

ProbabilityTree build_tree(const Laboratory& lab, const GenerationHandle& g, const std::vector<MeasurementChannel>& channels,
                           std::uint64_t trials, const SeededStream& rng, SuccessionOptions options = {});

/// A derived grid measured next to its base in one branch: its counts must be
/// the pushforward of the base counts.
struct ColinearityCheck {
  std::size_t branch = 0;
  std::string base_grid, derived_grid;
  std::vector<std::uint64_t> pushforward, derived_counts;
  bool passed = false;
};

std::vector<ColinearityCheck> check_colinearity(const ProbabilityTree& tree);

struct BranchEvent {
  std::size_t branch = 0;
  Event event;
};

/// Always throws: UndefinedJointProbability for events of distinct branches
/// or distinct trees, SameBranch when both events live in one space (use
/// event_dependence there).
[[noreturn]] void cross_branch_joint(const ProbabilityTree& tree, const BranchEvent& a, const BranchEvent& b);
[[noreturn]] void cross_branch_joint(const ProbabilityTree& tree_a, const BranchEvent& a,
                                     const ProbabilityTree& tree_b, const BranchEvent& b);

struct MetaDependenceReport {
  std::string grid_x, grid_y;
  std::size_t branch_x = 0, branch_y = 0;
  double dispersion_x = 0, dispersion_y = 0;
  double exact_dispersion_x = 0, exact_dispersion_y = 0;
  bool commuting = false;
  /// One empirical dispersion below ε while the other exceeds its floor.
  bool extremal_witness = false;
  std::string sharp_grid;
  /// Both exact dispersions below the structural zero.
  bool both_exactly_sharp = false;
  /// Non-commuting grids never both sharp.
  bool consequence_holds = true;
};

MetaDependenceReport meta_dependence_report(const Laboratory& lab, const ProbabilityTree& tree,
                                            const std::string& grid_x, const std::string& grid_y);

struct DeficitReport {
  std::string grid;
  std::vector<double> codes;
  Ratio w1, w2;
  ProbabilityLaw law1, law2, law12;
  std::vector<Ratio> deficit;       // p12 − (w1·p1 + w2·p2)
  std::vector<Ratio> raw_residual;  // p12 − (p1 + p2)
  Ratio mixture_total;              // Σ (w1·p1 + w2·p2)
  double max_abs_deficit = 0;
  std::vector<bool> significant;
  bool any_significant = false;
  std::vector<double> exact_p1, exact_p2, exact_p12, exact_deficit, exact_raw_residual;
  /// Standard deviation of each deficit estimate from the oracle variances.
  std::vector<double> deficit_sigma;
};

DeficitReport interference_deficit(const Laboratory& lab, const GenerationHandle& g1, const GenerationHandle& g2,
                                   const GenerationHandle& composed, const MeasurementChannel& channel,
                                   std::pair<double, double> weights, std::uint64_t trials, const SeededStream& rng,
                                   SuccessionOptions options = {});

struct FamilyMember {
  double dt = 0;
  GenerationHandle generation;
  ProbabilityTree tree;
};

/// One tree per duration; every member uses `rng`, so the Δt = 0 member
/// reproduces build_tree on the base generation exactly.
std::vector<FamilyMember> evolution_family(Laboratory& lab, const GenerationHandle& g,
                                           const ExternalConditions& conditions, const std::vector<double>& durations,
                                           const std::vector<MeasurementChannel>& channels, std::uint64_t trials,
                                           const SeededStream& rng, SuccessionOptions options = {});

std::string evolved_label(const std::string& base, const std::string& conditions, double dt);

}  // namespace iqm
