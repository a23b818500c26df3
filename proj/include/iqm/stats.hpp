#pragma once

// Repeated [generation · measurement] successions and the probability laws
// estimated from them.

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "iqm/core.hpp"
#include "iqm/grids.hpp"
#include "iqm/ratio.hpp"
#include "iqm/rng.hpp"

namespace iqm {

inline constexpr double kDefaultConvergenceEpsilon = 0.01;
inline constexpr double kWilsonZ95 = 1.959963984540054;

struct FrequencyTable {
  std::string generation;
  std::string grid;
  std::vector<double> codes;
  std::vector<std::uint64_t> counts;
  /// Counts over the first ⌊N/2⌋ trials.
  std::vector<std::uint64_t> half_counts;
  std::uint64_t total = 0;
  std::uint64_t half_total = 0;
  std::string seed;

  friend bool operator==(const FrequencyTable&, const FrequencyTable&) = default;
};

/// Counts over the joint outcomes of one channel set.
struct JointCounts {
  std::vector<std::uint64_t> counts;
  std::vector<std::uint64_t> half_counts;
  std::uint64_t total = 0;
  std::uint64_t half_total = 0;

  friend bool operator==(const JointCounts&, const JointCounts&) = default;
};

struct SuccessionOptions {
  /// Worker threads; results do not depend on this value.
  unsigned threads = 1;
};

/// N fresh exemplars of G, each consumed by one simultaneous act of `set`.
/// Trial q draws from rng.split(q).
JointCounts run_joint_succession(const Laboratory& lab, const GenerationHandle& g, const ChannelSet& set,
                                 std::uint64_t trials, const SeededStream& rng, SuccessionOptions options = {});

FrequencyTable run_succession(const Laboratory& lab, const GenerationHandle& g, const MeasurementChannel& ch,
                              std::uint64_t trials, const SeededStream& rng, SuccessionOptions options = {});

/// Marginal table of channel `k` from joint counts.
FrequencyTable marginal_table(const JointCounts& joint, const ChannelSet& set, std::size_t k,
                              const std::string& generation, const std::string& seed);

struct ProbabilityLaw {
  std::string generation;
  std::string grid;
  std::vector<double> codes;
  std::vector<std::uint64_t> counts;
  std::uint64_t total = 0;
  std::vector<std::uint64_t> half_counts;
  std::uint64_t half_total = 0;

  /// Sup-norm distance between half-sample and full-sample frequencies.
  double convergence = 0;
  double epsilon = kDefaultConvergenceEpsilon;
  bool converged = false;
  /// Wilson 95 % interval half-width per outcome.
  std::vector<double> wilson_half_width;

  Ratio frequency(std::size_t j) const { return Ratio(counts.at(j), total); }
  std::vector<Ratio> frequencies() const;
  std::vector<double> frequencies_double() const;
};

ProbabilityLaw estimate_law(const FrequencyTable& table, double epsilon = kDefaultConvergenceEpsilon);

/// Wilson score interval half-width for `successes` out of `trials`.
double wilson_half_width(std::uint64_t successes, std::uint64_t trials, double z = kWilsonZ95);

/// Population standard deviation of the codes under the estimated law.
double dispersion(const ProbabilityLaw& law, const QualificationGrid& grid);
double dispersion(const ProbabilityLaw& law);
/// Same for an exact law given as doubles.
double dispersion(std::span<const double> probabilities, std::span<const double> codes);

/// Sup-norm over outcomes; SpectrumMismatch when the spectra differ.
double law_distance(const ProbabilityLaw& a, const ProbabilityLaw& b);
/// Sup-norm against an exact law.
double law_distance(const ProbabilityLaw& a, std::span<const double> exact_law);

}  // namespace iqm
