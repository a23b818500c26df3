#include "iqm/stats.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <thread>

#include "iqm/error.hpp"

namespace iqm {

JointCounts run_joint_succession(const Laboratory& lab, const GenerationHandle& g, const ChannelSet& set,
                                 std::uint64_t trials, const SeededStream& rng, SuccessionOptions options) {
  if (trials == 0) fail(ErrorCode::InvalidTrialCount, "a succession needs at least one trial");
  lab.resolve(g);

  const std::uint64_t half = trials / 2;
  const unsigned workers =
      static_cast<unsigned>(std::clamp<std::uint64_t>(options.threads == 0 ? 1 : options.threads, 1, trials));

  struct Partial {
    std::vector<std::uint64_t> counts;
    std::vector<std::uint64_t> half_counts;
    std::exception_ptr error;
  };
  std::vector<Partial> partials(workers);

  const auto work = [&](unsigned w) {
    auto& part = partials[w];
    part.counts.assign(set.joint_size(), 0);
    part.half_counts.assign(set.joint_size(), 0);
    const std::uint64_t begin = trials * w / workers;
    const std::uint64_t end = trials * (w + 1) / workers;
    for (std::uint64_t q = begin; q < end; ++q) {
      try {
        auto stream = rng.split(q);
        auto ex = lab.generate(g, stream);
        const auto rec = set.measure(ex, stream, q);
        std::size_t joint = 0;
        for (std::size_t k = 0; k < rec.records.size(); ++k)
          joint = joint * set.channels()[k].grid->size() + rec.records[k].index;
        ++part.counts[joint];
        if (q < half) ++part.half_counts[joint];
      } catch (const Error& e) {
        part.error = std::make_exception_ptr(Error(e.code(), "trial " + std::to_string(q) + ": " + e.what()));
        return;
      } catch (...) {
        part.error = std::current_exception();
        return;
      }
    }
  };

  if (workers == 1) {
    work(0);
  } else {
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (unsigned w = 0; w < workers; ++w) pool.emplace_back(work, w);
    for (auto& t : pool) t.join();
  }

  JointCounts out;
  out.counts.assign(set.joint_size(), 0);
  out.half_counts.assign(set.joint_size(), 0);
  for (const auto& part : partials) {
    if (part.error) std::rethrow_exception(part.error);
    for (std::size_t j = 0; j < out.counts.size(); ++j) {
      out.counts[j] += part.counts[j];
      out.half_counts[j] += part.half_counts[j];
    }
  }
  out.total = trials;
  out.half_total = half;
  return out;
}

FrequencyTable marginal_table(const JointCounts& joint, const ChannelSet& set, std::size_t k,
                              const std::string& generation, const std::string& seed) {
  const auto& grid = *set.channels().at(k).grid;
  FrequencyTable t;
  t.generation = generation;
  t.grid = grid.name();
  t.codes = grid.codes();
  t.counts.assign(grid.size(), 0);
  t.half_counts.assign(grid.size(), 0);
  for (std::size_t o = 0; o < joint.counts.size(); ++o) {
    const auto j = set.split_joint(o)[k];
    t.counts[j] += joint.counts[o];
    t.half_counts[j] += joint.half_counts[o];
  }
  t.total = joint.total;
  t.half_total = joint.half_total;
  t.seed = seed;
  return t;
}

FrequencyTable run_succession(const Laboratory& lab, const GenerationHandle& g, const MeasurementChannel& ch,
                              std::uint64_t trials, const SeededStream& rng, SuccessionOptions options) {
  const ChannelSet set(lab.backend(), lab.oracle_state(g).factors, {ch});
  const auto joint = run_joint_succession(lab, g, set, trials, rng, options);
  return marginal_table(joint, set, 0, g.label, rng.descriptor());
}

std::vector<Ratio> ProbabilityLaw::frequencies() const {
  std::vector<Ratio> out;
  out.reserve(counts.size());
  for (std::size_t j = 0; j < counts.size(); ++j) out.push_back(frequency(j));
  return out;
}

std::vector<double> ProbabilityLaw::frequencies_double() const {
  std::vector<double> out;
  out.reserve(counts.size());
  for (std::size_t j = 0; j < counts.size(); ++j) out.push_back(to_double(frequency(j)));
  return out;
}

double wilson_half_width(std::uint64_t successes, std::uint64_t trials, double z) {
  if (trials == 0) return 0.5;
  const double n = static_cast<double>(trials);
  const double p = static_cast<double>(successes) / n;
  const double z2 = z * z;
  return z / (1 + z2 / n) * std::sqrt(p * (1 - p) / n + z2 / (4 * n * n));
}

ProbabilityLaw estimate_law(const FrequencyTable& table, double epsilon) {
  if (table.total < 2) fail(ErrorCode::EmptyTable, "a law needs a table of at least two trials");
  std::uint64_t sum = 0;
  for (auto c : table.counts) sum += c;
  if (sum != table.total) fail(ErrorCode::EmptyTable, "counts do not add up to the trial total");

  ProbabilityLaw law;
  law.generation = table.generation;
  law.grid = table.grid;
  law.codes = table.codes;
  law.counts = table.counts;
  law.total = table.total;
  law.half_counts = table.half_counts;
  law.half_total = table.half_total;
  law.epsilon = epsilon;

  Ratio worst = 0;
  for (std::size_t j = 0; j < table.counts.size(); ++j) {
    const Ratio full(table.counts[j], table.total);
    const Ratio half = table.half_total == 0 ? full : Ratio(table.half_counts[j], table.half_total);
    worst = std::max(worst, abs(Ratio(half - full)));
    law.wilson_half_width.push_back(wilson_half_width(table.counts[j], table.total));
  }
  law.convergence = to_double(worst);
  law.converged = law.convergence <= epsilon;
  return law;
}

double dispersion(const ProbabilityLaw& law, const QualificationGrid& grid) {
  if (grid.codes() != law.codes) fail(ErrorCode::SpectrumMismatch, "law and grid '" + grid.name() + "' differ");
  return dispersion(law);
}

double dispersion(const ProbabilityLaw& law) {
  Ratio mean = 0;
  Ratio second = 0;
  for (std::size_t j = 0; j < law.counts.size(); ++j) {
    const Ratio p = law.frequency(j);
    const Ratio x = exact(law.codes[j]);
    mean += p * x;
    second += p * x * x;
  }
  const Ratio variance = second - mean * mean;
  return std::sqrt(std::max(0.0, to_double(variance)));
}

double dispersion(std::span<const double> p, std::span<const double> codes) {
  if (p.size() != codes.size()) fail(ErrorCode::SpectrumMismatch, "law and codes differ in size");
  double mean = 0;
  for (std::size_t j = 0; j < p.size(); ++j) mean += p[j] * codes[j];
  double variance = 0;
  for (std::size_t j = 0; j < p.size(); ++j) variance += p[j] * (codes[j] - mean) * (codes[j] - mean);
  return std::sqrt(std::max(0.0, variance));
}

double law_distance(const ProbabilityLaw& a, const ProbabilityLaw& b) {
  if (a.codes != b.codes) fail(ErrorCode::SpectrumMismatch, "laws over different spectra");
  Ratio worst = 0;
  for (std::size_t j = 0; j < a.codes.size(); ++j) worst = std::max(worst, abs(Ratio(a.frequency(j) - b.frequency(j))));
  return to_double(worst);
}

double law_distance(const ProbabilityLaw& a, std::span<const double> exact_law) {
  if (exact_law.size() != a.counts.size()) fail(ErrorCode::SpectrumMismatch, "laws over different spectra");
  double worst = 0;
  for (std::size_t j = 0; j < exact_law.size(); ++j)
    worst = std::max(worst, std::abs(to_double(a.frequency(j)) - exact_law[j]));
  return worst;
}

}  // namespace iqm
