#pragma once

// Qualification grids, coding rules and measurement channels.
//
// A grid is a semantic dimension with a finite spectrum of coded values. An
// elementary grid is bound to an observable (optionally through a binning of
// its eigenvalues); a derived grid is a pointwise function of another grid
// and is measured by the very same physical act. A channel adds the coding
// rule: each spectrum value owns a disjoint space-time region, the raw mark
// of a measurement is placed inside the region of the realized value, and
// decoding inverts region membership.

#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "iqm/backend.hpp"
#include "iqm/core.hpp"
#include "iqm/rng.hpp"
#include "iqm/spacetime.hpp"

namespace iqm {

struct SpectrumValue {
  std::string label;
  double code = 0;

  friend bool operator==(const SpectrumValue&, const SpectrumValue&) = default;
};

struct PointwiseFunction {
  std::string description;
  std::function<double(double)> apply;
};

class QualificationGrid {
 public:
  const std::string& name() const noexcept { return name_; }
  const std::string& units() const noexcept { return units_; }
  const std::vector<SpectrumValue>& spectrum() const noexcept { return spectrum_; }
  std::size_t size() const noexcept { return spectrum_.size(); }
  std::vector<double> codes() const;

  bool derived() const noexcept { return !base_.empty(); }
  /// Immediate base grid (derived grids only).
  const std::string& base() const noexcept { return base_; }
  /// Elementary grid at the bottom of the derivation chain (itself if elementary).
  const std::string& root() const noexcept { return root_; }
  /// Spectrum index of this grid for each spectrum index of the root grid.
  const std::vector<std::size_t>& from_root() const noexcept { return from_root_; }

  /// Elementary grids: the bound observable and the spectrum index of each
  /// merged eigenspace.
  const std::shared_ptr<const ObservableSpec>& observable() const noexcept { return observable_; }
  const std::vector<std::size_t>& cell_of_eigenspace() const noexcept { return cell_of_eigenspace_; }
  const std::optional<std::vector<double>>& bin_edges() const noexcept { return bin_edges_; }
  const std::string& function_description() const noexcept { return function_description_; }

  /// The grid's measurement reduced to an outcome basis over root spectrum indices.
  OutcomeBasis root_basis() const;

 private:
  friend class GridCatalog;

  std::string name_;
  std::string units_;
  std::vector<SpectrumValue> spectrum_;
  std::string base_;
  std::string root_;
  std::shared_ptr<const QualificationGrid> root_grid_;
  std::vector<std::size_t> from_root_;
  std::shared_ptr<const ObservableSpec> observable_;
  std::vector<std::size_t> cell_of_eigenspace_;
  std::optional<std::vector<double>> bin_edges_;
  std::string function_description_;
};

class GridCatalog {
 public:
  /// Elementary grid; every code must match one merged eigenvalue of `obs`
  /// and every eigenvalue one code.
  const QualificationGrid& define_grid(const std::string& name, std::vector<SpectrumValue> spectrum,
                                       std::shared_ptr<const ObservableSpec> obs, std::string units = {});

  /// Elementary grid whose k cells partition the observable's eigenvalues by
  /// `edges` (k+1 strictly increasing values; last cell closed on the right).
  /// Codes default to the cell midpoints.
  const QualificationGrid& define_binned_grid(const std::string& name, std::shared_ptr<const ObservableSpec> obs,
                                              std::vector<double> edges, std::string units = {},
                                              std::vector<SpectrumValue> spectrum = {});

  /// Spectrum is the image of f in order of first appearance over the base
  /// spectrum; colliding preimages merge into one value.
  const QualificationGrid& derive_grid(const std::string& base, const PointwiseFunction& f, const std::string& name,
                                       std::string units = {});

  const QualificationGrid& get(const std::string& name) const;
  std::shared_ptr<const QualificationGrid> share(const std::string& name) const;
  bool contains(const std::string& name) const { return grids_.count(name) != 0; }

 private:
  const QualificationGrid& insert(QualificationGrid grid);

  std::map<std::string, std::shared_ptr<const QualificationGrid>> grids_;
};

/// Raw marks ↔ spectrum index through disjoint outcome regions.
struct CodingRule {
  std::vector<SpacetimeDomain> outcome_regions;

  /// Index of the unique region containing `mark`; throws InvalidChannel when
  /// the mark is in none or several.
  std::size_t decode(const SpacetimePoint& mark) const;
  bool regions_disjoint() const;
};

struct MeasurementChannel {
  std::string id;
  std::string apparatus_id;
  std::shared_ptr<const QualificationGrid> grid;
  CodingRule coding;
  SpacetimeDomain branch_domain;
  std::optional<std::size_t> subsystem;
};

/// Default branch domain: unit box over t ∈ [1, 2).
SpacetimeDomain default_branch_domain();

/// Validates (or, when `regions` is empty, lays out) the coding regions:
/// one slab per spectrum value along x inside `branch_domain`.
MeasurementChannel make_channel(std::string id, std::shared_ptr<const QualificationGrid> grid,
                                std::optional<std::size_t> subsystem = std::nullopt,
                                SpacetimeDomain branch_domain = default_branch_domain(),
                                std::vector<SpacetimeDomain> regions = {}, std::string apparatus_id = {});

struct MeasurementRecord {
  std::string channel;
  std::string grid;
  std::vector<SpacetimePoint> marks;
  std::size_t index = 0;
  double value = 0;
  std::string value_label;
  std::uint64_t trial = 0;
  double t0 = 0;
  double tG = 0;
  double tX = 0;
};

struct JointRecord {
  std::vector<MeasurementRecord> records;
  /// Fewer channels than measured systems.
  bool incomplete = false;
};

/// Structural-then-numeric compatibility: same root grid on the same system,
/// then distinct subsystems, then commutation of the root observables.
bool compatible(const Backend& backend, const MeasurementChannel& a, const MeasurementChannel& b);

/// A set of channels compiled for one simultaneous act on exemplars of a
/// given factor structure. Immutable and shareable across threads.
class ChannelSet {
 public:
  ChannelSet(const Backend& backend, std::span<const Index> factors, std::vector<MeasurementChannel> channels);

  const std::vector<MeasurementChannel>& channels() const noexcept { return channels_; }
  /// Number of joint outcomes (product of channel spectrum sizes).
  std::size_t joint_size() const noexcept { return joint_size_; }
  /// Joint outcome index (mixed radix over channel spectra) → per-channel index.
  std::vector<std::size_t> split_joint(std::size_t joint) const;

  /// Consumes the exemplar and returns one record per channel.
  JointRecord measure(MicrostateExemplar& ex, SeededStream& rng, std::uint64_t trial = 0) const;

  /// Exact law over joint outcomes for `state`.
  std::vector<double> exact_joint(const StateDescriptor& state) const;
  /// Exact law of channel `k` alone.
  std::vector<double> exact_marginal(const StateDescriptor& state, std::size_t k) const;

 private:
  const Backend* backend_;
  std::vector<Index> factors_;
  std::vector<MeasurementChannel> channels_;
  std::vector<std::size_t> component_of_channel_;
  std::shared_ptr<const CompiledMeasurement> compiled_;
  std::size_t joint_size_ = 1;
};

MeasurementRecord measure(MicrostateExemplar& ex, const MeasurementChannel& ch, const Backend& backend,
                          SeededStream& rng, std::uint64_t trial = 0);

/// One physical act yielding both coded values; IncompatibleGrids otherwise.
JointRecord measure_joint(MicrostateExemplar& ex, const MeasurementChannel& x, const MeasurementChannel& y,
                          const Backend& backend, SeededStream& rng, std::uint64_t trial = 0);

/// One channel per measured subsystem; fewer than system_count channels
/// yields a record flagged incomplete.
JointRecord measure_complete(MicrostateExemplar& ex, std::span<const MeasurementChannel> channels,
                             const Backend& backend, SeededStream& rng, std::uint64_t trial = 0);

struct TimeOfFlight {
  Point3 momentum{};
  double magnitude = 0;
};

/// p = m·(P − O)/(t − t0) and |p| = m·‖P − O‖/(t − t0).
TimeOfFlight tof_decode(const Point3& impact, double t, double t0, double mass, const Point3& origin);

}  // namespace iqm
