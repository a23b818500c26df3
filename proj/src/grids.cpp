#include "iqm/grids.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <set>

#include "iqm/error.hpp"

namespace iqm {
namespace {

bool same_value(double a, double b, double rel) {
  return std::abs(a - b) <= rel * std::max({1.0, std::abs(a), std::abs(b)});
}

std::string format_code(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

std::size_t effective_subsystem(const MeasurementChannel& ch) { return ch.subsystem.value_or(0); }

}  // namespace

//---------------------------------------------------------------------------//
// Grids
//---------------------------------------------------------------------------//

std::vector<double> QualificationGrid::codes() const {
  std::vector<double> out;
  out.reserve(spectrum_.size());
  for (const auto& v : spectrum_) out.push_back(v.code);
  return out;
}

OutcomeBasis QualificationGrid::root_basis() const {
  if (root_grid_) return root_grid_->root_basis();
  return OutcomeBasis::from_observable(*observable_, &cell_of_eigenspace_, spectrum_.size());
}

const QualificationGrid& GridCatalog::insert(QualificationGrid grid) {
  if (grids_.count(grid.name_) != 0) fail(ErrorCode::DuplicateGridName, "grid '" + grid.name_ + "' already defined");
  auto name = grid.name_;
  auto ptr = std::make_shared<const QualificationGrid>(std::move(grid));
  return *grids_.emplace(std::move(name), std::move(ptr)).first->second;
}

const QualificationGrid& GridCatalog::define_grid(const std::string& name, std::vector<SpectrumValue> spectrum,
                                                  std::shared_ptr<const ObservableSpec> obs, std::string units) {
  if (grids_.count(name) != 0) fail(ErrorCode::DuplicateGridName, "grid '" + name + "' already defined");
  if (!obs) fail(ErrorCode::SpectrumMismatch, "grid '" + name + "' is bound to no observable");
  if (spectrum.empty()) fail(ErrorCode::SpectrumMismatch, "grid '" + name + "' has an empty spectrum");
  for (std::size_t i = 0; i < spectrum.size(); ++i)
    for (std::size_t j = i + 1; j < spectrum.size(); ++j)
      if (spectrum[i].code == spectrum[j].code)
        fail(ErrorCode::NonDistinctCodes, "grid '" + name + "': values '" + spectrum[i].label + "' and '" +
                                              spectrum[j].label + "' share code " + format_code(spectrum[i].code));

  const auto& eigenvalues = obs->eigenvalues();
  std::vector<std::size_t> cell(eigenvalues.size());
  std::vector<int> hits(spectrum.size(), 0);
  for (std::size_t e = 0; e < eigenvalues.size(); ++e) {
    std::optional<std::size_t> match;
    for (std::size_t j = 0; j < spectrum.size(); ++j)
      if (same_value(spectrum[j].code, eigenvalues[e], kDegeneracyTolerance)) match = j;
    if (!match)
      fail(ErrorCode::SpectrumMismatch, "grid '" + name + "': eigenvalue " + format_code(eigenvalues[e]) + " of '" +
                                            obs->name() + "' has no spectrum value");
    cell[e] = *match;
    ++hits[*match];
  }
  for (std::size_t j = 0; j < spectrum.size(); ++j)
    if (hits[j] != 1)
      fail(ErrorCode::SpectrumMismatch, "grid '" + name + "': value '" + spectrum[j].label +
                                            "' does not correspond to exactly one eigenvalue of '" + obs->name() + "'");

  QualificationGrid g;
  g.name_ = name;
  g.units_ = std::move(units);
  g.spectrum_ = std::move(spectrum);
  g.root_ = name;
  g.from_root_.resize(g.spectrum_.size());
  for (std::size_t j = 0; j < g.from_root_.size(); ++j) g.from_root_[j] = j;
  g.observable_ = std::move(obs);
  g.cell_of_eigenspace_ = std::move(cell);
  return insert(std::move(g));
}

const QualificationGrid& GridCatalog::define_binned_grid(const std::string& name,
                                                         std::shared_ptr<const ObservableSpec> obs,
                                                         std::vector<double> edges, std::string units,
                                                         std::vector<SpectrumValue> spectrum) {
  if (grids_.count(name) != 0) fail(ErrorCode::DuplicateGridName, "grid '" + name + "' already defined");
  if (!obs) fail(ErrorCode::SpectrumMismatch, "grid '" + name + "' is bound to no observable");
  if (edges.size() < 2) fail(ErrorCode::IncompleteBins, "grid '" + name + "' needs at least one bin");
  for (std::size_t i = 1; i < edges.size(); ++i)
    if (!(edges[i] > edges[i - 1]))
      fail(ErrorCode::IncompleteBins, "grid '" + name + "': bin edges are not strictly increasing");
  const std::size_t k = edges.size() - 1;
  if (spectrum.empty()) {
    for (std::size_t j = 0; j < k; ++j) {
      const bool last = j + 1 == k;
      spectrum.push_back({"[" + format_code(edges[j]) + "," + format_code(edges[j + 1]) + (last ? "]" : ")"),
                          0.5 * (edges[j] + edges[j + 1])});
    }
  }
  if (spectrum.size() != k) fail(ErrorCode::SpectrumMismatch, "grid '" + name + "': spectrum size differs from bin count");
  for (std::size_t i = 0; i < k; ++i)
    for (std::size_t j = i + 1; j < k; ++j)
      if (spectrum[i].code == spectrum[j].code)
        fail(ErrorCode::NonDistinctCodes, "grid '" + name + "': bins " + std::to_string(i) + " and " +
                                              std::to_string(j) + " share a code");

  const auto& eigenvalues = obs->eigenvalues();
  std::vector<std::size_t> cell(eigenvalues.size());
  for (std::size_t e = 0; e < eigenvalues.size(); ++e) {
    const double x = eigenvalues[e];
    if (x < edges.front() || x > edges.back())
      fail(ErrorCode::IncompleteBins, "grid '" + name + "': readout " + format_code(x) + " falls outside the bins");
    const auto it = std::upper_bound(edges.begin(), edges.end(), x);
    cell[e] = std::min<std::size_t>(static_cast<std::size_t>(it - edges.begin()) - 1, k - 1);
  }

  QualificationGrid g;
  g.name_ = name;
  g.units_ = std::move(units);
  g.spectrum_ = std::move(spectrum);
  g.root_ = name;
  g.from_root_.resize(k);
  for (std::size_t j = 0; j < k; ++j) g.from_root_[j] = j;
  g.observable_ = std::move(obs);
  g.cell_of_eigenspace_ = std::move(cell);
  g.bin_edges_ = std::move(edges);
  return insert(std::move(g));
}

const QualificationGrid& GridCatalog::derive_grid(const std::string& base, const PointwiseFunction& f,
                                                  const std::string& name, std::string units) {
  const auto it = grids_.find(base);
  if (it == grids_.end()) fail(ErrorCode::UnknownBase, "derived grid '" + name + "' references unknown '" + base + "'");
  if (grids_.count(name) != 0) fail(ErrorCode::DuplicateGridName, "grid '" + name + "' already defined");
  const auto& b = *it->second;

  QualificationGrid g;
  g.name_ = name;
  g.units_ = std::move(units);
  g.base_ = base;
  g.root_ = b.root_;
  g.root_grid_ = b.root_grid_ ? b.root_grid_ : it->second;
  g.function_description_ = f.description;

  std::vector<std::size_t> from_base(b.size());
  std::vector<std::vector<std::string>> preimages;
  for (std::size_t j = 0; j < b.size(); ++j) {
    const double y = f.apply(b.spectrum_[j].code);
    if (!std::isfinite(y))
      fail(ErrorCode::SpectrumMismatch, "derived grid '" + name + "': f is undefined at code " +
                                            format_code(b.spectrum_[j].code));
    std::optional<std::size_t> found;
    for (std::size_t k = 0; k < g.spectrum_.size(); ++k)
      if (same_value(g.spectrum_[k].code, y, 1e-12)) found = k;
    if (!found) {
      found = g.spectrum_.size();
      g.spectrum_.push_back({"", y});
      preimages.emplace_back();
    }
    preimages[*found].push_back(b.spectrum_[j].label);
    from_base[j] = *found;
  }
  for (std::size_t k = 0; k < g.spectrum_.size(); ++k) {
    std::string label;
    for (const auto& p : preimages[k]) label += (label.empty() ? "" : "|") + p;
    g.spectrum_[k].label = label;
  }
  g.from_root_.resize(b.from_root_.size());
  for (std::size_t r = 0; r < b.from_root_.size(); ++r) g.from_root_[r] = from_base[b.from_root_[r]];
  return insert(std::move(g));
}

const QualificationGrid& GridCatalog::get(const std::string& name) const { return *share(name); }

std::shared_ptr<const QualificationGrid> GridCatalog::share(const std::string& name) const {
  const auto it = grids_.find(name);
  if (it == grids_.end()) fail(ErrorCode::UnknownGrid, "no grid named '" + name + "'");
  return it->second;
}

//---------------------------------------------------------------------------//
// Channels
//---------------------------------------------------------------------------//

std::size_t CodingRule::decode(const SpacetimePoint& mark) const {
  std::optional<std::size_t> hit;
  for (std::size_t j = 0; j < outcome_regions.size(); ++j) {
    if (!outcome_regions[j].contains(mark)) continue;
    if (hit) fail(ErrorCode::InvalidChannel, "raw mark lies in more than one outcome region");
    hit = j;
  }
  if (!hit) fail(ErrorCode::InvalidChannel, "raw mark lies in no outcome region");
  return *hit;
}

bool CodingRule::regions_disjoint() const {
  for (std::size_t i = 0; i < outcome_regions.size(); ++i)
    for (std::size_t j = i + 1; j < outcome_regions.size(); ++j)
      if (outcome_regions[i].overlaps(outcome_regions[j])) return false;
  return true;
}

SpacetimeDomain default_branch_domain() { return SpacetimeDomain{{0, 0, 0}, {1, 1, 1}, 1, 2}; }

MeasurementChannel make_channel(std::string id, std::shared_ptr<const QualificationGrid> grid,
                                std::optional<std::size_t> subsystem, SpacetimeDomain branch_domain,
                                std::vector<SpacetimeDomain> regions, std::string apparatus_id) {
  if (!grid) fail(ErrorCode::InvalidChannel, "channel '" + id + "' has no grid");
  if (!branch_domain.well_formed()) fail(ErrorCode::InvalidChannel, "channel '" + id + "': malformed branch domain");
  const std::size_t k = grid->size();
  if (regions.empty()) {
    const double x0 = branch_domain.box_min[0];
    const double width = (branch_domain.box_max[0] - x0) / static_cast<double>(k);
    if (!(width > 0)) fail(ErrorCode::InvalidChannel, "channel '" + id + "': branch domain has no x extent for regions");
    for (std::size_t j = 0; j < k; ++j) {
      SpacetimeDomain r = branch_domain;
      r.box_min[0] = x0 + width * static_cast<double>(j);
      r.box_max[0] = j + 1 == k ? branch_domain.box_max[0] : x0 + width * static_cast<double>(j + 1);
      regions.push_back(r);
    }
  }
  if (regions.size() != k)
    fail(ErrorCode::InvalidChannel, "channel '" + id + "': " + std::to_string(regions.size()) +
                                        " regions for a spectrum of " + std::to_string(k));
  for (const auto& r : regions)
    if (!r.well_formed()) fail(ErrorCode::InvalidChannel, "channel '" + id + "': malformed outcome region");

  MeasurementChannel ch;
  ch.id = std::move(id);
  ch.apparatus_id = apparatus_id.empty() ? "A(" + grid->name() + ")" : std::move(apparatus_id);
  ch.grid = std::move(grid);
  ch.coding.outcome_regions = std::move(regions);
  ch.branch_domain = branch_domain;
  ch.subsystem = subsystem;
  if (!ch.coding.regions_disjoint())
    fail(ErrorCode::InvalidChannel, "channel '" + ch.id + "': outcome regions overlap");
  return ch;
}

bool compatible(const Backend& backend, const MeasurementChannel& a, const MeasurementChannel& b) {
  const bool same_system = effective_subsystem(a) == effective_subsystem(b);
  if (same_system && a.grid->root() == b.grid->root()) return true;
  if (a.subsystem && b.subsystem && !same_system) return true;
  const auto ra = a.grid->root_basis();
  const auto rb = b.grid->root_basis();
  if (ra.dimension() != rb.dimension()) return false;
  return backend.commutes(ra.generator, rb.generator);
}

ChannelSet::ChannelSet(const Backend& backend, std::span<const Index> factors, std::vector<MeasurementChannel> channels)
    : backend_(&backend), factors_(factors.begin(), factors.end()), channels_(std::move(channels)) {
  if (channels_.empty()) fail(ErrorCode::InvalidChannel, "empty channel set");
  for (const auto& ch : channels_) {
    if (factors_.size() > 1 && !ch.subsystem)
      fail(ErrorCode::SystemCountMismatch, "channel '" + ch.id + "' names no subsystem of a " +
                                               std::to_string(factors_.size()) + "-system exemplar");
    if (effective_subsystem(ch) >= factors_.size())
      fail(ErrorCode::SystemCountMismatch, "channel '" + ch.id + "' targets subsystem " +
                                               std::to_string(effective_subsystem(ch)) + " of a " +
                                               std::to_string(factors_.size()) + "-system exemplar");
  }
  for (std::size_t i = 0; i < channels_.size(); ++i)
    for (std::size_t j = i + 1; j < channels_.size(); ++j)
      if (!compatible(backend, channels_[i], channels_[j]))
        fail(ErrorCode::IncompatibleGrids, "grids '" + channels_[i].grid->name() + "' and '" +
                                               channels_[j].grid->name() + "' cannot be measured in one act");

  std::vector<std::pair<std::string, std::size_t>> keys;
  std::vector<OutcomeBasis> components;
  for (const auto& ch : channels_) {
    const std::pair<std::string, std::size_t> key{ch.grid->root(), effective_subsystem(ch)};
    auto it = std::find(keys.begin(), keys.end(), key);
    if (it == keys.end()) {
      keys.push_back(key);
      components.push_back(ch.grid->root_basis().lifted(factors_, key.second));
      it = keys.end() - 1;
    }
    component_of_channel_.push_back(static_cast<std::size_t>(it - keys.begin()));
    joint_size_ *= ch.grid->size();
  }
  compiled_ = backend.compile(components);
}

std::vector<std::size_t> ChannelSet::split_joint(std::size_t joint) const {
  std::vector<std::size_t> out(channels_.size());
  for (std::size_t k = channels_.size(); k-- > 0;) {
    out[k] = joint % channels_[k].grid->size();
    joint /= channels_[k].grid->size();
  }
  return out;
}

JointRecord ChannelSet::measure(MicrostateExemplar& ex, SeededStream& rng, std::uint64_t trial) const {
  if (ex.consumed()) fail(ErrorCode::ExemplarConsumed, "exemplar of '" + ex.origin() + "' was already measured");
  if (ex.system_count() != factors_.size())
    fail(ErrorCode::SystemCountMismatch, "exemplar of '" + ex.origin() + "' has " + std::to_string(ex.system_count()) +
                                             " systems, channels expect " + std::to_string(factors_.size()));
  for (const auto& ch : channels_)
    if (ch.branch_domain.t_start < ex.birth_time())
      fail(ErrorCode::InvalidChannel, "channel '" + ch.id + "' starts before the exemplar exists");

  const auto& state = detail::ExemplarAccess::state(ex);
  const auto outcome = backend_->sample_outcome(state, *compiled_, rng);
  detail::ExemplarAccess::consume(ex);
  const auto roots = compiled_->decode(outcome);

  JointRecord out;
  out.incomplete = channels_.size() < factors_.size();
  for (std::size_t k = 0; k < channels_.size(); ++k) {
    const auto& ch = channels_[k];
    const auto& grid = *ch.grid;
    const std::size_t j = grid.from_root()[roots[component_of_channel_[k]]];
    std::array<double, 4> u{};
    for (auto& x : u) x = rng.next_unit();
    const auto mark = ch.coding.outcome_regions[j].at(u);

    MeasurementRecord rec;
    rec.channel = ch.id;
    rec.grid = grid.name();
    rec.marks.push_back(mark);
    rec.index = ch.coding.decode(mark);
    rec.value = grid.spectrum()[rec.index].code;
    rec.value_label = grid.spectrum()[rec.index].label;
    rec.trial = trial;
    rec.t0 = ex.origin_time();
    rec.tG = ex.birth_time();
    rec.tX = mark.time;
    out.records.push_back(std::move(rec));
  }
  return out;
}

std::vector<double> ChannelSet::exact_joint(const StateDescriptor& state) const {
  const auto p = backend_->distribution(state, *compiled_);
  std::vector<double> joint(joint_size_, 0.0);
  for (std::size_t o = 0; o < p.size(); ++o) {
    if (p[o] == 0) continue;
    const auto roots = compiled_->decode(o);
    std::size_t index = 0;
    for (std::size_t k = 0; k < channels_.size(); ++k)
      index = index * channels_[k].grid->size() + channels_[k].grid->from_root()[roots[component_of_channel_[k]]];
    joint[index] += p[o];
  }
  return joint;
}

std::vector<double> ChannelSet::exact_marginal(const StateDescriptor& state, std::size_t k) const {
  const auto joint = exact_joint(state);
  std::vector<double> out(channels_.at(k).grid->size(), 0.0);
  for (std::size_t o = 0; o < joint.size(); ++o) out[split_joint(o)[k]] += joint[o];
  return out;
}

//---------------------------------------------------------------------------//
// Measurement entry points
//---------------------------------------------------------------------------//

namespace {

std::vector<Index> exemplar_factors(const MicrostateExemplar& ex) { return detail::ExemplarAccess::state(ex).factors; }

}  // namespace

MeasurementRecord measure(MicrostateExemplar& ex, const MeasurementChannel& ch, const Backend& backend,
                          SeededStream& rng, std::uint64_t trial) {
  if (ex.consumed()) fail(ErrorCode::ExemplarConsumed, "exemplar of '" + ex.origin() + "' was already measured");
  const auto factors = exemplar_factors(ex);
  ChannelSet set(backend, factors, {ch});
  return std::move(set.measure(ex, rng, trial).records.front());
}

JointRecord measure_joint(MicrostateExemplar& ex, const MeasurementChannel& x, const MeasurementChannel& y,
                          const Backend& backend, SeededStream& rng, std::uint64_t trial) {
  if (ex.consumed()) fail(ErrorCode::ExemplarConsumed, "exemplar of '" + ex.origin() + "' was already measured");
  if (!compatible(backend, x, y))
    fail(ErrorCode::IncompatibleGrids, "grids '" + x.grid->name() + "' and '" + y.grid->name() +
                                           "' cannot be measured in one act");
  const auto factors = exemplar_factors(ex);
  ChannelSet set(backend, factors, {x, y});
  auto out = set.measure(ex, rng, trial);
  out.incomplete = false;
  return out;
}

JointRecord measure_complete(MicrostateExemplar& ex, std::span<const MeasurementChannel> channels,
                             const Backend& backend, SeededStream& rng, std::uint64_t trial) {
  if (ex.consumed()) fail(ErrorCode::ExemplarConsumed, "exemplar of '" + ex.origin() + "' was already measured");
  std::set<std::size_t> seen;
  for (const auto& ch : channels)
    if (!seen.insert(effective_subsystem(ch)).second)
      fail(ErrorCode::DuplicateSubsystem, "subsystem " + std::to_string(effective_subsystem(ch)) +
                                              " is covered by more than one channel");
  if (channels.size() > ex.system_count())
    fail(ErrorCode::SystemCountMismatch, "more channels than systems");
  const auto factors = exemplar_factors(ex);
  ChannelSet set(backend, factors, {channels.begin(), channels.end()});
  return set.measure(ex, rng, trial);
}

TimeOfFlight tof_decode(const Point3& impact, double t, double t0, double mass, const Point3& origin) {
  if (!(mass > 0)) fail(ErrorCode::NonPositiveMass, "mass must be positive");
  if (!(t > t0)) fail(ErrorCode::NonPositiveFlightTime, "impact time must follow the origin time");
  const double flight = t - t0;
  TimeOfFlight out;
  double squared = 0;
  for (int k = 0; k < 3; ++k) {
    const double d = impact[k] - origin[k];
    out.momentum[k] = mass * d / flight;
    squared += d * d;
  }
  out.magnitude = mass * std::sqrt(squared) / flight;
  return out;
}

}  // namespace iqm
