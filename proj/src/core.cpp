#include "iqm/core.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>

#include "iqm/error.hpp"

namespace iqm {

namespace test_mode {
namespace {
std::atomic<bool> g_enabled{false};
}
void enable(bool on) { g_enabled.store(on); }
bool enabled() { return g_enabled.load(); }
}  // namespace test_mode

PreparationSpec PreparationSpec::basis(std::size_t dimension, std::size_t index) {
  PreparationSpec p;
  p.factors = {dimension};
  p.amplitudes.assign(dimension, {0.0, 0.0});
  p.amplitudes.at(index) = {1.0, 0.0};
  return p;
}

bool ExternalConditions::fields_active() const {
  if (!generator) return false;
  for (const auto& row : *generator)
    for (const auto& z : row)
      if (z != std::complex<double>{}) return true;
  return false;
}

//---------------------------------------------------------------------------//
// Exemplars
//---------------------------------------------------------------------------//

MicrostateExemplar::MicrostateExemplar(std::string origin, std::uint64_t id, std::shared_ptr<const StateDescriptor> state,
                                       double origin_time, double birth_time, std::size_t system_count)
    : origin_(std::move(origin)),
      id_(id),
      hidden_(std::move(state)),
      origin_time_(origin_time),
      birth_time_(birth_time),
      system_count_(system_count) {}

MicrostateExemplar::MicrostateExemplar(MicrostateExemplar&& other) noexcept
    : origin_(std::move(other.origin_)),
      id_(other.id_),
      hidden_(std::move(other.hidden_)),
      origin_time_(other.origin_time_),
      birth_time_(other.birth_time_),
      system_count_(other.system_count_),
      consumed_(other.consumed_) {
  other.consumed_ = true;
}

MicrostateExemplar& MicrostateExemplar::operator=(MicrostateExemplar&& other) noexcept {
  if (this != &other) {
    origin_ = std::move(other.origin_);
    id_ = other.id_;
    hidden_ = std::move(other.hidden_);
    origin_time_ = other.origin_time_;
    birth_time_ = other.birth_time_;
    system_count_ = other.system_count_;
    consumed_ = other.consumed_;
    other.consumed_ = true;
  }
  return *this;
}

const StateDescriptor& MicrostateExemplar::hidden_state_for_testing() const {
  if (!test_mode::enabled()) fail(ErrorCode::TestModeRequired, "hidden state is not observable");
  return *hidden_;
}

//---------------------------------------------------------------------------//
// Registry
//---------------------------------------------------------------------------//

GenerationOp Registry::normalized(GenerationOp spec) const {
  if (spec.label.empty()) fail(ErrorCode::InvalidGeneration, "generation label is empty");
  if (!spec.trunk_domain.well_formed())
    fail(ErrorCode::InvalidGeneration, "trunk domain of '" + spec.label + "' has negative extent");

  if (auto* simple = std::get_if<SimpleKind>(&spec.kind)) {
    if (simple->preparation.factors.empty())
      fail(ErrorCode::InvalidGeneration, "'" + spec.label + "' declares no system");
    spec.system_count = simple->preparation.factors.size();
  } else if (auto* composed = std::get_if<ComposedKind>(&spec.kind)) {
    const auto n = composed->children.size();
    if (n < 2) fail(ErrorCode::InvalidGeneration, "composed '" + spec.label + "' needs at least two children");
    if (composed->phases.empty()) composed->phases.assign(n, 0.0);
    if (composed->delays.empty()) composed->delays.assign(n, 0.0);
    if (composed->weights.size() != n || composed->phases.size() != n || composed->delays.size() != n)
      fail(ErrorCode::InvalidGeneration, "composed '" + spec.label + "': children, weights, phases differ in length");
    for (double w : composed->weights)
      if (!(w >= 0) || !std::isfinite(w))
        fail(ErrorCode::InvalidGeneration, "composed '" + spec.label + "' has a negative or non-finite weight");
    if (std::all_of(composed->weights.begin(), composed->weights.end(), [](double w) { return w == 0; }))
      fail(ErrorCode::ZeroWeightVector, "composed '" + spec.label + "' has all weights zero");
    std::size_t count = 0;
    for (const auto& child : composed->children) {
      const auto h = find(child);
      if (!h) fail(ErrorCode::UnknownChild, "'" + spec.label + "' references unregistered '" + child + "'");
      const auto c = ops_[h->index].system_count;
      if (count != 0 && c != count)
        fail(ErrorCode::SystemCountMismatch, "children of '" + spec.label + "' differ in system count");
      count = c;
    }
    spec.system_count = count;
  } else {
    auto& evolved = std::get<EvolvedKind>(spec.kind);
    if (!(evolved.duration >= 0) || !std::isfinite(evolved.duration))
      fail(ErrorCode::InvalidGeneration, "evolved '" + spec.label + "' has a negative duration");
    const auto h = find(evolved.base);
    if (!h) fail(ErrorCode::UnknownChild, "'" + spec.label + "' references unregistered '" + evolved.base + "'");
    spec.system_count = ops_[h->index].system_count;
  }
  return spec;
}

GenerationHandle Registry::insert(GenerationOp spec) {
  spec = normalized(std::move(spec));
  if (auto it = by_label_.find(spec.label); it != by_label_.end()) {
    if (ops_[it->second] == spec) return {it->second, spec.label};
    fail(ErrorCode::DuplicateLabelConflict, "label '" + spec.label + "' is already bound to a different operation");
  }
  const auto index = ops_.size();
  by_label_.emplace(spec.label, index);
  ops_.push_back(std::move(spec));
  return {index, ops_.back().label};
}

const GenerationOp& Registry::resolve(const GenerationHandle& handle) const {
  if (handle.index >= ops_.size() || ops_[handle.index].label != handle.label)
    fail(ErrorCode::UnknownGeneration, "handle '" + handle.label + "' does not belong to this registry");
  return ops_[handle.index];
}

const GenerationOp& Registry::resolve(const std::string& label) const { return ops_[handle(label).index]; }

std::optional<GenerationHandle> Registry::find(const std::string& label) const {
  const auto it = by_label_.find(label);
  if (it == by_label_.end()) return std::nullopt;
  return GenerationHandle{it->second, label};
}

GenerationHandle Registry::handle(const std::string& label) const {
  auto h = find(label);
  if (!h) fail(ErrorCode::UnknownGeneration, "no generation labelled '" + label + "'");
  return *h;
}

//---------------------------------------------------------------------------//
// Laboratory
//---------------------------------------------------------------------------//

Laboratory::Laboratory(BackendKind kind) : backend_(make_backend(kind)) {}

GenerationHandle Laboratory::register_generation(GenerationOp spec) {
  spec = registry_.normalized(std::move(spec));
  if (const auto existing = registry_.find(spec.label)) return registry_.insert(std::move(spec));

  const auto resolve_child = [this](const std::string& label) { return *states_[registry_.handle(label).index]; };
  if (const auto* evolved = std::get_if<EvolvedKind>(&spec.kind)) {
    const auto& base = *states_[registry_.handle(evolved->base).index];
    if (!backend_->resolvable(evolved->conditions, base.dimension()))
      fail(ErrorCode::UnresolvableConditions, "conditions '" + evolved->conditions.name +
                                                  "' cannot be applied by the " +
                                                  std::string(to_string(backend_->kind())) + " backend");
  }
  auto state = std::make_shared<const StateDescriptor>(backend_->prepare(spec, resolve_child));
  auto handle = registry_.insert(std::move(spec));
  states_.push_back(std::move(state));
  return handle;
}

namespace {

const GenerationOp& registered_child(const Registry& registry, const GenerationHandle& h) {
  const auto ops = registry.operations();
  if (h.index >= ops.size() || ops[h.index].label != h.label)
    fail(ErrorCode::UnknownChild, "'" + h.label + "' is not registered in this laboratory");
  return ops[h.index];
}

}  // namespace

GenerationHandle Laboratory::compose_generations(std::span<const GenerationHandle> children,
                                                 std::vector<double> weights, std::vector<double> phases,
                                                 const std::string& label, std::vector<double> delays) {
  ComposedKind kind;
  std::optional<SpacetimeDomain> trunk;
  for (const auto& c : children) {
    const auto& op = registered_child(registry_, c);
    kind.children.push_back(op.label);
    if (!trunk) {
      trunk = op.trunk_domain;
      continue;
    }
    for (int k = 0; k < 3; ++k) {
      trunk->box_min[k] = std::min(trunk->box_min[k], op.trunk_domain.box_min[k]);
      trunk->box_max[k] = std::max(trunk->box_max[k], op.trunk_domain.box_max[k]);
    }
    trunk->t_start = std::min(trunk->t_start, op.trunk_domain.t_start);
    trunk->t_end = std::max(trunk->t_end, op.trunk_domain.t_end);
  }
  kind.weights = std::move(weights);
  kind.phases = std::move(phases);
  kind.delays = std::move(delays);
  GenerationOp op;
  op.label = label;
  op.kind = std::move(kind);
  if (trunk) op.trunk_domain = *trunk;
  return register_generation(std::move(op));
}

GenerationHandle Laboratory::evolve_generation(const GenerationHandle& base, const ExternalConditions& conditions,
                                               double dt, const std::string& label) {
  const auto& base_op = registered_child(registry_, base);
  GenerationOp op;
  op.label = label;
  op.kind = EvolvedKind{base_op.label, conditions, dt};
  op.trunk_domain = base_op.trunk_domain;
  op.trunk_domain.t_end += dt;
  return register_generation(std::move(op));
}

MicrostateExemplar Laboratory::generate(const GenerationHandle& handle, SeededStream& rng) const {
  const auto& op = registry_.resolve(handle);
  return MicrostateExemplar(op.label, rng.next_u64(), states_[handle.index], op.trunk_domain.t_start,
                            op.trunk_domain.t_end, op.system_count);
}

const StateDescriptor& Laboratory::oracle_state(const GenerationHandle& handle) const {
  registry_.resolve(handle);
  return *states_[handle.index];
}

}  // namespace iqm
