#pragma once

// Registry of generation operations and the single-use exemplars they
// produce. A label names exactly one operation for the lifetime of a
// registry, and an operation is the only identity a microstate has.

#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "iqm/backend.hpp"
#include "iqm/generation.hpp"
#include "iqm/rng.hpp"

namespace iqm {

struct GenerationHandle {
  std::size_t index = 0;
  std::string label;

  friend bool operator==(const GenerationHandle&, const GenerationHandle&) = default;
};

/// Hidden-state inspection is refused unless explicitly enabled (tests only).
namespace test_mode {
void enable(bool on);
bool enabled();
}  // namespace test_mode

namespace detail {
struct ExemplarAccess;
}

/// One product of one realization of a generation. Move-only: an exemplar
/// cannot be duplicated, and it can be consumed by exactly one measurement.
class MicrostateExemplar {
 public:
  MicrostateExemplar(MicrostateExemplar&& other) noexcept;
  MicrostateExemplar& operator=(MicrostateExemplar&& other) noexcept;
  MicrostateExemplar(const MicrostateExemplar&) = delete;
  MicrostateExemplar& operator=(const MicrostateExemplar&) = delete;

  const std::string& origin() const noexcept { return origin_; }
  std::uint64_t id() const noexcept { return id_; }
  bool consumed() const noexcept { return consumed_; }
  double birth_time() const noexcept { return birth_time_; }
  double origin_time() const noexcept { return origin_time_; }
  std::size_t system_count() const noexcept { return system_count_; }

  /// Oracle state behind the exemplar; throws TestModeRequired outside test mode.
  const StateDescriptor& hidden_state_for_testing() const;

 private:
  friend class Laboratory;
  friend struct detail::ExemplarAccess;

  MicrostateExemplar(std::string origin, std::uint64_t id, std::shared_ptr<const StateDescriptor> state,
                     double origin_time, double birth_time, std::size_t system_count);

  std::string origin_;
  std::uint64_t id_ = 0;
  std::shared_ptr<const StateDescriptor> hidden_;
  double origin_time_ = 0;
  double birth_time_ = 0;
  std::size_t system_count_ = 1;
  bool consumed_ = false;
};

class Registry {
 public:
  /// Idempotent for an identical spec; DuplicateLabelConflict otherwise.
  /// Validation against a backend happens in Laboratory.
  GenerationHandle insert(GenerationOp spec);

  const GenerationOp& resolve(const GenerationHandle& handle) const;
  const GenerationOp& resolve(const std::string& label) const;
  std::optional<GenerationHandle> find(const std::string& label) const;
  GenerationHandle handle(const std::string& label) const;

  std::size_t size() const noexcept { return ops_.size(); }
  std::span<const GenerationOp> operations() const noexcept { return ops_; }

  /// Normalizes derived fields (system_count, default delays) so that equal
  /// declarations compare equal; checks structural invariants.
  GenerationOp normalized(GenerationOp spec) const;

 private:
  std::vector<GenerationOp> ops_;
  std::unordered_map<std::string, std::size_t> by_label_;
};

/// Registry bound to an active backend, with the prepared oracle state of
/// every registered operation. Registration is not thread-safe; generation
/// is, once registration is over.
class Laboratory {
 public:
  explicit Laboratory(BackendKind kind);

  const Backend& backend() const noexcept { return *backend_; }
  BackendKind backend_kind() const noexcept { return backend_->kind(); }
  const Registry& registry() const noexcept { return registry_; }

  GenerationHandle register_generation(GenerationOp spec);

  GenerationHandle compose_generations(std::span<const GenerationHandle> children, std::vector<double> weights,
                                       std::vector<double> phases, const std::string& label,
                                       std::vector<double> delays = {});

  GenerationHandle evolve_generation(const GenerationHandle& base, const ExternalConditions& conditions, double dt,
                                     const std::string& label);

  MicrostateExemplar generate(const GenerationHandle& handle, SeededStream& rng) const;

  /// The oracle's prepared state for `handle` (used for exact expectations).
  const StateDescriptor& oracle_state(const GenerationHandle& handle) const;

  const GenerationOp& resolve(const GenerationHandle& handle) const { return registry_.resolve(handle); }
  GenerationHandle handle(const std::string& label) const { return registry_.handle(label); }

 private:
  std::unique_ptr<Backend> backend_;
  Registry registry_;
  std::vector<std::shared_ptr<const StateDescriptor>> states_;
};

namespace detail {
/// Measurement-side access to the exemplar's oracle state.
struct ExemplarAccess {
  static const StateDescriptor& state(const MicrostateExemplar& ex) { return *ex.hidden_; }
  static void consume(MicrostateExemplar& ex) { ex.consumed_ = true; }
};
}  // namespace detail

}  // namespace iqm
