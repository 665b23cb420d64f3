#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <variant>
#include <vector>

namespace nestcheck {

enum class ModelKind { Lts, Dtmc, Mdp };

std::string_view to_string(ModelKind kind);

using StateId = std::uint32_t;
using ActionId = std::int32_t;
using Weight = std::uint64_t;

inline constexpr ActionId kNoAction = -1;

struct Transition {
  StateId source = 0;
  ActionId action = kNoAction;
  StateId target = 0;
  /// LTS transitions carry weight 1 internally; the text form has none.
  Weight weight = 1;

  friend bool operator==(const Transition&, const Transition&) = default;
};

/// SHA-256 of a model's canonical serialization.
class ModelDigest {
 public:
  ModelDigest() = default;
  explicit ModelDigest(const std::array<std::uint8_t, 32>& bytes) : bytes_(bytes) {}

  std::string hex() const;
  const std::array<std::uint8_t, 32>& bytes() const noexcept { return bytes_; }

  friend auto operator<=>(const ModelDigest&, const ModelDigest&) = default;

 private:
  std::array<std::uint8_t, 32> bytes_{};
};

/// Explicit finite-state LTS, DTMC or MDP with dense state ids.
///
/// Immutable once built. Transitions are stored sorted by (source, action,
/// target) with duplicates merged (weights summed for DTMC/MDP), so
/// `outgoing(s)` is a contiguous slice and MDP choices are contiguous runs
/// of equal action inside it.
class StandardModel {
 public:
  class Builder;

  ModelKind kind() const noexcept { return kind_; }
  std::size_t num_states() const noexcept { return state_names_.size(); }
  StateId init() const noexcept { return init_; }

  const std::string& state_name(StateId s) const { return state_names_.at(s); }
  std::optional<StateId> find_state(std::string_view name) const;

  /// Action names indexed by ActionId.
  const std::vector<std::string>& actions() const noexcept { return actions_; }

  /// Label name -> sorted, unique state ids.
  const std::map<std::string, std::vector<StateId>>& labels() const noexcept {
    return labels_;
  }
  const std::vector<StateId>* find_label(std::string_view name) const;

  std::span<const Transition> transitions() const noexcept { return transitions_; }
  std::span<const Transition> outgoing(StateId s) const {
    return std::span<const Transition>(transitions_)
        .subspan(offsets_[s], offsets_[s + 1] - offsets_[s]);
  }

  /// Sum of all outgoing weights of `s`.
  Weight total_weight(StateId s) const;

 private:
  StandardModel() = default;

  ModelKind kind_ = ModelKind::Lts;
  std::vector<std::string> state_names_;
  std::unordered_map<std::string, StateId> state_index_;
  std::vector<std::string> actions_;
  StateId init_ = 0;
  std::map<std::string, std::vector<StateId>> labels_;
  std::vector<Transition> transitions_;
  std::vector<std::size_t> offsets_;
};

/// Incremental construction with validation in `build()`.
class StandardModel::Builder {
 public:
  explicit Builder(ModelKind kind);

  StateId state(std::string_view name);
  ActionId action(std::string_view name);
  Builder& set_init(StateId s);
  Builder& add_label(std::string_view label, StateId s);
  Builder& add_transition(StateId source, ActionId action, StateId target, Weight weight);

  /// Throws ModelError if the collected structure is not a valid model.
  StandardModel build() &&;

 private:
  StandardModel model_;
  std::optional<StateId> init_;
};

/// A weight slot of a parsed document: a literal or a `[id]` placeholder.
using WeightSlot = std::variant<Weight, std::string>;

/// Line-level parse of a `.sm` / `.mm` document, before weights are resolved.
struct ModelDocument {
  struct TransLine {
    StateId source = 0;
    ActionId action = kNoAction;
    StateId target = 0;
    std::optional<WeightSlot> weight;  // absent for LTS
    std::size_t line = 0;
  };

  ModelKind kind = ModelKind::Lts;
  std::vector<std::string> state_names;  // first-mention order
  std::vector<std::string> action_names;
  StateId init = 0;
  std::vector<std::pair<std::string, std::vector<StateId>>> labels;
  std::vector<TransLine> transitions;
};

/// Parses the line format; `[id]` is accepted in weight positions only when
/// `allow_placeholders` is set. Throws SyntaxError.
ModelDocument parse_document(std::string_view text, bool allow_placeholders);

/// Resolves placeholders from `placeholder_values` and validates. Throws ModelError.
StandardModel build_model(const ModelDocument& doc,
                          const std::map<std::string, Weight>& placeholder_values = {});

StandardModel parse_model(std::string_view text);

/// Text form accepted by `parse_model`.
std::string serialize(const StandardModel& m);

/// Name-based normal form: sorted labels and transitions, independent of
/// declaration order and state numbering.
std::string canonical_form(const StandardModel& m);
ModelDigest canonical_hash(const StandardModel& m);

/// Forward closure from init over transitions of nonzero weight.
std::vector<char> reachable_mask(const StandardModel& m);
std::vector<StateId> reachable_states(const StandardModel& m);

/// Reachable states with no outgoing transition of nonzero weight.
std::vector<StateId> deadlock_states(const StandardModel& m);

}  // namespace nestcheck
