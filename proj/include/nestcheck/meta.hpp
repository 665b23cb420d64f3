#pragma once

#include <gmpxx.h>

#include <set>
#include <span>
#include <string>
#include <string_view>

#include "nestcheck/model.hpp"

namespace nestcheck {

/// Association of a placeholder identifier with an integer value.
struct ValuedBinding {
  std::string name;
  mpz_class value;
};

/// A `.sm` document whose transition weights may be `[id]` placeholders.
class MetaModel {
 public:
  explicit MetaModel(ModelDocument doc);

  const ModelDocument& document() const noexcept { return doc_; }
  /// Distinct placeholder identifiers; its size is the template's arity.
  const std::set<std::string>& placeholders() const noexcept { return placeholders_; }

 private:
  ModelDocument doc_;
  std::set<std::string> placeholders_;
};

MetaModel parse_meta(std::string_view text);

/// Substitutes every placeholder by its bound value and validates the result.
/// Bindings must cover the placeholder set exactly; values must be
/// nonnegative and fit a weight. Throws InstantiationError or ModelError.
StandardModel instantiate(const MetaModel& meta, std::span<const ValuedBinding> bindings);

}  // namespace nestcheck
