#include "nestcheck/meta.hpp"

#include <limits>
#include <map>

#include "nestcheck/error.hpp"

namespace nestcheck {

MetaModel::MetaModel(ModelDocument doc) : doc_(std::move(doc)) {
  for (const auto& t : doc_.transitions) {
    if (t.weight) {
      if (const auto* id = std::get_if<std::string>(&*t.weight)) placeholders_.insert(*id);
    }
  }
}

MetaModel parse_meta(std::string_view text) {
  return MetaModel(parse_document(text, /*allow_placeholders=*/true));
}

namespace {

std::string join(const std::set<std::string>& names) {
  std::string out;
  for (const auto& n : names) {
    if (!out.empty()) out += ", ";
    out += n;
  }
  return out;
}

}  // namespace

StandardModel instantiate(const MetaModel& meta, std::span<const ValuedBinding> bindings) {
  std::map<std::string, Weight> values;
  std::set<std::string> extra;
  for (const auto& b : bindings) {
    if (values.count(b.name) != 0) {
      throw InstantiationError("duplicate binding '" + b.name + "'");
    }
    if (meta.placeholders().count(b.name) == 0) {
      extra.insert(b.name);
      continue;
    }
    if (sgn(b.value) < 0) {
      throw InstantiationError("negative value " + b.value.get_str() + " bound to '" + b.name +
                               "'");
    }
    if (b.value > mpz_class(std::numeric_limits<unsigned long>::max())) {
      throw InstantiationError("value bound to '" + b.name + "' does not fit a weight");
    }
    values.emplace(b.name, b.value.get_ui());
  }
  std::set<std::string> missing;
  for (const auto& id : meta.placeholders()) {
    if (values.count(id) == 0) missing.insert(id);
  }
  if (!missing.empty()) throw InstantiationError("unbound placeholder(s): " + join(missing));
  if (!extra.empty()) throw InstantiationError("unknown argument(s): " + join(extra));
  return build_model(meta.document(), values);
}

}  // namespace nestcheck
