#include "nestcheck/model.hpp"

#include <openssl/evp.h>

#include <algorithm>
#include <cctype>
#include <charconv>
#include <deque>
#include <limits>
#include <sstream>
#include <tuple>

#include "nestcheck/error.hpp"

namespace nestcheck {

std::string_view to_string(ModelKind kind) {
  switch (kind) {
    case ModelKind::Lts: return "lts";
    case ModelKind::Dtmc: return "dtmc";
    case ModelKind::Mdp: return "mdp";
  }
  return "?";
}

std::string ModelDigest::hex() const {
  static constexpr char kDigits[] = "0123456789abcdef";
  std::string out;
  out.reserve(64);
  for (auto b : bytes_) {
    out.push_back(kDigits[b >> 4]);
    out.push_back(kDigits[b & 0xf]);
  }
  return out;
}

std::optional<StateId> StandardModel::find_state(std::string_view name) const {
  auto it = state_index_.find(std::string(name));
  if (it == state_index_.end()) return std::nullopt;
  return it->second;
}

const std::vector<StateId>* StandardModel::find_label(std::string_view name) const {
  auto it = labels_.find(std::string(name));
  return it == labels_.end() ? nullptr : &it->second;
}

Weight StandardModel::total_weight(StateId s) const {
  Weight total = 0;
  for (const auto& t : outgoing(s)) total += t.weight;
  return total;
}

// ---------------------------------------------------------------------------
// Builder

StandardModel::Builder::Builder(ModelKind kind) { model_.kind_ = kind; }

StateId StandardModel::Builder::state(std::string_view name) {
  auto [it, inserted] =
      model_.state_index_.try_emplace(std::string(name), model_.state_names_.size());
  if (inserted) model_.state_names_.emplace_back(name);
  return it->second;
}

ActionId StandardModel::Builder::action(std::string_view name) {
  auto it = std::find(model_.actions_.begin(), model_.actions_.end(), name);
  if (it != model_.actions_.end()) {
    return static_cast<ActionId>(it - model_.actions_.begin());
  }
  model_.actions_.emplace_back(name);
  return static_cast<ActionId>(model_.actions_.size() - 1);
}

StandardModel::Builder& StandardModel::Builder::set_init(StateId s) {
  if (init_) throw ModelError("duplicate init");
  init_ = s;
  return *this;
}

StandardModel::Builder& StandardModel::Builder::add_label(std::string_view label, StateId s) {
  model_.labels_[std::string(label)].push_back(s);
  return *this;
}

StandardModel::Builder& StandardModel::Builder::add_transition(StateId source, ActionId action,
                                                               StateId target, Weight weight) {
  model_.transitions_.push_back({source, action, target, weight});
  return *this;
}

StandardModel StandardModel::Builder::build() && {
  auto& m = model_;
  const auto n = m.state_names_.size();
  if (!init_) throw ModelError("missing init");
  if (*init_ >= n) throw ModelError("init refers to an unknown state");
  m.init_ = *init_;

  for (auto& [name, states] : m.labels_) {
    if (states.empty()) throw ModelError("label '" + name + "' has no states");
    std::sort(states.begin(), states.end());
    states.erase(std::unique(states.begin(), states.end()), states.end());
    if (states.back() >= n) throw ModelError("label '" + name + "' refers to an unknown state");
  }

  for (const auto& t : m.transitions_) {
    if (t.source >= n || t.target >= n) throw ModelError("transition refers to an unknown state");
    const bool has_action = t.action != kNoAction;
    switch (m.kind_) {
      case ModelKind::Lts:
        if (t.weight != 1) throw ModelError("lts transitions carry no weight");
        break;
      case ModelKind::Dtmc:
        if (has_action) throw ModelError("dtmc transitions carry no action");
        break;
      case ModelKind::Mdp:
        if (!has_action) throw ModelError("mdp transitions need an action");
        break;
    }
    if (has_action && static_cast<std::size_t>(t.action) >= m.actions_.size()) {
      throw ModelError("transition refers to an unknown action");
    }
  }

  auto key = [](const Transition& t) { return std::tie(t.source, t.action, t.target); };
  std::sort(m.transitions_.begin(), m.transitions_.end(),
            [&](const Transition& a, const Transition& b) { return key(a) < key(b); });

  // Merge parallel edges.
  std::vector<Transition> merged;
  merged.reserve(m.transitions_.size());
  for (const auto& t : m.transitions_) {
    if (!merged.empty() && key(merged.back()) == key(t)) {
      if (m.kind_ == ModelKind::Lts) continue;
      if (std::numeric_limits<Weight>::max() - merged.back().weight < t.weight) {
        throw ModelError("weight overflow on state '" + m.state_names_[t.source] + "'");
      }
      merged.back().weight += t.weight;
    } else {
      merged.push_back(t);
    }
  }
  m.transitions_ = std::move(merged);

  m.offsets_.assign(n + 1, 0);
  for (const auto& t : m.transitions_) ++m.offsets_[t.source + 1];
  for (std::size_t s = 0; s < n; ++s) m.offsets_[s + 1] += m.offsets_[s];

  for (StateId s = 0; s < n; ++s) {
    Weight total = 0;
    for (const auto& t : m.outgoing(s)) {
      if (std::numeric_limits<Weight>::max() - total < t.weight) {
        throw ModelError("total outgoing weight overflows on state '" + m.state_names_[s] + "'");
      }
      total += t.weight;
    }
  }
  return std::move(m);
}

// ---------------------------------------------------------------------------
// Text format

namespace {

struct Token {
  std::string_view text;
  std::size_t column;
};

std::vector<Token> split_line(std::string_view line) {
  if (auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
  std::vector<Token> out;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && std::isspace(static_cast<unsigned char>(line[i]))) ++i;
    if (i >= line.size()) break;
    std::size_t start = i;
    while (i < line.size() && !std::isspace(static_cast<unsigned char>(line[i]))) ++i;
    out.push_back({line.substr(start, i - start), start + 1});
  }
  return out;
}

bool is_identifier(std::string_view s) {
  if (s.empty()) return false;
  if (!(std::isalpha(static_cast<unsigned char>(s[0])) || s[0] == '_')) return false;
  return std::all_of(s.begin() + 1, s.end(), [](char c) {
    return std::isalnum(static_cast<unsigned char>(c)) || c == '_';
  });
}

class DocumentParser {
 public:
  DocumentParser(std::string_view text, bool allow_placeholders)
      : text_(text), allow_placeholders_(allow_placeholders) {}

  ModelDocument run() {
    std::size_t pos = 0;
    while (pos <= text_.size()) {
      auto end = text_.find('\n', pos);
      if (end == std::string_view::npos) end = text_.size();
      ++line_;
      auto line = text_.substr(pos, end - pos);
      if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
      handle_line(split_line(line));
      pos = end + 1;
    }
    if (!seen_kind_) throw SyntaxError("empty model: expected 'kind'", 0, 0);
    if (!seen_init_) throw SyntaxError("missing 'init' line", 0, 0);
    return std::move(doc_);
  }

 private:
  [[noreturn]] void fail(const std::string& msg, const Token& at) const {
    throw SyntaxError(msg, line_, at.column);
  }

  void handle_line(const std::vector<Token>& toks) {
    if (toks.empty()) return;
    const auto& head = toks[0];
    if (!seen_kind_) {
      if (head.text != "kind") fail("expected 'kind' as the first line", head);
      if (toks.size() != 2) fail("'kind' takes exactly one argument", head);
      if (toks[1].text == "lts") doc_.kind = ModelKind::Lts;
      else if (toks[1].text == "dtmc") doc_.kind = ModelKind::Dtmc;
      else if (toks[1].text == "mdp") doc_.kind = ModelKind::Mdp;
      else fail("unknown model kind '" + std::string(toks[1].text) + "'", toks[1]);
      seen_kind_ = true;
      return;
    }
    if (head.text == "kind") fail("duplicate 'kind' line", head);
    if (head.text == "init") return handle_init(toks);
    if (head.text == "label") return handle_label(toks);
    if (head.text == "trans") return handle_trans(toks);
    fail("unknown directive '" + std::string(head.text) + "'", head);
  }

  void handle_init(const std::vector<Token>& toks) {
    if (toks.size() != 2) fail("'init' takes exactly one state", toks[0]);
    if (seen_init_) fail("duplicate init", toks[0]);
    doc_.init = state(toks[1]);
    seen_init_ = true;
  }

  void handle_label(const std::vector<Token>& toks) {
    if (toks.size() < 3) fail("'label' needs a name and at least one state", toks[0]);
    name_token(toks[1], "label name");
    std::string name(toks[1].text);
    auto it = std::find_if(doc_.labels.begin(), doc_.labels.end(),
                           [&](const auto& l) { return l.first == name; });
    if (it == doc_.labels.end()) {
      doc_.labels.emplace_back(name, std::vector<StateId>{});
      it = doc_.labels.end() - 1;
    }
    for (std::size_t i = 2; i < toks.size(); ++i) it->second.push_back(state(toks[i]));
  }

  void handle_trans(const std::vector<Token>& toks) {
    ModelDocument::TransLine t;
    t.line = line_;
    const auto args = toks.size() - 1;
    switch (doc_.kind) {
      case ModelKind::Lts:
        if (args == 2) {
          t.source = state(toks[1]);
          t.target = state(toks[2]);
        } else if (args == 3) {
          t.source = state(toks[1]);
          t.action = action(toks[2]);
          t.target = state(toks[3]);
        } else {
          fail("lts transition is 'trans <src> [<action>] <dst>'", toks[0]);
        }
        break;
      case ModelKind::Dtmc:
        if (args != 3) fail("dtmc transition is 'trans <src> <dst> <weight>'", toks[0]);
        t.source = state(toks[1]);
        t.target = state(toks[2]);
        t.weight = weight(toks[3]);
        break;
      case ModelKind::Mdp:
        if (args != 4) fail("mdp transition is 'trans <src> <action> <dst> <weight>'", toks[0]);
        t.source = state(toks[1]);
        t.action = action(toks[2]);
        t.target = state(toks[3]);
        t.weight = weight(toks[4]);
        break;
    }
    doc_.transitions.push_back(std::move(t));
  }

  void name_token(const Token& tok, const char* what) const {
    if (tok.text.front() == '[') {
      fail(std::string("placeholder not allowed as ") + what +
               " (only weights may be placeholders)",
           tok);
    }
    for (char c : tok.text) {
      if (c == '[' || c == ']') fail(std::string("invalid character in ") + what, tok);
    }
  }

  StateId state(const Token& tok) {
    name_token(tok, "state");
    auto [it, inserted] =
        state_index_.try_emplace(std::string(tok.text), doc_.state_names.size());
    if (inserted) doc_.state_names.emplace_back(tok.text);
    return it->second;
  }

  ActionId action(const Token& tok) {
    name_token(tok, "action");
    auto [it, inserted] =
        action_index_.try_emplace(std::string(tok.text), doc_.action_names.size());
    if (inserted) doc_.action_names.emplace_back(tok.text);
    return static_cast<ActionId>(it->second);
  }

  WeightSlot weight(const Token& tok) const {
    auto s = tok.text;
    if (s.front() == '[') {
      if (s.size() < 3 || s.back() != ']' || !is_identifier(s.substr(1, s.size() - 2))) {
        fail("malformed placeholder '" + std::string(s) + "'", tok);
      }
      if (!allow_placeholders_) fail("placeholders are only allowed in meta models", tok);
      return std::string(s.substr(1, s.size() - 2));
    }
    if (s.front() == '-') fail("negative weight '" + std::string(s) + "'", tok);
    Weight w = 0;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), w);
    if (ec == std::errc::result_out_of_range) fail("weight out of range", tok);
    if (ec != std::errc() || ptr != s.data() + s.size()) {
      fail("expected a nonnegative integer weight, got '" + std::string(s) + "'", tok);
    }
    return w;
  }

  std::string_view text_;
  bool allow_placeholders_;
  std::size_t line_ = 0;
  bool seen_kind_ = false;
  bool seen_init_ = false;
  ModelDocument doc_;
  std::unordered_map<std::string, StateId> state_index_;
  std::unordered_map<std::string, std::size_t> action_index_;
};

}  // namespace

ModelDocument parse_document(std::string_view text, bool allow_placeholders) {
  return DocumentParser(text, allow_placeholders).run();
}

StandardModel build_model(const ModelDocument& doc,
                          const std::map<std::string, Weight>& placeholder_values) {
  StandardModel::Builder b(doc.kind);
  for (const auto& name : doc.state_names) b.state(name);
  for (const auto& name : doc.action_names) b.action(name);
  b.set_init(doc.init);
  for (const auto& [label, states] : doc.labels) {
    for (auto s : states) b.add_label(label, s);
  }
  for (const auto& t : doc.transitions) {
    Weight w = 1;
    if (t.weight) {
      if (const auto* lit = std::get_if<Weight>(&*t.weight)) {
        w = *lit;
      } else {
        const auto& id = std::get<std::string>(*t.weight);
        auto it = placeholder_values.find(id);
        if (it == placeholder_values.end()) {
          throw ModelError("line " + std::to_string(t.line) + ": unbound placeholder [" + id + "]");
        }
        w = it->second;
      }
    }
    b.add_transition(t.source, t.action, t.target, w);
  }
  return std::move(b).build();
}

StandardModel parse_model(std::string_view text) {
  return build_model(parse_document(text, /*allow_placeholders=*/false));
}

namespace {

void write_transition(std::ostream& os, const StandardModel& m, const Transition& t) {
  os << "trans " << m.state_name(t.source);
  if (t.action != kNoAction) os << ' ' << m.actions()[t.action];
  os << ' ' << m.state_name(t.target);
  if (m.kind() != ModelKind::Lts) os << ' ' << t.weight;
  os << '\n';
}

}  // namespace

std::string serialize(const StandardModel& m) {
  std::ostringstream os;
  os << "kind " << to_string(m.kind()) << '\n';
  os << "init " << m.state_name(m.init()) << '\n';
  for (const auto& [name, states] : m.labels()) {
    os << "label " << name;
    for (auto s : states) os << ' ' << m.state_name(s);
    os << '\n';
  }
  for (const auto& t : m.transitions()) write_transition(os, m, t);
  return os.str();
}

std::string canonical_form(const StandardModel& m) {
  std::ostringstream os;
  os << "kind " << to_string(m.kind()) << '\n';
  os << "init " << m.state_name(m.init()) << '\n';
  for (const auto& [name, states] : m.labels()) {
    std::vector<std::string_view> names;
    names.reserve(states.size());
    for (auto s : states) names.emplace_back(m.state_name(s));
    std::sort(names.begin(), names.end());
    os << "label " << name;
    for (auto n : names) os << ' ' << n;
    os << '\n';
  }
  static const std::string kNone;
  auto action_name = [&](ActionId a) -> const std::string& {
    return a == kNoAction ? kNone : m.actions()[a];
  };
  std::vector<const Transition*> order;
  order.reserve(m.transitions().size());
  for (const auto& t : m.transitions()) order.push_back(&t);
  std::sort(order.begin(), order.end(), [&](const Transition* a, const Transition* b) {
    return std::forward_as_tuple(m.state_name(a->source), action_name(a->action),
                                 m.state_name(a->target)) <
           std::forward_as_tuple(m.state_name(b->source), action_name(b->action),
                                 m.state_name(b->target));
  });
  for (const auto* t : order) write_transition(os, m, *t);
  return os.str();
}

ModelDigest canonical_hash(const StandardModel& m) {
  const auto text = canonical_form(m);
  std::array<std::uint8_t, 32> bytes{};
  unsigned int len = 0;
  if (EVP_Digest(text.data(), text.size(), bytes.data(), &len, EVP_sha256(), nullptr) != 1 ||
      len != bytes.size()) {
    throw Error("sha256 digest failed");
  }
  return ModelDigest(bytes);
}

std::vector<char> reachable_mask(const StandardModel& m) {
  std::vector<char> seen(m.num_states(), 0);
  std::vector<StateId> stack{m.init()};
  seen[m.init()] = 1;
  while (!stack.empty()) {
    auto s = stack.back();
    stack.pop_back();
    for (const auto& t : m.outgoing(s)) {
      if (t.weight == 0 || seen[t.target]) continue;
      seen[t.target] = 1;
      stack.push_back(t.target);
    }
  }
  return seen;
}

std::vector<StateId> reachable_states(const StandardModel& m) {
  const auto mask = reachable_mask(m);
  std::vector<StateId> out;
  for (StateId s = 0; s < mask.size(); ++s) {
    if (mask[s]) out.push_back(s);
  }
  return out;
}

std::vector<StateId> deadlock_states(const StandardModel& m) {
  const auto mask = reachable_mask(m);
  std::vector<StateId> out;
  for (StateId s = 0; s < mask.size(); ++s) {
    if (!mask[s]) continue;
    auto out_edges = m.outgoing(s);
    bool live = std::any_of(out_edges.begin(), out_edges.end(),
                            [](const Transition& t) { return t.weight != 0; });
    if (!live) out.push_back(s);
  }
  return out;
}

}  // namespace nestcheck
