#include "nestcheck/cluster.hpp"

#include <cctype>
#include <charconv>
#include <fstream>
#include <sstream>
#include <vector>

#include "nestcheck/error.hpp"

namespace nestcheck::cluster {

void NodeWeights::validate(std::string_view type) const {
  auto fail = [&](const std::string& what) {
    throw Error(std::string(type) + " node weights: " + what);
  };
  if (hack > kWeightScale) fail("hack exceeds " + std::to_string(kWeightScale));
  if (patch + isolate != kWeightScale) fail("patch + isolate must equal 1000");
  if (recover + stay != kWeightScale) fail("recover + stay must equal 1000");
}

std::size_t ClusterParams::critical_threshold() const {
  return static_cast<std::size_t>((fraction_num * nodes + fraction_den - 1) / fraction_den);
}

void ClusterParams::validate() const {
  if (nodes == 0) throw Error("cluster needs at least one node");
  if (fraction_den == 0 || fraction_num > fraction_den) {
    throw Error("critical_fraction must lie in [0, 1]");
  }
  normal.validate("normal");
  premium.validate("premium");
}

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

std::uint64_t parse_uint(std::string_view s, std::size_t line) {
  std::uint64_t v = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size()) {
    throw SyntaxError("expected a nonnegative integer, got '" + std::string(s) + "'", line, 1);
  }
  return v;
}

}  // namespace

ClusterParams parse_params(std::string_view text, ClusterParams base) {
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    auto end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    ++line_no;
    auto line = text.substr(pos, end - pos);
    pos = end + 1;
    if (auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) throw SyntaxError("expected 'key = value'", line_no, 1);
    const auto key = trim(line.substr(0, eq));
    const auto value = trim(line.substr(eq + 1));

    if (key == "critical_fraction") {
      const auto slash = value.find('/');
      if (slash == std::string_view::npos) {
        throw SyntaxError("critical_fraction is written as num/den", line_no, 1);
      }
      base.fraction_num = parse_uint(trim(value.substr(0, slash)), line_no);
      base.fraction_den = parse_uint(trim(value.substr(slash + 1)), line_no);
      continue;
    }
    if (key == "nodes") {
      base.nodes = parse_uint(value, line_no);
      continue;
    }
    const auto dot = key.find('.');
    if (dot == std::string_view::npos) {
      throw SyntaxError("unknown key '" + std::string(key) + "'", line_no, 1);
    }
    const auto type = key.substr(0, dot);
    const auto field = key.substr(dot + 1);
    NodeWeights* w = type == "normal" ? &base.normal : type == "premium" ? &base.premium : nullptr;
    if (w == nullptr) throw SyntaxError("unknown node type '" + std::string(type) + "'", line_no, 1);
    const auto v = parse_uint(value, line_no);
    if (field == "hack") w->hack = v;
    else if (field == "patch") w->patch = v;
    else if (field == "isolate") w->isolate = v;
    else if (field == "recover") w->recover = v;
    else if (field == "stay") w->stay = v;
    else throw SyntaxError("unknown weight '" + std::string(field) + "'", line_no, 1);
  }
  base.validate();
  return base;
}

ClusterParams load_params(const std::filesystem::path& file, ClusterParams base) {
  std::ifstream in(file);
  if (!in) throw Error("cannot read parameter file " + file.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  try {
    return parse_params(ss.str(), base);
  } catch (const SyntaxError& e) {
    throw SyntaxError(file.string() + ": " + e.what(), 0, 0);
  }
}

std::string generate_node_model() {
  return "# Node-level model: one template for every node type.\n"
         "kind dtmc\n"
         "init safe\n"
         "label ok ok\n"
         "label down down\n"
         "trans safe compromised [hack]\n"
         "trans safe ok [nohack]\n"
         "trans compromised safe [patch]\n"
         "trans compromised isolated [isolate]\n"
         "trans isolated safe [recover]\n"
         "trans isolated down [stay]\n";
}

std::size_t cluster_state_count(std::size_t nodes) { return (nodes + 1) * (nodes + 2) / 2; }

namespace {

std::string cluster_state(std::size_t i, std::size_t k) {
  return "c" + std::to_string(i) + "_" + std::to_string(k);
}

}  // namespace

std::string generate_cluster_model(const ClusterParams& params) {
  params.validate();
  const auto n = params.nodes;
  std::ostringstream os;
  os << "# Cluster-level model: " << n << " nodes (" << params.normal_count() << " normal, "
     << params.premium_count() << " premium), state = (node index, nodes down).\n";
  os << "kind dtmc\ninit " << cluster_state(0, 0) << '\n';
  os << "label critical";
  for (auto k = params.critical_threshold(); k <= n; ++k) os << ' ' << cluster_state(n, k);
  os << '\n';
  for (std::size_t i = 0; i < n; ++i) {
    const char* type = params.is_premium(i) ? "premium" : "normal";
    for (std::size_t k = 0; k <= i; ++k) {
      os << "trans " << cluster_state(i, k) << ' ' << cluster_state(i + 1, k + 1) << " [p_" << type
         << "]\n";
      os << "trans " << cluster_state(i, k) << ' ' << cluster_state(i + 1, k) << " [q_" << type
         << "]\n";
    }
  }
  return os.str();
}

std::size_t flattened_state_count(std::size_t nodes) {
  return 4 * (std::size_t{1} << nodes) - 3;
}

std::string generate_flattened_model(const ClusterParams& params, std::size_t max_nodes) {
  params.validate();
  const auto n = params.nodes;
  if (n > max_nodes) {
    throw Error("refusing to flatten " + std::to_string(n) + " nodes: the flattened chain has " +
                "4 * 2^N - 3 states and the bound is " + std::to_string(max_nodes) + " nodes");
  }
  // Node i is processed with outcomes of nodes 0..i-1 in the state (bit
  // string, '1' = down) and its own phase s(afe) / c(ompromised) / x (isolated).
  auto phase = [](std::size_t i, const std::string& bits, char p) {
    return "n" + std::to_string(i) + "_" + (bits.empty() ? std::string("-") : bits) + "_" + p;
  };
  auto terminal = [](const std::string& bits) { return "t_" + bits; };
  auto next_state = [&](std::size_t i, const std::string& bits) {
    return i + 1 == n ? terminal(bits) : phase(i + 1, bits, 's');
  };

  std::string out;
  out.reserve(flattened_state_count(n) * 80);
  out += "# Flattened cluster model: " + std::to_string(n) + " nodes checked in sequence.\n";
  out += "kind dtmc\ninit " + phase(0, "", 's') + "\n";

  std::string label = "label critical";
  const auto threshold = params.critical_threshold();
  std::string bits;
  for (std::size_t mask = 0; mask < (std::size_t{1} << n); ++mask) {
    bits.assign(n, '0');
    std::size_t down = 0;
    for (std::size_t j = 0; j < n; ++j) {
      if ((mask >> j) & 1U) {
        bits[j] = '1';
        ++down;
      }
    }
    if (down >= threshold) label += " " + terminal(bits);
  }
  out += label + "\n";

  auto line = [&out](const std::string& a, const std::string& b, Weight w) {
    out += "trans ";
    out += a;
    out += ' ';
    out += b;
    out += ' ';
    out += std::to_string(w);
    out += '\n';
  };
  for (std::size_t i = 0; i < n; ++i) {
    const auto& w = params.is_premium(i) ? params.premium : params.normal;
    for (std::size_t mask = 0; mask < (std::size_t{1} << i); ++mask) {
      bits.assign(i, '0');
      for (std::size_t j = 0; j < i; ++j) {
        if ((mask >> j) & 1U) bits[j] = '1';
      }
      const auto s = phase(i, bits, 's');
      const auto c = phase(i, bits, 'c');
      const auto x = phase(i, bits, 'x');
      line(s, c, w.hack);
      line(s, next_state(i, bits + '0'), kWeightScale - w.hack);
      line(c, s, w.patch);
      line(c, x, w.isolate);
      line(x, s, w.recover);
      line(x, next_state(i, bits + '1'), w.stay);
    }
  }
  return out;
}

namespace {

std::string node_call(const NodeWeights& w) {
  return "mc(Node(hack = " + std::to_string(w.hack) +
         ", nohack = " + std::to_string(kWeightScale - w.hack) +
         ", patch = " + std::to_string(w.patch) + ", isolate = " + std::to_string(w.isolate) +
         ", recover = " + std::to_string(w.recover) + ", stay = " + std::to_string(w.stay) +
         "), \"reach down\")";
}

}  // namespace

std::string emit_nested_problem(const ClusterParams& params, std::uint64_t scale) {
  params.validate();
  const auto s = std::to_string(scale);
  std::vector<std::string> bindings, args;
  if (params.normal_count() > 0) {
    bindings.push_back("pn = " + node_call(params.normal));
    args.push_back("p_normal = pn, q_normal = " + s + " - pn");
  }
  if (params.premium_count() > 0) {
    bindings.push_back("pp = " + node_call(params.premium));
    args.push_back("p_premium = pp, q_premium = " + s + " - pp");
  }
  std::string out = "# " + std::to_string(params.nodes) + " nodes: " +
                    std::to_string(params.normal_count()) + " normal, " +
                    std::to_string(params.premium_count()) + " premium; results per " + s +
                    "\nlet ";
  for (std::size_t i = 0; i < bindings.size(); ++i) {
    out += (i ? ",\n    " : "") + bindings[i];
  }
  out += "\nin mc(Cluster(";
  for (std::size_t i = 0; i < args.size(); ++i) out += (i ? ", " : "") + args[i];
  out += "), \"reach critical\")\n";
  return out;
}

std::string emit_flattened_problem() { return "mc(Flat, \"reach critical\")\n"; }

namespace {

void write_text(const std::filesystem::path& p, const std::string& text) {
  std::ofstream out(p, std::ios::binary);
  if (!out) throw Error("cannot write " + p.string());
  out << text;
}

}  // namespace

bool write_cluster_files(const ClusterParams& params, const std::filesystem::path& dir,
                         std::uint64_t scale, std::size_t flat_bound) {
  std::filesystem::create_directories(dir);
  write_text(dir / "Node.mm", generate_node_model());
  write_text(dir / "Cluster.mm", generate_cluster_model(params));
  write_text(dir / "cluster.nmc", emit_nested_problem(params, scale));
  if (params.nodes > flat_bound) return false;
  write_text(dir / "Flat.sm", generate_flattened_model(params, flat_bound));
  write_text(dir / "flat.nmc", emit_flattened_problem());
  return true;
}

}  // namespace nestcheck::cluster
