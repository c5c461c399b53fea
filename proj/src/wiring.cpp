#include "rgc/wiring.hpp"

#include <algorithm>
#include <stdexcept>

#include <json.hpp>

#include "rgc/rng.hpp"

namespace rgc {

namespace {

int64_t pick(int64_t explicit_value, int64_t fallback, int64_t cap,
             const char* what) {
  if (explicit_value == 0) return std::min(fallback, cap);
  if (explicit_value < 0) {
    throw std::invalid_argument(std::string("build_ncp: negative ") + what);
  }
  return explicit_value;
}

// Deals `fanout` distinct targets to every source.  A shuffled pass over all
// targets first guarantees every target at least one incoming edge, then the
// remaining slots are filled per source without duplicates.
void deal(const std::vector<int64_t>& sources, const std::vector<int64_t>& targets,
          int64_t fanout, Rng& rng, std::vector<Edge>& edges,
          const char* layer) {
  const int64_t s = static_cast<int64_t>(sources.size());
  const int64_t t = static_cast<int64_t>(targets.size());
  if (fanout < 1 || fanout > t) {
    throw std::invalid_argument("build_ncp: " + std::string(layer) +
                                " fanout " + std::to_string(fanout) +
                                " infeasible for " + std::to_string(t) +
                                " targets");
  }
  if (s * fanout < t) {
    throw std::invalid_argument("build_ncp: " + std::string(layer) + " " +
                                std::to_string(s) + " sources with fanout " +
                                std::to_string(fanout) + " cannot cover " +
                                std::to_string(t) + " targets");
  }
  std::vector<int64_t> pool = targets;
  rng.shuffle(pool);
  std::vector<std::vector<int64_t>> chosen(static_cast<size_t>(s));
  for (int64_t i = 0; i < t; ++i) {
    chosen[static_cast<size_t>(i / fanout)].push_back(pool[i]);
  }
  for (int64_t i = 0; i < s; ++i) {
    auto& c = chosen[static_cast<size_t>(i)];
    while (static_cast<int64_t>(c.size()) < fanout) {
      const int64_t cand = targets[rng.below(static_cast<uint64_t>(t))];
      if (std::find(c.begin(), c.end(), cand) == c.end()) c.push_back(cand);
    }
    for (const int64_t dst : c) edges.push_back({sources[i], dst, 1});
  }
}

}  // namespace

std::string Wiring::layer_of(int64_t id) const {
  if (id < spec.sensory_count) return "sensory";
  id -= spec.sensory_count;
  if (id < spec.inter_count) return "inter";
  id -= spec.inter_count;
  if (id < spec.command_count) return "command";
  return "motor";
}

std::string Wiring::to_json() const {
  nlohmann::json j;
  j["sensory"] = spec.sensory_count;
  j["inter"] = spec.inter_count;
  j["command"] = spec.command_count;
  j["motor"] = spec.motor_count;
  nlohmann::json neurons = nlohmann::json::array();
  for (int64_t id = 0; id < total(); ++id) {
    neurons.push_back({{"id", id}, {"layer", layer_of(id)}});
  }
  j["neurons"] = std::move(neurons);
  nlohmann::json es = nlohmann::json::array();
  for (const Edge& e : edges) {
    es.push_back({{"src", e.src}, {"dst", e.dst}, {"polarity", e.polarity}});
  }
  j["edges"] = std::move(es);
  return j.dump(2);
}

Wiring build_ncp(const WiringSpec& spec, uint64_t seed) {
  if (spec.sensory_count < 1 || spec.inter_count < 1 ||
      spec.command_count < 1 || spec.motor_count < 1) {
    throw std::invalid_argument("build_ncp: all layer counts must be positive");
  }
  WiringSpec s = spec;
  s.sensory_fanout = pick(spec.sensory_fanout, 4, s.inter_count, "sensory_fanout");
  s.inter_fanout = pick(spec.inter_fanout, 5, s.command_count, "inter_fanout");
  s.motor_fanin = pick(spec.motor_fanin, 4, s.command_count, "motor_fanin");
  s.command_recurrent =
      pick(spec.command_recurrent, s.command_count,
           s.command_count * s.command_count, "command_recurrent");
  if (s.command_recurrent > s.command_count * s.command_count) {
    throw std::invalid_argument(
        "build_ncp: command_recurrent exceeds command pair count");
  }

  const int64_t S = s.sensory_count, I = s.inter_count, C = s.command_count,
                M = s.motor_count;
  auto ids = [](int64_t from, int64_t count) {
    std::vector<int64_t> v(static_cast<size_t>(count));
    for (int64_t i = 0; i < count; ++i) v[static_cast<size_t>(i)] = from + i;
    return v;
  };
  const std::vector<int64_t> sensory = ids(0, S);
  const std::vector<int64_t> inter = ids(S, I);
  const std::vector<int64_t> command = ids(S + I, C);
  const std::vector<int64_t> motor = ids(S + I + C, M);

  Rng rng = Rng(seed).derive("ncp-wiring");
  Wiring w;
  w.spec = s;
  deal(sensory, inter, s.sensory_fanout, rng, w.edges, "sensory->inter");
  deal(inter, command, s.inter_fanout, rng, w.edges, "inter->command");

  // Recurrent command edges: distinct ordered pairs, self-loops allowed.
  std::vector<int64_t> pairs(static_cast<size_t>(C * C));
  for (int64_t i = 0; i < C * C; ++i) pairs[static_cast<size_t>(i)] = i;
  rng.shuffle(pairs);
  for (int64_t i = 0; i < s.command_recurrent; ++i) {
    const int64_t p = pairs[static_cast<size_t>(i)];
    w.edges.push_back({command[static_cast<size_t>(p / C)],
                       command[static_cast<size_t>(p % C)], 1});
  }

  // Motor neurons draw a fixed fanin from the command layer, so each motor
  // has >= 1 incoming edge by construction.
  for (const int64_t m : motor) {
    std::vector<int64_t> src;
    while (static_cast<int64_t>(src.size()) < s.motor_fanin) {
      const int64_t cand = command[rng.below(static_cast<uint64_t>(C))];
      if (std::find(src.begin(), src.end(), cand) == src.end()) {
        src.push_back(cand);
      }
    }
    for (const int64_t c : src) w.edges.push_back({c, m, 1});
  }

  std::sort(w.edges.begin(), w.edges.end(), [](const Edge& a, const Edge& b) {
    return a.src != b.src ? a.src < b.src : a.dst < b.dst;
  });
  for (Edge& e : w.edges) e.polarity = rng.below(2) == 0 ? 1 : -1;
  return w;
}

}  // namespace rgc
