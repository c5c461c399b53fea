#include <doctest.h>

#include <algorithm>
#include <map>
#include <queue>
#include <set>
#include <stdexcept>

#include <json.hpp>

#include "rgc/wiring.hpp"

using namespace rgc;

namespace {

WiringSpec default_spec() {
  WiringSpec s;
  s.sensory_count = 32;
  s.inter_count = 12;
  s.command_count = 8;
  s.motor_count = 9;
  return s;
}

}  // namespace

TEST_CASE("build_ncp fills default fanouts clamped to layer sizes") {
  const Wiring w = build_ncp(default_spec(), 3);
  CHECK(w.spec.sensory_fanout == 4);
  CHECK(w.spec.inter_fanout == 5);
  CHECK(w.spec.motor_fanin == 4);
  CHECK(w.spec.command_recurrent == 8);

  WiringSpec tiny;
  tiny.sensory_count = 4;
  tiny.inter_count = 2;
  tiny.command_count = 3;
  tiny.motor_count = 2;
  const Wiring t = build_ncp(tiny, 3);
  CHECK(t.spec.sensory_fanout == 2);
  CHECK(t.spec.inter_fanout == 3);
  CHECK(t.spec.motor_fanin == 3);
  CHECK(t.spec.command_recurrent == 3);
}

TEST_CASE("build_ncp edge counts and layer routing") {
  const Wiring w = build_ncp(default_spec(), 7);
  const int64_t S = 32, I = 12, C = 8, M = 9;
  CHECK(w.sensory() == S);
  CHECK(w.hidden() == I + C + M);
  CHECK(w.total() == S + I + C + M);
  CHECK(w.motor_begin() == I + C);
  CHECK(static_cast<int64_t>(w.edges.size()) == S * 4 + I * 5 + 8 + M * 4);

  std::map<std::pair<std::string, std::string>, int64_t> by_layer;
  for (const Edge& e : w.edges) {
    by_layer[{w.layer_of(e.src), w.layer_of(e.dst)}] += 1;
  }
  CHECK(by_layer.size() == 4);
  CHECK(by_layer[{"sensory", "inter"}] == S * 4);
  CHECK(by_layer[{"inter", "command"}] == I * 5);
  CHECK(by_layer[{"command", "command"}] == 8);
  CHECK(by_layer[{"command", "motor"}] == M * 4);
}

TEST_CASE("build_ncp fanout is exact per source and fanin exact per motor") {
  const Wiring w = build_ncp(default_spec(), 11);
  std::map<int64_t, int64_t> out_deg;
  std::map<int64_t, int64_t> in_deg;
  std::set<std::pair<int64_t, int64_t>> pairs;
  for (const Edge& e : w.edges) {
    out_deg[e.src] += 1;
    in_deg[e.dst] += 1;
    CHECK(pairs.insert({e.src, e.dst}).second);
    CHECK((e.polarity == 1 || e.polarity == -1));
  }
  for (int64_t s = 0; s < 32; ++s) CHECK(out_deg[s] == 4);
  for (int64_t i = 32; i < 44; ++i) CHECK(out_deg[i] == 5);
  for (int64_t m = 52; m < 61; ++m) CHECK(in_deg[m] == 4);
  // Every non-sensory neuron has at least one incoming edge.
  for (int64_t id = 32; id < w.total(); ++id) CHECK(in_deg[id] >= 1);

  int pos = 0, neg = 0;
  for (const Edge& e : w.edges) (e.polarity == 1 ? pos : neg) += 1;
  CHECK(pos > 0);
  CHECK(neg > 0);
}

TEST_CASE("build_ncp reaches every motor neuron from the sensory layer") {
  const Wiring w = build_ncp(default_spec(), 19);
  std::vector<std::vector<int64_t>> adj(static_cast<size_t>(w.total()));
  for (const Edge& e : w.edges) {
    adj[static_cast<size_t>(e.src)].push_back(e.dst);
  }
  std::vector<char> seen(static_cast<size_t>(w.total()), 0);
  std::queue<int64_t> frontier;
  for (int64_t s = 0; s < w.sensory(); ++s) {
    seen[static_cast<size_t>(s)] = 1;
    frontier.push(s);
  }
  while (!frontier.empty()) {
    const int64_t v = frontier.front();
    frontier.pop();
    for (const int64_t n : adj[static_cast<size_t>(v)]) {
      if (!seen[static_cast<size_t>(n)]) {
        seen[static_cast<size_t>(n)] = 1;
        frontier.push(n);
      }
    }
  }
  for (int64_t id = 0; id < w.total(); ++id) CHECK(seen[static_cast<size_t>(id)] == 1);
}

TEST_CASE("build_ncp is deterministic in the seed") {
  const Wiring a = build_ncp(default_spec(), 42);
  const Wiring b = build_ncp(default_spec(), 42);
  REQUIRE(a.edges.size() == b.edges.size());
  for (size_t i = 0; i < a.edges.size(); ++i) {
    CHECK(a.edges[i].src == b.edges[i].src);
    CHECK(a.edges[i].dst == b.edges[i].dst);
    CHECK(a.edges[i].polarity == b.edges[i].polarity);
  }

  const Wiring c = build_ncp(default_spec(), 43);
  bool differs = a.edges.size() != c.edges.size();
  for (size_t i = 0; !differs && i < a.edges.size(); ++i) {
    differs = a.edges[i].src != c.edges[i].src ||
              a.edges[i].dst != c.edges[i].dst ||
              a.edges[i].polarity != c.edges[i].polarity;
  }
  CHECK(differs);
}

TEST_CASE("build_ncp edges are sorted by source then destination") {
  const Wiring w = build_ncp(default_spec(), 5);
  const bool sorted = std::is_sorted(
      w.edges.begin(), w.edges.end(), [](const Edge& a, const Edge& b) {
        return a.src != b.src ? a.src < b.src : a.dst < b.dst;
      });
  CHECK(sorted);
}

TEST_CASE("build_ncp rejects infeasible and malformed specs") {
  WiringSpec s = default_spec();
  s.motor_count = 0;
  CHECK_THROWS_AS(build_ncp(s, 1), std::invalid_argument);

  s = default_spec();
  s.sensory_fanout = 13;  // more than 12 inter targets
  CHECK_THROWS_AS(build_ncp(s, 1), std::invalid_argument);

  s = default_spec();
  s.sensory_count = 2;
  s.sensory_fanout = 1;  // 2 edges cannot cover 12 inter neurons
  CHECK_THROWS_WITH_AS(build_ncp(s, 1), doctest::Contains("cannot cover"),
                       std::invalid_argument);

  s = default_spec();
  s.command_recurrent = 65;  // 8*8 ordered pairs available
  CHECK_THROWS_AS(build_ncp(s, 1), std::invalid_argument);

  s = default_spec();
  s.inter_fanout = -2;
  CHECK_THROWS_AS(build_ncp(s, 1), std::invalid_argument);
}

TEST_CASE("Wiring::layer_of maps global ids to layers") {
  const Wiring w = build_ncp(default_spec(), 2);
  CHECK(w.layer_of(0) == "sensory");
  CHECK(w.layer_of(31) == "sensory");
  CHECK(w.layer_of(32) == "inter");
  CHECK(w.layer_of(43) == "inter");
  CHECK(w.layer_of(44) == "command");
  CHECK(w.layer_of(51) == "command");
  CHECK(w.layer_of(52) == "motor");
  CHECK(w.layer_of(60) == "motor");
}

TEST_CASE("Wiring::to_json serializes counts, neurons and edges") {
  const Wiring w = build_ncp(default_spec(), 9);
  const nlohmann::json j = nlohmann::json::parse(w.to_json());
  CHECK(j["sensory"].get<int64_t>() == 32);
  CHECK(j["inter"].get<int64_t>() == 12);
  CHECK(j["command"].get<int64_t>() == 8);
  CHECK(j["motor"].get<int64_t>() == 9);
  CHECK(j["neurons"].size() == static_cast<size_t>(w.total()));
  CHECK(j["neurons"][0]["layer"].get<std::string>() == "sensory");
  CHECK(j["neurons"][60]["layer"].get<std::string>() == "motor");
  REQUIRE(j["edges"].size() == w.edges.size());
  CHECK(j["edges"][0]["src"].get<int64_t>() == w.edges[0].src);
  CHECK(j["edges"][0]["dst"].get<int64_t>() == w.edges[0].dst);
  CHECK(j["edges"][0]["polarity"].get<int>() == w.edges[0].polarity);
}
