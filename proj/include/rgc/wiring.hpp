#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace rgc {

// Four-layer sparse connectivity: sensory -> inter -> command (with
// command->command recurrence) -> motor.  Fanout fields set to 0 pick a
// default clamped to the layer sizes; explicit values are validated strictly.
struct WiringSpec {
  int64_t sensory_count = 0;
  int64_t inter_count = 0;
  int64_t command_count = 0;
  int64_t motor_count = 0;
  int64_t sensory_fanout = 0;     // outgoing edges per sensory neuron
  int64_t inter_fanout = 0;       // outgoing edges per inter neuron
  int64_t command_recurrent = 0;  // total command->command edges
  int64_t motor_fanin = 0;        // incoming edges per motor neuron
};

// Global neuron ids: [0, S) sensory, then inter, command, motor.
struct Edge {
  int64_t src = 0;
  int64_t dst = 0;
  int polarity = 1;  // +1 or -1
};

struct Wiring {
  WiringSpec spec;
  std::vector<Edge> edges;

  int64_t sensory() const { return spec.sensory_count; }
  int64_t hidden() const {
    return spec.inter_count + spec.command_count + spec.motor_count;
  }
  int64_t total() const { return sensory() + hidden(); }
  // Hidden-local index ranges.
  int64_t motor_begin() const { return spec.inter_count + spec.command_count; }

  std::string layer_of(int64_t id) const;
  std::string to_json() const;
};

// Deterministic given seed.  Guarantees exact per-source fanout for the
// dealt layers, >= 1 incoming edge for every non-sensory neuron, and
// reachability of every motor neuron from the sensory layer.
Wiring build_ncp(const WiringSpec& spec, uint64_t seed);

}  // namespace rgc
