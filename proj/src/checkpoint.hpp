#pragma once

#include <map>

#include "param_store.hpp"

namespace protoforge {

/// Portable model snapshot: a text header (dtype, counters, flat config
/// key=value lines, named rng states, parameter names/shapes) followed by the
/// raw little-endian parameter values in header order. Gradients are not
/// stored; they reload as zeros.
struct CheckpointData {
  std::string dtype;  // f32 | f64
  long episode = 0;
  double best_val_acc = 0.0;
  std::map<std::string, std::string> config;
  std::map<std::string, std::string> rng_states;
  ParamStore<float> params_f32;
  ParamStore<double> params_f64;

  bool is_f64() const { return dtype == "f64"; }
};

void save_checkpoint(const CheckpointData& ckpt, const std::string& path);

/// Validates the blob against the header before anything is returned: a
/// truncated or oversized file is a CheckpointError naming the entry where
/// the data ran out, and no partial state escapes.
CheckpointData load_checkpoint(const std::string& path);

}  // namespace protoforge
