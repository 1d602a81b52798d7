#pragma once

#include <chrono>
#include <filesystem>
#include <string>
#include <vector>

#include "styleinv/config.hpp"

namespace styleinv::acceptance {

struct Outcome {
  bool pass = false;
  std::string detail;
};

struct Options {
  std::filesystem::path work_dir;  // cached desk-run checkpoints
  std::filesystem::path data_dir;  // committed reference files
  bool verbose = false;
};

class Stopwatch {
 public:
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
  }

 private:
  std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

Outcome ape_fixedness(const Options& o);
Outcome anchor_consistency(const Options& o);
Outcome residual_identity(const Options& o);
Outcome gradient_suite(const Options& o);
Outcome loss_oracles(const Options& o);
Outcome determinism(const Options& o);
Outcome desk_run(const Options& o);
Outcome style_transfer(const Options& o);
Outcome round_trips(const Options& o);

/// Desk configuration: defaults plus tests/data/desk.cfg.
PipelineConfig desk_config(const Options& o);

}  // namespace styleinv::acceptance
