#pragma once

#include "ppo1/trainer.hpp"

#include <filesystem>
#include <functional>
#include <string>
#include <vector>

namespace ppo1 {

struct CriterionResult {
  int id = 0;
  std::string name;
  bool pass = false;
  std::string detail;
};

struct BenchOptions {
  int seeds = 10;                      // tandem uses twice as many
  std::filesystem::path executable;    // the ppo1 CLI, for run/worker-echo subprocesses
  std::filesystem::path work_dir = "ppo1_bench";
};

// ceil(0.8 * seeds): the "8 of 10" threshold scaled to the seed count.
int required_successes(int seeds);

CriterionResult check_gradients(std::uint64_t seed = 1);
CriterionResult check_whitening(std::uint64_t seed = 2);
CriterionResult check_clip_table();
CriterionResult check_naca(int seeds);
CriterionResult check_tandem(int seeds);
CriterionResult check_pinball_steady(int seeds);
CriterionResult check_pinball_periodic(int seeds);
CriterionResult check_oracles();
CriterionResult check_determinism(const BenchOptions& options);
CriterionResult check_protocol(const BenchOptions& options);
CriterionResult check_update_accounting();

/// Runs criteria 1-11 in order; `report` sees each result as it completes.
std::vector<CriterionResult> run_bench(const BenchOptions& options,
                                       const std::function<void(const CriterionResult&)>& report = {});

std::string format_result(const CriterionResult& r);

// Spawns argv, waits, and returns the exit status (or -1 when it cannot start).
int run_process(const std::vector<std::string>& argv);

}  // namespace ppo1
