#pragma once

#include "ppo1/trainer.hpp"

#include <filesystem>
#include <fstream>
#include <string>

namespace ppo1 {

/// Streams history.csv (one row per sample) and summary.csv (one row per
/// episode). Rows are flushed as episodes complete so a failed run keeps its
/// partial history.
class RunLogWriter {
 public:
  RunLogWriter(const std::filesystem::path& history_csv, const std::filesystem::path& summary_csv,
               int action_dim);

  // Writes every episode of `history` not yet written.
  void write_new(const RunHistory& history);

 private:
  std::ofstream history_;
  std::ofstream summary_;
  int action_dim_;
  std::size_t written_ = 0;
};

std::string history_header(int action_dim);
inline constexpr const char* kSummaryHeader = "episode,mean_reward,moving_avg,elapsed_s";

/// Rebuilds a RunHistory from the two CSVs. Derived series are recomputed by
/// RunHistory::append; elapsed times come from the summary.
RunHistory read_run_log(const std::filesystem::path& history_csv,
                        const std::filesystem::path& summary_csv, int window = 50);

}  // namespace ppo1
