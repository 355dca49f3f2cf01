#include "ppo1/run_log.hpp"

#include <cmath>
#include <cstdio>
#include <map>
#include <sstream>

namespace ppo1 {

namespace {

// %.17g round-trips every double exactly.
std::string num(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  std::string cell;
  while (std::getline(ss, cell, ',')) out.push_back(cell);
  return out;
}

double parse_double(const std::string& s, const std::string& where) {
  std::size_t used = 0;
  double x = 0.0;
  try {
    x = std::stod(s, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  // stod rejects "nan"/"inf" spelled by printf on some platforms; accept them
  if (used != s.size()) {
    if (s == "nan" || s == "-nan") return std::nan("");
    if (s == "inf") return HUGE_VAL;
    if (s == "-inf") return -HUGE_VAL;
    throw std::runtime_error("bad number '" + s + "' in " + where);
  }
  return x;
}

std::ofstream open_out(const std::filesystem::path& p) {
  std::ofstream out(p, std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + p.string());
  return out;
}

}  // namespace

std::string history_header(int action_dim) {
  std::string h = "episode,env";
  for (int j = 0; j < action_dim; ++j) h += ",raw_action_" + std::to_string(j);
  for (int j = 0; j < action_dim; ++j) h += ",phys_action_" + std::to_string(j);
  return h + ",reward,advantage";
}

RunLogWriter::RunLogWriter(const std::filesystem::path& history_csv,
                           const std::filesystem::path& summary_csv, int action_dim)
    : history_(open_out(history_csv)), summary_(open_out(summary_csv)), action_dim_(action_dim) {
  history_ << history_header(action_dim) << '\n';
  summary_ << kSummaryHeader << '\n';
  history_.flush();
  summary_.flush();
}

void RunLogWriter::write_new(const RunHistory& history) {
  for (; written_ < history.size(); ++written_) {
    const auto& batch = history.batches[written_];
    for (std::size_t i = 0; i < batch.samples.size(); ++i) {
      const auto& s = batch.samples[i];
      history_ << batch.episode << ',' << i;
      for (int j = 0; j < action_dim_; ++j) history_ << ',' << num(s.raw_action[j]);
      for (int j = 0; j < action_dim_; ++j) history_ << ',' << num(s.physical_action[j]);
      history_ << ',' << num(s.reward) << ',' << num(s.advantage) << '\n';
    }
    summary_ << batch.episode << ',' << num(history.mean_reward[written_]) << ','
             << num(history.moving_avg_reward[written_]) << ',' << num(history.elapsed_s[written_])
             << '\n';
  }
  history_.flush();
  summary_.flush();
}

RunHistory read_run_log(const std::filesystem::path& history_csv,
                        const std::filesystem::path& summary_csv, int window) {
  std::ifstream hin(history_csv);
  std::ifstream sin(summary_csv);
  if (!hin) throw std::runtime_error("cannot read " + history_csv.string());
  if (!sin) throw std::runtime_error("cannot read " + summary_csv.string());

  std::string line;
  std::getline(hin, line);
  const auto header = split(line);
  if (header.size() < 6 || (header.size() - 4) % 2 != 0) {
    throw std::runtime_error("unexpected header in " + history_csv.string());
  }
  const int d = static_cast<int>((header.size() - 4) / 2);
  if (line != history_header(d)) throw std::runtime_error("unexpected header in " + history_csv.string());

  std::map<long, EpisodeBatch> batches;
  while (std::getline(hin, line)) {
    if (line.empty()) continue;
    const auto cells = split(line);
    if (cells.size() != header.size()) throw std::runtime_error("short row in " + history_csv.string());
    const long episode = std::stol(cells[0]);
    EpisodeSample s;
    s.raw_action.resize(d);
    s.physical_action.resize(d);
    for (int j = 0; j < d; ++j) {
      s.raw_action[j] = parse_double(cells[2 + j], history_csv.string());
      s.physical_action[j] = parse_double(cells[2 + d + j], history_csv.string());
    }
    s.reward = parse_double(cells[2 + 2 * d], history_csv.string());
    s.advantage = parse_double(cells[3 + 2 * d], history_csv.string());
    auto& b = batches[episode];
    b.episode = episode;
    b.samples.push_back(std::move(s));
  }

  std::map<long, double> elapsed;
  std::getline(sin, line);
  if (line != kSummaryHeader) throw std::runtime_error("unexpected header in " + summary_csv.string());
  while (std::getline(sin, line)) {
    if (line.empty()) continue;
    const auto cells = split(line);
    if (cells.size() != 4) throw std::runtime_error("short row in " + summary_csv.string());
    elapsed[std::stol(cells[0])] = parse_double(cells[3], summary_csv.string());
  }

  RunHistory h;
  h.window = window;
  for (auto& [episode, batch] : batches) {
    const auto it = elapsed.find(episode);
    h.append(std::move(batch), it == elapsed.end() ? 0.0 : it->second);
  }
  return h;
}

}  // namespace ppo1
