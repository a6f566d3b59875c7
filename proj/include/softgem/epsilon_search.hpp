#pragma once

#include <functional>
#include <iosfwd>
#include <map>
#include <variant>
#include <vector>

namespace softgem {

// Outcome of training one population with a fixed epsilon.
struct EpsilonScore {
  double accuracy_mean = 0;    // A_T averaged over runs
  double accuracy_std = 0;
  double forgetting_mean = 0;  // F_T averaged over runs
};

// One repeat of the interval-refinement search: N equally spaced epsilon
// values over the current range, with the scores gathered so far.
struct EpsilonSearchState {
  int repeat = 0;           // j, 0 for the initial [0, 1] grid
  std::vector<double> grid; // strictly increasing, inside [0, 1]
  double interval = 0;      // delta_j = (grid.back() - grid.front()) / (N - 1)
  int max_repeats = 5;      // M
  std::map<double, EpsilonScore> results;

  int points() const { return static_cast<int>(grid.size()); }
  void record(double epsilon, EpsilonScore score) { results[epsilon] = score; }
  bool complete() const;
};

struct SearchStopped {};

EpsilonSearchState init_grid(int points, int max_repeats = 5);

// Picks the best and second-best epsilon of the current grid (ties toward
// the smaller epsilon), orders them e1 <= e2 and narrows the range:
//   stop                    if e1, e2 are the two grid ends and j > 0,
//                           or the next repeat would exceed M
//   [e1, e2 + delta]        if e1 is the left end
//   [e1 - delta, e2]        if e2 is the right end
//   [e1 - delta, e2 + delta] otherwise
// The new range is clipped to [0, 1] and re-gridded with the same N.
std::variant<EpsilonSearchState, SearchStopped> refine(const EpsilonSearchState &state);

struct SearchHistoryEntry {
  int repeat = 0;
  double epsilon = 0;
  EpsilonScore score;
};

struct SearchResult {
  double best_epsilon = 0;
  EpsilonScore best_score;
  int repeats = 0;
  double final_interval = 0;
  std::vector<SearchHistoryEntry> history;
};

using EpsilonTrainer = std::function<EpsilonScore(double epsilon)>;

// Evaluates every grid point of each repeat, then refines until stopped.
// Points already evaluated in an earlier repeat are reused.
SearchResult run_search(int points, int max_repeats, const EpsilonTrainer &trainer);

// Columns: repeat, epsilon, A_T_mean, A_T_std, F_T_mean
void write_history_csv(std::ostream &out, const std::vector<SearchHistoryEntry> &history);

} // namespace softgem
