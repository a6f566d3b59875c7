#include "softgem/epsilon_search.hpp"

#include <algorithm>
#include <iomanip>
#include <ostream>
#include <string>

#include "softgem/errors.hpp"

namespace softgem {

namespace {

std::vector<double> linspace(double lo, double hi, int points) {
  std::vector<double> grid(static_cast<std::size_t>(points));
  for (int k = 0; k < points; ++k)
    grid[static_cast<std::size_t>(k)] = lo + (hi - lo) * k / (points - 1);
  grid.back() = hi;
  return grid;
}

// True when a ranks above b: higher accuracy, then smaller epsilon.
bool ranks_above(double eps_a, const EpsilonScore &a, double eps_b, const EpsilonScore &b) {
  if (a.accuracy_mean != b.accuracy_mean)
    return a.accuracy_mean > b.accuracy_mean;
  return eps_a < eps_b;
}

} // namespace

bool EpsilonSearchState::complete() const {
  return std::all_of(grid.begin(), grid.end(), [&](double e) { return results.contains(e); });
}

EpsilonSearchState init_grid(int points, int max_repeats) {
  if (points < 3)
    throw GridTooSmall("need at least 3 grid points, got " + std::to_string(points));
  EpsilonSearchState state;
  state.grid = linspace(0.0, 1.0, points);
  state.interval = 1.0 / (points - 1);
  state.max_repeats = max_repeats;
  return state;
}

std::variant<EpsilonSearchState, SearchStopped> refine(const EpsilonSearchState &state) {
  if (state.grid.size() < 3)
    throw GridTooSmall("grid has fewer than 3 points");
  for (double e : state.grid)
    if (!state.results.contains(e))
      throw MissingResults("no A_T recorded for epsilon " + std::to_string(e));

  std::vector<double> ranked = state.grid;
  std::stable_sort(ranked.begin(), ranked.end(), [&](double a, double b) {
    return ranks_above(a, state.results.at(a), b, state.results.at(b));
  });
  double e1 = ranked[0];
  double e2 = ranked[1];
  if (e1 > e2)
    std::swap(e1, e2);

  const double left = state.grid.front();
  const double right = state.grid.back();
  const bool ends = e1 == left && e2 == right;
  if ((ends && state.repeat > 0) || state.repeat + 1 > state.max_repeats)
    return SearchStopped{};

  double lo = e1 - state.interval;
  double hi = e2 + state.interval;
  if (e1 == left)
    lo = e1;
  else if (e2 == right)
    hi = e2;
  lo = std::max(lo, 0.0);
  hi = std::min(hi, 1.0);

  EpsilonSearchState next;
  next.repeat = state.repeat + 1;
  next.max_repeats = state.max_repeats;
  next.grid = linspace(lo, hi, state.points());
  next.interval = (hi - lo) / (state.points() - 1);
  for (double e : next.grid)
    if (auto it = state.results.find(e); it != state.results.end())
      next.results.insert(*it);
  return next;
}

SearchResult run_search(int points, int max_repeats, const EpsilonTrainer &trainer) {
  EpsilonSearchState state = init_grid(points, max_repeats);
  std::map<double, EpsilonScore> seen;
  SearchResult result;
  bool have_best = false;

  for (;;) {
    for (double e : state.grid) {
      auto it = seen.find(e);
      if (it == seen.end())
        it = seen.emplace(e, trainer(e)).first;
      state.record(e, it->second);
      result.history.push_back({state.repeat, e, it->second});
      if (!have_best || ranks_above(e, it->second, result.best_epsilon, result.best_score)) {
        result.best_epsilon = e;
        result.best_score = it->second;
        have_best = true;
      }
    }
    result.repeats = state.repeat + 1;
    result.final_interval = state.interval;
    auto next = refine(state);
    if (std::holds_alternative<SearchStopped>(next))
      break;
    state = std::get<EpsilonSearchState>(std::move(next));
  }
  return result;
}

void write_history_csv(std::ostream &out, const std::vector<SearchHistoryEntry> &history) {
  out << "repeat,epsilon,A_T_mean,A_T_std,F_T_mean\n";
  const auto flags = out.flags();
  const auto precision = out.precision();
  out << std::setprecision(17);
  for (const auto &h : history)
    out << h.repeat << ',' << h.epsilon << ',' << h.score.accuracy_mean << ','
        << h.score.accuracy_std << ',' << h.score.forgetting_mean << '\n';
  out.flags(flags);
  out.precision(precision);
}

} // namespace softgem
