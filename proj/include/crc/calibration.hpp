#pragma once

#include <concepts>
#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <vector>

#include "crc/data.hpp"
#include "crc/error.hpp"
#include "crc/model.hpp"

namespace crc {

/// A generative classifier learned in closed form through an additive
/// statistics mapping and a parameter mapping. Naive Bayes is the only model
/// shipped; a QDA-style model would supply the same five functions.
template <class M>
concept ClosedFormModel = requires(typename M::Stats& stats, const typename M::Stats& cstats,
                                   const Dataset& data, const typename M::Params& params, double c) {
  { M::stat_map(data) } -> std::convertible_to<typename M::Stats>;
  { M::prob_stat_map(data, params) } -> std::convertible_to<typename M::Stats>;
  { M::param_map(cstats) } -> std::convertible_to<typename M::Params>;
  { M::project(stats) } -> std::same_as<bool>;
  { M::evaluate(params, data) } -> std::same_as<Errors>;
  stats.add_scaled(cstats, c);
  { cstats.ess() } -> std::convertible_to<double>;
};

inline StatsVector project(StatsVector stats) {
  project_in_place(stats);
  return stats;
}

namespace detail {

template <ClosedFormModel M>
typename M::Stats direction_from(typename M::Stats target, const Dataset& data,
                                 const typename M::Params& params) {
  target.add_scaled(M::prob_stat_map(data, params), -1.0);
  return target;
}

}  // namespace detail

// s(X, Y) - s(X, theta): the calibration direction for one pass over `data`.
template <ClosedFormModel M = NaiveBayes>
typename M::Stats rc_direction(const Dataset& data, const typename M::Params& params) {
  return detail::direction_from<M>(M::stat_map(data), data, params);
}

// project(s + lr * (s(X, Y) - s(X, theta)))
template <ClosedFormModel M = NaiveBayes>
typename M::Stats rc_update(const typename M::Stats& stats, const Dataset& data, double lr,
                            const typename M::Params& params) {
  if (!(lr >= 0.0)) throw Error("learning rate must be non-negative");
  auto next = stats;
  next.add_scaled(rc_direction<M>(data, params), lr);
  M::project(next);
  return next;
}

template <ClosedFormModel M = NaiveBayes>
struct BasicRCTrace {
  struct Record {
    int t = 0;
    double soft_err = 0.0;
    double err01 = 0.0;
    typename M::Params params;
    typename M::Stats stats;
  };

  std::vector<Record> records;  // t = 0 (initialization) .. t_max
  std::size_t best = 0;         // lowest training soft error; first wins ties

  const Record& final() const { return records.back(); }
  const Record& best_record() const { return records[best]; }
};

using RCTrace = BasicRCTrace<NaiveBayes>;

/// Risk-based calibration on a centralized dataset, starting from `init`.
/// The returned model is the last iterate; the trace also marks the
/// iterate with the lowest training soft error.
template <ClosedFormModel M = NaiveBayes>
BasicRCTrace<M> rc(const Dataset& data, double lr, int t_max, const typename M::Stats& init) {
  if (t_max < 1) throw Error("t_max must be at least 1");
  if (!(lr > 0.0)) throw Error("learning rate must be positive");
  if (data.empty()) throw Error("cannot calibrate on an empty dataset");
  BasicRCTrace<M> trace;
  trace.records.reserve(static_cast<std::size_t>(t_max) + 1);

  const auto target = M::stat_map(data);
  auto stats = init;
  auto params = M::param_map(stats);
  for (int t = 0;; ++t) {
    const Errors errors = M::evaluate(params, data);
    trace.records.push_back({t, errors.soft, errors.err01, params, stats});
    if (errors.soft < trace.records[trace.best].soft_err) trace.best = trace.records.size() - 1;
    if (t == t_max) break;

    stats.add_scaled(detail::direction_from<M>(target, data, params), lr);
    M::project(stats);
    params = M::param_map(stats);
  }
  return trace;
}

template <ClosedFormModel M = NaiveBayes>
struct BasicLrcResult {
  typename M::Params params;
  typename M::Stats stats;
};

using LrcResult = BasicLrcResult<NaiveBayes>;

/// Local RC: `iter` unit-step calibration passes over the local data,
/// starting from aggregated statistics. The equivalent sample size of the
/// input acts as the inverse local learning rate.
template <ClosedFormModel M = NaiveBayes>
BasicLrcResult<M> lrc(const typename M::Stats& aggregated, const Dataset& local, int iter) {
  if (iter < 1) throw Error("iter must be at least 1");
  if (local.empty()) throw Error("local dataset is empty");
  const auto target = M::stat_map(local);
  auto stats = aggregated;
  auto params = M::param_map(stats);
  for (int i = 0; i < iter; ++i) {
    stats.add_scaled(detail::direction_from<M>(target, local, params), 1.0);
    M::project(stats);
    params = M::param_map(stats);
  }
  return {std::move(params), std::move(stats)};
}

// CSV with columns t,soft_err,err01.
void write_trace_csv(std::ostream& out, const RCTrace& trace);
void write_trace_csv(const std::filesystem::path& path, const RCTrace& trace);

}  // namespace crc
