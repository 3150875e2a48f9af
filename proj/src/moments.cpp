#include "sddestab/moments.hpp"

#include <atomic>
#include <cmath>
#include <cstdio>
#include <mutex>
#include <thread>

#include "sddestab/errors.hpp"
#include "sddestab/linalg.hpp"
#include "sddestab/simulate.hpp"

namespace sddestab {

namespace {

// Paths are processed in fixed chunks and the chunk partials are merged in
// chunk order, so the reduction is bitwise identical for any worker count.
constexpr long kChunkSize = 32;

struct ChunkSums {
  std::vector<double> sum;    // [qbar][row] flattened
  std::vector<double> sumsq;  // same layout
  std::vector<long> alive;    // [row]
};

} // namespace

MomentSeries ensemble_moments(const SystemSpec& spec, const ControlSchedule& schedule,
                              double horizon, double step, uint64_t master_seed, long n_paths,
                              const std::vector<double>& qbars, bool controlled, int n_workers,
                              long max_rows) {
  if (n_paths < 1) throw ConfigError("ensemble_moments: n_paths must be at least 1");
  if (qbars.empty()) throw ValidationError("ensemble_moments: need at least one moment order");
  for (double qb : qbars) {
    if (qb < 2.0 || qb >= spec.growth.q)
      throw ValidationError("ensemble_moments: moment orders must lie in [2, q)");
  }
  if (max_rows < 2) throw ValidationError("ensemble_moments: max_rows must be at least 2");

  const long n_steps = static_cast<long>(horizon / step * (1.0 + 1e-12));
  long decim = n_steps / max_rows;
  if (decim * max_rows < n_steps) ++decim;
  if (decim < 1) decim = 1;
  const long n_rows = n_steps / decim + 1;
  const size_t nq = qbars.size();

  MomentSeries series;
  series.qbars = qbars;
  series.n_paths = n_paths;
  series.times.resize(static_cast<size_t>(n_rows));
  for (long r = 0; r < n_rows; ++r)
    series.times[static_cast<size_t>(r)] = static_cast<double>(r * decim) * step;

  const long n_chunks = (n_paths + kChunkSize - 1) / kChunkSize;
  std::vector<ChunkSums> chunks(static_cast<size_t>(n_chunks));

  std::atomic<long> next_chunk{0};
  std::atomic<bool> failed{false};
  std::string failure;
  std::mutex failure_mutex;

  const auto worker = [&]() {
    try {
      for (;;) {
        const long c = next_chunk.fetch_add(1);
        if (c >= n_chunks || failed.load()) return;
        ChunkSums& out = chunks[static_cast<size_t>(c)];
        out.sum.assign(nq * static_cast<size_t>(n_rows), 0.0);
        out.sumsq.assign(nq * static_cast<size_t>(n_rows), 0.0);
        out.alive.assign(static_cast<size_t>(n_rows), 0);
        const long lo = c * kChunkSize;
        const long hi = std::min(lo + kChunkSize, n_paths);
        for (long path = lo; path < hi; ++path) {
          const Trajectory traj = integrate_path(spec, schedule, horizon, step, master_seed,
                                                 static_cast<uint64_t>(path), controlled);
          for (long r = 0; r < n_rows; ++r) {
            const size_t k = static_cast<size_t>(r * decim);
            if (k >= traj.n_points()) break; // exploded before this time
            double v = 0.0;
            for (int cdim = 0; cdim < traj.dim; ++cdim) {
              const double xc = traj.x(k, cdim);
              v += xc * xc;
            }
            v = std::sqrt(v);
            out.alive[static_cast<size_t>(r)] += 1;
            for (size_t qi = 0; qi < nq; ++qi) {
              const double w = std::pow(v, qbars[qi]);
              out.sum[qi * static_cast<size_t>(n_rows) + static_cast<size_t>(r)] += w;
              out.sumsq[qi * static_cast<size_t>(n_rows) + static_cast<size_t>(r)] += w * w;
            }
          }
        }
      }
    } catch (const std::exception& e) {
      std::lock_guard<std::mutex> lock(failure_mutex);
      failed.store(true);
      if (failure.empty()) failure = e.what();
    }
  };

  int workers = n_workers > 0 ? n_workers
                              : static_cast<int>(std::thread::hardware_concurrency());
  if (workers < 1) workers = 1;
  workers = static_cast<int>(std::min<long>(workers, n_chunks));
  if (workers <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    pool.reserve(static_cast<size_t>(workers));
    for (int w = 0; w < workers; ++w) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  if (failed.load()) throw EstimationError("ensemble_moments: " + failure);

  // ordered merge
  std::vector<double> sum(nq * static_cast<size_t>(n_rows), 0.0);
  std::vector<double> sumsq(nq * static_cast<size_t>(n_rows), 0.0);
  std::vector<long> alive(static_cast<size_t>(n_rows), 0);
  for (const ChunkSums& c : chunks) {
    for (size_t i = 0; i < sum.size(); ++i) {
      sum[i] += c.sum[i];
      sumsq[i] += c.sumsq[i];
    }
    for (long r = 0; r < n_rows; ++r) alive[static_cast<size_t>(r)] += c.alive[static_cast<size_t>(r)];
  }

  if (alive[static_cast<size_t>(n_rows - 1)] == 0)
    throw EstimationError("ensemble_moments: every path exploded before the horizon");

  series.m.assign(nq, std::vector<double>(static_cast<size_t>(n_rows), 0.0));
  series.se.assign(nq, std::vector<double>(static_cast<size_t>(n_rows), 0.0));
  series.exploded_fraction.resize(static_cast<size_t>(n_rows));
  for (long r = 0; r < n_rows; ++r) {
    const size_t sr = static_cast<size_t>(r);
    const long n_alive = alive[sr];
    series.exploded_fraction[sr] =
        static_cast<double>(n_paths - n_alive) / static_cast<double>(n_paths);
    for (size_t qi = 0; qi < nq; ++qi) {
      if (n_alive == 0) continue;
      const double s = sum[qi * static_cast<size_t>(n_rows) + sr];
      const double s2 = sumsq[qi * static_cast<size_t>(n_rows) + sr];
      const double mean = s / static_cast<double>(n_alive);
      series.m[qi][sr] = mean;
      if (n_alive > 1) {
        double var = (s2 - static_cast<double>(n_alive) * mean * mean) /
                     static_cast<double>(n_alive - 1);
        if (var < 0.0) var = 0.0; // rounding
        series.se[qi][sr] = std::sqrt(var / static_cast<double>(n_alive));
      }
    }
  }
  return series;
}

namespace {

size_t qbar_index(const MomentSeries& series, double qbar) {
  for (size_t i = 0; i < series.qbars.size(); ++i)
    if (std::fabs(series.qbars[i] - qbar) < 1e-12) return i;
  throw ValidationError("moment order not present in the series");
}

} // namespace

RateFit fit_decay_rate(const MomentSeries& series, double qbar, double t0, double t1) {
  if (!(t0 < t1)) throw ValidationError("fit_decay_rate: need t0 < t1");
  const size_t qi = qbar_index(series, qbar);
  std::vector<double> ts, logs;
  for (size_t r = 0; r < series.times.size(); ++r) {
    const double t = series.times[r];
    if (t < t0 - 1e-12 || t > t1 + 1e-12) continue;
    const double m = series.m[qi][r];
    if (!(m > 0.0))
      throw EstimationError("fit_decay_rate: nonpositive moment estimate inside the fit window");
    ts.push_back(t);
    logs.push_back(std::log(m));
  }
  if (ts.size() < 10)
    throw ValidationError("fit_decay_rate: the window must contain at least 10 grid points");
  const LineFit line = fit_line(ts, logs);
  RateFit fit;
  fit.qbar = qbar;
  fit.t0 = ts.front();
  fit.t1 = ts.back();
  fit.slope = line.slope;
  fit.intercept = line.intercept;
  fit.residual_rms = line.rms;
  fit.n_points = static_cast<long>(ts.size());
  return fit;
}

CompareReport compare_to_certificate(const RateFit& fit, double certified_exponent,
                                     bool delta_admissible, double tolerance) {
  CompareReport rep;
  rep.empirical = fit.slope;
  rep.certified = certified_exponent;
  if (fit.slope <= certified_exponent * (1.0 - tolerance)) {
    rep.status = CompareStatus::Pass;
    rep.message = "empirical decay at least as fast as certified";
  } else if (fit.slope > -0.02) {
    rep.status = CompareStatus::NoDecay;
    rep.message = "no empirical decay detected";
  } else if (!delta_admissible) {
    rep.status = CompareStatus::OutsideCertificate;
    rep.message = "slower than certified, but the observation gap exceeds the certified bound";
  } else {
    rep.status = CompareStatus::ViolationCandidate;
    rep.message = "slower than certified within the certified observation gap";
  }
  return rep;
}

const char* compare_status_name(CompareStatus status) {
  switch (status) {
    case CompareStatus::Pass: return "pass";
    case CompareStatus::NoDecay: return "no decay";
    case CompareStatus::OutsideCertificate: return "outside certificate";
    case CompareStatus::ViolationCandidate: return "violation candidate";
  }
  return "unknown";
}

std::string moments_csv(const MomentSeries& series) {
  std::string out = "t";
  char buf[64];
  for (double qb : series.qbars) {
    std::snprintf(buf, sizeof(buf), ",m_%g,se_%g", qb, qb);
    out += buf;
  }
  out += ",exploded_fraction\n";
  for (size_t r = 0; r < series.times.size(); ++r) {
    std::snprintf(buf, sizeof(buf), "%.17g", series.times[r]);
    out += buf;
    for (size_t qi = 0; qi < series.qbars.size(); ++qi) {
      std::snprintf(buf, sizeof(buf), ",%.17g,%.17g", series.m[qi][r], series.se[qi][r]);
      out += buf;
    }
    std::snprintf(buf, sizeof(buf), ",%.17g\n", series.exploded_fraction[r]);
    out += buf;
  }
  return out;
}

} // namespace sddestab
