#pragma once

#include <atomic>
#include <cmath>
#include <cstdarg>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <functional>
#include <string>
#include <thread>
#include <vector>

namespace bandprufer {

enum class LogLevel { quiet = 0, info = 1, debug = 2 };

inline LogLevel log_level() {
  static LogLevel lvl = [] {
    const char* env = std::getenv("BANDPRUFER_LOG");
    if (!env) return LogLevel::info;
    if (std::strcmp(env, "quiet") == 0) return LogLevel::quiet;
    if (std::strcmp(env, "debug") == 0) return LogLevel::debug;
    return LogLevel::info;
  }();
  return lvl;
}

inline void log_at(LogLevel lvl, const char* fmt, ...) {
  if (log_level() < lvl) return;
  va_list args;
  va_start(args, fmt);
  std::vfprintf(stderr, fmt, args);
  std::fputc('\n', stderr);
  va_end(args);
}

#define BP_INFO(...) ::bandprufer::log_at(::bandprufer::LogLevel::info, __VA_ARGS__)
#define BP_DEBUG(...) ::bandprufer::log_at(::bandprufer::LogLevel::debug, __VA_ARGS__)

// Composite Simpson over n+1 equispaced samples; n must be even.
inline double simpson(const std::vector<double>& f, double h) {
  const size_t n = f.size() - 1;
  double odd = 0.0, even = 0.0;
  for (size_t i = 1; i < n; i += 2) odd += f[i];
  for (size_t i = 2; i < n; i += 2) even += f[i];
  return (h / 3.0) * (f.front() + f.back() + 4.0 * odd + 2.0 * even);
}

inline std::vector<double> linspace(double a, double b, int n) {
  std::vector<double> out(static_cast<size_t>(n));
  if (n == 1) {
    out[0] = a;
    return out;
  }
  for (int i = 0; i < n; ++i)
    out[static_cast<size_t>(i)] = a + (b - a) * static_cast<double>(i) / (n - 1);
  return out;
}

// Runs fn(i) for i in [0, n). Results must be written to per-index slots so the
// outcome is independent of the thread count.
inline void parallel_for(size_t n, int threads, const std::function<void(size_t)>& fn) {
  unsigned hw = std::thread::hardware_concurrency();
  if (hw == 0) hw = 1;
  size_t want = threads > 0 ? static_cast<size_t>(threads) : static_cast<size_t>(hw);
  if (want > n) want = n;
  if (want <= 1) {
    for (size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<size_t> next{0};
  std::vector<std::thread> pool;
  pool.reserve(want);
  for (size_t t = 0; t < want; ++t) {
    pool.emplace_back([&] {
      for (;;) {
        size_t i = next.fetch_add(1);
        if (i >= n) return;
        fn(i);
      }
    });
  }
  for (auto& th : pool) th.join();
}

// Shortest decimal form that round-trips a double (17 significant digits).
inline std::string fmt_g17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

struct OlsFit {
  double slope = 0.0;
  double intercept = 0.0;
  double residual_rms = 0.0;
  long count = 0;
};

// Streaming accumulator for ordinary least squares of y against t.
class OlsAccumulator {
public:
  void add(double t, double y) {
    ++n_;
    st_ += t;
    stt_ += t * t;
    sy_ += y;
    sty_ += t * y;
    syy_ += y * y;
  }
  OlsFit solve() const {
    OlsFit fit;
    fit.count = n_;
    if (n_ < 2) return fit;
    const double n = static_cast<double>(n_);
    const double det = n * stt_ - st_ * st_;
    if (det == 0.0) return fit;
    fit.slope = (n * sty_ - st_ * sy_) / det;
    fit.intercept = (sy_ - fit.slope * st_) / n;
    double ss = syy_ - 2.0 * fit.slope * sty_ - 2.0 * fit.intercept * sy_ +
                fit.slope * fit.slope * stt_ + 2.0 * fit.slope * fit.intercept * st_ +
                n * fit.intercept * fit.intercept;
    fit.residual_rms = std::sqrt(std::max(0.0, ss) / n);
    return fit;
  }

private:
  long n_ = 0;
  double st_ = 0.0, stt_ = 0.0, sy_ = 0.0, sty_ = 0.0, syy_ = 0.0;
};

}  // namespace bandprufer
