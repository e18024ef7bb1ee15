#include "carleman/util.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <thread>

namespace carleman {

double Rng::normal() {
  if (have_spare_) {
    have_spare_ = false;
    return spare_;
  }
  double u1 = 0.0;
  do {
    u1 = uniform();
  } while (u1 <= 0.0);
  const double u2 = uniform();
  const double r = std::sqrt(-2.0 * std::log(u1));
  const double a = 2.0 * M_PI * u2;
  spare_ = r * std::sin(a);
  have_spare_ = true;
  return r * std::cos(a);
}

Eigen::VectorXd Rng::normal_vector(int n) {
  Eigen::VectorXd v(n);
  for (int i = 0; i < n; ++i) v[i] = normal();
  return v;
}

Eigen::VectorXd Rng::unit_vector(int n) {
  Eigen::VectorXd v = normal_vector(n);
  double nrm = v.norm();
  while (nrm < 1e-12) {
    v = normal_vector(n);
    nrm = v.norm();
  }
  return v / nrm;
}

namespace {
std::atomic<int> g_max_threads{1};
constexpr std::size_t kChunks = 64;
}  // namespace

void set_max_threads(int n) { g_max_threads.store(std::max(1, n)); }
int max_threads() { return g_max_threads.load(); }

void parallel_chunks(std::size_t n, const std::function<void(std::size_t, std::size_t)>& body) {
  if (n == 0) return;
  const std::size_t chunks = std::min<std::size_t>(kChunks, n);
  const std::size_t per = (n + chunks - 1) / chunks;
  const int workers = std::min<int>(max_threads(), int(chunks));
  if (workers <= 1) {
    for (std::size_t c = 0; c < chunks; ++c) {
      const std::size_t b = c * per;
      const std::size_t e = std::min(n, b + per);
      if (b < e) body(b, e);
    }
    return;
  }
  std::atomic<std::size_t> next{0};
  auto run = [&] {
    for (;;) {
      const std::size_t c = next.fetch_add(1);
      if (c >= chunks) return;
      const std::size_t b = c * per;
      const std::size_t e = std::min(n, b + per);
      if (b < e) body(b, e);
    }
  };
  std::vector<std::thread> pool;
  pool.reserve(workers - 1);
  for (int i = 1; i < workers; ++i) pool.emplace_back(run);
  run();
  for (auto& t : pool) t.join();
}

double inverse_normal_cdf(double p) {
  // Peter Acklam's rational approximation with one Halley refinement step.
  if (!(p > 0.0 && p < 1.0)) throw Error(ErrorCode::domain, "inverse_normal_cdf: p outside (0,1)");
  static const double a[] = {-3.969683028665376e+01, 2.209460984245205e+02,
                             -2.759285104469687e+02, 1.383577518672690e+02,
                             -3.066479806614716e+01, 2.506628277459239e+00};
  static const double b[] = {-5.447609879822406e+01, 1.615858368580409e+02,
                             -1.556989798598866e+02, 6.680131188771972e+01,
                             -1.328068155288572e+01};
  static const double c[] = {-7.784894002430293e-03, -3.223964580411365e-01,
                             -2.400758277161838e+00, -2.549732539343734e+00,
                             4.374664141464968e+00,  2.938163982698783e+00};
  static const double d[] = {7.784695709041462e-03, 3.224671290700398e-01,
                             2.445134137142996e+00, 3.754408661907416e+00};
  const double plow = 0.02425;
  double x;
  if (p < plow) {
    const double q = std::sqrt(-2.0 * std::log(p));
    x = (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
        ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
  } else if (p <= 1.0 - plow) {
    const double q = p - 0.5;
    const double r = q * q;
    x = (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
        (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
  } else {
    const double q = std::sqrt(-2.0 * std::log(1.0 - p));
    x = -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
        ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
  }
  const double e = 0.5 * std::erfc(-x / std::sqrt(2.0)) - p;
  const double u = e * std::sqrt(2.0 * M_PI) * std::exp(0.5 * x * x);
  return x - u / (1.0 + 0.5 * x * u);
}

std::vector<Eigen::VectorXd> sphere_lattice(int m, int count, bool half) {
  if (m < 1) throw Error(ErrorCode::dimension, "sphere_lattice: dimension must be >= 1");
  if (m == 1) {
    // The unit sphere in R^1 is {-1, +1}.
    std::vector<Eigen::VectorXd> pts;
    Eigen::VectorXd p(1);
    p[0] = 1.0;
    pts.push_back(p);
    if (!half) {
      p[0] = -1.0;
      pts.push_back(p);
    }
    return pts;
  }
  static const double primes[] = {2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37};
  const int np = int(sizeof(primes) / sizeof(primes[0]));
  if (m > np) throw Error(ErrorCode::dimension, "sphere_lattice: dimension too large");
  std::vector<double> alpha(m);
  for (int j = 0; j < m; ++j) {
    double s = std::sqrt(primes[j]);
    alpha[j] = s - std::floor(s);
  }
  std::vector<Eigen::VectorXd> pts;
  pts.reserve(count);
  Eigen::VectorXd v(m);
  for (int i = 0; i < count; ++i) {
    for (int j = 0; j < m; ++j) {
      double u = (i + 0.5) * alpha[j];
      u -= std::floor(u);
      // Keep away from the quantile's poles.
      u = std::min(std::max(u, 1e-12), 1.0 - 1e-12);
      v[j] = inverse_normal_cdf(u);
    }
    double nrm = v.norm();
    if (nrm < 1e-12) continue;
    Eigen::VectorXd p = v / nrm;
    if (half && p[m - 1] < 0.0) p = -p;
    pts.push_back(p);
  }
  return pts;
}

LineFit fit_line(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size() || x.size() < 2)
    throw Error(ErrorCode::dimension, "fit_line: need two samples with matching lengths");
  const double n = double(x.size());
  double sx = 0, sy = 0, sxx = 0, sxy = 0, syy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sx += x[i];
    sy += y[i];
    sxx += x[i] * x[i];
    sxy += x[i] * y[i];
    syy += y[i] * y[i];
  }
  const double vx = sxx - sx * sx / n;
  const double vy = syy - sy * sy / n;
  const double cxy = sxy - sx * sy / n;
  if (vx <= 0.0) throw Error(ErrorCode::domain, "fit_line: x samples are all equal");
  LineFit f;
  f.slope = cxy / vx;
  f.intercept = (sy - f.slope * sx) / n;
  f.r2 = (vy > 0.0) ? (cxy * cxy) / (vx * vy) : 1.0;
  return f;
}

std::string format_exact(double v) {
  char buf[40];
  for (int prec = 15; prec <= 17; ++prec) {
    std::snprintf(buf, sizeof(buf), "%.*g", prec, v);
    double back = 0.0;
    auto [p, ec] = std::from_chars(buf, buf + std::strlen(buf), back);
    (void)p;
    if (ec == std::errc() && back == v) return buf;
  }
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

}  // namespace carleman
