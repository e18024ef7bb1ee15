#include "carleman/multiplier.hpp"

#include <fftw3.h>

#include <cmath>
#include <complex>
#include <mutex>

#include "carleman/util.hpp"

namespace carleman {

namespace {

// FFTW plan creation is not thread-safe; execution of a local plan is, but
// the transforms here are small, so one lock around each whole transform
// keeps things simple.
std::mutex fftw_mutex;

// Apply one complex symbol sigma(xi) per requested channel to the signal,
// through a centered 2x zero-padded FFT with edge taper.  Returns one signal
// per channel, trimmed back to the input window.
std::vector<std::vector<double>> spectral_channels(
    const std::vector<double>& u, double ht,
    const std::vector<std::function<std::complex<double>(double)>>& channels) {
  const int N = int(u.size());
  const int M = 2 * N;
  const int off = N / 2;

  std::lock_guard<std::mutex> lock(fftw_mutex);
  double* in = fftw_alloc_real(M);
  fftw_complex* spec = fftw_alloc_complex(M / 2 + 1);
  fftw_complex* work = fftw_alloc_complex(M / 2 + 1);
  double* back = fftw_alloc_real(M);
  fftw_plan fwd = fftw_plan_dft_r2c_1d(M, in, spec, FFTW_ESTIMATE);
  fftw_plan inv = fftw_plan_dft_c2r_1d(M, work, back, FFTW_ESTIMATE);

  for (int i = 0; i < M; ++i) in[i] = 0.0;
  const int taper = std::max(1, N / 20);
  for (int i = 0; i < N; ++i) {
    double w = 1.0;
    if (i < taper) w = 0.5 * (1.0 - std::cos(M_PI * double(i) / taper));
    if (N - 1 - i < taper)
      w = std::min(w, 0.5 * (1.0 - std::cos(M_PI * double(N - 1 - i) / taper)));
    in[off + i] = w * u[i];
  }
  fftw_execute(fwd);

  std::vector<std::vector<double>> out;
  out.reserve(channels.size());
  for (const auto& sigma : channels) {
    for (int k = 0; k <= M / 2; ++k) {
      const double xi = 2.0 * M_PI * double(k) / (double(M) * ht);
      const std::complex<double> s = sigma(xi);
      const std::complex<double> v(spec[k][0], spec[k][1]);
      const std::complex<double> r = s * v;
      work[k][0] = r.real();
      work[k][1] = r.imag();
    }
    fftw_execute(inv);
    std::vector<double> ch(N);
    for (int i = 0; i < N; ++i) ch[i] = back[off + i] / double(M);
    out.push_back(std::move(ch));
  }

  fftw_destroy_plan(fwd);
  fftw_destroy_plan(inv);
  fftw_free(in);
  fftw_free(spec);
  fftw_free(work);
  fftw_free(back);
  return out;
}

bool edge_heavy(const std::vector<double>& u) {
  const int N = int(u.size());
  const int edge = std::max(1, N / 10);
  double total = 0.0, outer = 0.0;
  for (int i = 0; i < N; ++i) {
    const double e = u[i] * u[i];
    total += e;
    if (i < edge || N - 1 - i < edge) outer += e;
  }
  return total > 0.0 && outer > 1e-8 * total;
}

void check_params(const TimeSignal& u, double eps, double tau) {
  if (u.n() < 8) throw Error(ErrorCode::dimension, "multiplier: need >= 8 samples");
  if (!(u.ht > 0.0)) throw Error(ErrorCode::config, "multiplier: spacing must be positive");
  if (!(eps > 0.0) || !(tau > 0.0))
    throw Error(ErrorCode::config, "multiplier: eps and tau must be positive");
}

}  // namespace

TimeSignal TimeSignal::sample(const std::function<double(double)>& f, double t_lo,
                              double t_hi, int n) {
  if (n < 2 || !(t_hi > t_lo))
    throw Error(ErrorCode::config, "TimeSignal: bad sampling window");
  TimeSignal s;
  s.t0 = t_lo;
  s.ht = (t_hi - t_lo) / double(n - 1);
  s.samples.resize(n);
  for (int i = 0; i < n; ++i) s.samples[i] = f(s.time(i));
  return s;
}

double TimeSignal::l2() const {
  double acc = 0.0;
  for (double v : samples) acc += v * v;
  return std::sqrt(acc * ht);
}

double TimeSignal::mass() const {
  double acc = 0.0;
  for (double v : samples) acc += v;
  return acc * ht;
}

MultiplierResult apply_multiplier(const TimeSignal& u, double eps, double tau,
                                  MultiplierMode mode) {
  check_params(u, eps, tau);
  MultiplierResult res;
  res.out = u;
  res.boundary_warning = edge_heavy(u.samples);

  if (mode == MultiplierMode::spectral) {
    res.padding_factor = 2;
    auto ch = spectral_channels(u.samples, u.ht, {[&](double xi) {
      return std::complex<double>(std::exp(-eps * xi * xi / (2.0 * tau)), 0.0);
    }});
    res.out.samples = std::move(ch[0]);
    return res;
  }

  // Direct truncated kernel sum.
  const int N = u.n();
  const double sigma = std::sqrt(eps / tau);
  const int radius = int(std::ceil(12.0 * sigma / u.ht));
  const double norm = std::sqrt(tau / (2.0 * M_PI * eps));
  for (int i = 0; i < N; ++i) {
    double acc = 0.0;
    const int j0 = std::max(0, i - radius), j1 = std::min(N - 1, i + radius);
    for (int j = j0; j <= j1; ++j) {
      const double s = (i - j) * u.ht;
      acc += std::exp(-tau * s * s / (2.0 * eps)) * u.samples[j];
    }
    res.out.samples[i] = norm * acc * u.ht;
  }
  return res;
}

double commutation_residual(const TimeSignal& u, double eps, double tau) {
  check_params(u, eps, tau);
  TimeSignal tu = u;
  for (int i = 0; i < u.n(); ++i) tu.samples[i] *= u.time(i);

  auto gauss = [&](double xi) {
    return std::complex<double>(std::exp(-eps * xi * xi / (2.0 * tau)), 0.0);
  };
  auto qtu = spectral_channels(tu.samples, u.ht, {gauss});
  auto qu = spectral_channels(
      u.samples, u.ht,
      {gauss, [&](double xi) { return gauss(xi) * std::complex<double>(0.0, xi); }});

  const double c = eps / tau;
  double acc = 0.0;
  for (int i = 0; i < u.n(); ++i) {
    const double r = qtu[0][i] - u.time(i) * qu[0][i] - c * qu[1][i];
    acc += r * r;
  }
  const double nu = u.l2();
  return nu > 0.0 ? std::sqrt(acc * u.ht) / nu : 0.0;
}

double iterated_commutation_residual(const TimeSignal& u, double eps, double tau) {
  check_params(u, eps, tau);
  TimeSignal ttu = u;
  for (int i = 0; i < u.n(); ++i) ttu.samples[i] *= u.time(i) * u.time(i);

  auto gauss = [&](double xi) {
    return std::complex<double>(std::exp(-eps * xi * xi / (2.0 * tau)), 0.0);
  };
  auto qttu = spectral_channels(ttu.samples, u.ht, {gauss});
  auto qu = spectral_channels(
      u.samples, u.ht,
      {gauss, [&](double xi) { return gauss(xi) * std::complex<double>(0.0, xi); },
       [&](double xi) { return gauss(xi) * std::complex<double>(-xi * xi, 0.0); }});

  // (t + c d_t)^2 w = t^2 w + 2 c t w' + c w + c^2 w''.
  const double c = eps / tau;
  double acc = 0.0;
  for (int i = 0; i < u.n(); ++i) {
    const double t = u.time(i);
    const double rhs = t * t * qu[0][i] + 2.0 * c * t * qu[1][i] + c * qu[0][i] +
                       c * c * qu[2][i];
    const double r = qttu[0][i] - rhs;
    acc += r * r;
  }
  const double nu = u.l2();
  return nu > 0.0 ? std::sqrt(acc * u.ht) / nu : 0.0;
}

double Window::value(double t) const {
  if (t <= lo || t >= hi) return 0.0;
  if (taper <= 0.0) return 1.0;
  if (t < lo + taper) return 0.5 * (1.0 - std::cos(M_PI * (t - lo) / taper));
  if (t > hi - taper) return 0.5 * (1.0 - std::cos(M_PI * (hi - t) / taper));
  return 1.0;
}

std::vector<std::pair<double, double>> decay_ratio(
    const Window& chi1, const Window& chi2, const TimeSignal& u,
    const std::vector<double>& lambda_grid) {
  const double gap = std::max(chi2.lo - chi1.hi, chi1.lo - chi2.hi);
  if (!(gap > 0.0))
    throw Error(ErrorCode::domain, "decay_ratio: window supports overlap");
  const double nu = u.l2();
  if (!(nu > 0.0)) {
    std::vector<std::pair<double, double>> zero;
    for (double l : lambda_grid) zero.emplace_back(l, 0.0);
    return zero;
  }

  TimeSignal cut = u;
  for (int i = 0; i < u.n(); ++i) cut.samples[i] *= chi2.value(u.time(i));

  std::vector<std::pair<double, double>> out;
  for (double lambda : lambda_grid) {
    if (!(lambda > 0.0))
      throw Error(ErrorCode::config, "decay_ratio: lambda must be positive");
    auto ch = spectral_channels(cut.samples, u.ht, {[&](double xi) {
      return std::complex<double>(std::exp(-xi * xi / lambda), 0.0);
    }});
    double acc = 0.0;
    for (int i = 0; i < u.n(); ++i) {
      const double v = chi1.value(u.time(i)) * ch[0][i];
      acc += v * v;
    }
    out.emplace_back(lambda, std::sqrt(acc * u.ht) / nu);
  }
  return out;
}

SpaceTimeField SpaceTimeField::zeros(double t_lo, double t_hi, int nt, double x_lo,
                                     double x_hi, int nx) {
  if (nt < 8 || nx < 2)
    throw Error(ErrorCode::dimension, "SpaceTimeField: grid too small");
  SpaceTimeField f;
  f.t0 = t_lo;
  f.ht = (t_hi - t_lo) / double(nt - 1);
  f.x0 = x_lo;
  f.hx = (x_hi - x_lo) / double(nx - 1);
  f.nt = nt;
  f.nx = nx;
  f.data.assign(std::size_t(nt) * nx, 0.0);
  return f;
}

double SpaceTimeField::l2() const {
  double acc = 0.0;
  for (double v : data) acc += v * v;
  return std::sqrt(acc * ht * hx);
}

std::vector<HfPoint> hf_imaginary_axis(const SpaceTimeField& v,
                                       const SpaceTimeField& f,
                                       const ScalarField& phi,
                                       const std::vector<double>& tau_grid,
                                       double eps, double band) {
  if (v.nt != f.nt || v.nx != f.nx || std::abs(v.ht - f.ht) > 1e-12 ||
      std::abs(v.hx - f.hx) > 1e-12 || std::abs(v.t0 - f.t0) > 1e-12 ||
      std::abs(v.x0 - f.x0) > 1e-12)
    throw Error(ErrorCode::dimension, "hf_imaginary_axis: grids do not match");
  if (!(eps > 0.0) || !(band > 0.0))
    throw Error(ErrorCode::config, "hf_imaginary_axis: eps and band must be positive");

  // Cache the weight exponent over the grid.
  std::vector<double> phi_vals(v.data.size());
  Eigen::VectorXd x(2);
  for (int it = 0; it < v.nt; ++it)
    for (int ix = 0; ix < v.nx; ++ix) {
      x[0] = v.t0 + v.ht * it;
      x[1] = v.x0 + v.hx * ix;
      phi_vals[std::size_t(it) * v.nx + ix] = eval_value(phi, x);
    }
  const double f_norm = f.l2();

  std::vector<HfPoint> out;
  out.reserve(tau_grid.size());
  for (double tau : tau_grid) {
    if (!(tau > 0.0))
      throw Error(ErrorCode::config, "hf_imaginary_axis: tau must be positive");
    HfPoint pt;
    pt.tau = tau;

    SpaceTimeField w = v;
    for (std::size_t i = 0; i < w.data.size(); ++i)
      w.data[i] *= std::exp(tau * phi_vals[i]);
    double pairing = 0.0;
    for (std::size_t i = 0; i < w.data.size(); ++i) pairing += f.data[i] * w.data[i];
    pt.pairing = pairing * v.ht * v.hx;

    // || Q^phi v || over the grid: smooth each x-slice in time.
    double qsq = 0.0;
    std::vector<double> slice(v.nt);
    for (int ix = 0; ix < v.nx; ++ix) {
      for (int it = 0; it < v.nt; ++it) slice[it] = w.at(it, ix);
      auto ch = spectral_channels(slice, v.ht, {[&](double xi) {
        return std::complex<double>(std::exp(-eps * xi * xi / (2.0 * tau)), 0.0);
      }});
      for (int it = 0; it < v.nt; ++it) qsq += ch[0][it] * ch[0][it];
    }
    pt.q_norm = std::sqrt(qsq * v.ht * v.hx);
    pt.bound = std::exp(eps * band * band / (2.0 * tau)) * f_norm * pt.q_norm;
    out.push_back(pt);
  }
  return out;
}

}  // namespace carleman
