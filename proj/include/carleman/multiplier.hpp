#pragma once

#include <functional>
#include <utility>
#include <vector>

#include "carleman/expr.hpp"

namespace carleman {

// Real signal on a uniform time grid.
struct TimeSignal {
  double t0 = 0.0;  // time of the first sample
  double ht = 0.0;  // spacing
  std::vector<double> samples;

  static TimeSignal sample(const std::function<double(double)>& f, double t_lo,
                           double t_hi, int n);

  int n() const { return int(samples.size()); }
  double time(int i) const { return t0 + ht * i; }
  double l2() const;   // sqrt(sum u_i^2 ht)
  double mass() const; // sum u_i ht
};

enum class MultiplierMode { spectral, convolution };

struct MultiplierResult {
  TimeSignal out;
  // Set when the input carries more than 1e-8 of its energy near the window
  // edges, where the periodization of the spectral mode is unreliable.
  bool boundary_warning = false;
  // Zero-padding factor used by the transform (1 when no transform ran).
  int padding_factor = 1;
};

// Low-pass Gaussian time multiplier exp(-eps |D_t|^2 / (2 tau)): convolution
// with the heat kernel sqrt(tau / (2 pi eps)) exp(-tau s^2 / (2 eps)).
// Spectral mode: 2x centered zero-padding, raised-cosine taper on the outer
// 5% of the signal window, FFT multiply.  Convolution mode: direct kernel sum
// truncated at 12 standard deviations.
MultiplierResult apply_multiplier(const TimeSignal& u, double eps, double tau,
                                  MultiplierMode mode = MultiplierMode::spectral);

// || Q(t u) - (t + (eps/tau) d_t) Q u ||_2 / || u ||_2.  Zero for the exact
// operator; what remains measures FFT and quadrature error.
double commutation_residual(const TimeSignal& u, double eps, double tau);

// Same for the twice-iterated identity on t^2 u:
// || Q(t^2 u) - (t + (eps/tau) d_t)^2 Q u ||_2 / || u ||_2.
double iterated_commutation_residual(const TimeSignal& u, double eps, double tau);

// Raised-cosine window: 1 on [lo + taper, hi - taper], rolling to 0 at the
// interval ends, 0 outside.
struct Window {
  double lo = 0.0;
  double hi = 0.0;
  double taper = 0.0;

  double value(double t) const;
};

// ratio(lambda) = || chi1 * exp(-|D_t|^2 / lambda)(chi2 * u) ||_2 / || u ||_2
// for each lambda in the grid.  The supports of the windows must be disjoint;
// the log-ratio slope against lambda is bounded by -d^2/8 with d their
// distance.
std::vector<std::pair<double, double>> decay_ratio(
    const Window& chi1, const Window& chi2, const TimeSignal& u,
    const std::vector<double>& lambda_grid);

// Real function sampled on a uniform (t, x) grid, time-major storage.
struct SpaceTimeField {
  double t0 = 0.0, ht = 0.0;
  double x0 = 0.0, hx = 0.0;
  int nt = 0, nx = 0;
  std::vector<double> data;  // size nt * nx, index it * nx + ix

  static SpaceTimeField zeros(double t_lo, double t_hi, int nt, double x_lo,
                              double x_hi, int nx);
  double& at(int it, int ix) { return data[std::size_t(it) * nx + ix]; }
  double at(int it, int ix) const { return data[std::size_t(it) * nx + ix]; }
  double l2() const;  // sqrt(sum v^2 ht hx)
};

struct HfPoint {
  double tau = 0.0;
  double pairing = 0.0;   // <f, v exp(tau phi)> by quadrature
  double bound = 0.0;     // exp(eps B^2 / (2 tau)) ||f|| ||Q (v exp(tau phi))||
  double q_norm = 0.0;    // the ||Q . || factor alone
};

// Evaluate the pairing <f, v e^{tau phi}> and its multiplier-based upper
// bound along a grid of tau values; band is the declared spectral radius of
// f in time.
std::vector<HfPoint> hf_imaginary_axis(const SpaceTimeField& v,
                                       const SpaceTimeField& f,
                                       const ScalarField& phi,
                                       const std::vector<double>& tau_grid,
                                       double eps, double band);

}  // namespace carleman
