#pragma once

#include <json.hpp>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "carleman/symbol.hpp"

namespace carleman {

enum class Verdict { pass, fail, vacuous };
const char* to_string(Verdict v);

// full: scan all (xi, tau); xit0: restrict to xi_t = 0 (wave-type symbols).
enum class CheckMode { full, xit0 };

struct Witness {
  Eigen::VectorXd xi;
  double tau = 0.0;
  double value = 0.0;      // offending / minimal quantity
  std::string condition;   // which condition it belongs to
};

struct ConditionReport {
  std::string name;  // "real" or "complex"
  Verdict verdict = Verdict::vacuous;
  std::optional<double> margin;    // min of the positivity quantity over the
                                   // delta-feasible part of the unit sphere
  std::optional<Witness> witness;  // where the min is attained
  long feasible = 0;
  long samples = 0;
  double min_violation = 0.0;  // smallest constraint violation seen (vacuity)
  std::map<std::string, double> delta_margins;  // threshold sensitivity
};

struct CheckReport {
  Verdict verdict = Verdict::vacuous;
  std::optional<double> margin;
  std::optional<Witness> witness;
  std::map<std::string, double> constants;  // C1, C2, lambda0, eps_geo, eta, ...
  std::vector<ConditionReport> conditions;
  bool delta_sensitive = false;  // verdict flips across the delta grid
  bool alinhac_witness = false;  // noncharacteristic + strict real-condition
                                 // failure: the classical instability profile
  std::vector<std::string> notes;

  nlohmann::json to_json() const;
};

struct CheckOptions {
  int lattice_points = 1 << 14;
  double delta_feas = 1e-3;
  std::vector<double> delta_grid = {1e-2, 1e-3, 1e-4};
  int polish_starts = 32;
  int polish_iters = 200;
  CheckMode mode = CheckMode::full;
  double noncharacteristic_tol = 1e-8;
};

// |p(x0, dpsi(x0))| > tol * |dpsi(x0)|^2.  If density is non-null it receives
// the normalized value |p(x0,dpsi)| / |dpsi|^2.
bool check_noncharacteristic(const PrincipalSymbol& p, const ScalarField& psi,
                             const Eigen::VectorXd& x0, double tol = 1e-8,
                             double* density = nullptr);

// Oriented-surface check at x0: on the unit sphere in (xi, tau),
//   real condition     p = 0, {p, psi} = 0      =>  {p, {p, psi}} > 0
//   complex condition  p_psi = 0, {p_psi, psi} = 0  =>  c_psi > 0  (tau >= 0)
// with |constraint| <= delta thickening.  Scans a deterministic lattice, then
// polishes the worst candidates with Nelder-Mead.
CheckReport check_surface_pseudoconvex(const PrincipalSymbol& p, const ScalarField& psi,
                                       const Eigen::VectorXd& x0,
                                       const CheckOptions& opt = {});

// Same machinery for a weight function: the {p,psi}-type constraints drop out.
CheckReport check_function_pseudoconvex(const PrincipalSymbol& p, const ScalarField& phi,
                                        const Eigen::VectorXd& x0,
                                        const CheckOptions& opt = {});

// Smallest C2 > 0 (with its C1 from a doubling schedule) such that, on the
// unit sphere in (xi, tau),
//   C1 |p_phi|^2 + (1/2) c_phi >= C2          (full mode)
//   C1 (|p_phi|^2 + xi_t^2) + (1/2) c_phi >= C2   (xit0 mode, wave symbols)
// Fails with verdict fail if the schedule is exhausted.
struct SubellipticityConstants {
  double C1 = 0.0;
  double C2 = 0.0;
  Verdict verdict = Verdict::fail;
  std::optional<Witness> witness;  // where the certified min is attained
};
SubellipticityConstants subellipticity_constants(const PrincipalSymbol& p,
                                                 const ScalarField& phi,
                                                 const Eigen::VectorXd& x0,
                                                 const CheckOptions& opt = {});

// Convexification by exponentiation: Phi = exp(lambda (psi - psi(x0))) for
// lambda in a doubling schedule; returns the first lambda whose function
// check passes, together with the residual of the bracket identity
//   c_Phi(x0, xi, tau) = lambda c_psi(x0, xi, lambda tau)
//                        + 2 lambda^2 |{p_psi, psi}(x0, xi, lambda tau)|^2
// sampled on random unit (xi, tau).
struct ConvexifyResult {
  double lambda0 = 0.0;
  ScalarField weight;
  CheckReport report;             // function check at lambda0
  double identity_residual = 0.0; // max relative residual over samples
};
ConvexifyResult convexify_analytic(const PrincipalSymbol& p, const ScalarField& psi,
                                   const Eigen::VectorXd& x0, std::uint64_t seed = 1,
                                   const CheckOptions& opt = {});

enum class GeometricVariant { shift, quadratic };

// shift:      Phi_eps = Phi - eps |x - x0|^2, largest eps in a halving
//             schedule keeping the function check green.
// quadratic:  second-order Taylor polynomial of Phi at x0 minus delta
//             |x - x0|^2, with a radius R0 from a sampled third-order
//             remainder bound and a certified ring inequality
//             phi <= -delta R^2 / 8  on  {Phi <= 0, R/2 <= |x-x0| <= R}.
struct GeometricResult {
  double eps = 0.0;        // shift size (shift) or delta (quadratic)
  ScalarField weight;
  CheckReport report;      // function check of the derived weight
  double eta = 0.0;        // quadratic: delta R0^2 / 8
  double R0 = 0.0;         // quadratic: certified radius
  double ring_slack = 0.0; // quadratic: worst phi + delta R^2/8 over the ring
};
GeometricResult convexify_geometric(const PrincipalSymbol& p, const ScalarField& phi,
                                    const Eigen::VectorXd& x0, GeometricVariant variant,
                                    const CheckOptions& opt = {});

}  // namespace carleman
