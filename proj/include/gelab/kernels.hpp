#pragma once

#include <string>
#include <variant>
#include <vector>

namespace gelab {

// Structural constants of a kernel K(v,v') = h(v,v') g(v/(v+v')):
//   H0 (v^g + v'^g) <= h          for v + v' > H
//   h >= C_R > 0                  on [1/R, R]^2
//   h <= H1 (v^g + v'^g)
//   G0 |x - 1/2|^k <= g(x) <= G1
struct KernelParams {
  double gamma = 4.0 / 3.0;
  double H = 2.0;
  double H0 = 0.5;
  double H1 = 2.5198420997897464;  // 2^(4/3)
  double G0 = 0.0;
  double G1 = 2.0;
  double k = 1.0;

  // Throws DomainError unless gamma > 1, H > 1, 0 < H0 <= H1, 0 < G0 <= G1, k >= 1.
  void validate() const;
};

// Piecewise table used by the Composed form. Abscissae strictly increasing.
struct Profile {
  std::vector<double> x;
  std::vector<double> y;
};

namespace form {

// |v^(2/3) - v'^(2/3)| (v^(1/3) + v'^(1/3))^2
struct DifferentialSedimentation {};

// v^gamma + v'^gamma
struct Sum {
  double gamma;
};

// |v^d1 - v'^d1| (v^d2 + v'^d2)
struct PowerDifference {
  double d1;
  double d2;
};

// |v - v'|^d1 (v^d2 + v'^d2)
struct AbsDifference {
  double d1;
  double d2;
};

// K == value. Control kernel for the analytic oracles.
struct Constant {
  double value;
};

// h(v + v') g(v / (v + v')) from tables. h is interpolated log-log over the
// total size with power-law extrapolation; g is tabulated on [0, 1/2] and
// mirrored onto (1/2, 1].
struct Composed {
  Profile h;
  Profile g;
};

}  // namespace form

class Kernel {
 public:
  using Form = std::variant<form::DifferentialSedimentation, form::Sum, form::PowerDifference,
                            form::AbsDifference, form::Constant, form::Composed>;

  // Per-volume powers cached so that pair evaluation avoids repeated pow().
  struct Prepared {
    double v = 0.0;
    double a = 0.0;
    double b = 0.0;
  };

  explicit Kernel(Form f);

  static Kernel differential_sedimentation();
  static Kernel sum(double gamma);
  static Kernel power_difference(double d1, double d2);
  static Kernel abs_difference(double d1, double d2);
  static Kernel constant(double value = 1.0);
  static Kernel composed(Profile h, Profile g);

  const Form& form() const noexcept { return form_; }
  std::string name() const;

  // True when K(v,v) = 0 for every v > 0.
  bool diagonal_vanishing() const noexcept;

  // Scaling exponent for homogeneous forms; for Composed it is the log-slope
  // of the h table, valid only when homogeneous() holds.
  double degree() const noexcept { return degree_; }
  bool homogeneous() const noexcept { return homogeneous_; }

  // Canonical diagonal-vanishing order used for derived constants.
  double vanishing_order() const noexcept;

  Prepared prepare(double v) const noexcept;

  // Unchecked evaluation. Accepts zero arguments (used by the g profile).
  // Arguments are ordered internally so the result is bit-symmetric.
  double pair(const Prepared& p, const Prepared& q) const noexcept;
  double operator()(double v, double vp) const noexcept { return pair(prepare(v), prepare(vp)); }

  // The h factor of the canonical split: (v + v')^degree, or the tabulated
  // profile for Composed kernels.
  double h(double v, double vp) const noexcept;

 private:
  Form form_;
  double degree_ = 0.0;
  bool homogeneous_ = true;
};

// Checked evaluation: v, v' must be positive and finite.
double evaluate(const Kernel& kernel, double v, double vp);

// g(x) = K(x s, (1-x) s) / s^gamma, with g(x) == g(1-x) bit for bit.
// Throws UnsupportedFormError for non-homogeneous Composed kernels.
double g_profile(const Kernel& kernel, double x);

// Numerical estimate of the scaling degree from log K(lv,lv') / log l.
double homogeneity_degree(const Kernel& kernel);

// Candidate constants for a kernel under the h = (v+v')^gamma convention.
// G0 and G1 come from a dense scan of g, so they hold on the scanned set.
KernelParams derived_params(const Kernel& kernel, int x_samples = 10000);

struct CertificationSampling {
  double v_min = 1e-3;
  double v_max = 1e3;
  int n_v = 200;
  int n_x = 10000;
  std::vector<double> R_checks{2.0, 10.0};
  std::vector<double> lambdas{0.125, 0.5, 2.0, 8.0};
  double homogeneity_rtol = 1e-9;
  // Samples with |x - 1/2| below this are excluded from the G0 ratio.
  double g0_exclusion = 1e-6;

  void validate() const;
};

enum class BoundStatus { Pass, Fail };

struct BoundCheck {
  std::string name;
  BoundStatus status = BoundStatus::Pass;
  // Slack of the bound on the sampled set; negative when violated.
  double margin = 0.0;
  double witness_v = 0.0;
  double witness_vprime = 0.0;
};

struct CertificateReport {
  std::string kernel_name;
  std::vector<BoundCheck> bounds;
  double measured_gamma = 0.0;
  double measured_g_ratio_min = 0.0;  // inf of g(x)/|x-1/2|^k
  double measured_g_max = 0.0;
  std::vector<std::pair<double, double>> c_R;  // (R, min h on [1/R,R]^2)

  bool all_pass() const;
  const BoundCheck* find(const std::string& name) const;
};

CertificateReport certify_assumption(const Kernel& kernel, const KernelParams& declared,
                                     const CertificationSampling& sampling);

std::string to_string(BoundStatus s);

}  // namespace gelab
