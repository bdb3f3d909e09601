#include "gelab/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "gelab/error.hpp"

namespace gelab {

namespace {

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
constexpr double kInf = std::numeric_limits<double>::infinity();

void check_profile_h(const Profile& p) {
  if (p.x.size() < 2 || p.x.size() != p.y.size())
    throw DomainError("composed kernel: h profile needs >= 2 points of matching length");
  for (std::size_t i = 0; i < p.x.size(); ++i) {
    if (!(p.x[i] > 0.0) || !(p.y[i] > 0.0) || !std::isfinite(p.x[i]) || !std::isfinite(p.y[i]))
      throw DomainError("composed kernel: h profile entries must be positive and finite");
    if (i > 0 && !(p.x[i] > p.x[i - 1]))
      throw DomainError("composed kernel: h profile abscissae must increase");
  }
}

void check_profile_g(const Profile& p) {
  if (p.x.size() < 2 || p.x.size() != p.y.size())
    throw DomainError("composed kernel: g profile needs >= 2 points of matching length");
  if (p.x.front() != 0.0 || p.x.back() != 0.5)
    throw DomainError("composed kernel: g profile must span [0, 1/2]");
  for (std::size_t i = 0; i < p.x.size(); ++i) {
    if (!(p.y[i] >= 0.0) || !std::isfinite(p.y[i]))
      throw DomainError("composed kernel: g profile values must be nonnegative");
    if (i > 0 && !(p.x[i] > p.x[i - 1]))
      throw DomainError("composed kernel: g profile abscissae must increase");
  }
}

double log_slope(const Profile& p, std::size_t seg) {
  return (std::log(p.y[seg + 1]) - std::log(p.y[seg])) /
         (std::log(p.x[seg + 1]) - std::log(p.x[seg]));
}

double interp_loglog(const Profile& p, double s) {
  const auto& xs = p.x;
  std::size_t seg;
  if (s <= xs.front()) {
    seg = 0;
  } else if (s >= xs.back()) {
    seg = xs.size() - 2;
  } else {
    seg = static_cast<std::size_t>(std::upper_bound(xs.begin(), xs.end(), s) - xs.begin()) - 1;
  }
  const double slope = log_slope(p, seg);
  return p.y[seg] * std::pow(s / xs[seg], slope);
}

double interp_linear(const Profile& p, double x) {
  const auto& xs = p.x;
  if (x <= xs.front()) return p.y.front();
  if (x >= xs.back()) return p.y.back();
  const std::size_t seg =
      static_cast<std::size_t>(std::upper_bound(xs.begin(), xs.end(), x) - xs.begin()) - 1;
  const double t = (x - xs[seg]) / (xs[seg + 1] - xs[seg]);
  return p.y[seg] + t * (p.y[seg + 1] - p.y[seg]);
}

std::string fmt_num(double x) {
  std::ostringstream os;
  os << x;
  return os.str();
}

}  // namespace

void KernelParams::validate() const {
  if (!(gamma > 1.0)) throw DomainError("kernel params: gamma must exceed 1");
  if (!(H > 1.0)) throw DomainError("kernel params: H must exceed 1");
  if (!(H0 > 0.0) || !(H0 <= H1)) throw DomainError("kernel params: need 0 < H0 <= H1");
  if (!(G0 > 0.0) || !(G0 <= G1)) throw DomainError("kernel params: need 0 < G0 <= G1");
  if (!(k >= 1.0)) throw DomainError("kernel params: k must be at least 1");
}

Kernel::Kernel(Form f) : form_(std::move(f)) {
  std::visit(overloaded{
                 [&](const form::DifferentialSedimentation&) { degree_ = 4.0 / 3.0; },
                 [&](const form::Sum& s) {
                   if (!(s.gamma >= 0.0) || !std::isfinite(s.gamma))
                     throw DomainError("sum kernel: gamma must be finite and >= 0");
                   degree_ = s.gamma;
                 },
                 [&](const form::PowerDifference& p) {
                   if (!(p.d1 >= 0.0) || !(p.d2 >= 0.0))
                     throw DomainError("power_difference kernel: d1, d2 must be >= 0");
                   degree_ = p.d1 + p.d2;
                 },
                 [&](const form::AbsDifference& p) {
                   if (!(p.d1 >= 0.0) || !(p.d2 >= 0.0))
                     throw DomainError("abs_difference kernel: d1, d2 must be >= 0");
                   degree_ = p.d1 + p.d2;
                 },
                 [&](const form::Constant& c) {
                   if (!(c.value >= 0.0) || !std::isfinite(c.value))
                     throw DomainError("constant kernel: value must be finite and >= 0");
                   degree_ = 0.0;
                 },
                 [&](const form::Composed& c) {
                   check_profile_h(c.h);
                   check_profile_g(c.g);
                   const double first = log_slope(c.h, 0);
                   homogeneous_ = true;
                   for (std::size_t s = 1; s + 1 < c.h.x.size(); ++s) {
                     const double sl = log_slope(c.h, s);
                     if (std::abs(sl - first) > 1e-9 * std::max(1.0, std::abs(first))) {
                       homogeneous_ = false;
                     }
                   }
                   degree_ = homogeneous_ ? first : kNaN;
                 },
             },
             form_);
}

Kernel Kernel::differential_sedimentation() { return Kernel(form::DifferentialSedimentation{}); }
Kernel Kernel::sum(double gamma) { return Kernel(form::Sum{gamma}); }
Kernel Kernel::power_difference(double d1, double d2) { return Kernel(form::PowerDifference{d1, d2}); }
Kernel Kernel::abs_difference(double d1, double d2) { return Kernel(form::AbsDifference{d1, d2}); }
Kernel Kernel::constant(double value) { return Kernel(form::Constant{value}); }
Kernel Kernel::composed(Profile h, Profile g) {
  return Kernel(form::Composed{std::move(h), std::move(g)});
}

std::string Kernel::name() const {
  return std::visit(
      overloaded{
          [](const form::DifferentialSedimentation&) -> std::string {
            return "differential_sedimentation";
          },
          [](const form::Sum& s) { return "sum(gamma=" + fmt_num(s.gamma) + ")"; },
          [](const form::PowerDifference& p) {
            return "power_difference(d1=" + fmt_num(p.d1) + ",d2=" + fmt_num(p.d2) + ")";
          },
          [](const form::AbsDifference& p) {
            return "abs_difference(d1=" + fmt_num(p.d1) + ",d2=" + fmt_num(p.d2) + ")";
          },
          [](const form::Constant& c) { return "constant(" + fmt_num(c.value) + ")"; },
          [](const form::Composed&) -> std::string { return "composed"; },
      },
      form_);
}

bool Kernel::diagonal_vanishing() const noexcept {
  return std::visit(overloaded{
                        [](const form::DifferentialSedimentation&) { return true; },
                        [](const form::Sum&) { return false; },
                        [](const form::PowerDifference& p) { return p.d1 > 0.0; },
                        [](const form::AbsDifference& p) { return p.d1 > 0.0; },
                        [](const form::Constant& c) { return c.value == 0.0; },
                        [](const form::Composed& c) { return c.g.y.back() == 0.0; },
                    },
                    form_);
}

double Kernel::vanishing_order() const noexcept {
  if (const auto* a = std::get_if<form::AbsDifference>(&form_)) return std::max(1.0, a->d1);
  return 1.0;
}

Kernel::Prepared Kernel::prepare(double v) const noexcept {
  return std::visit(overloaded{
                        [&](const form::DifferentialSedimentation&) {
                          return Prepared{v, std::cbrt(v), 0.0};
                        },
                        [&](const form::Sum& s) { return Prepared{v, std::pow(v, s.gamma), 0.0}; },
                        [&](const form::PowerDifference& p) {
                          return Prepared{v, std::pow(v, p.d1), std::pow(v, p.d2)};
                        },
                        [&](const form::AbsDifference& p) {
                          return Prepared{v, 0.0, std::pow(v, p.d2)};
                        },
                        [&](const form::Constant&) { return Prepared{v, 0.0, 0.0}; },
                        [&](const form::Composed&) { return Prepared{v, 0.0, 0.0}; },
                    },
                    form_);
}

double Kernel::pair(const Prepared& p, const Prepared& q) const noexcept {
  const bool swap = q.v < p.v;
  const Prepared& lo = swap ? q : p;
  const Prepared& hi = swap ? p : q;
  return std::visit(overloaded{
                        [&](const form::DifferentialSedimentation&) {
                          const double s = lo.a + hi.a;
                          return (hi.a * hi.a - lo.a * lo.a) * (s * s);
                        },
                        [&](const form::Sum&) { return lo.a + hi.a; },
                        [&](const form::PowerDifference&) { return (hi.a - lo.a) * (lo.b + hi.b); },
                        [&](const form::AbsDifference& f) {
                          return std::pow(hi.v - lo.v, f.d1) * (lo.b + hi.b);
                        },
                        [&](const form::Constant& c) { return c.value; },
                        [&](const form::Composed& c) {
                          const double s = lo.v + hi.v;
                          if (!(s > 0.0)) return 0.0;
                          return interp_loglog(c.h, s) * interp_linear(c.g, lo.v / s);
                        },
                    },
                    form_);
}

double Kernel::h(double v, double vp) const noexcept {
  if (const auto* c = std::get_if<form::Composed>(&form_)) return interp_loglog(c->h, v + vp);
  return std::pow(v + vp, degree_);
}

double evaluate(const Kernel& kernel, double v, double vp) {
  if (!(v > 0.0) || !(vp > 0.0) || !std::isfinite(v) || !std::isfinite(vp))
    throw DomainError("kernel evaluate: volumes must be positive and finite (got " + fmt_num(v) +
                      ", " + fmt_num(vp) + ")");
  return kernel(v, vp);
}

double g_profile(const Kernel& kernel, double x) {
  if (!(x >= 0.0 && x <= 1.0)) throw DomainError("g_profile: x must lie in [0,1]");
  if (!kernel.homogeneous())
    throw UnsupportedFormError("g_profile: kernel is not scale-homogeneous");
  // Both x and 1-x map onto the same upper-half representative, and 1-u is
  // exact for u in [1/2, 1], so g(x) and g(1-x) see identical arguments.
  const double u = x > 0.5 ? x : 1.0 - x;
  const double small = 1.0 - u;
  return kernel(small, u);
}

double homogeneity_degree(const Kernel& kernel) {
  static constexpr double probes[][2] = {{1.0, 2.0}, {1.0, 3.0}, {0.3, 2.2}, {2.0, 7.0}, {0.01, 5.0}};
  const double lambda = 8.0;
  for (const auto& pr : probes) {
    const double k0 = kernel(pr[0], pr[1]);
    const double k1 = kernel(lambda * pr[0], lambda * pr[1]);
    if (k0 > 0.0 && k1 > 0.0 && std::isfinite(k0) && std::isfinite(k1))
      return std::log(k1 / k0) / std::log(lambda);
  }
  throw IndeterminateError("homogeneity_degree: kernel vanishes on every probe pair");
}

KernelParams derived_params(const Kernel& kernel, int x_samples) {
  KernelParams p;
  p.gamma = kernel.homogeneous() ? kernel.degree() : homogeneity_degree(kernel);
  p.H = 2.0;
  p.H0 = 0.5;
  p.H1 = std::pow(2.0, p.gamma);
  p.k = kernel.vanishing_order();
  double ratio_min = kInf;
  double g_max = 0.0;
  for (int i = 0; i < x_samples; ++i) {
    const double x = static_cast<double>(i) / (x_samples - 1);
    const double g = g_profile(kernel, x);
    g_max = std::max(g_max, g);
    const double d = std::abs(x - 0.5);
    if (d < 1e-6) continue;
    ratio_min = std::min(ratio_min, g / std::pow(d, p.k));
  }
  p.G0 = 0.5 * ratio_min;
  p.G1 = g_max;
  return p;
}

void CertificationSampling::validate() const {
  if (n_v < 2 || n_x < 2) throw ConfigError("certification sampling: empty sampling grid");
  if (!(v_min > 0.0) || !(v_max > v_min))
    throw ConfigError("certification sampling: need 0 < v_min < v_max");
  for (double R : R_checks) {
    if (!(R > 1.0) || !(v_min < 1.0 / R) || !(R < v_max))
      throw ConfigError("certification sampling: R_check " + fmt_num(R) +
                        " not covered by [v_min, v_max]");
  }
  if (lambdas.empty()) throw ConfigError("certification sampling: no scaling factors");
}

bool CertificateReport::all_pass() const {
  return std::all_of(bounds.begin(), bounds.end(),
                     [](const BoundCheck& b) { return b.status == BoundStatus::Pass; });
}

const BoundCheck* CertificateReport::find(const std::string& name) const {
  for (const auto& b : bounds)
    if (b.name == name) return &b;
  return nullptr;
}

std::string to_string(BoundStatus s) { return s == BoundStatus::Pass ? "PASS" : "FAIL"; }

namespace {

BoundCheck make_check(std::string name, double margin, double wv, double wvp, bool pass) {
  return BoundCheck{std::move(name), pass ? BoundStatus::Pass : BoundStatus::Fail, margin, wv, wvp};
}

}  // namespace

CertificateReport certify_assumption(const Kernel& kernel, const KernelParams& declared,
                                     const CertificationSampling& sampling) {
  sampling.validate();
  CertificateReport rep;
  rep.kernel_name = kernel.name();

  std::vector<double> vs(static_cast<std::size_t>(sampling.n_v));
  const double lr = std::log(sampling.v_max / sampling.v_min);
  for (int i = 0; i < sampling.n_v; ++i)
    vs[static_cast<std::size_t>(i)] = sampling.v_min * std::exp(lr * i / (sampling.n_v - 1));
  vs.back() = sampling.v_max;

  try {
    rep.measured_gamma = homogeneity_degree(kernel);
  } catch (const IndeterminateError&) {
    rep.measured_gamma = kNaN;
  }
  const double gam = declared.gamma;
  auto power_sum = [gam](double v, double vp) { return std::pow(v, gam) + std::pow(vp, gam); };

  // Symmetry.
  {
    double worst = 0.0, wv = kNaN, wvp = kNaN;
    for (double v : vs)
      for (double vp : vs) {
        const double d = std::abs(kernel(v, vp) - kernel(vp, v));
        if (d > worst) worst = d, wv = v, wvp = vp;
      }
    rep.bounds.push_back(make_check("symmetry", -worst, wv, wvp, worst == 0.0));
  }

  // Scale homogeneity at the declared degree.
  {
    double worst = 0.0, wv = kNaN, wvp = kNaN;
    for (double v : vs)
      for (double vp : vs) {
        const double k0 = kernel(v, vp);
        for (double lam : sampling.lambdas) {
          const double k1 = kernel(lam * v, lam * vp);
          const double expect = std::pow(lam, gam) * k0;
          const double scale = std::max(std::abs(expect), std::abs(k1));
          if (scale == 0.0) continue;
          const double err = std::abs(k1 - expect) / scale;
          if (err > worst || std::isnan(err)) worst = err, wv = v, wvp = vp;
        }
      }
    rep.bounds.push_back(make_check("homogeneity", sampling.homogeneity_rtol - worst, wv, wvp,
                                    worst <= sampling.homogeneity_rtol));
  }

  rep.bounds.push_back(make_check("gamma_gt_one", gam - 1.0, kNaN, kNaN, gam > 1.0));
  rep.bounds.push_back(make_check("H_gt_one", declared.H - 1.0, kNaN, kNaN, declared.H > 1.0));

  // h >= H0 (v^g + v'^g) beyond the crossover, and h <= H1 (v^g + v'^g) everywhere.
  {
    double lo_ratio = kInf, lo_v = kNaN, lo_vp = kNaN;
    double hi_ratio = 0.0, hi_v = kNaN, hi_vp = kNaN;
    for (double v : vs)
      for (double vp : vs) {
        const double r = kernel.h(v, vp) / power_sum(v, vp);
        if (v + vp > declared.H && r < lo_ratio) lo_ratio = r, lo_v = v, lo_vp = vp;
        if (r > hi_ratio) hi_ratio = r, hi_v = v, hi_vp = vp;
      }
    const double lower_margin = std::isinf(lo_ratio) ? kInf : lo_ratio - declared.H0;
    rep.bounds.push_back(make_check("h_lower", lower_margin, lo_v, lo_vp, lower_margin >= 0.0));
    const double upper_margin = declared.H1 - hi_ratio;
    rep.bounds.push_back(make_check("h_upper", upper_margin, hi_v, hi_vp, upper_margin >= 0.0));
  }

  // min h over [1/R, R]^2.
  for (double R : sampling.R_checks) {
    double cmin = kInf, wv = kNaN, wvp = kNaN;
    for (double v : vs) {
      if (v < 1.0 / R || v > R) continue;
      for (double vp : vs) {
        if (vp < 1.0 / R || vp > R) continue;
        const double hv = kernel.h(v, vp);
        if (hv < cmin) cmin = hv, wv = v, wvp = vp;
      }
    }
    rep.c_R.emplace_back(R, cmin);
    rep.bounds.push_back(
        make_check("h_positivity_R=" + fmt_num(R), cmin, wv, wvp, cmin > 0.0 && std::isfinite(cmin)));
  }

  // K(v,v) = 0, probing v = 1 first.
  {
    std::vector<double> probes{1.0};
    probes.insert(probes.end(), vs.begin(), vs.end());
    bool ok = true;
    double margin = 0.0, wv = kNaN;
    for (double v : probes) {
      const double kd = kernel(v, v);
      if (kd != 0.0) {
        ok = false, margin = -kd, wv = v;
        break;
      }
    }
    rep.bounds.push_back(make_check("diagonal_vanishing", margin, wv, wv, ok));
  }

  // g bounds on the x samples.
  try {
    double asym = 0.0, asym_x = kNaN;
    double ratio_min = kInf, ratio_x = kNaN;
    double g_max = 0.0, gmax_x = kNaN;
    for (int i = 0; i < sampling.n_x; ++i) {
      const double x = static_cast<double>(i) / (sampling.n_x - 1);
      const double g = g_profile(kernel, x);
      const double a = std::abs(g - g_profile(kernel, 1.0 - x));
      if (a > asym) asym = a, asym_x = x;
      if (g > g_max) g_max = g, gmax_x = x;
      const double d = std::abs(x - 0.5);
      if (d < sampling.g0_exclusion) continue;
      const double r = g / std::pow(d, declared.k);
      if (r < ratio_min) ratio_min = r, ratio_x = x;
    }
    rep.measured_g_ratio_min = ratio_min;
    rep.measured_g_max = g_max;
    rep.bounds.push_back(make_check("g_symmetry", -asym, asym_x, 1.0 - asym_x, asym == 0.0));
    rep.bounds.push_back(make_check("g_lower", ratio_min - declared.G0, ratio_x, 1.0 - ratio_x,
                                    ratio_min >= declared.G0 && declared.G0 > 0.0));
    rep.bounds.push_back(make_check("g_upper", declared.G1 - g_max, gmax_x, 1.0 - gmax_x,
                                    g_max <= declared.G1));
  } catch (const UnsupportedFormError&) {
    for (const char* n : {"g_symmetry", "g_lower", "g_upper"})
      rep.bounds.push_back(make_check(n, kNaN, kNaN, kNaN, false));
  }
  return rep;
}

}  // namespace gelab
