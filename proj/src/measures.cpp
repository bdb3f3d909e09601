#include "gelab/measures.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <istream>
#include <limits>
#include <map>
#include <ostream>
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

constexpr double kInf = std::numeric_limits<double>::infinity();

// Number of a spread bin that falls inside the interval [a, b] (endpoints
// carry no number for spread bins).
double spread_overlap(const SizeDistribution& d, std::size_t i, double a, double b) {
  const double lo = std::max(a, d.grid.lower(i));
  const double hi = std::min(b, d.grid.upper(i));
  if (!(hi > lo)) return 0.0;
  return d.counts[i] * (hi - lo);
}

}  // namespace

std::string format_double(double x) {
  if (x == 0.0) x = 0.0;  // no negative zero in output
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, res.ptr);
}

Grid Grid::from_edges(std::vector<double> edges) {
  if (edges.size() < 2) throw DomainError("grid: need at least two edges");
  if (!(edges.front() > 0.0)) throw DomainError("grid: lowest edge must be positive");
  for (std::size_t i = 1; i < edges.size(); ++i)
    if (!(edges[i] > edges[i - 1]) || !std::isfinite(edges[i]))
      throw DomainError("grid: edges must be finite and strictly increasing");
  Grid g;
  g.pivots.resize(edges.size() - 1);
  for (std::size_t i = 0; i + 1 < edges.size(); ++i) g.pivots[i] = std::sqrt(edges[i] * edges[i + 1]);
  g.point_mass.assign(g.pivots.size(), 0);
  g.edges = std::move(edges);
  return g;
}

std::size_t Grid::locate(double v) const {
  if (!(v >= edges.front()) || v > edges.back()) return size();
  if (v == edges.back()) return size() - 1;
  return static_cast<std::size_t>(std::upper_bound(edges.begin(), edges.end(), v) - edges.begin()) - 1;
}

SizeDistribution::SizeDistribution(Grid g) : grid(std::move(g)), counts(grid.size(), 0.0) {}

std::vector<double> SizeDistribution::numbers() const {
  std::vector<double> n(size());
  for (std::size_t i = 0; i < size(); ++i) n[i] = number(i);
  return n;
}

std::string describe(const InitialSpec& spec) {
  return std::visit(overloaded{
                        [](const init::Dirac& d) {
                          std::string s = "dirac{";
                          for (std::size_t i = 0; i < d.atoms.size(); ++i) {
                            if (i) s += ";";
                            s += format_double(d.atoms[i].volume) + ":" +
                                 format_double(d.atoms[i].weight);
                          }
                          return s + "}";
                        },
                        [](const init::Exponential& e) {
                          return "exponential(mean=" + format_double(e.mean) + ")";
                        },
                        [](const init::Uniform& u) {
                          return "uniform(" + format_double(u.lower) + "," + format_double(u.upper) + ")";
                        },
                    },
                    spec);
}

SizeDistribution from_atoms(Grid grid, std::span<const Atom> atoms) {
  std::map<std::size_t, std::vector<Atom>> by_bin;
  for (const Atom& a : atoms) {
    if (!(a.weight >= 0.0) || !std::isfinite(a.weight))
      throw DomainError("atoms: weights must be finite and nonnegative");
    if (a.weight == 0.0) continue;
    const std::size_t i = grid.locate(a.volume);
    if (i == grid.size())
      throw DomainError("atoms: volume " + format_double(a.volume) + " lies outside the grid");
    by_bin[i].push_back(a);
  }
  for (const auto& [i, list] : by_bin) {
    if (list.size() == 1) {
      grid.pivots[i] = list.front().volume;
      grid.point_mass[i] = 1;
    }
  }
  SizeDistribution d(std::move(grid));
  for (const auto& [i, list] : by_bin) {
    double w = 0.0;
    for (const Atom& a : list) w += a.weight;
    d.set_number(i, w);
  }
  return d;
}

SizeDistribution from_cdf(Grid grid, const std::function<double(double)>& cumulative) {
  SizeDistribution d(std::move(grid));
  double prev = cumulative(d.grid.edges.front());
  for (std::size_t i = 0; i < d.size(); ++i) {
    const double next = cumulative(d.grid.upper(i));
    d.set_number(i, std::max(0.0, next - prev));
    prev = next;
  }
  return d;
}

SizeDistribution discretize(const InitialSpec& spec, Grid grid) {
  return std::visit(
      overloaded{
          [&](const init::Dirac& dirac) { return from_atoms(std::move(grid), dirac.atoms); },
          [&](const init::Exponential& e) {
            if (!(e.mean > 0.0)) throw DomainError("exponential init: mean must be positive");
            // Negated survival function: differences stay accurate in the tail.
            return from_cdf(std::move(grid), [m = e.mean](double v) { return -std::exp(-v / m); });
          },
          [&](const init::Uniform& u) {
            if (!(u.upper > u.lower) || !(u.lower >= 0.0))
              throw DomainError("uniform init: need 0 <= lower < upper");
            return from_cdf(std::move(grid), [u](double v) {
              return std::clamp((v - u.lower) / (u.upper - u.lower), 0.0, 1.0);
            });
          },
      },
      spec);
}

double moment(const SizeDistribution& dist, double m) {
  if (!(m >= 0.0) || !std::isfinite(m)) throw DomainError("moment: order must be finite and >= 0");
  double s = 0.0;
  for (std::size_t i = 0; i < dist.size(); ++i) s += std::pow(dist.grid.pivots[i], m) * dist.number(i);
  return s;
}

double truncated_moment(const SizeDistribution& dist, double R, double m) {
  if (!(R > 0.0)) throw DomainError("truncated_moment: cutoff must be positive");
  if (!(m >= 0.0) || !std::isfinite(m)) throw DomainError("truncated_moment: bad order");
  double s = 0.0;
  for (std::size_t i = 0; i < dist.size(); ++i) {
    const double p = dist.grid.pivots[i];
    if (p >= R) s += std::pow(p - R, m) * dist.number(i);
  }
  return s;
}

double tail_number(const SizeDistribution& dist, double threshold) {
  double s = 0.0;
  for (std::size_t i = 0; i < dist.size(); ++i)
    if (dist.grid.pivots[i] >= threshold) s += dist.number(i);
  return s;
}

double cutoff_weight(double R, double v) {
  if (v <= R) return 1.0;
  if (v > R + 1.0) return 0.0;
  return (R + 1.0) - v;
}

CutoffPair cutoff_pair(const SizeDistribution& dist, double R) {
  if (!(R > 0.0)) throw DomainError("cutoff_pair: cutoff must be positive");
  double total = 0.0;
  double J = 0.0;
  for (std::size_t i = 0; i < dist.size(); ++i) {
    const double p = dist.grid.pivots[i];
    const double mass = p * dist.number(i);
    total += mass;
    J += cutoff_weight(R, p) * mass;
  }
  return CutoffPair{total - J, J};
}

double ball_mass(const SizeDistribution& dist, double center, double radius) {
  if (!(radius > 0.0)) throw DomainError("ball_mass: radius must be positive");
  const double lo = std::max(0.0, center - radius);
  const double hi = center + radius;
  double s = 0.0;
  for (std::size_t i = 0; i < dist.size(); ++i) {
    if (dist.counts[i] == 0.0) continue;
    if (dist.grid.point_mass[i]) {
      const double p = dist.grid.pivots[i];
      if (p > lo && p < hi) s += dist.number(i);
    } else {
      s += spread_overlap(dist, i, lo, hi);
    }
  }
  return s;
}

double cell_mass(const SizeDistribution& dist, double a, double b) {
  double s = 0.0;
  for (std::size_t i = 0; i < dist.size(); ++i) {
    if (dist.counts[i] == 0.0) continue;
    if (dist.grid.point_mass[i]) {
      const double p = dist.grid.pivots[i];
      if (p > a && p <= b) s += dist.number(i);
    } else {
      s += spread_overlap(dist, i, a, b);
    }
  }
  return s;
}

namespace {

struct CellHit {
  long long lo = std::numeric_limits<long long>::max();
  long long hi = -1;
  std::size_t lo_bin = 0;
  std::size_t hi_bin = 0;
};

// Occupied-cell range at cell width w over (0, horizon].
CellHit occupied_cells(const SizeDistribution& d, double horizon, double w) {
  CellHit hit;
  for (std::size_t i = 0; i < d.size(); ++i) {
    if (!(d.counts[i] > 0.0)) continue;
    long long jlo, jhi;
    if (d.grid.point_mass[i]) {
      const double p = d.grid.pivots[i];
      if (!(p > 0.0) || p > horizon) continue;
      jlo = jhi = std::max(0LL, static_cast<long long>(std::ceil(p / w)) - 1);
    } else {
      const double a = d.grid.lower(i);
      const double b = std::min(d.grid.upper(i), horizon);
      if (!(b > a)) continue;
      jlo = static_cast<long long>(std::floor(a / w));
      jhi = std::max(jlo, static_cast<long long>(std::ceil(b / w)) - 1);
    }
    if (jlo < hit.lo) hit.lo = jlo, hit.lo_bin = i;
    if (jhi > hit.hi) hit.hi = jhi, hit.hi_bin = i;
  }
  return hit;
}

// A point of the support of bin i inside cell j.
double support_point(const SizeDistribution& d, std::size_t i, long long j, double w, double horizon) {
  if (d.grid.point_mass[i]) return d.grid.pivots[i];
  const double a = std::max(d.grid.lower(i), static_cast<double>(j) * w);
  const double b = std::min({d.grid.upper(i), static_cast<double>(j + 1) * w, horizon});
  return 0.5 * (a + b);
}

double mean_location(const SizeDistribution& d, double horizon) {
  double n = 0.0, m = 0.0;
  for (std::size_t i = 0; i < d.size(); ++i) {
    const double p = d.grid.pivots[i];
    if (p > horizon || !(d.counts[i] > 0.0)) continue;
    n += d.number(i);
    m += p * d.number(i);
  }
  return m / n;
}

}  // namespace

PairSearchResult find_separated_mass_pair(const SizeDistribution& dist, double L, int n_max,
                                          int max_extensions) {
  if (!(L > 0.0) || n_max < 1 || max_extensions < 0)
    throw DomainError("find_separated_mass_pair: need L > 0, n_max >= 1");
  if (!(cell_mass(dist, 0.0, kInf) > 0.0))
    throw EmptyMeasureError("find_separated_mass_pair: distribution carries no mass");

  double horizon = L;
  for (int ext = 0;; ++ext) {
    const double inside = cell_mass(dist, 0.0, horizon);
    const double beyond = cell_mass(dist, horizon, kInf);
    if (inside > 0.0) {
      CellHit hit;
      for (int n = 1; n <= n_max; ++n) {
        const double w = std::ldexp(horizon, -n);
        hit = occupied_cells(dist, horizon, w);
        if (hit.hi - hit.lo >= 2) {
          const double x1 = support_point(dist, hit.lo_bin, hit.lo, w, horizon);
          const double x2 = support_point(dist, hit.hi_bin, hit.hi, w, horizon);
          // Half the cell width one level deeper; at least one empty cell of
          // width w separates x1 and x2, so the balls keep a gap >= eta0.
          const double eta0 = std::min(0.25 * w, 0.5);
          return SeparatedPair{x1, x2, eta0, n, horizon};
        }
      }
      if (!(beyond > 0.0)) {
        if (hit.lo == hit.hi) return SingleAtom{mean_location(dist, horizon)};
        // Two adjacent cells down to the finest depth: no verdict.
        return Indeterminate{horizon, n_max};
      }
    }
    if (ext >= max_extensions) return Indeterminate{horizon, n_max};
    horizon *= 2.0;
  }
}

RootInequality moment_root_inequality_check(const SizeDistribution& dist, double R, double m) {
  if (!(R > 0.0) || !(m >= 2.0)) throw DomainError("moment_root_inequality_check: need R > 0, m >= 2");
  const double lhs = std::pow(truncated_moment(dist, R, m), 1.0 / m);
  const double rhs = R * std::pow(tail_number(dist, 2.0 * R), 1.0 / m);
  return RootInequality{lhs, rhs, lhs >= rhs - 1e-12 * rhs};
}

void write_csv(std::ostream& os, const SizeDistribution& dist) {
  os << "# gel_mass=" << format_double(dist.gel_mass) << '\n';
  bool any_point = false;
  for (auto f : dist.grid.point_mass) any_point = any_point || f;
  if (any_point) {
    os << "# point_mass_bins=";
    bool first = true;
    for (std::size_t i = 0; i < dist.size(); ++i)
      if (dist.grid.point_mass[i]) {
        if (!first) os << ';';
        os << i;
        first = false;
      }
    os << '\n';
  }
  os << "bin_lower,bin_upper,pivot,count\n";
  for (std::size_t i = 0; i < dist.size(); ++i) {
    os << format_double(dist.grid.lower(i)) << ',' << format_double(dist.grid.upper(i)) << ','
       << format_double(dist.grid.pivots[i]) << ',' << format_double(dist.counts[i]) << '\n';
  }
}

SizeDistribution read_csv(std::istream& is) {
  std::string line;
  double gel = 0.0;
  std::vector<std::size_t> point_bins;
  std::vector<double> lower, upper, pivots, counts;
  bool header_seen = false;
  auto parse = [](const std::string& s) {
    double v = 0.0;
    auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (res.ec != std::errc() || res.ptr != s.data() + s.size())
      throw DomainError("distribution csv: malformed number '" + s + "'");
    return v;
  };
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    if (line.rfind("# gel_mass=", 0) == 0) {
      gel = parse(line.substr(11));
      continue;
    }
    if (line.rfind("# point_mass_bins=", 0) == 0) {
      std::stringstream ss(line.substr(18));
      std::string tok;
      while (std::getline(ss, tok, ';')) point_bins.push_back(std::stoul(tok));
      continue;
    }
    if (line[0] == '#') continue;
    if (!header_seen) {
      if (line != "bin_lower,bin_upper,pivot,count")
        throw DomainError("distribution csv: unexpected header '" + line + "'");
      header_seen = true;
      continue;
    }
    std::stringstream ss(line);
    std::string a, b, c, d;
    if (!std::getline(ss, a, ',') || !std::getline(ss, b, ',') || !std::getline(ss, c, ',') ||
        !std::getline(ss, d))
      throw DomainError("distribution csv: expected four columns");
    lower.push_back(parse(a));
    upper.push_back(parse(b));
    pivots.push_back(parse(c));
    counts.push_back(parse(d));
  }
  if (lower.empty()) throw DomainError("distribution csv: no bins");
  std::vector<double> edges(lower);
  edges.push_back(upper.back());
  for (std::size_t i = 0; i + 1 < lower.size(); ++i)
    if (upper[i] != lower[i + 1]) throw DomainError("distribution csv: bins are not contiguous");
  SizeDistribution d(Grid::from_edges(std::move(edges)));
  d.grid.pivots = std::move(pivots);
  for (std::size_t i : point_bins) {
    if (i >= d.size()) throw DomainError("distribution csv: point-mass index out of range");
    d.grid.point_mass[i] = 1;
  }
  d.counts = std::move(counts);
  d.gel_mass = gel;
  return d;
}

}  // namespace gelab
