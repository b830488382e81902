#include "oscillab/quadrature.hpp"

#include <algorithm>
#include <boost/math/quadrature/gauss.hpp>
#include <stdexcept>

namespace oscillab {

namespace {

using Gauss16 = boost::math::quadrature::gauss<double, 16>;

void append_panel(QuadRule& r, double a, double b) {
  const auto& abscissa = Gauss16::abscissa();
  const auto& weights = Gauss16::weights();
  const double mid = 0.5 * (a + b), half = 0.5 * (b - a);
  // boost stores the non-negative half of a symmetric rule; 16 is even so
  // there is no centre node.
  for (std::size_t i = 0; i < abscissa.size(); ++i) {
    r.x.push_back(mid - half * abscissa[i]);
    r.w.push_back(half * weights[i]);
    r.x.push_back(mid + half * abscissa[i]);
    r.w.push_back(half * weights[i]);
  }
}

}  // namespace

QuadRule gauss_rule(double a, double b, const QuadSpec& spec) {
  if (spec.panels < 1) throw std::invalid_argument("QuadSpec: panels must be >= 1");
  QuadRule r;
  r.x.reserve(spec.nodes());
  r.w.reserve(spec.nodes());
  const double h = (b - a) / spec.panels;
  for (int p = 0; p < spec.panels; ++p) append_panel(r, a + p * h, p + 1 == spec.panels ? b : a + (p + 1) * h);
  return r;
}

QuadRule gauss_rule_split(double a, double b, std::span<const double> breaks, const QuadSpec& spec) {
  std::vector<double> cuts{a};
  for (double c : breaks)
    if (c > a && c < b) cuts.push_back(c);
  cuts.push_back(b);
  std::sort(cuts.begin(), cuts.end());
  QuadRule r;
  for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
    if (cuts[i + 1] <= cuts[i]) continue;
    auto piece = gauss_rule(cuts[i], cuts[i + 1], spec);
    r.x.insert(r.x.end(), piece.x.begin(), piece.x.end());
    r.w.insert(r.w.end(), piece.w.begin(), piece.w.end());
  }
  return r;
}

double integrate(const std::function<double(double)>& f, double a, double b, const QuadSpec& spec) {
  const auto r = gauss_rule(a, b, spec);
  double s = 0.0;
  for (std::size_t i = 0; i < r.x.size(); ++i) s += r.w[i] * f(r.x[i]);
  return s;
}

}  // namespace oscillab
