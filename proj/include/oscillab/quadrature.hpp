#pragma once

#include <functional>
#include <span>
#include <vector>

namespace oscillab {

/// Composite Gauss-Legendre rule: `panels` equal panels of 16 nodes each.
struct QuadSpec {
  int panels = 16;
  int nodes() const { return 16 * panels; }
};

struct QuadRule {
  std::vector<double> x;
  std::vector<double> w;
};

/// Nodes and weights on [a, b].
QuadRule gauss_rule(double a, double b, const QuadSpec& spec);

/// Rule on [a, b] that places panel boundaries at every listed breakpoint
/// lying strictly inside the interval.
QuadRule gauss_rule_split(double a, double b, std::span<const double> breaks, const QuadSpec& spec);

double integrate(const std::function<double(double)>& f, double a, double b, const QuadSpec& spec);

}  // namespace oscillab
