#include "trapnoise/quadrature.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <queue>
#include <vector>

namespace trapnoise::quadrature {

namespace {

// Kronrod 21-point abscissae (non-negative half) and weights, with the
// embedded 10-point Gauss weights on the odd-indexed nodes.
constexpr std::array<double, 11> kXgk = {
    0.995657163025808080735527280689003, 0.973906528517171720077964012084452,
    0.930157491355708226001207180059508, 0.865063366688984510732096688423493,
    0.780817726586416897063717578345042, 0.679409568299024406234327365114874,
    0.562757134668604683339000099272694, 0.433395394129247190799265943165784,
    0.294392862701460198131126603103866, 0.148874338981631210884826001129720,
    0.000000000000000000000000000000000};
constexpr std::array<double, 11> kWgk = {
    0.011694638867371874278064396062192, 0.032558162307964727478818972459390,
    0.054755896574351996031381300244580, 0.075039674810919952767043140916190,
    0.093125454583697605535065465083366, 0.109387158802297641899210590325805,
    0.123491976262065851077600525478580, 0.134709217311473325928054001771707,
    0.142775938577060080797094273138717, 0.147739104901338491374841515972068,
    0.149445554002916905664936468389821};
constexpr std::array<double, 5> kWg = {
    0.066671344308688137593568809893332, 0.149451349150580593145776339657697,
    0.219086362515982043995534934228163, 0.269266719309996355091226921569469,
    0.295524224714752870173892994651338};

struct Segment {
  double a, b, value, error;
  bool operator<(const Segment& o) const { return error < o.error; }
};

Segment gk21(const std::function<double(double)>& f, double a, double b) {
  const double centre = 0.5 * (a + b);
  const double half = 0.5 * (b - a);
  const double fc = f(centre);
  double kronrod = fc * kWgk[10];
  double gauss = 0.0;
  for (int j = 0; j < 10; ++j) {
    const double dx = half * kXgk[j];
    const double sum = f(centre - dx) + f(centre + dx);
    kronrod += kWgk[j] * sum;
    if (j % 2 == 1) gauss += kWg[j / 2] * sum;
  }
  const double value = kronrod * half;
  const double error = std::abs((kronrod - gauss) * half);
  return {a, b, value, error};
}

}  // namespace

Result integrate(const std::function<double(double)>& f, double a, double b,
                 const Options& options, std::span<const double> breakpoints) {
  if (b < a) {
    Result r = integrate(f, b, a, options, breakpoints);
    r.value = -r.value;
    return r;
  }
  std::vector<double> edges{a};
  for (double p : breakpoints) {
    if (p > a && p < b) edges.push_back(p);
  }
  edges.push_back(b);
  std::sort(edges.begin(), edges.end());

  std::priority_queue<Segment> queue;
  Result result;
  double total = 0.0;
  double total_error = 0.0;
  for (std::size_t i = 0; i + 1 < edges.size(); ++i) {
    if (edges[i + 1] == edges[i]) continue;
    const Segment s = gk21(f, edges[i], edges[i + 1]);
    result.evaluations += 21;
    total += s.value;
    total_error += s.error;
    queue.push(s);
  }

  const auto done = [&] {
    return total_error <= std::max(options.abs_tol, options.rel_tol * std::abs(total));
  };
  while (!done() && static_cast<int>(queue.size()) < options.max_subintervals) {
    const Segment worst = queue.top();
    queue.pop();
    const double mid = 0.5 * (worst.a + worst.b);
    if (!(mid > worst.a && mid < worst.b)) {
      queue.push(worst);
      break;  // interval can no longer be split in double precision
    }
    const Segment left = gk21(f, worst.a, mid);
    const Segment right = gk21(f, mid, worst.b);
    result.evaluations += 42;
    total += left.value + right.value - worst.value;
    total_error += left.error + right.error - worst.error;
    queue.push(left);
    queue.push(right);
  }

  // Re-sum from the leaves so the running update does not accumulate rounding.
  total = 0.0;
  total_error = 0.0;
  while (!queue.empty()) {
    total += queue.top().value;
    total_error += queue.top().error;
    queue.pop();
  }
  result.value = total;
  result.error_estimate = total_error;
  result.converged =
      total_error <= std::max(options.abs_tol, options.rel_tol * std::abs(total));
  return result;
}

}  // namespace trapnoise::quadrature
