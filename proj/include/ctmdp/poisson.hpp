#ifndef CTMDP_POISSON_HPP
#define CTMDP_POISSON_HPP

#include <cmath>
#include <cstddef>
#include <vector>

#include "ctmdp/rational.hpp"

namespace ctmdp {

// Truncated Poisson probabilities p_{lt}(0..n_max) with a certified upper
// bound on the omitted tail mass. Weights are computed by the mode-centered
// ratio recursion p(n+1)/p(n) = lt/(n+1), normalized over a support wide
// enough that the missing mass is far below the declared rounding slack.
struct PoissonWeights {
  double lambda_t = 0;
  std::size_t n_max = 0;
  std::vector<double> weights;
  double tail_bound = 0;
  // Rounding slack covering the floating-point error of the recursion and
  // normalization; consumers fold it into interval endpoints.
  double slack = 0;
};

inline PoissonWeights poisson_weights(double lambda_t, double epsilon) {
  if (epsilon <= 0) throw DomainError("poisson weights require epsilon > 0");
  if (lambda_t < 0) throw DomainError("poisson weights require lambda*t >= 0");

  PoissonWeights pw;
  pw.lambda_t = lambda_t;
  if (lambda_t == 0) {
    pw.weights = {1.0};
    pw.n_max = 0;
    pw.tail_bound = 0;
    pw.slack = 0;
    return pw;
  }

  const std::size_t mode = static_cast<std::size_t>(lambda_t);
  // Unnormalized values relative to the mode, over [first, last].
  std::size_t first = mode;
  std::vector<double> down;  // q at mode-1, mode-2, ...
  double q = 1.0;
  while (first > 0) {
    q *= static_cast<double>(first) / lambda_t;
    if (q < 1e-30) break;
    down.push_back(q);
    --first;
  }
  std::vector<double> up;  // q at mode+1, mode+2, ...
  q = 1.0;
  std::size_t k = mode;
  while (true) {
    q *= lambda_t / static_cast<double>(k + 1);
    ++k;
    if (q < 1e-30 && static_cast<double>(k) > lambda_t) break;
    up.push_back(q);
  }

  std::vector<double> support(down.size() + 1 + up.size());
  for (std::size_t i = 0; i < down.size(); ++i)
    support[down.size() - 1 - i] = down[i];
  support[down.size()] = 1.0;
  for (std::size_t i = 0; i < up.size(); ++i) support[down.size() + 1 + i] = up[i];
  first = mode - down.size();

  double total = 0;
  for (double v : support) total += v;

  pw.slack = 3e-13;

  // Minimal n_max with tail below epsilon (the slack counts against it).
  double tail = 0;  // mass strictly above the candidate n_max, descending scan
  std::size_t cut = first + support.size() - 1;
  while (cut > first) {
    const double next_tail = tail + support[cut - first] / total;
    if (next_tail + pw.slack >= epsilon) break;
    tail = next_tail;
    --cut;
  }
  pw.n_max = cut;
  pw.tail_bound = tail + pw.slack;
  pw.weights.assign(pw.n_max + 1, 0.0);
  for (std::size_t n = first; n <= pw.n_max; ++n)
    pw.weights[n] = support[n - first] / total;
  return pw;
}

// Upper bound on Pr[Poisson(lt) >= k], outward by the declared slack.
inline double poisson_upper_tail(const PoissonWeights& pw, std::size_t k) {
  if (k == 0) return 1.0;
  double below = 0;
  for (std::size_t i = 0; i < k && i <= pw.n_max; ++i) below += pw.weights[i];
  double value = 1.0 - below + pw.slack;
  if (value < 0) value = 0;
  if (value > 1) value = 1;
  return value;
}

// Nonincreasing tail weights g(i) = Pr[Poisson >= i] for i = 0..n_max+1,
// built as complements of cumulative weights. The lower variant omits the
// truncated tail, the upper variant charges it in full.
inline std::vector<double> poisson_tail_weights(const PoissonWeights& pw,
                                                bool upper) {
  std::vector<double> g(pw.n_max + 2, 0.0);
  g[pw.n_max + 1] = upper ? pw.tail_bound : 0.0;
  for (std::size_t i = pw.n_max + 1; i-- > 0;) {
    g[i] = g[i + 1] + pw.weights[i];
    if (g[i] > 1) g[i] = 1;
    if (g[i] < g[i + 1]) g[i] = g[i + 1];  // enforce monotonicity
  }
  return g;
}

}  // namespace ctmdp

#endif  // CTMDP_POISSON_HPP
