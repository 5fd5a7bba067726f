// Draws one coherent system, prints its rate quantities, and races
// randomized Kaczmarz against the two-subspace method on equal row touches.

#include <cstdio>

#include "kaczmarz/bounds.hpp"
#include "kaczmarz/experiments.hpp"
#include "kaczmarz/solvers.hpp"

int main() {
  using namespace kaczmarz;

  const GeneratedSystem gen = gen_uniform_system(300, 30, 0.8, 42);
  const RateFactors f = rate_factors(gen.system, /*with_omega=*/false);
  std::printf("delta = %.4f  Delta = %.4f  R = %.1f  D = %.5f  eta = %.8f\n", f.delta, f.Delta, f.R, f.D, f.eta);

  const std::int64_t touches = 1000;
  for (Method method : {Method::rk, Method::two_subspace}) {
    SolveOptions options;
    options.method = method;
    options.stop.max_iterations = touches / row_touches_per_iteration(method);
    options.seed = 7;
    options.x_true = gen.x_true;
    const SolveTrace trace = solve(gen.system, options);
    std::printf("%-13s error after %lld row touches: %.3e\n", std::string(to_string(method)).c_str(),
                static_cast<long long>(trace.records.back().row_touches), trace.records.back().error);
  }
}
