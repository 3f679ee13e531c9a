// Solves the manufactured example with alpha = -0.5 on a graded mesh using
// the library API directly and prints the error and U(T) for the first modes.

#include <cstdio>

#include "fracdg/fracdg.hpp"

int main() {
  using namespace fracdg;
  const auto problem = paper_example(-0.5);
  const auto mesh = graded_mesh(problem.final_time, 36, 1.6, 2, false);
  const FractionalOrder order(problem.alpha);

  const auto modes = spectral_backend(problem.max_wavenumber() + 2, problem.diffusivity);
  const auto probs = mode_problems(problem, modes);
  const MemoryTable table(mesh, order);
  const auto sol = solve(probs, table);

  std::printf("intervals %d, dofs per mode %d, modes %d\n", mesh.intervals(), dof_count(mesh), sol.modes());
  std::printf("max error on fine grid: %.4e\n", error_measure(sol, problem, modes, ErrorOptions{}));
  for (int m = 0; m < sol.modes(); ++m)
    std::printf("mode %d: U(T) = % .8f\n", m + 1, sol.left_trace(m, mesh.intervals()));

  const auto report = stability_report(sol, probs, table);
  std::printf("energy inequality violations: %d\n", report.violations);
}
