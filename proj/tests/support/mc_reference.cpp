// One-off Monte Carlo reference runs backing the frozen constants in the
// test suite. Not part of the ctest suite; see README for usage.
//
//   mc_reference selfcheck          RNG distribution check against erf
//   mc_reference bm                 Brownian-motion density sanity run
//   mc_reference cir [paths steps]  CIR transition density at 5 cells
//
// The CIR run uses Euler-Maruyama on the Ito form of the benchmark equation
// dX = lambda (xi - X) dt + gamma sqrt(X) o dB (Stratonovich), i.e.
//   dX = [lambda (xi - X) + gamma^2/4] dt + gamma sqrt(X) dB,
// lambda=1, xi=1, gamma=0.5, x0=0.75, T=1, with full truncation at zero.

#include <cinttypes>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <cstring>

#include "sim_rng.hpp"

namespace {

void self_check() {
  const std::uint64_t n = 100000000ull;
  simrng::ZigguratNormal normal(20250801ull);
  const double qs[] = {-3.0, -2.0, -1.0, -0.5, 0.0, 0.5, 1.0, 2.0, 3.0};
  const int nq = 9;
  std::uint64_t below[9] = {0};
  double s1 = 0, s2 = 0, s4 = 0;
  for (std::uint64_t i = 0; i < n; ++i) {
    const double x = normal();
    s1 += x;
    s2 += x * x;
    s4 += x * x * x * x;
    for (int k = 0; k < nq; ++k) below[k] += x < qs[k];
  }
  std::printf("n=%" PRIu64 " mean=%.6f var=%.6f kurt=%.6f\n", n, s1 / n,
              s2 / n, s4 / n);
  for (int k = 0; k < nq; ++k) {
    const double emp = (double)below[k] / (double)n;
    const double cdf = 0.5 * std::erfc(-qs[k] / std::sqrt(2.0));
    const double se = std::sqrt(cdf * (1 - cdf) / (double)n);
    std::printf("q=%5.2f  emp=%.7f  cdf=%.7f  dev/se=%+.2f\n", qs[k], emp, cdf,
                (emp - cdf) / se);
  }
}

void bm_run() {
  // dX = dB from 0, T=1; density at x is the standard normal pdf.
  const std::uint64_t paths = 4000000ull;
  const int steps = 1000;
  const double h = 1.0 / steps, sqh = std::sqrt(h);
  simrng::ZigguratNormal normal(555ull);
  const double cells[] = {-1.0, 0.0, 0.5, 1.5};
  const double width = 0.02;
  std::uint64_t hits[4] = {0};
  for (std::uint64_t p = 0; p < paths; ++p) {
    double x = 0;
    for (int s = 0; s < steps; ++s) x += sqh * normal();
    for (int k = 0; k < 4; ++k)
      hits[k] += std::fabs(x - cells[k]) < 0.5 * width;
  }
  for (int k = 0; k < 4; ++k) {
    const double frac = (double)hits[k] / (double)paths;
    const double dens = frac / width;
    const double se = std::sqrt(frac * (1 - frac) / (double)paths) / width;
    const double exact =
        std::exp(-0.5 * cells[k] * cells[k]) / std::sqrt(2 * M_PI);
    std::printf("x=%5.2f  mc=%.5f  se=%.2e  exact=%.5f  dev/se=%+.2f\n",
                cells[k], dens, se, exact, (dens - exact) / se);
  }
}

void cir_run(std::uint64_t paths, int steps) {
  const double lambda = 1.0, xi = 1.0, gamma = 0.5, x0 = 0.75, T = 1.0;
  const double h = T / steps, sqh = std::sqrt(h);
  const double cells[] = {0.8, 1.0, 1.2, 1.500024, 1.8};
  const double width = 0.02;
  std::uint64_t hits[5] = {0};
  simrng::ZigguratNormal normal(987654321ull);
  for (std::uint64_t p = 0; p < paths; ++p) {
    double x = x0;
    const double ito_shift = 0.25 * gamma * gamma;
    for (int s = 0; s < steps; ++s) {
      const double xp = x > 0 ? x : 0;
      x += (lambda * (xi - x) + ito_shift) * h +
           gamma * std::sqrt(xp) * sqh * normal();
    }
    for (int k = 0; k < 5; ++k)
      hits[k] += std::fabs(x - cells[k]) < 0.5 * width;
  }
  std::printf("paths=%" PRIu64 " steps=%d\n", paths, steps);
  for (int k = 0; k < 5; ++k) {
    const double frac = (double)hits[k] / (double)paths;
    const double dens = frac / width;
    const double se = std::sqrt(frac * (1 - frac) / (double)paths) / width;
    std::printf("xT=%.6f  mc_density=%.6f  se=%.6f\n", cells[k], dens, se);
  }
}

}  // namespace

int main(int argc, char** argv) {
  if (argc < 2) {
    std::fprintf(stderr, "usage: mc_reference selfcheck|bm|cir [paths steps]\n");
    return 1;
  }
  if (!std::strcmp(argv[1], "selfcheck")) {
    self_check();
  } else if (!std::strcmp(argv[1], "bm")) {
    bm_run();
  } else if (!std::strcmp(argv[1], "cir")) {
    std::uint64_t paths = 10000000ull;
    int steps = 10000;
    if (argc >= 4) {
      paths = std::strtoull(argv[2], nullptr, 10);
      steps = std::atoi(argv[3]);
    }
    cir_run(paths, steps);
  } else {
    std::fprintf(stderr, "unknown mode %s\n", argv[1]);
    return 1;
  }
  return 0;
}
