#pragma once

#include "nll/dataset.hpp"

#include <array>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace nll {

struct ValueGrad {
  double value = 0.0;
  Vec grad;
};

using Evaluator = std::function<ValueGrad(const Vec&)>;

/// sin(||x||^2).
ValueGrad f4_eval_grad(const Vec& x);
/// prod_i 1 / (1 + x_i^2).
ValueGrad f5_eval_grad(const Vec& x);
/// SEIR basic reproduction number of
/// theta = (beta1, beta2, beta3, rho1, gamma1, gamma2, omega, psi).
ValueGrad r0_eval_grad(const Vec& theta);

// Inviscid Burgers with a spatial source,
//
//   w_t + (w^2 / 2)_x = mu3 exp(mu2 x),  w(a, t) = mu1,  w(x, 0) = 1,
//
// discretized by forward Euler in time and left upwinding in space.
struct BurgersGrid {
  double a = 0.0;
  double b = 100.0;
  double dx = 0.4;
  double dt = 0.025;
  double t_max = 30.0;
  /// Split each dt into equal sub-steps so that max|w| h / dx stays below
  /// `cfl_target`. Off reproduces the plain scheme (and its CFL failures).
  bool substep = true;
  double cfl_target = 0.9;

  int nodes() const;
  Vec x() const;
};

struct BurgersSolution {
  Vec x;
  std::vector<double> times;  // every (sub)step level, starting at 0
  std::vector<double> steps;  // steps[i] = times[i + 1] - times[i]
  std::vector<Vec> w;         // field at each level
};

/// Solution levels up to the last one at or before `t_end` (default t_max).
BurgersSolution burgers_solve(const Vec& mu, const BurgersGrid& grid,
                              std::optional<double> t_end = std::nullopt);

/// dw/dmu_p for p = 1..3 on the levels of `sol`, by the same scheme applied
/// to the linearized transport with flux w * w_mu.
std::array<std::vector<Vec>, 3> sensitivity_solve(const Vec& mu, const BurgersSolution& sol,
                                                  const BurgersGrid& grid);

/// K(t, mu) = 1/2 int_0^t int_a^b w^2 dx ds by left Riemann sums in space and
/// time; gradient (K_t, K_mu1, K_mu2, K_mu3). K_t is the spatial integral at
/// the latest level at or before t.
ValueGrad kinetic_energy_and_grad(const Vec& mu, double t, const BurgersGrid& grid);

/// theta = (t, mu1, mu2, mu3).
ValueGrad burgers_k_eval_grad(const Vec& theta, const BurgersGrid& grid = {});

/// i.i.d. uniform samples from `box`, evaluated with `qoi`. Deterministic in
/// `seed`; evaluator failures are rethrown with the offending point.
SampleSet sample_uniform(const DomainBox& box, Eigen::Index count, std::uint64_t seed,
                         const Evaluator& qoi, const std::string& problem = "custom");

struct Problem {
  std::string id;
  DomainBox box;
  Evaluator eval;
};

DomainBox f4_box();
DomainBox f5_box();
DomainBox burgers_box();

/// Problem by id: f4, f5, burgers_K, or r0 (which needs `box`).
Problem make_problem(const std::string& id, const std::optional<DomainBox>& box = std::nullopt);

}  // namespace nll
