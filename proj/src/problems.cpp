#include "nll/problems.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>

namespace nll {

ValueGrad f4_eval_grad(const Vec& x) {
  require(x.size() >= 1, "f4 needs a nonempty input");
  const double r2 = x.squaredNorm();
  return {std::sin(r2), 2.0 * std::cos(r2) * x};
}

ValueGrad f5_eval_grad(const Vec& x) {
  require(x.size() >= 1, "f5 needs a nonempty input");
  const Vec denom = (1.0 + x.array().square()).matrix();
  const double value = 1.0 / denom.prod();
  return {value, (value * (-2.0 * x.array() / denom.array())).matrix()};
}

ValueGrad r0_eval_grad(const Vec& theta) {
  require(theta.size() == 8, "R0 takes (beta1, beta2, beta3, rho1, gamma1, gamma2, omega, psi)");
  const double beta1 = theta(0), beta2 = theta(1), beta3 = theta(2), rho1 = theta(3);
  const double gamma1 = theta(4), gamma2 = theta(5), omega = theta(6), psi = theta(7);
  require(omega > 0.0, "R0 needs omega > 0");
  require(gamma2 > 0.0, "R0 needs gamma2 > 0");
  const double d = gamma1 + psi;
  require(d > 0.0, "R0 needs gamma1 + psi > 0");

  const double num = beta1 + beta2 * rho1 * gamma1 / omega + beta3 * psi / gamma2;
  ValueGrad out{num / d, Vec(8)};
  out.grad << 1.0 / d,
      rho1 * gamma1 / (omega * d),
      psi / (gamma2 * d),
      beta2 * gamma1 / (omega * d),
      beta2 * rho1 / (omega * d) - num / (d * d),
      -beta3 * psi / (gamma2 * gamma2 * d),
      -beta2 * rho1 * gamma1 / (omega * omega * d),
      beta3 / (gamma2 * d) - num / (d * d);
  return out;
}

int BurgersGrid::nodes() const {
  require(b > a && dx > 0.0 && dt > 0.0 && t_max > 0.0, "invalid Burgers grid");
  const double cells = (b - a) / dx;
  const long rounded = std::lround(cells);
  require(std::abs(cells - static_cast<double>(rounded)) < 1e-9 * cells,
          "Burgers grid spacing must divide the interval");
  return static_cast<int>(rounded) + 1;
}

Vec BurgersGrid::x() const {
  const int n = nodes();
  Vec out(n);
  for (int j = 0; j < n; ++j) out(j) = a + j * dx;
  return out;
}

namespace {

void check_mu(const Vec& mu) {
  require(mu.size() == 3, "Burgers parameters are (mu1, mu2, mu3)");
  require(mu.allFinite(), "Burgers parameters must be finite");
  require(mu(0) > 0.0, "left upwinding needs inflow mu1 > 0");
}

std::string where(std::size_t step, double t) {
  std::ostringstream os;
  os << "step " << step << " (t = " << t << ")";
  return os.str();
}

}  // namespace

BurgersSolution burgers_solve(const Vec& mu, const BurgersGrid& grid,
                              std::optional<double> t_end) {
  check_mu(mu);
  const int n = grid.nodes();
  const double t_stop = t_end.value_or(grid.t_max);
  require(t_stop >= 0.0, "Burgers end time must be nonnegative");
  require(t_stop <= grid.t_max * (1.0 + 1e-12), "Burgers end time beyond the horizon t_max");
  const double tol = 1e-9 * grid.dt;

  BurgersSolution sol;
  sol.x = grid.x();
  const Vec source = (mu(2) * (mu(1) * sol.x.array()).exp()).matrix();
  Vec w = Vec::Ones(n);
  w(0) = mu(0);
  sol.times.push_back(0.0);
  sol.w.push_back(w);

  Vec next(n);
  for (long k = 0;; ++k) {
    const double t0 = static_cast<double>(k) * grid.dt;
    if (t0 + tol >= t_stop) break;
    const double speed = w.cwiseAbs().maxCoeff();
    const long nsub =
        grid.substep
            ? std::max(1L, static_cast<long>(std::ceil(speed * grid.dt / (grid.dx * grid.cfl_target))))
            : 1L;
    const double h = grid.dt / static_cast<double>(nsub);
    for (long j = 1; j <= nsub; ++j) {
      const double t1 = j == nsub ? static_cast<double>(k + 1) * grid.dt : t0 + j * h;
      if (t1 > t_stop + tol) return sol;
      const std::size_t step = sol.steps.size() + 1;
      const double cfl = w.cwiseAbs().maxCoeff() * h / grid.dx;
      if (cfl > 1.0) {
        std::ostringstream os;
        os << "CFL condition violated at " << where(step, t1) << ": max|w| dt/dx = " << cfl;
        throw NumericalError(os.str());
      }
      const double r = h / grid.dx;
      next(0) = mu(0);
      for (int i = 1; i < n; ++i) {
        next(i) = w(i) - r * 0.5 * (w(i) * w(i) - w(i - 1) * w(i - 1)) + h * source(i);
      }
      if (!next.allFinite()) throw NumericalError("non-finite Burgers field at " + where(step, t1));
      if (next.minCoeff() <= 0.0) {
        throw NumericalError("Burgers field lost positivity at " + where(step, t1));
      }
      w.swap(next);
      sol.steps.push_back(t1 - sol.times.back());
      sol.times.push_back(t1);
      sol.w.push_back(w);
    }
  }
  return sol;
}

std::array<std::vector<Vec>, 3> sensitivity_solve(const Vec& mu, const BurgersSolution& sol,
                                                  const BurgersGrid& grid) {
  check_mu(mu);
  const int n = grid.nodes();
  require(!sol.w.empty() && sol.w.size() == sol.times.size() &&
              sol.steps.size() + 1 == sol.w.size() && sol.x.size() == n,
          "sensitivity solve needs a matching Burgers solution");

  const Vec e = (mu(1) * sol.x.array()).exp().matrix();
  const std::array<Vec, 3> source = {Vec::Zero(n), (mu(2) * sol.x.array() * e.array()).matrix(),
                                     e};
  const std::array<double, 3> boundary = {1.0, 0.0, 0.0};

  std::array<std::vector<Vec>, 3> out;
  for (int p = 0; p < 3; ++p) {
    Vec s = Vec::Zero(n);
    s(0) = boundary[p];
    out[p].reserve(sol.w.size());
    out[p].push_back(s);
    Vec next(n);
    for (std::size_t k = 0; k < sol.steps.size(); ++k) {
      const Vec& w = sol.w[k];
      const double h = sol.steps[k];
      const double r = h / grid.dx;
      next(0) = boundary[p];
      for (int i = 1; i < n; ++i) {
        next(i) = s(i) - r * (w(i) * s(i) - w(i - 1) * s(i - 1)) + h * source[p](i);
      }
      if (!next.allFinite()) {
        throw NumericalError("non-finite sensitivity at " + where(k + 1, sol.times[k + 1]));
      }
      s.swap(next);
      out[p].push_back(s);
    }
  }
  return out;
}

ValueGrad kinetic_energy_and_grad(const Vec& mu, double t, const BurgersGrid& grid) {
  require(std::isfinite(t) && t >= 0.0, "time must be finite and nonnegative");
  require(t <= grid.t_max * (1.0 + 1e-12), "time beyond the simulated horizon");
  const BurgersSolution sol = burgers_solve(mu, grid, t);
  const auto sens = sensitivity_solve(mu, sol, grid);
  const Eigen::Index cells = sol.x.size() - 1;  // left Riemann: nodes 0..N-1

  double k_val = 0.0;
  Vec k_mu = Vec::Zero(3);
  const std::size_t last = sol.w.size() - 1;
  double energy_last = 0.0;
  for (std::size_t i = 0; i <= last; ++i) {
    const double h = i < last ? sol.steps[i] : std::max(0.0, t - sol.times[last]);
    const auto w = sol.w[i].head(cells);
    const double energy = 0.5 * w.squaredNorm() * grid.dx;
    if (i == last) energy_last = energy;
    if (h == 0.0) continue;
    k_val += energy * h;
    for (int p = 0; p < 3; ++p) k_mu(p) += w.dot(sens[p][i].head(cells)) * grid.dx * h;
  }
  ValueGrad out{k_val, Vec(4)};
  out.grad << energy_last, k_mu;
  return out;
}

ValueGrad burgers_k_eval_grad(const Vec& theta, const BurgersGrid& grid) {
  require(theta.size() == 4, "Burgers QoI takes (t, mu1, mu2, mu3)");
  return kinetic_energy_and_grad(theta.tail(3), theta(0), grid);
}

SampleSet sample_uniform(const DomainBox& box, Eigen::Index count, std::uint64_t seed,
                         const Evaluator& qoi, const std::string& problem) {
  box.validate();
  require(count >= 0, "sample count must be nonnegative");
  const int n = box.dim();
  SampleSet s;
  s.problem = problem;
  s.box = box;
  s.seed = seed;
  s.x.resize(count, n);
  s.f.resize(count);
  s.grad.resize(count, n);

  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (Eigen::Index r = 0; r < count; ++r) {
    for (int i = 0; i < n; ++i) {
      s.x(r, i) = box.lower(i) + (box.upper(i) - box.lower(i)) * unit(rng);
    }
  }
  for (Eigen::Index r = 0; r < count; ++r) {
    const Vec theta = s.x.row(r).transpose();
    const auto at = [&] {
      std::ostringstream os;
      os.precision(17);
      os << " at theta = (";
      for (int i = 0; i < n; ++i) os << (i ? ", " : "") << theta(i);
      os << ")";
      return os.str();
    };
    ValueGrad vg;
    try {
      vg = qoi(theta);
    } catch (const NumericalError& e) {
      throw NumericalError(e.what() + at());
    } catch (const ValidationError& e) {
      throw ValidationError(e.what() + at());
    }
    if (vg.grad.size() != n) throw ValidationError("evaluator returned a wrong-size gradient" + at());
    if (!std::isfinite(vg.value) || !vg.grad.allFinite()) {
      throw NumericalError("evaluator returned a non-finite value" + at());
    }
    s.f(r) = vg.value;
    s.grad.row(r) = vg.grad.transpose();
  }
  return s;
}

DomainBox f4_box() { return DomainBox::unit(40); }
DomainBox f5_box() { return DomainBox::unit(20); }

DomainBox burgers_box() {
  DomainBox box{Vec(4), Vec(4)};
  box.lower << 25.0, 3.0, 0.015, 0.0;
  box.upper << 30.0, 8.0, 0.06, 0.05;
  return box;
}

Problem make_problem(const std::string& id, const std::optional<DomainBox>& box) {
  const auto pick = [&](DomainBox fallback) {
    DomainBox b = box.value_or(std::move(fallback));
    b.validate();
    return b;
  };
  if (id == "f4") return {id, pick(f4_box()), f4_eval_grad};
  if (id == "f5") return {id, pick(f5_box()), f5_eval_grad};
  if (id == "burgers_K") {
    return {id, pick(burgers_box()), [](const Vec& t) { return burgers_k_eval_grad(t); }};
  }
  if (id == "r0") {
    require(box.has_value(), "r0 needs user-supplied parameter ranges");
    require(box->dim() == 8, "r0 ranges must cover all 8 parameters");
    return {id, pick(*box), r0_eval_grad};
  }
  throw ValidationError("unknown problem '" + id + "'");
}

}  // namespace nll
