#include "qoc/optimizer.hpp"

#include "qoc/error.hpp"
#include "qoc/fixtures.hpp"
#include "qoc/linalg.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <deque>
#include <functional>
#include <limits>
#include <mutex>
#include <numbers>
#include <thread>

namespace qoc {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kPi = std::numbers::pi;

// ---------------------------------------------------------------------------
// Inner solvers

using Objective = std::function<double(const Eigen::VectorXd&, Eigen::VectorXd&)>;
using Projection = std::function<void(Eigen::VectorXd&)>;

struct InnerResult {
  Eigen::VectorXd x;
  double f = 0.0;
  Eigen::VectorXd g;
  int iterations = 0;
};

InnerResult lbfgs(const Objective& fun, Eigen::VectorXd x, double gtol, int max_iter) {
  constexpr int kMemory = 10;
  Eigen::VectorXd g(x.size());
  double f = fun(x, g);
  std::deque<Eigen::VectorXd> S, Y;
  std::deque<double> R;
  int flat = 0;
  int it = 0;
  for (; it < max_iter; ++it) {
    const double gmax = g.lpNorm<Eigen::Infinity>();
    if (gmax <= gtol) break;
    Eigen::VectorXd q = g;
    std::vector<double> a(S.size());
    for (int k = static_cast<int>(S.size()) - 1; k >= 0; --k) {
      a[k] = R[k] * S[k].dot(q);
      q -= a[k] * Y[k];
    }
    q *= S.empty() ? std::min(1.0, 0.1 / gmax) : S.back().dot(Y.back()) / Y.back().squaredNorm();
    for (int k = 0; k < static_cast<int>(S.size()); ++k) {
      const double b = R[k] * Y[k].dot(q);
      q += S[k] * (a[k] - b);
    }
    Eigen::VectorXd d = -q;
    double gd = g.dot(d);
    if (!(gd < 0.0)) {
      S.clear();
      Y.clear();
      R.clear();
      d = -g * std::min(1.0, 0.1 / gmax);
      gd = g.dot(d);
    }
    double t = 1.0;
    Eigen::VectorXd xn, gn(x.size());
    double fn = 0.0;
    bool ok = false;
    const double step_floor = 1e-14 * (1.0 + x.lpNorm<Eigen::Infinity>());
    for (int ls = 0; ls < 50 && t * d.lpNorm<Eigen::Infinity>() > step_floor; ++ls) {
      xn = x + t * d;
      fn = fun(xn, gn);
      if (std::isfinite(fn) && fn <= f + 1e-4 * t * gd) {
        ok = true;
        break;
      }
      t *= 0.5;
    }
    if (!ok) break;
    if (f - fn <= 1e-15 * std::abs(f)) {
      if (++flat > 20) break;
    } else {
      flat = 0;
    }
    const Eigen::VectorXd s = xn - x;
    const Eigen::VectorXd y = gn - g;
    const double sy = s.dot(y);
    if (sy > 1e-14 * s.norm() * y.norm()) {
      S.push_back(s);
      Y.push_back(y);
      R.push_back(1.0 / sy);
      if (static_cast<int>(S.size()) > kMemory) {
        S.pop_front();
        Y.pop_front();
        R.pop_front();
      }
    }
    x = std::move(xn);
    g = gn;
    f = fn;
  }
  return {std::move(x), f, std::move(g), it};
}

// Spectral projected gradient with a nonmonotone Armijo search.
InnerResult spg(const Objective& fun, const Projection& proj, Eigen::VectorXd x, double pgtol, int max_iter,
                double f_stop) {
  constexpr int kHistory = 10;
  proj(x);
  Eigen::VectorXd g(x.size());
  double f = fun(x, g);
  std::deque<double> hist{f};
  double alpha = 1.0 / std::max(g.lpNorm<Eigen::Infinity>(), 1e-12);
  double best_f = f;
  int since_best = 0;
  int it = 0;
  for (; it < max_iter; ++it) {
    if (f <= f_stop) break;
    Eigen::VectorXd pg = x - g;
    proj(pg);
    pg -= x;
    if (pg.lpNorm<Eigen::Infinity>() <= pgtol) break;
    Eigen::VectorXd d = x - alpha * g;
    proj(d);
    d -= x;
    const double gd = g.dot(d);
    if (!(gd < 0.0)) break;
    const double fmax = *std::max_element(hist.begin(), hist.end());
    double t = 1.0;
    Eigen::VectorXd xn, gn(x.size());
    double fn = 0.0;
    bool ok = false;
    for (int ls = 0; ls < 50; ++ls) {
      xn = x + t * d;
      fn = fun(xn, gn);
      if (std::isfinite(fn) && fn <= fmax + 1e-4 * t * gd) {
        ok = true;
        break;
      }
      t *= 0.5;
    }
    if (!ok) break;
    const Eigen::VectorXd s = xn - x;
    const Eigen::VectorXd y = gn - g;
    const double sy = s.dot(y);
    alpha = sy > 0.0 ? std::clamp(s.squaredNorm() / sy, 1e-12, 1e12) : 1e12;
    x = std::move(xn);
    g = gn;
    f = fn;
    hist.push_back(f);
    if (static_cast<int>(hist.size()) > kHistory) hist.pop_front();
    // Stalled: no relative progress over a long stretch.
    if (f < best_f * (1.0 - 1e-6)) {
      best_f = f;
      since_best = 0;
    } else if (++since_best > 200) {
      break;
    }
  }
  return {std::move(x), f, std::move(g), it};
}

// Euclidean projection onto the unit l1 ball.
void project_l1(Eigen::Ref<Eigen::VectorXd> v, double radius) {
  const double total = v.cwiseAbs().sum();
  if (total <= radius) return;
  std::vector<double> u(v.size());
  for (int i = 0; i < v.size(); ++i) u[i] = std::abs(v[i]);
  std::sort(u.begin(), u.end(), std::greater<>());
  double cum = 0.0;
  double theta = 0.0;
  for (int j = 0; j < static_cast<int>(u.size()); ++j) {
    cum += u[j];
    const double th = (cum - radius) / (j + 1);
    if (u[j] - th > 0.0) theta = th;
  }
  for (int i = 0; i < v.size(); ++i) v[i] = std::copysign(std::max(std::abs(v[i]) - theta, 0.0), v[i]);
}

// ---------------------------------------------------------------------------
// Real transcription engine

Eigen::MatrixXd antisymmetric(const Eigen::MatrixXd& U, int i, const std::vector<Edge>& edges, int n) {
  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(n, n);
  for (int e = 0; e < static_cast<int>(edges.size()); ++e) {
    a(edges[e].j, edges[e].k) = U(i, e);
    a(edges[e].k, edges[e].j) = -U(i, e);
  }
  return a;
}

struct Sweep {
  std::vector<linalg::OrthogonalStep> steps;
  Eigen::MatrixXd rho;
};

Sweep forward(const Eigen::MatrixXd& U, const std::vector<Edge>& edges, double dt, const Eigen::VectorXd& rho0) {
  const int n = static_cast<int>(rho0.size());
  const int N = static_cast<int>(U.rows());
  Sweep s;
  s.rho.resize(n, N + 1);
  s.rho.col(0) = rho0;
  s.steps.reserve(N);
  for (int i = 0; i < N; ++i) {
    s.steps.emplace_back(antisymmetric(U, i, edges, n), dt);
    s.rho.col(i + 1) = s.steps.back().matrix() * s.rho.col(i);
  }
  return s;
}

// Gradient of a terminal function with dPsi/drho(T) = lambdaN. Fills the
// adjoint history (n x (N+1)) when requested.
Eigen::MatrixXd backward(const Sweep& s, const std::vector<Edge>& edges, const Eigen::VectorXd& lambdaN,
                         Eigen::VectorXd* lambda0, Eigen::MatrixXd* history) {
  const int N = static_cast<int>(s.steps.size());
  const int E = static_cast<int>(edges.size());
  Eigen::MatrixXd grad(N, E);
  Eigen::VectorXd lam = lambdaN;
  if (history) {
    history->resize(lam.size(), N + 1);
    history->col(N) = lam;
  }
  for (int i = N - 1; i >= 0; --i) {
    const Eigen::MatrixXd G = s.steps[i].pairing(lam, s.rho.col(i));
    for (int e = 0; e < E; ++e) grad(i, e) = G(edges[e].j, edges[e].k) - G(edges[e].k, edges[e].j);
    lam = s.steps[i].matrix().transpose() * lam;
    if (history) history->col(i) = lam;
  }
  if (lambda0) *lambda0 = lam;
  return grad;
}

double running_cost(CostKind kind, const Eigen::MatrixXd& U, const Eigen::VectorXd& mu, double dt, Eigen::MatrixXd* grad) {
  const int N = static_cast<int>(U.rows());
  const int E = static_cast<int>(U.cols());
  if (grad) grad->setZero(N, E);
  double total = 0.0;
  for (int i = 0; i < N; ++i) {
    const Eigen::VectorXd s = U.row(i).transpose().cwiseQuotient(mu);
    if (E == 0) continue;
    switch (kind) {
      case CostKind::Energy:
        total += s.squaredNorm();
        if (grad) grad->row(i) = (2.0 * dt) * s.cwiseQuotient(mu).transpose();
        break;
      case CostKind::Length: {
        const double r = s.norm();
        total += r;
        if (grad && r > 0.0) grad->row(i) = (dt / r) * s.cwiseQuotient(mu).transpose();
        break;
      }
      case CostKind::Area:
        total += s.cwiseAbs().sum();
        if (grad) {
          for (int e = 0; e < E; ++e) (*grad)(i, e) = dt * ((s[e] > 0) - (s[e] < 0)) / mu[e];
        }
        break;
      case CostKind::TimeMax: {
        int arg = 0;
        const double m = s.cwiseAbs().maxCoeff(&arg);
        total += m;
        if (grad) (*grad)(i, arg) = dt * ((s[arg] > 0) - (s[arg] < 0)) / mu[arg];
        break;
      }
    }
  }
  return total * dt;
}

Eigen::VectorXd source_point(const BoundarySpec& source, int n) { return source.populations(n).cwiseSqrt(); }

struct Problem {
  int n = 0;
  std::vector<Edge> edges;
  Eigen::VectorXd mu;
  Eigen::VectorXd bound;
  CostSpec spec;
  BoundarySpec source;
  BoundarySpec target;
  int N = 0;
  bool source_free = false;
  std::vector<int> source_support;

  int ne() const { return static_cast<int>(edges.size()); }
  int control_size() const { return N * ne(); }
  int size() const { return control_size() + (source_free ? n : 0); }

  Eigen::VectorXd rho0(const Eigen::VectorXd& z) const {
    if (!source_free) return source_point(source, n);
    const Eigen::VectorXd x = z.tail(n);
    return x / x.norm();
  }
};

Problem make_problem(const LevelSystem& sys, const CostSpec& spec, const BoundarySpec& source, const BoundarySpec& target,
                     int N) {
  Problem p;
  p.n = sys.n;
  for (const auto& e : sys.edges) p.edges.push_back(e.normalized());
  p.mu.resize(p.ne());
  p.bound.resize(p.ne());
  for (int e = 0; e < p.ne(); ++e) {
    p.mu[e] = spec.weight(p.edges[e]);
    p.bound[e] = p.edges[e].bound;
  }
  p.spec = spec;
  p.source = source;
  p.target = target;
  p.N = N;
  p.source_free = source.kind == BoundaryKind::ModuliSet;
  if (p.source_free) p.source_support = source.levels;
  return p;
}

// Penalized objective over z = [vec(U), x] (or scaled W = U / mu when
// `scaled`). Returns the value and fills the gradient in z.
struct Evaluation {
  double value = 0.0;
  double running = 0.0;
  Eigen::VectorXd c;
  Sweep sweep;
  Eigen::MatrixXd lambdas;
};

Eigen::MatrixXd controls_of(const Problem& p, const Eigen::VectorXd& z, bool scaled) {
  Eigen::MatrixXd U = Eigen::Map<const Eigen::MatrixXd>(z.data(), p.N, p.ne());
  if (scaled) U = U * p.mu.asDiagonal();
  return U;
}

Evaluation evaluate(const Problem& p, double dt, const Eigen::VectorXd& z, bool scaled, bool with_running,
                    const Eigen::VectorXd& nu, double sigma, Eigen::VectorXd* g, bool keep_history = false) {
  Evaluation ev;
  const Eigen::MatrixXd U = controls_of(p, z, scaled);
  const Eigen::VectorXd rho0 = p.rho0(z);
  ev.sweep = forward(U, p.edges, dt, rho0);
  const Eigen::VectorXd rhoN = ev.sweep.rho.col(p.N);
  ev.c = endpoint_constraints(p.target, rhoN);
  const Eigen::MatrixXd J = endpoint_jacobian(p.target, rhoN);
  Eigen::VectorXd weights = sigma * ev.c;
  if (nu.size() == ev.c.size()) weights += nu;
  const Eigen::VectorXd lamN = J.transpose() * weights;
  ev.value = 0.5 * sigma * ev.c.squaredNorm() + (nu.size() == ev.c.size() ? nu.dot(ev.c) : 0.0);
  Eigen::MatrixXd run_grad;
  if (with_running) {
    ev.running = running_cost(p.spec.kind == CostKind::Length ? CostKind::Energy : p.spec.kind, U, p.mu, dt,
                              g ? &run_grad : nullptr);
    ev.value += ev.running;
  }
  if (g || keep_history) {
    Eigen::VectorXd lam0;
    Eigen::MatrixXd grad = backward(ev.sweep, p.edges, lamN, &lam0, keep_history ? &ev.lambdas : nullptr);
    if (g) {
      if (with_running) grad += run_grad;
      if (scaled) grad = grad * p.mu.asDiagonal();
      g->resize(p.size());
      g->head(p.control_size()) = Eigen::Map<const Eigen::VectorXd>(grad.data(), grad.size());
      if (p.source_free) {
        const Eigen::VectorXd x = z.tail(p.n);
        const double r = x.norm();
        Eigen::VectorXd gx = (lam0 - rho0 * rho0.dot(lam0)) / r;
        Eigen::VectorXd masked = Eigen::VectorXd::Zero(p.n);
        for (int j : p.source_support) masked[j] = gx[j];
        g->tail(p.n) = masked;
      }
    }
  }
  return ev;
}

double stationarity(const Problem& p, double dt, const Eigen::VectorXd& g) {
  double s = g.head(p.control_size()).lpNorm<Eigen::Infinity>() / dt;
  if (p.source_free) s = std::max(s, g.tail(p.n).lpNorm<Eigen::Infinity>());
  return s;
}

Eigen::VectorXd initial_point(const Problem& p, const TimeGrid& grid, int start, unsigned long long seed, double amplitude,
                              bool scaled) {
  Eigen::VectorXd z = Eigen::VectorXd::Zero(p.size());
  fixtures::Rng rng(seed * 1000003ULL + static_cast<unsigned long long>(start) * 7919ULL + 17ULL);
  if (start > 0 && p.ne() > 0) {
    const ControlGrid c = fixtures::smooth_random_control(rng, grid, p.edges, ControlFlavor::RealU, amplitude);
    Eigen::MatrixXd U = c.values.real();
    if (scaled) U = U * p.mu.cwiseInverse().asDiagonal();
    z.head(p.control_size()) = Eigen::Map<const Eigen::VectorXd>(U.data(), U.size());
  }
  if (p.source_free) {
    Eigen::VectorXd x = Eigen::VectorXd::Zero(p.n);
    for (int j : p.source_support) x[j] = 1.0 + (start > 0 ? fixtures::uniform(rng, -0.3, 0.3) : 0.0);
    z.tail(p.n) = x;
  }
  return z;
}

// ---------------------------------------------------------------------------
// Energy / length: augmented Lagrangian

struct Attempt {
  Eigen::VectorXd z;
  Eigen::VectorXd nu;
  double sigma = 0.0;
  double objective = kInf;  ///< running energy
  double violation = kInf;
  double stationarity = kInf;
  bool converged = false;
  int iterations = 0;
};

bool has_finite_bounds(const Problem& p) { return (p.bound.array() < kInf).any(); }

Attempt augmented_lagrangian(const Problem& p, const TimeGrid& grid, Eigen::VectorXd z, const SolveOptions& opts) {
  const double dt = grid.dt();
  Attempt a;
  a.nu = Eigen::VectorXd::Zero(endpoint_constraints(p.target, p.rho0(z)).size());
  a.sigma = opts.penalty_initial;
  const bool bounded = has_finite_bounds(p);
  Projection proj = [&](Eigen::VectorXd& v) {
    for (int e = 0; e < p.ne(); ++e) {
      if (p.bound[e] == kInf) continue;
      auto col = v.segment(static_cast<Eigen::Index>(e) * p.N, p.N);
      col = col.cwiseMax(-p.bound[e]).cwiseMin(p.bound[e]);
    }
  };
  double prev_violation = kInf;
  for (int outer = 0; outer < opts.max_outer; ++outer) {
    Objective fun = [&](const Eigen::VectorXd& x, Eigen::VectorXd& g) {
      return evaluate(p, dt, x, false, true, a.nu, a.sigma, &g).value;
    };
    const InnerResult r = bounded ? spg(fun, proj, z, opts.gradient_tol * dt, opts.max_iterations, -kInf)
                                  : lbfgs(fun, z, opts.gradient_tol * dt, opts.max_iterations);
    z = r.x;
    a.iterations += r.iterations;
    Eigen::VectorXd g;
    const Evaluation ev = evaluate(p, dt, z, false, true, a.nu, a.sigma, &g);
    a.violation = ev.c.size() ? ev.c.lpNorm<Eigen::Infinity>() : 0.0;
    if (bounded) {
      Eigen::VectorXd pg = z - g;
      proj(pg);
      pg -= z;
      a.stationarity = stationarity(p, dt, pg);
    } else {
      a.stationarity = stationarity(p, dt, g);
    }
    a.objective = ev.running;
    if (a.violation <= opts.endpoint_tol && a.stationarity <= opts.gradient_tol) {
      a.converged = true;
      break;
    }
    if (ev.c.size()) a.nu += a.sigma * ev.c;
    if (a.violation > 0.25 * prev_violation) a.sigma = std::min(a.sigma * opts.penalty_growth, opts.penalty_max);
    prev_violation = a.violation;
  }
  a.z = std::move(z);
  return a;
}

int thread_count(const SolveOptions& opts) {
  int t = opts.threads;
  if (t <= 0) {
    if (const char* env = std::getenv("QOC_THREADS")) t = std::atoi(env);
  }
  if (t <= 0) t = static_cast<int>(std::thread::hardware_concurrency());
  return std::max(1, t);
}

template <class F>
void parallel_for(int count, int threads, F&& body) {
  threads = std::min(threads, count);
  if (threads <= 1) {
    for (int i = 0; i < count; ++i) body(i);
    return;
  }
  std::atomic<int> next{0};
  std::vector<std::thread> pool;
  std::exception_ptr failure;
  std::mutex mtx;
  for (int t = 0; t < threads; ++t) {
    pool.emplace_back([&] {
      for (int i = next++; i < count; i = next++) {
        try {
          body(i);
        } catch (...) {
          std::lock_guard<std::mutex> lock(mtx);
          if (!failure) failure = std::current_exception();
        }
      }
    });
  }
  for (auto& th : pool) th.join();
  if (failure) std::rethrow_exception(failure);
}

// ---------------------------------------------------------------------------
// Lift helpers

// Average over one step of P(s) psi(s)^H with both transported by exp(H s).
Eigen::MatrixXcd step_average_outer(const linalg::SkewExp& S, double dt, const Eigen::VectorXcd& P,
                                    const Eigen::VectorXcd& psi) {
  const Eigen::MatrixXcd& Q = S.vectors();
  const Eigen::VectorXd& w = S.frequencies();
  const Eigen::VectorXcd pt = Q.adjoint() * P;
  const Eigen::VectorXcd st = Q.adjoint() * psi;
  const int n = static_cast<int>(w.size());
  Eigen::MatrixXcd M(n, n);
  for (int a = 0; a < n; ++a) {
    for (int b = 0; b < n; ++b) {
      const double x = (w[a] - w[b]) * dt;
      cdouble phi;
      if (std::abs(x) < 1e-6) {
        phi = cdouble(1.0 - x * x / 6.0, x / 2.0 - x * x * x / 24.0);
      } else {
        phi = (std::exp(cdouble(0.0, x)) - 1.0) / cdouble(0.0, x);
      }
      M(a, b) = pt[a] * std::conj(st[b]) * phi;
    }
  }
  return Q * M * Q.adjoint();
}

enum class MaxForm { Energy, Homogeneous, TimeOptimal };

MaxForm max_form(const CostSpec& spec) {
  if (spec.kind == CostKind::Energy) return MaxForm::Energy;
  if (spec.final_time == FinalTime::Free && (spec.kind == CostKind::TimeMax || spec.kind == CostKind::Area)) {
    return MaxForm::TimeOptimal;
  }
  return MaxForm::Homogeneous;
}

// Dual norm of the scaled switching vector for the homogeneous costs.
double dual_norm(CostKind kind, const Eigen::VectorXd& m) {
  if (m.size() == 0) return 0.0;
  switch (kind) {
    case CostKind::Length: return m.norm();
    case CostKind::TimeMax: return m.sum();
    case CostKind::Area: return m.maxCoeff();
    case CostKind::Energy: return m.norm();
  }
  return 0.0;
}

struct StepHamiltonian {
  Eigen::VectorXd H;    ///< per step
  Eigen::VectorXd gap;  ///< per step, H_M - H
  Eigen::VectorXd dual; ///< per step dual norm of mu |gbar| (homogeneous forms)
  Eigen::VectorXd terms; ///< per step |control term| + |cost term|
  double state = 0.0;
  double costate = 0.0;
};

// Switching values gbar_e = avg P_j conj(psi_k) - conj(P_k) psi_j.
StepHamiltonian step_hamiltonians(const AdmissiblePair& pair, const Eigen::MatrixXcd& P, double p0, const CostSpec& spec) {
  const auto& c = pair.control;
  const auto& tr = pair.trajectory;
  const int n = tr.levels();
  const int N = c.grid.N;
  const int E = c.edge_count();
  const double dt = c.grid.dt();
  const double kappa = -p0;
  const MaxForm form = max_form(spec);
  Eigen::VectorXd mu(E), radius(E);
  for (int e = 0; e < E; ++e) {
    mu[e] = spec.weight(c.edges[e]);
    radius[e] = spec.kind == CostKind::TimeMax ? std::min(mu[e], c.edges[e].bound) : mu[e];
  }
  const double pscale = std::max(P.cwiseAbs().maxCoeff(), 1e-300);
  StepHamiltonian out{Eigen::VectorXd(N), Eigen::VectorXd(N), Eigen::VectorXd::Zero(N), Eigen::VectorXd(N), 0.0, 0.0};
  for (int i = 0; i < N; ++i) {
    const Eigen::MatrixXcd H = c.matrix(i, n);
    const linalg::SkewExp S(H);
    out.state = std::max(out.state, (S.apply(dt, tr.states.col(i)) - tr.states.col(i + 1)).cwiseAbs().maxCoeff());
    out.costate = std::max(out.costate, (S.apply(dt, P.col(i)) - P.col(i + 1)).cwiseAbs().maxCoeff() / pscale);
    const Eigen::MatrixXcd A = step_average_outer(S, dt, P.col(i), tr.states.col(i));
    Eigen::VectorXd m(E);  // mu |gbar| (radius for time-max)
    double lin = 0.0;
    double energy_max = 0.0;
    Eigen::VectorXd s(E);
    for (int e = 0; e < E; ++e) {
      const int j = c.edges[e].j, k = c.edges[e].k;
      cdouble g = A(j, k) - std::conj(A(k, j));
      if (c.flavor == ControlFlavor::RealU) g = g.real();
      const cdouble u = c.values(i, e);
      lin += (std::conj(u) * g).real();
      m[e] = (form == MaxForm::Energy ? mu[e] : radius[e]) * std::abs(g);
      s[e] = std::abs(u) / mu[e];
      energy_max += mu[e] * mu[e] * std::norm(g);
    }
    switch (form) {
      case MaxForm::Energy: {
        out.H[i] = lin - kappa * s.squaredNorm();
        out.terms[i] = std::abs(lin) + kappa * s.squaredNorm();
        const double hm = kappa > 0.0 ? energy_max / (4.0 * kappa) : 0.0;
        out.gap[i] = kappa > 0.0 ? hm - out.H[i] : (m.size() ? m.maxCoeff() : 0.0);
        break;
      }
      case MaxForm::Homogeneous: {
        out.H[i] = lin - kappa * integrand(spec.kind, s);
        out.terms[i] = std::abs(lin) + kappa * integrand(spec.kind, s);
        out.dual[i] = dual_norm(spec.kind, m);
        out.gap[i] = std::max(0.0, out.dual[i] - kappa) + std::abs(out.H[i]);
        break;
      }
      case MaxForm::TimeOptimal: {
        out.H[i] = lin - kappa;
        out.terms[i] = std::abs(lin) + kappa;
        out.dual[i] = dual_norm(spec.kind, m);
        out.gap[i] = out.dual[i] - lin;
        break;
      }
    }
  }
  return out;
}

Eigen::VectorXd chart(const Eigen::VectorXcd& v) {
  Eigen::VectorXd out(2 * v.size());
  out << v.real(), v.imag();
  return out;
}

// Relative norm of the projection of P onto the tangent space of the
// boundary set at psi. Points contribute the torus directions i psi_j e_j; a
// moduli set contributes the unit sphere of its support subspace, taken at
// the nearest point of that sphere.
double transversality_defect(const BoundarySpec& b, const Eigen::VectorXcd& psi, const Eigen::VectorXcd& P) {
  const int n = static_cast<int>(psi.size());
  const double pn = chart(P).norm();
  if (pn == 0.0) return 0.0;
  std::vector<Eigen::VectorXd> cols;
  if (b.kind == BoundaryKind::ModuliSet) {
    Eigen::VectorXcd face = Eigen::VectorXcd::Zero(n);
    for (int j : b.levels) face[j] = psi[j];
    const Eigen::VectorXd x = chart(face).normalized();
    for (int j : b.levels) {
      for (cdouble unit : {cdouble(1.0), cdouble(0.0, 1.0)}) {
        Eigen::VectorXcd r = Eigen::VectorXcd::Zero(n);
        r[j] = unit;
        Eigen::VectorXd v = chart(r);
        v -= x * x.dot(v);
        cols.push_back(v);
      }
    }
  } else {
    for (int j = 0; j < n; ++j) {
      if (std::abs(psi[j]) < 1e-12) continue;
      Eigen::VectorXcd t = Eigen::VectorXcd::Zero(n);
      t[j] = cdouble(0.0, 1.0) * psi[j];
      cols.push_back(chart(t));
    }
  }
  if (cols.empty()) return 0.0;
  Eigen::MatrixXd B(2 * n, cols.size());
  for (int m = 0; m < static_cast<int>(cols.size()); ++m) B.col(m) = cols[m];
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(B, Eigen::ComputeThinU);
  const Eigen::VectorXd sv = svd.singularValues();
  const double smax = sv.size() ? sv[0] : 0.0;
  const Eigen::VectorXd p = chart(P);
  double proj2 = 0.0;
  for (int m = 0; m < sv.size(); ++m) {
    if (sv[m] > 1e-10 * smax) proj2 += std::pow(svd.matrixU().col(m).dot(p), 2);
  }
  return std::sqrt(proj2) / pn;
}

PMPLift lift_from_covectors(const AdmissiblePair& pair, Eigen::MatrixXcd P, double p0, const CostSpec& spec) {
  PMPLift lift;
  lift.p0 = p0;
  lift.P = std::move(P);
  lift.hamiltonian = step_hamiltonians(pair, lift.P, p0, spec).H;
  lift.normal_candidate = p0 < 0.0;
  lift.abnormal_sigma = abnormal_probe(pair);
  lift.abnormal_candidate = lift.abnormal_sigma <= 1e-7;
  return lift;
}

// Transport P(T) backwards along the real pair.
Eigen::MatrixXcd transport_back(const AdmissiblePair& pair, const Eigen::VectorXd& PT) {
  const int n = pair.trajectory.levels();
  const int N = pair.control.grid.N;
  Eigen::MatrixXd P(n, N + 1);
  P.col(N) = PT;
  for (int i = N - 1; i >= 0; --i) {
    P.col(i) = linalg::expm_antisymmetric(pair.control.real_matrix(i, n), pair.control.grid.dt()).transpose() * P.col(i + 1);
  }
  return P.cast<cdouble>();
}

AdmissiblePair real_pair(const Problem& p, const TimeGrid& grid, const Eigen::MatrixXd& U, const Eigen::VectorXd& rho0) {
  ControlGrid c = ControlGrid::zeros(grid, ControlFlavor::RealU, p.edges);
  c.values = U.cast<cdouble>();
  AdmissiblePair pair{propagate_real(c, rho0), c};
  return pair;
}

// ---------------------------------------------------------------------------

SolveResult solve_energy_like(const Problem& p, const SolveOptions& opts) {
  const TimeGrid grid = opts.grid;
  const double dt = grid.dt();
  const int starts = std::max(1, opts.starts);
  std::vector<Attempt> attempts(starts);
  parallel_for(starts, thread_count(opts), [&](int k) {
    const Eigen::VectorXd z0 = initial_point(p, grid, k, opts.seed, kPi / grid.T, false);
    attempts[k] = augmented_lagrangian(p, grid, z0, opts);
  });
  int best = -1;
  for (int k = 0; k < starts; ++k) {
    const auto& a = attempts[k];
    if (best < 0) {
      best = k;
      continue;
    }
    const auto& b = attempts[best];
    if (a.converged != b.converged) {
      if (a.converged) best = k;
    } else if (a.converged ? a.objective < b.objective - 1e-12 : a.violation < b.violation) {
      best = k;
    }
  }
  const Attempt& a = attempts[best];
  SolveResult res;
  int total_iterations = 0;
  for (const auto& t : attempts) total_iterations += t.iterations;
  res.iterations = total_iterations;
  res.best_start = best;
  res.converged = a.converged;
  res.endpoint_violation = a.violation;
  res.stationarity = a.stationarity;

  const Evaluation ev = evaluate(p, dt, a.z, false, true, a.nu, a.sigma, nullptr, true);
  const Eigen::MatrixXd U = controls_of(p, a.z, false);
  res.pair = real_pair(p, grid, U, p.rho0(a.z));
  Eigen::MatrixXcd P = (-ev.lambdas).cast<cdouble>();
  if (p.spec.kind == CostKind::Length) {
    const double speed = std::sqrt(std::max(ev.running / grid.T, 1e-300));
    P /= 2.0 * speed;
  }
  res.lift = lift_from_covectors(res.pair, std::move(P), -1.0, p.spec);
  res.cost = evaluate_cost(p.spec, res.pair.control);
  res.message = res.converged ? "converged" : "tolerances not met";
  return res;
}

struct Feasibility {
  Eigen::VectorXd z;
  double residual = kInf;  ///< sup |c|
  bool feasible = false;
  int iterations = 0;
};

SolveResult solve_time_like(const Problem& p, const SolveOptions& opts) {
  const int N = p.N;
  const double feas_tol = std::max(opts.endpoint_tol, 1e-8);
  Eigen::VectorXd radius(p.ne());
  for (int e = 0; e < p.ne(); ++e) radius[e] = std::min(1.0, p.bound[e] / p.mu[e]);
  const bool l1 = p.spec.kind == CostKind::Area;
  Projection proj = [&](Eigen::VectorXd& v) {
    Eigen::Map<Eigen::MatrixXd> W(v.data(), N, p.ne());
    for (int i = 0; i < N; ++i) {
      if (l1) {
        Eigen::VectorXd row = W.row(i).transpose();
        project_l1(row, 1.0);
        W.row(i) = row.transpose();
      }
      W.row(i) = W.row(i).cwiseMax(-radius.transpose()).cwiseMin(radius.transpose());
    }
  };
  int iterations = 0;
  auto attempt = [&](double T, Eigen::VectorXd z, double tol) {
    const double dt = T / N;
    Objective fun = [&](const Eigen::VectorXd& x, Eigen::VectorXd& g) {
      return evaluate(p, dt, x, true, false, Eigen::VectorXd(), 1.0, &g).value;
    };
    const InnerResult r = spg(fun, proj, std::move(z), 1e-14 * dt, opts.max_iterations, 0.5 * tol * tol);
    iterations += r.iterations;
    Feasibility f;
    f.z = r.x;
    const Evaluation ev = evaluate(p, dt, f.z, true, false, Eigen::VectorXd(), 1.0, nullptr);
    f.residual = ev.c.size() ? ev.c.lpNorm<Eigen::Infinity>() : 0.0;
    f.feasible = f.residual <= tol;
    f.iterations = r.iterations;
    return f;
  };
  // Rescale a control path found at time T0 to time T (same path, new speed).
  auto rescale = [&](const Eigen::VectorXd& z, double T0, double T) {
    Eigen::VectorXd out = z;
    out.head(p.control_size()) *= T0 / T;
    proj(out);
    return out;
  };
  const int random_starts = std::max(1, std::min(opts.starts, 3));
  Feasibility lo_best, hi_best;
  double T_lo = 0.0, T_hi = kInf;
  auto test = [&](double T) {
    Feasibility best;
    std::vector<Eigen::VectorXd> inits;
    if (T_hi < kInf) inits.push_back(rescale(hi_best.z, T_hi, T));
    if (T_lo > 0.0) inits.push_back(rescale(lo_best.z, T_lo, T));
    for (int k = 1; k <= random_starts; ++k) {
      inits.push_back(initial_point(p, TimeGrid{T, N}, k, opts.seed, 1.0, true));
      proj(inits.back());
    }
    for (const auto& z0 : inits) {
      Feasibility f = attempt(T, z0, feas_tol);
      if (f.residual < best.residual) best = std::move(f);
      if (best.feasible) break;
    }
    if (best.feasible) {
      T_hi = T;
      hi_best = best;
    } else {
      T_lo = T;
      lo_best = best;
    }
    return best.feasible;
  };

  double T = opts.grid.T;
  if (test(T)) {
    for (int k = 0; k < 60 && test(T * 0.5); ++k) T *= 0.5;
  } else {
    bool found = false;
    for (int k = 0; k < 40 && !found; ++k) {
      T *= 2.0;
      found = test(T);
    }
    if (!found) {
      SolveResult res;
      res.converged = false;
      res.message = "no feasible horizon found";
      res.minimal_time = kInf;
      const double dt = T / N;
      res.pair = real_pair(p, TimeGrid{T, N}, controls_of(p, lo_best.z, true), p.rho0(lo_best.z));
      res.endpoint_violation = lo_best.residual;
      res.cost = evaluate_cost(p.spec, res.pair.control);
      res.lift = lift_from_covectors(res.pair, Eigen::MatrixXcd::Zero(p.n, N + 1), -1.0, p.spec);
      (void)dt;
      return res;
    }
  }
  while (T_hi - T_lo > opts.time_tol * std::max(1.0, T_hi)) test(0.5 * (T_lo + T_hi));

  // Polish the feasible path from the infeasible-side optimum and take the
  // covector direction from that optimum.
  Feasibility polished = attempt(T_hi, rescale(lo_best.z, T_lo, T_hi), opts.endpoint_tol);
  if (!(polished.residual <= hi_best.residual)) polished = hi_best;

  SolveResult res;
  res.iterations = iterations;
  res.minimal_time = T_hi;
  res.endpoint_violation = polished.residual;
  res.converged = polished.residual <= feas_tol;
  res.stationarity = 0.0;

  const bool free_time = p.spec.final_time == FinalTime::Free;
  const TimeGrid out_grid{free_time ? T_hi : opts.grid.T, N};
  const Eigen::MatrixXd U = controls_of(p, polished.z, true) * (T_hi / out_grid.T);
  res.pair = real_pair(p, out_grid, U, p.rho0(polished.z));

  const Evaluation lo = evaluate(p, T_lo / N, lo_best.z, true, false, Eigen::VectorXd(), 1.0, nullptr);
  const Eigen::MatrixXd J = endpoint_jacobian(p.target, lo.sweep.rho.col(N));
  const Eigen::VectorXd PT = -(J.transpose() * lo.c);
  Eigen::MatrixXcd P = transport_back(res.pair, PT);
  const StepHamiltonian sh = step_hamiltonians(res.pair, P, -1.0, p.spec);
  const double mean_dual = sh.dual.mean();
  if (mean_dual > 0.0) P /= mean_dual;
  res.lift = lift_from_covectors(res.pair, std::move(P), -1.0, p.spec);
  res.cost = evaluate_cost(p.spec, res.pair.control);
  res.message = res.converged ? "converged" : "endpoint tolerance not met";
  return res;
}

}  // namespace

void validate_options(const SolveOptions& opts) {
  validate_grid(opts.grid);
  if (!(opts.gradient_tol > 0.0) || !(opts.endpoint_tol > 0.0) || !(opts.time_tol > 0.0)) {
    throw Error(ErrorCode::InvalidControl, "solver tolerances must be positive");
  }
  if (opts.max_iterations < 1 || opts.max_outer < 1) throw Error(ErrorCode::InvalidControl, "iteration limits must be positive");
}

Eigen::VectorXd endpoint_constraints(const BoundarySpec& target, const Eigen::VectorXd& rho) {
  const int n = static_cast<int>(rho.size());
  std::vector<double> c;
  if (target.kind == BoundaryKind::ModuliSet) {
    std::vector<bool> in(n, false);
    for (int j : target.levels) in[j] = true;
    for (int j = 0; j < n; ++j) {
      if (!in[j]) c.push_back(rho[j]);
    }
  } else {
    const Eigen::VectorXd a = target.populations(n);
    int skip = 0;
    a.maxCoeff(&skip);
    for (int j = 0; j < n; ++j) {
      if (j == skip) continue;
      c.push_back(a[j] > 0.0 ? std::abs(rho[j]) - std::sqrt(a[j]) : rho[j]);
    }
  }
  return Eigen::Map<Eigen::VectorXd>(c.data(), static_cast<Eigen::Index>(c.size()));
}

Eigen::MatrixXd endpoint_jacobian(const BoundarySpec& target, const Eigen::VectorXd& rho) {
  const int n = static_cast<int>(rho.size());
  std::vector<Eigen::VectorXd> rows;
  auto unit = [&](int j, double s) {
    Eigen::VectorXd r = Eigen::VectorXd::Zero(n);
    r[j] = s;
    rows.push_back(r);
  };
  if (target.kind == BoundaryKind::ModuliSet) {
    std::vector<bool> in(n, false);
    for (int j : target.levels) in[j] = true;
    for (int j = 0; j < n; ++j) {
      if (!in[j]) unit(j, 1.0);
    }
  } else {
    const Eigen::VectorXd a = target.populations(n);
    int skip = 0;
    a.maxCoeff(&skip);
    for (int j = 0; j < n; ++j) {
      if (j == skip) continue;
      unit(j, a[j] > 0.0 ? (rho[j] >= 0.0 ? 1.0 : -1.0) : 1.0);
    }
  }
  Eigen::MatrixXd J(rows.size(), n);
  for (int r = 0; r < static_cast<int>(rows.size()); ++r) J.row(r) = rows[r].transpose();
  return J;
}

namespace {

Problem problem_for_pair(const CostSpec& spec, const AdmissiblePair& pair, const BoundarySpec& target) {
  if (pair.control.flavor != ControlFlavor::RealU) throw Error(ErrorCode::InvalidControl, "the reduced problem needs a real-U control");
  if (!(pair.control.grid == pair.trajectory.grid)) throw Error(ErrorCode::GridMismatch, "control and trajectory grids differ");
  LevelSystem sys;
  sys.n = pair.trajectory.levels();
  sys.energies = Eigen::VectorXd::Zero(sys.n);
  sys.edges = pair.control.edges;
  BoundarySpec fixed = BoundarySpec::point(pair.trajectory.populations().col(0));
  return make_problem(sys, spec, fixed, target, pair.control.grid.N);
}

}  // namespace

double penalized_objective(const CostSpec& spec, const AdmissiblePair& pair, const BoundarySpec& target,
                           const PenaltyState& pen) {
  Problem p = problem_for_pair(spec, pair, target);
  const Eigen::VectorXd rho0 = pair.trajectory.states.col(0).real();
  const Eigen::MatrixXd U = pair.control.values.real();
  const double dt = pair.control.grid.dt();
  const Sweep s = forward(U, p.edges, dt, rho0);
  const Eigen::VectorXd c = endpoint_constraints(target, s.rho.col(p.N));
  double v = running_cost(spec.kind, U, p.mu, dt, nullptr) + 0.5 * pen.weight * c.squaredNorm();
  if (pen.multipliers.size() == c.size()) v += pen.multipliers.dot(c);
  return v;
}

Eigen::MatrixXd adjoint_gradient(const CostSpec& spec, const AdmissiblePair& pair, const BoundarySpec& target,
                                 const PenaltyState& pen) {
  Problem p = problem_for_pair(spec, pair, target);
  const Eigen::VectorXd rho0 = pair.trajectory.states.col(0).real();
  const Eigen::MatrixXd U = pair.control.values.real();
  const double dt = pair.control.grid.dt();
  const Sweep s = forward(U, p.edges, dt, rho0);
  const Eigen::VectorXd rhoN = s.rho.col(p.N);
  const Eigen::VectorXd c = endpoint_constraints(target, rhoN);
  Eigen::VectorXd w = pen.weight * c;
  if (pen.multipliers.size() == c.size()) w += pen.multipliers;
  const Eigen::VectorXd lamN = endpoint_jacobian(target, rhoN).transpose() * w;
  Eigen::MatrixXd run;
  running_cost(spec.kind, U, p.mu, dt, &run);
  return backward(s, p.edges, lamN, nullptr, nullptr) + run;
}

double PmpResidual::worst() const {
  return std::max({state, costate, maximality_gap, hamiltonian_constancy, transversality});
}

PmpResidual pmp_residual(const AdmissiblePair& pair, const PMPLift& lift, const CostSpec& spec, const BoundarySpec* source,
                         const BoundarySpec* target) {
  const auto& tr = pair.trajectory;
  if (!(pair.control.grid == tr.grid)) throw Error(ErrorCode::GridMismatch, "control and trajectory grids differ");
  if (lift.P.rows() != tr.levels() || lift.P.cols() != tr.grid.N + 1) {
    throw Error(ErrorCode::DimensionMismatch, "lift dimensions do not match the pair");
  }
  if (pair.control.flavor == ControlFlavor::HermitianV) throw Error(ErrorCode::InvalidControl, "lift residuals are evaluated in the driftless frame");
  const StepHamiltonian sh = step_hamiltonians(pair, lift.P, lift.p0, spec);
  PmpResidual r;
  r.state = sh.state;
  r.costate = sh.costate;
  r.maximality_gap = sh.gap.size() ? sh.gap.maxCoeff() : 0.0;
  r.hamiltonian_mean = sh.H.mean();
  r.hamiltonian_stdev = std::sqrt((sh.H.array() - r.hamiltonian_mean).square().mean());
  r.hamiltonian_scale = sh.terms.size() ? sh.terms.mean() : 0.0;
  const double denom = std::abs(r.hamiltonian_mean) >= 1e-3 * r.hamiltonian_scale ? std::abs(r.hamiltonian_mean)
                                                                                   : r.hamiltonian_scale;
  r.hamiltonian_constancy = denom > 1e-12 ? r.hamiltonian_stdev / denom : r.hamiltonian_stdev;
  if (source) r.transversality = std::max(r.transversality, transversality_defect(*source, tr.states.col(0), lift.P.col(0)));
  if (target) {
    r.transversality = std::max(r.transversality, transversality_defect(*target, tr.states.col(tr.grid.N), lift.P.col(tr.grid.N)));
  }
  return r;
}

PMPLift fit_normal_lift(const AdmissiblePair& pair, const CostSpec& spec, double* fit_residual) {
  if (spec.kind != CostKind::Energy && spec.kind != CostKind::Length) {
    throw Error(ErrorCode::WrongKind, "normal lift fitting needs the energy or length cost");
  }
  const auto& c = pair.control;
  const auto& tr = pair.trajectory;
  if (c.flavor == ControlFlavor::HermitianV) throw Error(ErrorCode::InvalidControl, "lift fitting works in the driftless frame");
  const int n = tr.levels();
  const int N = c.grid.N;
  const int E = c.edge_count();
  const double dt = c.grid.dt();
  const bool real = c.flavor == ControlFlavor::RealU;
  const int params = real ? n : 2 * n;
  const int rows_per = real ? 1 : 2;

  std::vector<linalg::SkewExp> steps;
  steps.reserve(N);
  for (int i = 0; i < N; ++i) steps.emplace_back(c.matrix(i, n));

  Eigen::VectorXd mu(E);
  for (int e = 0; e < E; ++e) mu[e] = spec.weight(c.edges[e]);
  Eigen::MatrixXd M(N * E * rows_per, params);
  Eigen::VectorXd b(N * E * rows_per);
  for (int q = 0; q < params; ++q) {
    Eigen::VectorXcd P = Eigen::VectorXcd::Zero(n);
    if (q < n) {
      P[q] = 1.0;
    } else {
      P[q - n] = cdouble(0.0, 1.0);
    }
    for (int i = 0; i < N; ++i) {
      const Eigen::MatrixXcd A = step_average_outer(steps[i], dt, P, tr.states.col(i));
      for (int e = 0; e < E; ++e) {
        const int j = c.edges[e].j, k = c.edges[e].k;
        const cdouble g = A(j, k) - std::conj(A(k, j));
        const int row = (i * E + e) * rows_per;
        M(row, q) = g.real();
        if (!real) M(row + 1, q) = g.imag();
      }
      P = steps[i].apply(dt, P);
    }
  }
  for (int i = 0; i < N; ++i) {
    for (int e = 0; e < E; ++e) {
      const cdouble u = c.values(i, e);
      const int row = (i * E + e) * rows_per;
      b[row] = 2.0 * u.real() / (mu[e] * mu[e]);
      if (!real) b[row + 1] = 2.0 * u.imag() / (mu[e] * mu[e]);
    }
  }
  const Eigen::VectorXd x = M.completeOrthogonalDecomposition().solve(b);
  if (fit_residual) *fit_residual = b.norm() > 0.0 ? (M * x - b).norm() / b.norm() : (M * x).norm();
  Eigen::VectorXcd P0(n);
  for (int j = 0; j < n; ++j) P0[j] = cdouble(x[j], real ? 0.0 : x[n + j]);
  Eigen::MatrixXcd P(n, N + 1);
  P.col(0) = P0;
  for (int i = 0; i < N; ++i) P.col(i + 1) = steps[i].apply(dt, P.col(i));
  if (spec.kind == CostKind::Length) {
    double energy = 0.0;
    for (int i = 0; i < N; ++i) {
      for (int e = 0; e < E; ++e) energy += std::norm(c.values(i, e)) / (mu[e] * mu[e]);
    }
    const double speed = std::sqrt(std::max(energy / N, 1e-300));
    P /= 2.0 * speed;
  }
  return lift_from_covectors(pair, std::move(P), -1.0, spec);
}

double abnormal_probe(const AdmissiblePair& pair) {
  const auto& c = pair.control;
  const auto& tr = pair.trajectory;
  const int n = tr.levels();
  const int N = c.grid.N;
  const int E = c.edge_count();
  const double dt = c.grid.dt();
  const bool real = c.flavor == ControlFlavor::RealU;
  const int params = real ? n : 2 * n;
  const int rows_per = real ? 1 : 2;
  if (E == 0 || N == 0) return 0.0;

  std::vector<linalg::SkewExp> steps;
  steps.reserve(N);
  for (int i = 0; i < N; ++i) steps.emplace_back(c.matrix(i, n));
  Eigen::MatrixXd M(N * E * rows_per, params);
  for (int q = 0; q < params; ++q) {
    Eigen::VectorXcd P = Eigen::VectorXcd::Zero(n);
    if (q < n) {
      P[q] = 1.0;
    } else {
      P[q - n] = cdouble(0.0, 1.0);
    }
    for (int i = 0; i < N; ++i) {
      const Eigen::MatrixXcd A = step_average_outer(steps[i], dt, P, tr.states.col(i));
      for (int e = 0; e < E; ++e) {
        const int j = c.edges[e].j, k = c.edges[e].k;
        const cdouble g = A(j, k) - std::conj(A(k, j));
        const int row = (i * E + e) * rows_per;
        M(row, q) = std::sqrt(dt) * g.real();
        if (!real) M(row + 1, q) = std::sqrt(dt) * g.imag();
      }
      P = steps[i].apply(dt, P);
    }
  }
  // Restrict to covectors orthogonal to the initial state.
  Eigen::VectorXd x0(params);
  if (real) {
    x0 = tr.states.col(0).real();
  } else {
    x0 = chart(tr.states.col(0));
  }
  x0.normalize();
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(x0);
  const Eigen::MatrixXd Q = qr.householderQ();
  const Eigen::MatrixXd basis = Q.rightCols(params - 1);
  if (basis.cols() == 0) return kInf;
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(M * basis);
  return svd.singularValues().minCoeff();
}

SolveResult solve_reduced(const LevelSystem& sys, const CostSpec& spec, const BoundarySpec& source, const BoundarySpec& target,
                          const SolveOptions& opts) {
  require_valid(sys);
  validate_cost_spec(spec);
  validate_boundary(source, sys.n);
  validate_boundary(target, sys.n);
  validate_options(opts);
  if (!is_controllable(sys)) throw Error(ErrorCode::NotControllable, "coupling graph is disconnected");
  const Problem p = make_problem(sys, spec, source, target, opts.grid.N);
  if (spec.kind == CostKind::Energy || spec.kind == CostKind::Length) return solve_energy_like(p, opts);
  return solve_time_like(p, opts);
}

}  // namespace qoc
