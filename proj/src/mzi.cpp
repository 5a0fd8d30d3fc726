#include "cnotsim/mzi.hpp"

#include "cnotsim/optics.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <array>
#include <cmath>
#include <iomanip>
#include <limits>
#include <numeric>
#include <ostream>
#include <random>
#include <stdexcept>

namespace cnotsim {

namespace {

// The caption's interferometer only needs PBS-3 and the H detectors.
const LinearTransform& analyzer() {
  static const LinearTransform t = pbs(PbsBasis::RL, {Path::P2, Path::P3}, {Path::A, Path::B});
  return t;
}

struct Params {
  double x0;
  double sigma;
  double vis;
  double base;
};

double model(const Params& p, double k, double x) {
  const double d = x - p.x0;
  return p.base * (1.0 + p.vis * std::exp(-d * d / (2.0 * p.sigma * p.sigma)) * std::cos(k * d));
}

double rss(const Params& p, double k, const std::vector<double>& x, const std::vector<double>& y) {
  double s = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double r = y[i] - model(p, k, x[i]);
    s += r * r;
  }
  return s;
}

struct CoarseFit {
  Params params;
  double rss;
  double vis_significance;  // fringe amplitude over its standard error
};

// For a fixed envelope (center c, width s) the model is linear in
// (baseline, A, B) with fringe A cos(kx) + B sin(kx).
CoarseFit coarse_search(const std::vector<double>& x, const std::vector<double>& y, double k) {
  const std::size_t n = x.size();
  const double lo = x.front();
  const double hi = x.back();
  const double span = hi - lo;
  double min_dx = span;
  for (std::size_t i = 1; i < n; ++i) min_dx = std::min(min_dx, x[i] - x[i - 1]);

  std::vector<double> ckx(n);
  std::vector<double> skx(n);
  for (std::size_t i = 0; i < n; ++i) {
    ckx[i] = std::cos(k * x[i]);
    skx[i] = std::sin(k * x[i]);
  }

  const double yy = std::inner_product(y.begin(), y.end(), y.begin(), 0.0);
  CoarseFit best{{0, 0, 0, 0}, std::numeric_limits<double>::infinity(), 0.0};
  Eigen::Vector3d best_coef = Eigen::Vector3d::Zero();
  double best_c = lo;
  double best_s = span;
  Eigen::Matrix3d best_inv = Eigen::Matrix3d::Zero();

  const double s_min = std::max(2.0 * min_dx, 2.0 * M_PI / k);
  for (double s = s_min; s <= 2.0 * span; s *= 1.25) {
    const double step = s / 4.0;
    for (double c = lo; c <= hi + 1e-12; c += step) {
      Eigen::Matrix3d ata = Eigen::Matrix3d::Zero();
      Eigen::Vector3d aty = Eigen::Vector3d::Zero();
      for (std::size_t i = 0; i < n; ++i) {
        const double d = x[i] - c;
        const double e = std::exp(-d * d / (2.0 * s * s));
        const Eigen::Vector3d row(1.0, e * ckx[i], e * skx[i]);
        ata += row * row.transpose();
        aty += row * y[i];
      }
      const Eigen::LDLT<Eigen::Matrix3d> ldlt(ata);
      if (ldlt.info() != Eigen::Success) continue;
      const Eigen::Vector3d coef = ldlt.solve(aty);
      const double r = std::max(0.0, yy - coef.dot(aty));
      if (r < best.rss) {
        best.rss = r;
        best_coef = coef;
        best_c = c;
        best_s = s;
        best_inv = ata.inverse();
      }
    }
  }

  const double amp = std::hypot(best_coef[1], best_coef[2]);
  const double phase = std::atan2(best_coef[2], best_coef[1]);
  // k x0 = phase + 2 pi m, with x0 closest to the envelope center.
  const double period = 2.0 * M_PI / k;
  const double x0 = phase / k + period * std::round((best_c - phase / k) / period);
  best.params = {x0, best_s, best_coef[0] != 0.0 ? amp / best_coef[0] : 0.0, best_coef[0]};

  const double s2 = best.rss / static_cast<double>(std::max<std::size_t>(n - 3, 1));
  double var_amp = 0.0;
  if (amp > 0.0) {
    const Eigen::Vector2d g(best_coef[1] / amp, best_coef[2] / amp);
    var_amp = s2 * g.dot(best_inv.block<2, 2>(1, 1) * g);
  }
  best.vis_significance = var_amp > 0.0 ? amp / std::sqrt(var_amp) : std::numeric_limits<double>::infinity();
  return best;
}

struct Refined {
  Params params;
  double rss;
  Eigen::Matrix4d jtj;
  int iterations;
  bool converged;
};

Refined gauss_newton(Params p, const std::vector<double>& x, const std::vector<double>& y, double k) {
  const std::size_t n = x.size();
  double current = rss(p, k, x, y);
  Eigen::MatrixXd jac(static_cast<Eigen::Index>(n), 4);
  Eigen::VectorXd res(static_cast<Eigen::Index>(n));
  int iter = 0;
  bool converged = false;
  for (; iter < kFitMaxIterations; ++iter) {
    for (std::size_t i = 0; i < n; ++i) {
      const double d = x[i] - p.x0;
      const double s2 = p.sigma * p.sigma;
      const double e = std::exp(-d * d / (2.0 * s2));
      const double c = std::cos(k * d);
      const double s = std::sin(k * d);
      const auto r = static_cast<Eigen::Index>(i);
      jac(r, 0) = p.base * p.vis * e * (d / s2 * c + k * s);
      jac(r, 1) = p.base * p.vis * e * c * d * d / (s2 * p.sigma);
      jac(r, 2) = p.base * e * c;
      jac(r, 3) = 1.0 + p.vis * e * c;
      res[r] = y[i] - p.base * (1.0 + p.vis * e * c);
    }
    const Eigen::Vector4d step = (jac.transpose() * jac).ldlt().solve(jac.transpose() * res);
    const Eigen::Vector4d scale(1.0 + std::abs(p.x0), 1.0 + std::abs(p.sigma), 1.0 + std::abs(p.vis),
                                1.0 + std::abs(p.base));
    if ((step.cwiseAbs().array() <= kFitStepTolerance * scale.array()).all()) {
      converged = true;
      break;
    }
    double t = 1.0;
    bool accepted = false;
    for (int h = 0; h < 40; ++h, t *= 0.5) {
      const Params trial{p.x0 + t * step[0], p.sigma + t * step[1], p.vis + t * step[2], p.base + t * step[3]};
      const double r = rss(trial, k, x, y);
      if (r <= current * (1.0 + 1e-12)) {
        p = trial;
        current = r;
        accepted = true;
        break;
      }
    }
    if (!accepted) {
      // No descent along the Gauss-Newton direction: at a floating-point minimum.
      converged = true;
      break;
    }
  }
  return {p, current, jac.transpose() * jac, iter, converged};
}

}  // namespace

FockState mzi_input_state(double phi) {
  const Eigen::Vector2cd r = PolarizationQubit::right().vector();
  const Eigen::Vector2cd l = PolarizationQubit::left().vector();
  const std::array<PhotonSpec, 2> on3 = {PhotonSpec{Path::P3, r}, PhotonSpec{Path::P3, l}};
  const std::array<PhotonSpec, 2> on2 = {PhotonSpec{Path::P2, r}, PhotonSpec{Path::P2, l}};
  return (create_photons(on3) + create_photons(on2) * std::polar(1.0, phi)) * cplx(M_SQRT1_2);
}

double mzi_probability(double phi) {
  const FockState out = apply_linear(analyzer(), mzi_input_state(phi));
  const std::array<ModeId, 4> detectors = {ModeId{Path::A, Pol::H}, ModeId{Path::A, Pol::V},
                                           ModeId{Path::B, Pol::H}, ModeId{Path::B, Pol::V}};
  const OccupationVector hh{{ModeId{Path::A, Pol::H}, 1}, {ModeId{Path::B, Pol::H}, 1}};
  return project(out, detectors, hh, true).probability;
}

double mzi_probability_closed_form(double phi) { return (1.0 + std::cos(phi)) / 4.0; }

double ScanModel::probability(double x) const {
  const double d = x - x0;
  return 0.25 * (1.0 + std::exp(-d * d / (2.0 * sigma * sigma)) * std::cos(k * d));
}

std::vector<double> MziScan::fractions() const {
  if (!shots) return values;
  std::vector<double> f(values.size());
  std::transform(values.begin(), values.end(), f.begin(),
                 [n = static_cast<double>(*shots)](double c) { return c / n; });
  return f;
}

void MziScan::write_csv(std::ostream& out) const {
  out << (shots ? "position,counts\n" : "position,probability\n");
  const auto flags = out.flags();
  const auto prec = out.precision();
  out << std::setprecision(17);
  for (std::size_t i = 0; i < positions.size(); ++i) {
    out << positions[i] << ',';
    if (shots) {
      out << static_cast<std::uint64_t>(values[i]);
    } else {
      out << values[i];
    }
    out << '\n';
  }
  out.flags(flags);
  out.precision(prec);
}

std::vector<double> linspace(double lo, double hi, std::size_t n) {
  if (n < 2) throw std::invalid_argument("linspace needs at least two points");
  std::vector<double> v(n);
  for (std::size_t i = 0; i < n; ++i) {
    v[i] = lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(n - 1);
  }
  return v;
}

MziScan simulate_scan(const ScanModel& model, const std::vector<double>& positions,
                      std::optional<std::uint64_t> shots, std::uint64_t seed) {
  if (!(model.sigma > 0.0)) throw std::invalid_argument("coherence sigma must be positive");
  for (std::size_t i = 1; i < positions.size(); ++i) {
    if (!(positions[i] > positions[i - 1])) throw std::invalid_argument("positions must be strictly increasing");
  }
  MziScan scan{positions, {}, shots, model.k};
  scan.values.reserve(positions.size());
  std::mt19937_64 rng(seed);
  for (double x : positions) {
    const double p = model.probability(x);
    if (shots) {
      std::binomial_distribution<std::uint64_t> d(*shots, std::clamp(p, 0.0, 1.0));
      scan.values.push_back(static_cast<double>(d(rng)));
    } else {
      scan.values.push_back(p);
    }
  }
  return scan;
}

EnvelopeFit fit_envelope(const MziScan& scan) {
  const std::vector<double>& x = scan.positions;
  const std::vector<double> y = scan.fractions();
  const double k = scan.k;
  const std::size_t n = x.size();
  if (n < 8 || y.size() != n) throw DataError("envelope fit needs at least 8 scan points");
  if (!(k > 0.0)) throw DataError("wavenumber must be positive");
  for (std::size_t i = 1; i < n; ++i) {
    if (!(x[i] > x[i - 1])) throw DataError("scan positions must be strictly increasing");
  }
  if (x.back() - x.front() < 2.0 * M_PI / k) throw DataError("scan must span more than one fringe period");
  const auto [ymin, ymax] = std::minmax_element(y.begin(), y.end());
  if (*ymax - *ymin <= 1e-15 * std::max(1.0, std::abs(*ymax))) {
    throw UnidentifiableFit("constant scan data: no fringe, center unidentifiable", 0.0);
  }

  const CoarseFit coarse = coarse_search(x, y, k);
  if (coarse.vis_significance < 5.0 || std::abs(coarse.params.vis) < 1e-9) {
    throw UnidentifiableFit("no significant fringe: center unidentifiable", coarse.params.vis);
  }

  const double period = 2.0 * M_PI / k;
  Refined best = gauss_newton(coarse.params, x, y, k);
  // Neighbouring fringes are local minima; walk the fringe index while the
  // residual improves.
  for (const double dir : {-1.0, 1.0}) {
    for (;;) {
      Params shifted = best.params;
      shifted.x0 += dir * period;
      const Refined r = gauss_newton(shifted, x, y, k);
      if (!r.converged || !(r.rss < best.rss) || !best.converged) {
        if (r.converged && !best.converged) best = r;
        break;
      }
      best = r;
    }
  }
  if (!best.converged) throw ConvergenceError("envelope fit did not converge in 100 iterations");

  Params p = best.params;
  p.sigma = std::abs(p.sigma);
  const double dof = static_cast<double>(std::max<std::size_t>(n - 4, 1));
  const Eigen::Matrix4d cov = best.jtj.inverse() * (best.rss / dof);
  return {p.x0, p.sigma, p.vis, p.base, best.rss, std::sqrt(std::max(0.0, cov(0, 0))), best.iterations};
}

}  // namespace cnotsim
