#include "fluxnv/inference.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <numeric>
#include <stdexcept>
#include <vector>

#include <Eigen/Dense>

#include "fluxnv/errors.hpp"

namespace fluxnv {

namespace {

constexpr double kTwoPiLocal = 6.283185307179586476925287;
constexpr double kTauMin = 0.1;
constexpr double kTauMax = 1e5;

struct Series {
  std::vector<double> t;
  std::vector<double> y;
  double dt = 0.0;
};

Series check_input(std::span<const double> times, std::span<const double> values) {
  if (times.size() != values.size()) {
    throw std::invalid_argument("fit_damped_cosine: time/value size mismatch");
  }
  if (times.size() < 16) throw NumericError("fit_damped_cosine: insufficient samples");
  Series s;
  s.t.assign(times.begin(), times.end());
  s.y.assign(values.begin(), values.end());
  s.dt = (s.t.back() - s.t.front()) / static_cast<double>(s.t.size() - 1);
  if (s.dt <= 0.0) throw std::invalid_argument("fit_damped_cosine: times must increase");
  for (std::size_t i = 1; i < s.t.size(); ++i) {
    if (std::abs(s.t[i] - s.t[i - 1] - s.dt) > 1e-6 * s.dt) {
      throw std::invalid_argument("fit_damped_cosine: non-uniform sampling");
    }
  }
  return s;
}

// Fourier seed: power-spectrum peak refined by a three-point parabola.
double fourier_peak_frequency(const Series& s, double mean) {
  const std::size_t n = s.t.size();
  const std::size_t half = n / 2;
  std::vector<double> power(half + 1, 0.0);
  for (std::size_t k = 1; k <= half; ++k) {
    std::complex<double> acc(0.0, 0.0);
    const double w = kTwoPiLocal * static_cast<double>(k) / static_cast<double>(n);
    for (std::size_t j = 0; j < n; ++j) {
      acc += (s.y[j] - mean) * std::polar(1.0, -w * static_cast<double>(j));
    }
    power[k] = std::norm(acc);
  }
  std::size_t peak = 1;
  for (std::size_t k = 2; k <= half; ++k) {
    if (power[k] > power[peak]) peak = k;
  }
  double total = std::accumulate(power.begin(), power.end(), 0.0);
  if (total <= 0.0 || peak == 0) {
    throw NumericError("fit_damped_cosine: no oscillation detected (Fourier peak at 0)");
  }
  double k_refined = static_cast<double>(peak);
  if (peak + 1 <= half && peak >= 2) {
    const double pm = power[peak - 1];
    const double p0 = power[peak];
    const double pp = power[peak + 1];
    const double denom = pm - 2.0 * p0 + pp;
    if (denom < 0.0) k_refined += 0.5 * (pm - pp) / denom;
  }
  return k_refined / (static_cast<double>(n) * s.dt);
}

struct Seed {
  double amplitude, tau, frequency, phase, offset;
};

Seed initial_guess(const Series& s) {
  const std::size_t n = s.t.size();
  const double mean = std::accumulate(s.y.begin(), s.y.end(), 0.0) / static_cast<double>(n);
  double variance = 0.0;
  for (double v : s.y) variance += (v - mean) * (v - mean);
  variance /= static_cast<double>(n);
  if (std::sqrt(variance) < 1e-12) {
    throw NumericError("fit_damped_cosine: no oscillation detected (Fourier peak at 0)");
  }

  const double f0 = fourier_peak_frequency(s, mean);
  const double duration = s.t.back() - s.t.front();
  if (duration * f0 < 4.0) {
    throw NumericError("fit_damped_cosine: insufficient samples (fewer than 4 periods)");
  }
  if (1.0 / (f0 * s.dt) < 8.0) {
    throw NumericError("fit_damped_cosine: insufficient samples (fewer than 8 points per period)");
  }

  // Demodulate at the seed frequency; block means over one period give the
  // envelope for the log-linear decay regression.
  std::vector<std::complex<double>> z(n);
  for (std::size_t j = 0; j < n; ++j) {
    z[j] = (s.y[j] - mean) * std::polar(1.0, -kTwoPiLocal * f0 * (s.t[j] - s.t.front()));
  }
  const std::size_t window =
      std::max<std::size_t>(4, static_cast<std::size_t>(std::round(1.0 / (f0 * s.dt))));
  std::vector<double> block_t, block_log_a;
  double a_first = 0.0;
  for (std::size_t start = 0; start + window <= n; start += window) {
    std::complex<double> acc(0.0, 0.0);
    for (std::size_t j = start; j < start + window; ++j) acc += z[j];
    const double a = 2.0 * std::abs(acc) / static_cast<double>(window);
    if (block_t.empty()) a_first = a;
    if (a > 1e-6 * a_first && a > 0.0) {
      block_t.push_back(s.t[start + window / 2] - s.t.front());
      block_log_a.push_back(std::log(a));
    }
  }

  double tau = duration;  // fallback when the envelope is flat or too short
  double amp = std::sqrt(2.0 * variance);
  if (block_t.size() >= 2) {
    const double m = static_cast<double>(block_t.size());
    const double st = std::accumulate(block_t.begin(), block_t.end(), 0.0);
    const double sl = std::accumulate(block_log_a.begin(), block_log_a.end(), 0.0);
    double stt = 0.0, stl = 0.0;
    for (std::size_t k = 0; k < block_t.size(); ++k) {
      stt += block_t[k] * block_t[k];
      stl += block_t[k] * block_log_a[k];
    }
    const double denom = m * stt - st * st;
    if (denom > 0.0) {
      const double slope = (m * stl - st * sl) / denom;
      const double intercept = (sl - slope * st) / m;
      amp = std::exp(intercept);
      tau = slope < 0.0 ? -1.0 / slope : kTauMax;
    }
  }
  tau = std::clamp(tau, kTauMin, kTauMax);

  std::complex<double> phase_acc(0.0, 0.0);
  for (std::size_t j = 0; j < n; ++j) phase_acc += z[j];
  const double phase = std::arg(phase_acc);

  return {amp, tau, f0, phase, mean};
}

}  // namespace

DampedCosineFit fit_damped_cosine(std::span<const double> times_ns,
                                  std::span<const double> values) {
  const Series s = check_input(times_ns, values);
  const std::size_t n = s.t.size();
  Seed p = initial_guess(s);

  double y_scale = 0.0;
  for (double v : s.y) y_scale = std::max(y_scale, std::abs(v));
  const double grad_tol = 1e-10 * std::max(1.0, y_scale);

  auto sse_of = [&](const Seed& q) {
    double sse = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      const double t = s.t[j] - s.t.front();
      const double m =
          q.amplitude * std::exp(-t / q.tau) * std::cos(kTwoPiLocal * q.frequency * t + q.phase) +
          q.offset;
      const double r = m - s.y[j];
      sse += r * r;
    }
    return sse;
  };

  double sse = sse_of(p);
  double lambda = 1e-3;
  int iterations = 0;
  bool converged = false;

  Eigen::MatrixXd jac(n, 5);
  Eigen::VectorXd res(n);
  for (int it = 0; it < 400; ++it) {
    iterations = it + 1;
    for (std::size_t j = 0; j < n; ++j) {
      const double t = s.t[j] - s.t.front();
      const double env = std::exp(-t / p.tau);
      const double theta = kTwoPiLocal * p.frequency * t + p.phase;
      const double c = std::cos(theta);
      const double sn = std::sin(theta);
      res(j) = p.amplitude * env * c + p.offset - s.y[j];
      jac(j, 0) = env * c;
      jac(j, 1) = p.amplitude * env * c * t / (p.tau * p.tau);
      jac(j, 2) = -p.amplitude * env * sn * kTwoPiLocal * t;
      jac(j, 3) = -p.amplitude * env * sn;
      jac(j, 4) = 1.0;
    }
    const Eigen::VectorXd grad = jac.transpose() * res;
    if (grad.norm() < grad_tol) {
      converged = true;
      break;
    }
    const Eigen::MatrixXd jtj = jac.transpose() * jac;
    bool stepped = false;
    for (int attempt = 0; attempt < 30; ++attempt) {
      Eigen::MatrixXd damped = jtj;
      for (int k = 0; k < 5; ++k) damped(k, k) += lambda * std::max(jtj(k, k), 1e-12);
      const Eigen::VectorXd step = damped.ldlt().solve(-grad);
      Seed q = p;
      q.amplitude += step(0);
      q.tau = std::clamp(q.tau + step(1), kTauMin, kTauMax);
      q.frequency += step(2);
      q.phase += step(3);
      q.offset += step(4);
      const double sse_new = sse_of(q);
      if (sse_new <= sse) {
        const double improvement = sse - sse_new;
        p = q;
        sse = sse_new;
        lambda = std::max(lambda / 3.0, 1e-14);
        stepped = true;
        if (improvement <= 1e-30 * std::max(sse, 1e-300)) converged = true;
        break;
      }
      lambda *= 10.0;
    }
    if (converged) break;
    if (!stepped) {
      converged = true;  // stuck at numerical floor; gradient check below decides
      break;
    }
  }

  if (!converged && iterations >= 400) {
    throw NumericError("fit_damped_cosine: no convergence after max iterations");
  }

  if (p.amplitude < 0.0) {
    p.amplitude = -p.amplitude;
    p.phase += std::acos(-1.0);
  }
  if (p.frequency < 0.0) {
    p.frequency = -p.frequency;
    p.phase = -p.phase;
  }
  p.phase = std::remainder(p.phase, kTwoPiLocal);

  DampedCosineFit fit;
  fit.amplitude = p.amplitude;
  fit.decay_ns = p.tau;
  fit.frequency_ghz = p.frequency;
  fit.phase_rad = p.phase;
  fit.offset = p.offset;
  fit.residual_rms = std::sqrt(sse / static_cast<double>(n));
  fit.iterations = iterations;
  return fit;
}

double estimate_ensemble_size(double g_ens_ghz, double g_single_ghz) {
  if (g_single_ghz <= 0.0) {
    throw std::invalid_argument("estimate_ensemble_size: g_single must be > 0");
  }
  return g_ens_ghz * g_ens_ghz / (2.0 * g_single_ghz * g_single_ghz);
}

double density_cross_check(double density_per_cm3, double area_um2, double thickness_um) {
  if (density_per_cm3 < 0.0 || area_um2 < 0.0 || thickness_um < 0.0) {
    throw std::invalid_argument("density_cross_check: inputs must be >= 0");
  }
  return density_per_cm3 * area_um2 * thickness_um * 1e-12;
}

ConsistencyReport consistency_report(double spectro_gap_ghz, const DampedCosineFit& rabi_fit,
                                     double g_single_ghz, double density_per_cm3,
                                     double area_um2, double thickness_um) {
  ConsistencyReport report;
  report.spectro_gap_ghz = spectro_gap_ghz;
  report.rabi_frequency_ghz = rabi_fit.frequency_ghz;
  report.n_from_density = density_cross_check(density_per_cm3, area_um2, thickness_um);
  if (spectro_gap_ghz <= 0.0 || rabi_fit.frequency_ghz <= 0.0) {
    report.coupling_absent = true;
    report.note = "no avoided crossing / no oscillation: qubit-ensemble coupling absent";
    return report;
  }
  report.gap_frequency_rel_discrepancy =
      std::abs(spectro_gap_ghz - rabi_fit.frequency_ghz) / spectro_gap_ghz;
  report.n_from_formula = estimate_ensemble_size(spectro_gap_ghz, g_single_ghz);
  report.n_rel_discrepancy =
      std::abs(report.n_from_formula - report.n_from_density) /
      std::max(report.n_from_formula, report.n_from_density);
  return report;
}

}  // namespace fluxnv
