#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <optional>
#include <random>
#include <vector>

#include "tailcast/common.hpp"
#include "tailcast/series.hpp"

namespace tailcast {

struct LorenzParams {
  double sigma = 10.0;
  double rho = 28.0;
  double beta = 8.0 / 3.0;
};

using LorenzState = std::array<double, 3>;

inline LorenzState lorenz_derivative(const LorenzState& s, const LorenzParams& p) {
  return {p.sigma * (s[1] - s[0]), s[0] * (p.rho - s[2]) - s[1], s[0] * s[1] - p.beta * s[2]};
}

/// One classical fourth-order Runge-Kutta step.
inline LorenzState lorenz_rk4_step(const LorenzState& s, double dt, const LorenzParams& p = {}) {
  auto axpy = [](const LorenzState& a, double h, const LorenzState& k) {
    return LorenzState{a[0] + h * k[0], a[1] + h * k[1], a[2] + h * k[2]};
  };
  const LorenzState k1 = lorenz_derivative(s, p);
  const LorenzState k2 = lorenz_derivative(axpy(s, dt / 2, k1), p);
  const LorenzState k3 = lorenz_derivative(axpy(s, dt / 2, k2), p);
  const LorenzState k4 = lorenz_derivative(axpy(s, dt, k3), p);
  LorenzState out;
  for (std::size_t i = 0; i < 3; ++i) out[i] = s[i] + dt / 6.0 * (k1[i] + 2 * k2[i] + 2 * k3[i] + k4[i]);
  return out;
}

inline constexpr std::size_t kLorenzTransient = 1000;

/// x-coordinate of the Lorenz system after a 1000-step transient. A seed, when
/// given, perturbs the initial state by N(0, 1e-3) per coordinate.
inline TimeSeries gen_lorenz(std::size_t n, double dt, LorenzState initial = {1.0, 1.0, 1.0},
                             std::optional<std::uint64_t> seed = std::nullopt, const LorenzParams& params = {}) {
  if (n < 1) throw Error("gen_lorenz: n must be >= 1");
  if (!(dt > 0.0)) throw Error("gen_lorenz: dt must be positive");
  if (seed) {
    std::mt19937_64 rng(*seed);
    std::normal_distribution<double> g(0.0, 1e-3);
    for (double& v : initial) v += g(rng);
  }
  LorenzState s = initial;
  std::vector<double> xs;
  xs.reserve(n);
  for (std::size_t step = 0; step < kLorenzTransient + n; ++step) {
    s = lorenz_rk4_step(s, dt, params);
    if (!std::isfinite(s[0]) || !std::isfinite(s[1]) || !std::isfinite(s[2]))
      throw Error("gen_lorenz: state diverged at step " + std::to_string(step) + " (dt too large?)");
    if (step >= kLorenzTransient) xs.push_back(s[0]);
  }
  return TimeSeries(std::move(xs), "lorenz");
}

/// Occasional decaying bursts layered on a sinusoid: at each step a burst
/// starts with probability `rate`, adding height * exp(-k / decay) for k >= 0.
struct SpikeParams {
  double rate = 0.0;
  double height = 0.0;
  double decay = 2.0;
};

/// amplitude * sin(2 pi t / period) + N(0, noise_sd^2), plus optional bursts.
inline TimeSeries gen_sine(std::size_t n, double period, double amplitude, double noise_sd, std::uint64_t seed,
                           const SpikeParams& spikes = {}) {
  if (n < 1) throw Error("gen_sine: n must be >= 1");
  if (!(period > 0.0)) throw Error("gen_sine: period must be positive");
  if (noise_sd < 0.0) throw Error("gen_sine: noise_sd must be >= 0");
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> noise(0.0, 1.0);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::vector<double> v(n);
  for (std::size_t t = 0; t < n; ++t) {
    v[t] = amplitude * std::sin(2.0 * std::numbers::pi * static_cast<double>(t) / period);
    if (noise_sd > 0.0) v[t] += noise_sd * noise(rng);
  }
  if (spikes.rate > 0.0) {
    for (std::size_t t = 0; t < n; ++t) {
      if (unit(rng) >= spikes.rate) continue;
      for (std::size_t k = 0; t + k < n; ++k) {
        const double add = spikes.height * std::exp(-static_cast<double>(k) / spikes.decay);
        if (add < 1e-3 * spikes.height) break;
        v[t + k] += add;
      }
    }
  }
  return TimeSeries(std::move(v), spikes.rate > 0.0 ? "spiky-sine" : "sine");
}

}  // namespace tailcast
