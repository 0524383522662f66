#pragma once

#include <cmath>
#include <random>
#include <vector>

#include "volray/field.hpp"
#include "volray/quadrature.hpp"

namespace volray::test {

inline Ray ray_x(double y = 0.5, double z = 0.5, double x0 = -1.0) {
  Ray r;
  r.origin = {x0, y, z};
  r.dir = {1.0, 0.0, 0.0};
  r.t_near = 0.0;
  r.t_far = 10.0;
  return r;
}

inline Aabb unit_box() { return {{0.0, 0.0, 0.0}, {1.0, 1.0, 1.0}}; }

/// Independent compositing oracle: explicit products, no shared code path.
struct Oracle {
  Rgb color;
  double alpha = 0.0;
  double depth = 0.0;
  double transmittance = 1.0;
  double distortion = 0.0;
};

inline Oracle oracle(const std::vector<SampleInterval>& bins) {
  Oracle o;
  std::vector<double> w;
  for (std::size_t i = 0; i < bins.size(); ++i) {
    double t = 1.0;
    for (std::size_t j = 0; j < i; ++j) t *= std::exp(-bins[j].sigma * (bins[j].t1 - bins[j].t0));
    const double a = 1.0 - std::exp(-bins[i].sigma * (bins[i].t1 - bins[i].t0));
    w.push_back(t * a);
    o.color += bins[i].rgb * (t * a);
    o.alpha += t * a;
    o.depth += t * a * 0.5 * (bins[i].t0 + bins[i].t1);
    o.transmittance = t * (1.0 - a);
  }
  for (std::size_t i = 0; i < bins.size(); ++i) {
    for (std::size_t j = i + 1; j < bins.size(); ++j) {
      o.distortion += 2.0 * w[i] * w[j] * std::abs(bins[i].m - bins[j].m);
    }
  }
  return o;
}

inline bool close(double a, double b, double rel) { return std::abs(a - b) <= rel * (1.0 + std::abs(b)); }

}  // namespace volray::test
