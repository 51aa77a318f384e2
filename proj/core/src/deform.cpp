#include "splatmotion/deform.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "splatmotion/error.hpp"
#include "splatmotion/knn.hpp"
#include "splatmotion/parallel.hpp"
#include "splatmotion/umeyama.hpp"

namespace splatmotion {

std::vector<double> knn_weights(std::span<const double> distances, double tau) {
  if (distances.empty()) throw Error(Errc::input, "knn_weights needs at least one distance");
  if (!(tau >= 0.0)) throw Error(Errc::input, "temperature must be non-negative");
  // exp(-tau d) peaks at the smallest distance
  const double nearest = *std::min_element(distances.begin(), distances.end());
  std::vector<double> w(distances.size());
  double total = 0.0;
  for (std::size_t j = 0; j < distances.size(); ++j) {
    w[j] = std::exp(-tau * (distances[j] - nearest));
    total += w[j];
  }
  for (double& wj : w) wj /= total;
  return w;
}

Vec3 linear_transfer(std::span<const Vec3> displacements, std::span<const double> weights) {
  if (displacements.size() != weights.size()) throw Error(Errc::input, "displacements and weights differ in length");
  Vec3 t = Vec3::Zero();
  for (std::size_t j = 0; j < displacements.size(); ++j) t += weights[j] * displacements[j];
  return t;
}

GaussianStep rigid_transfer(const Vec3& mu, std::span<const Vec3> x, std::span<const Vec3> y,
                            std::span<const double> weights) {
  GaussianStep step;
  if (const auto sim = weighted_umeyama(x, y, weights)) {
    step.position = sim->apply(mu);
    step.rotation_delta = Quat(sim->rotation).normalized();
    step.scale_factor = sim->scale;
    return step;
  }
  std::vector<Vec3> displacement(x.size());
  double total = 0.0;
  for (std::size_t j = 0; j < x.size(); ++j) {
    displacement[j] = y[j] - x[j];
    total += weights[j];
  }
  step.position = mu;
  if (total > 0.0) step.position += linear_transfer(displacement, weights) / total;
  step.fallback = true;
  return step;
}

std::size_t schedule_K(int videos_lifted, std::size_t available) {
  if (videos_lifted < 1) throw Error(Errc::input, "schedule_K needs at least one lifted video");
  const std::size_t ramp = kMinNeighbors + 25 * static_cast<std::size_t>(videos_lifted - 1);
  return std::min({kMaxNeighbors, ramp, available});
}

double default_tau(std::span<const Vec3> anchors_at_t0) {
  if (anchors_at_t0.size() < 2) return 0.0;
  const KnnIndex index(std::vector<Vec3>(anchors_at_t0.begin(), anchors_at_t0.end()));
  Vec3 lo = anchors_at_t0.front();
  Vec3 hi = lo;
  for (const auto& p : anchors_at_t0) {
    lo = lo.cwiseMin(p);
    hi = hi.cwiseMax(p);
  }
  // The same point lifted from several views lands (almost) on top of itself.
  const double coincident = 1e-6 * (hi - lo).maxCoeff();
  std::vector<double> spacing;
  for (const auto& p : anchors_at_t0) {
    for (std::size_t k = 8;; k = std::min(index.size(), 4 * k)) {
      const auto nbrs = index.query(p, k);
      const auto it = std::find_if(nbrs.begin(), nbrs.end(), [&](const Neighbor& nb) { return nb.distance > coincident; });
      if (it != nbrs.end()) {
        spacing.push_back(it->distance);
        break;
      }
      if (k >= index.size()) break;
    }
  }
  if (spacing.empty()) return 0.0;
  const auto mid = spacing.begin() + static_cast<std::ptrdiff_t>(spacing.size() / 2);
  std::nth_element(spacing.begin(), mid, spacing.end());
  double median = *mid;
  if (spacing.size() % 2 == 0) median = 0.5 * (median + *std::max_element(spacing.begin(), mid));
  return 10.0 / median;
}

namespace {

struct Neighborhood {
  std::vector<std::size_t> anchors;
  std::vector<double> weights;
};

struct State {
  Vec3 position;
  Quat rotation = Quat::Identity();
  double scale = 1.0;
};

State advance(const State& from, const Neighborhood& hood, std::span<const AnchorTrajectory> anchors,
              std::size_t a, std::size_t b, const TransferConfig& cfg) {
  std::vector<Vec3> x, y;
  std::vector<double> w;
  double total = 0.0;
  for (std::size_t n = 0; n < hood.anchors.size(); ++n) {
    const auto& anchor = anchors[hood.anchors[n]];
    if (!anchor.observed[a] || !anchor.observed[b]) continue;
    x.push_back(anchor.positions[a]);
    y.push_back(anchor.positions[b]);
    w.push_back(hood.weights[n]);
    total += hood.weights[n];
  }
  if (x.empty() || !(total > 0.0)) return from;
  for (double& wj : w) wj /= total;

  State next = from;
  if (cfg.mode == TransferMode::rigid) {
    const GaussianStep step = rigid_transfer(from.position, x, y, w);
    next.position = step.position;
    next.rotation = (step.rotation_delta * from.rotation).normalized();
    next.scale = from.scale * step.scale_factor;
    return next;
  }

  std::vector<Vec3> displacement(x.size());
  for (std::size_t j = 0; j < x.size(); ++j) displacement[j] = y[j] - x[j];
  const Vec3 t = linear_transfer(displacement, w);
  next.position = from.position + t;
  if (cfg.estimate_rotation_scale) {
    std::vector<Vec3> local_x(x.size()), local_y(y.size());
    for (std::size_t j = 0; j < x.size(); ++j) {
      local_x[j] = x[j] - from.position;
      local_y[j] = y[j] - from.position;
    }
    if (const auto rs = rotation_with_fixed_translation(local_x, local_y, w, t)) {
      next.rotation = (Quat(rs->rotation) * from.rotation).normalized();
      next.scale = from.scale * rs->scale;
    }
  }
  return next;
}

}  // namespace

DynamicScene build_dynamic_scene(const GaussianScene& scene, const SelectionMask& selection,
                                 std::span<const AnchorTrajectory> anchors, const TransferConfig& cfg) {
  if (anchors.empty()) throw Error(Errc::empty_guidance, "no anchor trajectories to transfer motion from");
  if (selection.size() != scene.count()) throw Error(Errc::input, "selection length differs from the scene");
  const auto selected = selection.indices();
  if (selected.empty()) throw Error(Errc::input, "selection is empty");
  if (cfg.neighbors == 0) throw Error(Errc::input, "neighbour count must be positive");

  const std::size_t steps = anchors.front().timestep_count();
  const std::size_t t0 = anchors.front().t0_global;
  for (const auto& anchor : anchors) {
    if (anchor.timestep_count() != steps || anchor.observed.size() != steps || anchor.t0_global != t0)
      throw Error(Errc::input, "anchor trajectories are not on a common timeline");
    if (t0 >= steps || !anchor.observed[t0]) throw Error(Errc::input, "anchor not observed at t0");
  }

  std::vector<Vec3> at_t0;
  at_t0.reserve(anchors.size());
  for (const auto& anchor : anchors) at_t0.push_back(anchor.positions[t0]);
  const double tau = cfg.tau.value_or(default_tau(at_t0));
  if (!(tau >= 0.0)) throw Error(Errc::input, "temperature must be non-negative");
  const KnnIndex index(at_t0);
  const std::size_t k = std::min(cfg.neighbors, anchors.size());

  DynamicScene dyn;
  dyn.num_gaussians = scene.count();
  dyn.selected = selected;
  dyn.t0_frame = t0;
  dyn.mode = cfg.mode;
  dyn.neighbors = k;
  dyn.tau = tau;
  for (std::size_t s = 0; s < steps; ++s) dyn.timeline.push_back(static_cast<int>(s) - static_cast<int>(t0));
  dyn.frames.assign(steps, std::vector<GaussianUpdate>(selected.size()));

  parallel_for(selected.size(), [&](std::size_t slot) {
    const Vec3& mu = scene.positions[selected[slot]];
    Neighborhood hood;
    std::vector<double> distances;
    for (const auto& nb : index.query(mu, k)) {
      hood.anchors.push_back(nb.index);
      distances.push_back(nb.distance);
    }
    hood.weights = knn_weights(distances, tau);

    auto record = [&](std::size_t frame, const State& state) {
      GaussianUpdate& u = dyn.frames[frame][slot];
      u.translation = state.position - mu;
      u.rotation_delta = state.rotation;
      u.scale_factor = state.scale;
    };
    const State origin{mu};
    record(t0, origin);
    State state = origin;
    for (std::size_t f = t0; f + 1 < steps; ++f) {
      state = advance(state, hood, anchors, f, f + 1, cfg);
      record(f + 1, state);
    }
    state = origin;
    for (std::size_t f = t0; f > 0; --f) {
      state = advance(state, hood, anchors, f, f - 1, cfg);
      record(f - 1, state);
    }
  });
  return dyn;
}

}  // namespace splatmotion
