#include "splatmotion/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>

#include "splatmotion/error.hpp"
#include "splatmotion/knn.hpp"
#include "splatmotion/parallel.hpp"

namespace splatmotion {

namespace {

// centres[frame][slot]
std::vector<std::vector<Vec3>> centres(const DynamicScene& dyn, const GaussianScene& scene) {
  dyn.validate();
  if (dyn.num_gaussians != scene.count()) throw Error(Errc::input, "dynamic scene does not match the scene");
  std::vector<std::vector<Vec3>> out(dyn.frame_count(), std::vector<Vec3>(dyn.selected_count()));
  for (std::size_t f = 0; f < dyn.frame_count(); ++f)
    for (std::size_t s = 0; s < dyn.selected_count(); ++s)
      out[f][s] = scene.positions[dyn.selected[s]] + dyn.frames[f][s].translation;
  return out;
}

// K_eval nearest canonical neighbours of every selected Gaussian, self excluded.
std::vector<std::vector<std::size_t>> canonical_neighbours(const DynamicScene& dyn, const GaussianScene& scene,
                                                           std::size_t k_eval) {
  std::vector<Vec3> canonical;
  canonical.reserve(dyn.selected_count());
  for (std::size_t idx : dyn.selected) canonical.push_back(scene.positions[idx]);
  const KnnIndex index(canonical);
  const std::size_t k = std::min(k_eval, canonical.empty() ? 0 : canonical.size() - 1);
  std::vector<std::vector<std::size_t>> out(canonical.size());
  for (std::size_t s = 0; s < canonical.size(); ++s) {
    for (const auto& nb : index.query(canonical[s], k + 1)) {
      if (nb.index == s || out[s].size() == k) continue;
      out[s].push_back(nb.index);
    }
  }
  return out;
}

Quat step_rotation(const DynamicScene& dyn, std::size_t frame, std::size_t slot) {
  return (dyn.frames[frame + 1][slot].rotation_delta * dyn.frames[frame][slot].rotation_delta.conjugate())
      .normalized();
}

struct Accumulator {
  double sum = 0.0;
  std::size_t count = 0;
};

// Per-slot partial sums reduced in slot order so the result is schedule independent.
double mean_over_slots(std::size_t slots, const std::function<Accumulator(std::size_t)>& body) {
  std::vector<Accumulator> partial(slots);
  parallel_for(slots, [&](std::size_t s) { partial[s] = body(s); });
  Accumulator total;
  for (const auto& p : partial) {
    total.sum += p.sum;
    total.count += p.count;
  }
  return total.count == 0 ? 0.0 : total.sum / static_cast<double>(total.count);
}

double cosine(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
  if (a.size() != b.size()) throw Error(Errc::input, "embedding dimensions differ");
  return a.dot(b) / (a.norm() * b.norm());
}

}  // namespace

double displacement(const DynamicScene& dyn, const GaussianScene& scene) {
  const auto mu = centres(dyn, scene);
  return mean_over_slots(dyn.selected_count(), [&](std::size_t s) {
    Accumulator acc;
    for (std::size_t f = 0; f + 1 < mu.size(); ++f) {
      acc.sum += (mu[f + 1][s] - mu[f][s]).norm();
      ++acc.count;
    }
    return acc;
  });
}

double momentum(const DynamicScene& dyn, const GaussianScene& scene) {
  const auto mu = centres(dyn, scene);
  return mean_over_slots(dyn.selected_count(), [&](std::size_t s) {
    Accumulator acc;
    for (std::size_t f = 1; f + 1 < mu.size(); ++f) {
      acc.sum += (mu[f + 1][s] - 2.0 * mu[f][s] + mu[f - 1][s]).squaredNorm();
      ++acc.count;
    }
    return acc;
  });
}

double isometry(const DynamicScene& dyn, const GaussianScene& scene, std::size_t k_eval) {
  const auto mu = centres(dyn, scene);
  const auto nbrs = canonical_neighbours(dyn, scene, k_eval);
  return mean_over_slots(dyn.selected_count(), [&](std::size_t i) {
    Accumulator acc;
    const Vec3& ci = scene.positions[dyn.selected[i]];
    for (std::size_t j : nbrs[i]) {
      const double rest = (ci - scene.positions[dyn.selected[j]]).norm();
      for (std::size_t f = 0; f < mu.size(); ++f) {
        if (f == dyn.t0_frame) continue;
        acc.sum += std::abs((mu[f][i] - mu[f][j]).norm() - rest);
        ++acc.count;
      }
    }
    return acc;
  });
}

double rigidity(const DynamicScene& dyn, const GaussianScene& scene, std::size_t k_eval) {
  const auto mu = centres(dyn, scene);
  const auto nbrs = canonical_neighbours(dyn, scene, k_eval);
  return mean_over_slots(dyn.selected_count(), [&](std::size_t i) {
    Accumulator acc;
    for (std::size_t j : nbrs[i]) {
      for (std::size_t f = 0; f + 1 < mu.size(); ++f) {
        const Quat rj = step_rotation(dyn, f, j);
        const Vec3 before = mu[f][i] - mu[f][j];
        const Vec3 after = mu[f + 1][i] - mu[f + 1][j];
        acc.sum += (after - rj * before).squaredNorm();
        ++acc.count;
      }
    }
    return acc;
  });
}

double rotation_similarity(const DynamicScene& dyn, const GaussianScene& scene, std::size_t k_eval) {
  centres(dyn, scene);
  const auto nbrs = canonical_neighbours(dyn, scene, k_eval);
  return mean_over_slots(dyn.selected_count(), [&](std::size_t i) {
    Accumulator acc;
    for (std::size_t j : nbrs[i]) {
      for (std::size_t f = 0; f + 1 < dyn.frame_count(); ++f) {
        const double d = step_rotation(dyn, f, i).dot(step_rotation(dyn, f, j));
        acc.sum += std::max(0.0, 1.0 - d * d);
        ++acc.count;
      }
    }
    return acc;
  });
}

void EmbeddingSet::validate() const {
  constexpr double kUnit = 1e-6;
  for (const auto& view : frame_embeddings)
    for (const auto& e : view)
      if (std::abs(e.norm() - 1.0) > kUnit) throw Error(Errc::input, "frame embedding is not unit length");
  if (text_embedding && std::abs(text_embedding->norm() - 1.0) > kUnit)
    throw Error(Errc::input, "text embedding is not unit length");
}

EmbeddingSet EmbeddingSet::from_arrays(const ShapedArray& frames, const std::optional<ShapedArray>& text) {
  std::size_t views = 1, count = 0, dim = 0;
  if (frames.shape.size() == 3) {
    views = frames.shape[0];
    count = frames.shape[1];
    dim = frames.shape[2];
  } else if (frames.shape.size() == 2) {
    count = frames.shape[0];
    dim = frames.shape[1];
  } else {
    throw Error(Errc::input, "frame embeddings need shape [views, frames, dim] or [frames, dim]");
  }
  EmbeddingSet set;
  set.frame_embeddings.assign(views, {});
  for (std::size_t v = 0; v < views; ++v) {
    for (std::size_t f = 0; f < count; ++f) {
      Eigen::VectorXd e(static_cast<Eigen::Index>(dim));
      for (std::size_t d = 0; d < dim; ++d) e[static_cast<Eigen::Index>(d)] = frames.values[(v * count + f) * dim + d];
      set.frame_embeddings[v].push_back(std::move(e));
    }
  }
  if (text) {
    if (text->element_count() != dim) throw Error(Errc::input, "text embedding dimension differs from frames");
    set.text_embedding = Eigen::Map<const Eigen::VectorXd>(text->values.data(), static_cast<Eigen::Index>(dim));
  }
  return set;
}

double clip_text_score(const EmbeddingSet& embeddings) {
  if (!embeddings.text_embedding) throw Error(Errc::input, "text embedding missing");
  double sum = 0.0;
  std::size_t count = 0;
  for (const auto& view : embeddings.frame_embeddings) {
    for (const auto& e : view) {
      sum += cosine(e, *embeddings.text_embedding);
      ++count;
    }
  }
  if (count == 0) throw Error(Errc::input, "no frame embeddings");
  return sum / static_cast<double>(count);
}

double clip_temporal_score(const EmbeddingSet& embeddings) {
  if (embeddings.frame_embeddings.empty()) throw Error(Errc::input, "no frame embeddings");
  double total = 0.0;
  for (const auto& view : embeddings.frame_embeddings) {
    if (view.size() < 2) throw Error(Errc::input, "temporal score needs at least two frames per view");
    double sum = 0.0;
    for (std::size_t f = 0; f + 1 < view.size(); ++f) sum += cosine(view[f], view[f + 1]);
    total += sum / static_cast<double>(view.size() - 1);
  }
  return total / static_cast<double>(embeddings.frame_embeddings.size());
}

MetricReport evaluate(const DynamicScene& dyn, const GaussianScene& scene, std::size_t k_eval,
                      const EmbeddingSet* embeddings) {
  MetricReport report;
  report.displacement = displacement(dyn, scene);
  report.rigidity = rigidity(dyn, scene, k_eval);
  report.momentum = momentum(dyn, scene);
  report.isometry = isometry(dyn, scene, k_eval);
  report.rotation_similarity = rotation_similarity(dyn, scene, k_eval);
  if (embeddings) {
    embeddings->validate();
    if (embeddings->text_embedding) report.clip_text = clip_text_score(*embeddings);
    report.clip_temporal = clip_temporal_score(*embeddings);
  }
  return report;
}

namespace {

// 1 + number of entries strictly better.
template <typename Get>
std::vector<int> competition_ranks(std::span<const MetricReport> reports, Get get, bool higher_is_better) {
  std::vector<int> ranks(reports.size(), 1);
  for (std::size_t a = 0; a < reports.size(); ++a)
    for (std::size_t b = 0; b < reports.size(); ++b) {
      const double va = get(reports[a]);
      const double vb = get(reports[b]);
      if (higher_is_better ? vb > va : vb < va) ++ranks[a];
    }
  return ranks;
}

}  // namespace

RankedComparison rank_reports(std::span<const MetricReport> reports) {
  RankedComparison cmp;
  cmp.entries.resize(reports.size());
  if (reports.empty()) return cmp;

  const auto disp = competition_ranks(reports, [](const auto& r) { return r.displacement; }, true);
  const auto rig = competition_ranks(reports, [](const auto& r) { return r.rigidity; }, false);
  const auto mom = competition_ranks(reports, [](const auto& r) { return r.momentum; }, false);
  const auto iso = competition_ranks(reports, [](const auto& r) { return r.isometry; }, false);
  const auto rot = competition_ranks(reports, [](const auto& r) { return r.rotation_similarity; }, false);

  const bool has_text = std::all_of(reports.begin(), reports.end(), [](const auto& r) { return r.clip_text.has_value(); });
  const bool has_temporal =
      std::all_of(reports.begin(), reports.end(), [](const auto& r) { return r.clip_temporal.has_value(); });
  std::vector<int> text, temporal;
  if (has_text) text = competition_ranks(reports, [](const auto& r) { return *r.clip_text; }, true);
  if (has_temporal) temporal = competition_ranks(reports, [](const auto& r) { return *r.clip_temporal; }, true);

  for (std::size_t i = 0; i < reports.size(); ++i) {
    auto& e = cmp.entries[i];
    e.displacement = disp[i];
    e.rigidity = rig[i];
    e.momentum = mom[i];
    e.isometry = iso[i];
    e.rotation_similarity = rot[i];
    e.motion_amount = disp[i];
    e.geometry = (rig[i] + mom[i] + iso[i] + rot[i]) / 4.0;
    double categories = e.motion_amount + e.geometry;
    int category_count = 2;
    if (has_text || has_temporal) {
      double sum = 0.0;
      int n = 0;
      if (has_text) {
        e.clip_text = text[i];
        sum += text[i];
        ++n;
      }
      if (has_temporal) {
        e.clip_temporal = temporal[i];
        sum += temporal[i];
        ++n;
      }
      e.appearance = sum / n;
      categories += *e.appearance;
      ++category_count;
    }
    e.overall_score = categories / category_count;
  }
  for (std::size_t a = 0; a < reports.size(); ++a) {
    int rank = 1;
    for (std::size_t b = 0; b < reports.size(); ++b)
      if (cmp.entries[b].overall_score < cmp.entries[a].overall_score) ++rank;
    cmp.entries[a].overall_rank = rank;
  }
  return cmp;
}

}  // namespace splatmotion
