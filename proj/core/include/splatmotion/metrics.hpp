#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "splatmotion/dynamic_scene.hpp"
#include "splatmotion/formats.hpp"
#include "splatmotion/scene.hpp"

namespace splatmotion {

inline constexpr std::size_t kEvalNeighbors = 20;

struct MetricReport {
  double displacement = 0.0;
  double rigidity = 0.0;
  double momentum = 0.0;
  double isometry = 0.0;
  double rotation_similarity = 0.0;
  std::optional<double> clip_text;
  std::optional<double> clip_temporal;
};

/// frame_embeddings[view][frame]; all vectors unit length.
struct EmbeddingSet {
  std::vector<std::vector<Eigen::VectorXd>> frame_embeddings;
  std::optional<Eigen::VectorXd> text_embedding;

  void validate() const;
  /// Shape [views, frames, dim] or [frames, dim] for a single view.
  static EmbeddingSet from_arrays(const ShapedArray& frames, const std::optional<ShapedArray>& text);
};

/// Mean |mu_{t+1} - mu_t| over selected Gaussians and consecutive frames.
double displacement(const DynamicScene& dyn, const GaussianScene& scene);

/// Mean squared second difference of the centres over interior frames.
double momentum(const DynamicScene& dyn, const GaussianScene& scene);

/// Mean | |mu_i - mu_j|_t - |mu_i - mu_j|_canonical | over the K_eval
/// canonical neighbours of every Gaussian and every non-canonical frame.
double isometry(const DynamicScene& dyn, const GaussianScene& scene, std::size_t k_eval = kEvalNeighbors);

/// Mean |(mu_i - mu_j)_{t+1} - R_j (mu_i - mu_j)_t|^2 with R_j the
/// neighbour's rotation delta over the step.
double rigidity(const DynamicScene& dyn, const GaussianScene& scene, std::size_t k_eval = kEvalNeighbors);

/// Mean 1 - <q_i, q_j>^2 of per-step rotation deltas of neighbouring pairs.
double rotation_similarity(const DynamicScene& dyn, const GaussianScene& scene,
                           std::size_t k_eval = kEvalNeighbors);

double clip_text_score(const EmbeddingSet& embeddings);
double clip_temporal_score(const EmbeddingSet& embeddings);

MetricReport evaluate(const DynamicScene& dyn, const GaussianScene& scene, std::size_t k_eval = kEvalNeighbors,
                      const EmbeddingSet* embeddings = nullptr);

/// Competition ranks (1 = best) per metric, category means and the overall
/// rank over the category means, in the layout of an ablation table.
struct RankedComparison {
  struct Entry {
    int displacement = 0;
    int rigidity = 0;
    int momentum = 0;
    int isometry = 0;
    int rotation_similarity = 0;
    std::optional<int> clip_text;
    std::optional<int> clip_temporal;
    double motion_amount = 0.0;
    double geometry = 0.0;
    std::optional<double> appearance;
    double overall_score = 0.0;
    int overall_rank = 0;
  };
  std::vector<Entry> entries;
};

RankedComparison rank_reports(std::span<const MetricReport> reports);

}  // namespace splatmotion
