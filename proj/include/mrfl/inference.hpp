#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "mrfl/corpus.hpp"
#include "mrfl/model.hpp"

namespace mrfl {

inline constexpr std::size_t kEnsembleSize = 5;

// A frozen model together with the key used to rank it.
struct RankedModel {
  const Model* model = nullptr;
  std::uint64_t seed = 0;
  double dev_accuracy = 0.0;
};

// Members ordered best first.
struct EnsembleSpec {
  std::vector<RankedModel> members;
};

// Greedy decode with dropout and word drop disabled.
std::string predict_form(const Model& model, const SentenceInstance& instance);

// Orders by dev accuracy (descending), ties by seed (ascending), and keeps the
// first k. Throws if fewer than k candidates or seeds repeat.
EnsembleSpec select_top_k(std::span<const RankedModel> candidates, std::size_t k = kEnsembleSize);

// Scores each model on `dev` first.
EnsembleSpec select_top_k(std::span<const Model* const> models, std::span<const std::uint64_t> seeds,
                          std::span<const SentenceInstance> dev, std::size_t k = kEnsembleSize);

// Most frequent string; a tie goes to whichever tied candidate the
// highest-ranked voter produced. `votes` must be in rank order.
std::string majority_vote(std::span<const std::string> votes);

// Requires exactly kEnsembleSize members.
std::string ensemble_predict(const EnsembleSpec& spec, const SentenceInstance& instance);

}  // namespace mrfl
