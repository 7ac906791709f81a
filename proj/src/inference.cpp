#include "mrfl/inference.hpp"

#include <algorithm>
#include <map>
#include <set>
#include <stdexcept>

#include "mrfl/evaluation.hpp"

namespace mrfl {

std::string predict_form(const Model& model, const SentenceInstance& instance) {
  return model.predict_form(instance);
}

EnsembleSpec select_top_k(std::span<const RankedModel> candidates, std::size_t k) {
  if (k == 0) throw std::invalid_argument("k must be positive");
  if (candidates.size() < k) {
    throw std::invalid_argument("need at least " + std::to_string(k) + " models, got " +
                                std::to_string(candidates.size()));
  }
  std::set<std::uint64_t> seeds;
  for (const auto& c : candidates) {
    if (!seeds.insert(c.seed).second) throw std::invalid_argument("duplicate seed " + std::to_string(c.seed));
  }
  std::vector<RankedModel> ranked(candidates.begin(), candidates.end());
  std::sort(ranked.begin(), ranked.end(), [](const RankedModel& a, const RankedModel& b) {
    if (a.dev_accuracy != b.dev_accuracy) return a.dev_accuracy > b.dev_accuracy;
    return a.seed < b.seed;
  });
  ranked.resize(k);
  return EnsembleSpec{std::move(ranked)};
}

EnsembleSpec select_top_k(std::span<const Model* const> models, std::span<const std::uint64_t> seeds,
                          std::span<const SentenceInstance> dev, std::size_t k) {
  if (models.size() != seeds.size()) throw std::invalid_argument("one seed per model required");
  std::vector<RankedModel> candidates;
  for (std::size_t i = 0; i < models.size(); ++i) {
    candidates.push_back({models[i], seeds[i], dev_accuracy(*models[i], dev)});
  }
  return select_top_k(candidates, k);
}

std::string majority_vote(std::span<const std::string> votes) {
  if (votes.empty()) throw std::invalid_argument("majority_vote: no votes");
  std::map<std::string, std::size_t> counts;
  for (const auto& v : votes) ++counts[v];
  std::size_t top = 0;
  for (const auto& [_, n] : counts) top = std::max(top, n);
  for (const auto& v : votes) {
    if (counts[v] == top) return v;
  }
  return votes.front();
}

std::string ensemble_predict(const EnsembleSpec& spec, const SentenceInstance& instance) {
  if (spec.members.size() != kEnsembleSize) {
    throw std::invalid_argument("ensemble needs exactly " + std::to_string(kEnsembleSize) + " members, got " +
                                std::to_string(spec.members.size()));
  }
  std::vector<std::string> votes;
  votes.reserve(spec.members.size());
  for (const auto& m : spec.members) votes.push_back(m.model->predict_form(instance));
  return majority_vote(votes);
}

}  // namespace mrfl
