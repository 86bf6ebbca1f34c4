#pragma once

// Glue between datasets and the model: sample construction, training
// preparation and bundle-based prediction.

#include <optional>
#include <string>
#include <vector>

#include "hbo/features.hpp"
#include "hbo/ingest.hpp"
#include "hbo/model.hpp"
#include "hbo/serialize.hpp"
#include "hbo/train.hpp"

namespace hbo {

inline constexpr std::size_t kDefaultStrengthWindow = 10;

/// Labelled samples for every scored match.
inline std::vector<Sample> make_samples(const Dataset& d, const FeatureAssembler& fa,
                                        const NormalizationStats& stats) {
  std::vector<Sample> out;
  out.reserve(d.size());
  for (const auto& m : d.matches) {
    if (!m.has_score()) continue;
    out.push_back({fa.assemble(m, &stats), {double(*m.home_goals), double(*m.away_goals)}});
  }
  return out;
}

struct PrepareOptions {
  double train_ratio = 0.8;
  std::size_t strength_window = kDefaultStrengthWindow;
  double target_scale = 50.0;
  const Roster* roster = nullptr;
  // Clubs data drops matches with an empty lineup after imputation.
  std::optional<bool> filter_empty_lineups;
};

struct PreparedData {
  Dataset dataset;  // after imputation/filtering
  PlayerVocabulary vocab;
  NormalizationStats stats;
  std::vector<Sample> train;
  std::vector<Sample> validation;
  TableStrengths strengths;  // latest estimates, for prediction time
};

/// impute -> (filter, for clubs) -> chronological split -> vocabulary over the
/// whole selection -> causal history strengths -> normalization fitted on the
/// training part only.
inline PreparedData prepare_training(Dataset dataset, const PrepareOptions& opt = {}) {
  PreparedData p;
  dataset = impute_lineups(std::move(dataset));
  if (opt.filter_empty_lineups.value_or(dataset.category == Category::clubs))
    dataset = filter_nonempty_lineups(std::move(dataset));
  std::erase_if(dataset.matches, [](const RawMatch& m) { return !m.has_score(); });
  if (dataset.size() < 2) throw DataError("need at least two scored matches to train");

  auto [train_d, val_d] = split_train_validation(dataset, opt.train_ratio);
  if (train_d.empty() || val_d.empty()) throw DataError("train/validation split left an empty side");
  p.vocab = build_vocabulary(dataset, opt.roster);
  const HistoryStrengths history(dataset, opt.strength_window);
  p.strengths = TableStrengths(history.snapshot(), history.global());
  const FeatureAssembler fa(p.vocab, history, opt.roster);

  std::vector<std::vector<double>> raw;
  for (const auto& m : train_d.matches) raw.push_back(fa.covariates(m).values());
  p.stats = fit_normalization(raw, opt.target_scale);
  p.train = make_samples(train_d, fa, p.stats);
  p.validation = make_samples(val_d, fa, p.stats);
  p.dataset = std::move(dataset);
  return p;
}

/// Predictions from a saved bundle. Strengths given in the match record win
/// over the bundle's table.
class Predictor {
 public:
  explicit Predictor(ModelBundle bundle, std::optional<Roster> roster = std::nullopt)
      : bundle_(std::move(bundle)), roster_(std::move(roster)) {}

  const ModelBundle& bundle() const { return bundle_; }
  const Roster* roster() const { return roster_ ? &*roster_ : nullptr; }

  FeatureVector features(const RawMatch& m) const {
    const FeatureAssembler fa(bundle_.vocab, bundle_.strengths, roster());
    return fa.assemble(m, &bundle_.model.stats);
  }

  ScorePrediction predict(const RawMatch& m) const { return predict_score(bundle_.model, features(m)); }

 private:
  ModelBundle bundle_;
  std::optional<Roster> roster_;
};

}  // namespace hbo
