#ifndef MECHNLI_EVALHARNESS_H_
#define MECHNLI_EVALHARNESS_H_

#include <array>
#include <cstddef>
#include <map>
#include <string>
#include <vector>

#include "json.hpp"
#include "mechnli/dataset.h"

namespace mechnli {

struct PredictionRecord {
  std::string id;
  Label label = Label::kEntailed;
};

// Line-delimited {id, label}. Throws SchemaViolation.
std::vector<PredictionRecord> LoadPredictions(const std::string &path);

// Per-group fraction of correctly classified instances.
struct ConsistencyReport {
  static constexpr int kBins = 10;

  std::size_t groups = 0;
  // bins[i] counts groups with fraction in [i/10, (i+1)/10); 1.0 is in bin 9.
  std::array<std::size_t, kBins> bins{};
  // at_least[k] = share of groups whose fraction is >= k/10, k = 0..10.
  std::array<double, kBins + 1> at_least{};

  double AtLeast(int tenths) const { return at_least.at(static_cast<std::size_t>(tenths)); }

  nlohmann::json ToJson() const;
  std::string ToTable() const;
  // Bar chart of the cumulative shares.
  std::string ToSvg() const;
};

struct CategoryScore {
  std::size_t support = 0;
  std::size_t correct = 0;
  double recall = 0.0;
};

struct EvalReport {
  double positive_f1 = 0.0;
  double negative_f1 = 0.0;
  std::map<PerturbationKind, CategoryScore> categories;  // present kinds only
  double rule_macro = 0.0;        // mean recall over present rule-based kinds
  double generation_macro = 0.0;  // mean recall over present GEN, GEN-ND
  double overall_macro = 0.0;     // mean of the two class F1s
  ConsistencyReport consistency;

  nlohmann::json ToJson() const;
  std::string ToTable() const;
};

// Throws MissingPrediction when an instance has no prediction, UnknownId for
// a prediction naming no instance and InvariantViolation for duplicates.
EvalReport Evaluate(const std::vector<NLIInstance> &dataset,
                    const std::vector<PredictionRecord> &predictions);

ConsistencyReport Consistency(const std::vector<NLIInstance> &dataset,
                              const std::vector<PredictionRecord> &predictions);

}  // namespace mechnli

#endif  // MECHNLI_EVALHARNESS_H_
