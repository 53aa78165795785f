#ifndef MECHNLI_DATASET_H_
#define MECHNLI_DATASET_H_

#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "mechnli/perturb.h"

namespace mechnli {

enum class Label { kEntailed, kNotEntailed };
enum class Split { kTrain, kDev, kTest };

inline constexpr Split kAllSplits[] = {Split::kTrain, Split::kDev, Split::kTest};

std::string_view LabelName(Label label);  // "entailed" / "not_entailed"
std::optional<Label> ParseLabel(std::string_view name);
std::string_view SplitName(Split split);  // "train" / "dev" / "test"
std::optional<Split> ParseSplit(std::string_view name);

// nullopt is the positive category.
using Category = std::optional<PerturbationKind>;
std::string CategoryName(const Category &category);  // "Positive" or a kind name
// Positive first, then kinds in enum order.
int CategoryRank(const Category &category);

struct NLIInstance {
  std::string id;
  std::string group_id;
  std::string premise;
  std::string hypothesis;  // marker-tagged
  Label label = Label::kEntailed;
  Category category;
  std::string source_abstract_id;

  bool operator==(const NLIInstance &) const = default;
};

nlohmann::json InstanceToJson(const NLIInstance &instance);
// Throws SchemaViolation.
NLIInstance InstanceFromJson(const nlohmann::json &j);

// Everything derived from one conclusion: the positive hypothesis and its
// negatives per kind.
struct Group {
  std::string group_id;
  std::string source_abstract_id;
  std::string premise;
  std::string positive;  // marker-tagged
  std::map<PerturbationKind, std::vector<std::string>> negatives;
  std::optional<Split> split;  // overrides hash assignment

  // Kinds with at least one negative that differs from the positive.
  KindSet Applicable() const;
};

nlohmann::json GroupToJson(const Group &group);
// Throws SchemaViolation.
Group GroupFromJson(const nlohmann::json &j);

struct SplitRatios {
  double train = 0.63;
  double dev = 0.22;
  double test = 0.15;

  // Throws InvalidConfig unless all are non-negative and sum to 1 (1e-9).
  void Validate() const;
};

// Hash of the group id mapped onto the ratio intervals.
Split AssignSplit(std::string_view group_id, const SplitRatios &ratios);

struct SplitPolicy {
  SplitRatios ratios;
  // Train: the positive, one seeded-uniform rule-based negative and every
  // generation negative. Dev/test: the positive and every negative.
  // With a balance cap, each rule-based train category is down-sampled to
  // the cap; train positives left without negatives are dropped.
  std::optional<std::size_t> balance_cap;

  static constexpr std::size_t kPaperCap = 500;
};

struct DatasetStats {
  // counts[split][category name]
  std::map<std::string, std::map<std::string, std::size_t>> counts;
  // Distinct groups per split.
  std::map<std::string, std::size_t> unique;
  // Number of applicable kinds -> fraction of groups.
  std::map<std::size_t, double> applicability;

  std::size_t Count(Split split, const Category &category) const;
  std::size_t Negatives(Split split) const;
  std::size_t Total(Split split) const;

  nlohmann::json ToJson() const;
  // Rows per category, columns train/dev/test.
  std::string ToTable() const;
};

struct Assembly {
  std::vector<NLIInstance> instances;  // sorted by (group_id, category)
  std::vector<Split> splits;           // parallel to instances
  DatasetStats stats;

  std::vector<NLIInstance> InSplit(Split split) const;
};

// Throws EmptyGroup when a group has no id or no positive hypothesis, and
// InvariantViolation on duplicate group ids. Negatives equal to the positive
// are dropped.
Assembly Assemble(const std::vector<Group> &groups, const SplitPolicy &policy,
                  std::uint64_t seed);

std::map<std::size_t, double> ApplicabilityHistogram(const std::vector<Group> &groups);

// One JSON object per line.
std::string InstancesToJsonl(const std::vector<NLIInstance> &instances);
std::vector<NLIInstance> LoadInstances(const std::string &path);

}  // namespace mechnli

#endif  // MECHNLI_DATASET_H_
