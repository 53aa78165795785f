#include "mechnli/dataset.h"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <set>
#include <sstream>

#include "mechnli/errors.h"
#include "mechnli/random.h"
#include "mechnli/text.h"

namespace mechnli {

using nlohmann::json;

std::string_view LabelName(Label label) {
  return label == Label::kEntailed ? "entailed" : "not_entailed";
}

std::optional<Label> ParseLabel(std::string_view name) {
  if (EqualsIgnoreCase(name, "entailed")) return Label::kEntailed;
  if (EqualsIgnoreCase(name, "not_entailed")) return Label::kNotEntailed;
  return std::nullopt;
}

std::string_view SplitName(Split split) {
  switch (split) {
    case Split::kTrain: return "train";
    case Split::kDev: return "dev";
    case Split::kTest: return "test";
  }
  return "";
}

std::optional<Split> ParseSplit(std::string_view name) {
  for (Split s : kAllSplits) {
    if (EqualsIgnoreCase(name, SplitName(s))) return s;
  }
  return std::nullopt;
}

std::string CategoryName(const Category &category) {
  return category ? std::string(KindName(*category)) : "Positive";
}

int CategoryRank(const Category &category) {
  return category ? static_cast<int>(*category) + 1 : 0;
}

namespace {

std::string RequireString(const json &j, const char *key) {
  if (!j.is_object() || !j.contains(key) || !j[key].is_string()) {
    throw SchemaViolation(0, std::string("missing string field `") + key + "`");
  }
  return j[key].get<std::string>();
}

Category ParseCategory(const std::string &name) {
  if (name == "Positive") return std::nullopt;
  auto kind = ParseKind(name);
  if (!kind) throw SchemaViolation(0, "unknown category `" + name + "`");
  return kind;
}

}  // namespace

json InstanceToJson(const NLIInstance &x) {
  return {{"id", x.id},
          {"group_id", x.group_id},
          {"premise", x.premise},
          {"hypothesis", x.hypothesis},
          {"label", LabelName(x.label)},
          {"category", CategoryName(x.category)},
          {"source_abstract_id", x.source_abstract_id}};
}

NLIInstance InstanceFromJson(const json &j) {
  NLIInstance x;
  x.id = RequireString(j, "id");
  x.group_id = RequireString(j, "group_id");
  x.premise = RequireString(j, "premise");
  x.hypothesis = RequireString(j, "hypothesis");
  auto label = ParseLabel(RequireString(j, "label"));
  if (!label) throw SchemaViolation(0, "unknown label");
  x.label = *label;
  x.category = ParseCategory(RequireString(j, "category"));
  x.source_abstract_id = RequireString(j, "source_abstract_id");
  if (x.category.has_value() != (x.label == Label::kNotEntailed)) {
    throw SchemaViolation(0, "label disagrees with category");
  }
  return x;
}

KindSet Group::Applicable() const {
  KindSet out;
  for (const auto &[kind, hyps] : negatives) {
    if (std::any_of(hyps.begin(), hyps.end(), [&](const auto &h) { return h != positive; })) {
      out.insert(kind);
    }
  }
  return out;
}

json GroupToJson(const Group &g) {
  json negatives = json::object();
  for (const auto &[kind, hyps] : g.negatives) negatives[std::string(KindName(kind))] = hyps;
  json out = {{"group_id", g.group_id},
              {"source_abstract_id", g.source_abstract_id},
              {"premise", g.premise},
              {"hypothesis", g.positive},
              {"negatives", negatives}};
  json applicable = json::array();
  for (auto kind : g.Applicable()) applicable.push_back(KindName(kind));
  out["applicability"] = applicable;
  if (g.split) out["split"] = SplitName(*g.split);
  return out;
}

Group GroupFromJson(const json &j) {
  Group g;
  g.group_id = RequireString(j, "group_id");
  g.source_abstract_id = RequireString(j, "source_abstract_id");
  g.premise = RequireString(j, "premise");
  g.positive = RequireString(j, "hypothesis");
  if (j.contains("negatives")) {
    if (!j["negatives"].is_object()) throw SchemaViolation(0, "`negatives` must be an object");
    for (const auto &[name, hyps] : j["negatives"].items()) {
      auto kind = ParseKind(name);
      if (!kind) throw SchemaViolation(0, "unknown kind `" + name + "`");
      if (!hyps.is_array()) throw SchemaViolation(0, "negatives must be lists of strings");
      for (const auto &h : hyps) {
        if (!h.is_string()) throw SchemaViolation(0, "negatives must be lists of strings");
        g.negatives[*kind].push_back(h.get<std::string>());
      }
    }
  }
  if (j.contains("split")) {
    auto split = j["split"].is_string() ? ParseSplit(j["split"].get<std::string>()) : std::nullopt;
    if (!split) throw SchemaViolation(0, "unknown split");
    g.split = split;
  }
  return g;
}

void SplitRatios::Validate() const {
  if (train < 0 || dev < 0 || test < 0 || std::fabs(train + dev + test - 1.0) > 1e-9) {
    throw InvalidConfig("split ratios must be non-negative and sum to 1");
  }
}

Split AssignSplit(std::string_view group_id, const SplitRatios &ratios) {
  const double u = static_cast<double>(MixSeed(0, group_id) >> 11) * 0x1.0p-53;
  if (u < ratios.train) return Split::kTrain;
  if (u < ratios.train + ratios.dev) return Split::kDev;
  return Split::kTest;
}

std::size_t DatasetStats::Count(Split split, const Category &category) const {
  auto s = counts.find(std::string(SplitName(split)));
  if (s == counts.end()) return 0;
  auto c = s->second.find(CategoryName(category));
  return c == s->second.end() ? 0 : c->second;
}

std::size_t DatasetStats::Negatives(Split split) const {
  std::size_t n = 0;
  for (auto kind : kAllKinds) n += Count(split, kind);
  return n;
}

std::size_t DatasetStats::Total(Split split) const {
  return Negatives(split) + Count(split, std::nullopt);
}

json DatasetStats::ToJson() const {
  json c = json::object();
  for (const auto &[split, cats] : counts) c[split] = cats;
  json hist = json::object();
  for (const auto &[n, frac] : applicability) hist[std::to_string(n)] = frac;
  json totals = json::object();
  for (Split s : kAllSplits) {
    totals[std::string(SplitName(s))] = {{"positives", Count(s, std::nullopt)},
                                         {"negatives", Negatives(s)},
                                         {"total", Total(s)}};
  }
  return {{"counts", c}, {"unique", unique}, {"totals", totals}, {"applicability", hist}};
}

std::string DatasetStats::ToTable() const {
  std::ostringstream out;
  char line[128];
  std::snprintf(line, sizeof line, "%-16s %8s %8s %8s %8s\n", "category", "train", "dev", "test",
                "sum");
  out << line;
  auto row = [&](const std::string &name, auto value) {
    const std::size_t tr = value(Split::kTrain);
    const std::size_t dv = value(Split::kDev);
    const std::size_t te = value(Split::kTest);
    std::snprintf(line, sizeof line, "%-16s %8zu %8zu %8zu %8zu\n", name.c_str(), tr, dv, te,
                  tr + dv + te);
    out << line;
  };
  auto unique_of = [&](Split s) {
    auto it = unique.find(std::string(SplitName(s)));
    return it == unique.end() ? std::size_t{0} : it->second;
  };
  row("+", [&](Split s) { return Count(s, std::nullopt); });
  for (auto kind : kAllKinds) {
    row(std::string(KindName(kind)), [&](Split s) { return Count(s, kind); });
  }
  row("- total", [&](Split s) { return Negatives(s); });
  row("total", [&](Split s) { return Total(s); });
  row("unique groups", unique_of);
  if (!applicability.empty()) {
    out << "\napplicable kinds  fraction of groups\n";
    for (const auto &[n, frac] : applicability) {
      std::snprintf(line, sizeof line, "%16zu  %.4f\n", n, frac);
      out << line;
    }
  }
  return out.str();
}

std::vector<NLIInstance> Assembly::InSplit(Split split) const {
  std::vector<NLIInstance> out;
  for (std::size_t i = 0; i < instances.size(); ++i) {
    if (splits[i] == split) out.push_back(instances[i]);
  }
  return out;
}

std::map<std::size_t, double> ApplicabilityHistogram(const std::vector<Group> &groups) {
  std::map<std::size_t, double> hist;
  if (groups.empty()) return hist;
  std::map<std::size_t, std::size_t> counts;
  for (const auto &g : groups) ++counts[g.Applicable().size()];
  for (const auto &[n, c] : counts) {
    hist[n] = static_cast<double>(c) / static_cast<double>(groups.size());
  }
  return hist;
}

namespace {

struct Emitted {
  NLIInstance instance;
  Split split;
};

}  // namespace

Assembly Assemble(const std::vector<Group> &groups, const SplitPolicy &policy,
                  std::uint64_t seed) {
  policy.ratios.Validate();
  std::set<std::string> seen;
  std::vector<Emitted> emitted;
  for (const auto &g : groups) {
    if (g.group_id.empty() || Trim(g.positive).empty()) {
      throw EmptyGroup("group `" + g.group_id + "` has no positive hypothesis");
    }
    if (!seen.insert(g.group_id).second) {
      throw InvariantViolation("duplicate group id `" + g.group_id + "`");
    }
    const Split split = g.split.value_or(AssignSplit(g.group_id, policy.ratios));
    std::map<PerturbationKind, std::vector<std::string>> negatives;
    for (const auto &[kind, hyps] : g.negatives) {
      for (const auto &h : hyps) {
        if (h != g.positive) negatives[kind].push_back(h);
      }
    }

    std::vector<std::pair<PerturbationKind, std::string>> chosen;
    if (split == Split::kTrain) {
      std::vector<PerturbationKind> rule_kinds;
      for (const auto &[kind, hyps] : negatives) {
        if (IsRuleBased(kind)) rule_kinds.push_back(kind);
      }
      if (!rule_kinds.empty()) {
        Rng rng(MixSeed(seed, "train:" + g.group_id));
        const PerturbationKind kind = rng.Choose(rule_kinds);
        chosen.emplace_back(kind, rng.Choose(negatives[kind]));
      }
      for (const auto &[kind, hyps] : negatives) {
        if (IsRuleBased(kind)) continue;
        for (const auto &h : hyps) chosen.emplace_back(kind, h);
      }
    } else {
      for (const auto &[kind, hyps] : negatives) {
        for (const auto &h : hyps) chosen.emplace_back(kind, h);
      }
    }

    auto make = [&](Category category, const std::string &hypothesis, std::size_t k) {
      NLIInstance x;
      x.id = g.group_id + "-" + CategoryName(category) + "-" + std::to_string(k);
      x.group_id = g.group_id;
      x.premise = g.premise;
      x.hypothesis = hypothesis;
      x.label = category ? Label::kNotEntailed : Label::kEntailed;
      x.category = category;
      x.source_abstract_id = g.source_abstract_id;
      return Emitted{std::move(x), split};
    };
    emitted.push_back(make(std::nullopt, g.positive, 0));
    std::map<PerturbationKind, std::size_t> next_k;
    for (const auto &[kind, h] : chosen) emitted.push_back(make(kind, h, next_k[kind]++));
  }

  if (policy.balance_cap) {
    std::vector<char> keep(emitted.size(), 1);
    for (auto kind : kRuleKinds) {
      std::vector<std::size_t> idx;
      for (std::size_t i = 0; i < emitted.size(); ++i) {
        if (emitted[i].split == Split::kTrain && emitted[i].instance.category == kind) {
          idx.push_back(i);
        }
      }
      if (idx.size() <= *policy.balance_cap) continue;
      std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
        return emitted[a].instance.id < emitted[b].instance.id;
      });
      Rng rng(MixSeed(seed, "balance:" + std::string(KindName(kind))));
      rng.Shuffle(idx);
      for (std::size_t i = *policy.balance_cap; i < idx.size(); ++i) keep[idx[i]] = 0;
    }
    std::set<std::string> with_negatives;
    for (std::size_t i = 0; i < emitted.size(); ++i) {
      if (keep[i] && emitted[i].instance.category) with_negatives.insert(emitted[i].instance.group_id);
    }
    std::vector<Emitted> kept;
    for (std::size_t i = 0; i < emitted.size(); ++i) {
      const auto &x = emitted[i];
      if (!keep[i]) continue;
      if (x.split == Split::kTrain && !x.instance.category &&
          !with_negatives.count(x.instance.group_id)) {
        continue;
      }
      kept.push_back(std::move(emitted[i]));
    }
    emitted = std::move(kept);
  }

  std::stable_sort(emitted.begin(), emitted.end(), [](const Emitted &a, const Emitted &b) {
    if (a.instance.group_id != b.instance.group_id) {
      return a.instance.group_id < b.instance.group_id;
    }
    return CategoryRank(a.instance.category) < CategoryRank(b.instance.category);
  });

  Assembly out;
  for (Split s : kAllSplits) {
    auto &row = out.stats.counts[std::string(SplitName(s))];
    row["Positive"] = 0;
    for (auto kind : kAllKinds) row[std::string(KindName(kind))] = 0;
  }
  std::map<std::string, std::set<std::string>> unique;
  for (auto &e : emitted) {
    const std::string split(SplitName(e.split));
    ++out.stats.counts[split][CategoryName(e.instance.category)];
    unique[split].insert(e.instance.group_id);
    out.instances.push_back(std::move(e.instance));
    out.splits.push_back(e.split);
  }
  for (Split s : kAllSplits) {
    out.stats.unique[std::string(SplitName(s))] = unique[std::string(SplitName(s))].size();
  }
  out.stats.applicability = ApplicabilityHistogram(groups);
  return out;
}

std::string InstancesToJsonl(const std::vector<NLIInstance> &instances) {
  std::string out;
  for (const auto &x : instances) {
    out += InstanceToJson(x).dump();
    out.push_back('\n');
  }
  return out;
}

std::vector<NLIInstance> LoadInstances(const std::string &path) {
  std::vector<NLIInstance> out;
  std::size_t line_no = 0;
  for (const auto &line : SplitLines(ReadFile(path))) {
    ++line_no;
    if (Trim(line).empty()) continue;
    try {
      out.push_back(InstanceFromJson(json::parse(line)));
    } catch (const json::exception &e) {
      throw SchemaViolation(line_no, e.what());
    } catch (const SchemaViolation &e) {
      throw SchemaViolation(line_no, e.reason());
    }
  }
  return out;
}

}  // namespace mechnli
