#include "mechnli/evalharness.h"

#include <algorithm>
#include <cstdio>
#include <sstream>
#include <unordered_map>

#include "mechnli/errors.h"
#include "mechnli/text.h"

namespace mechnli {

using nlohmann::json;

std::vector<PredictionRecord> LoadPredictions(const std::string &path) {
  std::vector<PredictionRecord> out;
  std::size_t line_no = 0;
  for (const auto &line : SplitLines(ReadFile(path))) {
    ++line_no;
    if (Trim(line).empty()) continue;
    json j;
    try {
      j = json::parse(line);
    } catch (const json::parse_error &e) {
      throw SchemaViolation(line_no, e.what());
    }
    if (!j.is_object() || !j.contains("id") || !j["id"].is_string() || !j.contains("label") ||
        !j["label"].is_string()) {
      throw SchemaViolation(line_no, "prediction needs string `id` and `label`");
    }
    auto label = ParseLabel(j["label"].get<std::string>());
    if (!label) throw SchemaViolation(line_no, "unknown label");
    out.push_back({j["id"].get<std::string>(), *label});
  }
  return out;
}

namespace {

std::unordered_map<std::string, Label> IndexPredictions(
    const std::vector<NLIInstance> &dataset, const std::vector<PredictionRecord> &predictions) {
  std::unordered_map<std::string, Label> by_id;
  for (const auto &p : predictions) {
    if (!by_id.emplace(p.id, p.label).second) {
      throw InvariantViolation("duplicate prediction for `" + p.id + "`");
    }
  }
  std::unordered_map<std::string, bool> known;
  for (const auto &x : dataset) {
    if (!by_id.count(x.id)) throw MissingPrediction("no prediction for `" + x.id + "`");
    known.emplace(x.id, true);
  }
  for (const auto &p : predictions) {
    if (!known.count(p.id)) throw UnknownId("prediction for unknown id `" + p.id + "`");
  }
  return by_id;
}

double F1(std::size_t tp, std::size_t fp, std::size_t fn) {
  const std::size_t denom = 2 * tp + fp + fn;
  return denom == 0 ? 0.0 : 2.0 * static_cast<double>(tp) / static_cast<double>(denom);
}

ConsistencyReport ComputeConsistency(const std::vector<NLIInstance> &dataset,
                                     const std::unordered_map<std::string, Label> &by_id) {
  std::map<std::string, std::pair<std::size_t, std::size_t>> per_group;  // correct, total
  for (const auto &x : dataset) {
    auto &[correct, total] = per_group[x.group_id];
    ++total;
    if (by_id.at(x.id) == x.label) ++correct;
  }
  ConsistencyReport r;
  r.groups = per_group.size();
  std::array<std::size_t, ConsistencyReport::kBins + 1> reach{};
  for (const auto &[group, ct] : per_group) {
    const auto [correct, total] = ct;
    const std::size_t bin = std::min<std::size_t>(ConsistencyReport::kBins - 1,
                                                  correct * ConsistencyReport::kBins / total);
    ++r.bins[bin];
    for (std::size_t k = 0; k <= ConsistencyReport::kBins; ++k) {
      if (correct * ConsistencyReport::kBins >= k * total) ++reach[k];
    }
  }
  for (std::size_t k = 0; k <= ConsistencyReport::kBins; ++k) {
    r.at_least[k] = r.groups == 0 ? 0.0
                                  : static_cast<double>(reach[k]) / static_cast<double>(r.groups);
  }
  return r;
}

std::string Fixed(double v, int digits = 2) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

}  // namespace

json ConsistencyReport::ToJson() const {
  json at = json::object();
  for (int k = 0; k <= kBins; ++k) at[Fixed(k / 10.0, 1)] = at_least[static_cast<std::size_t>(k)];
  return {{"groups", groups}, {"bins", bins}, {"at_least", at}};
}

std::string ConsistencyReport::ToTable() const {
  std::ostringstream out;
  char line[96];
  std::snprintf(line, sizeof line, "%-12s %8s %10s\n", "correct", "groups", ">= lower");
  out << line;
  for (int i = 0; i < kBins; ++i) {
    const std::string range = Fixed(i / 10.0, 1) + "-" + Fixed((i + 1) / 10.0, 1);
    std::snprintf(line, sizeof line, "%-12s %8zu %10.4f\n", range.c_str(),
                  bins[static_cast<std::size_t>(i)], at_least[static_cast<std::size_t>(i)]);
    out << line;
  }
  std::snprintf(line, sizeof line, "%-12s %8s %10.4f\n", "1.0", "", at_least[kBins]);
  out << line;
  return out.str();
}

std::string ConsistencyReport::ToSvg() const {
  constexpr int kWidth = 440;
  constexpr int kHeight = 240;
  constexpr int kLeft = 40;
  constexpr int kBottom = 200;
  constexpr int kBar = 32;
  std::ostringstream out;
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kWidth << "\" height=\""
      << kHeight << "\" font-family=\"sans-serif\" font-size=\"10\">\n";
  out << "<line x1=\"" << kLeft << "\" y1=\"" << kBottom << "\" x2=\"" << kWidth - 10
      << "\" y2=\"" << kBottom << "\" stroke=\"black\"/>\n";
  out << "<line x1=\"" << kLeft << "\" y1=\"20\" x2=\"" << kLeft << "\" y2=\"" << kBottom
      << "\" stroke=\"black\"/>\n";
  for (int k = 0; k <= kBins; ++k) {
    const double share = at_least[static_cast<std::size_t>(k)];
    const int h = static_cast<int>(share * 180.0 + 0.5);
    const int x = kLeft + 4 + k * (kBar + 3);
    out << "<rect x=\"" << x << "\" y=\"" << kBottom - h << "\" width=\"" << kBar
        << "\" height=\"" << h << "\" fill=\"steelblue\"/>\n";
    out << "<text x=\"" << x + kBar / 2 << "\" y=\"" << kBottom + 12
        << "\" text-anchor=\"middle\">" << Fixed(k / 10.0, 1) << "</text>\n";
    out << "<text x=\"" << x + kBar / 2 << "\" y=\"" << kBottom - h - 3
        << "\" text-anchor=\"middle\">" << Fixed(share) << "</text>\n";
  }
  out << "<text x=\"" << kWidth / 2 << "\" y=\"" << kHeight - 8
      << "\" text-anchor=\"middle\">share of groups with at least this fraction correct</text>\n";
  out << "</svg>\n";
  return out.str();
}

json EvalReport::ToJson() const {
  json cats = json::object();
  for (const auto &[kind, s] : categories) {
    cats[std::string(KindName(kind))] = {
        {"support", s.support}, {"correct", s.correct}, {"recall", s.recall}};
  }
  return {{"positive_f1", positive_f1},
          {"negative_f1", negative_f1},
          {"categories", cats},
          {"rule_macro", rule_macro},
          {"generation_macro", generation_macro},
          {"overall_macro", overall_macro},
          {"consistency", consistency.ToJson()}};
}

std::string EvalReport::ToTable() const {
  std::ostringstream out;
  char line[96];
  auto row = [&](const std::string &name, double v) {
    std::snprintf(line, sizeof line, "%-24s %6.2f\n", name.c_str(), v);
    out << line;
  };
  row("Positive (F1)", positive_f1);
  for (auto kind : kRuleKinds) {
    auto it = categories.find(kind);
    if (it != categories.end()) row("  " + std::string(KindName(kind)), it->second.recall);
  }
  row("  Rule-based macro-avg", rule_macro);
  for (auto kind : {PerturbationKind::kGEN_ND, PerturbationKind::kGEN}) {
    auto it = categories.find(kind);
    if (it != categories.end()) row("  " + std::string(KindName(kind)), it->second.recall);
  }
  row("  Generation macro-avg", generation_macro);
  row("All negatives (F1)", negative_f1);
  row("Macro-avg", overall_macro);
  out << "\nconsistency\n" << consistency.ToTable();
  return out.str();
}

EvalReport Evaluate(const std::vector<NLIInstance> &dataset,
                    const std::vector<PredictionRecord> &predictions) {
  const auto by_id = IndexPredictions(dataset, predictions);
  std::size_t pos_tp = 0;
  std::size_t pos_fp = 0;
  std::size_t pos_fn = 0;
  EvalReport r;
  for (const auto &x : dataset) {
    const Label pred = by_id.at(x.id);
    if (x.label == Label::kEntailed) {
      if (pred == Label::kEntailed) ++pos_tp; else ++pos_fn;
    } else {
      if (pred == Label::kEntailed) ++pos_fp;
    }
    if (x.category) {
      auto &c = r.categories[*x.category];
      ++c.support;
      if (pred == Label::kNotEntailed) ++c.correct;
    }
  }
  std::size_t neg_tp = 0;
  for (auto &[kind, c] : r.categories) {
    c.recall = static_cast<double>(c.correct) / static_cast<double>(c.support);
    neg_tp += c.correct;
  }
  // For the negative class, positive-class false negatives are false
  // positives and vice versa.
  r.positive_f1 = F1(pos_tp, pos_fp, pos_fn);
  r.negative_f1 = F1(neg_tp, pos_fn, pos_fp);
  double rule_sum = 0.0;
  double gen_sum = 0.0;
  int rule_n = 0;
  int gen_n = 0;
  for (const auto &[kind, c] : r.categories) {
    if (IsRuleBased(kind)) {
      rule_sum += c.recall;
      ++rule_n;
    } else {
      gen_sum += c.recall;
      ++gen_n;
    }
  }
  r.rule_macro = rule_n ? rule_sum / rule_n : 0.0;
  r.generation_macro = gen_n ? gen_sum / gen_n : 0.0;
  r.overall_macro = (r.positive_f1 + r.negative_f1) / 2.0;
  r.consistency = ComputeConsistency(dataset, by_id);
  return r;
}

ConsistencyReport Consistency(const std::vector<NLIInstance> &dataset,
                              const std::vector<PredictionRecord> &predictions) {
  return ComputeConsistency(dataset, IndexPredictions(dataset, predictions));
}

}  // namespace mechnli
