#include "mechnli/lm.h"

#include <algorithm>
#include <cmath>
#include <set>

#include "mechnli/errors.h"
#include "mechnli/text.h"

namespace mechnli {

using nlohmann::json;

void SequenceScorer::IndexVocab() {
  index_.clear();
  const auto &v = vocab();
  for (std::size_t i = 0; i < v.size(); ++i) index_.emplace(v[i], static_cast<TokenId>(i));
}

std::optional<TokenId> SequenceScorer::IdOf(std::string_view token) const {
  const auto &v = vocab();
  if (index_.size() == v.size() && !v.empty()) {
    auto it = index_.find(std::string(token));
    if (it == index_.end()) return std::nullopt;
    return it->second;
  }
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (v[i] == token) return static_cast<TokenId>(i);
  }
  return std::nullopt;
}

std::vector<TokenId> SequenceScorer::Encode(const std::vector<std::string> &tokens) const {
  std::vector<TokenId> ids;
  ids.reserve(tokens.size());
  for (const auto &t : tokens) {
    if (auto id = IdOf(t)) {
      ids.push_back(*id);
    } else if (auto unk = unk_id()) {
      ids.push_back(*unk);
    }
  }
  return ids;
}

std::vector<std::string> SequenceScorer::Decode(std::span<const TokenId> ids) const {
  std::vector<std::string> out;
  for (TokenId id : ids) out.push_back(vocab().at(static_cast<std::size_t>(id)));
  return out;
}

double ScoreSequence(const SequenceScorer &scorer, std::span<const TokenId> tokens,
                     std::span<const TokenId> prompt) {
  std::vector<TokenId> prefix(prompt.begin(), prompt.end());
  double total = 0.0;
  for (TokenId t : tokens) {
    total += scorer.LogProbs(prefix).at(static_cast<std::size_t>(t));
    prefix.push_back(t);
  }
  return total + scorer.LogProbs(prefix).at(static_cast<std::size_t>(scorer.eos_id()));
}

NGramLM NGramLM::Train(const std::vector<std::vector<std::string>> &corpus, int order,
                       double discount) {
  if (order < 1) throw InvalidConfig("n-gram order must be >= 1");
  if (!(discount > 0.0 && discount < 1.0)) {
    throw InvalidConfig("discount must lie in (0,1)");
  }
  std::set<std::string> observed;
  for (const auto &seq : corpus) observed.insert(seq.begin(), seq.end());
  observed.erase(std::string(kEos));
  observed.erase(std::string(kUnk));
  if (observed.empty()) throw EmptyCorpus("no tokens to train on");

  NGramLM lm;
  lm.order_ = order;
  lm.discount_ = discount;
  lm.vocab_ = {std::string(kUnk), std::string(kEos)};
  lm.vocab_.insert(lm.vocab_.end(), observed.begin(), observed.end());
  lm.counts_.resize(static_cast<std::size_t>(order));
  lm.IndexVocab();
  for (const auto &seq : corpus) {
    if (seq.empty()) continue;
    lm.Count(lm.Encode(seq));
  }
  lm.ComputeUnigram();
  return lm;
}

void NGramLM::Count(const std::vector<TokenId> &sequence) {
  std::vector<TokenId> padded(static_cast<std::size_t>(order_ - 1), kBos);
  padded.insert(padded.end(), sequence.begin(), sequence.end());
  padded.push_back(eos_id());
  for (std::size_t i = static_cast<std::size_t>(order_ - 1); i < padded.size(); ++i) {
    for (std::size_t k = 0; k < counts_.size(); ++k) {
      Context ctx(padded.begin() + static_cast<long>(i - k), padded.begin() + static_cast<long>(i));
      ContextCounts &cc = counts_[k][ctx];
      ++cc.total;
      ++cc.next[padded[i]];
    }
  }
}

void NGramLM::ComputeUnigram() {
  const double uniform = 1.0 / static_cast<double>(vocab_.size());
  unigram_.assign(vocab_.size(), uniform);
  auto it = counts_[0].find(Context{});
  if (it == counts_[0].end()) return;
  const ContextCounts &cc = it->second;
  const double total = static_cast<double>(cc.total);
  const double backoff = discount_ * static_cast<double>(cc.next.size()) / total;
  for (double &p : unigram_) p *= backoff;
  for (const auto &[w, n] : cc.next) {
    unigram_[static_cast<std::size_t>(w)] +=
        std::max(static_cast<double>(n) - discount_, 0.0) / total;
  }
}

std::vector<double> NGramLM::LogProbs(std::span<const TokenId> prefix) const {
  std::vector<double> probs = unigram_;
  for (std::size_t k = 1; k < counts_.size(); ++k) {
    Context ctx(k, kBos);
    for (std::size_t j = 0; j < k; ++j) {
      // ctx[k-1] is the last prefix token.
      const std::size_t back = k - j;
      if (back <= prefix.size()) ctx[j] = prefix[prefix.size() - back];
    }
    auto it = counts_[k].find(ctx);
    if (it == counts_[k].end()) break;
    const ContextCounts &cc = it->second;
    const double total = static_cast<double>(cc.total);
    const double backoff = discount_ * static_cast<double>(cc.next.size()) / total;
    for (double &p : probs) p *= backoff;
    for (const auto &[w, n] : cc.next) {
      probs[static_cast<std::size_t>(w)] +=
          std::max(static_cast<double>(n) - discount_, 0.0) / total;
    }
  }
  for (double &p : probs) p = std::log(p);
  return probs;
}

json NGramLM::ToJson() const {
  json counts = json::array();
  for (std::size_t k = 0; k < counts_.size(); ++k) {
    for (const auto &[ctx, cc] : counts_[k]) {
      for (const auto &[w, n] : cc.next) {
        json row = json::array();
        for (TokenId t : ctx) row.push_back(t);
        row.push_back(w);
        row.push_back(n);
        counts.push_back(std::move(row));
      }
    }
  }
  return {{"format", "mechnli-ngram-v1"},
          {"order", order_},
          {"discount", discount_},
          {"vocab", vocab_},
          {"counts", counts}};
}

NGramLM NGramLM::FromJson(const json &j) {
  try {
    if (j.at("format") != "mechnli-ngram-v1") {
      throw SchemaViolation(0, "unknown model format");
    }
    NGramLM lm;
    lm.order_ = j.at("order").get<int>();
    lm.discount_ = j.at("discount").get<double>();
    lm.vocab_ = j.at("vocab").get<std::vector<std::string>>();
    if (lm.order_ < 1 || lm.vocab_.size() < 2 || lm.vocab_[0] != kUnk ||
        lm.vocab_[1] != kEos) {
      throw SchemaViolation(0, "malformed model header");
    }
    lm.counts_.resize(static_cast<std::size_t>(lm.order_));
    lm.IndexVocab();
    for (const auto &row : j.at("counts")) {
      if (!row.is_array() || row.size() < 2 || row.size() - 2 >= lm.counts_.size()) {
        throw SchemaViolation(0, "malformed count row");
      }
      const std::size_t k = row.size() - 2;
      Context ctx;
      for (std::size_t i = 0; i < k; ++i) ctx.push_back(row[i].get<TokenId>());
      const TokenId w = row[k].get<TokenId>();
      const std::uint64_t n = row[k + 1].get<std::uint64_t>();
      if (w < 0 || static_cast<std::size_t>(w) >= lm.vocab_.size() || n == 0) {
        throw SchemaViolation(0, "count row out of range");
      }
      ContextCounts &cc = lm.counts_[k][ctx];
      cc.total += n;
      cc.next[w] += n;
    }
    lm.ComputeUnigram();
    return lm;
  } catch (const json::exception &e) {
    throw SchemaViolation(0, std::string("bad model file: ") + e.what());
  }
}

void NGramLM::Save(const std::string &path) const { WriteFile(path, ToJson().dump() + "\n"); }

NGramLM NGramLM::Load(const std::string &path) {
  json j;
  try {
    j = json::parse(ReadFile(path));
  } catch (const json::parse_error &e) {
    throw SchemaViolation(0, std::string("bad model file: ") + e.what());
  }
  return FromJson(j);
}

}  // namespace mechnli
