#ifndef MECHNLI_LM_H_
#define MECHNLI_LM_H_

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "json.hpp"

namespace mechnli {

using TokenId = std::int32_t;

// Next-token log-probabilities over a fixed vocabulary.
//
// Contract: exp(LogProbs(p)) sums to 1 within 1e-6 for every prefix p, and
// the result depends only on the prefix.
class SequenceScorer {
 public:
  virtual ~SequenceScorer() = default;

  virtual const std::vector<std::string> &vocab() const = 0;
  virtual std::vector<double> LogProbs(std::span<const TokenId> prefix) const = 0;
  virtual TokenId eos_id() const = 0;
  // Token emitted for out-of-vocabulary input, if the scorer has one.
  virtual std::optional<TokenId> unk_id() const { return std::nullopt; }

  std::optional<TokenId> IdOf(std::string_view token) const;
  // OOV tokens map to unk_id(); without one they are dropped.
  std::vector<TokenId> Encode(const std::vector<std::string> &tokens) const;
  std::vector<std::string> Decode(std::span<const TokenId> ids) const;

 protected:
  // Builds the token lookup table; call once the vocabulary is final.
  // Without it IdOf falls back to a linear scan.
  void IndexVocab();

 private:
  std::unordered_map<std::string, TokenId> index_;
};

// Sum of stepwise log-probabilities of `tokens` followed by eos, each step
// conditioned on prompt + the tokens so far.
double ScoreSequence(const SequenceScorer &scorer, std::span<const TokenId> tokens,
                     std::span<const TokenId> prompt = {});

// Interpolated absolute-discount n-gram model:
//   p_k(w|h) = max(c(h,w) - D, 0) / c(h) + D * N1+(h) / c(h) * p_{k-1}(w|h')
// bottoming out in a uniform distribution over the vocabulary. Contexts never
// seen fall through to the next lower order.
class NGramLM : public SequenceScorer {
 public:
  static constexpr std::string_view kEos = "</s>";
  static constexpr std::string_view kUnk = "<unk>";

  // Each inner vector is one training sequence (an eos is appended).
  // Throws InvalidConfig for order < 1 or discount outside (0,1),
  // EmptyCorpus when there are no tokens.
  static NGramLM Train(const std::vector<std::vector<std::string>> &corpus, int order,
                       double discount = 0.4);

  const std::vector<std::string> &vocab() const override { return vocab_; }
  std::vector<double> LogProbs(std::span<const TokenId> prefix) const override;
  TokenId eos_id() const override { return 1; }
  std::optional<TokenId> unk_id() const override { return 0; }

  int order() const { return order_; }
  double discount() const { return discount_; }

  nlohmann::json ToJson() const;
  static NGramLM FromJson(const nlohmann::json &j);
  void Save(const std::string &path) const;
  static NGramLM Load(const std::string &path);

 private:
  struct ContextCounts {
    std::uint64_t total = 0;
    std::map<TokenId, std::uint64_t> next;
  };
  // Context key: the k preceding token ids, kBos-padded on the left.
  using Context = std::vector<TokenId>;
  static constexpr TokenId kBos = -1;

  void Count(const std::vector<TokenId> &sequence);
  void ComputeUnigram();

  int order_ = 1;
  double discount_ = 0.4;
  std::vector<std::string> vocab_;
  // counts_[k] holds contexts of length k.
  std::vector<std::map<Context, ContextCounts>> counts_;
  std::vector<double> unigram_;
};

}  // namespace mechnli

#endif  // MECHNLI_LM_H_
