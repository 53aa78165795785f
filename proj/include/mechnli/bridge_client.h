#ifndef MECHNLI_BRIDGE_CLIENT_H_
#define MECHNLI_BRIDGE_CLIENT_H_

#include <atomic>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "mechnli/annotate.h"
#include "mechnli/genfilter.h"
#include "mechnli/lm.h"

namespace mechnli {

inline constexpr char kBridgeEnvVar[] = "MECHNLI_BRIDGE";
inline constexpr char kBridgeSchema[] = "mechnli-bridge-v1";

struct BridgeEndpoint {
  std::string host;
  int port = 0;

  // `http://host:port` or `host:port`. Throws InvalidConfig.
  static BridgeEndpoint Parse(std::string_view address);
  // nullopt when the variable is unset or empty.
  static std::optional<BridgeEndpoint> FromEnv(const char *var = kBridgeEnvVar);
};

// Request/response client. Each call POSTs {id, endpoint, payload} to
// /v1/<endpoint> and expects {id, ok, payload} or {id, ok: false,
// error: {code, message}}. Safe to call from several threads.
class BridgeClient {
 public:
  explicit BridgeClient(BridgeEndpoint endpoint, double timeout_seconds = 30.0);

  // Throws ModelUnavailable on transport failure, a mismatched id or an
  // error response; TokenizationMismatch when the error code says so.
  nlohmann::json Call(std::string_view endpoint, const nlohmann::json &payload) const;
  bool Healthy() const;
  // {schema, vocab_handle, vocab, eos, unk, relation_labels, models}
  nlohmann::json Meta() const;

  const BridgeEndpoint &endpoint() const { return endpoint_; }

 private:
  BridgeEndpoint endpoint_;
  double timeout_seconds_;
  mutable std::atomic<std::uint64_t> next_id_{1};
};

// Served next-token distribution, conditioned on a fixed text.
class BridgeScorer : public SequenceScorer {
 public:
  // Fetches the vocabulary from /v1/meta.
  BridgeScorer(const BridgeClient &client, std::string conditioning);

  const std::vector<std::string> &vocab() const override { return vocab_; }
  std::vector<double> LogProbs(std::span<const TokenId> prefix) const override;
  TokenId eos_id() const override { return eos_; }
  std::optional<TokenId> unk_id() const override { return unk_; }

 private:
  const BridgeClient &client_;
  std::string conditioning_;
  std::string vocab_handle_;
  std::vector<std::string> vocab_;
  TokenId eos_ = 0;
  std::optional<TokenId> unk_;
};

class BridgeSimilarity : public SimilarityScorer {
 public:
  explicit BridgeSimilarity(const BridgeClient &client) : client_(client) {}
  double Score(std::string_view a, std::string_view b) const override;

 private:
  const BridgeClient &client_;
};

class BridgeRelationPredictor : public RelationPredictor {
 public:
  // Fetches the label set from /v1/meta.
  explicit BridgeRelationPredictor(const BridgeClient &client);
  std::string Predict(std::string_view text, std::string_view regulator,
                      std::string_view regulated) const override;
  const std::vector<std::string> &labels() const override { return labels_; }

 private:
  const BridgeClient &client_;
  std::vector<std::string> labels_;
};

class BridgeTyper : public EntityTyper {
 public:
  explicit BridgeTyper(const BridgeClient &client) : client_(client) {}
  std::optional<std::string> TypeOf(std::string_view surface,
                                    std::string_view context) const override;

 private:
  const BridgeClient &client_;
};

}  // namespace mechnli

#endif  // MECHNLI_BRIDGE_CLIENT_H_
