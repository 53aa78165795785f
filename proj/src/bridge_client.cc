#include "mechnli/bridge_client.h"

#include <chrono>
#include <cstdlib>

#include "httplib.h"
#include "mechnli/errors.h"
#include "mechnli/text.h"

namespace mechnli {

using nlohmann::json;

BridgeEndpoint BridgeEndpoint::Parse(std::string_view address) {
  std::string rest = Trim(address);
  constexpr std::string_view kScheme = "http://";
  if (rest.starts_with(kScheme)) rest.erase(0, kScheme.size());
  while (!rest.empty() && rest.back() == '/') rest.pop_back();
  const auto colon = rest.rfind(':');
  if (colon == std::string::npos || colon == 0 || colon + 1 == rest.size()) {
    throw InvalidConfig("bridge address must look like http://host:port");
  }
  BridgeEndpoint ep;
  ep.host = rest.substr(0, colon);
  try {
    std::size_t used = 0;
    ep.port = std::stoi(rest.substr(colon + 1), &used);
    if (used != rest.size() - colon - 1) throw std::invalid_argument("port");
  } catch (const std::exception &) {
    throw InvalidConfig("bad bridge port in `" + std::string(address) + "`");
  }
  if (ep.port <= 0 || ep.port > 65535) throw InvalidConfig("bridge port out of range");
  return ep;
}

std::optional<BridgeEndpoint> BridgeEndpoint::FromEnv(const char *var) {
  const char *value = std::getenv(var);
  if (value == nullptr || *value == '\0') return std::nullopt;
  return Parse(value);
}

BridgeClient::BridgeClient(BridgeEndpoint endpoint, double timeout_seconds)
    : endpoint_(std::move(endpoint)), timeout_seconds_(timeout_seconds) {}

namespace {

httplib::Client MakeClient(const BridgeEndpoint &ep, double timeout_seconds) {
  httplib::Client cli(ep.host, ep.port);
  const auto timeout = std::chrono::duration<double>(timeout_seconds);
  cli.set_connection_timeout(std::chrono::duration_cast<std::chrono::microseconds>(timeout));
  cli.set_read_timeout(std::chrono::duration_cast<std::chrono::microseconds>(timeout));
  return cli;
}

}  // namespace

json BridgeClient::Call(std::string_view endpoint, const json &payload) const {
  const std::uint64_t id = next_id_.fetch_add(1);
  const json request = {{"id", id}, {"endpoint", endpoint}, {"payload", payload}};
  auto cli = MakeClient(endpoint_, timeout_seconds_);
  const std::string path = "/v1/" + std::string(endpoint);
  auto res = cli.Post(path, request.dump(), "application/json");
  if (!res) {
    throw ModelUnavailable("bridge " + path + ": " + httplib::to_string(res.error()));
  }
  json response;
  try {
    response = json::parse(res->body);
  } catch (const json::parse_error &) {
    throw ModelUnavailable("bridge " + path + ": unparseable response (HTTP " +
                           std::to_string(res->status) + ")");
  }
  if (!response.is_object() || response.value("id", json()) != id) {
    throw ModelUnavailable("bridge " + path + ": response id mismatch");
  }
  if (!response.value("ok", false)) {
    const json err = response.value("error", json::object());
    const std::string code = err.is_object() ? err.value("code", "") : "";
    const std::string message = err.is_object() ? err.value("message", "") : "";
    if (code == "tokenization_mismatch") throw TokenizationMismatch(message);
    throw ModelUnavailable("bridge " + path + ": " + (code.empty() ? "error" : code) +
                           (message.empty() ? "" : ": " + message));
  }
  if (!response.contains("payload")) throw ModelUnavailable("bridge " + path + ": no payload");
  return response["payload"];
}

bool BridgeClient::Healthy() const {
  auto cli = MakeClient(endpoint_, timeout_seconds_);
  auto res = cli.Get("/v1/health");
  return res && res->status == 200;
}

json BridgeClient::Meta() const {
  json meta = Call("meta", json::object());
  if (!meta.is_object() || meta.value("schema", "") != kBridgeSchema) {
    throw ModelUnavailable("bridge speaks an unknown schema");
  }
  return meta;
}

BridgeScorer::BridgeScorer(const BridgeClient &client, std::string conditioning)
    : client_(client), conditioning_(std::move(conditioning)) {
  const json meta = client_.Meta();
  try {
    vocab_handle_ = meta.at("vocab_handle").get<std::string>();
    vocab_ = meta.at("vocab").get<std::vector<std::string>>();
    eos_ = meta.at("eos").get<TokenId>();
    if (meta.contains("unk") && !meta["unk"].is_null()) unk_ = meta["unk"].get<TokenId>();
  } catch (const json::exception &e) {
    throw ModelUnavailable(std::string("bridge meta: ") + e.what());
  }
  if (eos_ < 0 || static_cast<std::size_t>(eos_) >= vocab_.size()) {
    throw ModelUnavailable("bridge meta: eos outside the vocabulary");
  }
  IndexVocab();
}

std::vector<double> BridgeScorer::LogProbs(std::span<const TokenId> prefix) const {
  const json payload = {{"prefix", std::vector<TokenId>(prefix.begin(), prefix.end())},
                        {"conditioning", conditioning_},
                        {"vocab_handle", vocab_handle_}};
  const json out = client_.Call("logprobs", payload);
  if (out.value("vocab_handle", "") != vocab_handle_) {
    throw TokenizationMismatch("bridge answered with a different vocabulary");
  }
  std::vector<double> logprobs;
  try {
    logprobs = out.at("logprobs").get<std::vector<double>>();
  } catch (const json::exception &e) {
    throw ModelUnavailable(std::string("bridge logprobs: ") + e.what());
  }
  if (logprobs.size() != vocab_.size()) {
    throw TokenizationMismatch("bridge distribution size differs from the vocabulary");
  }
  return logprobs;
}

double BridgeSimilarity::Score(std::string_view a, std::string_view b) const {
  const json out = client_.Call("similarity", {{"a", a}, {"b", b}});
  if (!out.contains("score") || !out["score"].is_number()) {
    throw ModelUnavailable("bridge similarity: no score");
  }
  return out["score"].get<double>();
}

BridgeRelationPredictor::BridgeRelationPredictor(const BridgeClient &client) : client_(client) {
  try {
    labels_ = client_.Meta().at("relation_labels").get<std::vector<std::string>>();
  } catch (const json::exception &e) {
    throw ModelUnavailable(std::string("bridge meta: ") + e.what());
  }
}

std::string BridgeRelationPredictor::Predict(std::string_view text, std::string_view regulator,
                                             std::string_view regulated) const {
  const json out = client_.Call(
      "relation", {{"premise", text}, {"regulator", regulator}, {"regulated", regulated}});
  if (!out.contains("label") || !out["label"].is_string()) {
    throw ModelUnavailable("bridge relation: no label");
  }
  std::string label = out["label"].get<std::string>();
  if (std::find(labels_.begin(), labels_.end(), label) == labels_.end()) {
    throw ModelUnavailable("bridge relation: label `" + label + "` not announced in meta");
  }
  return label;
}

std::optional<std::string> BridgeTyper::TypeOf(std::string_view surface,
                                               std::string_view context) const {
  const json out = client_.Call("entity-type", {{"surface", surface}, {"context", context}});
  if (!out.contains("label")) throw ModelUnavailable("bridge entity-type: no label");
  if (out["label"].is_null()) return std::nullopt;
  if (!out["label"].is_string()) throw ModelUnavailable("bridge entity-type: bad label");
  return out["label"].get<std::string>();
}

}  // namespace mechnli
