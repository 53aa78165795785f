#ifndef MECHNLI_TESTS_TESTING_FIXTURES_H_
#define MECHNLI_TESTS_TESTING_FIXTURES_H_

#include <cstdint>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "mechnli/annotate.h"
#include "mechnli/bridge_client.h"
#include "mechnli/corpus.h"
#include "mechnli/dataset.h"
#include "mechnli/evalharness.h"
#include "mechnli/lm.h"
#include "mechnli/neurologic.h"
#include "mechnli/perturb.h"
#include "mechnli/random.h"

namespace mechnli::testing {

std::string DataPath(const std::string &name);
// Fresh empty directory under the build tree.
std::string ScratchDir(const std::string &name);

// Mention of the `occurrence`-th appearance of `surface` in `text`.
EntityMention Mention(const std::string &text, const std::string &surface,
                      std::size_t sentence_index, std::string type = "",
                      Role role = Role::kNone, std::size_t occurrence = 0);

// Yeast uracil example: six premise sentences and a marked conclusion.
Abstract Table1Abstract();
std::string Table1Hypothesis();
LexiconTyper Table1Typer();
// Seed under which SRE replaces the regulated proton with ATP.
inline constexpr std::uint64_t kTable1SreSeed = 3;

// Barley aleurone ABA/pH example.
Abstract Table5Abstract();
std::string Table5Conclusion();
SupportingSet Table5Supporting();
LexiconTyper Table5Typer();
EntityPool Table5Pool();
// Seed for PerturbAll under which VNeg flips the first predicate site.
inline constexpr std::uint64_t kTable5Seed = 4;
std::map<PerturbationKind, std::string> Table5Golden();

// 100 abstracts with 3-15 premise sentences; the first 91 end in a sentence
// containing a conclusion phrase, the last 9 do not.
std::vector<Abstract> ExtractionFixture();
// Final sentence built around `phrase`, e.g. for the 13-phrase check.
std::string PhraseSentence(const std::string &phrase, const std::string &regulator,
                           const std::string &regulated);

// 100 corpus lines of which those at `CorruptLines()` (1-based) are invalid.
std::string CorruptCorpusJsonl();
std::vector<std::size_t> CorruptLines();

// Random valid conclusion over a small word list.
MarkedConclusion RandomConclusion(Rng &rng);
SupportingSet RandomSupporting(Rng &rng, const MarkedConclusion &c);

// Deterministic pseudo-random distribution per prefix. Vocab "t0".."t{n-1}",
// eos is id 0.
class ToyScorer : public SequenceScorer {
 public:
  ToyScorer(std::size_t vocab_size, std::uint64_t seed);
  const std::vector<std::string> &vocab() const override { return vocab_; }
  std::vector<double> LogProbs(std::span<const TokenId> prefix) const override;
  TokenId eos_id() const override { return 0; }

 private:
  std::vector<std::string> vocab_;
  std::uint64_t seed_;
};

struct BruteForceBest {
  bool found = false;
  std::vector<TokenId> tokens;
  double score = 0.0;
};

// Enumerates every eos-terminated sequence within the length bounds that
// contains no forbidden phrase and no repeated n-gram, and returns the best
// one satisfying all clauses.
BruteForceBest BruteForce(const SequenceScorer &scorer, const ConstraintSet &constraints,
                          const DecoderConfig &config);

// 1-3 clauses of 1-2 literals over non-eos tokens of `scorer`.
ConstraintSet RandomConstraints(Rng &rng, const SequenceScorer &scorer);

// Prediction file realizing per-category recalls of correct/100.
struct Table4Fixture {
  std::vector<NLIInstance> dataset;
  std::vector<PredictionRecord> predictions;
};
Table4Fixture MakeTable4Fixture();

// `groups` groups of 10 instances; `reaching` of them have 7 or more correct.
Table4Fixture MakeConsistencyFixture(std::size_t groups, std::size_t reaching);

// Groups with random applicability for assembly tests.
std::vector<Group> RandomGroups(std::size_t n, std::uint64_t seed,
                                std::optional<Split> split = std::nullopt);

// In-process bridge server on an ephemeral port, answering with the bundled
// implementations: an n-gram model, cosine similarity, the keyword relation
// predictor and a lexicon typer.
class FakeBridge {
 public:
  enum class Fault { kNone, kErrorCode, kWrongId, kGarbage, kWrongHandle, kShortDistribution,
                     kWrongSchema, kUnknownLabel };

  FakeBridge();
  ~FakeBridge();
  FakeBridge(const FakeBridge &) = delete;
  FakeBridge &operator=(const FakeBridge &) = delete;

  BridgeEndpoint endpoint() const;
  std::string address() const;  // http://127.0.0.1:port

  // Applies to every later request on `endpoint` until cleared.
  void SetFault(const std::string &endpoint, Fault fault, std::string code = "model_error");
  void ClearFaults();
  std::size_t requests() const;

  const NGramLM &lm() const { return *lm_; }
  const LexiconTyper &typer() const { return typer_; }
  static std::vector<std::vector<std::string>> TrainingText();

 private:
  struct Server;
  std::unique_ptr<NGramLM> lm_;
  LexiconTyper typer_;
  std::unique_ptr<Server> server_;
  int port_ = 0;
  mutable std::mutex mu_;
  std::map<std::string, std::pair<Fault, std::string>> faults_;
  std::size_t requests_ = 0;
};

}  // namespace mechnli::testing

#endif  // MECHNLI_TESTS_TESTING_FIXTURES_H_
