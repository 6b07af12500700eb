#pragma once

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace ood {

/// Mask-position token log-probabilities of one instance.
struct TokenLogProbs {
  std::string instance_id;
  std::unordered_map<std::string, double> entries;
};

std::vector<TokenLogProbs> parse_logprobs(std::istream& in, std::string_view source);
std::vector<TokenLogProbs> load_logprobs(const std::filesystem::path& path);

enum class VerbalizerOrigin { automatic, manual };

/// Class -> indicative token sets, frozen once built.
class Verbalizer {
 public:
  /// Validates: one non-empty token set per class, sets pairwise disjoint.
  Verbalizer(std::vector<std::string> classes, std::vector<std::vector<std::string>> token_sets,
             VerbalizerOrigin origin);

  const std::vector<std::string>& classes() const { return classes_; }
  const std::vector<std::string>& tokens(std::size_t class_index) const {
    return token_sets_[class_index];
  }
  VerbalizerOrigin origin() const { return origin_; }

 private:
  std::vector<std::string> classes_;
  std::vector<std::vector<std::string>> token_sets_;
  VerbalizerOrigin origin_;
};

inline constexpr std::size_t kDefaultTokensPerClass = 10;
/// Probability floor for absent tokens and ratio smoothing.
inline constexpr double kTokenEpsilon = 1e-12;

/// Likelihood-ratio token selection over the pooled train candidates.
///
/// For token t and class k the score is the class-k mean of exp(L(t)) over the
/// mean on all other instances (absent tokens count as probability 0, both
/// means smoothed by kTokenEpsilon). Every token goes to its best-scoring class
/// (earlier class on ties) and each class keeps its top `tokens_per_class` by
/// score, ties broken lexicographically.
Verbalizer build_automatic(std::span<const TokenLogProbs> train_logprobs,
                           std::span<const std::string> train_labels,
                           std::span<const std::string> classes,
                           std::size_t tokens_per_class = kDefaultTokensPerClass);

/// File format: one "<class>\t<token>[,<token>...]" line per class; '#'
/// starts a comment line. Every class of `classes` must appear exactly once.
Verbalizer parse_manual(std::istream& in, std::span<const std::string> classes,
                        std::string_view source);
Verbalizer load_manual(const std::filesystem::path& path, std::span<const std::string> classes);
void write_verbalizer(std::ostream& out, const Verbalizer& verbalizer);

struct Prediction {
  std::size_t class_index = 0;
  std::string label;
  std::vector<double> scores;         // w_k per class
  std::vector<double> probabilities;  // softmax over scores
  std::vector<std::string> missing_tokens;
};

/// Sums the log-probabilities of each class's tokens, applies a softmax and
/// takes the argmax (first class on ties). Absent tokens contribute
/// ln(kTokenEpsilon) and are listed in `missing_tokens`.
Prediction predict(const TokenLogProbs& logprobs, const Verbalizer& verbalizer);

}  // namespace ood
