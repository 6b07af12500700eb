#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "ood/corpus.hpp"
#include "ood/folds.hpp"

namespace ood {

/// Externally computed sentence embeddings keyed by instance id.
class EmbeddingSet {
 public:
  explicit EmbeddingSet(std::size_t dim) : dim_(dim) {}

  std::size_t dim() const { return dim_; }
  std::size_t size() const { return vectors_.size(); }

  void add(std::string id, std::vector<float> vector);
  const std::vector<float>* find(std::string_view id) const;
  /// Throws SchemaError naming the id when absent.
  const std::vector<float>& at(std::string_view id) const;

 private:
  std::size_t dim_;
  std::unordered_map<std::string, std::vector<float>> vectors_;
};

/// Format: "dim=<d>" header, then "<id>\t<f1>,<f2>,..." per line.
EmbeddingSet parse_embeddings(std::istream& in, std::string_view source);
EmbeddingSet load_embeddings(const std::filesystem::path& path);

/// 100 x ARI between a 2-means clustering of train+test embeddings and the
/// train(0)/test(1) membership labels.
double separability(std::span<const std::string> train_ids, std::span<const std::string> test_ids,
                    const EmbeddingSet& embeddings, std::uint64_t seed);

struct SurfaceDeltas {
  double delta_flesch = 0.0;
  double delta_words = 0.0;
};

/// Absolute differences of mean per-text Flesch score and word count.
SurfaceDeltas surface_deltas(std::span<const std::string> train_texts,
                             std::span<const std::string> test_texts);

/// 100 x KL(train || test) over the label set with additive smoothing.
double label_kl(std::span<const std::string> train_labels, std::span<const std::string> test_labels,
                std::span<const std::string> label_set);

struct TokenLosses {
  std::string id;
  std::vector<double> losses;
};

/// Format: "<id>\t<l1>,<l2>,..." per line.
std::vector<TokenLosses> parse_token_losses(std::istream& in, std::string_view source);
std::vector<TokenLosses> load_token_losses(const std::filesystem::path& path);

struct PseudoPerplexity {
  std::vector<std::pair<std::string, double>> instance_means;
  double corpus_mean = 0.0;
  /// corpus_mean minus the reference mean, when one is given.
  std::optional<double> delta;
};

PseudoPerplexity pseudo_perplexity(std::span<const TokenLosses> records,
                                   std::optional<double> reference_mean = std::nullopt);

struct ShiftProfile {
  std::size_t fold = 0;
  /// Absent when no embeddings were supplied.
  std::optional<double> separability;
  double delta_flesch = 0.0;
  double delta_words = 0.0;
  double kl = 0.0;
};

/// Train-vs-test profile of one fold. `embeddings` may be null to skip separability.
ShiftProfile profile_fold(const Corpus& corpus, const Split& split, std::size_t fold,
                          const EmbeddingSet* embeddings, std::uint64_t seed);

/// Profiles for every fold of a plan; folds run on up to `threads` workers,
/// each with its own derived seed, so output is independent of `threads`.
std::vector<ShiftProfile> profile_plan(const Corpus& corpus, const FoldPlan& plan,
                                       const EmbeddingSet* embeddings, std::size_t threads = 1);

}  // namespace ood
