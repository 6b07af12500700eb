#include "ood/shiftstats.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <unordered_set>

#include "ood/error.hpp"
#include "ood/kmeans.hpp"
#include "ood/parallel.hpp"
#include "ood/rng.hpp"
#include "ood/text_stats.hpp"

namespace ood {

namespace {

constexpr double kLabelSmoothing = 1e-9;
constexpr std::uint64_t kSeparabilityStream = 0x400;

std::string where(std::string_view source, std::size_t line) {
  return std::string(source) + ":" + std::to_string(line);
}

template <typename T>
std::vector<T> parse_number_list(std::string_view text, const std::string& at) {
  std::vector<T> values;
  while (true) {
    const auto comma = text.find(',');
    const auto item = text.substr(0, comma);
    T value{};
    const auto [ptr, ec] = std::from_chars(item.data(), item.data() + item.size(), value);
    if (ec != std::errc() || ptr != item.data() + item.size() || !std::isfinite(value)) {
      throw SchemaError(at + ": bad number '" + std::string(item) + "'");
    }
    values.push_back(value);
    if (comma == std::string_view::npos) break;
    text.remove_prefix(comma + 1);
  }
  return values;
}

std::pair<std::string_view, std::string_view> split_tab(std::string_view line, const std::string& at) {
  const auto tab = line.find('\t');
  if (tab == std::string_view::npos || tab == 0 || tab + 1 == line.size()) {
    throw SchemaError(at + ": expected '<id>\\t<values>'");
  }
  return {line.substr(0, tab), line.substr(tab + 1)};
}

std::string_view strip_cr(std::string_view line) {
  if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
  return line;
}

}  // namespace

// ---------------------------------------------------------------------------
// Embeddings

void EmbeddingSet::add(std::string id, std::vector<float> vector) {
  if (vector.size() != dim_) {
    throw SchemaError("embedding for '" + id + "' has length " + std::to_string(vector.size()) +
                      ", expected " + std::to_string(dim_));
  }
  const auto [it, inserted] = vectors_.emplace(std::move(id), std::move(vector));
  if (!inserted) throw SchemaError("duplicate embedding id '" + it->first + "'");
}

const std::vector<float>* EmbeddingSet::find(std::string_view id) const {
  const auto it = vectors_.find(std::string(id));
  return it == vectors_.end() ? nullptr : &it->second;
}

const std::vector<float>& EmbeddingSet::at(std::string_view id) const {
  if (const auto* vector = find(id)) return *vector;
  throw SchemaError("missing embedding for id '" + std::string(id) + "'");
}

EmbeddingSet parse_embeddings(std::istream& in, std::string_view source) {
  std::string line;
  if (!std::getline(in, line)) throw SchemaError(std::string(source) + ": empty embedding file");
  std::string_view header = strip_cr(line);
  std::size_t dim = 0;
  if (!header.starts_with("dim=")) {
    throw SchemaError(where(source, 1) + ": expected header 'dim=<d>'");
  }
  header.remove_prefix(4);
  const auto [ptr, ec] = std::from_chars(header.data(), header.data() + header.size(), dim);
  if (ec != std::errc() || ptr != header.data() + header.size() || dim == 0) {
    throw SchemaError(where(source, 1) + ": dim must be a positive integer");
  }

  EmbeddingSet set(dim);
  std::size_t number = 1;
  while (std::getline(in, line)) {
    ++number;
    const auto content = strip_cr(line);
    if (content.empty()) continue;
    const std::string at = where(source, number);
    const auto [id, values] = split_tab(content, at);
    auto vector = parse_number_list<float>(values, at);
    if (vector.size() != dim) {
      throw SchemaError(at + ": vector has " + std::to_string(vector.size()) +
                        " components, header says " + std::to_string(dim));
    }
    try {
      set.add(std::string(id), std::move(vector));
    } catch (const SchemaError& e) {
      throw SchemaError(at + ": " + e.what());
    }
  }
  return set;
}

EmbeddingSet load_embeddings(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw SchemaError("cannot open embedding file " + path.string());
  return parse_embeddings(in, path.string());
}

// ---------------------------------------------------------------------------
// Metrics

double separability(std::span<const std::string> train_ids, std::span<const std::string> test_ids,
                    const EmbeddingSet& embeddings, std::uint64_t seed) {
  PointSet points(embeddings.dim());
  std::vector<int> membership;
  membership.reserve(train_ids.size() + test_ids.size());
  for (const auto& id : train_ids) {
    points.push_back(std::span<const float>(embeddings.at(id)));
    membership.push_back(0);
  }
  for (const auto& id : test_ids) {
    points.push_back(std::span<const float>(embeddings.at(id)));
    membership.push_back(1);
  }
  const KMeansResult clusters = kmeans2(points, seed);
  return 100.0 * adjusted_rand_index(clusters.assignment, membership);
}

SurfaceDeltas surface_deltas(std::span<const std::string> train_texts,
                             std::span<const std::string> test_texts) {
  if (train_texts.empty() || test_texts.empty()) {
    throw ValidationError("surface statistics need non-empty train and test splits");
  }
  auto means = [](std::span<const std::string> texts) {
    double flesch_sum = 0.0;
    double words_sum = 0.0;
    for (const auto& text : texts) {
      const TextCounts counts = count_text(text);
      if (counts.words == 0) {
        throw ValidationError("Flesch score undefined: text has no words: '" + text + "'");
      }
      flesch_sum += flesch(counts);
      words_sum += static_cast<double>(counts.words);
    }
    const double n = static_cast<double>(texts.size());
    return std::pair{flesch_sum / n, words_sum / n};
  };
  const auto [train_flesch, train_words] = means(train_texts);
  const auto [test_flesch, test_words] = means(test_texts);
  return {std::abs(train_flesch - test_flesch), std::abs(train_words - test_words)};
}

double label_kl(std::span<const std::string> train_labels, std::span<const std::string> test_labels,
                std::span<const std::string> label_set) {
  if (train_labels.empty() || test_labels.empty()) {
    throw ValidationError("label KL needs non-empty train and test label lists");
  }
  auto distribution = [&](std::span<const std::string> labels) {
    std::vector<double> counts(label_set.size(), 0.0);
    for (const auto& label : labels) {
      const auto it = std::find(label_set.begin(), label_set.end(), label);
      if (it == label_set.end()) throw ValidationError("label '" + label + "' not in label set");
      counts[static_cast<std::size_t>(it - label_set.begin())] += 1.0;
    }
    for (auto& c : counts) c /= static_cast<double>(labels.size());
    return counts;
  };
  const auto raw_p = distribution(train_labels);
  const auto raw_q = distribution(test_labels);
  const double norm = 1.0 + kLabelSmoothing * static_cast<double>(label_set.size());

  double kl = 0.0;
  for (std::size_t c = 0; c < label_set.size(); ++c) {
    if (raw_p[c] == 0.0) continue;
    const double p = (raw_p[c] + kLabelSmoothing) / norm;
    const double q = (raw_q[c] + kLabelSmoothing) / norm;
    kl += p * std::log(p / q);
  }
  return 100.0 * std::max(0.0, kl);
}

// ---------------------------------------------------------------------------
// Pseudo-perplexity

std::vector<TokenLosses> parse_token_losses(std::istream& in, std::string_view source) {
  std::vector<TokenLosses> records;
  std::unordered_set<std::string> seen;
  std::string line;
  std::size_t number = 0;
  while (std::getline(in, line)) {
    ++number;
    const auto content = strip_cr(line);
    if (content.empty()) continue;
    const std::string at = where(source, number);
    const auto [id, values] = split_tab(content, at);
    TokenLosses record{std::string(id), parse_number_list<double>(values, at)};
    for (double loss : record.losses) {
      if (loss < 0.0) throw SchemaError(at + ": negative token loss for '" + record.id + "'");
    }
    if (!seen.insert(record.id).second) {
      throw SchemaError(at + ": duplicate id '" + record.id + "'");
    }
    records.push_back(std::move(record));
  }
  return records;
}

std::vector<TokenLosses> load_token_losses(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw SchemaError("cannot open token-loss file " + path.string());
  return parse_token_losses(in, path.string());
}

PseudoPerplexity pseudo_perplexity(std::span<const TokenLosses> records,
                                   std::optional<double> reference_mean) {
  if (records.empty()) throw ValidationError("pseudo-perplexity needs at least one instance");
  PseudoPerplexity result;
  double total = 0.0;
  for (const auto& record : records) {
    if (record.losses.empty()) {
      throw ValidationError("instance '" + record.id + "' has no token losses");
    }
    double sum = 0.0;
    for (double loss : record.losses) {
      if (loss < 0.0) throw ValidationError("negative token loss for '" + record.id + "'");
      sum += loss;
    }
    const double mean = sum / static_cast<double>(record.losses.size());
    result.instance_means.emplace_back(record.id, mean);
    total += mean;
  }
  result.corpus_mean = total / static_cast<double>(records.size());
  if (reference_mean) result.delta = result.corpus_mean - *reference_mean;
  return result;
}

// ---------------------------------------------------------------------------
// Profiles

ShiftProfile profile_fold(const Corpus& corpus, const Split& split, std::size_t fold,
                          const EmbeddingSet* embeddings, std::uint64_t seed) {
  auto collect = [&](const std::vector<std::string>& ids, auto field) {
    std::vector<std::string> out;
    out.reserve(ids.size());
    for (const auto& id : ids) out.push_back(field(corpus.at(id)));
    return out;
  };
  const auto text = [](const Instance& i) { return i.joined_text(); };
  const auto label = [](const Instance& i) { return i.label; };

  ShiftProfile profile;
  profile.fold = fold;
  const auto deltas = surface_deltas(collect(split.train, text), collect(split.test, text));
  profile.delta_flesch = deltas.delta_flesch;
  profile.delta_words = deltas.delta_words;
  profile.kl = label_kl(collect(split.train, label), collect(split.test, label),
                        corpus.task().labels);
  if (embeddings) profile.separability = separability(split.train, split.test, *embeddings, seed);
  return profile;
}

std::vector<ShiftProfile> profile_plan(const Corpus& corpus, const FoldPlan& plan,
                                       const EmbeddingSet* embeddings, std::size_t threads) {
  std::vector<ShiftProfile> profiles(plan.folds.size());
  parallel_for(plan.folds.size(), threads, [&](std::size_t f) {
    profiles[f] = profile_fold(corpus, plan.folds[f], f, embeddings,
                               Rng::derive(plan.seed, kSeparabilityStream + f));
  });
  return profiles;
}

}  // namespace ood
