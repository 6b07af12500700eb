#include "ood/verbalizer.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <istream>
#include <limits>
#include <map>
#include <ostream>
#include <set>
#include <unordered_set>

#include "json.hpp"
#include "ood/error.hpp"

namespace ood {

std::vector<TokenLogProbs> parse_logprobs(std::istream& in, std::string_view source) {
  std::vector<TokenLogProbs> out;
  std::unordered_set<std::string> seen;
  std::string line;
  std::size_t number = 0;
  while (std::getline(in, line)) {
    ++number;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const std::string at = std::string(source) + ":" + std::to_string(number);
    nlohmann::json record;
    try {
      record = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception& e) {
      throw SchemaError(at + ": malformed JSON record (" + e.what() + ")");
    }
    if (!record.is_object() || !record.contains("id") || !record["id"].is_string()) {
      throw SchemaError(at + ": record needs a string 'id'");
    }
    if (!record.contains("logprobs") || !record["logprobs"].is_object()) {
      throw SchemaError(at + ": record needs an object 'logprobs'");
    }
    TokenLogProbs item;
    item.instance_id = record["id"].get<std::string>();
    for (const auto& [token, value] : record["logprobs"].items()) {
      if (!value.is_number()) throw SchemaError(at + ": log-probability of '" + token + "' is not a number");
      const double logprob = value.get<double>();
      if (!(logprob <= 0.0)) {
        throw SchemaError(at + ": log-probability of '" + token + "' must be <= 0");
      }
      item.entries.emplace(token, logprob);
    }
    if (item.entries.empty()) throw SchemaError(at + ": empty logprobs for '" + item.instance_id + "'");
    if (!seen.insert(item.instance_id).second) {
      throw SchemaError(at + ": duplicate id '" + item.instance_id + "'");
    }
    out.push_back(std::move(item));
  }
  return out;
}

std::vector<TokenLogProbs> load_logprobs(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw SchemaError("cannot open log-prob file " + path.string());
  return parse_logprobs(in, path.string());
}

Verbalizer::Verbalizer(std::vector<std::string> classes,
                       std::vector<std::vector<std::string>> token_sets, VerbalizerOrigin origin)
    : classes_(std::move(classes)), token_sets_(std::move(token_sets)), origin_(origin) {
  if (classes_.empty()) throw ValidationError("verbalizer has no classes");
  if (classes_.size() != token_sets_.size()) {
    throw ValidationError("verbalizer needs one token set per class");
  }
  std::map<std::string, std::size_t> owner;
  for (std::size_t k = 0; k < classes_.size(); ++k) {
    if (token_sets_[k].empty()) {
      throw ValidationError("verbalizer class '" + classes_[k] + "' has no tokens");
    }
    for (const auto& token : token_sets_[k]) {
      const auto [it, inserted] = owner.emplace(token, k);
      if (!inserted) {
        throw ValidationError("token '" + token + "' is listed under classes '" +
                              classes_[it->second] + "' and '" + classes_[k] + "'");
      }
    }
  }
}

Verbalizer build_automatic(std::span<const TokenLogProbs> train_logprobs,
                           std::span<const std::string> train_labels,
                           std::span<const std::string> classes, std::size_t tokens_per_class) {
  if (train_logprobs.size() != train_labels.size()) {
    throw ValidationError("verbalizer: log-probs and labels must be parallel");
  }
  if (tokens_per_class == 0) throw ValidationError("verbalizer: tokens per class must be >= 1");
  const std::size_t k = classes.size();
  if (k < 2) throw ValidationError("verbalizer: need at least 2 classes");

  std::vector<std::size_t> class_of(train_labels.size());
  std::vector<double> class_sizes(k, 0.0);
  for (std::size_t i = 0; i < train_labels.size(); ++i) {
    const auto it = std::find(classes.begin(), classes.end(), train_labels[i]);
    if (it == classes.end()) throw ValidationError("unknown label '" + train_labels[i] + "'");
    class_of[i] = static_cast<std::size_t>(it - classes.begin());
    class_sizes[class_of[i]] += 1.0;
  }
  for (std::size_t c = 0; c < k; ++c) {
    if (class_sizes[c] == 0.0) {
      throw ValidationError("verbalizer: class '" + classes[c] + "' has no train instances");
    }
  }
  const double n = static_cast<double>(train_labels.size());

  // Probability mass per candidate token and class; std::map keeps the pool sorted.
  std::map<std::string, std::vector<double>> mass;
  for (std::size_t i = 0; i < train_logprobs.size(); ++i) {
    for (const auto& [token, logprob] : train_logprobs[i].entries) {
      auto& row = mass[token];
      if (row.empty()) row.assign(k, 0.0);
      row[class_of[i]] += std::exp(logprob);
    }
  }

  struct Candidate {
    std::string token;
    double ratio;
  };
  std::vector<std::vector<Candidate>> per_class(k);
  for (const auto& [token, row] : mass) {
    double total = 0.0;
    for (double m : row) total += m;
    std::size_t best = 0;
    double best_ratio = -std::numeric_limits<double>::infinity();
    for (std::size_t c = 0; c < k; ++c) {
      const double inside = row[c] / class_sizes[c];
      const double outside = std::max(0.0, total - row[c]) / (n - class_sizes[c]);
      const double ratio = (inside + kTokenEpsilon) / (outside + kTokenEpsilon);
      if (ratio > best_ratio) {
        best_ratio = ratio;
        best = c;
      }
    }
    per_class[best].push_back({token, best_ratio});
  }

  std::vector<std::vector<std::string>> token_sets(k);
  for (std::size_t c = 0; c < k; ++c) {
    auto& candidates = per_class[c];
    if (candidates.empty()) {
      throw ValidationError("verbalizer: no candidate token prefers class '" + classes[c] +
                            "'; export more tokens per instance to enlarge the candidate pool");
    }
    std::sort(candidates.begin(), candidates.end(), [](const Candidate& a, const Candidate& b) {
      if (a.ratio != b.ratio) return a.ratio > b.ratio;
      return a.token < b.token;
    });
    const std::size_t keep = std::min(tokens_per_class, candidates.size());
    for (std::size_t i = 0; i < keep; ++i) token_sets[c].push_back(candidates[i].token);
  }
  return Verbalizer(std::vector<std::string>(classes.begin(), classes.end()), std::move(token_sets),
                    VerbalizerOrigin::automatic);
}

Verbalizer parse_manual(std::istream& in, std::span<const std::string> classes,
                        std::string_view source) {
  std::map<std::string, std::vector<std::string>> listed;
  std::string line;
  std::size_t number = 0;
  while (std::getline(in, line)) {
    ++number;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line.front() == '#') continue;
    const std::string at = std::string(source) + ":" + std::to_string(number);
    const auto tab = line.find('\t');
    if (tab == std::string::npos || tab == 0) throw SchemaError(at + ": expected '<class>\\t<tokens>'");
    const std::string label = line.substr(0, tab);
    if (std::find(classes.begin(), classes.end(), label) == classes.end()) {
      throw SchemaError(at + ": unknown class '" + label + "'");
    }
    std::vector<std::string> tokens;
    std::string_view rest(line);
    rest.remove_prefix(tab + 1);
    while (true) {
      const auto comma = rest.find(',');
      const auto token = rest.substr(0, comma);
      if (token.empty()) throw SchemaError(at + ": empty token for class '" + label + "'");
      tokens.emplace_back(token);
      if (comma == std::string_view::npos) break;
      rest.remove_prefix(comma + 1);
    }
    if (!listed.emplace(label, std::move(tokens)).second) {
      throw SchemaError(at + ": class '" + label + "' listed twice");
    }
  }

  std::vector<std::vector<std::string>> token_sets;
  for (const auto& label : classes) {
    const auto it = listed.find(label);
    if (it == listed.end()) {
      throw SchemaError(std::string(source) + ": class '" + label + "' has no tokens");
    }
    token_sets.push_back(it->second);
  }
  try {
    return Verbalizer(std::vector<std::string>(classes.begin(), classes.end()),
                      std::move(token_sets), VerbalizerOrigin::manual);
  } catch (const ValidationError& e) {
    throw SchemaError(std::string(source) + ": " + e.what());
  }
}

Verbalizer load_manual(const std::filesystem::path& path, std::span<const std::string> classes) {
  std::ifstream in(path);
  if (!in) throw SchemaError("cannot open verbalizer file " + path.string());
  return parse_manual(in, classes, path.string());
}

void write_verbalizer(std::ostream& out, const Verbalizer& verbalizer) {
  out << "# origin="
      << (verbalizer.origin() == VerbalizerOrigin::automatic ? "automatic" : "manual") << '\n';
  for (std::size_t k = 0; k < verbalizer.classes().size(); ++k) {
    out << verbalizer.classes()[k] << '\t';
    const auto& tokens = verbalizer.tokens(k);
    for (std::size_t i = 0; i < tokens.size(); ++i) out << (i ? "," : "") << tokens[i];
    out << '\n';
  }
}

Prediction predict(const TokenLogProbs& logprobs, const Verbalizer& verbalizer) {
  const std::size_t k = verbalizer.classes().size();
  const double floor = std::log(kTokenEpsilon);

  Prediction prediction;
  prediction.scores.assign(k, 0.0);
  for (std::size_t c = 0; c < k; ++c) {
    for (const auto& token : verbalizer.tokens(c)) {
      const auto it = logprobs.entries.find(token);
      if (it == logprobs.entries.end()) {
        prediction.missing_tokens.push_back(token);
        prediction.scores[c] += floor;
      } else {
        prediction.scores[c] += it->second;
      }
    }
  }

  const auto best = std::max_element(prediction.scores.begin(), prediction.scores.end());
  prediction.class_index = static_cast<std::size_t>(best - prediction.scores.begin());
  prediction.label = verbalizer.classes()[prediction.class_index];

  double total = 0.0;
  prediction.probabilities.resize(k);
  for (std::size_t c = 0; c < k; ++c) {
    prediction.probabilities[c] = std::exp(prediction.scores[c] - *best);
    total += prediction.probabilities[c];
  }
  for (auto& p : prediction.probabilities) p /= total;
  return prediction;
}

}  // namespace ood
