#include "ood/runeval.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <istream>
#include <numeric>
#include <tuple>
#include <unordered_set>

#include "json.hpp"
#include "ood/error.hpp"

namespace ood {

double macro_f1(std::span<const std::string> true_labels, std::span<const std::string> pred_labels,
                std::span<const std::string> label_set) {
  if (true_labels.size() != pred_labels.size()) {
    throw ValidationError("macro F1: true and predicted label lists differ in length");
  }
  if (true_labels.empty()) throw ValidationError("macro F1 needs at least one label");
  if (label_set.empty()) throw ValidationError("macro F1 needs a non-empty label set");

  auto index_of = [&](const std::string& label) {
    const auto it = std::find(label_set.begin(), label_set.end(), label);
    if (it == label_set.end()) throw ValidationError("unknown label '" + label + "'");
    return static_cast<std::size_t>(it - label_set.begin());
  };

  const std::size_t k = label_set.size();
  std::vector<double> tp(k, 0.0), fp(k, 0.0), fn(k, 0.0);
  for (std::size_t i = 0; i < true_labels.size(); ++i) {
    const auto t = index_of(true_labels[i]);
    const auto p = index_of(pred_labels[i]);
    if (t == p) {
      tp[t] += 1.0;
    } else {
      fp[p] += 1.0;
      fn[t] += 1.0;
    }
  }

  double sum = 0.0;
  for (std::size_t c = 0; c < k; ++c) {
    // F1 = 2TP / (2TP + FP + FN), which is 0 whenever precision + recall is 0.
    const double denominator = 2.0 * tp[c] + fp[c] + fn[c];
    if (denominator > 0.0) sum += 2.0 * tp[c] / denominator;
  }
  return 100.0 * sum / static_cast<double>(k);
}

namespace {

// Number of tied pairs among runs of equal values in an already sorted range.
template <typename It, typename Eq>
double tied_pairs(It begin, It end, Eq equal) {
  double total = 0.0;
  for (It run = begin; run != end;) {
    It next = run + 1;
    while (next != end && equal(*run, *next)) ++next;
    const auto length = static_cast<double>(next - run);
    total += length * (length - 1.0) / 2.0;
    run = next;
  }
  return total;
}

// Bottom-up merge sort on y counting exchanges (= discordant pairs among pairs
// not tied in x or y, given the sort by (x, y)).
double merge_sort_swaps(std::vector<double>& values) {
  const std::size_t n = values.size();
  std::vector<double> buffer(n);
  double swaps = 0.0;
  for (std::size_t width = 1; width < n; width *= 2) {
    for (std::size_t lo = 0; lo < n; lo += 2 * width) {
      const std::size_t mid = std::min(lo + width, n);
      const std::size_t hi = std::min(lo + 2 * width, n);
      std::size_t i = lo, j = mid, out = lo;
      while (i < mid && j < hi) {
        if (values[j] < values[i]) {
          swaps += static_cast<double>(mid - i);
          buffer[out++] = values[j++];
        } else {
          buffer[out++] = values[i++];
        }
      }
      while (i < mid) buffer[out++] = values[i++];
      while (j < hi) buffer[out++] = values[j++];
    }
    values.swap(buffer);
  }
  return swaps;
}

}  // namespace

std::optional<double> kendall_tau_b(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw ValidationError("Kendall tau: length mismatch");
  const std::size_t n = x.size();
  if (n < 2) throw ValidationError("Kendall tau needs at least 2 observations");

  std::vector<std::pair<double, double>> pairs(n);
  for (std::size_t i = 0; i < n; ++i) pairs[i] = {x[i], y[i]};
  std::sort(pairs.begin(), pairs.end());

  const double total = static_cast<double>(n) * static_cast<double>(n - 1) / 2.0;
  const double ties_x = tied_pairs(pairs.begin(), pairs.end(),
                                   [](const auto& a, const auto& b) { return a.first == b.first; });
  const double ties_xy = tied_pairs(pairs.begin(), pairs.end(),
                                    [](const auto& a, const auto& b) { return a == b; });

  std::vector<double> ys(n);
  std::transform(pairs.begin(), pairs.end(), ys.begin(), [](const auto& p) { return p.second; });
  const double swaps = merge_sort_swaps(ys);
  const double ties_y =
      tied_pairs(ys.begin(), ys.end(), [](double a, double b) { return a == b; });

  const double untied_x = total - ties_x;
  const double untied_y = total - ties_y;
  if (untied_x == 0.0 || untied_y == 0.0) return std::nullopt;
  // concordant - discordant = total - ties_x - ties_y + ties_xy - 2 * swaps
  const double numerator = total - ties_x - ties_y + ties_xy - 2.0 * swaps;
  return numerator / std::sqrt(untied_x * untied_y);
}

std::optional<double> reliability(const RunRecord& run) {
  if (run.epochs.size() < 2) {
    throw ValidationError("reliability undefined: <2 epochs (run '" + run.run_id + "')");
  }
  std::vector<double> losses, scores;
  losses.reserve(run.epochs.size());
  scores.reserve(run.epochs.size());
  for (const auto& epoch : run.epochs) {
    losses.push_back(epoch.dev_loss);
    scores.push_back(epoch.dev_f1);
  }
  const auto tau = kendall_tau_b(losses, scores);
  if (!tau) return std::nullopt;
  return 100.0 * *tau;
}

double mean(std::span<const double> values) {
  if (values.empty()) return 0.0;
  return std::accumulate(values.begin(), values.end(), 0.0) / static_cast<double>(values.size());
}

double sample_stddev(std::span<const double> values) {
  if (values.size() < 2) return 0.0;
  const double m = mean(values);
  double squares = 0.0;
  for (double v : values) squares += (v - m) * (v - m);
  return std::sqrt(squares / static_cast<double>(values.size() - 1));
}

void validate_run(const RunRecord& run) {
  if (run.epochs.size() < 2) {
    throw ValidationError("reliability undefined: <2 epochs (run '" + run.run_id + "')");
  }
  for (std::size_t i = 0; i < run.epochs.size(); ++i) {
    const auto& e = run.epochs[i];
    if (i > 0 && e.epoch <= run.epochs[i - 1].epoch) {
      throw ValidationError("run '" + run.run_id + "': epochs must be strictly increasing");
    }
    if (!(e.dev_loss >= 0.0)) {
      throw ValidationError("run '" + run.run_id + "': dev_loss must be non-negative");
    }
    if (!(e.dev_f1 >= 0.0 && e.dev_f1 <= 100.0)) {
      throw ValidationError("run '" + run.run_id + "': dev_f1 must lie in [0, 100]");
    }
  }
  if (run.test_true.size() != run.test_pred.size()) {
    throw ValidationError("run '" + run.run_id + "': test true/pred lists differ in length");
  }
  if (run.test_true.empty()) {
    throw ValidationError("run '" + run.run_id + "': no test predictions");
  }
}

EvalSummary aggregate(std::span<const RunRecord> runs, std::span<const std::string> label_set) {
  if (runs.size() < 2) throw ValidationError("aggregation needs at least 2 runs");

  // Pool in run_id order so the result does not depend on input order.
  std::vector<const RunRecord*> ordered;
  ordered.reserve(runs.size());
  for (const auto& run : runs) ordered.push_back(&run);
  std::stable_sort(ordered.begin(), ordered.end(), [](const RunRecord* a, const RunRecord* b) {
    return std::tie(a->run_id, a->fold, a->seed) < std::tie(b->run_id, b->fold, b->seed);
  });

  EvalSummary summary;
  summary.n_runs = runs.size();
  std::vector<double> f1s, taus;
  for (const RunRecord* run : ordered) {
    validate_run(*run);
    RunScore score{run->run_id, macro_f1(run->test_true, run->test_pred, label_set),
                   reliability(*run)};
    f1s.push_back(score.f1);
    if (score.tau) {
      taus.push_back(*score.tau);
    } else {
      ++summary.n_tau_undefined;
    }
    summary.runs.push_back(std::move(score));
  }
  summary.mu_f1 = mean(f1s);
  summary.sigma_f1 = sample_stddev(f1s);
  if (!taus.empty()) summary.mu_tau = mean(taus);
  if (taus.size() >= 2) summary.sigma_tau = sample_stddev(taus);
  return summary;
}

// ---------------------------------------------------------------------------
// Run-log JSONL

std::vector<RunRecord> parse_runs(std::istream& in, std::string_view source) {
  std::vector<RunRecord> runs;
  std::unordered_set<std::string> seen;
  std::string line;
  std::size_t number = 0;
  while (std::getline(in, line)) {
    ++number;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const std::string at = std::string(source) + ":" + std::to_string(number);
    try {
      const auto record = nlohmann::json::parse(line);
      RunRecord run;
      run.run_id = record.at("run_id").get<std::string>();
      run.fold = record.at("fold").get<std::size_t>();
      run.seed = record.at("seed").get<std::int64_t>();
      for (const auto& epoch : record.at("epochs")) {
        run.epochs.push_back({epoch.at("epoch").get<std::size_t>(),
                              epoch.at("dev_loss").get<double>(), epoch.at("dev_f1").get<double>()});
      }
      const auto& test = record.at("test");
      run.test_true = test.at("true").get<std::vector<std::string>>();
      run.test_pred = test.at("pred").get<std::vector<std::string>>();
      if (!seen.insert(run.run_id).second) {
        throw SchemaError(at + ": duplicate run_id '" + run.run_id + "'");
      }
      runs.push_back(std::move(run));
    } catch (const nlohmann::json::exception& e) {
      throw SchemaError(at + ": malformed run record (" + e.what() + ")");
    }
  }
  if (runs.empty()) throw SchemaError(std::string(source) + ": no runs");
  return runs;
}

std::vector<RunRecord> load_runs(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw SchemaError("cannot open run log " + path.string());
  return parse_runs(in, path.string());
}

}  // namespace ood
