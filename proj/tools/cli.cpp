#include "cli.hpp"

#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <ostream>
#include <set>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"
#include "ood/corpus.hpp"
#include "ood/error.hpp"
#include "ood/folds.hpp"
#include "ood/parallel.hpp"
#include "ood/report.hpp"
#include "ood/runeval.hpp"
#include "ood/shiftstats.hpp"
#include "ood/verbalizer.hpp"

namespace ood::cli {

namespace fs = std::filesystem;

namespace {

/// Pipeline settings shared by the subcommands.
struct Config {
  fs::path task;
  fs::path corpus;
  std::vector<std::int64_t> seeds{0, 1, 2};
  std::optional<std::size_t> folds;
  fs::path out;
  std::string format = "tsv";
};

void write_file(const fs::path& path, const std::string& content) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  const fs::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary);
    if (!out) throw SchemaError("cannot write " + path.string());
    out << content;
    if (!out) throw SchemaError("write failed for " + path.string());
  }
  fs::rename(tmp, path);
}

void print_violations(const std::vector<Violation>& violations, std::ostream& err) {
  for (const auto& v : violations) err << "violation: " << v.message << '\n';
}

// ---------------------------------------------------------------------------

int cmd_validate(const Config& cfg, const std::optional<fs::path>& plan_path,
                 const std::optional<fs::path>& embeddings_path,
                 const std::optional<fs::path>& logprobs_path,
                 const std::optional<fs::path>& runs_path,
                 const std::optional<fs::path>& losses_path,
                 const std::optional<fs::path>& verbalizer_path, std::ostream& out,
                 std::ostream& err) {
  const TaskSpec task = load_task(cfg.task);
  std::optional<Corpus> corpus;
  if (!cfg.corpus.empty()) {
    corpus = load_corpus(cfg.corpus, task);
    out << "corpus\t" << corpus->size() << " instances\t" << corpus->group_index().size() << " "
        << to_string(task.shift_kind) << " groups\n";
    for (const auto& [group, count] : group_counts(*corpus)) {
      out << "group\t" << group << '\t' << count << '\n';
    }
  }

  int status = kExitOk;
  if (plan_path) {
    if (!corpus) throw SchemaError("--plan needs --corpus");
    const FoldPlan plan = load_plan(*plan_path);
    const auto violations = verify_plan(plan, *corpus);
    print_violations(violations, err);
    out << "plan\t" << to_string(plan.mode) << '\t' << plan.folds.size() << " folds\t"
        << violations.size() << " violations\n";
    if (!violations.empty()) status = kExitViolation;
  }
  if (embeddings_path) {
    const EmbeddingSet embeddings = load_embeddings(*embeddings_path);
    out << "embeddings\t" << embeddings.size() << " vectors\tdim=" << embeddings.dim() << '\n';
    if (corpus) {
      for (const auto& instance : corpus->instances()) {
        if (!embeddings.find(instance.id)) {
          throw SchemaError(embeddings_path->string() + ": missing embedding for id '" +
                            instance.id + "'");
        }
      }
    }
  }
  if (logprobs_path) {
    const auto records = load_logprobs(*logprobs_path);
    out << "logprobs\t" << records.size() << " instances\n";
  }
  if (losses_path) {
    const auto records = load_token_losses(*losses_path);
    for (const auto& r : records) {
      if (r.losses.empty()) throw SchemaError(losses_path->string() + ": empty instance " + r.id);
    }
    out << "token-losses\t" << records.size() << " instances\n";
  }
  if (runs_path) {
    const auto runs = load_runs(*runs_path);
    for (const auto& run : runs) {
      validate_run(run);
      for (const auto& label : run.test_true) {
        if (!task.label_index(label)) throw SchemaError("run '" + run.run_id + "': unknown label '" + label + "'");
      }
      for (const auto& label : run.test_pred) {
        if (!task.label_index(label)) throw SchemaError("run '" + run.run_id + "': unknown label '" + label + "'");
      }
    }
    out << "runs\t" << runs.size() << " runs\n";
  }
  if (verbalizer_path) {
    const Verbalizer v = load_manual(*verbalizer_path, task.labels);
    out << "verbalizer\t" << v.classes().size() << " classes\n";
  }
  return status;
}

int cmd_split(const Config& cfg, std::uint64_t seed, const std::string& mode, std::ostream& out,
              std::ostream& err) {
  const TaskSpec task = load_task(cfg.task);
  const Corpus corpus = load_corpus(cfg.corpus, task);
  const FoldPlan ood_plan = compose_ood(corpus, seed, cfg.folds);

  std::vector<std::pair<std::string, FoldPlan>> plans;
  if (mode == "ood" || mode == "both") plans.emplace_back("ood", ood_plan);
  if (mode == "id" || mode == "both") plans.emplace_back("id", compose_id(corpus, ood_plan, seed));

  int status = kExitOk;
  for (const auto& [name, plan] : plans) {
    auto violations = verify_plan(plan, corpus);
    if (plan.mode == SplitMode::id) {
      const auto size = verify_size_match(plan, ood_plan);
      violations.insert(violations.end(), size.begin(), size.end());
    }
    print_violations(violations, err);
    if (!violations.empty()) status = kExitViolation;

    write_file(cfg.out / (name == "ood" ? "plan.json" : "plan_id.json"), plan_to_json(plan));
    for (std::size_t f = 0; f < plan.folds.size(); ++f) {
      for (auto role : kRoles) {
        std::ostringstream slice;
        write_corpus(slice, corpus.subset(plan.folds[f].ids(role)));
        write_file(cfg.out / name / ("fold" + std::to_string(f) + "." +
                                     std::string(to_string(role)) + ".jsonl"),
                   slice.str());
      }
    }
    out << name << '\t' << plan.folds.size() << " folds";
    for (std::size_t f = 0; f < plan.folds.size(); ++f) {
      const auto& s = plan.folds[f];
      out << '\t' << s.train.size() << '/' << s.dev.size() << '/' << s.test.size();
    }
    out << '\n';
  }
  return status;
}

int cmd_profile(const Config& cfg, const fs::path& plan_path,
                const std::optional<fs::path>& embeddings_path, bool skip_separability,
                const std::optional<fs::path>& losses_path, std::optional<double> reference_ppl,
                std::ostream& out) {
  if (!embeddings_path && !skip_separability) {
    throw SchemaError(
        "separability needs sentence embeddings: pass --embeddings <file> "
        "(header 'dim=<d>', then '<id>\\t<f1>,<f2>,...'), or --no-separability to skip it");
  }
  const TaskSpec task = load_task(cfg.task);
  const Corpus corpus = load_corpus(cfg.corpus, task);
  const FoldPlan plan = load_plan(plan_path);
  if (plan.shift_kind != task.shift_kind) {
    throw SchemaError("plan shift kind '" + std::string(to_string(plan.shift_kind)) +
                      "' differs from task shift kind '" +
                      std::string(to_string(task.shift_kind)) + "'");
  }
  const auto violations = verify_plan(plan, corpus);
  if (!violations.empty()) {
    throw ValidationError("plan does not match corpus: " + violations.front().message);
  }

  std::optional<EmbeddingSet> embeddings;
  if (embeddings_path && !skip_separability) embeddings = load_embeddings(*embeddings_path);

  TaskProfiles profiles{task.name, task.shift_kind,
                        profile_plan(corpus, plan, embeddings ? &*embeddings : nullptr,
                                     thread_limit())};
  std::ostringstream tsv;
  write_profile_tsv(tsv, profiles);
  write_file(cfg.out, tsv.str());

  if (losses_path) {
    const auto records = load_token_losses(*losses_path);
    const PseudoPerplexity ppl = pseudo_perplexity(records, reference_ppl);
    std::ostringstream text;
    text << "id\tmean_cross_entropy\n";
    for (const auto& [id, m] : ppl.instance_means) text << id << '\t' << format_fixed(m, 6) << '\n';
    text << "#corpus_mean\t" << format_fixed(ppl.corpus_mean, 6) << '\n';
    if (ppl.delta) text << "#delta_vs_reference\t" << format_fixed(*ppl.delta, 6) << '\n';
    fs::path ppl_path = cfg.out;
    ppl_path.replace_extension(".ppl.tsv");
    write_file(ppl_path, text.str());
  }

  for (const auto& p : profiles.folds) {
    out << "fold " << p.fold << "\tseparability="
        << (p.separability ? format_fixed(*p.separability, 1) : std::string("NA"))
        << "\tdelta_flesch=" << format_fixed(p.delta_flesch, 1)
        << "\tdelta_words=" << format_fixed(p.delta_words, 1) << "\tkl=" << format_fixed(p.kl, 1)
        << '\n';
  }
  return kExitOk;
}

int cmd_eval(const Config& cfg, const fs::path& runs_path, std::ostream& out, std::ostream& err) {
  const TaskSpec task = load_task(cfg.task);
  const auto runs = load_runs(runs_path);
  for (const auto& run : runs) validate_run(run);

  std::map<std::size_t, std::set<std::int64_t>> covered;
  for (const auto& run : runs) covered[run.fold].insert(run.seed);
  for (const auto& [fold, seeds] : covered) {
    for (auto seed : cfg.seeds) {
      if (!seeds.contains(seed)) {
        err << "warning: fold " << fold << " has no run with seed " << seed << '\n';
      }
    }
  }

  TaskSummary summary{task.name, task.shift_kind, aggregate(runs, task.labels)};
  if (summary.summary.n_tau_undefined > 0) {
    err << "warning: reliability undefined for " << summary.summary.n_tau_undefined
        << " run(s) with a constant loss or F1 trajectory; excluded from mu_tau\n";
  }
  const std::string json = summary_to_json(summary);
  if (cfg.out.empty()) {
    out << json;
  } else {
    write_file(cfg.out, json);
    out << render_summary(std::span<const TaskSummary>(&summary, 1), TableFormat::tsv, task.name);
  }
  return kExitOk;
}

int cmd_verbalize_build(const Config& cfg, const fs::path& logprobs_path,
                        std::optional<fs::path> plan_path, std::size_t fold, std::size_t m,
                        std::ostream& out) {
  const TaskSpec task = load_task(cfg.task);
  const Corpus corpus = load_corpus(cfg.corpus, task);
  const auto all = load_logprobs(logprobs_path);

  std::optional<std::set<std::string>> allowed;
  if (plan_path) {
    const FoldPlan plan = load_plan(*plan_path);
    if (fold >= plan.folds.size()) throw SchemaError("--fold out of range for plan");
    allowed.emplace(plan.folds[fold].train.begin(), plan.folds[fold].train.end());
  }

  std::vector<TokenLogProbs> train;
  std::vector<std::string> labels;
  for (const auto& record : all) {
    if (allowed && !allowed->contains(record.instance_id)) continue;
    labels.push_back(corpus.at(record.instance_id).label);
    train.push_back(record);
  }
  const Verbalizer v = build_automatic(train, labels, task.labels, m);
  std::ostringstream text;
  write_verbalizer(text, v);
  write_file(cfg.out, text.str());
  for (std::size_t k = 0; k < v.classes().size(); ++k) {
    out << v.classes()[k] << '\t' << v.tokens(k).size() << " tokens\n";
  }
  return kExitOk;
}

int cmd_verbalize_predict(const Config& cfg, const fs::path& verbalizer_path,
                          const fs::path& logprobs_path, std::ostream& out, std::ostream& err) {
  const TaskSpec task = load_task(cfg.task);
  const Verbalizer v = load_manual(verbalizer_path, task.labels);
  const auto records = load_logprobs(logprobs_path);

  std::ostringstream lines;
  for (const auto& record : records) {
    const Prediction p = predict(record, v);
    if (!p.missing_tokens.empty()) {
      err << "warning: instance " << record.instance_id << " lacks verbalizer token(s)";
      for (std::size_t i = 0; i < p.missing_tokens.size(); ++i) {
        err << (i ? ", " : " ") << p.missing_tokens[i];
      }
      err << "; scored ln(1e-12)\n";
    }
    nlohmann::ordered_json item;
    item["id"] = record.instance_id;
    item["label"] = p.label;
    nlohmann::ordered_json probs;
    for (std::size_t k = 0; k < v.classes().size(); ++k) probs[v.classes()[k]] = p.probabilities[k];
    item["probs"] = std::move(probs);
    item["missing_tokens"] = p.missing_tokens;
    lines << item.dump() << '\n';
  }
  if (cfg.out.empty()) {
    out << lines.str();
  } else {
    write_file(cfg.out, lines.str());
  }
  return kExitOk;
}

int cmd_report(const Config& cfg, const std::vector<fs::path>& profile_paths,
               const std::vector<fs::path>& summary_paths, const std::string& row_label,
               std::ostream& out) {
  if (profile_paths.empty() && summary_paths.empty()) {
    throw SchemaError("report needs --profiles and/or --summaries");
  }
  const TableFormat format = parse_table_format(cfg.format);

  std::vector<TaskProfiles> profiles;
  for (const auto& path : profile_paths) {
    for (auto& task : load_profile_tsv(path)) profiles.push_back(std::move(task));
  }
  std::vector<TaskSummary> summaries;
  for (const auto& path : summary_paths) summaries.push_back(load_summary(path));

  std::string text;
  if (format == TableFormat::json) {
    nlohmann::ordered_json doc;
    if (!profiles.empty()) doc["profile"] = nlohmann::ordered_json::parse(render_profile(profiles, format));
    if (!summaries.empty()) {
      doc["summary"] = nlohmann::ordered_json::parse(render_summary(summaries, format, row_label));
    }
    text = doc.dump(1) + "\n";
  } else {
    if (!profiles.empty()) text += render_profile(profiles, format);
    if (!profiles.empty() && !summaries.empty()) text += "\n";
    if (!summaries.empty()) text += render_summary(summaries, format, row_label);
  }
  if (cfg.out.empty()) {
    out << text;
  } else {
    write_file(cfg.out, text);
  }
  return kExitOk;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Out-of-distribution benchmark harness: fold composition, shift profiles, run evaluation"};
  app.name("ood-harness");
  app.require_subcommand(1);

  Config cfg;
  auto add_task = [&](CLI::App* sub) {
    sub->add_option("--task", cfg.task, "Task configuration file")->required()->check(CLI::ExistingFile);
  };

  // validate
  std::optional<fs::path> plan_opt, emb_opt, lp_opt, runs_opt, losses_opt, verb_opt;
  auto* validate = app.add_subcommand("validate", "Check input files against their schemas");
  add_task(validate);
  validate->add_option("--corpus", cfg.corpus, "Corpus JSONL")->check(CLI::ExistingFile);
  validate->add_option("--plan", plan_opt, "Fold plan JSON")->check(CLI::ExistingFile);
  validate->add_option("--embeddings", emb_opt, "Embedding file")->check(CLI::ExistingFile);
  validate->add_option("--logprobs", lp_opt, "Token log-prob JSONL")->check(CLI::ExistingFile);
  validate->add_option("--runs", runs_opt, "Run-log JSONL")->check(CLI::ExistingFile);
  validate->add_option("--token-losses", losses_opt, "Token-loss file")->check(CLI::ExistingFile);
  validate->add_option("--verbalizer", verb_opt, "Verbalizer file")->check(CLI::ExistingFile);

  // split
  std::uint64_t seed = 0;
  std::string mode = "both";
  auto* split = app.add_subcommand("split", "Compose OOD folds and size-matched ID folds");
  add_task(split);
  split->add_option("--corpus", cfg.corpus, "Corpus JSONL")->required()->check(CLI::ExistingFile);
  split->add_option("--seed", seed, "Composition seed")->capture_default_str();
  split->add_option("--folds", cfg.folds, "Override the number of folds");
  split->add_option("--mode", mode, "ood, id, or both")
      ->check(CLI::IsMember({"ood", "id", "both"}))
      ->capture_default_str();
  split->add_option("--out", cfg.out, "Output directory")->required();

  // profile
  fs::path plan_path;
  bool no_separability = false;
  std::optional<double> reference_ppl;
  auto* profile = app.add_subcommand("profile", "Shift profile per fold (separability, deltas, KL)");
  add_task(profile);
  profile->add_option("--plan", plan_path, "Fold plan JSON")->required()->check(CLI::ExistingFile);
  profile->add_option("--corpus", cfg.corpus, "Corpus JSONL")->required()->check(CLI::ExistingFile);
  profile->add_option("--embeddings", emb_opt, "Embedding file");
  profile->add_flag("--no-separability", no_separability, "Skip the clustering-based separability");
  profile->add_option("--token-losses", losses_opt, "Per-token cross-entropies for pseudo-perplexity");
  profile->add_option("--reference-ppl", reference_ppl, "Reference corpus mean cross-entropy");
  profile->add_option("--out", cfg.out, "Output profile TSV")->required();

  // eval
  fs::path runs_path;
  auto* eval = app.add_subcommand("eval", "Applicability, Reliability and Stability of exported runs");
  add_task(eval);
  eval->add_option("--runs", runs_path, "Run-log JSONL")->required();
  eval->add_option("--seeds", cfg.seeds, "Seeds expected per fold")->delimiter(',')->capture_default_str();
  eval->add_option("--out", cfg.out, "Output summary JSON (stdout if omitted)");

  // verbalize
  auto* verbalize = app.add_subcommand("verbalize", "Build verbalizers and predict from mask log-probs");
  verbalize->require_subcommand(1);
  fs::path logprobs_path, verbalizer_path;
  std::size_t fold = 0;
  std::size_t tokens_per_class = kDefaultTokensPerClass;
  auto* build = verbalize->add_subcommand("build", "Automatic verbalizer from train log-probs");
  add_task(build);
  build->add_option("--corpus", cfg.corpus, "Corpus JSONL with train labels")->required()->check(CLI::ExistingFile);
  build->add_option("--logprobs", logprobs_path, "Train log-prob JSONL")->required()->check(CLI::ExistingFile);
  build->add_option("--plan", plan_opt, "Restrict to one fold's train ids")->check(CLI::ExistingFile);
  build->add_option("--fold", fold, "Fold index used with --plan")->capture_default_str();
  build->add_option("--m", tokens_per_class, "Tokens per class")->capture_default_str();
  build->add_option("--out", cfg.out, "Output verbalizer file")->required();
  auto* predict_cmd = verbalize->add_subcommand("predict", "Label instances from mask log-probs");
  add_task(predict_cmd);
  predict_cmd->add_option("--verbalizer", verbalizer_path, "Verbalizer file")->required()->check(CLI::ExistingFile);
  predict_cmd->add_option("--logprobs", logprobs_path, "Log-prob JSONL")->required()->check(CLI::ExistingFile);
  predict_cmd->add_option("--out", cfg.out, "Output predictions JSONL (stdout if omitted)");

  // report
  std::vector<fs::path> profile_paths, summary_paths;
  std::string row_label = "runs";
  auto* report = app.add_subcommand("report", "Render profile and summary tables");
  report->add_option("--profiles", profile_paths, "Profile TSV files")->check(CLI::ExistingFile);
  report->add_option("--summaries", summary_paths, "Summary JSON files")->check(CLI::ExistingFile);
  report->add_option("--format", cfg.format, "tsv, md, or json")
      ->check(CLI::IsMember({"tsv", "md", "json"}))
      ->capture_default_str();
  report->add_option("--row-label", row_label, "Row name of the summary table")->capture_default_str();
  report->add_option("--out", cfg.out, "Output file (stdout if omitted)");

  std::vector<std::string> argv_storage{"ood-harness"};
  argv_storage.insert(argv_storage.end(), args.begin(), args.end());
  std::vector<const char*> argv;
  for (const auto& a : argv_storage) argv.push_back(a.c_str());

  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitSchema;
  }

  try {
    if (*validate) {
      return cmd_validate(cfg, plan_opt, emb_opt, lp_opt, runs_opt, losses_opt, verb_opt, out, err);
    }
    if (*split) return cmd_split(cfg, seed, mode, out, err);
    if (*profile) {
      return cmd_profile(cfg, plan_path, emb_opt, no_separability, losses_opt, reference_ppl, out);
    }
    if (*eval) return cmd_eval(cfg, runs_path, out, err);
    if (*build) {
      return cmd_verbalize_build(cfg, logprobs_path, plan_opt, fold, tokens_per_class, out);
    }
    if (*predict_cmd) return cmd_verbalize_predict(cfg, verbalizer_path, logprobs_path, out, err);
    if (*report) return cmd_report(cfg, profile_paths, summary_paths, row_label, out);
  } catch (const ValidationError& e) {
    err << "error: " << e.what() << '\n';
    return kExitViolation;
  } catch (const SchemaError& e) {
    err << "error: " << e.what() << '\n';
    return kExitSchema;
  } catch (const fs::filesystem_error& e) {
    err << "error: " << e.what() << '\n';
    return kExitSchema;
  }
  return kExitSchema;
}

}  // namespace ood::cli
