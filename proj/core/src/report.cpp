#include "ood/report.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>

#include "json.hpp"
#include "ood/error.hpp"

namespace ood {

namespace {

constexpr std::string_view kMathMinus = "−";
constexpr std::string_view kPlusMinus = "±";

std::string fixed6(double value) {
  char buffer[64];
  const auto [ptr, ec] = std::to_chars(buffer, buffer + sizeof buffer, value,
                                       std::chars_format::fixed, 6);
  if (ec != std::errc()) throw std::runtime_error("number formatting failed");
  return std::string(buffer, ptr);
}

double parse_double(std::string_view text, const std::string& at) {
  double value = 0.0;
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc() || ptr != text.data() + text.size()) {
    throw SchemaError(at + ": bad number '" + std::string(text) + "'");
  }
  return value;
}

std::vector<std::string_view> split_tabs(std::string_view line) {
  std::vector<std::string_view> fields;
  while (true) {
    const auto tab = line.find('\t');
    fields.push_back(line.substr(0, tab));
    if (tab == std::string_view::npos) break;
    line.remove_prefix(tab + 1);
  }
  return fields;
}

double round1(double value) {
  const std::string text = format_fixed(value, 1);
  return parse_double(text, "round1");
}

std::string markdown_cell(double mean, std::optional<double> deviation) {
  std::string cell = format_fixed(mean, 1, kMathMinus);
  if (deviation) {
    cell += kPlusMinus;
    cell += "<small>" + format_fixed(*deviation, 1, kMathMinus) + "</small>";
  }
  return cell;
}

std::string render_rows(const std::vector<std::string>& header,
                        const std::vector<std::vector<std::string>>& rows, TableFormat format) {
  std::ostringstream out;
  if (format == TableFormat::tsv) {
    auto line = [&](const std::vector<std::string>& cells) {
      for (std::size_t i = 0; i < cells.size(); ++i) out << (i ? "\t" : "") << cells[i];
      out << '\n';
    };
    line(header);
    for (const auto& row : rows) line(row);
  } else {
    auto line = [&](const std::vector<std::string>& cells) {
      out << '|';
      for (const auto& cell : cells) out << ' ' << cell << " |";
      out << '\n';
    };
    line(header);
    out << '|';
    for (std::size_t i = 0; i < header.size(); ++i) out << (i ? "---:|" : "---|");
    out << '\n';
    for (const auto& row : rows) line(row);
  }
  return out.str();
}

}  // namespace

TableFormat parse_table_format(std::string_view text) {
  if (text == "tsv") return TableFormat::tsv;
  if (text == "md") return TableFormat::md;
  if (text == "json") return TableFormat::json;
  throw SchemaError("unknown format '" + std::string(text) + "' (expected tsv, md, or json)");
}

std::string format_fixed(double value, int decimals, std::string_view minus) {
  if (!std::isfinite(value)) return "nan";
  char buffer[512];
  const auto [ptr, ec] = std::to_chars(buffer, buffer + sizeof buffer, value, std::chars_format::fixed);
  if (ec != std::errc()) throw std::runtime_error("number formatting failed");
  std::string_view text(buffer, static_cast<std::size_t>(ptr - buffer));

  const bool negative = !text.empty() && text.front() == '-';
  if (negative) text.remove_prefix(1);
  const auto dot = text.find('.');
  std::string digits(text.substr(0, dot));  // integer part
  std::string fraction = dot == std::string_view::npos ? "" : std::string(text.substr(dot + 1));
  fraction.resize(std::max<std::size_t>(fraction.size(), static_cast<std::size_t>(decimals) + 1), '0');

  const bool round_up = fraction[static_cast<std::size_t>(decimals)] >= '5';
  std::string kept = digits + fraction.substr(0, static_cast<std::size_t>(decimals));
  if (round_up) {
    std::size_t i = kept.size();
    while (i > 0) {
      --i;
      if (kept[i] == '9') {
        kept[i] = '0';
      } else {
        ++kept[i];
        break;
      }
      if (i == 0) kept.insert(kept.begin(), '1');
    }
  }
  const std::size_t integer_digits = kept.size() - static_cast<std::size_t>(decimals);
  std::string result = kept.substr(0, integer_digits);
  if (decimals > 0) result += "." + kept.substr(integer_digits);

  const bool zero = result.find_first_not_of("0.") == std::string::npos;
  if (negative && !zero) result.insert(0, minus);
  return result;
}

std::string format_cell(double mean, std::optional<double> deviation) {
  std::string cell = format_fixed(mean, 1, kMathMinus);
  if (deviation) {
    cell += kPlusMinus;
    cell += format_fixed(*deviation, 1, kMathMinus);
  }
  return cell;
}

// ---------------------------------------------------------------------------
// Profiles

void write_profile_tsv(std::ostream& out, const TaskProfiles& profiles) {
  out << "task\tshift_kind\tfold\tseparability\tdelta_flesch\tdelta_words\tkl\n";
  for (const auto& p : profiles.folds) {
    out << profiles.task << '\t' << to_string(profiles.shift_kind) << '\t' << p.fold << '\t'
        << (p.separability ? fixed6(*p.separability) : "NA") << '\t' << fixed6(p.delta_flesch)
        << '\t' << fixed6(p.delta_words) << '\t' << fixed6(p.kl) << '\n';
  }
}

std::vector<TaskProfiles> read_profile_tsv(std::istream& in, std::string_view source) {
  std::vector<TaskProfiles> tasks;
  std::string line;
  std::size_t number = 0;
  while (std::getline(in, line)) {
    ++number;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line.starts_with("task\t")) continue;
    const std::string at = std::string(source) + ":" + std::to_string(number);
    const auto fields = split_tabs(line);
    if (fields.size() != 7) throw SchemaError(at + ": expected 7 tab-separated fields");

    const std::string task(fields[0]);
    const ShiftKind kind = parse_shift_kind(fields[1]);
    if (tasks.empty() || tasks.back().task != task) {
      tasks.push_back({task, kind, {}});
    } else if (tasks.back().shift_kind != kind) {
      throw SchemaError(at + ": task '" + task + "' changes shift kind");
    }
    ShiftProfile p;
    p.fold = static_cast<std::size_t>(parse_double(fields[2], at));
    if (fields[3] != "NA") p.separability = parse_double(fields[3], at);
    p.delta_flesch = parse_double(fields[4], at);
    p.delta_words = parse_double(fields[5], at);
    p.kl = parse_double(fields[6], at);
    tasks.back().folds.push_back(p);
  }
  return tasks;
}

std::vector<TaskProfiles> load_profile_tsv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw SchemaError("cannot open profile file " + path.string());
  return read_profile_tsv(in, path.string());
}

std::string render_profile(std::span<const TaskProfiles> tasks, TableFormat format) {
  struct Row {
    std::string task;
    std::string_view shift;
    std::optional<double> separability;
    double flesch, words, kl;
    std::size_t folds;
  };
  std::vector<Row> rows;
  for (const auto& task : tasks) {
    if (task.folds.empty()) continue;
    double sep = 0.0, flesch = 0.0, words = 0.0, kl = 0.0;
    std::size_t with_sep = 0;
    for (const auto& p : task.folds) {
      if (p.separability) {
        sep += *p.separability;
        ++with_sep;
      }
      flesch += p.delta_flesch;
      words += p.delta_words;
      kl += p.kl;
    }
    const double n = static_cast<double>(task.folds.size());
    rows.push_back({task.task, short_label(task.shift_kind),
                    with_sep ? std::optional<double>(sep / static_cast<double>(with_sep))
                             : std::nullopt,
                    flesch / n, words / n, kl / n, task.folds.size()});
  }

  if (format == TableFormat::json) {
    auto doc = nlohmann::ordered_json::array();
    for (const auto& r : rows) {
      nlohmann::ordered_json item;
      item["task"] = r.task;
      item["shift_type"] = std::string(r.shift);
      item["separability"] = r.separability ? nlohmann::ordered_json(round1(*r.separability))
                                            : nlohmann::ordered_json(nullptr);
      item["delta_flesch"] = round1(r.flesch);
      item["delta_words"] = round1(r.words);
      item["kl"] = round1(r.kl);
      item["folds"] = r.folds;
      doc.push_back(std::move(item));
    }
    return doc.dump(1) + "\n";
  }

  const std::vector<std::string> header = {"Task", "Shift Type", "Separability",
                                           "Δ Flesch", "Δ Words", "KL"};
  std::vector<std::vector<std::string>> cells;
  for (const auto& r : rows) {
    cells.push_back({r.task, std::string(r.shift),
                     r.separability ? format_cell(*r.separability, std::nullopt) : "-",
                     format_cell(r.flesch, std::nullopt), format_cell(r.words, std::nullopt),
                     format_cell(r.kl, std::nullopt)});
  }
  return render_rows(header, cells, format);
}

// ---------------------------------------------------------------------------
// Summaries

std::string summary_to_json(const TaskSummary& summary) {
  const EvalSummary& s = summary.summary;
  nlohmann::ordered_json doc;
  doc["task"] = summary.task;
  doc["shift_kind"] = std::string(to_string(summary.shift_kind));
  doc["n_runs"] = s.n_runs;
  doc["mu_f1"] = s.mu_f1;
  doc["sigma_f1"] = s.sigma_f1;
  doc["mu_tau"] = s.mu_tau ? nlohmann::ordered_json(*s.mu_tau) : nlohmann::ordered_json(nullptr);
  doc["sigma_tau"] =
      s.sigma_tau ? nlohmann::ordered_json(*s.sigma_tau) : nlohmann::ordered_json(nullptr);
  doc["n_tau_undefined"] = s.n_tau_undefined;
  auto runs = nlohmann::ordered_json::array();
  for (const auto& run : s.runs) {
    nlohmann::ordered_json item;
    item["run_id"] = run.run_id;
    item["f1"] = run.f1;
    item["tau"] = run.tau ? nlohmann::ordered_json(*run.tau) : nlohmann::ordered_json(nullptr);
    runs.push_back(std::move(item));
  }
  doc["runs"] = std::move(runs);
  return doc.dump(1) + "\n";
}

TaskSummary summary_from_json(std::string_view text) {
  try {
    const auto doc = nlohmann::json::parse(text);
    TaskSummary out;
    out.task = doc.at("task").get<std::string>();
    out.shift_kind = parse_shift_kind(doc.at("shift_kind").get<std::string>());
    EvalSummary& s = out.summary;
    s.n_runs = doc.at("n_runs").get<std::size_t>();
    s.mu_f1 = doc.at("mu_f1").get<double>();
    s.sigma_f1 = doc.at("sigma_f1").get<double>();
    if (!doc.at("mu_tau").is_null()) s.mu_tau = doc["mu_tau"].get<double>();
    if (!doc.at("sigma_tau").is_null()) s.sigma_tau = doc["sigma_tau"].get<double>();
    s.n_tau_undefined = doc.value("n_tau_undefined", std::size_t{0});
    if (doc.contains("runs")) {
      for (const auto& run : doc["runs"]) {
        RunScore score{run.at("run_id").get<std::string>(), run.at("f1").get<double>(), {}};
        if (!run.at("tau").is_null()) score.tau = run["tau"].get<double>();
        s.runs.push_back(std::move(score));
      }
    }
    return out;
  } catch (const nlohmann::json::exception& e) {
    throw SchemaError(std::string("invalid summary JSON: ") + e.what());
  }
}

TaskSummary load_summary(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw SchemaError("cannot open summary file " + path.string());
  std::ostringstream buffer;
  buffer << in.rdbuf();
  try {
    return summary_from_json(buffer.str());
  } catch (const SchemaError& e) {
    throw SchemaError(path.string() + ": " + e.what());
  }
}

std::string render_summary(std::span<const TaskSummary> tasks, TableFormat format,
                           std::string_view row_label) {
  const auto deviation = [](std::size_t n, std::optional<double> sigma) {
    return n >= 2 ? sigma : std::nullopt;
  };

  std::vector<double> f1_means, f1_sigmas, tau_means, tau_sigmas;
  for (const auto& t : tasks) {
    f1_means.push_back(t.summary.mu_f1);
    if (t.summary.n_runs >= 2) f1_sigmas.push_back(t.summary.sigma_f1);
    if (t.summary.mu_tau) tau_means.push_back(*t.summary.mu_tau);
    if (t.summary.sigma_tau) tau_sigmas.push_back(*t.summary.sigma_tau);
  }
  const auto mean_or_none = [](const std::vector<double>& values) {
    std::optional<double> out;
    if (!values.empty()) out.emplace(mean(values));
    return out;
  };
  const std::optional<double> applicability = mean_or_none(f1_means);
  const std::optional<double> applicability_sd = mean_or_none(f1_sigmas);
  const std::optional<double> reliability_mean = mean_or_none(tau_means);
  const std::optional<double> reliability_sd = mean_or_none(tau_sigmas);

  if (format == TableFormat::json) {
    auto number = [](std::optional<double> v) {
      return v ? nlohmann::ordered_json(round1(*v)) : nlohmann::ordered_json(nullptr);
    };
    nlohmann::ordered_json doc;
    doc["row"] = std::string(row_label);
    auto columns = nlohmann::ordered_json::array();
    for (const auto& t : tasks) {
      nlohmann::ordered_json item;
      item["task"] = t.task;
      item["shift_type"] = std::string(short_label(t.shift_kind));
      item["mu_f1"] = round1(t.summary.mu_f1);
      item["sigma_f1"] = number(deviation(t.summary.n_runs, t.summary.sigma_f1));
      item["mu_tau"] = number(t.summary.mu_tau);
      item["sigma_tau"] = number(t.summary.sigma_tau);
      item["n_runs"] = t.summary.n_runs;
      columns.push_back(std::move(item));
    }
    doc["tasks"] = std::move(columns);
    doc["applicability"] = {{"mu_f1", number(applicability)}, {"sigma_f1", number(applicability_sd)}};
    doc["reliability"] = {{"mu_tau", number(reliability_mean)},
                          {"sigma_tau", number(reliability_sd)}};
    return doc.dump(1) + "\n";
  }

  const auto cell = [&](const std::optional<double>& mu,
                        const std::optional<double>& sigma) -> std::string {
    if (!mu) return "-";
    return format == TableFormat::md ? markdown_cell(*mu, sigma) : format_cell(*mu, sigma);
  };

  std::vector<std::string> header{""};
  std::vector<std::string> kinds{""};
  std::vector<std::string> row{std::string(row_label)};
  for (const auto& t : tasks) {
    header.push_back(t.task);
    kinds.push_back(std::string(short_label(t.shift_kind)));
    row.push_back(cell(t.summary.mu_f1, deviation(t.summary.n_runs, t.summary.sigma_f1)));
  }
  header.insert(header.end(), {"Applicability", "Reliability"});
  kinds.insert(kinds.end(), {"μF1±σF1", "μτ±στ"});
  row.push_back(cell(applicability, applicability_sd));
  row.push_back(cell(reliability_mean, reliability_sd));
  return render_rows(header, {kinds, row}, format);
}

}  // namespace ood
