#include "ood/corpus.hpp"

#include <unicode/normalizer2.h>
#include <unicode/unistr.h>
#include <unicode/utf8.h>

#include <algorithm>
#include <fstream>
#include <istream>
#include <ostream>
#include <set>
#include <sstream>

#include "json.hpp"
#include "ood/error.hpp"

namespace ood {

namespace {

using nlohmann::json;

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  return s.substr(first, last - first + 1);
}

std::string where(std::string_view source, std::size_t line) {
  std::ostringstream os;
  os << source << ":" << line;
  return os.str();
}

constexpr ShiftKind kAllKinds[] = {ShiftKind::topic, ShiftKind::domain, ShiftKind::language};

}  // namespace

std::string_view to_string(ShiftKind kind) {
  switch (kind) {
    case ShiftKind::topic: return "topic";
    case ShiftKind::domain: return "domain";
    case ShiftKind::language: return "language";
  }
  return "topic";
}

ShiftKind parse_shift_kind(std::string_view text) {
  for (auto kind : kAllKinds) {
    if (text == to_string(kind)) return kind;
  }
  throw SchemaError("unknown shift kind '" + std::string(text) +
                    "' (expected topic, domain, or language)");
}

std::string_view short_label(ShiftKind kind) {
  switch (kind) {
    case ShiftKind::topic: return "Top.";
    case ShiftKind::domain: return "Dom.";
    case ShiftKind::language: return "Lang.";
  }
  return "Top.";
}

std::optional<std::size_t> TaskSpec::label_index(std::string_view label) const {
  const auto it = std::find(labels.begin(), labels.end(), label);
  if (it == labels.end()) return std::nullopt;
  return static_cast<std::size_t>(it - labels.begin());
}

std::string nfc(std::string_view utf8) {
  const auto* bytes = reinterpret_cast<const std::uint8_t*>(utf8.data());
  const auto length = static_cast<std::int32_t>(utf8.size());
  for (std::int32_t i = 0; i < length;) {
    UChar32 c = 0;
    U8_NEXT(bytes, i, length, c);
    if (c < 0) throw SchemaError("invalid UTF-8 in '" + std::string(utf8) + "'");
  }

  UErrorCode status = U_ZERO_ERROR;
  const icu::Normalizer2* normalizer = icu::Normalizer2::getNFCInstance(status);
  if (U_FAILURE(status)) throw std::runtime_error("ICU NFC normalizer unavailable");
  const auto source = icu::UnicodeString::fromUTF8(
      icu::StringPiece(utf8.data(), static_cast<std::int32_t>(utf8.size())));
  if (normalizer->isNormalized(source, status) && U_SUCCESS(status)) {
    return std::string(utf8);
  }
  status = U_ZERO_ERROR;
  const icu::UnicodeString normalized = normalizer->normalize(source, status);
  if (U_FAILURE(status)) throw SchemaError("NFC normalization failed");
  std::string out;
  normalized.toUTF8String(out);
  return out;
}

// ---------------------------------------------------------------------------
// TaskSpec

TaskSpec parse_task(std::istream& in, std::string_view source) {
  std::map<std::string, std::string> entries;
  std::string line;
  std::size_t number = 0;
  while (std::getline(in, line)) {
    ++number;
    const auto content = trim(line);
    if (content.empty() || content.front() == '#') continue;
    const auto eq = content.find('=');
    if (eq == std::string_view::npos) {
      throw SchemaError(where(source, number) + ": expected 'key = value'");
    }
    std::string key(trim(content.substr(0, eq)));
    std::string value(trim(content.substr(eq + 1)));
    if (!entries.emplace(key, value).second) {
      throw SchemaError(where(source, number) + ": duplicate key '" + key + "'");
    }
  }

  auto require = [&](const std::string& key) -> const std::string& {
    const auto it = entries.find(key);
    if (it == entries.end() || it->second.empty()) {
      throw SchemaError(std::string(source) + ": missing key '" + key + "'");
    }
    return it->second;
  };

  TaskSpec task;
  task.name = require("name");
  task.shift_kind = parse_shift_kind(require("shift_kind"));

  std::string_view labels = require("labels");
  while (!labels.empty()) {
    const auto comma = labels.find(',');
    const auto item = trim(labels.substr(0, comma));
    if (item.empty()) throw SchemaError(std::string(source) + ": empty entry in labels");
    task.labels.emplace_back(item);
    if (comma == std::string_view::npos) break;
    labels.remove_prefix(comma + 1);
  }
  const std::set<std::string> distinct(task.labels.begin(), task.labels.end());
  if (distinct.size() != task.labels.size()) {
    throw SchemaError(std::string(source) + ": labels must be distinct");
  }
  if (task.labels.size() < 2) {
    throw SchemaError(std::string(source) + ": labels needs at least 2 classes");
  }

  if (const auto it = entries.find("pairwise"); it != entries.end()) {
    if (it->second == "true") {
      task.pairwise = true;
    } else if (it->second != "false") {
      throw SchemaError(std::string(source) + ": pairwise must be true or false");
    }
  }

  for (const auto& [key, value] : entries) {
    if (key != "name" && key != "shift_kind" && key != "labels" && key != "pairwise") {
      throw SchemaError(std::string(source) + ": unknown key '" + key + "'");
    }
  }
  return task;
}

TaskSpec load_task(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw SchemaError("cannot open task file " + path.string());
  return parse_task(in, path.string());
}

// ---------------------------------------------------------------------------
// Corpus

std::string Instance::joined_text() const {
  if (!text_pair) return text;
  return text + " " + *text_pair;
}

Corpus::Corpus(TaskSpec task, std::vector<Instance> instances)
    : task_(std::move(task)), instances_(std::move(instances)) {
  if (instances_.empty()) throw SchemaError("empty corpus");
  positions_.reserve(instances_.size());
  for (std::size_t i = 0; i < instances_.size(); ++i) {
    const Instance& instance = instances_[i];
    if (instance.id.empty()) throw SchemaError("instance with empty id");
    if (instance.text.empty()) throw SchemaError("instance " + instance.id + " has empty text");
    if (!task_.label_index(instance.label)) {
      throw SchemaError("instance " + instance.id + ": label '" + instance.label +
                        "' not in label set");
    }
    if (task_.pairwise && !instance.text_pair) {
      throw SchemaError("instance " + instance.id + ": missing text_pair");
    }
    const auto group = instance.groups.find(task_.shift_kind);
    if (group == instance.groups.end() || group->second.empty()) {
      throw SchemaError("instance " + instance.id + ": missing group '" +
                        std::string(to_string(task_.shift_kind)) + "'");
    }
    if (!positions_.emplace(instance.id, i).second) {
      throw SchemaError("duplicate id '" + instance.id + "'");
    }
    group_index_[group->second].push_back(instance.id);
  }
}

const Instance* Corpus::find(std::string_view id) const {
  const auto it = positions_.find(std::string(id));
  return it == positions_.end() ? nullptr : &instances_[it->second];
}

const Instance& Corpus::at(std::string_view id) const {
  if (const Instance* instance = find(id)) return *instance;
  throw SchemaError("unknown instance id '" + std::string(id) + "'");
}

std::size_t Corpus::position(std::string_view id) const {
  const auto it = positions_.find(std::string(id));
  if (it == positions_.end()) throw SchemaError("unknown instance id '" + std::string(id) + "'");
  return it->second;
}

const std::string& Corpus::group_of(const Instance& instance) const {
  return instance.groups.at(task_.shift_kind);
}

Corpus Corpus::filter(const std::function<bool(const Instance&)>& keep) const {
  std::vector<Instance> kept;
  std::copy_if(instances_.begin(), instances_.end(), std::back_inserter(kept), keep);
  return Corpus(task_, std::move(kept));
}

Corpus Corpus::subset(const std::vector<std::string>& ids) const {
  std::vector<std::size_t> rows;
  rows.reserve(ids.size());
  for (const auto& id : ids) rows.push_back(position(id));
  std::sort(rows.begin(), rows.end());
  rows.erase(std::unique(rows.begin(), rows.end()), rows.end());
  std::vector<Instance> picked;
  picked.reserve(rows.size());
  for (auto row : rows) picked.push_back(instances_[row]);
  return Corpus(task_, std::move(picked));
}

namespace {

std::string require_string(const json& record, const char* key, const std::string& at) {
  const auto it = record.find(key);
  if (it == record.end()) throw SchemaError(at + ": missing field '" + key + "'");
  if (!it->is_string()) throw SchemaError(at + ": field '" + key + "' must be a string");
  return it->get<std::string>();
}

Instance parse_instance(const json& record, const TaskSpec& task, const std::string& at) {
  if (!record.is_object()) throw SchemaError(at + ": record must be a JSON object");
  Instance instance;
  instance.id = require_string(record, "id", at);
  if (instance.id.empty()) throw SchemaError(at + ": empty id");
  instance.text = require_string(record, "text", at);
  if (instance.text.empty()) throw SchemaError(at + ": empty text for id '" + instance.id + "'");
  if (const auto it = record.find("text_pair"); it != record.end() && !it->is_null()) {
    if (!it->is_string()) throw SchemaError(at + ": field 'text_pair' must be a string");
    instance.text_pair = it->get<std::string>();
  }
  instance.label = require_string(record, "label", at);
  if (!task.label_index(instance.label)) {
    throw SchemaError(at + ": label '" + instance.label + "' not in label set of task '" +
                      task.name + "'");
  }
  if (task.pairwise && !instance.text_pair) {
    throw SchemaError(at + ": missing text_pair for pairwise task (id '" + instance.id + "')");
  }

  const auto groups = record.find("groups");
  if (groups != record.end()) {
    if (!groups->is_object()) throw SchemaError(at + ": field 'groups' must be an object");
    for (auto kind : kAllKinds) {
      const auto it = groups->find(std::string(to_string(kind)));
      if (it == groups->end() || it->is_null()) continue;
      if (!it->is_string()) {
        throw SchemaError(at + ": group '" + std::string(to_string(kind)) + "' must be a string");
      }
      instance.groups.emplace(kind, nfc(it->get<std::string>()));
    }
  }
  const auto group = instance.groups.find(task.shift_kind);
  if (group == instance.groups.end() || group->second.empty()) {
    throw SchemaError(at + ": missing group '" + std::string(to_string(task.shift_kind)) +
                      "' for id '" + instance.id + "'");
  }
  return instance;
}

}  // namespace

Corpus parse_corpus(std::istream& in, const TaskSpec& task, std::string_view source) {
  std::vector<Instance> instances;
  std::unordered_map<std::string, std::size_t> first_line;
  std::string line;
  std::size_t number = 0;
  while (std::getline(in, line)) {
    ++number;
    if (trim(line).empty()) continue;
    const std::string at = where(source, number);
    json record;
    try {
      record = json::parse(line);
    } catch (const json::exception& e) {
      throw SchemaError(at + ": malformed JSON record (" + e.what() + ")");
    }
    Instance instance = parse_instance(record, task, at);
    const auto [it, inserted] = first_line.emplace(instance.id, number);
    if (!inserted) {
      throw SchemaError(std::string(source) + ": duplicate id '" + instance.id + "' on lines " +
                        std::to_string(it->second) + " and " + std::to_string(number));
    }
    instances.push_back(std::move(instance));
  }
  if (instances.empty()) throw SchemaError(std::string(source) + ": empty corpus");
  return Corpus(task, std::move(instances));
}

Corpus load_corpus(const std::filesystem::path& path, const TaskSpec& task) {
  std::ifstream in(path);
  if (!in) throw SchemaError("cannot open corpus file " + path.string());
  return parse_corpus(in, task, path.string());
}

void write_instance(std::ostream& out, const Instance& instance) {
  nlohmann::ordered_json record = nlohmann::ordered_json::object();
  record["id"] = instance.id;
  record["text"] = instance.text;
  if (instance.text_pair) record["text_pair"] = *instance.text_pair;
  record["label"] = instance.label;
  nlohmann::ordered_json groups = nlohmann::ordered_json::object();
  for (const auto& [kind, value] : instance.groups) groups[std::string(to_string(kind))] = value;
  record["groups"] = std::move(groups);
  out << record.dump() << '\n';
}

void write_corpus(std::ostream& out, const Corpus& corpus) {
  for (const auto& instance : corpus.instances()) write_instance(out, instance);
}

std::map<std::string, std::size_t> group_counts(const Corpus& corpus) {
  std::map<std::string, std::size_t> counts;
  for (const auto& [group, ids] : corpus.group_index()) counts.emplace(group, ids.size());
  return counts;
}

}  // namespace ood
