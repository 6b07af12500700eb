#pragma once

#include <cstddef>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace ood {

enum class ShiftKind { topic, domain, language };

std::string_view to_string(ShiftKind kind);
ShiftKind parse_shift_kind(std::string_view text);
/// Short column label used in tables ("Top.", "Dom.", "Lang.").
std::string_view short_label(ShiftKind kind);

struct TaskSpec {
  std::string name;
  ShiftKind shift_kind = ShiftKind::topic;
  std::vector<std::string> labels;  // order is class index order
  bool pairwise = false;

  std::optional<std::size_t> label_index(std::string_view label) const;
};

/// Reads the flat `key = value` task file (keys: name, shift_kind, labels, pairwise).
TaskSpec load_task(const std::filesystem::path& path);
TaskSpec parse_task(std::istream& in, std::string_view source);

struct Instance {
  std::string id;
  std::string text;
  std::optional<std::string> text_pair;
  std::string label;
  std::map<ShiftKind, std::string> groups;  // NFC-normalized values

  /// Text measured by surface statistics: text, or "text text_pair" for pairs.
  std::string joined_text() const;

  friend bool operator==(const Instance&, const Instance&) = default;
};

/// Immutable, validated collection of instances in file order.
class Corpus {
 public:
  Corpus(TaskSpec task, std::vector<Instance> instances);

  const TaskSpec& task() const { return task_; }
  const std::vector<Instance>& instances() const { return instances_; }
  std::size_t size() const { return instances_.size(); }

  /// Group value -> ids (file order). Keys sorted bytewise.
  const std::map<std::string, std::vector<std::string>>& group_index() const {
    return group_index_;
  }

  const Instance* find(std::string_view id) const;
  const Instance& at(std::string_view id) const;
  std::size_t position(std::string_view id) const;
  /// Group value of the task's shift kind.
  const std::string& group_of(const Instance& instance) const;

  Corpus filter(const std::function<bool(const Instance&)>& keep) const;
  /// Sub-corpus with the given ids, in corpus order.
  Corpus subset(const std::vector<std::string>& ids) const;

  friend bool operator==(const Corpus& a, const Corpus& b) {
    return a.instances_ == b.instances_;
  }

 private:
  TaskSpec task_;
  std::vector<Instance> instances_;
  std::unordered_map<std::string, std::size_t> positions_;
  std::map<std::string, std::vector<std::string>> group_index_;
};

Corpus load_corpus(const std::filesystem::path& path, const TaskSpec& task);
Corpus parse_corpus(std::istream& in, const TaskSpec& task, std::string_view source);

void write_instance(std::ostream& out, const Instance& instance);
void write_corpus(std::ostream& out, const Corpus& corpus);

std::map<std::string, std::size_t> group_counts(const Corpus& corpus);

/// NFC normalization of UTF-8 text. Throws SchemaError on invalid UTF-8.
std::string nfc(std::string_view utf8);

}  // namespace ood
