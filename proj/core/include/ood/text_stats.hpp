#pragma once

#include <cstddef>
#include <string_view>

namespace ood {

struct TextCounts {
  std::size_t words = 0;
  std::size_t sentences = 0;
  std::size_t syllables = 0;
};

/// Words are whitespace-separated tokens containing at least one letter.
/// Sentences are maximal runs of terminators (. ! ? …), at least one.
TextCounts count_text(std::string_view utf8);

/// Heuristic syllable count for one token (letters only are considered).
///
/// Latin-script words count maximal vowel groups over a, e, i, o, u, y after
/// stripping diacritics, minus one for a terminal "e" unless that would reach
/// zero. Words with any non-Latin letter count one syllable per letter.
/// Always at least 1.
std::size_t count_syllables(std::string_view word);

/// Flesch reading ease. Throws ValidationError when the text has no words.
double flesch(std::string_view utf8);
double flesch(const TextCounts& counts);

}  // namespace ood
