#include "ood/text_stats.hpp"

#include <unicode/normalizer2.h>
#include <unicode/uchar.h>
#include <unicode/uscript.h>
#include <unicode/utf8.h>

#include <string>
#include <vector>

#include "ood/error.hpp"

namespace ood {

namespace {

std::vector<UChar32> decode(std::string_view utf8) {
  std::vector<UChar32> out;
  out.reserve(utf8.size());
  const auto* bytes = reinterpret_cast<const std::uint8_t*>(utf8.data());
  const auto length = static_cast<std::int32_t>(utf8.size());
  for (std::int32_t i = 0; i < length;) {
    UChar32 c = 0;
    U8_NEXT(bytes, i, length, c);
    out.push_back(c < 0 ? 0xFFFD : c);
  }
  return out;
}

bool is_terminator(UChar32 c) { return c == '.' || c == '!' || c == '?' || c == 0x2026; }

bool is_latin(UChar32 c) {
  UErrorCode status = U_ZERO_ERROR;
  const UScriptCode script = uscript_getScript(c, &status);
  return U_SUCCESS(status) &&
         (script == USCRIPT_LATIN || script == USCRIPT_COMMON || script == USCRIPT_INHERITED);
}

// Lowercase base letter of a Latin code point ("É" -> 'e').
UChar32 fold_latin(UChar32 c) {
  c = u_tolower(c);
  UErrorCode status = U_ZERO_ERROR;
  const icu::Normalizer2* nfd = icu::Normalizer2::getNFDInstance(status);
  if (U_SUCCESS(status)) {
    icu::UnicodeString decomposition;
    if (nfd->getDecomposition(c, decomposition) && decomposition.length() > 0) {
      c = decomposition.char32At(0);
    }
  }
  return c;
}

bool is_vowel(UChar32 c) {
  switch (c) {
    case 'a': case 'e': case 'i': case 'o': case 'u': case 'y':
    case 0x00E6:  // æ
    case 0x00F8:  // ø
    case 0x0153:  // œ
      return true;
    default:
      return false;
  }
}

std::size_t syllables_of(const std::vector<UChar32>& letters) {
  bool latin = true;
  for (UChar32 c : letters) latin = latin && is_latin(c);
  if (!latin) return std::max<std::size_t>(1, letters.size());

  std::size_t groups = 0;
  bool in_group = false;
  UChar32 last = 0;
  for (UChar32 c : letters) {
    last = fold_latin(c);
    const bool vowel = is_vowel(last);
    if (vowel && !in_group) ++groups;
    in_group = vowel;
  }
  if (last == 'e' && groups > 1) --groups;
  return std::max<std::size_t>(1, groups);
}

}  // namespace

std::size_t count_syllables(std::string_view word) {
  std::vector<UChar32> letters;
  for (UChar32 c : decode(word)) {
    if (u_isalpha(c)) letters.push_back(c);
  }
  return letters.empty() ? 0 : syllables_of(letters);
}

TextCounts count_text(std::string_view utf8) {
  TextCounts counts;
  std::size_t terminator_runs = 0;
  bool in_terminators = false;
  std::vector<UChar32> letters;

  auto close_word = [&] {
    if (!letters.empty()) {
      ++counts.words;
      counts.syllables += syllables_of(letters);
      letters.clear();
    }
  };

  for (UChar32 c : decode(utf8)) {
    if (is_terminator(c)) {
      if (!in_terminators) ++terminator_runs;
      in_terminators = true;
    } else {
      in_terminators = false;
    }
    if (u_isUWhiteSpace(c)) {
      close_word();
    } else if (u_isalpha(c)) {
      letters.push_back(c);
    }
  }
  close_word();
  counts.sentences = std::max<std::size_t>(1, terminator_runs);
  return counts;
}

double flesch(std::string_view utf8) { return flesch(count_text(utf8)); }

double flesch(const TextCounts& counts) {
  if (counts.words == 0) throw ValidationError("Flesch score undefined: text has no words");
  const double words = static_cast<double>(counts.words);
  return 206.835 - 1.015 * (words / static_cast<double>(counts.sentences)) -
         84.6 * (static_cast<double>(counts.syllables) / words);
}

}  // namespace ood
