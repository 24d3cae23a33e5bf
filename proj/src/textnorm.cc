#include "emergent/textnorm.h"

#include <unicode/locid.h>
#include <unicode/normalizer2.h>
#include <unicode/uchar.h>
#include <unicode/unistr.h>
#include <unicode/utf8.h>

#include <fstream>

#include "emergent/common.h"

namespace emergent::textnorm {

void NGramConfig::validate() const {
  if (n_min < 1 || n_max < n_min) {
    throw ConfigError("n-gram range must satisfy 1 <= n_min <= n_max (got " +
                      std::to_string(n_min) + ".." + std::to_string(n_max) + ")");
  }
}

namespace {

constexpr UChar32 kZwnj = 0x200C;
constexpr UChar32 kSpace = 0x20;

const icu::Normalizer2& nfkc() {
  UErrorCode status = U_ZERO_ERROR;
  const icu::Normalizer2* norm = icu::Normalizer2::getNFKCInstance(status);
  if (U_FAILURE(status) || norm == nullptr) throw Error("ICU NFKC normalizer unavailable");
  return *norm;
}

std::u32string decode(std::string_view utf8) {
  icu::UnicodeString ustr = icu::UnicodeString::fromUTF8(
      icu::StringPiece(utf8.data(), static_cast<int32_t>(utf8.size())));
  UErrorCode status = U_ZERO_ERROR;
  icu::UnicodeString normalized = nfkc().normalize(ustr, status);
  if (U_FAILURE(status)) normalized = ustr;
  std::u32string out;
  out.reserve(normalized.length());
  for (int32_t i = 0; i < normalized.length(); i = normalized.moveIndex32(i, 1)) {
    out.push_back(static_cast<char32_t>(normalized.char32At(i)));
  }
  return out;
}

std::string encode_nfkc(const std::u32string& cps) {
  icu::UnicodeString ustr;
  for (char32_t c : cps) ustr.append(static_cast<UChar32>(c));
  UErrorCode status = U_ZERO_ERROR;
  icu::UnicodeString normalized = nfkc().normalize(ustr, status);
  if (U_FAILURE(status)) normalized = ustr;
  std::string out;
  normalized.toUTF8String(out);
  return out;
}

bool is_word_char(char32_t c) { return u_isalnum(static_cast<UChar32>(c)) != 0; }

char32_t ascii_lower(char32_t c) { return (c >= 'A' && c <= 'Z') ? c + 32 : c; }

bool starts_with_ci(const std::u32string& s, size_t pos, std::string_view prefix) {
  if (pos + prefix.size() > s.size()) return false;
  for (size_t i = 0; i < prefix.size(); ++i) {
    if (ascii_lower(s[pos + i]) != static_cast<char32_t>(prefix[i])) return false;
  }
  return true;
}

bool is_space(char32_t c) {
  UChar32 u = static_cast<UChar32>(c);
  return u_isUWhiteSpace(u) || u_charType(u) == U_SPACE_SEPARATOR || c == 0x1C || c == 0x1D ||
         c == 0x1E || c == 0x1F;
}

// Schemes are recognised even when glued to the preceding word (common in
// tweets); bare "www." and "t.co/" only at a word start.
size_t url_length(const std::u32string& s, size_t pos) {
  const bool word_start = pos == 0 || !is_word_char(s[pos - 1]);
  static constexpr std::string_view kPrefixes[] = {"https://", "http://", "www.", "t.co/"};
  for (std::string_view prefix : kPrefixes) {
    if (!word_start && prefix.back() != '/') break;
    if (starts_with_ci(s, pos, prefix)) {
      size_t end = pos + prefix.size();
      while (end < s.size() && !is_space(s[end])) ++end;
      return end - pos;
    }
  }
  return 0;
}

enum class Action { kKeep, kSpace, kDelete };

Action classify(char32_t c, char32_t& replacement) {
  UChar32 u = static_cast<UChar32>(c);
  replacement = c;
  if (c == kZwnj) return Action::kKeep;
  if (is_space(c)) return Action::kSpace;
  // Persian/Arabic unification.
  switch (c) {
    case 0x064A:  // ARABIC LETTER YEH
    case 0x0649:  // ARABIC LETTER ALEF MAKSURA
      replacement = 0x06CC;
      return Action::kKeep;
    case 0x0643:  // ARABIC LETTER KAF
      replacement = 0x06A9;
      return Action::kKeep;
    case 0x0640:  // TATWEEL
      return Action::kDelete;
    default:
      break;
  }
  if (c >= 0x0660 && c <= 0x0669) {
    replacement = U'0' + (c - 0x0660);
    return Action::kKeep;
  }
  if (c >= 0x06F0 && c <= 0x06F9) {
    replacement = U'0' + (c - 0x06F0);
    return Action::kKeep;
  }
  if ((c >= 0x064B && c <= 0x0652) || c == 0x0670) return Action::kDelete;

  if (u_hasBinaryProperty(u, UCHAR_EXTENDED_PICTOGRAPHIC) ||
      u_hasBinaryProperty(u, UCHAR_EMOJI_MODIFIER) ||
      u_hasBinaryProperty(u, UCHAR_REGIONAL_INDICATOR) ||
      u_hasBinaryProperty(u, UCHAR_VARIATION_SELECTOR) || c == 0x20E3 ||
      (c >= 0xE0020 && c <= 0xE007F)) {
    return Action::kSpace;
  }
  int32_t mask = U_GET_GC_MASK(u);
  if (mask & (U_GC_P_MASK | U_GC_S_MASK)) return Action::kSpace;
  if (mask & U_GC_CF_MASK) return Action::kDelete;
  if (mask & (U_GC_CC_MASK | U_GC_CO_MASK | U_GC_CS_MASK | U_GC_CN_MASK)) return Action::kSpace;
  return Action::kKeep;
}

// One cleaning pass over NFKC code points: URL removal, character actions,
// whitespace collapse and ZWNJ trimming at token edges.
std::u32string clean(const std::u32string& in) {
  std::u32string mapped;
  mapped.reserve(in.size());
  for (size_t i = 0; i < in.size();) {
    if (size_t n = url_length(in, i); n > 0) {
      mapped.push_back(kSpace);
      i += n;
      continue;
    }
    char32_t replacement;
    switch (classify(in[i], replacement)) {
      case Action::kKeep:
        mapped.push_back(replacement);
        break;
      case Action::kSpace:
        mapped.push_back(kSpace);
        break;
      case Action::kDelete:
        break;
    }
    ++i;
  }

  std::u32string out;
  out.reserve(mapped.size());
  std::u32string token;
  auto flush = [&] {
    size_t b = 0, e = token.size();
    while (b < e && token[b] == kZwnj) ++b;
    while (e > b && token[e - 1] == kZwnj) --e;
    if (b == e) {
      token.clear();
      return;
    }
    if (!out.empty()) out.push_back(kSpace);
    for (size_t i = b; i < e; ++i) {
      if (token[i] == kZwnj && !out.empty() && out.back() == kZwnj) continue;
      out.push_back(token[i]);
    }
    token.clear();
  };
  for (char32_t c : mapped) {
    if (c == kSpace) {
      flush();
    } else {
      token.push_back(c);
    }
  }
  flush();
  return out;
}

}  // namespace

std::string normalize(std::string_view text) {
  std::u32string cps = decode(text);
  std::string out;
  for (int pass = 0; pass < 4; ++pass) {
    std::u32string cleaned = clean(cps);
    out = encode_nfkc(cleaned);
    std::u32string again = decode(out);
    if (again == cleaned) break;
    cps = std::move(again);
  }
  return out;
}

TokenSequence tokenize(std::string_view normalized) {
  TokenSequence tokens;
  size_t pos = 0;
  while (pos < normalized.size()) {
    while (pos < normalized.size() && (normalized[pos] == ' ' || normalized[pos] == '\t' ||
                                       normalized[pos] == '\n' || normalized[pos] == '\r')) {
      ++pos;
    }
    size_t end = pos;
    while (end < normalized.size() && normalized[end] != ' ' && normalized[end] != '\t' &&
           normalized[end] != '\n' && normalized[end] != '\r') {
      ++end;
    }
    if (end > pos) tokens.emplace_back(normalized.substr(pos, end - pos));
    pos = end;
  }
  return tokens;
}

std::vector<std::string> ngrams(const TokenSequence& tokens, const NGramConfig& cfg) {
  cfg.validate();
  std::vector<std::string> out;
  const int size = static_cast<int>(tokens.size());
  for (int n = cfg.n_min; n <= cfg.n_max; ++n) {
    for (int start = 0; start + n <= size; ++start) {
      std::string phrase = tokens[start];
      for (int k = 1; k < n; ++k) {
        phrase.push_back(' ');
        phrase += tokens[start + k];
      }
      out.push_back(std::move(phrase));
    }
  }
  return out;
}

std::string to_lower(std::string_view text) {
  icu::UnicodeString ustr = icu::UnicodeString::fromUTF8(
      icu::StringPiece(text.data(), static_cast<int32_t>(text.size())));
  ustr.toLower(icu::Locale::getRoot());
  std::string out;
  ustr.toUTF8String(out);
  return out;
}

bool is_valid_utf8(std::string_view text) {
  const auto* s = reinterpret_cast<const uint8_t*>(text.data());
  int32_t length = static_cast<int32_t>(text.size());
  int32_t i = 0;
  while (i < length) {
    UChar32 c;
    U8_NEXT(s, i, length, c);
    if (c < 0) return false;
  }
  return true;
}

StopwordSet StopwordSet::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open stopword file " + path);
  std::unordered_set<std::string> words;
  std::string line;
  while (std::getline(in, line)) {
    for (std::string& token : tokenize(normalize(line))) words.insert(std::move(token));
  }
  return StopwordSet(std::move(words));
}

bool StopwordSet::is_stop_phrase(std::string_view phrase) const {
  if (words_.empty()) return false;
  size_t pos = 0;
  bool any = false;
  while (pos <= phrase.size()) {
    size_t end = phrase.find(' ', pos);
    if (end == std::string_view::npos) end = phrase.size();
    if (end > pos) {
      any = true;
      if (!words_.count(std::string(phrase.substr(pos, end - pos)))) return false;
    }
    pos = end + 1;
  }
  return any;
}

std::vector<std::string> phrases_for(std::string_view raw_text, const NGramConfig& cfg,
                                     const StopwordSet& stopwords) {
  std::vector<std::string> phrases = ngrams(tokenize(normalize(raw_text)), cfg);
  if (!stopwords.empty()) {
    std::erase_if(phrases, [&](const std::string& p) { return stopwords.is_stop_phrase(p); });
  }
  return phrases;
}

}  // namespace emergent::textnorm
