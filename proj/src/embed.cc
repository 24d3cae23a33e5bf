#include "emergent/embed.h"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <numeric>

#include "emergent/common.h"
#include "emergent/disjoint_set.h"

namespace emergent::embed {

EmbeddingTable::EmbeddingTable(int dim) : dim_(dim) {
  if (dim <= 0) throw ConfigError("embedding dimension must be positive");
}

void EmbeddingTable::set(const std::string& token, std::span<const float> values) {
  if (static_cast<int>(values.size()) != dim_) {
    throw DataError("vector for \"" + token + "\" has " + std::to_string(values.size()) +
                    " components, expected " + std::to_string(dim_));
  }
  if (!std::all_of(values.begin(), values.end(), [](float v) { return std::isfinite(v); })) {
    throw DataError("vector for \"" + token + "\" has a non-finite component");
  }
  auto [it, fresh] = index_.try_emplace(token, data_.size());
  if (fresh) {
    data_.insert(data_.end(), values.begin(), values.end());
  } else {
    std::copy(values.begin(), values.end(), data_.begin() + static_cast<std::ptrdiff_t>(it->second));
  }
}

const float* EmbeddingTable::find(std::string_view token) const {
  auto it = index_.find(std::string(token));
  return it == index_.end() ? nullptr : data_.data() + it->second;
}

namespace {

std::vector<std::string_view> split_spaces(std::string_view line) {
  std::vector<std::string_view> out;
  size_t pos = 0;
  while (pos < line.size()) {
    while (pos < line.size() && (line[pos] == ' ' || line[pos] == '\t' || line[pos] == '\r')) ++pos;
    size_t end = pos;
    while (end < line.size() && line[end] != ' ' && line[end] != '\t' && line[end] != '\r') ++end;
    if (end > pos) out.push_back(line.substr(pos, end - pos));
    pos = end;
  }
  return out;
}

template <typename T>
bool parse_number(std::string_view text, T& out) {
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), out);
  return ec == std::errc() && ptr == text.data() + text.size();
}

}  // namespace

EmbeddingTable parse_vectors(std::istream& in) {
  std::string line;
  int64_t line_number = 0;
  if (!std::getline(in, line)) throw DataError("missing header line", 1);
  ++line_number;
  auto header = split_spaces(line);
  int64_t count = 0;
  int dim = 0;
  if (header.size() != 2 || !parse_number(header[0], count) || !parse_number(header[1], dim) ||
      count < 0 || dim <= 0) {
    throw DataError("header must be \"<count> <dim>\"", line_number);
  }
  EmbeddingTable table(dim);
  std::vector<float> values(dim);
  int64_t rows = 0;
  while (std::getline(in, line)) {
    ++line_number;
    auto fields = split_spaces(line);
    if (fields.empty()) continue;
    if (rows == count) throw DataError("more vectors than the header count", line_number);
    if (static_cast<int>(fields.size()) != dim + 1) {
      throw DataError("expected " + std::to_string(dim) + " components, found " +
                      std::to_string(fields.size() - 1), line_number);
    }
    for (int d = 0; d < dim; ++d) {
      double v;
      if (!parse_number(fields[d + 1], v) || !std::isfinite(v) ||
          !std::isfinite(static_cast<float>(v))) {
        throw DataError("component " + std::to_string(d + 1) + " is not a finite number", line_number);
      }
      values[d] = static_cast<float>(v);
    }
    table.set(std::string(fields[0]), values);
    ++rows;
  }
  return table;
}

EmbeddingTable load_vectors(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open vector file " + path);
  return parse_vectors(in);
}

PhraseVector phrase_vector(std::string_view phrase, const EmbeddingTable& table) {
  PhraseVector out;
  out.values.assign(table.dim(), 0.0);
  int found = 0;
  for (std::string_view token : split_spaces(phrase)) {
    const float* v = table.find(token);
    if (v == nullptr) {
      ++out.oov_count;
      continue;
    }
    ++found;
    for (int d = 0; d < table.dim(); ++d) out.values[d] += v[d];
  }
  if (found > 0) {
    for (double& x : out.values) x /= found;
  }
  return out;
}

double dense_cosine(std::span<const double> a, std::span<const double> b) {
  double dot = 0, na = 0, nb = 0;
  for (size_t i = 0; i < a.size() && i < b.size(); ++i) {
    dot += a[i] * b[i];
    na += a[i] * a[i];
    nb += b[i] * b[i];
  }
  if (na <= 0 || nb <= 0) return 0;
  // sqrt of the product keeps identical vectors at exactly 1.
  return std::clamp(dot / std::sqrt(na * nb), -1.0, 1.0);
}

double semantic_similarity(std::string_view p, std::string_view q, const EmbeddingTable& table) {
  return dense_cosine(phrase_vector(p, table).values, phrase_vector(q, table).values);
}

std::vector<PhraseGroup> group_similar(const std::vector<keyphrase::CandidatePhrase>& candidates,
                                       const EmbeddingTable* table, double theta) {
  const size_t n = candidates.size();
  DisjointSet sets(n);
  std::vector<PhraseVector> vectors;
  if (table != nullptr) {
    vectors.reserve(n);
    for (const auto& c : candidates) vectors.push_back(phrase_vector(c.phrase, *table));
  }
  for (size_t i = 0; i < n; ++i) {
    for (size_t j = i + 1; j < n; ++j) {
      if (candidates[i].phrase == candidates[j].phrase ||
          (table != nullptr && dense_cosine(vectors[i].values, vectors[j].values) >= theta)) {
        sets.unite(i, j);
      }
    }
  }

  auto better = [](const keyphrase::CandidatePhrase& a, const keyphrase::CandidatePhrase& b) {
    if (a.score != b.score) return a.score > b.score;
    if (a.phrase != b.phrase) return a.phrase < b.phrase;
    return a.macro_id < b.macro_id;
  };
  std::unordered_map<size_t, size_t> root_to_group;
  std::vector<PhraseGroup> groups;
  for (size_t i = 0; i < n; ++i) {
    auto [it, fresh] = root_to_group.try_emplace(sets.find(i), groups.size());
    if (fresh) groups.emplace_back();
    groups[it->second].members.push_back(candidates[i]);
  }
  for (PhraseGroup& g : groups) {
    std::sort(g.members.begin(), g.members.end(), better);
    g.representative = g.members.front().phrase;
  }
  std::sort(groups.begin(), groups.end(), [&](const PhraseGroup& a, const PhraseGroup& b) {
    return better(a.members.front(), b.members.front());
  });
  return groups;
}

}  // namespace emergent::embed
