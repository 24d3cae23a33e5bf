// Pre-trained word vectors in the plain-text ".vec" layout and phrase-level
// semantic similarity built on them.
//
// File layout: a header line "<count> <dim>", then one line per token with the
// token followed by dim space-separated decimal components.
#pragma once

#include <istream>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "emergent/keyphrase.h"

namespace emergent::embed {

class EmbeddingTable {
 public:
  explicit EmbeddingTable(int dim);

  int dim() const { return dim_; }
  size_t size() const { return index_.size(); }

  // Inserts or replaces a vector; values must have dim() finite components.
  void set(const std::string& token, std::span<const float> values);
  // nullptr when the token is out of vocabulary.
  const float* find(std::string_view token) const;

 private:
  int dim_;
  std::unordered_map<std::string, size_t> index_;
  std::vector<float> data_;
};

// Throws IoError when the file cannot be opened and DataError (with line
// number) for a bad header, a wrong component count or a non-finite value.
EmbeddingTable load_vectors(const std::string& path);
EmbeddingTable parse_vectors(std::istream& in);

struct PhraseVector {
  std::vector<double> values;
  int oov_count = 0;
};

// Mean of the in-vocabulary token vectors; zero vector when all are OOV.
PhraseVector phrase_vector(std::string_view phrase, const EmbeddingTable& table);

// Cosine of the two phrase vectors; 0 when either is the zero vector.
double semantic_similarity(std::string_view p, std::string_view q, const EmbeddingTable& table);

double dense_cosine(std::span<const double> a, std::span<const double> b);

struct PhraseGroup {
  std::string representative;
  std::vector<keyphrase::CandidatePhrase> members;  // by descending score, then phrase
};

// Connected components of candidates linked when semantic_similarity >= theta
// or when the phrases are identical. Without a table only identical phrases
// group. Groups come ordered by representative score (descending), then
// representative phrase.
std::vector<PhraseGroup> group_similar(const std::vector<keyphrase::CandidatePhrase>& candidates,
                                       const EmbeddingTable* table, double theta = 0.8);

}  // namespace emergent::embed
