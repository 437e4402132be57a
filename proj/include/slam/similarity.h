#pragma once

#include <map>
#include <span>
#include <string>
#include <vector>

#include "slam/gateway.h"

namespace slam {

// Lowercase, split on non-alphanumeric bytes, drop empty tokens.
std::vector<std::string> tfidf_tokens(const std::string& text);

// TF-IDF over a fixed corpus: tf = raw count, idf = ln((1 + N) / (1 + df)) + 1.
class TfidfModel {
 public:
  explicit TfidfModel(const std::vector<std::string>& corpus);

  // Cosine of the tf-idf vectors; kEmptyText if either side has no tokens.
  double cosine(const std::string& a, const std::string& b) const;
  double idf(const std::string& term) const;
  std::size_t documents() const { return documents_; }

 private:
  std::map<std::string, double> weights(const std::string& text) const;

  std::size_t documents_ = 0;
  std::map<std::string, std::size_t> document_frequency_;
};

// Requires a and b to be members of `corpus`.
double tfidf_cosine(const std::vector<std::string>& corpus, const std::string& a,
                    const std::string& b);

// dot / (|a| |b|); kZeroVector if either norm is zero, kDimensionMismatch
// on unequal lengths.
double cosine(std::span<const double> a, std::span<const double> b);

// (1 + cos) / 2, so the result lies in [0, 1].
double mapped_cosine(std::span<const double> a, std::span<const double> b);

double embedding_cosine(Gateway& gateway, const std::string& provider_id, const std::string& a,
                        const std::string& b);

// Sentence BLEU over whitespace tokens: clipped n-gram precision for
// n = 1..4 with weights 1/4, add-one smoothing for n >= 2, brevity penalty
// exp(1 - r/c) when c < r.
double bleu(const std::string& reference, const std::string& candidate);

inline double sem_bleu_combine(double embed_cosine, double bleu_value) {
  return (embed_cosine + bleu_value) / 2.0;
}

double sem_bleu(Gateway& gateway, const std::string& provider_id, const std::string& reference,
                const std::string& candidate);

}  // namespace slam
