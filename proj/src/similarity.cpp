#include "slam/similarity.h"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <set>
#include <sstream>

#include "slam/error.h"

namespace slam {

std::vector<std::string> tfidf_tokens(const std::string& text) {
  std::vector<std::string> out;
  std::string cur;
  for (unsigned char c : text) {
    if (std::isalnum(c)) {
      cur.push_back(static_cast<char>(std::tolower(c)));
    } else if (!cur.empty()) {
      out.push_back(std::move(cur));
      cur.clear();
    }
  }
  if (!cur.empty()) out.push_back(std::move(cur));
  return out;
}

TfidfModel::TfidfModel(const std::vector<std::string>& corpus) : documents_(corpus.size()) {
  if (corpus.empty()) throw Error(ErrorCode::kInvalidArgument, "tf-idf corpus is empty");
  for (const auto& doc : corpus) {
    auto tokens = tfidf_tokens(doc);
    std::set<std::string> unique(tokens.begin(), tokens.end());
    for (const auto& t : unique) ++document_frequency_[t];
  }
}

double TfidfModel::idf(const std::string& term) const {
  auto it = document_frequency_.find(term);
  double df = it == document_frequency_.end() ? 0.0 : static_cast<double>(it->second);
  return std::log((1.0 + static_cast<double>(documents_)) / (1.0 + df)) + 1.0;
}

std::map<std::string, double> TfidfModel::weights(const std::string& text) const {
  std::map<std::string, double> w;
  for (const auto& t : tfidf_tokens(text)) w[t] += 1.0;
  for (auto& [term, tf] : w) tf *= idf(term);
  return w;
}

double TfidfModel::cosine(const std::string& a, const std::string& b) const {
  auto wa = weights(a);
  auto wb = weights(b);
  if (wa.empty() || wb.empty()) {
    throw Error(ErrorCode::kEmptyText, "text has no tf-idf tokens");
  }
  if (wa == wb) return 1.0;
  double dot = 0, na = 0, nb = 0;
  for (const auto& [term, x] : wa) {
    na += x * x;
    if (auto it = wb.find(term); it != wb.end()) dot += x * it->second;
  }
  for (const auto& [_, y] : wb) nb += y * y;
  return std::clamp(dot / (std::sqrt(na) * std::sqrt(nb)), 0.0, 1.0);
}

double tfidf_cosine(const std::vector<std::string>& corpus, const std::string& a,
                    const std::string& b) {
  auto member = [&](const std::string& t) {
    return std::find(corpus.begin(), corpus.end(), t) != corpus.end();
  };
  if (!member(a) || !member(b)) {
    throw Error(ErrorCode::kInvalidArgument, "tf-idf inputs must belong to the corpus");
  }
  return TfidfModel(corpus).cosine(a, b);
}

double cosine(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) {
    throw Error(ErrorCode::kDimensionMismatch, "vectors differ in length");
  }
  double dot = 0, na = 0, nb = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    dot += a[i] * b[i];
    na += a[i] * a[i];
    nb += b[i] * b[i];
  }
  if (na == 0.0 || nb == 0.0) throw Error(ErrorCode::kZeroVector, "cosine of a zero vector");
  if (std::equal(a.begin(), a.end(), b.begin())) return 1.0;
  return std::clamp(dot / (std::sqrt(na) * std::sqrt(nb)), -1.0, 1.0);
}

double mapped_cosine(std::span<const double> a, std::span<const double> b) {
  return (1.0 + cosine(a, b)) / 2.0;
}

double embedding_cosine(Gateway& gateway, const std::string& provider_id, const std::string& a,
                        const std::string& b) {
  auto ea = gateway.embed(provider_id, a);
  auto eb = gateway.embed(provider_id, b);
  return mapped_cosine(ea.values, eb.values);
}

namespace {

std::vector<std::string> split_whitespace(const std::string& text) {
  std::istringstream in(text);
  std::vector<std::string> out;
  for (std::string w; in >> w;) out.push_back(w);
  return out;
}

std::map<std::vector<std::string>, int> ngram_counts(const std::vector<std::string>& tokens,
                                                     std::size_t n) {
  std::map<std::vector<std::string>, int> counts;
  for (std::size_t i = 0; i + n <= tokens.size(); ++i) {
    ++counts[std::vector<std::string>(tokens.begin() + static_cast<std::ptrdiff_t>(i),
                                      tokens.begin() + static_cast<std::ptrdiff_t>(i + n))];
  }
  return counts;
}

}  // namespace

double bleu(const std::string& reference, const std::string& candidate) {
  const auto ref = split_whitespace(reference);
  const auto cand = split_whitespace(candidate);
  if (cand.empty()) return 0.0;
  double log_sum = 0.0;
  for (std::size_t n = 1; n <= 4; ++n) {
    auto cand_counts = ngram_counts(cand, n);
    auto ref_counts = ngram_counts(ref, n);
    double matched = 0, total = 0;
    for (const auto& [gram, count] : cand_counts) {
      total += count;
      if (auto it = ref_counts.find(gram); it != ref_counts.end()) {
        matched += std::min(count, it->second);
      }
    }
    double precision = n == 1 ? (total == 0 ? 0.0 : matched / total)
                              : (matched + 1.0) / (total + 1.0);
    if (precision == 0.0) return 0.0;
    log_sum += 0.25 * std::log(precision);
  }
  const double r = static_cast<double>(ref.size());
  const double c = static_cast<double>(cand.size());
  const double bp = c < r ? std::exp(1.0 - r / c) : 1.0;
  return std::clamp(bp * std::exp(log_sum), 0.0, 1.0);
}

double sem_bleu(Gateway& gateway, const std::string& provider_id, const std::string& reference,
                const std::string& candidate) {
  return sem_bleu_combine(embedding_cosine(gateway, provider_id, reference, candidate),
                          bleu(reference, candidate));
}

}  // namespace slam
