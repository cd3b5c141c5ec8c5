#include "maleval/tfidf.hpp"

#include <cctype>
#include <cmath>

namespace maleval::text {

std::vector<std::string> tokenize(const std::string& text) {
  std::vector<std::string> tokens;
  std::string current;
  for (char c : text) {
    const unsigned char uc = static_cast<unsigned char>(c);
    if (std::isalnum(uc) || c == '_') {
      current += static_cast<char>(std::tolower(uc));
    } else if (!current.empty()) {
      tokens.push_back(std::move(current));
      current.clear();
    }
  }
  if (!current.empty()) {
    tokens.push_back(std::move(current));
  }
  return tokens;
}

void TfidfVectorizer::fit(const std::vector<std::string>& documents) {
  vocabulary_.clear();
  idf_.clear();

  std::map<std::string, std::size_t> document_frequency;
  for (const auto& doc : documents) {
    std::map<std::string, bool> seen;
    for (const auto& token : tokenize(doc)) {
      if (!seen[token]) {
        seen[token] = true;
        ++document_frequency[token];
      }
    }
  }
  // map iteration is sorted, so feature indices are deterministic
  for (const auto& [token, df] : document_frequency) {
    (void)df;
    vocabulary_[token] = vocabulary_.size();
  }
  const double n = static_cast<double>(documents.size());
  idf_.resize(vocabulary_.size());
  for (const auto& [token, index] : vocabulary_) {
    const double df = static_cast<double>(document_frequency[token]);
    idf_[index] = std::log((1.0 + n) / (1.0 + df)) + 1.0;
  }
}

std::vector<double> TfidfVectorizer::transform(const std::string& document) const {
  std::vector<double> features(vocabulary_.size(), 0.0);
  for (const auto& token : tokenize(document)) {
    auto it = vocabulary_.find(token);
    if (it != vocabulary_.end()) {
      features[it->second] += 1.0;
    }
  }
  double norm_sq = 0.0;
  for (std::size_t i = 0; i < features.size(); ++i) {
    features[i] *= idf_[i];
    norm_sq += features[i] * features[i];
  }
  if (norm_sq > 0.0) {
    const double inv = 1.0 / std::sqrt(norm_sq);
    for (auto& value : features) {
      value *= inv;
    }
  }
  return features;
}

std::vector<std::vector<double>> TfidfVectorizer::transform_all(
    const std::vector<std::string>& documents) const {
  std::vector<std::vector<double>> rows;
  rows.reserve(documents.size());
  for (const auto& doc : documents) {
    rows.push_back(transform(doc));
  }
  return rows;
}

}  // namespace maleval::text
