#pragma once

#include <map>
#include <string>
#include <vector>

namespace maleval::text {

std::vector<std::string> tokenize(const std::string& text);

/// Smoothed TF-IDF with L2-normalized rows. Vocabulary is frozen at fit time;
/// unseen tokens are ignored at transform time.
class TfidfVectorizer {
 public:
  void fit(const std::vector<std::string>& documents);
  std::vector<double> transform(const std::string& document) const;
  std::vector<std::vector<double>> transform_all(const std::vector<std::string>& documents) const;

  std::size_t vocabulary_size() const { return vocabulary_.size(); }
  bool fitted() const { return !idf_.empty(); }

 private:
  std::map<std::string, std::size_t> vocabulary_;
  std::vector<double> idf_;
};

}  // namespace maleval::text
