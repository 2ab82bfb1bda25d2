// Copyright 2026 The LMS3 Toolkit Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "lms3/bundle.hpp"

#include <cstddef>
#include <cstdint>
#include <map>
#include <string>
#include <string_view>
#include <vector>

namespace lms3 {

/// Lowercases ASCII and splits on every run of non-alphanumeric bytes.
/// Digits are kept; bytes outside ASCII act as separators.
std::vector<std::string> tokenize(std::string_view text);

/// Pool indices picked by a baseline, best first, with their scores
/// (empty for the random baseline).
struct RankedSelection {
  std::vector<std::size_t> indices;
  std::vector<double> scores;
  bool fallback = false;  // query had no tokens; pool-order prefix returned
};

/// k distinct demonstrations drawn uniformly without replacement (partial
/// Fisher-Yates over Rng::below). Throws std::invalid_argument if k > M.
RankedSelection select_random(const DemonstrationPool& pool, std::size_t k, std::uint64_t seed);

/// TF-IDF over demonstration problem texts: raw term counts times
/// idf(t) = ln((1 + N) / (1 + df(t))) + 1, L2-normalised. Query terms that
/// never occur in the corpus are dropped.
class TfidfIndex {
 public:
  explicit TfidfIndex(const std::vector<std::string>& documents);

  std::size_t size() const { return n_docs_; }
  double idf(const std::string& term) const;
  std::vector<double> cosine(std::string_view query) const;

 private:
  std::map<std::string, double> weighted(const std::vector<std::string>& tokens) const;

  std::size_t n_docs_ = 0;
  std::map<std::string, std::size_t> df_;
  std::vector<std::map<std::string, double>> docs_;  // unit-norm tf-idf vectors
};

RankedSelection select_tfidf(const DemonstrationPool& pool, std::string_view query, std::size_t k);

struct Bm25Params {
  double k1 = 1.5;
  double b = 0.75;

  void validate() const;
};

/// Corpus statistics for Okapi BM25: per-document term counts and lengths,
/// average length and document frequencies. Immutable once built.
class Bm25Corpus {
 public:
  explicit Bm25Corpus(const std::vector<std::string>& documents);

  std::size_t size() const { return tf_.size(); }
  std::size_t doc_length(std::size_t doc) const { return length_.at(doc); }
  double average_length() const { return avgdl_; }
  std::size_t document_frequency(const std::string& term) const;
  std::size_t term_frequency(std::size_t doc, const std::string& term) const;

  /// ln(1 + (N - df + 0.5) / (df + 0.5))
  double idf(const std::string& term) const;

 private:
  std::vector<std::map<std::string, std::size_t>> tf_;
  std::vector<std::size_t> length_;
  std::map<std::string, std::size_t> df_;
  double avgdl_ = 0.0;
};

/// Sum over the distinct query terms of
///   idf(t) * tf * (k1 + 1) / (tf + k1 * (1 - b + b * |d| / avgdl)).
double bm25_score(std::string_view query, std::size_t doc, const Bm25Corpus& corpus,
                  const Bm25Params& params);

RankedSelection select_bm25(const DemonstrationPool& pool, std::string_view query, std::size_t k,
                            const Bm25Params& params = {});

}  // namespace lms3
