// Copyright 2026 The LMS3 Toolkit Authors
// SPDX-License-Identifier: Apache-2.0

#include "lms3/baselines.hpp"

#include "lms3/rng.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>
#include <stdexcept>

namespace lms3 {
namespace {

bool is_alnum_ascii(unsigned char c) {
  return (c >= '0' && c <= '9') || (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z');
}

std::vector<std::string> problem_texts(const DemonstrationPool& pool) {
  std::vector<std::string> docs;
  docs.reserve(pool.size());
  for (const auto& item : pool.items) docs.push_back(item.problem);
  return docs;
}

void check_k(std::size_t k, std::size_t m) {
  if (k < 1) throw std::invalid_argument("k must be >= 1");
  if (k > m) {
    throw std::invalid_argument("k = " + std::to_string(k) + " exceeds pool size " + std::to_string(m));
  }
}

// Highest score first, ties by pool index.
RankedSelection top_k(const std::vector<double>& scores, std::size_t k) {
  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });
  RankedSelection r;
  for (std::size_t i = 0; i < k; ++i) {
    r.indices.push_back(order[i]);
    r.scores.push_back(scores[order[i]]);
  }
  return r;
}

}  // namespace

std::vector<std::string> tokenize(std::string_view text) {
  std::vector<std::string> tokens;
  std::string current;
  for (const char ch : text) {
    const auto c = static_cast<unsigned char>(ch);
    if (is_alnum_ascii(c)) {
      current.push_back(static_cast<char>(c >= 'A' && c <= 'Z' ? c - 'A' + 'a' : c));
    } else if (!current.empty()) {
      tokens.push_back(std::move(current));
      current.clear();
    }
  }
  if (!current.empty()) tokens.push_back(std::move(current));
  return tokens;
}

RankedSelection select_random(const DemonstrationPool& pool, std::size_t k, std::uint64_t seed) {
  check_k(k, pool.size());
  std::vector<std::size_t> idx(pool.size());
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  Rng rng(seed);
  for (std::size_t i = 0; i < k; ++i) {
    const auto j = i + static_cast<std::size_t>(rng.below(idx.size() - i));
    std::swap(idx[i], idx[j]);
  }
  idx.resize(k);
  return RankedSelection{std::move(idx), {}, false};
}

TfidfIndex::TfidfIndex(const std::vector<std::string>& documents) : n_docs_(documents.size()) {
  std::vector<std::vector<std::string>> tokenized;
  tokenized.reserve(documents.size());
  for (const auto& doc : documents) {
    tokenized.push_back(tokenize(doc));
    for (const auto& term : std::set<std::string>(tokenized.back().begin(), tokenized.back().end())) {
      ++df_[term];
    }
  }
  docs_.reserve(documents.size());
  for (const auto& tokens : tokenized) docs_.push_back(weighted(tokens));
}

double TfidfIndex::idf(const std::string& term) const {
  const auto it = df_.find(term);
  const double df = it == df_.end() ? 0.0 : static_cast<double>(it->second);
  const auto n = static_cast<double>(n_docs_);
  return std::log((1.0 + n) / (1.0 + df)) + 1.0;
}

std::map<std::string, double> TfidfIndex::weighted(const std::vector<std::string>& tokens) const {
  std::map<std::string, double> v;
  for (const auto& t : tokens) {
    if (df_.count(t)) v[t] += 1.0;
  }
  double norm2 = 0.0;
  for (auto& [term, w] : v) {
    w *= idf(term);
    norm2 += w * w;
  }
  if (norm2 > 0.0) {
    const double inv = 1.0 / std::sqrt(norm2);
    for (auto& [term, w] : v) w *= inv;
  }
  return v;
}

std::vector<double> TfidfIndex::cosine(std::string_view query) const {
  const auto q = weighted(tokenize(query));
  std::vector<double> out(docs_.size(), 0.0);
  for (std::size_t i = 0; i < docs_.size(); ++i) {
    double dot = 0.0;
    for (const auto& [term, w] : q) {
      const auto it = docs_[i].find(term);
      if (it != docs_[i].end()) dot += w * it->second;
    }
    out[i] = dot;
  }
  return out;
}

RankedSelection select_tfidf(const DemonstrationPool& pool, std::string_view query, std::size_t k) {
  if (pool.empty()) throw std::invalid_argument("select_tfidf: empty pool");
  check_k(k, pool.size());
  if (tokenize(query).empty()) {
    RankedSelection r;
    for (std::size_t i = 0; i < k; ++i) r.indices.push_back(i);
    r.scores.assign(k, 0.0);
    r.fallback = true;
    return r;
  }
  const TfidfIndex index(problem_texts(pool));
  return top_k(index.cosine(query), k);
}

void Bm25Params::validate() const {
  if (!std::isfinite(k1) || k1 <= 0.0) throw std::invalid_argument("bm25 k1 must be positive");
  if (!std::isfinite(b) || b < 0.0 || b > 1.0) throw std::invalid_argument("bm25 b must lie in [0, 1]");
}

Bm25Corpus::Bm25Corpus(const std::vector<std::string>& documents) {
  tf_.reserve(documents.size());
  std::size_t total = 0;
  for (const auto& doc : documents) {
    const auto tokens = tokenize(doc);
    std::map<std::string, std::size_t> counts;
    for (const auto& t : tokens) ++counts[t];
    for (const auto& [term, c] : counts) ++df_[term];
    length_.push_back(tokens.size());
    total += tokens.size();
    tf_.push_back(std::move(counts));
  }
  avgdl_ = documents.empty() ? 0.0 : static_cast<double>(total) / static_cast<double>(documents.size());
}

std::size_t Bm25Corpus::document_frequency(const std::string& term) const {
  const auto it = df_.find(term);
  return it == df_.end() ? 0 : it->second;
}

std::size_t Bm25Corpus::term_frequency(std::size_t doc, const std::string& term) const {
  const auto& counts = tf_.at(doc);
  const auto it = counts.find(term);
  return it == counts.end() ? 0 : it->second;
}

double Bm25Corpus::idf(const std::string& term) const {
  const auto n = static_cast<double>(size());
  const auto df = static_cast<double>(document_frequency(term));
  return std::log(1.0 + (n - df + 0.5) / (df + 0.5));
}

double bm25_score(std::string_view query, std::size_t doc, const Bm25Corpus& corpus,
                  const Bm25Params& params) {
  params.validate();
  const auto terms = tokenize(query);
  const std::set<std::string> distinct(terms.begin(), terms.end());
  const auto len = static_cast<double>(corpus.doc_length(doc));
  double score = 0.0;
  for (const auto& term : distinct) {
    const auto tf = static_cast<double>(corpus.term_frequency(doc, term));
    if (tf == 0.0) continue;
    const double norm = 1.0 - params.b + params.b * len / corpus.average_length();
    score += corpus.idf(term) * tf * (params.k1 + 1.0) / (tf + params.k1 * norm);
  }
  return score;
}

RankedSelection select_bm25(const DemonstrationPool& pool, std::string_view query, std::size_t k,
                            const Bm25Params& params) {
  if (pool.empty()) throw std::invalid_argument("select_bm25: empty pool");
  check_k(k, pool.size());
  params.validate();
  if (tokenize(query).empty()) {
    RankedSelection r;
    for (std::size_t i = 0; i < k; ++i) r.indices.push_back(i);
    r.scores.assign(k, 0.0);
    r.fallback = true;
    return r;
  }
  const Bm25Corpus corpus(problem_texts(pool));
  std::vector<double> scores(pool.size());
  for (std::size_t i = 0; i < pool.size(); ++i) scores[i] = bm25_score(query, i, corpus, params);
  return top_k(scores, k);
}

}  // namespace lms3
