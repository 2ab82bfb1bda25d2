// Copyright 2026 The LMS3 Toolkit Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <vector>

namespace lms3 {

using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Vector = Eigen::VectorXd;

inline constexpr int kBundleFormatVersion = 1;

/// Attention projections of one layer of the inference model. The query
/// projection is already folded into w_kq (w_kq = W_K^T W_Q), so only the
/// merged d x d matrix and the d' x d value projection are carried.
struct ProjectionBundle {
  std::size_t d = 0;
  std::size_t d_prime = 0;
  Matrix w_kq;  // d x d
  Matrix w_v;   // d' x d
  std::string source;
  int format_version = kBundleFormatVersion;
};

/// Embedding is taken over problem + solution text.
struct Demonstration {
  std::string id;
  std::string problem;
  std::string solution;
  Vector embedding;
};

struct DemonstrationPool {
  std::size_t d = 0;
  std::vector<Demonstration> items;

  std::size_t size() const { return items.size(); }
  bool empty() const { return items.empty(); }
};

/// Embedding is taken over the problem text only.
struct TestItem {
  std::string id;
  std::string problem;
  Vector embedding;
};

struct Bundle {
  ProjectionBundle projections;
  DemonstrationPool pool;
  std::vector<TestItem> tests;

  /// nullptr when no test item carries this id.
  const TestItem* find_test(const std::string& id) const;
};

class BundleError : public std::runtime_error {
 public:
  enum class Kind { kMissingFile, kMalformed, kDimensionMismatch, kNonFinite, kDuplicateId, kIo };

  BundleError(Kind kind, std::string file, const std::string& message);

  Kind kind() const { return kind_; }
  const std::string& file() const { return file_; }

 private:
  Kind kind_;
  std::string file_;
};

const char* to_string(BundleError::Kind kind);

/// Checks every type invariant of the triple; throws BundleError on the
/// first violation with the offending item and position in the message.
void validate_bundle(const ProjectionBundle& projections, const DemonstrationPool& pool,
                     const std::vector<TestItem>& tests);

/// Reads a bundle directory (manifest.json plus the files it names).
Bundle load_bundle(const std::filesystem::path& dir);

/// Writes the on-disk layout: manifest.json, four raw little-endian f64
/// arrays and two JSONL text files. The directory is created if needed.
void write_bundle(const ProjectionBundle& projections, const DemonstrationPool& pool,
                  const std::vector<TestItem>& tests, const std::filesystem::path& dir);

}  // namespace lms3
