// Copyright 2026 The LMS3 Toolkit Authors
// SPDX-License-Identifier: Apache-2.0

#include "lms3/bundle.hpp"

#include <json.hpp>

#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <sstream>
#include <unordered_set>

namespace lms3 {
namespace fs = std::filesystem;
using json = nlohmann::json;

namespace {

constexpr const char* kManifest = "manifest.json";

struct FileNames {
  std::string w_kq = "w_kq.f64";
  std::string w_v = "w_v.f64";
  std::string demo_embeddings = "demo_embeddings.f64";
  std::string test_embeddings = "test_embeddings.f64";
  std::string demos = "demos.jsonl";
  std::string tests = "tests.jsonl";
};

[[noreturn]] void fail(BundleError::Kind kind, const std::string& file, const std::string& msg) {
  throw BundleError(kind, file, msg);
}

std::uint64_t to_little_endian(std::uint64_t v) {
  if constexpr (std::endian::native == std::endian::little) {
    return v;
  } else {
    std::uint64_t r = 0;
    for (int i = 0; i < 8; ++i) r |= ((v >> (8 * i)) & 0xFFu) << (8 * (7 - i));
    return r;
  }
}

std::vector<double> read_f64(const fs::path& path, const std::string& name, std::size_t expected,
                             const std::string& shape) {
  if (!fs::is_regular_file(path)) {
    fail(BundleError::Kind::kMissingFile, name, "array file not found: " + path.string());
  }
  const auto bytes = fs::file_size(path);
  if (bytes != expected * sizeof(double)) {
    std::ostringstream os;
    os << "dimension mismatch in " << name << ": file has " << bytes << " bytes, manifest implies "
       << shape << " = " << expected * sizeof(double) << " bytes";
    fail(BundleError::Kind::kDimensionMismatch, name, os.str());
  }
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(BundleError::Kind::kIo, name, "cannot open " + path.string());
  std::vector<double> out(expected);
  for (std::size_t i = 0; i < expected; ++i) {
    std::uint64_t raw = 0;
    in.read(reinterpret_cast<char*>(&raw), sizeof raw);
    if (!in) fail(BundleError::Kind::kIo, name, "short read at element " + std::to_string(i));
    out[i] = std::bit_cast<double>(to_little_endian(raw));
  }
  return out;
}

void write_f64(const fs::path& path, const std::string& name, const double* data, std::size_t count) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) fail(BundleError::Kind::kIo, name, "cannot write " + path.string());
  for (std::size_t i = 0; i < count; ++i) {
    const std::uint64_t raw = to_little_endian(std::bit_cast<std::uint64_t>(data[i]));
    out.write(reinterpret_cast<const char*>(&raw), sizeof raw);
  }
  if (!out) fail(BundleError::Kind::kIo, name, "write failed for " + path.string());
}

void write_text(const fs::path& path, const std::string& name, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) fail(BundleError::Kind::kIo, name, "cannot write " + path.string());
  out << text;
  if (!out) fail(BundleError::Kind::kIo, name, "write failed for " + path.string());
}

std::string matrix_position(std::size_t flat, std::size_t cols) {
  return "(" + std::to_string(flat / cols) + ", " + std::to_string(flat % cols) + ")";
}

void check_matrix(const Matrix& m, std::size_t rows, std::size_t cols, const std::string& name) {
  if (static_cast<std::size_t>(m.rows()) != rows || static_cast<std::size_t>(m.cols()) != cols) {
    std::ostringstream os;
    os << name << " is " << m.rows() << "x" << m.cols() << ", expected " << rows << "x" << cols;
    fail(BundleError::Kind::kDimensionMismatch, name, os.str());
  }
  for (std::size_t i = 0; i < rows * cols; ++i) {
    if (!std::isfinite(m.data()[i])) {
      fail(BundleError::Kind::kNonFinite, name,
           "non-finite value in " + name + " at " + matrix_position(i, cols));
    }
  }
}

void check_embedding(const Vector& e, std::size_t d, const std::string& file, const std::string& what,
                     const std::string& id, std::size_t index) {
  if (static_cast<std::size_t>(e.size()) != d) {
    std::ostringstream os;
    os << what << " " << index << " (id '" << id << "') has embedding length " << e.size()
       << ", expected " << d;
    fail(BundleError::Kind::kDimensionMismatch, file, os.str());
  }
  for (std::size_t j = 0; j < d; ++j) {
    if (!std::isfinite(e[static_cast<Eigen::Index>(j)])) {
      std::ostringstream os;
      os << "non-finite embedding value for " << what << " " << index << " (id '" << id
         << "') at position " << j;
      fail(BundleError::Kind::kNonFinite, file, os.str());
    }
  }
}

std::vector<json> read_jsonl(const fs::path& path, const std::string& name) {
  if (!fs::is_regular_file(path)) {
    fail(BundleError::Kind::kMissingFile, name, "text file not found: " + path.string());
  }
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(BundleError::Kind::kIo, name, "cannot open " + path.string());
  std::vector<json> records;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") == std::string::npos) continue;
    try {
      records.push_back(json::parse(line));
    } catch (const json::exception& e) {
      fail(BundleError::Kind::kMalformed, name,
           name + " line " + std::to_string(line_no) + ": " + e.what());
    }
    if (!records.back().is_object()) {
      fail(BundleError::Kind::kMalformed, name,
           name + " line " + std::to_string(line_no) + ": expected a JSON object");
    }
  }
  return records;
}

std::string string_field(const json& rec, const char* key, const std::string& file, std::size_t index) {
  const auto it = rec.find(key);
  if (it == rec.end() || !it->is_string()) {
    fail(BundleError::Kind::kMalformed, file,
         file + " record " + std::to_string(index) + ": missing string field '" + key + "'");
  }
  return it->get<std::string>();
}

std::size_t size_field(const json& manifest, const char* key) {
  const auto it = manifest.find(key);
  if (it == manifest.end() || !it->is_number_integer() || it->get<long long>() < 0) {
    fail(BundleError::Kind::kMalformed, kManifest,
         std::string("manifest.json field '") + key + "' must be a non-negative integer");
  }
  return it->get<std::size_t>();
}

std::string file_field(const json& files, const char* key) {
  const auto it = files.find(key);
  if (it == files.end() || !it->is_string()) {
    fail(BundleError::Kind::kMalformed, kManifest,
         std::string("manifest.json files.") + key + " must be a string");
  }
  const fs::path p(it->get<std::string>());
  if (p.empty() || p.is_absolute() || p.lexically_normal().string().starts_with("..")) {
    fail(BundleError::Kind::kMalformed, kManifest,
         std::string("manifest.json files.") + key + " must be a relative path inside the bundle");
  }
  return it->get<std::string>();
}

}  // namespace

BundleError::BundleError(Kind kind, std::string file, const std::string& message)
    : std::runtime_error(message), kind_(kind), file_(std::move(file)) {}

const char* to_string(BundleError::Kind kind) {
  switch (kind) {
    case BundleError::Kind::kMissingFile: return "missing_file";
    case BundleError::Kind::kMalformed: return "malformed";
    case BundleError::Kind::kDimensionMismatch: return "dimension_mismatch";
    case BundleError::Kind::kNonFinite: return "non_finite";
    case BundleError::Kind::kDuplicateId: return "duplicate_id";
    case BundleError::Kind::kIo: return "io";
  }
  return "unknown";
}

const TestItem* Bundle::find_test(const std::string& id) const {
  for (const auto& t : tests) {
    if (t.id == id) return &t;
  }
  return nullptr;
}

namespace {

void validate_impl(const ProjectionBundle& projections, const DemonstrationPool& pool,
                   const std::vector<TestItem>& tests, const FileNames& names) {
  const std::size_t d = projections.d;
  if (d < 1 || projections.d_prime < 1) {
    fail(BundleError::Kind::kDimensionMismatch, kManifest, "d and d_prime must both be >= 1");
  }
  if (pool.d != d) {
    fail(BundleError::Kind::kDimensionMismatch, names.demo_embeddings,
         "pool dimension " + std::to_string(pool.d) + " differs from bundle d " + std::to_string(d));
  }
  check_matrix(projections.w_kq, d, d, names.w_kq);
  check_matrix(projections.w_v, projections.d_prime, d, names.w_v);

  std::unordered_set<std::string> seen;
  for (std::size_t i = 0; i < pool.items.size(); ++i) {
    const auto& item = pool.items[i];
    if (!seen.insert(item.id).second) {
      fail(BundleError::Kind::kDuplicateId, names.demos,
           "duplicate demonstration id '" + item.id + "' at index " + std::to_string(i));
    }
    check_embedding(item.embedding, d, names.demo_embeddings, "demonstration", item.id, i);
  }
  seen.clear();
  for (std::size_t i = 0; i < tests.size(); ++i) {
    if (!seen.insert(tests[i].id).second) {
      fail(BundleError::Kind::kDuplicateId, names.tests,
           "duplicate test id '" + tests[i].id + "' at index " + std::to_string(i));
    }
    check_embedding(tests[i].embedding, d, names.test_embeddings, "test item", tests[i].id, i);
  }
}

}  // namespace

void validate_bundle(const ProjectionBundle& projections, const DemonstrationPool& pool,
                     const std::vector<TestItem>& tests) {
  validate_impl(projections, pool, tests, FileNames{});
}

Bundle load_bundle(const fs::path& dir) {
  const fs::path manifest_path = dir / kManifest;
  if (!fs::is_regular_file(manifest_path)) {
    fail(BundleError::Kind::kMissingFile, kManifest, "manifest.json not found: " + manifest_path.string());
  }
  json manifest;
  {
    std::ifstream in(manifest_path, std::ios::binary);
    try {
      manifest = json::parse(in);
    } catch (const json::exception& e) {
      fail(BundleError::Kind::kMalformed, kManifest, std::string("manifest.json is not valid JSON: ") + e.what());
    }
  }
  if (!manifest.is_object()) fail(BundleError::Kind::kMalformed, kManifest, "manifest.json must be a JSON object");

  const auto version = manifest.find("format_version");
  if (version == manifest.end() || !version->is_number_integer() ||
      version->get<int>() != kBundleFormatVersion) {
    fail(BundleError::Kind::kMalformed, kManifest, "manifest.json: unsupported or missing format_version");
  }
  const auto dtype = manifest.find("dtype");
  if (dtype == manifest.end() || *dtype != "f64") {
    fail(BundleError::Kind::kMalformed, kManifest, "manifest.json: dtype must be \"f64\"");
  }
  const std::size_t d = size_field(manifest, "d");
  const std::size_t d_prime = size_field(manifest, "d_prime");
  const std::size_t m = size_field(manifest, "m");
  const std::size_t n = size_field(manifest, "n");
  if (d < 1 || d_prime < 1) fail(BundleError::Kind::kMalformed, kManifest, "manifest.json: d and d_prime must be >= 1");

  const auto files_it = manifest.find("files");
  if (files_it == manifest.end() || !files_it->is_object()) {
    fail(BundleError::Kind::kMalformed, kManifest, "manifest.json field 'files' must be an object");
  }
  const std::string f_wkq = file_field(*files_it, "w_kq");
  const std::string f_wv = file_field(*files_it, "w_v");
  const std::string f_demo_emb = file_field(*files_it, "demo_embeddings");
  const std::string f_test_emb = file_field(*files_it, "test_embeddings");
  const std::string f_demos = file_field(*files_it, "demos");
  const std::string f_tests = file_field(*files_it, "tests");

  Bundle b;
  b.projections.d = d;
  b.projections.d_prime = d_prime;
  b.projections.format_version = kBundleFormatVersion;
  if (const auto src = manifest.find("source"); src != manifest.end()) {
    if (!src->is_string()) fail(BundleError::Kind::kMalformed, kManifest, "manifest.json: source must be a string");
    b.projections.source = src->get<std::string>();
  }

  const auto wkq = read_f64(dir / f_wkq, f_wkq, d * d, "d x d");
  const auto wv = read_f64(dir / f_wv, f_wv, d_prime * d, "d' x d");
  const auto demo_emb = read_f64(dir / f_demo_emb, f_demo_emb, m * d, "m x d");
  const auto test_emb = read_f64(dir / f_test_emb, f_test_emb, n * d, "n x d");
  b.projections.w_kq = Eigen::Map<const Matrix>(wkq.data(), static_cast<Eigen::Index>(d),
                                                static_cast<Eigen::Index>(d));
  b.projections.w_v = Eigen::Map<const Matrix>(wv.data(), static_cast<Eigen::Index>(d_prime),
                                               static_cast<Eigen::Index>(d));

  const auto demo_records = read_jsonl(dir / f_demos, f_demos);
  if (demo_records.size() != m) {
    fail(BundleError::Kind::kDimensionMismatch, f_demos,
         f_demos + " has " + std::to_string(demo_records.size()) + " records, manifest m = " +
             std::to_string(m));
  }
  const auto test_records = read_jsonl(dir / f_tests, f_tests);
  if (test_records.size() != n) {
    fail(BundleError::Kind::kDimensionMismatch, f_tests,
         f_tests + " has " + std::to_string(test_records.size()) + " records, manifest n = " +
             std::to_string(n));
  }

  b.pool.d = d;
  b.pool.items.reserve(m);
  for (std::size_t i = 0; i < m; ++i) {
    Demonstration demo;
    demo.id = string_field(demo_records[i], "id", f_demos, i);
    demo.problem = string_field(demo_records[i], "problem", f_demos, i);
    demo.solution = string_field(demo_records[i], "solution", f_demos, i);
    demo.embedding = Eigen::Map<const Vector>(demo_emb.data() + i * d, static_cast<Eigen::Index>(d));
    b.pool.items.push_back(std::move(demo));
  }
  b.tests.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    TestItem t;
    t.id = string_field(test_records[i], "id", f_tests, i);
    t.problem = string_field(test_records[i], "problem", f_tests, i);
    t.embedding = Eigen::Map<const Vector>(test_emb.data() + i * d, static_cast<Eigen::Index>(d));
    b.tests.push_back(std::move(t));
  }

  validate_impl(b.projections, b.pool, b.tests,
                FileNames{f_wkq, f_wv, f_demo_emb, f_test_emb, f_demos, f_tests});
  return b;
}

void write_bundle(const ProjectionBundle& projections, const DemonstrationPool& pool,
                  const std::vector<TestItem>& tests, const fs::path& dir) {
  validate_bundle(projections, pool, tests);
  const FileNames names;
  const std::size_t d = projections.d;

  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir)) {
    fail(BundleError::Kind::kIo, dir.string(), "cannot create bundle directory " + dir.string());
  }

  write_f64(dir / names.w_kq, names.w_kq, projections.w_kq.data(), d * d);
  write_f64(dir / names.w_v, names.w_v, projections.w_v.data(), projections.d_prime * d);

  std::vector<double> flat;
  flat.reserve(pool.size() * d);
  for (const auto& item : pool.items) flat.insert(flat.end(), item.embedding.data(), item.embedding.data() + d);
  write_f64(dir / names.demo_embeddings, names.demo_embeddings, flat.data(), flat.size());
  flat.clear();
  for (const auto& t : tests) flat.insert(flat.end(), t.embedding.data(), t.embedding.data() + d);
  write_f64(dir / names.test_embeddings, names.test_embeddings, flat.data(), flat.size());

  try {
    std::string text;
    for (const auto& item : pool.items) {
      text += json{{"id", item.id}, {"problem", item.problem}, {"solution", item.solution}}.dump();
      text += '\n';
    }
    write_text(dir / names.demos, names.demos, text);
    text.clear();
    for (const auto& t : tests) {
      text += json{{"id", t.id}, {"problem", t.problem}}.dump();
      text += '\n';
    }
    write_text(dir / names.tests, names.tests, text);
  } catch (const json::exception& e) {
    fail(BundleError::Kind::kMalformed, names.demos, std::string("text is not valid UTF-8: ") + e.what());
  }

  const json manifest = {
      {"format_version", kBundleFormatVersion},
      {"d", d},
      {"d_prime", projections.d_prime},
      {"m", pool.size()},
      {"n", tests.size()},
      {"dtype", "f64"},
      {"files",
       {{"w_kq", names.w_kq},
        {"w_v", names.w_v},
        {"demo_embeddings", names.demo_embeddings},
        {"test_embeddings", names.test_embeddings},
        {"demos", names.demos},
        {"tests", names.tests}}},
      {"source", projections.source},
  };
  write_text(dir / kManifest, kManifest, manifest.dump(2) + "\n");
}

}  // namespace lms3
