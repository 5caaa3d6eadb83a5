#pragma once

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <random>
#include <span>
#include <sstream>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "csiact/error.hpp"
#include "csiact/labels.hpp"
#include "csiact/matrix.hpp"

namespace csiact {

inline constexpr std::size_t kSubcarrierCount = 64;

struct SubcarrierTrace {
  int index = 0;
  std::vector<double> amplitudes;

  bool operator==(const SubcarrierTrace&) const = default;
};

struct CaptureMeta {
  double centre_frequency_hz = 5.32e9;
  double sample_time_s = 1.0 / 80e4;
  double capture_duration_s = 10.0;
  std::string source_id;

  bool operator==(const CaptureMeta&) const = default;
};

struct CsiSample {
  ActivityLabel label = ActivityLabel::Sitting;
  std::vector<SubcarrierTrace> traces;
  CaptureMeta meta;

  std::size_t trace_length() const noexcept {
    return traces.empty() ? 0 : traces.front().amplitudes.size();
  }

  bool operator==(const CsiSample&) const = default;
};

/// Throws MalformedCsv when the sample breaks the 64-trace / equal-length /
/// finite-value invariants.
inline void validate(const CsiSample& sample) {
  if (sample.traces.size() != kSubcarrierCount)
    throw Error(Errc::MalformedCsv, "expected 64 subcarrier traces, got " +
                                        std::to_string(sample.traces.size()));
  const std::size_t length = sample.trace_length();
  if (length == 0) throw Error(Errc::MalformedCsv, "empty subcarrier trace");
  for (std::size_t i = 0; i < sample.traces.size(); ++i) {
    const auto& trace = sample.traces[i];
    if (trace.index != static_cast<int>(i))
      throw Error(Errc::MalformedCsv, "subcarrier indices must be 0..63 in order");
    if (trace.amplitudes.size() != length)
      throw Error(Errc::MalformedCsv, "traces within one sample must have equal length");
    for (double v : trace.amplitudes)
      if (!std::isfinite(v)) throw Error(Errc::MalformedCsv, "non-finite amplitude");
  }
}

/// Label-first rectangular matrix; one row per trace, zero padded.
struct DesignMatrix {
  LabelDictionary dictionary;
  std::vector<ClassId> labels;
  Matrix rows;

  std::size_t size() const noexcept { return labels.size(); }
  std::size_t width() const noexcept { return rows.cols(); }

  DesignMatrix subset(std::span<const std::size_t> indices) const {
    DesignMatrix out;
    out.dictionary = dictionary;
    out.rows = rows.select_rows(indices);
    out.labels.reserve(indices.size());
    for (auto i : indices) out.labels.push_back(labels[i]);
    return out;
  }

  bool operator==(const DesignMatrix&) const = default;
};

// ---------------------------------------------------------------------------
// Number formatting and parsing

/// Shortest decimal that round-trips to the same double.
inline std::string format_double(double value) {
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof buf, value);
  return std::string(buf, end);
}

inline double parse_finite(std::string_view token) {
  while (!token.empty() && (token.front() == ' ' || token.front() == '\t')) token.remove_prefix(1);
  while (!token.empty() && (token.back() == ' ' || token.back() == '\t' || token.back() == '\r'))
    token.remove_suffix(1);
  double value = 0.0;
  auto [ptr, ec] = std::from_chars(token.data(), token.data() + token.size(), value);
  if (ec != std::errc{} || ptr != token.data() + token.size() || token.empty())
    throw Error(Errc::MalformedCsv, "non-numeric token '" + std::string(token) + "'");
  if (!std::isfinite(value))
    throw Error(Errc::MalformedCsv, "non-finite token '" + std::string(token) + "'");
  return value;
}

namespace detail {

inline std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(Errc::IoFailure, "cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return std::move(ss).str();
}

inline std::vector<std::string_view> split_lines(std::string_view text) {
  std::vector<std::string_view> lines;
  std::size_t start = 0;
  while (start < text.size()) {
    auto end = text.find('\n', start);
    if (end == std::string_view::npos) end = text.size();
    auto line = text.substr(start, end - start);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    lines.push_back(line);
    start = end + 1;
  }
  while (!lines.empty() && lines.back().empty()) lines.pop_back();
  return lines;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Sample CSV

inline CsiSample parse_sample_csv(std::string_view text, std::string source_id = {}) {
  const auto lines = detail::split_lines(text);
  if (lines.size() != kSubcarrierCount)
    throw Error(Errc::MalformedCsv,
                "expected 64 data rows, found " + std::to_string(lines.size()));

  CsiSample sample;
  sample.meta.source_id = std::move(source_id);
  sample.traces.reserve(kSubcarrierCount);
  for (std::size_t r = 0; r < lines.size(); ++r) {
    std::string_view line = lines[r];
    auto comma = line.find(',');
    if (comma == std::string_view::npos)
      throw Error(Errc::MalformedCsv, "row " + std::to_string(r) + " has no values");
    auto token = line.substr(0, comma);
    auto label = parse_activity(token);
    if (!label) throw Error(Errc::UnknownLabel, "unknown label '" + std::string(token) + "'");
    if (r == 0) {
      sample.label = *label;
    } else if (*label != sample.label) {
      throw Error(Errc::LabelMismatch, "row " + std::to_string(r) + " disagrees on label");
    }

    SubcarrierTrace trace;
    trace.index = static_cast<int>(r);
    std::string_view rest = line.substr(comma + 1);
    while (true) {
      auto next = rest.find(',');
      trace.amplitudes.push_back(parse_finite(rest.substr(0, next)));
      if (next == std::string_view::npos) break;
      rest.remove_prefix(next + 1);
    }
    sample.traces.push_back(std::move(trace));
  }
  validate(sample);
  return sample;
}

inline CsiSample load_sample_csv(const std::filesystem::path& path) {
  return parse_sample_csv(detail::read_file(path), path.stem().string());
}

inline std::string format_sample_csv(const CsiSample& sample) {
  std::string out;
  const auto label = to_string(sample.label);
  for (const auto& trace : sample.traces) {
    out += label;
    for (double v : trace.amplitudes) {
      out += ',';
      out += format_double(v);
    }
    out += '\n';
  }
  return out;
}

inline void write_sample_csv(const CsiSample& sample, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(Errc::IoFailure, "cannot write " + path.string());
  out << format_sample_csv(sample);
  if (!out) throw Error(Errc::IoFailure, "write failed for " + path.string());
}

/// Sample CSVs of a dataset directory in lexicographic filename order.
inline std::vector<std::filesystem::path> list_dataset(const std::filesystem::path& dir) {
  std::error_code ec;
  if (!std::filesystem::is_directory(dir, ec))
    throw Error(Errc::IoFailure, "not a directory: " + dir.string());
  std::vector<std::filesystem::path> files;
  for (const auto& entry : std::filesystem::directory_iterator(dir)) {
    if (entry.is_regular_file() && entry.path().extension() == ".csv") files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end(),
            [](const auto& a, const auto& b) { return a.filename().string() < b.filename().string(); });
  return files;
}

inline std::vector<CsiSample> load_dataset(const std::filesystem::path& dir) {
  std::vector<CsiSample> samples;
  for (const auto& file : list_dataset(dir)) samples.push_back(load_sample_csv(file));
  return samples;
}

// ---------------------------------------------------------------------------
// Matrix assembly

/// One row per subcarrier trace (sample order, then subcarrier order); rows
/// shorter than the longest trace are right-padded with 0.0.
inline DesignMatrix assemble_design_matrix(std::span<const CsiSample> samples) {
  if (samples.empty()) throw Error(Errc::EmptyInput, "no samples to assemble");
  std::size_t width = 0;
  std::size_t n_rows = 0;
  for (const auto& s : samples) {
    n_rows += s.traces.size();
    for (const auto& t : s.traces) width = std::max(width, t.amplitudes.size());
  }

  DesignMatrix dm;
  dm.dictionary = LabelDictionary::activities();
  dm.rows = Matrix(n_rows, width, 0.0);
  dm.labels.reserve(n_rows);
  std::size_t r = 0;
  for (const auto& s : samples) {
    for (const auto& t : s.traces) {
      std::copy(t.amplitudes.begin(), t.amplitudes.end(), dm.rows.row(r).begin());
      dm.labels.push_back(class_of(s.label));
      ++r;
    }
  }
  return dm;
}

/// Fits a row to a fixed width: truncates longer rows, zero-pads shorter ones.
inline std::vector<double> reconcile_width(std::span<const double> row, std::size_t width) {
  std::vector<double> out(width, 0.0);
  std::copy_n(row.begin(), std::min(width, row.size()), out.begin());
  return out;
}

/// Serving-time matrix for one capture, reconciled to a model's width.
inline Matrix sample_rows(const CsiSample& sample, std::size_t width) {
  Matrix m(sample.traces.size(), width, 0.0);
  for (std::size_t r = 0; r < sample.traces.size(); ++r) {
    const auto& amps = sample.traces[r].amplitudes;
    std::copy_n(amps.begin(), std::min(width, amps.size()), m.row(r).begin());
  }
  return m;
}

// ---------------------------------------------------------------------------
// Partitioning

struct SplitIndices {
  std::vector<std::size_t> train;
  std::vector<std::size_t> test;
};

/// Seeded, non-stratified split; test size is round(n * test_fraction).
inline SplitIndices split_indices(std::size_t n_rows, double test_fraction, std::uint64_t seed) {
  if (!(test_fraction > 0.0 && test_fraction < 1.0))
    throw Error(Errc::BadFraction, "test fraction must lie in (0, 1)");
  if (n_rows < 2) throw Error(Errc::TooFewRows, "need at least 2 rows to split");
  const auto n_test = static_cast<std::size_t>(std::llround(static_cast<double>(n_rows) * test_fraction));
  if (n_test == 0 || n_test == n_rows)
    throw Error(Errc::BadFraction, "test fraction leaves an empty partition");

  std::vector<std::size_t> order(n_rows);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::mt19937_64 rng(seed);
  std::shuffle(order.begin(), order.end(), rng);

  SplitIndices out;
  out.test.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n_test));
  out.train.assign(order.begin() + static_cast<std::ptrdiff_t>(n_test), order.end());
  return out;
}

inline std::pair<DesignMatrix, DesignMatrix> train_test_split(const DesignMatrix& dm,
                                                              double test_fraction,
                                                              std::uint64_t seed) {
  auto idx = split_indices(dm.size(), test_fraction, seed);
  return {dm.subset(idx.train), dm.subset(idx.test)};
}

struct FoldPlan {
  int k = 0;
  std::vector<int> assignments;
  std::uint64_t seed = 0;

  std::vector<std::size_t> test_rows(int fold) const {
    std::vector<std::size_t> rows;
    for (std::size_t i = 0; i < assignments.size(); ++i)
      if (assignments[i] == fold) rows.push_back(i);
    return rows;
  }

  std::vector<std::size_t> train_rows(int fold) const {
    std::vector<std::size_t> rows;
    for (std::size_t i = 0; i < assignments.size(); ++i)
      if (assignments[i] != fold) rows.push_back(i);
    return rows;
  }

  std::vector<std::size_t> fold_sizes() const {
    std::vector<std::size_t> sizes(static_cast<std::size_t>(k), 0);
    for (int f : assignments) ++sizes[static_cast<std::size_t>(f)];
    return sizes;
  }
};

/// Shuffled round-robin assignment, so fold sizes differ by at most one.
inline FoldPlan kfold_partition(std::size_t n_rows, int k, std::uint64_t seed) {
  if (k < 2) throw Error(Errc::BadConfig, "k must be at least 2");
  if (n_rows < static_cast<std::size_t>(k))
    throw Error(Errc::TooFewRows, std::to_string(n_rows) + " rows cannot fill " +
                                      std::to_string(k) + " folds");
  std::vector<std::size_t> order(n_rows);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::mt19937_64 rng(seed);
  std::shuffle(order.begin(), order.end(), rng);

  FoldPlan plan{k, std::vector<int>(n_rows, 0), seed};
  for (std::size_t pos = 0; pos < n_rows; ++pos)
    plan.assignments[order[pos]] = static_cast<int>(pos % static_cast<std::size_t>(k));
  return plan;
}

// ---------------------------------------------------------------------------
// External feature matrices (pre-rectangular, arbitrary label vocabulary)

inline DesignMatrix parse_feature_matrix(std::string_view data_text, std::string_view labels_text) {
  const auto data_lines = detail::split_lines(data_text);
  std::vector<std::string> tokens;
  for (auto line : detail::split_lines(labels_text)) {
    auto first = line.find_first_not_of(" \t");
    if (first == std::string_view::npos) {
      tokens.emplace_back();
      continue;
    }
    auto last = line.find_last_not_of(" \t");
    tokens.emplace_back(line.substr(first, last - first + 1));
  }
  if (tokens.size() != data_lines.size())
    throw Error(Errc::RowCountMismatch, std::to_string(data_lines.size()) + " data rows vs " +
                                            std::to_string(tokens.size()) + " labels");
  if (data_lines.empty()) throw Error(Errc::EmptyInput, "feature matrix has no rows");
  for (const auto& t : tokens)
    if (t.empty()) throw Error(Errc::MalformedCsv, "blank label line");

  std::vector<std::vector<double>> rows;
  rows.reserve(data_lines.size());
  for (std::size_t r = 0; r < data_lines.size(); ++r) {
    std::vector<double> row;
    std::string_view line = data_lines[r];
    std::size_t pos = 0;
    while (pos < line.size()) {
      pos = line.find_first_not_of(" \t,", pos);
      if (pos == std::string_view::npos) break;
      auto end = line.find_first_of(" \t,", pos);
      if (end == std::string_view::npos) end = line.size();
      row.push_back(parse_finite(line.substr(pos, end - pos)));
      pos = end;
    }
    if (row.empty()) throw Error(Errc::MalformedCsv, "empty data row " + std::to_string(r));
    if (!rows.empty() && row.size() != rows.front().size())
      throw Error(Errc::RaggedRows, "row " + std::to_string(r) + " has width " +
                                        std::to_string(row.size()) + ", expected " +
                                        std::to_string(rows.front().size()));
    rows.push_back(std::move(row));
  }

  DesignMatrix dm;
  dm.dictionary = LabelDictionary(tokens);
  dm.rows = Matrix::from_rows(rows);
  dm.labels.reserve(tokens.size());
  for (const auto& t : tokens) dm.labels.push_back(dm.dictionary.id(t));
  return dm;
}

inline DesignMatrix ingest_feature_matrix(const std::filesystem::path& data_path,
                                          const std::filesystem::path& labels_path) {
  return parse_feature_matrix(detail::read_file(data_path), detail::read_file(labels_path));
}

/// Canonical text of a design matrix ("label,v,v,...\n" per row); this is
/// the byte stream fingerprinted into saved models.
inline std::string canonical_serialization(const DesignMatrix& dm) {
  std::string out;
  for (std::size_t r = 0; r < dm.size(); ++r) {
    out += dm.dictionary.name(dm.labels[r]);
    for (double v : dm.rows.row(r)) {
      out += ',';
      out += format_double(v);
    }
    out += '\n';
  }
  return out;
}

}  // namespace csiact
