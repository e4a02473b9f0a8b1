#ifndef OSDCA_DATA_HPP
#define OSDCA_DATA_HPP

#include "osdca/core.hpp"
#include "osdca/random.hpp"
#include "osdca/schedules.hpp"

#include <algorithm>
#include <bit>
#include <cerrno>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <fstream>
#include <istream>
#include <memory>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

namespace osdca {

struct provenance {
  /// File path or generator description.
  std::string source;
  bool normalized = false;
  std::optional<std::uint64_t> shuffle_seed;
};

/// An immutable-by-convention collection of equally sized samples.
struct dataset {
  std::vector<vector> samples;
  index_t dimension = 0;
  provenance origin;
  /// Only filled when parsing with keep_labels.
  std::vector<double> labels;

  std::size_t size() const { return samples.size(); }
  bool empty() const { return samples.empty(); }
  sample_span view() const { return {samples.data(), samples.size()}; }
};

// ---------------------------------------------------------------------------
// LIBSVM text format: "<label> <index>:<value> ..." per line, 1-based
// strictly increasing indices, missing indices are zero.

namespace detail {
inline std::string_view trim(std::string_view s) {
  const auto ws = [](char c) { return c == ' ' || c == '\t' || c == '\r' || c == '\n'; };
  while (!s.empty() && ws(s.front())) s.remove_prefix(1);
  while (!s.empty() && ws(s.back())) s.remove_suffix(1);
  return s;
}

inline bool parse_double(std::string_view s, double& out) {
  // strtod accepts the same decimal and scientific forms as the LIBSVM tools.
  std::string buf(s);
  char* end = nullptr;
  errno = 0;
  out = std::strtod(buf.c_str(), &end);
  return !buf.empty() && end == buf.c_str() + buf.size() && std::isfinite(out);
}

[[noreturn]] inline void parse_fail(std::size_t line, const std::string& what) {
  throw data_error("libsvm line " + std::to_string(line) + ": " + what);
}
}  // namespace detail

/// Parse LIBSVM text. Labels are dropped unless `keep_labels` is set. With a
/// dimension hint, indices above it are rejected and shorter rows are
/// zero-padded to the hint.
inline dataset parse_libsvm(std::istream& in, std::optional<index_t> dimension_hint = std::nullopt,
                            bool keep_labels = false) {
  struct sparse_row {
    std::vector<std::pair<index_t, double>> entries;
  };
  std::vector<sparse_row> rows;
  std::vector<double> labels;
  index_t max_index = 0;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    std::string_view rest = detail::trim(line);
    if (rest.empty()) continue;
    const auto next_token = [&rest]() {
      std::size_t end = 0;
      while (end < rest.size() && rest[end] != ' ' && rest[end] != '\t') ++end;
      std::string_view tok = rest.substr(0, end);
      rest = detail::trim(rest.substr(end));
      return tok;
    };
    std::string_view label_tok = next_token();
    double label = 0.0;
    if (label_tok.find(':') != std::string_view::npos || !detail::parse_double(label_tok, label))
      detail::parse_fail(line_no, "malformed label '" + std::string(label_tok) + "'");
    sparse_row row;
    index_t last = 0;
    while (!rest.empty()) {
      std::string_view tok = next_token();
      const auto colon = tok.find(':');
      if (colon == std::string_view::npos) detail::parse_fail(line_no, "malformed token '" + std::string(tok) + "'");
      long long idx = 0;
      const auto idx_sv = tok.substr(0, colon);
      auto [ptr, ec] = std::from_chars(idx_sv.data(), idx_sv.data() + idx_sv.size(), idx);
      if (ec != std::errc() || ptr != idx_sv.data() + idx_sv.size())
        detail::parse_fail(line_no, "malformed index in '" + std::string(tok) + "'");
      if (idx < 1) detail::parse_fail(line_no, "index " + std::to_string(idx) + " < 1");
      if (idx <= last) detail::parse_fail(line_no, "indices not strictly increasing at " + std::to_string(idx));
      if (dimension_hint && idx > *dimension_hint)
        detail::parse_fail(line_no, "index " + std::to_string(idx) + " exceeds dimension " +
                                        std::to_string(*dimension_hint));
      double value = 0.0;
      if (!detail::parse_double(tok.substr(colon + 1), value))
        detail::parse_fail(line_no, "malformed value in '" + std::string(tok) + "'");
      last = static_cast<index_t>(idx);
      row.entries.emplace_back(last, value);
    }
    max_index = std::max(max_index, last);
    rows.push_back(std::move(row));
    labels.push_back(label);
  }
  if (rows.empty()) throw data_error("libsvm: no samples");
  dataset out;
  out.dimension = dimension_hint ? *dimension_hint : max_index;
  if (out.dimension < 1) throw data_error("libsvm: no features");
  out.samples.reserve(rows.size());
  for (const auto& r : rows) {
    vector z = vector::Zero(out.dimension);
    for (auto [i, v] : r.entries) z[i - 1] = v;
    out.samples.push_back(std::move(z));
  }
  if (keep_labels) out.labels = std::move(labels);
  return out;
}

inline dataset load_libsvm(const std::string& path, std::optional<index_t> dimension_hint = std::nullopt,
                           bool keep_labels = false) {
  std::ifstream in(path);
  if (!in) throw data_error("cannot open " + path);
  dataset out = parse_libsvm(in, dimension_hint, keep_labels);
  out.origin.source = path;
  return out;
}

/// Write LIBSVM text with 17 significant digits (exact round trip). Zero
/// entries are omitted; the label is 0 unless the dataset carries labels.
inline void write_libsvm(std::ostream& out, const dataset& ds) {
  char buf[64];
  for (std::size_t i = 0; i < ds.size(); ++i) {
    std::snprintf(buf, sizeof buf, "%.17g", ds.labels.empty() ? 0.0 : ds.labels[i]);
    out << buf;
    const vector& z = ds.samples[i];
    for (index_t j = 0; j < z.size(); ++j) {
      if (z[j] == 0.0) continue;
      std::snprintf(buf, sizeof buf, " %lld:%.17g", static_cast<long long>(j + 1), z[j]);
      out << buf;
    }
    out << '\n';
  }
}

// ---------------------------------------------------------------------------
// Binary cache: little-endian header
//   magic "OSDCADS\0" (8 bytes), version u32, dimension u64, count u64
// followed by count * dimension row-major IEEE-754 doubles.

inline constexpr char cache_magic[8] = {'O', 'S', 'D', 'C', 'A', 'D', 'S', '\0'};
inline constexpr std::uint32_t cache_version = 1;

namespace detail {
template <class T>
void put_le(std::ostream& out, T v) {
  static_assert(std::endian::native == std::endian::little, "big-endian hosts are not supported");
  out.write(reinterpret_cast<const char*>(&v), sizeof v);
}
template <class T>
T get_le(std::istream& in) {
  T v{};
  in.read(reinterpret_cast<char*>(&v), sizeof v);
  if (!in) throw data_error("binary cache: truncated");
  return v;
}
}  // namespace detail

inline void write_cache(std::ostream& out, const dataset& ds) {
  out.write(cache_magic, sizeof cache_magic);
  detail::put_le<std::uint32_t>(out, cache_version);
  detail::put_le<std::uint64_t>(out, static_cast<std::uint64_t>(ds.dimension));
  detail::put_le<std::uint64_t>(out, ds.size());
  for (const auto& z : ds.samples) {
    require_dimension(z.size(), ds.dimension, "write_cache");
    for (index_t j = 0; j < z.size(); ++j) detail::put_le<double>(out, z[j]);
  }
}

inline dataset read_cache(std::istream& in) {
  char magic[8];
  in.read(magic, sizeof magic);
  if (!in || std::memcmp(magic, cache_magic, sizeof magic) != 0) throw data_error("binary cache: bad magic");
  if (detail::get_le<std::uint32_t>(in) != cache_version) throw data_error("binary cache: unsupported version");
  dataset out;
  out.dimension = static_cast<index_t>(detail::get_le<std::uint64_t>(in));
  const auto count = detail::get_le<std::uint64_t>(in);
  out.samples.reserve(count);
  for (std::uint64_t i = 0; i < count; ++i) {
    vector z(out.dimension);
    for (index_t j = 0; j < out.dimension; ++j) z[j] = detail::get_le<double>(in);
    out.samples.push_back(std::move(z));
  }
  return out;
}

/// Load a dataset from LIBSVM text, or from the binary cache when the file
/// starts with the cache magic.
inline dataset load_dataset(const std::string& path, std::optional<index_t> dimension_hint = std::nullopt) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw data_error("cannot open " + path);
  char magic[8] = {};
  in.read(magic, sizeof magic);
  const bool is_cache = in.gcount() == sizeof magic && std::memcmp(magic, cache_magic, sizeof magic) == 0;
  in.clear();
  in.seekg(0);
  dataset out = is_cache ? read_cache(in) : parse_libsvm(in, dimension_hint);
  out.origin.source = path;
  return out;
}

// ---------------------------------------------------------------------------

/// Scale every sample to unit Euclidean norm.
inline dataset normalize_unit(dataset ds) {
  for (std::size_t i = 0; i < ds.size(); ++i) {
    const double n = ds.samples[i].norm();
    if (n == 0.0) throw data_error("normalize_unit: sample " + std::to_string(i) + " has zero norm");
    ds.samples[i] /= n;
  }
  ds.origin.normalized = true;
  return ds;
}

/// Fisher-Yates shuffle with the library PRNG; the permutation depends only on the seed.
inline dataset shuffle(dataset ds, std::uint64_t seed) {
  const auto perm = permutation(ds.size(), seed);
  std::vector<vector> out;
  out.reserve(ds.size());
  for (auto i : perm) out.push_back(std::move(ds.samples[i]));
  ds.samples = std::move(out);
  if (!ds.labels.empty()) {
    std::vector<double> labels;
    labels.reserve(perm.size());
    for (auto i : perm) labels.push_back(ds.labels[i]);
    ds.labels = std::move(labels);
  }
  ds.origin.shuffle_seed = seed;
  return ds;
}

// ---------------------------------------------------------------------------
// Sample streams

/// Pull-based source of samples. `take(n)` returns up to n fresh samples; the
/// returned view stays valid until the next call. An empty view means the
/// source is exhausted. Sources are single-consumer.
class sample_source {
 public:
  virtual ~sample_source() = default;
  virtual sample_span take(std::size_t n) = 0;
  virtual std::size_t consumed() const = 0;
  /// Human-readable sampling mode, recorded in traces.
  virtual std::string mode() const = 0;
};

/// Sequential one-pass consumption of a (shuffled) finite dataset; no sample
/// is delivered twice.
class one_pass_source final : public sample_source {
 public:
  explicit one_pass_source(const dataset& ds) : data_(ds.view()) {}
  explicit one_pass_source(sample_span data) : data_(data) {}

  sample_span take(std::size_t n) override {
    const std::size_t k = std::min(n, data_.size() - pos_);
    sample_span out = data_.subspan(pos_, k);
    pos_ += k;
    return out;
  }
  std::size_t consumed() const override { return pos_; }
  std::size_t remaining() const { return data_.size() - pos_; }
  std::string mode() const override { return "one-pass"; }

 private:
  sample_span data_;
  std::size_t pos_ = 0;
};

/// Draws with replacement from a finite dataset (true i.i.d. sampling from the
/// empirical distribution). Never exhausts; bound the run with a budget.
class iid_source final : public sample_source {
 public:
  iid_source(const dataset& ds, std::uint64_t seed) : data_(ds.view()), rng_(seed) {
    if (data_.empty()) throw data_error("iid_source: empty dataset");
  }

  sample_span take(std::size_t n) override {
    buffer_.clear();
    buffer_.reserve(n);
    for (std::size_t i = 0; i < n; ++i) buffer_.push_back(data_[uniform_below(rng_, data_.size())]);
    consumed_ += n;
    return {buffer_.data(), buffer_.size()};
  }
  std::size_t consumed() const override { return consumed_; }
  std::string mode() const override { return "iid-with-replacement"; }

 private:
  sample_span data_;
  engine rng_;
  std::vector<vector> buffer_;
  std::size_t consumed_ = 0;
};

/// Batches of size min(n_k, remaining) for k = 1, 2, ... over one pass of a dataset.
class batch_stream {
 public:
  batch_stream(const dataset& ds, sample_schedule schedule) : source_(ds), schedule_(schedule) {
    if (ds.empty()) throw data_error("stream_batches: empty dataset");
  }

  /// Next batch, or an empty view once the dataset is consumed.
  sample_span next() {
    if (source_.remaining() == 0) return {};
    return source_.take(schedule_.size(k_++));
  }
  std::size_t consumed() const { return source_.consumed(); }

 private:
  one_pass_source source_;
  sample_schedule schedule_;
  std::uint64_t k_ = 1;
};

inline batch_stream stream_batches(const dataset& ds, const sample_schedule& schedule) {
  return batch_stream(ds, schedule);
}

// ---------------------------------------------------------------------------
// Synthetic Gaussian data

/// Covariance Q diag(eigenvalues) Q^T with Q a seeded random orthogonal basis.
/// Planting the spectrum keeps the matrix positive definite and makes the top
/// eigenvector known.
struct covariance_spec {
  std::vector<double> eigenvalues;
  std::uint64_t basis_seed = 0;

  index_t dimension() const { return static_cast<index_t>(eigenvalues.size()); }

  void validate() const {
    if (eigenvalues.empty()) throw error("covariance_spec: no eigenvalues");
    for (double e : eigenvalues)
      if (!(e > 0.0) || !std::isfinite(e)) throw error("covariance_spec: not positive definite");
  }

  /// Haar-distributed orthogonal matrix from the QR factorization of a
  /// Gaussian matrix, with column signs fixed by diag(R) > 0.
  matrix basis() const {
    const index_t m = dimension();
    normal_source normal(basis_seed);
    matrix g(m, m);
    for (index_t j = 0; j < m; ++j)
      for (index_t i = 0; i < m; ++i) g(i, j) = normal();
    Eigen::HouseholderQR<matrix> qr(g);
    matrix q = qr.householderQ() * matrix::Identity(m, m);
    const matrix r = qr.matrixQR().triangularView<Eigen::Upper>();
    for (index_t j = 0; j < m; ++j)
      if (r(j, j) < 0.0) q.col(j) = -q.col(j);
    return q;
  }

  /// Column of the basis carrying the largest eigenvalue.
  vector top_direction() const {
    validate();
    const auto it = std::max_element(eigenvalues.begin(), eigenvalues.end());
    return basis().col(std::distance(eigenvalues.begin(), it));
  }

  /// Q diag(sqrt(eigenvalues)).
  matrix factor() const {
    validate();
    matrix f = basis();
    for (index_t j = 0; j < dimension(); ++j) f.col(j) *= std::sqrt(eigenvalues[j]);
    return f;
  }
};

/// `count` i.i.d. N(0, Sigma) draws, unit-normalized.
inline dataset gen_gaussian(index_t dimension, const covariance_spec& cov, std::size_t count,
                            std::uint64_t seed) {
  if (count == 0) throw data_error("gen_gaussian: empty dataset requested");
  require_dimension(cov.dimension(), dimension, "gen_gaussian");
  const matrix f = cov.factor();
  normal_source normal(seed);
  dataset out;
  out.dimension = dimension;
  out.samples.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    vector z = f * normal.draw(dimension);
    double n = z.norm();
    while (n == 0.0) {
      z = f * normal.draw(dimension);
      n = z.norm();
    }
    out.samples.push_back(z / n);
  }
  out.origin.source = "gaussian(dim=" + std::to_string(dimension) + ", count=" + std::to_string(count) +
                      ", seed=" + std::to_string(seed) + ", basis_seed=" + std::to_string(cov.basis_seed) + ")";
  out.origin.normalized = true;
  return out;
}

/// Streaming Gaussian source (no storage): draws fresh normalized samples on
/// demand, up to `total`.
class gaussian_source final : public sample_source {
 public:
  gaussian_source(const covariance_spec& cov, std::size_t total, std::uint64_t seed)
      : factor_(cov.factor()), normal_(seed), total_(total) {}

  sample_span take(std::size_t n) override {
    buffer_.clear();
    const std::size_t k = std::min(n, total_ - consumed_);
    for (std::size_t i = 0; i < k; ++i) {
      vector z = factor_ * normal_.draw(factor_.rows());
      buffer_.push_back(z / z.norm());
    }
    consumed_ += k;
    return {buffer_.data(), buffer_.size()};
  }
  std::size_t consumed() const override { return consumed_; }
  std::string mode() const override { return "gaussian-stream"; }

 private:
  matrix factor_;
  normal_source normal_;
  std::size_t total_;
  std::size_t consumed_ = 0;
  std::vector<vector> buffer_;
};

/// Training stream whose distribution switches from covariance a to b.
struct shift_stream_spec {
  index_t dimension = 0;
  covariance_spec covariance_a;
  covariance_spec covariance_b;
  /// Training samples 0 .. switch_index-1 come from a, the rest from b.
  std::size_t switch_index = 0;
  std::size_t total = 0;
  std::size_t validation_a_count = 0;
  std::size_t validation_b_count = 0;
  std::uint64_t seed = 0;

  void validate() const {
    covariance_a.validate();
    covariance_b.validate();
    require_dimension(covariance_a.dimension(), dimension, "shift_stream_spec a");
    require_dimension(covariance_b.dimension(), dimension, "shift_stream_spec b");
    if (switch_index == 0 || switch_index > total) throw error("shift_stream_spec: need 0 < switch_index <= total");
    if (validation_a_count == 0 || validation_b_count == 0) throw error("shift_stream_spec: empty validation set");
  }
};

struct shift_data {
  dataset training;
  dataset validation_a;
  dataset validation_b;
  std::size_t switch_index = 0;
};

/// Training = `switch_index` draws from a then `total - switch_index` draws
/// from b. Each part and each validation set uses its own derived seed.
inline shift_data gen_shift_stream(const shift_stream_spec& spec) {
  spec.validate();
  shift_data out;
  out.switch_index = spec.switch_index;
  out.training = gen_gaussian(spec.dimension, spec.covariance_a, spec.switch_index, split_seed(spec.seed, 11));
  if (spec.total > spec.switch_index) {
    dataset b = gen_gaussian(spec.dimension, spec.covariance_b, spec.total - spec.switch_index,
                             split_seed(spec.seed, 12));
    for (auto& z : b.samples) out.training.samples.push_back(std::move(z));
  }
  out.training.origin.source = "shift-stream(seed=" + std::to_string(spec.seed) + ")";
  out.validation_a = gen_gaussian(spec.dimension, spec.covariance_a, spec.validation_a_count,
                                  split_seed(spec.seed, 21));
  out.validation_b = gen_gaussian(spec.dimension, spec.covariance_b, spec.validation_b_count,
                                  split_seed(spec.seed, 22));
  return out;
}

}  // namespace osdca

#endif  // OSDCA_DATA_HPP
