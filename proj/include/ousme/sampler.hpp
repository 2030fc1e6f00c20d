#pragma once

// Exact simulation of a stationary Gaussian sequence by circulant embedding,
// and the map to the non-stationary path X_t = Z_t - e^{-rate t} Z_0.

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <functional>
#include <iomanip>
#include <istream>
#include <limits>
#include <memory>
#include <mutex>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include <fftw3.h>

#include "ousme/covariance.hpp"
#include "ousme/errors.hpp"
#include "ousme/parallel.hpp"
#include "ousme/rng.hpp"

namespace ousme {

struct SamplingGrid {
  std::size_t n = 1;
  double delta = 1.0;

  SamplingGrid() = default;
  SamplingGrid(std::size_t n_, double delta_) : n(n_), delta(delta_) {
    if (n < 1) throw DomainError("sampling grid needs n >= 1");
    if (!(delta > 0.0) || !std::isfinite(delta))
      throw DomainError("sampling grid needs a finite delta > 0");
  }
  double Tn() const { return static_cast<double>(n) * delta; }
};

/// rho(k delta) for k = 0..n-1. `extension` evaluates lags k >= n (in index
/// units) for larger circulant embeddings; when empty the sequence is padded
/// with zeros.
struct CovSequence {
  SamplingGrid grid;
  std::vector<double> values;
  std::function<double(std::size_t)> extension;

  double at(std::size_t k) const {
    if (k < values.size()) return values[k];
    return extension ? extension(k) : 0.0;
  }
};

/// Custom models are indexed by lag index and ignore delta.
inline CovSequence build_cov_sequence(const StationaryCovariance& cov, const SamplingGrid& grid) {
  CovSequence seq;
  seq.grid = grid;
  seq.values.resize(grid.n);
  if (cov.params().kind == ModelKind::Custom) {
    const auto& s = cov.params().sequence;
    for (std::size_t k = 0; k < grid.n; ++k) seq.values[k] = k < s.size() ? s[k] : 0.0;
    return seq;  // zero padding beyond n
  }
  seq.values[0] = cov.rho0();
  for (std::size_t k = 1; k < grid.n; ++k) seq.values[k] = cov(static_cast<double>(k) * grid.delta);
  const double delta = grid.delta;
  seq.extension = [cov, delta](std::size_t k) { return cov(static_cast<double>(k) * delta); };
  return seq;
}

inline CovSequence make_cov_sequence(std::vector<double> values, double delta = 1.0) {
  if (values.empty()) throw DomainError("covariance sequence is empty");
  CovSequence seq;
  seq.grid = SamplingGrid(values.size(), delta);
  seq.values = std::move(values);
  return seq;
}

enum class PathKind { Z, X, S };

inline const char* path_kind_name(PathKind k) {
  switch (k) {
    case PathKind::Z: return "Z";
    case PathKind::X: return "X";
    case PathKind::S: return "S";
  }
  return "?";
}

/// reps x n paths, row-major. Replication i was drawn from substream
/// (stream_key, i) with stream_key = derive_stream_key(root_seed, stream_tag).
struct PathBatch {
  SamplingGrid grid;
  std::size_t reps = 0;
  std::vector<double> data;
  std::uint64_t root_seed = 0;
  std::uint64_t stream_tag = 0;
  PathKind kind = PathKind::Z;

  const double* row(std::size_t i) const { return data.data() + i * grid.n; }
  double* row(std::size_t i) { return data.data() + i * grid.n; }
};

// ---------------------------------------------------------------------------
// Circulant embedding

struct EmbeddingReport {
  std::size_t fft_length = 0;
  int doublings = 0;
  double min_eigenvalue = 0.0;
  double clipped_mass = 0.0;      // sum of |negative eigenvalues|
  double clipped_fraction = 0.0;  // clipped_mass / sum of positive eigenvalues
};

namespace detail {

inline std::mutex& fftw_planner_mutex() {
  static std::mutex m;
  return m;
}

struct FftwFree {
  void operator()(void* p) const { fftw_free(p); }
};

}  // namespace detail

class CirculantSampler {
 public:
  static constexpr int kMaxDoublings = 4;
  static constexpr double kNegativeTolerance = 1e-8;
  static constexpr double kMaxClippedFraction = 1e-4;

  explicit CirculantSampler(const CovSequence& seq);

  std::size_t n() const { return n_; }
  std::size_t fft_length() const { return m_; }
  const EmbeddingReport& report() const { return report_; }

  /// Per-worker FFT plan and buffers.
  class Workspace {
   public:
    explicit Workspace(std::size_t m);
    ~Workspace();
    Workspace(Workspace&& other) noexcept;
    Workspace(const Workspace&) = delete;
    Workspace& operator=(const Workspace&) = delete;
    Workspace& operator=(Workspace&&) = delete;

   private:
    friend class CirculantSampler;
    std::size_t m_ = 0;
    std::unique_ptr<fftw_complex, detail::FftwFree> spectrum_;
    std::unique_ptr<double, detail::FftwFree> out_;
    fftw_plan plan_ = nullptr;
  };

  Workspace make_workspace() const { return Workspace(m_); }

  /// Writes the n values of replication `rep` of stream `key` into out.
  void sample(Workspace& ws, std::uint64_t key, std::uint64_t rep, double* out) const;

 private:
  std::size_t n_;
  std::size_t m_ = 0;
  std::vector<double> amp_;  // per-frequency standard deviations, size m/2 + 1
  EmbeddingReport report_;
};

inline CirculantSampler::Workspace::Workspace(std::size_t m) : m_(m) {
  spectrum_.reset(static_cast<fftw_complex*>(fftw_malloc(sizeof(fftw_complex) * (m / 2 + 1))));
  out_.reset(static_cast<double*>(fftw_malloc(sizeof(double) * m)));
  if (!spectrum_ || !out_) throw std::bad_alloc();
  std::lock_guard lock(detail::fftw_planner_mutex());
  plan_ = fftw_plan_dft_c2r_1d(static_cast<int>(m), spectrum_.get(), out_.get(), FFTW_ESTIMATE);
  if (!plan_) throw EmbeddingError("FFTW could not create a plan of length " + std::to_string(m));
}

inline CirculantSampler::Workspace::Workspace(Workspace&& other) noexcept
    : m_(other.m_), spectrum_(std::move(other.spectrum_)), out_(std::move(other.out_)), plan_(other.plan_) {
  other.plan_ = nullptr;
}

inline CirculantSampler::Workspace::~Workspace() {
  if (plan_) {
    std::lock_guard lock(detail::fftw_planner_mutex());
    fftw_destroy_plan(plan_);
  }
}

inline CirculantSampler::CirculantSampler(const CovSequence& seq) : n_(seq.grid.n) {
  if (seq.values.empty() || !(seq.values[0] > 0.0))
    throw DomainError("circulant embedding needs rho(0) > 0");
  const double rho0 = seq.values[0];

  std::size_t m = std::bit_ceil(std::max<std::size_t>(2 * (n_ - 1), 2));
  std::vector<double> lambda;
  for (int doubling = 0;; ++doubling) {
    const std::size_t half = m / 2;
    std::unique_ptr<double, detail::FftwFree> row(static_cast<double*>(fftw_malloc(sizeof(double) * m)));
    std::unique_ptr<fftw_complex, detail::FftwFree> spectrum(
        static_cast<fftw_complex*>(fftw_malloc(sizeof(fftw_complex) * (half + 1))));
    if (!row || !spectrum) throw std::bad_alloc();
    for (std::size_t k = 0; k <= half; ++k) row.get()[k] = seq.at(k);
    for (std::size_t k = half + 1; k < m; ++k) row.get()[k] = row.get()[m - k];
    {
      std::lock_guard lock(detail::fftw_planner_mutex());
      fftw_plan p = fftw_plan_dft_r2c_1d(static_cast<int>(m), row.get(), spectrum.get(), FFTW_ESTIMATE);
      if (!p) throw EmbeddingError("FFTW could not create a plan of length " + std::to_string(m));
      fftw_execute(p);
      fftw_destroy_plan(p);
    }
    lambda.assign(half + 1, 0.0);
    for (std::size_t k = 0; k <= half; ++k) lambda[k] = spectrum.get()[k][0];
    const double min_l = *std::min_element(lambda.begin(), lambda.end());
    report_.fft_length = m;
    report_.doublings = doubling;
    report_.min_eigenvalue = min_l;
    if (min_l >= -kNegativeTolerance * rho0 || doubling == kMaxDoublings) break;
    m *= 2;
  }
  m_ = m;

  // Full-spectrum sums: interior frequencies appear twice.
  double positive = 0.0;
  double negative = 0.0;
  for (std::size_t k = 0; k < lambda.size(); ++k) {
    const double w = (k == 0 || k == m / 2) ? 1.0 : 2.0;
    (lambda[k] >= 0.0 ? positive : negative) += w * std::abs(lambda[k]);
  }
  report_.clipped_mass = negative;
  report_.clipped_fraction = positive > 0.0 ? negative / positive : 1.0;
  if (report_.clipped_fraction > kMaxClippedFraction) {
    std::ostringstream msg;
    msg << "circulant embedding failed: length " << m << " after " << report_.doublings
        << " doublings, min eigenvalue " << report_.min_eigenvalue << ", clipped fraction "
        << report_.clipped_fraction;
    throw EmbeddingError(msg.str());
  }

  amp_.resize(lambda.size());
  const double md = static_cast<double>(m);
  for (std::size_t k = 0; k < lambda.size(); ++k) {
    const double l = std::max(lambda[k], 0.0);
    const bool real_bin = (k == 0 || k == m / 2);
    amp_[k] = std::sqrt(l / (real_bin ? md : 2.0 * md));
  }
}

inline void CirculantSampler::sample(Workspace& ws, std::uint64_t key, std::uint64_t rep,
                                     double* out) const {
  if (ws.m_ != m_) throw EmbeddingError("workspace length does not match the sampler");
  Substream rng(key, rep);
  const std::size_t half = m_ / 2;
  fftw_complex* spectrum = ws.spectrum_.get();
  spectrum[0][0] = amp_[0] * rng.normal();
  spectrum[0][1] = 0.0;
  for (std::size_t k = 1; k < half; ++k) {
    spectrum[k][0] = amp_[k] * rng.normal();
    spectrum[k][1] = amp_[k] * rng.normal();
  }
  spectrum[half][0] = amp_[half] * rng.normal();
  spectrum[half][1] = 0.0;
  fftw_execute_dft_c2r(ws.plan_, spectrum, ws.out_.get());
  std::copy(ws.out_.get(), ws.out_.get() + n_, out);
}

/// Draws `reps` replications of Z. Deterministic in (seed, stream_tag, rep)
/// and independent of `threads`.
inline PathBatch circulant_sample(const CovSequence& seq, std::size_t reps, std::uint64_t seed,
                                  unsigned threads = 1, std::uint64_t stream_tag = 0,
                                  EmbeddingReport* report = nullptr) {
  if (reps < 1) throw DomainError("circulant_sample needs reps >= 1");
  const CirculantSampler sampler(seq);
  if (report) *report = sampler.report();
  PathBatch batch;
  batch.grid = seq.grid;
  batch.reps = reps;
  batch.root_seed = seed;
  batch.stream_tag = stream_tag;
  batch.kind = PathKind::Z;
  batch.data.resize(reps * seq.grid.n);
  const std::uint64_t key = derive_stream_key(seed, stream_tag);
  parallel_for(
      reps, threads, [&] { return sampler.make_workspace(); },
      [&](CirculantSampler::Workspace& ws, std::size_t i) {
        sampler.sample(ws, key, i, batch.row(i));
      });
  return batch;
}

/// In-place X_k = Z_k - e^{-rate t_k} Z_0 on one path.
inline void z_to_x_path(double* path, std::size_t n, double delta, double rate) {
  const double z0 = path[0];
  for (std::size_t k = 1; k < n; ++k) path[k] -= std::exp(-rate * static_cast<double>(k) * delta) * z0;
  path[0] = 0.0;
}

/// X (fOU1) or S (fOU2) from a batch of Z.
inline PathBatch z_to_x(const PathBatch& batch, double rate, PathKind kind = PathKind::X) {
  if (batch.kind != PathKind::Z) throw DomainError("z_to_x expects a batch of kind Z");
  if (!(rate > 0.0)) throw DomainError("z_to_x needs rate > 0");
  if (kind == PathKind::Z) throw DomainError("z_to_x output kind must be X or S");
  PathBatch out = batch;
  out.kind = kind;
  for (std::size_t i = 0; i < out.reps; ++i) z_to_x_path(out.row(i), out.grid.n, out.grid.delta, rate);
  return out;
}

// ---------------------------------------------------------------------------
// Export

namespace detail {

inline void put_le(std::ostream& os, std::uint64_t v, int bytes) {
  char buf[8];
  for (int b = 0; b < bytes; ++b) buf[b] = static_cast<char>((v >> (8 * b)) & 0xFF);
  os.write(buf, bytes);
}

inline std::uint64_t get_le(std::istream& is, int bytes) {
  unsigned char buf[8] = {};
  if (!is.read(reinterpret_cast<char*>(buf), bytes)) throw IoError("truncated path batch");
  std::uint64_t v = 0;
  for (int b = 0; b < bytes; ++b) v |= std::uint64_t{buf[b]} << (8 * b);
  return v;
}

}  // namespace detail

/// Header "OUSME1", u32 n, u32 reps, f64 delta; then row-major f64 data,
/// all little-endian.
inline void write_path_batch_binary(std::ostream& os, const PathBatch& batch) {
  if (batch.grid.n > 0xFFFFFFFFull || batch.reps > 0xFFFFFFFFull)
    throw IoError("path batch too large for the binary layout");
  os.write("OUSME1", 6);
  detail::put_le(os, batch.grid.n, 4);
  detail::put_le(os, batch.reps, 4);
  detail::put_le(os, std::bit_cast<std::uint64_t>(batch.grid.delta), 8);
  for (double v : batch.data) detail::put_le(os, std::bit_cast<std::uint64_t>(v), 8);
  if (!os) throw IoError("failed writing path batch");
}

inline PathBatch read_path_batch_binary(std::istream& is) {
  char magic[6];
  if (!is.read(magic, 6) || std::memcmp(magic, "OUSME1", 6) != 0)
    throw IoError("not an OUSME1 path batch");
  PathBatch batch;
  const auto n = static_cast<std::size_t>(detail::get_le(is, 4));
  batch.reps = static_cast<std::size_t>(detail::get_le(is, 4));
  batch.grid = SamplingGrid(n, std::bit_cast<double>(detail::get_le(is, 8)));
  batch.data.resize(n * batch.reps);
  for (double& v : batch.data) v = std::bit_cast<double>(detail::get_le(is, 8));
  return batch;
}

/// One row per replication: rep, then t_0..t_{n-1}.
inline void write_path_batch_csv(std::ostream& os, const PathBatch& batch) {
  os << "rep";
  for (std::size_t k = 0; k < batch.grid.n; ++k) os << ",t" << k;
  os << '\n' << std::setprecision(17);
  for (std::size_t i = 0; i < batch.reps; ++i) {
    os << i;
    for (std::size_t k = 0; k < batch.grid.n; ++k) os << ',' << batch.row(i)[k];
    os << '\n';
  }
  if (!os) throw IoError("failed writing path batch CSV");
}

inline void write_covariance_csv(std::ostream& os, const CovSequence& seq) {
  os << "lag_index,lag_time,rho\n" << std::setprecision(17);
  for (std::size_t k = 0; k < seq.values.size(); ++k)
    os << k << ',' << static_cast<double>(k) * seq.grid.delta << ',' << seq.values[k] << '\n';
  if (!os) throw IoError("failed writing covariance CSV");
}

}  // namespace ousme
