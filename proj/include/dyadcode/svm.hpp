#pragma once

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstddef>
#include <filesystem>
#include <fstream>
#include <limits>
#include <list>
#include <optional>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include "dyadcode/corpus.hpp"
#include "dyadcode/error.hpp"
#include "dyadcode/matrix.hpp"

namespace dyadcode {

// ---------------------------------------------------------------------------
// Kernels
// ---------------------------------------------------------------------------

inline double squared_distance(std::span<const double> x, std::span<const double> z) {
  double acc = 0.0;
  for (std::size_t k = 0; k < x.size(); ++k) {
    const double diff = x[k] - z[k];
    acc += diff * diff;
  }
  return acc;
}

inline double dot(std::span<const double> x, std::span<const double> z) {
  double acc = 0.0;
  for (std::size_t k = 0; k < x.size(); ++k) acc += x[k] * z[k];
  return acc;
}

inline double rbf_kernel(std::span<const double> x, std::span<const double> z, double gamma) {
  if (x.size() != z.size()) throw std::invalid_argument("rbf_kernel: dimension mismatch");
  return std::exp(-gamma * squared_distance(x, z));
}

enum class KernelKind { Rbf, Linear };

struct KernelSpec {
  KernelKind kind = KernelKind::Rbf;
  double gamma = 1.0;  // RBF only

  static KernelSpec rbf(double gamma) {
    if (!(gamma > 0.0) || !std::isfinite(gamma)) throw std::invalid_argument("RBF gamma must be positive");
    return {KernelKind::Rbf, gamma};
  }
  static KernelSpec linear() { return {KernelKind::Linear, 0.0}; }

  double operator()(std::span<const double> x, std::span<const double> z) const {
    if (x.size() != z.size()) throw std::invalid_argument("kernel: dimension mismatch");
    return kind == KernelKind::Rbf ? std::exp(-gamma * squared_distance(x, z)) : dot(x, z);
  }

  friend bool operator==(const KernelSpec&, const KernelSpec&) = default;
};

// "scale" convention: 1 / (d * variance of all entries), or 1/d when the
// entries have no variance.
inline double default_gamma(const Matrix& X) {
  if (X.empty()) throw std::invalid_argument("default_gamma: empty matrix");
  const auto values = X.data();
  double mean = 0.0;
  for (double v : values) mean += v;
  mean /= static_cast<double>(values.size());
  double var = 0.0;
  for (double v : values) var += (v - mean) * (v - mean);
  var /= static_cast<double>(values.size());
  const double d = static_cast<double>(X.cols());
  return var > 0.0 ? 1.0 / (d * var) : 1.0 / d;
}

// ---------------------------------------------------------------------------
// Class weights
// ---------------------------------------------------------------------------

struct WeightScheme {
  double positive = 1.0;
  double negative = 1.0;

  double for_code(Code c) const noexcept { return c == Code::Positive ? positive : negative; }
};

// w_c = n / (2 n_c)
inline WeightScheme balanced_weights(std::size_t n_pos, std::size_t n_neg) {
  if (n_pos == 0 || n_neg == 0) throw DataError("balanced weights need both labels present");
  const double n = static_cast<double>(n_pos + n_neg);
  return {n / (2.0 * static_cast<double>(n_pos)), n / (2.0 * static_cast<double>(n_neg))};
}

inline WeightScheme balanced_weights(std::span<const Code> labels) {
  const auto n_pos = static_cast<std::size_t>(std::count(labels.begin(), labels.end(), Code::Positive));
  return balanced_weights(n_pos, labels.size() - n_pos);
}

// ---------------------------------------------------------------------------
// Kernel row cache
// ---------------------------------------------------------------------------

// Compressed rows plus squared norms. Kernel evaluations against a dense
// row then cost one pass over the non-zeros, which is what makes 1000-column
// TF-IDF features tractable.
struct SparseRows {
  std::vector<std::size_t> offsets{0};
  std::vector<std::size_t> cols;
  std::vector<double> vals;
  std::vector<double> sq_norms;

  static SparseRows from(const Matrix& X) {
    SparseRows s;
    for (std::size_t r = 0; r < X.rows(); ++r) {
      double norm = 0.0;
      const auto row = X.row(r);
      for (std::size_t c = 0; c < row.size(); ++c) {
        if (row[c] != 0.0) {
          s.cols.push_back(c);
          s.vals.push_back(row[c]);
          norm += row[c] * row[c];
        }
      }
      s.offsets.push_back(s.cols.size());
      s.sq_norms.push_back(norm);
    }
    return s;
  }

  double dot(std::size_t r, std::span<const double> dense) const {
    double acc = 0.0;
    for (std::size_t k = offsets[r]; k < offsets[r + 1]; ++k) acc += vals[k] * dense[cols[k]];
    return acc;
  }
};

// Below this fraction of non-zeros the sparse kernel route is used.
inline constexpr double kSparseDensity = 0.25;

inline double density(const Matrix& X) {
  if (X.empty()) return 1.0;
  const auto values = X.data();
  const auto nnz = std::count_if(values.begin(), values.end(), [](double v) { return v != 0.0; });
  return static_cast<double>(nnz) / static_cast<double>(values.size());
}

// k(x, row r of the sparse matrix), given |x|^2.
inline double sparse_kernel(const KernelSpec& kernel, const SparseRows& rows, std::size_t r,
                            std::span<const double> x, double x_sq_norm) {
  const double d = rows.dot(r, x);
  if (kernel.kind == KernelKind::Linear) return d;
  return std::exp(-kernel.gamma * std::max(0.0, x_sq_norm + rows.sq_norms[r] - 2.0 * d));
}

// Least-recently-used cache of kernel matrix rows over one training matrix.
// Rows are recomputed on a miss, so results never depend on the capacity.
// Not thread-safe; one cache per solver invocation (or per sequential group
// of invocations that share X and the kernel).
class KernelCache {
 public:
  static constexpr std::size_t kDefaultBudgetBytes = std::size_t{256} << 20;

  KernelCache(const Matrix& X, KernelSpec kernel, std::size_t max_rows = 0)
      : X_(&X), kernel_(kernel), slot_of_(X.rows(), kNone), where_(X.rows()), diag_(X.rows()) {
    const std::size_t n = X.rows();
    if (max_rows == 0) max_rows = kDefaultBudgetBytes / (sizeof(double) * std::max<std::size_t>(n, 1));
    capacity_ = std::clamp<std::size_t>(max_rows, 2, std::max<std::size_t>(n, 2));
    for (std::size_t i = 0; i < n; ++i) diag_[i] = kernel_(X.row(i), X.row(i));
    if (density(X) < kSparseDensity) sparse_ = SparseRows::from(X);
  }

  const Matrix& X() const noexcept { return *X_; }
  const KernelSpec& kernel() const noexcept { return kernel_; }
  std::size_t capacity() const noexcept { return capacity_; }
  double diagonal(std::size_t i) const { return diag_[i]; }
  std::size_t misses() const noexcept { return misses_; }

  // The returned span stays valid until two further distinct rows are fetched.
  std::span<const double> row(std::size_t i) {
    if (slot_of_[i] != kNone) {
      lru_.splice(lru_.begin(), lru_, where_[i]);
      return slots_[slot_of_[i]];
    }
    ++misses_;
    std::size_t slot;
    if (slots_.size() < capacity_) {
      slot = slots_.size();
      slots_.emplace_back(X_->rows());
    } else {
      const std::size_t victim = lru_.back();
      lru_.pop_back();
      slot = slot_of_[victim];
      slot_of_[victim] = kNone;
    }
    auto& data = slots_[slot];
    const auto xi = X_->row(i);
    if (sparse_) {
      for (std::size_t t = 0; t < X_->rows(); ++t) data[t] = sparse_kernel(kernel_, *sparse_, t, xi, sparse_->sq_norms[i]);
    } else {
      for (std::size_t t = 0; t < X_->rows(); ++t) data[t] = kernel_(xi, X_->row(t));
    }
    slot_of_[i] = slot;
    lru_.push_front(i);
    where_[i] = lru_.begin();
    return data;
  }

 private:
  static constexpr std::size_t kNone = std::numeric_limits<std::size_t>::max();

  const Matrix* X_;
  KernelSpec kernel_;
  std::size_t capacity_ = 2;
  std::vector<std::vector<double>> slots_;
  std::vector<std::size_t> slot_of_;
  std::list<std::size_t> lru_;
  std::vector<std::list<std::size_t>::iterator> where_;
  std::vector<double> diag_;
  std::optional<SparseRows> sparse_;
  std::size_t misses_ = 0;
};

// ---------------------------------------------------------------------------
// Solver
// ---------------------------------------------------------------------------

struct SolverConfig {
  double C = 1.0;
  double tol = 1e-3;
  std::size_t max_iter = 100000;  // pair updates
  std::size_t cache_rows = 0;     // 0: size from a fixed memory budget
};

struct SolverInfo {
  bool converged = false;
  std::size_t iterations = 0;
  double max_violation = 0.0;   // m(alpha) - M(alpha) at exit
  double dual_objective = 0.0;  // sum(alpha) - 1/2 alpha' Q alpha
  std::size_t n_free = 0;
  std::size_t n_at_bound = 0;
};

// Label mapping: Positive -> +1, Negative -> -1.
constexpr double sign_of(Code c) noexcept { return c == Code::Positive ? 1.0 : -1.0; }

struct TrainedModel {
  Matrix support_vectors;
  std::vector<double> dual_coefs;  // alpha_i * y_i
  double bias = 0.0;
  KernelSpec kernel;
  std::vector<std::size_t> support_indices;  // rows of the training matrix
  SolverInfo info;

  std::size_t dim() const noexcept { return support_vectors.cols(); }

  // f(x) = sum_i coef_i k(sv_i, x) + bias
  double decision_function(std::span<const double> x) const {
    if (!support_vectors.empty() && x.size() != support_vectors.cols())
      throw std::invalid_argument("decision_function: dimension mismatch");
    double f = bias;
    for (std::size_t i = 0; i < dual_coefs.size(); ++i) f += dual_coefs[i] * kernel(support_vectors.row(i), x);
    return f;
  }

  // Ties (f == 0) go to Positive.
  Code predict(std::span<const double> x) const {
    return decision_function(x) >= 0.0 ? Code::Positive : Code::Negative;
  }

  std::vector<double> decision_values(const Matrix& X) const {
    std::vector<double> out;
    out.reserve(X.rows());
    if (support_vectors.empty() || density(support_vectors) >= kSparseDensity) {
      for (std::size_t r = 0; r < X.rows(); ++r) out.push_back(decision_function(X.row(r)));
      return out;
    }
    if (X.cols() != support_vectors.cols()) throw std::invalid_argument("decision_values: dimension mismatch");
    const auto sv = SparseRows::from(support_vectors);
    for (std::size_t r = 0; r < X.rows(); ++r) {
      const auto x = X.row(r);
      const double x_norm = dot(x, x);
      double f = bias;
      for (std::size_t i = 0; i < dual_coefs.size(); ++i) f += dual_coefs[i] * sparse_kernel(kernel, sv, i, x, x_norm);
      out.push_back(f);
    }
    return out;
  }

  std::vector<Code> predict(const Matrix& X) const {
    std::vector<Code> out;
    out.reserve(X.rows());
    for (double f : decision_values(X)) out.push_back(f >= 0.0 ? Code::Positive : Code::Negative);
    return out;
  }
};

namespace detail {

inline void check_training_input(const Matrix& X, std::span<const Code> y) {
  if (X.rows() != y.size()) throw std::invalid_argument("train_svm: label count does not match rows");
  if (X.rows() == 0) throw DataError("train_svm: empty training set");
  const bool has_pos = std::find(y.begin(), y.end(), Code::Positive) != y.end();
  const bool has_neg = std::find(y.begin(), y.end(), Code::Negative) != y.end();
  if (!has_pos || !has_neg) throw DataError("train_svm: training labels contain a single class");
  for (double v : X.data()) {
    if (!std::isfinite(v)) throw DataError("train_svm: non-finite feature value");
  }
}

}  // namespace detail

// Weighted soft-margin dual solved by SMO:
//   min 1/2 a'Qa - e'a   s.t.  0 <= a_i <= C w_{y_i},  y'a = 0,   Q_ij = y_i y_j k(x_i, x_j)
// Each step takes the maximal violating pair and solves the two-variable
// subproblem in closed form. Stops when m(a) - M(a) <= tol or after max_iter
// pair updates; non-convergence is reported in info, not thrown.
inline TrainedModel train_svm(const Matrix& X, std::span<const Code> labels, const SolverConfig& config,
                              KernelCache& cache, const WeightScheme& weights) {
  detail::check_training_input(X, labels);
  if (&cache.X() != &X) throw std::invalid_argument("train_svm: kernel cache built over a different matrix");
  if (!(config.C > 0.0) || !(config.tol > 0.0)) throw std::invalid_argument("train_svm: C and tol must be positive");
  if (!(weights.positive > 0.0) || !(weights.negative > 0.0))
    throw std::invalid_argument("train_svm: class weights must be positive");

  constexpr double kTau = 1e-12;
  const std::size_t n = X.rows();
  std::vector<double> y(n), upper(n), alpha(n, 0.0), grad(n, -1.0);
  for (std::size_t t = 0; t < n; ++t) {
    y[t] = sign_of(labels[t]);
    upper[t] = config.C * weights.for_code(labels[t]);
  }
  const auto in_up = [&](std::size_t t) { return y[t] > 0 ? alpha[t] < upper[t] : alpha[t] > 0.0; };
  const auto in_low = [&](std::size_t t) { return y[t] > 0 ? alpha[t] > 0.0 : alpha[t] < upper[t]; };

  SolverInfo info;
  for (;;) {
    std::size_t i = n, j = n;
    double m = -std::numeric_limits<double>::infinity();
    double M = std::numeric_limits<double>::infinity();
    for (std::size_t t = 0; t < n; ++t) {
      const double v = -y[t] * grad[t];
      if (in_up(t) && v > m) {
        m = v;
        i = t;
      }
      if (in_low(t) && v < M) {
        M = v;
        j = t;
      }
    }
    info.max_violation = (i == n || j == n) ? 0.0 : m - M;
    if (info.max_violation <= config.tol) {
      info.converged = true;
      break;
    }
    if (info.iterations >= config.max_iter) break;
    ++info.iterations;

    const auto Ki = cache.row(i);
    const auto Kj = cache.row(j);
    const double Ci = upper[i], Cj = upper[j];
    const double old_i = alpha[i], old_j = alpha[j];
    double& ai = alpha[i];
    double& aj = alpha[j];

    if (y[i] != y[j]) {
      double quad = cache.diagonal(i) + cache.diagonal(j) - 2.0 * Ki[j];
      if (quad <= 0.0) quad = kTau;
      const double delta = (-grad[i] - grad[j]) / quad;
      const double diff = ai - aj;
      ai += delta;
      aj += delta;
      if (diff > 0.0) {
        if (aj < 0.0) {
          aj = 0.0;
          ai = diff;
        }
      } else if (ai < 0.0) {
        ai = 0.0;
        aj = -diff;
      }
      if (diff > Ci - Cj) {
        if (ai > Ci) {
          ai = Ci;
          aj = Ci - diff;
        }
      } else if (aj > Cj) {
        aj = Cj;
        ai = Cj + diff;
      }
    } else {
      double quad = cache.diagonal(i) + cache.diagonal(j) - 2.0 * Ki[j];
      if (quad <= 0.0) quad = kTau;
      const double delta = (grad[i] - grad[j]) / quad;
      const double sum = ai + aj;
      ai -= delta;
      aj += delta;
      if (sum > Ci) {
        if (ai > Ci) {
          ai = Ci;
          aj = sum - Ci;
        }
      } else if (aj < 0.0) {
        aj = 0.0;
        ai = sum;
      }
      if (sum > Cj) {
        if (aj > Cj) {
          aj = Cj;
          ai = sum - Cj;
        }
      } else if (ai < 0.0) {
        ai = 0.0;
        aj = sum;
      }
    }

    // grad_t += Q_ti d_i + Q_tj d_j
    const double di = (ai - old_i) * y[i];
    const double dj = (aj - old_j) * y[j];
    for (std::size_t t = 0; t < n; ++t) grad[t] += y[t] * (Ki[t] * di + Kj[t] * dj);
  }

  // Bias: mean over free multipliers, else the midpoint of the feasible interval.
  double sum_free = 0.0;
  double lb = -std::numeric_limits<double>::infinity();
  double ub = std::numeric_limits<double>::infinity();
  for (std::size_t t = 0; t < n; ++t) {
    const double yg = y[t] * grad[t];
    if (alpha[t] > 0.0 && alpha[t] < upper[t]) {
      ++info.n_free;
      sum_free += yg;
    } else if (alpha[t] >= upper[t]) {
      ++info.n_at_bound;
      if (y[t] < 0) {
        ub = std::min(ub, yg);
      } else {
        lb = std::max(lb, yg);
      }
    } else if (y[t] > 0) {
      ub = std::min(ub, yg);
    } else {
      lb = std::max(lb, yg);
    }
  }
  double r;
  if (info.n_free > 0) {
    r = sum_free / static_cast<double>(info.n_free);
  } else if (std::isfinite(lb) && std::isfinite(ub)) {
    r = 0.5 * (lb + ub);
  } else {
    r = std::isfinite(lb) ? lb : (std::isfinite(ub) ? ub : 0.0);
  }

  double objective = 0.0;
  for (std::size_t t = 0; t < n; ++t) objective += alpha[t] * (1.0 - grad[t]);
  info.dual_objective = 0.5 * objective;

  TrainedModel model;
  model.kernel = cache.kernel();
  model.bias = -r;
  model.info = info;
  for (std::size_t t = 0; t < n; ++t) {
    if (alpha[t] > 0.0) {
      model.support_indices.push_back(t);
      model.dual_coefs.push_back(alpha[t] * y[t]);
    }
  }
  model.support_vectors = X.select_rows(model.support_indices);
  if (model.support_vectors.empty()) model.support_vectors = Matrix(0, X.cols());
  return model;
}

inline TrainedModel train_svm(const Matrix& X, std::span<const Code> labels, const SolverConfig& config,
                              const KernelSpec& kernel, const WeightScheme& weights) {
  detail::check_training_input(X, labels);
  KernelCache cache(X, kernel, config.cache_rows);
  return train_svm(X, labels, config, cache, weights);
}

// ---------------------------------------------------------------------------
// Model text format (dyadsvm/1)
//
//   dyadsvm/1
//   kernel rbf <gamma> | kernel linear
//   bias <b>
//   support <n_sv> <dim>
//   <coef> <x_1> ... <x_dim>        (n_sv lines)
//
// Doubles are written in shortest round-trip form.
// ---------------------------------------------------------------------------

namespace detail {

inline std::string fmt_double(double v) {
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, end);
}

inline double read_double(std::istream& in, const char* what) {
  std::string token;
  if (!(in >> token)) throw ParseError(std::string("model file: missing ") + what);
  double v = 0.0;
  auto [p, ec] = std::from_chars(token.data(), token.data() + token.size(), v);
  if (ec != std::errc{} || p != token.data() + token.size())
    throw ParseError(std::string("model file: malformed ") + what + " '" + token + "'");
  return v;
}

}  // namespace detail

inline std::string serialize_model(const TrainedModel& model) {
  std::ostringstream out;
  out << "dyadsvm/1\n";
  if (model.kernel.kind == KernelKind::Rbf) {
    out << "kernel rbf " << detail::fmt_double(model.kernel.gamma) << '\n';
  } else {
    out << "kernel linear\n";
  }
  out << "bias " << detail::fmt_double(model.bias) << '\n';
  out << "support " << model.dual_coefs.size() << ' ' << model.support_vectors.cols() << '\n';
  for (std::size_t i = 0; i < model.dual_coefs.size(); ++i) {
    out << detail::fmt_double(model.dual_coefs[i]);
    for (double v : model.support_vectors.row(i)) out << ' ' << detail::fmt_double(v);
    out << '\n';
  }
  return out.str();
}

inline TrainedModel parse_model(const std::string& text) {
  std::istringstream in(text);
  std::string word;
  if (!(in >> word) || word != "dyadsvm/1") throw ParseError("model file: expected 'dyadsvm/1' header");
  TrainedModel model;
  if (!(in >> word) || word != "kernel") throw ParseError("model file: expected 'kernel'");
  if (!(in >> word)) throw ParseError("model file: missing kernel kind");
  if (word == "rbf") {
    const double gamma = detail::read_double(in, "gamma");
    if (!(gamma > 0.0) || !std::isfinite(gamma)) throw ParseError("model file: gamma must be positive");
    model.kernel = KernelSpec::rbf(gamma);
  } else if (word == "linear") {
    model.kernel = KernelSpec::linear();
  } else {
    throw ParseError("model file: unknown kernel '" + word + "'");
  }
  if (!(in >> word) || word != "bias") throw ParseError("model file: expected 'bias'");
  model.bias = detail::read_double(in, "bias");
  std::size_t n_sv = 0, dim = 0;
  if (!(in >> word) || word != "support" || !(in >> n_sv >> dim))
    throw ParseError("model file: expected 'support <n> <dim>'");
  model.support_vectors = Matrix(n_sv, dim);
  model.dual_coefs.resize(n_sv);
  for (std::size_t i = 0; i < n_sv; ++i) {
    model.dual_coefs[i] = detail::read_double(in, "coefficient");
    for (std::size_t k = 0; k < dim; ++k) model.support_vectors(i, k) = detail::read_double(in, "value");
  }
  model.info.converged = true;
  return model;
}

inline void save_model(const TrainedModel& model, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write model file " + path.string());
  out << serialize_model(model);
}

inline TrainedModel load_model(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open model file " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_model(buf.str());
}

}  // namespace dyadcode
