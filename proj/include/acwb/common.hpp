#ifndef ACWB_COMMON_HPP_
#define ACWB_COMMON_HPP_

#include <cstddef>
#include <cstdint>
#include <functional>
#include <random>
#include <stdexcept>
#include <string>

#include <Eigen/Dense>
#include <Eigen/SparseCore>

namespace acwb {

using Index = Eigen::Index;
using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;
using SparseMatrix = Eigen::SparseMatrix<double>;

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Invalid or unusable input data (CSV problems, schema mismatches).
class DataError : public Error {
 public:
  using Error::Error;
};

// Numerical or algorithmic failure while fitting.
class FitError : public Error {
 public:
  using Error::Error;
};

// Invalid configuration values or flags.
class ConfigError : public Error {
 public:
  using Error::Error;
};

// Deterministic 64-bit generator. The engine is std::mt19937_64, whose output
// sequence is fixed by the standard; the conversions below are spelled out
// because the standard distributions are implementation-defined.
class Rng {
 public:
  explicit Rng(std::uint64_t seed);

  std::uint64_t next();
  // Uniform on [0, 1).
  double uniform();
  // Uniform integer on [0, n).
  std::uint64_t below(std::uint64_t n);

 private:
  std::mt19937_64 engine_;
};

// Mixes a seed with a stream identifier; used to derive independent
// sub-seeds (per column, per tree, per fold).
std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream);

// Number of worker threads used by parallel_for (default: hardware threads).
void set_num_threads(int n);
int num_threads();

// Runs body(i) for i in [begin, end). Work is split into contiguous blocks,
// one per worker; the body must only write to disjoint outputs.
void parallel_for(Index begin, Index end, const std::function<void(Index)>& body);

}  // namespace acwb

#endif  // ACWB_COMMON_HPP_
