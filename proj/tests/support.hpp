#pragma once

#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <unistd.h>

#include <Eigen/Dense>

#include "teayield/cli.hpp"
#include "teayield/dataset.hpp"
#include "teayield/random.hpp"

namespace testing_support {

inline Eigen::MatrixXd random_matrix(Eigen::Index rows, Eigen::Index cols, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  Eigen::MatrixXd x(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i)
    for (Eigen::Index j = 0; j < cols; ++j) x(i, j) = normal(rng);
  return x;
}

inline Eigen::VectorXd random_vector(Eigen::Index n, std::uint64_t seed) { return random_matrix(n, 1, seed).col(0); }

inline std::vector<std::string> names(std::size_t count, const std::string& prefix = "f") {
  std::vector<std::string> out;
  for (std::size_t i = 0; i < count; ++i) out.push_back(prefix + std::to_string(i));
  return out;
}

inline teayield::FeatureMatrix matrix(const Eigen::MatrixXd& x, const Eigen::VectorXd& y) {
  return teayield::FeatureMatrix(names(static_cast<std::size_t>(x.cols())), x, y);
}

class TempDir {
 public:
  TempDir() {
    static int counter = 0;
    path_ = std::filesystem::temp_directory_path() /
            ("teayield_test_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() { std::filesystem::remove_all(path_); }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  std::string file(const std::string& name) const { return (path_ / name).string(); }
  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
};

inline void write_text(const std::string& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary);
  f << text;
}

inline std::string read_text(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  std::ostringstream s;
  s << f.rdbuf();
  return s.str();
}

struct CliResult {
  int code = 0;
  std::string out;
  std::string err;
};

inline CliResult run_cli(std::vector<std::string> args) {
  args.insert(args.begin(), "teayield");
  std::ostringstream out, err;
  const int code = teayield::cli::run(args, out, err);
  return {code, out.str(), err.str()};
}

// Small, fast settings for tests that train whole pipelines.
inline const char* kQuickConfig = R"([pipeline]
cv_folds = 5

[mlp]
epochs = 300
grid_hidden = 5, 10

[gpr]
grid_signal = 1
grid_length = 1, 2
grid_noise = 0.05

[ensemble]
pool_size = 8

[evaluate]
replicates = 2

[synth]
n = 60
)";

}  // namespace testing_support
