#pragma once

#include <cstdint>
#include <string>
#include <unordered_map>
#include <vector>

#include <Eigen/Dense>

namespace golomb {

using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic,
                             Eigen::RowMajor>;
using Vector = Eigen::VectorXd;
using MatrixMap = Eigen::Map<Matrix>;
using ConstMatrixMap = Eigen::Map<const Matrix>;

struct TensorSpec {
  std::string name;
  int rows = 0;
  int cols = 0;
  std::size_t offset = 0;  // into the flat buffer
  bool weight_decay = true;
};

// All learnable parameters live in one flat double buffer addressed by named
// 2-D views. Gradients and optimizer moments reuse the same layout, which
// keeps the optimizer, checkpointing and finite-difference checks uniform.
class ParamStore {
 public:
  // Registers a tensor and returns its index. Must happen before freeze().
  int add(const std::string& name, int rows, int cols, bool weight_decay = true);
  void freeze();  // allocates the buffer
  bool frozen() const { return frozen_; }

  std::size_t size() const { return data_.size(); }
  double* data() { return data_.data(); }
  const double* data() const { return data_.data(); }
  std::vector<double>& buffer() { return data_; }
  const std::vector<double>& buffer() const { return data_; }

  const std::vector<TensorSpec>& specs() const { return specs_; }
  const TensorSpec& spec(const std::string& name) const;
  bool has(const std::string& name) const { return index_.count(name) > 0; }

  MatrixMap view(const std::string& name);
  ConstMatrixMap view(const std::string& name) const;
  MatrixMap view(const TensorSpec& spec);
  ConstMatrixMap view(const TensorSpec& spec) const;

  // A second buffer (gradients, moments) laid out identically.
  std::vector<double> make_buffer() const {
    return std::vector<double>(data_.size(), 0.0);
  }
  MatrixMap view_in(std::vector<double>& buf, const std::string& name) const;
  ConstMatrixMap view_in(const std::vector<double>& buf,
                         const std::string& name) const;

 private:
  std::vector<TensorSpec> specs_;
  std::unordered_map<std::string, int> index_;
  std::vector<double> data_;
  bool frozen_ = false;
};

// Model directory format: manifest.json ({version, dtype, tensors:[{name,
// rows, cols, file}]}) plus one little-endian float32 blob per tensor.
void save_params(const ParamStore& params, const std::string& dir);
void load_params(ParamStore& params, const std::string& dir);

}  // namespace golomb
