#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "dcrec/common.hpp"
#include "dcrec/sparse.hpp"
#include "dcrec/tape.hpp"

namespace dcrec {

enum class Activation { Linear, Relu };

/// One d x d weight per layer; relu on every layer but the last.
struct SocialEncoderParams {
  std::vector<Matrix> layer_weights;

  std::size_t layers() const { return layer_weights.size(); }
};

/// MLP with `weights.size()` layers: x W + b, relu between layers, linear
/// output. An empty projector is the identity map.
struct ProjectorParams {
  std::vector<Matrix> weights;
  std::vector<Matrix> biases;  // 1 x out_dim each
  Activation hidden_activation = Activation::Relu;
  Activation output_activation = Activation::Linear;

  std::size_t depth() const { return weights.size(); }
  void validate(Index input_dim) const;
};

struct ModelShape {
  Index users = 0;
  Index items = 0;
  Index dim = 64;
  Index item_layers = 2;
  Index social_layers = 2;
  Index projector_depth = 2;
  bool projector = true;

  friend bool operator==(const ModelShape&, const ModelShape&) = default;
  std::string describe() const;
};

/// Every trainable value. The collaborative and social user tables are
/// separate matrices and are never aliased.
struct ParameterSet {
  Matrix user_collab;  // m x d
  Matrix item_collab;  // n x d
  Matrix user_social;  // m x d
  SocialEncoderParams social_encoder;
  ProjectorParams social_projector;
  ProjectorParams collab_projector;

  /// Visits every matrix in a fixed order with a stable name.
  void for_each(const std::function<void(const std::string&, Matrix&)>& fn);
  void for_each(const std::function<void(const std::string&, const Matrix&)>& fn) const;

  std::size_t parameter_count() const;
  ParameterSet zeros_like() const;
};

/// Shapes match ParameterSet entry for entry.
using GradientSet = ParameterSet;

/// Centered uniform entries with half-width 1/sqrt(d); biases start at zero.
ParameterSet init_parameters(const ModelShape& shape, std::uint64_t seed);

/// Mixes every entry of every matrix, in visiting order, into a 64-bit hash.
std::uint64_t checksum(const ParameterSet& params);
std::uint64_t checksum(const Matrix& m);

/// Leaves registered for one forward pass, in ParameterSet visiting order.
struct ParameterVars {
  Var user_collab;
  Var item_collab;
  Var user_social;
  std::vector<Var> social_weights;
  std::vector<Var> social_proj_weights;
  std::vector<Var> social_proj_biases;
  std::vector<Var> collab_proj_weights;
  std::vector<Var> collab_proj_biases;

  static ParameterVars register_on(Tape& tape, const ParameterSet& params);
  /// Gradients after tape.backward(), shaped like `params`.
  GradientSet collect(const Tape& tape, const ParameterSet& params) const;
};

// Tape-recording encoders.
std::pair<Var, Var> light_gcn(Tape& tape, const SparseAdjacency& adjacency, Var users, Var items,
                              Index layers);
Var social_gcn(Tape& tape, const SparseAdjacency& adjacency, Var users,
               std::span<const Var> layer_weights);
Var project(Tape& tape, Var x, std::span<const Var> weights, std::span<const Var> biases,
            const ProjectorParams& shape_info);

/// Layer-mean light graph convolution over the (m+n) block adjacency.
std::pair<Matrix, Matrix> light_gcn_forward(const SparseAdjacency& adjacency,
                                            const Matrix& users, const Matrix& items,
                                            Index layers);
Matrix social_gcn_forward(const SparseAdjacency& adjacency, const Matrix& users,
                          const SocialEncoderParams& params);
Matrix project(const Matrix& x, const ProjectorParams& params);

/// light_gcn_forward on the un-augmented training adjacency; these feed
/// prediction and evaluation.
std::pair<Matrix, Matrix> final_representations(const SparseAdjacency& training_adjacency,
                                                const ParameterSet& params, Index layers);

}  // namespace dcrec
