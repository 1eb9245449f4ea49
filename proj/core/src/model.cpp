#include "dcrec/model.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <random>

namespace dcrec {

void ProjectorParams::validate(Index input_dim) const {
  if (weights.size() != biases.size()) throw ShapeError("projector weight/bias count mismatch");
  Eigen::Index in = input_dim;
  for (std::size_t l = 0; l < weights.size(); ++l) {
    if (weights[l].rows() != in) throw ShapeError("projector layer " + std::to_string(l) + " input mismatch");
    if (biases[l].rows() != 1 || biases[l].cols() != weights[l].cols()) {
      throw ShapeError("projector bias " + std::to_string(l) + " has wrong shape");
    }
    in = weights[l].cols();
  }
}

std::string ModelShape::describe() const {
  return "users=" + std::to_string(users) + " items=" + std::to_string(items) +
         " dim=" + std::to_string(dim) + " item_layers=" + std::to_string(item_layers) +
         " social_layers=" + std::to_string(social_layers) +
         " projector_depth=" + std::to_string(projector_depth) +
         " projector=" + (projector ? "on" : "off");
}

void ParameterSet::for_each(const std::function<void(const std::string&, Matrix&)>& fn) {
  fn("user_collab", user_collab);
  fn("item_collab", item_collab);
  fn("user_social", user_social);
  for (std::size_t l = 0; l < social_encoder.layer_weights.size(); ++l) {
    fn("social_encoder.w" + std::to_string(l), social_encoder.layer_weights[l]);
  }
  for (std::size_t l = 0; l < social_projector.weights.size(); ++l) {
    fn("social_projector.w" + std::to_string(l), social_projector.weights[l]);
    fn("social_projector.b" + std::to_string(l), social_projector.biases[l]);
  }
  for (std::size_t l = 0; l < collab_projector.weights.size(); ++l) {
    fn("collab_projector.w" + std::to_string(l), collab_projector.weights[l]);
    fn("collab_projector.b" + std::to_string(l), collab_projector.biases[l]);
  }
}

void ParameterSet::for_each(
    const std::function<void(const std::string&, const Matrix&)>& fn) const {
  const_cast<ParameterSet*>(this)->for_each(
      [&fn](const std::string& name, Matrix& m) { fn(name, m); });
}

std::size_t ParameterSet::parameter_count() const {
  std::size_t total = 0;
  for_each([&total](const std::string&, const Matrix& m) { total += static_cast<std::size_t>(m.size()); });
  return total;
}

ParameterSet ParameterSet::zeros_like() const {
  ParameterSet out = *this;
  out.for_each([](const std::string&, Matrix& m) { m.setZero(); });
  return out;
}

ParameterSet init_parameters(const ModelShape& shape, std::uint64_t seed) {
  if (shape.dim < 1 || shape.users < 0 || shape.items < 0) throw ConfigError("invalid model shape");
  if (shape.social_layers < 1) throw ConfigError("social encoder needs at least one layer");
  if (shape.item_layers < 0) throw ConfigError("item layer count must be >= 0");
  if (shape.projector && shape.projector_depth < 1) throw ConfigError("projector depth must be >= 1");

  std::mt19937_64 rng(seed);
  const double half_width = 1.0 / std::sqrt(static_cast<double>(shape.dim));
  std::uniform_real_distribution<double> dist(-half_width, half_width);
  auto fill = [&](Index rows, Index cols) {
    Matrix m(rows, cols);
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
      for (Eigen::Index c = 0; c < m.cols(); ++c) m(r, c) = dist(rng);
    }
    return m;
  };

  ParameterSet p;
  p.user_collab = fill(shape.users, shape.dim);
  p.item_collab = fill(shape.items, shape.dim);
  p.user_social = fill(shape.users, shape.dim);
  for (Index l = 0; l < shape.social_layers; ++l) {
    p.social_encoder.layer_weights.push_back(fill(shape.dim, shape.dim));
  }
  if (shape.projector) {
    for (ProjectorParams* proj : {&p.social_projector, &p.collab_projector}) {
      for (Index l = 0; l < shape.projector_depth; ++l) {
        proj->weights.push_back(fill(shape.dim, shape.dim));
        proj->biases.push_back(Matrix::Zero(1, shape.dim));
      }
    }
  }
  return p;
}

std::uint64_t checksum(const Matrix& m) {
  // FNV-1a over the raw bytes of every entry plus the shape.
  std::uint64_t h = 1469598103934665603ULL;
  auto mix = [&h](std::uint64_t v) {
    for (int b = 0; b < 8; ++b) {
      h ^= (v >> (8 * b)) & 0xffU;
      h *= 1099511628211ULL;
    }
  };
  mix(static_cast<std::uint64_t>(m.rows()));
  mix(static_cast<std::uint64_t>(m.cols()));
  for (Eigen::Index k = 0; k < m.size(); ++k) mix(std::bit_cast<std::uint64_t>(m.data()[k]));
  return h;
}

std::uint64_t checksum(const ParameterSet& params) {
  std::uint64_t h = 0x9e3779b97f4a7c15ULL;
  params.for_each([&h](const std::string&, const Matrix& m) {
    h ^= checksum(m) + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2);
  });
  return h;
}

ParameterVars ParameterVars::register_on(Tape& tape, const ParameterSet& params) {
  ParameterVars v;
  v.user_collab = tape.leaf(params.user_collab, "user_collab");
  v.item_collab = tape.leaf(params.item_collab, "item_collab");
  v.user_social = tape.leaf(params.user_social, "user_social");
  for (const auto& w : params.social_encoder.layer_weights) {
    v.social_weights.push_back(tape.leaf(w, "social_encoder.w"));
  }
  for (std::size_t l = 0; l < params.social_projector.depth(); ++l) {
    v.social_proj_weights.push_back(tape.leaf(params.social_projector.weights[l], "social_projector.w"));
    v.social_proj_biases.push_back(tape.leaf(params.social_projector.biases[l], "social_projector.b"));
  }
  for (std::size_t l = 0; l < params.collab_projector.depth(); ++l) {
    v.collab_proj_weights.push_back(tape.leaf(params.collab_projector.weights[l], "collab_projector.w"));
    v.collab_proj_biases.push_back(tape.leaf(params.collab_projector.biases[l], "collab_projector.b"));
  }
  return v;
}

GradientSet ParameterVars::collect(const Tape& tape, const ParameterSet& params) const {
  GradientSet g = params.zeros_like();
  g.user_collab = tape.grad(user_collab);
  g.item_collab = tape.grad(item_collab);
  g.user_social = tape.grad(user_social);
  for (std::size_t l = 0; l < social_weights.size(); ++l) {
    g.social_encoder.layer_weights[l] = tape.grad(social_weights[l]);
  }
  for (std::size_t l = 0; l < social_proj_weights.size(); ++l) {
    g.social_projector.weights[l] = tape.grad(social_proj_weights[l]);
    g.social_projector.biases[l] = tape.grad(social_proj_biases[l]);
  }
  for (std::size_t l = 0; l < collab_proj_weights.size(); ++l) {
    g.collab_projector.weights[l] = tape.grad(collab_proj_weights[l]);
    g.collab_projector.biases[l] = tape.grad(collab_proj_biases[l]);
  }
  return g;
}

std::pair<Var, Var> light_gcn(Tape& tape, const SparseAdjacency& adjacency, Var users, Var items,
                              Index layers) {
  const auto m = static_cast<Index>(tape.value(users).rows());
  const auto n = static_cast<Index>(tape.value(items).rows());
  if (adjacency.rows() != m + n || adjacency.cols() != m + n) {
    throw ShapeError("light_gcn: adjacency is " + std::to_string(adjacency.rows()) + "x" +
                     std::to_string(adjacency.cols()) + " but users+items = " +
                     std::to_string(m + n));
  }
  if (layers < 0) throw ConfigError("light_gcn: negative layer count");
  if (layers == 0) return {users, items};
  std::vector<Var> outputs{ops::concat_rows(tape, users, items)};
  for (Index k = 0; k < layers; ++k) {
    outputs.push_back(ops::propagate(tape, adjacency, outputs.back()));
  }
  const Var combined = ops::mean(tape, outputs);
  return {ops::slice_rows(tape, combined, 0, m), ops::slice_rows(tape, combined, m, n)};
}

Var social_gcn(Tape& tape, const SparseAdjacency& adjacency, Var users,
               std::span<const Var> layer_weights) {
  const auto m = tape.value(users).rows();
  if (adjacency.rows() != m || adjacency.cols() != m) throw ShapeError("social_gcn: adjacency is not m x m");
  if (layer_weights.empty()) throw ConfigError("social_gcn: no layers");
  Var h = users;
  for (std::size_t l = 0; l < layer_weights.size(); ++l) {
    h = ops::propagate(tape, adjacency, ops::matmul(tape, h, layer_weights[l]));
    if (l + 1 < layer_weights.size()) h = ops::relu(tape, h);
  }
  return h;
}

Var project(Tape& tape, Var x, std::span<const Var> weights, std::span<const Var> biases,
            const ProjectorParams& shape_info) {
  if (weights.size() != biases.size()) throw ShapeError("projector weight/bias count mismatch");
  Var h = x;
  for (std::size_t l = 0; l < weights.size(); ++l) {
    h = ops::add_row(tape, ops::matmul(tape, h, weights[l]), biases[l]);
    const bool last = l + 1 == weights.size();
    const Activation act = last ? shape_info.output_activation : shape_info.hidden_activation;
    if (act == Activation::Relu) h = ops::relu(tape, h);
  }
  return h;
}

std::pair<Matrix, Matrix> light_gcn_forward(const SparseAdjacency& adjacency,
                                            const Matrix& users, const Matrix& items,
                                            Index layers) {
  Tape tape;
  const Var u = tape.constant(users, "users");
  const Var i = tape.constant(items, "items");
  const auto [uo, io] = light_gcn(tape, adjacency, u, i, layers);
  return {tape.value(uo), tape.value(io)};
}

Matrix social_gcn_forward(const SparseAdjacency& adjacency, const Matrix& users,
                          const SocialEncoderParams& params) {
  Tape tape;
  const Var u = tape.constant(users, "users");
  std::vector<Var> ws;
  for (const auto& w : params.layer_weights) {
    if (w.rows() != users.cols() || w.cols() != users.cols()) throw ShapeError("social weight must be d x d");
    ws.push_back(tape.constant(w, "w"));
  }
  return tape.value(social_gcn(tape, adjacency, u, ws));
}

Matrix project(const Matrix& x, const ProjectorParams& params) {
  params.validate(static_cast<Index>(x.cols()));
  Tape tape;
  const Var in = tape.constant(x, "x");
  std::vector<Var> ws, bs;
  for (std::size_t l = 0; l < params.depth(); ++l) {
    ws.push_back(tape.constant(params.weights[l], "w"));
    bs.push_back(tape.constant(params.biases[l], "b"));
  }
  return tape.value(project(tape, in, ws, bs, params));
}

std::pair<Matrix, Matrix> final_representations(const SparseAdjacency& training_adjacency,
                                                const ParameterSet& params, Index layers) {
  return light_gcn_forward(training_adjacency, params.user_collab, params.item_collab, layers);
}

}  // namespace dcrec
