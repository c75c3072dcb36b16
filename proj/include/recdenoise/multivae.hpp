#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "recdenoise/scorer.hpp"
#include "recdenoise/types.hpp"

namespace recdenoise {

struct TrainConfig {
  int epochs = 50;
  int batch_size = 500;
  double learning_rate = 1e-3;
  double dropout = 0.5;       // input dropout probability
  double beta_max = 0.2;      // KL cap
  int anneal_steps = 200000;  // gradient updates over which beta ramps 0 -> beta_max
  int hidden = 600;
  int latent = 200;
  std::uint64_t seed = 0;

  void validate() const;
};

// Encoder input -> hidden -> (mu, logvar); decoder latent -> hidden -> logits.
struct ModelParams {
  int n_items = 0;
  int hidden = 0;
  int latent = 0;

  Eigen::MatrixXd enc_w1;  // hidden x n_items
  Eigen::VectorXd enc_b1;  // hidden
  Eigen::MatrixXd enc_w2;  // 2*latent x hidden
  Eigen::VectorXd enc_b2;  // 2*latent
  Eigen::MatrixXd dec_w1;  // hidden x latent
  Eigen::VectorXd dec_b1;  // hidden
  Eigen::MatrixXd dec_w2;  // n_items x hidden
  Eigen::VectorXd dec_b2;  // n_items

  static ModelParams zeros(int n_items, int hidden, int latent);

  struct TensorView {
    const char* name;
    double* data;
    std::ptrdiff_t size;
  };
  std::vector<TensorView> tensors();
  std::vector<TensorView> tensors() const;  // views are const in spirit; used read-only
};

class TrainingDiverged : public std::runtime_error {
 public:
  TrainingDiverged(int epoch, int batch_index);
  int batch_index() const { return batch_index_; }

 private:
  int batch_index_;
};

struct ElboResult {
  double loss = 0.0;
  ModelParams grads;
};

// Multinomial negative log-likelihood plus beta-weighted KL, averaged over
// the batch, with gradients for every tensor. `input` rows are the encoder
// inputs (already dropout-masked and L2-normalized), `target` the raw binary
// rows, `eps` the reparameterization draws (one per row).
ElboResult elbo_loss(const ModelParams& params, const Eigen::MatrixXd& input,
                     const Eigen::MatrixXd& target, double beta, const Eigen::MatrixXd& eps);

// Seeded initialization (Glorot-style weights, zero biases).
ModelParams multivae_init(int n_items, const TrainConfig& config);

// Adam training over binarized rows with linear KL annealing. Deterministic
// for a fixed seed; epochs = 0 returns the initialization unchanged.
ModelParams multivae_train(const std::vector<std::vector<ItemId>>& rows, int n_items,
                           const TrainConfig& config);

// Deterministic inference scores: no dropout, z = mu.
Eigen::VectorXd multivae_scores(const ModelParams& params, const std::vector<ItemId>& profile);

class MultiVae : public Scorer {
 public:
  explicit MultiVae(ModelParams params) : params_(std::move(params)) {}

  int num_items() const override { return params_.n_items; }
  Eigen::VectorXd scores(const std::vector<ItemId>& profile) const override {
    return multivae_scores(params_, profile);
  }
  // Decoder output rows double as item embeddings.
  Eigen::MatrixXd item_embeddings() const override { return params_.dec_w2; }

  const ModelParams& params() const { return params_; }

 private:
  ModelParams params_;
};

// Checkpoint container: versioned JSON with dims, config, seed and row-major
// weight arrays.
void save_model(const ModelParams& params, const TrainConfig& config, const std::string& path);
ModelParams load_model(const std::string& path, TrainConfig* config = nullptr);

}  // namespace recdenoise
