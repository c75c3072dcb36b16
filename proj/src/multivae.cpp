#include "recdenoise/multivae.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include <nlohmann/json.hpp>

#include "recdenoise/rng.hpp"

namespace recdenoise {

using json = nlohmann::json;

void TrainConfig::validate() const {
  if (epochs < 0) throw ConfigError("epochs must be >= 0");
  if (batch_size < 1) throw ConfigError("batch_size must be >= 1");
  if (!(learning_rate > 0)) throw ConfigError("learning_rate must be positive");
  if (dropout < 0 || dropout >= 1) throw ConfigError("dropout must be in [0, 1)");
  if (beta_max < 0 || beta_max > 1) throw ConfigError("beta_max must be in [0, 1]");
  if (anneal_steps < 1) throw ConfigError("anneal_steps must be >= 1");
  if (hidden < 1 || latent < 1) throw ConfigError("hidden and latent dims must be >= 1");
}

ModelParams ModelParams::zeros(int n_items, int hidden, int latent) {
  ModelParams p;
  p.n_items = n_items;
  p.hidden = hidden;
  p.latent = latent;
  p.enc_w1 = Eigen::MatrixXd::Zero(hidden, n_items);
  p.enc_b1 = Eigen::VectorXd::Zero(hidden);
  p.enc_w2 = Eigen::MatrixXd::Zero(2 * latent, hidden);
  p.enc_b2 = Eigen::VectorXd::Zero(2 * latent);
  p.dec_w1 = Eigen::MatrixXd::Zero(hidden, latent);
  p.dec_b1 = Eigen::VectorXd::Zero(hidden);
  p.dec_w2 = Eigen::MatrixXd::Zero(n_items, hidden);
  p.dec_b2 = Eigen::VectorXd::Zero(n_items);
  return p;
}

std::vector<ModelParams::TensorView> ModelParams::tensors() {
  return {
      {"enc_w1", enc_w1.data(), enc_w1.size()}, {"enc_b1", enc_b1.data(), enc_b1.size()},
      {"enc_w2", enc_w2.data(), enc_w2.size()}, {"enc_b2", enc_b2.data(), enc_b2.size()},
      {"dec_w1", dec_w1.data(), dec_w1.size()}, {"dec_b1", dec_b1.data(), dec_b1.size()},
      {"dec_w2", dec_w2.data(), dec_w2.size()}, {"dec_b2", dec_b2.data(), dec_b2.size()},
  };
}

std::vector<ModelParams::TensorView> ModelParams::tensors() const {
  return const_cast<ModelParams*>(this)->tensors();
}

TrainingDiverged::TrainingDiverged(int epoch, int batch_index)
    : std::runtime_error("non-finite loss at epoch " + std::to_string(epoch) + ", batch " +
                         std::to_string(batch_index)),
      batch_index_(batch_index) {}

ElboResult elbo_loss(const ModelParams& p, const Eigen::MatrixXd& input,
                     const Eigen::MatrixXd& target, double beta, const Eigen::MatrixXd& eps) {
  const auto batch = input.rows();
  const int latent = p.latent;

  // Encoder.
  Eigen::MatrixXd h1 = ((input * p.enc_w1.transpose()).rowwise() + p.enc_b1.transpose())
                           .array()
                           .tanh()
                           .matrix();
  Eigen::MatrixXd a = (h1 * p.enc_w2.transpose()).rowwise() + p.enc_b2.transpose();
  Eigen::MatrixXd mu = a.leftCols(latent);
  Eigen::MatrixXd logvar = a.rightCols(latent);
  Eigen::MatrixXd sigma = (0.5 * logvar.array()).exp().matrix();
  Eigen::MatrixXd z = mu + eps.cwiseProduct(sigma);

  // Decoder.
  Eigen::MatrixXd h2 = ((z * p.dec_w1.transpose()).rowwise() + p.dec_b1.transpose())
                           .array()
                           .tanh()
                           .matrix();
  Eigen::MatrixXd logits = (h2 * p.dec_w2.transpose()).rowwise() + p.dec_b2.transpose();

  // Row-stable log-softmax.
  Eigen::VectorXd row_max = logits.rowwise().maxCoeff();
  Eigen::VectorXd lse =
      ((logits.colwise() - row_max).array().exp().rowwise().sum().log() + row_max.array())
          .matrix();
  Eigen::MatrixXd log_softmax = logits.colwise() - lse;

  const double nll = -(target.cwiseProduct(log_softmax)).sum() / static_cast<double>(batch);
  const double kl = 0.5 *
                    (logvar.array().exp() + mu.array().square() - 1.0 - logvar.array()).sum() /
                    static_cast<double>(batch);

  ElboResult res;
  res.loss = nll + beta * kl;
  res.grads = ModelParams::zeros(p.n_items, p.hidden, p.latent);

  const double inv_b = 1.0 / static_cast<double>(batch);
  Eigen::VectorXd row_ones = target.rowwise().sum();
  Eigen::MatrixXd softmax = (logits.colwise() - lse).array().exp().matrix();
  Eigen::MatrixXd d_logits =
      ((softmax.array().colwise() * row_ones.array()) - target.array()).matrix() * inv_b;

  res.grads.dec_w2 = d_logits.transpose() * h2;
  res.grads.dec_b2 = d_logits.colwise().sum();
  Eigen::MatrixXd d_h2 = d_logits * p.dec_w2;
  Eigen::MatrixXd d_pre2 = d_h2.cwiseProduct((1.0 - h2.array().square()).matrix());
  res.grads.dec_w1 = d_pre2.transpose() * z;
  res.grads.dec_b1 = d_pre2.colwise().sum();

  Eigen::MatrixXd d_z = d_pre2 * p.dec_w1;
  Eigen::MatrixXd d_mu = d_z + (beta * inv_b) * mu;
  Eigen::MatrixXd d_logvar = (d_z.cwiseProduct(eps).cwiseProduct(sigma) * 0.5) +
                             ((beta * inv_b) * 0.5) *
                                 (logvar.array().exp() - 1.0).matrix();

  Eigen::MatrixXd d_a(batch, 2 * latent);
  d_a << d_mu, d_logvar;
  res.grads.enc_w2 = d_a.transpose() * h1;
  res.grads.enc_b2 = d_a.colwise().sum();
  Eigen::MatrixXd d_h1 = d_a * p.enc_w2;
  Eigen::MatrixXd d_pre1 = d_h1.cwiseProduct((1.0 - h1.array().square()).matrix());
  res.grads.enc_w1 = d_pre1.transpose() * input;
  res.grads.enc_b1 = d_pre1.colwise().sum();

  return res;
}

ModelParams multivae_init(int n_items, const TrainConfig& config) {
  config.validate();
  ModelParams p = ModelParams::zeros(n_items, config.hidden, config.latent);
  Rng rng(config.seed);
  auto glorot = [&rng](Eigen::MatrixXd& w) {
    const double std = std::sqrt(2.0 / static_cast<double>(w.rows() + w.cols()));
    for (Eigen::Index c = 0; c < w.cols(); ++c)
      for (Eigen::Index r = 0; r < w.rows(); ++r) w(r, c) = rng.next_normal() * std;
  };
  glorot(p.enc_w1);
  glorot(p.enc_w2);
  glorot(p.dec_w1);
  glorot(p.dec_w2);
  return p;
}

ModelParams multivae_train(const std::vector<std::vector<ItemId>>& rows, int n_items,
                           const TrainConfig& config) {
  config.validate();
  if (rows.empty()) throw ConfigError("training matrix is empty");

  ModelParams p = multivae_init(n_items, config);
  ModelParams m = ModelParams::zeros(n_items, config.hidden, config.latent);
  ModelParams v = ModelParams::zeros(n_items, config.hidden, config.latent);

  constexpr double kBeta1 = 0.9, kBeta2 = 0.999, kAdamEps = 1e-8;
  const int n_users = static_cast<int>(rows.size());
  Rng rng(derive_seed(config.seed, 0x7261696e));  // training stream

  std::vector<int> order(static_cast<size_t>(n_users));
  for (int i = 0; i < n_users; ++i) order[static_cast<size_t>(i)] = i;

  std::int64_t step = 0;
  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    // Deterministic shuffle per epoch.
    for (int i = n_users - 1; i > 0; --i) {
      const int j = static_cast<int>(rng.next_below(static_cast<std::uint64_t>(i) + 1));
      std::swap(order[static_cast<size_t>(i)], order[static_cast<size_t>(j)]);
    }

    for (int start = 0, bi = 0; start < n_users; start += config.batch_size, ++bi) {
      const int bsize = std::min(config.batch_size, n_users - start);
      Eigen::MatrixXd target = Eigen::MatrixXd::Zero(bsize, n_items);
      Eigen::MatrixXd input = Eigen::MatrixXd::Zero(bsize, n_items);
      for (int b = 0; b < bsize; ++b) {
        const auto& row = rows[static_cast<size_t>(order[static_cast<size_t>(start + b)])];
        for (ItemId it : row) {
          target(b, it) = 1.0;
          if (config.dropout == 0.0 || rng.next_double() >= config.dropout) input(b, it) = 1.0;
        }
        const double norm = input.row(b).norm();
        if (norm > 0) input.row(b) /= norm;
      }
      Eigen::MatrixXd eps(bsize, config.latent);
      for (int b = 0; b < bsize; ++b)
        for (int l = 0; l < config.latent; ++l) eps(b, l) = rng.next_normal();

      const double beta =
          config.beta_max *
          std::min(1.0, static_cast<double>(step) / static_cast<double>(config.anneal_steps));
      ElboResult res = elbo_loss(p, input, target, beta, eps);
      if (!std::isfinite(res.loss)) throw TrainingDiverged(epoch, bi);

      ++step;
      const double bc1 = 1.0 - std::pow(kBeta1, static_cast<double>(step));
      const double bc2 = 1.0 - std::pow(kBeta2, static_cast<double>(step));
      auto pt = p.tensors();
      auto gt = res.grads.tensors();
      auto mt = m.tensors();
      auto vt = v.tensors();
      for (size_t t = 0; t < pt.size(); ++t) {
        double* pw = pt[t].data;
        const double* gw = gt[t].data;
        double* mw = mt[t].data;
        double* vw = vt[t].data;
        for (std::ptrdiff_t i = 0; i < pt[t].size; ++i) {
          mw[i] = kBeta1 * mw[i] + (1.0 - kBeta1) * gw[i];
          vw[i] = kBeta2 * vw[i] + (1.0 - kBeta2) * gw[i] * gw[i];
          const double mhat = mw[i] / bc1;
          const double vhat = vw[i] / bc2;
          pw[i] -= config.learning_rate * mhat / (std::sqrt(vhat) + kAdamEps);
        }
      }
    }
  }
  return p;
}

Eigen::VectorXd multivae_scores(const ModelParams& p, const std::vector<ItemId>& profile) {
  Eigen::VectorXd x = Eigen::VectorXd::Zero(p.n_items);
  for (ItemId i : profile) x[i] = 1.0;
  const double norm = x.norm();
  if (norm > 0) x /= norm;

  Eigen::VectorXd h1 = (p.enc_w1 * x + p.enc_b1).array().tanh();
  Eigen::VectorXd a = p.enc_w2 * h1 + p.enc_b2;
  Eigen::VectorXd mu = a.head(p.latent);  // posterior mean; no sampling at inference
  Eigen::VectorXd h2 = (p.dec_w1 * mu + p.dec_b1).array().tanh();
  return p.dec_w2 * h2 + p.dec_b2;
}

namespace {
json tensor_to_json(const ModelParams::TensorView& t) {
  json arr = json::array();
  for (std::ptrdiff_t i = 0; i < t.size; ++i) arr.push_back(t.data[i]);
  return arr;
}
}  // namespace

void save_model(const ModelParams& params, const TrainConfig& config, const std::string& path) {
  json doc;
  doc["version"] = 1;
  doc["kind"] = "multivae";
  doc["n_items"] = params.n_items;
  doc["hidden"] = params.hidden;
  doc["latent"] = params.latent;
  doc["config"] = {{"epochs", config.epochs},
                   {"batch_size", config.batch_size},
                   {"learning_rate", config.learning_rate},
                   {"dropout", config.dropout},
                   {"beta_max", config.beta_max},
                   {"anneal_steps", config.anneal_steps},
                   {"hidden", config.hidden},
                   {"latent", config.latent},
                   {"seed", config.seed}};
  json tensors;
  for (const auto& t : params.tensors()) tensors[t.name] = tensor_to_json(t);
  doc["tensors"] = std::move(tensors);

  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("cannot write checkpoint: " + path);
  out << doc.dump();
}

ModelParams load_model(const std::string& path, TrainConfig* config) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DependencyError("cannot open checkpoint: " + path);
  json doc = json::parse(in);
  if (!doc.contains("version") || doc.at("kind").get<std::string>() != "multivae")
    throw DependencyError("not a model checkpoint: " + path);

  ModelParams p = ModelParams::zeros(doc.at("n_items").get<int>(), doc.at("hidden").get<int>(),
                                     doc.at("latent").get<int>());
  for (auto& t : p.tensors()) {
    const json& arr = doc.at("tensors").at(t.name);
    if (static_cast<std::ptrdiff_t>(arr.size()) != t.size)
      throw DependencyError(std::string("checkpoint tensor size mismatch: ") + t.name);
    for (std::ptrdiff_t i = 0; i < t.size; ++i) t.data[i] = arr[static_cast<size_t>(i)].get<double>();
  }
  if (config) {
    const json& c = doc.at("config");
    config->epochs = c.at("epochs").get<int>();
    config->batch_size = c.at("batch_size").get<int>();
    config->learning_rate = c.at("learning_rate").get<double>();
    config->dropout = c.at("dropout").get<double>();
    config->beta_max = c.at("beta_max").get<double>();
    config->anneal_steps = c.at("anneal_steps").get<int>();
    config->hidden = c.at("hidden").get<int>();
    config->latent = c.at("latent").get<int>();
    config->seed = c.at("seed").get<std::uint64_t>();
  }
  return p;
}

}  // namespace recdenoise
