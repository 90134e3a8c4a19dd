#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "ehrsynth/record_view.hpp"
#include "ehrsynth/value.hpp"

namespace ehrsynth {

struct FeaturePlan {
  std::vector<std::string> numeric;
  std::vector<std::string> categorical;
};

// Vital signs, labs and age as numeric features; demographics, visit type,
// severity class and condition as categorical ones ("table.column" names).
FeaturePlan default_feature_plan();

// Flattens the view's patient, visit, first vital-signs, first test-result
// and first diagnosis rows into "table.column" cells.
Row record_features(const RecordView& record);

struct ScalerParams {
  std::vector<std::string> columns;
  std::vector<double> mean;
  std::vector<double> stddev;  // population
};

struct OneHotMap {
  std::vector<std::string> columns;
  std::vector<std::vector<std::string>> categories;  // lexicographic per column
};

struct Preprocessed {
  Eigen::MatrixXd matrix;           // one row per kept input row
  ScalerParams scaler;
  OneHotMap onehot;
  std::vector<std::size_t> kept;    // input row indices, ascending
  std::size_t dropped = 0;
  std::vector<std::string> feature_names;
};

// Drops rows missing any selected value, z-scores numeric columns (σ = 0
// columns become zeros) and one-hot encodes categorical ones.
// NoRowsRemaining when every row is dropped.
Preprocessed preprocess(const std::vector<Row>& rows, const FeaturePlan& plan);

// Applies fitted parameters to new rows. Unseen categories encode as all
// zeros and append a warning; rows missing a value are skipped.
Eigen::MatrixXd transform(const std::vector<Row>& rows, const ScalerParams& scaler, const OneHotMap& onehot,
                          std::vector<std::string>* warnings = nullptr, std::vector<std::size_t>* kept = nullptr);

// [d, ceil(d/2), ceil(d/4), ceil(d/2), d]
std::vector<int> default_widths(int d);

struct Gradients {
  std::vector<Eigen::MatrixXd> weights;
  std::vector<Eigen::VectorXd> biases;
};

// Fully connected, rectifier hidden layers, identity output. weights[l] is
// (widths[l+1] x widths[l]).
class Autoencoder {
 public:
  // Glorot-uniform weights from `seed`, zero biases. DimensionMismatch unless
  // the widths mirror with a strictly narrower latent layer.
  Autoencoder(std::vector<int> widths, std::uint64_t seed);

  const std::vector<int>& widths() const { return widths_; }
  std::uint64_t seed() const { return seed_; }
  std::vector<Eigen::MatrixXd>& weights() { return weights_; }
  std::vector<Eigen::VectorXd>& biases() { return biases_; }
  const std::vector<Eigen::MatrixXd>& weights() const { return weights_; }
  const std::vector<Eigen::VectorXd>& biases() const { return biases_; }

  Eigen::MatrixXd forward(const Eigen::MatrixXd& x) const;
  // Mean over all elements of (x̂ - x)².
  double loss(const Eigen::MatrixXd& x) const;
  Gradients gradients(const Eigen::MatrixXd& x) const;

 private:
  std::vector<int> widths_;
  std::uint64_t seed_;
  std::vector<Eigen::MatrixXd> weights_;
  std::vector<Eigen::VectorXd> biases_;
};

struct TrainOptions {
  int epochs = 200;
  double learning_rate = 1e-3;
  int batch_size = 32;
  std::uint64_t seed = 7;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double adam_epsilon = 1e-8;
};

struct TrainedAutoencoder {
  Autoencoder model;
  std::vector<double> loss_history;  // full-data loss after each epoch
};

// Adam over seeded shuffled minibatches. DimensionMismatch if widths[0] does
// not match the matrix width; NoRowsRemaining for an empty matrix.
TrainedAutoencoder train_autoencoder(const Eigen::MatrixXd& x, const std::vector<int>& widths,
                                     const TrainOptions& options);

// Per-row mean squared reconstruction error.
std::vector<double> reconstruction_errors(const Autoencoder& model, const Eigen::MatrixXd& x);

struct AnomalyReport {
  std::vector<double> errors;
  double mean = 0.0;
  double stddev = 0.0;  // population
  double threshold = 0.0;
  std::vector<bool> flags;
};

// threshold = mean + 2 * population std; flagged iff error > threshold.
AnomalyReport threshold_and_flag(const std::vector<double>& errors);

}  // namespace ehrsynth
