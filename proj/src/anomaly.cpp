#include "ehrsynth/anomaly.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>

#include "ehrsynth/errors.hpp"
#include "ehrsynth/rng.hpp"

namespace ehrsynth {

FeaturePlan default_feature_plan() {
  return FeaturePlan{
      {"patient_details.age", "vital_signs.systolic_bp", "vital_signs.diastolic_bp", "vital_signs.heart_rate",
       "vital_signs.temperature_c", "vital_signs.height_cm", "vital_signs.weight_kg", "test_results.potassium_mmol_l",
       "test_results.sodium_mmol_l", "test_results.glucose_mg_dl", "test_results.hemoglobin_g_dl",
       "test_results.wbc_k_ul"},
      {"patient_details.gender", "patient_details.ethnicity", "patient_details.blood_group",
       "hospital_visits.visit_type", "vital_signs.severity_class", "diagnoses.condition"}};
}

Row record_features(const RecordView& r) {
  Row out;
  auto add = [&](const char* table, const Row* row) {
    if (!row) return;
    for (const auto& [col, v] : *row) out[std::string(table) + "." + col] = v;
  };
  add("patient_details", r.patient);
  add("hospital_visits", r.visit);
  add("vital_signs", r.vitals.empty() ? nullptr : r.vitals.front());
  add("test_results", r.tests.empty() ? nullptr : r.tests.front());
  add("diagnoses", r.diagnoses.empty() ? nullptr : r.diagnoses.front());
  return out;
}

namespace {

std::optional<double> numeric_cell(const Row& row, const std::string& col) {
  const Value* v = find_cell(row, col);
  return v ? as_number(*v) : std::nullopt;
}

std::optional<std::string> category_cell(const Row& row, const std::string& col) {
  const Value* v = find_cell(row, col);
  if (!v || is_null(*v)) return std::nullopt;
  return to_display(*v);
}

bool complete(const Row& row, const std::vector<std::string>& numeric, const std::vector<std::string>& categorical) {
  for (const auto& c : numeric)
    if (!numeric_cell(row, c) || !std::isfinite(*numeric_cell(row, c))) return false;
  for (const auto& c : categorical)
    if (!category_cell(row, c)) return false;
  return true;
}

void encode_row(const Row& row, const ScalerParams& s, const OneHotMap& h, Eigen::Ref<Eigen::RowVectorXd, 0, Eigen::InnerStride<>> out,
                std::vector<std::string>* warnings) {
  Eigen::Index j = 0;
  for (std::size_t c = 0; c < s.columns.size(); ++c, ++j) {
    const double x = *numeric_cell(row, s.columns[c]);
    out(j) = s.stddev[c] > 0.0 ? (x - s.mean[c]) / s.stddev[c] : 0.0;
  }
  for (std::size_t c = 0; c < h.columns.size(); ++c) {
    const auto& cats = h.categories[c];
    const auto value = *category_cell(row, h.columns[c]);
    const auto it = std::lower_bound(cats.begin(), cats.end(), value);
    const bool known = it != cats.end() && *it == value;
    if (!known && warnings) warnings->push_back("unseen category '" + value + "' in " + h.columns[c]);
    for (std::size_t k = 0; k < cats.size(); ++k, ++j)
      out(j) = known && static_cast<std::size_t>(it - cats.begin()) == k ? 1.0 : 0.0;
  }
}

Eigen::Index encoded_width(const ScalerParams& s, const OneHotMap& h) {
  std::size_t d = s.columns.size();
  for (const auto& c : h.categories) d += c.size();
  return static_cast<Eigen::Index>(d);
}

}  // namespace

Preprocessed preprocess(const std::vector<Row>& rows, const FeaturePlan& plan) {
  for (const auto& c : plan.numeric)
    if (std::find(plan.categorical.begin(), plan.categorical.end(), c) != plan.categorical.end())
      throw ConfigError("feature '" + c + "' is listed as both numeric and categorical");
  if (plan.numeric.empty() && plan.categorical.empty()) throw ConfigError("feature plan selects no columns");

  Preprocessed p;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (complete(rows[i], plan.numeric, plan.categorical)) p.kept.push_back(i);
    else ++p.dropped;
  }
  if (p.kept.empty()) throw NoRowsRemaining("every row is missing a selected feature");
  const double n = static_cast<double>(p.kept.size());

  p.scaler.columns = plan.numeric;
  for (const auto& c : plan.numeric) {
    double mean = 0.0;
    for (auto i : p.kept) mean += *numeric_cell(rows[i], c);
    mean /= n;
    double var = 0.0;
    for (auto i : p.kept) {
      const double d = *numeric_cell(rows[i], c) - mean;
      var += d * d;
    }
    p.scaler.mean.push_back(mean);
    p.scaler.stddev.push_back(std::sqrt(var / n));
    p.feature_names.push_back(c);
  }
  p.onehot.columns = plan.categorical;
  for (const auto& c : plan.categorical) {
    std::set<std::string> cats;
    for (auto i : p.kept) cats.insert(*category_cell(rows[i], c));
    p.onehot.categories.emplace_back(cats.begin(), cats.end());
    for (const auto& v : cats) p.feature_names.push_back(c + "=" + v);
  }

  p.matrix.resize(static_cast<Eigen::Index>(p.kept.size()), encoded_width(p.scaler, p.onehot));
  for (std::size_t r = 0; r < p.kept.size(); ++r)
    encode_row(rows[p.kept[r]], p.scaler, p.onehot, p.matrix.row(static_cast<Eigen::Index>(r)), nullptr);
  return p;
}

Eigen::MatrixXd transform(const std::vector<Row>& rows, const ScalerParams& scaler, const OneHotMap& onehot,
                          std::vector<std::string>* warnings, std::vector<std::size_t>* kept) {
  std::vector<std::size_t> ok;
  for (std::size_t i = 0; i < rows.size(); ++i)
    if (complete(rows[i], scaler.columns, onehot.columns)) ok.push_back(i);
  Eigen::MatrixXd m(static_cast<Eigen::Index>(ok.size()), encoded_width(scaler, onehot));
  for (std::size_t r = 0; r < ok.size(); ++r)
    encode_row(rows[ok[r]], scaler, onehot, m.row(static_cast<Eigen::Index>(r)), warnings);
  if (kept) *kept = std::move(ok);
  return m;
}

std::vector<int> default_widths(int d) {
  const int half = (d + 1) / 2, quarter = (d + 3) / 4;
  return {d, half, quarter, half, d};
}

Autoencoder::Autoencoder(std::vector<int> widths, std::uint64_t seed) : widths_(std::move(widths)), seed_(seed) {
  const std::size_t n = widths_.size();
  if (n < 3) throw DimensionMismatch("autoencoder needs at least one hidden layer");
  for (std::size_t i = 0; i < n; ++i) {
    if (widths_[i] < 1) throw DimensionMismatch("layer widths must be positive");
    if (widths_[i] != widths_[n - 1 - i]) throw DimensionMismatch("layer widths must mirror around the bottleneck");
  }
  for (std::size_t i = 1; i <= (n - 1) / 2; ++i)
    if (widths_[i] > widths_[i - 1]) throw DimensionMismatch("encoder widths must not grow");
  if (widths_[n / 2] >= widths_[0]) throw DimensionMismatch("latent width must be smaller than the input width");

  Rng rng(seed);
  for (std::size_t l = 0; l + 1 < n; ++l) {
    const int in = widths_[l], out = widths_[l + 1];
    const double a = std::sqrt(6.0 / static_cast<double>(in + out));
    Eigen::MatrixXd w(out, in);
    for (int r = 0; r < out; ++r)
      for (int c = 0; c < in; ++c) w(r, c) = rng.uniform(-a, a);
    weights_.push_back(std::move(w));
    biases_.push_back(Eigen::VectorXd::Zero(out));
  }
}

Eigen::MatrixXd Autoencoder::forward(const Eigen::MatrixXd& x) const {
  if (x.cols() != widths_.front()) throw DimensionMismatch("input width does not match the model");
  Eigen::MatrixXd a = x;
  for (std::size_t l = 0; l < weights_.size(); ++l) {
    Eigen::MatrixXd z = a * weights_[l].transpose();
    z.rowwise() += biases_[l].transpose();
    a = l + 1 < weights_.size() ? Eigen::MatrixXd(z.cwiseMax(0.0)) : z;
  }
  return a;
}

double Autoencoder::loss(const Eigen::MatrixXd& x) const {
  if (x.rows() == 0) return 0.0;
  return (forward(x) - x).squaredNorm() / static_cast<double>(x.size());
}

Gradients Autoencoder::gradients(const Eigen::MatrixXd& x) const {
  if (x.cols() != widths_.front()) throw DimensionMismatch("input width does not match the model");
  const std::size_t L = weights_.size();
  std::vector<Eigen::MatrixXd> z(L), a(L + 1);
  a[0] = x;
  for (std::size_t l = 0; l < L; ++l) {
    z[l] = a[l] * weights_[l].transpose();
    z[l].rowwise() += biases_[l].transpose();
    a[l + 1] = l + 1 < L ? Eigen::MatrixXd(z[l].cwiseMax(0.0)) : z[l];
  }
  Gradients g;
  g.weights.resize(L);
  g.biases.resize(L);
  Eigen::MatrixXd delta = 2.0 * (a[L] - x) / static_cast<double>(x.size());
  for (std::size_t l = L; l-- > 0;) {
    g.weights[l] = delta.transpose() * a[l];
    g.biases[l] = delta.colwise().sum().transpose();
    if (l > 0) {
      Eigen::MatrixXd back = delta * weights_[l];
      delta = back.cwiseProduct((z[l - 1].array() > 0.0).cast<double>().matrix());
    }
  }
  return g;
}

TrainedAutoencoder train_autoencoder(const Eigen::MatrixXd& x, const std::vector<int>& widths,
                                     const TrainOptions& opt) {
  if (widths.empty() || widths.front() != x.cols())
    throw DimensionMismatch("first layer width " + std::to_string(widths.empty() ? 0 : widths.front()) +
                            " does not match matrix width " + std::to_string(x.cols()));
  if (x.rows() == 0) throw NoRowsRemaining("cannot train on an empty matrix");
  if (opt.batch_size < 1 || opt.epochs < 0 || !(opt.learning_rate > 0.0))
    throw ConfigError("invalid training options");

  TrainedAutoencoder t{Autoencoder(widths, opt.seed), {}};
  auto& m = t.model;
  const std::size_t L = m.weights().size();
  std::vector<Eigen::MatrixXd> mw(L), vw(L);
  std::vector<Eigen::VectorXd> mb(L), vb(L);
  for (std::size_t l = 0; l < L; ++l) {
    mw[l] = vw[l] = Eigen::MatrixXd::Zero(m.weights()[l].rows(), m.weights()[l].cols());
    mb[l] = vb[l] = Eigen::VectorXd::Zero(m.biases()[l].size());
  }
  Rng rng(Rng::mix(opt.seed ^ 0xadaULL));
  std::vector<Eigen::Index> order(static_cast<std::size_t>(x.rows()));
  std::iota(order.begin(), order.end(), 0);
  long step = 0;
  for (int epoch = 0; epoch < opt.epochs; ++epoch) {
    rng.shuffle(order);
    for (std::size_t start = 0; start < order.size(); start += static_cast<std::size_t>(opt.batch_size)) {
      const std::size_t end = std::min(order.size(), start + static_cast<std::size_t>(opt.batch_size));
      Eigen::MatrixXd batch(static_cast<Eigen::Index>(end - start), x.cols());
      for (std::size_t i = start; i < end; ++i) batch.row(static_cast<Eigen::Index>(i - start)) = x.row(order[i]);
      const Gradients g = m.gradients(batch);
      ++step;
      const double c1 = 1.0 - std::pow(opt.beta1, static_cast<double>(step));
      const double c2 = 1.0 - std::pow(opt.beta2, static_cast<double>(step));
      for (std::size_t l = 0; l < L; ++l) {
        mw[l] = opt.beta1 * mw[l] + (1.0 - opt.beta1) * g.weights[l];
        vw[l] = opt.beta2 * vw[l] + (1.0 - opt.beta2) * g.weights[l].cwiseAbs2();
        m.weights()[l].array() -=
            opt.learning_rate * (mw[l].array() / c1) / ((vw[l].array() / c2).sqrt() + opt.adam_epsilon);
        mb[l] = opt.beta1 * mb[l] + (1.0 - opt.beta1) * g.biases[l];
        vb[l] = opt.beta2 * vb[l] + (1.0 - opt.beta2) * g.biases[l].cwiseAbs2();
        m.biases()[l].array() -=
            opt.learning_rate * (mb[l].array() / c1) / ((vb[l].array() / c2).sqrt() + opt.adam_epsilon);
      }
    }
    t.loss_history.push_back(m.loss(x));
  }
  return t;
}

std::vector<double> reconstruction_errors(const Autoencoder& model, const Eigen::MatrixXd& x) {
  const Eigen::MatrixXd diff = model.forward(x) - x;
  std::vector<double> out(static_cast<std::size_t>(x.rows()));
  for (Eigen::Index i = 0; i < x.rows(); ++i)
    out[static_cast<std::size_t>(i)] = diff.row(i).squaredNorm() / static_cast<double>(x.cols());
  return out;
}

AnomalyReport threshold_and_flag(const std::vector<double>& errors) {
  if (errors.empty()) throw EmptyScores("no reconstruction errors to threshold");
  AnomalyReport r;
  r.errors = errors;
  const double n = static_cast<double>(errors.size());
  const auto [lo, hi] = std::minmax_element(errors.begin(), errors.end());
  if (*lo == *hi) {
    // Exact for constant input; summation could otherwise drift by an ulp.
    r.mean = r.threshold = *lo;
    r.flags.assign(errors.size(), false);
    return r;
  }
  for (double e : errors) r.mean += e;
  r.mean /= n;
  double var = 0.0;
  for (double e : errors) var += (e - r.mean) * (e - r.mean);
  r.stddev = std::sqrt(var / n);
  r.threshold = r.mean + 2.0 * r.stddev;
  for (double e : errors) r.flags.push_back(e > r.threshold);
  return r;
}

}  // namespace ehrsynth
