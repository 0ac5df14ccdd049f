#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <span>
#include <string>
#include <string_view>
#include <tuple>
#include <variant>
#include <vector>

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

#include "augur/error.hpp"
#include "augur/profile.hpp"
#include "augur/workload.hpp"

namespace augur {

inline constexpr std::size_t kBasisSize = 8;
inline constexpr std::array<std::string_view, kBasisSize> kBasisNames = {"nmk", "nm", "nk", "mk",
                                                                         "n",   "m",  "k",  "1"};
using Coefficients = std::array<double, kBasisSize>;

inline Coefficients basis(double n, double m, double k) {
  return {n * m * k, n * m, n * k, m * k, n, m, k, 1.0};
}

inline double evaluate(const Coefficients& c, double n, double m, double k) {
  const Coefficients x = basis(n, m, k);
  double t = 0.0;
  for (std::size_t j = 0; j < kBasisSize; ++j) t += c[j] * x[j];
  return t;
}

inline constexpr std::size_t kMinFitSamples = 9;

// Training error of a fitted model, computed on clamped predictions.
struct ResidualStats {
  std::size_t count = 0;
  double max_abs_ms = 0.0;
  double rms_ms = 0.0;
  double max_rel = 0.0;
  double mean_rel = 0.0;
  double median_rel = 0.0;
  // Lowest design-matrix rank among the fitted regressions; 8 unless the
  // profile left one basis direction undetermined.
  std::size_t design_rank = kBasisSize;

  friend bool operator==(const ResidualStats&, const ResidualStats&) = default;
};

struct TrainingRange {
  std::int64_t n_min = 0, n_max = 0;
  std::int64_t m_min = 0, m_max = 0;
  std::int64_t k_min = 0, k_max = 0;

  bool contains(std::int64_t n, std::int64_t m, std::int64_t k) const {
    return n >= n_min && n <= n_max && m >= m_min && m <= m_max && k >= k_min && k <= k_max;
  }
  friend bool operator==(const TrainingRange&, const TrainingRange&) = default;
};

struct CpuLinearModel {
  Coefficients coefficients{};

  friend bool operator==(const CpuLinearModel&, const CpuLinearModel&) = default;
};

// Three linear regimes split by m, plus a lookup table for small n.
struct GpuPiecewiseModel {
  std::array<std::int64_t, 2> m_boundaries{28 * 28, 56 * 56};
  std::int64_t small_n_threshold = 128;
  std::array<Coefficients, 3> regions{};
  std::vector<TimingSample> small_n_table;

  // Region 0 holds m <= b0, region 1 b0 < m <= b1, region 2 m > b1.
  std::size_t region_of(std::int64_t m) const {
    if (m <= m_boundaries[0]) return 0;
    if (m <= m_boundaries[1]) return 1;
    return 2;
  }

  friend bool operator==(const GpuPiecewiseModel&, const GpuPiecewiseModel&) = default;
};

struct TimingModel {
  std::variant<CpuLinearModel, GpuPiecewiseModel> form;
  ResidualStats residuals;
  TrainingRange range;
  std::string source_profile_label;

  bool is_cpu() const { return std::holds_alternative<CpuLinearModel>(form); }
  const CpuLinearModel& cpu() const { return std::get<CpuLinearModel>(form); }
  const GpuPiecewiseModel& gpu() const { return std::get<GpuPiecewiseModel>(form); }

  friend bool operator==(const TimingModel&, const TimingModel&) = default;
};

struct GpuFitConfig {
  std::array<std::int64_t, 2> m_boundaries{28 * 28, 56 * 56};
  std::int64_t small_n_threshold = 128;
};

// ---------------------------------------------------------------------------
// Fitting
// ---------------------------------------------------------------------------

// A profile that fixes one axis per slice, all slices through a common point
// (n0, m0, k0), leaves exactly one basis direction undetermined:
// (n - n0)(m - m0)(k - k0). Such a design is fitted with the minimum-norm
// solution; anything less determined is DegenerateDesign.
inline constexpr std::size_t kMinDesignRank = kBasisSize - 1;

// Least squares over the 8-term basis on relative residuals: each row is
// divided by its measured time, so a 0.1 ms cell counts as much as a 1 s one.
// Columns are then scaled to unit max-norm before a complete orthogonal
// decomposition.
inline Coefficients fit_least_squares(std::span<const TimingSample> samples, std::size_t* rank_out = nullptr) {
  if (samples.size() < kMinFitSamples)
    throw FitError(FitErrorKind::InsufficientSamples,
                   "need at least " + std::to_string(kMinFitSamples) + " samples, got " +
                       std::to_string(samples.size()));
  const auto rows = static_cast<Eigen::Index>(samples.size());
  Eigen::MatrixXd x(rows, static_cast<Eigen::Index>(kBasisSize));
  Eigen::VectorXd y(rows);
  for (Eigen::Index i = 0; i < rows; ++i) {
    const auto& s = samples[static_cast<std::size_t>(i)];
    if (!(s.time_ms > 0.0) || !std::isfinite(s.time_ms))
      throw Error("sample (" + std::to_string(s.n) + ", " + std::to_string(s.m) + ", " + std::to_string(s.k) +
                  ") has a non-positive time");
    const Coefficients f =
        basis(static_cast<double>(s.n), static_cast<double>(s.m), static_cast<double>(s.k));
    for (std::size_t j = 0; j < kBasisSize; ++j) x(i, static_cast<Eigen::Index>(j)) = f[j] / s.time_ms;
    y(i) = 1.0;
  }
  Eigen::VectorXd scale = x.cwiseAbs().colwise().maxCoeff().transpose();
  for (Eigen::Index j = 0; j < scale.size(); ++j) {
    if (scale(j) == 0.0) throw FitError(FitErrorKind::DegenerateDesign, "basis column is all zero");
  }
  x = x * scale.cwiseInverse().asDiagonal();

  Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd> cod;
  cod.setThreshold(1e-10);
  cod.compute(x);
  const auto rank = static_cast<std::size_t>(cod.rank());
  if (rank < kMinDesignRank)
    throw FitError(FitErrorKind::DegenerateDesign,
                   "design matrix has rank " + std::to_string(rank) + " of 8; the (n, m, k) "
                   "samples do not vary enough to separate the basis terms");
  Eigen::VectorXd beta = cod.solve(y);
  beta += cod.solve(Eigen::VectorXd(y - x * beta));  // one refinement step
  if (rank_out) *rank_out = rank;

  Coefficients c{};
  for (std::size_t j = 0; j < kBasisSize; ++j)
    c[j] = beta(static_cast<Eigen::Index>(j)) / scale(static_cast<Eigen::Index>(j));
  return c;
}

namespace detail {

inline TrainingRange range_of(std::span<const TimingSample> samples) {
  TrainingRange r{std::numeric_limits<std::int64_t>::max(), 0,
                  std::numeric_limits<std::int64_t>::max(), 0,
                  std::numeric_limits<std::int64_t>::max(), 0};
  for (const auto& s : samples) {
    r.n_min = std::min(r.n_min, s.n);
    r.n_max = std::max(r.n_max, s.n);
    r.m_min = std::min(r.m_min, s.m);
    r.m_max = std::max(r.m_max, s.m);
    r.k_min = std::min(r.k_min, s.k);
    r.k_max = std::max(r.k_max, s.k);
  }
  if (samples.empty()) r = {};
  return r;
}

inline double median_of(std::vector<double> values) {
  if (values.empty()) return 0.0;
  std::sort(values.begin(), values.end());
  const std::size_t mid = values.size() / 2;
  return values.size() % 2 ? values[mid] : 0.5 * (values[mid - 1] + values[mid]);
}

}  // namespace detail

inline double predict_matmul(const TimingModel& model, std::int64_t n, std::int64_t m, std::int64_t k);

inline ResidualStats residual_stats(const TimingModel& model, std::span<const TimingSample> samples) {
  ResidualStats stats;
  stats.count = samples.size();
  if (samples.empty()) return stats;
  std::vector<double> rel;
  double sq = 0.0;
  for (const auto& s : samples) {
    const double err = std::abs(predict_matmul(model, s.n, s.m, s.k) - s.time_ms);
    stats.max_abs_ms = std::max(stats.max_abs_ms, err);
    sq += err * err;
    rel.push_back(err / s.time_ms);
  }
  stats.rms_ms = std::sqrt(sq / static_cast<double>(samples.size()));
  stats.max_rel = *std::max_element(rel.begin(), rel.end());
  stats.mean_rel = std::accumulate(rel.begin(), rel.end(), 0.0) / static_cast<double>(rel.size());
  stats.median_rel = detail::median_of(rel);
  return stats;
}

inline TimingModel fit_cpu_model(const DeviceProfile& profile) {
  if (profile.kind != ProcessorKind::CpuLike)
    throw FitError(FitErrorKind::WrongProcessorKind, "CPU model needs a CPU-like profile");
  TimingModel model;
  std::size_t rank = kBasisSize;
  model.form = CpuLinearModel{fit_least_squares(profile.samples, &rank)};
  model.range = detail::range_of(profile.samples);
  model.source_profile_label = profile.processor_label;
  model.residuals = residual_stats(model, profile.samples);
  model.residuals.design_rank = rank;
  return model;
}

// Fits each m region on the samples with n >= small_n_threshold whose m lies
// in the region's closed interval, so samples sitting exactly on a boundary
// inform both neighbours. Samples with smaller n are kept verbatim.
inline TimingModel fit_gpu_model(const DeviceProfile& profile, const GpuFitConfig& config = {}) {
  if (profile.kind != ProcessorKind::GpuLike)
    throw FitError(FitErrorKind::WrongProcessorKind, "GPU model needs a GPU-like profile");
  const auto [b0, b1] = config.m_boundaries;
  if (!(b0 >= 1 && b0 < b1)) throw Error("m boundaries must be strictly increasing and positive");
  if (config.small_n_threshold < 1) throw Error("small-n threshold must be >= 1");

  GpuPiecewiseModel gpu;
  gpu.m_boundaries = config.m_boundaries;
  gpu.small_n_threshold = config.small_n_threshold;

  std::size_t min_rank = kBasisSize;
  std::array<std::vector<TimingSample>, 3> fit_sets;
  std::array<std::size_t, 3> own{};
  for (const auto& s : profile.samples) {
    if (s.n < config.small_n_threshold) {
      gpu.small_n_table.push_back(s);
      gpu.small_n_table.back().processor.clear();
      continue;
    }
    ++own[gpu.region_of(s.m)];
    if (s.m <= b0) fit_sets[0].push_back(s);
    if (s.m >= b0 && s.m <= b1) fit_sets[1].push_back(s);
    if (s.m >= b1) fit_sets[2].push_back(s);
  }
  for (std::size_t r = 0; r < 3; ++r) {
    if (own[r] == 0)
      throw FitError(FitErrorKind::EmptyRegion,
                     "m region " + std::to_string(r) + " has no samples with n >= " +
                         std::to_string(config.small_n_threshold));
    try {
      std::size_t rank = kBasisSize;
      gpu.regions[r] = fit_least_squares(fit_sets[r], &rank);
      min_rank = std::min(min_rank, rank);
    } catch (const FitError& e) {
      throw FitError(e.kind(), "m region " + std::to_string(r) + ": " + e.what());
    }
  }
  std::sort(gpu.small_n_table.begin(), gpu.small_n_table.end(), [](const auto& a, const auto& b) {
    return std::tie(a.n, a.m, a.k) < std::tie(b.n, b.m, b.k);
  });

  TimingModel model;
  model.form = std::move(gpu);
  model.range = detail::range_of(profile.samples);
  model.source_profile_label = profile.processor_label;
  model.residuals = residual_stats(model, profile.samples);
  model.residuals.design_rank = min_rank;
  return model;
}

inline TimingModel fit_model(const DeviceProfile& profile, const GpuFitConfig& config = {}) {
  return profile.kind == ProcessorKind::CpuLike ? fit_cpu_model(profile)
                                                : fit_gpu_model(profile, config);
}

// ---------------------------------------------------------------------------
// Prediction
// ---------------------------------------------------------------------------

namespace detail {

// Nearest stored n, then nearest m*k on a log scale; time scales linearly in m*k.
inline double lookup_small_n(const std::vector<TimingSample>& table, std::int64_t n, std::int64_t m,
                             std::int64_t k) {
  std::int64_t best_n = table.front().n;
  for (const auto& s : table) {
    const auto d = std::abs(s.n - n), best = std::abs(best_n - n);
    if (d < best || (d == best && s.n < best_n)) best_n = s.n;
  }
  const double work = static_cast<double>(m) * static_cast<double>(k);
  const TimingSample* pick = nullptr;
  double pick_dist = 0.0;
  for (const auto& s : table) {
    if (s.n != best_n) continue;
    const double dist =
        std::abs(std::log(work) - std::log(static_cast<double>(s.m) * static_cast<double>(s.k)));
    if (!pick || dist < pick_dist) {
      pick = &s;
      pick_dist = dist;
    }
  }
  return pick->time_ms * work / (static_cast<double>(pick->m) * static_cast<double>(pick->k));
}

}  // namespace detail

// Time of one execution of an [n x k] * [k x m] GEMM, never negative.
inline double predict_matmul(const TimingModel& model, std::int64_t n, std::int64_t m,
                             std::int64_t k) {
  const auto dn = static_cast<double>(n), dm = static_cast<double>(m), dk = static_cast<double>(k);
  if (const auto* cpu = std::get_if<CpuLinearModel>(&model.form))
    return std::max(0.0, evaluate(cpu->coefficients, dn, dm, dk));
  const auto& gpu = std::get<GpuPiecewiseModel>(model.form);
  if (n < gpu.small_n_threshold && !gpu.small_n_table.empty())
    return detail::lookup_small_n(gpu.small_n_table, n, m, k);
  return std::max(0.0, evaluate(gpu.regions[gpu.region_of(m)], dn, dm, dk));
}

inline double predict_matmul(const TimingModel& model, const MatMulSpec& spec) {
  return predict_matmul(model, spec.n, spec.m, spec.k);
}

struct MatMulEstimate {
  MatMulSpec spec;
  double single_ms = 0.0;  // one execution
  double total_ms = 0.0;   // single_ms * group_repeat
  bool extrapolated = false;
};

struct TimingEstimate {
  std::vector<MatMulEstimate> matmuls;
  double total_ms = 0.0;
  std::vector<std::string> excluded;      // FC layers left out on request
  std::vector<std::string> extrapolated;  // layers outside the profiled (n, m, k) box

  std::string coverage_note() const {
    std::string note = std::to_string(matmuls.size()) + " matmul layer(s) summed";
    auto list = [](const std::vector<std::string>& names) {
      std::string s;
      for (const auto& name : names) s += (s.empty() ? "" : ", ") + name;
      return s;
    };
    if (!excluded.empty()) note += "; excluded FC: " + list(excluded);
    if (!extrapolated.empty()) note += "; extrapolated beyond profile: " + list(extrapolated);
    return note;
  }
};

inline TimingEstimate predict_network(const TimingModel& model, std::span<const MatMulSpec> matmuls,
                                      bool include_fc = true) {
  TimingEstimate est;
  for (const MatMulSpec& spec : matmuls) {
    if (spec.is_fully_connected() && !include_fc) {
      est.excluded.push_back(spec.layer);
      continue;
    }
    MatMulEstimate e;
    e.spec = spec;
    e.single_ms = predict_matmul(model, spec);
    e.total_ms = e.single_ms * static_cast<double>(spec.group_repeat);
    e.extrapolated = !model.range.contains(spec.n, spec.m, spec.k);
    if (e.extrapolated) est.extrapolated.push_back(spec.layer);
    est.total_ms += e.total_ms;
    est.matmuls.push_back(std::move(e));
  }
  return est;
}

// ---------------------------------------------------------------------------
// Leave-one-out quality
// ---------------------------------------------------------------------------

struct LooStats {
  std::vector<double> relative_errors;  // in profile order
  double median = 0.0;
  double mean = 0.0;
  double max = 0.0;
};

inline LooStats loo_error(const DeviceProfile& profile, const GpuFitConfig& config = {}) {
  LooStats stats;
  for (std::size_t i = 0; i < profile.samples.size(); ++i) {
    DeviceProfile rest = profile;
    rest.samples.erase(rest.samples.begin() + static_cast<std::ptrdiff_t>(i));
    const TimingModel model = fit_model(rest, config);
    const auto& s = profile.samples[i];
    stats.relative_errors.push_back(std::abs(predict_matmul(model, s.n, s.m, s.k) - s.time_ms) /
                                    s.time_ms);
  }
  if (stats.relative_errors.empty())
    throw FitError(FitErrorKind::InsufficientSamples, "profile has no samples");
  stats.median = detail::median_of(stats.relative_errors);
  stats.mean = std::accumulate(stats.relative_errors.begin(), stats.relative_errors.end(), 0.0) /
               static_cast<double>(stats.relative_errors.size());
  stats.max = *std::max_element(stats.relative_errors.begin(), stats.relative_errors.end());
  return stats;
}

// ---------------------------------------------------------------------------
// Model file (JSON)
// ---------------------------------------------------------------------------

inline nlohmann::ordered_json model_to_json(const TimingModel& model) {
  using nlohmann::ordered_json;
  ordered_json j;
  auto coeffs = [](const Coefficients& c) {
    ordered_json a = ordered_json::array();
    for (double v : c) a.push_back(v);
    return a;
  };
  j["kind"] = model.is_cpu() ? "cpu_linear" : "gpu_piecewise";
  j["basis_order"] = ordered_json::array();
  for (auto name : kBasisNames) j["basis_order"].push_back(std::string(name));
  if (model.is_cpu()) {
    j["coefficients"] = coeffs(model.cpu().coefficients);
    j["m_boundaries"] = nullptr;
    j["small_n_threshold"] = nullptr;
    j["small_n_table"] = ordered_json::array();
  } else {
    const auto& gpu = model.gpu();
    j["coefficients"] = ordered_json::array();
    for (const auto& c : gpu.regions) j["coefficients"].push_back(coeffs(c));
    j["m_boundaries"] = {gpu.m_boundaries[0], gpu.m_boundaries[1]};
    j["small_n_threshold"] = gpu.small_n_threshold;
    j["small_n_table"] = ordered_json::array();
    for (const auto& s : gpu.small_n_table)
      j["small_n_table"].push_back(
          {{"n", s.n}, {"m", s.m}, {"k", s.k}, {"time_ms", s.time_ms}, {"iterations", s.iterations}});
  }
  const auto& r = model.residuals;
  j["residual_stats"] = {{"count", r.count},       {"max_abs_ms", r.max_abs_ms},
                         {"rms_ms", r.rms_ms},     {"max_rel", r.max_rel},
                         {"mean_rel", r.mean_rel}, {"median_rel", r.median_rel},
                         {"design_rank", r.design_rank}};
  const auto& t = model.range;
  j["training_range"] = {{"n", {t.n_min, t.n_max}}, {"m", {t.m_min, t.m_max}}, {"k", {t.k_min, t.k_max}}};
  j["source_profile_label"] = model.source_profile_label;
  return j;
}

inline std::string dump_model(const TimingModel& model) { return model_to_json(model).dump(2) + "\n"; }

inline TimingModel model_from_json(const nlohmann::json& j) {
  auto read_coeffs = [](const nlohmann::json& a) {
    if (!a.is_array() || a.size() != kBasisSize)
      throw FormatError("model file: coefficient vector must have 8 entries");
    Coefficients c{};
    for (std::size_t i = 0; i < kBasisSize; ++i) c[i] = a.at(i).get<double>();
    return c;
  };
  try {
    TimingModel model;
    const auto& order = j.at("basis_order");
    if (!order.is_array() || order.size() != kBasisSize)
      throw FormatError("model file: basis_order must list the 8 basis terms");
    for (std::size_t i = 0; i < kBasisSize; ++i) {
      if (order.at(i).get<std::string>() != kBasisNames[i])
        throw FormatError("model file: unexpected basis_order");
    }
    const auto kind = j.at("kind").get<std::string>();
    if (kind == "cpu_linear") {
      model.form = CpuLinearModel{read_coeffs(j.at("coefficients"))};
    } else if (kind == "gpu_piecewise") {
      GpuPiecewiseModel gpu;
      const auto& regions = j.at("coefficients");
      if (!regions.is_array() || regions.size() != 3)
        throw FormatError("model file: gpu_piecewise needs 3 coefficient vectors");
      for (std::size_t r = 0; r < 3; ++r) gpu.regions[r] = read_coeffs(regions.at(r));
      const auto& b = j.at("m_boundaries");
      gpu.m_boundaries = {b.at(0).get<std::int64_t>(), b.at(1).get<std::int64_t>()};
      if (!(gpu.m_boundaries[0] < gpu.m_boundaries[1]))
        throw FormatError("model file: m_boundaries must be strictly increasing");
      gpu.small_n_threshold = j.at("small_n_threshold").get<std::int64_t>();
      for (const auto& row : j.at("small_n_table")) {
        TimingSample s;
        s.n = row.at("n").get<std::int64_t>();
        s.m = row.at("m").get<std::int64_t>();
        s.k = row.at("k").get<std::int64_t>();
        s.time_ms = row.at("time_ms").get<double>();
        s.iterations = row.value("iterations", std::int64_t{1});
        gpu.small_n_table.push_back(std::move(s));
      }
      model.form = std::move(gpu);
    } else {
      throw FormatError("model file: unknown kind '" + kind + "'");
    }
    const auto& r = j.at("residual_stats");
    model.residuals.count = r.at("count").get<std::size_t>();
    model.residuals.max_abs_ms = r.at("max_abs_ms").get<double>();
    model.residuals.rms_ms = r.at("rms_ms").get<double>();
    model.residuals.max_rel = r.at("max_rel").get<double>();
    model.residuals.mean_rel = r.at("mean_rel").get<double>();
    model.residuals.median_rel = r.at("median_rel").get<double>();
    model.residuals.design_rank = r.value("design_rank", kBasisSize);
    if (j.contains("training_range")) {
      const auto& t = j.at("training_range");
      model.range = {t.at("n").at(0).get<std::int64_t>(), t.at("n").at(1).get<std::int64_t>(),
                     t.at("m").at(0).get<std::int64_t>(), t.at("m").at(1).get<std::int64_t>(),
                     t.at("k").at(0).get<std::int64_t>(), t.at("k").at(1).get<std::int64_t>()};
    }
    model.source_profile_label = j.at("source_profile_label").get<std::string>();
    return model;
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("model file: ") + e.what());
  }
}

inline TimingModel parse_model(std::string_view text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("model file is not valid JSON: ") + e.what());
  }
  return model_from_json(j);
}

}  // namespace augur
