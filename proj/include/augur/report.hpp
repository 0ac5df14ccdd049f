#pragma once

#include <cmath>
#include <cstdarg>
#include <cstdint>
#include <cstdio>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "augur/descriptor.hpp"
#include "augur/gemm_bench.hpp"
#include "augur/memory.hpp"
#include "augur/shape_inference.hpp"
#include "augur/timing_model.hpp"
#include "augur/workload.hpp"

namespace augur {

enum class ReportFormat { Table, Json };

struct InspectRow {
  std::string name;
  LayerKind kind = LayerKind::ReLU;
  std::vector<std::string> bottoms;
  std::string top;
  TensorShape output;
  std::optional<MatMulSpec> matmul;
  std::uint64_t flops = 0;
  std::uint64_t parameter_bytes = 0;
  std::uint64_t workspace_bytes = 0;
};

struct InspectReport {
  std::string network;
  std::string input_name;
  TensorShape input_shape;
  std::vector<InspectRow> rows;
  FlopsReport flops;
  MemoryReport memory;
};

inline InspectReport build_inspect_report(const NetworkDescriptor& net, const MemoryOptions& options = {}) {
  const ShapeTable shapes = infer_shapes(net);
  InspectReport report;
  report.network = net.name;
  report.input_name = net.input_name;
  report.input_shape = net.input_shape;
  report.flops = network_flops(net, shapes);
  report.memory = memory_report(net, shapes, options);
  std::size_t ws = 0;
  for (std::size_t i = 0; i < net.layers.size(); ++i) {
    const LayerSpec& layer = net.layers[i];
    InspectRow row;
    row.name = layer.name;
    row.kind = layer.kind;
    row.bottoms = layer.bottoms;
    row.top = layer.top;
    row.output = shapes.layer(layer.name).output;
    row.matmul = layer_matmul(layer, shapes);
    row.flops = report.flops.layers[i].flops;
    row.parameter_bytes = report.memory.parameters[i].bytes;
    if (layer.kind == LayerKind::Convolution) row.workspace_bytes = report.memory.workspace[ws++].bytes;
    report.rows.push_back(std::move(row));
  }
  return report;
}

namespace detail {

inline std::string printf_string(const char* fmt, ...) {
  char buf[512];
  va_list args;
  va_start(args, fmt);
  std::vsnprintf(buf, sizeof buf, fmt, args);
  va_end(args);
  return buf;
}

inline std::string shape_text(const TensorShape& s) {
  return "(" + std::to_string(s.channels) + ", " + std::to_string(s.height) + ", " +
         std::to_string(s.width) + ")";
}

inline std::string matmul_text(const MatMulSpec& mm) {
  std::string s = "(" + std::to_string(mm.n) + ", " + std::to_string(mm.m) + ", " + std::to_string(mm.k) + ")";
  if (mm.group_repeat > 1) s += " x" + std::to_string(mm.group_repeat);
  return s;
}

inline const char* convention_name(WorkspaceConvention c) {
  return c == WorkspaceConvention::Sum ? "sum" : "max";
}

inline nlohmann::ordered_json shape_json(const TensorShape& s) {
  return nlohmann::ordered_json::array({s.channels, s.height, s.width});
}

inline nlohmann::ordered_json matmul_json(const MatMulSpec& mm) {
  return {{"n", mm.n}, {"m", mm.m}, {"k", mm.k}, {"group_repeat", mm.group_repeat}};
}

}  // namespace detail

inline nlohmann::ordered_json inspect_to_json(const InspectReport& r) {
  using nlohmann::ordered_json;
  ordered_json j;
  j["network"] = r.network;
  j["input"] = {{"blob", r.input_name}, {"shape", detail::shape_json(r.input_shape)}};
  j["element_size"] = r.memory.element_size;
  j["workspace_convention"] = detail::convention_name(r.memory.convention);
  j["layers"] = ordered_json::array();
  for (const auto& row : r.rows) {
    ordered_json l;
    l["name"] = row.name;
    l["kind"] = std::string(to_string(row.kind));
    l["bottoms"] = row.bottoms;
    l["top"] = row.top;
    l["output_shape"] = detail::shape_json(row.output);
    l["matmul"] = row.matmul ? detail::matmul_json(*row.matmul) : ordered_json(nullptr);
    l["flops"] = row.flops;
    l["parameter_bytes"] = row.parameter_bytes;
    l["workspace_bytes"] = row.workspace_bytes;
    j["layers"].push_back(std::move(l));
  }
  ordered_json by_kind = ordered_json::object();
  for (LayerKind kind : kAllLayerKinds) {
    if (r.flops.by_kind.count(kind)) by_kind[std::string(to_string(kind))] = r.flops.of_kind(kind);
  }
  j["flops_total"] = r.flops.total;
  j["flops_by_kind"] = by_kind;
  ordered_json blobs = ordered_json::array();
  for (const auto& b : r.memory.data) blobs.push_back({{"blob", b.name}, {"bytes", b.bytes}});
  j["memory"] = {{"parameter_bytes", r.memory.parameter_bytes},
                 {"data_bytes", r.memory.data_bytes},
                 {"workspace_bytes", r.memory.workspace_bytes},
                 {"framework_bytes", r.memory.framework_bytes},
                 {"total_bytes", r.memory.total_bytes()},
                 {"data_blobs", blobs}};
  return j;
}

inline std::string render_report(const InspectReport& r, ReportFormat format) {
  if (format == ReportFormat::Json) return inspect_to_json(r).dump(2) + "\n";
  using detail::printf_string;
  std::string out;
  if (!r.network.empty()) out += "network: " + r.network + "\n";
  out += printf_string("%-28s %-13s %-18s %-24s %12s %12s\n", "layer", "kind", "output",
                       "matmul (n, m, k) xg", "MFLOPs", "params MiB");
  out += printf_string("%-28s %-13s %-18s %-24s %12s %12s\n", r.input_name.c_str(), "Input",
                       detail::shape_text(r.input_shape).c_str(), "-", "-", "-");
  for (const auto& row : r.rows) {
    out += printf_string("%-28s %-13s %-18s %-24s %12.1f %12.1f\n", row.name.c_str(),
                         std::string(to_string(row.kind)).c_str(), detail::shape_text(row.output).c_str(),
                         row.matmul ? detail::matmul_text(*row.matmul).c_str() : "-",
                         static_cast<double>(row.flops) / 1e6, to_mib(row.parameter_bytes));
  }
  if (r.rows.empty()) return out;
  out += printf_string("total MFLOPs: %.1f\n", static_cast<double>(r.flops.total) / 1e6);
  for (LayerKind kind : kAllLayerKinds) {
    if (!r.flops.by_kind.count(kind)) continue;
    out += printf_string("  %-13s %12.1f MFLOPs %6.2f%%\n", std::string(to_string(kind)).c_str(),
                         static_cast<double>(r.flops.of_kind(kind)) / 1e6, 100.0 * r.flops.share(kind));
  }
  out += printf_string("memory (%llu-byte elements): parameters %.1f MiB, data %.1f MiB, workspace %.1f MiB (%s), total %.1f MiB\n",
                       static_cast<unsigned long long>(r.memory.element_size), to_mib(r.memory.parameter_bytes),
                       to_mib(r.memory.data_bytes), to_mib(r.memory.workspace_bytes),
                       detail::convention_name(r.memory.convention), to_mib(r.memory.total_bytes()));
  return out;
}

// ---------------------------------------------------------------------------
// Timing output
// ---------------------------------------------------------------------------

inline nlohmann::ordered_json estimate_to_json(const TimingEstimate& est, const TimingModel& model) {
  using nlohmann::ordered_json;
  ordered_json j;
  j["model_kind"] = model.is_cpu() ? "cpu_linear" : "gpu_piecewise";
  j["source_profile_label"] = model.source_profile_label;
  j["matmuls"] = ordered_json::array();
  for (const auto& e : est.matmuls) {
    ordered_json row = {{"layer", e.spec.layer}};
    const ordered_json mm = detail::matmul_json(e.spec);
    for (const auto& [key, value] : mm.items()) row[key] = value;
    row["single_ms"] = e.single_ms;
    row["total_ms"] = e.total_ms;
    row["extrapolated"] = e.extrapolated;
    j["matmuls"].push_back(std::move(row));
  }
  j["total_ms"] = est.total_ms;
  j["excluded"] = est.excluded;
  j["coverage"] = est.coverage_note();
  return j;
}

inline std::string render_estimate(const TimingEstimate& est, const TimingModel& model, ReportFormat format) {
  if (format == ReportFormat::Json) return estimate_to_json(est, model).dump(2) + "\n";
  using detail::printf_string;
  std::string out = "model: " + std::string(model.is_cpu() ? "cpu_linear" : "gpu_piecewise") +
                    " from '" + model.source_profile_label + "'\n";
  out += printf_string("%-28s %-24s %12s %12s\n", "layer", "matmul (n, m, k) xg", "single ms", "total ms");
  for (const auto& e : est.matmuls) {
    out += printf_string("%-28s %-24s %12.3f %12.3f%s\n", e.spec.layer.c_str(),
                         detail::matmul_text(e.spec).c_str(), e.single_ms, e.total_ms,
                         e.extrapolated ? "  *" : "");
  }
  out += printf_string("predicted total: %.3f ms\n", est.total_ms);
  out += est.coverage_note() + "\n";
  return out;
}

inline std::string render_measurement(const NetworkMeasurement& m) {
  using detail::printf_string;
  std::string out = printf_string("%-28s %-24s %12s %12s\n", "layer", "matmul (n, m, k) xg", "single ms", "total ms");
  for (const auto& l : m.layers) {
    out += printf_string("%-28s %-24s %12.3f %12.3f\n", l.spec.layer.c_str(),
                         detail::matmul_text(l.spec).c_str(), l.single_ms, l.total_ms);
  }
  out += printf_string("measured total: %.3f ms\n", m.total_ms);
  return out;
}

struct ComparisonRow {
  std::string layer;
  double predicted_ms = 0.0;
  double measured_ms = 0.0;
  double relative_error = 0.0;  // |predicted - measured| / measured
};

struct Comparison {
  std::vector<ComparisonRow> rows;
  double predicted_total_ms = 0.0;
  double measured_total_ms = 0.0;
  double total_relative_error = 0.0;
  double median_relative_error = 0.0;
};

inline double relative_error(double predicted, double measured) {
  return measured > 0.0 ? std::abs(predicted - measured) / measured : 0.0;
}

// Pairs estimate and measurement rows by layer name.
inline Comparison compare(const TimingEstimate& est, const NetworkMeasurement& meas) {
  Comparison c;
  std::vector<double> errors;
  for (const auto& m : meas.layers) {
    for (const auto& e : est.matmuls) {
      if (e.spec.layer != m.spec.layer) continue;
      ComparisonRow row{m.spec.layer, e.total_ms, m.total_ms, relative_error(e.total_ms, m.total_ms)};
      errors.push_back(row.relative_error);
      c.rows.push_back(std::move(row));
    }
  }
  c.predicted_total_ms = est.total_ms;
  c.measured_total_ms = meas.total_ms;
  c.total_relative_error = relative_error(est.total_ms, meas.total_ms);
  c.median_relative_error = detail::median_of(errors);
  return c;
}

inline std::string render_comparison(const Comparison& c) {
  using detail::printf_string;
  std::string out = printf_string("%-28s %14s %14s %10s\n", "layer", "predicted ms", "measured ms", "rel err");
  for (const auto& r : c.rows) {
    out += printf_string("%-28s %14.3f %14.3f %9.1f%%\n", r.layer.c_str(), r.predicted_ms, r.measured_ms,
                         100.0 * r.relative_error);
  }
  out += printf_string("%-28s %14.3f %14.3f %9.1f%%\n", "total", c.predicted_total_ms, c.measured_total_ms,
                       100.0 * c.total_relative_error);
  out += printf_string("median per-layer relative error: %.1f%%\n", 100.0 * c.median_relative_error);
  return out;
}

}  // namespace augur
