#pragma once

#include <algorithm>
#include <cstdint>
#include <exception>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "augur/error.hpp"
#include "augur/gemm_bench.hpp"
#include "augur/memory.hpp"
#include "augur/profile.hpp"
#include "augur/prototxt.hpp"
#include "augur/report.hpp"
#include "augur/shape_inference.hpp"
#include "augur/timing_model.hpp"
#include "augur/workload.hpp"

namespace augur {

namespace detail {

// Parse errors carry line:col; prefixing the path gives path:line:col.
inline NetworkDescriptor load_descriptor(const std::string& path) {
  const std::string text = read_text_file(path);
  try {
    return parse_descriptor(text);
  } catch (const ParseError& e) {
    throw Error(path + ":" + e.what());
  }
}

inline std::vector<MatMulSpec> descriptor_matmuls(const NetworkDescriptor& net) {
  return extract_matmuls(net, infer_shapes(net));
}

inline TimingModel load_model(const std::string& path) { return parse_model(read_text_file(path)); }

inline ReportFormat parse_format(const std::string& s) {
  return s == "json" ? ReportFormat::Json : ReportFormat::Table;
}

}  // namespace detail

// Runs one subcommand. `args` excludes the program name.
// Returns 0 on success, 1 on bad input, 2 on internal failure.
inline int run_cli(std::vector<std::string> args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Estimate CNN forward-pass compute time, FLOPs and memory", "augur"};
  app.require_subcommand(1);

  std::string descriptor_path, format = "table", workspace = "sum", model_path, output_path;
  std::string grid_path, profile_path, processor;
  std::uint64_t element_size = 4;
  std::vector<std::int64_t> m_boundaries;
  std::int64_t small_n = 128;
  std::int64_t iterations = 10;
  bool no_fc = false;

  auto* inspect = app.add_subcommand("inspect", "Per-layer shapes, matmuls, FLOPs and memory");
  inspect->add_option("descriptor", descriptor_path, "Network descriptor")->required();
  inspect->add_option("--format", format)->check(CLI::IsMember({"table", "json"}));
  inspect->add_option("--bytes-per-element", element_size)->check(CLI::Range(1, 64));
  inspect->add_option("--workspace", workspace)->check(CLI::IsMember({"sum", "max"}));

  auto* profile = app.add_subcommand("profile", "Benchmark a GEMM grid and write a profile CSV");
  profile->add_option("--grid", grid_path, "Grid config file")->required();
  profile->add_option("-o", output_path, "Output profile CSV")->required();

  auto* fit = app.add_subcommand("fit", "Fit a timing model to a profile CSV");
  fit->add_option("profile", profile_path, "Profile CSV")->required();
  fit->add_option("-o", output_path, "Output model file")->required();
  fit->add_option("--processor", processor)->required()->check(CLI::IsMember({"cpu", "gpu"}));
  fit->add_option("--m-boundaries", m_boundaries)->delimiter(',')->expected(2);
  fit->add_option("--small-n", small_n)->check(CLI::PositiveNumber);

  auto* predict = app.add_subcommand("predict", "Predict a network's matmul time from a model");
  predict->add_option("descriptor", descriptor_path, "Network descriptor")->required();
  predict->add_option("--model", model_path, "Model file")->required();
  predict->add_flag("--no-fc", no_fc, "Leave fully connected layers out");
  predict->add_option("--format", format)->check(CLI::IsMember({"table", "json"}));

  auto* measure = app.add_subcommand("measure", "Time a network's matmuls on this host");
  measure->add_option("descriptor", descriptor_path, "Network descriptor")->required();
  measure->add_option("--iterations", iterations)->check(CLI::PositiveNumber);

  auto* cmp = app.add_subcommand("compare", "Predicted against measured matmul times");
  cmp->add_option("descriptor", descriptor_path, "Network descriptor")->required();
  cmp->add_option("--model", model_path, "Model file")->required();
  cmp->add_option("--iterations", iterations)->check(CLI::PositiveNumber);

  try {
    std::reverse(args.begin(), args.end());
    app.parse(args);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return 0;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return 0;
  } catch (const CLI::ParseError& e) {
    err << "augur: " << e.what() << "\n";
    return 1;
  }

  try {
    if (inspect->parsed()) {
      MemoryOptions options;
      options.element_size = element_size;
      options.workspace = workspace == "max" ? WorkspaceConvention::Max : WorkspaceConvention::Sum;
      const auto report = build_inspect_report(detail::load_descriptor(descriptor_path), options);
      out << render_report(report, detail::parse_format(format));
    } else if (profile->parsed()) {
      const GridConfig grid = parse_grid_config(read_text_file(grid_path));
      std::size_t done = 0;
      const DeviceProfile result = run_grid(grid, [&](const std::string& line) {
        err << "[" << ++done << "/" << grid.cell_count() << "] " << line << "\n";
      });
      write_text_file(output_path, write_profile_csv(result.samples));
      out << "wrote " << result.samples.size() << " samples to " << output_path << "\n";
    } else if (fit->parsed()) {
      const ProcessorKind kind = processor == "gpu" ? ProcessorKind::GpuLike : ProcessorKind::CpuLike;
      const DeviceProfile prof = load_profile(profile_path, kind);
      GpuFitConfig config;
      if (!m_boundaries.empty()) {
        if (m_boundaries[0] < 1 || m_boundaries[0] >= m_boundaries[1])
          throw Error("--m-boundaries needs 1 <= A < B");
        config.m_boundaries = {m_boundaries[0], m_boundaries[1]};
      }
      config.small_n_threshold = small_n;
      const TimingModel model = fit_model(prof, config);
      write_text_file(output_path, dump_model(model));
      std::ostringstream os;
      os << "fit " << (model.is_cpu() ? "cpu_linear" : "gpu_piecewise") << " model on "
         << model.residuals.count << " samples; median relative residual "
         << 100.0 * model.residuals.median_rel << "%, max " << 100.0 * model.residuals.max_rel
         << "%\n";
      if (model.residuals.design_rank < kBasisSize)
        os << "design rank " << model.residuals.design_rank
           << " of 8: one basis direction is not pinned by the profile; minimum-norm solution used\n";
      os << "wrote " << output_path << "\n";
      out << os.str();
    } else if (predict->parsed()) {
      const TimingModel model = detail::load_model(model_path);
      const auto matmuls = detail::descriptor_matmuls(detail::load_descriptor(descriptor_path));
      const TimingEstimate est = predict_network(model, matmuls, !no_fc);
      out << render_estimate(est, model, detail::parse_format(format));
    } else if (measure->parsed()) {
      const auto matmuls = detail::descriptor_matmuls(detail::load_descriptor(descriptor_path));
      out << render_measurement(measure_network(matmuls, iterations));
    } else if (cmp->parsed()) {
      const TimingModel model = detail::load_model(model_path);
      const auto matmuls = detail::descriptor_matmuls(detail::load_descriptor(descriptor_path));
      const TimingEstimate est = predict_network(model, matmuls);
      out << render_comparison(compare(est, measure_network(matmuls, iterations)));
    }
  } catch (const Error& e) {
    err << "augur: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    err << "augur: internal error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}

inline int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  std::vector<std::string> args;
  for (int i = 1; i < argc; ++i) args.emplace_back(argv[i]);
  return run_cli(std::move(args), out, err);
}

}  // namespace augur
