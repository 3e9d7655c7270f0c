#include <CLI11.hpp>
#include <filesystem>
#include <fstream>
#include <iostream>

#include "mifs/report.hpp"

namespace fs = std::filesystem;

int main(int argc, char** argv) {
  CLI::App app{"Markov IFS workbench"};
  app.require_subcommand(1);

  std::string scenarioPath, outDir = ".", reportPath, svgDir = ".";
  std::vector<int> depths;
  double etaOv = -1, epsOv = -1, eps0Ov = -1;
  int jobs = 0;

  auto* vcmd = app.add_subcommand("validate", "schema and structural checks");
  vcmd->add_option("scenario", scenarioPath, "scenario JSON path")->required();

  auto* rcmd = app.add_subcommand("run", "full perturbation pipeline");
  rcmd->add_option("scenario", scenarioPath, "scenario JSON path")->required();
  rcmd->add_option("--depths", depths, "absolute pre-solution depths")
      ->delimiter(',');
  rcmd->add_option("--eta", etaOv, "target normal strength override");
  rcmd->add_option("--eps", epsOv, "C1 budget override");
  rcmd->add_option("--eps0", eps0Ov, "C0 budget override");
  rcmd->add_option("--jobs", jobs, "worker count (0 = hardware)");
  rcmd->add_option("--out", outDir, "output directory");

  auto* dcmd = app.add_subcommand("render", "SVG / CSV from a run report");
  dcmd->add_option("report", reportPath, "report JSON path")->required();
  dcmd->add_option("--svg", svgDir, "output directory");

  CLI11_PARSE(app, argc, argv);

  const std::uint64_t seed = mifs::seed_from_env();

  try {
    if (vcmd->parsed()) {
      mifs::Scenario s;
      try {
        s = mifs::load_scenario(scenarioPath);
      } catch (const mifs::SchemaError& e) {
        std::cerr << "input error: " << e.what() << "\n";
        return 2;
      }
      const auto res = mifs::run_validate(s);
      std::cout << res.reportJson << "\n";
      return res.pass ? 0 : 2;
    }
    if (rcmd->parsed()) {
      mifs::Scenario s;
      try {
        s = mifs::load_scenario(scenarioPath);
      } catch (const mifs::SchemaError& e) {
        std::cerr << "input error: " << e.what() << "\n";
        return 2;
      }
      if (!s.hasPipeline || !s.preparedParams || !s.flexiblePath) {
        std::cerr << "stage precondition: scenario has no pipeline block, "
                     "prepared parameters or flexible path\n";
        return 3;
      }
      mifs::PipelineConfig cfg = s.pipeline;
      if (!depths.empty()) {
        for (int d : depths)
          if (d <= 0) {
            std::cerr << "input error: depths must be positive integers\n";
            return 2;
          }
        cfg.absoluteDepths = depths;
      }
      if (jobs > 0) cfg.jobs = jobs;
      if (etaOv > 0) cfg.etaTarget = etaOv;
      if (epsOv > 0) cfg.eps = epsOv;
      if (eps0Ov > 0) cfg.eps0 = eps0Ov;
      mifs::RunResult res;
      try {
        res = mifs::run_pipeline(s, cfg, seed, jobs);
      } catch (const mifs::DepthInfeasible& e) {
        std::cerr << "stage build_presolution: " << e.what() << "\n";
        return 3;
      } catch (const mifs::CostExceedsHomothety& e) {
        std::cerr << "stage build_presolution: " << e.what() << "\n";
        return 3;
      } catch (const mifs::GeometryInfeasible& e) {
        std::cerr << "stage build_gamma_family: " << e.what() << "\n";
        return 3;
      } catch (const mifs::DomainError& e) {
        std::cerr << "stage pipeline: " << e.what() << "\n";
        return 3;
      }
      fs::create_directories(outDir);
      {
        std::ofstream f(fs::path(outDir) / "report.json");
        f << res.reportJson << "\n";
      }
      {
        std::ofstream f(fs::path(outDir) / "run.log");
        f << res.logText;
      }
      std::cerr << res.logText;
      std::cout << (fs::path(outDir) / "report.json").string() << "\n";
      return res.pass ? 0 : 3;
    }
    if (dcmd->parsed()) {
      std::ifstream in(reportPath);
      if (!in) {
        std::cerr << "input error: cannot open report " << reportPath << "\n";
        return 2;
      }
      std::string text((std::istreambuf_iterator<char>(in)),
                       std::istreambuf_iterator<char>());
      fs::create_directories(svgDir);
      const auto files = mifs::render_report(text, svgDir);
      for (const auto& f : files) std::cout << f << "\n";
      return 0;
    }
  } catch (const mifs::SchemaError& e) {
    std::cerr << "input error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "internal numeric failure: " << e.what() << "\n";
    return 4;
  }
  return 0;
}
