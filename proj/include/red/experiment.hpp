#pragma once

// Config-driven reproduction harness: builds degradation scenarios
// (deblurring, super-resolution), tunes (lambda, sigma) over a grid by final
// average PSNR, and emits per-iteration PSNR curves, restored images and a
// machine-readable summary. Grid cells run concurrently up to a worker
// count; aggregation is slot-based and therefore independent of scheduling.

#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <exception>
#include <filesystem>
#include <fstream>
#include <functional>
#include <mutex>
#include <optional>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "red/bicubic.hpp"
#include "red/image.hpp"
#include "red/noise.hpp"
#include "red/operators.hpp"
#include "red/pgm.hpp"
#include "red/solver.hpp"
#include "red/synthetic.hpp"
#include "red/version.hpp"

namespace red {

enum class Task { Deblur, SuperResolution };

struct KernelSpec {
  enum class Type { Uniform, Gaussian };
  Type type = Type::Gaussian;
  int size = 9;
  double std_dev = 1.6;  // Gaussian only
};

inline BlurKernel make_kernel(const KernelSpec& spec) {
  return spec.type == KernelSpec::Type::Uniform ? make_uniform_kernel(spec.size)
                                                : make_gaussian_kernel(spec.size, spec.std_dev);
}

struct ScenarioConfig {
  std::string scenario_id = "scenario";
  Task task = Task::Deblur;
  KernelSpec kernel{};
  int scale = 1;  // super-resolution only
  double sigma_e = 0.0;
  DenoiserSpec denoiser{};
  Fidelity fidelity = Fidelity::LeastSquares;
  StepRule step_rule = StepRule::InverseLipschitz;
  std::vector<double> lambda_grid;
  std::vector<double> sigma_grid;
  int iterations = 0;  // 0 selects the per-task default
  std::uint64_t seed = 0;
  int crop_border = 0;
  double cg_tol = 1e-6;
  int cg_max_iters = 100;

  int effective_iterations() const {
    return iterations > 0 ? iterations : (task == Task::Deblur ? 200 : 500);
  }

  // 0.01 * sigma_e^2, and exactly 0 in the noiseless case.
  double pinv_eps() const { return 0.01 * sigma_e * sigma_e; }

  void validate() const {
    if (lambda_grid.empty() || sigma_grid.empty())
      throw std::invalid_argument("ScenarioConfig: grids must be non-empty");
    for (double l : lambda_grid)
      if (!(l > 0.0)) throw std::invalid_argument("ScenarioConfig: lambda values must be > 0");
    for (double s : sigma_grid)
      if (!(s > 0.0)) throw std::invalid_argument("ScenarioConfig: sigma values must be > 0");
    if (!(sigma_e >= 0.0)) throw std::invalid_argument("ScenarioConfig: sigma_e must be >= 0");
    if (task == Task::SuperResolution && scale < 2)
      throw std::invalid_argument("ScenarioConfig: super-resolution needs scale >= 2");
    if (step_rule == StepRule::NoiseWeighted &&
        (fidelity != Fidelity::LeastSquares || !(sigma_e > 0.0)))
      throw std::invalid_argument(
          "ScenarioConfig: the noise-weighted step rule needs least squares and sigma_e > 0");
    if (crop_border < 0) throw std::invalid_argument("ScenarioConfig: crop_border must be >= 0");
  }
};

// Default tuning grids: 16 logarithmically spaced lambdas in [0.005, 2.5]
// and 16 linearly spaced sigmas in [0.5, 20].
inline std::vector<double> default_lambda_grid(int count = 16) {
  std::vector<double> grid(count);
  const double lo = std::log(0.005), hi = std::log(2.5);
  for (int i = 0; i < count; ++i)
    grid[i] = std::exp(lo + (hi - lo) * (count == 1 ? 0.0 : static_cast<double>(i) / (count - 1)));
  return grid;
}

inline std::vector<double> default_sigma_grid(int count = 16) {
  std::vector<double> grid(count);
  for (int i = 0; i < count; ++i)
    grid[i] = 0.5 + 19.5 * (count == 1 ? 0.0 : static_cast<double>(i) / (count - 1));
  return grid;
}

struct Scenario {
  DegradationOperator op;
  NoiseSpec noise;
  Task task;
  int scale;
  bool nonstandard_sr_scale;  // scale outside {3, 4} works but is flagged

  // Deblurring starts from the observation itself; super-resolution from its
  // bicubic upsampling.
  Image initial_estimate(const Image& y) const {
    return task == Task::Deblur ? y : bicubic_upsample(y, scale);
  }
};

inline Scenario build_scenario(const ScenarioConfig& cfg, int width, int height) {
  const BlurKernel kernel = make_kernel(cfg.kernel);
  if (cfg.task == Task::Deblur)
    return Scenario{DegradationOperator::blur(kernel, width, height),
                    NoiseSpec{cfg.sigma_e, cfg.seed}, Task::Deblur, 1, false};
  if (cfg.scale < 2)
    throw std::invalid_argument("build_scenario: super-resolution needs scale >= 2");
  return Scenario{DegradationOperator::blur_downsample(kernel, width, height, cfg.scale),
                  NoiseSpec{cfg.sigma_e, cfg.seed}, Task::SuperResolution, cfg.scale,
                  cfg.scale != 3 && cfg.scale != 4};
}

struct CellResult {
  double lambda = 0.0;
  double sigma = 0.0;
  bool diverged = false;
  double avg_final_psnr = 0.0;
  std::string failure;
};

struct ExperimentResult {
  double chosen_lambda = 0.0;
  double chosen_sigma = 0.0;
  double mu = 0.0;
  std::vector<IterationTrace> per_image;  // traces of the chosen cell
  std::vector<Image> restored;            // final iterates of the chosen cell
  std::vector<double> avg_psnr;           // per iteration, mean over images
  std::vector<double> avg_update_norm;
  std::vector<double> final_psnr;  // per image
  double avg_final_psnr = 0.0;
  std::vector<CellResult> cells;
  double wall_seconds = 0.0;
  double pinv_eps = 0.0;
  std::string pinv_path;  // "fft" for deblurring, "cg" for super-resolution
};

namespace detail {

inline void parallel_for(int count, int workers, const std::function<void(int)>& fn) {
  workers = std::max(1, std::min(workers, count));
  if (workers <= 1) {
    for (int i = 0; i < count; ++i) fn(i);
    return;
  }
  std::atomic<int> next{0};
  std::exception_ptr first_error;
  std::mutex error_mutex;
  std::vector<std::thread> pool;
  pool.reserve(static_cast<std::size_t>(workers));
  for (int t = 0; t < workers; ++t)
    pool.emplace_back([&] {
      while (true) {
        const int i = next.fetch_add(1);
        if (i >= count) return;
        try {
          fn(i);
        } catch (...) {
          std::lock_guard<std::mutex> lock(error_mutex);
          if (!first_error) first_error = std::current_exception();
        }
      }
    });
  for (auto& th : pool) th.join();
  if (first_error) std::rethrow_exception(first_error);
}

}  // namespace detail

// Runs every (lambda, sigma) cell over all images and keeps the cell with
// the best final average PSNR; ties prefer smaller lambda, then smaller
// sigma. Diverged cells are recorded and excluded. The winning cell is re-run
// to collect full traces and restored images.
inline ExperimentResult grid_search(const ScenarioConfig& cfg, const std::vector<Image>& images,
                                    int workers = 1) {
  cfg.validate();
  if (images.empty()) throw std::invalid_argument("grid_search: need at least one image");
  const auto start_time = std::chrono::steady_clock::now();

  const int iterations = cfg.effective_iterations();

  // Per-image observation setup. The noise seed is offset by the image index
  // so realisations differ across images but stay reproducible.
  struct Instance {
    Scenario scenario;
    Image y;
    Image x0;
  };
  std::vector<Instance> instances;
  instances.reserve(images.size());
  for (std::size_t i = 0; i < images.size(); ++i) {
    Scenario scenario = build_scenario(cfg, images[i].width(), images[i].height());
    scenario.noise.seed = cfg.seed + i;
    Image y = add_gaussian_noise(scenario.op.apply(images[i]), scenario.noise);
    Image x0 = scenario.initial_estimate(y);
    instances.push_back(Instance{std::move(scenario), std::move(y), std::move(x0)});
  }

  // The inverse-Lipschitz step for least squares needs the spectral norm of
  // A^T A; hoist it per distinct geometry instead of recomputing per cell.
  std::vector<double> hoisted_mu(images.size(), 1.0);
  if (cfg.fidelity == Fidelity::LeastSquares && cfg.step_rule == StepRule::InverseLipschitz) {
    for (std::size_t i = 0; i < instances.size(); ++i) {
      double mu = 0.0;
      for (std::size_t j = 0; j < i; ++j)
        if (images[j].same_shape(images[i])) {
          mu = hoisted_mu[j];
          break;
        }
      hoisted_mu[i] = mu != 0.0 ? mu : 1.0 / operator_norm_sq(instances[i].scenario.op).value;
    }
  }

  auto make_solver_config = [&](double lambda, double sigma, std::size_t image_index) {
    SolverConfig scfg;
    scfg.fidelity = cfg.fidelity;
    scfg.lambda = lambda;
    scfg.sigma = sigma;
    scfg.step_rule = cfg.step_rule;
    scfg.iterations = iterations;
    scfg.sigma_e = cfg.sigma_e;
    scfg.pinv.eps = cfg.pinv_eps();
    scfg.pinv.cg_tol = cfg.cg_tol;
    scfg.pinv.cg_max_iters = cfg.cg_max_iters;
    if (cfg.step_rule == StepRule::InverseLipschitz)
      scfg.mu = cfg.fidelity == Fidelity::BackProjection ? 1.0 : hoisted_mu[image_index];
    return scfg;
  };

  auto run_cell = [&](double lambda, double sigma, std::vector<SolveResult>* runs) {
    double psnr_sum = 0.0;
    for (std::size_t i = 0; i < images.size(); ++i) {
      SolverConfig scfg = make_solver_config(lambda, sigma, i);
      SolveResult run = solve(instances[i].y, instances[i].scenario.op, cfg.denoiser, scfg,
                              instances[i].x0, &images[i], cfg.crop_border);
      psnr_sum += run.trace.back().psnr.value();
      if (runs) runs->push_back(std::move(run));
    }
    return psnr_sum / static_cast<double>(images.size());
  };

  ExperimentResult result;
  const int cell_count = static_cast<int>(cfg.lambda_grid.size() * cfg.sigma_grid.size());
  result.cells.resize(static_cast<std::size_t>(cell_count));
  detail::parallel_for(cell_count, workers, [&](int index) {
    const double lambda = cfg.lambda_grid[index / cfg.sigma_grid.size()];
    const double sigma = cfg.sigma_grid[index % cfg.sigma_grid.size()];
    CellResult& cell = result.cells[static_cast<std::size_t>(index)];
    cell.lambda = lambda;
    cell.sigma = sigma;
    try {
      cell.avg_final_psnr = run_cell(lambda, sigma, nullptr);
    } catch (const DivergedError& e) {
      cell.diverged = true;
      cell.failure = e.what();
    } catch (const CgError& e) {
      cell.diverged = true;
      cell.failure = e.what();
    }
  });

  const CellResult* best = nullptr;
  for (const CellResult& cell : result.cells) {
    if (cell.diverged) continue;
    if (best == nullptr || cell.avg_final_psnr > best->avg_final_psnr ||
        (cell.avg_final_psnr == best->avg_final_psnr &&
         (cell.lambda < best->lambda ||
          (cell.lambda == best->lambda && cell.sigma < best->sigma))))
      best = &cell;
  }
  if (best == nullptr) throw std::runtime_error("grid_search: every grid cell diverged");

  result.chosen_lambda = best->lambda;
  result.chosen_sigma = best->sigma;

  std::vector<SolveResult> runs;
  runs.reserve(images.size());
  run_cell(best->lambda, best->sigma, &runs);
  result.mu = runs.front().mu;
  result.avg_psnr.assign(static_cast<std::size_t>(iterations), 0.0);
  result.avg_update_norm.assign(static_cast<std::size_t>(iterations), 0.0);
  for (SolveResult& run : runs) {
    for (int k = 0; k < iterations; ++k) {
      result.avg_psnr[k] += run.trace[k].psnr.value();
      result.avg_update_norm[k] += run.trace[k].update_norm;
    }
    result.final_psnr.push_back(run.trace.back().psnr.value());
    result.per_image.push_back(std::move(run.trace));
    result.restored.push_back(std::move(run.image));
  }
  for (int k = 0; k < iterations; ++k) {
    result.avg_psnr[k] /= static_cast<double>(images.size());
    result.avg_update_norm[k] /= static_cast<double>(images.size());
  }
  result.avg_final_psnr = result.avg_psnr.back();
  result.pinv_eps = cfg.pinv_eps();
  result.pinv_path = cfg.task == Task::Deblur ? "fft" : "cg";
  result.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start_time).count();
  return result;
}

inline const char* to_string(Fidelity f) {
  return f == Fidelity::LeastSquares ? "ls" : "bp";
}

struct MethodRun {
  Fidelity fidelity;
  ExperimentResult result;
};

struct RunOutput {
  std::string scenario_id;
  std::uint64_t seed = 0;
  nlohmann::json config_echo;
  int image_count = 0;
  std::vector<MethodRun> methods;
};

namespace detail {

inline std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.12g", v);
  return buf;
}

}  // namespace detail

// Writes curves.csv, the restored images and summary.json. Re-running with
// identical inputs produces byte-identical files.
inline void emit_results(const RunOutput& out, const std::string& out_dir) {
  namespace fs = std::filesystem;
  fs::create_directories(out_dir);

  {
    std::ofstream csv(fs::path(out_dir) / "curves.csv", std::ios::binary);
    if (!csv) throw std::runtime_error("emit_results: cannot write curves.csv");
    csv << "method,scenario_id,iteration,psnr_avg";
    for (int i = 1; i <= out.image_count; ++i) csv << ",psnr_img" << i;
    csv << ",update_norm\n";
    for (const MethodRun& run : out.methods) {
      const ExperimentResult& r = run.result;
      for (std::size_t k = 0; k < r.avg_psnr.size(); ++k) {
        csv << to_string(run.fidelity) << ',' << out.scenario_id << ',' << (k + 1) << ','
            << detail::format_double(r.avg_psnr[k]);
        for (const IterationTrace& trace : r.per_image)
          csv << ',' << detail::format_double(trace[k].psnr.value());
        csv << ',' << detail::format_double(r.avg_update_norm[k]) << '\n';
      }
    }
  }

  for (const MethodRun& run : out.methods)
    for (std::size_t i = 0; i < run.result.restored.size(); ++i)
      save_pgm(run.result.restored[i],
               (fs::path(out_dir) / ("restored_" + std::string(to_string(run.fidelity)) + "_" +
                                     out.scenario_id + "_img" + std::to_string(i + 1) + ".pgm"))
                   .string());

  nlohmann::json summary;
  summary["scenario_id"] = out.scenario_id;
  summary["seed"] = out.seed;
  summary["library_version"] = kVersion;
  summary["config"] = out.config_echo;
  nlohmann::json methods = nlohmann::json::array();
  for (const MethodRun& run : out.methods) {
    const ExperimentResult& r = run.result;
    nlohmann::json m;
    m["method"] = to_string(run.fidelity);
    m["chosen_lambda"] = r.chosen_lambda;
    m["chosen_sigma"] = r.chosen_sigma;
    m["mu"] = r.mu;
    m["final_psnr_avg"] = r.avg_final_psnr;
    m["final_psnr_per_image"] = r.final_psnr;
    m["pinv_eps"] = r.pinv_eps;
    m["pinv_path"] = r.pinv_path;
    m["wall_seconds"] = r.wall_seconds;
    int diverged = 0;
    for (const CellResult& c : r.cells) diverged += c.diverged ? 1 : 0;
    m["grid_cells"] = r.cells.size();
    m["grid_cells_diverged"] = diverged;
    methods.push_back(std::move(m));
  }
  summary["methods"] = std::move(methods);
  std::ofstream js(fs::path(out_dir) / "summary.json", std::ios::binary);
  if (!js) throw std::runtime_error("emit_results: cannot write summary.json");
  js << summary.dump(2) << '\n';
}

struct SyntheticImagesSpec {
  int count = 0;
  int width = 0;
  int height = 0;
};

struct RunConfig {
  ScenarioConfig scenario;  // per-method fidelity is filled in during the run
  std::vector<Fidelity> methods;
  std::vector<std::string> image_paths;
  SyntheticImagesSpec synthetic{};
};

inline RunConfig parse_run_config(const nlohmann::json& j) {
  RunConfig rc;
  ScenarioConfig& cfg = rc.scenario;

  cfg.scenario_id = j.value("scenario_id", std::string("scenario"));
  const std::string task = j.at("task").get<std::string>();
  if (task == "deblur")
    cfg.task = Task::Deblur;
  else if (task == "sr")
    cfg.task = Task::SuperResolution;
  else
    throw std::invalid_argument("config: task must be \"deblur\" or \"sr\"");

  const auto& jk = j.at("kernel");
  const std::string ktype = jk.at("type").get<std::string>();
  if (ktype == "uniform") {
    cfg.kernel.type = KernelSpec::Type::Uniform;
    cfg.kernel.size = jk.at("size").get<int>();
  } else if (ktype == "gaussian") {
    cfg.kernel.type = KernelSpec::Type::Gaussian;
    cfg.kernel.size = jk.at("size").get<int>();
    cfg.kernel.std_dev = jk.at("std").get<double>();
  } else {
    throw std::invalid_argument("config: kernel.type must be \"uniform\" or \"gaussian\"");
  }

  if (cfg.task == Task::SuperResolution) cfg.scale = j.at("scale").get<int>();
  cfg.sigma_e = j.value("sigma_e", 0.0);

  const auto& jd = j.at("denoiser");
  const std::string dtype = jd.at("type").get<std::string>();
  if (dtype == "tv") {
    cfg.denoiser = DenoiserSpec::tv(jd.value("inner_iters", 40), jd.value("dual_step", 0.25));
  } else if (dtype == "wavelet") {
    cfg.denoiser = DenoiserSpec::wavelet(jd.at("levels").get<int>());
  } else if (dtype == "tikhonov") {
    const std::string op = jd.value("operator", std::string("gradient"));
    if (op == "identity")
      cfg.denoiser = DenoiserSpec::tikhonov(TikhonovOperator::Identity);
    else if (op == "gradient")
      cfg.denoiser = DenoiserSpec::tikhonov(TikhonovOperator::DiscreteGradient);
    else
      throw std::invalid_argument("config: tikhonov operator must be \"identity\" or \"gradient\"");
  } else {
    throw std::invalid_argument("config: denoiser.type must be \"tv\", \"wavelet\" or \"tikhonov\"");
  }

  const std::string rule = j.value("step_rule", std::string("inverse_lipschitz"));
  if (rule == "inverse_lipschitz")
    cfg.step_rule = StepRule::InverseLipschitz;
  else if (rule == "noise_weighted")
    cfg.step_rule = StepRule::NoiseWeighted;
  else
    throw std::invalid_argument(
        "config: step_rule must be \"inverse_lipschitz\" or \"noise_weighted\"");

  cfg.lambda_grid =
      j.contains("lambda_grid") ? j.at("lambda_grid").get<std::vector<double>>() : default_lambda_grid();
  cfg.sigma_grid =
      j.contains("sigma_grid") ? j.at("sigma_grid").get<std::vector<double>>() : default_sigma_grid();
  cfg.iterations = j.value("iterations", 0);
  cfg.seed = j.value("seed", static_cast<std::uint64_t>(0));
  cfg.crop_border = j.value("crop_border", 0);
  cfg.cg_tol = j.value("cg_tol", 1e-6);
  cfg.cg_max_iters = j.value("cg_max_iters", 100);

  if (!j.contains("methods") || !j.at("methods").is_array() || j.at("methods").empty())
    throw std::invalid_argument("config: methods must be a non-empty array");
  for (const auto& m : j.at("methods")) {
    const std::string name = m.get<std::string>();
    if (name == "ls")
      rc.methods.push_back(Fidelity::LeastSquares);
    else if (name == "bp")
      rc.methods.push_back(Fidelity::BackProjection);
    else
      throw std::invalid_argument("config: methods entries must be \"ls\" or \"bp\"");
  }

  if (j.contains("images")) rc.image_paths = j.at("images").get<std::vector<std::string>>();
  if (j.contains("synthetic_images")) {
    const auto& js = j.at("synthetic_images");
    rc.synthetic.count = js.at("count").get<int>();
    rc.synthetic.width = js.at("width").get<int>();
    rc.synthetic.height = js.at("height").get<int>();
  }
  if (rc.image_paths.empty() && rc.synthetic.count <= 0)
    throw std::invalid_argument("config: provide \"images\" or \"synthetic_images\"");

  // Stamp the per-method fidelity later; run validation on a copy for each.
  for (Fidelity f : rc.methods) {
    ScenarioConfig probe = cfg;
    probe.fidelity = f;
    probe.validate();
  }
  return rc;
}

struct ImageSet {
  std::vector<Image> images;
  std::vector<std::string> names;
};

inline ImageSet load_image_set(const RunConfig& rc) {
  ImageSet set;
  if (!rc.image_paths.empty()) {
    for (const std::string& path : rc.image_paths) {
      set.images.push_back(load_pgm(path));
      set.names.push_back(std::filesystem::path(path).stem().string());
    }
    return set;
  }
  for (int i = 0; i < rc.synthetic.count; ++i) {
    set.images.push_back(
        make_synthetic_image(rc.synthetic.width, rc.synthetic.height, rc.scenario.seed + 1000 + i));
    set.names.push_back("synthetic" + std::to_string(i + 1));
  }
  return set;
}

}  // namespace red
