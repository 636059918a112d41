// patchrec: learn patch dictionaries, degrade images through linear
// measurement operators, and recover them by sparse coding over multiple
// non-overlapping patch partitions.

#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

#include "patchrec/bench.hpp"
#include "patchrec/dictionary.hpp"
#include "patchrec/dictlearn.hpp"
#include "patchrec/image.hpp"
#include "patchrec/operators.hpp"
#include "patchrec/recover.hpp"
#include "patchrec/rng.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace patchrec;

namespace {

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

void write_text_atomic(const std::string& path, const std::string& content) {
  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot open " + tmp + " for writing");
    out << content;
    if (!out) throw std::runtime_error("write failed for " + tmp);
  }
  fs::rename(tmp, path);
}

// Writers go through a temp file plus rename, so partially written outputs
// never appear under the final name.
template <typename Saver>
void save_atomic(const std::string& path, Saver&& saver) {
  const std::string tmp = path + ".tmp";
  saver(tmp);
  fs::rename(tmp, path);
}

std::pair<int, int> parse_patch_size(const std::string& text) {
  const auto x = text.find('x');
  if (x == std::string::npos) throw UsageError("patch size must look like 8x8");
  try {
    const int r = std::stoi(text.substr(0, x));
    const int c = std::stoi(text.substr(x + 1));
    if (r < 1 || c < 1) throw UsageError("patch dims must be positive");
    return {r, c};
  } catch (const std::invalid_argument&) {
    throw UsageError("patch size must look like 8x8");
  }
}

double parse_lambda(const std::string& text, int patch_dim) {
  if (text == "auto") return 0.8 / std::sqrt(static_cast<double>(patch_dim));
  try {
    const double v = std::stod(text);
    if (v <= 0.0) throw UsageError("lambda must be positive");
    return v;
  } catch (const std::invalid_argument&) {
    throw UsageError("lambda must be a number or 'auto'");
  }
}

// ---------------------------------------------------------------------------
// learn

int cmd_learn(const std::string& images_dir, int patches_per_image,
              const std::string& patch_text, int atoms,
              const std::string& lambda_text, const std::string& out_path,
              std::uint64_t seed, int max_iters) {
  const auto [n1, n2] = parse_patch_size(patch_text);
  if (atoms < 1) throw UsageError("--atoms must be positive");

  if (!fs::is_directory(images_dir)) {
    throw UsageError("--images is not a directory: " + images_dir);
  }
  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(images_dir)) {
    if (entry.is_regular_file() && entry.path().extension() == ".pgm") {
      files.push_back(entry.path());
    }
  }
  std::sort(files.begin(), files.end());
  if (files.empty()) throw UsageError("no .pgm files in " + images_dir);

  std::vector<Image> images;
  images.reserve(files.size());
  for (const fs::path& f : files) {
    try {
      images.push_back(load_pgm(f.string()));
    } catch (const std::exception& e) {
      throw UsageError("unreadable image " + f.string() + ": " + e.what());
    }
  }

  int skipped = 0;
  Eigen::MatrixXd X = sample_training_patches(
      images, patches_per_image, n1, n2, derive_seed(seed, "learn.patches"),
      &skipped);
  if (skipped > 0) {
    std::cerr << "warning: skipped " << skipped
              << " images smaller than the patch\n";
  }
  // Learn on [0, 1]-scale patches; atoms are scale-free.
  X /= 255.0;

  LearnConfig cfg;
  cfg.lambda = parse_lambda(lambda_text, n1 * n2);
  cfg.max_iters = max_iters;
  cfg.rng_seed = derive_seed(seed, "learn.init");
  const Eigen::MatrixXd D0 = random_unit_dictionary(n1 * n2, atoms, cfg.rng_seed);
  const Eigen::MatrixXd Y0 = Eigen::MatrixXd::Zero(atoms, X.cols());

  const LearnResult result = learn(X, D0, Y0, cfg);
  const Dictionary dict = with_dc_atom(n1, n2, result.dictionary);

  save_atomic(out_path, [&](const std::string& p) { save_dictionary(p, dict); });
  write_text_atomic(out_path + ".trace.csv", trace_to_csv(result.trace));

  std::cout << "learned " << atoms << " atoms (+DC) from " << X.cols()
            << " patches in " << result.trace.iterations.size() << " iterations"
            << (result.trace.converged ? "" : " (iteration cap reached)") << "\n";
  return 0;
}

// ---------------------------------------------------------------------------
// degrade

int cmd_degrade(const std::string& image_path, const std::string& op_name,
                double sr, double sigma_hat, std::uint64_t seed,
                const std::string& out_prefix) {
  const Image img = load_pgm(image_path);
  const int N1 = static_cast<int>(img.rows());
  const int N2 = static_cast<int>(img.cols());
  if (sigma_hat < 0.0) throw UsageError("--sigma-hat must be >= 0");

  std::unique_ptr<MeasurementOp> op;
  json manifest;
  manifest["format"] = "PMEAS-MANIFEST-1";
  manifest["op"] = op_name;
  manifest["image_rows"] = N1;
  manifest["image_cols"] = N2;
  manifest["seed"] = seed;
  manifest["sigma_hat"] = sigma_hat;
  manifest["source_image"] = image_path;

  const std::string base = fs::path(out_prefix).filename().string();

  if (op_name == "mask" || op_name == "circulant") {
    if (!(sr > 0.0 && sr <= 1.0)) {
      throw UsageError("--sr must lie in (0, 1] for mask/circulant operators");
    }
    MaskOperator mask =
        MaskOperator::random(N1, N2, sr, derive_seed(seed, "degrade.mask"));
    std::ostringstream mask_text;
    mask_text << N1 << " " << N2 << " " << mask.indices().size() << "\n";
    for (int idx : mask.indices()) mask_text << idx << "\n";
    write_text_atomic(out_prefix + ".mask", mask_text.str());
    manifest["sr"] = sr;
    manifest["mask_file"] = base + ".mask";
    if (op_name == "mask") {
      op = std::make_unique<MaskOperator>(std::move(mask));
    } else {
      const std::uint64_t spectrum_seed = derive_seed(seed, "degrade.spectrum");
      manifest["spectrum_seed"] = spectrum_seed;
      op = std::make_unique<CirculantOperator>(
          CirculantOperator::random_spectrum(N1, N2, spectrum_seed),
          mask.indices());
    }
  } else if (op_name == "blur-average" || op_name == "blur-motion") {
    const Eigen::MatrixXd kernel =
        op_name == "blur-average" ? average_blur_kernel() : motion_blur_kernel();
    write_text_atomic(out_prefix + ".kernel", kernel_to_ascii(kernel));
    manifest["kernel"] = op_name == "blur-average" ? "average" : "motion";
    manifest["kernel_file"] = base + ".kernel";
    op = std::make_unique<BlurOperator>(N1, N2, kernel);
  } else {
    throw UsageError("unknown operator " + op_name +
                     " (expected mask|circulant|blur-average|blur-motion)");
  }

  const MeasurementVector clean = op->measure(img);
  const MeasurementVector b =
      add_noise(clean, sigma_hat, derive_seed(seed, "degrade.noise"));
  save_atomic(out_prefix + ".pmeas",
              [&](const std::string& p) { save_measurements(p, b); });

  manifest["num_measurements"] = b.values.size();
  manifest["complex"] = b.is_complex;
  manifest["sigma"] = b.noise_sigma;
  manifest["measurements_file"] = base + ".pmeas";
  write_text_atomic(out_prefix + ".json", manifest.dump(2) + "\n");

  std::cout << "wrote " << b.values.size()
            << " measurements (sigma = " << b.noise_sigma << ")\n";
  return 0;
}

// ---------------------------------------------------------------------------
// recover

std::unique_ptr<MeasurementOp> rebuild_operator(const json& manifest,
                                                const fs::path& dir) {
  const std::string op_name = manifest.at("op");
  const int N1 = manifest.at("image_rows");
  const int N2 = manifest.at("image_cols");
  if (op_name == "mask" || op_name == "circulant") {
    const fs::path mask_path = dir / manifest.at("mask_file").get<std::string>();
    std::ifstream in(mask_path);
    if (!in) throw std::runtime_error("cannot open " + mask_path.string());
    int rows = 0, cols = 0;
    std::size_t count = 0;
    in >> rows >> cols >> count;
    if (!in || rows != N1 || cols != N2) {
      throw std::runtime_error("mask sidecar does not match manifest dims");
    }
    std::vector<int> indices(count);
    for (std::size_t i = 0; i < count; ++i) in >> indices[i];
    if (!in) throw std::runtime_error("truncated mask sidecar");
    if (op_name == "mask") {
      return std::make_unique<MaskOperator>(N1, N2, std::move(indices));
    }
    const std::uint64_t spectrum_seed = manifest.at("spectrum_seed");
    return std::make_unique<CirculantOperator>(
        CirculantOperator::random_spectrum(N1, N2, spectrum_seed),
        std::move(indices));
  }
  if (op_name == "blur-average" || op_name == "blur-motion") {
    const fs::path kernel_path =
        dir / manifest.at("kernel_file").get<std::string>();
    std::ifstream in(kernel_path);
    if (!in) throw std::runtime_error("cannot open " + kernel_path.string());
    std::stringstream text;
    text << in.rdbuf();
    return std::make_unique<BlurOperator>(N1, N2, kernel_from_ascii(text.str()));
  }
  throw std::runtime_error("manifest names unknown operator " + op_name);
}

std::vector<Partition> parse_partitions(const std::string& text, int N1, int N2,
                                        int n1, int n2) {
  if (text == "3" || text == "5") {
    return default_partitions(N1, N2, n1, n2, text == "3" ? 3 : 5);
  }
  std::vector<Partition> parts;
  std::istringstream in(text);
  std::string item;
  while (std::getline(in, item, ',')) {
    if (item.empty()) continue;
    const auto [r0, c0] = parse_patch_size(item);
    parts.push_back(build_partition(N1, N2, n1, n2, r0, c0));
  }
  if (parts.empty()) throw UsageError("--partitions must be 3, 5, or a corner list");
  return parts;
}

int cmd_recover(const std::string& dict_arg, const std::string& measurements_prefix,
                const std::string& partitions_text, const std::string& nu_text,
                int adaptive, const std::string& truth_path,
                const std::string& out_path, std::uint64_t seed, int rounds) {
  const auto t_start = std::chrono::steady_clock::now();

  const fs::path manifest_path(measurements_prefix + ".json");
  std::ifstream mf(manifest_path);
  if (!mf) throw UsageError("cannot open manifest " + manifest_path.string());
  const json manifest = json::parse(mf);
  const fs::path dir = manifest_path.parent_path();

  const MeasurementVector b = load_measurements(
      (dir / manifest.at("measurements_file").get<std::string>()).string());
  const std::unique_ptr<MeasurementOp> op = rebuild_operator(manifest, dir);
  if (b.values.size() != op->output_size()) {
    throw UsageError("measurement length does not match the manifest operator");
  }
  const int N1 = static_cast<int>(op->input_rows());
  const int N2 = static_cast<int>(op->input_cols());

  const Dictionary dict = dict_arg == "dct" ? build_dct_dictionary(8, 8, 257)
                                            : load_dictionary(dict_arg);
  if (dict.atom_rows > N1 || dict.atom_cols > N2) {
    throw UsageError("dictionary patch exceeds the measured image size");
  }

  const std::vector<Partition> partitions =
      parse_partitions(partitions_text, N1, N2, dict.atom_rows, dict.atom_cols);

  double nu = 0.0;
  const bool is_blur = manifest.at("op").get<std::string>().rfind("blur", 0) == 0;
  if (nu_text == "auto") {
    const double sigma = manifest.at("sigma");
    // Noiseless data would give nu = 0; keep the model defined.
    nu = sigma > 0.0 ? default_nu(is_blur, sigma) : 1e-6;
  } else {
    try {
      nu = std::stod(nu_text);
    } catch (const std::invalid_argument&) {
      throw UsageError("--nu must be a number or 'auto'");
    }
    if (nu <= 0.0) throw UsageError("--nu must be positive");
  }

  SolverConfig solver;
  solver.rng_seed = derive_seed(seed, "recover.solver");

  AveragedRecovery result;
  if (adaptive != 0) {
    AdaptiveConfig acfg;
    acfg.rounds = rounds;
    acfg.learn.lambda = 0.0;  // auto: 0.8 / sqrt(n)
    acfg.learn.rng_seed = derive_seed(seed, "recover.learn");
    result = recover_adaptive(dict, *op, b.values, nu, partitions, acfg, solver);
  } else {
    result = recover_averaged(dict, *op, b.values, nu, partitions, solver);
  }
  save_atomic(out_path, [&](const std::string& p) { save_pgm(p, result.average); });

  const auto t_stop = std::chrono::steady_clock::now();

  json report;
  report["config"] = {{"dict", dict_arg},
                      {"measurements", measurements_prefix},
                      {"partitions", partitions_text},
                      {"nu", nu},
                      {"adaptive", adaptive},
                      {"rounds", adaptive != 0 ? rounds : 0},
                      {"seed", seed}};
  report["iterations"] = result.iterations;
  report["wall_time_s"] = std::chrono::duration<double>(t_stop - t_start).count();
  if (!truth_path.empty()) {
    const Image truth = load_pgm(truth_path);
    json per = json::array();
    for (const Image& m : result.per_partition) per.push_back(psnr(m, truth));
    report["per_partition_psnr"] = per;
    report["averaged_psnr"] = psnr(result.average, truth);
  }
  write_text_atomic(out_path + ".json", report.dump(2) + "\n");

  std::cout << "recovered " << N1 << "x" << N2 << " image from "
            << b.values.size() << " measurements over " << partitions.size()
            << " partitions\n";
  return 0;
}

// ---------------------------------------------------------------------------
// bench-synth

int cmd_bench_synth(const std::string& scale, int trials, std::uint64_t seed,
                    const std::string& out_prefix) {
  if (trials < 1) throw UsageError("--trials must be >= 1");
  std::vector<SynthSpec> grid;
  if (scale == "desk") {
    for (int K : {32, 64}) {
      for (int p : {320, 1600}) {
        for (int r : {2, 3, 4}) {
          grid.push_back(SynthSpec{16, K, p, r, trials, 0});
        }
      }
    }
  } else if (scale == "paper") {
    const int n = 36;
    for (const auto& [K, p] : std::vector<std::pair<int, int>>{
             {2 * n, 20 * n}, {2 * n, 100 * n}, {4 * n, 100 * n}}) {
      for (int r : {4, 6, 8, 10, 12}) {
        grid.push_back(SynthSpec{n, K, p, r, trials, 0});
      }
    }
  } else {
    throw UsageError("--scale must be desk or paper");
  }

  std::vector<BenchCell> cells;
  for (SynthSpec spec : grid) {
    const std::string cell_id = "n" + std::to_string(spec.n) + "_K" +
                                std::to_string(spec.K) + "_p" +
                                std::to_string(spec.p) + "_r" +
                                std::to_string(spec.r);
    spec.rng_seed = derive_seed(seed, cell_id);
    LearnConfig cfg;
    cfg.lambda = 0.5 / std::sqrt(static_cast<double>(spec.n));
    cells.push_back(run_synth_bench(spec, cfg));
    std::cout << cell_id << ": " << cells.back().mean_rate_pct << "%\n";
  }
  write_text_atomic(out_prefix + ".csv", bench_to_csv(cells));
  write_text_atomic(out_prefix + ".json", bench_to_json(cells));
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"patch-dictionary learning and whole-image recovery"};
  app.require_subcommand(1);

  auto* learn_cmd = app.add_subcommand("learn", "learn a dictionary from images");
  std::string images_dir, patch_text = "8x8", lambda_text = "auto", learn_out;
  int patches_per_image = 100, atoms = 256, learn_max_iters = 1000;
  std::uint64_t learn_seed = 0;
  learn_cmd->add_option("--images", images_dir, "directory of .pgm training images")
      ->required();
  learn_cmd->add_option("--patches-per-image", patches_per_image,
                        "random patches sampled per image");
  learn_cmd->add_option("--patch", patch_text, "patch size, e.g. 8x8");
  learn_cmd->add_option("--atoms", atoms, "learned atoms (a DC atom is appended)");
  learn_cmd->add_option("--lambda", lambda_text, "l1 weight or 'auto' (0.8/sqrt(n))");
  learn_cmd->add_option("--out", learn_out, "output PDICT1 file")->required();
  learn_cmd->add_option("--seed", learn_seed, "RNG seed");
  learn_cmd->add_option("--max-iters", learn_max_iters, "iteration cap");

  auto* degrade_cmd = app.add_subcommand("degrade", "measure and corrupt an image");
  std::string degrade_image, degrade_op, degrade_out;
  double sr = 0.0, sigma_hat = 0.0;
  std::uint64_t degrade_seed = 0;
  degrade_cmd->add_option("--image", degrade_image, "input PGM image")->required();
  degrade_cmd
      ->add_option("--op", degrade_op, "mask|circulant|blur-average|blur-motion")
      ->required();
  degrade_cmd->add_option("--sr", sr, "sampling ratio in (0,1] for mask/circulant");
  degrade_cmd->add_option("--sigma-hat", sigma_hat, "relative noise level");
  degrade_cmd->add_option("--seed", degrade_seed, "RNG seed");
  degrade_cmd->add_option("--out", degrade_out, "output prefix")->required();

  auto* recover_cmd =
      app.add_subcommand("recover", "recover an image from measurements");
  std::string dict_arg, measurements_prefix, partitions_text = "3",
              nu_text = "auto", truth_path, recover_out;
  int adaptive = 0, rounds = 1;
  std::uint64_t recover_seed = 0;
  recover_cmd->add_option("--dict", dict_arg, "PDICT1 file or 'dct'")->required();
  recover_cmd
      ->add_option("--measurements", measurements_prefix, "prefix written by degrade")
      ->required();
  recover_cmd->add_option("--partitions", partitions_text,
                          "3, 5, or corner list like 8x8,8x4");
  recover_cmd->add_option("--nu", nu_text, "fidelity weight or 'auto'");
  recover_cmd->add_option("--adaptive", adaptive, "1 = refresh the dictionary");
  recover_cmd->add_option("--rounds", rounds, "adaptive refresh rounds");
  recover_cmd->add_option("--truth", truth_path, "ground truth PGM for PSNR");
  recover_cmd->add_option("--out", recover_out, "output PGM path")->required();
  recover_cmd->add_option("--seed", recover_seed, "RNG seed");

  auto* bench_cmd =
      app.add_subcommand("bench-synth", "synthetic dictionary recovery benchmark");
  std::string scale = "desk", bench_out;
  int trials = 10;
  std::uint64_t bench_seed = 0;
  bench_cmd->add_option("--scale", scale, "desk or paper");
  bench_cmd->add_option("--trials", trials, "trials per grid cell");
  bench_cmd->add_option("--seed", bench_seed, "RNG seed");
  bench_cmd->add_option("--out", bench_out, "output prefix (.csv/.json)")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    if (*learn_cmd) {
      return cmd_learn(images_dir, patches_per_image, patch_text, atoms,
                       lambda_text, learn_out, learn_seed, learn_max_iters);
    }
    if (*degrade_cmd) {
      return cmd_degrade(degrade_image, degrade_op, sr, sigma_hat, degrade_seed,
                         degrade_out);
    }
    if (*recover_cmd) {
      return cmd_recover(dict_arg, measurements_prefix, partitions_text, nu_text,
                         adaptive, truth_path, recover_out, recover_seed, rounds);
    }
    if (*bench_cmd) {
      return cmd_bench_synth(scale, trials, bench_seed, bench_out);
    }
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
