#include "cli.hpp"

#include <cstdlib>
#include <fstream>
#include <iomanip>
#include <memory>
#include <optional>
#include <sstream>

#include "CLI11.hpp"
#include "focusdd/analyzer.hpp"
#include "focusdd/codec.hpp"
#include "focusdd/composer.hpp"
#include "focusdd/labeler.hpp"
#include "focusdd/manifest.hpp"
#include "focusdd/ntf.hpp"
#include "focusdd/parallel.hpp"
#include "focusdd/saliency.hpp"
#include "focusdd/synthetic.hpp"
#include "focusdd/verify.hpp"

namespace focusdd::cli {
namespace {

namespace fs = std::filesystem;

enum class Level { kError = 0, kWarn = 1, kInfo = 2, kDebug = 3 };

class Logger {
 public:
  explicit Logger(std::ostream& err) : err_(err) {
    if (const char* env = std::getenv("FOCUSDD_LOG")) {
      const std::string v = env;
      if (v == "error") level_ = Level::kError;
      else if (v == "warn") level_ = Level::kWarn;
      else if (v == "info") level_ = Level::kInfo;
      else if (v == "debug") level_ = Level::kDebug;
    }
  }
  void operator()(Level level, const std::string& msg) const {
    static constexpr const char* kNames[] = {"error", "warn", "info", "debug"};
    if (level <= level_) err_ << "[focusdd " << kNames[static_cast<int>(level)] << "] " << msg << "\n";
  }

 private:
  std::ostream& err_;
  Level level_ = Level::kInfo;
};

struct Size {
  int height = 0;
  int width = 0;
};

Size parse_size(const std::string& text, const char* flag) {
  Size s;
  const auto x = text.find('x');
  try {
    if (x == std::string::npos) {
      s.height = s.width = std::stoi(text);
    } else {
      s.height = std::stoi(text.substr(0, x));
      s.width = std::stoi(text.substr(x + 1));
    }
  } catch (const std::exception&) {
    throw ValidationError(std::string(flag) + " expects HxW or N, got '" + text + "'");
  }
  if (s.height < 1 || s.width < 1) throw ValidationError(std::string(flag) + " must be positive");
  return s;
}

struct ProviderFlags {
  std::string provider = "vit";
  std::string weights;
  int patch_size = 8;
  std::string input = "32x32";
  int channels = 3;
  int classes = 10;
  std::optional<int> attention_block;

  void add_to(CLI::App* app) {
    app->add_option("--weights", weights, "NTF weights file (vit provider)");
    app->add_option("--provider", provider, "Attention provider")->check(CLI::IsMember({"vit", "saliency"}));
    app->add_option("--patch-size", patch_size, "Patch size (saliency provider)");
    app->add_option("--input", input, "Model input HxW (saliency provider)");
    app->add_option("--channels", channels, "Model channels (saliency provider)");
    app->add_option("--classes", classes, "Class count (saliency provider)");
    app->add_option("--attention-block", attention_block, "Block whose attention feeds the grid (-1 = last)");
  }

  std::unique_ptr<AttentionProvider> build() const {
    if (provider == "saliency") {
      const Size in = parse_size(input, "--input");
      ModelConfig cfg;
      cfg.patch_size = patch_size;
      cfg.input_height = in.height;
      cfg.input_width = in.width;
      cfg.channels = channels;
      cfg.num_classes = classes;
      return std::make_unique<SaliencyProvider>(cfg);
    }
    if (weights.empty()) throw ValidationError("--weights is required for the vit provider");
    const ModelWeights w = load_weights(weights);
    ModelConfig cfg = ModelConfig::from_metadata(w.metadata);
    if (attention_block) cfg.attention_block = *attention_block;
    return std::make_unique<VisionTransformer>(cfg, w);
  }

  nlohmann::ordered_json describe() const {
    nlohmann::ordered_json j{{"provider", provider}};
    if (provider == "vit") j["weights"] = fs::path(weights).filename().string();
    return j;
  }
};

// Values from a --config JSON file fill every option the command line left unset.
void apply_config_file(CLI::App* app, const std::string& path) {
  if (path.empty()) return;
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open config file " + path);
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError("config file " + path + ": " + e.what());
  }
  if (!j.is_object()) throw ValidationError("config file " + path + " must hold a JSON object");
  for (CLI::Option* opt : app->get_options()) {
    const std::string name = opt->get_single_name();
    if (name.empty() || name == "config" || opt->count() > 0) continue;
    for (const std::string& key : {name, [&] {
           std::string alt = name;
           std::replace(alt.begin(), alt.end(), '-', '_');
           return alt;
         }()}) {
      if (!j.contains(key)) continue;
      const auto& v = j[key];
      const std::string text = v.is_string() ? v.get<std::string>() : v.dump();
      try {
        opt->add_result(text);
        opt->run_callback();
      } catch (const CLI::Error& e) {
        throw ValidationError("config file " + path + ": '" + key + "': " + e.what());
      }
      break;
    }
  }
}

void write_text(const std::string& target, const std::string& text, std::ostream& out) {
  if (target == "-") {
    out << text;
    return;
  }
  write_file(target, std::span(reinterpret_cast<const std::uint8_t*>(text.data()), text.size()));
}

std::vector<NamedImage> collect_images(const fs::path& source) {
  std::vector<NamedImage> images;
  if (fs::is_directory(source)) {
    std::vector<fs::path> files;
    for (const auto& entry : fs::recursive_directory_iterator(source)) {
      if (!entry.is_regular_file()) continue;
      const auto ext = entry.path().extension().string();
      if (ext == ".png" || ext == ".ppm" || ext == ".pgm") files.push_back(entry.path());
    }
    std::sort(files.begin(), files.end());
    for (const auto& f : files) images.push_back({fs::relative(f, source).generic_string(), load_image(f)});
  } else {
    for (const auto& r : read_manifest(source).records) images.push_back({r.path.generic_string(), load_image(r.path)});
  }
  if (images.empty()) throw ValidationError("no images found under " + source.string());
  return images;
}

std::string format_number(double v) {
  std::ostringstream s;
  s << std::setprecision(15) << v;
  return s.str();
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  const Logger log(err);
  CLI::App app{"Attention-guided dataset distillation"};
  app.require_subcommand(1);
  unsigned workers = default_workers();
  app.add_option("--workers", workers, "Worker threads")->check(CLI::PositiveNumber);

  // distill
  auto* distill = app.add_subcommand("distill", "Run the full distillation pipeline");
  std::string d_data, d_out, d_config, d_out_size = "224x224", d_area = "sum";
  ProviderFlags d_provider;
  DistillConfig d_cfg;
  std::optional<int> d_keys, d_backgrounds;
  distill->add_option("--data", d_data, "Dataset root or JSONL manifest")->required();
  distill->add_option("--out", d_out, "Output directory")->required();
  distill->add_option("--config", d_config, "JSON config file");
  distill->add_option("--ipc", d_cfg.ipc, "Images per class");
  distill->add_option("--alpha", d_cfg.selector.alpha, "Window side ratio in (0, 1]");
  distill->add_option("--eta", d_cfg.selector.eta, "Area-score balancing factor");
  distill->add_option("--seed", d_cfg.seed, "RNG seed");
  distill->add_option("--key-count", d_keys, "M, key images per class (default 3*ipc)");
  distill->add_option("--background-count", d_backgrounds, "N, background images per class (default ipc)");
  distill->add_option("--m", d_cfg.patches_per_composite, "Key patches per composite");
  distill->add_option("--n", d_cfg.backgrounds_per_composite, "Backgrounds per composite");
  distill->add_option("--out-size", d_out_size, "Composite HxW");
  distill->add_option("--area-mode", d_area, "sum|mean")->check(CLI::IsMember({"sum", "mean"}));
  distill->add_flag("--shuffle-keys", d_cfg.shuffle_keys, "Seeded shuffle of key patches");
  distill->add_option("--workers", workers, "Worker threads")->check(CLI::PositiveNumber);
  d_provider.add_to(distill);

  // score
  auto* score = app.add_subcommand("score", "Per-image scoring report (JSON lines)");
  std::string s_data, s_out = "-", s_config, s_area = "sum";
  SelectorConfig s_sel;
  ProviderFlags s_provider;
  score->add_option("--data", s_data, "Dataset root or JSONL manifest")->required();
  score->add_option("--out", s_out, "Output file or -");
  score->add_option("--config", s_config, "JSON config file");
  score->add_option("--alpha", s_sel.alpha, "Window side ratio in (0, 1]");
  score->add_option("--eta", s_sel.eta, "Area-score balancing factor");
  score->add_option("--area-mode", s_area, "sum|mean")->check(CLI::IsMember({"sum", "mean"}));
  score->add_option("--workers", workers, "Worker threads")->check(CLI::PositiveNumber);
  s_provider.add_to(score);

  // relabel
  auto* relabel_cmd = app.add_subcommand("relabel", "Region soft labels for a distilled directory");
  std::string r_dir, r_config;
  ProviderFlags r_provider;
  RelabelOptions r_opts;
  relabel_cmd->add_option("--dir", r_dir, "Distilled output directory")->required();
  relabel_cmd->add_option("--config", r_config, "JSON config file");
  relabel_cmd->add_option("--random-crops", r_opts.random_crops, "Random crops per composite (0 = cells)");
  relabel_cmd->add_option("--min-scale", r_opts.min_scale, "Smallest random crop side fraction");
  relabel_cmd->add_option("--max-scale", r_opts.max_scale, "Largest random crop side fraction");
  relabel_cmd->add_option("--seed", r_opts.seed, "RNG seed for random crops");
  relabel_cmd->add_option("--workers", workers, "Worker threads")->check(CLI::PositiveNumber);
  r_provider.add_to(relabel_cmd);

  // dft-sample
  auto* dft = app.add_subcommand("dft-sample", "Per-epoch IPC samples of the real dataset");
  std::string t_data, t_out, t_config;
  int t_ipc = 1, t_epochs = 1, t_first = 0;
  std::uint64_t t_seed = 0;
  dft->add_option("--data", t_data, "Dataset root or JSONL manifest")->required();
  dft->add_option("--out", t_out, "Output directory (writes dft/epoch_<k>.jsonl) or -")->required();
  dft->add_option("--config", t_config, "JSON config file");
  dft->add_option("--ipc", t_ipc, "Images per class");
  dft->add_option("--seed", t_seed, "RNG seed");
  dft->add_option("--epochs", t_epochs, "Number of epochs")->check(CLI::PositiveNumber);
  dft->add_option("--first-epoch", t_first, "Index of the first epoch");

  // analyze
  auto* analyze = app.add_subcommand("analyze", "Dataset analytics");
  analyze->require_subcommand(1);
  auto* snr = analyze->add_subcommand("snr", "Laplacian noise / SNR distribution");
  std::string n_data, n_out = "-", n_kernel = "laplacian", n_config;
  snr->add_option("--data", n_data, "Image directory (recursive) or JSONL manifest")->required();
  snr->add_option("--out", n_out, "Report file or -");
  snr->add_option("--kernel", n_kernel, "laplacian|immerkaer")->check(CLI::IsMember({"laplacian", "immerkaer"}));
  snr->add_option("--config", n_config, "JSON config file");
  auto* ess_cmd = analyze->add_subcommand("ess", "Effective sample size");
  EssParams e_params;
  std::string e_config;
  ess_cmd->add_option("--dprime", e_params.d_prime, "|D'|")->required();
  ess_cmd->add_option("--m", e_params.m, "Key patches per composite");
  ess_cmd->add_option("--n", e_params.n, "Backgrounds per composite");
  ess_cmd->add_option("--gamma", e_params.gamma, "Key-patch degression in [0, 1]");
  ess_cmd->add_option("--beta", e_params.beta, "Background degression in [0, 1]");
  ess_cmd->add_option("--config", e_config, "JSON config file");
  e_params.m = 3;
  e_params.n = 1;

  // verify
  auto* verify = app.add_subcommand("verify", "Run the built-in oracle equivalence suites");
  std::uint64_t v_seed = 0;
  verify->add_option("--seed", v_seed, "Seed for generated cases");

  // gen-weights
  auto* gen = app.add_subcommand("gen-weights", "Write seeded synthetic NTF weights");
  ModelConfig g_cfg;
  std::string g_out, g_input = "32x32";
  std::uint64_t g_seed = 0;
  gen->add_option("--out", g_out, "Output .ntf path")->required();
  gen->add_option("--seed", g_seed, "Weight seed");
  gen->add_option("--depth", g_cfg.depth, "Transformer blocks");
  gen->add_option("--heads", g_cfg.heads, "Attention heads");
  gen->add_option("--dim", g_cfg.embed_dim, "Embedding dimension");
  gen->add_option("--patch-size", g_cfg.patch_size, "Patch size");
  gen->add_option("--classes", g_cfg.num_classes, "Class count");
  gen->add_option("--input", g_input, "Input HxW");
  gen->add_option("--channels", g_cfg.channels, "Input channels");
  gen->add_option("--attention-block", g_cfg.attention_block, "Saliency block (-1 = last)");

  std::vector<std::string> argv_storage = {"focusdd"};
  argv_storage.insert(argv_storage.end(), args.begin(), args.end());
  std::vector<char*> argv;
  for (auto& a : argv_storage) argv.push_back(a.data());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitValidation;
  }

  try {
    if (distill->parsed()) {
      apply_config_file(distill, d_config);
      const Size out_size = parse_size(d_out_size, "--out-size");
      d_cfg.out_height = out_size.height;
      d_cfg.out_width = out_size.width;
      d_cfg.key_count = d_keys;
      d_cfg.background_count = d_backgrounds;
      d_cfg.selector.area_mode = d_area == "mean" ? AreaMode::kMean : AreaMode::kSum;
      d_cfg.validate();
      const auto provider = d_provider.build();
      const DatasetManifest manifest = load_dataset(d_data);
      for (const auto& w : manifest.warnings) log(Level::kWarn, w);
      const auto summary = distill_dataset(manifest, *provider, d_cfg, d_out, workers,
                                           [&](const std::string& m) { log(Level::kInfo, m); },
                                           d_provider.describe());
      log(Level::kInfo, "wrote " + std::to_string(summary.composites) + " composites for " +
                            std::to_string(summary.classes) + " classes to " + d_out);
    } else if (score->parsed()) {
      apply_config_file(score, s_config);
      s_sel.area_mode = s_area == "mean" ? AreaMode::kMean : AreaMode::kSum;
      s_sel.validate();
      const auto provider = s_provider.build();
      const DatasetManifest manifest = load_dataset(s_data);
      for (const auto& w : manifest.warnings) log(Level::kWarn, w);
      std::vector<std::string> lines(manifest.records.size());
      parallel_for(lines.size(), workers, [&](std::size_t i) {
        const auto& rec = manifest.records[i];
        ScoredImage s;
        try {
          s = score_source(prepare_source(rec, provider->config()), *provider, s_sel);
        } catch (const std::exception& e) {
          throw Error("class " + std::to_string(rec.class_id) + " ('" + rec.class_name + "'): " + e.what());
        }
        lines[i] = scored_image_json(s).dump() + "\n";
      });
      std::string text;
      for (const auto& l : lines) text += l;
      write_text(s_out, text, out);
    } else if (relabel_cmd->parsed()) {
      apply_config_file(relabel_cmd, r_config);
      const auto teacher = r_provider.build();
      const auto n = relabel_directory(r_dir, *teacher, r_opts, workers);
      log(Level::kInfo, "labelled " + std::to_string(n) + " composites in " + r_dir);
    } else if (dft->parsed()) {
      apply_config_file(dft, t_config);
      if (t_ipc < 1) throw ValidationError("--ipc must be >= 1");
      const DatasetManifest manifest = load_dataset(t_data);
      for (int e = t_first; e < t_first + t_epochs; ++e) {
        const std::string text = dft_to_jsonl(dft_sample(manifest, t_ipc, t_seed, e));
        write_text(t_out == "-" ? "-" : (fs::path(t_out) / "dft" / ("epoch_" + std::to_string(e) + ".jsonl")).string(),
                   text, out);
      }
    } else if (snr->parsed()) {
      apply_config_file(snr, n_config);
      const auto report = snr_distribution(collect_images(n_data),
                                           n_kernel == "immerkaer" ? NoiseKernel::kImmerkaer : NoiseKernel::kLaplacian);
      for (const auto& name : report.constant_images) log(Level::kWarn, "constant image (infinite SNR): " + name);
      write_text(n_out, snr_report_json(report).dump(2) + "\n", out);
    } else if (ess_cmd->parsed()) {
      apply_config_file(ess_cmd, e_config);
      e_params.validate();
      out << format_number(ess(e_params)) << "\n";
    } else if (verify->parsed()) {
      if (!run_verification(out, v_seed)) {
        log(Level::kError, "verification failed");
        return kExitRuntime;
      }
    } else if (gen->parsed()) {
      const Size in = parse_size(g_input, "--input");
      g_cfg.input_height = in.height;
      g_cfg.input_width = in.width;
      g_cfg.validate();
      save_weights(synthetic_weights(g_cfg, g_seed), g_out);
      log(Level::kInfo, "wrote synthetic weights to " + g_out);
    }
  } catch (const ValidationError& e) {
    log(Level::kError, e.what());
    return kExitValidation;
  } catch (const std::exception& e) {
    log(Level::kError, e.what());
    return kExitRuntime;
  }
  return kExitOk;
}

}  // namespace focusdd::cli
