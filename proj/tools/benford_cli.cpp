// benford: command-line front end over the bgd C API.
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <mutex>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "bgd/bgd.h"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitInternal = 1;
constexpr int kExitInput = 2;
constexpr int kExitTraining = 3;
constexpr int kExitFingerprint = 4;

struct Failure {
  int exit_code;
  std::string message;
};

int exit_code_for(bgd_status status) {
  switch (status) {
    case BGD_OK: return kExitOk;
    case BGD_ERR_SINGLE_CLASS: return kExitTraining;
    case BGD_ERR_FINGERPRINT_MISMATCH: return kExitFingerprint;
    case BGD_ERR_INTERNAL: return kExitInternal;
    default: return kExitInput;
  }
}

void check(bgd_status status) {
  if (status != BGD_OK) {
    throw Failure{exit_code_for(status), std::string(bgd_status_name(status)) + ": " + bgd_last_error()};
  }
}

template <typename T, void (*Free)(T*)>
struct Handle {
  T* ptr = nullptr;
  Handle() = default;
  Handle(const Handle&) = delete;
  Handle& operator=(const Handle&) = delete;
  ~Handle() { Free(ptr); }
  T** out() { return &ptr; }
  T* get() const { return ptr; }
};

using Config = Handle<bgd_config, bgd_config_free>;
using Manifest = Handle<bgd_manifest, bgd_manifest_free>;
using Table = Handle<bgd_table, bgd_table_free>;
using Model = Handle<bgd_model, bgd_model_free>;
using Report = Handle<bgd_report, bgd_report_free>;

// Resolved parameters: defaults, then the --config file, then explicit flags.
struct RunConfig {
  std::string command;
  std::string manifest;
  std::string model;
  std::vector<std::string> inputs;
  std::string out;
  std::vector<int> bases{10, 20, 40, 60};
  std::vector<int> freqs{1, 2, 3, 4, 5, 6, 7, 8, 9};
  std::vector<int> qfs{80, 85, 90, 95, 100};
  std::vector<int> jpeg_qfs{100, 95, 90};
  double alpha = 2.0;
  int trees = 100;
  int min_samples_split = 2;
  std::uint64_t seed = 1;
  int jobs = 0;
  std::string mode = "logo";
  std::string scenario = "train_clean_test_compressed";
  double train_fraction = 0.7;
  bool strict = false;
  int groups = 2;
  int images = 200;
  int size = 256;
  std::string cache_dir;

  // Everything that can change an artifact's bytes. jobs and cache_dir are deliberately absent.
  json provenance() const {
    json j;
    j["tool"] = std::string("benford ") + bgd_version();
    j["command"] = command;
    if (command == "extract" || command == "eval") {
      j["manifest"] = manifest;
      j["bases"] = bases;
      j["freqs"] = freqs;
      j["qfs"] = qfs;
      j["alpha"] = alpha;
    }
    if (command == "train" || command == "eval") {
      j["trees"] = trees;
      j["min_samples_split"] = min_samples_split;
      j["seed"] = std::to_string(seed);
    }
    if (command == "train") j["inputs"] = inputs;
    if (command == "eval") {
      j["mode"] = mode;
      if (mode == "split") j["train_fraction"] = train_fraction;
      if (mode == "jpeg") {
        j["scenario"] = scenario;
        j["jpeg_qfs"] = jpeg_qfs;
        j["jpeg_encoder"] = bgd_jpeg_encoder();
      }
    }
    if (command == "extract") j["strict"] = strict;
    return j;
  }

  std::string comment_lines() const {
    return std::string("tool=benford ") + bgd_version() + "\nrun_config=" + provenance().dump() + "\n";
  }
};

template <typename T>
void take(const json& j, const char* key, T& dst) {
  if (j.contains(key)) dst = j.at(key).get<T>();
}

void apply_config_file(const std::string& path, RunConfig& rc) {
  std::ifstream in(path);
  if (!in) throw Failure{kExitInput, "cannot open config file " + path};
  json j;
  try {
    in >> j;
    if (!j.is_object()) throw Failure{kExitInput, "config file must hold a JSON object: " + path};
    take(j, "manifest", rc.manifest);
    take(j, "model", rc.model);
    take(j, "out", rc.out);
    take(j, "bases", rc.bases);
    take(j, "freqs", rc.freqs);
    take(j, "qfs", rc.qfs);
    take(j, "jpeg_qfs", rc.jpeg_qfs);
    take(j, "alpha", rc.alpha);
    take(j, "trees", rc.trees);
    take(j, "min_samples_split", rc.min_samples_split);
    take(j, "seed", rc.seed);
    take(j, "jobs", rc.jobs);
    take(j, "mode", rc.mode);
    take(j, "scenario", rc.scenario);
    take(j, "train_fraction", rc.train_fraction);
    take(j, "strict", rc.strict);
  } catch (const json::exception& e) {
    throw Failure{kExitInput, "bad config file " + path + ": " + e.what()};
  }
}

void write_file(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  const fs::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Failure{kExitInput, "cannot write " + path.string()};
    out << text;
    if (!out) throw Failure{kExitInput, "write failed: " + path.string()};
  }
  fs::rename(tmp, path);
}

void progress(size_t done, size_t total, const char* /*path*/, void* /*user*/) {
  static std::mutex mu;
  const size_t step = total >= 10 ? total / 10 : 1;
  if (done % step != 0 && done != total) return;
  std::lock_guard lock(mu);
  std::fprintf(stderr, "extract: %zu/%zu\n", done, total);
}

bgd_extract_options extract_options(const RunConfig& rc) {
  bgd_extract_options o;
  bgd_extract_options_default(&o);
  o.jobs = rc.jobs;
  o.strict = rc.strict ? 1 : 0;
  o.cache_dir = rc.cache_dir.empty() ? nullptr : rc.cache_dir.c_str();
  o.progress = progress;
  return o;
}

bgd_forest_params forest_params(const RunConfig& rc) {
  bgd_forest_params p;
  bgd_forest_params_default(&p);
  p.tree_count = rc.trees;
  p.min_samples_split = rc.min_samples_split;
  return p;
}

void make_config(const RunConfig& rc, Config& cfg) {
  check(bgd_config_create(rc.bases.data(), rc.bases.size(), rc.freqs.data(), rc.freqs.size(), rc.qfs.data(),
                          rc.qfs.size(), rc.alpha, cfg.out()));
}

void require(const std::string& value, const char* flag) {
  if (value.empty()) throw Failure{kExitInput, std::string("missing required ") + flag};
}

int cmd_extract(const RunConfig& rc) {
  require(rc.manifest, "--manifest");
  require(rc.out, "--out");
  Config cfg;
  make_config(rc, cfg);
  Manifest manifest;
  check(bgd_manifest_load(rc.manifest.c_str(), manifest.out()));
  const auto options = extract_options(rc);
  Table table;
  check(bgd_table_extract(manifest.get(), cfg.get(), &options, table.out()));
  if (fs::path(rc.out).has_parent_path()) fs::create_directories(fs::path(rc.out).parent_path());
  check(bgd_table_write_csv(table.get(), rc.out.c_str(), rc.comment_lines().c_str()));

  size_t failed = 0;
  for (size_t i = 0; i < bgd_table_rows(table.get()); ++i) {
    const char* path = nullptr;
    const char* error = nullptr;
    int ok = 1;
    check(bgd_table_row(table.get(), i, &path, nullptr, &ok, &error));
    if (!ok) {
      std::fprintf(stderr, "benford: %s: %s\n", path, error);
      ++failed;
    }
  }
  std::fprintf(stderr, "wrote %s (%zu rows, %zu features)\n", rc.out.c_str(), bgd_table_rows(table.get()) - failed,
               bgd_table_dimensionality(table.get()));
  return failed ? kExitInput : kExitOk;
}

int cmd_train(const RunConfig& rc) {
  if (rc.inputs.size() != 1) throw Failure{kExitInput, "train expects exactly one features CSV"};
  require(rc.out, "--out");
  Table table;
  check(bgd_table_read_csv(rc.inputs[0].c_str(), table.out()));
  const auto params = forest_params(rc);
  Model model;
  check(bgd_model_train(table.get(), &params, rc.seed, rc.jobs, model.out()));
  if (fs::path(rc.out).has_parent_path()) fs::create_directories(fs::path(rc.out).parent_path());
  check(bgd_model_save(model.get(), rc.out.c_str(), rc.provenance().dump().c_str()));
  std::printf("oob_accuracy=%.6g\n", bgd_model_oob_accuracy(model.get()));
  return kExitOk;
}

bool is_feature_csv(const std::string& path) {
  const auto ext = fs::path(path).extension().string();
  return ext == ".csv" || ext == ".CSV";
}

int cmd_predict(const RunConfig& rc) {
  require(rc.model, "--model");
  if (rc.inputs.empty()) throw Failure{kExitInput, "predict expects at least one image or features CSV"};
  Model model;
  check(bgd_model_load(rc.model.c_str(), model.out()));

  std::string out;
  char line[64];
  const auto emit = [&](const char* path, int label, double score) {
    std::snprintf(line, sizeof line, ",%d,%.6g\n", label, score);
    out += path;
    out += line;
  };
  for (const auto& input : rc.inputs) {
    int label = 0;
    double score = 0.0;
    if (is_feature_csv(input)) {
      Table table;
      check(bgd_table_read_csv(input.c_str(), table.out()));
      for (size_t i = 0; i < bgd_table_rows(table.get()); ++i) {
        const char* path = nullptr;
        check(bgd_table_row(table.get(), i, &path, nullptr, nullptr, nullptr));
        check(bgd_model_predict(model.get(), bgd_table_row_values(table.get(), i), bgd_table_dimensionality(table.get()),
                                bgd_table_fingerprint(table.get()), &label, &score));
        emit(path, label, score);
      }
    } else {
      check(bgd_model_predict_image(model.get(), input.c_str(), &label, &score));
      emit(input.c_str(), label, score);
    }
  }
  if (rc.out.empty()) {
    std::fwrite(out.data(), 1, out.size(), stdout);
  } else {
    write_file(rc.out, out);
  }
  return kExitOk;
}

int cmd_eval(const RunConfig& rc) {
  require(rc.manifest, "--manifest");
  require(rc.out, "--out");
  Manifest manifest;
  check(bgd_manifest_load(rc.manifest.c_str(), manifest.out()));
  const auto options = extract_options(rc);
  const auto params = forest_params(rc);
  Report report;
  if (rc.mode == "sweep") {
    check(bgd_eval_sweep(manifest.get(), rc.alpha, &params, rc.seed, &options, report.out()));
  } else {
    Config cfg;
    make_config(rc, cfg);
    if (rc.mode == "logo") {
      check(bgd_eval_logo(manifest.get(), cfg.get(), &params, rc.seed, &options, report.out()));
    } else if (rc.mode == "split") {
      check(bgd_eval_split(manifest.get(), cfg.get(), rc.train_fraction, &params, rc.seed, &options, report.out()));
    } else if (rc.mode == "jpeg") {
      check(bgd_eval_jpeg(manifest.get(), rc.scenario.c_str(), rc.jpeg_qfs.data(), rc.jpeg_qfs.size(), cfg.get(),
                          &params, rc.seed, &options, report.out()));
    } else {
      throw Failure{kExitInput, "unknown --mode " + rc.mode + " (expected logo, split, sweep or jpeg)"};
    }
  }

  const fs::path dir(rc.out);
  fs::create_directories(dir);
  const std::string comments = rc.comment_lines();
  std::string commented;
  std::istringstream lines(comments);
  for (std::string l; std::getline(lines, l);) commented += "# " + l + "\n";

  json j = json::parse(bgd_report_json(report.get()));
  j["provenance"] = rc.provenance();
  write_file(dir / "report.json", j.dump(1) + "\n");
  write_file(dir / "report.txt", commented + bgd_report_text(report.get()));
  if (const char* csv = bgd_report_sweep_csv(report.get())) write_file(dir / "sweep.csv", commented + csv);
  if (const char* csv = bgd_report_marginals_csv(report.get())) write_file(dir / "marginals.csv", commented + csv);
  std::fputs(bgd_report_text(report.get()), stdout);
  return kExitOk;
}

int cmd_synth(const RunConfig& rc) {
  require(rc.out, "--out");
  check(bgd_synth_corpus(rc.out.c_str(), rc.groups, rc.images, rc.size, rc.seed));
  std::printf("%s\n", (fs::path(rc.out) / "manifest.csv").string().c_str());
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Benford-law GAN image detector"};
  app.set_version_flag("--version", std::string("benford ") + bgd_version());
  app.require_subcommand(1);

  RunConfig flags;
  std::string config_path;

  auto* extract = app.add_subcommand("extract", "Extract Benford features for every manifest image into a CSV");
  auto* train = app.add_subcommand("train", "Train a random forest on a features CSV");
  auto* predict = app.add_subcommand("predict", "Classify images or features CSVs with a trained model");
  auto* eval = app.add_subcommand("eval", "Evaluate on a manifest (logo, split, sweep or jpeg)");
  auto* synth = app.add_subcommand("synth", "Write a synthetic labeled corpus");

  // Options shared by several commands; each one records whether it was given explicitly.
  std::vector<std::pair<CLI::Option*, std::string>> given;
  const auto add = [&](CLI::App* cmd, const std::string& name, auto& dst, const std::string& help) {
    auto* opt = cmd->add_option(name, dst, help);
    given.emplace_back(opt, name);
    return opt;
  };
  for (auto* cmd : {extract, train, predict, eval, synth}) {
    cmd->add_option("--config", config_path, "JSON file with default parameters")->check(CLI::ExistingFile);
    add(cmd, "--out", flags.out, "Output path");
    add(cmd, "--seed", flags.seed, "Random seed");
  }
  for (auto* cmd : {extract, eval}) {
    add(cmd, "--manifest", flags.manifest, "CSV manifest path,label,group");
    add(cmd, "--bases", flags.bases, "Digit bases, e.g. 10,20")->delimiter(',');
    add(cmd, "--freqs", flags.freqs, "Zig-zag DCT frequencies 1..9")->delimiter(',');
    add(cmd, "--alpha", flags.alpha, "Renyi/Tsallis order");
    cmd->add_flag("--strict", flags.strict, "Abort on the first image that fails");
  }
  add(extract, "--qfs", flags.qfs, "Quantization quality factors")->delimiter(',');
  for (auto* cmd : {extract, train, eval}) add(cmd, "--jobs", flags.jobs, "Worker threads (0: all cores)");
  for (auto* cmd : {train, eval}) add(cmd, "--trees", flags.trees, "Number of trees");
  train->add_option("features", flags.inputs, "Features CSV")->required();
  add(predict, "--model", flags.model, "Model JSON");
  predict->add_option("inputs", flags.inputs, "Images or features CSVs")->required();
  add(eval, "--mode", flags.mode, "logo | split | sweep | jpeg")
      ->check(CLI::IsMember({"logo", "split", "sweep", "jpeg"}));
  add(eval, "--scenario", flags.scenario,
      "train_clean_test_compressed | train_compressed | per_qf | per_qf_per_group");
  add(eval, "--qfs", flags.qfs, "Feature QFs; with --mode jpeg, the recompression QFs")->delimiter(',');
  add(eval, "--train-fraction", flags.train_fraction, "Train share for --mode split");
  add(synth, "--groups", flags.groups, "Number of groups");
  add(synth, "--images", flags.images, "Images per group");
  add(synth, "--size", flags.size, "Image side in pixels");

  CLI11_PARSE(app, argc, argv);

  try {
    RunConfig rc;
    auto* active = app.get_subcommands().front();
    rc.command = active->get_name();
    if (!config_path.empty()) apply_config_file(config_path, rc);

    const auto set = [&](const std::string& name) {
      for (const auto& [opt, n] : given) {
        if (n == name && opt->count() > 0) return true;
      }
      return false;
    };
    if (set("--manifest")) rc.manifest = flags.manifest;
    if (set("--model")) rc.model = flags.model;
    if (set("--out")) rc.out = flags.out;
    if (set("--bases")) rc.bases = flags.bases;
    if (set("--freqs")) rc.freqs = flags.freqs;
    if (set("--qfs")) (rc.command == "eval" && (set("--mode") ? flags.mode : rc.mode) == "jpeg" ? rc.jpeg_qfs : rc.qfs) = flags.qfs;
    if (set("--alpha")) rc.alpha = flags.alpha;
    if (set("--trees")) rc.trees = flags.trees;
    if (set("--seed")) rc.seed = flags.seed;
    if (set("--jobs")) rc.jobs = flags.jobs;
    if (set("--mode")) rc.mode = flags.mode;
    if (set("--scenario")) rc.scenario = flags.scenario;
    if (set("--train-fraction")) rc.train_fraction = flags.train_fraction;
    if (set("--groups")) rc.groups = flags.groups;
    if (set("--images")) rc.images = flags.images;
    if (set("--size")) rc.size = flags.size;
    if (flags.strict) rc.strict = true;
    rc.inputs = flags.inputs;
    if (const char* cache = std::getenv("BENFORD_CACHE_DIR")) rc.cache_dir = cache;

    if (rc.command == "extract") return cmd_extract(rc);
    if (rc.command == "train") return cmd_train(rc);
    if (rc.command == "predict") return cmd_predict(rc);
    if (rc.command == "eval") return cmd_eval(rc);
    if (rc.command == "synth") return cmd_synth(rc);
    return kExitInternal;
  } catch (const Failure& f) {
    std::fprintf(stderr, "benford: %s\n", f.message.c_str());
    return f.exit_code;
  } catch (const fs::filesystem_error& e) {
    std::fprintf(stderr, "benford: %s\n", e.what());
    return kExitInput;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "benford: %s\n", e.what());
    return kExitInternal;
  }
}
