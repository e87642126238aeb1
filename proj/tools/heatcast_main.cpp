#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "heatcast/bundle.hpp"
#include "heatcast/checkpoint.hpp"
#include "heatcast/common.hpp"
#include "heatcast/config.hpp"
#include "heatcast/eval.hpp"
#include "heatcast/geotiff.hpp"
#include "heatcast/pipeline.hpp"
#include "heatcast/synth.hpp"
#include "heatcast/trainer.hpp"
#include "heatcast/verify.hpp"

namespace fs = std::filesystem;
using namespace heatcast;

namespace {

Config load_config(const std::string& path,
                   const std::vector<std::string>& overrides) {
  Config cfg = path.empty() ? Config() : Config::from_file(path);
  for (const std::string& kv : overrides) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos)
      throw UsageError("--set expects key=value, got '" + kv + "'");
    cfg.set(kv.substr(0, eq), kv.substr(eq + 1));
  }
  return cfg;
}

std::string config_dir(const std::string& config_path) {
  if (config_path.empty()) return ".";
  const auto parent = fs::path(config_path).parent_path();
  return parent.empty() ? "." : parent.string();
}

ArchConfig arch_from_config(const Config& cfg) {
  ArchConfig arch;
  if (cfg.has("model.widths")) arch.widths = cfg.get_int_list("model.widths");
  arch.blocks_per_stage = cfg.get_int("model.blocks_per_stage", 2);
  arch.stem_stride = cfg.get_int("model.stem_stride", 2);
  arch.head_width = cfg.get_int("model.head_width", 32);
  arch.gn_groups = cfg.get_int("model.gn_groups", 8);
  return arch;
}

TrainConfig train_config_from(const Config& cfg, ModelKind kind) {
  TrainConfig t;
  t.batch_size = int(cfg.get_int("train.batch_size", 32));
  t.lr = cfg.get_num("train.lr", TrainConfig::default_lr(kind));
  t.weight_decay = cfg.get_num("train.weight_decay", 0.01);
  t.plateau_patience = int(cfg.get_int("train.plateau_patience", 20));
  t.plateau_factor = cfg.get_num("train.plateau_factor", 0.5);
  t.early_stop_patience = int(cfg.get_int("train.early_stop_patience", 50));
  t.min_delta = cfg.get_num("train.min_delta", 1e-4);
  t.max_epochs = int(cfg.get_int("train.max_epochs", 200));
  t.seed = uint64_t(cfg.get_int("train.seed", 42));
  t.grad_clip = cfg.get_num("train.grad_clip", 0.0);
  t.augment.flip_prob = cfg.get_num("aug.flip_prob", 0.5);
  t.augment.rot_prob = cfg.get_num("aug.rot_prob", 0.25);
  t.augment.shift_frac = cfg.get_num("aug.shift_frac", 0.05);
  t.augment.crop_rows = cfg.get_int("aug.crop_rows", 0);
  t.augment.crop_cols = cfg.get_int("aug.crop_cols", 0);
  t.train_year_min = int(cfg.get_int("split.train_year_min", 2018));
  t.train_year_max = int(cfg.get_int("split.train_year_max", 2021));
  t.val_year = int(cfg.get_int("split.val_year", 2022));
  t.test_year = int(cfg.get_int("split.test_year", 2023));
  return t;
}

int run(int argc, char** argv) {
  CLI::App app{"heatcast: maximum-temperature forecast mapping pipeline"};
  app.require_subcommand(1);

  std::string config_path, out_dir, model_name, data_dir, date_str;
  std::vector<std::string> overrides;
  uint64_t seed = 0;
  bool seed_set = false;
  double resolution = 0.0;

  // synth
  auto* synth_cmd =
      app.add_subcommand("synth", "generate a seeded synthetic scene");
  synth_cmd->add_option("--config", config_path, "run config file");
  synth_cmd->add_option("--out", out_dir, "output directory")->required();
  synth_cmd->add_option("--seed", seed, "override synth.seed")
      ->each([&](const std::string&) { seed_set = true; });
  synth_cmd->add_option("--set", overrides, "override config key=value");

  // build-dataset
  auto* build_cmd = app.add_subcommand(
      "build-dataset", "assemble per-day stacks and targets from raw data");
  build_cmd->add_option("--config", config_path, "run config file")->required();
  build_cmd->add_option("--out", out_dir, "dataset output directory")
      ->required();
  build_cmd->add_option("--resolution", resolution,
                        "target resolution in m/px (overrides grid.resolution)");
  build_cmd->add_option("--set", overrides, "override config key=value");

  // train
  auto* train_cmd = app.add_subcommand("train", "fit a model on a dataset");
  train_cmd->add_option("--config", config_path, "run config file");
  train_cmd->add_option("--data", data_dir, "dataset directory")->required();
  train_cmd->add_option("--model", model_name,
                        "linear|resnet-style|convnext-style");
  train_cmd->add_option("--seed", seed, "override train.seed")
      ->each([&](const std::string&) { seed_set = true; });
  train_cmd->add_option("--out", out_dir, "run output directory")->required();
  train_cmd->add_option("--set", overrides, "override config key=value");

  // evaluate
  std::vector<std::string> ckpt_dirs, data_dirs;
  int eval_year = 0;
  auto* eval_cmd = app.add_subcommand(
      "evaluate", "score checkpoints on their datasets' test year");
  eval_cmd->add_option("--checkpoint", ckpt_dirs, "checkpoint directory")
      ->required();
  eval_cmd
      ->add_option("--data", data_dirs,
                   "dataset directory (one per checkpoint)")
      ->required();
  eval_cmd->add_option("--year", eval_year, "test year (default 2023)");
  eval_cmd->add_option("--out", out_dir, "report output directory")->required();
  eval_cmd->add_option("--set", overrides, "override config key=value");

  // predict
  auto* predict_cmd =
      app.add_subcommand("predict", "export the predicted map for one day");
  predict_cmd->add_option("--checkpoint", config_path, "checkpoint directory")
      ->required();
  predict_cmd->add_option("--data", data_dir, "dataset directory")->required();
  predict_cmd->add_option("--date", date_str, "day to predict (YYYY-MM-DD)")
      ->required();
  predict_cmd->add_option("--out", out_dir, "map output directory")->required();

  // gradcheck
  double tolerance = 1e-4;
  auto* grad_cmd = app.add_subcommand(
      "gradcheck", "finite-difference verification of the tensor engine");
  grad_cmd->add_option("--tolerance", tolerance, "max relative error");

  // ingest
  std::string tif_path, stations_path;
  auto* ingest_cmd =
      app.add_subcommand("ingest", "convert GeoTIFF/CSV inputs to grid bundles");
  ingest_cmd->add_option("--tif", tif_path, "GeoTIFF to convert");
  ingest_cmd->add_option("--stations", stations_path,
                         "station CSV to rasterize into per-day target bundles");
  ingest_cmd->add_option("--config", config_path,
                         "run config (grid for --stations)");
  ingest_cmd->add_option("--out", out_dir, "output directory")->required();
  ingest_cmd->add_option("--set", overrides, "override config key=value");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 1;
  }

  if (synth_cmd->parsed()) {
    Config cfg = load_config(config_path, overrides);
    if (seed_set) cfg.set("synth.seed", std::to_string(seed));
    SynthConfig sc = SynthConfig::from_config(cfg);
    SynthResult r = synth_dataset(sc, out_dir);
    log_info(strprintf("synth: wrote %d days (%d heavy) to %s", r.days_total,
                       r.heavy_days, out_dir.c_str()));
    return 0;
  }

  if (build_cmd->parsed()) {
    Config cfg = load_config(config_path, overrides);
    BuildInputs inputs =
        BuildInputs::from_config(cfg, config_dir(config_path), resolution);
    BuildSummary s = build_dataset(inputs, out_dir);
    log_info(strprintf("build-dataset: %d days (%d ok, %d rejected) -> %s",
                       s.days_total, s.days_ok, s.days_rejected,
                       out_dir.c_str()));
    return 0;
  }

  if (train_cmd->parsed()) {
    Config cfg = load_config(config_path, overrides);
    if (!model_name.empty()) cfg.set("model.kind", model_name);
    const ModelKind kind =
        model_kind_from_string(cfg.get_str("model.kind", "linear"));
    if (seed_set) cfg.set("train.seed", std::to_string(seed));
    ArchConfig arch = arch_from_config(cfg);
    TrainConfig tc = train_config_from(cfg, kind);

    Dataset data = Dataset::load(data_dir);
    FitResult result = fit(data, kind, arch, tc);
    fs::create_directories(out_dir);
    save_checkpoint((fs::path(out_dir) / "checkpoint").string(), result.best);
    write_history_csv((fs::path(out_dir) / "train_log.csv").string(),
                      result.history);
    log_info(strprintf("train: best val MAE %.4f degC at epoch %d (%zu epochs "
                       "run)",
                       result.best.best_val_mae, result.best.best_epoch,
                       result.history.size()));
    return 0;
  }

  if (eval_cmd->parsed()) {
    if (ckpt_dirs.size() != data_dirs.size())
      throw UsageError("evaluate: need one --data per --checkpoint");
    Config cfg = load_config("", overrides);
    const int year = eval_year > 0
                         ? eval_year
                         : int(cfg.get_int("split.test_year", 2023));
    std::vector<EvalReport> reports;
    fs::create_directories(out_dir);
    for (size_t i = 0; i < ckpt_dirs.size(); ++i) {
      Checkpoint ckpt = load_checkpoint(ckpt_dirs[i]);
      Dataset data = Dataset::load(data_dirs[i]);
      EvalReport report = evaluate(ckpt, data, year);
      write_per_day_csv(
          (fs::path(out_dir) / strprintf("per_day_%zu.csv", i)).string(),
          report);
      reports.push_back(std::move(report));
    }
    write_report_csv((fs::path(out_dir) / "report.csv").string(), reports);
    const std::string table = render_report_table(reports);
    {
      std::ofstream tf(fs::path(out_dir) / "report.txt", std::ios::binary);
      tf << table;
    }
    fputs(table.c_str(), stdout);
    return 0;
  }

  if (predict_cmd->parsed()) {
    Checkpoint ckpt = load_checkpoint(config_path);
    Dataset data = Dataset::load(data_dir);
    const Date date = date_from_string(date_str);
    for (const auto& day : data.days) {
      if (!(day.date == date)) continue;
      if (!day.ok)
        throw DataError("predict: day " + date_str + " was rejected at build (" +
                        day.status + ")");
      Tensor<float> map = predict_map(ckpt, day.stack);
      export_map(out_dir, data.grid,
                 std::span<const float>(map.data(), size_t(map.numel())), date);
      log_info("predict: map written to " + out_dir);
      return 0;
    }
    throw DataError("predict: dataset has no day " + date_str);
  }

  if (grad_cmd->parsed()) {
    VerificationReport report = run_gradient_verification(tolerance);
    for (const auto& item : report.items)
      printf("%-28s max_rel_err %.3e over %zu coords  [%s]\n",
             item.name.c_str(), item.max_rel_err, item.coords_checked,
             item.pass ? "ok" : "FAIL");
    if (!report.all_pass()) {
      log_warn("gradient verification failed");
      return 3;
    }
    printf("all gradient checks passed at tolerance %g\n", report.tolerance);
    return 0;
  }

  if (ingest_cmd->parsed()) {
    if (tif_path.empty() == stations_path.empty())
      throw UsageError("ingest: pass exactly one of --tif or --stations");
    if (!tif_path.empty()) {
      GeoTiffData data = read_geotiff(tif_path);
      GridBundle bundle;
      bundle.grid = data.grid;
      if (data.is_float) {
        for (size_t b = 0; b < data.float_bands.size(); ++b) {
          bundle.channels.push_back(strprintf("band%zu", b + 1));
          bundle.bands.push_back(data.float_bands[b]);
          if (data.nodata) bundle.nodata = *data.nodata;
        }
      } else {
        bundle.channels.push_back("class");
        bundle.bands.emplace_back(data.byte_bands.at(0).begin(),
                                  data.byte_bands.at(0).end());
      }
      write_bundle(out_dir, bundle);
      log_info(strprintf("ingest: %zu band(s) %lldx%lld -> %s",
                         bundle.bands.size(), (long long)data.grid.rows,
                         (long long)data.grid.cols, out_dir.c_str()));
      return 0;
    }
    // stations -> per-day target bundles
    Config cfg = load_config(config_path, overrides);
    if (config_path.empty())
      throw UsageError("ingest --stations needs --config for the grid");
    BoundingBox bbox;
    bbox.crs_id = cfg.get_str("grid.crs_id", "local");
    bbox.min_x = cfg.get_num("grid.min_x", 0.0);
    bbox.min_y = cfg.get_num("grid.min_y", 0.0);
    bbox.max_x = cfg.get_num("grid.max_x", 0.0);
    bbox.max_y = cfg.get_num("grid.max_y", 0.0);
    const Grid grid = make_grid(bbox, cfg.get_num("grid.resolution", 100.0));
    StationOptions opts;
    opts.min_readings = int(cfg.get_int("stations.min_readings", 100));
    opts.plausibility_band = cfg.get_bool("stations.plausibility_band", false);
    const auto readings = read_station_csv(stations_path);
    const auto by_day = station_daily_maxima(readings, opts);
    int64_t outside = 0;
    for (const auto& [serial, maxima] : by_day) {
      const Date date = date_from_serial(serial);
      RasterizeResult rr = rasterize_stations(maxima, grid, date);
      outside += rr.outside_count;
      GridBundle bundle;
      bundle.grid = grid;
      bundle.channels = {"t_max", "valid"};
      std::vector<float> tvals = rr.target.values;
      std::vector<float> tmask(tvals.size());
      for (size_t i = 0; i < tvals.size(); ++i) {
        tmask[i] = rr.target.valid[i] ? 1.0f : 0.0f;
        if (!rr.target.valid[i]) tvals[i] = bundle.nodata;
      }
      bundle.bands.push_back(std::move(tvals));
      bundle.bands.push_back(std::move(tmask));
      write_bundle((fs::path(out_dir) / date_to_string(date)).string(), bundle);
    }
    log_info(strprintf("ingest: %zu day target(s) -> %s (%lld stations outside "
                       "grid)",
                       by_day.size(), out_dir.c_str(), (long long)outside));
    return 0;
  }

  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return run(argc, argv);
  } catch (const UsageError& e) {
    fprintf(stderr, "usage error: %s\n", e.what());
    return 1;
  } catch (const NumericalError& e) {
    fprintf(stderr, "numerical error: %s\n", e.what());
    return 3;
  } catch (const DataError& e) {
    fprintf(stderr, "data error: %s\n", e.what());
    return 2;
  } catch (const std::invalid_argument& e) {
    fprintf(stderr, "data error: %s\n", e.what());
    return 2;
  } catch (const std::exception& e) {
    fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
}
