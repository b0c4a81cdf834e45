#include <exception>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "maskfuse/error.hpp"
#include "maskfuse/harness.hpp"

namespace {

using maskfuse::ExitCode;

struct Cli {
  maskfuse::RunConfig run;
  std::string format = "csv";
  std::string pred_dir;
  std::vector<std::string> orders;
  std::vector<double> thresholds;
  maskfuse::GtBoxStudyConfig study;
  std::string preset = "clean";
  maskfuse::SynthConfig synth;
  int images = -1;
  std::uint64_t synth_seed = 0;
  int jobs = 0;
};

void add_common(CLI::App* sub, Cli& cli, bool needs_manifest) {
  auto* m = sub->add_option("--manifest", cli.run.manifest, "dataset manifest JSON");
  if (needs_manifest) m->required()->check(CLI::ExistingFile);
  sub->add_option("--strategy", cli.run.strategy,
                  "ordered:<c1,c2,c3,c4> or random:<seed>")
      ->capture_default_str();
  sub->add_option("--threshold", cli.run.score_threshold,
                  "keep detections with score strictly above this")
      ->capture_default_str();
  sub->add_option("--seed", cli.run.seed, "run seed")->capture_default_str();
  sub->add_flag("--clip-to-box", cli.run.clip_to_box,
                "intersect each mask with its detection box");
  sub->add_option("--min-area", cli.run.min_area,
                  "smallest gt component turned into a box")
      ->capture_default_str();
  sub->add_option("--jobs", cli.jobs, "worker threads (default $MASKFUSE_JOBS or 1)");
  sub->add_option("--out", cli.run.out, "output directory")->capture_default_str();
  sub->add_option("--format", cli.format, "report format")
      ->check(CLI::IsMember({"csv", "json"}))
      ->capture_default_str();
}

int code(ExitCode c) { return static_cast<int>(c); }

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Ordered mask fusion for instance-to-semantic segmentation"};
  app.require_subcommand(1);
  Cli cli;

  auto* fuse = app.add_subcommand("fuse", "fuse per-detection masks into semantic maps");
  add_common(fuse, cli, true);
  fuse->add_option("--palette", cli.run.palette,
                   "also write colorized maps: 'default' or a palette JSON");

  auto* eval = app.add_subcommand("eval", "score predicted maps against ground truth");
  add_common(eval, cli, true);
  eval->add_option("--pred", cli.pred_dir, "directory of <image_id>.png predictions")
      ->required();

  auto* sweep_order =
      app.add_subcommand("sweep-order", "evaluate fusion orders on one dataset");
  add_common(sweep_order, cli, true);
  sweep_order
      ->add_option("--orders", cli.orders,
                   "'all', or orders separated by ';' (also repeatable)")
      ->delimiter(';');

  auto* sweep_threshold =
      app.add_subcommand("sweep-threshold", "evaluate a grid of score thresholds");
  add_common(sweep_threshold, cli, true);
  sweep_threshold
      ->add_option("--thresholds", cli.thresholds, "comma list (default 0.0..0.9)")
      ->delimiter(',');

  auto* gtbox =
      app.add_subcommand("gtbox-study", "segment from ground-truth boxes with jitter");
  add_common(gtbox, cli, true);
  gtbox->add_option("--sigmas", cli.study.sigmas, "box jitter sigmas in pixels")
      ->delimiter(',');
  gtbox->add_option("--morph-radius", cli.study.morph_radius,
                    "dilate (>0) or erode (<0) oracle masks");
  gtbox->add_option("--flip-prob", cli.study.boundary_flip_prob,
                    "boundary pixel flip probability")
      ->check(CLI::Range(0.0, 1.0));

  auto* synth = app.add_subcommand("synth", "write a synthetic dataset");
  synth->add_option("--preset", cli.preset, "clean, disjoint, noisy or contested")
      ->capture_default_str();
  synth->add_option("--out", cli.synth.out, "dataset directory")->required();
  synth->add_option("--images", cli.images, "number of scenes");
  synth->add_option("--seed", cli.synth_seed, "dataset seed");
  synth->add_option("--jobs", cli.jobs, "worker threads");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : code(ExitCode::kConfigError);
  }

  const int jobs = cli.jobs > 0 ? cli.jobs : maskfuse::default_jobs();
  cli.run.jobs = jobs;

  try {
    cli.run.format = maskfuse::parse_report_format(cli.format);
    if (fuse->parsed()) {
      return code(maskfuse::cmd_fuse(cli.run, std::cerr).code);
    }
    if (eval->parsed()) {
      return code(maskfuse::cmd_eval(cli.run, cli.pred_dir, std::cerr).code);
    }
    if (sweep_order->parsed()) {
      const auto table = maskfuse::cmd_sweep_order(cli.run, cli.orders, std::cerr);
      std::cout << maskfuse::format_report_csv(table);
      return 0;
    }
    if (sweep_threshold->parsed()) {
      const auto table =
          maskfuse::cmd_sweep_threshold(cli.run, cli.thresholds, std::cerr);
      std::cout << maskfuse::format_report_csv(table);
      return 0;
    }
    if (gtbox->parsed()) {
      const auto table = maskfuse::cmd_gtbox_study(cli.run, cli.study, std::cerr);
      std::cout << maskfuse::format_report_csv(table);
      return 0;
    }
    if (synth->parsed()) {
      maskfuse::SynthConfig config = maskfuse::synth_preset(cli.preset);
      config.out = cli.synth.out;
      if (cli.images >= 0) config.images = cli.images;
      if (synth->count("--seed") > 0) config.seed = cli.synth_seed;
      config.jobs = jobs;
      maskfuse::cmd_synth(config, std::cerr);
      return 0;
    }
  } catch (const maskfuse::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return code(ExitCode::kConfigError);
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << "\n";
    return code(ExitCode::kInternal);
  }
  return code(ExitCode::kInternal);
}
