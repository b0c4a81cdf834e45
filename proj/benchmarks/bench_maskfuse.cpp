#include <benchmark/benchmark.h>

#include "maskfuse/fusion.hpp"
#include "maskfuse/metrics.hpp"
#include "maskfuse/oracle.hpp"

namespace {

using namespace maskfuse;

const ClassRegistry kReg = ClassRegistry::m4d();

SemanticMap scene(std::int32_t side) {
  SceneSpec spec;
  spec.width = side;
  spec.height = side;
  spec.shapes_per_class = {0, 4, 4, 3, 2};
  spec.overlap_bias = 1.0;
  spec.seed = 7;
  return generate_scene(spec, kReg);
}

std::vector<LabeledMask> masks_for(const SemanticMap& gt) {
  NoiseSpec noise;
  noise.morph_radius = 2;
  std::vector<LabeledMask> out;
  const auto boxes = extract_gt_boxes(gt, kReg, "bench");
  for (std::size_t k = 0; k < boxes.size(); ++k) {
    out.push_back({oracle_segment(gt, boxes[k], noise), boxes[k].category, 1.0, k});
  }
  return out;
}

void BM_RleEncode(benchmark::State& state) {
  const auto gt = scene(static_cast<std::int32_t>(state.range(0)));
  std::vector<std::uint8_t> bits(gt.labels().size());
  for (std::size_t i = 0; i < bits.size(); ++i) bits[i] = gt.labels()[i] == 2;
  for (auto _ : state) benchmark::DoNotOptimize(BinaryMask::encode(bits, gt.canvas()));
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(bits.size()));
}
BENCHMARK(BM_RleEncode)->Arg(256)->Arg(1024);

void BM_RleDecode(benchmark::State& state) {
  const auto masks = masks_for(scene(static_cast<std::int32_t>(state.range(0))));
  for (auto _ : state) {
    for (const auto& m : masks) benchmark::DoNotOptimize(m.mask.decode());
  }
}
BENCHMARK(BM_RleDecode)->Arg(256)->Arg(1024);

void BM_OrderedFusion(benchmark::State& state) {
  const auto gt = scene(static_cast<std::int32_t>(state.range(0)));
  const auto masks = masks_for(gt);
  const auto order = FusionOrder::parse("ship,land,oil_spill,look_alike", kReg);
  for (auto _ : state) {
    benchmark::DoNotOptimize(ordered_mask_fusion(masks, order, gt.canvas()));
  }
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(gt.labels().size()));
}
BENCHMARK(BM_OrderedFusion)->Arg(256)->Arg(1024);

void BM_ConfusionAccumulate(benchmark::State& state) {
  const auto gt = scene(static_cast<std::int32_t>(state.range(0)));
  const auto pred = ordered_mask_fusion(
      masks_for(gt), FusionOrder::parse("look_alike,oil_spill,land,ship", kReg), gt.canvas());
  for (auto _ : state) {
    ConfusionMatrix cm(kReg.size());
    cm.accumulate(pred, gt);
    benchmark::DoNotOptimize(cm);
  }
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(gt.labels().size()));
}
BENCHMARK(BM_ConfusionAccumulate)->Arg(256)->Arg(1024);

void BM_LabelComponents(benchmark::State& state) {
  const auto gt = scene(static_cast<std::int32_t>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(label_components(gt));
}
BENCHMARK(BM_LabelComponents)->Arg(256)->Arg(1024);

void BM_Dilate(benchmark::State& state) {
  const auto masks = masks_for(scene(512));
  for (auto _ : state) {
    for (const auto& m : masks) {
      benchmark::DoNotOptimize(dilate(m.mask, static_cast<int>(state.range(0))));
    }
  }
}
BENCHMARK(BM_Dilate)->Arg(1)->Arg(8);

}  // namespace

BENCHMARK_MAIN();
