#include "rendersynth/dataset.hpp"

#include <cstdlib>
#include <stdexcept>
#include <thread>

namespace rendersynth {

bool variant_needs_checkpoint(const std::string& variant) {
  const auto spec = variant_spec(variant == "realaug" ? "hm_3d" : variant);
  return spec.learned != LearnedPrefix::none;
}

DatasetSample generate_sample(const DatasetOptions& options, std::uint64_t index,
                              const GeneratorNet* learned) {
  const std::string hm_variant = options.variant == "realaug" ? "hm_3d" : options.variant;
  const DatasetVariantSpec spec = variant_spec(hm_variant);
  if (spec.learned != LearnedPrefix::none && learned == nullptr)
    throw std::invalid_argument("variant " + options.variant + " needs a trained generator");

  DatasetSample sample;
  sample.seed = Rng::derive_seed(options.seed, index);
  Rng rng(sample.seed);
  sample.label = sample_label(rng, options.resolution, options.labels);
  const RenderOutput rendered = render(sample.label, options.resolution);

  Imaged x;
  if (spec.learned == LearnedPrefix::none) {
    x = rendered.image;
  } else {
    VectorXd z(learned->arch.n_z);
    for (Index k = 0; k < z.size(); ++k) z(k) = rng.uniform(-1.0, 1.0);
    const auto staged = learned->forward_staged(z, rendered);
    switch (spec.learned) {
      case LearnedPrefix::through_lighting:
        x = staged.after_lighting;
        break;
      case LearnedPrefix::through_background:
        x = staged.after_background;
        break;
      case LearnedPrefix::full:
        x = staged.final;
        break;
      default:
        x = rendered.image;
    }
  }

  HandmadeConfig hm = options.handmade;
  hm.blur = hm.blur && spec.hm_blur;
  hm.lighting = hm.lighting && spec.hm_lighting;
  hm.background = hm.background && spec.hm_background;
  hm.noise = hm.noise && spec.hm_noise;
  hm.spotlights = hm.spotlights && spec.hm_spotlights;

  if (hm.blur) x = hm_blur(x, hm, rng);
  if (hm.lighting) x = hm_lighting(x, hm, rng);
  if (hm.background) x = hm_background(x, rendered.bg_mask, hm, rng);
  if (hm.noise) x = hm_noise(x, hm, rng);
  if (hm.spotlights)
    x = hm_spotlights(x, sample_spotlights(sample.label, options.resolution, hm, rng));

  if (options.variant == "realaug") x = apply_real_aug(x, sample_real_aug(rng), rng);

  sample.image = std::move(x);
  return sample;
}

std::vector<DatasetSample> generate_dataset(const DatasetOptions& options,
                                            const GeneratorNet* learned, int threads) {
  if (options.count < 0) throw std::invalid_argument("generate_dataset: negative count");
  const int n = options.count;
  std::vector<DatasetSample> samples(static_cast<size_t>(n));
  const int workers = std::max(1, std::min(threads, n == 0 ? 1 : n));

  if (workers == 1) {
    for (int i = 0; i < n; ++i)
      samples[static_cast<size_t>(i)] =
          generate_sample(options, static_cast<std::uint64_t>(i), learned);
    return samples;
  }

  std::vector<std::thread> pool;
  pool.reserve(static_cast<size_t>(workers));
  for (int w = 0; w < workers; ++w) {
    pool.emplace_back([&, w] {
      for (int i = w; i < n; i += workers)
        samples[static_cast<size_t>(i)] =
            generate_sample(options, static_cast<std::uint64_t>(i), learned);
    });
  }
  for (auto& t : pool) t.join();
  return samples;
}

int worker_count() {
  if (const char* env = std::getenv("RENDERSYNTH_THREADS")) {
    const int n = std::atoi(env);
    if (n > 0) return n;
  }
  const unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1 : static_cast<int>(hw);
}

}  // namespace rendersynth
