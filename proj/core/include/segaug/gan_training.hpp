#pragma once

#include <torch/torch.h>

#include <cstdint>
#include <filesystem>
#include <functional>
#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

#include "segaug/dataset.hpp"
#include "segaug/label_ops.hpp"
#include "segaug/losses.hpp"
#include "segaug/networks.hpp"

namespace segaug {

class TrainingError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct OptimizerConfig {
  double learning_rate = 0.0002;
  double beta1 = 0.5;
  double beta2 = 0.999;
  std::int64_t batch_size = 4;
  std::int64_t iterations = 2000;  // GAN iterations or segmentation epochs
  std::uint64_t seed = 0;
};
void validate(const OptimizerConfig& c);
torch::optim::AdamOptions adam_options(const OptimizerConfig& c);

// Which label map is warped first when building the generator input z.
enum class DeformOrder { RawFirst, SemanticFirst };

// Feature-matching partners. Matched compares D features of (x, c) with those
// of (G(c), c), so both sides describe the same layout. Printed compares
// (x, c) with (G(z), z) literally.
enum class PerceptualPairing { Matched, Printed };

struct GanConfig {
  NetworkOptions network{4, 0};  // seed is taken from optimizer.seed
  OptimizerConfig optimizer;
  LossWeights weights;
  DeformParams deform;  // seed is ignored; per-sample seeds are derived from optimizer.seed
  DeformOrder deform_order = DeformOrder::RawFirst;
  PerceptualPairing pairing = PerceptualPairing::Matched;
  double tumor_sampling_probability = 0.75;  // chance a batch slot draws from tumor-bearing cases
  std::int64_t checkpoint_every = 0;         // 0 disables periodic checkpoints
};
void validate(const GanConfig& c);

// Per-case [-1, 1] image for the Tanh generator range: every modality is
// min-max scaled independently.
torch::Tensor gan_image(const MultimodalCase& c);

// Generator input z built from a case and deformation parameters.
struct DeformedInput {
  Tensor raw_labels;  // deformed raw codes 0..4
  SemanticLabelMap semantic;
};
DeformedInput deform_case_labels(const MultimodalCase& c, const DeformParams& p, DeformOrder order);

struct GanBatch {
  torch::Tensor real;             // N x 4 x H x W in [-1, 1]
  torch::Tensor cond;             // N x H x W codes of the real layout c
  torch::Tensor deformed;         // N x H x W codes of the deformed layout z
  torch::Tensor boundary_target;  // N x H x W boundary of the deformed complete tumor
  std::vector<std::size_t> case_indices;
};

// Alternating GAN trainer. All randomness is derived from (seed, iteration),
// so a trainer restored from a checkpoint continues exactly where it stopped.
class GanTrainer {
 public:
  GanTrainer(std::vector<MultimodalCase> cases, GanConfig config);

  GanBatch batch_for(std::int64_t iteration) const;

  // Generator forward on the batch; with matched pairing the batch is run on
  // cat(z, c) and the first half belongs to z.
  GeneratorOutput generate(const GanBatch& batch);

  // Discriminator loss on real (x, c) vs fake (G(z), z) without updating anything.
  double discriminator_loss(const GanBatch& batch, const GeneratorOutput& out);

  // One Adam step on the discriminators. Generator parameters are untouched.
  double update_discriminator(const GanBatch& batch, const GeneratorOutput& out);

  // Generator objective terms with the graph attached to the generator output.
  struct GeneratorTerms {
    MemberLoss g_adv;
    torch::Tensor l_b;
    MemberLoss l_p;
    torch::Tensor total;
  };
  GeneratorTerms generator_terms(const GanBatch& batch, const GeneratorOutput& out);

  // One Adam step on the generator with the discriminators frozen.
  LossReport update_generator(const GanBatch& batch, const GeneratorOutput& out);

  // Full iteration: batch, generate, D update, G update. Throws TrainingError
  // naming the iteration and term on a non-finite loss.
  LossReport step();

  // Runs until `iterations()` reaches `until`, appending one CSV row per step to
  // out_dir/gan_losses.csv and writing checkpoints at the configured cadence plus
  // a final out_dir/gan_final.ckpt.
  void run(std::int64_t until, const std::filesystem::path& out_dir,
           const std::function<void(const LossReport&)>& on_step = {});

  void save(const std::filesystem::path& path) const;
  void resume(const std::filesystem::path& path);

  std::int64_t iterations() const { return iteration_; }
  const GanConfig& config() const { return config_; }
  GeneratorBundle& generator() { return generator_; }
  DiscriminatorEnsemble& discriminators() { return discriminators_; }

 private:
  std::vector<MultimodalCase> cases_;
  std::vector<torch::Tensor> images_;
  std::vector<torch::Tensor> cond_codes_;
  std::vector<std::size_t> tumor_cases_;
  GanConfig config_;
  GeneratorBundle generator_{nullptr};
  DiscriminatorEnsemble discriminators_{nullptr};
  std::unique_ptr<torch::optim::Adam> opt_g_, opt_d_;
  std::int64_t iteration_ = 0;
};

// Writes the generator (and nothing else) so synthesis can load it.
void save_generator(GeneratorBundle& g, const NetworkOptions& opt, const std::filesystem::path& path);
// Accepts either a generator file or a full trainer checkpoint.
GeneratorBundle load_generator(const std::filesystem::path& path);

struct SyntheticPair {
  Tensor image;   // 4 x H x W, z-scored per modality
  Tensor labels;  // H x W raw codes 0..4 of the deformed layout
  BoundaryTarget boundary;
};

// raw labels -> deform -> semantic map -> generator -> final image, re-normalized
// per modality. The generator runs in inference mode.
SyntheticPair synthesize_augmented_pair(GeneratorBundle& g, const MultimodalCase& c, const DeformParams& deform,
                                        DeformOrder order = DeformOrder::RawFirst);

}  // namespace segaug
