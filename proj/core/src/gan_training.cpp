#include "segaug/gan_training.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include "segaug/checkpoint.hpp"
#include "segaug/log.hpp"
#include "segaug/rng.hpp"

namespace segaug {

namespace {

constexpr std::uint64_t kBatchTag = 0xba7c;
constexpr std::uint64_t kDeformTag = 0xdef0;
constexpr const char* kLossLog = "gan_losses.csv";

torch::Tensor first_half(const torch::Tensor& t, std::int64_t n) { return t.slice(0, 0, n); }
torch::Tensor second_half(const torch::Tensor& t, std::int64_t n) { return t.slice(0, n, 2 * n); }

void require_finite(double v, std::int64_t iteration, const char* term) {
  if (!std::isfinite(v)) {
    throw TrainingError("non-finite " + std::string(term) + " at iteration " + std::to_string(iteration));
  }
}

// Re-enables discriminator gradients when the generator step ends.
class FrozenScope {
 public:
  explicit FrozenScope(torch::nn::Module& m) : m_(m) { set_trainable(m_, false); }
  ~FrozenScope() { set_trainable(m_, true); }
  FrozenScope(const FrozenScope&) = delete;
  FrozenScope& operator=(const FrozenScope&) = delete;

 private:
  torch::nn::Module& m_;
};

std::vector<std::string> read_lines(const std::filesystem::path& path) {
  std::vector<std::string> lines;
  std::ifstream in(path);
  for (std::string line; std::getline(in, line);) lines.push_back(line);
  return lines;
}

}  // namespace

void validate(const OptimizerConfig& c) {
  if (!(c.learning_rate > 0)) throw std::invalid_argument("learning_rate must be positive");
  if (!(c.beta1 >= 0 && c.beta1 < 1) || !(c.beta2 >= 0 && c.beta2 < 1)) {
    throw std::invalid_argument("beta values must lie in [0, 1)");
  }
  if (c.batch_size < 1) throw std::invalid_argument("batch_size must be positive");
  if (c.iterations < 1) throw std::invalid_argument("iterations/epochs must be positive");
}

torch::optim::AdamOptions adam_options(const OptimizerConfig& c) {
  return torch::optim::AdamOptions(c.learning_rate).betas({c.beta1, c.beta2});
}

void validate(const GanConfig& c) {
  validate(c.optimizer);
  validate(c.weights);
  validate(c.deform);
  if (c.network.width_divisor < 1) throw std::invalid_argument("width_divisor must be at least 1");
  if (!(c.tumor_sampling_probability >= 0 && c.tumor_sampling_probability <= 1)) {
    throw std::invalid_argument("tumor_sampling_probability must lie in [0, 1]");
  }
  if (c.checkpoint_every < 0) throw std::invalid_argument("checkpoint_every must be non-negative");
}

torch::Tensor gan_image(const MultimodalCase& c) {
  std::vector<torch::Tensor> channels;
  for (auto m : kModalities) {
    auto t = to_torch(c.modality(m));
    const auto lo = t.min(), hi = t.max();
    const double range = (hi - lo).item<double>();
    channels.push_back(range < kNormalizeEpsilon ? torch::zeros_like(t) : (t - lo) / range * 2.0 - 1.0);
  }
  return torch::stack(channels);
}

DeformedInput deform_case_labels(const MultimodalCase& c, const DeformParams& p, DeformOrder order) {
  const auto brain = brain_mask(c);
  if (order == DeformOrder::RawFirst) {
    auto raw = elastic_deform_codes(c.labels, p);
    auto semantic = build_semantic_label_map(raw, brain);
    return {std::move(raw), std::move(semantic)};
  }
  auto semantic = elastic_deform_labels(build_semantic_label_map(c.labels, brain), p);
  Tensor raw = semantic.codes;
  for (auto& v : raw.bytes()) {
    if (v == kHealthyBrain) v = kBackground;
  }
  return {std::move(raw), std::move(semantic)};
}

GanTrainer::GanTrainer(std::vector<MultimodalCase> cases, GanConfig config)
    : cases_(std::move(cases)), config_(std::move(config)) {
  validate(config_);
  if (cases_.empty()) throw std::invalid_argument("GAN training needs at least one case");
  check_generator_input_size(static_cast<std::int64_t>(cases_.front().height()),
                             static_cast<std::int64_t>(cases_.front().width()));
  for (std::size_t i = 0; i < cases_.size(); ++i) {
    const auto& c = cases_[i];
    if (c.height() != cases_.front().height() || c.width() != cases_.front().width()) {
      throw std::invalid_argument("GAN training cases must share one slice size; " + c.case_id + " differs");
    }
    images_.push_back(gan_image(c));
    cond_codes_.push_back(to_torch(build_semantic_label_map(c).codes));
    if (has_tumor(c)) tumor_cases_.push_back(i);
  }
  config_.network.seed = config_.optimizer.seed;
  generator_ = GeneratorBundle(config_.network);
  discriminators_ = DiscriminatorEnsemble(config_.network);
  opt_g_ = std::make_unique<torch::optim::Adam>(generator_->parameters(), adam_options(config_.optimizer));
  opt_d_ = std::make_unique<torch::optim::Adam>(discriminators_->parameters(), adam_options(config_.optimizer));
}

GanBatch GanTrainer::batch_for(std::int64_t iteration) const {
  const auto seed = config_.optimizer.seed;
  Rng rng(derive_seed(seed, {kBatchTag, static_cast<std::uint64_t>(iteration)}));
  std::bernoulli_distribution pick_tumor(config_.tumor_sampling_probability);
  std::uniform_int_distribution<std::size_t> any(0, cases_.size() - 1);

  GanBatch b;
  std::vector<torch::Tensor> real, cond, deformed, target;
  for (std::int64_t slot = 0; slot < config_.optimizer.batch_size; ++slot) {
    std::size_t idx = any(rng);
    if (!tumor_cases_.empty() && pick_tumor(rng)) {
      idx = tumor_cases_[std::uniform_int_distribution<std::size_t>(0, tumor_cases_.size() - 1)(rng)];
    }
    DeformParams p = config_.deform;
    p.seed = derive_seed(seed, {kDeformTag, static_cast<std::uint64_t>(iteration), static_cast<std::uint64_t>(slot)});
    const auto z = deform_case_labels(cases_[idx], p, config_.deform_order);
    b.case_indices.push_back(idx);
    real.push_back(images_[idx]);
    cond.push_back(cond_codes_[idx]);
    deformed.push_back(to_torch(z.semantic.codes));
    target.push_back(to_torch(extract_boundary(complete_tumor_mask(z.semantic)).mask));
  }
  b.real = torch::stack(real);
  b.cond = torch::stack(cond);
  b.deformed = torch::stack(deformed);
  b.boundary_target = torch::stack(target);
  return b;
}

GeneratorOutput GanTrainer::generate(const GanBatch& batch) {
  if (config_.pairing == PerceptualPairing::Matched) {
    return generator_->forward(torch::cat({batch.deformed, batch.cond}));
  }
  return generator_->forward(batch.deformed);
}

double GanTrainer::discriminator_loss(const GanBatch& batch, const GeneratorOutput& out) {
  torch::NoGradGuard no_grad;
  const auto n = batch.real.size(0);
  const auto real = discriminators_->forward(batch.real, one_hot_batch(batch.cond));
  const auto fake = discriminators_->forward(first_half(out.final_image, n), one_hot_batch(batch.deformed));
  return adv_loss_discriminator(predictions(real), predictions(fake)).total.item<double>();
}

double GanTrainer::update_discriminator(const GanBatch& batch, const GeneratorOutput& out) {
  const auto n = batch.real.size(0);
  opt_d_->zero_grad();
  const auto real = discriminators_->forward(batch.real, one_hot_batch(batch.cond));
  const auto fake = discriminators_->forward(first_half(out.final_image, n).detach(), one_hot_batch(batch.deformed));
  const auto loss = adv_loss_discriminator(predictions(real), predictions(fake));
  const double value = loss.total.item<double>();
  require_finite(value, iteration_, "d_loss");
  loss.total.backward();
  opt_d_->step();
  return value;
}

GanTrainer::GeneratorTerms GanTrainer::generator_terms(const GanBatch& batch, const GeneratorOutput& out) {
  const auto n = batch.real.size(0);
  const auto fake_z = first_half(out.final_image, n);
  const auto fake_out = discriminators_->forward(fake_z, one_hot_batch(batch.deformed));

  GeneratorTerms t;
  t.g_adv = adv_loss_generator(predictions(fake_out));
  t.l_b = boundary_loss(first_half(out.boundary_prob, n), batch.boundary_target);

  std::vector<DiscriminatorOutput> real_out;
  {
    torch::NoGradGuard no_grad;
    real_out = discriminators_->forward(batch.real, one_hot_batch(batch.cond));
  }
  if (config_.pairing == PerceptualPairing::Matched) {
    const auto fake_c = discriminators_->forward(second_half(out.final_image, n), one_hot_batch(batch.cond));
    t.l_p = perceptual_loss(features(real_out), features(fake_c));
  } else {
    t.l_p = perceptual_loss(features(real_out), features(fake_out));
  }
  t.total = total_generator_objective(t.g_adv.total, t.l_b, t.l_p.total, config_.weights);
  return t;
}

LossReport GanTrainer::update_generator(const GanBatch& batch, const GeneratorOutput& out) {
  FrozenScope frozen(*discriminators_);
  opt_g_->zero_grad();
  const auto t = generator_terms(batch, out);

  LossReport r;
  r.iteration = iteration_;
  r.g_adv = t.g_adv.total.item<double>();
  r.l_b = t.l_b.item<double>();
  r.l_p = t.l_p.total.item<double>();
  r.total = t.total.item<double>();
  require_finite(r.g_adv, iteration_, "g_adv");
  require_finite(r.l_b, iteration_, "l_b");
  require_finite(r.l_p, iteration_, "l_p");
  for (int k = 0; k < kNumDiscriminators; ++k) {
    r.g_adv_member[k] = t.g_adv.per_member[k].item<double>();
    r.l_p_member[k] = t.l_p.per_member[k].item<double>();
  }
  t.total.backward();
  opt_g_->step();
  return r;
}

LossReport GanTrainer::step() {
  generator_->train();
  discriminators_->train();
  const auto batch = batch_for(iteration_);
  const auto out = generate(batch);
  const double d_loss = update_discriminator(batch, out);
  auto report = update_generator(batch, out);
  report.d_loss = d_loss;
  ++iteration_;
  return report;
}

void GanTrainer::run(std::int64_t until, const std::filesystem::path& out_dir,
                     const std::function<void(const LossReport&)>& on_step) {
  std::filesystem::create_directories(out_dir);
  const auto log_path = out_dir / kLossLog;

  // Keep rows from before the current iteration; a resumed run replaces the rest.
  std::vector<std::string> kept = {loss_csv_header()};
  if (iteration_ > 0 && std::filesystem::exists(log_path)) {
    const auto lines = read_lines(log_path);
    for (std::size_t i = 1; i < lines.size(); ++i) {
      if (!lines[i].empty() && parse_loss_csv_row(lines[i]).iteration < iteration_) kept.push_back(lines[i]);
    }
  }
  std::ofstream log_file(log_path, std::ios::trunc);
  for (const auto& line : kept) log_file << line << '\n';
  log_file.flush();

  while (iteration_ < until) {
    const auto report = step();
    log_file << to_csv_row(report) << '\n';
    log_file.flush();
    if (on_step) on_step(report);
    if (config_.checkpoint_every > 0 && iteration_ % config_.checkpoint_every == 0) {
      char name[32];
      std::snprintf(name, sizeof(name), "gan_%06lld.ckpt", static_cast<long long>(iteration_));
      save(out_dir / name);
    }
  }
  save(out_dir / "gan_final.ckpt");
}

void GanTrainer::save(const std::filesystem::path& path) const {
  Checkpoint c;
  export_module(*generator_, "generator", c);
  export_module(*discriminators_, "discriminator", c);
  export_adam(*opt_g_, *generator_, "adam_g", c);
  export_adam(*opt_d_, *discriminators_, "adam_d", c);
  c.meta["kind"] = "gan_trainer";
  c.meta["iteration"] = std::to_string(iteration_);
  c.meta["width_divisor"] = std::to_string(config_.network.width_divisor);
  save_checkpoint(c, path);
}

void GanTrainer::resume(const std::filesystem::path& path) {
  const auto c = load_checkpoint(path);
  if (c.meta_value("kind") != "gan_trainer") throw CheckpointError(path.string() + " is not a GAN trainer checkpoint");
  if (std::stoi(c.meta_value("width_divisor")) != config_.network.width_divisor) {
    throw CheckpointError(path.string() + " was written with width_divisor " + c.meta_value("width_divisor"));
  }
  import_module(*generator_, "generator", c);
  import_module(*discriminators_, "discriminator", c);
  import_adam(*opt_g_, *generator_, "adam_g", c);
  import_adam(*opt_d_, *discriminators_, "adam_d", c);
  iteration_ = std::stoll(c.meta_value("iteration"));
  log::info("resumed GAN training at iteration " + std::to_string(iteration_));
}

void save_generator(GeneratorBundle& g, const NetworkOptions& opt, const std::filesystem::path& path) {
  Checkpoint c;
  export_module(*g, "generator", c);
  c.meta["kind"] = "generator";
  c.meta["width_divisor"] = std::to_string(opt.width_divisor);
  save_checkpoint(c, path);
}

GeneratorBundle load_generator(const std::filesystem::path& path) {
  const auto c = load_checkpoint(path);
  const auto& kind = c.meta_value("kind");
  if (kind != "generator" && kind != "gan_trainer") {
    throw CheckpointError(path.string() + " holds no generator (kind " + kind + ")");
  }
  GeneratorBundle g(NetworkOptions{std::stoi(c.meta_value("width_divisor")), 0});
  import_module(*g, "generator", c);
  return g;
}

SyntheticPair synthesize_augmented_pair(GeneratorBundle& g, const MultimodalCase& c, const DeformParams& deform,
                                        DeformOrder order) {
  auto z = deform_case_labels(c, deform, order);
  const bool was_training = g->is_training();
  g->eval();
  torch::Tensor image;
  {
    torch::NoGradGuard no_grad;
    image = g->forward(to_torch(z.semantic.codes).unsqueeze(0)).final_image[0];
  }
  g->train(was_training);

  const auto h = c.height(), w = c.width();
  Tensor stacked(DType::Float32, {kNumModalities, h, w});
  for (std::size_t m = 0; m < kNumModalities; ++m) {
    const auto normalized = zscore_normalize(from_torch(image[static_cast<std::int64_t>(m)].contiguous()));
    std::copy(normalized.floats().begin(), normalized.floats().end(), stacked.floats().begin() + m * h * w);
  }
  SyntheticPair out;
  out.image = std::move(stacked);
  out.boundary = extract_boundary(complete_tumor_mask(z.semantic));
  out.labels = std::move(z.raw_labels);
  return out;
}

}  // namespace segaug
