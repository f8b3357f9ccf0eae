#include <cctype>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <vector>

#include <doctest.h>

#include "cot/adversarial.hpp"
#include "cot/dataset.hpp"
#include "cot/model.hpp"
#include "oracles.hpp"

using cot::AttackConfig;
using cot::AttackKind;
using cot::LabeledBatch;
using cot::ModelState;
using cot::Tensor;

namespace {

ModelState make_model(const cot::MlpArchitecture& arch, std::uint64_t seed) {
  cot::Rng rng = cot::Rng(seed).split(cot::streams::kInit);
  return cot::init_model(arch, rng);
}

LabeledBatch batch_of(Tensor inputs, std::vector<int> labels, std::size_t k) {
  return {std::move(inputs), std::move(labels), k};
}

/// A fixed linear model so the input gradient is known in closed form.
ModelState linear_model() {
  ModelState model = make_model({2, {}, 2}, 1);
  model.layers[0].weight = Tensor({2, 2}, {1.0, -2.0, -1.0, 2.0});
  model.layers[0].bias = Tensor({2}, {0.0, 0.0});
  return model;
}

}  // namespace

TEST_CASE("fgsm moves each coordinate by epsilon in the gradient sign") {
  // For the linear model above, logits = (x0 - 2 x1, -x0 + 2 x1); with label
  // 0 the loss gradient wrt x is (p1 - p0) * (dz1 - dz0)/dx = c * (-2, 4)
  // with c > 0, so sign = (-1, +1).
  const ModelState model = linear_model();
  const LabeledBatch batch = batch_of(Tensor({1, 2}, {0.2, -0.3}), {0}, 2);
  AttackConfig config;
  config.kind = AttackKind::kFgsm;
  config.epsilon = 0.1;
  const Tensor adv = cot::fgsm(model, batch, config);
  CHECK(adv.at(0, 0) == doctest::Approx(0.1).epsilon(1e-12));
  CHECK(adv.at(0, 1) == doctest::Approx(-0.2).epsilon(1e-12));
}

TEST_CASE("the worked example ends at (0.6, 0.4) under clipping") {
  // Start (0.5, 0.5), gradient signs (+1, -1), epsilon 0.1, clip [0.4, 0.6].
  ModelState model = linear_model();
  model.layers[0].weight = Tensor({2, 2}, {-1.0, 2.0, 1.0, -2.0});
  const LabeledBatch batch = batch_of(Tensor({1, 2}, {0.5, 0.5}), {0}, 2);
  AttackConfig config;
  config.epsilon = 0.1;
  config.clip_range = {{0.4, 0.6}};
  const Tensor adv = cot::fgsm(model, batch, config);
  CHECK(adv.at(0, 0) == doctest::Approx(0.6).epsilon(1e-12));
  CHECK(adv.at(0, 1) == doctest::Approx(0.4).epsilon(1e-12));
}

TEST_CASE("sign(0) is 0: a gradient-free model returns the input unchanged") {
  ModelState model = make_model({2, {}, 2}, 1);
  for (auto& layer : model.layers) {
    for (double& v : layer.weight.data()) v = 0.0;
    for (double& v : layer.bias.data()) v = 0.0;
  }
  const LabeledBatch batch = batch_of(Tensor({2, 2}, {0.3, 0.4, -0.1, 0.9}),
                                      {0, 1}, 2);
  AttackConfig config;
  config.epsilon = 0.1;
  const Tensor adv = cot::fgsm(model, batch, config);
  for (std::size_t i = 0; i < adv.size(); ++i) {
    CHECK(adv.at(i) == batch.inputs.at(i));
  }
}

TEST_CASE("epsilon 0 returns the inputs exactly") {
  const ModelState model = make_model({3, {4}, 3}, 5);
  cot::Rng rng(2);
  Tensor x({4, 3});
  for (double& v : x.data()) v = rng.normal();
  const LabeledBatch batch = batch_of(x, {0, 1, 2, 0}, 3);
  AttackConfig config;
  config.epsilon = 0.0;
  for (const AttackKind kind : {AttackKind::kFgsm, AttackKind::kIfgsm}) {
    config.kind = kind;
    const Tensor adv = cot::adversarial_inputs(model, batch, config);
    for (std::size_t i = 0; i < adv.size(); ++i) CHECK(adv.at(i) == x.at(i));
  }
}

TEST_CASE("every perturbation respects the l-infinity budget") {
  const ModelState model = make_model({5, {8}, 4}, 9);
  cot::Rng rng(3);
  Tensor x({20, 5});
  for (double& v : x.data()) v = rng.normal();
  std::vector<int> labels(20);
  for (auto& l : labels) l = static_cast<int>(rng.below(4));
  const LabeledBatch batch = batch_of(x, labels, 4);

  for (const AttackKind kind : {AttackKind::kFgsm, AttackKind::kIfgsm}) {
    AttackConfig config;
    config.kind = kind;
    config.epsilon = 0.07;
    config.iterations = 5;
    const Tensor adv = cot::adversarial_inputs(model, batch, config);
    for (std::size_t i = 0; i < adv.size(); ++i) {
      CHECK(std::abs(adv.at(i) - x.at(i)) <= 0.07 + 1e-12);
    }
  }
}

TEST_CASE("single-iteration ifgsm with full step equals fgsm") {
  const ModelState model = make_model({4, {6}, 3}, 13);
  cot::Rng rng(4);
  Tensor x({6, 4});
  for (double& v : x.data()) v = rng.normal();
  const LabeledBatch batch = batch_of(x, {0, 1, 2, 0, 1, 2}, 3);
  AttackConfig fg;
  fg.kind = AttackKind::kFgsm;
  fg.epsilon = 0.05;
  AttackConfig it;
  it.kind = AttackKind::kIfgsm;
  it.epsilon = 0.05;
  it.iterations = 1;
  const Tensor a = cot::fgsm(model, batch, fg);
  const Tensor b = cot::ifgsm(model, batch, it);
  for (std::size_t i = 0; i < a.size(); ++i) CHECK(a.at(i) == b.at(i));
}

TEST_CASE("two-iteration ifgsm matches a hand-unrolled computation") {
  const ModelState model = linear_model();
  const Tensor x0({1, 2}, {0.2, -0.3});
  const LabeledBatch batch = batch_of(x0, {0}, 2);
  AttackConfig config;
  config.kind = AttackKind::kIfgsm;
  config.epsilon = 0.1;
  config.iterations = 2;  // step 0.05 each

  // Unrolled: gradient sign stays (-1, +1) for this linear model (the sign
  // of a fixed direction), so x = x0 + (-0.1, +0.1) after two steps, within
  // the epsilon ball.
  const Tensor adv = cot::ifgsm(model, batch, config);
  CHECK(adv.at(0, 0) == doctest::Approx(0.1).epsilon(1e-12));
  CHECK(adv.at(0, 1) == doctest::Approx(-0.2).epsilon(1e-12));
}

TEST_CASE("ifgsm projects each iterate back into the epsilon ball and clip box") {
  const ModelState model = linear_model();
  const Tensor x0({1, 2}, {0.95, 0.0});
  const LabeledBatch batch = batch_of(x0, {0}, 2);
  AttackConfig config;
  config.kind = AttackKind::kIfgsm;
  config.epsilon = 0.2;
  config.iterations = 4;
  config.step_size = 0.15;  // oversteps; projection must rein it in
  config.clip_range = {{0.0, 1.0}};
  config.allow_large_epsilon = true;
  // Gradient sign is a constant (-1, +1) here, so after enough iterations
  // both coordinates pin to the epsilon-ball faces: (0.75, 0.2).
  const Tensor adv = cot::ifgsm(model, batch, config);
  CHECK(adv.at(0, 0) == doctest::Approx(0.75).epsilon(1e-12));
  CHECK(adv.at(0, 1) == doctest::Approx(0.2).epsilon(1e-12));
}

TEST_CASE("summed gradient equals primary plus complement") {
  const ModelState model = make_model({3, {5}, 4}, 21);
  cot::Rng rng(6);
  Tensor x({5, 3});
  for (double& v : x.data()) v = rng.normal();
  const LabeledBatch batch = batch_of(x, {0, 1, 2, 3, 0}, 4);
  const Tensor gp =
      cot::input_gradient(model, batch, cot::InputObjective::kPrimary);
  const Tensor gc =
      cot::input_gradient(model, batch, cot::InputObjective::kComplement);
  const Tensor gs = cot::input_gradient(model, batch, cot::InputObjective::kSum);
  for (std::size_t i = 0; i < gs.size(); ++i) {
    CHECK(gs.at(i) == doctest::Approx(gp.at(i) + gc.at(i)).epsilon(1e-12));
  }
}

TEST_CASE("complement input gradient is zero for two classes") {
  const ModelState model = make_model({3, {4}, 2}, 2);
  cot::Rng rng(7);
  Tensor x({3, 3});
  for (double& v : x.data()) v = rng.normal();
  const LabeledBatch batch = batch_of(x, {0, 1, 0}, 2);
  const Tensor gc =
      cot::input_gradient(model, batch, cot::InputObjective::kComplement);
  for (std::size_t i = 0; i < gc.size(); ++i) CHECK(gc.at(i) == 0.0);
}

TEST_CASE("raw-entropy sign convention negates the complement gradient") {
  const ModelState model = make_model({3, {5}, 4}, 23);
  cot::Rng rng(8);
  Tensor x({4, 3});
  for (double& v : x.data()) v = rng.normal();
  const LabeledBatch batch = batch_of(x, {1, 2, 3, 0}, 4);
  const Tensor a = cot::input_gradient(model, batch,
                                       cot::InputObjective::kComplement,
                                       cot::ComplementSign::kMinimizedLoss);
  const Tensor b = cot::input_gradient(model, batch,
                                       cot::InputObjective::kComplement,
                                       cot::ComplementSign::kRawEntropy);
  for (std::size_t i = 0; i < a.size(); ++i) {
    CHECK(a.at(i) == doctest::Approx(-b.at(i)).epsilon(1e-14));
  }
}

TEST_CASE("gradient-mode selection changes the crafted examples on K>=3") {
  // On a converged-ish model the primary and summed gradients differ, so the
  // two attack modes must differ in at least one coordinate.
  const ModelState model = make_model({4, {8}, 3}, 31);
  cot::Rng rng(9);
  Tensor x({10, 4});
  for (double& v : x.data()) v = rng.normal();
  std::vector<int> labels(10);
  for (auto& l : labels) l = static_cast<int>(rng.below(3));
  const LabeledBatch batch = batch_of(x, labels, 3);
  AttackConfig a;
  a.epsilon = 0.1;
  a.gradient_mode = cot::GradientMode::kPrimaryOnly;
  AttackConfig b = a;
  b.gradient_mode = cot::GradientMode::kPrimaryPlusComplement;
  const Tensor adv_a = cot::fgsm(model, batch, a);
  const Tensor adv_b = cot::fgsm(model, batch, b);
  bool differs = false;
  for (std::size_t i = 0; i < adv_a.size(); ++i) {
    differs |= adv_a.at(i) != adv_b.at(i);
  }
  CHECK(differs);
}

TEST_CASE("attack config validation") {
  AttackConfig config;
  config.epsilon = -0.1;
  CHECK_THROWS_AS(config.validate(), cot::InputError);
  config.epsilon = 0.2;
  CHECK_THROWS_AS(config.validate(), cot::InputError);  // needs the override
  config.allow_large_epsilon = true;
  CHECK_NOTHROW(config.validate());
  config = {};
  config.kind = AttackKind::kIfgsm;
  config.iterations = 0;
  CHECK_THROWS_AS(config.validate(), cot::InputError);
  config = {};
  config.clip_range = {{1.0, 0.0}};
  CHECK_THROWS_AS(config.validate(), cot::InputError);
}

TEST_CASE("evaluate_attack labels protocols and verifies budgets") {
  const ModelState model = make_model({2, {6}, 3}, 40);
  ModelState other = make_model({2, {6}, 3}, 41);
  cot::Rng rng(10);
  Tensor x({12, 2});
  for (double& v : x.data()) v = rng.normal();
  std::vector<int> labels(12);
  for (auto& l : labels) l = static_cast<int>(rng.below(3));
  const LabeledBatch batch = batch_of(x, labels, 3);
  AttackConfig config;
  config.epsilon = 0.1;

  const cot::AttackReport white = cot::evaluate_attack(model, model, batch, config);
  CHECK(white.protocol == "white_box");
  CHECK(white.kind == "fgsm");
  CHECK(white.sample_count == 12);
  CHECK(white.perturbation_norms.size() == 12);
  CHECK(white.max_perturbation <= 0.1 + 1e-12);
  CHECK(white.clean_error >= 0.0);
  CHECK(white.adversarial_error <= 1.0);

  const cot::AttackReport transfer =
      cot::evaluate_attack(model, other, batch, config);
  CHECK(transfer.protocol == "transfer");

  // A bitwise copy still counts as white box.
  const ModelState copy = model;
  CHECK(cot::evaluate_attack(model, copy, batch, config).protocol == "white_box");
}

TEST_CASE("an epsilon-0 attack leaves the error at the clean error") {
  const ModelState model = make_model({2, {5}, 3}, 50);
  cot::Rng rng(11);
  Tensor x({15, 2});
  for (double& v : x.data()) v = rng.normal();
  std::vector<int> labels(15);
  for (auto& l : labels) l = static_cast<int>(rng.below(3));
  const LabeledBatch batch = batch_of(x, labels, 3);
  AttackConfig config;
  config.epsilon = 0.0;
  const cot::AttackReport report = cot::evaluate_attack(model, model, batch, config);
  CHECK(report.adversarial_error == report.clean_error);
  CHECK(report.max_perturbation == 0.0);
}

TEST_CASE("attack report files carry the summary and per-sample norms") {
  const ModelState model = make_model({2, {4}, 3}, 60);
  cot::Rng rng(12);
  Tensor x({5, 2});
  for (double& v : x.data()) v = rng.normal();
  const LabeledBatch batch = batch_of(x, {0, 1, 2, 0, 1}, 3);
  AttackConfig config;
  config.epsilon = 0.05;
  const cot::AttackReport report = cot::evaluate_attack(model, model, batch, config);

  namespace fs = std::filesystem;
  const fs::path json_path = fs::temp_directory_path() / "cot_attack.json";
  const fs::path csv_path = fs::temp_directory_path() / "cot_attack.csv";
  cot::write_attack_report_json(report, json_path, 0xfeed, 3);
  cot::write_attack_report_csv(report, csv_path, 0xfeed, 3);

  std::ifstream jf(json_path);
  const std::string json_text((std::istreambuf_iterator<char>(jf)), {});
  CHECK(json_text.find("\"protocol\": \"white_box\"") != std::string::npos);
  CHECK(json_text.find("\"epsilon\": 0.05") != std::string::npos);
  CHECK(json_text.find("000000000000feed") != std::string::npos);

  std::ifstream cf(csv_path);
  std::string line;
  int rows = 0, comments = 0;
  while (std::getline(cf, line)) {
    if (!line.empty() && line[0] == '#') ++comments;
    if (!line.empty() && std::isdigit(static_cast<unsigned char>(line[0]))) ++rows;
  }
  CHECK(comments >= 2);
  CHECK(rows == 5);  // one line per sample
  fs::remove(json_path);
  fs::remove(csv_path);
}
