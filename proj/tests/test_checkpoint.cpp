#include <doctest.h>

#include <bit>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <stdexcept>
#include <string>
#include <utility>

#include "demnet/checkpoint.hpp"
#include "oracles.hpp"

using namespace demnet;
using namespace demnet::test;

namespace {

namespace fs = std::filesystem;

fs::path scratch_dir() {
  fs::path dir = fs::path("scratch") / "checkpoint";
  fs::create_directories(dir);
  return dir;
}

void spit(const fs::path& path, const std::string& bytes) {
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  f.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
}

bool bits_equal(const Tensor& a, const Tensor& b) {
  if (a.shape() != b.shape()) return false;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (std::bit_cast<std::uint64_t>(a[i]) !=
        std::bit_cast<std::uint64_t>(b[i])) {
      return false;
    }
  }
  return true;
}

Checkpoint make_checkpoint(std::uint64_t seed) {
  Checkpoint ckpt;
  ckpt.params = demnet_model(seed);
  ckpt.params.layers[0].bias[0] = -0.0;  // sign bit must survive the trip
  AdamConfig cfg;
  ckpt.adam =
      make_adam_state(trainable_tensors(std::as_const(ckpt.params)), cfg);
  // One optimizer step so the moments are nonzero.
  std::vector<Tensor*> params = trainable_tensors(ckpt.params);
  std::vector<Tensor> grads;
  grads.reserve(params.size());
  for (std::size_t i = 0; i < params.size(); ++i) {
    grads.push_back(random_tensor(params[i]->shape(), 900 + i, 0.1));
  }
  std::vector<const Tensor*> grad_ptrs;
  for (const Tensor& g : grads) grad_ptrs.push_back(&g);
  adam_step(params, grad_ptrs, ckpt.adam, trainable_names(ckpt.params));
  ckpt.epoch = 17;
  ckpt.config_digest = sha256("round trip fixture");
  ckpt.stats = {1.25, 0.75, 0.5};
  return ckpt;
}

void check_message(const std::function<void()>& f, const char* needle) {
  try {
    f();
    FAIL_CHECK("expected an exception mentioning \"" << needle << "\"");
  } catch (const std::exception& e) {
    std::string msg = e.what();
    CHECK_MESSAGE(msg.find(needle) != std::string::npos,
                  "message was: " << msg);
  }
}

}  // namespace

TEST_SUITE("checkpoint") {

TEST_CASE("round trip is bit-exact") {
  fs::path path = scratch_dir() / "full.demn";
  Checkpoint a = make_checkpoint(3);
  save_checkpoint(a, path.string());
  CHECK_FALSE(fs::exists(path.string() + ".tmp"));

  Checkpoint b = load_checkpoint(path.string());
  CHECK(b.format_version == a.format_version);
  CHECK(b.config_digest == a.config_digest);
  CHECK(b.epoch == 17);
  CHECK(b.params.init_seed == a.params.init_seed);
  CHECK(b.params.input_h == kInputSize);
  CHECK(b.params.input_w == kInputSize);

  REQUIRE(b.params.defs.size() == a.params.defs.size());
  for (std::size_t i = 0; i < a.params.defs.size(); ++i) {
    const LayerDef& x = a.params.defs[i];
    const LayerDef& y = b.params.defs[i];
    CHECK(y.name == x.name);
    CHECK(y.kind == x.kind);
    CHECK(y.spec.kernel_h == x.spec.kernel_h);
    CHECK(y.spec.kernel_w == x.spec.kernel_w);
    CHECK(y.spec.in_channels == x.spec.in_channels);
    CHECK(y.spec.out_channels == x.spec.out_channels);
    CHECK(y.spec.stride_h == x.spec.stride_h);
    CHECK(y.spec.stride_w == x.spec.stride_w);
    CHECK(y.spec.padding == x.spec.padding);
    CHECK(y.spec.output_padding == x.spec.output_padding);
    CHECK(y.pool == x.pool);
    CHECK(y.activation == x.activation);
  }

  for (std::size_t i = 0; i < a.params.layers.size(); ++i) {
    CHECK(bits_equal(b.params.layers[i].weights, a.params.layers[i].weights));
    CHECK(bits_equal(b.params.layers[i].bias, a.params.layers[i].bias));
    CHECK(bits_equal(b.params.layers[i].slopes, a.params.layers[i].slopes));
  }
  CHECK(std::signbit(b.params.layers[0].bias[0]));

  CHECK(b.adam.t == 1);
  CHECK(b.adam.config.alpha == a.adam.config.alpha);
  CHECK(b.adam.config.beta1 == a.adam.config.beta1);
  CHECK(b.adam.config.beta2 == a.adam.config.beta2);
  CHECK(b.adam.config.epsilon == a.adam.config.epsilon);
  REQUIRE(b.adam.m.size() == a.adam.m.size());
  for (std::size_t i = 0; i < a.adam.m.size(); ++i) {
    CHECK(bits_equal(b.adam.m[i], a.adam.m[i]));
    CHECK(bits_equal(b.adam.v[i], a.adam.v[i]));
  }

  CHECK(b.stats.amp_mean == 1.25);
  CHECK(b.stats.amp_std == 0.75);
  CHECK(b.stats.phase_scale == 0.5);

  // The reloaded copy must feed forward() directly.
  Tensor input = random_tensor({140, 140, 2}, 44, 0.5);
  Tensor out_a = forward(a.params, input, RunMode::INFER);
  Tensor out_b = forward(b.params, input, RunMode::INFER);
  CHECK(bits_equal(out_a, out_b));
}

TEST_CASE("save followed by save overwrites atomically") {
  fs::path path = scratch_dir() / "twice.demn";
  Checkpoint a = make_checkpoint(4);
  save_checkpoint(a, path.string());
  a.epoch = 99;
  save_checkpoint(a, path.string());
  CHECK_FALSE(fs::exists(path.string() + ".tmp"));
  CHECK(load_checkpoint(path.string()).epoch == 99);
}

TEST_CASE("bad magic names the expected tag") {
  fs::path good = scratch_dir() / "magic_good.demn";
  fs::path bad = scratch_dir() / "magic_bad.demn";
  save_checkpoint(make_checkpoint(5), good.string());
  std::string bytes = slurp(good.string());
  bytes[0] = 'X';
  spit(bad, bytes);
  check_message([&] { load_checkpoint(bad.string()); }, "DEMN");
  check_message([&] { load_checkpoint(bad.string()); }, "bad magic");
}

TEST_CASE("future format version is rejected by name") {
  fs::path good = scratch_dir() / "ver_good.demn";
  fs::path bad = scratch_dir() / "ver_bad.demn";
  save_checkpoint(make_checkpoint(5), good.string());
  std::string bytes = slurp(good.string());
  bytes[4] = 2;  // little-endian u32 version field
  spit(bad, bytes);
  check_message([&] { load_checkpoint(bad.string()); }, "format version 2");
  check_message([&] { load_checkpoint(bad.string()); }, "unsupported");
  check_message([&] { load_checkpoint(bad.string()); }, "reads up to 1");
}

TEST_CASE("truncated and padded files are rejected") {
  fs::path good = scratch_dir() / "trunc_good.demn";
  save_checkpoint(make_checkpoint(5), good.string());
  std::string bytes = slurp(good.string());

  fs::path cut = scratch_dir() / "trunc_cut.demn";
  spit(cut, bytes.substr(0, bytes.size() / 2));
  check_message([&] { load_checkpoint(cut.string()); }, "truncated");

  fs::path padded = scratch_dir() / "trunc_padded.demn";
  spit(padded, bytes + std::string(3, '\0'));
  check_message([&] { load_checkpoint(padded.string()); }, "trailing bytes");
}

TEST_CASE("missing file reports the path") {
  check_message([&] { load_checkpoint("scratch/checkpoint/no_such.demn"); },
                "cannot open");
}

TEST_CASE("optimizer state must match the parameter list") {
  Checkpoint ckpt = make_checkpoint(6);
  ckpt.adam.m.pop_back();
  fs::path path = scratch_dir() / "mismatch.demn";
  CHECK_THROWS_AS(save_checkpoint(ckpt, path.string()), std::invalid_argument);
}

}  // TEST_SUITE
