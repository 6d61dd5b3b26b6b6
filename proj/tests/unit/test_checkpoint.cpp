#include <doctest.h>

#include <string>

#include "fixtures.hpp"
#include "geowealth/checkpoint.hpp"
#include "geowealth/error.hpp"
#include "geowealth/rng.hpp"
#include "oracles.hpp"

using namespace geowealth;
using namespace geowealth::nn;

TEST_CASE("params round-trip bit-exactly") {
  Rng rng(21);
  for (auto arch : {Architecture::MLP, Architecture::GCN}) {
    const auto p = oracle::random_params(arch, {}, rng);
    const auto bytes = encode_params(p);
    CHECK(bytes.starts_with(kCheckpointMagic));
    CHECK(bytes.size() == 8 + 1 + 4 + 3 * 12 + 8 * p.parameter_count());
    const auto q = decode_params(bytes);
    CHECK(q.arch == arch);
    for (std::size_t i = 0; i < p.parameter_count(); ++i) CHECK(q.flat(i) == p.flat(i));

    fixture::TempDir dir("ckpt");
    save_params(dir.file("m.bin"), p);
    CHECK(fixture::read_file(dir.file("m.bin")) == bytes);
    CHECK(encode_params(load_params(dir.file("m.bin"))) == bytes);
  }
}

TEST_CASE("corrupt checkpoints are rejected") {
  Rng rng(22);
  const auto bytes = encode_params(oracle::random_params(Architecture::MLP, ModelShape{3, 4, 1}, rng));
  CHECK_THROWS_AS(decode_params(bytes.substr(0, bytes.size() - 1)), ValidationError);
  CHECK_THROWS_AS(decode_params(bytes + "x"), ValidationError);
  CHECK_THROWS_AS(decode_params("GWPARAM2" + bytes.substr(8)), ValidationError);
  std::string bad_arch = bytes;
  bad_arch[8] = 7;
  CHECK_THROWS_AS(decode_params(bad_arch), ValidationError);
  CHECK_THROWS_AS(load_params("/nonexistent/model.bin"), Error);
}
