#include <doctest.h>

#include <cmath>
#include <sstream>
#include <stdexcept>
#include <vector>

#include "fkqkd/byteio.hpp"
#include "fkqkd/privacy.hpp"

using namespace fkqkd;

TEST_CASE("verification hash length") {
  CHECK(verification_hash_length(1e-3, 1e-10) == 24);
  CHECK(verification_hash_length(0.5, 0.25) == 1);
  CHECK(verification_hash_length(0.1, 0.1) == 1);
  CHECK(verification_hash_length(0.5, 1.0 / 2048) == 10);
  CHECK_THROWS_AS(verification_hash_length(1.0, 0.1), std::domain_error);
}

TEST_CASE("equal keys always verify") {
  RngStream rng(1);
  for (int t = 0; t < 200; ++t) {
    const BitVector x = BitVector::random(1 + rng.below(3000), rng);
    const VerifyResult r = verify(x, x, 24, rng);
    CHECK(r.outcome == VerifyOutcome::Match);
    CHECK(r.tag.hash_len() == 24);
    CHECK(tag_matches(r.tag, x));
  }
}

TEST_CASE("a one-bit difference passes with probability at most 2^-16") {
  RngStream rng(2);
  const BitVector x = BitVector::random(256, rng);
  BitVector y = x;
  y.flip(100);
  const int trials = 100'000;
  int false_matches = 0;
  for (int t = 0; t < trials; ++t) {
    if (verify(x, y, 16, rng).outcome == VerifyOutcome::Match) ++false_matches;
  }
  const double p = std::ldexp(1.0, -16);
  CHECK(static_cast<double>(false_matches) / trials <= p + 5 * std::sqrt(p * (1 - p) / trials));
}

TEST_CASE("privacy amplification") {
  RngStream rng(3);
  const BitVector x = BitVector::random(500, rng);
  CHECK(toeplitz_hash(ToeplitzSeed::identity(500), x) == x);

  RngStream a(9);
  RngStream b(9);
  const BitVector s = privacy_amplify(x, 120, a);
  CHECK(s.size() == 120);
  CHECK(s == privacy_amplify(x, 120, b));
  CHECK_THROWS_AS(privacy_amplify(x, 0, a), std::invalid_argument);
  CHECK_THROWS_AS(privacy_amplify(x, 501, a), std::invalid_argument);
  CHECK(privacy_amplify(x, 500, a).size() == 500);
}

TEST_CASE("amplified bits are unbiased") {
  // n = 4096, l = 1024, 1e4 runs; each output bit within 0.5 +- 0.02
  RngStream rng(4);
  const int runs = 10'000;
  std::vector<int> ones(1024, 0);
  const BitVector x = BitVector::random(4096, rng);
  for (int t = 0; t < runs; ++t) {
    const BitVector s = privacy_amplify(x, 1024, rng);
    for (std::size_t i = 0; i < 1024; ++i) ones[i] += s[i] ? 1 : 0;
  }
  for (int c : ones) CHECK(std::abs(static_cast<double>(c) / runs - 0.5) <= 0.02);
}

TEST_CASE("secrecy mode names") {
  CHECK(to_string(SecrecyMode::General) == "GS");
  CHECK(to_string(SecrecyMode::Pragmatic) == "PS");
  CHECK(parse_secrecy_mode("GS") == SecrecyMode::General);
  CHECK(parse_secrecy_mode("PS") == SecrecyMode::Pragmatic);
  CHECK_THROWS_AS(parse_secrecy_mode("XS"), std::invalid_argument);
}

TEST_CASE("key file round trip") {
  RngStream rng(5);
  const ExportedKey key{BitVector::random(37, rng), SecrecyMode::Pragmatic, 2.885e-20};
  std::stringstream io;
  write_key(io, key);
  const std::string text = io.str();
  CHECK(text.rfind("length=37\nmode=PS\nepsilon=", 0) == 0);
  const ExportedKey back = read_key(io);
  CHECK(back.bits == key.bits);
  CHECK(back.mode == key.mode);
  CHECK(back.epsilon == doctest::Approx(key.epsilon).epsilon(1e-12));

  std::stringstream bad("length=37\nmode=PS\nepsilon=1\nabc\n");
  CHECK_THROWS_AS(read_key(bad), DecodeError);
}
