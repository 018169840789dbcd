#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <random>

#include "blocksens/boolfn.hpp"
#include "blocksens/random.hpp"
#include "blocksens/table_io.hpp"
#include "doctest.h"

using namespace blocksens;

namespace {

TruthTable random_real_table(int n, std::uint64_t seed) {
  Rng rng(seed);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  std::vector<double> v(std::size_t{1} << n);
  for (auto& x : v) x = u(rng);
  return TruthTable::from_values(n, v);
}

// Variance over the completions of x on P, straight from the definition.
double brute_subset_variance(const TruthTable& f, std::uint32_t x, std::uint32_t P) {
  double sum = 0.0, sq = 0.0;
  int count = 0;
  for (std::uint32_t y = 0; y < f.size(); ++y) {
    if (((y ^ x) & ~P) != 0) continue;
    sum += f[y];
    sq += f[y] * f[y];
    ++count;
  }
  const double mean = sum / count;
  return std::max(0.0, sq / count - mean * mean);
}

// Maximum over every set partition of {1..n}, enumerated by restricted growth
// strings.
double brute_block_sensitivity(const TruthTable& f, std::uint32_t x) {
  const int n = f.arity();
  std::vector<double> var(std::size_t{1} << n, 0.0);
  for (std::uint32_t P = 1; P < var.size(); ++P) var[P] = brute_subset_variance(f, x, P);
  std::vector<std::uint32_t> blocks;
  double best = 0.0;
  std::function<void(int)> rec = [&](int i) {
    if (i == n) {
      double s = 0.0;
      for (auto b : blocks) s += var[b];
      best = std::max(best, s);
      return;
    }
    for (std::size_t j = 0; j < blocks.size(); ++j) {
      blocks[j] |= 1u << i;
      rec(i + 1);
      blocks[j] &= ~(1u << i);
    }
    blocks.push_back(1u << i);
    rec(i + 1);
    blocks.pop_back();
  };
  rec(0);
  return best;
}

}  // namespace

TEST_CASE("index convention puts position 1 in the low bit") {
  std::vector<int> x = {-1, 1, 1};
  CHECK(TruthTable::index_of(x) == 1u);
  x = {1, 1, -1};
  CHECK(TruthTable::index_of(x) == 4u);
  CHECK(TruthTable::input_value(4, 3) == -1);
  CHECK(TruthTable::input_value(4, 1) == 1);
}

TEST_CASE("from_values rejects bad tables") {
  CHECK_THROWS(TruthTable::from_values(2, {1.0, 1.0, 1.0}));
  CHECK_THROWS(TruthTable::from_values(1, {1.0, 1.5}));
  CHECK_THROWS(TruthTable::from_values(1, {1.0, NAN}));
  CHECK(TruthTable::from_values(1, {1.0, -1.0}).is_boolean());
  CHECK_FALSE(TruthTable::from_values(1, {1.0, 0.5}).is_boolean());
  CHECK_FALSE(TruthTable::from_real_values(1, {3.0, 0.5}).bounded());
}

TEST_CASE("sensitivity examples") {
  const auto parity = TruthTable::parity(5);
  for (std::uint32_t x = 0; x < parity.size(); ++x) CHECK(sensitivity_at(parity, x) == 5.0);
  const auto one = TruthTable::constant(4, 1.0);
  for (std::uint32_t x = 0; x < one.size(); ++x) CHECK(sensitivity_at(one, x) == 0.0);
  const auto maj = TruthTable::majority(3);
  std::vector<int> unanimous = {1, 1, 1}, split = {1, 1, -1};
  CHECK(sensitivity_at(maj, TruthTable::index_of(unanimous)) == 0.0);
  CHECK(sensitivity_at(maj, TruthTable::index_of(split)) == 2.0);
}

TEST_CASE("boolean sensitivity counts disagreeing Hamming neighbors") {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const auto f = sample_random_boolean(6, seed);
    for (std::uint32_t x = 0; x < f.size(); ++x) {
      int flips = 0;
      for (int i = 0; i < 6; ++i) flips += f[x] != f[x ^ (1u << i)];
      CHECK(sensitivity_at(f, x) == flips);
    }
  }
}

TEST_CASE("subset variance examples") {
  const auto parity = TruthTable::parity(4);
  for (std::uint32_t P = 1; P < 16; ++P) CHECK(subset_variance(parity, 3, SubsetMask{P}) == 1.0);
  CHECK(subset_variance(TruthTable::constant(4, -1.0), 5, SubsetMask{7}) == 0.0);
  // Completions of (1,1,1) on {1,2} give outputs 1, 1, 1, -1.
  const auto maj = TruthTable::majority(3);
  CHECK(subset_variance(maj, 0, SubsetMask{3}) == 0.75);
  CHECK_THROWS(subset_variance(maj, 0, SubsetMask{0}));
  CHECK_THROWS(subset_variance(maj, 8, SubsetMask{1}));
}

TEST_CASE("subset variance matches the definition and stays in [0,1]") {
  for (std::uint64_t seed = 0; seed < 4; ++seed) {
    const auto f = random_real_table(5, seed);
    for (std::uint32_t x = 0; x < f.size(); x += 3)
      for (std::uint32_t P = 1; P < 32; ++P) {
        const double v = subset_variance(f, x, SubsetMask{P});
        CHECK(v == doctest::Approx(brute_subset_variance(f, x, P)).epsilon(1e-12));
        CHECK(v >= 0.0);
        CHECK(v <= 1.0);
      }
  }
}

TEST_CASE("block sensitivity of parity is n") {
  for (int n = 1; n <= 8; ++n) {
    const auto f = TruthTable::parity(n);
    for (std::uint32_t x = 0; x < f.size(); x += 5) CHECK(block_sensitivity_exact(f, x).value == n);
  }
}

TEST_CASE("partition DP matches brute-force partition enumeration") {
  for (int n = 1; n <= 7; ++n)
    for (std::uint64_t seed = 0; seed < 3; ++seed) {
      const auto f = seed == 0 ? sample_random_boolean(n, 100 + n) : random_real_table(n, seed * 31 + n);
      for (std::uint32_t x = 0; x < f.size(); x += 7) {
        const auto bs = block_sensitivity_exact(f, x);
        CHECK(bs.value == doctest::Approx(brute_block_sensitivity(f, x)).epsilon(1e-12));
        std::uint32_t covered = 0;
        double total = 0.0;
        for (auto b : bs.partition) {
          CHECK((covered & b.bits) == 0u);
          covered |= b.bits;
          total += subset_variance(f, x, b);
        }
        CHECK(covered == (1u << n) - 1);
        CHECK(total == doctest::Approx(bs.value).epsilon(1e-12));
        CHECK(bs.value >= sensitivity_at(f, x) - 1e-12);
      }
    }
}

TEST_CASE("partition blocks are ordered by lowest position") {
  const auto f = sample_random_boolean(6, 9);
  for (std::uint32_t x = 0; x < f.size(); ++x) {
    const auto parts = block_sensitivity_exact(f, x).partition;
    for (std::size_t i = 1; i < parts.size(); ++i)
      CHECK(std::countr_zero(parts[i - 1].bits) < std::countr_zero(parts[i].bits));
  }
}

TEST_CASE("block sensitivity rejects large arity") {
  const auto f = TruthTable::constant(kMaxExactBlockArity + 1, 1.0);
  CHECK_THROWS(block_sensitivity_exact(f, 0));
}

TEST_CASE("average sensitivity") {
  CHECK(average_sensitivity(TruthTable::parity(6)) == 6.0);
  CHECK(average_sensitivity(TruthTable::constant(6, 0.5)) == 0.0);
  double total = 0.0;
  for (std::uint64_t seed = 0; seed < 200; ++seed)
    total += average_sensitivity(sample_random_boolean(7, seed));
  CHECK(total / 200 == doctest::Approx(3.5).epsilon(0.1 / 3.5));
}

TEST_CASE("Walsh-Hadamard transform") {
  const auto one = walsh_hadamard(TruthTable::constant(4, 1.0));
  CHECK(one.coefficients[0] == 1.0);
  for (std::size_t s = 1; s < one.coefficients.size(); ++s) CHECK(one.coefficients[s] == 0.0);
  const auto par = walsh_hadamard(TruthTable::parity(4));
  for (std::size_t s = 0; s < 16; ++s) CHECK(par.coefficients[s] == (s == 15 ? 1.0 : 0.0));

  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const auto f = random_real_table(6, seed);
    const auto spec = walsh_hadamard(f);
    // Direct summation: hat f(S) = E_x f(x) prod_{i in S} x_i.
    for (std::uint32_t S = 0; S < 64; S += 7) {
      double direct = 0.0;
      for (std::uint32_t x = 0; x < 64; ++x)
        direct += f[x] * ((std::popcount(x & S) & 1) ? -1.0 : 1.0);
      CHECK(spec.coefficients[S] == doctest::Approx(direct / 64).epsilon(1e-12));
    }
    double mass = 0.0, energy = 0.0;
    for (double c : spec.coefficients) mass += c * c;
    for (double v : f.values()) energy += v * v;
    CHECK(std::abs(mass - energy / 64) < 1e-9);
    const auto back = inverse_walsh_hadamard(spec);
    for (std::uint32_t x = 0; x < 64; ++x) CHECK(std::abs(back[x] - f[x]) < 1e-9);
    CHECK(std::abs(average_sensitivity(f) - spectral_average_sensitivity(spec)) < 1e-9);
  }
}

TEST_CASE("average block sensitivity") {
  const auto par = average_block_sensitivity(TruthTable::parity(7));
  CHECK(par.mean == 7.0);
  CHECK_FALSE(par.sampled);
  CHECK(par.inputs == 128);

  AverageBlockOptions sampled;
  sampled.exhaustive_limit = 64;
  sampled.sample_size = 40;
  sampled.seed = 5;
  const auto f = sample_random_boolean(7, 3);
  const auto a = average_block_sensitivity(f, sampled);
  CHECK(a.sampled);
  CHECK(a.inputs == 40);
  CHECK(a.std_error > 0.0);
  sampled.threads = 3;
  const auto b = average_block_sensitivity(f, sampled);
  CHECK(a.mean == b.mean);
  CHECK(a.std_error == b.std_error);
}

TEST_CASE("spectrum-concentrated sampler") {
  for (int n : {3, 7})
    for (int level = 1; level <= n; ++level) {
      const auto f = sample_spectrum_concentrated(n, level, 17 * level);
      CHECK_FALSE(f.is_boolean());
      const auto spec = walsh_hadamard(f);
      double mass = 0.0;
      for (std::uint32_t S = 0; S < spec.coefficients.size(); ++S) {
        const int deg = std::popcount(S);
        if (deg == 0 || deg < level - 1 || deg > level + 1)
          CHECK(std::abs(spec.coefficients[S]) < 1e-12);
        mass += spec.coefficients[S] * spec.coefficients[S];
      }
      CHECK(mass == doctest::Approx(1.0).epsilon(1e-12));
      const double as = average_sensitivity(f);
      CHECK(as >= std::max(1, level - 1) - 1e-9);
      CHECK(as <= std::min(n, level + 1) + 1e-9);
    }
  CHECK_THROWS(sample_spectrum_concentrated(5, 0, 1));
  CHECK_THROWS(sample_spectrum_concentrated(5, 6, 1));
  const auto a = sample_spectrum_concentrated(6, 3, 42);
  const auto b = sample_spectrum_concentrated(6, 3, 42);
  CHECK(std::equal(a.values().begin(), a.values().end(), b.values().begin()));
}

TEST_CASE("random Boolean sampler") {
  const auto f = sample_random_boolean(8, 1);
  CHECK(f.is_boolean());
  double mass = 0.0;
  for (double c : walsh_hadamard(f).coefficients) mass += c * c;
  CHECK(mass == doctest::Approx(1.0));
}

TEST_CASE("threshold binarization") {
  std::vector<double> rising(16);
  for (int i = 0; i < 16; ++i) rising[i] = i * 0.1;
  const auto b = threshold_binarize(rising);
  CHECK_FALSE(b.degenerate);
  int plus = 0;
  for (double v : b.table.values()) plus += v > 0;
  CHECK(plus == 8);

  const auto flat = threshold_binarize(std::vector<double>(8, 0.3));
  CHECK(flat.degenerate);
  for (double v : flat.table.values()) CHECK(v == flat.table[0]);

  // Sweep every candidate threshold and confirm none beats the chosen one.
  Rng rng(4);
  std::uniform_int_distribution<int> level(0, 9);
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<double> out(64);
    for (auto& v : out) v = level(rng) * 0.1;
    const auto chosen = threshold_binarize(out);
    double mean = 0.0;
    for (double v : chosen.table.values()) mean += v;
    mean /= 64;
    const double var = 1.0 - mean * mean;
    for (double t : out) {
      double m = 0.0;
      for (double v : out) m += v > t ? 1.0 : -1.0;
      m /= 64;
      CHECK(1.0 - m * m <= var + 1e-12);
    }
    for (std::size_t i = 0; i < out.size(); ++i)
      CHECK(chosen.table[i] == (out[i] > chosen.threshold ? 1.0 : -1.0));
  }
}

TEST_CASE("exact machinery on mixed radix tables") {
  // Three positions over a 3-letter alphabet, checked against enumeration.
  Rng rng(8);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  std::vector<double> values(27);
  for (auto& v : values) v = u(rng);
  for (std::size_t x = 0; x < 27; x += 4) {
    const auto var = exact::neighborhood_variances(values, 3, 3, x);
    CHECK(var.size() == 8);
    CHECK(var[0] == 0.0);
    for (std::uint32_t P = 1; P < 8; ++P) {
      double sum = 0.0, sq = 0.0;
      int count = 0;
      for (std::size_t y = 0; y < 27; ++y) {
        bool agree = true;
        std::size_t a = x, b = y;
        for (int i = 0; i < 3; ++i, a /= 3, b /= 3)
          if (!((P >> i) & 1u) && a % 3 != b % 3) agree = false;
        if (!agree) continue;
        sum += values[y];
        sq += values[y] * values[y];
        ++count;
      }
      const double mean = sum / count;
      CHECK(var[P] == doctest::Approx(sq / count - mean * mean).epsilon(1e-12));
    }
  }
}

TEST_CASE("table serialization round trips") {
  const auto f = random_real_table(4, 77);
  const auto data = to_data(f);
  const auto j = table_from_json(table_to_json(data));
  CHECK(j.arity == 4);
  CHECK(j.values == data.values);
  const auto bin = decode_binary(encode_binary(data));
  CHECK(bin.values == data.values);
  CHECK(encode_binary(data).size() == 8 + 16 * 8);
  CHECK_THROWS(decode_binary(encode_binary(data).substr(0, 20)));
  CHECK_THROWS(table_from_json(nlohmann::json{{"arity", 2}, {"values", {1, 2}}}));

  const auto dir = std::filesystem::temp_directory_path() / "blocksens_table_io";
  std::filesystem::create_directories(dir);
  for (const char* name : {"t.json", "t.bin"}) {
    const auto path = dir / name;
    std::ofstream(path, std::ios::binary) << encode_table_file(path, data);
    CHECK(read_table_file(path).values == data.values);
  }
  std::filesystem::remove_all(dir);
}
