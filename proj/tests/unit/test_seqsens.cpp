#include <algorithm>
#include <cmath>
#include <map>
#include <set>
#include <sstream>

#include "blocksens/boolfn.hpp"
#include "blocksens/dataset.hpp"
#include "blocksens/random.hpp"
#include "blocksens/samplers.hpp"
#include "blocksens/seqsens.hpp"
#include "blocksens/task_models.hpp"
#include "doctest.h"

using namespace blocksens;

namespace {

IndexSet set_of(int n, std::initializer_list<int> positions) {
  std::vector<int> p(positions);
  return IndexSet::from_positions(n, p);
}

struct Binary {
  Vocabulary vocab;
  TokenId plus = vocab.intern("1");
  TokenId minus = vocab.intern("-1");
  std::vector<TokenId> alphabet = {plus, minus};

  Tokens tokens_of(std::uint32_t index, int n) const {
    Tokens t(n);
    for (int i = 1; i <= n; ++i) t[i - 1] = TruthTable::input_value(index, i) == 1 ? plus : minus;
    return t;
  }
};

ExhaustiveSampler enumerating(const std::vector<TokenId>& alphabet) {
  ExhaustiveOptions options;
  options.enumerate = true;
  return ExhaustiveSampler(alphabet, nullptr, options);
}

// Maximum over every subcollection of pairwise disjoint sets.
double brute_packing(std::span<const IndexSet> sets, std::span<const double> w) {
  double best = 0.0;
  const std::size_t m = sets.size();
  for (std::uint32_t pick = 0; pick < (1u << m); ++pick) {
    double total = 0.0;
    bool ok = true;
    for (std::size_t i = 0; i < m && ok; ++i) {
      if (!((pick >> i) & 1u)) continue;
      for (std::size_t j = 0; j < i; ++j)
        if (((pick >> j) & 1u) && sets[i].intersects(sets[j])) ok = false;
      total += w[i];
    }
    if (ok) best = std::max(best, total);
  }
  return best;
}

class ZeroOnOneCompletion : public SequenceDistribution {
 public:
  explicit ZeroOnOneCompletion(Tokens banned) : banned_(std::move(banned)) {}
  double log_weight(std::span<const TokenId> s) const override {
    return std::equal(s.begin(), s.end(), banned_.begin(), banned_.end())
               ? -std::numeric_limits<double>::infinity()
               : 0.0;
  }
  std::string name() const override { return "zero-on-one"; }

 private:
  Tokens banned_;
};

}  // namespace

TEST_CASE("index sets") {
  auto s = set_of(70, {1, 65, 70});
  CHECK(s.count() == 3);
  CHECK(s.contains(65));
  CHECK_FALSE(s.contains(64));
  CHECK(s.lowest() == 1);
  CHECK(s.positions() == std::vector<int>{1, 65, 70});
  CHECK(s.to_string() == "{1,65,70}");
  CHECK(s.intersects(set_of(70, {70})));
  CHECK_FALSE(s.intersects(set_of(70, {2, 3})));
  CHECK(IndexSet::range(5, 2, 4) == set_of(5, {2, 3, 4}));
  CHECK(set_of(5, {1}) < set_of(5, {2}));
  CHECK_THROWS(set_of(5, {6}));
  CHECK_THROWS(set_of(5, {0}));
}

TEST_CASE("vocabulary interning") {
  Vocabulary v;
  CHECK(v.size() == 1);
  const auto a = v.intern("a");
  CHECK(v.intern("a") == a);
  CHECK(v.find("zzz") == kUnknownToken);
  CHECK(v.token(a) == "a");
  std::vector<std::string> words = {"a", "b", "a"};
  const auto ids = v.encode(words);
  CHECK(v.decode(ids) == words);
}

TEST_CASE("subset family examples") {
  SubsetFamilyConfig config;
  const auto three = build_subset_family(3, config);
  std::set<std::vector<int>> got;
  for (const auto& s : three) got.insert(s.positions());
  CHECK(three.size() == 7);
  CHECK(got == std::set<std::vector<int>>{{1}, {2}, {3}, {1, 2}, {2, 3}, {1, 2, 3}, {1, 3}});
  // {1,3} comes only from the chunk unions, after every span.
  CHECK(three.back() == set_of(3, {1, 3}));

  const auto one = build_subset_family(1, config);
  REQUIRE(one.size() == 1);
  CHECK(one[0] == set_of(1, {1}));

  CHECK(build_subset_family(20, config).size() <= 8 * 20 + 127);
  config.window = FocusWindow{10, 7};
  CHECK(build_subset_family(20, config).size() <= 8 * 20 + 256);
}

TEST_CASE("subset family stays within budget and has no duplicates") {
  for (bool window : {false, true})
    for (int n = 1; n <= 160; n += (n < 40 ? 1 : 17)) {
      SubsetFamilyConfig config;
      if (window) config.window = FocusWindow{(n + 1) / 2, 7};
      const auto family = build_subset_family(n, config);
      CHECK(family.size() <= static_cast<std::size_t>(8 * n + 256));
      std::set<IndexSet> unique(family.begin(), family.end());
      CHECK(unique.size() == family.size());
      for (int i = 1; i <= n; ++i) CHECK(std::count(family.begin(), family.end(), set_of(n, {i})) == 1);
    }
}

TEST_CASE("full family enumerates every nonempty subset") {
  CHECK(full_subset_family(4).size() == 15);
  CHECK_THROWS(full_subset_family(21));
}

TEST_CASE("packing examples") {
  const std::vector<IndexSet> sets = {set_of(4, {1, 2}), set_of(4, {2, 3}), set_of(4, {4})};
  const std::vector<double> w = {0.9, 0.8, 0.3};
  for (auto mode : {PackingMode::kExact, PackingMode::kGreedy}) {
    PackingOptions options;
    options.mode = mode;
    const auto r = solve_packing(4, sets, w, options);
    CHECK(r.value == doctest::Approx(1.2));
    CHECK(r.chosen == std::vector<std::size_t>{0, 2});
  }
  const std::vector<double> zero = {0.0, 0.0, 0.0};
  const auto r = solve_packing(4, sets, zero);
  CHECK(r.value == 0.0);
  CHECK(r.chosen.empty());
  CHECK(r.mode == "exact");
  CHECK(packing_mode_from_string("greedy") == PackingMode::kGreedy);
  CHECK_THROWS(packing_mode_from_string("fast"));
}

TEST_CASE("exact packing matches enumeration and greedy never beats it") {
  Rng rng(2024);
  std::uniform_int_distribution<int> len(2, 16);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int config = 0; config < 100; ++config) {
    const int n = len(rng);
    std::uniform_int_distribution<int> pos(1, n), count(1, 12);
    std::vector<IndexSet> sets;
    std::vector<double> w;
    const int m = count(rng);
    for (int k = 0; k < m; ++k) {
      IndexSet s(n);
      const int size = 1 + static_cast<int>(u(rng) * 3);
      for (int j = 0; j < size; ++j) s.insert(pos(rng));
      sets.push_back(s);
      w.push_back(u(rng) < 0.2 ? 0.0 : u(rng));
    }
    PackingOptions exact;
    exact.mode = PackingMode::kExact;
    PackingOptions greedy;
    greedy.mode = PackingMode::kGreedy;
    const auto e = solve_packing(n, sets, w, exact);
    const auto g = solve_packing(n, sets, w, greedy);
    CHECK(e.value == doctest::Approx(brute_packing(sets, w)).epsilon(1e-12));
    CHECK(g.value <= e.value + 1e-12);
    double total = 0.0;
    for (std::size_t i = 0; i < e.chosen.size(); ++i) {
      total += w[e.chosen[i]];
      CHECK(w[e.chosen[i]] > 0.0);
      for (std::size_t j = 0; j < i; ++j) CHECK_FALSE(sets[e.chosen[i]].intersects(sets[e.chosen[j]]));
    }
    CHECK(total == doctest::Approx(e.value));
  }
}

TEST_CASE("subset seeds depend only on seed, input and subset") {
  const auto a = subset_seed(7, "s1", set_of(5, {1, 2}));
  CHECK(a == subset_seed(7, "s1", set_of(5, {1, 2})));
  CHECK(a != subset_seed(8, "s1", set_of(5, {1, 2})));
  CHECK(a != subset_seed(7, "s2", set_of(5, {1, 2})));
  CHECK(a != subset_seed(7, "s1", set_of(5, {1, 3})));
}

TEST_CASE("sample validation and clamping") {
  const Tokens x = {1, 2, 3};
  const auto P = set_of(3, {2});
  std::vector<Tokens> good = {{1, 5, 3}, {1, 2, 3}};
  CHECK_NOTHROW(validate_samples(x, P, good));
  std::vector<Tokens> outside = {{1, 5, 4}};
  CHECK_THROWS_AS(validate_samples(x, P, outside), ProtocolViolation);
  std::vector<Tokens> shorter = {{1, 5}};
  CHECK_THROWS_AS(validate_samples(x, P, shorter), ProtocolViolation);

  std::size_t clamped = 0;
  const auto c = clamp_scores({1.0000001, -0.5, -3.0}, 3, clamped);
  CHECK(c == std::vector<double>{1.0, -0.5, -1.0});
  CHECK(clamped == 2);
  CHECK_THROWS_AS(clamp_scores({NAN}, 1, clamped), ProtocolViolation);
  CHECK_THROWS_AS(clamp_scores({0.1, 0.2}, 1, clamped), ProtocolViolation);
}

TEST_CASE("parity subset variance through the oracles equals the table value") {
  Binary b;
  const int n = 6;
  TruthTableModel model(b.vocab, TruthTable::parity(n));
  const auto sampler = enumerating(b.alphabet);
  SubsetFamilyConfig config;
  config.include_original = false;
  EvalContext context{sampler, model, 3, "p", 0};
  const auto x = b.tokens_of(13, n);
  for (const auto& P : full_subset_family(n)) {
    const auto s = estimate_subset_sensitivity(x, P, config, context);
    CHECK(s.variance == 1.0);
    CHECK(s.samples_used == (1 << P.count()));
  }
}

TEST_CASE("full family estimate equals exact block sensitivity bitwise") {
  Binary b;
  EstimatorConfig config;
  config.full_family = true;
  config.family.include_original = false;
  config.packing.mode = PackingMode::kExact;
  const auto sampler = enumerating(b.alphabet);
  for (int n = 2; n <= 6; ++n)
    for (std::uint64_t seed = 0; seed < 3; ++seed) {
      const auto f = seed == 0 ? TruthTable::majority(n) : sample_random_boolean(n, seed * 13 + n);
      TruthTableModel model(b.vocab, f);
      for (std::uint32_t x = 0; x < f.size(); ++x) {
        const auto report = estimate_input({"x", b.tokens_of(x, n)}, sampler, model, config);
        REQUIRE_FALSE(report.error);
        CHECK(report.bs_estimate == block_sensitivity_exact(f, x).value);
        for (const auto& s : report.scores) {
          std::uint32_t mask = 0;
          for (int p : s.set.positions()) mask |= 1u << (p - 1);
          CHECK(s.variance == subset_variance(f, x, SubsetMask{mask}));
        }
      }
    }
}

TEST_CASE("restricted family is a lower bound that dominates singletons") {
  Binary b;
  const int n = 9;
  const auto f = threshold_binarize(sample_spectrum_concentrated(n, 4, 5).values()).table;
  TruthTableModel model(b.vocab, f);
  const auto sampler = enumerating(b.alphabet);
  EstimatorConfig config;
  config.family.include_original = false;
  for (std::uint32_t x = 0; x < f.size(); x += 9) {
    const auto report = estimate_input({"x", b.tokens_of(x, n)}, sampler, model, config);
    REQUIRE_FALSE(report.error);
    CHECK(report.bs_estimate <= block_sensitivity_exact(f, x).value);
    CHECK(report.bs_estimate >= sensitivity_at(f, x));
  }
}

TEST_CASE("dataset estimates do not depend on the thread count") {
  Vocabulary vocab;
  std::vector<TokenId> alphabet;
  for (const char* t : {"a", "b", "c"}) alphabet.push_back(vocab.intern(t));
  const std::map<std::string, std::vector<double>> lexicon = {
      {"a", {0.9, -0.2}}, {"b", {-0.7, 0.4}}, {"c", {0.1, 0.8}}};
  LexiconBoeModel model(vocab, lexicon, 2);
  UniformTokenSampler sampler(alphabet);
  Rng rng(1);
  std::uniform_int_distribution<int> pick(0, 2), len(3, 12);
  std::vector<InputItem> items;
  for (int i = 0; i < 12; ++i) {
    Tokens t(len(rng));
    for (auto& tok : t) tok = alphabet[pick(rng)];
    items.push_back({"s" + std::to_string(i), t});
  }
  EstimatorConfig config;
  config.seed = 99;
  const auto one = average_block_sensitivity_dataset(items, sampler, model, config, 1);
  const auto four = average_block_sensitivity_dataset(items, sampler, model, config, 4);
  CHECK(one.mean == four.mean);
  CHECK(one.std_error == four.std_error);
  REQUIRE(one.reports.size() == four.reports.size());
  for (std::size_t i = 0; i < one.reports.size(); ++i) {
    CHECK(one.reports[i].input_id == four.reports[i].input_id);
    CHECK(one.reports[i].bs_estimate == four.reports[i].bs_estimate);
    CHECK(one.reports[i].winning_packing == four.reports[i].winning_packing);
  }
}

TEST_CASE("dataset summary examples") {
  Binary b;
  const int n = 7;
  TruthTableModel parity(b.vocab, TruthTable::parity(n));
  TruthTableModel constant(b.vocab, TruthTable::constant(n, 1.0));
  UniformTokenSampler sampler(b.alphabet);
  std::vector<InputItem> items;
  for (std::uint32_t x = 0; x < 8; ++x) items.push_back({std::to_string(x), b.tokens_of(x * 15, n)});
  EstimatorConfig config;
  config.family.samples_per_subset = 64;
  config.family.include_original = false;
  const auto p = average_block_sensitivity_dataset(items, sampler, parity, config);
  CHECK(p.mean == doctest::Approx(7.0).epsilon(0.05));
  CHECK(p.per_length.at(n).count == 8);
  CHECK(average_block_sensitivity_dataset(items, sampler, constant, config).mean == 0.0);
  std::vector<InputItem> single(items.begin(), items.begin() + 1);
  const auto s = average_block_sensitivity_dataset(single, sampler, parity, config);
  CHECK(s.mean == s.reports[0].bs_estimate);
  CHECK(s.std_error == 0.0);
}

TEST_CASE("exhaustive sampler") {
  Vocabulary vocab;
  const auto a = vocab.intern("a"), b = vocab.intern("b");
  const Tokens x = {a, a, a};
  const auto P = set_of(3, {1, 3});
  ExhaustiveSampler uniform({a, b});
  const auto all = uniform.completions(x, P);
  CHECK(all == std::vector<Tokens>{{a, a, a}, {b, a, a}, {a, a, b}, {b, a, b}});

  std::map<Tokens, int> counts;
  for (const auto& s : uniform.sample(x, P, 4000, 3)) ++counts[s];
  CHECK(counts.size() == 4);
  for (const auto& [s, c] : counts) CHECK(std::abs(c - 1000) < 150);

  auto banned = std::make_shared<ZeroOnOneCompletion>(Tokens{b, a, b});
  ExhaustiveSampler weighted({a, b}, banned);
  for (const auto& s : weighted.sample(x, P, 500, 4)) CHECK(s != Tokens{b, a, b});

  ExhaustiveOptions tiny;
  tiny.cap = 3;
  ExhaustiveSampler capped({a, b}, nullptr, tiny);
  CHECK_THROWS_AS(capped.sample(x, P, 2, 1), EnumerationCapExceeded);
  CHECK(uniform.sample(x, P, 10, 5) == uniform.sample(x, P, 10, 5));
}

TEST_CASE("built-in samplers never touch positions outside P") {
  Vocabulary vocab;
  std::vector<TokenId> alphabet;
  for (const char* t : {"x", "y", "z", "w"}) alphabet.push_back(vocab.intern(t));
  std::vector<Tokens> corpus = {{alphabet[0], alphabet[1], alphabet[2]},
                                {alphabet[1], alphabet[1], alphabet[3], alphabet[0]}};
  auto markov = std::make_shared<MarkovModel>(2, 0.5, alphabet);
  markov->fit(corpus);
  std::vector<std::unique_ptr<NeighborSampler>> samplers;
  samplers.push_back(std::make_unique<ExhaustiveSampler>(alphabet));
  samplers.push_back(std::make_unique<ExhaustiveSampler>(alphabet, markov));
  samplers.push_back(std::make_unique<UniformTokenSampler>(alphabet));
  samplers.push_back(std::make_unique<MarkovGibbsSampler>(markov));
  Rng rng(6);
  std::uniform_int_distribution<int> pick(0, 3);
  for (int trial = 0; trial < 30; ++trial) {
    const int n = 3 + trial % 6;
    Tokens x(n);
    for (auto& t : x) t = alphabet[pick(rng)];
    IndexSet P(n);
    for (int i = 1; i <= n; ++i)
      if (pick(rng) < 2) P.insert(i);
    if (P.empty()) P.insert(1);
    for (const auto& s : samplers) {
      const auto out = s->sample(x, P, 7, trial);
      CHECK(out.size() == 7);
      CHECK_NOTHROW(validate_samples(x, P, out));
      CHECK(out == s->sample(x, P, 7, trial));
    }
  }
}

TEST_CASE("first-order Gibbs marginals match the corpus unigram") {
  Vocabulary vocab;
  std::vector<TokenId> alphabet;
  for (const char* t : {"p", "q", "r"}) alphabet.push_back(vocab.intern(t));
  const std::vector<double> probs = {0.5, 0.3, 0.2};
  Rng rng(11);
  std::discrete_distribution<int> draw(probs.begin(), probs.end());
  std::vector<Tokens> corpus;
  std::vector<double> unigram(3, 0.0);
  double total = 0.0;
  for (int s = 0; s < 400; ++s) {
    Tokens t(20);
    for (auto& tok : t) {
      const int k = draw(rng);
      tok = alphabet[k];
      unigram[k] += 1.0;
      total += 1.0;
    }
    corpus.push_back(t);
  }
  for (auto& u : unigram) u /= total;
  auto markov = std::make_shared<MarkovModel>(1, 1.0, alphabet);
  markov->fit(corpus);
  GibbsOptions options;
  options.thinning = 10;
  MarkovGibbsSampler sampler(markov, options);

  const Tokens x(30, alphabet[2]);
  const auto P = IndexSet::range(30, 1, 30);
  std::vector<double> observed(3, 0.0);
  double draws = 0.0;
  for (const auto& s : sampler.sample(x, P, 200, 5))
    for (std::size_t i = 10; i < s.size(); i += 10) {
      const auto k = std::find(alphabet.begin(), alphabet.end(), s[i]) - alphabet.begin();
      observed[k] += 1.0;
      draws += 1.0;
    }
  double chi2 = 0.0;
  for (int k = 0; k < 3; ++k) {
    const double expected = unigram[k] * draws;
    chi2 += (observed[k] - expected) * (observed[k] - expected) / expected;
  }
  // 2 degrees of freedom, p = 0.001.
  CHECK(chi2 < 13.82);
}

TEST_CASE("Markov model conditionals") {
  Vocabulary vocab;
  const auto a = vocab.intern("a"), b = vocab.intern("b");
  MarkovModel m(1, 1.0, {a, b});
  m.fit(std::vector<Tokens>{{a, a, b}});
  const Tokens s = {a, b};
  // Context "a" was followed by a, b once each; three outcomes with +1 smoothing.
  CHECK(std::exp(m.log_conditional(s, 1)) == doctest::Approx(2.0 / 5.0));
  double mass = 0.0;
  for (TokenId t : {a, b}) {
    const Tokens probe = {a, t};
    mass += std::exp(m.log_conditional(probe, 1));
  }
  const Tokens end = {a};
  mass += std::exp(m.log_conditional(end, 1));
  CHECK(mass == doctest::Approx(1.0));
}

TEST_CASE("task models") {
  Binary b;
  const int n = 5;
  ParityModel parity(b.vocab, {{"1", 1.0}, {"-1", -1.0}});
  const auto table = TruthTable::parity(n);
  for (std::uint32_t x = 0; x < table.size(); ++x)
    CHECK(parity.evaluate(b.tokens_of(x, n))[0] == table[x]);

  LexiconBoeModel zero(b.vocab, {{"1", {0.0}}, {"-1", {0.0}}}, 1);
  for (std::uint32_t x = 0; x < 32; ++x) CHECK(zero.evaluate(b.tokens_of(x, n))[0] == 0.0);

  Vocabulary vocab;
  const auto ta = vocab.intern("a"), tb = vocab.intern("b");
  DfaSpec even;
  even.start = "even";
  even.accept = {"even"};
  even.transitions = {{"even", {{"a", "even"}, {"b", "odd"}}}, {"odd", {{"a", "odd"}, {"b", "even"}}}};
  DfaModel dfa(vocab, even);
  // Reading b as -1 and a as +1, even-b acceptance is parity.
  const auto par = TruthTable::parity(n);
  for (std::uint32_t x = 0; x < 32; ++x) {
    Tokens t(n);
    for (int i = 1; i <= n; ++i) t[i - 1] = TruthTable::input_value(x, i) == 1 ? ta : tb;
    CHECK(dfa.evaluate(t)[0] == par[x]);
  }
  const Tokens all_a(n, ta);
  ExhaustiveOptions options;
  options.enumerate = true;
  ExhaustiveSampler sampler({ta, tb}, nullptr, options);
  EstimatorConfig config;
  config.full_family = true;
  config.family.include_original = false;
  CHECK(estimate_input({"a", all_a}, sampler, dfa, config).bs_estimate == n);

  MajorityTokenModel maj(vocab, "a", "b");
  CHECK(maj.evaluate(Tokens{ta, ta, tb})[0] == 1.0);
  CHECK(maj.evaluate(Tokens{ta, tb})[0] == 0.0);
  CHECK(maj.evaluate(Tokens{tb})[0] == -1.0);

  const auto other = vocab.intern("zzz");
  CHECK(parity.evaluate(Tokens{other})[0] == 0.0);
}

TEST_CASE("dataset parsing") {
  std::istringstream good(R"({"id":"a","tokens":["x","y"],"label":1}

{"id":"b","tokens":["z"]})");
  const auto records = parse_dataset_jsonl(good);
  REQUIRE(records.size() == 2);
  CHECK(records[0].tokens == std::vector<std::string>{"x", "y"});
  CHECK(records[0].label == nlohmann::json(1));
  CHECK_FALSE(records[1].label);

  auto line_of_failure = [](const std::string& text) -> std::size_t {
    std::istringstream in(text);
    try {
      parse_dataset_jsonl(in);
    } catch (const DatasetError& e) {
      return e.line();
    }
    return 0;
  };
  CHECK(line_of_failure("{\"id\":\"a\",\"tokens\":[\"x\"]}\n{oops") == 2);
  CHECK(line_of_failure("{\"id\":\"a\",\"tokens\":[]}") == 1);
  CHECK(line_of_failure("{\"id\":\"a\",\"tokens\":[\"x\"]}\n\n{\"id\":\"a\",\"tokens\":[\"y\"]}") == 3);
  CHECK(line_of_failure("{\"id\":7,\"tokens\":[\"x\"]}") == 1);

  std::istringstream text("the cat\n\n  sat  down \n");
  const auto plain = parse_dataset_text(text);
  REQUIRE(plain.size() == 2);
  CHECK(plain[1].id == "3");
  CHECK(plain[1].tokens == std::vector<std::string>{"sat", "down"});
}
