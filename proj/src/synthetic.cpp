#include "squid/synthetic.hpp"

#include <algorithm>
#include <array>
#include <random>
#include <set>
#include <string_view>

#include "squid/textnorm.hpp"

namespace squid {
namespace {

struct Relation {
  std::string_view name;
  std::array<std::string_view, 5> indexed;
  std::array<std::string_view, 3> held_out;
};

// clang-format off
constexpr std::array<Relation, 8> kRelations{{
  {"capital",
   {"what is the capital of {s}", "which city is the capital of {s}", "name the capital city of {s}",
    "{s} has which city as its capital", "the capital of {s} is called what"},
   {"where is the seat of government of {s}", "from which city is {s} governed",
    "in what city do the rulers of {s} reside"}},
  {"founder",
   {"who founded {s}", "who was the founder of {s}", "{s} was founded by whom", "name the founder of {s}",
    "who is credited with founding {s}"},
   {"who established {s} in the first place", "which person started {s} originally",
    "who is the person that created {s}"}},
  {"currency",
   {"what currency is used in {s}", "what is the currency of {s}", "{s} uses which currency",
    "name the currency of {s}", "which money is used in {s}"},
   {"what do people pay with in {s}", "what is the legal tender of {s}",
    "which coins and notes circulate in {s}"}},
  {"language",
   {"what language is spoken in {s}", "what is the official language of {s}",
    "which language do people speak in {s}", "{s} speaks which language", "name the language of {s}"},
   {"what tongue do the residents of {s} talk in", "how do locals in {s} communicate",
    "which dialect is the official one in {s}"}},
  {"leader",
   {"who is the leader of {s}", "who leads {s}", "who is the head of state of {s}", "name the ruler of {s}",
    "who governs {s}"},
   {"who is the top official in the capital of {s}", "who is in charge of {s}", "who holds power over {s}"}},
  {"anthem",
   {"what is the national anthem of {s}", "which song is the anthem of {s}", "name the anthem of {s}",
    "{s} has which national anthem", "what anthem is sung in {s}"},
   {"what patriotic hymn belongs to {s}", "which tune do citizens of {s} sing at ceremonies",
    "what music represents {s} at official events"}},
  {"river",
   {"what is the longest river in {s}", "which river is the longest in {s}", "name the longest river of {s}",
    "{s} has which river as its longest", "what river runs longest through {s}"},
   {"what is the biggest waterway flowing through {s}", "which major stream crosses {s}",
    "what body of water flows the farthest in {s}"}},
  {"mountain",
   {"what is the highest mountain in {s}", "which mountain is the tallest in {s}", "name the highest peak of {s}",
    "{s} has which mountain as its highest", "what is the tallest peak in {s}"},
   {"what summit towers above the rest in {s}", "which is the loftiest point of {s}",
    "what elevation is the greatest in {s}"}},
}};
// clang-format on

constexpr std::array<std::string_view, 12> kOnsets{"b", "d", "f", "g", "k", "l", "m", "n", "p", "r", "v", "z"};
constexpr std::array<std::string_view, 5> kVowels{"a", "e", "i", "o", "u"};
constexpr std::array<std::string_view, 6> kCodas{"", "n", "r", "l", "x", "th"};

class WordForge {
 public:
  explicit WordForge(std::uint64_t seed) : rng_(seed) {
    // Generated names must never coincide with template vocabulary.
    for (const auto& rel : kRelations) {
      for (const auto t : rel.indexed) reserve(t);
      for (const auto t : rel.held_out) reserve(t);
    }
  }

  std::string fresh(std::size_t syllables) {
    for (;;) {
      std::string w;
      for (std::size_t i = 0; i < syllables; ++i) {
        w += pick(kOnsets);
        w += pick(kVowels);
        if (i + 1 == syllables) w += pick(kCodas);
      }
      if (used_.insert(w).second) return w;
    }
  }

 private:
  void reserve(std::string_view tmpl) {
    for (const auto& tok : normalize(tmpl)) used_.insert(tok);
  }

  template <std::size_t N>
  std::string_view pick(const std::array<std::string_view, N>& from) {
    return from[std::uniform_int_distribution<std::size_t>(0, N - 1)(rng_)];
  }

  std::mt19937_64 rng_;
  std::set<std::string> used_;
};

std::string fill(std::string_view tmpl, const std::string& subject) {
  std::string out(tmpl);
  const auto at = out.find("{s}");
  out.replace(at, 3, subject);
  return out;
}

}  // namespace

std::size_t relation_count() { return kRelations.size(); }

SyntheticWorld make_synthetic_world(const SyntheticConfig& config) {
  if (config.relations == 0 || config.relations > kRelations.size()) {
    throw ValidationError("synthetic world supports 1.." + std::to_string(kRelations.size()) + " relations");
  }
  const std::size_t facts = config.subjects * config.relations;
  if (config.train + config.val + config.test > facts) {
    throw ValidationError("synthetic world has " + std::to_string(facts) + " facts, fewer than requested questions");
  }

  std::mt19937_64 rng(config.seed);
  WordForge forge(config.seed ^ 0x5eedf00dULL);

  std::vector<std::string> subjects;
  for (std::size_t i = 0; i < config.subjects; ++i) subjects.push_back(forge.fresh(3));

  // Answer entities are "first last" pairs; the name pools are small enough
  // that tokens recur across answers, so partial-F1 matches occur.
  const auto pool_size = std::max<std::size_t>(16, facts / 4);
  std::vector<std::string> firsts, lasts;
  for (std::size_t i = 0; i < pool_size; ++i) firsts.push_back(forge.fresh(2));
  for (std::size_t i = 0; i < pool_size; ++i) lasts.push_back(forge.fresh(2));

  struct Fact {
    std::size_t subject, relation;
    std::string answer;
  };
  std::vector<Fact> fact_list;
  std::set<std::string> answers_seen;
  std::uniform_int_distribution<std::size_t> name(0, pool_size - 1);
  for (std::size_t s = 0; s < config.subjects; ++s) {
    for (std::size_t r = 0; r < config.relations; ++r) {
      std::string answer;
      do {
        answer = firsts[name(rng)] + " " + lasts[name(rng)];
      } while (!answers_seen.insert(answer).second);
      fact_list.push_back({s, r, answer});
    }
  }

  SyntheticWorld world;
  world.answer_entities = answers_seen.size();
  world.indexed_templates_per_fact = kRelations[0].indexed.size();

  for (const auto& f : fact_list) {
    for (const auto tmpl : kRelations[f.relation].indexed) {
      world.corpus.push_back({0, fill(tmpl, subjects[f.subject]), f.answer,
                              "synthetic/" + std::string(kRelations[f.relation].name)});
    }
  }
  std::shuffle(world.corpus.begin(), world.corpus.end(), rng);
  for (std::size_t i = 0; i < world.corpus.size(); ++i) world.corpus[i].id = static_cast<QaId>(i);

  std::vector<std::size_t> order(fact_list.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::shuffle(order.begin(), order.end(), rng);

  std::size_t cursor = 0;
  auto take = [&](std::size_t n) {
    EvalSet set;
    for (std::size_t i = 0; i < n; ++i) {
      const auto& f = fact_list[order[cursor++]];
      const auto& held = kRelations[f.relation].held_out;
      const auto tmpl = held[std::uniform_int_distribution<std::size_t>(0, held.size() - 1)(rng)];
      set.push_back({static_cast<QaId>(i), fill(tmpl, subjects[f.subject]), {f.answer}});
    }
    return set;
  };
  world.train = take(config.train);
  world.val = take(config.val);
  world.test = take(config.test);
  return world;
}

}  // namespace squid
