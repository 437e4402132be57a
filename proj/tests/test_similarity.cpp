#include <gtest/gtest.h>

#include <random>

#include <json.hpp>

#include "slam/error.h"
#include "slam/similarity.h"
#include "test_util.h"

using namespace slam;
using namespace slam::testing;
using nlohmann::json;

namespace {

// Embedding provider answering fixed vectors for known texts.
struct FixedEmbeddings {
  ManualClock clock{t0()};
  std::map<std::string, std::vector<double>> table;
  Gateway gateway;

  FixedEmbeddings()
      : gateway(clock, [this](const std::string&, Duration) {
          return std::make_unique<FunctionTransport>(
              [this](const std::string&, const std::string& body, const HttpHeaders&) {
                auto text = json::parse(body)["texts"][0].get<std::string>();
                return HttpResponse{200, json{{"vectors", {table.at(text)}}}.dump()};
              });
        }) {
    gateway.add_embedding_provider({"fixed", "http://e", 3, std::chrono::seconds(5)});
  }
};

std::vector<std::string> generated_strings(int n) {
  std::mt19937_64 rng(99);
  static const std::vector<std::string> words = {"plan", "day", "goal", "back", "inbox", "demo",
                                                 "rag", "lift", "weights", "car", "report", "a"};
  std::vector<std::string> out;
  for (int i = 0; i < n; ++i) {
    std::string s;
    int len = 1 + static_cast<int>(rng() % 15);
    for (int w = 0; w < len; ++w) s += (w ? " " : "") + words[rng() % words.size()];
    out.push_back(s);
  }
  return out;
}

}  // namespace

TEST(Tfidf, Tokens) {
  EXPECT_EQ(tfidf_tokens("Hello, World! GPT-4"),
            (std::vector<std::string>{"hello", "world", "gpt", "4"}));
  EXPECT_TRUE(tfidf_tokens("?!").empty());
}

TEST(Tfidf, SelfAndDisjoint) {
  std::vector<std::string> c{"red fish", "blue bird", "red bird"};
  EXPECT_EQ(tfidf_cosine(c, "red fish", "red fish"), 1.0);
  EXPECT_EQ(tfidf_cosine(c, "red fish", "blue bird"), 0.0);
}

TEST(Tfidf, SmallOracle) {
  auto o = fixture_json("tfidf_oracle.json")["small"];
  double got = tfidf_cosine(o["corpus"].get<std::vector<std::string>>(), o["a"], o["b"]);
  EXPECT_NEAR(got, std::stod(o["expected"].get<std::string>()), 1e-9);
}

TEST(Tfidf, TwentyPairOracle) {
  auto o = fixture_json("tfidf_oracle.json");
  auto corpus = o["corpus"].get<std::vector<std::string>>();
  ASSERT_EQ(o["pairs"].size(), 20u);
  TfidfModel model(corpus);
  for (const auto& p : o["pairs"]) {
    double want = std::stod(p["expected"].get<std::string>());
    EXPECT_NEAR(model.cosine(p["reference"], p["candidate"]), want, 1e-9) << p.dump();
    EXPECT_NEAR(tfidf_cosine(corpus, p["reference"], p["candidate"]), want, 1e-9);
  }
}

TEST(Tfidf, IdfFormula) {
  TfidfModel m({"a b", "b c", "a c"});
  EXPECT_DOUBLE_EQ(m.idf("a"), std::log(4.0 / 3.0) + 1.0);
  EXPECT_DOUBLE_EQ(m.idf("zzz"), std::log(4.0) + 1.0);
}

TEST(Tfidf, Errors) {
  std::vector<std::string> c{"words here", "!!!"};
  try {
    tfidf_cosine(c, "words here", "!!!");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kEmptyText);
  }
  EXPECT_THROW(tfidf_cosine(c, "words here", "not in corpus"), Error);
  EXPECT_THROW(TfidfModel(std::vector<std::string>{}), Error);
}

TEST(Cosine, MappedRange) {
  std::vector<double> e1{1, 0, 0}, e2{0, 1, 0}, neg{-1, 0, 0};
  EXPECT_EQ(mapped_cosine(e1, e1), 1.0);
  EXPECT_DOUBLE_EQ(mapped_cosine(e1, e2), 0.5);
  EXPECT_DOUBLE_EQ(mapped_cosine(e1, neg), 0.0);
  std::vector<double> zero{0, 0, 0}, two{1, 0};
  EXPECT_THROW(cosine(e1, zero), Error);
  EXPECT_THROW(cosine(e1, two), Error);
}

TEST(Embedding, StubVectors) {
  FixedEmbeddings f;
  f.table = {{"x", {1, 0, 0}}, {"y", {0, 1, 0}}, {"z", {-1, 0, 0}}};
  EXPECT_EQ(embedding_cosine(f.gateway, "fixed", "x", "x"), 1.0);
  EXPECT_DOUBLE_EQ(embedding_cosine(f.gateway, "fixed", "x", "y"), 0.5);
  EXPECT_DOUBLE_EQ(embedding_cosine(f.gateway, "fixed", "x", "z"), 0.0);
}

TEST(Embedding, ZeroVectorIsRejected) {
  FixedEmbeddings f;
  f.table = {{"x", {1, 0, 0}}, {"0", {0, 0, 0}}};
  try {
    embedding_cosine(f.gateway, "fixed", "x", "0");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kZeroVector);
  }
}

TEST(Bleu, DegenerateCases) {
  EXPECT_EQ(bleu("a b c d", ""), 0.0);
  EXPECT_EQ(bleu("the cat sat on the mat", "the cat sat on the mat"), 1.0);
  EXPECT_EQ(bleu("x y z", "p q r s"), 0.0);
}

TEST(Bleu, ReferenceImplementationOracle) {
  auto cases = fixture_json("bleu_oracle.json");
  ASSERT_EQ(cases.size(), 20u);
  for (const auto& c : cases) {
    EXPECT_NEAR(bleu(c["reference"], c["candidate"]), std::stod(c["expected"].get<std::string>()),
                1e-6)
        << c.dump();
  }
}

TEST(Bleu, CatOnMat) {
  EXPECT_NEAR(bleu("the cat sat on the mat", "the cat sat on mat"), 0.6511126026643229, 1e-6);
}

TEST(SemBleu, MeanOfComponents) {
  std::mt19937_64 rng(17);
  std::uniform_real_distribution<double> d(0, 1);
  for (int i = 0; i < 1000; ++i) {
    double e = d(rng), b = d(rng);
    EXPECT_EQ(sem_bleu_combine(e, b), (e + b) / 2.0);
  }
}

TEST(SemBleu, ThroughGateway) {
  FixedEmbeddings f;
  f.table = {{"the cat sat on the mat", {1, 0, 0}}, {"the cat sat on mat", {0, 1, 0}}};
  double got = sem_bleu(f.gateway, "fixed", "the cat sat on the mat", "the cat sat on mat");
  EXPECT_EQ(got, (0.5 + bleu("the cat sat on the mat", "the cat sat on mat")) / 2.0);
}

TEST(SimilarityProperty, SelfSimilarityIsOneForAllMetrics) {
  SimulatedGateway g;
  auto texts = generated_strings(50);
  TfidfModel model(texts);
  for (const auto& t : texts) {
    EXPECT_EQ(model.cosine(t, t), 1.0) << t;
    EXPECT_EQ(embedding_cosine(g.gateway, "sbert", t, t), 1.0) << t;
    EXPECT_EQ(bleu(t, t), 1.0) << t;
    EXPECT_EQ(sem_bleu(g.gateway, "sbert", t, t), 1.0) << t;
  }
}

TEST(SimilarityProperty, ValuesStayInUnitInterval) {
  SimulatedGateway g;
  auto texts = generated_strings(30);
  TfidfModel model(texts);
  for (std::size_t i = 0; i < texts.size(); ++i) {
    for (std::size_t j = 0; j < texts.size(); j += 3) {
      for (double v : {model.cosine(texts[i], texts[j]),
                       embedding_cosine(g.gateway, "sbert", texts[i], texts[j]),
                       bleu(texts[i], texts[j]), sem_bleu(g.gateway, "sbert", texts[i], texts[j])}) {
        EXPECT_GE(v, 0.0);
        EXPECT_LE(v, 1.0);
      }
      EXPECT_DOUBLE_EQ(model.cosine(texts[i], texts[j]), model.cosine(texts[j], texts[i]));
    }
  }
}
