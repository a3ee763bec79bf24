#include "ctxguard/errors.hpp"
#include "ctxguard/text.hpp"

#include <doctest.h>

#include <utility>

using namespace ctxguard;
using V = std::vector<std::string>;

TEST_CASE("split_identifier") {
  CHECK(split_identifier("compose_button") == V{"compose", "button"});
  CHECK(split_identifier("isLongClickable") == V{"is", "long", "clickable"});
  CHECK(split_identifier("co.uk.samsnyder.pa:id/speakButton") ==
        V{"co", "uk", "samsnyder", "pa", "id", "speak", "button"});
  CHECK(split_identifier("HTTPServer") == V{"http", "server"});
  CHECK(split_identifier("btn2Send") == V{"btn", "2", "send"});
  CHECK(split_identifier("Press & Hold") == V{"press", "hold"});
  CHECK(split_identifier("").empty());
  CHECK(split_identifier("__").empty());
}

TEST_CASE("porter_stem matches the reference implementation") {
  // Frozen from NLTK's PorterStemmer in ORIGINAL_ALGORITHM mode.
  const std::pair<const char *, const char *> cases[] = {
      {"caresses", "caress"}, {"ponies", "poni"}, {"ties", "ti"},
      {"caress", "caress"}, {"cats", "cat"}, {"feed", "feed"},
      {"agreed", "agre"}, {"plastered", "plaster"}, {"bled", "bled"},
      {"motoring", "motor"}, {"sing", "sing"}, {"conflated", "conflat"},
      {"troubled", "troubl"}, {"sized", "size"}, {"hopping", "hop"},
      {"tanned", "tan"}, {"falling", "fall"}, {"hissing", "hiss"},
      {"fizzed", "fizz"}, {"failing", "fail"}, {"filing", "file"},
      {"happy", "happi"}, {"sky", "sky"}, {"relational", "relat"},
      {"conditional", "condit"}, {"rational", "ration"}, {"valenci", "valenc"},
      {"hesitanci", "hesit"}, {"digitizer", "digit"}, {"conformabli", "conform"},
      {"radicalli", "radic"}, {"differentli", "differ"}, {"vileli", "vile"},
      {"analogousli", "analog"}, {"vietnamization", "vietnam"},
      {"predication", "predic"}, {"operator", "oper"}, {"feudalism", "feudal"},
      {"decisiveness", "decis"}, {"hopefulness", "hope"},
      {"callousness", "callous"}, {"formaliti", "formal"},
      {"sensitiviti", "sensit"}, {"sensibiliti", "sensibl"},
      {"triplicate", "triplic"}, {"formative", "form"}, {"formalize", "formal"},
      {"electriciti", "electr"}, {"electrical", "electr"}, {"hopeful", "hope"},
      {"goodness", "good"}, {"revival", "reviv"}, {"allowance", "allow"},
      {"inference", "infer"}, {"airliner", "airlin"}, {"gyroscopic", "gyroscop"},
      {"adjustable", "adjust"}, {"defensible", "defens"}, {"irritant", "irrit"},
      {"replacement", "replac"}, {"adjustment", "adjust"},
      {"dependent", "depend"}, {"adoption", "adopt"}, {"homologou", "homolog"},
      {"communism", "commun"}, {"activate", "activ"}, {"angulariti", "angular"},
      {"homologous", "homolog"}, {"effective", "effect"},
      {"bowdlerize", "bowdler"}, {"probate", "probat"}, {"rate", "rate"},
      {"cease", "ceas"}, {"controll", "control"}, {"roll", "roll"},
      {"recording", "record"}, {"composing", "compos"}, {"sms", "sm"},
      {"send", "send"}, {"button", "button"}, {"message", "messag"},
      {"location", "locat"}, {"camera", "camera"}, {"compose", "compos"},
      {"generalizations", "gener"}, {"oscillators", "oscil"},
  };
  for (auto [in, out] : cases) {
    CAPTURE(in);
    CHECK(porter_stem(in) == out);
  }
  CHECK(porter_stem("a") == "a");
  CHECK(porter_stem("Mixed") == "Mixed");
  CHECK(porter_stem("x2") == "x2");
}

TEST_CASE("stopwords") {
  const auto &sw = Stopwords::english();
  CHECK(sw.size() == 174);
  CHECK_FALSE(sw.version().empty());
  for (const char *w : {"the", "and", "to", "my", "on"})
    CHECK(sw.contains(w));
  CHECK_FALSE(sw.contains("send"));
  CHECK_THROWS_AS(Stopwords::parse("the\nand\n"), ValidationError);
  CHECK_THROWS_AS(Stopwords::parse("# version: 1\n"), ValidationError);
  auto custom = Stopwords::parse("# version: t\n# comment\nfoo\n\nbar\n");
  CHECK(custom.size() == 2);
  CHECK(custom.version() == "t");
}

TEST_CASE("text_tokens filters and stems") {
  const auto &sw = Stopwords::english();
  CHECK(text_tokens("Send the message", sw) == V{"send", "messag"});
  CHECK(text_tokens("Recording 00:00", sw) == V{"record", "00", "00"});
  CHECK(text_tokens("", sw).empty());
}

TEST_CASE("FNV-1a 64 reference vectors") {
  CHECK(fnv1a64("") == 0xcbf29ce484222325ULL);
  CHECK(fnv1a64("a") == 0xaf63dc4c8601ec8cULL);
  CHECK(fnv1a64("foobar") == 0x85944171f73967e8ULL);
}

TEST_CASE("hash_token") {
  // Values from an independent FNV-1a implementation over "<tag>:<token>".
  CHECK(hash_token(FeatureSet::Who, "speak") == 16175);
  CHECK(hash_token(FeatureSet::What, "speak") == 18735);
  CHECK(hash_token(FeatureSet::When, "click") == 22083);
  CHECK(hash_token(FeatureSet::Who, "cell7") == 21100);
  CHECK(hash_token(FeatureSet::Who, "speak") == hash_token(FeatureSet::Who, "speak"));
  CHECK(hash_token(FeatureSet::Who, "x") < kHashSpace);
}
