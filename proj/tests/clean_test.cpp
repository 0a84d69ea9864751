#include <catch2/catch_amalgamated.hpp>

#include <string>
#include <utility>
#include <vector>

#include "mtab/clean.hpp"
#include "mtab/corpus_ops.hpp"

using namespace mtab;

namespace {

// Hand-derived golden pairs, one or more per normalization rule: retweet
// prefixes, URLs, mentions, hashtags, emoji, smileys, standalone numbers,
// whitespace collapsing, and the things cleaning must leave alone.
const std::vector<std::pair<std::string, std::string>>& golden() {
  static const std::vector<std::pair<std::string, std::string>> cases = {
      // retweet prefix
      {"RT @alice: great game tonight", "great game tonight"},
      {"rt @alice hello", "rt hello"},
      {"RT @a:no gap after colon", "no gap after colon"},
      {"RT  @bob  :)", ""},
      {"RT @x RT @y: double retweet", "double retweet"},
      {"RT apvz", "RT apvz"},
      {"RT@x y", "RT@x y"},
      {"RT @solo:", ""},
      // URLs
      {"http://t.co/abc link only", "link only"},
      {"HTTPS://EXAMPLE.COM page", "page"},
      {"www.example.com stuff", "stuff"},
      {"nothttp://x.y stays", "nothttp://x.y stays"},
      // mentions
      {"@user1 @user2 hi", "hi"},
      {"email@example.com", "email@example.com"},
      {"@", ""},
      // hashtags
      {"#Brexit vote now", "Brexit vote now"},
      {"mid#hash tag", "midhash tag"},
      {"#123 in favor", "in favor"},
      {"#", ""},
      // standalone numbers
      {"100 times better", "times better"},
      {"3.5 rating", "rating"},
      {"+1 -2 3,000 ok", "ok"},
      {"2nd place COVID19", "2nd place COVID19"},
      {"a+b c-d", "a+b c-d"},
      {"+- fun", "+- fun"},
      // smileys
      {":) :( :D ;) :-) :-( :P done", "done"},
      {":-P :)) weird", ":-P :)) weird"},
      // emoji
      {"so happy \xF0\x9F\x98\x80 today", "so happy today"},
      {"flag \xF0\x9F\x87\xAB\xF0\x9F\x87\xB7 here", "flag here"},
      {"thumbs\xF0\x9F\x91\x8Dup", "thumbsup"},
      {"star \xE2\xAD\x90 bright", "star bright"},
      {"heart \xE2\x9D\xA4\xEF\xB8\x8F red", "heart red"},
      {"family \xF0\x9F\x91\xA8\xE2\x80\x8D\xF0\x9F\x91\xA9\xE2\x80\x8D"
       "\xF0\x9F\x91\xA7 unit",
       "family unit"},
      {"\xE2\x98\x80 sunshine", "sunshine"},
      // whitespace and casing
      {"  spaced\tout\ntext  ", "spaced out text"},
      {"keep UPPER Case", "keep UPPER Case"},
      {"caf\xC3\xA9 na\xC3\xAFve \xE4\xB8\xAD\xE6\x96\x87",
       "caf\xC3\xA9 na\xC3\xAFve \xE4\xB8\xAD\xE6\x96\x87"},
      {"", ""},
  };
  return cases;
}

}  // namespace

TEST_CASE("clean_text matches the golden outputs bit-exactly") {
  REQUIRE(golden().size() >= 30);
  for (const auto& [raw, expected] : golden()) {
    INFO("input: " << raw);
    REQUIRE(clean_text(raw) == expected);
  }
}

TEST_CASE("clean_text is idempotent on every golden fixture") {
  for (const auto& [raw, expected] : golden()) {
    const std::string once = clean_text(raw);
    REQUIRE(clean_text(once) == once);
  }
}

TEST_CASE("clean_text never throws on malformed UTF-8") {
  const std::string broken = "ok \xF0\x9F bad \xC3 tail";
  REQUIRE_NOTHROW(clean_text(broken));
  REQUIRE(clean_text(clean_text(broken)) == clean_text(broken));
}

TEST_CASE("clean_dataset fills clean_text and drops emptied records") {
  std::vector<TweetRecord> rs(3);
  rs[0].id = "a";
  rs[0].raw_text = "RT @x: #Vote now";
  rs[0].lang = LanguageTag("en");
  rs[1].id = "b";
  rs[1].raw_text = "@mention http://only.url 42";
  rs[1].lang = LanguageTag("en");
  rs[2].id = "c";
  rs[2].raw_text = "plain words";
  rs[2].lang = LanguageTag("en");

  const auto out = clean_dataset(Dataset("c", rs));
  REQUIRE(out.removed_empty == 1);
  REQUIRE(out.dataset.size() == 2);
  REQUIRE(out.dataset[0].id == "a");
  REQUIRE(out.dataset[0].clean_text == "Vote now");
  REQUIRE(out.dataset[0].text() == "Vote now");
  REQUIRE(out.dataset[1].id == "c");
  REQUIRE(out.dataset[1].clean_text == "plain words");
}
