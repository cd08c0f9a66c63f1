#include "doctest.h"

#include <filesystem>
#include <fstream>

#include "melseq/data/corpus.hpp"
#include "melseq/data/synth_corpus.hpp"
#include "melseq/data/vocab.hpp"

using namespace melseq;
using namespace melseq::data;
namespace fs = std::filesystem;

namespace {

Utterance toy_utt(const std::string& id, int n_chars, int frames, int n_mels = 4, int n_bins = 6) {
    Utterance u;
    u.id = id;
    u.char_ids.assign(n_chars, 2);
    u.char_ids.push_back(1);  // eos
    u.mel = ad::Mat(n_mels, frames);
    u.linear = ad::Mat(n_bins, frames);
    for (std::size_t i = 0; i < u.mel.size(); ++i) u.mel.v[i] = 0.5;
    for (std::size_t i = 0; i < u.linear.size(); ++i) u.linear.v[i] = 0.25;
    return u;
}

}  // namespace

TEST_CASE("normalize_text examples") {
    CharVocab v;
    CHECK(normalize_text("Hello,  World!", v) == "hello, world!");
    CHECK(normalize_text("Caf\xc3\xa9", v) == "caf");
    CHECK(normalize_text("A\xe2\x80\x94ize", v) == "a-ize");
    CHECK(normalize_text("  spaced   out  ", v) == "spaced out");
    CHECK_THROWS_AS(normalize_text("\xc3\xa9", v), std::invalid_argument);
}

TEST_CASE("encode appends eos and round-trips") {
    CharVocab v;
    auto ids = v.encode("ab");
    REQUIRE(ids.size() == 3);
    CHECK(ids[2] == v.eos_id());
    CHECK(v.decode(ids) == "ab");
    CHECK(v.encode("").size() == 1);
    CHECK(v.encode("")[0] == v.eos_id());

    std::string s = "the quick brown fox, 42!";
    CHECK(v.decode(v.encode(s)) == s);
    CHECK(v.pad_id() == 0);
    CHECK(v.id(v.symbol(5)) == 5);
}

TEST_CASE("load_metadata field extraction") {
    fs::create_directories("meta_test");
    {
        std::ofstream f("meta_test/metadata.csv");
        f << "LJ001-0001|text a|text b\n";
        f << "LJ001-0002|only two fields\n";
        f << "garbage line without pipes\n";
        f << "LJ001-0003|raw|norm\n";
    }
    auto rows = load_metadata("meta_test");
    REQUIRE(rows.size() == 3);
    CHECK(rows[0].first == "LJ001-0001");
    CHECK(rows[0].second == "text b");
    CHECK(rows[1].second == "only two fields");
    CHECK(rows[2].second == "norm");
    CHECK_THROWS(load_metadata("no_such_dir"));
    fs::remove_all("meta_test");
}

TEST_CASE("make_batch padding arithmetic, T=7 r=5") {
    Utterance u = toy_utt("a", 3, 7);
    Batch b = make_batch({&u}, 5);
    CHECK(b.t_max == 10);
    CHECK(b.steps == 2);
    CHECK(b.step_counts[0] == 2);
    CHECK(b.stop_targets[0].at(0, 0) == 0.0);
    CHECK(b.stop_targets[1].at(0, 0) == 1.0);
    CHECK(b.stop_mask[0].at(0, 0) == 1.0);
    CHECK(b.stop_mask[1].at(0, 0) == 1.0);
    // padded frames 7..9 masked out, their targets zero
    for (int j = 0; j < 5; ++j)
        for (int k = 0; k < 4; ++k) {
            bool real = 5 + j < 7;
            CHECK(b.mel_group_mask[1].at(j * 4 + k, 0) == (real ? 1.0 : 0.0));
            CHECK(b.mel_groups[1].at(j * 4 + k, 0) == (real ? 0.5 : 0.0));
        }
}

TEST_CASE("make_batch two lengths") {
    Utterance a = toy_utt("a", 2, 5), b2 = toy_utt("b", 4, 10);
    Batch b = make_batch({&a, &b2}, 5);
    CHECK(b.t_max == 10);
    CHECK(b.n_max == 5);
    CHECK(b.char_ids[0].size() == 5);
    CHECK(b.char_ids[0][3] == 0);  // padding id
    // item 0 frames 5..9 masked
    for (int j = 0; j < 5; ++j) CHECK(b.mel_group_mask[1].at(j * 4, 0) == 0.0);
    for (int j = 0; j < 5; ++j) CHECK(b.mel_group_mask[1].at(j * 4, 1) == 1.0);
    // mask sums equal frame lengths
    for (int i = 0; i < 2; ++i) {
        double s = 0;
        for (int st = 0; st < b.steps; ++st)
            for (int j = 0; j < 5; ++j) s += b.mel_group_mask[st].at(j * 4, i);
        CHECK(s == doctest::Approx(b.frame_lengths[i]));
    }
    // exactly one 0->1 stop transition at ceil(T/r)-1
    for (int i = 0; i < 2; ++i) {
        int first_one = -1;
        for (int st = 0; st < b.steps; ++st)
            if (b.stop_targets[st].at(0, i) == 1.0) {
                first_one = st;
                break;
            }
        CHECK(first_one == (b.frame_lengths[i] + 4) / 5 - 1);
        for (int st = first_one; st < b.steps; ++st)
            CHECK(b.stop_targets[st].at(0, i) == 1.0);
    }
}

TEST_CASE("make_batch identical items give full masks; errors") {
    Utterance a = toy_utt("a", 3, 10);
    Batch b = make_batch({&a, &a}, 5);
    for (const auto& m : b.mel_group_mask)
        for (double v : m.v) CHECK(v == 1.0);
    CHECK_THROWS_AS(make_batch({}, 5), std::invalid_argument);
    Utterance z = toy_utt("z", 2, 0);
    CHECK_THROWS_AS(make_batch({&z}, 5), std::invalid_argument);
}

TEST_CASE("synthetic corpus loads, caches deterministically") {
    const std::string dir = "syncorp_test";
    fs::remove_all(dir);
    generate_synthetic_corpus(dir, 4, 123);
    CHECK(fs::exists(dir + "/metadata.csv"));

    dsp::DspConfig cfg;
    CharVocab vocab;
    auto utts1 = load_corpus(dir, cfg, vocab);
    REQUIRE(utts1.size() == 4);
    for (const auto& u : utts1) {
        CHECK(u.frames() > 0);
        CHECK(u.mel.rows == 80);
        CHECK(u.linear.rows == 513);
        CHECK(!u.char_ids.empty());
        CHECK(u.char_ids.back() == vocab.eos_id());
    }
    // second load hits the cache and is bit-identical
    auto utts2 = load_corpus(dir, cfg, vocab);
    for (std::size_t i = 0; i < utts1.size(); ++i) {
        CHECK(utts1[i].mel.v == utts2[i].mel.v);
        CHECK(utts1[i].linear.v == utts2[i].linear.v);
    }
    // max_utts keeps the shortest K
    LoadOptions opt;
    opt.max_utts = 2;
    auto shortest = load_corpus(dir, cfg, vocab, opt);
    CHECK(shortest.size() == 2);
    int max_kept = 0, min_dropped = 1 << 30;
    for (const auto& u : shortest) max_kept = std::max(max_kept, u.frames());
    for (const auto& u : utts1) {
        bool kept = false;
        for (const auto& s : shortest) kept = kept || s.id == u.id;
        if (!kept) min_dropped = std::min(min_dropped, u.frames());
    }
    CHECK(max_kept <= min_dropped);
    fs::remove_all(dir);
}
