#include <catch2/catch_amalgamated.hpp>

#include "polyrag/corpus.hpp"
#include "testutil.hpp"

using namespace polyrag;
using testutil::TempDir;
using testutil::spit;

namespace {

Corpus tiny_corpus() {
    Corpus c;
    c.reference_date = {2024, 6, 1};
    Query q;
    q.id = "q1";
    q.domain = Domain::CARE;
    q.intent = "treatment";
    q.text = "How should patients handle dosing?";
    q.ground_truth = "Take as directed.";
    c.queries.push_back(q);
    Document d;
    d.id = "d1";
    d.query_id = "q1";
    d.title = "Guide";
    d.text = "Dosing guidance text.";
    d.source = "gov";
    d.publish_date = Date{2024, 1, 15};
    d.annotations.relevance_grade = RelevanceGrade::A;
    d.annotations.supplement = 1;
    d.annotations.utility = 0.9;
    c.documents.push_back(d);
    return c;
}

} // namespace

TEST_CASE("domain and grade names round trip") {
    for (Domain d : {Domain::CARE, Domain::INQUIRY, Domain::POLICY})
        CHECK(parse_domain(domain_name(d)) == d);
    CHECK_THROWS_AS(parse_domain("care"), DataError); // exact uppercase only
    CHECK_THROWS_AS(parse_domain("OTHER"), DataError);
    for (int i = 0; i < 5; ++i) {
        const auto g = static_cast<RelevanceGrade>(i);
        CHECK(parse_grade(std::string(1, grade_letter(g))) == g);
    }
    CHECK_THROWS_AS(parse_grade("F"), DataError);
    CHECK_THROWS_AS(parse_grade("a"), DataError);
}

TEST_CASE("document json round trip") {
    const Corpus c = tiny_corpus();
    const Json j = document_to_json(c.documents[0]);
    const Document back = document_from_json(j, 1);
    CHECK(back == c.documents[0]);
    const Json qj = query_to_json(c.queries[0]);
    CHECK(query_from_json(qj, 1) == c.queries[0]);
}

TEST_CASE("document json rejects unknown and malformed fields") {
    const Json base = document_to_json(tiny_corpus().documents[0]);

    Json extra = base;
    extra["surprise"] = 1;
    CHECK_THROWS_AS(document_from_json(extra, 7), DataError);
    try {
        document_from_json(extra, 7);
    } catch (const DataError& e) {
        CHECK(e.line() == 7);
        CHECK(std::string(e.what()).find("surprise") != std::string::npos);
    }

    Json bad_util = base;
    bad_util["annotations"]["utility"] = 1.5;
    CHECK_THROWS_AS(document_from_json(bad_util, 3), DataError);

    Json bad_supp = base;
    bad_supp["annotations"]["supplement"] = 2;
    CHECK_THROWS_AS(document_from_json(bad_supp, 3), DataError);

    Json bool_supp = base;
    bool_supp["annotations"]["supplement"] = true;
    CHECK(document_from_json(bool_supp, 3).annotations.supplement == 1);

    Json bad_date = base;
    bad_date["publish_date"] = "2024-02-30";
    CHECK_THROWS_AS(document_from_json(bad_date, 3), DataError);

    Json neg_auth = base;
    neg_auth["annotations"]["authority_level"] = -1;
    CHECK_THROWS_AS(document_from_json(neg_auth, 3), DataError);

    Json no_id = base;
    no_id.erase("id");
    CHECK_THROWS_AS(document_from_json(no_id, 3), DataError);
}

TEST_CASE("corpus loading anchors every rejection to a line") {
    TempDir dir;
    const auto queries = dir / "queries.jsonl";
    const auto docs = dir / "documents.jsonl";

    SECTION("malformed json") {
        spit(queries, R"({"id":"q1","domain":"CARE","intent":"t","text":"x"})"
                      "\nnot json\n");
        spit(docs, "");
        try {
            load_corpus(queries, docs, {2024, 6, 1});
            FAIL("expected DataError");
        } catch (const DataError& e) {
            CHECK(e.line() == 2);
        }
    }
    SECTION("duplicate query id") {
        spit(queries, R"({"id":"q1","domain":"CARE","intent":"t","text":"x"})"
                      "\n"
                      R"({"id":"q1","domain":"CARE","intent":"t","text":"y"})"
                      "\n");
        spit(docs, "");
        try {
            load_corpus(queries, docs, {2024, 6, 1});
            FAIL("expected DataError");
        } catch (const DataError& e) {
            CHECK(e.line() == 2);
            CHECK(std::string(e.what()).find("q1") != std::string::npos);
        }
    }
    SECTION("dangling document query id") {
        spit(queries, R"({"id":"q1","domain":"CARE","intent":"t","text":"x"})"
                      "\n");
        spit(docs, R"({"id":"d1","query_id":"nope","text":"body","source":"gov"})"
                   "\n");
        try {
            load_corpus(queries, docs, {2024, 6, 1});
            FAIL("expected DataError");
        } catch (const DataError& e) {
            CHECK(e.line() == 1);
            CHECK(std::string(e.what()).find("nope") != std::string::npos);
        }
    }
    SECTION("empty text") {
        spit(queries, R"({"id":"q1","domain":"CARE","intent":"t","text":"   "})"
                      "\n");
        spit(docs, "");
        CHECK_THROWS_AS(load_corpus(queries, docs, Date{2024, 6, 1}), DataError);
    }
    SECTION("future publish date") {
        spit(queries, R"({"id":"q1","domain":"CARE","intent":"t","text":"x"})"
                      "\n");
        spit(docs,
             R"({"id":"d1","query_id":"q1","text":"body","source":"gov","publish_date":"2030-01-01"})"
             "\n");
        try {
            load_corpus(queries, docs, {2024, 6, 1});
            FAIL("expected DataError");
        } catch (const DataError& e) {
            CHECK(e.line() == 1);
            CHECK(std::string(e.what()).find("2030-01-01") != std::string::npos);
        }
    }
    SECTION("valid corpus round trips through save") {
        const Corpus c = tiny_corpus();
        save_corpus(c, queries, docs);
        const Corpus back = load_corpus(queries, docs, c.reference_date);
        CHECK(back == c);
    }
}

TEST_CASE("validate_corpus reports findings without throwing") {
    Corpus c = tiny_corpus();
    c.documents.push_back(c.documents[0]); // duplicate id
    c.documents[1].id = "d2";
    c.documents[1].query_id = "missing-q";
    c.documents[1].text = "  ";
    Document d3 = c.documents[0];
    d3.id = "d3";
    d3.publish_date = Date{2030, 1, 1};
    d3.annotations.utility = 2.0;
    c.documents.push_back(d3);

    const ValidationReport report = validate_corpus(c);
    std::set<std::string> rules;
    for (const Finding& f : report.findings) rules.insert(f.rule);
    CHECK(rules.count("dangling_query_id"));
    CHECK(rules.count("empty_text"));
    CHECK(rules.count("future_date"));
    CHECK(rules.count("utility_out_of_range"));
}

TEST_CASE("authority table parsing") {
    TempDir dir;
    const auto path = dir / "authority.jsonl";

    SECTION("with header") {
        spit(path, R"({"max_level":3,"default_level":0})"
                   "\n"
                   R"({"source":"gov","level":3})"
                   "\n"
                   R"({"source":"news","level":1})"
                   "\n");
        const AuthorityTable t = load_authority_table(path);
        CHECK(t.max_level == 3);
        CHECK(t.level_of("gov") == 3);
        CHECK(t.level_of("news") == 1);
        CHECK(t.level_of("unseen") == 0);
    }
    SECTION("without header the max observed level wins") {
        spit(path, R"({"source":"gov","level":2})"
                   "\n");
        const AuthorityTable t = load_authority_table(path);
        CHECK(t.max_level == 2);
    }
    SECTION("level above declared max") {
        spit(path, R"({"max_level":2,"default_level":0})"
                   "\n"
                   R"({"source":"gov","level":5})"
                   "\n");
        CHECK_THROWS_AS(load_authority_table(path), DataError);
    }
    SECTION("duplicate source") {
        spit(path, R"({"source":"gov","level":1})"
                   "\n"
                   R"({"source":"gov","level":2})"
                   "\n");
        try {
            load_authority_table(path);
            FAIL("expected DataError");
        } catch (const DataError& e) {
            CHECK(e.line() == 2);
        }
    }
    SECTION("negative level") {
        spit(path, R"({"source":"gov","level":-1})"
                   "\n");
        CHECK_THROWS_AS(load_authority_table(path), DataError);
    }
    SECTION("empty file") {
        spit(path, "");
        CHECK_THROWS_AS(load_authority_table(path), DataError);
    }
    SECTION("round trip") {
        const AuthorityTable t = synth_authority_table();
        save_authority_table(t, path);
        const AuthorityTable back = load_authority_table(path);
        CHECK(back.max_level == t.max_level);
        CHECK(back.level_of("gov") == 3);
        CHECK(back.level_of("hospital") == 2);
        CHECK(back.level_of("news") == 1);
        CHECK(back.level_of("ugc") == 0);
    }
}

TEST_CASE("publish date extraction from text") {
    auto date = [](int y, int m, int d) { return Date{y, m, d}; };

    CHECK(extract_publish_date("released 2023-05-01 by the agency") == date(2023, 5, 1));
    CHECK(extract_publish_date("updated 2023/5/9 evening") == date(2023, 5, 9));
    CHECK(extract_publish_date("posted on March 7, 2021 at noon") == date(2021, 3, 7));
    CHECK(extract_publish_date("march 7, 2021") == date(2021, 3, 7)); // case-insensitive month
    CHECK(extract_publish_date("\xE5\x8F\x91\xE5\xB8\x83 2020\xE5\xB9\xB4"
                               "3\xE6\x9C\x88"
                               "15\xE6\x97\xA5 \xE5\xAE\x98\xE6\x96\xB9") ==
          date(2020, 3, 15));

    SECTION("no date") {
        CHECK(!extract_publish_date("no dates here"));
        CHECK(!extract_publish_date(""));
    }
    SECTION("digit adjacency guards") {
        CHECK(!extract_publish_date("42023-05-01"));
        CHECK(!extract_publish_date("2023-05-012"));
        CHECK(!extract_publish_date("March 7, 20211"));
    }
    SECTION("letter boundary for month names") {
        CHECK(!extract_publish_date("remarch 7, 2021"));
    }
    SECTION("first syntactic match decides, even when invalid") {
        CHECK(!extract_publish_date("on 2023-02-30 and later 2023-03-01"));
        CHECK(extract_publish_date("on 2023-02-28 and later 2023-03-01") == date(2023, 2, 28));
    }
    SECTION("english month requires the comma") {
        CHECK(!extract_publish_date("March 7 2021"));
    }
}

TEST_CASE("date arithmetic") {
    CHECK(parse_iso_date("2024-02-29") == Date{2024, 2, 29});
    CHECK(!parse_iso_date("2023-02-29"));
    CHECK(!parse_iso_date("2024-13-01"));
    CHECK(!parse_iso_date("2024-1-01"));
    CHECK(add_days({2024, 2, 28}, 1) == Date{2024, 2, 29});
    CHECK(add_days({2024, 3, 1}, -1) == Date{2024, 2, 29});
    CHECK(days_between({2024, 1, 1}, {2024, 1, 31}) == 30);
    CHECK(days_between({2024, 6, 1}, {2024, 5, 2}) == -30);
    CHECK(Date{2024, 2, 29}.to_string() == "2024-02-29");
}

TEST_CASE("synthetic fixture is deterministic and clean") {
    TempDir dir;
    const Corpus a = synth_fixture(7, 6, 6, {});
    const Corpus b = synth_fixture(7, 6, 6, {});
    const Corpus c = synth_fixture(8, 6, 6, {});
    CHECK(a == b);
    CHECK(!(a == c));
    CHECK(validate_corpus(a).findings.empty());
    CHECK(a.queries.size() == 6);
    CHECK(a.documents.size() == 36);

    save_corpus(a, dir / "q.jsonl", dir / "d.jsonl");
    save_corpus(b, dir / "q2.jsonl", dir / "d2.jsonl");
    CHECK(testutil::slurp(dir / "d.jsonl") == testutil::slurp(dir / "d2.jsonl"));

    // conflict pair: stale low-authority doc 0, fresh authoritative doc 1
    const auto docs = a.docs_for(a.queries[0].id);
    REQUIRE(docs.size() == 6);
    CHECK(docs[0]->text == docs[1]->text);
    CHECK(docs[0]->title == docs[1]->title);
    CHECK(docs[0]->source == "ugc");
    CHECK(docs[1]->source == "gov");
    REQUIRE(docs[0]->publish_date);
    REQUIRE(docs[1]->publish_date);
    CHECK(*docs[0]->publish_date < *docs[1]->publish_date);
    // one filler carries its date only in the body text, one has none at all
    CHECK(!docs[2]->publish_date);
    CHECK(extract_publish_date(docs[2]->text));
    CHECK(!docs[3]->publish_date);
    CHECK(!extract_publish_date(docs[3]->text));
}
