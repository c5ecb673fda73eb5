#include <catch2/catch_amalgamated.hpp>

#include <sstream>

#include "runoff/schedule_p.hpp"

using namespace runoff;

namespace {

// Handcrafted 3-accident-year miniature in CAS column layout.
const char* kMiniHeader = "GRCODE,GRNAME,AccidentYear,DevelopmentLag,CumPaidLoss_C,EarnedPremNet_C\n";

std::string mini_file() {
    std::string s = kMiniHeader;
    s += "7,Specimen Co,1988,1,100,200\n";
    s += "7,Specimen Co,1988,2,150,200\n";
    s += "7,Specimen Co,1988,3,180,200\n";
    s += "7,Specimen Co,1989,1,110,220\n";
    s += "7,Specimen Co,1989,2,165,220\n";
    s += "7,Specimen Co,1989,3,198,220\n";
    s += "7,Specimen Co,1990,1,120,240\n";
    s += "7,Specimen Co,1990,2,180,240\n";
    s += "7,Specimen Co,1990,3,216,240\n";
    return s;
}

}  // namespace

TEST_CASE("miniature file parses verbatim") {
    const auto datasets = parse_schedule_p(mini_file(), Line::CA, ColumnMap::defaults_for(Line::CA));
    REQUIRE(datasets.size() == 1);
    const CompanyDataset& ds = datasets.front();
    CHECK(ds.group_id == "7");
    CHECK(ds.n() == 3);
    CHECK(ds.calendar_origin == 1988);
    CHECK(ds.rectangle.at(1, 1) == 100.0);
    CHECK(ds.rectangle.at(2, 3) == 198.0);
    CHECK(ds.rectangle.at(3, 2) == 180.0);
    CHECK(ds.premiums == std::vector<double>{200.0, 220.0, 240.0});
}

TEST_CASE("empty file with a valid header yields an empty collection") {
    const auto datasets = parse_schedule_p(std::string(kMiniHeader), Line::CA, ColumnMap::defaults_for(Line::CA));
    CHECK(datasets.empty());
}

TEST_CASE("missing column raises a schema error naming it") {
    const std::string file = "GRCODE,AccidentYear,DevelopmentLag,EarnedPremNet_C\n";
    try {
        parse_schedule_p(file, Line::CA, ColumnMap::defaults_for(Line::CA));
        FAIL("expected SchemaError");
    } catch (const SchemaError& e) {
        CHECK(std::string(e.what()).find("CumPaidLoss_C") != std::string::npos);
    }
}

TEST_CASE("non-numeric cell raises a parse error with the row number") {
    std::string file = kMiniHeader;
    file += "7,Specimen Co,1988,1,oops,200\n";
    try {
        parse_schedule_p(file, Line::CA, ColumnMap::defaults_for(Line::CA));
        FAIL("expected ParseError");
    } catch (const ParseError& e) {
        CHECK(std::string(e.what()).find("row 2") != std::string::npos);
    }
}

TEST_CASE("incomplete rectangle raises a completeness error naming the group") {
    std::string file = mini_file();
    file += "8,Other Co,1988,1,50,75\n";  // group 8 has one cell of nine
    try {
        parse_schedule_p(file, Line::CA, ColumnMap::defaults_for(Line::CA));
        FAIL("expected CompletenessError");
    } catch (const CompletenessError& e) {
        CHECK(std::string(e.what()).find("8") != std::string::npos);
    }
}

TEST_CASE("conflicting premium duplicates are an error, not an overwrite") {
    std::string file = mini_file();
    // Same (group, year, lag) cell already exists: duplicate cell error.
    file += "7,Specimen Co,1988,1,100,999\n";
    CHECK_THROWS_AS(parse_schedule_p(file, Line::CA, ColumnMap::defaults_for(Line::CA)), ParseError);
}

TEST_CASE("development lag outside the window is rejected") {
    std::string file = mini_file();
    file += "7,Specimen Co,1988,4,190,200\n";
    CHECK_THROWS_AS(parse_schedule_p(file, Line::CA, ColumnMap::defaults_for(Line::CA)), Error);
}

TEST_CASE("parsing is order independent") {
    // Reverse the data rows; datasets must be identical.
    std::istringstream in(mini_file());
    std::string header, row;
    std::getline(in, header);
    std::vector<std::string> rows;
    while (std::getline(in, row)) rows.push_back(row);
    std::string shuffled = header + "\n";
    for (auto it = rows.rbegin(); it != rows.rend(); ++it) shuffled += *it + "\n";

    const auto a = parse_schedule_p(mini_file(), Line::CA, ColumnMap::defaults_for(Line::CA));
    const auto b = parse_schedule_p(shuffled, Line::CA, ColumnMap::defaults_for(Line::CA));
    REQUIRE(a.size() == b.size());
    CHECK(a.front().rectangle == b.front().rectangle);
    CHECK(a.front().premiums == b.front().premiums);
}

TEST_CASE("selection list parses sections and rejects duplicates") {
    const std::string text = "# comment\n[CA]\n7\n12\n[PA]\n7\n";
    const SelectionList sel = SelectionList::parse(text);
    REQUIRE(sel.codes.at(Line::CA).size() == 2);
    CHECK(sel.codes.at(Line::CA)[0] == "7");
    CHECK(sel.codes.at(Line::PA) == std::vector<std::string>{"7"});

    CHECK_THROWS_AS(SelectionList::parse(std::string("[CA]\n7\n7\n")), SelectionError);
    CHECK_THROWS_AS(SelectionList::parse(std::string("7\n[CA]\n")), SelectionError);
}

TEST_CASE("selection keeps order and flags unknown codes") {
    const auto datasets = parse_schedule_p(mini_file(), Line::CA, ColumnMap::defaults_for(Line::CA));
    const auto single = select_triangles(datasets, {"7"}, Line::CA);
    REQUIRE(single.size() == 1);
    CHECK(single.front().group_id == "7");

    try {
        select_triangles(datasets, {"404"}, Line::CA);
        FAIL("expected SelectionError");
    } catch (const SelectionError& e) {
        const std::string msg = e.what();
        CHECK(msg.find("404") != std::string::npos);
        CHECK(msg.find("CA") != std::string::npos);
    }
}
