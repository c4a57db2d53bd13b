#include <doctest.h>

#include "glmcausal/dataset.hpp"

using glmc::ColumnKind;
using glmc::DataError;
using glmc::Dataset;

TEST_CASE("csv types columns by full-parse rule") {
    auto d = Dataset::from_csv_text("x,site,y\n1,lung,2.5\n2,breast,3e-1\n-0.5,lung,4\n");
    CHECK(d.n_rows() == 3);
    CHECK(d.column("x").kind == ColumnKind::Numeric);
    CHECK(d.column("y").kind == ColumnKind::Numeric);
    CHECK(d.column("site").kind == ColumnKind::Categorical);
    CHECK(d.column("site").levels == std::vector<std::string>{"lung", "breast"});
    CHECK(d.column("site").codes == std::vector<int>{0, 1, 0});
    CHECK(d.column("y").values[1] == doctest::Approx(0.3));
}

TEST_CASE("csv quoting round-trips") {
    auto d = Dataset::from_csv_text("name,v\n\"a,b\",1\n\"say \"\"hi\"\"\",2\n");
    CHECK(d.column("name").levels[0] == "a,b");
    CHECK(d.column("name").levels[1] == "say \"hi\"");
    auto again = Dataset::from_csv_text(d.to_csv());
    CHECK(again.to_csv() == d.to_csv());
}

TEST_CASE("csv handles CRLF") {
    auto d = Dataset::from_csv_text("x\r\n1\r\n2\r\n");
    CHECK(d.n_rows() == 2);
    CHECK(d.column("x").values == std::vector<double>{1.0, 2.0});
}

TEST_CASE("missing values are a load-time error") {
    CHECK_THROWS_AS(Dataset::from_csv_text("x,y\n1,\n2,3\n"), DataError);
    CHECK_THROWS_AS(Dataset::from_csv_text("x\n1\n2,3\n"), DataError);  // ragged
}

TEST_CASE("a value like '1x' makes the column categorical") {
    auto d = Dataset::from_csv_text("x\n1\n1x\n");
    CHECK(d.column("x").kind == ColumnKind::Categorical);
}

TEST_CASE("duplicate column names rejected") {
    CHECK_THROWS_AS(Dataset::from_csv_text("x,x\n1,2\n"), DataError);
}
