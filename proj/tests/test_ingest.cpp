#include <doctest.h>

#include <map>
#include <set>

#include "dcf/error.hpp"
#include "dcf/ingest.hpp"

using namespace dcf;

namespace {

std::string tiny_csv(const std::vector<std::array<double, 6>>& rows) {
    std::string out = "timestamp,open,high,low,close,volume\n";
    for (const auto& r : rows) {
        out += std::to_string(static_cast<long long>(r[0]));
        for (int i = 1; i < 6; ++i) out += "," + std::to_string(r[i]);
        out += "\n";
    }
    return out;
}

std::vector<PriceBar> flat_bars(long long t0, long long spacing, int n, double price) {
    std::vector<PriceBar> bars;
    for (int i = 0; i < n; ++i) {
        PriceBar b;
        b.timestamp = t0 + i * spacing;
        b.open = b.high = b.low = b.close = price;
        b.volume = 1.0;
        bars.push_back(b);
    }
    return bars;
}

}  // namespace

TEST_CASE("parse_ohlcv basics: sorted, last-wins, errors") {
    std::string csv = tiny_csv({{600, 10, 11, 9, 10.5, 5},
                                {0, 10, 12, 8, 9, 3},
                                {300, 9, 9.5, 8.5, 9.2, 2}});
    auto bars = parse_ohlcv(csv, "X");
    REQUIRE(bars.size() == 3);
    CHECK(bars[0].timestamp == 0);
    CHECK(bars[1].timestamp == 300);
    CHECK(bars[2].timestamp == 600);

    // Duplicate timestamp keeps the last occurrence.
    auto dup = parse_ohlcv(tiny_csv({{0, 10, 12, 8, 9, 3}, {0, 20, 22, 18, 19, 4}}), "X");
    REQUIRE(dup.size() == 1);
    CHECK(dup[0].close == doctest::Approx(19.0));

    CHECK_THROWS_AS(parse_ohlcv("timestamp,open,high,low,close,volume\n0,a,b,c,d,e\n", "X"),
                    DataError);
    CHECK_THROWS_AS(parse_ohlcv(tiny_csv({{0, -1, 2, 0.5, 1, 1}}), "X"), DataError);
    CHECK_THROWS_AS(parse_ohlcv("time,open,high,low,close,volume\n", "X"), DataError);
}

TEST_CASE("parse_ohlcv ISO-8601 and column order") {
    std::string csv =
        "close,VOLUME,Timestamp,open,high,low\n"
        "10.5,5,2022-01-01T00:10:00Z,10,11,9\n"
        "9.2,2,2022-01-01 00:00:00,9,9.5,8.5\n";
    auto bars = parse_ohlcv(csv, "X");
    REQUIRE(bars.size() == 2);
    CHECK(bars[0].timestamp == 1640995200LL);
    CHECK(bars[1].timestamp == 1640995800LL);
    CHECK(bars[0].close == doctest::Approx(9.2));
}

TEST_CASE("resample aggregates buckets") {
    // Ten one-minute bars -> one ten-minute bar with summed volume.
    std::vector<PriceBar> bars;
    for (int i = 0; i < 10; ++i) {
        PriceBar b;
        b.timestamp = i * 60;
        b.open = 10.0 + i;
        b.close = 10.5 + i;
        b.high = 11.0 + i;
        b.low = 9.0 + i;
        b.volume = 2.0;
        bars.push_back(b);
    }
    auto out = resample(bars, 600);
    REQUIRE(out.size() == 1);
    CHECK(out[0].timestamp == 0);
    CHECK(out[0].open == doctest::Approx(10.0));   // first open
    CHECK(out[0].close == doctest::Approx(19.5));  // last close
    CHECK(out[0].high == doctest::Approx(20.0));
    CHECK(out[0].low == doctest::Approx(9.0));
    CHECK(out[0].volume == doctest::Approx(20.0));

    // Single bar in a bucket: unchanged except the snapped timestamp.
    auto single = resample(flat_bars(660, 60, 2, 10.0), 600);
    CHECK(single[0].timestamp == 600);
    CHECK(single[0].close == doctest::Approx(10.0));

    CHECK_THROWS_AS(resample(flat_bars(0, 600, 5, 10.0), 60), DataError);
    CHECK_THROWS_AS(resample(flat_bars(0, 600, 5, 10.0), 900), DataError);  // not a multiple
}

TEST_CASE("resample matches brute-force bucketing and is idempotent") {
    Eigen::VectorXd closes(20);
    std::vector<PriceBar> bars;
    for (int i = 0; i < 20; ++i) {
        PriceBar b;
        b.timestamp = 60 * i;
        b.open = 100 + i;
        b.close = 100 + i + 0.5;
        b.high = 101 + i;
        b.low = 99 + i;
        b.volume = 1.0 + i;
        bars.push_back(b);
    }
    auto out = resample(bars, 300);  // 5-minute buckets, 4 of them
    REQUIRE(out.size() == 4);

    // Hand-enumerated bucketing.
    for (int bucket = 0; bucket < 4; ++bucket) {
        double vol = 0.0, high = -1e9, low = 1e9;
        for (int j = bucket * 5; j < (bucket + 1) * 5; ++j) {
            vol += bars[j].volume;
            high = std::max(high, bars[j].high);
            low = std::min(low, bars[j].low);
        }
        CHECK(out[bucket].open == doctest::Approx(bars[bucket * 5].open));
        CHECK(out[bucket].close == doctest::Approx(bars[bucket * 5 + 4].close));
        CHECK(out[bucket].high == doctest::Approx(high));
        CHECK(out[bucket].low == doctest::Approx(low));
        CHECK(out[bucket].volume == doctest::Approx(vol));
    }

    auto again = resample(out, 300);
    REQUIRE(again.size() == out.size());
    for (std::size_t i = 0; i < out.size(); ++i) {
        CHECK(again[i].timestamp == out[i].timestamp);
        CHECK(again[i].close == out[i].close);
        CHECK(again[i].volume == out[i].volume);
    }
}

TEST_CASE("compute_returns") {
    Eigen::VectorXd closes(2);
    closes << 100.0, 110.0;
    auto r = compute_returns(closes);
    REQUIRE(r.size() == 1);
    CHECK(r[0] == doctest::Approx(0.10));

    Eigen::VectorXd flat = Eigen::VectorXd::Constant(5, 42.0);
    CHECK(compute_returns(flat).isZero());

    Eigen::VectorXd c3(3);
    c3 << 100.0, 110.0, 99.0;
    auto r3 = compute_returns(c3);
    CHECK(r3[0] == doctest::Approx(0.10));
    CHECK(r3[1] == doctest::Approx(-0.10));

    Eigen::VectorXd bad(2);
    bad << 100.0, 0.0;
    CHECK_THROWS_AS(compute_returns(bad), DataError);
    CHECK_THROWS_AS(compute_returns(Eigen::VectorXd::Constant(1, 1.0)), DataError);
}

TEST_CASE("align_panel intersects timestamps") {
    auto a = flat_bars(0, 60, 5, 10.0);
    auto b = flat_bars(0, 60, 5, 20.0);
    auto panel = align_panel({"A", "B"}, {a, b});
    CHECK(panel.rows() == 5);
    panel.validate();

    // Missing timestamp on one asset drops it everywhere.
    auto b2 = b;
    b2.erase(b2.begin() + 2);
    auto panel2 = align_panel({"A", "B"}, {a, b2});
    CHECK(panel2.rows() == 4);

    // Brute-force set intersection oracle on staggered series.
    auto s1 = flat_bars(0, 60, 10, 10.0);
    auto s2 = flat_bars(180, 60, 10, 20.0);
    std::set<long long> t1, t2, expect;
    for (auto& bar : s1) t1.insert(bar.timestamp);
    for (auto& bar : s2) t2.insert(bar.timestamp);
    for (long long t : t1)
        if (t2.count(t)) expect.insert(t);
    auto panel3 = align_panel({"A", "B"}, {s1, s2});
    CHECK(panel3.rows() == static_cast<Eigen::Index>(expect.size()));
    for (long long t : panel3.timestamps) CHECK(expect.count(t) == 1);

    CHECK_THROWS_AS(align_panel({"A"}, {a}), DataError);
    CHECK_THROWS_AS(align_panel({"A", "B"}, {flat_bars(0, 60, 3, 1.0), flat_bars(9999, 60, 3, 1.0)}),
                    DataError);
}

TEST_CASE("build_features") {
    Eigen::VectorXd zeros = Eigen::VectorXd::Zero(14);
    FeatureVector f0 = build_features(zeros);
    CHECK(f0.volatility == 0.0);
    CHECK(f0.drawdown == 0.0);
    CHECK(f0.trend == doctest::Approx(0.0));
    CHECK(f0.path_length == 0.0);

    Eigen::VectorXd up = Eigen::VectorXd::Constant(14, 0.01);
    FeatureVector fu = build_features(up);
    CHECK(fu.trend == doctest::Approx(1.0).epsilon(1e-9));
    CHECK(fu.drawdown == 0.0);
    CHECK(fu.path_length == doctest::Approx(0.14));

    // Mixed window against an explicit path walk.
    Eigen::VectorXd mixed(14);
    mixed << 0.02, -0.05, 0.01, 0.03, -0.02, 0.0, 0.04, -0.06, 0.01, 0.02, -0.01, 0.0, 0.05, -0.03;
    FeatureVector fm = build_features(mixed);
    double level = 1.0, peak = 1.0, dd = 0.0, sum = 0.0, abs_sum = 0.0;
    for (int i = 0; i < 14; ++i) {
        level *= 1.0 + mixed[i];
        peak = std::max(peak, level);
        dd = std::max(dd, (peak - level) / peak);
        sum += mixed[i];
        abs_sum += std::fabs(mixed[i]);
    }
    double mean = sum / 14.0;
    double var = (mixed.array() - mean).square().mean();
    CHECK(fm.volatility == doctest::Approx(std::sqrt(var)).epsilon(1e-12));
    CHECK(fm.drawdown == doctest::Approx(dd).epsilon(1e-12));
    CHECK(fm.trend == doctest::Approx(sum / (abs_sum + 1e-12)).epsilon(1e-9));
    CHECK(fm.path_length == doctest::Approx(abs_sum).epsilon(1e-12));

    Eigen::VectorXd bad = zeros;
    bad[3] = std::nan("");
    CHECK_THROWS_AS(build_features(bad), DataError);
}

namespace {

AlignedPanel synthetic_panel(int n, int d) {
    AlignedPanel p;
    for (int i = 0; i < d; ++i) p.assets.push_back("A" + std::to_string(i));
    p.returns.setZero(n, d);
    p.closes.resize(n, d);
    for (int i = 0; i < d; ++i) {
        double level = 100.0;
        p.closes(0, i) = level;
        for (int t = 1; t < n; ++t) {
            double r = 0.01 * std::sin(0.7 * t + i);
            level *= 1.0 + r;
            p.closes(t, i) = level;
            p.returns(t, i) = (p.closes(t, i) - p.closes(t - 1, i)) / p.closes(t - 1, i);
        }
    }
    for (int t = 0; t < n; ++t) p.timestamps.push_back(600LL * t);
    return p;
}

}  // namespace

TEST_CASE("make_windows counts, split, leakage") {
    // 16 panel rows with k=14 leave exactly one usable target.
    auto tiny = synthetic_panel(16, 1);
    auto all = make_all_windows(tiny, 14);
    CHECK(all[0].size() == 1);
    CHECK(all[0].target_rows[0] == 15);

    auto panel = synthetic_panel(115, 2);  // 100 windows
    auto all2 = make_all_windows(panel, 14);
    REQUIRE(all2[0].size() == 100);
    auto [train, test] = make_windows(panel, 14, 0.8);
    CHECK(train[0].size() == 80);
    CHECK(test[0].size() == 20);

    // Chronological cut: every train target precedes every test target.
    long long max_train = *std::max_element(train[0].target_timestamps.begin(),
                                            train[0].target_timestamps.end());
    long long min_test = *std::min_element(test[0].target_timestamps.begin(),
                                           test[0].target_timestamps.end());
    CHECK(max_train < min_test);

    // Windows never reach into the base row and features are pure functions
    // of the lags.
    for (Eigen::Index j = 0; j < train[0].size(); ++j) {
        FeatureVector f = build_features(train[0].lags.row(j).transpose());
        CHECK(train[0].features(j, 0) == doctest::Approx(f.volatility));
        CHECK(train[0].features(j, 2) == doctest::Approx(f.trend));
    }

    CHECK_THROWS_AS(make_windows(synthetic_panel(15, 1), 14, 0.8), DataError);
    CHECK_THROWS_AS(make_windows(panel, 14, 0.0), DataError);
    CHECK_THROWS_AS(make_windows(panel, 14, 1.0), DataError);
}

TEST_CASE("panel CSV roundtrip is lossless") {
    auto panel = synthetic_panel(40, 3);
    std::string csv = panel_to_csv(panel);
    auto back = panel_from_csv(csv);
    CHECK(back.assets == panel.assets);
    CHECK(back.timestamps == panel.timestamps);
    CHECK((back.returns - panel.returns).cwiseAbs().maxCoeff() == 0.0);
    back.validate();
    CHECK(panel_to_csv(back) == csv);

    // Stored returns recompute from stored closes within 1e-12.
    for (int t = 1; t < 40; ++t)
        for (int i = 0; i < 3; ++i)
            CHECK(std::fabs(back.returns(t, i) - (back.closes(t, i) - back.closes(t - 1, i)) /
                                                     back.closes(t - 1, i)) < 1e-12);
}
