#include <gtest/gtest.h>

#include <cmath>

#include "iotsim/airtime.hpp"

using namespace iotsim::airtime;

namespace {

// Independent reference: symbol counts via floating ceil, durations in ms.
double oracle_toa_ms(int sf, double bw_khz, int pl, int cr = 1, bool crc = true, bool ih = false, int preamble = 8) {
  const double tsym = std::pow(2.0, sf) / bw_khz;  // ms
  const int de = tsym >= 16.0 ? 1 : 0;
  const double n = std::ceil((8.0 * pl - 4.0 * sf + 28 + 16 * (crc ? 1 : 0) - 20 * (ih ? 1 : 0)) / (4.0 * (sf - 2 * de)));
  const double payload = 8 + std::max(n * (cr + 4), 0.0);
  return (preamble + 4.25) * tsym + payload * tsym;
}

}  // namespace

TEST(Airtime, FrozenTableTotals) {
  EXPECT_NEAR(time_on_air(make_config(7, 125000), 60).total * 1e3, 112.896, 1e-9);
  EXPECT_NEAR(time_on_air(make_config(7, 125000), 4).total * 1e3, 30.976, 1e-9);
  EXPECT_NEAR(time_on_air(make_config(7, 250000), 60).total * 1e3, 56.448, 1e-9);
  EXPECT_NEAR(time_on_air(make_config(7, 250000), 4).total * 1e3, 15.488, 1e-9);
  EXPECT_NEAR(time_on_air(make_config(7, 500000), 4).total * 1e3, 7.744, 1e-9);
  EXPECT_NEAR(time_on_air(make_config(9, 125000), 4).total * 1e3, 123.904, 1e-9);
  EXPECT_NEAR(time_on_air(make_config(9, 250000), 4).total * 1e3, 61.952, 1e-9);
  EXPECT_NEAR(time_on_air(make_config(9, 500000), 4).total * 1e3, 30.976, 1e-9);
}

TEST(Airtime, PayloadPartOfLongFrames) {
  const auto sf9 = time_on_air(make_config(9, 125000), 60);
  EXPECT_NEAR(sf9.total * 1e3, 369.664, 1e-9);
  EXPECT_NEAR(sf9.payload_duration * 1e3, 319.488, 1e-9);
  EXPECT_NEAR(time_on_air(make_config(9, 250000), 60).payload_duration * 1e3, 159.744, 1e-9);
  EXPECT_NEAR(time_on_air(make_config(9, 500000), 60).payload_duration * 1e3, 79.872, 1e-9);
  EXPECT_NEAR(time_on_air(make_config(7, 500000), 60).payload_duration * 1e3, 25.088, 1e-9);
}

TEST(Airtime, SymbolCounts) {
  EXPECT_EQ(payload_symbol_count(make_config(7, 125000), 60), 98);
  EXPECT_EQ(payload_symbol_count(make_config(9, 125000), 4), 18);
  EXPECT_EQ(payload_symbol_count(make_config(12, 125000), 0), 8);
  EXPECT_EQ(payload_symbol_count(make_config(7, 125000), 0), 13);
}

TEST(Airtime, ZeroPayloadIsPreamblePlusMinimum) {
  // 28 + 16 - 4*SF is positive below SF11, so one block remains at PL 0 for SF7.
  const auto a = time_on_air(make_config(7, 125000), 0);
  EXPECT_NEAR(a.total * 1e3, oracle_toa_ms(7, 125, 0), 1e-9);
  auto no_crc = make_config(12, 125000);
  no_crc.crc_on = false;
  no_crc.explicit_header = false;
  EXPECT_EQ(payload_symbol_count(no_crc, 0), 8);
}

TEST(Airtime, MatchesOracleAcrossConfigurations) {
  for (int sf = 7; sf <= 12; ++sf)
    for (double bw : {125.0, 250.0, 500.0})
      for (int pl : {0, 1, 4, 13, 60, 100, 255})
        for (int cr = 1; cr <= 4; ++cr) {
          auto cfg = make_config(sf, static_cast<std::uint32_t>(bw * 1000));
          cfg.coding_rate = cr;
          EXPECT_NEAR(time_on_air(cfg, pl).total * 1e3, oracle_toa_ms(sf, bw, pl, cr), 1e-9)
              << "sf " << sf << " bw " << bw << " pl " << pl << " cr " << cr;
        }
}

TEST(Airtime, LowDataRateOptimiseAuto) {
  EXPECT_FALSE(low_data_rate_optimize(make_config(10, 125000)));
  EXPECT_TRUE(low_data_rate_optimize(make_config(11, 125000)));
  EXPECT_TRUE(low_data_rate_optimize(make_config(12, 250000)));
  EXPECT_FALSE(low_data_rate_optimize(make_config(12, 500000)));
  auto forced = make_config(7, 125000);
  forced.ldro = Ldro::On;
  EXPECT_TRUE(low_data_rate_optimize(forced));
}

TEST(Airtime, MonotoneInPayloadAndSpreadingFactor) {
  for (int sf = 7; sf <= 12; ++sf) {
    double prev = 0;
    for (int pl = 0; pl <= 255; ++pl) {
      const double t = time_on_air(make_config(sf, 125000), pl).total;
      EXPECT_GE(t, prev);
      prev = t;
    }
  }
  for (int pl : {4, 60})
    for (int sf = 7; sf < 12; ++sf)
      EXPECT_LT(time_on_air(make_config(sf, 125000), pl).total, time_on_air(make_config(sf + 1, 125000), pl).total);
}

TEST(Airtime, RejectsInvalidConfigurations) {
  EXPECT_THROW(make_config(5, 125000).validate(), std::invalid_argument);
  EXPECT_THROW(make_config(13, 125000).validate(), std::invalid_argument);
  EXPECT_THROW(make_config(7, 100000).validate(), std::invalid_argument);
  auto cr = make_config(7, 125000);
  cr.coding_rate = 5;
  EXPECT_THROW(cr.validate(), std::invalid_argument);
  EXPECT_THROW(time_on_air(make_config(7, 125000), 256), std::invalid_argument);
  EXPECT_THROW(time_on_air(make_config(7, 125000), -1), std::invalid_argument);
  auto bad = make_config(6, 125000);
  bad.ldro = Ldro::On;
  bad.sf = 2;
  EXPECT_THROW(payload_symbol_count(bad, 4), std::invalid_argument);
}

TEST(Airtime, MinimumPeriod) {
  EXPECT_NEAR(min_tx_period(0.112896), 11.2896, 1e-12);
  EXPECT_NEAR(min_tx_period(0.369664), 36.9664, 1e-12);
  EXPECT_NEAR(RegulatoryLimit{}.budget_per_window(), 36.0, 1e-12);
  EXPECT_NEAR(min_tx_period(1.0, RegulatoryLimit{0.1, 3600}), 10.0, 1e-12);
}

TEST(Airtime, PolledCapacityTable) {
  struct Row {
    int sf;
    std::uint32_t bw;
    double period_a, packets_a, period_b, packets_b;
  };
  // School A (6 nodes) and School B (7 nodes) columns; printed values truncate.
  const Row rows[] = {{7, 125000, 18.58, 48.42, 21.68, 41.50}, {7, 250000, 9.29, 96.84, 10.84, 83.01},
                      {7, 500000, 4.64, 193.69, 5.42, 166.02}, {9, 125000, 74.34, 12.10, 86.73, 10.37},
                      {9, 250000, 37.17, 24.21, 43.36, 20.75}, {9, 500000, 18.58, 48.42, 21.68, 41.50}};
  for (const auto& r : rows) {
    const auto a = polled_capacity(6, make_config(r.sf, r.bw), 4, 900);
    const auto b = polled_capacity(7, make_config(r.sf, r.bw), 4, 900);
    EXPECT_NEAR(a.per_node_period, r.period_a, 0.01);
    EXPECT_NEAR(a.max_packets, r.packets_a, 0.01);
    EXPECT_NEAR(b.per_node_period, r.period_b, 0.01);
    EXPECT_NEAR(b.max_packets, r.packets_b, 0.01);
  }
  EXPECT_THROW(polled_capacity(0, make_config(7, 125000), 4, 900), std::invalid_argument);
}

TEST(Airtime, PollSlot) {
  const auto c2 = make_config(7, 500000);
  const double slot2 = poll_slot_duration(c2, 0.05, 0.0376);
  EXPECT_NEAR(slot2, 0.862, 1e-9);
  EXPECT_EQ(polls_per_window(6, slot2, 900), 174);
  const double slot1 = poll_slot_duration(make_config(9, 125000), 0.05, 0.0376);
  EXPECT_NEAR(slot1, 12.3904 + 0.0876, 1e-9);
  EXPECT_EQ(polls_per_window(6, slot1, 900), 12);
  // Slot never drops below the regulatory DRP period.
  for (int sf = 7; sf <= 12; ++sf)
    EXPECT_GE(poll_slot_duration(make_config(sf, 125000), 0, 0), min_tx_period(time_on_air(make_config(sf, 125000), 4).total));
  EXPECT_THROW(poll_slot_duration(c2, -1, 0), std::invalid_argument);
}
