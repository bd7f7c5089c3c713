#include "sleid/synthgen/synthgen.hpp"

#include <algorithm>
#include <array>
#include <optional>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <numeric>
#include <set>
#include <sstream>
#include <unordered_set>

#include "sleid/common/binio.hpp"
#include "sleid/common/error.hpp"
#include "sleid/common/rng.hpp"
#include "sleid/common/stats.hpp"
#include "sleid/common/text.hpp"
#include "sleid/txgraph/io.hpp"

namespace sleid::synthgen {

using txgraph::TransactionRecord;
using txgraph::TxKind;
using txgraph::Wei;

std::string_view archetype_name(Archetype a) {
  switch (a) {
    case Archetype::kPhishingFanIn: return "phishing_fan_in";
    case Archetype::kWashTradeLoop: return "wash_trade_loop";
    case Archetype::kFlashBurst: return "flash_burst";
    case Archetype::kRegular: return "regular";
    case Archetype::kDefiHeavy: return "defi_heavy";
    case Archetype::kCasual: return "casual";
    case Archetype::kBot: return "bot";
    case Archetype::kCollector: return "collector";
    case Archetype::kMarketMaker: return "market_maker";
    case Archetype::kExchange: return "exchange";
    case Archetype::kDefiContract: return "defi_contract";
  }
  return "?";
}

bool is_illicit(Archetype a) {
  return a == Archetype::kPhishingFanIn || a == Archetype::kWashTradeLoop || a == Archetype::kFlashBurst;
}

namespace {

constexpr std::int64_t kDay = 86400;
constexpr std::int64_t kGenesis = 1'600'000'000;
constexpr std::uint64_t kFirstBlock = 10'000'000;
constexpr std::int64_t kBlockSeconds = 12;
constexpr std::size_t kTokenCount = 10;

constexpr std::uint32_t kTransferSel = 0xa9059cbb;
constexpr std::uint32_t kApproveSel = 0x095ea7b3;
constexpr std::uint32_t kSwapSel = 0x38ed1739;
constexpr std::uint32_t kDepositSel = 0xd0e30db0;
constexpr std::uint32_t kFlashLoanSel = 0xab9c4b5d;
constexpr std::uint32_t kMulticallSel = 0xac9650d8;
constexpr std::uint32_t kClaimSel = 0x4e71d92d;

std::optional<Archetype> parse_archetype(std::string_view s) {
  for (auto a : {Archetype::kPhishingFanIn, Archetype::kWashTradeLoop, Archetype::kFlashBurst,
                 Archetype::kRegular, Archetype::kDefiHeavy, Archetype::kCasual, Archetype::kBot,
                 Archetype::kCollector, Archetype::kMarketMaker,
                 Archetype::kExchange, Archetype::kDefiContract}) {
    if (archetype_name(a) == s) return a;
  }
  return std::nullopt;
}

Wei ether(double eth) {
  if (!(eth > 0)) return 0;
  return static_cast<Wei>(std::llround(eth * 1e9)) * static_cast<Wei>(1'000'000'000ull);
}

// Counts per archetype by largest remainder so the total is exactly n.
std::array<std::size_t, 3> split_counts(std::size_t n, const ArchetypeMix& mix) {
  const double w[3] = {mix.phishing_fan_in, mix.wash_trade_loop, mix.flash_burst};
  std::array<std::size_t, 3> out{};
  std::array<double, 3> rem{};
  std::size_t used = 0;
  for (int i = 0; i < 3; ++i) {
    const double exact = w[i] * static_cast<double>(n);
    out[i] = static_cast<std::size_t>(std::floor(exact + 1e-9));
    rem[i] = exact - static_cast<double>(out[i]);
    used += out[i];
  }
  while (used < n) {
    int best = 0;
    for (int i = 1; i < 3; ++i)
      if (rem[i] > rem[best] + 1e-12) best = i;
    ++out[best];
    rem[best] = -1.0;
    ++used;
  }
  return out;
}

class Generator {
 public:
  explicit Generator(const ScenarioConfig& c)
      : c_(c), rng_(derive_seed(c.seed, {0x5E})), horizon_(static_cast<std::int64_t>(c.horizon_days) * kDay) {}

  Scenario run();

 private:
  struct Pending {
    TransactionRecord record;
    std::uint64_t seq;
  };

  std::string make_address(std::uint64_t ns, std::uint64_t index) {
    for (std::uint64_t attempt = 0;; ++attempt) {
      const auto a = derive_seed(c_.seed, {0xAD, ns, index, attempt});
      const auto b = splitmix64(a);
      const auto d = splitmix64(b);
      std::string s = "0x" + hex64(a) + hex64(b) + hex64(d).substr(0, 8);
      if (used_addresses_.insert(s).second) return s;
    }
  }

  std::size_t add_account(Archetype kind) {
    addresses_.push_back(make_address(1, addresses_.size()));
    kinds_.push_back(kind);
    tx_count_.push_back(0);
    stealth_.push_back(0.0);
    return addresses_.size() - 1;
  }

  double gas_price() { return std::exp(rng_.normal(std::log(30.0), 0.35)); }

  std::int64_t clamp_ts(std::int64_t ts) const { return std::clamp<std::int64_t>(ts, kGenesis, kGenesis + horizon_); }

  void emit(std::int64_t ts, std::size_t from, std::size_t to, TxKind kind, double eth, double gas,
            double gwei, std::optional<std::size_t> token = std::nullopt, double amount = 0.0,
            std::optional<std::uint32_t> method = std::nullopt) {
    TransactionRecord r;
    r.timestamp = clamp_ts(ts);
    r.block_height = kFirstBlock + static_cast<std::uint64_t>((r.timestamp - kGenesis) / kBlockSeconds);
    r.sender = addresses_[from];
    r.receiver = addresses_[to];
    r.native_value = ether(eth);
    r.fee = static_cast<Wei>(std::llround(gas * gwei)) * static_cast<Wei>(1'000'000'000ull);
    r.kind = kind;
    if (token) r.token_contract = tokens_[*token];
    r.token_value = ether(amount);
    if (method) {
      r.method_id = *method;
    } else if (kind == TxKind::kErc20Transfer) {
      r.method_id = kTransferSel;
    } else if (kind == TxKind::kApprove) {
      r.method_id = kApproveSel;
    }
    ++tx_count_[from];
    if (to != from) ++tx_count_[to];
    pending_.push_back({std::move(r), pending_.size()});
  }

  void native(std::int64_t ts, std::size_t from, std::size_t to, double eth, double gwei = 0) {
    emit(ts, from, to, TxKind::kNativeTransfer, eth, 21000, gwei > 0 ? gwei : gas_price());
  }
  void token_transfer(std::int64_t ts, std::size_t from, std::size_t to, std::size_t token, double amount,
                      double gwei = 0) {
    emit(ts, from, to, TxKind::kErc20Transfer, 0, rng_.uniform(45000, 65000), gwei > 0 ? gwei : gas_price(),
         token, amount);
  }
  void approve(std::int64_t ts, std::size_t from, std::size_t spender, std::size_t token, double amount) {
    emit(ts, from, spender, TxKind::kApprove, 0, 46000, gas_price(), token, amount);
  }
  void call(std::int64_t ts, std::size_t from, std::size_t contract, double eth, std::uint32_t method,
            double gas, double gwei = 0) {
    emit(ts, from, contract, TxKind::kContractCall, eth, gas, gwei > 0 ? gwei : gas_price(), std::nullopt, 0,
         method);
  }

  double amount() { return std::exp(rng_.normal(std::log(0.4), 1.2)); }
  std::size_t pick(const std::vector<std::size_t>& v) { return v[rng_.below(v.size())]; }
  std::int64_t at(std::int64_t lo, std::int64_t hi) { return hi <= lo ? lo : rng_.between(lo, hi); }
  std::size_t token() { return rng_.below(kTokenCount); }

  // Starts an activity window of at least min_span inside the horizon.
  std::pair<std::int64_t, std::int64_t> window(double start_max_frac, std::int64_t min_span) {
    const std::int64_t latest_start = std::max<std::int64_t>(0, horizon_ - min_span);
    const std::int64_t start =
        kGenesis + at(0, std::min<std::int64_t>(latest_start, static_cast<std::int64_t>(start_max_frac * horizon_)));
    const std::int64_t remaining = kGenesis + horizon_ - start;
    const std::int64_t span = at(std::min(min_span, remaining), remaining);
    return {start, start + span};
  }

  void regular(std::size_t self);
  void defi_heavy(std::size_t self);
  void casual(std::size_t self);
  void bot(std::size_t self);
  void collector(std::size_t self);
  void market_maker(std::size_t self, const std::vector<std::size_t>& desks);
  void camouflage(std::size_t self, std::int64_t start, std::int64_t end, double stealth);
  void phishing_cluster(const std::vector<std::size_t>& members);
  void wash_group(const std::vector<std::size_t>& members);
  void flash_group(const std::vector<std::size_t>& members);

  const ScenarioConfig& c_;
  Rng rng_;
  std::int64_t horizon_;

  std::vector<std::string> addresses_;
  std::vector<Archetype> kinds_;
  std::vector<std::size_t> tx_count_;
  std::vector<double> stealth_;
  std::unordered_set<std::string> used_addresses_;
  std::vector<std::string> tokens_;

  std::vector<std::size_t> exchanges_;
  std::vector<std::size_t> contracts_;
  std::vector<std::size_t> people_;  // licit externally owned accounts

  std::vector<Pending> pending_;
};

std::vector<std::size_t> contacts_for(Rng& rng, const std::vector<std::size_t>& people, std::size_t self, int lo, int hi) {
  std::vector<std::size_t> out;
  const auto n = rng.between(lo, hi);
  for (std::int64_t i = 0; i < n && people.size() > 1; ++i) {
    std::size_t p;
    do {
      p = people[rng.below(people.size())];
    } while (p == self);
    out.push_back(p);
  }
  return out;
}

void Generator::regular(std::size_t self) {
  auto [start, end] = window(0.55, 60 * kDay);
  const double days = static_cast<double>(end - start) / kDay;
  const double rate = std::exp(rng_.normal(std::log(0.12), 0.7));
  const auto n_out = std::max<std::uint64_t>(4, rng_.poisson(rate * days));
  const auto contacts = contacts_for(rng_, people_, self, 2, 6);
  const std::size_t home = pick(exchanges_);
  native(start, home, self, amount() * 3);
  for (std::uint64_t i = 0; i < n_out; ++i) {
    const auto ts = at(start + 60, end);
    const double u = rng_.uniform();
    if (u < 0.40) {
      native(ts, self, contacts[rng_.below(contacts.size())], amount());
    } else if (u < 0.62) {
      native(ts, self, rng_.bernoulli(0.8) ? home : pick(exchanges_), amount());
    } else if (u < 0.80) {
      token_transfer(ts, self, rng_.bernoulli(0.6) ? contacts[rng_.below(contacts.size())] : home, token(),
                     amount() * 100);
    } else if (u < 0.87) {
      native(ts, self, pick(people_), amount());
    } else if (u < 0.95) {
      const auto router = pick(contracts_);
      call(ts, self, router, amount(), kSwapSel, rng_.uniform(120000, 220000));
      if (rng_.bernoulli(0.5)) token_transfer(ts + at(12, 60), router, self, token(), amount() * 100);
    } else {
      approve(ts, self, pick(contracts_), token(), 1e6);
    }
  }
  const auto n_in = rng_.poisson(static_cast<double>(n_out) * 0.25);
  for (std::uint64_t i = 0; i < n_in; ++i) native(at(start + 60, end), home, self, amount());
}

void Generator::defi_heavy(std::size_t self) {
  auto [start, end] = window(0.7, 20 * kDay);
  const double days = static_cast<double>(end - start) / kDay;
  const double rate = std::exp(rng_.normal(std::log(0.3), 0.6));
  const auto n = std::max<std::uint64_t>(6, rng_.poisson(rate * days));
  std::vector<std::size_t> routers;
  for (int i = 0, k = static_cast<int>(rng_.between(1, 3)); i < k; ++i) routers.push_back(pick(contracts_));
  const auto contacts = contacts_for(rng_, people_, self, 1, 4);
  const std::size_t home = pick(exchanges_);
  native(start, home, self, amount() * 10);
  for (std::uint64_t i = 0; i < n; ++i) {
    const auto ts = at(start + 60, end);
    const auto router = routers[rng_.below(routers.size())];
    const double u = rng_.uniform();
    if (u < 0.45) {
      call(ts, self, router, amount(), rng_.bernoulli(0.8) ? kSwapSel : kMulticallSel, rng_.uniform(120000, 350000));
      if (rng_.bernoulli(0.7)) token_transfer(ts + at(12, 120), router, self, token(), amount() * 100);
    } else if (u < 0.60) {
      approve(ts, self, router, token(), 1e9);
    } else if (u < 0.75) {
      const auto t = token();
      token_transfer(ts, self, router, t, amount() * 100);
      if (rng_.bernoulli(0.5)) token_transfer(ts + at(kDay, 20 * kDay), router, self, t, amount() * 100);
    } else if (u < 0.90) {
      native(ts, self, home, amount() * 2);
    } else {
      token_transfer(ts, self, contacts[rng_.below(contacts.size())], token(), amount() * 50);
    }
  }
  const auto n_in = rng_.poisson(static_cast<double>(n) * 0.1);
  for (std::uint64_t i = 0; i < n_in; ++i) native(at(start + 60, end), home, self, amount());
}

void Generator::casual(std::size_t self) {
  const auto start = kGenesis + at(0, horizon_ - 2 * kDay);
  const auto span = std::min<std::int64_t>(static_cast<std::int64_t>(rng_.exponential(1.0 / (4.0 * kDay))),
                                           kGenesis + horizon_ - start);
  const auto end = start + span;
  native(start, pick(exchanges_), self, amount());
  const auto n = rng_.poisson(2.0);
  for (std::uint64_t i = 0; i < n; ++i) {
    const auto ts = at(start + 30, end);
    const double u = rng_.uniform();
    if (u < 0.4) {
      native(ts, self, pick(people_), amount() * 0.5);
    } else if (u < 0.65) {
      native(ts, self, pick(exchanges_), amount() * 0.5);
    } else if (u < 0.9) {
      const auto router = pick(contracts_);
      call(ts, self, router, amount() * 0.3, rng_.bernoulli(0.5) ? kSwapSel : kClaimSel, rng_.uniform(90000, 250000));
      if (rng_.bernoulli(0.5)) token_transfer(ts + at(12, 60), router, self, token(), amount() * 20);
    } else {
      approve(ts, self, pick(contracts_), token(), 1e6);
    }
  }
}

void Generator::bot(std::size_t self) {
  auto [start, end] = window(0.5, 90 * kDay);
  native(start, pick(exchanges_), self, amount() * 20);
  const auto bursts = rng_.between(5, 20);
  const auto home = pick(exchanges_);
  for (std::int64_t b = 0; b < bursts; ++b) {
    const auto t = at(start + 60, end - 3600);
    const auto k = rng_.between(3, 15);
    const double gwei = gas_price() * rng_.uniform(1.5, 5.0);
    for (std::int64_t i = 0; i < k; ++i) {
      const auto ts = t + at(0, 600);
      call(ts, self, pick(contracts_), amount() * 0.1, rng_.bernoulli(0.7) ? kSwapSel : kMulticallSel,
           rng_.uniform(150000, 800000), gwei);
    }
    if (rng_.bernoulli(0.3)) native(t + at(kDay, 5 * kDay), self, home, amount());
  }
}

void Generator::collector(std::size_t self) {
  const auto start = kGenesis + at(0, horizon_ - 31 * kDay);
  const auto end = start + static_cast<std::int64_t>(rng_.uniform(1.0, 30.0) * kDay);
  const auto payers = rng_.between(5, 25);
  const auto tok = token();
  for (std::int64_t i = 0; i < payers; ++i) {
    const auto ts = at(start, end);
    if (rng_.bernoulli(0.6)) {
      native(ts, pick(people_), self, amount());
    } else {
      token_transfer(ts, pick(people_), self, tok, amount() * 200);
    }
  }
  for (std::int64_t k = 0, n = rng_.between(1, 3); k < n; ++k) {
    const auto ts = at(start + (end - start) / 2, end + kDay);
    if (rng_.bernoulli(0.8)) {
      native(ts, self, pick(exchanges_), amount() * 5);
    } else {
      call(ts, self, pick(contracts_), amount() * 2, kSwapSel, rng_.uniform(150000, 300000));
    }
  }
}

void Generator::market_maker(std::size_t self, const std::vector<std::size_t>& desks) {
  auto [start, end] = window(0.5, 60 * kDay);
  native(start, pick(exchanges_), self, amount() * 50);
  const double days = static_cast<double>(end - start) / kDay;
  const auto n = std::max<std::uint64_t>(10, rng_.poisson(days * rng_.uniform(0.04, 0.2)));
  const auto router = pick(contracts_);
  for (std::uint64_t i = 0; i < n; ++i) {
    const auto ts = at(start + 60, end);
    const auto other = desks.size() > 1 && rng_.bernoulli(0.5) ? pick(desks) : pick(people_);
    if (other == self) continue;
    const auto tok = token();
    const double v = amount() * 400;
    token_transfer(ts, self, other, tok, v);
    if (rng_.bernoulli(0.6)) token_transfer(ts + at(300, 2 * kDay), other, self, tok, v * rng_.uniform(0.95, 1.05));
    if (rng_.bernoulli(0.3)) {
      call(ts + at(60, 3600), self, router, amount(), kSwapSel, rng_.uniform(150000, 300000));
      token_transfer(ts + at(3700, 7200), router, self, tok, v);
    }
  }
}

// Licit-looking side activity that blurs an illicit account's signature.
void Generator::camouflage(std::size_t self, std::int64_t start, std::int64_t end, double stealth) {
  const auto n = rng_.poisson(6.0 * stealth);
  for (std::uint64_t i = 0; i < n; ++i) {
    const auto ts = at(start, end);
    const double u = rng_.uniform();
    if (u < 0.4) {
      native(ts, self, pick(people_), amount() * 0.5);
    } else if (u < 0.7) {
      native(ts, pick(exchanges_), self, amount());
    } else {
      token_transfer(ts, self, pick(people_), token(), amount() * 50);
    }
  }
}

void Generator::phishing_cluster(const std::vector<std::size_t>& members) {
  const auto base = kGenesis + at(5 * kDay, horizon_ - 45 * kDay);
  const std::size_t collector = members.front();
  struct Span {
    std::int64_t start, end;
    double stealth;
  };
  std::vector<Span> spans;
  for (std::size_t m = 0; m < members.size(); ++m) {
    const double st = rng_.uniform(0.0, c_.stealth);
    const auto start = base + at(0, 2 * kDay);
    const double days = rng_.uniform(0.3, c_.phishing_span_days_max * (1.0 + 2.0 * st));
    spans.push_back({start, start + static_cast<std::int64_t>(days * kDay), st});
    stealth_[members[m]] = st;
  }
  std::int64_t collector_end = spans[0].end;
  for (std::size_t m = 0; m < members.size(); ++m) {
    const auto self = members[m];
    const auto [start, end, st] = spans[m];
    native(start, pick(rng_.bernoulli(0.5) ? exchanges_ : people_), self, rng_.uniform(0.01, 0.1));
    const auto lo = std::max<std::int64_t>(1, std::llround(c_.fan_in_min * (1.0 - 0.5 * st)));
    const auto hi = std::max<std::int64_t>(lo, std::llround(c_.fan_in_max * (1.0 - 0.6 * st)));
    const auto width = rng_.between(lo, hi);
    const auto lure = token();
    const double approve_share = 0.25 * (1.0 - st);
    for (std::int64_t v = 0; v < width; ++v) {
      const auto victim = pick(people_);
      const auto ts = at(start + 60, end);
      const double u = rng_.uniform();
      if (u < 0.55) {
        native(ts, victim, self, amount() * 2);
      } else if (u < 0.55 + approve_share) {
        approve(ts, victim, self, lure, 1e12);
        token_transfer(ts + at(30, 3600), victim, self, lure, amount() * 300);
      } else {
        token_transfer(ts, victim, self, lure, amount() * 300);
      }
    }
    if (m > 0) {
      // Consolidation into the collector, plus a link to the previous member.
      for (std::int64_t k = 0, n = rng_.between(1, 4); k < n; ++k) {
        const auto ts = at(start + 3600, end);
        native(ts, self, collector, amount() * 3);
        collector_end = std::max(collector_end, ts);
      }
      if (m > 1 && rng_.bernoulli(0.5)) native(at(start, end), self, members[m - 1], amount());
    }
    if (rng_.bernoulli(0.6)) {
      const auto router = pick(contracts_);
      const auto ts = at(start + 600, end);
      token_transfer(ts, self, router, lure, amount() * 300);
      call(ts + at(12, 120), self, router, 0, kSwapSel, rng_.uniform(150000, 300000));
    }
    camouflage(self, start, end, st);
  }
  // Cash-out from the collector after consolidation.
  const auto out_start = collector_end + 60;
  for (std::int64_t k = 0, n = rng_.between(1, 3); k < n; ++k) {
    const auto ts = out_start + at(0, 2 * kDay);
    if (rng_.bernoulli(0.6)) {
      call(ts, collector, pick(contracts_), amount() * 5, kSwapSel, rng_.uniform(150000, 300000));
    } else {
      native(ts, collector, pick(exchanges_), amount() * 5);
    }
  }
}

void Generator::wash_group(const std::vector<std::size_t>& members) {
  const double st = rng_.uniform(0.0, c_.stealth);
  for (auto m : members) stealth_[m] = st;
  const auto start = kGenesis + at(2 * kDay, horizon_ - 45 * kDay);
  const auto span = static_cast<std::int64_t>(rng_.uniform(2.0, 40.0) * kDay);
  const auto cycles = rng_.between(c_.wash_cycles_min, c_.wash_cycles_max);
  const auto tok = token();
  const auto router = pick(contracts_);
  const auto max_delay = static_cast<std::int64_t>(6 * 3600 + st * 14 * 3600);
  for (auto m : members) native(start + at(0, 3600), pick(exchanges_), m, amount() * 5);
  const std::size_t L = members.size();
  for (std::int64_t c = 0; c < cycles; ++c) {
    const auto t = start + 3600 + span * c / std::max<std::int64_t>(1, cycles);
    for (std::size_t i = 0; i < L; ++i) {
      const auto a = members[i];
      const auto b = members[(i + 1) % L];
      if (a == b) continue;
      const double v = amount() * 500;
      const auto ts = t + at(0, 1800);
      token_transfer(ts, a, b, tok, v);
      if (!rng_.bernoulli(0.3 * st)) token_transfer(ts + at(60, max_delay), b, a, tok, v * 0.997);
    }
    if (rng_.bernoulli(0.3)) native(t + at(0, 3600), members[0], members[0], amount());
    for (auto m : members) {
      if (!rng_.bernoulli(0.35)) continue;
      const auto ts = t + at(0, 3600);
      call(ts, m, router, amount(), kSwapSel, rng_.uniform(150000, 300000));
      token_transfer(ts + at(12, 120), router, m, tok, amount() * 500);
    }
  }
  for (auto m : members) {
    native(start + span + at(3600, 2 * kDay), m, pick(exchanges_), amount() * 4);
    camouflage(m, start, start + span, st);
  }
}

void Generator::flash_group(const std::vector<std::size_t>& members) {
  const auto start = kGenesis + at(kDay, horizon_ - 5 * kDay);
  for (auto self : members) {
    const double st = rng_.uniform(0.0, c_.stealth);
    stealth_[self] = st;
    const auto t0 = start + at(0, 6 * 3600);
    native(t0, rng_.bernoulli(0.7) ? pick(exchanges_) : pick(people_), self, rng_.uniform(0.05, 2.0));
    const double gwei = gas_price() * rng_.uniform(1.0 + 1.0 * (1.0 - st), 8.0 - 5.0 * st);
    // Stealthier accounts spread their activity over a few bursts and days.
    const auto bursts = rng_.bernoulli(st) ? rng_.between(2, 4) : 1;
    std::int64_t last = t0;
    for (std::int64_t b = 0; b < bursts; ++b) {
      const auto origin = b == 0 ? t0 + 30 : t0 + at(3600, static_cast<std::int64_t>(3 * kDay * st) + 3600);
      const auto w = at(120, std::max<std::int64_t>(120, c_.burst_window_seconds));
      const auto n = std::max<std::int64_t>(1, rng_.between(c_.burst_tx_min, c_.burst_tx_max) / bursts);
      const auto slots = std::max<std::int64_t>(1, n / rng_.between(2, 6));
      std::vector<std::int64_t> blocks;
      for (std::int64_t s = 0; s < slots; ++s) blocks.push_back(origin + at(0, w));
      for (std::int64_t i = 0; i < n; ++i) {
        const auto ts = blocks[rng_.below(blocks.size())];
        const auto pool = pick(contracts_);
        call(ts, self, pool, rng_.bernoulli(0.3) ? amount() : 0.0,
             rng_.bernoulli(0.6) ? kFlashLoanSel : (rng_.bernoulli(0.5) ? kSwapSel : kDepositSel),
             rng_.uniform(300000, 2000000), gwei);
        if (rng_.bernoulli(0.4)) token_transfer(ts, pool, self, token(), amount() * 5000, gwei);
        last = std::max(last, ts);
      }
    }
    const auto end = last + at(60, 3600);
    camouflage(self, t0, end, st);
    const auto sink = members.size() > 1 && self != members.back() ? members.back() : pick(exchanges_);
    native(end, self, sink, amount() * 10, gwei);
  }
}

Scenario Generator::run() {
  const std::size_t n_ill = static_cast<std::size_t>(std::llround(c_.illicit_fraction * static_cast<double>(c_.n_accounts)));
  const std::size_t n_contract = c_.defi_registry_size;
  const std::size_t n_people = c_.n_accounts - n_ill - n_contract - c_.n_exchanges;
  const auto share = [&](double f) { return static_cast<std::size_t>(std::llround(f * static_cast<double>(n_people))); };
  const std::size_t n_bot = share(c_.bot_fraction);
  const std::size_t n_collector = share(c_.collector_fraction);
  const std::size_t n_mm = share(c_.market_maker_fraction);
  const std::size_t n_defi = share(c_.defi_heavy_fraction);
  const std::size_t n_casual = share(c_.casual_fraction);
  const std::size_t n_regular = n_people - n_bot - n_defi - n_casual - n_collector - n_mm;

  for (std::size_t i = 0; i < kTokenCount; ++i) tokens_.push_back(make_address(2, i));
  for (std::size_t i = 0; i < c_.n_exchanges; ++i) exchanges_.push_back(add_account(Archetype::kExchange));
  for (std::size_t i = 0; i < n_contract; ++i) contracts_.push_back(add_account(Archetype::kDefiContract));
  std::vector<std::size_t> regulars, defis, casuals, bots, collectors, desks;
  for (std::size_t i = 0; i < n_regular; ++i) regulars.push_back(add_account(Archetype::kRegular));
  for (std::size_t i = 0; i < n_defi; ++i) defis.push_back(add_account(Archetype::kDefiHeavy));
  for (std::size_t i = 0; i < n_casual; ++i) casuals.push_back(add_account(Archetype::kCasual));
  for (std::size_t i = 0; i < n_bot; ++i) bots.push_back(add_account(Archetype::kBot));
  for (std::size_t i = 0; i < n_collector; ++i) collectors.push_back(add_account(Archetype::kCollector));
  for (std::size_t i = 0; i < n_mm; ++i) desks.push_back(add_account(Archetype::kMarketMaker));
  people_ = regulars;
  people_.insert(people_.end(), defis.begin(), defis.end());
  people_.insert(people_.end(), casuals.begin(), casuals.end());

  for (auto a : regulars) regular(a);
  for (auto a : defis) defi_heavy(a);
  for (auto a : casuals) casual(a);
  for (auto a : bots) bot(a);
  for (auto a : collectors) collector(a);
  for (auto a : desks) market_maker(a, desks);

  const auto counts = split_counts(n_ill, c_.mix);
  auto grouped = [&](Archetype kind, std::size_t n, std::int64_t lo, std::int64_t hi, auto&& body) {
    std::size_t made = 0;
    while (made < n) {
      const auto size = std::min<std::size_t>(n - made, static_cast<std::size_t>(rng_.between(lo, hi)));
      std::vector<std::size_t> members;
      for (std::size_t i = 0; i < size; ++i) members.push_back(add_account(kind));
      body(members);
      made += size;
    }
  };
  grouped(Archetype::kPhishingFanIn, counts[0], c_.cluster_min, c_.cluster_max,
          [&](const auto& m) { phishing_cluster(m); });
  grouped(Archetype::kWashTradeLoop, counts[1], c_.loop_min, c_.loop_max, [&](const auto& m) { wash_group(m); });
  grouped(Archetype::kFlashBurst, counts[2], 1, 2, [&](const auto& m) { flash_group(m); });

  // Every account gets at least one transaction.
  for (std::size_t a = 0; a < addresses_.size(); ++a) {
    if (tx_count_[a] > 0) continue;
    const auto ex = exchanges_[(a + 1) % exchanges_.size()];
    const auto from = ex == a ? exchanges_[(a + 2) % exchanges_.size()] : ex;
    if (from == a) {
      native(kGenesis + at(0, horizon_), a, a, amount());
    } else {
      native(kGenesis + at(0, horizon_), from, a, amount());
    }
  }

  std::sort(pending_.begin(), pending_.end(), [](const Pending& x, const Pending& y) {
    return std::tie(x.record.timestamp, x.seq) < std::tie(y.record.timestamp, y.seq);
  });
  Scenario s;
  s.records.reserve(pending_.size());
  for (std::size_t i = 0; i < pending_.size(); ++i) {
    auto& r = pending_[i].record;
    const auto h = derive_seed(c_.seed, {0x7E, i});
    r.tx_hash = "0x" + hex64(h) + hex64(splitmix64(h)) + hex64(splitmix64(h + 1)) + hex64(splitmix64(h + 2));
    s.records.push_back(std::move(r));
  }

  for (std::size_t a = 0; a < addresses_.size(); ++a) {
    s.truth.push_back({addresses_[a], is_illicit(kinds_[a]) ? 1 : 0, kinds_[a], stealth_[a]});
  }
  std::sort(s.truth.begin(), s.truth.end(), [](const auto& x, const auto& y) { return x.address < y.address; });

  // Published labels: a fixed share of each class, drawn from a separate stream.
  Rng reveal(derive_seed(c_.seed, {0x1AB}));
  std::vector<std::size_t> illicit_idx, licit_idx;
  for (std::size_t i = 0; i < s.truth.size(); ++i) {
    const auto k = s.truth[i].archetype;
    if (is_illicit(k)) {
      illicit_idx.push_back(i);
    } else if (k != Archetype::kExchange && k != Archetype::kDefiContract) {
      licit_idx.push_back(i);
    }
  }
  // Weighted sampling without replacement (largest u^(1/w) keys): blatant
  // accounts are more likely to have been reported than stealthy ones.
  auto publish = [&](std::vector<std::size_t>& idx, double frac, double bias, txgraph::Label label) {
    std::vector<std::pair<double, std::size_t>> keyed;
    for (auto i : idx) {
      double u = reveal.uniform();
      while (u <= 0.0) u = reveal.uniform();
      const double w = std::exp(-bias * s.truth[i].stealth);
      keyed.push_back({std::log(u) / w, i});
    }
    std::sort(keyed.begin(), keyed.end(), std::greater<>());
    auto n = static_cast<std::size_t>(std::llround(frac * static_cast<double>(idx.size())));
    if (n == 0 && frac > 0 && !idx.empty()) n = 1;
    for (std::size_t i = 0; i < n; ++i) {
      s.observed[s.truth[keyed[i].second].address] = txgraph::LabelState::seed(label);
    }
  };
  publish(illicit_idx, c_.reveal_illicit, c_.reveal_bias, txgraph::Label::kIllicit);
  publish(licit_idx, c_.reveal_licit, 0.0, txgraph::Label::kLicit);

  std::vector<std::string> registry;
  for (auto a : contracts_) registry.push_back(addresses_[a]);
  s.registry = riskrate::DefiRegistry(registry);
  return s;
}

}  // namespace

void ScenarioConfig::validate() const {
  auto bad = [](const std::string& what) { fail(ErrorCode::kBadConfig, "scenario: " + what); };
  auto fraction = [&](double v, const char* name) {
    if (!(v >= 0.0 && v <= 1.0)) bad(std::string(name) + " must lie in [0, 1]");
  };
  if (n_accounts < 100) bad("n_accounts must be at least 100");
  fraction(illicit_fraction, "illicit_fraction");
  fraction(mix.phishing_fan_in, "mix.phishing_fan_in");
  fraction(mix.wash_trade_loop, "mix.wash_trade_loop");
  fraction(mix.flash_burst, "mix.flash_burst");
  if (std::abs(mix.phishing_fan_in + mix.wash_trade_loop + mix.flash_burst - 1.0) > 1e-9) {
    bad("archetype mix must sum to 1");
  }
  fraction(defi_heavy_fraction, "defi_heavy_fraction");
  fraction(casual_fraction, "casual_fraction");
  fraction(bot_fraction, "bot_fraction");
  fraction(collector_fraction, "collector_fraction");
  fraction(market_maker_fraction, "market_maker_fraction");
  fraction(stealth, "stealth");
  fraction(reveal_illicit, "reveal_illicit");
  fraction(reveal_licit, "reveal_licit");
  if (!(reveal_bias >= 0.0 && std::isfinite(reveal_bias))) bad("reveal_bias must be finite and non-negative");
  const double licit_shares =
      defi_heavy_fraction + casual_fraction + bot_fraction + collector_fraction + market_maker_fraction;
  if (licit_shares >= 1.0) bad("licit shares leave no regular accounts");
  if (defi_registry_size < 1) bad("defi_registry_size must be at least 1");
  if (n_exchanges < 1) bad("n_exchanges must be at least 1");
  if (horizon_days < 60) bad("horizon_days must be at least 60");
  if (fan_in_min < 1 || fan_in_min > fan_in_max) bad("fan-in range");
  if (cluster_min < 1 || cluster_min > cluster_max) bad("cluster range");
  if (loop_min < 1 || loop_min > loop_max) bad("loop range");
  if (wash_cycles_min < 1 || wash_cycles_min > wash_cycles_max) bad("wash cycle range");
  if (burst_tx_min < 1 || burst_tx_min > burst_tx_max) bad("burst size range");
  if (burst_window_seconds < 120) bad("burst_window_seconds must be at least 120");
  if (!(phishing_span_days_max >= 0.3)) bad("phishing_span_days_max must be at least 0.3");
  const auto n_ill = static_cast<std::size_t>(std::llround(illicit_fraction * static_cast<double>(n_accounts)));
  const std::size_t fixed = n_ill + defi_registry_size + n_exchanges;
  if (fixed + 20 > n_accounts) bad("population does not fit in n_accounts");
  const double people = static_cast<double>(n_accounts - fixed);
  if (people * (1.0 - licit_shares) < 10.0) {
    bad("too few regular accounts");
  }
}

std::vector<std::string> Scenario::seeds() const {
  std::vector<std::string> out;
  for (const auto& [address, state] : observed) {
    if (state.label() == txgraph::Label::kIllicit) out.push_back(address);
  }
  return out;
}

Scenario generate(const ScenarioConfig& config) {
  config.validate();
  return Generator(config).run();
}

std::string format_truth_csv(const Scenario& s) {
  std::ostringstream out;
  out << "address,label,archetype,stealth\n";
  char buf[32];
  for (const auto& t : s.truth) {
    std::snprintf(buf, sizeof buf, ",%.6f\n", t.stealth);
    out << t.address << ',' << (t.label ? "illicit" : "licit") << ',' << archetype_name(t.archetype) << buf;
  }
  return out.str();
}

std::vector<TruthEntry> parse_truth_csv(std::string_view input) {
  std::vector<TruthEntry> out;
  auto lines = text::split_lines(input);
  for (std::size_t i = 1; i < lines.size(); ++i) {
    if (text::trim(lines[i]).empty()) continue;
    auto cells = text::split(lines[i], ',');
    auto err = [&](const std::string& what) {
      fail(ErrorCode::kParseError, "line " + std::to_string(i + 1) + ": " + what);
    };
    if (cells.size() != 3 && cells.size() != 4) err("expected address,label,archetype[,stealth]");
    TruthEntry e;
    auto a = txgraph::normalize_address(text::trim(cells[0]));
    if (!a) err("malformed address");
    e.address = *a;
    const auto label = text::trim(cells[1]);
    if (label == "illicit") {
      e.label = 1;
    } else if (label == "licit") {
      e.label = 0;
    } else {
      err("bad label");
    }
    auto k = parse_archetype(text::trim(cells[2]));
    if (!k) err("unknown archetype");
    e.archetype = *k;
    if (cells.size() == 4) {
      try {
        e.stealth = std::stod(std::string(text::trim(cells[3])));
      } catch (const std::exception&) {
        err("bad stealth");
      }
    }
    out.push_back(std::move(e));
  }
  return out;
}

void write_scenario(const Scenario& s, const std::string& dir, bool csv) {
  std::filesystem::create_directories(dir);
  const std::filesystem::path root(dir);
  if (csv) {
    write_file((root / "records.csv").string(), txgraph::to_csv(s.records));
  } else {
    write_file((root / "records.jsonl").string(), txgraph::to_jsonl(s.records));
  }
  write_file((root / "labels.csv").string(), txgraph::format_label_book(s.observed));
  write_file((root / "truth.csv").string(), format_truth_csv(s));
  write_file((root / "registry.txt").string(), riskrate::format_registry(s.registry));
  std::string seeds;
  for (const auto& a : s.seeds()) seeds += a + '\n';
  write_file((root / "seeds.txt").string(), seeds);
}

}  // namespace sleid::synthgen
