#pragma once

#include <algorithm>
#include <chrono>
#include <cstdint>
#include <iomanip>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "hybrid/error.hpp"
#include "hybrid/hybrid.hpp"
#include "hybrid/pc.hpp"
#include "hybrid/subgrp.hpp"

namespace hybrid {

enum class BenchOp { Mul, Inv, Order, SubOrder };

inline BenchOp parse_bench_op(const std::string& s) {
  if (s == "mul") return BenchOp::Mul;
  if (s == "inv") return BenchOp::Inv;
  if (s == "order") return BenchOp::Order;
  if (s == "suborder") return BenchOp::SubOrder;
  throw ArgumentError("unknown op \"" + s + "\" (expected mul, inv, order or suborder)");
}

inline const char* bench_op_name(BenchOp op) {
  switch (op) {
    case BenchOp::Mul: return "mul";
    case BenchOp::Inv: return "inv";
    case BenchOp::Order: return "order";
    case BenchOp::SubOrder: return "suborder";
  }
  return "?";
}

// Column headings follow the usual table of arithmetic timings.
inline const char* bench_op_heading(BenchOp op) {
  switch (op) {
    case BenchOp::Mul: return "x*y";
    case BenchOp::Inv: return "x^-1";
    case BenchOp::Order: return "|x|";
    case BenchOp::SubOrder: return "|<x,y>|";
  }
  return "?";
}

struct OpTiming {
  BenchOp op;
  std::size_t samples = 0;
  double mean_ms = 0;
  double median_ms = 0;
};

struct BenchReport {
  std::string group;
  std::uint64_t order = 0;
  double element_bytes = 0;  // mean x-word bytes plus packed b-part bytes
  std::vector<OpTiming> rows;
  std::vector<std::string> op_log;
};

struct BenchOptions {
  std::vector<BenchOp> ops{BenchOp::Mul, BenchOp::Inv};
  std::size_t samples = 10'000;
  std::uint64_t seed = 1;
  bool log_ops = false;
};

/// Times each op on elements drawn from a generator seeded with opts.seed;
/// the drawn elements depend only on the seed, the op list and the sample
/// count.
inline BenchReport run_bench(const HybridGroup& G, const std::string& name, const BenchOptions& opts) {
  if (opts.samples == 0) throw ArgumentError("sample count must be positive");
  if (opts.ops.empty()) throw ArgumentError("no ops given");
  using clock = std::chrono::steady_clock;
  BenchReport rep;
  rep.group = name;
  rep.order = G.group_order();
  std::mt19937_64 rng(opts.seed);
  double bytes = 0;
  std::size_t counted = 0;
  auto note = [&](const HybridElement& g) {
    bytes += static_cast<double>(g.xword.size() + PackedPcElement(G.b_pres(), g.bpart).byte_size());
    ++counted;
  };
  for (BenchOp op : opts.ops) {
    std::vector<double> times;
    times.reserve(opts.samples);
    for (std::size_t s = 0; s < opts.samples; ++s) {
      HybridElement x = G.random_element(rng);
      note(x);
      std::string logline;
      if (op == BenchOp::Mul || op == BenchOp::SubOrder) {
        HybridElement y = G.random_element(rng);
        auto t0 = clock::now();
        if (op == BenchOp::Mul) {
          HybridElement r = G.mul(x, y);
          times.push_back(std::chrono::duration<double, std::milli>(clock::now() - t0).count());
          if (opts.log_ops) logline = element_to_string(x) + " * " + element_to_string(y) + " = " + element_to_string(r);
        } else {
          std::uint64_t o = HybridBits(G, {x, y}).order();
          times.push_back(std::chrono::duration<double, std::milli>(clock::now() - t0).count());
          if (opts.log_ops) logline = "<" + element_to_string(x) + ", " + element_to_string(y) + "> = " + std::to_string(o);
        }
      } else {
        auto t0 = clock::now();
        if (op == BenchOp::Inv) {
          HybridElement r = G.inv(x);
          times.push_back(std::chrono::duration<double, std::milli>(clock::now() - t0).count());
          if (opts.log_ops) logline = element_to_string(x) + " ^-1 = " + element_to_string(r);
        } else {
          std::uint64_t o = G.order(x);
          times.push_back(std::chrono::duration<double, std::milli>(clock::now() - t0).count());
          if (opts.log_ops) logline = "|" + element_to_string(x) + "| = " + std::to_string(o);
        }
      }
      if (opts.log_ops) rep.op_log.push_back(std::string(bench_op_name(op)) + ' ' + logline);
    }
    OpTiming t{op, times.size()};
    for (double v : times) t.mean_ms += v;
    t.mean_ms /= static_cast<double>(times.size());
    std::nth_element(times.begin(), times.begin() + static_cast<std::ptrdiff_t>(times.size() / 2), times.end());
    t.median_ms = times[times.size() / 2];
    rep.rows.push_back(t);
  }
  rep.element_bytes = counted ? bytes / static_cast<double>(counted) : 0;
  return rep;
}

/// Plain table, one row per group and one mean-time column per op
/// (milliseconds). With mask_times the numbers print as "*", which is what
/// golden files compare.
inline std::string render_bench_table(const std::vector<BenchReport>& reports, bool mask_times = false) {
  std::vector<BenchOp> cols;
  for (const auto& r : reports)
    for (const auto& t : r.rows)
      if (std::find(cols.begin(), cols.end(), t.op) == cols.end()) cols.push_back(t.op);
  std::vector<std::vector<std::string>> cells;
  std::vector<std::string> head{"Group", "order"};
  for (BenchOp op : cols) head.push_back(bench_op_heading(op));
  head.push_back("samples");
  cells.push_back(head);
  for (const auto& r : reports) {
    std::vector<std::string> row{r.group, std::to_string(r.order)};
    std::size_t samples = 0;
    for (BenchOp op : cols) {
      auto it = std::find_if(r.rows.begin(), r.rows.end(), [&](const OpTiming& t) { return t.op == op; });
      if (it == r.rows.end()) {
        row.push_back("-");
        continue;
      }
      samples = std::max(samples, it->samples);
      std::ostringstream os;
      os << std::setprecision(4) << it->mean_ms;
      row.push_back(mask_times ? "*" : os.str());
    }
    row.push_back(std::to_string(samples));
    cells.push_back(row);
  }
  std::vector<std::size_t> width(head.size(), 0);
  for (const auto& row : cells)
    for (std::size_t c = 0; c < row.size(); ++c) width[c] = std::max(width[c], row[c].size());
  std::ostringstream os;
  auto rule = [&] {
    for (std::size_t c = 0; c < width.size(); ++c) os << (c ? "-+-" : "") << std::string(width[c], '-');
    os << '\n';
  };
  for (std::size_t r = 0; r < cells.size(); ++r) {
    for (std::size_t c = 0; c < cells[r].size(); ++c) {
      if (c) os << " | ";
      if (c == 0)
        os << std::left << std::setw(static_cast<int>(width[c])) << cells[r][c];
      else
        os << std::right << std::setw(static_cast<int>(width[c])) << cells[r][c];
    }
    os << '\n';
    if (r == 0) rule();
  }
  os << "(mean times in ms)\n";
  return os.str();
}

/// key=value records, one per op.
inline std::string render_bench_records(const BenchReport& r, bool mask_times = false) {
  std::ostringstream os;
  for (const auto& t : r.rows) {
    os << "bench group=" << r.group << " op=" << bench_op_name(t.op) << " samples=" << t.samples;
    if (mask_times)
      os << " mean_ms=* median_ms=*";
    else
      os << " mean_ms=" << std::setprecision(6) << t.mean_ms << " median_ms=" << t.median_ms;
    os << " element_bytes=" << std::setprecision(4) << r.element_bytes << '\n';
  }
  return os.str();
}

}  // namespace hybrid
