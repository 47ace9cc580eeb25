#pragma once

#include <algorithm>
#include <atomic>
#include <exception>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "dipaint/error.hpp"
#include "dipaint/image.hpp"
#include "dipaint/methods.hpp"
#include "dipaint/metrics.hpp"
#include "dipaint/report.hpp"

namespace dipaint {

struct SimulateOutcome {
  MethodSpec spec;
  std::optional<MethodResult> result;  // empty when the method failed
  std::optional<std::string> error;
};

struct SimulateResult {
  Image observed;  // clean image with occluded pixels zeroed
  std::vector<SimulateOutcome> outcomes;
  ReportTable table;  // "Original Image" first, then one row per method
};

// Occludes `clean` with `mask`, runs every method against it and scores
// each output against `clean`. A failing method yields an error row and
// does not stop the others. Methods are distributed over `workers`
// threads; results do not depend on the worker count.
inline SimulateResult simulate(const Image& clean, const Mask& mask,
                               const std::vector<MethodSpec>& methods,
                               double range = 255.0, const Image* style = nullptr,
                               int workers = 1) {
  if (methods.empty()) throw InvalidArgument("simulate needs at least one method");
  if (workers < 1) throw InvalidArgument("workers must be >= 1");
  require_same_size(clean, mask, "simulate");
  if (!(range > 0.0)) throw InvalidArgument("range must be positive");
  for (const auto& m : methods) {
    validate(m);
    check_inputs(m, clean, mask);
  }

  SimulateResult sim;
  sim.observed = apply_mask(clean, mask);
  sim.outcomes.resize(methods.size());
  std::atomic<std::size_t> next{0};
  auto work = [&] {
    for (std::size_t i = next++; i < methods.size(); i = next++) {
      SimulateOutcome& o = sim.outcomes[i];
      o.spec = methods[i];
      try {
        RunOptions opts;
        opts.reference = &clean;
        opts.style = style;
        o.result = run_method(methods[i], sim.observed, mask, opts);
      } catch (const std::exception& e) {
        o.error = e.what();
      }
    }
  };
  const int n = std::min<int>(workers, static_cast<int>(methods.size()));
  if (n == 1) {
    work();
  } else {
    std::vector<std::thread> pool;
    for (int t = 0; t < n; ++t) pool.emplace_back(work);
    for (auto& t : pool) t.join();
  }

  sim.table.rows.push_back({evaluate(clean, clean, kOriginalImageLabel, range), std::nullopt});
  for (const auto& o : sim.outcomes) {
    ReportRow row;
    row.metrics.label = table_label(o.spec);
    if (o.result) {
      row.metrics = evaluate(clean, o.result->image, row.metrics.label, range);
    } else {
      row.error = o.error;
    }
    sim.table.rows.push_back(std::move(row));
  }
  return sim;
}

}  // namespace dipaint
