#pragma once

#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "dipaint/error.hpp"
#include "dipaint/image.hpp"
#include "dipaint/neural/checkpoint.hpp"
#include "dipaint/neural/network.hpp"
#include "dipaint/neural/style.hpp"
#include "dipaint/neural/train.hpp"
#include "dipaint/patchmatch.hpp"
#include "dipaint/variational.hpp"

namespace dipaint {

enum class MethodKind { kTv, kNs, kPatch, kDip, kDipTv, kDipTvSkip, kDipst };

inline constexpr MethodKind kAllMethods[] = {
    MethodKind::kTv,     MethodKind::kNs,        MethodKind::kPatch, MethodKind::kDip,
    MethodKind::kDipTv,  MethodKind::kDipTvSkip, MethodKind::kDipst,
};

inline bool is_neural(MethodKind k) {
  return k == MethodKind::kDip || k == MethodKind::kDipTv ||
         k == MethodKind::kDipTvSkip || k == MethodKind::kDipst;
}

inline std::string method_name(MethodKind k) {
  switch (k) {
    case MethodKind::kTv: return "tv";
    case MethodKind::kNs: return "ns";
    case MethodKind::kPatch: return "patch";
    case MethodKind::kDip: return "dip";
    case MethodKind::kDipTv: return "dip-tv";
    case MethodKind::kDipTvSkip: return "dip-tv-skip";
    case MethodKind::kDipst: return "dipst";
  }
  return "?";
}

// One method plus every parameter bundle; only the bundle matching `kind`
// is read.
struct MethodSpec {
  MethodKind kind = MethodKind::kTv;
  TvSolveParams tv;
  NsSolveParams ns;
  PatchParams patch;
  nn::NetConfig net;
  nn::DipParams dip;
  nn::StyleParams style;
};

// Generator widths for a given depth: 16, 32, 64, then 64 for deeper levels.
inline nn::NetConfig default_net(int levels, bool skips) {
  if (levels < 1 || levels > 8) {
    throw InvalidArgument("levels must lie in [1, 8], got " + std::to_string(levels));
  }
  nn::NetConfig c;
  c.levels = levels;
  c.channels_per_level.clear();
  c.skip_channels_per_level.clear();
  for (int l = 0; l < levels; ++l) {
    c.channels_per_level.push_back(l == 0 ? 16 : l == 1 ? 32 : 64);
    c.skip_channels_per_level.push_back(skips ? 4 : 0);
  }
  return c;
}

inline MethodSpec default_spec(MethodKind kind) {
  MethodSpec s;
  s.kind = kind;
  const bool skips = kind == MethodKind::kDipTvSkip || kind == MethodKind::kDipst;
  s.net = default_net(4, skips);
  s.dip.use_tv = kind == MethodKind::kDipTv || kind == MethodKind::kDipTvSkip;
  return s;
}

// Accepts the canonical names plus patch3 / patch5 / patch7.
inline MethodSpec parse_method(std::string_view name) {
  for (MethodKind k : kAllMethods) {
    if (name == method_name(k)) return default_spec(k);
  }
  if (name == "patch3" || name == "patch5" || name == "patch7") {
    MethodSpec s = default_spec(MethodKind::kPatch);
    s.patch.patch_size = name.back() - '0';
    return s;
  }
  throw InvalidArgument("unknown method '" + std::string(name) +
                        "' (expected tv, ns, patch, patch3, patch5, patch7, dip, "
                        "dip-tv, dip-tv-skip or dipst)");
}

// Row label used in reports.
inline std::string table_label(const MethodSpec& s) {
  switch (s.kind) {
    case MethodKind::kTv: return "TV";
    case MethodKind::kNs: return "Navier-Stokes";
    case MethodKind::kPatch: {
      const std::string p = std::to_string(s.patch.patch_size);
      return "Patch " + p + "x" + p;
    }
    case MethodKind::kDip: return "DIP";
    case MethodKind::kDipTv: return "DIP - TV";
    case MethodKind::kDipTvSkip: return "DIP - TV + skip";
    case MethodKind::kDipst: return "DIPST";
  }
  return "?";
}

// File stem for a method's result image, e.g. "patch5", "dip-tv-skip".
inline std::string file_stem(const MethodSpec& s) {
  if (s.kind == MethodKind::kPatch) return "patch" + std::to_string(s.patch.patch_size);
  return method_name(s.kind);
}

namespace method_detail {

inline int as_count(std::string_view key, double v) {
  if (!std::isfinite(v) || v != std::floor(v) || std::abs(v) > 1e9) {
    throw InvalidArgument(std::string(key) + " must be an integer, got " +
                          std::to_string(v));
  }
  return static_cast<int>(v);
}

inline std::uint64_t as_seed(std::string_view key, double v) {
  if (!std::isfinite(v) || v != std::floor(v) || v < 0 || v >= 9007199254740992.0) {
    throw InvalidArgument(std::string(key) + " must be a non-negative integer below 2^53");
  }
  return static_cast<std::uint64_t>(v);
}

inline std::string normalize_key(std::string_view key) {
  std::string k(key);
  for (char& c : k) {
    if (c == '_') c = '-';
  }
  return k;
}

}  // namespace method_detail

// Parameter names accepted by set_param for a method kind. The CLI exposes
// each as --name, the service accepts them as JSON keys.
inline std::vector<std::string> param_names(MethodKind k) {
  switch (k) {
    case MethodKind::kTv: return {"lambda", "step", "iterations", "epsilon"};
    case MethodKind::kNs:
      return {"transport-steps", "diffusion-interval", "diffusion-steps", "dt"};
    case MethodKind::kPatch:
      return {"patch-size", "pm-iterations", "em-iterations", "pyramid-levels", "seed"};
    default: break;
  }
  std::vector<std::string> names{"learning-rate", "iterations", "seed", "log-interval",
                                 "levels", "early-stop-window",
                                 "early-stop-min-improvement"};
  if (k == MethodKind::kDipTv || k == MethodKind::kDipTvSkip) {
    names.insert(names.end(), {"lambda", "epsilon"});
  }
  if (k == MethodKind::kDipst) names.insert(names.end(), {"alpha", "beta", "feature-seed"});
  return names;
}

// Sets one named numeric parameter; underscores and hyphens are
// interchangeable. Unknown names throw InvalidArgument.
inline void set_param(MethodSpec& s, std::string_view raw_key, double v) {
  using method_detail::as_count;
  using method_detail::as_seed;
  const std::string key = method_detail::normalize_key(raw_key);
  auto unknown = [&] {
    return InvalidArgument("parameter '" + key + "' does not apply to method " +
                           method_name(s.kind));
  };
  switch (s.kind) {
    case MethodKind::kTv:
      if (key == "lambda") s.tv.lambda = v;
      else if (key == "step") s.tv.step = v;
      else if (key == "iterations") s.tv.iterations = as_count(key, v);
      else if (key == "epsilon") s.tv.epsilon = v;
      else throw unknown();
      return;
    case MethodKind::kNs:
      if (key == "transport-steps") s.ns.transport_steps = as_count(key, v);
      else if (key == "diffusion-interval") s.ns.diffusion_interval = as_count(key, v);
      else if (key == "diffusion-steps") s.ns.diffusion_steps = as_count(key, v);
      else if (key == "dt") s.ns.dt = v;
      else throw unknown();
      return;
    case MethodKind::kPatch:
      if (key == "patch-size") s.patch.patch_size = as_count(key, v);
      else if (key == "pm-iterations") s.patch.pm_iterations = as_count(key, v);
      else if (key == "em-iterations") s.patch.em_iterations = as_count(key, v);
      else if (key == "pyramid-levels") s.patch.pyramid_levels = as_count(key, v);
      else if (key == "seed") s.patch.rng_seed = as_seed(key, v);
      else throw unknown();
      return;
    default: break;
  }
  const bool tv = s.kind == MethodKind::kDipTv || s.kind == MethodKind::kDipTvSkip;
  const bool st = s.kind == MethodKind::kDipst;
  if (key == "learning-rate") s.dip.learning_rate = v;
  else if (key == "iterations") s.dip.iterations = as_count(key, v);
  else if (key == "seed") s.dip.rng_seed = as_seed(key, v);
  else if (key == "log-interval") s.dip.log_interval = as_count(key, v);
  else if (key == "levels") {
    const bool skips = s.net.has_skips();
    s.net = default_net(as_count(key, v), skips);
  } else if (key == "early-stop-window") {
    if (!s.dip.early_stop) s.dip.early_stop.emplace();
    s.dip.early_stop->window = as_count(key, v);
  } else if (key == "early-stop-min-improvement") {
    if (!s.dip.early_stop) s.dip.early_stop.emplace();
    s.dip.early_stop->min_improvement = v;
  } else if (tv && key == "lambda") s.dip.lambda = v;
  else if (tv && key == "epsilon") s.dip.tv_epsilon = v;
  else if (st && key == "alpha") s.style.alpha = v;
  else if (st && key == "beta") s.style.beta = v;
  else if (st && key == "feature-seed") s.style.feature_seed = as_seed(key, v);
  else throw unknown();
}

// Checks the active bundle without running anything.
inline void validate(const MethodSpec& s) {
  switch (s.kind) {
    case MethodKind::kTv: validate(s.tv); return;
    case MethodKind::kNs: validate(s.ns); return;
    case MethodKind::kPatch: validate(s.patch); return;
    default: break;
  }
  nn::validate(s.net);
  nn::validate(s.dip);
  if (!(s.dip.tv_epsilon > 0.0)) throw InvalidArgument("epsilon must be positive");
  if (s.kind == MethodKind::kDipst && (s.style.alpha < 0.0 || s.style.beta < 0.0)) {
    throw InvalidArgument("alpha and beta must be non-negative");
  }
}

// Shape checks that depend on the image; InvalidArgument on failure.
inline void check_inputs(const MethodSpec& s, const Image& observed, const Mask& mask) {
  require_same_size(observed, mask, method_name(s.kind).c_str());
  if (is_neural(s.kind)) {
    const int f = 1 << s.net.levels;
    if (observed.height % f != 0 || observed.width % f != 0) {
      throw InvalidArgument("image " + shape_string(observed.height, observed.width) +
                            " must be divisible by 2^levels = " + std::to_string(f) +
                            " for " + method_name(s.kind) + "; use --resize");
    }
  }
}

struct RunOptions {
  const Image* reference = nullptr;
  // Style image for dipst; the observed image is used when null.
  const Image* style = nullptr;
  nn::ProgressCallback progress;
};

struct MethodResult {
  Image image;
  std::optional<nn::TrainHistory> history;
  std::optional<nn::Checkpoint> network;
  bool cancelled = false;
};

// Runs one method on `observed` (occluded pixels may hold anything).
inline MethodResult run_method(const MethodSpec& spec, const Image& observed,
                               const Mask& mask, const RunOptions& opts = {}) {
  validate(spec);
  check_inputs(spec, observed, mask);
  MethodResult out;
  switch (spec.kind) {
    case MethodKind::kTv: out.image = tv_inpaint(observed, mask, spec.tv); return out;
    case MethodKind::kNs: out.image = ns_inpaint(observed, mask, spec.ns); return out;
    case MethodKind::kPatch: out.image = patch_inpaint(observed, mask, spec.patch); return out;
    default: break;
  }
  nn::NetConfig net = spec.net;
  net.out_channels = observed.channels;
  nn::DipResult r;
  if (spec.kind == MethodKind::kDipst) {
    const Image& style = opts.style ? *opts.style : observed;
    r = nn::dipst_train(observed, mask, style, net, spec.dip, spec.style, opts.reference,
                        opts.progress);
  } else {
    r = nn::dip_train(observed, mask, net, spec.dip, opts.reference, opts.progress);
  }
  out.image = std::move(r.image);
  out.history = std::move(r.history);
  out.network = nn::Checkpoint{net, std::move(r.params)};
  out.cancelled = r.cancelled;
  return out;
}

}  // namespace dipaint
