#pragma once

#include <cstdio>
#include <exception>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "dipaint/error.hpp"
#include "dipaint/image.hpp"
#include "dipaint/masking.hpp"
#include "dipaint/methods.hpp"
#include "dipaint/metrics.hpp"
#include "dipaint/neural/checkpoint.hpp"
#include "dipaint/png_io.hpp"
#include "dipaint/report.hpp"
#include "dipaint/simulate.hpp"

namespace dipaint::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitFailure = 1;
inline constexpr int kExitUsage = 2;

// Hook for `serve`, set by the binary that links the service layer so this
// header stays free of HTTP dependencies.
struct ServeOptions {
  std::string host = "127.0.0.1";
  int port = 8080;
  int workers = 1;
  std::string data_dir = "data";
  std::string static_dir = "web/dist";
  std::size_t max_upload_bytes = 32u << 20;
};
using ServeFn = std::function<int(const ServeOptions&, std::ostream& out, std::ostream& err)>;

namespace detail {

inline std::vector<double> parse_numbers(const std::string& text, const char* what) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string tok;
  while (std::getline(ss, tok, ',')) {
    try {
      std::size_t used = 0;
      out.push_back(std::stod(tok, &used));
      if (used != tok.size()) throw std::invalid_argument(tok);
    } catch (const std::exception&) {
      throw InvalidArgument(std::string("bad number '") + tok + "' in " + what);
    }
  }
  return out;
}

inline SeedPoint parse_point(const std::string& text) {
  const auto v = parse_numbers(text, "--point");
  if (v.size() != 2 || v[0] != static_cast<int>(v[0]) || v[1] != static_cast<int>(v[1])) {
    throw InvalidArgument("--point expects ROW,COL, got '" + text + "'");
  }
  return {static_cast<int>(v[0]), static_cast<int>(v[1])};
}

inline Image load_resized(const std::string& path, int resize) {
  Image img = load_png(path);
  return resize > 0 ? resize_bilinear(img, resize, resize) : img;
}

inline Mask load_mask_resized(const std::string& path, int resize) {
  Mask m = load_mask(path);
  return resize > 0 ? resize_mask(m, resize, resize) : m;
}

inline void report_coverage(const Mask& m, std::ostream& out, std::ostream& err) {
  const std::size_t n = m.occluded_count();
  const std::size_t total = m.bits.size();
  char buf[128];
  std::snprintf(buf, sizeof(buf), "occluded %zu of %zu pixels (%.2f%%)\n", n, total,
                total ? 100.0 * static_cast<double>(n) / static_cast<double>(total) : 0.0);
  out << buf;
  if (n == 0) err << "warning: empty mask\n";
}

inline void write_history_csv(const std::filesystem::path& path,
                              const nn::TrainHistory& h) {
  std::ofstream f(path, std::ios::trunc);
  if (!f) throw IoError("cannot write " + path.string());
  f << "iteration,loss,ssim\n";
  char buf[128];
  for (const auto& e : h.entries) {
    if (e.ssim) {
      std::snprintf(buf, sizeof(buf), "%d,%.17g,%.17g\n", e.iteration, e.loss, *e.ssim);
    } else {
      std::snprintf(buf, sizeof(buf), "%d,%.17g,\n", e.iteration, e.loss);
    }
    f << buf;
  }
  if (!f) throw IoError("write failed for " + path.string());
}

// OUT.png -> OUT.history.csv
inline std::filesystem::path history_path(const std::filesystem::path& out) {
  std::filesystem::path p = out;
  p.replace_extension(".history.csv");
  return p;
}

inline void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream f(path, std::ios::trunc);
  if (!f) throw IoError("cannot write " + path.string());
  f << text;
  if (!f) throw IoError("write failed for " + path.string());
}

// Union of all method parameter names, each registered as --name.
inline std::vector<std::string> all_param_names() {
  std::vector<std::string> names;
  for (MethodKind k : kAllMethods) {
    for (const auto& n : param_names(k)) {
      if (std::find(names.begin(), names.end(), n) == names.end()) names.push_back(n);
    }
  }
  return names;
}

// "key=value" or "method.key=value".
struct ParamOverride {
  std::string method;
  std::string key;
  double value = 0.0;
};

inline ParamOverride parse_override(const std::string& text) {
  const auto eq = text.find('=');
  if (eq == std::string::npos) {
    throw InvalidArgument("--param expects [METHOD.]KEY=VALUE, got '" + text + "'");
  }
  ParamOverride p;
  std::string lhs = text.substr(0, eq);
  const auto dot = lhs.find('.');
  if (dot != std::string::npos) {
    p.method = lhs.substr(0, dot);
    lhs = lhs.substr(dot + 1);
  }
  p.key = lhs;
  const auto v = parse_numbers(text.substr(eq + 1), "--param");
  if (v.size() != 1) throw InvalidArgument("--param value must be a single number");
  p.value = v[0];
  return p;
}

inline bool accepts(const MethodSpec& s, const std::string& key) {
  const auto names = param_names(s.kind);
  return std::find(names.begin(), names.end(), method_detail::normalize_key(key)) !=
         names.end();
}

inline std::vector<MethodSpec> parse_method_list(const std::string& text) {
  std::vector<MethodSpec> out;
  std::stringstream ss(text);
  std::string tok;
  while (std::getline(ss, tok, ',')) {
    if (tok.empty()) continue;
    if (tok == "all") {
      for (MethodKind k : kAllMethods) out.push_back(default_spec(k));
    } else {
      out.push_back(parse_method(tok));
    }
  }
  if (out.empty()) throw InvalidArgument("no methods given");
  return out;
}

}  // namespace detail

struct MaskArgs {
  std::string image, out;
  std::string color;
  std::vector<std::string> points;
  double tolerance = 0.0;
  int dilate = 0;
  int resize = 0;
};

inline int cmd_mask_auto(const MaskArgs& a, std::ostream& out, std::ostream& err) {
  const Image img = detail::load_resized(a.image, a.resize);
  ToleranceSpec spec;
  spec.reference_color = detail::parse_numbers(a.color, "--color");
  spec.tolerance = a.tolerance;
  Mask m = dilate(mask_by_color(img, spec), a.dilate);
  save_mask(m, a.out);
  detail::report_coverage(m, out, err);
  return kExitOk;
}

inline int cmd_mask_grow(const MaskArgs& a, std::ostream& out, std::ostream& err) {
  const Image img = detail::load_resized(a.image, a.resize);
  std::vector<SeedPoint> seeds;
  for (const auto& p : a.points) seeds.push_back(detail::parse_point(p));
  Mask m = dilate(region_grow(img, seeds, a.tolerance), a.dilate);
  save_mask(m, a.out);
  detail::report_coverage(m, out, err);
  return kExitOk;
}

struct InpaintArgs {
  std::string method, image, mask, out;
  int resize = 0;
  std::string reference, style, checkpoint;
  std::map<std::string, double> params;
};

inline MethodSpec build_spec(const std::string& method,
                             const std::map<std::string, double>& params) {
  MethodSpec spec = parse_method(method);
  for (const auto& [k, v] : params) set_param(spec, k, v);
  validate(spec);
  return spec;
}

inline int cmd_inpaint(const InpaintArgs& a, std::ostream& out, std::ostream&) {
  const MethodSpec spec = build_spec(a.method, a.params);
  const Image img = detail::load_resized(a.image, a.resize);
  const Mask mask = detail::load_mask_resized(a.mask, a.resize);
  std::optional<Image> reference, style;
  if (!a.reference.empty()) reference = detail::load_resized(a.reference, a.resize);
  if (!a.style.empty()) {
    if (spec.kind != MethodKind::kDipst) throw InvalidArgument("--style only applies to dipst");
    style = detail::load_resized(a.style, a.resize);
  }
  if (!a.checkpoint.empty() && !is_neural(spec.kind)) {
    throw InvalidArgument("--checkpoint only applies to dip methods");
  }
  RunOptions opts;
  opts.reference = reference ? &*reference : nullptr;
  opts.style = style ? &*style : nullptr;
  const MethodResult r = run_method(spec, img, mask, opts);
  save_png(r.image, a.out);
  out << "wrote " << a.out << "\n";
  if (r.history && reference) {
    const auto hp = detail::history_path(a.out);
    detail::write_history_csv(hp, *r.history);
    out << "wrote " << hp.string() << "\n";
  }
  if (r.network && !a.checkpoint.empty()) {
    nn::save_checkpoint(a.checkpoint, r.network->config, r.network->params);
  }
  if (reference) out << format_table({{{evaluate(*reference, r.image, table_label(spec)), {}}}});
  return kExitOk;
}

struct SimulateArgs {
  std::string clean, mask, out_dir;
  std::string methods;
  double range = 255.0;
  int resize = 0;
  int jobs = 1;
  std::string style;
  std::optional<double> seed;
  std::vector<std::string> overrides;
};

inline int cmd_simulate(const SimulateArgs& a, std::ostream& out, std::ostream& err) {
  std::vector<MethodSpec> methods = detail::parse_method_list(a.methods);
  for (auto& m : methods) {
    if (a.seed && detail::accepts(m, "seed")) set_param(m, "seed", *a.seed);
  }
  for (const auto& text : a.overrides) {
    const auto o = detail::parse_override(text);
    bool used = false;
    for (auto& m : methods) {
      if (!o.method.empty() && o.method != method_name(m.kind) && o.method != file_stem(m)) {
        continue;
      }
      if (!detail::accepts(m, o.key)) {
        if (!o.method.empty()) set_param(m, o.key, o.value);  // throws a precise message
        continue;
      }
      set_param(m, o.key, o.value);
      used = true;
    }
    if (!used) throw InvalidArgument("--param " + text + " matches no selected method");
  }
  for (const auto& m : methods) validate(m);

  const Image clean = detail::load_resized(a.clean, a.resize);
  const Mask mask = detail::load_mask_resized(a.mask, a.resize);
  std::optional<Image> style;
  if (!a.style.empty()) style = detail::load_resized(a.style, a.resize);

  const std::filesystem::path dir(a.out_dir);
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw IoError("cannot create " + dir.string() + ": " + ec.message());

  const SimulateResult sim =
      simulate(clean, mask, methods, a.range, style ? &*style : nullptr, a.jobs);
  save_png(sim.observed, dir / "masked.png");
  bool failed = false;
  for (const auto& o : sim.outcomes) {
    if (!o.result) {
      failed = true;
      err << "method " << table_label(o.spec) << " failed: " << *o.error << "\n";
      continue;
    }
    save_png(o.result->image, dir / (file_stem(o.spec) + ".png"));
    if (o.result->history) {
      detail::write_history_csv(dir / (file_stem(o.spec) + ".history.csv"), *o.result->history);
    }
  }
  const std::string table = format_table(sim.table);
  detail::write_text(dir / "report.txt", table);
  detail::write_text(dir / "report.jsonl", format_jsonl(sim.table));
  out << table;
  return failed ? kExitFailure : kExitOk;
}

struct EvalArgs {
  std::string reference, test;
  double range = 255.0;
  bool json = false;
};

inline int cmd_eval(const EvalArgs& a, std::ostream& out, std::ostream&) {
  const Image ref = load_png(a.reference);
  const Image test = load_png(a.test);
  const MetricRow row =
      evaluate(ref, test, std::filesystem::path(a.test).filename().string(), a.range);
  if (a.json) {
    out << to_json(row).dump() << "\n";
  } else {
    out << format_table({{{row, std::nullopt}}});
  }
  return kExitOk;
}

// Parses argv and runs one command. Exit codes: 0 success, 1 I/O or solver
// failure, 2 invalid arguments.
inline int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err,
                   const ServeFn& serve = {}) {
  CLI::App app{"dipaint: image inpainting toolkit", "dipaint"};
  app.require_subcommand(1);

  // mask
  MaskArgs mask_args;
  auto* mask_cmd = app.add_subcommand("mask", "build a mask PNG (0 = occluded, 255 = reliable)");
  mask_cmd->require_subcommand(1);
  auto* mask_auto = mask_cmd->add_subcommand("auto", "occlude every pixel near a colour");
  auto* mask_grow = mask_cmd->add_subcommand("grow", "occlude regions grown from seed points");
  for (auto* sub : {mask_auto, mask_grow}) {
    sub->add_option("image", mask_args.image, "input image PNG")->required();
    sub->add_option("out", mask_args.out, "output mask PNG")->required();
    sub->add_option("--tolerance", mask_args.tolerance,
                    "mean absolute channel distance, in [0,1]");
    sub->add_option("--dilate", mask_args.dilate, "grow the occluded set by this radius");
    sub->add_option("--resize", mask_args.resize, "resize the image to NxN first");
  }
  mask_auto->add_option("--color", mask_args.color, "reference colour, e.g. 1,0,0")
      ->required();
  mask_grow->add_option("--point", mask_args.points, "seed ROW,COL (repeatable)")
      ->required();

  // inpaint
  InpaintArgs inp;
  std::map<std::string, double> flag_values;
  auto* inpaint = app.add_subcommand("inpaint", "restore the occluded pixels of an image");
  inpaint->add_option("method", inp.method,
                      "tv, ns, patch, patch3, patch5, patch7, dip, dip-tv, dip-tv-skip, dipst")
      ->required();
  inpaint->add_option("image", inp.image, "observed image PNG")->required();
  inpaint->add_option("mask", inp.mask, "mask PNG")->required();
  inpaint->add_option("out", inp.out, "output PNG")->required();
  inpaint->add_option("--resize", inp.resize, "resize inputs to NxN first");
  inpaint->add_option("--reference", inp.reference,
                      "ground truth; dip methods then write OUT.history.csv");
  inpaint->add_option("--style", inp.style, "style image for dipst (default: the input)");
  inpaint->add_option("--checkpoint", inp.checkpoint, "save the trained network (dip methods)");
  std::map<std::string, CLI::Option*> param_opts;
  for (const auto& name : detail::all_param_names()) {
    param_opts[name] = inpaint->add_option("--" + name, flag_values[name], "method parameter");
  }

  // simulate
  SimulateArgs sim;
  auto* simulate_cmd =
      app.add_subcommand("simulate", "occlude a clean image, run methods, report metrics");
  simulate_cmd->add_option("clean", sim.clean, "clean image PNG")->required();
  simulate_cmd->add_option("mask", sim.mask, "mask PNG")->required();
  simulate_cmd->add_option("out_dir", sim.out_dir, "output directory")->required();
  simulate_cmd->add_option("--methods", sim.methods,
                           "comma-separated methods, or 'all'")->required();
  simulate_cmd->add_option("--range", sim.range, "dynamic range L for the metrics");
  simulate_cmd->add_option("--resize", sim.resize, "resize inputs to NxN first");
  simulate_cmd->add_option("--jobs", sim.jobs, "methods run in parallel");
  simulate_cmd->add_option("--style", sim.style, "style image for dipst");
  simulate_cmd->add_option("--seed", sim.seed, "seed for every randomized method");
  simulate_cmd->add_option("--param", sim.overrides, "[METHOD.]KEY=VALUE (repeatable)");

  // eval
  EvalArgs ev;
  auto* eval = app.add_subcommand("eval", "score a test image against a reference");
  eval->add_option("reference", ev.reference, "reference PNG")->required();
  eval->add_option("test", ev.test, "test PNG")->required();
  eval->add_option("--range", ev.range, "dynamic range L");
  eval->add_flag("--json", ev.json, "print the row as JSON");

  // serve
  ServeOptions so;
  auto* serve_cmd = app.add_subcommand("serve", "run the HTTP service");
  serve_cmd->add_option("--host", so.host, "bind address");
  serve_cmd->add_option("--port", so.port, "TCP port");
  serve_cmd->add_option("--workers", so.workers, "concurrent jobs (default 1)");
  serve_cmd->add_option("--data-dir", so.data_dir, "storage directory");
  serve_cmd->add_option("--static-dir", so.static_dir, "web UI assets served at /");
  serve_cmd->add_option("--max-upload-bytes", so.max_upload_bytes, "upload size limit");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp& e) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  }

  try {
    if (mask_auto->parsed()) return cmd_mask_auto(mask_args, out, err);
    if (mask_grow->parsed()) return cmd_mask_grow(mask_args, out, err);
    if (inpaint->parsed()) {
      for (const auto& [name, opt] : param_opts) {
        if (opt->count() > 0) inp.params[name] = flag_values[name];
      }
      return cmd_inpaint(inp, out, err);
    }
    if (simulate_cmd->parsed()) return cmd_simulate(sim, out, err);
    if (eval->parsed()) return cmd_eval(ev, out, err);
    if (serve_cmd->parsed()) {
      if (so.workers < 1) throw InvalidArgument("--workers must be >= 1");
      if (so.port < 0 || so.port > 65535) throw InvalidArgument("--port out of range");
      if (!serve) {
        err << "error: this build has no service support\n";
        return kExitFailure;
      }
      return serve(so, out, err);
    }
  } catch (const InvalidArgument& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitFailure;
  }
  return kExitUsage;
}

}  // namespace dipaint::cli
