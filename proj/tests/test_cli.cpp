#include <gtest/gtest.h>

#include <fstream>
#include <sstream>

#include "dipaint/cli/commands.hpp"
#include "dipaint/png_io.hpp"
#include "test_support.hpp"

using namespace dipaint;
using namespace testing_support;

namespace {

struct CliRun {
  int code;
  std::string out;
  std::string err;
};

CliRun invoke(std::vector<std::string> args, const cli::ServeFn& serve = {}) {
  args.insert(args.begin(), "dipaint");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  const int code = cli::run_cli(static_cast<int>(argv.size()), argv.data(), out, err, serve);
  return {code, out.str(), err.str()};
}

std::string read_text(const std::string& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

class CliTest : public ::testing::Test {
 protected:
  void SetUp() override {
    clean = stripe_texture(3, 16, 16);
    mask = box_mask(16, 16, 6, 6, 4, 4);
    save_png(clean, dir / "clean.png");
    save_png(apply_mask(clean, mask), dir / "observed.png");
    save_mask(mask, dir / "mask.png");
  }
  TempDir dir{"cli"};
  Image clean;
  Mask mask;
};

}  // namespace

TEST_F(CliTest, MaskAutoMatchesLibrary) {
  Image img(3, 8, 8, 0.2);
  img.at(0, 2, 3) = 1.0;
  img.at(1, 2, 3) = 0.0;
  img.at(2, 2, 3) = 0.0;
  save_png(img, dir / "red.png");
  const CliRun r = invoke({"mask", "auto", dir / "red.png", dir / "m.png", "--color", "1,0,0",
                     "--tolerance", "0.1", "--dilate", "1"});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_NE(r.out.find("occluded 9 of 64 pixels"), std::string::npos) << r.out;
  const Mask want = dilate(mask_by_color(load_png(dir / "red.png"), {{1, 0, 0}, 0.1}), 1);
  EXPECT_EQ(load_mask(dir / "m.png"), want);
}

TEST_F(CliTest, MaskGrowAndEmptyWarning) {
  const CliRun r = invoke({"mask", "grow", dir / "clean.png", dir / "g.png", "--point", "0,0",
                     "--tolerance", "0"});
  ASSERT_EQ(r.code, 0) << r.err;
  const Image img = load_png(dir / "clean.png");
  EXPECT_EQ(load_mask(dir / "g.png"), region_grow(img, std::vector<SeedPoint>{{0, 0}}, 0.0));

  const CliRun e = invoke({"mask", "auto", dir / "clean.png", dir / "e.png", "--color", "0.5,0.1,0.9",
                     "--tolerance", "0"});
  EXPECT_EQ(e.code, 0);
  EXPECT_NE(e.err.find("warning: empty mask"), std::string::npos);
}

TEST_F(CliTest, MaskArgumentErrors) {
  EXPECT_EQ(invoke({"mask", "auto", dir / "clean.png", dir / "x.png", "--color", "1,0"}).code, 2);
  EXPECT_EQ(invoke({"mask", "grow", dir / "clean.png", dir / "x.png", "--point", "99,0"}).code, 2);
  EXPECT_EQ(invoke({"mask", "grow", dir / "clean.png", dir / "x.png", "--point", "a,b"}).code, 2);
  EXPECT_EQ(invoke({"mask", "grow", dir / "missing.png", dir / "x.png", "--point", "0,0"}).code, 1);
  EXPECT_EQ(invoke({"mask", "grow", dir / "clean.png", dir / "x.png"}).code, 2);
}

TEST_F(CliTest, InpaintBytesMatchLibrary) {
  const Image observed = load_png(dir / "observed.png");
  const Mask m = load_mask(dir / "mask.png");
  for (const std::string method : {"tv", "ns", "patch3", "dip", "dipst"}) {
    std::vector<std::string> args = {"inpaint", method, dir / "observed.png", dir / "mask.png",
                                     dir / (method + ".png")};
    MethodSpec spec = parse_method(method);
    if (is_neural(spec.kind)) {
      args.insert(args.end(), {"--levels", "2", "--iterations", "6"});
      set_param(spec, "levels", 2);
      set_param(spec, "iterations", 6);
    } else if (method == "tv") {
      args.insert(args.end(), {"--iterations", "40"});
      set_param(spec, "iterations", 40);
    }
    const CliRun r = invoke(args);
    ASSERT_EQ(r.code, 0) << method << ": " << r.err;
    const MethodResult lib = run_method(spec, observed, m);
    EXPECT_EQ(read_bytes(dir / (method + ".png")), encode_png(lib.image)) << method;
  }
}

TEST_F(CliTest, InpaintReferenceWritesHistoryAndTable) {
  const CliRun r = invoke({"inpaint", "dip-tv", dir / "observed.png", dir / "mask.png",
                     dir / "out.png", "--reference", dir / "clean.png", "--levels", "2",
                     "--iterations", "12", "--log-interval", "4", "--checkpoint",
                     dir / "net.bin"});
  ASSERT_EQ(r.code, 0) << r.err;
  const std::string csv = read_text(dir / "out.history.csv");
  EXPECT_EQ(csv.rfind("iteration,loss,ssim\n4,", 0), 0u) << csv;
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 4);
  EXPECT_NE(r.out.find("DIP - TV"), std::string::npos);
  EXPECT_NE(r.out.find("Model"), std::string::npos);
  const auto ck = nn::load_checkpoint(dir / "net.bin");
  EXPECT_EQ(ck.config.levels, 2);
}

TEST_F(CliTest, InpaintErrors) {
  const std::string obs = dir / "observed.png";
  const std::string msk = dir / "mask.png";
  const std::string out = dir / "o.png";
  EXPECT_EQ(invoke({"inpaint", "nope", obs, msk, out}).code, 2);
  EXPECT_EQ(invoke({"inpaint", "tv", obs, msk, out, "--alpha", "1"}).code, 2);
  EXPECT_EQ(invoke({"inpaint", "tv", obs, msk, out, "--iterations", "0"}).code, 2);
  EXPECT_EQ(invoke({"inpaint", "tv", obs, msk, out, "--style", obs}).code, 2);
  EXPECT_EQ(invoke({"inpaint", "ns", obs, msk, out, "--checkpoint", dir / "c.bin"}).code, 2);
  EXPECT_EQ(invoke({"inpaint", "tv", obs, dir / "missing.png", out}).code, 1);
  // 16 is not divisible by 2^5.
  const CliRun r = invoke({"inpaint", "dip", obs, msk, out, "--levels", "5"});
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.err.find("--resize"), std::string::npos);
  // Resizing to a divisible size makes it valid.
  EXPECT_EQ(invoke({"inpaint", "dip", obs, msk, out, "--levels", "5", "--resize", "64",
                 "--iterations", "1"})
                .code,
            0);
  EXPECT_EQ(load_png(out).height, 64);
}

TEST_F(CliTest, SimulateWritesArtifacts) {
  const std::string out = dir / "sim";
  const CliRun r = invoke({"simulate", dir / "clean.png", dir / "mask.png", out, "--methods",
                     "tv,patch3,dip", "--param", "levels=2", "--param", "dip.iterations=5",
                     "--param", "tv.iterations=30", "--seed", "4"});
  ASSERT_EQ(r.code, 0) << r.err;
  for (const char* f : {"masked.png", "tv.png", "patch3.png", "dip.png", "dip.history.csv",
                        "report.txt", "report.jsonl"}) {
    EXPECT_TRUE(std::filesystem::exists(std::filesystem::path(out) / f)) << f;
  }
  EXPECT_EQ(read_text(out + "/report.txt"), r.out);
  const auto first = r.out.find("Original Image");
  EXPECT_NE(first, std::string::npos);
  EXPECT_LT(first, r.out.find("TV"));

  // Same as the library on the same inputs.
  std::vector<MethodSpec> methods = {parse_method("tv"), parse_method("patch3"),
                                     parse_method("dip")};
  set_param(methods[0], "iterations", 30);
  set_param(methods[1], "seed", 4);
  set_param(methods[2], "levels", 2);
  set_param(methods[2], "iterations", 5);
  set_param(methods[2], "seed", 4);
  const SimulateResult lib =
      simulate(load_png(dir / "clean.png"), load_mask(dir / "mask.png"), methods);
  EXPECT_EQ(read_text(out + "/report.jsonl"), format_jsonl(lib.table));
  EXPECT_EQ(read_bytes(out + "/dip.png"), encode_png(lib.outcomes[2].result->image));
  EXPECT_EQ(read_bytes(out + "/masked.png"), encode_png(lib.observed));
}

TEST_F(CliTest, SimulateParamErrors) {
  const std::string c = dir / "clean.png";
  const std::string m = dir / "mask.png";
  const std::string o = dir / "s";
  EXPECT_EQ(invoke({"simulate", c, m, o, "--methods", "tv", "--param", "alpha=1"}).code, 2);
  EXPECT_EQ(invoke({"simulate", c, m, o, "--methods", "tv", "--param", "tv.alpha=1"}).code, 2);
  EXPECT_EQ(invoke({"simulate", c, m, o, "--methods", "tv", "--param", "iterations"}).code, 2);
  EXPECT_EQ(invoke({"simulate", c, m, o, "--methods", "bogus"}).code, 2);
  EXPECT_EQ(invoke({"simulate", c, m, o, "--methods", ","}).code, 2);
  EXPECT_EQ(invoke({"simulate", c, m, o, "--methods", "tv", "--range", "0"}).code, 2);
}

TEST_F(CliTest, SimulateFailureExitsOne) {
  // One reliable pixel anchors NS but leaves patch without any source patch.
  Mask nearly_full(16, 16, false);
  nearly_full.set_reliable(0, 0, true);
  save_mask(nearly_full, dir / "full.png");
  const CliRun r = invoke({"simulate", dir / "clean.png", dir / "full.png", dir / "f", "--methods",
                     "ns,patch3"});
  EXPECT_EQ(r.code, 1);
  EXPECT_NE(r.err.find("method Patch 3x3 failed"), std::string::npos) << r.err;
  EXPECT_NE(r.out.find("failed"), std::string::npos);
  EXPECT_TRUE(std::filesystem::exists(dir / "f/ns.png"));
}

TEST_F(CliTest, EvalTableAndJson) {
  const CliRun self = invoke({"eval", dir / "clean.png", dir / "clean.png", "--json"});
  ASSERT_EQ(self.code, 0) << self.err;
  const auto j = nlohmann::json::parse(self.out);
  EXPECT_EQ(j["ssim"], 1.0);
  EXPECT_EQ(j["mse"], 0.0);
  EXPECT_EQ(j["psnr"], "inf");
  EXPECT_EQ(j["label"], "clean.png");

  const CliRun t = invoke({"eval", dir / "clean.png", dir / "observed.png"});
  ASSERT_EQ(t.code, 0);
  const MetricRow lib =
      evaluate(load_png(dir / "clean.png"), load_png(dir / "observed.png"), "observed.png");
  EXPECT_EQ(t.out, format_table({{{lib, std::nullopt}}}));

  save_png(Image(3, 8, 8), dir / "small.png");
  EXPECT_EQ(invoke({"eval", dir / "clean.png", dir / "small.png"}).code, 2);
  EXPECT_EQ(invoke({"eval", dir / "clean.png", dir / "none.png"}).code, 1);
}

TEST(Cli, UsageAndServeDispatch) {
  EXPECT_EQ(invoke({}).code, 2);
  EXPECT_EQ(invoke({"frobnicate"}).code, 2);
  const CliRun help = invoke({"--help"});
  EXPECT_EQ(help.code, 0);
  EXPECT_NE(help.out.find("simulate"), std::string::npos);

  EXPECT_EQ(invoke({"serve"}).code, 1);  // no service wired in
  EXPECT_EQ(invoke({"serve", "--workers", "0"}).code, 2);
  cli::ServeOptions seen;
  const CliRun s = invoke({"serve", "--port", "0", "--workers", "3"},
                    [&](const cli::ServeOptions& o, std::ostream&, std::ostream&) {
                      seen = o;
                      return 0;
                    });
  EXPECT_EQ(s.code, 0);
  EXPECT_EQ(seen.workers, 3);
  EXPECT_EQ(seen.port, 0);
}
