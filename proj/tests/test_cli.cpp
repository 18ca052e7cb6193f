#include "doctest.h"

#include "cinetrack/case_io.hpp"
#include "cinetrack/metrics.hpp"
#include "cinetrack/report_io.hpp"
#include "oracles.hpp"

using namespace cinetrack;
namespace fs = std::filesystem;

namespace {

const std::string kCli = CINETRACK_CLI_PATH;

oracle::CommandResult cli(const std::string &args) { return oracle::run(kCli + " " + args); }

// 96x96, 6 frames: quick to track with either profile
std::string small_synth(const fs::path &out, int frames = 6) {
  return "synth --rows 96 --cols 96 --frames " + std::to_string(frames) +
         " --amplitude 6 --period 8 --out " + out.string();
}

} // namespace

TEST_CASE("usage errors exit 2") {
  CHECK(cli("").exit_code == 2);
  CHECK(cli("frobnicate").exit_code == 2);
  CHECK(cli("synth --frames notanumber").exit_code == 2);
  CHECK(cli("--help").exit_code == 0);
  CHECK(cli("track --help").exit_code == 0);
}

TEST_CASE("synth") {
  const auto dir = oracle::scratch_dir("cli_synth");
  const auto r = cli(small_synth(dir / "two", 2) + " --case-id tiny");
  CHECK(r.exit_code == 0);
  CHECK(r.output.find("\"frames\": 2") != std::string::npos); // resolved config
  const auto c = read_case(dir / "two");
  CHECK(c.sequence.frames.size() == 2);
  CHECK(c.sequence.case_id == "tiny");
  REQUIRE(c.gt_masks);
  CHECK(c.gt_masks->size() == 2);

  const auto bad = cli("synth --amplitude 500 --out " + (dir / "bad").string());
  CHECK(bad.exit_code == 2);
  CHECK(bad.output.find("error:") != std::string::npos);
  CHECK_FALSE(fs::exists(dir / "bad"));

  // default output under the environment directory
  const auto env = oracle::run("CINETRACK_OUTPUT_DIR=" + dir.string() + " " + kCli +
                               " synth --rows 64 --cols 64 --frames 3 --amplitude 3 --case-id envcase");
  CHECK(env.exit_code == 0);
  CHECK(is_case_dir(dir / "envcase"));
  fs::remove_all(dir);
}

TEST_CASE("track") {
  const auto dir = oracle::scratch_dir("cli_track");
  REQUIRE(cli(small_synth(dir / "case")).exit_code == 0);
  const auto c = read_case(dir / "case");

  const auto st = cli("track " + (dir / "case").string() + " --strategy static --out " +
                      (dir / "static").string());
  CHECK(st.exit_code == 0);
  const auto stored = read_tracking_result(dir / "static");
  REQUIRE(stored.result.masks.size() == 6);
  for (const auto &m : stored.result.masks)
    CHECK(m == c.sequence.first_mask);
  CHECK_FALSE(stored.meta.config);

  const auto rt = cli("track " + (dir / "case").string() +
                      " --profile realtime --budget-ms 100000 --save-transforms --out " +
                      (dir / "rt").string());
  CHECK(rt.exit_code == 0);
  CHECK(rt.output.find("\"samples_per_iteration\": 250") != std::string::npos);
  CHECK(fs::exists(dir / "rt" / "transforms" / "frame_0005.json"));
  const auto tj = read_json(dir / "rt" / "transforms" / "frame_0003.json");
  CHECK(bspline_from_json(tj["transform"]).parameter_count() > 0);

  // overrides reach the stored config
  CHECK(cli("track " + (dir / "case").string() +
            " --profile realtime --iterations 7 --metric ncc --out " + (dir / "ov").string())
            .exit_code == 0);
  const auto ov = read_tracking_result(dir / "ov");
  REQUIRE(ov.meta.config);
  CHECK(ov.meta.config->iterations_per_level == 7);
  CHECK(ov.meta.config->metric == MetricKind::ncc);

  // a budget no registration can meet: complete output, exit 3
  const auto over = cli("track " + (dir / "case").string() + " --budget-ms 0.01 --out " +
                        (dir / "over").string());
  CHECK(over.exit_code == 3);
  CHECK(read_tracking_result(dir / "over").result.masks.size() == 6);

  CHECK(cli("track " + (dir / "nowhere").string()).exit_code == 2);
  CHECK(cli("track " + (dir / "case").string() + " --strategy optical_flow").exit_code == 2);
  CHECK(cli("track " + (dir / "case").string() + " --iterations 0").exit_code == 2);
  fs::remove_all(dir);
}

TEST_CASE("eval") {
  const auto dir = oracle::scratch_dir("cli_eval");
  REQUIRE(cli(small_synth(dir / "case")).exit_code == 0);
  REQUIRE(cli("track " + (dir / "case").string() + " --strategy static --out " +
              (dir / "static").string())
              .exit_code == 0);

  const auto same = cli("eval " + (dir / "static").string() + " " + (dir / "static").string() +
                        " --out " + (dir / "self").string());
  CHECK(same.exit_code == 0);
  CHECK(same.output.find("DSC 1.0000") != std::string::npos);
  CHECK(read_metrics_json(dir / "self" / "metrics.json").dsc.mean == 1.0);

  CHECK(cli("eval " + (dir / "static").string() + " " + (dir / "missing").string()).exit_code == 2);

  // hand-built two-frame case against the oracle
  const Geometry g(12, 12);
  auto box = [&](int r0, int c0, int h, int w) {
    return Mask2D::generate(g, [=](Eigen::Index r, Eigen::Index c) {
      return r >= r0 && r < r0 + h && c >= c0 && c < c0 + w;
    });
  };
  CineSequence seq;
  seq.frames = {Image2Dd(g, 0.0), Image2Dd(g, 1.0)};
  seq.first_mask = box(2, 2, 4, 4);
  seq.case_id = "hand";
  const std::vector<Mask2D> gt = {seq.first_mask, box(3, 4, 4, 5)};
  write_case(dir / "hand", CaseData{seq, gt, std::nullopt});
  TrackingResult pred;
  pred.masks = {seq.first_mask, box(2, 2, 4, 4)};
  pred.per_frame_ms = {0.0, 0.0};
  write_tracking_result(dir / "hand_pred", pred, ResultMeta{"hand", std::nullopt});
  REQUIRE(cli("eval " + (dir / "hand_pred").string() + " " + (dir / "hand").string() + " --out " +
              (dir / "hand_eval").string())
              .exit_code == 0);
  const auto rep = read_metrics_json(dir / "hand_eval" / "metrics.json");
  REQUIRE(rep.frames.size() == 1);
  const auto want = oracle::surface(pred.masks[1], gt[1]);
  CHECK(rep.frames[0].dsc == doctest::Approx(oracle::dsc(pred.masks[1], gt[1])));
  CHECK(rep.frames[0].dsc == doctest::Approx(2.0 * 6 / (16 + 20)));
  CHECK(rep.frames[0].hd_mm == doctest::Approx(want.hd));
  CHECK(rep.frames[0].hd95_mm == doctest::Approx(want.hd95));
  CHECK(rep.frames[0].asd_mm == doctest::Approx(want.asd));
  CHECK(rep.frames[0].cd_mm ==
        doctest::Approx((oracle::centroid(pred.masks[1]) - oracle::centroid(gt[1])).norm()));
  const auto rows = read_metrics_csv(dir / "hand_eval" / "metrics.csv");
  REQUIRE(rows.size() == 1);
  CHECK(rows[0].frames[0].hd95_mm == rep.frames[0].hd95_mm);

  // frame-count mismatch
  CHECK(cli("eval " + (dir / "static").string() + " " + (dir / "hand").string()).exit_code == 2);

  // multi-case layout matched by name
  fs::create_directories(dir / "preds");
  fs::create_directories(dir / "gts");
  fs::copy(dir / "static", dir / "preds" / "a", fs::copy_options::recursive);
  fs::copy(dir / "case", dir / "gts" / "a", fs::copy_options::recursive);
  fs::copy(dir / "hand_pred", dir / "preds" / "b", fs::copy_options::recursive);
  fs::copy(dir / "hand", dir / "gts" / "b", fs::copy_options::recursive);
  const auto multi = cli("eval " + (dir / "preds").string() + " " + (dir / "gts").string() +
                         " --out " + (dir / "multi").string());
  CHECK(multi.exit_code == 0);
  CHECK(read_metrics_csv(dir / "multi" / "metrics.csv").size() == 2);
  CHECK(read_json(dir / "multi" / "metrics.json")["reports"].size() == 2);
  fs::remove_all(dir);
}

TEST_CASE("bench") {
  const auto dir = oracle::scratch_dir("cli_bench");
  REQUIRE(cli(small_synth(dir / "case")).exit_code == 0);
  const auto two = cli("bench " + (dir / "case").string() + " --out " + (dir / "b2").string());
  CHECK(two.exit_code == 0);
  const auto csv = oracle::read_file(dir / "b2" / "bench.csv");
  CHECK(csv.rfind("method,DSC,HD,ASD,CD,total_ms\n", 0) == 0);
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 3);
  const auto j = read_json(dir / "b2" / "bench.json");
  REQUIRE(j["rows"].size() == 2);
  CHECK(j["rows"][0]["method"] == "static");
  CHECK(j["rows"][1]["report"]["aggregates"]["dsc"]["mean"].get<double>() >
        j["rows"][0]["report"]["aggregates"]["dsc"]["mean"].get<double>());
  CHECK(oracle::read_file(dir / "b2" / "bench.txt").find("register_to_first/quality") !=
        std::string::npos);

  const auto one = cli("bench " + (dir / "case").string() +
                       " --strategies register_to_first --profiles realtime --out " +
                       (dir / "b1").string());
  CHECK(one.exit_code == 0);
  CHECK(read_json(dir / "b1" / "bench.json")["rows"].size() == 1);

  CHECK(cli("bench " + (dir / "case").string() + " --profiles turbo").exit_code == 2);
  fs::remove_all(dir);
}
