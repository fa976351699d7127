// Drives the installed CLI end to end through std::system. argv[1] is the
// path to the evrf binary.
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>

namespace fs = std::filesystem;

namespace {

std::string g_cli;
int g_failures = 0;

#define CLI_CHECK(cond)                                                          \
  do {                                                                           \
    if (!(cond)) {                                                               \
      std::cerr << "FAILED at " << __LINE__ << ": " #cond "\n";                  \
      ++g_failures;                                                              \
    }                                                                            \
  } while (0)

int run(const std::string& args) {
  const std::string cmd = g_cli + " " + args + " >/dev/null 2>&1";
  int status = std::system(cmd.c_str());
  return WEXITSTATUS(status);
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

int main(int argc, char** argv) {
  if (argc < 2) {
    std::cerr << "usage: evrf_cli_tests <path-to-evrf>\n";
    return 2;
  }
  g_cli = argv[1];
  fs::path work = fs::temp_directory_path() / "evrf_cli_test";
  fs::remove_all(work);
  fs::create_directories(work);

  // Config for a tiny end-to-end run.
  std::ofstream(work / "run.cfg") << R"([scene]
preset = translating_sphere

[gen]
width = 16
height = 16
n_views = 2
n_frames = 4
supersample = 2
gt_samples = 24

[train]
total_iterations = 12
rays_per_iteration = 48
lr_warmup = 4
crop_iterations = 2
progressive_iterations = 4
halving_milestones =
checkpoint_every = 0
log_every = 1
chunk_rays = 16

[model]
deform_depth = 3
deform_width = 8
canonical_depth = 3
canonical_width = 8
x_freqs = 2
t_freqs = 2
d_freqs = 2
use_viewdirs = false
samples = 6
)";

  // usage errors exit 1
  CLI_CHECK(run("definitely-not-a-subcommand") == 1);
  CLI_CHECK(run("train") == 1);  // missing required --data

  // gen
  const std::string cfg = (work / "run.cfg").string();
  CLI_CHECK(run("--config " + cfg + " --out " + (work / "data").string() + " gen") == 0);
  CLI_CHECK(fs::exists(work / "data" / "views.json"));
  CLI_CHECK(fs::exists(work / "data" / "view_000.evd1"));

  // train twice with the same seed: identical loss logs
  CLI_CHECK(run("--config " + cfg + " --seed 7 --out " + (work / "runA").string() + " train --data " +
                (work / "data").string()) == 0);
  CLI_CHECK(run("--config " + cfg + " --seed 7 --out " + (work / "runB").string() + " train --data " +
                (work / "data").string()) == 0);
  CLI_CHECK(fs::exists(work / "runA" / "loss_log.csv"));
  CLI_CHECK(slurp(work / "runA" / "loss_log.csv") == slurp(work / "runB" / "loss_log.csv"));
  CLI_CHECK(slurp(work / "runA" / "loss_log.csv").find("iteration,lr,window_width,loss") == 0);
  CLI_CHECK(fs::exists(work / "runA" / "manifest.json"));

  // different seed: different trajectory
  CLI_CHECK(run("--config " + cfg + " --seed 8 --out " + (work / "runC").string() + " train --data " +
                (work / "data").string()) == 0);
  CLI_CHECK(slurp(work / "runA" / "loss_log.csv") != slurp(work / "runC" / "loss_log.csv"));

  // finetune from the trained checkpoint
  CLI_CHECK(run("--config " + cfg + " --seed 9 --out " + (work / "runFT").string() + " finetune --data " +
                (work / "data").string() + " --init " + (work / "runA" / "final.ckpt").string()) == 0);
  CLI_CHECK(fs::exists(work / "runFT" / "final.ckpt"));

  // render: one window -> png + npy, one intensity time -> pgm
  CLI_CHECK(run("--out " + (work / "render").string() + " render --ckpt " +
                (work / "runA" / "final.ckpt").string() + " --data " + (work / "data").string() +
                " --view 1 --window 0.40:0.45 --time 0.5") == 0);
  bool saw_png = false, saw_npy = false, saw_pgm = false;
  for (const auto& e : fs::directory_iterator(work / "render")) {
    if (e.path().extension() == ".png") saw_png = true;
    if (e.path().extension() == ".npy") saw_npy = true;
    if (e.path().extension() == ".pgm") saw_pgm = true;
  }
  CLI_CHECK(saw_png);
  CLI_CHECK(saw_npy);
  CLI_CHECK(saw_pgm);

  // eval over frame-aligned windows
  CLI_CHECK(run("--out " + (work / "eval").string() + " eval --ckpt " +
                (work / "runA" / "final.ckpt").string() + " --data " + (work / "data").string() +
                " --frame-windows") == 0);
  CLI_CHECK(fs::exists(work / "eval" / "report.json"));
  CLI_CHECK(fs::exists(work / "eval" / "report.csv"));

  // slice: halving twice turns [0,1] edges into quarter points
  CLI_CHECK(run("--out " + (work / "slices").string() + " slice --events " +
                (work / "data" / "view_000.evd1").string() + " --edges 0,1 --halve 2") == 0);
  const std::string meta = slurp(work / "slices" / "slices.json");
  CLI_CHECK(meta.find("0.25") != std::string::npos);
  CLI_CHECK(meta.find("0.75") != std::string::npos);
  CLI_CHECK(fs::exists(work / "slices" / "slice_003.evd1"));

  // data errors exit 2
  CLI_CHECK(run("slice --events " + (work / "data" / "views.json").string()) == 2);
  CLI_CHECK(run("--out " + (work / "x").string() + " render --ckpt /nonexistent.ckpt --data " +
                (work / "data").string() + " --view 0 --window 0:1") == 2);

  if (g_failures == 0) {
    std::cout << "cli tests passed\n";
    return 0;
  }
  std::cerr << g_failures << " cli test failures\n";
  return 1;
}
