#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#ifndef XDEFCTL_PATH
#error "XDEFCTL_PATH must point at the CLI binary"
#endif

namespace fs = std::filesystem;

namespace {

int run(const std::string& args) {
    std::string cmd = std::string(XDEFCTL_PATH) + " " + args + " >/dev/null 2>&1";
    int status = std::system(cmd.c_str());
    REQUIRE(status != -1);
    return WEXITSTATUS(status);
}

std::string slurp(const fs::path& p) {
    std::ifstream f(p, std::ios::binary);
    REQUIRE(f.good());
    std::ostringstream os;
    os << f.rdbuf();
    return os.str();
}

// settings small enough for a CI-speed train/evaluate round trip
const std::string kTiny =
    " --train.total_steps 512 --train.pretrain_episodes 4 --train.pretrain_epochs 1"
    " --ppo.rollout_steps 256 --sim.horizon 24 --explain.explain_every 8"
    " --train.eval_episodes 2";

struct TempDir {
    fs::path path;
    explicit TempDir(const char* tag) {
        path = fs::temp_directory_path() / (std::string("xdef_cli_") + tag);
        fs::remove_all(path);
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
    std::string str() const { return path.string(); }
};

}  // namespace

TEST_CASE("usage and config errors exit with code 2") {
    CHECK(run("") == 2);                                    // missing subcommand
    CHECK(run("train --config /nonexistent/config.json") == 2);
    CHECK(run("train --bogus") == 2);                       // not a dotted override
    CHECK(run("train --no.such.key 1") == 2);               // unknown config path
    CHECK(run("--version") == 0);
    CHECK(run("--help") == 0);
}

TEST_CASE("train, evaluate, explain and report round trip") {
    TempDir t1("train1"), t2("train2");

    REQUIRE(run("train --seed 3 --out " + t1.str() + kTiny) == 0);
    for (const char* f : {"model.ckpt", "config.json", "train.log", "manifest.json"})
        CHECK(fs::exists(t1.path / f));

    // the same master seed reproduces the checkpoint byte for byte
    REQUIRE(run("train --seed 3 --out " + t2.str() + kTiny) == 0);
    CHECK(slurp(t1.path / "model.ckpt") == slurp(t2.path / "model.ckpt"));

    std::string ckpt = (t1.path / "model.ckpt").string();

    // evaluation: explicit zero episodes is a config error
    TempDir e1("eval1"), e2("eval2");
    CHECK(run("evaluate --checkpoint " + ckpt + " --episodes 0 --out " + e1.str() + kTiny) == 2);
    // a missing checkpoint is a config error, not a crash
    CHECK(run("evaluate --checkpoint /nonexistent.ckpt --out " + e1.str() + kTiny) == 2);

    REQUIRE(run("evaluate --seed 3 --checkpoint " + ckpt + " --episodes 2 --out " + e1.str() +
                kTiny) == 0);
    for (const char* f : {"defense.csv", "responsiveness.csv", "explanation.csv"})
        CHECK(fs::exists(e1.path / f));

    // repeated single-worker evaluation reproduces every CSV byte for byte
    REQUIRE(run("evaluate --seed 3 --workers 1 --checkpoint " + ckpt + " --episodes 2 --out " +
                e2.str() + kTiny) == 0);
    for (const char* f : {"defense.csv", "responsiveness.csv", "explanation.csv"})
        CHECK(slurp(e1.path / f) == slurp(e2.path / f));

    // explanation dump: deterministic bytes, and a step past the episode fails
    TempDir x1("exp1"), x2("exp2");
    REQUIRE(run("explain --checkpoint " + ckpt + " --episode-seed 5 --step 3 --out " + x1.str() +
                kTiny) == 0);
    REQUIRE(run("explain --checkpoint " + ckpt + " --episode-seed 5 --step 3 --out " + x2.str() +
                kTiny) == 0);
    CHECK(slurp(x1.path / "explanation.txt") == slurp(x2.path / "explanation.txt"));
    CHECK(run("explain --checkpoint " + ckpt + " --episode-seed 5 --step 100000 --out " +
              x1.str() + kTiny) == 2);

    // report pretty-prints what evaluation wrote; an empty directory is an error
    CHECK(run("report --out " + e1.str()) == 0);
    TempDir empty("empty");
    CHECK(run("report --out " + empty.str()) == 2);
}
