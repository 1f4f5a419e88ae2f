#include <doctest.h>

#include "hlab/cli.hpp"
#include "hlab/error.hpp"

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>
#include <unistd.h>

using namespace hlab;
namespace fs = std::filesystem;

namespace {

struct Scratch {
    fs::path root;
    Scratch() : root(fs::temp_directory_path() / ("hlab_cli_" + std::to_string(::getpid()))) {
        fs::remove_all(root);
        fs::create_directories(root);
    }
    ~Scratch() { fs::remove_all(root); }
    fs::path file(const std::string& name, const std::string& body) const {
        fs::path p = root / name;
        std::ofstream(p) << body;
        return p;
    }
};

struct Run {
    int code;
    std::string out, err;
};

Run run(std::vector<std::string> args) {
    args.insert(args.begin(), "hlab");
    std::vector<const char*> argv;
    for (const auto& a : args) argv.push_back(a.c_str());
    std::ostringstream out, err;
    int code = run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
    return {code, out.str(), err.str()};
}

std::string slurp(const fs::path& p) {
    std::ifstream is(p);
    std::stringstream ss;
    ss << is.rdbuf();
    return ss.str();
}

nlohmann::json manifest(const fs::path& dir) { return nlohmann::json::parse(slurp(dir / "manifest.json")); }

/// Every regular file under dir other than the manifest, relative.
std::set<std::string> listing(const fs::path& dir) {
    std::set<std::string> s;
    for (const auto& e : fs::recursive_directory_iterator(dir))
        if (e.is_regular_file() && e.path().filename() != "manifest.json") s.insert(fs::relative(e.path(), dir).string());
    return s;
}

const char* kSmallScan = "c_list = -1.2   # one value\nseeds_per_axis = 3\ncontinuation = false\n";

}  // namespace

TEST_CASE("config parsing") {
    std::istringstream is("# header\n  X = 10 \nn=401\nadaptive=false\nc_list=-1, 0.5,2\ninitial = csv\nc=0.25 # trailing\n\n");
    auto cfg = parse_config(is);
    CHECK(cfg.X == 10.0);
    CHECK(cfg.n == 401);
    CHECK_FALSE(cfg.adaptive);
    CHECK(cfg.c_list == std::vector<double>{-1.0, 0.5, 2.0});
    CHECK(cfg.c_list_set);
    CHECK(cfg.initial == "csv");
    REQUIRE(cfg.c);
    CHECK(*cfg.c == 0.25);

    std::istringstream empty("c_list=\n");
    auto e = parse_config(empty);
    CHECK(e.c_list_set);
    CHECK(e.c_list.empty());

    for (const char* bad : {"nonsense=1\n", "X=abc\n", "n=2.5\n", "adaptive=maybe\n", "X\n", "dt=1e400\n"}) {
        std::istringstream b(bad);
        CHECK_THROWS_AS(parse_config(b), DomainError);
    }
    CHECK_THROWS_AS(load_config("/nonexistent/hlab.cfg"), DomainError);
}

TEST_CASE("strict mode and validation") {
    RunConfig cfg;
    const double tol = cfg.tol_eq;
    cfg.apply_strict();
    CHECK(cfg.strict);
    CHECK(cfg.tol_eq == doctest::Approx(tol / 10.0));
    CHECK(cfg.echo()["strict"] == true);
    CHECK_NOTHROW(cfg.validate());
    cfg.n = 800;
    CHECK_THROWS_AS(cfg.validate(), DomainError);
    RunConfig neg;
    neg.tol_conv = 0.0;
    CHECK_THROWS_AS(neg.validate(), DomainError);
}

TEST_CASE("echo covers every key and parses back") {
    RunConfig cfg;
    auto j = cfg.echo();
    std::ostringstream os;
    for (const auto& [k, v] : j.items()) {
        if (k == "strict" || v.is_null()) continue;
        if (v.is_array()) {
            os << k << '=';
            for (std::size_t i = 0; i < v.size(); ++i) os << (i ? "," : "") << v[i].dump();
            os << '\n';
        } else if (v.is_string()) {
            if (!v.get<std::string>().empty()) os << k << '=' << v.get<std::string>() << '\n';
        } else {
            os << k << '=' << v.dump() << '\n';
        }
    }
    std::istringstream is(os.str());
    auto back = parse_config(is);
    auto jb = back.echo();
    jb.erase("strict");
    j.erase("strict");
    CHECK(jb == j);
}

TEST_CASE("usage errors exit with 2") {
    Scratch s;
    CHECK(run({}).code == 2);
    CHECK(run({"frobnicate"}).code == 2);
    CHECK(run({"--help"}).code == 0);
    CHECK(run({"equilibria", "--workers", "0"}).code == 2);
    CHECK(run({"equilibria", "--config", (s.root / "missing.cfg").string()}).code == 2);
    auto bad = run({"equilibria", "--config", s.file("bad.cfg", "bogus=1\n").string(), "--out", (s.root / "o").string()});
    CHECK(bad.code == 2);
    CHECK(bad.err.find("bogus") != std::string::npos);
}

TEST_CASE("empty c list gives a header-only diagram") {
    Scratch s;
    auto out = s.root / "empty";
    auto r = run({"equilibria", "--config", s.file("e.cfg", "c_list=\n").string(), "--out", out.string()});
    CHECK(r.code == 0);
    CHECK(slurp(out / "diagram.csv") == "c,f0,fp0,residual,unstable_dim\n");
    CHECK(manifest(out)["summary"]["equilibria"] == 0);
}

TEST_CASE("equilibria output is deterministic and fully listed") {
    Scratch s;
    auto cfg = s.file("small.cfg", kSmallScan).string();
    auto a = s.root / "a", b = s.root / "b";
    REQUIRE(run({"equilibria", "--config", cfg, "--out", a.string()}).code == 0);
    REQUIRE(run({"equilibria", "--config", cfg, "--out", b.string(), "--workers", "3"}).code == 0);

    auto m = manifest(a);
    CHECK(m["subcommand"] == "equilibria");
    CHECK(m["exit_code"] == 0);
    CHECK(m["config"]["seeds_per_axis"] == 3);
    std::set<std::string> listed;
    for (const auto& f : m["files"]) listed.insert(f.get<std::string>());
    CHECK(listed == listing(a));
    CHECK(m["summary"]["equilibria"] == 1);

    for (const auto& f : listed) CHECK(slurp(a / f) == slurp(b / f));
}

TEST_CASE("HLAB_OUT overrides --out") {
    Scratch s;
    auto env = s.root / "from_env";
    ::setenv("HLAB_OUT", env.string().c_str(), 1);
    auto r = run({"equilibria", "--config", s.file("e.cfg", "c_list=\n").string(), "--out", (s.root / "flag").string()});
    ::unsetenv("HLAB_OUT");
    CHECK(r.code == 0);
    CHECK(fs::exists(env / "manifest.json"));
    CHECK_FALSE(fs::exists(s.root / "flag"));
}

TEST_CASE("a rerun replaces the previous outputs") {
    Scratch s;
    auto out = s.root / "o";
    REQUIRE(run({"equilibria", "--config", s.file("c.cfg", kSmallScan).string(), "--out", out.string()}).code == 0);
    auto evolve_cfg = s.file("k.cfg", "initial=constant\nu0_value=-1\nzero_forcing=true\nt_max=2\nc_list=\n").string();
    auto r = run({"evolve", "--config", evolve_cfg, "--out", out.string()});
    REQUIRE(r.code == 0);
    CHECK_FALSE(fs::exists(out / "diagram.csv"));
    auto m = manifest(out);
    CHECK(m["summary"]["outcome"]["kind"] == "blowup");
    std::set<std::string> listed;
    for (const auto& f : m["files"]) listed.insert(f.get<std::string>());
    CHECK(listed == listing(out));
}

TEST_CASE("orbit spectrum exit codes") {
    Scratch s;
    auto missing = run({"orbit-spectrum", "--trajectory", (s.root / "nowhere").string(), "--out", (s.root / "o").string()});
    CHECK(missing.code == 2);
    CHECK(manifest(s.root / "o")["exit_code"] == 2);
    CHECK(run({"orbit-spectrum", "--out", (s.root / "p").string()}).code == 2);

    // A run that settles on the stable equilibrium connects it to itself.
    auto ev = s.root / "ev";
    auto cfg = s.file("f.cfg", "initial=frontier\nevolve_A=-1\nseeds_per_axis=3\n").string();
    REQUIRE(run({"evolve", "--config", cfg, "--out", ev.string()}).code == 0);
    auto os = s.root / "os";
    auto r = run({"orbit-spectrum", "--config", cfg, "--trajectory", (ev / "trajectory").string(), "--out", os.string()});
    CHECK(r.code == 0);
    auto m = manifest(os);
    CHECK(m["summary"]["connecting_dim"] == 0);
    CHECK(m["summary"]["spectral_flow"] == 0);
    CHECK(fs::exists(os / "trace.csv"));

    // Blow-up is not a connection.
    auto blow = s.root / "blow";
    auto bcfg = s.file("b.cfg", "initial=frontier\nevolve_A=-3\nseeds_per_axis=3\n").string();
    REQUIRE(run({"evolve", "--config", bcfg, "--out", blow.string()}).code == 0);
    CHECK(run({"orbit-spectrum", "--trajectory", (blow / "trajectory").string(), "--out", (s.root / "bo").string()}).code == 2);
}

TEST_CASE("frontier without a bracket exits with 2") {
    Scratch s;
    auto cfg = s.file("nb.cfg", "A_lo=-1\nA_hi=-0.5\nseeds_per_axis=3\n").string();
    auto r = run({"frontier", "--config", cfg, "--out", (s.root / "o").string()});
    CHECK(r.code == 2);
    CHECK(manifest(s.root / "o")["summary"].contains("error"));
}
