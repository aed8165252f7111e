#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "cli.hpp"
#include "pass/checkpoint.hpp"
#include "pass/dataset.hpp"
#include "pass/flow_io.hpp"
#include "support/capture_builder.hpp"

using namespace pass;
using namespace pass::testing;
namespace fs = std::filesystem;

namespace {

struct Result {
    int code;
    std::string out;
    std::string err;
};

Result run(std::vector<std::string> args) {
    args.insert(args.begin(), "pass");
    std::vector<const char*> argv;
    for (const std::string& a : args) argv.push_back(a.c_str());
    std::ostringstream out, err;
    const int code = cli::run(static_cast<int>(argv.size()), argv.data(), out, err);
    return {code, out.str(), err.str()};
}

struct TempDir {
    fs::path path;
    explicit TempDir(const std::string& tag) {
        path = fs::temp_directory_path() / ("pass_cli_" + tag + "_" + std::to_string(::getpid()));
        fs::remove_all(path);
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
    std::string operator/(const std::string& name) const { return (path / name).string(); }
};

std::string slurp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

const std::vector<std::string> kTiny = {"--preset", "desk", "--set", "model.d_model=16", "--set", "model.heads=2",
                                        "--set", "model.d_head=8", "--set", "model.ffn_dim=32", "--set",
                                        "model.n_blocks=1", "--set", "model.proj_dim=8"};

std::vector<std::string> with(std::vector<std::string> a, const std::vector<std::string>& extra) {
    a.insert(a.end(), extra.begin(), extra.end());
    return a;
}

}  // namespace

TEST_CASE("no arguments prints usage and fails") {
    const Result r = run({});
    CHECK(r.code == cli::Usage);
    CHECK(r.out.find("Usage") != std::string::npos);
    CHECK(r.out.find("pretrain") != std::string::npos);
}

TEST_CASE("--version and --help succeed") {
    const Result v = run({"--version"});
    CHECK(v.code == cli::Ok);
    CHECK_FALSE(v.out.empty());
    CHECK(run({"--help"}).code == cli::Ok);
    CHECK(run({"eval", "--help"}).code == cli::Ok);
}

TEST_CASE("bad usage maps to exit code 1") {
    CHECK(run({"frobnicate"}).code == cli::Usage);
    const Result bogus = run({"eval", "--model", "m", "--tokens", "t", "--bogus"});
    CHECK(bogus.code == cli::Usage);
    CHECK(bogus.err.find("--bogus") != std::string::npos);
    CHECK(bogus.err.find("Usage") != std::string::npos);
    CHECK(bogus.err.find("--tokens") != std::string::npos);
    CHECK(run({"eval"}).code == cli::Usage);  // required options missing
    TempDir tmp("usage");
    const Result r = run({"synth", "--out", tmp / "x.jsonl", "--set", "corpus.nonsense=1"});
    CHECK(r.code == cli::Usage);
    CHECK(r.err.find("corpus.nonsense") != std::string::npos);
    CHECK(run({"synth", "--out", tmp / "x.jsonl", "--set", "novalue"}).code == cli::Usage);
}

TEST_CASE("missing and malformed inputs map to exit code 2 and name the path") {
    TempDir tmp("input");
    const std::string missing = tmp / "does_not_exist.ckpt";
    Result r = run({"eval", "--model", missing, "--tokens", missing});
    CHECK(r.code == cli::Input);
    CHECK(r.err.find(missing) != std::string::npos);

    const std::string junk = tmp / "junk.jsonl";
    std::ofstream(junk) << "not json\n";
    r = run({"vocab", "--flows", junk, "--out", tmp / "v.txt"});
    CHECK(r.code == cli::Input);
    CHECK(r.err.find(junk) != std::string::npos);

    const std::string pcap = tmp / "junk.pcap";
    std::ofstream(pcap) << "definitely not a capture file";
    CHECK(run({"ingest", "--pcap", pcap, "--out", tmp / "f.jsonl"}).code == cli::Input);
}

TEST_CASE("ingest labels flows by capture name") {
    TempDir tmp("ingest");
    CaptureWriter w;
    const FiveTuple c2s = tuple4(1, 2, 40000, 443);
    auto seg = [](const FiveTuple& t, std::uint8_t flags, Bytes payload) {
        return ethernet_frame(SegmentSpec{.tuple = t, .flags = flags, .payload = std::move(payload)});
    };
    w.add(seg(c2s, tcp_flag::Syn, {}));
    w.add(seg(c2s.reversed(), tcp_flag::Syn | tcp_flag::Ack, {}));
    w.add(seg(c2s, tcp_flag::Ack, {0x16, 0x03, 0x01}));
    w.add(seg(c2s.reversed(), tcp_flag::Ack, {0x17, 0x03, 0x03, 0x00}));
    const std::string pcap = tmp / "chat.pcap";
    {
        std::ofstream f(pcap, std::ios::binary);
        f.write(reinterpret_cast<const char*>(w.bytes().data()), static_cast<std::streamsize>(w.bytes().size()));
    }
    std::ofstream(tmp / "labels.txt") << "# capture class\nchat.pcap 3\n";
    const Result r = run({"ingest", "--pcap", pcap, "--labels", tmp / "labels.txt", "--out", tmp / "f.jsonl"});
    REQUIRE(r.code == cli::Ok);
    CHECK(r.err.find("4 records") != std::string::npos);
    const auto flows = read_flows_file(tmp / "f.jsonl");
    REQUIRE(flows.size() == 1);
    CHECK(flows[0].label == 3);
    CHECK(flows[0].packets.size() == 4);

    std::ofstream(tmp / "bad_labels.txt") << "chat.pcap three\n";
    CHECK(run({"ingest", "--pcap", pcap, "--labels", tmp / "bad_labels.txt", "--out", tmp / "g.jsonl"}).code ==
          cli::Input);
}

TEST_CASE("the full pipeline runs through the command line") {
    TempDir tmp("pipeline");
    const auto f = [&](const std::string& n) { return tmp / n; };

    Result r = run({"synth", "--out", f("l.jsonl"), "--unlabeled", f("u.jsonl"), "--set", "corpus.unlabeled=30",
                    "--seed", "4"});
    REQUIRE(r.code == cli::Ok);
    CHECK(r.err.find("seed = 4") != std::string::npos);
    REQUIRE(run({"vocab", "--flows", f("l.jsonl"), f("u.jsonl"), "--m", "32", "--n", "8", "--out", f("v.txt")}).code ==
            cli::Ok);
    r = run({"encode", "--flows", f("l.jsonl"), "--vocab", f("v.txt"), "--out", f("tr.jsonl"), "--val-out",
             f("va.jsonl"), "--test-out", f("te.jsonl")});
    REQUIRE(r.code == cli::Ok);
    CHECK(r.err.find("class 3") != std::string::npos);  // two flows: train only
    REQUIRE(run({"encode", "--flows", f("u.jsonl"), "--vocab", f("v.txt"), "--out", f("un.jsonl")}).code == cli::Ok);
    const Dataset train = read_dataset_file(f("tr.jsonl"));
    CHECK(train.size() + read_dataset_file(f("va.jsonl")).size() + read_dataset_file(f("te.jsonl")).size() == 62);

    r = run(with(kTiny, {"--set", "pretrain.step=4"}));  // no subcommand
    CHECK(r.code == cli::Usage);

    std::vector<std::string> pre = {"pretrain", "--tokens", f("tr.jsonl"), "--vocab", f("v.txt"), "--out",
                                    f("enc.ckpt"), "--set", "pretrain.step=4", "--set", "pretrain.bz=8"};
    r = run(with(pre, kTiny));
    REQUIRE(r.code == cli::Ok);
    CHECK(r.err.find("[pretrain]") != std::string::npos);
    CHECK(r.err.find("step = 4") != std::string::npos);
    CHECK(r.err.find("d_model = 16") != std::string::npos);
    std::istringstream curve(slurp(f("enc.ckpt.loss.txt")));
    int steps = 0, step = 0;
    double loss = 0;
    while (curve >> step >> loss) ++steps;
    CHECK(steps == 4);

    std::vector<std::string> ft = {"finetune", "--model", f("enc.ckpt"), "--train", f("tr.jsonl"), "--val",
                                   f("va.jsonl"), "--out", f("m0.ckpt"), "--metrics", f("m0.json"),
                                   "--set", "finetune.epochs=2"};
    REQUIRE(run(with(ft, kTiny)).code == cli::Ok);
    CHECK(load_checkpoint(f("m0.ckpt")).config.num_classes == 4);

    std::vector<std::string> pli = {"iterate", "--model", f("m0.ckpt"), "--train", f("tr.jsonl"), "--val",
                                    f("va.jsonl"), "--unlabeled", f("un.jsonl"), "--thr", "0.3", "--limit", "2",
                                    "--epsilon", "0", "--out", f("m.ckpt"), "--report", f("r.json"), "--set",
                                    "finetune.epochs=1"};
    r = run(with(pli, kTiny));
    REQUIRE(r.code == cli::Ok);
    CHECK(r.err.find("thr = 0.3") != std::string::npos);
    const auto report = nlohmann::json::parse(slurp(f("r.json")));
    CHECK(report.contains("iterations"));

    r = run({"eval", "--model", f("m.ckpt"), "--tokens", f("te.jsonl"), "--out", f("metrics.json")});
    REQUIRE(r.code == cli::Ok);
    const auto metrics = nlohmann::json::parse(slurp(f("metrics.json")));
    for (const char* key : {"num_classes", "accuracy", "macro_accuracy", "macro_precision", "macro_recall",
                            "macro_f1", "confusion", "per_class"}) {
        CHECK_MESSAGE(metrics.contains(key), key);
    }

    REQUIRE(run({"export-vectors", "--model", f("m.ckpt"), "--tokens", f("te.jsonl"), "--out", f("h.tsv")}).code ==
            cli::Ok);
    std::istringstream tsv(slurp(f("h.tsv")));
    std::string header;
    std::getline(tsv, header);
    CHECK(header.rfind("index\tlabel\tcomm\th0", 0) == 0);
    CHECK(std::count(header.begin(), header.end(), '\t') == 2 + 16);

    // A checkpoint whose length does not fit the tokens is rejected.
    REQUIRE(run({"vocab", "--flows", f("l.jsonl"), "--m", "16", "--n", "8", "--out", f("v2.txt")}).code == cli::Ok);
    REQUIRE(run({"encode", "--flows", f("l.jsonl"), "--vocab", f("v2.txt"), "--out", f("short.jsonl")}).code ==
            cli::Ok);
    r = run({"eval", "--model", f("m.ckpt"), "--tokens", f("short.jsonl")});
    CHECK(r.code == cli::Input);
    CHECK(r.err.find("length") != std::string::npos);
}

TEST_CASE("reruns with the same seed write identical files") {
    TempDir tmp("repro");
    const auto f = [&](const std::string& n) { return tmp / n; };
    REQUIRE(run({"synth", "--out", f("l.jsonl")}).code == cli::Ok);
    REQUIRE(run({"vocab", "--flows", f("l.jsonl"), "--m", "32", "--n", "8", "--out", f("v.txt")}).code == cli::Ok);
    REQUIRE(run({"encode", "--flows", f("l.jsonl"), "--vocab", f("v.txt"), "--out", f("t.jsonl")}).code == cli::Ok);
    for (const char* out : {"a.ckpt", "b.ckpt"}) {
        std::vector<std::string> pre = {"pretrain", "--tokens", f("t.jsonl"), "--vocab", f("v.txt"), "--out", f(out),
                                        "--set", "pretrain.step=3", "--seed", "9"};
        REQUIRE(run(with(pre, kTiny)).code == cli::Ok);
    }
    CHECK(slurp(f("a.ckpt")) == slurp(f("b.ckpt")));
    CHECK(slurp(f("a.ckpt.loss.txt")) == slurp(f("b.ckpt.loss.txt")));
}

TEST_CASE("ablate prints one row per variant") {
    TempDir tmp("ablate");
    REQUIRE(run({"synth", "--out", tmp / "l.jsonl", "--set", "corpus.counts=12,12"}).code == cli::Ok);
    std::vector<std::string> args = {"ablate", "--flows", tmp / "l.jsonl", "--variant", "no_cpt+no_pli", "--variant",
                                     "no_pli", "--seeds", "1,2", "--out", tmp / "a.json", "--set",
                                     "finetune.epochs=1", "--set", "pretrain.step=2", "--set", "tokenize.m=16",
                                     "--set", "tokenize.n=4"};
    const Result r = run(with(args, kTiny));
    REQUIRE(r.code == cli::Ok);
    CHECK(r.out.find("no_cpt+no_pli") != std::string::npos);
    CHECK(r.out.find("no_pli") != std::string::npos);
    const auto j = nlohmann::json::parse(slurp(tmp / "a.json"));
    REQUIRE(j.size() == 2);
    CHECK(j[0]["runs"].size() == 2);
}
