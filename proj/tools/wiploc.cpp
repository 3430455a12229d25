// wiploc: run scenarios and sweeps, and poke at the codec and energy model.

#include "wiploc/io/output.hpp"
#include "wiploc/io/scenario_yaml.hpp"
#include "wiploc/wiploc.hpp"

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

namespace fs = std::filesystem;
using namespace wiploc;

namespace {

struct RunOptions {
    std::string scenario;
    std::string out = "out";
    std::optional<std::uint64_t> seed;
    std::string mode;
    bool no_codec = false;
    bool verbose = false;
};

struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

void add_run_options(CLI::App* cmd, RunOptions& o)
{
    cmd->add_option("scenario", o.scenario, "Scenario file (.yaml may be omitted)")->required();
    cmd->add_option("--out,-o", o.out, "Output directory");
    cmd->add_option("--seed", o.seed, "Override the scenario seed");
    cmd->add_option("--mode", o.mode, "Override the protocol mode")->check(CLI::IsMember({"wiploc", "wiploc++"}));
    cmd->add_flag("--no-codec", o.no_codec, "Send raw ID payloads; only intact frames decode");
    cmd->add_flag("-v,--verbose", o.verbose, "Print per-position results");
}

sim::Scenario load(const RunOptions& o)
{
    auto s = io::load_scenario(o.scenario);
    if (o.seed)
        s.seed = *o.seed;
    if (!o.mode.empty())
        s.mode = *io::mode_from_string(o.mode);
    if (o.no_codec)
        s.codec = false;
    s.validate();
    return s;
}

std::ofstream open_out(const fs::path& dir, const char* name)
{
    std::ofstream f(dir / name, std::ios::binary);
    if (!f)
        throw std::runtime_error((dir / name).string() + ": cannot write");
    return f;
}

int cmd_run(const RunOptions& o)
{
    const auto s = load(o);
    const auto r = sim::run(s);
    fs::create_directories(o.out);
    {
        auto f = open_out(o.out, "trace.csv");
        io::write_trace_csv(f, r.traces);
    }
    {
        auto f = open_out(o.out, "energy.csv");
        io::write_energy_csv(f, r.energy);
    }
    {
        auto f = open_out(o.out, "report.txt");
        io::write_report(f, s, r);
    }
    const auto m = sim::metrics(r.traces, s.truth);
    std::cout << "scenario " << s.name << " (" << to_string(s.mode) << ", seed " << s.seed << ")\n";
    io::write_metrics(std::cout, m);
    if (o.verbose) {
        for (const auto& p : m.positions)
            std::cout << "  position " << p.position << " (" << io::num(p.where.x, 2) << ", "
                      << io::num(p.where.y, 2) << "): prr " << io::num(p.prr, 1) << " accuracy "
                      << (p.accuracy ? io::num(*p.accuracy, 1) : std::string("n/a")) << '\n';
    }
    std::cout << "wrote " << (fs::path(o.out) / "trace.csv").string() << ", report.txt, energy.csv\n";
    return 0;
}

std::vector<double> parse_values(const std::string& csv)
{
    std::vector<double> out;
    std::size_t i = 0;
    while (i <= csv.size()) {
        const auto j = csv.find(',', i);
        const auto tok = csv.substr(i, j == std::string::npos ? std::string::npos : j - i);
        try {
            std::size_t used = 0;
            out.push_back(std::stod(tok, &used));
            if (used != tok.size())
                throw std::invalid_argument(tok);
        } catch (const std::exception&) {
            throw UsageError("--values: '" + tok + "' is not a number");
        }
        if (j == std::string::npos)
            break;
        i = j + 1;
    }
    return out;
}

int cmd_sweep(const RunOptions& o, const std::string& param, const std::string& values, bool parallel)
{
    const auto s = load(o);
    sim::SweepParam p;
    try {
        p = sim::parse_sweep_param(param);
    } catch (const InvalidParameter& e) {
        throw UsageError(e.what());
    }
    const auto v = parse_values(values);
    const auto pts = sim::sweep(s, p, v, parallel);
    fs::create_directories(o.out);
    {
        auto f = open_out(o.out, "sweep.csv");
        io::write_sweep_csv(f, p, pts);
    }
    io::write_sweep_csv(std::cout, p, pts);
    return 0;
}

int cmd_codec_encode(int id, int order)
{
    const Codec c(order);
    std::cout << c.encode(id).to_hex() << '\n';
    return 0;
}

int cmd_codec_decode(const std::string& hex, int order)
{
    const Codec c(order);
    const auto expect = (c.payload_chips() + 3) / 4;
    if (hex.size() != expect)
        throw UsageError("payload must be " + std::to_string(expect) + " hex digits, got "
                         + std::to_string(hex.size()));
    Payload p;
    try {
        p = Payload::from_hex(hex);
    } catch (const MalformedPayload& e) {
        throw UsageError(e.what());
    }
    for (const auto& d : c.decode(p))
        std::cout << d.anchor_id << ' ' << d.distance << '\n';
    return 0;
}

struct EnergyOptions {
    PowerProfile profile = PowerProfile::wpa();
    double t_m = 1000.0;
    double from = 0.5;
    double to = 100.0;
    double step = 0.5;
};

int cmd_energy(const EnergyOptions& o)
{
    if (!(o.t_m > 0.0))
        throw UsageError("--t-m must be > 0");
    if (!(o.step > 0.0) || !(o.from > 0.0) || o.to < o.from)
        throw UsageError("table range needs 0 < from <= to and step > 0");
    double opt = 0.0;
    try {
        opt = optimal_tc(o.profile, o.t_m);
    } catch (const InvalidParameter& e) {
        throw UsageError(e.what());
    }
    std::cout << "optimal_tc_ms: " << io::num(opt, 3) << '\n';
    try {
        std::cout << "avg_mw_at_optimum: " << io::num(wpa_average_power({o.t_m, opt}, o.profile), 4) << '\n';
    } catch (const std::exception&) {
        std::cout << "avg_mw_at_optimum: infeasible\n";
    }
    std::cout << "t_c_ms,k_adc,t_wfi_ms,avg_mw\n";
    const auto n = static_cast<long>(std::floor((o.to - o.from) / o.step + 1e-9));
    for (long i = 0; i <= n; ++i) {
        const double tc = o.from + static_cast<double>(i) * o.step;
        if (!(tc < o.t_m))
            break;
        try {
            const auto w = wpa_window({o.t_m, tc}, o.profile);
            std::cout << io::num(tc, 2) << ',' << static_cast<long>(w.k_adc) << ',' << io::num(w.t_wfi_ms, 2) << ','
                      << io::num(w.average_mw, 4) << '\n';
        } catch (const InfeasibleConfiguration&) {
            std::cout << io::num(tc, 2) << ",,,infeasible\n";
        }
    }
    return 0;
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"WiPLoc / WiPLoc++ localization simulator"};
    app.require_subcommand(1);

    RunOptions run_opts;
    auto* run = app.add_subcommand("run", "Run a scenario and write trace.csv, report.txt, energy.csv");
    add_run_options(run, run_opts);

    RunOptions sweep_opts;
    std::string sweep_param;
    std::string sweep_values;
    bool parallel = false;
    auto* sweep = app.add_subcommand("sweep", "Run a scenario once per parameter value");
    add_run_options(sweep, sweep_opts);
    sweep->add_option("--param", sweep_param, "anchors | t_c | capture_threshold | tx_power")->required();
    sweep->add_option("--values", sweep_values, "Comma separated values")->required();
    sweep->add_flag("--parallel", parallel, "Run sweep points concurrently");

    int order = 4;
    auto* codec = app.add_subcommand("codec", "Encode or decode a payload");
    codec->require_subcommand(1);
    codec->add_option("--order", order, "Code order exponent k (2^k chips per code)")->check(CLI::Range(2, 8));
    int enc_id = 0;
    auto* enc = codec->add_subcommand("encode", "Print the hex payload for an anchor id");
    enc->add_option("id", enc_id, "Anchor id")->required();
    std::string dec_hex;
    auto* dec = codec->add_subcommand("decode", "Print 'id d_c' for each accepted candidate");
    dec->add_option("hex", dec_hex, "Payload as hex")->required();

    EnergyOptions eo;
    auto* energy = app.add_subcommand("energy", "Optimal ADC period and average-power table");
    energy->add_option("--t-m", eo.t_m, "Localization period (ms)");
    energy->add_option("--p-tx", eo.profile.p_tx, "TX power (mW)");
    energy->add_option("--p-rx", eo.profile.p_rx, "RX power (mW)");
    energy->add_option("--p-adc", eo.profile.p_adc, "ADC power (mW)");
    energy->add_option("--p-wfi", eo.profile.p_wfi, "Sleep power (mW)");
    energy->add_option("--t-tx", eo.profile.t_tx, "TX duration (ms)");
    energy->add_option("--t-adc", eo.profile.t_adc, "ADC conversion time (ms)");
    energy->add_option("--from", eo.from, "First t_c in the table (ms)");
    energy->add_option("--to", eo.to, "Last t_c in the table (ms)");
    energy->add_option("--step", eo.step, "Table step (ms)");

    CLI11_PARSE(app, argc, argv);

    try {
        if (*run)
            return cmd_run(run_opts);
        if (*sweep)
            return cmd_sweep(sweep_opts, sweep_param, sweep_values, parallel);
        if (*enc)
            return cmd_codec_encode(enc_id, order);
        if (*dec)
            return cmd_codec_decode(dec_hex, order);
        if (*energy)
            return cmd_energy(eo);
    } catch (const UsageError& e) {
        std::cerr << "usage error: " << e.what() << '\n';
        return 2;
    } catch (const InvalidParameter& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
