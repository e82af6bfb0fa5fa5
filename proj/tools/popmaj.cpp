// popmaj: command-line front end for simulation, sweeps, the exhaustive
// verifier and the state census.
//
// Exit codes: 0 ok, 1 incorrect stabilization, 2 overflow, 3 invalid arguments.

#include "popmaj/popmaj.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <fstream>
#include <iostream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

namespace {

using namespace popmaj;
using json = nlohmann::json;

constexpr int kExitOk = 0;
constexpr int kExitIncorrect = 1;
constexpr int kExitOverflow = 2;
constexpr int kExitInvalid = 3;

struct Usage : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// key=value file; '#' starts a comment, underscores in keys read as dashes.
std::vector<std::pair<std::string, std::string>> read_config_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Usage("cannot open config file " + path);
    std::vector<std::pair<std::string, std::string>> out;
    std::string line;
    int lineno = 0;
    auto trim = [](std::string s) {
        const auto b = s.find_first_not_of(" \t\r");
        if (b == std::string::npos) return std::string();
        const auto e = s.find_last_not_of(" \t\r");
        return s.substr(b, e - b + 1);
    };
    while (std::getline(in, line)) {
        ++lineno;
        if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos) throw Usage(path + ":" + std::to_string(lineno) + ": expected key=value");
        std::string key = trim(line.substr(0, eq));
        for (char& ch : key)
            if (ch == '_') ch = '-';
        out.emplace_back(key, trim(line.substr(eq + 1)));
    }
    return out;
}

std::vector<harness::InitKind> parse_kinds(const std::vector<std::string>& names) {
    std::vector<harness::InitKind> out;
    for (const auto& s : names) {
        if (s == "all") {
            out.insert(out.end(), harness::kGeneratedKinds.begin(), harness::kGeneratedKinds.end());
            continue;
        }
        const harness::InitKind k = harness::parse_init_kind(s);
        if (k == harness::InitKind::from_file) throw Usage("from_file is not valid in a sweep");
        out.push_back(k);
    }
    return out;
}

harness::NumAPolicy parse_policy(const std::string& s) {
    if (s == "auto") return harness::NumAPolicy::Auto;
    if (s == "all") return harness::NumAPolicy::All;
    if (s == "critical") return harness::NumAPolicy::Critical;
    throw Usage("unknown num-A policy '" + s + "' (auto|all|critical)");
}

json to_json(const harness::TraceMetrics& m) {
    json j{{"n", m.n},
           {"seed", m.seed},
           {"trial", m.trial},
           {"num_A", m.num_a},
           {"init_kind", std::string(harness::to_string(m.init_kind))},
           {"silenced", m.silenced},
           {"interactions", m.interactions},
           {"parallel_time", m.parallel_time},
           {"resets", m.resets},
           {"correct", m.correct}};
    static constexpr const char* names[] = {"S_rank", "T_swap", "S_dec", "S_tim", "S_em"};
    json phases = json::object();
    for (std::size_t i = 0; i < harness::kPhaseCount; ++i)
        phases[names[i]] = m.phase_times[i] ? json(*m.phase_times[i]) : json(nullptr);
    j["phase_times"] = phases;
    if (m.flip_first_change) j["flip_first_change"] = *m.flip_first_change;
    return j;
}

int exit_code(const std::vector<harness::TraceMetrics>& rows) {
    bool overflow = false, incorrect = false;
    for (const auto& r : rows) {
        overflow |= r.overflow();
        incorrect |= r.silenced && !r.correct;
    }
    if (incorrect) return kExitIncorrect;
    return overflow ? kExitOverflow : kExitOk;
}

class Output {
  public:
    explicit Output(const std::string& path) {
        if (!path.empty() && path != "-") {
            file_.open(path);
            if (!file_) throw Usage("cannot write " + path);
        }
    }
    std::ostream& stream() { return file_.is_open() ? static_cast<std::ostream&>(file_) : std::cout; }

  private:
    std::ofstream file_;
};

struct RunOpts {
    std::uint32_t n = 0;
    std::optional<std::uint32_t> num_a;
    std::string init = "all_unsettled";
    std::uint64_t seed = 0;
    std::uint32_t t_rank = 16;
    std::uint64_t max_interactions = 0;
    std::string out = "csv";
    std::string save_final;
};

int cmd_run(const RunOpts& o) {
    harness::InitKind kind;
    std::string path;
    if (o.init.rfind("file:", 0) == 0) {
        kind = harness::InitKind::from_file;
        path = o.init.substr(5);
    } else {
        kind = harness::parse_init_kind(o.init);
    }
    if (o.n < 2) throw Usage("--n must be at least 2");
    const Params p = Params::make(o.n, o.t_rank);
    const std::uint32_t num_a = o.num_a.value_or(kind == harness::InitKind::lb_flip ? o.n / 2 : (o.n + 1) / 2);
    const std::uint64_t budget = o.max_interactions ? o.max_interactions : harness::default_max_interactions(o.n);

    harness::Start start = harness::generate_start(kind, o.n, num_a, o.seed, p, path);
    std::uint32_t actual_a = 0;
    for (Input x : start.config.inputs()) actual_a += x == Input::A;
    Configuration initial = start.config;
    harness::TraceMetrics m = harness::run_start(std::move(start), o.seed, p, budget);
    m.init_kind = kind;
    m.num_a = actual_a;

    if (!o.save_final.empty()) {
        // Replays deterministically to recover the final configuration.
        engine::UniformScheduler sched(p.n, derive_seed(o.seed, {0x736368}));
        engine::run(initial, p, sched, budget);
        snapshot::save(o.save_final, initial);
    }

    if (o.out == "json")
        std::cout << to_json(m).dump(2) << '\n';
    else
        harness::write_csv(std::cout, {m});
    return exit_code({m});
}

struct SweepOpts {
    std::vector<std::uint32_t> ns;
    std::string policy = "auto";
    std::optional<std::uint32_t> num_a;
    std::vector<std::string> kinds{"all"};
    std::uint32_t trials = 1;
    std::uint64_t seed = 0;
    std::uint32_t t_rank = 16;
    std::uint64_t max_interactions = 0;
    unsigned workers = 1;
    std::string out = "csv";
    std::string output;
    bool census = false;
};

harness::SweepSpec make_spec(const SweepOpts& o) {
    harness::SweepSpec spec;
    spec.ns = o.ns;
    for (std::uint32_t n : spec.ns)
        if (n < 2) throw Usage("every --n must be at least 2");
    spec.policy = parse_policy(o.policy);
    spec.fixed_num_a = o.num_a;
    spec.kinds = parse_kinds(o.kinds);
    spec.trials = o.trials;
    spec.base_seed = o.seed;
    spec.t_rank = o.t_rank;
    spec.max_interactions = o.max_interactions;
    spec.workers = o.workers;
    spec.census = o.census;
    if (spec.trials == 0) throw Usage("--trials must be at least 1");
    return spec;
}

int cmd_sweep(const SweepOpts& o) {
    const harness::SweepSpec spec = make_spec(o);
    const harness::SweepResult res = harness::sweep(spec);
    Output out(o.output);
    if (o.out == "json") {
        json rows = json::array();
        for (const auto& r : res.rows) rows.push_back(to_json(r));
        json doc{{"rows", rows}};
        if (spec.census) {
            json c = json::object();
            for (const auto& [n, k] : res.census) c[std::to_string(n)] = k;
            doc["census"] = c;
        }
        out.stream() << doc.dump(2) << '\n';
    } else if (o.out == "summary") {
        if (res.rows.empty()) throw Usage("sweep produced no rows");
        harness::write_summary(out.stream(), harness::summarize(res.rows, res.census));
    } else {
        harness::write_csv(out.stream(), res.rows);
    }
    return exit_code(res.rows);
}

struct VerifyOpts {
    std::uint32_t n = 0;
    std::string inputs;
    verifier::VerifierCaps caps;
    std::string report;
    bool audit = false;
};

int cmd_verify(const VerifyOpts& o) {
    const std::vector<Input> inputs = parse_inputs(o.inputs);
    if (inputs.size() != o.n) throw Usage("--inputs must have exactly n letters");
    const verifier::VerifierReport rep = verifier::check_stabilization(o.n, inputs, o.caps);
    if (!o.report.empty()) {
        std::ofstream f(o.report);
        if (!f) throw Usage("cannot write " + o.report);
        verifier::write_report(f, rep);
    }
    verifier::write_report(std::cout, rep);
    bool ok = rep.all_terminal_silent_correct;
    if (o.audit) {
        std::uint64_t fixpoints = 0;
        const auto violations = verifier::audit_silent_set(o.n, inputs, o.caps, &fixpoints);
        std::cout << "audit_fixpoints=" << fixpoints << "\naudit_violations=" << violations.size() << '\n';
        for (const auto& v : violations) std::cout << "audit " << v << '\n';
        ok = ok && violations.empty();
    }
    return ok ? kExitOk : kExitIncorrect;
}

int cmd_census(const SweepOpts& base) {
    SweepOpts o = base;
    o.census = true;
    const harness::SweepSpec spec = make_spec(o);
    const harness::SweepResult res = harness::sweep(spec);
    std::cout << "n,declared_states,observed_states,observed_per_agent\n";
    for (const auto& [n, observed] : res.census) {
        const StateSpace space(Params::make(n, spec.t_rank));
        char ratio[32];
        std::snprintf(ratio, sizeof ratio, "%.2f", static_cast<double>(observed) / n);
        std::cout << n << ',' << space.size() << ',' << observed << ',' << ratio << '\n';
    }
    return exit_code(res.rows);
}

// Splices config-file entries in front of the user's own arguments so that
// the command line wins (options keep their last value).
std::vector<std::string> expand_config(int argc, char** argv, const CLI::App& app) {
    std::vector<std::string> args(argv + 1, argv + argc);
    std::string path;
    for (std::size_t i = 0; i < args.size(); ++i) {
        if (args[i] == "--config" && i + 1 < args.size()) {
            path = args[i + 1];
            args.erase(args.begin() + static_cast<std::ptrdiff_t>(i), args.begin() + static_cast<std::ptrdiff_t>(i) + 2);
            break;
        }
        if (args[i].rfind("--config=", 0) == 0) {
            path = args[i].substr(9);
            args.erase(args.begin() + static_cast<std::ptrdiff_t>(i));
            break;
        }
    }
    if (path.empty() || args.empty()) return args;
    const CLI::App* sub = nullptr;
    for (const CLI::App* s : app.get_subcommands([](const CLI::App*) { return true; }))
        if (s->get_name() == args.front()) sub = s;
    if (!sub) return args;

    std::vector<std::string> injected;
    for (const auto& [key, value] : read_config_file(path)) {
        bool known = false;
        for (const CLI::Option* opt : sub->get_options())
            if (opt->check_lname(key)) known = true;
        if (!known) continue; // keys for other subcommands
        if (value == "true" || value == "false") {
            if (value == "true") injected.push_back("--" + key);
        } else {
            injected.push_back("--" + key + "=" + value);
        }
    }
    args.insert(args.begin() + 1, injected.begin(), injected.end());
    return args;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Silent self-stabilizing exact-majority population protocol"};
    app.require_subcommand(1);
    app.option_defaults()->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);
    std::string config_path;
    app.add_option("--config", config_path, "key=value file; command-line flags override it");

    RunOpts run;
    CLI::App* run_cmd = app.add_subcommand("run", "simulate one trial until silence");
    run_cmd->add_option("--n", run.n, "population size")->required();
    run_cmd->add_option("--num-a", run.num_a, "number of A-input agents (default ceil(n/2))");
    run_cmd->add_option("--init", run.init, "init kind or file:PATH")->capture_default_str();
    run_cmd->add_option("--seed", run.seed)->capture_default_str();
    run_cmd->add_option("--t-rank", run.t_rank, "ranking-time constant")->capture_default_str();
    run_cmd->add_option("--max-interactions", run.max_interactions, "0 = 200 n^2 ln(n+1)")->capture_default_str();
    run_cmd->add_option("--out", run.out)->check(CLI::IsMember({"csv", "json"}))->capture_default_str();
    run_cmd->add_option("--save-final", run.save_final, "write the final configuration snapshot here");

    SweepOpts sw;
    auto add_sweep_flags = [](CLI::App* cmd, SweepOpts& o) {
        cmd->add_option("--n", o.ns, "population sizes")->required()->delimiter(',');
        cmd->add_option("--num-a-policy", o.policy, "auto|all|critical")->capture_default_str();
        cmd->add_option("--num-a", o.num_a, "single num_A value instead of the policy");
        cmd->add_option("--kinds", o.kinds, "init kinds, or 'all'")->delimiter(',');
        cmd->add_option("--trials", o.trials)->capture_default_str();
        cmd->add_option("--seed", o.seed, "base seed")->capture_default_str();
        cmd->add_option("--t-rank", o.t_rank)->capture_default_str();
        cmd->add_option("--max-interactions", o.max_interactions, "0 = 200 n^2 ln(n+1)")->capture_default_str();
        cmd->add_option("--workers", o.workers)->capture_default_str();
    };
    CLI::App* sweep_cmd = app.add_subcommand("sweep", "many trials over n, num_A and init kinds");
    add_sweep_flags(sweep_cmd, sw);
    sweep_cmd->add_option("--out", sw.out)->check(CLI::IsMember({"csv", "json", "summary"}))->capture_default_str();
    sweep_cmd->add_option("--output", sw.output, "file to write (default stdout)");
    sweep_cmd->add_flag("--census", sw.census, "also count distinct states observed");

    VerifyOpts ver;
    CLI::App* verify_cmd = app.add_subcommand("verify", "exhaustive terminal-SCC check on a capped state space");
    verify_cmd->add_option("--n", ver.n)->required();
    verify_cmd->add_option("--inputs", ver.inputs, "input word, e.g. AAB")->required();
    verify_cmd->add_option("--cap-reset", ver.caps.reset)->capture_default_str();
    verify_cmd->add_option("--cap-wait", ver.caps.wait)->capture_default_str();
    verify_cmd->add_option("--cap-timer", ver.caps.timer)->capture_default_str();
    verify_cmd->add_option("--report", ver.report, "also write the report here");
    verify_cmd->add_flag("--audit", ver.audit, "also audit every fixpoint");

    SweepOpts cen;
    cen.trials = 5;
    CLI::App* census_cmd = app.add_subcommand("census", "distinct states observed per n against the declared count");
    add_sweep_flags(census_cmd, cen);

    try {
        std::vector<std::string> args = expand_config(argc, argv, app);
        std::reverse(args.begin(), args.end());
        app.parse(args);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? kExitOk : kExitInvalid;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitInvalid;
    }

    try {
        if (*run_cmd) return cmd_run(run);
        if (*sweep_cmd) return cmd_sweep(sw);
        if (*verify_cmd) return cmd_verify(ver);
        if (*census_cmd) return cmd_census(cen);
    } catch (const Usage& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitInvalid;
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitInvalid;
    } catch (const verifier::StateSpaceTooLarge& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitInvalid;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitInvalid;
    }
    return kExitInvalid;
}
