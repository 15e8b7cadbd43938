#include "cellcheck/cli.hpp"

#include "cellcheck/adaptive.hpp"
#include "cellcheck/baseline.hpp"
#include "cellcheck/checker.hpp"
#include "cellcheck/continuum.hpp"
#include "cellcheck/error.hpp"
#include "cellcheck/io.hpp"
#include "cellcheck/vcas.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <memory>
#include <ostream>
#include <sstream>
#include <thread>

namespace cellcheck::cli {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

std::vector<std::string> split_list(const std::string& s, char sep = ',') {
    std::vector<std::string> out;
    std::stringstream ss(s);
    for (std::string item; std::getline(ss, item, sep);) {
        if (!item.empty()) out.push_back(item);
    }
    return out;
}

double to_double(const std::string& s, const std::string& what) {
    try {
        std::size_t pos = 0;
        const double v = std::stod(s, &pos);
        if (pos != s.size()) throw std::invalid_argument(s);
        return v;
    } catch (const std::logic_error&) {
        throw ValidationError("invalid number '" + s + "' in " + what);
    }
}

std::vector<double> parse_widths(const std::string& s, std::size_t dim) {
    std::vector<double> w;
    for (const auto& item : split_list(s)) w.push_back(to_double(item, "--min-size"));
    if (w.size() == 1 && dim > 1) w.assign(dim, w.front());
    if (w.size() != dim) {
        throw ValidationError("--min-size needs 1 or " + std::to_string(dim) + " values, got " + std::to_string(w.size()));
    }
    return w;
}

Box parse_domain(const std::string& s) {
    std::vector<double> lo, hi;
    for (const auto& item : split_list(s)) {
        const auto colon = item.find(':');
        if (colon == std::string::npos) throw ValidationError("domain entries must look like low:high");
        lo.push_back(to_double(item.substr(0, colon), "--domain"));
        hi.push_back(to_double(item.substr(colon + 1), "--domain"));
    }
    return Box(std::move(lo), std::move(hi));
}

std::vector<Network> load_networks(const std::string& list) {
    std::vector<Network> nets;
    for (const auto& path : split_list(list)) nets.push_back(load_network(path));
    if (nets.empty()) throw ValidationError("--net names no files");
    return nets;
}

/// Options shared by every subcommand that builds a dynamics model.
struct ModelOptions {
    std::string model = "continuum";
    std::string boundary;
    std::optional<double> intruder_rate;
    int tau_max = 40;

    void add(CLI::App* app) {
        app->add_option("--model", model, "Dynamics model")->check(CLI::IsMember({"continuum", "vcas"}));
        app->add_option("--boundary", boundary, "Boundary policy: clamp or treat-as-safe");
        app->add_option("--intruder-rate", intruder_rate, "vcas: freeze the intruder rate (ft/s)");
        app->add_option("--tau-max", tau_max, "vcas: largest time-to-go layer")->check(CLI::PositiveNumber);
    }

    std::unique_ptr<DynamicsModel> build(const std::vector<Network>& nets) const {
        if (model == "continuum") {
            if (nets.size() != 1) throw ValidationError("continuum model takes exactly one network");
            ContinuumConfig c;
            if (!boundary.empty()) c.boundary = parse_boundary_policy(boundary);
            return std::make_unique<ContinuumWorld>(c);
        }
        VcasConfig c;
        c.advisories = nets.front().action_labels();
        if (nets.size() != c.advisories.size()) {
            throw ValidationError("vcas model takes one network per advisory (" + std::to_string(c.advisories.size()) +
                                  "), got " + std::to_string(nets.size()));
        }
        c.fixed_intruder_rate = intruder_rate;
        c.tau_max = tau_max;
        if (!boundary.empty()) c.altitude_boundary = parse_boundary_policy(boundary);
        return std::make_unique<VcasModel>(c);
    }

    json to_json() const {
        json j{{"model", model}, {"boundary", boundary.empty() ? "clamp" : boundary}};
        if (model == "vcas") {
            j["tau_max"] = tau_max;
            j["intruder_rate"] = intruder_rate ? json(*intruder_rate) : json(nullptr);
        }
        return j;
    }
};

fs::path manifest_path(const std::string& explicit_path, const std::string& out) {
    if (!explicit_path.empty()) return explicit_path;
    const fs::path p(out);
    return p.has_parent_path() ? p.parent_path() / "run.json" : fs::path("run.json");
}

json stats_json(const VerifierStats& s) {
    return {{"verifier_calls", s.verifier_calls},     {"corner_eval_batches", s.corner_eval_batches},
            {"leaves", s.leaves_total},               {"leaves_singleton", s.leaves_singleton},
            {"leaves_multi", s.leaves_multi},         {"wall_time", s.wall_time}};
}

// --------------------------------------------------------------- partition

struct PartitionCmd {
    std::string net, domain, min_size, out, manifest;
    std::string strategy = "informed";
    std::string model_name;
    std::optional<double> intruder_rate;
    int depth = 4;

    void add(CLI::App& app) {
        auto* c = app.add_subcommand("partition", "Adaptive verification of one network");
        c->add_option("--net", net, "Network file")->required();
        c->add_option("--domain", domain, "Input box as low:high,low:high,...");
        c->add_option("--model", model_name, "Take the domain from a model instead")
            ->check(CLI::IsMember({"continuum", "vcas"}));
        c->add_option("--intruder-rate", intruder_rate, "vcas: freeze the intruder rate (ft/s)");
        c->add_option("--min-size", min_size, "Minimum cell width, one value or one per dimension")->required();
        c->add_option("--strategy", strategy, "informed, all or uniform")
            ->check(CLI::IsMember({"informed", "all", "uniform"}));
        c->add_option("--refine-depth", depth, "Verifier bisection depth")->check(CLI::NonNegativeNumber);
        c->add_option("--out", out, "Partition JSON-lines output")->required();
        c->add_option("--manifest", manifest, "Run manifest path (default run.json beside --out)");
    }

    int run(std::ostream& os) {
        std::vector<Network> nets{load_network(net)};
        Box dom;
        InputEmbedding emb = InputEmbedding::identity(nets.front().input_dim());
        std::string field_label = "0";
        if (!model_name.empty()) {
            if (!domain.empty()) throw ValidationError("--domain and --model are exclusive");
            if (model_name == "vcas") {
                VcasConfig vc;
                vc.advisories = nets.front().action_labels();
                vc.fixed_intruder_rate = intruder_rate;
                VcasModel m(vc);
                dom = m.domain();
                const std::size_t f = m.field_of(0, vc.tau_max);
                emb = m.embedding(f);
                field_label = m.field_label(f);
            } else {
                dom = ContinuumWorld().domain();
            }
        } else {
            if (domain.empty()) throw ValidationError("one of --domain or --model is required");
            dom = parse_domain(domain);
        }
        AdaptiveConfig cfg{parse_widths(min_size, dom.dim()), SplitStrategy::InformedSplit, VerifierConfig{depth}};
        AdaptiveResult r = strategy == "uniform" ? uniform_verify(nets.front(), dom, cfg, emb)
                                                 : (cfg.strategy = parse_split_strategy(strategy),
                                                    adaptive_verify(nets.front(), dom, cfg, emb));
        const json stats = stats_json(r.stats);
        {
            auto f = open_output(out);
            write_partition(f, std::span<const PartitionTree>(&r.tree, 1), {field_label},
                            nets.front().action_labels(), {{"strategy", strategy}, {"stats", stats}});
        }
        write_manifest(manifest_path(manifest, out),
                       {{"command", "partition"}, {"net", net}, {"domain", {{"low", dom.lows}, {"high", dom.highs}}},
                        {"min_size", cfg.min_size}, {"strategy", strategy}, {"refine_depth", depth}, {"out", out},
                        {"stats", stats}});
        os << "leaves " << r.stats.leaves_total << " (single action " << r.stats.leaves_singleton << ", multiple "
           << r.stats.leaves_multi << ")\nverifier calls " << r.stats.verifier_calls << "\nwall time "
           << r.stats.wall_time << " s\n";
        return kExitOk;
    }
};

// ------------------------------------------------------------------- check

struct CheckCmd {
    std::string net, min_size, verify_min_size, out, tau_curve, manifest;
    std::string transition_threshold = "inf";
    std::string action_threshold = "inf";
    std::string strategy = "informed";
    double eps = 1e-6;
    std::size_t max_sweeps = 100000;
    unsigned threads = std::max(1U, std::thread::hardware_concurrency());
    bool no_boundary_refine = false;
    bool no_online_splits = false;
    int depth = 4;
    ModelOptions model;

    void add(CLI::App& app) {
        auto* c = app.add_subcommand("check", "Overapproximate reach probabilities of the closed loop");
        c->add_option("--net", net, "Network file(s), comma separated; vcas takes one per advisory")->required();
        model.add(c);
        c->add_option("--min-size", min_size, "Minimum cell width, one value or one per dimension")->required();
        c->add_option("--verify-min-size", verify_min_size, "Minimum cell width for the initial verification");
        c->add_option("--transition-threshold", transition_threshold, "Transition-range split threshold (inf = off)");
        c->add_option("--action-threshold", action_threshold, "Action-range threshold or schedule sweep:value,...");
        c->add_option("--eps", eps, "Convergence tolerance")->check(CLI::PositiveNumber);
        c->add_option("--max-sweeps", max_sweeps, "Sweep limit");
        c->add_option("--strategy", strategy, "informed or all")->check(CLI::IsMember({"informed", "all"}));
        c->add_option("--refine-depth", depth, "Verifier bisection depth")->check(CLI::NonNegativeNumber);
        c->add_option("--threads", threads, "Worker threads")->check(CLI::PositiveNumber);
        c->add_flag("--no-boundary-refine", no_boundary_refine, "Skip splitting cells on the unsafe boundary");
        c->add_flag("--no-online-splits", no_online_splits, "Disable both online split heuristics");
        c->add_option("--out", out, "Field JSON-lines output")->required();
        c->add_option("--tau-curve", tau_curve, "vcas: per-layer maximum probability CSV");
        c->add_option("--manifest", manifest, "Run manifest path (default run.json beside --out)");
    }

    int run(std::ostream& os) {
        const auto nets = load_networks(net);
        const auto m = model.build(nets);
        CheckConfig cfg;
        cfg.min_size = parse_widths(min_size, m->state_dim());
        if (!verify_min_size.empty()) cfg.verify_min_size = parse_widths(verify_min_size, m->state_dim());
        cfg.transition_threshold = to_double(transition_threshold, "--transition-threshold");
        cfg.action_threshold = ThresholdSchedule::parse(action_threshold);
        cfg.convergence_eps = eps;
        cfg.max_sweeps = max_sweeps;
        cfg.strategy = parse_split_strategy(strategy);
        cfg.verifier.refine_depth = depth;
        cfg.threads = threads;
        cfg.refine_unsafe_boundary = !no_boundary_refine;
        cfg.online_splits = !no_online_splits;
        if (!tau_curve.empty() && !m->field_layer(0)) throw ValidationError("--tau-curve needs a layered model");

        const bool layered = m->field_layer(0).has_value();
        ProbField pf = layered ? check_layered(nets, *m, cfg) : check(nets, *m, cfg);

        json schedule = json::array();
        for (const auto& [s, v] : cfg.action_threshold.steps()) schedule.push_back({s, std::isinf(v) ? json("inf") : json(v)});
        json resolved{{"min_size", cfg.min_size},
                      {"verify_min_size", cfg.verify_min_size.empty() ? cfg.min_size : cfg.verify_min_size},
                      {"transition_threshold", std::isinf(cfg.transition_threshold) ? json("inf") : json(cfg.transition_threshold)},
                      {"action_threshold", schedule},
                      {"eps", eps},
                      {"max_sweeps", max_sweeps},
                      {"strategy", strategy},
                      {"refine_depth", depth},
                      {"threads", threads},
                      {"boundary_refine", cfg.refine_unsafe_boundary},
                      {"online_splits", cfg.online_splits},
                      {"layered", layered}};
        {
            auto f = open_output(out);
            write_field(f, pf, {{"model", model.to_json()}, {"config", resolved}});
        }
        if (!tau_curve.empty()) {
            auto f = open_output(tau_curve);
            write_tau_curve(f, pf.layer_max);
        }
        write_manifest(manifest_path(manifest, out), {{"command", "check"},
                                                      {"net", split_list(net)},
                                                      {"model", model.to_json()},
                                                      {"config", resolved},
                                                      {"out", out},
                                                      {"tau_curve", tau_curve}});
        double global = 0.0;
        for (std::size_t f = 0; f < pf.fields.size(); ++f) global = std::max(global, pf.max_prob(f));
        const auto& s = pf.stats;
        os << "cells " << s.leaves_final << " (after verification " << s.leaves_initial << ", before final sweep "
           << s.leaves_before_final_sweep << ")\nsweeps " << s.sweeps << (s.converged ? " converged" : " INCOMPLETE")
           << ", final delta " << s.final_delta << "\nsplits: transition " << s.transition_splits << ", action "
           << s.action_splits << ", boundary " << s.boundary_splits << "\nmax probability " << global << '\n';
        if (layered && !pf.layer_max.empty()) os << "max probability at top layer " << pf.layer_max.back() << '\n';
        os << "wall time " << s.wall_time << " s\n";
        return s.converged ? kExitOk : kExitValidation;
    }
};

// ---------------------------------------------------------------------- mc

struct McCmd {
    std::string net, starts, out, manifest;
    std::size_t n = 1000;
    std::size_t horizon = 500;
    std::uint64_t seed = 0;
    ModelOptions model;

    void add(CLI::App& app) {
        auto* c = app.add_subcommand("mc", "Monte Carlo rollouts of the network policy");
        c->add_option("--net", net, "Network file(s), comma separated")->required();
        model.add(c);
        c->add_option("--starts", starts, "CSV of start states (field,x0,x1,...)")->required();
        c->add_option("--n", n, "Rollouts per start")->check(CLI::PositiveNumber);
        c->add_option("--horizon", horizon, "Step limit per rollout")->check(CLI::PositiveNumber);
        c->add_option("--seed", seed, "Base seed")->required();
        c->add_option("--out", out, "CSV output")->required();
        c->add_option("--manifest", manifest, "Run manifest path (default run.json beside --out)");
    }

    int run(std::ostream& os) {
        const auto nets = load_networks(net);
        const auto m = model.build(nets);
        std::vector<std::string> labels;
        for (std::size_t f = 0; f < m->field_count(); ++f) labels.push_back(m->field_label(f));
        auto in = open_input(starts);
        const auto points = read_starts(in, labels, m->state_dim(), starts);
        Simulator sim(nets, *m);
        std::vector<McRow> rows;
        for (std::size_t i = 0; i < points.size(); ++i) {
            McConfig mc{n, horizon, seed + i};
            rows.push_back({labels[points[i].field], points[i].state, sim.run(points[i].field, points[i].state, mc)});
        }
        {
            auto f = open_output(out);
            write_mc_csv(f, rows);
        }
        write_manifest(manifest_path(manifest, out),
                       {{"command", "mc"}, {"net", split_list(net)}, {"model", model.to_json()}, {"starts", starts},
                        {"n", n}, {"horizon", horizon}, {"seed", seed}, {"seed_rule", "start i uses seed + i"},
                        {"out", out}});
        os << rows.size() << " start states, " << n << " rollouts each\n";
        return kExitOk;
    }
};

// ------------------------------------------------------------------- exact

struct ExactCmd {
    std::string table, net, grid, out, table_out, manifest;
    double eps = 1e-12;
    ModelOptions model;

    void add(CLI::App& app) {
        auto* c = app.add_subcommand("exact", "Value iteration on a tabular policy");
        c->add_option("--table", table, "Policy table JSON-lines");
        c->add_option("--net", net, "Tabulate these network(s) instead of reading --table");
        c->add_option("--grid", grid, "Nodes per dimension for --net (cell centres)");
        c->add_option("--table-out", table_out, "Also write the tabulated policy");
        model.add(c);
        c->add_option("--eps", eps, "Convergence tolerance")->check(CLI::PositiveNumber);
        c->add_option("--out", out, "Exact values JSON-lines output")->required();
        c->add_option("--manifest", manifest, "Run manifest path (default run.json beside --out)");
    }

    int run(std::ostream& os) {
        if (table.empty() == net.empty()) throw ValidationError("exactly one of --table or --net is required");
        std::unique_ptr<DynamicsModel> m;
        TabularPolicy policy{Grid(std::vector<std::vector<double>>{{0.0}}), {}};
        std::vector<std::string> labels;
        if (!net.empty()) {
            const auto nets = load_networks(net);
            m = model.build(nets);
            if (grid.empty()) throw ValidationError("--net needs --grid");
            std::vector<std::size_t> counts;
            for (const auto& s : split_list(grid)) counts.push_back(static_cast<std::size_t>(to_double(s, "--grid")));
            if (counts.size() == 1) counts.assign(m->state_dim(), counts.front());
            policy = tabulate_policy(nets, *m, Grid::cell_centres(m->domain(), counts));
            for (std::size_t f = 0; f < m->field_count(); ++f) labels.push_back(m->field_label(f));
            if (!table_out.empty()) {
                auto f = open_output(table_out);
                write_policy_table(f, policy, labels, m->action_labels());
            }
        } else {
            auto in = open_input(table);
            TableFile t = read_policy_table(in, table);
            if (model.model == "vcas") {
                VcasConfig c;
                c.advisories = t.action_labels;
                c.fixed_intruder_rate = model.intruder_rate;
                c.tau_max = model.tau_max;
                if (!model.boundary.empty()) c.altitude_boundary = parse_boundary_policy(model.boundary);
                m = std::make_unique<VcasModel>(c);
            } else {
                ContinuumConfig c;
                if (!model.boundary.empty()) c.boundary = parse_boundary_policy(model.boundary);
                m = std::make_unique<ContinuumWorld>(c);
            }
            if (t.action_labels != m->action_labels()) throw ValidationError("table actions do not match the model");
            for (std::size_t f = 0; f < m->field_count(); ++f) labels.push_back(m->field_label(f));
            if (t.field_labels != labels) throw ValidationError("table fields do not match the model");
            policy = std::move(t.policy);
        }
        const ExactResult r = exact_check(policy, *m, eps);
        {
            auto f = open_output(out);
            write_exact(f, r, labels);
        }
        write_manifest(manifest_path(manifest, out), {{"command", "exact"}, {"table", table}, {"net", split_list(net)},
                                                      {"grid", grid}, {"model", model.to_json()}, {"eps", eps},
                                                      {"out", out}, {"iterations", r.iterations}});
        os << "iterations " << r.iterations << (r.converged ? " converged" : " INCOMPLETE") << '\n';
        return r.converged ? kExitOk : kExitValidation;
    }
};

// ----------------------------------------------------------------- compare

struct CompareCmd {
    std::string field, mc, exact, out, manifest;

    void add(CLI::App& app) {
        auto* c = app.add_subcommand("compare", "Join check, Monte Carlo and exact results per query state");
        c->add_option("--field", field, "Field JSON-lines from check")->required();
        c->add_option("--mc", mc, "Monte Carlo CSV")->required();
        c->add_option("--exact", exact, "Exact values JSON-lines");
        c->add_option("--out", out, "CSV output")->required();
        c->add_option("--manifest", manifest, "Run manifest path (default run.json beside --out)");
    }

    int run(std::ostream& os) {
        auto fin = open_input(field);
        const PartitionFile pf = read_partition(fin, field);
        auto min = open_input(mc);
        const auto rows = read_mc_csv(min, mc);
        std::optional<ExactFile> ex;
        if (!exact.empty()) {
            auto ein = open_input(exact);
            ex = read_exact(ein, exact);
        }
        const auto joined = compare(pf, rows, ex ? &*ex : nullptr);
        {
            auto f = open_output(out);
            write_compare_csv(f, joined);
        }
        const auto violations = std::count_if(joined.begin(), joined.end(), [](const auto& r) { return !r.bound_holds; });
        write_manifest(manifest_path(manifest, out), {{"command", "compare"}, {"field", field}, {"mc", mc},
                                                      {"exact", exact}, {"out", out}, {"violations", violations}});
        os << joined.size() << " rows, " << violations << " below p_mc - 3 stderr\n";
        return kExitOk;
    }
};

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Probabilistic model checking of neural network control policies", "cellcheck"};
    app.require_subcommand(1);
    PartitionCmd partition;
    CheckCmd check_cmd;
    McCmd mc;
    ExactCmd exact;
    CompareCmd cmp;
    partition.add(app);
    check_cmd.add(app);
    mc.add(app);
    exact.add(app);
    cmp.add(app);

    std::vector<std::string> reversed(args.rbegin(), args.rend());
    try {
        app.parse(reversed);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? kExitOk : kExitUsage;
    }
    try {
        if (app.got_subcommand("partition")) return partition.run(out);
        if (app.got_subcommand("check")) return check_cmd.run(out);
        if (app.got_subcommand("mc")) return mc.run(out);
        if (app.got_subcommand("exact")) return exact.run(out);
        return cmp.run(out);
    } catch (const IoError& e) {
        err << "error: " << e.what() << '\n';
        return kExitIo;
    } catch (const Error& e) {
        err << "error: " << e.what() << '\n';
        return kExitValidation;
    } catch (const std::bad_alloc&) {
        err << "error: out of memory\n";
        return kExitIo;
    }
}

}  // namespace cellcheck::cli
