#include "cellcheck/checker.hpp"

#include "cellcheck/error.hpp"
#include "cellcheck/verifier.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <map>
#include <numeric>
#include <sstream>
#include <thread>

namespace cellcheck {

// ---------------------------------------------------------------- schedule

ThresholdSchedule::ThresholdSchedule(double value) : steps_{{0, value}} {}

ThresholdSchedule::ThresholdSchedule(std::vector<std::pair<std::size_t, double>> steps) : steps_(std::move(steps)) {
    if (steps_.empty()) throw ValidationError("threshold schedule is empty");
    std::sort(steps_.begin(), steps_.end());
    if (steps_.front().first != 0) steps_.insert(steps_.begin(), {0, steps_.front().second});
    for (const auto& [sweep, value] : steps_) {
        if (std::isnan(value) || value < 0.0) throw ValidationError("thresholds must be non-negative");
    }
}

ThresholdSchedule ThresholdSchedule::parse(const std::string& text) {
    std::vector<std::pair<std::size_t, double>> steps;
    std::stringstream ss(text);
    for (std::string item; std::getline(ss, item, ',');) {
        try {
            const auto colon = item.find(':');
            if (colon == std::string::npos) {
                steps.emplace_back(0, std::stod(item));
            } else {
                steps.emplace_back(std::stoul(item.substr(0, colon)), std::stod(item.substr(colon + 1)));
            }
        } catch (const std::logic_error&) {
            throw ValidationError("invalid threshold schedule entry '" + item + "'");
        }
    }
    return ThresholdSchedule(std::move(steps));
}

double ThresholdSchedule::at(std::size_t sweep) const {
    double v = steps_.front().second;
    for (const auto& [start, value] : steps_) {
        if (start <= sweep) v = value;
    }
    return v;
}

bool ThresholdSchedule::disabled() const {
    return std::all_of(steps_.begin(), steps_.end(), [](const auto& s) { return std::isinf(s.second); });
}

// --------------------------------------------------------------- ProbField

std::size_t ProbField::leaf_count() const {
    std::size_t n = 0;
    for (const auto& t : fields) n += t.leaf_count();
    return n;
}

const Cell& ProbField::cell_at(std::size_t field, std::span<const double> x) const {
    if (field >= fields.size()) throw ValidationError("field index out of range");
    return fields[field].cell(fields[field].locate(x));
}

double ProbField::max_prob(std::size_t field) const {
    double m = 0.0;
    for (CellId id : fields.at(field).leaves()) m = std::max(m, fields[field].cell(id).prob);
    return m;
}

// -------------------------------------------------------------- primitives

namespace {

struct OutcomeSpread {
    double max = 0.0;
    double min = 0.0;
};

OutcomeSpread spread(const ImageOutcome& img, std::span<const PartitionTree> fields, std::vector<CellId>& buf) {
    if (img.exits) return {};
    if (img.target_field >= fields.size()) throw ValidationError("outcome targets an unknown field");
    const PartitionTree& target = fields[img.target_field];
    buf.clear();
    target.overlapping(img.image, buf, img.closed_high);
    OutcomeSpread s{0.0, 1.0};
    for (CellId c : buf) {
        const double p = target.cell(c).prob;
        s.max = std::max(s.max, p);
        s.min = std::min(s.min, p);
    }
    return s;
}

bool pinned(const Cell& c) { return c.in_unsafe || c.absorbing; }

}  // namespace

double transition_range(const PartitionTree& tree, std::size_t field, CellId id, std::size_t action,
                        std::span<const PartitionTree> fields, const DynamicsModel& model) {
    const Cell& c = tree.cell(id);
    std::vector<CellId> buf;
    double range = 0.0;
    for (const ImageOutcome& img : model.images(field, c.box, tree.closed_high_mask(id), action)) {
        const OutcomeSpread s = spread(img, fields, buf);
        range = std::max(range, s.max - s.min);
    }
    return range;
}

BellmanResult bellman_update(const PartitionTree& tree, std::size_t field, CellId id,
                             std::span<const PartitionTree> fields, const DynamicsModel& model) {
    const Cell& c = tree.cell(id);
    BellmanResult r;
    r.per_action.assign(model.action_count(), std::numeric_limits<double>::quiet_NaN());
    if (pinned(c)) {
        r.prob = c.prob;
        for (std::size_t a : c.actions.members()) r.per_action[a] = c.prob;
        return r;
    }
    if (c.actions.empty()) throw ValidationError("cell " + std::to_string(id) + " has not been verified");
    const std::uint32_t closed = tree.closed_high_mask(id);
    std::vector<CellId> buf;
    for (std::size_t a : c.actions.members()) {
        double value = 0.0;
        for (const ImageOutcome& img : model.images(field, c.box, closed, a)) {
            const OutcomeSpread s = spread(img, fields, buf);
            r.transition_range = std::max(r.transition_range, s.max - s.min);
            value += img.probability * s.max;
        }
        r.per_action[a] = std::min(value, 1.0);
        r.prob = std::max(r.prob, r.per_action[a]);
    }
    return r;
}

double action_range(const Cell& cell) {
    if (cell.actions.size() <= 1 || cell.per_action_prob.empty()) return 0.0;
    double lo = 1.0, hi = 0.0;
    for (std::size_t a : cell.actions.members()) {
        lo = std::min(lo, cell.per_action_prob[a]);
        hi = std::max(hi, cell.per_action_prob[a]);
    }
    return hi - lo;
}

// ------------------------------------------------------------------ engine

namespace {

template <typename Fn>
void parallel_for(std::size_t n, unsigned threads, Fn&& fn) {
    if (threads <= 1 || n < 64) {
        for (std::size_t i = 0; i < n; ++i) fn(i);
        return;
    }
    const std::size_t workers = std::min<std::size_t>(threads, n);
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (std::size_t w = 0; w < workers; ++w) {
        pool.emplace_back([&, w] {
            for (std::size_t i = w; i < n; i += workers) fn(i);
        });
    }
    for (auto& t : pool) t.join();
}

struct CellRef {
    std::size_t field;
    CellId id;
};

class Engine {
public:
    Engine(std::span<const Network> nets, const DynamicsModel& model, const CheckConfig& config, ProbField& out)
        : nets_(nets), model_(model), config_(config), out_(out) {
        if (config_.min_size.size() != model_.state_dim()) {
            throw DimensionError("min_size has " + std::to_string(config_.min_size.size()) +
                                 " entries, model state has " + std::to_string(model_.state_dim()));
        }
        for (double m : config_.min_size) {
            if (!(m > 0.0)) throw ValidationError("min_size entries must be strictly positive");
        }
        if (!(config_.convergence_eps > 0.0)) throw ValidationError("convergence_eps must be positive");
        if (std::isnan(config_.transition_threshold) || config_.transition_threshold < 0.0) {
            throw ValidationError("transition threshold must be non-negative");
        }
        for (std::size_t f = 0; f < model_.field_count(); ++f) embeddings_.push_back(model_.embedding(f));
    }

    void initialise() {
        for (std::size_t f = 0; f < out_.fields.size(); ++f) {
            PartitionTree& tree = out_.fields[f];
            for (CellId id : tree.leaves()) {
                if (tree.cell(id).actions.empty()) reverify(f, id, ActionSet::all(model_.action_count()));
                reset(f, id);
            }
            if (config_.refine_unsafe_boundary) refine_unsafe_boundary(f);
        }
        out_.stats.leaves_initial = out_.leaf_count();
    }

    struct SweepResult {
        double delta = 0.0;
        std::size_t splits = 0;
        std::vector<CellRef> created;
    };

    /// One Jacobi sweep over `work`: evaluate against the current snapshot, then apply values and splits.
    SweepResult sweep(const std::vector<CellRef>& work, std::size_t sweep_index) {
        const double t_thr = config_.online_splits ? config_.transition_threshold
                                                   : std::numeric_limits<double>::infinity();
        const double a_thr = config_.online_splits ? config_.action_threshold.at(sweep_index)
                                                   : std::numeric_limits<double>::infinity();
        enum class Kind { Value, TransitionSplit, ActionSplit };
        struct Pending {
            Kind kind = Kind::Value;
            BellmanResult result;
        };
        std::vector<Pending> pending(work.size());
        const std::span<const PartitionTree> fields(out_.fields);

        parallel_for(work.size(), config_.threads, [&](std::size_t i) {
            const auto [f, id] = work[i];
            const PartitionTree& tree = out_.fields[f];
            const Cell& c = tree.cell(id);
            Pending& p = pending[i];
            p.result = bellman_update(tree, f, id, fields, model_);
            const bool splittable = !splittable_dims(c.box, config_.min_size).empty();
            if (splittable && p.result.transition_range > t_thr) {
                p.kind = Kind::TransitionSplit;
                return;
            }
            double lo = 1.0, hi = 0.0;
            for (std::size_t a : c.actions.members()) {
                lo = std::min(lo, p.result.per_action[a]);
                hi = std::max(hi, p.result.per_action[a]);
            }
            const double a_range = c.actions.size() > 1 ? hi - lo : 0.0;
            if (splittable && a_range > a_thr) p.kind = Kind::ActionSplit;
        });

        SweepResult res;
        for (std::size_t i = 0; i < work.size(); ++i) {
            if (pending[i].kind != Kind::Value) continue;
            Cell& c = out_.fields[work[i].field].cell(work[i].id);
            res.delta = std::max(res.delta, std::abs(pending[i].result.prob - c.prob));
            c.prob = pending[i].result.prob;
            c.per_action_prob = std::move(pending[i].result.per_action);
        }
        for (std::size_t i = 0; i < work.size(); ++i) {
            if (pending[i].kind == Kind::Value) continue;
            if (pending[i].kind == Kind::TransitionSplit) {
                ++out_.stats.transition_splits;
            } else {
                ++out_.stats.action_splits;
            }
            ++res.splits;
            for (CellId child : split_and_reverify(work[i].field, work[i].id)) {
                res.created.push_back({work[i].field, child});
            }
        }
        return res;
    }

    std::vector<CellRef> active_cells(const std::vector<std::size_t>& field_ids) const {
        std::vector<CellRef> work;
        for (std::size_t f : field_ids) {
            const PartitionTree& tree = out_.fields[f];
            for (CellId id : tree.leaves()) {
                if (!pinned(tree.cell(id))) work.push_back({f, id});
            }
        }
        return work;
    }

    std::vector<CellRef> unpinned(const std::vector<CellRef>& refs) const {
        std::vector<CellRef> out;
        for (const CellRef& r : refs) {
            if (!pinned(out_.fields[r.field].cell(r.id))) out.push_back(r);
        }
        return out;
    }

private:
    void reset(std::size_t f, CellId id) {
        Cell& c = out_.fields[f].cell(id);
        c.in_unsafe = model_.unsafe(f, c.box);
        c.absorbing = !c.in_unsafe && model_.absorbing_safe(f, c.box);
        if (c.in_unsafe) {
            c.prob = 1.0;
        } else if (c.absorbing) {
            c.prob = 0.0;
        }
        if (c.in_unsafe || c.absorbing) {
            c.per_action_prob.assign(model_.action_count(), std::numeric_limits<double>::quiet_NaN());
            for (std::size_t a : c.actions.members()) c.per_action_prob[a] = c.prob;
        }
    }

    void reverify(std::size_t f, CellId id, ActionSet candidates) {
        Cell& c = out_.fields[f].cell(id);
        if (candidates.size() <= 1) {
            c.actions = candidates;
            return;
        }
        const std::size_t net = model_.network_for_field(f);
        if (net >= nets_.size()) throw ValidationError("no network supplied for field " + model_.field_label(f));
        c.actions = possible_actions(nets_[net], embeddings_[f].lift(c.box), candidates, config_.verifier);
        ++out_.stats.reverify_calls;
    }

    std::vector<CellId> split_and_reverify(std::size_t f, CellId id) {
        PartitionTree& tree = out_.fields[f];
        const auto dims = splittable_dims(tree.cell(id).box, config_.min_size);
        const ActionSet parent_actions = tree.cell(id).actions;
        auto children = tree.split(id, dims);
        for (CellId child : children) {
            reverify(f, child, parent_actions);
            reset(f, child);
        }
        return children;
    }

    /// Cell lies partly inside the unsafe set, or partly inside the absorbing set.
    bool straddles(std::size_t f, const Box& b) const {
        if (model_.unsafe(f, b)) return !model_.inside_unsafe(f, b);
        return model_.touches_absorbing(f, b) && !model_.absorbing_safe(f, b);
    }

    void refine_unsafe_boundary(std::size_t f) {
        PartitionTree& tree = out_.fields[f];
        std::vector<CellId> stack;
        for (CellId id : tree.leaves()) {
            if (straddles(f, tree.cell(id).box)) stack.push_back(id);
        }
        while (!stack.empty()) {
            const CellId id = stack.back();
            stack.pop_back();
            const Box box = tree.cell(id).box;
            const auto splittable = splittable_dims(box, config_.min_size);
            if (splittable.empty()) continue;
            // Prefer dimensions along which some half stops straddling the boundary.
            std::vector<std::size_t> dims;
            for (std::size_t k : splittable) {
                const double mid = std::midpoint(box.lows[k], box.highs[k]);
                Box lower = box, upper = box;
                lower.highs[k] = mid;
                upper.lows[k] = mid;
                if (!straddles(f, lower) || !straddles(f, upper)) dims.push_back(k);
            }
            if (dims.empty()) dims = splittable;
            const ActionSet parent_actions = tree.cell(id).actions;
            ++out_.stats.boundary_splits;
            for (CellId child : tree.split(id, dims)) {
                Cell& c = tree.cell(child);
                c.prob = 0.0;
                c.per_action_prob.clear();
                if (!model_.unsafe(f, c.box)) reverify(f, child, parent_actions);
                reset(f, child);
                if (straddles(f, c.box)) stack.push_back(child);
            }
        }
    }

    std::span<const Network> nets_;
    const DynamicsModel& model_;
    const CheckConfig& config_;
    ProbField& out_;
    std::vector<InputEmbedding> embeddings_;
};

ProbField make_field(std::vector<PartitionTree> fields, const DynamicsModel& model) {
    if (fields.size() != model.field_count()) {
        throw ValidationError("expected " + std::to_string(model.field_count()) + " partitions, got " +
                              std::to_string(fields.size()));
    }
    for (const auto& t : fields) {
        if (t.root_box() != model.domain()) throw ValidationError("partition root does not match the model domain");
    }
    ProbField pf;
    pf.fields = std::move(fields);
    pf.action_labels = model.action_labels();
    for (std::size_t f = 0; f < model.field_count(); ++f) pf.field_labels.push_back(model.field_label(f));
    return pf;
}

void check_networks(std::span<const Network> nets, const DynamicsModel& model) {
    if (nets.size() != model.network_count()) {
        throw ValidationError("model needs " + std::to_string(model.network_count()) + " network(s), got " +
                              std::to_string(nets.size()));
    }
    const auto labels = model.action_labels();
    for (std::size_t f = 0; f < model.field_count(); ++f) {
        const Network& net = nets[model.network_for_field(f)];
        if (net.action_labels() != labels) {
            throw ValidationError("network action labels do not match the model's actions for field " +
                                  model.field_label(f));
        }
        if (net.input_dim() != model.embedding(f).input_dim()) {
            throw ValidationError("network input dimension " + std::to_string(net.input_dim()) +
                                  " does not match the model's embedding");
        }
    }
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

}  // namespace

std::vector<PartitionTree> verify_fields(std::span<const Network> nets, const DynamicsModel& model,
                                         const CheckConfig& config, VerifierStats& stats) {
    check_networks(nets, model);
    AdaptiveConfig ac{config.verify_min_size.empty() ? config.min_size : config.verify_min_size, config.strategy,
                      config.verifier};
    std::vector<PartitionTree> fields;
    fields.reserve(model.field_count());
    for (std::size_t f = 0; f < model.field_count(); ++f) {
        auto r = adaptive_verify(nets[model.network_for_field(f)], model.domain(), ac, model.embedding(f));
        stats.merge(r.stats);
        fields.push_back(std::move(r.tree));
    }
    return fields;
}

ProbField check_partitioned(std::vector<PartitionTree> fields, std::span<const Network> nets,
                            const DynamicsModel& model, const CheckConfig& config, const SweepObserver& observer) {
    const auto t0 = std::chrono::steady_clock::now();
    ProbField pf = make_field(std::move(fields), model);
    Engine engine(nets, model, config, pf);
    engine.initialise();

    std::vector<std::size_t> all(model.field_count());
    for (std::size_t f = 0; f < all.size(); ++f) all[f] = f;
    for (std::size_t s = 0; s < config.max_sweeps; ++s) {
        pf.stats.leaves_before_final_sweep = pf.leaf_count();
        const auto res = engine.sweep(engine.active_cells(all), s);
        ++pf.stats.sweeps;
        pf.stats.final_delta = res.delta;
        if (observer) observer(s, pf);
        if (res.splits == 0 && res.delta < config.convergence_eps) {
            pf.stats.converged = true;
            break;
        }
    }
    pf.stats.leaves_final = pf.leaf_count();
    pf.stats.wall_time += seconds_since(t0);
    return pf;
}

ProbField check(std::span<const Network> nets, const DynamicsModel& model, const CheckConfig& config,
                const SweepObserver& observer) {
    const auto t0 = std::chrono::steady_clock::now();
    VerifierStats vs;
    auto fields = verify_fields(nets, model, config, vs);
    ProbField pf = check_partitioned(std::move(fields), nets, model, config, observer);
    pf.stats.adaptive = vs;
    pf.stats.wall_time = seconds_since(t0);
    return pf;
}

ProbField check_layered(std::span<const Network> nets, const DynamicsModel& model, const CheckConfig& config) {
    const auto t0 = std::chrono::steady_clock::now();
    std::map<std::size_t, std::vector<std::size_t>> layers;
    for (std::size_t f = 0; f < model.field_count(); ++f) {
        const auto layer = model.field_layer(f);
        if (!layer) throw ValidationError("model " + model.name() + " is not layered");
        layers[*layer].push_back(f);
        for (std::size_t a = 0; a < model.action_count(); ++a) {
            for (const auto& o : model.outcomes(f, a)) {
                const auto target = model.field_layer(o.target_field);
                if (!target || *target >= *layer) {
                    throw ValidationError("field " + model.field_label(f) + " has a transition that does not lower its layer");
                }
            }
        }
    }

    VerifierStats vs;
    ProbField pf = make_field(verify_fields(nets, model, config, vs), model);
    pf.stats.adaptive = vs;
    Engine engine(nets, model, config, pf);
    engine.initialise();

    std::size_t sweep_index = 0;
    bool all_settled = true;
    for (const auto& [layer, field_ids] : layers) {
        // Successors live in lower layers, which are final: one pass fixes every
        // unsplit cell, later passes only visit freshly created children.
        auto work = engine.active_cells(field_ids);
        std::size_t passes = 0;
        while (!work.empty()) {
            if (passes == config.max_sweeps) {
                all_settled = false;
                break;
            }
            pf.stats.leaves_before_final_sweep = pf.leaf_count();
            auto res = engine.sweep(work, sweep_index);
            ++passes;
            ++sweep_index;
            ++pf.stats.sweeps;
            work = engine.unpinned(res.created);
        }
        double layer_max = 0.0;
        for (std::size_t f : field_ids) {
            if (model.network_for_field(f) == config.readout_network) layer_max = std::max(layer_max, pf.max_prob(f));
        }
        if (pf.layer_max.size() <= layer) pf.layer_max.resize(layer + 1, 0.0);
        pf.layer_max[layer] = layer_max;
    }
    pf.stats.converged = all_settled;
    pf.stats.final_delta = 0.0;
    pf.stats.leaves_final = pf.leaf_count();
    pf.stats.wall_time = seconds_since(t0);
    return pf;
}

}  // namespace cellcheck
