#include "cellcheck/io.hpp"

#include "cellcheck/error.hpp"

#include <charconv>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>

namespace cellcheck {

using nlohmann::json;

namespace {

json box_json(const Box& b) { return json{{"low", b.lows}, {"high", b.highs}}; }

Box box_from(const json& j) { return Box(j.at("low").get<std::vector<double>>(), j.at("high").get<std::vector<double>>()); }

std::vector<std::string> action_names(ActionSet s, const std::vector<std::string>& labels) {
    std::vector<std::string> out;
    for (std::size_t a : s.members()) out.push_back(labels.at(a));
    return out;
}

std::size_t index_of(const std::vector<std::string>& labels, const std::string& name, const char* what) {
    for (std::size_t i = 0; i < labels.size(); ++i) {
        if (labels[i] == name) return i;
    }
    throw ValidationError(std::string("unknown ") + what + " '" + name + "'");
}

/// Reads non-blank lines as JSON documents, tracking line numbers.
class JsonLines {
public:
    JsonLines(std::istream& in, std::string source) : in_(in), source_(std::move(source)) {}

    bool next(json& out) {
        std::string line;
        while (std::getline(in_, line)) {
            ++line_;
            if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
            try {
                out = json::parse(line);
            } catch (const json::exception& e) {
                throw ParseError(source_, line_, e.what());
            }
            return true;
        }
        return false;
    }

    [[noreturn]] void fail(const std::string& what) const { throw ParseError(source_, line_, what); }
    std::size_t line() const { return line_; }

    json header(const std::string& kind) {
        json h;
        if (!next(h)) fail("empty file");
        if (!h.is_object() || h.value("format", "") != kFormatVersion) {
            fail(std::string("missing header record with format ") + kFormatVersion);
        }
        if (!kind.empty() && h.value("kind", "") != kind) fail("expected kind '" + kind + "'");
        return h;
    }

private:
    std::istream& in_;
    std::string source_;
    std::size_t line_ = 0;
};

json header_record(const char* kind) { return json{{"format", kFormatVersion}, {"kind", kind}}; }

void write_leaves(std::ostream& out, std::span<const PartitionTree> fields, const std::vector<std::string>& field_labels,
                  const std::vector<std::string>& action_labels, bool with_probs, const json& extra, const char* kind) {
    if (fields.empty()) throw ValidationError("nothing to export");
    if (field_labels.size() != fields.size()) throw ValidationError("field label count does not match");
    json h = header_record(kind);
    h["domain"] = box_json(fields.front().root_box());
    h["fields"] = field_labels;
    h["actions"] = action_labels;
    std::size_t leaves = 0;
    for (const auto& t : fields) leaves += t.leaf_count();
    h["leaves"] = leaves;
    for (const auto& [k, v] : extra.items()) h[k] = v;
    out << h.dump() << '\n';
    for (std::size_t f = 0; f < fields.size(); ++f) {
        for (CellId id : fields[f].leaves()) {
            const Cell& c = fields[f].cell(id);
            json r{{"field", field_labels[f]}, {"id", id}, {"low", c.box.lows}, {"high", c.box.highs},
                   {"actions", action_names(c.actions, action_labels)}};
            if (with_probs) {
                r["prob"] = c.prob;
                json per = json::object();
                for (std::size_t a : c.actions.members()) {
                    if (a < c.per_action_prob.size() && !std::isnan(c.per_action_prob[a])) {
                        per[action_labels[a]] = c.per_action_prob[a];
                    }
                }
                r["per_action"] = per;
                r["unsafe"] = c.in_unsafe;
                r["absorbing"] = c.absorbing;
            }
            out << r.dump() << '\n';
        }
    }
    if (!out) throw IoError("write failed");
}

struct RebuildError {
    std::size_t line;
    std::string what;
};

struct LeafRecord {
    Box box;
    Cell payload;
    std::size_t line = 0;
};

/// Rebuilds the subtree at `node` from the records inside it. Any midpoint
/// cut that no record crosses is a cut of the original tree, so taking the
/// first one reproduces the same leaves.
void rebuild(PartitionTree& tree, CellId node, std::vector<const LeafRecord*> recs) {
    const Box region = tree.cell(node).box;
    if (recs.empty()) throw RebuildError{0, "leaves do not tile the domain"};
    if (recs.size() == 1 && recs.front()->box == region) {
        Cell& c = tree.cell(node);
        const Cell& p = recs.front()->payload;
        c.actions = p.actions;
        c.prob = p.prob;
        c.in_unsafe = p.in_unsafe;
        c.absorbing = p.absorbing;
        c.per_action_prob = p.per_action_prob;
        return;
    }
    for (std::size_t i = 0; i < region.dim(); ++i) {
        const double mid = std::midpoint(region.lows[i], region.highs[i]);
        bool narrower = false, crossed = false;
        for (const LeafRecord* r : recs) {
            if (r->box.highs[i] > mid && r->box.lows[i] < mid) crossed = true;
            if (r->box.width(i) < region.width(i)) narrower = true;
        }
        if (crossed || !narrower) continue;
        const std::size_t dims[] = {i};
        std::vector<CellId> kids;
        try {
            kids = tree.split(node, dims);
        } catch (const PartitionError& e) {
            throw RebuildError{recs.front()->line, std::string("cannot rebuild leaf: ") + e.what()};
        }
        std::vector<const LeafRecord*> lower, upper;
        for (const LeafRecord* r : recs) (r->box.lows[i] >= mid ? upper : lower).push_back(r);
        rebuild(tree, kids[0], std::move(lower));
        rebuild(tree, kids[1], std::move(upper));
        return;
    }
    throw RebuildError{recs.front()->line, "leaves overlap or are not aligned with a bisection tree"};
}

// ---------------------------------------------------------------- csv

std::vector<std::string> split_csv(const std::string& line) {
    std::vector<std::string> out;
    std::string cell;
    std::stringstream ss(line);
    while (std::getline(ss, cell, ',')) {
        const auto b = cell.find_first_not_of(" \t\r");
        const auto e = cell.find_last_not_of(" \t\r");
        out.push_back(b == std::string::npos ? "" : cell.substr(b, e - b + 1));
    }
    if (!line.empty() && line.back() == ',') out.emplace_back();
    return out;
}

double parse_double(const std::string& s, const std::string& source, std::size_t line) {
    double v = 0.0;
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || ptr != s.data() + s.size()) throw ParseError(source, line, "invalid number '" + s + "'");
    if (!std::isfinite(v)) throw NonFiniteError(source + ":" + std::to_string(line) + ": non-finite value");
    return v;
}

std::size_t parse_count(const std::string& s, const std::string& source, std::size_t line) {
    std::size_t v = 0;
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || ptr != s.data() + s.size()) throw ParseError(source, line, "invalid count '" + s + "'");
    return v;
}

/// Yields the data rows of a CSV file with a header row, skipping blank and '#' lines.
class CsvReader {
public:
    CsvReader(std::istream& in, std::string source) : in_(in), source_(std::move(source)) {
        if (!next(header_)) throw ParseError(source_, 0, "missing header row");
    }
    bool next(std::vector<std::string>& row) {
        std::string line;
        while (std::getline(in_, line)) {
            ++line_;
            if (line.find_first_not_of(" \t\r") == std::string::npos || line[line.find_first_not_of(" \t")] == '#') {
                continue;
            }
            row = split_csv(line);
            return true;
        }
        return false;
    }
    const std::vector<std::string>& header() const { return header_; }
    std::size_t line() const { return line_; }
    const std::string& source() const { return source_; }

private:
    std::istream& in_;
    std::string source_;
    std::vector<std::string> header_;
    std::size_t line_ = 0;
};

std::string fmt(double v) {
    if (std::isnan(v)) return "nan";
    std::ostringstream os;
    os.precision(std::numeric_limits<double>::max_digits10);
    os << v;
    return os.str();
}

}  // namespace

// ------------------------------------------------------------- partitions

std::size_t PartitionFile::field_index(const std::string& label) const { return index_of(field_labels, label, "field"); }

void write_partition(std::ostream& out, std::span<const PartitionTree> fields,
                     const std::vector<std::string>& field_labels, const std::vector<std::string>& action_labels,
                     const json& extra) {
    write_leaves(out, fields, field_labels, action_labels, false, extra, "partition");
}

void write_field(std::ostream& out, const ProbField& field, const json& extra) {
    json e = extra;
    const auto& s = field.stats;
    e["stats"] = {{"sweeps", s.sweeps},
                  {"final_delta", s.final_delta},
                  {"converged", s.converged},
                  {"verifier_calls", s.adaptive.verifier_calls},
                  {"reverify_calls", s.reverify_calls},
                  {"transition_splits", s.transition_splits},
                  {"action_splits", s.action_splits},
                  {"boundary_splits", s.boundary_splits},
                  {"leaves_initial", s.leaves_initial},
                  {"leaves_before_final_sweep", s.leaves_before_final_sweep},
                  {"leaves_final", s.leaves_final},
                  {"wall_time", s.wall_time}};
    if (!field.layer_max.empty()) e["layer_max"] = field.layer_max;
    write_leaves(out, field.fields, field.field_labels, field.action_labels, true, e, "field");
}

PartitionFile read_partition(std::istream& in, const std::string& source) {
    JsonLines reader(in, source);
    PartitionFile pf;
    pf.header = reader.header("");
    const std::string kind = pf.header.value("kind", "");
    if (kind != "partition" && kind != "field") reader.fail("expected a partition or field file");
    pf.has_probs = kind == "field";
    try {
        pf.domain = box_from(pf.header.at("domain"));
        pf.field_labels = pf.header.at("fields").get<std::vector<std::string>>();
        pf.action_labels = pf.header.at("actions").get<std::vector<std::string>>();
    } catch (const json::exception& e) {
        reader.fail(std::string("bad header: ") + e.what());
    } catch (const Error& e) {
        reader.fail(std::string("bad header: ") + e.what());
    }
    if (pf.field_labels.empty()) reader.fail("header lists no fields");
    if (pf.action_labels.size() > ActionSet::kMaxActions) reader.fail("too many actions");
    std::vector<std::vector<LeafRecord>> records(pf.field_labels.size());

    json r;
    while (reader.next(r)) {
        try {
            LeafRecord rec{box_from(r), {}, reader.line()};
            if (!pf.domain.encloses(rec.box)) reader.fail("leaf lies outside the domain");
            Cell& c = rec.payload;
            for (const auto& name : r.at("actions").get<std::vector<std::string>>()) {
                c.actions.insert(index_of(pf.action_labels, name, "action"));
            }
            if (pf.has_probs) {
                c.prob = r.at("prob").get<double>();
                if (!(c.prob >= 0.0 && c.prob <= 1.0)) reader.fail("probability outside [0, 1]");
                c.in_unsafe = r.value("unsafe", false);
                c.absorbing = r.value("absorbing", false);
                c.per_action_prob.assign(pf.action_labels.size(), std::numeric_limits<double>::quiet_NaN());
                const json per = r.value("per_action", json::object());
                for (const auto& [name, v] : per.items()) {
                    c.per_action_prob[index_of(pf.action_labels, name, "action")] = v.get<double>();
                }
            }
            records[pf.field_index(r.at("field").get<std::string>())].push_back(std::move(rec));
        } catch (const json::exception& e) {
            reader.fail(e.what());
        } catch (const ParseError&) {
            throw;
        } catch (const Error& e) {
            reader.fail(e.what());
        }
    }
    for (std::size_t f = 0; f < records.size(); ++f) {
        PartitionTree& tree = pf.fields.emplace_back(pf.domain);
        std::vector<const LeafRecord*> ptrs;
        for (const auto& rec : records[f]) ptrs.push_back(&rec);
        try {
            rebuild(tree, tree.root(), std::move(ptrs));
        } catch (const RebuildError& e) {
            throw ParseError(source, e.line, "field " + pf.field_labels[f] + ": " + e.what);
        }
    }
    return pf;
}

// ------------------------------------------------------------------ tables

void write_policy_table(std::ostream& out, const TabularPolicy& policy, const std::vector<std::string>& field_labels,
                        const std::vector<std::string>& action_labels) {
    if (field_labels.size() != policy.actions.size()) throw ValidationError("field label count does not match");
    json h = header_record("table");
    h["axes"] = policy.grid.axes();
    h["fields"] = field_labels;
    h["actions"] = action_labels;
    out << h.dump() << '\n';
    for (std::size_t f = 0; f < policy.actions.size(); ++f) {
        out << json{{"field", field_labels[f]}, {"actions", policy.actions[f]}}.dump() << '\n';
    }
    if (!out) throw IoError("write failed");
}

TableFile read_policy_table(std::istream& in, const std::string& source) {
    JsonLines reader(in, source);
    const json h = reader.header("table");
    try {
        Grid grid(h.at("axes").get<std::vector<std::vector<double>>>());
        TableFile t{TabularPolicy{grid, {}}, h.at("fields").get<std::vector<std::string>>(),
                    h.at("actions").get<std::vector<std::string>>()};
        t.policy.actions.resize(t.field_labels.size());
        std::vector<char> seen(t.field_labels.size(), 0);
        json r;
        while (reader.next(r)) {
            const std::size_t f = index_of(t.field_labels, r.at("field").get<std::string>(), "field");
            if (seen[f]) reader.fail("duplicate field record");
            seen[f] = 1;
            t.policy.actions[f] = r.at("actions").get<std::vector<std::size_t>>();
            if (t.policy.actions[f].size() != grid.node_count()) reader.fail("wrong number of table entries");
            for (std::size_t a : t.policy.actions[f]) {
                if (a >= t.action_labels.size()) reader.fail("table entry names an unknown action");
            }
        }
        for (std::size_t f = 0; f < seen.size(); ++f) {
            if (!seen[f]) reader.fail("missing table for field " + t.field_labels[f]);
        }
        return t;
    } catch (const json::exception& e) {
        reader.fail(e.what());
    } catch (const ParseError&) {
        throw;
    } catch (const Error& e) {
        reader.fail(e.what());
    }
}

std::size_t ExactFile::field_index(const std::string& label) const { return index_of(field_labels, label, "field"); }

void write_exact(std::ostream& out, const ExactResult& result, const std::vector<std::string>& field_labels) {
    if (field_labels.size() != result.values.size()) throw ValidationError("field label count does not match");
    json h = header_record("exact");
    h["axes"] = result.grid.axes();
    h["fields"] = field_labels;
    h["iterations"] = result.iterations;
    h["final_delta"] = result.final_delta;
    h["converged"] = result.converged;
    out << h.dump() << '\n';
    for (std::size_t f = 0; f < result.values.size(); ++f) {
        out << json{{"field", field_labels[f]}, {"values", result.values[f]}}.dump() << '\n';
    }
    if (!out) throw IoError("write failed");
}

ExactFile read_exact(std::istream& in, const std::string& source) {
    JsonLines reader(in, source);
    const json h = reader.header("exact");
    try {
        Grid grid(h.at("axes").get<std::vector<std::vector<double>>>());
        ExactFile e{ExactResult{grid, {}, h.value("iterations", std::size_t{0}), h.value("final_delta", 0.0),
                                h.value("converged", false)},
                    h.at("fields").get<std::vector<std::string>>()};
        e.result.values.resize(e.field_labels.size());
        json r;
        while (reader.next(r)) {
            const std::size_t f = e.field_index(r.at("field").get<std::string>());
            e.result.values[f] = r.at("values").get<std::vector<double>>();
            if (e.result.values[f].size() != grid.node_count()) reader.fail("wrong number of values");
        }
        for (std::size_t f = 0; f < e.field_labels.size(); ++f) {
            if (e.result.values[f].empty()) reader.fail("missing values for field " + e.field_labels[f]);
        }
        return e;
    } catch (const json::exception& ex) {
        reader.fail(ex.what());
    } catch (const ParseError&) {
        throw;
    } catch (const Error& ex) {
        reader.fail(ex.what());
    }
}

// --------------------------------------------------------------------- csv

std::vector<StartState> read_starts(std::istream& in, const std::vector<std::string>& field_labels,
                                    std::size_t state_dim, const std::string& source) {
    CsvReader csv(in, source);
    if (csv.header().size() != state_dim + 1 || csv.header().front() != "field") {
        throw ParseError(source, csv.line(),
                         "expected header 'field' followed by " + std::to_string(state_dim) + " state columns");
    }
    std::vector<StartState> out;
    std::vector<std::string> row;
    while (csv.next(row)) {
        if (row.size() != state_dim + 1) throw ParseError(source, csv.line(), "wrong number of columns");
        StartState s;
        const std::string& f = row.front();
        auto label = std::find(field_labels.begin(), field_labels.end(), f);
        if (label != field_labels.end()) {
            s.field = static_cast<std::size_t>(label - field_labels.begin());
        } else {
            s.field = parse_count(f, source, csv.line());
            if (s.field >= field_labels.size()) throw ParseError(source, csv.line(), "unknown field '" + f + "'");
        }
        for (std::size_t i = 1; i < row.size(); ++i) s.state.push_back(parse_double(row[i], source, csv.line()));
        out.push_back(std::move(s));
    }
    return out;
}

void write_mc_csv(std::ostream& out, const std::vector<McRow>& rows) {
    const std::size_t d = rows.empty() ? 0 : rows.front().state.size();
    out << "field";
    for (std::size_t i = 0; i < d; ++i) out << ",x" << i;
    out << ",p_mc,stderr,n,hits\n";
    for (const McRow& r : rows) {
        if (r.state.size() != d) throw ValidationError("rows have mixed state dimensions");
        out << r.field;
        for (double v : r.state) out << ',' << fmt(v);
        out << ',' << fmt(r.estimate.estimate) << ',' << fmt(r.estimate.std_error) << ',' << r.estimate.n << ','
            << r.estimate.hits << '\n';
    }
    if (!out) throw IoError("write failed");
}

std::vector<McRow> read_mc_csv(std::istream& in, const std::string& source) {
    CsvReader csv(in, source);
    const auto& h = csv.header();
    if (h.size() < 5 || h.front() != "field" || h[h.size() - 4] != "p_mc") {
        throw ParseError(source, csv.line(), "not a Monte Carlo CSV");
    }
    const std::size_t d = h.size() - 5;
    std::vector<McRow> rows;
    std::vector<std::string> row;
    while (csv.next(row)) {
        if (row.size() != h.size()) throw ParseError(source, csv.line(), "wrong number of columns");
        McRow r;
        r.field = row[0];
        for (std::size_t i = 0; i < d; ++i) r.state.push_back(parse_double(row[1 + i], source, csv.line()));
        r.estimate.estimate = parse_double(row[1 + d], source, csv.line());
        r.estimate.std_error = parse_double(row[2 + d], source, csv.line());
        r.estimate.n = parse_count(row[3 + d], source, csv.line());
        r.estimate.hits = parse_count(row[4 + d], source, csv.line());
        rows.push_back(std::move(r));
    }
    return rows;
}

void write_tau_curve(std::ostream& out, std::span<const double> layer_max) {
    out << "tau,max_prob\n";
    for (std::size_t t = 0; t < layer_max.size(); ++t) out << t << ',' << fmt(layer_max[t]) << '\n';
    if (!out) throw IoError("write failed");
}

std::vector<CompareRow> compare(const PartitionFile& field, const std::vector<McRow>& mc, const ExactFile* exact) {
    if (!field.has_probs) throw ValidationError("compare needs a field file with probabilities");
    std::vector<CompareRow> rows;
    for (const McRow& q : mc) {
        CompareRow r;
        r.query = q;
        const std::size_t f = field.field_index(q.field);
        if (q.state.size() != field.domain.dim()) throw DimensionError("query state has the wrong dimension");
        const PartitionTree& tree = field.fields[f];
        r.p_check = tree.cell(tree.locate(q.state)).prob;
        if (exact) {
            const std::size_t ef = exact->field_index(q.field);
            r.p_exact = exact->result.nearest(ef, q.state);
            r.p_exact_multilinear = exact->result.multilinear(ef, q.state);
        } else {
            r.p_exact = r.p_exact_multilinear = std::numeric_limits<double>::quiet_NaN();
        }
        r.bound_holds = r.p_check >= q.estimate.estimate - 3.0 * q.estimate.std_error;
        rows.push_back(std::move(r));
    }
    return rows;
}

void write_compare_csv(std::ostream& out, const std::vector<CompareRow>& rows) {
    const std::size_t d = rows.empty() ? 0 : rows.front().query.state.size();
    out << "field";
    for (std::size_t i = 0; i < d; ++i) out << ",x" << i;
    out << ",p_check,p_mc,mc_stderr,p_exact,p_exact_multilinear,flag\n";
    for (const CompareRow& r : rows) {
        out << r.query.field;
        for (double v : r.query.state) out << ',' << fmt(v);
        out << ',' << fmt(r.p_check) << ',' << fmt(r.query.estimate.estimate) << ',' << fmt(r.query.estimate.std_error)
            << ',' << fmt(r.p_exact) << ',' << fmt(r.p_exact_multilinear) << ',' << (r.bound_holds ? "ok" : "violation")
            << '\n';
    }
    if (!out) throw IoError("write failed");
}

void write_manifest(const std::filesystem::path& path, json doc) {
    doc["format"] = kFormatVersion;
    auto out = open_output(path);
    out << doc.dump(2) << '\n';
    if (!out) throw IoError("cannot write " + path.string());
}

std::ofstream open_output(const std::filesystem::path& path) {
    if (path.has_parent_path()) {
        std::error_code ec;
        std::filesystem::create_directories(path.parent_path(), ec);
    }
    std::ofstream out(path);
    if (!out) throw IoError("cannot open " + path.string() + " for writing");
    return out;
}

std::ifstream open_input(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open " + path.string());
    return in;
}

}  // namespace cellcheck
