#include "mtrack/preprocess.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <map>
#include <numeric>
#include <ostream>
#include <set>
#include <tuple>

#include "mtrack/csv.hpp"
#include "mtrack/error.hpp"
#include "mtrack/model.hpp"

namespace mtrack {

// ---- Raw CSV ----------------------------------------------------------------

RawTrajectorySet read_raw_csv(std::istream& in) {
    const csv::Table table = csv::read_table(in);
    const auto& h = table.header;
    auto expect = [&](std::size_t pos, std::string_view name) {
        if (pos >= h.size() || h[pos] != name)
            throw ValidationError("column " + std::to_string(pos + 1) + ": expected '" +
                                  std::string(name) + "', found '" +
                                  (pos < h.size() ? h[pos] : std::string("<missing>")) + "'");
    };
    if (h.size() < 6)
        throw ValidationError("header needs sbj,trial,<factor...>,timestep,x,y; found " +
                              std::to_string(h.size()) + " columns");
    expect(0, "sbj");
    expect(1, "trial");
    const std::size_t nf = h.size() - 5;
    expect(2 + nf, "timestep");
    expect(3 + nf, "x");
    expect(4 + nf, "y");

    RawTrajectorySet set;
    std::set<std::string> seen;
    for (std::size_t f = 0; f < nf; ++f) {
        const std::string& name = h[2 + f];
        if (name.empty()) throw ValidationError("column " + std::to_string(3 + f) + ": empty factor name");
        if (!seen.insert(name).second) throw ValidationError("duplicate factor column '" + name + "'");
        set.factor_names.push_back(name);
    }

    set.records.reserve(table.rows.size());
    for (std::size_t r = 0; r < table.rows.size(); ++r) {
        const auto& row = table.rows[r];
        const std::string where = "line " + std::to_string(r + 2) + ": ";
        try {
            RawRecord rec;
            const auto sbj = csv::parse_int(row[0]);
            const auto trial = csv::parse_int(row[1]);
            const auto ts = csv::parse_int(row[2 + nf]);
            if (sbj < 1 || trial < 1 || ts < 1)
                throw ValidationError("sbj, trial and timestep must be positive integers");
            rec.sbj = static_cast<int>(sbj);
            rec.trial = static_cast<int>(trial);
            rec.timestep = static_cast<int>(ts);
            for (std::size_t f = 0; f < nf; ++f) {
                if (row[2 + f].empty())
                    throw ValidationError("empty label in column '" + set.factor_names[f] + "'");
                rec.levels.push_back(row[2 + f]);
            }
            rec.x = csv::parse_double(row[3 + nf]);
            rec.y = csv::parse_double(row[4 + nf]);
            if (!std::isfinite(rec.x) || !std::isfinite(rec.y))
                throw ValidationError("non-finite coordinate");
            set.records.push_back(std::move(rec));
        } catch (const ValidationError& e) {
            throw ValidationError(where + e.what());
        }
    }
    return set;
}

RawTrajectorySet read_raw_csv(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ValidationError("cannot open " + path.string());
    return read_raw_csv(in);
}

void write_raw_csv(std::ostream& out, const RawTrajectorySet& set) {
    std::vector<std::string> header{"sbj", "trial"};
    header.insert(header.end(), set.factor_names.begin(), set.factor_names.end());
    header.insert(header.end(), {"timestep", "x", "y"});
    csv::write_row(out, header);
    std::vector<std::string> fields;
    for (const auto& r : set.records) {
        fields.clear();
        fields.push_back(std::to_string(r.sbj));
        fields.push_back(std::to_string(r.trial));
        fields.insert(fields.end(), r.levels.begin(), r.levels.end());
        fields.push_back(std::to_string(r.timestep));
        fields.push_back(csv::format_double(r.x));
        fields.push_back(csv::format_double(r.y));
        csv::write_row(out, fields);
    }
}

// ---- Trajectory transforms --------------------------------------------------

std::vector<Point> resample_trajectory(std::span<const Point> points, std::size_t n) {
    if (points.size() < 2) throw ValidationError("resampling needs at least 2 points");
    if (n < 2) throw ValidationError("target length must be at least 2");
    const std::size_t m = points.size();
    if (m == n) return {points.begin(), points.end()};

    std::vector<Point> out(n);
    const std::size_t span_out = n - 1;
    for (std::size_t k = 0; k < n; ++k) {
        // source position k * (m-1) / (n-1), kept rational to hit grid points exactly
        const std::size_t num = k * (m - 1);
        const std::size_t i = num / span_out;
        const std::size_t rem = num % span_out;
        if (rem == 0) {
            out[k] = points[i];
            continue;
        }
        const double frac = static_cast<double>(rem) / static_cast<double>(span_out);
        const Point& a = points[i];
        const Point& b = points[i + 1];
        out[k] = {a.x + frac * (b.x - a.x), a.y + frac * (b.y - a.y)};
    }
    return out;
}

std::vector<Point> normalize_trajectory(std::span<const Point> points, std::string_view label) {
    if (points.empty()) throw ValidationError("empty trajectory " + std::string(label));
    const Point origin = points.front();
    const double dx = points.back().x - origin.x;
    const double dy = points.back().y - origin.y;
    if (dx == 0.0 || dy == 0.0)
        throw ValidationError("degenerate trajectory " + std::string(label) +
                              ": end point shares a coordinate with the start");
    // Scaling x by |dx| and mirroring right-ending paths is the same as dividing by -dx.
    std::vector<Point> out;
    out.reserve(points.size());
    for (const Point& p : points) out.push_back({-(p.x - origin.x) / dx, (p.y - origin.y) / dy});
    return out;
}

std::vector<double> project_atan2(std::span<const Point> points) {
    std::vector<double> out;
    out.reserve(points.size());
    for (std::size_t n = 0; n < points.size(); ++n) {
        if (n == 0) {
            out.push_back(kPi / 2.0);
            continue;
        }
        const double a = std::atan2(points[n].y, points[n].x);
        out.push_back(a <= 0.0 ? kAngleFloor : a);
    }
    return out;
}

// ---- Formula parsing ----------------------------------------------------------

std::size_t ColumnPlan::column_count() const {
    std::size_t total = 1;
    for (const Term& t : terms) {
        std::size_t prod = 1;
        for (std::size_t f : t.factors) prod *= factors[f].level_count - 1;
        total += prod;
    }
    return total;
}

namespace {

using TermList = std::vector<std::vector<std::size_t>>;

class FormulaParser {
public:
    FormulaParser(std::string_view src, std::span<const FactorLevels> factors)
        : src_(src), factors_(factors) {}

    TermList parse() {
        skip_ws();
        if (pos_ >= src_.size()) throw ParseError("empty formula", pos_);
        if (src_[pos_] != '~') throw ParseError("formula must start with '~'", pos_);
        ++pos_;
        skip_ws();
        if (pos_ >= src_.size()) throw ParseError("empty formula: no terms after '~'", pos_);
        TermList terms = parse_sum();
        skip_ws();
        if (pos_ < src_.size())
            throw ParseError(std::string("unexpected character '") + src_[pos_] + "'", pos_);
        return terms;
    }

private:
    TermList parse_sum() {
        TermList out = parse_product();
        while (accept('+')) append(out, parse_product());
        return out;
    }

    TermList parse_product() {
        TermList out = parse_interaction();
        while (accept('*')) {
            TermList rhs = parse_interaction();
            TermList cross;
            for (const auto& a : out)
                for (const auto& b : rhs) cross.push_back(merge(a, b));
            append(out, rhs);
            append(out, cross);
        }
        return out;
    }

    TermList parse_interaction() {
        std::vector<std::size_t> term = {parse_name()};
        while (accept(':')) term = merge(term, {parse_name()});
        return {term};
    }

    std::size_t parse_name() {
        skip_ws();
        const std::size_t start = pos_;
        auto ident_char = [](char c) {
            return std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '.';
        };
        while (pos_ < src_.size() && ident_char(src_[pos_])) ++pos_;
        if (start == pos_) {
            if (pos_ >= src_.size()) throw ParseError("expected a factor name, found end of formula", pos_);
            throw ParseError(std::string("expected a factor name, found '") + src_[pos_] + "'", pos_);
        }
        const std::string_view name = src_.substr(start, pos_ - start);
        for (std::size_t f = 0; f < factors_.size(); ++f)
            if (factors_[f].name == name) return f;
        throw ParseError("unknown factor '" + std::string(name) + "'", start);
    }

    bool accept(char op) {
        skip_ws();
        if (pos_ < src_.size() && src_[pos_] == op) {
            ++pos_;
            return true;
        }
        return false;
    }

    void skip_ws() {
        while (pos_ < src_.size() && std::isspace(static_cast<unsigned char>(src_[pos_]))) ++pos_;
    }

    static std::vector<std::size_t> merge(const std::vector<std::size_t>& a,
                                          const std::vector<std::size_t>& b) {
        std::vector<std::size_t> out = a;
        for (std::size_t f : b)
            if (std::find(out.begin(), out.end(), f) == out.end()) out.push_back(f);
        return out;
    }

    static void append(TermList& dst, const TermList& src) {
        dst.insert(dst.end(), src.begin(), src.end());
    }

    std::string_view src_;
    std::span<const FactorLevels> factors_;
    std::size_t pos_ = 0;
};

}  // namespace

ColumnPlan parse_formula(std::string_view formula, std::span<const FactorLevels> factors) {
    for (const auto& f : factors)
        if (f.level_count == 0) throw ValidationError("factor '" + f.name + "' has no levels");

    TermList raw = FormulaParser(formula, factors).parse();

    // Factor order inside a term follows the factor list so A:B and B:A coincide.
    for (auto& t : raw) std::sort(t.begin(), t.end());
    ColumnPlan plan;
    plan.formula = std::string(formula);
    plan.factors.assign(factors.begin(), factors.end());
    for (auto& t : raw) {
        Term term{t};
        if (std::find(plan.terms.begin(), plan.terms.end(), term) == plan.terms.end())
            plan.terms.push_back(std::move(term));
    }
    std::stable_sort(plan.terms.begin(), plan.terms.end(), [](const Term& a, const Term& b) {
        return a.factors.size() < b.factors.size();
    });
    return plan;
}

DesignMatrix build_design(const ColumnPlan& plan, std::span<const Factor> factors,
                          const std::vector<std::vector<std::size_t>>& assignment) {
    if (factors.size() != plan.factors.size())
        throw ValidationError("design: factor list does not match the column plan");
    const std::size_t J = assignment.size();
    DesignMatrix dm;
    dm.formula = plan.formula;
    dm.Z = Matrix(J, plan.column_count());
    dm.column_names.push_back("(Intercept)");
    for (std::size_t j = 0; j < J; ++j) {
        if (assignment[j].size() != factors.size())
            throw ValidationError("design: trial " + std::to_string(j + 1) + " has a wrong level count");
        dm.Z(j, 0) = 1.0;
    }

    std::size_t col = 1;
    for (const Term& term : plan.terms) {
        // Enumerate non-reference level combinations, first factor varying fastest.
        std::vector<std::size_t> lv(term.factors.size(), 1);
        std::size_t combos = 1;
        for (std::size_t f : term.factors) combos *= factors[f].levels.size() - 1;
        for (std::size_t c = 0; c < combos; ++c, ++col) {
            std::string name;
            for (std::size_t t = 0; t < term.factors.size(); ++t) {
                const Factor& fac = factors[term.factors[t]];
                if (t) name += ':';
                name += fac.name + "." + fac.levels[lv[t]];
            }
            dm.column_names.push_back(std::move(name));
            for (std::size_t j = 0; j < J; ++j) {
                bool on = true;
                for (std::size_t t = 0; t < term.factors.size(); ++t)
                    on = on && assignment[j][term.factors[t]] == lv[t];
                dm.Z(j, col) = on ? 1.0 : 0.0;
            }
            for (std::size_t t = 0; t < lv.size(); ++t) {
                if (++lv[t] < factors[term.factors[t]].levels.size()) break;
                lv[t] = 1;
            }
        }
    }
    return dm;
}

AssignMethod parse_assign_method(std::string_view name) {
    if (name == "symmetric") return AssignMethod::symmetric;
    if (name == "random") return AssignMethod::random;
    throw ValidationError("unknown Z method '" + std::string(name) + "' (expected symmetric or random)");
}

namespace {

/// Balanced level vector of length n over k levels, counts differing by at most one.
std::vector<std::size_t> balanced_levels(std::size_t n, std::size_t k) {
    std::vector<std::size_t> out(n);
    for (std::size_t i = 0; i < n; ++i) out[i] = i * k / n;
    return out;
}

void shuffle(std::vector<std::size_t>& v, Rng& rng) {
    for (std::size_t i = v.size(); i > 1; --i) {
        std::uniform_int_distribution<std::size_t> pick(0, i - 1);
        std::swap(v[i - 1], v[pick(rng)]);
    }
}

}  // namespace

GeneratedZ generate_Z(std::size_t J, std::span<const std::size_t> level_counts,
                      std::span<const AssignMethod> methods, std::string_view formula, Rng& rng) {
    if (J == 0) throw ValidationError("generate_Z: J must be positive");
    if (level_counts.empty()) throw ValidationError("generate_Z: at least one factor is required");
    if (methods.size() != level_counts.size())
        throw ValidationError("generate_Z: one assignment method per factor is required");

    GeneratedZ out;
    out.assignment.assign(J, std::vector<std::size_t>(level_counts.size(), 0));
    for (std::size_t f = 0; f < level_counts.size(); ++f) {
        const std::size_t k = level_counts[f];
        if (k == 0) throw ValidationError("generate_Z: factor Z" + std::to_string(f + 1) + " has 0 levels");
        Factor fac{"Z" + std::to_string(f + 1), {}};
        for (std::size_t l = 0; l < k; ++l) fac.levels.push_back(std::to_string(l + 1));
        out.factors.push_back(std::move(fac));

        if (methods[f] == AssignMethod::symmetric) {
            if (J % k != 0)
                throw ValidationError("generate_Z: J=" + std::to_string(J) + " is not divisible by " +
                                      std::to_string(k) + " levels of Z" + std::to_string(f + 1));
            for (std::size_t j = 0; j < J; ++j) out.assignment[j][f] = j / (J / k);
            continue;
        }

        // Random: balance within each cell of the factors assigned so far.
        std::map<std::vector<std::size_t>, std::vector<std::size_t>> cells;
        for (std::size_t j = 0; j < J; ++j) {
            std::vector<std::size_t> key(out.assignment[j].begin(), out.assignment[j].begin() + f);
            cells[key].push_back(j);
        }
        const bool stratify = std::all_of(cells.begin(), cells.end(),
                                          [k](const auto& c) { return c.second.size() % k == 0; });
        if (stratify) {
            for (const auto& [key, trials] : cells) {
                auto lv = balanced_levels(trials.size(), k);
                shuffle(lv, rng);
                for (std::size_t t = 0; t < trials.size(); ++t) out.assignment[trials[t]][f] = lv[t];
            }
        } else {
            auto lv = balanced_levels(J, k);
            shuffle(lv, rng);
            for (std::size_t j = 0; j < J; ++j) out.assignment[j][f] = lv[j];
        }
    }

    std::vector<FactorLevels> fl;
    for (const auto& fac : out.factors) fl.push_back({fac.name, fac.levels.size()});
    const ColumnPlan plan = parse_formula(formula, fl);
    out.design = build_design(plan, out.factors, out.assignment);
    return out;
}

// ---- Dataset ------------------------------------------------------------------

void ProcessedDataset::validate() const {
    const std::size_t cols = I * J;
    if (Y.rows() != N || Y.cols() != cols)
        throw ValidationError("Y must be N x (J*I) = " + std::to_string(N) + " x " + std::to_string(cols));
    if (D.rows() != N || D.cols() != cols) throw ValidationError("D must have the same shape as Y");
    if (Z.Z.rows() != J) throw ValidationError("Z must have J = " + std::to_string(J) + " rows");
    if (Z.Z.cols() == 0) throw ValidationError("Z has no columns");
}

namespace {

/// R-style level order: numeric when every label is an integer, lexicographic otherwise.
std::vector<std::string> sorted_levels(const std::set<std::string>& labels) {
    std::vector<std::string> out(labels.begin(), labels.end());
    const bool numeric = std::all_of(out.begin(), out.end(), [](const std::string& s) {
        return !s.empty() && s.size() < 18 &&
               std::all_of(s.begin(), s.end(), [](char c) { return std::isdigit(static_cast<unsigned char>(c)); });
    });
    if (numeric)
        std::sort(out.begin(), out.end(),
                  [](const std::string& a, const std::string& b) { return std::stoll(a) < std::stoll(b); });
    return out;
}

std::string trial_label(int sbj, int trial) {
    return "(sbj=" + std::to_string(sbj) + ", trial=" + std::to_string(trial) + ")";
}

}  // namespace

PreparedData prepare_data(const RawTrajectorySet& raw, std::size_t n, std::string_view formula) {
    if (n < 2) throw ValidationError("N must be at least 2");
    const std::size_t nf = raw.factor_names.size();
    if (nf == 0) throw ValidationError("at least one condition column is required");

    struct TrialData {
        std::vector<std::string> levels;
        std::vector<std::pair<int, Point>> samples;
    };
    std::map<std::pair<int, int>, TrialData> trials;
    std::vector<std::set<std::string>> labels(nf);
    for (const RawRecord& r : raw.records) {
        if (r.levels.size() != nf) throw ValidationError("record with a wrong number of labels");
        auto& td = trials[{r.sbj, r.trial}];
        if (td.samples.empty()) {
            td.levels = r.levels;
        } else if (td.levels != r.levels) {
            throw ValidationError("trial " + trial_label(r.sbj, r.trial) +
                                  " carries more than one condition combination");
        }
        td.samples.emplace_back(r.timestep, Point{r.x, r.y});
        for (std::size_t f = 0; f < nf; ++f) labels[f].insert(r.levels[f]);
    }
    if (trials.empty()) throw ValidationError("no trajectory records");

    PreparedData out;
    ProcessedDataset& ds = out.dataset;
    for (std::size_t f = 0; f < nf; ++f) ds.factors.push_back({raw.factor_names[f], sorted_levels(labels[f])});

    // Rectangular layout: the first subject defines trial ids and their levels.
    std::map<int, std::vector<int>> by_subject;
    for (const auto& [key, td] : trials) by_subject[key.first].push_back(key.second);
    for (const auto& [sbj, ids] : by_subject) ds.subject_ids.push_back(sbj);
    ds.trial_ids = by_subject.begin()->second;
    const int first_sbj = ds.subject_ids.front();
    for (const auto& [sbj, ids] : by_subject) {
        if (ids != ds.trial_ids)
            throw ValidationError("ragged design: subject " + std::to_string(sbj) +
                                  " does not have the same trials as subject " + std::to_string(first_sbj));
        for (int t : ids)
            if (trials.at({sbj, t}).levels != trials.at({first_sbj, t}).levels)
                throw ValidationError("ragged design: trial " + std::to_string(t) + " of subject " +
                                      std::to_string(sbj) + " has a different condition than subject " +
                                      std::to_string(first_sbj));
    }

    ds.I = ds.subject_ids.size();
    ds.J = ds.trial_ids.size();
    ds.N = n;
    ds.Y = Matrix(n, ds.I * ds.J);
    ds.D = Matrix(n, ds.I * ds.J);

    for (int t : ds.trial_ids) {
        const auto& lv = trials.at({first_sbj, t}).levels;
        std::vector<std::size_t> idx(nf);
        for (std::size_t f = 0; f < nf; ++f) {
            const auto& levels = ds.factors[f].levels;
            idx[f] = static_cast<std::size_t>(std::find(levels.begin(), levels.end(), lv[f]) - levels.begin());
        }
        ds.trial_levels.push_back(std::move(idx));
    }

    out.normalized.factor_names = raw.factor_names;
    out.normalized.records.reserve(ds.I * ds.J * n);
    for (std::size_t i = 0; i < ds.I; ++i) {
        for (std::size_t j = 0; j < ds.J; ++j) {
            const int sbj = ds.subject_ids[i];
            const int trial = ds.trial_ids[j];
            auto& td = trials.at({sbj, trial});
            std::sort(td.samples.begin(), td.samples.end(),
                      [](const auto& a, const auto& b) { return a.first < b.first; });
            for (std::size_t s = 0; s < td.samples.size(); ++s)
                if (td.samples[s].first != static_cast<int>(s + 1))
                    throw ValidationError("trial " + trial_label(sbj, trial) +
                                          ": timesteps must run 1, 2, ... without gaps or duplicates");
            std::vector<Point> pts;
            pts.reserve(td.samples.size());
            for (const auto& s : td.samples) pts.push_back(s.second);
            if (pts.size() < 2)
                throw ValidationError("trial " + trial_label(sbj, trial) + " has fewer than 2 samples");

            const auto norm = normalize_trajectory(resample_trajectory(pts, n), trial_label(sbj, trial));
            const auto angles = project_atan2(norm);
            const std::size_t c = ds.column(i, j);
            for (std::size_t k = 0; k < n; ++k) {
                ds.Y(k, c) = angles[k];
                ds.D(k, c) = compute_d(angles[k]);
                out.normalized.records.push_back({sbj, trial, td.levels, static_cast<int>(k + 1), norm[k].x, norm[k].y});
            }
        }
    }

    std::vector<FactorLevels> fl;
    for (const auto& f : ds.factors) fl.push_back({f.name, f.levels.size()});
    ds.Z = build_design(parse_formula(formula, fl), ds.factors, ds.trial_levels);
    return out;
}

std::vector<std::string> column_labels(const ProcessedDataset& ds) {
    std::vector<std::string> out;
    out.reserve(ds.columns());
    for (std::size_t i = 0; i < ds.I; ++i)
        for (std::size_t j = 0; j < ds.J; ++j) {
            const int s = i < ds.subject_ids.size() ? ds.subject_ids[i] : static_cast<int>(i + 1);
            const int t = j < ds.trial_ids.size() ? ds.trial_ids[j] : static_cast<int>(j + 1);
            out.push_back("s" + std::to_string(s) + "_t" + std::to_string(t));
        }
    return out;
}

}  // namespace mtrack
