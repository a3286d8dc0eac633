#pragma once

#include "suspension.hpp"

namespace smalldil {

enum class Stage { X = 0, Y = 1, HatY = 2, Quotient = 3 };

inline const char* stage_name(Stage s) {
    static const char* names[] = {"x", "y", "hat-y", "quotient"};
    return names[static_cast<int>(s)];
}

inline Stage parse_stage(const std::string& s) {
    for (Stage st : {Stage::X, Stage::Y, Stage::HatY, Stage::Quotient})
        if (s == stage_name(st)) return st;
    throw validation_error("unknown stage '" + s + "'");
}

/// Observed value against its bound; bound is empty for equalities and structural checks.
struct Check {
    std::string stage, name, observed, bound;
    bool pass = false;
    std::string detail;
};

inline std::string rat_text(const Rat& r) {
    if (denom(r) == 1) return to_string(numer(r));
    return to_decimal(r, 9);
}

/// Upper bound in scientific notation with three significant digits.
inline std::string sci_upper(const Rat& r) {
    if (r <= 0) return r == 0 ? "0" : "-" + sci_upper(-r);
    long e = 0;
    Rat m = r;
    while (m >= 10) m /= 10, ++e;
    while (m < 1) m *= 10, --e;
    Int q = ceil_rat(m * 100);
    if (q >= 1000) q = 100, ++e;
    std::string d = q.str();
    return d.substr(0, 1) + "." + d.substr(1) + "e" + (e < 0 ? "-" : "+") + std::to_string(std::labs(e));
}

/// Staged build of X, Y, the mapping torus and its quotient, with the bound suites run
/// after each stage. Stops at the first failing check.
struct PipelineRun {
    MarkovPartition mp;
    Rat P;
    Stage reached = Stage::X;
    bool complete = false;

    XStructure x;
    YStructure y;
    Neighborhoods nb;
    EquivalenceTable t;
    StepMaps sm;
    RangeTable rt;
    QuotientSurface w;
    SuspensionComplex h;
    PrismDecomposition pd;
    FlowBound flow;
    QuotientComplex q;

    std::vector<Check> checks;

    bool ok() const {
        return std::all_of(checks.begin(), checks.end(), [](const Check& c) { return c.pass; });
    }
    const Check* first_failure() const {
        for (const auto& c : checks)
            if (!c.pass) return &c;
        return nullptr;
    }
};

namespace detail {

struct Recorder {
    PipelineRun& run;
    std::string stage;

    bool operator()(std::string name, std::string observed, std::string bound, bool pass, std::string detail = {}) {
        run.checks.push_back({stage, std::move(name), std::move(observed), std::move(bound), pass, std::move(detail)});
        return pass;
    }
    bool equal(std::string name, long observed, long expected) {
        return (*this)(std::move(name), std::to_string(observed), "= " + std::to_string(expected), observed == expected);
    }
    bool at_most(std::string name, long observed, const Rat& bound, std::string detail = {}) {
        return (*this)(std::move(name), std::to_string(observed), "<= " + rat_text(bound), Rat(observed) <= bound, std::move(detail));
    }
    bool none(std::string name, const std::vector<std::string>& problems) {
        return (*this)(std::move(name), std::to_string(problems.size()) + " violations", "= 0", problems.empty(),
                       problems.empty() ? std::string() : problems.front());
    }
};

}  // namespace detail

inline PipelineRun run_pipeline(MarkovPartition mp, const Rat& P, Stage upto) {
    PipelineRun run;
    run.mp = std::move(mp);
    run.P = P;
    const auto& m = run.mp;
    auto k = constants(P);
    detail::Recorder rec{run, "x"};
    auto guarded = [&](const char* what, auto&& f) {
        try {
            f();
            return true;
        } catch (const invariant_error& e) {
            rec(what, "failed", "", false, e.what());
        } catch (const validation_error& e) {
            rec(what, "failed", "", false, e.what());
        }
        return false;
    };

    run.reached = Stage::X;
    if (!guarded("construct X", [&] { run.x = build_X(m); })) return run;
    if (!rec.equal("euler characteristic", run.x.sc.punctured_euler(), m.chi())) return run;
    {
        auto d1 = check_D1(m, run.x, P);
        if (!rec("cell complexity D1", std::to_string(d1.max_boundary), "<= " + rat_text(d1.bound), d1.holds(),
                 d1.violations.empty() ? "" : d1.violations.front()))
            return run;
        if (!rec.at_most("type i segments per side", d1.max_type_i, d1.type_i_bound)) return run;
    }
    if (upto == Stage::X) return run.complete = true, run;

    rec.stage = "y";
    run.reached = Stage::Y;
    if (!guarded("construct Y", [&] { run.y = build_Y(m, run.x); })) return run;
    if (!rec.equal("euler characteristic", run.y.sc.punctured_euler(), m.chi())) return run;
    {
        auto d2 = check_D2(m, run.x, run.y, P);
        static const char* parts[] = {"D2 part 1", "D2 part 2", "D2 part 3", "D2 part 4 (phi cellular)", "D2 part 5"};
        for (size_t i = 0; i < 5; ++i) {
            std::string detail;
            std::string tag = "part " + std::to_string(i + 1);
            for (const auto& v : d2.violations)
                if (v.rfind(tag, 0) == 0) {
                    detail = v;
                    break;
                }
            if (!rec(parts[i], std::to_string(d2.observed[i]), "<= " + rat_text(d2.bound), d2.holds[i], detail)) return run;
        }
    }
    if (upto == Stage::Y) return run.complete = true, run;

    rec.stage = "hat-y";
    run.reached = Stage::HatY;
    {
        auto mb = mixed_budget(m, P);
        if (!rec.at_most("mixed rectangles", mb.mixed, mb.C)) return run;
        if (!rec.at_most("degree sum over mixed", static_cast<long>(mb.deg_sum), mb.C)) return run;
        if (!rec.at_most("codegree sum over mixed targets", static_cast<long>(mb.codeg_sum), mb.C)) return run;
    }
    run.nb = neighborhoods(m, P);
    if (!rec.at_most("first neighborhood size", run.nb.max_size, k.D3)) return run;
    run.t = equivalence_table(m, run.nb);
    {
        auto cb = class_bounds(run.t, P);
        if (!rec.at_most("h-classes", static_cast<long>(cb.h), cb.E_h)) return run;
        if (!rec.at_most("N-classes", static_cast<long>(cb.N), cb.E_N)) return run;
        if (!rec.at_most("Y-classes", static_cast<long>(cb.Y), cb.E_Y)) return run;
    }
    if (!guarded("step maps", [&] { run.sm = step_maps(m, run.x, run.y, run.t); })) return run;
    if (!rec.none("Y cellularity on classes", check_Y_cellularity(m, run.y, run.t, run.sm).violations)) return run;
    if (!guarded("construct mapping torus", [&] { run.h = build_hat_Y(m, run.x, run.y); })) return run;
    if (!rec.equal("mapping torus euler characteristic", run.h.cx.euler(), 0)) return run;
    {
        auto k1 = check_K1(run.h, P);
        if (!rec("cell complexity K1", std::to_string(k1.worst), "<= " + std::to_string(k1.K1), k1.holds(),
                 k1.violations.empty() ? "" : k1.violations.front()))
            return run;
    }
    if (upto == Stage::HatY) return run.complete = true, run;

    rec.stage = "quotient";
    run.reached = Stage::Quotient;
    if (!guarded("cell ranges", [&] { run.rt = cell_ranges(run.y, run.sm); })) return run;
    if (!rec.none("cell ranges", run.rt.violations)) return run;
    if (!rec.none("face monotonicity", face_monotonicity(run.y, run.rt))) return run;
    if (!guarded("quotient surface", [&] { run.w = quotient_surface(run.y, run.sm, run.rt, P); })) return run;
    if (!rec("quotient surface complexity", std::to_string(run.w.complexity.k_min), "<= " + std::to_string(run.w.D),
             run.w.complexity.bounded))
        return run;
    if (!guarded("flow escape bound", [&] { run.flow = flow_escape_bound(run.y, run.rt); })) return run;
    if (!guarded("prism decomposition", [&] { run.pd = prism_decomposition(run.h, run.t); })) return run;
    if (!rec.none("product structure", check_product_structure(m, run.y, run.h, run.pd, run.sm).violations)) return run;
    if (!guarded("construct quotient", [&] { run.q = build_quotient(run.h, run.pd, run.t, run.w, P); })) return run;
    if (!rec.none("p cellular", check_cellular(run.h, run.q))) return run;
    if (!rec("quotient complexity", std::to_string(run.q.complexity.k_min), "<= " + std::to_string(run.q.K),
             run.q.complexity.bounded))
        return run;
    if (!rec.equal("3-cells", static_cast<long>(run.q.cx.counts()[3]), static_cast<long>(run.t.Y.size()))) return run;
    run.complete = true;
    return run;
}

}  // namespace smalldil
