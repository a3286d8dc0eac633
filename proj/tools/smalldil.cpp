#include <smalldil/io.hpp>
#include <smalldil/pipeline.hpp>

#include <CLI11.hpp>
#include <openssl/evp.h>

#include <chrono>
#include <filesystem>
#include <iostream>

using namespace smalldil;
namespace fs = std::filesystem;

namespace {

enum Exit { Ok = 0, Invalid = 1, Violation = 2, IoFailure = 3, Usage = 4 };

std::string sha256(const std::string& data) {
    unsigned char md[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    if (!EVP_Digest(data.data(), data.size(), md, &len, EVP_sha256(), nullptr)) throw std::runtime_error("sha256 failed");
    return to_hex(std::vector<unsigned char>(md, md + len));
}

std::string form_digest(const CanonicalForm& f) {
    auto b = f.bytes();
    return sha256(std::string(b.begin(), b.end()));
}

ojson input_block(const std::string& path) { return {{"path", path}, {"sha256", sha256(read_text_file(path))}}; }

ojson interval_json(const AlgebraicInterval& iv, int digits = 12) {
    ojson poly = ojson::array();
    for (const auto& c : iv.polynomial) poly.push_back(to_string(c));
    return {{"lo", to_decimal(iv.lo, digits)},
            {"hi", to_decimal(iv.hi, digits) },
            {"width_upper", sci_upper(iv.width())},
            {"midpoint", to_decimal(iv.midpoint(), digits)},
            {"charpoly_low_first", poly},
            {"isolation_verified", iv.isolation_verified}};
}

ojson check_json(const std::string& name, const std::string& observed, const std::string& bound, bool pass) {
    return {{"name", name}, {"observed", observed}, {"bound", bound}, {"pass", pass}};
}

ojson checks_json(const std::vector<Check>& cs) {
    ojson out = ojson::array();
    for (const auto& c : cs) {
        ojson j = {{"stage", c.stage}, {"name", c.name}, {"observed", c.observed}, {"bound", c.bound}, {"pass", c.pass}};
        if (!c.detail.empty()) j["detail"] = c.detail;
        out.push_back(j);
    }
    return out;
}

ojson counts_json(const CellComplex& c) {
    auto n = c.counts();
    return ojson{n[0], n[1], n[2], n[3]};
}

void render_text(std::ostream& out, const ojson& j, const std::string& prefix) {
    if (j.is_object()) {
        for (const auto& [k, v] : j.items()) render_text(out, v, prefix.empty() ? k : prefix + "." + k);
    } else if (j.is_array() && std::any_of(j.begin(), j.end(), [](const ojson& e) { return e.is_structured(); })) {
        for (size_t i = 0; i < j.size(); ++i) render_text(out, j[i], prefix + "[" + std::to_string(i) + "]");
    } else {
        out << prefix << ": " << (j.is_string() ? j.get<std::string>() : j.dump()) << "\n";
    }
}

struct Output {
    bool json = false;
    std::string file;

    void emit(const ojson& report) const {
        std::ostringstream s;
        if (json) s << report.dump(1) << "\n";
        else render_text(s, report, "");
        std::cout << s.str();
        if (!file.empty()) write_json_file(file, report);
    }
};

bool all_pass(const ojson& checks) {
    return std::all_of(checks.begin(), checks.end(), [](const ojson& c) { return c["pass"].get<bool>(); });
}

std::vector<std::string> split_lines(const std::string& s) {
    std::vector<std::string> out;
    std::istringstream in(s);
    for (std::string line; std::getline(in, line);) out.push_back(line);
    return out;
}

// ---------------------------------------------------------------------------

int cmd_validate(const std::string& path, const Output& o) {
    ojson r = {{"command", "validate"}, {"input", input_block(path)}};
    ValidationReport rep;
    try {
        auto mp = load_partition(path, &rep);
        r["valid"] = true;
        r["rectangles"] = mp.n();
        r["euler_characteristic"] = mp.chi();
        r["small"] = rep.small;
        r["rectangle_bound"] = rep.rectangle_bound;
        if (rep.psi_member) r["psi_member"] = *rep.psi_member;
        r["errors"] = ojson::array();
        o.emit(r);
        return Ok;
    } catch (const validation_error& e) {
        r["valid"] = false;
        r["errors"] = split_lines(e.what());
        o.emit(r);
        return Invalid;
    }
}

int cmd_analyze(const std::string& path, const std::string& P_text, const std::string& tol_text, const Output& o) {
    ojson r = {{"command", "analyze"}, {"input", input_block(path)}};
    auto mp = load_partition(path);
    Rat tol = parse_rational(tol_text);
    if (tol <= 0) throw validation_error("--tol must be positive");
    std::optional<Rat> flag_P;
    if (!P_text.empty()) flag_P = parse_rational(P_text);
    Rat P = effective_P(mp, flag_P);
    if (P < 1) throw validation_error("P must be at least 1");

    r["rectangles"] = mp.n();
    r["euler_characteristic"] = mp.chi();
    auto lam = dilatation(mp, tol);
    r["dilatation"] = interval_json(lam);
    r["P"] = {{"value", rat_text(P)}, {"source", flag_P ? "flag" : mp.declared_P ? "declared" : "inferred"}};
    ojson ledger;
    for (const auto& [k, v] : constants(P).items()) ledger[k] = rat_text(v);
    r["constants"] = ledger;

    ojson checks = ojson::array();
    auto [mn, mx] = row_sum_bounds(mp.raw_matrix());
    checks.push_back(check_json("dilatation in row-sum bracket", "[" + to_decimal(lam.lo, 12) + ", " + to_decimal(lam.hi, 12) + "]",
                                "[" + to_string(mn) + ", " + to_string(mx) + "]", lam.lo >= Rat(mn) && lam.hi <= Rat(mx)));
    long nb = small_bound(mp);
    checks.push_back(check_json("smallness", std::to_string(mp.n()) + " rectangles", "<= " + std::to_string(nb),
                                static_cast<long>(mp.n()) <= nb));
    unsigned k = static_cast<unsigned>(std::labs(mp.chi()));
    checks.push_back(check_json("psi membership", "lambda^" + std::to_string(k) + " in [" + to_decimal(pow_rat(lam.lo, k), 9) +
                                    ", " + to_decimal(pow_rat(lam.hi, k), 9) + "]",
                                "<= " + rat_text(P), psi_member(mp, P)));
    auto mb = mixed_budget(mp, P);
    checks.push_back(check_json("mixed rectangles", std::to_string(mb.mixed), "<= " + rat_text(mb.C), Rat(mb.mixed) <= mb.C));
    checks.push_back(check_json("degree sum over mixed", to_string(mb.deg_sum), "<= " + rat_text(mb.C), Rat(mb.deg_sum) <= mb.C));
    checks.push_back(check_json("codegree sum over mixed targets", to_string(mb.codeg_sum), "<= " + rat_text(mb.C),
                                Rat(mb.codeg_sum) <= mb.C));
    auto dr = distortion_check(mp, P);
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.9f / %.9f", dr.max_length_ratio, dr.max_width_ratio);
    checks.push_back(check_json("distortion (length / width)", buf, "<= " + rat_text(dr.bound), dr.holds));
    r["checks"] = checks;
    bool ok = all_pass(checks);
    r["verdict"] = ok ? "pass" : "fail";
    o.emit(r);
    return ok ? Ok : Violation;
}

int cmd_build(const std::string& path, const std::string& stage_text, const std::string& P_text, const std::string& out_dir,
              bool forms, const Output& o) {
    ojson r = {{"command", "build"}, {"input", input_block(path)}, {"stage", stage_text}};
    Stage stage = parse_stage(stage_text);
    auto mp = load_partition(path);
    std::optional<Rat> flag_P;
    if (!P_text.empty()) flag_P = parse_rational(P_text);
    Rat P = effective_P(mp, flag_P);
    r["P"] = rat_text(P);
    auto run = run_pipeline(std::move(mp), P, stage);

    if (!out_dir.empty()) {
        std::error_code ec;
        fs::create_directories(out_dir, ec);
        if (ec) throw io_error("cannot create " + out_dir + ": " + ec.message());
    }
    ojson stages = ojson::array();
    auto built = [&](Stage s) { return run.complete || static_cast<int>(s) < static_cast<int>(run.reached); };
    auto emit = [&](Stage s, const CellComplex& cx, ojson file, ojson info) {
        ojson head = {{"stage", stage_name(s)}, {"cells", counts_json(cx)}, {"euler", cx.euler()}};
        head.update(info);
        info = head;
        if (forms) {
            auto f = canonical_form(cx);
            info["canonical_form_sha256"] = form_digest(f);
            file["canonical_form"] = form_hex(f);
        }
        if (!out_dir.empty()) {
            std::string p = (fs::path(out_dir) / (std::string(stage_name(s)) + ".json")).string();
            write_json_file(p, file);
            info["file"] = p;
        }
        stages.push_back(info);
    };
    auto betti = [](const CellComplex& cx) {
        auto hr = homology(cx);
        ojson b = ojson::array(), t = ojson::array();
        for (auto v : hr.betti) b.push_back(v);
        for (const auto& tv : hr.torsion) {
            ojson row = ojson::array();
            for (const auto& x : tv) row.push_back(to_string(x));
            t.push_back(row);
        }
        return ojson{{"betti", b}, {"torsion", t}};
    };

    if (built(Stage::X))
        emit(Stage::X, run.x.sc.cx, surface_to_json(run.x.sc), {{"punctured_euler", run.x.sc.punctured_euler()}});
    if (built(Stage::Y) && stage >= Stage::Y) {
        ojson strips = ojson::array();
        for (const auto& s : run.y.strips) strips.push_back(s.size());
        emit(Stage::Y, run.y.sc.cx, surface_to_json(run.y.sc), {{"punctured_euler", run.y.sc.punctured_euler()}, {"strips", strips}});
    }
    if (built(Stage::HatY) && stage >= Stage::HatY) {
        ojson info = betti(run.h.cx);
        info["boxes"] = run.h.boxes.size();
        info["y_classes"] = run.t.Y.size();
        emit(Stage::HatY, run.h.cx, suspension_to_json(run.h), info);
    }
    if (built(Stage::Quotient) && stage >= Stage::Quotient) {
        ojson info = betti(run.q.cx);
        info["flow_escape_bound"] = run.flow.Q;
        info["filled_boxes"] = run.pd.filled_count();
        ojson collapse = ojson::array();
        for (const auto& c : run.q.collapse)
            collapse.push_back({{"rectangle", c.rect + 1}, {"before", c.before}, {"after", c.after}, {"monotone", c.monotone()}});
        info["collapse"] = collapse;
        info["notes"] = run.q.notes;
        ojson qfile = quotient_to_json(run.q);
        if (forms) {
            auto pair = extract_N_circ(run.q);
            info["marked_or_singular_circles"] = pair.circles;
            info["collapsed_orbits"] = pair.points;
            info["pair_form_sha256"] = form_digest(pair.pair_form);
            qfile["pair_canonical_form"] = form_hex(pair.pair_form);
        }
        emit(Stage::Quotient, run.q.cx, qfile, info);
    }
    r["stages"] = stages;
    r["checks"] = checks_json(run.checks);
    const Check* bad = run.first_failure();
    r["verdict"] = bad ? "fail" : "pass";
    o.emit(r);
    if (bad) {
        std::cerr << "invariant violation: " << bad->stage << ": " << bad->name;
        if (!bad->detail.empty()) std::cerr << ": " << bad->detail;
        std::cerr << "\n";
        return Violation;
    }
    return Ok;
}

int cmd_classify(const std::vector<std::string>& paths, bool tagged, const Output& o) {
    ojson r = {{"command", "classify"}, {"tagged", tagged}};
    ojson inputs = ojson::array();
    std::vector<CanonicalForm> forms;
    for (const auto& p : paths) {
        auto f = read_complex_file(p);
        forms.push_back(canonical_form(f.cx, tagged ? &f.tag : nullptr));
        ojson in = input_block(p);
        in["cells"] = counts_json(f.cx);
        in["canonical_form_sha256"] = form_digest(forms.back());
        inputs.push_back(in);
    }
    ojson groups = ojson::array();
    for (const auto& g : classify(forms)) {
        ojson members = ojson::array();
        for (size_t i : g) members.push_back(paths[i]);
        groups.push_back(members);
    }
    r["inputs"] = inputs;
    r["groups"] = groups;
    r["group_count"] = groups.size();
    o.emit(r);
    return Ok;
}

int cmd_pf_spectral(const std::string& path, const std::string& tol_text, const std::string& dot, const Output& o) {
    ojson r = {{"command", "pf spectral"}, {"input", input_block(path)}};
    auto a = read_matrix_file(path);
    auto m = make_pf_matrix(a);
    Rat tol = parse_rational(tol_text);
    if (tol <= 0) throw validation_error("--tol must be positive");
    auto iv = spectral_radius(m, tol);
    auto [mn, mx] = row_sum_bounds(a);
    r["matrix"] = matrix_to_json(a);
    r["primitivity_power"] = m.primitivity_power;
    r["tolerance"] = rat_text(tol);
    r["spectral_radius"] = interval_json(iv);
    r["row_sum_bracket"] = {to_string(mn), to_string(mx)};
    bool inside = iv.lo >= Rat(mn) && iv.hi <= Rat(mx);
    bool narrow = iv.width() <= tol;
    r["checks"] = ojson{check_json("interval in row-sum bracket", "[" + to_decimal(iv.lo, 12) + ", " + to_decimal(iv.hi, 12) + "]",
                                   "[" + to_string(mn) + ", " + to_string(mx) + "]", inside),
                        check_json("certified width", sci_upper(iv.width()), "<= " + sci_upper(tol), narrow)};
    if (!dot.empty()) {
        write_text_file(dot, to_dot(adjacency_graph(a)));
        r["dot"] = dot;
    }
    o.emit(r);
    return inside && narrow ? Ok : Violation;
}

ojson hamsong_json(const HamSongReport& h) {
    return {{"n", h.n},
            {"lhs", to_string(h.lhs)},
            {"edges", to_string(h.edge_count)},
            {"chain_rhs", to_string(h.chain_rhs)},
            {"min_row_sum_of_power", to_string(h.min_row_sum_power)},
            {"holds", h.holds},
            {"lambda_power", {{"lo", to_decimal(h.lambda_pow_lo, 9)}, {"hi", to_decimal(h.lambda_pow_hi, 9)},
                              {"width_upper", sci_upper(h.lambda_pow_hi - h.lambda_pow_lo)}}},
            {"lambda_power_at_least_lhs", h.float_holds}};
}

int cmd_pf_hamsong(const std::string& path, const Output& o) {
    ojson r = {{"command", "pf hamsong"}, {"input", input_block(path)}};
    auto a = read_matrix_file(path);
    auto h = ham_song_check(make_pf_matrix(a));
    r["matrix"] = matrix_to_json(a);
    r["report"] = hamsong_json(h);
    o.emit(r);
    return h.holds && h.float_holds ? Ok : Violation;
}

int cmd_pf_random(long n, long max_entry, long trials, unsigned long long seed, const Output& o) {
    if (n < 1 || max_entry < 1 || trials < 0) throw validation_error("--n and --max-entry must be positive, --trials nonnegative");
    ojson r = {{"command", "pf random"}, {"n", n}, {"max_entry", max_entry}, {"trials", trials}, {"seed", seed}};
    std::mt19937_64 rng(seed);
    ojson bad = ojson::array();
    std::vector<long> by_size(static_cast<size_t>(n) + 1, 0);
    for (long i = 0; i < trials; ++i) {
        auto a = random_primitive(rng, static_cast<size_t>(n), static_cast<unsigned>(max_entry));
        by_size[a.size()]++;
        auto h = ham_song_check(make_pf_matrix(a));
        if (!h.holds || !h.float_holds) bad.push_back({{"trial", i}, {"matrix", matrix_to_string(a)}, {"report", hamsong_json(h)}});
    }
    by_size.erase(by_size.begin());
    r["matrices_by_size"] = by_size;
    r["counterexamples"] = bad.size();
    r["counterexample_list"] = bad;
    o.emit(r);
    return bad.empty() ? Ok : Violation;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Markov partition pipeline and Perron-Frobenius laboratory"};
    app.require_subcommand(1);
    Output out;
    bool timing = false;
    app.add_flag("--json", out.json, "Print the report as JSON");
    app.add_flag("--timing", timing, "Print wall time to stderr");

    std::string path, P_text, tol_text = "1e-9", stage, out_dir;
    auto* validate = app.add_subcommand("validate", "Validate a partition file");
    validate->add_option("path", path)->required();

    auto* analyze = app.add_subcommand("analyze", "Dilatation, smallness, membership and budgets");
    analyze->add_option("path", path)->required();
    analyze->add_option("--P", P_text, "Bound P (rational); default declared, else inferred");
    analyze->add_option("--tol", tol_text, "Width of the dilatation interval");
    analyze->add_option("-o,--output", out.file, "Also write the JSON report here");

    bool no_forms = false;
    auto* build = app.add_subcommand("build", "Build complexes up to a stage");
    build->add_option("path", path)->required();
    build->add_option("--stage", stage, "x, y, hat-y or quotient")->required()->check(CLI::IsMember({"x", "y", "hat-y", "quotient"}));
    build->add_option("--P", P_text, "Bound P (rational); default declared, else inferred");
    build->add_option("-o,--output", out_dir, "Directory for complex files");
    build->add_flag("--no-forms", no_forms, "Skip canonical forms");

    std::vector<std::string> paths;
    bool tagged = false;
    auto* cls = app.add_subcommand("classify", "Group complex files by canonical form");
    cls->add_option("paths", paths);
    cls->add_option("-o,--output", out.file, "Also write the JSON report here");
    cls->add_flag("--tagged", tagged, "Include singular and marked tags in the form");

    auto* pf = app.add_subcommand("pf", "Perron-Frobenius matrices");
    pf->require_subcommand(1);
    std::string pf_tol = "1e-6", dot;
    auto* spectral = pf->add_subcommand("spectral", "Certified spectral radius");
    spectral->add_option("matrix", path)->required();
    spectral->add_option("--tol", pf_tol);
    spectral->add_option("--dot", dot, "Write the adjacency graph in DOT format");
    auto* hamsong = pf->add_subcommand("hamsong", "Integer-chain check for one matrix");
    hamsong->add_option("matrix", path)->required();
    long n = 6, max_entry = 3, trials = 1000;
    unsigned long long seed = 1;
    auto* random = pf->add_subcommand("random", "Seeded random primitive matrices");
    random->add_option("--n", n, "Largest size");
    random->add_option("--max-entry", max_entry);
    random->add_option("--trials", trials);
    random->add_option("--seed", seed);

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return Usage;
    }

    auto t0 = std::chrono::steady_clock::now();
    int code = Ok;
    try {
        if (*validate) code = cmd_validate(path, out);
        else if (*analyze) code = cmd_analyze(path, P_text, tol_text, out);
        else if (*build) code = cmd_build(path, stage, P_text, out_dir, !no_forms, out);
        else if (*cls) code = cmd_classify(paths, tagged, out);
        else if (*spectral) code = cmd_pf_spectral(path, pf_tol, dot, out);
        else if (*hamsong) code = cmd_pf_hamsong(path, out);
        else if (*random) code = cmd_pf_random(n, max_entry, trials, seed, out);
    } catch (const io_error& e) {
        std::cerr << "error: " << e.what() << "\n";
        code = IoFailure;
    } catch (const validation_error& e) {
        std::cerr << "error: " << e.what() << "\n";
        code = Invalid;
    } catch (const invariant_error& e) {
        std::cerr << "invariant violation: " << e.what() << "\n";
        code = Violation;
    } catch (const numeric_error& e) {
        std::cerr << "numeric failure: " << e.what() << "\n";
        code = Violation;
    }
    if (timing)
        std::cerr << "time: "
                  << std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count() << " s\n";
    return code;
}
