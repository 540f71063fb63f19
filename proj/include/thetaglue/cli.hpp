#pragma once

// The thetaglue command line: flags and config file, the subcommands, report envelopes.

#include <chrono>
#include <cstdint>
#include <fstream>
#include <functional>
#include <optional>
#include <ostream>
#include <regex>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "thetaglue/cycle.hpp"
#include "thetaglue/glue.hpp"
#include "thetaglue/lgmodel.hpp"
#include "thetaglue/report.hpp"

#ifndef THETAGLUE_VERSION
#define THETAGLUE_VERSION "0.1.0"
#endif

namespace thetaglue::cli {

/// Accepts a, bi, a+bi, a-bi, with an optional leading sign and an implicit 1 in "i".
inline complex parse_complex(const std::string& text) {
    std::string s;
    for (char c : text)
        if (c != ' ' && c != '\t') s += c;
    static const std::string num = R"((?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)";
    static const std::regex real_re("^([+-]?" + num + ")$");
    static const std::regex imag_re("^([+-]?)(" + num + ")?i$");
    static const std::regex both_re("^([+-]?" + num + ")([+-])(" + num + ")?i$");
    std::smatch m;
    auto mag = [](const std::ssub_match& g) { return g.matched ? std::stod(g.str()) : 1.0; };
    if (std::regex_match(s, m, real_re)) return {std::stod(m[1].str()), 0.0};
    if (std::regex_match(s, m, imag_re)) return {0.0, (m[1].str() == "-" ? -1.0 : 1.0) * mag(m[2])};
    if (std::regex_match(s, m, both_re)) return {std::stod(m[1].str()), (m[2].str() == "-" ? -1.0 : 1.0) * mag(m[3])};
    throw usage_error("malformed complex literal '" + text + "' (expected a+bi, e.g. 0.5i or 0.1+0.5i)");
}

inline std::vector<complex> parse_complex_list(const std::string& text) {
    std::vector<complex> out;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) out.push_back(parse_complex(item));
    if (out.empty()) throw usage_error("empty list of complex values");
    return out;
}

struct Config {
    std::string tau1 = "0.5i", tau2 = "0.5i";
    std::string taus;   // comma-separated, cycle only
    std::string z = "0.5";  // comma-separated, covering eval only
    int order = 16;
    std::int64_t denom = 4, floor = -8;
    double descent_tol = 1e-9, root_tol = 1e-8, cross_tol = 1e-10;
    int samples = 100, cross_points = 10, cross_order = 32, grid_lines = 4;
    std::uint64_t seed = 20240611;
    int which = 1, n = 0;
    std::optional<int> j, k;
    std::string json_path, out_path;
    bool timing = false;

    void validate() const {
        if (order < 4) throw usage_error("--order must be at least 4");
        if (denom < 1) throw usage_error("--denom must be a positive integer");
        if (!(descent_tol > 0) || !(root_tol > 0) || !(cross_tol > 0)) throw usage_error("tolerances must be positive");
        if (samples < 1) throw usage_error("--samples must be positive");
        if (cross_points < 0 || grid_lines < 0) throw usage_error("counts must be non-negative");
        if (cross_order < 4) throw usage_error("--cross-order must be at least 4");
        if (which != 1 && which != 2) throw usage_error("--which must be 1 or 2");
        if (k && *k != 1 && *k != 2) throw usage_error("--k must be 1 or 2");
        if (n < 0) throw usage_error("--n must be positive");
        (void)params();
    }

    [[nodiscard]] RingMeta ring() const { return {2, denom, floor}; }

    [[nodiscard]] KahlerParams params() const {
        try {
            return make_params(parse_complex(tau1), parse_complex(tau2));
        } catch (const domain_error& e) {
            throw usage_error(e.what());
        }
    }

    [[nodiscard]] RingMeta checked_ring() const {
        const RingMeta r = ring();
        if (r.denom % 4 != 0) throw usage_error("--denom must be a multiple of 4 for the theta sections");
        return r;
    }

    [[nodiscard]] json echo() const {
        json e{{"tau1", to_json(parse_complex(tau1))},
               {"tau2", to_json(parse_complex(tau2))},
               {"order", order},
               {"denom", denom},
               {"floor", floor},
               {"descent_tol", descent_tol},
               {"root_tol", root_tol},
               {"cross_tol", cross_tol},
               {"samples", samples},
               {"cross_points", cross_points},
               {"cross_order", cross_order},
               {"grid_lines", grid_lines},
               {"seed", seed},
               {"which", which},
               {"n", n}};
        e["j"] = j ? json(*j) : json(nullptr);
        e["k"] = k ? json(*k) : json(nullptr);
        e["taus"] = taus.empty() ? json(nullptr) : to_json(parse_complex_list(taus));
        e["z"] = to_json(parse_complex_list(z));
        return e;
    }
};

struct Report {
    std::string command;
    json params = json::object();
    json results = json::object();
    bool passed = false;
    std::optional<double> seconds;

    [[nodiscard]] json envelope() const {
        json j = results;
        j["command"] = command;
        j["params"] = params;
        j["passed"] = passed;
        j["version"] = THETAGLUE_VERSION;
        j["seconds"] = seconds ? json(*seconds) : json(nullptr);
        return j;
    }
};

namespace detail {

inline json stage_json(const std::string& name, const CheckResult& r) {
    json j = to_json(r);
    j["name"] = name;
    return j;
}

inline Report verify_jtp(const Config& cfg) {
    const RingMeta meta = cfg.ring();
    const Monomial z2 = Monomial::z(meta, 2);
    Report rep;
    rep.passed = true;
    json stages = json::array();
    for (const Monomial& y : {Monomial::q(meta, 2) * z2, z2 / Monomial::q(meta, 1)}) {
        const CheckResult r = jtp_check(y, cfg.order);
        json s = stage_json("y = " + y.to_string(), r);
        s["y"] = y.to_string();
        stages.push_back(s);
        rep.passed = rep.passed && r.passed;
    }
    rep.results["stages"] = stages;
    return rep;
}

inline Report verify_chain(const Config& cfg) {
    const ChainReport c = chain_verify(cfg.which, cfg.order, cfg.checked_ring());
    Report rep;
    json stages = json::array();
    for (const auto& st : c.stages)
        stages.push_back({{"name", st.name},
                          {"unit", st.unit ? json(st.unit->to_string()) : json(nullptr)},
                          {"passed", st.passed},
                          {"detail", st.detail}});
    auto opt = [](const std::optional<Monomial>& m) { return m ? json(m->to_string()) : json(nullptr); };
    rep.results = {{"which", c.which},
                   {"stages", stages},
                   {"end_to_end", opt(c.end_to_end)},
                   {"units_compose", c.units_compose},
                   {"corrected_automorphy", opt(c.corrected_automorphy)},
                   {"reference_automorphy", opt(c.reference_automorphy)}};
    rep.passed = c.passed;
    return rep;
}

inline Report verify_product_formula(const Config& cfg) {
    std::vector<int> js, ks;
    if (cfg.j) js = {*cfg.j};
    else for (int j = -4; j <= 4; ++j) js.push_back(j);
    if (cfg.k) ks = {*cfg.k};
    else ks = {1, 2};
    Report rep;
    rep.passed = true;
    json stages = json::array();
    for (int k : ks)
        for (int j : js) {
            const auto pf = product_formula_check(j, k);
            json s = stage_json("j = " + std::to_string(j) + ", k = " + std::to_string(k), pf.result);
            s["j"] = j;
            s["k"] = k;
            s["displayed_prefactor"] = pf.displayed_prefactor.to_string();
            s["measured_prefactor"] = pf.measured_prefactor ? json(pf.measured_prefactor->to_string()) : json(nullptr);
            stages.push_back(s);
            rep.passed = rep.passed && pf.result.passed;
        }
    rep.results["stages"] = stages;
    return rep;
}

inline Report verify_qh(const Config&) {
    const CheckResult r = jacobian_vs_qh();
    const auto c = structure_constants(jacobian_relation(p1_superpotential()));
    json table = json::array();
    for (const auto& row : c) {
        json jr = json::array();
        for (const auto& e : row) jr.push_back(qlaurent_text(e));
        table.push_back(jr);
    }
    Report rep;
    rep.results = {{"stages", json::array({stage_json("Jac(z + q/z) vs QH(P^1)", r)})},
                   {"basis", json::array({"1", "z"})},
                   {"structure_constants", table}};
    rep.passed = r.passed;
    return rep;
}

inline Report verify_descent(const Config& cfg) {
    const CoveringMap m = build_covering(cfg.params(), cfg.order, cfg.checked_ring());
    DescentOptions opt{cfg.samples, cfg.descent_tol, cfg.cross_points, cfg.cross_tol, cfg.cross_order, cfg.seed};
    const DescentReport d = descent_check(m, opt);
    DescentOptions control_opt = opt;
    control_opt.cross_points = 0;
    const DescentReport bad = descent_check(strip_unit(m), control_opt);
    json s1 = stage_json("descent", d.result);
    s1["max_chordal"] = d.max_chordal;
    s1["max_cross_rel"] = d.max_cross_rel;
    json s2{{"name", "negative control: unit without z"},
            {"passed", !bad.result.passed},
            {"detail", bad.result.passed ? "control unexpectedly descends" : "control rejected, " + bad.result.detail},
            {"max_chordal", bad.max_chordal},
            {"first_discrepancy", nullptr}};
    Report rep;
    rep.results["stages"] = json::array({s1, s2});
    rep.results["automorphy"] = m.s1.automorphy.to_string();
    rep.results["unit"] = m.s1.unit_correction.to_string();
    rep.passed = d.result.passed && !bad.result.passed;
    return rep;
}

inline Report covering_eval_cmd(const Config& cfg) {
    const CoveringMap m = build_covering(cfg.params(), cfg.order, cfg.checked_ring());
    json points = json::array();
    for (complex z : parse_complex_list(cfg.z)) {
        if (z == complex(0.0, 0.0)) throw usage_error("--z must be nonzero");
        const auto p = covering_eval(m, z);
        points.push_back({{"z", to_json(z)}, {"x0", to_json(p.x0)}, {"x1", to_json(p.x1)}, {"err0", p.err0}, {"err1", p.err1}});
    }
    Report rep;
    rep.results["points"] = points;
    rep.passed = true;
    return rep;
}

inline json ramification_json(const RamificationReport& r) {
    return {{"points", to_json(r.points)},
            {"predicted", to_json(r.predicted)},
            {"w1_critical", to_json(r.w1_critical)},
            {"w2_critical_image", to_json(r.w2_critical_image)},
            {"fiber_counts", r.fiber_counts},
            {"max_prediction_error", r.max_prediction_error},
            {"max_critical_error", r.max_critical_error},
            {"generic", r.generic}};
}

inline Report covering_branch(const Config& cfg) {
    const RamificationReport r = ramification_analysis(cfg.params(), cfg.root_tol);
    Report rep;
    rep.results = ramification_json(r);
    rep.passed = r.passed;
    return rep;
}

inline Report covering_degree(const Config& cfg) {
    const KahlerParams p = cfg.params();
    const CoveringMap m = build_covering(p, cfg.order, cfg.checked_ring());
    const std::vector<std::pair<std::string, std::array<complex, 2>>> combos{
        {"s1", {1.0, 0.0}},
        {"s2", {0.0, 1.0}},
        {"s1 + s2", {1.0, 1.0}},
        {"s1 - (0.3+0.7i) s2", {1.0, complex(-0.3, -0.7)}},
        {"(-2+0.5i) s1 + s2", {complex(-2.0, 0.5), 1.0}},
    };
    Report rep;
    rep.passed = m.s1.automorphy == m.s2.automorphy;
    json stages = json::array();
    for (const auto& [name, c] : combos) {
        const Evaluator f = [&, c = c](complex z) {
            return c[0] * section_value(m, 1, z).value + c[1] * section_value(m, 2, z).value;
        };
        const int zeros = count_zeros(f, p);
        stages.push_back({{"name", name}, {"zeros", zeros}, {"passed", zeros == 2}});
        rep.passed = rep.passed && zeros == 2;
    }
    rep.results = {{"stages", stages},
                   {"automorphy", json::array({m.s1.automorphy.to_string(), m.s2.automorphy.to_string()})},
                   {"degree", m.s1.automorphy == m.s2.automorphy ? json(-m.s1.automorphy.z_exponent()) : json(nullptr)}};
    return rep;
}

inline Report covering_plot(const Config& cfg) {
    if (cfg.out_path.empty()) throw usage_error("covering plot needs --out FILE.svg");
    const KahlerParams p = cfg.params();
    const RamificationReport r = ramification_analysis(p, cfg.root_tol);
    std::optional<CoveringMap> m;
    if (cfg.grid_lines > 0) m = build_covering(p, cfg.order, cfg.checked_ring());
    std::ostringstream svg;
    emit_svg(svg, p, r.points, m ? &*m : nullptr, SvgOptions{cfg.grid_lines});
    std::ofstream f(cfg.out_path, std::ios::binary);
    if (!f || !(f << svg.str()) || !f.flush()) throw std::runtime_error("cannot write " + cfg.out_path);
    Report rep;
    rep.results = {{"points", to_json(r.points)}, {"svg", cfg.out_path}, {"grid_lines", cfg.grid_lines}};
    rep.passed = r.passed;
    return rep;
}

inline Report cycle_report_cmd(const Config& cfg) {
    std::vector<complex> taus;
    if (!cfg.taus.empty()) taus = parse_complex_list(cfg.taus);
    if (taus.empty()) taus.assign(static_cast<std::size_t>(cfg.n > 0 ? cfg.n : 2), parse_complex(cfg.tau1));
    if (cfg.n > 0 && static_cast<int>(taus.size()) != cfg.n)
        throw usage_error("--taus lists " + std::to_string(taus.size()) + " values but --n is " + std::to_string(cfg.n));
    CycleParams c;
    try {
        c = make_cycle(taus);
    } catch (const domain_error& e) {
        throw usage_error(e.what());
    }
    const CycleReport r = cycle_report(c, cfg.order);
    json sections = json::array();
    for (const auto& d : r.sections) {
        json s{{"k", d.k},
               {"automorphy", d.automorphy.to_string()},
               {"z_degree", d.automorphy.z_exponent()},
               {"translation_point", d.translation_point.to_string()},
               {"closed_form", to_json(d.closed_form)}};
        s["theta"] = d.theta ? json{{"a", to_json(d.theta->a)},
                                    {"shift", d.theta->shift.to_string()},
                                    {"unit", d.theta->unit.to_string()},
                                    {"local_shift", d.theta->local_shift}}
                             : json(nullptr);
        s["corrected_automorphy"] = d.corrected_automorphy ? json(d.corrected_automorphy->to_string()) : json(nullptr);
        sections.push_back(s);
    }
    Report rep;
    rep.results = {{"n", r.n},
                   {"degenerate", r.degenerate},
                   {"sections", sections},
                   {"sample_points", to_json(r.sample_points)},
                   {"singular_values", r.singular_values},
                   {"rank", r.rank},
                   {"shared_corrected_automorphy", r.shared_corrected_automorphy},
                   {"notes", r.notes}};
    rep.results["basis_claim"] = r.basis_claim ? json(*r.basis_claim) : json(nullptr);
    rep.passed = r.passed;
    return rep;
}

inline Report affine_glue(const Config& cfg) {
    const KahlerParams p = cfg.params();
    const auto [i1, i2, circle] = glue_intervals(p);
    const double expected = p.tau1.imag() + p.tau2.imag();
    const bool circ_ok = std::abs(circle.circumference - expected) <= 1e-12 * expected;

    double worst_trip = 0.0;
    for (const auto& iv : {i1, i2}) {
        const auto back = interval_for(annulus_for(iv));
        worst_trip = std::max({worst_trip, std::abs(back.lo - iv.lo), std::abs(back.hi - iv.hi)});
    }
    for (int index : {1, 2}) {
        const Annulus a = lg_family(index, p).z_plane, back = annulus_for(interval_for(a));
        worst_trip = std::max({worst_trip, std::abs(back.r_in - a.r_in) / a.r_in, std::abs(back.r_out - a.r_out) / a.r_out});
    }
    const bool trip_ok = worst_trip <= 1e-12;

    json annuli = json::array();
    double worst_seam = 0.0;
    for (int index = -6; index <= 6; ++index) {
        const Annulus a = lg_family(index, p).z_plane;
        annuli.push_back({{"index", index}, {"r_in", a.r_in}, {"r_out", a.r_out}});
        if (index < 6) {
            const Annulus next = lg_family(index + 1, p).z_plane;
            worst_seam = std::max(worst_seam, std::abs(a.r_in - next.r_out) / a.r_in);
        }
    }
    const bool tile_ok = worst_seam <= 1e-12;

    auto stage = [](const std::string& name, bool ok, const std::string& detail) {
        return json{{"name", name}, {"passed", ok}, {"detail", detail}, {"first_discrepancy", nullptr}};
    };
    Report rep;
    rep.results = {
        {"intervals", json::array({json{{"lo", i1.lo}, {"hi", i1.hi}, {"length", i1.length()}},
                                   json{{"lo", i2.lo}, {"hi", i2.hi}, {"length", i2.length()}}})},
        {"circle", {{"circumference", circle.circumference}, {"shift", circle.shift}}},
        {"annuli", annuli},
        {"stages", json::array({stage("circumference", circ_ok, "circumference " + real_text(circle.circumference)),
                                stage("round trip", trip_ok, "worst deviation " + real_text(worst_trip)),
                                stage("tiling", tile_ok, "worst seam mismatch " + real_text(worst_seam))})}};
    rep.passed = circ_ok && trip_ok && tile_ok;
    return rep;
}

inline int write_text(const std::string& path, const std::string& text, std::ostream& err) {
    std::ofstream f(path, std::ios::binary);
    if (!f || !(f << text) || !f.flush()) {
        err << "thetaglue: cannot write " << path << "\n";
        return 1;
    }
    return 0;
}

} // namespace detail

/// Exit code 0 when every check passed, 1 when one failed or output could not be written, 2 on usage errors.
inline int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    Config cfg;
    CLI::App app{"Theta functions on glued Landau-Ginzburg models: verification suites and figures.", "thetaglue"};
    app.fallthrough();
    app.require_subcommand(1);
    app.set_config("--config", "", "read flat key = value settings (keys are the long flag names)");
    app.allow_config_extras(CLI::config_extras_mode::error);
    app.add_option("--tau1", cfg.tau1, "first Kaehler parameter, e.g. 0.5i")->capture_default_str();
    app.add_option("--tau2", cfg.tau2, "second Kaehler parameter")->capture_default_str();
    app.add_option("--taus", cfg.taus, "comma-separated cycle parameters");
    app.add_option("--z", cfg.z, "comma-separated points for covering eval")->capture_default_str();
    app.add_option("--order", cfg.order, "truncation weight N")->capture_default_str();
    app.add_option("--denom", cfg.denom, "exponent lattice denominator D")->capture_default_str();
    app.add_option("--floor", cfg.floor, "lowest admissible q-exponent F")->capture_default_str();
    app.add_option("--descent-tol,--descent_tol", cfg.descent_tol, "chordal tolerance for descent")->capture_default_str();
    app.add_option("--root-tol,--root_tol", cfg.root_tol, "tolerance for ramification points")->capture_default_str();
    app.add_option("--cross-tol,--cross_tol", cfg.cross_tol, "exact/numeric relative tolerance")->capture_default_str();
    app.add_option("--samples", cfg.samples, "random samples for descent")->capture_default_str();
    app.add_option("--cross-points,--cross_points", cfg.cross_points, "exact/numeric cross-check points")->capture_default_str();
    app.add_option("--cross-order,--cross_order", cfg.cross_order, "series order of the cross-check")->capture_default_str();
    app.add_option("--grid-lines,--grid_lines", cfg.grid_lines, "image curves drawn by covering plot")->capture_default_str();
    app.add_option("--seed", cfg.seed, "random seed")->capture_default_str();
    app.add_option("--which", cfg.which, "chain to verify, 1 or 2")->capture_default_str();
    app.add_option("--n", cfg.n, "number of cycle components");
    app.add_option("--j", cfg.j, "chart index for product-formula (default: -4..4)");
    app.add_option("--k", cfg.k, "parameter index for product-formula (default: 1 and 2)");
    app.add_option("--json", cfg.json_path, "write the JSON report to FILE instead of standard output");
    app.add_option("--out", cfg.out_path, "SVG output for covering plot");
    app.add_flag("--timing", cfg.timing, "record wall time in the report");

    using Handler = std::function<Report(const Config&)>;
    std::vector<std::tuple<CLI::App*, std::string, Handler>> leaves;
    auto group = [&](const std::string& name, const std::string& desc) {
        CLI::App* g = app.add_subcommand(name, desc);
        g->require_subcommand(1);
        return g;
    };
    auto leaf = [&](CLI::App* parent, const std::string& name, const std::string& desc, Handler h) {
        CLI::App* s = parent->add_subcommand(name, desc);
        leaves.emplace_back(s, parent->get_name() + " " + name, std::move(h));
    };
    CLI::App* verify = group("verify", "exact and numeric verification suites");
    leaf(verify, "jtp", "Jacobi triple product at weight N", detail::verify_jtp);
    leaf(verify, "chain", "product -> theta chain for W'_1 or W'_2", detail::verify_chain);
    leaf(verify, "product-formula", "chart product identity", detail::verify_product_formula);
    leaf(verify, "qh", "Jacobian ring against quantum cohomology of P^1", detail::verify_qh);
    leaf(verify, "descent", "descent of the covering to the elliptic curve", detail::verify_descent);
    CLI::App* covering = group("covering", "the degree-2 map to P^1");
    leaf(covering, "eval", "evaluate [s1 : s2] at --z", detail::covering_eval_cmd);
    leaf(covering, "branch", "ramification points", detail::covering_branch);
    leaf(covering, "degree", "zero counts of sections", detail::covering_degree);
    leaf(covering, "plot", "SVG of the fundamental annulus", detail::covering_plot);
    CLI::App* cycle = group("cycle", "cycles of n rational curves");
    leaf(cycle, "report", "sections, automorphy and rank", detail::cycle_report_cmd);
    CLI::App* affine = group("affine", "affine structure of the base");
    leaf(affine, "glue", "glued intervals and annuli", detail::affine_glue);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? 0 : 2;
    }

    const auto chosen = std::find_if(leaves.begin(), leaves.end(), [](const auto& l) { return std::get<0>(l)->parsed(); });
    if (chosen == leaves.end()) {
        err << "thetaglue: no command given\n" << app.help();
        return 2;
    }

    Report rep;
    const auto start = std::chrono::steady_clock::now();
    try {
        cfg.validate();
        json params = cfg.echo();
        try {
            rep = std::get<2>(*chosen)(cfg);
        } catch (const convergence_failure& e) {
            rep.results["error"] = e.what();
            rep.passed = false;
        } catch (const contour_failure& e) {
            rep.results["error"] = e.what();
            rep.passed = false;
        }
        rep.params = std::move(params);
    } catch (const lattice_violation& e) {
        err << "thetaglue: the exponent lattice cannot hold this computation: " << e.what() << "\n";
        return 2;
    } catch (const floor_violation& e) {
        err << "thetaglue: exponent below --floor: " << e.what() << "\n";
        return 2;
    } catch (const error& e) {
        err << "thetaglue: " << e.what() << "\n";
        return 2;
    } catch (const std::runtime_error& e) {  // output files
        err << "thetaglue: " << e.what() << "\n";
        return 1;
    }
    rep.command = std::get<1>(*chosen);
    if (cfg.timing) rep.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();

    const std::string text = stable_dump(rep.envelope());
    if (cfg.json_path.empty()) {
        out << text;
    } else {
        if (detail::write_text(cfg.json_path, text, err) != 0) return 1;
        out << rep.command << ": " << (rep.passed ? "passed" : "FAILED") << "\n";
    }
    return rep.passed ? 0 : 1;
}

} // namespace thetaglue::cli
