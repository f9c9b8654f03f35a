#include <cmath>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "cpxapprox/approx.hpp"
#include "cpxapprox/duality.hpp"
#include "cpxapprox/io.hpp"
#include "cpxapprox/projections.hpp"

using nlohmann::json;
using namespace cpx;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitUnknownInput = 2;
constexpr int kExitMismatch = 3;
constexpr int kExitNoConvergence = 4;

struct CommonOpts {
    std::string instance;
    double tol = 1e-8;
    std::uint64_t seed = 0;
    int samples = 10000;
    std::string csv;
};

void add_common(CLI::App* cmd, CommonOpts& o, bool needs_instance) {
    auto* i = cmd->add_option("-i,--instance", o.instance, "instance file (JSON)");
    if (needs_instance) i->required();
    cmd->add_option("--tol", o.tol, "numerical tolerance")->capture_default_str();
    cmd->add_option("--seed", o.seed, "random seed")->capture_default_str();
    cmd->add_option("--samples", o.samples, "sample budget")->capture_default_str();
    cmd->add_option("--csv", o.csv, "write probe table as CSV to this path");
}

json provenance(const CommonOpts& o) {
    return json{{"tol", o.tol}, {"seed", o.seed}, {"samples", o.samples}};
}

void emit(const json& report) { std::cout << report.dump(2) << "\n"; }

json dump_real_vector(const RealVector& v) {
    json j = json::array();
    for (Eigen::Index i = 0; i < v.size(); ++i) j.push_back(v[i]);
    return j;
}

const char* status_name(UniquenessStatus s) {
    switch (s) {
        case UniquenessStatus::NotBest: return "not-best";
        case UniquenessStatus::BestNonunique: return "best-nonunique";
        case UniquenessStatus::Unique: return "unique";
        case UniquenessStatus::OneStrong: return "one-strong";
        case UniquenessStatus::TwoStrong: return "two-strong";
    }
    return "unknown";
}

json uniqueness_json(const UniquenessReport& rep) {
    json j;
    j["status"] = status_name(rep.status);
    if (rep.constant) j["constant"] = *rep.constant;
    if (rep.witness) j["witness"] = iojson::dump_vector(*rep.witness);
    return j;
}

const Subspace& need_subspace(const InstanceFile& f) {
    if (!f.subspace) throw ValidationError("subspace: required by this command");
    return *f.subspace;
}

const Vector& need_x(const InstanceFile& f) {
    if (!f.x) throw ValidationError("x: required by this command");
    return *f.x;
}

ProjectionRep need_projection(const InstanceFile& f) {
    if (!f.projection) throw ValidationError("projection: required by this command");
    return make_projection(need_subspace(f), f.projection->first, f.projection->second);
}

std::vector<double> log_grid(double tmax, double tmin, int count) {
    if (!(tmax > tmin) || !(tmin > 0) || count < 2)
        throw ValidationError("probe grid: need tmax > tmin > 0 and at least 2 points");
    std::vector<double> ts;
    for (int i = 0; i < count; ++i) {
        double f = static_cast<double>(i) / (count - 1);
        ts.push_back(std::exp(std::log(tmax) * (1 - f) + std::log(tmin) * f));
    }
    return ts;
}

void write_probe_csv(const std::string& path, const AlphaProbeReport& rep) {
    if (path.empty()) return;
    std::ofstream out(path);
    if (!out) throw ValidationError("csv: cannot open output path " + path);
    out << "t,ratio,alpha,verdict-flag\n";
    int flag = rep.verdict == ProbeVerdict::BoundedBelow ? 1 : 0;
    for (std::size_t i = 0; i < rep.ts.size(); ++i)
        out << rep.ts[i] << "," << rep.ratios[i] << "," << rep.alpha << "," << flag << "\n";
}

json probe_json(const AlphaProbeReport& rep) {
    json j;
    j["alpha"] = rep.alpha;
    j["ts"] = rep.ts;
    j["ratios"] = rep.ratios;
    j["verdict"] = rep.verdict == ProbeVerdict::BoundedBelow ? "bounded-below" : "vanishing";
    return j;
}

// ---------------------------------------------------------------------------
// Named reference cases.  Each prints its defining data and the computed
// quantities, checks them against the expected values, and reports pass/fail.
// ---------------------------------------------------------------------------

struct CaseCheck {
    json details;
    bool pass = true;
    void expect(const std::string& what, bool ok) {
        details["checks"].push_back(json{{"check", what}, {"pass", ok}});
        pass = pass && ok;
    }
};

ApproxInstance linf4_instance() {
    Vector x(4), u(4), v(4);
    x << Complex(1, 0), Complex(1, 0), Complex(1, 0), Complex(1, 0);
    u << Complex(0, 0), Complex(0, 0), Complex(0, -1), Complex(0, 1);
    v << Complex(0, 1), Complex(0, -1), Complex(1, -1), Complex(1, 1);
    Matrix B(4, 2);
    B.col(0) = u;
    B.col(1) = v;
    return {NormHandle::linf(4), Subspace::from_span(B), x};
}

CaseCheck case_linf4() {
    CaseCheck c;
    auto inst = linf4_instance();
    c.details["x"] = iojson::dump_vector(inst.x);
    c.details["span"] = iojson::dump_matrix(inst.Y.span());
    Vector u = inst.Y.span().col(0), v = inst.Y.span().col(1);
    // reconstruct the generating directions from the raw definition
    u << Complex(0, 0), Complex(0, 0), Complex(0, -1), Complex(0, 1);
    v << Complex(0, 1), Complex(0, -1), Complex(1, -1), Complex(1, 1);
    double worst = 0.0;
    for (int n = 1; n <= 100; ++n) {
        double a = 1.0 / n - 1.0 / (static_cast<double>(n) * n);
        double b = 1.0 / (static_cast<double>(n) * n);
        Vector yn = a * u + b * v;
        auto rep = alpha_probe(inst, yn, 2.0, {1.0});
        double expect = 1.0 / (static_cast<double>(n) * n + 1.0);
        worst = std::max(worst, std::abs(rep.ratios[0] - expect));
    }
    c.details["max_ratio_error"] = worst;
    c.expect("probe ratio equals 1/(n^2+1) for n=1..100 within 1e-9", worst <= 1e-9);
    auto rep = certify_adjoint(inst);
    c.details["certify_status"] = status_name(rep.status);
    c.expect("certify_adjoint returns unique", rep.status == UniquenessStatus::Unique);
    return c;
}

CaseCheck case_l1_alpha2() {
    CaseCheck c;
    Vector x(4), y(4);
    x << Complex(1, 0), Complex(1, 0), Complex(1, 0), Complex(1, 0);
    y << Complex(1, 0), Complex(-1, 0), Complex(0, 1), Complex(0, -1);
    Matrix B(4, 1);
    B.col(0) = y;
    ApproxInstance inst{NormHandle::l1(4), Subspace::from_span(B), x};
    c.details["x"] = iojson::dump_vector(x);
    c.details["direction"] = iojson::dump_vector(y);

    auto rep = certify_l1(inst);
    c.details["certify_status"] = status_name(rep.status);
    if (rep.constant) c.details["constant"] = *rep.constant;
    c.expect("certify_l1 returns two-strong with a positive constant",
             rep.status == UniquenessStatus::TwoStrong && rep.constant && *rep.constant > 0);

    double worst = 0.0;
    std::vector<double> curve_ts;
    for (int k = 1; k <= 9; ++k) curve_ts.push_back(0.1 * k);
    for (double alpha : {1.5, 2.0}) {
        auto pr = alpha_probe(inst, y, alpha, curve_ts);
        for (std::size_t i = 0; i < pr.ts.size(); ++i) {
            double t = pr.ts[i];
            double curve = std::pow(2.0 + 2.0 * std::sqrt(1.0 + t * t), alpha);
            double expect = (curve - std::pow(4.0, alpha)) / std::pow(4.0 * t, alpha);
            worst = std::max(worst, std::abs(pr.ratios[i] - expect));
        }
    }
    c.details["max_curve_error"] = worst;
    c.expect("exact increment curve reproduced within 1e-9", worst <= 1e-9);

    std::vector<double> small;
    for (int k = 1; k <= 6; ++k) small.push_back(std::pow(10.0, -k));
    auto low = alpha_probe(inst, y, 1.5, small);
    auto two = alpha_probe(inst, y, 2.0, small);
    c.details["verdict_alpha_1.5"] = probe_json(low)["verdict"];
    c.details["verdict_alpha_2.0"] = probe_json(two)["verdict"];
    c.expect("alpha=1.5 probe vanishes", low.verdict == ProbeVerdict::Vanishing);
    c.expect("alpha=2.0 probe bounded below", two.verdict == ProbeVerdict::BoundedBelow);
    return c;
}

CaseCheck case_linf_hyperplane(std::uint64_t seed) {
    CaseCheck c;
    Vector f(3);
    f << Complex(1.0 / 3, 0), Complex(1.0 / 3, 0), Complex(1.0 / 3, 0);
    c.details["f"] = iojson::dump_vector(f);
    auto res = linfty_hyperplane_minimal(f);
    c.details["lambda"] = res.lambda;
    c.details["projection_norm"] = res.norm;
    c.expect("lambda = 1/3", std::abs(res.lambda - 1.0 / 3) <= 1e-12);
    c.expect("projection norm = 4/3", std::abs(res.norm - 4.0 / 3) <= 1e-12);

    NormHandle h = NormHandle::linf(3);
    auto cm = chalmers_metcalf(res.P, h);
    c.details["cm_trace"] = cm.trace;
    c.details["cm_weights"] = dump_real_vector(cm.weights);
    c.expect("CM trace equals the projection norm within 1e-6",
             std::abs(cm.trace - res.norm) <= 1e-6);
    c.expect("CM weights all positive", cm.all_weights_positive);

    auto search = minimal_projection_search(h, res.P.Y, 1e-6, 20, seed, 200);
    c.details["search_value"] = search.value;
    c.expect("search reaches 1+lambda within 1e-4", std::abs(search.value - res.norm) <= 1e-4);
    return c;
}

CaseCheck case_lp_1dim() {
    CaseCheck c;
    const double p = 1.5, q = 3.0;
    NormHandle h = NormHandle::lp(p, 3);
    Vector y(3), f0(3);
    y << Complex(1, 0), Complex(0, 0), Complex(0, 0);
    f0 = y;
    c.details["p"] = p;
    c.details["q"] = q;
    c.details["y"] = iojson::dump_vector(y);

    // tilted rank-one projections P_t(z) = f_t(z) y with f_t = (1, t, 0):
    // ||P_t|| = (1 + t^q)^{1/q}, so the alpha-increment ratio scales as t^{q-alpha}
    double worst_formula = 0.0;
    for (double t : {1e-1, 1e-2, 1e-3}) {
        Vector ft(3);
        ft << Complex(1, 0), Complex(t, 0), Complex(0, 0);
        double npf = onedim_projection_norm(h, y, ft);
        worst_formula =
            std::max(worst_formula, std::abs(npf - std::pow(1.0 + std::pow(t, q), 1.0 / q)));
    }
    c.details["max_norm_formula_error"] = worst_formula;
    c.expect("one-dimensional norms match (1+t^q)^{1/q} within 1e-12", worst_formula <= 1e-12);

    json slopes = json::object();
    bool all_ok = true;
    for (double alpha : {1.0, 2.0, 2.5}) {
        std::vector<double> lt, lr;
        for (int k = 1; k <= 6; ++k) {
            double t = std::pow(10.0, -k);
            // ratio = (||P_t||^alpha - 1) / t^alpha, evaluated in a
            // cancellation-free form for the smallest scales
            double num = std::expm1((alpha / q) * std::log1p(std::pow(t, q)));
            lt.push_back(std::log(t));
            lr.push_back(std::log(num) - alpha * std::log(t));
        }
        double n = static_cast<double>(lt.size());
        double mt = 0, mr = 0;
        for (std::size_t i = 0; i < lt.size(); ++i) {
            mt += lt[i];
            mr += lr[i];
        }
        mt /= n;
        mr /= n;
        double cov = 0, var = 0;
        for (std::size_t i = 0; i < lt.size(); ++i) {
            cov += (lt[i] - mt) * (lr[i] - mr);
            var += (lt[i] - mt) * (lt[i] - mt);
        }
        double slope = cov / var;
        slopes[std::to_string(alpha)] = slope;
        all_ok = all_ok && std::abs(slope - (q - alpha)) <= 0.05;
    }
    c.details["loglog_slopes"] = slopes;
    c.expect("log-log slopes within 0.05 of q-alpha for alpha in {1, 2, 2.5}", all_ok);
    return c;
}

CaseCheck case_duality_witness(std::uint64_t seed) {
    CaseCheck c;
    Rng rng(seed + 77);
    Matrix V(2, 3);
    while (true) {
        for (int j = 0; j < 3; ++j) V.col(j) = rng.cgaussian_vector(2);
        Eigen::JacobiSVD<Matrix> svd(V);
        if (svd.singularValues()(1) < 1e-2 * svd.singularValues()(0)) continue;
        Matrix E = essentialize(V);
        if (E.cols() == 3) {
            V = E;
            break;
        }
    }
    NormHandle P = NormHandle::vertex(V);
    c.details["vertices"] = iojson::dump_matrix(P.generators());
    auto fam = non_self_duality_witness(P, 8, seed);
    c.details["k"] = fam.k;
    c.details["l"] = fam.l;
    c.details["family_size"] = fam.functionals.size();

    bool norms_ok = true, values_ok = true, distinct_ok = true;
    const Matrix& U = P.generators();
    for (const Vector& f : fam.functionals) {
        norms_ok = norms_ok && std::abs(dual_norm_eval(P, f) - 1.0) <= 1e-8;
        RealVector mods = (U.adjoint() * f).cwiseAbs();
        for (Eigen::Index j = 0; j < U.cols(); ++j) {
            double m = mods[j];
            if (j == fam.k || j == fam.l)
                values_ok = values_ok && std::abs(m - 1.0) <= 1e-8;
            else
                values_ok = values_ok && m < 1.0 - 1e-10;
        }
    }
    for (std::size_t i = 0; i < fam.functionals.size(); ++i)
        for (std::size_t j = i + 1; j < fam.functionals.size(); ++j) {
            Complex ri = pairing(fam.functionals[i], U.col(fam.l)) /
                         pairing(fam.functionals[i], U.col(fam.k));
            Complex rj = pairing(fam.functionals[j], U.col(fam.l)) /
                         pairing(fam.functionals[j], U.col(fam.k));
            distinct_ok = distinct_ok && std::abs(ri - rj) > 1e-12;
        }
    c.expect("8 functionals of dual norm 1 within 1e-8", norms_ok);
    c.expect("two shared unit-modulus vertex values, others strictly below 1", values_ok);
    c.expect("pairwise non-proportional members", distinct_ok);
    return c;
}

int run_named_case(const std::string& name, const CommonOpts& o) {
    CaseCheck c;
    if (name == "linf4-counterexample")
        c = case_linf4();
    else if (name == "l1-alpha2")
        c = case_l1_alpha2();
    else if (name == "linf-hyperplane")
        c = case_linf_hyperplane(o.seed);
    else if (name == "lp-1dim")
        c = case_lp_1dim();
    else if (name == "duality-witness")
        c = case_duality_witness(o.seed);
    else
        throw UnknownCase("unknown case: " + name);
    json rep;
    rep["command"] = "run-case " + name;
    rep["status"] = c.pass ? "pass" : "fail";
    rep["details"] = c.details;
    rep["provenance"] = provenance(o);
    emit(rep);
    return c.pass ? kExitOk : kExitMismatch;
}

}  // namespace

int main(int argc, char** argv) {
    if (const char* th = std::getenv("CPX_APPROX_THREADS")) {
        int n = std::atoi(th);
        if (n > 0) Eigen::setNbThreads(n);
    }

    CLI::App app{"complex polytope norm and minimal projection toolkit"};
    app.require_subcommand(1);

    CommonOpts o;
    std::string method = "auto";
    double alpha = 2.0;
    double tmax = 1e-1, tmin = 1e-6;
    int tcount = 6;
    int restarts = 50, iterations = 240;
    int family_size = 8;
    bool evidence = false;
    double real_tol = 1e-9;
    std::string case_name;

    auto* c_norm = app.add_subcommand("norm-eval", "evaluate the norm at x");
    add_common(c_norm, o, true);
    auto* c_dual = app.add_subcommand("dual-eval", "evaluate the dual norm at x");
    add_common(c_dual, o, true);
    auto* c_best = app.add_subcommand("best-approx", "best approximation of x in the subspace");
    add_common(c_best, o, true);
    auto* c_cert = app.add_subcommand("certify", "certify uniqueness of the best approximation");
    add_common(c_cert, o, true);
    c_cert->add_option("--method", method, "auto | adjoint | l1 | general")
        ->capture_default_str();
    auto* c_strong = app.add_subcommand("strong-constant",
                                        "estimate the alpha-strong uniqueness constant");
    add_common(c_strong, o, true);
    c_strong->add_option("--alpha", alpha, "strong uniqueness exponent")->capture_default_str();
    auto* c_probe = app.add_subcommand("alpha-probe", "increment-ratio probe along y0");
    add_common(c_probe, o, true);
    c_probe->add_option("--alpha", alpha, "strong uniqueness exponent")->capture_default_str();
    c_probe->add_option("--tmax", tmax, "largest probe scale")->capture_default_str();
    c_probe->add_option("--tmin", tmin, "smallest probe scale")->capture_default_str();
    c_probe->add_option("--tcount", tcount, "number of probe scales")->capture_default_str();
    auto* c_minproj = app.add_subcommand("min-proj", "search for a minimal projection");
    add_common(c_minproj, o, true);
    c_minproj->add_option("--restarts", restarts, "search restarts")->capture_default_str();
    c_minproj->add_option("--iterations", iterations, "descent iterations")
        ->capture_default_str();
    auto* c_cm = app.add_subcommand("cm", "Chalmers-Metcalf operator for a projection");
    add_common(c_cm, o, true);
    auto* c_real = app.add_subcommand("realify-certify",
                                      "strong minimality certificate via realification");
    add_common(c_real, o, true);
    c_real->add_flag("--evidence", evidence,
                     "assert uniqueness evidence for the given projection");
    c_real->add_option("--real-tol", real_tol, "realness tolerance for the projection")
        ->capture_default_str();
    auto* c_wit = app.add_subcommand("duality-witness", "non-self-duality witness family");
    add_common(c_wit, o, true);
    c_wit->add_option("--count", family_size, "family size K")->capture_default_str();
    auto* c_case = app.add_subcommand("run-case", "run a named reference case");
    add_common(c_case, o, false);
    c_case->add_option("name", case_name, "case name")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? kExitOk : kExitUsage;
    }

    try {
        if (*c_case) return run_named_case(case_name, o);

        InstanceFile inst = parse_instance(o.instance);
        json rep;
        rep["provenance"] = provenance(o);
        rep["status"] = "ok";

        if (*c_norm) {
            rep["command"] = "norm-eval";
            rep["value"] = norm_eval(inst.norm, need_x(inst), o.tol);
        } else if (*c_dual) {
            rep["command"] = "dual-eval";
            rep["value"] = dual_norm_eval(inst.norm, need_x(inst), o.tol);
        } else if (*c_best) {
            rep["command"] = "best-approx";
            ApproxInstance ai{inst.norm, need_subspace(inst), need_x(inst)};
            auto res = best_approximation(ai, o.tol);
            rep["distance"] = res.distance;
            rep["y_star"] = iojson::dump_vector(res.y_star);
            rep["dual_cert"] = iojson::dump_vector(res.dual_cert);
        } else if (*c_cert) {
            rep["command"] = "certify";
            ApproxInstance ai{inst.norm, need_subspace(inst), need_x(inst)};
            UniquenessReport ur;
            std::string used = method;
            if (used == "auto")
                used = inst.norm.kind() == NormKind::Facet ? "adjoint" : "l1";
            if (used == "adjoint")
                ur = certify_adjoint(ai);
            else if (used == "l1")
                ur = certify_l1(ai, false, o.seed);
            else if (used == "general")
                ur = general_2strong_check(ai, o.seed, o.samples);
            else
                throw ValidationError("--method: must be auto, adjoint, l1, or general");
            rep["method"] = used;
            rep["result"] = uniqueness_json(ur);
        } else if (*c_strong) {
            rep["command"] = "strong-constant";
            ApproxInstance ai{inst.norm, need_subspace(inst), need_x(inst)};
            auto est = estimate_alpha_constant(ai, alpha, o.samples, o.seed);
            rep["alpha"] = alpha;
            rep["r_hat"] = est.r_hat;
            rep["worst_dir"] = iojson::dump_vector(est.worst_dir);
        } else if (*c_probe) {
            rep["command"] = "alpha-probe";
            AlphaProbeReport pr;
            auto ts = log_grid(tmax, tmin, tcount);
            if (inst.projection) {
                if (!inst.y0) throw ValidationError("y0: probe direction required");
                pr = proj_alpha_probe(inst.norm, need_projection(inst), *inst.y0, alpha, ts);
            } else {
                ApproxInstance ai{inst.norm, need_subspace(inst), need_x(inst)};
                if (!inst.y0) throw ValidationError("y0: probe direction required");
                pr = alpha_probe(ai, *inst.y0, alpha, ts);
            }
            rep["probe"] = probe_json(pr);
            write_probe_csv(o.csv, pr);
        } else if (*c_minproj) {
            rep["command"] = "min-proj";
            auto res = minimal_projection_search(inst.norm, need_subspace(inst), o.tol,
                                                 restarts, o.seed, iterations);
            rep["value"] = res.value;
            rep["g"] = iojson::dump_matrix(res.P.g);
            rep["w"] = iojson::dump_matrix(res.P.w);
            rep["max_iterations"] = res.max_iterations;
            emit(rep);
            return res.max_iterations ? kExitNoConvergence : kExitOk;
        } else if (*c_cm) {
            rep["command"] = "cm";
            auto cm = chalmers_metcalf(need_projection(inst), inst.norm, o.tol);
            rep["trace"] = cm.trace;
            rep["weights"] = dump_real_vector(cm.weights);
            rep["pair_count"] = cm.pairs.size();
            rep["all_weights_positive"] = cm.all_weights_positive;
            rep["no_common_kernel_on_Y"] = cm.no_common_kernel_on_Y;
            rep["T"] = iojson::dump_matrix(cm.T);
        } else if (*c_real) {
            rep["command"] = "realify-certify";
            auto ur = realify_and_certify(inst.norm, need_subspace(inst),
                                          need_projection(inst), evidence, o.seed, real_tol);
            rep["result"] = uniqueness_json(ur);
        } else if (*c_wit) {
            rep["command"] = "duality-witness";
            auto fam = non_self_duality_witness(inst.norm, family_size, o.seed);
            rep["k"] = fam.k;
            rep["l"] = fam.l;
            json fs = json::array();
            for (const Vector& f : fam.functionals) fs.push_back(iojson::dump_vector(f));
            rep["functionals"] = fs;
            json ts = json::array();
            for (Complex t : fam.ts) ts.push_back(iojson::dump_complex(t));
            rep["ts"] = ts;
        }
        emit(rep);
        return kExitOk;
    } catch (const RetryExhausted& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitNoConvergence;
    } catch (const NoCertificate& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitNoConvergence;
    } catch (const Infeasible& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitNoConvergence;
    } catch (const Error& e) {
        // parse, validation, unknown-case, and precondition problems: bad input
        std::cerr << "error: " << e.what() << "\n";
        return kExitUnknownInput;
    }
}
