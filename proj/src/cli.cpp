#include "prymlab/cli.hpp"

#include <cinttypes>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <memory>
#include <optional>
#include <random>
#include <sstream>

#include "CLI11.hpp"
#include "prymlab/errors.hpp"

namespace prymlab {

namespace {

std::string trim(const std::string& s) {
    size_t a = s.find_first_not_of(" \t\r");
    if (a == std::string::npos) return "";
    size_t b = s.find_last_not_of(" \t\r");
    return s.substr(a, b - a + 1);
}

std::vector<std::string> split_ws(const std::string& s) {
    std::istringstream in(s);
    std::vector<std::string> out;
    std::string tok;
    while (in >> tok) out.push_back(tok);
    return out;
}

double parse_double(const std::string& key, const std::string& v) {
    try {
        size_t pos = 0;
        double x = std::stod(v, &pos);
        if (pos != v.size()) throw std::invalid_argument(v);
        return x;
    } catch (const std::exception&) {
        throw ConfigError("config: bad number for '" + key + "': " + v);
    }
}

long parse_long(const std::string& key, const std::string& v) {
    try {
        size_t pos = 0;
        long x = std::stol(v, &pos);
        if (pos != v.size()) throw std::invalid_argument(v);
        return x;
    } catch (const std::exception&) {
        throw ConfigError("config: bad integer for '" + key + "': " + v);
    }
}

bool parse_bool(const std::string& key, const std::string& v) {
    if (v == "1" || v == "true" || v == "yes") return true;
    if (v == "0" || v == "false" || v == "no") return false;
    throw ConfigError("config: bad boolean for '" + key + "': " + v);
}

// a branch parameter is either "re" or "re,im"
cplx parse_cplx(const std::string& key, const std::string& v) {
    size_t comma = v.find(',');
    if (comma == std::string::npos) return cplx{parse_double(key, v), 0.0};
    return cplx{parse_double(key, v.substr(0, comma)),
                parse_double(key, v.substr(comma + 1))};
}

const std::vector<std::string> kStageNames{"periods", "verify", "ba", "schrodinger"};

bool known_stage(const std::string& s) {
    if (s == "all") return true;
    for (const auto& n : kStageNames)
        if (n == s) return true;
    return false;
}

std::string fmt_double(double x) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

void dump_value(const Json& j, std::string& out, int indent) {
    const std::string pad(static_cast<size_t>(indent) * 2, ' ');
    switch (j.type()) {
        case Json::value_t::object: {
            if (j.empty()) {
                out += "{}";
                return;
            }
            out += "{\n";
            size_t i = 0;
            for (auto it = j.begin(); it != j.end(); ++it, ++i) {
                out += pad + "  " + Json(it.key()).dump() + ": ";
                dump_value(it.value(), out, indent + 1);
                out += (i + 1 < j.size()) ? ",\n" : "\n";
            }
            out += pad + "}";
            return;
        }
        case Json::value_t::array: {
            if (j.empty()) {
                out += "[]";
                return;
            }
            out += "[\n";
            for (size_t i = 0; i < j.size(); ++i) {
                out += pad + "  ";
                dump_value(j[i], out, indent + 1);
                out += (i + 1 < j.size()) ? ",\n" : "\n";
            }
            out += pad + "]";
            return;
        }
        case Json::value_t::number_float:
            out += fmt_double(j.get<double>());
            return;
        default:
            out += j.dump();
            return;
    }
}

bool type_matches(const Json& v, const std::string& t) {
    if (t == "object") return v.is_object();
    if (t == "array") return v.is_array();
    if (t == "string") return v.is_string();
    if (t == "boolean") return v.is_boolean();
    if (t == "integer") return v.is_number_integer();
    if (t == "number") return v.is_number();
    return false;
}

bool validate_node(const Json& v, const Json& schema, const std::string& path,
                   std::string* err) {
    if (schema.contains("type") && !type_matches(v, schema["type"].get<std::string>())) {
        if (err) *err = path + ": expected " + schema["type"].get<std::string>();
        return false;
    }
    if (schema.contains("required"))
        for (const auto& k : schema["required"]) {
            if (!v.contains(k.get<std::string>())) {
                if (err) *err = path + ": missing required key '" + k.get<std::string>() + "'";
                return false;
            }
        }
    if (v.is_object()) {
        const Json props = schema.value("properties", Json::object());
        for (auto it = v.begin(); it != v.end(); ++it) {
            const Json* sub = nullptr;
            if (props.contains(it.key()))
                sub = &props[it.key()];
            else if (schema.contains("additionalProperties"))
                sub = &schema["additionalProperties"];
            if (sub && !validate_node(it.value(), *sub, path + "/" + it.key(), err))
                return false;
        }
    }
    if (v.is_array() && schema.contains("items"))
        for (size_t i = 0; i < v.size(); ++i)
            if (!validate_node(v[i], schema["items"], path + "/" + std::to_string(i), err))
                return false;
    return true;
}

// -------- shared stage helpers --------

struct Pipeline {
    Curve C;
    PeriodData pd;
    PrymSystem ps;
    explicit Pipeline(const RunConfig& cfg)
        : C(cfg.curve), pd(normalize_differentials(C, build_cycles(C))), ps(C, pd) {}
};

CVec random_e(int h, std::mt19937_64& rng, double scale = 0.4) {
    std::uniform_real_distribution<double> u(-scale, scale);
    CVec e(h);
    for (int i = 0; i < h; ++i) e(i) = cplx{u(rng), u(rng)};
    return e;
}

SurfacePoint random_point(const Curve& C, std::mt19937_64& rng) {
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    double maxb = 0.0;
    for (const cplx& b : C.branch_points()) maxb = std::max(maxb, std::abs(b));
    for (;;) {
        cplx x{u(rng) * 1.2 * maxb, u(rng) * 1.2 * maxb};
        if (C.dist_to_branch(x, x) < 2.0 * C.clearance()) continue;
        cplx y = std::sqrt(C.f(x));
        if (u(rng) < 0.0) y = -y;
        return SurfacePoint::finite(x, y);
    }
}

double lattice_dist(const CVec& v, const LatticeBasis& L) {
    return reduce_mod_lattice(v, L).norm;
}

Json cvec_json(const CVec& v) {
    Json a = Json::array();
    for (int i = 0; i < v.size(); ++i)
        a.push_back(Json::array({v(i).real(), v(i).imag()}));
    return a;
}

Json report_head(const char* stage, const RunConfig& cfg) {
    Json r = Json::object();
    r["stage"] = stage;
    r["family"] = cfg.curve.family == Family::A ? "A" : "B";
    r["seed"] = cfg.seed;
    r["quick"] = cfg.quick;
    return r;
}

int finish(Json& r, StageOutcome& out) {
    bool pass = true;
    for (const auto& [k, v] : r["checks"].items()) {
        (void)k;
        pass = pass && v.get<bool>();
    }
    r["pass"] = pass;
    out.report = std::move(r);
    out.exit_code = pass ? 0 : 1;
    return out.exit_code;
}

// deterministic BA system for the configured seed: draw e until the zero
// search and the cancellation solve both succeed (records the draw count)
struct SeededBA {
    CVec e;
    Divisor zeta;
    std::unique_ptr<BASystem> ba;
    int draws = 0;
};

SeededBA make_ba(const PrymSystem& ps, const RunConfig& cfg) {
    std::mt19937_64 rng(cfg.seed);
    SeededBA out;
    const int h = ps.curve().h();
    for (int attempt = 0; attempt < 8; ++attempt) {
        out.e = random_e(h, rng, 0.3);
        ++out.draws;
        try {
            out.zeta = ps.zeros_of_F_e(out.e);
            out.ba = std::make_unique<BASystem>(ps, out.zeta);
            return out;
        } catch (const Error&) {
            continue;  // special/ill-placed divisor for this draw; redraw
        }
    }
    throw NonConvergence("no usable pole divisor after 8 seeded draws");
}

}  // namespace

// -------- config --------

RunConfig parse_config(std::istream& in) {
    RunConfig cfg;
    bool saw_family = false;
    std::string line, section;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        size_t hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        line = trim(line);
        if (line.empty()) continue;
        if (line.front() == '[') {
            if (line.back() != ']')
                throw ConfigError("config line " + std::to_string(lineno) + ": bad section");
            section = trim(line.substr(1, line.size() - 2));
            if (section != "curve" && section != "tolerances" && section != "grid" &&
                section != "run")
                throw ConfigError("config: unknown section [" + section + "]");
            continue;
        }
        size_t eq = line.find('=');
        if (eq == std::string::npos)
            throw ConfigError("config line " + std::to_string(lineno) + ": expected key = value");
        std::string key = trim(line.substr(0, eq));
        std::string val = trim(line.substr(eq + 1));
        if (section == "curve") {
            if (key == "family") {
                if (val != "A" && val != "B") throw ConfigError("config: family must be A or B");
                cfg.curve.family = (val == "A") ? Family::A : Family::B;
                saw_family = true;
            } else if (key == "branch") {
                cfg.curve.branch_params.clear();
                for (const auto& tok : split_ws(val))
                    cfg.curve.branch_params.push_back(parse_cplx(key, tok));
            } else {
                throw ConfigError("config: unknown key curve." + key);
            }
        } else if (section == "tolerances") {
            if (key == "residual")
                cfg.residual_tol = parse_double(key, val);
            else
                throw ConfigError("config: unknown key tolerances." + key);
        } else if (section == "grid") {
            if (key == "center_re")
                cfg.grid.center = cplx{parse_double(key, val), cfg.grid.center.imag()};
            else if (key == "center_im")
                cfg.grid.center = cplx{cfg.grid.center.real(), parse_double(key, val)};
            else if (key == "step")
                cfg.grid.step = parse_double(key, val);
            else if (key == "n")
                cfg.grid.n = static_cast<int>(parse_long(key, val));
            else
                throw ConfigError("config: unknown key grid." + key);
        } else if (section == "run") {
            if (key == "seed")
                cfg.seed = static_cast<std::uint64_t>(parse_long(key, val));
            else if (key == "verify_seeds")
                cfg.verify_seeds = static_cast<int>(parse_long(key, val));
            else if (key == "quick")
                cfg.quick = parse_bool(key, val);
            else if (key == "negative_control")
                cfg.negative_control = parse_bool(key, val);
            else if (key == "out")
                cfg.out_dir = val;
            else if (key == "stages") {
                cfg.stages = split_ws(val);
                for (const auto& s : cfg.stages)
                    if (!known_stage(s)) throw ConfigError("config: unknown stage " + s);
            } else {
                throw ConfigError("config: unknown key run." + key);
            }
        } else {
            throw ConfigError("config line " + std::to_string(lineno) + ": key outside a section");
        }
    }
    if (!saw_family) throw ConfigError("config: [curve] family is required");
    size_t want = cfg.curve.family == Family::A ? 3 : 4;
    if (cfg.curve.branch_params.size() != want)
        throw ConfigError("config: family needs " + std::to_string(want) + " branch parameters");
    if (cfg.grid.n < 3 || cfg.grid.n % 2 == 0)
        throw ConfigError("config: grid n must be odd and >= 3");
    if (cfg.grid.step <= 0.0) throw ConfigError("config: grid step must be positive");
    if (cfg.verify_seeds < 1) throw ConfigError("config: verify_seeds must be >= 1");
    return cfg;
}

RunConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file: " + path);
    return parse_config(in);
}

// -------- report plumbing --------

std::string dump_report(const Json& j) {
    std::string out;
    dump_value(j, out, 0);
    out += "\n";
    return out;
}

bool validate_report(const Json& report, const Json& schema, std::string* err) {
    return validate_node(report, schema, "report", err);
}

const char* report_schema_text() {
    return R"({
  "type": "object",
  "required": ["stage", "family", "seed", "quick", "pass", "checks", "metrics"],
  "properties": {
    "stage": {"type": "string"},
    "family": {"type": "string"},
    "seed": {"type": "integer"},
    "quick": {"type": "boolean"},
    "pass": {"type": "boolean"},
    "checks": {"type": "object", "additionalProperties": {"type": "boolean"}},
    "metrics": {"type": "object"}
  }
}
)";
}

// -------- stages --------

StageOutcome cmd_periods(const RunConfig& cfg) {
    StageOutcome out;
    Pipeline P(cfg);
    const CycleBasis& cb = P.pd.cycles;
    const int g = cb.g, h = cb.h;

    CMat lpJ = loop_period_matrix(P.C, P.pd.jac_forms, cb);
    CMat lpP = loop_period_matrix(P.C, P.pd.prym_forms, cb);
    const cplx two_pi_i{0.0, 2.0 * std::acos(-1.0)};

    double a_norm_jac = 0.0, a_norm_prym = 0.0, b_consistency = 0.0;
    for (int K = 0; K < g; ++K) {
        CVec va = combine_periods(lpJ, cb.a_cycles[static_cast<size_t>(K)]);
        CVec vb = combine_periods(lpJ, cb.b_cycles[static_cast<size_t>(K)]);
        for (int I = 0; I < g; ++I) {
            cplx want = (I == K) ? two_pi_i : cplx{0.0, 0.0};
            a_norm_jac = std::max(a_norm_jac, std::abs(va(I) - want));
            b_consistency = std::max(b_consistency, std::abs(vb(I) - P.pd.B(I, K)));
        }
    }
    // Prym normalization: oint_{a} prym_form over the curve a-cycles matches
    // the 2 pi i pattern of the sigma-adapted basis (j-cycles hit their own
    // form, the alpha/(alpha+h) pair splits the period with opposite signs
    // handled inside normalize_differentials); assert the invariant actually
    // used downstream: the Prym a-period matrix equals its stored value.
    {
        CMat ap(h, g);
        for (int K = 0; K < g; ++K)
            ap.col(K) = combine_periods(lpP, cb.a_cycles[static_cast<size_t>(K)]);
        // every entry is 0 or 2 pi i to within quadrature error
        for (int I = 0; I < h; ++I)
            for (int K = 0; K < g; ++K) {
                double d0 = std::abs(ap(I, K));
                double d1 = std::abs(ap(I, K) - two_pi_i);
                a_norm_prym = std::max(a_norm_prym, std::min(d0, d1));
            }
    }

    double b_sym = (P.pd.B - P.pd.B.transpose()).cwiseAbs().maxCoeff();
    double pi_sym = (P.pd.Pi - P.pd.Pi.transpose()).cwiseAbs().maxCoeff();
    Eigen::SelfAdjointEigenSolver<RMat> eb(RMat(0.5 * (P.pd.B.real() + P.pd.B.real().transpose())));
    Eigen::SelfAdjointEigenSolver<RMat> ep(
        RMat(0.5 * (P.pd.Pi.real() + P.pd.Pi.real().transpose())));
    double reB_max = eb.eigenvalues().maxCoeff();
    double rePi_max = ep.eigenvalues().maxCoeff();

    // sigma relations at period level, over the raw loop periods
    auto per = [&](const IVec& c) { return combine_periods(cb.loop_periods_raw, c); };
    auto sigma_of = [&](const IVec& c) { return IVec(cb.sigma_action * c); };
    double sigma_rel = 0.0;
    for (int al = 0; al < cb.g_sigma; ++al) {
        size_t a = static_cast<size_t>(al), ah = static_cast<size_t>(al + h);
        sigma_rel = std::max(sigma_rel, (per(cb.a_cycles[a]) + per(sigma_of(cb.a_cycles[ah]))).norm());
        sigma_rel = std::max(sigma_rel, (per(cb.b_cycles[a]) + per(sigma_of(cb.b_cycles[ah]))).norm());
    }
    for (int j = cb.g_sigma; j < h; ++j) {
        size_t js = static_cast<size_t>(j);
        sigma_rel = std::max(sigma_rel, (per(cb.a_cycles[js]) + per(sigma_of(cb.a_cycles[js]))).norm());
        sigma_rel = std::max(sigma_rel, (per(cb.b_cycles[js]) + per(sigma_of(cb.b_cycles[js]))).norm());
    }
    // Prym forms: sigma-odd periods over every elementary cycle class, and
    // tau-invariance integrated directly over the transformed loops
    double prym_odd = 0.0, tau_inv = 0.0;
    for (int i = 0; i < g; ++i) {
        for (const auto* set : {&cb.a_cycles, &cb.b_cycles}) {
            const IVec& c = (*set)[static_cast<size_t>(i)];
            CVec base = combine_periods(lpP, c);
            CVec via = combine_periods(lpP, sigma_of(c));
            prym_odd = std::max(prym_odd, (via + base).norm());
        }
    }
    for (size_t l = 0; l < cb.loops.size(); ++l) {
        IVec e = IVec::Zero(2 * g);
        e(static_cast<Eigen::Index>(l)) = 1;
        CVec base = combine_periods(lpP, e);
        SurfacePath tl = P.C.transform_path(cb.loops[l], InvolutionTag::Tau);
        auto v = P.C.integrate_forms(P.pd.prym_forms, tl, 1e-12);
        CVec direct = Eigen::Map<CVec>(v.data(), h);
        tau_inv = std::max(tau_inv, (direct - base).norm());
    }

    Json r = report_head("periods", cfg);
    r["checks"] = Json::object();
    r["checks"]["a_normalization_jac"] = a_norm_jac < 1e-8;
    r["checks"]["a_normalization_prym"] = a_norm_prym < 1e-8;
    r["checks"]["b_period_consistency"] = b_consistency < 1e-8;
    r["checks"]["B_symmetric"] = b_sym < 1e-8;
    r["checks"]["Pi_symmetric"] = pi_sym < 1e-8;
    r["checks"]["ReB_negative_definite"] = reB_max < 0.0;
    r["checks"]["RePi_negative_definite"] = rePi_max < 0.0;
    r["checks"]["sigma_cycle_relations"] = sigma_rel < 1e-6;
    r["checks"]["prym_periods_sigma_odd"] = prym_odd < 1e-6;
    r["checks"]["prym_periods_tau_invariant"] = tau_inv < 1e-6;
    r["metrics"] = Json::object();
    r["metrics"]["g"] = g;
    r["metrics"]["g_sigma"] = cb.g_sigma;
    r["metrics"]["h"] = h;
    r["metrics"]["k"] = P.C.k();
    r["metrics"]["a_normalization_jac"] = a_norm_jac;
    r["metrics"]["a_normalization_prym"] = a_norm_prym;
    r["metrics"]["b_period_consistency"] = b_consistency;
    r["metrics"]["B_asymmetry"] = b_sym;
    r["metrics"]["Pi_asymmetry"] = pi_sym;
    r["metrics"]["ReB_max_eigenvalue"] = reB_max;
    r["metrics"]["RePi_max_eigenvalue"] = rePi_max;
    r["metrics"]["sigma_relation_residual"] = sigma_rel;
    r["metrics"]["prym_sigma_odd_residual"] = prym_odd;
    r["metrics"]["prym_tau_invariance_residual"] = tau_inv;
    Json bm = Json::array(), pm = Json::array();
    for (int i = 0; i < g; ++i)
        for (int j = 0; j < g; ++j)
            bm.push_back(Json::array({P.pd.B(i, j).real(), P.pd.B(i, j).imag()}));
    for (int i = 0; i < h; ++i)
        for (int j = 0; j < h; ++j)
            pm.push_back(Json::array({P.pd.Pi(i, j).real(), P.pd.Pi(i, j).imag()}));
    r["metrics"]["B_row_major"] = bm;
    r["metrics"]["Pi_row_major"] = pm;
    finish(r, out);
    return out;
}

StageOutcome cmd_verify(const RunConfig& cfg) {
    StageOutcome out;
    Pipeline P(cfg);
    const int h = P.C.h();
    std::mt19937_64 rng(cfg.seed);
    const int trials = cfg.quick ? 3 : cfg.verify_seeds;

    bool vn1_all = true, vn2_all = true, counts_ok = true;
    double cor1_max = 0.0, cor2_max = 0.0, cor1_spread = 0.0;
    CVec comb_ref;
    for (int t = 0; t < trials; ++t) {
        CVec e = random_e(h, rng);
        Divisor zeta = P.ps.zeros_of_F_e(e);
        counts_ok = counts_ok && (zeta.degree() == 2 * h);
        VN1Result v1 = P.ps.check_vn1(zeta);
        vn1_all = vn1_all && v1.holds;
        cor1_max = std::max(cor1_max, std::min(v1.residual_paper, v1.residual_matched));
        if (t == 0)
            comb_ref = v1.combination;
        else
            cor1_spread = std::max(
                cor1_spread, lattice_dist(CVec(v1.combination - comb_ref), P.ps.jac_lattice()));
        cor2_max = std::max(cor2_max, P.ps.verify_cor2(e, zeta));
        VN2Result v2 = P.ps.check_vn2(zeta);
        vn2_all = vn2_all && v2.function_exists && v2.holds;
    }

    Json r = report_head("verify", cfg);
    r["checks"] = Json::object();
    r["checks"]["zero_counts"] = counts_ok;
    r["checks"]["vn1_theta_divisors"] = vn1_all;
    r["checks"]["vn2_theta_divisors"] = vn2_all;
    r["checks"]["cor1_residual"] = cor1_max < 1e-6;
    r["checks"]["cor1_constant_in_e"] = cor1_spread < 1e-6;
    r["checks"]["cor2_residual"] = cor2_max < 1e-6;
    r["metrics"] = Json::object();
    r["metrics"]["trials"] = trials;
    r["metrics"]["cor1_residual_max"] = cor1_max;
    r["metrics"]["cor1_spread"] = cor1_spread;
    r["metrics"]["cor2_residual_max"] = cor2_max;

    if (cfg.curve.family == Family::B) {
        // generic members of the VN1 function family fail VN2 (codimension k),
        // a genuine VN point exists on the family, and the defect map has
        // rank k there
        const int ftrials = cfg.quick ? 6 : 20;
        std::uniform_real_distribution<double> U(-1.5, 1.5);
        int fails = 0;
        for (int t = 0; t < ftrials; ++t) {
            CVec p(4);
            for (int i = 0; i < 4; ++i) p(i) = cplx{U(rng), U(rng)};
            p(3) += (p(3).real() >= 0 ? 0.2 : -0.2);
            VN2Result v2 = P.ps.check_vn2(P.ps.lw_family_divisor(p));
            if (!v2.holds) ++fails;
        }
        CVec p_start(4), dir(4);
        p_start << cplx{0.9, 0.0}, cplx{-1.3, 0.0}, cplx{1.37, 0.0}, cplx{0.7, 0.0};
        dir << 0.0, 0.0, 0.0, cplx{1.0, 0.0};
        CVec p_vn = P.ps.find_vn_point(p_start, dir);
        VN2Result at_vn = P.ps.check_vn2(P.ps.lw_family_divisor(p_vn));
        int rank = P.ps.vn_rank_check(p_vn);
        r["checks"]["vn2_generic_failure"] = fails >= ftrials - 2;
        r["checks"]["vn_point_found"] = at_vn.holds && at_vn.defect < 1e-6;
        r["checks"]["vn_rank_is_k"] = rank == P.C.k();
        r["metrics"]["vn2_generic_fail_count"] = fails;
        r["metrics"]["vn2_generic_trials"] = ftrials;
        r["metrics"]["vn_point_defect"] = at_vn.defect;
        r["metrics"]["vn_rank"] = rank;
        r["metrics"]["vn_point"] = cvec_json(p_vn);
    } else {
        int rank = P.ps.vn_rank_check(random_e(4, rng));
        r["checks"]["vn_rank_is_k"] = rank == P.C.k();
        r["metrics"]["vn_rank"] = rank;
    }
    finish(r, out);
    return out;
}

StageOutcome cmd_ba(const RunConfig& cfg) {
    StageOutcome out;
    Pipeline P(cfg);
    SeededBA S = make_ba(P.ps, cfg);
    const BASystem& ba = *S.ba;
    const int k = P.C.k();
    std::mt19937_64 rng(cfg.seed ^ 0x9e3779b97f4a7c15ull);

    // pairwise representation agreement at random (P, z)
    const int samples = cfg.quick ? 5 : 20;
    std::uniform_real_distribution<double> uz(-0.4, 0.4);
    double agree = 0.0;
    for (int t = 0; t < samples; ++t) {
        PointData pd = ba.eval_point(random_point(P.C, rng));
        cplx z{uz(rng), uz(rng)};
        cplx a = [&] {
            CVec c = ba.solve_c(z);
            cplx s = 0.0;
            for (int m = 0; m <= k; ++m) s += c(m) * ba.psi_char(pd, z, m);
            return s;
        }();
        cplx b = ba.psi_char(pd, z, 0);
        cplx c3 = ba.psi_two_involution(pd, z, k);
        double scale = std::max({std::abs(a), std::abs(b), std::abs(c3)});
        agree = std::max(agree, std::max(std::abs(a - b), std::abs(b - c3)) / scale);
    }

    // the matching system and condition 4 at random z
    double sum_dev = 0.0, match_dev = 0.0;
    CVec c_at0 = ba.solve_c(cplx{0.3, 0.2});
    std::optional<std::pair<PointData, PointData>> qpair;
    if (k >= 1) {
        auto pr = P.C.involutions().ramification_pairs[1];  // finite pair (Q'_1, Q''_1)
        qpair = {ba.eval_point(pr.first), ba.eval_point(pr.second)};
    }
    for (int t = 0; t < 10; ++t) {
        cplx z{uz(rng), uz(rng)};
        CVec c = ba.solve_c(z);
        cplx s = 0.0;
        for (int m = 0; m <= k; ++m) s += c(m);
        sum_dev = std::max(sum_dev, std::abs(s - 1.0));
        if (qpair) {
            cplx f1 = 0.0, f2 = 0.0;
            for (int m = 0; m <= k; ++m) {
                f1 += c(m) * ba.psi_char(qpair->first, z, m);
                f2 += c(m) * ba.psi_char(qpair->second, z, m);
            }
            match_dev = std::max(match_dev, std::abs(f1 - f2) / std::abs(f1));
        }
    }

    // path independence: append one b-cycle to a point path
    SurfacePoint probe = ba.default_probes()[0];
    PointData direct = ba.eval_point(probe);
    SurfacePath path = P.C.append_loop(
        P.C.path_to(probe), materialize_cycle(P.C, P.pd.cycles, P.pd.cycles.b_cycles[0]));
    PointData looped = ba.eval_path(path);
    cplx zp{0.27, -0.13};
    double path_dev =
        std::abs(ba.psi_char(direct, zp, 0) - ba.psi_char(looped, zp, 0)) /
        std::abs(ba.psi_char(direct, zp, 0));

    bool rejects = false;
    try {
        (void)ba.psi_two_involution(direct, zp, k + 1);
    } catch (const ConfigError&) {
        rejects = true;
    }

    Json r = report_head("ba", cfg);
    r["checks"] = Json::object();
    r["checks"]["cancellation_solved"] = ba.config().cancel_residual < 1e-8;
    r["checks"]["pole_divisor_canonical"] = ba.config().canonical_defect < 1e-6;
    r["checks"]["representations_agree"] = agree < 1e-6;
    r["checks"]["coefficients_sum_to_one"] = sum_dev < 1e-10;
    r["checks"]["branch_pair_matching"] = k == 0 || match_dev < 1e-8;
    r["checks"]["path_independent"] = path_dev < 1e-6;
    r["checks"]["rejects_m_above_k"] = rejects;
    r["metrics"] = Json::object();
    r["metrics"]["draws"] = S.draws;
    r["metrics"]["e"] = cvec_json(S.e);
    r["metrics"]["cancel_residual"] = ba.config().cancel_residual;
    r["metrics"]["canonical_defect"] = ba.config().canonical_defect;
    r["metrics"]["representation_disagreement_max"] = agree;
    r["metrics"]["coefficient_sum_deviation_max"] = sum_dev;
    r["metrics"]["branch_pair_mismatch_max"] = match_dev;
    r["metrics"]["path_dependence"] = path_dev;
    r["metrics"]["c_at_reference_z"] = cvec_json(c_at0);
    r["metrics"]["U1"] = cvec_json(ba.config().U1);
    r["metrics"]["U2"] = cvec_json(ba.config().U2);
    finish(r, out);
    return out;
}

StageOutcome cmd_schrodinger(const RunConfig& cfg) {
    StageOutcome out;
    Pipeline P(cfg);
    SeededBA S = make_ba(P.ps, cfg);
    const BASystem& ba = *S.ba;
    const int k = P.C.k();

    GridSpec grid = cfg.grid;
    if (cfg.quick) grid.n = std::min(grid.n, 11);
    std::vector<SurfacePoint> probes = ba.default_probes();

    PotentialResult pot = ba.potential_theta(grid);
    std::vector<double> rep_res;
    int excluded = 0, interior = 0;
    for (int rep = 0; rep < 3; ++rep) {
        ResidualReport rr = ba.schrodinger_residual(rep, grid, probes);
        rep_res.push_back(rr.rel_residual);
        excluded = std::max(excluded, rr.excluded);
        interior = rr.interior;
    }

    XiResult xi = ba.potential_xi(grid);
    // deviation of -dbar xi1 from the theta potential, up to one additive
    // constant fitted as the mean difference
    double xi_dev = 0.0;
    {
        CMat d = xi.u_plain - pot.u;
        cplx mean = d.sum() / static_cast<double>(d.size());
        xi_dev = (d.array() - mean).abs().maxCoeff();
    }

    // conjecture ansatz from the geometric parameters
    PointData cpd = ba.eval_point(probes[1]);
    CVec Z = (k >= 1) ? CVec(-ba.config().e[1]) : CVec(-ba.config().e_canonical);
    cplx nanC{std::nan(""), 0.0};
    ResidualReport conj = ba.conjecture_check(cpd.A, ba.config().U1, ba.config().U2,
                                              cpd.I1 - ba.config().r1, cpd.I2 - ba.config().r2,
                                              nanC, Z, grid);

    Json r = report_head("schrodinger", cfg);
    r["checks"] = Json::object();
    r["checks"]["residual_combined"] = rep_res[0] < cfg.residual_tol;
    r["checks"]["residual_two_involution"] = rep_res[1] < cfg.residual_tol;
    r["checks"]["residual_characteristic"] = rep_res[2] < cfg.residual_tol;
    r["checks"]["excluded_fraction_ok"] =
        interior > 0 && excluded <= interior / 20;
    r["checks"]["xi_potential_matches"] = xi_dev < 1e-3;
    r["checks"]["conjecture_residual"] = conj.rel_residual < cfg.residual_tol;
    r["metrics"] = Json::object();
    r["metrics"]["e"] = cvec_json(S.e);
    r["metrics"]["grid_n"] = grid.n;
    r["metrics"]["grid_step"] = grid.step;
    r["metrics"]["residual_combined"] = rep_res[0];
    r["metrics"]["residual_two_involution"] = rep_res[1];
    r["metrics"]["residual_characteristic"] = rep_res[2];
    r["metrics"]["excluded_points"] = excluded;
    r["metrics"]["interior_points"] = interior;
    r["metrics"]["potential_constant"] = Json::array({pot.C.real(), pot.C.imag()});
    r["metrics"]["potential_shift_choice"] = pot.z_choice;
    r["metrics"]["xi_variant"] = "u_plain";
    r["metrics"]["xi_deviation"] = xi_dev;
    r["metrics"]["conjecture_residual"] = conj.rel_residual;
    r["metrics"]["conjecture_fitted_C"] =
        Json::array({conj.fitted_C.real(), conj.fitted_C.imag()});

    if (cfg.negative_control && k >= 1) {
        // the matching-violating basis member against the true potential:
        // the residual must be large; the check passes when it IS large
        PointData npd = ba.eval_point(probes[0]);
        GridSpec g3 = grid;
        double worst = 0.0;
        {
            CMat psi(g3.n, g3.n);
            for (int rr2 = 0; rr2 < g3.n; ++rr2)
                for (int cc = 0; cc < g3.n; ++cc) {
                    cplx z = g3.center + g3.step * cplx(cc - g3.n / 2, g3.n / 2 - rr2);
                    psi(rr2, cc) = ba.psi_char(npd, z, 1);
                }
            double pmax = psi.cwiseAbs().maxCoeff();
            for (int rr2 = 1; rr2 + 1 < g3.n; ++rr2)
                for (int cc = 1; cc + 1 < g3.n; ++cc) {
                    std::array<std::array<cplx, 3>, 3> st;
                    for (int dr = -1; dr <= 1; ++dr)
                        for (int dc = -1; dc <= 1; ++dc)
                            st[static_cast<size_t>(dr + 1)][static_cast<size_t>(dc + 1)] =
                                psi(rr2 + dr, cc + dc);
                    cplx res = wirtinger_laplacian(st, g3.step) +
                               pot.u(rr2 - 1, cc - 1) * psi(rr2, cc);
                    worst = std::max(worst, std::abs(res) / pmax);
                }
        }
        r["checks"]["negative_control_fails_as_expected"] = worst > 1e-2;
        r["metrics"]["negative_control_flag"] = "EXPECTED-FAIL";
        r["metrics"]["negative_control_residual"] = worst;
    } else if (cfg.negative_control) {
        // k = 0: no matching condition exists to violate
        r["metrics"]["negative_control_flag"] = "NOT-APPLICABLE";
    }

    // per-grid CSV at the first probe, interior points only
    {
        PointData pd0 = ba.eval_point(probes[0]);
        CMat psi(grid.n, grid.n);
        for (int rr2 = 0; rr2 < grid.n; ++rr2)
            for (int cc = 0; cc < grid.n; ++cc) {
                cplx z = grid.center + grid.step * cplx(cc - grid.n / 2, grid.n / 2 - rr2);
                psi(rr2, cc) = ba.psi_char(pd0, z, 0);
            }
        std::string csv = "z_re,z_im,psi_re,psi_im,u_re,u_im,abs_r\n";
        char buf[256];
        for (int rr2 = 1; rr2 + 1 < grid.n; ++rr2)
            for (int cc = 1; cc + 1 < grid.n; ++cc) {
                cplx z = grid.center + grid.step * cplx(cc - grid.n / 2, grid.n / 2 - rr2);
                std::array<std::array<cplx, 3>, 3> st;
                for (int dr = -1; dr <= 1; ++dr)
                    for (int dc = -1; dc <= 1; ++dc)
                        st[static_cast<size_t>(dr + 1)][static_cast<size_t>(dc + 1)] =
                            psi(rr2 + dr, cc + dc);
                cplx u = pot.u(rr2 - 1, cc - 1);
                cplx res = wirtinger_laplacian(st, grid.step) + u * psi(rr2, cc);
                std::snprintf(buf, sizeof buf,
                              "%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g\n", z.real(),
                              z.imag(), psi(rr2, cc).real(), psi(rr2, cc).imag(), u.real(),
                              u.imag(), std::abs(res));
                csv += buf;
            }
        out.csv = std::move(csv);
    }
    finish(r, out);
    return out;
}

// -------- driver --------

int run_cli(int argc, char** argv) {
    CLI::App app{"Prym-variety / Baker-Akhiezer pipeline driver"};
    std::string config_path, stage_flag, out_flag;
    std::uint64_t seed_flag = 0;
    bool have_seed = false, quick = false;
    app.add_option("--config", config_path, "run configuration file")->required();
    app.add_option("--stage", stage_flag, "periods|verify|ba|schrodinger|all");
    auto* seed_opt = app.add_option("--seed", seed_flag, "override the config seed");
    app.add_flag("--quick", quick, "reduced trial counts, same report schema");
    app.add_option("--out", out_flag, "output directory");
    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }
    have_seed = seed_opt->count() > 0;

    RunConfig cfg;
    try {
        cfg = load_config(config_path);
        if (!stage_flag.empty()) {
            if (!known_stage(stage_flag)) throw ConfigError("unknown stage: " + stage_flag);
            cfg.stages = {stage_flag};
        }
        if (have_seed) cfg.seed = seed_flag;
        if (quick) cfg.quick = true;
        if (!out_flag.empty()) cfg.out_dir = out_flag;
        if (const char* t = std::getenv("PRYMLAB_THREADS")) {
            cfg.max_threads = static_cast<int>(parse_long("PRYMLAB_THREADS", t));
            if (cfg.max_threads < 1) throw ConfigError("PRYMLAB_THREADS must be >= 1");
        }
    } catch (const ConfigError& e) {
        std::fprintf(stderr, "config error: %s\n", e.what());
        return 2;
    }
    if (cfg.max_threads > 0) Eigen::setNbThreads(cfg.max_threads);

    std::vector<std::string> stages;
    for (const auto& s : cfg.stages) {
        if (s == "all")
            stages.insert(stages.end(), kStageNames.begin(), kStageNames.end());
        else
            stages.push_back(s);
    }

    std::error_code ec;
    std::filesystem::create_directories(cfg.out_dir, ec);
    if (ec) {
        std::fprintf(stderr, "config error: cannot create output directory %s\n",
                     cfg.out_dir.c_str());
        return 2;
    }

    const Json schema = Json::parse(report_schema_text());
    int worst = 0;
    for (const auto& stage : stages) {
        StageOutcome so;
        try {
            if (stage == "periods")
                so = cmd_periods(cfg);
            else if (stage == "verify")
                so = cmd_verify(cfg);
            else if (stage == "ba")
                so = cmd_ba(cfg);
            else
                so = cmd_schrodinger(cfg);
        } catch (const DegenerateCurve& e) {
            std::fprintf(stderr, "config error (%s): %s\n", stage.c_str(), e.what());
            return 2;
        } catch (const ConfigError& e) {
            std::fprintf(stderr, "config error (%s): %s\n", stage.c_str(), e.what());
            return 2;
        } catch (const Error& e) {
            std::fprintf(stderr, "numerical breakdown (%s): %s\n", stage.c_str(), e.what());
            return 3;
        }
        std::string err;
        if (!validate_report(so.report, schema, &err)) {
            std::fprintf(stderr, "internal error: report schema violation: %s\n", err.c_str());
            return 3;
        }
        std::ofstream js(std::filesystem::path(cfg.out_dir) / (stage + ".json"),
                         std::ios::binary);
        js << dump_report(so.report);
        if (!so.csv.empty()) {
            std::ofstream cs(std::filesystem::path(cfg.out_dir) / "schrodinger.csv",
                             std::ios::binary);
            cs << so.csv;
        }
        std::fprintf(stdout, "%s: %s\n", stage.c_str(),
                     so.exit_code == 0 ? "pass" : "FAIL");
        worst = std::max(worst, so.exit_code);
    }
    return worst;
}

}  // namespace prymlab
