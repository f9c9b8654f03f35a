#pragma once

#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <utility>

#include <json.hpp>

#include "cpxapprox/norms.hpp"
#include "cpxapprox/projections.hpp"

namespace cpx {

// Instance files are JSON with complex entries written as two-element arrays
// [re, im].  Matrices are arrays of columns.  The subspace may be given either
// by a "span" (basis columns) or a "kernel" (annihilating functional columns).
struct InstanceFile {
    Eigen::Index dimension = 0;
    NormHandle norm;
    std::optional<Subspace> subspace;
    std::optional<Vector> x;
    std::optional<Vector> y0;
    std::optional<std::pair<Matrix, Matrix>> projection;  // (g, w)
    // remembers which subspace representation the file used, so that
    // serialization round-trips byte-comparable structure
    bool subspace_by_kernel = false;
};

namespace iojson {

using nlohmann::json;

inline Complex parse_complex(const json& j, const std::string& where) {
    if (!j.is_array() || j.size() != 2 || !j[0].is_number() || !j[1].is_number())
        throw ValidationError(where + ": complex entries must be [re, im] number pairs");
    return Complex(j[0].get<double>(), j[1].get<double>());
}

inline Vector parse_vector(const json& j, const std::string& where) {
    if (!j.is_array()) throw ValidationError(where + ": expected an array of complex entries");
    Vector v(static_cast<Eigen::Index>(j.size()));
    for (std::size_t i = 0; i < j.size(); ++i)
        v[static_cast<Eigen::Index>(i)] =
            parse_complex(j[i], where + "[" + std::to_string(i) + "]");
    return v;
}

inline Matrix parse_matrix(const json& j, const std::string& where) {
    if (!j.is_array() || j.empty())
        throw ValidationError(where + ": expected a non-empty array of columns");
    std::vector<Vector> cols;
    for (std::size_t i = 0; i < j.size(); ++i)
        cols.push_back(parse_vector(j[i], where + "[" + std::to_string(i) + "]"));
    Matrix m(cols[0].size(), static_cast<Eigen::Index>(cols.size()));
    for (std::size_t i = 0; i < cols.size(); ++i) {
        if (cols[i].size() != m.rows())
            throw ValidationError(where + ": columns have inconsistent lengths");
        m.col(static_cast<Eigen::Index>(i)) = cols[i];
    }
    return m;
}

inline json dump_complex(Complex c) { return json::array({c.real(), c.imag()}); }

inline json dump_vector(const Vector& v) {
    json j = json::array();
    for (Eigen::Index i = 0; i < v.size(); ++i) j.push_back(dump_complex(v[i]));
    return j;
}

inline json dump_matrix(const Matrix& m) {
    json j = json::array();
    for (Eigen::Index c = 0; c < m.cols(); ++c) j.push_back(dump_vector(m.col(c)));
    return j;
}

}  // namespace iojson

inline InstanceFile instance_from_json(const nlohmann::json& doc) {
    using iojson::parse_matrix;
    using iojson::parse_vector;
    if (!doc.is_object()) throw ValidationError("instance: top level must be an object");
    InstanceFile inst;

    if (!doc.contains("dimension") || !doc["dimension"].is_number_integer())
        throw ValidationError("dimension: required integer field");
    inst.dimension = doc["dimension"].get<Eigen::Index>();
    if (inst.dimension <= 0) throw ValidationError("dimension: must be positive");

    if (!doc.contains("norm") || !doc["norm"].is_object())
        throw ValidationError("norm: required object field");
    const auto& jn = doc["norm"];
    if (!jn.contains("kind") || !jn["kind"].is_string())
        throw ValidationError("norm.kind: required string field");
    std::string kind = jn["kind"].get<std::string>();
    if (kind == "vertices" || kind == "facets") {
        if (!jn.contains("data"))
            throw ValidationError("norm.data: required for kind '" + kind + "'");
        Matrix G = parse_matrix(jn["data"], "norm.data");
        if (G.rows() != inst.dimension)
            throw ValidationError("norm.data: column length must equal 'dimension'");
        try {
            inst.norm = (kind == "vertices") ? NormHandle::vertex(G) : NormHandle::facet(G);
        } catch (const ValidationError&) {
            throw ValidationError("norm.data: " + kind + " do not span");
        }
    } else if (kind == "lp") {
        if (!jn.contains("p") || !jn["p"].is_number())
            throw ValidationError("norm.p: required number for kind 'lp'");
        inst.norm = NormHandle::lp(jn["p"].get<double>(), inst.dimension);
    } else {
        throw ValidationError("norm.kind: must be 'vertices', 'facets', or 'lp'");
    }

    if (doc.contains("subspace")) {
        const auto& js = doc["subspace"];
        if (!js.is_object() || (js.contains("span") == js.contains("kernel")))
            throw ValidationError("subspace: give exactly one of 'span' or 'kernel'");
        if (js.contains("span")) {
            Matrix B = parse_matrix(js["span"], "subspace.span");
            if (B.rows() != inst.dimension)
                throw ValidationError("subspace.span: column length must equal 'dimension'");
            inst.subspace = Subspace::from_span(B);
        } else {
            Matrix K = parse_matrix(js["kernel"], "subspace.kernel");
            if (K.rows() != inst.dimension)
                throw ValidationError("subspace.kernel: column length must equal 'dimension'");
            inst.subspace = Subspace::from_kernel(K, inst.dimension);
            inst.subspace_by_kernel = true;
        }
    }

    if (doc.contains("x")) {
        inst.x = parse_vector(doc["x"], "x");
        if (inst.x->size() != inst.dimension)
            throw ValidationError("x: length must equal 'dimension'");
    }
    if (doc.contains("y0")) {
        inst.y0 = parse_vector(doc["y0"], "y0");
        if (inst.y0->size() != inst.dimension)
            throw ValidationError("y0: length must equal 'dimension'");
    }
    if (doc.contains("projection")) {
        const auto& jp = doc["projection"];
        if (!jp.is_object() || !jp.contains("g") || !jp.contains("w"))
            throw ValidationError("projection: must contain 'g' and 'w'");
        Matrix g = parse_matrix(jp["g"], "projection.g");
        Matrix w = parse_matrix(jp["w"], "projection.w");
        if (g.rows() != inst.dimension || w.rows() != inst.dimension)
            throw ValidationError("projection.g, projection.w: column length must equal 'dimension'");
        if (g.cols() != w.cols())
            throw ValidationError("projection.g, projection.w: column counts must match");
        inst.projection = std::make_pair(std::move(g), std::move(w));
    }
    return inst;
}

inline nlohmann::json instance_to_json(const InstanceFile& inst) {
    using iojson::dump_matrix;
    using iojson::dump_vector;
    nlohmann::json doc;
    doc["dimension"] = inst.dimension;
    nlohmann::json jn;
    switch (inst.norm.kind()) {
        case NormKind::Vertex:
            jn["kind"] = "vertices";
            jn["data"] = dump_matrix(inst.norm.generators());
            break;
        case NormKind::Facet:
            jn["kind"] = "facets";
            jn["data"] = dump_matrix(inst.norm.generators());
            break;
        case NormKind::Lp:
            jn["kind"] = "lp";
            jn["p"] = inst.norm.p();
            break;
    }
    doc["norm"] = jn;
    if (inst.subspace) {
        if (inst.subspace_by_kernel)
            doc["subspace"] = {{"kernel", dump_matrix(inst.subspace->kernel())}};
        else
            doc["subspace"] = {{"span", dump_matrix(inst.subspace->span())}};
    }
    if (inst.x) doc["x"] = dump_vector(*inst.x);
    if (inst.y0) doc["y0"] = dump_vector(*inst.y0);
    if (inst.projection) {
        doc["projection"] = {{"g", iojson::dump_matrix(inst.projection->first)},
                             {"w", iojson::dump_matrix(inst.projection->second)}};
    }
    return doc;
}

inline InstanceFile parse_instance_text(const std::string& text) {
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        std::size_t line = 1, col = 1;
        for (std::size_t i = 0; i + 1 < e.byte && i < text.size(); ++i) {
            if (text[i] == '\n') {
                ++line;
                col = 1;
            } else {
                ++col;
            }
        }
        std::ostringstream os;
        os << "line " << line << ", column " << col << ": " << e.what();
        throw ParseError(os.str());
    }
    return instance_from_json(doc);
}

inline InstanceFile parse_instance(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ParseError("cannot open instance file: " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_instance_text(buf.str());
}

inline std::string serialize_instance(const InstanceFile& inst) {
    return instance_to_json(inst).dump(2);
}

}  // namespace cpx
