///
/// \file io.hpp
///
/// Problem files (JSON) and the number formatting shared by every report.
///
/// Problem file layout:
///
///   {
///     "dimH": 2, "dimU": 2,
///     "L": [[1, 0], [0, 1]],                 // optional, dimH x dimU, row-major
///     "Gamma": [[1, 0], [0, 1]],             // optional, dimH x dimH
///     "constraint": {"type": "projector_basis", "data": [[1, 0]]},
///     "h": [1, 1],
///     "tolerances": {"sym": 1e-10}           // optional overrides
///   }
///
/// For "projector_basis" each inner array of "data" is one spanning vector;
/// for "raw" "data" is the dimH x dimH matrix itself.
///
#ifndef FINAPPROX_IO_HPP
#define FINAPPROX_IO_HPP

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>
#include <string>
#include <system_error>
#include <vector>

#include <json.hpp>

#include <finapprox/core.hpp>
#include <finapprox/hilbert.hpp>

namespace finapprox
{

using json = nlohmann::ordered_json;

/// Shortest decimal string that parses back to exactly `x`.
inline std::string format_double(double x)
{
    if (std::isnan(x))
    {
        return "nan";
    }
    if (std::isinf(x))
    {
        return x > 0 ? "inf" : "-inf";
    }
    char buf[64];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), x);
    if (ec != std::errc{})
    {
        throw Error("failed to format a double");
    }
    return std::string(buf, ptr);
}

namespace detail
{

inline std::string describe_json_type(const json& j)
{
    return j.type_name();
}

inline double get_number(const json& j, const std::string& field)
{
    if (!j.is_number())
    {
        throw InputError("field '" + field + "': expected a number, got " + describe_json_type(j));
    }
    return j.get<double>();
}

inline Vector parse_vector(const json& j, const std::string& field)
{
    if (!j.is_array())
    {
        throw InputError("field '" + field + "': expected an array, got " + describe_json_type(j));
    }
    Vector v(static_cast<Index>(j.size()));
    for (std::size_t i = 0; i < j.size(); ++i)
    {
        v(static_cast<Index>(i)) = get_number(j[i], field + "[" + std::to_string(i) + "]");
    }
    return v;
}

inline Matrix parse_matrix(const json& j, const std::string& field)
{
    if (!j.is_array())
    {
        throw InputError("field '" + field + "': expected nested arrays, got " +
                         describe_json_type(j));
    }
    const auto rows = static_cast<Index>(j.size());
    if (rows == 0)
    {
        return Matrix(0, 0);
    }
    const Vector first = parse_vector(j[0], field + "[0]");
    Matrix m(rows, first.size());
    m.row(0) = first.transpose();
    for (Index r = 1; r < rows; ++r)
    {
        const std::string rf = field + "[" + std::to_string(r) + "]";
        const Vector row = parse_vector(j[static_cast<std::size_t>(r)], rf);
        if (row.size() != m.cols())
        {
            std::ostringstream os;
            os << "field '" << rf << "': row has " << row.size() << " entries, expected "
               << m.cols();
            throw InputError(os.str());
        }
        m.row(r) = row.transpose();
    }
    return m;
}

inline json matrix_to_json(const Matrix& m)
{
    json rows = json::array();
    for (Index r = 0; r < m.rows(); ++r)
    {
        json row = json::array();
        for (Index c = 0; c < m.cols(); ++c)
        {
            row.push_back(m(r, c));
        }
        rows.push_back(std::move(row));
    }
    return rows;
}

inline std::size_t line_of_offset(const std::string& text, std::size_t offset)
{
    std::size_t line = 1;
    for (std::size_t i = 0; i < offset && i < text.size(); ++i)
    {
        line += text[i] == '\n';
    }
    return line;
}

} // namespace detail

inline json vector_to_json(const Vector& v)
{
    json a = json::array();
    for (Index i = 0; i < v.size(); ++i)
    {
        a.push_back(v(i));
    }
    return a;
}

inline Index get_dimension(const json& doc, const char* key)
{
    if (!doc.contains(key))
    {
        throw InputError(std::string("field '") + key + "' is missing");
    }
    const json& j = doc[key];
    if (!j.is_number_integer() || j.get<long long>() <= 0)
    {
        throw InputError(std::string("field '") + key + "': expected a positive integer");
    }
    return static_cast<Index>(j.get<long long>());
}

/// Parse problem-file text into unvalidated ProblemData.
inline ProblemData parse_problem(const std::string& text)
{
    json doc;
    try
    {
        doc = json::parse(text);
    }
    catch (const json::parse_error& e)
    {
        std::ostringstream os;
        os << "malformed problem file at line " << detail::line_of_offset(text, e.byte) << ": "
           << e.what();
        throw InputError(os.str());
    }
    if (!doc.is_object())
    {
        throw InputError("problem file must contain a JSON object");
    }

    ProblemData data;
    data.dim_h = get_dimension(doc, "dimH");
    data.dim_u = get_dimension(doc, "dimU");

    if (doc.contains("tolerances"))
    {
        const json& t = doc["tolerances"];
        if (!t.is_object())
        {
            throw InputError("field 'tolerances': expected an object");
        }
        for (auto it = t.begin(); it != t.end(); ++it)
        {
            const std::string f = "tolerances." + it.key();
            const double v = detail::get_number(it.value(), f);
            if (!(v > 0.0))
            {
                throw InputError("field '" + f + "': must be positive");
            }
            auto& tol = data.tol;
            if (it.key() == "ortho") tol.ortho = v;
            else if (it.key() == "proj") tol.proj = v;
            else if (it.key() == "sym") tol.sym = v;
            else if (it.key() == "psd") tol.psd = v;
            else if (it.key() == "gram") tol.gram = v;
            else if (it.key() == "rank") tol.rank = v;
            else if (it.key() == "singular") tol.singular = v;
            else if (it.key() == "identity") tol.identity = v;
            else if (it.key() == "decision") tol.decision = v;
            else if (it.key() == "oracle") tol.oracle = v;
            else throw InputError("field '" + f + "': unknown tolerance");
        }
    }

    if (doc.contains("L"))
    {
        data.L = detail::parse_matrix(doc["L"], "L");
        if (data.L->rows() == 0)
        {
            throw InputError("field 'L': empty matrix");
        }
    }
    if (doc.contains("Gamma"))
    {
        data.gamma = detail::parse_matrix(doc["Gamma"], "Gamma");
        if (data.gamma->rows() == 0)
        {
            throw InputError("field 'Gamma': empty matrix");
        }
    }
    if (!doc.contains("h"))
    {
        throw InputError("field 'h' is missing");
    }
    data.h = detail::parse_vector(doc["h"], "h");

    if (!doc.contains("constraint"))
    {
        throw InputError("field 'constraint' is missing");
    }
    const json& c = doc["constraint"];
    if (!c.is_object() || !c.contains("type") || !c["type"].is_string() || !c.contains("data"))
    {
        throw InputError("field 'constraint': expected {\"type\": ..., \"data\": ...}");
    }
    const std::string type = c["type"].get<std::string>();
    if (type == "projector_basis")
    {
        if (!c["data"].is_array())
        {
            throw InputError("field 'constraint.data': expected an array of vectors");
        }
        std::vector<Vector> vs;
        for (std::size_t i = 0; i < c["data"].size(); ++i)
        {
            const std::string f = "constraint.data[" + std::to_string(i) + "]";
            vs.push_back(detail::parse_vector(c["data"][i], f));
            if (vs.back().size() != *data.dim_h)
            {
                throw InputError("field '" + f + "': vector length does not match dimH");
            }
        }
        data.constraint = ConstraintMap::projector(make_projector(*data.dim_h, vs, data.tol.ortho));
    }
    else if (type == "raw")
    {
        Matrix m = detail::parse_matrix(c["data"], "constraint.data");
        if (m.rows() != m.cols())
        {
            throw InputError("field 'constraint.data': raw map must be square");
        }
        data.constraint = ConstraintMap::raw(std::move(m), data.tol.proj);
    }
    else
    {
        throw InputError("field 'constraint.type': unknown type '" + type +
                         "' (projector_basis | raw)");
    }
    return data;
}

inline ProblemData load_problem_file(const std::string& path)
{
    std::ifstream in(path);
    if (!in)
    {
        throw InputError("cannot read problem file '" + path + "'");
    }
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_problem(ss.str());
}

/// Problem-file JSON for a validated instance. When L is known only L is
/// written (Gamma is recomputed bit-identically on load).
inline json problem_to_json(const ProblemInstance& p)
{
    json doc;
    doc["dimH"] = p.dim_h();
    doc["dimU"] = p.dim_u();
    if (p.L())
    {
        doc["L"] = detail::matrix_to_json(*p.L());
    }
    else
    {
        doc["Gamma"] = detail::matrix_to_json(p.gamma());
    }
    json c;
    if (const auto& proj = p.constraint().as_projector())
    {
        c["type"] = "projector_basis";
        c["data"] = detail::matrix_to_json(proj->basis().transpose());
    }
    else
    {
        c["type"] = "raw";
        c["data"] = detail::matrix_to_json(p.constraint().map());
    }
    doc["constraint"] = std::move(c);
    doc["h"] = vector_to_json(p.h());
    const Tolerances& t = p.tolerances();
    doc["tolerances"] = {{"ortho", t.ortho},       {"proj", t.proj},
                         {"sym", t.sym},           {"psd", t.psd},
                         {"gram", t.gram},         {"rank", t.rank},
                         {"singular", t.singular}, {"identity", t.identity},
                         {"decision", t.decision}, {"oracle", t.oracle}};
    return doc;
}

} // namespace finapprox

#endif /* FINAPPROX_IO_HPP */
