#include "fairmars/basis.hpp"

#include <cstdio>
#include <stdexcept>

#include "fairmars/dataset.hpp"

namespace fairmars {

bool BasisFunction::uses_variable(int v) const {
    for (const auto& t : terms)
        if (t.variable == v) return true;
    return false;
}

double eval_hinge(double x, const HingeTerm& term) {
    if (term.linear) return x;
    const double u = (term.direction == HingeDirection::plus) ? x - term.knot : term.knot - x;
    return u > 0.0 ? u : 0.0;
}

double eval_basis(std::span<const double> x_row, const BasisFunction& b) {
    double prod = 1.0;
    for (const auto& t : b.terms) prod *= eval_hinge(x_row[static_cast<size_t>(t.variable)], t);
    return prod;
}

std::vector<double> design_column(const Dataset& ds, const BasisFunction& b) {
    const size_t n = static_cast<size_t>(ds.num_rows());
    std::vector<double> col(n, 1.0);
    for (const auto& t : b.terms) {
        auto x = ds.column(t.variable);
        for (size_t i = 0; i < n; ++i) col[i] *= eval_hinge(x[i], t);
    }
    return col;
}

double hinge_difference_identity(double x, double k, double u) {
    if (!(k < u)) throw std::invalid_argument("hinge_difference_identity: requires k < u");
    if (x <= k) return 0.0;
    if (x < u) return x - k;
    return u - k;
}

std::string format_knot(double knot) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.6g", knot);
    return buf;
}

std::string render_term(const HingeTerm& term, const std::vector<std::string>& column_names) {
    const auto& name = column_names.at(static_cast<size_t>(term.variable));
    if (term.linear) return name;
    if (term.direction == HingeDirection::plus) return "h(" + name + "-" + format_knot(term.knot) + ")";
    return "h(" + format_knot(term.knot) + "-" + name + ")";
}

std::string render_basis(const BasisFunction& b, const std::vector<std::string>& column_names) {
    if (b.is_intercept()) return "Intercept";
    std::string out;
    for (size_t i = 0; i < b.terms.size(); ++i) {
        if (i > 0) out += "*";
        out += render_term(b.terms[i], column_names);
    }
    return out;
}

} // namespace fairmars
